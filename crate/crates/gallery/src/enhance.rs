//! The 12-parameter color enhancement shared by the service and its clients.
//!
//! Parameters live in `[0, 1]` and are neutral at `0.5`. The order is
//! brightness, contrast, saturation, then the color balance row-major by
//! region (shadows, midtones, highlights) and channel (R, G, B).

use image::RgbImage;
use serde::{Deserialize, Serialize};

use crate::error::{GalleryError, Result};

pub const PARAM_COUNT: usize = 12;

const BRIGHTNESS_GAIN: f64 = 0.6;
const BALANCE_GAIN: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnhanceParams {
    pub brightness: f64,
    pub contrast: f64,
    pub saturation: f64,
    /// `balance[region][channel]`
    pub balance: [[f64; 3]; 3],
}

impl Default for EnhanceParams {
    fn default() -> Self {
        Self::NEUTRAL
    }
}

impl EnhanceParams {
    pub const NEUTRAL: Self = Self { brightness: 0.5, contrast: 0.5, saturation: 0.5, balance: [[0.5; 3]; 3] };

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        if v.len() != PARAM_COUNT {
            return Err(GalleryError::Malformed(format!("expected {PARAM_COUNT} parameters, got {}", v.len())));
        }
        let mut balance = [[0.0; 3]; 3];
        for (k, b) in v[3..].iter().enumerate() {
            balance[k / 3][k % 3] = *b;
        }
        let p = Self { brightness: v[0], contrast: v[1], saturation: v[2], balance };
        p.validate()?;
        Ok(p)
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = vec![self.brightness, self.contrast, self.saturation];
        v.extend(self.balance.iter().flatten());
        v
    }

    pub fn validate(&self) -> Result<()> {
        if self.to_vec().iter().all(|x| (0.0..=1.0).contains(x)) {
            Ok(())
        } else {
            Err(GalleryError::Malformed("enhancement parameters must lie in [0, 1]".into()))
        }
    }
}

fn luminance(c: &[f64; 3]) -> f64 {
    0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2]
}

/// Applies the enhancement to one pixel with channels in `[0, 1]`.
///
/// Each stage is skipped when its parameters are neutral, so neutral
/// parameters are the exact identity.
pub fn apply_enhancement(rgb: [f64; 3], p: &EnhanceParams) -> Result<[f64; 3]> {
    if !rgb.iter().all(|x| (0.0..=1.0).contains(x)) {
        return Err(GalleryError::Malformed(format!("pixel {rgb:?} outside [0, 1]")));
    }
    p.validate()?;
    let mut c = rgb;

    if p.brightness != 0.5 {
        let shift = BRIGHTNESS_GAIN * (p.brightness - 0.5);
        c.iter_mut().for_each(|x| *x += shift);
    }
    let contrast = (2.0 * (p.contrast - 0.5)).exp2();
    if contrast != 1.0 {
        c.iter_mut().for_each(|x| *x = 0.5 + (*x - 0.5) * contrast);
    }
    let saturation = (2.0 * (p.saturation - 0.5)).exp2();
    if saturation != 1.0 {
        let l = luminance(&c);
        c.iter_mut().for_each(|x| *x = l + (*x - l) * saturation);
    }
    if p.balance.iter().flatten().any(|&b| b != 0.5) {
        let l = luminance(&c);
        let w = [(1.0 - l) * (1.0 - l), 2.0 * l * (1.0 - l), l * l];
        for (ch, x) in c.iter_mut().enumerate() {
            let shift: f64 = (0..3).map(|r| w[r] * (p.balance[r][ch] - 0.5)).sum();
            *x += BALANCE_GAIN * shift;
        }
    }
    Ok(c.map(|x| x.clamp(0.0, 1.0)))
}

/// 8-bit wrapper: channels are divided by 255 and the result rounded back.
pub fn enhance_pixel8(rgb: [u8; 3], p: &EnhanceParams) -> Result<[u8; 3]> {
    let out = apply_enhancement(rgb.map(|v| f64::from(v) / 255.0), p)?;
    Ok(out.map(|v| (v * 255.0).round() as u8))
}

/// Server-side reference renderer.
pub fn render(image: &RgbImage, p: &EnhanceParams) -> Result<RgbImage> {
    p.validate()?;
    let mut out = image.clone();
    for px in out.pixels_mut() {
        px.0 = enhance_pixel8(px.0, p)?;
    }
    Ok(out)
}
