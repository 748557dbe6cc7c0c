//! Uploaded photos, decoded once and kept in memory.

use std::collections::HashMap;
use std::io::Cursor;
use std::sync::{Arc, RwLock};

use image::{ImageFormat, ImageReader, RgbImage};

use crate::error::{GalleryError, Result};

pub const MAX_PIXELS: u64 = 16_000_000;

#[derive(Debug)]
pub struct StoredImage {
    pub id: String,
    pub pixels: RgbImage,
}

impl StoredImage {
    pub fn width(&self) -> u32 {
        self.pixels.width()
    }

    pub fn height(&self) -> u32 {
        self.pixels.height()
    }

    pub fn to_png(&self) -> Vec<u8> {
        let mut out = Cursor::new(Vec::new());
        self.pixels.write_to(&mut out, ImageFormat::Png).expect("PNG encoding to memory");
        out.into_inner()
    }
}

/// Decodes a PNG or JPEG upload to 8-bit RGB.
pub fn decode_upload(bytes: &[u8]) -> Result<RgbImage> {
    let reader = ImageReader::new(Cursor::new(bytes))
        .with_guessed_format()
        .map_err(|e| GalleryError::Malformed(format!("unreadable image: {e}")))?;
    match reader.format() {
        Some(ImageFormat::Png | ImageFormat::Jpeg) => {}
        _ => return Err(GalleryError::Malformed("only PNG and JPEG images are accepted".into())),
    }
    let (w, h) = reader
        .into_dimensions()
        .map_err(|e| GalleryError::Malformed(format!("unreadable image header: {e}")))?;
    if w == 0 || h == 0 {
        return Err(GalleryError::Malformed("image has no pixels".into()));
    }
    if u64::from(w) * u64::from(h) > MAX_PIXELS {
        return Err(GalleryError::TooLarge(format!("{w}x{h} exceeds {MAX_PIXELS} pixels")));
    }
    let img = image::load_from_memory(bytes).map_err(|e| GalleryError::Malformed(format!("undecodable image: {e}")))?;
    Ok(img.to_rgb8())
}

#[derive(Debug, Default)]
pub struct ImageStore {
    images: RwLock<HashMap<String, Arc<StoredImage>>>,
}

impl ImageStore {
    pub fn insert(&self, pixels: RgbImage) -> Arc<StoredImage> {
        let image = Arc::new(StoredImage { id: uuid::Uuid::new_v4().to_string(), pixels });
        self.images.write().expect("image store lock").insert(image.id.clone(), image.clone());
        image
    }

    pub fn get(&self, id: &str) -> Result<Arc<StoredImage>> {
        self.images
            .read()
            .expect("image store lock")
            .get(id)
            .cloned()
            .ok_or_else(|| GalleryError::NotFound(format!("image {id}")))
    }

    pub fn contains(&self, id: &str) -> bool {
        self.images.read().expect("image store lock").contains_key(id)
    }
}
