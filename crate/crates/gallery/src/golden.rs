//! Reference vectors that client implementations of the enhancement are
//! checked against.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::enhance::{apply_enhancement, EnhanceParams, PARAM_COUNT};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldenVector {
    pub params: EnhanceParams,
    /// 8-bit input pixel.
    pub input: [u8; 3],
    /// Exact output in `[0, 1]`.
    pub output: [f64; 3],
    /// `round(255 · output)`.
    pub output8: [u8; 3],
}

/// `count` vectors: the first few cover neutral parameters and single-knob
/// extremes, the rest are uniformly random.
pub fn golden_vectors(count: usize, seed: u64) -> Vec<GoldenVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = vec![EnhanceParams::NEUTRAL];
    for k in 0..PARAM_COUNT {
        for extreme in [0.0, 1.0] {
            let mut v = EnhanceParams::NEUTRAL.to_vec();
            v[k] = extreme;
            params.push(EnhanceParams::from_slice(&v).expect("in range"));
        }
    }
    let mut out = Vec::with_capacity(count);
    for n in 0..count {
        let p = match params.get(n) {
            Some(p) => *p,
            None => {
                let v: Vec<f64> = (0..PARAM_COUNT).map(|_| rng.random()).collect();
                EnhanceParams::from_slice(&v).expect("in range")
            }
        };
        let input: [u8; 3] = rng.random();
        let output = apply_enhancement(input.map(|c| f64::from(c) / 255.0), &p).expect("valid inputs");
        out.push(GoldenVector { params: p, input, output, output8: output.map(|c| (c * 255.0).round() as u8) });
    }
    out
}
