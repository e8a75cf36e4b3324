//! Seed derivation and Gaussian sampling.
//!
//! Every logical stream (a column of a measurement ensemble, a ground-truth
//! factor, a rotation generator) draws from its own counter-derived seed, so
//! generation order and worker count never change the output.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Stream tags keep unrelated generators from colliding on the same seed.
pub mod stream {
    pub const USTAR: u64 = 1;
    pub const BTILDE: u64 = 2;
    pub const MEASUREMENT: u64 = 3;
    pub const ROTATION: u64 = 4;
    pub const TRIAL: u64 = 5;
    pub const COEFF: u64 = 6;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut x = z;
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Derive an independent seed for stream `(tag, index)` under `root`.
pub fn derive_seed(root: u64, tag: u64, index: u64) -> u64 {
    splitmix64(root ^ splitmix64(tag.wrapping_mul(0xA076_1D64_78BD_642F) ^ splitmix64(index)))
}

/// RNG for stream `(tag, index)` under `root`.
pub fn stream_rng(root: u64, tag: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(root, tag, index))
}

/// i.i.d. standard-normal matrix, filled column by column.
pub fn gaussian_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// i.i.d. standard-normal vector.
pub fn gaussian_vector(rng: &mut impl Rng, len: usize) -> DVector<f64> {
    DVector::from_fn(len, |_, _| rng.sample(StandardNormal))
}
