//! Dense linear algebra substrate.

mod matrix;
mod svd;
mod vector;

pub use matrix::DenseMatrix;
pub use svd::{
    gaussian_start, singular_values, spectral_norm_sq, svd, truncated_svd_exact,
    truncated_svd_power, truncated_svd_power_from, SvdFactors,
};
pub use vector::DenseVector;

pub(crate) use vector::dot;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The deterministic generator used throughout the crate.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
