use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::SymbolBlock;

/// Total complex noise variance for unit-energy symbols at `snr_db` (Es/N0).
pub fn noise_variance(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

/// Adds circular Gaussian noise; `snr_db = +inf` passes the block through.
pub fn awgn<R: Rng + ?Sized>(block: &SymbolBlock, snr_db: f64, rng: &mut R) -> SymbolBlock {
    if snr_db == f64::INFINITY {
        return block.clone();
    }
    let sigma = (noise_variance(snr_db) / 2.0).sqrt();
    SymbolBlock(
        block
            .0
            .iter()
            .map(|s| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                s + num_complex::Complex64::new(re * sigma, im * sigma)
            })
            .collect(),
    )
}

pub fn awgn_seeded(block: &SymbolBlock, snr_db: f64, seed: u64) -> SymbolBlock {
    awgn(block, snr_db, &mut ChaCha8Rng::seed_from_u64(seed))
}
