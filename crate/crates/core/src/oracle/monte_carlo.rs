//! Seeded Monte Carlo estimates of `β(x, w)`.
//!
//! Samples are produced in fixed-size chunks; chunk `c` draws from a ChaCha8 stream seeded with
//! the user seed and positioned on stream `c`. Chunks are independent of one another and of the
//! thread that evaluates them, and counts are combined with integer addition, so the result is
//! identical for any scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::{CdfEstimate, CdfMethod};
use crate::error::{Error, Result};
use crate::model::WeightVector;

pub const MC_CHUNK: u64 = 1 << 14;
/// Default number of standard errors reported as the Monte Carlo error bound.
pub const MC_SIGMAS: f64 = 3.0;
const MIN_SAMPLES: u64 = 1000;

fn chunks(n_samples: u64) -> impl IndexedParallelIterator<Item = (u64, u64)> {
    let count = n_samples.div_ceil(MC_CHUNK) as usize;
    (0..count).into_par_iter().map(move |c| {
        let c = c as u64;
        let start = c * MC_CHUNK;
        (c, MC_CHUNK.min(n_samples - start))
    })
}

fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

#[inline]
fn draw(rng: &mut ChaCha8Rng, w: &[f64]) -> f64 {
    w.iter()
        .map(|&wi| {
            let z: f64 = StandardNormal.sample(rng);
            wi * z * z
        })
        .sum()
}

fn check_samples(n_samples: u64) -> Result<()> {
    if n_samples < MIN_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "at least {MIN_SAMPLES} Monte Carlo samples are required (got {n_samples})"
        )));
    }
    Ok(())
}

fn estimate(x: f64, hits: u64, n_samples: u64, seed: u64, sigmas: f64) -> CdfEstimate {
    let p = hits as f64 / n_samples as f64;
    CdfEstimate {
        x,
        value: p,
        error_bound: sigmas * (p * (1.0 - p) / n_samples as f64).sqrt(),
        method: CdfMethod::MonteCarlo,
        n_samples: Some(n_samples),
        seed: Some(seed),
        sigmas: Some(sigmas),
    }
}

/// Fraction of `n_samples` simulated values of `Σ wᵢ ξᵢ²` below `x`, with a 3σ error bound.
pub fn beta_cdf_mc(w: &WeightVector, x: f64, n_samples: u64, seed: u64) -> Result<CdfEstimate> {
    beta_cdf_mc_sigmas(w, x, n_samples, seed, MC_SIGMAS)
}

/// As [`beta_cdf_mc`] with the error bound set to `sigmas` standard errors.
pub fn beta_cdf_mc_sigmas(
    w: &WeightVector,
    x: f64,
    n_samples: u64,
    seed: u64,
    sigmas: f64,
) -> Result<CdfEstimate> {
    check_samples(n_samples)?;
    let weights = w.positive_weights();
    let hits: u64 = chunks(n_samples)
        .map(|(c, len)| {
            let mut rng = chunk_rng(seed, c);
            (0..len).filter(|_| draw(&mut rng, weights) < x).count() as u64
        })
        .sum();
    Ok(estimate(x, hits, n_samples, seed, sigmas))
}

/// A sorted Monte Carlo sample of `Σ wᵢ ξᵢ²` that answers CDF queries at any `x`.
///
/// Uses the same chunked streams as [`beta_cdf_mc`], so `EmpiricalCdf::draw(w, n, s).estimate(x)`
/// equals `beta_cdf_mc(w, x, n, s)` exactly.
#[derive(Debug, Clone)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
    seed: u64,
}

impl EmpiricalCdf {
    pub fn draw(w: &WeightVector, n_samples: u64, seed: u64) -> Result<Self> {
        check_samples(n_samples)?;
        let weights = w.positive_weights();
        let mut sorted: Vec<f64> = chunks(n_samples)
            .flat_map_iter(|(c, len)| {
                let mut rng = chunk_rng(seed, c);
                (0..len).map(move |_| draw(&mut rng, weights))
            })
            .collect();
        sorted.sort_unstable_by(f64::total_cmp);
        Ok(Self { sorted, seed })
    }

    pub fn n_samples(&self) -> u64 {
        self.sorted.len() as u64
    }

    pub fn estimate(&self, x: f64) -> CdfEstimate {
        self.estimate_sigmas(x, MC_SIGMAS)
    }

    pub fn estimate_sigmas(&self, x: f64, sigmas: f64) -> CdfEstimate {
        let hits = self.sorted.partition_point(|&q| q < x) as u64;
        estimate(x, hits, self.n_samples(), self.seed, sigmas)
    }
}
