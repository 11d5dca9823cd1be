use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::field::{derive_seed, rng_from_seed};

/// Draws per independently seeded chunk; fixes the stream layout so the
/// estimate does not depend on the thread count.
const CHUNK: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrthantEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: u64,
}

fn prepare(m: &DMatrix<f64>, u: &[f64], samples: u64) -> Result<DMatrix<f64>> {
    if m.nrows() == 0 || m.nrows() != m.ncols() || u.len() != m.nrows() {
        return Err(invalid("need a square covariance matching the level vector"));
    }
    if samples == 0 {
        return Err(invalid("need at least one sample"));
    }
    Ok(m.clone().cholesky().ok_or(Error::NotPositiveDefinite)?.l())
}

fn chunks(samples: u64) -> Vec<(u64, u64)> {
    (0..samples.div_ceil(CHUNK)).map(|c| (c, CHUNK.min(samples - c * CHUNK))).collect()
}

fn draw(rng: &mut impl Rng, l: &DMatrix<f64>, z: &mut DVector<f64>) -> DVector<f64> {
    for x in z.iter_mut() {
        *x = rng.sample(StandardNormal);
    }
    l * &*z
}

/// Plain Monte Carlo estimate of `P{Y ≥ u}` for `Y ~ N(0, m)`.
pub fn orthant_probability(m: &DMatrix<f64>, u: &[f64], samples: u64, seed: u64) -> Result<OrthantEstimate> {
    let l = prepare(m, u, samples)?;
    let dim = u.len();
    let hits: u64 = chunks(samples)
        .par_iter()
        .map(|&(c, len)| {
            let mut rng = rng_from_seed(derive_seed(seed, c));
            let mut z = DVector::zeros(dim);
            (0..len).filter(|_| draw(&mut rng, &l, &mut z).iter().zip(u).all(|(y, t)| y >= t)).count() as u64
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum();
    let p = hits as f64 / samples as f64;
    Ok(OrthantEstimate { estimate: p, std_error: (p * (1.0 - p) / samples as f64).sqrt(), samples })
}

/// Estimate of `P{Y ≥ u}` drawing `Y` around `u` and reweighting by the
/// likelihood ratio `exp(-u m^{-1} (y - u)ᵀ - u m^{-1} uᵀ / 2)`; resolves
/// probabilities far below `1 / samples`.
pub fn orthant_probability_shifted(m: &DMatrix<f64>, u: &[f64], samples: u64, seed: u64) -> Result<OrthantEstimate> {
    let l = prepare(m, u, samples)?;
    let dim = u.len();
    let uv = DVector::from_column_slice(u);
    let delta = m.clone().cholesky().ok_or(Error::NotPositiveDefinite)?.solve(&uv);
    let half_q = 0.5 * uv.dot(&delta);
    let sums: Vec<(f64, f64)> = chunks(samples)
        .par_iter()
        .map(|&(c, len)| {
            let mut rng = rng_from_seed(derive_seed(seed, c));
            let mut z = DVector::zeros(dim);
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..len {
                let x = draw(&mut rng, &l, &mut z);
                if x.iter().all(|&v| v >= 0.0) {
                    let w = (-delta.dot(&x) - half_q).exp();
                    s += w;
                    s2 += w * w;
                }
            }
            (s, s2)
        })
        .collect();
    let (s, s2) = sums.into_iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let nf = samples as f64;
    let p = s / nf;
    let var = (s2 / nf - p * p).max(0.0);
    Ok(OrthantEstimate { estimate: p, std_error: (var / nf).sqrt(), samples })
}
