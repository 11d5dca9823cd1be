use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::field::rng_from_seed;

/// `P{Z ≥ x}` for a standard normal `Z`.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// `P{Z ≤ x}` for a standard normal `Z`.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Poisson probability of `j`, evaluated in log space.
pub fn poisson_pmf(j: u64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return if j == 0 { 1.0 } else { 0.0 };
    }
    let jf = j as f64;
    (jf * lambda.ln() - lambda - libm::lgamma(jf + 1.0)).exp()
}

/// Confidence interval; a missing end is unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: Option<f64>,
    pub hi: Option<f64>,
}

impl Interval {
    pub const UNBOUNDED: Interval = Interval { lo: None, hi: None };

    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo: Some(lo), hi: Some(hi) }
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_some() && self.hi.is_some()
    }

    /// True when the interval meets `[a, b]`.
    pub fn overlaps(&self, a: f64, b: f64) -> bool {
        self.lo.is_none_or(|lo| lo <= b) && self.hi.is_none_or(|hi| hi >= a)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.overlaps(x, x)
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance; zero for fewer than two values.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// `½ Σ_j |p̂(j) - Poi(λ)(j)|`, with the Poisson mass above the largest
/// observation added in full.
pub fn tv_to_poisson(samples: &[u64], lambda: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(invalid("total variation needs at least one sample"));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(invalid(format!("Poisson mean must be finite and non-negative, got {lambda}")));
    }
    let max = *samples.iter().max().unwrap();
    let mut counts = vec![0u64; max as usize + 1];
    for &s in samples {
        counts[s as usize] += 1;
    }
    let r = samples.len() as f64;
    let mut gap = 0.0;
    let mut covered = 0.0;
    for (j, &c) in counts.iter().enumerate() {
        let p = poisson_pmf(j as u64, lambda);
        covered += p;
        gap += (c as f64 / r - p).abs();
    }
    let tail = (1.0 - covered).max(0.0);
    Ok((0.5 * (gap + tail)).clamp(0.0, 1.0))
}

/// Shape of standardized samples against `N(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CltStatistics {
    /// `None` when the samples are constant.
    pub skewness: Option<f64>,
    pub excess_kurtosis: Option<f64>,
    /// `sup_x |F̂(x) - Φ(x)|`.
    pub ks: f64,
}

/// Moments and Kolmogorov-Smirnov distance of `(x - center) / scale`.
pub fn clt_statistics(samples: &[f64], center: f64, scale: f64) -> Result<CltStatistics> {
    if samples.is_empty() {
        return Err(invalid("CLT statistics need at least one sample"));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(invalid(format!("scale must be positive, got {scale}")));
    }
    let mut z: Vec<f64> = samples.iter().map(|x| (x - center) / scale).collect();
    let n = z.len() as f64;
    let m = mean(&z);
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for x in &z {
        let e = x - m;
        m2 += e * e;
        m3 += e * e * e;
        m4 += e * e * e * e;
    }
    let (m2, m3, m4) = (m2 / n, m3 / n, m4 / n);
    let (skewness, excess_kurtosis) =
        if m2 > 0.0 { (Some(m3 / m2.powf(1.5)), Some(m4 / (m2 * m2) - 3.0)) } else { (None, None) };
    z.sort_by(f64::total_cmp);
    let mut ks: f64 = 0.0;
    for (i, &x) in z.iter().enumerate() {
        let f = normal_cdf(x);
        ks = ks.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    Ok(CltStatistics { skewness, excess_kurtosis, ks })
}

/// Percentile bootstrap interval for `stat` at confidence `level`.
pub fn bootstrap_ci<F>(samples: &[f64], stat: F, resamples: usize, seed: u64, level: f64) -> Interval
where
    F: Fn(&[f64]) -> f64,
{
    let r = samples.len();
    if r < 2 || resamples == 0 {
        return Interval::UNBOUNDED;
    }
    let mut rng = rng_from_seed(seed);
    let mut buf = vec![0.0; r];
    let mut stats: Vec<f64> = (0..resamples)
        .map(|_| {
            for slot in buf.iter_mut() {
                *slot = samples[rng.random_range(0..r)];
            }
            stat(&buf)
        })
        .filter(|s| s.is_finite())
        .collect();
    if stats.is_empty() {
        return Interval::UNBOUNDED;
    }
    stats.sort_by(f64::total_cmp);
    let alpha = (1.0 - level) / 2.0;
    let pick = |q: f64| stats[((q * stats.len() as f64).floor() as usize).min(stats.len() - 1)];
    Interval::new(pick(alpha), pick(1.0 - alpha))
}

/// Wilson score interval for a binomial proportion at normal quantile `z`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> Interval {
    if trials == 0 {
        return Interval::UNBOUNDED;
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / (1.0 + z2 / n);
    Interval::new((centre - half).max(0.0), (centre + half).min(1.0))
}
