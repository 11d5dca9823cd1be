use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::model::CovarianceModel;
use super::sample::FieldSample;
use crate::error::{Error, Result};
use crate::lattice::{l1, Window};

/// Largest window (in sites) factorized densely.
pub const DENSE_LIMIT: usize = 4096;
/// Eigenvalue tolerance relative to the largest eigenvalue.
pub const PSD_TOLERANCE: f64 = 1e-10;
/// Largest window for which the diagnostic computes the exact spectrum.
const EXACT_SPECTRUM_LIMIT: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMethod {
    Identity,
    DenseCholesky,
    CirculantEmbedding,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CovarianceDiagnostic {
    pub ok: bool,
    pub method: SamplingMethod,
    /// Exact smallest eigenvalue for small windows; otherwise the smallest
    /// eigenvalue of the circulant embedding, a lower bound by interlacing.
    pub min_eigenvalue_estimate: f64,
}

/// Per-replicate seed derived from a master seed.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index.wrapping_add(0x51_7C_C1_B7_27_22_0A_95)))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub(crate) fn lag_table(model: &CovarianceModel, max_lag: usize) -> Vec<f64> {
    (0..=max_lag).map(|q| model.covariance_at(q)).collect()
}

/// Packed lower-triangular Cholesky factor; a pivot within tolerance of zero
/// yields a zero column.
#[derive(Debug, Clone)]
pub(crate) struct PackedCholesky {
    pub data: Vec<f64>,
}

impl PackedCholesky {
    fn row(&self, i: usize) -> &[f64] {
        let off = i * (i + 1) / 2;
        &self.data[off..off + i + 1]
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut s = acc[0] + acc[1] + acc[2] + acc[3];
    for i in 4 * chunks..a.len() {
        s += a[i] * b[i];
    }
    s
}

/// Factor the symmetric matrix given entrywise by `entry(i, j)`, `j ≤ i`.
/// Returns the most negative rejected pivot on failure.
pub(crate) fn packed_cholesky(
    n: usize,
    entry: impl Fn(usize, usize) -> f64,
    scale: f64,
) -> std::result::Result<PackedCholesky, f64> {
    let tol = PSD_TOLERANCE * scale;
    let mut data = vec![0.0f64; n * (n + 1) / 2];
    for i in 0..n {
        let off_i = i * (i + 1) / 2;
        for j in 0..i {
            let off_j = j * (j + 1) / 2;
            let s = entry(i, j) - dot(&data[off_i..off_i + j], &data[off_j..off_j + j]);
            let pivot = data[off_j + j];
            data[off_i + j] = if pivot > 0.0 { s / pivot } else { 0.0 };
        }
        let s = entry(i, i) - dot(&data[off_i..off_i + i], &data[off_i..off_i + i]);
        if s < -tol {
            return Err(s);
        }
        data[off_i + i] = if s > tol { s.sqrt() } else { 0.0 };
    }
    Ok(PackedCholesky { data })
}

fn dense_entries(model: &CovarianceModel, window: &Window) -> (Vec<Vec<i32>>, Vec<f64>, f64) {
    let points: Vec<_> = window.points().collect();
    let lags = lag_table(model, 2 * model.d * window.radius);
    // Gershgorin bound on the largest eigenvalue
    let scale =
        points.iter().map(|p| points.iter().map(|q| lags[l1(p, q) as usize].abs()).sum::<f64>()).fold(0.0, f64::max);
    (points, lags, scale)
}

fn exact_min_eigenvalue(points: &[Vec<i32>], lags: &[f64]) -> f64 {
    let n = points.len();
    let m = nalgebra::DMatrix::from_fn(n, n, |i, j| lags[l1(&points[i], &points[j]) as usize]);
    nalgebra::SymmetricEigen::new(m).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Multidimensional in-place FFT over a `side^d` cube.
pub(crate) struct NdFft {
    side: usize,
    d: usize,
    plan: Arc<dyn Fft<f64>>,
}

impl NdFft {
    pub fn forward(side: usize, d: usize) -> Self {
        let plan = FftPlanner::new().plan_fft_forward(side);
        NdFft { side, d, plan }
    }

    pub fn process(&self, data: &mut [Complex64]) {
        let side = self.side;
        let total = data.len();
        let mut line = vec![Complex64::new(0.0, 0.0); side];
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.plan.get_inplace_scratch_len()];
        for axis in 0..self.d {
            let stride = side.pow((self.d - 1 - axis) as u32);
            if stride == 1 {
                for chunk in data.chunks_exact_mut(side) {
                    self.plan.process_with_scratch(chunk, &mut scratch);
                }
                continue;
            }
            let block = stride * side;
            for base in (0..total).step_by(block) {
                for offset in 0..stride {
                    let start = base + offset;
                    for (i, slot) in line.iter_mut().enumerate() {
                        *slot = data[start + i * stride];
                    }
                    self.plan.process_with_scratch(&mut line, &mut scratch);
                    for (i, v) in line.iter().enumerate() {
                        data[start + i * stride] = *v;
                    }
                }
            }
        }
    }
}

/// Torus side used for the circulant embedding of `Γ_{n+1}`.
pub fn torus_side(n: usize) -> usize {
    (2 * (2 * n + 3)).next_power_of_two()
}

/// Eigenvalues of the circulant embedding on a torus of the given side.
pub(crate) fn circulant_spectrum(model: &CovarianceModel, side: usize) -> Vec<f64> {
    let d = model.d;
    let torus = side.pow(d as u32);
    let lags = lag_table(model, d * side / 2);
    let mut data = vec![Complex64::new(0.0, 0.0); torus];
    let mut coord = vec![0usize; d];
    for (idx, slot) in data.iter_mut().enumerate() {
        let mut rem = idx;
        for c in coord.iter_mut().rev() {
            *c = rem % side;
            rem /= side;
        }
        let q: usize = coord.iter().map(|&c| c.min(side - c)).sum();
        *slot = Complex64::new(lags[q], 0.0);
    }
    NdFft::forward(side, d).process(&mut data);
    data.iter().map(|z| z.re).collect()
}

enum Method {
    Identity,
    Dense(PackedCholesky),
    Circulant { side: usize, amplitude: Vec<f64>, fft: NdFft },
}

/// Reusable sampler for one covariance model and window size.
pub struct FieldSampler {
    model: CovarianceModel,
    n: usize,
    window: Window,
    fingerprint: String,
    method: Method,
}

impl FieldSampler {
    pub fn new(model: &CovarianceModel, n: usize) -> Result<Self> {
        model.validate()?;
        let window = Window::new(model.d, n + 1);
        let method = if model.is_iid() {
            Method::Identity
        } else if window.len() <= DENSE_LIMIT {
            let (points, lags, scale) = dense_entries(model, &window);
            match packed_cholesky(points.len(), |i, j| lags[l1(&points[i], &points[j]) as usize], scale) {
                Ok(f) => Method::Dense(f),
                Err(_) => {
                    return Err(Error::NotPsd { min_eigenvalue: exact_min_eigenvalue(&points, &lags) });
                }
            }
        } else {
            let side = torus_side(n);
            let spectrum = circulant_spectrum(model, side);
            let max = spectrum.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let min = spectrum.iter().copied().fold(f64::INFINITY, f64::min);
            if min < -PSD_TOLERANCE * max {
                return Err(Error::EmbeddingFailed { min_eigenvalue: min, max_eigenvalue: max });
            }
            let total = spectrum.len() as f64;
            let amplitude = spectrum.iter().map(|&l| (l.max(0.0) / total).sqrt()).collect();
            Method::Circulant { side, amplitude, fft: NdFft::forward(side, model.d) }
        };
        Ok(FieldSampler { model: model.clone(), n, window, fingerprint: model.fingerprint(), method })
    }

    pub fn method(&self) -> SamplingMethod {
        match self.method {
            Method::Identity => SamplingMethod::Identity,
            Method::Dense(_) => SamplingMethod::DenseCholesky,
            Method::Circulant { .. } => SamplingMethod::CirculantEmbedding,
        }
    }

    pub fn model(&self) -> &CovarianceModel {
        &self.model
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sample(&self, seed: u64) -> FieldSample {
        let mut rng = rng_from_seed(seed);
        let len = self.window.len();
        let values = match &self.method {
            Method::Identity => (0..len).map(|_| StandardNormal.sample(&mut rng)).collect(),
            Method::Dense(f) => {
                let z: Vec<f64> = (0..len).map(|_| StandardNormal.sample(&mut rng)).collect();
                (0..len).map(|i| dot(f.row(i), &z[..=i])).collect()
            }
            Method::Circulant { side, amplitude, fft } => {
                let mut w: Vec<Complex64> = amplitude
                    .iter()
                    .map(|&a| {
                        let re: f64 = StandardNormal.sample(&mut rng);
                        let im: f64 = StandardNormal.sample(&mut rng);
                        Complex64::new(a * re, a * im)
                    })
                    .collect();
                fft.process(&mut w);
                let wside = self.window.side();
                let d = self.model.d;
                (0..len)
                    .map(|idx| {
                        let mut rem = idx;
                        let mut t = 0usize;
                        let mut mult = 1usize;
                        for _ in 0..d {
                            t += (rem % wside) * mult;
                            rem /= wside;
                            mult *= side;
                        }
                        w[t].re
                    })
                    .collect()
            }
        };
        FieldSample::from_parts(self.model.d, self.n, seed, self.fingerprint.clone(), values)
    }
}

/// Draw one field on `Γ_{n+1}`.
pub fn sample_field(model: &CovarianceModel, n: usize, seed: u64) -> Result<FieldSample> {
    Ok(FieldSampler::new(model, n)?.sample(seed))
}

/// Check that the covariance of `Γ_{n+1}` is positive semidefinite within
/// tolerance, using the same route the sampler would take.
pub fn validate_window_covariance(model: &CovarianceModel, n: usize) -> Result<CovarianceDiagnostic> {
    model.validate()?;
    let window = Window::new(model.d, n + 1);
    if model.is_iid() {
        return Ok(CovarianceDiagnostic { ok: true, method: SamplingMethod::Identity, min_eigenvalue_estimate: 1.0 });
    }
    if window.len() <= DENSE_LIMIT {
        let (points, lags, scale) = dense_entries(model, &window);
        let factor = packed_cholesky(points.len(), |i, j| lags[l1(&points[i], &points[j]) as usize], scale);
        let estimate = if factor.is_err() || points.len() <= EXACT_SPECTRUM_LIMIT {
            exact_min_eigenvalue(&points, &lags)
        } else {
            circulant_spectrum(model, torus_side(n)).into_iter().fold(f64::INFINITY, f64::min)
        };
        return match factor {
            Ok(_) => Ok(CovarianceDiagnostic {
                ok: true,
                method: SamplingMethod::DenseCholesky,
                min_eigenvalue_estimate: estimate,
            }),
            Err(_) => Err(Error::NotPsd { min_eigenvalue: estimate }),
        };
    }
    let spectrum = circulant_spectrum(model, torus_side(n));
    let max = spectrum.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = spectrum.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -PSD_TOLERANCE * max {
        return Err(Error::EmbeddingFailed { min_eigenvalue: min, max_eigenvalue: max });
    }
    Ok(CovarianceDiagnostic { ok: true, method: SamplingMethod::CirculantEmbedding, min_eigenvalue_estimate: min })
}
