use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Block-constant covariance matrices built from equicorrelated blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum StructuredMatrixSpec {
    /// `m × m`, unit diagonal, every off-diagonal entry `rho`.
    Wm { m: usize, rho: f64 },
    /// Two diagonal blocks `W_{m1}(rho)`, `W_{m2}(rho)` coupled by `mu`.
    Wm1m2 { m1: usize, m2: usize, rho: f64, mu: f64 },
    /// Two diagonal blocks `W_{m1, m-m1}(rho, mu_prime)`,
    /// `W_{m2, m-m2}(rho, mu_prime)` coupled by `mu`.
    Q { m: usize, m1: usize, m2: usize, rho: f64, mu_prime: f64, mu: f64 },
    /// `2m × 2m`, zero diagonal blocks, off-diagonal blocks all `mu`.
    QHat { m: usize, mu: f64 },
}

/// Eigenvalues in ascending order, with eigenvectors where a closed form
/// gives them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenResult {
    pub values: Vec<f64>,
    pub vectors: Option<Vec<Vec<f64>>>,
    /// Some values came from a dense eigensolver rather than a closed form.
    pub numeric: bool,
}

/// Positive-definiteness verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdReport {
    pub pd: bool,
    pub rule: String,
    /// Exact smallest eigenvalue when a closed form is available.
    pub min_eigenvalue: Option<f64>,
    /// Range containing every eigenvalue, for the coupled `Q` shapes.
    pub eigenvalue_range: Option<(f64, f64)>,
    /// Largest coupling for which the verdict is guaranteed.
    pub delta: Option<f64>,
    /// Upper bound on the largest eigenvalue for couplings up to `delta`.
    pub kappa: Option<f64>,
}

impl StructuredMatrixSpec {
    pub fn dim(&self) -> usize {
        match *self {
            Self::Wm { m, .. } => m,
            Self::Wm1m2 { m1, m2, .. } => m1 + m2,
            Self::Q { m, .. } | Self::QHat { m, .. } => 2 * m,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        let ok = match *self {
            Self::Wm { m, rho } => m >= 1 && finite(&[rho]),
            Self::Wm1m2 { m1, m2, rho, mu } => m1 >= 1 && m2 >= 1 && finite(&[rho, mu]),
            Self::Q { m, m1, m2, rho, mu_prime, mu } => {
                m >= 2 && (1..m).contains(&m1) && (1..m).contains(&m2) && finite(&[rho, mu_prime, mu])
            }
            Self::QHat { m, mu } => m >= 1 && finite(&[mu]),
        };
        if ok {
            Ok(())
        } else {
            Err(invalid(format!("malformed structured matrix {self:?}")))
        }
    }

    /// The matrix itself.
    pub fn dense(&self) -> DMatrix<f64> {
        fn w2(m1: usize, m2: usize, rho: f64, mu: f64) -> DMatrix<f64> {
            DMatrix::from_fn(m1 + m2, m1 + m2, |i, j| {
                if i == j {
                    1.0
                } else if (i < m1) == (j < m1) {
                    rho
                } else {
                    mu
                }
            })
        }
        match *self {
            Self::Wm { m, rho } => DMatrix::from_fn(m, m, |i, j| if i == j { 1.0 } else { rho }),
            Self::Wm1m2 { m1, m2, rho, mu } => w2(m1, m2, rho, mu),
            Self::Q { m, m1, m2, rho, mu_prime, mu } => {
                let a = w2(m1, m - m1, rho, mu_prime);
                let b = w2(m2, m - m2, rho, mu_prime);
                DMatrix::from_fn(2 * m, 2 * m, |i, j| match (i < m, j < m) {
                    (true, true) => a[(i, j)],
                    (false, false) => b[(i - m, j - m)],
                    _ => mu,
                })
            }
            Self::QHat { m, mu } => DMatrix::from_fn(2 * m, 2 * m, |i, j| if (i < m) == (j < m) { 0.0 } else { mu }),
        }
    }
}

fn unit(len: usize, plus: usize, minus: usize) -> Vec<f64> {
    let mut v = vec![0.0; len];
    v[plus] = 1.0;
    v[minus] = -1.0;
    v
}

/// Difference vectors inside the blocks `[0, m1)` and `[m1, m1 + m2)`.
fn block_differences(m1: usize, m2: usize) -> Vec<Vec<f64>> {
    let len = m1 + m2;
    let mut out: Vec<Vec<f64>> = (1..m1).map(|j| unit(len, 0, j)).collect();
    out.extend((1..m2).map(|j| unit(len, m1, m1 + j)));
    out
}

fn sorted(mut pairs: Vec<(f64, Vec<f64>)>) -> EigenResult {
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (values, vectors) = pairs.into_iter().unzip();
    EigenResult { values, vectors: Some(vectors), numeric: false }
}

/// Dense symmetric eigenvalues in ascending order.
pub fn dense_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// The two eigenvalues of `W_{m1,m2}(ρ, μ)` not equal to `1 - ρ`, when both
/// blocks have equal size or one block is a single entry.
fn w_residuals(m1: usize, m2: usize, rho: f64, mu: f64) -> Option<[f64; 2]> {
    if m1 == m2 {
        let c = 1.0 + (m1 as f64 - 1.0) * rho;
        let s = m1 as f64 * mu;
        Some([c - s, c + s])
    } else if m1 == 1 || m2 == 1 {
        let big = m1.max(m2) as f64;
        let r = ((big - 1.0).powi(2) * rho * rho + 4.0 * big * mu * mu).sqrt();
        let c = 2.0 + (big - 1.0) * rho;
        Some([(c - r) / 2.0, (c + r) / 2.0])
    } else {
        None
    }
}

/// Eigen-decomposition from the closed forms for each shape.
///
/// `W_{m1,m2}` with unequal blocks both larger than one, and the coupled `Q`
/// shapes, have no closed form here; their remaining eigenvalues come from a
/// dense solver and `numeric` is set.
pub fn structured_eig(spec: &StructuredMatrixSpec) -> Result<EigenResult> {
    spec.validate()?;
    match *spec {
        StructuredMatrixSpec::Wm { m, rho } => {
            let mut pairs: Vec<(f64, Vec<f64>)> = (1..m).map(|j| (1.0 - rho, unit(m, 0, j))).collect();
            pairs.push((1.0 + (m as f64 - 1.0) * rho, vec![1.0; m]));
            Ok(sorted(pairs))
        }
        StructuredMatrixSpec::Wm1m2 { m1, m2, rho, mu } => {
            let flat: Vec<(f64, Vec<f64>)> = block_differences(m1, m2).into_iter().map(|v| (1.0 - rho, v)).collect();
            match w_residuals(m1, m2, rho, mu) {
                Some([lo, hi]) if m1 == m2 => {
                    let mut pairs = flat;
                    let mut split = vec![1.0; m1 + m2];
                    split[m1..].iter_mut().for_each(|x| *x = -1.0);
                    pairs.push((lo, split));
                    pairs.push((hi, vec![1.0; m1 + m2]));
                    Ok(sorted(pairs))
                }
                Some([lo, hi]) => {
                    let mut values: Vec<f64> = flat.iter().map(|p| p.0).collect();
                    values.extend([lo, hi]);
                    values.sort_by(f64::total_cmp);
                    Ok(EigenResult { values, vectors: None, numeric: false })
                }
                None => {
                    let mut all = dense_eigenvalues(&spec.dense());
                    // drop the known 1 - ρ copies, keep the two residuals
                    for _ in 0..m1 + m2 - 2 {
                        let (pos, _) = all
                            .iter()
                            .enumerate()
                            .min_by(|a, b| (a.1 - (1.0 - rho)).abs().total_cmp(&(b.1 - (1.0 - rho)).abs()))
                            .expect("non-empty spectrum");
                        all.remove(pos);
                    }
                    let mut values = vec![1.0 - rho; m1 + m2 - 2];
                    values.extend(all);
                    values.sort_by(f64::total_cmp);
                    Ok(EigenResult { values, vectors: None, numeric: true })
                }
            }
        }
        StructuredMatrixSpec::QHat { m, mu } => {
            let len = 2 * m;
            let s = m as f64 * mu;
            let mut pairs: Vec<(f64, Vec<f64>)> = block_differences(m, m).into_iter().map(|v| (0.0, v)).collect();
            let mut split = vec![1.0; len];
            split[m..].iter_mut().for_each(|x| *x = -1.0);
            pairs.push((s, vec![1.0; len]));
            pairs.push((-s, split));
            Ok(sorted(pairs))
        }
        StructuredMatrixSpec::Q { .. } => {
            Ok(EigenResult { values: dense_eigenvalues(&spec.dense()), vectors: None, numeric: true })
        }
    }
}

/// `|W_{m1,m2}(ρ, μ)|`.
fn w_det(m1: usize, m2: usize, rho: f64, mu: f64) -> f64 {
    let (a, b) = (1.0 + (m1 as f64 - 1.0) * rho, 1.0 + (m2 as f64 - 1.0) * rho);
    (1.0 - rho).powi((m1 + m2 - 2) as i32) * (a * b - (m1 * m2) as f64 * mu * mu)
}

/// `1 W_{j, m-j}(ρ, μ')^{-1} 1ᵀ`, solved on block-constant vectors.
fn w_inverse_sum(j: usize, m: usize, rho: f64, mu_prime: f64) -> Result<f64> {
    let (p, q) = (j as f64, (m - j) as f64);
    let (a, b) = (1.0 + (p - 1.0) * rho, 1.0 + (q - 1.0) * rho);
    let det = a * b - p * q * mu_prime * mu_prime;
    if det == 0.0 {
        return Err(Error::DegenerateDenominator("block system of W_{j,m-j}".into()));
    }
    let alpha = (b - q * mu_prime) / det;
    let beta = (a - p * mu_prime) / det;
    Ok(p * alpha + q * beta)
}

fn q_hypotheses(m: usize, m1: usize, m2: usize, rho: f64, mu_prime: f64) -> Option<&'static str> {
    let unit = (0.0..1.0).contains(&rho) && (0.0..1.0).contains(&mu_prime);
    if !unit {
        return None;
    }
    if m1 == 1 && m2 == 1 && 1.0 + (m as f64 - 2.0) * rho - (m as f64 - 1.0) * mu_prime > 0.0 {
        return Some("coupled_single_rows");
    }
    if rho > mu_prime {
        return Some("coupled_equal_blocks");
    }
    None
}

/// Determinant from the closed forms.
pub fn structured_det(spec: &StructuredMatrixSpec) -> Result<f64> {
    spec.validate()?;
    match *spec {
        StructuredMatrixSpec::Wm { m, rho } => Ok((1.0 - rho).powi(m as i32 - 1) * (1.0 + (m as f64 - 1.0) * rho)),
        StructuredMatrixSpec::Wm1m2 { m1, m2, rho, mu } => {
            let nonzero = 1.0 + (m1 as f64 - 1.0) * rho != 0.0 || 1.0 + (m2 as f64 - 1.0) * rho != 0.0;
            if rho == 1.0 || !nonzero {
                return Err(Error::HypothesisViolated {
                    rule: "two_block_determinant",
                    detail: format!("rho = {rho} leaves both blocks singular"),
                });
            }
            Ok(w_det(m1, m2, rho, mu))
        }
        StructuredMatrixSpec::Q { m, m1, m2, rho, mu_prime, mu } => {
            if q_hypotheses(m, m1, m2, rho, mu_prime).is_none() {
                return Err(Error::HypothesisViolated {
                    rule: "block_schur_determinant",
                    detail: format!("need rho > mu' or m1 = m2 = 1 with 1 + (m-2)rho - (m-1)mu' > 0 (rho = {rho}, mu' = {mu_prime})"),
                });
            }
            let s1 = w_inverse_sum(m1, m, rho, mu_prime)?;
            let s2 = w_inverse_sum(m2, m, rho, mu_prime)?;
            Ok(w_det(m1, m - m1, rho, mu_prime) * w_det(m2, m - m2, rho, mu_prime) * (1.0 - mu * mu * s1 * s2))
        }
        StructuredMatrixSpec::QHat { m, mu } => Ok(if m == 1 { -mu * mu } else { 0.0 }),
    }
}

/// Extreme eigenvalues of `W_{j, m-j}(ρ, μ')` from its trace and determinant.
fn w_extremes(j: usize, m: usize, rho: f64, mu_prime: f64) -> (f64, f64) {
    let (p, q) = (j as f64, (m - j) as f64);
    let sum = 2.0 + (m as f64 - 2.0) * rho;
    let prod = (1.0 + (p - 1.0) * rho) * (1.0 + (q - 1.0) * rho) - p * q * mu_prime * mu_prime;
    let r = (sum * sum - 4.0 * prod).max(0.0).sqrt();
    let (lo, hi) = ((sum - r) / 2.0, (sum + r) / 2.0);
    if m > 2 {
        (lo.min(1.0 - rho), hi.max(1.0 - rho))
    } else {
        (lo, hi)
    }
}

/// Positive-definiteness verdict from the closed forms.
///
/// For the coupled `Q` shapes the verdict holds for couplings
/// `μ ∈ [0, δ]` with `δ = κ_min / (2m)` and `κ = κ_max + κ_min / 2`, where
/// `κ_min`, `κ_max` bound the spectra of the diagonal blocks.
pub fn structured_pd(spec: &StructuredMatrixSpec) -> Result<PdReport> {
    spec.validate()?;
    let report = |pd, rule: &str, min| PdReport {
        pd,
        rule: rule.into(),
        min_eigenvalue: min,
        eigenvalue_range: None,
        delta: None,
        kappa: None,
    };
    match *spec {
        StructuredMatrixSpec::Wm { m, rho } => {
            let big = 1.0 + (m as f64 - 1.0) * rho;
            let min = if m > 1 { big.min(1.0 - rho) } else { big };
            Ok(report(min > 0.0, "equicorrelated", Some(min)))
        }
        StructuredMatrixSpec::Wm1m2 { m1, m2, rho, mu } => {
            let unit = (0.0..1.0).contains(&rho) && (0.0..1.0).contains(&mu);
            let c1 = 1.0 + (m1 as f64 - 1.0) * rho - m1 as f64 * mu;
            let c2 = 1.0 + (m2 as f64 - 1.0) * rho - m2 as f64 * mu;
            if !(unit && c1 > 0.0 && c2 > 0.0) {
                return Err(Error::HypothesisViolated {
                    rule: "two_block_definite",
                    detail: format!("need rho, mu in [0,1) and 1 + (m_i-1)rho - m_i mu > 0 (got {c1}, {c2})"),
                });
            }
            let min = w_residuals(m1, m2, rho, mu).map(|[lo, _]| if m1 + m2 > 2 { lo.min(1.0 - rho) } else { lo });
            Ok(report(true, "two_block_definite", min))
        }
        StructuredMatrixSpec::Q { m, m1, m2, rho, mu_prime, mu } => {
            let rule = match q_hypotheses(m, m1, m2, rho, mu_prime) {
                Some("coupled_single_rows") => "coupled_single_rows",
                Some(_) if m1 == m2 => "coupled_equal_blocks",
                _ => {
                    return Err(Error::HypothesisViolated {
                        rule: "coupled_equal_blocks",
                        detail: format!(
                            "need m1 = m2 with rho > mu', or m1 = m2 = 1 with 1 + (m-2)rho - (m-1)mu' > 0 (rho = {rho}, mu' = {mu_prime})"
                        ),
                    })
                }
            };
            let blocks: Vec<usize> = if rule == "coupled_single_rows" { vec![1] } else { (1..m).collect() };
            let (mut kmin, mut kmax) = (f64::INFINITY, f64::NEG_INFINITY);
            for j in blocks {
                let (lo, hi) = w_extremes(j, m, rho, mu_prime);
                kmin = kmin.min(lo);
                kmax = kmax.max(hi);
            }
            let delta = kmin / (2.0 * m as f64);
            let kappa = kmax + kmin / 2.0;
            if !(0.0..=delta).contains(&mu) {
                return Err(Error::HypothesisViolated {
                    rule: if rule == "coupled_single_rows" { "coupled_single_rows" } else { "coupled_equal_blocks" },
                    detail: format!("coupling mu = {mu} is outside [0, delta = {delta}]"),
                });
            }
            let s = m as f64 * mu;
            Ok(PdReport {
                pd: true,
                rule: rule.into(),
                min_eigenvalue: None,
                eigenvalue_range: Some((kmin - s, kmax + s)),
                delta: Some(delta),
                kappa: Some(kappa),
            })
        }
        StructuredMatrixSpec::QHat { m, mu } => Ok(report(false, "opposed_blocks", Some(-(m as f64) * mu.abs()))),
    }
}
