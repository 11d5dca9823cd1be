use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::matrices::{structured_eig, StructuredMatrixSpec};
use super::params::TheoryParams;
use crate::error::{invalid, Error, Result};

const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// Two-sided bound on `P{Y ≥ u}` for `Y ~ N(0, M)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavageBracket {
    /// `u M^{-1}`, componentwise positive.
    pub delta: Vec<f64>,
    /// `u M^{-1} uᵀ`.
    pub quadratic: f64,
    pub lower: f64,
    pub upper: f64,
    /// `log upper`, finite where `upper` underflows.
    pub log_upper: f64,
    /// `lower / upper`.
    pub lower_factor: f64,
}

fn assemble(delta: Vec<f64>, quadratic: f64, log_det: f64, correction: f64) -> SavageBracket {
    let i = delta.len() as f64;
    let log_upper = -0.5 * i * (2.0 * std::f64::consts::PI).ln()
        - 0.5 * log_det
        - 0.5 * quadratic
        - delta.iter().map(|x| x.ln()).sum::<f64>();
    let upper = log_upper.exp();
    let lower_factor = 1.0 - 0.5 * correction;
    SavageBracket { delta, quadratic, lower: upper * lower_factor, upper, log_upper, lower_factor }
}

/// Savage's bracket for a positive-definite covariance `m` and level vector `u`.
pub fn savage_bracket(m: &DMatrix<f64>, u: &[f64]) -> Result<SavageBracket> {
    let i = m.nrows();
    if i == 0 || m.ncols() != i || u.len() != i {
        return Err(invalid(format!("need a square matrix matching {} levels, got {}x{}", u.len(), i, m.ncols())));
    }
    for r in 0..i {
        for c in 0..r {
            if (m[(r, c)] - m[(c, r)]).abs() > SYMMETRY_TOLERANCE * m[(r, c)].abs().max(1.0) {
                return Err(invalid("covariance matrix is not symmetric"));
            }
        }
    }
    let chol = m.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
    let inv = chol.inverse();
    let uv = DVector::from_column_slice(u);
    let delta: Vec<f64> = (&inv * &uv).iter().copied().collect();
    if !delta.iter().all(|&x| x > 0.0) {
        return Err(Error::SavageConditionFails { delta });
    }
    let quadratic = uv.dot(&(&inv * &uv));
    let log_det = 2.0 * chol.l().diagonal().iter().map(|x| x.ln()).sum::<f64>();
    let mut correction = 0.0;
    for j in 0..i {
        for l in 0..i {
            let weight = if j == l { 2.0 } else { 1.0 };
            correction += inv[(j, l)] * weight / (delta[j] * delta[l]);
        }
    }
    Ok(assemble(delta, quadratic, log_det, correction))
}

/// Savage's bracket for all `2b_k` vertices of a cross-polytope exceeding
/// `u`, with covariance `W_{2b_k}(ρ_2)`; for `k = 0` a single site.
///
/// Uses the eigenstructure of `W_m(ρ)`: `1` is an eigenvector with
/// eigenvalue `1 + (m-1)ρ`, so `Δ = u / (1 + (m-1)ρ)` in every coordinate,
/// `1 W^{-1} 1ᵀ = m / (1 + (m-1)ρ)` and `tr W^{-1}` is the sum of
/// reciprocal eigenvalues.
pub fn cross_polytope_tail_bracket(params: &TheoryParams, u: f64) -> Result<SavageBracket> {
    if !(u > 0.0) {
        return Err(Error::SavageConditionFails { delta: vec![u] });
    }
    let (m, rho) = if params.k == 0 { (1, 0.0) } else { ((2.0 * params.b).round() as usize, params.rho2) };
    let eig = structured_eig(&StructuredMatrixSpec::Wm { m, rho })?;
    if eig.values.iter().any(|&v| v <= 0.0) {
        return Err(Error::NotPositiveDefinite);
    }
    let top = 1.0 + (m as f64 - 1.0) * rho;
    let delta = vec![u / top; m];
    let ones_form = m as f64 / top;
    let trace_inv: f64 = eig.values.iter().map(|v| 1.0 / v).sum();
    let log_det: f64 = eig.values.iter().map(|v| v.ln()).sum();
    let correction = (ones_form + trace_inv) * top * top / (u * u);
    Ok(assemble(delta, u * u * ones_form, log_det, correction))
}

/// Cross terms of the Stein-Chen total variation bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct SteinChenTerms {
    /// `Σ_i Σ_{j ∈ Γ_i^+ ∪ Γ_i^-} |Cov(1_i, 1_j)|`.
    pub monotone_covariance: f64,
    /// `Σ_i Σ_{j ∈ Γ_i^0} (E[1_i 1_j] + E[1_i] E[1_j])`.
    pub remaining_pairs: f64,
}

/// `((1 - e^{-λ}) / λ) (Σ p_i² + cross terms)` with `λ = Σ p_i`.
pub fn stein_chen_bound(means: &[f64], terms: SteinChenTerms) -> Result<f64> {
    if means.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(invalid("indicator means must lie in [0, 1]"));
    }
    let lambda: f64 = means.iter().sum();
    if !(lambda > 0.0) {
        return Err(invalid("total mean must be positive"));
    }
    let squares: f64 = means.iter().map(|p| p * p).sum();
    let prefactor = -(-lambda).exp_m1() / lambda;
    Ok(prefactor * (squares + terms.monotone_covariance + terms.remaining_pairs))
}
