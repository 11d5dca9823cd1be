use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, Result};

/// Tail behaviour asserted by the user for a tabulated covariance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailBehavior {
    /// Every lag beyond the table has zero covariance.
    Zero,
    /// `Σ q^{d-1} ρ_q < ∞` and `ρ_q log q → 0`.
    Summable,
    /// `ρ_q log q → 0` only.
    LogVanishing,
}

/// Parametric family of the lag sequence `ρ_q`, `q ≥ 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum CovarianceKind {
    /// Independent sites: `ρ_q = 0` for `q ≥ 1`.
    Iid,
    /// `ρ_q = ρ_1 θ^{q-1}`.
    Geometric { rho1: f64, theta: f64 },
    /// `ρ_q = c (1+q)^{-α}`.
    Polynomial { c: f64, alpha: f64 },
    /// `values[q-1] = ρ_q` for `q ≤ values.len()`, zero afterwards.
    FiniteSupport { values: Vec<f64> },
    /// `values[q-1] = ρ_q`; lags past the table are treated as zero when
    /// sampling, and `tail` records what the user asserts about them.
    ExplicitTable {
        values: Vec<f64>,
        #[serde(default)]
        tail: Option<TailBehavior>,
    },
}

/// Stationary covariance `Cov(X_t, X_s) = ρ_{‖t-s‖_1}` on `Z^d`, `ρ_0 = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceModel {
    #[serde(flatten)]
    pub kind: CovarianceKind,
    pub d: usize,
}

impl CovarianceModel {
    pub fn new(kind: CovarianceKind, d: usize) -> Result<Self> {
        let m = CovarianceModel { kind, d };
        m.validate()?;
        Ok(m)
    }

    pub fn iid(d: usize) -> Self {
        CovarianceModel { kind: CovarianceKind::Iid, d }
    }

    pub fn geometric(d: usize, rho1: f64, theta: f64) -> Result<Self> {
        Self::new(CovarianceKind::Geometric { rho1, theta }, d)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: CovarianceModel = serde_json::from_str(s)?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(invalid("dimension d must be at least 1"));
        }
        let finite = |x: f64, name: &str| {
            if x.is_finite() {
                Ok(())
            } else {
                Err(invalid(format!("{name} must be finite")))
            }
        };
        match &self.kind {
            CovarianceKind::Iid => {}
            CovarianceKind::Geometric { rho1, theta } => {
                finite(*rho1, "rho1")?;
                finite(*theta, "theta")?;
                if !(0.0..1.0).contains(rho1) {
                    return Err(invalid("geometric rho1 must lie in [0, 1)"));
                }
                if !(0.0..=1.0).contains(theta) {
                    return Err(invalid("geometric theta must lie in [0, 1]"));
                }
            }
            CovarianceKind::Polynomial { c, alpha } => {
                finite(*c, "c")?;
                finite(*alpha, "alpha")?;
                if *c < 0.0 || *alpha < 0.0 {
                    return Err(invalid("polynomial c and alpha must be nonnegative"));
                }
                if c * 2f64.powf(-alpha) >= 1.0 {
                    return Err(invalid("polynomial model needs rho_1 = c 2^-alpha < 1"));
                }
            }
            CovarianceKind::FiniteSupport { values } => {
                for (i, v) in values.iter().enumerate() {
                    finite(*v, "covariance value")?;
                    if !(0.0..1.0).contains(v) {
                        return Err(invalid(format!("finite-support value at lag {} must lie in [0, 1)", i + 1)));
                    }
                }
            }
            CovarianceKind::ExplicitTable { values, .. } => {
                for (i, v) in values.iter().enumerate() {
                    finite(*v, "covariance value")?;
                    if v.abs() > 1.0 {
                        return Err(invalid(format!("table value at lag {} exceeds 1 in magnitude", i + 1)));
                    }
                }
            }
        }
        Ok(())
    }

    /// `ρ_q`; `ρ_0 = 1`.
    pub fn covariance_at(&self, q: usize) -> f64 {
        if q == 0 {
            return 1.0;
        }
        match &self.kind {
            CovarianceKind::Iid => 0.0,
            CovarianceKind::Geometric { rho1, theta } => rho1 * theta.powi(q as i32 - 1),
            CovarianceKind::Polynomial { c, alpha } => c * (1.0 + q as f64).powf(-alpha),
            CovarianceKind::FiniteSupport { values } | CovarianceKind::ExplicitTable { values, .. } => {
                values.get(q - 1).copied().unwrap_or(0.0)
            }
        }
    }

    /// `(ρ_1, ρ_2, ρ_3)`.
    pub fn leading(&self) -> (f64, f64, f64) {
        (self.covariance_at(1), self.covariance_at(2), self.covariance_at(3))
    }

    pub fn is_iid(&self) -> bool {
        match &self.kind {
            CovarianceKind::Iid => true,
            CovarianceKind::FiniteSupport { values } => values.iter().all(|&v| v == 0.0),
            _ => false,
        }
    }

    /// Short content hash of the model.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.to_json().as_bytes());
        hex::encode(&digest[..8])
    }
}
