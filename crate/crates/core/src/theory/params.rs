use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::field::CovarianceModel;
use crate::lattice::binomial;

/// Relative tolerance for agreement between two algebraic forms of one constant.
const FORM_TOLERANCE: f64 = 1e-12;

/// A numeric check made while building [`TheoryParams`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantCheck {
    pub name: String,
    /// Whether the hypotheses under which the invariant is claimed hold for
    /// the supplied lags.
    pub applies: bool,
    pub holds: bool,
}

/// Constants of the mean and distributional limits for degree `k` in `Z^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryParams {
    pub d: usize,
    pub k: usize,
    pub rho1: f64,
    pub rho2: f64,
    pub rho3: f64,
    pub tau: f64,
    pub a: f64,
    pub b: f64,
    /// Rate for pairs of non-isometric patterns; defined for `k >= 1`.
    pub varrho: Option<f64>,
    /// Rate for pairs of overlapping cross-polytopes.
    pub phi: f64,
    /// Poisson approximation exponent.
    pub theta: f64,
    /// Width of the window of levels with a normal limit; `None` when a
    /// rate does not exceed half of `a`.
    pub c_nu: Option<f64>,
    pub checks: Vec<InvariantCheck>,
}

fn positive(value: f64, what: &str) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::DegenerateDenominator(what.into()))
    }
}

fn agree(x: f64, y: f64) -> bool {
    (x - y).abs() <= FORM_TOLERANCE * x.abs().max(y.abs()).max(1.0)
}

/// `φ_m(ρ, μ') = (m + 1 + (m-1)ρ - 2mμ') / (2(1 + (m-1)ρ - mμ'²))`.
pub fn phi_m(m: usize, rho: f64, mu_prime: f64) -> Result<f64> {
    if m == 0 {
        return Err(invalid("phi_m needs m >= 1"));
    }
    let mf = m as f64;
    let den = positive(2.0 * (1.0 + (mf - 1.0) * rho - mf * mu_prime * mu_prime), "phi_m")?;
    Ok((mf + 1.0 + (mf - 1.0) * rho - 2.0 * mf * mu_prime) / den)
}

/// Build the constants for `(d, k)` from the first three lags.
pub fn make_params(d: usize, k: usize, rho1: f64, rho2: f64, rho3: f64) -> Result<TheoryParams> {
    if d == 0 || k >= d {
        return Err(invalid(format!("need 0 <= k < d, got d = {d}, k = {k}")));
    }
    for (name, r) in [("rho1", rho1), ("rho2", rho2), ("rho3", rho3)] {
        if !(0.0..1.0).contains(&r) {
            return Err(invalid(format!("{name} = {r} is outside [0, 1)")));
        }
    }
    let kf = k as f64;
    let (tau, a, b) = if k == 0 {
        ((2.0 * std::f64::consts::PI).powf(-0.5), 0.5, 0.5)
    } else {
        let spread = positive(1.0 + (2.0 * kf + 1.0) * rho2, "a_k")?;
        let gap = positive(1.0 - rho2, "tau_k")?;
        let tau = binomial(d, k + 1) as f64 / (2.0 * std::f64::consts::PI).powf(kf + 1.0) * spread.powf(2.0 * kf + 0.5)
            / gap.powf(kf + 0.5);
        (tau, (kf + 1.0) / spread, kf + 1.0)
    };
    let two_b = (2.0 * b).round() as usize;

    let varrho = if k >= 1 { Some(phi_m(two_b - 1, rho2, rho3)?) } else { None };
    let phi = phi_m(two_b, rho2, rho1)?;
    let phi_alt = (1.0 - 2.0 * a * (2.0 * rho1 - 1.0)) / positive(2.0 * (1.0 - 2.0 * a * rho1 * rho1), "varphi_k")?;

    let mb = two_b as f64;
    let lead = 1.0 + (mb - 1.0) * rho2 - mb * rho1;
    let theta = lead * lead / positive(1.0 + (mb - 1.0) * rho2 - mb * rho1 * rho1, "vartheta_k")?;
    let s = 1.0 - 2.0 * a * rho1;
    let theta_alt = b * s * s / positive(a * (1.0 - 2.0 * a * rho1 * rho1), "vartheta_k")?;

    let ratio = |r: f64| if r - a / 2.0 > 0.0 { Some((r - a) / (r - a / 2.0)) } else { None };
    let c_nu = if k == 0 {
        ratio(phi)
    } else {
        match (varrho.and_then(ratio), ratio(phi)) {
            (Some(x), Some(y)) => Some(x.min(y).min(2.0 / d as f64)),
            _ => None,
        }
    };

    // hypotheses decidable from the first three lags
    let local = k == 0 || 1.0 + (2.0 * kf + 1.0) * rho2 > 2.0 * (kf + 1.0) * rho1;
    let ordered = if k == 0 { rho2 <= rho1 } else { rho3 < rho2 && rho2 < rho1 };
    let base = ordered && local;
    let poisson = base && rho1 > 0.0 && (k == 0 || rho2 < rho1);
    let mut checks = vec![
        InvariantCheck { name: "varphi_k forms agree".into(), applies: true, holds: agree(phi, phi_alt) },
        InvariantCheck { name: "vartheta_k forms agree".into(), applies: true, holds: agree(theta, theta_alt) },
        InvariantCheck { name: "varphi_k > a_k".into(), applies: base, holds: phi > a },
        InvariantCheck { name: "0 < vartheta_k < 1".into(), applies: poisson, holds: theta > 0.0 && theta < 1.0 },
    ];
    if let Some(v) = varrho {
        checks.push(InvariantCheck { name: "varrho_k > a_k".into(), applies: base && k + 1 < d, holds: v > a });
    }
    let rates_exceed = phi > a && varrho.is_none_or(|v| v > a);
    checks.push(InvariantCheck {
        name: "0 < C^nu_k <= 1".into(),
        applies: base && (k == 0 || k + 1 < d),
        holds: rates_exceed && c_nu.is_some_and(|c| c > 0.0 && c <= 1.0),
    });

    Ok(TheoryParams { d, k, rho1, rho2, rho3, tau, a, b, varrho, phi, theta, c_nu, checks })
}

/// [`make_params`] with the lags read from a covariance model.
pub fn params_for_model(model: &CovarianceModel, k: usize) -> Result<TheoryParams> {
    let (r1, r2, r3) = model.leading();
    make_params(model.d, k, r1, r2, r3)
}

impl TheoryParams {
    /// True when every applicable invariant holds.
    pub fn invariants_hold(&self) -> bool {
        self.checks.iter().all(|c| !c.applies || c.holds)
    }

    fn log_sites(&self, n: usize) -> f64 {
        self.tau.ln() + self.d as f64 * ((2 * n + 1) as f64).ln()
    }

    fn bracket(&self, n: usize, nu: f64) -> Result<f64> {
        let l = self.log_sites(n);
        if l <= 0.0 {
            return Err(Error::ScheduleUndefined(format!("log(tau_k (2n+1)^d) = {l} <= 0 at n = {n}")));
        }
        let inner = l - self.b * (l / self.a).ln() + nu;
        if inner <= 0.0 {
            return Err(Error::ScheduleUndefined(format!("bracket {inner} <= 0 at n = {n}, nu = {nu}")));
        }
        Ok(inner)
    }
}

/// `log λ_{n,k}(u)`, finite for every `u > 0`.
pub fn ln_lambda(params: &TheoryParams, n: usize, u: f64) -> Result<f64> {
    if !(u > 0.0) {
        return Err(invalid(format!("level must be positive, got {u}")));
    }
    Ok(params.log_sites(n) - 2.0 * params.b * u.ln() - params.a * u * u)
}

/// `λ_{n,k}(u) = τ_k (2n+1)^d u^{-2b_k} e^{-a_k u²}`.
pub fn lambda(params: &TheoryParams, n: usize, u: f64) -> Result<f64> {
    ln_lambda(params, n, u).map(f64::exp)
}

/// Level `u_n` at which `λ_{n,k}` is `e^{-ν}` up to a logarithmic factor.
pub fn level_schedule(params: &TheoryParams, n: usize, nu: f64) -> Result<f64> {
    Ok((params.bracket(n, nu)? / params.a).sqrt())
}

/// Threshold for `u²` separating vanishing from non-vanishing `β_k`.
pub fn transition_threshold(params: &TheoryParams, n: usize) -> Result<f64> {
    Ok(params.bracket(n, 0.0)? / params.a)
}

/// `λ_{n,k}(u_n)` obtained by substituting the schedule, in closed form.
pub fn scheduled_lambda(params: &TheoryParams, n: usize, nu: f64) -> Result<f64> {
    let l = params.log_sites(n);
    let inner = params.bracket(n, nu)?;
    Ok((params.b * (l / inner).ln() - nu).exp())
}
