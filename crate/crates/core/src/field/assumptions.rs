use serde::{Deserialize, Serialize};

use super::model::{CovarianceKind, CovarianceModel, TailBehavior};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Fails,
    Undecidable,
}

impl Verdict {
    fn from_bool(b: bool) -> Verdict {
        if b {
            Verdict::Holds
        } else {
            Verdict::Fails
        }
    }

    fn and(self, other: Verdict) -> Verdict {
        match (self, other) {
            (Verdict::Fails, _) | (_, Verdict::Fails) => Verdict::Fails,
            (Verdict::Undecidable, _) | (_, Verdict::Undecidable) => Verdict::Undecidable,
            _ => Verdict::Holds,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AssumptionCheck {
    pub id: String,
    pub condition: String,
    pub verdict: Verdict,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub d: usize,
    pub k: usize,
    pub checks: Vec<AssumptionCheck>,
}

impl AssumptionReport {
    pub fn verdict(&self, id: &str) -> Option<Verdict> {
        self.checks.iter().find(|c| c.id == id).map(|c| c.verdict)
    }

    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.verdict == Verdict::Holds)
    }
}

/// Supremum of `ρ_q` over `q ≥ m`; `exact` is false when lags past a table
/// are unknown, in which case `value` is the tabulated part only.
#[derive(Debug, Clone, Copy)]
struct Sup {
    value: f64,
    exact: bool,
}

fn sup_from(model: &CovarianceModel, m: usize) -> Sup {
    match &model.kind {
        CovarianceKind::Iid => Sup { value: 0.0, exact: true },
        // both families are nonincreasing in q
        CovarianceKind::Geometric { .. } | CovarianceKind::Polynomial { .. } => {
            Sup { value: model.covariance_at(m), exact: true }
        }
        CovarianceKind::FiniteSupport { values } => {
            Sup { value: values.iter().skip(m - 1).fold(0.0f64, |a, &b| a.max(b)), exact: true }
        }
        CovarianceKind::ExplicitTable { values, tail } => {
            let tab = values.iter().skip(m - 1).copied().fold(f64::NEG_INFINITY, f64::max);
            match tail {
                Some(TailBehavior::Zero) => Sup { value: tab.max(0.0), exact: true },
                _ if tab.is_finite() => Sup { value: tab, exact: false },
                _ => Sup { value: f64::NEG_INFINITY, exact: false },
            }
        }
    }
}

/// `0 ≤ sup ≤ hi` with the tabulated-tail semantics of [`Sup`].
fn sup_within(s: Sup, hi: f64) -> Verdict {
    let upper = if s.value > hi {
        Verdict::Fails
    } else if s.exact {
        Verdict::Holds
    } else {
        Verdict::Undecidable
    };
    let lower = if s.value >= 0.0 {
        Verdict::Holds
    } else if s.exact {
        Verdict::Fails
    } else {
        Verdict::Undecidable
    };
    upper.and(lower)
}

fn check(id: &str, condition: &str, verdict: Verdict, detail: String) -> AssumptionCheck {
    AssumptionCheck { id: id.into(), condition: condition.into(), verdict, detail }
}

/// Decide each structural condition on the covariance for homology degree `k`.
///
/// Conditions on finitely many lags are evaluated exactly; the two asymptotic
/// conditions are decided symbolically from the family.
pub fn check_assumptions(model: &CovarianceModel, k: usize) -> AssumptionReport {
    let (r1, r2, r3) = model.leading();
    let d = model.d;
    let mut checks = Vec::new();

    checks.push(check("unit_variance", "rho_0 = 1", Verdict::Holds, "unit variance by construction".into()));
    checks.push(check(
        "first_lag_range",
        "0 <= rho_1 < 1",
        Verdict::from_bool((0.0..1.0).contains(&r1)),
        format!("rho_1 = {r1}"),
    ));

    let a3 = if k == 0 {
        let s = sup_from(model, 2);
        (sup_within(s, r1), format!("sup_(q>=2) rho_q = {}, rho_1 = {r1}", s.value))
    } else {
        let s = sup_from(model, 4);
        let v = sup_within(s, r3).and(Verdict::from_bool(r3 < r2 && r2 < r1));
        (v, format!("sup_(q>=4) rho_q = {}, rho_3 = {r3}, rho_2 = {r2}, rho_1 = {r1}", s.value))
    };
    let cond3 =
        if k == 0 { "0 <= sup_(q>=2) rho_q <= rho_1" } else { "0 <= sup_(q>=4) rho_q <= rho_3 < rho_2 < rho_1" };
    checks.push(check("lag_ordering", cond3, a3.0, a3.1));

    let a4 = if k == 0 {
        (Verdict::Holds, "always holds for k = 0".to_string())
    } else {
        let lhs = 1.0 + (2 * k + 1) as f64 * r2;
        let rhs = 2.0 * (k + 1) as f64 * r1;
        (Verdict::from_bool(lhs > rhs), format!("1 + (2k+1) rho_2 = {lhs}, 2(k+1) rho_1 = {rhs}"))
    };
    checks.push(check("cross_polytope_dominance", "1 + (2k+1) rho_2 > 2(k+1) rho_1", a4.0, a4.1));

    let (a5, a6, why) = asymptotic(model);
    checks.push(check("berman_decay", "rho_q log q -> 0", a5, why.clone()));
    checks.push(check("summable_tail", "sum_q q^(d-1) rho_q < infinity", a6, why));

    let a7 = if k == 0 { Verdict::Holds } else { Verdict::from_bool((0.0..1.0).contains(&r2)) };
    checks.push(check("second_lag_range", "k >= 1: 0 <= rho_2 < 1", a7, format!("rho_2 = {r2}")));

    let a8 = if k == 0 || k + 1 >= d {
        (Verdict::Holds, "vacuous unless 1 <= k < d-1".to_string())
    } else {
        let s = sup_from(model, 4);
        (
            sup_within(s, r3).and(Verdict::from_bool(r3 < r2)),
            format!("sup_(q>=4) rho_q = {}, rho_3 = {r3}, rho_2 = {r2}", s.value),
        )
    };
    checks.push(check("third_lag_ordering", "1 <= k < d-1: 0 <= sup_(q>=4) rho_q <= rho_3 < rho_2", a8.0, a8.1));

    let a9 = if k == 0 {
        let s = sup_from(model, 2);
        (sup_within(s, r1), format!("sup_(q>=2) rho_q = {}, rho_1 = {r1}", s.value))
    } else {
        let s = sup_from(model, 3);
        (
            sup_within(s, r2).and(Verdict::from_bool(r2 < r1)),
            format!("sup_(q>=3) rho_q = {}, rho_2 = {r2}, rho_1 = {r1}", s.value),
        )
    };
    let cond9 = if k == 0 { "0 <= sup_(q>=2) rho_q <= rho_1" } else { "0 <= sup_(q>=3) rho_q <= rho_2 < rho_1" };
    checks.push(check("second_lag_ordering", cond9, a9.0, a9.1));

    AssumptionReport { d, k, checks }
}

fn asymptotic(model: &CovarianceModel) -> (Verdict, Verdict, String) {
    let d = model.d as f64;
    match &model.kind {
        CovarianceKind::Iid | CovarianceKind::FiniteSupport { .. } => {
            (Verdict::Holds, Verdict::Holds, "finitely many nonzero lags".into())
        }
        CovarianceKind::Geometric { rho1, theta } => {
            if *rho1 == 0.0 || *theta < 1.0 {
                (Verdict::Holds, Verdict::Holds, "geometric decay".into())
            } else {
                (Verdict::Fails, Verdict::Fails, "theta = 1 gives a constant positive tail".into())
            }
        }
        CovarianceKind::Polynomial { c, alpha } => {
            if *c == 0.0 {
                return (Verdict::Holds, Verdict::Holds, "c = 0".into());
            }
            (
                Verdict::from_bool(*alpha > 0.0),
                Verdict::from_bool(*alpha > d),
                format!("polynomial decay with alpha = {alpha}, d = {d}"),
            )
        }
        CovarianceKind::ExplicitTable { tail, .. } => match tail {
            Some(TailBehavior::Zero) | Some(TailBehavior::Summable) => {
                (Verdict::Holds, Verdict::Holds, "tail asserted summable".into())
            }
            Some(TailBehavior::LogVanishing) => {
                (Verdict::Holds, Verdict::Undecidable, "tail asserted log-vanishing only".into())
            }
            None => (Verdict::Undecidable, Verdict::Undecidable, "no tail behaviour asserted".into()),
        },
    }
}
