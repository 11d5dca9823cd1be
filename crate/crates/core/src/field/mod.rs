//! Stationary Gaussian fields on `Z^d` with `L1`-isotropic covariance.
//!
//! A [`CovarianceModel`] fixes `ρ_q = Cov(X_t, X_s)` for `‖t-s‖_1 = q`.
//! Samples cover `Γ_{n+1}` so that patterns centred in `Γ_n` that reach one
//! step outside can be evaluated. Windows of at most [`DENSE_LIMIT`] sites
//! are drawn through a dense Cholesky factor, larger ones through circulant
//! embedding on a torus. Independent fields skip both.

mod assumptions;
mod model;
mod sample;
mod sampler;

pub use assumptions::{check_assumptions, AssumptionCheck, AssumptionReport, Verdict};
pub use model::{CovarianceKind, CovarianceModel, TailBehavior};
pub use sample::FieldSample;
pub use sampler::{
    derive_seed, rng_from_seed, sample_field, torus_side, validate_window_covariance, CovarianceDiagnostic,
    FieldSampler, SamplingMethod, DENSE_LIMIT, PSD_TOLERANCE,
};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn model_json_round_trip() {
        let m = CovarianceModel::geometric(2, 0.3, 0.5).unwrap();
        let s = m.to_json();
        assert_eq!(s, r#"{"kind":"geometric","params":{"rho1":0.3,"theta":0.5},"d":2}"#);
        assert_eq!(CovarianceModel::from_json(&s).unwrap(), m);
        let iid = CovarianceModel::from_json(r#"{"kind":"iid","d":3}"#).unwrap();
        assert!(iid.is_iid());
        let t = CovarianceModel::from_json(r#"{"kind":"explicit_table","params":{"values":[0.2,0.1]},"d":1}"#).unwrap();
        assert_eq!(t.covariance_at(2), 0.1);
        assert_eq!(t.covariance_at(5), 0.0);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(CovarianceModel::geometric(2, 1.0, 0.5).is_err());
        assert!(CovarianceModel::geometric(2, 0.3, 1.5).is_err());
        assert!(CovarianceModel::geometric(0, 0.3, 0.5).is_err());
        assert!(CovarianceModel::from_json(r#"{"kind":"polynomial","params":{"c":4.0,"alpha":1.0},"d":2}"#).is_err());
    }

    #[test]
    fn geometric_a4_fails_for_k1() {
        let m = CovarianceModel::geometric(2, 0.49, 0.2).unwrap();
        let r = check_assumptions(&m, 1);
        assert_eq!(r.verdict("cross_polytope_dominance"), Some(Verdict::Fails));
        assert_eq!(r.verdict("first_lag_range"), Some(Verdict::Holds));
        assert_eq!(r.verdict("berman_decay"), Some(Verdict::Holds));
        assert_eq!(r.verdict("summable_tail"), Some(Verdict::Holds));
        assert_eq!(check_assumptions(&m, 0).verdict("cross_polytope_dominance"), Some(Verdict::Holds));
    }

    #[test]
    fn polynomial_asymptotics() {
        let slow = CovarianceModel::new(CovarianceKind::Polynomial { c: 0.5, alpha: 1.5 }, 2).unwrap();
        let r = check_assumptions(&slow, 0);
        assert_eq!(r.verdict("berman_decay"), Some(Verdict::Holds));
        assert_eq!(r.verdict("summable_tail"), Some(Verdict::Fails));
        let fast = CovarianceModel::new(CovarianceKind::Polynomial { c: 0.5, alpha: 2.5 }, 2).unwrap();
        assert_eq!(check_assumptions(&fast, 0).verdict("summable_tail"), Some(Verdict::Holds));
    }

    #[test]
    fn explicit_table_tail_decisions() {
        let open =
            CovarianceModel::new(CovarianceKind::ExplicitTable { values: vec![0.3, 0.2, 0.1], tail: None }, 2).unwrap();
        let r = check_assumptions(&open, 0);
        assert_eq!(r.verdict("berman_decay"), Some(Verdict::Undecidable));
        assert_eq!(r.verdict("summable_tail"), Some(Verdict::Undecidable));
        let closed = CovarianceModel::new(
            CovarianceKind::ExplicitTable { values: vec![0.3, 0.2, 0.1], tail: Some(TailBehavior::Zero) },
            2,
        )
        .unwrap();
        assert!(check_assumptions(&closed, 0).all_hold());
        let bad =
            CovarianceModel::new(CovarianceKind::ExplicitTable { values: vec![0.3, 0.5], tail: None }, 2).unwrap();
        assert_eq!(check_assumptions(&bad, 0).verdict("lag_ordering"), Some(Verdict::Fails));
    }

    #[test]
    fn iid_sample_shape_and_determinism() {
        let m = CovarianceModel::iid(2);
        let a = sample_field(&m, 3, 11).unwrap();
        let b = sample_field(&m, 3, 11).unwrap();
        assert_eq!(a.values.len(), 81);
        assert_eq!(a, b);
        assert_ne!(a.values, sample_field(&m, 3, 12).unwrap().values);
        let v = a.excursion_vertices(f64::NEG_INFINITY);
        assert_eq!(v.len(), 49);
        assert!(v.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn explicit_table_not_psd() {
        let m = CovarianceModel::new(CovarianceKind::ExplicitTable { values: vec![0.99, 0.0], tail: None }, 1).unwrap();
        match validate_window_covariance(&m, 2) {
            Err(Error::NotPsd { min_eigenvalue }) => {
                let exact = 1.0 - 1.98 * (std::f64::consts::PI / 8.0).cos();
                assert!((min_eigenvalue - exact).abs() < 1e-12, "{min_eigenvalue} vs {exact}");
            }
            other => panic!("expected NotPsd, got {other:?}"),
        }
        assert!(matches!(sample_field(&m, 2, 1), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn method_selection() {
        let m = CovarianceModel::geometric(2, 0.3, 0.5).unwrap();
        assert_eq!(FieldSampler::new(&m, 5).unwrap().method(), SamplingMethod::DenseCholesky);
        assert_eq!(FieldSampler::new(&m, 31).unwrap().method(), SamplingMethod::CirculantEmbedding);
        assert_eq!(torus_side(31), 256);
        assert_eq!(FieldSampler::new(&CovarianceModel::iid(2), 31).unwrap().method(), SamplingMethod::Identity);
    }

    #[test]
    fn derived_seeds_differ() {
        let s: std::collections::HashSet<u64> = (0..1000).map(|i| derive_seed(7, i)).collect();
        assert_eq!(s.len(), 1000);
        assert_ne!(derive_seed(7, 0), derive_seed(8, 0));
    }

    #[test]
    fn csv_export() {
        let s = FieldSample::from_values(1, 0, vec![0.5, -1.25, 2.0]);
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "t_1,value\n-1,0.5\n0,-1.25\n1,2.0\n");
    }
}
