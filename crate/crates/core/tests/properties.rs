use std::collections::HashSet;

use nalgebra::DMatrix;
use proptest::prelude::*;

use excursion_core::complex::{betti, betti_of_component, build_complex, connected_components};
use excursion_core::field::{check_assumptions, sample_field, CovarianceModel, Verdict};
use excursion_core::lattice::{linf, Point, Window};
use excursion_core::montecarlo::{run_experiment, summarize, tv_to_poisson, ExperimentConfig, LevelMode};
use excursion_core::patterns::{compute_counts, count_s, verify_sandwich, CatalogStore, Catalogs, SearchCaps};
use excursion_core::theory::{
    dense_eigenvalues, lambda, level_schedule, make_params, savage_bracket, scheduled_lambda, structured_det,
    structured_eig, transition_threshold, StructuredMatrixSpec,
};

fn subset(d: usize, radius: usize, mask: &[bool]) -> Vec<Point> {
    Window::new(d, radius).points().zip(mask.iter().cycle()).filter(|(_, &keep)| keep).map(|(p, _)| p).collect()
}

fn site_sets() -> impl Strategy<Value = (usize, Vec<Point>)> {
    (1usize..=3, prop::collection::vec(any::<bool>(), 1..64)).prop_map(|(d, mask)| {
        let radius = if d == 3 { 1 } else { 2 };
        (d, subset(d, radius, &mask))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn faces_are_cliques_and_closed_under_subsets((d, verts) in site_sets()) {
        let cx = build_complex(&verts, (1 << d) - 1).unwrap();
        let faces: HashSet<Vec<u32>> = cx.faces_by_dim.iter().flatten().cloned().collect();
        for f in &faces {
            for (i, &a) in f.iter().enumerate() {
                for &b in &f[i + 1..] {
                    prop_assert_eq!(linf(&cx.vertices[a as usize], &cx.vertices[b as usize]), 1);
                }
                if f.len() > 1 {
                    let mut sub = f.clone();
                    sub.remove(i);
                    prop_assert!(faces.contains(&sub));
                }
            }
        }
        for (i, a) in cx.vertices.iter().enumerate() {
            for (j, b) in cx.vertices.iter().enumerate().skip(i + 1) {
                prop_assert_eq!(faces.contains(&vec![i as u32, j as u32]), linf(a, b) == 1);
            }
        }
    }

    #[test]
    fn euler_characteristic_and_face_bounds((d, verts) in site_sets()) {
        let top = (1 << d) - 1;
        let cx = build_complex(&verts, top + 1).unwrap();
        prop_assert_eq!(cx.num_faces(top + 1), 0);
        let b = betti(&cx, top, 2).unwrap();
        let sign = |k: usize| if k.is_multiple_of(2) { 1i64 } else { -1 };
        let faces: i64 = (0..=top).map(|k| sign(k) * cx.num_faces(k) as i64).sum();
        let bettis: i64 = (0..=top).map(|k| sign(k) * b.get(k) as i64).sum();
        prop_assert_eq!(faces, bettis);
        for k in 0..=top {
            prop_assert!(b.get(k) <= cx.num_faces(k) as u64);
        }
        prop_assert_eq!(b.get(0), connected_components(&cx).len() as u64);
        if !verts.is_empty() {
            prop_assert!(b.get(0) >= 1);
        }
    }

    #[test]
    fn betti_numbers_add_over_components((d, verts) in site_sets()) {
        let cx = build_complex(&verts, d).unwrap();
        let b = betti(&cx, d - 1, 2).unwrap();
        let comps = connected_components(&cx);
        for k in 0..d {
            let sum: u64 = comps.iter().map(|c| betti_of_component(&cx, c, k).unwrap()).sum();
            prop_assert_eq!(sum, b.get(k));
        }
    }

    #[test]
    fn odd_prime_agrees_on_lattice_complexes((d, verts) in site_sets()) {
        let cx = build_complex(&verts, d).unwrap();
        prop_assert_eq!(betti(&cx, d - 1, 2).unwrap().values, betti(&cx, d - 1, 3).unwrap().values);
    }

    #[test]
    fn samples_are_pure_functions_of_the_seed(seed in any::<u64>(), n in 1usize..4, rho1 in 0.0f64..0.4, theta in 0.1f64..0.9) {
        let model = CovarianceModel::geometric(2, rho1, theta).unwrap();
        prop_assume!(sample_field(&model, n, seed).is_ok());
        let a = sample_field(&model, n, seed).unwrap();
        let b = sample_field(&model, n, seed).unwrap();
        prop_assert_eq!(a.values.len(), (2 * n + 3) * (2 * n + 3));
        prop_assert_eq!(a.values, b.values);
    }

    #[test]
    fn sandwich_holds_on_random_fields(seed in any::<u64>(), d in 1usize..=3, u in 0.5f64..2.5, geometric in any::<bool>()) {
        let n = if d == 3 { 1 } else { 3 };
        let model = if geometric { CovarianceModel::geometric(d, 0.3, 0.5).unwrap() } else { CovarianceModel::iid(d) };
        let sample = sample_field(&model, n, seed).unwrap();
        let store = CatalogStore::in_memory();
        prop_assert_eq!(count_s(&sample, u, 0).unwrap(), sample.excursion_vertices(u).len() as u64);
        for k in 0..d {
            let cx = build_complex(&sample.excursion_vertices(u), k + 1).unwrap();
            let b = betti(&cx, k, 2).unwrap();
            let cats = Catalogs::load(&store, d, k).unwrap();
            let counts = match compute_counts(&sample, &cx, u, k, &cats, SearchCaps::default()) {
                Ok(c) => c,
                Err(excursion_core::Error::SearchCapExceeded { .. }) => continue,
                Err(e) => panic!("{e}"),
            };
            if k == 0 || k + 1 == d {
                prop_assert_eq!(counts.n, 0);
            }
            if k == 0 {
                prop_assert_eq!(counts.d_boundary, 0);
            }
            let ledger = verify_sandwich(&cx, &b, &counts);
            prop_assert!(ledger.all_hold(), "{:?}", ledger.checks);
        }
    }

    #[test]
    fn clique_condition_verdict_is_the_literal_inequality(rho1 in 0.0f64..0.99, theta in 0.01f64..0.99, k in 0usize..3) {
        let model = CovarianceModel::geometric(3, rho1, theta).unwrap();
        let (r1, r2, _) = model.leading();
        let want = k == 0 || 1.0 + (2 * k + 1) as f64 * r2 > 2.0 * (k + 1) as f64 * r1;
        let want = if want { Verdict::Holds } else { Verdict::Fails };
        prop_assert_eq!(check_assumptions(&model, k).verdict("cross_polytope_dominance"), Some(want));
    }

    #[test]
    fn tv_ignores_order(mut xs in prop::collection::vec(0u64..12, 1..200), lam in 0.0f64..10.0, rot in 0usize..200) {
        let a = tv_to_poisson(&xs, lam).unwrap();
        let r = rot % xs.len();
        xs.rotate_left(r);
        xs.reverse();
        prop_assert_eq!(a, tv_to_poisson(&xs, lam).unwrap());
        prop_assert!((0.0..=1.0).contains(&a));
    }
}

fn dominant(r1: f64, r2: f64, k: usize) -> bool {
    k == 0 || 1.0 + (2 * k + 1) as f64 * r2 > 2.0 * (k + 1) as f64 * r1
}

/// Ordered lags `ρ₃ < ρ₂ < ρ₁`; clique dominance is filtered per degree.
fn admissible_lags() -> impl Strategy<Value = (f64, f64, f64)> {
    (0.01f64..0.45, 0.05f64..0.95, 0.05f64..0.95).prop_map(|(r1, a, b)| (r1, r1 * a, r1 * a * b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn rate_invariants_hold_under_the_assumptions((r1, r2, r3) in admissible_lags(), d in 1usize..=3, k in 0usize..3) {
        prop_assume!(k < d);
        prop_assume!(dominant(r1, r2, k));
        let p = make_params(d, k, r1, r2, r3).unwrap();
        prop_assert!(p.invariants_hold(), "{:?}", p.checks);
    }

    #[test]
    fn lambda_decreases_in_the_level((r1, r2, r3) in admissible_lags(), k in 0usize..3, u in 0.5f64..8.0, du in 0.01f64..2.0, n in 1usize..100) {
        prop_assume!(dominant(r1, r2, k));
        let p = make_params(3, k, r1, r2, r3).unwrap();
        prop_assert!(lambda(&p, n, u + du).unwrap() < lambda(&p, n, u).unwrap());
    }

    #[test]
    fn schedule_targets_exp_minus_nu(nu in -2.0f64..2.0, d in 1usize..=3, k in 0usize..3) {
        prop_assume!(k < d);
        let p = make_params(d, k, 0.0, 0.0, 0.0).unwrap();
        let ratio = |n: usize| lambda(&p, n, level_schedule(&p, n, nu).unwrap()).unwrap() / (-nu).exp();
        for n in [10_000, 1_000_000_000_000_000] {
            let closed = scheduled_lambda(&p, n, nu).unwrap() / (-nu).exp();
            prop_assert!((ratio(n) - closed).abs() <= 1e-9 * closed);
            let threshold = transition_threshold(&p, n).unwrap();
            prop_assert!((threshold - level_schedule(&p, n, 0.0).unwrap().powi(2)).abs() <= 1e-12 * threshold);
        }
        // the log-ratio factor decays like log log / log; for nu <= 0 it falls monotonically to 1
        if nu <= 0.0 {
            prop_assert!(1.0 < ratio(1_000_000_000_000_000));
            prop_assert!(ratio(1_000_000_000_000_000) < ratio(10_000));
        }
    }

    // fails: at n = 10^4 the log-ratio factor alone is about 1.05 for d = 2, k = 0, nu = 0
    #[test]
    #[ignore = "the log-ratio factor exceeds 5% at n = 10^4; run with --ignored to see it fail"]
    fn schedule_within_five_percent_at_ten_thousand(nu in -2.0f64..2.0, d in 1usize..=3, k in 0usize..3) {
        prop_assume!(k < d);
        let p = make_params(d, k, 0.0, 0.0, 0.0).unwrap();
        let n = 10_000;
        let ratio = lambda(&p, n, level_schedule(&p, n, nu).unwrap()).unwrap() / (-nu).exp();
        prop_assert!((ratio - 1.0).abs() < 0.05, "ratio {}", ratio);
    }

    #[test]
    fn top_degree_has_the_smallest_threshold((r1, r2, r3) in admissible_lags(), d in 2usize..=3, n in 5usize..1000) {
        prop_assume!((0..d).all(|k| dominant(r1, r2, k)));
        let t: Vec<f64> = (0..d).map(|k| transition_threshold(&make_params(d, k, r1, r2, r3).unwrap(), n).unwrap()).collect();
        let argmin = (0..d).min_by(|&a, &b| t[a].total_cmp(&t[b])).unwrap();
        prop_assert_eq!(argmin, d - 1, "{:?}", t);
    }

    #[test]
    fn equicorrelated_closed_forms_match_dense(m in 1usize..9, x in 0.0f64..1.0) {
        let lo = if m > 1 { -1.0 / (m as f64 - 1.0) } else { -1.0 };
        let spec = StructuredMatrixSpec::Wm { m, rho: lo + x * (1.0 - lo) };
        let dense = spec.dense();
        let eig = structured_eig(&spec).unwrap();
        for (a, b) in eig.values.iter().zip(dense_eigenvalues(&dense)) {
            prop_assert!((a - b).abs() <= 1e-10 * (m as f64));
        }
        let det = structured_det(&spec).unwrap();
        prop_assert!((det - dense.determinant()).abs() <= 1e-10 * det.abs().max(1e-2));
    }

    #[test]
    fn savage_lower_never_exceeds_upper(entries in prop::collection::vec(-1.0f64..1.0, 36), dim in 1usize..=6, levels in prop::collection::vec(0.5f64..4.0, 6)) {
        let a = DMatrix::from_fn(dim, dim, |i, j| entries[i * 6 + j]);
        let m = &a * a.transpose() + DMatrix::identity(dim, dim) * 0.5;
        if let Ok(b) = savage_bracket(&m, &levels[..dim]) {
            prop_assert!(b.lower <= b.upper);
            prop_assert!(b.upper > 0.0);
        }
    }
}

#[test]
fn summaries_are_recomputed_from_rows() {
    let mut c = ExperimentConfig::new(
        CovarianceModel::geometric(2, 0.3, 0.5).unwrap(),
        vec![0, 1],
        vec![3, 5],
        LevelMode::Fixed { u: 1.5 },
        40,
        99,
    );
    c.bootstrap_resamples = 200;
    let r = run_experiment(&c, 3).unwrap();
    assert_eq!(r.rows.len(), 2 * 2 * 40);
    assert_eq!(summarize(&c, &r.rows).unwrap(), r.summaries);
}
