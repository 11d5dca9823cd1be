use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::catalog::{Family, PatternCatalog};
use super::shape::{is_cross_polytope_graph, is_cross_polytope_isometric};
use super::weights::{p_instances, SearchCaps};
use crate::complex::{connected_components, BettiVector, CliqueComplex};
use crate::error::{Error, Result};
use crate::field::FieldSample;
use crate::lattice::{combinations, norm_inf, Point, Window};

/// Window-sum approximators and their component-level counterparts for one
/// degree `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApproximatorCounts {
    pub k: usize,
    pub s: u64,
    pub s_check: u64,
    pub n: u64,
    pub n_check: u64,
    pub l: u128,
    pub l_check: u128,
    pub d_boundary: u64,
    pub c_beta: u64,
}

/// The N- and P-catalogs for one `(d, k)`.
#[derive(Debug, Clone)]
pub struct Catalogs {
    pub n: PatternCatalog,
    pub p: PatternCatalog,
}

impl Catalogs {
    pub fn build(d: usize, k: usize) -> Result<Self> {
        Self::load(&super::CatalogStore::in_memory(), d, k)
    }

    pub fn load(store: &super::CatalogStore, d: usize, k: usize) -> Result<Self> {
        Ok(Catalogs { n: store.load_or_build(d, k, Family::N)?, p: store.load_or_build(d, k, Family::P)? })
    }

    pub fn c_beta(&self) -> u64 {
        if self.p.k == 1 {
            self.p.c_beta_1
        } else {
            1
        }
    }
}

fn check_k(sample: &FieldSample, k: usize) -> Result<()> {
    if k >= sample.d {
        return Err(Error::InvalidParameter(format!("need k < d, got k = {k}, d = {}", sample.d)));
    }
    Ok(())
}

/// Flat-index offsets of `±e_ω` for each `Ω` with `|Ω| = k+1`.
fn cross_offsets(window: &Window, k: usize) -> Vec<Vec<isize>> {
    let strides = window.strides();
    combinations(window.d, k + 1)
        .into_iter()
        .map(|omega| omega.iter().flat_map(|&w| [strides[w] as isize, -(strides[w] as isize)]).collect())
        .collect()
}

fn cross_sum(sample: &FieldSample, u: f64, k: usize, boundary_only: bool) -> u64 {
    let hot = sample.hot_mask(u);
    let outer = sample.window();
    let inner = Window::new(sample.d, sample.n);
    if k == 0 {
        return inner
            .points()
            .filter(|t| !boundary_only || norm_inf(t) == sample.n as i32)
            .filter(|t| hot[outer.index(t).unwrap()])
            .count() as u64;
    }
    let offs = cross_offsets(&outer, k);
    let mut total = 0;
    for t in inner.points() {
        if boundary_only && norm_inf(&t) != sample.n as i32 {
            continue;
        }
        let c = outer.index(&t).unwrap() as isize;
        total += offs.iter().filter(|o| o.iter().all(|&x| hot[(c + x) as usize])).count() as u64;
    }
    total
}

/// Hot cross-polytopes centred in `Γ_n`; hot sites when `k = 0`.
pub fn count_s(sample: &FieldSample, u: f64, k: usize) -> Result<u64> {
    check_k(sample, k)?;
    Ok(cross_sum(sample, u, k, false))
}

/// The part of [`count_s`] centred on the boundary `‖t‖_∞ = n`; zero for `k = 0`.
pub fn count_d(sample: &FieldSample, u: f64, k: usize) -> Result<u64> {
    check_k(sample, k)?;
    Ok(if k == 0 { 0 } else { cross_sum(sample, u, k, true) })
}

fn window_sum(sample: &FieldSample, u: f64, patterns: &[Vec<Point>]) -> u64 {
    let hot = sample.hot_mask(u);
    let outer = sample.window();
    let strides = outer.strides();
    let offs: Vec<Vec<isize>> = patterns
        .iter()
        .map(|vs| vs.iter().map(|v| v.iter().zip(&strides).map(|(&x, &s)| x as isize * s as isize).sum()).collect())
        .collect();
    Window::new(sample.d, sample.n)
        .points()
        .map(|t| {
            let c = outer.index(&t).unwrap() as isize;
            offs.iter().filter(|o| o.iter().all(|&x| hot[(c + x) as usize])).count() as u64
        })
        .sum()
}

/// `Σ_{t ∈ Γ_n} Σ_{G ∈ N-catalog} 1{all of t + V(G) hot}`; zero for `k ∈ {0, d-1}`.
pub fn count_n(sample: &FieldSample, u: f64, k: usize, catalog: &PatternCatalog) -> Result<u64> {
    check_k(sample, k)?;
    if catalog.family != Family::N || catalog.k != k || catalog.d != sample.d {
        return Err(Error::InvalidParameter("catalog does not match the sample and degree".into()));
    }
    if k == 0 || k + 1 == sample.d {
        return Ok(0);
    }
    let pats: Vec<Vec<Point>> = catalog.patterns.iter().map(|p| p.vertices.clone()).collect();
    Ok(window_sum(sample, u, &pats))
}

/// Hot sites of the sampled window `Γ_{n+1}`.
pub fn hot_sites(sample: &FieldSample, u: f64) -> Vec<Point> {
    let w = sample.window();
    sample.values.iter().enumerate().filter(|(_, &x)| x >= u).map(|(i, _)| w.point(i)).collect()
}

/// `Σ_{t ∈ Γ_n} Σ_{G ∈ P-family} 1{all of t + V(G) hot}`, where sites outside
/// the sampled window `Γ_{n+1}` count as not hot.
pub fn count_l(sample: &FieldSample, u: f64, k: usize, caps: SearchCaps) -> Result<u128> {
    check_k(sample, k)?;
    p_instances(&hot_sites(sample, u), k, sample.n, caps)
}

/// [`count_l`] for `k = 0` evaluated term by term from the explicit catalog.
pub fn count_l_from_catalog(sample: &FieldSample, u: f64, catalog: &PatternCatalog) -> Result<u128> {
    if catalog.family != Family::P || catalog.enumeration != super::Enumeration::Explicit {
        return Err(Error::InvalidParameter("needs an explicit P catalog".into()));
    }
    let pats: Vec<Vec<Point>> = catalog.patterns.iter().map(|p| p.vertices.clone()).collect();
    Ok(window_sum(sample, u, &pats) as u128)
}

/// Component-level counts `(Š, Ň)`: minimal components that are isometric
/// cross-polytopes, and those matching an N-pattern.
pub fn count_components(complex: &CliqueComplex, k: usize, n_catalog: &PatternCatalog) -> (u64, u64) {
    let comps = connected_components(complex);
    if k == 0 {
        return (comps.iter().filter(|c| c.len() == 1).count() as u64, 0);
    }
    let known: HashSet<Vec<Point>> = n_catalog.vertex_sets();
    let (mut s, mut nn) = (0, 0);
    for c in comps.iter().filter(|c| c.len() == 2 * k + 2) {
        let pts: Vec<Point> = c.iter().map(|&i| complex.vertices[i as usize].clone()).collect();
        if !is_cross_polytope_graph(&pts, k) {
            continue;
        }
        if is_cross_polytope_isometric(&pts, k) {
            s += 1;
        } else if matches_translate(&pts, &known) {
            nn += 1;
        }
    }
    (s, nn)
}

fn matches_translate(pts: &[Point], known: &HashSet<Vec<Point>>) -> bool {
    let d = pts[0].len();
    let lo: Vec<i32> = (0..d).map(|i| pts.iter().map(|p| p[i]).max().unwrap() - 1).collect();
    let hi: Vec<i32> = (0..d).map(|i| pts.iter().map(|p| p[i]).min().unwrap() + 1).collect();
    if lo.iter().zip(&hi).any(|(a, b)| a > b) {
        return false;
    }
    let mut t = lo.clone();
    loop {
        let mut shifted: Vec<Point> = pts.iter().map(|p| p.iter().zip(&t).map(|(a, b)| a - b).collect()).collect();
        shifted.sort();
        if known.contains(&shifted) {
            return true;
        }
        let mut i = d;
        loop {
            if i == 0 {
                return false;
            }
            i -= 1;
            if t[i] < hi[i] {
                t[i] += 1;
                break;
            }
            t[i] = lo[i];
        }
    }
}

/// All approximators for degree `k` on one sample at level `u`; `complex`
/// must be the excursion complex of the same sample and level.
pub fn compute_counts(
    sample: &FieldSample,
    complex: &CliqueComplex,
    u: f64,
    k: usize,
    catalogs: &Catalogs,
    caps: SearchCaps,
) -> Result<ApproximatorCounts> {
    let (s_check, n_check) = count_components(complex, k, &catalogs.n);
    Ok(ApproximatorCounts {
        k,
        s: count_s(sample, u, k)?,
        s_check,
        n: count_n(sample, u, k, &catalogs.n)?,
        n_check,
        l: count_l(sample, u, k, caps)?,
        l_check: p_instances(&complex.vertices, k, sample.n, caps)?,
        d_boundary: count_d(sample, u, k)?,
        c_beta: catalogs.c_beta(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub name: String,
    pub lhs: i128,
    pub rhs: i128,
    pub holds: bool,
}

/// Every inequality linking `β_k` to the approximators.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SandwichLedger {
    pub k: usize,
    pub beta: u64,
    pub counts: ApproximatorCounts,
    pub checks: Vec<InequalityCheck>,
}

impl SandwichLedger {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }
}

pub fn verify_sandwich(complex: &CliqueComplex, betti: &BettiVector, counts: &ApproximatorCounts) -> SandwichLedger {
    let k = counts.k;
    let beta = betti.get(k) as i128;
    let c = counts.c_beta as i128;
    let s = counts.s as i128;
    let sc = counts.s_check as i128;
    let n = counts.n as i128;
    let nc = counts.n_check as i128;
    let l = i128::try_from(counts.l).unwrap_or(i128::MAX);
    let lc = i128::try_from(counts.l_check).unwrap_or(i128::MAX);
    let dd = counts.d_boundary as i128;
    let comps = connected_components(complex).len() as i128;
    let sat = |a: i128, b: i128| a.saturating_add(b);
    let mul = |a: i128, b: i128| a.saturating_mul(b);
    let le = |name: &str, lhs: i128, rhs: i128| InequalityCheck { name: name.into(), lhs, rhs, holds: lhs <= rhs };
    let checks = vec![
        le("S_check <= beta", sc, beta),
        le("beta <= S_check + N_check + c L_check", beta, sat(sat(sc, nc), mul(c, lc))),
        le("S_check <= S", sc, s),
        le("S <= S_check + c L_check + D", s, sat(sat(sc, mul(c, lc)), dd)),
        le("N_check <= N", nc, n),
        le("L_check <= L", lc, l),
        le("|beta - S| <= N + c L + D", (beta - s).abs(), sat(sat(n, mul(c, l)), dd)),
        le("S_check + N_check <= components", sc + nc, comps),
    ];
    SandwichLedger { k, beta: betti.get(k), counts: *counts, checks }
}
