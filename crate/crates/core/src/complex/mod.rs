//! Excursion complexes and their homology.
//!
//! Vertices are lattice sites; two sites are joined when their `L∞` distance
//! is one, and every clique spans a face. Because `L∞` balls are boxes, a set
//! of sites has a common point in their half-unit boxes exactly when it is
//! pairwise adjacent, so this clique complex is also the nerve of the boxes.
//! [`cech_faces_by_witness`] builds that nerve directly from box
//! intersections and serves as an independent route to the same faces.

mod homology;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{adjacent, l1, Point};

pub use homology::{betti, betti_of_component, boundary_rank, BettiVector};

/// Default cap on the total number of faces.
pub const FACE_CAP: usize = 10_000_000;
/// Default cap on the component size searched for distant vertices.
pub const WITNESS_SEARCH_CAP: usize = 64;

/// Clique complex of a finite set of lattice sites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CliqueComplex {
    pub vertices: Vec<Point>,
    /// `faces_by_dim[j]` lists the `j`-faces as increasing vertex indices,
    /// in lexicographic order.
    pub faces_by_dim: Vec<Vec<Vec<u32>>>,
}

impl CliqueComplex {
    pub fn max_dim(&self) -> usize {
        self.faces_by_dim.len().saturating_sub(1)
    }

    pub fn num_faces(&self, dim: usize) -> usize {
        self.faces_by_dim.get(dim).map_or(0, |f| f.len())
    }

    pub fn edges(&self) -> &[Vec<u32>] {
        self.faces_by_dim.get(1).map_or(&[], |f| f.as_slice())
    }

    /// Neighbour lists of the 1-skeleton.
    pub fn adjacency(&self) -> Vec<Vec<u32>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for e in self.edges() {
            adj[e[0] as usize].push(e[1]);
            adj[e[1] as usize].push(e[0]);
        }
        for a in adj.iter_mut() {
            a.sort_unstable();
        }
        adj
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("complex serializes")
    }
}

/// Build the clique complex on `vertices` up to dimension `max_dim`.
pub fn build_complex(vertices: &[Point], max_dim: usize) -> Result<CliqueComplex> {
    build_complex_capped(vertices, max_dim, FACE_CAP)
}

pub fn build_complex_capped(vertices: &[Point], max_dim: usize, cap: usize) -> Result<CliqueComplex> {
    let mut vertices = vertices.to_vec();
    vertices.sort();
    vertices.dedup();
    if let Some(d) = vertices.first().map(|v| v.len()) {
        if vertices.iter().any(|v| v.len() != d) {
            return Err(Error::InvalidParameter("vertices of mixed dimension".into()));
        }
    }
    let forward = forward_neighbours(&vertices);
    let mut faces_by_dim: Vec<Vec<Vec<u32>>> = vec![Vec::new(); max_dim + 1];
    let mut total = 0usize;
    let mut clique = Vec::with_capacity(max_dim + 1);
    for v in 0..vertices.len() as u32 {
        clique.clear();
        clique.push(v);
        extend_cliques(&forward, &mut clique, &forward[v as usize], max_dim, &mut faces_by_dim, &mut total, cap)?;
    }
    Ok(CliqueComplex { vertices, faces_by_dim })
}

fn forward_neighbours(vertices: &[Point]) -> Vec<Vec<u32>> {
    let index: HashMap<&Point, u32> = vertices.iter().enumerate().map(|(i, p)| (p, i as u32)).collect();
    let d = vertices.first().map_or(0, |v| v.len());
    let offsets = crate::lattice::unit_offsets(d);
    let mut probe = vec![0i32; d];
    vertices
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut out: Vec<u32> = offsets
                .iter()
                .filter_map(|o| {
                    for ((slot, a), b) in probe.iter_mut().zip(p).zip(o) {
                        *slot = a + b;
                    }
                    index.get(&probe).copied().filter(|&j| j as usize > i)
                })
                .collect();
            out.sort_unstable();
            out
        })
        .collect()
}

fn extend_cliques(
    forward: &[Vec<u32>],
    clique: &mut Vec<u32>,
    candidates: &[u32],
    max_dim: usize,
    faces: &mut [Vec<Vec<u32>>],
    total: &mut usize,
    cap: usize,
) -> Result<()> {
    *total += 1;
    if *total > cap {
        return Err(Error::FaceExplosion { cap });
    }
    faces[clique.len() - 1].push(clique.clone());
    if clique.len() > max_dim {
        return Ok(());
    }
    for (pos, &c) in candidates.iter().enumerate() {
        let next: Vec<u32> =
            candidates[pos + 1..].iter().copied().filter(|x| forward[c as usize].binary_search(x).is_ok()).collect();
        clique.push(c);
        extend_cliques(forward, clique, &next, max_dim, faces, total, cap)?;
        clique.pop();
    }
    Ok(())
}

/// Faces of the nerve of the closed boxes `t + [-1/2, 1/2]^d`, found by
/// intersecting boxes rather than by testing adjacency.
pub fn cech_faces_by_witness(vertices: &[Point], max_dim: usize) -> Vec<Vec<Vec<u32>>> {
    let mut vertices = vertices.to_vec();
    vertices.sort();
    vertices.dedup();
    let d = vertices.first().map_or(0, |v| v.len());
    // coordinates doubled so the boxes have integer ends
    let mut faces = vec![Vec::new(); max_dim + 1];
    fn rec(
        vertices: &[Point],
        start: usize,
        lo: &[i64],
        hi: &[i64],
        current: &mut Vec<u32>,
        max_dim: usize,
        faces: &mut [Vec<Vec<u32>>],
    ) {
        for j in start..vertices.len() {
            let p = &vertices[j];
            let nlo: Vec<i64> = lo.iter().zip(p).map(|(&l, &x)| l.max(2 * x as i64 - 1)).collect();
            let nhi: Vec<i64> = hi.iter().zip(p).map(|(&h, &x)| h.min(2 * x as i64 + 1)).collect();
            if nlo.iter().zip(&nhi).any(|(l, h)| l > h) {
                continue;
            }
            current.push(j as u32);
            faces[current.len() - 1].push(current.clone());
            if current.len() <= max_dim {
                rec(vertices, j + 1, &nlo, &nhi, current, max_dim, faces);
            }
            current.pop();
        }
    }
    let lo = vec![i64::MIN; d];
    let hi = vec![i64::MAX; d];
    rec(&vertices, 0, &lo, &hi, &mut Vec::new(), max_dim, &mut faces);
    for f in faces.iter_mut() {
        f.sort();
    }
    faces
}

/// Connected components of the 1-skeleton as sorted vertex-index lists,
/// ordered by smallest vertex.
pub fn connected_components(complex: &CliqueComplex) -> Vec<Vec<u32>> {
    let mut uf = UnionFind::new(complex.vertices.len());
    for e in complex.edges() {
        uf.union(e[0] as usize, e[1] as usize);
    }
    uf.groups()
}

/// Disjoint-set forest with path halving and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect(), size: vec![1; n] }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }

    pub fn groups(&mut self) -> Vec<Vec<u32>> {
        let n = self.parent.len();
        let mut slot: HashMap<usize, usize> = HashMap::new();
        let mut out: Vec<Vec<u32>> = Vec::new();
        for v in 0..n {
            let r = self.find(v);
            let i = *slot.entry(r).or_insert_with(|| {
                out.push(Vec::new());
                out.len() - 1
            });
            out[i].push(v as u32);
        }
        out
    }
}

/// Find `2k+2` vertices of `component` with pairwise `L1` distance at least
/// two. Components larger than `cap` are refused.
pub fn distant_vertex_witness(
    complex: &CliqueComplex,
    component: &[u32],
    k: usize,
    cap: usize,
) -> Result<Option<Vec<u32>>> {
    if component.len() > cap {
        return Err(Error::SearchCapExceeded { cap: cap as u64, what: "searching for distant vertices".into() });
    }
    let target = 2 * k + 2;
    let pts: Vec<&Point> = component.iter().map(|&i| &complex.vertices[i as usize]).collect();
    Ok(far_subset(&pts, target).map(|idx| idx.into_iter().map(|i| component[i]).collect()))
}

/// Indices of `target` points with pairwise `L1` distance at least two.
pub fn far_subset(points: &[&Point], target: usize) -> Option<Vec<usize>> {
    fn rec(points: &[&Point], start: usize, chosen: &mut Vec<usize>, target: usize) -> bool {
        if chosen.len() == target {
            return true;
        }
        if points.len() - start < target - chosen.len() {
            return false;
        }
        for j in start..points.len() {
            if chosen.iter().all(|&i| l1(points[i], points[j]) >= 2) {
                chosen.push(j);
                if rec(points, j + 1, chosen, target) {
                    return true;
                }
                chosen.pop();
            }
        }
        false
    }
    let mut chosen = Vec::with_capacity(target);
    rec(points, 0, &mut chosen, target).then_some(chosen)
}

/// Outcome of checking that every component carrying degree-`k` homology
/// contains `2k+2` mutually distant vertices.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct WitnessReport {
    pub components_checked: usize,
    pub skipped_over_cap: usize,
    pub missing: usize,
}

pub fn check_distant_vertices(complex: &CliqueComplex, k: usize, cap: usize) -> Result<WitnessReport> {
    let comps = connected_components(complex);
    let mut report = WitnessReport::default();
    if k == 0 {
        if comps.len() >= 2 {
            report.components_checked = comps.len();
            let a = &complex.vertices[comps[0][0] as usize];
            let b = &complex.vertices[comps[1][0] as usize];
            if l1(a, b) < 2 || adjacent(a, b) {
                report.missing += 1;
            }
        }
        return Ok(report);
    }
    for comp in &comps {
        if betti_of_component(complex, comp, k)? == 0 {
            continue;
        }
        report.components_checked += 1;
        match distant_vertex_witness(complex, comp, k, cap) {
            Ok(Some(_)) => {}
            Ok(None) => report.missing += 1,
            Err(Error::SearchCapExceeded { .. }) => report.skipped_over_cap += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring() -> Vec<Point> {
        let mut v = Vec::new();
        for x in -1..=1 {
            for y in -1..=1 {
                if (x, y) != (0, 0) {
                    v.push(vec![x, y]);
                }
            }
        }
        v
    }

    #[test]
    fn square_ring_has_one_loop() {
        let c = build_complex(&ring(), 2).unwrap();
        assert_eq!(c.num_faces(0), 8);
        assert_eq!(c.num_faces(1), 12);
        assert_eq!(c.num_faces(2), 4);
        assert_eq!(betti(&c, 1, 2).unwrap().values, vec![1, 1]);
        assert_eq!(betti(&c, 1, 3).unwrap().values, vec![1, 1]);
    }

    #[test]
    fn diamond_and_octahedron() {
        let diamond = vec![vec![1, 0], vec![-1, 0], vec![0, 1], vec![0, -1]];
        assert_eq!(betti(&build_complex(&diamond, 2).unwrap(), 1, 2).unwrap().values, vec![1, 1]);
        let mut oct = Vec::new();
        for i in 0..3 {
            for s in [-1, 1] {
                let mut p = vec![0; 3];
                p[i] = s;
                oct.push(p);
            }
        }
        let c = build_complex(&oct, 3).unwrap();
        assert_eq!(c.num_faces(2), 8);
        assert_eq!(betti(&c, 2, 2).unwrap().values, vec![1, 0, 1]);
    }

    #[test]
    fn full_cube_is_contractible() {
        let cube: Vec<Point> = crate::lattice::Window::new(3, 1).points().collect();
        let c = build_complex(&cube, 3).unwrap();
        assert_eq!(betti(&c, 2, 2).unwrap().values, vec![1, 0, 0]);
    }

    #[test]
    fn face_cap() {
        let cube: Vec<Point> = crate::lattice::Window::new(3, 1).points().collect();
        assert!(matches!(build_complex_capped(&cube, 3, 10), Err(Error::FaceExplosion { .. })));
    }

    #[test]
    fn faces_sorted_and_match_nerve() {
        let c = build_complex(&ring(), 3).unwrap();
        for fs in &c.faces_by_dim {
            assert!(fs.windows(2).all(|w| w[0] < w[1]));
        }
        assert_eq!(cech_faces_by_witness(&ring(), 3), c.faces_by_dim);
    }

    #[test]
    fn witnesses() {
        let c = build_complex(&ring(), 2).unwrap();
        let comps = connected_components(&c);
        assert_eq!(comps.len(), 1);
        let w = distant_vertex_witness(&c, &comps[0], 1, 64).unwrap().unwrap();
        assert_eq!(w.len(), 4);
        assert!(distant_vertex_witness(&c, &comps[0], 1, 4).is_err());
        let r = check_distant_vertices(&c, 1, 64).unwrap();
        assert_eq!((r.components_checked, r.missing), (1, 0));
    }

    #[test]
    fn bad_prime_and_short_complex() {
        let c = build_complex(&ring(), 1).unwrap();
        assert!(betti(&c, 0, 4).is_err());
        assert!(betti(&c, 1, 2).is_err());
    }
}
