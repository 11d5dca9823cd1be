use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::shape::{
    common_linf_neighbour, cross_polytope, far_partition, geometric_adjacency, graphs_isomorphic,
    is_cross_polytope_isometric,
};
use super::weights::{admits_p_pattern, count_cliques};
use crate::error::{Error, Result};
use crate::lattice::{combinations, linf, Point, Window};

/// Environment variable naming the catalog cache directory.
pub const CACHE_DIR_ENV: &str = "EXCURSION_CACHE_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    /// Non-isometric copies of the cross-polytope graph inside `Γ_1`.
    N,
    /// Connected subgraphs of the geometric graph on `Γ_{2k+1}` that certify
    /// a non-minimal component.
    P,
}

/// How the members of a catalog are represented.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Enumeration {
    /// Every member is listed.
    Explicit,
    /// Members are characterized by [`PatternCatalog::contains`]; the list is
    /// too large to store.
    Rule,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pattern {
    /// Sites in lexicographic order.
    pub vertices: Vec<Point>,
    /// Index pairs `i < j`.
    pub edges: Vec<[u32; 2]>,
    /// For N-patterns, the smallest index set `V1` with `|V1| ≤ k+1` whose
    /// sites are at `L1` distance at least three from the rest.
    pub partition: Option<Vec<u32>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternCatalog {
    pub d: usize,
    pub k: usize,
    pub family: Family,
    pub enumeration: Enumeration,
    pub patterns: Vec<Pattern>,
    pub c_beta_1: u64,
    pub fingerprint: String,
}

/// Largest dimension and degree with enumerated catalogs.
pub const MAX_CATALOG_D: usize = 3;
pub const MAX_CATALOG_K: usize = 2;

fn check_range(d: usize, k: usize) -> Result<()> {
    if d == 0 || k >= d {
        return Err(Error::InvalidParameter(format!("need 0 <= k < d, got d = {d}, k = {k}")));
    }
    if d > MAX_CATALOG_D || k > MAX_CATALOG_K {
        return Err(Error::LimitExceeded(format!(
            "catalogs are enumerated for d <= 3 and k <= 2, got d = {d}, k = {k}"
        )));
    }
    Ok(())
}

fn induced_edges(points: &[Point]) -> Vec<[u32; 2]> {
    let mut e = Vec::new();
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            if linf(&points[i], &points[j]) == 1 {
                e.push([i as u32, j as u32]);
            }
        }
    }
    e
}

/// Number of edges of the geometric graph on `Γ_r` in `Z^d`.
pub fn geometric_edge_count(d: usize, r: usize) -> u64 {
    let side = (2 * r + 1) as u64;
    // ordered pairs with every coordinate within one, minus the diagonal
    ((side + 2 * (side - 1)).pow(d as u32) - side.pow(d as u32)) / 2
}

pub fn build_catalog(d: usize, k: usize, family: Family) -> Result<PatternCatalog> {
    check_range(d, k)?;
    let (enumeration, patterns, c_beta_1) = match family {
        Family::N => (Enumeration::Explicit, n_patterns(d, k)?, 1),
        Family::P if k == 0 => {
            let pts: Vec<Point> = Window::new(d, 1).points().collect();
            let mut pats = Vec::new();
            for i in 0..pts.len() {
                for j in i + 1..pts.len() {
                    if linf(&pts[i], &pts[j]) == 1 {
                        pats.push(Pattern {
                            vertices: vec![pts[i].clone(), pts[j].clone()],
                            edges: vec![[0, 1]],
                            partition: None,
                        });
                    }
                }
            }
            (Enumeration::Explicit, pats, 1)
        }
        Family::P => {
            let c = if k == 1 {
                // the whole geometric graph on Γ_3 is itself a member, so it
                // attains the largest edge count
                let full: Vec<Point> = Window::new(d, 3).points().collect();
                let edges = induced_edges(&full);
                assert!(admits_p_pattern(&full, &edges, 1), "full graph on the reference cube is a P-pattern");
                edges.len() as u64
            } else {
                1
            };
            (Enumeration::Rule, Vec::new(), c)
        }
    };
    let mut cat = PatternCatalog { d, k, family, enumeration, patterns, c_beta_1, fingerprint: String::new() };
    cat.fingerprint = cat.compute_fingerprint();
    Ok(cat)
}

fn n_patterns(d: usize, k: usize) -> Result<Vec<Pattern>> {
    if k == 0 {
        return Ok(Vec::new());
    }
    let pts: Vec<Point> = Window::new(d, 1).points().collect();
    let size = 2 * k + 2;
    let reference = geometric_adjacency(&cross_polytope(k, d));
    let full = geometric_adjacency(&pts);
    let mut out = Vec::new();
    for combo in combinations(pts.len(), size) {
        // the cross-polytope graph is (2k)-regular
        if combo.iter().any(|&i| combo.iter().filter(|&&j| full[i][j]).count() != 2 * k) {
            continue;
        }
        let verts: Vec<Point> = combo.iter().map(|&i| pts[i].clone()).collect();
        if !graphs_isomorphic(&geometric_adjacency(&verts), &reference) || is_cross_polytope_isometric(&verts, k) {
            continue;
        }
        if common_linf_neighbour(&verts).is_none() {
            return Err(Error::InvalidParameter(format!("pattern {verts:?} lacks a common L-infinity neighbour")));
        }
        let partition = far_partition(&verts, k)
            .ok_or_else(|| Error::InvalidParameter(format!("pattern {verts:?} admits no distant partition")))?;
        let edges = induced_edges(&verts);
        out.push(Pattern { vertices: verts, edges, partition: Some(partition) });
    }
    Ok(out)
}

impl PatternCatalog {
    pub fn compute_fingerprint(&self) -> String {
        let body = serde_json::json!({
            "d": self.d, "k": self.k, "family": self.family, "enumeration": self.enumeration,
            "patterns": self.patterns, "c_beta_1": self.c_beta_1,
        });
        hex::encode(Sha256::digest(body.to_string().as_bytes()))
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    /// Membership of a placed subgraph, by the defining rule of the family.
    pub fn contains(&self, vertices: &[Point], edges: &[[u32; 2]]) -> bool {
        let mut sorted = vertices.to_vec();
        sorted.sort();
        match self.family {
            Family::N => self.patterns.iter().any(|p| p.vertices == sorted),
            Family::P => {
                let window = Window::new(self.d, 2 * self.k + 1);
                vertices.iter().all(|v| window.contains(v)) && admits_p_pattern(vertices, edges, self.k)
            }
        }
    }

    /// Vertex sets of explicit members, for lookup.
    pub fn vertex_sets(&self) -> HashSet<Vec<Point>> {
        self.patterns.iter().map(|p| p.vertices.clone()).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("catalog serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let cat: PatternCatalog = serde_json::from_str(s)?;
        let fp = cat.compute_fingerprint();
        if fp != cat.fingerprint {
            return Err(Error::CacheMismatch(format!(
                "stored fingerprint {} does not match content {fp}",
                cat.fingerprint
            )));
        }
        Ok(cat)
    }
}

/// Catalogs cached on disk, one file per `(d, k, family)`.
#[derive(Debug, Clone)]
pub struct CatalogStore {
    dir: Option<PathBuf>,
}

impl CatalogStore {
    pub fn in_memory() -> Self {
        CatalogStore { dir: None }
    }

    pub fn at(dir: impl AsRef<Path>) -> Self {
        CatalogStore { dir: Some(dir.as_ref().to_path_buf()) }
    }

    /// Directory from [`CACHE_DIR_ENV`], or memory only when unset.
    pub fn from_env() -> Self {
        match std::env::var_os(CACHE_DIR_ENV) {
            Some(d) if !d.is_empty() => Self::at(d),
            _ => Self::in_memory(),
        }
    }

    fn path(&self, d: usize, k: usize, family: Family) -> Option<PathBuf> {
        self.dir.as_ref().map(|dir| dir.join(format!("catalog-d{d}-k{k}-{family:?}.json")))
    }

    pub fn load_or_build(&self, d: usize, k: usize, family: Family) -> Result<PatternCatalog> {
        check_range(d, k)?;
        if let Some(path) = self.path(d, k, family) {
            if path.exists() {
                let cat = PatternCatalog::from_json(&std::fs::read_to_string(&path)?)?;
                if (cat.d, cat.k, cat.family) != (d, k, family) {
                    return Err(Error::CacheMismatch(format!("{} holds a different catalog", path.display())));
                }
                return Ok(cat);
            }
            let cat = build_catalog(d, k, family)?;
            std::fs::create_dir_all(path.parent().expect("file in a directory"))?;
            std::fs::write(&path, cat.to_json())?;
            return Ok(cat);
        }
        build_catalog(d, k, family)
    }
}

/// Check the structural facts every catalog must satisfy; returns one
/// message per violation.
pub fn catalog_violations(cat: &PatternCatalog) -> Vec<String> {
    let mut out = Vec::new();
    let k = cat.k;
    match cat.family {
        Family::N => {
            if (k == 0 || k + 1 == cat.d) && !cat.patterns.is_empty() {
                out.push(format!("N catalog for d = {}, k = {k} should be empty", cat.d));
            }
            let reference = geometric_adjacency(&cross_polytope(k, cat.d));
            for p in &cat.patterns {
                if p.vertices.len() != 2 * k + 2 || !graphs_isomorphic(&geometric_adjacency(&p.vertices), &reference) {
                    out.push(format!("{:?} is not a cross-polytope graph", p.vertices));
                }
                if is_cross_polytope_isometric(&p.vertices, k) {
                    out.push(format!("{:?} is isometric to the cross-polytope", p.vertices));
                }
                if common_linf_neighbour(&p.vertices).is_none() {
                    out.push(format!("{:?} has no common neighbour", p.vertices));
                }
                match &p.partition {
                    Some(v1) if far_partition(&p.vertices, k).as_ref() == Some(v1) => {}
                    _ => out.push(format!("{:?} carries a wrong partition", p.vertices)),
                }
            }
        }
        Family::P => {
            for p in &cat.patterns {
                if !cat.contains(&p.vertices, &p.edges) {
                    out.push(format!("{:?} violates the defining rule", p.vertices));
                }
                if k >= 2 && count_cliques(p.vertices.len(), &p.edges, k + 1) != 1 {
                    out.push(format!("{:?} lacks a unique clique", p.vertices));
                }
            }
        }
    }
    if cat.compute_fingerprint() != cat.fingerprint {
        out.push("fingerprint mismatch".into());
    }
    out
}
