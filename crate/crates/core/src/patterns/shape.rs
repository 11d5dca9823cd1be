//! Small-graph predicates on lattice point sets.

use crate::lattice::{l1, linf, Point, Window};

/// `{±e_1, ..., ±e_{k+1}}` in `Z^d`, lexicographically sorted.
pub fn cross_polytope(k: usize, d: usize) -> Vec<Point> {
    let mut v = Vec::with_capacity(2 * k + 2);
    for i in 0..=k {
        for s in [-1, 1] {
            let mut p = vec![0; d];
            p[i] = s;
            v.push(p);
        }
    }
    v.sort();
    v
}

/// Adjacency matrix of the geometric graph (`L∞` distance one).
pub fn geometric_adjacency(points: &[Point]) -> Vec<Vec<bool>> {
    points.iter().map(|a| points.iter().map(|b| linf(a, b) == 1).collect()).collect()
}

fn next_permutation(p: &mut [usize]) -> bool {
    if p.len() < 2 {
        return false;
    }
    let mut i = p.len() - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = p.len() - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Whether some bijection `π` satisfies `rel_a(i, j) == rel_b(π i, π j)` for all pairs.
fn exists_matching_bijection<T: PartialEq>(
    n: usize,
    rel_a: impl Fn(usize, usize) -> T,
    rel_b: impl Fn(usize, usize) -> T,
) -> bool {
    let mut perm: Vec<usize> = (0..n).collect();
    loop {
        if (0..n).all(|i| (i + 1..n).all(|j| rel_a(i, j) == rel_b(perm[i], perm[j]))) {
            return true;
        }
        if !next_permutation(&mut perm) {
            return false;
        }
    }
}

pub fn graphs_isomorphic(a: &[Vec<bool>], b: &[Vec<bool>]) -> bool {
    let n = a.len();
    if n != b.len() {
        return false;
    }
    let deg = |m: &[Vec<bool>]| {
        let mut d: Vec<usize> = m.iter().map(|r| r.iter().filter(|&&x| x).count()).collect();
        d.sort_unstable();
        d
    };
    deg(a) == deg(b) && exists_matching_bijection(n, |i, j| a[i][j], |i, j| b[i][j])
}

/// Whether some bijection between the two sets preserves all `L1` distances.
pub fn l1_isometric(a: &[Point], b: &[Point]) -> bool {
    a.len() == b.len() && exists_matching_bijection(a.len(), |i, j| l1(&a[i], &a[j]), |i, j| l1(&b[i], &b[j]))
}

/// Geometric graph on `points` is isomorphic to that of the `k`-cross-polytope.
pub fn is_cross_polytope_graph(points: &[Point], k: usize) -> bool {
    if points.len() != 2 * k + 2 {
        return false;
    }
    let d = points[0].len();
    if k + 1 > d {
        return false;
    }
    graphs_isomorphic(&geometric_adjacency(points), &geometric_adjacency(&cross_polytope(k, d)))
}

/// `points` is an `L1`-isometric copy of the `k`-cross-polytope.
pub fn is_cross_polytope_isometric(points: &[Point], k: usize) -> bool {
    if points.len() != 2 * k + 2 {
        return false;
    }
    let d = points[0].len();
    k < d && l1_isometric(points, &cross_polytope(k, d))
}

/// `points = {c ± e_ω : ω ∈ Ω}` for some centre `c` and `|Ω| = k+1`.
pub fn is_centred_cross_polytope(points: &[Point], k: usize) -> bool {
    if points.len() != 2 * k + 2 {
        return false;
    }
    let d = points[0].len();
    let mut sum = vec![0i64; d];
    for p in points {
        for (s, &x) in sum.iter_mut().zip(p) {
            *s += x as i64;
        }
    }
    let m = points.len() as i64;
    if sum.iter().any(|s| s % m != 0) {
        return false;
    }
    let centre: Vec<i32> = sum.iter().map(|s| (s / m) as i32).collect();
    let mut dirs = Vec::new();
    for p in points {
        let diff: Vec<i32> = p.iter().zip(&centre).map(|(a, b)| a - b).collect();
        let nz: Vec<usize> = (0..d).filter(|&i| diff[i] != 0).collect();
        if nz.len() != 1 || diff[nz[0]].abs() != 1 {
            return false;
        }
        dirs.push((nz[0], diff[nz[0]]));
    }
    dirs.sort_unstable();
    dirs.dedup();
    dirs.len() == points.len() && dirs.chunks(2).all(|c| c.len() == 2 && c[0].0 == c[1].0)
}

/// Some lattice point at `L∞` distance exactly one from every point.
pub fn common_linf_neighbour(points: &[Point]) -> Option<Point> {
    let d = points.first()?.len();
    let lo: Vec<i32> = (0..d).map(|i| points.iter().map(|p| p[i]).min().unwrap() - 1).collect();
    let hi: Vec<i32> = (0..d).map(|i| points.iter().map(|p| p[i]).max().unwrap() + 1).collect();
    let radius = (0..d).map(|i| (hi[i] - lo[i]) as usize).max().unwrap_or(0);
    Window::new(d, radius)
        .points()
        .map(|o| o.iter().zip(&lo).map(|(a, b)| a + b + radius as i32).collect::<Point>())
        .filter(|c| c.iter().zip(&hi).all(|(a, b)| a <= b))
        .find(|c| points.iter().all(|p| linf(p, c) == 1))
}

/// Every vertex has exactly one non-neighbour, and it sits at `L∞` distance two.
pub fn has_unique_far_antipodes(points: &[Point]) -> bool {
    points.iter().all(|a| {
        let non: Vec<&Point> = points.iter().filter(|b| *b != a && linf(a, b) != 1).collect();
        non.len() == 1 && linf(a, non[0]) == 2
    })
}

/// Lexicographically smallest index set `V1`, `1 ≤ |V1| ≤ k+1`, whose points
/// are at `L1` distance at least three from all remaining points.
pub fn far_partition(points: &[Point], k: usize) -> Option<Vec<u32>> {
    let n = points.len();
    let mut candidates: Vec<Vec<usize>> =
        (1..=(k + 1).min(n.saturating_sub(1))).flat_map(|s| crate::lattice::combinations(n, s)).collect();
    candidates.sort();
    candidates
        .into_iter()
        .find(|v1| (0..n).filter(|j| !v1.contains(j)).all(|j| v1.iter().all(|&i| l1(&points[i], &points[j]) >= 3)))
        .map(|v| v.into_iter().map(|i| i as u32).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_polytope_recognition() {
        let o1 = cross_polytope(1, 2);
        assert!(is_cross_polytope_graph(&o1, 1));
        assert!(is_cross_polytope_isometric(&o1, 1));
        assert!(is_centred_cross_polytope(&o1, 1));
        // unit square: a 4-cycle in L∞ but not a diamond in L1
        let square = vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]];
        assert!(!is_cross_polytope_graph(&square, 1));
        let bent = vec![vec![0, 0, 0], vec![1, 1, 0], vec![0, 1, 1], vec![1, 0, 1]];
        assert!(!is_cross_polytope_graph(&bent, 1));
    }

    #[test]
    fn common_neighbour_and_antipodes() {
        let o = cross_polytope(2, 3);
        assert_eq!(common_linf_neighbour(&o), Some(vec![0, 0, 0]));
        assert!(has_unique_far_antipodes(&o));
        assert_eq!(common_linf_neighbour(&[vec![0, 0], vec![3, 0]]), None);
    }

    #[test]
    fn partition_rule() {
        let pts = vec![vec![0, 0], vec![0, 1], vec![5, 5]];
        assert_eq!(far_partition(&pts, 1), Some(vec![0, 1]));
        assert_eq!(far_partition(&cross_polytope(1, 2), 1), None);
    }
}
