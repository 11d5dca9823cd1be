//! Lattice points, cubic windows and distances.

/// A point of `Z^d`.
pub type Point = Vec<i32>;

/// The cube `Γ_r = {t : ‖t‖_∞ ≤ r}` in `Z^d`, indexed lexicographically
/// (first coordinate most significant).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub d: usize,
    pub radius: usize,
}

impl Window {
    pub fn new(d: usize, radius: usize) -> Self {
        Window { d, radius }
    }

    pub fn side(&self) -> usize {
        2 * self.radius + 1
    }

    pub fn len(&self) -> usize {
        self.side().pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.d == 0
    }

    pub fn contains(&self, p: &[i32]) -> bool {
        let r = self.radius as i64;
        p.len() == self.d && p.iter().all(|&x| (x as i64).abs() <= r)
    }

    pub fn index(&self, p: &[i32]) -> Option<usize> {
        if !self.contains(p) {
            return None;
        }
        let side = self.side();
        let r = self.radius as i64;
        Some(p.iter().fold(0usize, |acc, &x| acc * side + (x as i64 + r) as usize))
    }

    pub fn point(&self, mut idx: usize) -> Point {
        let side = self.side();
        let mut p = vec![0i32; self.d];
        for slot in p.iter_mut().rev() {
            *slot = (idx % side) as i32 - self.radius as i32;
            idx /= side;
        }
        p
    }

    /// Strides of the lexicographic index, one per coordinate.
    pub fn strides(&self) -> Vec<usize> {
        let side = self.side();
        let mut s = vec![1usize; self.d];
        for i in (0..self.d.saturating_sub(1)).rev() {
            s[i] = s[i + 1] * side;
        }
        s
    }

    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.len()).map(move |i| self.point(i))
    }
}

pub fn l1(a: &[i32], b: &[i32]) -> i32 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

pub fn linf(a: &[i32], b: &[i32]) -> i32 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).max().unwrap_or(0)
}

pub fn norm_inf(a: &[i32]) -> i32 {
    a.iter().map(|x| x.abs()).max().unwrap_or(0)
}

/// Lattice neighbours at `L∞` distance exactly one.
pub fn adjacent(a: &[i32], b: &[i32]) -> bool {
    linf(a, b) == 1
}

/// Nonzero offsets of `{-1,0,1}^d`.
pub fn unit_offsets(d: usize) -> Vec<Point> {
    Window::new(d, 1).points().filter(|p| p.iter().any(|&x| x != 0)).collect()
}

pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut c: Vec<usize> = (0..k).collect();
    loop {
        out.push(c.clone());
        let mut i = k;
        while i > 0 && c[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        c[i - 1] += 1;
        for j in i..k {
            c[j] = c[j - 1] + 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_round_trip() {
        let w = Window::new(3, 2);
        for i in 0..w.len() {
            assert_eq!(w.index(&w.point(i)), Some(i));
        }
        assert_eq!(w.point(0), vec![-2, -2, -2]);
        assert_eq!(w.point(1), vec![-2, -2, -1]);
    }

    #[test]
    fn combinations_are_lexicographic() {
        assert_eq!(combinations(4, 2), vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
        assert_eq!(combinations(3, 0), vec![Vec::<usize>::new()]);
        assert_eq!(combinations(5, 3).len() as u64, binomial(5, 3));
    }

    #[test]
    fn offsets() {
        assert_eq!(unit_offsets(2).len(), 8);
        assert_eq!(unit_offsets(3).len(), 26);
    }
}
