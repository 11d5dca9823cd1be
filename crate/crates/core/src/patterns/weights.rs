//! Counting placed P-patterns inside a set of hot sites.
//!
//! A P-pattern is a subgraph `(V, E)` of the geometric graph; distinct edge
//! sets on the same vertices are distinct patterns. For a connected vertex
//! set `V` that meets the size and spacing rules, [`vertex_set_weight`]
//! counts the admissible edge sets, and every translate `t ∈ Γ_n` that places
//! `V` inside `t + Γ_{2k+1}` contributes that weight once.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::complex::{far_subset, UnionFind};
use crate::error::{Error, Result};
use crate::lattice::{linf, unit_offsets, Point};

/// Work limits for pattern enumeration, applied per connected component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchCaps {
    /// Connected vertex sets visited.
    pub expansions: u64,
    /// Steps spent counting edge sets.
    pub weight_work: u64,
}

impl Default for SearchCaps {
    fn default() -> Self {
        SearchCaps { expansions: 1_000_000, weight_work: 100_000_000 }
    }
}

fn connected(n: usize, edges: &[[u32; 2]]) -> bool {
    if n == 0 {
        return false;
    }
    let mut uf = UnionFind::new(n);
    let mut merges = 0;
    for e in edges {
        if uf.union(e[0] as usize, e[1] as usize) {
            merges += 1;
        }
    }
    merges + 1 == n
}

/// Number of `size`-subsets of `0..n` that are cliques of `(0..n, edges)`.
pub fn count_cliques(n: usize, edges: &[[u32; 2]], size: usize) -> u64 {
    let mut adj = vec![0u64; n];
    for e in edges {
        adj[e[0] as usize] |= 1 << e[1];
        adj[e[1] as usize] |= 1 << e[0];
    }
    fn rec(adj: &[u64], cand: u64, left: usize) -> u64 {
        if left == 0 {
            return 1;
        }
        let mut total = 0;
        let mut c = cand;
        while c != 0 {
            let v = c.trailing_zeros() as usize;
            c &= c - 1;
            total += rec(adj, c & adj[v], left - 1);
        }
        total
    }
    if n > 64 {
        return 0;
    }
    rec(&adj, if n == 64 { u64::MAX } else { (1u64 << n) - 1 }, size)
}

fn fits(vertices: &[Point], k: usize) -> bool {
    let d = vertices.first().map_or(0, |v| v.len());
    let reach = (4 * k + 2) as i32;
    (0..d).all(|i| {
        let lo = vertices.iter().map(|v| v[i]).min().unwrap();
        let hi = vertices.iter().map(|v| v[i]).max().unwrap();
        hi - lo <= reach
    })
}

/// Whether the placed subgraph is, up to translation, a member of the
/// degree-`k` P-family.
pub fn admits_p_pattern(vertices: &[Point], edges: &[[u32; 2]], k: usize) -> bool {
    let n = vertices.len();
    if n == 0 || !fits(vertices, k) {
        return false;
    }
    if edges
        .iter()
        .any(|e| e[0] >= e[1] || e[1] as usize >= n || linf(&vertices[e[0] as usize], &vertices[e[1] as usize]) != 1)
    {
        return false;
    }
    let mut dedup = edges.to_vec();
    dedup.sort_unstable();
    dedup.dedup();
    if dedup.len() != edges.len() || !connected(n, edges) {
        return false;
    }
    if k == 0 {
        return n == 2;
    }
    let refs: Vec<&Point> = vertices.iter().collect();
    if n < 2 * k + 3 || far_subset(&refs, 2 * k + 2).is_none() {
        return false;
    }
    k == 1 || count_cliques(n, edges, k + 1) == 1
}

/// Number of edge sets `E` on the geometric graph of `vertices` such that
/// `(vertices, E)` is admissible, given that the vertex conditions hold.
pub fn vertex_set_weight(vertices: &[Point], k: usize, cap: u64, work: &mut u64) -> Result<u128> {
    let n = vertices.len();
    let edges = geometric_edges(vertices);
    match k {
        0 => Ok(if n == 2 && edges.len() == 1 { 1 } else { 0 }),
        1 => connected_spanning_subgraphs(n, &edges, cap, work),
        _ => unique_clique_subgraphs(n, &edges, k + 1, cap, work),
    }
}

fn geometric_edges(vertices: &[Point]) -> Vec<[u32; 2]> {
    let n = vertices.len();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if linf(&vertices[i], &vertices[j]) == 1 {
                edges.push([i as u32, j as u32]);
            }
        }
    }
    edges
}

fn over_cap(cap: u64, what: &str) -> Error {
    Error::SearchCapExceeded { cap, what: what.into() }
}

/// Connected spanning subgraphs of `(0..n, edges)`, by inclusion–exclusion
/// over the part containing the lowest vertex, or by the merged edge search
/// above [`SUBSET_LIMIT`] vertices.
pub fn connected_spanning_subgraphs(n: usize, edges: &[[u32; 2]], cap: u64, work: &mut u64) -> Result<u128> {
    if n == 0 {
        return Ok(0);
    }
    if n > SUBSET_LIMIT {
        if n > 64 || edges.len() > 128 {
            return Err(over_cap(cap, "counting connected spanning subgraphs"));
        }
        return merged_count(n, edges, None, cap, work);
    }
    let cost = 3f64.powi(n as i32);
    if *work as f64 + cost > cap as f64 {
        return Err(over_cap(cap, "counting connected spanning subgraphs"));
    }
    *work += cost as u64;
    let mut adj = vec![0u32; n];
    for e in edges {
        adj[e[0] as usize] |= 1 << e[1];
        adj[e[1] as usize] |= 1 << e[0];
    }
    let size = 1usize << n;
    let mut ecount = vec![0u32; size];
    for mask in 1..size {
        let v = mask.trailing_zeros() as usize;
        let rest = mask & (mask - 1);
        ecount[mask] = ecount[rest] + (adj[v] & rest as u32).count_ones();
    }
    let pow2 = |e: u32| -> Result<u128> {
        1u128.checked_shl(e).filter(|_| e < 128).ok_or_else(|| Error::CountOverflow("counting edge sets".into()))
    };
    let mut conn = vec![0u128; size];
    for mask in 1..size {
        let low = mask & mask.wrapping_neg();
        let rest = mask ^ low;
        let mut total = pow2(ecount[mask])?;
        // proper subsets of `rest`, each joined with the lowest vertex
        let mut sub = rest;
        loop {
            sub = sub.wrapping_sub(1) & rest;
            if sub == rest {
                break;
            }
            let part = sub | low;
            if conn[part] != 0 {
                let term = conn[part]
                    .checked_mul(pow2(ecount[mask ^ part])?)
                    .ok_or_else(|| Error::CountOverflow("counting edge sets".into()))?;
                total -= term;
            }
            if sub == 0 {
                break;
            }
        }
        conn[mask] = total;
    }
    Ok(conn[size - 1])
}

/// Largest vertex set whose connected spanning subgraphs are counted by the
/// shared subset recursion; larger sets use the merged edge search.
const SUBSET_LIMIT: usize = 16;

/// Leaf budget for direct enumeration before switching to the merged search.
const ENUMERATION_BUDGET: u64 = 1 << 12;

/// Connected spanning subgraphs with exactly one clique on `clique` vertices.
///
/// Small counts are enumerated edge by edge. When that exceeds
/// [`ENUMERATION_BUDGET`] steps the count is redone by a search that merges
/// equivalent partial choices.
pub fn unique_clique_subgraphs(n: usize, edges: &[[u32; 2]], clique: usize, cap: u64, work: &mut u64) -> Result<u128> {
    if n == 0 || n > 64 || edges.len() > 128 || clique < 3 {
        return Err(over_cap(cap, "counting unique-clique subgraphs"));
    }
    let budget = ENUMERATION_BUDGET.min(cap.saturating_sub(*work));
    let mut steps = 0;
    if let Some(c) = enumerate_unique_clique(n, edges, clique, budget, &mut steps) {
        *work += steps;
        return Ok(c);
    }
    *work += steps;
    merged_count(n, edges, Some(clique), cap, work)
}

fn clique_count_through(adj: &[u64], a: usize, b: usize, size: usize) -> u64 {
    fn rec(adj: &[u64], cand: u64, left: usize) -> u64 {
        if left == 0 {
            return 1;
        }
        let mut t = 0;
        let mut c = cand;
        while c != 0 {
            let v = c.trailing_zeros() as usize;
            c &= c - 1;
            t += rec(adj, c & adj[v], left - 1);
        }
        t
    }
    rec(adj, adj[a] & adj[b], size - 2)
}

fn spans(adj: &[u64], extra: &[u64], full: u64) -> bool {
    let mut seen = 1u64;
    let mut frontier = 1u64;
    while frontier != 0 {
        let v = frontier.trailing_zeros() as usize;
        frontier &= frontier - 1;
        let fresh = (adj[v] | extra[v]) & full & !seen;
        seen |= fresh;
        frontier |= fresh;
    }
    seen == full
}

/// Edge-by-edge enumeration; `None` once `budget` steps are spent.
fn enumerate_unique_clique(n: usize, edges: &[[u32; 2]], clique: usize, budget: u64, steps: &mut u64) -> Option<u128> {
    struct St<'a> {
        edges: &'a [[u32; 2]],
        clique: usize,
        full: u64,
        adj: Vec<u64>,
        // adjacency over edges[i..], indexed by i
        rest: Vec<Vec<u64>>,
        none: Vec<u64>,
        budget: u64,
    }
    fn rec(st: &mut St, i: usize, cliques: u64, steps: &mut u64) -> Option<u128> {
        *steps += 1;
        if *steps > st.budget {
            return None;
        }
        if i == st.edges.len() {
            return Some(u128::from(cliques == 1 && spans(&st.adj, &st.none, st.full)));
        }
        if !spans(&st.adj, &st.rest[i], st.full) {
            return Some(0);
        }
        let mut total = rec(st, i + 1, cliques, steps)?;
        let [a, b] = st.edges[i];
        let (a, b) = (a as usize, b as usize);
        let extra = clique_count_through(&st.adj, a, b, st.clique);
        if cliques + extra <= 1 {
            st.adj[a] |= 1 << b;
            st.adj[b] |= 1 << a;
            let r = rec(st, i + 1, cliques + extra, steps);
            st.adj[a] &= !(1 << b);
            st.adj[b] &= !(1 << a);
            total += r?;
        }
        Some(total)
    }
    let mut rest = vec![vec![0u64; n]; edges.len() + 1];
    for i in (0..edges.len()).rev() {
        rest[i] = rest[i + 1].clone();
        let [a, b] = edges[i];
        rest[i][a as usize] |= 1 << b;
        rest[i][b as usize] |= 1 << a;
    }
    let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut st = St { edges, clique, full, adj: vec![0; n], rest, none: vec![0; n], budget };
    rec(&mut st, 0, 0, steps)
}

/// Vertex ranks that keep few vertices waiting on undecided edges: each next
/// vertex has the most already-ranked neighbours, ties broken by fewest
/// unranked ones.
fn sweep_order(n: usize, edges: &[[u32; 2]]) -> Vec<u32> {
    let mut adj = vec![0u64; n];
    for &[a, b] in edges {
        adj[a as usize] |= 1 << b;
        adj[b as usize] |= 1 << a;
    }
    let mut rank = vec![0u32; n];
    let mut placed = 0u64;
    for r in 0..n {
        let v = (0..n)
            .filter(|&v| placed >> v & 1 == 0)
            .max_by_key(|&v| {
                (
                    (adj[v] & placed).count_ones(),
                    std::cmp::Reverse((adj[v] & !placed).count_ones()),
                    std::cmp::Reverse(v),
                )
            })
            .expect("unplaced vertex");
        rank[v] = r as u32;
        placed |= 1 << v;
    }
    rank
}

/// Edges are decided in order of their later endpoint. A vertex is live while
/// it has undecided edges. For triangles, the count from a partial choice
/// onward depends only on the chosen edges between live vertices, on how many
/// finished vertices already close each undecided edge into a triangle
/// (capped at two), on how live vertices are grouped into components, and on
/// the clique count so far, so partial choices are merged on that key. For
/// larger cliques every chosen edge is kept in the key. Without a clique
/// condition only the grouping matters and every connected spanning subgraph
/// is counted. Each new key costs one step per edge.
fn merged_count(n: usize, edges: &[[u32; 2]], clique: Option<usize>, cap: u64, work: &mut u64) -> Result<u128> {
    let rank = sweep_order(n, edges);
    let mut order: Vec<[u32; 2]> = edges
        .iter()
        .map(|&[a, b]| {
            let (x, y) = (rank[a as usize], rank[b as usize]);
            if x < y {
                [x, y]
            } else {
                [y, x]
            }
        })
        .collect();
    order.sort_by_key(|&[a, b]| (b, a));
    let m = order.len();
    // live[i]: vertices with an edge in order[i..]; inner[i]: earlier edges kept in the key
    let mut live = vec![0u64; m + 1];
    for i in (0..m).rev() {
        live[i] = live[i + 1] | (1 << order[i][0]) | (1 << order[i][1]);
    }
    let inner: Vec<u128> = (0..=m)
        .map(|i| {
            let both = |j: usize| match clique {
                None => false,
                Some(3) => (live[i] >> order[j][0]) & (live[i] >> order[j][1]) & 1 == 1,
                Some(_) => true,
            };
            (0..i).filter(|&j| both(j)).fold(0u128, |t, j| t | (1 << j))
        })
        .collect();
    let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };

    struct St<'a> {
        n: usize,
        order: &'a [[u32; 2]],
        clique: Option<usize>,
        live: &'a [u64],
        inner: &'a [u128],
        full: u64,
        cap: u64,
        memo: HashMap<(usize, u64, u128, Vec<u8>, Vec<u8>), u128>,
    }
    fn adjacency(st: &St, chosen: u128) -> Vec<u64> {
        let mut adj = vec![0u64; st.n];
        let mut c = chosen;
        while c != 0 {
            let j = c.trailing_zeros() as usize;
            c &= c - 1;
            let [a, b] = st.order[j];
            adj[a as usize] |= 1 << b;
            adj[b as usize] |= 1 << a;
        }
        adj
    }
    // component labels of live vertices, or None when a finished component
    // can no longer join the rest
    fn partition(adj: &[u64], live: u64, full: u64) -> Option<Vec<u8>> {
        let mut label = vec![u8::MAX; adj.len()];
        let mut seen = 0u64;
        let mut next = 0u8;
        let mut comps = 0;
        let mut lonely = false;
        let mut todo = full;
        while todo != 0 {
            let s = todo.trailing_zeros() as usize;
            let mut comp = 1u64 << s;
            let mut frontier = comp;
            while frontier != 0 {
                let v = frontier.trailing_zeros() as usize;
                frontier &= frontier - 1;
                let fresh = adj[v] & !comp;
                comp |= fresh;
                frontier |= fresh;
            }
            seen |= comp;
            todo &= !seen;
            comps += 1;
            if comp & live == 0 {
                lonely = true;
            } else {
                let mut c = comp & live;
                while c != 0 {
                    let v = c.trailing_zeros() as usize;
                    c &= c - 1;
                    label[v] = next;
                }
                next += 1;
            }
        }
        if lonely && comps > 1 {
            return None;
        }
        let mut out = Vec::new();
        let mut l = live;
        while l != 0 {
            let v = l.trailing_zeros() as usize;
            l &= l - 1;
            out.push(label[v]);
        }
        Some(out)
    }
    fn rec(st: &mut St, i: usize, chosen: u128, cliques: u64, work: &mut u64) -> Result<u128> {
        let adj = adjacency(st, chosen);
        let Some(parts) = partition(&adj, st.live[i], st.full) else {
            return Ok(0);
        };
        if i == st.order.len() {
            return Ok(u128::from(parts.is_empty() && (st.clique.is_none() || cliques == 1)));
        }
        let closing: Vec<u8> = if st.clique == Some(3) {
            let done = st.full & !st.live[i];
            st.order[i..]
                .iter()
                .map(|&[a, b]| (adj[a as usize] & adj[b as usize] & done).count_ones().min(2) as u8)
                .collect()
        } else {
            Vec::new()
        };
        let key = (i, cliques, chosen & st.inner[i], closing, parts);
        if let Some(&c) = st.memo.get(&key) {
            return Ok(c);
        }
        *work += st.order.len() as u64;
        if *work > st.cap {
            return Err(over_cap(st.cap, "counting unique-clique subgraphs"));
        }
        let mut total = rec(st, i + 1, chosen, cliques, work)?;
        let [a, b] = st.order[i];
        let extra = st.clique.map_or(0, |c| clique_count_through(&adj, a as usize, b as usize, c));
        if cliques + extra <= 1 {
            total += rec(st, i + 1, chosen | (1 << i), cliques + extra, work)?;
        }
        st.memo.insert(key, total);
        Ok(total)
    }
    let mut st = St { n, order: &order, clique, live: &live, inner: &inner, full, cap, memo: HashMap::new() };
    rec(&mut st, 0, 0, 0, work)
}

/// Memoized connected-spanning-subgraph counts for vertex subsets of one
/// component, addressed by bitmask.
struct ConnectedCounts {
    adj: Vec<u64>,
    memo: HashMap<u64, u128>,
}

impl ConnectedCounts {
    fn new(adj: Vec<u64>) -> Self {
        ConnectedCounts { adj, memo: HashMap::new() }
    }

    fn edges(&self, mask: u64) -> u32 {
        let mut e = 0;
        let mut m = mask;
        while m != 0 {
            let v = m.trailing_zeros() as usize;
            m &= m - 1;
            e += (self.adj[v] & m).count_ones();
        }
        e
    }

    fn strip_pendants(&self, mask: u64) -> u64 {
        let mut m = mask;
        loop {
            let mut pendant = 0u64;
            let mut c = m;
            while c != 0 {
                let v = c.trailing_zeros() as usize;
                c &= c - 1;
                if (self.adj[v] & m).count_ones() == 1 {
                    pendant |= 1 << v;
                }
            }
            // two vertices joined by one edge are both pendant
            if pendant == 0 || pendant == m {
                return m;
            }
            m &= !pendant;
        }
    }

    fn is_connected(&self, mask: u64) -> bool {
        let mut seen = mask & mask.wrapping_neg();
        let mut frontier = seen;
        while frontier != 0 {
            let v = frontier.trailing_zeros() as usize;
            frontier &= frontier - 1;
            let fresh = self.adj[v] & mask & !seen;
            seen |= fresh;
            frontier |= fresh;
        }
        seen == mask
    }

    fn pow2(e: u32) -> Result<u128> {
        if e < 128 {
            Ok(1u128 << e)
        } else {
            Err(Error::CountOverflow("counting edge sets".into()))
        }
    }

    fn get(&mut self, mask: u64, cap: u64, work: &mut u64) -> Result<u128> {
        let mask = self.strip_pendants(mask);
        if let Some(&c) = self.memo.get(&mask) {
            return Ok(c);
        }
        let low = mask & mask.wrapping_neg();
        let rest = mask ^ low;
        let mut total = Self::pow2(self.edges(mask))?;
        let mut sub = rest;
        loop {
            sub = sub.wrapping_sub(1) & rest;
            if sub == rest {
                break;
            }
            *work += 1;
            if *work > cap {
                return Err(over_cap(cap, "counting connected spanning subgraphs"));
            }
            let part = sub | low;
            let other = mask ^ part;
            let c = if self.is_connected(part) { self.get(part, cap, work)? } else { 0 };
            if c != 0 {
                let term = c
                    .checked_mul(Self::pow2(self.edges(other))?)
                    .ok_or_else(|| Error::CountOverflow("counting edge sets".into()))?;
                total -= term;
            }
            if sub == 0 {
                break;
            }
        }
        self.memo.insert(mask, total);
        Ok(total)
    }
}

/// `#{t ∈ Γ_n : V - t ⊆ Γ_r}`.
pub fn translate_count(vertices: &[Point], n: usize, r: usize) -> u128 {
    let d = vertices.first().map_or(0, |v| v.len());
    let (n, r) = (n as i64, r as i64);
    (0..d)
        .map(|i| {
            let lo = vertices.iter().map(|v| v[i] as i64).max().unwrap() - r;
            let hi = vertices.iter().map(|v| v[i] as i64).min().unwrap() + r;
            (hi.min(n) - lo.max(-n) + 1).max(0) as u128
        })
        .product()
}

/// `Σ_V w(V) · #{t ∈ Γ_n : V - t ⊆ Γ_{2k+1}}` over connected vertex sets `V`
/// drawn from `sites`.
pub fn p_instances(sites: &[Point], k: usize, n: usize, caps: SearchCaps) -> Result<u128> {
    if sites.is_empty() {
        return Ok(0);
    }
    let d = sites[0].len();
    let index: HashMap<&Point, usize> = sites.iter().enumerate().map(|(i, p)| (p, i)).collect();
    let offsets = unit_offsets(d);
    let adj: Vec<Vec<usize>> = sites
        .iter()
        .map(|p| {
            let mut out: Vec<usize> = offsets
                .iter()
                .filter_map(|o| {
                    let q: Point = p.iter().zip(o).map(|(a, b)| a + b).collect();
                    index.get(&q).copied()
                })
                .collect();
            out.sort_unstable();
            out
        })
        .collect();
    let r = 2 * k + 1;
    let mut total: u128 = 0;
    let add = |total: &mut u128, v: u128| -> Result<()> {
        *total = total.checked_add(v).ok_or_else(|| Error::CountOverflow("summing pattern instances".into()))?;
        Ok(())
    };
    if k == 0 {
        for (i, nb) in adj.iter().enumerate() {
            for &j in nb.iter().filter(|&&j| j > i) {
                add(&mut total, translate_count(&[sites[i].clone(), sites[j].clone()], n, r))?;
            }
        }
        return Ok(total);
    }
    let mut uf = UnionFind::new(sites.len());
    for (i, nb) in adj.iter().enumerate() {
        for &j in nb {
            uf.union(i, j);
        }
    }
    for comp in uf.groups() {
        if comp.len() < 2 * k + 3 {
            continue;
        }
        if comp.len() > 64 {
            return Err(over_cap(caps.expansions, "enumerating a component of more than 64 sites"));
        }
        let local: HashMap<usize, usize> = comp.iter().enumerate().map(|(i, &g)| (g as usize, i)).collect();
        let local_adj: Vec<u64> =
            comp.iter().map(|&g| adj[g as usize].iter().fold(0u64, |m, j| m | (1u64 << local[j]))).collect();
        let mut conn = ConnectedCounts::new(local_adj);
        let mut cores: HashMap<u64, u128> = HashMap::new();
        let mut expansions = 0u64;
        let mut weight_work = 0u64;
        let mut esu = Esu::new(sites, &adj, 4 * k + 2);
        for &root in &comp {
            esu.run(root as usize, &mut expansions, caps.expansions, &mut |set: &[usize]| -> Result<()> {
                if set.len() < 2 * k + 3 {
                    return Ok(());
                }
                let pts: Vec<Point> = set.iter().map(|&i| sites[i].clone()).collect();
                let refs: Vec<&Point> = pts.iter().collect();
                if far_subset(&refs, 2 * k + 2).is_none() {
                    return Ok(());
                }
                let t = translate_count(&pts, n, r);
                if t == 0 {
                    return Ok(());
                }
                let mask = set.iter().fold(0u64, |m, g| m | (1u64 << local[g]));
                let w = if k == 1 {
                    conn.get(mask, caps.weight_work, &mut weight_work)?
                } else {
                    // a pendant vertex forces its edge and lies in no clique
                    let core = conn.strip_pendants(mask);
                    match cores.get(&core) {
                        Some(&w) => w,
                        None => {
                            let pts: Vec<Point> =
                                mask_points(core, &comp).into_iter().map(|g| sites[g].clone()).collect();
                            let w = vertex_set_weight(&pts, k, caps.weight_work, &mut weight_work)?;
                            cores.insert(core, w);
                            w
                        }
                    }
                };
                let v = w.checked_mul(t).ok_or_else(|| Error::CountOverflow("weighting pattern instances".into()))?;
                add(&mut total, v)
            })?;
        }
    }
    Ok(total)
}

fn mask_points(mask: u64, comp: &[u32]) -> Vec<usize> {
    let mut out = Vec::new();
    let mut m = mask;
    while m != 0 {
        let v = m.trailing_zeros() as usize;
        m &= m - 1;
        out.push(comp[v] as usize);
    }
    out
}

/// Enumeration of connected vertex sets with bounded coordinate extent, each
/// reported once from its smallest member.
struct Esu<'a> {
    sites: &'a [Point],
    adj: &'a [Vec<usize>],
    reach: i32,
    marks: Vec<u32>,
    in_set: Vec<bool>,
}

impl<'a> Esu<'a> {
    fn new(sites: &'a [Point], adj: &'a [Vec<usize>], reach: usize) -> Self {
        Esu { sites, adj, reach: reach as i32, marks: vec![0; sites.len()], in_set: vec![false; sites.len()] }
    }

    fn run(
        &mut self,
        root: usize,
        work: &mut u64,
        cap: u64,
        visit: &mut dyn FnMut(&[usize]) -> Result<()>,
    ) -> Result<()> {
        let d = self.sites[root].len();
        let lo = self.sites[root].clone();
        let hi = self.sites[root].clone();
        let mut set = vec![root];
        self.push(root);
        let ext: Vec<usize> = self.adj[root].iter().copied().filter(|&u| u > root).collect();
        let res = self.rec(root, &mut set, ext, &lo, &hi, d, work, cap, visit);
        self.pop(root);
        res
    }

    fn push(&mut self, w: usize) {
        self.in_set[w] = true;
        self.marks[w] += 1;
        for &u in &self.adj[w] {
            self.marks[u] += 1;
        }
    }

    fn pop(&mut self, w: usize) {
        self.in_set[w] = false;
        self.marks[w] -= 1;
        for &u in &self.adj[w] {
            self.marks[u] -= 1;
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn rec(
        &mut self,
        root: usize,
        set: &mut Vec<usize>,
        mut ext: Vec<usize>,
        lo: &[i32],
        hi: &[i32],
        d: usize,
        work: &mut u64,
        cap: u64,
        visit: &mut dyn FnMut(&[usize]) -> Result<()>,
    ) -> Result<()> {
        *work += 1;
        if *work > cap {
            return Err(over_cap(cap, "enumerating connected site sets"));
        }
        visit(set)?;
        while let Some(w) = ext.pop() {
            let p = &self.sites[w];
            let nlo: Vec<i32> = (0..d).map(|i| lo[i].min(p[i])).collect();
            let nhi: Vec<i32> = (0..d).map(|i| hi[i].max(p[i])).collect();
            if (0..d).any(|i| nhi[i] - nlo[i] > self.reach) {
                continue;
            }
            let mut next = ext.clone();
            next.extend(self.adj[w].iter().copied().filter(|&u| u > root && self.marks[u] == 0));
            self.push(w);
            set.push(w);
            let res = self.rec(root, set, next, &nlo, &nhi, d, work, cap, visit);
            set.pop();
            self.pop(w);
            res?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_graph(rng: &mut ChaCha8Rng, n: usize, max_edges: usize) -> Vec<[u32; 2]> {
        let mut edges = Vec::new();
        for i in 0..n as u32 {
            for j in i + 1..n as u32 {
                if edges.len() < max_edges && rng.random_bool(0.6) {
                    edges.push([i, j]);
                }
            }
        }
        edges
    }

    fn connected(n: usize, edges: &[[u32; 2]]) -> bool {
        let mut uf = UnionFind::new(n);
        for e in edges {
            uf.union(e[0] as usize, e[1] as usize);
        }
        uf.groups().len() == 1
    }

    // (connected spanning, of which exactly one triangle)
    fn brute(n: usize, edges: &[[u32; 2]]) -> (u128, u128) {
        let (mut all, mut one) = (0, 0);
        for bits in 0u32..1 << edges.len() {
            let chosen: Vec<[u32; 2]> = (0..edges.len()).filter(|i| bits >> i & 1 == 1).map(|i| edges[i]).collect();
            if connected(n, &chosen) {
                all += 1;
                if count_cliques(n, &chosen, 3) == 1 {
                    one += 1;
                }
            }
        }
        (all, one)
    }

    #[test]
    fn counters_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..60 {
            let n = rng.random_range(2..=7);
            let edges = random_graph(&mut rng, n, 14);
            let (all, one) = brute(n, &edges);
            let mut work = 0;
            assert_eq!(connected_spanning_subgraphs(n, &edges, u64::MAX, &mut work).unwrap(), all);
            assert_eq!(merged_count(n, &edges, None, u64::MAX, &mut work).unwrap(), all);
            assert_eq!(merged_count(n, &edges, Some(3), u64::MAX, &mut work).unwrap(), one);
            let mut steps = 0;
            assert_eq!(enumerate_unique_clique(n, &edges, 3, u64::MAX, &mut steps), Some(one));
            if n >= 3 {
                assert_eq!(unique_clique_subgraphs(n, &edges, 3, u64::MAX, &mut work).unwrap(), one);
            }
        }
    }

    #[test]
    fn four_cliques_agree_between_routes() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..30 {
            let n = rng.random_range(4..=7);
            let edges = random_graph(&mut rng, n, 16);
            let (mut work, mut steps) = (0, 0);
            let direct = enumerate_unique_clique(n, &edges, 4, u64::MAX, &mut steps).unwrap();
            assert_eq!(merged_count(n, &edges, Some(4), u64::MAX, &mut work).unwrap(), direct);
        }
    }

    #[test]
    fn shared_memo_matches_subset_recursion() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let n = rng.random_range(3..=10);
            let edges = random_graph(&mut rng, n, 40);
            let mut adj = vec![0u64; n];
            for e in &edges {
                adj[e[0] as usize] |= 1 << e[1];
                adj[e[1] as usize] |= 1 << e[0];
            }
            let mut conn = ConnectedCounts::new(adj);
            let mut work = 0;
            for mask in 1u64..1 << n {
                if !conn.is_connected(mask) {
                    continue;
                }
                let local: Vec<u32> = (0..n as u32).filter(|v| mask >> v & 1 == 1).collect();
                let pos = |v: u32| local.iter().position(|&x| x == v).unwrap() as u32;
                let sub: Vec<[u32; 2]> = edges
                    .iter()
                    .filter(|e| mask >> e[0] & 1 == 1 && mask >> e[1] & 1 == 1)
                    .map(|e| [pos(e[0]), pos(e[1])])
                    .collect();
                let expect = connected_spanning_subgraphs(local.len(), &sub, u64::MAX, &mut work).unwrap();
                assert_eq!(conn.get(mask, u64::MAX, &mut work).unwrap(), expect);
            }
        }
    }

    #[test]
    fn pendant_vertices_leave_counts_unchanged() {
        // triangle 0-1-2 with a path 2-3-4 attached
        let adj = vec![0b00110, 0b00101, 0b01011, 0b10100, 0b01000];
        let conn = ConnectedCounts::new(adj);
        assert_eq!(conn.strip_pendants(0b11111), 0b00111);
        assert_eq!(conn.strip_pendants(0b11000), 0b11000);
        let tri = [[0, 1], [0, 2], [1, 2]];
        let tail = [[0, 1], [0, 2], [1, 2], [2, 3], [3, 4]];
        let mut work = 0;
        assert_eq!(unique_clique_subgraphs(3, &tri, 3, u64::MAX, &mut work).unwrap(), 1);
        assert_eq!(unique_clique_subgraphs(5, &tail, 3, u64::MAX, &mut work).unwrap(), 1);
        assert_eq!(connected_spanning_subgraphs(5, &tail, u64::MAX, &mut work).unwrap(), 4);
    }

    #[test]
    fn work_cap_is_reported() {
        let edges: Vec<[u32; 2]> = (0..8u32).flat_map(|i| (i + 1..8).map(move |j| [i, j])).collect();
        let mut work = 0;
        assert!(matches!(
            merged_count(8, &edges, Some(3), 10, &mut work),
            Err(Error::SearchCapExceeded { cap: 10, .. })
        ));
    }
}
