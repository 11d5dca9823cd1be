use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{connected_components, CliqueComplex};
use crate::error::{Error, Result};

/// Betti numbers `β_0..β_kmax`; `β_0` counts connected components.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BettiVector {
    pub prime: u32,
    pub values: Vec<u64>,
}

impl BettiVector {
    pub fn get(&self, k: usize) -> u64 {
        self.values.get(k).copied().unwrap_or(0)
    }

    pub fn to_csv_row(&self) -> String {
        self.values.iter().map(|b| b.to_string()).collect::<Vec<_>>().join(",")
    }
}

fn inverse_mod(a: u32, p: u32) -> u32 {
    let (mut base, mut exp, mut acc) = (a as u64 % p as u64, p as u64 - 2, 1u64);
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % p as u64;
        }
        base = base * base % p as u64;
        exp >>= 1;
    }
    acc as u32
}

fn is_prime(p: u32) -> bool {
    p >= 2 && (2..).take_while(|i| i * i <= p).all(|i| !p.is_multiple_of(i))
}

type Column = Vec<(u32, u32)>;

/// `a - f·b` over GF(p) for columns sorted by row.
fn axpy(a: &Column, f: u32, b: &Column, p: u32) -> Column {
    let p64 = p as u64;
    let neg = |c: u32| ((p64 - (f as u64 * c as u64) % p64) % p64) as u32;
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        if j == b.len() || (i < a.len() && a[i].0 < b[j].0) {
            out.push(a[i]);
            i += 1;
        } else if i == a.len() || b[j].0 < a[i].0 {
            out.push((b[j].0, neg(b[j].1)));
            j += 1;
        } else {
            let c = ((a[i].1 as u64 + neg(b[j].1) as u64) % p64) as u32;
            if c != 0 {
                out.push((a[i].0, c));
            }
            i += 1;
            j += 1;
        }
    }
    out
}

/// Rank over GF(p) of the boundary map from `upper` faces to `lower` faces.
pub fn boundary_rank(lower: &[Vec<u32>], upper: &[Vec<u32>], p: u32) -> usize {
    let index: HashMap<&[u32], u32> = lower.iter().enumerate().map(|(i, f)| (f.as_slice(), i as u32)).collect();
    let mut pivot_col: Vec<Option<usize>> = vec![None; lower.len()];
    let mut reduced: Vec<Column> = Vec::new();
    let mut facet = Vec::new();
    for sigma in upper {
        let mut col: Column = (0..sigma.len())
            .map(|i| {
                facet.clear();
                facet.extend(sigma.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &v)| v));
                let row = index[facet.as_slice()];
                (row, if i % 2 == 0 { 1 } else { p - 1 })
            })
            .collect();
        col.sort_unstable();
        while let Some(&(low, c)) = col.last() {
            match pivot_col[low as usize] {
                Some(r) => {
                    let other = &reduced[r];
                    let lead = other.last().expect("stored columns are nonzero").1;
                    let f = (c as u64 * inverse_mod(lead, p) as u64 % p as u64) as u32;
                    col = axpy(&col, f, other, p);
                }
                None => {
                    pivot_col[low as usize] = Some(reduced.len());
                    reduced.push(col);
                    break;
                }
            }
        }
    }
    reduced.len()
}

/// Betti numbers through degree `kmax` over GF(`prime`).
pub fn betti(complex: &CliqueComplex, kmax: usize, prime: u32) -> Result<BettiVector> {
    if !is_prime(prime) {
        return Err(Error::InvalidParameter(format!("{prime} is not prime")));
    }
    if complex.max_dim() < kmax + 1 {
        return Err(Error::InvalidParameter(format!(
            "degree {kmax} homology needs faces through dimension {}, complex stops at {}",
            kmax + 1,
            complex.max_dim()
        )));
    }
    let f = &complex.faces_by_dim;
    let ranks: Vec<usize> = (1..=kmax + 1).map(|j| boundary_rank(&f[j - 1], &f[j], prime)).collect();
    let values: Vec<u64> = (0..=kmax)
        .map(|k| {
            let into = if k == 0 { 0 } else { ranks[k - 1] };
            (f[k].len() - into - ranks[k]) as u64
        })
        .collect();
    let components = connected_components(complex).len() as u64;
    assert_eq!(values[0], components, "rank computation disagrees with union-find");
    Ok(BettiVector { prime, values })
}

/// `β_k` over GF(2) of the subcomplex induced by one component.
pub fn betti_of_component(complex: &CliqueComplex, component: &[u32], k: usize) -> Result<u64> {
    let pts: Vec<_> = component.iter().map(|&v| complex.vertices[v as usize].clone()).collect();
    let sub = super::build_complex(&pts, k + 1)?;
    Ok(betti(&sub, k, 2)?.get(k))
}
