//! The Sierpinski gasket graphs and brute-force partition functions.
//!
//! Vertex numbering: the exterior corners of `G_n` are `0, 1, 2`; the three
//! joining points of the sub-copies follow as `3` (between corners 0 and 1),
//! `4` (between 1 and 2) and `5` (between 2 and 0); after that come the
//! interior vertices of the three sub-copies, copy 0 (at corner 0) first,
//! then copy 1 and copy 2, each in the order of its own numbering.

use num_bigint::BigInt;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{guard, GasketError, Result};
use crate::exact_poly::LaurentPolynomial;

pub const MAX_GASKET_LEVEL: u32 = 6;
pub const MAX_ENUMERATION_VERTICES: usize = 25;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GasketGraph {
    pub level: u32,
    #[serde(rename = "vertices")]
    pub vertex_count: usize,
    pub edges: Vec<[usize; 2]>,
    pub corners: [usize; 3],
}

impl GasketGraph {
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.vertex_count];
        for &[a, b] in &self.edges {
            deg[a] += 1;
            deg[b] += 1;
        }
        deg
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertex_count];
        for &[a, b] in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }

    /// Closed forms `(3^{n+1}+3)/2` vertices and `3^{n+1}` edges.
    pub fn expected_counts(level: u32) -> (usize, usize) {
        let p = 3usize.pow(level + 1);
        ((p + 3) / 2, p)
    }
}

pub fn build_gasket(n: u32) -> Result<GasketGraph> {
    guard("gasket level", n as u64, MAX_GASKET_LEVEL as u64)?;
    let mut g = GasketGraph {
        level: 0,
        vertex_count: 3,
        edges: vec![[0, 1], [1, 2], [0, 2]],
        corners: [0, 1, 2],
    };
    for level in 1..=n {
        let sub = g;
        let interior = sub.vertex_count - 3;
        let vertex_count = 6 + 3 * interior;
        // Where each copy's corners land: (corner a, corner b, corner c).
        let placements = [[0, 3, 5], [3, 1, 4], [5, 4, 2]];
        let mut edges = Vec::with_capacity(3 * sub.edges.len());
        for (copy, corners) in placements.iter().enumerate() {
            let offset = 6 + copy * interior;
            let map = |v: usize| if v < 3 { corners[v] } else { offset + v - 3 };
            edges.extend(sub.edges.iter().map(|&[a, b]| {
                let (a, b) = (map(a), map(b));
                [a.min(b), a.max(b)]
            }));
        }
        g = GasketGraph {
            level,
            vertex_count,
            edges,
            corners: [0, 1, 2],
        };
    }
    Ok(g)
}

/// A spin assignment, bit `i` set meaning vertex `i` carries spin −1.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SpinConfiguration {
    mask: u64,
    len: usize,
}

impl SpinConfiguration {
    pub fn from_mask(mask: u64, len: usize) -> Self {
        assert!(len <= 64);
        SpinConfiguration { mask, len }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn spin(&self, v: usize) -> i32 {
        if self.mask >> v & 1 == 1 {
            -1
        } else {
            1
        }
    }

    /// Exponent of `y` in the Gibbs weight: `Σ_edges σ(v)σ(w)`.
    pub fn weight_exponent(&self, graph: &GasketGraph) -> i64 {
        graph
            .edges
            .iter()
            .map(|&[a, b]| (self.spin(a) * self.spin(b)) as i64)
            .sum()
    }
}

fn histogram_to_laurent(hist: &[u64], edges: usize) -> LaurentPolynomial {
    LaurentPolynomial::new(-(edges as i64), hist.iter().map(|&c| BigInt::from(c)).collect())
}

/// Histogram of `Σ σσ` over all configurations agreeing with `fixed`,
/// indexed by exponent + |E|. Free vertices are walked in Gray-code order so
/// each step flips one spin; the walk is split across threads by the top
/// free bits.
fn weight_histogram(graph: &GasketGraph, fixed: &[(usize, i32)]) -> Result<Vec<u64>> {
    let n = graph.vertex_count;
    if n > MAX_ENUMERATION_VERTICES {
        return Err(GasketError::GuardExceeded {
            what: "enumeration vertex count",
            value: n as u64,
            limit: MAX_ENUMERATION_VERTICES as u64,
        });
    }
    let adj = graph.adjacency();
    let e = graph.edges.len();
    let mut base = vec![1i32; n];
    for &(v, s) in fixed {
        base[v] = s;
    }
    let free: Vec<usize> = (0..n).filter(|v| fixed.iter().all(|&(w, _)| w != *v)).collect();
    let split = free.len().min(6);
    let low = free.len() - split;

    let energy = |spins: &[i32]| -> i64 {
        graph
            .edges
            .iter()
            .map(|&[a, b]| (spins[a] * spins[b]) as i64)
            .sum()
    };

    let hist = (0u64..1 << split)
        .into_par_iter()
        .map(|chunk| {
            let mut spins = base.clone();
            for b in 0..split {
                if chunk >> b & 1 == 1 {
                    spins[free[low + b]] = -1;
                }
            }
            let mut s = energy(&spins);
            let mut hist = vec![0u64; 2 * e + 1];
            hist[(s + e as i64) as usize] += 1;
            for i in 1u64..1 << low {
                let v = free[i.trailing_zeros() as usize];
                let local: i32 = adj[v].iter().map(|&w| spins[w]).sum();
                s -= 2 * (spins[v] * local) as i64;
                spins[v] = -spins[v];
                hist[(s + e as i64) as usize] += 1;
            }
            hist
        })
        .reduce(
            || vec![0u64; 2 * e + 1],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    Ok(hist)
}

/// `Z = Σ_σ y^{Σ σ(v)σ(w)}` over all `2^{|V|}` configurations.
pub fn enumerate_partition_function(graph: &GasketGraph) -> Result<LaurentPolynomial> {
    let hist = weight_histogram(graph, &[])?;
    Ok(histogram_to_laurent(&hist, graph.edges.len()))
}

/// Sum of Gibbs weights over configurations with the given corner spins.
pub fn enumerate_corner_sum(graph: &GasketGraph, corner_spins: [i32; 3]) -> Result<LaurentPolynomial> {
    let fixed: Vec<(usize, i32)> = graph
        .corners
        .iter()
        .zip(corner_spins)
        .map(|(&v, s)| (v, s))
        .collect();
    let hist = weight_histogram(graph, &fixed)?;
    Ok(histogram_to_laurent(&hist, graph.edges.len()))
}

/// `(U, V)`: corner sums for spins `(+,+,+)` and `(+,+,−)`.
pub fn enumerate_boundary_sums(graph: &GasketGraph) -> Result<(LaurentPolynomial, LaurentPolynomial)> {
    Ok((
        enumerate_corner_sum(graph, [1, 1, 1])?,
        enumerate_corner_sum(graph, [1, 1, -1])?,
    ))
}
