//! Deterministic reductions.
//!
//! Every big sum in the crate goes through a fixed-shape chunked tree:
//! partial sums over consecutive 4096-element chunks, combined by pairwise
//! summation in index order. The reduction shape depends only on the input
//! length, so results are bitwise identical whether the chunk partials are
//! computed serially or in parallel, and the tree keeps rounding error at
//! O(log M) instead of O(M).

use alloc::vec::Vec;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub(crate) const CHUNK: usize = 4096;

/// Pairwise (cascade) sum of a slice, sequential.
pub(crate) fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        let mut acc = 0.0;
        for &x in xs {
            acc += x;
        }
        return acc;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Sum of `f(j)` for `j in 0..len` over the fixed chunk tree.
pub(crate) fn sum_indexed<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let n_chunks = len.div_ceil(CHUNK);
    let partial = |c: usize| {
        let lo = c * CHUNK;
        let hi = (lo + CHUNK).min(len);
        let mut acc = 0.0;
        for j in lo..hi {
            acc += f(j);
        }
        acc
    };
    #[cfg(feature = "parallel")]
    let partials: Vec<f64> = (0..n_chunks).into_par_iter().map(partial).collect();
    #[cfg(not(feature = "parallel"))]
    let partials: Vec<f64> = (0..n_chunks).map(partial).collect();
    pairwise_sum(&partials)
}

/// Two sums in one pass over the same index range (same tree shape).
pub(crate) fn sum2_indexed<F>(len: usize, f: F) -> (f64, f64)
where
    F: Fn(usize) -> (f64, f64) + Sync,
{
    let n_chunks = len.div_ceil(CHUNK);
    let partial = |c: usize| {
        let lo = c * CHUNK;
        let hi = (lo + CHUNK).min(len);
        let (mut s0, mut s1) = (0.0, 0.0);
        for j in lo..hi {
            let (a, b) = f(j);
            s0 += a;
            s1 += b;
        }
        (s0, s1)
    };
    #[cfg(feature = "parallel")]
    let partials: Vec<(f64, f64)> = (0..n_chunks).into_par_iter().map(partial).collect();
    #[cfg(not(feature = "parallel"))]
    let partials: Vec<(f64, f64)> = (0..n_chunks).map(partial).collect();
    let a: Vec<f64> = partials.iter().map(|p| p.0).collect();
    let b: Vec<f64> = partials.iter().map(|p| p.1).collect();
    (pairwise_sum(&a), pairwise_sum(&b))
}

/// Plain sequential dot product (fixed evaluation order).
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for i in 0..a.len() {
        acc += a[i] * b[i];
    }
    acc
}
