//! Pairwise squared-sine statistics over all variable pairs.
//!
//! For standardized columns x_i, x_k the dot product is cos θ, so
//! z = sin²θ = 1 − r² measures association: z near 0 is a tight angle,
//! z near 1 is near-perpendicularity. The upper triangle of the Gram
//! matrix is materialized as one flat vector of length M = P(P−1)/2.

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::float;
use crate::sum;
use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Lower clamp for z; keeps (1−z) and z strictly positive under logs.
pub const Z_CLAMP: f64 = 1e-12;

/// Width of the column tiles walked by the pairwise kernel.
const TILE: usize = 128;

/// Canonical bijection j ↔ (i,k) with 0 ≤ i < k < P over the upper
/// triangle, j = i·P − i(i+1)/2 + (k−i−1).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairIndex {
    p: usize,
}

impl PairIndex {
    pub fn new(p: usize) -> Result<Self> {
        if p < 2 {
            return Err(Error::Input(format!("pair index needs P >= 2, got {p}")));
        }
        Ok(PairIndex { p })
    }

    /// Number of variables P.
    pub fn p(&self) -> usize {
        self.p
    }

    /// Number of pairs M = P(P−1)/2.
    pub fn m(&self) -> usize {
        self.p * (self.p - 1) / 2
    }

    /// Flat index of the pair (i,k), i < k.
    pub fn to_index(&self, i: usize, k: usize) -> usize {
        debug_assert!(i < k && k < self.p);
        i * self.p - i * (i + 1) / 2 + (k - i - 1)
    }

    /// Inverse of [`Self::to_index`].
    pub fn to_pair(&self, j: usize) -> (usize, usize) {
        debug_assert!(j < self.m());
        // Float seed for the row, then exact fix-up.
        let pf = self.p as f64;
        let t = 2.0 * pf - 1.0;
        let mut i = ((t - float::sqrt(t * t - 8.0 * j as f64)) / 2.0) as usize;
        i = i.min(self.p - 2);
        while self.row_start(i) > j {
            i -= 1;
        }
        while i + 2 < self.p && self.row_start(i + 1) <= j {
            i += 1;
        }
        let k = j - self.row_start(i) + i + 1;
        (i, k)
    }

    /// Flat index of the first pair in row i, i.e. (i, i+1).
    fn row_start(&self, i: usize) -> usize {
        i * self.p - i * (i + 1) / 2
    }
}

/// All pair statistics: z_j = sin²θ_j and the signed correlation r_j.
#[derive(Debug, Clone, PartialEq)]
pub struct ZVector {
    z: Vec<f64>,
    r: Vec<f64>,
    index: PairIndex,
    n_samples: usize,
    centered: bool,
}

impl ZVector {
    /// Assemble from precomputed statistics (used by generators and
    /// tests); lengths must match the triangular M of `p`.
    pub fn from_parts(
        z: Vec<f64>,
        r: Vec<f64>,
        p: usize,
        n_samples: usize,
        centered: bool,
    ) -> Result<Self> {
        let index = PairIndex::new(p)?;
        if z.len() != index.m() || r.len() != index.m() {
            return Err(Error::Input(format!(
                "pair vectors of length {}/{} for P={p} (expected {})",
                z.len(),
                r.len(),
                index.m()
            )));
        }
        if n_samples < 3 {
            return Err(Error::Input(format!("need n >= 3 samples, got {n_samples}")));
        }
        if let Some(bad) = z.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Input(format!("z value {bad} outside [0,1]")));
        }
        Ok(ZVector { z, r, index, n_samples, centered })
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn index(&self) -> &PairIndex {
        &self.index
    }

    /// Number of pairs.
    pub fn m(&self) -> usize {
        self.z.len()
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn centered(&self) -> bool {
        self.centered
    }
}

/// Compute every pairwise (r, z) over the standardized matrix.
///
/// Tiled Gram computation: the output is split into disjoint per-tile
/// regions, each pair's dot product runs in a fixed sequential order, and
/// tiles are independent, so results are bitwise identical at any thread
/// count. z is clamped into [1e-12, 1−1e-12] so duplicate or orthogonal
/// columns stay finite under logarithms.
pub fn pairwise_z(m: &DataMatrix) -> Result<ZVector> {
    let p = m.p();
    let index = PairIndex::new(p)?;
    for j in 0..p {
        let col = m.column(j);
        let norm2 = sum::dot(col, col);
        if float::abs(norm2 - 1.0) > 1e-8 {
            return Err(Error::Input(
                "columns are not unit-norm; standardize the matrix first".to_string(),
            ));
        }
    }
    let total = index.m();
    let mut z = alloc::vec![0.0; total];
    let mut r = alloc::vec![0.0; total];

    // Split the flat output into per-tile disjoint regions.
    let tiles: Vec<(usize, usize)> = (0..p.saturating_sub(1))
        .step_by(TILE)
        .map(|i0| (i0, (i0 + TILE).min(p - 1)))
        .collect();
    let mut z_regions: Vec<(usize, &mut [f64])> = Vec::with_capacity(tiles.len());
    let mut r_regions: Vec<&mut [f64]> = Vec::with_capacity(tiles.len());
    {
        let mut z_rest: &mut [f64] = &mut z;
        let mut r_rest: &mut [f64] = &mut r;
        for &(i0, i1) in &tiles {
            let len = region_len(p, i0, i1);
            let (zh, zt) = z_rest.split_at_mut(len);
            let (rh, rt) = r_rest.split_at_mut(len);
            z_regions.push((i0, zh));
            r_regions.push(rh);
            z_rest = zt;
            r_rest = rt;
        }
    }

    let work = |((i0, z_reg), r_reg): ((usize, &mut [f64]), &mut [f64])| {
        let i1 = (i0 + TILE).min(p - 1);
        let base = row_start(p, i0);
        for k0 in (i0 + 1..p).step_by(TILE) {
            let k1 = (k0 + TILE).min(p);
            for i in i0..i1.min(k1) {
                let ci = m.column(i);
                for k in k0.max(i + 1)..k1 {
                    let rv = sum::dot(ci, m.column(k)).clamp(-1.0, 1.0);
                    let zv = (1.0 - rv * rv).clamp(Z_CLAMP, 1.0 - Z_CLAMP);
                    let at = row_start(p, i) + (k - i - 1) - base;
                    z_reg[at] = zv;
                    r_reg[at] = rv;
                }
            }
        }
    };

    #[cfg(feature = "parallel")]
    z_regions.into_par_iter().zip(r_regions).for_each(work);
    #[cfg(not(feature = "parallel"))]
    z_regions.into_iter().zip(r_regions).for_each(work);

    Ok(ZVector { z, r, index, n_samples: m.n(), centered: m.centered() })
}

fn row_start(p: usize, i: usize) -> usize {
    i * p - i * (i + 1) / 2
}

fn region_len(p: usize, i0: usize, i1: usize) -> usize {
    row_start(p, i1) - row_start(p, i0)
}

/// |r| implied by a z value: √(1−z).
pub fn z_to_abs_r(z: f64) -> f64 {
    float::sqrt((1.0 - z).max(0.0))
}
