//! Two-component beta mixture over the pair statistics, fit by EM.
//!
//! The null component models unrelated pairs and keeps the fixed form
//! Beta((ν−1)/2, 1/2) in the effective sample size ν; the non-null
//! component is a free Beta(a,b), optionally truncated to (0, C_δ).
//! Posterior null probabilities from the fit drive the edge rules.

use crate::error::{Error, Result};
use crate::float;
use crate::pairs::ZVector;
use crate::special;
use crate::sum;
use alloc::format;
use alloc::vec::Vec;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Mixture parameter set (p0, a, b, ν, C_δ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureParams {
    p0: f64,
    a: f64,
    b: f64,
    nu: f64,
    c_delta: f64,
}

impl MixtureParams {
    /// Validated constructor: p0 ∈ [0,1], a,b > 0, ν > 1, C_δ ∈ (0,1].
    pub fn new(p0: f64, a: f64, b: f64, nu: f64, c_delta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p0) {
            return Err(Error::Domain { what: "null weight p0 must be in [0,1]", value: p0 });
        }
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::Domain { what: "shape a must be positive", value: a });
        }
        if !(b > 0.0) || !b.is_finite() {
            return Err(Error::Domain { what: "shape b must be positive", value: b });
        }
        if !(nu > 1.0) || !nu.is_finite() {
            return Err(Error::Domain { what: "effective sample size nu must exceed 1", value: nu });
        }
        if !(c_delta > 0.0 && c_delta <= 1.0) {
            return Err(Error::Domain { what: "truncation point must be in (0,1]", value: c_delta });
        }
        Ok(MixtureParams { p0, a, b, nu, c_delta })
    }

    pub fn p0(&self) -> f64 {
        self.p0
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn c_delta(&self) -> f64 {
        self.c_delta
    }

    /// First shape of the null component, (ν−1)/2.
    pub fn null_alpha(&self) -> f64 {
        (self.nu - 1.0) / 2.0
    }
}

/// Options controlling [`fit`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Estimate the effective sample size ν inside the EM.
    pub estimate_ess: bool,
    /// Estimate the non-null truncation point C_δ.
    pub estimate_c_delta: bool,
    /// Estimate C_δ once up front instead of re-estimating every
    /// iteration (only meaningful with `estimate_c_delta`).
    pub freeze_c_delta: bool,
    /// Tail mass parameter of the C_δ objective.
    pub delta: f64,
    /// Relative log-likelihood change declaring convergence.
    pub tol: f64,
    /// Iteration cap.
    pub max_iter: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            estimate_ess: false,
            estimate_c_delta: false,
            freeze_c_delta: false,
            delta: 1e-3,
            tol: 1e-8,
            max_iter: 1000,
        }
    }
}

/// Posterior null probabilities m̂_{0j}, aligned with the z vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorVector {
    m0: Vec<f64>,
}

impl PosteriorVector {
    /// Wrap externally supplied posterior probabilities; every entry must
    /// lie in [0, 1].
    pub fn from_values(m0: Vec<f64>) -> Result<Self> {
        for &v in &m0 {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Domain { what: "posterior probabilities must be in [0,1]", value: v });
            }
        }
        Ok(Self { m0 })
    }

    pub fn m0_hat(&self) -> &[f64] {
        &self.m0
    }

    pub fn len(&self) -> usize {
        self.m0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m0.is_empty()
    }
}

/// Outcome of an EM fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    params: MixtureParams,
    posteriors: PosteriorVector,
    loglik_trace: Vec<f64>,
    iterations: usize,
    converged: bool,
    options: FitOptions,
}

impl FitResult {
    pub fn params(&self) -> &MixtureParams {
        &self.params
    }

    pub fn posteriors(&self) -> &PosteriorVector {
        &self.posteriors
    }

    pub fn loglik_trace(&self) -> &[f64] {
        &self.loglik_trace
    }

    /// Final log-likelihood.
    pub fn loglik(&self) -> f64 {
        *self.loglik_trace.last().unwrap_or(&f64::NEG_INFINITY)
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn options(&self) -> &FitOptions {
        &self.options
    }
}

/// Cached logs of the data, shared by all EM passes.
struct Cache {
    ln_z: Vec<f64>,
    ln_1mz: Vec<f64>,
}

impl Cache {
    fn build(z: &[f64]) -> Self {
        let ln_z = map_elementwise(z, |v| float::ln(v));
        let ln_1mz = map_elementwise(z, |v| float::ln_1p(-v));
        Cache { ln_z, ln_1mz }
    }
}

/// Elementwise map with fixed chunking (parallel when enabled; output is
/// identical either way because each element is independent).
fn map_elementwise<F>(xs: &[f64], f: F) -> Vec<f64>
where
    F: Fn(f64) -> f64 + Sync,
{
    let mut out = alloc::vec![0.0; xs.len()];
    let work = |(dst, src): (&mut [f64], &[f64])| {
        for (d, &s) in dst.iter_mut().zip(src) {
            *d = f(s);
        }
    };
    #[cfg(feature = "parallel")]
    out.par_chunks_mut(sum::CHUNK).zip(xs.par_chunks(sum::CHUNK)).for_each(work);
    #[cfg(not(feature = "parallel"))]
    out.chunks_mut(sum::CHUNK).zip(xs.chunks(sum::CHUNK)).for_each(work);
    out
}

/// Starting parameters.
///
/// p0 starts at the share of z above the null's 10% quantile at ν = n;
/// (a,b) by method of moments on the z below that quantile; C_δ = 1.
/// When ν is to be estimated it starts at the moment solution over all
/// z rather than at n, so strongly dependent samples do not strand the
/// null component far from the data.
pub fn init_params(z: &ZVector, options: &FitOptions) -> Result<MixtureParams> {
    let m = require_min_pairs(z)?;
    let n = z.n_samples() as f64;
    let q = special::beta_quantile(0.10, (n - 1.0) / 2.0, 0.5)?;
    let above = z.z().iter().filter(|&&v| v > q).count();
    let p0 = (above as f64 / m as f64).clamp(0.05, 0.95);
    let low: Vec<f64> = z.z().iter().copied().filter(|&v| v <= q).collect();
    let (a, b) = moments_shape(&low).unwrap_or((1.0, 1.0));
    let nu = if options.estimate_ess {
        let t = sum::sum_indexed(z.m(), |j| float::ln(z.z()[j])) / m as f64;
        solve_nu(t, n)
    } else {
        n
    };
    MixtureParams::new(p0, a, b, nu, 1.0)
}

fn moments_shape(xs: &[f64]) -> Option<(f64, f64)> {
    if xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mean = sum::pairwise_sum(xs) / n;
    let var = sum::sum_indexed(xs.len(), |j| {
        let d = xs[j] - mean;
        d * d
    }) / n;
    if !(var > 0.0) {
        return None;
    }
    let t = mean * (1.0 - mean) / var - 1.0;
    if !(t > 0.0) {
        return None;
    }
    Some(((mean * t).clamp(0.5, 500.0), (((1.0 - mean) * t).clamp(0.5, 500.0))))
}

fn require_min_pairs(z: &ZVector) -> Result<usize> {
    let m = z.m();
    if m < 10 {
        return Err(Error::Input(format!("mixture fit needs at least 10 pairs, got {m}")));
    }
    Ok(m)
}

/// Posterior null probabilities given parameters.
pub fn e_step(z: &ZVector, params: &MixtureParams) -> PosteriorVector {
    let cache = Cache::build(z.z());
    e_step_cached(z.z(), &cache, params)
}

fn e_step_cached(z: &[f64], cache: &Cache, params: &MixtureParams) -> PosteriorVector {
    let ctx = DensityContext::new(params);
    let p0 = params.p0;
    if p0 >= 1.0 {
        return PosteriorVector { m0: alloc::vec![1.0; z.len()] };
    }
    let mut m0 = alloc::vec![0.0; z.len()];
    let work = |(dst, lo): (&mut [f64], usize)| {
        for (t, d) in dst.iter_mut().enumerate() {
            let j = lo + t;
            let l1 = ctx.log_f1(z[j], cache.ln_z[j], cache.ln_1mz[j]);
            if p0 <= 0.0 {
                // Null weight zero: posterior is 0 wherever the non-null
                // density is positive, 1 beyond its support.
                *d = if l1 == f64::NEG_INFINITY { 1.0 } else { 0.0 };
                continue;
            }
            let l0 = float::ln(p0) + ctx.log_f0(cache.ln_z[j], cache.ln_1mz[j]);
            let l1 = float::ln_1p(-p0) + l1;
            // Logistic of the log-density gap; saturates cleanly when one
            // side underflows.
            *d = 1.0 / (1.0 + float::exp(l1 - l0));
        }
    };
    let starts: Vec<usize> = (0..z.len()).step_by(sum::CHUNK).collect();
    #[cfg(feature = "parallel")]
    m0.par_chunks_mut(sum::CHUNK).zip(starts).for_each(work);
    #[cfg(not(feature = "parallel"))]
    m0.chunks_mut(sum::CHUNK).zip(starts).for_each(work);
    PosteriorVector { m0 }
}

/// Log-densities of both components with shared constants.
struct DensityContext {
    a0: f64,
    ln_b0: f64,
    a: f64,
    b: f64,
    c: f64,
    ln_c: f64,
    ln_b1: f64,
}

impl DensityContext {
    fn new(params: &MixtureParams) -> Self {
        let a0 = params.null_alpha();
        DensityContext {
            a0,
            ln_b0: special::ln_beta_raw(a0, 0.5),
            a: params.a,
            b: params.b,
            c: params.c_delta,
            ln_c: float::ln(params.c_delta),
            ln_b1: special::ln_beta_raw(params.a, params.b),
        }
    }

    #[inline]
    fn log_f0(&self, ln_z: f64, ln_1mz: f64) -> f64 {
        (self.a0 - 1.0) * ln_z - 0.5 * ln_1mz - self.ln_b0
    }

    #[inline]
    fn log_f1(&self, z: f64, ln_z: f64, ln_1mz: f64) -> f64 {
        if self.c == 1.0 {
            (self.a - 1.0) * ln_z + (self.b - 1.0) * ln_1mz - self.ln_b1
        } else if z >= self.c {
            f64::NEG_INFINITY
        } else {
            (self.a - 1.0) * ln_z + (self.b - 1.0) * float::ln(self.c - z)
                - (self.a + self.b - 1.0) * self.ln_c
                - self.ln_b1
        }
    }
}

/// One M-step: reweighted estimates of p0, (a,b) and (optionally) ν.
///
/// (a,b) solve the digamma estimating equations by Newton on (ln a, ln b)
/// with a trigamma Jacobian, falling back to a damped inverse-digamma
/// fixed point; ν solves its monotone equation by bisection. Empty
/// components keep their previous parameters.
pub fn m_step(
    z: &ZVector,
    post: &PosteriorVector,
    params: &MixtureParams,
    estimate_ess: bool,
) -> Result<MixtureParams> {
    if post.len() != z.m() {
        return Err(Error::Input(format!(
            "posterior length {} does not match pair count {}",
            post.len(),
            z.m()
        )));
    }
    let cache = Cache::build(z.z());
    m_step_cached(z.z(), &cache, post, params, estimate_ess, z.n_samples() as f64)
}

fn m_step_cached(
    z: &[f64],
    cache: &Cache,
    post: &PosteriorVector,
    params: &MixtureParams,
    estimate_ess: bool,
    n: f64,
) -> Result<MixtureParams> {
    let m = z.len();
    let m0 = post.m0_hat();
    let p0 = sum::sum_indexed(m, |j| m0[j]) / m as f64;

    let c = params.c_delta;
    let ln_c = float::ln(c);
    let su = sum::sum_indexed(m, |j| if z[j] < c { 1.0 - m0[j] } else { 0.0 });
    let (a, b) = if su > 1e-8 {
        let (s1_raw, s2_raw) = sum::sum2_indexed(m, |j| {
            if z[j] >= c {
                return (0.0, 0.0);
            }
            let u = 1.0 - m0[j];
            if c == 1.0 {
                (u * cache.ln_z[j], u * cache.ln_1mz[j])
            } else {
                (u * (cache.ln_z[j] - ln_c), u * (float::ln(c - z[j]) - ln_c))
            }
        });
        solve_shapes(s1_raw / su, s2_raw / su, params.a, params.b)?
    } else {
        (params.a, params.b)
    };

    let nu = if estimate_ess {
        let sm = sum::sum_indexed(m, |j| m0[j]);
        if sm > 1e-8 {
            let t = sum::sum_indexed(m, |j| m0[j] * cache.ln_z[j]) / sm;
            solve_nu(t, n)
        } else {
            params.nu
        }
    } else {
        params.nu
    };

    MixtureParams::new(p0, a, b, nu, c)
}

const SHAPE_LO: f64 = 1e-3;
const SHAPE_HI: f64 = 1e4;

/// Solve ψ(a)−ψ(a+b)=s1, ψ(b)−ψ(a+b)=s2 over the box
/// [SHAPE_LO, SHAPE_HI]².
///
/// A coordinate pinned at a box edge with its residual pointing outward
/// is the constrained optimum there (each equation is increasing in its
/// own shape), so such solutions are accepted; this happens when the
/// weighted sample is too concentrated for any interior beta.
fn solve_shapes(s1: f64, s2: f64, a_seed: f64, b_seed: f64) -> Result<(f64, f64)> {
    let mut la = float::ln(a_seed.clamp(SHAPE_LO, SHAPE_HI));
    let mut lb = float::ln(b_seed.clamp(SHAPE_LO, SHAPE_HI));
    let resid = |a: f64, b: f64| {
        let pab = special::digamma_raw(a + b);
        (special::digamma_raw(a) - pab - s1, special::digamma_raw(b) - pab - s2)
    };
    let solved = |v: f64, f: f64| {
        float::abs(f) < 1e-9
            || (v >= SHAPE_HI * (1.0 - 1e-12) && f < 0.0)
            || (v <= SHAPE_LO * (1.0 + 1e-12) && f > 0.0)
    };
    let mut newton_iters = 0;
    for _ in 0..100 {
        newton_iters += 1;
        let (a, b) = (float::exp(la), float::exp(lb));
        let (f1, f2) = resid(a, b);
        if float::abs(f1) < 1e-12 && float::abs(f2) < 1e-12 {
            return Ok((a, b));
        }
        let ta = special::trigamma_raw(a);
        let tb = special::trigamma_raw(b);
        let tab = special::trigamma_raw(a + b);
        let j11 = a * (ta - tab);
        let j12 = -b * tab;
        let j21 = -a * tab;
        let j22 = b * (tb - tab);
        let det = j11 * j22 - j12 * j21;
        if !(float::abs(det) > 1e-300) || !det.is_finite() {
            break;
        }
        let d1 = ((j22 * f1 - j12 * f2) / det).clamp(-2.0, 2.0);
        let d2 = ((-j21 * f1 + j11 * f2) / det).clamp(-2.0, 2.0);
        la = (la - d1).clamp(float::ln(SHAPE_LO), float::ln(SHAPE_HI));
        lb = (lb - d2).clamp(float::ln(SHAPE_LO), float::ln(SHAPE_HI));
    }
    let (mut a, mut b) = (float::exp(la), float::exp(lb));
    let (f1, f2) = resid(a, b);
    if solved(a, f1) && solved(b, f2) {
        return Ok((a, b));
    }
    // Exact 1-D solve for one shape with the other held fixed; a pinned
    // coordinate lands exactly on the box edge so the outward-residual
    // test applies.
    let solve_coord = |t: f64, other: f64| {
        let g = |v: f64| special::digamma_raw(v) - special::digamma_raw(v + other) - t;
        let (mut lo, mut hi) = (SHAPE_LO, SHAPE_HI);
        if g(hi) < 0.0 {
            return hi;
        }
        if g(lo) > 0.0 {
            return lo;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-14 * hi {
                break;
            }
        }
        0.5 * (lo + hi)
    };
    // Profile reduction: with b solving its own equation at each a, the
    // leftover residual in a is increasing (the profiled objective stays
    // concave), so one outer bisection reaches the box-constrained
    // optimum even on near-degenerate ridges where Newton crawls.
    let profile = |av: f64| {
        let bv = solve_coord(s2, av);
        (special::digamma_raw(av) - special::digamma_raw(av + bv) - s1, bv)
    };
    let (h_hi, b_hi) = profile(SHAPE_HI);
    (a, b) = if h_hi < 0.0 {
        (SHAPE_HI, b_hi)
    } else {
        let (h_lo, b_lo) = profile(SHAPE_LO);
        if h_lo > 0.0 {
            (SHAPE_LO, b_lo)
        } else {
            let (mut alo, mut ahi) = (SHAPE_LO, SHAPE_HI);
            for _ in 0..200 {
                let mid = 0.5 * (alo + ahi);
                if profile(mid).0 < 0.0 {
                    alo = mid;
                } else {
                    ahi = mid;
                }
                if ahi - alo <= 1e-14 * ahi {
                    break;
                }
            }
            let av = 0.5 * (alo + ahi);
            (av, solve_coord(s2, av))
        }
    };
    let (f1, f2) = resid(a, b);
    if solved(a, f1) && solved(b, f2) {
        return Ok((a, b));
    }
    Err(Error::Numeric(format!(
        "shape solver stalled after {newton_iters} Newton iterations and profile \
         bisection: residuals ({f1:.3e}, {f2:.3e}) at a={a:.6e}, b={b:.6e}, \
         targets s1={s1:.6e}, s2={s2:.6e}",
    )))
}

/// Solve ψ((ν−1)/2) − ψ(ν/2) = t for ν ∈ (1, n], clamping at either end.
/// The left side is strictly increasing in ν, so the root is unique.
fn solve_nu(t: f64, n: f64) -> f64 {
    let g = |nu: f64| {
        special::digamma_raw((nu - 1.0) / 2.0) - special::digamma_raw(nu / 2.0) - t
    };
    let mut lo = 1.0 + 1e-6;
    let mut hi = n;
    if g(hi) <= 0.0 {
        return hi;
    }
    if g(lo) >= 0.0 {
        return lo;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * n {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Truncation point for the non-null support.
///
/// Scans a 512-point grid from the 10th percentile of the observed z to
/// the largest observed z and minimizes the squared gap between the
/// (1−δ)-discounted count of z above c and the null-expected count
/// p̂0·M·(1 − I_c((ν−1)/2, 1/2)). Returns 1 (no truncation) when the
/// minimum sits at the bottom edge of that range.
pub fn estimate_c_delta(z: &ZVector, params: &MixtureParams, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain { what: "delta must be in (0,1)", value: delta });
    }
    let mut zs = z.z().to_vec();
    zs.sort_unstable_by(|x, y| x.partial_cmp(y).unwrap());
    estimate_c_delta_sorted(&zs, params, delta)
}

fn estimate_c_delta_sorted(zs: &[f64], params: &MixtureParams, delta: f64) -> Result<f64> {
    let m = zs.len();
    let a0 = params.null_alpha();
    let lo = zs[m / 10];
    let hi = zs[m - 1];
    if !(hi > lo) {
        return Ok(1.0);
    }
    const POINTS: usize = 512;
    let mut best_c = 1.0;
    let mut best_obj = f64::INFINITY;
    let mut best_g = POINTS - 1;
    for g in 0..POINTS {
        let c = lo + (hi - lo) * g as f64 / (POINTS - 1) as f64;
        let above = (m - zs.partition_point(|&v| v <= c)) as f64;
        let expected = params.p0 * m as f64 * (1.0 - special::inc_beta_raw(c, a0, 0.5));
        let gap = (1.0 - delta) * above - expected;
        let obj = gap * gap;
        if obj < best_obj {
            best_obj = obj;
            best_c = c;
            best_g = g;
        }
    }
    // A minimum at the bottom edge of the candidate range would truncate
    // into the bulk of the data; report the full support instead.
    Ok(if best_g == 0 { 1.0 } else { best_c })
}

/// Mixture log-likelihood Σ_j log[p0 f0(z_j) + (1−p0) f(z_j)].
pub fn log_likelihood(z: &ZVector, params: &MixtureParams) -> f64 {
    let cache = Cache::build(z.z());
    log_likelihood_cached(z.z(), &cache, params)
}

fn log_likelihood_cached(z: &[f64], cache: &Cache, params: &MixtureParams) -> f64 {
    let ctx = DensityContext::new(params);
    let p0 = params.p0;
    let (ln_p0, ln_p1) = (float::ln(p0), float::ln_1p(-p0));
    sum::sum_indexed(z.len(), |j| {
        let lf0 = ctx.log_f0(cache.ln_z[j], cache.ln_1mz[j]);
        let lf1 = ctx.log_f1(z[j], cache.ln_z[j], cache.ln_1mz[j]);
        let l0 = if p0 > 0.0 { ln_p0 + lf0 } else { f64::NEG_INFINITY };
        let l1 = if p0 < 1.0 { ln_p1 + lf1 } else { f64::NEG_INFINITY };
        log_sum_exp2(l0, l1)
    })
}

#[inline]
fn log_sum_exp2(x: f64, y: f64) -> f64 {
    let (hi, lo) = if x >= y { (x, y) } else { (y, x) };
    if hi == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    hi + float::ln_1p(float::exp(lo - hi))
}

/// Full EM fit.
///
/// Alternates E and M steps (re-estimating C_δ each iteration when
/// enabled and not frozen) until the relative log-likelihood change
/// drops below `tol` or `max_iter` is reached.
pub fn fit(z: &ZVector, options: &FitOptions) -> Result<FitResult> {
    require_min_pairs(z)?;
    let cache = Cache::build(z.z());
    let n = z.n_samples() as f64;
    let mut params = init_params(z, options)?;
    let sorted_z = if options.estimate_c_delta {
        let mut zs = z.z().to_vec();
        zs.sort_unstable_by(|x, y| x.partial_cmp(y).unwrap());
        Some(zs)
    } else {
        None
    };

    let mut trace: Vec<f64> = Vec::new();
    let mut prev_ll = f64::NEG_INFINITY;
    let mut converged = false;
    for iter in 0..options.max_iter {
        let posteriors = e_step_cached(z.z(), &cache, &params);
        params = m_step_cached(z.z(), &cache, &posteriors, &params, options.estimate_ess, n)?;
        if let Some(zs) = &sorted_z {
            if !options.freeze_c_delta || iter == 0 {
                let c = estimate_c_delta_sorted(zs, &params, options.delta)?;
                params = MixtureParams { c_delta: c, ..params };
            }
        }
        let ll = log_likelihood_cached(z.z(), &cache, &params);
        trace.push(ll);
        if float::abs(ll - prev_ll) / (1.0 + float::abs(ll)) < options.tol {
            converged = true;
            break;
        }
        prev_ll = ll;
    }
    // Posteriors aligned with, and computed from, the returned parameters.
    let posteriors = e_step_cached(z.z(), &cache, &params);
    let iterations = trace.len();
    Ok(FitResult { params, posteriors, loglik_trace: trace, iterations, converged, options: *options })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pairs::ZVector;
    use rand::{Rng, SeedableRng};

    fn zvec(values: Vec<f64>, n: usize) -> ZVector {
        let p = (1..)
            .find(|&p| p * (p - 1) / 2 == values.len())
            .expect("test vector length must be triangular");
        let r: Vec<f64> = values.iter().map(|&z| (1.0 - z).sqrt()).collect();
        ZVector::from_parts(values, r, p, n, true).unwrap()
    }

    /// Beta sampler via Johnk/gamma-free ratio: good enough for tests.
    fn sample_beta<R: Rng>(rng: &mut R, a: f64, b: f64) -> f64 {
        // Two-gamma construction with Marsaglia-Tsang.
        let x = sample_gamma(rng, a);
        let y = sample_gamma(rng, b);
        (x / (x + y)).clamp(1e-12, 1.0 - 1e-12)
    }

    fn sample_gamma<R: Rng>(rng: &mut R, shape: f64) -> f64 {
        if shape < 1.0 {
            let u: f64 = rng.gen();
            return sample_gamma(rng, shape + 1.0) * u.powf(1.0 / shape);
        }
        let d = shape - 1.0 / 3.0;
        let c = 1.0 / (9.0 * d).sqrt();
        loop {
            let x: f64 = rng.sample(rand_distr::StandardNormal);
            let v = 1.0 + c * x;
            if v <= 0.0 {
                continue;
            }
            let v = v * v * v;
            let u: f64 = rng.gen();
            if u < 1.0 - 0.0331 * x * x * x * x
                || u.ln() < 0.5 * x * x + d * (1.0 - v + v.ln())
            {
                return d * v;
            }
        }
    }

    fn mixture_draws(m_target: usize, seed: u64) -> (ZVector, usize) {
        // Nearest triangular count at or above the target.
        let p = (1..).find(|&p| p * (p - 1) / 2 >= m_target).unwrap();
        let m = p * (p - 1) / 2;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut z = Vec::with_capacity(m);
        for _ in 0..m {
            let v = if rng.gen::<f64>() < 0.8 {
                sample_beta(&mut rng, 24.5, 0.5)
            } else {
                sample_beta(&mut rng, 5.0, 3.0)
            };
            z.push(v);
        }
        let r: Vec<f64> = z.iter().map(|&z| (1.0 - z).sqrt()).collect();
        (ZVector::from_parts(z, r, p, 50, true).unwrap(), m)
    }

    #[test]
    fn e_step_trivial_cases() {
        let z = zvec(vec![0.2, 0.4, 0.5, 0.6, 0.7, 0.8, 0.3, 0.9, 0.55, 0.45], 20);
        // Identical components: posterior equals p0 = 0.5 everywhere.
        let p = MixtureParams::new(0.5, 9.5, 0.5, 20.0, 1.0).unwrap();
        let post = e_step(&z, &p);
        for &v in post.m0_hat() {
            assert!((v - 0.5).abs() < 1e-12);
        }
        // Degenerate null weight.
        let p1 = MixtureParams::new(1.0, 5.0, 3.0, 20.0, 1.0).unwrap();
        assert!(e_step(&z, &p1).m0_hat().iter().all(|&v| v == 1.0));
        // Beyond truncated support the posterior is exactly 1.
        let pc = MixtureParams::new(0.5, 5.0, 3.0, 20.0, 0.8).unwrap();
        let post = e_step(&z, &pc);
        assert_eq!(post.m0_hat()[7], 1.0);
        assert!(post.m0_hat()[0] < 1.0);
    }

    #[test]
    fn shape_solver_symmetry() {
        // Equal targets force a = b.
        let t = special::digamma(3.0).unwrap() - special::digamma(6.0).unwrap();
        let (a, b) = solve_shapes(t, t, 1.5, 4.0).unwrap();
        assert!((a - b).abs() < 1e-8, "a={a} b={b}");
        assert!((a - 3.0).abs() < 1e-6);
    }

    #[test]
    fn nu_equation_recovers_sample_size() {
        // At the exact expected log-z of the null at n, the solution is n.
        let n = 50.0;
        let t = special::digamma(24.5).unwrap() - special::digamma(25.0).unwrap();
        let nu = solve_nu(t, n);
        assert!((nu - 50.0).abs() < 0.5, "nu={nu}");
    }

    #[test]
    fn nu_lhs_is_increasing() {
        let mut prev = f64::NEG_INFINITY;
        for k in 0..50 {
            let nu = 1.01 + 0.8 * k as f64;
            let v = special::digamma_raw((nu - 1.0) / 2.0) - special::digamma_raw(nu / 2.0);
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn unweighted_mstep_recovers_shapes() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let p = 142; // M = 10011
        let m = p * (p - 1) / 2;
        let z: Vec<f64> = (0..m).map(|_| sample_beta(&mut rng, 5.0, 3.0)).collect();
        let r: Vec<f64> = z.iter().map(|&v| (1.0 - v).sqrt()).collect();
        let zv = ZVector::from_parts(z, r, p, 50, true).unwrap();
        let post = PosteriorVector { m0: vec![0.0; m] };
        let params = MixtureParams::new(0.5, 1.0, 1.0, 50.0, 1.0).unwrap();
        let out = m_step(&zv, &post, &params, false).unwrap();
        assert!((out.a() - 5.0).abs() / 5.0 < 0.1, "a={}", out.a());
        assert!((out.b() - 3.0).abs() / 3.0 < 0.1, "b={}", out.b());
        assert_eq!(out.p0(), 0.0);
    }

    #[test]
    fn init_on_pure_null_is_mostly_null() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let p = 142;
        let m = p * (p - 1) / 2;
        let z: Vec<f64> = (0..m).map(|_| sample_beta(&mut rng, 24.5, 0.5)).collect();
        let r: Vec<f64> = z.iter().map(|&v| (1.0 - v).sqrt()).collect();
        let zv = ZVector::from_parts(z, r, p, 50, true).unwrap();
        let params = init_params(&zv, &FitOptions::default()).unwrap();
        assert!(params.p0() >= 0.85, "p0 init {}", params.p0());
    }

    #[test]
    fn moment_init_close_on_known_shapes() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let xs: Vec<f64> = (0..100_000).map(|_| sample_beta(&mut rng, 5.0, 3.0)).collect();
        let (a, b) = moments_shape(&xs).unwrap();
        assert!((a - 5.0).abs() / 5.0 < 0.3, "a={a}");
        assert!((b - 3.0).abs() / 3.0 < 0.3, "b={b}");
    }

    #[test]
    fn fit_recovers_mixture() {
        let (zv, _m) = mixture_draws(20_000, 99);
        let opts = FitOptions { estimate_ess: true, ..FitOptions::default() };
        let fit = fit(&zv, &opts).unwrap();
        let p = fit.params();
        assert!(fit.converged());
        assert!((p.p0() - 0.8).abs() / 0.8 < 0.05, "p0={}", p.p0());
        assert!((p.a() - 5.0).abs() / 5.0 < 0.15, "a={}", p.a());
        assert!((p.b() - 3.0).abs() / 3.0 < 0.15, "b={}", p.b());
        assert!((p.nu() - 50.0).abs() / 50.0 < 0.05, "nu={}", p.nu());
        // Monotone likelihood trace.
        for w in fit.loglik_trace().windows(2) {
            assert!(w[1] >= w[0] - 1e-9, "trace decreased: {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn fixed_c_delta_forces_posterior_one_above_cut() {
        let (zv, _m) = mixture_draws(2_000, 5);
        let params = MixtureParams::new(0.8, 5.0, 3.0, 50.0, 0.9).unwrap();
        let post = e_step(&zv, &params);
        for (j, &v) in zv.z().iter().enumerate() {
            if v >= 0.9 {
                assert_eq!(post.m0_hat()[j], 1.0);
            }
        }
    }

    #[test]
    fn small_input_rejected() {
        let z = vec![0.5, 0.6, 0.7];
        let r: Vec<f64> = z.iter().map(|&v| (1.0 - v as f64).sqrt()).collect();
        let zv = ZVector::from_parts(z, r, 3, 10, true).unwrap();
        assert!(fit(&zv, &FitOptions::default()).is_err());
    }

    #[test]
    fn loglik_single_point_closed_form() {
        // One Beta(1, 1/2) null point at z = 0.5 with p0 = 1:
        // log f0 = log(0.5 * sqrt(2)).
        let z = zvec(vec![0.5; 10], 3);
        let params = MixtureParams::new(1.0, 2.0, 2.0, 3.0, 1.0).unwrap();
        let ll = log_likelihood(&z, &params);
        let want = 10.0 * (0.5_f64 * 2.0_f64.sqrt()).ln();
        assert!((ll - want).abs() < 1e-10, "{ll} vs {want}");
    }

    #[test]
    fn loglik_p0_zero_is_nonnull_only() {
        let z = zvec(vec![0.2, 0.4, 0.5, 0.6, 0.7, 0.8, 0.3, 0.1, 0.55, 0.45], 20);
        let params = MixtureParams::new(0.0, 5.0, 3.0, 20.0, 1.0).unwrap();
        let ll = log_likelihood(&z, &params);
        let shape = special::BetaShape::standard(5.0, 3.0).unwrap();
        let want: f64 = z.z().iter().map(|&v| shape.log_density(v)).sum();
        assert!((ll - want).abs() < 1e-9);
    }

    #[test]
    fn c_delta_on_separated_components() {
        // Non-null mass below 0.5, null above: the cut lands between.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        let p = 142;
        let m = p * (p - 1) / 2;
        let mut z = Vec::with_capacity(m);
        for _ in 0..m {
            let v = if rng.gen::<f64>() < 0.85 {
                sample_beta(&mut rng, 49.5, 0.5)
            } else {
                sample_beta(&mut rng, 4.0, 6.0).min(0.49)
            };
            z.push(v);
        }
        let r: Vec<f64> = z.iter().map(|&v| (1.0 - v).sqrt()).collect();
        let zv = ZVector::from_parts(z, r, p, 100, true).unwrap();
        let params = MixtureParams::new(0.85, 4.0, 6.0, 100.0, 1.0).unwrap();
        let c = estimate_c_delta(&zv, &params, 1e-3).unwrap();
        assert!(c > 0.5 && c < 1.0, "c={c}");
    }
}
