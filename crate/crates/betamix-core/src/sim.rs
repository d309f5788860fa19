//! Synthetic correlation structures, multivariate normal sampling, and
//! the end-to-end scenario harness scoring edge recovery.

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::graph;
use crate::linalg;
use crate::mixture::FitOptions;
use crate::pairs;
use crate::special;
use crate::{float, mixture};
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Correlation specified lower than this is treated as absent when
/// building ground truth.
const TRUTH_EPS: f64 = 1e-10;

/// Family of the synthetic correlation structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StructureKind {
    /// Consecutive blocks of equal size, constant rho inside each block.
    Clusters,
    /// 40 consecutive blocks with seeded random sizes.
    RandomClusters,
    /// rho whenever 0 < |i−k| <= width.
    Band,
    /// Blockwise rings: consecutive neighbors plus the wraparound pair.
    Cycle,
    /// rho^{|i−k|} everywhere.
    Ar1,
    /// AR(1) inside the first block only, identity elsewhere.
    BlockAr1,
    /// Tiled stars: first node of each block correlated with the rest.
    Hub,
    /// Regression design with a response appended as the last column.
    LinearModel,
    /// No correlation at all.
    Identity,
}

impl StructureKind {
    pub fn name(&self) -> &'static str {
        match self {
            StructureKind::Clusters => "clusters",
            StructureKind::RandomClusters => "random_clusters",
            StructureKind::Band => "band",
            StructureKind::Cycle => "cycle",
            StructureKind::Ar1 => "ar1",
            StructureKind::BlockAr1 => "block_ar1",
            StructureKind::Hub => "hub",
            StructureKind::LinearModel => "linear_model",
            StructureKind::Identity => "identity",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "clusters" => StructureKind::Clusters,
            "random_clusters" => StructureKind::RandomClusters,
            "band" => StructureKind::Band,
            "cycle" => StructureKind::Cycle,
            "ar1" => StructureKind::Ar1,
            "block_ar1" => StructureKind::BlockAr1,
            "hub" => StructureKind::Hub,
            "linear_model" => StructureKind::LinearModel,
            "identity" => StructureKind::Identity,
            other => return Err(Error::Input(format!("unknown structure kind {other:?}"))),
        })
    }
}

/// Full description of one synthetic structure.
///
/// `size_param` is the block size for clusters, the width for band, the
/// ring length for cycle, the block size for block_ar1 and hub; for
/// linear_model it selects the design (0 independent, 1 AR(1) block,
/// 2 hub block); other kinds ignore it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationSpec {
    pub kind: StructureKind,
    pub p: usize,
    pub rho: f64,
    pub size_param: usize,
    pub seed: u64,
}

impl CorrelationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.p < 2 {
            return Err(Error::Input(format!("P={} is too small", self.p)));
        }
        if !(self.rho > -1.0 && self.rho < 1.0) {
            return Err(Error::Domain { what: "rho must be in (-1,1)", value: self.rho });
        }
        match self.kind {
            StructureKind::Clusters
            | StructureKind::Band
            | StructureKind::Cycle
            | StructureKind::BlockAr1
            | StructureKind::Hub => {
                if self.size_param == 0 || self.size_param > self.p {
                    return Err(Error::Input(format!(
                        "size parameter {} out of range for P={}",
                        self.size_param, self.p
                    )));
                }
            }
            StructureKind::LinearModel => {
                if self.size_param > 2 {
                    return Err(Error::Input(format!(
                        "linear model design selector must be 0, 1 or 2, got {}",
                        self.size_param
                    )));
                }
                if self.p < 100 {
                    return Err(Error::Input(format!(
                        "linear model needs P >= 100, got {}",
                        self.p
                    )));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// A built correlation target: matrix (row-major P×P), the edge set it
/// implies, and whether positive-definiteness repair was applied.
#[derive(Debug, Clone)]
pub struct CorrelationModel {
    matrix: Vec<f64>,
    p: usize,
    truth: BTreeSet<(usize, usize)>,
    repaired: bool,
}

impl CorrelationModel {
    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Pairs (i<k) whose specified correlation is nonzero.
    pub fn truth(&self) -> &BTreeSet<(usize, usize)> {
        &self.truth
    }

    /// True when the specified matrix was not positive definite and its
    /// eigenvalues were clipped.
    pub fn repaired(&self) -> bool {
        self.repaired
    }

    pub fn entry(&self, i: usize, k: usize) -> f64 {
        self.matrix[i * self.p + k]
    }
}

/// Build the correlation matrix and ground truth for a spec.
///
/// Truth is read off the specified matrix before any repair, so a
/// repaired target keeps the intended edge set. The linear-model kind
/// has no correlation target; use [`sample_linear_model`].
pub fn build_correlation(spec: &CorrelationSpec) -> Result<CorrelationModel> {
    spec.validate()?;
    let p = spec.p;
    if spec.kind == StructureKind::LinearModel {
        return Err(Error::Input(
            "linear_model generates data directly; there is no correlation target".into(),
        ));
    }
    let mut m = alloc::vec![0.0; p * p];
    for i in 0..p {
        m[i * p + i] = 1.0;
    }
    let set = |mat: &mut Vec<f64>, i: usize, k: usize, v: f64| {
        mat[i * p + k] = v;
        mat[k * p + i] = v;
    };
    match spec.kind {
        StructureKind::Identity => {}
        StructureKind::Clusters => {
            let size = spec.size_param;
            let mut offset = 0;
            while offset + size <= p {
                for i in offset..offset + size {
                    for k in i + 1..offset + size {
                        set(&mut m, i, k, spec.rho);
                    }
                }
                offset += size;
            }
        }
        StructureKind::RandomClusters => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let hi = (2 * p / 40).max(5);
            let mut offset = 0;
            for _ in 0..40 {
                let size = rng.gen_range(5..=hi);
                if offset + size > p {
                    break;
                }
                for i in offset..offset + size {
                    for k in i + 1..offset + size {
                        set(&mut m, i, k, spec.rho);
                    }
                }
                offset += size;
            }
        }
        StructureKind::Band => {
            let w = spec.size_param;
            for i in 0..p {
                for k in i + 1..(i + w + 1).min(p) {
                    set(&mut m, i, k, spec.rho);
                }
            }
        }
        StructureKind::Cycle => {
            let len = spec.size_param;
            let mut offset = 0;
            while offset + len <= p {
                for i in offset..offset + len - 1 {
                    set(&mut m, i, i + 1, spec.rho);
                }
                if len > 2 {
                    set(&mut m, offset, offset + len - 1, spec.rho);
                }
                offset += len;
            }
        }
        StructureKind::Ar1 => {
            for i in 0..p {
                for k in i + 1..p {
                    let v = signed_power(spec.rho, k - i);
                    set(&mut m, i, k, v);
                }
            }
        }
        StructureKind::BlockAr1 => {
            let size = spec.size_param;
            for i in 0..size {
                for k in i + 1..size {
                    let v = signed_power(spec.rho, k - i);
                    set(&mut m, i, k, v);
                }
            }
        }
        StructureKind::Hub => {
            let size = spec.size_param;
            let mut offset = 0;
            while offset + size <= p {
                for k in offset + 1..offset + size {
                    set(&mut m, offset, k, spec.rho);
                }
                offset += size;
            }
        }
        StructureKind::LinearModel => unreachable!(),
    }

    let mut truth = BTreeSet::new();
    for i in 0..p {
        for k in i + 1..p {
            if float::abs(m[i * p + k]) > TRUTH_EPS {
                truth.insert((i, k));
            }
        }
    }

    let mut repaired = false;
    if linalg::cholesky(&m, p).is_err() {
        m = clip_to_correlation(&m, p)?;
        repaired = true;
    }
    Ok(CorrelationModel { matrix: m, p, truth, repaired })
}

fn signed_power(rho: f64, k: usize) -> f64 {
    let mag = float::powf(float::abs(rho), k as f64);
    if rho < 0.0 && k % 2 == 1 {
        -mag
    } else {
        mag
    }
}

/// Clip eigenvalues at 1e-6 and rescale back to unit diagonal.
fn clip_to_correlation(m: &[f64], p: usize) -> Result<Vec<f64>> {
    let (d, v) = linalg::sym_eigen(m, p)?;
    let d: Vec<f64> = d.into_iter().map(|x| x.max(1e-6)).collect();
    // A' = V diag(d) V^T, with eigenvectors in the columns of v.
    let mut a = alloc::vec![0.0; p * p];
    for i in 0..p {
        for k in i..p {
            let mut s = 0.0;
            for t in 0..p {
                s += v[i * p + t] * d[t] * v[k * p + t];
            }
            a[i * p + k] = s;
            a[k * p + i] = s;
        }
    }
    let scale: Vec<f64> = (0..p).map(|i| 1.0 / float::sqrt(a[i * p + i])).collect();
    for i in 0..p {
        for k in 0..p {
            a[i * p + k] *= scale[i] * scale[k];
        }
    }
    for i in 0..p {
        a[i * p + i] = 1.0;
    }
    Ok(a)
}

/// Draw n rows from N(0, corr) through the Cholesky factor; fixed draw
/// order per seed, so outputs are reproducible at any thread count.
pub fn sample_mvn(model: &CorrelationModel, n: usize, seed: u64) -> Result<DataMatrix> {
    if n < 3 {
        return Err(Error::Input(format!("need n >= 3 samples, got {n}")));
    }
    let p = model.p;
    let l = linalg::cholesky(&model.matrix, p).map_err(|_| {
        Error::Numeric("correlation target is not positive definite even after repair".into())
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut columns = alloc::vec![alloc::vec![0.0; n]; p];
    let mut u = alloc::vec![0.0; p];
    for row in 0..n {
        for uj in u.iter_mut() {
            *uj = rng.sample(StandardNormal);
        }
        for i in 0..p {
            let li = &l[i * p..i * p + i + 1];
            let mut s = 0.0;
            for (t, &lv) in li.iter().enumerate() {
                s += lv * u[t];
            }
            columns[i][row] = s;
        }
    }
    let names = (0..p).map(|i| format!("v{}", i + 1)).collect();
    DataMatrix::from_columns(columns, names)
}

/// Design of the regression predictors in [`sample_linear_model`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearDesign {
    /// All predictors independent U(0,1).
    Independent,
    /// First 15 predictors dependent through an AR(1) Gaussian copula.
    Ar1Block,
    /// First 15 predictors dependent through a hub Gaussian copula.
    HubBlock,
}

impl LinearDesign {
    pub fn from_selector(sel: usize) -> Result<Self> {
        Ok(match sel {
            0 => LinearDesign::Independent,
            1 => LinearDesign::Ar1Block,
            2 => LinearDesign::HubBlock,
            other => {
                return Err(Error::Input(format!(
                    "linear model design selector must be 0, 1 or 2, got {other}"
                )))
            }
        })
    }
}

const LINEAR_BLOCK: usize = 15;

/// Uniform predictors plus the response
/// Y = 1.6 + 6·X1 + 4·X30 + 3·X100 + noise, noise ~ N(0, 0.1²),
/// appended as the final column named "Y". Returns the data and the
/// ground-truth response adjacency {X1, X30, X100} as pairs with the
/// response index P.
pub fn sample_linear_model(
    p: usize,
    n: usize,
    seed: u64,
    design: LinearDesign,
    rho: f64,
) -> Result<(DataMatrix, BTreeSet<(usize, usize)>)> {
    if p < 100 {
        return Err(Error::Input(format!("linear model needs P >= 100, got {p}")));
    }
    if n < 3 {
        return Err(Error::Input(format!("need n >= 3 samples, got {n}")));
    }
    if !(rho > -1.0 && rho < 1.0) {
        return Err(Error::Domain { what: "rho must be in (-1,1)", value: rho });
    }
    let block = match design {
        LinearDesign::Independent => None,
        LinearDesign::Ar1Block => {
            let spec = CorrelationSpec {
                kind: StructureKind::Ar1,
                p: LINEAR_BLOCK,
                rho,
                size_param: 0,
                seed,
            };
            Some(build_correlation(&spec)?)
        }
        LinearDesign::HubBlock => {
            let spec = CorrelationSpec {
                kind: StructureKind::Hub,
                p: LINEAR_BLOCK,
                rho,
                size_param: LINEAR_BLOCK,
                seed,
            };
            Some(build_correlation(&spec)?)
        }
    };
    let chol = match &block {
        Some(model) => Some(linalg::cholesky(model.matrix(), LINEAR_BLOCK)?),
        None => None,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut columns = alloc::vec![alloc::vec![0.0; n]; p + 1];
    let mut g = alloc::vec![0.0; LINEAR_BLOCK];
    for row in 0..n {
        let start = match &chol {
            Some(l) => {
                for gj in g.iter_mut() {
                    *gj = rng.sample(StandardNormal);
                }
                for i in 0..LINEAR_BLOCK {
                    let mut s = 0.0;
                    for t in 0..=i {
                        s += l[i * LINEAR_BLOCK + t] * g[t];
                    }
                    // Gaussian copula: correlated normals to uniforms.
                    columns[i][row] = special::std_normal_cdf(s);
                }
                LINEAR_BLOCK
            }
            None => 0,
        };
        for col in columns.iter_mut().take(p).skip(start) {
            col[row] = rng.gen();
        }
    }
    for row in 0..n {
        let eps: f64 = rng.sample::<f64, _>(StandardNormal) * 0.1;
        columns[p][row] = 1.6
            + 6.0 * columns[0][row]
            + 4.0 * columns[29][row]
            + 3.0 * columns[99][row]
            + eps;
    }
    let mut names: Vec<String> = (0..p).map(|i| format!("v{}", i + 1)).collect();
    names.push(String::from("Y"));
    let data = DataMatrix::from_columns(columns, names)?;
    let truth = [(0, p), (29, p), (99, p)].into_iter().collect();
    Ok((data, truth))
}

/// Confusion counts and rates of a detected edge set against truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub tp: usize,
    pub fp: usize,
    pub missed: usize,
    pub tpr: f64,
    pub fdr: f64,
}

fn score(detected: &BTreeSet<(usize, usize)>, truth: &BTreeSet<(usize, usize)>) -> Evaluation {
    let tp = detected.intersection(truth).count();
    let fp = detected.len() - tp;
    let missed = truth.len() - tp;
    let tpr = if truth.is_empty() { 0.0 } else { tp as f64 / truth.len() as f64 };
    let fdr = fp as f64 / (tp + fp).max(1) as f64;
    Evaluation { tp, fp, missed, tpr, fdr }
}

/// Score a detected graph against a ground-truth edge set.
pub fn evaluate(detected: &graph::Graph, truth: &BTreeSet<(usize, usize)>) -> Evaluation {
    let set: BTreeSet<(usize, usize)> = detected.edges().iter().map(|e| (e.i, e.k)).collect();
    score(&set, truth)
}

/// One scenario repetition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepOutcome {
    pub tp: usize,
    pub fp: usize,
    pub missed: usize,
    /// z threshold implied by the posterior rule in this repetition.
    pub threshold: f64,
}

impl RepOutcome {
    pub fn tpr(&self, truth_len: usize) -> f64 {
        if truth_len == 0 {
            0.0
        } else {
            self.tp as f64 / truth_len as f64
        }
    }

    pub fn fdr(&self) -> f64 {
        self.fp as f64 / (self.tp + self.fp).max(1) as f64
    }
}

/// Aggregated scenario accuracy: means over repetitions of the per-rep
/// ratios.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub tpr: f64,
    pub fdr: f64,
    pub reps: usize,
    pub per_rep: Vec<RepOutcome>,
}

/// Run a full scenario: per repetition (seed = spec.seed + rep) sample
/// data, compute pair statistics, fit the mixture, apply the posterior
/// edge rule at `tau`, and score against ground truth. For the
/// linear-model kind only edges at the response node are scored.
pub fn run_scenario(
    spec: &CorrelationSpec,
    n: usize,
    reps: usize,
    fit_options: &FitOptions,
    tau: f64,
) -> Result<ScenarioResult> {
    spec.validate()?;
    if reps == 0 {
        return Err(Error::Input("need at least one repetition".into()));
    }
    let model = if spec.kind == StructureKind::LinearModel {
        None
    } else {
        Some(build_correlation(spec)?)
    };

    let one_rep = |rep: usize| -> Result<(RepOutcome, Evaluation)> {
        let seed = spec.seed.wrapping_add(rep as u64);
        let (data, truth) = match &model {
            Some(model) => (sample_mvn(model, n, seed)?, model.truth().clone()),
            None => {
                let design = LinearDesign::from_selector(spec.size_param)?;
                sample_linear_model(spec.p, n, seed, design, spec.rho)?
            }
        };
        let std = crate::data::standardize(&data, true)?;
        let z = pairs::pairwise_z(&std)?;
        let fit = mixture::fit(&z, fit_options)?;
        let g = graph::bayes_edges(&z, fit.posteriors(), tau)?;
        let mut detected: BTreeSet<(usize, usize)> =
            g.edges().iter().map(|e| (e.i, e.k)).collect();
        if spec.kind == StructureKind::LinearModel {
            let response = spec.p;
            detected.retain(|&(i, k)| i == response || k == response);
        }
        let ev = score(&detected, &truth);
        let out = RepOutcome { tp: ev.tp, fp: ev.fp, missed: ev.missed, threshold: g.z_threshold() };
        Ok((out, ev))
    };

    #[cfg(feature = "parallel")]
    let outcomes: Vec<Result<(RepOutcome, Evaluation)>> =
        (0..reps).into_par_iter().map(one_rep).collect();
    #[cfg(not(feature = "parallel"))]
    let outcomes: Vec<Result<(RepOutcome, Evaluation)>> = (0..reps).map(one_rep).collect();

    let mut per_rep = Vec::with_capacity(reps);
    let (mut tpr_sum, mut fdr_sum) = (0.0, 0.0);
    for item in outcomes {
        let (out, ev) = item?;
        tpr_sum += ev.tpr;
        fdr_sum += ev.fdr;
        per_rep.push(out);
    }
    Ok(ScenarioResult {
        tpr: tpr_sum / reps as f64,
        fdr: fdr_sum / reps as f64,
        reps,
        per_rep,
    })
}
