//! Shared plumbing: input loading, fitting, graph assembly, output
//! writing, and the per-subcommand drivers.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use betamix_core::data::{parse_delimited, standardize, DataMatrix, NaPolicy};
use betamix_core::graph::{
    bayes_edges, centrality_clusters, classify_majority, frequentist_edges,
    frequentist_threshold, Graph,
};
use betamix_core::mixture::{e_step, fit, FitOptions, FitResult, MixtureParams};
use betamix_core::pairs::{pairwise_z, z_to_abs_r, ZVector};
use betamix_core::special::reg_inc_beta;
use serde::{Deserialize, Serialize};

use crate::{Cmd, FitFlags, InputOpts, RuleFlags};

pub enum Failure {
    Input(String),
    Numeric(String),
}

impl Failure {
    pub fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Numeric(m) => m,
        }
    }

    pub fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::Numeric(_) => 2,
        }
    }
}

impl From<betamix_core::Error> for Failure {
    fn from(e: betamix_core::Error) -> Self {
        match e {
            betamix_core::Error::Numeric(_) => Failure::Numeric(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

type CmdResult = Result<u8, Failure>;

/// Summary of one fit, serialized as the fit subcommand's JSON output.
#[derive(Debug, Serialize, Deserialize)]
pub struct FitSummary {
    pub p0: f64,
    pub a: f64,
    pub b: f64,
    pub nu: f64,
    pub c_delta: f64,
    pub loglik: f64,
    pub iterations: usize,
    pub converged: bool,
    pub n: usize,
    #[serde(rename = "P")]
    pub p: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub z_threshold_bayes: f64,
    pub z_threshold_freq: f64,
}

pub fn run(cmd: Cmd) -> CmdResult {
    match cmd {
        Cmd::Fit { input, fit, tau, epsilon, output } => cmd_fit(input, fit, tau, epsilon, output),
        Cmd::Edges { input, fit, rule, output } => cmd_edges(input, fit, rule, output),
        Cmd::Simulate { input, tau, seed, reps, fit, output } => {
            crate::scenario::cmd_simulate(input, tau, seed, reps, fit, output)
        }
        Cmd::Cluster { input, fit, rule, min_centrality, output } => {
            cmd_cluster(input, fit, rule, min_centrality, output)
        }
        Cmd::Classify { input, fit, rule, labels, min_neighbors, default_label, output } => {
            cmd_classify(input, fit, rule, labels, min_neighbors, default_label, output)
        }
        Cmd::Plotdata { input, fit, tau, output } => cmd_plotdata(input, fit, tau, output),
        Cmd::Threshold { epsilon, fit, input, transpose, output } => {
            cmd_threshold(epsilon, fit, input, transpose, output)
        }
    }
}

fn load_standardized(opts: &InputOpts) -> Result<DataMatrix, Failure> {
    let text = std::fs::read_to_string(&opts.input)
        .map_err(|e| Failure::Input(format!("{}: {e}", opts.input.display())))?;
    let m = parse_delimited(&text, opts.transpose, NaPolicy::Error)?;
    Ok(standardize(&m, !opts.no_center)?)
}

pub(crate) fn fit_options(flags: &FitFlags) -> FitOptions {
    FitOptions {
        estimate_ess: flags.estimate_ess,
        estimate_c_delta: flags.estimate_cdelta,
        delta: flags.delta,
        ..FitOptions::default()
    }
}

fn fit_standardized(s: &DataMatrix, flags: &FitFlags) -> Result<(ZVector, FitResult), Failure> {
    let zv = pairwise_z(s)?;
    let fitted = fit(&zv, &fit_options(flags))?;
    Ok((zv, fitted))
}

/// Resolve the edge rule: exactly one of tau/epsilon, defaulting to the
/// posterior rule at 0.01 when neither is given.
fn build_graph(
    s: &DataMatrix,
    zv: &ZVector,
    fitted: &FitResult,
    rule: &RuleFlags,
) -> Result<Graph, Failure> {
    let mut g = match (rule.tau, rule.epsilon) {
        (Some(_), Some(_)) => {
            return Err(Failure::Input("pass either --tau or --epsilon, not both".into()))
        }
        (None, Some(eps)) => frequentist_edges(zv, fitted.params().nu(), eps)?,
        (Some(tau), None) => bayes_edges(zv, fitted.posteriors(), tau)?,
        (None, None) => bayes_edges(zv, fitted.posteriors(), 0.01)?,
    };
    g.attach_posteriors(fitted.posteriors())?;
    g.set_node_names(s.names())?;
    Ok(g)
}

pub(crate) fn write_output(path: &Option<PathBuf>, content: &str) -> Result<(), Failure> {
    match path {
        None => {
            print!("{content}");
            Ok(())
        }
        Some(p) => {
            let dir = match p.parent() {
                Some(d) if !d.as_os_str().is_empty() => d,
                _ => Path::new("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
            tmp.write_all(content.as_bytes())?;
            tmp.persist(p)
                .map_err(|e| Failure::Input(format!("{}: {}", p.display(), e.error)))?;
            Ok(())
        }
    }
}

fn summarize(s: &DataMatrix, zv: &ZVector, fitted: &FitResult, tau: f64, epsilon: f64) -> Result<FitSummary, Failure> {
    let params = fitted.params();
    let bayes = bayes_edges(zv, fitted.posteriors(), tau)?;
    Ok(FitSummary {
        p0: params.p0(),
        a: params.a(),
        b: params.b(),
        nu: params.nu(),
        c_delta: params.c_delta(),
        loglik: fitted.loglik(),
        iterations: fitted.iterations(),
        converged: fitted.converged(),
        n: s.n(),
        p: s.p(),
        m: zv.m(),
        z_threshold_bayes: bayes.z_threshold(),
        z_threshold_freq: frequentist_threshold(params.nu(), epsilon)?,
    })
}

fn cmd_fit(
    input: InputOpts,
    flags: FitFlags,
    tau: f64,
    epsilon: f64,
    output: Option<PathBuf>,
) -> CmdResult {
    let s = load_standardized(&input)?;
    let (zv, fitted) = fit_standardized(&s, &flags)?;
    let summary = summarize(&s, &zv, &fitted, tau, epsilon)?;
    let mut json = serde_json::to_string_pretty(&summary)?;
    json.push('\n');
    write_output(&output, &json)?;
    Ok(if fitted.converged() { 0 } else { 2 })
}

fn cmd_edges(
    input: InputOpts,
    flags: FitFlags,
    rule: RuleFlags,
    output: Option<PathBuf>,
) -> CmdResult {
    let s = load_standardized(&input)?;
    let (zv, fitted) = fit_standardized(&s, &flags)?;
    let g = build_graph(&s, &zv, &fitted, &rule)?;

    let mut rows: Vec<_> = g.edges().to_vec();
    rows.sort_by(|x, y| {
        x.posterior_null
            .partial_cmp(&y.posterior_null)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(x.i.cmp(&y.i))
            .then(x.k.cmp(&y.k))
    });
    let names = g.node_names();
    let mut out = String::from("node_i,node_j,r,z,posterior_null\n");
    for e in &rows {
        writeln!(out, "{},{},{},{},{}", names[e.i], names[e.k], e.r, e.z, e.posterior_null)
            .unwrap();
    }
    write_output(&output, &out)?;
    Ok(0)
}

fn cmd_cluster(
    input: InputOpts,
    flags: FitFlags,
    rule: RuleFlags,
    min_centrality: f64,
    output: Option<PathBuf>,
) -> CmdResult {
    let s = load_standardized(&input)?;
    let (zv, fitted) = fit_standardized(&s, &flags)?;
    let g = build_graph(&s, &zv, &fitted, &rule)?;

    let assignment = centrality_clusters(&g, min_centrality, true);
    let names = g.node_names();
    let mut out = String::from("cluster_id,center,member\n");
    for (id, cluster) in assignment.clusters.iter().enumerate() {
        for &member in &cluster.members {
            writeln!(out, "{},{},{}", id + 1, names[cluster.center], names[member]).unwrap();
        }
    }
    write_output(&output, &out)?;
    Ok(0)
}

fn parse_labels(path: &Path, names: &[String]) -> Result<BTreeMap<usize, String>, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let by_name: BTreeMap<&str, usize> =
        names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    if by_name.len() != names.len() {
        return Err(Failure::Input("node names are not unique; cannot match labels".into()));
    }
    let mut labels = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (lineno == 0 && line.eq_ignore_ascii_case("node,label")) {
            continue;
        }
        let (node, label) = line.split_once(',').ok_or_else(|| {
            Failure::Input(format!("labels line {}: expected node,label", lineno + 1))
        })?;
        let idx = *by_name.get(node.trim()).ok_or_else(|| {
            Failure::Input(format!("labels line {}: unknown node {:?}", lineno + 1, node.trim()))
        })?;
        labels.insert(idx, label.trim().to_string());
    }
    if labels.is_empty() {
        return Err(Failure::Input("labels file contains no usable rows".into()));
    }
    Ok(labels)
}

fn cmd_classify(
    input: InputOpts,
    flags: FitFlags,
    rule: RuleFlags,
    labels: PathBuf,
    min_neighbors: usize,
    default_label: Option<String>,
    output: Option<PathBuf>,
) -> CmdResult {
    let s = load_standardized(&input)?;
    let (zv, fitted) = fit_standardized(&s, &flags)?;
    let g = build_graph(&s, &zv, &fitted, &rule)?;
    let train = parse_labels(&labels, g.node_names())?;

    // Fallback label: most frequent training label unless overridden.
    let default = match default_label {
        Some(d) => d,
        None => {
            let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
            for label in train.values() {
                *counts.entry(label).or_default() += 1;
            }
            counts
                .iter()
                .max_by_key(|(_, &c)| c)
                .map(|(l, _)| l.to_string())
                .unwrap()
        }
    };

    let predicted = classify_majority(&g, &train, min_neighbors, &default)?;
    let names = g.node_names();
    let mut out = String::from("node,label\n");
    for (&node, label) in &predicted {
        writeln!(out, "{},{}", names[node], label).unwrap();
    }
    write_output(&output, &out)?;
    Ok(0)
}

fn cmd_plotdata(
    input: InputOpts,
    fit_json: PathBuf,
    tau: f64,
    output: Option<PathBuf>,
) -> CmdResult {
    let text = std::fs::read_to_string(&fit_json)
        .map_err(|e| Failure::Input(format!("{}: {e}", fit_json.display())))?;
    let summary: FitSummary = serde_json::from_str(&text)?;
    let params =
        MixtureParams::new(summary.p0, summary.a, summary.b, summary.nu, summary.c_delta)?;

    let s = load_standardized(&input)?;
    let zv = pairwise_z(&s)?;
    let post = e_step(&zv, &params);
    let threshold = bayes_edges(&zv, &post, tau)?.z_threshold();

    const BINS: usize = 100;
    let width = 1.0 / BINS as f64;
    let mut counts = [0usize; BINS];
    for &z in zv.z() {
        counts[((z / width) as usize).min(BINS - 1)] += 1;
    }

    let a0 = params.null_alpha();
    let null_cdf = |x: f64| reg_inc_beta(x.clamp(0.0, 1.0), a0, 0.5);
    let c = params.c_delta();
    let nonnull_mass = reg_inc_beta(c, params.a(), params.b())?;
    let nonnull_cdf = |x: f64| -> Result<f64, betamix_core::Error> {
        Ok(reg_inc_beta(x.clamp(0.0, c), params.a(), params.b())? / nonnull_mass)
    };

    let m = zv.m() as f64;
    let mut out = String::from(
        "bin_center,histogram_density,null_density,nonnull_density,mixture_density,z_threshold\n",
    );
    for k in 0..BINS {
        let (lo, hi) = (k as f64 * width, (k + 1) as f64 * width);
        let hist = counts[k] as f64 / (m * width);
        let null = params.p0() * (null_cdf(hi)? - null_cdf(lo)?) / width;
        let nonnull = (1.0 - params.p0()) * (nonnull_cdf(hi)? - nonnull_cdf(lo)?) / width;
        writeln!(
            out,
            "{},{},{},{},{},{}",
            lo + 0.5 * width,
            hist,
            null,
            nonnull,
            null + nonnull,
            threshold
        )
        .unwrap();
    }
    write_output(&output, &out)?;
    Ok(0)
}

fn cmd_threshold(
    epsilon: f64,
    fit_json: Option<PathBuf>,
    input: Option<PathBuf>,
    transpose: bool,
    output: Option<PathBuf>,
) -> CmdResult {
    let nu = match (fit_json, input) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
            let summary: FitSummary = serde_json::from_str(&text)?;
            summary.nu
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
            parse_delimited(&text, transpose, NaPolicy::Error)?.n() as f64
        }
        (None, None) => {
            return Err(Failure::Input("pass --fit or --input to supply the sample size".into()))
        }
    };
    let z = frequentist_threshold(nu, epsilon)?;
    let mut out = String::from("epsilon,nu,z_threshold,abs_r_threshold\n");
    writeln!(out, "{},{},{},{}", epsilon, nu, z, z_to_abs_r(z)).unwrap();
    write_output(&output, &out)?;
    Ok(0)
}
