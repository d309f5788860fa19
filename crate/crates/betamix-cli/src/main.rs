//! Batch front end for the correlation-network pipeline.
//!
//! Exit codes: 0 success, 1 input error, 2 numeric non-convergence.

mod pipeline;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "betamix", version, about = "Correlation-network discovery from pairwise angle statistics")]
struct Cli {
    /// Worker thread count (default: all cores); results do not depend on it
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct InputOpts {
    /// Delimited data file (comma or tab, header row, samples in rows)
    #[arg(long)]
    input: PathBuf,
    /// Input holds variables in rows and samples in columns
    #[arg(long)]
    transpose: bool,
    /// Scale columns to unit norm without centering them first
    #[arg(long)]
    no_center: bool,
}

#[derive(Args)]
struct FitFlags {
    /// Estimate the effective sample size instead of using the row count
    #[arg(long)]
    estimate_ess: bool,
    /// Estimate the non-null truncation point during the fit
    #[arg(long)]
    estimate_cdelta: bool,
    /// Exceedance fraction used by the truncation scan
    #[arg(long, default_value_t = 1e-3)]
    delta: f64,
}

#[derive(Args)]
struct RuleFlags {
    /// Posterior-probability edge cutoff (pairs with m0 below it become edges)
    #[arg(long)]
    tau: Option<f64>,
    /// Null-quantile screening level (pairs with z below the quantile become edges)
    #[arg(long)]
    epsilon: Option<f64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Fit the two-component mixture and print a JSON summary
    Fit {
        #[command(flatten)]
        input: InputOpts,
        #[command(flatten)]
        fit: FitFlags,
        /// Posterior cutoff reported as z_threshold_bayes
        #[arg(long, default_value_t = 0.01)]
        tau: f64,
        /// Screening level reported as z_threshold_freq
        #[arg(long, default_value_t = 1e-5)]
        epsilon: f64,
        /// Write the JSON here instead of stdout
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Extract the edge list under one edge rule
    Edges {
        #[command(flatten)]
        input: InputOpts,
        #[command(flatten)]
        fit: FitFlags,
        #[command(flatten)]
        rule: RuleFlags,
        /// Write the edge table here instead of stdout
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run simulation scenarios from a config file and tabulate accuracy
    Simulate {
        /// Scenario config: key=value blocks or a JSON array
        #[arg(long)]
        input: PathBuf,
        /// Posterior edge cutoff applied in every scenario
        #[arg(long, default_value_t = 0.01)]
        tau: f64,
        /// Seed for scenarios that do not set one
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Repetitions for scenarios that do not set them
        #[arg(long, default_value_t = 10)]
        reps: usize,
        #[command(flatten)]
        fit: FitFlags,
        /// Write the results table here instead of stdout
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Group nodes around high-centrality centers
    Cluster {
        #[command(flatten)]
        input: InputOpts,
        #[command(flatten)]
        fit: FitFlags,
        #[command(flatten)]
        rule: RuleFlags,
        /// Stop once the best remaining centrality drops below this
        #[arg(long, default_value_t = 3.0)]
        min_centrality: f64,
        /// Write the cluster table here instead of stdout
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Label unlabeled nodes by neighbor majority vote
    Classify {
        #[command(flatten)]
        input: InputOpts,
        #[command(flatten)]
        fit: FitFlags,
        #[command(flatten)]
        rule: RuleFlags,
        /// Two-column node,label file with the training labels
        #[arg(long)]
        labels: PathBuf,
        /// Nodes with fewer labeled neighbors fall back to the default label
        #[arg(long, default_value_t = 1)]
        min_neighbors: usize,
        /// Fallback label (default: the most frequent training label)
        #[arg(long)]
        default_label: Option<String>,
        /// Write the predicted labels here instead of stdout
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Emit binned histogram and model densities for plotting
    Plotdata {
        #[command(flatten)]
        input: InputOpts,
        /// JSON summary from a previous fit of the same data
        #[arg(long)]
        fit: PathBuf,
        /// Posterior cutoff defining the reported z threshold
        #[arg(long, default_value_t = 0.01)]
        tau: f64,
        /// Write the plot table here instead of stdout
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Report the screening z cutoff and the |r| it implies
    Threshold {
        /// Screening level
        #[arg(long, default_value_t = 1e-5)]
        epsilon: f64,
        /// Take the effective sample size from this fit JSON
        #[arg(long)]
        fit: Option<PathBuf>,
        /// Take the sample size from this data file instead
        #[arg(long)]
        input: Option<PathBuf>,
        /// Input holds variables in rows and samples in columns
        #[arg(long)]
        transpose: bool,
        /// Write the threshold table here instead of stdout
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    match pipeline::run(cli.cmd) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
