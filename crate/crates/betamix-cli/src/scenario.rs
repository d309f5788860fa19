//! Simulation subcommand: declarative scenario configs in, accuracy
//! table out.

use std::fmt::Write as _;
use std::path::PathBuf;

use betamix_core::sim::{run_scenario, CorrelationSpec, StructureKind};
use serde::Deserialize;

use crate::pipeline::Failure;
use crate::FitFlags;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioConfig {
    structure: String,
    p: usize,
    rho: f64,
    #[serde(default)]
    size: Option<usize>,
    n: usize,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    reps: Option<usize>,
}

struct ScenarioRun {
    spec: CorrelationSpec,
    n: usize,
    reps: usize,
}

impl ScenarioConfig {
    fn into_run(self, default_seed: u64, default_reps: usize) -> Result<ScenarioRun, Failure> {
        let kind = StructureKind::parse(&self.structure)?;
        let spec = CorrelationSpec {
            kind,
            p: self.p,
            rho: self.rho,
            size_param: self.size.unwrap_or(1),
            seed: self.seed.unwrap_or(default_seed),
        };
        spec.validate()?;
        Ok(ScenarioRun { spec, n: self.n, reps: self.reps.unwrap_or(default_reps) })
    }
}

/// Parse either a JSON array of scenario objects or key=value blocks
/// separated by blank lines (# starts a comment).
fn parse_config(text: &str) -> Result<Vec<ScenarioConfig>, Failure> {
    if text.trim_start().starts_with('[') {
        return Ok(serde_json::from_str(text)?);
    }
    let mut configs = Vec::new();
    let mut block: Vec<(String, String)> = Vec::new();
    let mut flush = |block: &mut Vec<(String, String)>| -> Result<(), Failure> {
        if block.is_empty() {
            return Ok(());
        }
        let mut map = serde_json::Map::new();
        for (key, value) in block.drain(..) {
            let parsed: serde_json::Value = match key.as_str() {
                "structure" => serde_json::Value::String(value),
                _ => value.parse().map_err(|_| {
                    Failure::Input(format!("scenario key {key}: non-numeric value {value:?}"))
                })?,
            };
            if map.insert(key.clone(), parsed).is_some() {
                return Err(Failure::Input(format!("scenario key {key} repeated in one block")));
            }
        }
        configs.push(serde_json::from_value(serde_json::Value::Object(map))?);
        Ok(())
    };
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            flush(&mut block)?;
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Failure::Input(format!("scenario line {}: expected key=value", lineno + 1))
        })?;
        block.push((key.trim().to_string(), value.trim().to_string()));
    }
    flush(&mut block)?;
    if configs.is_empty() {
        return Err(Failure::Input("scenario config defines no scenarios".into()));
    }
    Ok(configs)
}

pub fn cmd_simulate(
    input: PathBuf,
    tau: f64,
    seed: u64,
    reps: usize,
    flags: FitFlags,
    output: Option<PathBuf>,
) -> Result<u8, Failure> {
    let text = std::fs::read_to_string(&input)
        .map_err(|e| Failure::Input(format!("{}: {e}", input.display())))?;
    let runs: Vec<ScenarioRun> = parse_config(&text)?
        .into_iter()
        .map(|c| c.into_run(seed, reps))
        .collect::<Result<_, _>>()?;

    let options = crate::pipeline::fit_options(&flags);
    let mut out = String::from("structure,rho,N,P,settings,TPR,FDR\n");
    for run in &runs {
        let result = run_scenario(&run.spec, run.n, run.reps, &options, tau)?;
        writeln!(
            out,
            "{},{},{},{},size={},{:.6},{:.3e}",
            run.spec.kind.name(),
            run.spec.rho,
            run.n,
            run.spec.p,
            run.spec.size_param,
            result.tpr,
            result.fdr
        )
        .unwrap();
    }
    crate::pipeline::write_output(&output, &out)?;
    Ok(0)
}
