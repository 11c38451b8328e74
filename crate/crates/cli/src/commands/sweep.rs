use std::path::PathBuf;

use clap::Args;
use kuramoto_hebbian::regions::{self, CrossingCount, CrossingRule, SweepConfig};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::RunOutput;
use crate::error::{CliError, Result};
use crate::output::OutputDir;

fn parse_lowercase<T: DeserializeOwned>(s: &str) -> std::result::Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

/// Flags override the config file, which overrides the defaults.
#[derive(Args, Debug, Clone)]
#[command(allow_negative_numbers = true)]
pub struct SweepArgs {
    /// TOML file with any subset of the sweep settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub alpha_min: Option<f64>,
    #[arg(long)]
    pub alpha_max: Option<f64>,
    #[arg(long)]
    pub omega_min: Option<f64>,
    #[arg(long)]
    pub omega_max: Option<f64>,
    #[arg(long)]
    pub n_alpha: Option<usize>,
    #[arg(long)]
    pub n_omega: Option<usize>,
    /// Initial conditions per grid point.
    #[arg(long)]
    pub initial_conditions: Option<usize>,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub threshold: Option<usize>,
    /// `max` or `mean`.
    #[arg(long, value_parser = parse_lowercase::<CrossingRule>)]
    pub rule: Option<CrossingRule>,
    /// `revolutions` or `passages`.
    #[arg(long, value_parser = parse_lowercase::<CrossingCount>)]
    pub count: Option<CrossingCount>,
    #[arg(long)]
    pub mass: Option<f64>,
    /// Do not classify the three reference points.
    #[arg(long)]
    pub skip_anchors: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSweepConfig {
    pub sweep: SweepConfig<f64>,
    pub anchors: bool,
}

impl SweepArgs {
    pub fn resolve(&self) -> Result<RegionSweepConfig> {
        let mut cfg: SweepConfig<f64> = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
                toml::from_str(&text).map_err(|e| CliError::Parse {
                    path: path.clone(),
                    message: e.to_string(),
                })?
            }
            None => SweepConfig::default(),
        };
        let set = |slot: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        set(&mut cfg.alpha_range.0, self.alpha_min);
        set(&mut cfg.alpha_range.1, self.alpha_max);
        set(&mut cfg.omega_range.0, self.omega_min);
        set(&mut cfg.omega_range.1, self.omega_max);
        set(&mut cfg.horizon, self.horizon);
        set(&mut cfg.mass, self.mass);
        cfg.grid.0 = self.n_alpha.unwrap_or(cfg.grid.0);
        cfg.grid.1 = self.n_omega.unwrap_or(cfg.grid.1);
        cfg.n_initial_conditions = self.initial_conditions.unwrap_or(cfg.n_initial_conditions);
        cfg.seed = self.seed.unwrap_or(cfg.seed);
        cfg.crossing_threshold = self.threshold.unwrap_or(cfg.crossing_threshold);
        cfg.rule = self.rule.unwrap_or(cfg.rule);
        cfg.count = self.count.unwrap_or(cfg.count);
        cfg.validate()?;
        Ok(RegionSweepConfig {
            sweep: cfg,
            anchors: !self.skip_anchors,
        })
    }
}

/// Writes `sweep.csv` and `summary.json`.
pub fn run(cfg: &RegionSweepConfig, out: &mut OutputDir) -> Result<RunOutput> {
    let result = regions::sweep(&cfg.sweep)?;
    out.write_with("sweep.csv", |w| result.write_csv(w))?;
    let anchors = cfg.anchors.then(|| regions::anchor_checks(&cfg.sweep));
    let summary = json!({
        "config": cfg.sweep,
        "summary": result.summary(),
        "anchors": anchors,
        "monotonicity_violations": result.monotonicity_violations(),
    });
    out.write_json("summary.json", &summary)?;
    Ok(RunOutput::report(&summary))
}
