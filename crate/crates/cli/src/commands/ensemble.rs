use std::io::Write;

use clap::{Args, ValueEnum};
use kuramoto_hebbian::ensemble::{self, EnsembleParams, EnsembleRunConfig, EnsembleSystem};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::RunOutput;
use crate::error::Result;
use crate::output::OutputDir;

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stepping {
    /// Adaptive above `HEAVY_MASS`, fixed otherwise.
    Auto,
    /// RK4 with a fixed step; reruns are bit-identical.
    Fixed,
    Adaptive,
}

/// Heavier oscillators get step control for their slow drift and fast transients.
pub const HEAVY_MASS: f64 = 10.0;

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[command(allow_negative_numbers = true)]
#[serde(deny_unknown_fields)]
pub struct EnsembleArgs {
    #[arg(short = 'N', long, default_value_t = 50)]
    pub oscillators: usize,
    #[arg(short = 'm', long, default_value_t = 1.0)]
    pub mass: f64,
    #[arg(short = 'a', long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Learning rate.
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    /// Variance of the zero-mean Gaussian intrinsic frequencies.
    #[arg(long)]
    pub sigma2: f64,
    #[arg(long, default_value_t = 100.0)]
    pub horizon: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.1)]
    pub sample_interval: f64,
    #[arg(long, value_enum, default_value_t = Stepping::Auto)]
    pub stepping: Stepping,
    /// Extra order parameters to record next to r2; `--q 1` adds r1.
    #[arg(long = "q")]
    pub extra_orders: Vec<u32>,
    /// Mean-velocity spread within one cluster.
    #[arg(long, default_value_t = 0.05)]
    pub velocity_tol: f64,
    /// Also write `phases.csv` with every sampled phase.
    #[arg(long)]
    pub phases: bool,
}

impl EnsembleArgs {
    /// Replaces `Auto` with the stepping it stands for.
    pub fn resolved(mut self) -> Self {
        if self.stepping == Stepping::Auto {
            self.stepping = if self.mass > HEAVY_MASS {
                Stepping::Adaptive
            } else {
                Stepping::Fixed
            };
        }
        self
    }
}

/// Writes `order_parameter.csv`, `final_state.csv`, `coupling.csv`,
/// `summary.json` and, on request, `phases.csv`.
pub fn run(args: &EnsembleArgs, out: &mut OutputDir) -> Result<RunOutput> {
    let params = EnsembleParams::new(args.oscillators, args.mass, args.alpha, args.sigma2, args.seed)?
        .with_beta(args.beta)?;
    let system = EnsembleSystem::new(params)?;
    let mut cfg = match args.clone().resolved().stepping {
        Stepping::Auto | Stepping::Fixed => EnsembleRunConfig::fixed_step(args.horizon, args.sample_interval),
        Stepping::Adaptive => EnsembleRunConfig::adaptive(args.horizon, args.sample_interval),
    };
    for &q in &args.extra_orders {
        if !cfg.orders.contains(&q) {
            cfg.orders.push(q);
        }
    }
    cfg.keep_states = args.phases;
    let run = ensemble::simulate(&system, &cfg)?;

    out.write_with("order_parameter.csv", |w| run.series.write_csv(w))?;
    let n = args.oscillators;
    let fin = &run.final_state;
    out.write_with("final_state.csv", |w| {
        writeln!(w, "i,omega,phase,velocity,mean_velocity")?;
        let rows = system
            .frequencies()
            .iter()
            .zip(fin.principal_phases())
            .zip(fin.velocities.iter().zip(&run.mean_velocities));
        for (i, ((omega, phase), (v, mean_v))) in rows.enumerate() {
            writeln!(w, "{i},{omega},{phase},{v},{mean_v}")?;
        }
        Ok(())
    })?;
    out.write_with("coupling.csv", |w| {
        for row in fin.coupling_matrix() {
            let cells: Vec<String> = row.iter().map(|k| k.to_string()).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    })?;
    if let Some(states) = &run.states {
        out.write_with("phases.csv", |w| {
            let header: Vec<String> = (0..n).map(|i| format!("phi_{i}")).collect();
            writeln!(w, "t,{}", header.join(","))?;
            for (t, x) in states.iter() {
                let phases: Vec<String> = x[..n].iter().map(|p| p.to_string()).collect();
                writeln!(w, "{t},{}", phases.join(","))?;
            }
            Ok(())
        })?;
    }

    let last_quarter = 0.75 * args.horizon;
    let orders: Vec<_> = cfg
        .orders
        .iter()
        .map(|&q| {
            json!({
                "q": q,
                "final": run.series.series(q).and_then(|s| s.last()),
                "amplitude_last_quarter": run.amplitude(q, last_quarter),
            })
        })
        .collect();
    let summary = json!({
        "fixed_step": ensemble::is_fixed_step(&cfg),
        "order_parameters": orders,
        "max_abs_coupling_after_burn_in": run.max_abs_coupling_after_burn_in,
        "burn_in": cfg.burn_in,
        "clusters": ensemble::detect_clusters(&run.mean_velocities, args.velocity_tol),
    });
    out.write_json("summary.json", &summary)?;
    Ok(RunOutput::report(&summary))
}
