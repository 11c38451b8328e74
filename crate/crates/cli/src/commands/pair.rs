//! Reduced two-oscillator system: trajectory ensembles and equilibrium analysis.

use std::io::Write;

use clap::Args;
use kuramoto_hebbian::ode::IntegratorConfig;
use kuramoto_hebbian::pair::{self, LabelPair, PairParams, PairState, StabilityClass, UvPoint};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::RunOutput;
use crate::error::Result;
use crate::output::OutputDir;

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[command(allow_negative_numbers = true)]
#[serde(deny_unknown_fields)]
pub struct SimulateArgs {
    #[arg(short = 'm', long, default_value_t = 1.0)]
    pub mass: f64,
    #[arg(short = 'w', long)]
    pub omega: f64,
    #[arg(short = 'a', long)]
    pub alpha: f64,
    /// Number of trajectories, each from a uniform draw in [-pi, pi)^3.
    #[arg(short = 'n', long = "trajectories", default_value_t = 50)]
    pub trajectories: usize,
    #[arg(long, default_value_t = 200.0)]
    pub horizon: f64,
    #[arg(long, default_value_t = 0.05)]
    pub sample_interval: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Writes `traj_NNNN.csv` (`t,phi,gamma,k`, principal phase) per trajectory
/// and `projection.csv` (`trajectory,gamma,k`) with all of them.
pub fn simulate(args: &SimulateArgs, out: &mut OutputDir) -> Result<RunOutput> {
    let p = PairParams::new(args.mass, args.omega, args.alpha)?;
    let cfg = IntegratorConfig::adaptive(args.horizon).with_sample_interval(args.sample_interval);
    cfg.validate()?;
    let runs = (0..args.trajectories)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
            rng.set_stream(i as u64);
            let x0 = pair::random_initial_state(&mut rng);
            pair::simulate(&p, x0, &cfg)
        })
        .collect::<kuramoto_hebbian::Result<Vec<_>>>()?;

    for (i, traj) in runs.iter().enumerate() {
        out.write_with(&format!("traj_{i:04}.csv"), |w| {
            writeln!(w, "t,phi,gamma,k")?;
            for (t, x) in traj.iter() {
                let s = PairState::from_slice(x);
                writeln!(w, "{t},{},{},{}", s.phi, s.gamma, s.k)?;
            }
            Ok(())
        })?;
    }
    out.write_with("projection.csv", |w| {
        writeln!(w, "trajectory,gamma,k")?;
        for (i, traj) in runs.iter().enumerate() {
            for (_, x) in traj.iter() {
                writeln!(w, "{i},{},{}", x[1], x[2])?;
            }
        }
        Ok(())
    })?;
    Ok(RunOutput::default())
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[command(allow_negative_numbers = true)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeArgs {
    #[arg(short = 'm', long, default_value_t = 1.0)]
    pub mass: f64,
    #[arg(short = 'w', long)]
    pub omega: f64,
    #[arg(short = 'a', long)]
    pub alpha: f64,
}

#[derive(Debug, Serialize)]
struct Eigenvalue {
    re: f64,
    im: f64,
}

#[derive(Debug, Serialize)]
struct EquilibriumReport {
    label: pair::EquilibriumLabel,
    phi: f64,
    gamma: f64,
    k: f64,
    /// Merged with its partner on the saddle-node line.
    degenerate: bool,
    class: StabilityClass,
    eigenvalues: Vec<Eigenvalue>,
    all_real: bool,
}

#[derive(Debug, Serialize)]
#[serde(untagged)]
enum Equilibria {
    None(&'static str),
    Found(Vec<EquilibriumReport>),
}

#[derive(Debug, Serialize)]
struct GammaMembership {
    gamma1: bool,
    gamma2: bool,
}

#[derive(Debug, Serialize)]
struct Analysis {
    mass: f64,
    omega: f64,
    alpha: f64,
    divergence: f64,
    saddle_node: bool,
    equilibria: Equilibria,
    #[serde(skip_serializing_if = "Option::is_none")]
    uv: Option<UvPoint<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma: Option<GammaMembership>,
}

pub fn analyze(args: &AnalyzeArgs, out: &mut OutputDir) -> Result<RunOutput> {
    let p = PairParams::new(args.mass, args.omega, args.alpha)?;
    let mut report = Analysis {
        mass: p.mass(),
        omega: p.omega(),
        alpha: p.alpha(),
        divergence: pair::divergence(&p),
        saddle_node: p.is_saddle_node(),
        equilibria: Equilibria::None("none"),
        uv: None,
        gamma: None,
    };
    if p.has_equilibria() {
        let uv = pair::uv(&p)?;
        let found = pair::equilibria(&p)
            .into_iter()
            .map(|e| {
                let rep = pair::classify(e.label, &p)?;
                Ok(EquilibriumReport {
                    label: e.label,
                    phi: e.state.phi,
                    gamma: e.state.gamma,
                    k: e.state.k,
                    degenerate: e.degenerate,
                    class: rep.class,
                    eigenvalues: rep.eigenvalues.iter().map(|z| Eigenvalue { re: z.re, im: z.im }).collect(),
                    all_real: rep.in_gamma_region,
                })
            })
            .collect::<kuramoto_hebbian::Result<Vec<_>>>()?;
        report.equilibria = Equilibria::Found(found);
        report.gamma = Some(GammaMembership {
            gamma1: pair::in_gamma_region(LabelPair::P1P3, uv, p.mass()),
            gamma2: pair::in_gamma_region(LabelPair::P2P4, uv, p.mass()),
        });
        report.uv = Some(uv);
    }
    out.write_json("analysis.json", &report)?;
    Ok(RunOutput::report(&report))
}
