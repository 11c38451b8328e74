use std::io::Write;

use clap::Args;
use kuramoto_hebbian::ode::IntegratorConfig;
use kuramoto_hebbian::orbit::{self, OrbitErrorConfig};
use kuramoto_hebbian::pair::PairParams;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::RunOutput;
use crate::error::Result;
use crate::output::OutputDir;

/// The approximation holds for unit mass only, so there is no mass flag.
#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[command(allow_negative_numbers = true)]
#[serde(deny_unknown_fields)]
pub struct OrbitArgs {
    #[arg(short = 'w', long)]
    pub omega: f64,
    #[arg(short = 'a', long)]
    pub alpha: f64,
    #[arg(long, default_value_t = 300.0)]
    pub horizon: f64,
    /// Samples before this time are not compared.
    #[arg(long, default_value_t = 100.0)]
    pub transient: f64,
    #[arg(long, default_value_t = 0.01)]
    pub sample_interval: f64,
    #[arg(long, default_value_t = 256)]
    pub bins: usize,
}

/// Writes `orbit_approx.json` and `overlay.csv`
/// (`phi,gamma_sim,k_sim,gamma_approx,k_approx`).
pub fn run(args: &OrbitArgs, out: &mut OutputDir) -> Result<RunOutput> {
    let p = PairParams::new(1.0, args.omega, args.alpha)?;
    let cfg = OrbitErrorConfig {
        integrator: IntegratorConfig::adaptive(args.horizon).with_sample_interval(args.sample_interval),
        transient: args.transient,
        n_bins: args.bins,
        ..OrbitErrorConfig::default()
    };
    let cmp = orbit::approximation_error(&p, &cfg)?;
    let appx = &cmp.approximation;
    let report = json!({
        "omega": args.omega,
        "alpha": args.alpha,
        "zeta": appx.zeta,
        "zeta_residual": orbit::zeta_cubic(&p).eval(appx.zeta),
        "a": appx.a,
        "b": appx.b,
        "c": appx.c,
        "d": appx.d,
        "phi0": appx.phi0,
        "rms_gamma_k": cmp.error.rms_gamma_k,
        "sup_gamma_k": cmp.error.sup_gamma_k,
        "k_amplitude": cmp.k_amplitude,
        "relative_rms": cmp.error.rms_gamma_k / cmp.k_amplitude,
        "phase_slope": cmp.phase_slope,
    });
    out.write_json("orbit_approx.json", &report)?;
    out.write_with("overlay.csv", |w| {
        writeln!(w, "phi,gamma_sim,k_sim,gamma_approx,k_approx")?;
        for r in &cmp.overlay {
            writeln!(w, "{},{},{},{},{}", r.phi, r.gamma_sim, r.k_sim, r.gamma_approx, r.k_approx)?;
        }
        Ok(())
    })?;
    Ok(RunOutput::report(&report))
}
