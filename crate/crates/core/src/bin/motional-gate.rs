use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use motional_gate::config::{self, ExperimentKind, RunConfig};
use motional_gate::run::{run, RunOptions};
use motional_gate::tp_basis::ComputationalLabel;
use motional_gate::{GateError, Result};

#[derive(Parser)]
#[command(name = "motional-gate", version, about = "Simulate a two-atom motional sqrt(SWAP) gate in moving microtraps")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Reconstruct the gate matrix from the four computational inputs.
    Simulate(Common),
    /// Sweep the scattering length.
    Sweep(Common),
    /// Averaged fidelity over a (t_r, a_min) grid.
    Map(Common),
    /// Entanglement measures along one trajectory.
    Correlations(Common),
    /// Grid-oracle wavefunction frames.
    Snapshots(Common),
    /// Built-in invariant checks.
    Verify(Common),
}

#[derive(Args)]
struct Common {
    /// Config file (`section.key = value` lines), applied after any preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// One of fig2, fig3, fig4, fig6a, fig6b.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    workers: Option<usize>,
    /// Relative integrator tolerance.
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long)]
    no_derivative_couplings: bool,
    /// Write the single- and two-particle basis next to the results.
    #[arg(long)]
    dump_basis: bool,
    /// Computational input (00, 01, 10, 11) for correlations and snapshots.
    #[arg(long)]
    input: Option<String>,
}

fn resolve(kind: ExperimentKind, c: &Common) -> Result<RunConfig> {
    let mut cfg = match &c.preset {
        Some(p) => config::preset(p)?,
        None => RunConfig::default(),
    };
    if let Some(path) = &c.config {
        let text = std::fs::read_to_string(path).map_err(|e| GateError::Io(format!("{}: {e}", path.display())))?;
        cfg = config::parse_onto(cfg, &text)?;
    }
    cfg.kind = kind;
    if let Some(o) = &c.out {
        cfg.output = o.clone();
    }
    if let Some(w) = c.workers {
        cfg.workers = w;
    }
    if let Some(t) = c.tolerance {
        cfg.integrator.tolerance = t;
    }
    if c.no_derivative_couplings {
        cfg.integrator.derivative_couplings = false;
    }
    if let Some(i) = &c.input {
        cfg.input = ComputationalLabel::parse(i)?;
    }
    config::validate(&cfg)?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, common) = match &cli.verb {
        Verb::Simulate(c) => (ExperimentKind::Gate, c),
        Verb::Sweep(c) => (ExperimentKind::SweepScattering, c),
        Verb::Map(c) => (ExperimentKind::FidelityMap, c),
        Verb::Correlations(c) => (ExperimentKind::EntanglementTrace, c),
        Verb::Snapshots(c) => (ExperimentKind::Snapshots, c),
        Verb::Verify(c) => (ExperimentKind::Verify, c),
    };
    let outcome = resolve(kind, common).and_then(|cfg| run(&cfg, &RunOptions { dump_basis: common.dump_basis }));
    match outcome {
        Ok(o) => {
            if kind != ExperimentKind::Verify {
                println!("{}", serde_json::to_string_pretty(&o.manifest["results"]).unwrap_or_default());
            }
            if o.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
