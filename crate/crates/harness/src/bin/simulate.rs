use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use thzris_harness::spec::{Preset, SweepKind};
use thzris_harness::{run_to_dir, ExperimentSpec, SimError};

/// Run a seeded Monte-Carlo sweep and write its CSV.
#[derive(Debug, Parser)]
#[command(name = "simulate", version)]
struct Args {
    /// JSON experiment file; every field is optional.
    #[arg(long)]
    config: Option<PathBuf>,

    /// snr, phase_max, bits, n_ms, n_ris, convergence, complexity or all.
    #[arg(long)]
    sweep: String,

    /// Output directory.
    #[arg(long)]
    out: PathBuf,

    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,

    #[arg(long)]
    realizations: Option<usize>,

    #[arg(long)]
    threads: Option<usize>,

    /// Start from the 512/128/32 configuration (1000 realizations unless overridden).
    #[arg(long)]
    paper_scale: bool,

    /// Record wall-clock time per row (output is then not reproducible).
    #[arg(long)]
    timing: bool,
}

fn run(args: Args) -> Result<(), SimError> {
    let mut spec = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| SimError::Config(format!("cannot read {}: {e}", path.display())))?;
            ExperimentSpec::from_json(&text)?
        }
        None => ExperimentSpec::default(),
    };
    if args.paper_scale {
        spec.preset = Some(Preset::Paper);
    }
    if let Some(s) = args.seed {
        spec.master_seed = Some(s);
    }
    if let Some(r) = args.realizations {
        spec.realizations = Some(r);
    }
    if let Some(t) = args.threads {
        spec.threads = Some(t);
    }
    spec.record_wall_time |= args.timing;

    let kinds: Vec<SweepKind> = if args.sweep == "all" { SweepKind::ALL.to_vec() } else { vec![args.sweep.parse()?] };
    for kind in kinds {
        let exp = spec.resolve(Some(kind))?;
        let path = run_to_dir(&exp, &args.out)?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("simulate: {e}");
            if let SimError::Numerical { seed, .. } = &e {
                eprintln!("replay with --seed {seed} --realizations 1");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
