use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use gsrcs::plan::{psnr_spread, write_trace, DEFAULT_C_SWEEP};
use gsrcs::{
    c_sensitivity, load_plan, read_image, run_plan, write_image, ExperimentPlan, MeasurementFile,
};
use gsrcs_core::sensing::sense_padded;
use gsrcs_core::{make_ensemble_with, psnr, reconstruct_observed};

#[derive(Parser)]
#[command(
    version,
    about = "Block compressive sensing with group-sparse reconstruction"
)]
struct Cli {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for the sensing matrix (overrides `seeds` from the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (overrides `output_dir` from the config).
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Measure an image and write a measurement file.
    Sense {
        input: PathBuf,
        output: PathBuf,
        #[arg(long)]
        subrate: f64,
    },
    /// Reconstruct an image from a measurement file.
    Reconstruct {
        input: PathBuf,
        output: PathBuf,
        /// Original image, for PSNR reporting.
        #[arg(long)]
        reference: Option<PathBuf>,
        /// Per-iteration trace CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Run the configured images × subrates × seeds grid.
    Bench,
    /// Sweep the group size `c` (defaults to 20, 40, ..., 160).
    SweepC,
}

fn plan_from(cli: &Cli) -> anyhow::Result<ExperimentPlan> {
    let mut plan = match &cli.config {
        Some(path) => load_plan(path)?,
        None => ExperimentPlan::default(),
    };
    if let Some(seed) = cli.seed {
        plan.seeds = vec![seed];
    }
    if let Some(dir) = &cli.output_dir {
        plan.output_dir = Some(dir.clone());
    }
    Ok(plan)
}

fn in_dir(dir: Option<&Path>, file: &Path) -> PathBuf {
    match dir {
        Some(d) if file.is_relative() => d.join(file),
        _ => file.to_owned(),
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let plan = plan_from(&cli)?;
    let dir = plan.output_dir.as_deref();
    if let Some(d) = dir {
        std::fs::create_dir_all(d).with_context(|| format!("creating {}", d.display()))?;
    }
    match &cli.command {
        Command::Sense {
            input,
            output,
            subrate,
        } => {
            let img = read_image(input)?;
            let ens = make_ensemble_with(plan.ensemble, plan.block_size, *subrate, plan.seeds[0])?;
            let meas = sense_padded(&img, &ens)?;
            MeasurementFile::new(meas, &ens).write(&in_dir(dir, output))?;
        }
        Command::Reconstruct {
            input,
            output,
            reference,
            trace,
        } => {
            let file = MeasurementFile::read(input)?;
            let ens = file.ensemble()?;
            let cfg = match plan.params_for(file.subrate) {
                Some((rho, p)) => plan.base.clone().with_step_and_exponent(rho, p),
                None => plan.base.clone(),
            };
            let reference = reference.as_deref().map(read_image).transpose()?;
            let state =
                reconstruct_observed(&file.measurements, &ens, &cfg, reference.as_ref(), |t| {
                    log::info!(
                        "iteration {}: psnr {:?} fidelity {:.4e}",
                        t.iteration,
                        t.psnr,
                        t.fidelity
                    );
                })?;
            write_image(&in_dir(dir, output), &state.estimate)?;
            if let Some(t) = trace {
                write_trace(&in_dir(dir, t), &state.trace)?;
            }
            if let Some(r) = &reference {
                println!(
                    "psnr_init {:.4} psnr_final {:.4} iterations {}",
                    psnr(r, &state.initial)?,
                    psnr(r, &state.estimate)?,
                    state.iteration
                );
            }
        }
        Command::Bench => {
            for row in run_plan(&plan)? {
                println!(
                    "{} subrate {} seed {}: {:.2} -> {:.2} dB ({} iterations)",
                    row.image, row.subrate, row.seed, row.psnr_init, row.psnr_final, row.iterations
                );
            }
        }
        Command::SweepC => {
            let mut plan = plan;
            plan.c_sweep.get_or_insert_with(|| DEFAULT_C_SWEEP.to_vec());
            let rows = c_sensitivity(&plan)?;
            for row in &rows {
                println!(
                    "{} subrate {} c {}: {:.2} dB",
                    row.image, row.subrate, row.group_size, row.psnr_final
                );
            }
            for (image, subrate, spread) in psnr_spread(&rows) {
                println!("{image} subrate {subrate}: spread {spread:.3} dB");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e:#}");
            ExitCode::FAILURE
        }
    }
}
