//! Experiment plans: images × subrates × seeds, with CSV reports.

use std::path::{Path, PathBuf};
use std::time::Instant;

use gsrcs_core::sensing::sense_padded;
use gsrcs_core::{
    make_ensemble_with, paper_step_and_exponent, reconstruct_observed, EnsembleKind, Image,
    ReconstructionConfig, ReconstructionState, StopReason, TraceRecord,
};
use log::{error, info};

use crate::error::{io_err, HarnessError, Result};
use crate::io::{image_name, read_image, write_image};

/// Group sizes swept when `c_sweep = default`.
pub const DEFAULT_C_SWEEP: [usize; 8] = [20, 40, 60, 80, 100, 120, 140, 160];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub images: Vec<PathBuf>,
    pub subrates: Vec<f64>,
    /// `(subrate, (ρ, p))`, looked up with a small tolerance.
    pub param_table: Vec<(f64, (f64, f64))>,
    pub seeds: Vec<u64>,
    pub c_sweep: Option<Vec<usize>>,
    /// Everything except `ρ` and `p`, which come from `param_table`.
    pub base: ReconstructionConfig,
    pub block_size: usize,
    pub ensemble: EnsembleKind,
    /// Where CSVs, traces and reconstructions go; nothing is written if unset.
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        let subrates = vec![0.2, 0.3, 0.4];
        let param_table = subrates
            .iter()
            .map(|&s| (s, paper_step_and_exponent(s)))
            .collect();
        ExperimentPlan {
            images: Vec::new(),
            subrates,
            param_table,
            seeds: vec![1],
            c_sweep: None,
            base: ReconstructionConfig::default(),
            block_size: 32,
            ensemble: EnsembleKind::OrthonormalRows,
            output_dir: None,
        }
    }
}

fn same_rate(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-9
}

impl ExperimentPlan {
    pub fn params_for(&self, subrate: f64) -> Option<(f64, f64)> {
        self.param_table
            .iter()
            .find(|(s, _)| same_rate(*s, subrate))
            .map(|&(_, pair)| pair)
    }

    pub fn set_params(&mut self, subrate: f64, rho: f64, p: f64) {
        match self
            .param_table
            .iter_mut()
            .find(|(s, _)| same_rate(*s, subrate))
        {
            Some(entry) => entry.1 = (rho, p),
            None => self.param_table.push((subrate, (rho, p))),
        }
    }

    /// Reconstruction settings for one subrate.
    pub fn config_for(&self, subrate: f64) -> Result<ReconstructionConfig> {
        let (rho, p) = self.params_for(subrate).ok_or_else(|| {
            HarnessError::Plan(format!("no (rho, p) entry for subrate {subrate}"))
        })?;
        Ok(self.base.clone().with_step_and_exponent(rho, p))
    }

    pub fn validate(&self) -> Result<()> {
        if self.images.is_empty() {
            return Err(HarnessError::Plan("no images".into()));
        }
        if self.subrates.is_empty() {
            return Err(HarnessError::Plan("no subrates".into()));
        }
        if self.seeds.is_empty() {
            return Err(HarnessError::Plan("no seeds".into()));
        }
        if let Some(cs) = &self.c_sweep {
            if cs.is_empty() {
                return Err(HarnessError::Plan("empty c_sweep".into()));
            }
        }
        for &s in &self.subrates {
            if !(s > 0.0 && s <= 1.0) {
                return Err(HarnessError::Plan(format!("subrate {s} outside (0, 1]")));
            }
            self.config_for(s)?.validate()?;
        }
        Ok(())
    }
}

/// One reconstruction run.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub image: String,
    pub subrate: f64,
    pub seed: u64,
    pub group_size: usize,
    pub psnr_init: f64,
    pub psnr_final: f64,
    pub iterations: usize,
    pub stop: StopReason,
    pub wall_time_s: f64,
}

pub const RESULT_HEADER: [&str; 10] = [
    "image",
    "subrate",
    "seed",
    "group_size",
    "psnr_init",
    "psnr_final",
    "iterations",
    "stop",
    "wall_time_s",
    "fsim",
];

/// Shortest round-trip decimal, `inf` for infinity.
pub fn fmt_f64(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else {
        format!("{v}")
    }
}

fn stop_name(stop: StopReason) -> &'static str {
    match stop {
        StopReason::MaxIters => "max_iters",
        StopReason::Converged => "converged",
        StopReason::Diverged => "diverged",
    }
}

impl ResultRow {
    fn record(&self) -> [String; 10] {
        [
            self.image.clone(),
            fmt_f64(self.subrate),
            self.seed.to_string(),
            self.group_size.to_string(),
            fmt_f64(self.psnr_init),
            fmt_f64(self.psnr_final),
            self.iterations.to_string(),
            stop_name(self.stop).into(),
            format!("{:.3}", self.wall_time_s),
            String::new(),
        ]
    }
}

pub fn write_results(path: &Path, rows: &[ResultRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(RESULT_HEADER)?;
    for row in rows {
        w.write_record(row.record())?;
    }
    w.flush().map_err(io_err(path))
}

pub fn write_trace(path: &Path, trace: &[TraceRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["iteration", "psnr", "fidelity", "relative_change"])?;
    for t in trace {
        w.write_record([
            t.iteration.to_string(),
            t.psnr.map(fmt_f64).unwrap_or_default(),
            fmt_f64(t.fidelity),
            fmt_f64(t.relative_change),
        ])?;
    }
    w.flush().map_err(io_err(path))
}

/// Output of a single cell.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub row: ResultRow,
    pub state: ReconstructionState,
}

/// Senses `img` at `subrate` with `seed` and reconstructs it.
pub fn run_single(
    name: &str,
    img: &Image,
    subrate: f64,
    seed: u64,
    cfg: &ReconstructionConfig,
    plan: &ExperimentPlan,
) -> Result<RunOutcome> {
    let ens = make_ensemble_with(plan.ensemble, plan.block_size, subrate, seed)?;
    let meas = sense_padded(img, &ens)?;
    let start = Instant::now();
    let state = reconstruct_observed(&meas, &ens, cfg, Some(img), |t| {
        log::debug!(
            "{name} s={subrate} seed={seed} it={} psnr={:?}",
            t.iteration,
            t.psnr
        );
    })?;
    let wall_time_s = start.elapsed().as_secs_f64();
    let row = ResultRow {
        image: name.to_owned(),
        subrate,
        seed,
        group_size: cfg.patch_spec.group_size,
        psnr_init: state.init_psnr.unwrap_or(f64::NAN),
        psnr_final: state.final_psnr().unwrap_or(f64::NAN),
        iterations: state.iteration,
        stop: state.stop,
        wall_time_s,
    };
    info!(
        "{name} subrate {subrate} seed {seed} c {}: {:.2} -> {:.2} dB in {} iterations ({wall_time_s:.1}s)",
        row.group_size, row.psnr_init, row.psnr_final, row.iterations
    );
    Ok(RunOutcome { row, state })
}

fn load_images(plan: &ExperimentPlan) -> Result<Vec<(String, Image)>> {
    let mut loaded = Vec::new();
    for path in &plan.images {
        match read_image(path) {
            Ok(img) => loaded.push((image_name(path), img)),
            Err(e) => error!("skipping {}: {e}", path.display()),
        }
    }
    if loaded.is_empty() {
        return Err(HarnessError::AllSkipped);
    }
    Ok(loaded)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))
}

fn cell_stem(name: &str, subrate: f64, seed: u64, c: Option<usize>) -> String {
    match c {
        Some(c) => format!("{name}_s{subrate}_seed{seed}_c{c}"),
        None => format!("{name}_s{subrate}_seed{seed}"),
    }
}

fn save_cell(dir: &Path, stem: &str, out: &RunOutcome) -> Result<()> {
    write_trace(&dir.join(format!("trace_{stem}.csv")), &out.state.trace)?;
    write_image(&dir.join(format!("recon_{stem}.png")), &out.state.estimate)
}

/// Runs every image × subrate × seed cell in plan order. Unreadable images
/// and failed reconstructions are logged and skipped. With an output
/// directory set, writes `results.csv` plus one trace CSV and one
/// reconstructed PNG per cell.
pub fn run_plan(plan: &ExperimentPlan) -> Result<Vec<ResultRow>> {
    plan.validate()?;
    let images = load_images(plan)?;
    if let Some(dir) = &plan.output_dir {
        ensure_dir(dir)?;
    }
    let mut rows = Vec::new();
    for (name, img) in &images {
        for &subrate in &plan.subrates {
            let cfg = plan.config_for(subrate)?;
            for &seed in &plan.seeds {
                let out = match run_single(name, img, subrate, seed, &cfg, plan) {
                    Ok(out) => out,
                    Err(e) => {
                        error!("skipping {name} subrate {subrate} seed {seed}: {e}");
                        continue;
                    }
                };
                if let Some(dir) = &plan.output_dir {
                    save_cell(dir, &cell_stem(name, subrate, seed, None), &out)?;
                }
                rows.push(out.row);
            }
        }
    }
    if rows.is_empty() {
        return Err(HarnessError::AllSkipped);
    }
    if let Some(dir) = &plan.output_dir {
        write_results(&dir.join("results.csv"), &rows)?;
    }
    Ok(rows)
}

/// Group-size sweep: for every image and subrate, one run per `c` in
/// `plan.c_sweep` at the first seed. Writes `c_sensitivity.csv` (the usual
/// result columns, one row per `c`) when an output directory is set.
pub fn c_sensitivity(plan: &ExperimentPlan) -> Result<Vec<ResultRow>> {
    plan.validate()?;
    let sweep = plan
        .c_sweep
        .as_ref()
        .ok_or_else(|| HarnessError::Plan("c_sweep not set".into()))?;
    let seed = plan.seeds[0];
    let images = load_images(plan)?;
    if let Some(dir) = &plan.output_dir {
        ensure_dir(dir)?;
    }
    let mut rows = Vec::new();
    for (name, img) in &images {
        for &subrate in &plan.subrates {
            for &c in sweep {
                let mut cfg = plan.config_for(subrate)?;
                cfg.patch_spec.group_size = c;
                match run_single(name, img, subrate, seed, &cfg, plan) {
                    Ok(out) => {
                        if let Some(dir) = &plan.output_dir {
                            save_cell(dir, &cell_stem(name, subrate, seed, Some(c)), &out)?;
                        }
                        rows.push(out.row);
                    }
                    Err(e) => error!("skipping {name} subrate {subrate} c {c}: {e}"),
                }
            }
        }
    }
    if rows.is_empty() {
        return Err(HarnessError::AllSkipped);
    }
    if let Some(dir) = &plan.output_dir {
        write_results(&dir.join("c_sensitivity.csv"), &rows)?;
    }
    Ok(rows)
}

/// Max − min of `psnr_final` per (image, subrate) series.
pub fn psnr_spread(rows: &[ResultRow]) -> Vec<(String, f64, f64)> {
    let mut out: Vec<(String, f64, f64, f64)> = Vec::new();
    for r in rows {
        match out
            .iter_mut()
            .find(|(n, s, _, _)| *n == r.image && same_rate(*s, r.subrate))
        {
            Some(e) => {
                e.2 = e.2.min(r.psnr_final);
                e.3 = e.3.max(r.psnr_final);
            }
            None => out.push((r.image.clone(), r.subrate, r.psnr_final, r.psnr_final)),
        }
    }
    out.into_iter()
        .map(|(n, s, lo, hi)| (n, s, hi - lo))
        .collect()
}
