//! Flat `key = value` configuration files.
//!
//! ```text
//! # reconstruction
//! max_iters = 40
//! tau = paper            # or a number
//! param.0.3 = 1.5, 0.95  # (rho, p) for subrate 0.3
//!
//! # experiment plan
//! images = fixtures/camera128.pgm, fixtures/brick128.pgm
//! subrates = 0.2, 0.3, 0.4
//! seeds = 1, 2
//! ```
//!
//! Blank lines and `#` comments are ignored. Relative image paths and
//! `output_dir` are resolved against the directory holding the file.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use gsrcs_core::{EnsembleKind, InitMode, TauMode, WeightRule};

use crate::error::{io_err, HarnessError, Result};
use crate::plan::{ExperimentPlan, DEFAULT_C_SWEEP};

pub fn load_plan(path: &Path) -> Result<ExperimentPlan> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let base = path.parent().unwrap_or(Path::new(""));
    parse_plan(&text, base).map_err(|(line, message)| HarnessError::Config {
        path: path.to_owned(),
        line,
        message,
    })
}

/// Parses config text on top of [`ExperimentPlan::default`]. Errors carry
/// the 1-based line number.
pub fn parse_plan(
    text: &str,
    base_dir: &Path,
) -> std::result::Result<ExperimentPlan, (usize, String)> {
    let mut plan = ExperimentPlan::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| (idx + 1, format!("expected `key = value`, got `{line}`")))?;
        apply(&mut plan, key.trim(), value.trim(), base_dir).map_err(|m| (idx + 1, m))?;
    }
    Ok(plan)
}

fn num<T: FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("`{key}`: cannot parse `{value}`"))
}

fn list<T: FromStr>(key: &str, value: &str) -> std::result::Result<Vec<T>, String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| num(key, s))
        .collect()
}

fn resolve(base: &Path, value: &str) -> PathBuf {
    let p = PathBuf::from(value);
    if p.is_absolute() {
        p
    } else {
        base.join(p)
    }
}

fn apply(
    plan: &mut ExperimentPlan,
    key: &str,
    value: &str,
    base: &Path,
) -> std::result::Result<(), String> {
    let cfg = &mut plan.base;
    match key {
        "rho" => cfg.rho = num(key, value)?,
        "p" => cfg.gst.p = num(key, value)?,
        "max_iters" => cfg.max_iters = num(key, value)?,
        "patch_side" => cfg.patch_spec.patch_side = num(key, value)?,
        "stride" => cfg.patch_spec.stride = num(key, value)?,
        "window" => cfg.patch_spec.window = num(key, value)?,
        "group_size" => cfg.patch_spec.group_size = num(key, value)?,
        "inner_iters" => cfg.gst.inner_iters = num(key, value)?,
        "sigma" => cfg.gst.sigma = num(key, value)?,
        "epsilon" => cfg.gst.epsilon = num(key, value)?,
        "tau" => {
            cfg.tau_mode = match value {
                "paper" => TauMode::Paper,
                v => TauMode::Manual(num(key, v)?),
            }
        }
        "weight" => {
            cfg.weight_rule = match value {
                "adaptive" => WeightRule::Adaptive,
                v => WeightRule::Uniform(num(key, v)?),
            }
        }
        "regroup_every" => cfg.regroup_every = num(key, value)?,
        "init" => {
            cfg.init_mode = match value {
                "least_squares" => InitMode::LeastSquares,
                "adjoint" => InitMode::Adjoint,
                v => {
                    return Err(format!(
                        "`init`: expected least_squares or adjoint, got `{v}`"
                    ))
                }
            }
        }
        "tolerance" => cfg.tolerance = num(key, value)?,
        "block_size" => plan.block_size = num(key, value)?,
        "ensemble" => {
            plan.ensemble = match value {
                "orthonormal" => EnsembleKind::OrthonormalRows,
                "gaussian" => EnsembleKind::Gaussian,
                v => {
                    return Err(format!(
                        "`ensemble`: expected orthonormal or gaussian, got `{v}`"
                    ))
                }
            }
        }
        "images" => {
            plan.images = value
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| resolve(base, s))
                .collect()
        }
        "subrates" => plan.subrates = list(key, value)?,
        "seeds" => plan.seeds = list(key, value)?,
        "c_sweep" => {
            plan.c_sweep = Some(match value {
                "default" => DEFAULT_C_SWEEP.to_vec(),
                v => list(key, v)?,
            })
        }
        "output_dir" => plan.output_dir = Some(resolve(base, value)),
        _ => {
            if let Some(rate) = key.strip_prefix("param.") {
                let subrate: f64 = num(key, rate)?;
                let pair: Vec<f64> = list(key, value)?;
                let [rho, p] = pair[..] else {
                    return Err(format!("`{key}`: expected `rho, p`"));
                };
                plan.set_params(subrate, rho, p);
            } else {
                return Err(format!("unknown key `{key}`"));
            }
        }
    }
    Ok(())
}
