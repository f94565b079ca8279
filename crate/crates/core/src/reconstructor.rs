//! Iterative shrinkage/thresholding reconstruction.
//!
//! Each outer iteration takes a gradient step on `½‖Z − φu‖²`, regroups
//! similar patches of the result, shrinks every group's PCA coefficients with
//! weighted GST and averages the groups back into an image.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::dictionary::learn_pca;
use crate::error::{Error, Result};
use crate::grouping::{exemplar_coords, match_coords, Accumulator, Coord, PatchGroup, PatchSpec};
use crate::image::Image;
use crate::linalg::Cholesky;
use crate::metrics::psnr;
use crate::sensing::{adjoint, map_blocks, sense, Measurements, SensingEnsemble};
use crate::shrinkage::{compute_weights, shrink_group, GstParams, WeightVector};

/// Regularization multiplier applied to the weights at shrink time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TauMode {
    /// `τ = K / N`, `K = m·c·n` group entries over `N` pixels.
    Paper,
    Manual(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightRule {
    /// Row-variance weights from the group's own coefficients.
    Adaptive,
    /// The same weight for every coefficient.
    Uniform(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitMode {
    /// `φᵀZ` per block.
    Adjoint,
    /// Minimum-norm solution `φᵀ(φφᵀ)⁻¹Z` per block.
    LeastSquares,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionConfig {
    /// Gradient step size `ρ`.
    pub rho: f64,
    pub max_iters: usize,
    pub patch_spec: PatchSpec,
    /// GST settings, including the exponent `p`.
    pub gst: GstParams,
    pub tau_mode: TauMode,
    pub weight_rule: WeightRule,
    /// Iterations between block-matching passes.
    pub regroup_every: usize,
    pub init_mode: InitMode,
    /// Early stop once `‖x⁺ − x‖ / ‖x‖` falls below this.
    pub tolerance: f64,
}

impl Default for ReconstructionConfig {
    fn default() -> Self {
        ReconstructionConfig {
            rho: 0.3,
            max_iters: 60,
            patch_spec: PatchSpec::default(),
            gst: GstParams::default(),
            tau_mode: TauMode::Paper,
            weight_rule: WeightRule::Adaptive,
            regroup_every: 1,
            init_mode: InitMode::LeastSquares,
            tolerance: 1e-4,
        }
    }
}

/// Published `(ρ, p)` pairs: `(0.3, 0.5)` at subrate 0.2 and `(1.5, 0.95)`
/// at 0.3 and 0.4. Other subrates take the pair of the nearest one.
pub fn paper_step_and_exponent(subrate: f64) -> (f64, f64) {
    if subrate < 0.25 {
        (0.3, 0.5)
    } else {
        (1.5, 0.95)
    }
}

impl ReconstructionConfig {
    pub fn for_subrate(subrate: f64) -> Self {
        let (rho, p) = paper_step_and_exponent(subrate);
        Self::default().with_step_and_exponent(rho, p)
    }

    pub fn with_step_and_exponent(mut self, rho: f64, p: f64) -> Self {
        self.rho = rho;
        self.gst.p = p;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0) || !self.rho.is_finite() {
            return Err(Error::Parameter(format!(
                "step size {} must be positive",
                self.rho
            )));
        }
        if self.max_iters < 1 {
            return Err(Error::Parameter("max_iters must be at least 1".into()));
        }
        if self.regroup_every < 1 {
            return Err(Error::Parameter("regroup_every must be at least 1".into()));
        }
        if let TauMode::Manual(t) = self.tau_mode {
            if !(t >= 0.0) || !t.is_finite() {
                return Err(Error::Parameter(format!("tau {t} must be finite and >= 0")));
            }
        }
        if let WeightRule::Uniform(w) = self.weight_rule {
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::Parameter(format!(
                    "weight {w} must be finite and >= 0"
                )));
            }
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::Parameter("tolerance must be >= 0".into()));
        }
        self.patch_spec.validate()?;
        self.gst.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    /// 1-based outer iteration.
    pub iteration: usize,
    /// PSNR of the estimate against the reference, when one was given.
    pub psnr: Option<f64>,
    /// `½‖Z − φu‖²` at the estimate.
    pub fidelity: f64,
    /// `‖u⁺ − u‖ / ‖u‖`
    pub relative_change: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MaxIters,
    Converged,
    Diverged,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionState {
    /// Current estimate, cropped to the original (pre-padding) size.
    pub estimate: Image,
    /// Initial estimate, cropped likewise.
    pub initial: Image,
    /// Completed outer iterations.
    pub iteration: usize,
    pub trace: Vec<TraceRecord>,
    pub init_psnr: Option<f64>,
    /// Initialization actually used (least squares falls back to the
    /// adjoint when `φφᵀ` is singular).
    pub init_mode: InitMode,
    pub stop: StopReason,
}

impl ReconstructionState {
    pub fn final_psnr(&self) -> Option<f64> {
        self.trace.last().and_then(|t| t.psnr).or(self.init_psnr)
    }
}

/// A failed reconstruction, with whatever progress was made.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructError {
    pub error: Error,
    pub partial: Option<Box<ReconstructionState>>,
}

impl fmt::Display for ReconstructError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.error.fmt(f)
    }
}

impl core::error::Error for ReconstructError {}

impl From<Error> for ReconstructError {
    fn from(error: Error) -> Self {
        ReconstructError {
            error,
            partial: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Initialization {
    /// Padded-size image.
    pub image: Image,
    pub mode: InitMode,
    /// True when least squares was requested but `φφᵀ` was singular.
    pub fell_back: bool,
}

pub fn initialize(
    meas: &Measurements,
    ens: &SensingEnsemble,
    mode: InitMode,
) -> Result<Initialization> {
    if mode == InitMode::LeastSquares {
        if let Some(chol) = Cholesky::factor(&ens.matrix().gram()) {
            let phi = ens.matrix();
            let mut y = vec![0.0; ens.measurements_per_block()];
            let image = map_blocks(meas, ens, |z, out| {
                y.copy_from_slice(z);
                chol.solve_in_place(&mut y);
                phi.tr_mul_vec(&y, out);
            })?;
            return Ok(Initialization {
                image,
                mode,
                fell_back: false,
            });
        }
        let image = adjoint(meas, ens)?;
        return Ok(Initialization {
            image,
            mode: InitMode::Adjoint,
            fell_back: true,
        });
    }
    Ok(Initialization {
        image: adjoint(meas, ens)?,
        mode,
        fell_back: false,
    })
}

/// `u − ρ·φᵀ(φu − Z)`, blockwise.
pub fn gradient_step(
    u: &Image,
    meas: &Measurements,
    ens: &SensingEnsemble,
    rho: f64,
    iteration: usize,
) -> Result<Image> {
    let residual = sense(u, ens)?.sub(meas)?;
    let grad = adjoint(&residual, ens)?;
    let mut out = u.clone();
    for (o, g) in out.pixels_mut().iter_mut().zip(grad.pixels()) {
        *o -= rho * g;
    }
    if !out.is_finite() {
        return Err(Error::Divergence { iteration });
    }
    Ok(out)
}

/// `½‖Z − φu‖²`
pub fn data_fidelity(u: &Image, meas: &Measurements, ens: &SensingEnsemble) -> Result<f64> {
    Ok(0.5 * sense(u, ens)?.sub(meas)?.norm_sq())
}

#[cfg(feature = "parallel")]
fn par_map<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn par_map<T, U>(items: &[T], f: impl Fn(&T) -> U) -> Vec<U> {
    items.iter().map(f).collect()
}

/// Group coordinates for every exemplar of `img`.
pub fn match_layout(img: &Image, spec: &PatchSpec) -> Result<Vec<Vec<Coord>>> {
    let exemplars = exemplar_coords(img, spec)?;
    par_map(&exemplars, |&e| {
        match_coords(img, e, spec).map(|(coords, _)| coords)
    })
    .into_iter()
    .collect()
}

/// Regularization multiplier for a layout over an image of `pixels` pixels.
pub fn tau_for(cfg: &ReconstructionConfig, layout: &[Vec<Coord>], pixels: usize) -> f64 {
    match cfg.tau_mode {
        TauMode::Manual(t) => t,
        TauMode::Paper => {
            let k: usize = layout
                .iter()
                .map(|g| g.len() * cfg.patch_spec.patch_len())
                .sum();
            k as f64 / pixels as f64
        }
    }
}

/// One group-sparse shrinkage pass over `img` with fresh block matching.
pub fn denoise_pass(img: &Image, cfg: &ReconstructionConfig) -> Result<Image> {
    cfg.validate()?;
    let layout = match_layout(img, &cfg.patch_spec)?;
    denoise_with_layout(img, cfg, &layout)
}

/// Shrinkage pass reusing precomputed group coordinates.
pub fn denoise_with_layout(
    img: &Image,
    cfg: &ReconstructionConfig,
    layout: &[Vec<Coord>],
) -> Result<Image> {
    if !img.is_finite() {
        return Err(Error::Data("estimate contains non-finite pixels".into()));
    }
    let side = cfg.patch_spec.patch_side;
    let tau = tau_for(cfg, layout, img.len());
    let estimates = par_map(layout, |coords| {
        let group = PatchGroup::from_coords(img, side, coords.clone(), false);
        shrink_one(&group, cfg, tau)
    });
    let mut acc = Accumulator::new(img.height(), img.width());
    for (coords, est) in layout.iter().zip(estimates) {
        acc.add_patches(side, coords, &est?)?;
    }
    acc.finish(Some(img))
}

fn shrink_one(group: &PatchGroup, cfg: &ReconstructionConfig, tau: f64) -> Result<crate::Matrix> {
    let dict = learn_pca(&group.data)?;
    let coeffs = dict.to_coeffs(&group.data)?;
    let weights = match cfg.weight_rule {
        WeightRule::Adaptive => compute_weights(&coeffs, &cfg.gst),
        WeightRule::Uniform(w) => WeightVector::uniform(coeffs.rows(), coeffs.cols(), w),
    };
    let shrunk = shrink_group(&coeffs, &weights, tau, &cfg.gst)?;
    dict.from_coeffs(&shrunk)
}

pub fn reconstruct(
    meas: &Measurements,
    ens: &SensingEnsemble,
    cfg: &ReconstructionConfig,
    reference: Option<&Image>,
) -> core::result::Result<ReconstructionState, ReconstructError> {
    reconstruct_observed(meas, ens, cfg, reference, |_| {})
}

/// [`reconstruct`], calling `observe` after every iteration.
pub fn reconstruct_observed(
    meas: &Measurements,
    ens: &SensingEnsemble,
    cfg: &ReconstructionConfig,
    reference: Option<&Image>,
    mut observe: impl FnMut(&TraceRecord),
) -> core::result::Result<ReconstructionState, ReconstructError> {
    cfg.validate()?;
    let (oh, ow) = meas.original_size();
    if let Some(r) = reference {
        if (r.height(), r.width()) != (oh, ow) {
            return Err(Error::Shape(format!(
                "reference {}x{} vs original {}x{}",
                r.width(),
                r.height(),
                ow,
                oh
            ))
            .into());
        }
    }
    let score = |img: &Image| -> Result<Option<f64>> {
        match reference {
            Some(r) => Ok(Some(psnr(r, &img.crop(oh, ow)?)?)),
            None => Ok(None),
        }
    };

    let init = initialize(meas, ens, cfg.init_mode)?;
    let initial = init.image.crop(oh, ow)?;
    let mut state = ReconstructionState {
        estimate: initial.clone(),
        init_psnr: score(&init.image)?,
        initial,
        iteration: 0,
        trace: Vec::new(),
        init_mode: init.mode,
        stop: StopReason::MaxIters,
    };

    let mut u = init.image;
    let mut layout: Vec<Vec<Coord>> = Vec::new();
    for k in 1..=cfg.max_iters {
        let step = gradient_step(&u, meas, ens, cfg.rho, k).and_then(|y| {
            if layout.is_empty() || (k - 1) % cfg.regroup_every == 0 {
                layout = match_layout(&y, &cfg.patch_spec)?;
            }
            let x = denoise_with_layout(&y, cfg, &layout)?;
            if x.is_finite() {
                Ok(x)
            } else {
                Err(Error::Divergence { iteration: k })
            }
        });
        let x = match step {
            Ok(x) => x,
            Err(error) => {
                if matches!(error, Error::Divergence { .. } | Error::Data(_)) {
                    state.stop = StopReason::Diverged;
                }
                return Err(ReconstructError {
                    error,
                    partial: Some(Box::new(state)),
                });
            }
        };

        let norm = u.norm();
        let change = libm::sqrt(x.squared_distance(&u)?);
        let relative_change = if norm > 0.0 {
            change / norm
        } else if change == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        let record = TraceRecord {
            iteration: k,
            psnr: score(&x)?,
            fidelity: data_fidelity(&x, meas, ens)?,
            relative_change,
        };
        observe(&record);
        state.trace.push(record);
        state.iteration = k;
        u = x;
        if relative_change < cfg.tolerance {
            state.stop = StopReason::Converged;
            break;
        }
    }
    state.estimate = u.crop(oh, ow)?;
    Ok(state)
}

/// Empirical check of the group/pixel error equivalence: returns
/// `(‖x − y‖² / N, Σᵢ ‖X_Gi − Y_Gi‖²_F / K)` with groups matched on `x` and
/// the same coordinates used for `y`.
pub fn theorem1_check(x: &Image, y: &Image, spec: &PatchSpec) -> Result<(f64, f64)> {
    x.check_same_shape(y)?;
    let layout = match_layout(x, spec)?;
    let side = spec.patch_side;
    let mut group_sq = 0.0;
    let mut k = 0usize;
    for coords in &layout {
        for &(r, c) in coords {
            for pc in 0..side {
                for pr in 0..side {
                    let d = x.get(r + pr, c + pc) - y.get(r + pr, c + pc);
                    group_sq += d * d;
                }
            }
            k += side * side;
        }
    }
    let lhs = x.squared_distance(y)? / x.len() as f64;
    Ok((lhs, group_sq / k as f64))
}
