//! Block-based compressive sensing of grayscale images and reconstruction by
//! group-based sparse representation with a non-convex weighted ℓp penalty.
//!
//! The crate is `no_std` (it needs `alloc`). All transcendental math goes
//! through `libm`, so results are bit-identical across targets. Enable the
//! `parallel` feature to process patch groups with rayon; results do not
//! depend on thread scheduling.
//!
//! Pipeline overview:
//!
//! * [`sensing`]: per-block Gaussian projection, forward and adjoint operators.
//! * [`grouping`]: exemplar patches, nonlocal block matching, overlap averaging.
//! * [`dictionary`]: per-group orthonormal PCA basis.
//! * [`shrinkage`]: generalized soft-thresholding and adaptive weights.
//! * [`reconstructor`]: the iterative shrinkage/thresholding outer loop.
//! * [`metrics`]: PSNR.
#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod dictionary;
pub mod error;
pub mod grouping;
pub mod image;
pub mod linalg;
pub mod matrix;
pub mod metrics;
pub mod reconstructor;
pub mod sensing;
pub mod shrinkage;

pub use crate::dictionary::{learn_pca, GroupDictionary};
pub use crate::error::{Error, Result};
pub use crate::grouping::{aggregate, extract_patches, match_group, PatchGroup, PatchSpec};
pub use crate::image::{pad_image, Image, PaddedImage};
pub use crate::matrix::Matrix;
pub use crate::metrics::psnr;
pub use crate::reconstructor::{
    paper_step_and_exponent, reconstruct, reconstruct_observed, theorem1_check, InitMode,
    ReconstructError, ReconstructionConfig, ReconstructionState, StopReason, TauMode, TraceRecord,
    WeightRule,
};
pub use crate::sensing::{
    adjoint, make_ensemble, make_ensemble_with, sense, EnsembleKind, Measurements, SensingEnsemble,
};
pub use crate::shrinkage::{
    compute_weights, gst_scalar, gst_threshold, shrink_group, GstParams, WeightVector,
};
