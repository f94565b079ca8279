//! File IO, configuration, experiment plans and CSV reports around
//! [`gsrcs_core`].

pub mod config;
pub mod error;
pub mod io;
pub mod measurements;
pub mod plan;

pub use crate::config::{load_plan, parse_plan};
pub use crate::error::{HarnessError, Result};
pub use crate::io::{read_image, write_image};
pub use crate::measurements::MeasurementFile;
pub use crate::plan::{c_sensitivity, run_plan, ExperimentPlan, ResultRow};
