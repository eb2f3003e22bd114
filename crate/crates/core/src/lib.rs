//! Pareto mixtures of exponentials and the M|G|∞ busy-period transform
//! calculus: forward map from a service law to the busy-period tail
//! transform, recovery of the service law from a PME busy period, and a
//! discrete-event simulator used as an independent oracle.

pub mod busy_period;
pub mod cli;
pub mod curve;
pub mod dist_core;
pub mod error;
pub mod ext_real;
pub mod laplace;
pub mod quad;
pub mod simulator;

pub use curve::TailCurve;
pub use dist_core::{ParetoParams, PmeParams, ServiceModel};
pub use error::{Error, Result};
pub use ext_real::ExtReal;
pub use laplace::{InversionConfig, TransformValue};
