//! Case registry, configuration and the run driver.

pub mod cases;
pub mod config;
pub mod metrics;
pub mod run;

pub use cases::{builtin, builtin_cases, BUILTIN_CASES};
pub use config::{BodyConfig, CaseConfig, CaseMode, CvConfig, Dimensionless, GridConfig, MethodToggle, RunConfig};
pub use metrics::{jump_metric, JumpStats};
pub use run::{run_case, run_case_with, BodyRow, CaseResult, ForceRow, MomentumRow, RunOptions, Summary};
