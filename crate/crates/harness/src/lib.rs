//! Configuration, execution, persistence, and reporting of experiments.

pub mod config;
pub mod error;
pub mod record;
pub mod report;
pub mod run;

pub use config::{Experiment, ExperimentConfig, Overrides};
pub use error::{HarnessError, HarnessResult};
pub use record::ExperimentRecord;
pub use report::{report, verify, ReportFormat};
pub use run::execute;
