//! Monte Carlo studies around `copula-core`: configs, parallel seeded
//! runners, and CSV/JSON/SVG reports. The `copula-lab` binary wraps these
//! behind a command-line interface.

pub mod config;
pub mod error;
pub mod io;
pub mod report;
pub mod result;
pub mod studies;
pub mod svg;

pub use config::{ReportFormat, StudyConfig, StudyKind};
pub use error::{ConfigError, LabError, Result};
pub use report::emit_report;
pub use result::StudyResult;
pub use studies::{run_study, run_study_with_threads, thread_count};
