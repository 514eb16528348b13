//! Library behind the `symptube` binary: configuration, spec-file loading,
//! the named check suites, and report serialization.

pub mod config;
pub mod report;
pub mod specfile;
pub mod suite;

pub use config::{Format, IntegratorChoice, RunConfig, Target};
pub use report::Report;
pub use suite::run_verify;
