//! Parameter scans, the invariant suite and the command line.

pub mod checks;
pub mod cli;
pub mod scan;

pub use checks::{run_checks, CheckOutcome};
pub use cli::cli_main;
pub use scan::{h1_h2_gap, run_scan, Axis, Observable, Parameter, Scale, ScanResult, ScanSpec};
