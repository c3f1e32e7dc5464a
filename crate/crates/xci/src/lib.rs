//! Std companion to `xci-core`: JSON wire formats, run reports, the seeded
//! proposition suites and the `xci` command line.

pub mod cli;
pub mod json;
pub mod report;
pub mod suite;
