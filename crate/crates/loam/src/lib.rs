//! Command-line companion to [`loam_core`]: CSV ingestion, JSON and text
//! reports, and a parallel bootstrap driver.

pub mod input;
pub mod parallel;
pub mod report;

pub use loam_core as core;
