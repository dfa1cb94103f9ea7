//! Configuration files, the batch driver and output writers.

pub mod batch;
pub mod config;
pub mod emit;
pub mod expr;

pub use batch::{run_batch, BatchOptions, BatchReport, Mode, RunReport};
pub use config::{parse_config, RunConfig};
pub use emit::{emit_csv, emit_svg_evolution, emit_svg_field};
