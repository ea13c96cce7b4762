//! Stock-day processing and the staged train/test pipeline.

mod algorithm;
mod config;
mod day;
mod discover;
mod io;
mod run;

pub use algorithm::*;
pub use config::*;
pub use day::*;
pub use discover::*;
pub use io::*;
pub use run::*;
