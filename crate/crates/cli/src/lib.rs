//! Scenario runner behind the `wavekit` binary.

pub mod checks;
pub mod config;
pub mod output;
pub mod plot;
pub mod run;
