//! Scenario runner, figure presets and file output for the `eitmem` binary.

pub mod error;
pub mod fitio;
pub mod output;
pub mod presets;
pub mod scenario;

pub use error::{CliError, Result};
pub use scenario::{RunSettings, Scenario, Sweep, Target};
