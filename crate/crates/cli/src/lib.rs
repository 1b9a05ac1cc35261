//! File formats, renderers and command implementations behind the
//! `dmfsense` binary.

pub mod calibration;
pub mod commands;
pub mod error;
pub mod render;
pub mod scenario;
pub mod stream;

pub use error::{exit, CliError, Result};
