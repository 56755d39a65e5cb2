//! File formats, technology presets, SVG charts and the command line for
//! the design-space exploration engine in `hem3d-core`.

pub mod cli;
pub mod config;
pub mod formats;
pub mod plot;
pub mod presets;

pub use cli::{main_with, Failure};
pub use config::RunConfig;
