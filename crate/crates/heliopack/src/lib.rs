//! Command-line pipeline around [`heliopack_core`]: file formats, the
//! end-to-end run, reports, SVG rendering and the rotation/latitude sweep.

pub mod config;
pub mod error;
pub mod formats;
pub mod parallel;
pub mod pipeline;
pub mod report;
pub mod svg;
pub mod sweep;
pub mod validate;

pub use config::PipelineConfig;
pub use error::{Error, Result, Stage};
