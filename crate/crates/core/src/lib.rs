//! Shading-aware rooftop photovoltaic layout optimization.
//!
//! The crate is `no_std` (it needs `alloc`) and holds every algorithmic stage of
//! the pipeline:
//!
//! - [`raster`]: rooftop extraction from multi-band imagery (morphological
//!   gradient, hole filling, region labelling and filtering, NDVI and shadow
//!   masks, contour vectorization).
//! - [`geom`]: polygons with holes, offsets, clipping, rotated bounding boxes,
//!   Feret diameters and visibility.
//! - [`solar`]: sun position, plane-of-array irradiance, representative time
//!   sampling and per-orientation baseline generation.
//! - [`layout`]: candidate panels over azimuth/tilt/shift grids and the conflict
//!   graph between them.
//! - [`shade`]: shadow-volume projection and the sparse time-sampled shadow matrix.
//! - [`opt`]: objective evaluation and the independent-set solvers.
//! - [`decomp`]: visibility-graph community detection, region bisection and the
//!   sequential multi-sweep optimizer.
//!
//! File formats, the CLI and anything touching the filesystem live in the
//! `heliopack` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod decomp;
mod error;
pub mod geom;
pub mod layout;
pub mod opt;
pub mod raster;
pub mod shade;
pub mod solar;

pub use error::{Error, Result};
