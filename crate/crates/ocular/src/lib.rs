//! Ocular metrics from grayscale video.
//!
//! This crate implements the measurement chain behind camera-based alertness
//! monitoring, end to end and from first principles:
//!
//! - [`imgcore`] — raster types, integral images, resampling, rotation,
//!   convolution, morphology, connected components, distance transforms;
//! - [`enhance`] — histogram equalization, bi-histogram equalization, CLAHE,
//!   Otsu thresholding;
//! - [`cascade`] — Haar-like features, boosted stump training, attentional
//!   cascade detection, the down-sample/ROI-remap speed framework, rotation
//!   search, and template matching;
//! - [`subspace`] — principal-component models with minimum-reconstruction-
//!   error sliding-window detection;
//! - [`eyestate`] — block local-binary-pattern descriptors, a max-margin
//!   open/closed classifier, and PERCLOS;
//! - [`iris`] — projection functions, edge-strength maps, glint removal,
//!   Canny edges, circular Hough transform, eye corners, and saccadic
//!   parameters;
//! - [`track`] — a linear Kalman filter with box-constrained state
//!   projection for iris tracking;
//! - [`spectacles`] — spectacle-presence detection and eye-region extraction
//!   by distance transform;
//! - [`eog`] — electro-oculogram filtering, per-unit scaling, saccadic peak
//!   isolation, and correlation;
//! - [`synth`] — seeded synthetic fixture renderers used by the test suite,
//!   the book, and the CLI training demos.
//!
//! All image operations are pure functions over immutable values and safe to
//! call concurrently on shared inputs.

pub mod cascade;
pub mod enhance;
pub mod eog;
mod error;
pub mod eyestate;
pub mod imgcore;
pub mod iris;
pub mod spectacles;
pub mod subspace;
pub mod synth;
pub mod track;

pub use error::{Error, Result};
