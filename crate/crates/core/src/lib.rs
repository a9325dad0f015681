//! Fractal dimension estimation for audio waveforms and planar point sets.
//!
//! * [`higuchi`] estimates the graph dimension of a time series from
//!   normalized curve lengths at a range of step sizes.
//! * [`boxcount`] estimates the box-counting dimension of a point set and
//!   generates reference fractals (Koch curve, Sierpinski carpet, Julia set
//!   boundaries).
//! * [`signal`] produces the deterministic test signals used to validate the
//!   Higuchi estimator.
//! * [`wav`] reads and writes RIFF/WAVE PCM and turns clips into windows.
//! * [`pipeline`] runs batch corpus analysis, classification and reporting.

pub mod boxcount;
pub mod error;
pub mod estimation;
pub mod higuchi;
pub mod pipeline;
pub mod signal;
pub mod wav;

pub use error::{FractalError, Result};
pub use estimation::{estimate_dimension, fit_loglog, DimensionEstimate, LinearFit, LogLogPoint};
pub use higuchi::{curve_length_at_scale, higuchi_dimension, HiguchiConfig};
pub use signal::{TimeSeries, WeierstrassParams};
