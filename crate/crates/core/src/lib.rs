//! Learned point-set filters.
//!
//! A [`FilterStack`] is a stack of residual, radially-parameterised
//! convolutions over points on the unit torus. Its weights are optimised by
//! back-propagating a *sample program* (a weighted sum of spectral, pair
//! correlation, anisotropy and discrepancy losses) through the unrolled
//! stack, after which the stack turns fresh random points into a pattern
//! with the programmed statistics.
//!
//! Module map:
//!
//! - [`torus`]: toroidal offsets, distances and fixed-radius neighbour grids.
//! - [`samplers`]: random, jittered, Halton, Hammersley, Latin hypercube and
//!   dart-throwing reference patterns.
//! - [`filter`]: the RBF kernel basis and the iterated convolution.
//! - [`diff`]: reverse-mode gradients through the stack and gradient checks.
//! - [`losses`]: periodograms, radial statistics, pair-correlation histograms
//!   and every differentiable loss.
//! - [`program`]: the sample-program language and its evaluator.
//! - [`training`]: ADAM, learning-rate schedule, training loop, checkpoints.
//! - [`analysis`]: averaged spectra, discrepancy metrics, report export.
//! - [`targets`]: building target spectra and histograms from samplers.
//! - [`io`]: point CSV, PGM and table file formats.
//! - [`cli`]: the `samplecraft` command-line front end.

pub mod analysis;
pub mod cli;
pub mod diff;
mod error;
pub mod filter;
pub mod io;
pub mod losses;
mod pointset;
pub mod program;
pub mod samplers;
pub mod targets;
pub mod torus;
pub mod training;

pub use error::{Error, Result};
pub use filter::{FilterStack, KernelBasis};
pub use pointset::PointSet;
pub use program::{parse, ProgramAst};
pub use samplers::Sampler;
