//! Numerical quasi-norms of Besov-type, Triebel-Lizorkin-type, Besov-Hausdorff
//! and Triebel-Lizorkin-Hausdorff spaces for fields sampled on the periodic
//! torus `[0,1)^n`, `n` in {1, 2}.
//!
//! Every characterization is evaluated on a finite lattice: dyadic cubes with
//! level in a window, scales on a log-uniform grid, and spatial sups over grid
//! offsets. The crate is organised bottom-up:
//!
//! * [`grid`], [`fft`]: fields, dyadic cubes, scale grids, resampling.
//! * [`kernels`], [`maximal`], [`cwt`]: local-means kernels, convolutions,
//!   maximal functions and the continuous wavelet transform.
//! * [`hausdorff`]: capacity brackets, Choquet integrals and admissible weights.
//! * [`levels`]: the shared cube-sup engine behind every norm.
//! * [`norms_bt`], [`norms_hausdorff`]: function-space norms.
//! * [`axb`]: the ax+b group and Peetre-type spaces on it.
//! * [`wavelet`], [`seqnorm`]: biorthogonal wavelets and sequence norms.

// `!(x > 0.0)` style checks are meant to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod axb;
pub mod corpus;
pub mod cwt;
pub mod error;
pub mod fft;
pub mod grid;
pub mod hausdorff;
pub mod io;
pub mod kernels;
pub mod levels;
pub mod maximal;
pub mod norms_bt;
pub mod norms_hausdorff;
pub mod report;
pub mod seqnorm;
pub mod wavelet;

pub use error::{Error, Result};

/// Library version embedded in every CLI output.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
