//! Mode synthesizing machine (MSM), a restricted Boltzmann machine baseline
//! and the reconstruction-experiment harness that compares them.
//!
//! Layout:
//! - [`matrix`], [`rng`], [`stats`], [`metrics`]: numerics foundation.
//! - [`mrelu`]: noisy rectifier and the mean-cut-off modified ReLU.
//! - [`msm`]: the mode synthesizing machine.
//! - [`rbm`]: RBM energies, exact small-instance quantities, CD-k training.
//! - [`dataio`]: PGM/CSV images, ROI cropping, concatenation, synthetic glyphs.
//! - [`harness`]: experiment protocols and canonical JSON reports.
//! - [`oracle`], [`verify`]: brute-force reference computations and the
//!   self-check suite built on them.

pub mod dataio;
pub mod error;
pub mod harness;
pub mod matrix;
pub mod metrics;
pub mod mrelu;
pub mod msm;
pub mod oracle;
pub mod rbm;
pub mod rng;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use rng::RngStream;
