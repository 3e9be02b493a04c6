//! Sub-band deep belief network ensemble for object classification.
//!
//! An input image is decomposed into sixteen quarter-resolution sub-band
//! images by a full 2-level discrete wavelet transform (every level-1 band
//! is decomposed again). One small DBN is trained per sub-band and the
//! sixteen predictions are combined by accuracy-weighted voting.
//!
//! Modules follow the pipeline:
//!
//! * [`wavelet`] — images, 2D DWT/IDWT, the full 2-level decomposition
//! * [`rbm`] — restricted Boltzmann machines and contrastive divergence
//! * [`dbn`] — RBM stacks, greedy pre-training, backprop fine-tuning
//! * [`ensemble`] — the 16-DBN ensemble and weighted voting
//! * [`dataset`] — COIL-20 / USPS ingestion and stratified splits
//! * [`config`], [`model_io`], [`report`], [`runner`] — the CLI workflows

pub mod config;
pub mod dataset;
pub mod dbn;
pub mod ensemble;
pub mod model_io;
pub mod pgm;
pub mod rbm;
pub mod report;
pub mod rng;
pub mod runner;
pub mod wavelet;

pub use wavelet::{Image, SubbandSet, WaveletFilter};
