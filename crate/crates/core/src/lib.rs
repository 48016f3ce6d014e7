//! Channel-frequency-response (CFR) sensing pipeline for hydration monitoring.
//!
//! The crate simulates an OFDM link through a parameterised body channel,
//! estimates the per-subcarrier CFR from each frame pair, denoises and
//! windows the CFR stream into feature vectors, and classifies hydration
//! state with a catalogue of classical classifiers evaluated by grouped
//! K-fold cross-validation.
//!
//! Module map:
//!
//! * [`ofdm`]: QPSK/Gray mapping, frame assembly with cyclic prefix, FFT receiver.
//! * [`channel`]: tapped-delay-line body channel, AWGN, session and campaign simulation.
//! * [`cfr`]: per-subcarrier estimation `h_i = y_i / x_i`.
//! * [`preprocess`]: Butterworth and Savitzky-Golay filtering, artifact rejection,
//!   windowed featurisation and standardisation.
//! * [`classifiers`]: KNN, SMO-trained SVM, CART, ensembles and MLPs behind one contract.
//! * [`eval`]: confusion matrices, accuracy, K-fold splitting and cross-validation.
//! * [`io`]: CSV schemas, run manifests, reports and model serialisation.
//! * [`pipeline`]: campaign to labelled examples in one call.

pub mod cfr;
pub mod channel;
pub mod classifiers;
pub mod error;
pub mod eval;
pub mod io;
pub mod label;
pub mod ofdm;
pub mod pipeline;
pub mod preprocess;
pub mod rng;

pub use error::{Error, Result};
pub use label::Label;

/// Complex baseband sample used throughout the link model.
pub type ComplexSample = num_complex::Complex64;

/// Version string recorded in run manifests and model files.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
