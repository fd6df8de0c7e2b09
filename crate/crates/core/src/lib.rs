//! NOMA-aided joint radar and multicast-unicast beamforming.
//!
//! A multi-antenna base station superimposes a multicast stream (for a radar
//! user and a communication user) and a unicast stream (for the
//! communication user only) in the power domain, while the same transmit
//! covariance must keep the radar beampattern close to a radar-only optimum.
//!
//! * [`hermitian`]: Hermitian matrix type and spectral helpers.
//! * [`scenario`]: system parameters, channel draws and achievable rates.
//! * [`beampattern`]: steering vectors, desired patterns and the radar-only
//!   least-squares design.
//! * [`conic`]: dense interior-point solver for LP/SOC/PSD programs.
//! * [`noma`]: the double-layer penalty / successive convex approximation
//!   beamformer design.
//! * [`benchmarks`]: TDMA and no-SIC comparison schemes.
//! * [`harness`]: Monte-Carlo sweeps, configuration and CSV/JSON output.

pub mod beampattern;
pub mod benchmarks;
pub mod conic;
pub mod error;
pub mod harness;
pub mod hermitian;
pub mod noma;
pub mod scenario;

pub use error::{Error, Result};
pub use hermitian::{ComplexVector, EigenDecomposition, HermitianMatrix, C64};
