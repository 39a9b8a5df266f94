//! Elephant random walk laboratory.
//!
//! The elephant random walk is a nearest-neighbour walk on the integers whose
//! next step copies (with probability `p`) or negates (with probability
//! `1 - p`) a step chosen uniformly from its own past; the first step is `+1`
//! with probability `s`. The memory parameter splits the long-time behaviour
//! into three regimes at `p = 3/4`: diffusive, marginally superdiffusive, and
//! superdiffusive.
//!
//! This crate provides
//!
//! * [`walk`] — the process law, two provably equivalent step samplers, and
//!   seeded path / pair simulation,
//! * [`oracle`] — exact dynamic-programming computation of the law of `S_n`,
//!   its moments, and two-walk meeting quantities (no sampling involved),
//! * [`ensemble`] — reproducible parallel ensembles of walks and independent
//!   pairs with regime-dependent normalization,
//! * [`stats`] — streaming moments, Kolmogorov-Smirnov, power-law fits and
//!   running suprema used by the verification suites,
//! * [`check`] — the self-check suites wired into the `erwlab check` command.
//!
//! All real-valued computation is generic over the scalar type via
//! [`scalar::Scalar`] (`f32` or `f64`); the aliases at the crate root pin the
//! default double-precision lane.

pub mod check;
pub mod ensemble;
pub mod oracle;
pub mod regime;
pub mod rng;
pub mod scalar;
pub mod stats;
pub mod walk;

pub use regime::{classify_regime, diff_normalizer, walk_normalizer, Regime};
pub use rng::RngStream;
pub use scalar::Scalar;
pub use walk::WalkState;

/// Walk parameters in the default double-precision lane.
pub type WalkParams = walk::WalkParams<f64>;
/// Exact lattice law of `S_n` in the default double-precision lane.
pub type LatticePmf = oracle::LatticePmf<f64>;
/// Moment series in the default double-precision lane.
pub type MomentSeries = oracle::MomentSeries<f64>;
/// Pair simulation record in the default double-precision lane.
pub type PairRecord = walk::PairRecord<f64>;
/// Streaming moment accumulator in the default double-precision lane.
pub type StreamingMoments = stats::StreamingMoments<f64>;
