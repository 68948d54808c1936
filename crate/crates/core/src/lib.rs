//! Two-particle Kapitza-Dirac diffraction in the Raman-Nath (thin grating)
//! regime.
//!
//! A pair of particles entangled in momentum crosses one or two standing
//! light waves. In the thin-grating limit each grating multiplies the
//! position-space wave function by a pure phase, which in momentum space
//! spreads every mode over the orders `p + 2nK` with amplitudes
//! `b_n = i^n e^{-iw} J_n(-w)`.
//!
//! The crate is organised bottom-up:
//!
//! * [`numerics`]: Bessel functions, 2D quadrature, the SVD Schmidt-number
//!   oracle and the Gaussian peak fitter.
//! * [`diffraction`]: grating configuration and the amplitude table.
//! * [`single_mode`]: plane-wave pairs, interference channels, position
//!   patterns and the `q -> p` discontinuity probe.
//! * [`multimode`]: Gaussian entangled states, their diffraction and the
//!   closed-form normalization.
//! * [`identical`]: (anti)symmetrized pairs of identical particles behind a
//!   single grating.
//! * [`pattern`]: the sampled-pattern container consumed by the CLI.
//!
//! Units: `hbar = 1` and momenta are measured in units of the spread `Q`.

// `!(x > 0.0)` deliberately rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diffraction;
pub mod error;
pub mod identical;
pub mod multimode;
pub mod numerics;
pub mod pattern;
pub mod single_mode;

pub use diffraction::{
    amplitude, amplitude_table, choose_truncation, AmplitudeTable, GratingConfig, DEFAULT_TAIL_TOLERANCE,
};
pub use error::{KdError, Result};
pub use identical::{IdenticalPairState, IdenticalSystem, ParticleStatistics};
pub use multimode::{DiffractedState, GaussianEntangledState};
pub use pattern::{Axis, NormalizationTag, PatternGrid};
