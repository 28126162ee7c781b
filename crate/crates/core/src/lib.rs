//! Numerical laboratory for one-dimensional Muckenhoupt and reverse Hölder
//! weights.
//!
//! * [`weights`]: piecewise power-law weights with closed-form averages.
//! * [`constants`]: `A_p`, `A_∞`, `RH_p`, `RH_1` and its equivalent variants
//!   estimated by sup-scans.
//! * [`solvers`]: the transcendental equations for the sharp constants.
//! * [`bellman`]: the closed-form Bellman surfaces and their verification.
//! * [`extremals`]: weights attaining the Bellman bounds.
//! * [`dyadic`]: splitting trees and the concavity chain along them.
//! * [`acceptance`]: the end-to-end verification suite.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod bellman;
pub mod constants;
pub mod dyadic;
pub mod error;
pub mod extremals;
pub mod invariants;
pub mod oracle;
pub mod quad;
pub mod serde_ext;
pub mod solvers;
pub mod weights;

pub use error::{Error, Result};
pub use weights::{Interval, Moment, PowerPiece, Weight};
