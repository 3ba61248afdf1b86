//! Battle–Lemarié spline wavelets, weighted Besov sequence norms and
//! boundedness criteria for Riemann–Liouville operators of natural order.
//!
//! Every function handled by the crate is a [`PiecewisePoly`]: a piecewise
//! polynomial on dyadic breakpoints. B-splines, localized wavelets, test
//! functions and their Riemann–Liouville images are all built and compared
//! in that representation.

pub mod besov;
pub mod bspline;
pub mod criteria;
mod error;
pub mod harness;
pub mod par;
pub mod piecewise;
pub mod quad;
pub mod rliouville;
pub mod wavelet;
pub mod weights;

pub use error::{Error, Result};
pub use piecewise::{Dyadic, PiecewisePoly};
