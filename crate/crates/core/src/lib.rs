//! Certified numerics for the weighted zero sums behind the exceptional-set
//! exponent in the binary Goldbach problem.
//!
//! * [`kernel`]: the smoothing kernel, its Laplace transform and the `psi`, `xi`, `Delta` ratios.
//! * [`density`]: bounds on the tail sum `T(Lambda)`.
//! * [`rbound`]: bounds on the head sum `R(Lambda)`.
//! * [`optimizer`]: the deterministic box-constrained minimizer behind every "optimal" choice.
//! * [`ledger`]: the six-case assembly, the delta frontier search and the adversarial audit.

// Negated comparisons deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod density;
pub mod error;
pub mod kernel;
pub mod ledger;
pub mod optimizer;
pub mod rbound;

pub use error::{Error, Result};
