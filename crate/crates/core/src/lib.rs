//! Exact quadratic-form engine over `Q` and its multiquadratic extensions.
//!
//! The crate decides isotropy, Witt indices and hyperbolicity from local
//! invariants, models symplectic involution algebras of index at most 2 by
//! their form data, and builds and verifies certificates that a similitude
//! multiplier lies in `K^x^2 * Hyp`.

pub mod arith;
pub mod cli;
pub mod error;
pub mod extensions;
pub mod forms;
pub mod involutions;
pub mod local;
pub mod similitude;
pub mod syntax;

pub use arith::{Rat, SquareClass};
pub use error::{Error, Result};
pub use extensions::ExtensionTower;
pub use forms::QForm;
pub use involutions::{InvolutionAlgebra, QuaternionAlg};
pub use local::{LocalField, Place};
