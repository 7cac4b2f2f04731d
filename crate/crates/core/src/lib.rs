//! Transient analysis of a birth-death process on the integers whose jump
//! rate alternates with the parity of the current state: `λ` out of even
//! states and `μ` out of odd states, in both directions.
//!
//! The crate provides
//!
//! * [`bilateral`]: closed forms for the unrestricted chain `N(t)` on ℤ
//!   (generating functions, transition probabilities, mean and variance);
//! * [`reflecting`]: the chain `R(t)` reflected at zero (Laplace-domain
//!   solution, `q₀₀(t)` and `q₁₀(t)`, probability of an even state, moments);
//! * [`oracle`]: independent engines used to check the closed forms
//!   (uniformization of a truncated generator, path simulation, numerical
//!   Laplace inversion);
//! * [`specfun`]: the special functions the closed forms need;
//! * [`cli`]: the `altbd` command-line front end.

pub mod bilateral;
pub mod cli;
mod error;
pub mod oracle;
pub mod quad;
pub mod reflecting;
pub mod specfun;

pub use bilateral::{PgfPair, Rates, TransitionQuery};
pub use error::{Error, Result};
pub use reflecting::{LaplaceRoots, SumDiffParams};
pub use specfun::SeriesControl;
