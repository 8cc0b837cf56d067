//! Rough-path lifts above vector-valued Weierstrass functions.
//!
//! The crate evaluates truncated Weierstrass sums with exact phase reduction,
//! computes the second-level iterated integrals of their truncations in
//! closed form, and checks the resulting lift against the rough-path axioms:
//! Chen's relation, the geometric symmetric part, Hölder-type scaling and
//! geometric convergence in the truncation level. It also solves the
//! bilinear equation `dY = M(Y) dW` both as an ODE driven by truncations and
//! with a second-order rough step.

pub mod csvout;
pub mod error;
pub mod holder;
pub mod iterated;
pub mod quad;
pub mod rde;
pub mod roughpath;
pub mod summation;
pub mod time;
pub mod trigseries;
pub mod weier;

pub use error::{Error, Result};
pub use time::RationalTime;
pub use weier::{Amplitude, Phase, TruncationPolicy, VectorWeierstrass, WeierstrassComponent};
