//! Law-invariant pricing functionals on finite equal-atom probability spaces.
//!
//! Modules, bottom-up:
//!
//! * [`prob`]: atom spaces, payoffs, partitions and conditional expectations.
//! * [`quantile`]: quantile functions, Hardy–Littlewood products, convex order.
//! * [`functionals`]: the pricing-functional catalog, Choquet integrals,
//!   recession functionals, conjugate bounds and flag audits.
//! * [`friction`]: bid-ask spreads, (strongly) frictionless payoffs and the
//!   collapse-to-the-mean scanner.
//! * [`capital`]: acceptance sets, markets of eligible payoffs and the
//!   associated risk measures.
//! * [`orlicz`]: Young functions, Luxemburg norms and the Δ₂ check.
//! * [`formats`]: JSON/CSV file formats shared by the CLI and bindings.

pub mod capital;
pub mod error;
pub mod formats;
pub mod friction;
pub mod functionals;
pub mod orlicz;
pub mod prob;
pub mod quantile;

pub use capital::{AcceptanceFlags, AcceptanceSet, Market};
pub use error::{Error, Result};
pub use functionals::{Distortion, Flags, PricingFunctional, RepresentationSet};
pub use prob::{expectation, AtomSpace, DistributionSpec, Partition, Payoff};
pub use orlicz::YoungFunction;
pub use quantile::QuantileFn;
