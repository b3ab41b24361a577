//! Uniform-price auction toolkit for bidders with flat demands up to
//! quantity constraints.
//!
//! * [`model`] — exact-arithmetic domain types (bidders, supply curves,
//!   validated environments, outcomes).
//! * [`solver`] — the iterative procedure computing a Nash-equilibrium
//!   outcome, with reserve prices and price-dependent step supply.
//! * [`clock`] — event-driven ascending (English) auction with quantity
//!   constraints, pluggable strategies, and the dominant truthful strategy.
//! * [`oracle`] — ground truth: sealed-bid clearing, grid best responses,
//!   ε-Nash verification, exhaustive equilibrium enumeration, and the
//!   two-bidder closed form.
//! * [`procurement`] — the mirror-image procurement auction (capacitated
//!   sellers, inelastic demand, price cap), solved directly and via the
//!   mirror transform.
//! * [`dynamics`] — pay-as-bid best-response dynamics with Edgeworth-cycle
//!   detection.
//!
//! All arithmetic is exact. The core is generic over the scalar type via
//! [`scalar::Scalar`]; the crate-level aliases pick concrete rationals.

pub mod clock;
pub mod dynamics;
pub mod model;
pub mod oracle;
pub mod procurement;
pub mod scalar;
pub mod solver;

/// Default exact scalar: arbitrary-precision rational.
pub type Rational = num_rational::BigRational;

/// Machine-word rational; faster, but arithmetic can overflow on adversarial
/// inputs. Fine for small hand-built instances and dense grid searches.
pub type Rational64 = num_rational::Ratio<i64>;

pub use model::{
    Allocation, AuctionEnv, Bidder, BidderId, ModelError, Outcome, StepAction, StepRecord,
    SupplyCurve,
};
pub use scalar::{format_rational, parse_rational, Scalar};
