//! Domain types shared by every other module: bidders, supply curves,
//! validated auction environments, allocations, and solver outcomes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::scalar::Scalar;

/// Opaque bidder (or seller) identifier. Original ids are preserved through
/// sorting, solving, and clearing; allocations always refer back to them.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BidderId(pub String);

impl BidderId {
    pub fn new(id: impl Into<String>) -> Self {
        BidderId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for BidderId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for BidderId {
    fn from(s: &str) -> Self {
        BidderId(s.to_string())
    }
}

impl From<String> for BidderId {
    fn from(s: String) -> Self {
        BidderId(s)
    }
}

/// A bidder with a flat per-unit value up to a quantity constraint: each of
/// the first `quantity` units is worth `value`, further units are worth
/// nothing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bidder<R: Scalar> {
    pub id: BidderId,
    pub value: R,
    pub quantity: R,
}

impl<R: Scalar> Bidder<R> {
    pub fn new(id: impl Into<BidderId>, value: R, quantity: R) -> Self {
        Bidder {
            id: id.into(),
            value,
            quantity,
        }
    }

    /// Effective demand `min(qᵢ, m)`: the most this bidder can ever obtain
    /// when `m` units are supplied.
    pub fn effective_demand(&self, m: &R) -> R {
        if self.quantity <= *m {
            self.quantity.clone()
        } else {
            m.clone()
        }
    }
}

/// Supply as a function of price: either a fixed number of units or a
/// right-continuous nondecreasing step function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SupplyCurve<R: Scalar> {
    /// `m` units at every price.
    Constant(R),
    /// `(price, quantity)` breakpoints, strictly increasing in price and
    /// nondecreasing in quantity. Evaluation is right-continuous; below the
    /// first breakpoint the first breakpoint's quantity applies (supply
    /// floor).
    Step(Vec<(R, R)>),
}

impl<R: Scalar> SupplyCurve<R> {
    /// Units supplied at price `b`.
    pub fn quantity_at(&self, b: &R) -> R {
        match self {
            SupplyCurve::Constant(m) => m.clone(),
            SupplyCurve::Step(points) => {
                let mut q = points[0].1.clone();
                for (price, quantity) in points {
                    if price <= b {
                        q = quantity.clone();
                    } else {
                        break;
                    }
                }
                q
            }
        }
    }

    /// Maximal price intervals of constant supply, as
    /// `(quantity, lower bound inclusive, upper bound exclusive)` with `None`
    /// for unbounded ends. The first segment absorbs everything below the
    /// second breakpoint because of the supply floor.
    pub(crate) fn segments(&self) -> Vec<(R, Option<R>, Option<R>)> {
        match self {
            SupplyCurve::Constant(m) => vec![(m.clone(), None, None)],
            SupplyCurve::Step(points) => {
                let mut segs = Vec::with_capacity(points.len());
                for (i, (price, quantity)) in points.iter().enumerate() {
                    let lo = if i == 0 { None } else { Some(price.clone()) };
                    let hi = points.get(i + 1).map(|(p, _)| p.clone());
                    segs.push((quantity.clone(), lo, hi));
                }
                segs
            }
        }
    }

    fn validate(&self) -> Result<(), ModelError> {
        match self {
            SupplyCurve::Constant(m) => {
                if *m <= R::zero() {
                    return Err(ModelError::NonPositiveSupply);
                }
            }
            SupplyCurve::Step(points) => {
                if points.is_empty() {
                    return Err(ModelError::NonPositiveSupply);
                }
                for (i, (price, quantity)) in points.iter().enumerate() {
                    if *quantity <= R::zero() {
                        return Err(ModelError::NonPositiveSupply);
                    }
                    if i > 0 {
                        let (prev_price, prev_quantity) = &points[i - 1];
                        if price <= prev_price || quantity < prev_quantity {
                            return Err(ModelError::NonMonotoneSupply);
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Environment validation failures.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("bidder {0} has a non-positive per-unit value")]
    NonPositiveValue(BidderId),
    #[error("bidder {0} has a non-positive quantity constraint")]
    NonPositiveQuantity(BidderId),
    #[error("reserve price is negative")]
    NegativeReserve,
    #[error("supply curve must be nondecreasing with strictly increasing breakpoint prices")]
    NonMonotoneSupply,
    #[error("supply quantities must be positive")]
    NonPositiveSupply,
    #[error("duplicate bidder id {0}")]
    DuplicateBidderId(BidderId),
    #[error("environment needs at least one bidder")]
    NoBidders,
}

/// A validated auction instance: supply, reserve price, and bidders held in
/// canonical order (value descending, ties by original input order).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuctionEnv<R: Scalar> {
    supply: SupplyCurve<R>,
    reserve: R,
    bidders: Vec<Bidder<R>>,
}

impl<R: Scalar> AuctionEnv<R> {
    /// Validate and canonicalize an environment. This is the only way to
    /// construct one, so downstream code can rely on the invariants.
    pub fn new(
        supply: SupplyCurve<R>,
        reserve: R,
        bidders: Vec<Bidder<R>>,
    ) -> Result<Self, ModelError> {
        supply.validate()?;
        if reserve < R::zero() {
            return Err(ModelError::NegativeReserve);
        }
        if bidders.is_empty() {
            return Err(ModelError::NoBidders);
        }
        let mut seen = BTreeSet::new();
        for b in &bidders {
            if b.value <= R::zero() {
                return Err(ModelError::NonPositiveValue(b.id.clone()));
            }
            if b.quantity <= R::zero() {
                return Err(ModelError::NonPositiveQuantity(b.id.clone()));
            }
            if !seen.insert(b.id.clone()) {
                return Err(ModelError::DuplicateBidderId(b.id.clone()));
            }
        }
        let mut bidders = bidders;
        // Stable sort keeps input order among equal values.
        bidders.sort_by(|a, b| b.value.cmp(&a.value));
        Ok(AuctionEnv {
            supply,
            reserve,
            bidders,
        })
    }

    pub fn supply(&self) -> &SupplyCurve<R> {
        &self.supply
    }

    pub fn reserve(&self) -> &R {
        &self.reserve
    }

    /// Bidders in canonical order (value descending, input order on ties).
    pub fn bidders(&self) -> &[Bidder<R>] {
        &self.bidders
    }

    pub fn bidder(&self, id: &BidderId) -> Option<&Bidder<R>> {
        self.bidders.iter().find(|b| &b.id == id)
    }

    /// Indices (into [`bidders`](Self::bidders)) of bidders admitted by the
    /// reserve price: participation is `vᵢ ≥ r`, weakly.
    pub fn participant_indices(&self) -> Vec<usize> {
        self.bidders
            .iter()
            .enumerate()
            .filter(|(_, b)| b.value >= self.reserve)
            .map(|(i, _)| i)
            .collect()
    }

    /// Largest per-unit value in the environment.
    pub fn max_value(&self) -> &R {
        &self.bidders[0].value
    }
}

/// Units awarded per bidder. Absent entries mean zero; equality treats them
/// that way, so an allocation listing explicit zeros equals one that omits
/// them.
#[derive(Debug, Clone, Eq)]
pub struct Allocation<R: Scalar>(BTreeMap<BidderId, R>);

impl<R: Scalar> Allocation<R> {
    pub fn new() -> Self {
        Allocation(BTreeMap::new())
    }

    pub fn set(&mut self, id: BidderId, units: R) {
        self.0.insert(id, units);
    }

    /// Units awarded to `id` (zero if unlisted).
    pub fn award(&self, id: &BidderId) -> R {
        self.0.get(id).cloned().unwrap_or_else(R::zero)
    }

    pub fn total(&self) -> R {
        self.0
            .values()
            .fold(R::zero(), |acc, units| acc + units.clone())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&BidderId, &R)> {
        self.0.iter()
    }

    /// Bidders with a strictly positive award.
    pub fn winners(&self) -> impl Iterator<Item = (&BidderId, &R)> {
        self.0.iter().filter(|(_, units)| **units > R::zero())
    }
}

impl<R: Scalar> Default for Allocation<R> {
    fn default() -> Self {
        Self::new()
    }
}

impl<R: Scalar> PartialEq for Allocation<R> {
    fn eq(&self, other: &Self) -> bool {
        let ids: BTreeSet<&BidderId> = self.0.keys().chain(other.0.keys()).collect();
        ids.into_iter().all(|id| self.award(id) == other.award(id))
    }
}

impl<R: Scalar> FromIterator<(BidderId, R)> for Allocation<R> {
    fn from_iter<T: IntoIterator<Item = (BidderId, R)>>(iter: T) -> Self {
        Allocation(iter.into_iter().collect())
    }
}

/// What happened at one step of the iterative procedure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepAction {
    /// The named bidder left at their value; the floor rose and the
    /// procedure continued.
    Drop(BidderId),
    /// The named bidder conceded to the residual role at the floor price.
    StopResidual(BidderId),
    /// Remaining demand fit the supply exactly at the floor.
    StopExact,
    /// A single bidder remained and took the supply at the floor.
    StopLast,
}

/// Per-step record of the iterative procedure: the active set, the dropout
/// thresholds b̄ᵢ and their value-capped versions ĥbᵢ = min(vᵢ, b̄ᵢ), and the
/// action taken. Threshold maps are empty for stops decided before any
/// threshold is computed (exact fill, lone bidder).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepRecord<R: Scalar> {
    pub step: usize,
    /// Price floor in force during the step: reserve at step 1, then the
    /// value of the last dropped bidder.
    pub floor: R,
    pub remaining: Vec<BidderId>,
    pub bar_thresholds: BTreeMap<BidderId, R>,
    pub hat_thresholds: BTreeMap<BidderId, R>,
    pub action: StepAction,
}

/// Full result of a solve: the uniform price, who gets what, a canonical
/// sealed-bid profile supporting that outcome, the order bidders dropped
/// out, and the per-step trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome<R: Scalar> {
    pub price: R,
    pub allocation: Allocation<R>,
    pub canonical_bids: BTreeMap<BidderId, R>,
    pub dropout_order: Vec<BidderId>,
    pub trace: Vec<StepRecord<R>>,
}

impl<R: Scalar> Outcome<R> {
    /// Price times units sold.
    pub fn revenue(&self) -> R {
        self.price.clone() * self.allocation.total()
    }
}
