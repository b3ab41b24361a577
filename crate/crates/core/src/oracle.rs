//! Ground-truth machinery, independent of the iterative solver: sealed-bid
//! uniform-price clearing, grid best responses, ε-Nash verification,
//! exhaustive equilibrium enumeration on small instances, and the two-bidder
//! closed form.
//!
//! Ties at equal bids are broken in favor of the higher-value bidder (then
//! input order). That encodes the smallest-money-unit convention: the bidder
//! prepared to outbid by one money unit wins the tie as the unit shrinks to
//! zero.

use std::collections::BTreeMap;

use crate::model::{Allocation, AuctionEnv, BidderId, Outcome};
use crate::scalar::Scalar;

/// One sealed bid per bidder. Bids below the reserve mean staying out.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BidProfile<R: Scalar>(BTreeMap<BidderId, R>);

impl<R: Scalar> BidProfile<R> {
    pub fn new() -> Self {
        BidProfile(BTreeMap::new())
    }

    pub fn set(&mut self, id: BidderId, bid: R) {
        self.0.insert(id, bid);
    }

    pub fn bid(&self, id: &BidderId) -> Option<&R> {
        self.0.get(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&BidderId, &R)> {
        self.0.iter()
    }
}

impl<R: Scalar> Default for BidProfile<R> {
    fn default() -> Self {
        Self::new()
    }
}

impl<R: Scalar> FromIterator<(BidderId, R)> for BidProfile<R> {
    fn from_iter<T: IntoIterator<Item = (BidderId, R)>>(iter: T) -> Self {
        BidProfile(iter.into_iter().collect())
    }
}

/// Discrete bid set: multiples of `epsilon` from zero through `max_bid`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridConfig<R: Scalar> {
    epsilon: R,
    max_bid: R,
}

/// Grid construction failures.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GridError {
    #[error("grid step must be positive")]
    NonPositiveEpsilon,
    #[error("max bid must be a nonnegative integer multiple of the grid step")]
    MaxBidOffGrid,
}

impl<R: Scalar> GridConfig<R> {
    pub fn new(epsilon: R, max_bid: R) -> Result<Self, GridError> {
        if epsilon <= R::zero() {
            return Err(GridError::NonPositiveEpsilon);
        }
        if max_bid < R::zero() {
            return Err(GridError::MaxBidOffGrid);
        }
        let mut acc = R::zero();
        while acc < max_bid {
            acc = acc + epsilon.clone();
        }
        if acc != max_bid {
            return Err(GridError::MaxBidOffGrid);
        }
        Ok(GridConfig { epsilon, max_bid })
    }

    pub fn epsilon(&self) -> &R {
        &self.epsilon
    }

    pub fn max_bid(&self) -> &R {
        &self.max_bid
    }

    /// All grid bids, ascending.
    pub fn points(&self) -> Vec<R> {
        let mut points = Vec::new();
        let mut acc = R::zero();
        while acc <= self.max_bid {
            points.push(acc.clone());
            acc = acc + self.epsilon.clone();
        }
        points
    }

    /// Exact grid membership.
    pub fn contains(&self, bid: &R) -> bool {
        if *bid < R::zero() || *bid > self.max_bid {
            return false;
        }
        let steps = bid.clone() / self.epsilon.clone();
        let mut acc = R::zero();
        while acc < steps {
            acc = acc + R::one();
        }
        acc == steps
    }
}

/// Clear one sealed-bid uniform-price auction.
///
/// Bids at or above the reserve participate. The price is the last accepted
/// bid: the highest bid level at which demand still covers supply, or the
/// reserve when supply covers everyone. Award is greedy from the top, ties
/// by value then input order, with the marginal bidder taking the residual.
pub fn clear_sealed_bid<R: Scalar>(
    env: &AuctionEnv<R>,
    profile: &BidProfile<R>,
) -> (R, Allocation<R>) {
    let bidders = env.bidders();
    let mut allocation = Allocation::new();
    for b in bidders {
        allocation.set(b.id.clone(), R::zero());
    }
    // (canonical position, bid); the canonical position already encodes the
    // value-then-input tie priority.
    let included: Vec<(usize, R)> = env
        .participant_indices()
        .into_iter()
        .filter_map(|i| {
            profile
                .bid(&bidders[i].id)
                .filter(|bid| **bid >= *env.reserve())
                .map(|bid| (i, bid.clone()))
        })
        .collect();
    if included.is_empty() {
        return (env.reserve().clone(), allocation);
    }

    let mut levels: Vec<R> = included.iter().map(|(_, bid)| bid.clone()).collect();
    levels.sort();
    levels.dedup();
    // Highest bid level at which demand at or above it covers the supply.
    let price = levels
        .iter()
        .rev()
        .find(|level| {
            let demand = included
                .iter()
                .filter(|(_, bid)| bid >= level)
                .fold(R::zero(), |acc, (i, _)| acc + bidders[*i].quantity.clone());
            demand >= env.supply().quantity_at(level)
        })
        .cloned()
        .unwrap_or_else(|| env.reserve().clone());

    let mut order = included;
    order.sort_by(|(ia, ba), (ib, bb)| bb.cmp(ba).then(ia.cmp(ib)));
    let mut remaining = env.supply().quantity_at(&price);
    for (i, bid) in order {
        if bid < price || remaining == R::zero() {
            break;
        }
        let award = bidders[i].quantity.clone().min(remaining.clone());
        remaining = remaining - award.clone();
        allocation.set(bidders[i].id.clone(), award);
    }
    (price, allocation)
}

/// A bidder's payoff under the profile: units won times surplus per unit.
pub fn payoff<R: Scalar>(env: &AuctionEnv<R>, profile: &BidProfile<R>, id: &BidderId) -> R {
    let (price, allocation) = clear_sealed_bid(env, profile);
    match env.bidder(id) {
        Some(b) => allocation.award(id) * (b.value.clone() - price),
        None => R::zero(),
    }
}

/// Best reply on the grid holding everyone else fixed: evaluates every grid
/// bid and returns `(bid, payoff)` for the lowest maximizer.
pub fn best_response_on_grid<R: Scalar>(
    env: &AuctionEnv<R>,
    profile: &BidProfile<R>,
    id: &BidderId,
    grid: &GridConfig<R>,
) -> (R, R) {
    let mut candidate = profile.clone();
    let mut best: Option<(R, R)> = None;
    for bid in grid.points() {
        candidate.set(id.clone(), bid.clone());
        let value = payoff(env, &candidate, id);
        match &best {
            Some((_, best_value)) if value <= *best_value => {}
            _ => best = Some((bid, value)),
        }
    }
    best.expect("grid has at least the zero bid")
}

/// Result of an ε-Nash check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verification<R: Scalar> {
    Verified,
    /// Some bidder improves by moving to `bid`; `gain` is the strict payoff
    /// increase.
    Deviation { bidder: BidderId, bid: R, gain: R },
}

/// Check that no participant has a strictly improving deviation on the grid.
///
/// The profile itself is evaluated exactly as given (canonical profiles
/// carry threshold bids that need not be grid points); only the deviations
/// are restricted to the grid. Participants missing from the profile are
/// treated as sitting out and may deviate in.
pub fn verify_epsilon_nash<R: Scalar>(
    env: &AuctionEnv<R>,
    profile: &BidProfile<R>,
    grid: &GridConfig<R>,
) -> Verification<R> {
    let bidders = env.bidders();
    for i in env.participant_indices() {
        let id = &bidders[i].id;
        let current = payoff(env, profile, id);
        let (bid, best) = best_response_on_grid(env, profile, id, grid);
        if best > current {
            return Verification::Deviation {
                bidder: id.clone(),
                bid,
                gain: best - current,
            };
        }
    }
    Verification::Verified
}

/// A grid profile that survived verification, with its cleared outcome.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridEquilibrium<R: Scalar> {
    pub profile: BidProfile<R>,
    pub price: R,
    pub allocation: Allocation<R>,
}

/// Oracle failures.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("enumeration needs {required} profiles, over the budget of {budget}")]
    BudgetExceeded { required: u128, budget: u128 },
    #[error("two-bidder closed form needs exactly 2 participants, found {0}")]
    NotTwoBidders(usize),
}

/// Exhaustively test every grid profile and return the pure ε-Nash ones in
/// deterministic order. Fails upfront if the grid needs more than `budget`
/// profiles.
pub fn enumerate_equilibria_on_grid<R: Scalar>(
    env: &AuctionEnv<R>,
    grid: &GridConfig<R>,
    budget: u128,
) -> Result<Vec<GridEquilibrium<R>>, OracleError> {
    let bidders = env.bidders();
    let participants = env.participant_indices();
    let points = grid.points();
    let required = (points.len() as u128)
        .checked_pow(participants.len() as u32)
        .ok_or(OracleError::BudgetExceeded {
            required: u128::MAX,
            budget,
        })?;
    if required > budget {
        return Err(OracleError::BudgetExceeded { required, budget });
    }

    let mut found = Vec::new();
    let mut odometer = vec![0usize; participants.len()];
    loop {
        let profile: BidProfile<R> = participants
            .iter()
            .zip(&odometer)
            .map(|(&i, &p)| (bidders[i].id.clone(), points[p].clone()))
            .collect();
        if verify_epsilon_nash(env, &profile, grid) == Verification::Verified {
            let (price, allocation) = clear_sealed_bid(env, &profile);
            found.push(GridEquilibrium {
                profile,
                price,
                allocation,
            });
        }
        let mut pos = 0;
        loop {
            if pos == odometer.len() {
                return Ok(found);
            }
            odometer[pos] += 1;
            if odometer[pos] < points.len() {
                break;
            }
            odometer[pos] = 0;
            pos += 1;
        }
    }
}

/// Distinct `(price, allocation)` outcomes among enumerated equilibria;
/// profiles differing only in "or higher" slack collapse together.
pub fn distinct_outcomes<R: Scalar>(equilibria: &[GridEquilibrium<R>]) -> Vec<(R, Allocation<R>)> {
    let mut outcomes: Vec<(R, Allocation<R>)> = Vec::new();
    for eq in equilibria {
        if !outcomes
            .iter()
            .any(|(p, a)| *p == eq.price && *a == eq.allocation)
        {
            outcomes.push((eq.price.clone(), eq.allocation.clone()));
        }
    }
    outcomes
}

/// Closed-form equilibrium outcome for exactly two participating bidders at
/// constant supply, anchored at the reserve price.
///
/// With q̄ᵢ = min(qᵢ, m), the dropout threshold of bidder `i` against rival
/// `j` is `tᵢ = [(q̄ᵢ+q̄ⱼ−m)·vᵢ + (m−q̄ⱼ)·r]/q̄ᵢ`. A bidder who can fill the
/// whole supply holds the rival down to their value; otherwise the bidder
/// with the lower threshold concedes the residual at the reserve.
pub fn two_bidder_equilibrium<R: Scalar>(env: &AuctionEnv<R>) -> Result<Outcome<R>, OracleError> {
    let bidders = env.bidders();
    let participants = env.participant_indices();
    if participants.len() != 2 {
        return Err(OracleError::NotTwoBidders(participants.len()));
    }
    let hi = &bidders[participants[0]];
    let lo = &bidders[participants[1]];
    let r = env.reserve().clone();
    let m = env.supply().quantity_at(&r);

    let mut allocation = Allocation::new();
    for b in bidders {
        allocation.set(b.id.clone(), R::zero());
    }
    let mut bids = BTreeMap::new();
    let mut dropout = Vec::new();

    if hi.quantity.clone() + lo.quantity.clone() <= m {
        // No competition: both served in full at the reserve.
        allocation.set(hi.id.clone(), hi.quantity.clone());
        allocation.set(lo.id.clone(), lo.quantity.clone());
        bids.insert(hi.id.clone(), r.clone());
        bids.insert(lo.id.clone(), r.clone());
        return Ok(Outcome {
            price: r,
            allocation,
            canonical_bids: bids,
            dropout_order: dropout,
            trace: Vec::new(),
        });
    }

    let threshold = {
        let m = m.clone();
        let r = r.clone();
        move |own: &crate::model::Bidder<R>, rival: &crate::model::Bidder<R>| -> R {
            let own_eff = own.effective_demand(&m);
            let rival_eff = rival.effective_demand(&m);
            ((own_eff.clone() + rival_eff.clone() - m.clone()) * own.value.clone()
                + (m.clone() - rival_eff) * r.clone())
                / own_eff
        }
    };

    let price;
    match (hi.quantity >= m, lo.quantity >= m) {
        (true, true) => {
            // Either alone absorbs the supply; competition stops at the
            // lower value.
            price = lo.value.clone();
            allocation.set(hi.id.clone(), m);
            bids.insert(hi.id.clone(), lo.value.clone());
            bids.insert(lo.id.clone(), lo.value.clone());
            dropout.push(lo.id.clone());
        }
        (true, false) => {
            let t_hi = threshold(hi, lo);
            if t_hi > lo.value {
                // Outbidding the rival beats pocketing the residual.
                price = lo.value.clone();
                allocation.set(hi.id.clone(), m);
                bids.insert(hi.id.clone(), lo.value.clone());
                bids.insert(lo.id.clone(), lo.value.clone());
                dropout.push(lo.id.clone());
            } else {
                price = r.clone();
                allocation.set(hi.id.clone(), m - lo.quantity.clone());
                allocation.set(lo.id.clone(), lo.quantity.clone());
                bids.insert(hi.id.clone(), r.clone());
                bids.insert(lo.id.clone(), t_hi);
            }
        }
        (false, true) => {
            // The higher-value bidder never concedes here; the rival does.
            price = r.clone();
            allocation.set(hi.id.clone(), hi.quantity.clone());
            allocation.set(lo.id.clone(), m - hi.quantity.clone());
            bids.insert(hi.id.clone(), threshold(lo, hi));
            bids.insert(lo.id.clone(), r.clone());
        }
        (false, false) => {
            let t_hi = threshold(hi, lo);
            let t_lo = threshold(lo, hi);
            // The lower threshold concedes; on a tie, the larger residual
            // claim (then the later bidder) does.
            let hi_concedes = match t_hi.cmp(&t_lo) {
                std::cmp::Ordering::Less => true,
                std::cmp::Ordering::Greater => false,
                std::cmp::Ordering::Equal => hi.quantity > lo.quantity,
            };
            price = r.clone();
            let (keeper, residual, t_residual) = if hi_concedes {
                (lo, hi, t_hi)
            } else {
                (hi, lo, t_lo)
            };
            allocation.set(keeper.id.clone(), keeper.quantity.clone());
            allocation.set(residual.id.clone(), m - keeper.quantity.clone());
            bids.insert(keeper.id.clone(), t_residual);
            bids.insert(residual.id.clone(), r.clone());
        }
    }

    Ok(Outcome {
        price,
        allocation,
        canonical_bids: bids,
        dropout_order: dropout,
        trace: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Bidder, SupplyCurve};
    use crate::scalar::{int, ratio};
    use crate::solver::solve_equilibrium;
    use num_rational::BigRational;

    type R = BigRational;

    fn r(n: i64, d: i64) -> R {
        ratio(n, d)
    }

    fn bidder(id: &str, v: R, q: i64) -> Bidder<R> {
        Bidder::new(id, v, int(q))
    }

    fn env(m: i64, reserve: R, bidders: Vec<Bidder<R>>) -> AuctionEnv<R> {
        AuctionEnv::new(SupplyCurve::Constant(int(m)), reserve, bidders).unwrap()
    }

    fn example2() -> AuctionEnv<R> {
        env(
            3,
            r(0, 1),
            vec![
                bidder("b1", r(1, 1), 2),
                bidder("b2", r(1, 2), 2),
                bidder("b3", r(1, 10), 1),
            ],
        )
    }

    fn profile(bids: &[(&str, R)]) -> BidProfile<R> {
        bids.iter()
            .map(|(id, b)| (BidderId::from(*id), b.clone()))
            .collect()
    }

    #[test]
    fn clears_canonical_and_alternative_profiles() {
        let e = example2();
        let (price, alloc) = clear_sealed_bid(
            &e,
            &profile(&[("b1", r(3, 10)), ("b2", r(1, 10)), ("b3", r(1, 10))]),
        );
        assert_eq!(price, r(1, 10));
        assert_eq!(alloc.award(&"b1".into()), int(2));
        assert_eq!(alloc.award(&"b2".into()), int(1));
        assert_eq!(alloc.award(&"b3".into()), int(0));

        // The inefficient equilibrium: bidder 2 outbids, bidder 1 takes the
        // residual through the value priority at the 1/10 tie.
        let (price, alloc) = clear_sealed_bid(
            &e,
            &profile(&[("b1", r(1, 10)), ("b2", r(11, 20)), ("b3", r(1, 10))]),
        );
        assert_eq!(price, r(1, 10));
        assert_eq!(alloc.award(&"b1".into()), int(1));
        assert_eq!(alloc.award(&"b2".into()), int(2));
        assert_eq!(alloc.award(&"b3".into()), int(0));
    }

    #[test]
    fn bids_below_reserve_stay_out() {
        let e = env(
            3,
            r(1, 2),
            vec![bidder("b1", r(1, 1), 2), bidder("b2", r(3, 4), 2)],
        );
        let (price, alloc) = clear_sealed_bid(&e, &profile(&[("b1", r(1, 4)), ("b2", r(2, 5))]));
        assert_eq!(price, r(1, 2));
        assert_eq!(alloc.total(), int(0));
    }

    #[test]
    fn excess_supply_clears_at_reserve() {
        let e = env(
            9,
            r(0, 1),
            vec![bidder("b1", r(1, 1), 2), bidder("b2", r(1, 2), 3)],
        );
        let (price, alloc) = clear_sealed_bid(&e, &profile(&[("b1", r(3, 4)), ("b2", r(1, 4))]));
        assert_eq!(price, r(0, 1));
        assert_eq!(alloc.award(&"b1".into()), int(2));
        assert_eq!(alloc.award(&"b2".into()), int(3));
    }

    #[test]
    fn sole_winner_pays_own_bid() {
        // Bidder 1 swallows the supply, so the last accepted bid is theirs.
        let e = env(
            3,
            r(0, 1),
            vec![bidder("b1", r(1, 1), 3), bidder("b2", r(9, 10), 2)],
        );
        let (price, alloc) = clear_sealed_bid(&e, &profile(&[("b1", r(19, 20)), ("b2", r(9, 10))]));
        assert_eq!(price, r(19, 20));
        assert_eq!(alloc.award(&"b1".into()), int(3));
        assert_eq!(alloc.award(&"b2".into()), int(0));
    }

    #[test]
    fn payoff_is_award_times_surplus() {
        let e = example2();
        let p = profile(&[("b1", r(3, 10)), ("b2", r(1, 10)), ("b3", r(1, 10))]);
        assert_eq!(payoff(&e, &p, &"b1".into()), r(9, 5));
        assert_eq!(payoff(&e, &p, &"b3".into()), r(0, 1));
        // A winner paying its own value nets zero: bidder 2's marginal bid
        // at 1/2 sets the price.
        let p = profile(&[("b1", r(3, 5)), ("b2", r(1, 2)), ("b3", r(1, 10))]);
        assert_eq!(payoff(&e, &p, &"b2".into()), r(0, 1));
    }

    #[test]
    fn best_response_prefers_the_lowest_winning_bid() {
        let e = example2();
        let grid = GridConfig::new(r(1, 20), r(1, 1)).unwrap();
        let p = profile(&[("b1", r(0, 1)), ("b2", r(1, 10)), ("b3", r(1, 10))]);
        // Tying at 1/10 already wins both units through the value priority.
        let (bid, gain) = best_response_on_grid(&e, &p, &"b1".into(), &grid);
        assert_eq!(bid, r(1, 10));
        assert_eq!(gain, r(9, 5));
    }

    #[test]
    fn best_response_without_competition_is_the_floor() {
        let e = env(3, r(0, 1), vec![bidder("b1", r(1, 2), 2)]);
        let grid = GridConfig::new(r(1, 10), r(1, 2)).unwrap();
        let (bid, best) = best_response_on_grid(&e, &BidProfile::new(), &"b1".into(), &grid);
        assert_eq!(bid, r(0, 1));
        assert_eq!(best, r(1, 1)); // both units at the zero price
    }

    #[test]
    fn best_response_can_prefer_the_residual() {
        // One bidder covers the supply; conceding beats outbidding when the
        // rival bids high enough.
        let e = env(
            3,
            r(0, 1),
            vec![bidder("b1", r(1, 1), 3), bidder("b2", r(9, 10), 2)],
        );
        let grid = GridConfig::new(r(1, 20), r(1, 1)).unwrap();
        let p = profile(&[("b1", r(9, 10)), ("b2", r(9, 10))]);
        let (bid, best) = best_response_on_grid(&e, &p, &"b1".into(), &grid);
        assert_eq!(bid, r(0, 1));
        assert_eq!(best, r(1, 1)); // one residual unit at price zero
    }

    #[test]
    fn verifies_canonical_profiles_and_rejects_zero_profile() {
        let e1 = env(
            3,
            r(0, 1),
            vec![
                bidder("b1", r(7, 10), 3),
                bidder("b2", r(1, 2), 2),
                bidder("b3", r(3, 10), 3),
            ],
        );
        let grid = GridConfig::new(r(1, 10), r(7, 10)).unwrap();
        let canonical = profile(&[("b1", r(1, 2)), ("b2", r(1, 2)), ("b3", r(3, 10))]);
        assert_eq!(
            verify_epsilon_nash(&e1, &canonical, &grid),
            Verification::Verified
        );

        let e2 = example2();
        let grid = GridConfig::new(r(1, 20), r(1, 1)).unwrap();
        let canonical = profile(&[("b1", r(3, 10)), ("b2", r(1, 10)), ("b3", r(1, 10))]);
        assert_eq!(
            verify_epsilon_nash(&e2, &canonical, &grid),
            Verification::Verified
        );

        let zeros = profile(&[("b1", r(0, 1)), ("b2", r(0, 1)), ("b3", r(0, 1))]);
        match verify_epsilon_nash(&e2, &zeros, &grid) {
            Verification::Deviation { gain, .. } => assert!(gain > r(0, 1)),
            Verification::Verified => panic!("all-zero profile should not verify"),
        }
    }

    #[test]
    fn deviation_witness_replays_exactly() {
        let e = example2();
        let grid = GridConfig::new(r(1, 20), r(1, 1)).unwrap();
        let p = profile(&[("b1", r(0, 1)), ("b2", r(0, 1)), ("b3", r(0, 1))]);
        if let Verification::Deviation { bidder, bid, gain } = verify_epsilon_nash(&e, &p, &grid) {
            let before = payoff(&e, &p, &bidder);
            let mut deviated = p.clone();
            deviated.set(bidder.clone(), bid);
            assert_eq!(payoff(&e, &deviated, &bidder) - before, gain);
        } else {
            panic!("expected a deviation");
        }
    }

    #[test]
    fn enumeration_respects_budget() {
        let e = example2();
        let grid = GridConfig::new(r(1, 20), r(1, 1)).unwrap();
        assert_eq!(
            enumerate_equilibria_on_grid(&e, &grid, 100).unwrap_err(),
            OracleError::BudgetExceeded {
                required: 21u128.pow(3),
                budget: 100
            }
        );
    }

    #[test]
    fn enumeration_on_a_single_bidder_prices_at_reserve() {
        let e = env(3, r(0, 1), vec![bidder("b1", r(1, 2), 2)]);
        let grid = GridConfig::new(r(1, 10), r(1, 2)).unwrap();
        let eqs = enumerate_equilibria_on_grid(&e, &grid, 1_000).unwrap();
        assert!(!eqs.is_empty());
        for eq in &eqs {
            assert_eq!(eq.price, r(0, 1));
            assert_eq!(eq.allocation.award(&"b1".into()), int(2));
        }
    }

    #[test]
    fn all_zero_profile_is_an_equilibrium_without_scarcity() {
        let e = env(
            5,
            r(0, 1),
            vec![bidder("b1", r(1, 1), 2), bidder("b2", r(1, 2), 2)],
        );
        let grid = GridConfig::new(r(1, 2), r(1, 1)).unwrap();
        let eqs = enumerate_equilibria_on_grid(&e, &grid, 10_000).unwrap();
        assert!(eqs
            .iter()
            .any(|eq| eq.profile == profile(&[("b1", r(0, 1)), ("b2", r(0, 1))])));
    }

    #[test]
    fn two_bidder_closed_form_matches_worked_cases() {
        // Both can fill the supply: price is the lower value.
        let e = env(
            3,
            r(0, 1),
            vec![bidder("b1", r(9, 10), 3), bidder("b2", r(7, 10), 4)],
        );
        let out = two_bidder_equilibrium(&e).unwrap();
        assert_eq!(out.price, r(7, 10));
        assert_eq!(out.allocation.award(&"b1".into()), int(3));
        assert_eq!(out.allocation.award(&"b2".into()), int(0));

        // Symmetric bidders below the supply: one concedes at zero.
        let e = env(
            3,
            r(0, 1),
            vec![bidder("b1", r(3, 5), 2), bidder("b2", r(3, 5), 2)],
        );
        let out = two_bidder_equilibrium(&e).unwrap();
        assert_eq!(out.price, r(0, 1));
        assert_eq!(out.canonical_bids[&"b1".into()], r(3, 10));
        assert_eq!(out.canonical_bids[&"b2".into()], r(0, 1));
        assert_eq!(out.allocation.award(&"b1".into()), int(2));
        assert_eq!(out.allocation.award(&"b2".into()), int(1));

        // Steeper value-per-unit keeps the constraint, the other takes the
        // residual; agrees with the iterative solver.
        let e = env(
            3,
            r(0, 1),
            vec![bidder("b1", r(1, 1), 2), bidder("b2", r(1, 2), 2)],
        );
        let out = two_bidder_equilibrium(&e).unwrap();
        assert_eq!(out.price, r(0, 1));
        assert_eq!(out.allocation.award(&"b1".into()), int(2));
        assert_eq!(out.allocation.award(&"b2".into()), int(1));
        let solved = solve_equilibrium(&e);
        assert_eq!(out.price, solved.price);
        assert_eq!(out.allocation, solved.allocation);
    }

    #[test]
    fn two_bidder_requires_two_participants() {
        let e = env(3, r(0, 1), vec![bidder("b1", r(1, 1), 2)]);
        assert_eq!(
            two_bidder_equilibrium(&e).unwrap_err(),
            OracleError::NotTwoBidders(1)
        );
    }

    #[test]
    fn grid_validation_and_membership() {
        assert_eq!(
            GridConfig::new(r(0, 1), r(1, 1)).unwrap_err(),
            GridError::NonPositiveEpsilon
        );
        assert_eq!(
            GridConfig::new(r(1, 20), r(21, 40)).unwrap_err(),
            GridError::MaxBidOffGrid
        );
        let grid = GridConfig::new(r(1, 20), r(1, 1)).unwrap();
        assert_eq!(grid.points().len(), 21);
        assert!(grid.contains(&r(3, 20)));
        assert!(!grid.contains(&r(17, 30)));
        assert!(!grid.contains(&r(21, 20)));
    }
}
