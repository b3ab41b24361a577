//! Best-response dynamics under discriminatory (pay-as-bid) pricing for
//! capacity-constrained bidders, with Edgeworth-cycle detection.
//!
//! Under pay-as-bid there is no uniform price to shade against: bidders
//! leapfrog each other while matching beats conceding, then the loser of
//! that race resets to the bottom and the war restarts. The round-robin
//! dynamics here make that narrative concrete and detect the cycle as the
//! first exact repetition of (bid profile, whose turn it is).

use std::collections::HashMap;

use crate::model::{Allocation, AuctionEnv, BidderId};
use crate::oracle::BidProfile;
use crate::scalar::Scalar;

/// Configuration for one trajectory.
#[derive(Debug, Clone)]
pub struct DynamicsConfig<R: Scalar> {
    /// Bid grid step; all best responses are multiples of it.
    pub epsilon: R,
    /// Number of full rounds (every bidder updating once) before giving up.
    pub max_rounds: usize,
    /// Profile the dynamics start from.
    pub initial: BidProfile<R>,
}

/// Dynamics failures.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DynamicsError {
    #[error("best-response dynamics support at most 2 bidders, got {0}")]
    UnsupportedBidderCount(usize),
    #[error("grid step must be positive")]
    NonPositiveEpsilon,
}

/// How a trajectory ended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DynamicsVerdict {
    /// The state at update index `start` recurred `period` updates later.
    Cycle { start: usize, period: usize },
    /// A full round left every bid unchanged.
    Converged,
    /// `max_rounds` elapsed without convergence or a repeat.
    Budget,
}

/// Clear a profile under discriminatory pricing: the allocation is the same
/// greedy one as the uniform-price rule (bid descending, value-then-input
/// priority on ties), but each winner pays their own bid per unit. Returns
/// the allocation and each bidder's total payment.
pub fn discriminatory_clear<R: Scalar>(
    env: &AuctionEnv<R>,
    profile: &BidProfile<R>,
) -> (Allocation<R>, std::collections::BTreeMap<BidderId, R>) {
    let bidders = env.bidders();
    let mut allocation = Allocation::new();
    let mut payments = std::collections::BTreeMap::new();
    for b in bidders {
        allocation.set(b.id.clone(), R::zero());
        payments.insert(b.id.clone(), R::zero());
    }
    let mut included: Vec<(usize, R)> = env
        .participant_indices()
        .into_iter()
        .filter_map(|i| {
            profile
                .bid(&bidders[i].id)
                .filter(|bid| **bid >= *env.reserve())
                .map(|bid| (i, bid.clone()))
        })
        .collect();
    included.sort_by(|(ia, ba), (ib, bb)| bb.cmp(ba).then(ia.cmp(ib)));
    let mut remaining = env.supply().quantity_at(env.reserve());
    for (i, bid) in included {
        if remaining == R::zero() {
            break;
        }
        let award = bidders[i].quantity.clone().min(remaining.clone());
        remaining = remaining - award.clone();
        payments.insert(bidders[i].id.clone(), award.clone() * bid);
        allocation.set(bidders[i].id.clone(), award);
    }
    (allocation, payments)
}

/// A bidder's pay-as-bid payoff under the profile.
pub fn discriminatory_payoff<R: Scalar>(
    env: &AuctionEnv<R>,
    profile: &BidProfile<R>,
    id: &BidderId,
) -> R {
    let (allocation, payments) = discriminatory_clear(env, profile);
    match env.bidder(id) {
        Some(b) => allocation.award(id) * b.value.clone() - payments[id].clone(),
        None => R::zero(),
    }
}

/// Round-robin best-response dynamics: each bidder in turn replaces their
/// bid with the lowest grid best response under pay-as-bid clearing. The
/// trajectory lists the profile after every single-bidder update.
///
/// Bids are searched on multiples of `epsilon` up to the mover's own value
/// (higher bids can never strictly win the tie against a zero-payoff bid).
/// The lowest-maximizer rule is what produces the reset phase of the cycle:
/// once matching the rival yields no more than the residual, the mover jumps
/// straight back to the bottom of the grid.
pub fn best_response_dynamics<R: Scalar>(
    env: &AuctionEnv<R>,
    config: &DynamicsConfig<R>,
) -> Result<(Vec<BidProfile<R>>, DynamicsVerdict), DynamicsError> {
    if config.epsilon <= R::zero() {
        return Err(DynamicsError::NonPositiveEpsilon);
    }
    let bidders = env.bidders();
    let movers = env.participant_indices();
    if movers.len() > 2 {
        return Err(DynamicsError::UnsupportedBidderCount(movers.len()));
    }

    let grid_for = |value: &R| -> Vec<R> {
        let mut points = Vec::new();
        let mut acc = R::zero();
        while acc <= *value {
            points.push(acc.clone());
            acc = acc + config.epsilon.clone();
        }
        points
    };

    let mut profile = config.initial.clone();
    let mut trajectory: Vec<BidProfile<R>> = Vec::new();
    let mut seen: HashMap<(usize, BidProfile<R>), usize> = HashMap::new();
    seen.insert((0, profile.clone()), 0);
    let mut update_index = 0usize;
    let mut unchanged_streak = 0usize;

    for _ in 0..config.max_rounds {
        for (turn, &mover) in movers.iter().enumerate() {
            let id = &bidders[mover].id;
            let before = profile.bid(id).cloned();
            let mut best: Option<(R, R)> = None;
            let mut candidate = profile.clone();
            for bid in grid_for(&bidders[mover].value) {
                candidate.set(id.clone(), bid.clone());
                let value = discriminatory_payoff(env, &candidate, id);
                match &best {
                    Some((_, best_value)) if value <= *best_value => {}
                    _ => best = Some((bid, value)),
                }
            }
            let (reply, _) = best.expect("grid contains at least the zero bid");
            let changed = before.as_ref() != Some(&reply);
            profile.set(id.clone(), reply);
            update_index += 1;
            trajectory.push(profile.clone());

            if changed {
                unchanged_streak = 0;
            } else {
                unchanged_streak += 1;
                if unchanged_streak >= movers.len() {
                    return Ok((trajectory, DynamicsVerdict::Converged));
                }
            }

            let next_turn = (turn + 1) % movers.len();
            let state = (next_turn, profile.clone());
            if let Some(&start) = seen.get(&state) {
                return Ok((
                    trajectory,
                    DynamicsVerdict::Cycle {
                        start,
                        period: update_index - start,
                    },
                ));
            }
            seen.insert(state, update_index);
        }
    }
    Ok((trajectory, DynamicsVerdict::Budget))
}
