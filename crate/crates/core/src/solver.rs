//! Iterative procedure that finds a Nash-equilibrium outcome of the
//! uniform-price auction with quantity-constrained flat demands.
//!
//! The procedure tracks a rising price floor (the reserve at first, then the
//! value of the last bidder to leave). At each step every active bidder gets
//! a dropout threshold b̄ᵢ — the price at which keeping the full effective
//! demand stops beating conceding to the residual at the floor — capped at
//! the bidder's own value: ĥbᵢ = min(vᵢ, b̄ᵢ). The smallest ĥbᵢ decides the
//! step: if its value cap engaged, that bidder leaves and the floor rises to
//! their value; otherwise that bidder concedes, takes the residual supply at
//! the floor, and the auction ends there.

use std::collections::BTreeMap;

use crate::model::{
    Allocation, AuctionEnv, Bidder, BidderId, Outcome, StepAction, StepRecord, SupplyCurve,
};
use crate::scalar::Scalar;

/// Errors surfaced by threshold computation.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SolverError {
    /// The active bidders' effective demand does not exceed supply, so no
    /// bidder has any reason to outbid anyone. Callers handle the trivial
    /// and exact-fill cases before asking for thresholds.
    #[error("aggregate effective demand does not exceed supply")]
    InsufficientCompetition,
}

/// Dropout thresholds for one step at constant supply `m` and the given
/// price floor.
///
/// For each active bidder, with q̄ⱼ = min(qⱼ, m):
///
/// ```text
/// b̄ᵢ = [ (Σⱼ q̄ⱼ − m)·vᵢ + (m − Σ_{j≠i} q̄ⱼ)·floor ] / q̄ᵢ,   ĥbᵢ = min(vᵢ, b̄ᵢ)
/// ```
///
/// Returns `(b̄ᵢ, ĥbᵢ)` pairs aligned with `active`.
pub fn step_thresholds<R: Scalar>(
    active: &[Bidder<R>],
    m: &R,
    floor: &R,
) -> Result<Vec<(R, R)>, SolverError> {
    let effective: Vec<R> = active.iter().map(|b| b.effective_demand(m)).collect();
    let total = effective
        .iter()
        .fold(R::zero(), |acc, q| acc + q.clone());
    if total <= *m {
        return Err(SolverError::InsufficientCompetition);
    }
    Ok(active
        .iter()
        .zip(&effective)
        .map(|(bidder, own)| {
            let rivals = total.clone() - own.clone();
            let bar = ((total.clone() - m.clone()) * bidder.value.clone()
                + (m.clone() - rivals) * floor.clone())
                / own.clone();
            let hat = bar.clone().min(bidder.value.clone());
            (bar, hat)
        })
        .collect())
}

/// Dropout threshold against an arbitrary supply curve.
///
/// Solves the indifference q̄ᵢ(b̄)·(vᵢ − b̄) = (m(f) − Σ_{j≠i} q̄ⱼ(f))·(vᵢ − f)
/// for b̄. The bidder's own effective demand depends on the supply at the
/// solution price, so the linear equation is solved once per constant-supply
/// segment, in-segment solutions are accepted, and the largest accepted
/// solution wins. When the indifference constant is nonnegative every
/// candidate is ≥ vᵢ and the value cap decides anyway; a floor-anchored
/// candidate is reported if no segment contains its own solution (for a
/// negative constant an in-segment solution always exists, since the
/// candidate map is nondecreasing in price while the identity rises 1:1).
pub(crate) fn bar_threshold_on_curve<R: Scalar>(
    supply: &SupplyCurve<R>,
    floor: &R,
    value: &R,
    quantity: &R,
    rivals_effective_at_floor: &R,
) -> R {
    let m_f = supply.quantity_at(floor);
    let c = (rivals_effective_at_floor.clone() - m_f.clone())
        * (value.clone() - floor.clone());
    let mut accepted: Option<R> = None;
    for (m_seg, lo, hi) in supply.segments() {
        let own = quantity.clone().min(m_seg);
        let candidate = value.clone() + c.clone() / own;
        let lo_ok = lo.is_none_or(|lo| candidate >= lo);
        let hi_ok = hi.is_none_or(|hi| candidate < hi);
        if lo_ok && hi_ok {
            accepted = Some(match accepted {
                Some(best) => best.max(candidate),
                None => candidate,
            });
        }
    }
    accepted.unwrap_or_else(|| {
        let own = quantity.clone().min(m_f);
        value.clone() + c / own
    })
}

/// Solve any validated environment (constant or step supply).
pub fn solve<R: Scalar>(env: &AuctionEnv<R>) -> Outcome<R> {
    let bidders = env.bidders();
    let supply = env.supply();
    let reserve = env.reserve().clone();
    let participants = env.participant_indices();

    let mut allocation = Allocation::new();
    for b in bidders {
        allocation.set(b.id.clone(), R::zero());
    }
    let mut canonical: BTreeMap<BidderId, R> = BTreeMap::new();

    let total_demand = participants
        .iter()
        .fold(R::zero(), |acc, &i| acc + bidders[i].quantity.clone());
    if total_demand <= supply.quantity_at(&reserve) {
        // Supply covers everyone who clears the reserve; no competition.
        for &i in &participants {
            allocation.set(bidders[i].id.clone(), bidders[i].quantity.clone());
            canonical.insert(bidders[i].id.clone(), reserve.clone());
        }
        return Outcome {
            price: reserve,
            allocation,
            canonical_bids: canonical,
            dropout_order: Vec::new(),
            trace: Vec::new(),
        };
    }

    let mut active = participants;
    let mut dropped: Vec<usize> = Vec::new();
    let mut floor = reserve;
    let mut trace: Vec<StepRecord<R>> = Vec::new();
    let mut step = 1usize;

    let outcome = loop {
        let m_f = supply.quantity_at(&floor);
        let remaining: Vec<BidderId> = active.iter().map(|&i| bidders[i].id.clone()).collect();
        let active_demand = active
            .iter()
            .fold(R::zero(), |acc, &i| acc + bidders[i].quantity.clone());

        if active_demand <= m_f {
            // Remaining demand fits inside the supply at the current floor:
            // everyone active is served in full and the bidder who just left
            // picks up whatever is left over.
            let last = *dropped.last().expect("step 1 is covered by the trivial case");
            for &i in &active {
                allocation.set(bidders[i].id.clone(), bidders[i].quantity.clone());
                canonical.insert(bidders[i].id.clone(), floor.clone());
            }
            let leftover = m_f - active_demand;
            allocation.set(
                bidders[last].id.clone(),
                leftover.min(bidders[last].quantity.clone()),
            );
            trace.push(StepRecord {
                step,
                floor: floor.clone(),
                remaining,
                bar_thresholds: BTreeMap::new(),
                hat_thresholds: BTreeMap::new(),
                action: StepAction::StopExact,
            });
            break floor;
        }

        if active.len() == 1 {
            // Lone bidder; demand exceeds supply here, so they take all of it.
            let i = active[0];
            allocation.set(bidders[i].id.clone(), m_f);
            canonical.insert(bidders[i].id.clone(), floor.clone());
            trace.push(StepRecord {
                step,
                floor: floor.clone(),
                remaining,
                bar_thresholds: BTreeMap::new(),
                hat_thresholds: BTreeMap::new(),
                action: StepAction::StopLast,
            });
            break floor;
        }

        // Thresholds for the active set at the current floor.
        let eff: Vec<R> = active
            .iter()
            .map(|&i| bidders[i].effective_demand(&m_f))
            .collect();
        let eff_total = eff.iter().fold(R::zero(), |acc, q| acc + q.clone());
        let mut bars = Vec::with_capacity(active.len());
        let mut hats = Vec::with_capacity(active.len());
        for (k, &i) in active.iter().enumerate() {
            let rivals = eff_total.clone() - eff[k].clone();
            let bar = bar_threshold_on_curve(
                supply,
                &floor,
                &bidders[i].value,
                &bidders[i].quantity,
                &rivals,
            );
            hats.push(bar.clone().min(bidders[i].value.clone()));
            bars.push(bar);
        }
        let bar_map: BTreeMap<BidderId, R> = active
            .iter()
            .zip(&bars)
            .map(|(&i, b)| (bidders[i].id.clone(), b.clone()))
            .collect();
        let hat_map: BTreeMap<BidderId, R> = active
            .iter()
            .zip(&hats)
            .map(|(&i, h)| (bidders[i].id.clone(), h.clone()))
            .collect();

        let min_hat = hats.iter().min().expect("active set nonempty").clone();
        let tied: Vec<usize> = (0..active.len()).filter(|&k| hats[k] == min_hat).collect();

        // A tied bidder whose value cap did not engage (b̄ᵢ < vᵢ strictly)
        // prefers the residual role outright; the auction ends with them
        // conceding at the floor. Ties: largest residual claim, then latest
        // in the canonical order.
        let residual_pick = tied
            .iter()
            .copied()
            .filter(|&k| bars[k] < bidders[active[k]].value)
            .map(|k| {
                let rival_demand = active
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != k)
                    .fold(R::zero(), |acc, (_, &i)| acc + bidders[i].quantity.clone());
                (k, m_f.clone() - rival_demand)
            })
            .max_by(|(ka, ca), (kb, cb)| ca.cmp(cb).then(active[*ka].cmp(&active[*kb])));

        if let Some((k, claim)) = residual_pick {
            let pick = active[k];
            for (j, &i) in active.iter().enumerate() {
                if j != k {
                    allocation.set(bidders[i].id.clone(), bidders[i].quantity.clone());
                    canonical.insert(bidders[i].id.clone(), min_hat.clone());
                }
            }
            allocation.set(bidders[pick].id.clone(), claim);
            canonical.insert(bidders[pick].id.clone(), floor.clone());
            trace.push(StepRecord {
                step,
                floor: floor.clone(),
                remaining,
                bar_thresholds: bar_map,
                hat_thresholds: hat_map,
                action: StepAction::StopResidual(bidders[pick].id.clone()),
            });
            break floor;
        }

        // Every tied bidder is value-capped: drop the one latest in the
        // canonical order (lowest value, then latest input position) and
        // raise the floor to their value.
        let k = *tied.iter().max_by_key(|&&k| active[k]).expect("tie nonempty");
        let pick = active[k];
        trace.push(StepRecord {
            step,
            floor: floor.clone(),
            remaining,
            bar_thresholds: bar_map,
            hat_thresholds: hat_map,
            action: StepAction::Drop(bidders[pick].id.clone()),
        });
        floor = bidders[pick].value.clone();
        active.remove(k);
        dropped.push(pick);
        step += 1;
    };

    for &i in &dropped {
        canonical.insert(bidders[i].id.clone(), bidders[i].value.clone());
    }
    Outcome {
        price: outcome,
        allocation,
        canonical_bids: canonical,
        dropout_order: dropped.iter().map(|&i| bidders[i].id.clone()).collect(),
        trace,
    }
}

/// Equilibrium outcome for a constant-supply environment.
pub fn solve_equilibrium<R: Scalar>(env: &AuctionEnv<R>) -> Outcome<R> {
    solve(env)
}

/// Equilibrium outcome when supply is a nondecreasing step function of the
/// price. Exact-fill checks and threshold sums evaluate the curve at the
/// current floor; the threshold denominator is resolved per supply segment
/// (see [`step_thresholds`] for the constant-supply formula).
pub fn solve_increasing_supply<R: Scalar>(env: &AuctionEnv<R>) -> Outcome<R> {
    solve(env)
}
