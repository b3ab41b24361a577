//! Procurement mirror of the buyer auction: capacity-constrained sellers
//! offer to cover a buyer's inelastic demand under a price cap, paying
//! uniform at the last accepted offer.
//!
//! Solved two ways on purpose. [`solve_procurement`] runs the descending
//! procedure directly (offer ceilings fall from the cap as expensive sellers
//! drop out); [`mirror_to_buyer`] maps the instance onto a buyer auction with
//! values `p̄ − cᵢ` and supply `d` so the buyer solver can be cross-checked
//! against the direct route.

use std::collections::{BTreeMap, BTreeSet};

use crate::model::{
    Allocation, AuctionEnv, Bidder, BidderId, ModelError, Outcome, StepAction, StepRecord,
    SupplyCurve,
};
use crate::scalar::Scalar;

/// A seller with constant marginal cost up to a capacity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Seller<R: Scalar> {
    pub id: BidderId,
    pub cost: R,
    pub capacity: R,
}

impl<R: Scalar> Seller<R> {
    pub fn new(id: impl Into<BidderId>, cost: R, capacity: R) -> Self {
        Seller {
            id: id.into(),
            cost,
            capacity,
        }
    }

    /// The most this seller can ever sell: `min(qᵢ, d)`.
    pub fn effective_capacity(&self, d: &R) -> R {
        if self.capacity <= *d {
            self.capacity.clone()
        } else {
            d.clone()
        }
    }
}

/// Procurement failures.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProcurementError {
    #[error("seller {0} has a non-positive marginal cost")]
    NonPositiveCost(BidderId),
    #[error("seller {0} has a non-positive capacity")]
    NonPositiveCapacity(BidderId),
    #[error("demand must be positive")]
    NonPositiveDemand,
    #[error("duplicate seller id {0}")]
    DuplicateSellerId(BidderId),
    #[error("environment needs at least one seller")]
    NoSellers,
    #[error("no seller's cost is below the price cap")]
    CapBelowCost,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Validated procurement instance: sellers in canonical order (cost
/// ascending, ties by input order), inelastic demand, and the price cap.
/// Sellers priced at or above the cap stay in the instance but never
/// participate (their mirrored value would be nonpositive).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcurementEnv<R: Scalar> {
    sellers: Vec<Seller<R>>,
    demand: R,
    price_cap: R,
}

impl<R: Scalar> ProcurementEnv<R> {
    pub fn new(
        sellers: Vec<Seller<R>>,
        demand: R,
        price_cap: R,
    ) -> Result<Self, ProcurementError> {
        if sellers.is_empty() {
            return Err(ProcurementError::NoSellers);
        }
        if demand <= R::zero() {
            return Err(ProcurementError::NonPositiveDemand);
        }
        let mut seen = BTreeSet::new();
        for s in &sellers {
            if s.cost <= R::zero() {
                return Err(ProcurementError::NonPositiveCost(s.id.clone()));
            }
            if s.capacity <= R::zero() {
                return Err(ProcurementError::NonPositiveCapacity(s.id.clone()));
            }
            if !seen.insert(s.id.clone()) {
                return Err(ProcurementError::DuplicateSellerId(s.id.clone()));
            }
        }
        let mut sellers = sellers;
        sellers.sort_by(|a, b| a.cost.cmp(&b.cost));
        Ok(ProcurementEnv {
            sellers,
            demand,
            price_cap,
        })
    }

    pub fn sellers(&self) -> &[Seller<R>] {
        &self.sellers
    }

    pub fn demand(&self) -> &R {
        &self.demand
    }

    pub fn price_cap(&self) -> &R {
        &self.price_cap
    }

    /// Indices of sellers that can profitably offer under the cap.
    pub fn participant_indices(&self) -> Vec<usize> {
        self.sellers
            .iter()
            .enumerate()
            .filter(|(_, s)| s.cost < self.price_cap)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Converts buyer-side outcomes back into procurement terms.
#[derive(Debug, Clone)]
pub struct BackMap<R: Scalar> {
    price_cap: R,
    all_sellers: Vec<BidderId>,
}

impl<R: Scalar> BackMap<R> {
    /// `sell_price = p̄ − buy_price`; offers mirror the same way, the
    /// allocation and dropout order carry over, and excluded sellers get
    /// explicit zero rows.
    pub fn apply(&self, buyer: &Outcome<R>) -> Outcome<R> {
        let mut allocation = Allocation::new();
        for id in &self.all_sellers {
            allocation.set(id.clone(), buyer.allocation.award(id));
        }
        let offers: BTreeMap<BidderId, R> = buyer
            .canonical_bids
            .iter()
            .map(|(id, bid)| (id.clone(), self.price_cap.clone() - bid.clone()))
            .collect();
        let trace = buyer
            .trace
            .iter()
            .map(|record| StepRecord {
                step: record.step,
                floor: self.price_cap.clone() - record.floor.clone(),
                remaining: record.remaining.clone(),
                bar_thresholds: record
                    .bar_thresholds
                    .iter()
                    .map(|(id, b)| (id.clone(), self.price_cap.clone() - b.clone()))
                    .collect(),
                hat_thresholds: record
                    .hat_thresholds
                    .iter()
                    .map(|(id, h)| (id.clone(), self.price_cap.clone() - h.clone()))
                    .collect(),
                action: record.action.clone(),
            })
            .collect();
        Outcome {
            price: self.price_cap.clone() - buyer.price.clone(),
            allocation,
            canonical_bids: offers,
            dropout_order: buyer.dropout_order.clone(),
            trace,
        }
    }
}

/// Map the procurement instance onto the buyer problem it mirrors: supply
/// `d`, zero reserve, and one bidder per participating seller with value
/// `p̄ − cᵢ` and the same quantity constraint.
pub fn mirror_to_buyer<R: Scalar>(
    env: &ProcurementEnv<R>,
) -> Result<(AuctionEnv<R>, BackMap<R>), ProcurementError> {
    let participants = env.participant_indices();
    if participants.is_empty() {
        return Err(ProcurementError::CapBelowCost);
    }
    let bidders: Vec<Bidder<R>> = participants
        .iter()
        .map(|&i| {
            let s = &env.sellers[i];
            Bidder::new(
                s.id.clone(),
                env.price_cap.clone() - s.cost.clone(),
                s.capacity.clone(),
            )
        })
        .collect();
    let buyer_env = AuctionEnv::new(
        SupplyCurve::Constant(env.demand.clone()),
        R::zero(),
        bidders,
    )?;
    Ok((
        buyer_env,
        BackMap {
            price_cap: env.price_cap.clone(),
            all_sellers: env.sellers.iter().map(|s| s.id.clone()).collect(),
        },
    ))
}

/// Solve the procurement auction directly with the descending procedure.
///
/// The offer ceiling starts at the cap and falls to the cost of each seller
/// who drops out. Per step, seller `i`'s threshold is
/// `b̄ᵢ = cᵢ + (d − Σ_{j≠i} q̄ⱼ)·(g − cᵢ)/q̄ᵢ` with `ĥbᵢ = max(cᵢ, b̄ᵢ)`; the
/// largest ĥbᵢ leaves when its cost cap engaged and otherwise ends the
/// auction as the residual seller offering the ceiling. Trace records store
/// the current ceiling in the `floor` field.
pub fn solve_procurement<R: Scalar>(
    env: &ProcurementEnv<R>,
) -> Result<Outcome<R>, ProcurementError> {
    let sellers = env.sellers();
    let demand = env.demand().clone();
    let participants = env.participant_indices();
    if participants.is_empty() {
        return Err(ProcurementError::CapBelowCost);
    }

    let mut allocation = Allocation::new();
    for s in sellers {
        allocation.set(s.id.clone(), R::zero());
    }
    let mut offers: BTreeMap<BidderId, R> = BTreeMap::new();

    let total_capacity = participants
        .iter()
        .fold(R::zero(), |acc, &i| acc + sellers[i].capacity.clone());
    if total_capacity <= demand {
        // Everyone sells out; unconstrained offers settle at the cap.
        for &i in &participants {
            allocation.set(sellers[i].id.clone(), sellers[i].capacity.clone());
            offers.insert(sellers[i].id.clone(), env.price_cap().clone());
        }
        return Ok(Outcome {
            price: env.price_cap().clone(),
            allocation,
            canonical_bids: offers,
            dropout_order: Vec::new(),
            trace: Vec::new(),
        });
    }

    let mut active = participants;
    let mut dropped: Vec<usize> = Vec::new();
    let mut ceiling = env.price_cap().clone();
    let mut trace: Vec<StepRecord<R>> = Vec::new();
    let mut step = 1usize;

    let price = loop {
        let remaining: Vec<BidderId> = active.iter().map(|&i| sellers[i].id.clone()).collect();
        let active_capacity = active
            .iter()
            .fold(R::zero(), |acc, &i| acc + sellers[i].capacity.clone());

        if active_capacity <= demand {
            // Remaining capacity fits under the demand: everyone active
            // sells out and the seller who just left covers the shortfall.
            let last = *dropped.last().expect("step 1 is covered by the trivial case");
            for &i in &active {
                allocation.set(sellers[i].id.clone(), sellers[i].capacity.clone());
                offers.insert(sellers[i].id.clone(), ceiling.clone());
            }
            let shortfall = demand.clone() - active_capacity;
            allocation.set(
                sellers[last].id.clone(),
                shortfall.min(sellers[last].capacity.clone()),
            );
            trace.push(StepRecord {
                step,
                floor: ceiling.clone(),
                remaining,
                bar_thresholds: BTreeMap::new(),
                hat_thresholds: BTreeMap::new(),
                action: StepAction::StopExact,
            });
            break ceiling;
        }

        if active.len() == 1 {
            let i = active[0];
            allocation.set(sellers[i].id.clone(), demand.clone());
            offers.insert(sellers[i].id.clone(), ceiling.clone());
            trace.push(StepRecord {
                step,
                floor: ceiling.clone(),
                remaining,
                bar_thresholds: BTreeMap::new(),
                hat_thresholds: BTreeMap::new(),
                action: StepAction::StopLast,
            });
            break ceiling;
        }

        let eff: Vec<R> = active
            .iter()
            .map(|&i| sellers[i].effective_capacity(&demand))
            .collect();
        let eff_total = eff.iter().fold(R::zero(), |acc, q| acc + q.clone());
        let mut bars = Vec::with_capacity(active.len());
        let mut hats = Vec::with_capacity(active.len());
        for (k, &i) in active.iter().enumerate() {
            let rivals = eff_total.clone() - eff[k].clone();
            let bar = sellers[i].cost.clone()
                + (demand.clone() - rivals) * (ceiling.clone() - sellers[i].cost.clone())
                    / eff[k].clone();
            hats.push(bar.clone().max(sellers[i].cost.clone()));
            bars.push(bar);
        }
        let bar_map: BTreeMap<BidderId, R> = active
            .iter()
            .zip(&bars)
            .map(|(&i, b)| (sellers[i].id.clone(), b.clone()))
            .collect();
        let hat_map: BTreeMap<BidderId, R> = active
            .iter()
            .zip(&hats)
            .map(|(&i, h)| (sellers[i].id.clone(), h.clone()))
            .collect();

        let max_hat = hats.iter().max().expect("active set nonempty").clone();
        let tied: Vec<usize> = (0..active.len()).filter(|&k| hats[k] == max_hat).collect();

        // A tied seller whose cost cap did not engage (b̄ᵢ > cᵢ strictly)
        // prefers the residual role: sell the uncovered remainder at the
        // ceiling. Ties: largest residual claim, then latest in order.
        let residual_pick = tied
            .iter()
            .copied()
            .filter(|&k| bars[k] > sellers[active[k]].cost)
            .map(|k| {
                let rival_capacity = active
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != k)
                    .fold(R::zero(), |acc, (_, &i)| acc + sellers[i].capacity.clone());
                (k, demand.clone() - rival_capacity)
            })
            .max_by(|(ka, ca), (kb, cb)| ca.cmp(cb).then(active[*ka].cmp(&active[*kb])));

        if let Some((k, claim)) = residual_pick {
            let pick = active[k];
            for (j, &i) in active.iter().enumerate() {
                if j != k {
                    allocation.set(sellers[i].id.clone(), sellers[i].capacity.clone());
                    offers.insert(sellers[i].id.clone(), max_hat.clone());
                }
            }
            allocation.set(sellers[pick].id.clone(), claim);
            offers.insert(sellers[pick].id.clone(), ceiling.clone());
            trace.push(StepRecord {
                step,
                floor: ceiling.clone(),
                remaining,
                bar_thresholds: bar_map,
                hat_thresholds: hat_map,
                action: StepAction::StopResidual(sellers[pick].id.clone()),
            });
            break ceiling;
        }

        // Every tied seller is cost-capped: the latest in the canonical
        // order (highest cost, then latest input position) drops out and the
        // ceiling falls to their cost.
        let k = *tied.iter().max_by_key(|&&k| active[k]).expect("tie nonempty");
        let pick = active[k];
        trace.push(StepRecord {
            step,
            floor: ceiling.clone(),
            remaining,
            bar_thresholds: bar_map,
            hat_thresholds: hat_map,
            action: StepAction::Drop(sellers[pick].id.clone()),
        });
        ceiling = sellers[pick].cost.clone();
        active.remove(k);
        dropped.push(pick);
        step += 1;
    };

    for &i in &dropped {
        offers.insert(sellers[i].id.clone(), sellers[i].cost.clone());
    }
    Ok(Outcome {
        price,
        allocation,
        canonical_bids: offers,
        dropout_order: dropped.iter().map(|&i| sellers[i].id.clone()).collect(),
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, ratio};
    use crate::solver::solve_equilibrium;
    use num_rational::BigRational;
    use num_traits::Zero;

    type R = BigRational;

    fn r(n: i64, d: i64) -> R {
        ratio(n, d)
    }

    fn seller(id: &str, c: R, q: i64) -> Seller<R> {
        Seller::new(id, c, int(q))
    }

    fn mirror_of_worked_example() -> ProcurementEnv<R> {
        ProcurementEnv::new(
            vec![
                seller("s1", r(1, 5), 2),
                seller("s2", r(7, 10), 2),
                seller("s3", r(11, 10), 1),
            ],
            int(3),
            r(6, 5),
        )
        .unwrap()
    }

    #[test]
    fn direct_solve_prices_at_the_last_dropout_cost() {
        let out = solve_procurement(&mirror_of_worked_example()).unwrap();
        assert_eq!(out.price, r(11, 10));
        assert_eq!(out.allocation.award(&"s1".into()), int(2));
        assert_eq!(out.allocation.award(&"s2".into()), int(1));
        assert_eq!(out.allocation.award(&"s3".into()), int(0));
        assert_eq!(out.dropout_order, vec![BidderId::from("s3")]);
        assert_eq!(out.canonical_bids[&"s1".into()], r(9, 10));
        assert_eq!(out.canonical_bids[&"s2".into()], r(11, 10));
        assert_eq!(out.canonical_bids[&"s3".into()], r(11, 10));
    }

    #[test]
    fn mirror_route_agrees_exactly() {
        let env = mirror_of_worked_example();
        let direct = solve_procurement(&env).unwrap();
        let (buyer, back) = mirror_to_buyer(&env).unwrap();
        let mirrored = back.apply(&solve_equilibrium(&buyer));
        assert_eq!(direct, mirrored);
    }

    #[test]
    fn two_big_sellers_compete_down_to_the_second_cost() {
        let env = ProcurementEnv::new(
            vec![seller("s1", r(1, 5), 5), seller("s2", r(2, 5), 5)],
            int(3),
            int(1),
        )
        .unwrap();
        let out = solve_procurement(&env).unwrap();
        assert_eq!(out.price, r(2, 5));
        assert_eq!(out.allocation.award(&"s1".into()), int(3));
        assert_eq!(out.allocation.award(&"s2".into()), int(0));
    }

    #[test]
    fn lone_remaining_seller_covers_demand_at_the_rival_cost() {
        let env = ProcurementEnv::new(
            vec![seller("s1", r(1, 5), 4), seller("s2", r(1, 2), 4)],
            int(3),
            int(2),
        )
        .unwrap();
        let out = solve_procurement(&env).unwrap();
        assert_eq!(out.price, r(1, 2));
        assert_eq!(out.allocation.award(&"s1".into()), int(3));
    }

    #[test]
    fn scarce_capacity_settles_at_the_cap() {
        let env = ProcurementEnv::new(
            vec![seller("s1", r(1, 5), 1), seller("s2", r(1, 2), 1)],
            int(3),
            int(2),
        )
        .unwrap();
        let out = solve_procurement(&env).unwrap();
        assert_eq!(out.price, int(2));
        assert_eq!(out.allocation.award(&"s1".into()), int(1));
        assert_eq!(out.allocation.award(&"s2".into()), int(1));
        let (buyer, back) = mirror_to_buyer(&env).unwrap();
        assert_eq!(back.apply(&solve_equilibrium(&buyer)), out);
    }

    #[test]
    fn sellers_at_or_above_the_cap_are_excluded() {
        let env = ProcurementEnv::new(
            vec![seller("s1", r(1, 5), 5), seller("s2", r(6, 5), 2)],
            int(3),
            r(6, 5),
        )
        .unwrap();
        assert_eq!(env.participant_indices(), vec![0]);
        let (buyer, _) = mirror_to_buyer(&env).unwrap();
        assert_eq!(buyer.bidders().len(), 1);
        let out = solve_procurement(&env).unwrap();
        assert_eq!(out.allocation.award(&"s2".into()), int(0));
        assert_eq!(out.price, r(6, 5)); // lone seller held to the cap

        let hopeless = ProcurementEnv::new(vec![seller("s1", int(2), 5)], int(3), int(1)).unwrap();
        assert_eq!(
            solve_procurement(&hopeless).unwrap_err(),
            ProcurementError::CapBelowCost
        );
        assert!(matches!(
            mirror_to_buyer(&hopeless),
            Err(ProcurementError::CapBelowCost)
        ));
    }

    #[test]
    fn cost_side_participation_biconditional() {
        // ĥbᵢ stays at cost exactly when the rivals can cover the demand.
        let env = mirror_of_worked_example();
        let out = solve_procurement(&env).unwrap();
        let step1 = &out.trace[0];
        for (k, s) in env.sellers().iter().enumerate() {
            let rivals = env
                .sellers()
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != k)
                .fold(R::zero(), |acc, (_, t)| acc + t.capacity.clone());
            let at_cost = step1.hat_thresholds[&s.id] == s.cost;
            assert_eq!(at_cost, rivals >= int(3));
        }
    }

    #[test]
    fn validation_errors() {
        assert_eq!(
            ProcurementEnv::new(vec![seller("s1", r(0, 1), 2)], int(3), int(1)).unwrap_err(),
            ProcurementError::NonPositiveCost("s1".into())
        );
        assert_eq!(
            ProcurementEnv::new(vec![seller("s1", r(1, 2), 0)], int(3), int(1)).unwrap_err(),
            ProcurementError::NonPositiveCapacity("s1".into())
        );
        assert_eq!(
            ProcurementEnv::new(vec![seller("s1", r(1, 2), 2)], int(0), int(1)).unwrap_err(),
            ProcurementError::NonPositiveDemand
        );
        assert_eq!(
            ProcurementEnv::<R>::new(vec![], int(3), int(1)).unwrap_err(),
            ProcurementError::NoSellers
        );
    }
}
