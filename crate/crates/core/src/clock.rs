//! Event-driven simulator of the English auction with quantity constraints.
//!
//! A price clock rises from the reserve. Bidders decide, given the
//! provisional price and the active set, at which clock price they leave;
//! leaving is irreversible. When someone drops at price `b` the auctioneer
//! compares the remaining effective demand with the supply:
//!
//! * below supply — the auction ends at the provisional price, the dropper
//!   takes the residual and everyone still active is served in full;
//! * at least supply — the provisional price moves up to `b`, and the
//!   auction either ends there (demand exactly absorbed) or the clock
//!   resumes.
//!
//! Because admissible strategies are stationary in everything but the
//! provisional price and the active set, only threshold crossings matter and
//! the simulation jumps straight from dropout to dropout.

use std::collections::BTreeMap;

use crate::model::{Allocation, AuctionEnv, Bidder, BidderId, Outcome, SupplyCurve};
use crate::scalar::Scalar;
use crate::solver::bar_threshold_on_curve;

/// Simulation failures.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ClockError {
    #[error("no strategy supplied for bidder {0}")]
    MissingStrategy(BidderId),
    /// A strategy reported a drop price below the current clock price after
    /// previously committing to stay at least this long — the event-driven
    /// equivalent of trying to re-enter.
    #[error("strategy for bidder {bidder} moved its drop price back to {reported} at clock price {current}")]
    NonMonotoneStrategy {
        bidder: BidderId,
        reported: String,
        current: String,
    },
}

/// Which termination rule fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClockCase {
    /// Remaining demand fell short of supply; the dropper took the residual
    /// at the provisional price.
    Residual,
    /// Remaining demand was absorbed exactly at the dropout price.
    Exact,
    /// A single bidder absorbed the whole supply at the dropout price.
    Last,
}

/// One entry of the auction's public event log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClockEvent<R: Scalar> {
    Dropout {
        bidder: BidderId,
        price: R,
    },
    ProvisionalUpdate {
        price: R,
    },
    Finish {
        price: R,
        allocation: Allocation<R>,
        case: ClockCase,
    },
}

/// What a strategy sees when queried: the provisional price, the current
/// clock price, the rivals still active (quantity constraints are common
/// knowledge; values are not), and the supply curve.
pub struct ClockView<'a, R: Scalar> {
    pub provisional_price: &'a R,
    pub current_price: &'a R,
    pub rivals: &'a [(BidderId, R)],
    pub supply: &'a SupplyCurve<R>,
}

/// A bidder's (pure, stationary) strategy, expressed as the clock price at
/// which it drops out given the current state. Returning the current price
/// means "drop now"; anything below it is rejected as non-monotone. The
/// simulator re-queries after every processed dropout.
pub trait Strategy<R: Scalar> {
    fn drop_price(&self, view: &ClockView<'_, R>) -> R;
}

/// Strategies keyed by bidder id.
pub type StrategyMap<R> = BTreeMap<BidderId, Box<dyn Strategy<R>>>;

/// The price up to which remaining active is weakly dominant for a truthful
/// bidder facing constant supply `m`:
///
/// ```text
/// min(v, v + (Σ_{j∈N∖i} q̄ⱼ − m)·(v − p*) / q̄ᵢ)
/// ```
pub fn dominant_threshold<R: Scalar>(
    value: &R,
    provisional_price: &R,
    others_effective_demand: &R,
    m: &R,
    own_effective_demand: &R,
) -> R {
    let bar = value.clone()
        + (others_effective_demand.clone() - m.clone())
            * (value.clone() - provisional_price.clone())
            / own_effective_demand.clone();
    bar.min(value.clone())
}

/// The weakly dominant strategy: stay active exactly while the clock is at
/// or below the dominant threshold for the current provisional price and
/// active set.
#[derive(Debug, Clone)]
pub struct TruthfulStrategy<R: Scalar> {
    value: R,
    quantity: R,
}

impl<R: Scalar> Strategy<R> for TruthfulStrategy<R> {
    fn drop_price(&self, view: &ClockView<'_, R>) -> R {
        let m_p = view.supply.quantity_at(view.provisional_price);
        let rivals_effective = view.rivals.iter().fold(R::zero(), |acc, (_, q)| {
            acc + q.clone().min(m_p.clone())
        });
        let bar = bar_threshold_on_curve(
            view.supply,
            view.provisional_price,
            &self.value,
            &self.quantity,
            &rivals_effective,
        );
        let threshold = bar.min(self.value.clone());
        // Wanting out below the current price means dropping immediately.
        threshold.max(view.current_price.clone())
    }
}

/// Truthful strategy for one bidder.
pub fn truthful_strategy<R: Scalar>(bidder: &Bidder<R>) -> TruthfulStrategy<R> {
    TruthfulStrategy {
        value: bidder.value.clone(),
        quantity: bidder.quantity.clone(),
    }
}

/// Truthful strategies for every bidder in the environment.
pub fn truthful_strategies<R: Scalar>(env: &AuctionEnv<R>) -> StrategyMap<R> {
    env.bidders()
        .iter()
        .map(|b| {
            (
                b.id.clone(),
                Box::new(truthful_strategy(b)) as Box<dyn Strategy<R>>,
            )
        })
        .collect()
}

/// A strategy that drops at a fixed clock price regardless of state.
#[derive(Debug, Clone)]
pub struct FixedDropStrategy<R: Scalar>(pub R);

impl<R: Scalar> Strategy<R> for FixedDropStrategy<R> {
    fn drop_price(&self, view: &ClockView<'_, R>) -> R {
        self.0.clone().max(view.current_price.clone())
    }
}

/// Run the auction under the given strategies. Bidders below the reserve
/// never enter. Returns the final outcome together with the event log.
///
/// Simultaneous dropouts are processed one at a time, deterministically:
/// droppers conceding below their value (residual candidates) go first,
/// largest residual claim leading, and otherwise the bidder latest in the
/// canonical order goes first. After each processed dropout every remaining
/// strategy is re-queried against the updated state.
pub fn run_clock_auction<R: Scalar>(
    env: &AuctionEnv<R>,
    strategies: &StrategyMap<R>,
) -> Result<(Outcome<R>, Vec<ClockEvent<R>>), ClockError> {
    let bidders = env.bidders();
    let supply = env.supply();
    for idx in env.participant_indices() {
        if !strategies.contains_key(&bidders[idx].id) {
            return Err(ClockError::MissingStrategy(bidders[idx].id.clone()));
        }
    }

    let mut allocation = Allocation::new();
    for b in bidders {
        allocation.set(b.id.clone(), R::zero());
    }
    let mut events: Vec<ClockEvent<R>> = Vec::new();
    let mut drop_prices: BTreeMap<BidderId, R> = BTreeMap::new();

    let mut active = env.participant_indices();
    let mut provisional = env.reserve().clone();
    let mut clock = env.reserve().clone();

    let (final_price, case) = loop {
        if active.is_empty() {
            // Only reachable when nobody clears the reserve.
            break (provisional.clone(), ClockCase::Exact);
        }

        // Ask every active bidder when it drops, given the current state.
        let mut reported: Vec<R> = Vec::with_capacity(active.len());
        for (k, &i) in active.iter().enumerate() {
            let rivals: Vec<(BidderId, R)> = active
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != k)
                .map(|(_, &r)| (bidders[r].id.clone(), bidders[r].quantity.clone()))
                .collect();
            let view = ClockView {
                provisional_price: &provisional,
                current_price: &clock,
                rivals: &rivals,
                supply,
            };
            let price = strategies[&bidders[i].id].drop_price(&view);
            if price < clock {
                return Err(ClockError::NonMonotoneStrategy {
                    bidder: bidders[i].id.clone(),
                    reported: price.to_string(),
                    current: clock.to_string(),
                });
            }
            reported.push(price);
        }

        // Advance the clock to the earliest dropout.
        clock = reported.iter().min().expect("active set nonempty").clone();
        let pending: Vec<usize> = (0..active.len())
            .filter(|&k| reported[k] == clock)
            .collect();

        let m_p = supply.quantity_at(&provisional);
        // Residual candidates drop while the clock is still below their
        // value; process the one with the largest residual claim first. With
        // none of those, the pending bidder latest in the canonical order
        // goes first.
        let k = pending
            .iter()
            .copied()
            .filter(|&k| bidders[active[k]].value > clock)
            .map(|k| {
                let rival_demand = active
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != k)
                    .fold(R::zero(), |acc, (_, &i)| acc + bidders[i].quantity.clone());
                (k, m_p.clone() - rival_demand)
            })
            .max_by(|(ka, ca), (kb, cb)| ca.cmp(cb).then(active[*ka].cmp(&active[*kb])))
            .map(|(k, _)| k)
            .unwrap_or_else(|| {
                pending
                    .iter()
                    .copied()
                    .max_by_key(|&k| active[k])
                    .expect("pending nonempty")
            });

        let dropper = active[k];
        active.remove(k);
        drop_prices.insert(bidders[dropper].id.clone(), clock.clone());
        events.push(ClockEvent::Dropout {
            bidder: bidders[dropper].id.clone(),
            price: clock.clone(),
        });

        let remaining_effective = active.iter().fold(R::zero(), |acc, &i| {
            acc + bidders[i].effective_demand(&m_p)
        });
        if remaining_effective < m_p {
            // Case [1]: the auction ends at the provisional price.
            let remaining_demand = active
                .iter()
                .fold(R::zero(), |acc, &i| acc + bidders[i].quantity.clone());
            for &i in &active {
                allocation.set(bidders[i].id.clone(), bidders[i].quantity.clone());
            }
            let residual = (m_p.clone() - remaining_demand)
                .min(bidders[dropper].effective_demand(&m_p));
            allocation.set(bidders[dropper].id.clone(), residual);
            break (provisional.clone(), ClockCase::Residual);
        }

        // Case [2]: the provisional price moves up to the dropout price.
        provisional = clock.clone();
        events.push(ClockEvent::ProvisionalUpdate {
            price: provisional.clone(),
        });
        let m_b = supply.quantity_at(&clock);
        let effective_at_b: Vec<R> = active
            .iter()
            .map(|&i| bidders[i].effective_demand(&m_b))
            .collect();
        let total_effective = effective_at_b
            .iter()
            .fold(R::zero(), |acc, q| acc + q.clone());
        if total_effective <= m_b {
            // Case [2-1]: demand absorbed; the dropper takes any leftover.
            for (&i, q) in active.iter().zip(&effective_at_b) {
                allocation.set(bidders[i].id.clone(), q.clone());
            }
            let leftover =
                (m_b.clone() - total_effective).min(bidders[dropper].effective_demand(&m_b));
            allocation.set(bidders[dropper].id.clone(), leftover);
            let case = if active.len() == 1 && bidders[active[0]].quantity >= m_b {
                ClockCase::Last
            } else {
                ClockCase::Exact
            };
            break (provisional.clone(), case);
        }
        // Case [2-2]: the clock keeps rising.
    };

    events.push(ClockEvent::Finish {
        price: final_price.clone(),
        allocation: allocation.clone(),
        case,
    });

    // Canonical bids recovered from the log: droppers at their dropout
    // price, survivors at the final price.
    let mut canonical = drop_prices.clone();
    for &i in &active {
        canonical.insert(bidders[i].id.clone(), final_price.clone());
    }
    let dropout_order = events
        .iter()
        .filter_map(|e| match e {
            ClockEvent::Dropout { bidder, .. } => Some(bidder.clone()),
            _ => None,
        })
        .collect();

    Ok((
        Outcome {
            price: final_price,
            allocation,
            canonical_bids: canonical,
            dropout_order,
            trace: Vec::new(),
        },
        events,
    ))
}

/// Replay failures: the log is inconsistent with the protocol.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReplayError {
    #[error("event after the auction finished")]
    AfterFinish,
    #[error("event price moved backwards")]
    PriceRegression,
    #[error("dropout of a bidder that is not active")]
    NotActive,
    #[error("finish price disagrees with the provisional price")]
    PriceMismatch,
    #[error("log ended without a finish event")]
    MissingFinish,
}

/// Protocol state rebuilt from the event log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClockState<R: Scalar> {
    pub provisional_price: R,
    pub current_price: R,
    pub active: Vec<BidderId>,
    pub finished: bool,
}

impl<R: Scalar> ClockState<R> {
    pub fn new(env: &AuctionEnv<R>) -> Self {
        ClockState {
            provisional_price: env.reserve().clone(),
            current_price: env.reserve().clone(),
            active: env
                .participant_indices()
                .into_iter()
                .map(|i| env.bidders()[i].id.clone())
                .collect(),
            finished: false,
        }
    }

    /// Apply one event, checking the protocol invariants (prices never move
    /// backwards, p* ≤ clock, only active bidders drop, finish is terminal
    /// and priced at the provisional price).
    pub fn apply(&mut self, event: &ClockEvent<R>) -> Result<(), ReplayError> {
        if self.finished {
            return Err(ReplayError::AfterFinish);
        }
        match event {
            ClockEvent::Dropout { bidder, price } => {
                if *price < self.current_price {
                    return Err(ReplayError::PriceRegression);
                }
                let pos = self
                    .active
                    .iter()
                    .position(|id| id == bidder)
                    .ok_or(ReplayError::NotActive)?;
                self.active.remove(pos);
                self.current_price = price.clone();
            }
            ClockEvent::ProvisionalUpdate { price } => {
                if *price < self.provisional_price || *price > self.current_price {
                    return Err(ReplayError::PriceRegression);
                }
                self.provisional_price = price.clone();
            }
            ClockEvent::Finish { price, .. } => {
                if *price != self.provisional_price {
                    return Err(ReplayError::PriceMismatch);
                }
                self.finished = true;
            }
        }
        Ok(())
    }
}

/// Reapply an event log to a fresh state, returning the finish payload.
pub fn replay_events<R: Scalar>(
    env: &AuctionEnv<R>,
    events: &[ClockEvent<R>],
) -> Result<(R, Allocation<R>), ReplayError> {
    let mut state = ClockState::new(env);
    let mut finish = None;
    for event in events {
        state.apply(event)?;
        if let ClockEvent::Finish {
            price, allocation, ..
        } = event
        {
            finish = Some((price.clone(), allocation.clone()));
        }
    }
    finish.ok_or(ReplayError::MissingFinish)
}

#[cfg(test)]
mod tests {
    use super::*;
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

    #[test]
    fn dominant_threshold_matches_worked_values() {
        assert_eq!(
            dominant_threshold(&r(1, 1), &r(1, 10), &int(2), &int(3), &int(2)),
            r(11, 20)
        );
        assert_eq!(
            dominant_threshold(&r(1, 2), &r(1, 10), &int(2), &int(3), &int(2)),
            r(3, 10)
        );
        // Rivals exactly cover the supply: the indifference term vanishes.
        assert_eq!(
            dominant_threshold(&r(1, 2), &r(1, 10), &int(3), &int(3), &int(2)),
            r(1, 2)
        );
    }

    #[test]
    fn truthful_event_log_for_residual_example() {
        let e = example2();
        let (out, events) = run_clock_auction(&e, &truthful_strategies(&e)).unwrap();
        assert_eq!(
            events,
            vec![
                ClockEvent::Dropout {
                    bidder: "b3".into(),
                    price: r(1, 10)
                },
                ClockEvent::ProvisionalUpdate { price: r(1, 10) },
                ClockEvent::Dropout {
                    bidder: "b2".into(),
                    price: r(3, 10)
                },
                ClockEvent::Finish {
                    price: r(1, 10),
                    allocation: [
                        ("b1".into(), int(2)),
                        ("b2".into(), int(1)),
                        ("b3".into(), int(0)),
                    ]
                    .into_iter()
                    .collect(),
                    case: ClockCase::Residual,
                },
            ]
        );
        assert_eq!(out.price, r(1, 10));
        let solved = solve_equilibrium(&e);
        assert_eq!(out.price, solved.price);
        assert_eq!(out.allocation, solved.allocation);
    }

    #[test]
    fn truthful_event_log_for_dropout_chain() {
        let e = env(
            3,
            r(0, 1),
            vec![
                bidder("b1", r(7, 10), 3),
                bidder("b2", r(1, 2), 2),
                bidder("b3", r(3, 10), 3),
            ],
        );
        let (out, events) = run_clock_auction(&e, &truthful_strategies(&e)).unwrap();
        assert_eq!(out.price, r(1, 2));
        assert_eq!(out.allocation.award(&"b1".into()), int(3));
        assert_eq!(out.allocation.total(), int(3));
        assert!(matches!(
            events.last(),
            Some(ClockEvent::Finish {
                case: ClockCase::Last,
                ..
            })
        ));
        // Drop 3 at 3/10, update, drop 2 at 1/2, update, finish.
        assert_eq!(events.len(), 5);
        assert!(matches!(
            &events[2],
            ClockEvent::Dropout { bidder, price } if bidder == &BidderId::from("b2") && *price == r(1, 2)
        ));
    }

    #[test]
    fn truthful_matches_dominant_threshold_for_constant_supply() {
        let e = example2();
        let strat = truthful_strategy(&e.bidders()[1]); // value 1/2, quantity 2
        let rivals = vec![("b1".into(), int(2))];
        let view = ClockView {
            provisional_price: &r(1, 10),
            current_price: &r(1, 10),
            rivals: &rivals,
            supply: e.supply(),
        };
        assert_eq!(
            strat.drop_price(&view),
            dominant_threshold(&r(1, 2), &r(1, 10), &int(2), &int(3), &int(2))
        );
        // Rivals short of the supply: the threshold sits strictly below the
        // value even at a zero provisional price.
        let view = ClockView {
            provisional_price: &r(0, 1),
            current_price: &r(0, 1),
            rivals: &rivals,
            supply: e.supply(),
        };
        assert_eq!(strat.drop_price(&view), r(1, 4));
        assert!(strat.drop_price(&view) < r(1, 2));
    }

    #[test]
    fn everyone_dropping_at_zero_is_processed_deterministically() {
        let e = example2();
        let strategies: StrategyMap<R> = e
            .bidders()
            .iter()
            .map(|b| {
                (
                    b.id.clone(),
                    Box::new(FixedDropStrategy(r(0, 1))) as Box<dyn Strategy<R>>,
                )
            })
            .collect();
        let (out, events) = run_clock_auction(&e, &strategies).unwrap();
        assert_eq!(out.price, r(0, 1));
        // All three concede below value; the residual rule processes the
        // tied claims (b1, b2) latest-first, so b2 drops and demand is
        // absorbed exactly by b1 and b3.
        assert!(matches!(
            &events[0],
            ClockEvent::Dropout { bidder, .. } if bidder == &BidderId::from("b2")
        ));
        assert_eq!(out.allocation.award(&"b1".into()), int(2));
        assert_eq!(out.allocation.award(&"b2".into()), int(0));
        assert_eq!(out.allocation.award(&"b3".into()), int(1));
    }

    #[test]
    fn single_bidder_finishes_at_reserve() {
        let e = env(3, r(1, 5), vec![bidder("b1", r(1, 1), 5)]);
        let (out, events) = run_clock_auction(&e, &truthful_strategies(&e)).unwrap();
        assert_eq!(out.price, r(1, 5));
        assert_eq!(out.allocation.award(&"b1".into()), int(3));
        assert!(matches!(
            events.last(),
            Some(ClockEvent::Finish {
                case: ClockCase::Residual,
                ..
            })
        ));
    }

    #[test]
    fn trivial_supply_serves_everyone_without_special_casing() {
        let e = env(
            9,
            r(0, 1),
            vec![bidder("b1", r(1, 1), 2), bidder("b2", r(1, 2), 2)],
        );
        let (out, _) = run_clock_auction(&e, &truthful_strategies(&e)).unwrap();
        assert_eq!(out.price, r(0, 1));
        assert_eq!(out.allocation.award(&"b1".into()), int(2));
        assert_eq!(out.allocation.award(&"b2".into()), int(2));
    }

    #[test]
    fn missing_strategy_is_rejected() {
        let e = example2();
        let mut strategies = truthful_strategies(&e);
        strategies.remove(&"b2".into());
        assert_eq!(
            run_clock_auction(&e, &strategies).unwrap_err(),
            ClockError::MissingStrategy("b2".into())
        );
    }

    /// Reports 1/2 while two rivals remain, then claims it wanted out at 1/5.
    struct Backslider;

    impl Strategy<R> for Backslider {
        fn drop_price(&self, view: &ClockView<'_, R>) -> R {
            if view.rivals.len() >= 2 {
                r(1, 2)
            } else {
                r(1, 5)
            }
        }
    }

    #[test]
    fn price_regression_is_rejected_as_non_monotone() {
        let e = env(
            3,
            r(0, 1),
            vec![
                bidder("b1", r(1, 1), 2),
                bidder("b2", r(1, 1), 2),
                bidder("b3", r(1, 1), 2),
            ],
        );
        let mut strategies: StrategyMap<R> = truthful_strategies(&e);
        strategies.insert("b1".into(), Box::new(Backslider));
        strategies.insert("b2".into(), Box::new(FixedDropStrategy(r(1, 2))));
        strategies.insert("b3".into(), Box::new(FixedDropStrategy(r(9, 10))));
        let err = run_clock_auction(&e, &strategies).unwrap_err();
        assert!(matches!(
            err,
            ClockError::NonMonotoneStrategy { bidder, .. } if bidder == BidderId::from("b1")
        ));
    }

    #[test]
    fn replay_reproduces_the_outcome() {
        let e = example2();
        let (out, events) = run_clock_auction(&e, &truthful_strategies(&e)).unwrap();
        let (price, allocation) = replay_events(&e, &events).unwrap();
        assert_eq!(price, out.price);
        assert_eq!(allocation, out.allocation);
    }

    #[test]
    fn replay_rejects_tampered_logs() {
        let e = example2();
        let (_, mut events) = run_clock_auction(&e, &truthful_strategies(&e)).unwrap();
        // Same bidder dropping twice.
        events.insert(
            1,
            ClockEvent::Dropout {
                bidder: "b3".into(),
                price: r(1, 10),
            },
        );
        assert_eq!(replay_events(&e, &events), Err(ReplayError::NotActive));
        let (_, mut events) = run_clock_auction(&e, &truthful_strategies(&e)).unwrap();
        events.truncate(events.len() - 1);
        assert_eq!(replay_events(&e, &events), Err(ReplayError::MissingFinish));
    }
}
