//! Seeded random-instance generators shared by the integration suites.

use flatdemand::procurement::{ProcurementEnv, Seller};
use flatdemand::scalar::int;
use flatdemand::{AuctionEnv, Bidder, Rational, SupplyCurve};
use rand::Rng;

pub fn rat(n: i64, d: i64) -> Rational {
    flatdemand::scalar::ratio(n, d)
}

/// Reserve policy for generated environments.
#[derive(Clone, Copy)]
pub enum ReservePolicy {
    Zero,
    /// Half zero, half a random rational strictly below the lowest value.
    MixedBelowValues,
}

pub struct EnvParams {
    pub max_bidders: usize,
    pub max_supply: i64,
    pub max_quantity: i64,
    /// Values are `num/den` with `num ∈ [1, max_value_numerator]`,
    /// `den ∈ [1, 20]`.
    pub max_value_numerator: i64,
    pub reserve: ReservePolicy,
}

impl Default for EnvParams {
    fn default() -> Self {
        EnvParams {
            max_bidders: 6,
            max_supply: 10,
            max_quantity: 10,
            max_value_numerator: 40,
            reserve: ReservePolicy::MixedBelowValues,
        }
    }
}

pub fn random_env(rng: &mut impl Rng, params: &EnvParams) -> AuctionEnv<Rational> {
    let n = rng.gen_range(1..=params.max_bidders);
    let m = rng.gen_range(1..=params.max_supply);
    let bidders: Vec<Bidder<Rational>> = (0..n)
        .map(|i| {
            let den = rng.gen_range(1..=20);
            let num = rng.gen_range(1..=params.max_value_numerator);
            Bidder::new(
                format!("b{}", i + 1),
                rat(num, den),
                int(rng.gen_range(1..=params.max_quantity)),
            )
        })
        .collect();
    let min_value = bidders.iter().map(|b| b.value.clone()).min().unwrap();
    let reserve = match params.reserve {
        ReservePolicy::Zero => rat(0, 1),
        ReservePolicy::MixedBelowValues => {
            if rng.gen_bool(0.5) {
                rat(0, 1)
            } else {
                // Strictly below every value so nobody is excluded.
                min_value * rat(rng.gen_range(0..8), 8)
            }
        }
    };
    AuctionEnv::new(SupplyCurve::Constant(int(m)), reserve, bidders).expect("generated env valid")
}

#[allow(dead_code)] // used by the acceptance suite
pub fn random_procurement_env(rng: &mut impl Rng) -> ProcurementEnv<Rational> {
    let n = rng.gen_range(1..=6);
    let d = rng.gen_range(1..=10);
    let sellers: Vec<Seller<Rational>> = (0..n)
        .map(|i| {
            let den = rng.gen_range(1..=20);
            let num = rng.gen_range(1..=40);
            Seller::new(
                format!("s{}", i + 1),
                rat(num, den),
                int(rng.gen_range(1..=10)),
            )
        })
        .collect();
    let max_cost = sellers.iter().map(|s| s.cost.clone()).max().unwrap();
    // Cap strictly above at least one cost; sometimes below the dearest so
    // exclusion paths get exercised.
    let min_cost = sellers.iter().map(|s| s.cost.clone()).min().unwrap();
    let cap = if rng.gen_bool(0.8) {
        max_cost + rat(rng.gen_range(1..=20), rng.gen_range(1..=4))
    } else {
        min_cost + rat(rng.gen_range(1..=10), 4)
    };
    ProcurementEnv::new(sellers, int(d), cap).expect("generated env valid")
}
