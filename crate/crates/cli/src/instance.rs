//! Instance-file schema and conversion into validated environments.
//!
//! Numbers are strings everywhere — decimal literals or `"p/q"` fractions —
//! and convert exactly; nothing is ever rounded.

use flatdemand::oracle::{GridConfig, GridError};
use flatdemand::procurement::{ProcurementEnv, Seller};
use flatdemand::{parse_rational, AuctionEnv, Bidder, Rational, SupplyCurve};
use num_traits::Zero;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub kind: String,
    // Auction fields.
    pub supply: Option<SupplySpec>,
    pub reserve: Option<String>,
    pub bidders: Option<Vec<BidderSpec>>,
    // Procurement fields.
    pub demand: Option<String>,
    pub price_cap: Option<String>,
    pub sellers: Option<Vec<SellerSpec>>,
    // Optional grid defaults for verify/enumerate/dynamics.
    pub grid: Option<GridSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum SupplySpec {
    /// Fixed supply: `"supply": "3"`.
    Constant(String),
    /// Step curve: `"supply": [["0", "2"], ["1/2", "3"]]` as
    /// `[price, quantity]` breakpoints.
    Steps(Vec<(String, String)>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BidderSpec {
    pub id: Option<String>,
    pub value: String,
    pub quantity: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SellerSpec {
    pub id: Option<String>,
    pub cost: String,
    pub capacity: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub epsilon: String,
    pub max_bid: Option<String>,
}

/// A parsed instance of either kind.
pub enum Instance {
    Auction(AuctionEnv<Rational>),
    Procurement(ProcurementEnv<Rational>),
}

fn number(field: &str, s: &str) -> Result<Rational, CliError> {
    parse_rational(s).map_err(|e| CliError::Parse(format!("{field}: {e}")))
}

impl InstanceFile {
    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Parse(format!("malformed instance: {e}")))
    }

    pub fn into_instance(self) -> Result<(Instance, Option<GridSpec>), CliError> {
        let grid = self.grid;
        match self.kind.as_str() {
            "auction" => {
                let supply = match self.supply {
                    Some(SupplySpec::Constant(m)) => SupplyCurve::Constant(number("supply", &m)?),
                    Some(SupplySpec::Steps(points)) => {
                        let mut converted = Vec::with_capacity(points.len());
                        for (price, quantity) in &points {
                            converted.push((
                                number("supply price", price)?,
                                number("supply quantity", quantity)?,
                            ));
                        }
                        SupplyCurve::Step(converted)
                    }
                    None => return Err(CliError::Parse("auction instance needs a supply".into())),
                };
                let reserve = match self.reserve {
                    Some(r) => number("reserve", &r)?,
                    None => Rational::zero(),
                };
                let specs = self
                    .bidders
                    .ok_or_else(|| CliError::Parse("auction instance needs bidders".into()))?;
                let bidders = specs
                    .iter()
                    .enumerate()
                    .map(|(i, b)| {
                        Ok(Bidder::new(
                            b.id.clone().unwrap_or_else(|| format!("b{}", i + 1)),
                            number("value", &b.value)?,
                            number("quantity", &b.quantity)?,
                        ))
                    })
                    .collect::<Result<Vec<_>, CliError>>()?;
                let env = AuctionEnv::new(supply, reserve, bidders)
                    .map_err(|e| CliError::Validate(e.to_string()))?;
                Ok((Instance::Auction(env), grid))
            }
            "procurement" => {
                let demand = number(
                    "demand",
                    &self
                        .demand
                        .ok_or_else(|| CliError::Parse("procurement instance needs a demand".into()))?,
                )?;
                let cap = number(
                    "price_cap",
                    &self.price_cap.ok_or_else(|| {
                        CliError::Parse("procurement instance needs a price_cap".into())
                    })?,
                )?;
                let specs = self
                    .sellers
                    .ok_or_else(|| CliError::Parse("procurement instance needs sellers".into()))?;
                let sellers = specs
                    .iter()
                    .enumerate()
                    .map(|(i, s)| {
                        Ok(Seller::new(
                            s.id.clone().unwrap_or_else(|| format!("s{}", i + 1)),
                            number("cost", &s.cost)?,
                            number("capacity", &s.capacity)?,
                        ))
                    })
                    .collect::<Result<Vec<_>, CliError>>()?;
                let env = ProcurementEnv::new(sellers, demand, cap)
                    .map_err(|e| CliError::Validate(e.to_string()))?;
                Ok((Instance::Procurement(env), grid))
            }
            other => Err(CliError::Parse(format!(
                "unknown instance kind {other:?}; expected \"auction\" or \"procurement\""
            ))),
        }
    }
}

/// Resolve the bid grid from flags and the instance's grid block. Flags win;
/// the max bid defaults to the top value rounded up to the grid.
pub fn resolve_grid(
    env: &AuctionEnv<Rational>,
    spec: Option<&GridSpec>,
    epsilon_flag: Option<&str>,
    max_bid_flag: Option<&str>,
) -> Result<GridConfig<Rational>, CliError> {
    let epsilon = match (epsilon_flag, spec) {
        (Some(e), _) => number("--epsilon", e)?,
        (None, Some(g)) => number("grid.epsilon", &g.epsilon)?,
        (None, None) => {
            return Err(CliError::Parse(
                "no grid step: pass --epsilon or add a grid block to the instance".into(),
            ))
        }
    };
    let max_bid = match (max_bid_flag, spec.and_then(|g| g.max_bid.as_ref())) {
        (Some(m), _) => number("--max-bid", m)?,
        (None, Some(m)) => number("grid.max_bid", m)?,
        (None, None) => {
            // Smallest grid multiple covering every value.
            let mut max_bid = Rational::zero();
            while max_bid < *env.max_value() {
                max_bid += epsilon.clone();
            }
            max_bid
        }
    };
    GridConfig::new(epsilon, max_bid).map_err(|e: GridError| CliError::Validate(e.to_string()))
}
