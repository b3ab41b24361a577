//! Command-line front end: solve instances, simulate the ascending clock,
//! verify and enumerate grid equilibria, and run pay-as-bid dynamics.
//!
//! Exit codes: 0 success, 1 malformed input, 2 validation failure,
//! 3 clock/solver equivalence violation, 4 enumeration budget exceeded.

mod instance;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use flatdemand::clock::{run_clock_auction, truthful_strategies};
use flatdemand::dynamics::{best_response_dynamics, DynamicsConfig, DynamicsVerdict};
use flatdemand::oracle::{
    distinct_outcomes, enumerate_equilibria_on_grid, verify_epsilon_nash, BidProfile, OracleError,
    Verification,
};
use flatdemand::procurement::solve_procurement;
use flatdemand::solver::solve;
use flatdemand::{format_rational, Rational};
use num_traits::Zero;
use serde_json::json;

use instance::{resolve_grid, Instance, InstanceFile};

#[derive(Debug)]
pub enum CliError {
    Parse(String),
    Validate(String),
    Equivalence(String),
    Budget(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse(_) => 1,
            CliError::Validate(_) => 2,
            CliError::Equivalence(_) => 3,
            CliError::Budget(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Parse(m)
            | CliError::Validate(m)
            | CliError::Equivalence(m)
            | CliError::Budget(m) => m,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "flatdemand",
    about = "Uniform-price auctions with quantity-constrained flat demands",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the equilibrium outcome of an instance.
    Solve {
        instance: PathBuf,
        /// Print the per-step thresholds and actions.
        #[arg(long)]
        trace: bool,
        /// Emit one structured JSON document instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Simulate the ascending clock auction under truthful strategies and
    /// check it against the solver.
    Clock {
        instance: PathBuf,
        /// Print the event log, one event per line.
        #[arg(long)]
        events: bool,
        #[arg(long)]
        json: bool,
    },
    /// Verify the solver's canonical bid profile against all grid deviations.
    Verify {
        instance: PathBuf,
        /// Grid step (overrides the instance's grid block).
        #[arg(long)]
        epsilon: Option<String>,
        /// Largest grid bid (defaults to the top value, rounded up).
        #[arg(long)]
        max_bid: Option<String>,
        #[arg(long)]
        json: bool,
    },
    /// Exhaustively enumerate pure grid equilibria and group them by outcome.
    Enumerate {
        instance: PathBuf,
        #[arg(long)]
        epsilon: Option<String>,
        #[arg(long)]
        max_bid: Option<String>,
        /// Upper bound on the number of profiles to test.
        #[arg(long, default_value_t = 10_000_000)]
        budget: u128,
        #[arg(long)]
        json: bool,
    },
    /// Run pay-as-bid best-response dynamics from the all-zero profile.
    Dynamics {
        instance: PathBuf,
        #[arg(long)]
        epsilon: Option<String>,
        /// Full update rounds before giving up.
        #[arg(long, default_value_t = 1000)]
        max_rounds: usize,
        #[arg(long)]
        json: bool,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are normal terminations.
            if e.use_stderr() {
                eprintln!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

fn load(path: &Path) -> Result<(Instance, Option<instance::GridSpec>), CliError> {
    InstanceFile::load(path)?.into_instance()
}

fn auction_only(parsed: Instance, command: &str) -> Result<flatdemand::AuctionEnv<Rational>, CliError> {
    match parsed {
        Instance::Auction(env) => Ok(env),
        Instance::Procurement(_) => Err(CliError::Validate(format!(
            "{command} runs on auction instances; solve handles procurement"
        ))),
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Solve {
            instance,
            trace,
            json,
        } => {
            let (parsed, _) = load(&instance)?;
            let (kind, outcome) = match parsed {
                Instance::Auction(env) => ("auction", solve(&env)),
                Instance::Procurement(env) => (
                    "procurement",
                    solve_procurement(&env).map_err(|e| CliError::Validate(e.to_string()))?,
                ),
            };
            if json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&output::outcome_json(kind, &outcome, trace))
                        .expect("serializable")
                );
            } else {
                output::print_outcome(&outcome, trace);
            }
            Ok(())
        }
        Command::Clock {
            instance,
            events: show_events,
            json,
        } => {
            let (parsed, _) = load(&instance)?;
            let env = auction_only(parsed, "clock")?;
            let (outcome, events) = run_clock_auction(&env, &truthful_strategies(&env))
                .map_err(|e| CliError::Validate(e.to_string()))?;
            let solved = solve(&env);
            if solved.price != outcome.price || solved.allocation != outcome.allocation {
                return Err(CliError::Equivalence(format!(
                    "clock outcome (price {}) disagrees with the solver (price {})",
                    format_rational(&outcome.price),
                    format_rational(&solved.price),
                )));
            }
            if json {
                let doc = json!({
                    "kind": "clock",
                    "events": events.iter().map(output::event_json).collect::<Vec<_>>(),
                    "outcome": output::outcome_json("auction", &outcome, false),
                    "matches_solver": true,
                });
                println!("{}", serde_json::to_string_pretty(&doc).expect("serializable"));
            } else {
                if show_events {
                    for event in &events {
                        println!("{}", output::event_line(event));
                    }
                }
                output::print_outcome(&outcome, false);
                println!("matches solver: yes");
            }
            Ok(())
        }
        Command::Verify {
            instance,
            epsilon,
            max_bid,
            json,
        } => {
            let (parsed, grid_spec) = load(&instance)?;
            let env = auction_only(parsed, "verify")?;
            let grid = resolve_grid(
                &env,
                grid_spec.as_ref(),
                epsilon.as_deref(),
                max_bid.as_deref(),
            )?;
            let outcome = solve(&env);
            let profile: BidProfile<Rational> = outcome
                .canonical_bids
                .iter()
                .map(|(id, bid)| (id.clone(), bid.clone()))
                .collect();
            match verify_epsilon_nash(&env, &profile, &grid) {
                Verification::Verified => {
                    if json {
                        println!(
                            "{}",
                            serde_json::to_string_pretty(&json!({"verified": true}))
                                .expect("serializable")
                        );
                    } else {
                        println!("verified: no grid deviation improves any bidder");
                    }
                }
                Verification::Deviation { bidder, bid, gain } => {
                    if json {
                        let doc = json!({
                            "verified": false,
                            "bidder": bidder.to_string(),
                            "bid": format_rational(&bid),
                            "gain": format_rational(&gain),
                        });
                        println!(
                            "{}",
                            serde_json::to_string_pretty(&doc).expect("serializable")
                        );
                    } else {
                        println!(
                            "deviation: {bidder} gains {} by bidding {}",
                            format_rational(&gain),
                            format_rational(&bid)
                        );
                    }
                }
            }
            Ok(())
        }
        Command::Enumerate {
            instance,
            epsilon,
            max_bid,
            budget,
            json,
        } => {
            let (parsed, grid_spec) = load(&instance)?;
            let env = auction_only(parsed, "enumerate")?;
            let grid = resolve_grid(
                &env,
                grid_spec.as_ref(),
                epsilon.as_deref(),
                max_bid.as_deref(),
            )?;
            let equilibria =
                enumerate_equilibria_on_grid(&env, &grid, budget).map_err(|e| match e {
                    OracleError::BudgetExceeded { .. } => CliError::Budget(e.to_string()),
                    other => CliError::Validate(other.to_string()),
                })?;
            let outcomes = distinct_outcomes(&equilibria);
            if json {
                let doc = json!({
                    "profiles": equilibria.len(),
                    "outcomes": outcomes.iter().map(|(price, allocation)| json!({
                        "price": format_rational(price),
                        "allocation": allocation.iter()
                            .map(|(id, u)| (id.to_string(), json!(format_rational(u))))
                            .collect::<serde_json::Map<String, _>>(),
                    })).collect::<Vec<_>>(),
                });
                println!(
                    "{}",
                    serde_json::to_string_pretty(&doc).expect("serializable")
                );
            } else {
                println!(
                    "{} equilibrium profiles, {} distinct outcomes",
                    equilibria.len(),
                    outcomes.len()
                );
                for (price, allocation) in &outcomes {
                    let awards: Vec<String> = allocation
                        .iter()
                        .map(|(id, u)| format!("{id}={}", format_rational(u)))
                        .collect();
                    println!("price {}: {}", format_rational(price), awards.join(" "));
                }
            }
            Ok(())
        }
        Command::Dynamics {
            instance,
            epsilon,
            max_rounds,
            json,
        } => {
            let (parsed, grid_spec) = load(&instance)?;
            let env = auction_only(parsed, "dynamics")?;
            let grid = resolve_grid(&env, grid_spec.as_ref(), epsilon.as_deref(), None)?;
            let initial: BidProfile<Rational> = env
                .bidders()
                .iter()
                .map(|b| (b.id.clone(), Rational::zero()))
                .collect();
            let config = DynamicsConfig {
                epsilon: grid.epsilon().clone(),
                max_rounds,
                initial,
            };
            let (trajectory, verdict) = best_response_dynamics(&env, &config)
                .map_err(|e| CliError::Validate(e.to_string()))?;
            let verdict_text = match &verdict {
                DynamicsVerdict::Cycle { start, period } => {
                    format!("cycle start {start} period {period}")
                }
                DynamicsVerdict::Converged => "converged".into(),
                DynamicsVerdict::Budget => "budget".into(),
            };
            if json {
                let doc = json!({
                    "verdict": verdict_text,
                    "trajectory": trajectory.iter().map(|p| {
                        p.iter()
                            .map(|(id, bid)| (id.to_string(), json!(format_rational(bid))))
                            .collect::<serde_json::Map<String, _>>()
                    }).collect::<Vec<_>>(),
                });
                println!(
                    "{}",
                    serde_json::to_string_pretty(&doc).expect("serializable")
                );
            } else {
                for profile in &trajectory {
                    let bids: Vec<String> = profile
                        .iter()
                        .map(|(id, bid)| format!("{id}={}", format_rational(bid)))
                        .collect();
                    println!("{}", bids.join(" "));
                }
                println!("verdict: {verdict_text}");
            }
            Ok(())
        }
    }
}
