//! Text and JSON rendering. Every number is emitted as an exact rational
//! string; JSON maps are ordered so output is byte-stable.

use flatdemand::clock::{ClockCase, ClockEvent};
use flatdemand::model::{Outcome, StepAction, StepRecord};
use flatdemand::{format_rational, Rational};
use serde_json::{json, Map, Value};

fn rational(value: &Rational) -> Value {
    Value::String(format_rational(value))
}

fn id_map<'a>(entries: impl Iterator<Item = (&'a flatdemand::BidderId, &'a Rational)>) -> Value {
    let mut map = Map::new();
    for (id, value) in entries {
        map.insert(id.to_string(), rational(value));
    }
    Value::Object(map)
}

fn action_json(action: &StepAction) -> Value {
    match action {
        StepAction::Drop(id) => json!({"kind": "drop", "bidder": id.to_string()}),
        StepAction::StopResidual(id) => {
            json!({"kind": "stop_residual", "bidder": id.to_string()})
        }
        StepAction::StopExact => json!({"kind": "stop_exact"}),
        StepAction::StopLast => json!({"kind": "stop_last"}),
    }
}

fn step_json(record: &StepRecord<Rational>) -> Value {
    json!({
        "step": record.step,
        "floor": format_rational(&record.floor),
        "remaining": record.remaining.iter().map(|id| id.to_string()).collect::<Vec<_>>(),
        "bar": id_map(record.bar_thresholds.iter()),
        "hat": id_map(record.hat_thresholds.iter()),
        "action": action_json(&record.action),
    })
}

pub fn outcome_json(kind: &str, outcome: &Outcome<Rational>, with_trace: bool) -> Value {
    let mut doc = Map::new();
    doc.insert("kind".into(), Value::String(kind.into()));
    doc.insert("price".into(), rational(&outcome.price));
    doc.insert("allocation".into(), id_map(outcome.allocation.iter()));
    doc.insert("bids".into(), id_map(outcome.canonical_bids.iter()));
    doc.insert(
        "dropouts".into(),
        Value::Array(
            outcome
                .dropout_order
                .iter()
                .map(|id| Value::String(id.to_string()))
                .collect(),
        ),
    );
    doc.insert("revenue".into(), rational(&outcome.revenue()));
    if with_trace {
        doc.insert(
            "trace".into(),
            Value::Array(outcome.trace.iter().map(step_json).collect()),
        );
    }
    Value::Object(doc)
}

pub fn print_outcome(outcome: &Outcome<Rational>, with_trace: bool) {
    println!("price: {}", format_rational(&outcome.price));
    println!("allocation:");
    for (id, units) in outcome.allocation.iter() {
        println!("  {id}: {}", format_rational(units));
    }
    println!("bids:");
    for (id, bid) in &outcome.canonical_bids {
        println!("  {id}: {}", format_rational(bid));
    }
    if outcome.dropout_order.is_empty() {
        println!("dropouts: none");
    } else {
        let order: Vec<String> = outcome.dropout_order.iter().map(|d| d.to_string()).collect();
        println!("dropouts: {}", order.join(", "));
    }
    println!("revenue: {}", format_rational(&outcome.revenue()));
    if with_trace {
        for record in &outcome.trace {
            let action = match &record.action {
                StepAction::Drop(id) => format!("drop {id}"),
                StepAction::StopResidual(id) => format!("stop residual {id}"),
                StepAction::StopExact => "stop exact".into(),
                StepAction::StopLast => "stop last".into(),
            };
            println!(
                "step {} (floor {}): {}",
                record.step,
                format_rational(&record.floor),
                action
            );
            for id in &record.remaining {
                if let (Some(bar), Some(hat)) = (
                    record.bar_thresholds.get(id),
                    record.hat_thresholds.get(id),
                ) {
                    println!(
                        "  {id}: bar {} hat {}",
                        format_rational(bar),
                        format_rational(hat)
                    );
                }
            }
        }
    }
}

pub fn case_name(case: ClockCase) -> &'static str {
    match case {
        ClockCase::Residual => "residual",
        ClockCase::Exact => "exact",
        ClockCase::Last => "last",
    }
}

/// One line per event: `drop <bidder> <price>`, `update <price>`,
/// `finish <case> <price>`.
pub fn event_line(event: &ClockEvent<Rational>) -> String {
    match event {
        ClockEvent::Dropout { bidder, price } => {
            format!("drop {bidder} {}", format_rational(price))
        }
        ClockEvent::ProvisionalUpdate { price } => format!("update {}", format_rational(price)),
        ClockEvent::Finish { price, case, .. } => {
            format!("finish {} {}", case_name(*case), format_rational(price))
        }
    }
}

pub fn event_json(event: &ClockEvent<Rational>) -> Value {
    match event {
        ClockEvent::Dropout { bidder, price } => json!({
            "event": "drop",
            "bidder": bidder.to_string(),
            "price": format_rational(price),
        }),
        ClockEvent::ProvisionalUpdate { price } => json!({
            "event": "update",
            "price": format_rational(price),
        }),
        ClockEvent::Finish {
            price,
            allocation,
            case,
        } => json!({
            "event": "finish",
            "case": case_name(*case),
            "price": format_rational(price),
            "allocation": id_map(allocation.iter()),
        }),
    }
}
