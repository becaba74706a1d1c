use std::fmt::Write as _;

use attrib_core::AttributionResult;
use serde::Serialize;

use crate::CliError;

pub fn print_json<T: Serialize>(value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(attrib_core::Error::from)?;
    println!("{text}");
    Ok(())
}

fn cell(value: Option<f64>) -> String {
    value.map_or_else(|| "-".into(), |v| format!("{v:.3}"))
}

/// Human-readable rendering, fixed at three decimals.
pub fn attribution_table(result: &AttributionResult) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "method: {}", result.method);
    let _ = writeln!(out, "target: {}", result.target);
    if let Some(turn) = result.selected_turn {
        let _ = writeln!(out, "selected turn: {turn}");
    }
    if let Some(gains) = &result.turn_gains {
        let _ = writeln!(out, "turn gains (nats):");
        for g in gains {
            let _ = writeln!(out, "  turn {:>3}  {:>9.3}", g.turn_index, g.gain);
        }
    }
    let _ = writeln!(
        out,
        "{:>4}  {:>4}  {:>4}  {:>9}  {:>9}  {:>9}  text",
        "rank", "turn", "sent", "score", "drop", "hold"
    );
    for (rank, s) in result.ranked.iter().enumerate() {
        let _ = writeln!(
            out,
            "{:>4}  {:>4}  {:>4}  {:>9.3}  {:>9}  {:>9}  {}",
            rank + 1,
            s.sentence.turn_index,
            s.sentence.sentence_index,
            s.score,
            cell(s.drop),
            cell(s.hold),
            s.sentence.text
        );
    }
    let e = &result.evidence;
    let _ =
        writeln!(out, "evidence: turn {} chars {}..{}: {:?}", e.turn_index, e.span.start_char, e.span.end_char, e.text);
    out
}
