use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::BenchmarkCase;
use crate::attribution::{attribute, Method};
use crate::error::{Error, Result};
use crate::scoring::Scorer;

/// Conventions printed above every metrics table.
pub const TABLE_NOTE: &str = "hit@k: any gold sentence in the top k; MRR: reciprocal rank of the best-ranked gold; \
ranks are over each method's own candidates (a gold sentence outside the hierarchical method's selected turn is a miss)";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub method: String,
    pub n_cases: usize,
    pub hit1: f64,
    pub hit3: f64,
    pub hit5: f64,
    pub mrr: f64,
}

/// Aggregates per-case best-gold ranks (1-based; `None` when no gold
/// sentence was ranked at all).
pub fn report_from_ranks(method: impl Into<String>, ranks: &[Option<usize>]) -> MetricsReport {
    let n = ranks.len();
    let hits = |k: usize| ranks.iter().filter(|r| r.is_some_and(|r| r <= k)).count();
    let frac = |count: usize| if n == 0 { 0.0 } else { count as f64 / n as f64 };
    let reciprocal: f64 = ranks.iter().flatten().map(|&r| 1.0 / r as f64).sum();
    MetricsReport {
        method: method.into(),
        n_cases: n,
        hit1: frac(hits(1)),
        hit3: frac(hits(3)),
        hit5: frac(hits(5)),
        mrr: if n == 0 { 0.0 } else { reciprocal / n as f64 },
    }
}

/// Best gold rank for every case under `method`, in case order.
pub fn case_ranks<S: Scorer + ?Sized>(
    cases: &[BenchmarkCase],
    method: Method,
    scorer: &S,
) -> Result<Vec<Option<usize>>> {
    for case in cases {
        case.validate().map_err(|message| Error::corpus(format!("case {}", case.id), message))?;
    }
    let rank_case = |case: &BenchmarkCase| -> Result<Option<usize>> {
        let result = attribute(&case.dialogue, &case.target, scorer, method)?;
        Ok(case.gold.iter().filter_map(|g| result.rank_of(g.turn, g.sentence)).min())
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        cases.par_iter().map(rank_case).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        cases.iter().map(rank_case).collect()
    }
}

/// Hit@1/3/5 and MRR of `method` over a non-empty corpus.
pub fn evaluate<S: Scorer + ?Sized>(cases: &[BenchmarkCase], method: Method, scorer: &S) -> Result<MetricsReport> {
    if cases.is_empty() {
        return Err(Error::InvalidArgument("cannot evaluate an empty corpus".into()));
    }
    Ok(report_from_ranks(method.label(), &case_ranks(cases, method, scorer)?))
}

/// Aligned text table, one row per report, three decimals.
pub fn format_table(reports: &[MetricsReport]) -> String {
    let width = reports.iter().map(|r| r.method.len()).chain(std::iter::once("Method".len())).max().unwrap_or(6);
    let mut out = String::new();
    let _ = writeln!(out, "{:<width$}  {:>6}  {:>6}  {:>6}  {:>6}", "Method", "Hit@1", "Hit@3", "Hit@5", "MRR");
    for r in reports {
        let _ =
            writeln!(out, "{:<width$}  {:>6.3}  {:>6.3}  {:>6.3}  {:>6.3}", r.method, r.hit1, r.hit3, r.hit5, r.mrr);
    }
    out
}
