//! Benchmark corpora, ranking metrics and annotation agreement.

mod corpus;
mod kappa;
mod metrics;
mod synthetic;

pub use corpus::{load_corpus, parse_corpus, save_corpus, write_corpus, BenchmarkCase, GoldRef};
pub use kappa::{cohen_kappa, AnnotationSet};
pub use metrics::{case_ranks, evaluate, format_table, report_from_ranks, MetricsReport, TABLE_NOTE};
pub use synthetic::{generate_synthetic, Noise};
