//! Evaluation kit: dataset ingestion, the 3-way style classifier, the
//! personalization metrics, a character n-gram quality proxy, and layer-wise
//! probing.

mod classifier;
mod dataset;
mod features;
mod metrics;
mod probe;
mod quality;

pub use classifier::{train_style_classifier, StyleClassifier, StyleDistribution};
pub use dataset::{ingest_jsonl, IngestMode, IngestOutcome, ParallelParagraph};
pub use features::char_ngram_features;
pub use metrics::{
    metric_h, metric_p, metric_p_flip, FlipDenominator, MetricsReport, SampleRow, StyleLabel,
};
pub use probe::{probe_sweep, ProbeSweepResult};
pub use quality::quality_proxy;
