//! Evaluation: text metrics, significance testing, score tables, and
//! external scorer plumbing.

pub mod external;
pub mod metrics;
pub mod stats;
pub mod table;

pub use external::{FileScorer, HttpScorer, PairScorer};
pub use metrics::{
    accuracy, bleu4, meteor_simplified, rouge_l, tokenize_for_metrics, MetricConfig,
};
pub use stats::{paired_ttest, t_cdf, two_tailed_p, PairedTTestResult};
pub use table::{
    cell_reports, count_significant_wins, normalize_radar, read_scores, write_radar,
    write_scores, write_wins, CellReport, RadarRow, RadarTable, ScoreRow, WinRow,
    DEFAULT_ALPHA,
};
