//! Mining top-k approximate frequent patterns.
//!
//! A pattern `P` is scored by `|P|` times the average support of its
//! nonempty subsets. The search ([`search::abb_topk`]) walks the prefix tree
//! of support-ordered items depth first, pruning subtrees whose upper bound
//! ([`bounds`]) does not beat the current reference scaled by a growing
//! approximation ratio. [`oracle`] holds brute-force references and the
//! coverage measure.

pub mod bounds;
pub mod dataset;
pub mod error;
pub mod objective;
pub mod oracle;
pub mod par;
pub mod search;

pub use bounds::BoundContext;
pub use dataset::{
    convert_categorical, generate_synthetic, load_categorical_csv, load_fimi, load_fimi_str,
    CategoricalDatabase, ItemId, Transaction, TransactionDatabase, VerticalIndex,
};
pub use error::{Error, Result};
pub use objective::{objective_value, EvalState, Pattern};
pub use oracle::{
    coverage, exhaustive_best, powerset_support_sum, top_n_frequent, CoverageReport,
    FrequentItemset,
};
pub use par::Exec;
pub use search::{abb_best, abb_topk, ArSchedule, ScoredPattern, SearchConfig, SearchResult};
