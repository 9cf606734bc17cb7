//! JSON run reports and the summary table.
//!
//! Field names here are part of the output format and should not change.

use serde::{Deserialize, Serialize};

use afpm_core::oracle::CoverageReport;
use afpm_core::search::{ScoredPattern, SearchConfig, SearchResult};
use afpm_core::{ItemId, TransactionDatabase};

use crate::{Format, InputArgs, Loaded};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub path: String,
    pub format: Format,
    pub n: usize,
    pub m: usize,
    pub q_max: usize,
}

impl DatasetSummary {
    pub fn new(input: &InputArgs, db: &TransactionDatabase) -> Self {
        DatasetSummary {
            path: input.input.display().to_string(),
            format: input.format,
            n: db.n(),
            m: db.m(),
            q_max: db.q_max(),
        }
    }
}

/// Coverage of one pattern; `coverage = hits / powerset_size`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageSummary {
    pub powerset_size: u64,
    pub tkp_size: u64,
    pub hits: u64,
    pub coverage: f64,
}

impl From<CoverageReport> for CoverageSummary {
    fn from(r: CoverageReport) -> Self {
        CoverageSummary {
            powerset_size: r.powerset_size,
            tkp_size: r.tkp_size,
            hits: r.hits,
            coverage: r.coverage,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternReport {
    /// External ids, ascending.
    pub items: Vec<ItemId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    /// Internal positions (support order), only with `--verbose`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positions: Option<Vec<usize>>,
    pub objective: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coverage: Option<CoverageSummary>,
}

impl PatternReport {
    pub fn new(
        loaded: &Loaded,
        p: &ScoredPattern,
        coverage: Option<CoverageReport>,
        verbose: bool,
    ) -> Self {
        let mut items = loaded.db.ids_of(p.pattern.positions());
        items.sort_unstable();
        let labels = loaded
            .labels
            .as_ref()
            .map(|_| items.iter().filter_map(|&id| loaded.label_of(id)).collect());
        PatternReport {
            items,
            labels,
            positions: verbose.then(|| p.pattern.positions().to_vec()),
            objective: p.objective,
            coverage: coverage.map(CoverageSummary::from),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: SearchConfig,
    pub dataset: DatasetSummary,
    pub patterns: Vec<PatternReport>,
    pub ar_final: f64,
    pub nodes_visited: u64,
    pub nodes_pruned: u64,
    /// Search time only.
    pub search_secs: f64,
    /// Search plus coverage evaluation.
    pub total_secs: f64,
}

impl RunReport {
    pub fn new(
        config: SearchConfig,
        dataset: DatasetSummary,
        result: &SearchResult,
        patterns: Vec<PatternReport>,
        total_secs: f64,
    ) -> Self {
        RunReport {
            config,
            dataset,
            patterns,
            ar_final: result.ar_final,
            nodes_visited: result.nodes_visited,
            nodes_pruned: result.nodes_pruned,
            search_secs: result.elapsed.as_secs_f64(),
            total_secs,
        }
    }

    /// The report with its timing fields zeroed.
    pub fn without_timing(&self) -> Self {
        RunReport {
            search_secs: 0.0,
            total_secs: 0.0,
            ..self.clone()
        }
    }
}

/// One row per run: coverage and objective of the best pattern, final
/// approximation ratio and search time.
pub fn table1(rows: &[(String, &RunReport)]) -> String {
    let mut s = format!(
        "{:<16} {:>10} {:>16} {:>10} {:>12}\n",
        "dataset", "coverage", "objective", "ar_final", "time_sec"
    );
    for (name, r) in rows {
        let best = r.patterns.first();
        let coverage = best.and_then(|p| p.coverage.as_ref()).map_or_else(
            || "-".to_string(),
            |c| format!("{:.1}%", 100.0 * c.coverage),
        );
        let objective = best.map_or(0.0, |p| p.objective);
        s.push_str(&format!(
            "{:<16} {:>10} {:>16.1} {:>10.1} {:>12.3}\n",
            name, coverage, objective, r.ar_final, r.search_secs
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(objective: f64, coverage: Option<f64>) -> RunReport {
        RunReport {
            config: SearchConfig::default(),
            dataset: DatasetSummary {
                path: "x.dat".into(),
                format: Format::Fimi,
                n: 3,
                m: 2,
                q_max: 2,
            },
            patterns: vec![PatternReport {
                items: vec![ItemId(1)],
                labels: None,
                positions: None,
                objective,
                coverage: coverage.map(|c| CoverageSummary {
                    powerset_size: 1,
                    tkp_size: 1,
                    hits: 1,
                    coverage: c,
                }),
            }],
            ar_final: 1.5,
            nodes_visited: 4,
            nodes_pruned: 1,
            search_secs: 0.25,
            total_secs: 0.5,
        }
    }

    #[test]
    fn table_rows_and_missing_coverage() {
        let a = report(12.25, Some(0.5));
        let b = report(3.0, None);
        let t = table1(&[("a".into(), &a), ("b".into(), &b)]);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("dataset"));
        assert!(lines[1].contains("50.0%") && lines[1].contains("12.2"));
        assert!(lines[2].contains(" - "));
    }

    #[test]
    fn timing_is_the_only_difference_removed() {
        let a = report(1.0, None);
        let mut b = a.clone();
        b.search_secs = 9.0;
        b.total_secs = 9.0;
        assert_eq!(a.without_timing(), b.without_timing());
        b.nodes_visited += 1;
        assert_ne!(a.without_timing(), b.without_timing());
    }
}
