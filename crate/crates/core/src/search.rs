//! Approximate branch-and-bound over the support-ordered prefix tree.
//!
//! A node is entered only when the subtree bound exceeds `reference * ar`,
//! where `reference` is the best objective so far (k = 1) or the k-th best
//! once k patterns are held. `ar` starts at `ar0` and grows by `delta` each
//! time more than `epoch` nodes have been fully explored, so the returned
//! pattern is within a factor `ar_final` of the optimum.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::bounds::BoundContext;
use crate::dataset::{TransactionDatabase, VerticalIndex};
use crate::error::{Error, Result};
use crate::objective::{EvalState, Pattern};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Initial approximation ratio, at least 1.
    pub ar0: f64,
    pub epoch: u64,
    pub delta: f64,
    pub k: usize,
    /// Longest pattern considered; 0 disables the cap.
    pub max_len: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            ar0: 1.0,
            epoch: 1000,
            delta: 0.1,
            k: 1,
            max_len: 0,
        }
    }
}

impl SearchConfig {
    /// Exact search: no approximation slack and no schedule.
    pub fn exact(k: usize) -> Self {
        SearchConfig {
            ar0: 1.0,
            delta: 0.0,
            k,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ar0 >= 1.0 && self.ar0.is_finite()) {
            return Err(Error::Param(format!(
                "ar0 must be a finite value >= 1, got {}",
                self.ar0
            )));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(Error::Param(format!(
                "delta must be >= 0, got {}",
                self.delta
            )));
        }
        if self.epoch == 0 {
            return Err(Error::Param("epoch must be positive".into()));
        }
        if self.k == 0 {
            return Err(Error::Param("k must be positive".into()));
        }
        Ok(())
    }
}

/// The `ar` growth schedule.
///
/// `ar` is kept as `ar0 + delta * bumps` rather than by repeated addition so
/// that the value after a given number of bumps does not drift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArSchedule {
    ar0: f64,
    bumps: u64,
    visited_since_epoch: u64,
}

impl ArSchedule {
    pub fn new(ar0: f64) -> Self {
        ArSchedule {
            ar0,
            bumps: 0,
            visited_since_epoch: 0,
        }
    }

    pub fn ar(&self, delta: f64) -> f64 {
        self.ar0 + delta * self.bumps as f64
    }

    pub fn bumps(&self) -> u64 {
        self.bumps
    }

    pub fn visited_since_epoch(&self) -> u64 {
        self.visited_since_epoch
    }

    /// Counts one explored node; past `epoch` the counter wraps and `ar`
    /// grows by `delta`.
    pub fn count(&mut self, epoch: u64) {
        self.visited_since_epoch += 1;
        if self.visited_since_epoch > epoch {
            self.bumps += 1;
            self.visited_since_epoch -= epoch;
        }
    }
}

/// Functional form of [`ArSchedule::count`].
pub fn schedule_count(mut sched: ArSchedule, epoch: u64) -> ArSchedule {
    sched.count(epoch);
    sched
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredPattern {
    pub pattern: Pattern,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    /// Objective descending, ties in discovery order.
    pub patterns: Vec<ScoredPattern>,
    pub ar_final: f64,
    pub nodes_visited: u64,
    pub nodes_pruned: u64,
    #[serde(with = "duration_secs")]
    pub elapsed: Duration,
}

impl SearchResult {
    pub fn best(&self) -> Option<&ScoredPattern> {
        self.patterns.first()
    }

    pub fn best_objective(&self) -> f64 {
        self.best().map_or(0.0, |p| p.objective)
    }

    /// Everything except the wall-clock time.
    pub fn same_outcome(&self, other: &SearchResult) -> bool {
        self.patterns == other.patterns
            && self.ar_final == other.ar_final
            && self.nodes_visited == other.nodes_visited
            && self.nodes_pruned == other.nodes_pruned
    }
}

mod duration_secs {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let secs = f64::deserialize(d)?;
        Duration::try_from_secs_f64(secs).map_err(serde::de::Error::custom)
    }
}

/// Pool entry ordered so that the heap top is the entry to evict: lowest
/// objective, and among equal objectives the latest discovered.
#[derive(Debug)]
struct Held {
    objective: f64,
    seq: u64,
    pattern: Vec<usize>,
}

impl PartialEq for Held {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Held {}

impl PartialOrd for Held {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Held {
    fn cmp(&self, other: &Self) -> Ordering {
        Reverse(self.objective)
            .partial_cmp(&Reverse(other.objective))
            .unwrap_or(Ordering::Equal)
            .then(self.seq.cmp(&other.seq))
    }
}

struct TopK {
    k: usize,
    heap: BinaryHeap<Held>,
    seq: u64,
}

impl TopK {
    fn new(k: usize) -> Self {
        TopK {
            k,
            heap: BinaryHeap::with_capacity(k + 1),
            seq: 0,
        }
    }

    /// Pruning reference: 0 until the pool is full, then the k-th best.
    fn threshold(&self) -> f64 {
        if self.heap.len() < self.k {
            0.0
        } else {
            self.heap.peek().map_or(0.0, |h| h.objective)
        }
    }

    fn offer(&mut self, pattern: &[usize], objective: f64) {
        if objective <= 0.0 {
            return;
        }
        let full = self.heap.len() >= self.k;
        if full && objective <= self.threshold() {
            return;
        }
        self.seq += 1;
        self.heap.push(Held {
            objective,
            seq: self.seq,
            pattern: pattern.to_vec(),
        });
        if full {
            self.heap.pop();
        }
    }

    fn into_sorted(self) -> Vec<ScoredPattern> {
        let mut held = self.heap.into_vec();
        held.sort_unstable();
        held.into_iter()
            .map(|h| ScoredPattern {
                pattern: Pattern::new(h.pattern),
                objective: h.objective,
            })
            .collect()
    }
}

struct Abb<'a> {
    index: &'a VerticalIndex,
    bounds: BoundContext,
    cfg: SearchConfig,
    state: EvalState,
    sched: ArSchedule,
    pool: TopK,
    visited: u64,
    pruned: u64,
}

impl Abb<'_> {
    fn ar(&self) -> f64 {
        self.sched.ar(self.cfg.delta)
    }

    /// Visits the child `prefix + {pos}` of the current state.
    fn visit(&mut self, pos: usize) {
        let s_lin = self.state.s_lin() + self.index.tidlist(pos).len() as u64;
        let bound = self.bounds.general(self.state.len() + 1, pos, s_lin);
        if bound > self.pool.threshold() * self.ar() {
            self.visited += 1;
            self.state.push(pos, self.index);
            let objective = self.state.objective().expect("nonempty prefix");
            self.pool.offer(self.state.pattern(), objective);
            if self.cfg.max_len == 0 || self.state.len() < self.cfg.max_len {
                for next in pos + 1..self.bounds.m() {
                    self.visit(next);
                }
            }
            self.state.pop(self.index);
            self.sched.count(self.cfg.epoch);
        } else {
            self.pruned += 1;
        }
    }
}

/// Best single pattern; `cfg.k` is ignored.
pub fn abb_best(
    db: &TransactionDatabase,
    index: &VerticalIndex,
    cfg: &SearchConfig,
) -> Result<SearchResult> {
    abb_topk(db, index, &SearchConfig { k: 1, ..*cfg })
}

/// Up to `cfg.k` distinct patterns with the largest objectives encountered.
pub fn abb_topk(
    db: &TransactionDatabase,
    index: &VerticalIndex,
    cfg: &SearchConfig,
) -> Result<SearchResult> {
    cfg.validate()?;
    let start = Instant::now();
    let mut abb = Abb {
        index,
        bounds: BoundContext::new(db),
        cfg: *cfg,
        state: EvalState::new(db),
        sched: ArSchedule::new(cfg.ar0),
        pool: TopK::new(cfg.k),
        visited: 0,
        pruned: 0,
    };
    if db.n() > 0 {
        // the empty root is never a pattern, never bounded, never counted
        for pos in 0..db.m() {
            abb.visit(pos);
        }
    }
    let ar_final = abb.ar();
    Ok(SearchResult {
        patterns: abb.pool.into_sorted(),
        ar_final,
        nodes_visited: abb.visited,
        nodes_pruned: abb.pruned,
        elapsed: start.elapsed(),
    })
}

/// Runs independent searches over one shared database, in parallel when the
/// `parallel` feature is on. Results are in `configs` order.
pub fn run_batch(
    db: &TransactionDatabase,
    index: &VerticalIndex,
    configs: &[SearchConfig],
    exec: crate::Exec,
) -> Result<Vec<SearchResult>> {
    crate::par::map(exec, configs, |cfg| abb_topk(db, index, cfg))
        .into_iter()
        .collect()
}
