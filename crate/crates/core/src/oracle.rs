//! Brute-force references and the coverage measure.
//!
//! Nothing here shares code with the search path: objectives are evaluated
//! by direct summation over bitset transactions and compared as exact
//! rationals, and subset supports are recounted from scratch.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::rc::Rc;

use serde::{Deserialize, Serialize};

use crate::dataset::{TransactionDatabase, VerticalIndex};
use crate::error::{Error, Result};
use crate::objective::Pattern;
use crate::par::{self, Exec};
use crate::search::ScoredPattern;

/// Largest pattern for subset enumeration.
pub const MAX_POWERSET_LEN: usize = 20;
/// Largest number of candidate itemsets the exhaustive search will score.
pub const MAX_CANDIDATES: u64 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequentItemset {
    pub items: Pattern,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub pattern: Pattern,
    pub powerset_size: u64,
    pub tkp_size: u64,
    pub hits: u64,
    pub coverage: f64,
}

fn check_powerset_len(len: usize) -> Result<()> {
    if len > MAX_POWERSET_LEN {
        return Err(Error::Guard(format!(
            "pattern of length {len} exceeds the subset enumeration limit {MAX_POWERSET_LEN}"
        )));
    }
    Ok(())
}

/// Bitmask over `pattern` of the items each transaction contains.
fn projected_masks(db: &TransactionDatabase, pattern: &[usize]) -> Vec<u32> {
    db.transactions()
        .iter()
        .map(|t| {
            pattern
                .iter()
                .enumerate()
                .filter(|(_, &p)| t.contains(p))
                .fold(0u32, |m, (b, _)| m | 1 << b)
        })
        .collect()
}

/// Sum of the supports of every nonempty subset of `pattern`, each support
/// recounted by scanning the database.
pub fn powerset_support_sum(db: &TransactionDatabase, pattern: &[usize]) -> Result<u128> {
    check_powerset_len(pattern.len())?;
    let masks = projected_masks(db, pattern);
    let total = (1u32..1 << pattern.len())
        .map(|sub| masks.iter().filter(|&&t| t & sub == sub).count() as u128)
        .sum();
    Ok(total)
}

/// Objective held as the exact rational `len * num / (2^len - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Exact {
    len: u32,
    num: u128,
}

impl Exact {
    fn cmp_value(&self, other: &Exact) -> Ordering {
        let lhs = self.len as u128 * self.num * ((1u128 << other.len) - 1);
        let rhs = other.len as u128 * other.num * ((1u128 << self.len) - 1);
        lhs.cmp(&rhs)
    }

    fn value(&self) -> f64 {
        (self.len as u128 * self.num) as f64 / ((1u128 << self.len) - 1) as f64
    }
}

/// Horizontal database as one bitset per transaction.
struct Bitsets {
    words: usize,
    rows: Vec<u64>,
}

impl Bitsets {
    fn new(db: &TransactionDatabase) -> Self {
        let words = db.m().div_ceil(64).max(1);
        let mut rows = vec![0u64; words * db.n()];
        for t in db.transactions() {
            for &p in &t.items {
                rows[t.tid * words + p / 64] |= 1 << (p % 64);
            }
        }
        Bitsets { words, rows }
    }

    /// `sum_T (2^|T∩P| - 1)`.
    fn numerator(&self, pattern: &[usize]) -> u128 {
        self.rows
            .chunks_exact(self.words)
            .map(|row| {
                let hit = pattern
                    .iter()
                    .filter(|&&p| row[p / 64] >> (p % 64) & 1 == 1)
                    .count();
                (1u128 << hit) - 1
            })
            .sum()
    }

    fn score(&self, pattern: &[usize]) -> Exact {
        Exact {
            len: pattern.len() as u32,
            num: self.numerator(pattern),
        }
    }
}

/// Number of nonempty itemsets of size at most `max_len` over `m` items,
/// saturating at `cap + 1`.
fn candidate_count(m: usize, max_len: usize, cap: u64) -> u64 {
    let mut total = 0u64;
    let mut binom = 1u64;
    for l in 1..=max_len.min(m) {
        binom = binom.saturating_mul((m - l + 1) as u64) / l as u64;
        total = total.saturating_add(binom);
        if total > cap {
            return cap + 1;
        }
    }
    total
}

fn effective_len(db: &TransactionDatabase, max_len: usize) -> usize {
    if max_len == 0 {
        db.m()
    } else {
        max_len.min(db.m())
    }
}

fn check_candidates(db: &TransactionDatabase, max_len: usize) -> Result<()> {
    let count = candidate_count(db.m(), max_len, MAX_CANDIDATES);
    if count > MAX_CANDIDATES {
        return Err(Error::Guard(format!(
            "{} items with max length {max_len} exceed {MAX_CANDIDATES} candidates",
            db.m()
        )));
    }
    Ok(())
}

/// Calls `f` on `root` and, unless `root` is a bare singleton task, on every
/// increasing extension of it up to `max_len`, in lexicographic order.
fn for_each_rooted(root: &Root, m: usize, max_len: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(buf: &mut Vec<usize>, m: usize, max_len: usize, f: &mut impl FnMut(&[usize])) {
        f(buf);
        if buf.len() == max_len {
            return;
        }
        for next in buf[buf.len() - 1] + 1..m {
            buf.push(next);
            rec(buf, m, max_len, f);
            buf.pop();
        }
    }
    match *root {
        Root::Single(first) => f(&[first]),
        Root::Pair(first, second) => rec(&mut vec![first, second], m, max_len, f),
    }
}

/// Unit of enumeration work. Concatenating the tasks from [`roots`] visits
/// every itemset in lexicographic order.
#[derive(Debug, Clone, Copy)]
enum Root {
    Single(usize),
    Pair(usize, usize),
}

fn roots(m: usize, max_len: usize) -> Vec<Root> {
    let mut out = Vec::new();
    for first in 0..m {
        out.push(Root::Single(first));
        if max_len >= 2 {
            out.extend((first + 1..m).map(|second| Root::Pair(first, second)));
        }
    }
    out
}

/// Scores every nonempty itemset of length at most `max_len` (0 = no cap),
/// in lexicographic order of positions.
pub fn enumerate_objectives(
    db: &TransactionDatabase,
    max_len: usize,
    exec: Exec,
) -> Result<Vec<ScoredPattern>> {
    let len = effective_len(db, max_len);
    check_candidates(db, len)?;
    let bits = Bitsets::new(db);
    let chunks = par::map(exec, &roots(db.m(), len), |root| {
        let mut out = Vec::new();
        for_each_rooted(root, db.m(), len, &mut |p| {
            out.push(ScoredPattern {
                pattern: Pattern::from(p),
                objective: bits.score(p).value(),
            });
        });
        out
    });
    Ok(chunks.into_iter().flatten().collect())
}

/// The maximizer of the objective over all nonempty itemsets of length at
/// most `max_len` (0 = no cap). Ties go to the lexicographically smallest
/// position list. `None` for a database without items.
pub fn exhaustive_best(db: &TransactionDatabase, max_len: usize) -> Result<Option<ScoredPattern>> {
    exhaustive_best_with(db, max_len, Exec::default())
}

pub fn exhaustive_best_with(
    db: &TransactionDatabase,
    max_len: usize,
    exec: Exec,
) -> Result<Option<ScoredPattern>> {
    let len = effective_len(db, max_len);
    check_candidates(db, len)?;
    let bits = Bitsets::new(db);
    let bests = par::map(exec, &roots(db.m(), len), |root| {
        let mut best: Option<(Vec<usize>, Exact)> = None;
        for_each_rooted(root, db.m(), len, &mut |p| {
            let s = bits.score(p);
            if best
                .as_ref()
                .is_none_or(|(_, b)| s.cmp_value(b) == Ordering::Greater)
            {
                best = Some((p.to_vec(), s));
            }
        });
        best
    });
    // tasks are in lexicographic order, so strict improvement keeps the first
    let mut best: Option<(Vec<usize>, Exact)> = None;
    for (p, s) in bests.into_iter().flatten() {
        if best
            .as_ref()
            .is_none_or(|(_, b)| s.cmp_value(b) == Ordering::Greater)
        {
            best = Some((p, s));
        }
    }
    Ok(best.map(|(p, s)| ScoredPattern {
        pattern: Pattern::new(p),
        objective: s.value(),
    }))
}

/// The `k` largest objectives over all itemsets, descending, ties in
/// lexicographic order.
pub fn exhaustive_topk(
    db: &TransactionDatabase,
    k: usize,
    max_len: usize,
) -> Result<Vec<ScoredPattern>> {
    let mut all = enumerate_objectives(db, max_len, Exec::default())?;
    // stable sort keeps lexicographic order among equal objectives
    all.sort_by(|a, b| b.objective.total_cmp(&a.objective));
    all.truncate(k);
    Ok(all)
}

/// Largest objective over `prefix` and all its extensions by later
/// positions.
pub fn best_extension(db: &TransactionDatabase, prefix: &[usize]) -> Result<f64> {
    let start = prefix.last().map_or(0, |&c| c + 1);
    let later: Vec<usize> = (start..db.m()).collect();
    check_powerset_len(later.len())?;
    if prefix.len() + later.len() > 2 * MAX_POWERSET_LEN {
        return Err(Error::Guard(format!(
            "extensions of a length-{} prefix are too long to score exactly",
            prefix.len()
        )));
    }
    let bits = Bitsets::new(db);
    let mut best: Option<Exact> = None;
    let mut buf = prefix.to_vec();
    for mask in 0u32..1 << later.len() {
        buf.truncate(prefix.len());
        buf.extend(
            later
                .iter()
                .enumerate()
                .filter(|(b, _)| mask >> b & 1 == 1)
                .map(|(_, &p)| p),
        );
        if buf.is_empty() {
            continue;
        }
        let s = bits.score(&buf);
        if best.is_none_or(|b| s.cmp_value(&b) == Ordering::Greater) {
            best = Some(s);
        }
    }
    Ok(best.map_or(0.0, |b| b.value()))
}

/// Frontier entry of the best-first enumeration. Greatest = highest support,
/// then lexicographically smallest.
struct Candidate {
    support: u64,
    items: Vec<usize>,
    parent_tids: Option<Rc<Vec<u32>>>,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.support
            .cmp(&other.support)
            .then_with(|| other.items.cmp(&self.items))
    }
}

fn intersect(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out = Vec::with_capacity(a.len().min(b.len()));
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

fn intersect_len(a: &[u32], b: &[u32]) -> u64 {
    let (mut i, mut j, mut c) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                c += 1;
                i += 1;
                j += 1;
            }
        }
    }
    c
}

/// The `n` itemsets with the highest support (support at least 1), in
/// nonincreasing support order; ties at any support level are taken in
/// lexicographic order of positions.
///
/// Best-first over the prefix tree: every itemset has a unique parent (drop
/// its last item) whose support is at least its own, so popping the frontier
/// in (support desc, lexicographic asc) order emits itemsets in exactly that
/// order.
pub fn top_n_frequent(
    db: &TransactionDatabase,
    index: &VerticalIndex,
    n: usize,
) -> Vec<FrequentItemset> {
    let mut out = Vec::with_capacity(n.min(1 << 16));
    let mut frontier: BinaryHeap<Candidate> = (0..db.m())
        .map(|p| Candidate {
            support: db.support(p),
            items: vec![p],
            parent_tids: None,
        })
        .collect();

    while out.len() < n {
        let Some(c) = frontier.pop() else { break };
        let last = *c.items.last().expect("nonempty itemset");
        let tids = Rc::new(match &c.parent_tids {
            Some(parent) => intersect(parent, index.tidlist(last)),
            None => index.tidlist(last).to_vec(),
        });
        for next in last + 1..db.m() {
            let support = intersect_len(&tids, index.tidlist(next));
            if support > 0 {
                let mut items = c.items.clone();
                items.push(next);
                frontier.push(Candidate {
                    support,
                    items,
                    parent_tids: Some(Rc::clone(&tids)),
                });
            }
        }
        out.push(FrequentItemset {
            items: Pattern::new(c.items),
            support: c.support,
        });
    }
    out
}

/// Fraction of `pattern`'s nonempty subsets that are among the
/// `2^|P| - 1` most frequent itemsets.
pub fn coverage(
    db: &TransactionDatabase,
    index: &VerticalIndex,
    pattern: &[usize],
) -> Result<CoverageReport> {
    if pattern.is_empty() {
        return Err(Error::Domain(
            "coverage is undefined for the empty pattern".into(),
        ));
    }
    check_powerset_len(pattern.len())?;
    let pattern = Pattern::from(pattern);
    let powerset_size = (1u64 << pattern.len()) - 1;
    let tkp = top_n_frequent(db, index, powerset_size as usize);
    let hits = tkp
        .iter()
        .filter(|f| {
            f.items
                .positions()
                .iter()
                .all(|p| pattern.positions().binary_search(p).is_ok())
        })
        .count() as u64;
    Ok(CoverageReport {
        pattern,
        powerset_size,
        tkp_size: tkp.len() as u64,
        hits,
        coverage: hits as f64 / powerset_size as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_synthetic, load_fimi_str};

    fn tiny() -> TransactionDatabase {
        load_fimi_str("1 2\n1 2\n1\n").unwrap()
    }

    /// Every itemset with positive support, by brute-force recount.
    fn all_supports(db: &TransactionDatabase) -> Vec<(Vec<usize>, u64)> {
        let m = db.m();
        (1u32..1 << m)
            .map(|mask| {
                let p: Vec<usize> = (0..m).filter(|&b| mask >> b & 1 == 1).collect();
                let s = db
                    .transactions()
                    .iter()
                    .filter(|t| p.iter().all(|&i| t.contains(i)))
                    .count() as u64;
                (p, s)
            })
            .filter(|(_, s)| *s > 0)
            .collect()
    }

    #[test]
    fn powerset_sum_tiny() {
        let db = tiny();
        assert_eq!(powerset_support_sum(&db, &[0, 1]).unwrap(), 7);
        assert_eq!(powerset_support_sum(&db, &[1]).unwrap(), 2);
    }

    #[test]
    fn powerset_guard() {
        let db = tiny();
        let long: Vec<usize> = (0..21).collect();
        assert!(matches!(
            powerset_support_sum(&db, &long),
            Err(Error::Guard(_))
        ));
    }

    #[test]
    fn powerset_identity() {
        for seed in 0..30 {
            let db = generate_synthetic(12, 6, 0.5, seed).unwrap();
            for mask in 1u32..1 << db.m() {
                let p: Vec<usize> = (0..db.m()).filter(|&b| mask >> b & 1 == 1).collect();
                let rhs: u128 = db
                    .transactions()
                    .iter()
                    .map(|t| (1u128 << p.iter().filter(|&&i| t.contains(i)).count()) - 1)
                    .sum();
                assert_eq!(powerset_support_sum(&db, &p).unwrap(), rhs);
            }
        }
    }

    #[test]
    fn exhaustive_tiny() {
        let best = exhaustive_best(&tiny(), 0).unwrap().unwrap();
        assert_eq!(best.pattern.positions(), &[0, 1]);
        assert!((best.objective - 14.0 / 3.0).abs() < 1e-12);

        let one = exhaustive_best(&load_fimi_str("1\n").unwrap(), 0)
            .unwrap()
            .unwrap();
        assert_eq!(
            (one.pattern.positions(), one.objective),
            (&[0usize][..], 1.0)
        );

        assert!(exhaustive_best(&load_fimi_str("").unwrap(), 0)
            .unwrap()
            .is_none());
    }

    #[test]
    fn exhaustive_full_density() {
        for (n, m) in [(5, 4), (7, 6), (3, 9)] {
            let db = generate_synthetic(n, m, 1.0, 0).unwrap();
            let best = exhaustive_best(&db, 0).unwrap().unwrap();
            assert_eq!(best.pattern.len(), m);
            assert_eq!(best.objective, (m * n) as f64);
        }
    }

    #[test]
    fn exhaustive_guard() {
        let db = generate_synthetic(3, 21, 1.0, 0).unwrap();
        assert!(matches!(exhaustive_best(&db, 0), Err(Error::Guard(_))));
        assert!(exhaustive_best(&db, 3).is_ok());
    }

    #[test]
    fn exhaustive_seq_par_agree() {
        for seed in 0..10 {
            let db = generate_synthetic(30, 10, 0.4, seed).unwrap();
            let a = exhaustive_best_with(&db, 0, Exec::Sequential).unwrap();
            let b = exhaustive_best_with(&db, 0, Exec::Parallel).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn exhaustive_ties_lexicographic() {
        // items 1 and 2 are interchangeable; the best pattern is unique up to
        // symmetry only among singletons
        let db = load_fimi_str("1\n2\n").unwrap();
        let best = exhaustive_best(&db, 1).unwrap().unwrap();
        assert_eq!(best.pattern.positions(), &[0]);
    }

    #[test]
    fn top_n_tiny() {
        let db = tiny();
        let idx = VerticalIndex::build(&db);
        let got = top_n_frequent(&db, &idx, 3);
        let view: Vec<(Vec<usize>, u64)> = got
            .iter()
            .map(|f| (f.items.positions().to_vec(), f.support))
            .collect();
        // both support-2 itemsets fit; [0, 1] precedes [1] lexicographically
        assert_eq!(view, vec![(vec![0], 3), (vec![0, 1], 2), (vec![1], 2)]);
        assert_eq!(top_n_frequent(&db, &idx, 1)[0].items.positions(), &[0]);
        assert_eq!(top_n_frequent(&db, &idx, 10).len(), 3);
    }

    #[test]
    fn top_n_matches_enumeration() {
        for seed in 0..40 {
            let db = generate_synthetic(12, 8, [0.2, 0.4, 0.6][seed as usize % 3], seed).unwrap();
            let idx = VerticalIndex::build(&db);
            let mut all = all_supports(&db);
            all.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
            for n in [1, 3, 7, 15, 40] {
                let got: Vec<(Vec<usize>, u64)> = top_n_frequent(&db, &idx, n)
                    .into_iter()
                    .map(|f| (f.items.positions().to_vec(), f.support))
                    .collect();
                let want: Vec<(Vec<usize>, u64)> = all.iter().take(n).cloned().collect();
                assert_eq!(got, want, "seed {seed} n {n}");
            }
        }
    }

    #[test]
    fn coverage_replicas() {
        let db = load_fimi_str("1 2 3\n1 2 3\n1 2 3\n").unwrap();
        let idx = VerticalIndex::build(&db);
        let r = coverage(&db, &idx, &[0, 1, 2]).unwrap();
        assert_eq!((r.hits, r.powerset_size, r.coverage), (7, 7, 1.0));
    }

    #[test]
    fn coverage_top_single_item() {
        let db = generate_synthetic(30, 6, 0.5, 4).unwrap();
        let idx = VerticalIndex::build(&db);
        let r = coverage(&db, &idx, &[0]).unwrap();
        assert_eq!(r.coverage, 1.0);
    }

    #[test]
    fn coverage_hand_intersection() {
        for seed in 0..20 {
            let db = generate_synthetic(12, 7, 0.5, 50 + seed).unwrap();
            let idx = VerticalIndex::build(&db);
            let mut all = all_supports(&db);
            all.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
            for p in [vec![0, 1], vec![0, 2, 3], vec![1, 3, 4, 5]] {
                let size = (1usize << p.len()) - 1;
                let hits = all
                    .iter()
                    .take(size)
                    .filter(|(s, _)| s.iter().all(|i| p.contains(i)))
                    .count() as u64;
                let r = coverage(&db, &idx, &p).unwrap();
                assert_eq!(r.hits, hits);
                assert!((0.0..=1.0).contains(&r.coverage));
            }
        }
    }
}
