//! The pattern objective `|P| * sum_T (2^|T∩P| - 1) / (2^|P| - 1)`, i.e. the
//! pattern length times the average support over its nonempty subsets.
//!
//! Two evaluation routes exist. [`objective_value`] works directly on the
//! horizontal database in a scaled floating form where every summand lies in
//! `[0, 1]`, so it is finite for any pattern length. [`EvalState`] keeps
//! `sum_T 2^|T∩P|` as an exact 128-bit integer while the search pushes and
//! pops items, and divides only at the very end.

use serde::{Deserialize, Serialize};

use crate::dataset::{TransactionDatabase, VerticalIndex};
use crate::error::{Error, Result};

/// An itemset as strictly increasing internal positions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Pattern(Vec<usize>);

impl Pattern {
    /// Sorts and deduplicates `positions`.
    pub fn new(mut positions: Vec<usize>) -> Self {
        positions.sort_unstable();
        positions.dedup();
        Pattern(positions)
    }

    pub fn positions(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn last(&self) -> Option<usize> {
        self.0.last().copied()
    }
}

impl From<&[usize]> for Pattern {
    fn from(p: &[usize]) -> Self {
        Pattern::new(p.to_vec())
    }
}

/// `2^e` for any integer exponent; underflows to zero, never overflows for
/// `e <= 0`.
#[inline]
pub(crate) fn pow2(e: i64) -> f64 {
    if e < -1100 {
        0.0
    } else if e > 1100 {
        f64::INFINITY
    } else {
        2f64.powi(e as i32)
    }
}

/// `|A ∩ B|` for two sorted slices.
pub(crate) fn intersection_len(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut c) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                c += 1;
                i += 1;
                j += 1;
            }
        }
    }
    c
}

/// Scaled objective from the per-transaction intersection sizes.
pub(crate) fn scaled_from_counts<I: IntoIterator<Item = usize>>(len: usize, counts: I) -> f64 {
    let l = len as i64;
    let floor = pow2(-l);
    let sum: f64 = counts
        .into_iter()
        .filter(|&c| c > 0)
        .map(|c| pow2(c as i64 - l) - floor)
        .sum();
    len as f64 * sum / (1.0 - floor)
}

/// Objective from the exact integer `sum_T (2^|T∩P| - 1)`.
pub fn objective_from_exact(len: usize, numerator: u128) -> f64 {
    if len < 128 {
        let denom = (1u128 << len) - 1;
        match (len as u128).checked_mul(numerator) {
            Some(scaled) => scaled as f64 / denom as f64,
            None => len as f64 * (numerator as f64 / denom as f64),
        }
    } else {
        // 2^len - 1 is not representable; the scaled form loses nothing here.
        len as f64 * numerator as f64 * pow2(-(len as i64))
    }
}

/// Evaluates the objective of `pattern` by direct summation over the
/// horizontal database, in scaled floating form.
pub fn objective_value(db: &TransactionDatabase, pattern: &[usize]) -> Result<f64> {
    if pattern.is_empty() {
        return Err(Error::Domain(
            "objective is undefined for the empty pattern".into(),
        ));
    }
    let counts = db
        .transactions()
        .iter()
        .map(|t| intersection_len(&t.items, pattern));
    Ok(scaled_from_counts(pattern.len(), counts))
}

/// True when `sum_T 2^|T∩P|` always fits comfortably in 128 bits.
pub fn exact_regime(db: &TransactionDatabase) -> bool {
    let log2n = (db.n().max(1) as u64).next_power_of_two().trailing_zeros() as usize;
    db.q_max() + log2n <= 120
}

/// Incremental accumulator for a depth-first prefix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalState {
    counts: Vec<u32>,
    /// `sum_T 2^counts[T]`, maintained only in the exact regime.
    s_pow: Option<u128>,
    s_lin: u64,
    stack: Vec<usize>,
}

impl EvalState {
    pub fn new(db: &TransactionDatabase) -> Self {
        EvalState {
            counts: vec![0; db.n()],
            s_pow: exact_regime(db).then_some(db.n() as u128),
            s_lin: 0,
            stack: Vec::new(),
        }
    }

    pub fn pattern(&self) -> &[usize] {
        &self.stack
    }

    pub fn len(&self) -> usize {
        self.stack.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stack.is_empty()
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn s_pow(&self) -> Option<u128> {
        self.s_pow
    }

    /// `sum_T |T∩P|`, which equals the sum of the item supports.
    pub fn s_lin(&self) -> u64 {
        self.s_lin
    }

    /// Adds `pos` to the pattern. Panics if `pos` does not extend the
    /// pattern in position order.
    pub fn push(&mut self, pos: usize, index: &VerticalIndex) {
        if let Some(&last) = self.stack.last() {
            assert!(pos > last, "out-of-order push: {pos} after {last}");
        }
        let tids = index.tidlist(pos);
        match self.s_pow.as_mut() {
            Some(s_pow) => {
                for &tid in tids {
                    let c = &mut self.counts[tid as usize];
                    *s_pow += 1u128 << *c;
                    *c += 1;
                }
            }
            None => {
                for &tid in tids {
                    self.counts[tid as usize] += 1;
                }
            }
        }
        self.s_lin += tids.len() as u64;
        self.stack.push(pos);
    }

    /// Removes the most recently pushed item. Panics on an empty pattern.
    pub fn pop(&mut self, index: &VerticalIndex) -> usize {
        let pos = self.stack.pop().expect("pop on empty pattern");
        let tids = index.tidlist(pos);
        match self.s_pow.as_mut() {
            Some(s_pow) => {
                for &tid in tids {
                    let c = &mut self.counts[tid as usize];
                    *c -= 1;
                    *s_pow -= 1u128 << *c;
                }
            }
            None => {
                for &tid in tids {
                    self.counts[tid as usize] -= 1;
                }
            }
        }
        self.s_lin -= tids.len() as u64;
        pos
    }

    /// Objective of the current pattern; `None` for the empty pattern.
    pub fn objective(&self) -> Option<f64> {
        if self.stack.is_empty() {
            return None;
        }
        Some(match self.s_pow {
            Some(s_pow) => {
                objective_from_exact(self.stack.len(), s_pow - self.counts.len() as u128)
            }
            None => scaled_from_counts(self.stack.len(), self.counts.iter().map(|&c| c as usize)),
        })
    }
}
