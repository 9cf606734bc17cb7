//! Upper bounds on the objective used to prune the prefix tree.
//!
//! All bounds depend only on single-item supports, the pattern length, the
//! position of the pattern's last item and the longest transaction length
//! `q_max`; none of them touch the transactions. They are evaluated in the
//! same `2^-len` scaled form as the objective.

use crate::dataset::TransactionDatabase;
use crate::objective::pow2;

#[derive(Debug, Clone)]
pub struct BoundContext {
    q_max: usize,
    supports: Vec<u64>,
    /// `cumulative[i]` is the sum of supports at positions `< i`.
    cumulative: Vec<u64>,
}

impl BoundContext {
    pub fn new(db: &TransactionDatabase) -> Self {
        Self::from_parts(db.q_max(), db.supports().to_vec())
    }

    /// `supports` must be nonincreasing, as in a loaded database.
    pub fn from_parts(q_max: usize, supports: Vec<u64>) -> Self {
        debug_assert!(supports.windows(2).all(|w| w[0] >= w[1]));
        let mut cumulative = Vec::with_capacity(supports.len() + 1);
        cumulative.push(0);
        for &s in &supports {
            cumulative.push(cumulative.last().unwrap() + s);
        }
        BoundContext {
            q_max,
            supports,
            cumulative,
        }
    }

    pub fn q_max(&self) -> usize {
        self.q_max
    }

    pub fn m(&self) -> usize {
        self.supports.len()
    }

    pub fn supports(&self) -> &[u64] {
        &self.supports
    }

    /// Sum of supports over the positions in `pattern`.
    pub fn support_sum(&self, pattern: &[usize]) -> u64 {
        pattern.iter().map(|&p| self.supports[p]).sum()
    }

    /// Sum of supports over positions `from..to`.
    fn range_sum(&self, from: usize, to: usize) -> u64 {
        self.cumulative[to] - self.cumulative[from]
    }

    /// `len * 2^q / (q * (2^len - 1)) * s_lin` with `q = min(len, q_max)`.
    fn single(&self, len: usize, s_lin: u64) -> f64 {
        let q = len.min(self.q_max);
        if q == 0 {
            return 0.0;
        }
        scaled_bound(len, q, s_lin)
    }

    /// Bound on the objective of `pattern` itself.
    pub fn ub_theorem1(&self, pattern: &[usize], s_lin: u64) -> f64 {
        assert!(!pattern.is_empty(), "bound of the empty pattern");
        self.single(pattern.len(), s_lin)
    }

    /// Bound on every pattern having `prefix` as prefix, valid once the
    /// prefix is at least `q_max >= 3` long.
    pub fn ub_theorem2(&self, prefix: &[usize], s_lin: u64) -> f64 {
        assert!(
            prefix.len() >= self.q_max && self.q_max >= 3,
            "requires |P| >= q_max >= 3 (|P| = {}, q_max = {})",
            prefix.len(),
            self.q_max
        );
        scaled_bound(prefix.len(), self.q_max, s_lin)
    }

    /// Bound on every pattern having `prefix` as prefix, for prefixes no
    /// longer than `q_max`.
    pub fn ub_theorem3(&self, prefix: &[usize]) -> f64 {
        self.ub_theorem3_with(prefix, self.support_sum(prefix))
    }

    /// [`Self::ub_theorem3`] with the prefix's support sum precomputed.
    pub fn ub_theorem3_with(&self, prefix: &[usize], s_lin: u64) -> f64 {
        let last = *prefix.last().expect("bound of the empty pattern");
        self.theorem3(prefix.len(), last, s_lin)
    }

    /// Candidates are the prefix followed by the next `0..=e` positions in
    /// support order, where `e` stops at the end of the universe or at total
    /// length `q_max`. Each candidate is scored with the single-pattern bound.
    fn theorem3(&self, len: usize, last: usize, s_lin: u64) -> f64 {
        assert!(
            len >= 1 && len <= self.q_max,
            "requires 1 <= |P| <= q_max (|P| = {len}, q_max = {})",
            self.q_max
        );
        let next = last + 1;
        let extra = (self.m() - next).min(self.q_max - len);
        (0..=extra)
            .map(|e| self.single(len + e, s_lin + self.range_sum(next, next + e)))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Bound on the whole subtree rooted at `prefix`, including the prefix.
    /// Infinite (no pruning) when `q_max < 3`.
    pub fn ub_general(&self, prefix: &[usize], s_lin: u64) -> f64 {
        let last = *prefix.last().expect("bound of the empty pattern");
        self.general(prefix.len(), last, s_lin)
    }

    /// [`Self::ub_general`] for a prefix given by its length and last position.
    pub fn general(&self, len: usize, last: usize, s_lin: u64) -> f64 {
        if self.q_max < 3 {
            f64::INFINITY
        } else if len >= self.q_max {
            scaled_bound(len, self.q_max, s_lin)
        } else {
            self.theorem3(len, last, s_lin)
        }
    }
}

/// `len * 2^q / (q * (2^len - 1)) * s_lin`, for `1 <= q <= len`.
fn scaled_bound(len: usize, q: usize, s_lin: u64) -> f64 {
    let l = len as i64;
    (len as f64 / q as f64) * pow2(q as i64 - l) / (1.0 - pow2(-l)) * s_lin as f64
}

/// `2^i / i <= 2^j / j`, the monotonicity behind the single-pattern bound.
pub fn lemma_ratio_monotone(i: u32, j: u32) -> bool {
    2f64.powi(i as i32) / i as f64 <= 2f64.powi(j as i32) / j as f64
}

/// `(1 + x/t)^2 <= 2^x`, which lets a long prefix dominate its extensions.
pub fn lemma_square_growth(x: u32, t: u32) -> bool {
    let r = 1.0 + x as f64 / t as f64;
    r * r <= 2f64.powi(x as i32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_synthetic, load_fimi_str};
    use crate::objective::objective_value;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
    }

    /// All subsets of `later` appended to `prefix`, including the empty one.
    fn extensions(prefix: &[usize], m: usize) -> Vec<Vec<usize>> {
        let start = prefix.last().map_or(0, |&c| c + 1);
        let later: Vec<usize> = (start..m).collect();
        (0u32..1 << later.len())
            .map(|mask| {
                let mut q = prefix.to_vec();
                q.extend(
                    later
                        .iter()
                        .enumerate()
                        .filter(|(b, _)| mask >> b & 1 == 1)
                        .map(|(_, &p)| p),
                );
                q
            })
            .collect()
    }

    fn all_patterns(m: usize) -> Vec<Vec<usize>> {
        (1u32..1 << m)
            .map(|mask| (0..m).filter(|&b| mask >> b & 1 == 1).collect())
            .collect()
    }

    #[test]
    fn theorem1_tiny() {
        let db = load_fimi_str("1 2\n1 2\n1\n").unwrap();
        let ctx = BoundContext::new(&db);
        assert!(close(ctx.ub_theorem1(&[0, 1], 5), 20.0 / 3.0));
        assert!(ctx.ub_theorem1(&[0, 1], 5) >= objective_value(&db, &[0, 1]).unwrap());
        assert_eq!(ctx.ub_theorem1(&[1], 2), 4.0);
    }

    #[test]
    fn theorem1_all_empty_db() {
        let ctx = BoundContext::from_parts(0, vec![]);
        assert_eq!(ctx.single(2, 5), 0.0);
    }

    #[test]
    fn theorem3_tiny() {
        let db = load_fimi_str("1 2 3\n1 2\n1\n").unwrap();
        assert_eq!(db.supports(), &[3, 2, 1]);
        let ctx = BoundContext::new(&db);
        assert!(close(ctx.ub_theorem3(&[0]), 48.0 / 7.0));
        let best = extensions(&[0], db.m())
            .iter()
            .map(|q| objective_value(&db, q).unwrap())
            .fold(0.0, f64::max);
        assert!(ctx.ub_theorem3(&[0]) >= best);
    }

    #[test]
    fn theorem3_last_position() {
        let db = generate_synthetic(10, 6, 0.6, 4).unwrap();
        let ctx = BoundContext::new(&db);
        let last = db.m() - 1;
        let s = db.support(last);
        assert_eq!(ctx.ub_theorem3(&[last]), ctx.ub_theorem1(&[last], s));
    }

    #[test]
    fn theorem2_meets_theorem3_at_q_max() {
        for seed in 0..40 {
            let db = generate_synthetic(10, 7, 0.5, seed).unwrap();
            let ctx = BoundContext::new(&db);
            let q = db.q_max();
            if q < 3 || q > db.m() {
                continue;
            }
            for p in all_patterns(db.m()).into_iter().filter(|p| p.len() == q) {
                let s = ctx.support_sum(&p);
                assert!(close(ctx.ub_theorem2(&p, s), ctx.ub_theorem1(&p, s)));
                assert!(close(ctx.ub_theorem2(&p, s), ctx.ub_theorem3(&p)));
            }
        }
    }

    #[test]
    fn theorem2_nonincreasing_along_extensions() {
        for seed in 0..40 {
            let db = generate_synthetic(10, 7, 0.55, seed).unwrap();
            let ctx = BoundContext::new(&db);
            if ctx.q_max() < 3 {
                continue;
            }
            for p in all_patterns(db.m())
                .into_iter()
                .filter(|p| p.len() >= ctx.q_max())
            {
                let s = ctx.support_sum(&p);
                let here = ctx.ub_theorem2(&p, s);
                for next in p.last().unwrap() + 1..db.m() {
                    let there =
                        ctx.ub_theorem2(&[p.as_slice(), &[next]].concat(), s + db.support(next));
                    assert!(there <= here * (1.0 + 1e-12));
                }
            }
        }
    }

    #[test]
    fn general_is_infinite_below_three() {
        let db = load_fimi_str("1 2\n2 3\n1\n").unwrap();
        let ctx = BoundContext::new(&db);
        for p in all_patterns(db.m()) {
            assert_eq!(ctx.ub_general(&p, ctx.support_sum(&p)), f64::INFINITY);
        }
    }

    #[test]
    #[should_panic(expected = "requires")]
    fn theorem2_precondition() {
        let ctx = BoundContext::from_parts(4, vec![3, 2, 2, 1]);
        ctx.ub_theorem2(&[0, 1], 5);
    }

    #[test]
    fn soundness_against_enumeration() {
        let mut checked = 0;
        for seed in 0..120 {
            let density = [0.3, 0.5, 0.7][seed as usize % 3];
            let db =
                generate_synthetic(8 + seed as usize % 5, 4 + seed as usize % 4, density, seed)
                    .unwrap();
            let ctx = BoundContext::new(&db);
            for p in all_patterns(db.m()) {
                let s = ctx.support_sum(&p);
                let own = objective_value(&db, &p).unwrap();
                assert!(ctx.ub_theorem1(&p, s) >= own);
                if ctx.q_max() < 3 {
                    continue;
                }
                let best = extensions(&p, db.m())
                    .iter()
                    .map(|q| objective_value(&db, q).unwrap())
                    .fold(0.0, f64::max);
                let ub = ctx.ub_general(&p, s);
                assert!(
                    ub * (1.0 + 1e-9) >= best,
                    "seed {seed} P {p:?}: {ub} < {best}"
                );
                checked += 1;
            }
        }
        assert!(checked > 500);
    }

    #[test]
    fn lemma_sweeps() {
        for j in 1..=40 {
            for i in 1..=j {
                assert!(lemma_ratio_monotone(i, j), "i={i} j={j}");
            }
        }
        for x in 1..=40 {
            for t in 3..=40 {
                assert!(lemma_square_growth(x, t), "x={x} t={t}");
            }
        }
        // fails for t = 2: (1 + 1/2)^2 > 2
        assert!(!lemma_square_growth(1, 2));
    }
}
