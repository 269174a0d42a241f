//! Subsets of ℤ that are eventually constant in both directions.
//!
//! A set is stored as the membership of its negative tail plus the sorted list
//! of points `t` where membership of `t` differs from membership of `t - 1`.
//! This form is unique, so structural equality is set equality.

use std::fmt;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IntSet {
    neg_tail: bool,
    toggles: Vec<i64>,
}

impl IntSet {
    pub fn empty() -> Self {
        IntSet { neg_tail: false, toggles: Vec::new() }
    }

    pub fn full() -> Self {
        IntSet { neg_tail: true, toggles: Vec::new() }
    }

    /// `{n : n <= a}`
    pub fn at_most(a: i64) -> Self {
        IntSet { neg_tail: true, toggles: vec![a + 1] }
    }

    /// `{n : n >= a}`
    pub fn at_least(a: i64) -> Self {
        IntSet { neg_tail: false, toggles: vec![a] }
    }

    pub fn point(n: i64) -> Self {
        IntSet { neg_tail: false, toggles: vec![n, n + 1] }
    }

    /// Half-open interval `[lo, hi)`.
    pub fn interval(lo: i64, hi: i64) -> Self {
        if lo >= hi {
            Self::empty()
        } else {
            IntSet { neg_tail: false, toggles: vec![lo, hi] }
        }
    }

    pub fn from_points<I: IntoIterator<Item = i64>>(points: I) -> Self {
        let mut pts: Vec<i64> = points.into_iter().collect();
        pts.sort_unstable();
        pts.dedup();
        let mut toggles = Vec::with_capacity(pts.len() * 2);
        for p in pts {
            if toggles.last() == Some(&p) {
                toggles.pop();
            } else {
                toggles.push(p);
            }
            toggles.push(p + 1);
        }
        IntSet { neg_tail: false, toggles }
    }

    pub fn neg_tail(&self) -> bool {
        self.neg_tail
    }

    pub fn pos_tail(&self) -> bool {
        self.neg_tail ^ (self.toggles.len() % 2 == 1)
    }

    pub fn toggles(&self) -> &[i64] {
        &self.toggles
    }

    pub fn contains(&self, n: i64) -> bool {
        let below = self.toggles.partition_point(|&t| t <= n);
        self.neg_tail ^ (below % 2 == 1)
    }

    pub fn is_empty(&self) -> bool {
        !self.neg_tail && self.toggles.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        !self.neg_tail && !self.pos_tail()
    }

    pub fn complement(&self) -> Self {
        IntSet { neg_tail: !self.neg_tail, toggles: self.toggles.clone() }
    }

    pub fn shift(&self, by: i64) -> Self {
        IntSet { neg_tail: self.neg_tail, toggles: self.toggles.iter().map(|t| t + by).collect() }
    }

    /// Image under `n ↦ -n`.
    pub fn reflect(&self) -> Self {
        let mut toggles: Vec<i64> = self.toggles.iter().map(|t| 1 - t).collect();
        toggles.reverse();
        IntSet { neg_tail: self.pos_tail(), toggles }
    }

    pub fn combine(&self, other: &Self, op: impl Fn(bool, bool) -> bool) -> Self {
        let neg_tail = op(self.neg_tail, other.neg_tail);
        let mut points: Vec<i64> = self.toggles.iter().chain(other.toggles.iter()).copied().collect();
        points.sort_unstable();
        points.dedup();
        let mut toggles = Vec::new();
        let mut current = neg_tail;
        for p in points {
            let v = op(self.contains(p), other.contains(p));
            if v != current {
                toggles.push(p);
                current = v;
            }
        }
        IntSet { neg_tail, toggles }
    }

    pub fn intersection(&self, other: &Self) -> Self {
        self.combine(other, |a, b| a && b)
    }

    pub fn union(&self, other: &Self) -> Self {
        self.combine(other, |a, b| a || b)
    }

    pub fn symmetric_difference(&self, other: &Self) -> Self {
        self.combine(other, |a, b| a != b)
    }

    /// Points of a finite set in increasing order; `None` for infinite sets.
    pub fn points(&self) -> Option<Vec<i64>> {
        if !self.is_finite() {
            return None;
        }
        Some(self.toggles.chunks(2).flat_map(|c| c[0]..c[1]).collect())
    }

    pub fn finite_len(&self) -> Option<u64> {
        if !self.is_finite() {
            return None;
        }
        Some(self.toggles.chunks(2).map(|c| (c[1] - c[0]) as u64).sum())
    }
}

impl fmt::Debug for IntSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        let mut inside = self.neg_tail;
        let mut start: Option<i64> = None;
        for &t in &self.toggles {
            if inside {
                match start {
                    None => parts.push(format!("(-inf,{}]", t - 1)),
                    Some(s) if s == t - 1 => parts.push(format!("{s}")),
                    Some(s) => parts.push(format!("[{s},{}]", t - 1)),
                }
            } else {
                start = Some(t);
            }
            inside = !inside;
        }
        if inside {
            match start {
                None => parts.push("Z".into()),
                Some(s) => parts.push(format!("[{s},inf)")),
            }
        }
        write!(f, "{{{}}}", parts.join(" "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(s: &IntSet) -> Vec<bool> {
        (-20..=20).map(|n| s.contains(n)).collect()
    }

    #[test]
    fn rays_and_points() {
        let l0 = IntSet::at_most(0);
        assert!(l0.contains(-100) && l0.contains(0) && !l0.contains(1));
        let r4 = IntSet::at_least(4);
        assert!(l0.intersection(&r4).is_empty());
        assert_eq!(IntSet::at_most(3).intersection(&l0.complement()).points(), Some(vec![1, 2, 3]));
        assert!(!l0.is_finite());
        assert_eq!(IntSet::from_points([3, 1, 2]).points(), Some(vec![1, 2, 3]));
        assert_eq!(IntSet::from_points([1, 2, 3]), IntSet::interval(1, 4));
    }

    #[test]
    fn reflect_matches_pointwise() {
        let s = IntSet::at_most(2).symmetric_difference(&IntSet::from_points([5, -3]));
        let r = s.reflect();
        for n in -20..=20 {
            assert_eq!(r.contains(n), s.contains(-n), "n = {n}");
        }
    }

    #[test]
    fn combine_is_canonical() {
        let a = IntSet::at_most(0).union(&IntSet::point(1));
        assert_eq!(a, IntSet::at_most(1));
        let b = IntSet::at_least(3).complement();
        assert_eq!(b, IntSet::at_most(2));
        let c = IntSet::at_most(5).intersection(&IntSet::at_least(-2));
        assert_eq!(brute(&c), brute(&IntSet::interval(-2, 6)));
        assert_eq!(c, IntSet::interval(-2, 6));
    }
}
