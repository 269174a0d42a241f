//! Boolean combinations of axis-aligned half-planes of ℤ².
//!
//! The plane is cut into a product of intervals by the breakpoints on each
//! axis; a set is a boolean table over the resulting cells. Breakpoints that
//! separate identical rows or columns are removed, which makes the form unique.

use super::intset::IntSet;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct GridSet {
    xs: Vec<i64>,
    ys: Vec<i64>,
    /// Row-major over x-intervals: `cells[i * (ys.len() + 1) + j]`.
    cells: Vec<bool>,
}

fn interval_index(breaks: &[i64], v: i64) -> usize {
    breaks.partition_point(|&b| b <= v)
}

fn representative(breaks: &[i64], i: usize) -> i64 {
    if breaks.is_empty() {
        0
    } else if i == 0 {
        breaks[0] - 1
    } else {
        breaks[i - 1]
    }
}

impl GridSet {
    pub fn from_x(set: &IntSet) -> Self {
        let xs = set.toggles().to_vec();
        let cells = (0..=xs.len()).map(|i| set.contains(representative(&xs, i))).collect();
        GridSet { xs, ys: Vec::new(), cells }
    }

    pub fn from_y(set: &IntSet) -> Self {
        let ys = set.toggles().to_vec();
        let cells = (0..=ys.len()).map(|j| set.contains(representative(&ys, j))).collect();
        GridSet { xs: Vec::new(), ys, cells }
    }

    fn ny(&self) -> usize {
        self.ys.len() + 1
    }

    fn nx(&self) -> usize {
        self.xs.len() + 1
    }

    fn cell(&self, i: usize, j: usize) -> bool {
        self.cells[i * self.ny() + j]
    }

    pub fn contains(&self, x: i64, y: i64) -> bool {
        self.cell(interval_index(&self.xs, x), interval_index(&self.ys, y))
    }

    pub fn complement(&self) -> Self {
        GridSet { xs: self.xs.clone(), ys: self.ys.clone(), cells: self.cells.iter().map(|c| !c).collect() }
    }

    pub fn translate(&self, dx: i64, dy: i64) -> Self {
        GridSet {
            xs: self.xs.iter().map(|v| v + dx).collect(),
            ys: self.ys.iter().map(|v| v + dy).collect(),
            cells: self.cells.clone(),
        }
    }

    pub fn combine(&self, other: &Self, op: impl Fn(bool, bool) -> bool) -> Self {
        let mut xs: Vec<i64> = self.xs.iter().chain(&other.xs).copied().collect();
        xs.sort_unstable();
        xs.dedup();
        let mut ys: Vec<i64> = self.ys.iter().chain(&other.ys).copied().collect();
        ys.sort_unstable();
        ys.dedup();
        let mut cells = Vec::with_capacity((xs.len() + 1) * (ys.len() + 1));
        for i in 0..=xs.len() {
            let x = representative(&xs, i);
            for j in 0..=ys.len() {
                let y = representative(&ys, j);
                cells.push(op(self.contains(x, y), other.contains(x, y)));
            }
        }
        GridSet { xs, ys, cells }.canonical()
    }

    fn canonical(mut self) -> Self {
        // merge equal adjacent columns
        let mut k = 0;
        while k < self.xs.len() {
            let ny = self.ny();
            let same = (0..ny).all(|j| self.cells[k * ny + j] == self.cells[(k + 1) * ny + j]);
            if same {
                self.xs.remove(k);
                self.cells.drain((k + 1) * ny..(k + 2) * ny);
            } else {
                k += 1;
            }
        }
        let mut k = 0;
        while k < self.ys.len() {
            let (nx, ny) = (self.nx(), self.ny());
            let same = (0..nx).all(|i| self.cells[i * ny + k] == self.cells[i * ny + k + 1]);
            if same {
                self.ys.remove(k);
                let mut cells = Vec::with_capacity(nx * (ny - 1));
                for i in 0..nx {
                    for j in 0..ny {
                        if j != k + 1 {
                            cells.push(self.cells[i * ny + j]);
                        }
                    }
                }
                self.cells = cells;
            } else {
                k += 1;
            }
        }
        self
    }

    pub fn is_empty(&self) -> bool {
        self.cells.iter().all(|c| !c)
    }

    /// True iff the set lies in finitely many horizontal lines `y = c`.
    pub fn rows_finite(&self) -> bool {
        let ny = self.ny();
        (0..self.nx()).all(|i| !self.cell(i, 0) && !self.cell(i, ny - 1))
    }

    /// True iff the set lies in finitely many vertical lines `x = c`.
    pub fn columns_finite(&self) -> bool {
        let nx = self.nx();
        (0..self.ny()).all(|j| !self.cell(0, j) && !self.cell(nx - 1, j))
    }

    pub fn is_finite(&self) -> bool {
        self.rows_finite() && self.columns_finite()
    }

    /// The set as a function of `y` alone, if it does not depend on `x`.
    pub fn as_y_set(&self) -> Option<IntSet> {
        if !self.xs.is_empty() {
            return None;
        }
        let mut s = if self.cells[0] { IntSet::full() } else { IntSet::empty() };
        for (j, &y) in self.ys.iter().enumerate() {
            if self.cells[j] != self.cells[j + 1] {
                s = s.symmetric_difference(&IntSet::at_least(y));
            }
        }
        Some(s)
    }

    pub fn as_x_set(&self) -> Option<IntSet> {
        if !self.ys.is_empty() {
            return None;
        }
        let mut s = if self.cells[0] { IntSet::full() } else { IntSet::empty() };
        for (i, &x) in self.xs.iter().enumerate() {
            if self.cells[i] != self.cells[i + 1] {
                s = s.symmetric_difference(&IntSet::at_least(x));
            }
        }
        Some(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrant_cells() {
        let upper = GridSet::from_y(&IntSet::at_least(1));
        let right = GridSet::from_x(&IntSet::at_least(1));
        let q = upper.combine(&right, |a, b| a && b);
        assert!(q.contains(1, 1) && q.contains(50, 7));
        assert!(!q.contains(0, 1) && !q.contains(1, 0));
        assert!(!q.rows_finite());
        assert!(!q.columns_finite());
        assert!(!q.is_empty());
    }

    #[test]
    fn strips_and_canonical_form() {
        let a = GridSet::from_y(&IntSet::at_least(0));
        let b = GridSet::from_y(&IntSet::at_least(5));
        let diff = a.combine(&b, |p, q| p != q);
        assert!(diff.rows_finite());
        assert!(!diff.columns_finite());
        assert_eq!(diff.as_y_set(), Some(IntSet::interval(0, 5)));
        // union of complementary quadrant pieces collapses back to a half-plane
        let right = GridSet::from_x(&IntSet::at_least(1));
        let back = a.combine(&right, |p, q| p && q).combine(&a.combine(&right, |p, q| p && !q), |p, q| p || q);
        assert_eq!(back, a);
    }

    #[test]
    fn translate_moves_breakpoints() {
        let a = GridSet::from_y(&IntSet::at_least(1)).translate(3, -2);
        assert!(a.contains(0, -1));
        assert!(!a.contains(0, -2));
    }
}
