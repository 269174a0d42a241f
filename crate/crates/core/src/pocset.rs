//! Finite posets with an order-reversing, fixed-point-free involution.
//!
//! Element `2i` and `2i + 1` form pair `i`; the complement of `e` is `e ^ 1`.
//! The order is stored reflexive and transitively closed as one up-set bitset
//! per element.

use std::fmt;

use fixedbitset::FixedBitSet;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PocsetError {
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("element index {0} out of range")]
    OutOfRange(usize),
    #[error("not a pocset: {0}")]
    Invalid(ValidationReport),
}

/// Relation data before validation: an explicit pairing and a list of `i ≤ j`.
#[derive(Clone, Debug)]
pub struct RawPocset {
    pub pair_of: Vec<usize>,
    pub relations: Vec<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    InvolutionFixedPoint { element: usize },
    NotInvolution { element: usize },
    NotAntisymmetric { a: usize, b: usize },
    NotTransitive { a: usize, b: usize, c: usize },
    OrderNotReversed { a: usize, b: usize },
    ComparableToComplement { element: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::InvolutionFixedPoint { element } => write!(f, "involution has fixed point {element}"),
            Violation::NotInvolution { element } => write!(f, "pairing is not an involution at {element}"),
            Violation::NotAntisymmetric { a, b } => write!(f, "{a} <= {b} and {b} <= {a}"),
            Violation::NotTransitive { a, b, c } => write!(f, "{a} <= {b} <= {c} but not {a} <= {c}"),
            Violation::OrderNotReversed { a, b } => write!(f, "order not reversed: {a} <= {b} but not {b}* <= {a}*"),
            Violation::ComparableToComplement { element } => {
                write!(f, "element {element} is comparable to its complement")
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", parts.join("; "))
    }
}

/// Checks the pocset axioms on raw data, with reflexivity implied.
pub fn validate_pocset(raw: &RawPocset) -> Result<ValidationReport, PocsetError> {
    let n = raw.pair_of.len();
    if n % 2 == 1 {
        return Err(PocsetError::Format { line: 0, msg: format!("odd element count {n}") });
    }
    for (i, &p) in raw.pair_of.iter().enumerate() {
        if p >= n {
            return Err(PocsetError::Format { line: 0, msg: format!("pairing of {i} is {p}, out of range") });
        }
    }
    for &(a, b) in &raw.relations {
        if a >= n || b >= n {
            return Err(PocsetError::OutOfRange(a.max(b)));
        }
    }
    let mut report = ValidationReport::default();
    for (i, &p) in raw.pair_of.iter().enumerate() {
        if p == i {
            report.violations.push(Violation::InvolutionFixedPoint { element: i });
        } else if raw.pair_of[p] != i {
            report.violations.push(Violation::NotInvolution { element: i });
        }
    }
    let mut le = vec![FixedBitSet::with_capacity(n); n];
    for (i, row) in le.iter_mut().enumerate() {
        row.insert(i);
    }
    for &(a, b) in &raw.relations {
        le[a].insert(b);
    }
    for a in 0..n {
        for b in le[a].ones() {
            if a < b && le[b].contains(a) {
                report.violations.push(Violation::NotAntisymmetric { a, b });
            }
            if !le[b].is_subset(&le[a]) {
                let c = le[b].difference(&le[a]).next().expect("nonempty difference");
                report.violations.push(Violation::NotTransitive { a, b, c });
            }
            let (sa, sb) = (raw.pair_of[a], raw.pair_of[b]);
            if !le[sb].contains(sa) {
                report.violations.push(Violation::OrderNotReversed { a, b });
            }
        }
        let sa = raw.pair_of[a];
        if sa != a && le[a].contains(sa) {
            report.violations.push(Violation::ComparableToComplement { element: a });
        }
    }
    report.violations.dedup();
    Ok(report)
}

#[derive(Clone, PartialEq, Eq)]
pub struct Pocset {
    pairs: usize,
    up: Vec<FixedBitSet>,
    labels: Option<Vec<String>>,
}

impl fmt::Debug for Pocset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Pocset({} pairs, {:?})", self.pairs, self.relations())
    }
}

#[inline]
pub fn complement(e: usize) -> usize {
    e ^ 1
}

/// One term of a comparability between two elements and their complements.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Term {
    A,
    AStar,
    B,
    BStar,
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Term::A => "A",
            Term::AStar => "A*",
            Term::B => "B",
            Term::BStar => "B*",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum AbstractRelation {
    Equal,
    Complementary,
    /// Every strict comparability `lesser < greater` across the two pairs.
    Related(Vec<(Term, Term)>),
    Transverse,
}

impl Pocset {
    /// `m` pairs with no relations beyond reflexivity.
    pub fn free(m: usize) -> Self {
        let mut up = vec![FixedBitSet::with_capacity(2 * m); 2 * m];
        for (i, row) in up.iter_mut().enumerate() {
            row.insert(i);
        }
        Pocset { pairs: m, up, labels: None }
    }

    /// Closes `relations` under transitivity and complement reversal, then
    /// checks the remaining axioms.
    pub fn from_relations(m: usize, relations: &[(usize, usize)]) -> Result<Self, PocsetError> {
        let n = 2 * m;
        let mut p = Pocset::free(m);
        for &(a, b) in relations {
            if a >= n || b >= n {
                return Err(PocsetError::OutOfRange(a.max(b)));
            }
            p.up[a].insert(b);
            p.up[complement(b)].insert(complement(a));
        }
        // Warshall over bitsets
        for k in 0..n {
            let row_k = p.up[k].clone();
            for i in 0..n {
                if i != k && p.up[i].contains(k) {
                    p.up[i].union_with(&row_k);
                }
            }
        }
        p.check()?;
        Ok(p)
    }

    /// Takes an order matrix as given (no closure) and validates it.
    pub fn from_order(m: usize, up: Vec<FixedBitSet>) -> Result<Self, PocsetError> {
        let mut up = up;
        for (i, row) in up.iter_mut().enumerate() {
            row.grow(2 * m);
            row.insert(i);
        }
        let p = Pocset { pairs: m, up, labels: None };
        p.check()?;
        Ok(p)
    }

    fn check(&self) -> Result<(), PocsetError> {
        let report = validate_pocset(&self.raw())?;
        if report.is_valid() {
            Ok(())
        } else {
            Err(PocsetError::Invalid(report))
        }
    }

    pub fn raw(&self) -> RawPocset {
        RawPocset { pair_of: (0..self.len()).map(complement).collect(), relations: self.relations() }
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Self {
        assert_eq!(labels.len(), self.len());
        self.labels = Some(labels);
        self
    }

    pub fn label(&self, e: usize) -> String {
        match &self.labels {
            Some(l) => l[e].clone(),
            None => {
                if e % 2 == 0 {
                    format!("{}", e / 2)
                } else {
                    format!("{}*", e / 2)
                }
            }
        }
    }

    pub fn pairs(&self) -> usize {
        self.pairs
    }

    pub fn len(&self) -> usize {
        2 * self.pairs
    }

    pub fn is_empty(&self) -> bool {
        self.pairs == 0
    }

    pub fn leq(&self, a: usize, b: usize) -> bool {
        self.up[a].contains(b)
    }

    pub fn lt(&self, a: usize, b: usize) -> bool {
        a != b && self.leq(a, b)
    }

    /// `{b : a ≤ b}`, including `a`.
    pub fn up_set(&self, a: usize) -> &FixedBitSet {
        &self.up[a]
    }

    /// All non-reflexive relations `(i, j)` with `i ≤ j`, sorted.
    pub fn relations(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for a in 0..self.len() {
            for b in self.up[a].ones() {
                if a != b {
                    out.push((a, b));
                }
            }
        }
        out
    }

    fn check_index(&self, e: usize) -> Result<(), PocsetError> {
        if e < self.len() {
            Ok(())
        } else {
            Err(PocsetError::OutOfRange(e))
        }
    }

    pub fn classify_abstract_pair(&self, a: usize, b: usize) -> Result<AbstractRelation, PocsetError> {
        self.check_index(a)?;
        self.check_index(b)?;
        if a == b {
            return Ok(AbstractRelation::Equal);
        }
        if b == complement(a) {
            return Ok(AbstractRelation::Complementary);
        }
        let terms = [(Term::A, a), (Term::AStar, complement(a)), (Term::B, b), (Term::BStar, complement(b))];
        let mut found = Vec::new();
        for &(tx, x) in &terms {
            for &(ty, y) in &terms {
                let cross = matches!(tx, Term::A | Term::AStar) != matches!(ty, Term::A | Term::AStar);
                if cross && self.lt(x, y) {
                    found.push((tx, ty));
                }
            }
        }
        Ok(if found.is_empty() { AbstractRelation::Transverse } else { AbstractRelation::Related(found) })
    }

    /// True iff no element of pair `i` is comparable to an element of pair `j`.
    pub fn transverse_pairs(&self, i: usize, j: usize) -> bool {
        let (a, b) = (2 * i, 2 * j);
        !(self.leq(a, b) || self.leq(a, b + 1) || self.leq(a + 1, b) || self.leq(a + 1, b + 1))
    }

    pub fn minimal_elements(&self, s: &[usize]) -> Result<Vec<usize>, PocsetError> {
        for &e in s {
            self.check_index(e)?;
        }
        Ok(s.iter().copied().filter(|&a| !s.iter().any(|&b| self.lt(b, a))).collect())
    }

    pub fn emit_text(&self) -> String {
        let mut out = format!("pairs {}\n", self.pairs);
        for (a, b) in self.relations() {
            out.push_str(&format!("{a} {b}\n"));
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<Self, PocsetError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        let (_, header) = lines.next().ok_or(PocsetError::Format { line: 1, msg: "empty input".into() })?;
        let m = header
            .trim()
            .strip_prefix("pairs")
            .and_then(|rest| rest.trim().parse::<usize>().ok())
            .ok_or(PocsetError::Format { line: 1, msg: format!("expected 'pairs m', found '{header}'") })?;
        let mut relations = Vec::new();
        for (i, line) in lines {
            let nums: Vec<&str> = line.split_whitespace().collect();
            let parsed: Option<Vec<usize>> = nums.iter().map(|s| s.parse().ok()).collect();
            match parsed.as_deref() {
                Some(&[a, b]) if a < 2 * m && b < 2 * m => relations.push((a, b)),
                Some(&[_, _]) => {
                    return Err(PocsetError::Format { line: i + 1, msg: "element index out of range".into() })
                }
                _ => return Err(PocsetError::Format { line: i + 1, msg: format!("expected 'i j', found '{line}'") }),
            }
        }
        Pocset::from_relations(m, &relations)
    }
}
