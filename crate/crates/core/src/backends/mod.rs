//! Exact models of the four concrete groups and their almost invariant sets.
//!
//! Every set is held in a canonical normal form ([`Region`]) so equality,
//! emptiness and H-finiteness are decided structurally, never by sampling.

mod descriptor;
pub mod free;
pub mod grid;
pub mod intset;

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use descriptor::{Axis, Exception, SetSpec, Side};
pub use free::{FreeSet, Word};
pub use grid::GridSet;
pub use intset::IntSet;

/// Largest ball any operation will enumerate.
pub const BALL_CAP: usize = 2500;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BackendError {
    #[error("backend mismatch: {0} vs {1}")]
    Mismatch(Backend, Backend),
    #[error("unsupported stabilizer {stabilizer} for {backend} sets")]
    UnsupportedStabilizer { backend: Backend, stabilizer: Stabilizer },
    #[error("set is trivial: it or its complement is small")]
    Trivial,
    #[error("ball of radius {radius} has more than {cap} elements")]
    BallCap { radius: usize, cap: usize },
    #[error("invalid descriptor: {0}")]
    Descriptor(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Halfline,
    Dihedral,
    Grid,
    Free,
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Backend::Halfline => "halfline",
            Backend::Dihedral => "dihedral",
            Backend::Grid => "grid",
            Backend::Free => "free",
        };
        f.write_str(s)
    }
}

/// An element of one of the backend groups.
///
/// `Dihedral { shift, flip }` acts on ℤ by `n ↦ ±n + shift`, with `flip`
/// selecting the minus sign.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GroupElement {
    Halfline(i64),
    Dihedral { shift: i64, flip: bool },
    Grid(i64, i64),
    Free(Word),
}

impl fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupElement::Halfline(n) => write!(f, "{n}"),
            GroupElement::Dihedral { shift, flip } => {
                write!(f, "n->{}n{:+}", if *flip { "-" } else { "" }, shift)
            }
            GroupElement::Grid(x, y) => write!(f, "({x},{y})"),
            GroupElement::Free(w) => write!(f, "{w}"),
        }
    }
}

impl GroupElement {
    pub fn backend(&self) -> Backend {
        match self {
            GroupElement::Halfline(_) => Backend::Halfline,
            GroupElement::Dihedral { .. } => Backend::Dihedral,
            GroupElement::Grid(..) => Backend::Grid,
            GroupElement::Free(_) => Backend::Free,
        }
    }

    pub fn mul(&self, other: &GroupElement) -> Result<GroupElement, BackendError> {
        use GroupElement::*;
        Ok(match (self, other) {
            (Halfline(a), Halfline(b)) => Halfline(a + b),
            (Dihedral { shift: s, flip: e }, Dihedral { shift: t, flip: d }) => Dihedral {
                shift: if *e { s - t } else { s + t },
                flip: e != d,
            },
            (Grid(a, b), Grid(c, d)) => Grid(a + c, b + d),
            (Free(u), Free(v)) => Free(u.mul(v)),
            _ => return Err(BackendError::Mismatch(self.backend(), other.backend())),
        })
    }

    pub fn inverse(&self) -> GroupElement {
        use GroupElement::*;
        match self {
            Halfline(a) => Halfline(-a),
            Dihedral { shift, flip } => Dihedral { shift: if *flip { *shift } else { -shift }, flip: *flip },
            Grid(a, b) => Grid(-a, -b),
            Free(w) => Free(w.inverse()),
        }
    }

    /// Image of 0 under the action on ℤ (dihedral and halfline only).
    pub fn action_value(&self) -> Option<i64> {
        match self {
            GroupElement::Halfline(n) => Some(*n),
            GroupElement::Dihedral { shift, .. } => Some(*shift),
            _ => None,
        }
    }
}

impl Backend {
    pub fn identity(self) -> GroupElement {
        match self {
            Backend::Halfline => GroupElement::Halfline(0),
            Backend::Dihedral => GroupElement::Dihedral { shift: 0, flip: false },
            Backend::Grid => GroupElement::Grid(0, 0),
            Backend::Free => GroupElement::Free(Word::identity()),
        }
    }

    /// The fixed generating set; Cayley edges join `g` and `g·s`.
    pub fn generators(self) -> Vec<GroupElement> {
        match self {
            Backend::Halfline => vec![GroupElement::Halfline(1), GroupElement::Halfline(-1)],
            Backend::Dihedral => vec![
                GroupElement::Dihedral { shift: 0, flip: true },
                GroupElement::Dihedral { shift: 1, flip: true },
            ],
            Backend::Grid => vec![
                GroupElement::Grid(1, 0),
                GroupElement::Grid(-1, 0),
                GroupElement::Grid(0, 1),
                GroupElement::Grid(0, -1),
            ],
            Backend::Free => free::LETTERS.iter().map(|&x| GroupElement::Free(Word::letter(x))).collect(),
        }
    }

    /// Elements of word length at most `radius`, ordered by length and then
    /// by the element order.
    pub fn ball(self, radius: usize) -> Result<Vec<GroupElement>, BackendError> {
        Ok(self.ball_with_lengths(radius)?.into_iter().map(|(g, _)| g).collect())
    }

    pub fn ball_with_lengths(self, radius: usize) -> Result<Vec<(GroupElement, usize)>, BackendError> {
        let gens = self.generators();
        let mut seen: HashMap<GroupElement, usize> = HashMap::new();
        let mut queue = VecDeque::new();
        seen.insert(self.identity(), 0);
        queue.push_back(self.identity());
        while let Some(g) = queue.pop_front() {
            let d = seen[&g];
            if d == radius {
                continue;
            }
            for s in &gens {
                let h = g.mul(s).expect("generators share the backend");
                if !seen.contains_key(&h) {
                    seen.insert(h.clone(), d + 1);
                    if seen.len() > BALL_CAP {
                        return Err(BackendError::BallCap { radius, cap: BALL_CAP });
                    }
                    queue.push_back(h);
                }
            }
        }
        let mut out: Vec<(GroupElement, usize)> = seen.into_iter().collect();
        out.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
        Ok(out)
    }
}

/// Canonical exact subset of a backend group.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Region {
    Halfline(IntSet),
    /// Membership of `(shift, flip)` is read from `pos` or `neg` by the flip.
    Dihedral { pos: IntSet, neg: IntSet },
    Grid(GridSet),
    Free(FreeSet),
}

impl Region {
    pub fn backend(&self) -> Backend {
        match self {
            Region::Halfline(_) => Backend::Halfline,
            Region::Dihedral { .. } => Backend::Dihedral,
            Region::Grid(_) => Backend::Grid,
            Region::Free(_) => Backend::Free,
        }
    }

    pub fn empty(backend: Backend) -> Region {
        match backend {
            Backend::Halfline => Region::Halfline(IntSet::empty()),
            Backend::Dihedral => Region::Dihedral { pos: IntSet::empty(), neg: IntSet::empty() },
            Backend::Grid => Region::Grid(GridSet::from_x(&IntSet::empty())),
            Backend::Free => Region::Free(FreeSet::empty()),
        }
    }

    /// The single point `g`, or for `grid` nothing (points are not H-invariant).
    pub fn point(g: &GroupElement) -> Region {
        match g {
            GroupElement::Halfline(n) => Region::Halfline(IntSet::point(*n)),
            GroupElement::Dihedral { shift, flip } => {
                let p = IntSet::point(*shift);
                if *flip {
                    Region::Dihedral { pos: IntSet::empty(), neg: p }
                } else {
                    Region::Dihedral { pos: p, neg: IntSet::empty() }
                }
            }
            GroupElement::Grid(x, y) => {
                let a = GridSet::from_x(&IntSet::point(*x));
                Region::Grid(a.combine(&GridSet::from_y(&IntSet::point(*y)), |p, q| p && q))
            }
            GroupElement::Free(w) => Region::Free(FreeSet::point(w)),
        }
    }

    pub fn contains(&self, g: &GroupElement) -> bool {
        match (self, g) {
            (Region::Halfline(s), GroupElement::Halfline(n)) => s.contains(*n),
            (Region::Dihedral { pos, neg }, GroupElement::Dihedral { shift, flip }) => {
                if *flip {
                    neg.contains(*shift)
                } else {
                    pos.contains(*shift)
                }
            }
            (Region::Grid(s), GroupElement::Grid(x, y)) => s.contains(*x, *y),
            (Region::Free(s), GroupElement::Free(w)) => s.contains(w),
            _ => false,
        }
    }

    pub fn complement(&self) -> Region {
        match self {
            Region::Halfline(s) => Region::Halfline(s.complement()),
            Region::Dihedral { pos, neg } => Region::Dihedral { pos: pos.complement(), neg: neg.complement() },
            Region::Grid(s) => Region::Grid(s.complement()),
            Region::Free(s) => Region::Free(s.complement()),
        }
    }

    pub fn combine(&self, other: &Region, op: impl Fn(bool, bool) -> bool + Copy) -> Result<Region, BackendError> {
        Ok(match (self, other) {
            (Region::Halfline(a), Region::Halfline(b)) => Region::Halfline(a.combine(b, op)),
            (Region::Dihedral { pos: p1, neg: n1 }, Region::Dihedral { pos: p2, neg: n2 }) => {
                Region::Dihedral { pos: p1.combine(p2, op), neg: n1.combine(n2, op) }
            }
            (Region::Grid(a), Region::Grid(b)) => Region::Grid(a.combine(b, op)),
            (Region::Free(a), Region::Free(b)) => Region::Free(a.combine(b, op)),
            _ => return Err(BackendError::Mismatch(self.backend(), other.backend())),
        })
    }

    pub fn intersection(&self, other: &Region) -> Result<Region, BackendError> {
        self.combine(other, |a, b| a && b)
    }

    pub fn symmetric_difference(&self, other: &Region) -> Result<Region, BackendError> {
        self.combine(other, |a, b| a != b)
    }

    pub fn is_empty(&self) -> bool {
        match self {
            Region::Halfline(s) => s.is_empty(),
            Region::Dihedral { pos, neg } => pos.is_empty() && neg.is_empty(),
            Region::Grid(s) => s.is_empty(),
            Region::Free(s) => s.is_empty(),
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            Region::Halfline(s) => s.is_finite(),
            Region::Dihedral { pos, neg } => pos.is_finite() && neg.is_finite(),
            Region::Grid(s) => s.is_finite(),
            Region::Free(s) => s.is_finite(),
        }
    }

    /// Left translate `g·A`.
    pub fn translate(&self, g: &GroupElement) -> Result<Region, BackendError> {
        Ok(match (self, g) {
            (Region::Halfline(s), GroupElement::Halfline(n)) => Region::Halfline(s.shift(*n)),
            (Region::Dihedral { pos, neg }, GroupElement::Dihedral { shift, flip }) => {
                if *flip {
                    Region::Dihedral { pos: neg.reflect().shift(*shift), neg: pos.reflect().shift(*shift) }
                } else {
                    Region::Dihedral { pos: pos.shift(*shift), neg: neg.shift(*shift) }
                }
            }
            (Region::Grid(s), GroupElement::Grid(x, y)) => Region::Grid(s.translate(*x, *y)),
            (Region::Free(s), GroupElement::Free(w)) => Region::Free(s.translate(w)),
            _ => return Err(BackendError::Mismatch(self.backend(), g.backend())),
        })
    }
}

/// Declared stabilizer `H` of a set: trivial, or infinite cyclic.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stabilizer {
    Trivial,
    Cyclic([i64; 2]),
}

impl fmt::Display for Stabilizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stabilizer::Trivial => write!(f, "trivial"),
            Stabilizer::Cyclic([x, y]) => write!(f, "<({x},{y})>"),
        }
    }
}

/// Exact H-finiteness: `c` is contained in finitely many cosets `Hg`.
pub fn is_small(c: &Region, h: &Stabilizer) -> Result<bool, BackendError> {
    match (c, h) {
        (_, Stabilizer::Trivial) => Ok(c.is_finite()),
        (Region::Grid(s), Stabilizer::Cyclic([dx, 0])) if *dx != 0 => Ok(s.rows_finite()),
        (Region::Grid(s), Stabilizer::Cyclic([0, dy])) if *dy != 0 => Ok(s.columns_finite()),
        _ => Err(BackendError::UnsupportedStabilizer { backend: c.backend(), stabilizer: *h }),
    }
}

/// Sign of a set in a corner: `true` for the set itself, `false` for its complement.
pub type Signs = (bool, bool);

/// An H-almost invariant set in canonical form together with its declared stabilizer.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct SetDescriptor {
    region: Region,
    stabilizer: Stabilizer,
}

impl SetDescriptor {
    /// Builds a descriptor, checking H-invariance but not nontriviality.
    pub fn new(region: Region, stabilizer: Stabilizer) -> Result<Self, BackendError> {
        let ok = match (&region, &stabilizer) {
            (Region::Grid(s), Stabilizer::Cyclic([_, 0])) => s.as_y_set().is_some(),
            (Region::Grid(s), Stabilizer::Cyclic([0, _])) => s.as_x_set().is_some(),
            (Region::Grid(_), Stabilizer::Trivial) => true,
            (_, Stabilizer::Trivial) => true,
            _ => false,
        };
        if !ok {
            return Err(BackendError::UnsupportedStabilizer { backend: region.backend(), stabilizer });
        }
        Ok(SetDescriptor { region, stabilizer })
    }

    /// Builds a descriptor and rejects trivial sets.
    pub fn nontrivial(region: Region, stabilizer: Stabilizer) -> Result<Self, BackendError> {
        let d = Self::new(region, stabilizer)?;
        if d.is_trivial()? {
            return Err(BackendError::Trivial);
        }
        Ok(d)
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn stabilizer(&self) -> Stabilizer {
        self.stabilizer
    }

    pub fn backend(&self) -> Backend {
        self.region.backend()
    }

    pub fn contains(&self, g: &GroupElement) -> bool {
        self.region.contains(g)
    }

    pub fn complement(&self) -> SetDescriptor {
        SetDescriptor { region: self.region.complement(), stabilizer: self.stabilizer }
    }

    pub fn is_trivial(&self) -> Result<bool, BackendError> {
        Ok(is_small(&self.region, &self.stabilizer)? || is_small(&self.region.complement(), &self.stabilizer)?)
    }

    /// Toggles the H-orbit of `g`: the point itself, or for grid sets the
    /// whole line through `g` along the stabilizer.
    pub fn toggle_orbit(&self, g: &GroupElement) -> Result<SetDescriptor, BackendError> {
        let orbit = match (g, self.stabilizer) {
            (GroupElement::Grid(_, y), Stabilizer::Cyclic([_, 0])) => Region::Grid(GridSet::from_y(&IntSet::point(*y))),
            (GroupElement::Grid(x, _), Stabilizer::Cyclic([0, _])) => Region::Grid(GridSet::from_x(&IntSet::point(*x))),
            _ => Region::point(g),
        };
        Ok(SetDescriptor { region: self.region.symmetric_difference(&orbit)?, stabilizer: self.stabilizer })
    }
}

/// Left translation `g·A`; the stabilizer becomes `gHg⁻¹`, which for the
/// supported backends is `H` again.
pub fn act(g: &GroupElement, a: &SetDescriptor) -> Result<SetDescriptor, BackendError> {
    Ok(SetDescriptor { region: a.region.translate(g)?, stabilizer: a.stabilizer })
}

/// Canonical form of `A^s1 ∩ B^s2`.
pub fn corner(a: &SetDescriptor, b: &SetDescriptor, signs: Signs) -> Result<Region, BackendError> {
    let (s1, s2) = signs;
    a.region.combine(&b.region, move |x, y| (x == s1) && (y == s2))
}

/// True iff some Cayley edge with an endpoint in `N_R(center)` has exactly one
/// endpoint in `A`.
pub fn coboundary_meets_ball_at(
    a: &SetDescriptor,
    center: &GroupElement,
    ball: &[GroupElement],
    gens: &[GroupElement],
) -> bool {
    ball.iter().any(|b| {
        let g = center.mul(b).expect("same backend");
        let inside = a.contains(&g);
        gens.iter().any(|s| a.contains(&g.mul(s).expect("same backend")) != inside)
    })
}

pub fn coboundary_meets_ball(a: &SetDescriptor, radius: usize) -> Result<bool, BackendError> {
    let backend = a.backend();
    let ball = backend.ball(radius)?;
    Ok(coboundary_meets_ball_at(a, &backend.identity(), &ball, &backend.generators()))
}

/// Word-metric distance from `x` to the nearest element outside `a`, searching
/// up to `limit`.
pub fn distance_to_complement(a: &Region, x: &GroupElement, limit: usize) -> Option<usize> {
    let gens = x.backend().generators();
    let mut seen = HashSet::new();
    let mut frontier = vec![x.clone()];
    seen.insert(x.clone());
    for d in 0..=limit {
        if frontier.iter().any(|g| !a.contains(g)) {
            return Some(d);
        }
        let mut next = Vec::new();
        for g in &frontier {
            for s in &gens {
                let h = g.mul(s).expect("same backend");
                if seen.insert(h.clone()) {
                    next.push(h);
                }
            }
        }
        frontier = next;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(a: i64) -> SetDescriptor {
        SetDescriptor::new(Region::Halfline(IntSet::at_most(a)), Stabilizer::Trivial).unwrap()
    }

    #[test]
    fn halfline_translation_of_ray() {
        let moved = act(&GroupElement::Halfline(3), &line(0)).unwrap();
        assert_eq!(moved, line(3));
    }

    #[test]
    fn dihedral_reflection_inverts_l0() {
        let l0 = SetDescriptor::new(
            Region::Dihedral { pos: IntSet::at_most(0), neg: IntSet::at_most(0) },
            Stabilizer::Trivial,
        )
        .unwrap();
        let g = GroupElement::Dihedral { shift: 1, flip: true };
        let image = act(&g, &l0).unwrap();
        assert_eq!(image, l0.complement());
        // pointwise oracle on a ball of radius 10
        for x in Backend::Dihedral.ball(10).unwrap() {
            let pre = g.inverse().mul(&x).unwrap();
            assert_eq!(image.contains(&x), l0.contains(&pre));
            // g·x acts on ℤ as n ↦ 1 - n composed with x
            assert_eq!(g.mul(&x).unwrap().action_value(), Some(1 - x.action_value().unwrap()));
        }
    }

    #[test]
    fn dihedral_composition_law() {
        let a = GroupElement::Dihedral { shift: 3, flip: true };
        let b = GroupElement::Dihedral { shift: -2, flip: false };
        // (s,ε)(s',ε') = (s + ε s', ε ε')
        assert_eq!(a.mul(&b).unwrap(), GroupElement::Dihedral { shift: 5, flip: true });
        assert_eq!(a.mul(&a.inverse()).unwrap(), Backend::Dihedral.identity());
        assert_eq!(b.mul(&b.inverse()).unwrap(), Backend::Dihedral.identity());
    }

    #[test]
    fn ball_sizes() {
        let h: Vec<GroupElement> = [0, -1, 1, -2, 2].into_iter().map(GroupElement::Halfline).collect();
        assert_eq!(Backend::Halfline.ball(2).unwrap(), h);
        assert_eq!(Backend::Free.ball(2).unwrap().len(), 17);
        assert_eq!(Backend::Grid.ball(1).unwrap().len(), 5);
        assert_eq!(Backend::Dihedral.ball(3).unwrap().len(), 7);
    }

    #[test]
    fn coboundary_examples() {
        assert!(coboundary_meets_ball(&line(0), 2).unwrap());
        assert!(!coboundary_meets_ball(&line(10), 2).unwrap());
        let cone_a = SetDescriptor::new(Region::Free(FreeSet::cone(&Word::parse("a").unwrap())), Stabilizer::Trivial)
            .unwrap();
        assert!(coboundary_meets_ball(&cone_a, 1).unwrap());
    }

    #[test]
    fn grid_smallness() {
        let quadrant = Region::Grid(
            GridSet::from_x(&IntSet::at_least(1)).combine(&GridSet::from_y(&IntSet::at_least(1)), |a, b| a && b),
        );
        assert!(!is_small(&quadrant, &Stabilizer::Cyclic([1, 0])).unwrap());
        let row = Region::Grid(GridSet::from_y(&IntSet::point(3)));
        assert!(is_small(&row, &Stabilizer::Cyclic([1, 0])).unwrap());
        assert!(!is_small(&row, &Stabilizer::Cyclic([0, 1])).unwrap());
        assert!(is_small(&row, &Stabilizer::Cyclic([1, 1])).is_err());
    }

    #[test]
    fn mismatch_is_an_error() {
        let g = GroupElement::Grid(1, 0);
        assert!(matches!(act(&g, &line(0)), Err(BackendError::Mismatch(..))));
    }

    #[test]
    fn distance_to_complement_on_rays() {
        let r = Region::Halfline(IntSet::at_most(0));
        assert_eq!(distance_to_complement(&r, &GroupElement::Halfline(-3), 10), Some(4));
        assert_eq!(distance_to_complement(&r, &GroupElement::Halfline(5), 10), Some(0));
    }
}
