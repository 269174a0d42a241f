//! How two almost invariant sets sit relative to each other: the corner
//! pattern, almost inclusion, good position and translate symmetries.

use std::collections::HashSet;

use fixedbitset::FixedBitSet;
use serde::Serialize;
use thiserror::Error;

use crate::backends::{act, corner, is_small, BackendError, GroupElement, Region, SetDescriptor, Signs};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RelationError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("trivial set {0}")]
    Trivial(String),
}

/// Corner order used throughout: `(+,+)`, `(−,+)`, `(+,−)`, `(−,−)`, where
/// `+` is the set and `−` its complement.
pub const CORNERS: [Signs; 4] = [(true, true), (false, true), (true, false), (false, false)];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CornerState {
    Empty,
    Small,
    Large,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RelationKind {
    Equal,
    /// The right set is the complement of the left.
    Complementary,
    /// The named corner is empty.
    Nested { empty: (bool, bool) },
    /// The named corner is the only small one and it is nonempty.
    SemiNested { small: (bool, bool) },
    Crossing,
    DoubleSmallViolation,
}

impl RelationKind {
    pub fn name(&self) -> &'static str {
        match self {
            RelationKind::Equal => "equal",
            RelationKind::Complementary => "complementary",
            RelationKind::Nested { .. } => "nested",
            RelationKind::SemiNested { .. } => "semi_nested",
            RelationKind::Crossing => "crossing",
            RelationKind::DoubleSmallViolation => "double_small_violation",
        }
    }

    /// Nested or crossing (or equal up to complement): the only kinds allowed
    /// between translates of a set in very good position.
    pub fn is_dichotomous(&self) -> bool {
        !matches!(self, RelationKind::SemiNested { .. } | RelationKind::DoubleSmallViolation)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PairRelation {
    pub kind: RelationKind,
    /// Corner states in [`CORNERS`] order, smallness against the left stabilizer.
    pub corners: [CornerState; 4],
    /// Smallness of each corner against the right stabilizer.
    pub small_wrt_right: [bool; 4],
}

impl PairRelation {
    pub fn state(&self, signs: Signs) -> CornerState {
        self.corners[corner_index(signs)]
    }

    fn small_count(&self) -> usize {
        self.corners.iter().filter(|c| **c != CornerState::Large).count()
    }
}

pub fn corner_index(signs: Signs) -> usize {
    CORNERS.iter().position(|&c| c == signs).expect("all sign pairs are listed")
}

fn corner_states(a: &SetDescriptor, b: &SetDescriptor) -> Result<([CornerState; 4], [bool; 4]), RelationError> {
    let mut states = [CornerState::Large; 4];
    let mut right = [false; 4];
    for (k, &signs) in CORNERS.iter().enumerate() {
        let c = corner(a, b, signs)?;
        let small_left = is_small(&c, &a.stabilizer())?;
        right[k] = is_small(&c, &b.stabilizer())?;
        states[k] = if c.is_empty() {
            CornerState::Empty
        } else if small_left {
            CornerState::Small
        } else {
            CornerState::Large
        };
    }
    Ok((states, right))
}

fn require_nontrivial(a: &SetDescriptor) -> Result<(), RelationError> {
    if a.is_trivial()? {
        Err(RelationError::Trivial(a.to_string()))
    } else {
        Ok(())
    }
}

pub fn classify_pair(a: &SetDescriptor, b: &SetDescriptor) -> Result<PairRelation, RelationError> {
    require_nontrivial(a)?;
    require_nontrivial(b)?;
    Ok(classify_unchecked(a, b)?)
}

/// [`classify_pair`] for operands already known to be nontrivial.
pub fn classify_unchecked(a: &SetDescriptor, b: &SetDescriptor) -> Result<PairRelation, RelationError> {
    let (corners, small_wrt_right) = corner_states(a, b)?;
    let empties: Vec<Signs> =
        CORNERS.iter().zip(corners.iter()).filter(|(_, s)| **s == CornerState::Empty).map(|(c, _)| *c).collect();
    let smalls: Vec<Signs> =
        CORNERS.iter().zip(corners.iter()).filter(|(_, s)| **s == CornerState::Small).map(|(c, _)| *c).collect();
    let kind = if empties.contains(&(true, false)) && empties.contains(&(false, true)) {
        RelationKind::Equal
    } else if empties.contains(&(true, true)) && empties.contains(&(false, false)) {
        RelationKind::Complementary
    } else if let Some(&e) = empties.first() {
        RelationKind::Nested { empty: e }
    } else if smalls.is_empty() {
        RelationKind::Crossing
    } else if smalls.len() == 1 {
        RelationKind::SemiNested { small: smalls[0] }
    } else {
        RelationKind::DoubleSmallViolation
    };
    Ok(PairRelation { kind, corners, small_wrt_right })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Leq {
    pub holds: bool,
    /// The pair has two small corners and no empty one.
    pub violation: bool,
}

/// Almost inclusion read off a computed corner pattern.
pub fn leq_from(rel: &PairRelation) -> Leq {
    let c = rel.state((true, false));
    let violation = rel.kind == RelationKind::DoubleSmallViolation;
    let holds = match c {
        CornerState::Empty => true,
        CornerState::Small => rel.small_count() == 1,
        CornerState::Large => false,
    };
    Leq { holds, violation }
}

/// Almost inclusion between every choice of sides. `forward[s][t]` is
/// `A^s ≤ B^t` and `backward[t][s]` is `B^t ≤ A^s`, with index 0 for the set
/// itself and 1 for its complement.
pub fn sign_orders(rel: &PairRelation) -> ([[bool; 2]; 2], [[bool; 2]; 2]) {
    let left_small = rel.small_count();
    let right_small = rel.small_wrt_right.iter().filter(|s| **s).count();
    let mut forward = [[false; 2]; 2];
    let mut backward = [[false; 2]; 2];
    for (si, s) in [true, false].into_iter().enumerate() {
        for (ti, t) in [true, false].into_iter().enumerate() {
            let k = corner_index((s, !t));
            forward[si][ti] = rel.corners[k] == CornerState::Empty
                || (rel.corners[k] == CornerState::Small && left_small == 1);
            let k = corner_index((!s, t));
            backward[ti][si] = rel.corners[k] == CornerState::Empty || (rel.small_wrt_right[k] && right_small == 1);
        }
    }
    (forward, backward)
}

/// `A ≤ B` iff `A ∩ B*` is empty, or is small and the only small corner.
pub fn leq(a: &SetDescriptor, b: &SetDescriptor) -> Result<Leq, RelationError> {
    Ok(leq_from(&classify_pair(a, b)?))
}

/// Symmetric difference small with respect to the stabilizer of `a`.
pub fn equivalent(a: &SetDescriptor, b: &SetDescriptor) -> Result<bool, RelationError> {
    let d = a.region().symmetric_difference(b.region())?;
    Ok(is_small(&d, &a.stabilizer())?)
}

/// One translate `g·X_i` of a family member.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TranslateRef {
    pub member: usize,
    pub element: String,
    pub set: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StarViolation {
    pub left: TranslateRef,
    pub right: TranslateRef,
}

/// Translates `g·X_i` for `g` in `ball`, deduplicated, in ball order.
pub fn family_translates(
    family: &[SetDescriptor],
    ball: &[GroupElement],
) -> Result<Vec<(usize, GroupElement, SetDescriptor)>, RelationError> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, x) in family.iter().enumerate() {
        for g in ball {
            let t = act(g, x)?;
            if seen.insert(t.clone()) {
                out.push((i, g.clone(), t));
            }
        }
    }
    Ok(out)
}

/// Every pair of translates `(g·A, h·B)`, `g, h` in the ball, with two small
/// corners and no empty corner. Empty output means good position at this radius.
pub fn check_condition_star(family: &[SetDescriptor], radius: usize) -> Result<Vec<StarViolation>, RelationError> {
    for x in family {
        require_nontrivial(x)?;
    }
    let Some(first) = family.first() else { return Ok(Vec::new()) };
    let ball = first.backend().ball(radius)?;
    let translates = family_translates(family, &ball)?;
    let mut out = Vec::new();
    for (k, (i, g, a)) in translates.iter().enumerate() {
        for (j, h, b) in &translates[k + 1..] {
            if classify_unchecked(a, b)?.kind == RelationKind::DoubleSmallViolation {
                out.push(StarViolation {
                    left: TranslateRef { member: *i, element: g.to_string(), set: a.to_string() },
                    right: TranslateRef { member: *j, element: h.to_string(), set: b.to_string() },
                });
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct PartialOrderReport {
    pub antisymmetry_witness: Option<(usize, usize)>,
    pub transitivity_witness: Option<(usize, usize, usize)>,
}

impl PartialOrderReport {
    pub fn passed(&self) -> bool {
        self.antisymmetry_witness.is_none() && self.transitivity_witness.is_none()
    }
}

/// Checks antisymmetry and transitivity of a relation given as up-sets
/// (`up[a]` contains `b` iff `a ≤ b`).
pub fn verify_partial_order(up: &[FixedBitSet]) -> PartialOrderReport {
    let mut report = PartialOrderReport::default();
    for a in 0..up.len() {
        for b in up[a].ones() {
            if a != b && report.antisymmetry_witness.is_none() && up[b].contains(a) {
                report.antisymmetry_witness = Some((a.min(b), a.max(b)));
            }
            if report.transitivity_witness.is_none() && !up[b].is_subset(&up[a]) {
                let c = up[b].difference(&up[a]).next().expect("nonempty difference");
                report.transitivity_witness = Some((a, b, c));
            }
        }
    }
    report
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SymmetryReport {
    pub radius: usize,
    /// `gA = A`.
    pub stabilizer: Vec<String>,
    /// `gA ∼ A`, including the stabilizer witnesses.
    pub k0: Vec<String>,
    /// `gA ∼ A*`, including the inverters.
    pub k_minus_k0: Vec<String>,
    /// `gA = A*`.
    pub inverters: Vec<String>,
    pub others: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Symmetries {
    pub radius: usize,
    pub stabilizer: Vec<GroupElement>,
    pub k0: Vec<GroupElement>,
    pub k_minus_k0: Vec<GroupElement>,
    pub inverters: Vec<GroupElement>,
    pub others: Vec<GroupElement>,
}

impl Symmetries {
    pub fn report(&self) -> SymmetryReport {
        let s = |v: &[GroupElement]| v.iter().map(|g| g.to_string()).collect();
        SymmetryReport {
            radius: self.radius,
            stabilizer: s(&self.stabilizer),
            k0: s(&self.k0),
            k_minus_k0: s(&self.k_minus_k0),
            inverters: s(&self.inverters),
            others: s(&self.others),
        }
    }
}

/// Sorts the ball elements by how they move `a`. Claims hold within the radius only.
pub fn analyze_symmetries(a: &SetDescriptor, radius: usize) -> Result<Symmetries, RelationError> {
    require_nontrivial(a)?;
    let mut out = Symmetries {
        radius,
        stabilizer: Vec::new(),
        k0: Vec::new(),
        k_minus_k0: Vec::new(),
        inverters: Vec::new(),
        others: Vec::new(),
    };
    let star = a.complement();
    for g in a.backend().ball(radius)? {
        let t = act(&g, a)?;
        if t == *a {
            out.stabilizer.push(g.clone());
        }
        if t == star {
            out.inverters.push(g.clone());
        }
        if equivalent(a, &t)? {
            out.k0.push(g);
        } else if equivalent(&star, &t)? {
            out.k_minus_k0.push(g);
        } else {
            out.others.push(g);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ParallelOrbit {
    pub first: usize,
    pub second: usize,
    pub element: String,
    /// The translate is equivalent to the complement of the second set.
    pub complemented: bool,
}

/// Pairs `i < j` such that some `g·X_i` in the ball is equivalent to `X_j` or `X_j*`.
pub fn parallel_orbits(family: &[SetDescriptor], radius: usize) -> Result<Vec<ParallelOrbit>, RelationError> {
    let mut out = Vec::new();
    let Some(first) = family.first() else { return Ok(out) };
    let ball = first.backend().ball(radius)?;
    for i in 0..family.len() {
        for j in i + 1..family.len() {
            for g in &ball {
                let t = act(g, &family[i])?;
                let hit = if equivalent(&t, &family[j])? {
                    Some(false)
                } else if equivalent(&t, &family[j].complement())? {
                    Some(true)
                } else {
                    None
                };
                if let Some(complemented) = hit {
                    out.push(ParallelOrbit { first: i, second: j, element: g.to_string(), complemented });
                    break;
                }
            }
        }
    }
    Ok(out)
}

/// Smallness of `region` with respect to each of two stabilizers, for the
/// symmetry check between a pair's two stabilizers.
pub fn smallness_both(region: &Region, a: &SetDescriptor, b: &SetDescriptor) -> Result<(bool, bool), RelationError> {
    Ok((is_small(region, &a.stabilizer())?, is_small(region, &b.stabilizer())?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::{FreeSet, GridSet, IntSet, Stabilizer, Word};

    fn ray(a: i64) -> SetDescriptor {
        SetDescriptor::new(Region::Halfline(IntSet::at_most(a)), Stabilizer::Trivial).unwrap()
    }

    fn bad_rep() -> SetDescriptor {
        SetDescriptor::new(
            Region::Halfline(IntSet::at_most(0).symmetric_difference(&IntSet::point(2))),
            Stabilizer::Trivial,
        )
        .unwrap()
    }

    fn free(cones: &[&str], exc: &[&str]) -> SetDescriptor {
        let w = |v: &[&str]| v.iter().map(|s| Word::parse(s).unwrap()).collect::<Vec<_>>();
        SetDescriptor::new(Region::Free(FreeSet::from_parts(&w(cones), &w(exc))), Stabilizer::Trivial).unwrap()
    }

    #[test]
    fn rays_are_nested() {
        let r = classify_pair(&ray(0), &ray(3)).unwrap();
        assert_eq!(r.kind, RelationKind::Nested { empty: (true, false) });
        assert!(leq(&ray(0), &ray(3)).unwrap().holds);
        let back = leq(&ray(3), &ray(0)).unwrap();
        assert!(!back.holds && !back.violation);
    }

    #[test]
    fn bad_representative_violates() {
        let y = bad_rep();
        let y1 = act(&GroupElement::Halfline(1), &y).unwrap();
        let r = classify_pair(&y, &y1).unwrap();
        assert_eq!(r.kind, RelationKind::DoubleSmallViolation);
        let l = leq(&y, &y1).unwrap();
        assert!(!l.holds && l.violation);
        // only neighbouring translates Y + k, Y + k + 1 violate, for k in -4..4
        assert_eq!(check_condition_star(&[y], 4).unwrap().len(), 8);
        assert!(check_condition_star(&[ray(0)], 4).unwrap().is_empty());
    }

    #[test]
    fn almost_inclusion_beyond_inclusion() {
        let a = free(&["a"], &["B"]);
        let b = free(&["a", "b"], &[]);
        let r = classify_pair(&a, &b).unwrap();
        assert_eq!(r.kind, RelationKind::SemiNested { small: (true, false) });
        assert!(leq(&a, &b).unwrap().holds);
        assert!(!leq(&b, &a).unwrap().holds);
    }

    #[test]
    fn grid_half_planes_cross() {
        let y = SetDescriptor::new(Region::Grid(GridSet::from_y(&IntSet::at_least(1))), Stabilizer::Cyclic([1, 0]))
            .unwrap();
        let x = SetDescriptor::new(Region::Grid(GridSet::from_x(&IntSet::at_least(1))), Stabilizer::Cyclic([0, 1]))
            .unwrap();
        let r = classify_pair(&y, &x).unwrap();
        assert_eq!(r.kind, RelationKind::Crossing);
        assert_eq!(r.small_wrt_right, [false; 4]);
    }

    #[test]
    fn equivalence_examples() {
        assert!(equivalent(&ray(0), &bad_rep()).unwrap());
        assert!(!equivalent(&ray(0), &ray(0).complement()).unwrap());
        let y0 = SetDescriptor::new(Region::Grid(GridSet::from_y(&IntSet::at_least(0))), Stabilizer::Cyclic([1, 0]))
            .unwrap();
        let y5 = SetDescriptor::new(Region::Grid(GridSet::from_y(&IntSet::at_least(5))), Stabilizer::Cyclic([1, 0]))
            .unwrap();
        assert!(equivalent(&y0, &y5).unwrap());
    }

    #[test]
    fn symmetries_of_rays() {
        let s = analyze_symmetries(&ray(0), 3).unwrap();
        assert_eq!(s.stabilizer, vec![GroupElement::Halfline(0)]);
        assert_eq!(s.k0.len(), 7);
        assert!(s.inverters.is_empty());
        let d = SetDescriptor::new(
            Region::Dihedral { pos: IntSet::at_most(0), neg: IntSet::at_most(0) },
            Stabilizer::Trivial,
        )
        .unwrap();
        let s = analyze_symmetries(&d, 3).unwrap();
        assert_eq!(s.inverters, vec![GroupElement::Dihedral { shift: 1, flip: true }]);
    }

    #[test]
    fn parallel_orbit_detection() {
        let fam = [free(&["a"], &[]), free(&["a"], &["B"])];
        let p = parallel_orbits(&fam, 2).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].element, "e");
    }

    #[test]
    fn corrupted_order_names_a_triple() {
        let mut up = vec![FixedBitSet::with_capacity(3); 3];
        for (i, row) in up.iter_mut().enumerate() {
            row.insert(i);
        }
        up[0].insert(1);
        up[1].insert(2);
        let r = verify_partial_order(&up);
        assert_eq!(r.transitivity_witness, Some((0, 1, 2)));
        assert!(!r.passed());
    }

    #[test]
    fn trivial_sets_are_rejected() {
        let finite = SetDescriptor::new(Region::Halfline(IntSet::point(3)), Stabilizer::Trivial).unwrap();
        assert!(matches!(classify_pair(&finite, &ray(0)), Err(RelationError::Trivial(_))));
    }
}
