//! A finite slice of the translates of a family, with both orders on it and
//! the completion of basic vertices for almost inclusion.

use std::collections::{HashMap, HashSet};

use fixedbitset::FixedBitSet;
use serde::Serialize;
use thiserror::Error;

use crate::backends::{act, coboundary_meets_ball_at, distance_to_complement, BackendError, GroupElement, SetDescriptor};
use crate::cubecomplex::Ultrafilter;
use crate::instance::Instance;
use crate::pocset::{complement, Pocset, PocsetError};
use crate::relations::{classify_unchecked, corner_index, verify_partial_order, CornerState, PartialOrderReport, RelationError, RelationKind};

/// Branch cap for the `all` completion policy.
pub const MAX_BRANCHES: usize = 64;
const MAX_COMPLETION_STEPS: usize = 20_000;

#[derive(Debug, Error)]
pub enum WindowError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Relation(#[from] RelationError),
    #[error("inclusion order is not a pocset: {0}")]
    Inclusion(PocsetError),
    #[error("Condition (*) fails on this window; run repair")]
    NotGoodPosition,
    #[error("almost inclusion is not a partial order on this window: {0:?}")]
    NotPartialOrder(PartialOrderReport),
    #[error("window too small: containment needs radius {needed} but the window radius is {radius}")]
    TooSmall { needed: usize, radius: usize },
    #[error("{g} is outside the radius-{radius} ball")]
    OutsideBall { g: String, radius: usize },
    #[error("completion at {g} broke the ultrafilter conditions")]
    Completion { g: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Origin {
    pub member: usize,
    pub element: String,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct KindCensus {
    pub nested: usize,
    pub semi_nested: usize,
    pub crossing: usize,
    pub double_small_violation: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Bounds {
    pub bound_r: usize,
    pub bound_d: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    Lex,
    All,
}

#[derive(Clone, Debug)]
pub struct Window {
    instance: Instance,
    radius: usize,
    margin: usize,
    ball: Vec<GroupElement>,
    elements: Vec<SetDescriptor>,
    origins: Vec<(usize, GroupElement)>,
    index: HashMap<SetDescriptor, usize>,
    incl: Pocset,
    almost: Option<Pocset>,
    violations: Vec<(usize, usize)>,
    semi_nested: Vec<(usize, usize)>,
    census: KindCensus,
    order_report: Option<PartialOrderReport>,
    bounds: Result<Bounds, (usize, usize)>,
}

/// One completed basic vertex and the free choices that produced it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BasicVertex {
    pub g: GroupElement,
    pub vertex: Ultrafilter,
    pub choices: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Completion {
    pub g: GroupElement,
    pub branches: Vec<BasicVertex>,
    /// The `all` policy hit its branch cap.
    pub truncated: bool,
    /// Elements of `E_R` at `g`.
    pub near: FixedBitSet,
}

impl Window {
    pub fn build(instance: &Instance, radius: usize, margin: usize) -> Result<Window, WindowError> {
        let backend = instance.backend;
        let outer = radius + margin;
        let ball = backend.ball(outer)?;
        let gens = backend.generators();
        let identity = backend.identity();
        let mut elements = Vec::new();
        let mut origins = Vec::new();
        let mut index = HashMap::new();
        for (member, x) in instance.family.iter().enumerate() {
            for g in &ball {
                let t = act(g, x)?;
                if index.contains_key(&t) || !coboundary_meets_ball_at(&t, &identity, &ball, &gens) {
                    continue;
                }
                let star = t.complement();
                index.insert(t.clone(), elements.len());
                index.insert(star.clone(), elements.len() + 1);
                elements.push(t);
                elements.push(star);
                origins.push((member, g.clone()));
            }
        }
        let n = elements.len();
        let m = n / 2;
        let mut incl_up = vec![FixedBitSet::with_capacity(n); n];
        let mut almost_up = vec![FixedBitSet::with_capacity(n); n];
        let mut violations = Vec::new();
        let mut semi_nested = Vec::new();
        let mut census = KindCensus::default();
        for i in 0..m {
            for j in i + 1..m {
                let rel = classify_unchecked(&elements[2 * i], &elements[2 * j])?;
                match rel.kind {
                    RelationKind::Nested { .. } => census.nested += 1,
                    RelationKind::SemiNested { .. } => census.semi_nested += 1,
                    RelationKind::Crossing => census.crossing += 1,
                    RelationKind::DoubleSmallViolation => census.double_small_violation += 1,
                    RelationKind::Equal | RelationKind::Complementary => {
                        unreachable!("translates are deduplicated up to complement")
                    }
                }
                let left_small = rel.corners.iter().filter(|c| **c != CornerState::Large).count();
                let right_small = rel.small_wrt_right.iter().filter(|s| **s).count();
                let any_empty = rel.corners.contains(&CornerState::Empty);
                if !any_empty && (left_small >= 2 || right_small >= 2) {
                    violations.push((2 * i, 2 * j));
                }
                for s in [true, false] {
                    for t in [true, false] {
                        let ea = 2 * i + usize::from(!s);
                        let eb = 2 * j + usize::from(!t);
                        // ea ≤ eb is decided by the corner A^s ∩ B^-t
                        let k = corner_index((s, !t));
                        let empty = rel.corners[k] == CornerState::Empty;
                        if empty {
                            incl_up[ea].insert(eb);
                        }
                        if empty || (rel.corners[k] == CornerState::Small && left_small == 1) {
                            almost_up[ea].insert(eb);
                            if !empty {
                                semi_nested.push((ea, eb));
                            }
                        }
                        // eb ≤ ea is decided by B^t ∩ A^-s, small w.r.t. B's stabilizer
                        let k = corner_index((!s, t));
                        let empty = rel.corners[k] == CornerState::Empty;
                        if empty {
                            incl_up[eb].insert(ea);
                        }
                        if empty || (rel.small_wrt_right[k] && right_small == 1) {
                            almost_up[eb].insert(ea);
                            if !empty {
                                semi_nested.push((eb, ea));
                            }
                        }
                    }
                }
            }
        }
        for (e, row) in incl_up.iter_mut().enumerate() {
            row.insert(e);
        }
        for (e, row) in almost_up.iter_mut().enumerate() {
            row.insert(e);
        }
        semi_nested.sort_unstable();
        let labels: Vec<String> = elements.iter().map(|d| d.to_string()).collect();
        let incl = Pocset::from_order(m, incl_up).map_err(WindowError::Inclusion)?.with_labels(labels.clone());
        let (almost, order_report) = if violations.is_empty() {
            let report = verify_partial_order(&almost_up);
            let p = if report.passed() { Pocset::from_order(m, almost_up).ok().map(|p| p.with_labels(labels)) } else { None };
            (p, Some(report))
        } else {
            (None, None)
        };
        let mut w = Window {
            instance: instance.clone(),
            radius,
            margin,
            ball,
            elements,
            origins,
            index,
            incl,
            almost,
            violations,
            semi_nested,
            census,
            order_report,
            bounds: Err((0, 0)),
        };
        if w.almost.is_some() {
            w.bounds = w.containment_bounds();
        }
        Ok(w)
    }

    pub fn instance(&self) -> &Instance {
        &self.instance
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn margin(&self) -> usize {
        self.margin
    }

    /// The ball of radius `R + Δ` over which translates were collected.
    pub fn ball(&self) -> &[GroupElement] {
        &self.ball
    }

    /// Elements of the ball of radius `R`.
    pub fn inner_ball(&self) -> Vec<GroupElement> {
        self.instance.backend.ball(self.radius).expect("inner ball is smaller than the window ball")
    }

    pub fn pairs(&self) -> usize {
        self.elements.len() / 2
    }

    /// Element `2i` is the collected translate, `2i + 1` its complement.
    pub fn elements(&self) -> &[SetDescriptor] {
        &self.elements
    }

    pub fn element(&self, e: usize) -> &SetDescriptor {
        &self.elements[e]
    }

    pub fn index_of(&self, d: &SetDescriptor) -> Option<usize> {
        self.index.get(d).copied()
    }

    pub fn origin(&self, pair: usize) -> Origin {
        let (member, g) = &self.origins[pair];
        Origin { member: *member, element: g.to_string() }
    }

    pub fn origin_element(&self, pair: usize) -> (usize, &GroupElement) {
        (self.origins[pair].0, &self.origins[pair].1)
    }

    pub fn incl_order(&self) -> &Pocset {
        &self.incl
    }

    /// `None` when Condition (*) fails on the window.
    pub fn almost_order(&self) -> Option<&Pocset> {
        self.almost.as_ref()
    }

    pub fn violations(&self) -> &[(usize, usize)] {
        &self.violations
    }

    /// Relations `a ≤ b` that hold by a small nonempty corner rather than inclusion.
    pub fn semi_nested(&self) -> &[(usize, usize)] {
        &self.semi_nested
    }

    pub fn census(&self) -> KindCensus {
        self.census
    }

    pub fn order_report(&self) -> Option<&PartialOrderReport> {
        self.order_report.as_ref()
    }

    pub fn is_good_position(&self) -> bool {
        self.violations.is_empty()
    }

    /// The almost-inclusion pocset, or why there is none.
    pub fn require_almost(&self) -> Result<&Pocset, WindowError> {
        match (&self.almost, &self.order_report) {
            (Some(p), _) => Ok(p),
            (None, Some(r)) => Err(WindowError::NotPartialOrder(r.clone())),
            (None, None) => Err(WindowError::NotGoodPosition),
        }
    }

    fn containment_bounds(&self) -> Result<Bounds, (usize, usize)> {
        let pairs: Vec<(&SetDescriptor, &SetDescriptor)> =
            self.semi_nested.iter().map(|&(a, b)| (&self.elements[a], &self.elements[b])).collect();
        containment_radius(&pairs, &self.ball, self.radius)
    }

    /// The containment radius and neighbourhood bound of the window.
    pub fn compute_bound_r(&self) -> Result<Bounds, WindowError> {
        self.require_almost()?;
        self.bounds.map_err(|(needed, radius)| WindowError::TooSmall { needed, radius })
    }

    /// `V_g = {A : g ∈ A}`, an ultrafilter for inclusion.
    pub fn inclusion_basic_vertex(&self, g: &GroupElement) -> Ultrafilter {
        let mut sel = FixedBitSet::with_capacity(self.elements.len());
        for i in 0..self.pairs() {
            sel.insert(if self.elements[2 * i].contains(g) { 2 * i } else { 2 * i + 1 });
        }
        Ultrafilter::from_selected(sel)
    }

    /// Pairs whose coboundary meets `N_r(g)`, as an element set.
    pub fn near_elements(&self, g: &GroupElement, r: usize) -> Result<FixedBitSet, WindowError> {
        let backend = self.instance.backend;
        let ball = backend.ball(r)?;
        let gens = backend.generators();
        let mut near = FixedBitSet::with_capacity(self.elements.len());
        for i in 0..self.pairs() {
            if coboundary_meets_ball_at(&self.elements[2 * i], g, &ball, &gens) {
                near.insert(2 * i);
                near.insert(2 * i + 1);
            }
        }
        Ok(near)
    }

    /// Corrects `V_g` into an ultrafilter for almost inclusion: keep `V_g` away
    /// from `g`, close upwards, then adjoin minimal undecided elements.
    pub fn complete_basic_vertex(&self, g: &GroupElement, policy: Policy) -> Result<Completion, WindowError> {
        let p = self.require_almost()?;
        let bounds = self.compute_bound_r()?;
        if !self.inner_ball().contains(g) {
            return Err(WindowError::OutsideBall { g: g.to_string(), radius: self.radius });
        }
        let near = self.near_elements(g, bounds.bound_r)?;
        let n = self.elements.len();
        let mut start = FixedBitSet::with_capacity(n);
        for e in 0..n {
            if !near.contains(e) && self.elements[e].contains(g) {
                start.union_with(p.up_set(e));
            }
        }
        if (0..self.pairs()).any(|i| start.contains(2 * i) && start.contains(2 * i + 1)) {
            return Err(WindowError::Completion { g: g.to_string() });
        }
        let mut branches = Vec::new();
        let mut seen = HashSet::new();
        let mut steps = 0;
        let mut truncated = false;
        let mut stack = vec![(start, Vec::new())];
        while let Some((sel, choices)) = stack.pop() {
            steps += 1;
            if steps > MAX_COMPLETION_STEPS {
                truncated = true;
                break;
            }
            let undecided: Vec<usize> =
                (0..n).filter(|&e| !sel.contains(e) && !sel.contains(complement(e))).collect();
            if undecided.is_empty() {
                let u = Ultrafilter::from_selected(sel);
                if !u.is_ultrafilter_on(p) {
                    return Err(WindowError::Completion { g: g.to_string() });
                }
                if seen.insert(u.clone()) {
                    branches.push(BasicVertex { g: g.clone(), vertex: u, choices });
                    if policy == Policy::Lex {
                        break;
                    }
                    if branches.len() >= MAX_BRANCHES {
                        truncated = !stack.is_empty();
                        break;
                    }
                }
                continue;
            }
            let minimal = p.minimal_elements(&undecided).expect("indices in range");
            let mut options: Vec<usize> = minimal
                .into_iter()
                .filter(|&a| !p.up_set(a).ones().any(|x| sel.contains(complement(x))))
                .collect();
            if options.is_empty() {
                return Err(WindowError::Completion { g: g.to_string() });
            }
            options.sort_by(|&a, &b| self.elements[a].cmp(&self.elements[b]));
            if policy == Policy::Lex {
                options.truncate(1);
            }
            // push in reverse so the least descriptor is explored first
            for &a in options.iter().rev() {
                let mut next = sel.clone();
                next.union_with(p.up_set(a));
                let mut c = choices.clone();
                c.push(a);
                stack.push((next, c));
            }
        }
        Ok(Completion { g: g.clone(), branches, truncated, near })
    }

    /// Completed basic vertices for every element of the radius-`R` ball.
    pub fn basic_vertices(&self, policy: Policy) -> Result<Vec<Completion>, WindowError> {
        self.inner_ball().iter().map(|g| self.complete_basic_vertex(g, policy)).collect()
    }

    pub fn summary(&self) -> WindowSummary {
        let mut per_member = vec![0; self.instance.family.len()];
        for (m, _) in &self.origins {
            per_member[*m] += 1;
        }
        let (bound_r, bound_d) = match self.bounds {
            Ok(b) if self.almost.is_some() => (Some(b.bound_r), Some(b.bound_d)),
            _ => (None, None),
        };
        WindowSummary {
            backend: self.instance.backend.to_string(),
            radius: self.radius,
            margin: self.margin,
            pairs: self.pairs(),
            translates_per_member: per_member,
            census: self.census,
            good_position: self.is_good_position(),
            violations: self.violations.len(),
            incl_relations: self.incl.relations(),
            almost_relations: self.almost.as_ref().map(|p| p.relations()),
            bound_r,
            bound_d,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WindowSummary {
    pub backend: String,
    pub radius: usize,
    pub margin: usize,
    pub pairs: usize,
    pub translates_per_member: Vec<usize>,
    pub census: KindCensus,
    pub good_position: bool,
    pub violations: usize,
    pub incl_relations: Vec<(usize, usize)>,
    pub almost_relations: Option<Vec<(usize, usize)>>,
    pub bound_r: Option<usize>,
    pub bound_d: Option<usize>,
}

/// For pairs `A ≤ B`: the least `R' ≥ 1` such that every ball element `g`
/// with `N_R'(g) ⊆ A` lies in `B`, and the largest distance from a point of
/// `A ∖ B` in the ball to `A*`. Fails with `(needed, limit)` when `R'`
/// would exceed `limit`.
pub fn containment_radius(
    pairs: &[(&SetDescriptor, &SetDescriptor)],
    ball: &[GroupElement],
    limit: usize,
) -> Result<Bounds, (usize, usize)> {
    let mut deepest = 0;
    let search = 2 * limit + 2;
    for (a, b) in pairs {
        for g in ball {
            if a.contains(g) && !b.contains(g) {
                let d = distance_to_complement(a.region(), g, search).unwrap_or(search + 1);
                deepest = deepest.max(d);
            }
        }
    }
    let needed = deepest.max(1);
    if needed > limit {
        Err((needed, limit))
    } else {
        Ok(Bounds { bound_r: needed, bound_d: deepest })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::{Backend, FreeSet, Region, Stabilizer, Word};

    fn inst(json: &str) -> Instance {
        Instance::from_json(json).unwrap()
    }

    fn z_halfline() -> Instance {
        inst(r#"{"backend":"halfline","sets":[{"side":"L","threshold":0}]}"#)
    }

    #[test]
    fn halfline_window_is_a_chain() {
        let w = Window::build(&z_halfline(), 3, 2).unwrap();
        assert_eq!(w.pairs(), 11);
        let labels: Vec<String> = (0..11).map(|i| w.element(2 * i).to_string()).collect();
        for a in -5..=5 {
            assert!(labels.contains(&format!("L_{a}")), "{labels:?}");
        }
        assert_eq!(w.incl_order(), w.almost_order().unwrap());
        assert_eq!(w.compute_bound_r().unwrap(), Bounds { bound_r: 1, bound_d: 0 });
    }

    #[test]
    fn bad_representative_window_has_no_almost_order() {
        let w = Window::build(&inst(r#"{"backend":"halfline","sets":[{"side":"L","threshold":0,"exceptions":[2]}]}"#), 3, 2)
            .unwrap();
        assert!(w.almost_order().is_none());
        assert!(!w.violations().is_empty());
        assert!(matches!(w.compute_bound_r(), Err(WindowError::NotGoodPosition)));
    }

    #[test]
    fn halfline_basic_vertex_at_origin() {
        let w = Window::build(&z_halfline(), 3, 2).unwrap();
        let g = GroupElement::Halfline(0);
        let c = w.complete_basic_vertex(&g, Policy::Lex).unwrap();
        assert_eq!(c.branches.len(), 1);
        let v = &c.branches[0].vertex;
        assert!(v.is_ultrafilter_on(w.almost_order().unwrap()));
        // E_R at 0 is {L_-2, L_-1, L_0, L_1}; its minimal undecided elements are
        // L_-2 and R_2, so the completion lands on V_-2 or V_2, never on V_0
        assert_eq!(c.near.count_ones(..), 8);
        assert_eq!(*v, w.inclusion_basic_vertex(&GroupElement::Halfline(2)));
        assert_eq!(v.differing_pairs(&w.inclusion_basic_vertex(&g)), 2);
        let all = w.complete_basic_vertex(&g, Policy::All).unwrap();
        let mut got: Vec<Ultrafilter> = all.branches.into_iter().map(|b| b.vertex).collect();
        got.sort_by_key(|u| u.choice());
        let mut want = vec![
            w.inclusion_basic_vertex(&GroupElement::Halfline(-2)),
            w.inclusion_basic_vertex(&GroupElement::Halfline(2)),
        ];
        want.sort_by_key(|u| u.choice());
        assert_eq!(got, want);
        assert_eq!(w.basic_vertices(Policy::Lex).unwrap().len(), 7);
    }

    #[test]
    fn deep_corner_rejects_small_window() {
        // A ∖ B contains the whole unit ball around B, so containment needs radius 2
        let w = |s: &str| Word::parse(s).unwrap();
        let nbhd = ["e", "B", "BB", "Ba", "BA"].map(w);
        let a = SetDescriptor::new(Region::Free(FreeSet::from_parts(&[w("a")], &nbhd)), Stabilizer::Trivial).unwrap();
        let b = SetDescriptor::new(Region::Free(FreeSet::from_parts(&[w("a"), w("b")], &[])), Stabilizer::Trivial)
            .unwrap();
        let ball = Backend::Free.ball(3).unwrap();
        assert_eq!(containment_radius(&[(&a, &b)], &ball, 1), Err((2, 1)));
        assert_eq!(containment_radius(&[(&a, &b)], &ball, 2), Ok(Bounds { bound_r: 2, bound_d: 2 }));
    }
}
