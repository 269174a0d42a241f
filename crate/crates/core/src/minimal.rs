//! The inclusion cubing C and the minimal cubing L of a window, the embedding
//! of L in C, recovery of sets from half-spaces, and the searches that move a
//! family into good or very good position.

use std::collections::{HashMap, HashSet};

use serde::Serialize;
use thiserror::Error;

use crate::backends::{act, BackendError, GroupElement, SetDescriptor, SetSpec, Stabilizer};
use crate::cubecomplex::{build_complex, CubeComplex, CubeError, Limits, Ultrafilter};
use crate::relations::{
    check_condition_star, classify_unchecked, equivalent, leq, parallel_orbits, sign_orders, RelationError,
    RelationKind,
};
use crate::window::{Policy, Window, WindowError};

/// Above this many L-vertices the distance check samples its sources.
pub const EXHAUSTIVE_DISTANCE_LIMIT: usize = 2000;
const MAX_DISTANCE_COUNTEREXAMPLES: usize = 10;
const MAX_SHIFT_COMBINATIONS: usize = 4096;

#[derive(Debug, Error)]
pub enum MinimalError {
    #[error(transparent)]
    Window(#[from] WindowError),
    #[error(transparent)]
    Cube(#[from] CubeError),
    #[error(transparent)]
    Relation(#[from] RelationError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("no good-position representative among {tried} candidates with at most {budget} toggles")]
    BudgetExhausted { tried: usize, budget: usize },
    #[error("basic vertex at {g} is not a vertex of the complex")]
    MissingBasicVertex { g: String },
    #[error("{0}")]
    Precondition(String),
}

/// A cube complex over a window with its principal component picked out.
#[derive(Clone, Debug)]
pub struct Cubing {
    pub complex: CubeComplex,
    /// The component holding the basic vertex at the identity.
    pub component: usize,
    /// Basic vertices as `(g, vertex index)`, possibly several per `g`.
    pub basic: Vec<(GroupElement, usize)>,
}

impl Cubing {
    /// Vertex indices of the principal component.
    pub fn vertices(&self) -> &[usize] {
        &self.complex.components()[self.component]
    }

    pub fn dimension(&self) -> usize {
        self.complex.component_dimension(self.component).expect("principal component exists")
    }

    /// Number of distinct components met by the basic vertices.
    pub fn basic_components(&self) -> usize {
        self.basic.iter().map(|(_, v)| self.complex.component_of(*v)).collect::<HashSet<_>>().len()
    }

    fn from_basic(complex: CubeComplex, basic: Vec<(GroupElement, usize)>, identity: &GroupElement) -> Self {
        let at_identity = basic.iter().find(|(g, _)| g == identity).map(|(_, v)| *v).unwrap_or(0);
        let component = complex.component_of(at_identity);
        Cubing { complex, component, basic }
    }
}

/// The cubing of the inclusion order, with the basic vertices `V_g`.
pub fn inclusion_cubing(w: &Window, limits: &Limits) -> Result<Cubing, MinimalError> {
    let complex = build_complex(w.incl_order(), limits)?;
    let mut basic = Vec::new();
    for g in w.inner_ball() {
        let v = complex
            .vertex_of(&w.inclusion_basic_vertex(&g))
            .ok_or_else(|| MinimalError::MissingBasicVertex { g: g.to_string() })?;
        basic.push((g, v));
    }
    Ok(Cubing::from_basic(complex, basic, &w.instance().backend.identity()))
}

/// The cubing of almost inclusion, with the completed basic vertices `W_g`.
pub fn almost_cubing(w: &Window, policy: Policy, limits: &Limits) -> Result<Cubing, MinimalError> {
    let order = w.require_almost()?;
    let completions = w.basic_vertices(policy)?;
    let complex = build_complex(order, limits)?;
    let mut basic = Vec::new();
    for c in completions {
        for b in c.branches {
            let v = complex.vertex_of(&b.vertex).ok_or_else(|| MinimalError::MissingBasicVertex { g: b.g.to_string() })?;
            basic.push((b.g, v));
        }
    }
    Ok(Cubing::from_basic(complex, basic, &w.instance().backend.identity()))
}

/// Both cubings of a window. L is refused, and C still returned, when the
/// window is not in good position.
#[derive(Debug)]
pub struct Cubings {
    pub c: Cubing,
    pub l: Result<Cubing, MinimalError>,
}

pub fn build_cubings(w: &Window, policy: Policy, limits: &Limits) -> Result<Cubings, MinimalError> {
    Ok(Cubings { c: inclusion_cubing(w, limits)?, l: almost_cubing(w, policy, limits) })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DistanceSample {
    pub u: usize,
    pub v: usize,
    pub d_l: Option<usize>,
    pub d_c: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EmbeddingReport {
    pub vertices_c: usize,
    pub vertices_l: usize,
    /// Every L-vertex is a C-vertex with the same choice vector.
    pub vertex_inclusion: bool,
    pub vertex_counterexample: Option<Vec<bool>>,
    pub edge_preservation: bool,
    pub edge_counterexample: Option<(usize, usize)>,
    pub distance_preservation: bool,
    pub distance_pairs_checked: usize,
    pub distance_exhaustive: bool,
    pub distance_counterexamples: Vec<DistanceSample>,
    pub dimension_l: usize,
    pub dimension_c: usize,
    /// C-vertex of each L-vertex of the principal component, in order.
    #[serde(skip)]
    pub vertex_map: Vec<Option<usize>>,
}

impl EmbeddingReport {
    pub fn passed(&self) -> bool {
        self.vertex_inclusion && self.edge_preservation && self.distance_preservation
    }

    pub fn is_identity(&self) -> bool {
        self.passed() && self.vertices_c == self.vertices_l
    }
}

/// Checks that the principal component of `l` sits isometrically inside that of `c`.
pub fn verify_embedding(c: &Cubing, l: &Cubing) -> Result<EmbeddingReport, MinimalError> {
    let pairs_c = c.complex.pocset().map(|p| p.pairs());
    let pairs_l = l.complex.pocset().map(|p| p.pairs());
    if pairs_c.is_none() || pairs_c != pairs_l {
        return Err(MinimalError::Precondition("both cubings must come from the same window".into()));
    }
    let lv = l.vertices();
    let c_members: HashSet<usize> = c.vertices().iter().copied().collect();
    let vertex_map: Vec<Option<usize>> = lv
        .iter()
        .map(|&v| c.complex.vertex_of(&l.complex.vertices()[v]).filter(|x| c_members.contains(x)))
        .collect();
    let vertex_counterexample =
        lv.iter().zip(&vertex_map).find(|(_, m)| m.is_none()).map(|(&v, _)| l.complex.vertices()[v].choice());
    let position: HashMap<usize, usize> = lv.iter().enumerate().map(|(k, &v)| (v, k)).collect();
    let c_edges: HashSet<(usize, usize)> =
        c.complex.edges().iter().map(|e| (e.u.min(e.v), e.u.max(e.v))).collect();
    let mut edge_counterexample = None;
    for e in l.complex.edges() {
        let (Some(&pu), Some(&pv)) = (position.get(&e.u), position.get(&e.v)) else { continue };
        let ok = match (vertex_map[pu], vertex_map[pv]) {
            (Some(a), Some(b)) => c_edges.contains(&(a.min(b), a.max(b))),
            _ => false,
        };
        if !ok {
            edge_counterexample = Some((e.u, e.v));
            break;
        }
    }
    let exhaustive = lv.len() <= EXHAUSTIVE_DISTANCE_LIMIT;
    let stride = if exhaustive { 1 } else { lv.len().div_ceil(EXHAUSTIVE_DISTANCE_LIMIT) };
    let mut checked = 0;
    let mut bad = Vec::new();
    let mut distance_ok = true;
    for k in (0..lv.len()).step_by(stride) {
        let dl = l.complex.distances_from(lv[k]);
        let dc = vertex_map[k].map(|x| c.complex.distances_from(x));
        for j in k + 1..lv.len() {
            checked += 1;
            let d_l = dl[lv[j]];
            let d_c = match (&dc, vertex_map[j]) {
                (Some(dc), Some(y)) => dc[y],
                _ => None,
            };
            if d_l != d_c || d_l.is_none() {
                distance_ok = false;
                if bad.len() < MAX_DISTANCE_COUNTEREXAMPLES {
                    bad.push(DistanceSample { u: lv[k], v: lv[j], d_l, d_c });
                }
            }
        }
    }
    Ok(EmbeddingReport {
        vertices_c: c.vertices().len(),
        vertices_l: lv.len(),
        vertex_inclusion: vertex_counterexample.is_none(),
        vertex_counterexample,
        edge_preservation: edge_counterexample.is_none(),
        edge_counterexample,
        distance_preservation: distance_ok,
        distance_pairs_checked: checked,
        distance_exhaustive: exhaustive,
        distance_counterexamples: bad,
        dimension_l: l.dimension(),
        dimension_c: c.dimension(),
        vertex_map,
    })
}

/// `{g ∈ ball : g·v ∈ ℋ⁺}` where `ℋ⁺` is the half-space of vertices containing `X`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecoveredSet {
    pub members: Vec<GroupElement>,
    pub non_members: Vec<GroupElement>,
    /// Elements whose translate `g⁻¹X` falls outside the window.
    pub undefined: Vec<GroupElement>,
}

impl RecoveredSet {
    /// Defined ball elements on which the recovered set and `x` disagree.
    pub fn difference_with(&self, x: &SetDescriptor) -> Vec<GroupElement> {
        let mut out: Vec<GroupElement> = self.members.iter().filter(|g| !x.contains(g)).cloned().collect();
        out.extend(self.non_members.iter().filter(|g| x.contains(g)).cloned());
        out.sort();
        out
    }
}

/// Reads a set of group elements off a hyperplane of a cubing. Vertices are
/// acted on by relabelling: `A ∈ g·v` iff `g⁻¹A ∈ v`.
pub fn recover_set(
    w: &Window,
    cubing: &Cubing,
    x: usize,
    vertex: usize,
    ball: &[GroupElement],
) -> Result<RecoveredSet, MinimalError> {
    if vertex >= cubing.complex.vertex_count() || cubing.complex.component_of(vertex) != cubing.component {
        return Err(MinimalError::Precondition(format!("vertex {vertex} is not in the principal component")));
    }
    if x >= w.elements().len() {
        return Err(MinimalError::Precondition(format!("no window element {x}")));
    }
    let v = &cubing.complex.vertices()[vertex];
    Ok(recover_from_ultrafilter(w, w.element(x), v, ball)?)
}

fn recover_from_ultrafilter(
    w: &Window,
    x: &SetDescriptor,
    v: &Ultrafilter,
    ball: &[GroupElement],
) -> Result<RecoveredSet, BackendError> {
    let mut out = RecoveredSet { members: Vec::new(), non_members: Vec::new(), undefined: Vec::new() };
    for g in ball {
        match w.index_of(&act(&g.inverse(), x)?) {
            Some(k) if v.contains(k) => out.members.push(g.clone()),
            Some(_) => out.non_members.push(g.clone()),
            None => out.undefined.push(g.clone()),
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct RepairBudget {
    /// Largest number of orbits toggled at once.
    pub max_toggles: usize,
    /// Toggle candidates are coboundary endpoints within this radius.
    pub pool_radius: usize,
    /// Radius at which Condition (*) is checked.
    pub check_radius: usize,
}

impl Default for RepairBudget {
    fn default() -> Self {
        RepairBudget { max_toggles: 2, pool_radius: 5, check_radius: 3 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Repair {
    pub original: String,
    pub repaired: String,
    pub toggled: Vec<String>,
    pub candidates_checked: usize,
    #[serde(skip)]
    pub descriptor: SetDescriptor,
}

fn exception_count(d: &SetDescriptor) -> usize {
    match SetSpec::from_descriptor(d) {
        Ok(SetSpec::Cones { exceptions, .. }) => exceptions.len(),
        Ok(SetSpec::Threshold { exceptions, .. }) => exceptions.len(),
        Err(_) => usize::MAX,
    }
}

/// Preference among fitted descriptors: fewest exceptions, then descriptor order.
fn preference(d: &SetDescriptor) -> (usize, SetDescriptor) {
    (exception_count(d), d.clone())
}

/// Endpoints of coboundary edges of `x` inside the ball, one per toggled orbit.
fn toggle_pool(x: &SetDescriptor, radius: usize) -> Result<Vec<GroupElement>, BackendError> {
    let backend = x.backend();
    let gens = backend.generators();
    let mut seen = HashSet::new();
    let mut pool = Vec::new();
    for g in backend.ball(radius)? {
        let inside = x.contains(&g);
        let boundary = gens.iter().any(|s| x.contains(&g.mul(s).expect("same backend")) != inside);
        if boundary && seen.insert(x.toggle_orbit(&g)?) {
            pool.push(g);
        }
    }
    Ok(pool)
}

/// Calls `visit` on every subset of `0..n` of size `k`, in lexicographic order.
fn for_each_subset(n: usize, k: usize, visit: &mut dyn FnMut(&[usize]) -> Result<(), MinimalError>) -> Result<(), MinimalError> {
    if k > n {
        return Ok(());
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        visit(&idx)?;
        let Some(i) = (0..k).rev().find(|&i| idx[i] < n - k + i) else { return Ok(()) };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn passes_star(d: &SetDescriptor, radius: usize) -> Result<bool, MinimalError> {
    Ok(!d.is_trivial()? && check_condition_star(std::slice::from_ref(d), radius)?.is_empty())
}

/// Searches sets equivalent to `x`, obtained by toggling up to
/// `max_toggles` orbits near its coboundary (`x` itself included), for those
/// satisfying Condition (*). Returns the one with fewest exceptions, then
/// fewest toggles, then least in descriptor order.
pub fn repair_good_position(x: &SetDescriptor, budget: &RepairBudget) -> Result<Repair, MinimalError> {
    if x.is_trivial()? {
        return Err(RelationError::Trivial(x.to_string()).into());
    }
    let pool = toggle_pool(x, budget.pool_radius)?;
    let mut checked = 0;
    let mut best: Option<((usize, usize, SetDescriptor), Vec<GroupElement>)> = None;
    let mut seen = HashSet::new();
    for k in 0..=budget.max_toggles {
        if best.as_ref().is_some_and(|((exceptions, _, _), _)| *exceptions == 0) {
            break;
        }
        for_each_subset(pool.len(), k, &mut |subset| {
            let mut d = x.clone();
            for &i in subset {
                d = d.toggle_orbit(&pool[i])?;
            }
            if !seen.insert(d.clone()) {
                return Ok(());
            }
            checked += 1;
            if passes_star(&d, budget.check_radius)? {
                let key = (exception_count(&d), k, d);
                if best.as_ref().is_none_or(|(b, _)| key < *b) {
                    best = Some((key, subset.iter().map(|&i| pool[i].clone()).collect()));
                }
            }
            Ok(())
        })?;
    }
    match best {
        Some(((_, _, d), toggled)) => Ok(Repair {
            original: x.to_string(),
            repaired: d.to_string(),
            toggled: toggled.iter().map(|g| g.to_string()).collect(),
            candidates_checked: checked,
            descriptor: d,
        }),
        None => Err(MinimalError::BudgetExhausted { tried: checked, budget: budget.max_toggles }),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Fit {
    /// A window element matches exactly on the ball.
    Family,
    /// The source set with the disagreeing orbits toggled.
    Difference,
    Unfitted,
}

/// `Z = {g ∈ ball : Y ∈ g·w}` for one set `Y`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transform {
    pub source: SetDescriptor,
    pub members: Vec<GroupElement>,
    pub undefined: Vec<GroupElement>,
    pub fitted: Option<SetDescriptor>,
    pub fit: Fit,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct DichotomyVerdict {
    pub pairs_checked: usize,
    pub semi_nested: usize,
    pub double_small_violation: usize,
    /// `aY ≤ Y` held for this many ball elements `a`.
    pub monotone_checked: usize,
    /// Elements `a` with `aY ≤ Y` but `aZ ⊄ Z`.
    pub monotone_failures: Vec<String>,
    /// Some set could not be fitted and was left out.
    pub partial: bool,
}

impl DichotomyVerdict {
    pub fn holds(&self) -> bool {
        self.semi_nested == 0 && self.double_small_violation == 0 && self.monotone_failures.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FamilyTransform {
    pub transforms: Vec<Transform>,
    pub verdict: DichotomyVerdict,
}

impl FamilyTransform {
    pub fn fitted(&self) -> Vec<SetDescriptor> {
        self.transforms.iter().filter_map(|t| t.fitted.clone()).collect()
    }
}

fn matches_on(d: &SetDescriptor, members: &HashSet<&GroupElement>, defined: &[GroupElement]) -> bool {
    defined.iter().all(|g| d.contains(g) == members.contains(g))
}

/// Computes `Z` for `y` from an L-vertex and fits a descriptor to it, trying
/// window elements equivalent to `y` first.
pub fn very_good_position_transform(w: &Window, y: &SetDescriptor, v: &Ultrafilter) -> Result<Transform, MinimalError> {
    let order = w.almost_order().ok_or(WindowError::NotGoodPosition)?;
    if !v.is_ultrafilter_on(order) {
        return Err(MinimalError::Precondition("the vertex is not an ultrafilter for almost inclusion".into()));
    }
    if !check_condition_star(std::slice::from_ref(y), w.radius())?.is_empty() {
        return Err(WindowError::NotGoodPosition.into());
    }
    let ball = w.inner_ball();
    let mut members = Vec::new();
    let mut undefined = Vec::new();
    let mut defined = Vec::new();
    for g in &ball {
        match w.index_of(&act(&g.inverse(), y)?) {
            Some(k) => {
                if v.contains(k) {
                    members.push(g.clone());
                }
                defined.push(g.clone());
            }
            None => undefined.push(g.clone()),
        }
    }
    let set: HashSet<&GroupElement> = members.iter().collect();
    let mut family_fits = Vec::new();
    for d in w.elements() {
        if matches_on(d, &set, &defined) && equivalent(y, d)? {
            family_fits.push(d);
        }
    }
    let (fitted, fit) = if let Some(d) = family_fits.into_iter().min_by_key(|d| preference(d)) {
        (Some(d.clone()), Fit::Family)
    } else {
        let mut d = y.clone();
        for g in &defined {
            if d.contains(g) != set.contains(g) {
                d = d.toggle_orbit(g)?;
            }
        }
        if matches_on(&d, &set, &defined) && !d.is_trivial()? {
            (Some(d), Fit::Difference)
        } else {
            (None, Fit::Unfitted)
        }
    };
    Ok(Transform { source: y.clone(), members, undefined, fitted, fit })
}

/// Transforms every member of the window's family through the vertex `v` and
/// checks the result: translate pairs must be nested or crossing, and
/// `aY ≤ Y` must give `aZ ⊆ Z`.
pub fn very_good_position_family(w: &Window, v: &Ultrafilter) -> Result<FamilyTransform, MinimalError> {
    let mut transforms = Vec::new();
    for y in &w.instance().family {
        transforms.push(very_good_position_transform(w, y, v)?);
    }
    let mut verdict = DichotomyVerdict { partial: transforms.iter().any(|t| t.fitted.is_none()), ..Default::default() };
    let fitted: Vec<SetDescriptor> = transforms.iter().filter_map(|t| t.fitted.clone()).collect();
    let ball = w.inner_ball();
    let translates = crate::relations::family_translates(&fitted, &ball)?;
    for (k, (_, _, a)) in translates.iter().enumerate() {
        for (_, _, b) in &translates[k + 1..] {
            verdict.pairs_checked += 1;
            match classify_unchecked(a, b)?.kind {
                RelationKind::SemiNested { .. } => verdict.semi_nested += 1,
                RelationKind::DoubleSmallViolation => verdict.double_small_violation += 1,
                _ => {}
            }
        }
    }
    for t in &transforms {
        let Some(z) = &t.fitted else { continue };
        for a in &ball {
            let ay = act(a, &t.source)?;
            if !leq(&ay, &t.source)?.holds {
                continue;
            }
            verdict.monotone_checked += 1;
            let az = act(a, z)?;
            if !az.region().intersection(z.complement().region())?.is_empty() {
                verdict.monotone_failures.push(a.to_string());
            }
        }
    }
    Ok(FamilyTransform { transforms, verdict })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OrderWitness {
    /// Two names for one translate on one side are sent to different sets.
    NotWellDefined { left: String, right: String },
    NotMonotone { a: String, b: String, relation: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum OrderVerdict {
    Isomorphic,
    /// The map works after replacing each `Z_i` by `t_i·Z_i`.
    IsomorphicAfterShift { shifts: Vec<String> },
    Obstructed { witness: OrderWitness },
    HypothesisFlag { reason: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OrderIsoReport {
    pub radius: usize,
    pub verdict: OrderVerdict,
}

fn check_translate_map(y: &[SetDescriptor], z: &[SetDescriptor], ball: &[GroupElement]) -> Result<Option<OrderWitness>, MinimalError> {
    let mut forward: HashMap<SetDescriptor, SetDescriptor> = HashMap::new();
    let mut backward: HashMap<SetDescriptor, SetDescriptor> = HashMap::new();
    let mut keys: Vec<SetDescriptor> = Vec::new();
    let mut key_set: HashSet<SetDescriptor> = HashSet::new();
    for (yi, zi) in y.iter().zip(z) {
        for g in ball {
            let a = act(g, yi)?;
            let b = act(g, zi)?;
            for (a, b) in [(a.clone(), b.clone()), (a.complement(), b.complement())] {
                if let Some(old) = forward.get(&a) {
                    if *old != b {
                        return Ok(Some(OrderWitness::NotWellDefined { left: old.to_string(), right: b.to_string() }));
                    }
                    continue;
                }
                if let Some(old) = backward.get(&b) {
                    if *old != a {
                        return Ok(Some(OrderWitness::NotWellDefined { left: old.to_string(), right: a.to_string() }));
                    }
                }
                forward.insert(a.clone(), b.clone());
                backward.insert(b, a.clone());
                if !key_set.contains(&a.complement()) {
                    key_set.insert(a.clone());
                    keys.push(a);
                }
            }
        }
    }
    for (k, a) in keys.iter().enumerate() {
        for b in &keys[k + 1..] {
            let ry = sign_orders(&classify_unchecked(a, b)?);
            let rz = sign_orders(&classify_unchecked(&forward[a], &forward[b])?);
            if ry != rz {
                return Ok(Some(OrderWitness::NotMonotone {
                    a: a.to_string(),
                    b: b.to_string(),
                    relation: format!("{:?} vs {:?}", ry, rz),
                }));
            }
        }
    }
    Ok(None)
}

/// Checks that `g·Y_i ↦ g·Z_i` is a well-defined order isomorphism on the
/// translates over the ball, shifting each `Z_i` by an element of the ball
/// with `t·Z_i ∼ Z_i` when the plain map fails.
pub fn verify_order_isomorphism(
    y: &[SetDescriptor],
    z: &[SetDescriptor],
    radius: usize,
) -> Result<OrderIsoReport, MinimalError> {
    let flag = |reason: String| Ok(OrderIsoReport { radius, verdict: OrderVerdict::HypothesisFlag { reason } });
    if y.is_empty() || y.len() != z.len() {
        return flag(format!("families of sizes {} and {}", y.len(), z.len()));
    }
    for (i, (a, b)) in y.iter().zip(z).enumerate() {
        if !equivalent(a, b)? {
            return flag(format!("member {i}: {a} and {b} are not equivalent"));
        }
    }
    for (name, fam) in [("first", y), ("second", z)] {
        if !check_condition_star(fam, radius)?.is_empty() {
            return flag(format!("the {name} family is not in good position"));
        }
        if let Some(p) = parallel_orbits(fam, radius)?.first() {
            return flag(format!("the {name} family has parallel orbits {} and {}", p.first, p.second));
        }
    }
    let backend = y[0].backend();
    let ball = backend.ball(radius)?;
    let first = match check_translate_map(y, z, &ball)? {
        None => return Ok(OrderIsoReport { radius, verdict: OrderVerdict::Isomorphic }),
        Some(w) => w,
    };
    let identity = backend.identity();
    let mut options: Vec<Vec<GroupElement>> = Vec::new();
    for zi in z {
        let mut opts = vec![identity.clone()];
        for t in &ball {
            if *t != identity && equivalent(zi, &act(t, zi)?)? {
                opts.push(t.clone());
            }
        }
        options.push(opts);
    }
    let mut idx = vec![0usize; z.len()];
    let mut tried = 0;
    loop {
        // advance an odometer over the shift choices, skipping the all-identity start
        let Some(i) = (0..idx.len()).rev().find(|&i| idx[i] + 1 < options[i].len()) else { break };
        idx[i] += 1;
        for j in i + 1..idx.len() {
            idx[j] = 0;
        }
        tried += 1;
        if tried > MAX_SHIFT_COMBINATIONS {
            break;
        }
        let shifted: Vec<SetDescriptor> =
            z.iter().zip(&idx).enumerate().map(|(i, (zi, &k))| act(&options[i][k], zi)).collect::<Result<_, _>>()?;
        if check_translate_map(y, &shifted, &ball)?.is_none() {
            let shifts = idx.iter().enumerate().map(|(i, &k)| options[i][k].to_string()).collect();
            return Ok(OrderIsoReport { radius, verdict: OrderVerdict::IsomorphicAfterShift { shifts } });
        }
    }
    Ok(OrderIsoReport { radius, verdict: OrderVerdict::Obstructed { witness: first } })
}

/// Elements of a ball moving `X` across a second set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StWitnesses {
    pub radius: usize,
    /// `gX` crosses the target.
    pub s: Vec<String>,
    /// `gX` and the target are not nested.
    pub t: Vec<String>,
    /// Members of `t` normalizing the stabilizer of `X`.
    pub commensurising: Vec<String>,
}

impl StWitnesses {
    pub fn s_within_t(&self) -> bool {
        let t: HashSet<&String> = self.t.iter().collect();
        self.s.iter().all(|g| t.contains(g))
    }
}

fn normalizes(g: &GroupElement, h: Stabilizer) -> Result<bool, BackendError> {
    match h {
        Stabilizer::Trivial => Ok(true),
        Stabilizer::Cyclic([dx, dy]) => {
            let v = GroupElement::Grid(dx, dy);
            Ok(g.mul(&v)?.mul(&g.inverse())? == v)
        }
    }
}

/// Witnesses for the subgroups generated by crossing, resp. non-nesting,
/// translates of `x` against `target`.
pub fn st_cross(x: &SetDescriptor, target: &SetDescriptor, radius: usize) -> Result<StWitnesses, MinimalError> {
    if x.is_trivial()? {
        return Err(RelationError::Trivial(x.to_string()).into());
    }
    let mut out = StWitnesses { radius, s: Vec::new(), t: Vec::new(), commensurising: Vec::new() };
    for g in x.backend().ball(radius)? {
        let kind = classify_unchecked(&act(&g, x)?, target)?.kind;
        let crossing = kind == RelationKind::Crossing;
        let not_nested =
            matches!(kind, RelationKind::Crossing | RelationKind::SemiNested { .. } | RelationKind::DoubleSmallViolation);
        if crossing {
            out.s.push(g.to_string());
        }
        if not_nested {
            out.t.push(g.to_string());
            if normalizes(&g, x.stabilizer())? {
                out.commensurising.push(g.to_string());
            }
        }
    }
    Ok(out)
}

pub fn st_generators(x: &SetDescriptor, radius: usize) -> Result<StWitnesses, MinimalError> {
    st_cross(x, x, radius)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OrderComparison {
    pub first: String,
    pub second: String,
    pub verdict: OrderVerdict,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OrderExploration {
    pub candidates: Vec<String>,
    pub isomorphic: usize,
    pub after_shift: usize,
    pub obstructed: Vec<OrderComparison>,
}

/// Collects good-position sets equivalent to `x` (toggles of up to
/// `budget.max_toggles` orbits) and compares the orders of every pair.
/// Exploratory: it reports what it finds and asserts nothing.
pub fn explore_orders(x: &SetDescriptor, budget: &RepairBudget, max_candidates: usize) -> Result<OrderExploration, MinimalError> {
    let pool = toggle_pool(x, budget.pool_radius)?;
    let mut seen = HashSet::new();
    let mut candidates = Vec::new();
    for k in 0..=budget.max_toggles {
        for_each_subset(pool.len(), k, &mut |subset| {
            if candidates.len() >= max_candidates {
                return Ok(());
            }
            let mut d = x.clone();
            for &i in subset {
                d = d.toggle_orbit(&pool[i])?;
            }
            if seen.insert(d.clone()) && passes_star(&d, budget.check_radius)? {
                candidates.push(d);
            }
            Ok(())
        })?;
    }
    let mut out = OrderExploration {
        candidates: candidates.iter().map(|d| d.to_string()).collect(),
        isomorphic: 0,
        after_shift: 0,
        obstructed: Vec::new(),
    };
    for (i, a) in candidates.iter().enumerate() {
        for b in &candidates[i + 1..] {
            let r = verify_order_isomorphism(std::slice::from_ref(a), std::slice::from_ref(b), budget.check_radius)?;
            match r.verdict {
                OrderVerdict::Isomorphic => out.isomorphic += 1,
                OrderVerdict::IsomorphicAfterShift { .. } => out.after_shift += 1,
                verdict => out.obstructed.push(OrderComparison { first: a.to_string(), second: b.to_string(), verdict }),
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::{Backend, FreeSet, IntSet, Region, Word};
    use crate::instance::Instance;

    fn ray(a: i64) -> SetDescriptor {
        SetDescriptor::new(Region::Halfline(IntSet::at_most(a)), Stabilizer::Trivial).unwrap()
    }

    fn bad_rep() -> SetDescriptor {
        SetDescriptor::new(Region::Halfline(IntSet::at_most(0).symmetric_difference(&IntSet::point(2))), Stabilizer::Trivial)
            .unwrap()
    }

    fn window(json: &str) -> Window {
        let inst = Instance::from_json(json).unwrap();
        Window::build(&inst, inst.window.radius, inst.window.margin).unwrap()
    }

    #[test]
    fn halfline_cubings_coincide() {
        let w = window(r#"{"backend":"halfline","sets":[{"side":"L","threshold":0}]}"#);
        let cs = build_cubings(&w, Policy::Lex, &Limits::default()).unwrap();
        let l = cs.l.unwrap();
        assert_eq!(cs.c.vertices().len(), 12);
        assert_eq!(l.dimension(), 1);
        let r = verify_embedding(&cs.c, &l).unwrap();
        assert!(r.is_identity());
        assert_eq!(r.distance_pairs_checked, 66);
    }

    #[test]
    fn bad_rep_has_square_and_no_l() {
        let w = window(r#"{"backend":"halfline","sets":[{"side":"L","threshold":0,"exceptions":[2]}]}"#);
        let cs = build_cubings(&w, Policy::Lex, &Limits::default()).unwrap();
        assert_eq!(cs.c.dimension(), 2);
        assert!(matches!(cs.l, Err(MinimalError::Window(WindowError::NotGoodPosition))));
    }

    #[test]
    fn repair_examples() {
        let r = repair_good_position(&bad_rep(), &RepairBudget::default()).unwrap();
        assert_eq!(r.descriptor, ray(0));
        assert_eq!(r.toggled, vec!["2".to_string()]);
        let r = repair_good_position(&ray(5), &RepairBudget::default()).unwrap();
        assert_eq!(r.descriptor, ray(5));
        assert!(r.toggled.is_empty());
        let w = |s: &str| Word::parse(s).unwrap();
        let x = SetDescriptor::new(Region::Free(FreeSet::from_parts(&[w("a")], &[w("b")])), Stabilizer::Trivial).unwrap();
        let r = repair_good_position(&x, &RepairBudget::default()).unwrap();
        assert_eq!(r.repaired, "cone(a)");
        let tight = RepairBudget { max_toggles: 0, ..Default::default() };
        assert!(matches!(repair_good_position(&bad_rep(), &tight), Err(MinimalError::BudgetExhausted { .. })));
    }

    #[test]
    fn recovered_set_from_basic_vertices() {
        let w = window(r#"{"backend":"halfline","sets":[{"side":"L","threshold":0}]}"#);
        let c = inclusion_cubing(&w, &Limits::default()).unwrap();
        let x = w.index_of(&ray(0)).unwrap();
        let ball = w.inner_ball();
        let v0 = c.basic.iter().find(|(g, _)| *g == GroupElement::Halfline(0)).unwrap().1;
        let rec = recover_set(&w, &c, x, v0, &ball).unwrap();
        assert!(rec.undefined.is_empty());
        assert!(rec.difference_with(&ray(0)).is_empty());
        let v2 = c.basic.iter().find(|(g, _)| *g == GroupElement::Halfline(2)).unwrap().1;
        let rec = recover_set(&w, &c, x, v2, &ball).unwrap();
        // V_2 recovers L_-2
        assert_eq!(rec.difference_with(&ray(0)), vec![GroupElement::Halfline(-1), GroupElement::Halfline(0)]);
    }

    #[test]
    fn transform_on_rays_gives_a_ray() {
        let w = window(r#"{"backend":"halfline","sets":[{"side":"L","threshold":0}]}"#);
        let v = w.inclusion_basic_vertex(&GroupElement::Halfline(0));
        let t = very_good_position_transform(&w, &ray(0), &v).unwrap();
        assert_eq!(t.fit, Fit::Family);
        assert_eq!(t.fitted, Some(ray(0)));
        let f = very_good_position_family(&w, &v).unwrap();
        assert!(f.verdict.holds());
        assert!(f.verdict.monotone_checked > 0);
    }

    #[test]
    fn order_isomorphism_examples() {
        let r = verify_order_isomorphism(&[ray(0)], &[ray(0)], 3).unwrap();
        assert_eq!(r.verdict, OrderVerdict::Isomorphic);
        let r = verify_order_isomorphism(&[ray(0)], &[bad_rep()], 3).unwrap();
        assert!(matches!(r.verdict, OrderVerdict::HypothesisFlag { .. }));
        let dl = |a: i64| {
            SetDescriptor::new(Region::Dihedral { pos: IntSet::at_most(a), neg: IntSet::at_most(a) }, Stabilizer::Trivial)
                .unwrap()
        };
        let r = verify_order_isomorphism(&[dl(0)], &[dl(1)], 3).unwrap();
        match r.verdict {
            OrderVerdict::IsomorphicAfterShift { shifts } => assert_eq!(shifts, vec![GroupElement::Dihedral { shift: -1, flip: false }.to_string()]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn st_witnesses_on_rays_are_empty() {
        let r = st_generators(&ray(0), 4).unwrap();
        assert!(r.s.is_empty() && r.t.is_empty());
        let x = SetDescriptor::new(Region::Free(FreeSet::from_parts(&[Word::parse("a").unwrap()], &[])), Stabilizer::Trivial)
            .unwrap();
        assert_eq!(Backend::Free, x.backend());
        assert!(st_generators(&x, 2).unwrap().s_within_t());
    }
}
