//! Ultrafilters on a finite pocset and the cube complex they span.
//!
//! Vertices are ultrafilters, edges flip one minimal element, and a cube is a
//! base vertex together with a set of minimal elements that can be flipped in
//! every combination. Cubes are never materialised beyond their counts and the
//! list of squares.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt::Write as _;

use fixedbitset::FixedBitSet;
use petgraph::unionfind::UnionFind;
use serde::Serialize;
use thiserror::Error;

use crate::pocset::{complement, Pocset};

pub const DEFAULT_MAX_PAIRS: usize = 2048;
pub const DEFAULT_MAX_VERTICES: usize = 5000;
/// Components up to this size get the all-triples median scan.
pub const EXHAUSTIVE_MEDIAN_LIMIT: usize = 256;
const MAX_CUBES: usize = 5_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CubeError {
    #[error("{pairs} pairs exceed the cap of {cap} (up to 2^{pairs} ultrafilters)")]
    TooManyPairs { pairs: usize, cap: usize },
    #[error("more than {cap} ultrafilters")]
    TooManyVertices { cap: usize },
    #[error("more than {MAX_CUBES} cubes")]
    TooManyCubes,
    #[error("no component {0}")]
    NoSuchComponent(usize),
    #[error("no vertex {0}")]
    NoSuchVertex(usize),
    #[error("not a cubing: {0}")]
    Structural(String),
    #[error("invalid raw complex: {0}")]
    Raw(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    pub max_pairs: usize,
    pub max_vertices: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_pairs: DEFAULT_MAX_PAIRS, max_vertices: DEFAULT_MAX_VERTICES }
    }
}

/// One element chosen from each pair, closed upwards. Stored as the set of
/// selected elements.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Ultrafilter {
    selected: FixedBitSet,
}

impl std::fmt::Debug for Ultrafilter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.selected.ones().map(|e| if e % 2 == 0 { format!("{}", e / 2) } else { format!("{}*", e / 2) }).collect();
        write!(f, "{{{}}}", parts.join(" "))
    }
}

impl Ultrafilter {
    pub fn from_selected(selected: FixedBitSet) -> Self {
        Ultrafilter { selected }
    }

    /// From a choice vector: `true` at `i` selects element `2i + 1`.
    pub fn from_choice(choice: &[bool]) -> Self {
        let mut selected = FixedBitSet::with_capacity(2 * choice.len());
        for (i, &c) in choice.iter().enumerate() {
            selected.insert(2 * i + c as usize);
        }
        Ultrafilter { selected }
    }

    pub fn pairs(&self) -> usize {
        self.selected.len() / 2
    }

    pub fn contains(&self, e: usize) -> bool {
        self.selected.contains(e)
    }

    pub fn selected(&self) -> &FixedBitSet {
        &self.selected
    }

    pub fn choice(&self) -> Vec<bool> {
        (0..self.pairs()).map(|i| self.selected.contains(2 * i + 1)).collect()
    }

    pub fn differing_pairs(&self, other: &Ultrafilter) -> usize {
        self.selected.symmetric_difference_count(&other.selected) / 2
    }

    /// Replaces `e` by its complement.
    pub fn flip(&self, e: usize) -> Ultrafilter {
        let mut s = self.selected.clone();
        s.set(e, false);
        s.insert(complement(e));
        Ultrafilter { selected: s }
    }

    /// Checks both ultrafilter conditions against `p`.
    pub fn is_ultrafilter_on(&self, p: &Pocset) -> bool {
        if self.selected.len() != p.len() {
            return false;
        }
        (0..p.pairs()).all(|i| self.selected.contains(2 * i) != self.selected.contains(2 * i + 1))
            && self.selected.ones().all(|a| p.up_set(a).is_subset(&self.selected))
    }
}

/// Depth-first search over pairs in index order, taking the even element
/// first, with upward closure applied after every choice. On a closed,
/// consistent implication table no branch dead-ends. Stops after `limit`
/// solutions.
fn enumerate_closed(up: &[FixedBitSet], start: FixedBitSet, limit: usize) -> Vec<FixedBitSet> {
    fn conflicts(up: &FixedBitSet, selected: &FixedBitSet) -> bool {
        up.ones().any(|x| selected.contains(complement(x)))
    }
    fn go(up: &[FixedBitSet], selected: &mut FixedBitSet, pair: usize, limit: usize, out: &mut Vec<FixedBitSet>) {
        let n = up.len();
        let mut i = pair;
        while 2 * i < n && (selected.contains(2 * i) || selected.contains(2 * i + 1)) {
            i += 1;
        }
        if 2 * i >= n {
            out.push(selected.clone());
            return;
        }
        for e in [2 * i, 2 * i + 1] {
            if out.len() >= limit {
                return;
            }
            if up[e].contains(complement(e)) || conflicts(&up[e], selected) {
                continue;
            }
            let saved = selected.clone();
            selected.union_with(&up[e]);
            go(up, selected, i + 1, limit, out);
            *selected = saved;
        }
    }
    let mut selected = start;
    let mut out = Vec::new();
    if limit > 0 {
        go(up, &mut selected, 0, limit, &mut out);
    }
    out
}

/// All ultrafilters of `p`, in lexicographic order of their choice vectors.
pub fn enumerate_ultrafilters(p: &Pocset, limits: &Limits) -> Result<Vec<Ultrafilter>, CubeError> {
    if p.pairs() > limits.max_pairs {
        return Err(CubeError::TooManyPairs { pairs: p.pairs(), cap: limits.max_pairs });
    }
    let up: Vec<FixedBitSet> = (0..p.len()).map(|e| p.up_set(e).clone()).collect();
    let found = enumerate_closed(&up, FixedBitSet::with_capacity(p.len()), limits.max_vertices + 1);
    if found.len() > limits.max_vertices {
        return Err(CubeError::TooManyVertices { cap: limits.max_vertices });
    }
    Ok(found.into_iter().map(Ultrafilter::from_selected).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    /// The flipped pair, for complexes built from a pocset.
    pub label: Option<usize>,
}

/// A square listed by its corners in cyclic order and the edges `c0c1`,
/// `c1c2`, `c2c3`, `c3c0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Square {
    pub corners: [usize; 4],
    pub edges: [usize; 4],
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Hyperplane {
    pub edges: Vec<usize>,
    pub label: Option<usize>,
    /// For labelled hyperplanes the first half-space selects the even element.
    pub half_spaces: [Vec<usize>; 2],
}

#[derive(Clone, Debug)]
pub struct CubeComplex {
    pocset: Option<Pocset>,
    vertices: Vec<Ultrafilter>,
    vertex_count: usize,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<(usize, usize)>>,
    squares: Vec<Square>,
    cube_counts: Vec<usize>,
    components: Vec<Vec<usize>>,
    component_of: Vec<usize>,
}

/// Minimal elements of an ultrafilter: those with nothing selected strictly below.
fn minimal_in(down: &[FixedBitSet], v: &Ultrafilter) -> Vec<usize> {
    v.selected.ones().filter(|&e| down[e].intersection_count(&v.selected) == 1).collect()
}

fn down_sets(p: &Pocset) -> Vec<FixedBitSet> {
    (0..p.len())
        .map(|e| {
            let mut d = FixedBitSet::with_capacity(p.len());
            for x in p.up_set(complement(e)).ones() {
                d.insert(complement(x));
            }
            d
        })
        .collect()
}

pub fn build_complex(p: &Pocset, limits: &Limits) -> Result<CubeComplex, CubeError> {
    let vertices = enumerate_ultrafilters(p, limits)?;
    let index: HashMap<&FixedBitSet, usize> = vertices.iter().enumerate().map(|(i, v)| (&v.selected, i)).collect();
    let down = down_sets(p);
    let lookup = |u: &Ultrafilter| {
        index.get(&u.selected).copied().ok_or_else(|| CubeError::Structural(format!("flip {u:?} is not an ultrafilter")))
    };
    let mut edges = Vec::new();
    let mut edge_index: HashMap<(usize, usize), usize> = HashMap::new();
    let minimal: Vec<Vec<usize>> = vertices.iter().map(|v| minimal_in(&down, v)).collect();
    for (i, v) in vertices.iter().enumerate() {
        for &e in &minimal[i] {
            let j = lookup(&v.flip(e))?;
            if i < j {
                edge_index.insert((i, j), edges.len());
                edges.push(Edge { u: i, v: j, label: Some(e / 2) });
            }
        }
    }
    let mut cube_counts = vec![vertices.len(), edges.len()];
    let mut squares = Vec::new();
    let mut total = 0usize;
    for (i, v) in vertices.iter().enumerate() {
        let evens: Vec<usize> = minimal[i].iter().copied().filter(|e| e % 2 == 0).collect();
        // a and b can be flipped together iff a* ≤ b fails
        let compatible = |a: usize, b: usize| !p.leq(complement(a), b);
        let mut stack: Vec<(Vec<usize>, usize)> = (0..evens.len()).map(|k| (vec![evens[k]], k + 1)).collect();
        while let Some((clique, next)) = stack.pop() {
            let dim = clique.len();
            if dim >= 2 {
                if cube_counts.len() <= dim {
                    cube_counts.resize(dim + 1, 0);
                }
                cube_counts[dim] += 1;
                total += 1;
                if total > MAX_CUBES {
                    return Err(CubeError::TooManyCubes);
                }
                if dim == 2 {
                    let (a, b) = (clique[0], clique[1]);
                    let ca = lookup(&v.flip(a))?;
                    let cab = lookup(&v.flip(a).flip(b))?;
                    let cb = lookup(&v.flip(b))?;
                    let corners = [i, ca, cab, cb];
                    let mut es = [0; 4];
                    for k in 0..4 {
                        let (x, y) = (corners[k], corners[(k + 1) % 4]);
                        es[k] = edge_index[&(x.min(y), x.max(y))];
                    }
                    squares.push(Square { corners, edges: es });
                }
            }
            for k in next..evens.len() {
                if clique.iter().all(|&c| compatible(c, evens[k])) {
                    let mut c = clique.clone();
                    c.push(evens[k]);
                    stack.push((c, k + 1));
                }
            }
        }
    }
    squares.sort_by_key(|s| (s.corners[0], s.edges));
    let n = vertices.len();
    Ok(CubeComplex::assemble(Some(p.clone()), vertices, n, edges, squares, cube_counts))
}

impl CubeComplex {
    fn assemble(
        pocset: Option<Pocset>,
        vertices: Vec<Ultrafilter>,
        vertex_count: usize,
        edges: Vec<Edge>,
        squares: Vec<Square>,
        cube_counts: Vec<usize>,
    ) -> Self {
        let mut adjacency = vec![Vec::new(); vertex_count];
        let mut uf = UnionFind::<usize>::new(vertex_count);
        for (k, e) in edges.iter().enumerate() {
            adjacency[e.u].push((e.v, k));
            adjacency[e.v].push((e.u, k));
            uf.union(e.u, e.v);
        }
        for a in &mut adjacency {
            a.sort_unstable();
        }
        let mut by_root: HashMap<usize, usize> = HashMap::new();
        let mut components: Vec<Vec<usize>> = Vec::new();
        let mut component_of = vec![0; vertex_count];
        for (v, slot) in component_of.iter_mut().enumerate() {
            let r = uf.find(v);
            let id = *by_root.entry(r).or_insert_with(|| {
                components.push(Vec::new());
                components.len() - 1
            });
            components[id].push(v);
            *slot = id;
        }
        CubeComplex { pocset, vertices, vertex_count, edges, adjacency, squares, cube_counts, components, component_of }
    }

    /// Loads a bare graph; squares are its induced 4-cycles. Used to feed
    /// arbitrary (possibly non-median) inputs to the checks.
    pub fn from_raw(vertex_count: usize, edge_list: &[(usize, usize)]) -> Result<Self, CubeError> {
        let mut seen = HashSet::new();
        let mut edges = Vec::new();
        for &(a, b) in edge_list {
            if a >= vertex_count || b >= vertex_count {
                return Err(CubeError::Raw(format!("edge ({a},{b}) out of range")));
            }
            if a == b {
                return Err(CubeError::Raw(format!("loop at {a}")));
            }
            if !seen.insert((a.min(b), a.max(b))) {
                return Err(CubeError::Raw(format!("repeated edge ({a},{b})")));
            }
            edges.push(Edge { u: a.min(b), v: a.max(b), label: None });
        }
        let edge_index: HashMap<(usize, usize), usize> = edges.iter().enumerate().map(|(k, e)| ((e.u, e.v), k)).collect();
        let adjacent = |x: usize, y: usize| edge_index.contains_key(&(x.min(y), x.max(y)));
        let mut nbrs = vec![Vec::new(); vertex_count];
        for e in &edges {
            nbrs[e.u].push(e.v);
            nbrs[e.v].push(e.u);
        }
        let mut found = HashSet::new();
        let mut squares = Vec::new();
        for a in 0..vertex_count {
            for (i, &b) in nbrs[a].iter().enumerate() {
                for &d in &nbrs[a][i + 1..] {
                    if adjacent(b, d) {
                        continue;
                    }
                    for &c in &nbrs[b] {
                        if c != a && adjacent(c, d) && !adjacent(a, c) {
                            let mut key = [a, b, c, d];
                            key.sort_unstable();
                            if found.insert(key) {
                                let corners = [a, b, c, d];
                                let mut es = [0; 4];
                                for k in 0..4 {
                                    let (x, y) = (corners[k], corners[(k + 1) % 4]);
                                    es[k] = edge_index[&(x.min(y), x.max(y))];
                                }
                                squares.push(Square { corners, edges: es });
                            }
                        }
                    }
                }
            }
        }
        squares.sort_by_key(|s| (s.corners[0], s.edges));
        let counts = vec![vertex_count, edges.len(), squares.len()];
        Ok(CubeComplex::assemble(None, Vec::new(), vertex_count, edges, squares, counts))
    }

    pub fn pocset(&self) -> Option<&Pocset> {
        self.pocset.as_ref()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    /// Ultrafilters, empty for raw complexes.
    pub fn vertices(&self) -> &[Ultrafilter] {
        &self.vertices
    }

    pub fn vertex_of(&self, u: &Ultrafilter) -> Option<usize> {
        self.vertices.iter().position(|v| v == u)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn squares(&self) -> &[Square] {
        &self.squares
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.adjacency[v].iter().map(|&(w, _)| w)
    }

    /// Number of cubes by dimension; index 0 counts vertices.
    pub fn cube_counts(&self) -> &[usize] {
        &self.cube_counts
    }

    pub fn dimension(&self) -> usize {
        self.cube_counts.iter().rposition(|&c| c > 0).unwrap_or(0)
    }

    pub fn components(&self) -> &[Vec<usize>] {
        &self.components
    }

    pub fn component_of(&self, v: usize) -> usize {
        self.component_of[v]
    }

    /// Largest cube dimension among cubes whose vertices lie in `component`.
    pub fn component_dimension(&self, component: usize) -> Result<usize, CubeError> {
        let members = self.components.get(component).ok_or(CubeError::NoSuchComponent(component))?;
        if members.is_empty() {
            return Ok(0);
        }
        if self.components.len() == 1 {
            return Ok(self.dimension());
        }
        let has_edge = self.edges.iter().any(|e| self.component_of[e.u] == component);
        let has_square = self.squares.iter().any(|s| self.component_of[s.corners[0]] == component);
        if !has_edge {
            return Ok(0);
        }
        if !has_square {
            return Ok(1);
        }
        // cubes of dimension ≥ 3 are only counted globally; recount locally
        let mut best = 2;
        for &v in members {
            best = best.max(self.local_cube_dimension(v));
        }
        Ok(best)
    }

    fn local_cube_dimension(&self, v: usize) -> usize {
        let nbrs: Vec<usize> = self.neighbors(v).collect();
        let pairs = self.square_partners(v);
        let mut best = usize::from(!nbrs.is_empty());
        let mut stack: Vec<(Vec<usize>, usize)> = (0..nbrs.len()).map(|k| (vec![k], k + 1)).collect();
        while let Some((clique, next)) = stack.pop() {
            if clique.len() > best && self.cube_exists(v, &clique.iter().map(|&k| nbrs[k]).collect::<Vec<_>>()) {
                best = clique.len();
            }
            for k in next..nbrs.len() {
                if clique.iter().all(|&c| pairs.contains(&(nbrs[c].min(nbrs[k]), nbrs[c].max(nbrs[k])))) {
                    let mut c = clique.clone();
                    c.push(k);
                    stack.push((c, k + 1));
                }
            }
        }
        best
    }

    /// Neighbour pairs `(x, y)`, `x < y`, spanning a square at `v`, with multiplicity.
    fn square_partner_list(&self, v: usize) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for s in &self.squares {
            if let Some(k) = s.corners.iter().position(|&c| c == v) {
                let x = s.corners[(k + 1) % 4];
                let y = s.corners[(k + 3) % 4];
                out.push((x.min(y), x.max(y)));
            }
        }
        out.sort_unstable();
        out
    }

    fn square_partners(&self, v: usize) -> HashSet<(usize, usize)> {
        self.square_partner_list(v).into_iter().collect()
    }

    /// True iff the neighbours `ends` of `v` span a cube with corner `v`.
    fn cube_exists(&self, v: usize, ends: &[usize]) -> bool {
        let k = ends.len();
        if k <= 1 {
            return true;
        }
        let adjacent = |x: usize, y: usize| self.adjacency[x].binary_search_by(|probe| probe.0.cmp(&y)).is_ok();
        let mut corner: HashMap<u32, usize> = HashMap::new();
        corner.insert(0, v);
        for (i, &e) in ends.iter().enumerate() {
            corner.insert(1 << i, e);
        }
        let mut masks: Vec<u32> = (0..(1u32 << k)).filter(|m| m.count_ones() >= 2).collect();
        masks.sort_by_key(|m| m.count_ones());
        for mask in masks {
            let subs: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).map(|i| corner[&(mask & !(1 << i))]).collect();
            let below: HashSet<usize> = corner.values().copied().collect();
            let candidate = self.adjacency[subs[0]]
                .iter()
                .map(|&(w, _)| w)
                .find(|&w| !below.contains(&w) && subs.iter().all(|&s| adjacent(w, s)));
            match candidate {
                Some(w) => {
                    corner.insert(mask, w);
                }
                None => return false,
            }
        }
        true
    }

    /// Graph distances from `u`; `None` marks unreachable vertices.
    pub fn distances_from(&self, u: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.vertex_count];
        let mut queue = VecDeque::new();
        dist[u] = Some(0);
        queue.push_back(u);
        while let Some(x) = queue.pop_front() {
            let d = dist[x].expect("queued vertices have distances");
            for &(y, _) in &self.adjacency[x] {
                if dist[y].is_none() {
                    dist[y] = Some(d + 1);
                    queue.push_back(y);
                }
            }
        }
        dist
    }

    pub fn distance(&self, u: usize, v: usize) -> Result<Option<usize>, CubeError> {
        if u >= self.vertex_count {
            return Err(CubeError::NoSuchVertex(u));
        }
        if v >= self.vertex_count {
            return Err(CubeError::NoSuchVertex(v));
        }
        Ok(self.distances_from(u)[v])
    }

    /// Edge classes of `component` under "opposite sides of a square", each
    /// checked to cut the component into exactly two half-spaces.
    pub fn hyperplanes(&self, component: usize) -> Result<Vec<Hyperplane>, CubeError> {
        let members = self.components.get(component).ok_or(CubeError::NoSuchComponent(component))?;
        let edge_ids: Vec<usize> =
            (0..self.edges.len()).filter(|&k| self.component_of[self.edges[k].u] == component).collect();
        let mut uf = UnionFind::<usize>::new(self.edges.len());
        let squares: Vec<&Square> = self.squares.iter().filter(|s| self.component_of[s.corners[0]] == component).collect();
        for s in &squares {
            uf.union(s.edges[0], s.edges[2]);
            uf.union(s.edges[1], s.edges[3]);
        }
        for s in &squares {
            for k in 0..4 {
                if uf.equiv(s.edges[k], s.edges[(k + 1) % 4]) {
                    return Err(CubeError::Structural(format!(
                        "hyperplane meets the square at {:?} in two adjacent edges",
                        s.corners
                    )));
                }
            }
        }
        let mut classes: Vec<Vec<usize>> = Vec::new();
        let mut class_of: HashMap<usize, usize> = HashMap::new();
        for &k in &edge_ids {
            let r = uf.find(k);
            let id = *class_of.entry(r).or_insert_with(|| {
                classes.push(Vec::new());
                classes.len() - 1
            });
            classes[id].push(k);
        }
        let local: HashMap<usize, usize> = members.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut out = Vec::new();
        for class in classes {
            let cut: HashSet<usize> = class.iter().copied().collect();
            let mut side = vec![usize::MAX; members.len()];
            let mut parts = 0;
            for start in 0..members.len() {
                if side[start] != usize::MAX {
                    continue;
                }
                side[start] = parts;
                let mut queue = VecDeque::from([members[start]]);
                while let Some(x) = queue.pop_front() {
                    for &(y, k) in &self.adjacency[x] {
                        if !cut.contains(&k) && side[local[&y]] == usize::MAX {
                            side[local[&y]] = parts;
                            queue.push_back(y);
                        }
                    }
                }
                parts += 1;
            }
            if parts != 2 {
                return Err(CubeError::Structural(format!(
                    "hyperplane through edge {} leaves {parts} pieces",
                    class[0]
                )));
            }
            if class.iter().any(|&k| side[local[&self.edges[k].u]] == side[local[&self.edges[k].v]]) {
                return Err(CubeError::Structural(format!("hyperplane through edge {} does not separate", class[0])));
            }
            let mut halves = [Vec::new(), Vec::new()];
            for (i, &v) in members.iter().enumerate() {
                halves[side[i]].push(v);
            }
            let labels: HashSet<Option<usize>> = class.iter().map(|&k| self.edges[k].label).collect();
            let label = if labels.len() == 1 { *labels.iter().next().expect("one label") } else { None };
            if let Some(pair) = label {
                let first = halves[0][0];
                if self.vertices[first].contains(2 * pair + 1) {
                    halves.swap(0, 1);
                }
            }
            out.push(Hyperplane { edges: class, label, half_spaces: halves });
        }
        Ok(out)
    }

    /// Median and link checks on one component.
    pub fn check_median(&self, component: usize) -> Result<MedianReport, CubeError> {
        let members = self.components.get(component).ok_or(CubeError::NoSuchComponent(component))?;
        let mut report = MedianReport {
            component,
            vertices: members.len(),
            method: MedianMethod::AllTriples,
            median_ok: true,
            flag_ok: true,
            counterexample: None,
        };
        if let Some(failure) = self.check_links(members) {
            report.flag_ok = false;
            report.counterexample = Some(failure);
            return Ok(report);
        }
        let failure = if members.len() <= EXHAUSTIVE_MEDIAN_LIMIT {
            self.median_all_triples(members)
        } else if !self.vertices.is_empty() {
            report.method = MedianMethod::EmbeddedMajority;
            self.median_embedded(members)
        } else {
            return Err(CubeError::Raw(format!(
                "raw component with {} vertices exceeds the exhaustive limit {EXHAUSTIVE_MEDIAN_LIMIT}",
                members.len()
            )));
        };
        if failure.is_some() {
            report.median_ok = false;
            report.counterexample = failure;
        }
        Ok(report)
    }

    fn check_links(&self, members: &[usize]) -> Option<MedianFailure> {
        for &v in members {
            let list = self.square_partner_list(v);
            if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
                return Some(MedianFailure::LinkNotSimplicial { vertex: v, edge_ends: vec![w[0].0, w[0].1] });
            }
            let pairs: HashSet<(usize, usize)> = list.into_iter().collect();
            let nbrs: Vec<usize> = self.neighbors(v).collect();
            let mut stack: Vec<(Vec<usize>, usize)> = (0..nbrs.len()).map(|k| (vec![nbrs[k]], k + 1)).collect();
            while let Some((clique, next)) = stack.pop() {
                if clique.len() >= 3 && !self.cube_exists(v, &clique) {
                    return Some(MedianFailure::LinkNotFlag { vertex: v, edge_ends: clique });
                }
                for k in next..nbrs.len() {
                    let w = nbrs[k];
                    if clique.iter().all(|&c| pairs.contains(&(c.min(w), c.max(w)))) {
                        let mut c = clique.clone();
                        c.push(w);
                        stack.push((c, k + 1));
                    }
                }
            }
        }
        None
    }

    fn median_all_triples(&self, members: &[usize]) -> Option<MedianFailure> {
        let n = members.len();
        let dist: Vec<Vec<usize>> = members
            .iter()
            .map(|&u| {
                let d = self.distances_from(u);
                members.iter().map(|&v| d[v].expect("same component")).collect()
            })
            .collect();
        let interval = |a: usize, b: usize| {
            let mut s = FixedBitSet::with_capacity(n);
            for x in 0..n {
                if dist[a][x] + dist[x][b] == dist[a][b] {
                    s.insert(x);
                }
            }
            s
        };
        let intervals: Vec<Vec<FixedBitSet>> = (0..n).map(|a| (0..n).map(|b| interval(a, b)).collect()).collect();
        for a in 0..n {
            for b in a + 1..n {
                let ab = &intervals[a][b];
                for c in b + 1..n {
                    let mut m = ab.clone();
                    m.intersect_with(&intervals[b][c]);
                    m.intersect_with(&intervals[a][c]);
                    let count = m.count_ones(..);
                    if count != 1 {
                        let triple = [members[a], members[b], members[c]];
                        return Some(MedianFailure::MedianCount {
                            triple,
                            medians: m.ones().map(|x| members[x]).collect(),
                        });
                    }
                }
            }
        }
        None
    }

    /// For ultrafilter complexes: the choice vectors embed the component
    /// isometrically in a cube, and the vertex set equals the solution set of
    /// its own two-coordinate projections, which makes it closed under
    /// coordinatewise majority.
    fn median_embedded(&self, members: &[usize]) -> Option<MedianFailure> {
        for &u in members {
            let d = self.distances_from(u);
            for &v in members {
                let h = self.vertices[u].differing_pairs(&self.vertices[v]);
                if d[v] != Some(h) {
                    return Some(MedianFailure::NotIsometric { u, v, graph: d[v].unwrap_or(usize::MAX), hamming: h });
                }
            }
        }
        let m = self.vertices[members[0]].pairs();
        let n = 2 * m;
        // literal columns: which members select element e
        let mut cols = vec![FixedBitSet::with_capacity(members.len()); n];
        for (i, &v) in members.iter().enumerate() {
            for e in self.vertices[v].selected.ones() {
                cols[e].insert(i);
            }
        }
        let mut up = vec![FixedBitSet::with_capacity(n); n];
        for (e, row) in up.iter_mut().enumerate() {
            row.insert(e);
        }
        for x in 0..n {
            if cols[x].is_clear() {
                up[x].insert(complement(x));
                continue;
            }
            for y in 0..n {
                if y / 2 != x / 2 && cols[x].is_disjoint(&cols[y]) {
                    // x and y never hold together: x implies not y
                    up[x].insert(complement(y));
                }
            }
        }
        for k in 0..n {
            let row_k = up[k].clone();
            for row in up.iter_mut() {
                if row.contains(k) {
                    row.union_with(&row_k);
                }
            }
        }
        let mut forced = FixedBitSet::with_capacity(n);
        for x in 0..n {
            if up[complement(x)].contains(x) {
                forced.union_with(&up[x]);
            }
        }
        let mut solutions = enumerate_closed(&up, forced, members.len() + 1);
        if solutions.len() <= members.len() {
            return None;
        }
        let present: HashSet<&FixedBitSet> = members.iter().map(|&v| &self.vertices[v].selected).collect();
        solutions.retain(|s| !present.contains(s));
        Some(MedianFailure::NotMajorityClosed { missing: solutions.first().map(|s| Ultrafilter::from_selected(s.clone()).choice()) })
    }

    /// Deterministic DOT text. `overlay` vertices are filled; edges are
    /// coloured by hyperplane.
    pub fn to_dot(&self, overlay: Option<&[usize]>) -> String {
        const PALETTE: [&str; 10] =
            ["red", "blue", "darkgreen", "orange", "purple", "brown", "magenta", "cyan4", "gold3", "gray40"];
        let mut colour: HashMap<usize, usize> = HashMap::new();
        let mut next = 0;
        for c in 0..self.components.len() {
            if let Ok(hs) = self.hyperplanes(c) {
                for h in hs {
                    for &k in &h.edges {
                        colour.insert(k, next);
                    }
                    next += 1;
                }
            }
        }
        let marked: HashSet<usize> = overlay.map(|o| o.iter().copied().collect()).unwrap_or_default();
        let mut out = String::from("graph cubing {\n  node [shape=record];\n");
        for v in 0..self.vertex_count {
            let label = if self.vertices.is_empty() {
                format!("v{v}")
            } else {
                let u = &self.vertices[v];
                (0..u.pairs())
                    .map(|i| if u.contains(2 * i) { format!("{i}") } else { format!("{i}*") })
                    .collect::<Vec<_>>()
                    .join("|")
            };
            let fill = if marked.contains(&v) { ", style=filled, fillcolor=lightblue" } else { "" };
            let _ = writeln!(out, "  v{v} [label=\"{label}\"{fill}];");
        }
        for (k, e) in self.edges.iter().enumerate() {
            let mut attrs = Vec::new();
            if let Some(l) = e.label {
                attrs.push(format!("label=\"{l}\""));
            }
            if let Some(c) = colour.get(&k) {
                attrs.push(format!("color={}", PALETTE[c % PALETTE.len()]));
            }
            let _ = writeln!(out, "  v{} -- v{} [{}];", e.u, e.v, attrs.join(", "));
        }
        out.push_str("}\n");
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MedianMethod {
    AllTriples,
    EmbeddedMajority,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MedianFailure {
    MedianCount { triple: [usize; 3], medians: Vec<usize> },
    NotIsometric { u: usize, v: usize, graph: usize, hamming: usize },
    NotMajorityClosed { missing: Option<Vec<bool>> },
    LinkNotSimplicial { vertex: usize, edge_ends: Vec<usize> },
    LinkNotFlag { vertex: usize, edge_ends: Vec<usize> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MedianReport {
    pub component: usize,
    pub vertices: usize,
    pub method: MedianMethod,
    pub median_ok: bool,
    pub flag_ok: bool,
    pub counterexample: Option<MedianFailure>,
}

impl MedianReport {
    pub fn passed(&self) -> bool {
        self.median_ok && self.flag_ok
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn complex(m: usize, rel: &[(usize, usize)]) -> CubeComplex {
        build_complex(&Pocset::from_relations(m, rel).unwrap(), &Limits::default()).unwrap()
    }

    #[test]
    fn free_pairs_give_cubes() {
        let sq = complex(2, &[]);
        assert_eq!(sq.cube_counts(), &[4, 4, 1]);
        let cube = complex(3, &[]);
        assert_eq!(cube.cube_counts(), &[8, 12, 6, 1]);
        assert!(cube.check_median(0).unwrap().passed());
    }

    #[test]
    fn one_relation_gives_a_path() {
        let p = Pocset::from_relations(2, &[(0, 2)]).unwrap();
        let us = enumerate_ultrafilters(&p, &Limits::default()).unwrap();
        assert_eq!(us.len(), 3);
        // {A, B*} is excluded
        assert!(!us.contains(&Ultrafilter::from_choice(&[false, true])));
        let c = complex(2, &[(0, 2)]);
        assert_eq!(c.cube_counts(), &[3, 2]);
        let hs = c.hyperplanes(0).unwrap();
        let mut sizes: Vec<(usize, usize)> = hs.iter().map(|h| (h.half_spaces[0].len(), h.half_spaces[1].len())).collect();
        sizes.sort();
        assert_eq!(sizes, vec![(1, 2), (2, 1)]);
    }

    #[test]
    fn lexicographic_order() {
        let us = enumerate_ultrafilters(&Pocset::free(2), &Limits::default()).unwrap();
        let choices: Vec<Vec<bool>> = us.iter().map(|u| u.choice()).collect();
        assert_eq!(choices, vec![vec![false, false], vec![false, true], vec![true, false], vec![true, true]]);
    }

    #[test]
    fn caps_are_enforced() {
        let limits = Limits { max_pairs: 3, max_vertices: 5000 };
        assert!(matches!(enumerate_ultrafilters(&Pocset::free(4), &limits), Err(CubeError::TooManyPairs { .. })));
        let limits = Limits { max_pairs: 10, max_vertices: 7 };
        assert!(matches!(enumerate_ultrafilters(&Pocset::free(3), &limits), Err(CubeError::TooManyVertices { .. })));
    }

    #[test]
    fn square_distances_and_dot() {
        let sq = complex(2, &[]);
        assert_eq!(sq.distance(0, 3).unwrap(), Some(2));
        assert_eq!(sq.distance(1, 1).unwrap(), Some(0));
        let dot = sq.to_dot(None);
        assert_eq!(dot.matches(" -- ").count(), 4);
        assert_eq!(dot.matches("[label=\"").count(), 4 + 4);
        let colours: HashSet<&str> = dot.lines().filter_map(|l| l.split("color=").nth(1)).collect();
        assert_eq!(colours.len(), 2);
    }

    #[test]
    fn k23_has_two_medians() {
        // two-element side {0,1}, three-element side {2,3,4}
        let edges = [(0, 2), (0, 3), (0, 4), (1, 2), (1, 3), (1, 4)];
        let c = CubeComplex::from_raw(5, &edges).unwrap();
        let r = c.check_median(0).unwrap();
        assert!(!r.passed());
        // brute force: vertices lying on geodesics between every pair of 2, 3, 4
        let d = |u: usize, v: usize| c.distance(u, v).unwrap().unwrap();
        let medians: Vec<usize> =
            (0..5).filter(|&x| [(2, 3), (3, 4), (2, 4)].iter().all(|&(a, b)| d(a, x) + d(x, b) == d(a, b))).collect();
        assert_eq!(medians, vec![0, 1]);
    }

    #[test]
    fn raw_square_is_median() {
        let c = CubeComplex::from_raw(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        assert_eq!(c.squares().len(), 1);
        assert!(c.check_median(0).unwrap().passed());
        assert_eq!(c.hyperplanes(0).unwrap().len(), 2);
        assert!(CubeComplex::from_raw(2, &[(0, 0)]).is_err());
    }

    #[test]
    fn six_cycle_fails_hyperplane_check() {
        let c = CubeComplex::from_raw(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)]).unwrap();
        assert!(c.hyperplanes(0).is_err());
        assert!(!c.check_median(0).unwrap().passed());
    }
}
