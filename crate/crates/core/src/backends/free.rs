//! The free group on `a, b` and its boolean algebra of cone sets.
//!
//! Letters are `a`, `b`, `A = a⁻¹`, `B = b⁻¹`. A set is stored as a trie over
//! reduced words: a `Leaf(v)` at word `w` means every reduced word with prefix
//! `w` has membership `v`; a `Branch` records the membership of `w` itself and
//! one child per letter that may follow `w`. Branches whose children are all
//! leaves equal to the branch's own membership are collapsed, so the trie is
//! unique for each set.

use std::cmp::Ordering;
use std::fmt;

pub const LETTERS: [u8; 4] = [0, 1, 2, 3];

pub fn inverse_letter(x: u8) -> u8 {
    (x + 2) % 4
}

fn letter_char(x: u8) -> char {
    ['a', 'b', 'A', 'B'][x as usize]
}

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Word(Vec<u8>);

impl Word {
    pub fn identity() -> Self {
        Word(Vec::new())
    }

    pub fn letter(x: u8) -> Self {
        Word(vec![x])
    }

    pub fn from_letters(letters: &[u8]) -> Self {
        let mut w = Word::identity();
        for &x in letters {
            w.push(x);
        }
        w
    }

    pub fn letters(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_empty()
    }

    pub fn last(&self) -> Option<u8> {
        self.0.last().copied()
    }

    /// Appends a letter, cancelling if it inverts the last one.
    pub fn push(&mut self, x: u8) {
        if self.0.last() == Some(&inverse_letter(x)) {
            self.0.pop();
        } else {
            self.0.push(x);
        }
    }

    pub fn mul(&self, other: &Word) -> Word {
        let mut w = self.clone();
        for &x in &other.0 {
            w.push(x);
        }
        w
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|&x| inverse_letter(x)).collect())
    }

    pub fn parse(s: &str) -> Option<Word> {
        let s = s.trim();
        if s == "e" || s.is_empty() {
            return Some(Word::identity());
        }
        let mut letters = Vec::new();
        for c in s.chars() {
            letters.push(match c {
                'a' => 0,
                'b' => 1,
                'A' => 2,
                'B' => 3,
                _ => return None,
            });
        }
        Some(Word::from_letters(&letters))
    }

    /// True iff `letters` is already reduced.
    pub fn is_reduced(letters: &[u8]) -> bool {
        letters.windows(2).all(|w| w[1] != inverse_letter(w[0]))
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.len().cmp(&other.0.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "e");
        }
        for &x in &self.0 {
            write!(f, "{}", letter_char(x))?;
        }
        Ok(())
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Node {
    Leaf(bool),
    Branch { member: bool, children: Box<[Node; 4]> },
}

fn allowed(last: Option<u8>, x: u8) -> bool {
    last.map_or(true, |l| x != inverse_letter(l))
}

impl Node {
    fn expand(&self) -> (bool, [Node; 4]) {
        match self {
            Node::Leaf(v) => (*v, [Node::Leaf(*v), Node::Leaf(*v), Node::Leaf(*v), Node::Leaf(*v)]),
            Node::Branch { member, children } => (*member, (**children).clone()),
        }
    }

    fn branch(member: bool, mut children: [Node; 4], last: Option<u8>) -> Node {
        for x in LETTERS {
            if !allowed(last, x) {
                children[x as usize] = Node::Leaf(false);
            }
        }
        let collapsible = LETTERS
            .iter()
            .filter(|&&x| allowed(last, x))
            .all(|&x| children[x as usize] == Node::Leaf(member));
        if collapsible {
            Node::Leaf(member)
        } else {
            Node::Branch { member, children: Box::new(children) }
        }
    }

    fn combine(a: &Node, b: &Node, op: &dyn Fn(bool, bool) -> bool, last: Option<u8>) -> Node {
        if let (Node::Leaf(p), Node::Leaf(q)) = (a, b) {
            return Node::Leaf(op(*p, *q));
        }
        let (ma, ca) = a.expand();
        let (mb, cb) = b.expand();
        let children = LETTERS.map(|x| {
            if allowed(last, x) {
                Node::combine(&ca[x as usize], &cb[x as usize], op, Some(x))
            } else {
                Node::Leaf(false)
            }
        });
        Node::branch(op(ma, mb), children, last)
    }

    fn has_true_leaf(&self, last: Option<u8>) -> bool {
        match self {
            Node::Leaf(v) => *v,
            Node::Branch { children, .. } => LETTERS
                .iter()
                .filter(|&&x| allowed(last, x))
                .any(|&x| children[x as usize].has_true_leaf(Some(x))),
        }
    }

    fn depth(&self) -> usize {
        match self {
            Node::Leaf(_) => 0,
            Node::Branch { children, .. } => 1 + children.iter().map(Node::depth).max().unwrap_or(0),
        }
    }

    fn collect_points(&self, prefix: &mut Vec<u8>, last: Option<u8>, out: &mut Vec<Word>) {
        if let Node::Branch { member, children } = self {
            if *member {
                out.push(Word(prefix.clone()));
            }
            for x in LETTERS {
                if allowed(last, x) {
                    prefix.push(x);
                    children[x as usize].collect_points(prefix, Some(x), out);
                    prefix.pop();
                }
            }
        }
    }
}

/// Path from the current node down to `rest`, ending in `end`.
fn path(rest: &[u8], last: Option<u8>, end: Node) -> Node {
    match rest.split_first() {
        None => end,
        Some((&x, tail)) => {
            let mut children = [Node::Leaf(false), Node::Leaf(false), Node::Leaf(false), Node::Leaf(false)];
            children[x as usize] = path(tail, Some(x), end);
            Node::branch(false, children, last)
        }
    }
}

type Rendering = (Vec<Word>, Vec<Word>);

fn render_outside(node: &Node, prefix: &mut Vec<u8>, last: Option<u8>) -> Rendering {
    match node {
        Node::Leaf(true) => (vec![Word(prefix.clone())], vec![]),
        Node::Leaf(false) => (vec![], vec![]),
        Node::Branch { member, children } => {
            let mut plain: Rendering = (vec![], vec![]);
            if *member {
                plain.1.push(Word(prefix.clone()));
            }
            let mut coned: Option<Rendering> = Some((vec![Word(prefix.clone())], vec![]));
            if !*member {
                coned.as_mut().unwrap().1.push(Word(prefix.clone()));
            }
            for x in LETTERS {
                if !allowed(last, x) {
                    continue;
                }
                prefix.push(x);
                let child = &children[x as usize];
                let (c, e) = render_outside(child, prefix, Some(x));
                plain.0.extend(c);
                plain.1.extend(e);
                match (coned.as_mut(), render_inside(child, prefix, Some(x))) {
                    (Some(acc), Some(exc)) => acc.1.extend(exc),
                    _ => coned = None,
                }
                prefix.pop();
            }
            match coned {
                Some(c) if c.0.len() + c.1.len() < plain.0.len() + plain.1.len() => c,
                _ => plain,
            }
        }
    }
}

/// Exceptions needed below a node already covered by a cone, or `None` if the
/// subtree drops an infinite piece of the cone.
fn render_inside(node: &Node, prefix: &mut Vec<u8>, last: Option<u8>) -> Option<Vec<Word>> {
    match node {
        Node::Leaf(true) => Some(vec![]),
        Node::Leaf(false) => None,
        Node::Branch { member, children } => {
            let mut out = Vec::new();
            if !*member {
                out.push(Word(prefix.clone()));
            }
            for x in LETTERS {
                if allowed(last, x) {
                    prefix.push(x);
                    let below = render_inside(&children[x as usize], prefix, Some(x));
                    prefix.pop();
                    out.extend(below?);
                }
            }
            Some(out)
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FreeSet {
    root: Node,
}

impl FreeSet {
    pub fn empty() -> Self {
        FreeSet { root: Node::Leaf(false) }
    }

    pub fn full() -> Self {
        FreeSet { root: Node::Leaf(true) }
    }

    /// All reduced words beginning with `w`.
    pub fn cone(w: &Word) -> Self {
        FreeSet { root: path(w.letters(), None, Node::Leaf(true)) }
    }

    pub fn point(w: &Word) -> Self {
        let end = if w.is_identity() {
            Node::branch(true, [Node::Leaf(false), Node::Leaf(false), Node::Leaf(false), Node::Leaf(false)], None)
        } else {
            Node::branch(
                true,
                [Node::Leaf(false), Node::Leaf(false), Node::Leaf(false), Node::Leaf(false)],
                w.last(),
            )
        };
        FreeSet { root: path(w.letters(), None, end) }
    }

    pub fn from_parts(cones: &[Word], exceptions: &[Word]) -> Self {
        let mut s = FreeSet::empty();
        for c in cones {
            s = s.union(&FreeSet::cone(c));
        }
        for p in exceptions {
            s = s.symmetric_difference(&FreeSet::point(p));
        }
        s
    }

    pub fn contains(&self, w: &Word) -> bool {
        let mut node = &self.root;
        for &x in w.letters() {
            match node {
                Node::Leaf(v) => return *v,
                Node::Branch { children, .. } => node = &children[x as usize],
            }
        }
        match node {
            Node::Leaf(v) => *v,
            Node::Branch { member, .. } => *member,
        }
    }

    fn subtree(&self, w: &Word) -> Node {
        let mut node = &self.root;
        for &x in w.letters() {
            match node {
                Node::Leaf(v) => return Node::Leaf(*v),
                Node::Branch { children, .. } => node = &children[x as usize],
            }
        }
        node.clone()
    }

    pub fn combine(&self, other: &Self, op: impl Fn(bool, bool) -> bool) -> Self {
        FreeSet { root: Node::combine(&self.root, &other.root, &op, None) }
    }

    pub fn union(&self, other: &Self) -> Self {
        self.combine(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &Self) -> Self {
        self.combine(other, |a, b| a && b)
    }

    pub fn symmetric_difference(&self, other: &Self) -> Self {
        self.combine(other, |a, b| a != b)
    }

    pub fn complement(&self) -> Self {
        self.combine(self, |a, _| !a)
    }

    pub fn is_empty(&self) -> bool {
        self.root == Node::Leaf(false)
    }

    pub fn is_finite(&self) -> bool {
        !self.root.has_true_leaf(None)
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    /// Points of a finite set, sorted by length then letters.
    pub fn points(&self) -> Option<Vec<Word>> {
        if !self.is_finite() {
            return None;
        }
        let mut out = Vec::new();
        self.root.collect_points(&mut Vec::new(), None, &mut out);
        out.sort();
        Some(out)
    }

    /// Left translate `g·S`.
    pub fn translate(&self, g: &Word) -> Self {
        let g_inv = g.inverse();
        fn build(set: &FreeSet, g_inv: &Word, glen: usize, w: &mut Word) -> Node {
            let pulled = g_inv.mul(w);
            if w.len() > glen {
                return set.subtree(&pulled);
            }
            let last = w.last();
            let children = LETTERS.map(|x| {
                if allowed(last, x) {
                    w.push(x);
                    let n = build(set, g_inv, glen, w);
                    w.0.pop();
                    n
                } else {
                    Node::Leaf(false)
                }
            });
            Node::branch(set.contains(&pulled), children, last)
        }
        FreeSet { root: build(self, &g_inv, g.len(), &mut Word::identity()) }
    }

    /// A smallest description as a prefix-free set of cones plus toggled points.
    pub fn render(&self) -> (Vec<Word>, Vec<Word>) {
        let (mut cones, mut exceptions) = render_outside(&self.root, &mut Vec::new(), None);
        cones.sort();
        exceptions.sort();
        (cones, exceptions)
    }
}

impl fmt::Debug for FreeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (cones, exc) = self.render();
        write!(f, "cones{cones:?} xor {exc:?}")
    }
}

/// Reduced words of length at most `radius`, sorted by length then letters.
pub fn ball(radius: usize) -> Vec<Word> {
    let mut out = vec![Word::identity()];
    let mut frontier = vec![Word::identity()];
    for _ in 0..radius {
        let mut next = Vec::new();
        for w in &frontier {
            for x in LETTERS {
                if allowed(w.last(), x) {
                    let mut v = w.clone();
                    v.0.push(x);
                    next.push(v);
                }
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        Word::parse(s).unwrap()
    }

    #[test]
    fn words_reduce() {
        assert_eq!(w("aA"), Word::identity());
        assert_eq!(w("ab").mul(&w("Ba")), w("aa"));
        assert_eq!(w("abA").inverse(), w("aBA"));
        assert_eq!(format!("{}", w("abAB")), "abAB");
    }

    #[test]
    fn ball_sizes() {
        assert_eq!(ball(0).len(), 1);
        assert_eq!(ball(1).len(), 5);
        assert_eq!(ball(2).len(), 17);
        assert_eq!(ball(3).len(), 53);
    }

    #[test]
    fn cones_membership() {
        let c = FreeSet::cone(&w("ab"));
        assert!(c.contains(&w("ab")) && c.contains(&w("abaa")));
        assert!(!c.contains(&w("a")) && !c.contains(&w("aB")));
        assert!(!c.is_finite());
        let p = FreeSet::point(&w("B"));
        assert!(p.is_finite());
        assert_eq!(p.points(), Some(vec![w("B")]));
    }

    #[test]
    fn complement_of_cone() {
        let c = FreeSet::cone(&w("a"));
        let star = c.complement();
        let expect = FreeSet::from_parts(&[w("b"), w("A"), w("B")], &[Word::identity()]);
        assert_eq!(star, expect);
        assert_eq!(c.union(&star), FreeSet::full());
    }

    #[test]
    fn translation_matches_pointwise() {
        let s = FreeSet::from_parts(&[w("a"), w("bA")], &[w("B"), w("ab")]);
        for g in ball(3) {
            let t = s.translate(&g);
            let gi = g.inverse();
            for x in ball(5) {
                assert_eq!(t.contains(&x), s.contains(&gi.mul(&x)), "g = {g}, x = {x}");
            }
        }
    }

    #[test]
    fn translate_cone_by_letter() {
        assert_eq!(FreeSet::cone(&w("a")).translate(&w("b")), FreeSet::cone(&w("ba")));
        // a⁻¹·cone(a) is everything outside cone(a⁻¹)
        assert_eq!(FreeSet::cone(&w("a")).translate(&w("A")), FreeSet::cone(&w("A")).complement());
    }

    #[test]
    fn render_prefers_short_descriptions() {
        let s = FreeSet::cone(&w("a")).union(&FreeSet::point(&w("B")));
        assert_eq!(s.render(), (vec![w("a")], vec![w("B")]));
        let t = FreeSet::cone(&w("a")).symmetric_difference(&FreeSet::point(&w("a")));
        assert_eq!(t.render(), (vec![w("a")], vec![w("a")]));
        assert_eq!(FreeSet::from_parts(&t.render().0, &t.render().1), t);
    }

    #[test]
    fn render_after_failed_cone_attempt() {
        let s = FreeSet::from_parts(&[w("a"), w("B")], &[w("e"), w("b")]);
        assert_eq!(s.render(), (vec![w("a"), w("B")], vec![w("e"), w("b")]));
    }
}
