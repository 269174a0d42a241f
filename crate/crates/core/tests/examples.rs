use std::collections::HashSet;
use std::path::Path;

use minicube::backends::{act, FreeSet, GroupElement, Region, SetDescriptor, Stabilizer, Word};
use minicube::cubecomplex::Limits;
use minicube::instance::Instance;
use minicube::minimal::{almost_cubing, inclusion_cubing, recover_set, verify_embedding};
use minicube::window::{Policy, Window};

fn load(name: &str) -> Instance {
    Instance::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("instances").join(format!("{name}.json"))).unwrap()
}

fn free_set(cones: &[&str], exceptions: &[&str]) -> SetDescriptor {
    let words = |ws: &[&str]| ws.iter().map(|w| Word::parse(w).unwrap()).collect::<Vec<_>>();
    SetDescriptor::new(Region::Free(FreeSet::from_parts(&words(cones), &words(exceptions))), Stabilizer::Trivial).unwrap()
}

#[test]
fn halfline_window_lists_the_rays() {
    let w = Window::build(&load("z_halfline"), 3, 2).unwrap();
    assert_eq!(w.pairs(), 11);
    let names: HashSet<String> = w.elements().iter().map(|d| d.to_string()).collect();
    for a in -5..=5 {
        assert!(names.contains(&format!("L_{a}")), "missing L_{a}");
        assert!(names.contains(&format!("R_{}", a + 1)), "missing R_{}", a + 1);
    }
    let s = w.summary();
    assert_eq!(Some(s.incl_relations), s.almost_relations);
    assert_eq!(s.bound_r, Some(1));
}

#[test]
fn free_two_orbit_window_has_strictly_more_relations() {
    let w = Window::build(&load("free_semi_nested"), 2, 1).unwrap();
    assert!(w.is_good_position());
    assert!(w.order_report().unwrap().passed());
    let s = w.summary();
    let incl: HashSet<_> = s.incl_relations.iter().copied().collect();
    let almost: HashSet<_> = s.almost_relations.unwrap().into_iter().collect();
    assert!(incl.is_subset(&almost));
    assert!(almost.len() > incl.len());
    assert!(!w.semi_nested().is_empty());
    assert_eq!(s.bound_r, Some(2));

    // The semi-nested pair itself: A ∩ B* = {b⁻¹} is small, so A ≤ B without A ⊆ B.
    let a = w.index_of(&free_set(&["a"], &["B"])).unwrap();
    let b = w.index_of(&free_set(&["a", "b"], &[])).unwrap();
    assert!(w.almost_order().unwrap().leq(a, b));
    assert!(!w.incl_order().leq(a, b));
}

#[test]
fn basic_vertices_are_joined_by_geodesics() {
    for name in ["z_halfline", "grid_cross", "free_crossing_pair"] {
        let w = Window::build(&load(name), 3, 2).unwrap();
        let l = almost_cubing(&w, Policy::Lex, &Limits::default()).unwrap();
        let cx = &l.complex;
        for (i, &(_, u)) in l.basic.iter().enumerate() {
            let dist = cx.distances_from(u);
            for &(_, v) in &l.basic[i + 1..] {
                assert_eq!(dist[v], Some(cx.vertices()[u].differing_pairs(&cx.vertices()[v])), "{name}");
            }
        }
    }
}

#[test]
fn free_semi_nested_loses_vertices_but_keeps_distances() {
    let w = Window::build(&load("free_semi_nested"), 3, 2).unwrap();
    let limits = Limits::default();
    let c = inclusion_cubing(&w, &limits).unwrap();
    let l = almost_cubing(&w, Policy::Lex, &limits).unwrap();
    let r = verify_embedding(&c, &l).unwrap();
    assert!(r.passed());
    assert!(!r.is_identity());
    assert!(r.vertices_l < r.vertices_c);
    assert!(r.distance_exhaustive);
    assert_eq!(r.dimension_l, 1);
    assert_eq!(r.dimension_c, 2);
}

#[test]
fn recovered_sets_on_free_windows() {
    let w = Window::build(&load("free_semi_nested"), 3, 2).unwrap();
    let limits = Limits::default();
    let c = inclusion_cubing(&w, &limits).unwrap();
    let l = almost_cubing(&w, Policy::Lex, &limits).unwrap();
    let ball = w.inner_ball();
    let e = GroupElement::Free(Word::identity());
    let near = w.complete_basic_vertex(&e, Policy::Lex).unwrap().near;
    for x in w.instance().family.clone() {
        let idx = w.index_of(&x).unwrap();
        // From V_e the set comes back exactly.
        let v = c.basic.iter().find(|(g, _)| *g == e).unwrap().1;
        let rec = recover_set(&w, &c, idx, v, &ball).unwrap();
        assert!(rec.undefined.is_empty());
        assert!(rec.difference_with(&x).is_empty(), "{x}");
        // W_e only differs from V_e near e, so the disagreements are the
        // elements g whose translate g⁻¹X lies in that neighbourhood.
        let v = l.basic.iter().find(|(g, _)| *g == e).unwrap().1;
        let rec = recover_set(&w, &l, idx, v, &ball).unwrap();
        for g in rec.difference_with(&x) {
            let moved = act(&g.inverse(), &x).unwrap();
            assert!(near.contains(w.index_of(&moved).unwrap()), "{x} at {moved}");
        }
    }
}
