//! Contraction of decorated trees and the stratification poset.
//!
//! Contracting one edge orbit of an o-planar tree falls into four cases:
//! an invariant edge between real vertices (the two cyclic orders are
//! concatenated at the edge), the special edge (the new real vertex gets
//! either an empty real part or a nonempty one with no real points), a
//! conjugate pair at a real vertex (the positive branch joins the plus
//! side), or a conjugate pair away from real vertices (nothing changes).

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::planar::{
    canonical_rotation, enumerate_uplanar, lifts, to_uplanar, OPlanar, UPlanar, VertexData,
};
use crate::real::{
    enumerate_sigma_invariant_trees, sigma_invariance, LabelInvolution, TreeInvolution,
};
use crate::tree::{describe, Flag, Tree};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StrataError {
    #[error("edge set is not invariant under the involution")]
    NonInvariantEdgeSet,
    #[error("malformed contraction: {0}")]
    MalformedCase(String),
    #[error("the decorated trees are not adjacent")]
    NotAdjacent,
}

/// A tree with its involution and an o-planar structure, in canonical
/// numbering.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Decorated {
    pub tree: Tree,
    pub o: OPlanar,
}

/// Label involution read off a tree involution.
pub fn sigma_of(tree: &Tree, iota: &TreeInvolution) -> LabelInvolution {
    let moved = (1..=tree.n()).filter(|t| iota.flag(*t) != *t).count() as u32;
    LabelInvolution { k: moved / 2, l: tree.n() - moved }
}

/// Renumber a decorated tree canonically.
pub fn canonicalize(tree: &Tree, o: &OPlanar) -> Decorated {
    let c = tree.canonical();
    let fm = |f: &Flag| c.flag_map[f];
    let vertex_data = o
        .vertex_data
        .iter()
        .map(|(v, d)| {
            let d = match d {
                VertexData::Empty => VertexData::Empty,
                VertexData::NonEmpty { plus, order } => {
                    let mut plus: Vec<Flag> = plus.iter().map(fm).collect();
                    plus.sort_unstable();
                    let order: Vec<Flag> = order.iter().map(fm).collect();
                    VertexData::NonEmpty { plus, order: canonical_rotation(&order, tree.n()) }
                }
            };
            (c.vertex_map[*v as usize], d)
        })
        .collect();
    Decorated {
        tree: c.tree,
        o: OPlanar { vertex_data, plus_edge_flag: o.plus_edge_flag.as_ref().map(fm) },
    }
}

/// Edge orbits: single invariant edges and conjugate pairs, each given by
/// the smaller flag of every edge, sorted by smallest flag.
pub fn edge_orbits(tree: &Tree, iota: &TreeInvolution) -> Vec<Vec<Flag>> {
    let mut out: Vec<Vec<Flag>> =
        iota.invariant_edges(tree).into_iter().map(|(a, _)| vec![a]).collect();
    out.extend(iota.conjugate_edge_pairs(tree).into_iter().map(|(a, b)| vec![a, b]));
    out.sort();
    out
}

/// Sequence of a cyclic order read after `f`, with `f` itself dropped.
fn after(order: &[Flag], f: Flag) -> Vec<Flag> {
    let p = order.iter().position(|x| *x == f).expect("edge flag in real order");
    order[p + 1..].iter().chain(&order[..p]).copied().collect()
}

/// One elementary contraction in raw numbering.
fn contract_orbit_raw(
    tree: &Tree,
    iota: &TreeInvolution,
    o: &OPlanar,
    orbit: &[Flag],
) -> Result<Vec<(Tree, OPlanar)>, StrataError> {
    let n = tree.n();
    let mut edge_flags: BTreeSet<Flag> = BTreeSet::new();
    for f in orbit {
        if !tree.has_flag(*f) || tree.is_tail(*f) {
            return Err(StrataError::MalformedCase(format!("flag {f} is not an edge flag")));
        }
        edge_flags.insert(*f);
        edge_flags.insert(tree.partner(*f));
    }
    if edge_flags.iter().any(|f| !edge_flags.contains(&iota.flag(*f))) {
        return Err(StrataError::NonInvariantEdgeSet);
    }
    let c = tree.contract_edges(orbit).map_err(|e| StrataError::MalformedCase(e.to_string()))?;
    let remap = |o: &OPlanar| -> BTreeMap<u32, VertexData> {
        o.vertex_data.iter().map(|(v, d)| (c.vertex_map[*v as usize], d.clone())).collect()
    };
    let keep = |vertex_data| OPlanar { vertex_data, plus_edge_flag: None };
    match orbit.len() {
        1 => {
            let a = orbit[0];
            let b = tree.partner(a);
            if iota.flag(a) == a {
                // invariant edge between real vertices: concatenate
                let (va, vb) = (tree.vertex_of(a), tree.vertex_of(b));
                let (VertexData::NonEmpty { plus: pa, order: oa }, VertexData::NonEmpty { plus: pb, order: ob }) =
                    (o.data(va), o.data(vb))
                else {
                    return Err(StrataError::MalformedCase("empty real part at a real edge".into()));
                };
                let mut order = after(oa, a);
                order.extend(after(ob, b));
                let mut plus: Vec<Flag> = pa.iter().chain(pb).copied().collect();
                plus.sort_unstable();
                let mut data = remap(o);
                data.insert(
                    c.vertex_map[va as usize],
                    VertexData::NonEmpty { plus, order: canonical_rotation(&order, n) },
                );
                Ok(vec![(c.tree, keep(data))])
            } else if iota.flag(a) == b {
                let p = o
                    .plus_edge_flag
                    .ok_or_else(|| StrataError::MalformedCase("special edge without sign".into()))?;
                let mut plus: Vec<Flag> =
                    tree.flags_at(tree.vertex_of(p)).into_iter().filter(|f| *f != p).collect();
                plus.sort_unstable();
                let v = c.vertex_map[tree.vertex_of(a) as usize];
                let nonempty = BTreeMap::from([(v, VertexData::NonEmpty { plus, order: vec![] })]);
                let empty = BTreeMap::from([(v, VertexData::Empty)]);
                Ok(vec![(c.tree.clone(), keep(nonempty)), (c.tree, keep(empty))])
            } else {
                Err(StrataError::NonInvariantEdgeSet)
            }
        }
        2 => {
            let real_end = orbit
                .iter()
                .flat_map(|f| [*f, tree.partner(*f)])
                .find(|f| iota.is_real(tree.vertex_of(*f)));
            let mut data = remap(o);
            if o.plus_edge_flag.is_some() {
                return Ok(vec![(c.tree, OPlanar { vertex_data: data, plus_edge_flag: o.plus_edge_flag })]);
            }
            if let Some(c1) = real_end {
                let hat = tree.vertex_of(c1);
                let c2 = iota.flag(c1);
                // an empty real part stays empty
                let VertexData::NonEmpty { plus, order } = o.data(hat) else {
                    return Ok(vec![(c.tree, keep(data))]);
                };
                let up = if plus.contains(&c1) { c1 } else { c2 };
                let far = tree.partner(up);
                let mut new_plus: Vec<Flag> =
                    plus.iter().copied().filter(|f| *f != c1 && *f != c2).collect();
                new_plus.extend(tree.flags_at(tree.vertex_of(far)).into_iter().filter(|f| *f != far));
                new_plus.sort_unstable();
                data.insert(
                    c.vertex_map[hat as usize],
                    VertexData::NonEmpty { plus: new_plus, order: order.clone() },
                );
            }
            Ok(vec![(c.tree, keep(data))])
        }
        _ => Err(StrataError::MalformedCase("an orbit has one or two edges".into())),
    }
}

/// Split an invariant edge set into orbits sorted by smallest flag.
fn orbits_of(tree: &Tree, iota: &TreeInvolution, edges: &[Flag]) -> Result<Vec<Vec<Flag>>, StrataError> {
    let wanted: BTreeSet<Flag> = edges.iter().map(|f| (*f).min(tree.partner(*f))).collect();
    let mut out = Vec::new();
    let mut covered = BTreeSet::new();
    for orbit in edge_orbits(tree, iota) {
        let inside = orbit.iter().filter(|f| wanted.contains(f)).count();
        if inside == orbit.len() {
            covered.extend(orbit.iter().copied());
            out.push(orbit);
        } else if inside > 0 {
            return Err(StrataError::NonInvariantEdgeSet);
        }
    }
    if covered != wanted {
        return Err(StrataError::MalformedCase("unknown edge".into()));
    }
    Ok(out)
}

/// Contract an invariant set of edges, orbit by orbit in ascending order
/// of smallest flag. Results are canonical and deduplicated.
pub fn contract_oplanar(
    tree: &Tree,
    iota: &TreeInvolution,
    o: &OPlanar,
    edges: &[Flag],
) -> Result<Vec<Decorated>, StrataError> {
    let sigma = sigma_of(tree, iota);
    let orbits = orbits_of(tree, iota, edges)?;
    let mut current = vec![(tree.clone(), iota.clone(), o.clone())];
    for orbit in orbits {
        let mut next = Vec::new();
        for (t, i, o) in &current {
            for (t2, o2) in contract_orbit_raw(t, i, o, &orbit)? {
                let i2 = sigma_invariance(&t2, &sigma)
                    .ok_or_else(|| StrataError::MalformedCase("contraction broke invariance".into()))?;
                next.push((t2, i2, o2));
            }
        }
        current = next;
    }
    let set: BTreeSet<Decorated> = current.iter().map(|(t, _, o)| canonicalize(t, o)).collect();
    Ok(set.into_iter().collect())
}

/// Edges of `gamma` (smaller flags) whose contraction yields the tree `tau`.
pub fn contracted_edges(gamma: &Tree, tau: &Tree) -> Option<Vec<Flag>> {
    let keep = tau.splits();
    let gs = gamma.splits();
    if !keep.is_subset(&gs) {
        return None;
    }
    let masks = gamma.far_masks();
    let all = crate::tree::full_mask(gamma.n());
    let mut out = Vec::new();
    for ((f, m), g) in gamma.flags().iter().zip(&masks).zip(gamma.flags().iter().map(|f| gamma.partner(*f))) {
        if gamma.is_tail(*f) || *f > g {
            continue;
        }
        let split = if m & (1 << gamma.n()) != 0 { all & !m } else { *m };
        if !keep.contains(&split) {
            out.push(*f);
        }
    }
    Some(out)
}

/// The lift of `u_hat` on `gamma` contracting to `(tau, o)`.
pub fn face_lift(
    tau: &Tree,
    o: &OPlanar,
    gamma: &Tree,
    iota_gamma: &TreeInvolution,
    u_hat: &UPlanar,
) -> Result<OPlanar, StrataError> {
    let found = face_lifts(tau, o, gamma, iota_gamma, u_hat)?;
    found.into_iter().next().ok_or(StrataError::NotAdjacent)
}

/// All lifts of `u_hat` contracting to `(tau, o)`; normally at most one,
/// two when the stratum meets the same chamber from both sides.
pub fn face_lifts(
    tau: &Tree,
    o: &OPlanar,
    gamma: &Tree,
    iota_gamma: &TreeInvolution,
    u_hat: &UPlanar,
) -> Result<Vec<OPlanar>, StrataError> {
    let edges = contracted_edges(gamma, tau).ok_or(StrataError::NotAdjacent)?;
    let target = canonicalize(tau, o);
    let mut out = Vec::new();
    for cand in lifts(gamma, iota_gamma, u_hat) {
        if contract_oplanar(gamma, iota_gamma, &cand, &edges)?.contains(&target) {
            out.push(cand);
        }
    }
    Ok(out)
}

pub fn is_boundary(
    gamma: &Tree,
    iota_gamma: &TreeInvolution,
    u_hat: &UPlanar,
    tau: &Tree,
    u: &UPlanar,
) -> bool {
    let Some(edges) = contracted_edges(gamma, tau) else {
        return false;
    };
    let sigma = sigma_of(gamma, iota_gamma);
    let target = canonicalize(tau, &u.0);
    let Some(iota_tau) = sigma_invariance(&target.tree, &sigma) else {
        return false;
    };
    let target_u = to_uplanar(&target.tree, &iota_tau, &target.o);
    lifts(gamma, iota_gamma, u_hat).iter().any(|cand| {
        contract_oplanar(gamma, iota_gamma, cand, &edges).is_ok_and(|rs| {
            rs.iter().any(|d| {
                let i = sigma_invariance(&d.tree, &sigma).unwrap();
                to_uplanar(&d.tree, &i, &d.o) == target_u
            })
        })
    })
}

#[derive(Debug, Clone)]
pub struct Stratum {
    pub id: usize,
    pub tree: Tree,
    pub iota: TreeInvolution,
    pub u: UPlanar,
    pub dim: usize,
}

/// All strata with the elementary adjacencies: `(lower, upper)` when the
/// upper stratum arises from the lower by contracting one edge orbit.
#[derive(Debug, Clone)]
pub struct StratifiedComplex {
    pub sigma: LabelInvolution,
    pub strata: Vec<Stratum>,
    pub adjacency: BTreeSet<(usize, usize)>,
    index: HashMap<(Tree, UPlanar), usize>,
}

impl StratifiedComplex {
    pub fn find(&self, tree: &Tree, u: &UPlanar) -> Option<usize> {
        self.index.get(&(tree.clone(), u.clone())).copied()
    }

    /// Stratum of a canonical decorated tree.
    pub fn stratum_of(&self, d: &Decorated) -> Option<usize> {
        let i = sigma_invariance(&d.tree, &self.sigma)?;
        self.find(&d.tree, &to_uplanar(&d.tree, &i, &d.o))
    }

    pub fn count_by_dim(&self) -> Vec<usize> {
        let top = self.sigma.n() as usize - 3;
        let mut out = vec![0; top + 1];
        for s in &self.strata {
            out[s.dim] += 1;
        }
        out
    }

    /// Strata in the closure of `id` (including itself).
    pub fn closure(&self, id: usize) -> BTreeSet<usize> {
        let mut below: HashMap<usize, Vec<usize>> = HashMap::new();
        for (lo, hi) in &self.adjacency {
            below.entry(*hi).or_default().push(*lo);
        }
        let mut seen = BTreeSet::from([id]);
        let mut stack = vec![id];
        while let Some(x) = stack.pop() {
            for y in below.get(&x).into_iter().flatten() {
                if seen.insert(*y) {
                    stack.push(*y);
                }
            }
        }
        seen
    }

    pub fn upper_neighbours(&self, id: usize) -> Vec<usize> {
        self.adjacency.iter().filter(|(lo, _)| *lo == id).map(|(_, hi)| *hi).collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct S {
            id: usize,
            dim: usize,
            tree: crate::tree::TreeJson,
            u: serde_json::Value,
        }
        let strata: Vec<S> = self
            .strata
            .iter()
            .map(|s| S { id: s.id, dim: s.dim, tree: s.tree.to_json(), u: s.u.0.to_json(&s.tree) })
            .collect();
        let adjacency: Vec<[usize; 2]> = self.adjacency.iter().map(|(a, b)| [*a, *b]).collect();
        serde_json::json!({"strata": strata, "adjacency": adjacency})
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph poset {\n  rankdir=BT;\n");
        for st in &self.strata {
            s.push_str(&format!(
                "  s{} [label=\"{} d{}\"];\n",
                st.id,
                describe(&st.tree),
                st.dim
            ));
        }
        for (lo, hi) in &self.adjacency {
            s.push_str(&format!("  s{lo} -> s{hi};\n"));
        }
        s.push_str("}\n");
        s
    }
}

pub fn build_poset(sigma: &LabelInvolution) -> StratifiedComplex {
    let n = sigma.n() as usize;
    let mut strata = Vec::new();
    let mut index = HashMap::new();
    for (tree, iota) in enumerate_sigma_invariant_trees(sigma) {
        for u in enumerate_uplanar(&tree, &iota) {
            let id = strata.len();
            index.insert((tree.clone(), u.clone()), id);
            let dim = n - 3 - tree.num_edges();
            strata.push(Stratum { id, tree: tree.clone(), iota: iota.clone(), u, dim });
        }
    }
    let mut complex = StratifiedComplex { sigma: *sigma, strata, adjacency: BTreeSet::new(), index };
    let pairs: Vec<(usize, usize)> = complex
        .strata
        .par_iter()
        .flat_map_iter(|s| {
            let mut up = BTreeSet::new();
            for orbit in edge_orbits(&s.tree, &s.iota) {
                for o in lifts(&s.tree, &s.iota, &s.u) {
                    let results = contract_oplanar(&s.tree, &s.iota, &o, &orbit)
                        .expect("orbit contraction of a valid structure");
                    for d in results {
                        let hi = complex.stratum_of(&d).expect("contraction lands on a stratum");
                        up.insert((s.id, hi));
                    }
                }
            }
            up.into_iter()
        })
        .collect();
    complex.adjacency = pairs.into_iter().collect();
    complex
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planar::{enumerate_oplanar, reverse_all};
    use crate::real::sigma_normal;

    fn real_edge(t: &Tree, i: &TreeInvolution) -> Flag {
        i.invariant_edges(t)[0].0
    }

    #[test]
    fn concatenation_example() {
        let s = sigma_normal(0, 5).unwrap();
        let t = Tree::from_blocks(5, &[&[1, 2]]).unwrap();
        let i = sigma_invariance(&t, &s).unwrap();
        let e = real_edge(&t, &i);
        let (fe, fhat) = if t.vertex_of(e) == t.tail_vertex(5) { (e, t.partner(e)) } else { (t.partner(e), e) };
        let ve = t.vertex_of(fe);
        let vhat = t.vertex_of(fhat);
        let o = OPlanar {
            vertex_data: BTreeMap::from([
                (ve, VertexData::NonEmpty { plus: vec![], order: vec![5, 3, fe, 4] }),
                (vhat, VertexData::NonEmpty { plus: vec![], order: canonical_rotation(&[2, 1, fhat], 5) }),
            ]),
            plus_edge_flag: None,
        };
        let r = contract_oplanar(&t, &i, &o, &[e]).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].o.order_at(0), &[5, 3, 2, 1, 4]);
    }

    #[test]
    fn special_edge_example() {
        let s = sigma_normal(2, 0).unwrap();
        let t = Tree::from_blocks(4, &[&[1, 2]]).unwrap();
        let i = sigma_invariance(&t, &s).unwrap();
        let (a, _) = i.special_edge.unwrap();
        let o = OPlanar { vertex_data: BTreeMap::new(), plus_edge_flag: Some(a) };
        let r = contract_oplanar(&t, &i, &o, &[a]).unwrap();
        assert_eq!(r.len(), 2);
        let expect_plus: Vec<Flag> = {
            let mut p = t.tails_at(t.vertex_of(a));
            p.sort();
            p
        };
        assert!(r.iter().any(|d| d.o.data(0) == &VertexData::Empty));
        assert!(r.iter().any(|d| d.o.plus_at(0) == expect_plus.as_slice() && d.o.order_at(0).is_empty()));
    }

    #[test]
    fn far_pairs_leave_data_alone() {
        // the real vertex carries 4, 8, 9, 10 and two conjugate branches,
        // each splitting again away from the real vertex
        let s = sigma_normal(4, 2).unwrap();
        let t = Tree::from_blocks(10, &[&[1, 2], &[5, 6], &[1, 2, 3], &[5, 6, 7]]).unwrap();
        let i = sigma_invariance(&t, &s).unwrap();
        assert_eq!(i.real_vertices.len(), 1);
        let root = i.real_vertices[0];
        let far = i
            .conjugate_edge_pairs(&t)
            .into_iter()
            .find(|(a, b)| {
                [*a, t.partner(*a), *b, t.partner(*b)].iter().all(|f| t.vertex_of(*f) != root)
            })
            .unwrap();
        for o in enumerate_oplanar(&t, &i) {
            let r = contract_oplanar(&t, &i, &o, &[far.0, far.1]).unwrap();
            assert_eq!(r.len(), 1);
            let masks = |t: &Tree, fs: &[Flag]| -> BTreeSet<u64> { fs.iter().map(|f| t.far_mask(*f)).collect() };
            let before = canonicalize(&t, &o);
            assert_eq!(masks(&r[0].tree, r[0].o.plus_at(0)), masks(&before.tree, before.o.plus_at(0)));
            assert_eq!(r[0].o.order_at(0), before.o.order_at(0));
        }
    }

    #[test]
    fn poset_examples() {
        let p = build_poset(&sigma_normal(0, 4).unwrap());
        assert_eq!(p.count_by_dim(), vec![3, 3]);
        for s in p.strata.iter().filter(|s| s.dim == 0) {
            assert_eq!(p.upper_neighbours(s.id).len(), 2);
        }
        let tops: Vec<usize> = p.strata.iter().filter(|s| s.dim == 1).map(|s| s.id).collect();
        for t in &tops {
            assert_eq!(p.closure(*t).len(), 3);
        }
        let p = build_poset(&sigma_normal(1, 2).unwrap());
        assert_eq!(p.count_by_dim(), vec![1, 1]);
        assert_eq!(p.adjacency.len(), 1);
        let p = build_poset(&sigma_normal(2, 0).unwrap());
        assert_eq!(p.count_by_dim(), vec![3, 3]);
        // a circle: every point bounds two arcs, every arc has two ends
        for s in &p.strata {
            if s.dim == 0 {
                assert_eq!(p.upper_neighbours(s.id).len(), 2);
            } else {
                assert_eq!(p.closure(s.id).len(), 3);
            }
        }
        let p = build_poset(&sigma_normal(0, 5).unwrap());
        assert_eq!(p.count_by_dim(), vec![15, 30, 12]);
        for s in p.strata.iter().filter(|s| s.dim == 2) {
            let c = p.closure(s.id);
            let dims: Vec<usize> = c.iter().map(|x| p.strata[*x].dim).collect();
            // open chambers are simplices; their closures are pentagons
            assert_eq!(dims.iter().filter(|d| **d == 1).count(), 5);
            assert_eq!(dims.iter().filter(|d| **d == 0).count(), 5);
        }
    }

    #[test]
    fn codim_one_meets_at_most_two_chambers() {
        for (k, l) in [(0, 6), (1, 4), (2, 2), (1, 3), (2, 1), (3, 0), (2, 0), (0, 5)] {
            let p = build_poset(&sigma_normal(k, l).unwrap());
            let top = p.sigma.n() as usize - 3;
            for s in p.strata.iter().filter(|s| s.dim + 1 == top) {
                let ups = p.upper_neighbours(s.id);
                assert!(!ups.is_empty() && ups.len() <= 2, "({k},{l}) {}", describe(&s.tree));
            }
        }
    }

    #[test]
    fn identity_poset_is_tree_poset() {
        let s = sigma_normal(0, 5).unwrap();
        let p = build_poset(&s);
        for (lo, hi) in &p.adjacency {
            assert!(crate::tree::less_than(&p.strata[*lo].tree, &p.strata[*hi].tree));
        }
        let trees: BTreeSet<Vec<u8>> = p.strata.iter().map(|s| s.tree.canonical_form()).collect();
        assert_eq!(trees.len(), 26);
    }

    #[test]
    fn contraction_commutes_with_reversal() {
        for (k, l) in [(0, 5), (0, 6), (1, 3), (1, 4), (2, 1), (2, 2), (3, 0), (2, 0)] {
            let s = sigma_normal(k, l).unwrap();
            for (t, i) in enumerate_sigma_invariant_trees(&s) {
                if t.num_edges() > 2 {
                    continue;
                }
                for orbit in edge_orbits(&t, &i) {
                    for o in enumerate_oplanar(&t, &i) {
                        let a = contract_oplanar(&t, &i, &o, &orbit).unwrap();
                        let b = contract_oplanar(&t, &i, &reverse_all(&t, &i, &o), &orbit).unwrap();
                        let rev: BTreeSet<Decorated> = a
                            .iter()
                            .map(|d| {
                                let di = sigma_invariance(&d.tree, &s).unwrap();
                                Decorated { tree: d.tree.clone(), o: reverse_all(&d.tree, &di, &d.o) }
                            })
                            .collect();
                        assert_eq!(rev, b.into_iter().collect::<BTreeSet<_>>());
                    }
                }
            }
        }
    }

    #[test]
    fn composite_contraction_is_order_free() {
        for (k, l) in [(0, 6), (1, 4), (2, 2)] {
            let s = sigma_normal(k, l).unwrap();
            for (t, i) in enumerate_sigma_invariant_trees(&s) {
                let orbits = edge_orbits(&t, &i);
                if orbits.len() != 2 {
                    continue;
                }
                let all: Vec<Flag> = orbits.concat();
                for o in enumerate_oplanar(&t, &i) {
                    let direct: BTreeSet<Decorated> =
                        contract_oplanar(&t, &i, &o, &all).unwrap().into_iter().collect();
                    // second orbit first, then the first orbit on the result
                    let mut other = BTreeSet::new();
                    for d in contract_oplanar(&t, &i, &o, &orbits[1]).unwrap() {
                        let di = sigma_invariance(&d.tree, &s).unwrap();
                        let rest = edge_orbits(&d.tree, &di).concat();
                        other.extend(contract_oplanar(&d.tree, &di, &d.o, &rest).unwrap());
                    }
                    assert_eq!(direct, other);
                }
            }
        }
    }

    #[test]
    fn face_lift_examples() {
        let s = sigma_normal(0, 5).unwrap();
        let p = build_poset(&s);
        for (lo, hi) in &p.adjacency {
            let (g, t) = (&p.strata[*lo], &p.strata[*hi]);
            for o in lifts(&t.tree, &t.iota, &t.u) {
                let found = face_lifts(&t.tree, &o, &g.tree, &g.iota, &g.u).unwrap();
                assert!(found.len() <= 1);
            }
            assert!(is_boundary(&g.tree, &g.iota, &g.u, &t.tree, &t.u));
        }
        // same tree, no edges: the lift is the structure itself
        let one = &p.strata.iter().find(|x| x.dim == 2).unwrap();
        let o = lifts(&one.tree, &one.iota, &one.u)[0].clone();
        assert_eq!(face_lift(&one.tree, &o, &one.tree, &one.iota, &one.u).unwrap(), o);
        // a point stratum not on the boundary of a given chamber
        let point = p.strata.iter().find(|x| x.dim == 0).unwrap();
        let far_top = p
            .strata
            .iter()
            .find(|x| x.dim == 2 && !p.closure(x.id).contains(&point.id))
            .unwrap();
        let o = lifts(&far_top.tree, &far_top.iota, &far_top.u)[0].clone();
        assert_eq!(
            face_lift(&far_top.tree, &o, &point.tree, &point.iota, &point.u),
            Err(StrataError::NotAdjacent)
        );
    }
}
