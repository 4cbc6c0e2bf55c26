//! O-planar and u-planar decorations of invariant trees.
//!
//! At a real vertex an o-planar structure picks one flag from every pair of
//! conjugate flags (the `plus` side, i.e. points in the upper half plane)
//! and a cyclic order of the fixed flags (points on the real circle). A
//! real vertex may instead carry `Empty` (a real component without real
//! points) when it is the only real vertex and there are no fixed labels.
//! With no real vertex at all the structure is the choice of which flag of
//! the special edge is positive.
//!
//! A u-planar structure forgets the simultaneous reversal at each vertex;
//! it is stored as the o-planar structure whose vertex data is the smaller
//! of the two reverse choices.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use itertools::Itertools;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::real::{LabelInvolution, TreeInvolution};
use crate::tree::{Flag, Tree, Vertex};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanarError {
    #[error("vertex {0} has an empty real part")]
    EmptyRealPartVertex(Vertex),
    #[error("vertex {0} is not real")]
    NotRealVertex(Vertex),
    #[error("no permutation carries the base structure to this one: {0}")]
    NoSuchPermutation(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VertexData {
    /// `plus` sorted; `order` a canonical rotation of the fixed flags.
    NonEmpty { plus: Vec<Flag>, order: Vec<Flag> },
    Empty,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OPlanar {
    pub vertex_data: BTreeMap<Vertex, VertexData>,
    /// Without real vertices: the flag of the special edge sent to `+`.
    pub plus_edge_flag: Option<Flag>,
}

/// An o-planar structure normalised up to reversal at each vertex.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct UPlanar(pub OPlanar);

impl OPlanar {
    pub fn data(&self, v: Vertex) -> &VertexData {
        &self.vertex_data[&v]
    }
    pub fn is_empty_real_part(&self) -> bool {
        self.vertex_data.values().any(|d| *d == VertexData::Empty)
    }
    pub fn plus_at(&self, v: Vertex) -> &[Flag] {
        match self.data(v) {
            VertexData::NonEmpty { plus, .. } => plus,
            VertexData::Empty => &[],
        }
    }
    pub fn order_at(&self, v: Vertex) -> &[Flag] {
        match self.data(v) {
            VertexData::NonEmpty { order, .. } => order,
            VertexData::Empty => &[],
        }
    }

    /// JSON view: `{"vertex_data": {v: {"plus", "order"} | "empty"},
    /// "edge_signs": {flag: "+" | "-"}}`.
    pub fn to_json(&self, tree: &Tree) -> serde_json::Value {
        let data: BTreeMap<String, serde_json::Value> = self
            .vertex_data
            .iter()
            .map(|(v, d)| {
                let value = match d {
                    VertexData::Empty => serde_json::json!("empty"),
                    VertexData::NonEmpty { plus, order } => {
                        serde_json::json!({"plus": plus, "order": order})
                    }
                };
                (v.to_string(), value)
            })
            .collect();
        let signs: BTreeMap<String, &str> = match self.plus_edge_flag {
            Some(p) => BTreeMap::from([(p.to_string(), "+"), (tree.partner(p).to_string(), "-")]),
            None => BTreeMap::new(),
        };
        serde_json::json!({"vertex_data": data, "edge_signs": signs})
    }
}

/// Rotation with `n` first when present, otherwise the smallest flag.
pub fn canonical_rotation(order: &[Flag], n: u32) -> Vec<Flag> {
    if order.is_empty() {
        return Vec::new();
    }
    let start = order
        .iter()
        .position(|f| *f == n)
        .unwrap_or_else(|| order.iter().position_min().expect("nonempty"));
    order[start..].iter().chain(&order[..start]).copied().collect()
}

pub fn reverse_order(order: &[Flag], n: u32) -> Vec<Flag> {
    let rev: Vec<Flag> = order.iter().rev().copied().collect();
    canonical_rotation(&rev, n)
}

/// Reversal of one vertex's data: plus becomes its conjugate set and the
/// cyclic order is reversed.
pub fn reverse_data(d: &VertexData, iota: &TreeInvolution, n: u32) -> VertexData {
    match d {
        VertexData::Empty => VertexData::Empty,
        VertexData::NonEmpty { plus, order } => {
            let mut minus: Vec<Flag> = plus.iter().map(|f| iota.flag(*f)).collect();
            minus.sort_unstable();
            VertexData::NonEmpty { plus: minus, order: reverse_order(order, n) }
        }
    }
}

pub fn reverse_at(
    tree: &Tree,
    iota: &TreeInvolution,
    o: &OPlanar,
    v: Vertex,
) -> Result<OPlanar, PlanarError> {
    let d = o.vertex_data.get(&v).ok_or(PlanarError::NotRealVertex(v))?;
    if *d == VertexData::Empty {
        return Err(PlanarError::EmptyRealPartVertex(v));
    }
    let mut out = o.clone();
    out.vertex_data.insert(v, reverse_data(d, iota, tree.n()));
    Ok(out)
}

/// Reversal at every real vertex (and of the special-edge sign).
pub fn reverse_all(tree: &Tree, iota: &TreeInvolution, o: &OPlanar) -> OPlanar {
    let vertex_data =
        o.vertex_data.iter().map(|(v, d)| (*v, reverse_data(d, iota, tree.n()))).collect();
    OPlanar { vertex_data, plus_edge_flag: o.plus_edge_flag.map(|p| tree.partner(p)) }
}

/// Conjugate pairs of flags at a real vertex, each as `(smaller, larger)`.
fn flag_pairs(tree: &Tree, iota: &TreeInvolution, v: Vertex) -> Vec<(Flag, Flag)> {
    iota.moved_flags(tree, v)
        .into_iter()
        .filter(|f| *f < iota.flag(*f))
        .map(|f| (f, iota.flag(f)))
        .collect()
}

/// All data choices at one real vertex (excluding `Empty`).
pub fn vertex_choices(tree: &Tree, iota: &TreeInvolution, v: Vertex) -> Vec<VertexData> {
    let pairs = flag_pairs(tree, iota, v);
    let real = iota.real_flags(tree, v);
    let orders: Vec<Vec<Flag>> = if real.len() <= 1 {
        vec![real.clone()]
    } else {
        let first = canonical_rotation(&real, tree.n())[0];
        let rest: Vec<Flag> = real.iter().copied().filter(|f| *f != first).collect();
        rest.iter()
            .copied()
            .permutations(rest.len())
            .map(|p| std::iter::once(first).chain(p).collect())
            .collect()
    };
    let mut out = Vec::new();
    for bits in 0u64..(1 << pairs.len()) {
        let mut plus: Vec<Flag> = pairs
            .iter()
            .enumerate()
            .map(|(i, (a, b))| if bits & (1 << i) != 0 { *b } else { *a })
            .collect();
        plus.sort_unstable();
        for order in &orders {
            out.push(VertexData::NonEmpty { plus: plus.clone(), order: order.clone() });
        }
    }
    out
}

fn empty_allowed(tree: &Tree, iota: &TreeInvolution, v: Vertex) -> bool {
    iota.real_vertices == [v] && iota.real_flags(tree, v).is_empty()
}

pub fn enumerate_oplanar(tree: &Tree, iota: &TreeInvolution) -> Vec<OPlanar> {
    if let Some((a, b)) = iota.special_edge {
        return [a, b]
            .into_iter()
            .map(|p| OPlanar { vertex_data: BTreeMap::new(), plus_edge_flag: Some(p) })
            .collect();
    }
    let mut acc = vec![BTreeMap::new()];
    for v in &iota.real_vertices {
        let mut choices = vertex_choices(tree, iota, *v);
        if empty_allowed(tree, iota, *v) {
            choices.push(VertexData::Empty);
        }
        acc = acc
            .into_iter()
            .flat_map(|m: BTreeMap<Vertex, VertexData>| {
                choices.iter().map(move |c| {
                    let mut m = m.clone();
                    m.insert(*v, c.clone());
                    m
                })
            })
            .collect();
    }
    acc.into_iter().map(|vertex_data| OPlanar { vertex_data, plus_edge_flag: None }).collect()
}

pub fn to_uplanar(tree: &Tree, iota: &TreeInvolution, o: &OPlanar) -> UPlanar {
    let vertex_data = o
        .vertex_data
        .iter()
        .map(|(v, d)| {
            let r = reverse_data(d, iota, tree.n());
            (*v, if r < *d { r } else { d.clone() })
        })
        .collect();
    UPlanar(OPlanar { vertex_data, plus_edge_flag: None })
}

pub fn enumerate_uplanar(tree: &Tree, iota: &TreeInvolution) -> Vec<UPlanar> {
    let set: BTreeSet<UPlanar> =
        enumerate_oplanar(tree, iota).iter().map(|o| to_uplanar(tree, iota, o)).collect();
    set.into_iter().collect()
}

/// All o-planar structures with the given u-planar class.
pub fn lifts(tree: &Tree, iota: &TreeInvolution, u: &UPlanar) -> Vec<OPlanar> {
    if let Some((a, b)) = iota.special_edge {
        return [a, b]
            .into_iter()
            .map(|p| OPlanar { vertex_data: BTreeMap::new(), plus_edge_flag: Some(p) })
            .collect();
    }
    let mut acc = vec![u.0.clone()];
    for (v, d) in &u.0.vertex_data {
        if *d == VertexData::Empty {
            continue;
        }
        let r = reverse_data(d, iota, tree.n());
        acc = acc
            .into_iter()
            .flat_map(|o| {
                let mut o2 = o.clone();
                o2.vertex_data.insert(*v, r.clone());
                [o, o2]
            })
            .collect();
    }
    acc
}

/// Vertices and flags on the positive and negative sides.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SignedSets {
    pub v_plus: BTreeSet<Vertex>,
    pub v_minus: BTreeSet<Vertex>,
    pub f_plus: BTreeSet<Flag>,
    pub f_minus: BTreeSet<Flag>,
}

/// A non-real vertex takes the sign of the flag through which its nearest
/// real vertex sees it. Without real vertices the side of the positive
/// special-edge flag is positive.
pub fn signed_sets(tree: &Tree, iota: &TreeInvolution, o: &OPlanar) -> SignedSets {
    let mut sign: BTreeMap<Vertex, bool> = BTreeMap::new();
    let mut queue: VecDeque<(Vertex, bool)> = VecDeque::new();
    let mut seen: BTreeSet<Vertex> = iota.real_vertices.iter().copied().collect();
    if let (Some((a, b)), Some(p)) = (iota.special_edge, o.plus_edge_flag) {
        for f in [a, b] {
            let v = tree.vertex_of(f);
            seen.insert(v);
            sign.insert(v, f == p);
            queue.push_back((v, f == p));
        }
    } else {
        for v in &iota.real_vertices {
            let plus = o.plus_at(*v);
            for f in iota.moved_flags(tree, *v) {
                if tree.is_tail(f) {
                    continue;
                }
                let w = tree.neighbour(f);
                if seen.insert(w) {
                    let s = plus.contains(&f);
                    sign.insert(w, s);
                    queue.push_back((w, s));
                }
            }
        }
    }
    while let Some((v, s)) = queue.pop_front() {
        for f in tree.flags_at(v) {
            if tree.is_tail(f) {
                continue;
            }
            let w = tree.neighbour(f);
            if seen.insert(w) {
                sign.insert(w, s);
                queue.push_back((w, s));
            }
        }
    }
    let mut out = SignedSets::default();
    for (v, s) in sign {
        let (vs, fs) =
            if s { (&mut out.v_plus, &mut out.f_plus) } else { (&mut out.v_minus, &mut out.f_minus) };
        vs.insert(v);
        fs.extend(tree.flags_at(v));
    }
    out
}

/// Parity of a one-vertex structure: the sign of the permutation `rho`
/// that sends the i-th label to the i-th smallest positive label (i <= k),
/// commutes with the involution, fixes `n` and carries the order
/// `(2k+1, ..., n)` onto the structure's order.
pub fn parity(o: &OPlanar, sigma: &LabelInvolution) -> Result<bool, PlanarError> {
    let (plus, order) = match o.vertex_data.get(&0) {
        Some(VertexData::NonEmpty { plus, order }) if o.vertex_data.len() == 1 => (plus, order),
        _ => return Err(PlanarError::NoSuchPermutation("not a nonempty one-vertex structure".into())),
    };
    let (k, n) = (sigma.k, sigma.n());
    if plus.len() != k as usize || order.len() != sigma.l as usize {
        return Err(PlanarError::NoSuchPermutation("sizes do not match the involution".into()));
    }
    let mut rho = vec![0u32; n as usize + 1];
    for (i, f) in plus.iter().enumerate() {
        let i = i as u32 + 1;
        rho[i as usize] = *f;
        rho[(i + k) as usize] = sigma.apply(*f);
    }
    if sigma.l > 0 {
        if order[0] != n {
            return Err(PlanarError::NoSuchPermutation("order does not start at n".into()));
        }
        for (j, f) in order[1..].iter().enumerate() {
            rho[(2 * k + 1 + j as u32) as usize] = *f;
        }
        rho[n as usize] = n;
    }
    let mut seen = vec![false; n as usize + 1];
    let mut transpositions = 0;
    for start in 1..=n as usize {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut x = start;
        while !seen[x] {
            seen[x] = true;
            x = rho[x] as usize;
            if x == 0 || x > n as usize {
                return Err(PlanarError::NoSuchPermutation("labels out of range".into()));
            }
            len += 1;
        }
        transpositions += len - 1;
    }
    if seen.iter().skip(1).any(|s| !s) || {
        let mut r = rho[1..].to_vec();
        r.sort_unstable();
        r != (1..=n).collect::<Vec<_>>()
    } {
        return Err(PlanarError::NoSuchPermutation("not a permutation".into()));
    }
    Ok(transpositions % 2 == 1)
}

/// The three distinguished labels anchoring orientation conventions.
pub fn anchor_labels(sigma: &LabelInvolution) -> [u32; 3] {
    let (k, n) = (sigma.k, sigma.n());
    if sigma.l >= 3 {
        [2 * k + 1, n - 1, n]
    } else {
        [k, 2 * k, n]
    }
}

/// Does the cyclic order meet `a`, `b`, `c` in this cyclic sequence?
pub fn cyclically_ordered(order: &[Flag], a: Flag, b: Flag, c: Flag) -> bool {
    let pos = |x| order.iter().position(|f| *f == x).expect("flag in order");
    let (pa, pb, pc) = (pos(a), pos(b), pos(c));
    (pa < pb && pb < pc) || (pb < pc && pc < pa) || (pc < pa && pa < pb)
}

/// Whether a one-vertex structure is the preferred member of its class.
pub fn is_convention(o: &OPlanar, sigma: &LabelInvolution) -> bool {
    match o.data(0) {
        VertexData::Empty => true,
        VertexData::NonEmpty { plus, order } => {
            if sigma.l >= 3 {
                let n = sigma.n();
                cyclically_ordered(order, 2 * sigma.k + 1, n - 1, n)
            } else {
                plus.contains(&sigma.k)
            }
        }
    }
}

/// The preferred member of a one-vertex u-planar class.
pub fn convention_representative(tree: &Tree, iota: &TreeInvolution, u: &UPlanar, sigma: &LabelInvolution) -> OPlanar {
    let o = u.0.clone();
    if is_convention(&o, sigma) {
        o
    } else {
        reverse_all(tree, iota, &o)
    }
}

/// Number of o-planar structures on the one-vertex tree.
pub fn one_vertex_count(k: u32, l: u32) -> u64 {
    let fact = |m: u32| (1..=m as u64).product::<u64>();
    if l == 0 {
        (1u64 << k) + 1
    } else {
        (1u64 << k) * fact(l - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::real::{enumerate_sigma_invariant_trees, sigma_invariance, sigma_normal};

    fn one(k: u32, l: u32) -> (Tree, TreeInvolution, LabelInvolution) {
        let s = sigma_normal(k, l).unwrap();
        let t = Tree::one_vertex(s.n());
        let i = sigma_invariance(&t, &s).unwrap();
        (t, i, s)
    }

    fn single(plus: &[Flag], order: &[Flag]) -> OPlanar {
        OPlanar {
            vertex_data: BTreeMap::from([(
                0,
                VertexData::NonEmpty { plus: plus.to_vec(), order: order.to_vec() },
            )]),
            plus_edge_flag: None,
        }
    }

    #[test]
    fn reversal_examples() {
        let (t, i, _) = one(0, 4);
        let o = single(&[], &[4, 1, 2, 3]);
        let r = reverse_at(&t, &i, &o, 0).unwrap();
        assert_eq!(r.order_at(0), &[4, 3, 2, 1]);
        assert_eq!(reverse_at(&t, &i, &r, 0).unwrap(), o);
        let (t, i, _) = one(1, 2);
        let o = single(&[1], &[4, 3]);
        let r = reverse_at(&t, &i, &o, 0).unwrap();
        assert_eq!(r, single(&[2], &[4, 3]));
        let (t, i, _) = one(2, 0);
        let e = OPlanar { vertex_data: BTreeMap::from([(0, VertexData::Empty)]), plus_edge_flag: None };
        assert_eq!(reverse_at(&t, &i, &e, 0), Err(PlanarError::EmptyRealPartVertex(0)));
    }

    #[test]
    fn one_vertex_counts() {
        assert_eq!(enumerate_oplanar(&one(0, 4).0, &one(0, 4).1).len(), 6);
        assert_eq!(enumerate_oplanar(&one(1, 2).0, &one(1, 2).1).len(), 2);
        assert_eq!(enumerate_oplanar(&one(2, 0).0, &one(2, 0).1).len(), 5);
        for n in 3..=8u32 {
            for k in 0..=n / 2 {
                let l = n - 2 * k;
                let (t, i, _) = one(k, l);
                let os = enumerate_oplanar(&t, &i);
                assert_eq!(os.len() as u64, one_vertex_count(k, l), "k={k} l={l}");
                let us = enumerate_uplanar(&t, &i);
                let expect = if l == 0 { (1u64 << k) / 2 + 1 } else { one_vertex_count(k, l) / 2 };
                assert_eq!(us.len() as u64, expect, "k={k} l={l}");
            }
        }
        assert_eq!(enumerate_uplanar(&one(0, 4).0, &one(0, 4).1).len(), 3);
        assert_eq!(enumerate_uplanar(&one(0, 5).0, &one(0, 5).1).len(), 12);
        assert_eq!(enumerate_uplanar(&one(1, 2).0, &one(1, 2).1).len(), 1);
    }

    #[test]
    fn signed_set_examples() {
        let (t, i, _) = one(0, 4);
        let s = signed_sets(&t, &i, &enumerate_oplanar(&t, &i)[0]);
        assert_eq!(s, SignedSets::default());
        // two conjugate vertices carrying {1,2} and {3,4} hang off the real one
        let sg = sigma_normal(2, 2).unwrap();
        let t = Tree::from_blocks(6, &[&[1, 2], &[3, 4]]).unwrap();
        let i = sigma_invariance(&t, &sg).unwrap();
        assert_eq!(i.real_vertices.len(), 1);
        let root = t.tail_vertex(6);
        for o in enumerate_oplanar(&t, &i) {
            let s = signed_sets(&t, &i, &o);
            let plus = o.plus_at(root);
            for f in plus.iter().filter(|f| !t.is_tail(**f)) {
                assert!(s.v_plus.contains(&t.neighbour(*f)));
            }
            assert_eq!(s.v_plus.len(), 1);
            assert_eq!(s.v_minus.len(), 1);
        }
        let sg = sigma_normal(2, 0).unwrap();
        let t = Tree::from_blocks(4, &[&[1, 2]]).unwrap();
        let i = sigma_invariance(&t, &sg).unwrap();
        let (a, _) = i.special_edge.unwrap();
        let o = OPlanar { vertex_data: BTreeMap::new(), plus_edge_flag: Some(a) };
        let s = signed_sets(&t, &i, &o);
        assert_eq!(s.v_plus, BTreeSet::from([t.vertex_of(a)]));
        assert_eq!(s.v_minus, BTreeSet::from([t.neighbour(a)]));
    }

    #[test]
    fn parity_examples() {
        let s = sigma_normal(0, 5).unwrap();
        assert!(!parity(&single(&[], &[5, 1, 2, 3, 4]), &s).unwrap());
        assert!(parity(&single(&[], &[5, 2, 1, 3, 4]), &s).unwrap());
        let s = sigma_normal(2, 1).unwrap();
        assert!(!parity(&single(&[1, 2], &[5]), &s).unwrap());
        assert!(parity(&single(&[1, 4], &[5]), &s).unwrap());
        assert!(parity(&single(&[1, 4], &[4]), &s).is_err());
    }

    #[test]
    fn parity_of_reversal_is_constant() {
        for n in 3..=7u32 {
            for k in 0..=n / 2 {
                let l = n - 2 * k;
                let (t, i, s) = one(k, l);
                let diffs: BTreeSet<bool> = enumerate_oplanar(&t, &i)
                    .iter()
                    .filter(|o| !o.is_empty_real_part())
                    .map(|o| {
                        let r = reverse_all(&t, &i, o);
                        parity(o, &s).unwrap() ^ parity(&r, &s).unwrap()
                    })
                    .collect();
                assert!(diffs.len() <= 1, "k={k} l={l}");
            }
        }
    }

    #[test]
    fn convention_examples() {
        let (t, i, s) = one(0, 4);
        let u = to_uplanar(&t, &i, &single(&[], &[4, 3, 2, 1]));
        assert_eq!(convention_representative(&t, &i, &u, &s), single(&[], &[4, 1, 2, 3]));
        let (t, i, s) = one(1, 2);
        for u in enumerate_uplanar(&t, &i) {
            assert!(convention_representative(&t, &i, &u, &s).plus_at(0).contains(&1));
        }
        let (t, i, s) = one(2, 0);
        for u in enumerate_uplanar(&t, &i) {
            let r = convention_representative(&t, &i, &u, &s);
            if !r.is_empty_real_part() {
                assert!(r.plus_at(0).contains(&2));
            }
        }
        for n in 3..=7u32 {
            for k in 0..=n / 2 {
                let (t, i, s) = one(k, n - 2 * k);
                for o in enumerate_oplanar(&t, &i) {
                    let r = convention_representative(&t, &i, &to_uplanar(&t, &i, &o), &s);
                    assert!(r == o || r == reverse_all(&t, &i, &o));
                }
            }
        }
    }

    #[test]
    fn anchor_label_examples() {
        assert_eq!(anchor_labels(&sigma_normal(0, 5).unwrap()), [1, 4, 5]);
        assert_eq!(anchor_labels(&sigma_normal(1, 3).unwrap()), [3, 4, 5]);
        assert_eq!(anchor_labels(&sigma_normal(2, 3).unwrap()), [5, 6, 7]);
        assert_eq!(anchor_labels(&sigma_normal(3, 1).unwrap()), [3, 6, 7]);
    }

    #[test]
    fn lifts_cover_classes() {
        for (k, l) in [(0, 5), (1, 3), (2, 1), (2, 2), (3, 0)] {
            let s = sigma_normal(k, l).unwrap();
            for (t, i) in enumerate_sigma_invariant_trees(&s) {
                let all = enumerate_oplanar(&t, &i);
                let mut count = 0;
                for u in enumerate_uplanar(&t, &i) {
                    let ls = lifts(&t, &i, &u);
                    for o in &ls {
                        assert_eq!(to_uplanar(&t, &i, o), u);
                        assert!(all.contains(o));
                    }
                    count += ls.len();
                }
                assert_eq!(count, all.len());
            }
        }
    }
}
