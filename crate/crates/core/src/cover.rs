//! The orientation double cover, assembled from closed top cells.
//!
//! For real labels the top cells are the one-vertex o-planar structures
//! (both members of each reversal pair). Over a wall with two real
//! vertices there are four faces, one per o-planar lift; each is glued to
//! the lift reversed at one vertex. Let `v` be the vertex holding at most
//! one anchor label. The face is glued to its reversal at `v` when the
//! wall is off the w1 cycle, and to its reversal at the other vertex when
//! it is on it. Deeper faces are identified through the walls they lie on.
//!
//! Without real labels the base is orientable and the cover is two
//! disjoint copies.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::invariants::{chi_c_stratum, InvariantsError};
use crate::orientation::{analyse_wall, context, mismatch_closed_form, reversal_vertex, walls, WallReport};
use crate::planar::{lifts, reverse_at, OPlanar};
use crate::real::TreeInvolution;
use crate::strata::{canonicalize, contract_oplanar, Decorated, StratifiedComplex};
use crate::tree::{Flag, Tree, Vertex};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoverError {
    #[error("face {0} of wall {1} is not glued exactly once")]
    UnmatchedFace(usize, usize),
    #[error("inconsistent structure: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Invariants(#[from] InvariantsError),
}

/// Gluing relation tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Relation {
    A,
    B,
    C,
    D,
    E,
    F,
}

impl Relation {
    /// Relations whose faces lie over w1 walls.
    pub fn contributes(&self) -> bool {
        matches!(self, Relation::B | Relation::D | Relation::F)
    }
}

/// The vertex at which `d2` is `d1` reversed, if it is.
pub fn reversal_between(tree: &Tree, iota: &TreeInvolution, d1: &OPlanar, d2: &OPlanar) -> Option<Vertex> {
    let diff: Vec<Vertex> =
        d1.vertex_data.keys().copied().filter(|v| d1.vertex_data[v] != d2.vertex_data[v]).collect();
    if diff.len() != 1 {
        return None;
    }
    let v = diff[0];
    (reverse_at(tree, iota, d1, v).ok()? == *d2).then_some(v)
}

/// Tag of a gluing across a wall reversed at `at`, given whether the wall
/// is treated as contributing.
fn tag(tree: &Tree, iota: &TreeInvolution, d: &OPlanar, at: Vertex, contributes: bool) -> Option<Relation> {
    let ctx = context(tree, iota, d).ok()?;
    let anchor = reversal_vertex(&ctx);
    let at_anchor = at == anchor;
    if at_anchor == contributes {
        return None;
    }
    Some(match (anchor == ctx.far, ctx.real_near == 3, at == ctx.far) {
        (true, _, true) => Relation::A,
        (true, _, false) => Relation::B,
        (false, false, false) => Relation::C,
        (false, false, true) => Relation::D,
        (false, true, false) => Relation::E,
        (false, true, true) => Relation::F,
    })
}

/// The relation under which two lifts on a wall are glued, if any.
pub fn glue_predicate(tree: &Tree, iota: &TreeInvolution, d1: &OPlanar, d2: &OPlanar) -> Option<Relation> {
    let at = reversal_between(tree, iota, d1, d2)?;
    let ctx = context(tree, iota, d1).ok()?;
    tag(tree, iota, d1, at, !mismatch_closed_form(&ctx))
}

/// How each wall decides whether it contributes to w1.
#[derive(Debug, Clone, Copy)]
pub enum GluingRule<'a> {
    /// The closed relations; walls at four labels never contribute.
    Relations,
    /// Measured mismatch parities.
    Measured(&'a BTreeMap<usize, WallReport>),
}

#[derive(Debug, Clone, Serialize)]
pub struct TopCell {
    pub chamber: usize,
    /// Which of the two sheets over the chamber.
    pub sheet: u8,
    #[serde(skip)]
    pub o: OPlanar,
}

#[derive(Debug, Clone, Serialize)]
pub struct Face {
    pub wall: usize,
    pub cell: usize,
    #[serde(skip)]
    pub lift: OPlanar,
}

#[derive(Debug, Clone, Serialize)]
pub struct Gluing {
    pub faces: (usize, usize),
    pub relation: Option<Relation>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoverStratum {
    pub base: usize,
    pub dim: usize,
    /// The o-planar lifts of the base stratum lying in this stratum.
    #[serde(skip)]
    pub members: Vec<OPlanar>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoverComplex {
    pub cells: Vec<TopCell>,
    pub faces: Vec<Face>,
    pub gluings: Vec<Gluing>,
    pub strata: Vec<CoverStratum>,
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> UnionFind {
        UnionFind((0..n).collect())
    }
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut y = x;
        while self.0[y] != r {
            let next = self.0[y];
            self.0[y] = r;
            y = next;
        }
        r
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
    fn classes(&mut self) -> Vec<Vec<usize>> {
        let mut by: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for x in 0..self.0.len() {
            let r = self.find(x);
            by.entry(r).or_default().push(x);
        }
        by.into_values().collect()
    }
}

fn top_dim(cx: &StratifiedComplex) -> usize {
    cx.sigma.n() as usize - 3
}

/// A wall lift, its partner, the vertex reversed between them and the tag.
type WallGluing = (OPlanar, OPlanar, Vertex, Option<Relation>);

/// For one wall: each lift and the lift it is glued to, with its tag.
fn wall_pairing(
    cx: &StratifiedComplex,
    wall: usize,
    rule: GluingRule,
) -> Result<Vec<WallGluing>, CoverError> {
    let st = &cx.strata[wall];
    let (tree, iota) = (&st.tree, &st.iota);
    let ctx = context(tree, iota, &st.u.0).map_err(|e| CoverError::Inconsistent(e.to_string()))?;
    let anchor = reversal_vertex(&ctx);
    let contributes = match rule {
        GluingRule::Relations => cx.sigma.n() > 4 && !mismatch_closed_form(&ctx),
        GluingRule::Measured(reports) => {
            let r = reports.get(&wall).ok_or_else(|| CoverError::Inconsistent(format!("no report for wall {wall}")))?;
            !r.mismatch()
        }
    };
    let at = if contributes { 1 - anchor } else { anchor };
    let mut out = Vec::new();
    for lift in lifts(tree, iota, &st.u) {
        let partner = reverse_at(tree, iota, &lift, at).map_err(|e| CoverError::Inconsistent(e.to_string()))?;
        let relation = tag(tree, iota, &lift, at, contributes);
        out.push((lift, partner, at, relation));
    }
    Ok(out)
}

fn single_contraction(tree: &Tree, iota: &TreeInvolution, o: &OPlanar, edges: &[u32]) -> Result<Decorated, CoverError> {
    let mut r = contract_oplanar(tree, iota, o, edges).map_err(|e| CoverError::Inconsistent(e.to_string()))?;
    if r.len() != 1 {
        return Err(CoverError::Inconsistent(format!("{} contractions", r.len())));
    }
    Ok(r.remove(0))
}

pub fn build_cover(cx: &StratifiedComplex) -> Result<CoverComplex, CoverError> {
    build_cover_with(cx, GluingRule::Relations)
}

pub fn build_cover_with(cx: &StratifiedComplex, rule: GluingRule) -> Result<CoverComplex, CoverError> {
    if cx.sigma.l == 0 {
        return trivial_cover(cx);
    }
    let top = top_dim(cx);
    // top cells
    let mut cells = Vec::new();
    let mut cell_of: BTreeMap<Decorated, usize> = BTreeMap::new();
    for st in cx.strata.iter().filter(|s| s.dim == top) {
        for (sheet, o) in lifts(&st.tree, &st.iota, &st.u).into_iter().enumerate() {
            cell_of.insert(canonicalize(&st.tree, &o), cells.len());
            cells.push(TopCell { chamber: st.id, sheet: sheet as u8, o });
        }
    }
    // faces and gluings
    let mut faces = Vec::new();
    let mut gluings = Vec::new();
    let mut pairing: BTreeMap<usize, BTreeMap<OPlanar, Vertex>> = BTreeMap::new();
    for wall in walls(cx) {
        let st = &cx.strata[wall];
        let edge = st.tree.edges()[0].0;
        let pairs = wall_pairing(cx, wall, rule)?;
        let mut index: BTreeMap<OPlanar, usize> = BTreeMap::new();
        for (lift, _, _, _) in &pairs {
            let d = single_contraction(&st.tree, &st.iota, lift, &[edge])?;
            let cell = *cell_of.get(&d).ok_or_else(|| CoverError::Inconsistent("face without cell".into()))?;
            index.insert(lift.clone(), faces.len());
            faces.push(Face { wall, cell, lift: lift.clone() });
        }
        let mut used = BTreeSet::new();
        for (lift, partner, _, relation) in &pairs {
            let a = index[lift];
            let b = *index.get(partner).ok_or(CoverError::UnmatchedFace(a, wall))?;
            if a == b {
                return Err(CoverError::UnmatchedFace(a, wall));
            }
            if a < b {
                if !used.insert(a) || !used.insert(b) {
                    return Err(CoverError::UnmatchedFace(a, wall));
                }
                gluings.push(Gluing { faces: (a, b), relation: *relation });
            }
        }
        if used.len() != pairs.len() {
            let missing = index.values().find(|f| !used.contains(*f)).copied().unwrap_or(0);
            return Err(CoverError::UnmatchedFace(missing, wall));
        }
        pairing.insert(wall, pairs.into_iter().map(|(a, _, at, _)| (a, at)).collect());
    }
    let strata = cover_strata_from_pairing(cx, &pairing)?;
    Ok(CoverComplex { cells, faces, gluings, strata })
}

/// Real vertices of `tree` on the side of edge `e` whose tails are those
/// of vertex `at` of the two-vertex tree `wall`, as a bit mask.
fn side_mask(tree: &Tree, iota: &TreeInvolution, e: Flag, wall: &Tree, at: Vertex) -> u64 {
    let want: BTreeSet<Flag> = wall.tails_at(at).into_iter().collect();
    let start = tree.vertex_of(e);
    let mut seen = BTreeSet::from([start]);
    let mut stack = vec![start];
    while let Some(v) = stack.pop() {
        for f in tree.flags_at(v) {
            if f == e || tree.is_tail(f) {
                continue;
            }
            let w = tree.neighbour(f);
            if seen.insert(w) {
                stack.push(w);
            }
        }
    }
    let tails: BTreeSet<Flag> = seen.iter().flat_map(|v| tree.tails_at(*v)).collect();
    let side: Vec<Vertex> = if tails == want {
        seen.into_iter().collect()
    } else {
        (0..tree.num_vertices()).filter(|v| !seen.contains(v)).collect()
    };
    side.into_iter().filter(|v| iota.is_real(*v)).fold(0, |m, v| m | 1 << v)
}

fn reverse_mask(tree: &Tree, iota: &TreeInvolution, o: &OPlanar, mask: u64) -> Result<OPlanar, CoverError> {
    let mut out = o.clone();
    for v in 0..tree.num_vertices() {
        if mask >> v & 1 == 1 {
            out = reverse_at(tree, iota, &out, v).map_err(|e| CoverError::Inconsistent(e.to_string()))?;
        }
    }
    Ok(out)
}

/// One reduction per real edge: the edge flag and the two-vertex tree
/// left after contracting every other edge.
fn reductions(tree: &Tree, iota: &TreeInvolution, o: &OPlanar) -> Result<Vec<(Flag, Decorated)>, CoverError> {
    let all: Vec<Flag> = tree.edges().into_iter().map(|x| x.0).collect();
    iota.real_edges(tree)
        .into_iter()
        .map(|(e, _)| {
            let others: Vec<Flag> = all.iter().copied().filter(|x| *x != e).collect();
            Ok((e, single_contraction(tree, iota, o, &others)?))
        })
        .collect()
}

/// Orbits of the lifts of one stratum under the reversals in `masks`.
/// Lifts form a torsor over reversal sets, so orbits are cosets.
fn orbits(tree: &Tree, iota: &TreeInvolution, ls: &[OPlanar], masks: &BTreeSet<u64>) -> Result<Vec<Vec<OPlanar>>, CoverError> {
    let index: BTreeMap<&OPlanar, usize> = ls.iter().enumerate().map(|(i, o)| (o, i)).collect();
    let mut uf = UnionFind::new(ls.len());
    for (i, o) in ls.iter().enumerate() {
        for m in masks {
            let r = reverse_mask(tree, iota, o, *m)?;
            let j = *index.get(&r).ok_or_else(|| CoverError::Inconsistent("reversal left the lifts".into()))?;
            uf.union(i, j);
        }
    }
    Ok(uf.classes().into_iter().map(|c| c.into_iter().map(|i| ls[i].clone()).collect()).collect())
}

/// Identifies lifts of every stratum through the walls they lie on: a
/// gluing at a wall vertex reverses every real vertex collapsing onto it.
fn cover_strata_from_pairing(
    cx: &StratifiedComplex,
    pairing: &BTreeMap<usize, BTreeMap<OPlanar, Vertex>>,
) -> Result<Vec<CoverStratum>, CoverError> {
    use rayon::prelude::*;
    let per: Vec<Result<Vec<CoverStratum>, CoverError>> = cx
        .strata
        .par_iter()
        .map(|st| {
            let (tree, iota) = (&st.tree, &st.iota);
            let ls = lifts(tree, iota, &st.u);
            let mut masks = BTreeSet::new();
            for lift in &ls {
                for (e, d) in reductions(tree, iota, lift)? {
                    let wall = cx.stratum_of(&d).ok_or_else(|| CoverError::Inconsistent("wall lookup".into()))?;
                    let at = *pairing
                        .get(&wall)
                        .and_then(|p| p.get(&d.o))
                        .ok_or_else(|| CoverError::Inconsistent("wall lift not paired".into()))?;
                    masks.insert(side_mask(tree, iota, e, &d.tree, at));
                }
            }
            let classes = orbits(tree, iota, &ls, &masks)?;
            if classes.len() != 2 {
                return Err(CoverError::Inconsistent(format!("stratum {} has {} sheets", st.id, classes.len())));
            }
            Ok(classes.into_iter().map(|members| CoverStratum { base: st.id, dim: st.dim, members }).collect())
        })
        .collect();
    let mut out = Vec::new();
    for r in per {
        out.extend(r?);
    }
    Ok(out)
}

fn trivial_cover(cx: &StratifiedComplex) -> Result<CoverComplex, CoverError> {
    let top = top_dim(cx);
    let mut cells = Vec::new();
    let mut cell_of = BTreeMap::new();
    for st in cx.strata.iter().filter(|s| s.dim == top) {
        for sheet in 0..2u8 {
            cell_of.insert((st.id, sheet), cells.len());
            cells.push(TopCell { chamber: st.id, sheet, o: st.u.0.clone() });
        }
    }
    let mut faces = Vec::new();
    let mut gluings = Vec::new();
    for wall in walls(cx) {
        let rep = analyse_wall(cx, wall, None).map_err(|e| CoverError::Inconsistent(e.to_string()))?;
        for sheet in 0..2u8 {
            let a = faces.len();
            for side in &rep.sides {
                faces.push(Face { wall, cell: cell_of[&(side.chamber, sheet)], lift: side.lift.clone() });
            }
            gluings.push(Gluing { faces: (a, a + 1), relation: None });
        }
    }
    let strata = cx
        .strata
        .iter()
        .flat_map(|st| (0..2).map(|_| CoverStratum { base: st.id, dim: st.dim, members: vec![st.u.0.clone()] }))
        .collect();
    Ok(CoverComplex { cells, faces, gluings, strata })
}

impl CoverComplex {
    pub fn connected_components(&self) -> usize {
        let mut uf = UnionFind::new(self.cells.len());
        for g in &self.gluings {
            uf.union(self.faces[g.faces.0].cell, self.faces[g.faces.1].cell);
        }
        uf.classes().len()
    }

    pub fn relation_counts(&self) -> BTreeMap<Relation, usize> {
        let mut out = BTreeMap::new();
        for g in &self.gluings {
            if let Some(r) = g.relation {
                *out.entry(r).or_insert(0) += 1;
            }
        }
        out
    }

    pub fn count_by_dim(&self) -> Vec<usize> {
        let top = self.strata.iter().map(|s| s.dim).max().unwrap_or(0);
        let mut out = vec![0; top + 1];
        for s in &self.strata {
            out[s.dim] += 1;
        }
        out
    }

    pub fn euler_char(&self, cx: &StratifiedComplex) -> Result<i64, CoverError> {
        let mut total = 0;
        for s in &self.strata {
            total += chi_c_stratum(&cx.strata[s.base])?;
        }
        Ok(total)
    }

    /// Walls over which some gluing carries a contributing tag.
    pub fn contributing_walls(&self) -> BTreeSet<usize> {
        self.gluings
            .iter()
            .filter(|g| g.relation.is_some_and(|r| r.contributes()))
            .map(|g| self.faces[g.faces.0].wall)
            .collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "cells": self.cells.len(),
            "faces": self.faces.len(),
            "gluings": self.gluings,
            "components": self.connected_components(),
            "strata_by_dim": self.count_by_dim(),
            "relations": self.relation_counts().iter().map(|(r, c)| (format!("{r:?}"), *c)).collect::<BTreeMap<_, _>>(),
        })
    }
}

/// An R-equivalence class: o-planar lifts of one base stratum.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct REquivClass {
    pub base: usize,
    pub members: Vec<OPlanar>,
}

/// Classes from the relations alone. With one real vertex each lift is
/// its own class. Otherwise two lifts are related when, for some real
/// edge, the reduced structures differ by a reversal satisfying one of the
/// relations and the lifts differ by reversing every real vertex that
/// collapses onto the reversed vertex. At four labels the non-contributing
/// reversal is used throughout.
pub fn r_equivalence_classes(cx: &StratifiedComplex) -> Result<Vec<REquivClass>, CoverError> {
    if cx.sigma.l == 0 {
        return Err(CoverError::Inconsistent("defined for real labels only".into()));
    }
    let four = cx.sigma.n() == 4;
    let mut out = Vec::new();
    for st in &cx.strata {
        let (tree, iota) = (&st.tree, &st.iota);
        let ls = lifts(tree, iota, &st.u);
        let mut masks = BTreeSet::new();
        for lift in &ls {
            for (e, d) in reductions(tree, iota, lift)? {
                let ctx = context(&d.tree, iota_of(cx, &d)?, &d.o).map_err(|x| CoverError::Inconsistent(x.to_string()))?;
                for at in [0, 1] {
                    let wi = iota_of(cx, &d)?;
                    let Ok(r) = reverse_at(&d.tree, wi, &d.o, at) else { continue };
                    let related = if four {
                        at == reversal_vertex(&ctx)
                    } else {
                        glue_predicate(&d.tree, wi, &d.o, &r).is_some()
                    };
                    if related {
                        masks.insert(side_mask(tree, iota, e, &d.tree, at));
                    }
                }
            }
        }
        for members in orbits(tree, iota, &ls, &masks)? {
            out.push(REquivClass { base: st.id, members });
        }
    }
    Ok(out)
}

fn iota_of<'a>(cx: &'a StratifiedComplex, d: &Decorated) -> Result<&'a TreeInvolution, CoverError> {
    let id = cx.stratum_of(d).ok_or_else(|| CoverError::Inconsistent("reduction not a stratum".into()))?;
    Ok(&cx.strata[id].iota)
}

/// Number of strata on which comparing reduced structures alone, without
/// tracking which vertices were reversed, merges every lift into a single
/// class. Nonzero exactly when some reduction forgets a vertex orientation.
pub fn reduced_reading_collapses(cx: &StratifiedComplex) -> Result<usize, CoverError> {
    let mut count = 0;
    for st in &cx.strata {
        let (tree, iota) = (&st.tree, &st.iota);
        let ls = lifts(tree, iota, &st.u);
        if iota.real_edges(tree).is_empty() {
            continue;
        }
        let red: Vec<Vec<(Flag, Decorated)>> = ls.iter().map(|o| reductions(tree, iota, o)).collect::<Result<_, _>>()?;
        let mut uf = UnionFind::new(ls.len());
        for i in 0..ls.len() {
            for j in i + 1..ls.len() {
                let hit = (0..red[i].len()).any(|e| {
                    let (a, b) = (&red[i][e].1, &red[j][e].1);
                    a.tree == b.tree
                        && iota_of(cx, a).is_ok_and(|wi| {
                            if cx.sigma.n() == 4 {
                                reversal_between(&a.tree, wi, &a.o, &b.o).is_some_and(|at| {
                                    context(&a.tree, wi, &a.o).is_ok_and(|c| reversal_vertex(&c) == at)
                                })
                            } else {
                                glue_predicate(&a.tree, wi, &a.o, &b.o).is_some()
                            }
                        })
                });
                if hit {
                    uf.union(i, j);
                }
            }
        }
        if uf.classes().len() == 1 {
            count += 1;
        }
    }
    Ok(count)
}
