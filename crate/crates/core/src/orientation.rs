//! Orientation signs on codimension-one walls.
//!
//! A wall is a two-vertex stratum. Each top chamber carries the orientation
//! `(-1)^parity(o) * omega(o)` of its convention representative `o`. Across
//! a wall the two chambers induce boundary orientations on it; the wall
//! lies on the first Stiefel-Whitney cycle exactly when those induced
//! orientations agree, i.e. when the mismatch parity is zero.
//!
//! Notation for a wall with two real vertices and real labels: `near` is
//! the vertex of tail `n`, `far` the other one. Reading the real flags at
//! `near` after `n`, `q` counts those before the edge flag and `s` those
//! after it (excluding `n`); `r + 1` is the number of real flags at `far`.
//! Then `q + r + s = l - 1`.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::numeric::{reversal_numeric, numeric_sign_check, NumericError, Sampling, Side};
use crate::planar::{anchor_labels, is_convention, lifts, parity, reverse_at, OPlanar, VertexData};
use crate::real::{LabelInvolution, TreeInvolution};
use crate::strata::{contract_oplanar, sigma_of, StratifiedComplex};
use crate::tree::{Flag, Tree, Vertex};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OrientationError {
    #[error("not a wall: {0}")]
    NotAWall(String),
    #[error("lift structure: {0}")]
    Lifts(String),
    #[error(transparent)]
    Numeric(#[from] NumericError),
}

/// Counts describing a wall with two real vertices and real labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TwoVertexContext {
    pub near: Vertex,
    pub far: Vertex,
    pub l: u32,
    pub q: u32,
    pub r: u32,
    pub s: u32,
    pub plus_near: u32,
    pub plus_far: u32,
    pub real_near: u32,
    pub real_far: u32,
    pub valency_near: u32,
    pub valency_far: u32,
    /// Distinguished labels sitting at each vertex.
    pub anchors_near: u32,
    pub anchors_far: u32,
}

fn edge_flag_at(tree: &Tree, v: Vertex) -> Flag {
    tree.flags_at(v).into_iter().find(|f| !tree.is_tail(*f)).expect("two-vertex tree")
}

pub fn context(tree: &Tree, iota: &TreeInvolution, o: &OPlanar) -> Result<TwoVertexContext, OrientationError> {
    let sigma = sigma_of(tree, iota);
    if tree.num_vertices() != 2 || iota.real_vertices.len() != 2 || sigma.l == 0 {
        return Err(OrientationError::NotAWall("need two real vertices and real labels".into()));
    }
    let n = tree.n();
    let near = tree.tail_vertex(n);
    let far = 1 - near;
    let fe = edge_flag_at(tree, near);
    let order = o.order_at(near);
    let q = order.iter().position(|f| *f == fe).ok_or_else(|| OrientationError::NotAWall("edge not real".into()))? as u32 - 1;
    let real_near = order.len() as u32;
    let real_far = o.order_at(far).len() as u32;
    let anchors = anchor_labels(&sigma);
    let count = |v: Vertex| tree.tails_at(v).iter().filter(|t| anchors.contains(t)).count() as u32;
    Ok(TwoVertexContext {
        near,
        far,
        l: sigma.l,
        q,
        r: real_far - 1,
        s: real_near - q - 2,
        plus_near: o.plus_at(near).len() as u32,
        plus_far: o.plus_at(far).len() as u32,
        real_near,
        real_far,
        valency_near: tree.valency(near) as u32,
        valency_far: tree.valency(far) as u32,
        anchors_near: count(near),
        anchors_far: count(far),
    })
}

/// Boundary parity (odd = true) from the closed table. The table is
/// derived for `l >= 2`; at `l = 1` it is evaluated as written.
pub fn boundary_parity(ctx: &TwoVertexContext) -> bool {
    let (l, q, r) = (ctx.l as i64, ctx.q as i64, ctx.r as i64);
    let v = match r {
        0 => {
            if l - r >= 3 {
                q + 1
            } else {
                0
            }
        }
        1 => 1,
        _ => match l - r {
            d if d >= 3 => (q + 1) * (r + 1),
            2 if q == 1 => 0,
            2 => l + 1,
            _ => l + 1,
        },
    };
    v % 2 != 0
}

/// Boundary sign for walls without real labels: two real vertices give 1;
/// a pair of conjugate vertices gives 0 towards the nonempty chamber and
/// `|{1..k-1} on the negative side| + 1` towards the empty one.
pub fn boundary_parity_unlabelled(tree: &Tree, iota: &TreeInvolution, o: &OPlanar, side: Side) -> bool {
    match side {
        Side::Real => true,
        Side::NonEmpty => false,
        Side::Empty => {
            let sigma = sigma_of(tree, iota);
            let p = o.plus_edge_flag.expect("special edge sign");
            let minus = tree.vertex_of(tree.partner(p));
            let c = tree.tails_at(minus).iter().filter(|t| **t >= 1 && **t < sigma.k).count();
            (c + 1) % 2 == 1
        }
    }
}

/// Parity relating the vertex form of a structure to that of its
/// reversal at the vertex.
pub fn reversal_parity(plus: u32, real: u32) -> bool {
    let r = real as i64;
    (plus as i64 + (r - 2) * (r - 3) / 2) % 2 != 0
}

pub fn reversal_parity_at(tree: &Tree, iota: &TreeInvolution, o: &OPlanar, v: Vertex) -> bool {
    reversal_parity(o.plus_at(v).len() as u32, iota.real_flags(tree, v).len() as u32)
}

/// Parity difference of the contracted structures of `o` and of `o`
/// reversed at `v`.
pub fn parity_diff(ctx: &TwoVertexContext, v: Vertex) -> bool {
    let (q, r, s) = (ctx.q as i64, ctx.r as i64, ctx.s as i64);
    let v = if v == ctx.far {
        ctx.plus_far as i64 + r * (r - 1) / 2
    } else if ctx.real_near > 3 {
        ctx.plus_near as i64 + q * r + r * s + q * s + s * (s - 1) / 2 + q * (q - 1) / 2
    } else if ctx.real_near == 3 {
        ctx.plus_near as i64 + ctx.real_far as i64 - 1
    } else {
        ctx.plus_near as i64
    };
    v % 2 != 0
}

/// The vertex holding at most one distinguished label; the two convention
/// lifts across the wall differ there.
pub fn reversal_vertex(ctx: &TwoVertexContext) -> Vertex {
    if ctx.anchors_far <= 1 {
        ctx.far
    } else {
        ctx.near
    }
}

/// Closed form of the mismatch parity.
pub fn mismatch_closed_form(ctx: &TwoVertexContext) -> bool {
    if reversal_vertex(ctx) == ctx.far {
        ctx.valency_far % 2 == 1
    } else if ctx.real_near != 3 {
        (ctx.valency_near * (ctx.valency_far - 1)) % 2 == 1
    } else {
        ctx.real_far >= 2
    }
}

/// Whether the wall lies on the first Stiefel-Whitney cycle by the
/// closed rule. Walls without real labels never do.
pub fn on_w1_cycle(tree: &Tree, iota: &TreeInvolution, o: &OPlanar) -> bool {
    match context(tree, iota, o) {
        Ok(ctx) => !mismatch_closed_form(&ctx),
        Err(_) => false,
    }
}

/// Parity of a one-vertex structure; the empty real part counts as even.
pub fn top_parity(o: &OPlanar, sigma: &LabelInvolution) -> bool {
    if o.data(0) == &VertexData::Empty {
        return false;
    }
    parity(o, sigma).expect("one-vertex structure")
}

/// One side of a wall.
#[derive(Debug, Clone, Serialize)]
pub struct WallSide {
    pub chamber: usize,
    /// Lift on the wall whose contraction is the chamber's convention
    /// representative.
    #[serde(skip)]
    pub lift: OPlanar,
    #[serde(skip)]
    pub top: OPlanar,
    pub parity: bool,
    pub boundary_table: bool,
    pub boundary_numeric: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct WallReport {
    pub stratum: usize,
    pub kind: &'static str,
    pub context: Option<TwoVertexContext>,
    pub sides: [WallSide; 2],
    pub reversal_vertex: Option<Vertex>,
    pub reversal_vertex_rule: Option<Vertex>,
    pub reversal_formula: bool,
    pub reversal_numeric: Option<bool>,
    pub parity_diff_formula: Option<bool>,
    pub parity_diff_actual: Option<bool>,
    /// Mismatch parity from the componentwise signs (parity difference formula,
    /// table boundary parity, formula reversal parity).
    pub mismatch_componentwise: bool,
    pub mismatch_closed: bool,
    /// Mismatch parity from actual parities and numeric signs.
    pub mismatch_numeric: Option<bool>,
}

impl WallReport {
    /// Best available mismatch parity: numeric when computed.
    pub fn mismatch(&self) -> bool {
        self.mismatch_numeric.unwrap_or(self.mismatch_componentwise)
    }
}

/// The convention lifts of a wall: for each lift, its contractions, the
/// chamber each lands in, and whether it lands on the representative.
fn convention_lifts(
    cx: &StratifiedComplex,
    id: usize,
) -> Result<Vec<(OPlanar, OPlanar, usize, Side)>, OrientationError> {
    let st = &cx.strata[id];
    let (tree, iota) = (&st.tree, &st.iota);
    let edge = tree.edges()[0].0;
    let mut out = Vec::new();
    for lift in lifts(tree, iota, &st.u) {
        let results = contract_oplanar(tree, iota, &lift, &[edge]).map_err(|e| OrientationError::Lifts(e.to_string()))?;
        for d in results {
            if !is_convention(&d.o, &cx.sigma) {
                continue;
            }
            let chamber = cx
                .stratum_of(&d)
                .ok_or_else(|| OrientationError::Lifts("contraction not in complex".into()))?;
            let side = if iota.real_vertices.len() == 2 {
                Side::Real
            } else if d.o.is_empty_real_part() {
                Side::Empty
            } else {
                Side::NonEmpty
            };
            out.push((lift.clone(), d.o, chamber, side));
        }
    }
    Ok(out)
}

fn differing_vertex(a: &OPlanar, b: &OPlanar) -> Option<Vertex> {
    let diff: Vec<Vertex> =
        a.vertex_data.keys().copied().filter(|v| a.vertex_data[v] != b.vertex_data[v]).collect();
    (diff.len() == 1).then(|| diff[0])
}

/// Full analysis of one wall; without `sampling` the numeric oracle is skipped.
pub fn analyse_wall(cx: &StratifiedComplex, id: usize, sampling: Option<&Sampling>) -> Result<WallReport, OrientationError> {
    let st = &cx.strata[id];
    let (tree, iota) = (&st.tree, &st.iota);
    let sigma = cx.sigma;
    if tree.num_vertices() != 2 {
        return Err(OrientationError::NotAWall(format!("stratum {id} has {} vertices", tree.num_vertices())));
    }
    let found = convention_lifts(cx, id)?;
    let pick = |side: Side| -> Vec<&(OPlanar, OPlanar, usize, Side)> { found.iter().filter(|x| x.3 == side).collect() };
    let make_side = |(lift, top, chamber, side): &(OPlanar, OPlanar, usize, Side), table: bool| -> Result<WallSide, OrientationError> {
        let numeric = match sampling {
            Some(s) => Some(numeric_sign_check(tree, iota, lift, *side, s)?),
            None => None,
        };
        Ok(WallSide {
            chamber: *chamber,
            lift: lift.clone(),
            top: top.clone(),
            parity: top_parity(top, &sigma),
            boundary_table: table,
            boundary_numeric: numeric,
        })
    };
    if iota.real_vertices.len() == 2 {
        let real = pick(Side::Real);
        if real.len() != 2 {
            return Err(OrientationError::Lifts(format!("{} convention lifts", real.len())));
        }
        let v = differing_vertex(&real[0].0, &real[1].0)
            .ok_or_else(|| OrientationError::Lifts("lifts differ at both vertices".into()))?;
        let ctx = context(tree, iota, &real[0].0).ok();
        let table = |lift: &OPlanar| match context(tree, iota, lift) {
            Ok(c) => boundary_parity(&c),
            Err(_) => boundary_parity_unlabelled(tree, iota, lift, Side::Real),
        };
        let a = make_side(real[0], table(&real[0].0))?;
        let b = make_side(real[1], table(&real[1].0))?;
        let reversal_formula = reversal_parity_at(tree, iota, &real[0].0, v);
        let reversal_num = match sampling {
            Some(s) => Some(reversal_numeric(tree, iota, &real[0].0, v, &Sampling { seeds: s.seeds.min(5), ..*s })?),
            None => None,
        };
        let reversed = reverse_at(tree, iota, &real[0].0, v).map_err(|e| OrientationError::Lifts(e.to_string()))?;
        let top_of = |o: &OPlanar| -> OPlanar {
            contract_oplanar(tree, iota, o, &[tree.edges()[0].0]).unwrap().remove(0).o
        };
        let actual_diff = top_parity(&top_of(&real[0].0), &sigma) ^ top_parity(&top_of(&reversed), &sigma);
        let formula_diff = ctx.map(|c| parity_diff(&c, v));
        let mismatch_componentwise = formula_diff.unwrap_or(actual_diff) ^ a.boundary_table ^ b.boundary_table ^ reversal_formula;
        let mismatch_numeric = match (a.boundary_numeric, b.boundary_numeric, reversal_num) {
            (Some(x), Some(y), Some(m)) => Some(a.parity ^ b.parity ^ x ^ y ^ m),
            _ => None,
        };
        Ok(WallReport {
            stratum: id,
            kind: if sigma.l > 0 { "real" } else { "real-unlabelled" },
            context: ctx,
            reversal_vertex: Some(v),
            reversal_vertex_rule: ctx.map(|c| reversal_vertex(&c)),
            reversal_formula,
            reversal_numeric: reversal_num,
            parity_diff_formula: formula_diff,
            parity_diff_actual: Some(actual_diff),
            mismatch_componentwise,
            mismatch_closed: ctx.map(|c| mismatch_closed_form(&c)).unwrap_or(true),
            mismatch_numeric,
            sides: [a, b],
        })
    } else {
        let ne = pick(Side::NonEmpty);
        if ne.len() != 1 {
            return Err(OrientationError::Lifts(format!("{} nonempty convention lifts", ne.len())));
        }
        let lift = ne[0].0.clone();
        let empty_chamber = found
            .iter()
            .find(|x| x.3 == Side::Empty)
            .map(|x| x.2)
            .ok_or_else(|| OrientationError::Lifts("no empty chamber".into()))?;
        let empty_top = OPlanar { vertex_data: [(0, VertexData::Empty)].into_iter().collect(), plus_edge_flag: None };
        let a = make_side(ne[0], boundary_parity_unlabelled(tree, iota, &lift, Side::NonEmpty))?;
        let b = make_side(
            &(lift.clone(), empty_top, empty_chamber, Side::Empty),
            boundary_parity_unlabelled(tree, iota, &lift, Side::Empty),
        )?;
        let mismatch_componentwise = a.parity ^ b.parity ^ a.boundary_table ^ b.boundary_table;
        let mismatch_numeric = match (a.boundary_numeric, b.boundary_numeric) {
            (Some(x), Some(y)) => Some(a.parity ^ b.parity ^ x ^ y),
            _ => None,
        };
        Ok(WallReport {
            stratum: id,
            kind: "conjugate",
            context: None,
            reversal_vertex: None,
            reversal_vertex_rule: None,
            reversal_formula: false,
            reversal_numeric: None,
            parity_diff_formula: None,
            parity_diff_actual: None,
            mismatch_componentwise,
            mismatch_closed: true,
            mismatch_numeric,
            sides: [a, b],
        })
    }
}

/// Walls of the complex: strata one below the top dimension.
pub fn walls(cx: &StratifiedComplex) -> Vec<usize> {
    let top = cx.sigma.n() as usize - 3;
    cx.strata.iter().filter(|s| s.dim + 1 == top).map(|s| s.id).collect()
}

pub fn analyse_all(cx: &StratifiedComplex, sampling: Option<&Sampling>) -> Result<BTreeMap<usize, WallReport>, OrientationError> {
    use rayon::prelude::*;
    walls(cx).par_iter().map(|id| analyse_wall(cx, *id, sampling).map(|r| (*id, r))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::real::sigma_normal;
    use crate::strata::build_poset;

    fn ctx(l: u32, q: u32, r: u32) -> TwoVertexContext {
        let s = l - 1 - q - r;
        TwoVertexContext {
            near: 0,
            far: 1,
            l,
            q,
            r,
            s,
            plus_near: 0,
            plus_far: 0,
            real_near: q + s + 2,
            real_far: r + 1,
            valency_near: q + s + 2,
            valency_far: r + 1,
            anchors_near: 1,
            anchors_far: 2,
        }
    }

    #[test]
    fn boundary_table_rows() {
        // r >= 2, l - r >= 3
        assert!(!boundary_parity(&ctx(6, 1, 2)));
        assert!(boundary_parity(&ctx(6, 0, 2)));
        // r >= 2, l - r = 2
        assert!(!boundary_parity(&ctx(4, 1, 2)));
        assert!(boundary_parity(&ctx(4, 0, 2)));
        // r >= 2, l - r = 1
        assert!(!boundary_parity(&ctx(3, 0, 2)));
        assert!(boundary_parity(&ctx(4, 0, 3)));
        assert!(boundary_parity(&ctx(5, 2, 1)));
        assert!(!boundary_parity(&ctx(5, 1, 0)));
        assert!(boundary_parity(&ctx(5, 2, 0)));
        assert!(!boundary_parity(&ctx(2, 1, 0)));
    }

    #[test]
    fn reversal_parity_values() {
        assert!(!reversal_parity(0, 3));
        assert!(!reversal_parity(0, 2));
        assert!(reversal_parity(0, 4));
        assert!(reversal_parity(0, 5));
        assert!(!reversal_parity(1, 1));
    }

    #[test]
    fn context_counts_sum() {
        let s = sigma_normal(0, 6).unwrap();
        let cx = build_poset(&s);
        for id in walls(&cx) {
            let st = &cx.strata[id];
            let c = context(&st.tree, &st.iota, &st.u.0).unwrap();
            assert_eq!(c.q + c.r + c.s + 1, c.l);
            assert_eq!(c.anchors_near + c.anchors_far, 3);
        }
    }

    #[test]
    fn identity_involution_walls() {
        // all chambers of the identity case are glued consistently
        // only where the closed rule says so; check against numerics
        let s = sigma_normal(0, 5).unwrap();
        let cx = build_poset(&s);
        let reports = analyse_all(&cx, Some(&Sampling::with_seeds(3))).unwrap();
        assert_eq!(reports.len(), 30);
        for r in reports.values() {
            assert_eq!(r.mismatch_numeric, Some(r.mismatch_closed), "{r:?}");
        }
    }
}
