//! Floating-point oracle for orientation signs.
//!
//! Each real component is put in a normal position by an explicit Möbius
//! map and read off as an ordered list of real coordinates: the real and
//! imaginary parts of the free upper-half-plane points (in label order),
//! then the free real points in cyclic order. Comparing two orientation
//! conventions is then the sign of a Jacobian determinant, evaluated by
//! central differences.
//!
//! A two-component boundary stratum is smoothed by the family
//! `(z - x_fe) * w + t = 0`: the component carrying tail `n` lives in the
//! `z` plane, the other one in the `w` plane with its node at `w = 0`, so
//! its points land at `z = x_fe - t / w`. Components swapped by the real
//! structure are smoothed by `z * w = c` with `(z, w) -> (conj w, conj z)`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::planar::{reverse_data, OPlanar, VertexData};
use crate::real::{LabelInvolution, TreeInvolution};
use crate::strata::{contract_oplanar, sigma_of};
use crate::tree::{Flag, Tree, Vertex};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericError {
    #[error("determinant {0:e} below threshold")]
    IllConditioned(f64),
    #[error("smoothing parameter must be positive")]
    DegenerateT,
    #[error("unsupported shape: {0}")]
    Unsupported(String),
    #[error("smoothed configuration has type {found}, expected {expected}")]
    WrongChamber { found: String, expected: String },
}

pub const DEFAULT_T: f64 = 1e-3;
pub const FD_STEP: f64 = 1e-6;
pub const DET_THRESHOLD: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Pt {
    Fin(C),
    Inf,
}

impl Pt {
    pub fn z(&self) -> C {
        match self {
            Pt::Fin(z) => *z,
            Pt::Inf => panic!("point at infinity has no affine coordinate"),
        }
    }
}

pub type Config = BTreeMap<Flag, Pt>;

/// `w -> (a w + b) / (c w + d)`.
#[derive(Debug, Clone, Copy)]
struct Mobius {
    a: C,
    b: C,
    c: C,
    d: C,
}

impl Mobius {
    fn new(a: C, b: C, c: C, d: C) -> Mobius {
        Mobius { a, b, c, d }
    }
    fn id() -> Mobius {
        Mobius::new(C::new(1.0, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(1.0, 0.0))
    }
    fn apply(&self, p: Pt) -> Pt {
        match p {
            Pt::Inf => {
                if self.c.norm() < 1e-300 {
                    Pt::Inf
                } else {
                    Pt::Fin(self.a / self.c)
                }
            }
            Pt::Fin(z) => {
                let den = self.c * z + self.d;
                if den.norm() < 1e-300 {
                    Pt::Inf
                } else {
                    Pt::Fin((self.a * z + self.b) / den)
                }
            }
        }
    }
    /// `self` after `first`.
    fn after(&self, first: &Mobius) -> Mobius {
        Mobius::new(
            self.a * first.a + self.b * first.c,
            self.a * first.b + self.b * first.d,
            self.c * first.a + self.d * first.c,
            self.c * first.b + self.d * first.d,
        )
    }
    fn inverse(&self) -> Mobius {
        Mobius::new(self.d, -self.b, -self.c, self.a)
    }
}

fn re(x: f64) -> C {
    C::new(x, 0.0)
}

/// The map sending `(p0, p1, pinf)` to `(0, 1, infinity)`.
fn three_point(p0: Pt, p1: Pt, pinf: Pt) -> Mobius {
    let one = re(1.0);
    let zero = re(0.0);
    match (p0, p1, pinf) {
        (Pt::Fin(x0), Pt::Fin(x1), Pt::Inf) => Mobius::new(one, -x0, zero, x1 - x0),
        (Pt::Inf, Pt::Fin(x1), Pt::Fin(xi)) => Mobius::new(zero, x1 - xi, one, -xi),
        (Pt::Fin(x0), Pt::Inf, Pt::Fin(xi)) => Mobius::new(one, -x0, one, -xi),
        (Pt::Fin(x0), Pt::Fin(x1), Pt::Fin(xi)) => {
            Mobius::new(x1 - xi, -x0 * (x1 - xi), x1 - x0, -xi * (x1 - x0))
        }
        _ => panic!("three distinct points expected"),
    }
}

/// How conjugate points are placed in a normal frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reality {
    /// `z -> conj z`.
    Conj,
    /// `z -> -1 / conj z`.
    Antipodal,
    /// No real structure on this component.
    Free,
}

/// A normal position for the special points of one component.
#[derive(Debug, Clone, PartialEq)]
pub enum Chart {
    /// Three real points at `0`, `1`, `infinity`; free reals lie in
    /// `segment`.
    RealPins { zero: Flag, one: Flag, inf: Flag, reals: Vec<Flag>, complex: Vec<Flag>, segment: (f64, f64) },
    /// A real point at infinity (or zero) and an upper point at `i`.
    BoundaryInterior { pin: Flag, pin_at_zero: bool, up: Flag, reals: Vec<Flag>, complex: Vec<Flag> },
    /// No real points: `up` at `i`, `ray` at `lambda i` with `0 < lambda < 1`.
    Circle { up: Flag, ray: Flag, complex: Vec<Flag> },
    /// Empty real part: `top` at `i`, `ray` at `lambda i`, `-1 < lambda < 1`,
    /// conjugation `z -> -1 / conj z`.
    Antipodal { top: Flag, ray: Flag, complex: Vec<Flag> },
    /// Complex chart: three points at `0`, `1`, `infinity`.
    Complex3 { zero: Flag, one: Flag, inf: Flag, complex: Vec<Flag> },
}

impl Chart {
    pub fn dim(&self) -> usize {
        match self {
            Chart::RealPins { reals, complex, .. } | Chart::BoundaryInterior { reals, complex, .. } => {
                reals.len() + 2 * complex.len()
            }
            Chart::Circle { complex, .. } | Chart::Antipodal { complex, .. } => 2 * complex.len() + 1,
            Chart::Complex3 { complex, .. } => 2 * complex.len(),
        }
    }

    fn reality(&self) -> Reality {
        match self {
            Chart::Antipodal { .. } => Reality::Antipodal,
            Chart::Complex3 { .. } => Reality::Free,
            _ => Reality::Conj,
        }
    }

    fn complex(&self) -> &[Flag] {
        match self {
            Chart::RealPins { complex, .. }
            | Chart::BoundaryInterior { complex, .. }
            | Chart::Circle { complex, .. }
            | Chart::Antipodal { complex, .. }
            | Chart::Complex3 { complex, .. } => complex,
        }
    }

    /// Places points from coordinates; `partner` gives the conjugate label
    /// of an upper point, when it lives on this component.
    pub fn place(&self, coords: &[f64], partner: &dyn Fn(Flag) -> Option<Flag>) -> Config {
        let mut cfg = Config::new();
        let cx = self.complex();
        for (i, f) in cx.iter().enumerate() {
            cfg.insert(*f, Pt::Fin(C::new(coords[2 * i], coords[2 * i + 1])));
        }
        let rest = &coords[2 * cx.len()..];
        match self {
            Chart::RealPins { zero, one, inf, reals, .. } => {
                cfg.insert(*zero, Pt::Fin(re(0.0)));
                cfg.insert(*one, Pt::Fin(re(1.0)));
                cfg.insert(*inf, Pt::Inf);
                for (f, x) in reals.iter().zip(rest) {
                    cfg.insert(*f, Pt::Fin(re(*x)));
                }
            }
            Chart::BoundaryInterior { pin, pin_at_zero, up, reals, .. } => {
                cfg.insert(*pin, if *pin_at_zero { Pt::Fin(re(0.0)) } else { Pt::Inf });
                cfg.insert(*up, Pt::Fin(C::new(0.0, 1.0)));
                for (f, x) in reals.iter().zip(rest) {
                    cfg.insert(*f, Pt::Fin(re(*x)));
                }
            }
            Chart::Circle { up, ray, .. } | Chart::Antipodal { top: up, ray, .. } => {
                cfg.insert(*up, Pt::Fin(C::new(0.0, 1.0)));
                cfg.insert(*ray, Pt::Fin(C::new(0.0, rest[0])));
            }
            Chart::Complex3 { zero, one, inf, .. } => {
                cfg.insert(*zero, Pt::Fin(re(0.0)));
                cfg.insert(*one, Pt::Fin(re(1.0)));
                cfg.insert(*inf, Pt::Inf);
            }
        }
        add_partners(&mut cfg, self.reality(), partner);
        cfg
    }

    /// Normalizes a configuration and reads its coordinates.
    pub fn read(&self, cfg: &Config) -> Vec<f64> {
        let m = self.normalizer(cfg);
        let get = |f: &Flag| m.apply(cfg[f]).z();
        let mut out = Vec::with_capacity(self.dim());
        for f in self.complex() {
            let z = get(f);
            out.push(z.re);
            out.push(z.im);
        }
        match self {
            Chart::RealPins { reals, .. } | Chart::BoundaryInterior { reals, .. } => {
                out.extend(reals.iter().map(|f| get(f).re));
            }
            Chart::Circle { ray, .. } | Chart::Antipodal { ray, .. } => out.push(get(ray).im),
            Chart::Complex3 { .. } => {}
        }
        out
    }

    fn normalizer(&self, cfg: &Config) -> Mobius {
        match self {
            Chart::RealPins { zero, one, inf, .. } | Chart::Complex3 { zero, one, inf, .. } => {
                three_point(cfg[zero], cfg[one], cfg[inf])
            }
            Chart::BoundaryInterior { pin, pin_at_zero, up, .. } => {
                let s1 = match cfg[pin] {
                    Pt::Inf => Mobius::id(),
                    Pt::Fin(b) => Mobius::new(re(0.0), re(-1.0), re(1.0), -b),
                };
                let p = s1.apply(cfg[up]).z();
                let s2 = Mobius::new(re(1.0 / p.im), re(-p.re / p.im), re(0.0), re(1.0));
                let m = s2.after(&s1);
                if *pin_at_zero {
                    Mobius::new(re(0.0), re(-1.0), re(1.0), re(0.0)).after(&m)
                } else {
                    m
                }
            }
            Chart::Circle { up, ray, .. } => {
                let p = cfg[up].z();
                let a = Mobius::new(re(1.0 / p.im), re(-p.re / p.im), re(0.0), re(1.0));
                let i = C::new(0.0, 1.0);
                let k = Mobius::new(re(1.0), -i, re(1.0), i);
                let u = k.after(&a).apply(cfg[ray]).z();
                let rot = -u.norm() / u;
                let r = Mobius::new(rot, re(0.0), re(0.0), re(1.0));
                k.inverse().after(&r.after(&k.after(&a)))
            }
            Chart::Antipodal { top, ray, .. } => {
                let q = cfg[top].z();
                let t1 = Mobius::new(re(1.0), -q, q.conj(), re(1.0));
                let u = t1.apply(cfg[ray]).z();
                let i = C::new(0.0, 1.0);
                let rot = -i * u.norm() / u;
                let r = Mobius::new(rot, re(0.0), re(0.0), re(1.0));
                let back = Mobius::new(re(1.0), i, i, re(1.0));
                back.after(&r.after(&t1))
            }
        }
    }

    /// A random admissible coordinate vector.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let mut taken: Vec<C> = match self {
            Chart::BoundaryInterior { .. } | Chart::Circle { .. } => vec![C::new(0.0, 1.0)],
            Chart::Antipodal { .. } => vec![C::new(0.0, 1.0), C::new(0.0, -1.0)],
            _ => vec![],
        };
        let mut out = Vec::new();
        for _ in self.complex() {
            let z = loop {
                let z = match self.reality() {
                    Reality::Conj => C::new(rng.gen_range(-1.5..1.5), rng.gen_range(0.3..2.0)),
                    _ => C::from_polar(rng.gen_range(0.4..2.5), rng.gen_range(0.0..std::f64::consts::TAU)),
                };
                let bad = taken.iter().any(|w| (z - w).norm() < 0.2)
                    || (self.reality() == Reality::Free && ((z - re(1.0)).norm() < 0.2 || z.norm() < 0.3))
                    || (self.reality() == Reality::Antipodal
                        && taken.iter().any(|w| (z + re(1.0) / w.conj()).norm() < 0.2));
                if !bad {
                    break z;
                }
            };
            taken.push(z);
            if self.reality() == Reality::Antipodal {
                taken.push(-re(1.0) / z.conj());
            }
            out.push(z.re);
            out.push(z.im);
        }
        match self {
            Chart::RealPins { reals, segment, .. } => {
                let hi = if segment.1.is_infinite() { 0.75 } else { 0.95 };
                let mut xs: Vec<f64> = (0..reals.len()).map(|_| rng.gen_range(0.05..hi)).collect();
                xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
                for x in xs {
                    out.push(if segment.1.is_infinite() {
                        segment.0 + x / (1.0 - x)
                    } else {
                        segment.0 + (segment.1 - segment.0) * x
                    });
                }
            }
            Chart::BoundaryInterior { reals, pin_at_zero, .. } => {
                let mut xs: Vec<f64> = (0..reals.len())
                    .map(|_| {
                        let x = rng.gen_range(0.4..2.0);
                        if *pin_at_zero && rng.gen_bool(0.5) {
                            -x
                        } else if *pin_at_zero {
                            x
                        } else {
                            x - 1.2
                        }
                    })
                    .collect();
                xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
                out.extend(xs);
            }
            Chart::Circle { .. } => out.push(rng.gen_range(0.2..0.8)),
            Chart::Antipodal { .. } => out.push(rng.gen_range(-0.8..0.8)),
            Chart::Complex3 { .. } => {}
        }
        out
    }
}

fn add_partners(cfg: &mut Config, reality: Reality, partner: &dyn Fn(Flag) -> Option<Flag>) {
    if reality == Reality::Free {
        return;
    }
    let snapshot: Vec<(Flag, Pt)> = cfg.iter().map(|(f, p)| (*f, *p)).collect();
    for (f, p) in snapshot {
        let Some(g) = partner(f) else { continue };
        if g == f || cfg.contains_key(&g) {
            continue;
        }
        let image = match (reality, p) {
            (Reality::Conj, Pt::Fin(z)) => Pt::Fin(z.conj()),
            (Reality::Conj, Pt::Inf) => Pt::Inf,
            (Reality::Antipodal, Pt::Fin(z)) if z.norm() > 1e-300 => Pt::Fin(-re(1.0) / z.conj()),
            (Reality::Antipodal, _) => Pt::Inf,
            (Reality::Free, _) => unreachable!(),
        };
        cfg.insert(g, image);
    }
}

/// Central-difference Jacobian of `f` at `x`.
pub fn jacobian(f: &dyn Fn(&[f64]) -> Vec<f64>, x: &[f64], h: f64) -> DMatrix<f64> {
    let m = f(x).len();
    let mut jac = DMatrix::zeros(m, x.len());
    let mut xp = x.to_vec();
    for j in 0..x.len() {
        xp[j] = x[j] + h;
        let fp = f(&xp);
        xp[j] = x[j] - h;
        let fm = f(&xp);
        xp[j] = x[j];
        for i in 0..m {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    jac
}

fn det_sign(jac: &DMatrix<f64>) -> Result<bool, NumericError> {
    if jac.nrows() != jac.ncols() {
        return Err(NumericError::Unsupported(format!("{}x{} Jacobian", jac.nrows(), jac.ncols())));
    }
    if jac.nrows() == 0 {
        return Ok(false);
    }
    let d = jac.determinant();
    if !d.is_finite() || d.abs() < DET_THRESHOLD {
        return Err(NumericError::IllConditioned(d));
    }
    Ok(d < 0.0)
}

/// Partner label on a component with the standard real structure.
fn conj_partner(iota: &TreeInvolution) -> impl Fn(Flag) -> Option<Flag> + '_ {
    move |f| {
        let g = iota.flag(f);
        (g != f).then_some(g)
    }
}

/// The chart of one real component of a boundary stratum, following the
/// pinning rules used for boundary orientation forms.
pub fn vertex_chart(tree: &Tree, o: &OPlanar, v: Vertex) -> Result<Chart, NumericError> {
    let n = tree.n();
    let VertexData::NonEmpty { plus, order } = o.data(v) else {
        return Err(NumericError::Unsupported("empty real part".into()));
    };
    let max_plus = |plus: &[Flag]| plus.iter().copied().max();
    let without = |xs: &[Flag], drop: &[Flag]| -> Vec<Flag> {
        xs.iter().copied().filter(|f| !drop.contains(f)).collect()
    };
    if order.contains(&n) {
        // carries tail n: read the real order after n
        let after: Vec<Flag> = order[1..].to_vec();
        if after.len() >= 2 {
            let m = after.len();
            return Ok(Chart::RealPins {
                zero: after[0],
                one: after[m - 1],
                inf: n,
                reals: after[1..m - 1].to_vec(),
                complex: plus.clone(),
                segment: (0.0, 1.0),
            });
        }
        let up = max_plus(plus).ok_or_else(|| NumericError::Unsupported("no upper point".into()))?;
        return Ok(Chart::BoundaryInterior {
            pin: n,
            pin_at_zero: false,
            up,
            reals: after,
            complex: without(plus, &[up]),
        });
    }
    // the other component: read after its edge flag
    let edge = tree
        .flags_at(v)
        .into_iter()
        .find(|f| !tree.is_tail(*f))
        .ok_or_else(|| NumericError::Unsupported("no edge".into()))?;
    if order.is_empty() || !order.contains(&edge) {
        // both components real but the edge flag is not a real point: l = 0
        return Err(NumericError::Unsupported("edge flag not real".into()));
    }
    let p = order.iter().position(|f| *f == edge).unwrap();
    let after: Vec<Flag> = order[p + 1..].iter().chain(&order[..p]).copied().collect();
    if after.len() >= 2 {
        let m = after.len();
        return Ok(Chart::RealPins {
            zero: edge,
            one: after[0],
            inf: after[m - 1],
            reals: after[1..m - 1].to_vec(),
            complex: plus.clone(),
            segment: (1.0, f64::INFINITY),
        });
    }
    let up = max_plus(plus).ok_or_else(|| NumericError::Unsupported("no upper point".into()))?;
    Ok(Chart::BoundaryInterior { pin: edge, pin_at_zero: true, up, reals: after, complex: without(plus, &[up]) })
}

/// Chart of a component with no fixed labels next to a real node: node at
/// zero, largest upper label at `i`.
fn node_chart(tree: &Tree, o: &OPlanar, v: Vertex) -> Result<Chart, NumericError> {
    let plus = o.plus_at(v).to_vec();
    let edge = tree.flags_at(v).into_iter().find(|f| !tree.is_tail(*f)).unwrap();
    let up = *plus.iter().max().ok_or_else(|| NumericError::Unsupported("no upper point".into()))?;
    let complex = plus.into_iter().filter(|f| *f != up).collect();
    Ok(Chart::BoundaryInterior { pin: edge, pin_at_zero: true, up, reals: vec![], complex })
}

/// Normal position of a one-vertex structure.
pub fn top_chart(sigma: &LabelInvolution, o: &OPlanar) -> Result<Chart, NumericError> {
    let (k, l, n) = (sigma.k, sigma.l, sigma.n());
    match o.data(0) {
        VertexData::Empty => {
            if k < 2 {
                return Err(NumericError::Unsupported("k < 2".into()));
            }
            Ok(Chart::Antipodal { top: k, ray: k - 1, complex: (1..k - 1).collect() })
        }
        VertexData::NonEmpty { plus, order } => {
            if l >= 3 {
                Ok(Chart::RealPins {
                    zero: order[1],
                    one: order[l as usize - 1],
                    inf: n,
                    reals: order[2..l as usize - 1].to_vec(),
                    complex: plus.clone(),
                    segment: (0.0, 1.0),
                })
            } else if l >= 1 {
                let up = if plus.contains(&k) { k } else { 2 * k };
                Ok(Chart::BoundaryInterior {
                    pin: n,
                    pin_at_zero: false,
                    up,
                    reals: order[1..].to_vec(),
                    complex: plus.iter().copied().filter(|f| *f != k && *f != 2 * k).collect(),
                })
            } else {
                if k < 2 {
                    return Err(NumericError::Unsupported("k < 2".into()));
                }
                let up = if plus.contains(&k) { k } else { 2 * k };
                let ray = if plus.contains(&(k - 1)) { k - 1 } else { 2 * k - 1 };
                let complex =
                    plus.iter().copied().filter(|f| ![k - 1, k, 2 * k - 1, 2 * k].contains(f)).collect();
                Ok(Chart::Circle { up, ray, complex })
            }
        }
    }
}

/// Sign of the convention form of a one-vertex chart: the empty-real-part
/// form carries an extra minus sign.
fn top_form_sign(o: &OPlanar) -> bool {
    o.data(0) == &VertexData::Empty
}

/// A normal-position configuration of a one-vertex structure.
pub fn sample_normal_config(sigma: &LabelInvolution, o: &OPlanar, seed: u64) -> Result<Config, NumericError> {
    let chart = top_chart(sigma, o)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords = chart.sample(&mut rng);
    let partner = |f: Flag| {
        let g = sigma.apply(f);
        (g != f).then_some(g)
    };
    Ok(chart.place(&coords, &partner))
}

/// Type of a configuration with the standard real structure and real
/// points: plus labels (upper half plane) and the real labels read in
/// increasing order after infinity or the largest label.
pub fn observed_type(cfg: &Config, n: u32) -> (Vec<Flag>, Vec<Flag>) {
    let mut plus = Vec::new();
    let mut reals: Vec<(f64, Flag)> = Vec::new();
    let mut at_inf = None;
    for (f, p) in cfg {
        match p {
            Pt::Inf => at_inf = Some(*f),
            Pt::Fin(z) if z.im.abs() < 1e-9 * (1.0 + z.norm()) => reals.push((z.re, *f)),
            Pt::Fin(z) if z.im > 0.0 => plus.push(*f),
            Pt::Fin(_) => {}
        }
    }
    reals.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut order: Vec<Flag> = at_inf.into_iter().chain(reals.into_iter().map(|r| r.1)).collect();
    order = crate::planar::canonical_rotation(&order, n);
    plus.sort_unstable();
    (plus, order)
}

/// Which boundary chamber a smoothing enters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// The unique side when both components are real.
    Real,
    /// Conjugate components, smoothed into the empty real part.
    Empty,
    /// Conjugate components, smoothed into a nonempty real part.
    NonEmpty,
}

/// Smoothing of a two-vertex decorated boundary stratum: the bulk map from
/// `(t, coordinates of the far component, coordinates of the near one)`
/// to the labelled configuration on the smooth curve.
pub struct Family {
    pub sigma: LabelInvolution,
    pub side: Side,
    near: Chart,
    far: Chart,
    /// Sign of the boundary form relative to `(far, near)` coordinates.
    boundary_flip: bool,
    near_vertex: Vertex,
    far_vertex: Vertex,
    tree: Tree,
    iota: TreeInvolution,
    plus_near: bool,
}

impl Family {
    pub fn new(tree: &Tree, iota: &TreeInvolution, o: &OPlanar, side: Side) -> Result<Family, NumericError> {
        if tree.num_vertices() != 2 {
            return Err(NumericError::Unsupported("two components expected".into()));
        }
        let sigma = sigma_of(tree, iota);
        let n = tree.n();
        let near_vertex = tree.tail_vertex(n);
        let far_vertex = 1 - near_vertex;
        let both_real = iota.real_vertices.len() == 2;
        if both_real != (side == Side::Real) {
            return Err(NumericError::Unsupported("side does not match the components".into()));
        }
        let (near, far, boundary_flip, plus_near) = if both_real {
            if sigma.l > 0 {
                (
                    vertex_chart(tree, o, near_vertex)?,
                    vertex_chart(tree, o, far_vertex)?,
                    false,
                    true,
                )
            } else {
                (node_chart(tree, o, near_vertex)?, node_chart(tree, o, far_vertex)?, false, true)
            }
        } else {
            let p = o.plus_edge_flag.ok_or_else(|| NumericError::Unsupported("no edge sign".into()))?;
            let plus_near = tree.vertex_of(p) == near_vertex;
            let edge = tree.flags_at(near_vertex).into_iter().find(|f| !tree.is_tail(*f)).unwrap();
            let one = tree.tails_at(near_vertex).into_iter().find(|f| *f != n).unwrap();
            let complex: Vec<Flag> =
                tree.tails_at(near_vertex).into_iter().filter(|f| *f != n && *f != one).collect();
            // the far component's coordinates are the conjugates of these
            let flip = !plus_near && complex.len() % 2 == 1;
            let chart = Chart::Complex3 { zero: edge, one, inf: n, complex };
            (chart.clone(), Chart::Complex3 { zero: 0, one: 0, inf: 0, complex: vec![] }, flip, plus_near)
        };
        Ok(Family {
            sigma,
            side,
            near,
            far,
            boundary_flip,
            near_vertex,
            far_vertex,
            tree: tree.clone(),
            iota: iota.clone(),
            plus_near,
        })
    }

    pub fn boundary_dim(&self) -> usize {
        self.near.dim() + self.far.dim()
    }

    /// Configuration on the smooth curve at parameter `t > 0`; `coords` is
    /// the far component's coordinates followed by the near one's.
    pub fn smooth(&self, t: f64, coords: &[f64]) -> Result<Config, NumericError> {
        if t <= 0.0 {
            return Err(NumericError::DegenerateT);
        }
        let (yf, yn) = coords.split_at(self.far.dim());
        let partner = conj_partner(&self.iota);
        let near = self.near.place(yn, &partner);
        let n = self.tree.n();
        let mut out = Config::new();
        match self.side {
            Side::Real => {
                let far = self.far.place(yf, &partner);
                let fe = self.tree.flags_at(self.near_vertex).into_iter().find(|f| !self.tree.is_tail(*f)).unwrap();
                let xfe = near[&fe].z();
                for (f, p) in &near {
                    if self.tree.is_tail(*f) {
                        out.insert(*f, *p);
                    }
                }
                for (f, p) in &far {
                    if !self.tree.is_tail(*f) {
                        continue;
                    }
                    let z = match p {
                        Pt::Inf => Pt::Fin(xfe),
                        Pt::Fin(w) => Pt::Fin(xfe - re(t) / w),
                    };
                    out.insert(*f, z);
                }
            }
            Side::Empty | Side::NonEmpty => {
                // z w = c with c = -t (empty) or c = t (nonempty)
                let c = if self.side == Side::Empty { -t } else { t };
                for (f, p) in &near {
                    if !self.tree.is_tail(*f) {
                        continue;
                    }
                    out.insert(*f, *p);
                    let g = self.iota.flag(*f);
                    let image = match p {
                        Pt::Inf => Pt::Fin(re(0.0)),
                        Pt::Fin(z) => Pt::Fin(re(c) / z.conj()),
                    };
                    out.insert(g, image);
                }
                // move to a frame with the standard or antipodal structure
                let s = t.sqrt();
                let frame = if self.side == Side::Empty {
                    Mobius::new(re(1.0 / s), re(0.0), re(0.0), re(1.0))
                } else {
                    // the circle |z| = s maps to the real line; the side
                    // holding the positive component goes up
                    let i = C::new(0.0, 1.0);
                    let m = Mobius::new(i, i * s, re(1.0), re(-s));
                    if self.plus_near {
                        m
                    } else {
                        Mobius::new(-re(1.0), re(0.0), re(0.0), re(1.0)).after(&m)
                    }
                };
                for p in out.values_mut() {
                    *p = frame.apply(*p);
                }
            }
        }
        let _ = n;
        Ok(out)
    }

    /// The top structure the smoothing enters, and its chart.
    pub fn top(&self, o: &OPlanar) -> Result<(OPlanar, Chart), NumericError> {
        let results = contract_oplanar(&self.tree, &self.iota, o, &[self.tree.edges()[0].0])
            .map_err(|e| NumericError::Unsupported(e.to_string()))?;
        let want_empty = self.side == Side::Empty;
        let d = results
            .into_iter()
            .find(|d| (d.o.data(0) == &VertexData::Empty) == want_empty)
            .ok_or_else(|| NumericError::Unsupported("no matching contraction".into()))?;
        let chart = top_chart(&self.sigma, &d.o)?;
        Ok((d.o, chart))
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let mut y = self.far.sample(rng);
        y.extend(self.near.sample(rng));
        y
    }
}

/// Boundary parity `b` with `-dt ^ boundary form = (-1)^b * top form`,
/// where the top form is the normal-position form of the chamber entered
/// (for the empty real part including its sign), evaluated at one sample.
pub fn boundary_parity_sample(
    tree: &Tree,
    iota: &TreeInvolution,
    o: &OPlanar,
    side: Side,
    seed: u64,
    t: f64,
) -> Result<bool, NumericError> {
    let fam = Family::new(tree, iota, o, side)?;
    let (o_top, chart) = fam.top(o)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y0 = fam.sample(&mut rng);
    // the smoothed configuration must realise the contracted structure
    if side != Side::Empty {
        let cfg = fam.smooth(t, &y0)?;
        let (plus, order) = observed_type(&cfg, tree.n());
        let VertexData::NonEmpty { plus: ep, order: eo } = o_top.data(0) else { unreachable!() };
        if (&plus, &order) != (ep, eo) {
            return Err(NumericError::WrongChamber {
                found: format!("{plus:?} {order:?}"),
                expected: format!("{ep:?} {eo:?}"),
            });
        }
    }
    let f = |x: &[f64]| -> Vec<f64> {
        let cfg = fam.smooth(x[0], &x[1..]).expect("positive t");
        chart.read(&cfg)
    };
    let mut x = vec![t];
    x.extend(&y0);
    let jac = jacobian(&f, &x, FD_STEP.min(t / 10.0));
    let negative = det_sign(&jac)?;
    // -dt ^ Omega = -(det J)^-1 omega_chart ; omega_top = (+/-) omega_chart
    Ok(!negative ^ fam.boundary_flip ^ top_form_sign(&o_top))
}

/// Seeds and smoothing parameter for the sign oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sampling {
    pub seeds: u64,
    pub base_seed: u64,
    pub t: f64,
}

impl Default for Sampling {
    fn default() -> Sampling {
        Sampling { seeds: 10, base_seed: 0, t: DEFAULT_T }
    }
}

impl Sampling {
    pub fn with_seeds(seeds: u64) -> Sampling {
        Sampling { seeds, ..Sampling::default() }
    }
}

/// Boundary parity over several seeds; all samples must agree. Ill-conditioned
/// samples are skipped; if every sample at `t` is ill-conditioned the
/// check is repeated at `10 t` (up to `0.1`), the sign being locally
/// constant in `t`.
pub fn numeric_sign_check(
    tree: &Tree,
    iota: &TreeInvolution,
    o: &OPlanar,
    side: Side,
    sampling: &Sampling,
) -> Result<bool, NumericError> {
    let mut s = *sampling;
    loop {
        match sign_check_at(tree, iota, o, side, &s) {
            Err(NumericError::IllConditioned(d)) if s.t * 10.0 > 0.1 => return Err(NumericError::IllConditioned(d)),
            Err(NumericError::IllConditioned(_)) => s.t *= 10.0,
            other => return other,
        }
    }
}

/// Boundary parity over `seeds` well-conditioned samples at exactly this `t`.
pub fn sign_check_at(tree: &Tree, iota: &TreeInvolution, o: &OPlanar, side: Side, sampling: &Sampling) -> Result<bool, NumericError> {
    let Sampling { seeds, base_seed, t } = *sampling;
    let mut first = None;
    let mut good = 0;
    let mut last_det = 0.0;
    for seed in base_seed..base_seed + seeds * 4 {
        match boundary_parity_sample(tree, iota, o, side, seed, t) {
            Ok(s) => {
                match first {
                    None => first = Some(s),
                    Some(f) if f != s => {
                        return Err(NumericError::Unsupported(format!("sign flips across seeds at seed {seed}")))
                    }
                    _ => {}
                }
                good += 1;
                if good >= seeds {
                    break;
                }
            }
            Err(NumericError::IllConditioned(d)) => last_det = d,
            Err(e) => return Err(e),
        }
    }
    first.ok_or(NumericError::IllConditioned(last_det))
}

/// Reversal parity `r` with `Omega(o at v) = (-1)^r Omega(reversed at v)`,
/// computed by transporting a configuration through `z -> -z`.
pub fn reversal_parity_sample(tree: &Tree, iota: &TreeInvolution, o: &OPlanar, v: Vertex, seed: u64) -> Result<bool, NumericError> {
    let sigma = sigma_of(tree, iota);
    let chart_for = |o: &OPlanar| {
        if sigma.l > 0 {
            vertex_chart(tree, o, v)
        } else {
            node_chart(tree, o, v)
        }
    };
    let a = chart_for(o)?;
    let mut r = o.clone();
    r.vertex_data.insert(v, reverse_data(o.data(v), iota, tree.n()));
    let b = chart_for(&r)?;
    let partner = conj_partner(iota);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y0 = a.sample(&mut rng);
    let f = |y: &[f64]| -> Vec<f64> {
        let cfg = a.place(y, &partner);
        let flipped: Config = cfg
            .iter()
            .map(|(f, p)| (*f, match p {
                Pt::Inf => Pt::Inf,
                Pt::Fin(z) => Pt::Fin(-z),
            }))
            .collect();
        b.read(&flipped)
    };
    let jac = jacobian(&f, &y0, FD_STEP);
    det_sign(&jac)
}

pub fn reversal_numeric(tree: &Tree, iota: &TreeInvolution, o: &OPlanar, v: Vertex, sampling: &Sampling) -> Result<bool, NumericError> {
    let mut first = None;
    for seed in sampling.base_seed..sampling.base_seed + sampling.seeds {
        let s = reversal_parity_sample(tree, iota, o, v, seed)?;
        match first {
            None => first = Some(s),
            Some(f) if f != s => return Err(NumericError::Unsupported("reversal_parity flips across seeds".into())),
            _ => {}
        }
    }
    first.ok_or(NumericError::IllConditioned(0.0))
}

/// Largest residual of the curve equation and of conjugation symmetry for
/// the smoothing of a stratum with two real components.
pub fn family_residuals(
    tree: &Tree,
    iota: &TreeInvolution,
    o: &OPlanar,
    seed: u64,
    t: f64,
) -> Result<(f64, f64), NumericError> {
    let fam = Family::new(tree, iota, o, Side::Real)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y = fam.sample(&mut rng);
    let (yf, yn) = y.split_at(fam.far.dim());
    let partner = conj_partner(iota);
    let near = fam.near.place(yn, &partner);
    let far = fam.far.place(yf, &partner);
    let fe = tree.flags_at(fam.near_vertex).into_iter().find(|f| !tree.is_tail(*f)).unwrap();
    let xfe = near[&fe].z();
    let smooth = fam.smooth(t, &y)?;
    let mut curve: f64 = 0.0;
    for (f, p) in &far {
        if let (Pt::Fin(w), true) = (p, tree.is_tail(*f)) {
            let z = smooth[f].z();
            curve = curve.max(((z - xfe) * w + re(t)).norm());
        }
    }
    let mut conj: f64 = 0.0;
    for (f, p) in &smooth {
        let g = iota.flag(*f);
        if let (Pt::Fin(z), Pt::Fin(w)) = (p, smooth[&g]) {
            conj = conj.max((z.conj() - w).norm());
        }
    }
    let _ = fam.far_vertex;
    Ok((curve, conj))
}
