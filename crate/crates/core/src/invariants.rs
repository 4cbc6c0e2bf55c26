//! Euler characteristics from compactly supported Euler characteristics of
//! open strata, and surface classification for five labels.
//!
//! An open stratum is a product of per-vertex configuration spaces: one
//! factor per real vertex and one per pair of conjugate vertices. Ordered
//! configurations of `j` points in a space with `chi_c = c` minus `d`
//! fixed points contribute `prod_{i<j} (c - d - i)`.

use serde::Serialize;
use thiserror::Error;

use crate::planar::VertexData;
use crate::real::LabelInvolution;
use crate::strata::{Stratum, StratifiedComplex};
use crate::sw::is_orientable;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InvariantsError {
    #[error("stratum {0} has no product parameterization")]
    UnsupportedShape(usize),
    #[error("not a closed surface: dimension {0}")]
    NotASurface(usize),
}

/// `chi_c` of ordered `j`-point configurations in a space of `chi_c = c`.
fn configurations(c: i64, j: i64) -> i64 {
    (0..j).map(|i| c - i).product()
}

/// Factor of one real vertex with `pairs` conjugate pairs of flags and
/// `reals` real flags.
fn real_vertex_factor(pairs: i64, reals: i64, empty: bool) -> i64 {
    let sign = |m: i64| if m % 2 == 0 { 1 } else { -1 };
    if empty {
        // one point at i, one on a diameter, the rest avoid 4 + 2i points
        // of the sphere together with their antipodes
        let rest: i64 = (0..pairs - 2).map(|i| -2 - 2 * i).product();
        -rest
    } else if reals >= 3 {
        configurations(1, pairs) * sign(reals - 3)
    } else if reals >= 1 {
        configurations(0, pairs - 1) * sign(reals - 1)
    } else {
        -configurations(-1, pairs - 2)
    }
}

/// `chi_c` of `M_{0,m}` over the complex numbers.
fn complex_factor(m: i64) -> i64 {
    let f: i64 = (1..=m - 3).product();
    if (m - 3) % 2 == 0 {
        f
    } else {
        -f
    }
}

pub fn chi_c_stratum(st: &Stratum) -> Result<i64, InvariantsError> {
    let (tree, iota) = (&st.tree, &st.iota);
    let mut chi = 1i64;
    for v in 0..tree.num_vertices() {
        if iota.is_real(v) {
            let empty = st.u.0.data(v) == &VertexData::Empty;
            let reals = iota.real_flags(tree, v).len() as i64;
            let pairs = (tree.valency(v) as i64 - reals) / 2;
            if (empty && (reals != 0 || pairs < 2)) || (!empty && reals == 0 && pairs < 2) {
                return Err(InvariantsError::UnsupportedShape(st.id));
            }
            chi *= real_vertex_factor(pairs, reals, empty);
        } else if v < iota.vertex(v) {
            chi *= complex_factor(tree.valency(v) as i64);
        }
    }
    Ok(chi)
}

pub fn euler_char(cx: &StratifiedComplex) -> Result<i64, InvariantsError> {
    cx.strata.iter().map(chi_c_stratum).sum()
}

/// Alternating count of strata by dimension; equals the Euler
/// characteristic whenever every stratum is an open cell.
pub fn cell_count_chi(cx: &StratifiedComplex) -> i64 {
    cx.strata.iter().map(|s| if s.dim % 2 == 0 { 1 } else { -1 }).sum()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SurfaceReport {
    pub orientable: bool,
    pub chi: i64,
    /// Handles when orientable.
    pub genus: Option<i64>,
    /// Cross-caps when not orientable.
    pub crosscaps: Option<i64>,
}

impl SurfaceReport {
    pub fn new(orientable: bool, chi: i64) -> SurfaceReport {
        if orientable {
            SurfaceReport { orientable, chi, genus: Some((2 - chi) / 2), crosscaps: None }
        } else {
            SurfaceReport { orientable, chi, genus: None, crosscaps: Some(2 - chi) }
        }
    }
}

/// Classification of the base surface for five labels.
pub fn classify_surface(sigma: &LabelInvolution, cx: &StratifiedComplex) -> Result<SurfaceReport, InvariantsError> {
    if sigma.n() != 5 {
        return Err(InvariantsError::NotASurface(sigma.n() as usize - 3));
    }
    Ok(SurfaceReport::new(is_orientable(sigma), euler_char(cx)?))
}
