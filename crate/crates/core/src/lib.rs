//! Combinatorics of real moduli spaces of pointed rational curves: stable
//! trees, real structures, planar decorations, the stratification poset,
//! orientation signs, the first Stiefel-Whitney cycle and the orientation
//! double cover.

pub mod cli;
pub mod cover;
pub mod invariants;
pub mod numeric;
pub mod orientation;
pub mod planar;
pub mod real;
pub mod strata;
pub mod sw;
pub mod tree;
