//! Real structures: the normalized label involution of type (2k, l) and the
//! tree involution it induces on invariant trees.
//!
//! Labels `1..=k` are swapped with `k+1..=2k`; labels `2k+1..=n` are fixed.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tree::{enumerate_stable_trees, Flag, Tree, TailMask, Vertex};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RealError {
    #[error("need 2k + l >= 3 labels, got k = {k}, l = {l}")]
    TooFewLabels { k: u32, l: u32 },
}

/// Normalized involution on `1..=n`, `n = 2k + l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabelInvolution {
    pub k: u32,
    pub l: u32,
}

impl LabelInvolution {
    pub fn n(&self) -> u32 {
        2 * self.k + self.l
    }
    pub fn apply(&self, i: u32) -> u32 {
        if i <= self.k {
            i + self.k
        } else if i <= 2 * self.k {
            i - self.k
        } else {
            i
        }
    }
    pub fn is_fixed(&self, i: u32) -> bool {
        i > 2 * self.k
    }
    pub fn apply_mask(&self, m: TailMask) -> TailMask {
        (1..=self.n()).filter(|t| m & (1 << t) != 0).fold(0, |acc, t| acc | (1 << self.apply(t)))
    }
}

pub fn sigma_normal(k: u32, l: u32) -> Result<LabelInvolution, RealError> {
    if 2 * k + l < 3 {
        return Err(RealError::TooFewLabels { k, l });
    }
    Ok(LabelInvolution { k, l })
}

/// The automorphism `iota` of an invariant tree extending the label
/// involution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeInvolution {
    pub flags: BTreeMap<Flag, Flag>,
    pub vertices: Vec<Vertex>,
    pub real_vertices: Vec<Vertex>,
    /// Present iff no vertex is fixed; stored as `(f, j(f))`, `f < j(f)`.
    pub special_edge: Option<(Flag, Flag)>,
}

impl TreeInvolution {
    pub fn flag(&self, f: Flag) -> Flag {
        self.flags[&f]
    }
    pub fn vertex(&self, v: Vertex) -> Vertex {
        self.vertices[v as usize]
    }
    pub fn is_real(&self, v: Vertex) -> bool {
        self.vertices[v as usize] == v
    }
    /// Fixed flags at a real vertex (real marked points and real nodes).
    pub fn real_flags(&self, tree: &Tree, v: Vertex) -> Vec<Flag> {
        tree.flags_at(v).into_iter().filter(|f| self.flag(*f) == *f).collect()
    }
    /// Flags at `v` moved by the involution.
    pub fn moved_flags(&self, tree: &Tree, v: Vertex) -> Vec<Flag> {
        tree.flags_at(v).into_iter().filter(|f| self.flag(*f) != *f).collect()
    }
    /// Edges mapped to themselves, as `(f, j(f))` with `f < j(f)`.
    pub fn invariant_edges(&self, tree: &Tree) -> Vec<(Flag, Flag)> {
        tree.edges()
            .into_iter()
            .filter(|(a, b)| {
                let ia = self.flag(*a);
                ia == *a || ia == *b
            })
            .collect()
    }
    /// Invariant edges between two real vertices.
    pub fn real_edges(&self, tree: &Tree) -> Vec<(Flag, Flag)> {
        tree.edges().into_iter().filter(|(a, _)| self.flag(*a) == *a).collect()
    }
    /// Pairs of distinct edges swapped by the involution, each edge given by
    /// its smaller flag.
    pub fn conjugate_edge_pairs(&self, tree: &Tree) -> Vec<(Flag, Flag)> {
        let mut out = Vec::new();
        for (a, b) in tree.edges() {
            let ia = self.flag(a);
            if ia == a || ia == b {
                continue;
            }
            let other = ia.min(tree.partner(ia));
            if a < other {
                out.push((a, other));
            }
        }
        out
    }
}

pub fn conjugate_tree(tree: &Tree, sigma: &LabelInvolution) -> Tree {
    tree.relabel_tails(|t| sigma.apply(t))
}

/// The involution extending `sigma`, if the tree is invariant. A flag is
/// determined by its far mask, so `iota(f)` is the flag whose far mask is
/// the image of `f`'s.
pub fn sigma_invariance(tree: &Tree, sigma: &LabelInvolution) -> Option<TreeInvolution> {
    if tree.n() != sigma.n() {
        return None;
    }
    let masks = tree.far_masks();
    let by_mask: BTreeMap<TailMask, Flag> =
        tree.flags().iter().zip(&masks).map(|(f, m)| (*m, *f)).collect();
    let mut flags = BTreeMap::new();
    for (f, m) in tree.flags().iter().zip(&masks) {
        flags.insert(*f, *by_mask.get(&sigma.apply_mask(*m))?);
    }
    let mut vertices = vec![u32::MAX; tree.num_vertices() as usize];
    for (f, g) in &flags {
        let v = tree.vertex_of(*f) as usize;
        let w = tree.vertex_of(*g);
        if vertices[v] == u32::MAX {
            vertices[v] = w;
        } else if vertices[v] != w {
            return None;
        }
    }
    let real_vertices: Vec<Vertex> =
        (0..tree.num_vertices()).filter(|v| vertices[*v as usize] == *v).collect();
    let special_edge = if real_vertices.is_empty() {
        tree.edges().into_iter().find(|(a, b)| flags[a] == *b)
    } else {
        None
    };
    Some(TreeInvolution { flags, vertices, real_vertices, special_edge })
}

pub fn enumerate_sigma_invariant_trees(sigma: &LabelInvolution) -> Vec<(Tree, TreeInvolution)> {
    enumerate_stable_trees(sigma.n())
        .into_iter()
        .filter_map(|t| sigma_invariance(&t, sigma).map(|i| (t, i)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_forms() {
        let s = sigma_normal(0, 4).unwrap();
        assert!((1..=4).all(|i| s.apply(i) == i));
        let s = sigma_normal(1, 2).unwrap();
        assert_eq!((1..=4).map(|i| s.apply(i)).collect::<Vec<_>>(), vec![2, 1, 3, 4]);
        let s = sigma_normal(2, 0).unwrap();
        assert_eq!((1..=4).map(|i| s.apply(i)).collect::<Vec<_>>(), vec![3, 4, 1, 2]);
        assert!(sigma_normal(1, 0).is_err());
    }

    #[test]
    fn conjugate_tree_examples() {
        let id = sigma_normal(0, 4).unwrap();
        let a = Tree::from_blocks(4, &[&[1, 2]]).unwrap();
        assert_eq!(conjugate_tree(&a, &id), a);
        let s = sigma_normal(1, 2).unwrap();
        assert_eq!(conjugate_tree(&a, &s).canonical_form(), a.canonical_form());
        let b = Tree::from_blocks(4, &[&[1, 3]]).unwrap();
        assert_ne!(conjugate_tree(&b, &s).canonical_form(), b.canonical_form());
    }

    #[test]
    fn invariance_examples() {
        let id = sigma_normal(0, 5).unwrap();
        for t in enumerate_stable_trees(5) {
            let i = sigma_invariance(&t, &id).unwrap();
            assert!(i.flags.iter().all(|(a, b)| a == b));
            assert_eq!(i.real_vertices.len() as u32, t.num_vertices());
        }
        let s = sigma_normal(2, 0).unwrap();
        let a = Tree::from_blocks(4, &[&[1, 2]]).unwrap();
        let i = sigma_invariance(&a, &s).unwrap();
        assert!(i.real_vertices.is_empty());
        assert_eq!(i.vertices, vec![1, 0]);
        assert!(i.special_edge.is_some());
        let s = sigma_normal(1, 2).unwrap();
        let b = Tree::from_blocks(4, &[&[1, 3]]).unwrap();
        assert!(sigma_invariance(&b, &s).is_none());
    }

    #[test]
    fn invariant_tree_counts() {
        assert_eq!(enumerate_sigma_invariant_trees(&sigma_normal(0, 4).unwrap()).len(), 4);
        assert_eq!(enumerate_sigma_invariant_trees(&sigma_normal(1, 2).unwrap()).len(), 2);
        assert_eq!(enumerate_sigma_invariant_trees(&sigma_normal(2, 0).unwrap()).len(), 4);
    }

    #[test]
    fn involution_properties() {
        for (k, l) in [(0, 6), (1, 4), (2, 2), (3, 0), (1, 5), (2, 3), (3, 1)] {
            let s = sigma_normal(k, l).unwrap();
            for (t, i) in enumerate_sigma_invariant_trees(&s) {
                assert_eq!(conjugate_tree(&t, &s).canonical_form(), t.canonical_form());
                for f in t.flags() {
                    assert_eq!(i.flag(i.flag(*f)), *f);
                    assert_eq!(i.flag(t.partner(*f)), t.partner(i.flag(*f)));
                }
                if l > 0 {
                    assert!(i.is_real(t.tail_vertex(s.n())));
                }
                if i.real_vertices.is_empty() {
                    assert_eq!(l, 0);
                    assert_eq!(i.invariant_edges(&t).len(), 1);
                    let (a, b) = i.special_edge.unwrap();
                    assert_eq!(i.flag(a), b);
                } else {
                    for (a, b) in i.invariant_edges(&t) {
                        assert_eq!(i.flag(a), a);
                        assert!(i.is_real(t.vertex_of(a)) && i.is_real(t.vertex_of(b)));
                    }
                }
            }
        }
    }
}
