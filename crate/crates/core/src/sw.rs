//! The Poincaré dual of the first Stiefel-Whitney class as a set of walls.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::Serialize;

use crate::orientation::{on_w1_cycle, WallReport};
use crate::real::LabelInvolution;
use crate::strata::StratifiedComplex;
use crate::tree::{describe, Tree};

#[derive(Debug, Clone, Serialize)]
pub struct W1Cycle {
    /// Wall strata (all u-planar structures on the selected trees).
    pub strata: Vec<usize>,
    /// The underlying trees, in canonical form.
    #[serde(skip)]
    pub trees: Vec<Tree>,
    pub tree_names: Vec<String>,
}

impl W1Cycle {
    fn from_strata(cx: &StratifiedComplex, strata: Vec<usize>) -> W1Cycle {
        let trees: BTreeSet<Tree> = strata.iter().map(|id| cx.strata[*id].tree.clone()).collect();
        let trees: Vec<Tree> = trees.into_iter().collect();
        let tree_names = trees.iter().map(describe).collect();
        W1Cycle { strata, trees, tree_names }
    }
    pub fn is_empty(&self) -> bool {
        self.strata.is_empty()
    }
}

/// The cycle selected by the closed rule: for `n = 4` or `l = 0` it is
/// empty; otherwise every wall with two real vertices whose mismatch
/// parity vanishes.
pub fn w1_cycle(cx: &StratifiedComplex) -> W1Cycle {
    let sigma = cx.sigma;
    if sigma.n() == 4 || sigma.l == 0 {
        return W1Cycle::from_strata(cx, vec![]);
    }
    let top = sigma.n() as usize - 3;
    let strata = cx
        .strata
        .iter()
        .filter(|s| s.dim + 1 == top && on_w1_cycle(&s.tree, &s.iota, &s.u.0))
        .map(|s| s.id)
        .collect();
    W1Cycle::from_strata(cx, strata)
}

/// The cycle read off measured mismatch parities.
pub fn w1_cycle_from_reports(cx: &StratifiedComplex, reports: &BTreeMap<usize, WallReport>) -> W1Cycle {
    let strata = reports.values().filter(|r| !r.mismatch()).map(|r| r.stratum).collect();
    W1Cycle::from_strata(cx, strata)
}

pub fn is_orientable(sigma: &LabelInvolution) -> bool {
    sigma.n() == 4 || sigma.l == 0
}

/// Orientability from measured wall parities: chamber orientations must
/// flip exactly across walls whose induced orientations agree.
pub fn is_orientable_from_reports(reports: &BTreeMap<usize, WallReport>) -> bool {
    let mut adj: BTreeMap<usize, Vec<(usize, bool)>> = BTreeMap::new();
    for r in reports.values() {
        let (a, b) = (r.sides[0].chamber, r.sides[1].chamber);
        let flip = !r.mismatch();
        adj.entry(a).or_default().push((b, flip));
        adj.entry(b).or_default().push((a, flip));
    }
    let mut colour: BTreeMap<usize, bool> = BTreeMap::new();
    for start in adj.keys().copied().collect::<Vec<_>>() {
        if colour.contains_key(&start) {
            continue;
        }
        colour.insert(start, false);
        let mut queue = VecDeque::from([start]);
        while let Some(c) = queue.pop_front() {
            let here = colour[&c];
            for (d, flip) in &adj[&c] {
                let want = here ^ flip;
                match colour.get(d) {
                    Some(x) if *x != want => return false,
                    Some(_) => {}
                    None => {
                        colour.insert(*d, want);
                        queue.push_back(*d);
                    }
                }
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orientation::analyse_all;
    use crate::real::sigma_normal;
    use crate::strata::build_poset;
    use crate::tree::mask_of;

    #[test]
    fn identity_five_points() {
        let s = sigma_normal(0, 5).unwrap();
        let cx = build_poset(&s);
        let w = w1_cycle(&cx);
        assert_eq!(w.trees.len(), 3);
        for t in &w.trees {
            let v = (0..2).find(|v| t.valency(*v) == 4).unwrap();
            let anchors = t.tails_at(v).iter().filter(|x| [1, 4, 5].contains(*x)).count();
            assert_eq!(anchors, 1);
        }
        let splits: BTreeSet<_> = w.trees.iter().flat_map(|t| t.splits()).collect();
        for block in [&[1u32, 2, 3][..], &[2, 3, 4], &[1, 4]] {
            let m = mask_of(block);
            let c = crate::tree::full_mask(5) & !m;
            assert!(splits.contains(&m) || splits.contains(&c));
        }
        assert_eq!(w.strata.len(), 9);
    }

    #[test]
    fn empty_cases() {
        for (k, l) in [(0, 4), (1, 2), (2, 0), (3, 0)] {
            let s = sigma_normal(k, l).unwrap();
            assert!(w1_cycle(&build_poset(&s)).is_empty());
            assert!(is_orientable(&s));
        }
        assert!(!is_orientable(&sigma_normal(0, 5).unwrap()));
    }

    #[test]
    fn measured_orientability() {
        for (k, l, want) in [(0, 4, true), (1, 2, true), (2, 0, true), (0, 5, false), (1, 3, false), (2, 1, false)] {
            let s = sigma_normal(k, l).unwrap();
            let cx = build_poset(&s);
            let reps = analyse_all(&cx, Some(&crate::numeric::Sampling::with_seeds(2))).unwrap();
            assert_eq!(is_orientable_from_reports(&reps), want, "({k},{l})");
        }
    }
}
