//! Stable labeled trees.
//!
//! A tree is a finite set of flags (half-edges) with a boundary map to
//! vertices and an involution `j`. Fixed points of `j` are tails and carry
//! the labels `1..=n`; the other flags pair up into edges. Internal flags
//! always have identifiers above `n`.
//!
//! Every flag `f` has a *far mask*: the set of tails reached by walking
//! through `f` away from its vertex (a tail's mask is itself). In a stable
//! tree far masks are pairwise distinct, so they identify flags across
//! isomorphic trees and make isomorphism a set comparison.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Flag = u32;
pub type Vertex = u32;
/// Bit `t` set for tail `t`.
pub type TailMask = u64;

pub const MAX_TAILS: u32 = 62;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("not a tree: {0}")]
    NotATree(String),
    #[error("unstable vertex {vertex} of valency {valency}")]
    Unstable { vertex: Vertex, valency: usize },
    #[error("bad tail labels: {0}")]
    BadLabels(String),
    #[error("flag {0} is not part of an edge of this tree")]
    UnknownEdge(Flag),
}

/// Raw JSON shape of a tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeJson {
    pub n: u32,
    pub flags: Vec<Flag>,
    pub boundary: BTreeMap<Flag, Vertex>,
    pub j: BTreeMap<Flag, Flag>,
}

/// A validated tree. Flags are kept sorted; vertices are `0..num_vertices`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Tree {
    n: u32,
    flags: Vec<Flag>,
    vertex: Vec<Vertex>,
    partner: Vec<Flag>,
    nv: u32,
}

/// Morphism data between isomorphic trees: `phi_f` maps target flags to
/// source flags, `phi_v` maps source vertices to target vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeMorphism {
    pub phi_f: BTreeMap<Flag, Flag>,
    pub phi_v: Vec<Vertex>,
}

/// Result of contracting edges; surviving flags keep their identifiers.
#[derive(Debug, Clone)]
pub struct Contraction {
    pub tree: Tree,
    /// Old vertex to new vertex.
    pub vertex_map: Vec<Vertex>,
}

/// A tree renumbered into canonical form, with the flag and vertex maps
/// from the original numbering.
#[derive(Debug, Clone)]
pub struct Canonical {
    pub tree: Tree,
    pub flag_map: BTreeMap<Flag, Flag>,
    pub vertex_map: Vec<Vertex>,
}

impl Tree {
    /// Checks raw data and builds a tree. Stability is enforced when
    /// `stable` is set.
    pub fn from_json(raw: &TreeJson, stable: bool) -> Result<Tree, TreeError> {
        let mut flags = raw.flags.clone();
        flags.sort_unstable();
        flags.dedup();
        if flags.len() != raw.flags.len() {
            return Err(TreeError::NotATree("repeated flag identifiers".into()));
        }
        if flags.is_empty() {
            return Err(TreeError::NotATree("no flags".into()));
        }
        let known: BTreeSet<Flag> = flags.iter().copied().collect();
        let mut vertex_ids: BTreeSet<Vertex> = BTreeSet::new();
        for f in &flags {
            let v = raw
                .boundary
                .get(f)
                .ok_or_else(|| TreeError::NotATree(format!("flag {f} has no boundary vertex")))?;
            vertex_ids.insert(*v);
            let g = raw
                .j
                .get(f)
                .ok_or_else(|| TreeError::NotATree(format!("flag {f} has no partner")))?;
            if !known.contains(g) {
                return Err(TreeError::NotATree(format!("partner {g} of {f} is not a flag")));
            }
            if raw.j.get(g) != Some(f) {
                return Err(TreeError::NotATree(format!("j is not an involution at {f}")));
            }
        }
        let dense: BTreeMap<Vertex, Vertex> =
            vertex_ids.iter().enumerate().map(|(i, v)| (*v, i as Vertex)).collect();
        let vertex = flags.iter().map(|f| dense[&raw.boundary[f]]).collect();
        let partner = flags.iter().map(|f| raw.j[f]).collect();
        Tree::from_parts(raw.n, flags, vertex, partner, dense.len() as u32, stable)
    }

    pub fn to_json(&self) -> TreeJson {
        TreeJson {
            n: self.n,
            flags: self.flags.clone(),
            boundary: self.flags.iter().zip(&self.vertex).map(|(f, v)| (*f, *v)).collect(),
            j: self.flags.iter().zip(&self.partner).map(|(f, g)| (*f, *g)).collect(),
        }
    }

    fn from_parts(
        n: u32,
        flags: Vec<Flag>,
        vertex: Vec<Vertex>,
        partner: Vec<Flag>,
        nv: u32,
        stable: bool,
    ) -> Result<Tree, TreeError> {
        if n > MAX_TAILS {
            return Err(TreeError::BadLabels(format!("at most {MAX_TAILS} tails supported")));
        }
        let t = Tree { n, flags, vertex, partner, nv };
        let tails: Vec<Flag> = t.flags.iter().copied().filter(|f| t.partner(*f) == *f).collect();
        if tails != (1..=n).collect::<Vec<_>>() {
            return Err(TreeError::BadLabels(format!("tails {tails:?} are not 1..{n}")));
        }
        if let Some(f) = t.flags.iter().find(|f| **f <= n && t.partner(**f) != **f) {
            return Err(TreeError::BadLabels(format!("flag {f} <= n is internal")));
        }
        let ne = (t.flags.len() - n as usize) / 2;
        if t.nv as usize != ne + 1 {
            return Err(TreeError::NotATree(format!("{} vertices and {} edges", t.nv, ne)));
        }
        let comp = t.components(&[]);
        if comp.iter().any(|c| *c != 0) {
            return Err(TreeError::NotATree("disconnected".into()));
        }
        if stable {
            for v in 0..t.nv {
                let valency = t.valency(v);
                if valency < 3 {
                    return Err(TreeError::Unstable { vertex: v, valency });
                }
            }
        }
        Ok(t)
    }

    /// The tree with a single vertex carrying tails `1..=n`.
    pub fn one_vertex(n: u32) -> Tree {
        let flags: Vec<Flag> = (1..=n).collect();
        Tree { n, vertex: vec![0; n as usize], partner: flags.clone(), flags, nv: 1 }
    }

    /// Builds the tree whose edges realise the given splits. Each mask is a
    /// set of tails on one side of an edge; masks containing `n` are
    /// replaced by their complement.
    pub fn from_splits(n: u32, splits: &[TailMask]) -> Result<Tree, TreeError> {
        let all = full_mask(n);
        let mut masks: Vec<TailMask> = splits
            .iter()
            .map(|m| if m & (1 << n) != 0 { all & !m } else { *m })
            .collect();
        masks.sort_unstable();
        masks.dedup();
        for m in &masks {
            if m & !all != 0 || m.count_ones() < 2 || (all & !m).count_ones() < 2 {
                return Err(TreeError::NotATree(format!("split {m:#b} is not proper")));
            }
        }
        for (i, a) in masks.iter().enumerate() {
            for b in &masks[i + 1..] {
                if a & b != 0 && a & b != *a && a & b != *b {
                    return Err(TreeError::NotATree("incompatible splits".into()));
                }
            }
        }
        // Vertex 0 is the root (carries n); vertex i+1 is the lower end of masks[i].
        let parent_of = |m: TailMask| -> u32 {
            masks
                .iter()
                .enumerate()
                .filter(|(_, p)| **p != m && *p & m == m)
                .min_by_key(|(_, p)| p.count_ones())
                .map(|(i, _)| i as u32 + 1)
                .unwrap_or(0)
        };
        let mut boundary = BTreeMap::new();
        let mut j = BTreeMap::new();
        let mut flags = Vec::new();
        for t in 1..=n {
            let mut home = 0;
            let mut best = u32::MAX;
            for (i, m) in masks.iter().enumerate() {
                if m & (1 << t) != 0 && m.count_ones() < best {
                    best = m.count_ones();
                    home = i as u32 + 1;
                }
            }
            flags.push(t);
            boundary.insert(t, home);
            j.insert(t, t);
        }
        for (i, m) in masks.iter().enumerate() {
            let up = n + 2 * i as u32 + 1;
            let down = up + 1;
            flags.push(up);
            flags.push(down);
            boundary.insert(up, parent_of(*m));
            boundary.insert(down, i as u32 + 1);
            j.insert(up, down);
            j.insert(down, up);
        }
        let raw = TreeJson { n, flags, boundary, j };
        Ok(Tree::from_json(&raw, true)?.canonical().tree)
    }

    /// Convenience: splits given as lists of tail labels.
    pub fn from_blocks(n: u32, blocks: &[&[u32]]) -> Result<Tree, TreeError> {
        let masks: Vec<TailMask> = blocks.iter().map(|b| mask_of(b)).collect();
        Tree::from_splits(n, &masks)
    }

    pub fn n(&self) -> u32 {
        self.n
    }
    pub fn num_vertices(&self) -> u32 {
        self.nv
    }
    pub fn num_edges(&self) -> usize {
        (self.flags.len() - self.n as usize) / 2
    }
    pub fn flags(&self) -> &[Flag] {
        &self.flags
    }
    pub fn has_flag(&self, f: Flag) -> bool {
        self.flags.binary_search(&f).is_ok()
    }
    fn idx(&self, f: Flag) -> usize {
        self.flags.binary_search(&f).unwrap_or_else(|_| panic!("flag {f} not in tree"))
    }
    pub fn vertex_of(&self, f: Flag) -> Vertex {
        self.vertex[self.idx(f)]
    }
    pub fn partner(&self, f: Flag) -> Flag {
        self.partner[self.idx(f)]
    }
    pub fn is_tail(&self, f: Flag) -> bool {
        f <= self.n
    }
    pub fn tail_vertex(&self, label: u32) -> Vertex {
        self.vertex_of(label)
    }
    pub fn flags_at(&self, v: Vertex) -> Vec<Flag> {
        self.flags.iter().zip(&self.vertex).filter(|(_, w)| **w == v).map(|(f, _)| *f).collect()
    }
    pub fn valency(&self, v: Vertex) -> usize {
        self.vertex.iter().filter(|w| **w == v).count()
    }
    pub fn tails_at(&self, v: Vertex) -> Vec<Flag> {
        self.flags_at(v).into_iter().filter(|f| self.is_tail(*f)).collect()
    }
    /// Edges as `(f, j(f))` with `f < j(f)`.
    pub fn edges(&self) -> Vec<(Flag, Flag)> {
        self.flags
            .iter()
            .zip(&self.partner)
            .filter(|(f, g)| f < g)
            .map(|(f, g)| (*f, *g))
            .collect()
    }
    /// The vertex across the edge of an internal flag.
    pub fn neighbour(&self, f: Flag) -> Vertex {
        self.vertex_of(self.partner(f))
    }

    /// Component index of each vertex after deleting the edges through `cut`.
    fn components(&self, cut: &[Flag]) -> Vec<u32> {
        let cut: HashSet<Flag> = cut.iter().flat_map(|f| [*f, self.partner(*f)]).collect();
        let mut comp = vec![u32::MAX; self.nv as usize];
        let mut next = 0;
        for start in 0..self.nv {
            if comp[start as usize] != u32::MAX {
                continue;
            }
            let mut stack = vec![start];
            comp[start as usize] = next;
            while let Some(v) = stack.pop() {
                for (i, f) in self.flags.iter().enumerate() {
                    if self.vertex[i] != v || self.partner[i] == *f || cut.contains(f) {
                        continue;
                    }
                    let w = self.vertex_of(self.partner[i]);
                    if comp[w as usize] == u32::MAX {
                        comp[w as usize] = next;
                        stack.push(w);
                    }
                }
            }
            next += 1;
        }
        comp
    }

    /// Far mask of every flag, in flag order.
    pub fn far_masks(&self) -> Vec<TailMask> {
        let root = self.tail_vertex(self.n);
        let (parent_flag, order) = self.rooted(root);
        let mut below = vec![0 as TailMask; self.nv as usize];
        for v in order.iter().rev() {
            let mut m = 0;
            for f in self.flags_at(*v) {
                if self.is_tail(f) {
                    m |= 1 << f;
                } else if Some(f) != parent_flag[*v as usize] {
                    m |= below[self.neighbour(f) as usize];
                }
            }
            below[*v as usize] = m;
        }
        let all = full_mask(self.n);
        self.flags
            .iter()
            .map(|f| {
                if self.is_tail(*f) {
                    1 << f
                } else if parent_flag[self.vertex_of(*f) as usize] == Some(*f) {
                    all & !below[self.vertex_of(*f) as usize]
                } else {
                    below[self.neighbour(*f) as usize]
                }
            })
            .collect()
    }

    pub fn far_mask(&self, f: Flag) -> TailMask {
        self.far_masks()[self.idx(f)]
    }

    /// Splits of the edges, normalised to the side without `n`.
    pub fn splits(&self) -> BTreeSet<TailMask> {
        let all = full_mask(self.n);
        let masks = self.far_masks();
        self.flags
            .iter()
            .zip(&masks)
            .filter(|(f, _)| !self.is_tail(**f))
            .map(|(_, m)| if m & (1 << self.n) != 0 { all & !m } else { *m })
            .collect()
    }

    /// DFS from `root`: for each vertex the flag pointing to its parent, and
    /// the visiting order. Children are visited by increasing smallest tail.
    fn rooted(&self, root: Vertex) -> (Vec<Option<Flag>>, Vec<Vertex>) {
        let mut parent_flag = vec![None; self.nv as usize];
        let mut seen = vec![false; self.nv as usize];
        let mut order = Vec::with_capacity(self.nv as usize);
        let mut stack = vec![root];
        seen[root as usize] = true;
        while let Some(v) = stack.pop() {
            order.push(v);
            for f in self.flags_at(v) {
                if self.is_tail(f) {
                    continue;
                }
                let g = self.partner(f);
                let w = self.vertex_of(g);
                if !seen[w as usize] {
                    seen[w as usize] = true;
                    parent_flag[w as usize] = Some(g);
                    stack.push(w);
                }
            }
        }
        (parent_flag, order)
    }

    /// Canonical renumbering. Vertices are numbered in preorder from the
    /// vertex of tail `n`, children sorted by smallest tail below them; the
    /// edge above the `i`-th non-root vertex gets flags `n+2i-1` (upper end)
    /// and `n+2i` (lower end).
    pub fn canonical(&self) -> Canonical {
        let masks = self.far_masks();
        let root = self.tail_vertex(self.n);
        let (parent_flag, _) = self.rooted(root);
        let key = |f: Flag| masks[self.idx(f)].trailing_zeros();
        let mut vertex_map = vec![0; self.nv as usize];
        let mut flag_map = BTreeMap::new();
        let mut new_vertex = Vec::new();
        let mut new_partner = Vec::new();
        let mut new_flags = Vec::new();
        let mut counter = 0u32;
        let mut stack: Vec<Vertex> = vec![root];
        while let Some(v) = stack.pop() {
            let nv = counter;
            counter += 1;
            vertex_map[v as usize] = nv;
            if let Some(up) = parent_flag[v as usize] {
                flag_map.insert(up, self.n + 2 * nv);
            }
            let mut children: Vec<Flag> = self
                .flags_at(v)
                .into_iter()
                .filter(|f| !self.is_tail(*f) && Some(*f) != parent_flag[v as usize])
                .collect();
            children.sort_by_key(|f| key(*f));
            for f in children.iter().rev() {
                stack.push(self.neighbour(*f));
            }
            for t in self.tails_at(v) {
                flag_map.insert(t, t);
            }
        }
        for v in 0..self.nv {
            if let Some(up) = parent_flag[v as usize] {
                let lower = flag_map[&up];
                flag_map.insert(self.partner(up), lower - 1);
            }
        }
        for f in &self.flags {
            let nf = flag_map[f];
            new_flags.push(nf);
        }
        let mut order: Vec<usize> = (0..self.flags.len()).collect();
        order.sort_by_key(|i| new_flags[*i]);
        let flags: Vec<Flag> = order.iter().map(|i| new_flags[*i]).collect();
        for i in &order {
            new_vertex.push(vertex_map[self.vertex[*i] as usize]);
            new_partner.push(flag_map[&self.partner[*i]]);
        }
        let tree = Tree { n: self.n, flags, vertex: new_vertex, partner: new_partner, nv: self.nv };
        Canonical { tree, flag_map, vertex_map }
    }

    /// Byte encoding: nested parentheses over the rooted tree with children
    /// ordered by smallest tail. Equal iff isomorphic fixing tails.
    pub fn canonical_form(&self) -> Vec<u8> {
        let root = self.tail_vertex(self.n);
        let (parent_flag, _) = self.rooted(root);
        let masks = self.far_masks();
        let mut out = Vec::new();
        self.encode(root, &parent_flag, &masks, &mut out);
        out
    }

    fn encode(&self, v: Vertex, parent: &[Option<Flag>], masks: &[TailMask], out: &mut Vec<u8>) {
        const OPEN: u8 = 0xFE;
        const CLOSE: u8 = 0xFF;
        out.push(OPEN);
        for t in self.tails_at(v) {
            out.push(t as u8);
        }
        let mut children: Vec<Flag> = self
            .flags_at(v)
            .into_iter()
            .filter(|f| !self.is_tail(*f) && Some(*f) != parent[v as usize])
            .collect();
        children.sort_by_key(|f| masks[self.idx(*f)].trailing_zeros());
        for f in children {
            self.encode(self.neighbour(f), parent, masks, out);
        }
        out.push(CLOSE);
    }

    /// Same abstract tree with tail `t` renamed `relabel(t)`.
    pub fn relabel_tails(&self, relabel: impl Fn(u32) -> u32) -> Tree {
        let map = |f: Flag| if f <= self.n { relabel(f) } else { f };
        let mut entries: Vec<(Flag, Vertex, Flag)> = self
            .flags
            .iter()
            .zip(&self.vertex)
            .zip(&self.partner)
            .map(|((f, v), g)| (map(*f), *v, map(*g)))
            .collect();
        entries.sort_unstable();
        Tree {
            n: self.n,
            flags: entries.iter().map(|e| e.0).collect(),
            vertex: entries.iter().map(|e| e.1).collect(),
            partner: entries.iter().map(|e| e.2).collect(),
            nv: self.nv,
        }
    }

    /// Contracts the edges containing the given flags. Vertices of the
    /// result are numbered by the smallest old vertex they contain.
    pub fn contract_edges(&self, edge_flags: &[Flag]) -> Result<Contraction, TreeError> {
        for f in edge_flags {
            if !self.has_flag(*f) || self.is_tail(*f) {
                return Err(TreeError::UnknownEdge(*f));
            }
        }
        let removed: HashSet<Flag> =
            edge_flags.iter().flat_map(|f| [*f, self.partner(*f)]).collect();
        let keep: Vec<Flag> =
            self.flags.iter().copied().filter(|f| !self.is_tail(*f) && !removed.contains(f)).collect();
        let comp = self.components(&keep);
        // components() numbers by smallest vertex first
        let nv = comp.iter().max().map_or(0, |m| m + 1);
        let mut flags = Vec::new();
        let mut vertex = Vec::new();
        let mut partner = Vec::new();
        for (i, f) in self.flags.iter().enumerate() {
            if removed.contains(f) {
                continue;
            }
            flags.push(*f);
            vertex.push(comp[self.vertex[i] as usize]);
            partner.push(self.partner[i]);
        }
        let tree = Tree { n: self.n, flags, vertex, partner, nv };
        Ok(Contraction { tree, vertex_map: comp })
    }

    /// Contracts every edge except those through `keep`.
    pub fn contract_all_but(&self, keep: &[Flag]) -> Result<Contraction, TreeError> {
        let keep: HashSet<Flag> = keep.iter().flat_map(|f| [*f, self.partner(*f)]).collect();
        let others: Vec<Flag> =
            self.edges().into_iter().map(|e| e.0).filter(|f| !keep.contains(f)).collect();
        self.contract_edges(&others)
    }
}

pub fn full_mask(n: u32) -> TailMask {
    ((1u64 << (n + 1)) - 1) & !1
}

pub fn mask_of(tails: &[u32]) -> TailMask {
    tails.iter().fold(0, |m, t| m | (1 << t))
}

pub fn mask_tails(m: TailMask) -> Vec<u32> {
    (1..64).filter(|t| m & (1 << t) != 0).collect()
}

/// The unique isomorphism `t1 -> t2` sending tail `t` to `tail_map(t)`.
pub fn find_isomorphism(
    t1: &Tree,
    t2: &Tree,
    tail_map: impl Fn(u32) -> u32,
) -> Option<TreeMorphism> {
    if t1.n != t2.n || t1.flags.len() != t2.flags.len() {
        return None;
    }
    let image = |m: TailMask| mask_tails(m).into_iter().fold(0, |acc, t| acc | (1 << tail_map(t)));
    let m1 = t1.far_masks();
    let m2 = t2.far_masks();
    let by_mask: BTreeMap<TailMask, Flag> =
        t2.flags.iter().zip(&m2).map(|(f, m)| (*m, *f)).collect();
    let mut phi_f = BTreeMap::new();
    let mut phi_v = vec![u32::MAX; t1.nv as usize];
    for (i, f) in t1.flags.iter().enumerate() {
        let g = *by_mask.get(&image(m1[i]))?;
        phi_f.insert(g, *f);
        let v = t1.vertex[i] as usize;
        let w = t2.vertex_of(g);
        if phi_v[v] == u32::MAX {
            phi_v[v] = w;
        } else if phi_v[v] != w {
            return None;
        }
    }
    // bijection on flags forces the vertex map to be a bijection as well
    if phi_f.len() != t2.flags.len() {
        return None;
    }
    Some(TreeMorphism { phi_f, phi_v })
}

/// `t1 <= t2`: some set of edges of `t1` contracts to `t2`.
pub fn less_than(t1: &Tree, t2: &Tree) -> bool {
    t1.n == t2.n && t2.splits().is_subset(&t1.splits())
}

/// All stable `n`-trees up to isomorphism fixing tails, in canonical form,
/// sorted by number of edges and then by encoding.
pub fn enumerate_stable_trees(n: u32) -> Vec<Tree> {
    assert!((3..=MAX_TAILS).contains(&n), "n must be in 3..={MAX_TAILS}");
    let mut all = Vec::new();
    let mut level = vec![Tree::one_vertex(n)];
    while !level.is_empty() {
        let mut next: Vec<(Vec<u8>, Tree)> = level
            .par_iter()
            .flat_map_iter(|t| expansions(t).into_iter().map(|e| (e.canonical_form(), e)))
            .collect();
        next.sort_by(|a, b| a.0.cmp(&b.0));
        next.dedup_by(|a, b| a.0 == b.0);
        all.append(&mut level);
        level = next.into_iter().map(|(_, t)| t.canonical().tree).collect();
    }
    all
}

/// Trees obtained by splitting one vertex into two along a new edge.
fn expansions(t: &Tree) -> Vec<Tree> {
    let mut out = Vec::new();
    let next_id = t.flags.last().copied().unwrap_or(0) + 1;
    for v in 0..t.nv {
        let at = t.flags_at(v);
        let m = at.len();
        if m < 4 {
            continue;
        }
        // subsets moving to the new vertex; the first flag always stays
        for bits in 1u64..(1 << (m - 1)) {
            let size = bits.count_ones() as usize;
            if size < 2 || m - size < 2 {
                continue;
            }
            let moved: HashSet<Flag> =
                (0..m - 1).filter(|i| bits & (1 << i) != 0).map(|i| at[i + 1]).collect();
            let mut raw = t.to_json();
            let w = t.nv;
            for f in &moved {
                raw.boundary.insert(*f, w);
            }
            let (a, b) = (next_id, next_id + 1);
            raw.flags.extend([a, b]);
            raw.boundary.insert(a, v);
            raw.boundary.insert(b, w);
            raw.j.insert(a, b);
            raw.j.insert(b, a);
            out.push(Tree::from_json(&raw, true).expect("expansion stays stable"));
        }
    }
    out
}

/// DOT rendering: vertices as nodes, tails as labelled leaves.
pub fn to_dot(t: &Tree) -> String {
    let mut s = String::from("graph tree {\n");
    for v in 0..t.nv {
        s.push_str(&format!("  v{v} [shape=circle,label=\"\"];\n"));
    }
    for f in 1..=t.n {
        s.push_str(&format!("  t{f} [shape=plaintext,label=\"{f}\"];\n  v{} -- t{f};\n", t.vertex_of(f)));
    }
    for (a, b) in t.edges() {
        s.push_str(&format!("  v{} -- v{};\n", t.vertex_of(a), t.vertex_of(b)));
    }
    s.push_str("}\n");
    s
}

/// Human-readable split notation, e.g. `{12|34}` or `{1,2|3,4,5|...}` for
/// one-edge trees; for general trees the list of splits without `n`.
pub fn describe(t: &Tree) -> String {
    let splits = t.splits();
    if splits.is_empty() {
        return format!("[{}]", (1..=t.n).map(|x| x.to_string()).collect::<Vec<_>>().join(","));
    }
    let parts: Vec<String> = splits
        .iter()
        .map(|m| {
            let a: Vec<String> = mask_tails(*m).iter().map(|x| x.to_string()).collect();
            let b: Vec<String> =
                mask_tails(full_mask(t.n) & !m).iter().map(|x| x.to_string()).collect();
            format!("{{{}|{}}}", a.join(","), b.join(","))
        })
        .collect();
    parts.join("")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_vertex(n: u32, block: &[u32]) -> Tree {
        Tree::from_blocks(n, &[block]).unwrap()
    }

    #[test]
    fn validate_examples() {
        let t = Tree::one_vertex(3);
        assert_eq!(t.valency(0), 3);
        let mut raw = Tree::one_vertex(3).to_json();
        raw.flags.retain(|f| *f != 3);
        raw.boundary.remove(&3);
        raw.j.remove(&3);
        raw.n = 2;
        assert!(matches!(Tree::from_json(&raw, true), Err(TreeError::Unstable { .. })));
        let t = two_vertex(4, &[1, 2]);
        assert_eq!((t.num_edges(), t.num_vertices()), (1, 2));
    }

    #[test]
    fn validate_rejects_cycles_and_labels() {
        let mut raw = two_vertex(4, &[1, 2]).to_json();
        // make tail 4 internal paired with tail 3: labels broken
        raw.j.insert(3, 4);
        raw.j.insert(4, 3);
        assert!(matches!(Tree::from_json(&raw, false), Err(TreeError::BadLabels(_))));
        let mut raw = two_vertex(4, &[1, 2]).to_json();
        // add a second edge between the same two vertices
        raw.flags.extend([20, 21]);
        raw.boundary.insert(20, 0);
        raw.boundary.insert(21, 1);
        raw.j.insert(20, 21);
        raw.j.insert(21, 20);
        assert!(matches!(Tree::from_json(&raw, false), Err(TreeError::NotATree(_))));
    }

    #[test]
    fn isomorphism_examples() {
        let one = Tree::one_vertex(4);
        let iso = find_isomorphism(&one, &one, |t| t).unwrap();
        assert!(iso.phi_f.iter().all(|(a, b)| a == b));
        let a = two_vertex(4, &[1, 2]);
        let b = two_vertex(4, &[1, 3]);
        assert!(find_isomorphism(&a, &b, |t| t).is_none());
        let swap = |t: u32| match t {
            1 => 2,
            2 => 1,
            x => x,
        };
        let iso = find_isomorphism(&a, &a, swap).unwrap();
        assert_eq!(iso.phi_v, vec![0, 1]);
        assert_eq!(iso.phi_f[&1], 2);
    }

    #[test]
    fn contraction_examples() {
        let t = two_vertex(4, &[1, 2]);
        assert_eq!(t.contract_edges(&[]).unwrap().tree, t);
        let (e, _) = t.edges()[0];
        let c = t.contract_edges(&[e]).unwrap().tree;
        assert_eq!(c.canonical_form(), Tree::one_vertex(4).canonical_form());
        let chain = Tree::from_blocks(5, &[&[1, 2], &[1, 2, 3]]).unwrap();
        let es: Vec<Flag> = chain.edges().iter().map(|e| e.0).collect();
        let c = chain.contract_edges(&es).unwrap().tree;
        assert_eq!(c.canonical_form(), Tree::one_vertex(5).canonical_form());
        assert!(matches!(chain.contract_edges(&[2]), Err(TreeError::UnknownEdge(2))));
    }

    #[test]
    fn order_examples() {
        let a = two_vertex(4, &[1, 2]);
        let b = two_vertex(4, &[1, 3]);
        assert!(less_than(&a, &a));
        assert!(less_than(&a, &Tree::one_vertex(4)));
        assert!(!less_than(&a, &b));
    }

    #[test]
    fn enumeration_counts() {
        // number of stable n-trees with labelled tails, by edge count
        let counts = |n| {
            let mut by = BTreeMap::new();
            for t in enumerate_stable_trees(n) {
                *by.entry(t.num_edges()).or_insert(0usize) += 1;
            }
            by.into_values().collect::<Vec<_>>()
        };
        assert_eq!(counts(3), vec![1]);
        assert_eq!(counts(4), vec![1, 3]);
        assert_eq!(counts(5), vec![1, 10, 15]);
        assert_eq!(enumerate_stable_trees(6).len(), 236);
    }

    #[test]
    fn enumeration_matches_split_systems() {
        for n in 3..=7 {
            let mut fast = BTreeMap::new();
            for t in enumerate_stable_trees(n) {
                *fast.entry(t.num_edges()).or_insert(0usize) += 1;
            }
            assert_eq!(fast, brute_force_counts(n), "n = {n}");
        }
    }

    /// Independent count: sets of pairwise compatible splits.
    fn brute_force_counts(n: u32) -> BTreeMap<usize, usize> {
        let all = full_mask(n);
        let splits: Vec<TailMask> = (0..(1u64 << n))
            .map(|m| m << 1)
            .filter(|m| m & (1 << n) == 0 && m.count_ones() >= 2 && (all & !m).count_ones() >= 2)
            .collect();
        let compatible = |a: TailMask, b: TailMask| {
            let c = a & b;
            c == 0 || c == a || c == b
        };
        let mut out = BTreeMap::new();
        fn rec(
            start: usize,
            chosen: &mut Vec<TailMask>,
            splits: &[TailMask],
            ok: &dyn Fn(TailMask, TailMask) -> bool,
            out: &mut BTreeMap<usize, usize>,
        ) {
            *out.entry(chosen.len()).or_insert(0) += 1;
            for i in start..splits.len() {
                if chosen.iter().all(|c| ok(*c, splits[i])) {
                    chosen.push(splits[i]);
                    rec(i + 1, chosen, splits, ok, out);
                    chosen.pop();
                }
            }
        }
        rec(0, &mut Vec::new(), &splits, &compatible, &mut out);
        out
    }

    #[test]
    fn canonical_form_examples() {
        let a = two_vertex(4, &[1, 2]);
        let permuted = a.relabel_tails(|t| t); // same data
        let mut raw = a.to_json();
        // rename internal flags and vertices
        let (e0, e1) = a.edges()[0];
        let (v0, v1) = (a.vertex_of(e0), a.vertex_of(e1));
        raw.flags = raw.flags.iter().map(|f| if *f > 4 { f + 10 } else { *f }).collect();
        raw.boundary = raw
            .boundary
            .iter()
            .map(|(f, v)| {
                let f = if *f > 4 { f + 10 } else { *f };
                let v = if *v == v0 { v1 + 7 } else { v0 + 7 };
                (f, v)
            })
            .collect();
        raw.j = raw
            .j
            .iter()
            .map(|(f, g)| {
                let s = |x: &u32| if *x > 4 { x + 10 } else { *x };
                (s(f), s(g))
            })
            .collect();
        let b = Tree::from_json(&raw, true).unwrap();
        assert_eq!(a.canonical_form(), b.canonical_form());
        assert_eq!(a.canonical_form(), permuted.canonical_form());
        assert_ne!(a.canonical_form(), two_vertex(4, &[1, 3]).canonical_form());
        assert_eq!(b.canonical().tree, a.canonical().tree);
        let c = b.canonical().tree;
        assert_eq!(c.canonical().tree, c);
    }

    #[test]
    fn tree_identities() {
        for n in 3..=6 {
            for t in enumerate_stable_trees(n) {
                assert_eq!(t.num_vertices() as usize, t.num_edges() + 1);
                let total: usize = (0..t.num_vertices()).map(|v| t.valency(v)).sum();
                assert_eq!(total, 2 * t.num_edges() + n as usize);
                let c = t.canonical();
                for (old, new) in &c.flag_map {
                    assert_eq!(c.vertex_map[t.vertex_of(*old) as usize], c.tree.vertex_of(*new));
                    assert_eq!(c.flag_map[&t.partner(*old)], c.tree.partner(*new));
                }
            }
        }
    }

    #[test]
    fn contraction_composes() {
        for t in enumerate_stable_trees(6) {
            let es: Vec<Flag> = t.edges().iter().map(|e| e.0).collect();
            if es.len() < 2 {
                continue;
            }
            let (a, b) = es.split_at(es.len() / 2);
            let once = t.contract_edges(&es).unwrap().tree;
            let step = t.contract_edges(a).unwrap().tree.contract_edges(b).unwrap().tree;
            assert_eq!(once.canonical_form(), step.canonical_form());
            assert!(less_than(&t, &once));
        }
    }

    #[test]
    fn order_is_antisymmetric() {
        let trees = enumerate_stable_trees(5);
        for a in &trees {
            for b in &trees {
                if less_than(a, b) && less_than(b, a) {
                    assert_eq!(a.canonical_form(), b.canonical_form());
                }
            }
        }
    }
}
