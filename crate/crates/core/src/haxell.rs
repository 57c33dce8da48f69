//! Colored tree embedding driven by the residual function
//!
//! ```text
//! R(X, φ) = |Γ(X) ∖ φ(H)| - Σ_{(v,r) ∈ X} (Δ - D_{H,r}(φ⁻¹(v)))
//! ```
//!
//! over sets X of (vertex, color) pairs. An embedding is s-good when
//! `R(X, φ) ≥ 0` for every `|X| ≤ s`. Exhaustive checks use 64-bit vertex
//! masks, so they need hosts with at most 64 vertices.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_cap, Error, Result};
use crate::expander::{gamma, ColoredFamily};

/// Largest number of subsets an exhaustive check will visit.
pub const DEFAULT_SUBSET_CAP: u128 = 50_000_000;
/// Largest number of search nodes the backtracking embedder will visit.
pub const DEFAULT_BACKTRACK_CAP: u64 = 10_000_000;
/// Largest tree size [`enumerate_colored_trees`] accepts.
pub const MAX_ENUMERATED_TREE: usize = 8;

/// A (vertex, color) pair.
pub type Pair = (u32, usize);

#[derive(Clone, Debug, Serialize, Deserialize)]
struct TreeJson {
    vertices: usize,
    edges: Vec<(u32, u32, usize)>,
}

/// A tree with edge colors in `0..t`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TreeJson", into = "TreeJson")]
pub struct ColoredTree {
    n: usize,
    edges: Vec<(u32, u32, usize)>,
    adj: Vec<Vec<(u32, usize)>>,
    t: usize,
}

impl TryFrom<TreeJson> for ColoredTree {
    type Error = Error;

    fn try_from(j: TreeJson) -> Result<Self> {
        let t = j.edges.iter().map(|e| e.2 + 1).max().unwrap_or(1);
        ColoredTree::new(j.vertices, j.edges, t)
    }
}

impl From<ColoredTree> for TreeJson {
    fn from(t: ColoredTree) -> Self {
        TreeJson { vertices: t.n, edges: t.edges }
    }
}

impl ColoredTree {
    pub fn new(n: usize, edges: Vec<(u32, u32, usize)>, t: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidTree("no vertices".into()));
        }
        if edges.len() != n - 1 {
            return Err(Error::InvalidTree(format!("{} edges on {n} vertices", edges.len())));
        }
        let mut adj = vec![Vec::new(); n];
        for &(u, v, c) in &edges {
            if u as usize >= n || v as usize >= n {
                return Err(Error::InvalidTree(format!("edge {u}-{v} leaves 0..{n}")));
            }
            if u == v {
                return Err(Error::InvalidTree(format!("loop at {u}")));
            }
            if c >= t {
                return Err(Error::UnknownColor { color: c, t });
            }
            adj[u as usize].push((v, c));
            adj[v as usize].push((u, c));
        }
        let tree = ColoredTree { n, edges, adj, t };
        if tree.bfs_order().len() != n {
            return Err(Error::InvalidTree("not connected".into()));
        }
        Ok(tree)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn edges(&self) -> &[(u32, u32, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, v: u32) -> &[(u32, usize)] {
        &self.adj[v as usize]
    }

    /// `D_{T,r}(v)`.
    pub fn color_degree(&self, v: u32, color: usize) -> usize {
        self.adj[v as usize].iter().filter(|&&(_, c)| c == color).count()
    }

    /// `Δ_r(T)` for every color.
    pub fn max_color_degrees(&self) -> Vec<usize> {
        (0..self.t)
            .map(|c| (0..self.n as u32).map(|v| self.color_degree(v, c)).max().unwrap_or(0))
            .collect()
    }

    /// Breadth-first order from vertex 0 as `(vertex, Some((parent, color)))`.
    pub fn bfs_order(&self) -> Vec<(u32, Option<(u32, usize)>)> {
        let mut seen = vec![false; self.n];
        let mut order = vec![(0, None)];
        seen[0] = true;
        let mut queue = VecDeque::from([0u32]);
        while let Some(u) = queue.pop_front() {
            let mut nbrs = self.adj[u as usize].clone();
            nbrs.sort_unstable();
            for (v, c) in nbrs {
                if !seen[v as usize] {
                    seen[v as usize] = true;
                    order.push((v, Some((u, c))));
                    queue.push_back(v);
                }
            }
        }
        order
    }

    /// Recolors with `perm[c]` in place of c.
    fn recolored(&self, perm: &[usize]) -> ColoredTree {
        let edges = self.edges.iter().map(|&(u, v, c)| (u, v, perm[c])).collect();
        ColoredTree::new(self.n, edges, self.t).expect("recoloring keeps a valid tree")
    }
}

/// An injective, color-respecting partial map from tree vertices to host
/// vertices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialEmbedding {
    t: usize,
    map: Vec<Option<u32>>,
    image: Vec<bool>,
    image_list: Vec<u32>,
    /// Embedded-edge degree `D_{H,r}` pulled back to host pair `v*t + r`.
    pulled: Vec<u32>,
}

impl PartialEmbedding {
    pub fn empty(family: &ColoredFamily, tree_size: usize) -> Self {
        PartialEmbedding {
            t: family.t(),
            map: vec![None; tree_size],
            image: vec![false; family.len()],
            image_list: Vec::new(),
            pulled: vec![0; family.len() * family.t()],
        }
    }

    pub fn get(&self, tree_vertex: u32) -> Option<u32> {
        self.map.get(tree_vertex as usize).copied().flatten()
    }

    pub fn image(&self) -> &[u32] {
        &self.image_list
    }

    pub fn in_image(&self, host: u32) -> bool {
        self.image[host as usize]
    }

    pub fn size(&self) -> usize {
        self.image_list.len()
    }

    /// `D_{H,r}(φ⁻¹(v))`, zero off the image.
    pub fn pulled_degree(&self, host: u32, color: usize) -> u32 {
        self.pulled[host as usize * self.t + color]
    }

    /// The full map, when every tree vertex is placed.
    pub fn complete(&self) -> Option<Vec<u32>> {
        self.map.iter().copied().collect()
    }

    /// Places `v` at `w`, attached to the embedded `parent` by a color-c edge.
    pub fn place(&mut self, family: &ColoredFamily, v: u32, w: u32, parent: Option<(u32, usize)>) -> Result<()> {
        if self.get(v).is_some() {
            return Err(Error::InvalidTree(format!("tree vertex {v} already embedded")));
        }
        if w as usize >= self.image.len() {
            return Err(Error::UnknownVertex { vertex: w as usize, n: self.image.len() });
        }
        if self.image[w as usize] {
            return Err(Error::InvalidTree(format!("host vertex {w} already used")));
        }
        if let Some((u, c)) = parent {
            let pu = self.get(u).ok_or(Error::InvalidTree(format!("parent {u} not embedded")))?;
            if !family.adjacent(pu, w, c) {
                return Err(Error::InvalidTree(format!("host {pu}-{w} is not a color-{c} edge")));
            }
            self.pulled[pu as usize * self.t + c] += 1;
            self.pulled[w as usize * self.t + c] += 1;
        }
        self.map[v as usize] = Some(w);
        self.image[w as usize] = true;
        self.image_list.push(w);
        Ok(())
    }

    fn unplace(&mut self, v: u32, parent: Option<(u32, usize)>) {
        let w = self.map[v as usize].take().expect("unplace of a placed vertex");
        if let Some((u, c)) = parent {
            let pu = self.map[u as usize].expect("parent stays embedded");
            self.pulled[pu as usize * self.t + c] -= 1;
            self.pulled[w as usize * self.t + c] -= 1;
        }
        self.image[w as usize] = false;
        self.image_list.pop();
    }
}

/// `R(X, φ)`.
pub fn residual_r(family: &ColoredFamily, phi: &PartialEmbedding, delta: u32, x: &[Pair]) -> Result<i64> {
    let g = gamma(family, x)?;
    let outside = g.iter().filter(|&v| !phi.in_image(v)).count() as i64;
    let charge: i64 = x.iter().map(|&(v, c)| delta as i64 - phi.pulled_degree(v, c) as i64).sum();
    Ok(outside - charge)
}

/// Exhaustive subset machinery over pairs `p = v*t + c` of a small host.
struct PairEngine {
    t: usize,
    nbr: Vec<u64>,
}

impl PairEngine {
    fn new(family: &ColoredFamily) -> Result<Self> {
        check_cap("host vertices for exhaustive checks", family.len() as u128, 64)?;
        let t = family.t();
        let mut nbr = vec![0u64; family.len() * t];
        for v in 0..family.len() as u32 {
            for c in 0..t {
                family.for_each_neighbor(v, c, |u| nbr[v as usize * t + c] |= 1 << u);
            }
        }
        Ok(PairEngine { t, nbr })
    }

    fn pairs(&self) -> usize {
        self.nbr.len()
    }

    fn pair(&self, p: usize) -> Pair {
        ((p / self.t) as u32, p % self.t)
    }

    fn check_budget(&self, s: usize, cap: u128) -> Result<()> {
        check_cap("subsets of (vertex, color) pairs", subsets_up_to(self.pairs(), s), cap)
    }

    /// Visits every nonempty subset of size at most `s` in lexicographic
    /// order with its Γ mask. `visit` returns false to stop.
    fn for_each_subset(&self, s: usize, mut visit: impl FnMut(&[usize], u64) -> bool) {
        fn rec(e: &PairEngine, start: usize, s: usize, stack: &mut Vec<usize>, mask: u64, visit: &mut dyn FnMut(&[usize], u64) -> bool) -> bool {
            for p in start..e.pairs() {
                let m = mask | e.nbr[p];
                stack.push(p);
                if !visit(stack, m) {
                    return false;
                }
                if stack.len() < s && !rec(e, p + 1, s, stack, m, visit) {
                    return false;
                }
                stack.pop();
            }
            true
        }
        if s > 0 {
            rec(self, 0, s, &mut Vec::with_capacity(s), 0, &mut visit);
        }
    }

    fn image_mask(phi: &PartialEmbedding) -> u64 {
        phi.image().iter().fold(0u64, |m, &v| m | 1 << v)
    }

    fn residual(&self, phi: &PartialEmbedding, image: u64, delta: u32, xs: &[usize], mask: u64) -> i64 {
        let charge: i64 = xs.iter().map(|&p| delta as i64 - phi.pulled[p] as i64).sum();
        (mask & !image).count_ones() as i64 - charge
    }
}

fn subsets_up_to(n: usize, s: usize) -> u128 {
    let mut total = 0u128;
    let mut binom = 1u128;
    for j in 1..=s.min(n) {
        binom = binom * (n - j + 1) as u128 / j as u128;
        total += binom;
    }
    total
}

/// Three-way verdict of an exhaustive check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Violated(Vec<Pair>),
    Capped,
}

pub fn is_s_good(family: &ColoredFamily, phi: &PartialEmbedding, delta: u32, s: usize) -> Result<Verdict> {
    is_s_good_with_cap(family, phi, delta, s, DEFAULT_SUBSET_CAP)
}

pub fn is_s_good_with_cap(family: &ColoredFamily, phi: &PartialEmbedding, delta: u32, s: usize, cap: u128) -> Result<Verdict> {
    let engine = match PairEngine::new(family) {
        Ok(e) => e,
        Err(Error::CapExceeded { .. }) => return Ok(Verdict::Capped),
        Err(e) => return Err(e),
    };
    if engine.check_budget(s, cap).is_err() {
        return Ok(Verdict::Capped);
    }
    let image = PairEngine::image_mask(phi);
    let mut witness = None;
    engine.for_each_subset(s, |xs, mask| {
        if engine.residual(phi, image, delta, xs, mask) < 0 {
            witness = Some(xs.iter().map(|&p| engine.pair(p)).collect());
            false
        } else {
            true
        }
    });
    Ok(witness.map_or(Verdict::Holds, Verdict::Violated))
}

/// Exhaustive audit of the two expansion hypotheses
/// `|Γ(X)| ≥ Δ|X| + 1` for `1 ≤ |X| ≤ m` and `|Γ(X)| ≥ Δ|X| + k` for
/// `m < |X| ≤ 2m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub delta: u32,
    pub m: usize,
    pub k: usize,
    pub verdict: Verdict,
    /// Least `|Γ(X)| - Δ|X| - 1` over small X.
    pub small_slack: Option<i64>,
    /// Least `|Γ(X)| - Δ|X| - k` over large X.
    pub large_slack: Option<i64>,
    /// The largest k the large-set clause allows.
    pub max_k: Option<i64>,
}

impl HypothesisReport {
    pub fn holds(&self) -> bool {
        self.verdict == Verdict::Holds
    }
}

pub fn check_hypotheses(family: &ColoredFamily, delta: u32, m: usize, k: usize) -> Result<HypothesisReport> {
    check_hypotheses_with_cap(family, delta, m, k, DEFAULT_SUBSET_CAP)
}

pub fn check_hypotheses_with_cap(
    family: &ColoredFamily,
    delta: u32,
    m: usize,
    k: usize,
    cap: u128,
) -> Result<HypothesisReport> {
    let capped = HypothesisReport {
        delta,
        m,
        k,
        verdict: Verdict::Capped,
        small_slack: None,
        large_slack: None,
        max_k: None,
    };
    let engine = match PairEngine::new(family) {
        Ok(e) => e,
        Err(Error::CapExceeded { .. }) => return Ok(capped),
        Err(e) => return Err(e),
    };
    if engine.check_budget(2 * m, cap).is_err() {
        return Ok(capped);
    }
    let mut small: Option<i64> = None;
    let mut large_raw: Option<i64> = None;
    let mut witness: Option<Vec<Pair>> = None;
    engine.for_each_subset(2 * m, |xs, mask| {
        let excess = mask.count_ones() as i64 - delta as i64 * xs.len() as i64;
        let slack = if xs.len() <= m {
            let s = excess - 1;
            small = Some(small.map_or(s, |v| v.min(s)));
            s
        } else {
            large_raw = Some(large_raw.map_or(excess, |v| v.min(excess)));
            excess - k as i64
        };
        if slack < 0 && witness.is_none() {
            witness = Some(xs.iter().map(|&p| engine.pair(p)).collect());
        }
        true
    });
    Ok(HypothesisReport {
        delta,
        m,
        k,
        verdict: witness.map_or(Verdict::Holds, Verdict::Violated),
        small_slack: small,
        large_slack: large_raw.map(|v| v - k as i64),
        max_k: large_raw,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Smallest candidate whose extension stays `s_cap`-good.
    ExactGood,
    /// Candidate maximizing the least unused color-degree.
    Greedy,
    /// Exhaustive search over candidates in index order.
    Backtrack,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoodnessParams {
    pub delta: u32,
    pub m: usize,
    pub tree_bound_k: usize,
    pub s_cap: usize,
}

impl GoodnessParams {
    /// `s_cap = 2m`, the goodness level the induction maintains.
    pub fn new(delta: u32, m: usize, tree_bound_k: usize) -> Result<Self> {
        Self::with_s_cap(delta, m, tree_bound_k, (2 * m).max(1))
    }

    pub fn with_s_cap(delta: u32, m: usize, tree_bound_k: usize, s_cap: usize) -> Result<Self> {
        if tree_bound_k < 1 || s_cap < 1 || s_cap > (2 * m).max(1) {
            return Err(Error::Usage {
                what: "goodness parameters",
                requirement: format!("k >= 1 and 1 <= s_cap <= 2m, got k={tree_bound_k}, s_cap={s_cap}, m={m}"),
            });
        }
        Ok(GoodnessParams { delta, m, tree_bound_k, s_cap })
    }
}

/// Why a leaf could not be placed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtensionFailure {
    pub tree_vertex: u32,
    pub candidates: usize,
    /// A set violating goodness for the smallest candidate, in exact mode.
    pub witness: Option<Vec<Pair>>,
}

/// Places tree vertex `v` (attached to the embedded `parent` by a color-c
/// edge, or as the root when `parent` is None) according to `strategy`.
/// Returns the chosen host vertex.
pub fn extend_leaf(
    family: &ColoredFamily,
    phi: &mut PartialEmbedding,
    v: u32,
    parent: Option<(u32, usize)>,
    params: &GoodnessParams,
    strategy: Strategy,
) -> Result<std::result::Result<u32, ExtensionFailure>> {
    let candidates = candidate_hosts(family, phi, parent)?;
    let chosen = match strategy {
        Strategy::ExactGood => {
            let engine = PairEngine::new(family)?;
            exact_good_choice(&engine, phi, parent, &candidates, params)?
        }
        Strategy::Greedy => greedy_choice(family, phi, &candidates).ok_or(None),
        Strategy::Backtrack => {
            return Err(Error::Usage { what: "extend_leaf", requirement: "exact-good or greedy strategy".into() })
        }
    };
    match chosen {
        Ok(w) => {
            phi.place(family, v, w, parent)?;
            Ok(Ok(w))
        }
        Err(witness) => Ok(Err(ExtensionFailure { tree_vertex: v, candidates: candidates.len(), witness })),
    }
}

fn candidate_hosts(family: &ColoredFamily, phi: &PartialEmbedding, parent: Option<(u32, usize)>) -> Result<Vec<u32>> {
    Ok(match parent {
        None => (0..family.len() as u32).filter(|&w| !phi.in_image(w)).collect(),
        Some((u, c)) => {
            let pu = phi.get(u).ok_or(Error::InvalidTree(format!("parent {u} not embedded")))?;
            let mut out: Vec<u32> = family.neighbors(pu, c)?.iter().filter(|&w| !phi.in_image(w)).collect();
            out.sort_unstable();
            out
        }
    })
}

/// Uses `R(X, φ_w) = R(X, φ) - [w ∈ Γ(X)] + [(w,c) ∈ X] + [(φ(u),c) ∈ X]`:
/// only sets with `R(X, φ) ≤ 0` can fail after the step, so one
/// enumeration decides every candidate.
fn exact_good_choice(
    engine: &PairEngine,
    phi: &PartialEmbedding,
    parent: Option<(u32, usize)>,
    candidates: &[u32],
    params: &GoodnessParams,
) -> Result<std::result::Result<u32, Option<Vec<Pair>>>> {
    engine.check_budget(params.s_cap, DEFAULT_SUBSET_CAP)?;
    if candidates.is_empty() {
        return Ok(Err(None));
    }
    let image = PairEngine::image_mask(phi);
    let mut critical: Vec<(i64, u64, Vec<usize>)> = Vec::new();
    engine.for_each_subset(params.s_cap, |xs, mask| {
        let r = engine.residual(phi, image, params.delta, xs, mask);
        if r <= 0 {
            critical.push((r, mask, xs.to_vec()));
        }
        true
    });
    let t = engine.t;
    let parent_pair = parent.map(|(u, c)| (phi.get(u).expect("parent embedded") as usize * t + c, c));
    let after = |w: u32, (r, mask, xs): &(i64, u64, Vec<usize>)| -> i64 {
        let mut v = *r - ((mask >> w) & 1) as i64;
        if let Some((pp, c)) = parent_pair {
            v += xs.contains(&(w as usize * t + c)) as i64 + xs.contains(&pp) as i64;
        }
        v
    };
    for &w in candidates {
        if critical.iter().all(|x| after(w, x) >= 0) {
            return Ok(Ok(w));
        }
    }
    let w = candidates[0];
    let witness = critical
        .iter()
        .find(|x| after(w, x) < 0)
        .map(|(_, _, xs)| xs.iter().map(|&p| engine.pair(p)).collect());
    Ok(Err(witness))
}

fn greedy_choice(family: &ColoredFamily, phi: &PartialEmbedding, candidates: &[u32]) -> Option<u32> {
    let score = |w: u32| {
        (0..family.t())
            .map(|c| {
                let mut k = 0usize;
                family.for_each_neighbor(w, c, |x| k += !phi.in_image(x) as usize);
                k
            })
            .min()
            .unwrap_or(0)
    };
    let mut best: Option<(usize, u32)> = None;
    for &w in candidates {
        let s = score(w);
        if best.is_none_or(|(b, _)| s > b) {
            best = Some((s, w));
        }
    }
    best.map(|(_, w)| w)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeOutcome {
    /// Host vertex of each tree vertex.
    Embedded(Vec<u32>),
    Failed { embedded: usize, failure: Option<ExtensionFailure> },
}

impl TreeOutcome {
    pub fn is_embedded(&self) -> bool {
        matches!(self, TreeOutcome::Embedded(_))
    }
}

pub fn embed_tree(family: &ColoredFamily, tree: &ColoredTree, params: &GoodnessParams, strategy: Strategy) -> Result<TreeOutcome> {
    embed_tree_with_cap(family, tree, params, strategy, DEFAULT_BACKTRACK_CAP)
}

pub fn embed_tree_with_cap(
    family: &ColoredFamily,
    tree: &ColoredTree,
    params: &GoodnessParams,
    strategy: Strategy,
    backtrack_cap: u64,
) -> Result<TreeOutcome> {
    if tree.t() > family.t() {
        return Err(Error::UnknownColor { color: tree.t() - 1, t: family.t() });
    }
    if let Some(c) = tree.max_color_degrees().iter().position(|&d| d > params.delta as usize) {
        return Err(Error::Usage { what: "embed_tree", requirement: format!("Δ_{c}(T) <= Δ = {}", params.delta) });
    }
    if tree.len() > params.tree_bound_k {
        return Err(Error::Usage {
            what: "embed_tree",
            requirement: format!("at most k = {} tree vertices, got {}", params.tree_bound_k, tree.len()),
        });
    }
    let order = tree.bfs_order();
    let mut phi = PartialEmbedding::empty(family, tree.len());
    let outcome = match strategy {
        Strategy::Backtrack => {
            let mut nodes = 0u64;
            if backtrack(family, &order, 0, &mut phi, &mut nodes, backtrack_cap)? {
                TreeOutcome::Embedded(phi.complete().expect("all placed"))
            } else {
                TreeOutcome::Failed { embedded: 0, failure: None }
            }
        }
        _ => {
            for &(v, parent) in &order {
                if let Err(f) = extend_leaf(family, &mut phi, v, parent, params, strategy)? {
                    return Ok(TreeOutcome::Failed { embedded: phi.size(), failure: Some(f) });
                }
            }
            TreeOutcome::Embedded(phi.complete().expect("all placed"))
        }
    };
    if let TreeOutcome::Embedded(map) = &outcome {
        verify_tree_embedding(family, tree, map)?;
    }
    Ok(outcome)
}

fn backtrack(
    family: &ColoredFamily,
    order: &[(u32, Option<(u32, usize)>)],
    i: usize,
    phi: &mut PartialEmbedding,
    nodes: &mut u64,
    cap: u64,
) -> Result<bool> {
    if i == order.len() {
        return Ok(true);
    }
    let (v, parent) = order[i];
    for w in candidate_hosts(family, phi, parent)? {
        *nodes += 1;
        check_cap("backtracking nodes", *nodes as u128, cap as u128)?;
        phi.place(family, v, w, parent)?;
        if backtrack(family, order, i + 1, phi, nodes, cap)? {
            return Ok(true);
        }
        phi.unplace(v, parent);
    }
    Ok(false)
}

/// Fails unless `map` is injective and sends every color-c tree edge to a
/// color-c host edge.
pub fn verify_tree_embedding(family: &ColoredFamily, tree: &ColoredTree, map: &[u32]) -> Result<()> {
    if map.len() != tree.len() {
        return Err(Error::InvalidTree(format!("map has {} entries for {} vertices", map.len(), tree.len())));
    }
    let distinct: BTreeSet<u32> = map.iter().copied().collect();
    if distinct.len() != map.len() {
        return Err(Error::InvalidTree("embedding is not injective".into()));
    }
    for &(u, v, c) in tree.edges() {
        if !family.adjacent(map[u as usize], map[v as usize], c) {
            return Err(Error::InvalidTree(format!("tree edge {u}-{v} is not a color-{c} host edge")));
        }
    }
    Ok(())
}

/// Whether colors may be permuted when identifying colored trees.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ColorSymmetry {
    /// Colors are labels; only tree isomorphisms identify colorings.
    Labelled,
    /// Colorings equal up to a permutation of `0..t` are identified.
    UpToPermutation,
}

/// Canonical string of a rooted colored subtree.
fn rooted_code(tree: &ColoredTree, v: u32, parent: Option<u32>) -> String {
    let mut kids: Vec<String> = tree
        .neighbors(v)
        .iter()
        .filter(|&&(u, _)| Some(u) != parent)
        .map(|&(u, c)| format!("{c}{}", rooted_code(tree, u, Some(v))))
        .collect();
    kids.sort();
    format!("({})", kids.concat())
}

fn centers(tree: &ColoredTree) -> Vec<u32> {
    let n = tree.len();
    let mut deg: Vec<usize> = (0..n).map(|v| tree.neighbors(v as u32).len()).collect();
    let mut layer: Vec<u32> = (0..n as u32).filter(|&v| deg[v as usize] <= 1).collect();
    let mut remaining = n;
    while remaining > 2 {
        remaining -= layer.len();
        let mut next = Vec::new();
        for &v in &layer {
            for &(u, _) in tree.neighbors(v) {
                deg[u as usize] -= 1;
                if deg[u as usize] == 1 {
                    next.push(u);
                }
            }
        }
        layer = next;
    }
    layer.sort_unstable();
    layer
}

/// Isomorphism-invariant code of a colored tree (colors as labels).
pub fn canonical_code(tree: &ColoredTree) -> String {
    match centers(tree)[..] {
        [c] => format!("V{}", rooted_code(tree, c, None)),
        [a, b] => {
            let color = tree.neighbors(a).iter().find(|&&(u, _)| u == b).expect("centers are adjacent").1;
            let (x, y) = (rooted_code(tree, a, Some(b)), rooted_code(tree, b, Some(a)));
            let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
            format!("E{color}{lo}{hi}")
        }
        _ => unreachable!("a tree has one or two centers"),
    }
}

fn permutations(t: usize) -> Vec<Vec<usize>> {
    if t == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(t - 1) {
        for i in 0..t {
            let mut q = p.clone();
            q.insert(i, t - 1);
            out.push(q);
        }
    }
    out
}

/// All trees on exactly `n` vertices, up to isomorphism, ordered by code.
pub fn free_trees(n: usize) -> Result<Vec<ColoredTree>> {
    check_cap("tree size", n as u128, MAX_ENUMERATED_TREE as u128)?;
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut level: BTreeMap<String, ColoredTree> = BTreeMap::new();
    let single = ColoredTree::new(1, Vec::new(), 1)?;
    level.insert(canonical_code(&single), single);
    for size in 2..=n {
        let mut next = BTreeMap::new();
        for tree in level.values() {
            for v in 0..tree.len() as u32 {
                let mut edges = tree.edges().to_vec();
                edges.push((v, (size - 1) as u32, 0));
                let grown = ColoredTree::new(size, edges, 1)?;
                next.entry(canonical_code(&grown)).or_insert(grown);
            }
        }
        level = next;
    }
    Ok(level.into_values().collect())
}

/// All colored trees on exactly `n` vertices with colors in `0..t`, one per
/// class under `symmetry`, ordered by canonical code.
pub fn colored_trees_of_size(n: usize, t: usize, symmetry: ColorSymmetry) -> Result<Vec<ColoredTree>> {
    if t == 0 {
        return Err(Error::UnknownColor { color: 0, t });
    }
    let shapes = free_trees(n)?;
    let edges = n.saturating_sub(1) as u32;
    check_cap("colorings", (t as u128).pow(edges) * shapes.len() as u128, 1 << 24)?;
    let perms = match symmetry {
        ColorSymmetry::Labelled => vec![(0..t).collect()],
        ColorSymmetry::UpToPermutation => permutations(t),
    };
    let mut found: BTreeMap<String, ColoredTree> = BTreeMap::new();
    for shape in &shapes {
        for code in 0..(t as u64).pow(edges) {
            let mut rest = code;
            let colored: Vec<_> = shape
                .edges()
                .iter()
                .map(|&(u, v, _)| {
                    let c = (rest % t as u64) as usize;
                    rest /= t as u64;
                    (u, v, c)
                })
                .collect();
            let tree = ColoredTree::new(n, colored, t)?;
            let key = perms.iter().map(|p| canonical_code(&tree.recolored(p))).min().expect("nonempty");
            found.entry(key).or_insert(tree);
        }
    }
    Ok(found.into_values().collect())
}

/// Colored trees on 1..=n_max vertices, colors up to permutation.
pub fn enumerate_colored_trees(n_max: usize, t: usize) -> Result<Vec<ColoredTree>> {
    enumerate_colored_trees_with(n_max, t, ColorSymmetry::UpToPermutation)
}

pub fn enumerate_colored_trees_with(n_max: usize, t: usize, symmetry: ColorSymmetry) -> Result<Vec<ColoredTree>> {
    check_cap("tree size", n_max as u128, MAX_ENUMERATED_TREE as u128)?;
    let mut out = Vec::new();
    for n in 1..=n_max {
        out.extend(colored_trees_of_size(n, t, symmetry)?);
    }
    Ok(out)
}

/// Embeds every tree in `trees` in parallel; results keep the input order.
pub fn embed_all(
    family: &ColoredFamily,
    trees: &[ColoredTree],
    params: &GoodnessParams,
    strategy: Strategy,
) -> Result<Vec<TreeOutcome>> {
    trees.par_iter().map(|t| embed_tree(family, t, params, strategy)).collect()
}

/// Parameters of the tree-embedding theorem for a set S in a family of
/// (n, D, λ)-graphs: `k = |S| - 10 (tΔ)^{1/2} nλ/D` and
/// `m = t^{1/2} Δ^{-1/2} nλ/D`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApplicationParams {
    pub s_size: usize,
    pub t: usize,
    pub delta: u32,
    pub k: f64,
    pub m: f64,
    /// No tree with at least one vertex is covered.
    pub vacuous: bool,
}

pub fn application_params(s_size: usize, t: usize, delta: u32, n: u64, degree: u64, lambda: f64) -> ApplicationParams {
    let ratio = n as f64 * lambda / degree as f64;
    let (tf, df) = (t as f64, delta as f64);
    let k = s_size as f64 - 10.0 * (tf * df).sqrt() * ratio;
    let m = tf.sqrt() / df.sqrt() * ratio;
    ApplicationParams { s_size, t, delta, k, m, vacuous: k < 1.0 }
}
