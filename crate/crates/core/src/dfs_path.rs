//! Depth-first embedding of t-colored paths into a colored family.
//!
//! The state partitions S into the unexplored set A, the current path U and
//! one dead set B_r per color. A vertex moves to B_r only when it has no
//! color-r neighbor left in A, so `e_r(A, B_r) = 0` throughout.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expander::{ColoredFamily, VertexSet};
use crate::incidence::{count_incidences, CountStrategy, SphereSet};

/// A path on `len()` vertices whose k-th edge has color `colors[k]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColoredPath {
    colors: Vec<usize>,
}

impl ColoredPath {
    pub fn new(colors: Vec<usize>, t: usize) -> Result<Self> {
        if let Some(&c) = colors.iter().find(|&&c| c >= t) {
            return Err(Error::UnknownColor { color: c, t });
        }
        Ok(ColoredPath { colors })
    }

    /// `len` vertices with colors `0, 1, …, t-1, 0, 1, …`.
    pub fn cyclic(len: usize, t: usize) -> Result<Self> {
        if t == 0 {
            return Err(Error::UnknownColor { color: 0, t });
        }
        Ok(ColoredPath { colors: (0..len.saturating_sub(1)).map(|i| i % t).collect() })
    }

    pub fn len(&self) -> usize {
        self.colors.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn colors(&self) -> &[usize] {
        &self.colors
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Move {
    AToU(u32),
    UToB { vertex: u32, color: usize },
}

#[derive(Clone, Debug)]
pub struct DfsState {
    in_a: Vec<bool>,
    a_list: Vec<u32>,
    a_cursor: usize,
    a_count: usize,
    u: Vec<u32>,
    b: Vec<Vec<u32>>,
    step: u64,
    max_u: usize,
}

impl DfsState {
    pub fn new(family: &ColoredFamily, s: &VertexSet) -> Result<Self> {
        let mut in_a = vec![false; family.len()];
        for v in s.iter() {
            if v as usize >= family.len() {
                return Err(Error::UnknownVertex { vertex: v as usize, n: family.len() });
            }
            in_a[v as usize] = true;
        }
        Ok(DfsState {
            in_a,
            a_list: s.as_slice().to_vec(),
            a_cursor: 0,
            a_count: s.len(),
            u: Vec::new(),
            b: vec![Vec::new(); family.t()],
            step: 0,
            max_u: 0,
        })
    }

    pub fn a_size(&self) -> usize {
        self.a_count
    }

    pub fn a(&self) -> VertexSet {
        self.a_list.iter().copied().filter(|&v| self.in_a[v as usize]).collect()
    }

    pub fn u(&self) -> &[u32] {
        &self.u
    }

    pub fn b(&self, color: usize) -> &[u32] {
        &self.b[color]
    }

    pub fn b_total(&self) -> usize {
        self.b.iter().map(Vec::len).sum()
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn max_u(&self) -> usize {
        self.max_u
    }

    pub fn is_terminal(&self) -> bool {
        self.a_count == 0 && self.u.is_empty()
    }

    fn take_from_a(&mut self, v: u32) {
        self.in_a[v as usize] = false;
        self.a_count -= 1;
        self.u.push(v);
        self.max_u = self.max_u.max(self.u.len());
    }
}

/// Moves exactly one vertex: A→U or the last vertex of U → B_r.
pub fn dfs_step(state: &mut DfsState, family: &ColoredFamily, path: &ColoredPath) -> Result<Move> {
    if state.is_terminal() {
        return Err(Error::TerminalState);
    }
    state.step += 1;
    let Some(&last) = state.u.last() else {
        while !state.in_a[state.a_list[state.a_cursor] as usize] {
            state.a_cursor += 1;
        }
        let v = state.a_list[state.a_cursor];
        state.take_from_a(v);
        return Ok(Move::AToU(v));
    };
    let k = state.u.len();
    let color = *path.colors.get(k - 1).ok_or(Error::Usage {
        what: "dfs_step",
        requirement: format!("a path longer than the {k} vertices already embedded"),
    })?;
    let mut best: Option<u32> = None;
    family.for_each_neighbor(last, color, |w| {
        if state.in_a[w as usize] && best.is_none_or(|b| w < b) {
            best = Some(w);
        }
    });
    match best {
        Some(w) => {
            state.take_from_a(w);
            Ok(Move::AToU(w))
        }
        None => {
            state.u.pop();
            state.b[color].push(last);
            Ok(Move::UToB { vertex: last, color })
        }
    }
}

/// Checks the partition, the prefix embedding and `e_r(A, B_r) = 0`.
pub fn validate_state(state: &DfsState, family: &ColoredFamily, s: &VertexSet, path: &ColoredPath) -> Result<()> {
    let mut seen = vec![0u8; family.len()];
    let a = state.a();
    for v in a.iter().chain(state.u.iter().copied()).chain(state.b.iter().flatten().copied()) {
        seen[v as usize] += 1;
    }
    for v in 0..family.len() {
        let want = s.contains(v as u32) as u8;
        if seen[v] != want {
            return Err(Error::InvalidGraph(format!("vertex {v} appears {} times in A, U, B", seen[v])));
        }
    }
    for (k, w) in state.u.windows(2).enumerate() {
        if !family.adjacent(w[0], w[1], path.colors[k]) {
            return Err(Error::InvalidGraph(format!("U edge {k} does not have color {}", path.colors[k])));
        }
    }
    for (c, bs) in state.b.iter().enumerate() {
        for &v in bs {
            let mut hit = false;
            family.for_each_neighbor(v, c, |w| hit |= state.in_a[w as usize]);
            if hit {
                return Err(Error::InvalidGraph(format!("B_{c} vertex {v} has a color-{c} neighbor in A")));
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathFailure {
    pub b_total: usize,
    pub b_sizes: Vec<usize>,
    pub max_u: usize,
    pub steps: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathOutcome {
    Embedded(Vec<u32>),
    Failed(PathFailure),
}

pub fn embed_path(family: &ColoredFamily, s: &VertexSet, path: &ColoredPath) -> Result<PathOutcome> {
    embed_path_observed(family, s, path, |_| Ok(()))
}

/// Runs the search, calling `observe` on the initial state and after every
/// step.
pub fn embed_path_observed(
    family: &ColoredFamily,
    s: &VertexSet,
    path: &ColoredPath,
    mut observe: impl FnMut(&DfsState) -> Result<()>,
) -> Result<PathOutcome> {
    if let Some(&c) = path.colors.iter().find(|&&c| c >= family.t()) {
        return Err(Error::UnknownColor { color: c, t: family.t() });
    }
    let mut state = DfsState::new(family, s)?;
    observe(&state)?;
    while !state.is_terminal() {
        if state.u.len() == path.len() {
            let emb = state.u.clone();
            verify_embedding(family, path, &emb)?;
            return Ok(PathOutcome::Embedded(emb));
        }
        dfs_step(&mut state, family, path)?;
        observe(&state)?;
    }
    Ok(PathOutcome::Failed(PathFailure {
        b_total: state.b_total(),
        b_sizes: state.b.iter().map(Vec::len).collect(),
        max_u: state.max_u,
        steps: state.step,
    }))
}

/// Fails unless `emb` is an injective, color-respecting image of `path`.
pub fn verify_embedding(family: &ColoredFamily, path: &ColoredPath, emb: &[u32]) -> Result<()> {
    if emb.len() != path.len() {
        return Err(Error::InvalidGraph(format!("embedding has {} vertices, path has {}", emb.len(), path.len())));
    }
    if VertexSet::new(emb.to_vec()).len() != emb.len() {
        return Err(Error::InvalidGraph("embedding is not injective".into()));
    }
    for (k, w) in emb.windows(2).enumerate() {
        if !family.adjacent(w[0], w[1], path.colors[k]) {
            return Err(Error::InvalidGraph(format!("edge {k} is not of color {}", path.colors[k])));
        }
    }
    Ok(())
}

/// The incidence view of a DFS state on a distance family: spheres of
/// radius r centered at B_r never meet A.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IncidenceCertificate {
    pub a_size: usize,
    pub b_total: usize,
    /// I(A, C), identical under both counting strategies.
    pub incidences: u64,
    /// `q^{(d+2)/2}`.
    pub threshold: f64,
    /// `q^{d+2} / |A|`, the bound on Σ|B_r| forced by `I(A, C) = 0`.
    pub derived_bound: Option<f64>,
    /// Whether `|A| ≥ q^{(d+2)/2}`, when Σ|B_r| ≤ q^{(d+2)/2} must hold.
    pub bound_applies: bool,
    pub pass: bool,
}

pub fn incidence_certificate(state: &DfsState, family: &ColoredFamily) -> Result<IncidenceCertificate> {
    let dist = family
        .distance_family()
        .ok_or(Error::Usage { what: "incidence certificate", requirement: "a distance family".into() })?;
    let space = dist.space();
    let a: Vec<u64> = state.a().iter().map(|v| family.host_index(v)).collect();
    let mut spheres = Vec::with_capacity(state.b_total());
    for (c, bs) in state.b.iter().enumerate() {
        let r = dist.radii()[c];
        spheres.extend(bs.iter().map(|&v| (family.host_index(v), r)));
    }
    let ys = SphereSet::new(spheres)?;
    let walk = count_incidences(space, &a, &ys, CountStrategy::SpherePoints)?;
    let pairs = count_incidences(space, &a, &ys, CountStrategy::Pairs)?;
    if walk != pairs {
        return Err(Error::InvalidGraph(format!("incidence strategies disagree: {walk} vs {pairs}")));
    }
    let q = space.field().q() as f64;
    let d = space.dim() as f64;
    let threshold = q.powf((d + 2.0) / 2.0);
    let a_size = a.len();
    let b_total = state.b_total();
    let bound_applies = a_size as f64 >= threshold;
    let derived_bound = (a_size > 0).then(|| q.powf(d + 2.0) / a_size as f64);
    let within = derived_bound.is_none_or(|b| b_total as f64 <= b + 1e-9)
        && (!bound_applies || b_total as f64 <= threshold + 1e-9);
    Ok(IncidenceCertificate {
        a_size,
        b_total,
        incidences: walk,
        threshold,
        derived_bound,
        bound_applies,
        pass: walk == 0 && within,
    })
}
