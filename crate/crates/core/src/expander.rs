//! Families of t edge-colored graphs on a common vertex set.
//!
//! A [`ColoredFamily`] is backed either by a [`DistanceGraphFamily`] (one
//! color per radius) or by explicit adjacency lists. Vertices are local
//! indices `0..len()`; inducing on a subset renumbers them in order.

use std::collections::BTreeSet;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distgraph::{spectrum_character, symmetric_eigenvalues, DistanceGraphFamily, SpectralCertificate};
use crate::error::{Error, Result};

const ABSENT: u32 = u32::MAX;
/// Slack allowed when comparing a computed quantity with a real bound.
pub const BOUND_TOL: f64 = 1e-6;

#[derive(Clone, Debug)]
enum Backend {
    /// `adj[color][vertex]`, sorted.
    Explicit(Arc<Vec<Vec<Vec<u32>>>>),
    Distance(Arc<DistanceGraphFamily>),
}

/// A t-colored graph family, possibly induced on a subset of its host.
#[derive(Clone, Debug)]
pub struct ColoredFamily {
    backend: Backend,
    t: usize,
    members: Vec<u64>,
    local_of: Vec<u32>,
    certificates: Vec<Option<SpectralCertificate>>,
}

/// Sorted, duplicate-free set of local vertex indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VertexSet(Vec<u32>);

impl VertexSet {
    pub fn new(mut v: Vec<u32>) -> Self {
        v.sort_unstable();
        v.dedup();
        VertexSet(v)
    }

    pub fn empty() -> Self {
        VertexSet(Vec::new())
    }

    pub fn full(n: usize) -> Self {
        VertexSet((0..n as u32).collect())
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<u32> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, v: u32) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.0.iter().copied()
    }

    pub fn union(&self, other: &VertexSet) -> VertexSet {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        VertexSet::new(v)
    }

    pub fn intersection(&self, other: &VertexSet) -> VertexSet {
        VertexSet(self.iter().filter(|&x| other.contains(x)).collect())
    }

    pub fn difference(&self, other: &VertexSet) -> VertexSet {
        VertexSet(self.iter().filter(|&x| !other.contains(x)).collect())
    }

    fn mask(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for x in self.iter() {
            m[x as usize] = true;
        }
        m
    }
}

impl FromIterator<u32> for VertexSet {
    fn from_iter<I: IntoIterator<Item = u32>>(iter: I) -> Self {
        VertexSet::new(iter.into_iter().collect())
    }
}

impl ColoredFamily {
    /// The distance family on all of F_q^d, with character-sum certificates.
    pub fn from_distance(family: Arc<DistanceGraphFamily>) -> Result<Self> {
        let certificates = (0..family.t())
            .map(|c| spectrum_character(&family, c).map(|s| Some(s.certificate)))
            .collect::<Result<Vec<_>>>()?;
        Self::from_distance_with_certificates(family, certificates)
    }

    pub fn from_distance_with_certificates(
        family: Arc<DistanceGraphFamily>,
        certificates: Vec<Option<SpectralCertificate>>,
    ) -> Result<Self> {
        if certificates.len() != family.t() {
            return Err(Error::DimensionMismatch { expected: family.t(), got: certificates.len() });
        }
        let n = family.n() as usize;
        Ok(ColoredFamily {
            t: family.t(),
            backend: Backend::Distance(family),
            members: (0..n as u64).collect(),
            local_of: (0..n as u32).collect(),
            certificates,
        })
    }

    /// A family from explicit adjacency lists `adj[color][vertex]`. Each
    /// relation must be symmetric and irreflexive.
    pub fn from_adjacency(adj: Vec<Vec<Vec<u32>>>) -> Result<Self> {
        let t = adj.len();
        if t == 0 {
            return Err(Error::InvalidGraph("no colors".into()));
        }
        let n = adj[0].len();
        let mut adj = adj;
        for (c, lists) in adj.iter_mut().enumerate() {
            if lists.len() != n {
                return Err(Error::InvalidGraph(format!("color {c} has {} vertices, expected {n}", lists.len())));
            }
            for (v, list) in lists.iter_mut().enumerate() {
                list.sort_unstable();
                list.dedup();
                if list.last().is_some_and(|&u| u as usize >= n) {
                    return Err(Error::UnknownVertex { vertex: *list.last().unwrap() as usize, n });
                }
                if list.binary_search(&(v as u32)).is_ok() {
                    return Err(Error::InvalidGraph(format!("loop at {v} in color {c}")));
                }
            }
        }
        for (c, lists) in adj.iter().enumerate() {
            for (v, list) in lists.iter().enumerate() {
                for &u in list {
                    if lists[u as usize].binary_search(&(v as u32)).is_err() {
                        return Err(Error::InvalidGraph(format!("edge {v}-{u} of color {c} is not symmetric")));
                    }
                }
            }
        }
        Ok(ColoredFamily {
            t,
            backend: Backend::Explicit(Arc::new(adj)),
            members: (0..n as u64).collect(),
            local_of: (0..n as u32).collect(),
            certificates: vec![None; t],
        })
    }

    /// Attaches dense-eigensolver certificates to every regular color of an
    /// uninduced explicit family.
    pub fn with_dense_certificates(mut self) -> Result<Self> {
        let Backend::Explicit(adj) = &self.backend else {
            return Err(Error::Usage { what: "dense certificates", requirement: "an explicit family".into() });
        };
        if self.members.len() != self.local_of.len() {
            return Err(Error::Usage { what: "dense certificates", requirement: "an uninduced family".into() });
        }
        let certs: Vec<_> = adj.iter().map(|lists| dense_certificate(lists)).collect();
        self.certificates = certs;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn host_size(&self) -> usize {
        self.local_of.len()
    }

    /// Host index of a local vertex (a point index for distance families).
    pub fn host_index(&self, v: u32) -> u64 {
        self.members[v as usize]
    }

    /// Local index of a host vertex, if it belongs to this family.
    pub fn local_index(&self, host: u64) -> Option<u32> {
        self.local_of.get(host as usize).copied().filter(|&l| l != ABSENT)
    }

    pub fn distance_family(&self) -> Option<&Arc<DistanceGraphFamily>> {
        match &self.backend {
            Backend::Distance(f) => Some(f),
            Backend::Explicit(_) => None,
        }
    }

    pub fn certificate(&self, color: usize) -> Result<&SpectralCertificate> {
        self.check_color(color)?;
        self.certificates[color].as_ref().ok_or(Error::MissingCertificate(color))
    }

    /// Common parameters for all colors: the host size, the least degree
    /// and the largest λ.
    pub fn common_parameters(&self) -> Result<(u64, u64, f64)> {
        let mut n = 0;
        let mut degree = u64::MAX;
        let mut lambda = 0.0f64;
        for c in 0..self.t {
            let cert = self.certificate(c)?;
            n = cert.n;
            degree = degree.min(cert.degree);
            lambda = lambda.max(cert.lambda);
        }
        Ok((n, degree, lambda))
    }

    fn check_color(&self, color: usize) -> Result<()> {
        if color < self.t {
            Ok(())
        } else {
            Err(Error::UnknownColor { color, t: self.t })
        }
    }

    fn check_vertex(&self, v: u32) -> Result<()> {
        if (v as usize) < self.len() {
            Ok(())
        } else {
            Err(Error::UnknownVertex { vertex: v as usize, n: self.len() })
        }
    }

    /// Calls `f` on each neighbor of `v` in `color`, in host order.
    #[inline]
    pub fn for_each_neighbor(&self, v: u32, color: usize, mut f: impl FnMut(u32)) {
        let host = self.members[v as usize];
        match &self.backend {
            Backend::Explicit(adj) => {
                for &u in &adj[color][host as usize] {
                    let l = self.local_of[u as usize];
                    if l != ABSENT {
                        f(l);
                    }
                }
            }
            Backend::Distance(fam) => {
                for y in fam.neighbor_indices(host, color) {
                    let l = self.local_of[y as usize];
                    if l != ABSENT {
                        f(l);
                    }
                }
            }
        }
    }

    pub fn neighbors(&self, v: u32, color: usize) -> Result<VertexSet> {
        self.check_color(color)?;
        self.check_vertex(v)?;
        let mut out = Vec::new();
        self.for_each_neighbor(v, color, |u| out.push(u));
        Ok(VertexSet::new(out))
    }

    pub fn degree(&self, v: u32, color: usize) -> usize {
        let mut d = 0;
        self.for_each_neighbor(v, color, |_| d += 1);
        d
    }

    pub fn adjacent(&self, u: u32, v: u32, color: usize) -> bool {
        match &self.backend {
            Backend::Explicit(adj) => adj[color][self.members[u as usize] as usize]
                .binary_search(&(self.members[v as usize] as u32))
                .is_ok(),
            Backend::Distance(fam) => {
                let diff = fam.space().sub_index(self.members[u as usize], self.members[v as usize]);
                fam.sphere(color).map(|s| s.contains(diff)).unwrap_or(false)
            }
        }
    }

    /// `G[S]`: same colors, universe S renumbered in order. Certificates
    /// are those of the host.
    pub fn induce(&self, s: &VertexSet) -> Result<ColoredFamily> {
        if let Some(v) = s.iter().find(|&v| v as usize >= self.len()) {
            return Err(Error::UnknownVertex { vertex: v as usize, n: self.len() });
        }
        let members: Vec<u64> = s.iter().map(|v| self.members[v as usize]).collect();
        let mut local_of = vec![ABSENT; self.local_of.len()];
        for (i, &h) in members.iter().enumerate() {
            local_of[h as usize] = i as u32;
        }
        Ok(ColoredFamily {
            backend: self.backend.clone(),
            t: self.t,
            members,
            local_of,
            certificates: self.certificates.clone(),
        })
    }
}

fn dense_certificate(lists: &[Vec<u32>]) -> Option<SpectralCertificate> {
    let n = lists.len();
    let degree = lists.first()?.len();
    if lists.iter().any(|l| l.len() != degree) {
        return None;
    }
    let mut m = DMatrix::<f64>::zeros(n, n);
    for (v, l) in lists.iter().enumerate() {
        for &u in l {
            m[(v, u as usize)] = 1.0;
        }
    }
    let eig = symmetric_eigenvalues(m);
    // The top eigenvalue of a D-regular graph is D; drop one copy of it.
    let lambda = eig[..n - 1].iter().fold(0.0f64, |a, x| a.max(x.abs()));
    Some(SpectralCertificate { n: n as u64, degree: degree as u64, lambda, claimed_bound: lambda })
}

/// `e(X, Y)`: ordered pairs `(x, y) ∈ X × Y` joined in `color`.
pub fn edge_count(family: &ColoredFamily, color: usize, x: &VertexSet, y: &VertexSet) -> Result<u64> {
    family.check_color(color)?;
    for v in x.iter().chain(y.iter()) {
        family.check_vertex(v)?;
    }
    let ymask = y.mask(family.len());
    let mut count = 0u64;
    for v in x.iter() {
        family.for_each_neighbor(v, color, |u| count += ymask[u as usize] as u64);
    }
    Ok(count)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixingReport {
    pub x_size: usize,
    pub y_size: usize,
    pub edges: u64,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub pass: bool,
}

/// Evaluates `|e(X,Y) - D|X||Y|/n| ≤ λ √(|X||Y|)`.
pub fn mixing_check(family: &ColoredFamily, color: usize, x: &VertexSet, y: &VertexSet) -> Result<MixingReport> {
    let cert = family.certificate(color)?.clone();
    let edges = edge_count(family, color, x, y)?;
    let (xs, ys) = (x.len() as f64, y.len() as f64);
    let lhs = (edges as f64 - cert.degree as f64 * xs * ys / cert.n as f64).abs();
    let rhs = cert.lambda * (xs * ys).sqrt();
    Ok(MixingReport {
        x_size: x.len(),
        y_size: y.len(),
        edges,
        lhs,
        rhs,
        slack: rhs - lhs,
        pass: lhs <= rhs + BOUND_TOL,
    })
}

/// `Γ(X) = ⋃_{(v, c) ∈ X} N_c(v)`.
pub fn gamma(family: &ColoredFamily, pairs: &[(u32, usize)]) -> Result<VertexSet> {
    let mut out = Vec::new();
    for &(v, c) in pairs {
        family.check_color(c)?;
        family.check_vertex(v)?;
        family.for_each_neighbor(v, c, |u| out.push(u));
    }
    Ok(VertexSet::new(out))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Removal {
    pub vertex: u32,
    pub color: usize,
    pub degree: usize,
}

/// Result of peeling S to its fixed point under a degree threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeelOutcome {
    pub threshold: f64,
    pub survivors: VertexSet,
    pub removals: Vec<Removal>,
    /// Per color, the least within-W degree over W (None when W is empty).
    pub min_survivor_degree: Vec<Option<usize>>,
}

/// Repeatedly removes the smallest vertex of S whose within-set degree is
/// below `threshold` in some color in `colors`.
pub fn peel_threshold(family: &ColoredFamily, s: &VertexSet, colors: &[usize], threshold: f64) -> Result<PeelOutcome> {
    for &c in colors {
        family.check_color(c)?;
    }
    for v in s.iter() {
        family.check_vertex(v)?;
    }
    let n = family.len();
    let mut alive = s.mask(n);
    let members = s.as_slice();
    let mut deg: Vec<Vec<usize>> = colors
        .iter()
        .map(|&c| {
            let mut d = vec![0usize; n];
            let counted: Vec<usize> = members
                .par_iter()
                .map(|&v| {
                    let mut k = 0;
                    family.for_each_neighbor(v, c, |u| k += alive[u as usize] as usize);
                    k
                })
                .collect();
            for (&v, k) in members.iter().zip(counted) {
                d[v as usize] = k;
            }
            d
        })
        .collect();
    let below = |deg: &Vec<Vec<usize>>, v: u32| deg.iter().any(|d| (d[v as usize] as f64) < threshold);
    let mut queue: BTreeSet<u32> = members.iter().copied().filter(|&v| below(&deg, v)).collect();
    let mut removals = Vec::new();
    while let Some(v) = queue.pop_first() {
        let (slot, degree) = deg
            .iter()
            .enumerate()
            .map(|(i, d)| (i, d[v as usize]))
            .find(|&(_, k)| (k as f64) < threshold)
            .expect("queued vertices are below threshold");
        removals.push(Removal { vertex: v, color: colors[slot], degree });
        alive[v as usize] = false;
        for (i, &c) in colors.iter().enumerate() {
            family.for_each_neighbor(v, c, |u| {
                if alive[u as usize] {
                    deg[i][u as usize] -= 1;
                    if (deg[i][u as usize] as f64) < threshold {
                        queue.insert(u);
                    }
                }
            });
        }
    }
    let survivors = VertexSet(members.iter().copied().filter(|&v| alive[v as usize]).collect());
    let min_survivor_degree = deg
        .iter()
        .map(|d| survivors.iter().map(|v| d[v as usize]).min())
        .collect();
    Ok(PeelOutcome { threshold, survivors, removals, min_survivor_degree })
}

/// Min-degree peeling with threshold `Cλ/4` and the removal bound
/// `8tC⁻²|S|`, using the common (n, D, λ) of the family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeelReport {
    pub input_size: usize,
    pub c: f64,
    pub n: u64,
    #[serde(rename = "D")]
    pub degree: u64,
    pub lambda: f64,
    pub tau: f64,
    pub survivors: VertexSet,
    pub removals: Vec<Removal>,
    pub min_survivor_degree: Vec<Option<usize>>,
    pub bound: f64,
    /// `|S| D / (n λ)`.
    pub implied_c: f64,
    /// True when `C ≥ 4√t` and `|S| ≥ C n λ / D`.
    pub lemma_applies: bool,
    /// True when the lemma applies and more than `bound` vertices were removed.
    pub falsified: bool,
}

pub fn peel(family: &ColoredFamily, s: &VertexSet, c: f64) -> Result<PeelReport> {
    if !(c > 0.0) {
        return Err(Error::Usage { what: "peel", requirement: "C > 0".into() });
    }
    let (n, degree, lambda) = family.common_parameters()?;
    let t = family.t() as f64;
    let tau = c * lambda / 4.0;
    let colors: Vec<usize> = (0..family.t()).collect();
    let out = peel_threshold(family, s, &colors, tau)?;
    let size = s.len() as f64;
    let bound = 8.0 * t * size / (c * c);
    let lemma_applies =
        c + BOUND_TOL >= 4.0 * t.sqrt() && size + BOUND_TOL >= c * n as f64 * lambda / degree as f64;
    let falsified = lemma_applies && out.removals.len() as f64 > bound + BOUND_TOL;
    Ok(PeelReport {
        input_size: s.len(),
        c,
        n,
        degree,
        lambda,
        tau,
        survivors: out.survivors,
        removals: out.removals,
        min_survivor_degree: out.min_survivor_degree,
        bound,
        implied_c: size * degree as f64 / (n as f64 * lambda),
        lemma_applies,
        falsified,
    })
}

/// Per-color minimum within-W degree, compared with `|S|/(6q)` for
/// distance families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StarReport {
    pub w_size: usize,
    pub s_size: usize,
    pub min_degree: Vec<usize>,
    pub threshold: Option<f64>,
    /// `|S| - 80 t q^{d+1} / |S|`, for distance families.
    pub size_bound: Option<f64>,
    /// Whether `|S| ≥ 12 t^{1/2} q^{(d+1)/2}`.
    pub applies: Option<bool>,
    pub pass: Option<bool>,
}

pub fn star_report(family: &ColoredFamily, w: &VertexSet, s_size: usize) -> Result<StarReport> {
    for v in w.iter() {
        family.check_vertex(v)?;
    }
    if w.is_empty() {
        return Ok(StarReport {
            w_size: 0,
            s_size,
            min_degree: Vec::new(),
            threshold: None,
            size_bound: None,
            applies: None,
            pass: None,
        });
    }
    let wmask = w.mask(family.len());
    let min_degree: Vec<usize> = (0..family.t())
        .map(|c| {
            w.iter()
                .map(|v| {
                    let mut k = 0;
                    family.for_each_neighbor(v, c, |u| k += wmask[u as usize] as usize);
                    k
                })
                .min()
                .unwrap_or(0)
        })
        .collect();
    let (threshold, size_bound, pass) = match family.distance_family() {
        Some(f) => {
            let q = f.space().field().q() as f64;
            let (t, d) = (family.t() as f64, f.space().dim() as i32);
            let thr = s_size as f64 / (6.0 * q);
            let sb = s_size as f64 - 80.0 * t * q.powi(d + 1) / s_size as f64;
            let ok = min_degree.iter().all(|&m| m as f64 >= thr) && w.len() as f64 >= sb;
            (Some(thr), Some(sb), Some(ok))
        }
        None => (None, None, None),
    };
    let applies = family.distance_family().map(|f| {
        let q = f.space().field().q() as f64;
        let d = f.space().dim() as f64;
        s_size as f64 >= 12.0 * (family.t() as f64).sqrt() * q.powf((d + 1.0) / 2.0)
    });
    Ok(StarReport { w_size: w.len(), s_size, min_degree, threshold, size_bound, applies, pass })
}

/// Peels S at `|S|/(6q)` in every color, the maximal W the star bound is
/// about, and reports on it.
pub fn star_peel(family: &ColoredFamily, s: &VertexSet) -> Result<(PeelOutcome, StarReport)> {
    let f = family
        .distance_family()
        .ok_or(Error::Usage { what: "star_peel", requirement: "a distance family".into() })?;
    let q = f.space().field().q() as f64;
    let colors: Vec<usize> = (0..family.t()).collect();
    let out = peel_threshold(family, s, &colors, s.len() as f64 / (6.0 * q))?;
    let rep = star_report(family, &out.survivors, s.len())?;
    Ok((out, rep))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConjectureProbe {
    pub q: u32,
    pub d: usize,
    pub s_size: usize,
    /// `|S| / q^{(d+1)/2}`.
    pub c: f64,
    pub threshold: f64,
    pub removed: usize,
    pub conjectured_bound: f64,
    pub ratio: f64,
    /// The conjecture only speaks about C > 50.
    pub in_range: bool,
    pub within_conjecture: bool,
}

/// Peels S at `|S|/(10q)` against every nonzero distance and compares the
/// number removed with `100 C⁻² |S|`.
pub fn probe_min_degree_conjecture(family: &ColoredFamily, s: &VertexSet) -> Result<ConjectureProbe> {
    let f = family
        .distance_family()
        .ok_or(Error::Usage { what: "conjecture probe", requirement: "a distance family".into() })?;
    let field = f.space().field();
    if f.t() as u32 != field.q() - 1 {
        return Err(Error::Usage { what: "conjecture probe", requirement: "all nonzero distances".into() });
    }
    let (q, d) = (field.q(), f.space().dim());
    let size = s.len() as f64;
    let c = size / (q as f64).powf((d as f64 + 1.0) / 2.0);
    let threshold = size / (10.0 * q as f64);
    let colors: Vec<usize> = (0..family.t()).collect();
    let out = peel_threshold(family, s, &colors, threshold)?;
    let removed = out.removals.len();
    let conjectured_bound = 100.0 * size / (c * c);
    Ok(ConjectureProbe {
        q,
        d,
        s_size: s.len(),
        c,
        threshold,
        removed,
        conjectured_bound,
        ratio: if size > 0.0 { removed as f64 / size } else { 0.0 },
        in_range: c > 50.0,
        within_conjecture: removed as f64 <= conjectured_bound,
    })
}

/// A uniformly random subset of `0..n` of the given size, sorted.
pub fn random_subset(n: usize, size: usize, rng: &mut ChaCha8Rng) -> Result<VertexSet> {
    if size > n {
        return Err(Error::Usage { what: "random subset", requirement: format!("size <= {n}, got {size}") });
    }
    let picked = rand::seq::index::sample(rng, n, size);
    Ok(VertexSet::new(picked.into_iter().map(|i| i as u32).collect()))
}

/// A random D-regular graph on n vertices (D even) as a union of D/2
/// edge-disjoint random Hamiltonian cycles.
pub fn random_regular_graph(n: usize, degree: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<u32>>> {
    if degree % 2 == 1 || degree >= n || (degree > 0 && n < 3) {
        return Err(Error::Usage {
            what: "random regular graph",
            requirement: format!("even degree below n, got n={n} D={degree}"),
        });
    }
    'retry: for _ in 0..10_000 {
        let mut adj: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); n];
        for _ in 0..degree / 2 {
            let mut placed = false;
            for _ in 0..1000 {
                let mut perm: Vec<u32> = (0..n as u32).collect();
                perm.shuffle(rng);
                let clash = (0..n).any(|i| adj[perm[i] as usize].contains(&perm[(i + 1) % n]));
                if !clash {
                    for i in 0..n {
                        let (a, b) = (perm[i], perm[(i + 1) % n]);
                        adj[a as usize].insert(b);
                        adj[b as usize].insert(a);
                    }
                    placed = true;
                    break;
                }
            }
            if !placed {
                continue 'retry;
            }
        }
        return Ok(adj.into_iter().map(|s| s.into_iter().collect()).collect());
    }
    Err(Error::InvalidGraph("could not place edge-disjoint cycles".into()))
}

/// An Erdős–Rényi graph G(n, p).
pub fn random_gnp_graph(n: usize, p: f64, rng: &mut ChaCha8Rng) -> Vec<Vec<u32>> {
    let mut adj = vec![Vec::new(); n];
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                adj[u].push(v as u32);
                adj[v].push(u as u32);
            }
        }
    }
    adj
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::{FieldSpec, PointSpace, PointVec};
    use rand::SeedableRng;

    fn dist(q: u64, d: usize, radii: &[u64]) -> ColoredFamily {
        let f = Arc::new(FieldSpec::of_order(q).unwrap());
        let space = PointSpace::new(f.clone(), d).unwrap();
        let radii = radii.iter().map(|&r| f.element(r).unwrap()).collect();
        ColoredFamily::from_distance(Arc::new(DistanceGraphFamily::new(space, radii).unwrap())).unwrap()
    }

    fn idx(fam: &ColoredFamily, c: &[u64]) -> u32 {
        let f = fam.distance_family().unwrap();
        let field = f.space().field();
        let p = PointVec::new(c.iter().map(|&v| field.element(v).unwrap()).collect());
        fam.local_index(f.space().index(&p).unwrap()).unwrap()
    }

    #[test]
    fn edge_count_examples() {
        let fam = dist(3, 2, &[1]);
        let full = VertexSet::full(9);
        assert_eq!(edge_count(&fam, 0, &VertexSet::empty(), &full).unwrap(), 0);
        assert_eq!(edge_count(&fam, 0, &full, &full).unwrap(), 9 * 4);
        let x = VertexSet::new(vec![idx(&fam, &[0, 0]), idx(&fam, &[0, 1])]);
        assert_eq!(edge_count(&fam, 0, &x, &x).unwrap(), 2);
        assert!(matches!(edge_count(&fam, 3, &x, &x), Err(Error::UnknownColor { .. })));
    }

    #[test]
    fn mixing_examples() {
        let fam = dist(3, 2, &[1]);
        let full = VertexSet::full(9);
        let rep = mixing_check(&fam, 0, &full, &full).unwrap();
        assert!(rep.lhs.abs() < 1e-12 && rep.pass);
        let v = VertexSet::new(vec![4]);
        let nb = fam.neighbors(4, 0).unwrap();
        let rep = mixing_check(&fam, 0, &v, &nb).unwrap();
        assert!((rep.lhs - (4.0 - 16.0 / 9.0)).abs() < 1e-12);
        assert!(rep.pass);

        let bare = ColoredFamily::from_adjacency(vec![vec![vec![1], vec![0]]]).unwrap();
        let s = VertexSet::full(2);
        assert_eq!(mixing_check(&bare, 0, &s, &s), Err(Error::MissingCertificate(0)));
    }

    #[test]
    fn induce_examples() {
        let fam = dist(3, 2, &[1]);
        let same = fam.induce(&VertexSet::full(9)).unwrap();
        for v in 0..9 {
            assert_eq!(same.neighbors(v, 0).unwrap(), fam.neighbors(v, 0).unwrap());
        }
        let s = VertexSet::new(vec![idx(&fam, &[0, 0]), idx(&fam, &[0, 1]), idx(&fam, &[1, 1])]);
        let sub = fam.induce(&s).unwrap();
        // Brute force over the three candidate pairs.
        let pts: Vec<u64> = s.iter().map(|v| fam.host_index(v)).collect();
        let space = fam.distance_family().unwrap().space().clone();
        for (i, &a) in pts.iter().enumerate() {
            let expect = pts
                .iter()
                .filter(|&&b| b != a && space.norm_of_index(space.sub_index(a, b)).index() == 1)
                .count();
            assert_eq!(sub.degree(i as u32, 0), expect);
            assert!(sub.degree(i as u32, 0) <= fam.degree(s.as_slice()[i], 0));
        }
        assert_eq!((0..3).map(|v| sub.degree(v, 0)).collect::<Vec<_>>(), vec![1, 2, 1]);
    }

    #[test]
    fn vertex_set_algebra() {
        let a = VertexSet::new(vec![5, 1, 3, 3]);
        let b = VertexSet::new(vec![3, 4]);
        assert_eq!(a.as_slice(), &[1, 3, 5]);
        assert_eq!(a.union(&b).as_slice(), &[1, 3, 4, 5]);
        assert_eq!(a.intersection(&b).as_slice(), &[3]);
        assert_eq!(a.difference(&b).as_slice(), &[1, 5]);
    }

    #[test]
    fn explicit_family_validation() {
        assert!(ColoredFamily::from_adjacency(vec![vec![vec![1], vec![]]]).is_err());
        assert!(ColoredFamily::from_adjacency(vec![vec![vec![0]]]).is_err());
        assert!(ColoredFamily::from_adjacency(vec![vec![vec![2], vec![]]]).is_err());
    }

    #[test]
    fn full_space_peel_removes_nothing() {
        let fam = dist(5, 2, &[1, 2]);
        let rep = peel(&fam, &VertexSet::full(25), 1.0).unwrap();
        assert!(rep.removals.is_empty());
        assert_eq!(rep.survivors.len(), 25);
    }

    #[test]
    fn isolated_vertex_is_peeled() {
        let fam = dist(7, 2, &[1]);
        let space = fam.distance_family().unwrap().space().clone();
        // A clump around the origin plus a point at no distance 1 from it.
        let clump: Vec<u64> = (0..space.size()).filter(|&i| i < 12).collect();
        let far = (0..space.size())
            .rev()
            .find(|&x| clump.iter().all(|&c| space.norm_of_index(space.sub_index(x, c)).index() != 1))
            .unwrap();
        let s = VertexSet::new(clump.iter().map(|&c| c as u32).chain([far as u32]).collect());
        let out = peel_threshold(&fam, &s, &[0], 0.5).unwrap();
        assert!(out.removals.iter().any(|r| r.vertex == far as u32 && r.degree == 0));
    }

    #[test]
    fn peel_matches_random_order_fixed_point() {
        let fam = dist(7, 2, &[1, 3]);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..5 {
            let s = random_subset(49, 30, &mut rng).unwrap();
            let tau = 2.0 + trial as f64 * 0.5;
            let out = peel_threshold(&fam, &s, &[0, 1], tau).unwrap();
            // Oracle: remove any violating vertex in shuffled order until stable.
            let mut alive: Vec<u32> = s.as_slice().to_vec();
            loop {
                alive.shuffle(&mut rng);
                let cur = VertexSet::new(alive.clone());
                let bad = alive.iter().position(|&v| {
                    (0..2).any(|c| (fam.neighbors(v, c).unwrap().intersection(&cur).len() as f64) < tau)
                });
                match bad {
                    Some(i) => {
                        alive.swap_remove(i);
                    }
                    None => break,
                }
            }
            assert_eq!(out.survivors, VertexSet::new(alive));
            for (c, m) in out.min_survivor_degree.iter().enumerate() {
                if let Some(m) = m {
                    assert!(*m as f64 >= tau, "color {c}");
                }
            }
        }
    }

    #[test]
    fn gamma_properties() {
        let fam = dist(5, 2, &[1, 2]);
        assert!(gamma(&fam, &[]).unwrap().is_empty());
        assert_eq!(gamma(&fam, &[(3, 1)]).unwrap(), fam.neighbors(3, 1).unwrap());
        let a = gamma(&fam, &[(3, 1), (7, 0)]).unwrap();
        let b = gamma(&fam, &[(3, 1)]).unwrap().union(&gamma(&fam, &[(7, 0)]).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn star_report_examples() {
        let fam = dist(3, 2, &[1]);
        let rep = star_report(&fam, &VertexSet::full(9), 9).unwrap();
        assert_eq!(rep.min_degree, vec![4]);
        assert!(rep.min_degree[0] as f64 >= rep.threshold.unwrap());
        let empty = star_report(&fam, &VertexSet::empty(), 9).unwrap();
        assert!(empty.min_degree.is_empty());
    }

    #[test]
    fn conjecture_probe_full_space() {
        let f = Arc::new(FieldSpec::new(5, 1).unwrap());
        let space = PointSpace::new(f, 3).unwrap();
        let fam = ColoredFamily::from_distance(Arc::new(DistanceGraphFamily::all_distances(space).unwrap())).unwrap();
        let rep = probe_min_degree_conjecture(&fam, &VertexSet::full(125)).unwrap();
        assert_eq!(rep.removed, 0);
        assert!(!rep.in_range);
    }

    #[test]
    fn random_regular_graphs_are_regular_with_certificates() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = random_regular_graph(30, 6, &mut rng).unwrap();
        assert!(g.iter().all(|l| l.len() == 6));
        let fam = ColoredFamily::from_adjacency(vec![g]).unwrap().with_dense_certificates().unwrap();
        let cert = fam.certificate(0).unwrap();
        assert_eq!(cert.degree, 6);
        assert!(cert.lambda < 6.0);
    }
}
