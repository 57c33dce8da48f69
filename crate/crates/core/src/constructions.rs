//! Extremal configurations for distances between two sets, in the
//! coordinates of the alternating form `Q` (equivalent to `‖·‖`).
//!
//! Every generator pairs the first `2k` coordinates as `(a_1, a_1, …)` so
//! those terms cancel in `Q(x - y)`, leaving a form in the tail only.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_cap, Error, Result};
use crate::gf::point::alternating_form;
use crate::gf::{select_mu, FieldElement, PointSpace};

/// Largest `|X| |Y|` [`count_sr`] will enumerate.
pub const DEFAULT_PAIR_CAP: u128 = 1 << 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstructionKind {
    Avoiding,
    Saturating,
    Ikr,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DistanceForm {
    Norm,
    Q(FieldElement),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstructionOutput {
    pub kind: ConstructionKind,
    pub q: u32,
    pub d: usize,
    pub slab_k: usize,
    pub r: FieldElement,
    pub mu: FieldElement,
    /// Point indices, sorted.
    pub x: Vec<u64>,
    pub y: Vec<u64>,
}

fn check_odd_dim(space: &PointSpace, what: &'static str) -> Result<()> {
    let d = space.dim();
    if d < 3 || d.is_multiple_of(2) {
        return Err(Error::Usage { what, requirement: format!("odd d >= 3, got {d}") });
    }
    space.check_enumerable()
}

fn paired(coords: &[FieldElement], k: usize) -> bool {
    (0..k).all(|i| coords[2 * i] == coords[2 * i + 1])
}

fn select(space: &PointSpace, pred: impl Fn(&[FieldElement]) -> bool + Sync) -> Vec<u64> {
    (0..space.size())
        .into_par_iter()
        .filter(|&i| pred(&space.point(i).coords))
        .collect()
}

/// Tail value `x_1² - x_2² + … - x_{m}²` over an even number of coordinates.
fn signed_squares(space: &PointSpace, xs: &[FieldElement]) -> FieldElement {
    let f = space.field();
    xs.iter().enumerate().fold(f.zero(), |acc, (i, &c)| {
        let sq = f.square(c);
        if i % 2 == 0 { f.add(acc, sq) } else { f.sub(acc, sq) }
    })
}

/// `R^× = {r - s : η(s) = η(μ)}`.
pub fn avoided_values(space: &PointSpace, r: FieldElement, mu: FieldElement) -> Vec<FieldElement> {
    let f = space.field();
    let want = f.legendre(mu);
    let mut v: Vec<FieldElement> = f.nonzero_elements().filter(|&s| f.legendre(s) == want).map(|s| f.sub(r, s)).collect();
    v.sort();
    v
}

/// Zero-distance pair: no `(x, y) ∈ X × Y` has `Q(x - y) = r`.
///
/// X asks that the tail value `t_1` avoid both `R^×` and `r` itself; when
/// `t_1 = r` the pair with `y = x_{d-2k}` would otherwise sit at distance r.
pub fn construct_avoiding(space: &PointSpace, slab_k: usize, r: FieldElement) -> Result<ConstructionOutput> {
    construct_avoiding_with(space, slab_k, r, true)
}

/// As [`construct_avoiding`]; `exclude_r = false` drops the `t_1 ≠ r`
/// condition.
pub fn construct_avoiding_with(
    space: &PointSpace,
    slab_k: usize,
    r: FieldElement,
    exclude_r: bool,
) -> Result<ConstructionOutput> {
    check_odd_dim(space, "avoiding construction")?;
    let d = space.dim();
    if slab_k < 1 || 2 * slab_k + 1 >= d {
        return Err(Error::Usage { what: "avoiding construction", requirement: format!("1 <= k < (d-1)/2, got k={slab_k}, d={d}") });
    }
    if r.is_zero() {
        return Err(Error::Usage { what: "avoiding construction", requirement: "nonzero r".into() });
    }
    let f = space.field();
    let mu = select_mu(d, f)?;
    let avoided = avoided_values(space, r, mu);
    let k = slab_k;
    let x = select(space, |c| {
        if !paired(c, k) {
            return false;
        }
        let t1 = signed_squares(space, &c[2 * k..d - 1]);
        avoided.binary_search(&t1).is_err() && !(exclude_r && t1 == r)
    });
    let y = select(space, |c| paired(c, k) && c[2 * k..d - 1].iter().all(|e| e.is_zero()) && !c[d - 1].is_zero());
    Ok(ConstructionOutput { kind: ConstructionKind::Avoiding, q: f.q(), d, slab_k: k, r, mu, x, y })
}

/// Full-distance pair: every `(x, y) ∈ X × Y` has `Q(x - y) = r`. Without
/// an explicit r the smallest admissible one is used.
pub fn construct_saturating(space: &PointSpace, slab_k: usize, r: Option<FieldElement>) -> Result<ConstructionOutput> {
    check_odd_dim(space, "saturating construction")?;
    let d = space.dim();
    if slab_k < 1 || 2 * slab_k + 1 > d {
        return Err(Error::Usage { what: "saturating construction", requirement: format!("1 <= k <= (d-1)/2, got k={slab_k}, d={d}") });
    }
    let f = space.field();
    let mu = select_mu(d, f)?;
    let special = 2 * slab_k + 1 == d;
    let admissible = |r: FieldElement| !r.is_zero() && (!special || f.legendre(r) == f.legendre(mu));
    let r = match r {
        Some(r) if admissible(r) => r,
        Some(r) => {
            return Err(Error::Usage {
                what: "saturating construction",
                requirement: format!("nonzero r with η(r) = η(μ) when k = (d-1)/2, got r={r}"),
            })
        }
        None => f.nonzero_elements().find(|&r| admissible(r)).expect("odd q has both square classes"),
    };
    let k = slab_k;
    let x = select(space, |c| paired(c, k) && alternating_form(f, &c[2 * k..], mu) == r);
    let y = select(space, |c| paired(c, k) && c[2 * k..].iter().all(|e| e.is_zero()));
    Ok(ConstructionOutput { kind: ConstructionKind::Saturating, q: f.q(), d, slab_k: k, r, mu, x, y })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IkrReport {
    pub x_size: usize,
    /// `(r, S_r(X, X))` for every r with `η(r) = -η(μ)`.
    pub counts: Vec<(FieldElement, u64)>,
    pub pass: bool,
}

/// `X = {(a_1, a_1, …, a_m, a_m, b)}` with `m = (d-1)/2`; here
/// `Q(x - y) = μ (x_d - y_d)²`, so radii of the other square class never
/// occur.
pub fn construct_ikr(space: &PointSpace) -> Result<(ConstructionOutput, IkrReport)> {
    check_odd_dim(space, "IKR construction")?;
    let d = space.dim();
    let f = space.field();
    let mu = select_mu(d, f)?;
    let m = (d - 1) / 2;
    let x = select(space, |c| paired(c, m));
    let mut counts = Vec::new();
    for r in f.nonzero_elements().filter(|&r| f.legendre(r) == -f.legendre(mu)) {
        counts.push((r, count_sr(space, &x, &x, r, DistanceForm::Q(mu))?));
    }
    let report = IkrReport { x_size: x.len(), pass: counts.iter().all(|&(_, c)| c == 0), counts };
    let r = report.counts.first().map_or(f.one(), |&(r, _)| r);
    let out = ConstructionOutput { kind: ConstructionKind::Ikr, q: f.q(), d, slab_k: m, r, mu, y: x.clone(), x };
    Ok((out, report))
}

fn form_value(space: &PointSpace, index: u64, form: DistanceForm) -> FieldElement {
    match form {
        DistanceForm::Norm => space.norm_of_index(index),
        DistanceForm::Q(mu) => alternating_form(space.field(), &space.point(index).coords, mu),
    }
}

/// `|S_r(X, Y)|`: ordered pairs at form-distance r.
pub fn count_sr(space: &PointSpace, xs: &[u64], ys: &[u64], r: FieldElement, form: DistanceForm) -> Result<u64> {
    count_sr_with_cap(space, xs, ys, r, form, DEFAULT_PAIR_CAP)
}

pub fn count_sr_with_cap(
    space: &PointSpace,
    xs: &[u64],
    ys: &[u64],
    r: FieldElement,
    form: DistanceForm,
    cap: u128,
) -> Result<u64> {
    check_cap("|X| |Y|", xs.len() as u128 * ys.len() as u128, cap)?;
    if let Some(&v) = xs.iter().chain(ys).find(|&&v| v >= space.size()) {
        return Err(Error::UnknownVertex { vertex: v as usize, n: space.size() as usize });
    }
    // Tabulating the form once keeps the pair loop to one lookup.
    let table: Option<Vec<FieldElement>> = (space.size() <= 1 << 22)
        .then(|| (0..space.size()).into_par_iter().map(|i| form_value(space, i, form)).collect());
    Ok(xs
        .par_iter()
        .map(|&x| {
            ys.iter()
                .filter(|&&y| {
                    let diff = space.sub_index(x, y);
                    let v = match &table {
                        Some(t) => t[diff as usize],
                        None => form_value(space, diff, form),
                    };
                    v == r
                })
                .count() as u64
        })
        .sum())
}

/// Exact verification of one construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstructionReport {
    pub kind: ConstructionKind,
    pub x_size: usize,
    pub y_size: usize,
    pub expected_y_size: Option<u64>,
    pub s_r: u64,
    pub expected_s_r: u64,
    /// `|X| / q^{d-k}` (avoiding) or `|X| / q^{d-k-1}` (saturating).
    pub x_ratio: f64,
    pub product: u64,
    /// `4 q^{d+1}`, the largest product a zero-distance pair can have.
    pub product_bound: f64,
    pub pass: bool,
}

pub fn verify_construction(space: &PointSpace, out: &ConstructionOutput) -> Result<ConstructionReport> {
    let q = out.q as u64;
    let (d, k) = (out.d as u32, out.slab_k as u32);
    let s_r = count_sr(space, &out.x, &out.y, out.r, DistanceForm::Q(out.mu))?;
    let product = out.x.len() as u64 * out.y.len() as u64;
    let (expected_y, expected_s_r, scale) = match out.kind {
        ConstructionKind::Avoiding => (Some(q.pow(k + 1) - q.pow(k)), 0, q.pow(d - k)),
        ConstructionKind::Saturating => (Some(q.pow(k)), product, q.pow(d - k - 1)),
        ConstructionKind::Ikr => (Some(q.pow(d.div_ceil(2))), 0, q.pow(d.div_ceil(2))),
    };
    let y_ok = expected_y.is_none_or(|e| e == out.y.len() as u64);
    Ok(ConstructionReport {
        kind: out.kind,
        x_size: out.x.len(),
        y_size: out.y.len(),
        expected_y_size: expected_y,
        s_r,
        expected_s_r,
        x_ratio: out.x.len() as f64 / scale as f64,
        product,
        product_bound: 4.0 * (q as f64).powi(d as i32 + 1),
        pass: y_ok && s_r == expected_s_r && !out.x.is_empty(),
    })
}

/// Both sides of `||S_r| - (D_r/n)|X||Y|| ≤ 2q^{(d-1)/2} √(|X||Y|)`, where
/// `D_r/n = q^{-1} + ε` is read off the form's sphere size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoSetAudit {
    pub s_r: u64,
    pub density: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

pub fn audit_two_set_bound(
    space: &PointSpace,
    xs: &[u64],
    ys: &[u64],
    r: FieldElement,
    form: DistanceForm,
) -> Result<TwoSetAudit> {
    let s_r = count_sr(space, xs, ys, r, form)?;
    let sphere = (0..space.size()).filter(|&i| form_value(space, i, form) == r).count();
    let density = sphere as f64 / space.size() as f64;
    let prod = xs.len() as f64 * ys.len() as f64;
    let lhs = (s_r as f64 - density * prod).abs();
    let rhs = 2.0 * (space.field().q() as f64).powf((space.dim() as f64 - 1.0) / 2.0) * prod.sqrt();
    Ok(TwoSetAudit { s_r, density, lhs, rhs, pass: lhs <= rhs + 1e-6 })
}
