//! Point–sphere incidences in F_q^d.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distgraph::{origin_spheres, Sphere};
use crate::error::{check_cap, Error, Result};
use crate::gf::{FieldElement, PointSpace};

/// Largest number of elementary checks either counting strategy performs.
pub const DEFAULT_INCIDENCE_CAP: u128 = 1 << 34;

/// A set of spheres `(center, radius)`, centers given as point indices.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SphereSet {
    spheres: Vec<(u64, FieldElement)>,
}

impl SphereSet {
    /// Sorts and rejects duplicate pairs.
    pub fn new(mut spheres: Vec<(u64, FieldElement)>) -> Result<Self> {
        spheres.sort();
        if spheres.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Usage { what: "SphereSet", requirement: "distinct (center, radius) pairs".into() });
        }
        Ok(SphereSet { spheres })
    }

    pub fn len(&self) -> usize {
        self.spheres.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spheres.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, FieldElement)> + '_ {
        self.spheres.iter().copied()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CountStrategy {
    /// Test every (point, sphere) pair.
    Pairs,
    /// Walk every sphere's points against a membership bitmap of X.
    SpherePoints,
}

fn check_points(space: &PointSpace, xs: &[u64], ys: &SphereSet) -> Result<()> {
    let n = space.size();
    let q = space.field().q();
    for x in xs.iter().copied().chain(ys.iter().map(|(c, _)| c)) {
        if x >= n {
            return Err(Error::UnknownVertex { vertex: x as usize, n: n as usize });
        }
    }
    if let Some((_, r)) = ys.iter().find(|(_, r)| r.index() >= q) {
        return Err(Error::ElementOutOfRange { index: r.index() as u64, q });
    }
    Ok(())
}

/// `I(X, Y)`. X is a duplicate-free list of point indices.
pub fn count_incidences(space: &PointSpace, xs: &[u64], ys: &SphereSet, strategy: CountStrategy) -> Result<u64> {
    count_incidences_with_cap(space, xs, ys, strategy, DEFAULT_INCIDENCE_CAP)
}

pub fn count_incidences_with_cap(
    space: &PointSpace,
    xs: &[u64],
    ys: &SphereSet,
    strategy: CountStrategy,
    cap: u128,
) -> Result<u64> {
    check_points(space, xs, ys)?;
    match strategy {
        CountStrategy::Pairs => {
            check_cap("|X| |Y|", xs.len() as u128 * ys.len() as u128, cap)?;
            Ok(ys
                .spheres
                .par_iter()
                .map(|&(c, r)| xs.iter().filter(|&&x| space.norm_of_index(space.sub_index(x, c)) == r).count() as u64)
                .sum())
        }
        CountStrategy::SpherePoints => {
            let spheres = origin_spheres(space)?;
            count_with_spheres(space, xs, ys, &spheres, cap)
        }
    }
}

/// The sphere-walk strategy against precomputed origin spheres.
pub fn count_with_spheres(
    space: &PointSpace,
    xs: &[u64],
    ys: &SphereSet,
    spheres: &[Sphere],
    cap: u128,
) -> Result<u64> {
    let work: u128 = ys.iter().map(|(_, r)| spheres[r.index() as usize].len() as u128).sum();
    check_cap("sphere points", work, cap)?;
    let mut mask = vec![false; space.size() as usize];
    for &x in xs {
        mask[x as usize] = true;
    }
    Ok(ys
        .spheres
        .par_iter()
        .map(|&(c, r)| {
            spheres[r.index() as usize]
                .points
                .iter()
                .filter(|&&s| mask[space.add_index(c, s) as usize])
                .count() as u64
        })
        .sum())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IncidenceReport {
    pub x_size: usize,
    pub y_size: usize,
    pub incidences: u64,
    pub lhs: f64,
    pub rhs: f64,
    pub exponent: f64,
    pub slack: f64,
    pub pass: bool,
}

/// `|I(X,Y) - |X||Y|/q| ≤ q^{d/2} √(|X||Y|)`. An alternate exponent
/// replaces d/2 for probing stronger bounds.
pub fn bound_check_general(
    space: &PointSpace,
    xs: &[u64],
    ys: &SphereSet,
    exponent: Option<f64>,
) -> Result<IncidenceReport> {
    let incidences = count_incidences(space, xs, ys, CountStrategy::SpherePoints)?;
    Ok(bound_report(space, xs.len(), ys.len(), incidences, exponent))
}

pub fn bound_report(space: &PointSpace, x_size: usize, y_size: usize, incidences: u64, exponent: Option<f64>) -> IncidenceReport {
    let q = space.field().q() as f64;
    let exponent = exponent.unwrap_or(space.dim() as f64 / 2.0);
    let prod = x_size as f64 * y_size as f64;
    let lhs = (incidences as f64 - prod / q).abs();
    let rhs = q.powf(exponent) * prod.sqrt();
    IncidenceReport {
        x_size,
        y_size,
        incidences,
        lhs,
        rhs,
        exponent,
        slack: rhs - lhs,
        pass: lhs <= rhs + 1e-6,
    }
}
