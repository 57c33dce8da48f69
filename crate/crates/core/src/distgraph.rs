//! Distance graphs G_r^d as implicit Cayley graphs on (F_q^d, +).
//!
//! The connection set of G_r^d is the origin sphere of radius r; neighbors
//! of x are the translates `x + s`. Nothing larger than a sphere is
//! materialized, except the dense adjacency matrix built by
//! [`spectrum_dense`] as an independent check on [`spectrum_character`].

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_cap, Error, Result};
use crate::gf::{FieldElement, PointSpace, PointVec};

/// Largest `q^{2d-1} k` the character sweep will attempt.
pub const DEFAULT_SPECTRUM_CAP: u128 = 1 << 36;
/// Largest vertex count for the dense eigensolver.
pub const DEFAULT_DENSE_CAP: u64 = 1000;
/// Imaginary parts of character sums must vanish to this tolerance.
pub const IMAG_TOL: f64 = 1e-9;
/// Agreement tolerance between the two spectrum routes.
pub const MULTISET_TOL: f64 = 1e-6;

/// Origin-centered sphere `{s : ‖s‖ = radius}`, as sorted point indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sphere {
    pub radius: FieldElement,
    pub points: Vec<u64>,
}

impl Sphere {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn contains(&self, index: u64) -> bool {
        self.points.binary_search(&index).is_ok()
    }

    pub fn to_points(&self, space: &PointSpace) -> Vec<PointVec> {
        self.points.iter().map(|&i| space.point(i)).collect()
    }
}

/// All q origin spheres, indexed by radius index, by brute force over F_q^d.
pub fn origin_spheres(space: &PointSpace) -> Result<Vec<Sphere>> {
    space.check_enumerable()?;
    let q = space.field().q() as usize;
    let mut spheres: Vec<Sphere> = (0..q)
        .map(|r| Sphere { radius: space.field().element(r as u64).unwrap(), points: Vec::new() })
        .collect();
    for i in 0..space.size() {
        spheres[space.norm_of_index(i).index() as usize].points.push(i);
    }
    Ok(spheres)
}

/// The family `{G_r^d : r ∈ R}` over one point space.
#[derive(Clone, Debug)]
pub struct DistanceGraphFamily {
    space: PointSpace,
    radii: Vec<FieldElement>,
    spheres: Vec<Sphere>,
}

impl DistanceGraphFamily {
    pub fn new(space: PointSpace, radii: Vec<FieldElement>) -> Result<Self> {
        if space.dim() < 2 {
            return Err(Error::Usage { what: "distance family", requirement: "d >= 2".into() });
        }
        if radii.is_empty() {
            return Err(Error::Usage { what: "distance family", requirement: "at least one radius".into() });
        }
        for (i, &r) in radii.iter().enumerate() {
            if r.is_zero() {
                return Err(Error::Usage { what: "distance family", requirement: "nonzero radii".into() });
            }
            space.field().element(r.index() as u64)?;
            if radii[..i].contains(&r) {
                return Err(Error::Usage { what: "distance family", requirement: "distinct radii".into() });
            }
        }
        let all = origin_spheres(&space)?;
        let spheres = radii.iter().map(|r| all[r.index() as usize].clone()).collect();
        Ok(DistanceGraphFamily { space, radii, spheres })
    }

    /// The family with R = F_q^*.
    pub fn all_distances(space: PointSpace) -> Result<Self> {
        let radii = space.field().nonzero_elements().collect();
        Self::new(space, radii)
    }

    pub fn space(&self) -> &PointSpace {
        &self.space
    }

    pub fn radii(&self) -> &[FieldElement] {
        &self.radii
    }

    pub fn t(&self) -> usize {
        self.radii.len()
    }

    pub fn n(&self) -> u64 {
        self.space.size()
    }

    pub fn color_of(&self, r: FieldElement) -> Result<usize> {
        self.radii
            .iter()
            .position(|&x| x == r)
            .ok_or(Error::UnknownRadius(r.index()))
    }

    pub fn sphere(&self, color: usize) -> Result<&Sphere> {
        self.spheres.get(color).ok_or(Error::UnknownColor { color, t: self.t() })
    }

    /// The cached origin sphere of radius `r`.
    pub fn sphere_points(&self, r: FieldElement) -> Result<&Sphere> {
        self.sphere(self.color_of(r)?)
    }

    /// Regular degree D_r of the color-`color` graph.
    pub fn degree(&self, color: usize) -> Result<u64> {
        Ok(self.sphere(color)?.len() as u64)
    }

    /// Iterates the point indices adjacent to `x` in color `color`.
    pub fn neighbor_indices(&self, x: u64, color: usize) -> impl Iterator<Item = u64> + '_ {
        self.spheres[color].points.iter().map(move |&s| self.space.add_index(x, s))
    }

    /// `{x + s : s ∈ sphere_r}`.
    pub fn neighbors(&self, x: &PointVec, r: FieldElement) -> Result<Vec<PointVec>> {
        let color = self.color_of(r)?;
        let xi = self.space.index(x)?;
        Ok(self.neighbor_indices(xi, color).map(|i| self.space.point(i)).collect())
    }
}

/// Summary of an (n, D, λ)-graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralCertificate {
    pub n: u64,
    pub degree: u64,
    /// Largest absolute value of a nontrivial eigenvalue.
    pub lambda: f64,
    pub claimed_bound: f64,
}

/// Eigenvalues of one distance graph, indexed by character `m ∈ F_q^d`.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub certificate: SpectralCertificate,
    pub eigenvalues: Vec<f64>,
}

impl Spectrum {
    pub fn sorted(&self) -> Vec<f64> {
        let mut v = self.eigenvalues.clone();
        v.sort_by(f64::total_cmp);
        v
    }
}

fn lambda_bound(q: u32, d: usize) -> f64 {
    2.0 * (q as f64).powf((d as f64 - 1.0) / 2.0)
}

/// Eigenvalues `λ_m = Σ_{s ∈ sphere} exp(2πi Tr(⟨m, s⟩)/p)` for every m.
pub fn spectrum_character(family: &DistanceGraphFamily, color: usize) -> Result<Spectrum> {
    spectrum_character_with_cap(family, color, DEFAULT_SPECTRUM_CAP)
}

pub fn spectrum_character_with_cap(
    family: &DistanceGraphFamily,
    color: usize,
    cap: u128,
) -> Result<Spectrum> {
    let space = family.space();
    let field = space.field();
    let (q, d, k) = (field.q() as u128, space.dim() as u32, field.ext_degree() as u128);
    check_cap("q^(2d-1) k", q.pow(2 * d - 1) * k, cap)?;
    let sphere = family.sphere(color)?;
    let p = field.p() as usize;
    let traces: Vec<usize> = field.elements().map(|e| field.abs_trace(e) as usize).collect();
    let roots: Vec<(f64, f64)> = (0..p)
        .map(|j| {
            let theta = 2.0 * PI * j as f64 / p as f64;
            (theta.cos(), theta.sin())
        })
        .collect();

    let sums: Vec<(f64, f64)> = (0..space.size())
        .into_par_iter()
        .map(|m| {
            let mut counts = vec![0u64; p];
            for &s in &sphere.points {
                counts[traces[space.dot_index(m, s).index() as usize]] += 1;
            }
            counts.iter().zip(&roots).fold((0.0, 0.0), |(re, im), (&c, &(cr, ci))| {
                (re + c as f64 * cr, im + c as f64 * ci)
            })
        })
        .collect();

    let mut eigenvalues = Vec::with_capacity(sums.len());
    for (m, &(re, im)) in sums.iter().enumerate() {
        if im.abs() > IMAG_TOL {
            return Err(Error::ImaginaryResidue { index: m as u64, imag: im });
        }
        eigenvalues.push(re);
    }
    let lambda = eigenvalues[1..].iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    Ok(Spectrum {
        certificate: SpectralCertificate {
            n: space.size(),
            degree: sphere.len() as u64,
            lambda,
            claimed_bound: lambda_bound(field.q(), space.dim()),
        },
        eigenvalues,
    })
}

/// Sorted eigenvalues of the explicit adjacency matrix.
pub fn spectrum_dense(family: &DistanceGraphFamily, color: usize) -> Result<Vec<f64>> {
    spectrum_dense_with_cap(family, color, DEFAULT_DENSE_CAP)
}

pub fn spectrum_dense_with_cap(family: &DistanceGraphFamily, color: usize, cap: u64) -> Result<Vec<f64>> {
    let n = family.n();
    check_cap("dense n", n as u128, cap as u128)?;
    family.sphere(color)?;
    let n = n as usize;
    let mut adj = DMatrix::<f64>::zeros(n, n);
    for x in 0..n {
        for y in family.neighbor_indices(x as u64, color) {
            adj[(x, y as usize)] = 1.0;
        }
    }
    Ok(symmetric_eigenvalues(adj))
}

/// Sorted eigenvalues of a symmetric matrix.
pub fn symmetric_eigenvalues(m: DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// True when two eigenvalue lists agree as sorted multisets within `tol`.
pub fn multisets_agree(a: &[f64], b: &[f64], tol: f64) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    a.iter().zip(&b).all(|(x, y)| (x - y).abs() <= tol)
}

/// Clause-by-clause audit of the (n, D, λ) parameters of one distance graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NdlReport {
    pub q: u32,
    pub d: usize,
    pub r: u32,
    pub n: u64,
    #[serde(rename = "D")]
    pub degree: u64,
    pub lambda: f64,
    pub bound: f64,
    /// λ ≤ 2 q^{(d-1)/2}.
    pub lambda_ok: bool,
    /// D - q^{d-1}.
    pub degree_deviation: i64,
    /// Expected |D - q^{d-1}|: q^{(d-1)/2} for odd d, q^{(d-2)/2} for even d.
    pub expected_deviation: i64,
    pub deviation_ok: bool,
    /// (2/3) q^{d-1} ≤ D ≤ (4/3) q^{d-1}.
    pub sandwich_ok: bool,
    pub pass: bool,
}

pub fn verify_ndl(family: &DistanceGraphFamily, color: usize, cert: &SpectralCertificate) -> Result<NdlReport> {
    let space = family.space();
    let q = space.field().q();
    let d = space.dim();
    let main = (q as i64).pow(d as u32 - 1);
    let expected = if d % 2 == 1 {
        (q as i64).pow((d as u32 - 1) / 2)
    } else {
        (q as i64).pow((d as u32 - 2) / 2)
    };
    let degree = cert.degree as i64;
    let deviation = degree - main;
    let bound = lambda_bound(q, d);
    let lambda_ok = cert.lambda <= bound + MULTISET_TOL;
    let deviation_ok = deviation.abs() == expected;
    let sandwich_ok = 3 * degree >= 2 * main && 3 * degree <= 4 * main;
    Ok(NdlReport {
        q,
        d,
        r: family.radii()[color].index(),
        n: cert.n,
        degree: cert.degree,
        lambda: cert.lambda,
        bound,
        lambda_ok,
        degree_deviation: deviation,
        expected_deviation: expected,
        deviation_ok,
        sandwich_ok,
        pass: lambda_ok && deviation_ok && sandwich_ok,
    })
}
