use std::collections::BTreeMap;
use std::sync::Arc;

use super::{FieldElement, FieldSpec};
use crate::error::{check_cap, Error, Result};

/// Largest `q^d` any operation will enumerate.
pub const DEFAULT_POINT_CAP: u64 = 1 << 22;

/// A vector in F_q^d.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PointVec {
    pub coords: Vec<FieldElement>,
}

impl PointVec {
    pub fn new(coords: Vec<FieldElement>) -> Self {
        PointVec { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

/// `‖x‖ = x_1^2 + … + x_d^2`.
pub fn norm_form(field: &FieldSpec, x: &PointVec) -> FieldElement {
    x.coords
        .iter()
        .fold(field.zero(), |acc, &c| field.add(acc, field.square(c)))
}

/// The coefficient μ of the last square in the alternating form, chosen so
/// the form is equivalent to `‖·‖`: η(μ) = -1 when d ≡ 3 and q ≡ 3 (mod 4),
/// otherwise η(μ) = +1. Ties go to the smallest index.
pub fn select_mu(d: usize, field: &FieldSpec) -> Result<FieldElement> {
    if d < 3 || d.is_multiple_of(2) {
        return Err(Error::Usage {
            what: "select_mu",
            requirement: format!("odd d >= 3, got {d}"),
        });
    }
    let wanted = if d % 4 == 3 && field.q() % 4 == 3 { -1 } else { 1 };
    Ok(field
        .nonzero_elements()
        .find(|&e| field.legendre(e) == wanted)
        .expect("both square classes are nonempty for odd q"))
}

/// `Q(x) = x_1^2 - x_2^2 + … + x_{d-2}^2 - x_{d-1}^2 + μ x_d^2` for odd d.
pub fn quadratic_form_q(field: &FieldSpec, x: &PointVec, mu: FieldElement) -> Result<FieldElement> {
    let d = x.dim();
    if d.is_multiple_of(2) {
        return Err(Error::Usage {
            what: "quadratic_form_q",
            requirement: format!("odd dimension, got {d}"),
        });
    }
    Ok(alternating_form(field, &x.coords, mu))
}

/// Alternating-sign sum of squares with the last square scaled by `last`.
/// Works for any length; shared with the construction generators.
pub(crate) fn alternating_form(
    field: &FieldSpec,
    coords: &[FieldElement],
    last: FieldElement,
) -> FieldElement {
    let Some((&tail, head)) = coords.split_last() else {
        return field.zero();
    };
    let mut acc = field.mul(last, field.square(tail));
    for (i, &c) in head.iter().enumerate() {
        let sq = field.square(c);
        acc = if i % 2 == 0 { field.add(acc, sq) } else { field.sub(acc, sq) };
    }
    acc
}

/// Exact histogram of `form` over every point of F_q^d.
pub fn form_value_distribution<F>(space: &PointSpace, form: F) -> Result<BTreeMap<FieldElement, u64>>
where
    F: Fn(&PointVec) -> FieldElement,
{
    let mut hist = BTreeMap::new();
    for x in space.points()? {
        *hist.entry(form(&x)).or_insert(0) += 1;
    }
    Ok(hist)
}

/// The space F_q^d with a lexicographic point indexing: the first
/// coordinate is the most significant base-q digit.
#[derive(Clone, Debug)]
pub struct PointSpace {
    field: Arc<FieldSpec>,
    d: usize,
    n: u64,
    cap: u64,
}

impl PointSpace {
    pub fn new(field: Arc<FieldSpec>, d: usize) -> Result<Self> {
        Self::with_cap(field, d, DEFAULT_POINT_CAP)
    }

    pub fn with_cap(field: Arc<FieldSpec>, d: usize, cap: u64) -> Result<Self> {
        if d == 0 {
            return Err(Error::Usage { what: "PointSpace", requirement: "d >= 1".into() });
        }
        let n = (field.q() as u64)
            .checked_pow(d as u32)
            .ok_or(Error::CapExceeded { what: "q^d", size: u128::MAX, cap: cap as u128 })?;
        Ok(PointSpace { field, d, n, cap })
    }

    pub fn field(&self) -> &Arc<FieldSpec> {
        &self.field
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Number of points, q^d.
    pub fn size(&self) -> u64 {
        self.n
    }

    pub fn cap(&self) -> u64 {
        self.cap
    }

    /// Fails unless q^d is within the enumeration cap.
    pub fn check_enumerable(&self) -> Result<()> {
        check_cap("q^d", self.n as u128, self.cap as u128)
    }

    pub fn point(&self, mut index: u64) -> PointVec {
        let q = self.field.q() as u64;
        let mut coords = vec![FieldElement::ZERO; self.d];
        for c in coords.iter_mut().rev() {
            *c = FieldElement((index % q) as u32);
            index /= q;
        }
        PointVec { coords }
    }

    pub fn index(&self, x: &PointVec) -> Result<u64> {
        if x.dim() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: x.dim() });
        }
        let q = self.field.q() as u64;
        let mut idx = 0u64;
        for &c in &x.coords {
            if c.index() as u64 >= q {
                return Err(Error::ElementOutOfRange { index: c.index() as u64, q: q as u32 });
            }
            idx = idx * q + c.index() as u64;
        }
        Ok(idx)
    }

    pub fn points(&self) -> Result<impl Iterator<Item = PointVec> + '_> {
        self.check_enumerable()?;
        Ok((0..self.n).map(move |i| self.point(i)))
    }

    #[inline]
    fn digitwise(&self, mut a: u64, mut b: u64, op: impl Fn(FieldElement, FieldElement) -> FieldElement) -> u64 {
        let q = self.field.q() as u64;
        let mut place = 1u64;
        let mut out = 0u64;
        for _ in 0..self.d {
            let x = FieldElement((a % q) as u32);
            let y = FieldElement((b % q) as u32);
            out += op(x, y).index() as u64 * place;
            a /= q;
            b /= q;
            place *= q;
        }
        out
    }

    /// Index of `point(a) + point(b)`.
    #[inline]
    pub fn add_index(&self, a: u64, b: u64) -> u64 {
        self.digitwise(a, b, |x, y| self.field.add(x, y))
    }

    /// Index of `point(a) - point(b)`.
    #[inline]
    pub fn sub_index(&self, a: u64, b: u64) -> u64 {
        self.digitwise(a, b, |x, y| self.field.sub(x, y))
    }

    pub fn neg_index(&self, a: u64) -> u64 {
        self.sub_index(0, a)
    }

    pub fn add(&self, x: &PointVec, y: &PointVec) -> PointVec {
        PointVec {
            coords: x.coords.iter().zip(&y.coords).map(|(&a, &b)| self.field.add(a, b)).collect(),
        }
    }

    pub fn sub(&self, x: &PointVec, y: &PointVec) -> PointVec {
        PointVec {
            coords: x.coords.iter().zip(&y.coords).map(|(&a, &b)| self.field.sub(a, b)).collect(),
        }
    }

    pub fn norm(&self, x: &PointVec) -> FieldElement {
        norm_form(&self.field, x)
    }

    pub fn norm_of_index(&self, mut index: u64) -> FieldElement {
        let q = self.field.q() as u64;
        let mut acc = self.field.zero();
        for _ in 0..self.d {
            let c = FieldElement((index % q) as u32);
            acc = self.field.add(acc, self.field.square(c));
            index /= q;
        }
        acc
    }

    /// Standard bilinear form `Σ m_i s_i`.
    pub fn dot_index(&self, mut a: u64, mut b: u64) -> FieldElement {
        let q = self.field.q() as u64;
        let mut acc = self.field.zero();
        for _ in 0..self.d {
            let x = FieldElement((a % q) as u32);
            let y = FieldElement((b % q) as u32);
            acc = self.field.add(acc, self.field.mul(x, y));
            a /= q;
            b /= q;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(q: u64, d: usize) -> PointSpace {
        PointSpace::new(Arc::new(FieldSpec::of_order(q).unwrap()), d).unwrap()
    }

    fn pt(f: &FieldSpec, c: &[u64]) -> PointVec {
        PointVec::new(c.iter().map(|&v| f.element(v).unwrap()).collect())
    }

    #[test]
    fn norm_examples() {
        let s = space(3, 2);
        let f = s.field().clone();
        assert_eq!(norm_form(&f, &pt(&f, &[0, 0])).index(), 0);
        assert_eq!(norm_form(&f, &pt(&f, &[1, 0])).index(), 1);
        assert_eq!(norm_form(&f, &pt(&f, &[2, 2])).index(), 2);
    }

    #[test]
    fn mu_selection() {
        let f3 = FieldSpec::new(3, 1).unwrap();
        assert_eq!(select_mu(3, &f3).unwrap().index(), 2);
        assert_eq!(select_mu(5, &f3).unwrap().index(), 1);
        let f5 = FieldSpec::new(5, 1).unwrap();
        assert_eq!(f5.legendre(select_mu(3, &f5).unwrap()), 1);
        assert!(select_mu(4, &f3).is_err());
    }

    #[test]
    fn q_form_examples() {
        let f = FieldSpec::new(3, 1).unwrap();
        let mu = f.element(2).unwrap();
        assert_eq!(quadratic_form_q(&f, &pt(&f, &[0, 0, 0]), mu).unwrap().index(), 0);
        assert_eq!(quadratic_form_q(&f, &pt(&f, &[1, 1, 0]), mu).unwrap().index(), 0);
        assert_eq!(quadratic_form_q(&f, &pt(&f, &[0, 0, 1]), mu).unwrap().index(), 2);
        assert!(quadratic_form_q(&f, &pt(&f, &[0, 1]), mu).is_err());
    }

    #[test]
    fn norm_distribution_on_f3_squared() {
        let s = space(3, 2);
        let f = s.field().clone();
        let hist = form_value_distribution(&s, |x| norm_form(&f, x)).unwrap();
        let got: Vec<_> = hist.iter().map(|(k, v)| (k.index(), *v)).collect();
        assert_eq!(got, vec![(0, 1), (1, 4), (2, 4)]);
    }

    #[test]
    fn q_form_matches_norm_distribution() {
        for q in [3, 7] {
            let s = space(q, 3);
            let f = s.field().clone();
            let mu = select_mu(3, &f).unwrap();
            let a = form_value_distribution(&s, |x| norm_form(&f, x)).unwrap();
            let b = form_value_distribution(&s, |x| quadratic_form_q(&f, x, mu).unwrap()).unwrap();
            assert_eq!(a, b, "q = {q}");
            assert_eq!(a.values().sum::<u64>(), s.size());
        }
    }

    #[test]
    fn index_arithmetic_matches_vector_arithmetic() {
        let s = space(9, 2);
        for a in (0..81).step_by(7) {
            for b in (0..81).step_by(5) {
                let (x, y) = (s.point(a), s.point(b));
                assert_eq!(s.point(s.add_index(a, b)), s.add(&x, &y));
                assert_eq!(s.point(s.sub_index(a, b)), s.sub(&x, &y));
                assert_eq!(s.index(&x).unwrap(), a);
            }
            assert_eq!(s.norm_of_index(a), s.norm(&s.point(a)));
        }
    }

    #[test]
    fn enumeration_cap() {
        let s = PointSpace::with_cap(Arc::new(FieldSpec::new(3, 1).unwrap()), 5, 100).unwrap();
        assert!(matches!(s.points().err(), Some(Error::CapExceeded { .. })));
    }
}
