//! Exact arithmetic in GF(p^k) for odd p, plus vectors in F_q^d and the
//! quadratic forms defined on them.
//!
//! An element is stored as its canonical index `c_0 + c_1 p + … + c_{k-1} p^{k-1}`
//! where `c_0 + c_1 x + …` is its residue modulo the field's defining
//! polynomial. Index order is the fixed enumeration order used for every
//! tie-break in the crate.

pub(crate) mod point;
pub(crate) mod poly;

pub use point::{
    form_value_distribution, norm_form, quadratic_form_q, select_mu, PointSpace, PointVec,
};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest field order accepted by [`FieldSpec::new`].
pub const DEFAULT_FIELD_CAP: u64 = 1 << 20;

// Extension fields up to this order get precomputed add/mul tables.
const TABLE_LIMIT: u32 = 256;

/// An element of some [`FieldSpec`], identified by its canonical index.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FieldElement(u32);

impl FieldElement {
    pub const ZERO: FieldElement = FieldElement(0);

    pub fn index(self) -> u32 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Binary and unary field operations, for [`FieldSpec::arith`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Inv,
    Pow(u64),
}

#[derive(Clone)]
struct Tables {
    add: Vec<u32>,
    mul: Vec<u32>,
}

/// The field GF(p^k).
#[derive(Clone)]
pub struct FieldSpec {
    p: u32,
    k: u32,
    q: u32,
    modulus: Vec<u32>,
    tables: Option<Tables>,
}

impl fmt::Debug for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldSpec")
            .field("p", &self.p)
            .field("k", &self.k)
            .field("q", &self.q)
            .field("modulus", &self.modulus)
            .finish()
    }
}

impl PartialEq for FieldSpec {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.k == other.k
    }
}

impl Eq for FieldSpec {}

pub(crate) fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Splits an odd prime power `q` into `(p, k)`.
pub fn factor_prime_power(q: u64) -> Result<(u64, u32)> {
    if q < 3 {
        return Err(Error::NotPrimePower(q));
    }
    let p = (2..=q).find(|d| q.is_multiple_of(*d)).unwrap_or(q);
    let mut rest = q;
    let mut k = 0;
    while rest.is_multiple_of(p) {
        rest /= p;
        k += 1;
    }
    if rest != 1 || p == 2 {
        return Err(Error::NotPrimePower(q));
    }
    Ok((p, k))
}

impl FieldSpec {
    /// Builds GF(p^k) with the default size cap.
    pub fn new(p: u64, k: u32) -> Result<Self> {
        Self::with_cap(p, k, DEFAULT_FIELD_CAP)
    }

    /// Builds GF(q) for an odd prime power q.
    pub fn of_order(q: u64) -> Result<Self> {
        let (p, k) = factor_prime_power(q)?;
        Self::new(p, k)
    }

    pub fn with_cap(p: u64, k: u32, cap: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::ZeroDegree);
        }
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if p == 2 {
            return Err(Error::EvenCharacteristic(p));
        }
        let q = (p as u128).checked_pow(k).unwrap_or(u128::MAX);
        if q > cap as u128 || q > u32::MAX as u128 {
            return Err(Error::FieldTooLarge { p, k, cap });
        }
        let (p, q) = (p as u32, q as u32);
        let modulus = poly::smallest_irreducible(p, k);
        let mut spec = FieldSpec { p, k, q, modulus, tables: None };
        if k > 1 && q <= TABLE_LIMIT {
            spec.tables = Some(spec.build_tables());
        }
        Ok(spec)
    }

    fn build_tables(&self) -> Tables {
        let q = self.q as usize;
        let mut add = vec![0u32; q * q];
        let mut mul = vec![0u32; q * q];
        for a in 0..self.q {
            for b in 0..self.q {
                let (x, y) = (FieldElement(a), FieldElement(b));
                add[a as usize * q + b as usize] = self.add_slow(x, y).0;
                mul[a as usize * q + b as usize] = self.mul_slow(x, y).0;
            }
        }
        Tables { add, mul }
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn ext_degree(&self) -> u32 {
        self.k
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    /// Defining polynomial, low-to-high, including the leading 1.
    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }

    pub fn zero(&self) -> FieldElement {
        FieldElement(0)
    }

    pub fn one(&self) -> FieldElement {
        FieldElement(1)
    }

    /// Element with the given canonical index.
    pub fn element(&self, index: u64) -> Result<FieldElement> {
        if index >= self.q as u64 {
            return Err(Error::ElementOutOfRange { index, q: self.q });
        }
        Ok(FieldElement(index as u32))
    }

    /// Image of an integer in the prime subfield.
    pub fn from_int(&self, v: i64) -> FieldElement {
        FieldElement(v.rem_euclid(self.p as i64) as u32)
    }

    pub fn from_coeffs(&self, coeffs: &[u32]) -> Result<FieldElement> {
        if coeffs.len() != self.k as usize {
            return Err(Error::BadEncoding(format!(
                "expected {} coefficients, got {}",
                self.k,
                coeffs.len()
            )));
        }
        if let Some(&c) = coeffs.iter().find(|&&c| c >= self.p) {
            return Err(Error::BadEncoding(format!("coefficient {c} not reduced mod {}", self.p)));
        }
        Ok(FieldElement(poly::from_digits(coeffs, self.p) as u32))
    }

    /// Little-endian coefficient vector of length k.
    pub fn coeffs(&self, a: FieldElement) -> Vec<u32> {
        poly::digits(a.0 as u64, self.p, self.k as usize)
    }

    pub fn elements(&self) -> impl Iterator<Item = FieldElement> {
        (0..self.q).map(FieldElement)
    }

    pub fn nonzero_elements(&self) -> impl Iterator<Item = FieldElement> {
        (1..self.q).map(FieldElement)
    }

    fn add_slow(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        let (mut x, mut y, mut place, mut out) = (a.0, b.0, 1u32, 0u32);
        for _ in 0..self.k {
            let s = (x % self.p + y % self.p) % self.p;
            out += s * place;
            x /= self.p;
            y /= self.p;
            place = place.wrapping_mul(self.p);
        }
        FieldElement(out)
    }

    fn mul_slow(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        let prod = poly::mul_mod(&self.coeffs(a), &self.coeffs(b), &self.modulus, self.p);
        FieldElement(poly::from_digits(&prod, self.p) as u32)
    }

    #[inline]
    pub fn add(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        if self.k == 1 {
            let s = a.0 + b.0;
            return FieldElement(if s >= self.p { s - self.p } else { s });
        }
        match &self.tables {
            Some(t) => FieldElement(t.add[a.0 as usize * self.q as usize + b.0 as usize]),
            None => self.add_slow(a, b),
        }
    }

    #[inline]
    pub fn neg(&self, a: FieldElement) -> FieldElement {
        if self.k == 1 {
            return FieldElement(if a.0 == 0 { 0 } else { self.p - a.0 });
        }
        let c: Vec<u32> = self
            .coeffs(a)
            .into_iter()
            .map(|c| if c == 0 { 0 } else { self.p - c })
            .collect();
        FieldElement(poly::from_digits(&c, self.p) as u32)
    }

    #[inline]
    pub fn sub(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        if self.k == 1 {
            return FieldElement(if a.0 >= b.0 { a.0 - b.0 } else { a.0 + self.p - b.0 });
        }
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        if self.k == 1 {
            return FieldElement((a.0 as u64 * b.0 as u64 % self.p as u64) as u32);
        }
        match &self.tables {
            Some(t) => FieldElement(t.mul[a.0 as usize * self.q as usize + b.0 as usize]),
            None => self.mul_slow(a, b),
        }
    }

    pub fn square(&self, a: FieldElement) -> FieldElement {
        self.mul(a, a)
    }

    pub fn pow(&self, a: FieldElement, mut e: u64) -> FieldElement {
        let mut base = a;
        let mut acc = self.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    pub fn inv(&self, a: FieldElement) -> Result<FieldElement> {
        if a.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(self.pow(a, self.q as u64 - 2))
    }

    pub fn div(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement> {
        Ok(self.mul(a, self.inv(b)?))
    }

    /// Dispatches one field operation. Unary operations ignore `b`.
    pub fn arith(&self, a: FieldElement, b: FieldElement, op: ArithOp) -> Result<FieldElement> {
        match op {
            ArithOp::Add => Ok(self.add(a, b)),
            ArithOp::Sub => Ok(self.sub(a, b)),
            ArithOp::Mul => Ok(self.mul(a, b)),
            ArithOp::Div => self.div(a, b),
            ArithOp::Neg => Ok(self.neg(a)),
            ArithOp::Inv => self.inv(a),
            ArithOp::Pow(e) => Ok(self.pow(a, e)),
        }
    }

    /// Quadratic character: 0 at zero, +1 on nonzero squares, -1 otherwise.
    pub fn legendre(&self, x: FieldElement) -> i8 {
        if x.is_zero() {
            0
        } else if self.pow(x, (self.q as u64 - 1) / 2) == self.one() {
            1
        } else {
            -1
        }
    }

    /// Absolute trace to F_p, returned as a residue in `[0, p)`.
    pub fn abs_trace(&self, x: FieldElement) -> u32 {
        let mut acc = self.zero();
        let mut frob = x;
        for _ in 0..self.k {
            acc = self.add(acc, frob);
            frob = self.pow(frob, self.p as u64);
        }
        debug_assert!(acc.0 < self.p, "trace must land in the prime subfield");
        acc.0
    }
}
