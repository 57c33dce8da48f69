//! Dense polynomials over F_p, coefficient lists low-to-high.

pub(crate) fn digits(mut value: u64, base: u32, len: usize) -> Vec<u32> {
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        out.push((value % base as u64) as u32);
        value /= base as u64;
    }
    out
}

pub(crate) fn from_digits(coeffs: &[u32], base: u32) -> u64 {
    coeffs
        .iter()
        .rev()
        .fold(0u64, |acc, &c| acc * base as u64 + c as u64)
}

fn trim(mut a: Vec<u32>) -> Vec<u32> {
    while a.last() == Some(&0) {
        a.pop();
    }
    a
}

/// Remainder of `a` modulo the monic polynomial `m`.
pub(crate) fn rem_monic(a: &[u32], m: &[u32], p: u32) -> Vec<u32> {
    let p64 = p as u64;
    let deg_m = m.len() - 1;
    let mut r: Vec<u64> = a.iter().map(|&c| c as u64).collect();
    if r.len() <= deg_m {
        return trim(r.into_iter().map(|c| c as u32).collect());
    }
    for top in (deg_m..r.len()).rev() {
        let c = r[top] % p64;
        if c == 0 {
            continue;
        }
        let shift = top - deg_m;
        for (j, &mj) in m.iter().enumerate() {
            let sub = c * mj as u64 % p64;
            r[shift + j] = (r[shift + j] + p64 - sub) % p64;
        }
    }
    r.truncate(deg_m);
    trim(r.into_iter().map(|c| (c % p64) as u32).collect())
}

/// Product of `a` and `b` reduced modulo the monic `m`.
pub(crate) fn mul_mod(a: &[u32], b: &[u32], m: &[u32], p: u32) -> Vec<u32> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let p64 = p as u64;
    let mut prod = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            prod[i + j] = (prod[i + j] + x as u64 * y as u64) % p64;
        }
    }
    let prod: Vec<u32> = prod.into_iter().map(|c| c as u32).collect();
    rem_monic(&prod, m, p)
}

/// True when the monic polynomial `f` (degree ≥ 1) has no monic factor of
/// degree between 1 and deg(f)/2. For degree ≤ 3 this is the root test.
pub(crate) fn is_irreducible(f: &[u32], p: u32) -> bool {
    let deg = f.len() - 1;
    for e in 1..=deg / 2 {
        let count = (p as u64).pow(e as u32);
        for j in 0..count {
            let mut g = digits(j, p, e);
            g.push(1);
            if rem_monic(f, &g, p).is_empty() {
                return false;
            }
        }
    }
    true
}

/// The monic irreducible polynomial of degree `k` over F_p whose
/// coefficient list `(c_0, …, c_{k-1})` is lexicographically smallest.
pub(crate) fn smallest_irreducible(p: u32, k: u32) -> Vec<u32> {
    let k = k as usize;
    let count = (p as u64).pow(k as u32);
    for j in 0..count {
        // c_0 is the most significant digit of j so that j orders the
        // coefficient lists lexicographically.
        let mut f: Vec<u32> = digits(j, p, k);
        f.reverse();
        f.push(1);
        if is_irreducible(&f, p) {
            return f;
        }
    }
    unreachable!("an irreducible polynomial of every degree exists over F_p")
}
