//! Exact arithmetic in `Z/p^nZ` for odd primes `p`.
//!
//! Everything here works on `u64` residues with `u128` intermediates, which is
//! exact as long as the modulus stays below `2^62`. The [`PrimePowerModulus`]
//! constructor enforces that bound.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest modulus accepted by [`PrimePowerModulus::new`] (exclusive).
pub const MAX_MODULUS: u64 = 1 << 62;

#[inline]
pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

#[inline]
pub fn add_mod(a: u64, b: u64, m: u64) -> u64 {
    let s = a + b;
    if s >= m {
        s - m
    } else {
        s
    }
}

#[inline]
pub fn sub_mod(a: u64, b: u64, m: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        a + m - b
    }
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Reduces a signed integer into `[0, m)`.
#[inline]
pub fn reduce_signed(x: i128, m: u64) -> u64 {
    x.rem_euclid(m as i128) as u64
}

/// Inverse of `x` modulo `m` by the extended Euclidean algorithm, for any `m >= 1`.
pub fn inverse_mod(x: u64, m: u64) -> Option<u64> {
    if m == 1 {
        return Some(0);
    }
    let (mut old_r, mut r) = (x as i128 % m as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let quot = old_r / r;
        (old_r, r) = (r, old_r - quot * r);
        (old_s, s) = (s, old_s - quot * s);
    }
    (old_r == 1).then(|| reduce_signed(old_s, m))
}

/// p-adic valuation of a nonzero integer; `u32::MAX` for zero.
pub fn valuation(mut x: u64, p: u64) -> u32 {
    if x == 0 {
        return u32::MAX;
    }
    let mut v = 0;
    while x.is_multiple_of(p) {
        x /= p;
        v += 1;
    }
    v
}

/// Deterministic Miller–Rabin, exact for every `u64`.
pub fn is_prime(n: u64) -> bool {
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &b in &BASES {
        if n.is_multiple_of(b) {
            return n == b;
        }
    }
    let mut d = n - 1;
    let mut r = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        r += 1;
    }
    'witness: for &a in &BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..r {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// An odd prime power `q = p^n` together with `phi(q)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PrimePowerModulus {
    p: u64,
    n: u32,
    q: u64,
    phi: u64,
}

impl PrimePowerModulus {
    pub fn new(p: u64, n: u32) -> Result<Self> {
        if p < 3 || !is_prime(p) {
            return Err(Error::InvalidModulus(format!("{p} is not an odd prime")));
        }
        if n == 0 {
            return Err(Error::InvalidModulus("exponent must be at least 1".into()));
        }
        let mut q = 1u64;
        for _ in 0..n {
            q = q
                .checked_mul(p)
                .filter(|&q| q < MAX_MODULUS)
                .ok_or_else(|| Error::InvalidModulus(format!("{p}^{n} exceeds 2^62")))?;
        }
        Ok(Self {
            p,
            n,
            q,
            phi: q / p * (p - 1),
        })
    }

    #[inline]
    pub fn p(&self) -> u64 {
        self.p
    }

    #[inline]
    pub fn n(&self) -> u32 {
        self.n
    }

    #[inline]
    pub fn q(&self) -> u64 {
        self.q
    }

    #[inline]
    pub fn phi(&self) -> u64 {
        self.phi
    }

    /// `p^(n/2)`, the normalisation of the sums.
    pub fn sqrt_q(&self) -> f64 {
        (self.q as f64).sqrt()
    }

    /// The modulus `p^(n-1)`, or `None` when `n = 1`.
    pub fn lowered(&self) -> Option<Self> {
        (self.n > 1).then(|| Self {
            p: self.p,
            n: self.n - 1,
            q: self.q / self.p,
            phi: self.phi / self.p,
        })
    }

    #[inline]
    pub fn is_unit(&self, x: u64) -> bool {
        !x.is_multiple_of(self.p)
    }

    pub fn residue(&self, value: i64) -> Residue {
        Residue {
            value: reduce_signed(value as i128, self.q),
            modulus: *self,
        }
    }

    /// Units of `Z/qZ` in increasing order.
    pub fn units(&self) -> impl Iterator<Item = u64> + '_ {
        (1..self.q).filter(move |x| x % self.p != 0)
    }
}

impl fmt::Display for PrimePowerModulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}^{}", self.p, self.n)
    }
}

/// An element of `Z/qZ`, stored by its least non-negative representative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Residue {
    value: u64,
    modulus: PrimePowerModulus,
}

impl Residue {
    #[inline]
    pub fn value(&self) -> u64 {
        self.value
    }

    #[inline]
    pub fn modulus(&self) -> PrimePowerModulus {
        self.modulus
    }

    pub fn is_unit(&self) -> bool {
        self.modulus.is_unit(self.value)
    }

    pub fn mul(&self, other: &Residue) -> Residue {
        debug_assert_eq!(self.modulus, other.modulus);
        Residue {
            value: mul_mod(self.value, other.value, self.modulus.q),
            modulus: self.modulus,
        }
    }

    pub fn neg(&self) -> Residue {
        Residue {
            value: sub_mod(0, self.value, self.modulus.q),
            modulus: self.modulus,
        }
    }
}

impl fmt::Display for Residue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} mod {}", self.value, self.modulus.q)
    }
}

pub fn mod_inverse(x: Residue) -> Result<Residue> {
    let m = x.modulus;
    if !m.is_unit(x.value) {
        return Err(Error::NotInvertible {
            value: x.value,
            modulus: m.q,
            index: None,
        });
    }
    let value = inverse_mod(x.value, m.q).expect("unit has an inverse");
    Ok(Residue { value, modulus: m })
}

/// Inverts every entry of `xs` modulo `q` with a single extended-gcd call
/// (prefix products, then a backward sweep).
pub fn batch_inverse_raw(xs: &[u64], q: u64) -> std::result::Result<Vec<u64>, usize> {
    if xs.is_empty() {
        return Ok(Vec::new());
    }
    let mut prefix = Vec::with_capacity(xs.len());
    let mut acc = 1u64;
    for &x in xs {
        acc = mul_mod(acc, x, q);
        prefix.push(acc);
    }
    let Some(mut inv) = inverse_mod(acc, q) else {
        // locate the first non-invertible factor
        let bad = xs
            .iter()
            .position(|&x| inverse_mod(x, q).is_none())
            .unwrap_or(0);
        return Err(bad);
    };
    let mut out = vec![0u64; xs.len()];
    for i in (1..xs.len()).rev() {
        out[i] = mul_mod(inv, prefix[i - 1], q);
        inv = mul_mod(inv, xs[i], q);
    }
    out[0] = inv;
    Ok(out)
}

pub fn batch_inverse(xs: &[Residue]) -> Result<Vec<Residue>> {
    let Some(first) = xs.first() else {
        return Ok(Vec::new());
    };
    let m = first.modulus;
    if xs.iter().any(|x| x.modulus != m) {
        return Err(Error::PreconditionViolated(
            "batch_inverse needs a common modulus".into(),
        ));
    }
    if let Some(index) = xs.iter().position(|x| !m.is_unit(x.value)) {
        return Err(Error::NotInvertible {
            value: xs[index].value,
            modulus: m.q,
            index: Some(index),
        });
    }
    let raw: Vec<u64> = xs.iter().map(|x| x.value).collect();
    let inv = batch_inverse_raw(&raw, m.q).map_err(|index| Error::NotInvertible {
        value: raw[index],
        modulus: m.q,
        index: Some(index),
    })?;
    Ok(inv
        .into_iter()
        .map(|value| Residue { value, modulus: m })
        .collect())
}

/// Jacobi symbol `(x/m)` for odd `m >= 1`.
pub fn jacobi_symbol(x: i64, m: u64) -> i8 {
    assert!(m % 2 == 1, "jacobi symbol needs an odd modulus");
    let mut a = reduce_signed(x as i128, m);
    let mut n = m;
    let mut sign = 1i8;
    while a != 0 {
        while a.is_multiple_of(2) {
            a /= 2;
            if n % 8 == 3 || n % 8 == 5 {
                sign = -sign;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            sign = -sign;
        }
        a %= n;
    }
    if n == 1 {
        sign
    } else {
        0
    }
}

/// Square root modulo an odd prime by Tonelli–Shanks.
///
/// Returns the root in `{1, ..., (p-1)/2}` for a nonzero residue, `Some(0)`
/// when `p | a`, and `None` for a non-residue.
pub fn sqrt_mod_p(a: i64, p: u64) -> Option<u64> {
    let a = reduce_signed(a as i128, p);
    if a == 0 {
        return Some(0);
    }
    if pow_mod(a, (p - 1) / 2, p) != 1 {
        return None;
    }
    let root = if p % 4 == 3 {
        pow_mod(a, (p + 1) / 4, p)
    } else {
        let mut s = 0;
        let mut odd = p - 1;
        while odd.is_multiple_of(2) {
            odd /= 2;
            s += 1;
        }
        let z = (2..p)
            .find(|&z| pow_mod(z, (p - 1) / 2, p) == p - 1)
            .expect("a non-residue exists for odd p");
        let mut m = s;
        let mut c = pow_mod(z, odd, p);
        let mut t = pow_mod(a, odd, p);
        let mut r = pow_mod(a, odd.div_ceil(2), p);
        while t != 1 {
            let mut i = 0;
            let mut t2 = t;
            while t2 != 1 {
                t2 = mul_mod(t2, t2, p);
                i += 1;
            }
            let b = pow_mod(c, 1 << (m - i - 1), p);
            m = i;
            c = mul_mod(b, b, p);
            t = mul_mod(t, c, p);
            r = mul_mod(r, b, p);
        }
        r
    };
    Some(root.min(p - root))
}

/// Which construction [`sqrt_mod_prime_power`] uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SqrtMethod {
    /// Newton/Hensel lifting of the root modulo `p`.
    HenselLift,
    /// Truncated binomial series for `sqrt(1 + x)` with `x` in `pZ`.
    PadicSeries,
}

/// Square root of a unit modulo `p^n`.
///
/// The returned root is the lift of the canonical root modulo `p` (the one in
/// `{1, ..., (p-1)/2}`), so both methods give the same residue.
pub fn sqrt_mod_prime_power(a: Residue, method: SqrtMethod) -> Result<Option<Residue>> {
    let m = a.modulus;
    if !m.is_unit(a.value) {
        return Err(Error::NotCoprime {
            value: a.value,
            p: m.p,
        });
    }
    let root = match method {
        SqrtMethod::HenselLift => sqrt_unit_hensel(a.value, &m),
        SqrtMethod::PadicSeries => {
            let coeffs = padic_sqrt_coeffs_raw(&m)?;
            sqrt_unit_series(a.value, &m, &coeffs)
        }
    };
    Ok(root.map(|value| Residue { value, modulus: m }))
}

/// Hensel/Newton square root of a unit `a` modulo `q`; `None` for non-residues.
pub fn sqrt_unit_hensel(a: u64, m: &PrimePowerModulus) -> Option<u64> {
    let q = m.q;
    let b = sqrt_mod_p(a as i64 % m.p as i64, m.p)?;
    debug_assert!(b != 0);
    let mut r = b;
    // Newton doubles the precision each step.
    let mut prec = 1u32;
    while prec < m.n {
        let f = sub_mod(mul_mod(r, r, q), a % q, q);
        let inv = inverse_mod(mul_mod(2, r, q), q).expect("2r is a unit");
        r = sub_mod(r, mul_mod(f, inv, q), q);
        prec *= 2;
    }
    Some(r)
}

/// Square root of a unit through `b * sum_m c'_m (b^-2 p k)^m` where `a = b^2 + pk`.
pub fn sqrt_unit_series(a: u64, m: &PrimePowerModulus, coeffs: &[u64]) -> Option<u64> {
    let q = m.q;
    let b = sqrt_mod_p((a % m.p) as i64, m.p)?;
    // a - b^2 is divisible by p; pk reduced mod q is all we need
    let pk = reduce_signed(a as i128 - (b as i128) * (b as i128), q);
    let b_inv = inverse_mod(b, q).expect("b is a unit");
    let y = mul_mod(mul_mod(b_inv, b_inv, q), pk, q);
    let mut sum = 0u64;
    let mut y_pow = 1u64;
    for &c in coeffs {
        sum = add_mod(sum, mul_mod(c, y_pow, q), q);
        y_pow = mul_mod(y_pow, y, q);
    }
    Some(mul_mod(b, sum, q))
}

fn padic_sqrt_coeffs_raw(m: &PrimePowerModulus) -> Result<Vec<u64>> {
    let n = m.n as u64;
    if m.p + 5 < 2 * n {
        return Err(Error::PrecisionUnsupported { p: m.p, n: m.n });
    }
    let q = m.q;
    // binom(1/2, j) = (-1)^(j-1) Cat(j-1) / 2^(2j-1) for j >= 1; the Catalan
    // numbers come from their convolution recurrence so no division by j occurs.
    let terms = m.n as usize;
    let mut catalan = vec![0u64; terms.max(1)];
    catalan[0] = 1;
    for j in 1..terms {
        let mut c = 0u64;
        for i in 0..j {
            c = add_mod(c, mul_mod(catalan[i], catalan[j - 1 - i], q), q);
        }
        catalan[j] = c;
    }
    let half = inverse_mod(2, q).expect("q is odd");
    let quarter = mul_mod(half, half, q);
    let mut coeffs = Vec::with_capacity(terms);
    coeffs.push(1 % q);
    let mut scale = half; // 2^-(2j-1)
    for j in 1..terms {
        let mut c = mul_mod(catalan[j - 1], scale, q);
        if j % 2 == 0 {
            c = sub_mod(0, c, q);
        }
        coeffs.push(c);
        scale = mul_mod(scale, quarter, q);
    }
    Ok(coeffs)
}

/// The coefficients `c'_0, ..., c'_(n-1)` of the truncated series for
/// `sqrt(1 + x)`, reduced modulo `q`.
pub fn padic_sqrt_coeffs(m: &PrimePowerModulus) -> Result<Vec<Residue>> {
    Ok(padic_sqrt_coeffs_raw(m)?
        .into_iter()
        .map(|value| Residue { value, modulus: *m })
        .collect())
}

/// A polynomial with integer coefficients, constant term first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct IntPolynomial {
    coeffs: Vec<i64>,
}

impl IntPolynomial {
    pub fn new(mut coeffs: Vec<i64>) -> Self {
        while coeffs.last() == Some(&0) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    /// `X^2 - (pi + 1) X + pi = (X - 1)(X - pi)`.
    pub fn split_quadratic(pi: i64) -> Self {
        Self::new(vec![pi, -(pi + 1), 1])
    }

    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| c * i as i64)
                .collect(),
        )
    }

    /// `f(x) mod m` by Horner's rule.
    pub fn eval_mod(&self, x: u64, m: u64) -> u64 {
        let x = x % m;
        self.coeffs.iter().rev().fold(0u64, |acc, &c| {
            add_mod(mul_mod(acc, x, m), reduce_signed(c as i128, m), m)
        })
    }
}

/// All roots of `f` modulo `p^k`, sorted, found by lifting the roots modulo `p`
/// one power of `p` at a time.
pub fn hensel_lift_roots(f: &IntPolynomial, p: u64, k: u32) -> Result<Vec<u64>> {
    if f.is_zero() {
        return Err(Error::DegeneratePolynomial);
    }
    if k == 0 {
        return Err(Error::PreconditionViolated("target exponent must be >= 1".into()));
    }
    let target = PrimePowerModulus::new(p, k)?;
    let df = f.derivative();

    let mut roots: Vec<u64> = (0..p).filter(|&x| f.eval_mod(x, p) == 0).collect();
    let mut pj = p;
    for _ in 1..k {
        let next = pj * p;
        let mut lifted = Vec::with_capacity(roots.len());
        for &x0 in &roots {
            let fx = f.eval_mod(x0, next);
            let dfx = df.eval_mod(x0, p);
            if dfx != 0 {
                // f(x0 + pj t) = f(x0) + pj t f'(x0)  (mod pj * p)
                let c = fx / pj;
                let t = mul_mod(sub_mod(0, c % p, p), inverse_mod(dfx, p).unwrap(), p);
                lifted.push(x0 + pj * t);
            } else if fx == 0 {
                lifted.extend((0..p).map(|t| x0 + pj * t));
            }
        }
        roots = lifted;
        pj = next;
    }
    debug_assert_eq!(pj, target.q());
    roots.sort_unstable();
    Ok(roots)
}

/// Number of roots of `X^2 - (pi+1) X + pi` modulo `p^n` when `p | pi - 1`,
/// from the closed-form census.
pub fn count_quadratic_roots_closed(pi: i64, m: &PrimePowerModulus) -> Result<u64> {
    let p = m.p;
    let d = reduce_signed(pi as i128 - 1, m.q);
    let ell = valuation(d, p).min(m.n);
    if ell == 0 {
        return Err(Error::PreconditionViolated(format!(
            "{p} does not divide pi - 1 = {}",
            pi as i128 - 1
        )));
    }
    let n = m.n;
    let half = n / 2;
    let count = if n.is_multiple_of(2) {
        if ell < half {
            2 * p.pow(ell)
        } else {
            p.pow(half)
        }
    } else if ell <= (n - 1) / 2 {
        2 * p.pow(ell)
    } else {
        p.pow((n - 1) / 2)
    };
    Ok(count)
}
