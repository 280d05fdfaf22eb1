//! Complete and partial Kloosterman sums modulo `p^n`, the polygonal path
//! through the partial sums, and the completion toolkit (step function and
//! its discrete Fourier coefficients).
//!
//! All sums are normalised by `p^(n/2)`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::modular::{
    batch_inverse_raw, inverse_mod, jacobi_symbol, mul_mod, reduce_signed, sqrt_unit_hensel,
    PrimePowerModulus,
};
use crate::summation::ComplexSum;

/// Number of units inverted per batch when streaming partial sums.
pub const INVERSION_BLOCK: usize = 1024;

/// `e(r/q) = exp(2 pi i r / q)` for a residue `r` already reduced mod `q`.
#[inline]
pub fn e_ratio(r: u64, q: u64) -> Complex64 {
    let (s, c) = (TAU * (r as f64 / q as f64)).sin_cos();
    Complex64::new(c, s)
}

/// `e(x) = exp(2 pi i x)` evaluated on the fractional part of `x`.
#[inline]
pub fn e_real(x: f64) -> Complex64 {
    let (s, c) = (TAU * x.rem_euclid(1.0)).sin_cos();
    Complex64::new(c, s)
}

/// `(a, b)` together with the modulus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KloostermanParams {
    pub modulus: PrimePowerModulus,
    pub a: u64,
    pub b: u64,
}

impl KloostermanParams {
    pub fn new(modulus: PrimePowerModulus, a: i64, b: i64) -> Self {
        Self {
            modulus,
            a: reduce_signed(a as i128, modulus.q()),
            b: reduce_signed(b as i128, modulus.q()),
        }
    }

    /// Path operations need `a` and `b` to be units.
    pub fn require_units(&self) -> Result<()> {
        let p = self.modulus.p();
        for v in [self.a, self.b] {
            if v % p == 0 {
                return Err(Error::NotCoprime { value: v, p });
            }
        }
        Ok(())
    }
}

/// `x_j`, the `j`-th unit in `1..=q` (1-based).
#[inline]
pub fn unit_at(j: u64, p: u64) -> u64 {
    j + (j - 1) / (p - 1)
}

/// Normalised complete sum by direct summation over the units.
pub fn kl_naive(params: &KloostermanParams) -> Complex64 {
    let m = params.modulus;
    let q = m.q();
    let mut acc = ComplexSum::new();
    let mut block = Vec::with_capacity(INVERSION_BLOCK);
    let flush = |block: &mut Vec<u64>, acc: &mut ComplexSum| {
        let inv = batch_inverse_raw(block, q).expect("units are invertible");
        for (&x, &xi) in block.iter().zip(&inv) {
            let r = (mul_mod(params.a, x, q) + mul_mod(params.b, xi, q)) % q;
            acc.add(e_ratio(r, q));
        }
        block.clear();
    };
    for x in m.units() {
        block.push(x);
        if block.len() == INVERSION_BLOCK {
            flush(&mut block, &mut acc);
        }
    }
    flush(&mut block, &mut acc);
    acc.value() / m.sqrt_q()
}

/// Whether the closed form applies: `n >= 2` and `p > 2n - 5`.
pub fn closed_form_supported(m: &PrimePowerModulus) -> bool {
    m.n() >= 2 && m.p() + 5 > 2 * m.n() as u64
}

/// `2 (s/p^n) cos(4 pi s / p^n + theta)` for a given square root `s` of the argument.
pub fn closed_form_value(s: u64, m: &PrimePowerModulus) -> f64 {
    let q = m.q();
    let sign = jacobi_symbol(s as i64, q) as f64;
    let angle = TAU * ((2 * (s % q)) % q) as f64 / q as f64;
    let shifted = m.n() % 2 == 1 && m.p() % 4 == 3;
    let c = if shifted { -angle.sin() } else { angle.cos() };
    2.0 * sign * c
}

/// `Kl(c, 1)` for `c` coprime to `p`, with the canonical root.
fn closed_unit(c: u64, m: &PrimePowerModulus) -> f64 {
    match sqrt_unit_hensel(c, m) {
        None => 0.0,
        Some(s) => closed_form_value(s, m),
    }
}

/// Closed-form evaluation for `n >= 2`, via `Kl(a, b) = Kl(ab, 1)`.
pub fn kl_closed(params: &KloostermanParams) -> Result<f64> {
    let m = params.modulus;
    if !closed_form_supported(&m) {
        return Err(Error::UnsupportedRegime(format!(
            "closed form needs n >= 2 and p > 2n - 5 (got {m})"
        )));
    }
    let p = m.p();
    let (a_unit, b_unit) = (!params.a.is_multiple_of(p), !params.b.is_multiple_of(p));
    if !a_unit && !b_unit {
        return Err(Error::UnsupportedRegime(
            "closed form needs a or b coprime to p".into(),
        ));
    }
    if a_unit != b_unit {
        // exactly one of a, b divisible by p: a Ramanujan sum of order p^n, n >= 2
        return Ok(0.0);
    }
    Ok(closed_unit(mul_mod(params.a, params.b, m.q()), &m))
}

/// The real complete sum, by the closed form where it applies and by direct
/// summation otherwise.
pub fn kl_complete(params: &KloostermanParams) -> f64 {
    match kl_closed(params) {
        Ok(v) => v,
        Err(_) => kl_naive(params).re,
    }
}

/// One vertex of the Kloosterman path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathPoint {
    pub j: u64,
    pub x: u64,
    pub value: Complex64,
}

/// Streams `z_1, ..., z_phi(q)` in order, inverting units a block at a time.
pub struct PartialSums {
    params: KloostermanParams,
    next_x: u64,
    j: u64,
    acc: ComplexSum,
    block: Vec<u64>,
    block_inv: Vec<u64>,
    pos: usize,
    norm: f64,
}

impl PartialSums {
    fn refill(&mut self) {
        let m = self.params.modulus;
        let (p, q) = (m.p(), m.q());
        self.block.clear();
        while self.block.len() < INVERSION_BLOCK && self.next_x < q {
            if !self.next_x.is_multiple_of(p) {
                self.block.push(self.next_x);
            }
            self.next_x += 1;
        }
        self.block_inv = batch_inverse_raw(&self.block, q).expect("units are invertible");
        self.pos = 0;
    }
}

impl Iterator for PartialSums {
    type Item = PathPoint;

    fn next(&mut self) -> Option<PathPoint> {
        if self.pos == self.block.len() {
            self.refill();
            if self.block.is_empty() {
                return None;
            }
        }
        let q = self.params.modulus.q();
        let x = self.block[self.pos];
        let xi = self.block_inv[self.pos];
        self.pos += 1;
        self.j += 1;
        let r = (mul_mod(self.params.a, x, q) + mul_mod(self.params.b, xi, q)) % q;
        self.acc.add(e_ratio(r, q));
        Some(PathPoint {
            j: self.j,
            x,
            value: self.acc.value() / self.norm,
        })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.params.modulus.phi() - self.j) as usize;
        (left, Some(left))
    }
}

impl ExactSizeIterator for PartialSums {}

pub fn partial_sums_stream(params: &KloostermanParams) -> Result<PartialSums> {
    params.require_units()?;
    Ok(PartialSums {
        params: *params,
        next_x: 1,
        j: 0,
        acc: ComplexSum::new(),
        block: Vec::new(),
        block_inv: Vec::new(),
        pos: 0,
        norm: params.modulus.sqrt_q(),
    })
}

/// Segment index `j = ceil((phi - 1) t)`, clamped to `1..=phi-1`.
#[inline]
pub fn segment_index(t: f64, phi: u64) -> u64 {
    (((phi - 1) as f64 * t).ceil() as u64).clamp(1, phi - 1)
}

/// Linear interpolation on segment `j` between `z_j` and `z_(j+1)`.
#[inline]
pub fn interpolate(t: f64, j: u64, phi: u64, zj: Complex64, zj1: Complex64) -> Complex64 {
    let span = (phi - 1) as f64;
    let alpha = (zj1 - zj) * span;
    alpha * (t - (j - 1) as f64 / span) + zj
}

fn check_unit_interval(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::DomainError(format!("t = {t} is outside [0, 1]")))
    }
}

/// The full path, materialised.
#[derive(Debug, Clone)]
pub struct KloostermanPath {
    pub params: KloostermanParams,
    pub points: Vec<PathPoint>,
}

impl KloostermanPath {
    pub fn new(params: &KloostermanParams) -> Result<Self> {
        Ok(Self {
            params: *params,
            points: partial_sums_stream(params)?.collect(),
        })
    }

    pub fn eval(&self, t: f64) -> Result<Complex64> {
        check_unit_interval(t)?;
        let phi = self.params.modulus.phi();
        let j = segment_index(t, phi);
        let zj = self.points[j as usize - 1].value;
        let zj1 = self.points[j as usize].value;
        Ok(interpolate(t, j, phi, zj, zj1))
    }

    /// `alpha_j = (phi - 1)(z_(j+1) - z_j)`.
    pub fn slope(&self, j: u64) -> Complex64 {
        let span = (self.params.modulus.phi() - 1) as f64;
        (self.points[j as usize].value - self.points[j as usize - 1].value) * span
    }

    pub fn endpoint(&self) -> Complex64 {
        self.points.last().expect("phi(q) >= 2").value
    }
}

/// `Kl_{p^n}(t; (a, b))`, streaming only up to the segment that contains `t`.
pub fn path_eval(t: f64, params: &KloostermanParams) -> Result<Complex64> {
    check_unit_interval(t)?;
    let phi = params.modulus.phi();
    let j = segment_index(t, phi);
    let mut stream = partial_sums_stream(params)?.skip(j as usize - 1);
    let zj = stream.next().expect("j < phi").value;
    let zj1 = stream.next().expect("j + 1 <= phi").value;
    Ok(interpolate(t, j, phi, zj, zj1))
}

/// Vertex coordinates of the path, in order.
pub fn path_polyline(params: &KloostermanParams) -> Result<Vec<(f64, f64)>> {
    Ok(partial_sums_stream(params)?
        .map(|pt| (pt.value.re, pt.value.im))
        .collect())
}

/// Number of integers `x` in the step function's range `1 <= x <= x_k(t)`,
/// where `k` is the block of `t` and `x_k(t) = phi t + k - 1`.
pub fn step_cutoff(t: f64, m: &PrimePowerModulus) -> u64 {
    let blocks = m.q() / m.p();
    let k = ((t * blocks as f64).ceil() as u64).clamp(1, blocks);
    let x = m.phi() as f64 * t + (k - 1) as f64;
    // guard against x_k(1) = q - 1 landing just below an integer
    let rounded = x.round();
    let x = if (x - rounded).abs() < 1e-9 { rounded } else { x.floor() };
    (x.max(0.0) as u64).min(m.q() - 1)
}

/// Geometric sum `sum_{x=1}^{count} e(h x / q)`.
fn geometric_sum(h: u64, count: u64, q: u64) -> Complex64 {
    if h == 0 {
        return Complex64::new(count as f64, 0.0);
    }
    let step = e_ratio(h, q);
    let end = e_ratio(mul_mod(h, count % q, q), q);
    step * (end - 1.0) / (step - 1.0)
}

/// Discrete Fourier coefficient of the step function's range:
/// `p^(-n/2) sum_{1 <= x <= x_k(t)} e(h x / q)`, in closed form.
pub fn fourier_alpha(h: i64, t: f64, m: &PrimePowerModulus) -> Complex64 {
    let q = m.q();
    geometric_sum(reduce_signed(h as i128, q), step_cutoff(t, m), q) / m.sqrt_q()
}

/// `t` for `h = 0`, else `(e(h t) - 1) / (2 pi i h)`.
pub fn beta_coeff(h: i64, t: f64) -> Complex64 {
    if h == 0 {
        return Complex64::new(t, 0.0);
    }
    (e_real(h as f64 * t) - 1.0) / Complex64::new(0.0, 2.0 * PI * h as f64)
}

/// How [`completed_step`] evaluates the step function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepMethod {
    /// Sum the incomplete Kloosterman sum term by term.
    Direct,
    /// Combine complete sums `Kl(a - h, b)` with the coefficients `fourier_alpha`.
    Completion,
}

/// The step function `p^(-n/2) sum^x_{1 <= x <= x_k(t)} e((a x + b xbar)/q)`.
pub fn completed_step(t: f64, params: &KloostermanParams, method: StepMethod) -> Result<Complex64> {
    params.require_units()?;
    check_unit_interval(t)?;
    let m = params.modulus;
    let q = m.q();
    let cutoff = step_cutoff(t, &m);
    match method {
        StepMethod::Direct => {
            let mut acc = ComplexSum::new();
            for x in (1..=cutoff).filter(|&x| m.is_unit(x)) {
                let xi = inverse_mod(x, q).expect("unit");
                let r = (mul_mod(params.a, x, q) + mul_mod(params.b, xi, q)) % q;
                acc.add(e_ratio(r, q));
            }
            Ok(acc.value() / m.sqrt_q())
        }
        StepMethod::Completion => {
            let half = ((q - 1) / 2) as i64;
            let mut acc = ComplexSum::new();
            for h in -half..=half {
                let shifted = KloostermanParams::new(m, params.a as i64 - h, params.b as i64);
                let kl = kl_complete(&shifted);
                if kl != 0.0 {
                    let hr = reduce_signed(h as i128, q);
                    acc.add(geometric_sum(hr, cutoff, q) * kl);
                }
            }
            // one p^(n/2) from alpha, one from the completion
            Ok(acc.value() / q as f64)
        }
    }
}

/// Precomputed tables for evaluating many paths that share `b` and the
/// modulus: the units in order, `b * xbar mod q` for each, and `e(r/q)` for
/// every residue `r`.
#[derive(Debug, Clone)]
pub struct PathKernel {
    modulus: PrimePowerModulus,
    b: u64,
    units: Vec<u64>,
    b_inv: Vec<u64>,
    twiddle: Vec<Complex64>,
}

/// Largest modulus for which [`PathKernel`] builds its tables.
pub const KERNEL_MAX_MODULUS: u64 = 1 << 24;

impl PathKernel {
    pub fn new(modulus: PrimePowerModulus, b: u64) -> Result<Self> {
        let q = modulus.q();
        if q > KERNEL_MAX_MODULUS {
            return Err(Error::ResourceLimit(format!(
                "path tables for q = {q} exceed {KERNEL_MAX_MODULUS}"
            )));
        }
        let b = b % q;
        if !modulus.is_unit(b) {
            return Err(Error::NotCoprime { value: b, p: modulus.p() });
        }
        let units: Vec<u64> = modulus.units().collect();
        let mut b_inv = Vec::with_capacity(units.len());
        for chunk in units.chunks(INVERSION_BLOCK) {
            let inv = batch_inverse_raw(chunk, q).expect("units are invertible");
            b_inv.extend(inv.into_iter().map(|xi| xi * b % q));
        }
        let twiddle = (0..q).map(|r| e_ratio(r, q)).collect();
        Ok(Self {
            modulus,
            b,
            units,
            b_inv,
            twiddle,
        })
    }

    pub fn modulus(&self) -> &PrimePowerModulus {
        &self.modulus
    }

    pub fn b(&self) -> u64 {
        self.b
    }

    /// Unnormalised partial sums of `e((a x + b xbar)/q)` over the first
    /// `counts[i]` units, for a nondecreasing list of counts.
    pub fn prefix_sums(&self, a: u64, counts: &[usize], out: &mut Vec<Complex64>) {
        debug_assert!(counts.windows(2).all(|w| w[0] <= w[1]));
        let q = self.modulus.q();
        let a = a % q;
        out.clear();
        let mut acc = Complex64::new(0.0, 0.0);
        let mut done = 0usize;
        for &c in counts {
            for i in done..c {
                let mut r = a * self.units[i] % q + self.b_inv[i];
                if r >= q {
                    r -= q;
                }
                acc += self.twiddle[r as usize];
            }
            done = c;
            out.push(acc);
        }
    }

    /// Path values `Kl(t_i; (a, b))` for nondecreasing `ts`.
    pub fn path_values(&self, a: u64, ts: &[f64], scratch: &mut Vec<Complex64>) -> Vec<Complex64> {
        let phi = self.modulus.phi();
        let mut counts = Vec::with_capacity(2 * ts.len());
        for &t in ts {
            let j = segment_index(t, phi) as usize;
            counts.push(j);
            counts.push(j + 1);
        }
        counts.sort_unstable();
        self.prefix_sums(a, &counts, scratch);
        let norm = self.modulus.sqrt_q();
        ts.iter()
            .map(|&t| {
                let j = segment_index(t, phi);
                let at = |c: usize| scratch[counts.partition_point(|&x| x < c)] / norm;
                interpolate(t, j, phi, at(j as usize), at(j as usize + 1))
            })
            .collect()
    }

    /// Step-function values for nondecreasing `ts`.
    pub fn step_values(&self, a: u64, ts: &[f64], scratch: &mut Vec<Complex64>) -> Vec<Complex64> {
        let counts: Vec<usize> = ts
            .iter()
            .map(|&t| {
                let cutoff = step_cutoff(t, &self.modulus);
                self.units.partition_point(|&x| x <= cutoff)
            })
            .collect();
        let mut sorted = counts.clone();
        sorted.sort_unstable();
        self.prefix_sums(a, &sorted, scratch);
        let norm = self.modulus.sqrt_q();
        counts
            .iter()
            .map(|&c| scratch[sorted.partition_point(|&x| x < c)] / norm)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(p: u64, n: u32, a: i64, b: i64) -> KloostermanParams {
        KloostermanParams::new(PrimePowerModulus::new(p, n).unwrap(), a, b)
    }

    const KL9_11: f64 = 0.347_296_355_333_860_7; // 2 cos(4 pi / 9)

    #[test]
    fn naive_examples() {
        let v = kl_naive(&params(3, 2, 1, 1));
        assert!((v.re - KL9_11).abs() < 1e-12 && v.im.abs() < 1e-12);
        assert!(kl_naive(&params(3, 2, 2, 1)).norm() < 1e-12);
        let v = kl_naive(&params(3, 1, 1, 1));
        assert!((v.re + 1.0 / 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn closed_examples() {
        assert!((kl_closed(&params(3, 2, 1, 1)).unwrap() - KL9_11).abs() < 1e-12);
        assert_eq!(kl_closed(&params(3, 2, 3, 1)).unwrap(), 0.0);
        // theta = pi/2 branch, frozen from a direct 18-term summation
        let v = kl_closed(&params(3, 3, 1, 1)).unwrap();
        assert!((v - -0.897_598_360_400_924_3).abs() < 1e-12);
        assert!((v - kl_naive(&params(3, 3, 1, 1)).re).abs() < 1e-12);
        assert!(matches!(
            kl_closed(&params(3, 1, 1, 1)),
            Err(Error::UnsupportedRegime(_))
        ));
        assert!(matches!(
            kl_closed(&params(5, 2, 5, 10)),
            Err(Error::UnsupportedRegime(_))
        ));
        // 3 <= 2n - 5 for n = 4
        assert!(kl_closed(&params(3, 4, 1, 1)).is_err());
        assert!(kl_closed(&params(5, 4, 1, 1)).is_ok());
    }

    #[test]
    fn closed_handles_one_non_unit_argument() {
        for (p, n) in [(3u64, 2u32), (5, 2), (3, 3)] {
            let q = p.pow(n) as i64;
            for a in 0..q {
                for b in [1i64, 2, p as i64] {
                    let pr = params(p, n, a, b);
                    if a % p as i64 == 0 && b % p as i64 == 0 {
                        continue;
                    }
                    let naive = kl_naive(&pr).re;
                    assert!((kl_closed(&pr).unwrap() - naive).abs() < 1e-12, "{a},{b} mod {q}");
                }
            }
        }
    }

    #[test]
    fn root_choice_invariance() {
        for (p, n) in [(5u64, 2u32), (7, 3), (11, 2), (3, 3), (13, 3)] {
            let m = PrimePowerModulus::new(p, n).unwrap();
            let q = m.q();
            for s in m.units() {
                let (v1, v2) = (closed_form_value(s, &m), closed_form_value(q - s, &m));
                assert!((v1 - v2).abs() < 1e-13, "s={s} mod {q}");
            }
        }
    }

    #[test]
    fn stream_examples() {
        let pr = params(3, 2, 1, 1);
        let pts: Vec<PathPoint> = partial_sums_stream(&pr).unwrap().collect();
        assert_eq!(pts.iter().map(|p| p.x).collect::<Vec<_>>(), vec![1, 2, 4, 5, 7, 8]);
        assert!((pts[0].value - e_ratio(2, 9) / 3.0).norm() < 1e-15);
        assert!((pts[5].value.re - KL9_11).abs() < 1e-12);
        for pt in &pts {
            assert_eq!(pt.x, unit_at(pt.j, 3));
        }
        assert!(matches!(
            partial_sums_stream(&params(3, 2, 3, 1)),
            Err(Error::NotCoprime { value: 3, .. })
        ));
    }

    #[test]
    fn stream_crosses_inversion_blocks() {
        let pr = params(11, 3, 7, 5);
        let m = pr.modulus;
        let mut acc = Complex64::new(0.0, 0.0);
        for (pt, x) in partial_sums_stream(&pr).unwrap().zip(m.units()) {
            let xi = inverse_mod(x, m.q()).unwrap();
            acc += e_ratio((7 * x + 5 * xi) % m.q(), m.q());
            assert!((pt.value - acc / m.sqrt_q()).norm() < 1e-12);
        }
    }

    #[test]
    fn path_eval_examples() {
        let pr = params(3, 2, 1, 1);
        let path = KloostermanPath::new(&pr).unwrap();
        assert!((path_eval(0.0, &pr).unwrap() - e_ratio(2, 9) / 3.0).norm() < 1e-15);
        assert!((path_eval(1.0, &pr).unwrap().re - KL9_11).abs() < 1e-12);
        let t = 2.0 / 5.0;
        assert!((path_eval(t, &pr).unwrap() - path.points[2].value).norm() < 1e-14);
        assert!(matches!(path_eval(1.5, &pr), Err(Error::DomainError(_))));
        for i in 0..=40 {
            let t = i as f64 / 40.0;
            assert!((path.eval(t).unwrap() - path_eval(t, &pr).unwrap()).norm() < 1e-15);
        }
    }

    #[test]
    fn polyline_vertices() {
        let v = path_polyline(&params(3, 2, 1, 1)).unwrap();
        assert_eq!(v.len(), 6);
        let a = 4.0 * PI / 9.0;
        assert!((v[0].0 - a.cos() / 3.0).abs() < 1e-15 && (v[0].1 - a.sin() / 3.0).abs() < 1e-15);
        for w in v.windows(2) {
            let d = ((w[1].0 - w[0].0).powi(2) + (w[1].1 - w[0].1).powi(2)).sqrt();
            assert!((d - 1.0 / 3.0).abs() < 1e-12 / 3.0);
        }
        assert_eq!(path_polyline(&params(67, 2, 1, 1)).unwrap().len(), 4422);
    }

    #[test]
    fn segment_and_deviation_bounds() {
        for pr in [params(5, 2, 2, 3), params(7, 2, 1, 1), params(3, 4, 5, 7)] {
            let path = KloostermanPath::new(&pr).unwrap();
            let phi = pr.modulus.phi();
            let s = pr.modulus.sqrt_q();
            for j in 1..phi {
                assert!(path.slope(j).norm() <= (phi - 1) as f64 / s * (1.0 + 1e-12));
            }
            for i in 0..=500 {
                let t = i as f64 / 500.0;
                let j = segment_index(t, phi);
                let dev = (path.eval(t).unwrap() - path.points[j as usize - 1].value).norm();
                assert!(dev <= 1.0 / s + 1e-12);
            }
        }
    }

    #[test]
    fn fourier_alpha_examples() {
        let m = PrimePowerModulus::new(3, 2).unwrap();
        for t in [0.1, 0.37, 0.5, 0.99] {
            let count = step_cutoff(t, &m) as f64;
            assert!((fourier_alpha(0, t, &m) - count / 3.0).norm() < 1e-15);
        }
        assert_eq!(step_cutoff(1.0, &m), 8);
        assert_eq!(step_cutoff(0.0, &m), 0);
        // full geometric sum over all residues: cutoff q - 1 plus the x = q term
        // that the range excludes, so alpha = -e(h q / q)/p^(n/2) = -1/3
        assert!((fourier_alpha(4, 1.0, &m) + 1.0 / 3.0).norm() < 1e-14);
        let m = PrimePowerModulus::new(5, 2).unwrap();
        let t = 0.75;
        let direct: Complex64 = (1..=step_cutoff(t, &m)).map(|x| e_ratio(3 * x % 25, 25)).sum();
        assert!((fourier_alpha(3, t, &m) - direct / 5.0).norm() < 1e-13);
    }

    #[test]
    fn fourier_alpha_bound() {
        for m in [(3, 3), (5, 2), (7, 2)].map(|(p, n)| PrimePowerModulus::new(p, n).unwrap()) {
            let half = ((m.q() - 1) / 2) as i64;
            for i in 0..=64 {
                let t = i as f64 / 64.0;
                for h in -half..=half {
                    let bound = if h == 0 { 1.0 } else { 1.0 / (2.0 * h.abs() as f64) };
                    assert!(fourier_alpha(h, t, &m).norm() <= m.sqrt_q() * bound + 1e-12);
                }
            }
        }
    }

    #[test]
    fn beta_examples() {
        assert_eq!(beta_coeff(0, 0.3), Complex64::new(0.3, 0.0));
        assert!(beta_coeff(1, 1.0).norm() < 1e-15);
        assert!((beta_coeff(2, 0.25) - Complex64::new(0.0, 1.0 / (2.0 * PI))).norm() < 1e-15);
    }

    #[test]
    fn step_function_examples() {
        let pr = params(3, 2, 1, 1);
        let m = pr.modulus;
        let tiny = 0.01;
        assert_eq!(step_cutoff(tiny, &m), 0);
        assert_eq!(completed_step(tiny, &pr, StepMethod::Direct).unwrap(), Complex64::new(0.0, 0.0));
        let full = completed_step(1.0, &pr, StepMethod::Direct).unwrap();
        assert!((full.re - KL9_11).abs() < 1e-12);
        for t in [0.01, 0.25, 0.5, 0.8, 1.0] {
            let d = completed_step(t, &pr, StepMethod::Direct).unwrap();
            let c = completed_step(t, &pr, StepMethod::Completion).unwrap();
            assert!((d - c).norm() < 1e-10, "t={t}: {d} vs {c}");
        }
    }

    #[test]
    fn kernel_agrees_with_stream() {
        let m = PrimePowerModulus::new(7, 2).unwrap();
        let kernel = PathKernel::new(m, 3).unwrap();
        let ts = [0.0, 0.1, 0.25, 0.5, 0.77, 1.0];
        let mut scratch = Vec::new();
        for a in [1u64, 2, 10, 48] {
            let pr = KloostermanParams::new(m, a as i64, 3);
            let vals = kernel.path_values(a, &ts, &mut scratch);
            let steps = kernel.step_values(a, &ts, &mut scratch);
            for (i, &t) in ts.iter().enumerate() {
                assert!((vals[i] - path_eval(t, &pr).unwrap()).norm() < 1e-12);
                let direct = completed_step(t, &pr, StepMethod::Direct).unwrap();
                assert!((steps[i] - direct).norm() < 1e-12);
            }
        }
    }
}
