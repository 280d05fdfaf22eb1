//! Empirical moments of Kloosterman paths, shifted-sum moments and their main
//! term, the exact counts that feed them, fourth moments of incomplete sums,
//! increments of the path, and distribution distances.
//!
//! Averages over `a` (or `(a, b)`) run over fixed blocks of units; each block
//! is summed in increasing order and block results are combined in block
//! order, so results do not depend on the number of worker threads.

use std::collections::{BTreeMap, HashMap};

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kloosterman::{e_ratio, kl_complete, KloostermanParams, PathKernel};
use crate::modular::{inverse_mod, pow_mod, reduce_signed, PrimePowerModulus};
use crate::random_series::{moment_product, MuDistribution};
use crate::report::ExperimentReport;
use crate::summation::{ordered_complex_sum, ordered_sum};

/// Units per reduction block.
pub const REDUCTION_BLOCK: usize = 4096;

/// Pinned regression cap for `M4(I) phi^2 / (n |I|^2)`.
pub const FOURTH_MOMENT_CAP: f64 = 32.0;
/// Pinned regression cap for the increment moment over `n (t - s)^2`.
pub const INCREMENT_CAP: f64 = 100.0;
/// `direct` fourth moments are only computed up to this modulus.
pub const DIRECT_FOURTH_MOMENT_MAX_Q: u64 = 200;
/// `increment_moment` evaluates `phi^2` paths; keep `phi` below this.
pub const INCREMENT_MAX_PHI: u64 = 2000;

fn binomial(n: u32, k: u32) -> f64 {
    (1..=k).fold(1.0f64, |acc, i| acc * (n - k + i) as f64 / i as f64).round()
}

/// Multiplicities `mu(tau)` on shifts `tau` modulo `q`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShiftPattern {
    modulus: PrimePowerModulus,
    entries: BTreeMap<u64, u32>,
}

impl ShiftPattern {
    /// Builds a pattern; repeated shifts add their multiplicities, zero
    /// multiplicities are dropped, and the total must not exceed `cap`.
    pub fn new(modulus: PrimePowerModulus, entries: &[(i64, u32)], cap: u32) -> Result<Self> {
        let mut map = BTreeMap::new();
        for &(tau, mult) in entries {
            if mult > 0 {
                *map.entry(reduce_signed(tau as i128, modulus.q())).or_insert(0) += mult;
            }
        }
        if map.is_empty() {
            return Err(Error::PreconditionViolated("shift pattern is empty".into()));
        }
        let total: u32 = map.values().sum();
        if total > cap {
            return Err(Error::PreconditionViolated(format!(
                "total multiplicity {total} exceeds cap {cap}"
            )));
        }
        Ok(Self {
            modulus,
            entries: map,
        })
    }

    pub fn modulus(&self) -> &PrimePowerModulus {
        &self.modulus
    }

    pub fn entries(&self) -> impl Iterator<Item = (u64, u32)> + '_ {
        self.entries.iter().map(|(&t, &m)| (t, m))
    }

    /// `T(mu)`.
    pub fn support(&self) -> Vec<u64> {
        self.entries.keys().copied().collect()
    }

    /// `T(mu) mod p`, deduplicated.
    pub fn reduced_support(&self) -> Vec<u64> {
        let p = self.modulus.p();
        let mut r: Vec<u64> = self.entries.keys().map(|t| t % p).collect();
        r.sort_unstable();
        r.dedup();
        r
    }

    /// Whether the shifts stay distinct after reduction modulo `p`.
    pub fn distinct_mod_p(&self) -> bool {
        self.reduced_support().len() == self.entries.len()
    }

    pub fn total(&self) -> u32 {
        self.entries.values().sum()
    }
}

/// Times, powers of the conjugate, powers, and `b0` of a complex moment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSpec {
    pub t: Vec<f64>,
    pub conj_powers: Vec<u32>,
    pub powers: Vec<u32>,
    pub b0: u64,
}

impl MomentSpec {
    pub fn new(t: Vec<f64>, conj_powers: Vec<u32>, powers: Vec<u32>, b0: u64) -> Result<Self> {
        let spec = Self {
            t,
            conj_powers,
            powers,
            b0,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// A single time with no conjugates: `E X(t)^power`.
    pub fn simple(t: f64, power: u32, b0: u64) -> Result<Self> {
        Self::new(vec![t], vec![0], vec![power], b0)
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.t.len();
        if k == 0 || self.conj_powers.len() != k || self.powers.len() != k {
            return Err(Error::PreconditionViolated(
                "moment vectors must be nonempty and of equal length".into(),
            ));
        }
        if self.t.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return Err(Error::DomainError("moment times must lie in [0, 1]".into()));
        }
        if self.t.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::PreconditionViolated(
                "moment times must be strictly increasing".into(),
            ));
        }
        if self.order() == 0 {
            return Err(Error::PreconditionViolated("moment order must be >= 1".into()));
        }
        Ok(())
    }

    /// `l(m + n)`.
    pub fn order(&self) -> u32 {
        self.conj_powers.iter().sum::<u32>() + self.powers.iter().sum::<u32>()
    }
}

/// A run of integers `lo..=hi` with the multiples of `p` removed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntervalSpec {
    pub lo: u64,
    pub hi: u64,
}

impl IntervalSpec {
    pub fn new(lo: u64, hi: u64) -> Self {
        Self { lo, hi }
    }

    pub fn members(&self, m: &PrimePowerModulus) -> Result<Vec<u64>> {
        if self.lo < 1 || self.lo > self.hi || self.hi >= m.q() {
            return Err(Error::PreconditionViolated(format!(
                "interval [{}, {}] must satisfy 1 <= lo <= hi < {}",
                self.lo,
                self.hi,
                m.q()
            )));
        }
        let members: Vec<u64> = (self.lo..=self.hi).filter(|&x| m.is_unit(x)).collect();
        if members.is_empty() {
            return Err(Error::PreconditionViolated(
                "interval contains no units".into(),
            ));
        }
        Ok(members)
    }
}

/// Sums `f` over the units in fixed blocks and combines the blocks in order.
fn sum_over_units<F>(m: &PrimePowerModulus, width: usize, f: F) -> Vec<Complex64>
where
    F: Fn(u64, &mut [Complex64]) + Sync,
{
    let units: Vec<u64> = m.units().collect();
    let blocks: Vec<Vec<Complex64>> = units
        .par_chunks(REDUCTION_BLOCK)
        .map(|chunk| {
            let mut acc = vec![Complex64::new(0.0, 0.0); width];
            let mut term = vec![Complex64::new(0.0, 0.0); width];
            for &a in chunk {
                f(a, &mut term);
                for (s, t) in acc.iter_mut().zip(&term) {
                    *s += t;
                }
            }
            acc
        })
        .collect();
    (0..width)
        .map(|i| ordered_complex_sum(blocks.iter().map(|b| b[i])))
        .collect()
}

/// Several moments sharing `b0`, from one pass per `a` over the union of
/// their times. Times equal to 1 use the complete sum directly.
pub fn empirical_moments(specs: &[MomentSpec], m: &PrimePowerModulus, use_step: bool) -> Result<Vec<Complex64>> {
    let Some(first) = specs.first() else {
        return Ok(Vec::new());
    };
    for spec in specs {
        spec.validate()?;
        if spec.b0 % m.q() != first.b0 % m.q() {
            return Err(Error::PreconditionViolated(
                "moments evaluated together must share b0".into(),
            ));
        }
    }
    let b0 = first.b0 % m.q();
    if !m.is_unit(b0) {
        return Err(Error::NotCoprime { value: b0, p: m.p() });
    }
    let mut interior: Vec<f64> = specs
        .iter()
        .flat_map(|s| s.t.iter().copied())
        .filter(|&t| t < 1.0)
        .collect();
    interior.sort_by(f64::total_cmp);
    interior.dedup();
    let needs_endpoint = specs.iter().any(|s| s.t.contains(&1.0));
    let kernel = if interior.is_empty() {
        None
    } else {
        Some(PathKernel::new(*m, b0)?)
    };

    let value_index = |t: f64| -> usize {
        if t >= 1.0 {
            interior.len()
        } else {
            interior.partition_point(|&x| x < t)
        }
    };
    let indices: Vec<Vec<usize>> = specs
        .iter()
        .map(|s| s.t.iter().map(|&t| value_index(t)).collect())
        .collect();

    let sums = sum_over_units(m, specs.len(), |a, out| {
        let mut scratch = Vec::new();
        let mut values = match &kernel {
            Some(k) if use_step => k.step_values(a, &interior, &mut scratch),
            Some(k) => k.path_values(a, &interior, &mut scratch),
            None => Vec::new(),
        };
        if needs_endpoint {
            let kl = kl_complete(&KloostermanParams::new(*m, a as i64, b0 as i64));
            values.push(Complex64::new(kl, 0.0));
        }
        for ((spec, idx), slot) in specs.iter().zip(&indices).zip(out.iter_mut()) {
            let vals: Vec<Complex64> = idx.iter().map(|&i| values[i]).collect();
            *slot = moment_product(&vals, &spec.conj_powers, &spec.powers);
        }
    });
    let phi = m.phi() as f64;
    Ok(sums.into_iter().map(|s| s / phi).collect())
}

/// `(1/phi) sum_a prod_i conj(X(t_i))^{m_i} X(t_i)^{n_i}` with `X` the path
/// (or the step function when `use_step` is set).
pub fn empirical_moment(spec: &MomentSpec, m: &PrimePowerModulus, use_step: bool) -> Result<Complex64> {
    Ok(empirical_moments(std::slice::from_ref(spec), m, use_step)?[0])
}

/// `(1/phi) sum_a prod_tau Kl(a + tau, b0)^{mu(tau)}`.
pub fn shifted_moment(pattern: &ShiftPattern, b0: u64, m: &PrimePowerModulus) -> Result<f64> {
    if pattern.modulus() != m {
        return Err(Error::PreconditionViolated("pattern modulus mismatch".into()));
    }
    let entries: Vec<(u64, u32)> = pattern.entries().collect();
    let sums = sum_over_units(m, 1, |a, out| {
        let mut prod = 1.0;
        for &(tau, mult) in &entries {
            let kl = kl_complete(&KloostermanParams::new(*m, (a + tau) as i64, b0 as i64));
            prod *= kl.powi(mult as i32);
            if prod == 0.0 {
                break;
            }
        }
        out[0] = Complex64::new(prod, 0.0);
    });
    Ok(sums[0].re / m.phi() as f64)
}

fn is_nonzero_square_mod_p(x: u64, p: u64) -> bool {
    !x.is_multiple_of(p) && pow_mod(x, (p - 1) / 2, p) == 1
}

/// `|A(mu)| = p^(n-1) #{a mod p : a + tau is a nonzero square mod p for all tau}`.
pub fn a_count_exact(pattern: &ShiftPattern, m: &PrimePowerModulus) -> u64 {
    let p = m.p();
    let reduced = pattern.reduced_support();
    let good = (1..p)
        .filter(|&a| reduced.iter().all(|&t| is_nonzero_square_mod_p(a + t, p)))
        .count() as u64;
    good * (m.q() / p)
}

/// `prod_tau [2 | mu(tau)] binom(mu(tau), mu(tau)/2) * |A(mu)| / phi`.
pub fn shifted_moment_main_term(pattern: &ShiftPattern, m: &PrimePowerModulus) -> Result<f64> {
    if !pattern.distinct_mod_p() {
        return Err(Error::PatternCollision);
    }
    let mut weight = 1.0;
    for (_, mult) in pattern.entries() {
        if mult % 2 == 1 {
            return Ok(0.0);
        }
        weight *= binomial(mult, mult / 2);
    }
    Ok(weight * a_count_exact(pattern, m) as f64 / m.phi() as f64)
}

/// Number of tuples `b` in `{1..(p-1)/2}^T` with `b_tau^2 - tau` constant and
/// nonzero mod `p`, `sum l_tau b_tau^-1 = w` and
/// `sum l_tau b_tau^-(2j-1) = 0` for `2 <= j <= n-1`, all modulo `p`.
///
/// For each admissible common value `c = b_tau^2 - tau` the tuple is unique,
/// so the count enumerates `c` rather than tuples.
pub fn n_count(p: u64, n: u32, shifts: &[i64], ell: &[i64], w: i64) -> Result<u64> {
    if shifts.is_empty() || shifts.len() != ell.len() {
        return Err(Error::PreconditionViolated(
            "shifts and ell must be nonempty and of equal length".into(),
        ));
    }
    if ell.iter().any(|l| l.unsigned_abs() >= p) {
        return Err(Error::PreconditionViolated("|l_tau| must be < p".into()));
    }
    if ell.iter().all(|&l| l == 0) {
        return Err(Error::PreconditionViolated("l must be nonzero".into()));
    }
    let taus: Vec<u64> = shifts.iter().map(|&t| reduce_signed(t as i128, p)).collect();
    let mut sorted = taus.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != taus.len() {
        return Err(Error::PreconditionViolated("shifts must be distinct modulo p".into()));
    }
    let ells: Vec<u64> = ell.iter().map(|&l| reduce_signed(l as i128, p)).collect();
    let w = reduce_signed(w as i128, p);
    // canonical root in 1..=(p-1)/2 of each nonzero square
    let mut half_root = vec![0u64; p as usize];
    for b in 1..=(p - 1) / 2 {
        half_root[(b * b % p) as usize] = b;
    }
    let mut count = 0;
    'c: for c in 1..p {
        let mut inv_b = Vec::with_capacity(taus.len());
        for &tau in &taus {
            let b = half_root[((c + tau) % p) as usize];
            if b == 0 {
                continue 'c;
            }
            inv_b.push(inverse_mod(b, p).expect("b is a unit"));
        }
        let power_sum = |e: u64| {
            inv_b
                .iter()
                .zip(&ells)
                .map(|(&ib, &l)| l * pow_mod(ib, e, p) % p)
                .sum::<u64>()
                % p
        };
        if power_sum(1) != w {
            continue;
        }
        if (2..n as u64).all(|j| power_sum(2 * j - 1) == 0) {
            count += 1;
        }
    }
    Ok(count)
}

/// Number of `(x1, x2, x3, x4)` in `I^4` with `x1 + x2 = x3 + x4 (mod m1)` and
/// `1/x1 + 1/x2 = 1/x3 + 1/x4 (mod m2)`, inverses taken modulo `q`.
/// Pairs are bucketed by their key, so the count is `sum_key count(key)^2`.
pub fn quadruple_count(members: &[u64], m: &PrimePowerModulus, m1: u64, m2: u64) -> Result<u64> {
    let q = m.q();
    let lowered = q / m.p();
    for modulus in [m1, m2] {
        if modulus != q && modulus != lowered {
            return Err(Error::PreconditionViolated(format!(
                "congruence modulus {modulus} must be q or q/p"
            )));
        }
    }
    let inv: Vec<u64> = members
        .iter()
        .map(|&x| inverse_mod(x, q).ok_or(Error::NotCoprime { value: x, p: m.p() }))
        .collect::<Result<_>>()?;
    let mut buckets: HashMap<(u64, u64), u64> = HashMap::with_capacity(members.len() * members.len());
    for (i, &x1) in members.iter().enumerate() {
        for (j, &x2) in members.iter().enumerate() {
            let key = ((x1 + x2) % m1, (inv[i] + inv[j]) % m2);
            *buckets.entry(key).or_insert(0) += 1;
        }
    }
    Ok(buckets.values().map(|c| c * c).sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FourthMomentAlgorithm {
    /// Literal double average over `(a, b)`.
    Direct,
    /// Orthogonality expansion into four quadruple counts.
    Counting,
}

/// `M4(I) = (1/phi^2) sum_{a, b} |p^(-n/2) sum_{x in I} e((a x + b/x)/q)|^4`.
pub fn fourth_moment(interval: &IntervalSpec, m: &PrimePowerModulus, algorithm: FourthMomentAlgorithm) -> Result<f64> {
    let members = interval.members(m)?;
    let phi = m.phi() as f64;
    let q = m.q();
    match algorithm {
        FourthMomentAlgorithm::Direct => {
            if q > DIRECT_FOURTH_MOMENT_MAX_Q {
                return Err(Error::ResourceLimit(format!(
                    "direct fourth moment limited to q <= {DIRECT_FOURTH_MOMENT_MAX_Q}"
                )));
            }
            let inv: Vec<u64> = members.iter().map(|&x| inverse_mod(x, q).unwrap()).collect();
            let twiddle: Vec<Complex64> = (0..q).map(|r| e_ratio(r, q)).collect();
            let norm2 = q as f64; // |p^(-n/2)|^-2
            let sums = sum_over_units(m, 1, |a, out| {
                let mut row = 0.0;
                for b in m.units() {
                    let s: Complex64 = members
                        .iter()
                        .zip(&inv)
                        .map(|(&x, &xi)| twiddle[((a * x + b * xi) % q) as usize])
                        .sum();
                    let mod2 = s.norm_sqr() / norm2;
                    row += mod2 * mod2;
                }
                out[0] = Complex64::new(row, 0.0);
            });
            Ok(sums[0].re / (phi * phi))
        }
        FourthMomentAlgorithm::Counting => {
            let lowered = q / m.p();
            let p = m.p() as f64;
            let c1 = quadruple_count(&members, m, q, q)? as f64;
            let c2 = quadruple_count(&members, m, q, lowered)? as f64;
            let c3 = quadruple_count(&members, m, lowered, q)? as f64;
            let c4 = quadruple_count(&members, m, lowered, lowered)? as f64;
            Ok((c1 - c2 / p - c3 / p + c4 / (p * p)) / (phi * phi))
        }
    }
}

/// `(1/phi^2) sum_{a, b} |Kl(t; (a, b)) - Kl(s; (a, b))|^4`.
pub fn increment_moment(s: f64, t: f64, m: &PrimePowerModulus) -> Result<f64> {
    if !(0.0..=1.0).contains(&s) || !(0.0..=1.0).contains(&t) || s > t {
        return Err(Error::DomainError(format!("need 0 <= s <= t <= 1, got s={s}, t={t}")));
    }
    if m.phi() > INCREMENT_MAX_PHI {
        return Err(Error::ResourceLimit(format!(
            "increment moment limited to phi(q) <= {INCREMENT_MAX_PHI}"
        )));
    }
    if s == t {
        return Ok(0.0);
    }
    let units: Vec<u64> = m.units().collect();
    let per_b: Vec<f64> = units
        .par_iter()
        .map(|&b| -> Result<f64> {
            let kernel = PathKernel::new(*m, b)?;
            let mut scratch = Vec::new();
            let terms = units.iter().map(|&a| {
                let v = kernel.path_values(a, &[s, t], &mut scratch);
                (v[1] - v[0]).norm_sqr().powi(2)
            });
            Ok(ordered_sum(terms))
        })
        .collect::<Result<_>>()?;
    let phi = m.phi() as f64;
    Ok(ordered_sum(per_b) / (phi * phi))
}

/// A reference distribution for [`ks_statistic`]: the CDF and its left limits.
pub trait ReferenceCdf {
    fn cdf(&self, x: f64) -> f64;
    /// `F(x-)`; equals `cdf` for continuous laws.
    fn cdf_left(&self, x: f64) -> f64 {
        self.cdf(x)
    }
}

impl ReferenceCdf for MuDistribution {
    fn cdf(&self, x: f64) -> f64 {
        MuDistribution::cdf(x)
    }

    fn cdf_left(&self, x: f64) -> f64 {
        MuDistribution::cdf_left(x)
    }
}

/// Wraps a continuous CDF.
pub struct Continuous<F>(pub F);

impl<F: Fn(f64) -> f64> ReferenceCdf for Continuous<F> {
    fn cdf(&self, x: f64) -> f64 {
        (self.0)(x)
    }
}

/// Kolmogorov–Smirnov distance `sup_x |F_N(x) - F(x)|`, comparing both the
/// values and the left limits at every distinct sample value so atoms of
/// either distribution are handled.
pub fn ks_statistic(samples: &[f64], reference: &dyn ReferenceCdf) -> f64 {
    assert!(!samples.is_empty(), "KS statistic needs samples");
    let mut sorted = samples.to_vec();
    if sorted.windows(2).any(|w| w[0] > w[1]) {
        sorted.sort_by(f64::total_cmp);
    }
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    let mut i = 0;
    while i < sorted.len() {
        let v = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == v {
            j += 1;
        }
        let below = i as f64 / n;
        let at = j as f64 / n;
        d = d
            .max((below - reference.cdf_left(v)).abs())
            .max((at - reference.cdf(v)).abs());
        i = j;
    }
    d
}

/// Counts of equal values, sorted by value.
pub fn value_histogram(values: &[f64]) -> Vec<(f64, u64)> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut out: Vec<(f64, u64)> = Vec::new();
    for v in sorted {
        match out.last_mut() {
            Some((last, c)) if *last == v => *c += 1,
            _ => out.push((v, 1)),
        }
    }
    out
}

/// One `(s, t)` sample of a tightness sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncrementSample {
    pub s: f64,
    pub t: f64,
    pub short_range: bool,
    pub moment: f64,
    pub ratio: f64,
}

/// Draws `(s, t)` pairs alternating between `t - s <= 1/(phi - 1)` and
/// `t - s >= 1/(phi - 1)`, and reports the largest
/// `increment_moment / (n (t - s)^2)`.
pub fn tightness_sweep(m: &PrimePowerModulus, trials: usize, seed: u64) -> Result<ExperimentReport> {
    let builder = ExperimentReport::builder(format!("tightness increment q={}", m.q()))
        .param("p", m.p())
        .param("n", m.n())
        .param("trials", trials)
        .param("seed", seed);
    if m.phi() > INCREMENT_MAX_PHI {
        return Err(Error::ResourceLimit(format!(
            "increment moment limited to phi(q) <= {INCREMENT_MAX_PHI}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let split = 1.0 / (m.phi() - 1) as f64;
    let mut samples = Vec::with_capacity(trials);
    for i in 0..trials {
        let short = i % 2 == 0;
        let (s, t) = if short {
            let gap = split * rng.random_range(0.01..=1.0);
            let s = rng.random_range(0.0..=1.0 - gap);
            (s, (s + gap).min(1.0))
        } else {
            let gap = rng.random_range(split..=1.0);
            let s = rng.random_range(0.0..=1.0 - gap);
            (s, (s + gap).min(1.0))
        };
        let moment = increment_moment(s, t, m)?;
        let ratio = moment / (m.n() as f64 * (t - s).powi(2));
        samples.push(IncrementSample {
            s,
            t,
            short_range: short,
            moment,
            ratio,
        });
    }
    let max_ratio = samples.iter().map(|x| x.ratio).fold(0.0, f64::max);
    let pass = max_ratio <= INCREMENT_CAP;
    Ok(builder
        .observed(serde_json::json!({ "max_ratio": max_ratio, "samples": samples }))
        .reference(INCREMENT_CAP, "pinned cap on E|X(t)-X(s)|^4 / (n (t-s)^2)")
        .tolerance(INCREMENT_CAP)
        .finish(pass))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kloosterman::{kl_naive, path_eval};

    fn md(p: u64, n: u32) -> PrimePowerModulus {
        PrimePowerModulus::new(p, n).unwrap()
    }

    /// 2 cos(4 pi / 9)^2 * 2 / 6 over the three square classes of q = 9.
    fn m2_q9() -> f64 {
        let m = md(3, 2);
        m.units()
            .map(|a| kl_naive(&KloostermanParams::new(m, a as i64, 1)).re.powi(2))
            .sum::<f64>()
            / 6.0
    }

    #[test]
    fn empirical_moment_examples() {
        let m = md(3, 2);
        let v = empirical_moment(&MomentSpec::simple(1.0, 2, 1).unwrap(), &m, false).unwrap();
        assert!((v.re - m2_q9()).abs() < 1e-12);
        assert!((v.re - 1.0).abs() < 1e-12);
        let mean = empirical_moment(&MomentSpec::simple(1.0, 1, 1).unwrap(), &m, false).unwrap();
        let direct = m
            .units()
            .map(|a| kl_naive(&KloostermanParams::new(m, a as i64, 1)).re)
            .sum::<f64>()
            / 6.0;
        assert!((mean.re - direct).abs() < 1e-12 && mean.im.abs() < 1e-12);
        assert!(matches!(
            empirical_moment(&MomentSpec::simple(1.0, 2, 3).unwrap(), &m, false),
            Err(Error::NotCoprime { .. })
        ));
    }

    #[test]
    fn empirical_moment_interior_matches_streaming_path() {
        let m = md(5, 2);
        let spec = MomentSpec::new(vec![0.3, 0.8], vec![1, 0], vec![1, 2], 2).unwrap();
        let got = empirical_moment(&spec, &m, false).unwrap();
        let mut want = Complex64::new(0.0, 0.0);
        for a in m.units() {
            let pr = KloostermanParams::new(m, a as i64, 2);
            let x = path_eval(0.3, &pr).unwrap();
            let y = path_eval(0.8, &pr).unwrap();
            want += x.conj() * x * y * y;
        }
        want /= m.phi() as f64;
        assert!((got - want).norm() < 1e-12);
    }

    #[test]
    fn moment_spec_validation() {
        assert!(MomentSpec::new(vec![0.5, 0.2], vec![0, 0], vec![1, 1], 1).is_err());
        assert!(MomentSpec::new(vec![0.5], vec![0], vec![0], 1).is_err());
        assert!(MomentSpec::new(vec![0.5], vec![0, 1], vec![1], 1).is_err());
        assert!(MomentSpec::new(vec![1.5], vec![0], vec![1], 1).is_err());
    }

    #[test]
    fn shifted_moment_examples() {
        let m = md(3, 2);
        let pat = ShiftPattern::new(m, &[(0, 2)], 8).unwrap();
        assert!((shifted_moment(&pat, 1, &m).unwrap() - m2_q9()).abs() < 1e-12);
        let pat = ShiftPattern::new(m, &[(0, 1)], 8).unwrap();
        let direct: f64 = m
            .units()
            .map(|a| kl_naive(&KloostermanParams::new(m, a as i64, 1)).re)
            .sum::<f64>()
            / 6.0;
        assert!((shifted_moment(&pat, 1, &m).unwrap() - direct).abs() < 1e-12);
    }

    #[test]
    fn shifted_moment_matches_naive_products() {
        let m = md(5, 2);
        let pat = ShiftPattern::new(m, &[(0, 2), (3, 1), (7, 1)], 8).unwrap();
        let mut want = 0.0;
        for a in m.units() {
            let kl = |tau: u64| kl_naive(&KloostermanParams::new(m, (a + tau) as i64, 2)).re;
            want += kl(0).powi(2) * kl(3) * kl(7);
        }
        want /= m.phi() as f64;
        assert!((shifted_moment(&pat, 2, &m).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn shift_pattern_rules() {
        let m = md(5, 2);
        assert!(ShiftPattern::new(m, &[], 4).is_err());
        assert!(ShiftPattern::new(m, &[(0, 0)], 4).is_err());
        assert!(ShiftPattern::new(m, &[(0, 3), (1, 2)], 4).is_err());
        let pat = ShiftPattern::new(m, &[(0, 2), (5, 2)], 4).unwrap();
        assert!(!pat.distinct_mod_p());
        assert_eq!(shifted_moment_main_term(&pat, &m), Err(Error::PatternCollision));
        let pat = ShiftPattern::new(m, &[(-1, 1), (24, 1)], 4).unwrap();
        assert_eq!(pat.support(), vec![24]);
        assert_eq!(pat.total(), 2);
    }

    #[test]
    fn a_count_examples() {
        let m = md(5, 2);
        let single = ShiftPattern::new(m, &[(0, 2)], 8).unwrap();
        assert_eq!(a_count_exact(&single, &m), 10);
        for (p, n) in [(3u64, 3u32), (7, 2), (11, 2), (13, 1)] {
            let m = md(p, n);
            for tau in [0i64, p as i64, 2 * p as i64] {
                let pat = ShiftPattern::new(m, &[(tau, 2)], 8).unwrap();
                assert_eq!(a_count_exact(&pat, &m), m.phi() / 2, "p={p} n={n} tau={tau}");
            }
            // a = 0 is not a unit, so the class a + tau = tau is lost when tau is a square
            for tau in 1..p as i64 {
                let pat = ShiftPattern::new(m, &[(tau, 2)], 8).unwrap();
                let lost = u64::from(is_nonzero_square_mod_p(tau as u64, p));
                assert_eq!(a_count_exact(&pat, &m), (p - 1) / 2 * (m.q() / p) - lost * (m.q() / p));
            }
        }
        // a and a + 1 both nonzero squares mod 5: squares are {1, 4}, no a works
        let m = md(5, 1);
        let pair = ShiftPattern::new(m, &[(0, 2), (1, 2)], 8).unwrap();
        assert_eq!(a_count_exact(&pair, &m), 0);
    }

    #[test]
    fn a_count_matches_enumeration_of_units() {
        for (p, n) in [(5u64, 2u32), (7, 2), (3, 3)] {
            let m = md(p, n);
            let pat = ShiftPattern::new(m, &[(0, 2), (2, 2), (3, 1)], 8).unwrap();
            let q = m.q();
            let squares: std::collections::HashSet<u64> =
                m.units().map(|x| x * x % q).collect();
            let want = m
                .units()
                .filter(|&a| pat.support().iter().all(|&t| squares.contains(&((a + t) % q))))
                .count() as u64;
            assert_eq!(a_count_exact(&pat, &m), want);
        }
    }

    #[test]
    fn main_term_examples() {
        let m = md(5, 2);
        let p1 = ShiftPattern::new(m, &[(0, 2)], 8).unwrap();
        assert!((shifted_moment_main_term(&p1, &m).unwrap() - 1.0).abs() < 1e-15);
        let odd = ShiftPattern::new(m, &[(0, 1)], 8).unwrap();
        assert_eq!(shifted_moment_main_term(&odd, &m).unwrap(), 0.0);
        let two = ShiftPattern::new(m, &[(0, 2), (1, 2)], 8).unwrap();
        let a = a_count_exact(&two, &m) as f64;
        assert!((shifted_moment_main_term(&two, &m).unwrap() - 4.0 * a / 20.0).abs() < 1e-15);
    }

    /// Brute force over tuples `b` in `{1..(p-1)/2}^k`.
    fn n_count_oracle(p: u64, n: u32, shifts: &[i64], ell: &[i64], w: i64) -> u64 {
        let k = shifts.len();
        let half = (p - 1) / 2;
        let taus: Vec<u64> = shifts.iter().map(|&t| t.rem_euclid(p as i64) as u64).collect();
        let mut count = 0;
        let mut b = vec![1u64; k];
        loop {
            let c0 = (b[0] * b[0] + p - taus[0]) % p;
            let consistent = (0..k).all(|i| (b[i] * b[i] + p - taus[i]) % p == c0) && c0 != 0;
            if consistent {
                let m_jj = |j: u64| -> i64 {
                    (0..k)
                        .map(|i| {
                            let inv = inverse_mod(b[i], p).unwrap();
                            ell[i] * pow_mod(inv, 2 * j - 1, p) as i64
                        })
                        .sum::<i64>()
                        .rem_euclid(p as i64)
                };
                if m_jj(1) == w.rem_euclid(p as i64) && (2..n as u64).all(|j| m_jj(j) == 0) {
                    count += 1;
                }
            }
            let mut i = 0;
            loop {
                if i == k {
                    return count;
                }
                b[i] += 1;
                if b[i] <= half {
                    break;
                }
                b[i] = 1;
                i += 1;
            }
        }
    }

    #[test]
    fn n_count_examples() {
        assert_eq!(n_count(7, 2, &[0], &[1], 2).unwrap(), 0);
        assert_eq!(n_count(7, 2, &[0], &[1], 5).unwrap(), 1);
        assert!(n_count(7, 2, &[0], &[7], 1).is_err());
        assert!(n_count(7, 2, &[0, 1], &[0, 0], 1).is_err());
        assert!(n_count(7, 2, &[0, 7], &[1, 1], 1).is_err());
    }

    #[test]
    fn n_count_matches_tuple_enumeration_and_bound() {
        for p in [5u64, 7, 11, 13] {
            for n in [2u32, 3, 4] {
                for shifts in [vec![0i64], vec![0, 1], vec![0, 2, 3]] {
                    let k = shifts.len();
                    let bound = 1u64.max(k as u64 * (1 << (k - 1)));
                    for ell in [vec![1i64, -2, 3], vec![2, 2, 2], vec![0, 1, 0]] {
                        let ell = &ell[..k];
                        if ell.iter().all(|&l| l == 0) {
                            continue;
                        }
                        for w in 0..p as i64 {
                            let got = n_count(p, n, &shifts, ell, w).unwrap();
                            assert_eq!(got, n_count_oracle(p, n, &shifts, ell, w));
                            assert!(got <= bound);
                        }
                    }
                }
            }
        }
    }

    /// Brute-force quadruple enumeration.
    fn quadruples_oracle(members: &[u64], q: u64, m1: u64, m2: u64) -> u64 {
        let inv: Vec<u64> = members.iter().map(|&x| inverse_mod(x, q).unwrap()).collect();
        let k = members.len();
        let mut c = 0;
        for a in 0..k {
            for b in 0..k {
                for c3 in 0..k {
                    for d in 0..k {
                        if (members[a] + members[b]) % m1 == (members[c3] + members[d]) % m1
                            && (inv[a] + inv[b]) % m2 == (inv[c3] + inv[d]) % m2
                        {
                            c += 1;
                        }
                    }
                }
            }
        }
        c
    }

    #[test]
    fn quadruple_count_examples() {
        let m = md(7, 2);
        assert_eq!(quadruple_count(&[5], &m, 49, 49).unwrap(), 1);
        let members = IntervalSpec::new(3, 30).members(&m).unwrap();
        let k = members.len() as u64;
        for (m1, m2) in [(49, 49), (49, 7), (7, 49), (7, 7)] {
            let c = quadruple_count(&members, &m, m1, m2).unwrap();
            assert_eq!(c, quadruples_oracle(&members, 49, m1, m2));
            assert!(c >= 2 * k * k - k);
        }
        assert!(quadruple_count(&members, &m, 21, 49).is_err());
    }

    #[test]
    fn fourth_moment_algorithms_agree() {
        for (p, n) in [(3u64, 2u32), (5, 2), (3, 3)] {
            let m = md(p, n);
            for (lo, hi) in [(1, m.q() - 1), (2, 5), (4, 4), (1, m.q() / 2)] {
                let iv = IntervalSpec::new(lo, hi);
                let d = fourth_moment(&iv, &m, FourthMomentAlgorithm::Direct).unwrap();
                let c = fourth_moment(&iv, &m, FourthMomentAlgorithm::Counting).unwrap();
                assert!((d - c).abs() <= 1e-12 * d.abs().max(1e-300), "{d} vs {c}");
            }
        }
    }

    #[test]
    fn fourth_moment_single_point() {
        let m = md(5, 2);
        let v = fourth_moment(&IntervalSpec::new(7, 7), &m, FourthMomentAlgorithm::Direct).unwrap();
        assert!((v - 1.0 / 625.0).abs() < 1e-15);
        assert!(matches!(
            fourth_moment(&IntervalSpec::new(1, 5), &md(3, 5), FourthMomentAlgorithm::Direct),
            Err(Error::ResourceLimit(_))
        ));
        assert!(fourth_moment(&IntervalSpec::new(5, 5), &m, FourthMomentAlgorithm::Counting).is_err());
    }

    #[test]
    fn increment_examples() {
        let m = md(3, 2);
        assert_eq!(increment_moment(0.4, 0.4, &m).unwrap(), 0.0);
        // brute force over the 36 pairs through the streaming path
        let mut want = 0.0;
        for a in m.units() {
            for b in m.units() {
                let pr = KloostermanParams::new(m, a as i64, b as i64);
                let d = path_eval(1.0, &pr).unwrap() - path_eval(0.0, &pr).unwrap();
                want += d.norm_sqr().powi(2);
            }
        }
        want /= 36.0;
        assert!((increment_moment(0.0, 1.0, &m).unwrap() - want).abs() < 1e-12);
        assert!(increment_moment(0.6, 0.2, &m).is_err());
        assert!(matches!(
            increment_moment(0.0, 1.0, &md(3, 8)),
            Err(Error::ResourceLimit(_))
        ));
    }

    #[test]
    fn ks_examples() {
        assert!((ks_statistic(&[0.0; 10], &MuDistribution) - 0.25).abs() < 1e-15);
        let unif = Continuous(|x: f64| x.clamp(0.0, 1.0));
        assert!((ks_statistic(&[0.5], &unif) - 0.5).abs() < 1e-15);
        let grid: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        assert!(ks_statistic(&grid, &unif) <= 0.0005 + 1e-12);
    }

    #[test]
    fn tightness_sweep_is_replayable() {
        let m = md(3, 2);
        let a = tightness_sweep(&m, 10, 5).unwrap();
        let b = tightness_sweep(&m, 10, 5).unwrap();
        assert_eq!(a.observed, b.observed);
        assert!(a.pass);
        let empty = tightness_sweep(&m, 0, 5).unwrap();
        assert!(empty.pass);
        assert_eq!(empty.observed["max_ratio"], 0.0);
    }

    #[test]
    fn histogram_counts() {
        assert_eq!(
            value_histogram(&[1.0, 0.0, 1.0, -2.0]),
            vec![(-2.0, 1), (0.0, 1), (1.0, 2)]
        );
    }
}
