//! The limiting random Fourier series
//! `Kl(t) = t U_0 + sum_{h != 0} (e(ht) - 1)/(2 pi i h) U_h`
//! with i.i.d. coefficients of law `mu = delta_0 / 2 + mu_1`, where `mu_1` is the
//! mass-1/2 arcsine law on `[-2, 2]`.
//!
//! Sampling is reproducible: realisation `i` under seed `s` reads ChaCha8
//! stream `i` of the generator seeded with `s`, so it does not depend on how
//! realisations are scheduled across threads.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::kloosterman::beta_coeff;
use crate::summation::{ordered_complex_sum, ordered_sum};

/// Default truncation order for distribution-level comparisons.
pub const DEFAULT_TRUNCATION: usize = 1024;

/// Generator for realisation `index` under `seed`.
pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// The law `mu`. Zero-sized; all methods are associated functions.
#[derive(Debug, Clone, Copy, Default)]
pub struct MuDistribution;

impl MuDistribution {
    /// Zero with probability 1/2, otherwise `2 cos(pi V)` with `V` uniform.
    pub fn sample<R: Rng + ?Sized>(rng: &mut R) -> f64 {
        if rng.random::<bool>() {
            0.0
        } else {
            2.0 * (PI * rng.random::<f64>()).cos()
        }
    }

    /// `int x^m d mu`: 1 for `m = 0`, `binom(m, m/2)/2` for even `m`, 0 for odd.
    pub fn moment(m: u32) -> f64 {
        if m == 0 {
            return 1.0;
        }
        if m % 2 == 1 {
            return 0.0;
        }
        let k = m / 2;
        let binom = (1..=k).fold(1.0f64, |acc, i| acc * (k + i) as f64 / i as f64);
        binom.round() / 2.0
    }

    /// Right-continuous CDF.
    pub fn cdf(x: f64) -> f64 {
        let continuous = ((x / 2.0).clamp(-1.0, 1.0).asin() + PI / 2.0) / (2.0 * PI);
        let atom = if x >= 0.0 { 0.5 } else { 0.0 };
        (continuous + atom).clamp(0.0, 1.0)
    }

    /// `F(x-)`, the left limit of the CDF.
    pub fn cdf_left(x: f64) -> f64 {
        let continuous = ((x / 2.0).clamp(-1.0, 1.0).asin() + PI / 2.0) / (2.0 * PI);
        let atom = if x > 0.0 { 0.5 } else { 0.0 };
        (continuous + atom).clamp(0.0, 1.0)
    }
}

pub fn mu_sample<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    MuDistribution::sample(rng)
}

pub fn mu_moment(m: u32) -> f64 {
    MuDistribution::moment(m)
}

pub fn mu_cdf(x: f64) -> f64 {
    MuDistribution::cdf(x)
}

/// One realisation `(U_h)_{|h| <= H}`.
///
/// Coefficients are drawn in the order `U_0, U_1, U_-1, U_2, U_-2, ...`, so a
/// variate of order `2H` restricted to `|h| <= H` is the variate of order `H`
/// with the same seed and index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesVariate {
    h_max: usize,
    seed: u64,
    index: u64,
    /// `u[0] = U_0`, `u[2h-1] = U_h`, `u[2h] = U_-h`.
    u: Vec<f64>,
}

impl SeriesVariate {
    pub fn sample(h_max: usize, seed: u64, index: u64) -> Self {
        assert!(h_max >= 1, "truncation order must be at least 1");
        let mut rng = substream(seed, index);
        let u = (0..=2 * h_max).map(|_| mu_sample(&mut rng)).collect();
        Self {
            h_max,
            seed,
            index,
            u,
        }
    }

    /// A variate with explicit coefficients `U_-H..=U_H` (index `h + H`).
    pub fn from_coefficients(coeffs: &[f64]) -> Self {
        assert!(coeffs.len() % 2 == 1 && coeffs.len() >= 3);
        let h_max = coeffs.len() / 2;
        let mut u = vec![coeffs[h_max]];
        for h in 1..=h_max {
            u.push(coeffs[h_max + h]);
            u.push(coeffs[h_max - h]);
        }
        Self {
            h_max,
            seed: 0,
            index: 0,
            u,
        }
    }

    pub fn h_max(&self) -> usize {
        self.h_max
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `U_h` for `|h| <= H`.
    pub fn coefficient(&self, h: i64) -> f64 {
        let k = h.unsigned_abs() as usize;
        assert!(k <= self.h_max);
        match h.signum() {
            0 => self.u[0],
            1 => self.u[2 * k - 1],
            _ => self.u[2 * k],
        }
    }

    /// `Kl_H(t)` with `H` replaced by `truncation <= h_max`.
    pub fn eval_truncated(&self, t: f64, truncation: usize) -> Complex64 {
        let truncation = truncation.min(self.h_max);
        let mut acc = Complex64::new(t * self.u[0], 0.0);
        for h in 1..=truncation {
            // beta(-h, t) = conj(beta(h, t))
            let beta = beta_coeff(h as i64, t);
            acc += beta * self.u[2 * h - 1] + beta.conj() * self.u[2 * h];
        }
        acc
    }
}

/// `Kl_H(t)`, summed in increasing `|h|` with `h` and `-h` grouped.
pub fn series_eval(t: f64, v: &SeriesVariate) -> Complex64 {
    v.eval_truncated(t, v.h_max)
}

/// Coefficients `beta(h, t)` for `h = 1..=H` on a fixed grid, shared by all
/// realisations evaluated on that grid.
#[derive(Debug, Clone)]
pub struct SeriesBasis {
    ts: Vec<f64>,
    h_max: usize,
    /// row-major `[grid index][h - 1]`
    beta: Vec<Complex64>,
}

impl SeriesBasis {
    pub fn new(ts: &[f64], h_max: usize) -> Self {
        let beta = ts
            .iter()
            .flat_map(|&t| (1..=h_max).map(move |h| beta_coeff(h as i64, t)))
            .collect();
        Self {
            ts: ts.to_vec(),
            h_max,
            beta,
        }
    }

    pub fn eval(&self, v: &SeriesVariate) -> Vec<Complex64> {
        assert!(v.h_max >= self.h_max);
        self.ts
            .iter()
            .enumerate()
            .map(|(g, &t)| {
                let row = &self.beta[g * self.h_max..(g + 1) * self.h_max];
                let mut acc = Complex64::new(t * v.u[0], 0.0);
                for (k, b) in row.iter().enumerate() {
                    acc += b * v.u[2 * k + 1] + b.conj() * v.u[2 * k + 2];
                }
                acc
            })
            .collect()
    }
}

/// `N` independent realisations of `Kl_H` on `grid`; row `i` depends only on
/// `(seed, i)`.
pub fn series_sample_paths(grid: &[f64], h_max: usize, samples: usize, seed: u64) -> Vec<Vec<Complex64>> {
    let basis = SeriesBasis::new(grid, h_max);
    (0..samples as u64)
        .into_par_iter()
        .map(|i| basis.eval(&SeriesVariate::sample(h_max, seed, i)))
        .collect()
}

/// A Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub mean: Complex64,
    /// `sqrt((Var Re + Var Im) / N)`.
    pub std_error: f64,
    pub samples: usize,
}

impl MonteCarloEstimate {
    pub fn from_values(values: &[Complex64]) -> Self {
        let n = values.len();
        assert!(n > 0);
        let mean = ordered_complex_sum(values.iter().copied()) / n as f64;
        let var = if n > 1 {
            ordered_sum(values.iter().map(|z| (z - mean).norm_sqr())) / (n - 1) as f64
        } else {
            0.0
        };
        Self {
            mean,
            std_error: (var / n as f64).sqrt(),
            samples: n,
        }
    }
}

/// `prod_i conj(z_i)^{m_i} z_i^{n_i}`.
pub fn moment_product(values: &[Complex64], conj_powers: &[u32], powers: &[u32]) -> Complex64 {
    values
        .iter()
        .zip(conj_powers.iter().zip(powers))
        .fold(Complex64::new(1.0, 0.0), |acc, (z, (&m, &n))| {
            acc * z.conj().powu(m) * z.powu(n)
        })
}

/// Monte Carlo estimate of `E prod_i conj(Kl_H(t_i))^{m_i} Kl_H(t_i)^{n_i}`.
pub fn series_moment_mc(
    ts: &[f64],
    conj_powers: &[u32],
    powers: &[u32],
    h_max: usize,
    samples: usize,
    seed: u64,
) -> MonteCarloEstimate {
    assert!(!ts.is_empty() && ts.len() == conj_powers.len() && ts.len() == powers.len());
    let basis = SeriesBasis::new(ts, h_max);
    let products: Vec<Complex64> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let vals = basis.eval(&SeriesVariate::sample(h_max, seed, i));
            moment_product(&vals, conj_powers, powers)
        })
        .collect();
    MonteCarloEstimate::from_values(&products)
}

/// Mean of `|Kl_{2H}(t) - Kl_H(t)|` over realisations and the given `t` values,
/// for each `H` in `orders`.
pub fn truncation_gaps(ts: &[f64], orders: &[usize], realisations: usize, seed: u64) -> Vec<(usize, f64)> {
    orders
        .iter()
        .map(|&h| {
            let gaps: Vec<f64> = (0..realisations as u64)
                .into_par_iter()
                .map(|i| {
                    let v = SeriesVariate::sample(2 * h, seed, i);
                    ts.iter()
                        .map(|&t| {
                            let mut tail = Complex64::new(0.0, 0.0);
                            for k in h + 1..=2 * h {
                                let b = beta_coeff(k as i64, t);
                                tail += b * v.u[2 * k - 1] + b.conj() * v.u[2 * k];
                            }
                            tail.norm()
                        })
                        .sum::<f64>()
                        / ts.len() as f64
                })
                .collect();
            (h, ordered_sum(gaps) / realisations as f64)
        })
        .collect()
}

/// Mean over realisations of `max_t |Kl_H(t)|` on an equispaced grid of
/// `grid_points` values of `t`.
pub fn sup_norms(orders: &[usize], grid_points: usize, realisations: usize, seed: u64) -> Vec<(usize, f64)> {
    let grid: Vec<f64> = (0..grid_points).map(|i| i as f64 / (grid_points - 1) as f64).collect();
    orders
        .iter()
        .map(|&h| {
            let basis = SeriesBasis::new(&grid, h);
            let maxima: Vec<f64> = (0..realisations as u64)
                .into_par_iter()
                .map(|i| {
                    basis
                        .eval(&SeriesVariate::sample(h, seed, i))
                        .iter()
                        .map(|z| z.norm())
                        .fold(0.0, f64::max)
                })
                .collect();
            (h, ordered_sum(maxima) / realisations as f64)
        })
        .collect()
}

/// Largest increment `|Kl_H(t_{i+1}) - Kl_H(t_i)|` over an equispaced grid,
/// averaged over realisations, for each grid size.
pub fn max_increments(h_max: usize, grid_sizes: &[usize], realisations: usize, seed: u64) -> Vec<(usize, f64)> {
    grid_sizes
        .iter()
        .map(|&g| {
            let grid: Vec<f64> = (0..=g).map(|i| i as f64 / g as f64).collect();
            let basis = SeriesBasis::new(&grid, h_max);
            let maxima: Vec<f64> = (0..realisations as u64)
                .into_par_iter()
                .map(|i| {
                    let vals = basis.eval(&SeriesVariate::sample(h_max, seed, i));
                    vals.windows(2).map(|w| (w[1] - w[0]).norm()).fold(0.0, f64::max)
                })
                .collect();
            (g, ordered_sum(maxima) / realisations as f64)
        })
        .collect()
}

/// Least-squares fit of `y = C x^e` on log-log axes; returns `(C, e)`.
pub fn fit_power_law(points: &[(usize, f64)]) -> (f64, f64) {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .map(|&(x, y)| ((x as f64).ln(), y.ln()))
        .collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    ((my - slope * mx).exp(), slope)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_of_mu() {
        assert_eq!(mu_moment(0), 1.0);
        assert_eq!(mu_moment(3), 0.0);
        assert_eq!(mu_moment(2), 1.0);
        assert_eq!(mu_moment(4), 3.0);
        assert_eq!(mu_moment(6), 10.0);
        assert_eq!(mu_moment(8), 35.0);
    }

    #[test]
    fn cdf_examples() {
        assert_eq!(mu_cdf(-2.0), 0.0);
        assert_eq!(mu_cdf(-3.0), 0.0);
        assert!((MuDistribution::cdf_left(0.0) - 0.25).abs() < 1e-15);
        assert!((mu_cdf(-1e-12) - 0.25).abs() < 1e-12);
        assert!((mu_cdf(0.0) - 0.75).abs() < 1e-15);
        assert_eq!(mu_cdf(2.0), 1.0);
        assert_eq!(mu_cdf(5.0), 1.0);
        // symmetry: F(-x) = 1 - F(x-)
        for x in [0.3, 1.0, 1.7] {
            assert!((mu_cdf(-x) - (1.0 - MuDistribution::cdf_left(x))).abs() < 1e-14);
        }
    }

    #[test]
    fn sampler_support_and_mass() {
        let mut rng = substream(1, 0);
        let n = 200_000;
        let mut zeros = 0;
        let mut sum = 0.0;
        for _ in 0..n {
            let x = mu_sample(&mut rng);
            assert!((-2.0..=2.0).contains(&x));
            if x == 0.0 {
                zeros += 1;
            }
            sum += x;
        }
        assert!((zeros as f64 / n as f64 - 0.5).abs() < 0.005);
        assert!((sum / n as f64).abs() < 0.01);
    }

    #[test]
    fn series_eval_examples() {
        let v = SeriesVariate::sample(64, 9, 3);
        assert!((series_eval(1.0, &v) - v.coefficient(0)).norm() < 1e-12);
        assert_eq!(series_eval(0.0, &v), Complex64::new(0.0, 0.0));
        let mut c = vec![0.0; 9];
        c[4] = 2.0;
        let single = SeriesVariate::from_coefficients(&c);
        assert_eq!(single.coefficient(0), 2.0);
        assert!((series_eval(0.5, &single) - 1.0).norm() < 1e-15);
    }

    #[test]
    fn coefficient_layout() {
        let c = [-1.5, 0.25, 0.0, 1.0, 2.0];
        let v = SeriesVariate::from_coefficients(&c);
        for h in -2..=2i64 {
            assert_eq!(v.coefficient(h), c[(h + 2) as usize]);
        }
    }

    #[test]
    fn truncations_are_nested() {
        let small = SeriesVariate::sample(8, 42, 5);
        let large = SeriesVariate::sample(16, 42, 5);
        for h in -8..=8 {
            assert_eq!(small.coefficient(h), large.coefficient(h));
        }
        assert_eq!(series_eval(0.3, &small), large.eval_truncated(0.3, 8));
    }

    #[test]
    fn basis_matches_direct_eval() {
        let ts = [0.0, 0.2, 0.5, 0.93, 1.0];
        let basis = SeriesBasis::new(&ts, 32);
        let v = SeriesVariate::sample(32, 7, 11);
        for (z, &t) in basis.eval(&v).iter().zip(&ts) {
            assert!((z - series_eval(t, &v)).norm() < 1e-13);
        }
    }

    #[test]
    fn sample_paths_are_reproducible_and_row_local() {
        let grid = [0.0, 0.5, 1.0];
        let a = series_sample_paths(&grid, 16, 8, 7);
        let b = series_sample_paths(&grid, 16, 8, 7);
        assert_eq!(a, b);
        let longer = series_sample_paths(&grid, 16, 12, 7);
        assert_eq!(&longer[..8], &a[..]);
        for row in &a {
            assert_eq!(row[0], Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn mc_moment_of_u0() {
        let est = series_moment_mc(&[1.0], &[0], &[2], 4, 20_000, 3);
        assert!((est.mean.re - 1.0).abs() < 4.0 * est.std_error);
        let est = series_moment_mc(&[1.0], &[0], &[3], 4, 20_000, 3);
        assert!(est.mean.norm() < 4.0 * est.std_error);
    }

    #[test]
    fn power_law_fit_recovers_exponent() {
        let pts: Vec<(usize, f64)> = [8usize, 16, 32, 64].iter().map(|&h| (h, 3.0 * (h as f64).powf(-0.5))).collect();
        let (c, e) = fit_power_law(&pts);
        assert!((c - 3.0).abs() < 1e-12 && (e + 0.5).abs() < 1e-12);
    }
}
