//! Sampling series on circles `|z| = r` and integral means `M_p(r, f)`.
//!
//! Samples come from a length-`M` inverse FFT of `a_n r^n`, so they are exact
//! up to rounding for the stored polynomial; the error bound carried by a
//! [`RingSamples`] is the truncation tail of the series. Means use the
//! periodic trapezoid rule, whose error is estimated by comparing against the
//! same rule on every other sample.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::TruncatedSeries;

/// Default number of samples on a circle.
pub const DEFAULT_SAMPLES: usize = 4096;

/// Default radii for sup-over-r estimates.
pub const DEFAULT_R_GRID: [f64; 11] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99];

/// Floor applied to `log|f|` samples.
pub const LOG_FLOOR: f64 = -1e3;

/// Values of a function or field at `M` equispaced points of `|z| = r`,
/// `t_j = 2 pi j / M`.
#[derive(Clone, Debug, PartialEq)]
pub struct RingSamples<T> {
    r: f64,
    values: Vec<T>,
    err_bound: f64,
}

impl<T> RingSamples<T> {
    pub fn new(r: f64, values: Vec<T>, err_bound: f64) -> Result<Self> {
        check_radius(r)?;
        let m = values.len();
        if m < 8 || !m.is_power_of_two() {
            return Err(Error::SampleCount { count: m, min: 8 });
        }
        if !(err_bound >= 0.0 && err_bound.is_finite()) {
            return Err(Error::Normalization(format!("error bound {err_bound} must be finite and nonnegative")));
        }
        Ok(Self { r, values, err_bound })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Uniform bound on `|sample - true value|`.
    pub fn err_bound(&self) -> f64 {
        self.err_bound
    }

    /// Angle `t_j` of sample `j`.
    pub fn angle(&self, j: usize) -> f64 {
        std::f64::consts::TAU * j as f64 / self.values.len() as f64
    }

    pub fn with_err_bound(mut self, err_bound: f64) -> Self {
        self.err_bound = err_bound;
        self
    }

    /// Pointwise map with a caller-supplied error bound for the result.
    pub fn map<U>(&self, f: impl Fn(&T) -> U, err_bound: f64) -> RingSamples<U> {
        RingSamples {
            r: self.r,
            values: self.values.iter().map(f).collect(),
            err_bound,
        }
    }
}

impl RingSamples<f64> {
    /// Samples of a real field given in closed form.
    pub fn from_fn(r: f64, m: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = (0..m).map(|j| f(std::f64::consts::TAU * j as f64 / m as f64)).collect();
        Self::new(r, values, 0.0)
    }

    pub fn negated(&self) -> Self {
        self.map(|v| -v, self.err_bound)
    }
}

impl RingSamples<Complex64> {
    /// `log|f|` floored at [`LOG_FLOOR`], with the error bound pushed through
    /// the logarithm: `|log a - log b| <= eps / (a - eps)`.
    pub fn log_modulus(&self) -> Result<RingSamples<f64>> {
        let eps = self.err_bound;
        let min_modulus = self.values.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min);
        let err = if eps == 0.0 {
            0.0
        } else if min_modulus > eps {
            eps / (min_modulus - eps)
        } else {
            return Err(Error::NotZeroFree { min_modulus, err: eps });
        };
        Ok(self.map(|v| v.norm().ln().max(LOG_FLOOR), err))
    }

    pub fn real_part(&self) -> RingSamples<f64> {
        self.map(|v| v.re, self.err_bound)
    }

    pub fn imag_part(&self) -> RingSamples<f64> {
        self.map(|v| v.im, self.err_bound)
    }
}

pub(crate) fn check_radius(r: f64) -> Result<()> {
    if r > 0.0 && r < 1.0 {
        Ok(())
    } else {
        Err(Error::Radius(r))
    }
}

/// Smallest admissible sample count for a series of order `order`, at least `min`.
pub fn samples_for_order(order: usize, min: usize) -> usize {
    (2 * (order + 1)).next_power_of_two().max(min).max(8)
}

/// Truncates `build` at orders `2^k - 1` (starting from `min_order`) until the
/// tail bound at `r_max` drops below `tol`, stopping at `max_order`.
pub fn series_for_radius(
    build: impl Fn(usize) -> TruncatedSeries,
    r_max: f64,
    tol: f64,
    min_order: usize,
    max_order: usize,
) -> TruncatedSeries {
    let mut len = (min_order + 1).next_power_of_two();
    loop {
        let s = build(len - 1);
        if s.tail_bound(r_max) <= tol || len > max_order {
            return s;
        }
        len *= 2;
    }
}

/// `sum_n c_n e^{i n t_j}` for `j < m`, with `c.len() <= m`.
pub(crate) fn synthesize(c: &[Complex64], m: usize) -> Vec<Complex64> {
    debug_assert!(c.len() <= m);
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    buf[..c.len()].copy_from_slice(c);
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_inverse(m).process(&mut buf);
    buf
}

/// Samples of `f(r e^{i(t_j + phi)})`.
pub(crate) fn sample_rotated(f: &TruncatedSeries, r: f64, m: usize, phi: f64) -> Result<RingSamples<Complex64>> {
    check_radius(r)?;
    let min = 2 * (f.order() + 1);
    if m < min.max(8) || !m.is_power_of_two() {
        return Err(Error::SampleCount { count: m, min: min.max(8) });
    }
    let mut rn = 1.0;
    let c: Vec<Complex64> = f
        .coeffs()
        .iter()
        .enumerate()
        .map(|(n, &a)| {
            let v = a * rn * Complex64::from_polar(1.0, n as f64 * phi);
            rn *= r;
            v
        })
        .collect();
    RingSamples::new(r, synthesize(&c, m), f.tail_bound(r))
}

/// `f(r e^{i t_j})` for `j < m` via a length-`m` discrete Fourier synthesis.
pub fn sample_circle(f: &TruncatedSeries, r: f64, m: usize) -> Result<RingSamples<Complex64>> {
    sample_rotated(f, r, m, 0.0)
}

/// Exponent of an integral mean; `Infinity` selects the maximum modulus.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(p) => write!(f, "{p}"),
            Exponent::Infinity => f.write_str("inf"),
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inf" | "infinity" | "∞" => Ok(Exponent::Infinity),
            _ => s
                .parse::<f64>()
                .map(Exponent::Finite)
                .map_err(|_| Error::Config(format!("cannot parse exponent `{s}`"))),
        }
    }
}

impl From<f64> for Exponent {
    fn from(p: f64) -> Self {
        if p == f64::INFINITY {
            Exponent::Infinity
        } else {
            Exponent::Finite(p)
        }
    }
}

/// A quadrature result with its error budget.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanValue {
    pub value: f64,
    pub err_bound: f64,
    /// The value is a maximum over the sample grid, which can only
    /// underestimate the true maximum.
    pub grid_max: bool,
}

/// Anything with a modulus.
pub trait Modulus {
    fn modulus(&self) -> f64;
}

impl Modulus for f64 {
    fn modulus(&self) -> f64 {
        self.abs()
    }
}

impl Modulus for Complex64 {
    fn modulus(&self) -> f64 {
        self.norm()
    }
}

/// Worst change of `a^p` when `a` moves by at most `eps` (staying positive).
fn power_perturbation(a: f64, p: f64, eps: f64) -> f64 {
    if eps == 0.0 {
        return 0.0;
    }
    let base = a.powf(p);
    let up = ((a + eps).powf(p) - base).abs();
    let down = if a > eps { ((a - eps).powf(p) - base).abs() } else { base };
    up.max(down)
}

/// Normalized `int |u|^p dt / 2 pi` by the periodic trapezoid rule.
pub fn power_integral<T: Modulus>(s: &RingSamples<T>, p: f64, zero_free_floor: Option<f64>) -> Result<MeanValue> {
    if p == 0.0 {
        return Err(Error::ZeroExponent);
    }
    let moduli: Vec<f64> = s.values.iter().map(Modulus::modulus).collect();
    let eps = s.err_bound;
    if p < 0.0 {
        let min_modulus = moduli.iter().copied().fold(f64::INFINITY, f64::min);
        let floor = zero_free_floor.unwrap_or(0.0).max(eps);
        if !(min_modulus > floor) {
            return Err(Error::NotZeroFree { min_modulus, err: eps });
        }
    }
    let m = moduli.len();
    let full: f64 = moduli.iter().map(|a| a.powf(p)).sum::<f64>() / m as f64;
    let half: f64 = moduli.iter().step_by(2).map(|a| a.powf(p)).sum::<f64>() / (m / 2) as f64;
    let sample_err: f64 = moduli.iter().map(|&a| power_perturbation(a, p, eps)).sum::<f64>() / m as f64;
    Ok(MeanValue {
        value: full,
        err_bound: sample_err + (full - half).abs(),
        grid_max: false,
    })
}

/// `M_p(r, f) = (int |f|^p dt / 2 pi)^{1/p}`, or the grid maximum for `p = inf`.
pub fn integral_mean<T: Modulus>(s: &RingSamples<T>, p: Exponent, zero_free_floor: Option<f64>) -> Result<MeanValue> {
    let p = match p {
        Exponent::Infinity => {
            let max_of = |step: usize| s.values.iter().step_by(step).map(Modulus::modulus).fold(0.0, f64::max);
            let full = max_of(1);
            return Ok(MeanValue {
                value: full,
                err_bound: s.err_bound + (full - max_of(2)),
                grid_max: true,
            });
        }
        Exponent::Finite(p) => p,
    };
    let integral = power_integral(s, p, zero_free_floor)?;
    let value = integral.value.powf(1.0 / p);
    let delta = integral.err_bound;
    let hi = (integral.value + delta).powf(1.0 / p);
    let lo = (integral.value - delta).max(0.0).powf(1.0 / p);
    let err_bound = (hi - value).abs().max((lo - value).abs());
    Ok(MeanValue {
        value,
        err_bound: if err_bound.is_nan() { f64::INFINITY } else { err_bound },
        grid_max: false,
    })
}

/// Estimate of `||f||_{H^p}` from below: the largest mean over `r_grid`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HardyEstimate {
    pub value: f64,
    pub err_bound: f64,
    pub radius: f64,
}

pub fn hardy_norm(f: &TruncatedSeries, p: Exponent, r_grid: &[f64], m: usize) -> Result<HardyEstimate> {
    if r_grid.is_empty() {
        return Err(Error::Config("empty radius grid".into()));
    }
    let means: Vec<MeanValue> = r_grid
        .par_iter()
        .map(|&r| integral_mean(&sample_circle(f, r, m)?, p, None))
        .collect::<Result<_>>()?;
    let (i, best) = means
        .iter()
        .enumerate()
        .fold((0, means[0]), |acc, (i, v)| if v.value > acc.1.value { (i, *v) } else { acc });
    Ok(HardyEstimate {
        value: best.value,
        err_bound: best.err_bound,
        radius: r_grid[i],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{Catalog, GrowthClass};
    use std::f64::consts::PI;

    /// Parseval: `sum |a_n|^2 r^{2n}`, straight from the coefficients.
    fn parseval(f: &TruncatedSeries, r: f64) -> f64 {
        f.coeffs().iter().enumerate().map(|(n, a)| a.norm_sqr() * r.powi(2 * n as i32)).sum()
    }

    #[test]
    fn constant_samples() {
        let c = TruncatedSeries::from_real(&[2.5], GrowthClass::Finite).unwrap();
        let s = sample_circle(&c, 0.3, 16).unwrap();
        assert_eq!(s.err_bound(), 0.0);
        assert!(s.values().iter().all(|v| (v - 2.5).norm() < 1e-15));
        for p in [0.5, 1.0, 3.0, -2.0] {
            let m = integral_mean(&s, Exponent::Finite(p), None).unwrap();
            assert!((m.value - 2.5).abs() < 1e-13, "p={p}");
        }
        assert_eq!(integral_mean(&s, Exponent::Infinity, None).unwrap().value, 2.5);
    }

    #[test]
    fn point_values() {
        let i = Catalog::Identity.series(256);
        let s = sample_circle(&i, 0.5, 1024).unwrap();
        assert!((s.values()[0] - 2.0).norm() <= s.err_bound() + 1e-13);
        let k = Catalog::Koebe.series(256);
        let s = sample_circle(&k, 0.5, 1024).unwrap();
        // k(-1/2) = (-1/2) / (3/2)^2
        assert!((s.values()[512] + 2.0 / 9.0).norm() <= s.err_bound() + 1e-13);
    }

    #[test]
    fn rejects_bad_inputs() {
        let i = Catalog::Identity.series(256);
        assert!(matches!(sample_circle(&i, 0.5, 256), Err(Error::SampleCount { .. })));
        assert!(matches!(sample_circle(&i, 0.5, 1000), Err(Error::SampleCount { .. })));
        assert!(matches!(sample_circle(&i, 1.0, 1024), Err(Error::Radius(_))));
        let s = sample_circle(&i, 0.5, 1024).unwrap();
        assert!(matches!(integral_mean(&s, Exponent::Finite(0.0), None), Err(Error::ZeroExponent)));
        let k = sample_circle(&Catalog::Koebe.series(8), 0.5, 32).unwrap();
        // Koebe vanishes at 0 but not on the circle; a floor above min |k| trips the check.
        assert!(integral_mean(&k, Exponent::Finite(-1.0), Some(1.0)).is_err());
    }

    #[test]
    fn identity_means() {
        for r in [0.3, 0.6, 0.9] {
            let i = series_for_radius(|n| Catalog::Identity.series(n), r, 1e-14, 255, 8191);
            let m = samples_for_order(i.order(), DEFAULT_SAMPLES);
            let s = sample_circle(&i, r, m).unwrap();
            let m2 = integral_mean(&s, Exponent::Finite(2.0), None).unwrap();
            let want = (1.0 / (1.0 - r * r)).sqrt();
            assert!((m2.value - want).abs() < 1e-10, "r={r}");
            let minf = integral_mean(&s, Exponent::Infinity, None).unwrap();
            assert!(minf.grid_max);
            assert!((minf.value - 1.0 / (1.0 - r)).abs() <= minf.err_bound + 1e-10);
        }
    }

    #[test]
    fn parseval_for_catalog() {
        for f in Catalog::ALL {
            for &r in &DEFAULT_R_GRID {
                let s = series_for_radius(|n| f.series(n), r, 1e-12, 255, 8191);
                let samples = sample_circle(&s, r, samples_for_order(s.order(), DEFAULT_SAMPLES)).unwrap();
                let m2 = integral_mean(&samples, Exponent::Finite(2.0), None).unwrap();
                let direct = parseval(&s, r);
                let budget = 3.0 * (samples.err_bound() + m2.err_bound) * (2.0 * m2.value) + 1e-12 * direct;
                assert!((m2.value.powi(2) - direct).abs() <= budget, "{f} r={r}: {} vs {direct}", m2.value.powi(2));
            }
        }
    }

    #[test]
    fn monotone_in_radius_and_exponent() {
        let ps = [0.5, 1.0, 2.0, 4.0];
        for f in [Catalog::Koebe, Catalog::Strip, Catalog::HalfplaneConv, Catalog::InvSq] {
            let s = series_for_radius(|n| f.series(n), 0.99, 1e-12, 255, 8191);
            let m = samples_for_order(s.order(), DEFAULT_SAMPLES);
            let mut prev = vec![0.0; ps.len()];
            for &r in &DEFAULT_R_GRID {
                let samples = sample_circle(&s, r, m).unwrap();
                let means: Vec<MeanValue> = ps.iter().map(|&p| integral_mean(&samples, Exponent::Finite(p), None).unwrap()).collect();
                for (k, mv) in means.iter().enumerate() {
                    assert!(mv.value >= prev[k] - mv.err_bound - 1e-12, "{f} r={r} p={}", ps[k]);
                    prev[k] = mv.value;
                }
                for w in means.windows(2) {
                    assert!(w[1].value >= w[0].value - w[0].err_bound - w[1].err_bound - 1e-12, "{f} r={r}");
                }
            }
        }
    }

    #[test]
    fn trig_polynomials_are_integrated_exactly() {
        // f = 1 + 2z - z^3 at r = 0.8: |f|^4 has degree 12 < M = 16
        let f = TruncatedSeries::from_real(&[1.0, 2.0, 0.0, -1.0], GrowthClass::Finite).unwrap();
        let s = sample_circle(&f, 0.8, 16).unwrap();
        let m4 = integral_mean(&s, Exponent::Finite(4.0), None).unwrap();
        // Independent route: |f|^2 as a Laurent polynomial, then Parseval on it.
        let a: Vec<f64> = [1.0, 2.0, 0.0, -1.0].iter().enumerate().map(|(n, c)| c * 0.8f64.powi(n as i32)).collect();
        let mut g = [0.0; 7]; // coefficients of e^{ikt}, k = -3..3
        for (i, ai) in a.iter().enumerate() {
            for (j, aj) in a.iter().enumerate() {
                g[(i as i64 - j as i64 + 3) as usize] += ai * aj;
            }
        }
        let want: f64 = g.iter().map(|x| x * x).sum::<f64>().powf(0.25);
        assert!((m4.value - want).abs() < 1e-13);
    }

    #[test]
    fn hardy_norms() {
        let c = TruncatedSeries::from_real(&[-3.0], GrowthClass::Finite).unwrap();
        let h = hardy_norm(&c, Exponent::Finite(0.7), &DEFAULT_R_GRID, 64).unwrap();
        assert!((h.value - 3.0).abs() < 1e-13);

        // I is in H^{1/2}: the grid estimate sits below the r = 0.999 mean.
        let i = series_for_radius(|n| Catalog::Identity.series(n), 0.999, 1e-12, 255, 1 << 15);
        let m = samples_for_order(i.order(), DEFAULT_SAMPLES);
        let est = hardy_norm(&i, Exponent::Finite(0.5), &DEFAULT_R_GRID, m).unwrap();
        let near_one = integral_mean(&sample_circle(&i, 0.999, m).unwrap(), Exponent::Finite(0.5), None).unwrap();
        assert_eq!(est.radius, 0.99);
        assert!(est.value <= near_one.value + near_one.err_bound);
        // ||I||_{H^{1/2}} = (B(1/4, 1/2) / (pi sqrt 2))^2 = 1.39320...
        assert!(near_one.value < 1.3933);
        assert!(near_one.value - est.value < 0.1);

        // I is not in H^2.
        let est2 = hardy_norm(&i, Exponent::Finite(2.0), &[0.9, 0.99, 0.999], m).unwrap();
        assert!(est2.value > 20.0);
        assert!((est2.value - (1.0 / (1.0 - 0.999f64.powi(2))).sqrt()).abs() < 1e-6);
    }

    #[test]
    fn hardy_parallel_matches_sequential() {
        let k = Catalog::Koebe.series(255);
        let par = hardy_norm(&k, Exponent::Finite(1.5), &DEFAULT_R_GRID[..8], 4096).unwrap();
        let seq = DEFAULT_R_GRID[..8]
            .iter()
            .map(|&r| integral_mean(&sample_circle(&k, r, 4096).unwrap(), Exponent::Finite(1.5), None).unwrap().value)
            .fold(0.0, f64::max);
        assert_eq!(par.value, seq);
    }

    #[test]
    fn log_modulus_error_propagation() {
        let i = Catalog::Identity.series(31);
        let s = sample_circle(&i, 0.5, 64).unwrap();
        let l = s.log_modulus().unwrap();
        // log|1/(1 - z)| at z = 0.5 is log 2
        assert!((l.values()[0] - 2f64.ln()).abs() <= l.err_bound() + 1e-14);
        assert!(l.err_bound() > 0.0);
        let u = RingSamples::from_fn(0.5, 64, |t| t.cos()).unwrap();
        assert!((u.values()[32] + 1.0).abs() < 1e-15);
        assert!((u.angle(32) - PI).abs() < 1e-15);
    }
}
