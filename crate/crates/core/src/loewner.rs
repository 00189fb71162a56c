//! Class-`S` coefficients from radial Loewner chains with piecewise-constant
//! driving, and a search for odd univalent functions with `|a_5| > 1`.
//!
//! The chain `f(z, t) = e^t (z + a_2(t) z^2 + ...)` solves
//! `df/dt = z f'(z, t) (1 + kappa(t) z) / (1 - kappa(t) z)`, which on
//! coefficients reads
//!
//! ```text
//! a_n' = (n - 1) a_n + 2 sum_{k=1}^{n-1} k a_k kappa^{n-k},   a_1 = 1.
//! ```
//!
//! For constant `kappa` the bounded solution is the rotated Koebe function
//! `a_n = n (-kappa)^{n-1}`; that closed form seeds the chain at `t = T`.
//! The system is stiff in `t` (rates up to `N - 1`), so it is integrated
//! backwards in `tau = e^{-t}` for `b_n = tau^{n-1} a_n`:
//!
//! ```text
//! db_n/dtau = -2 kappa sum_{k=1}^{n-1} k b_k (kappa tau)^{n-1-k},
//! ```
//!
//! which has polynomial coefficients and returns `b_n(1) = a_n(0) = A_n`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::circle::{sample_circle, samples_for_order};
use crate::error::{Error, Result};
use crate::series::{divide_by_z, odd_sqrt_transform, GrowthClass, TruncatedSeries};

/// Largest supported coefficient order.
pub const MAX_ORDER: usize = 64;

/// Largest allowed driving horizon.
pub const MAX_HORIZON: f64 = 50.0;

/// Coefficients from step `h` and `h/2` must agree to this absolute tolerance.
pub const CERTIFY_TOL: f64 = 1e-8;

/// Target for `|a_5|` in the search.
pub const A5_THRESHOLD: f64 = 1.001;

/// Piecewise-constant unimodular driving `kappa(t) = e^{i angles[j]}` on
/// `[breakpoints[j], breakpoints[j + 1])` and `e^{i tail_angle}` for `t >= T`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Driving {
    pub breakpoints: Vec<f64>,
    pub angles: Vec<f64>,
    pub tail_angle: f64,
}

impl Driving {
    pub fn new(breakpoints: Vec<f64>, angles: Vec<f64>, tail_angle: f64) -> Result<Self> {
        let d = Self { breakpoints, angles, tail_angle };
        d.validate()?;
        Ok(d)
    }

    /// Constant driving `e^{i angle}` for all `t >= 0`.
    pub fn constant(angle: f64) -> Self {
        Self { breakpoints: vec![0.0], angles: vec![], tail_angle: angle }
    }

    pub fn validate(&self) -> Result<()> {
        if self.breakpoints.first() != Some(&0.0) {
            return Err(Error::Driving("breakpoints must start at 0".into()));
        }
        if self.breakpoints.len() != self.angles.len() + 1 {
            return Err(Error::Driving(format!(
                "{} breakpoints need {} segment angles, got {}",
                self.breakpoints.len(),
                self.breakpoints.len() - 1,
                self.angles.len()
            )));
        }
        if self.breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Driving("breakpoints must be strictly increasing".into()));
        }
        if !(self.horizon() <= MAX_HORIZON) {
            return Err(Error::Driving(format!("horizon {} exceeds {MAX_HORIZON}", self.horizon())));
        }
        if self.angles.iter().chain([&self.tail_angle]).any(|a| !a.is_finite()) {
            return Err(Error::Driving("angles must be finite".into()));
        }
        Ok(())
    }

    pub fn horizon(&self) -> f64 {
        *self.breakpoints.last().unwrap_or(&0.0)
    }

    pub fn segments(&self) -> usize {
        self.angles.len()
    }

    pub fn kappa(&self, t: f64) -> Complex64 {
        let j = self.breakpoints.partition_point(|&b| b <= t);
        let angle = if j == 0 || j > self.angles.len() { self.tail_angle } else { self.angles[j - 1] };
        Complex64::from_polar(1.0, angle)
    }

    /// `log(H(z) / z)` on the branch vanishing at 0, where `H` is the time-0
    /// map of the chain.
    ///
    /// On a segment of length `d` with constant `kappa` the transition map
    /// `w -> w'` solves `k(w') = e^{-d} k(w)` for `k(w) = w / (1 + kappa w)^2`,
    /// so `H = e^T k_tail o phi_m o ... o phi_1` and each factor of `H(z)/z`
    /// has a principal logarithm.
    pub fn log_ratio(&self, z: Complex64) -> Complex64 {
        let one = Complex64::new(1.0, 0.0);
        let mut w = z;
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, &a) in self.angles.iter().enumerate() {
            let kappa = Complex64::from_polar(1.0, a);
            let d = self.breakpoints[j + 1] - self.breakpoints[j];
            let y = kappa * w / ((one + kappa * w) * (one + kappa * w)) * (-d).exp();
            let s = (one - y * 4.0).sqrt();
            // u = (1 - s) / (1 + s) without the cancellation
            let next = y * 4.0 / ((one + s) * (one + s)) / kappa;
            acc += ((one + kappa * next).ln() - (one + kappa * w).ln()) * 2.0;
            w = next;
        }
        acc - (one + Complex64::from_polar(1.0, self.tail_angle) * w).ln() * 2.0
    }

    /// `H(z)` from the closed-form transition maps.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        z * self.log_ratio(z).exp()
    }

    /// Adds `beta` to every angle.
    pub fn rotated(&self, beta: f64) -> Self {
        Self {
            breakpoints: self.breakpoints.clone(),
            angles: self.angles.iter().map(|a| a + beta).collect(),
            tail_angle: self.tail_angle + beta,
        }
    }
}

/// `-2 kappa sum_{k < n} k b_k w^{n-1-k}` for every `n`, with `w = kappa tau`.
fn rhs(b: &[Complex64], kappa: Complex64, tau: f64, out: &mut [Complex64]) {
    let w = kappa * tau;
    let scale = kappa * -2.0;
    let mut acc = Complex64::new(0.0, 0.0);
    out[0] = Complex64::new(0.0, 0.0); // n = 1
    for n in 2..=b.len() {
        acc = acc * w + b[n - 2] * (n - 1) as f64;
        out[n - 1] = scale * acc;
    }
}

/// Fixed-step RK4 in `tau`; returns `A_1..A_order`.
fn integrate(d: &Driving, order: usize, step: f64) -> Vec<Complex64> {
    let tail = Complex64::from_polar(1.0, d.tail_angle);
    let tau_end = (-d.horizon()).exp();
    let mut b: Vec<Complex64> = (1..=order)
        .map(|n| (-tail).powu(n as u32 - 1) * (n as f64) * tau_end.powi(n as i32 - 1))
        .collect();
    let mut k1 = vec![Complex64::new(0.0, 0.0); order];
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    let mut k4 = k1.clone();
    let mut tmp = k1.clone();
    for j in (0..d.segments()).rev() {
        let kappa = Complex64::from_polar(1.0, d.angles[j]);
        let lo = (-d.breakpoints[j + 1]).exp();
        let hi = (-d.breakpoints[j]).exp();
        let steps = ((hi - lo) / step).ceil().max(1.0) as usize;
        let h = (hi - lo) / steps as f64;
        for s in 0..steps {
            let tau = lo + h * s as f64;
            rhs(&b, kappa, tau, &mut k1);
            for i in 0..order {
                tmp[i] = b[i] + k1[i] * (h / 2.0);
            }
            rhs(&tmp, kappa, tau + h / 2.0, &mut k2);
            for i in 0..order {
                tmp[i] = b[i] + k2[i] * (h / 2.0);
            }
            rhs(&tmp, kappa, tau + h / 2.0, &mut k3);
            for i in 0..order {
                tmp[i] = b[i] + k3[i] * h;
            }
            rhs(&tmp, kappa, tau + h, &mut k4);
            for i in 0..order {
                b[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
            }
        }
    }
    b
}

/// `(0, 1, A_2, ..., A_order)` of the class-`S` function generated by `d`.
///
/// `step` is the RK4 step in `tau = e^{-t}`; the result is the step `step/2`
/// solution, accepted only if it agrees with the step `step` solution to
/// [`CERTIFY_TOL`].
pub fn loewner_coefficients(d: &Driving, order: usize, step: f64) -> Result<TruncatedSeries> {
    d.validate()?;
    if order == 0 || order > MAX_ORDER {
        return Err(Error::Config(format!("Loewner order must be in 1..={MAX_ORDER}, got {order}")));
    }
    if !(step > 0.0 && step <= 1e-2) {
        return Err(Error::Config(format!("step {step} must be in (0, 1e-2]")));
    }
    let coarse = integrate(d, order, step);
    let fine = integrate(d, order, step / 2.0);
    let diff = coarse.iter().zip(&fine).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    if !(diff < CERTIFY_TOL) {
        return Err(Error::NotCertified { diff, limit: CERTIFY_TOL });
    }
    let mut coeffs = Vec::with_capacity(order + 1);
    coeffs.push(Complex64::new(0.0, 0.0));
    coeffs.extend(fine);
    // |A_n| <= n (de Branges), so the (n + 1) envelope with C = 1 is a proof.
    TruncatedSeries::new(coeffs, GrowthClass::Polynomial { degree: 1.0 }, 1.0)
}

/// Step that certifies order `order` comfortably.
pub fn default_step(order: usize) -> f64 {
    (0.06 / (order * order) as f64).min(1e-2)
}

/// Starts from [`default_step`] and halves the step until the step-halving
/// check passes, giving up below `1e-6`.
pub fn certified_coefficients(d: &Driving, order: usize) -> Result<TruncatedSeries> {
    let mut step = default_step(order);
    loop {
        match loewner_coefficients(d, order, step) {
            Err(Error::NotCertified { .. }) if step / 2.0 >= 1e-6 => step /= 2.0,
            other => return other,
        }
    }
}

/// Necessary-condition screen for univalence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnivalenceReport {
    pub normalized: bool,
    /// The sampled image of `|z| = r` is a simple closed polygon, with
    /// non-adjacent edges separated by more than the margin.
    pub simple_curve: bool,
    pub min_separation: f64,
    pub margin: f64,
    /// Winding numbers of the image curve around images of interior points.
    pub windings: Vec<i64>,
    pub pass: bool,
}

fn cross(a: Complex64, b: Complex64) -> f64 {
    a.re * b.im - a.im * b.re
}

fn point_segment(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = (((p - a) * ab.conj()).re / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

fn segment_distance(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> f64 {
    let d1 = cross(b - a, c - a);
    let d2 = cross(b - a, d - a);
    let d3 = cross(d - c, a - c);
    let d4 = cross(d - c, b - c);
    if d1 * d2 < 0.0 && d3 * d4 < 0.0 {
        return 0.0;
    }
    point_segment(a, c, d)
        .min(point_segment(b, c, d))
        .min(point_segment(c, a, b))
        .min(point_segment(d, a, b))
}

fn winding(curve: &[Complex64], p: Complex64) -> i64 {
    let n = curve.len();
    let total: f64 = (0..n).map(|j| ((curve[(j + 1) % n] - p) / (curve[j] - p)).arg()).sum();
    (total / (2.0 * PI)).round() as i64
}

/// Checks `H(0) = 0`, `H'(0) = 1`, that `H(|z| = r)` is a simple curve and
/// that it winds once around the images of a grid of interior points.
pub fn univalence_sanity(big_h: &TruncatedSeries, r: f64, m: usize) -> Result<UnivalenceReport> {
    if !(r > 0.0 && r <= 0.95) {
        return Err(Error::Radius(r));
    }
    let normalized = big_h.coeff(0).norm() <= 1e-12 && (big_h.coeff(1) - 1.0).norm() <= 1e-9;
    let m = m.max(samples_for_order(big_h.order(), 8));
    let samples = sample_circle(big_h, r, m)?;
    let w = samples.values();
    let scale = w.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let margin = 2.0 * samples.err_bound() + 1e-12 * scale.max(1.0);
    let mut min_separation = f64::INFINITY;
    for i in 0..m {
        let (a, b) = (w[i], w[(i + 1) % m]);
        for j in i + 2..m {
            if i == 0 && j == m - 1 {
                continue; // adjacent through the wrap-around
            }
            let dist = segment_distance(a, b, w[j], w[(j + 1) % m]);
            min_separation = min_separation.min(dist);
        }
    }
    let simple_curve = min_separation > margin;
    let mut windings = vec![winding(w, big_h.coeff(0))];
    for rho in [0.2, 0.4, 0.6, 0.8] {
        for k in 0..16 {
            let z = Complex64::from_polar(rho * r, 2.0 * PI * k as f64 / 16.0);
            windings.push(winding(w, big_h.eval(z)));
        }
    }
    let pass = normalized && simple_curve && windings.iter().all(|&k| k == 1);
    Ok(UnivalenceReport { normalized, simple_curve, min_separation, margin, windings, pass })
}

/// Parameters of the `|a_5|` search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub m_segments: usize,
    pub budget: usize,
    pub seed: u64,
    /// Order of the returned `H`; `h` reaches `2 order - 1`.
    pub order: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self { m_segments: 3, budget: 2000, seed: 0, order: MAX_ORDER }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub driving: Driving,
    pub big_h: TruncatedSeries,
    pub h: TruncatedSeries,
    pub h1: TruncatedSeries,
    pub a5: Complex64,
    pub evaluations: usize,
    /// Best `|a_5|` after each evaluation.
    pub best_history: Vec<f64>,
    pub success: bool,
}

/// The odd function `h = sqrt(H(z^2))`, `h_1 = h / z` and `a_5` for a driving.
pub fn odd_function(d: &Driving, order: usize) -> Result<(TruncatedSeries, TruncatedSeries, TruncatedSeries)> {
    let big_h = certified_coefficients(d, order)?;
    let h = odd_sqrt_transform(&big_h, 2 * order - 1)?;
    let h1 = divide_by_z(&h)?;
    Ok((big_h, h, h1))
}

fn a5_of(d: &Driving) -> Result<Complex64> {
    let big_h = loewner_coefficients(d, 3, 1e-2)?;
    Ok(odd_sqrt_transform(&big_h, 5)?.coeff(5))
}

/// Search coordinates: `m` segment angles then `m` log-durations; the tail
/// angle is pinned to 0 since `|a_5|` is rotation invariant.
fn decode(x: &[f64], m: usize) -> Driving {
    let mut durations: Vec<f64> = x[m..].iter().map(|v| v.clamp(-12.0, 6.0).exp()).collect();
    let total: f64 = durations.iter().sum();
    if total > MAX_HORIZON {
        durations.iter_mut().for_each(|d| *d *= MAX_HORIZON / total);
    }
    let mut breakpoints = vec![0.0];
    for d in durations {
        let last = *breakpoints.last().unwrap();
        breakpoints.push((last + d).min(MAX_HORIZON));
    }
    Driving { breakpoints, angles: x[..m].to_vec(), tail_angle: 0.0 }
}

struct Tracker {
    m: usize,
    best_x: Vec<f64>,
    best_f: f64,
    history: Vec<f64>,
}

impl Tracker {
    fn eval(&mut self, x: &[f64]) -> f64 {
        let value = a5_of(&decode(x, self.m)).map(|a| a.norm()).unwrap_or(f64::NEG_INFINITY);
        if value > self.best_f {
            self.best_x = x.to_vec();
            self.best_f = value;
        }
        self.history.push(self.best_f);
        value
    }
}

/// Compass search with random restarts around the incumbent, starting from
/// constant driving (the Koebe case, `|a_5| = 1`).
pub fn fekete_szego_search(config: &SearchConfig) -> Result<SearchResult> {
    let m = config.m_segments;
    if m < 1 {
        return Err(Error::Config("need at least one segment".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut tracker = Tracker { m, best_x: Vec::new(), best_f: f64::NEG_INFINITY, history: Vec::new() };
    // constant driving, split into short segments so that angle moves matter
    let mut start: Vec<f64> = (0..2 * m).map(|i| if i < m { 0.0 } else { -2.0 }).collect();
    'restarts: while tracker.history.len() < config.budget {
        let mut x = start;
        let mut fx = tracker.eval(&x);
        let mut delta = 0.5;
        while delta > 1e-4 {
            let mut improved = false;
            for i in 0..x.len() {
                for sign in [1.0, -1.0] {
                    if tracker.history.len() >= config.budget {
                        break 'restarts;
                    }
                    let mut y = x.clone();
                    y[i] += sign * delta;
                    let fy = tracker.eval(&y);
                    if fy > fx {
                        x = y;
                        fx = fy;
                        improved = true;
                        break;
                    }
                }
            }
            if !improved {
                delta *= 0.5;
            }
        }
        start = tracker.best_x.iter().map(|v| v + rng.gen_range(-1.0..1.0)).collect();
    }
    let driving = decode(&tracker.best_x, m);
    let evaluations = tracker.history.len();
    let history = tracker.history;
    let (big_h, h, h1) = odd_function(&driving, config.order)?;
    let a5 = h.coeff(5);
    Ok(SearchResult {
        success: a5.norm() > A5_THRESHOLD,
        driving,
        big_h,
        h,
        h1,
        a5,
        evaluations,
        best_history: history,
    })
}

/// `h_1(z) = sqrt(H(z^2)) / z` through order `order`, with coefficients read
/// off a discrete Fourier transform of the closed-form values on an inner
/// circle.
///
/// This reaches orders the coefficient ODE cannot. The tail constant is
/// measured on the last quarter of coefficients and is not certified.
pub fn odd_factor_series(d: &Driving, order: usize) -> Result<TruncatedSeries> {
    d.validate()?;
    // rho^{-order} = e^{10} bounds the rounding amplification, and
    // rho^m = e^{-80} the aliasing
    let rho = 1.0 - 10.0 / order.max(64) as f64;
    let m = (8 * (order + 1)).next_power_of_two();
    let mut buf: Vec<Complex64> = (0..m)
        .map(|j| {
            let z = Complex64::from_polar(rho, 2.0 * PI * j as f64 / m as f64);
            (d.log_ratio(z * z) * 0.5).exp()
        })
        .collect();
    FftPlanner::<f64>::new().plan_fft_forward(m).process(&mut buf);
    let mut scale = 1.0 / m as f64;
    let coeffs = (0..=order)
        .map(|n| {
            let c = if n % 2 == 0 { buf[n] * scale } else { Complex64::new(0.0, 0.0) };
            scale /= rho;
            c
        })
        .collect();
    Ok(TruncatedSeries::fitted(coeffs, GrowthClass::Bounded)?.with_measured_tail(0.25))
}

/// Driving found by `fekete_szego_search` with the default configuration,
/// shipped so that downstream runs need not repeat the search.
pub fn known_good_driving() -> Driving {
    serde_json::from_str(include_str!("../data/known_good_driving.json")).expect("bundled driving parses")
}
