//! Truncated Taylor series on the unit disc and their coefficient algebra.
//!
//! A [`TruncatedSeries`] stores `a_0..a_N` together with a growth envelope
//! `|a_n| <= C * (n + 1)^d * rho^n`. The envelope is what lets evaluation at a
//! radius `r` report a tail bound `C * sum_{n > N} (n + 1)^d (rho r)^n` for the
//! coefficients that were never stored.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack allowed when checking stored coefficients against the envelope.
const ENVELOPE_SLACK: f64 = 1e-12;

/// Default truncation order.
pub const DEFAULT_ORDER: usize = 256;

/// Coefficient growth class used for tail bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthClass {
    /// Every coefficient past the stored ones is zero.
    Finite,
    /// `|a_n| <= C`.
    Bounded,
    /// `|a_n| <= C (n + 1)^degree`.
    Polynomial { degree: f64 },
    /// `|a_n| <= C ratio^n`.
    Geometric { ratio: f64 },
    /// `|a_n| <= C (n + 1)^degree ratio^n`; closes the class under products.
    Mixed { degree: f64, ratio: f64 },
}

impl GrowthClass {
    fn from_params(degree: f64, ratio: f64) -> Self {
        match (degree == 0.0, ratio == 1.0) {
            (true, true) => GrowthClass::Bounded,
            (false, true) => GrowthClass::Polynomial { degree },
            (true, false) => GrowthClass::Geometric { ratio },
            (false, false) => GrowthClass::Mixed { degree, ratio },
        }
    }

    /// `(degree, ratio)` of the envelope. `Finite` behaves as bounded on the
    /// stored range.
    pub fn params(self) -> (f64, f64) {
        match self {
            GrowthClass::Finite | GrowthClass::Bounded => (0.0, 1.0),
            GrowthClass::Polynomial { degree } => (degree, 1.0),
            GrowthClass::Geometric { ratio } => (0.0, ratio),
            GrowthClass::Mixed { degree, ratio } => (degree, ratio),
        }
    }

    /// Envelope value `(n + 1)^d rho^n` without the constant.
    pub fn envelope(self, n: usize) -> f64 {
        let (d, rho) = self.params();
        let log = d * ((n + 1) as f64).ln() + if n == 0 { 0.0 } else { n as f64 * rho.ln() };
        log.exp()
    }

    /// Class of the coefficient-wise product of two envelopes.
    pub fn product(self, other: GrowthClass) -> GrowthClass {
        let (d1, r1) = self.params();
        let (d2, r2) = other.params();
        GrowthClass::from_params(d1 + d2, r1 * r2)
    }

    /// Class of the `k`-th coefficient-wise power.
    pub fn power(self, k: usize) -> GrowthClass {
        if self == GrowthClass::Finite {
            return GrowthClass::Finite;
        }
        let (d, rho) = self.params();
        GrowthClass::from_params(d * k as f64, rho.powi(k as i32))
    }

    /// `sum_{n > order} envelope(n) r^n`, infinite when the series diverges.
    pub fn tail_sum(self, order: usize, r: f64) -> f64 {
        if self == GrowthClass::Finite {
            return 0.0;
        }
        let (d, rho) = self.params();
        let q = rho * r;
        if q <= 0.0 {
            return 0.0;
        }
        if q >= 1.0 {
            return f64::INFINITY;
        }
        let first = order + 1;
        if d == 0.0 {
            return (first as f64 * q.ln()).exp() / (1.0 - q);
        }
        let log_term = |n: usize| d * ((n + 1) as f64).ln() + n as f64 * q.ln();
        let mut sum = 0.0;
        let mut n = first;
        loop {
            let term = log_term(n).exp();
            sum += term;
            // Term ratios decrease in n, so once below one the rest is
            // dominated by a geometric series.
            let ratio = ((n + 2) as f64 / (n + 1) as f64).powf(d) * q;
            if ratio < 1.0 {
                let rest = term * ratio / (1.0 - ratio);
                if rest <= 1e-16 * sum || rest < 1e-300 || n - first > 10_000_000 {
                    return sum + rest;
                }
            }
            n += 1;
        }
    }
}

/// First `N + 1` Taylor coefficients of an analytic function on the disc.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SeriesJson", into = "SeriesJson")]
pub struct TruncatedSeries {
    coeffs: Vec<Complex64>,
    growth: GrowthClass,
    constant: f64,
    tail_constant: f64,
    tail_certified: bool,
}

impl TruncatedSeries {
    /// Builds a series, checking `|a_n| <= constant * envelope(n)` for every
    /// stored coefficient.
    pub fn new(coeffs: Vec<Complex64>, growth: GrowthClass, constant: f64) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::EmptySeries);
        }
        if !(constant >= 0.0 && constant.is_finite()) {
            return Err(Error::Normalization(format!("growth constant {constant} is not a finite nonnegative number")));
        }
        for (n, a) in coeffs.iter().enumerate() {
            let modulus = a.norm();
            let envelope = constant * growth.envelope(n);
            if !modulus.is_finite() || modulus > envelope * (1.0 + ENVELOPE_SLACK) + f64::MIN_POSITIVE {
                return Err(Error::GrowthViolation { index: n, modulus, envelope });
            }
        }
        Ok(Self {
            coeffs,
            growth,
            constant,
            tail_constant: constant,
            tail_certified: true,
        })
    }

    /// Builds a series with the smallest constant that makes the envelope hold.
    pub fn fitted(coeffs: Vec<Complex64>, growth: GrowthClass) -> Result<Self> {
        let constant = coeffs
            .iter()
            .enumerate()
            .map(|(n, a)| a.norm() / growth.envelope(n))
            .fold(0.0, f64::max);
        Self::new(coeffs, growth, constant)
    }

    /// Real coefficients, fitted envelope.
    pub fn from_real(coeffs: &[f64], growth: GrowthClass) -> Result<Self> {
        Self::fitted(coeffs.iter().map(|&a| Complex64::new(a, 0.0)).collect(), growth)
    }

    /// The zero series of order `order`.
    pub fn zero(order: usize) -> Self {
        Self {
            coeffs: vec![Complex64::new(0.0, 0.0); order + 1],
            growth: GrowthClass::Finite,
            constant: 0.0,
            tail_constant: 0.0,
            tail_certified: true,
        }
    }

    /// Replaces the constant used for unseen coefficients with the largest
    /// envelope ratio observed over the trailing `fraction` of the stored
    /// coefficients. The resulting tail bound is an estimate, not a certificate.
    pub fn with_measured_tail(mut self, fraction: f64) -> Self {
        let len = self.coeffs.len();
        let count = ((len as f64 * fraction).ceil() as usize).clamp(1, len);
        self.tail_constant = self.coeffs[len - count..]
            .iter()
            .enumerate()
            .map(|(i, a)| a.norm() / self.growth.envelope(len - count + i))
            .fold(0.0, f64::max);
        self.tail_certified = false;
        self
    }

    /// Overrides the tail constant.
    pub fn with_tail_constant(mut self, tail_constant: f64, certified: bool) -> Self {
        self.tail_constant = tail_constant;
        self.tail_certified = certified;
        self
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff(&self, n: usize) -> Complex64 {
        self.coeffs.get(n).copied().unwrap_or_default()
    }

    /// Truncation order `N` (the series holds `N + 1` coefficients).
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn growth(&self) -> GrowthClass {
        self.growth
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn tail_constant(&self) -> f64 {
        self.tail_constant
    }

    /// Whether the tail bound is backed by a proven envelope.
    pub fn tail_certified(&self) -> bool {
        self.tail_certified
    }

    /// Bound on `|f(z) - sum_{n <= N} a_n z^n|` for `|z| <= r`.
    pub fn tail_bound(&self, r: f64) -> f64 {
        if self.tail_constant == 0.0 {
            return 0.0;
        }
        self.tail_constant * self.growth.tail_sum(self.order(), r)
    }

    /// Horner evaluation of the stored polynomial.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &a| acc * z + a)
    }

    /// `e^{-i beta} f(e^{i beta} z)`: the image rotated back so that
    /// normalization `f'(0) = 1` is kept.
    pub fn rotated(&self, beta: f64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(n, &a)| a * Complex64::from_polar(1.0, (n as f64 - 1.0) * beta))
            .collect();
        Self { coeffs, ..self.clone() }
    }

    /// Keeps the first `order + 1` coefficients. The growth class only stays
    /// `Finite` when nothing nonzero is dropped.
    pub fn truncate(&self, order: usize) -> Self {
        if order >= self.order() {
            return self.clone();
        }
        let dropped_nonzero = self.coeffs[order + 1..].iter().any(|a| a.norm() != 0.0);
        let mut out = Self {
            coeffs: self.coeffs[..=order].to_vec(),
            ..self.clone()
        };
        if self.growth == GrowthClass::Finite && dropped_nonzero {
            out.growth = GrowthClass::Bounded;
        }
        out
    }

    /// Maximum `|a_n|` over the stored coefficients.
    pub fn max_modulus(&self) -> f64 {
        self.coeffs.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }
}

#[derive(Serialize, Deserialize)]
struct SeriesJson {
    coeffs: Vec<[f64; 2]>,
    growth: GrowthClass,
    constant: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tail_constant: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tail_certified: Option<bool>,
}

impl TryFrom<SeriesJson> for TruncatedSeries {
    type Error = Error;

    fn try_from(j: SeriesJson) -> Result<Self> {
        let coeffs = j.coeffs.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
        let mut s = TruncatedSeries::new(coeffs, j.growth, j.constant)?;
        if let Some(t) = j.tail_constant {
            s = s.with_tail_constant(t, j.tail_certified.unwrap_or(true));
        }
        Ok(s)
    }
}

impl From<TruncatedSeries> for SeriesJson {
    fn from(s: TruncatedSeries) -> Self {
        let tail_differs = s.tail_constant != s.constant || !s.tail_certified;
        SeriesJson {
            coeffs: s.coeffs.iter().map(|a| [a.re, a.im]).collect(),
            growth: s.growth,
            constant: s.constant,
            tail_constant: tail_differs.then_some(s.tail_constant),
            tail_certified: tail_differs.then_some(s.tail_certified),
        }
    }
}

/// Hadamard product `sum a_n b_n z^n`, truncated to the shorter operand.
pub fn hadamard(f: &TruncatedSeries, g: &TruncatedSeries) -> TruncatedSeries {
    let len = f.coeffs.len().min(g.coeffs.len());
    let coeffs: Vec<Complex64> = f.coeffs[..len].iter().zip(&g.coeffs[..len]).map(|(a, b)| a * b).collect();
    let covers = |s: &TruncatedSeries| s.growth == GrowthClass::Finite && s.coeffs.len() <= len;
    if covers(f) || covers(g) {
        return TruncatedSeries {
            coeffs,
            growth: GrowthClass::Finite,
            constant: f.constant * g.constant,
            tail_constant: 0.0,
            tail_certified: true,
        };
    }
    TruncatedSeries {
        coeffs,
        growth: f.growth.product(g.growth),
        constant: f.constant * g.constant,
        tail_constant: f.tail_constant * g.tail_constant,
        tail_certified: f.tail_certified && g.tail_certified,
    }
}

/// `h_1 * ... * h_1` (`n` factors), i.e. the coefficient-wise `n`-th power.
///
/// # Panics
/// If `n == 0`.
pub fn iterate_convolution(h1: &TruncatedSeries, n: usize) -> TruncatedSeries {
    assert!(n >= 1, "iterate_convolution needs n >= 1");
    let mut out = h1.clone();
    for _ in 1..n {
        out = hadamard(&out, h1);
    }
    out
}

/// `h(z) / z` for a series with `h(0) = 0`.
pub fn divide_by_z(h: &TruncatedSeries) -> Result<TruncatedSeries> {
    let scale = h.max_modulus().max(1.0);
    if h.coeffs[0].norm() > 64.0 * f64::EPSILON * scale {
        return Err(Error::Normalization(format!("h(0) = {} is not zero", h.coeffs[0])));
    }
    if h.coeffs.len() < 2 {
        return Err(Error::EmptySeries);
    }
    let coeffs: Vec<Complex64> = h.coeffs[1..].to_vec();
    let growth = h.growth;
    let constant = coeffs
        .iter()
        .enumerate()
        .map(|(n, a)| a.norm() / growth.envelope(n))
        .fold(0.0, f64::max);
    // Unseen coefficient n of h/z is coefficient n + 1 of h.
    let new_order = coeffs.len() - 1;
    let shift = match growth {
        GrowthClass::Finite => 0.0,
        _ => {
            let (d, rho) = growth.params();
            ((new_order + 3) as f64 / (new_order + 2) as f64).powf(d) * rho
        }
    };
    Ok(TruncatedSeries {
        coeffs,
        growth,
        constant,
        tail_constant: h.tail_constant * shift,
        tail_certified: h.tail_certified,
    })
}

/// The odd function `h` with `h(z)^2 = H(z^2)` and `h'(0) = 1`, up to `z^order`.
///
/// Writes `H(w) = w (1 + u(w))` and takes the formal square root of `1 + u`
/// by the usual coefficient recursion `2 s_k = u_k - sum_{j=1}^{k-1} s_j s_{k-j}`.
pub fn odd_sqrt_transform(big_h: &TruncatedSeries, order: usize) -> Result<TruncatedSeries> {
    let a0 = big_h.coeff(0);
    let a1 = big_h.coeff(1);
    if a1.norm() < 1e-12 {
        return Err(Error::Normalization("H'(0) = 0, square root branch undefined".into()));
    }
    if a0.norm() > 1e-12 || (a1 - 1.0).norm() > 1e-12 {
        return Err(Error::Normalization(format!("need H(0) = 0 and H'(0) = 1, got {a0} and {a1}")));
    }
    if order == 0 {
        return Err(Error::Normalization("order must be at least 1".into()));
    }
    let terms = (order - 1) / 2 + 1;
    if big_h.order() < terms {
        return Err(Error::Normalization(format!(
            "order {order} needs H through z^{terms}, but H stops at z^{}",
            big_h.order()
        )));
    }
    let u: Vec<Complex64> = (0..terms).map(|k| if k == 0 { Complex64::new(0.0, 0.0) } else { big_h.coeff(k + 1) }).collect();
    let mut s = vec![Complex64::new(0.0, 0.0); terms];
    s[0] = Complex64::new(1.0, 0.0);
    for k in 1..terms {
        let conv: Complex64 = (1..k).map(|j| s[j] * s[k - j]).sum();
        s[k] = (u[k] - conv) * 0.5;
    }
    let mut coeffs = vec![Complex64::new(0.0, 0.0); order + 1];
    for (k, sk) in s.into_iter().enumerate() {
        coeffs[2 * k + 1] = sk;
    }
    Ok(TruncatedSeries::fitted(coeffs, GrowthClass::Bounded)?.with_measured_tail(0.25))
}

/// Named functions with closed-form Taylor coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Catalog {
    /// `1 / (1 - z)`, the identity for the Hadamard product.
    #[serde(rename = "I")]
    Identity,
    /// `z / (1 - z)^2`.
    #[serde(rename = "koebe")]
    Koebe,
    /// `z / (1 - z^2)`.
    #[serde(rename = "k2")]
    K2,
    /// `1 / (1 - z^2)`.
    #[serde(rename = "J")]
    J,
    /// `1 / (1 - z)^2`.
    #[serde(rename = "inv_sq")]
    InvSq,
    #[serde(rename = "one_minus_half_z")]
    OneMinusHalfZ,
    #[serde(rename = "one_minus_z")]
    OneMinusZ,
    /// `log((1 + z) / (1 - z))`.
    #[serde(rename = "strip")]
    Strip,
    /// `z / (1 - z)`.
    #[serde(rename = "cayley")]
    Cayley,
    /// `z - z^2 / 2`.
    #[serde(rename = "halfplane_conv")]
    HalfplaneConv,
    /// `z`.
    #[serde(rename = "z")]
    Z,
}

impl Catalog {
    pub const ALL: [Catalog; 11] = [
        Catalog::Identity,
        Catalog::Koebe,
        Catalog::K2,
        Catalog::J,
        Catalog::InvSq,
        Catalog::OneMinusHalfZ,
        Catalog::OneMinusZ,
        Catalog::Strip,
        Catalog::Cayley,
        Catalog::HalfplaneConv,
        Catalog::Z,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Catalog::Identity => "I",
            Catalog::Koebe => "koebe",
            Catalog::K2 => "k2",
            Catalog::J => "J",
            Catalog::InvSq => "inv_sq",
            Catalog::OneMinusHalfZ => "one_minus_half_z",
            Catalog::OneMinusZ => "one_minus_z",
            Catalog::Strip => "strip",
            Catalog::Cayley => "cayley",
            Catalog::HalfplaneConv => "halfplane_conv",
            Catalog::Z => "z",
        }
    }

    fn coefficient(self, n: usize) -> f64 {
        let nf = n as f64;
        match self {
            Catalog::Identity => 1.0,
            Catalog::Koebe => nf,
            Catalog::K2 => (n % 2) as f64,
            Catalog::J => ((n + 1) % 2) as f64,
            Catalog::InvSq => nf + 1.0,
            Catalog::OneMinusHalfZ => [1.0, -0.5].get(n).copied().unwrap_or(0.0),
            Catalog::OneMinusZ => [1.0, -1.0].get(n).copied().unwrap_or(0.0),
            Catalog::Strip => {
                if n % 2 == 1 {
                    2.0 / nf
                } else {
                    0.0
                }
            }
            Catalog::Cayley => {
                if n == 0 {
                    0.0
                } else {
                    1.0
                }
            }
            Catalog::HalfplaneConv => [0.0, 1.0, -0.5].get(n).copied().unwrap_or(0.0),
            Catalog::Z => [0.0, 1.0].get(n).copied().unwrap_or(0.0),
        }
    }

    /// Degree of the polynomial for the finite members.
    fn polynomial_degree(self) -> Option<usize> {
        match self {
            Catalog::OneMinusHalfZ | Catalog::OneMinusZ | Catalog::Z => Some(1),
            Catalog::HalfplaneConv => Some(2),
            _ => None,
        }
    }

    fn growth(self) -> (GrowthClass, f64) {
        match self {
            Catalog::Koebe | Catalog::InvSq => (GrowthClass::Polynomial { degree: 1.0 }, 1.0),
            Catalog::Strip => (GrowthClass::Bounded, 2.0),
            _ => (GrowthClass::Bounded, 1.0),
        }
    }

    /// Coefficients `a_0..a_order`.
    pub fn series(self, order: usize) -> TruncatedSeries {
        let coeffs: Vec<Complex64> = (0..=order).map(|n| Complex64::new(self.coefficient(n), 0.0)).collect();
        let built = match self.polynomial_degree() {
            Some(deg) if deg <= order => TruncatedSeries::fitted(coeffs, GrowthClass::Finite),
            _ => {
                let (growth, constant) = self.growth();
                TruncatedSeries::new(coeffs, growth, constant)
            }
        };
        built.expect("catalog coefficients respect their envelopes")
    }
}

impl fmt::Display for Catalog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Catalog {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Catalog::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::UnknownFunction(s.to_string()))
    }
}

/// Looks up a catalog function by name and truncates it at `order`.
pub fn catalog(name: &str, order: usize) -> Result<TruncatedSeries> {
    Ok(name.parse::<Catalog>()?.series(order))
}
