//! Baernstein star-function of sampled real fields on a circle.
//!
//! On a circle the supremum of `int_E u` over sets of measure `2 theta` is
//! attained by the superlevel sets of `u`, so `u*(theta)` is the integral of
//! the decreasing rearrangement of `u` over `[0, 2 theta]`. With samples this
//! is a sort followed by a prefix sum.

use serde::{Deserialize, Serialize};

use crate::circle::RingSamples;
use crate::error::{Error, Result};
use std::f64::consts::{PI, TAU};

/// Number of angles in `[0, pi]` used by default.
pub const DEFAULT_THETA_POINTS: usize = 512;

/// `theta -> u*(r e^{i theta})` on a grid of `[0, pi]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StarProfile {
    pub r: f64,
    pub thetas: Vec<f64>,
    pub values: Vec<f64>,
    /// `int_{-pi}^{pi} u(r e^{it}) dt`.
    pub circle_integral: f64,
    pub err_bound: f64,
}

impl StarProfile {
    /// Linear interpolation of the profile at `theta` in `[0, pi]`.
    pub fn at(&self, theta: f64) -> f64 {
        interpolate(&self.thetas, &self.values, theta)
    }

    /// Largest violation of monotonicity and of concavity (slopes must not
    /// increase), both as nonnegative numbers.
    pub fn shape_defects(&self) -> (f64, f64) {
        let mut monotone: f64 = 0.0;
        let mut concave: f64 = 0.0;
        for w in self.values.windows(2) {
            monotone = monotone.max(w[0] - w[1]);
        }
        for k in 1..self.values.len().saturating_sub(1) {
            let left = (self.values[k] - self.values[k - 1]) / (self.thetas[k] - self.thetas[k - 1]);
            let right = (self.values[k + 1] - self.values[k]) / (self.thetas[k + 1] - self.thetas[k]);
            concave = concave.max((right - left) * (self.thetas[k + 1] - self.thetas[k]));
        }
        (monotone, concave)
    }
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let k = xs.partition_point(|&t| t <= x);
    if k == 0 {
        return ys[0];
    }
    if k >= xs.len() {
        return ys[ys.len() - 1];
    }
    let (x0, x1) = (xs[k - 1], xs[k]);
    let w = (x - x0) / (x1 - x0);
    ys[k - 1] + w * (ys[k] - ys[k - 1])
}

/// Equispaced grid `theta_k = k pi / points`, `k = 0..=points`.
pub fn theta_grid(points: usize) -> Vec<f64> {
    (0..=points).map(|k| if k == points { PI } else { PI * k as f64 / points as f64 }).collect()
}

/// Cumulative integral of the decreasing rearrangement, with cell width `h`.
struct Rearrangement {
    prefix: Vec<f64>,
    h: f64,
}

impl Rearrangement {
    fn new(samples: impl Iterator<Item = f64>, h: f64) -> Self {
        let mut sorted: Vec<f64> = samples.collect();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let mut prefix = Vec::with_capacity(sorted.len() + 1);
        let mut acc = 0.0;
        prefix.push(0.0);
        for v in sorted {
            acc += v * h;
            prefix.push(acc);
        }
        Self { prefix, h }
    }

    /// Integral over the top cells of total measure `measure`, the last cell
    /// taken fractionally.
    fn at(&self, measure: f64) -> f64 {
        let cells = self.prefix.len() - 1;
        let x = (measure / self.h).clamp(0.0, cells as f64);
        let i = (x.floor() as usize).min(cells - 1);
        let frac = x - i as f64;
        self.prefix[i] + frac * (self.prefix[i + 1] - self.prefix[i])
    }

    fn total(&self) -> f64 {
        self.prefix[self.prefix.len() - 1]
    }
}

/// Star profile of `u` on `points + 1` equispaced angles.
///
/// The error bound is `2 pi` times the sample error plus the largest change
/// of the profile when only every other sample is used.
pub fn star_profile(u: &RingSamples<f64>, points: usize) -> Result<StarProfile> {
    if points < 2 {
        return Err(Error::GridSize(points));
    }
    if let Some(j) = u.values().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(j));
    }
    let m = u.len();
    let h = TAU / m as f64;
    let full = Rearrangement::new(u.values().iter().copied(), h);
    let half = Rearrangement::new(u.values().iter().step_by(2).copied(), 2.0 * h);
    let thetas = theta_grid(points);
    let mut values = Vec::with_capacity(thetas.len());
    let mut discretization: f64 = 0.0;
    for (k, &theta) in thetas.iter().enumerate() {
        let v = if k == 0 {
            0.0
        } else if k == points {
            full.total()
        } else {
            full.at(2.0 * theta)
        };
        let coarse = if k == 0 { 0.0 } else { half.at(2.0 * theta) };
        discretization = discretization.max((v - coarse).abs());
        values.push(v);
    }
    Ok(StarProfile {
        r: u.r(),
        thetas,
        values,
        circle_integral: full.total(),
        err_bound: TAU * u.err_bound() + discretization,
    })
}

/// `(-u)*` from `u*`: `-int u + u*(pi - theta)`.
pub fn reflect_negate(p: &StarProfile) -> StarProfile {
    let values = p
        .thetas
        .iter()
        .enumerate()
        .map(|(k, &theta)| if k == 0 { 0.0 } else { -p.circle_integral + p.at(PI - theta) })
        .collect();
    StarProfile {
        r: p.r,
        thetas: p.thetas.clone(),
        values,
        circle_integral: -p.circle_integral,
        err_bound: p.err_bound,
    }
}

/// Outcome of comparing two star profiles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StarVerdict {
    /// Largest gap is at most the margin. `tight` marks gaps within the
    /// margin of zero somewhere off `theta = 0`, i.e. equality up to tolerance.
    Holds { tight: bool },
    /// Gap above the margin but inside margin plus error budget.
    Inconclusive,
    /// Gap beyond margin plus error budget.
    Fails,
}

/// A grid point and the gap `u* - v*` there.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapPoint {
    pub theta: f64,
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StarComparison {
    pub r: f64,
    pub verdict: StarVerdict,
    /// Point of maximal gap.
    pub witness: GapPoint,
    /// Grid neighbours of the witness (absent at the ends of the grid).
    pub neighbors: Vec<GapPoint>,
    pub margin: f64,
    /// Combined error bounds of both profiles, including a rounding floor.
    pub err_budget: f64,
}

impl StarComparison {
    pub fn fails(&self) -> bool {
        self.verdict == StarVerdict::Fails
    }

    pub fn holds(&self) -> bool {
        matches!(self.verdict, StarVerdict::Holds { .. })
    }
}

fn rounding_floor(u: &StarProfile, v: &StarProfile) -> f64 {
    let scale = u.values.iter().chain(&v.values).fold(1.0f64, |a, x| a.max(x.abs()));
    1e-12 * scale
}

/// Checks `u* <= v*` on a shared grid. Fails iff the largest gap exceeds
/// `margin` plus the combined error budget.
pub fn star_leq(u: &StarProfile, v: &StarProfile, margin: f64) -> Result<StarComparison> {
    if u.r != v.r || u.thetas != v.thetas {
        return Err(Error::GridMismatch);
    }
    let budget = u.err_bound + v.err_bound + rounding_floor(u, v);
    let gaps: Vec<f64> = u.values.iter().zip(&v.values).map(|(a, b)| a - b).collect();
    let (k, max_gap) = gaps
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (k, g)| if g > acc.1 { (k, g) } else { acc });
    let verdict = if max_gap > margin + budget {
        StarVerdict::Fails
    } else if max_gap > margin {
        StarVerdict::Inconclusive
    } else {
        let tight = gaps[1..].iter().any(|g| g.abs() <= margin.max(budget));
        StarVerdict::Holds { tight }
    };
    let point = |i: usize| GapPoint { theta: u.thetas[i], gap: gaps[i] };
    let neighbors = [k.checked_sub(1), Some(k + 1).filter(|&i| i < gaps.len())]
        .into_iter()
        .flatten()
        .map(point)
        .collect();
    Ok(StarComparison {
        r: u.r,
        verdict,
        witness: point(k),
        neighbors,
        margin,
        err_budget: budget,
    })
}

/// [`star_leq`] with the margin set to ten times the combined error budget,
/// so discretization alone can never produce a failure.
pub fn star_leq_with_policy(u: &StarProfile, v: &StarProfile) -> Result<StarComparison> {
    let budget = u.err_bound + v.err_bound + rounding_floor(u, v);
    star_leq(u, v, 10.0 * budget)
}

/// Even in `t` and nonincreasing on `[0, pi]`, both within `tol`.
pub fn symmetric_decreasing_check(u: &RingSamples<f64>, tol: f64) -> bool {
    let v = u.values();
    let m = v.len();
    let even = (1..m / 2).all(|j| (v[j] - v[m - j]).abs() <= tol);
    let decreasing = (0..m / 2).all(|j| v[j + 1] <= v[j] + tol);
    even && decreasing
}

/// Convex nondecreasing test functions for Phi-means.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phi {
    /// `x -> e^{p x}`.
    Exp { p: f64 },
    /// `x -> max(x - c, 0)`.
    Hinge { c: f64 },
}

impl Phi {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            Phi::Exp { p } => (p * x).exp(),
            Phi::Hinge { c } => (x - c).max(0.0),
        }
    }

    /// Lipschitz constant on `(-inf, x_max]`.
    fn lipschitz(self, x_max: f64) -> f64 {
        match self {
            Phi::Exp { p } => p.abs() * (p * x_max).exp(),
            Phi::Hinge { .. } => 1.0,
        }
    }
}

/// `e^{px}` for `p` in `{0.25, 0.5, 1, 2, 4}` and nine hinges spread over
/// the joint sample range.
pub fn default_phi_family(u: &RingSamples<f64>, v: &RingSamples<f64>) -> Vec<Phi> {
    let lo = u.values().iter().chain(v.values()).copied().fold(f64::INFINITY, f64::min);
    let hi = u.values().iter().chain(v.values()).copied().fold(f64::NEG_INFINITY, f64::max);
    let mut family: Vec<Phi> = [0.25, 0.5, 1.0, 2.0, 4.0].into_iter().map(|p| Phi::Exp { p }).collect();
    family.extend((1..=9).map(|i| Phi::Hinge { c: lo + (hi - lo) * i as f64 / 10.0 }));
    family
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhiVerdict {
    pub phi: Phi,
    /// `int Phi(u) dt / 2 pi`.
    pub lhs: f64,
    pub rhs: f64,
    pub err_budget: f64,
    pub holds: bool,
}

fn phi_mean(u: &RingSamples<f64>, phi: Phi) -> (f64, f64) {
    let v = u.values();
    let m = v.len();
    let full = v.iter().map(|&x| phi.eval(x)).sum::<f64>() / m as f64;
    let half = v.iter().step_by(2).map(|&x| phi.eval(x)).sum::<f64>() / (m / 2) as f64;
    let x_max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max) + u.err_bound();
    let err = phi.lipschitz(x_max) * u.err_bound() + (full - half).abs();
    (full, err)
}

/// `int Phi(u) <= int Phi(v)` for each `Phi` in the family.
pub fn phi_means_compare(u: &RingSamples<f64>, v: &RingSamples<f64>, family: &[Phi]) -> Vec<PhiVerdict> {
    family
        .iter()
        .map(|&phi| {
            let (lhs, el) = phi_mean(u, phi);
            let (rhs, er) = phi_mean(v, phi);
            let err_budget = el + er + 1e-12 * (1.0 + lhs.abs().max(rhs.abs()));
            PhiVerdict {
                phi,
                lhs,
                rhs,
                err_budget,
                holds: lhs <= rhs + err_budget,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle::{sample_circle, DEFAULT_SAMPLES};
    use crate::series::Catalog;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn field(m: usize, f: impl Fn(f64) -> f64) -> RingSamples<f64> {
        RingSamples::from_fn(0.5, m, f).unwrap()
    }

    fn log_abs(name: Catalog, r: f64) -> RingSamples<f64> {
        let s = sample_circle(&name.series(4095), r, 8192).unwrap();
        s.log_modulus().unwrap()
    }

    #[test]
    fn constant_field() {
        let p = star_profile(&field(DEFAULT_SAMPLES, |_| 1.7), 512).unwrap();
        for (t, v) in p.thetas.iter().zip(&p.values) {
            assert!((v - 2.0 * t * 1.7).abs() < 1e-12);
        }
        assert!((p.circle_integral - TAU * 1.7).abs() < 1e-12);
    }

    #[test]
    fn cosine_field() {
        let p = star_profile(&field(DEFAULT_SAMPLES, f64::cos), 512).unwrap();
        for (t, v) in p.thetas.iter().zip(&p.values) {
            assert!((v - 2.0 * t.sin()).abs() < 1e-6);
        }
        assert!(p.err_bound < 1e-5);
        assert_eq!(p.values[0], 0.0);
        assert_eq!(*p.values.last().unwrap(), p.circle_integral);
    }

    #[test]
    fn rejects_non_finite() {
        let mut u = field(16, f64::cos);
        u = u.map(|&v| if v > 0.99 { f64::NAN } else { v }, 0.0);
        assert!(matches!(star_profile(&u, 8), Err(Error::NonFinite(0))));
        assert!(matches!(star_profile(&field(16, f64::cos), 1), Err(Error::GridSize(1))));
    }

    #[test]
    fn shape_of_profiles() {
        for f in [Catalog::InvSq, Catalog::Koebe, Catalog::Strip] {
            let p = star_profile(&log_abs(f, 0.9), 512).unwrap();
            let (_, conc) = p.shape_defects();
            assert!(conc <= p.err_bound, "{f}: {conc}");
            assert!((p.values[512] - p.circle_integral).abs() <= p.err_bound);
        }
        // Monotone only when the field is nonnegative; 2 sin(theta) for cos t is not.
        let shifted = log_abs(Catalog::InvSq, 0.9).map(|v| v + 2.0, 0.0);
        let p = star_profile(&shifted, 512).unwrap();
        assert_eq!(p.shape_defects().0, 0.0);
        let cos = star_profile(&field(1024, f64::cos), 64).unwrap();
        assert!(cos.shape_defects().0 > 0.0);
    }

    #[test]
    fn random_subsets_never_beat_the_profile() {
        let u = log_abs(Catalog::HalfplaneConv, 0.8);
        let p = star_profile(&u, 512).unwrap();
        let m = u.len();
        let h = TAU / m as f64;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut idx: Vec<usize> = (0..m).collect();
        for trial in 0..1000 {
            let k = 1 + trial % 511;
            let count = m * k / 512; // cells of total measure 2 theta_k
            idx.shuffle(&mut rng);
            let s: f64 = idx[..count].iter().map(|&j| u.values()[j]).sum::<f64>() * h;
            assert!(s <= p.values[k] + p.err_bound, "k={k}");
        }
    }

    #[test]
    fn reflection_examples() {
        let c = star_profile(&field(1024, |_| -0.4), 64).unwrap();
        let rc = reflect_negate(&c);
        for (t, v) in rc.thetas.iter().zip(&rc.values) {
            assert!((v - 2.0 * t * 0.4).abs() < 1e-12);
        }
        let p = star_profile(&field(DEFAULT_SAMPLES, f64::cos), 512).unwrap();
        let rp = reflect_negate(&p);
        for (t, v) in rp.thetas.iter().zip(&rp.values) {
            assert!((v - 2.0 * t.sin()).abs() < 1e-6);
        }
        let u = log_abs(Catalog::InvSq, 0.5);
        let direct = star_profile(&u.negated(), 512).unwrap();
        let reflected = reflect_negate(&star_profile(&u, 512).unwrap());
        for (a, b) in direct.values.iter().zip(&reflected.values) {
            assert!((a - b).abs() <= 2.0 * direct.err_bound.max(1e-13));
        }
        // involution
        let back = reflect_negate(&reflected);
        let orig = star_profile(&u, 512).unwrap();
        for (a, b) in back.values.iter().zip(&orig.values) {
            assert!((a - b).abs() <= 2.0 * orig.err_bound.max(1e-13));
        }
    }

    #[test]
    fn harmonic_mean_value() {
        // log|1 - z/2| is harmonic with value 0 at the origin.
        let f = crate::series::Catalog::OneMinusHalfZ.series(1);
        let u = sample_circle(&f, 0.9, 1024).unwrap().log_modulus().unwrap();
        let p = star_profile(&u, 64).unwrap();
        assert!(p.circle_integral.abs() <= p.err_bound + 1e-13);
    }

    #[test]
    fn equal_profiles_hold() {
        let p = star_profile(&log_abs(Catalog::Koebe, 0.7), 512).unwrap();
        let c = star_leq_with_policy(&p, &p).unwrap();
        assert_eq!(c.verdict, StarVerdict::Holds { tight: true });
        assert!(c.witness.gap <= 0.0);
    }

    #[test]
    fn j_is_dominated_by_identity() {
        for r in [0.3, 0.6, 0.9, 0.95] {
            let j = star_profile(&log_abs(Catalog::J, r), 512).unwrap();
            let i = star_profile(&log_abs(Catalog::Identity, r), 512).unwrap();
            assert!(star_leq_with_policy(&j, &i).unwrap().holds(), "r={r}");
        }
    }

    #[test]
    fn one_minus_z_is_not_dominated_by_inv_sq() {
        let u = star_profile(&log_abs(Catalog::OneMinusZ, 0.95), 512).unwrap();
        let v = star_profile(&log_abs(Catalog::InvSq, 0.95), 512).unwrap();
        let c = star_leq_with_policy(&u, &v).unwrap();
        assert!(c.fails());
        assert!(c.witness.theta > PI / 2.0);
        assert_eq!(c.neighbors.len(), 2);
    }

    #[test]
    fn mismatched_grids() {
        let a = star_profile(&field(64, f64::cos), 8).unwrap();
        let b = star_profile(&field(64, f64::cos), 16).unwrap();
        assert!(matches!(star_leq(&a, &b, 0.0), Err(Error::GridMismatch)));
    }

    #[test]
    fn symmetric_decreasing() {
        assert!(symmetric_decreasing_check(&field(256, f64::cos), 1e-12));
        assert!(!symmetric_decreasing_check(&field(256, f64::sin), 1e-12));
        let strip = sample_circle(&Catalog::Strip.series(1023), 0.8, 2048).unwrap();
        assert!(symmetric_decreasing_check(&strip.real_part(), 1e-9));
    }

    #[test]
    fn phi_means() {
        let u = log_abs(Catalog::J, 0.8);
        let v = log_abs(Catalog::Identity, 0.8);
        let same = phi_means_compare(&u, &u, &default_phi_family(&u, &u));
        assert!(same.iter().all(|x| x.holds && x.lhs == x.rhs));
        let cmp = phi_means_compare(&u, &v, &default_phi_family(&u, &v));
        assert!(cmp.iter().all(|x| x.holds));
        // e^{px} of log|f| is |f|^p: compare with integral means.
        for x in cmp.iter().filter(|x| matches!(x.phi, Phi::Exp { .. })) {
            let Phi::Exp { p } = x.phi else { unreachable!() };
            let s = sample_circle(&Catalog::J.series(4095), 0.8, 8192).unwrap();
            let m = crate::circle::integral_mean(&s, crate::circle::Exponent::Finite(p), None).unwrap();
            assert!((x.lhs.powf(1.0 / p) - m.value).abs() < 1e-10);
        }
        let top = u.values().iter().chain(v.values()).copied().fold(f64::NEG_INFINITY, f64::max);
        let hinge = phi_means_compare(&u, &v, &[Phi::Hinge { c: top + 1.0 }]);
        assert_eq!((hinge[0].lhs, hinge[0].rhs), (0.0, 0.0));
    }
}
