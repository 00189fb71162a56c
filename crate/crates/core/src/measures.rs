//! Atomic complex measures on the unit circle.
//!
//! A measure `mu` with `||mu|| <= 1` defines the bound-preserving convolver
//! `F(z) = int dmu(xi) / (1 - z xi)`, whose Taylor coefficients are the
//! moments `int xi^n dmu`. Convolution with `F` is then `int f(xi z) dmu(xi)`.
//! Continuous densities enter only through trapezoidal discretizations.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circle::{check_radius, sample_rotated, RingSamples};
use crate::error::{Error, Result};
use crate::series::{GrowthClass, TruncatedSeries};

/// Angles closer than this after normalization are merged.
const ANGLE_MERGE: f64 = 1e-14;

const TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Atom {
    /// In `[-pi, pi)`.
    pub angle: f64,
    pub weight: Complex64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasureJson", into = "MeasureJson")]
pub struct UnitCircleMeasure {
    atoms: Vec<Atom>,
    tag: Option<String>,
    total_variation: f64,
}

fn normalize_angle(phi: f64) -> f64 {
    let a = (phi + PI).rem_euclid(2.0 * PI) - PI;
    if a >= PI {
        -PI
    } else {
        a
    }
}

impl UnitCircleMeasure {
    /// Canonical form: angles reduced to `[-pi, pi)`, sorted, duplicates merged.
    pub fn new(atoms: Vec<Atom>, tag: Option<String>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::Measure("a measure needs at least one atom".into()));
        }
        let mut atoms: Vec<Atom> = atoms
            .into_iter()
            .map(|a| {
                if a.angle.is_finite() && a.weight.re.is_finite() && a.weight.im.is_finite() {
                    Ok(Atom { angle: normalize_angle(a.angle), weight: a.weight })
                } else {
                    Err(Error::Measure(format!("non-finite atom {a:?}")))
                }
            })
            .collect::<Result<_>>()?;
        atoms.sort_by(|a, b| a.angle.total_cmp(&b.angle));
        let mut merged: Vec<Atom> = Vec::with_capacity(atoms.len());
        for a in atoms {
            match merged.last_mut() {
                Some(last) if a.angle - last.angle <= ANGLE_MERGE => last.weight += a.weight,
                _ => merged.push(a),
            }
        }
        let total_variation = merged.iter().map(|a| a.weight.norm()).sum();
        Ok(Self {
            atoms: merged,
            tag,
            total_variation,
        })
    }

    /// Unit point mass at `angle`.
    pub fn dirac(angle: f64) -> Self {
        Self::new(vec![Atom { angle, weight: Complex64::new(1.0, 0.0) }], None).expect("finite atom")
    }

    /// Trapezoidal discretization of `density(theta) dtheta / 2 pi` on
    /// `nodes` equispaced angles starting at `-pi`.
    pub fn from_density(name: &str, nodes: usize, density: impl Fn(f64) -> f64) -> Result<Self> {
        if nodes == 0 {
            return Err(Error::Measure("density needs at least one node".into()));
        }
        let atoms = (0..nodes)
            .map(|j| {
                let angle = -PI + 2.0 * PI * j as f64 / nodes as f64;
                Atom { angle, weight: Complex64::new(density(angle) / nodes as f64, 0.0) }
            })
            .collect();
        Self::new(atoms, Some(format!("{name}:{nodes}")))
    }

    /// `(1 - cos theta) dtheta / 2 pi`, whose Cauchy transform is `1 - z/2`.
    pub fn one_minus_cos(nodes: usize) -> Self {
        Self::from_density("one_minus_cos", nodes, |t| 1.0 - t.cos()).expect("nodes > 0")
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn tag(&self) -> Option<&str> {
        self.tag.as_deref()
    }

    /// `||mu|| = sum |w_j|`.
    pub fn total_variation(&self) -> f64 {
        self.total_variation
    }

    /// `int xi^n dmu(xi) = sum w_j e^{i n phi_j}`.
    pub fn moment(&self, n: usize) -> Complex64 {
        self.atoms
            .iter()
            .map(|a| a.weight * Complex64::from_polar(1.0, n as f64 * a.angle))
            .sum()
    }
}

#[derive(Serialize, Deserialize)]
struct MeasureJson {
    atoms: Vec<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tag: Option<String>,
}

impl TryFrom<MeasureJson> for UnitCircleMeasure {
    type Error = Error;

    fn try_from(j: MeasureJson) -> Result<Self> {
        let atoms = j
            .atoms
            .iter()
            .map(|&[angle, re, im]| Atom { angle, weight: Complex64::new(re, im) })
            .collect();
        UnitCircleMeasure::new(atoms, j.tag)
    }
}

impl From<UnitCircleMeasure> for MeasureJson {
    fn from(m: UnitCircleMeasure) -> Self {
        MeasureJson {
            atoms: m.atoms.iter().map(|a| [a.angle, a.weight.re, a.weight.im]).collect(),
            tag: m.tag,
        }
    }
}

/// Taylor coefficients `0..=order` of `int dmu(xi) / (1 - z xi)`.
pub fn cauchy_transform(mu: &UnitCircleMeasure, order: usize) -> TruncatedSeries {
    let coeffs = (0..=order).map(|n| mu.moment(n)).collect();
    TruncatedSeries::new(coeffs, GrowthClass::Bounded, mu.total_variation * (1.0 + TOLERANCE))
        .expect("moments are bounded by the total variation")
}

/// Samples of `(f * F)(r e^{it}) = sum_j w_j f(r e^{i(t + phi_j)})`, one
/// rotated synthesis per atom.
pub fn convolve_via_measure(f: &TruncatedSeries, mu: &UnitCircleMeasure, r: f64, m: usize) -> Result<RingSamples<Complex64>> {
    check_radius(r)?;
    let parts: Vec<RingSamples<Complex64>> = mu
        .atoms
        .par_iter()
        .map(|a| sample_rotated(f, r, m, a.angle))
        .collect::<Result<_>>()?;
    let mut values = vec![Complex64::new(0.0, 0.0); m];
    for (a, part) in mu.atoms.iter().zip(&parts) {
        for (acc, v) in values.iter_mut().zip(part.values()) {
            *acc += a.weight * v;
        }
    }
    RingSamples::new(r, values, mu.total_variation * f.tail_bound(r))
}

/// `||mu|| <= 1`.
pub fn is_bound_preserving(mu: &UnitCircleMeasure) -> bool {
    mu.total_variation <= 1.0 + TOLERANCE
}

/// Probability measure: nonnegative real weights summing to one.
pub fn is_convexity_preserving(mu: &UnitCircleMeasure) -> bool {
    let sum: Complex64 = mu.atoms.iter().map(|a| a.weight).sum();
    is_bound_preserving(mu)
        && mu.atoms.iter().all(|a| a.weight.im.abs() <= TOLERANCE && a.weight.re >= -TOLERANCE)
        && (sum - 1.0).norm() <= TOLERANCE
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureKind {
    /// Complex weights with total variation in `(0, 1]`.
    BoundPreserving,
    /// Nonnegative weights summing to one.
    Probability,
}

/// Deterministic random measure with between 1 and `max_atoms` atoms.
pub fn random_measure(seed: u64, kind: MeasureKind, max_atoms: usize) -> UnitCircleMeasure {
    assert!(max_atoms >= 1, "random_measure needs max_atoms >= 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=max_atoms);
    let angles: Vec<f64> = (0..n).map(|_| rng.gen_range(-PI..PI)).collect();
    // exponential draws, normalized: a flat Dirichlet sample
    let raw: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let total: f64 = raw.iter().sum();
    let weights: Vec<Complex64> = match kind {
        MeasureKind::Probability => raw.iter().map(|x| Complex64::new(x / total, 0.0)).collect(),
        MeasureKind::BoundPreserving => {
            let scale = 1.0 - rng.gen::<f64>();
            raw.iter()
                .map(|x| Complex64::from_polar(scale * x / total, rng.gen_range(-PI..PI)))
                .collect()
        }
    };
    let atoms = angles.into_iter().zip(weights).map(|(angle, weight)| Atom { angle, weight }).collect();
    UnitCircleMeasure::new(atoms, None).expect("finite atoms")
}
