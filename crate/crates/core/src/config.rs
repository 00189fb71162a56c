//! Run configuration shared by the verification runners and the CLI.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::circle::{samples_for_order, series_for_radius, DEFAULT_R_GRID, DEFAULT_SAMPLES};
use crate::error::{Error, Result};
use crate::series::{TruncatedSeries, DEFAULT_ORDER};
use crate::star::DEFAULT_THETA_POINTS;

/// Numerical tolerances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Series are lengthened until their tail bound at the working radius
    /// drops below this.
    pub tail: f64,
    /// Longest series the auto-sizing may produce.
    pub max_order: usize,
    /// Relative rounding floor added to every inequality's error budget.
    pub rounding: f64,
    /// Slack for sign and monotonicity tests on sampled curves.
    pub shape: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { tail: 1e-12, max_order: 8191, rounding: 1e-12, shape: 1e-9 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Minimum truncation order.
    pub n_coeffs: usize,
    /// Minimum number of samples per circle.
    pub fft_size: usize,
    pub theta_points: usize,
    pub r_grid: Vec<f64>,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n_coeffs: DEFAULT_ORDER,
            fft_size: DEFAULT_SAMPLES,
            theta_points: DEFAULT_THETA_POINTS,
            r_grid: DEFAULT_R_GRID.to_vec(),
            seed: 0,
            tolerances: Tolerances::default(),
            output_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.fft_size.is_power_of_two() || self.fft_size < 2 * (self.n_coeffs + 1) {
            return Err(Error::Config(format!(
                "fft_size {} must be a power of two and at least 2 (n_coeffs + 1) = {}",
                self.fft_size,
                2 * (self.n_coeffs + 1)
            )));
        }
        if self.theta_points < 16 {
            return Err(Error::Config(format!("theta_points {} is below 16", self.theta_points)));
        }
        if self.r_grid.is_empty() {
            return Err(Error::Config("r_grid is empty".into()));
        }
        if let Some(r) = self.r_grid.iter().find(|r| !(**r > 0.0 && **r < 1.0)) {
            return Err(Error::Config(format!("radius {r} is outside (0, 1)")));
        }
        let t = &self.tolerances;
        if !(t.tail > 0.0 && t.rounding >= 0.0 && t.shape >= 0.0) || t.max_order < self.n_coeffs {
            return Err(Error::Config("tolerances must be positive and max_order >= n_coeffs".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Truncation of `build` accurate to `tolerances.tail` at radius `r`.
    pub fn series_at(&self, build: impl Fn(usize) -> TruncatedSeries, r: f64) -> TruncatedSeries {
        series_for_radius(build, r, self.tolerances.tail, self.n_coeffs, self.tolerances.max_order)
    }

    /// Sample count shared by series up to order `order`.
    pub fn samples_for(&self, order: usize) -> usize {
        samples_for_order(order, self.fft_size)
    }
}
