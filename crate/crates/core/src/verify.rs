//! Scenario runners: each one drives the other modules over a grid of radii
//! and reduces the results to a [`Verdict`].

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circle::{integral_mean, power_integral, sample_circle, Exponent, MeanValue, RingSamples};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::hull::ConvexHull;
use crate::loewner::{known_good_driving, odd_factor_series, odd_function, univalence_sanity, Driving, A5_THRESHOLD};
use crate::measures::{
    cauchy_transform, convolve_via_measure, is_convexity_preserving, random_measure, MeasureKind, UnitCircleMeasure,
};
use crate::series::{divide_by_z, hadamard, Catalog, GrowthClass, TruncatedSeries};
use crate::star::{
    reflect_negate, star_leq_with_policy, star_profile, symmetric_decreasing_check, StarComparison, StarProfile,
    StarVerdict,
};

pub const THM_TRIALS: usize = 200;
pub const THM_EXPONENTS: [f64; 5] = [1.0, 1.5, 2.0, 4.0, f64::INFINITY];
pub const BAERNSTEIN_EXPONENTS: [f64; 5] = [-1.0, -0.5, 0.5, 1.0, 2.0];
pub const STEINER_MEASURES: usize = 100;
pub const STEINER_EXPONENTS: [f64; 5] = [0.25, 0.5, 0.75, 1.0, 2.0];
pub const MAX_ATOMS: usize = 8;
pub const Q1_SCAN_CAP: usize = 5000;
/// Nodes of the discretized `(1 - cos t) dt / 2 pi`.
pub const COSINE_NODES: usize = 1024;
/// Every this many angles of a star profile go into the CSV tables.
pub const TABLE_THETA_STRIDE: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Reproduced,
    Violated,
    Inconclusive,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Reproduced => "reproduced",
            Status::Violated => "violated",
            Status::Inconclusive => "inconclusive",
        })
    }
}

/// A grid point where an inequality was tested, with its gap
/// (left side minus right side) and error budget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub what: String,
    pub r: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "exponent_json")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    pub gap: f64,
    pub err: f64,
}

impl Witness {
    fn at(what: impl Into<String>, r: f64, gap: f64, err: f64) -> Self {
        Self { what: what.into(), r, theta: None, p: None, n: None, gap, err }
    }

    fn theta(mut self, theta: f64) -> Self {
        self.theta = Some(theta);
        self
    }

    fn p(mut self, p: f64) -> Self {
        self.p = Some(p);
        self
    }

    fn n(mut self, n: usize) -> Self {
        self.n = Some(n);
        self
    }
}

/// Exponents as JSON numbers, with `p = inf` written as the string `"inf"`.
mod exponent_json {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(p: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match p {
            Some(v) if v.is_infinite() => Repr::Text("inf".into()).serialize(s),
            Some(v) => Repr::Number(*v).serialize(s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        match Option::<Repr>::deserialize(d)? {
            None => Ok(None),
            Some(Repr::Number(v)) => Ok(Some(v)),
            Some(Repr::Text(t)) if t == "inf" => Ok(Some(f64::INFINITY)),
            Some(Repr::Text(t)) => Err(serde::de::Error::custom(format!("bad exponent `{t}`"))),
        }
    }
}

/// One named sub-check of a scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

/// A CSV table; every cell is preformatted so output is byte-stable.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: impl Into<String>, header: &[&'static str]) -> Self {
        Self { name: name.into(), header: header.to_vec(), rows: Vec::new() }
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    fn push_star(&mut self, prefix: &[String], u: &StarProfile, v: &StarProfile) {
        let budget = u.err_bound + v.err_bound;
        for k in (0..u.thetas.len()).step_by(TABLE_THETA_STRIDE) {
            let mut row = prefix.to_vec();
            row.extend([u.r, u.thetas[k], u.values[k], v.values[k], u.values[k] - v.values[k], budget].map(num));
            self.rows.push(row);
        }
    }
}

fn num(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x}")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub scenario: String,
    pub status: Status,
    pub expected: Status,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub witnesses: Vec<Witness>,
    /// Table file names, relative to the output directory.
    pub tables: Vec<String>,
    #[serde(skip)]
    pub data: Vec<Table>,
}

impl Verdict {
    pub fn as_expected(&self) -> bool {
        self.status == self.expected
    }

    fn assemble(
        scenario: Scenario,
        cfg: &RunConfig,
        status: Status,
        checks: Vec<Check>,
        witnesses: Vec<Witness>,
        data: Vec<Table>,
    ) -> Self {
        Self {
            scenario: scenario.name().into(),
            status,
            expected: scenario.expected(),
            seed: cfg.seed,
            checks,
            witnesses,
            tables: data.iter().map(Table::file_name).collect(),
            data,
        }
    }

    /// One-line summary.
    pub fn summary(&self) -> String {
        let failed: Vec<&str> = self.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        let mut line = format!("{}: {} (expected {})", self.scenario, self.status, self.expected);
        if !failed.is_empty() {
            line.push_str(&format!("; failed checks: {}", failed.join(", ")));
        }
        line
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scenario {
    #[serde(rename = "thmA")]
    ThmA,
    #[serde(rename = "baernstein")]
    Baernstein,
    #[serde(rename = "q1")]
    Q1,
    #[serde(rename = "q2")]
    Q2,
    #[serde(rename = "steiner")]
    Steiner,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [Scenario::ThmA, Scenario::Baernstein, Scenario::Q1, Scenario::Q2, Scenario::Steiner];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::ThmA => "thmA",
            Scenario::Baernstein => "baernstein",
            Scenario::Q1 => "q1",
            Scenario::Q2 => "q2",
            Scenario::Steiner => "steiner",
        }
    }

    /// The two question scenarios exhibit counterexamples; the rest confirm
    /// inequalities.
    pub fn expected(self) -> Status {
        match self {
            Scenario::Q1 | Scenario::Q2 => Status::Violated,
            _ => Status::Reproduced,
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown scenario `{s}`")))
    }
}

/// Status of a proved inequality from counts of outright failures and of
/// undecided comparisons.
fn confirm_status(failures: usize, undecided: usize, checks: &[Check]) -> Status {
    if failures > 0 {
        Status::Violated
    } else if undecided > 0 || checks.iter().any(|c| !c.passed) {
        Status::Inconclusive
    } else {
        Status::Reproduced
    }
}

fn budget(cfg: &RunConfig, a: &MeanValue, b: &MeanValue) -> f64 {
    a.err_bound + b.err_bound + cfg.tolerances.rounding * a.value.abs().max(b.value.abs()).max(1.0)
}

fn exponent(p: f64) -> Exponent {
    Exponent::from(p)
}

fn catalog_at(cfg: &RunConfig, c: Catalog, r: f64) -> TruncatedSeries {
    cfg.series_at(|n| c.series(n), r)
}

fn log_profile(cfg: &RunConfig, f: &TruncatedSeries, r: f64, m: usize) -> Result<StarProfile> {
    star_profile(&sample_circle(f, r, m)?.log_modulus()?, cfg.theta_points)
}

fn mix_seed(seed: u64, stream: u64, index: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos(2 * index as u128);
    rng.gen()
}

fn comparison_witness(what: &str, c: &StarComparison) -> Witness {
    Witness::at(what, c.r, c.witness.gap, c.err_budget).theta(c.witness.theta)
}

/// `M_p(r, f * F) <= M_p(r, f)` for random bound-preserving `F`.
pub fn run_thm_1_1(cfg: &RunConfig) -> Result<Verdict> {
    cfg.validate()?;
    let functions = Catalog::ALL;
    let trials: Vec<(Catalog, u64)> = (0..THM_TRIALS)
        .map(|i| {
            let s = mix_seed(cfg.seed, 1, i);
            (functions[(s % functions.len() as u64) as usize], s >> 8)
        })
        .collect();
    let mut table = Table::new("thmA_means", &["trial", "f", "r", "p", "value", "err_bound", "reference", "reference_err"]);
    let results: Vec<Vec<(usize, Catalog, f64, f64, MeanValue, MeanValue)>> = trials
        .par_iter()
        .enumerate()
        .map(|(i, &(f, mseed))| {
            let mu = random_measure(mseed, MeasureKind::BoundPreserving, MAX_ATOMS);
            let mut out = Vec::new();
            for &r in &cfg.r_grid {
                let fr = catalog_at(cfg, f, r);
                let m = cfg.samples_for(fr.order());
                let plain = sample_circle(&fr, r, m)?;
                let conv = convolve_via_measure(&fr, &mu, r, m)?;
                for p in THM_EXPONENTS {
                    let lhs = integral_mean(&conv, exponent(p), None)?;
                    let rhs = integral_mean(&plain, exponent(p), None)?;
                    out.push((i, f, r, p, lhs, rhs));
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut violations = 0;
    let mut worst: Option<Witness> = None;
    for (i, f, r, p, lhs, rhs) in results.into_iter().flatten() {
        let gap = lhs.value - rhs.value;
        let b = budget(cfg, &lhs, &rhs);
        if gap > b {
            violations += 1;
        }
        if worst.as_ref().is_none_or(|w| gap - b > w.gap - w.err) {
            worst = Some(Witness::at(format!("trial {i}: {f}"), r, gap, b).p(p));
        }
        table.rows.push(vec![i.to_string(), f.to_string(), num(r), num(p), num(lhs.value), num(lhs.err_bound), num(rhs.value), num(rhs.err_bound)]);
    }
    let mut checks = vec![Check::new("no_violations", violations == 0, format!("{violations} violations in {} comparisons", table.rows.len()))];

    // identity measure: equality
    let mut identity_gap: f64 = 0.0;
    let mut identity_ok = true;
    for &r in &cfg.r_grid {
        let fr = catalog_at(cfg, Catalog::Koebe, r);
        let m = cfg.samples_for(fr.order());
        let plain = sample_circle(&fr, r, m)?;
        let conv = convolve_via_measure(&fr, &UnitCircleMeasure::dirac(0.0), r, m)?;
        for p in THM_EXPONENTS {
            let (a, b) = (integral_mean(&conv, exponent(p), None)?, integral_mean(&plain, exponent(p), None)?);
            identity_gap = identity_gap.max((a.value - b.value).abs());
            identity_ok &= (a.value - b.value).abs() <= budget(cfg, &a, &b);
        }
    }
    checks.push(Check::new("identity_measure_equality", identity_ok, format!("max |difference| {identity_gap:e}")));

    // 1 - z = (1/(1-z)^2) * (1 - z/2), through the cosine measure
    let mu = UnitCircleMeasure::one_minus_cos(COSINE_NODES);
    let mut cosine_ok = true;
    for &r in &cfg.r_grid {
        let fr = catalog_at(cfg, Catalog::InvSq, r);
        let m = cfg.samples_for(fr.order());
        let lhs = integral_mean(&convolve_via_measure(&fr, &mu, r, m)?, Exponent::Finite(1.0), None)?;
        let rhs = integral_mean(&sample_circle(&fr, r, m)?, Exponent::Finite(1.0), None)?;
        cosine_ok &= lhs.value - rhs.value <= budget(cfg, &lhs, &rhs);
    }
    checks.push(Check::new("one_minus_z_below_inv_sq", cosine_ok, "M_1(r, 1 - z) <= M_1(r, 1/(1-z)^2) on the grid"));

    let status = confirm_status(violations, 0, &checks);
    Ok(Verdict::assemble(Scenario::ThmA, cfg, status, checks, worst.into_iter().collect(), vec![table]))
}

/// Tallies star comparisons and remembers the largest gap.
#[derive(Default)]
struct StarTally {
    fails: usize,
    undecided: usize,
    worst: Option<Witness>,
}

impl StarTally {
    fn add(&mut self, what: &str, c: &StarComparison) {
        match c.verdict {
            StarVerdict::Fails => self.fails += 1,
            StarVerdict::Inconclusive => self.undecided += 1,
            StarVerdict::Holds { .. } => {}
        }
        if self.worst.as_ref().is_none_or(|w| c.witness.gap - c.err_budget > w.gap - w.err) {
            self.worst = Some(comparison_witness(what, c));
        }
    }
}

/// Star and integral-mean comparisons against the Koebe function.
pub fn run_baernstein(cfg: &RunConfig) -> Result<Verdict> {
    cfg.validate()?;
    let rotations = [0.0, 1.0, 2.5];
    let mut members: Vec<(String, Box<dyn Fn(usize) -> TruncatedSeries + Sync>)> = vec![
        ("cayley".into(), Box::new(|n| Catalog::Cayley.series(n))),
        ("halfplane_conv".into(), Box::new(|n| Catalog::HalfplaneConv.series(n))),
    ];
    for beta in rotations {
        members.push((format!("koebe_rot{beta}"), Box::new(move |n| Catalog::Koebe.series(n).rotated(beta))));
    }
    let mut star_table = Table::new("baernstein_star", &["f", "sign", "r", "theta", "u_star", "v_star", "gap", "err_bound"]);
    let mut means_table = Table::new("baernstein_means", &["f", "r", "p", "value", "err_bound", "reference", "reference_err"]);
    let mut tally = StarTally::default();
    let mut power_violations = 0;
    let mut worst_power: Option<Witness> = None;
    for (name, build) in &members {
        for &r in &cfg.r_grid {
            let f = cfg.series_at(build, r);
            let k = catalog_at(cfg, Catalog::Koebe, r);
            let m = cfg.samples_for(f.order().max(k.order()));
            let (pu, pv) = (log_profile(cfg, &f, r, m)?, log_profile(cfg, &k, r, m)?);
            let plus = star_leq_with_policy(&pu, &pv)?;
            let (nu, nv) = (reflect_negate(&pu), reflect_negate(&pv));
            let minus = star_leq_with_policy(&nu, &nv)?;
            tally.add(&format!("(log|{name}|)* <= (log|k|)*"), &plus);
            tally.add(&format!("(-log|{name}|)* <= (-log|k|)*"), &minus);
            star_table.push_star(&[name.clone(), "+".into()], &pu, &pv);
            star_table.push_star(&[name.clone(), "-".into()], &nu, &nv);

            // |f/z|^p against |k/z|^p; for p < 0 the means reverse order,
            // so the integrals are compared
            let (fz, kz) = (sample_circle(&divide_by_z(&f)?, r, m)?, sample_circle(&divide_by_z(&k)?, r, m)?);
            for p in BAERNSTEIN_EXPONENTS {
                let lhs = power_integral(&fz, p, None)?;
                let rhs = power_integral(&kz, p, None)?;
                let gap = lhs.value - rhs.value;
                let b = budget(cfg, &lhs, &rhs);
                if gap > b {
                    power_violations += 1;
                }
                if worst_power.as_ref().is_none_or(|w| gap - b > w.gap - w.err) {
                    worst_power = Some(Witness::at(format!("int |{name}/z|^p <= int |k/z|^p"), r, gap, b).p(p));
                }
                means_table.rows.push(vec![name.clone(), num(r), num(p), num(lhs.value), num(lhs.err_bound), num(rhs.value), num(rhs.err_bound)]);
            }
        }
    }
    let mut checks = vec![Check::new(
        "koebe_comparisons",
        tally.fails == 0 && tally.undecided == 0 && power_violations == 0,
        format!("{} star failures, {} undecided, {power_violations} power-integral violations", tally.fails, tally.undecided),
    )];

    // (log|h_1|)* <= (log|I|)* and (log|J|)* <= (log|I|)*
    let h1 = long_odd_factor(cfg, &known_good_driving())?;
    let mut chain = StarTally::default();
    for &r in &cfg.r_grid {
        let id = catalog_at(cfg, Catalog::Identity, r);
        let j = catalog_at(cfg, Catalog::J, r);
        let m = cfg.samples_for(id.order().max(j.order()).max(h1.order()));
        let pi = log_profile(cfg, &id, r, m)?;
        let ph = log_profile(cfg, &h1, r, m)?;
        let pj = log_profile(cfg, &j, r, m)?;
        chain.add("(log|h1|)* <= (log|I|)*", &star_leq_with_policy(&ph, &pi)?);
        chain.add("(log|J|)* <= (log|I|)*", &star_leq_with_policy(&pj, &pi)?);
        star_table.push_star(&["h1".into(), "+".into()], &ph, &pi);
        star_table.push_star(&["J".into(), "+".into()], &pj, &pi);
    }
    checks.push(Check::new(
        "chain_below_identity",
        chain.fails == 0 && chain.undecided == 0,
        format!("{} failures, {} undecided; h1 tail measured, not certified", chain.fails, chain.undecided),
    ));
    let fails = tally.fails + chain.fails + power_violations;
    let status = confirm_status(fails, tally.undecided + chain.undecided, &checks);
    let witnesses = [tally.worst, worst_power, chain.worst].into_iter().flatten().collect();
    Ok(Verdict::assemble(Scenario::Baernstein, cfg, status, checks, witnesses, vec![star_table, means_table]))
}

/// `h_1` from the closed-form chain, long enough for the largest grid radius.
pub fn long_odd_factor(cfg: &RunConfig, d: &Driving) -> Result<TruncatedSeries> {
    let r_max = cfg.r_grid.iter().copied().fold(0.0, f64::max);
    let mut order = (cfg.n_coeffs + 1).next_power_of_two() - 1;
    loop {
        let h1 = odd_factor_series(d, order)?;
        if h1.tail_bound(r_max) <= cfg.tolerances.tail.max(1e-9) || order >= cfg.tolerances.max_order {
            return Ok(h1);
        }
        order = 2 * order + 1;
    }
}

/// Star comparisons of `log|f|` against precomputed `log|I|` profiles.
fn star_scan(cfg: &RunConfig, f: &TruncatedSeries, id_profiles: &[StarProfile], m: usize) -> Result<Vec<Option<(StarComparison, StarProfile)>>> {
    cfg.r_grid
        .par_iter()
        .zip(id_profiles)
        .map(|(&r, pi)| {
            // a zero of the truncation on the circle leaves this radius undecided
            match log_profile(cfg, f, r, m) {
                Ok(pf) => Ok(Some((star_leq_with_policy(&pf, pi)?, pf))),
                Err(Error::NotZeroFree { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect()
}

fn largest_failure(scan: &[Option<(StarComparison, StarProfile)>]) -> Option<&(StarComparison, StarProfile)> {
    scan.iter()
        .flatten()
        .filter(|(c, _)| c.fails())
        .max_by(|a, b| a.0.witness.gap.total_cmp(&b.0.witness.gap))
}

/// Hadamard powers `f_n` of `h_1` eventually break `(log|f_n|)* <= (log|I|)*`.
pub fn run_question1(cfg: &RunConfig, driving: &Driving) -> Result<Verdict> {
    cfg.validate()?;
    let mut checks = Vec::new();
    let (big_h, h, _) = odd_function(driving, crate::loewner::MAX_ORDER)?;
    let a5 = h.coeff(5);
    checks.push(Check::new("a5_above_one", a5.norm() > A5_THRESHOLD, format!("|a5| = {}", a5.norm())));
    let sanity = univalence_sanity(&big_h, 0.7, 1024)?;
    checks.push(Check::new("univalence_sanity", sanity.pass, format!("min separation {:e}, margin {:e}", sanity.min_separation, sanity.margin)));
    let h1 = long_odd_factor(cfg, driving)?;
    checks.push(Check::new(
        "long_series_matches_ode",
        (h1.coeff(4) - a5).norm() < 1e-8,
        format!("closed-form a5 {} vs ODE {}", h1.coeff(4), a5),
    ));

    let r_top = cfg.r_grid.iter().copied().fold(0.0, f64::max);
    let ids: Vec<TruncatedSeries> = cfg.r_grid.iter().map(|&r| catalog_at(cfg, Catalog::Identity, r)).collect();
    let m = cfg.samples_for(ids.iter().map(TruncatedSeries::order).max().unwrap_or(0).max(h1.order()));
    let id_profiles: Vec<StarProfile> = cfg.r_grid.iter().zip(&ids).map(|(&r, id)| log_profile(cfg, id, r, m)).collect::<Result<_>>()?;
    let id_top = ids[cfg.r_grid.iter().position(|&r| r == r_top).unwrap_or(0)].clone();
    let m_half_id = integral_mean(&sample_circle(&id_top, r_top, m)?, Exponent::Finite(0.5), None)?;

    let mut scan_table = Table::new("q1_scan", &["n", "m_half", "m_half_err", "reference", "max_gap", "max_gap_r", "star_fails"]);
    let mut first_star_failure = None;
    let mut found = None;
    let mut f = h1.clone();
    let mut n = 1;
    loop {
        let scan = star_scan(cfg, &f, &id_profiles, m)?;
        if n == 1 {
            let ok = scan.iter().all(|s| s.as_ref().is_some_and(|(c, _)| c.holds()));
            checks.push(Check::new("h1_below_identity", ok, "(log|h1|)* <= (log|I|)* at every grid radius"));
        }
        let m_half = integral_mean(&sample_circle(&f, r_top, m)?, Exponent::Finite(0.5), None)?;
        let escaped = m_half.value - m_half.err_bound > m_half_id.value + m_half_id.err_bound;
        let failure = largest_failure(&scan);
        let (max_gap, max_r) = scan
            .iter()
            .flatten()
            .map(|(c, _)| (c.witness.gap, c.r))
            .fold((f64::NEG_INFINITY, 0.0), |a, b| if b.0 > a.0 { b } else { a });
        scan_table.rows.push(vec![n.to_string(), num(m_half.value), num(m_half.err_bound), num(m_half_id.value), num(max_gap), num(max_r), failure.is_some().to_string()]);
        if failure.is_some() && first_star_failure.is_none() {
            first_star_failure = Some(n);
        }
        if let (true, Some(fail)) = (escaped, failure) {
            found = Some((n, fail.clone(), m_half));
            break;
        }
        if n >= Q1_SCAN_CAP {
            break;
        }
        n += 1;
        f = hadamard(&f, &h1);
    }

    let mut witnesses = Vec::new();
    let mut tables = vec![scan_table];
    let status = match found {
        None => {
            checks.push(Check::new("failure_found", false, format!("no failure up to n = {Q1_SCAN_CAP}")));
            Status::Inconclusive
        }
        Some((big_n, (cmp, profile), m_half)) => {
            checks.push(Check::new("failure_found", true, format!("N = {big_n}; star alone first fails at n = {}", first_star_failure.unwrap_or(big_n))));
            checks.push(Check::new("n_above_one", big_n > 1, format!("N = {big_n}")));
            let want = h1.coeff(4).powu(big_n as u32);
            checks.push(Check::new(
                "z4_coefficient",
                (f.coeff(4) - want).norm() <= 1e-12 * want.norm().max(1.0),
                format!("coefficient of z^4 of f_N is a5^N = {want}"),
            ));
            checks.push(Check::new(
                "half_mean_escape",
                true,
                format!("M_1/2({r_top}, f_N) = {} > M_1/2({r_top}, I) = {}", m_half.value, m_half_id.value),
            ));
            // F1 = f_1, F2 = f_{N-1}: F1 * F2 = f_N but I * I = I
            let f2 = if big_n > 1 { (1..big_n - 1).fold(h1.clone(), |acc, _| hadamard(&acc, &h1)) } else { h1.clone() };
            let product = hadamard(&h1, &f2);
            let rescan = star_scan(cfg, &product, &id_profiles, m)?;
            let refail = largest_failure(&rescan);
            checks.push(Check::new(
                "product_fails",
                refail.is_some(),
                "(log|F1 * F2|)* <= (log|I * I|)* fails with F1 = f_1, F2 = f_(N-1)",
            ));
            witnesses.push(comparison_witness("(log|f_N|)* <= (log|I|)*", &cmp).n(big_n));
            for nb in &cmp.neighbors {
                witnesses.push(Witness::at("neighbor", cmp.r, nb.gap, cmp.err_budget).theta(nb.theta).n(big_n));
            }
            witnesses.push(
                Witness::at("M_1/2(f_N) > M_1/2(I)", r_top, m_half.value - m_half_id.value, m_half.err_bound + m_half_id.err_bound)
                    .p(0.5)
                    .n(big_n),
            );
            let pi = &id_profiles[cfg.r_grid.iter().position(|&r| r == cmp.r).unwrap_or(0)];
            let mut star_table = Table::new("q1_star", &["r", "theta", "u_star", "v_star", "gap", "err_bound"]);
            star_table.push_star(&[], &profile, pi);
            tables.push(star_table);
            if checks.iter().all(|c| c.passed) {
                Status::Violated
            } else {
                Status::Inconclusive
            }
        }
    };
    Ok(Verdict::assemble(Scenario::Q1, cfg, status, checks, witnesses, tables))
}

/// `f = 1/(1-z)^2` and the convexity-preserving `F = 1 - z/2` break
/// `(log|f * F|)* <= (log|f|)*`.
pub fn run_question2(cfg: &RunConfig) -> Result<Verdict> {
    cfg.validate()?;
    let mut checks = Vec::new();
    let mu = UnitCircleMeasure::one_minus_cos(COSINE_NODES);
    let target = |n: usize| match n {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(-0.5, 0.0),
        _ => Complex64::new(0.0, 0.0),
    };
    let moment_err = (0..=64).map(|n| (mu.moment(n) - target(n)).norm()).fold(0.0, f64::max);
    checks.push(Check::new("cosine_moments", moment_err <= 1e-10, format!("max moment error {moment_err:e}")));
    checks.push(Check::new("convexity_preserving", is_convexity_preserving(&mu), "(1 - cos t) dt / 2 pi is a probability measure"));

    let order = cfg.n_coeffs;
    let exact = hadamard(&Catalog::InvSq.series(order), &Catalog::OneMinusHalfZ.series(order));
    let want = Catalog::OneMinusZ.series(order);
    let exact_ok = (0..=order).all(|n| exact.coeff(n) == want.coeff(n));
    let via_mu = hadamard(&Catalog::InvSq.series(64), &cauchy_transform(&mu, 64));
    let mu_err = (0..=64).map(|n| (via_mu.coeff(n) - want.coeff(n)).norm()).fold(0.0, f64::max);
    checks.push(Check::new("product_is_one_minus_z", exact_ok && mu_err <= 1e-10, format!("exact: {exact_ok}; via measure: {mu_err:e}")));

    let mut table = Table::new("q2_star", &["r", "theta", "u_star", "v_star", "gap", "err_bound"]);
    let mut failures: Vec<StarComparison> = Vec::new();
    let g = Catalog::OneMinusZ.series(1);
    for &r in &cfg.r_grid {
        let f = catalog_at(cfg, Catalog::InvSq, r);
        let m = cfg.samples_for(f.order());
        let (pu, pv) = (log_profile(cfg, &g, r, m)?, log_profile(cfg, &f, r, m)?);
        let c = star_leq_with_policy(&pu, &pv)?;
        if c.fails() {
            failures.push(c);
        }
        table.push_star(&[], &pu, &pv);
    }
    let best = failures.iter().max_by(|a, b| a.witness.gap.total_cmp(&b.witness.gap));
    let mut witnesses = Vec::new();
    if let Some(c) = best {
        witnesses.push(comparison_witness("(log|1-z|)* <= (log|1/(1-z)^2|)*", c));
        for nb in &c.neighbors {
            witnesses.push(Witness::at("neighbor", c.r, nb.gap, c.err_budget).theta(nb.theta));
        }
    }
    let radii: Vec<String> = failures.iter().map(|c| num(c.r)).collect();
    checks.push(Check::new(
        "star_failure",
        best.is_some_and(|c| c.witness.gap > 10.0 * c.err_budget),
        format!("fails at r in [{}]", radii.join(", ")),
    ));

    let mut reflection_err: f64 = 0.0;
    let mut reflection_ok = true;
    for r in [0.5, 0.9] {
        let f = catalog_at(cfg, Catalog::InvSq, r);
        let u = sample_circle(&f, r, cfg.samples_for(f.order()))?.log_modulus()?;
        let pu = star_profile(&u, cfg.theta_points)?;
        let direct = star_profile(&u.negated(), cfg.theta_points)?;
        let reflected = reflect_negate(&pu);
        let scale = pu.values.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        for (a, b) in direct.values.iter().zip(&reflected.values) {
            reflection_err = reflection_err.max((a - b).abs());
            reflection_ok &= (a - b).abs() <= 2.0 * pu.err_bound + cfg.tolerances.rounding * scale;
        }
    }
    checks.push(Check::new("reflection_identity", reflection_ok, format!("max difference {reflection_err:e}")));

    let r_top = cfg.r_grid.iter().copied().fold(0.0, f64::max);
    let inv = catalog_at(cfg, Catalog::Identity, r_top);
    let inv_max = integral_mean(&sample_circle(&inv, r_top, cfg.samples_for(inv.order()))?, Exponent::Infinity, None)?;
    let square = TruncatedSeries::from_real(&[1.0, -2.0, 1.0], GrowthClass::Finite)?;
    let mut square_max: f64 = 0.0;
    for &r in &cfg.r_grid {
        let s = integral_mean(&sample_circle(&square, r, cfg.fft_size)?, Exponent::Infinity, None)?;
        square_max = square_max.max(s.value + s.err_bound);
    }
    checks.push(Check::new(
        "hinf_dichotomy",
        inv_max.value > 50.0 && square_max <= 4.0 + 1e-9,
        format!("M_inf({r_top}, 1/(1-z)) = {}; sup M_inf(r, (1-z)^2) = {square_max}", inv_max.value),
    ));

    let status = if checks.iter().all(|c| c.passed) {
        Status::Violated
    } else if failures.is_empty() && checks.iter().filter(|c| c.name != "star_failure").all(|c| c.passed) {
        Status::Reproduced
    } else {
        Status::Inconclusive
    };
    Ok(Verdict::assemble(Scenario::Q2, cfg, status, checks, witnesses, vec![table]))
}

/// Membership screen for the Steiner-symmetric class: normalization,
/// typically real, and `Re f` symmetric decreasing on every grid circle.
pub fn steiner_check(f: &TruncatedSeries, cfg: &RunConfig) -> Result<bool> {
    let c1 = f.coeff(1);
    if f.coeff(0).norm() > 1e-12 || !(c1.re > 0.0) || c1.im.abs() > 1e-12 {
        return Ok(false);
    }
    for &r in &cfg.r_grid {
        let s = sample_circle(f, r, cfg.samples_for(f.order()))?;
        let tol = cfg.tolerances.shape + 2.0 * s.err_bound();
        let typically_real = (0..s.len()).all(|j| s.values()[j].im * s.angle(j).sin() >= -tol);
        if !typically_real || !symmetric_decreasing_check(&s.real_part(), tol) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Largest distance from the chords of the `m`-gon to the curve midpoints,
/// read off the `2m`-point samples.
fn chord_sagitta(fine: &[Complex64]) -> f64 {
    let n = fine.len();
    (0..n / 2)
        .map(|j| {
            let (a, mid, b) = (fine[2 * j], fine[2 * j + 1], fine[(2 * j + 2) % n]);
            let ab = b - a;
            let len2 = ab.norm_sqr();
            if len2 == 0.0 {
                return (mid - a).norm();
            }
            let t = (((mid - a) * ab.conj()).re / len2).clamp(0.0, 1.0);
            (mid - (a + ab * t)).norm()
        })
        .fold(0.0, f64::max)
}

struct SteinerCase {
    r: f64,
    plain: RingSamples<Complex64>,
    plain_means: Vec<MeanValue>,
    plain_profile: StarProfile,
    hull: ConvexHull,
    hull_tol: f64,
}

struct SteinerOutcome {
    f: Catalog,
    trial: usize,
    r: f64,
    means: Vec<(f64, MeanValue, MeanValue)>,
    star: StarComparison,
    profiles: (StarProfile, StarProfile),
    hull_excess: f64,
    hull_tol: f64,
}

/// `M_p(r, f * F) <= M_p(r, f)` for every `p > 0`, with `f` Steiner
/// symmetric and `F` convexity preserving.
pub fn run_steiner(cfg: &RunConfig) -> Result<Verdict> {
    cfg.validate()?;
    let functions = [Catalog::Strip, Catalog::K2, Catalog::Z];
    let mut checks = Vec::new();
    for f in functions {
        let series = cfg.series_at(|n| f.series(n), cfg.r_grid.iter().copied().fold(0.0, f64::max));
        checks.push(Check::new(&format!("steiner_{f}"), steiner_check(&series, cfg)?, "normalized, typically real, Re f symmetric decreasing"));
    }
    let not_real = TruncatedSeries::new(
        vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)],
        GrowthClass::Finite,
        1.0,
    )?;
    checks.push(Check::new("non_steiner_rejected", !steiner_check(&not_real, cfg)?, "z + i z^2 is not typically real"));

    let measures: Vec<UnitCircleMeasure> = (0..STEINER_MEASURES)
        .map(|i| random_measure(mix_seed(cfg.seed, 2, i), MeasureKind::Probability, MAX_ATOMS))
        .collect();
    let mut outcomes: Vec<SteinerOutcome> = Vec::new();
    for f in functions {
        for &r in &cfg.r_grid {
            let fr = catalog_at(cfg, f, r);
            let m = cfg.samples_for(fr.order());
            let plain = sample_circle(&fr, r, m)?;
            let fine = sample_circle(&fr, r, 2 * m)?;
            let plain_means = STEINER_EXPONENTS.iter().map(|&p| integral_mean(&plain, exponent(p), None)).collect::<Result<_>>()?;
            let case = SteinerCase {
                r,
                plain_profile: star_profile(&plain.real_part(), cfg.theta_points)?,
                hull: ConvexHull::new(fine.values()),
                hull_tol: 2.0 * chord_sagitta(fine.values()) + 2.0 * fine.err_bound() + cfg.tolerances.shape,
                plain,
                plain_means,
            };
            let batch: Vec<SteinerOutcome> = measures
                .par_iter()
                .enumerate()
                .map(|(trial, mu)| steiner_trial(cfg, f, &fr, mu, trial, &case))
                .collect::<Result<_>>()?;
            outcomes.extend(batch);
        }
    }

    let mut means_table = Table::new("steiner_means", &["f", "trial", "r", "p", "value", "err_bound", "reference", "reference_err"]);
    let mut mean_violations = 0;
    let mut tally = StarTally::default();
    let mut hull_violations = 0;
    let mut worst_mean: Option<Witness> = None;
    let mut worst_hull: Option<Witness> = None;
    let mut worst_star: Option<&SteinerOutcome> = None;
    for o in &outcomes {
        for (p, lhs, rhs) in &o.means {
            let gap = lhs.value - rhs.value;
            let b = budget(cfg, lhs, rhs);
            if gap > b {
                mean_violations += 1;
            }
            if worst_mean.as_ref().is_none_or(|w| gap - b > w.gap - w.err) {
                worst_mean = Some(Witness::at(format!("M_p({} * F_{})", o.f, o.trial), o.r, gap, b).p(*p));
            }
            means_table.rows.push(vec![o.f.to_string(), o.trial.to_string(), num(o.r), num(*p), num(lhs.value), num(lhs.err_bound), num(rhs.value), num(rhs.err_bound)]);
        }
        tally.add(&format!("(Re {} * F_{})* <= (Re {})*", o.f, o.trial, o.f), &o.star);
        if worst_star.is_none_or(|w| o.star.witness.gap - o.star.err_budget > w.star.witness.gap - w.star.err_budget) {
            worst_star = Some(o);
        }
        if o.hull_excess > o.hull_tol {
            hull_violations += 1;
        }
        if worst_hull.as_ref().is_none_or(|w| o.hull_excess - o.hull_tol > w.gap - w.err) {
            worst_hull = Some(Witness::at(format!("range of {} * F_{} in hull", o.f, o.trial), o.r, o.hull_excess, o.hull_tol));
        }
    }
    checks.push(Check::new("means", mean_violations == 0, format!("{mean_violations} violations in {} comparisons", means_table.rows.len())));
    checks.push(Check::new("real_part_star", tally.fails == 0 && tally.undecided == 0, format!("{} failures, {} undecided", tally.fails, tally.undecided)));
    checks.push(Check::new("hull_containment", hull_violations == 0, format!("{hull_violations} samples outside the hull")));

    // f = z: the mean shrinks by exactly |first moment|
    let z = Catalog::Z.series(1);
    let mut z_err: f64 = 0.0;
    for mu in measures.iter().take(10) {
        let scale = mu.moment(1).norm();
        for &r in &cfg.r_grid {
            let conv = convolve_via_measure(&z, mu, r, cfg.fft_size)?;
            for p in STEINER_EXPONENTS {
                let v = integral_mean(&conv, exponent(p), None)?.value;
                z_err = z_err.max((v - scale * r).abs());
            }
        }
    }
    checks.push(Check::new("identity_function_scaling", z_err <= 1e-12, format!("max |M_p(r, m_1 z) - |m_1| r| = {z_err:e}")));

    let mut star_table = Table::new("steiner_star", &["f", "trial", "r", "theta", "u_star", "v_star", "gap", "err_bound"]);
    if let Some(o) = worst_star {
        star_table.push_star(&[o.f.to_string(), o.trial.to_string()], &o.profiles.0, &o.profiles.1);
    }
    let status = confirm_status(mean_violations + tally.fails + hull_violations, tally.undecided, &checks);
    let witnesses = [worst_mean, tally.worst, worst_hull].into_iter().flatten().collect();
    Ok(Verdict::assemble(Scenario::Steiner, cfg, status, checks, witnesses, vec![means_table, star_table]))
}

fn steiner_trial(
    cfg: &RunConfig,
    f: Catalog,
    fr: &TruncatedSeries,
    mu: &UnitCircleMeasure,
    trial: usize,
    case: &SteinerCase,
) -> Result<SteinerOutcome> {
    let conv = convolve_via_measure(fr, mu, case.r, case.plain.len())?;
    let means = STEINER_EXPONENTS
        .iter()
        .zip(&case.plain_means)
        .map(|(&p, rhs)| Ok((p, integral_mean(&conv, exponent(p), None)?, *rhs)))
        .collect::<Result<_>>()?;
    let profile = star_profile(&conv.real_part(), cfg.theta_points)?;
    let star = star_leq_with_policy(&profile, &case.plain_profile)?;
    let hull_excess = conv
        .values()
        .iter()
        .map(|&q| {
            let d = case.hull.distance_upper(q);
            if d > case.hull_tol {
                case.hull.distance_outside(q)
            } else {
                d
            }
        })
        .fold(0.0, f64::max);
    Ok(SteinerOutcome {
        f,
        trial,
        r: case.r,
        means,
        star,
        profiles: (profile, case.plain_profile.clone()),
        hull_excess,
        hull_tol: case.hull_tol + conv.err_bound(),
    })
}

/// Runs one scenario; `driving` overrides the bundled driving for `q1`.
pub fn run_scenario(scenario: Scenario, cfg: &RunConfig, driving: Option<&Driving>) -> Result<Verdict> {
    match scenario {
        Scenario::ThmA => run_thm_1_1(cfg),
        Scenario::Baernstein => run_baernstein(cfg),
        Scenario::Q1 => match driving {
            Some(d) => run_question1(cfg, d),
            None => run_question1(cfg, &known_good_driving()),
        },
        Scenario::Q2 => run_question2(cfg),
        Scenario::Steiner => run_steiner(cfg),
    }
}

pub fn run_all(cfg: &RunConfig, driving: Option<&Driving>) -> Result<Vec<Verdict>> {
    Scenario::ALL.iter().map(|&s| run_scenario(s, cfg, driving)).collect()
}

/// Writes every table, one `<scenario>.json` per verdict and `verdicts.json`
/// into `dir`; returns the paths written.
pub fn write_artifacts(verdicts: &[Verdict], dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for v in verdicts {
        for t in &v.data {
            let path = dir.join(t.file_name());
            fs::write(&path, t.to_csv())?;
            written.push(path);
        }
        let path = dir.join(format!("{}.json", v.scenario));
        fs::write(&path, serde_json::to_string_pretty(v)? + "\n")?;
        written.push(path);
    }
    let path = dir.join("verdicts.json");
    fs::write(&path, serde_json::to_string_pretty(verdicts)? + "\n")?;
    written.push(path);
    Ok(written)
}
