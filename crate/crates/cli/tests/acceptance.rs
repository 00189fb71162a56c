//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use starmeans::circle::{integral_mean, sample_circle, Exponent, RingSamples};
use starmeans::loewner::{
    fekete_szego_search, loewner_coefficients, default_step, univalence_sanity, Driving, SearchConfig, A5_THRESHOLD,
};
use starmeans::measures::UnitCircleMeasure;
use starmeans::series::{hadamard, Catalog, GrowthClass, TruncatedSeries};
use starmeans::star::{reflect_negate, star_leq_with_policy, star_profile};
use starmeans::verify::{run_question1, run_steiner, run_thm_1_1, Status, Verdict};
use starmeans::RunConfig;

const EXACT_ORDER: usize = 256;
const MOMENT_TOL: f64 = 1e-10;
const MOMENT_COUNT: usize = 64;
const STAR_ORACLE_TOL: f64 = 1e-6;
const STAR_SAMPLES: usize = 4096;
const STAR_POINTS: usize = 512;
const SUBSET_TRIALS: usize = 1000;
const SUBSET_TOL: f64 = 1e-12;
const REFLECTION_RADII: [f64; 2] = [0.5, 0.9];
const KOEBE_TOL: f64 = 1e-6;
const KOEBE_ORDER: usize = 8;
const UNIVALENCE_RADIUS: f64 = 0.7;
const UNIVALENCE_SAMPLES: usize = 2048;
const HINF_POLE_RADIUS: f64 = 0.99;
const HINF_POLE_FLOOR: f64 = 50.0;
const HINF_BOUND: f64 = 4.0 + 1e-9;

const LIMITS: [Duration; 9] = [
    Duration::from_secs(1),
    Duration::from_secs(1),
    Duration::from_secs(60),
    Duration::from_secs(30),
    Duration::from_secs(10),
    Duration::from_secs(30),
    Duration::from_secs(300),
    Duration::from_secs(600),
    Duration::from_secs(120),
];

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn lib<T>(r: starmeans::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn check_passed(v: &Verdict, name: &str) -> Result<(), String> {
    match v.checks.iter().find(|c| c.name == name) {
        Some(c) if c.passed => Ok(()),
        Some(c) => Err(format!("check {name} failed: {}", c.detail)),
        None => Err(format!("check {name} missing")),
    }
}

fn check_detail<'a>(v: &'a Verdict, name: &str) -> &'a str {
    v.checks.iter().find(|c| c.name == name).map_or("", |c| c.detail.as_str())
}

fn exact_algebra() -> Outcome {
    let id = Catalog::Identity.series(EXACT_ORDER);
    let ii = hadamard(&id, &id);
    ensure(ii.coeffs() == id.coeffs(), "I * I differs from I")?;
    let f = Catalog::InvSq.series(EXACT_ORDER);
    let fg = hadamard(&f, &Catalog::OneMinusHalfZ.series(EXACT_ORDER));
    let expected: Vec<Complex64> =
        (0..=fg.order()).map(|n| Complex64::new([1.0, -1.0].get(n).copied().unwrap_or(0.0), 0.0)).collect();
    ensure(fg.coeffs() == expected.as_slice(), format!("(1/(1-z)^2) * (1 - z/2) = {:?}", &fg.coeffs()[..3]))?;
    Ok("I*I = I and (1/(1-z)^2)*(1-z/2) = 1-z coefficientwise".into())
}

fn measure_identity() -> Outcome {
    let mu = UnitCircleMeasure::one_minus_cos(1024);
    let worst = (0..=MOMENT_COUNT)
        .map(|n| {
            let target = [1.0, -0.5].get(n).copied().unwrap_or(0.0);
            (mu.moment(n) - Complex64::new(target, 0.0)).norm()
        })
        .fold(0.0, f64::max);
    ensure(worst <= MOMENT_TOL, format!("moment error {worst:e}"))?;
    Ok(format!("max moment error {worst:e} over n <= {MOMENT_COUNT}"))
}

fn theorem_suite() -> Outcome {
    let v = lib(run_thm_1_1(&RunConfig::default()))?;
    check_passed(&v, "no_violations")?;
    ensure(v.status == Status::Reproduced, format!("status {}", v.status))?;
    Ok(check_detail(&v, "no_violations").to_string())
}

fn star_oracles() -> Outcome {
    let c = 0.75;
    let flat = RingSamples::from_fn(0.5, STAR_SAMPLES, |_| c).map_err(|e| e.to_string())?;
    let p = lib(star_profile(&flat, STAR_POINTS))?;
    let flat_err = p.thetas.iter().zip(&p.values).map(|(t, v)| (v - 2.0 * t * c).abs()).fold(0.0, f64::max);
    ensure(flat_err <= STAR_ORACLE_TOL, format!("constant profile off by {flat_err:e}"))?;

    let cos = RingSamples::from_fn(0.5, STAR_SAMPLES, f64::cos).map_err(|e| e.to_string())?;
    let p = lib(star_profile(&cos, STAR_POINTS))?;
    let cos_err = p.thetas.iter().zip(&p.values).map(|(t, v)| (v - 2.0 * t.sin()).abs()).fold(0.0, f64::max);
    ensure(cos_err <= STAR_ORACLE_TOL, format!("cosine profile off by {cos_err:e}"))?;

    let r = 0.9;
    let k = Catalog::Koebe.series(EXACT_ORDER);
    let u = lib(lib(sample_circle(&k, r, STAR_SAMPLES))?.log_modulus())?;
    let p = lib(star_profile(&u, STAR_POINTS))?;
    let h = 2.0 * PI / STAR_SAMPLES as f64;
    let cells_per_step = STAR_SAMPLES / STAR_POINTS;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..SUBSET_TRIALS {
        let step = rng.gen_range(1..=STAR_POINTS);
        let subset = sample(&mut rng, STAR_SAMPLES, step * cells_per_step);
        let integral: f64 = subset.iter().map(|j| u.values()[j]).sum::<f64>() * h;
        worst = worst.max(integral - p.values[step]);
    }
    ensure(worst <= SUBSET_TOL, format!("subset integral exceeds profile by {worst:e}"))?;
    Ok(format!("constant {flat_err:e}, cosine {cos_err:e}, subsets stay {:e} below", -worst))
}

fn reflection_identity() -> Outcome {
    let f = Catalog::InvSq;
    let mut worst: f64 = 0.0;
    for r in REFLECTION_RADII {
        let cfg = RunConfig::default();
        let s = cfg.series_at(|n| f.series(n), r);
        let u = lib(lib(sample_circle(&s, r, cfg.samples_for(s.order())))?.log_modulus())?;
        let direct = lib(star_profile(&u.negated(), cfg.theta_points))?;
        let reflected = reflect_negate(&lib(star_profile(&u, cfg.theta_points))?);
        let tol = 2.0 * direct.err_bound.max(reflected.err_bound);
        let diff = direct.values.iter().zip(&reflected.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        ensure(diff <= tol, format!("r = {r}: difference {diff:e} above {tol:e}"))?;
        worst = worst.max(diff);
    }
    Ok(format!("max difference {worst:e}"))
}

fn question_two() -> Outcome {
    let cfg = RunConfig::default();
    let mut failing = Vec::new();
    for &r in &cfg.r_grid {
        let a = cfg.series_at(|n| Catalog::OneMinusZ.series(n), r);
        let b = cfg.series_at(|n| Catalog::InvSq.series(n), r);
        let m = cfg.samples_for(a.order().max(b.order()));
        let u = lib(star_profile(&lib(lib(sample_circle(&a, r, m))?.log_modulus())?, cfg.theta_points))?;
        let v = lib(star_profile(&lib(lib(sample_circle(&b, r, m))?.log_modulus())?, cfg.theta_points))?;
        let cmp = lib(star_leq_with_policy(&u, &v))?;
        if cmp.fails() && cmp.witness.gap > 10.0 * cmp.err_budget {
            failing.push((r, cmp.witness.gap));
        }
    }
    ensure(!failing.is_empty(), "no failure witness on the grid")?;

    let pole = cfg.series_at(|n| Catalog::Identity.series(n), HINF_POLE_RADIUS);
    let big = lib(integral_mean(
        &lib(sample_circle(&pole, HINF_POLE_RADIUS, cfg.samples_for(pole.order())))?,
        Exponent::Infinity,
        None,
    ))?
    .value;
    ensure(big > HINF_POLE_FLOOR, format!("M_inf(0.99, 1/(1-z)) = {big}"))?;
    let sq = lib(TruncatedSeries::from_real(&[1.0, -2.0, 1.0], GrowthClass::Polynomial { degree: 0.0 }))?;
    let mut sup: f64 = 0.0;
    for &r in &cfg.r_grid {
        sup = sup.max(lib(integral_mean(&lib(sample_circle(&sq, r, cfg.fft_size))?, Exponent::Infinity, None))?.value);
    }
    ensure(sup <= HINF_BOUND, format!("sup M_inf(r, (1-z)^2) = {sup}"))?;
    let (r, gap) = failing[failing.len() - 1];
    Ok(format!("star failure at {} radii (gap {gap:.4} at r = {r}); M_inf {big:.2} vs {sup:.4}", failing.len()))
}

fn loewner_gate(found: &mut Option<Driving>) -> Outcome {
    let koebe = lib(loewner_coefficients(&Driving::constant(0.0), KOEBE_ORDER, default_step(KOEBE_ORDER)))?;
    let koebe_err = (1..=KOEBE_ORDER).map(|n| (koebe.coeff(n).norm() - n as f64).abs()).fold(0.0, f64::max);
    ensure(koebe_err <= KOEBE_TOL, format!("Koebe moduli off by {koebe_err:e}"))?;
    let result = lib(fekete_szego_search(&SearchConfig::default()))?;
    let a5 = result.a5.norm();
    ensure(a5 >= A5_THRESHOLD, format!("|a5| = {a5}"))?;
    let report = lib(univalence_sanity(&result.big_h, UNIVALENCE_RADIUS, UNIVALENCE_SAMPLES))?;
    ensure(report.pass, format!("univalence screen failed: {report:?}"))?;
    *found = Some(result.driving);
    Ok(format!("Koebe error {koebe_err:e}; |a5| = {a5:.6}; univalent image at r = {UNIVALENCE_RADIUS}"))
}

fn question_one(driving: Option<&Driving>) -> Outcome {
    let driving = driving.ok_or("no driving from the Loewner gate")?;
    let v = lib(run_question1(&RunConfig::default(), driving))?;
    for name in ["h1_below_identity", "failure_found", "n_above_one", "half_mean_escape"] {
        check_passed(&v, name)?;
    }
    ensure(v.status == Status::Violated, format!("status {}", v.status))?;
    let n = v.witnesses.iter().find_map(|w| w.n).ok_or("no N reported")?;
    let star = v.witnesses.iter().find(|w| w.n.is_some()).ok_or("no star witness")?;
    ensure(star.gap > 10.0 * star.err, format!("star gap {} not beyond margin", star.gap))?;
    Ok(format!("N = {n}; {}", check_detail(&v, "half_mean_escape")))
}

fn steiner_suite() -> Outcome {
    let v = lib(run_steiner(&RunConfig::default()))?;
    for name in ["means", "real_part_star"] {
        check_passed(&v, name)?;
    }
    ensure(v.status == Status::Reproduced, format!("status {}", v.status))?;
    Ok(format!("{}; star {}", check_detail(&v, "means"), check_detail(&v, "real_part_star")))
}

fn determinism() -> Outcome {
    let base = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance_determinism");
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let dir = base.join(run);
        let _ = std::fs::remove_dir_all(&dir);
        let status = Command::new(env!("CARGO_BIN_EXE_starmeans"))
            .args(["verify", "all", "--seed", "0", "--out"])
            .arg(&dir)
            .stdout(Stdio::null())
            .status()
            .map_err(|e| e.to_string())?;
        ensure(status.success(), format!("run {run} exited with {status}"))?;
        outputs.push(std::fs::read(dir.join("verdicts.json")).map_err(|e| e.to_string())?);
    }
    ensure(outputs[0] == outputs[1], "verdicts.json differs between runs")?;
    Ok(format!("verdicts.json identical ({} bytes)", outputs[0].len()))
}

fn main() {
    let mut found = None;
    let mut all_passed = true;
    for id in 1..=10 {
        let start = Instant::now();
        let outcome = match id {
            1 => exact_algebra(),
            2 => measure_identity(),
            3 => theorem_suite(),
            4 => star_oracles(),
            5 => reflection_identity(),
            6 => question_two(),
            7 => loewner_gate(&mut found),
            8 => question_one(found.as_ref()),
            9 => steiner_suite(),
            _ => determinism(),
        };
        let elapsed = start.elapsed();
        let outcome = match (outcome, LIMITS.get(id - 1)) {
            (Ok(_), Some(limit)) if elapsed > *limit => Err(format!("took {elapsed:.1?}, limit {limit:?}")),
            (o, _) => o,
        };
        let (tag, msg) = match &outcome {
            Ok(m) => ("PASS", m),
            Err(m) => ("FAIL", m),
        };
        all_passed &= outcome.is_ok();
        println!("criterion {id:>2}: {tag} [{elapsed:.2?}] {msg}");
    }
    if !all_passed {
        std::process::exit(1);
    }
}
