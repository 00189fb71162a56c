use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use serde::Serialize;

use starmeans::circle::{integral_mean, sample_circle, Exponent};
use starmeans::loewner::{certified_coefficients, fekete_szego_search, known_good_driving, Driving, SearchConfig, MAX_ORDER};
use starmeans::measures::{cauchy_transform, UnitCircleMeasure};
use starmeans::series::{hadamard, Catalog, TruncatedSeries};
use starmeans::star::{reflect_negate, star_profile};
use starmeans::verify::{run_all, run_scenario, write_artifacts, Scenario};
use starmeans::{Error, RunConfig};

/// Environment variable overriding the output directory.
const OUT_ENV: &str = "STARMEANS_OUT";

#[derive(Parser)]
#[command(name = "starmeans", version, about = "Integral means, star functions and Hadamard products on the unit disc")]
struct Cli {
    /// JSON run configuration; missing fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config and $STARMEANS_OUT).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integral mean M_p(r, f) of a catalog function.
    Means {
        function: String,
        /// Exponent; `inf` for the maximum modulus.
        #[arg(long)]
        p: String,
        #[arg(long)]
        r: f64,
    },
    /// Star function of log|f| on each radius of the grid; writes a CSV.
    Star {
        function: String,
        /// Profile of -log|f| instead.
        #[arg(long)]
        neg: bool,
        /// Single radius instead of the configured grid.
        #[arg(long)]
        r: Option<f64>,
    },
    /// Hadamard product of a catalog function with a catalog function or a
    /// measure file's Cauchy transform.
    Convolve {
        function: String,
        /// Catalog name or path to a measure JSON file.
        other: String,
        /// Number of coefficients to print.
        #[arg(long, default_value_t = 8)]
        terms: usize,
    },
    /// Unit-circle measure utilities.
    Measure {
        #[command(subcommand)]
        action: MeasureAction,
    },
    /// Loewner-chain coefficients and the odd-function search.
    Loewner {
        #[command(subcommand)]
        action: LoewnerAction,
    },
    /// Run verification scenarios and write verdicts and tables.
    Verify {
        /// thmA, baernstein, q1, q2, steiner or all.
        scenario: String,
        #[arg(long)]
        seed: Option<u64>,
        /// Driving JSON for q1 instead of the bundled one.
        #[arg(long)]
        driving: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum MeasureAction {
    /// Print the moments of a measure JSON file.
    Moments {
        file: PathBuf,
        #[arg(long, default_value_t = 8)]
        count: usize,
    },
}

#[derive(Subcommand)]
enum LoewnerAction {
    /// Search for a driving with |a5| above the threshold; writes the result.
    Search {
        #[arg(long, default_value_t = 3)]
        segments: usize,
        #[arg(long, default_value_t = 2000)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print the coefficients of the chain for a driving as JSON.
    Coeffs {
        /// Driving JSON; defaults to the bundled driving.
        #[arg(long)]
        driving: Option<PathBuf>,
        #[arg(long, default_value_t = MAX_ORDER)]
        order: usize,
    },
}

enum Failure {
    /// Bad input: exit code 2.
    Usage(String),
    /// A scenario or search ended away from its expected status: exit code 1.
    Mismatch,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Mismatch) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Ok(dir) = std::env::var(OUT_ENV) {
        cfg.output_dir = PathBuf::from(dir);
    }
    if let Some(dir) = &cli.out {
        cfg.output_dir = dir.clone();
    }
    Ok(cfg)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn write_output(cfg: &RunConfig, name: &str, contents: &str) -> Result<PathBuf, Failure> {
    fs::create_dir_all(&cfg.output_dir).map_err(Error::from)?;
    let path = cfg.output_dir.join(name);
    fs::write(&path, contents).map_err(Error::from)?;
    Ok(path)
}

fn format_real(x: f64) -> String {
    if x != 0.0 && x.abs() < 1e-4 {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

fn format_coeff(c: Complex64) -> String {
    if c.im == 0.0 {
        format_real(c.re)
    } else {
        let sign = if c.im.is_sign_negative() { "-" } else { "+" };
        format!("{}{sign}{}i", format_real(c.re), format_real(c.im.abs()))
    }
}

fn catalog_series(cfg: &RunConfig, name: &str, r: f64) -> Result<TruncatedSeries, Failure> {
    let c: Catalog = name.parse()?;
    Ok(cfg.series_at(|n| c.series(n), r))
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = load_config(&cli)?;
    match cli.command {
        Command::Means { function, p, r } => {
            let p: Exponent = p.parse()?;
            if !(r > 0.0 && r < 1.0) {
                return Err(Error::Radius(r).into());
            }
            let f = catalog_series(&cfg, &function, r)?;
            let s = sample_circle(&f, r, cfg.samples_for(f.order()))?;
            let mean = integral_mean(&s, p, None)?;
            println!("M_{p}({r}, {function}) = {} +- {:e}", mean.value, mean.err_bound);
        }
        Command::Star { function, neg, r } => {
            let radii = match r {
                Some(r) => vec![r],
                None => cfg.r_grid.clone(),
            };
            let mut csv = String::from("r,theta,u_star,err_bound\n");
            for r in radii {
                let f = catalog_series(&cfg, &function, r)?;
                let u = sample_circle(&f, r, cfg.samples_for(f.order()))?.log_modulus()?;
                let mut profile = star_profile(&u, cfg.theta_points)?;
                if neg {
                    profile = reflect_negate(&profile);
                }
                for (t, v) in profile.thetas.iter().zip(&profile.values) {
                    csv.push_str(&format!("{r},{t},{v},{}\n", profile.err_bound));
                }
                println!("r = {r}: star at pi = {} +- {:e}", format_real(profile.values[profile.values.len() - 1]), profile.err_bound);
            }
            let sign = if neg { "neg_" } else { "" };
            let path = write_output(&cfg, &format!("star_{sign}{function}.csv"), &csv)?;
            println!("wrote {}", path.display());
        }
        Command::Convolve { function, other, terms } => {
            let order = cfg.n_coeffs.max(terms);
            let f: Catalog = function.parse()?;
            let g = match other.parse::<Catalog>() {
                Ok(c) => c.series(order),
                Err(_) if Path::new(&other).exists() => {
                    let mu: UnitCircleMeasure = read_json(Path::new(&other))?;
                    cauchy_transform(&mu, order)
                }
                Err(e) => return Err(e.into()),
            };
            let product = hadamard(&f.series(order), &g);
            let shown: Vec<String> = (0..terms).map(|n| format_coeff(product.coeff(n))).collect();
            println!("({})", shown.join(", "));
        }
        Command::Measure { action: MeasureAction::Moments { file, count } } => {
            let mu: UnitCircleMeasure = read_json(&file)?;
            for n in 0..count {
                println!("{n} {}", format_coeff(mu.moment(n)));
            }
        }
        Command::Loewner { action: LoewnerAction::Search { segments, budget, seed } } => {
            let result = fekete_szego_search(&SearchConfig { m_segments: segments, budget, seed, ..SearchConfig::default() })?;
            #[derive(Serialize)]
            struct Report<'a> {
                driving: &'a Driving,
                a5: [f64; 2],
                a5_modulus: f64,
                success: bool,
                evaluations: usize,
                best_history: &'a [f64],
            }
            let report = Report {
                driving: &result.driving,
                a5: [result.a5.re, result.a5.im],
                a5_modulus: result.a5.norm(),
                success: result.success,
                evaluations: result.evaluations,
                best_history: &result.best_history,
            };
            let json = serde_json::to_string_pretty(&report).map_err(Error::from)? + "\n";
            let path = write_output(&cfg, "loewner_search.json", &json)?;
            println!("|a5| = {} after {} evaluations; wrote {}", result.a5.norm(), result.evaluations, path.display());
            if !result.success {
                return Err(Failure::Mismatch);
            }
        }
        Command::Loewner { action: LoewnerAction::Coeffs { driving, order } } => {
            let d = match driving {
                Some(path) => read_json(&path)?,
                None => known_good_driving(),
            };
            let series = certified_coefficients(&d, order)?;
            println!("{}", serde_json::to_string(&series).map_err(Error::from)?);
        }
        Command::Verify { scenario, seed, driving } => {
            let mut cfg = cfg;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            let d: Option<Driving> = driving.map(|p| read_json(&p)).transpose()?;
            let verdicts = if scenario == "all" {
                run_all(&cfg, d.as_ref())?
            } else {
                vec![run_scenario(scenario.parse::<Scenario>()?, &cfg, d.as_ref())?]
            };
            write_artifacts(&verdicts, &cfg.output_dir)?;
            for v in &verdicts {
                println!("{}", v.summary());
            }
            if !verdicts.iter().all(|v| v.as_expected()) {
                return Err(Failure::Mismatch);
            }
        }
    }
    Ok(())
}
