use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn starmeans(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_starmeans"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("STARMEANS_OUT")
        .output()
        .expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn convolve_prints_exact_product() {
    let dir = scratch("convolve");
    let o = starmeans(&["convolve", "inv_sq", "one_minus_half_z"], &dir);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "(1, -1, 0, 0, 0, 0, 0, 0)");
}

#[test]
fn convolve_with_measure_file() {
    let dir = scratch("convolve_measure");
    let measure = dir.join("dirac.json");
    std::fs::write(&measure, r#"{"atoms": [[0.0, 1.0, 0.0]]}"#).unwrap();
    let o = starmeans(&["convolve", "koebe", measure.to_str().unwrap(), "--terms", "4"], &dir);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).trim(), "(0, 1, 2, 3)");
}

#[test]
fn means_of_identity() {
    let dir = scratch("means");
    let o = starmeans(&["means", "I", "--p", "2", "--r", "0.6"], &dir);
    assert!(o.status.success());
    let text = stdout(&o);
    let value: f64 = text.split(" = ").nth(1).unwrap().split_whitespace().next().unwrap().parse().unwrap();
    // M_2(r, 1/(1-z))^2 = 1 / (1 - r^2)
    assert!((value - (1.0f64 / 0.64).sqrt()).abs() < 1e-12, "{text}");
}

#[test]
fn measure_moments() {
    let dir = scratch("moments");
    let measure = dir.join("two.json");
    std::fs::write(
        &measure,
        r#"{"atoms": [[0.0, 0.5, 0.0], [-3.141592653589793, 0.5, 0.0]]}"#,
    )
    .unwrap();
    let o = starmeans(&["measure", "moments", measure.to_str().unwrap(), "--count", "3"], &dir);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let lines: Vec<String> = stdout(&o).lines().map(str::to_owned).collect();
    assert_eq!(lines[0], "0 1");
    assert!(lines[1].starts_with("1 ") && lines[1][2..].parse::<f64>().map_or(true, |x| x.abs() < 1e-15));
    assert!(lines[2].starts_with("2 1"));
}

#[test]
fn bad_input_exits_with_two() {
    let dir = scratch("bad");
    for args in [
        &["means", "nosuch", "--p", "2", "--r", "0.5"][..],
        &["means", "I", "--p", "2", "--r", "1.5"],
        &["verify", "q3"],
    ] {
        let o = starmeans(args, &dir);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn star_writes_only_under_out_dir() {
    let dir = scratch("star");
    let o = starmeans(&["star", "koebe", "--neg", "--r", "0.5"], &dir);
    assert!(o.status.success());
    let files: Vec<_> = std::fs::read_dir(&dir).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(files, vec!["star_neg_koebe.csv"]);
    let csv = std::fs::read_to_string(dir.join("star_neg_koebe.csv")).unwrap();
    assert!(csv.starts_with("r,theta,u_star,err_bound\n"));
    assert_eq!(csv.lines().count(), 1 + 513);
}

#[test]
fn verify_q2_writes_verdict() {
    let dir = scratch("q2");
    let o = starmeans(&["verify", "q2", "--seed", "3"], &dir);
    assert!(o.status.success());
    assert!(stdout(&o).contains("q2: violated (expected violated)"));
    let verdict: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.join("q2.json")).unwrap()).unwrap();
    assert_eq!(verdict["status"], "violated");
    assert_eq!(verdict["seed"], 3);
}

#[test]
fn config_file_is_applied() {
    let dir = scratch("config");
    let cfg = dir.join("cfg.json");
    std::fs::write(&cfg, r#"{"r_grid": [0.5], "theta_points": 64}"#).unwrap();
    let o = starmeans(&["--config", cfg.to_str().unwrap(), "star", "I"], &dir);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.join("star_I.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 65);

    std::fs::write(&cfg, r#"{"fft_size": 100}"#).unwrap();
    let o = starmeans(&["--config", cfg.to_str().unwrap(), "star", "I"], &dir);
    assert_eq!(o.status.code(), Some(2));
}
