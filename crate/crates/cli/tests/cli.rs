use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use hjcrit_cli::csv::parse_csv;
use hjcrit_core::reduced::exact_solution;
use hjcrit_core::CriticalData;

fn hjcrit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hjcrit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn column(text: &str, name: &str) -> Vec<f64> {
    let table = parse_csv(text).unwrap();
    let idx = table.column_index(name).unwrap();
    table.rows.iter().filter_map(|r| r[idx]).collect()
}

const SIMILARITY: &str = r#"
experiment = "similarity_run"
use_q_star = true

[solver]
tau_end = 15.0

[output]
csv_path = "run.csv"
svg_path = "run.svg"
"#;

#[test]
fn similarity_run_is_deterministic_and_trends_to_m_star() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", SIMILARITY);
    let first = hjcrit(&["run", &cfg]);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let csv = fs::read_to_string(dir.path().join("run.csv")).unwrap();
    let svg = fs::read_to_string(dir.path().join("run.svg")).unwrap();
    let manifest = fs::read_to_string(dir.path().join("run.manifest")).unwrap();

    assert!(csv.starts_with(
        "tau,t,mass,l1,l2,linf,h1m,dissipation,omega_ratio,manifold_remainder,rescaled_mass\n"
    ));
    let rescaled = column(&csv, "rescaled_mass");
    let m_star = CriticalData::new(1).unwrap().m_star;
    let tail = &rescaled[rescaled.len() / 2..];
    assert!(tail.windows(2).all(|w| w[1] > w[0]));
    assert!(*tail.last().unwrap() < m_star);
    assert!(svg.contains(r#"width="960" height="600""#));
    assert_eq!(svg.matches("<polyline").count(), 1);
    assert!(manifest.contains("config.q: 1.5\n"));
    assert!(manifest.contains("constants.m_star: "));

    fs::rename(dir.path().join("run.csv"), dir.path().join("first.csv")).unwrap();
    let second = hjcrit(&["run", &cfg]);
    assert!(second.status.success());
    assert_eq!(fs::read(dir.path().join("run.csv")).unwrap(), csv.as_bytes());
    assert_eq!(fs::read_to_string(dir.path().join("run.svg")).unwrap(), svg);
}

#[test]
fn reduced_ode_csv_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "r.toml",
        "experiment = \"reduced_ode\"\n[solver]\ntau_end = 50.0\n[output]\ncsv_path = \"r.csv\"\n",
    );
    let out = hjcrit(&["run", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("r.csv")).unwrap();
    let taus = column(&csv, "tau");
    let masses = column(&csv, "mass");
    let c = CriticalData::new(1).unwrap().c_mass;
    for (tau, m) in taus.iter().zip(&masses) {
        let exact = exact_solution(masses[0], c, *tau, 1).unwrap();
        assert!((m - exact).abs() <= 1e-8 * exact, "tau={tau}");
    }
    assert!(column(&csv, "l2").is_empty());
}

#[test]
fn conflicting_exponent_keys_fail_with_both_names() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.toml",
        "experiment = \"similarity_run\"\nq = 1.5\nuse_q_star = true\n[output]\ncsv_path = \"x.csv\"\n",
    );
    let out = hjcrit(&["run", &cfg]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("`q`") && err.contains("`use_q_star`"), "{err}");
    assert!(!dir.path().join("x.csv").exists());
}

#[test]
fn plot_errors_write_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("d.csv");
    fs::write(&csv, "tau,mass\n0,1\n1,0\n2,-1\n").unwrap();
    let csv_arg = csv.to_string_lossy().into_owned();

    let out = hjcrit(&["plot", &csv_arg, "--cols", "mass", "--log"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("data row 2"));
    assert!(!dir.path().join("d.svg").exists());

    let out = hjcrit(&["plot", &csv_arg, "--cols", "l1"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("`l1` not found"));

    let empty = dir.path().join("e.csv");
    fs::write(&empty, "").unwrap();
    let out = hjcrit(&["plot", &empty.to_string_lossy(), "--cols", "mass"]);
    assert!(!out.status.success());
    assert!(!dir.path().join("e.svg").exists());

    let out = hjcrit(&["plot", &csv_arg, "--cols", "mass"]);
    assert!(out.status.success());
    assert!(dir.path().join("d.svg").exists());
}

#[test]
fn fast_verify_passes() {
    let out = Command::new(env!("CARGO_BIN_EXE_hjcrit"))
        .args(["verify", "--fast"])
        .env("HJCRIT_THREADS", "2")
        .output()
        .unwrap();
    let table = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{table}");
    assert!(table.contains("4 of 4 criteria passed"));
}

#[test]
fn bad_thread_cap_is_an_error() {
    let out = Command::new(env!("CARGO_BIN_EXE_hjcrit"))
        .args(["verify", "--fast"])
        .env("HJCRIT_THREADS", "zero")
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("HJCRIT_THREADS"));
}

#[test]
fn shipped_configs_are_valid() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut count = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            hjcrit_cli::parse_config(&path).unwrap_or_else(|e| panic!("{}: {e:#}", path.display()));
            count += 1;
        }
    }
    assert!(count >= 7);
}
