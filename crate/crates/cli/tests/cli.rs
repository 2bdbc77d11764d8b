use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_ioncluster"));
    c.env_remove("IONCLUSTER_OUT");
    c
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn read_json(path: PathBuf) -> Value {
    serde_json::from_slice(&fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))).unwrap()
}

fn crystal_config(dir: &Path, name: &str, n: usize, b: f64) -> PathBuf {
    let path = dir.join(name);
    let cfg = serde_json::json!({
        "potential": { "variant": "global_harmonic", "nu1_hz": 200e3 },
        "species": { "name": "171Yb+", "mass_u": 170.9363258 },
        "n_ions": n,
        "b_t_per_m": b
    });
    fs::write(&path, serde_json::to_vec_pretty(&cfg).unwrap()).unwrap();
    path
}

fn matrix(v: &Value) -> Vec<Vec<f64>> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|r| r.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect())
        .collect()
}

#[test]
fn eight_ion_couplings_are_written_with_report() {
    let dir = TempDir::new().unwrap();
    let cfg = crystal_config(dir.path(), "chain.json", 8, 100.0);
    let out = dir.path().join("out");
    let o = run(&["couplings", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let report = read_json(out.join("run_report.json"));
    let outputs: Vec<&str> = report["outputs"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    for f in &outputs {
        assert!(out.join(f).exists(), "{f} listed but missing");
    }
    assert!(outputs.contains(&"couplings.csv") && outputs.contains(&"modes.json"));
    assert_eq!(report["inputs"][0]["sha256"].as_str().unwrap().len(), 64);

    let j = matrix(&read_json(out.join("couplings.json"))["j_rad_per_s"]);
    let mut best = (0.0, 0, 0);
    for a in 0..8 {
        for b in a + 1..8 {
            if j[a][b] > best.0 {
                best = (j[a][b], a, b);
            }
        }
    }
    // Largest entry is a nearest-neighbour pair, at the ends of the chain.
    assert_eq!(best.2, best.1 + 1);
    assert!(best.1 == 0 || best.1 == 6);
    for a in 0..7 {
        assert!((j[a][a + 1] - j[6 - a][7 - a]).abs() < 1e-9 * best.0);
    }
    let csv = fs::read_to_string(out.join("couplings.csv")).unwrap();
    assert_eq!(csv.lines().count(), 9);
    let modes = read_json(out.join("modes.json"));
    assert!(modes["units"].as_str().unwrap().contains("Hz"));
    let f = modes["frequencies_hz"][0].as_f64().unwrap();
    assert!((f / 200e3 - 1.0).abs() < 1e-9);
}

#[test]
fn zero_gradient_gives_zero_matrix() {
    let dir = TempDir::new().unwrap();
    let cfg = crystal_config(dir.path(), "zero.json", 3, 0.0);
    let out = dir.path().join("out");
    let o = run(&["couplings", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(code(&o), 0);
    let j = matrix(&read_json(out.join("couplings.json"))["j_rad_per_s"]);
    assert!(j.iter().flatten().all(|v| *v == 0.0));
}

#[test]
fn malformed_json_is_an_input_error_without_outputs() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, "{\n  \"potential\": { \"variant\": \"global_harmonic\", \"nu1_hz\": 2e5 },\n  \"n_ions\": }\n").unwrap();
    let out = dir.path().join("out");
    let o = run(&["couplings", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(code(&o), 2);
    assert!(!out.exists());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.json:3:"), "{err}");
}

#[test]
fn unknown_field_names_its_path() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("typo.json");
    fs::write(
        &cfg,
        r#"{"potential": {"variant": "global_harmonic", "nu_hz": 2e5}, "species": {"name": "x", "mass_u": 171}, "n_ions": 2}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = run(&["modes", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("potential"));
    assert!(!out.exists());
}

#[test]
fn missing_config_and_bad_target_are_usage_errors() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    assert_eq!(code(&run(&["couplings", "--config", "/nonexistent.json"], &out)), 2);
    assert_eq!(code(&run(&["reproduce", "nope"], &out)), 2);
    assert_eq!(code(&run(&["schedule", "build", "--rows", "3"], &out)), 2);
    assert!(!out.exists());
}

#[test]
fn schedule_build_and_run() {
    let dir = TempDir::new().unwrap();
    let built = dir.path().join("built");
    let o = run(&["schedule", "build", "--rows", "4"], &built);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let file = built.join("schedule.json");
    let sched = read_json(file.clone());
    assert_eq!(sched["stages"].as_array().unwrap().len(), 5);
    assert_eq!(sched["steps"][0]["kind"], "assign_wells");
    let library = built.join("library.json");
    assert!(read_json(library.clone())["catalogs"].is_object());

    let ideal = dir.path().join("ideal");
    let args = ["schedule", "run", "--config", file.to_str().unwrap(), "--library", library.to_str().unwrap()];
    assert_eq!(code(&run(&[&args[..], &["--mode", "ideal"]].concat(), &ideal)), 0);
    let rep = read_json(ideal.join("execution.json"));
    assert!(rep["fidelity"].as_f64().unwrap() >= 1.0 - 1e-9);
    assert_eq!(rep["stabilizers"].as_array().unwrap().len(), 8);

    let residual = dir.path().join("residual");
    assert_eq!(
        code(&run(&["schedule", "run", "--config", file.to_str().unwrap(), "--mode", "residual"], &residual)),
        0
    );
    assert!(read_json(residual.join("execution.json"))["fidelity"].as_f64().unwrap() >= 0.99);
}

#[test]
fn wells_of_individual_potential() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("wells.json");
    fs::write(
        &cfg,
        r#"{"potential": {"variant": "individual_wells", "wells": [
              {"center_m": -1.5e-4, "omega_hz": 2e5}, {"center_m": 1.5e-4, "omega_hz": 3e5}]},
            "species": {"name": "171Yb+", "mass_u": 170.9363258}}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = run(&["wells", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let w = read_json(out.join("wells.json"));
    let wells = w["wells"].as_array().unwrap();
    assert_eq!(wells.len(), 2);
    assert!((wells[1]["frequency_hz"].as_f64().unwrap() / 3e5 - 1.0).abs() < 1e-3);
    assert!(fs::read_to_string(out.join("potential.csv")).unwrap().starts_with("z_m,"));
}

#[test]
fn reproduce_targets_pass() {
    for target in ["chain", "well-selection", "triangle", "four-qubit", "transport"] {
        let dir = TempDir::new().unwrap();
        let o = run(&["reproduce", target], dir.path());
        let stdout = String::from_utf8_lossy(&o.stdout);
        assert_eq!(code(&o), 0, "{target}: {stdout}");
        assert!(!stdout.contains("FAIL"));
        let report = read_json(dir.path().join("run_report.json"));
        assert!(report["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
    }
}

fn search_config(dir: &Path) -> PathBuf {
    let path = dir.join("problem.json");
    let cfg = serde_json::json!({
        "edges": [[0, 1], [0, 2], [1, 2]],
        "layout": [-1.0, 0.0, 1.0],
        "well_bounds_hz": [[221.6e3, 332.4e3], [80e3, 120e3], [221.6e3, 332.4e3]],
        "global_bounds_hz": [80e3, 120e3],
        "spacing_bounds_m": [16e-6, 24e-6],
        "b_t_per_m": 100.0,
        "species": { "name": "171Yb+", "mass_u": 170.9363258 },
        "symmetry_groups": [[0, 2]]
    });
    fs::write(&path, serde_json::to_vec_pretty(&cfg).unwrap()).unwrap();
    path
}

fn strip_volatile(mut v: Value) -> Value {
    let o = v.as_object_mut().unwrap();
    o.remove("wall_clock_s");
    o.remove("command");
    v
}

#[test]
fn outputs_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let chain = crystal_config(dir.path(), "chain.json", 6, 100.0);
    let problem = search_config(dir.path());
    let cases: [(Vec<&str>, &[&str]); 3] = [
        (vec!["couplings", "--config", chain.to_str().unwrap()], &["couplings.csv", "couplings.json", "modes.json"]),
        (
            vec!["periodic", "search", "--config", problem.to_str().unwrap(), "--budget", "60", "--seed", "7"],
            &["search.json", "search_history.csv"],
        ),
        (vec!["schedule", "run", "--config", "SCHEDULE", "--mode", "residual", "--seed", "3"], &["execution.json"]),
    ];
    let built = dir.path().join("built");
    assert_eq!(code(&run(&["schedule", "build", "--rows", "4"], &built)), 0);
    let schedule = built.join("schedule.json");
    for (i, (args, files)) in cases.iter().enumerate() {
        let args: Vec<&str> =
            args.iter().map(|a| if *a == "SCHEDULE" { schedule.to_str().unwrap() } else { *a }).collect();
        let a = dir.path().join(format!("a{i}"));
        let b = dir.path().join(format!("b{i}"));
        assert_eq!(code(&run(&args, &a)), 0);
        assert_eq!(code(&run(&args, &b)), 0);
        for f in *files {
            assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
        }
        assert_eq!(
            strip_volatile(read_json(a.join("run_report.json"))),
            strip_volatile(read_json(b.join("run_report.json")))
        );
    }
}

#[test]
fn output_directory_from_environment() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("env-out");
    let o = bin().args(["reproduce", "triangle"]).env("IONCLUSTER_OUT", &out).output().unwrap();
    assert_eq!(code(&o), 0);
    assert!(out.join("run_report.json").exists());
}
