use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_fairalloc");

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn data(rel: &str) -> String {
    root().join("data").join(rel).to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("FAIRALLOC_SEED")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn toy() -> Vec<String> {
    vec![
        "--instance".into(),
        data("toy/instance.json"),
        "--gen".into(),
        data("toy/gen.json"),
    ]
}

fn args<'a>(head: &[&'a str], tail: &'a [String]) -> Vec<&'a str> {
    head.iter()
        .copied()
        .chain(tail.iter().map(String::as_str))
        .collect()
}

/// Column name to values, rows in file order.
fn read_csv(path: &Path) -> HashMap<String, Vec<String>> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    let mut cols: HashMap<String, Vec<String>> =
        header.iter().map(|h| (h.clone(), Vec::new())).collect();
    for line in lines {
        for (h, v) in header.iter().zip(line.split(',')) {
            cols.get_mut(h).unwrap().push(v.to_string());
        }
    }
    cols
}

fn floats(cols: &HashMap<String, Vec<String>>, name: &str) -> Vec<f64> {
    cols[name]
        .iter()
        .map(|v| v.parse().unwrap_or_else(|_| panic!("{name}: `{v}`")))
        .collect()
}

fn nonincreasing(v: &[f64]) -> bool {
    v.windows(2)
        .all(|w| w[1] <= w[0] + 1e-6 * w[0].abs().max(1.0))
}

fn json(o: &Output) -> serde_json::Value {
    assert_eq!(code(o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn script(name: &str, out: &Path) {
    let st = Command::new("bash")
        .arg(root().join("docs/reproduce").join(name))
        .env("FAIRALLOC", BIN)
        .env("OUT", out)
        .env_remove("FAIRALLOC_SEED")
        .status()
        .unwrap();
    assert!(st.success(), "{name} failed");
}

#[test]
fn usage_and_file_errors() {
    assert_eq!(code(&run(&[])), 64);
    assert_eq!(
        code(&run(&[
            "solve",
            "--model",
            "saa",
            "--gen",
            &data("toy/gen.json")
        ])),
        64
    );
    assert_eq!(code(&run(&["solve", "--bogus"])), 64);
    assert_eq!(code(&run(&["--help"])), 0);
    let missing = run(&[
        "solve",
        "--model",
        "saa",
        "--instance",
        "no/such.json",
        "--gen",
        &data("toy/gen.json"),
    ]);
    assert_eq!(code(&missing), 66);
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"capacities\": [1.0,").unwrap();
    let o = run(&[
        "solve",
        "--model",
        "saa",
        "--instance",
        bad.to_str().unwrap(),
        "--gen",
        &data("toy/gen.json"),
    ]);
    assert_eq!(code(&o), 65);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line"));
    let t = toy();
    assert_eq!(
        code(&run(&args(&["solve", "--model", "sadr"], &t))),
        0,
        "instance carries a Δ entry"
    );
    let no_set = run(&[
        "solve",
        "--model",
        "sadr",
        "--instance",
        &data("symmetric/instance.json"),
        "--scenarios",
        &data("symmetric/scenarios.csv"),
    ]);
    assert_eq!(code(&no_set), 64);
}

#[test]
fn infeasible_set_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.json");
    // Mean caps far below every scenario: no distribution on the sample fits.
    std::fs::write(
        &inst,
        r#"{"num_users": 2, "capacities": [9.0, 18.0], "ambiguity": {
            "mean_lower": {"rows": 2, "cols": 2, "data": [0, 0, 0, 0]},
            "mean_upper": {"rows": 2, "cols": 2, "data": [0.1, 0.1, 0.1, 0.1]},
            "variance_upper": {"rows": 2, "cols": 2, "data": [1, 1, 1, 1]}}}"#,
    )
    .unwrap();
    let o = run(&[
        "solve",
        "--model",
        "sadr",
        "--instance",
        inst.to_str().unwrap(),
        "--gen",
        &data("toy/gen.json"),
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn solve_is_deterministic_and_certified() {
    let dir = tempfile::tempdir().unwrap();
    let t = toy();
    let mut files = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("r{k}.json"));
        let log = dir.path().join(format!("log{k}.csv"));
        let common = [
            "solve",
            "--model",
            "sadr",
            "--beta",
            "2",
            "--coupled",
            "--theta",
            "0.95",
            "--seed",
            "5",
        ];
        let mut a = args(&common, &t);
        let (o, l) = (
            out.to_string_lossy().into_owned(),
            log.to_string_lossy().into_owned(),
        );
        a.extend(["--out", &o, "--cut-log", &l]);
        assert_eq!(code(&run(&a)), 0);
        files.push((
            std::fs::read(&out).unwrap(),
            std::fs::read_to_string(&log).unwrap(),
        ));
    }
    assert_eq!(files[0], files[1]);
    let r: serde_json::Value = serde_json::from_slice(&files[0].0).unwrap();
    assert_eq!(r["seed"], 5);
    assert_eq!(r["wall_time"], 0.0);
    let cert = &r["certificate"];
    assert!(cert["separation"].as_f64().unwrap() >= -cert["epsilon"].as_f64().unwrap());
    assert!(files[0]
        .1
        .starts_with("iteration,level,separation_value,kind,distribution_added,wall_time"));
}

#[test]
fn seed_from_environment_and_timing() {
    let t = toy();
    let o = Command::new(BIN)
        .args(args(&["solve", "--model", "saa", "--timing"], &t))
        .env("FAIRALLOC_SEED", "42")
        .output()
        .unwrap();
    let r = json(&o);
    assert_eq!(r["seed"], 42);
    assert!(r["wall_time"].as_f64().unwrap() > 0.0);
}

#[test]
fn vacuous_sadr_matches_robust() {
    let t = toy();
    let dr = json(&run(&args(
        &["solve", "--model", "sadr", "--theta", "1.0", "--vacuous"],
        &t,
    )));
    let rob = json(&run(&args(
        &["solve", "--model", "robust", "--theta", "1.0"],
        &t,
    )));
    let (a, b) = (
        dr["objective"].as_f64().unwrap(),
        rob["objective"].as_f64().unwrap(),
    );
    assert!((a - b).abs() <= 1e-4 * b.abs(), "{a} vs {b}");
}

#[test]
fn check_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let rep = dir.path().join("r.json").to_string_lossy().into_owned();
    let sym = vec![
        "--instance".to_string(),
        data("symmetric/instance.json"),
        "--scenarios".to_string(),
        data("symmetric/scenarios.csv"),
    ];
    let mut a = args(
        &[
            "solve",
            "--model",
            "sadr",
            "--beta",
            "2",
            "--coupled",
            "--vacuous",
        ],
        &sym,
    );
    a.extend(["--out", &rep]);
    assert_eq!(code(&run(&a)), 0);
    let o = run(&args(&["check", "--report", &rep], &sym));
    let props = json(&o);
    assert!(props["envy"].as_array().unwrap().is_empty());
    assert!(props["sharing_incentive"]["pass"]
        .as_array()
        .unwrap()
        .iter()
        .all(|b| b == true));
    // On the two-point toy law the worst scenario caps the allocation and
    // the expected dominant shares fall below 1/d: check reports failure.
    let t = toy();
    let mut a = args(&["solve", "--model", "sadr"], &t);
    a.extend(["--out", &rep]);
    assert_eq!(code(&run(&a)), 0);
    let o = run(&args(&["check", "--report", &rep], &t));
    assert_eq!(code(&o), 1);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["envy"].as_array().unwrap().is_empty());
    assert_eq!(v["pareto_spot"]["violations"], 0);
}

#[test]
fn gen_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let mut texts = Vec::new();
    for k in 0..2 {
        let p = dir.path().join(format!("g{k}.csv"));
        let o = run(&[
            "gen",
            "--family",
            "triangular",
            "--count",
            "500",
            "--seed",
            "7",
            "--out",
            p.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0);
        texts.push(std::fs::read_to_string(&p).unwrap());
    }
    assert_eq!(texts[0], texts[1]);
    assert_eq!(texts[0].lines().count(), 1 + 500 * 4 * 3);
    let p = dir.path().join("g.csv");
    assert_eq!(
        code(&run(&[
            "gen",
            "--family",
            "triangular",
            "--count",
            "500",
            "--seed",
            "8",
            "--out",
            p.to_str().unwrap()
        ])),
        0
    );
    assert_ne!(std::fs::read_to_string(&p).unwrap(), texts[0]);
}

#[test]
fn bounds_report_constants() {
    let o = run(&[
        "bounds",
        "--replicates",
        "5",
        "--model",
        "saa",
        "--instance",
        &data("azure4/instance.json"),
        "--gen",
        &data("azure4/gen.json"),
        "--count",
        "25",
    ]);
    let r = json(&o);
    assert_eq!(r["z_critical"], 1.64);
    assert_eq!(r["t_critical"], 2.13);
    assert_eq!(r["replicate_values"].as_array().unwrap().len(), 5);
    let (l, u, p) = (
        r["lower"].as_f64().unwrap(),
        r["upper"].as_f64().unwrap(),
        r["point"].as_f64().unwrap(),
    );
    assert!((r["gap_percent"].as_f64().unwrap() - (l - u).abs() / p.abs() * 100.0).abs() < 1e-10);
}

#[test]
fn sweep_jobs_keep_order() {
    let dir = tempfile::tempdir().unwrap();
    let t = toy();
    let mut outs = Vec::new();
    for jobs in ["1", "3"] {
        let p = dir
            .path()
            .join(format!("s{jobs}.csv"))
            .to_string_lossy()
            .into_owned();
        let mut a = args(
            &[
                "sweep",
                "--param",
                "delta",
                "--values",
                "0.8,0.05,0.2",
                "--jobs",
                jobs,
            ],
            &t,
        );
        a.extend(["--out", &p]);
        assert_eq!(code(&run(&a)), 0);
        outs.push(std::fs::read_to_string(&p).unwrap());
    }
    assert_eq!(outs[0], outs[1]);
    let first: Vec<&str> = outs[0]
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(first, vec!["0.8", "0.05", "0.2"]);
}

#[test]
fn sweep_records_failed_rows() {
    let t = toy();
    let o = run(&args(
        &[
            "sweep", "--param", "theta", "--values", "0.9,1.5", "--model", "saa",
        ],
        &t,
    ));
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert!(rows[1].contains(",ok,"));
    assert!(rows[2].starts_with("1.5,error"), "{}", rows[2]);
}

#[test]
fn compare_runs_every_model() {
    let t = toy();
    let o = run(&args(&["compare"], &t));
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let models: Vec<&str> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(models, vec!["fds", "ev", "robust", "saa", "sadr"]);
    assert!(text.lines().skip(1).all(|l| l.contains(",ok,")));
}

#[test]
fn theta_and_variance_scripts() {
    let dir = tempfile::tempdir().unwrap();
    script("theta_sweep.sh", dir.path());
    for m in ["ev", "saa"] {
        for f in [format!("theta_{m}.csv"), format!("theta_wide_{m}.csv")] {
            let c = read_csv(&dir.path().join(&f));
            assert!(nonincreasing(&floats(&c, "objective")), "{f}");
            for x in ["x_user1", "x_user2"] {
                assert!(nonincreasing(&floats(&c, x)), "{f} {x}");
            }
        }
    }
    script("variance_configs.sh", dir.path());
    for m in ["ev", "saa", "sadr"] {
        let c = read_csv(&dir.path().join(format!("variance_{m}.csv")));
        let v = floats(&c, "objective");
        assert!(
            v.windows(2).all(|w| w[1] > w[0]),
            "{m}: objective rises as the variance falls"
        );
    }
}

#[test]
fn delta_script() {
    let dir = tempfile::tempdir().unwrap();
    script("delta_sweep.sh", dir.path());
    let c = read_csv(&dir.path().join("delta_sadr.csv"));
    assert!(nonincreasing(&floats(&c, "objective")));
    assert!(floats(&c, "gap_percent")
        .iter()
        .all(|g| g.is_finite() && *g >= 0.0));
}

#[test]
fn omega_script() {
    let dir = tempfile::tempdir().unwrap();
    script("omega_gap.sh", dir.path());
    for g in ["gen", "gen_uniform"] {
        let c = read_csv(&dir.path().join(format!("omega_{g}.csv")));
        let gaps = floats(&c, "gap_percent");
        assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{g}: {gaps:?}");
    }
}

#[test]
fn rho_script() {
    let dir = tempfile::tempdir().unwrap();
    script("rho_box.sh", dir.path());
    let rob = read_csv(&dir.path().join("rho_robust.csv"));
    let dr = read_csv(&dir.path().join("rho_sadr.csv"));
    assert!(nonincreasing(&floats(&rob, "objective")));
    assert!(nonincreasing(&floats(&dr, "objective")));
    for r in ["CPU", "GPU", "CPU-mem", "GPU-mem"] {
        let col = format!("leftover_{r}");
        let (a, b) = (floats(&rob, &col), floats(&dr, &col));
        assert!(
            a.iter().zip(&b).all(|(x, y)| x >= y),
            "{col}: robust {a:?} sadr {b:?}"
        );
    }
}
