use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pulasso::io::{read_dense_csv, read_labels, read_matrix_market, read_path, write_matrix_market};
use pulasso::{fit_path, sigmoid, CscMatrix, PathConfig, PuDataset, SolverConfig, Standardizer, StorageMode};
use tempfile::TempDir;

const PI: &str = "0.43";

fn toy(file: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/toy").join(file)
}

fn pulasso(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pulasso"))
        .args(args)
        .env("PULASSO_LOG", "error")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = pulasso(args);
    assert!(
        out.status.success(),
        "pulasso {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn code(args: &[&str]) -> i32 {
    pulasso(args).status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn fit_toy(dir: &TempDir, name: &str, extra: &[&str]) -> PathBuf {
    let out = dir.path().join(name);
    let (x, z, g) = (toy("x.csv"), toy("z.csv"), toy("groups.tsv"));
    let mut args = vec!["fit", "--x", s(&x), "--z", s(&z), "--pi", PI, "--groups", s(&g), "--out", s(&out)];
    args.extend_from_slice(extra);
    ok(&args);
    out
}

fn column(path: &Path, name: &str) -> Vec<f64> {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let k = rdr.headers().unwrap().iter().position(|h| h == name).expect("column present");
    rdr.records().map(|r| r.unwrap()[k].parse().unwrap()).collect()
}

#[test]
fn fit_writes_full_path_with_manifest() {
    let dir = TempDir::new().unwrap();
    let out = fit_toy(&dir, "path.csv", &[]);
    let path = read_path(&out).unwrap();
    assert_eq!(path.records.len(), 100);
    assert_eq!(path.names.len(), 10);
    assert_eq!(path.records[0].active_groups, 0);
    assert!(path.records.last().unwrap().active_groups > 0);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("path.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "fit");
    assert_eq!(manifest["inputs"].as_array().unwrap().len(), 3);
    assert_eq!(manifest["config"]["n_labeled"], 100);
}

#[test]
fn single_lambda_gives_single_record() {
    let dir = TempDir::new().unwrap();
    let out = fit_toy(&dir, "one.csv", &["--lambda", "0.01"]);
    let path = read_path(&out).unwrap();
    assert_eq!(path.records.len(), 1);
    assert_eq!(path.records[0].lambda, 0.01);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let a = fit_toy(&dir, "a.csv", &["--n-lambda", "20"]);
    let b = fit_toy(&dir, "b.csv", &["--n-lambda", "20"]);
    assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap());
}

#[test]
fn exit_codes_distinguish_failures() {
    let dir = TempDir::new().unwrap();
    let (x, z) = (toy("x.csv"), toy("z.csv"));
    assert_eq!(code(&["fit", "--x", s(&x), "--z", s(&z)]), 2, "missing pi");
    assert_eq!(code(&["fit", "--x", s(&x), "--z", s(&z), "--pi", "1.5"]), 2, "pi out of range");
    assert_eq!(code(&["fit", "--x", s(&x), "--z", s(&z), "--pi", "0"]), 2, "pi zero");

    let missing = dir.path().join("missing.csv");
    assert_eq!(code(&["fit", "--x", s(&missing), "--z", s(&z), "--pi", PI]), 3);

    let groups = dir.path().join("groups.tsv");
    fs::write(&groups, "x1\tg1\nx2\tg1\n").unwrap();
    assert_eq!(code(&["fit", "--x", s(&x), "--z", s(&z), "--pi", PI, "--groups", s(&groups)]), 4);

    let labels: Vec<String> = read_labels(&z).unwrap().iter().map(|&v| u8::from(v).to_string()).collect();
    let mut bad = labels.clone();
    bad[5] = "2".into();
    let zbad = dir.path().join("zbad.csv");
    fs::write(&zbad, format!("z\n{}\n", bad.join("\n"))).unwrap();
    assert_eq!(code(&["fit", "--x", s(&x), "--z", s(&zbad), "--pi", PI]), 5);

    let out = dir.path().join("o.csv");
    assert_eq!(
        code(&["fit", "--x", s(&x), "--z", s(&z), "--pi", PI, "--lambda", "0.1,0.2", "--out", s(&out)]),
        2,
        "increasing lambda list"
    );
}

#[test]
fn predict_round_trip_matches_in_memory_fit() {
    let dir = TempDir::new().unwrap();
    let out = fit_toy(&dir, "path.csv", &["--n-lambda", "15"]);

    let (names, x) = read_dense_csv(&toy("x.csv")).unwrap();
    let groups = pulasso::io::read_groups(&toy("groups.tsv"), &names).unwrap();
    let data = PuDataset::new(x.clone(), read_labels(&toy("z.csv")).unwrap(), 0.43).unwrap();
    let sd = Standardizer::build(data.x(), &groups, StorageMode::Dense).unwrap();
    let path = PathConfig {
        n_lambda: 15,
        ..PathConfig::default()
    };
    let fits = fit_path(&data, &sd, &path, &SolverConfig::default(), pulasso::Algorithm::QmEm).unwrap();

    let k = 9;
    let lambda = fits[k].lambda.to_string();
    let scores = dir.path().join("scores.csv");
    let xs = toy("x.csv");
    ok(&["predict", "--path", s(&out), "--x", s(&xs), "--lambda", &lambda, "--strict", "--out", s(&scores)]);
    let got = column(&scores, "prob_y");
    let t = x.linear_predictor(&fits[k].theta).unwrap();
    assert_eq!(got.len(), t.len());
    for (g, ti) in got.iter().zip(&t) {
        assert!((g - sigmoid(*ti)).abs() < 1e-12);
    }
    let prob_z = column(&scores, "prob_z");
    assert!(prob_z.iter().all(|p| (0.0..=1.0).contains(p)));
}

#[test]
fn predict_at_lambda_max_is_constant_prevalence() {
    let dir = TempDir::new().unwrap();
    let out = fit_toy(&dir, "path.csv", &["--n-lambda", "5"]);
    let lmax = read_path(&out).unwrap().records[0].lambda.to_string();
    let scores = dir.path().join("scores.csv");
    let xs = toy("x.csv");
    ok(&["predict", "--path", s(&out), "--x", s(&xs), "--lambda", &lmax, "--out", s(&scores)]);
    let expected = sigmoid((0.43f64 / 0.57).ln());
    for v in column(&scores, "prob_y") {
        assert!((v - expected).abs() < 1e-12);
    }
}

#[test]
fn predict_checks_columns_and_lambda() {
    let dir = TempDir::new().unwrap();
    let out = fit_toy(&dir, "path.csv", &["--n-lambda", "5"]);
    let (names, x) = read_dense_csv(&toy("x.csv")).unwrap();
    let narrow = dir.path().join("narrow.csv");
    let mut text = names[..9].join(",") + "\n";
    for r in 0..x.nrows() {
        let row: Vec<String> = x.row(r)[..9].iter().map(f64::to_string).collect();
        text += &(row.join(",") + "\n");
    }
    fs::write(&narrow, text).unwrap();
    let scores = dir.path().join("scores.csv");
    assert_eq!(code(&["predict", "--path", s(&out), "--x", s(&narrow), "--lambda", "0.01", "--out", s(&scores)]), 3);

    let xs = toy("x.csv");
    let off_path = "0.0123456";
    assert_eq!(
        code(&["predict", "--path", s(&out), "--x", s(&xs), "--lambda", off_path, "--strict", "--out", s(&scores)]),
        2
    );
    ok(&["predict", "--path", s(&out), "--x", s(&xs), "--lambda", off_path, "--out", s(&scores)]);
}

#[test]
fn cv_reports_lambda_min_within_grid() {
    let dir = TempDir::new().unwrap();
    let (x, z, g) = (toy("x.csv"), toy("z.csv"), toy("groups.tsv"));
    let run = |seed: &str, name: &str| {
        let out = dir.path().join(name);
        ok(&[
            "cv", "--x", s(&x), "--z", s(&z), "--pi", PI, "--groups", s(&g), "--folds", "5", "--n-lambda", "12",
            "--seed", seed, "--out", s(&out),
        ]);
        let summary: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out.with_extension("json")).unwrap()).unwrap();
        let header = fs::read_to_string(&out).unwrap().lines().next().unwrap().to_string();
        (summary, header)
    };
    let (a, ha) = run("1", "cv1.csv");
    let (b, hb) = run("2", "cv2.csv");
    assert!(a["lambda_min"].as_f64().unwrap() <= a["lambda_max"].as_f64().unwrap());
    assert!(a["lambda_1se"].as_f64().unwrap() >= a["lambda_min"].as_f64().unwrap());
    assert_ne!(a["fold_of"], b["fold_of"], "seed changes folds");
    assert_eq!(ha, hb);
    let keys = |v: &serde_json::Value| v.as_object().unwrap().keys().cloned().collect::<Vec<_>>();
    assert_eq!(keys(&a), keys(&b));

    let out = dir.path().join("k1.csv");
    assert_eq!(code(&["cv", "--x", s(&x), "--z", s(&z), "--pi", PI, "--folds", "1", "--out", s(&out)]), 2);
}

#[test]
fn matrix_market_round_trip_is_exact() {
    let dir = TempDir::new().unwrap();
    let triplets = [(0, 0, 1.0), (2, 1, -0.125), (4, 3, 1e-300), (1, 3, 3.141592653589793), (3, 2, 7.0)];
    let m = CscMatrix::from_triplets(5, 4, &triplets).unwrap();
    let input = dir.path().join("in.mtx");
    write_matrix_market(&input, &m).unwrap();
    let out = dir.path().join("out.mtx");
    ok(&["ingest", "--input", s(&input), "--format", "mtx", "--out", s(&out)]);
    let back = read_matrix_market(&out).unwrap();
    let mut a: Vec<_> = m.triplets().collect();
    let mut b: Vec<_> = back.triplets().collect();
    a.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
    b.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
    assert_eq!(a, b);
    assert_eq!((back.nrows(), back.ncols()), (5, 4));

    assert_eq!(code(&["ingest", "--input", s(&input), "--format", "mtx", "--binary", "--out", s(&out)]), 3);
}

#[test]
fn ingest_categorical_encodes_against_reference() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("cat.csv");
    let mut text = String::from("color\n");
    for level in ["A", "B", "C", "A", "B", "C", "A"] {
        text += level;
        text.push('\n');
    }
    fs::write(&input, text).unwrap();
    let out = dir.path().join("cat.mtx");
    ok(&["ingest", "--input", s(&input), "--format", "categorical", "--min-count", "1", "--out", s(&out)]);
    let x = read_matrix_market(&out).unwrap();
    assert_eq!((x.nrows(), x.ncols()), (7, 2));
    let names = fs::read_to_string(dir.path().join("cat.mtx.names")).unwrap();
    assert_eq!(names.lines().collect::<Vec<_>>(), ["color=B", "color=C"]);
    assert!(dir.path().join("cat.mtx.groups.tsv").exists());
    assert!(dir.path().join("cat.mtx.map.json").exists());
}

#[test]
fn ingest_dense_csv_passes_through() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("copy.csv");
    let xs = toy("x.csv");
    ok(&["ingest", "--input", s(&xs), "--format", "csv", "--out", s(&out)]);
    let (n0, x0) = read_dense_csv(&xs).unwrap();
    let (n1, x1) = read_dense_csv(&out).unwrap();
    assert_eq!(n0, n1);
    assert_eq!(x0, x1);
}

#[test]
fn ingested_sparse_design_fits() {
    let dir = TempDir::new().unwrap();
    let mtx = dir.path().join("x.mtx");
    let xs = toy("x.csv");
    ok(&["ingest", "--input", s(&xs), "--format", "csv", "--to", "mtx", "--out", s(&mtx)]);
    let names = dir.path().join("x.mtx.names");
    let out = dir.path().join("path.csv");
    let (z, g) = (toy("z.csv"), toy("groups.tsv"));
    ok(&[
        "fit", "--x", s(&mtx), "--names", s(&names), "--z", s(&z), "--pi", PI, "--groups", s(&g), "--n-lambda", "8",
        "--out", s(&out),
    ]);
    let sparse = read_path(&out).unwrap();
    let dense = read_path(&fit_toy(&dir, "dense.csv", &["--n-lambda", "8"])).unwrap();
    for (a, b) in sparse.records.iter().zip(&dense.records) {
        for (u, v) in a.theta.iter().zip(&b.theta) {
            assert!((u - v).abs() < 1e-5, "{u} vs {v}");
        }
    }
}

#[test]
fn simulate_mse_emits_one_row_per_sample_size() {
    let out = ok(&["simulate", "mse", "--p", "100", "--s", "5", "--n", "500,1000", "--reps", "5"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3, "{text}");
    assert!(lines[0].starts_with("s,n,c_s,lambda,rate,mean_error"));
}

#[test]
fn simulate_rejects_bad_grid() {
    assert_eq!(code(&["simulate", "mse", "--p", "10", "--s", "20", "--n", "500"]), 2);
    assert_eq!(code(&["simulate", "classify", "--d", "0.5", "--reps", "1"]), 2);
}

#[test]
fn evaluate_auc_with_zero_prevalence_is_naive() {
    let dir = TempDir::new().unwrap();
    let scores = dir.path().join("scores.csv");
    let z = dir.path().join("z.csv");
    let vals = [0.9, 0.1, 0.8, 0.35, 0.4, 0.7, 0.2, 0.65];
    let labels = [1, 0, 1, 0, 1, 0, 0, 1];
    fs::write(&scores, format!("prob_y\n{}\n", vals.map(|v| v.to_string()).join("\n"))).unwrap();
    fs::write(&z, format!("z\n{}\n", labels.map(|v| v.to_string()).join("\n"))).unwrap();
    let out = ok(&["evaluate", "auc", "--scores", s(&scores), "--z", s(&z), "--pi", "0"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["auc_adj"], v["auc_naive"]);
    assert!((v["auc_naive"].as_f64().unwrap() - 0.875).abs() < 1e-12);

    let out = ok(&["evaluate", "auc", "--scores", s(&scores), "--z", s(&z), "--pi", "0.3"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["auc_adj"].as_f64().unwrap() - (0.875 - 0.15) / 0.7).abs() < 1e-12);
}

#[test]
fn evaluate_stability_of_identical_sets_is_one() {
    let dir = TempDir::new().unwrap();
    let sets = dir.path().join("sets.txt");
    fs::write(&sets, "x1,x4,x7\nx1 x4 x7\nx7,x1,x4\n").unwrap();
    let out = ok(&["evaluate", "stability", "--sets", s(&sets)]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["pairs"], 3);
    assert_eq!(v["stability"]["min"], 1.0);
    assert_eq!(v["stability"]["max"], 1.0);
}

#[test]
fn evaluate_metrics_counts_errors() {
    let dir = TempDir::new().unwrap();
    let scores = dir.path().join("scores.csv");
    let truth = dir.path().join("y.csv");
    fs::write(&scores, "prob_y\n0.9\n0.2\n0.7\n0.4\n").unwrap();
    fs::write(&truth, "y\n1\n0\n0\n1\n").unwrap();
    let out = ok(&["evaluate", "metrics", "--scores", s(&scores), "--truth", s(&truth)]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["misclassification"], 0.5);
    assert_eq!(v["f1"], 0.5);
}
