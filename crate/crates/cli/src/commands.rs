use std::collections::HashMap;
use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use pulasso::io::{
    check_binary, default_names, ingest_categorical, read_dense_csv, read_groups, read_labels, read_matrix_market,
    read_names, read_path, write_dense_csv, write_groups, write_json, write_matrix_market, write_path,
    CoefficientPath, PathRecord, RunManifest,
};
use pulasso::simulate::{calibrate_cs, classification_experiment, mse_experiment, ClassifyOptions, MseOptions};
use pulasso::{
    adjusted_roc, cross_validate, evaluate, f1_score, fit_path, log1pexp, misclassification_rate, sigmoid,
    stability_score, Algorithm, CvConfig, Design, GroupSpec, PathConfig, PuDataset, Scheme, SimConfig,
    SolverConfig, Standardizer, StorageMode,
};
use serde_json::{json, Value};

use crate::args::*;
use crate::failure::{reading, writing, Failure};

type Outcome = Result<(), Failure>;

pub fn run(cli: Cli) -> Outcome {
    let g = Global {
        seed: cli.seed,
        jobs: cli.jobs.max(1),
    };
    match cli.command {
        Command::Fit(a) => fit(&a, &g),
        Command::Cv(a) => cv(&a, &g),
        Command::Predict(a) => predict(&a),
        Command::Simulate(SimulateCommand::Mse(a)) => simulate_mse(&a, &g),
        Command::Simulate(SimulateCommand::Classify(a)) => simulate_classify(&a, &g),
        Command::Evaluate(EvaluateCommand::Auc(a)) => evaluate_auc(&a),
        Command::Evaluate(EvaluateCommand::Stability(a)) => evaluate_stability(&a, &g),
        Command::Evaluate(EvaluateCommand::Metrics(a)) => evaluate_metrics(&a),
        Command::Ingest(a) => ingest(&a),
    }
}

struct Global {
    seed: u64,
    jobs: usize,
}

/// `<path><suffix>`, e.g. `out.mtx` -> `out.mtx.names`.
fn beside(path: &Path, suffix: &str) -> PathBuf {
    let mut s: OsString = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn is_mtx(path: &Path, format: XFormat) -> bool {
    match format {
        XFormat::Csv => false,
        XFormat::Mtx => true,
        XFormat::Auto => path.extension().is_some_and(|e| e.eq_ignore_ascii_case("mtx")),
    }
}

fn load_design(x: &Path, format: XFormat, names: Option<&Path>) -> Result<(Vec<String>, Design), Failure> {
    if is_mtx(x, format) {
        let m = reading(x, read_matrix_market(x))?;
        let names = match names {
            Some(p) => reading(p, read_names(p))?,
            None => default_names(m.ncols()),
        };
        if names.len() != m.ncols() {
            return Err(Failure::Input(format!(
                "{}: {} names for {} columns",
                x.display(),
                names.len(),
                m.ncols()
            )));
        }
        Ok((names, Design::Sparse(m)))
    } else {
        if names.is_some() {
            log::warn!("--names is ignored for CSV input; the header row names the columns");
        }
        reading(x, read_dense_csv(x))
    }
}

struct Loaded {
    names: Vec<String>,
    data: PuDataset,
    groups: GroupSpec,
}

fn load_data(x: &Path, format: XFormat, names: Option<&Path>, z: &Path, pi: f64, groups: Option<&Path>) -> Result<Loaded, Failure> {
    let (names, design) = load_design(x, format, names)?;
    let labels = reading(z, read_labels(z))?;
    if labels.len() != design.nrows() {
        return Err(Failure::Input(format!(
            "{}: {} labels for {} rows of {}",
            z.display(),
            labels.len(),
            design.nrows(),
            x.display()
        )));
    }
    let groups = match groups {
        Some(p) => reading(p, read_groups(p, &names))?,
        None => GroupSpec::singletons(names.len()),
    };
    let data = PuDataset::new(design, labels, pi)?;
    Ok(Loaded { names, data, groups })
}

fn add_inputs(m: &mut RunManifest, paths: &[Option<&Path>]) -> Outcome {
    for p in paths.iter().flatten() {
        reading(p, m.add_input(p))?;
    }
    Ok(())
}

fn solver_config(a: &SolverArgs) -> Result<SolverConfig, Failure> {
    let cfg = SolverConfig {
        inner_tol: a.inner_tol,
        outer_tol: a.outer_tol,
        max_outer_iters: a.max_outer_iters,
        use_strong_rules: !a.no_strong_rules,
        ..SolverConfig::default()
    };
    cfg.validate()?;
    Ok(cfg)
}

fn algorithm(a: &SolverArgs) -> Algorithm {
    match a.algorithm {
        AlgorithmArg::QmEm => Algorithm::QmEm,
        AlgorithmArg::Em => Algorithm::Em,
    }
}

fn storage(a: &SolverArgs, x: &Design) -> StorageMode {
    match a.mode {
        Mode::Dense => StorageMode::Dense,
        Mode::Sparse => StorageMode::Sparse,
        Mode::Auto if x.is_sparse() => StorageMode::Sparse,
        Mode::Auto => StorageMode::Dense,
    }
}

fn path_config(a: &PathArgs) -> Result<PathConfig, Failure> {
    if let Some(l) = &a.lambda {
        if l.is_empty() || l.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Failure::Usage("--lambda values must be finite and non-negative".into()));
        }
    }
    if a.n_lambda == 0 {
        return Err(Failure::Usage("--n-lambda must be at least 1".into()));
    }
    Ok(PathConfig {
        n_lambda: a.n_lambda,
        lambda_min_ratio: a.lambda_min_ratio,
        lambdas: a.lambda.clone(),
    })
}

fn to_json<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("config types serialize")
}

fn data_config(x: &Path, z: &Path, groups: Option<&Path>, d: &PuDataset) -> Value {
    json!({
        "x": x.display().to_string(),
        "z": z.display().to_string(),
        "groups": groups.map(|g| g.display().to_string()),
        "pi": d.pi(),
        "n_labeled": d.n_labeled(),
        "n_unlabeled": d.n_unlabeled(),
        "p": d.x().ncols(),
    })
}

/// CSV to a file, or to stdout when `out` is `None`.
fn write_table(out: Option<&Path>, header: &[&str], rows: &[Vec<String>]) -> Outcome {
    let sink: Box<dyn Write> = match out {
        Some(p) => Box::new(File::create(p).map_err(|e| Failure::Runtime(format!("{}: {e}", p.display())))?),
        None => Box::new(io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(sink);
    let fail = |e: csv::Error| Failure::Runtime(format!("writing table: {e}"));
    w.write_record(header).map_err(fail)?;
    for r in rows {
        w.write_record(r).map_err(fail)?;
    }
    w.flush().map_err(|e| Failure::Runtime(format!("writing table: {e}")))
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("json value"));
}

fn num(v: f64) -> String {
    v.to_string()
}

fn fit(a: &FitArgs, _g: &Global) -> Outcome {
    let d = &a.data;
    let started = Instant::now();
    let Loaded { names, data, groups } = load_data(
        &d.design.x,
        d.design.format,
        d.design.names.as_deref(),
        &d.z,
        d.pi,
        d.groups.as_deref(),
    )?;
    let path = path_config(&a.path)?;
    let solver = solver_config(&a.solver)?;
    let mode = storage(&a.solver, data.x());
    let alg = algorithm(&a.solver);
    let loaded = started.elapsed().as_secs_f64();

    let sd = Standardizer::build(data.x(), &groups, mode)?;
    let fits = fit_path(&data, &sd, &path, &solver, alg)?;
    let fitted = started.elapsed().as_secs_f64() - loaded;
    let unconverged = fits.iter().filter(|f| !f.converged).count();
    if unconverged > 0 {
        log::warn!("{unconverged} of {} lambdas hit the iteration cap", fits.len());
    }

    let cp = CoefficientPath {
        names,
        records: fits.iter().map(PathRecord::from).collect(),
    };
    writing(&a.out, write_path(&a.out, &cp))?;

    let mut config = data_config(&d.design.x, &d.z, d.groups.as_deref(), &data);
    config["path"] = to_json(&path);
    config["solver"] = to_json(&solver);
    config["algorithm"] = to_json(&alg);
    config["mode"] = to_json(&mode);
    let mut m = RunManifest::new("fit", config, None);
    add_inputs(&mut m, &[Some(&d.design.x), d.design.names.as_deref(), Some(&d.z), d.groups.as_deref()])?;
    m.timings.insert("load".into(), loaded);
    m.timings.insert("fit".into(), fitted);
    writing(&a.out, m.write_for(&a.out))?;
    println!("wrote {} path records to {}", cp.records.len(), a.out.display());
    Ok(())
}

fn cv(a: &CvArgs, g: &Global) -> Outcome {
    let d = &a.data;
    let started = Instant::now();
    let Loaded { data, groups, .. } = load_data(
        &d.design.x,
        d.design.format,
        d.design.names.as_deref(),
        &d.z,
        d.pi,
        d.groups.as_deref(),
    )?;
    let path = path_config(&a.path)?;
    let solver = solver_config(&a.solver)?;
    let cfg = CvConfig {
        folds: a.folds as usize,
        seed: g.seed,
        jobs: g.jobs,
        mode: storage(&a.solver, data.x()),
        algorithm: algorithm(&a.solver),
    };
    let res = cross_validate(&data, &groups, &path, &solver, &cfg)?;

    let rows: Vec<Vec<String>> = (0..res.lambdas.len())
        .map(|i| vec![num(res.lambdas[i]), num(res.mean_deviance[i]), num(res.se_deviance[i])])
        .collect();
    write_table(Some(&a.out), &["lambda", "mean_deviance", "se_deviance"], &rows)?;
    let summary_path = a.out.with_extension("json");
    let summary = json!({
        "folds": cfg.folds,
        "lambda_max": res.lambdas[0],
        "lambda_min": res.lambda_min,
        "lambda_1se": res.lambda_1se,
        "index_min": res.index_min,
        "index_1se": res.index_1se,
        "fold_of": res.fold_of,
    });
    writing(&summary_path, write_json(&summary_path, &summary))?;

    let mut config = data_config(&d.design.x, &d.z, d.groups.as_deref(), &data);
    config["path"] = to_json(&path);
    config["solver"] = to_json(&solver);
    config["cv"] = to_json(&cfg);
    let mut m = RunManifest::new("cv", config, Some(g.seed));
    add_inputs(&mut m, &[Some(&d.design.x), d.design.names.as_deref(), Some(&d.z), d.groups.as_deref()])?;
    m.timings.insert("total".into(), started.elapsed().as_secs_f64());
    writing(&a.out, m.write_for(&a.out))?;
    writing(&summary_path, m.write_for(&summary_path))?;
    println!(
        "lambda_min = {}, lambda_1se = {} ({} folds)",
        res.lambda_min, res.lambda_1se, cfg.folds
    );
    Ok(())
}

/// Index of the record whose lambda is nearest on the log scale, and whether
/// it matches to relative precision 1e-9.
fn nearest_lambda(records: &[PathRecord], lambda: f64) -> Option<(usize, bool)> {
    let dist = |l: f64| {
        if l > 0.0 && lambda > 0.0 {
            (l.ln() - lambda.ln()).abs()
        } else {
            (l - lambda).abs()
        }
    };
    let k = (0..records.len()).min_by(|&i, &j| dist(records[i].lambda).total_cmp(&dist(records[j].lambda)))?;
    let l = records[k].lambda;
    Some((k, (l - lambda).abs() <= 1e-9 * l.abs().max(lambda.abs())))
}

/// `(pi, n_l, n_u)` from flags, falling back to the manifest beside the path file.
fn sampling(a: &PredictArgs) -> Option<(f64, usize, usize)> {
    let from_manifest = || -> Option<(f64, usize, usize)> {
        let text = fs::read_to_string(RunManifest::sidecar(&a.path)).ok()?;
        let m: RunManifest = serde_json::from_str(&text).ok()?;
        let c = &m.config;
        Some((c["pi"].as_f64()?, c["n_labeled"].as_u64()? as usize, c["n_unlabeled"].as_u64()? as usize))
    };
    let stored = from_manifest();
    let pi = a.pi.or(stored.map(|s| s.0))?;
    let n_l = a.n_labeled.or(stored.map(|s| s.1))?;
    let n_u = a.n_unlabeled.or(stored.map(|s| s.2))?;
    Some((pi, n_l, n_u))
}

fn predict(a: &PredictArgs) -> Outcome {
    let cp = reading(&a.path, read_path(&a.path))?;
    let (names, x) = load_design(&a.design.x, a.design.format, a.design.names.as_deref())?;
    if x.ncols() != cp.names.len() {
        return Err(Failure::Input(format!(
            "{}: {} columns, but the path was fitted on {}",
            a.design.x.display(),
            x.ncols(),
            cp.names.len()
        )));
    }
    if names != cp.names {
        log::warn!("column names differ from the fitted path; matching by position");
    }
    let (k, exact) = nearest_lambda(&cp.records, a.lambda)
        .ok_or_else(|| Failure::Input(format!("{}: path has no records", a.path.display())))?;
    let rec = &cp.records[k];
    if !exact {
        if a.strict {
            return Err(Failure::Usage(format!("lambda {} is not on the path (nearest {})", a.lambda, rec.lambda)));
        }
        log::warn!("lambda {} is not on the path; using nearest {}", a.lambda, rec.lambda);
    }
    let t = x.linear_predictor(&rec.theta)?;
    let prob_y: Vec<f64> = t.iter().map(|&v| sigmoid(v)).collect();
    let samp = sampling(a);
    if samp.is_none() {
        log::warn!("no pi / label counts available; writing prob_y only");
    }
    let rows: Vec<Vec<String>> = t
        .iter()
        .zip(&prob_y)
        .map(|(&v, &py)| match samp {
            Some((pi, n_l, n_u)) => {
                let ratio = (n_l as f64).ln() - pi.ln() - (n_u as f64).ln();
                vec![num(py), num(sigmoid(ratio + v - log1pexp(v)))]
            }
            None => vec![num(py)],
        })
        .collect();
    let header: &[&str] = if samp.is_some() { &["prob_y", "prob_z"] } else { &["prob_y"] };
    write_table(Some(&a.out), header, &rows)?;
    let config = json!({
        "path": a.path.display().to_string(),
        "x": a.design.x.display().to_string(),
        "lambda_requested": a.lambda,
        "lambda_used": rec.lambda,
        "strict": a.strict,
    });
    let mut m = RunManifest::new("predict", config, None);
    add_inputs(&mut m, &[Some(&a.path), Some(&a.design.x), a.design.names.as_deref()])?;
    writing(&a.out, m.write_for(&a.out))?;
    Ok(())
}

fn simulate_mse(a: &MseArgs, g: &Global) -> Outcome {
    let started = Instant::now();
    if a.reps == 0 || a.pilot_reps == 0 {
        return Err(Failure::Usage("--reps and --pilot-reps must be at least 1".into()));
    }
    if let Some(&s) = a.s.iter().find(|&&s| s > a.p) {
        return Err(Failure::Usage(format!("s = {s} exceeds p = {}", a.p)));
    }
    if a.n.iter().any(|&n| n < 2) {
        return Err(Failure::Usage("every n must be at least 2".into()));
    }
    let opts = MseOptions {
        p: a.p,
        reps: a.reps,
        seed: g.seed,
        jobs: g.jobs,
        solver: SolverConfig::default(),
    };
    let (c_s, calibrated) = match &a.c_s {
        Some(c) if c.len() != a.s.len() => {
            return Err(Failure::Usage(format!("{} values of --c-s for {} values of --s", c.len(), a.s.len())))
        }
        Some(c) => (c.clone(), false),
        None => {
            let mut sorted = a.n.clone();
            sorted.sort_unstable();
            let pilot_n = a.pilot_n.unwrap_or(sorted[sorted.len() / 2]);
            let pilot = MseOptions {
                reps: a.pilot_reps,
                ..opts.clone()
            };
            let c = a
                .s
                .iter()
                .map(|&s| calibrate_cs(s, pilot_n, &a.cs_grid, &pilot))
                .collect::<pulasso::Result<Vec<f64>>>()?;
            (c, true)
        }
    };
    let table = mse_experiment(&a.s, &a.n, &c_s, &opts)?;
    let rows: Vec<Vec<String>> = table
        .points
        .iter()
        .map(|p| {
            vec![
                p.s.to_string(),
                p.n.to_string(),
                num(p.c_s),
                num(p.lambda),
                num(p.rate),
                num(p.mean_error),
                num(p.se_error),
                p.reps_ok.to_string(),
                p.dropped.to_string(),
            ]
        })
        .collect();
    let header = ["s", "n", "c_s", "lambda", "rate", "mean_error", "se_error", "reps_ok", "dropped"];
    write_table(a.out.as_deref(), &header, &rows)?;
    let summary = json!({
        "p": table.p,
        "reps": a.reps,
        "s": a.s,
        "c_s": c_s,
        "c_s_calibrated": calibrated,
        "slope": table.slope,
        "r_squared": table.r_squared,
    });
    match &a.out {
        Some(out) => {
            let json_path = out.with_extension("json");
            writing(&json_path, write_json(&json_path, &summary))?;
            let config = json!({ "p": a.p, "s": a.s, "n": a.n, "reps": a.reps, "c_s": c_s,
                "cs_grid": a.cs_grid, "pilot_n": a.pilot_n, "pilot_reps": a.pilot_reps });
            let mut m = RunManifest::new("simulate mse", config, Some(g.seed));
            m.timings.insert("total".into(), started.elapsed().as_secs_f64());
            writing(out, m.write_for(out))?;
            writing(&json_path, m.write_for(&json_path))?;
        }
        None => eprintln!("slope = {}, R^2 = {}", table.slope, table.r_squared),
    }
    Ok(())
}

fn simulate_classify(a: &ClassifyArgs, g: &Global) -> Outcome {
    let started = Instant::now();
    let scheme = match a.scheme {
        SchemeArg::Logistic => Scheme::Logistic,
        SchemeArg::Misspecified => Scheme::Misspecified,
    };
    let mut cells = Vec::new();
    for &n_u in &a.n_u {
        for &rho in &a.rho {
            for &d in &a.d {
                let cfg = SimConfig {
                    n_l: a.n_l,
                    n_u,
                    p: a.p,
                    s: a.s,
                    rho,
                    d,
                    scheme,
                    seed: g.seed,
                };
                cfg.validate()?;
                cells.push(cfg);
            }
        }
    }
    let opts = ClassifyOptions {
        reps: a.reps,
        n_test: a.n_test,
        folds: a.folds as usize,
        jobs: g.jobs,
        path: PathConfig {
            n_lambda: a.n_lambda,
            ..PathConfig::default()
        },
        solver: SolverConfig::default(),
    };
    let result = classification_experiment(&cells, &opts)?;
    let scheme_name = match scheme {
        Scheme::Logistic => "logistic",
        Scheme::Misspecified => "misspecified",
    };
    let mut rows = Vec::new();
    for cell in &result {
        let c = &cell.config;
        for m in &cell.methods {
            rows.push(vec![
                c.n_l.to_string(),
                c.n_u.to_string(),
                c.p.to_string(),
                c.s.to_string(),
                num(c.rho),
                num(c.d),
                scheme_name.to_string(),
                m.method.name().to_string(),
                num(m.misclassification_mean),
                num(m.misclassification_se),
                num(m.f1_mean),
                num(m.f1_se),
                m.reps_ok.to_string(),
            ]);
        }
    }
    let header = [
        "n_l",
        "n_u",
        "p",
        "s",
        "rho",
        "d",
        "scheme",
        "method",
        "misclassification_mean",
        "misclassification_se",
        "f1_mean",
        "f1_se",
        "reps_ok",
    ];
    write_table(a.out.as_deref(), &header, &rows)?;
    if let Some(out) = &a.out {
        let config = json!({ "cells": to_json(&cells), "options": to_json(&opts) });
        let mut m = RunManifest::new("simulate classify", config, Some(g.seed));
        m.timings.insert("total".into(), started.elapsed().as_secs_f64());
        writing(out, m.write_for(out))?;
    }
    Ok(())
}

fn read_scores(a: &ScoreArgs) -> Result<Vec<f64>, Failure> {
    let path = &a.scores;
    let bad = |m: String| Failure::Input(format!("{}: {m}", path.display()));
    let mut rdr = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let header: Vec<String> = rdr.headers().map_err(|e| bad(e.to_string()))?.iter().map(|h| h.trim().to_string()).collect();
    let col = match &a.column {
        Some(c) => header.iter().position(|h| h == c).ok_or_else(|| bad(format!("no column {c:?}")))?,
        None => header.iter().position(|h| h == "prob_y").unwrap_or(0),
    };
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let field = rec.get(col).ok_or_else(|| bad(format!("row {}: missing field", i + 1)))?.trim();
        let v: f64 = field.parse().map_err(|_| bad(format!("row {}: not a number: {field:?}", i + 1)))?;
        if !v.is_finite() {
            return Err(bad(format!("row {}: non-finite score", i + 1)));
        }
        out.push(v);
    }
    Ok(out)
}

fn same_length(what: &Path, expected: usize, found: usize) -> Outcome {
    if expected != found {
        return Err(Failure::Input(format!("{}: {found} labels for {expected} scores", what.display())));
    }
    Ok(())
}

fn evaluate_auc(a: &AucArgs) -> Outcome {
    let scores = read_scores(&a.scores)?;
    let z = reading(&a.z, read_labels(&a.z))?;
    same_length(&a.z, scores.len(), z.len())?;
    let roc = adjusted_roc(&scores, &z, a.pi)?;
    if let Some(out) = &a.out {
        let rows: Vec<Vec<String>> = (0..roc.thresholds.len())
            .map(|i| vec![num(roc.thresholds[i]), num(roc.tp[i]), num(roc.fp_naive[i]), num(roc.fp_adj[i])])
            .collect();
        write_table(Some(out), &["threshold", "tp", "fp_naive", "fp_adj"], &rows)?;
        let mut m = RunManifest::new("evaluate auc", json!({ "pi": a.pi, "column": a.scores.column }), None);
        add_inputs(&mut m, &[Some(&a.scores.scores), Some(&a.z)])?;
        writing(out, m.write_for(out))?;
    }
    print_json(&json!({
        "n": scores.len(),
        "pi": a.pi,
        "auc_naive": roc.auc_naive,
        "auc_adj": roc.auc_adj,
    }));
    Ok(())
}

/// Reads one set per non-empty line; members are arbitrary tokens.
fn read_sets(path: &Path) -> Result<Vec<Vec<usize>>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut sets = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut set: Vec<usize> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| {
                let next = ids.len();
                *ids.entry(t.to_string()).or_insert(next)
            })
            .collect();
        set.sort_unstable();
        set.dedup();
        sets.push(set);
    }
    Ok(sets)
}

fn evaluate_stability(a: &StabilityArgs, g: &Global) -> Outcome {
    if let Some(path) = &a.sets {
        let sets = read_sets(path)?;
        if sets.len() < 2 {
            return Err(Failure::Usage(format!("{}: need at least two sets", path.display())));
        }
        let mut scores = Vec::new();
        for i in 0..sets.len() {
            for j in i + 1..sets.len() {
                scores.push(stability_score(&sets[i], &sets[j]));
            }
        }
        let summary = evaluate::quartiles(&scores)?;
        print_json(&json!({ "sets": sets.len(), "pairs": scores.len(), "stability": to_json(&summary) }));
        return Ok(());
    }

    let (x, z, pi) = match (&a.x, &a.z, a.pi) {
        (Some(x), Some(z), Some(pi)) => (x, z, pi),
        _ => return Err(Failure::Usage("data mode needs --x, --z and --pi".into())),
    };
    let Loaded { data, groups, .. } = load_data(x, a.format, a.names.as_deref(), z, pi, a.groups.as_deref())?;
    let path = path_config(&a.path)?;
    let solver = solver_config(&a.solver)?;
    let cfg = CvConfig {
        folds: a.folds as usize,
        seed: g.seed,
        jobs: g.jobs,
        mode: storage(&a.solver, data.x()),
        algorithm: algorithm(&a.solver),
    };
    let table = evaluate::selection_stability(&data, &groups, &path, &solver, &cfg)?;
    let rows: Vec<Vec<String>> = table
        .iter()
        .map(|r| {
            let s = &r.summary;
            vec![
                num(r.lambda),
                num(s.min),
                num(s.q1),
                num(s.median),
                num(s.q3),
                num(s.max),
                num(s.mean),
                num(r.mean_selected),
            ]
        })
        .collect();
    let header = ["lambda", "min", "q1", "median", "q3", "max", "mean", "mean_selected"];
    write_table(a.out.as_deref(), &header, &rows)?;
    if let Some(out) = &a.out {
        let mut config = data_config(x, z, a.groups.as_deref(), &data);
        config["path"] = to_json(&path);
        config["cv"] = to_json(&cfg);
        let mut m = RunManifest::new("evaluate stability", config, Some(g.seed));
        add_inputs(&mut m, &[Some(x), a.names.as_deref(), Some(z), a.groups.as_deref()])?;
        writing(out, m.write_for(out))?;
    }
    Ok(())
}

fn evaluate_metrics(a: &MetricsArgs) -> Outcome {
    let scores = read_scores(&a.scores)?;
    let truth = reading(&a.truth, read_labels(&a.truth))?;
    same_length(&a.truth, scores.len(), truth.len())?;
    let pred: Vec<bool> = scores.iter().map(|&s| s > a.threshold).collect();
    print_json(&json!({
        "n": pred.len(),
        "threshold": a.threshold,
        "misclassification": misclassification_rate(&pred, &truth)?,
        "f1": f1_score(&pred, &truth)?,
    }));
    Ok(())
}

fn write_names(path: &Path, names: &[String]) -> Outcome {
    let mut text = names.join("\n");
    text.push('\n');
    fs::write(path, text).map_err(|e| Failure::Runtime(format!("writing {}: {e}", path.display())))
}

/// Writes `x` as CSV or MatrixMarket; MatrixMarket gets a `.names` file beside it.
fn write_design(out: &Path, to: XFormat, names: &[String], x: &Design) -> Result<Vec<PathBuf>, Failure> {
    if is_mtx(out, to) {
        writing(out, write_matrix_market(out, &x.to_sparse()))?;
        let np = beside(out, ".names");
        write_names(&np, names)?;
        Ok(vec![np])
    } else {
        writing(out, write_dense_csv(out, names, x))?;
        Ok(Vec::new())
    }
}

fn ingest(a: &IngestArgs) -> Outcome {
    let input = &a.input;
    let (names, x, extra) = match a.format {
        IngestFormat::Csv => {
            let (names, x) = reading(input, read_dense_csv(input))?;
            (names, x, None)
        }
        IngestFormat::Mtx => {
            let m = reading(input, read_matrix_market(input))?;
            if a.binary {
                reading(input, check_binary(&m))?;
            }
            let names = match &a.names {
                Some(p) => reading(p, read_names(p))?,
                None => default_names(m.ncols()),
            };
            if names.len() != m.ncols() {
                return Err(Failure::Input(format!("{} names for {} columns", names.len(), m.ncols())));
            }
            (names, Design::Sparse(m), None)
        }
        IngestFormat::Categorical => {
            let c = reading(input, ingest_categorical(input, a.reference_row, a.min_count))?;
            let names = c.names();
            (names, Design::Sparse(c.x), Some((c.map, c.groups)))
        }
    };
    let to = a.to.unwrap_or(match a.format {
        IngestFormat::Csv => XFormat::Csv,
        _ => XFormat::Mtx,
    });
    let mut outputs = vec![a.out.clone()];
    outputs.extend(write_design(&a.out, to, &names, &x)?);
    if let Some((map, groups)) = &extra {
        let gp = beside(&a.out, ".groups.tsv");
        writing(&gp, write_groups(&gp, &names, groups))?;
        let mp = beside(&a.out, ".map.json");
        writing(&mp, write_json(&mp, map))?;
        outputs.extend([gp, mp]);
    }
    let config = json!({
        "input": input.display().to_string(),
        "format": format!("{:?}", a.format).to_lowercase(),
        "binary": a.binary,
        "reference_row": a.reference_row,
        "min_count": a.min_count,
    });
    let mut m = RunManifest::new("ingest", config, None);
    add_inputs(&mut m, &[Some(input), a.names.as_deref()])?;
    for o in &outputs[1..] {
        m.outputs.push(o.display().to_string());
    }
    writing(&a.out, m.write_for(&a.out))?;
    println!("{} rows, {} columns -> {}", x.nrows(), x.ncols(), a.out.display());
    Ok(())
}
