//! File formats: dense CSV with a header row, MatrixMarket coordinate files,
//! label files, group specifications, categorical tables, coefficient paths
//! and run manifests.
//!
//! Floats are written with Rust's shortest round-trip formatting, so reading
//! back recovers every value bit for bit.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::design::{CscMatrix, Design};
use crate::error::{Error, Result};
use crate::solver::FitResult;
use crate::standardize::GroupSpec;

fn parse_f64(s: &str, at: impl Fn() -> String) -> Result<f64> {
    let t = s.trim();
    let v: f64 = t.parse().map_err(|_| Error::Parse(format!("{}: not a number: {t:?}", at())))?;
    if !v.is_finite() {
        return Err(Error::Parse(format!("{}: non-finite value {t:?}", at())));
    }
    Ok(v)
}

/// Dense numeric CSV with a header row of column names.
pub fn read_dense_csv(path: &Path) -> Result<(Vec<String>, Design)> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let names: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let m = names.len();
    let mut data = Vec::new();
    let mut n = 0;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != m {
            return Err(Error::Parse(format!("row {}: {} fields, header has {m}", i + 1, rec.len())));
        }
        for (c, field) in rec.iter().enumerate() {
            data.push(parse_f64(field, || format!("row {}, column {}", i + 1, names[c]))?);
        }
        n += 1;
    }
    Ok((names, Design::dense_from_rows(n, m, &data)?))
}

pub fn write_dense_csv(path: &Path, names: &[String], x: &Design) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(names)?;
    for r in 0..x.nrows() {
        w.write_record(x.row(r).iter().map(f64::to_string))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a `matrix coordinate` file with `real`, `integer` or `pattern`
/// entries in `general` symmetry.
pub fn read_matrix_market(path: &Path) -> Result<CscMatrix> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty MatrixMarket file".into()))??;
    let tokens: Vec<String> = header.split_whitespace().map(str::to_lowercase).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" || tokens[2] != "coordinate" {
        return Err(Error::Parse(format!("unsupported MatrixMarket header: {header:?}")));
    }
    let pattern = match tokens[3].as_str() {
        "real" | "integer" => false,
        "pattern" => true,
        f => return Err(Error::Parse(format!("unsupported MatrixMarket field {f:?}"))),
    };
    if tokens[4] != "general" {
        return Err(Error::Parse(format!("unsupported MatrixMarket symmetry {:?}", tokens[4])));
    }
    let mut size: Option<(usize, usize, usize)> = None;
    let mut triplets = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let f: Vec<&str> = t.split_whitespace().collect();
        let lineno = k + 2;
        let idx = |s: &str| -> Result<usize> {
            s.parse()
                .map_err(|_| Error::Parse(format!("line {lineno}: bad index {s:?}")))
        };
        match size {
            None => {
                if f.len() != 3 {
                    return Err(Error::Parse(format!("line {lineno}: expected size line")));
                }
                size = Some((idx(f[0])?, idx(f[1])?, idx(f[2])?));
                triplets.reserve(size.unwrap().2);
            }
            Some((nr, nc, _)) => {
                if f.len() != if pattern { 2 } else { 3 } {
                    return Err(Error::Parse(format!("line {lineno}: wrong number of fields")));
                }
                let (r, c) = (idx(f[0])?, idx(f[1])?);
                if r == 0 || c == 0 || r > nr || c > nc {
                    return Err(Error::Parse(format!("line {lineno}: entry ({r}, {c}) outside {nr}x{nc}")));
                }
                let v = if pattern {
                    1.0
                } else {
                    parse_f64(f[2], || format!("line {lineno}"))?
                };
                triplets.push((r - 1, c - 1, v));
            }
        }
    }
    let (nr, nc, nnz) = size.ok_or_else(|| Error::Parse("missing MatrixMarket size line".into()))?;
    if triplets.len() != nnz {
        return Err(Error::Parse(format!("size line declares {nnz} entries, found {}", triplets.len())));
    }
    CscMatrix::from_triplets(nr, nc, &triplets)
}

/// Writes in column-major entry order.
pub fn write_matrix_market(path: &Path, x: &CscMatrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", x.nrows(), x.ncols(), x.nnz())?;
    for (r, c, v) in x.triplets() {
        writeln!(w, "{} {} {}", r + 1, c + 1, v)?;
    }
    w.flush()?;
    Ok(())
}

/// Errors unless every stored value is 0 or 1.
pub fn check_binary(x: &CscMatrix) -> Result<()> {
    match x.triplets().find(|&(_, _, v)| v != 0.0 && v != 1.0) {
        Some((r, c, v)) => Err(Error::Parse(format!(
            "non-binary value {v} at ({}, {}) in a matrix asserted binary",
            r + 1,
            c + 1
        ))),
        None => Ok(()),
    }
}

/// One 0/1 label per line; a non-numeric first line is taken as a header.
pub fn read_labels(path: &Path) -> Result<Vec<bool>> {
    let mut text = String::new();
    File::open(path)?.read_to_string(&mut text)?;
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let t = line.trim().trim_matches('"');
        if t.is_empty() {
            continue;
        }
        match t {
            "1" | "1.0" => out.push(true),
            "0" | "0.0" => out.push(false),
            _ if k == 0 && t.parse::<f64>().is_err() => {}
            _ => return Err(Error::NonBinaryLabels(format!("line {}: {t:?}", k + 1))),
        }
    }
    Ok(out)
}

pub fn write_labels(path: &Path, name: &str, z: &[bool]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{name}")?;
    for &v in z {
        writeln!(w, "{}", u8::from(v))?;
    }
    w.flush()?;
    Ok(())
}

/// Column names one per line.
pub fn read_names(path: &Path) -> Result<Vec<String>> {
    let mut text = String::new();
    File::open(path)?.read_to_string(&mut text)?;
    Ok(text.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect())
}

/// Default names `x1, x2, ...` for headerless inputs.
pub fn default_names(m: usize) -> Vec<String> {
    (1..=m).map(|c| format!("x{c}")).collect()
}

/// Tab-separated `column_name  group_id  [weight]`, one line per column.
/// Lines starting with `#` and a leading `column_name` header are skipped.
/// Every column must be listed exactly once; groups are ordered by first
/// appearance and default to weight `sqrt(|g|)`.
pub fn parse_groups(text: &str, columns: &[String]) -> Result<GroupSpec> {
    let position: HashMap<&str, usize> = columns.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
    let mut label: Vec<Option<String>> = vec![None; columns.len()];
    let mut weight: Vec<Option<f64>> = vec![None; columns.len()];
    let mut order: Vec<usize> = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let t = line.trim_end_matches('\r');
        if t.trim().is_empty() || t.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = t.split('\t').map(str::trim).collect();
        if order.is_empty() && f[0] == "column_name" && !position.contains_key("column_name") {
            continue;
        }
        let bad = |m: String| Error::InvalidGroups(format!("line {}: {m}", k + 1));
        if !(2..=3).contains(&f.len()) || f[1].is_empty() {
            return Err(bad("expected column_name<TAB>group_id[<TAB>weight]".into()));
        }
        let &c = position.get(f[0]).ok_or_else(|| bad(format!("unknown column {:?}", f[0])))?;
        if label[c].is_some() {
            return Err(bad(format!("column {:?} listed twice", f[0])));
        }
        label[c] = Some(f[1].to_string());
        if f.len() == 3 && !f[2].is_empty() {
            let w: f64 = f[2].parse().map_err(|_| bad(format!("bad weight {:?}", f[2])))?;
            weight[c] = Some(w);
        }
        order.push(c);
    }
    if let Some(c) = label.iter().position(Option::is_none) {
        return Err(Error::InvalidGroups(format!("column {:?} has no group", columns[c])));
    }
    // groups are numbered by first appearance in the file, members sorted
    let mut first: Vec<&str> = Vec::new();
    let mut members: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut overrides: BTreeMap<usize, f64> = BTreeMap::new();
    for &c in &order {
        let l = label[c].as_deref().unwrap();
        let j = first.iter().position(|x| *x == l).unwrap_or_else(|| {
            first.push(l);
            first.len() - 1
        });
        members.entry(j).or_default().push(c);
        if let Some(w) = weight[c] {
            if overrides.insert(j, w).is_some_and(|o| o != w) {
                return Err(Error::InvalidGroups(format!("conflicting weights for group {l:?}")));
            }
        }
    }
    let mut groups = Vec::new();
    let mut weights = Vec::new();
    for (j, mut g) in members {
        g.sort_unstable();
        weights.push(overrides.get(&j).copied().unwrap_or((g.len() as f64).sqrt()));
        groups.push(g);
    }
    GroupSpec::new(groups, Some(weights))
}

pub fn read_groups(path: &Path, columns: &[String]) -> Result<GroupSpec> {
    let mut text = String::new();
    File::open(path)?.read_to_string(&mut text)?;
    parse_groups(&text, columns)
}

pub fn write_groups(path: &Path, columns: &[String], groups: &GroupSpec) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "column_name\tgroup_id\tweight")?;
    for (j, g) in groups.iter().enumerate() {
        for &c in g {
            writeln!(w, "{}\tg{}\t{}", columns[c], j + 1, groups.weight(j))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// One indicator column produced by categorical ingest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorColumn {
    pub name: String,
    pub source: String,
    /// Levels mapped to this indicator (several for the merged rare column).
    pub levels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceColumn {
    pub name: String,
    pub reference: String,
    /// Levels with counts below this were merged.
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnMap {
    pub sources: Vec<SourceColumn>,
    pub columns: Vec<IndicatorColumn>,
}

#[derive(Debug, Clone)]
pub struct Categorical {
    pub x: CscMatrix,
    pub map: ColumnMap,
    /// One group per source column.
    pub groups: GroupSpec,
}

impl Categorical {
    pub fn names(&self) -> Vec<String> {
        self.map.columns.iter().map(|c| c.name.clone()).collect()
    }
}

/// One-hot encodes a table of categorical columns. The levels found in row
/// `reference_row` (0-based, after the header) are the reference levels.
/// Non-reference levels seen fewer than `min(100, 1%` of the column's
/// non-reference count`)` times, or fewer than `min_count` when given, are
/// merged into one `<column>=other` indicator.
pub fn ingest_categorical(path: &Path, reference_row: usize, min_count: Option<f64>) -> Result<Categorical> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let names: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let mut rows: Vec<Vec<String>> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != names.len() {
            return Err(Error::Parse(format!("row {}: {} fields, header has {}", i + 1, rec.len(), names.len())));
        }
        rows.push(rec.iter().map(|f| f.trim().to_string()).collect());
    }
    let reference = rows.get(reference_row).ok_or_else(|| {
        Error::Parse(format!("reference row {reference_row} beyond the {} data rows", rows.len()))
    })?;
    let reference = reference.clone();

    let mut sources = Vec::new();
    let mut columns = Vec::new();
    let mut group_of = Vec::new();
    let mut triplets = Vec::new();
    for (c, col) in names.iter().enumerate() {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for r in &rows {
            *counts.entry(r[c].as_str()).or_default() += 1;
        }
        let reference_level = reference[c].as_str();
        let non_ref: usize = counts.iter().filter(|(l, _)| **l != reference_level).map(|(_, n)| n).sum();
        let threshold = min_count.unwrap_or_else(|| (0.01 * non_ref as f64).min(100.0));
        // levels in first-appearance order keep the output stable and readable
        let mut seen: Vec<&str> = Vec::new();
        for r in &rows {
            let l = r[c].as_str();
            if l != reference_level && !seen.contains(&l) {
                seen.push(l);
            }
        }
        let (common, rare): (Vec<&str>, Vec<&str>) = seen.into_iter().partition(|l| counts[l] as f64 >= threshold);
        let mut index_of: HashMap<&str, usize> = HashMap::new();
        for l in &common {
            index_of.insert(l, columns.len());
            columns.push(IndicatorColumn {
                name: format!("{col}={l}"),
                source: col.clone(),
                levels: vec![l.to_string()],
            });
            group_of.push(c);
        }
        if !rare.is_empty() {
            for l in &rare {
                index_of.insert(l, columns.len());
            }
            columns.push(IndicatorColumn {
                name: format!("{col}=other"),
                source: col.clone(),
                levels: rare.iter().map(|l| l.to_string()).collect(),
            });
            group_of.push(c);
        }
        for (i, r) in rows.iter().enumerate() {
            if let Some(&k) = index_of.get(r[c].as_str()) {
                triplets.push((i, k, 1.0));
            }
        }
        sources.push(SourceColumn {
            name: col.clone(),
            reference: reference_level.to_string(),
            threshold,
        });
    }
    let x = CscMatrix::from_triplets(rows.len(), columns.len(), &triplets)?;
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); names.len()];
    for (k, &c) in group_of.iter().enumerate() {
        groups[c].push(k);
    }
    groups.retain(|g| !g.is_empty());
    Ok(Categorical {
        x,
        map: ColumnMap { sources, columns },
        groups: GroupSpec::new(groups, None)?,
    })
}

/// One row of a coefficient-path file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub lambda: f64,
    pub objective: f64,
    pub active_groups: usize,
    pub converged: bool,
    /// Original-scale coefficients, intercept first.
    pub theta: Vec<f64>,
}

impl From<&FitResult> for PathRecord {
    fn from(f: &FitResult) -> Self {
        Self {
            lambda: f.lambda,
            objective: f.objective,
            active_groups: f.active_groups.len(),
            converged: f.converged,
            theta: f.theta.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientPath {
    /// Feature column names (without the intercept).
    pub names: Vec<String>,
    pub records: Vec<PathRecord>,
}

const PATH_FIXED: [&str; 5] = ["lambda", "objective", "active_groups", "converged", "(intercept)"];

pub fn write_path(path: &Path, p: &CoefficientPath) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(PATH_FIXED.iter().map(|s| s.to_string()).chain(p.names.iter().cloned()))?;
    for r in &p.records {
        let mut row = vec![
            r.lambda.to_string(),
            r.objective.to_string(),
            r.active_groups.to_string(),
            u8::from(r.converged).to_string(),
        ];
        row.extend(r.theta.iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_path(path: &Path) -> Result<CoefficientPath> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(String::from).collect();
    if header.len() < PATH_FIXED.len() || header[..PATH_FIXED.len()] != PATH_FIXED {
        return Err(Error::Parse("not a coefficient path file".into()));
    }
    let names = header[PATH_FIXED.len()..].to_vec();
    let mut records = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let at = || format!("path row {}", i + 1);
        if rec.len() != header.len() {
            return Err(Error::Parse(format!("{}: wrong field count", at())));
        }
        let theta = (4..rec.len()).map(|k| parse_f64(&rec[k], at)).collect::<Result<Vec<_>>>()?;
        records.push(PathRecord {
            lambda: parse_f64(&rec[0], at)?,
            objective: parse_f64(&rec[1], at)?,
            active_groups: rec[2].parse().map_err(|_| Error::Parse(format!("{}: bad group count", at())))?,
            converged: &rec[3] == "1",
            theta,
        });
    }
    Ok(CoefficientPath { names, records })
}

/// Hex SHA-256 of a file's bytes.
pub fn digest_file(path: &Path) -> Result<String> {
    let mut h = Sha256::new();
    let mut f = File::open(path)?;
    let mut buf = [0u8; 1 << 16];
    loop {
        let k = f.read(&mut buf)?;
        if k == 0 {
            break;
        }
        h.update(&buf[..k]);
    }
    Ok(hex::encode(h.finalize()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// Provenance of one run. Written next to every output as
/// `<output>.manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<String>,
    pub version: String,
    /// Wall-clock seconds per phase.
    pub timings: BTreeMap<String, f64>,
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value, seed: Option<u64>) -> Self {
        Self {
            command: command.to_string(),
            config,
            seed,
            inputs: Vec::new(),
            outputs: Vec::new(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            timings: BTreeMap::new(),
        }
    }

    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        self.inputs.push(InputDigest {
            path: path.display().to_string(),
            sha256: digest_file(path)?,
        });
        Ok(())
    }

    pub fn sidecar(output: &Path) -> PathBuf {
        let mut s = output.as_os_str().to_owned();
        s.push(".manifest.json");
        PathBuf::from(s)
    }

    /// Records `output` and writes the manifest beside it.
    pub fn write_for(&mut self, output: &Path) -> Result<PathBuf> {
        let o = output.display().to_string();
        if !self.outputs.contains(&o) {
            self.outputs.push(o);
        }
        let target = Self::sidecar(output);
        let mut w = BufWriter::new(File::create(&target)?);
        serde_json::to_writer_pretty(&mut w, self)?;
        writeln!(w)?;
        w.flush()?;
        Ok(target)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn dense_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        fs::write(&p, "a,b\n1.5,-2\n0.1,3e-7\n").unwrap();
        let (n, x) = read_dense_csv(&p).unwrap();
        assert_eq!(n, names(&["a", "b"]));
        assert_eq!(x.get(1, 1), 3e-7);
        let q = dir.path().join("y.csv");
        write_dense_csv(&q, &n, &x).unwrap();
        let (n2, x2) = read_dense_csv(&q).unwrap();
        assert_eq!(n, n2);
        assert_eq!(x.to_dense(), x2.to_dense());
        fs::write(&p, "a,b\n1,zz\n").unwrap();
        assert!(matches!(read_dense_csv(&p), Err(Error::Parse(_))));
    }

    #[test]
    fn matrix_market_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.mtx");
        fs::write(
            &p,
            "%%MatrixMarket matrix coordinate real general\n% comment\n3 2 3\n3 1 0.1\n1 1 -2.5\n2 2 1e-300\n",
        )
        .unwrap();
        let x = read_matrix_market(&p).unwrap();
        assert_eq!(x.nnz(), 3);
        let q = dir.path().join("y.mtx");
        write_matrix_market(&q, &x).unwrap();
        let y = read_matrix_market(&q).unwrap();
        assert_eq!(x, y);
        assert!(check_binary(&x).is_err());
        fs::write(&p, "%%MatrixMarket matrix coordinate pattern general\n2 2 1\n2 1\n").unwrap();
        let b = read_matrix_market(&p).unwrap();
        assert!(check_binary(&b).is_ok());
        fs::write(&p, "%%MatrixMarket matrix array real general\n1 1\n1\n").unwrap();
        assert!(read_matrix_market(&p).is_err());
        fs::write(&p, "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n").unwrap();
        assert!(read_matrix_market(&p).is_err());
    }

    #[test]
    fn labels() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("z.csv");
        fs::write(&p, "z\n1\n0\n1\n").unwrap();
        assert_eq!(read_labels(&p).unwrap(), vec![true, false, true]);
        fs::write(&p, "1\n0\n2\n").unwrap();
        assert!(matches!(read_labels(&p), Err(Error::NonBinaryLabels(_))));
        write_labels(&p, "z", &[false, true]).unwrap();
        assert_eq!(read_labels(&p).unwrap(), vec![false, true]);
    }

    #[test]
    fn group_files() {
        let cols = names(&["a", "b", "c", "d"]);
        let g = parse_groups("column_name\tgroup_id\tweight\na\tg1\nc\tg2\t3\nb\tg1\nd\tg2\n", &cols).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g.group(0), &[0, 1]);
        assert_eq!(g.group(1), &[2, 3]);
        assert!((g.weight(0) - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(g.weight(1), 3.0);
        assert!(parse_groups("a\tg1\nb\tg1\nc\tg2\n", &cols).is_err());
        assert!(parse_groups("a\tg1\na\tg1\nb\tg1\nc\tg1\nd\tg1\n", &cols).is_err());
        assert!(parse_groups("a\tg1\nb\tg1\nc\tg1\nzz\tg1\n", &cols).is_err());
        assert!(parse_groups("a g1\nb\tg1\nc\tg1\nd\tg1\n", &cols).is_err());
        assert!(parse_groups("a\tg1\t1\nb\tg1\t2\nc\tg1\nd\tg1\n", &cols).is_err());

        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.tsv");
        write_groups(&p, &cols, &g).unwrap();
        assert_eq!(read_groups(&p, &cols).unwrap(), g);
    }

    #[test]
    fn categorical_encoding() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        fs::write(&p, "color\nA\nB\nC\nA\nB\nC\n").unwrap();
        let c = ingest_categorical(&p, 0, None).unwrap();
        assert_eq!(c.names(), names(&["color=B", "color=C"]));
        assert_eq!(c.x.to_dense().column(0).to_vec(), vec![0.0, 1.0, 0.0, 0.0, 1.0, 0.0]);
        assert_eq!(c.groups.len(), 1);
        assert_eq!(c.map.sources[0].reference, "A");
    }

    #[test]
    fn rare_levels_are_merged() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        // 300 non-reference entries: threshold min(100, 3) = 3
        let mut body = String::from("code,site\n");
        for i in 0..400 {
            let code = match i {
                0..=99 => "ref",
                100..=249 => "big",
                250..=397 => "mid",
                398 => "r1",
                _ => "r2",
            };
            body.push_str(&format!("{code},s{}\n", i % 2));
        }
        fs::write(&p, body).unwrap();
        let c = ingest_categorical(&p, 0, None).unwrap();
        assert_eq!(c.map.sources[0].threshold, 3.0);
        assert_eq!(c.names(), names(&["code=big", "code=mid", "code=other", "site=s1"]));
        let other = &c.map.columns[2];
        assert_eq!(other.levels, names(&["r1", "r2"]));
        let dense = c.x.to_dense();
        assert_eq!(dense.column(2).sum(), 2.0);
        assert_eq!(c.groups.group(0), &[0, 1, 2]);
        assert_eq!(c.groups.group(1), &[3]);
        assert!(ingest_categorical(&p, 1000, None).is_err());
    }

    #[test]
    fn path_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("path.csv");
        let cp = CoefficientPath {
            names: names(&["a", "b"]),
            records: vec![
                PathRecord {
                    lambda: 0.3,
                    objective: 0.693_147_180_559_945_3,
                    active_groups: 0,
                    converged: true,
                    theta: vec![-0.1, 0.0, 0.0],
                },
                PathRecord {
                    lambda: 0.1 / 3.0,
                    objective: 0.5,
                    active_groups: 2,
                    converged: false,
                    theta: vec![1.0 / 7.0, -2e-17, 5.5],
                },
            ],
        };
        write_path(&p, &cp).unwrap();
        assert_eq!(read_path(&p).unwrap(), cp);
    }

    #[test]
    fn manifest_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("in.txt");
        fs::write(&input, "abc").unwrap();
        let out = dir.path().join("out.csv");
        fs::write(&out, "x").unwrap();
        let mut m = RunManifest::new("fit", serde_json::json!({"n_lambda": 3}), Some(7));
        m.add_input(&input).unwrap();
        assert_eq!(
            m.inputs[0].sha256,
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        let side = m.write_for(&out).unwrap();
        assert!(side.to_string_lossy().ends_with("out.csv.manifest.json"));
        let back: RunManifest = serde_json::from_str(&fs::read_to_string(side).unwrap()).unwrap();
        assert_eq!(back, m);
    }
}
