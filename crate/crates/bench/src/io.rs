//! Dataset files and convergence-trace CSVs.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use iprox::objectives::{ObservedSignMatrix, RegressionDataset};
use iprox::solvers::IterationTrace;
use iprox::{DenseMatrix, DenseVector};

use crate::error::{BenchError, Result};

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| BenchError::Io { path: path.display().to_string(), source })
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|source| BenchError::Io { path: path.display().to_string(), source })
}

fn parse_f64(field: &str, line: u64, what: &str) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|e| BenchError::Parse { line, msg: format!("{what} '{field}': {e}") })
}

/// Reads a regression CSV: a header row, then `target,feature_1,…` per sample.
pub fn load_regression_csv(path: &Path) -> Result<RegressionDataset> {
    read_regression_csv(open(path)?)
}

pub fn read_regression_csv<R: Read>(reader: R) -> Result<RegressionDataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let width = rdr.headers()?.len();
    if width < 2 {
        return Err(BenchError::Parse { line: 1, msg: "need a target column and at least one feature".into() });
    }
    let mut targets = Vec::new();
    let mut data = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != width {
            return Err(BenchError::Parse {
                line,
                msg: format!("expected {width} fields, found {}", record.len()),
            });
        }
        targets.push(parse_f64(&record[0], line, "target")?);
        for field in record.iter().skip(1) {
            data.push(parse_f64(field, line, "feature")?);
        }
    }
    if targets.is_empty() {
        return Err(BenchError::InvalidArgument("regression file has no samples".into()));
    }
    let design = DenseMatrix::new(targets.len(), width - 1, data)?;
    Ok(RegressionDataset::new(design, DenseVector::new(targets)?)?)
}

pub fn write_regression_csv(path: &Path, data: &RegressionDataset) -> Result<()> {
    write_regression_to(create(path)?, data)
}

pub fn write_regression_to<W: Write>(writer: W, data: &RegressionDataset) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let d = data.n_features();
    let mut header = vec!["target".to_string()];
    header.extend((1..=d).map(|j| format!("x{j}")));
    w.write_record(&header)?;
    for i in 0..data.n_samples() {
        let mut row = vec![format_float(data.targets()[i])];
        row.extend(data.design().row(i).iter().map(|&v| format_float(v)));
        w.write_record(&row)?;
    }
    w.flush().map_err(|source| BenchError::Io { path: "<writer>".into(), source })?;
    Ok(())
}

/// Reads a sign-triplet file: `n_users` on the first line, then `i j s` lines
/// with 0-based indices and `s ∈ {+1, −1}`. Blank lines are skipped.
pub fn load_sign_triplets(path: &Path) -> Result<ObservedSignMatrix> {
    read_sign_triplets(open(path)?)
}

pub fn read_sign_triplets<R: Read>(reader: R) -> Result<ObservedSignMatrix> {
    let mut n_users = None;
    let mut seen = HashSet::new();
    let mut obs = Vec::new();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = idx as u64 + 1;
        let line = line.map_err(|source| BenchError::Io { path: "<reader>".into(), source })?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let parse_err = |msg: String| BenchError::Parse { line: line_no, msg };
        let Some(n) = n_users else {
            if fields.len() != 1 {
                return Err(parse_err("first line must hold n_users alone".into()));
            }
            let n: usize = fields[0].parse().map_err(|e| parse_err(format!("n_users: {e}")))?;
            n_users = Some(n);
            continue;
        };
        if fields.len() != 3 {
            return Err(parse_err(format!("expected 'i j s', found {} fields", fields.len())));
        }
        let i: usize = fields[0].parse().map_err(|e| parse_err(format!("row index: {e}")))?;
        let j: usize = fields[1].parse().map_err(|e| parse_err(format!("column index: {e}")))?;
        let s: i8 = match fields[2] {
            "1" | "+1" => 1,
            "-1" => -1,
            other => return Err(parse_err(format!("sign must be +1 or -1, found '{other}'"))),
        };
        if i >= n || j >= n {
            return Err(BenchError::InvalidArgument(format!(
                "line {line_no}: entry ({i}, {j}) outside a {n}x{n} matrix"
            )));
        }
        if !seen.insert((i, j)) {
            return Err(parse_err(format!("duplicate entry ({i}, {j})")));
        }
        obs.push((i, j, s));
    }
    let n = n_users.ok_or_else(|| BenchError::Parse { line: 1, msg: "empty triplet file".into() })?;
    Ok(ObservedSignMatrix::new(n, obs)?)
}

pub fn write_sign_triplets(path: &Path, m: &ObservedSignMatrix) -> Result<()> {
    write_sign_triplets_to(create(path)?, m)
}

pub fn write_sign_triplets_to<W: Write>(mut writer: W, m: &ObservedSignMatrix) -> Result<()> {
    let io = |source| BenchError::Io { path: "<writer>".into(), source };
    writeln!(writer, "{}", m.n_users()).map_err(io)?;
    for &(i, j, s) in m.observations() {
        writeln!(writer, "{i} {j} {s}").map_err(io)?;
    }
    writer.flush().map_err(io)
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

pub const TRACE_HEADER: [&str; 10] = [
    "run_id",
    "solver",
    "k",
    "time_s",
    "objective",
    "step_norm_sq",
    "eps_k",
    "certified_eps",
    "inner_iters",
    "branch",
];

/// Branch label of the `k = 0` row.
pub const INIT_BRANCH: &str = "init";
/// Branch label of the row appended after an aborted run.
pub const FAILURE_BRANCH: &str = "failed";

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub run_id: String,
    pub solver: String,
    pub k: usize,
    pub time_s: f64,
    pub objective: f64,
    pub step_norm_sq: f64,
    pub eps_k: f64,
    pub certified_eps: f64,
    pub inner_iters: usize,
    pub branch: String,
}

impl TraceRow {
    fn fields(&self) -> [String; 10] {
        [
            self.run_id.clone(),
            self.solver.clone(),
            self.k.to_string(),
            format_float(self.time_s),
            format_float(self.objective),
            format_float(self.step_norm_sq),
            format_float(self.eps_k),
            format_float(self.certified_eps),
            self.inner_iters.to_string(),
            self.branch.clone(),
        ]
    }

    /// Equality ignoring `time_s`, NaN-aware.
    pub fn same_values(&self, other: &TraceRow) -> bool {
        let eq = |a: f64, b: f64| a.to_bits() == b.to_bits();
        self.run_id == other.run_id
            && self.solver == other.solver
            && self.k == other.k
            && eq(self.objective, other.objective)
            && eq(self.step_norm_sq, other.step_norm_sq)
            && eq(self.eps_k, other.eps_k)
            && eq(self.certified_eps, other.certified_eps)
            && self.inner_iters == other.inner_iters
            && self.branch == other.branch
    }
}

/// Convergence traces of one or more runs: a `k = 0` row with the initial
/// objective, one row per iteration, and a trailing `failed` row for aborted runs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TraceFile {
    pub rows: Vec<TraceRow>,
}

impl TraceFile {
    pub fn push_trace(&mut self, run_id: &str, solver: &str, trace: &IterationTrace) {
        let row = |k, time_s, objective, step, eps, cert, inner, branch: &str| TraceRow {
            run_id: run_id.to_string(),
            solver: solver.to_string(),
            k,
            time_s,
            objective,
            step_norm_sq: step,
            eps_k: eps,
            certified_eps: cert,
            inner_iters: inner,
            branch: branch.to_string(),
        };
        self.rows.push(row(0, 0.0, trace.initial_objective, 0.0, 0.0, 0.0, 0, INIT_BRANCH));
        for r in &trace.records {
            self.rows.push(row(
                r.k,
                r.wall_seconds,
                r.objective,
                r.step_norm_sq,
                r.eps_k,
                r.certified_eps,
                r.inner_iters,
                r.branch.as_str(),
            ));
        }
        if trace.failure.is_some() {
            let k = trace.records.len() + 1;
            let t = trace.records.last().map_or(0.0, |r| r.wall_seconds);
            self.rows.push(row(k, t, f64::NAN, f64::NAN, f64::NAN, f64::NAN, 0, FAILURE_BRANCH));
        }
    }

    pub fn runs(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.run_id.as_str()) {
                out.push(&r.run_id);
            }
        }
        out
    }

    pub fn rows_for<'a>(&'a self, run_id: &'a str) -> impl Iterator<Item = &'a TraceRow> + 'a {
        self.rows.iter().filter(move |r| r.run_id == run_id)
    }

    /// Equality ignoring the `time_s` column.
    pub fn same_values(&self, other: &TraceFile) -> bool {
        self.rows.len() == other.rows.len()
            && self.rows.iter().zip(&other.rows).all(|(a, b)| a.same_values(b))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        self.write_to(create(path)?)
    }

    pub fn write_to<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(TRACE_HEADER)?;
        for r in &self.rows {
            w.write_record(r.fields())?;
        }
        w.flush().map_err(|source| BenchError::Io { path: "<writer>".into(), source })?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::read_from(open(path)?)
    }

    pub fn read_from<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if header != TRACE_HEADER {
            return Err(BenchError::Parse { line: 1, msg: format!("unexpected header {header:?}") });
        }
        let mut rows = Vec::new();
        for record in rdr.records() {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line());
            let int = |i: usize, what: &str| -> Result<usize> {
                record[i]
                    .parse()
                    .map_err(|e| BenchError::Parse { line, msg: format!("{what} '{}': {e}", &record[i]) })
            };
            rows.push(TraceRow {
                run_id: record[0].to_string(),
                solver: record[1].to_string(),
                k: int(2, "k")?,
                time_s: parse_f64(&record[3], line, "time_s")?,
                objective: parse_f64(&record[4], line, "objective")?,
                step_norm_sq: parse_f64(&record[5], line, "step_norm_sq")?,
                eps_k: parse_f64(&record[6], line, "eps_k")?,
                certified_eps: parse_f64(&record[7], line, "certified_eps")?,
                inner_iters: int(8, "inner_iters")?,
                branch: record[9].to_string(),
            });
        }
        Ok(Self { rows })
    }
}
