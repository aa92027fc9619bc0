//! Running a scenario end to end and the on-disk report tree:
//!
//! ```text
//! <out>/report/manifest           JSON: digest, seed, version, scenario
//! <out>/report/ensemble.csv
//! <out>/report/concentration.csv
//! <out>/report/checks.csv
//! <out>/report/paths/path_<i>.csv
//! <out>/report/plot/<metric>.csv  (report --plot-data)
//! ```

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path as FsPath, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diagnostics::{CheckInput, CheckRow, ConcentrationReport, Verdict};
use crate::error::{Error, Result};
use crate::harness::{
    export_checks_csv, export_concentration_csv, export_path_csv, export_stats_csv, num, run_ensemble,
    EnsembleRun, EnsembleStats, Execution, CHECKS_HEADER, ENSEMBLE_HEADER, PATH_PREFIXES,
};
use crate::integrator::Path;
use crate::linalg::Vector;
use crate::scenario::Scenario;

pub const VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub run: EnsembleRun,
    pub stats: EnsembleStats,
    pub rows: Vec<CheckRow>,
    pub concentration: Option<ConcentrationReport>,
}

impl RunOutcome {
    pub fn violated(&self) -> bool {
        self.rows.iter().any(|r| r.verdict == Verdict::Violated)
    }
}

/// Simulate the ensemble and evaluate every configured check.
pub fn execute(scenario: &Scenario, execution: Execution) -> Result<RunOutcome> {
    let cfg = scenario.ensemble.clone().with_execution(execution);
    let run = run_ensemble(&scenario.experiment, &cfg)?;
    let stats = run.stats(&scenario.digest)?;
    let integ = &scenario.experiment.integrator;
    let input = CheckInput {
        tables: &run.tables,
        op: integ.op(),
        noise: integ.noise(),
        tik: integ.tikhonov(),
        x0: &scenario.experiment.x0,
        grid: integ.grid(),
    };
    let mut rows = Vec::new();
    let mut concentration = None;
    for check in &scenario.checks {
        let result = check.evaluate(&input)?;
        rows.extend(result.rows);
        if result.concentration.is_some() {
            concentration = result.concentration;
        }
    }
    Ok(RunOutcome {
        run,
        stats,
        rows,
        concentration,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub name: String,
    pub digest: String,
    pub master_seed: u64,
    pub n_paths: usize,
    pub h: f64,
    pub t_end: f64,
    pub thin: usize,
    pub retained_paths: usize,
    /// Canonical encoding of the scenario that produced the run.
    pub scenario: String,
}

impl Manifest {
    pub fn new(scenario: &Scenario, outcome: &RunOutcome) -> Self {
        let grid = scenario.experiment.integrator.grid();
        Manifest {
            version: VERSION.into(),
            name: scenario.name.clone(),
            digest: scenario.digest.clone(),
            master_seed: scenario.ensemble.master_seed,
            n_paths: scenario.ensemble.n_paths,
            h: grid.h(),
            t_end: grid.t_end(),
            thin: scenario.thin,
            retained_paths: outcome.run.retained.len(),
            scenario: scenario.file.to_canonical_toml(),
        }
    }
}

/// Writes `<out>/report/...` and returns the report directory.
pub fn write_report(out: &FsPath, scenario: &Scenario, outcome: &RunOutcome) -> Result<PathBuf> {
    let dir = out.join("report");
    let paths_dir = dir.join("paths");
    fs::create_dir_all(&paths_dir)?;
    let create = |p: PathBuf| -> Result<BufWriter<File>> { Ok(BufWriter::new(File::create(p)?)) };
    export_stats_csv(&outcome.stats, create(dir.join("ensemble.csv"))?)?;
    export_concentration_csv(outcome.concentration.as_ref(), create(dir.join("concentration.csv"))?)?;
    export_checks_csv(&outcome.rows, create(dir.join("checks.csv"))?)?;
    for (i, path) in outcome.run.retained.iter().enumerate() {
        export_path_csv(path, scenario.thin, create(paths_dir.join(format!("path_{i}.csv")))?)?;
    }
    let manifest = serde_json::to_string_pretty(&Manifest::new(scenario, outcome)).map_err(std::io::Error::other)?;
    fs::write(dir.join("manifest"), manifest + "\n")?;
    Ok(dir)
}

/// Per-metric ensemble means read back from `ensemble.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanSeries {
    pub metric: String,
    pub times: Vec<f64>,
    pub mean: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StoredReport {
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub rows: Vec<CheckRow>,
    pub series: Vec<MeanSeries>,
}

impl StoredReport {
    pub fn violated(&self) -> bool {
        self.rows.iter().any(|r| r.verdict == Verdict::Violated)
    }
}

fn bad_csv(file: &str, line: usize, message: &str) -> Error {
    Error::Parse {
        line,
        col: 1,
        message: format!("{file}: {message}"),
    }
}

fn field(file: &str, line: usize, s: &str) -> Result<f64> {
    s.parse::<f64>().map_err(|_| bad_csv(file, line, &format!("not a number: {s:?}")))
}

/// Accepts either the run's output directory or its `report/` subdirectory.
pub fn read_report(dir: &FsPath) -> Result<StoredReport> {
    let dir = if dir.join("manifest").is_file() {
        dir.to_path_buf()
    } else {
        dir.join("report")
    };
    let manifest_path = dir.join("manifest");
    if !manifest_path.is_file() {
        return Err(Error::MissingManifest(dir.display().to_string()));
    }
    let manifest: Manifest = serde_json::from_str(&fs::read_to_string(&manifest_path)?).map_err(|e| Error::Parse {
        line: e.line(),
        col: e.column(),
        message: format!("manifest: {e}"),
    })?;
    let rows = parse_checks_csv(&fs::read_to_string(dir.join("checks.csv"))?)?;
    let series = parse_ensemble_csv(&fs::read_to_string(dir.join("ensemble.csv"))?)?;
    Ok(StoredReport {
        dir,
        manifest,
        rows,
        series,
    })
}

pub fn parse_checks_csv(text: &str) -> Result<Vec<CheckRow>> {
    let mut lines = text.lines().enumerate();
    if lines.next().map(|(_, l)| l) != Some(CHECKS_HEADER) {
        return Err(bad_csv("checks.csv", 1, "unexpected header"));
    }
    lines
        .map(|(i, line)| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 5 {
                return Err(bad_csv("checks.csv", i + 1, "expected 5 fields"));
            }
            Ok(CheckRow {
                check: f[0].into(),
                item: f[1].into(),
                bound: field("checks.csv", i + 1, f[2])?,
                observed: field("checks.csv", i + 1, f[3])?,
                verdict: Verdict::parse(f[4]).ok_or_else(|| bad_csv("checks.csv", i + 1, "unknown verdict"))?,
            })
        })
        .collect()
}

pub fn parse_ensemble_csv(text: &str) -> Result<Vec<MeanSeries>> {
    let mut lines = text.lines().enumerate();
    if lines.next().map(|(_, l)| l) != Some(ENSEMBLE_HEADER) {
        return Err(bad_csv("ensemble.csv", 1, "unexpected header"));
    }
    let mut out: Vec<MeanSeries> = Vec::new();
    for (i, line) in lines {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(bad_csv("ensemble.csv", i + 1, "expected 7 fields"));
        }
        let (t, mean) = (field("ensemble.csv", i + 1, f[0])?, field("ensemble.csv", i + 1, f[2])?);
        match out.last_mut() {
            Some(s) if s.metric == f[1] => {
                s.times.push(t);
                s.mean.push(mean);
            }
            _ => out.push(MeanSeries {
                metric: f[1].into(),
                times: vec![t],
                mean: vec![mean],
            }),
        }
    }
    Ok(out)
}

/// Rebuild a path from its CSV; `db` stays empty.
pub fn parse_path_csv(text: &str, h: f64) -> Result<Path> {
    let file = "path csv";
    let mut lines = text.lines().enumerate();
    let header: Vec<&str> = lines.next().map(|(_, l)| l.split(',').collect()).unwrap_or_default();
    let width = header.len().saturating_sub(1);
    let d = width / PATH_PREFIXES.len();
    let expected: Vec<String> = std::iter::once("t".to_string())
        .chain(PATH_PREFIXES.iter().flat_map(|p| (0..d).map(move |i| format!("{p}_{i}"))))
        .collect();
    if d == 0 || header != expected {
        return Err(bad_csv(file, 1, "unexpected header"));
    }
    let mut path = Path {
        h,
        times: Vec::new(),
        x: Vec::new(),
        y: Vec::new(),
        m: Vec::new(),
        w: Vec::new(),
        db: Vec::new(),
        drift: Vec::new(),
        noise: Vec::new(),
    };
    for (i, line) in lines {
        let vals = line
            .split(',')
            .map(|s| field(file, i + 1, s))
            .collect::<Result<Vec<f64>>>()?;
        if vals.len() != width + 1 {
            return Err(bad_csv(file, i + 1, "wrong number of fields"));
        }
        path.times.push(vals[0]);
        let block = |j: usize| Vector::from_column_slice(&vals[1 + j * d..1 + (j + 1) * d]);
        path.x.push(block(0));
        path.y.push(block(1));
        path.m.push(block(2));
        path.w.push(block(3));
        path.drift.push(block(4));
        path.noise.push(block(5));
    }
    Ok(path)
}

/// Writes `plot/<metric>.csv` with columns `t,value` (the ensemble mean).
pub fn write_plot_data(report: &StoredReport) -> Result<Vec<PathBuf>> {
    let dir = report.dir.join("plot");
    fs::create_dir_all(&dir)?;
    let mut written = Vec::new();
    for s in &report.series {
        let mut text = String::from("t,value\n");
        for (t, v) in s.times.iter().zip(&s.mean) {
            let _ = writeln!(text, "{},{}", num(*t), num(*v));
        }
        let file = dir.join(format!("{}.csv", s.metric));
        fs::write(&file, text)?;
        written.push(file);
    }
    Ok(written)
}

fn short(x: f64) -> String {
    if x.is_nan() {
        "-".into()
    } else {
        format!("{x:.4e}")
    }
}

/// The table printed by `run` and `report`.
pub fn summary_table(manifest: &Manifest, rows: &[CheckRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "scenario {}  paths {}  seed {}  digest {}",
        manifest.name,
        manifest.n_paths,
        manifest.master_seed,
        &manifest.digest[..manifest.digest.len().min(12)]
    );
    if rows.is_empty() {
        out.push_str("no checks configured\n");
        return out;
    }
    let cells: Vec<[String; 5]> = rows
        .iter()
        .map(|r| {
            [
                r.check.clone(),
                r.item.clone(),
                short(r.bound),
                short(r.observed),
                r.verdict.as_str().to_string(),
            ]
        })
        .collect();
    let head = ["check", "item", "bound", "observed", "verdict"].map(String::from);
    let mut widths = head.clone().map(|h| h.len());
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    for row in std::iter::once(&head).chain(&cells) {
        let line: Vec<String> = row.iter().zip(widths).map(|(c, w)| format!("{c:<w$}")).collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
    }
    out
}
