//! Scenario files: a TOML description of one experiment, validated into a
//! ready-to-run [`Scenario`].
//!
//! The grammar is documented in `scenarios/README.md`. Every record rejects
//! unknown keys; every value is checked, and failures name the offending key.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::diagnostics::{CheckSpec, MetricKind, DEFAULT_SLACK};
use crate::error::{Error, Result};
use crate::harness::{EnsembleConfig, Experiment};
use crate::integrator::{Grid, Integrator};
use crate::linalg::{Matrix, Vector};
use crate::noise::{NoiseModel, Schedule, StateCoupling, TikhonovSchedule};
use crate::operator::{ErrorBound, OperatorSpec, Plq1d, Quad, Region};

/// Refuse grids that could not be held in memory anyway.
pub const MAX_STEPS: usize = 10_000_000;
/// Upper limit on `n_grid^dim` for the gap-function grid search.
pub const MAX_GAP_POINTS: f64 = 1e6;

fn default_sigma0() -> f64 {
    0.5
}
fn one() -> f64 {
    1.0
}
fn half() -> f64 {
    0.5
}
fn default_slack() -> f64 {
    DEFAULT_SLACK
}
fn default_t_end() -> f64 {
    20.0
}
fn default_h() -> f64 {
    1.0 / 128.0
}
fn default_thin() -> usize {
    8
}
fn default_paths() -> usize {
    256
}
fn default_retain() -> usize {
    8
}
fn default_n_grid() -> usize {
    33
}
fn default_max_exponent() -> f64 {
    -0.7
}
fn neg_inf() -> f64 {
    f64::NEG_INFINITY
}
fn pos_inf() -> f64 {
    f64::INFINITY
}
fn default_eps_levels() -> Vec<f64> {
    vec![1.0, 2.0, 3.0]
}
fn default_r_values() -> Vec<f64> {
    vec![2.0, 5.0, 10.0]
}

/// The file as written, with defaults filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<X0Record>,
    pub operator: OperatorRecord,
    #[serde(default)]
    pub noise: NoiseRecord,
    #[serde(default)]
    pub tikhonov: TikhonovRecord,
    #[serde(default)]
    pub grid: GridRecord,
    #[serde(default)]
    pub ensemble: EnsembleRecord,
    #[serde(default)]
    pub metrics: Vec<MetricRecord>,
    #[serde(default)]
    pub checks: ChecksRecord,
}

/// A coordinate vector, `"zero_set_point"`, or `"offset:<vector>"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum X0Record {
    Point(Vec<f64>),
    Preset(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorBoundRecord {
    pub p: f64,
    pub gamma: f64,
    pub level: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorRecord {
    Identity {
        dim: usize,
    },
    /// `x -> Q x + b`.
    Linear {
        q: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        b: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        error_bound: Option<ErrorBoundRecord>,
    },
    SeparablePlq {
        coords: Vec<PlqRecord>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        error_bound: Option<ErrorBoundRecord>,
    },
    /// `N_C` for `C = {x : C x = d}`.
    AffineNormalCone {
        c: Vec<Vec<f64>>,
        d: Vec<f64>,
    },
    /// `∂(½ xᵀHx + gᵀx + ι_{Cx = d})`.
    RestrictedQuadratic {
        h: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        g: Option<Vec<f64>>,
        c: Vec<Vec<f64>>,
        d: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        error_bound: Option<ErrorBoundRecord>,
    },
    /// `Q x + b + N_{Cx = d}(x)`.
    Sum {
        q: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        b: Option<Vec<f64>>,
        c: Vec<Vec<f64>>,
        d: Vec<f64>,
    },
    /// `x -> A(x - shift)`.
    Shifted {
        shift: Vec<f64>,
        inner: Box<OperatorRecord>,
    },
    Scaled {
        factor: f64,
        inner: Box<OperatorRecord>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PlqRecord {
    /// `w |x|`.
    Abs {
        #[serde(default = "one")]
        weight: f64,
    },
    /// `max(|x| - r, 0)`.
    Hinge {
        #[serde(default = "one")]
        radius: f64,
    },
    /// `a/2 x² + b x`.
    Quadratic {
        a: f64,
        #[serde(default)]
        b: f64,
    },
    Indicator {
        lo: f64,
        hi: f64,
    },
    /// Pieces `[a, b, c]` meaning `a/2 x² + b x + c`, one more than breakpoints.
    Custom {
        #[serde(default = "neg_inf")]
        lo: f64,
        #[serde(default = "pos_inf")]
        hi: f64,
        #[serde(default)]
        breakpoints: Vec<f64>,
        pieces: Vec<[f64; 3]>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    PowerDecay,
    Constant,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseRecord {
    #[serde(default = "default_schedule_kind")]
    pub schedule: ScheduleKind,
    #[serde(default = "default_sigma0")]
    pub sigma0: f64,
    #[serde(default = "one")]
    pub p: f64,
    /// `d x m` matrix `Σ₀`; the identity when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<CouplingRecord>,
}

fn default_schedule_kind() -> ScheduleKind {
    ScheduleKind::PowerDecay
}

impl Default for NoiseRecord {
    fn default() -> Self {
        NoiseRecord {
            schedule: ScheduleKind::PowerDecay,
            sigma0: default_sigma0(),
            p: 1.0,
            base: None,
            coupling: None,
        }
    }
}

/// `Σ₁ tanh(wᵀx + c)` added to the base matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingRecord {
    pub weights: Vec<Vec<f64>>,
    pub w: Vec<f64>,
    #[serde(default)]
    pub c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TikhonovKind {
    Off,
    PowerEps,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TikhonovRecord {
    #[serde(default = "default_tikhonov_kind")]
    pub kind: TikhonovKind,
    #[serde(default = "one")]
    pub eps0: f64,
    #[serde(default = "half")]
    pub q: f64,
}

fn default_tikhonov_kind() -> TikhonovKind {
    TikhonovKind::PowerEps
}

impl Default for TikhonovRecord {
    fn default() -> Self {
        TikhonovRecord {
            kind: TikhonovKind::PowerEps,
            eps0: 1.0,
            q: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridRecord {
    #[serde(rename = "T", default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_h")]
    pub h: f64,
    #[serde(default = "default_thin")]
    pub thin: usize,
}

impl Default for GridRecord {
    fn default() -> Self {
        GridRecord {
            t_end: default_t_end(),
            h: default_h(),
            thin: default_thin(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleRecord {
    #[serde(default = "default_paths")]
    pub n_paths: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_retain")]
    pub retain_paths: usize,
}

impl Default for EnsembleRecord {
    fn default() -> Self {
        EnsembleRecord {
            n_paths: default_paths(),
            master_seed: 0,
            retain_paths: default_retain(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RegionRecord {
    Ball {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
        #[serde(default = "one")]
        radius: f64,
    },
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MetricRecord {
    DistSqToPoint {
        point: Vec<f64>,
    },
    DistSqToZeroSet,
    ValueGap,
    ErgodicValueGap,
    ErgodicGapFunction {
        region: RegionRecord,
        #[serde(default = "default_n_grid")]
        n_grid: usize,
    },
    OperatorNormSq,
    TikhonovDiscrepancy,
    FlowDiscrepancy,
    NormOfAverage,
    ErgodicDistSqToPoint {
        point: Vec<f64>,
    },
    AuxDelta,
    ExactErrorSq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlackRecord {
    #[serde(default = "default_slack")]
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConcentrationRecord {
    #[serde(default = "default_eps_levels")]
    pub eps_levels: Vec<f64>,
    /// Defaults to `T/4, T/2, T`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
    #[serde(default = "default_slack")]
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TikhonovCheckRecord {
    #[serde(default = "default_r_values")]
    pub r_values: Vec<f64>,
    #[serde(default = "default_slack")]
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapSlopeRecord {
    /// The compact set the gap function is taken over.
    #[serde(rename = "K")]
    pub k: RegionRecord,
    #[serde(default = "default_n_grid")]
    pub n_grid: usize,
    /// Defaults to `[T/4, T]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<[f64; 2]>,
    #[serde(default = "default_max_exponent")]
    pub max_exponent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExactOracleRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChecksRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strong_rate: Option<SlackRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ergodic_value: Option<SlackRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub concentration: Option<ConcentrationRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tikhonov: Option<TikhonovCheckRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap_slope: Option<GapSlopeRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact_oracle: Option<ExactOracleRecord>,
}

/// Command-line values that replace the file's.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub master_seed: Option<u64>,
    pub n_paths: Option<usize>,
    pub output_dir: Option<String>,
}

/// A validated scenario, ready to run.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub file: ScenarioFile,
    pub name: String,
    pub digest: String,
    pub experiment: Experiment,
    pub checks: Vec<CheckSpec>,
    pub ensemble: EnsembleConfig,
    pub thin: usize,
    pub output_dir: Option<PathBuf>,
}

pub fn parse_scenario(text: &str) -> Result<Scenario> {
    parse_scenario_with(text, &Overrides::default())
}

/// Parse, apply `overrides`, then validate.
pub fn parse_scenario_with(text: &str, overrides: &Overrides) -> Result<Scenario> {
    let mut file = ScenarioFile::from_toml(text)?;
    file.apply(overrides);
    file.build()
}

/// 1-based line and column of a byte offset.
fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let mut offset = offset.min(text.len());
    while !text.is_char_boundary(offset) {
        offset -= 1;
    }
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

impl ScenarioFile {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let (line, col) = e.span().map_or((1, 1), |s| line_col(text, s.start));
            Error::Parse {
                line,
                col,
                message: e.message().trim().to_string(),
            }
        })
    }

    /// Canonical encoding: TOML with sorted keys and every default spelled out.
    pub fn to_canonical_toml(&self) -> String {
        let value = toml::Value::try_from(self).expect("scenario records always encode");
        toml::to_string(&value).expect("a TOML value always encodes")
    }

    /// SHA-256 of the canonical encoding, hex.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_canonical_toml().as_bytes()))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.master_seed {
            self.ensemble.master_seed = seed;
        }
        if let Some(n) = o.n_paths {
            self.ensemble.n_paths = n;
        }
        if let Some(dir) = &o.output_dir {
            self.output_dir = Some(dir.clone());
        }
    }

    pub fn build(self) -> Result<Scenario> {
        let op = build_operator(&self.operator, "operator")?;
        let d = op.dim();
        let noise = build_noise(&self.noise, d)?;
        let tik = build_tikhonov(&self.tikhonov)?;
        let grid = build_grid(&self.grid)?;
        let ens = &self.ensemble;
        if ens.n_paths == 0 {
            return Err(Error::validation("ensemble.n_paths", "requires n_paths >= 1"));
        }
        if ens.retain_paths > ens.n_paths {
            return Err(Error::validation("ensemble.retain_paths", "requires retain_paths <= n_paths"));
        }
        let x0 = build_x0(self.x0.as_ref(), &op)?;
        let checks = build_checks(&self.checks, &self.noise, &self.tikhonov, grid, d)?;

        let mut metrics = Vec::new();
        for (i, m) in self.metrics.iter().enumerate() {
            metrics.push(build_metric(m, d, &format!("metrics[{i}]"))?);
        }
        if metrics.is_empty() && op.min_norm_zero().is_ok() {
            metrics.push(MetricKind::DistSqToZeroSet);
        }
        for c in &checks {
            let field = format!("checks.{}", c.name());
            let required = c
                .required_metrics(&op, &x0)
                .map_err(|e| Error::validation(field.clone(), e.to_string()))?;
            for m in required {
                if !metrics.contains(&m) {
                    metrics.push(m);
                }
            }
        }

        let integrator = Integrator::new(op, noise, tik, grid).map_err(|e| relabel(e, "operator"))?;
        let experiment = Experiment::new(integrator, x0, &metrics, self.grid.thin).map_err(|e| match e {
            Error::IncompatibleMetric { metric, reason } => Error::validation(format!("metrics.{metric}"), reason),
            other => relabel(other, "x0"),
        })?;
        let ensemble = EnsembleConfig::new(ens.n_paths, ens.master_seed).with_retained(ens.retain_paths);
        Ok(Scenario {
            name: self.name.clone().unwrap_or_else(|| "scenario".into()),
            digest: self.digest(),
            thin: self.grid.thin,
            output_dir: self.output_dir.as_ref().map(PathBuf::from),
            file: self,
            experiment,
            checks,
            ensemble,
        })
    }
}

/// Keep validation errors, attribute everything else to `field`.
fn relabel(e: Error, field: &str) -> Error {
    match e {
        Error::Validation { .. } => e,
        other => Error::validation(field, other.to_string()),
    }
}

fn finite(field: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::validation(field, "must be finite"))
    }
}

fn vector(field: &str, v: &[f64]) -> Result<Vector> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::validation(field, "entries must be finite"));
    }
    Ok(Vector::from_column_slice(v))
}

fn vector_of_len(field: &str, v: &[f64], d: usize) -> Result<Vector> {
    if v.len() != d {
        return Err(Error::validation(field, format!("must have {d} entries")));
    }
    vector(field, v)
}

fn matrix(field: &str, rows: &[Vec<f64>]) -> Result<Matrix> {
    let ncols = rows.first().map_or(0, |r| r.len());
    if rows.is_empty() || ncols == 0 {
        return Err(Error::validation(field, "must be a non-empty matrix"));
    }
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::validation(field, "rows must have equal length"));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    if flat.iter().any(|x| !x.is_finite()) {
        return Err(Error::validation(field, "entries must be finite"));
    }
    Ok(Matrix::from_row_slice(rows.len(), ncols, &flat))
}

fn build_operator(rec: &OperatorRecord, field: &str) -> Result<OperatorSpec> {
    let sub = |k: &str| format!("{field}.{k}");
    let invalid = |e: Error| relabel(e, field);
    let (op, eb) = match rec {
        OperatorRecord::Identity { dim } => {
            if *dim == 0 || *dim > 64 {
                return Err(Error::validation(sub("dim"), "requires 1 <= dim <= 64"));
            }
            (OperatorSpec::identity(*dim).map_err(invalid)?, None)
        }
        OperatorRecord::Linear { q, b, error_bound } => {
            let q = matrix(&sub("q"), q)?;
            let b = match b {
                Some(b) => vector_of_len(&sub("b"), b, q.nrows())?,
                None => Vector::zeros(q.nrows()),
            };
            (OperatorSpec::linear(q, b).map_err(invalid)?, *error_bound)
        }
        OperatorRecord::SeparablePlq { coords, error_bound } => {
            if coords.is_empty() {
                return Err(Error::validation(sub("coords"), "must list at least one coordinate"));
            }
            let coords = coords
                .iter()
                .enumerate()
                .map(|(i, c)| build_plq(c).map_err(|e| relabel(e, &format!("{field}.coords[{i}]"))))
                .collect::<Result<Vec<_>>>()?;
            (OperatorSpec::separable_plq(coords).map_err(invalid)?, *error_bound)
        }
        OperatorRecord::AffineNormalCone { c, d } => {
            let c = matrix(&sub("c"), c)?;
            let d = vector_of_len(&sub("d"), d, c.nrows())?;
            (OperatorSpec::affine_normal_cone(c, d).map_err(invalid)?, None)
        }
        OperatorRecord::RestrictedQuadratic { h, g, c, d, error_bound } => {
            let h = matrix(&sub("h"), h)?;
            let g = match g {
                Some(g) => vector_of_len(&sub("g"), g, h.nrows())?,
                None => Vector::zeros(h.nrows()),
            };
            let c = matrix(&sub("c"), c)?;
            let d = vector_of_len(&sub("d"), d, c.nrows())?;
            (OperatorSpec::restricted_quadratic(h, g, c, d).map_err(invalid)?, *error_bound)
        }
        OperatorRecord::Sum { q, b, c, d } => {
            let q = matrix(&sub("q"), q)?;
            let b = match b {
                Some(b) => vector_of_len(&sub("b"), b, q.nrows())?,
                None => Vector::zeros(q.nrows()),
            };
            let c = matrix(&sub("c"), c)?;
            let d = vector_of_len(&sub("d"), d, c.nrows())?;
            (OperatorSpec::sum(q, b, c, d).map_err(invalid)?, None)
        }
        OperatorRecord::Shifted { shift, inner } => {
            let inner = build_operator(inner, &sub("inner"))?;
            let shift = vector_of_len(&sub("shift"), shift, inner.dim())?;
            (OperatorSpec::shifted(inner, shift).map_err(invalid)?, None)
        }
        OperatorRecord::Scaled { factor, inner } => {
            let inner = build_operator(inner, &sub("inner"))?;
            if !(factor.is_finite() && *factor > 0.0) {
                return Err(Error::validation(sub("factor"), "requires factor > 0"));
            }
            (OperatorSpec::scaled(inner, *factor).map_err(invalid)?, None)
        }
    };
    match eb {
        None => Ok(op),
        Some(eb) => op
            .with_error_bound(ErrorBound {
                p: eb.p,
                gamma: eb.gamma,
                level: eb.level,
            })
            .map_err(|e| relabel(e, &sub("error_bound"))),
    }
}

fn build_plq(rec: &PlqRecord) -> Result<Plq1d> {
    match rec {
        PlqRecord::Abs { weight } => Plq1d::abs(*weight),
        PlqRecord::Hinge { radius } => Plq1d::hinge(*radius),
        PlqRecord::Quadratic { a, b } => Plq1d::quadratic(*a, *b),
        PlqRecord::Indicator { lo, hi } => Plq1d::indicator(*lo, *hi),
        PlqRecord::Custom {
            lo,
            hi,
            breakpoints,
            pieces,
        } => Plq1d::new(
            *lo,
            *hi,
            breakpoints.clone(),
            pieces.iter().map(|p| Quad::new(p[0], p[1], p[2])).collect(),
        ),
    }
}

fn build_noise(rec: &NoiseRecord, d: usize) -> Result<NoiseModel> {
    let base = match &rec.base {
        Some(rows) => {
            let m = matrix("noise.base", rows)?;
            if m.nrows() != d {
                return Err(Error::validation("noise.base", format!("must have {d} rows")));
            }
            m
        }
        None => Matrix::identity(d, d),
    };
    let schedule = match rec.schedule {
        ScheduleKind::PowerDecay => Schedule::PowerDecay {
            sigma0: rec.sigma0,
            p: rec.p,
        },
        ScheduleKind::Constant => Schedule::Constant { sigma0: rec.sigma0 },
        ScheduleKind::Zero => Schedule::Zero,
    };
    let coupling = match &rec.coupling {
        None => None,
        Some(c) => Some(StateCoupling {
            weights: matrix("noise.coupling.weights", &c.weights)?,
            w: vector("noise.coupling.w", &c.w)?,
            c: finite("noise.coupling.c", c.c)?,
        }),
    };
    NoiseModel::new(base, schedule, coupling)
}

fn build_tikhonov(rec: &TikhonovRecord) -> Result<TikhonovSchedule> {
    match rec.kind {
        TikhonovKind::Off => Ok(TikhonovSchedule::Off),
        TikhonovKind::PowerEps => TikhonovSchedule::power_eps(rec.eps0, rec.q),
    }
}

fn build_grid(rec: &GridRecord) -> Result<Grid> {
    if rec.thin == 0 {
        return Err(Error::validation("grid.thin", "requires thin >= 1"));
    }
    if rec.h > 0.0 && rec.t_end.is_finite() && rec.t_end / rec.h > MAX_STEPS as f64 {
        return Err(Error::validation("grid.h", format!("requires T / h <= {MAX_STEPS}")));
    }
    Grid::new(rec.h, rec.t_end)
}

fn parse_offset(s: &str) -> Option<Vec<f64>> {
    let s = s.trim();
    let s = s.strip_prefix('[').and_then(|s| s.strip_suffix(']')).unwrap_or(s);
    s.split(',').map(|v| v.trim().parse::<f64>().ok()).collect()
}

fn build_x0(rec: Option<&X0Record>, op: &OperatorSpec) -> Result<Vector> {
    let d = op.dim();
    let zero_point = || {
        op.min_norm_zero()
            .map_err(|_| Error::validation("x0", "the zero set is empty, so no zero_set_point exists"))
    };
    let x0 = match rec {
        // a generic start: the projection of (1, ..., 1) onto the domain
        None => op.project_domain(&Vector::from_element(d, 1.0)),
        Some(X0Record::Point(v)) => vector_of_len("x0", v, d)?,
        Some(X0Record::Preset(s)) if s == "zero_set_point" => zero_point()?,
        Some(X0Record::Preset(s)) => {
            let offset = s
                .strip_prefix("offset:")
                .and_then(parse_offset)
                .ok_or_else(|| Error::validation("x0", "must be a vector, \"zero_set_point\" or \"offset:<vector>\""))?;
            zero_point()? + vector_of_len("x0", &offset, d)?
        }
    };
    if !op.in_domain(&x0) {
        return Err(Error::validation("x0", "must lie in the closure of dom A"));
    }
    Ok(x0)
}

fn build_region(rec: &RegionRecord, d: usize, field: &str) -> Result<Region> {
    match rec {
        RegionRecord::Ball { center, radius } => {
            let center = match center {
                Some(c) => vector_of_len(&format!("{field}.center"), c, d)?,
                None => Vector::zeros(d),
            };
            if !(radius.is_finite() && *radius > 0.0) {
                return Err(Error::validation(format!("{field}.radius"), "requires radius > 0"));
            }
            Ok(Region::Ball {
                center,
                radius: *radius,
            })
        }
        RegionRecord::Box { lo, hi } => {
            let lo = vector_of_len(&format!("{field}.lo"), lo, d)?;
            let hi = vector_of_len(&format!("{field}.hi"), hi, d)?;
            if lo.iter().zip(hi.iter()).any(|(a, b)| a > b) {
                return Err(Error::validation(field, "requires lo <= hi"));
            }
            Ok(Region::Box { lo, hi })
        }
    }
}

fn check_n_grid(n_grid: usize, d: usize, field: &str) -> Result<()> {
    if n_grid < 2 || (n_grid as f64).powi(d as i32) > MAX_GAP_POINTS {
        return Err(Error::validation(
            field,
            format!("requires n_grid >= 2 and n_grid^dim <= {MAX_GAP_POINTS:e}"),
        ));
    }
    Ok(())
}

fn build_metric(rec: &MetricRecord, d: usize, field: &str) -> Result<MetricKind> {
    Ok(match rec {
        MetricRecord::DistSqToPoint { point } => MetricKind::DistSqToPoint {
            point: vector_of_len(&format!("{field}.point"), point, d)?,
        },
        MetricRecord::DistSqToZeroSet => MetricKind::DistSqToZeroSet,
        MetricRecord::ValueGap => MetricKind::ValueGap,
        MetricRecord::ErgodicValueGap => MetricKind::ErgodicValueGap,
        MetricRecord::ErgodicGapFunction { region, n_grid } => {
            check_n_grid(*n_grid, d, &format!("{field}.n_grid"))?;
            MetricKind::ErgodicGapFunction {
                region: build_region(region, d, &format!("{field}.region"))?,
                n_grid: *n_grid,
            }
        }
        MetricRecord::OperatorNormSq => MetricKind::OperatorNormSq,
        MetricRecord::TikhonovDiscrepancy => MetricKind::TikhonovDiscrepancy,
        MetricRecord::FlowDiscrepancy => MetricKind::FlowDiscrepancy,
        MetricRecord::NormOfAverage => MetricKind::NormOfAverage,
        MetricRecord::ErgodicDistSqToPoint { point } => MetricKind::ErgodicDistSqToPoint {
            point: vector_of_len(&format!("{field}.point"), point, d)?,
        },
        MetricRecord::AuxDelta => MetricKind::AuxDelta,
        MetricRecord::ExactErrorSq => MetricKind::ExactErrorSq,
    })
}

fn slack(field: &str, s: f64) -> Result<f64> {
    if s.is_finite() && s >= 0.0 {
        Ok(s)
    } else {
        Err(Error::validation(field, "requires slack >= 0"))
    }
}

fn times_in(field: &str, ts: &[f64], lo: f64, hi: f64, lo_open: bool) -> Result<Vec<f64>> {
    if ts.is_empty() {
        return Err(Error::validation(field, "must not be empty"));
    }
    for &t in ts {
        let above = if lo_open { t > lo } else { t >= lo };
        if !(above && t <= hi) {
            let open = if lo_open { "(" } else { "[" };
            return Err(Error::validation(field, format!("values must lie in {open}{lo}, {hi}]")));
        }
    }
    Ok(ts.to_vec())
}

fn build_checks(
    rec: &ChecksRecord,
    noise: &NoiseRecord,
    tik: &TikhonovRecord,
    grid: Grid,
    d: usize,
) -> Result<Vec<CheckSpec>> {
    let t_end = grid.t_end();
    let mut checks = Vec::new();
    if let Some(r) = &rec.strong_rate {
        checks.push(CheckSpec::StrongRate {
            slack: slack("checks.strong_rate.slack", r.slack)?,
        });
    }
    if let Some(r) = &rec.ergodic_value {
        checks.push(CheckSpec::ErgodicValue {
            slack: slack("checks.ergodic_value.slack", r.slack)?,
        });
    }
    if let Some(r) = &rec.concentration {
        let eps_levels = r.eps_levels.clone();
        if eps_levels.is_empty() || eps_levels.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return Err(Error::validation("checks.concentration.eps_levels", "requires a non-empty list of eps > 0"));
        }
        let times = match &r.times {
            Some(ts) => times_in("checks.concentration.times", ts, 0.0, t_end, true)?,
            None => vec![t_end / 4.0, t_end / 2.0, t_end],
        };
        checks.push(CheckSpec::Concentration {
            eps_levels,
            times,
            slack: slack("checks.concentration.slack", r.slack)?,
        });
    }
    if let Some(r) = &rec.tikhonov {
        let r_values = times_in("checks.tikhonov.r_values", &r.r_values, 0.0, t_end, false)?;
        checks.push(CheckSpec::Tikhonov {
            r_values,
            slack: slack("checks.tikhonov.slack", r.slack)?,
        });
    }
    if let Some(r) = &rec.gap_slope {
        check_n_grid(r.n_grid, d, "checks.gap_slope.n_grid")?;
        let window = match r.window {
            None => None,
            Some([a, b]) => {
                if !(a >= 0.0 && a < b && b <= t_end) {
                    return Err(Error::validation("checks.gap_slope.window", "requires 0 <= lo < hi <= T"));
                }
                Some((a, b))
            }
        };
        checks.push(CheckSpec::GapSlope {
            region: build_region(&r.k, d, "checks.gap_slope.K")?,
            n_grid: r.n_grid,
            window,
            max_exponent: finite("checks.gap_slope.max_exponent", r.max_exponent)?,
        });
    }
    if let Some(r) = &rec.exact_oracle {
        if let Some(tol) = r.tolerance {
            if !(tol.is_finite() && tol >= 0.0) {
                return Err(Error::validation("checks.exact_oracle.tolerance", "requires tolerance >= 0"));
            }
        }
        checks.push(CheckSpec::ExactOracle { tolerance: r.tolerance });
    }

    for c in &checks {
        let name = c.name();
        let needs_integrable = !matches!(c, CheckSpec::ExactOracle { .. });
        if needs_integrable {
            match noise.schedule {
                ScheduleKind::PowerDecay if !(noise.p > 0.5) => {
                    return Err(Error::validation("noise.p", "requires p > 1/2"));
                }
                ScheduleKind::Constant if noise.sigma0 != 0.0 => {
                    return Err(Error::validation(
                        "noise.schedule",
                        format!("the {name} check requires a square-integrable schedule"),
                    ));
                }
                _ => {}
            }
        }
        let wants_tikhonov = matches!(c, CheckSpec::Tikhonov { .. });
        let has_tikhonov = tik.kind == TikhonovKind::PowerEps;
        if wants_tikhonov && !has_tikhonov {
            return Err(Error::validation("tikhonov.kind", "the tikhonov check requires power_eps"));
        }
        if !wants_tikhonov && has_tikhonov {
            return Err(Error::validation("tikhonov.kind", format!("the {name} check requires off")));
        }
    }
    Ok(checks)
}

#[cfg(test)]
mod tests;
