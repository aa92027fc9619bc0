//! Convergence quantities along simulated paths and empirical rate fits.

mod checks;

pub use checks::*;

use crate::error::{Error, Result};
use crate::integrator::{simulate_deterministic_flow, Grid, Path};
use crate::linalg::{Matrix, Vector};
use crate::noise::{NoiseModel, TikhonovSchedule};
use crate::operator::{GapQuery, OperatorSpec, Region};
use crate::subspace::{domain_subspace, reduce_operator, SubspaceInfo};

/// Scalar observable of a path, evaluated on the retained time points.
#[derive(Debug, Clone, PartialEq)]
pub enum MetricKind {
    /// `‖X_t - x⋆‖²`.
    DistSqToPoint { point: Vector },
    /// `d(X_t, S)²`.
    DistSqToZeroSet,
    /// `φ(X_t) - min φ`.
    ValueGap,
    /// `φ(X̄_t) - min φ`.
    ErgodicValueGap,
    /// `G_A(X̄_t | K)`.
    ErgodicGapFunction { region: Region, n_grid: usize },
    /// `‖A⁰(X_t)‖²`.
    OperatorNormSq,
    /// `‖X_t - x_{ε(t)}‖²`.
    TikhonovDiscrepancy,
    /// `‖X_t - x(t)‖²` against the noise-free flow from the same start.
    FlowDiscrepancy,
    /// `‖X̄_t‖²`.
    NormOfAverage,
    /// `‖X̄_t - x⋆‖²`.
    ErgodicDistSqToPoint { point: Vector },
    /// `Σ_{t_j < t} σ∞(t_j)² ‖W_j - X_j‖² h`.
    AuxDelta,
    /// `‖X_t - X^ex_t‖²` against the exact solution driven by the same
    /// increments (affine operators with additive noise only).
    ExactErrorSq,
}

impl MetricKind {
    pub fn name(&self) -> &'static str {
        match self {
            MetricKind::DistSqToPoint { .. } => "dist_sq_to_point",
            MetricKind::DistSqToZeroSet => "dist_sq_to_zero_set",
            MetricKind::ValueGap => "value_gap",
            MetricKind::ErgodicValueGap => "ergodic_value_gap",
            MetricKind::ErgodicGapFunction { .. } => "ergodic_gap_function",
            MetricKind::OperatorNormSq => "operator_norm_sq",
            MetricKind::TikhonovDiscrepancy => "tikhonov_discrepancy",
            MetricKind::FlowDiscrepancy => "flow_discrepancy",
            MetricKind::NormOfAverage => "norm_of_average",
            MetricKind::ErgodicDistSqToPoint { .. } => "ergodic_dist_sq_to_point",
            MetricKind::AuxDelta => "aux_delta",
            MetricKind::ExactErrorSq => "exact_error_sq",
        }
    }

    fn uses_average(&self) -> bool {
        matches!(
            self,
            MetricKind::ErgodicValueGap
                | MetricKind::ErgodicGapFunction { .. }
                | MetricKind::NormOfAverage
                | MetricKind::ErgodicDistSqToPoint { .. }
        )
    }
}

/// Per-path values of one metric: `values[path][time]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricTable {
    pub kind: MetricKind,
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl MetricTable {
    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn n_paths(&self) -> usize {
        self.values.len()
    }

    /// Index of the retained time closest to `t`.
    pub fn time_index(&self, t: f64) -> usize {
        let mut best = 0;
        for (i, &s) in self.times.iter().enumerate() {
            if (s - t).abs() < (self.times[best] - t).abs() {
                best = i;
            }
        }
        best
    }

    pub fn column(&self, k: usize) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().map(move |row| row[k])
    }
}

/// Running trapezoidal average `X̄_k = (1/t_k) ∫₀^{t_k} X`, with `X̄₀ = X₀`.
pub fn ergodic_average(xs: &[Vector], h: f64) -> Vec<Vector> {
    let Some(first) = xs.first() else { return Vec::new() };
    let mut out = Vec::with_capacity(xs.len());
    out.push(first.clone());
    let mut integral = Vector::zeros(first.len());
    for k in 1..xs.len() {
        integral += (&xs[k - 1] + &xs[k]) * (0.5 * h);
        out.push(&integral / (k as f64 * h));
    }
    out
}

/// Shared, per-scenario data for evaluating metrics on paths.
#[derive(Debug, Clone)]
pub struct MetricContext {
    op: OperatorSpec,
    noise: NoiseModel,
    grid: Grid,
    eval: Vec<usize>,
    metrics: Vec<MetricKind>,
    flow: Option<Vec<Vector>>,
    tikhonov_points: Option<Vec<Vector>>,
    exact: Option<ExactSolution>,
    min_value: f64,
}

/// Closed-form solution of `dX = -(Q X + b) dt + σ(t) dB` on the affine hull
/// of the domain, with the stochastic convolution sampled at left points:
/// `D_{k+1} = e^{-Q h} (D_k + σ(t_k) ΔB_k)` for `D = z - z⋆`.
#[derive(Debug, Clone)]
struct ExactSolution {
    info: SubspaceInfo,
    propagator: Matrix,
    z_star: Vector,
}

impl ExactSolution {
    fn prepare(op: &OperatorSpec, noise: &NoiseModel, tik: TikhonovSchedule, h: f64) -> std::result::Result<Self, &'static str> {
        if !tik.is_off() {
            return Err("requires the Tikhonov schedule to be off");
        }
        if noise.coupling().is_some() {
            return Err("requires state-independent noise");
        }
        let info = domain_subspace(op);
        let reduced = reduce_operator(op, &info).map_err(|_| "operator cannot be reduced")?;
        let (q, b) = reduced.as_affine_map().ok_or("requires an affine operator on its domain")?;
        let z_star = if b.iter().all(|&v| v == 0.0) {
            Vector::zeros(b.len())
        } else {
            q.clone().lu().solve(&(-&b)).ok_or("requires an invertible linear part")?
        };
        Ok(ExactSolution {
            info,
            propagator: (-q * h).exp(),
            z_star,
        })
    }

    fn states(&self, path: &Path, noise: &NoiseModel) -> Result<Vec<Vector>> {
        if path.db.len() != path.steps() {
            return Err(Error::IncompatibleMetric {
                metric: MetricKind::ExactErrorSq.name().into(),
                reason: "path carries no Brownian increments".into(),
            });
        }
        let basis = self.info.basis();
        let mut d = self.info.coordinates(&path.x[0]) - &self.z_star;
        let mut out = Vec::with_capacity(path.len());
        out.push(self.info.lift(&(&self.z_star + &d)));
        for k in 0..path.steps() {
            let kick = basis * noise.apply(path.times[k], &path.x[k], &path.db[k]);
            d = &self.propagator * (d + kick);
            out.push(self.info.lift(&(&self.z_star + &d)));
        }
        Ok(out)
    }
}

impl MetricContext {
    /// `thin` keeps every `thin`-th grid point plus the final one.
    pub fn new(
        op: &OperatorSpec,
        noise: &NoiseModel,
        tik: TikhonovSchedule,
        grid: Grid,
        x0: &Vector,
        metrics: &[MetricKind],
        thin: usize,
    ) -> Result<Self> {
        let thin = thin.max(1);
        let mut eval: Vec<usize> = (0..=grid.steps()).step_by(thin).collect();
        if *eval.last().unwrap() != grid.steps() {
            eval.push(grid.steps());
        }
        let incompatible = |m: &MetricKind, reason: &str| Error::IncompatibleMetric {
            metric: m.name().into(),
            reason: reason.into(),
        };
        let mut flow = None;
        let mut tikhonov_points = None;
        let mut exact = None;
        let mut min_value = 0.0;
        for m in metrics {
            match m {
                MetricKind::DistSqToPoint { point } | MetricKind::ErgodicDistSqToPoint { point } => {
                    if point.len() != op.dim() {
                        return Err(incompatible(m, "point dimension differs from the operator"));
                    }
                }
                MetricKind::DistSqToZeroSet => {
                    op.min_norm_zero().map_err(|_| incompatible(m, "zero set is empty"))?;
                }
                MetricKind::ValueGap | MetricKind::ErgodicValueGap => {
                    let pot = op.potential().ok_or_else(|| incompatible(m, "operator has no potential"))?;
                    min_value = pot.min_value.ok_or_else(|| incompatible(m, "potential has no minimum"))?;
                }
                MetricKind::ErgodicGapFunction { region, n_grid } => {
                    if region.dim() != op.dim() || *n_grid < 2 {
                        return Err(incompatible(m, "region dimension or grid size is invalid"));
                    }
                }
                MetricKind::OperatorNormSq => {
                    if op.lipschitz().is_none() {
                        return Err(incompatible(m, "requires a Lipschitz single-valued operator"));
                    }
                }
                MetricKind::TikhonovDiscrepancy => {
                    if tik.is_off() {
                        return Err(incompatible(m, "requires a Tikhonov schedule"));
                    }
                    let pts = eval
                        .iter()
                        .map(|&k| op.tikhonov_point(tik.eps(grid.time(k))))
                        .collect::<Result<Vec<_>>>()?;
                    tikhonov_points = Some(pts);
                }
                MetricKind::FlowDiscrepancy => {
                    let xs = simulate_deterministic_flow(op, tik, x0, grid)?;
                    flow = Some(eval.iter().map(|&k| xs[k].clone()).collect());
                }
                MetricKind::ExactErrorSq => {
                    let sol = ExactSolution::prepare(op, noise, tik, grid.h()).map_err(|r| incompatible(m, r))?;
                    exact = Some(sol);
                }
                MetricKind::NormOfAverage | MetricKind::AuxDelta => {}
            }
        }
        Ok(MetricContext {
            op: op.clone(),
            noise: noise.clone(),
            grid,
            eval,
            metrics: metrics.to_vec(),
            flow,
            tikhonov_points,
            exact,
            min_value,
        })
    }

    pub fn metrics(&self) -> &[MetricKind] {
        &self.metrics
    }

    pub fn eval_indices(&self) -> &[usize] {
        &self.eval
    }

    pub fn eval_times(&self) -> Vec<f64> {
        self.eval.iter().map(|&k| self.grid.time(k)).collect()
    }

    /// Noise-free comparison flow at the retained times, if it was requested.
    pub fn flow(&self) -> Option<&[Vector]> {
        self.flow.as_deref()
    }

    /// One series per configured metric, in configuration order.
    pub fn evaluate(&self, path: &Path) -> Result<Vec<Vec<f64>>> {
        if path.len() != self.grid.steps() + 1 {
            return Err(Error::GridMismatch);
        }
        let avg = if self.metrics.iter().any(MetricKind::uses_average) {
            ergodic_average(&path.x, path.h)
        } else {
            Vec::new()
        };
        self.metrics.iter().map(|m| self.series(m, path, &avg)).collect()
    }

    fn series(&self, m: &MetricKind, path: &Path, avg: &[Vector]) -> Result<Vec<f64>> {
        let op = &self.op;
        let per_index = |f: &dyn Fn(usize, usize) -> Result<f64>| -> Result<Vec<f64>> {
            self.eval.iter().enumerate().map(|(i, &k)| f(i, k).map(|v| v.max(0.0))).collect()
        };
        match m {
            MetricKind::DistSqToPoint { point } => per_index(&|_, k| Ok((&path.x[k] - point).norm_squared())),
            MetricKind::DistSqToZeroSet => per_index(&|_, k| Ok(op.zero_set_project(&path.x[k])?.1.powi(2))),
            MetricKind::ValueGap => per_index(&|_, k| Ok(op.potential_value(&path.x[k])? - self.min_value)),
            MetricKind::ErgodicValueGap => per_index(&|_, k| Ok(op.potential_value(&avg[k])? - self.min_value)),
            MetricKind::ErgodicGapFunction { region, n_grid } => {
                let query = GapQuery::new(region.clone(), *n_grid);
                per_index(&|_, k| Ok(op.gap_function(&avg[k], &query)?.value))
            }
            MetricKind::OperatorNormSq => per_index(&|_, k| Ok(op.minimal_norm_element(&path.x[k])?.norm_squared())),
            MetricKind::TikhonovDiscrepancy => {
                let pts = self.tikhonov_points.as_ref().expect("prepared in new");
                per_index(&|i, k| Ok((&path.x[k] - &pts[i]).norm_squared()))
            }
            MetricKind::FlowDiscrepancy => {
                let flow = self.flow.as_ref().expect("prepared in new");
                per_index(&|i, k| Ok((&path.x[k] - &flow[i]).norm_squared()))
            }
            MetricKind::NormOfAverage => per_index(&|_, k| Ok(avg[k].norm_squared())),
            MetricKind::ErgodicDistSqToPoint { point } => per_index(&|_, k| Ok((&avg[k] - point).norm_squared())),
            MetricKind::AuxDelta => {
                let mut running = Vec::with_capacity(path.len());
                let mut acc = 0.0;
                running.push(0.0);
                for j in 0..path.steps() {
                    let s = self.noise.sigma_inf(path.times[j]);
                    acc += s * s * (&path.w[j] - &path.x[j]).norm_squared() * path.h;
                    running.push(acc);
                }
                per_index(&|_, k| Ok(running[k]))
            }
            MetricKind::ExactErrorSq => {
                let exact = self.exact.as_ref().expect("prepared in new").states(path, &self.noise)?;
                per_index(&|_, k| Ok((&path.x[k] - &exact[k]).norm_squared()))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateModel {
    /// `y ≈ C t^a`, reports `a`.
    PowerLaw,
    /// `y ≈ C e^{-r t}`, reports `r`.
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    /// Exponent `a` for power laws, decay rate `r` for exponentials.
    pub rate: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Points inside the window dropped for being `<= 1e-14`.
    pub clipped: usize,
}

/// Least-squares rate fit of `ys` against `ts` restricted to `[t_lo, t_hi]`.
pub fn fit_rate(ts: &[f64], ys: &[f64], model: RateModel, window: (f64, f64)) -> Result<RateFit> {
    if ts.len() != ys.len() {
        return Err(Error::GridMismatch);
    }
    let mut clipped = 0;
    let mut pts = Vec::new();
    for (&t, &y) in ts.iter().zip(ys) {
        if t < window.0 || t > window.1 {
            continue;
        }
        if model == RateModel::PowerLaw && t <= 0.0 {
            continue;
        }
        if !(y > 1e-14) {
            clipped += 1;
            continue;
        }
        let x = match model {
            RateModel::PowerLaw => t.ln(),
            RateModel::Exponential => t,
        };
        pts.push((x, y.ln()));
    }
    if pts.len() < 5 {
        return Err(Error::DegenerateWindow { points: pts.len() });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateWindow { points: pts.len() });
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(RateFit {
        rate: match model {
            RateModel::PowerLaw => slope,
            RateModel::Exponential => -slope,
        },
        intercept,
        r_squared,
        clipped,
    })
}
