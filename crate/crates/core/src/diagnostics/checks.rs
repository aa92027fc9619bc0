//! One-sided comparisons of ensemble statistics with the convergence bounds.

use super::{fit_rate, MetricKind, MetricTable, RateFit, RateModel};
use crate::error::{Error, Result};
use crate::harness::reduce_stats;
use crate::integrator::Grid;
use crate::linalg::Vector;
use crate::noise::{NoiseModel, TikhonovSchedule};
use crate::operator::OperatorSpec;

/// Default slack in standard errors.
pub const DEFAULT_SLACK: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Violated,
    /// Reported without a pass/fail decision.
    Info,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Violated => "VIOLATED",
            Verdict::Info => "info",
        }
    }

    pub fn parse(s: &str) -> Option<Verdict> {
        match s {
            "pass" => Some(Verdict::Pass),
            "VIOLATED" => Some(Verdict::Violated),
            "info" => Some(Verdict::Info),
            _ => None,
        }
    }

    fn from_violation(v: bool) -> Verdict {
        if v {
            Verdict::Violated
        } else {
            Verdict::Pass
        }
    }
}

/// One line of the summary table.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub check: String,
    pub item: String,
    pub bound: f64,
    pub observed: f64,
    pub verdict: Verdict,
}

impl CheckRow {
    fn new(check: &str, item: String, bound: f64, observed: f64, verdict: Verdict) -> Self {
        CheckRow {
            check: check.into(),
            item,
            bound,
            observed,
            verdict,
        }
    }
}

fn find<'a>(tables: &'a [MetricTable], pred: impl Fn(&MetricKind) -> bool, what: &str) -> Result<&'a MetricTable> {
    tables.iter().find(|t| pred(&t.kind)).ok_or_else(|| Error::IncompatibleMetric {
        metric: what.into(),
        reason: "metric was not evaluated in this ensemble".into(),
    })
}

/// Ensemble mean of a metric against a deterministic upper bound.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundSeries {
    pub times: Vec<f64>,
    pub lhs: Vec<f64>,
    pub se: Vec<f64>,
    pub rhs: Vec<f64>,
}

impl BoundSeries {
    /// `lhs > scale * rhs + slack * se` at each time (plus a rounding allowance).
    pub fn violations(&self, slack: f64, rhs_scale: f64) -> Vec<bool> {
        (0..self.times.len())
            .map(|k| {
                let rhs = rhs_scale * self.rhs[k];
                self.lhs[k] > rhs + slack * self.se[k] + 1e-12 * (1.0 + rhs.abs())
            })
            .collect()
    }

    pub fn violated(&self, slack: f64) -> bool {
        self.violations(slack, 1.0).into_iter().any(|v| v)
    }

    pub fn rows(&self, check: &str, slack: f64) -> Vec<CheckRow> {
        let flags = self.violations(slack, 1.0);
        // the worst time (largest lhs / rhs) plus the final time
        let mut worst = 0;
        for k in 0..self.times.len() {
            let r = |i: usize| (self.lhs[i] - slack * self.se[i]) / self.rhs[i].max(f64::MIN_POSITIVE);
            if flags[k] && !flags[worst] || (flags[k] == flags[worst] && r(k) > r(worst)) {
                worst = k;
            }
        }
        let last = self.times.len().saturating_sub(1);
        let mut idx = vec![worst];
        if last != worst {
            idx.push(last);
        }
        idx.sort_unstable();
        idx.into_iter()
            .map(|k| {
                CheckRow::new(
                    check,
                    format!("t={}", fmt_time(self.times[k])),
                    self.rhs[k],
                    self.lhs[k],
                    Verdict::from_violation(flags[k]),
                )
            })
            .collect()
    }

    fn from_table(table: &MetricTable, rhs: impl Fn(usize, f64) -> f64) -> Result<BoundSeries> {
        let stats = reduce_stats(&table.times, &table.values)?;
        let mut out = BoundSeries {
            times: Vec::new(),
            lhs: Vec::new(),
            se: Vec::new(),
            rhs: Vec::new(),
        };
        for (k, &t) in table.times.iter().enumerate() {
            if t <= 0.0 {
                continue;
            }
            out.times.push(t);
            out.lhs.push(stats.mean[k]);
            out.se.push(stats.se(k));
            out.rhs.push(rhs(k, t));
        }
        Ok(out)
    }
}

fn fmt_time(t: f64) -> String {
    let s = format!("{t:.6}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// `E‖X_t - x⋆‖² ≤ e^{-2ρt} ‖X₀ - x⋆‖² + ∫₀ᵗ e^{-2ρ(t-s)} σ∞(s)² ds`.
///
/// The bound used is the larger of this continuous-time expression and its
/// exact analog for the implicit step, `(1+ρh)^{-2k} ‖X₀ - x⋆‖² + Σ (1+ρh)^{-2(k-j)} σ∞(t_j)² h`;
/// the two agree up to `O(h)`.
pub fn strong_rate_check(
    dist: &MetricTable,
    op: &OperatorSpec,
    noise: &NoiseModel,
    x0: &Vector,
    grid: Grid,
) -> Result<BoundSeries> {
    let rho = op.strong_monotonicity();
    if !(rho > 0.0) {
        return Err(Error::NotStronglyMonotone);
    }
    let MetricKind::DistSqToPoint { point } = &dist.kind else {
        return Err(Error::IncompatibleMetric {
            metric: dist.name().into(),
            reason: "strong_rate needs dist_sq_to_point".into(),
        });
    };
    let e0 = (x0 - point).norm_squared();
    let h = grid.h();
    let c = (1.0 + rho * h).powi(-2);
    let mut discrete = Vec::with_capacity(grid.steps() + 1);
    let mut r = e0;
    discrete.push(r);
    for j in 0..grid.steps() {
        r = c * (r + noise.sigma_inf(grid.time(j)).powi(2) * h);
        discrete.push(r);
    }
    BoundSeries::from_table(dist, |_, t| {
        let k = ((t / h).round() as usize).min(grid.steps());
        let continuous = (-2.0 * rho * t).exp() * e0 + noise.convolved_sigma_inf_sq(rho, t);
        continuous.max(discrete[k])
    })
}

/// Ergodic value bound `E(φ(X̄_t) - min φ) ≤ (1/2t)(d(X₀, S)² + ∫₀ᵗ σ∞²)`.
pub fn ergodic_value_check(gap: &MetricTable, op: &OperatorSpec, noise: &NoiseModel, x0: &Vector) -> Result<BoundSeries> {
    if op.potential().is_none() {
        return Err(Error::NoPotential);
    }
    let d0 = op.zero_set_project(x0)?.1.powi(2);
    BoundSeries::from_table(gap, |_, t| (d0 + noise.int_sigma_inf_sq(t)) / (2.0 * t))
}

/// Strong-convexity variant `E‖X̄_t - x⋆‖² ≤ (1/μt)(‖X₀ - x⋆‖² + ∫₀ᵗ σ∞²)`.
pub fn ergodic_distance_check(
    avg_dist: &MetricTable,
    op: &OperatorSpec,
    noise: &NoiseModel,
    x0: &Vector,
) -> Result<BoundSeries> {
    let mu = op.potential().ok_or(Error::NoPotential)?.strong_convexity;
    if !(mu > 0.0) {
        return Err(Error::NotStronglyConvex);
    }
    let MetricKind::ErgodicDistSqToPoint { point } = &avg_dist.kind else {
        return Err(Error::IncompatibleMetric {
            metric: avg_dist.name().into(),
            reason: "needs ergodic_dist_sq_to_point".into(),
        });
    };
    let e0 = (x0 - point).norm_squared();
    BoundSeries::from_table(avg_dist, |_, t| (e0 + noise.int_sigma_inf_sq(t)) / (mu * t))
}

/// Tail frequencies of `Δφ(X̄_t) ≥ Q₀(t) + ε Q̂₁(t)` against `exp(-ε²/4)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationReport {
    pub times: Vec<f64>,
    pub q0: Vec<f64>,
    pub q1_hat: Vec<f64>,
    pub delta_hat: Vec<f64>,
    pub eps_levels: Vec<f64>,
    /// `empirical_tail[time][eps]`.
    pub empirical_tail: Vec<Vec<f64>>,
    pub bound: Vec<f64>,
    pub n_paths: usize,
    pub standard_errors: Vec<Vec<f64>>,
}

impl ConcentrationReport {
    pub fn violated_at(&self, i: usize, j: usize, slack: f64) -> bool {
        self.empirical_tail[i][j] > self.bound[j] + slack * self.standard_errors[i][j]
    }

    pub fn violated(&self, slack: f64) -> bool {
        (0..self.times.len()).any(|i| (0..self.eps_levels.len()).any(|j| self.violated_at(i, j, slack)))
    }

    pub fn rows(&self, slack: f64) -> Vec<CheckRow> {
        let mut out = Vec::new();
        for i in 0..self.times.len() {
            for j in 0..self.eps_levels.len() {
                out.push(CheckRow::new(
                    "concentration",
                    format!("t={} eps={}", fmt_time(self.times[i]), fmt_time(self.eps_levels[j])),
                    self.bound[j],
                    self.empirical_tail[i][j],
                    Verdict::from_violation(self.violated_at(i, j, slack)),
                ));
            }
        }
        out
    }
}

/// `x⋆ = proj_S(X₀)`, so `2 E_{x⋆}(0) = d(X₀, S)²`.
pub fn concentration_check(
    gap: &MetricTable,
    aux: Option<&MetricTable>,
    op: &OperatorSpec,
    noise: &NoiseModel,
    x0: &Vector,
    eps_levels: &[f64],
    times: &[f64],
) -> Result<ConcentrationReport> {
    if op.potential().is_none() {
        return Err(Error::NoPotential);
    }
    let aux = aux.ok_or(Error::MissingAuxiliary)?;
    if aux.times != gap.times || aux.n_paths() != gap.n_paths() {
        return Err(Error::GridMismatch);
    }
    let d0 = op.zero_set_project(x0)?.1.powi(2);
    let n = gap.n_paths();
    let mut rep = ConcentrationReport {
        times: Vec::new(),
        q0: Vec::new(),
        q1_hat: Vec::new(),
        delta_hat: Vec::new(),
        eps_levels: eps_levels.to_vec(),
        empirical_tail: Vec::new(),
        bound: eps_levels.iter().map(|e| (-e * e / 4.0).exp()).collect(),
        n_paths: n,
        standard_errors: Vec::new(),
    };
    for &t in times {
        let k = gap.time_index(t);
        let tk = gap.times[k];
        if tk <= 0.0 {
            return Err(Error::validation("checks.concentration.times", "requires t > 0"));
        }
        let delta = aux.column(k).sum::<f64>() / n as f64;
        let q0 = (noise.int_sigma_inf_sq(tk) + d0) / tk;
        let q1 = delta.sqrt() / tk;
        let mut tails = Vec::new();
        let mut ses = Vec::new();
        for &eps in eps_levels {
            let level = q0 + eps * q1;
            let hits = gap.column(k).filter(|&g| g >= level).count();
            let p = hits as f64 / n as f64;
            tails.push(p);
            ses.push((p * (1.0 - p) / n as f64).sqrt());
        }
        rep.times.push(tk);
        rep.q0.push(q0);
        rep.q1_hat.push(q1);
        rep.delta_hat.push(delta);
        rep.empirical_tail.push(tails);
        rep.standard_errors.push(ses);
    }
    Ok(rep)
}

/// Tail statistics of the Tikhonov-regularized dynamics.
#[derive(Debug, Clone, PartialEq)]
pub struct TikhonovReport {
    pub r_values: Vec<f64>,
    /// `E sup_{s ≥ r} ‖X_s - x(s)‖²` against the noise-free flow.
    pub flow_tail: Vec<f64>,
    pub flow_tail_se: Vec<f64>,
    /// `E sup_{s ≥ r} ‖X_s - x_{ε(s)}‖²`.
    pub discrepancy_tail: Vec<f64>,
    /// `z_r + ∫ᵣ^∞ σ∞²`.
    pub budget: Vec<f64>,
    /// `discrepancy_tail / budget`; its maximum is the empirical constant.
    pub ratio: Vec<f64>,
    /// `E‖X_T - proj_S(0)‖²`.
    pub final_dist_sq: f64,
    pub final_se: f64,
    /// `ε(T)^{1/p} + z_T² + ∫_T^∞ σ∞²` when an error bound of order `p` is declared.
    pub final_budget: Option<f64>,
}

impl TikhonovReport {
    pub fn constant(&self) -> f64 {
        self.ratio.iter().copied().fold(0.0, f64::max)
    }

    /// `max ratio / min ratio` over the configured `r`.
    pub fn ratio_spread(&self) -> f64 {
        let lo = self.ratio.iter().copied().fold(f64::INFINITY, f64::min);
        self.constant() / lo
    }

    pub fn flow_tail_violations(&self, slack: f64) -> Vec<bool> {
        let later = (1..self.r_values.len()).map(|i| {
            let se = (self.flow_tail_se[i].powi(2) + self.flow_tail_se[i - 1].powi(2)).sqrt();
            self.flow_tail[i] > self.flow_tail[i - 1] + slack * se + 1e-15
        });
        std::iter::once(false).chain(later).take(self.r_values.len()).collect()
    }

    pub fn violated(&self, slack: f64) -> bool {
        self.flow_tail_violations(slack).into_iter().any(|v| v) || !self.constant().is_finite()
    }

    pub fn rows(&self, slack: f64) -> Vec<CheckRow> {
        let flags = self.flow_tail_violations(slack);
        let mut out = Vec::new();
        for (i, &flag) in flags.iter().enumerate() {
            let prev = if i == 0 { f64::INFINITY } else { self.flow_tail[i - 1] };
            out.push(CheckRow::new(
                "tikhonov",
                format!("flow_tail r={}", fmt_time(self.r_values[i])),
                prev,
                self.flow_tail[i],
                Verdict::from_violation(flag),
            ));
        }
        for i in 0..self.r_values.len() {
            out.push(CheckRow::new(
                "tikhonov",
                format!("ratio r={}", fmt_time(self.r_values[i])),
                self.budget[i],
                self.discrepancy_tail[i],
                Verdict::Info,
            ));
        }
        out.push(CheckRow::new(
            "tikhonov",
            "constant".into(),
            f64::INFINITY,
            self.constant(),
            Verdict::from_violation(!self.constant().is_finite()),
        ));
        out.push(CheckRow::new(
            "tikhonov",
            "final_dist_sq".into(),
            self.final_budget.unwrap_or(f64::NAN),
            self.final_dist_sq,
            Verdict::Info,
        ));
        out
    }
}

fn tail_sup(table: &MetricTable, r: f64) -> (f64, f64) {
    let start = table.times.iter().position(|&t| t >= r - 1e-12).unwrap_or(table.times.len() - 1);
    let sups: Vec<f64> = table
        .values
        .iter()
        .map(|row| row[start..].iter().copied().fold(0.0, f64::max))
        .collect();
    let n = sups.len() as f64;
    let mean = sups.iter().sum::<f64>() / n;
    let var = if sups.len() > 1 {
        sups.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, (var / n).sqrt())
}

pub fn tikhonov_checks(
    flow: &MetricTable,
    discrepancy: &MetricTable,
    final_dist: &MetricTable,
    op: &OperatorSpec,
    noise: &NoiseModel,
    tik: TikhonovSchedule,
    r_values: &[f64],
) -> Result<TikhonovReport> {
    if tik.is_off() {
        return Err(Error::ScheduleOff);
    }
    let mut rep = TikhonovReport {
        r_values: r_values.to_vec(),
        flow_tail: Vec::new(),
        flow_tail_se: Vec::new(),
        discrepancy_tail: Vec::new(),
        budget: Vec::new(),
        ratio: Vec::new(),
        final_dist_sq: 0.0,
        final_se: 0.0,
        final_budget: None,
    };
    for &r in r_values {
        let (m, se) = tail_sup(flow, r);
        rep.flow_tail.push(m);
        rep.flow_tail_se.push(se);
        let (d, _) = tail_sup(discrepancy, r);
        let budget = tik.z(r) + noise.tail_sigma_inf_sq(r);
        rep.discrepancy_tail.push(d);
        rep.budget.push(budget);
        rep.ratio.push(d / budget);
    }
    let last = final_dist.times.len() - 1;
    let stats = reduce_stats(&final_dist.times, &final_dist.values)?;
    rep.final_dist_sq = stats.mean[last];
    rep.final_se = stats.se(last);
    let t_end = final_dist.times[last];
    rep.final_budget = op.potential().and_then(|p| p.error_bound).map(|eb| {
        tik.eps(t_end).powf(1.0 / eb.p) + tik.z(t_end).powi(2) + noise.tail_sigma_inf_sq(t_end)
    });
    Ok(rep)
}

/// Power-law fit of the ensemble-mean ergodic gap function.
#[derive(Debug, Clone, PartialEq)]
pub struct GapSlopeReport {
    pub fit: RateFit,
    pub window: (f64, f64),
    /// Fitted exponents above this value count as slower than `O(1/t)`.
    pub max_exponent: f64,
}

impl GapSlopeReport {
    pub fn violated(&self) -> bool {
        !(self.fit.rate <= self.max_exponent)
    }

    pub fn rows(&self) -> Vec<CheckRow> {
        vec![CheckRow::new(
            "gap_slope",
            format!("exponent t={}..{}", fmt_time(self.window.0), fmt_time(self.window.1)),
            self.max_exponent,
            self.fit.rate,
            Verdict::from_violation(self.violated()),
        )]
    }
}

/// `window` defaults to `[T/4, T]`.
pub fn gap_slope_check(gap: &MetricTable, window: Option<(f64, f64)>, max_exponent: f64) -> Result<GapSlopeReport> {
    let t_end = gap.times.last().copied().unwrap_or(0.0);
    let window = window.unwrap_or((t_end / 4.0, t_end));
    let stats = reduce_stats(&gap.times, &gap.values)?;
    let fit = fit_rate(&gap.times, &stats.mean, RateModel::PowerLaw, window)?;
    Ok(GapSlopeReport {
        fit,
        window,
        max_exponent,
    })
}

/// RMS error against the exact solution at the final time and its maximum over time.
pub fn exact_oracle_rows(err: &MetricTable, tolerance: Option<f64>) -> Result<Vec<CheckRow>> {
    let stats = reduce_stats(&err.times, &err.values)?;
    let rms: Vec<f64> = stats.mean.iter().map(|m| m.sqrt()).collect();
    let last = rms.len() - 1;
    let (mut worst, mut worst_k) = (0.0, 0);
    for (k, &r) in rms.iter().enumerate() {
        if r > worst {
            (worst, worst_k) = (r, k);
        }
    }
    let row = |item: String, observed: f64| {
        let verdict = match tolerance {
            None => Verdict::Info,
            Some(tol) => Verdict::from_violation(!(observed <= tol)),
        };
        CheckRow::new("exact_oracle", item, tolerance.unwrap_or(f64::NAN), observed, verdict)
    };
    Ok(vec![
        row(format!("rms t={}", fmt_time(err.times[last])), rms[last]),
        row(format!("max rms t={}", fmt_time(err.times[worst_k])), worst),
    ])
}

/// Convergence check requested by a scenario.
#[derive(Debug, Clone, PartialEq)]
pub enum CheckSpec {
    StrongRate { slack: f64 },
    /// Runs the strong-convexity variant too when `μ > 0`.
    ErgodicValue { slack: f64 },
    Concentration { eps_levels: Vec<f64>, times: Vec<f64>, slack: f64 },
    Tikhonov { r_values: Vec<f64>, slack: f64 },
    GapSlope {
        region: crate::operator::Region,
        n_grid: usize,
        window: Option<(f64, f64)>,
        max_exponent: f64,
    },
    /// RMS distance to the exact solution; informational without a tolerance.
    ExactOracle { tolerance: Option<f64> },
}

impl CheckSpec {
    pub fn name(&self) -> &'static str {
        match self {
            CheckSpec::StrongRate { .. } => "strong_rate",
            CheckSpec::ErgodicValue { .. } => "ergodic_value",
            CheckSpec::Concentration { .. } => "concentration",
            CheckSpec::Tikhonov { .. } => "tikhonov",
            CheckSpec::GapSlope { .. } => "gap_slope",
            CheckSpec::ExactOracle { .. } => "exact_oracle",
        }
    }

    /// Metrics that must be evaluated on every path for this check.
    pub fn required_metrics(&self, op: &OperatorSpec, x0: &Vector) -> Result<Vec<MetricKind>> {
        Ok(match self {
            CheckSpec::StrongRate { .. } => {
                if !(op.strong_monotonicity() > 0.0) {
                    return Err(Error::NotStronglyMonotone);
                }
                vec![MetricKind::DistSqToPoint {
                    point: op.min_norm_zero()?,
                }]
            }
            CheckSpec::ErgodicValue { .. } => {
                let pot = op.potential().ok_or(Error::NoPotential)?;
                let mut v = vec![MetricKind::ErgodicValueGap];
                if pot.strong_convexity > 0.0 {
                    v.push(MetricKind::ErgodicDistSqToPoint {
                        point: op.zero_set_project(x0)?.0,
                    });
                }
                v
            }
            CheckSpec::Concentration { .. } => {
                op.potential().ok_or(Error::NoPotential)?;
                vec![MetricKind::ErgodicValueGap, MetricKind::AuxDelta]
            }
            CheckSpec::Tikhonov { .. } => vec![
                MetricKind::FlowDiscrepancy,
                MetricKind::TikhonovDiscrepancy,
                MetricKind::DistSqToPoint {
                    point: op.min_norm_zero()?,
                },
            ],
            CheckSpec::GapSlope { region, n_grid, .. } => vec![MetricKind::ErgodicGapFunction {
                region: region.clone(),
                n_grid: *n_grid,
            }],
            CheckSpec::ExactOracle { .. } => vec![MetricKind::ExactErrorSq],
        })
    }

    /// Evaluate against the per-path tables of an ensemble.
    pub fn evaluate(&self, input: &CheckInput<'_>) -> Result<CheckResult> {
        let tables = input.tables;
        let (op, noise, x0) = (input.op, input.noise, input.x0);
        Ok(match self {
            CheckSpec::StrongRate { slack } => {
                let star = op.min_norm_zero()?;
                let t = find(tables, |k| matches!(k, MetricKind::DistSqToPoint { point } if *point == star), "dist_sq_to_point")?;
                let s = strong_rate_check(t, op, noise, x0, input.grid)?;
                CheckResult::new(s.rows("strong_rate", *slack))
            }
            CheckSpec::ErgodicValue { slack } => {
                let t = find(tables, |k| *k == MetricKind::ErgodicValueGap, "ergodic_value_gap")?;
                let mut rows = ergodic_value_check(t, op, noise, x0)?.rows("ergodic_value", *slack);
                if op.potential().is_some_and(|p| p.strong_convexity > 0.0) {
                    let t = find(tables, |k| matches!(k, MetricKind::ErgodicDistSqToPoint { .. }), "ergodic_dist_sq_to_point")?;
                    rows.extend(ergodic_distance_check(t, op, noise, x0)?.rows("ergodic_value_strong", *slack));
                }
                CheckResult::new(rows)
            }
            CheckSpec::Concentration {
                eps_levels,
                times,
                slack,
            } => {
                let gap = find(tables, |k| *k == MetricKind::ErgodicValueGap, "ergodic_value_gap")?;
                let aux = tables.iter().find(|t| t.kind == MetricKind::AuxDelta);
                let rep = concentration_check(gap, aux, op, noise, x0, eps_levels, times)?;
                let mut r = CheckResult::new(rep.rows(*slack));
                r.concentration = Some(rep);
                r
            }
            CheckSpec::Tikhonov { r_values, slack } => {
                let star = op.min_norm_zero()?;
                let flow = find(tables, |k| *k == MetricKind::FlowDiscrepancy, "flow_discrepancy")?;
                let disc = find(tables, |k| *k == MetricKind::TikhonovDiscrepancy, "tikhonov_discrepancy")?;
                let fin = find(tables, |k| matches!(k, MetricKind::DistSqToPoint { point } if *point == star), "dist_sq_to_point")?;
                let rep = tikhonov_checks(flow, disc, fin, op, noise, input.tik, r_values)?;
                CheckResult::new(rep.rows(*slack))
            }
            CheckSpec::GapSlope {
                window, max_exponent, ..
            } => {
                let gap = find(tables, |k| matches!(k, MetricKind::ErgodicGapFunction { .. }), "ergodic_gap_function")?;
                CheckResult::new(gap_slope_check(gap, *window, *max_exponent)?.rows())
            }
            CheckSpec::ExactOracle { tolerance } => {
                let err = find(tables, |k| *k == MetricKind::ExactErrorSq, "exact_error_sq")?;
                CheckResult::new(exact_oracle_rows(err, *tolerance)?)
            }
        })
    }
}

/// Everything a check needs besides its own parameters.
#[derive(Debug, Clone, Copy)]
pub struct CheckInput<'a> {
    pub tables: &'a [MetricTable],
    pub op: &'a OperatorSpec,
    pub noise: &'a NoiseModel,
    pub tik: TikhonovSchedule,
    pub x0: &'a Vector,
    pub grid: Grid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub rows: Vec<CheckRow>,
    pub concentration: Option<ConcentrationReport>,
}

impl CheckResult {
    fn new(rows: Vec<CheckRow>) -> Self {
        CheckResult {
            rows,
            concentration: None,
        }
    }

    pub fn violated(&self) -> bool {
        self.rows.iter().any(|r| r.verdict == Verdict::Violated)
    }
}
