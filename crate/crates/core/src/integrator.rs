//! Semi-implicit resolvent Euler–Maruyama scheme.
//!
//! One step from `x` at time `t` with Brownian increment `db`:
//!
//! ```text
//! p      = x + h F(t, x) + σ(t, x) db          F(t, x) = -ε(t) x
//! x'     = J_{hA}(p)
//! dM     = -(I - Π) σ(t, x) db
//! dY     = p - x' + dM
//! ```
//!
//! so that `x' = x - dY + dM + h F + σ db` holds identically and `dY` lies in
//! `h A(x')`. The auxiliary process follows `W' = W - Π σ db` from `W₀ = X₀`.

use crate::error::{Error, Result};
use crate::linalg::{inf_norm, Vector};
use crate::noise::{NoiseModel, TikhonovSchedule};
use crate::operator::{OperatorSpec, PreparedResolvent, DOMAIN_TOL};
use crate::rng::PathStream;
use crate::subspace::{domain_subspace, reduce_operator, SubspaceInfo};

/// Uniform time grid `t_k = k h`, `k = 0..=steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    h: f64,
    steps: usize,
}

impl Grid {
    pub fn new(h: f64, t_end: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::validation("grid.h", "requires h > 0"));
        }
        if !(t_end.is_finite() && t_end >= 10.0 * h) {
            return Err(Error::validation("grid.T", "requires T >= 10 h"));
        }
        let steps = (t_end / h).round();
        if (steps * h - t_end).abs() > 1e-9 * t_end || steps > 1e9 {
            return Err(Error::validation("grid.T", "must be an integer multiple of h"));
        }
        Ok(Grid {
            h,
            steps: steps as usize,
        })
    }

    pub fn with_steps(h: f64, steps: usize) -> Result<Self> {
        Grid::new(h, h * steps as f64)
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.h
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.steps)
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| self.time(k)).collect()
    }
}

/// Output of a single scheme step.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub x_next: Vector,
    pub dy: Vector,
    pub dm: Vector,
    /// `h F(t, x)`.
    pub drift: Vector,
    /// `σ(t, x) db`.
    pub noise: Vector,
}

/// Discretized solution triplet with its bookkeeping sums.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub h: f64,
    pub times: Vec<f64>,
    pub x: Vec<Vector>,
    pub y: Vec<Vector>,
    pub m: Vec<Vector>,
    pub w: Vec<Vector>,
    /// Brownian increments (empty for paths read back from disk).
    pub db: Vec<Vector>,
    /// Running `Σ h F`.
    pub drift: Vec<Vector>,
    /// Running `Σ σ db`.
    pub noise: Vec<Vector>,
}

impl Path {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn steps(&self) -> usize {
        self.x.len().saturating_sub(1)
    }

    pub fn dim(&self) -> usize {
        self.x.first().map_or(0, Vector::len)
    }

    pub fn t_end(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    pub fn dy(&self, k: usize) -> Vector {
        &self.y[k + 1] - &self.y[k]
    }

    pub fn sup_norm(&self) -> f64 {
        self.x.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `max_k ‖X_k - (X₀ - Y_k + M_k + Σ h F + Σ σ db)‖∞`.
    pub fn decomposition_residual(&self) -> f64 {
        let Some(x0) = self.x.first() else { return 0.0 };
        (0..self.len())
            .map(|k| {
                let rebuilt = x0 - &self.y[k] + &self.m[k] + &self.drift[k] + &self.noise[k];
                inf_norm(&(&self.x[k] - rebuilt))
            })
            .fold(0.0, f64::max)
    }

    /// Tolerance `0.05 (1 + sup ‖X‖) h T` for the certificates.
    pub fn certificate_tolerance(&self) -> f64 {
        0.05 * (1.0 + self.sup_norm()) * self.h * self.t_end()
    }
}

#[derive(Debug, Clone)]
pub struct Integrator {
    op: OperatorSpec,
    resolvent: PreparedResolvent,
    info: SubspaceInfo,
    noise: NoiseModel,
    tik: TikhonovSchedule,
    grid: Grid,
    drift_shift: Option<Vector>,
}

impl Integrator {
    pub fn new(op: OperatorSpec, noise: NoiseModel, tik: TikhonovSchedule, grid: Grid) -> Result<Self> {
        if noise.dim() != op.dim() {
            return Err(Error::DimensionMismatch(format!(
                "noise acts on R^{} but the operator on R^{}",
                noise.dim(),
                op.dim()
            )));
        }
        let resolvent = op.prepare_resolvent(grid.h())?;
        let info = domain_subspace(&op);
        Ok(Integrator {
            op,
            resolvent,
            info,
            noise,
            tik,
            grid,
            drift_shift: None,
        })
    }

    /// Use the drift `F(t, x) = -ε(t) (x + c)`.
    pub fn with_drift_shift(mut self, c: Vector) -> Self {
        self.drift_shift = Some(c);
        self
    }

    pub fn op(&self) -> &OperatorSpec {
        &self.op
    }

    pub fn info(&self) -> &SubspaceInfo {
        &self.info
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    pub fn tikhonov(&self) -> TikhonovSchedule {
        self.tik
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// The same dynamics in coordinates `z = P*(x - u₀)` of the domain's affine hull.
    pub fn reduced(&self) -> Result<Integrator> {
        let op = reduce_operator(&self.op, &self.info)?;
        let noise = self.noise.reduced(&self.info);
        let mut shift = self.info.basis() * self.info.anchor();
        if let Some(c) = &self.drift_shift {
            shift += self.info.basis() * c;
        }
        Ok(Integrator::new(op, noise, self.tik, self.grid)?.with_drift_shift(shift))
    }

    fn drift(&self, t: f64, x: &Vector) -> Vector {
        let eps = self.tik.eps(t);
        match &self.drift_shift {
            Some(c) => (x + c) * (-eps),
            None => x * (-eps),
        }
    }

    pub fn step(&self, x: &Vector, t: f64, db: &Vector) -> Result<Step> {
        let h = self.grid.h();
        let drift = self.drift(t, x) * h;
        let noise = self.noise.apply(t, x, db);
        let p = x + &drift + &noise;
        let x_next = self.resolvent.apply(&p);
        if x_next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState {
                step: (t / h).round() as usize,
            });
        }
        let dm = -self.info.normal(&noise);
        let dy = &p - &x_next + &dm;
        Ok(Step {
            x_next,
            dy,
            dm,
            drift,
            noise,
        })
    }

    /// `x0` itself when it lies in `cl dom A`, its projection when it is off by
    /// rounding only.
    pub fn initial_state(&self, x0: &Vector) -> Result<Vector> {
        if x0.len() != self.op.dim() {
            return Err(Error::DimensionMismatch("initial condition".into()));
        }
        let residual = self.op.domain_residual(x0);
        if !(residual <= DOMAIN_TOL * (1.0 + inf_norm(x0))) {
            return Err(Error::InitialConditionOutsideDomain { residual });
        }
        if residual == 0.0 {
            Ok(x0.clone())
        } else {
            Ok(self.op.project_domain(x0))
        }
    }

    /// Increments `db_k ~ N(0, h I)` for one path.
    pub fn draw_increments(&self, rng: &mut PathStream) -> Vec<Vector> {
        let scale = self.grid.h().sqrt();
        (0..self.grid.steps())
            .map(|_| {
                let mut v = Vector::zeros(self.noise.width());
                rng.fill_normal(v.as_mut_slice(), scale);
                v
            })
            .collect()
    }

    pub fn simulate_path(&self, x0: &Vector, master_seed: u64, path_index: u64) -> Result<Path> {
        let mut rng = PathStream::new(master_seed, path_index);
        let db = self.draw_increments(&mut rng);
        self.simulate_with_increments(x0, db)
    }

    pub fn simulate_with_increments(&self, x0: &Vector, db: Vec<Vector>) -> Result<Path> {
        if db.len() != self.grid.steps() || db.iter().any(|v| v.len() != self.noise.width()) {
            return Err(Error::DimensionMismatch("Brownian increments do not match the grid".into()));
        }
        let x0 = self.initial_state(x0)?;
        let n = self.grid.steps();
        let d = x0.len();
        let mut path = Path {
            h: self.grid.h(),
            times: self.grid.times(),
            x: Vec::with_capacity(n + 1),
            y: Vec::with_capacity(n + 1),
            m: Vec::with_capacity(n + 1),
            w: Vec::with_capacity(n + 1),
            db: Vec::new(),
            drift: Vec::with_capacity(n + 1),
            noise: Vec::with_capacity(n + 1),
        };
        path.x.push(x0.clone());
        path.w.push(x0);
        for v in [&mut path.y, &mut path.m, &mut path.drift, &mut path.noise] {
            v.push(Vector::zeros(d));
        }
        for (k, inc) in db.iter().enumerate() {
            let s = self.step(&path.x[k], self.grid.time(k), inc)?;
            let w_next = &path.w[k] - self.info.tangent(&s.noise);
            path.y.push(&path.y[k] + &s.dy);
            path.m.push(&path.m[k] + &s.dm);
            path.drift.push(&path.drift[k] + &s.drift);
            path.noise.push(&path.noise[k] + &s.noise);
            path.w.push(w_next);
            path.x.push(s.x_next);
        }
        path.db = db;
        Ok(path)
    }
}

/// Noise-free trajectory `x' ∈ -A(x) - ε(t) x` on `grid`.
pub fn simulate_deterministic_flow(
    op: &OperatorSpec,
    tik: TikhonovSchedule,
    x0: &Vector,
    grid: Grid,
) -> Result<Vec<Vector>> {
    let integ = Integrator::new(op.clone(), NoiseModel::zero(op.dim()), tik, grid)?;
    let db = vec![Vector::zeros(op.dim()); grid.steps()];
    Ok(integ.simulate_with_increments(x0, db)?.x)
}

/// Index windows `[a, b]` of the dyadic subdivisions of `0..=n`, down to
/// 64 pieces.
pub fn dyadic_windows(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut parts = 1usize;
    while parts <= 64 && parts <= n.max(1) {
        for j in 0..parts {
            let (a, b) = (j * n / parts, (j + 1) * n / parts);
            if b > a {
                out.push((a, b));
            }
        }
        parts *= 2;
    }
    out
}

fn min_window_sum(terms: &[f64], windows: &[(usize, usize)]) -> f64 {
    let mut prefix = Vec::with_capacity(terms.len() + 1);
    prefix.push(0.0);
    for t in terms {
        prefix.push(prefix.last().unwrap() + t);
    }
    windows
        .iter()
        .map(|&(a, b)| prefix[b] - prefix[a])
        .fold(f64::INFINITY, f64::min)
}

/// `min` over probes and dyadic windows of `Σ ⟨X_{k+1} - α, dY_k - h β⟩`.
pub fn monotonicity_certificate(path: &Path, op: &OperatorSpec, probes: &[(Vector, Vector)]) -> Result<f64> {
    monotonicity_certificate_over(path, op, probes, &dyadic_windows(path.steps()))
}

pub fn monotonicity_certificate_over(
    path: &Path,
    op: &OperatorSpec,
    probes: &[(Vector, Vector)],
    windows: &[(usize, usize)],
) -> Result<f64> {
    let mut best = f64::INFINITY;
    for (index, (alpha, beta)) in probes.iter().enumerate() {
        let residual = op.graph_residual(alpha, beta);
        if !(residual <= 1e-9) {
            return Err(Error::InvalidProbe { index, residual });
        }
        let terms: Vec<f64> = (0..path.steps())
            .map(|k| (&path.x[k + 1] - alpha).dot(&(path.dy(k) - beta * path.h)))
            .collect();
        best = best.min(min_window_sum(&terms, windows));
    }
    Ok(best)
}

/// `min` over dyadic windows of `Σ h (φ(α) - φ(X_{k+1})) - Σ ⟨α - X_{k+1}, dY_k⟩`.
pub fn convex_value_certificate(path: &Path, op: &OperatorSpec, alpha: &Vector) -> Result<f64> {
    convex_value_certificate_over(path, op, alpha, &dyadic_windows(path.steps()))
}

pub fn convex_value_certificate_over(
    path: &Path,
    op: &OperatorSpec,
    alpha: &Vector,
    windows: &[(usize, usize)],
) -> Result<f64> {
    let phi_alpha = op.potential_value(alpha)?;
    if !phi_alpha.is_finite() {
        return Err(Error::OutsideDomain {
            residual: op.domain_residual(alpha),
        });
    }
    let terms = (0..path.steps())
        .map(|k| {
            let x = &path.x[k + 1];
            Ok(path.h * (phi_alpha - op.potential_value(x)?) - (alpha - x).dot(&path.dy(k)))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(min_window_sum(&terms, windows))
}
