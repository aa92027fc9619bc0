//! Diffusion coefficients `σ(t, x) = s(t) (Σ₀ + Σ₁ tanh(wᵀx + c))` and
//! vanishing Tikhonov schedules `ε(t)`.

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::subspace::SubspaceInfo;

/// Time profile `s(t)` of the diffusion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Schedule {
    /// `s(t) = σ₀ (1 + t)^(-p)`.
    PowerDecay { sigma0: f64, p: f64 },
    Constant { sigma0: f64 },
    Zero,
}

impl Schedule {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Schedule::PowerDecay { sigma0, p } => sigma0 * (1.0 + t).powf(-p),
            Schedule::Constant { sigma0 } => sigma0,
            Schedule::Zero => 0.0,
        }
    }

    /// `∫₀ᵗ s(u)² du`.
    pub fn integral_sq(&self, t: f64) -> f64 {
        match *self {
            Schedule::PowerDecay { sigma0, p } => {
                let e = 1.0 - 2.0 * p;
                if e.abs() < 1e-12 {
                    sigma0 * sigma0 * t.ln_1p()
                } else {
                    // (1+t)^e - 1 without cancellation for small t
                    sigma0 * sigma0 * (e * t.ln_1p()).exp_m1() / e
                }
            }
            Schedule::Constant { sigma0 } => sigma0 * sigma0 * t,
            Schedule::Zero => 0.0,
        }
    }

    /// `∫ᵣ^∞ s(u)² du`, infinite when `s` is not square integrable.
    pub fn tail_sq(&self, r: f64) -> f64 {
        match *self {
            Schedule::PowerDecay { sigma0, p } if p > 0.5 => {
                sigma0 * sigma0 * (1.0 + r).powf(1.0 - 2.0 * p) / (2.0 * p - 1.0)
            }
            Schedule::PowerDecay { sigma0, .. } | Schedule::Constant { sigma0 } if sigma0 == 0.0 => 0.0,
            Schedule::Zero => 0.0,
            _ => f64::INFINITY,
        }
    }

    pub fn is_square_integrable(&self) -> bool {
        self.tail_sq(0.0).is_finite()
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            Schedule::PowerDecay { sigma0, .. } | Schedule::Constant { sigma0 } => sigma0 == 0.0,
            Schedule::Zero => true,
        }
    }
}

/// Bounded state dependence `Σ₁ tanh(wᵀx + c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateCoupling {
    pub weights: Matrix,
    pub w: Vector,
    pub c: f64,
}

impl StateCoupling {
    /// Lipschitz constant `κ₀ = ‖Σ₁‖_F ‖w‖` of the coupling in `x`.
    pub fn kappa0(&self) -> f64 {
        self.weights.norm() * self.w.norm()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    base: Matrix,
    schedule: Schedule,
    coupling: Option<StateCoupling>,
}

impl NoiseModel {
    pub fn new(base: Matrix, schedule: Schedule, coupling: Option<StateCoupling>) -> Result<Self> {
        if base.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("noise.base", "entries must be finite"));
        }
        match schedule {
            Schedule::PowerDecay { sigma0, p } => {
                if !(sigma0.is_finite() && sigma0 >= 0.0) {
                    return Err(Error::validation("noise.sigma0", "requires sigma0 >= 0"));
                }
                if !(p.is_finite() && p >= 0.0) {
                    return Err(Error::validation("noise.p", "requires p >= 0"));
                }
            }
            Schedule::Constant { sigma0 } => {
                if !(sigma0.is_finite() && sigma0 >= 0.0) {
                    return Err(Error::validation("noise.sigma0", "requires sigma0 >= 0"));
                }
            }
            Schedule::Zero => {}
        }
        if let Some(cp) = &coupling {
            if cp.weights.shape() != base.shape() {
                return Err(Error::validation("noise.coupling.weights", "must have the shape of noise.base"));
            }
            if cp.w.len() != base.nrows() {
                return Err(Error::validation("noise.coupling.w", "length must equal the state dimension"));
            }
            if cp.weights.iter().chain(cp.w.iter()).any(|v| !v.is_finite()) || !cp.c.is_finite() {
                return Err(Error::validation("noise.coupling", "entries must be finite"));
            }
        }
        Ok(NoiseModel {
            base,
            schedule,
            coupling,
        })
    }

    /// `σ = s(t) I_d`.
    pub fn isotropic(dim: usize, schedule: Schedule) -> Result<Self> {
        NoiseModel::new(Matrix::identity(dim, dim), schedule, None)
    }

    pub fn zero(dim: usize) -> Self {
        NoiseModel {
            base: Matrix::identity(dim, dim),
            schedule: Schedule::Zero,
            coupling: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.base.nrows()
    }

    /// Number of driving Brownian motions.
    pub fn width(&self) -> usize {
        self.base.ncols()
    }

    pub fn schedule(&self) -> Schedule {
        self.schedule
    }

    pub fn base(&self) -> &Matrix {
        &self.base
    }

    pub fn coupling(&self) -> Option<&StateCoupling> {
        self.coupling.as_ref()
    }

    pub fn is_zero(&self) -> bool {
        self.schedule.is_zero()
            || (self.base.amax() == 0.0 && self.coupling.as_ref().is_none_or(|c| c.weights.amax() == 0.0))
    }

    pub fn kappa0(&self) -> f64 {
        self.coupling.as_ref().map_or(0.0, StateCoupling::kappa0)
    }

    pub fn sigma(&self, t: f64, x: &Vector) -> Matrix {
        let s = self.schedule.value(t);
        match &self.coupling {
            None => &self.base * s,
            Some(cp) => (&self.base + &cp.weights * (cp.w.dot(x) + cp.c).tanh()) * s,
        }
    }

    /// `σ(t, x) db`.
    pub fn apply(&self, t: f64, x: &Vector, db: &Vector) -> Vector {
        let s = self.schedule.value(t);
        let mut out = &self.base * db;
        if let Some(cp) = &self.coupling {
            out += (&cp.weights * db) * (cp.w.dot(x) + cp.c).tanh();
        }
        out * s
    }

    /// Frobenius-norm bound `sup_x ‖σ(t, x)‖`.
    pub fn sigma_inf(&self, t: f64) -> f64 {
        self.schedule.value(t) * self.amplitude()
    }

    fn amplitude(&self) -> f64 {
        self.base.norm() + self.coupling.as_ref().map_or(0.0, |c| c.weights.norm())
    }

    /// `∫₀ᵗ σ∞(u)² du` in closed form.
    pub fn int_sigma_inf_sq(&self, t: f64) -> f64 {
        self.amplitude().powi(2) * self.schedule.integral_sq(t)
    }

    /// `∫ᵣ^∞ σ∞(u)² du` in closed form.
    pub fn tail_sigma_inf_sq(&self, r: f64) -> f64 {
        let a = self.amplitude();
        if a == 0.0 {
            0.0
        } else {
            a * a * self.schedule.tail_sq(r)
        }
    }

    /// `∫₀ᵗ e^{-2ρ(t-u)} σ∞(u)² du` by composite Simpson on the closed-form integrand.
    pub fn convolved_sigma_inf_sq(&self, rho: f64, t: f64) -> f64 {
        simpson(|u| (-2.0 * rho * (t - u)).exp() * self.sigma_inf(u).powi(2), 0.0, t, 2048)
    }

    /// Noise seen by the reduced system `z = basis (x - anchor)`.
    pub fn reduced(&self, info: &SubspaceInfo) -> NoiseModel {
        let b = info.basis();
        NoiseModel {
            base: b * &self.base,
            schedule: self.schedule,
            coupling: self.coupling.as_ref().map(|cp| StateCoupling {
                weights: b * &cp.weights,
                w: b * &cp.w,
                c: cp.c + cp.w.dot(info.anchor()),
            }),
        }
    }
}

/// Composite Simpson rule with `n` (rounded up to even) subintervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    if b <= a {
        return 0.0;
    }
    let n = (n.max(2) + 1) & !1;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + h * i as f64);
    }
    acc * h / 3.0
}

/// Vanishing regularization weight `ε(t)` of the drift `-ε(t) x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TikhonovSchedule {
    Off,
    /// `ε(t) = ε₀ (1 + t)^(-q)` with `0 < q < 1`.
    PowerEps { eps0: f64, q: f64 },
}

impl TikhonovSchedule {
    pub fn power_eps(eps0: f64, q: f64) -> Result<Self> {
        if !(eps0.is_finite() && eps0 > 0.0) {
            return Err(Error::validation("tikhonov.eps0", "requires eps0 > 0"));
        }
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::validation("tikhonov.q", "requires 0 < q < 1"));
        }
        Ok(TikhonovSchedule::PowerEps { eps0, q })
    }

    pub fn is_off(&self) -> bool {
        matches!(self, TikhonovSchedule::Off)
    }

    pub fn eps(&self, t: f64) -> f64 {
        match *self {
            TikhonovSchedule::Off => 0.0,
            TikhonovSchedule::PowerEps { eps0, q } => eps0 * (1.0 + t).powf(-q),
        }
    }

    pub fn deps(&self, t: f64) -> f64 {
        match *self {
            TikhonovSchedule::Off => 0.0,
            TikhonovSchedule::PowerEps { eps0, q } => -q * eps0 * (1.0 + t).powf(-q - 1.0),
        }
    }

    /// `z_t = sup_{s ≥ t} |ε'(s)| / ε(s)²`.
    pub fn z(&self, t: f64) -> f64 {
        match *self {
            TikhonovSchedule::Off => 0.0,
            TikhonovSchedule::PowerEps { eps0, q } => q / eps0 * (1.0 + t).powf(q - 1.0),
        }
    }
}
