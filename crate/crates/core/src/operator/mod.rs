//! Catalog of maximal monotone operators.
//!
//! Every kind carries an exact resolvent, a graph-membership residual, a
//! declared domain geometry and a zero-set descriptor. Set-valued images are
//! never materialized; tests go through [`OperatorSpec::graph_residual`],
//! sampling and the minimal-norm selection.

mod gap;
pub mod plq;
mod sample;

pub use gap::{GapEstimate, GapQuery};
pub use plq::{Plq1d, Quad};

use crate::error::{Error, Result};
use crate::linalg::{self, inf_norm, Matrix, Vector};

/// Absolute tolerance for affine/interval domain membership.
pub const DOMAIN_TOL: f64 = 1e-9;

/// An affine set `{x : C x = d}` with a feasible anchor and an orthonormal
/// basis (rows) of its direction space.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineSlice {
    c: Matrix,
    d: Vector,
    anchor: Vector,
    basis: Matrix,
}

impl AffineSlice {
    /// Returns `None` when the system is inconsistent.
    pub fn new(c: Matrix, d: Vector) -> Result<Option<Self>> {
        let dim = c.ncols();
        if c.nrows() != d.len() {
            return Err(Error::DimensionMismatch(format!(
                "constraint matrix has {} rows but right-hand side has {} entries",
                c.nrows(),
                d.len()
            )));
        }
        let anchor = linalg::pinv(&c) * &d;
        let resid = inf_norm(&(&c * &anchor - &d));
        if resid > 1e-8 * (1.0 + inf_norm(&d)) {
            return Ok(None);
        }
        let basis = linalg::null_space_rows(&c, dim);
        Ok(Some(AffineSlice { c, d, anchor, basis }))
    }

    pub fn dim(&self) -> usize {
        self.anchor.len()
    }

    pub fn anchor(&self) -> &Vector {
        &self.anchor
    }

    /// Orthonormal rows spanning the direction space.
    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn constraints(&self) -> (&Matrix, &Vector) {
        (&self.c, &self.d)
    }

    pub fn violation(&self, x: &Vector) -> f64 {
        if self.c.nrows() == 0 {
            return 0.0;
        }
        inf_norm(&(&self.c * x - &self.d))
    }

    pub fn project(&self, x: &Vector) -> Vector {
        &self.anchor + self.tangent(&(x - &self.anchor))
    }

    /// Orthogonal projection of a direction onto the slice's direction space.
    pub fn tangent(&self, v: &Vector) -> Vector {
        self.basis.transpose() * (&self.basis * v)
    }

    fn shifted(&self, s: &Vector) -> AffineSlice {
        AffineSlice {
            c: self.c.clone(),
            d: &self.d + &self.c * s,
            anchor: self.tangent_complement(&(&self.anchor + s)),
            basis: self.basis.clone(),
        }
    }

    /// Canonical (minimum-norm) representative of the slice through `x`.
    fn tangent_complement(&self, x: &Vector) -> Vector {
        x - self.tangent(x)
    }
}

/// Description of `S = {x : 0 in A(x)}`.
#[derive(Debug, Clone, PartialEq)]
pub enum ZeroSet {
    Point(Vector),
    Box { lo: Vector, hi: Vector },
    Affine(AffineSlice),
    Empty,
}

impl ZeroSet {
    pub fn project(&self, x: &Vector) -> Result<(Vector, f64)> {
        let p = match self {
            ZeroSet::Point(p) => p.clone(),
            ZeroSet::Box { lo, hi } => {
                Vector::from_fn(x.len(), |i, _| x[i].clamp(lo[i], hi[i]))
            }
            ZeroSet::Affine(s) => s.project(x),
            ZeroSet::Empty => return Err(Error::EmptyZeroSet),
        };
        let dist = (x - &p).norm();
        Ok((p, dist))
    }

    fn shifted(&self, s: &Vector) -> ZeroSet {
        match self {
            ZeroSet::Point(p) => ZeroSet::Point(p + s),
            ZeroSet::Box { lo, hi } => ZeroSet::Box {
                lo: lo + s,
                hi: hi + s,
            },
            ZeroSet::Affine(a) => ZeroSet::Affine(a.shifted(s)),
            ZeroSet::Empty => ZeroSet::Empty,
        }
    }
}

/// `phi(x) - min phi >= gamma * d(x; S)^p` on `[phi <= level]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorBound {
    pub p: f64,
    pub gamma: f64,
    pub level: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialInfo {
    /// `None` when the infimum is not attained.
    pub min_value: Option<f64>,
    pub strong_convexity: f64,
    pub error_bound: Option<ErrorBound>,
}

/// Compact region used by gap evaluation and graph sampling.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    Box { lo: Vector, hi: Vector },
    Ball { center: Vector, radius: f64 },
}

impl Region {
    pub fn unit_ball(dim: usize) -> Self {
        Region::Ball {
            center: Vector::zeros(dim),
            radius: 1.0,
        }
    }

    pub fn cube(dim: usize, half_width: f64) -> Self {
        Region::Box {
            lo: Vector::from_element(dim, -half_width),
            hi: Vector::from_element(dim, half_width),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Region::Box { lo, .. } => lo.len(),
            Region::Ball { center, .. } => center.len(),
        }
    }

    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        match self {
            Region::Box { lo, hi } => (0..x.len()).all(|i| x[i] >= lo[i] - tol && x[i] <= hi[i] + tol),
            Region::Ball { center, radius } => (x - center).norm() <= radius + tol,
        }
    }

    pub fn project(&self, x: &Vector) -> Vector {
        match self {
            Region::Box { lo, hi } => Vector::from_fn(x.len(), |i, _| x[i].clamp(lo[i], hi[i])),
            Region::Ball { center, radius } => {
                let r = x - center;
                let n = r.norm();
                if n <= *radius {
                    x.clone()
                } else {
                    center + r * (radius / n)
                }
            }
        }
    }

    /// Axis-aligned bounding box.
    pub fn bounds(&self) -> (Vector, Vector) {
        match self {
            Region::Box { lo, hi } => (lo.clone(), hi.clone()),
            Region::Ball { center, radius } => (center.add_scalar(-radius), center.add_scalar(*radius)),
        }
    }

    fn shifted(&self, s: &Vector) -> Region {
        match self {
            Region::Box { lo, hi } => Region::Box {
                lo: lo + s,
                hi: hi + s,
            },
            Region::Ball { center, radius } => Region::Ball {
                center: center + s,
                radius: *radius,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OperatorKind {
    /// `A(x) = Q x + b` with `Q + Q^T` positive semidefinite.
    Linear { q: Matrix, b: Vector },
    /// `A = d phi` with `phi(x) = sum_i phi_i(x_i)`.
    SeparablePlq { coords: Vec<Plq1d> },
    /// Normal cone of an affine set.
    AffineNormalCone { slice: AffineSlice },
    /// Subdifferential of `1/2 x^T H x + g^T x` restricted to an affine set.
    RestrictedQuadratic { h: Matrix, g: Vector, slice: AffineSlice },
    /// `Q x + b + N_C(x)` for an affine set `C`.
    Sum { q: Matrix, b: Vector, slice: AffineSlice },
    /// `A(x) = inner(x - shift)`.
    Shifted { inner: Box<OperatorSpec>, shift: Vector },
    /// `A(x) = factor * inner(x)`.
    Scaled { inner: Box<OperatorSpec>, factor: f64 },
}

/// A maximal monotone operator with its derived metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSpec {
    kind: OperatorKind,
    dim: usize,
    strong_monotonicity: f64,
    lipschitz: Option<f64>,
    potential: Option<PotentialInfo>,
    zero_set: ZeroSet,
}

fn check_square(name: &str, q: &Matrix, dim: usize) -> Result<()> {
    if q.nrows() != dim || q.ncols() != dim {
        return Err(Error::DimensionMismatch(format!(
            "{name} must be {dim}x{dim}, got {}x{}",
            q.nrows(),
            q.ncols()
        )));
    }
    Ok(())
}

fn check_len(name: &str, v: &Vector, dim: usize) -> Result<()> {
    if v.len() != dim {
        return Err(Error::DimensionMismatch(format!(
            "{name} must have {dim} entries, got {}",
            v.len()
        )));
    }
    Ok(())
}

fn check_finite_matrix(name: &str, m: &Matrix) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidOperator(format!("{name} has non-finite entries")))
    }
}

impl OperatorSpec {
    pub fn linear(q: Matrix, b: Vector) -> Result<Self> {
        let dim = b.len();
        if dim == 0 {
            return Err(Error::InvalidOperator("dimension must be positive".into()));
        }
        check_square("Q", &q, dim)?;
        check_finite_matrix("Q", &q)?;
        check_finite_matrix("b", &Matrix::from_column_slice(dim, 1, b.as_slice()))?;
        let rho = linalg::min_sym_eigenvalue(&q);
        if rho < -1e-10 * (1.0 + q.amax()) {
            return Err(Error::InvalidOperator("Q + Q^T must be positive semidefinite".into()));
        }
        let zero_set = match AffineSlice::new(q.clone(), -&b)? {
            None => ZeroSet::Empty,
            Some(s) if s.basis.nrows() == 0 => ZeroSet::Point(s.anchor.clone()),
            Some(s) => ZeroSet::Affine(s),
        };
        let potential = linalg::is_symmetric(&q, 1e-12).then(|| PotentialInfo {
            min_value: None,
            strong_convexity: rho.max(0.0),
            error_bound: None,
        });
        let lipschitz = Some(linalg::spectral_norm(&q));
        Self::finish(
            OperatorKind::Linear { q, b },
            dim,
            rho.max(0.0),
            lipschitz,
            potential,
            zero_set,
        )
    }

    /// `A(x) = x` on `R^dim`, i.e. the gradient of `1/2 |x|^2`.
    pub fn identity(dim: usize) -> Result<Self> {
        Self::linear(Matrix::identity(dim, dim), Vector::zeros(dim))
    }

    pub fn separable_plq(coords: Vec<Plq1d>) -> Result<Self> {
        let dim = coords.len();
        if dim == 0 {
            return Err(Error::InvalidOperator("dimension must be positive".into()));
        }
        let rho = coords
            .iter()
            .filter(|c| !c.is_degenerate())
            .map(|c| c.strong_convexity())
            .fold(f64::INFINITY, f64::min);
        let rho = if rho.is_finite() { rho } else { 0.0 };
        let lipschitz = coords
            .iter()
            .map(|c| c.lipschitz())
            .try_fold(0.0_f64, |acc, l| l.map(|l| acc.max(l)));
        let argmins: Option<Vec<(f64, f64)>> = coords.iter().map(|c| c.argmin()).collect();
        let zero_set = match argmins {
            None => ZeroSet::Empty,
            Some(a) => ZeroSet::Box {
                lo: Vector::from_iterator(dim, a.iter().map(|x| x.0)),
                hi: Vector::from_iterator(dim, a.iter().map(|x| x.1)),
            },
        };
        let potential = Some(PotentialInfo {
            min_value: None,
            strong_convexity: rho,
            error_bound: None,
        });
        Self::finish(
            OperatorKind::SeparablePlq { coords },
            dim,
            rho,
            lipschitz,
            potential,
            zero_set,
        )
    }

    /// Normal cone of `{x : C x = d}`.
    pub fn affine_normal_cone(c: Matrix, d: Vector) -> Result<Self> {
        let dim = c.ncols();
        let slice = Self::slice(c, d)?;
        let zero_set = ZeroSet::Affine(slice.clone());
        let potential = Some(PotentialInfo {
            min_value: None,
            strong_convexity: 0.0,
            error_bound: None,
        });
        Self::finish(
            OperatorKind::AffineNormalCone { slice },
            dim,
            0.0,
            None,
            potential,
            zero_set,
        )
    }

    /// `d (1/2 x^T H x + g^T x + indicator{C x = d})`.
    pub fn restricted_quadratic(h: Matrix, g: Vector, c: Matrix, d: Vector) -> Result<Self> {
        let dim = c.ncols();
        check_square("H", &h, dim)?;
        check_len("g", &g, dim)?;
        if !linalg::is_symmetric(&h, 1e-12) {
            return Err(Error::InvalidOperator("H must be symmetric".into()));
        }
        let slice = Self::slice(c, d)?;
        let (rho, zero_set) = Self::restricted_meta(&h, &g, &slice)?;
        let potential = Some(PotentialInfo {
            min_value: None,
            strong_convexity: rho,
            error_bound: None,
        });
        let lipschitz = (slice.basis.nrows() == dim).then(|| linalg::spectral_norm(&h));
        Self::finish(
            OperatorKind::RestrictedQuadratic { h, g, slice },
            dim,
            rho,
            lipschitz,
            potential,
            zero_set,
        )
    }

    /// The worked two-dimensional example: `f(x, y) = x^2 / 2` on the line
    /// `y = 0` and `+inf` elsewhere, so `A(x, 0) = {x} x R`.
    pub fn line_restricted_example() -> Self {
        Self::restricted_quadratic(
            Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]),
            Vector::zeros(2),
            Matrix::from_row_slice(1, 2, &[0.0, 1.0]),
            Vector::zeros(1),
        )
        .expect("example operator is well formed")
    }

    /// `Q x + b + N_{C x = d}(x)`.
    pub fn sum(q: Matrix, b: Vector, c: Matrix, d: Vector) -> Result<Self> {
        let dim = c.ncols();
        check_square("Q", &q, dim)?;
        check_len("b", &b, dim)?;
        let slice = Self::slice(c, d)?;
        let (rho, zero_set) = Self::restricted_meta(&q, &b, &slice)?;
        let potential = linalg::is_symmetric(&q, 1e-12).then_some(PotentialInfo {
            min_value: None,
            strong_convexity: rho,
            error_bound: None,
        });
        let lipschitz = (slice.basis.nrows() == dim).then(|| linalg::spectral_norm(&q));
        Self::finish(
            OperatorKind::Sum { q, b, slice },
            dim,
            rho,
            lipschitz,
            potential,
            zero_set,
        )
    }

    pub fn shifted(inner: OperatorSpec, shift: Vector) -> Result<Self> {
        check_len("shift", &shift, inner.dim)?;
        if !shift.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidOperator("shift must be finite".into()));
        }
        let zero_set = inner.zero_set.shifted(&shift);
        let potential = inner.potential.clone();
        Self::finish_raw(OperatorSpec {
            dim: inner.dim,
            strong_monotonicity: inner.strong_monotonicity,
            lipschitz: inner.lipschitz,
            potential,
            zero_set,
            kind: OperatorKind::Shifted {
                inner: Box::new(inner),
                shift,
            },
        })
    }

    pub fn scaled(inner: OperatorSpec, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::InvalidOperator("scale factor must be positive".into()));
        }
        let potential = inner.potential.clone().map(|p| PotentialInfo {
            min_value: None,
            strong_convexity: p.strong_convexity * factor,
            error_bound: None,
        });
        Self::finish_raw(OperatorSpec {
            dim: inner.dim,
            strong_monotonicity: inner.strong_monotonicity * factor,
            lipschitz: inner.lipschitz.map(|l| l * factor),
            potential,
            zero_set: inner.zero_set.clone(),
            kind: OperatorKind::Scaled {
                inner: Box::new(inner),
                factor,
            },
        })
    }

    /// Attach error-bound metadata to the potential.
    pub fn with_error_bound(mut self, eb: ErrorBound) -> Result<Self> {
        if !(eb.p >= 1.0 && eb.gamma > 0.0 && eb.level.is_finite()) {
            return Err(Error::InvalidOperator("error bound needs p >= 1 and gamma > 0".into()));
        }
        match self.potential.as_mut() {
            None => Err(Error::NoPotential),
            Some(p) => {
                if let Some(m) = p.min_value {
                    if eb.level <= m {
                        return Err(Error::InvalidOperator(
                            "error-bound level must exceed min phi".into(),
                        ));
                    }
                }
                p.error_bound = Some(eb);
                Ok(self)
            }
        }
    }

    fn slice(c: Matrix, d: Vector) -> Result<AffineSlice> {
        check_finite_matrix("C", &c)?;
        if c.ncols() == 0 {
            return Err(Error::InvalidOperator("dimension must be positive".into()));
        }
        AffineSlice::new(c, d)?
            .ok_or_else(|| Error::InvalidOperator("affine constraints C x = d are inconsistent".into()))
    }

    fn restricted_meta(q: &Matrix, b: &Vector, slice: &AffineSlice) -> Result<(f64, ZeroSet)> {
        let n = &slice.basis;
        let reduced = n * q * n.transpose();
        let rho = linalg::min_sym_eigenvalue(&reduced);
        if rho < -1e-10 * (1.0 + q.amax()) {
            return Err(Error::InvalidOperator(
                "operator must be monotone on the affine set".into(),
            ));
        }
        let dim = slice.dim();
        let k = n.nrows();
        let m = slice.c.nrows();
        let mut stacked = Matrix::zeros(m + k, dim);
        let mut rhs = Vector::zeros(m + k);
        stacked.rows_mut(0, m).copy_from(&slice.c);
        rhs.rows_mut(0, m).copy_from(&slice.d);
        stacked.rows_mut(m, k).copy_from(&(n * q));
        rhs.rows_mut(m, k).copy_from(&(-(n * b)));
        let zero_set = match AffineSlice::new(stacked, rhs)? {
            None => ZeroSet::Empty,
            Some(s) if s.basis.nrows() == 0 => ZeroSet::Point(s.anchor.clone()),
            Some(s) => ZeroSet::Affine(s),
        };
        Ok((rho.max(0.0), zero_set))
    }

    fn finish(
        kind: OperatorKind,
        dim: usize,
        strong_monotonicity: f64,
        lipschitz: Option<f64>,
        potential: Option<PotentialInfo>,
        zero_set: ZeroSet,
    ) -> Result<Self> {
        Self::finish_raw(OperatorSpec {
            kind,
            dim,
            strong_monotonicity,
            lipschitz,
            potential,
            zero_set,
        })
    }

    fn finish_raw(mut op: OperatorSpec) -> Result<Self> {
        if op.potential.is_some() {
            let min = match op.zero_set.project(&Vector::zeros(op.dim)) {
                Ok((p, _)) => Some(op.potential_value(&p)?),
                Err(_) => None,
            };
            if let Some(p) = op.potential.as_mut() {
                p.min_value = min;
            }
        }
        Ok(op)
    }

    pub fn kind(&self) -> &OperatorKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Strong monotonicity modulus (0 when absent).
    pub fn strong_monotonicity(&self) -> f64 {
        self.strong_monotonicity
    }

    /// Lipschitz constant, present only for single-valued Lipschitz kinds.
    pub fn lipschitz(&self) -> Option<f64> {
        self.lipschitz
    }

    pub fn potential(&self) -> Option<&PotentialInfo> {
        self.potential.as_ref()
    }

    pub fn zero_set(&self) -> &ZeroSet {
        &self.zero_set
    }

    /// `Some((Q, b))` when `A` is the single-valued affine map `x -> Q x + b`.
    pub fn as_affine_map(&self) -> Option<(Matrix, Vector)> {
        match &self.kind {
            OperatorKind::Linear { q, b } => Some((q.clone(), b.clone())),
            OperatorKind::Shifted { inner, shift } => inner
                .as_affine_map()
                .map(|(q, b)| (q.clone(), b - q * shift)),
            OperatorKind::Scaled { inner, factor } => inner
                .as_affine_map()
                .map(|(q, b)| (q * *factor, b * *factor)),
            _ => None,
        }
    }

    fn check_dim(&self, x: &Vector) -> Result<()> {
        check_len("point", x, self.dim)
    }

    /// Distance-like violation of `x in dom A` (0 inside).
    pub fn domain_residual(&self, x: &Vector) -> f64 {
        match &self.kind {
            OperatorKind::Linear { .. } => 0.0,
            OperatorKind::SeparablePlq { coords } => coords
                .iter()
                .zip(x.iter())
                .map(|(c, &xi)| c.domain_violation(xi))
                .fold(0.0, f64::max),
            OperatorKind::AffineNormalCone { slice }
            | OperatorKind::RestrictedQuadratic { slice, .. }
            | OperatorKind::Sum { slice, .. } => slice.violation(x),
            OperatorKind::Shifted { inner, shift } => inner.domain_residual(&(x - shift)),
            OperatorKind::Scaled { inner, .. } => inner.domain_residual(x),
        }
    }

    /// Membership in `cl dom A` (all catalog domains are closed).
    pub fn in_domain(&self, x: &Vector) -> bool {
        x.len() == self.dim
            && x.iter().all(|v| v.is_finite())
            && self.domain_residual(x) <= DOMAIN_TOL * (1.0 + inf_norm(x))
    }

    /// Residual of `v in A(u)`: `+inf` when `u` is outside the domain,
    /// otherwise the sup-norm distance of `v` to `A(u)` relative to
    /// `max(1, |u|, |v|)`.
    pub fn graph_residual(&self, u: &Vector, v: &Vector) -> f64 {
        if u.len() != self.dim || v.len() != self.dim || !self.in_domain(u) {
            return f64::INFINITY;
        }
        let scale = 1.0_f64.max(inf_norm(u)).max(inf_norm(v));
        self.raw_graph_residual(u, v) / scale
    }

    fn raw_graph_residual(&self, u: &Vector, v: &Vector) -> f64 {
        match &self.kind {
            OperatorKind::Linear { q, b } => inf_norm(&(v - q * u - b)),
            OperatorKind::SeparablePlq { coords } => {
                let mut worst = 0.0_f64;
                for (i, c) in coords.iter().enumerate() {
                    match c.subdifferential(u[i]) {
                        None => return f64::INFINITY,
                        Some((l, h)) => {
                            let gap = if v[i] < l {
                                l - v[i]
                            } else if v[i] > h {
                                v[i] - h
                            } else {
                                0.0
                            };
                            worst = worst.max(gap);
                        }
                    }
                }
                worst
            }
            OperatorKind::AffineNormalCone { slice } => inf_norm(&slice.tangent(v)),
            OperatorKind::RestrictedQuadratic { h: q, g: b, slice } | OperatorKind::Sum { q, b, slice } => {
                inf_norm(&slice.tangent(&(v - q * u - b)))
            }
            OperatorKind::Shifted { inner, shift } => inner.raw_graph_residual(&(u - shift), v),
            OperatorKind::Scaled { inner, factor } => inner.raw_graph_residual(u, &(v / *factor)) * factor,
        }
    }

    pub fn is_graph_pair(&self, u: &Vector, v: &Vector, tol: f64) -> bool {
        self.graph_residual(u, v) <= tol
    }

    /// Precompute the resolvent `J_{lambda A}` for repeated application.
    pub fn prepare_resolvent(&self, lambda: f64) -> Result<PreparedResolvent> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidOperator(format!("resolvent step must be positive, got {lambda}")));
        }
        Ok(match &self.kind {
            OperatorKind::Linear { q, b } => {
                let m = (Matrix::identity(self.dim, self.dim) + q * lambda)
                    .try_inverse()
                    .ok_or_else(|| Error::UnsupportedKind("singular resolvent system".into()))?;
                let c = -(&m * b) * lambda;
                PreparedResolvent::Affine { m, c }
            }
            OperatorKind::SeparablePlq { coords } => PreparedResolvent::Separable {
                coords: coords.clone(),
                lambda,
            },
            OperatorKind::AffineNormalCone { slice } => {
                let p = slice.basis.transpose() * &slice.basis;
                let c = &slice.anchor - &p * &slice.anchor;
                PreparedResolvent::Affine { m: p, c }
            }
            OperatorKind::RestrictedQuadratic { h: q, g: b, slice } | OperatorKind::Sum { q, b, slice } => {
                let n = &slice.basis;
                let k = n.nrows();
                let kinv = (Matrix::identity(k, k) + n * q * n.transpose() * lambda)
                    .try_inverse()
                    .ok_or_else(|| Error::UnsupportedKind("singular reduced resolvent system".into()))?;
                let nt_k_n = n.transpose() * &kinv * n;
                let u0 = &slice.anchor;
                let c = u0 - &nt_k_n * u0 - (&nt_k_n * (q * u0 + b)) * lambda;
                PreparedResolvent::Affine { m: nt_k_n, c }
            }
            OperatorKind::Shifted { inner, shift } => PreparedResolvent::Shifted {
                inner: Box::new(inner.prepare_resolvent(lambda)?),
                shift: shift.clone(),
            },
            OperatorKind::Scaled { inner, factor } => inner.prepare_resolvent(lambda * factor)?,
        })
    }

    /// `J_{lambda A}(x) = (I + lambda A)^{-1}(x)`.
    pub fn resolvent(&self, lambda: f64, x: &Vector) -> Result<Vector> {
        self.check_dim(x)?;
        let u = self.prepare_resolvent(lambda)?.apply(x);
        if u.iter().all(|v| v.is_finite()) {
            Ok(u)
        } else {
            Err(Error::UnsupportedKind("resolvent produced a non-finite point".into()))
        }
    }

    /// `A^0(x)`, the least-norm element of `A(x)`.
    pub fn minimal_norm_element(&self, x: &Vector) -> Result<Vector> {
        self.check_dim(x)?;
        if !self.in_domain(x) {
            return Err(Error::OutsideDomain {
                residual: self.domain_residual(x),
            });
        }
        Ok(self.min_norm_unchecked(x))
    }

    fn min_norm_unchecked(&self, x: &Vector) -> Vector {
        match &self.kind {
            OperatorKind::Linear { q, b } => q * x + b,
            OperatorKind::SeparablePlq { coords } => Vector::from_fn(self.dim, |i, _| {
                let (l, h) = coords[i]
                    .subdifferential(x[i])
                    .expect("membership checked by caller");
                0.0_f64.clamp(l, h)
            }),
            OperatorKind::AffineNormalCone { .. } => Vector::zeros(self.dim),
            OperatorKind::RestrictedQuadratic { h: q, g: b, slice } | OperatorKind::Sum { q, b, slice } => {
                slice.tangent(&(q * x + b))
            }
            OperatorKind::Shifted { inner, shift } => inner.min_norm_unchecked(&(x - shift)),
            OperatorKind::Scaled { inner, factor } => inner.min_norm_unchecked(x) * *factor,
        }
    }

    /// `phi(x)`, `+inf` outside `dom phi`.
    pub fn potential_value(&self, x: &Vector) -> Result<f64> {
        self.check_dim(x)?;
        if self.potential.is_none() {
            return Err(Error::NoPotential);
        }
        Ok(self.potential_unchecked(x))
    }

    fn potential_unchecked(&self, x: &Vector) -> f64 {
        match &self.kind {
            OperatorKind::Linear { q, b } => 0.5 * x.dot(&(q * x)) + b.dot(x),
            OperatorKind::SeparablePlq { coords } => {
                coords.iter().zip(x.iter()).map(|(c, &xi)| c.value(xi)).sum()
            }
            OperatorKind::AffineNormalCone { slice } => {
                if slice.violation(x) <= DOMAIN_TOL * (1.0 + inf_norm(x)) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            OperatorKind::RestrictedQuadratic { h: q, g: b, slice } | OperatorKind::Sum { q, b, slice } => {
                if slice.violation(x) <= DOMAIN_TOL * (1.0 + inf_norm(x)) {
                    0.5 * x.dot(&(q * x)) + b.dot(x)
                } else {
                    f64::INFINITY
                }
            }
            OperatorKind::Shifted { inner, shift } => inner.potential_unchecked(&(x - shift)),
            OperatorKind::Scaled { inner, factor } => inner.potential_unchecked(x) * factor,
        }
    }

    /// `phi(x) - min phi`.
    pub fn value_gap(&self, x: &Vector) -> Result<f64> {
        let min = self
            .potential
            .as_ref()
            .ok_or(Error::NoPotential)?
            .min_value
            .ok_or(Error::EmptyZeroSet)?;
        Ok(self.potential_value(x)? - min)
    }

    /// `(proj_S(x), d(x; S))`.
    pub fn zero_set_project(&self, x: &Vector) -> Result<(Vector, f64)> {
        self.check_dim(x)?;
        self.zero_set.project(x)
    }

    /// Minimum-norm zero `proj_S(0)`.
    pub fn min_norm_zero(&self) -> Result<Vector> {
        Ok(self.zero_set.project(&Vector::zeros(self.dim))?.0)
    }

    /// `x_eta = J_{A / eta}(0)`.
    pub fn tikhonov_point(&self, eta: f64) -> Result<Vector> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::InvalidOperator(format!("Tikhonov parameter must be positive, got {eta}")));
        }
        self.resolvent(1.0 / eta, &Vector::zeros(self.dim))
    }

    /// Anchor and orthonormal rows spanning `span(dom A - dom A)`.
    pub(crate) fn domain_geometry(&self) -> (Vector, Matrix) {
        match &self.kind {
            OperatorKind::Linear { .. } => (
                Vector::zeros(self.dim),
                Matrix::identity(self.dim, self.dim),
            ),
            OperatorKind::SeparablePlq { coords } => {
                let anchor = Vector::from_fn(self.dim, |i, _| 0.0_f64.clamp(coords[i].lo(), coords[i].hi()));
                let free: Vec<usize> = (0..self.dim).filter(|&i| !coords[i].is_degenerate()).collect();
                let mut basis = Matrix::zeros(free.len(), self.dim);
                for (r, &i) in free.iter().enumerate() {
                    basis[(r, i)] = 1.0;
                }
                (anchor, basis)
            }
            OperatorKind::AffineNormalCone { slice }
            | OperatorKind::RestrictedQuadratic { slice, .. }
            | OperatorKind::Sum { slice, .. } => (slice.anchor.clone(), slice.basis.clone()),
            OperatorKind::Shifted { inner, shift } => {
                let (a, b) = inner.domain_geometry();
                (a + shift, b)
            }
            OperatorKind::Scaled { inner, .. } => inner.domain_geometry(),
        }
    }

    /// A few points of `dom A` whose affine hull is `aff dom A`.
    pub fn domain_generators(&self) -> Vec<Vector> {
        let (anchor, basis) = self.domain_geometry();
        let mut out = vec![anchor.clone()];
        for r in 0..basis.nrows() {
            let dir = basis.row(r).transpose();
            let mut g = &anchor + &dir;
            if !self.in_domain(&g) {
                g = &anchor - &dir;
            }
            if !self.in_domain(&g) {
                g = &anchor + dir * 1e-3;
            }
            out.push(g);
        }
        out
    }
}

/// Resolvent precomputed for a fixed step.
#[derive(Debug, Clone)]
pub enum PreparedResolvent {
    /// `u = m x + c`.
    Affine { m: Matrix, c: Vector },
    Separable { coords: Vec<Plq1d>, lambda: f64 },
    Shifted {
        inner: Box<PreparedResolvent>,
        shift: Vector,
    },
}

impl PreparedResolvent {
    pub fn apply(&self, x: &Vector) -> Vector {
        match self {
            PreparedResolvent::Affine { m, c } => m * x + c,
            PreparedResolvent::Separable { coords, lambda } => {
                Vector::from_fn(x.len(), |i, _| coords[i].prox(x[i], *lambda))
            }
            PreparedResolvent::Shifted { inner, shift } => inner.apply(&(x - shift)) + shift,
        }
    }
}

#[cfg(test)]
mod tests;
