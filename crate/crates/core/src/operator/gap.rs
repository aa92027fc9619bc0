//! Localized gap function `sup { <x - u, v - y> : (u, v) in gph A, u in K }`.

use super::{OperatorKind, OperatorSpec, Region};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};

/// Parameters of a gap evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct GapQuery {
    /// Compact localization set `K`.
    pub region: Region,
    /// Reference value `y` (zero gives `G_A(x | K)`).
    pub y: Option<Vector>,
    /// Grid points per dimension of `aff dom A` for grid-search kinds.
    pub n_grid: usize,
    /// Box clipping set-valued `v` directions; ignored by single-valued kinds.
    pub v_clip: Option<(Vector, Vector)>,
}

impl GapQuery {
    pub fn new(region: Region, n_grid: usize) -> Self {
        GapQuery {
            region,
            y: None,
            n_grid,
            v_clip: None,
        }
    }

    pub fn with_clip(mut self, lo: Vector, hi: Vector) -> Self {
        self.v_clip = Some((lo, hi));
        self
    }

    pub fn with_y(mut self, y: Vector) -> Self {
        self.y = Some(y);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapEstimate {
    pub value: f64,
    /// `false` when the value is a grid lower bound.
    pub exact: bool,
}

impl OperatorSpec {
    pub fn gap_function(&self, x: &Vector, query: &GapQuery) -> Result<GapEstimate> {
        self.check_dim(x)?;
        if query.region.dim() != self.dim {
            return Err(Error::DimensionMismatch("gap region dimension".into()));
        }
        if query.n_grid < 2 {
            return Err(Error::validation("n_grid", "requires at least 2 points per dimension"));
        }
        let y = query.y.clone().unwrap_or_else(|| Vector::zeros(self.dim));
        if let Some((q, b)) = self.as_affine_map() {
            return Ok(affine_gap(&q, &b, x, &y, &query.region));
        }
        let mut best = f64::NEG_INFINITY;
        let mut any = false;
        for u in self.gap_grid(&query.region, query.n_grid) {
            any = true;
            let c = x - &u;
            if let Some(s) = self.support(&u, &c, query.v_clip.as_ref()) {
                best = best.max(s - c.dot(&y));
            }
        }
        if !any {
            return Err(Error::EmptyIntersection);
        }
        Ok(GapEstimate {
            value: best,
            exact: false,
        })
    }

    /// Grid over `dom A ∩ K`, nested under refinement `n -> 2n - 1`.
    fn gap_grid(&self, region: &Region, n: usize) -> Vec<Vector> {
        let (anchor, basis) = self.domain_geometry();
        let (lo, hi) = region.bounds();
        let d = self.dim;
        let k = basis.nrows();
        let full = k == d && (&basis - Matrix::identity(d, d)).amax() == 0.0;
        let (origin, axes, lo_z, hi_z): (Vector, Matrix, Vector, Vector) = if full {
            (Vector::zeros(d), Matrix::identity(d, d), lo, hi)
        } else {
            let center = (&lo + &hi) * 0.5;
            let half = ((&hi - &lo) * 0.5).norm();
            let cz = &basis * (center - &anchor);
            (anchor, basis, cz.add_scalar(-half), cz.add_scalar(half))
        };
        let total = n.checked_pow(k as u32).unwrap_or(usize::MAX).min(50_000_000);
        let mut out = Vec::new();
        let mut z = Vector::zeros(k);
        for flat in 0..total.max(1) {
            let mut rem = flat;
            for j in 0..k {
                let i = rem % n;
                rem /= n;
                z[j] = if hi_z[j] == lo_z[j] {
                    lo_z[j]
                } else {
                    lo_z[j] + (hi_z[j] - lo_z[j]) * i as f64 / (n - 1) as f64
                };
            }
            let u = &origin + axes.transpose() * &z;
            if region.contains(&u, 1e-12) && self.in_domain(&u) {
                out.push(u);
            }
        }
        out
    }

    /// `sup { <c, v> : v in A(u) ∩ clip }`, `None` if the intersection is empty.
    fn support(&self, u: &Vector, c: &Vector, clip: Option<&(Vector, Vector)>) -> Option<f64> {
        let in_clip = |v: &Vector| match clip {
            None => true,
            Some((lo, hi)) => (0..v.len()).all(|i| v[i] >= lo[i] - 1e-12 && v[i] <= hi[i] + 1e-12),
        };
        match &self.kind {
            OperatorKind::Linear { q, b } => {
                let v = q * u + b;
                in_clip(&v).then(|| c.dot(&v))
            }
            OperatorKind::SeparablePlq { coords } => {
                let mut total = 0.0;
                for (i, f) in coords.iter().enumerate() {
                    let (mut l, mut h) = f.subdifferential(u[i])?;
                    if let Some((lo, hi)) = clip {
                        l = l.max(lo[i]);
                        h = h.min(hi[i]);
                    }
                    if l > h {
                        return None;
                    }
                    total += if c[i] > 0.0 {
                        c[i] * h
                    } else if c[i] < 0.0 {
                        c[i] * l
                    } else {
                        0.0
                    };
                }
                Some(total)
            }
            OperatorKind::AffineNormalCone { slice } => {
                normal_support(&Vector::zeros(self.dim), slice.basis(), c, clip)
            }
            OperatorKind::RestrictedQuadratic { h: q, g: b, slice } | OperatorKind::Sum { q, b, slice } => {
                normal_support(&(q * u + b), slice.basis(), c, clip)
            }
            OperatorKind::Shifted { inner, shift } => inner.support(&(u - shift), c, clip),
            OperatorKind::Scaled { inner, factor } => {
                let scaled = clip.map(|(lo, hi)| (lo / *factor, hi / *factor));
                inner.support(u, c, scaled.as_ref()).map(|s| s * factor)
            }
        }
    }
}

/// Support of `(w + L^perp) ∩ clip` in direction `c`, where `basis` spans `L`.
///
/// With a clip box the value is a lower bound: a feasible point is found by
/// Dykstra's alternating projections and then pushed along the normal part
/// of `c` until it leaves the box.
fn normal_support(w: &Vector, basis: &Matrix, c: &Vector, clip: Option<&(Vector, Vector)>) -> Option<f64> {
    let tangent = |v: &Vector| basis.transpose() * (basis * v);
    let normal_c = c - tangent(c);
    let Some((lo, hi)) = clip else {
        if linalg::inf_norm(&normal_c) > 1e-12 * (1.0 + linalg::inf_norm(c)) {
            return Some(f64::INFINITY);
        }
        return Some(c.dot(w));
    };
    let n = w.len();
    let clamp = |v: &Vector| Vector::from_fn(n, |i, _| v[i].clamp(lo[i], hi[i]));
    let onto_affine = |v: &Vector| v - tangent(&(v - w));
    let mut v = w.clone();
    let mut p = Vector::zeros(n);
    let mut q = Vector::zeros(n);
    for _ in 0..500 {
        let a = onto_affine(&(&v + &p));
        p = &v + &p - &a;
        let b = clamp(&(&a + &q));
        q = &a + &q - &b;
        let done = (&b - &v).amax() < 1e-15;
        v = b;
        if done {
            break;
        }
    }
    if linalg::inf_norm(&tangent(&(&v - w))) > 1e-9 {
        return None;
    }
    let v = onto_affine(&v);
    let mut t = f64::INFINITY;
    for i in 0..n {
        if normal_c[i] > 1e-15 {
            t = t.min((hi[i] - v[i]) / normal_c[i]);
        } else if normal_c[i] < -1e-15 {
            t = t.min((lo[i] - v[i]) / normal_c[i]);
        }
    }
    let t = if t.is_finite() { t.max(0.0) } else { 0.0 };
    Some(c.dot(&(v + normal_c * t)))
}

/// Closed-form or converged maximization of the concave quadratic
/// `u -> <x - u, Q u + b - y>` over `K`.
fn affine_gap(q: &Matrix, b: &Vector, x: &Vector, y: &Vector, region: &Region) -> GapEstimate {
    let s = (q + q.transpose()) * 0.5;
    let r = b - y;
    let lin = q.transpose() * x - &r;
    let constant = x.dot(&r);
    let objective = |u: &Vector| -u.dot(&(&s * u)) + lin.dot(u) + constant;
    let n = x.len();
    let diagonal = (0..n).all(|i| (0..n).all(|j| i == j || s[(i, j)] == 0.0));
    if s.amax() == 0.0 {
        let u = match region {
            Region::Box { lo, hi } => Vector::from_fn(n, |i, _| if lin[i] > 0.0 { hi[i] } else { lo[i] }),
            Region::Ball { center, radius } => {
                let nl = lin.norm();
                if nl == 0.0 {
                    center.clone()
                } else {
                    center + &lin * (radius / nl)
                }
            }
        };
        return GapEstimate {
            value: objective(&u),
            exact: true,
        };
    }
    if diagonal {
        if let Region::Box { lo, hi } = region {
            let u = Vector::from_fn(n, |i, _| {
                if s[(i, i)] > 0.0 {
                    (lin[i] / (2.0 * s[(i, i)])).clamp(lo[i], hi[i])
                } else if lin[i] > 0.0 {
                    hi[i]
                } else {
                    lo[i]
                }
            });
            return GapEstimate {
                value: objective(&u),
                exact: true,
            };
        }
    }
    // accelerated projected gradient ascent; gradient is Lipschitz with 2|S|
    let step = 1.0 / (2.0 * linalg::spectral_norm(&s));
    let mut u = region.project(&Vector::zeros(n));
    let mut z = u.clone();
    let mut t = 1.0_f64;
    let mut converged = false;
    for _ in 0..200_000 {
        let grad = &lin - (&s * &z) * 2.0;
        let next = region.project(&(&z + grad * step));
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        z = &next + (&next - &u) * ((t - 1.0) / t_next);
        let delta = (&next - &u).amax();
        u = next;
        t = t_next;
        if delta < 1e-15 * (1.0 + u.amax()) {
            converged = true;
            break;
        }
    }
    GapEstimate {
        value: objective(&u),
        exact: converged,
    }
}
