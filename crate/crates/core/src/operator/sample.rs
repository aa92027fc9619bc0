//! Seeded sampling of graph pairs `(u, v)` with `v in A(u)`.

use super::{OperatorKind, OperatorSpec, Region};
use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::rng::PathStream;

impl OperatorSpec {
    /// Nearest point of `cl dom A` (exact for every catalog kind).
    pub fn project_domain(&self, x: &Vector) -> Vector {
        match &self.kind {
            OperatorKind::Linear { .. } => x.clone(),
            OperatorKind::SeparablePlq { coords } => {
                Vector::from_fn(self.dim, |i, _| x[i].clamp(coords[i].lo(), coords[i].hi()))
            }
            OperatorKind::AffineNormalCone { slice }
            | OperatorKind::RestrictedQuadratic { slice, .. }
            | OperatorKind::Sum { slice, .. } => slice.project(x),
            OperatorKind::Shifted { inner, shift } => inner.project_domain(&(x - shift)) + shift,
            OperatorKind::Scaled { inner, .. } => inner.project_domain(x),
        }
    }

    /// `n` graph pairs with `u` in `region ∩ dom A`, deterministic in `rng`.
    ///
    /// Unbounded directions of `A(u)` are clipped to the region's bounding box.
    pub fn graph_sample(&self, region: &Region, n: usize, rng: &mut PathStream) -> Result<Vec<(Vector, Vector)>> {
        if region.dim() != self.dim {
            return Err(Error::DimensionMismatch("sampling region dimension".into()));
        }
        (0..n).map(|_| self.sample_pair(region, rng)).collect()
    }

    fn sample_pair(&self, region: &Region, rng: &mut PathStream) -> Result<(Vector, Vector)> {
        match &self.kind {
            OperatorKind::Shifted { inner, shift } => {
                let (u, v) = inner.sample_pair(&region.shifted(&(-shift)), rng)?;
                return Ok((u + shift, v));
            }
            OperatorKind::Scaled { inner, factor } => {
                let (u, v) = inner.sample_pair(region, rng)?;
                return Ok((u, v * *factor));
            }
            _ => {}
        }
        let (blo, bhi) = region.bounds();
        let d = self.dim;
        let mut p = Vector::from_fn(d, |i, _| rng.uniform_in(blo[i], bhi[i]));
        if let Region::Ball { .. } = region {
            p = region.project(&p);
        }
        let mut u = self.feasible_point(&p, region)?;
        if let OperatorKind::SeparablePlq { coords } = &self.kind {
            // land on kinks and domain ends often enough to exercise set values
            for (i, f) in coords.iter().enumerate() {
                let mut knots: Vec<f64> = f.breakpoints().to_vec();
                knots.extend([f.lo(), f.hi()].iter().copied().filter(|x| x.is_finite()));
                knots.retain(|&k| k >= blo[i] && k <= bhi[i]);
                if !knots.is_empty() && rng.uniform() < 0.25 {
                    let mut trial = u.clone();
                    trial[i] = knots[rng.index(knots.len())];
                    if region.contains(&trial, 1e-12) {
                        u = trial;
                    }
                }
            }
        }
        let g = Vector::from_fn(d, |i, _| rng.uniform_in(blo[i], bhi[i]));
        let v = match &self.kind {
            OperatorKind::Linear { q, b } => q * &u + b,
            OperatorKind::SeparablePlq { coords } => Vector::from_fn(d, |i, _| {
                let (l, h) = coords[i].subdifferential(u[i]).expect("u is feasible");
                let (mut cl, mut ch) = (l.max(blo[i]), h.min(bhi[i]));
                if cl > ch {
                    // the whole subdifferential lies outside the box: keep its finite end
                    cl = if l.is_finite() { l } else { h };
                    ch = if h.is_finite() { h } else { l };
                }
                cl + (ch - cl) * (g[i] - blo[i]) / (bhi[i] - blo[i]).max(f64::MIN_POSITIVE)
            }),
            OperatorKind::AffineNormalCone { slice } => &g - slice.tangent(&g),
            OperatorKind::RestrictedQuadratic { h: q, g: b, slice } | OperatorKind::Sum { q, b, slice } => {
                q * &u + b + (&g - slice.tangent(&g))
            }
            OperatorKind::Shifted { .. } | OperatorKind::Scaled { .. } => unreachable!("handled above"),
        };
        Ok((u, v))
    }

    /// Point of `dom A ∩ region` near `p` via Dykstra's alternating projections.
    fn feasible_point(&self, p: &Vector, region: &Region) -> Result<Vector> {
        let d = self.dim;
        let mut x = p.clone();
        let mut a = Vector::zeros(d);
        let mut b = Vector::zeros(d);
        for _ in 0..2000 {
            let y = self.project_domain(&(&x + &a));
            a = &x + &a - &y;
            let z = region.project(&(&y + &b));
            b = &y + &b - &z;
            let done = (&z - &x).amax() < 1e-14;
            x = z;
            if done {
                break;
            }
        }
        let u = self.project_domain(&x);
        if region.contains(&u, 1e-9) && self.in_domain(&u) {
            Ok(u)
        } else {
            Err(Error::EmptyIntersection)
        }
    }
}
