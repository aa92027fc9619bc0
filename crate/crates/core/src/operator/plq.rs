//! One-dimensional convex piecewise-linear-quadratic potentials.

use crate::error::{Error, Result};

/// Tolerance used when deciding whether a point sits on a knot or domain end.
pub(crate) const KNOT_TOL: f64 = 1e-9;

/// `a/2 x^2 + b x + c` on one piece.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quad {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Quad {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        Quad { a, b, c }
    }

    fn value(&self, x: f64) -> f64 {
        0.5 * self.a * x * x + self.b * x + self.c
    }

    fn slope(&self, x: f64) -> f64 {
        self.a * x + self.b
    }
}

/// Convex PLQ function on `[lo, hi]` (either end may be infinite).
///
/// Piece `i` lives on `[knot_{i-1}, knot_i]` where the outer knots are the
/// domain ends, so `pieces.len() == breakpoints.len() + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Plq1d {
    lo: f64,
    hi: f64,
    breakpoints: Vec<f64>,
    pieces: Vec<Quad>,
}

impl Plq1d {
    pub fn new(lo: f64, hi: f64, breakpoints: Vec<f64>, pieces: Vec<Quad>) -> Result<Self> {
        let bad = |m: &str| Err(Error::InvalidOperator(format!("PLQ descriptor: {m}")));
        if lo.is_nan() || hi.is_nan() || lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
            return bad("domain must be a nonempty interval");
        }
        if pieces.len() != breakpoints.len() + 1 {
            return bad("need exactly one more piece than breakpoints");
        }
        if lo == hi && !breakpoints.is_empty() {
            return bad("a singleton domain cannot carry breakpoints");
        }
        let mut prev = lo;
        for &p in &breakpoints {
            if !p.is_finite() || p <= prev || p >= hi {
                return bad("breakpoints must be finite, strictly increasing and interior");
            }
            prev = p;
        }
        for q in &pieces {
            if !(q.a.is_finite() && q.b.is_finite() && q.c.is_finite()) || q.a < 0.0 {
                return bad("piece coefficients must be finite with a >= 0");
            }
        }
        for (j, &p) in breakpoints.iter().enumerate() {
            let (l, r) = (pieces[j], pieces[j + 1]);
            let (vl, vr) = (l.value(p), r.value(p));
            if (vl - vr).abs() > 1e-9 * (1.0 + vl.abs()) {
                return bad("pieces must join continuously at breakpoints");
            }
            if r.slope(p) < l.slope(p) - 1e-12 {
                return bad("slopes must be nondecreasing across breakpoints (convexity)");
            }
        }
        Ok(Plq1d {
            lo,
            hi,
            breakpoints,
            pieces,
        })
    }

    /// `a/2 x^2 + b x` on the whole line.
    pub fn quadratic(a: f64, b: f64) -> Result<Self> {
        Self::new(f64::NEG_INFINITY, f64::INFINITY, vec![], vec![Quad::new(a, b, 0.0)])
    }

    /// `w |x|`.
    pub fn abs(w: f64) -> Result<Self> {
        Self::new(
            f64::NEG_INFINITY,
            f64::INFINITY,
            vec![0.0],
            vec![Quad::new(0.0, -w, 0.0), Quad::new(0.0, w, 0.0)],
        )
    }

    /// `max(|x| - r, 0)`.
    pub fn hinge(r: f64) -> Result<Self> {
        if !(r > 0.0) {
            return Err(Error::InvalidOperator("hinge radius must be positive".into()));
        }
        Self::new(
            f64::NEG_INFINITY,
            f64::INFINITY,
            vec![-r, r],
            vec![
                Quad::new(0.0, -1.0, -r),
                Quad::new(0.0, 0.0, 0.0),
                Quad::new(0.0, 1.0, -r),
            ],
        )
    }

    /// Indicator of `[lo, hi]`.
    pub fn indicator(lo: f64, hi: f64) -> Result<Self> {
        Self::new(lo, hi, vec![], vec![Quad::new(0.0, 0.0, 0.0)])
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn pieces(&self) -> &[Quad] {
        &self.pieces
    }

    pub fn is_degenerate(&self) -> bool {
        self.lo == self.hi
    }

    fn near(x: f64, p: f64) -> bool {
        (x - p).abs() <= KNOT_TOL * (1.0 + p.abs())
    }

    /// Distance from `x` to the domain interval.
    pub fn domain_violation(&self, x: f64) -> f64 {
        if x < self.lo {
            self.lo - x
        } else if x > self.hi {
            x - self.hi
        } else {
            0.0
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        x.is_finite()
            && (self.domain_violation(x) == 0.0
                || Self::near(x, self.lo)
                || Self::near(x, self.hi))
    }

    fn piece_at(&self, x: f64) -> usize {
        self.breakpoints.partition_point(|&p| p < x)
    }

    pub fn value(&self, x: f64) -> f64 {
        if !self.contains(x) {
            return f64::INFINITY;
        }
        let x = x.clamp(self.lo, self.hi);
        self.pieces[self.piece_at(x)].value(x)
    }

    /// Subdifferential `[left, right]` at `x`; `None` outside the domain.
    pub fn subdifferential(&self, x: f64) -> Option<(f64, f64)> {
        if !self.contains(x) {
            return None;
        }
        if self.is_degenerate() {
            return Some((f64::NEG_INFINITY, f64::INFINITY));
        }
        let last = self.pieces.len() - 1;
        if self.lo.is_finite() && Self::near(x, self.lo) {
            return Some((f64::NEG_INFINITY, self.pieces[0].slope(self.lo)));
        }
        if self.hi.is_finite() && Self::near(x, self.hi) {
            return Some((self.pieces[last].slope(self.hi), f64::INFINITY));
        }
        for (j, &p) in self.breakpoints.iter().enumerate() {
            if Self::near(x, p) {
                return Some((self.pieces[j].slope(p), self.pieces[j + 1].slope(p)));
            }
        }
        let s = self.pieces[self.piece_at(x)].slope(x);
        Some((s, s))
    }

    /// Knots in increasing order: finite domain ends plus breakpoints, each
    /// with the slope interval there.
    fn knots(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::with_capacity(self.breakpoints.len() + 2);
        if self.lo.is_finite() {
            out.push((self.lo, f64::NEG_INFINITY, self.pieces[0].slope(self.lo)));
        }
        for (j, &p) in self.breakpoints.iter().enumerate() {
            out.push((p, self.pieces[j].slope(p), self.pieces[j + 1].slope(p)));
        }
        if self.hi.is_finite() {
            let last = self.pieces.len() - 1;
            out.push((self.hi, self.pieces[last].slope(self.hi), f64::INFINITY));
        }
        out
    }

    /// Proximal point: the unique `u` with `x - u` in `lambda * d phi(u)`.
    ///
    /// The map `u -> u + lambda * d phi(u)` is strictly increasing, so scanning
    /// the knots left to right locates the piece or knot holding the answer.
    pub fn prox(&self, x: f64, lambda: f64) -> f64 {
        if self.is_degenerate() {
            return self.lo;
        }
        let mut left = f64::NEG_INFINITY;
        let mut piece = 0usize;
        for (p, dl, dr) in self.knots() {
            // the piece to the left of a finite `lo` does not exist
            if p == self.lo {
                if x <= p + lambda * dr {
                    return p;
                }
                left = p;
                continue;
            }
            if x < p + lambda * dl {
                let q = self.pieces[piece];
                return ((x - lambda * q.b) / (1.0 + lambda * q.a)).clamp(left, p);
            }
            if x <= p + lambda * dr {
                return p;
            }
            left = p;
            piece += 1;
        }
        let q = self.pieces[piece];
        ((x - lambda * q.b) / (1.0 + lambda * q.a)).max(left)
    }

    /// The interval of minimizers, or `None` when the infimum is not attained.
    pub fn argmin(&self) -> Option<(f64, f64)> {
        if self.is_degenerate() {
            return Some((self.lo, self.lo));
        }
        let mut lo_c = f64::INFINITY;
        let mut hi_c = f64::NEG_INFINITY;
        let mut push = |l: f64, h: f64| {
            lo_c = lo_c.min(l);
            hi_c = hi_c.max(h);
        };
        let mut left = self.lo;
        for (i, q) in self.pieces.iter().enumerate() {
            let right = if i < self.breakpoints.len() {
                self.breakpoints[i]
            } else {
                self.hi
            };
            if q.a > 0.0 {
                let u = -q.b / q.a;
                if u > left && u < right {
                    push(u, u);
                }
            } else if q.b == 0.0 {
                push(left, right);
            }
            left = right;
        }
        for (p, dl, dr) in self.knots() {
            if dl <= 0.0 && 0.0 <= dr {
                push(p, p);
            }
        }
        (lo_c <= hi_c).then_some((lo_c, hi_c))
    }

    pub fn min_value(&self) -> Option<f64> {
        self.argmin().map(|(l, h)| self.value(0.0_f64.clamp(l, h)))
    }

    pub fn strong_convexity(&self) -> f64 {
        self.pieces.iter().map(|q| q.a).fold(f64::INFINITY, f64::min)
    }

    /// Lipschitz constant of the derivative when `d phi` is single-valued everywhere.
    pub fn lipschitz(&self) -> Option<f64> {
        if self.lo.is_finite() || self.hi.is_finite() {
            return None;
        }
        let smooth = self.knots().iter().all(|&(_, dl, dr)| dl == dr);
        smooth.then(|| self.pieces.iter().map(|q| q.a).fold(0.0, f64::max))
    }

    /// `z -> phi(z + shift)`.
    pub fn shifted(&self, shift: f64) -> Plq1d {
        Plq1d {
            lo: self.lo - shift,
            hi: self.hi - shift,
            breakpoints: self.breakpoints.iter().map(|p| p - shift).collect(),
            pieces: self
                .pieces
                .iter()
                .map(|q| Quad {
                    a: q.a,
                    b: q.a * shift + q.b,
                    c: 0.5 * q.a * shift * shift + q.b * shift + q.c,
                })
                .collect(),
        }
    }
}
