//! Counter-based random streams.
//!
//! Path `i` of an ensemble seeded with `master_seed` draws from ChaCha8 with
//! key `master_seed` and stream id `i`, so the numbers a path sees do not
//! depend on which worker runs it or in which order paths complete.
//!
//! Gaussians use the polar-free Box–Muller transform on 53-bit uniforms:
//! `r = sqrt(-2 ln(1 - u1))`, `z0 = r cos(2 pi u2)`, `z1 = r sin(2 pi u2)`,
//! consumed in that order.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

#[derive(Debug, Clone)]
pub struct PathStream {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl PathStream {
    pub fn new(master_seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(stream);
        PathStream { rng, spare: None }
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn index(&mut self, n: usize) -> usize {
        ((self.uniform() * n as f64) as usize).min(n.saturating_sub(1))
    }

    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * (1.0 - u1).ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }

    /// Fill `out` with independent `N(0, scale^2)` draws.
    pub fn fill_normal(&mut self, out: &mut [f64], scale: f64) {
        for o in out.iter_mut() {
            *o = scale * self.standard_normal();
        }
    }
}
