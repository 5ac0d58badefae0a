//! Symmetric 2×2 matrices.

use serde::{Deserialize, Serialize};

use crate::frames::Dq;

/// Symmetric 2×2 matrix `[[m11, m12], [m12, m22]]`. The off-diagonal entry is
/// stored once, so symmetry holds exactly.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Sym2 {
    pub m11: f64,
    pub m12: f64,
    pub m22: f64,
}

impl Sym2 {
    pub const fn new(m11: f64, m12: f64, m22: f64) -> Self {
        Self { m11, m12, m22 }
    }

    pub const fn diag(m11: f64, m22: f64) -> Self {
        Self::new(m11, 0.0, m22)
    }

    pub fn det(&self) -> f64 {
        self.m11 * self.m22 - self.m12 * self.m12
    }

    pub fn trace(&self) -> f64 {
        self.m11 + self.m22
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let mean = 0.5 * self.trace();
        let half_gap = (0.5 * (self.m11 - self.m22)).hypot(self.m12);
        (mean - half_gap, mean + half_gap)
    }

    pub fn is_positive_definite(&self) -> bool {
        self.m11 > 0.0 && self.det() > 0.0
    }

    /// Spectral condition number; infinite unless positive definite.
    pub fn condition_number(&self) -> f64 {
        let (lo, hi) = self.eigenvalues();
        if lo <= 0.0 {
            f64::INFINITY
        } else {
            hi / lo
        }
    }

    /// Inverse, or `None` when the determinant vanishes.
    pub fn inverse(&self) -> Option<Self> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        Some(Self::new(self.m22 / det, -self.m12 / det, self.m11 / det))
    }

    pub fn mul_vec<U, V>(&self, x: Dq<U>) -> Dq<V> {
        Dq::new(
            self.m11 * x.d + self.m12 * x.q,
            self.m12 * x.d + self.m22 * x.q,
        )
    }

    pub fn max_abs(&self) -> f64 {
        self.m11.abs().max(self.m12.abs()).max(self.m22.abs())
    }
}
