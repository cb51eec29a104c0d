//! Radial ultraviolet cutoff and its real-space smearing function.
//!
//! The cutoff φ(|k|) enters every coupling amplitude. Its inverse Fourier
//! transform ρ(x) = (2π)^{-3} ∫ φ(|k|) e^{ik·x} dk is radial, so it is computed
//! from the one-dimensional integral (2π²)^{-1} ∫₀^∞ φ(r) r² j₀(r|x|) dr.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_adaptive, AdaptiveOptions};
use crate::special::{j0, j1};

/// Threshold below which φ is treated as zero when truncating radial integrals.
pub const FAR_THRESHOLD: f64 = 1e-16;

/// Profile family of the cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    /// φ(r) = exp(-r² / 2Λ²)
    Gaussian,
    /// φ(r) = exp(-r⁴ / 2Λ⁴)
    Quartic,
}

/// A radial cutoff φ with inverse-length scale Λ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffProfile {
    pub kind: ProfileKind,
    pub lambda: f64,
}

impl CutoffProfile {
    pub fn new(kind: ProfileKind, lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::domain(format!("cutoff lambda must be positive, got {lambda}")));
        }
        Ok(Self { kind, lambda })
    }

    pub fn gaussian(lambda: f64) -> Result<Self> {
        Self::new(ProfileKind::Gaussian, lambda)
    }

    /// φ(r) for `r >= 0`.
    pub fn phi(&self, r: f64) -> Result<f64> {
        if r.is_nan() || r < 0.0 {
            return Err(Error::domain(format!("cutoff evaluated at negative radius {r}")));
        }
        Ok(self.phi_unchecked(r))
    }

    #[inline]
    pub(crate) fn phi_unchecked(&self, r: f64) -> f64 {
        let u = r / self.lambda;
        match self.kind {
            ProfileKind::Gaussian => (-0.5 * u * u).exp(),
            ProfileKind::Quartic => (-0.5 * u * u * u * u).exp(),
        }
    }

    /// Smallest radius beyond which |φ| stays below `eps`.
    pub fn r_far(&self, eps: f64) -> f64 {
        let log = (1.0 / eps).ln();
        match self.kind {
            ProfileKind::Gaussian => self.lambda * (2.0 * log).sqrt(),
            ProfileKind::Quartic => self.lambda * (2.0 * log).powf(0.25),
        }
    }

    /// Radius beyond which |φ|² stays below [`FAR_THRESHOLD`].
    pub fn r_far_squared(&self) -> f64 {
        self.r_far(FAR_THRESHOLD.sqrt())
    }

    /// ρ(x), the inverse Fourier transform of φ(|k|).
    pub fn rho(&self, x: [f64; 3]) -> Result<f64> {
        let r = norm3(x);
        let scale = self.lambda.powi(3);
        let q = integrate_adaptive(
            |k| self.phi_unchecked(k) * k * k * j0(k * r),
            0.0,
            self.r_far(FAR_THRESHOLD),
            radial_options(scale),
        )?;
        Ok(q.value / (2.0 * PI * PI))
    }

    /// ∇ρ(x). Vanishes at the origin.
    pub fn grad_rho(&self, x: [f64; 3]) -> Result<[f64; 3]> {
        let r = norm3(x);
        if r == 0.0 {
            return Ok([0.0; 3]);
        }
        let scale = self.lambda.powi(4);
        let q = integrate_adaptive(
            |k| self.phi_unchecked(k) * k * k * k * j1(k * r),
            0.0,
            self.r_far(FAR_THRESHOLD),
            radial_options(scale),
        )?;
        let drho = -q.value / (2.0 * PI * PI);
        Ok([drho * x[0] / r, drho * x[1] / r, drho * x[2] / r])
    }
}

fn radial_options(scale: f64) -> AdaptiveOptions {
    AdaptiveOptions {
        abs_tol: 1e-15 * scale,
        rel_tol: 1e-12,
        max_intervals: 4000,
    }
}

pub(crate) fn norm3(x: [f64; 3]) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}
