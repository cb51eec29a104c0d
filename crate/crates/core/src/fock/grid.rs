//! Antipodally symmetric photon mode grids and the discretized A_M.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::cutoff::{norm3, CutoffProfile};
use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre, gauss_legendre_on};
use crate::spin_operator::{
    assemble_with_kernel, check_negative_semidefinite, HermitianSpinOperator, OperatorOrigin,
    SpinSystem,
};

/// Upper bound on the number of modes a grid may hold.
pub const MODE_BUDGET: usize = 200_000;

/// One photon mode: wavevector, quadrature weight and two transverse
/// polarization vectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Mode {
    pub k: [f64; 3],
    pub weight: f64,
    pub polarizations: [[f64; 3]; 2],
}

impl Mode {
    pub fn frequency(&self) -> f64 {
        norm3(self.k)
    }
}

/// A finite set of modes standing in for the momentum integral.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeGrid {
    modes: Vec<Mode>,
    /// `antipode[i]` is the index of the mode at −k_i, if present.
    #[serde(skip)]
    antipode: Vec<Option<usize>>,
    pub n_radial: usize,
    pub n_angular: usize,
}

impl ModeGrid {
    /// Wraps an arbitrary mode list. Symmetry is not required here; operations
    /// that need it check [`ModeGrid::is_symmetric`].
    pub fn from_modes(modes: Vec<Mode>) -> Self {
        let antipode = modes
            .iter()
            .map(|m| {
                modes.iter().position(|o| {
                    o.k[0] == -m.k[0] && o.k[1] == -m.k[1] && o.k[2] == -m.k[2] && o.weight == m.weight
                })
            })
            .collect();
        Self {
            modes,
            antipode,
            n_radial: 0,
            n_angular: 0,
        }
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Number of oscillators (two polarizations per mode).
    pub fn oscillators(&self) -> usize {
        2 * self.modes.len()
    }

    pub fn antipode(&self, i: usize) -> Option<usize> {
        self.antipode[i]
    }

    /// Every mode's negation is present with the same weight.
    pub fn is_symmetric(&self) -> bool {
        self.antipode.iter().all(Option::is_some)
    }

    pub(crate) fn require_symmetric(&self) -> Result<()> {
        if !self.is_symmetric() {
            return Err(Error::domain(
                "mode grid is not closed under k -> -k; the discrete operator would not be Hermitian",
            ));
        }
        Ok(())
    }
}

/// Gauss radial nodes on `[0, r_far]` times an antipodal angular set.
///
/// The angular set uses `n_angular` Gauss–Legendre nodes in cos θ and
/// `2 n_angular` azimuths; directions in the upper hemisphere are built
/// explicitly and mirrored, so the k → −k symmetry holds bit for bit.
pub fn build_mode_grid(profile: &CutoffProfile, n_radial: usize, n_angular: usize) -> Result<ModeGrid> {
    if n_radial < 2 {
        return Err(Error::domain(format!("n_radial must be at least 2, got {n_radial}")));
    }
    if n_angular < 6 || !n_angular.is_multiple_of(2) {
        return Err(Error::domain(format!(
            "n_angular must be even and at least 6, got {n_angular}"
        )));
    }
    let count = n_radial * n_angular * 2 * n_angular;
    if count > MODE_BUDGET {
        return Err(Error::Resource {
            dim: count,
            budget: MODE_BUDGET,
        });
    }
    let (radii, rw) = gauss_legendre_on(n_radial, 0.0, profile.r_far_squared());
    let (cos_t, tw) = gauss_legendre(n_angular);
    let n_az = 2 * n_angular;
    let mut upper = Vec::new();
    for (&c, &w) in cos_t.iter().zip(&tw) {
        if c <= 0.0 {
            continue;
        }
        let s = (1.0 - c * c).sqrt();
        for a in 0..n_az {
            let ph = 2.0 * PI * (a as f64 + 0.5) / n_az as f64;
            let (sp, cp) = ph.sin_cos();
            let dir = [s * cp, s * sp, c];
            let e1 = [-sp, cp, 0.0];
            let e2 = [c * cp, c * sp, -s];
            upper.push((dir, w * 2.0 * PI / n_az as f64, [e1, e2]));
        }
    }
    let mut modes = Vec::with_capacity(count);
    for sign in [1.0, -1.0] {
        for &(dir, aw, pol) in &upper {
            for (&r, &w) in radii.iter().zip(&rw) {
                modes.push(Mode {
                    k: [sign * r * dir[0], sign * r * dir[1], sign * r * dir[2]],
                    weight: w * r * r * aw,
                    polarizations: pol,
                });
            }
        }
    }
    let half = modes.len() / 2;
    let antipode = (0..modes.len())
        .map(|i| Some(if i < half { i + half } else { i - half }))
        .collect();
    Ok(ModeGrid {
        modes,
        antipode,
        n_radial,
        n_angular,
    })
}

/// ⟨ε_{ia}, B_{m,x}(k_i)⟩ for every mode i and polarization a, where
/// B_{m,x}(k) = i φ(|k|) |k|^{1/2} (2π)^{-3/2} e^{-ik·x} (k × e_m)/|k|.
pub fn mode_coefficients(
    profile: &CutoffProfile,
    grid: &ModeGrid,
    x: [f64; 3],
    axis: usize,
) -> Result<Vec<[Complex64; 2]>> {
    if axis > 2 {
        return Err(Error::domain(format!("axis index {axis} out of range")));
    }
    let norm = (2.0 * PI).powf(-1.5);
    Ok(grid
        .modes
        .iter()
        .map(|mode| {
            let kn = mode.frequency();
            let amp = profile.phi_unchecked(kn) * kn.sqrt() * norm / kn;
            let phase = Complex64::new(0.0, 1.0)
                * Complex64::from_polar(1.0, -(mode.k[0] * x[0] + mode.k[1] * x[1] + mode.k[2] * x[2]));
            // ε · (k × e_m) = (ε × k)_m
            let proj = |e: &[f64; 3]| {
                let c = [
                    e[1] * mode.k[2] - e[2] * mode.k[1],
                    e[2] * mode.k[0] - e[0] * mode.k[2],
                    e[0] * mode.k[1] - e[1] * mode.k[0],
                ];
                c[axis]
            };
            [
                phase * amp * proj(&mode.polarizations[0]),
                phase * amp * proj(&mode.polarizations[1]),
            ]
        })
        .collect())
}

/// Σ_i w_i (2π)^{-3} |φ(|k_i|)|² cos(k_i·y) (δ_jm − k̂_j k̂_m). On a symmetric
/// grid this is the full (real) mode sum of e^{-ik·y}.
pub fn discrete_kernel(profile: &CutoffProfile, grid: &ModeGrid, y: [f64; 3]) -> Result<[[f64; 3]; 3]> {
    grid.require_symmetric()?;
    let norm = (2.0 * PI).powi(-3);
    let mut out = [[0.0; 3]; 3];
    for mode in &grid.modes {
        let k2 = mode.k[0] * mode.k[0] + mode.k[1] * mode.k[1] + mode.k[2] * mode.k[2];
        let p = profile.phi_unchecked(k2.sqrt());
        let c = mode.weight * norm * p * p * (mode.k[0] * y[0] + mode.k[1] * y[1] + mode.k[2] * y[2]).cos();
        for (j, row) in out.iter_mut().enumerate() {
            for (m, e) in row.iter_mut().enumerate() {
                let delta = if j == m { 1.0 } else { 0.0 };
                *e += c * (delta - mode.k[j] * mode.k[m] / k2);
            }
        }
    }
    Ok(out)
}

/// A_M with the kernel replaced by its mode sum on `grid`.
pub fn discrete_am(
    system: &SpinSystem,
    profile: &CutoffProfile,
    grid: &ModeGrid,
) -> Result<HermitianSpinOperator> {
    grid.require_symmetric()?;
    let matrix = assemble_with_kernel(system, |y| discrete_kernel(profile, grid, y))?;
    check_negative_semidefinite(&matrix)?;
    Ok(HermitianSpinOperator {
        matrix,
        origin: Some(OperatorOrigin {
            system: system.clone(),
            profile: *profile,
        }),
    })
}
