//! Fourier-space current densities and their magnetostatic field energy.
//!
//! The energy ½∫|B|² dx of the field solving div B = 0, curl B = j equals
//! ½(2π)^{-3} ∫ |ĵ(ξ)|² / |ξ|² dξ for a transversal current. It is evaluated
//! here on a spherical product rule without touching the kernel module, so
//! comparing it with ⟨A_M X, X⟩ checks two unrelated numerical paths.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::cutoff::{norm3, CutoffProfile};
use crate::error::{Error, Result};
use crate::kernel::a11_origin;
use crate::quadrature::{compensated_sum, gauss_legendre, gauss_legendre_on};
use crate::spin_algebra::{apply_site, spin_matrices, CVector, ProductState, Spin};
use crate::spin_operator::{assemble_am, quadratic_form, SpinSystem};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn cross(xi: [f64; 3], v: [Complex64; 3]) -> [Complex64; 3] {
    [
        v[2] * xi[1] - v[1] * xi[2],
        v[0] * xi[2] - v[2] * xi[0],
        v[1] * xi[0] - v[0] * xi[1],
    ]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Spin-space-valued current built from a fixed spin state X.
#[derive(Debug, Clone)]
pub struct VectorCurrent {
    system: SpinSystem,
    profile: CutoffProfile,
    // σ_j⁽λ⁾ X for every particle λ and axis j
    sigma_x: Vec<[CVector; 3]>,
}

impl VectorCurrent {
    pub fn new(system: &SpinSystem, profile: &CutoffProfile, x: &CVector) -> Result<Self> {
        system.validate()?;
        if x.len() != system.dim() {
            return Err(Error::domain(format!(
                "state has length {}, spin space has dimension {}",
                x.len(),
                system.dim()
            )));
        }
        crate::spin_algebra::check_normalized(x, "spin state")?;
        let layout = system.layout()?;
        let sigma = spin_matrices(system.spin).sigma;
        let sigma_x = (0..system.len())
            .map(|l| {
                [
                    apply_site(&sigma[0], l, layout, x),
                    apply_site(&sigma[1], l, layout, x),
                    apply_site(&sigma[2], l, layout, x),
                ]
            })
            .collect();
        Ok(Self {
            system: system.clone(),
            profile: *profile,
            sigma_x,
        })
    }

    /// ĵ(ξ) = i φ(|ξ|) Σ_λ M⁽λ⁾ e^{i x⁽λ⁾·ξ} ξ × σ⁽λ⁾X, one spin vector per axis.
    pub fn amplitude(&self, xi: [f64; 3]) -> [CVector; 3] {
        let dim = self.system.dim();
        let mut out = [CVector::zeros(dim), CVector::zeros(dim), CVector::zeros(dim)];
        let phi = self.profile.phi_unchecked(norm3(xi));
        for (l, sx) in self.sigma_x.iter().enumerate() {
            let phase = Complex64::from_polar(1.0, dot(self.system.positions[l], xi));
            let c = I * phi * self.system.moments[l] * phase;
            for i in 0..dim {
                let v = cross(xi, [sx[0][i], sx[1][i], sx[2][i]]);
                for a in 0..3 {
                    out[a][i] += c * v[a];
                }
            }
        }
        out
    }
}

/// Classical current of magnets with orientations S⁽λ⁾ ∈ S².
#[derive(Debug, Clone)]
pub struct ClassicalCurrent {
    system: SpinSystem,
    profile: CutoffProfile,
    orientations: Vec<[f64; 3]>,
}

impl ClassicalCurrent {
    pub fn new(system: &SpinSystem, profile: &CutoffProfile, orientations: &[[f64; 3]]) -> Result<Self> {
        system.validate()?;
        if orientations.len() != system.len() {
            return Err(Error::domain(format!(
                "{} orientations for {} particles",
                orientations.len(),
                system.len()
            )));
        }
        for (i, s) in orientations.iter().enumerate() {
            let n = norm3(*s);
            if (n - 1.0).abs() > 1e-10 {
                return Err(Error::domain(format!("orientation {i} is not a unit vector (norm {n})")));
            }
        }
        Ok(Self {
            system: system.clone(),
            profile: *profile,
            orientations: orientations.to_vec(),
        })
    }

    /// ĵ(ξ) = i φ(|ξ|) Σ_λ e^{iξ·x⁽λ⁾} ξ × (M⁽λ⁾ S⁽λ⁾)
    pub fn amplitude(&self, xi: [f64; 3]) -> [Complex64; 3] {
        let phi = self.profile.phi_unchecked(norm3(xi));
        let mut out = [Complex64::new(0.0, 0.0); 3];
        for (l, s) in self.orientations.iter().enumerate() {
            let phase = Complex64::from_polar(1.0, dot(self.system.positions[l], xi));
            let c = I * phi * self.system.moments[l] * phase;
            let v = cross(xi, s.map(|t| Complex64::new(t, 0.0)));
            for a in 0..3 {
                out[a] += c * v[a];
            }
        }
        out
    }
}

/// Either flavor of Fourier-space current.
#[derive(Debug, Clone)]
pub enum FourierCurrent {
    Vector(VectorCurrent),
    Classical(ClassicalCurrent),
}

impl FourierCurrent {
    /// |ĵ(ξ)|², using the spin-space norm for the vector flavor.
    pub fn norm_sq(&self, xi: [f64; 3]) -> f64 {
        match self {
            FourierCurrent::Vector(c) => c.amplitude(xi).iter().map(|v| v.norm_squared()).sum(),
            FourierCurrent::Classical(c) => c.amplitude(xi).iter().map(|z| z.norm_sqr()).sum(),
        }
    }

    /// |ξ · ĵ(ξ)|, zero for a transversal current.
    pub fn divergence_residual(&self, xi: [f64; 3]) -> f64 {
        match self {
            FourierCurrent::Vector(c) => {
                let a = c.amplitude(xi);
                (&a[0] * Complex64::new(xi[0], 0.0)
                    + &a[1] * Complex64::new(xi[1], 0.0)
                    + &a[2] * Complex64::new(xi[2], 0.0))
                    .norm()
            }
            FourierCurrent::Classical(c) => {
                let a = c.amplitude(xi);
                (a[0] * xi[0] + a[1] * xi[1] + a[2] * xi[2]).norm()
            }
        }
    }

    fn extent(&self) -> (f64, f64) {
        let (system, profile) = match self {
            FourierCurrent::Vector(c) => (&c.system, &c.profile),
            FourierCurrent::Classical(c) => (&c.system, &c.profile),
        };
        let mut sep: f64 = 0.0;
        for a in &system.positions {
            for b in &system.positions {
                sep = sep.max(norm3([a[0] - b[0], a[1] - b[1], a[2] - b[2]]));
            }
        }
        (profile.r_far_squared(), sep)
    }
}

/// jvect_fourier(system, profile, X, ξ)
pub fn jvect_fourier(
    system: &SpinSystem,
    profile: &CutoffProfile,
    x: &CVector,
    xi: [f64; 3],
) -> Result<[CVector; 3]> {
    Ok(VectorCurrent::new(system, profile, x)?.amplitude(xi))
}

/// jclass_fourier(system, profile, S, ξ)
pub fn jclass_fourier(
    system: &SpinSystem,
    profile: &CutoffProfile,
    orientations: &[[f64; 3]],
    xi: [f64; 3],
) -> Result<[Complex64; 3]> {
    Ok(ClassicalCurrent::new(system, profile, orientations)?.amplitude(xi))
}

/// Spherical product rule: Gauss–Legendre in |ξ| on `[0, r_max]`, Gauss–Legendre
/// in cos θ, and `2 n_polar` equispaced azimuths.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnergyQuadrature {
    pub n_radial: usize,
    pub n_polar: usize,
}

impl EnergyQuadrature {
    /// Orders that resolve the oscillation e^{iξ·(x⁽λ⁾−x⁽μ⁾)} up to the cutoff.
    pub fn for_current(current: &FourierCurrent) -> Self {
        let (r_max, sep) = current.extent();
        let n_polar = ((r_max * sep / 2.0).ceil() as usize + 24).max(24);
        Self {
            n_radial: (48 + (r_max * sep / 4.0).ceil() as usize).min(160),
            n_polar,
        }
    }

    pub fn doubled(self) -> Self {
        Self {
            n_radial: 2 * self.n_radial,
            n_polar: 2 * self.n_polar,
        }
    }
}

/// ½(2π)^{-3} ∫ |ĵ(ξ)|² / |ξ|² dξ with the default quadrature orders.
pub fn field_energy(current: &FourierCurrent) -> Result<f64> {
    field_energy_with(current, EnergyQuadrature::for_current(current))
}

/// As [`field_energy`] with explicit orders.
pub fn field_energy_with(current: &FourierCurrent, quad: EnergyQuadrature) -> Result<f64> {
    if quad.n_radial < 2 || quad.n_polar < 2 {
        return Err(Error::domain("energy quadrature needs at least two nodes per direction"));
    }
    let (r_max, _) = current.extent();
    let (radii, rw) = gauss_legendre_on(quad.n_radial, 0.0, r_max);
    let (cos_t, tw) = gauss_legendre(quad.n_polar);
    let n_az = 2 * quad.n_polar;
    let az_w = 2.0 * PI / n_az as f64;
    let directions: Vec<([f64; 3], f64)> = cos_t
        .iter()
        .zip(&tw)
        .flat_map(|(&c, &w)| {
            let s = (1.0 - c * c).sqrt();
            (0..n_az).map(move |k| {
                let ph = 2.0 * PI * (k as f64 + 0.5) / n_az as f64;
                ([s * ph.cos(), s * ph.sin(), c], w * az_w)
            })
        })
        .collect();
    // |ξ|² from the volume element cancels the 1/|ξ|² of the energy density
    let shells: Vec<f64> = radii
        .par_iter()
        .zip(rw.par_iter())
        .map(|(&r, &w)| {
            let s = compensated_sum(
                directions
                    .iter()
                    .map(|(d, dw)| dw * current.norm_sq([r * d[0], r * d[1], r * d[2]])),
            );
            w * s
        })
        .collect();
    let total = compensated_sum(shells);
    if !total.is_finite() {
        return Err(Error::numerical("field energy quadrature diverged", total));
    }
    Ok(0.5 * total / (2.0 * PI).powi(3))
}

/// C(s) = 2s(s+1) − ½
pub fn self_energy_factor(spin: Spin) -> f64 {
    let s = spin.value();
    2.0 * s * (s + 1.0) - 0.5
}

/// Both sides of the classical decomposition for a product state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecompositionCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

/// lhs = ⟨A_M X, X⟩, rhs = −E_class(S(X)) − C(s) A₁₁(0) Σ_λ (M⁽λ⁾)².
pub fn classical_decomposition_check(
    system: &SpinSystem,
    profile: &CutoffProfile,
    state: &ProductState,
) -> Result<DecompositionCheck> {
    if state.spin() != system.spin || state.factors().len() != system.len() {
        return Err(Error::domain("product state does not match the spin system"));
    }
    let a = assemble_am(system, profile)?;
    let lhs = quadratic_form(&a, state.assembled())?;
    let current = FourierCurrent::Classical(ClassicalCurrent::new(system, profile, &state.hopf_images())?);
    let energy = field_energy(&current)?;
    let m2: f64 = system.moments.iter().map(|m| m * m).sum();
    let rhs = -energy - self_energy_factor(system.spin) * a11_origin(profile)? * m2;
    Ok(DecompositionCheck {
        lhs,
        rhs,
        residual: (lhs - rhs).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn single(moment: f64) -> SpinSystem {
        SpinSystem::new(Spin::HALF, vec![[0.0; 3]], vec![moment]).unwrap()
    }

    #[test]
    fn zero_frequency_and_zero_moment_give_zero() {
        let p = CutoffProfile::gaussian(1.0).unwrap();
        let x = CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]);
        let j = jvect_fourier(&single(1.0), &p, &x, [0.0; 3]).unwrap();
        assert!(j.iter().all(|v| v.norm() == 0.0));
        let j = jvect_fourier(&single(0.0), &p, &x, [0.3, 1.0, -2.0]).unwrap();
        assert!(j.iter().all(|v| v.norm() == 0.0));
        let jc = jclass_fourier(&single(1.0), &p, &[[0.0, 0.0, 1.0]], [0.0; 3]).unwrap();
        assert!(jc.iter().all(|z| z.norm() == 0.0));
        let jc = jclass_fourier(&single(1.0), &p, &[[0.0, 0.0, 1.0]], [0.0, 0.0, 2.0]).unwrap();
        assert!(jc.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn vector_current_component_structure() {
        // ξ = (0,0,q): ξ × v = (−q v₂, q v₁, 0)
        let p = CutoffProfile::gaussian(1.0).unwrap();
        let x = CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]);
        let q = 0.8;
        let j = jvect_fourier(&single(1.0), &p, &x, [0.0, 0.0, q]).unwrap();
        let sigma = spin_matrices(Spin::HALF).sigma;
        let s1x = &sigma[0] * &x;
        let s2x = &sigma[1] * &x;
        let pref = I * p.phi(q).unwrap();
        for i in 0..2 {
            assert!((j[0][i] - pref * (-q) * s2x[i]).norm() < 1e-15);
            assert!((j[1][i] - pref * q * s1x[i]).norm() < 1e-15);
            assert_eq!(j[2][i], c(0.0, 0.0));
        }
    }

    #[test]
    fn non_unit_orientation_is_rejected() {
        let p = CutoffProfile::gaussian(1.0).unwrap();
        assert!(jclass_fourier(&single(1.0), &p, &[[0.0, 0.0, 2.0]], [1.0; 3]).is_err());
    }

    #[test]
    fn zero_current_has_zero_energy_and_scaling_is_quadratic() {
        let p = CutoffProfile::gaussian(1.0).unwrap();
        let sys = SpinSystem::new(Spin::HALF, vec![[0.0; 3], [0.0, 0.5, 0.9]], vec![0.0, 0.0]).unwrap();
        let cur = FourierCurrent::Classical(ClassicalCurrent::new(&sys, &p, &[[1.0, 0.0, 0.0]; 2]).unwrap());
        assert_eq!(field_energy(&cur).unwrap(), 0.0);
        let sys = SpinSystem::new(Spin::HALF, vec![[0.0; 3], [0.0, 0.5, 0.9]], vec![0.7, -1.1]).unwrap();
        let e1 = field_energy(&FourierCurrent::Classical(
            ClassicalCurrent::new(&sys, &p, &[[1.0, 0.0, 0.0], [0.0, 0.6, 0.8]]).unwrap(),
        ))
        .unwrap();
        let e2 = field_energy(&FourierCurrent::Classical(
            ClassicalCurrent::new(&sys.scaled(2.0), &p, &[[1.0, 0.0, 0.0], [0.0, 0.6, 0.8]]).unwrap(),
        ))
        .unwrap();
        assert!((e2 - 4.0 * e1).abs() < 1e-13 * e2);
    }

    #[test]
    fn single_spin_energy_closed_form() {
        // One magnet at the origin: ½(2π)^{-3}∫ φ² |ξ×S|² dξ = A₁₁(0) M², and
        // for the vector flavor the Casimir gives 3 A₁₁(0) M² / 2.
        let p = CutoffProfile::gaussian(1.0).unwrap();
        let a11 = 1.0 / (12.0 * PI.powf(1.5));
        let sys = single(1.3);
        let e = field_energy(&FourierCurrent::Classical(
            ClassicalCurrent::new(&sys, &p, &[[0.0, 0.6, 0.8]]).unwrap(),
        ))
        .unwrap();
        assert!((e - 0.5 * a11 * 1.69).abs() < 1e-12, "{e}");
        let x = CVector::from_vec(vec![c(0.6, 0.0), c(0.0, 0.8)]);
        let e = field_energy(&FourierCurrent::Vector(VectorCurrent::new(&sys, &p, &x).unwrap())).unwrap();
        assert!((e - 1.5 * a11 * 1.69).abs() < 1e-12, "{e}");
    }

    #[test]
    fn default_orders_are_stable_under_doubling() {
        let p = CutoffProfile::gaussian(1.0).unwrap();
        let sys = SpinSystem::new(Spin::HALF, vec![[0.0; 3], [0.4, -1.2, 2.1]], vec![1.0, 0.6]).unwrap();
        let cur = FourierCurrent::Classical(
            ClassicalCurrent::new(&sys, &p, &[[0.0, 0.6, 0.8], [1.0, 0.0, 0.0]]).unwrap(),
        );
        let quad = EnergyQuadrature::for_current(&cur);
        let e = field_energy_with(&cur, quad).unwrap();
        let e2 = field_energy_with(&cur, quad.doubled()).unwrap();
        assert!((e - e2).abs() < 1e-8, "{e} {e2}");
    }

    #[test]
    fn self_energy_factor_values() {
        assert_eq!(self_energy_factor(Spin::HALF), 1.0);
        assert_eq!(self_energy_factor(Spin::new(1.0).unwrap()), 3.5);
        assert_eq!(self_energy_factor(Spin::new(1.5).unwrap()), 7.0);
    }
}
