//! Second-order checks on the truncated model: the variational trial
//! state, the small-coupling fit of the ground energy, photon numbers and
//! ground-state multiplicities.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cutoff::CutoffProfile;
use crate::error::{Error, Result};
use crate::spin_algebra::{check_normalized, expectation, CMatrix, CVector};
use crate::spin_operator::{ground_eigenspace, random_unit, SpinSystem};

use super::grid::{discrete_am, ModeGrid};
use super::lanczos::{ground_state, EigenOptions, EigenPairs};
use super::space::{build_hamiltonian, photon_number, FockHamiltonian};

pub const DEFAULT_N_RADIAL: usize = 14;
pub const DEFAULT_N_ANGULAR: usize = 8;
pub const DEFAULT_N_MAX: usize = 1;

/// Lowest pairs of H, started from Ψ₀ ⊗ (random spin block).
///
/// The block has one vector per spin basis state, so every state reachable
/// from the vacuum sector is in the Krylov space.
pub fn fock_ground_state(h: &FockHamiltonian, opts: &EigenOptions) -> Result<EigenPairs> {
    let ds = h.space().spin_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let start: Vec<CVector> = (0..ds)
        .map(|_| h.space().vacuum_tensor(&random_unit(&mut rng, ds)))
        .collect::<Result<_>>()?;
    ground_state(h, opts, Some(&start))
}

#[derive(Debug, Clone, Serialize)]
pub struct VariationalCheck {
    /// ⟨H φ, φ⟩ for φ = Ψ₀⊗X − u_M(X).
    pub lhs: f64,
    /// ⟨A_M^disc X, X⟩.
    pub rhs: f64,
    pub residual: f64,
    /// ‖u_M(X)‖ in the graph norm of the free photon energy.
    pub trial_norm: f64,
    /// K with ‖u_M(X)‖ ≤ K |M| |X| for every M and X on this grid.
    pub k_constant: f64,
}

/// Builds u_M(X) = (dΓ(ω)⁻¹ ⊗ I) H_int(Ψ₀⊗X) and compares the energy of
/// Ψ₀⊗X − u_M(X) with ⟨A_M^disc X, X⟩.
pub fn variational_trial_check(
    system: &SpinSystem,
    profile: &CutoffProfile,
    grid: &ModeGrid,
    n_max: usize,
    x: &CVector,
) -> Result<VariationalCheck> {
    if n_max < 1 {
        return Err(Error::domain("the trial state needs n_max >= 1"));
    }
    check_normalized(x, "spin state")?;
    let h = build_hamiltonian(system, profile, grid, n_max)?;
    let psi = h.space().vacuum_tensor(x)?;
    let u = resolvent_trial(&h, &psi);
    let phi = &psi - &u;
    let lhs = phi.dotc(&h.apply(&phi)).re;
    let a = discrete_am(system, profile, grid)?;
    let rhs = expectation(&a.matrix, x);
    let trial_norm = graph_norm(&h, &u);
    Ok(VariationalCheck {
        lhs,
        rhs,
        residual: (lhs - rhs).abs(),
        trial_norm,
        k_constant: discrete_k_constant(system, profile, grid)?,
    })
}

fn resolvent_trial(h: &FockHamiltonian, psi: &CVector) -> CVector {
    let ds = h.space().spin_dim();
    let mut u = h.apply_interaction(psi);
    for (p, &e) in h.photon_energies().iter().enumerate() {
        let mut blk = u.rows_mut(p * ds, ds);
        if e > 0.0 {
            blk /= Complex64::new(e, 0.0);
        } else {
            blk.fill(Complex64::new(0.0, 0.0));
        }
    }
    u
}

// (‖u‖² + ‖dΓ(ω) u‖²)^{1/2}
fn graph_norm(h: &FockHamiltonian, u: &CVector) -> f64 {
    let ds = h.space().spin_dim();
    let mut acc = 0.0;
    for (p, &e) in h.photon_energies().iter().enumerate() {
        acc += (1.0 + e * e) * u.rows(p * ds, ds).norm_squared();
    }
    acc.sqrt()
}

/// Smallest K with ‖u_M(X)‖ ≤ K |M| |X| on this grid: the square root of
/// the top eigenvalue of Σ_λ Σ_o (1 + ω_o⁻²) S_{λo}† S_{λo}, where S_{λo} is
/// the coupling of spin λ at unit moment.
pub fn discrete_k_constant(system: &SpinSystem, profile: &CutoffProfile, grid: &ModeGrid) -> Result<f64> {
    let ds = system.dim();
    let mut q = CMatrix::zeros(ds, ds);
    for l in 0..system.len() {
        let mut moments = vec![0.0; system.len()];
        moments[l] = 1.0;
        let unit = SpinSystem {
            moments,
            ..system.clone()
        };
        let h = build_hamiltonian(&unit, profile, grid, 1)?;
        for (o, &w) in h.frequencies().iter().enumerate() {
            let s = h.coupling(o);
            q += s.adjoint() * s * Complex64::new(1.0 + 1.0 / (w * w), 0.0);
        }
    }
    let top = q.symmetric_eigenvalues().iter().copied().fold(0.0, f64::max);
    Ok(top.sqrt())
}

#[derive(Debug, Clone, Serialize)]
pub struct FitPoint {
    pub t: f64,
    /// inf σ(H(tM)).
    pub energy: f64,
    /// ⟨N⟩ in the computed ground state.
    pub photon_number: f64,
    /// E(t) − c₂ t².
    pub remainder: f64,
    pub eig_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct QuadraticFit {
    pub points: Vec<FitPoint>,
    pub c2: f64,
    pub c3: f64,
    /// inf σ(A_M^disc).
    pub reference: f64,
    pub relative_error: f64,
    /// Least-squares slope of log|E − c₂t²| against log t.
    pub residual_slope: f64,
    /// Least-squares slope of log⟨N⟩ against log t.
    pub photon_slope: f64,
    /// Some remainder is within the eigensolver's reach or the remainders
    /// are not monotone in t.
    pub tolerance_limited: bool,
}

fn lsq_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn check_scales(scales: &[f64]) -> Result<Vec<f64>> {
    if scales.len() < 4 {
        return Err(Error::domain("at least four scale points are required"));
    }
    if scales.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
        return Err(Error::domain("scale points must be positive"));
    }
    let mut ts = scales.to_vec();
    ts.sort_by(f64::total_cmp);
    let ratio = ts[1] / ts[0];
    if ts.windows(2).any(|w| ((w[1] / w[0]) / ratio - 1.0).abs() > 1e-9) || ratio == 1.0 {
        return Err(Error::domain("scale points must form a geometric progression"));
    }
    Ok(ts)
}

/// Ground energies of H(tM) over `scales`, with E(t) = c₂t² + c₃t³ fitted
/// exactly through the two smallest points.
pub fn quadratic_fit(
    system: &SpinSystem,
    profile: &CutoffProfile,
    grid: &ModeGrid,
    n_max: usize,
    scales: &[f64],
    opts: &EigenOptions,
) -> Result<QuadraticFit> {
    let ts = check_scales(scales)?;
    let reference = ground_eigenspace(&discrete_am(system, profile, grid)?, 0.0)?.lambda_min;
    let mut raw = Vec::with_capacity(ts.len());
    for &t in &ts {
        let h = build_hamiltonian(&system.scaled(t), profile, grid, n_max)?;
        let pairs = fock_ground_state(&h, opts)?;
        let i0 = (0..pairs.energies.len())
            .min_by(|&a, &b| pairs.energies[a].total_cmp(&pairs.energies[b]))
            .expect("at least one pair");
        let n = photon_number(h.space(), &pairs.vectors[i0])?;
        raw.push((t, pairs.energies[i0], n, pairs.residuals[i0]));
    }
    let (t1, e1) = (raw[0].0, raw[0].1);
    let (t2, e2) = (raw[1].0, raw[1].1);
    // [t1² t1³; t2² t2³] (c2, c3)ᵀ = (e1, e2)ᵀ
    let det = t1 * t1 * t2 * t2 * t2 - t1 * t1 * t1 * t2 * t2;
    let c2 = (e1 * t2 * t2 * t2 - e2 * t1 * t1 * t1) / det;
    let c3 = (t1 * t1 * e2 - t2 * t2 * e1) / det;
    let points: Vec<FitPoint> = raw
        .iter()
        .map(|&(t, energy, photon_number, eig_residual)| FitPoint {
            t,
            energy,
            photon_number,
            remainder: energy - c2 * t * t,
            eig_residual,
        })
        .collect();
    let lt: Vec<f64> = points.iter().map(|p| p.t.ln()).collect();
    let lr: Vec<f64> = points.iter().map(|p| p.remainder.abs().max(f64::MIN_POSITIVE).ln()).collect();
    let ln: Vec<f64> = points.iter().map(|p| p.photon_number.max(f64::MIN_POSITIVE).ln()).collect();
    let floor = 100.0 * opts.tol;
    let tolerance_limited = points.iter().any(|p| p.remainder.abs() <= floor)
        || points.windows(2).any(|w| w[1].remainder.abs() < w[0].remainder.abs());
    Ok(QuadraticFit {
        c2,
        c3,
        reference,
        relative_error: (c2 - reference).abs() / reference.abs().max(f64::MIN_POSITIVE),
        residual_slope: lsq_slope(&lt, &lr),
        photon_slope: lsq_slope(&lt, &ln),
        tolerance_limited,
        points,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MultiplicityRow {
    pub g: f64,
    /// Lowest computed energies of H(g), ascending.
    pub energies: Vec<f64>,
    pub h_multiplicity: usize,
    pub a1_multiplicity: usize,
    /// ‖Π U‖² for each ground vector U, Π the projector onto
    /// Ψ₀ ⊗ (ground eigenspace of A_1^disc).
    pub overlaps: Vec<f64>,
}

impl MultiplicityRow {
    pub fn bound_holds(&self) -> bool {
        self.h_multiplicity <= self.a1_multiplicity
    }

    pub fn min_overlap(&self) -> f64 {
        self.overlaps.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Ground multiplicity of H(g·1) for each g against that of A_1^disc.
pub fn multiplicity_scan(
    system: &SpinSystem,
    profile: &CutoffProfile,
    grid: &ModeGrid,
    n_max: usize,
    g_points: &[f64],
    degeneracy_tol: f64,
    opts: &EigenOptions,
) -> Result<Vec<MultiplicityRow>> {
    let g0 = system.moments[0];
    if system.moments.iter().any(|&m| m != g0) {
        return Err(Error::domain("all moments must be equal for a multiplicity scan"));
    }
    if g_points.is_empty() || g_points.iter().any(|&g| !(g > 0.0 && g.is_finite())) {
        return Err(Error::domain("coupling points must be positive"));
    }
    let unit = SpinSystem {
        moments: vec![1.0; system.len()],
        ..system.clone()
    };
    let a1 = ground_eigenspace(&discrete_am(&unit, profile, grid)?, degeneracy_tol)?;
    let ds = unit.dim();
    let opts = EigenOptions {
        k_pairs: opts.k_pairs.max(ds),
        ..*opts
    };
    g_points
        .iter()
        .map(|&g| {
            let h = build_hamiltonian(&unit.scaled(g), profile, grid, n_max)?;
            let pairs = fock_ground_state(&h, &opts)?;
            let mut order: Vec<usize> = (0..pairs.energies.len()).collect();
            order.sort_by(|&a, &b| pairs.energies[a].total_cmp(&pairs.energies[b]));
            let energies: Vec<f64> = order.iter().map(|&i| pairs.energies[i]).collect();
            let e0 = energies[0];
            let window = degeneracy_tol * e0.abs().max(1.0);
            let mult = energies.iter().filter(|&&e| e - e0 <= window).count();
            let overlaps = order[..mult]
                .iter()
                .map(|&i| {
                    let vac = pairs.vectors[i].rows(0, ds);
                    a1.basis.iter().map(|b| b.dotc(&vac).norm_sqr()).sum()
                })
                .collect();
            Ok(MultiplicityRow {
                g,
                energies,
                h_multiplicity: mult,
                a1_multiplicity: a1.multiplicity,
                overlaps,
            })
        })
        .collect()
}
