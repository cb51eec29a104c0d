//! The quadratic correction operator A_M on the spin space.
//!
//! A_M X = −½ Σ_{λ,μ} Σ_{j,m} M⁽λ⁾ M⁽μ⁾ A_jm(x⁽μ⁾ − x⁽λ⁾) σ_m⁽μ⁾ σ_j⁽λ⁾ X

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cutoff::CutoffProfile;
use crate::error::{Error, Result};
use crate::kernel::KernelCache;
use crate::spin_algebra::{
    accumulate_site_pair, check_normalized, expectation, spin_matrices, CMatrix, CVector,
    SiteLayout, Spin, DEFAULT_DIM_BUDGET,
};

/// Relative tolerance used to group eigenvalues into the ground cluster.
pub const DEFAULT_DEGENERACY_TOL: f64 = 1e-7;

/// Relative tolerance on the largest eigenvalue of A_M.
pub const NSD_TOL: f64 = 1e-10;

/// Static spin particles: positions and magnetic moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinSystem {
    pub spin: Spin,
    pub positions: Vec<[f64; 3]>,
    pub moments: Vec<f64>,
}

impl SpinSystem {
    pub fn new(spin: Spin, positions: Vec<[f64; 3]>, moments: Vec<f64>) -> Result<Self> {
        let sys = Self {
            spin,
            positions,
            moments,
        };
        sys.validate()?;
        Ok(sys)
    }

    pub fn validate(&self) -> Result<()> {
        if self.positions.is_empty() {
            return Err(Error::domain("a spin system needs at least one particle"));
        }
        if self.positions.len() != self.moments.len() {
            return Err(Error::domain(format!(
                "{} positions but {} moments",
                self.positions.len(),
                self.moments.len()
            )));
        }
        for (i, p) in self.positions.iter().enumerate() {
            if p.iter().any(|v| !v.is_finite()) || !self.moments[i].is_finite() {
                return Err(Error::domain(format!("particle {i} has a non-finite coordinate")));
            }
            for q in &self.positions[..i] {
                if p == q {
                    return Err(Error::domain("positions pairwise distinct is required"));
                }
            }
        }
        self.layout()?;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn layout(&self) -> Result<SiteLayout> {
        SiteLayout::new(self.len(), self.spin.dim(), DEFAULT_DIM_BUDGET)
    }

    pub fn dim(&self) -> usize {
        self.spin.dim().pow(self.len() as u32)
    }

    /// |M| = (Σ_λ (M⁽λ⁾)²)^{1/2}
    pub fn moment_norm(&self) -> f64 {
        self.moments.iter().map(|m| m * m).sum::<f64>().sqrt()
    }

    /// Copy with every moment multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            spin: self.spin,
            positions: self.positions.clone(),
            moments: self.moments.iter().map(|m| c * m).collect(),
        }
    }
}

/// How an operator was produced.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorOrigin {
    pub system: SpinSystem,
    pub profile: CutoffProfile,
}

/// A Hermitian matrix on the spin space.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianSpinOperator {
    pub matrix: CMatrix,
    pub origin: Option<OperatorOrigin>,
}

impl HermitianSpinOperator {
    /// Wraps a matrix after checking that it is Hermitian.
    pub fn from_matrix(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::domain("operator matrix must be square"));
        }
        let dev = hermitian_deviation(&matrix);
        let scale = max_abs(&matrix).max(f64::MIN_POSITIVE);
        if dev > 1e-12 * scale {
            return Err(Error::domain(format!("matrix is not Hermitian (deviation {dev:e})")));
        }
        Ok(Self {
            matrix,
            origin: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.matrix.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Entries as column-major (re, im) pairs.
    pub fn to_column_major_pairs(&self) -> Vec<[f64; 2]> {
        self.matrix.iter().map(|z| [z.re, z.im]).collect()
    }
}

pub(crate) fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub(crate) fn hermitian_deviation(m: &CMatrix) -> f64 {
    let mut dev: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..=i {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Builds −½ Σ M⁽λ⁾M⁽μ⁾ K_jm(x⁽μ⁾ − x⁽λ⁾) σ_m⁽μ⁾σ_j⁽λ⁾ for an arbitrary real
/// kernel `K`. Shared by the continuum and the discretized operators.
pub(crate) fn assemble_with_kernel<K>(system: &SpinSystem, kernel: K) -> Result<CMatrix>
where
    K: Fn([f64; 3]) -> Result<[[f64; 3]; 3]> + Sync,
{
    system.validate()?;
    let layout = system.layout()?;
    let p = system.len();
    let pairs: Vec<(usize, usize)> = (0..p).flat_map(|l| (0..p).map(move |m| (l, m))).collect();
    let kernels: Vec<[[f64; 3]; 3]> = pairs
        .par_iter()
        .map(|&(l, m)| {
            let (xl, xm) = (system.positions[l], system.positions[m]);
            kernel([xm[0] - xl[0], xm[1] - xl[1], xm[2] - xl[2]])
        })
        .collect::<Result<_>>()?;
    let sigma = spin_matrices(system.spin).sigma;
    let mut out = CMatrix::zeros(layout.dim(), layout.dim());
    for (&(l, m), k) in pairs.iter().zip(&kernels) {
        let mm = system.moments[l] * system.moments[m];
        if mm == 0.0 {
            continue;
        }
        for (j, row) in k.iter().enumerate() {
            for (n, &kjn) in row.iter().enumerate() {
                if kjn == 0.0 {
                    continue;
                }
                let coef = Complex64::new(-0.5 * mm * kjn, 0.0);
                accumulate_site_pair(&mut out, coef, &sigma[j], l, &sigma[n], m, layout);
            }
        }
    }
    Ok(out)
}

pub(crate) fn check_negative_semidefinite(matrix: &CMatrix) -> Result<()> {
    let ev = matrix.clone().symmetric_eigenvalues();
    let top = ev.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scale = ev.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if top > NSD_TOL * scale {
        return Err(Error::numerical(
            "assembled operator is not negative semidefinite",
            top,
        ));
    }
    Ok(())
}

/// A_M for `system` under `profile`.
pub fn assemble_am(system: &SpinSystem, profile: &CutoffProfile) -> Result<HermitianSpinOperator> {
    assemble_am_cached(system, &KernelCache::new(*profile))
}

/// A_M using a shared kernel cache.
pub fn assemble_am_cached(system: &SpinSystem, cache: &KernelCache) -> Result<HermitianSpinOperator> {
    let matrix = assemble_with_kernel(system, |x| Ok(cache.get(x)?.entries))?;
    check_negative_semidefinite(&matrix)?;
    Ok(HermitianSpinOperator {
        matrix,
        origin: Some(OperatorOrigin {
            system: system.clone(),
            profile: *cache.profile(),
        }),
    })
}

/// ⟨A X, X⟩ for normalized X.
pub fn quadratic_form(a: &HermitianSpinOperator, x: &CVector) -> Result<f64> {
    if x.len() != a.dim() {
        return Err(Error::domain(format!(
            "state has length {}, operator dimension is {}",
            x.len(),
            a.dim()
        )));
    }
    check_normalized(x, "spin state")?;
    Ok(expectation(&a.matrix, x))
}

/// Bottom of the spectrum of a Hermitian spin operator.
#[derive(Debug, Clone)]
pub struct GroundEigenspace {
    pub lambda_min: f64,
    pub multiplicity: usize,
    /// Orthonormal basis of the ground cluster.
    pub basis: Vec<CVector>,
    /// Full spectrum, ascending.
    pub eigenvalues: Vec<f64>,
}

/// Full dense eigendecomposition; eigenvalues within
/// `degeneracy_tol · max(1, |λ_min|)` of λ_min form the ground cluster.
pub fn ground_eigenspace(a: &HermitianSpinOperator, degeneracy_tol: f64) -> Result<GroundEigenspace> {
    if degeneracy_tol.is_nan() || degeneracy_tol < 0.0 {
        return Err(Error::domain("degeneracy tolerance must be nonnegative"));
    }
    let eig = a.matrix.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let lambda_min = *eigenvalues
        .first()
        .ok_or_else(|| Error::domain("empty operator"))?;
    if !lambda_min.is_finite() {
        return Err(Error::numerical("eigensolver produced a non-finite eigenvalue", lambda_min));
    }
    let window = degeneracy_tol * lambda_min.abs().max(1.0);
    let multiplicity = eigenvalues.iter().filter(|&&e| e - lambda_min <= window).count();
    let basis = order[..multiplicity]
        .iter()
        .map(|&i| eig.eigenvectors.column(i).into_owned())
        .collect();
    Ok(GroundEigenspace {
        lambda_min,
        multiplicity,
        basis,
        eigenvalues,
    })
}

/// Minimum of ⟨A X, X⟩ over product states, by alternating single-site
/// minimization from `restarts` seeded random starts.
pub fn product_state_minimum(
    a: &HermitianSpinOperator,
    spin: Spin,
    sites: usize,
    restarts: usize,
    seed: u64,
) -> Result<(f64, Vec<CVector>)> {
    let layout = SiteLayout::new(sites, spin.dim(), DEFAULT_DIM_BUDGET)?;
    if layout.dim() != a.dim() {
        return Err(Error::domain("operator dimension does not match the site layout"));
    }
    let d = spin.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, Vec<CVector>)> = None;
    for _ in 0..restarts.max(1) {
        let mut factors: Vec<CVector> = (0..sites).map(|_| random_unit(&mut rng, d)).collect();
        let mut value = f64::INFINITY;
        for _sweep in 0..200 {
            for site in 0..sites {
                let reduced = reduced_operator(a, &factors, site, layout);
                let eig = reduced.symmetric_eigen();
                let imin = eig.eigenvalues.imin();
                factors[site] = eig.eigenvectors.column(imin).into_owned();
            }
            let x = crate::spin_algebra::kron_vectors(&factors);
            let v = expectation(&a.matrix, &x);
            let done = (value - v).abs() <= 1e-14 * v.abs().max(1e-300);
            value = v;
            if done {
                break;
            }
        }
        if best.as_ref().is_none_or(|(b, _)| value < *b) {
            best = Some((value, factors));
        }
    }
    Ok(best.expect("at least one restart"))
}

// ⟨· ⊗ V_site ⊗ ·| A |· ⊗ W ⊗ ·⟩ with the other factors fixed.
fn reduced_operator(a: &HermitianSpinOperator, factors: &[CVector], site: usize, layout: SiteLayout) -> CMatrix {
    let d = layout.local_dim;
    let stride = layout.stride(site);
    let dim = layout.dim();
    // coefficient of each full basis index in the product of the other factors
    let env: Vec<Complex64> = (0..dim)
        .map(|i| {
            let mut c = Complex64::new(1.0, 0.0);
            for (s, f) in factors.iter().enumerate() {
                if s != site {
                    c *= f[(i / layout.stride(s)) % d];
                }
            }
            c
        })
        .collect();
    let mut out = CMatrix::zeros(d, d);
    for row in 0..dim {
        let r = (row / stride) % d;
        for col in 0..dim {
            let c = (col / stride) % d;
            out[(r, c)] += env[row].conj() * a.matrix[(row, col)] * env[col];
        }
    }
    out
}

/// Haar-random unit vector in C^d.
pub fn random_unit<R: Rng>(rng: &mut R, d: usize) -> CVector {
    let v = DVector::from_fn(d, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let n = v.norm();
    v / Complex64::new(n, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::a11_origin;
    use crate::spin_algebra::embed_site_operator;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn unit() -> CutoffProfile {
        CutoffProfile::gaussian(1.0).unwrap()
    }

    fn max_diff(a: &CMatrix, b: &CMatrix) -> f64 {
        max_abs(&(a - b))
    }

    #[test]
    fn single_spin_is_scalar() {
        let p = unit();
        let a11 = a11_origin(&p).unwrap();
        for (twice, m) in [(1u32, 1.3), (2, 0.6), (3, -0.9)] {
            let spin = Spin::from_twice(twice).unwrap();
            let sys = SpinSystem::new(spin, vec![[0.2, 0.0, 1.0]], vec![m]).unwrap();
            let a = assemble_am(&sys, &p).unwrap();
            let s = spin.value();
            let expect = -2.0 * s * (s + 1.0) * a11 * m * m;
            let target = CMatrix::identity(spin.dim(), spin.dim()) * Complex64::new(expect, 0.0);
            assert!(max_diff(&a.matrix, &target) < 1e-14, "s={s}");
            let g = ground_eigenspace(&a, DEFAULT_DEGENERACY_TOL).unwrap();
            assert_eq!(g.multiplicity, spin.dim());
        }
        let sys = SpinSystem::new(Spin::HALF, vec![[0.0; 3]], vec![1.0]).unwrap();
        let g = ground_eigenspace(&assemble_am(&sys, &p).unwrap(), DEFAULT_DEGENERACY_TOL).unwrap();
        assert!((g.lambda_min + 1.5 * a11).abs() < 1e-15);
        assert_eq!(g.multiplicity, 2);
    }

    #[test]
    fn zero_moments_give_zero() {
        let sys = SpinSystem::new(Spin::HALF, vec![[0.0; 3], [1.0, 0.0, 0.0]], vec![0.0, 0.0]).unwrap();
        let a = assemble_am(&sys, &unit()).unwrap();
        assert_eq!(max_abs(&a.matrix), 0.0);
    }

    #[test]
    fn distant_pair_couples_through_the_dipole_tensor() {
        let p = unit();
        let (m1, m2) = (1.1, -0.7);
        let y = [0.0, 12.0, 16.0];
        let sys = SpinSystem::new(Spin::HALF, vec![[0.0; 3], y], vec![m1, m2]).unwrap();
        let a = assemble_am(&sys, &p).unwrap();
        let layout = sys.layout().unwrap();
        let sigma = spin_matrices(Spin::HALF).sigma;
        let a11 = a11_origin(&p).unwrap();
        let r = 20.0;
        let yh = [0.0, 0.6, 0.8];
        let mut expect = CMatrix::identity(4, 4) * Complex64::new(-1.5 * a11 * (m1 * m1 + m2 * m2), 0.0);
        for j in 0..3 {
            for m in 0..3 {
                let delta = if j == m { 1.0 } else { 0.0 };
                let d = -(delta - 3.0 * yh[j] * yh[m]) / (4.0 * PI * r * r * r);
                let op = embed_site_operator(&sigma[j], 0, layout).unwrap()
                    * embed_site_operator(&sigma[m], 1, layout).unwrap();
                expect -= op * Complex64::new(m1 * m2 * d, 0.0);
            }
        }
        assert!(max_diff(&a.matrix, &expect) < 1e-12 * max_abs(&expect));
        // the cross term is far from negligible at this distance
        let uncoupled = CMatrix::identity(4, 4) * Complex64::new(-1.5 * a11 * (m1 * m1 + m2 * m2), 0.0);
        assert!(max_diff(&a.matrix, &uncoupled) > 1e-6);
    }

    #[test]
    fn ground_eigenspace_examples() {
        let mut d = CMatrix::zeros(4, 4);
        d[(0, 0)] = Complex64::new(-1.0, 0.0);
        let a = HermitianSpinOperator::from_matrix(d.clone()).unwrap();
        let g = ground_eigenspace(&a, 1e-7).unwrap();
        assert_eq!((g.lambda_min, g.multiplicity), (-1.0, 1));
        assert!((g.basis[0][0].norm() - 1.0).abs() < 1e-15);
        let shifted = HermitianSpinOperator::from_matrix(d + CMatrix::identity(4, 4) * Complex64::new(0.37, 0.0)).unwrap();
        let gs = ground_eigenspace(&shifted, 1e-7).unwrap();
        assert!((gs.lambda_min - (-0.63)).abs() < 1e-15);
        assert_eq!(gs.multiplicity, 1);
        assert!(ground_eigenspace(&a, -1.0).is_err());
    }

    #[test]
    fn non_hermitian_matrix_is_rejected() {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 1)] = Complex64::new(1.0, 0.0);
        assert!(HermitianSpinOperator::from_matrix(m).is_err());
    }

    #[test]
    fn invalid_systems() {
        assert!(SpinSystem::new(Spin::HALF, vec![[0.0; 3], [0.0; 3]], vec![1.0, 1.0]).is_err());
        assert!(SpinSystem::new(Spin::HALF, vec![[0.0; 3]], vec![1.0, 1.0]).is_err());
        assert!(SpinSystem::new(Spin::HALF, vec![], vec![]).is_err());
        assert!(SpinSystem::new(Spin::HALF, vec![[f64::NAN, 0.0, 0.0]], vec![1.0]).is_err());
        let many = (0..13).map(|i| [i as f64, 0.0, 0.0]).collect();
        assert!(matches!(
            SpinSystem::new(Spin::HALF, many, vec![1.0; 13]),
            Err(Error::Resource { .. })
        ));
    }

    #[test]
    fn permutation_of_particles_preserves_the_spectrum() {
        let p = unit();
        let pos = vec![[0.0, 0.0, 0.0], [0.8, -0.3, 0.2], [-0.4, 0.9, 0.5]];
        let mom = vec![1.0, 0.6, -0.8];
        let a = assemble_am(&SpinSystem::new(Spin::HALF, pos.clone(), mom.clone()).unwrap(), &p).unwrap();
        let perm = [2, 0, 1];
        let pos2 = perm.iter().map(|&i| pos[i]).collect();
        let mom2 = perm.iter().map(|&i| mom[i]).collect();
        let b = assemble_am(&SpinSystem::new(Spin::HALF, pos2, mom2).unwrap(), &p).unwrap();
        for (x, y) in a.eigenvalues().iter().zip(b.eigenvalues()) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn rayleigh_quotient_at_ground_vector() {
        let sys = SpinSystem::new(Spin::HALF, vec![[0.0; 3], [0.5, 0.5, 0.0]], vec![1.0, 0.7]).unwrap();
        let a = assemble_am(&sys, &unit()).unwrap();
        let g = ground_eigenspace(&a, DEFAULT_DEGENERACY_TOL).unwrap();
        let q = quadratic_form(&a, &g.basis[0]).unwrap();
        assert!((q - g.lambda_min).abs() < 1e-14);
        let (prod, factors) = product_state_minimum(&a, Spin::HALF, 2, 4, 7).unwrap();
        assert_eq!(factors.len(), 2);
        assert!(prod >= g.lambda_min - 1e-14);
        assert!(quadratic_form(&a, &CVector::zeros(4)).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn negative_semidefinite_and_quadratic_in_moments(
            y in proptest::array::uniform3(-2.0f64..2.0),
            m1 in -2.0f64..2.0,
            m2 in -2.0f64..2.0,
            c in 0.1f64..3.0,
        ) {
            prop_assume!(y.iter().map(|v| v * v).sum::<f64>() > 1e-4);
            let sys = SpinSystem::new(Spin::HALF, vec![[0.0; 3], y], vec![m1, m2]).unwrap();
            let p = unit();
            let a = assemble_am(&sys, &p).unwrap();
            let top = *a.eigenvalues().last().unwrap();
            let scale = a.eigenvalues()[0].abs().max(1e-300);
            prop_assert!(top <= NSD_TOL * scale);
            let b = assemble_am(&sys.scaled(c), &p).unwrap();
            let diff = max_diff(&b.matrix, &(&a.matrix * Complex64::new(c * c, 0.0)));
            prop_assert!(diff <= 1e-12 * max_abs(&b.matrix).max(1e-300));
        }
    }
}
