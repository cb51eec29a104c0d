//! Block Lanczos with full reorthogonalization for the low end of a
//! Hermitian spectrum.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spin_algebra::{CMatrix, CVector};

use super::space::FockHamiltonian;

/// Something that can be applied to a vector and is Hermitian.
pub trait HermitianOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, v: &CVector) -> CVector;
}

impl HermitianOperator for FockHamiltonian {
    fn dim(&self) -> usize {
        FockHamiltonian::dim(self)
    }
    fn apply(&self, v: &CVector) -> CVector {
        FockHamiltonian::apply(self, v)
    }
}

impl HermitianOperator for CMatrix {
    fn dim(&self) -> usize {
        self.nrows()
    }
    fn apply(&self, v: &CVector) -> CVector {
        self * v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenOptions {
    /// Bound on ‖H u − E u‖ for every returned pair.
    pub tol: f64,
    pub k_pairs: usize,
    /// Largest Krylov basis before giving up.
    pub max_basis: usize,
    /// Seed for random start vectors.
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            k_pairs: 4,
            max_basis: 800,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigenPairs {
    /// Ascending.
    pub energies: Vec<f64>,
    pub vectors: Vec<CVector>,
    /// ‖H u − E u‖ from a fresh product with H.
    pub residuals: Vec<f64>,
    pub basis_size: usize,
}

const DEFLATION: f64 = 1e-10;

// Removes the components along `basis` (two passes) and normalizes.
fn orthogonalize(v: &mut CVector, basis: &[CVector]) -> f64 {
    let before = v.norm();
    for _ in 0..2 {
        for q in basis {
            let c = q.dotc(v);
            v.axpy(-c, q, Complex64::new(1.0, 0.0));
        }
    }
    let after = v.norm();
    if after > DEFLATION * before && after > 0.0 {
        *v /= Complex64::new(after, 0.0);
    }
    after / before.max(f64::MIN_POSITIVE)
}

fn combine(vs: &[CVector], coeffs: nalgebra::DVectorView<Complex64>) -> CVector {
    let mut out = CVector::zeros(vs[0].len());
    for (v, &c) in vs.iter().zip(coeffs.iter()) {
        out.axpy(c, v, Complex64::new(1.0, 0.0));
    }
    out
}

/// Lowest `k_pairs` eigenpairs of `op`, starting from `start` (or from
/// seeded random vectors when `None`).
pub fn ground_state<H: HermitianOperator>(
    op: &H,
    opts: &EigenOptions,
    start: Option<&[CVector]>,
) -> Result<EigenPairs> {
    let n = op.dim();
    if n == 0 || opts.k_pairs == 0 {
        return Err(Error::domain("empty problem"));
    }
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(Error::domain("eigensolver tolerance must be positive"));
    }
    let k = opts.k_pairs.min(n);
    let mut block: Vec<CVector> = match start {
        Some(s) if !s.is_empty() => {
            if s.iter().any(|v| v.len() != n) {
                return Err(Error::domain("start vectors have the wrong dimension"));
            }
            s.to_vec()
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            (0..k)
                .map(|_| {
                    CVector::from_fn(n, |_, _| {
                        Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
                    })
                })
                .collect()
        }
    };
    let mut q: Vec<CVector> = Vec::new();
    let mut w: Vec<CVector> = Vec::new();
    let mut best = f64::INFINITY;
    loop {
        let mut added = 0;
        for mut v in block.drain(..) {
            if q.len() >= n {
                break;
            }
            if orthogonalize(&mut v, &q) > DEFLATION {
                q.push(v);
                added += 1;
            }
        }
        let first_new = q.len() - added;
        for v in &q[first_new..] {
            w.push(op.apply(v));
        }
        let m = q.len();
        if m == 0 {
            return Err(Error::numerical("start block is degenerate", f64::NAN));
        }
        let t = DMatrix::from_fn(m, m, |i, j| {
            let a = q[i].dotc(&w[j]);
            let b = q[j].dotc(&w[i]).conj();
            (a + b) * 0.5
        });
        let eig = t.symmetric_eigen();
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let kk = k.min(m);
        let mut worst: f64 = 0.0;
        let mut ritz = Vec::with_capacity(kk);
        for &idx in &order[..kk] {
            let theta = eig.eigenvalues[idx];
            let y = eig.eigenvectors.column(idx);
            let u = combine(&q, y);
            let hu = combine(&w, y);
            let r = (&hu - &u * Complex64::new(theta, 0.0)).norm();
            worst = worst.max(r);
            ritz.push((theta, u));
        }
        best = best.min(worst);
        let exhausted = added == 0 || q.len() >= n;
        if (worst <= opts.tol && kk == k) || exhausted {
            let mut energies = Vec::with_capacity(kk);
            let mut vectors = Vec::with_capacity(kk);
            let mut residuals = Vec::with_capacity(kk);
            for (theta, u) in ritz {
                let u = &u / Complex64::new(u.norm(), 0.0);
                let e = u.dotc(&op.apply(&u)).re;
                let r = (op.apply(&u) - &u * Complex64::new(e, 0.0)).norm();
                energies.push(e);
                vectors.push(u);
                residuals.push(r);
                let _ = theta;
            }
            let worst = residuals.iter().copied().fold(0.0, f64::max);
            if worst > opts.tol {
                return Err(Error::numerical(
                    "eigensolver residual above tolerance after the Krylov space closed",
                    worst,
                ));
            }
            return Ok(EigenPairs {
                energies,
                vectors,
                residuals,
                basis_size: q.len(),
            });
        }
        if q.len() >= opts.max_basis {
            return Err(Error::numerical("eigensolver did not converge within the basis budget", best));
        }
        block = w[first_new..].to_vec();
    }
}
