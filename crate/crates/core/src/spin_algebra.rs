//! Spin matrices, tensor-site embeddings, product states and the Hopf map.
//!
//! Conventions: the weight basis of C^{2s+1} is ordered m = s, s−1, …, −s and
//! σ_j(s) = 2 J_j, so s = ½ gives the Pauli matrices and Σ_j σ_j(s)² = 4s(s+1) I.
//! In a P-site tensor product, site 0 is the leftmost (most significant) factor.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Largest spin-space dimension the dense routines accept by default.
pub const DEFAULT_DIM_BUDGET: usize = 4096;

const NORM_TOL: f64 = 1e-12;

/// A half-integer spin s, stored as 2s.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Spin {
    twice: u32,
}

impl Spin {
    pub const HALF: Spin = Spin { twice: 1 };

    pub fn from_twice(twice: u32) -> Result<Self> {
        if twice == 0 {
            return Err(Error::domain("spin must be positive"));
        }
        Ok(Spin { twice })
    }

    pub fn new(s: f64) -> Result<Self> {
        let t = 2.0 * s;
        if !t.is_finite() || (t - t.round()).abs() > 1e-12 {
            return Err(Error::domain(format!("2s must be integer (got s = {s})")));
        }
        if t.round() < 1.0 {
            return Err(Error::domain(format!("spin must be positive (got s = {s})")));
        }
        Ok(Spin {
            twice: t.round() as u32,
        })
    }

    pub fn twice(self) -> u32 {
        self.twice
    }

    pub fn value(self) -> f64 {
        self.twice as f64 / 2.0
    }

    /// Dimension 2s+1 of the irreducible representation.
    pub fn dim(self) -> usize {
        self.twice as usize + 1
    }

    /// 4s(s+1), the eigenvalue of Σ_j σ_j(s)².
    pub fn casimir(self) -> f64 {
        let s = self.value();
        4.0 * s * (s + 1.0)
    }
}

impl fmt::Display for Spin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.twice.is_multiple_of(2) {
            write!(f, "{}", self.twice / 2)
        } else {
            write!(f, "{}/2", self.twice)
        }
    }
}

impl Serialize for Spin {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.value())
    }
}

impl<'de> Deserialize<'de> for Spin {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = f64::deserialize(deserializer)?;
        Spin::new(s).map_err(serde::de::Error::custom)
    }
}

/// The three matrices σ_j(s).
#[derive(Debug, Clone, PartialEq)]
pub struct SpinMatrices {
    pub spin: Spin,
    pub sigma: [CMatrix; 3],
}

pub fn spin_matrices(spin: Spin) -> SpinMatrices {
    let d = spin.dim();
    let s = spin.value();
    // J+ |m⟩ = sqrt(s(s+1) − m(m+1)) |m+1⟩, with index i ↔ m = s − i
    let mut raise = CMatrix::zeros(d, d);
    for i in 1..d {
        let m = s - i as f64;
        raise[(i - 1, i)] = Complex64::new((s * (s + 1.0) - m * (m + 1.0)).sqrt(), 0.0);
    }
    let lower = raise.adjoint();
    let sigma1 = &raise + &lower;
    let sigma2 = (&raise - &lower) * Complex64::new(0.0, -1.0);
    let sigma3 = CMatrix::from_fn(d, d, |i, j| {
        if i == j {
            Complex64::new(2.0 * (s - i as f64), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    SpinMatrices {
        spin,
        sigma: [sigma1, sigma2, sigma3],
    }
}

/// Layout of a P-site tensor product of C^d.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SiteLayout {
    pub sites: usize,
    pub local_dim: usize,
}

impl SiteLayout {
    pub fn new(sites: usize, local_dim: usize, budget: usize) -> Result<Self> {
        if sites == 0 {
            return Err(Error::domain("at least one site is required"));
        }
        let mut dim: usize = 1;
        for _ in 0..sites {
            dim = dim
                .checked_mul(local_dim)
                .filter(|&d| d <= budget)
                .ok_or(Error::Resource {
                    dim: local_dim.saturating_pow(sites as u32),
                    budget,
                })?;
        }
        Ok(Self { sites, local_dim })
    }

    pub fn dim(&self) -> usize {
        self.local_dim.pow(self.sites as u32)
    }

    pub fn stride(&self, site: usize) -> usize {
        self.local_dim.pow((self.sites - 1 - site) as u32)
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site >= self.sites {
            return Err(Error::domain(format!(
                "site index {site} out of range for {} sites",
                self.sites
            )));
        }
        Ok(())
    }
}

/// I ⊗ … ⊗ op ⊗ … ⊗ I with `op` in slot `site` (0-based).
pub fn embed_site_operator(op: &CMatrix, site: usize, layout: SiteLayout) -> Result<CMatrix> {
    layout.check_site(site)?;
    check_local(op, layout.local_dim)?;
    let dim = layout.dim();
    let mut out = CMatrix::zeros(dim, dim);
    accumulate_site(&mut out, Complex64::new(1.0, 0.0), op, site, layout);
    Ok(out)
}

fn check_local(op: &CMatrix, d: usize) -> Result<()> {
    if op.nrows() != d || op.ncols() != d {
        return Err(Error::domain(format!(
            "site operator is {}x{}, expected {d}x{d}",
            op.nrows(),
            op.ncols()
        )));
    }
    Ok(())
}

/// `out += coef · embed(op, site)` without forming the embedding.
pub(crate) fn accumulate_site(
    out: &mut CMatrix,
    coef: Complex64,
    op: &CMatrix,
    site: usize,
    layout: SiteLayout,
) {
    let d = layout.local_dim;
    let stride = layout.stride(site);
    for col in 0..layout.dim() {
        let c = (col / stride) % d;
        let base = col - c * stride;
        for r in 0..d {
            let v = op[(r, c)];
            if v.re != 0.0 || v.im != 0.0 {
                out[(base + r * stride, col)] += coef * v;
            }
        }
    }
}

/// `out += coef · embed(second, site_b) · embed(first, site_a)`.
pub(crate) fn accumulate_site_pair(
    out: &mut CMatrix,
    coef: Complex64,
    first: &CMatrix,
    site_a: usize,
    second: &CMatrix,
    site_b: usize,
    layout: SiteLayout,
) {
    if site_a == site_b {
        let prod = second * first;
        accumulate_site(out, coef, &prod, site_a, layout);
        return;
    }
    let d = layout.local_dim;
    let (sa, sb) = (layout.stride(site_a), layout.stride(site_b));
    for col in 0..layout.dim() {
        let ca = (col / sa) % d;
        let cb = (col / sb) % d;
        let base = col - ca * sa - cb * sb;
        for ra in 0..d {
            let va = first[(ra, ca)];
            if va.re == 0.0 && va.im == 0.0 {
                continue;
            }
            for rb in 0..d {
                let vb = second[(rb, cb)];
                if vb.re != 0.0 || vb.im != 0.0 {
                    out[(base + ra * sa + rb * sb, col)] += coef * va * vb;
                }
            }
        }
    }
}

/// Applies `op` in slot `site` to a full tensor-product vector.
pub fn apply_site(op: &CMatrix, site: usize, layout: SiteLayout, v: &CVector) -> CVector {
    let d = layout.local_dim;
    let stride = layout.stride(site);
    CVector::from_fn(layout.dim(), |i, _| {
        let r = (i / stride) % d;
        let base = i - r * stride;
        (0..d).fold(Complex64::new(0.0, 0.0), |acc, c| {
            acc + op[(r, c)] * v[base + c * stride]
        })
    })
}

/// ⟨A X, X⟩ for Hermitian A, returned as a real number.
pub(crate) fn expectation(a: &CMatrix, x: &CVector) -> f64 {
    x.dotc(&(a * x)).re
}

pub(crate) fn check_normalized(x: &CVector, what: &str) -> Result<()> {
    let n = x.norm();
    if (n - 1.0).abs() > NORM_TOL {
        return Err(Error::domain(format!("{what} must be normalized (norm {n})")));
    }
    Ok(())
}

/// (⟨σ₁(s)X,X⟩, ⟨σ₂(s)X,X⟩, ⟨σ₃(s)X,X⟩) for a normalized X ∈ C^{2s+1}.
pub fn hopf_map(x: &CVector, spin: Spin) -> Result<[f64; 3]> {
    if x.len() != spin.dim() {
        return Err(Error::domain(format!(
            "state has length {}, expected {}",
            x.len(),
            spin.dim()
        )));
    }
    check_normalized(x, "spinor")?;
    let m = spin_matrices(spin);
    Ok([
        expectation(&m.sigma[0], x),
        expectation(&m.sigma[1], x),
        expectation(&m.sigma[2], x),
    ])
}

/// Reference state X₀ = cos t |s,s⟩ + sin t |s,−s⟩ with cos 2t = 1/(2s); its
/// spin vector is (0, 0, 1).
pub fn omega_state(spin: Spin) -> CVector {
    let d = spin.dim();
    let t = 0.5 * (1.0 / spin.twice() as f64).acos();
    let mut x = CVector::zeros(d);
    x[0] += Complex64::new(t.cos(), 0.0);
    x[d - 1] += Complex64::new(t.sin(), 0.0);
    x
}

/// exp(−(i/2) Σ_j θ_j σ_j(s)), the image of an SU(2) element in C^{2s+1}.
pub fn su2_rotate(spin: Spin, theta: [f64; 3]) -> CMatrix {
    let m = spin_matrices(spin);
    let gen = &m.sigma[0] * Complex64::new(0.5 * theta[0], 0.0)
        + &m.sigma[1] * Complex64::new(0.5 * theta[1], 0.0)
        + &m.sigma[2] * Complex64::new(0.5 * theta[2], 0.0);
    let eig = gen.symmetric_eigen();
    let phases = CVector::from_iterator(
        spin.dim(),
        eig.eigenvalues.iter().map(|&l| Complex64::new(0.0, -l).exp()),
    );
    let v = &eig.eigenvectors;
    v * CMatrix::from_diagonal(&phases) * v.adjoint()
}

/// Kronecker product of vectors, first factor most significant.
pub fn kron_vectors(factors: &[CVector]) -> CVector {
    let mut out = CVector::from_element(1, Complex64::new(1.0, 0.0));
    for f in factors {
        out = out.kronecker(f);
    }
    out
}

/// A product state V⁽¹⁾ ⊗ … ⊗ V⁽ᴾ⁾ of normalized single-site spinors.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductState {
    spin: Spin,
    factors: Vec<CVector>,
    assembled: CVector,
}

impl ProductState {
    pub fn new(spin: Spin, factors: Vec<CVector>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::domain("a product state needs at least one factor"));
        }
        for (i, f) in factors.iter().enumerate() {
            if f.len() != spin.dim() {
                return Err(Error::domain(format!(
                    "factor {i} has length {}, expected {}",
                    f.len(),
                    spin.dim()
                )));
            }
            check_normalized(f, &format!("factor {i}"))?;
        }
        let assembled = kron_vectors(&factors);
        Ok(Self {
            spin,
            factors,
            assembled,
        })
    }

    pub fn spin(&self) -> Spin {
        self.spin
    }

    pub fn factors(&self) -> &[CVector] {
        &self.factors
    }

    pub fn assembled(&self) -> &CVector {
        &self.assembled
    }

    /// Per-site spin vectors S⁽λ⁾(X).
    pub fn hopf_images(&self) -> Vec<[f64; 3]> {
        self.factors
            .iter()
            .map(|f| hopf_map(f, self.spin).expect("factors are validated"))
            .collect()
    }
}
