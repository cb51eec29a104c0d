//! Photon-number-truncated Fock space over the grid oscillators, tensored
//! with the spin space, and the Hamiltonian acting on it.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::cutoff::CutoffProfile;
use crate::error::{Error, Result};
use crate::spin_algebra::{accumulate_site, spin_matrices, CMatrix, CVector};
use crate::spin_operator::SpinSystem;

use super::grid::{mode_coefficients, ModeGrid};

/// Largest total dimension (photon states × spin states) accepted.
pub const FOCK_DIM_BUDGET: usize = 4_000_000;

fn binomial(n: usize, k: usize) -> Option<usize> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > usize::MAX as u128 {
            return None;
        }
    }
    Some(acc as usize)
}

/// Occupation states with total photon number ≤ `n_max`, graded by sector.
///
/// A photon state is a sorted list of oscillator indices (oscillator
/// `2 i + a` is mode `i`, polarization `a`). Within a sector states are
/// ordered by the colex rank of `c_j + j`.
#[derive(Debug, Clone)]
pub struct TruncatedFock {
    n_oscillators: usize,
    n_max: usize,
    spin_dim: usize,
    sector_offsets: Vec<usize>,
}

impl TruncatedFock {
    pub fn new(n_oscillators: usize, n_max: usize, spin_dim: usize) -> Result<Self> {
        Self::with_budget(n_oscillators, n_max, spin_dim, FOCK_DIM_BUDGET)
    }

    pub fn with_budget(n_oscillators: usize, n_max: usize, spin_dim: usize, budget: usize) -> Result<Self> {
        let mut sector_offsets = vec![0usize];
        let mut total: usize = 0;
        let overflow = || Error::Resource {
            dim: usize::MAX,
            budget,
        };
        for n in 0..=n_max {
            let size = binomial(n_oscillators + n - 1, n).ok_or_else(overflow)?;
            let size = if n == 0 { 1 } else { size };
            total = total.checked_add(size).ok_or_else(overflow)?;
            sector_offsets.push(total);
        }
        let dim = total.checked_mul(spin_dim).ok_or_else(overflow)?;
        if dim > budget {
            return Err(Error::Resource { dim, budget });
        }
        Ok(Self {
            n_oscillators,
            n_max,
            spin_dim,
            sector_offsets,
        })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn n_oscillators(&self) -> usize {
        self.n_oscillators
    }

    pub fn spin_dim(&self) -> usize {
        self.spin_dim
    }

    /// Number of photon occupation states.
    pub fn photon_states(&self) -> usize {
        *self.sector_offsets.last().unwrap()
    }

    /// Total dimension including the spin factor.
    pub fn dim(&self) -> usize {
        self.photon_states() * self.spin_dim
    }

    /// Range of photon-state indices with exactly `n` photons.
    pub fn sector(&self, n: usize) -> std::ops::Range<usize> {
        self.sector_offsets[n]..self.sector_offsets[n + 1]
    }

    /// Photon number of a photon-state index.
    pub fn photon_number_of(&self, index: usize) -> usize {
        self.sector_offsets.partition_point(|&o| o <= index) - 1
    }

    /// Index of a sorted occupation list.
    pub fn index_of(&self, occ: &[u32]) -> usize {
        let n = occ.len();
        let rank: usize = occ
            .iter()
            .enumerate()
            .map(|(j, &c)| binomial(c as usize + j, j + 1).unwrap())
            .sum();
        self.sector_offsets[n] + rank
    }

    /// Sorted occupation list of a photon-state index.
    pub fn state(&self, index: usize) -> Vec<u32> {
        let n = self.photon_number_of(index);
        let mut rank = index - self.sector_offsets[n];
        let mut out = vec![0u32; n];
        let mut hi = self.n_oscillators + n;
        for j in (0..n).rev() {
            // largest d < hi with C(d, j+1) ≤ rank
            let (mut lo, mut up) = (j, hi);
            while up - lo > 1 {
                let mid = (lo + up) / 2;
                if binomial(mid, j + 1).unwrap() <= rank {
                    lo = mid;
                } else {
                    up = mid;
                }
            }
            rank -= binomial(lo, j + 1).unwrap();
            out[j] = (lo - j) as u32;
            hi = lo;
        }
        out
    }

    /// Ψ₀ ⊗ X.
    pub fn vacuum_tensor(&self, x: &CVector) -> Result<CVector> {
        if x.len() != self.spin_dim {
            return Err(Error::domain("spin vector has the wrong dimension"));
        }
        let mut v = CVector::zeros(self.dim());
        v.rows_mut(0, self.spin_dim).copy_from(x);
        Ok(v)
    }
}

/// H = dΓ(ω) ⊗ I + Σ_λ M⁽λ⁾ σ⁽λ⁾·Φ_S(B_{x⁽λ⁾}) restricted to a truncated space.
///
/// Stored in block form: the interaction is Σ_o (S_o a_o† + S_o† a_o) with
/// one spin matrix per oscillator, so the action on a vector only needs
/// the occupation lists.
#[derive(Debug, Clone)]
pub struct FockHamiltonian {
    space: TruncatedFock,
    frequencies: Vec<f64>,
    couplings: Vec<CMatrix>,
    couplings_adj: Vec<CMatrix>,
    photon_energy: Vec<f64>,
    states: Vec<Vec<u32>>,
}

/// Assembles H(M) on the grid with photon cutoff `n_max`.
pub fn build_hamiltonian(
    system: &SpinSystem,
    profile: &CutoffProfile,
    grid: &ModeGrid,
    n_max: usize,
) -> Result<FockHamiltonian> {
    system.validate()?;
    grid.require_symmetric()?;
    if n_max < 1 {
        return Err(Error::domain("n_max must be at least 1"));
    }
    let layout = system.layout()?;
    let ds = layout.dim();
    let space = TruncatedFock::new(grid.oscillators(), n_max, ds)?;
    let sigma = spin_matrices(system.spin).sigma;
    let n_osc = grid.oscillators();
    // v[λ][m][i] = (⟨ε_{i1},B⟩, ⟨ε_{i2},B⟩)
    let amps: Vec<Vec<Vec<[Complex64; 2]>>> = system
        .positions
        .iter()
        .map(|&x| (0..3).map(|m| mode_coefficients(profile, grid, x, m)).collect())
        .collect::<Result<_>>()?;
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let couplings: Vec<CMatrix> = (0..n_osc)
        .into_par_iter()
        .map(|o| {
            let (i, a) = (o / 2, o % 2);
            let sw = grid.modes()[i].weight.sqrt();
            let mut s = CMatrix::zeros(ds, ds);
            for (l, per_axis) in amps.iter().enumerate() {
                let ml = system.moments[l];
                if ml == 0.0 {
                    continue;
                }
                for (m, coeff) in per_axis.iter().enumerate() {
                    let c = coeff[i][a] * (ml * sw * inv_sqrt2);
                    accumulate_site(&mut s, c, &sigma[m], l, layout);
                }
            }
            s
        })
        .collect();
    let couplings_adj = couplings.iter().map(|s| s.adjoint()).collect();
    let frequencies: Vec<f64> = (0..n_osc).map(|o| grid.modes()[o / 2].frequency()).collect();
    let states: Vec<Vec<u32>> = (0..space.photon_states()).into_par_iter().map(|p| space.state(p)).collect();
    let photon_energy = states
        .iter()
        .map(|occ| occ.iter().map(|&o| frequencies[o as usize]).sum())
        .collect();
    Ok(FockHamiltonian {
        space,
        frequencies,
        couplings,
        couplings_adj,
        photon_energy,
        states,
    })
}

impl FockHamiltonian {
    pub fn space(&self) -> &TruncatedFock {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    /// Oscillator frequencies |k|.
    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    /// Spin matrix multiplying a_o† in the interaction.
    pub fn coupling(&self, oscillator: usize) -> &CMatrix {
        &self.couplings[oscillator]
    }

    /// Free photon energy of each photon state.
    pub fn photon_energies(&self) -> &[f64] {
        &self.photon_energy
    }

    pub fn occupation(&self, photon_state: usize) -> &[u32] {
        &self.states[photon_state]
    }

    /// H v.
    pub fn apply(&self, v: &CVector) -> CVector {
        self.apply_parts(v, true)
    }

    /// H_int v (the free part dropped).
    pub fn apply_interaction(&self, v: &CVector) -> CVector {
        self.apply_parts(v, false)
    }

    fn apply_parts(&self, v: &CVector, free: bool) -> CVector {
        assert_eq!(v.len(), self.dim(), "vector length does not match the Fock space");
        let ds = self.space.spin_dim;
        let n_max = self.space.n_max;
        let mut out = CVector::zeros(self.dim());
        let zero = Complex64::new(0.0, 0.0);
        out.as_mut_slice()
            .par_chunks_mut(ds)
            .enumerate()
            .for_each(|(p, block)| {
                let occ = &self.states[p];
                if free {
                    let e = self.photon_energy[p];
                    for (r, b) in block.iter_mut().enumerate() {
                        *b = v[p * ds + r] * e;
                    }
                }
                // S_o a_o†: from p − o
                let mut scratch = occ.clone();
                let mut j = 0;
                while j < occ.len() {
                    let o = occ[j];
                    let mut count = 1;
                    while j + count < occ.len() && occ[j + count] == o {
                        count += 1;
                    }
                    scratch.remove(j);
                    let q = self.space.index_of(&scratch);
                    scratch.insert(j, o);
                    let f = (count as f64).sqrt();
                    let s = &self.couplings[o as usize];
                    for (r, b) in block.iter_mut().enumerate() {
                        let mut acc = zero;
                        for c in 0..ds {
                            acc += s[(r, c)] * v[q * ds + c];
                        }
                        *b += acc * f;
                    }
                    j += count;
                }
                // S_o† a_o: from p + o
                if occ.len() < n_max {
                    let mut acc = vec![zero; ds];
                    let mut up = Vec::with_capacity(occ.len() + 1);
                    for o in 0..self.space.n_oscillators as u32 {
                        let pos = occ.partition_point(|&c| c <= o);
                        let count = pos - occ.partition_point(|&c| c < o) + 1;
                        up.clear();
                        up.extend_from_slice(&occ[..pos]);
                        up.push(o);
                        up.extend_from_slice(&occ[pos..]);
                        let q = self.space.index_of(&up);
                        let f = (count as f64).sqrt();
                        let sa = &self.couplings_adj[o as usize];
                        for (r, a) in acc.iter_mut().enumerate() {
                            let mut t = zero;
                            for c in 0..ds {
                                t += sa[(r, c)] * v[q * ds + c];
                            }
                            *a += t * f;
                        }
                    }
                    for (b, a) in block.iter_mut().zip(acc) {
                        *b += a;
                    }
                }
            });
        out
    }

    /// Dense matrix, for small spaces only.
    pub fn to_dense(&self) -> Result<CMatrix> {
        let n = self.dim();
        if n > 4096 {
            return Err(Error::Resource { dim: n, budget: 4096 });
        }
        let mut m = CMatrix::zeros(n, n);
        for j in 0..n {
            let mut e = CVector::zeros(n);
            e[j] = Complex64::new(1.0, 0.0);
            m.set_column(j, &self.apply(&e));
        }
        Ok(m)
    }
}

/// ⟨(N ⊗ I) U, U⟩ for a normalized state U.
pub fn photon_number(space: &TruncatedFock, u: &CVector) -> Result<f64> {
    if u.len() != space.dim() {
        return Err(Error::domain("state has the wrong dimension"));
    }
    let n = u.norm();
    if (n - 1.0).abs() > 1e-10 {
        return Err(Error::domain(format!("state must be normalized (norm {n})")));
    }
    let ds = space.spin_dim;
    let mut total = 0.0;
    for sector in 1..=space.n_max {
        let r = space.sector(sector);
        let w: f64 = u.rows(r.start * ds, r.len() * ds).norm_squared();
        total += sector as f64 * w;
    }
    Ok(total)
}
