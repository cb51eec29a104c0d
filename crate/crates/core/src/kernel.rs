//! Smeared transverse delta-function kernel.
//!
//! A_jm(x) = (2π)^{-3} ∫ |φ(|k|)|² e^{-ik·x} (δ_jm − k̂_j k̂_m) dk
//!
//! Averaging over directions of k reduces the kernel to
//! A(x) = a(|x|) I + b(|x|) x̂x̂ᵀ with
//!
//! a(r) = (2π²)^{-1} ∫ |φ|² k² (⅔ j₀(kr) − ⅓ j₂(kr)) dk,
//! b(r) = (2π²)^{-1} ∫ |φ|² k² j₂(kr) dk.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::Serialize;

use crate::cutoff::{norm3, CutoffProfile};
use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre_on, integrate_adaptive, AdaptiveOptions};
use crate::special::{j0, j2};

/// A_jm evaluated at one displacement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelMatrix {
    pub entries: [[f64; 3]; 3],
    pub displacement: [f64; 3],
}

impl KernelMatrix {
    pub fn get(&self, j: usize, m: usize) -> f64 {
        self.entries[j][m]
    }

    pub fn trace(&self) -> f64 {
        self.entries[0][0] + self.entries[1][1] + self.entries[2][2]
    }

    pub fn max_abs_diff(&self, other: &KernelMatrix) -> f64 {
        let mut d: f64 = 0.0;
        for j in 0..3 {
            for m in 0..3 {
                d = d.max((self.entries[j][m] - other.entries[j][m]).abs());
            }
        }
        d
    }
}

fn kernel_options(profile: &CutoffProfile) -> AdaptiveOptions {
    AdaptiveOptions {
        abs_tol: 1e-14 * profile.lambda.powi(3),
        rel_tol: 1e-12,
        max_intervals: 4000,
    }
}

/// The radial coefficients (a(r), b(r)) of the kernel.
pub fn radial_coefficients(profile: &CutoffProfile, r: f64) -> Result<(f64, f64)> {
    let upper = profile.r_far_squared();
    let weight = |k: f64| {
        let p = profile.phi_unchecked(k);
        p * p * k * k
    };
    let norm = 1.0 / (2.0 * PI * PI);
    if r == 0.0 {
        let q = integrate_adaptive(weight, 0.0, upper, kernel_options(profile))?;
        return Ok((norm * q.value * 2.0 / 3.0, 0.0));
    }
    let a = integrate_adaptive(
        |k| weight(k) * (2.0 / 3.0 * j0(k * r) - j2(k * r) / 3.0),
        0.0,
        upper,
        kernel_options(profile),
    )?;
    let b = integrate_adaptive(|k| weight(k) * j2(k * r), 0.0, upper, kernel_options(profile))?;
    Ok((norm * a.value, norm * b.value))
}

/// A_jm(x) through the radial decomposition.
pub fn kernel_matrix(profile: &CutoffProfile, x: [f64; 3]) -> Result<KernelMatrix> {
    let r = norm3(x);
    let (a, b) = radial_coefficients(profile, r)?;
    let mut entries = [[0.0; 3]; 3];
    for (j, row) in entries.iter_mut().enumerate() {
        row[j] = a;
        if r > 0.0 {
            for (m, e) in row.iter_mut().enumerate() {
                *e += b * x[j] * x[m] / (r * r);
            }
        }
    }
    Ok(KernelMatrix {
        entries,
        displacement: x,
    })
}

/// A_11(0) = (3π²)^{-1} ∫₀^∞ |φ(r)|² r² dr.
pub fn a11_origin(profile: &CutoffProfile) -> Result<f64> {
    let q = integrate_adaptive(
        |k| {
            let p = profile.phi_unchecked(k);
            p * p * k * k
        },
        0.0,
        profile.r_far_squared(),
        kernel_options(profile),
    )?;
    Ok(q.value / (3.0 * PI * PI))
}

/// Memoizing kernel evaluator for one cutoff profile.
///
/// The cache is keyed on the bit pattern of the displacement and is safe to
/// share between threads.
#[derive(Debug)]
pub struct KernelCache {
    profile: CutoffProfile,
    entries: Mutex<HashMap<[u64; 3], KernelMatrix>>,
}

impl KernelCache {
    pub fn new(profile: CutoffProfile) -> Self {
        Self {
            profile,
            entries: Mutex::new(HashMap::new()),
        }
    }

    pub fn profile(&self) -> &CutoffProfile {
        &self.profile
    }

    pub fn get(&self, x: [f64; 3]) -> Result<KernelMatrix> {
        // -0.0 and 0.0 are the same displacement
        let key = x.map(|v| if v == 0.0 { 0u64 } else { v.to_bits() });
        if let Some(k) = self.entries.lock().expect("kernel cache poisoned").get(&key) {
            return Ok(*k);
        }
        let k = kernel_matrix(&self.profile, x)?;
        self.entries
            .lock()
            .expect("kernel cache poisoned")
            .insert(key, k);
        Ok(k)
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("kernel cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Real and imaginary parts of the brute-force kernel quadrature.
#[derive(Debug, Clone, Copy)]
pub struct OracleSums {
    pub real: KernelMatrix,
    pub imag: [[f64; 3]; 3],
}

/// Nodes and weights of the one-dimensional rule used by the brute-force
/// oracle on `[-L, L]`: composite Gauss–Legendre with panels graded
/// geometrically toward the origin, mirrored so the node set is sign
/// symmetric.
pub fn oracle_axis_rule(profile: &CutoffProfile, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n < 8 || !n.is_multiple_of(2) {
        return Err(Error::domain(format!("oracle needs an even node count >= 8, got {n}")));
    }
    let half = n / 2;
    let per_panel = 8.min(half);
    let panels = (half / per_panel).max(1);
    let extent = profile.r_far_squared();
    let ratio: f64 = 0.3;
    // panel edges: 0, L r^{p-1}, ..., L r, L
    let mut edges = vec![0.0];
    for p in (0..panels).rev() {
        edges.push(extent * ratio.powi(p as i32));
    }
    let mut pos_x = Vec::with_capacity(half);
    let mut pos_w = Vec::with_capacity(half);
    for (i, pair) in edges.windows(2).enumerate() {
        let count = if i + 1 == panels {
            half - per_panel * (panels - 1)
        } else {
            per_panel
        };
        let (x, w) = gauss_legendre_on(count, pair[0], pair[1]);
        pos_x.extend(x);
        pos_w.extend(w);
    }
    let mut xs: Vec<f64> = pos_x.iter().rev().map(|v| -v).collect();
    let mut ws: Vec<f64> = pos_w.iter().rev().copied().collect();
    xs.extend(pos_x);
    ws.extend(pos_w);
    Ok((xs, ws))
}

/// Raw tensor-product sums of the defining three-dimensional integral, with
/// no use of radial symmetry. Intended as an independent test oracle.
pub fn kernel_oracle_sums(profile: &CutoffProfile, x: [f64; 3], n: usize) -> Result<OracleSums> {
    let (nodes, weights) = oracle_axis_rule(profile, n)?;
    let slabs: Vec<([f64; 6], [f64; 6])> = (0..nodes.len())
        .into_par_iter()
        .map(|a| {
            let mut re = [0.0; 6];
            let mut im = [0.0; 6];
            let k1 = nodes[a];
            for (b, &k2) in nodes.iter().enumerate() {
                for (c, &k3) in nodes.iter().enumerate() {
                    let k2sum = k1 * k1 + k2 * k2 + k3 * k3;
                    let p = profile.phi_unchecked(k2sum.sqrt());
                    let w = weights[a] * weights[b] * weights[c] * p * p;
                    let (s, co) = (-(k1 * x[0] + k2 * x[1] + k3 * x[2])).sin_cos();
                    let proj = [
                        1.0 - k1 * k1 / k2sum,
                        1.0 - k2 * k2 / k2sum,
                        1.0 - k3 * k3 / k2sum,
                        -k1 * k2 / k2sum,
                        -k1 * k3 / k2sum,
                        -k2 * k3 / k2sum,
                    ];
                    for t in 0..6 {
                        re[t] += w * co * proj[t];
                        im[t] += w * s * proj[t];
                    }
                }
            }
            (re, im)
        })
        .collect();
    let mut re = [0.0; 6];
    let mut im = [0.0; 6];
    for (r, i) in &slabs {
        for t in 0..6 {
            re[t] += r[t];
            im[t] += i[t];
        }
    }
    let norm = (2.0 * PI).powi(-3);
    let to_matrix = |v: [f64; 6]| {
        [
            [norm * v[0], norm * v[3], norm * v[4]],
            [norm * v[3], norm * v[1], norm * v[5]],
            [norm * v[4], norm * v[5], norm * v[2]],
        ]
    };
    Ok(OracleSums {
        real: KernelMatrix {
            entries: to_matrix(re),
            displacement: x,
        },
        imag: to_matrix(im),
    })
}

/// Brute-force evaluation of A_jm(x) on `n` nodes per axis.
pub fn kernel_oracle_3d(profile: &CutoffProfile, x: [f64; 3], n: usize) -> Result<KernelMatrix> {
    Ok(kernel_oracle_sums(profile, x, n)?.real)
}
