//! The verification suites behind each subcommand.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::error::{Error, Result};
use crate::field_energy::{
    classical_decomposition_check, field_energy, ClassicalCurrent, FourierCurrent, VectorCurrent,
};
use crate::fock::{build_mode_grid, multiplicity_scan, quadratic_fit, EigenOptions};
use crate::kernel::{a11_origin, kernel_matrix, kernel_oracle_3d, KernelCache};
use crate::spin_algebra::{CVector, ProductState};
use crate::spin_operator::{
    assemble_am_cached, ground_eigenspace, max_abs, product_state_minimum, quadratic_form, random_unit,
};

use super::config::RunConfig;
use super::output::{fmt_num, CheckRow, Table};

/// Nodes per axis for the brute-force kernel comparison.
pub const KERNEL_ORACLE_NODES: usize = 160;

/// Random states drawn by `verify`.
pub const VERIFY_SAMPLES: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub enum Suite {
    Kernel { at: [f64; 3] },
    E2,
    Verify,
    Classical { orientations: Vec<[f64; 3]> },
    FockFit { scales: Vec<f64> },
    Multiplicity { g: Vec<f64> },
}

impl Suite {
    pub fn name(&self) -> &'static str {
        match self {
            Suite::Kernel { .. } => "kernel",
            Suite::E2 => "e2",
            Suite::Verify => "verify",
            Suite::Classical { .. } => "classical",
            Suite::FockFit { .. } => "fock-fit",
            Suite::Multiplicity { .. } => "multiplicity",
        }
    }

    fn arguments(&self) -> serde_json::Value {
        match self {
            Suite::Kernel { at } => json!({ "at": at }),
            Suite::Classical { orientations } => json!({ "orientations": orientations }),
            Suite::FockFit { scales } => json!({ "scales": scales }),
            Suite::Multiplicity { g } => json!({ "g": g }),
            _ => json!({}),
        }
    }
}

/// What a suite produced.
#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub checks: Vec<CheckRow>,
    /// (file name, contents)
    pub files: Vec<(String, String)>,
    /// Extra values recorded in the manifest.
    pub details: serde_json::Value,
    pub arguments: serde_json::Value,
    /// Lines printed before the check summary.
    pub messages: Vec<String>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

pub fn run_suite(config: &RunConfig, suite: &Suite, seed: u64) -> Result<SuiteReport> {
    let mut report = match suite {
        Suite::Kernel { at } => kernel_suite(config, *at),
        Suite::E2 => e2_suite(config, seed),
        Suite::Verify => verify_suite(config, seed),
        Suite::Classical { orientations } => classical_suite(config, orientations),
        Suite::FockFit { scales } => fock_fit_suite(config, scales, seed),
        Suite::Multiplicity { g } => multiplicity_suite(config, g, seed),
    }?;
    report.arguments = suite.arguments();
    Ok(report)
}

fn empty() -> SuiteReport {
    SuiteReport {
        checks: Vec::new(),
        files: Vec::new(),
        details: json!({}),
        arguments: json!({}),
        messages: Vec::new(),
    }
}

fn kernel_suite(config: &RunConfig, at: [f64; 3]) -> Result<SuiteReport> {
    let profile = config.profile()?;
    let x = config.point(at);
    let k = kernel_matrix(&profile, x)?;
    let mut asym: f64 = 0.0;
    for j in 0..3 {
        for m in 0..3 {
            asym = asym.max((k.entries[j][m] - k.entries[m][j]).abs());
        }
    }
    let oracle = kernel_oracle_3d(&profile, x, KERNEL_ORACLE_NODES)?;
    let body = json!({ "at": x, "matrix": k.entries });
    let text = serde_json::to_string_pretty(&body).expect("json") + "\n";
    let mut r = empty();
    r.messages.push(text.trim_end().to_string());
    r.files.push(("kernel.json".into(), text));
    r.checks.push(CheckRow::new("kernel_symmetry", asym, 0.0, asym, config.tolerance("kernel_symmetry")));
    r.checks.push(CheckRow::new(
        "kernel_oracle",
        k.trace(),
        oracle.trace(),
        k.max_abs_diff(&oracle),
        config.tolerance("kernel_oracle"),
    ));
    r.details = json!({ "oracle_nodes": KERNEL_ORACLE_NODES });
    Ok(r)
}

fn pairs(v: &CVector) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

fn e2_suite(config: &RunConfig, seed: u64) -> Result<SuiteReport> {
    let profile = config.profile()?;
    let system = config.system()?;
    let a = assemble_am_cached(&system, &KernelCache::new(profile))?;
    let g = ground_eigenspace(&a, config.tolerance("degeneracy"))?;
    let (product_min, _) = product_state_minimum(&a, system.spin, system.len(), 8, seed)?;
    let top = *g.eigenvalues.last().expect("nonempty spectrum");
    let scale = g.lambda_min.abs().max(f64::MIN_POSITIVE);
    let mut r = empty();
    r.messages.push(format!("lambda_min = {}", fmt_num(g.lambda_min)));
    r.messages.push(format!("multiplicity = {}", g.multiplicity));
    r.messages.push(format!("product_state_minimum = {}", fmt_num(product_min)));
    r.checks.push(CheckRow::new("nsd", top, 0.0, top.max(0.0), config.tolerance("nsd") * scale));
    if system.len() == 1 {
        let s = system.spin.value();
        let expect = -2.0 * s * (s + 1.0) * a11_origin(&profile)? * system.moments[0].powi(2);
        r.checks.push(CheckRow::equal(
            "single_spin_closed_form",
            g.lambda_min,
            expect,
            config.tolerance("closed_form") * expect.abs().max(f64::MIN_POSITIVE),
        ));
        let d = system.spin.dim() as f64;
        r.checks.push(CheckRow::equal("single_spin_multiplicity", g.multiplicity as f64, d, 0.0));
    }
    let mut spectrum = Table::new(&["index", "eigenvalue"]);
    for (i, e) in g.eigenvalues.iter().enumerate() {
        spectrum.push(vec![i.to_string(), fmt_num(*e)]);
    }
    r.files.push(("e2_spectrum.csv".into(), spectrum.to_csv()));
    let mut body = json!({
        "lambda_min": g.lambda_min,
        "multiplicity": g.multiplicity,
        "eigenvalues": g.eigenvalues,
        "product_state_minimum": product_min,
    });
    if config.output.eigenbasis {
        body["eigenbasis"] = json!(g.basis.iter().map(pairs).collect::<Vec<_>>());
        body["matrix_column_major"] = json!(a.to_column_major_pairs());
    }
    r.files.push(("e2.json".into(), serde_json::to_string_pretty(&body).expect("json") + "\n"));
    r.details = json!({ "product_state_restarts": 8 });
    Ok(r)
}

fn verify_suite(config: &RunConfig, seed: u64) -> Result<SuiteReport> {
    let profile = config.profile()?;
    let system = config.system()?;
    let cache = KernelCache::new(profile);
    let a = assemble_am_cached(&system, &cache)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut r = empty();
    let ev = a.eigenvalues();
    let scale = ev[0].abs().max(f64::MIN_POSITIVE);
    let top = *ev.last().expect("nonempty");
    r.checks.push(CheckRow::new("nsd", top, 0.0, top.max(0.0), config.tolerance("nsd") * scale));
    let c = 1.7;
    let scaled = assemble_am_cached(&system.scaled(c), &cache)?;
    let dev = max_abs(&(&scaled.matrix - &a.matrix * num_complex::Complex64::new(c * c, 0.0)));
    r.checks.push(CheckRow::new(
        "moment_scaling",
        max_abs(&scaled.matrix),
        c * c * max_abs(&a.matrix),
        dev,
        config.tolerance("scaling") * max_abs(&scaled.matrix).max(f64::MIN_POSITIVE),
    ));
    let tol = config.tolerance("field_identity");
    for i in 0..VERIFY_SAMPLES {
        let x = random_unit(&mut rng, system.dim());
        let q = quadratic_form(&a, &x)?;
        let e = field_energy(&FourierCurrent::Vector(VectorCurrent::new(&system, &profile, &x)?))?;
        r.checks.push(CheckRow::equal(format!("field_identity_{i}"), q, -e, tol * q.abs().max(1.0)));
    }
    let tol = config.tolerance("decomposition");
    for i in 0..VERIFY_SAMPLES {
        let factors = (0..system.len()).map(|_| random_unit(&mut rng, system.spin.dim())).collect();
        let state = ProductState::new(system.spin, factors)?;
        let d = classical_decomposition_check(&system, &profile, &state)?;
        r.checks.push(CheckRow::new(format!("decomposition_{i}"), d.lhs, d.rhs, d.residual, tol));
    }
    Ok(r)
}

fn classical_suite(config: &RunConfig, orientations: &[[f64; 3]]) -> Result<SuiteReport> {
    let profile = config.profile()?;
    let system = config.system()?;
    if orientations.len() != system.len() {
        return Err(Error::domain(format!(
            "{} orientations for {} particles",
            orientations.len(),
            system.len()
        )));
    }
    let current = FourierCurrent::Classical(ClassicalCurrent::new(&system, &profile, orientations)?);
    let field = field_energy(&current)?;
    // ½ Σ M⁽λ⁾M⁽μ⁾ S⁽λ⁾·A(x⁽λ⁾ − x⁽μ⁾) S⁽μ⁾
    let cache = KernelCache::new(profile);
    let mut direct = 0.0;
    for (l, (xl, sl)) in system.positions.iter().zip(orientations).enumerate() {
        for (m, (xm, sm)) in system.positions.iter().zip(orientations).enumerate() {
            let k = cache.get([xl[0] - xm[0], xl[1] - xm[1], xl[2] - xm[2]])?;
            let s: f64 = k
                .entries
                .iter()
                .zip(sl)
                .map(|(row, a)| a * row.iter().zip(sm).map(|(e, b)| e * b).sum::<f64>())
                .sum();
            direct += 0.5 * system.moments[l] * system.moments[m] * s;
        }
    }
    let mut r = empty();
    r.messages.push(format!("field_energy = {}", fmt_num(field)));
    let mut t = Table::new(&["quantity", "value"]);
    t.push(vec!["field_energy".into(), fmt_num(field)]);
    t.push(vec!["kernel_energy".into(), fmt_num(direct)]);
    r.files.push(("classical.csv".into(), t.to_csv()));
    r.checks.push(CheckRow::equal(
        "classical_energy",
        field,
        direct,
        config.tolerance("field_identity") * direct.abs().max(1.0),
    ));
    Ok(r)
}

fn eigen_options(config: &RunConfig, seed: u64) -> Result<EigenOptions> {
    Ok(EigenOptions {
        tol: config.tolerance("eigensolver"),
        k_pairs: config.system()?.dim(),
        seed,
        ..EigenOptions::default()
    })
}

fn fock_fit_suite(config: &RunConfig, scales: &[f64], seed: u64) -> Result<SuiteReport> {
    let profile = config.profile()?;
    let system = config.system()?;
    let g = config.grids;
    let grid = build_mode_grid(&profile, g.n_radial, g.n_angular)?;
    let opts = eigen_options(config, seed)?;
    let fit = quadratic_fit(&system, &profile, &grid, g.n_max, scales, &opts)?;
    let mut t = Table::new(&["t", "energy", "photon_number", "remainder", "eig_residual"]);
    for p in &fit.points {
        t.push_numbers(&[p.t, p.energy, p.photon_number, p.remainder, p.eig_residual]);
    }
    let mut r = empty();
    r.messages.push(format!("c2 = {}  reference = {}", fmt_num(fit.c2), fmt_num(fit.reference)));
    if fit.tolerance_limited {
        r.messages.push("remainders are tolerance-limited".into());
    }
    r.files.push(("fock_fit.csv".into(), t.to_csv()));
    r.checks.push(CheckRow::new(
        "fit_coefficient",
        fit.c2,
        fit.reference,
        fit.relative_error,
        config.tolerance("fit_relative"),
    ));
    r.checks.push(CheckRow::at_least("remainder_slope", fit.residual_slope, config.tolerance("fit_slope_min")));
    r.checks.push(CheckRow::equal("photon_slope", fit.photon_slope, 2.0, config.tolerance("photon_slope")));
    r.details = json!({
        "c3": fit.c3,
        "tolerance_limited": fit.tolerance_limited,
        "modes": grid.len(),
        "eigensolver": opts,
    });
    Ok(r)
}

fn multiplicity_suite(config: &RunConfig, gs: &[f64], seed: u64) -> Result<SuiteReport> {
    let profile = config.profile()?;
    let system = config.system()?;
    let g = config.grids;
    let grid = build_mode_grid(&profile, g.n_radial, g.n_angular)?;
    let opts = eigen_options(config, seed)?;
    let rows = multiplicity_scan(&system, &profile, &grid, g.n_max, gs, config.tolerance("degeneracy"), &opts)?;
    let mut t = Table::new(&["g", "h_multiplicity", "a1_multiplicity", "min_overlap", "e0", "e1"]);
    let mut r = empty();
    for row in &rows {
        t.push(vec![
            fmt_num(row.g),
            row.h_multiplicity.to_string(),
            row.a1_multiplicity.to_string(),
            fmt_num(row.min_overlap()),
            fmt_num(row.energies[0]),
            row.energies.get(1).map_or_else(String::new, |&e| fmt_num(e)),
        ]);
        r.checks.push(CheckRow::new(
            format!("multiplicity_bound_g={}", fmt_num(row.g)),
            row.h_multiplicity as f64,
            row.a1_multiplicity as f64,
            (row.h_multiplicity as f64 - row.a1_multiplicity as f64).max(0.0),
            0.0,
        ));
    }
    let smallest = rows
        .iter()
        .min_by(|a, b| a.g.total_cmp(&b.g))
        .expect("at least one coupling");
    r.checks.push(CheckRow::at_least(
        format!("ground_overlap_g={}", fmt_num(smallest.g)),
        smallest.min_overlap(),
        config.tolerance("overlap_min"),
    ));
    r.files.push(("multiplicity.csv".into(), t.to_csv()));
    r.details = json!({ "modes": grid.len(), "eigensolver": opts });
    Ok(r)
}
