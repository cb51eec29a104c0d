//! Acceptance run: one line per criterion, nonzero exit if any fails.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spinqed::field_energy::{classical_decomposition_check, field_energy, self_energy_factor, FourierCurrent, VectorCurrent};
use spinqed::fock::{
    build_mode_grid, multiplicity_scan, quadratic_fit, variational_trial_check, EigenOptions,
    QuadraticFit, DEFAULT_N_ANGULAR, DEFAULT_N_RADIAL,
};
use spinqed::kernel::{a11_origin, kernel_matrix, kernel_oracle_3d};
use spinqed::spin_algebra::{hopf_map, omega_state, spin_matrices, su2_rotate, CMatrix, ProductState};
use spinqed::spin_operator::{assemble_am, ground_eigenspace, quadratic_form, random_unit, DEFAULT_DEGENERACY_TOL, NSD_TOL};
use spinqed::{CutoffProfile, Spin, SpinSystem};

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn unit() -> CutoffProfile {
    CutoffProfile::gaussian(1.0).unwrap()
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_point<R: Rng>(rng: &mut R, radius: f64) -> [f64; 3] {
    loop {
        let p = [
            rng.random_range(-radius..radius),
            rng.random_range(-radius..radius),
            rng.random_range(-radius..radius),
        ];
        if p.iter().map(|v| v * v).sum::<f64>() <= radius * radius {
            return p;
        }
    }
}

fn random_system<R: Rng>(rng: &mut R, spin: Spin, p: usize) -> SpinSystem {
    let positions = (0..p).map(|_| random_point(rng, 1.5)).collect();
    let moments = (0..p).map(|_| rng.random_range(-1.5..1.5)).collect();
    SpinSystem::new(spin, positions, moments).unwrap()
}

fn kernel_oracle() -> Outcome {
    let t0 = Instant::now();
    let p = unit();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let x = random_point(&mut rng, 5.0);
        let k = kernel_matrix(&p, x).map_err(|e| e.to_string())?;
        let o = kernel_oracle_3d(&p, x, spinqed::cli::KERNEL_ORACLE_NODES).map_err(|e| e.to_string())?;
        worst = worst.max(k.max_abs_diff(&o));
    }
    let secs = t0.elapsed().as_secs_f64();
    verdict(worst <= 1e-6 && secs <= 60.0, format!("max |A - A_oracle| = {worst:.3e}, {secs:.1}s"))
}

fn a11_closed_form() -> Outcome {
    let p = unit();
    let a = a11_origin(&p).map_err(|e| e.to_string())?;
    let exact = 1.0 / (12.0 * PI.powf(1.5));
    let rel = (a - exact).abs() / exact;
    let oracle = kernel_oracle_3d(&p, [0.0; 3], 96).map_err(|e| e.to_string())?.get(0, 0);
    let orel = (oracle - exact).abs() / exact;
    verdict(
        rel <= 1e-6 && orel <= 1e-6,
        format!("A11(0) = {a:.9e}, rel err {rel:.2e}; oracle rel err {orel:.2e}"),
    )
}

fn casimir_commutators() -> Outcome {
    let mut worst: f64 = 0.0;
    for twice in 1..=5 {
        let spin = Spin::from_twice(twice).unwrap();
        let [s1, s2, s3] = spin_matrices(spin).sigma;
        let d = spin.dim();
        let s = spin.value();
        let cas = &s1 * &s1 + &s2 * &s2 + &s3 * &s3 - CMatrix::identity(d, d) * Complex64::new(4.0 * s * (s + 1.0), 0.0);
        worst = worst.max(max_abs(&cas));
        let i2 = Complex64::new(0.0, 2.0);
        for (a, b, c) in [(&s1, &s2, &s3), (&s2, &s3, &s1), (&s3, &s1, &s2)] {
            worst = worst.max(max_abs(&(a * b - b * a - c * i2)));
        }
    }
    verdict(worst <= 1e-13, format!("max deviation {worst:.2e} over s = 1/2..5/2"))
}

fn hopf_sphere() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst: f64 = 0.0;
    for twice in 1..=5 {
        let spin = Spin::from_twice(twice).unwrap();
        let x0 = omega_state(spin);
        for _ in 0..100 {
            let theta = [
                rng.random_range(-2.0 * PI..2.0 * PI),
                rng.random_range(-2.0 * PI..2.0 * PI),
                rng.random_range(-2.0 * PI..2.0 * PI),
            ];
            let x = su2_rotate(spin, theta) * &x0;
            let h = hopf_map(&x, spin).map_err(|e| e.to_string())?;
            let n = (h[0] * h[0] + h[1] * h[1] + h[2] * h[2]).sqrt();
            worst = worst.max((n - 1.0).abs());
        }
    }
    verdict(worst <= 1e-10, format!("max | |S| - 1 | = {worst:.2e} over 500 rotations"))
}

fn field_identity() -> Outcome {
    let t0 = Instant::now();
    let p = unit();
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let sys = random_system(&mut rng, Spin::HALF, 1 + i % 3);
        let x = random_unit(&mut rng, sys.dim());
        let a = assemble_am(&sys, &p).map_err(|e| e.to_string())?;
        let q = quadratic_form(&a, &x).map_err(|e| e.to_string())?;
        let cur = FourierCurrent::Vector(VectorCurrent::new(&sys, &p, &x).map_err(|e| e.to_string())?);
        let e = field_energy(&cur).map_err(|e| e.to_string())?;
        worst = worst.max((q + e).abs() / q.abs().max(1.0));
    }
    let secs = t0.elapsed().as_secs_f64();
    verdict(worst <= 1e-6 && secs <= 300.0, format!("max scaled |<A X,X> + E| = {worst:.2e}, {secs:.1}s"))
}

fn classical_decomposition() -> Outcome {
    let p = unit();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut worst: f64 = 0.0;
    for twice in 1..=3 {
        let spin = Spin::from_twice(twice).unwrap();
        for n in 1..=3 {
            let sys = random_system(&mut rng, spin, n);
            // factors on the orbit of the reference state
            let factors = (0..n)
                .map(|_| {
                    let theta = [rng.random_range(-PI..PI), rng.random_range(-PI..PI), rng.random_range(-PI..PI)];
                    su2_rotate(spin, theta) * omega_state(spin)
                })
                .collect();
            let state = ProductState::new(spin, factors).map_err(|e| e.to_string())?;
            let d = classical_decomposition_check(&sys, &p, &state).map_err(|e| e.to_string())?;
            worst = worst.max(d.residual);
        }
    }
    let c_half = self_energy_factor(Spin::HALF);
    let c_one = self_energy_factor(Spin::from_twice(2).unwrap());
    verdict(
        worst <= 1e-6 && c_half == 1.0 && c_one == 3.5,
        format!("max residual {worst:.2e}; C(1/2) = {c_half}, C(1) = {c_one}"),
    )
}

fn nsd_scaling_single() -> Outcome {
    let p = unit();
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut worst_top: f64 = f64::NEG_INFINITY;
    let mut worst_scale: f64 = 0.0;
    for i in 0..10 {
        let sys = random_system(&mut rng, Spin::HALF, 1 + i % 3);
        let a = assemble_am(&sys, &p).map_err(|e| e.to_string())?;
        let ev = a.eigenvalues();
        worst_top = worst_top.max(ev.last().unwrap() / ev[0].abs().max(1e-300));
        let c = rng.random_range(0.2..3.0);
        let b = assemble_am(&sys.scaled(c), &p).map_err(|e| e.to_string())?;
        let dev = max_abs(&(&b.matrix - &a.matrix * Complex64::new(c * c, 0.0))) / max_abs(&b.matrix).max(1e-300);
        worst_scale = worst_scale.max(dev);
    }
    let m = 1.3;
    let sys = SpinSystem::new(Spin::HALF, vec![[0.4, -0.1, 0.2]], vec![m]).unwrap();
    let a = assemble_am(&sys, &p).map_err(|e| e.to_string())?;
    let expect = -1.5 * a11_origin(&p).unwrap() * m * m;
    let dev = max_abs(&(&a.matrix - CMatrix::identity(2, 2) * Complex64::new(expect, 0.0)));
    let g = ground_eigenspace(&a, DEFAULT_DEGENERACY_TOL).map_err(|e| e.to_string())?;
    verdict(
        worst_top <= NSD_TOL && worst_scale <= 1e-12 && dev <= 1e-12 * expect.abs() && g.multiplicity == 2,
        format!(
            "max lambda_max/|lambda_min| = {worst_top:.2e}, scaling dev {worst_scale:.2e}, single-spin dev {dev:.2e}, multiplicity {}",
            g.multiplicity
        ),
    )
}

fn variational() -> Outcome {
    let p = unit();
    let grid = build_mode_grid(&p, 4, 6).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut worst: f64 = 0.0;
    let mut bound_ok = true;
    for i in 0..20 {
        let sys = random_system(&mut rng, Spin::HALF, 1 + i % 2);
        let x = random_unit(&mut rng, sys.dim());
        let c = variational_trial_check(&sys, &p, &grid, 2, &x).map_err(|e| e.to_string())?;
        worst = worst.max(c.residual);
        bound_ok &= c.trial_norm <= c.k_constant * sys.moment_norm() * (1.0 + 1e-12);
    }
    verdict(worst <= 1e-10 && bound_ok, format!("max residual {worst:.2e}; trial-state bound holds: {bound_ok}"))
}

fn fit_system() -> SpinSystem {
    SpinSystem::new(Spin::HALF, vec![[0.0; 3], [0.7, 0.2, -0.4]], vec![1.0, 0.8]).unwrap()
}

fn run_fit() -> Result<(QuadraticFit, f64), String> {
    let t0 = Instant::now();
    let p = unit();
    let grid = build_mode_grid(&p, DEFAULT_N_RADIAL, DEFAULT_N_ANGULAR).map_err(|e| e.to_string())?;
    let sys = fit_system();
    let opts = EigenOptions { k_pairs: sys.dim(), ..EigenOptions::default() };
    let fit = quadratic_fit(&sys, &p, &grid, 1, &[0.4, 0.2, 0.1, 0.05], &opts).map_err(|e| e.to_string())?;
    Ok((fit, t0.elapsed().as_secs_f64()))
}

fn quadratic(fit: &Result<(QuadraticFit, f64), String>) -> Outcome {
    let (fit, secs) = fit.as_ref().map_err(|e| e.clone())?;
    verdict(
        fit.relative_error <= 0.02 && fit.residual_slope >= 2.7 && *secs <= 600.0,
        format!(
            "c2 = {:.6e} vs {:.6e} (rel {:.2e}), remainder slope {:.3}, {secs:.1}s",
            fit.c2, fit.reference, fit.relative_error, fit.residual_slope
        ),
    )
}

fn photon_scaling(fit: &Result<(QuadraticFit, f64), String>) -> Outcome {
    let (fit, _) = fit.as_ref().map_err(|e| e.clone())?;
    verdict((fit.photon_slope - 2.0).abs() <= 0.1, format!("<N> exponent {:.4}", fit.photon_slope))
}

fn multiplicity() -> Outcome {
    let p = unit();
    let grid = build_mode_grid(&p, DEFAULT_N_RADIAL, DEFAULT_N_ANGULAR).map_err(|e| e.to_string())?;
    let gs = [0.4, 0.2, 0.1];
    let opts = EigenOptions::default();
    let mut detail = Vec::new();
    let mut ok = true;
    let single = SpinSystem::new(Spin::HALF, vec![[0.0; 3]], vec![1.0]).unwrap();
    let pair = SpinSystem::new(Spin::HALF, vec![[0.0; 3], [0.6, 0.3, -0.2]], vec![1.0, 1.0]).unwrap();
    for (label, sys) in [("P=1", &single), ("P=2", &pair)] {
        let rows = multiplicity_scan(sys, &p, &grid, 1, &gs, DEFAULT_DEGENERACY_TOL, &opts).map_err(|e| e.to_string())?;
        let bound = rows.iter().all(|r| r.bound_holds());
        let last = rows.last().unwrap();
        ok &= bound && last.min_overlap() >= 0.99;
        if label == "P=1" {
            ok &= rows.iter().all(|r| r.h_multiplicity == 2);
        }
        let mults: Vec<String> = rows.iter().map(|r| format!("{}<={}", r.h_multiplicity, r.a1_multiplicity)).collect();
        detail.push(format!("{label}: [{}], overlap at g={} {:.6}", mults.join(", "), last.g, last.min_overlap()));
    }
    verdict(ok, detail.join("; "))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "spin = 0.5\n[grids]\nn_radial = 6\nn_angular = 6\n[[particles]]\nposition = [0.0, 0.0, 0.0]\nmoment = 1.0\n[[particles]]\nposition = [0.5, -0.3, 0.4]\nmoment = 1.0\n",
    )
    .map_err(|e| e.to_string())?;
    let run = |out: &Path| {
        let base = ["spinqed", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "9", "--threads", "2"];
        let mut codes = Vec::new();
        for extra in [&["verify"][..], &["e2"], &["fock-fit", "--scales", "0.4,0.2,0.1,0.05"], &["multiplicity", "--g", "0.2,0.1"]] {
            let args: Vec<&str> = base.iter().chain(extra.iter()).copied().collect();
            let out = std::process::Command::new(env!("CARGO_BIN_EXE_spinqed"))
                .args(&args[1..])
                .output()
                .expect("binary runs");
            codes.push(out.status.code().unwrap_or(-1));
        }
        codes
    };
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let (ca, cb) = (run(&a), run(&b));
    let mut names: Vec<_> = std::fs::read_dir(&a)
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    let mut differing = Vec::new();
    for n in &names {
        let (x, y) = (std::fs::read(a.join(n)), std::fs::read(b.join(n)));
        if x.is_err() || x.ok() != y.ok() {
            differing.push(n.to_string_lossy().into_owned());
        }
    }
    verdict(
        differing.is_empty() && ca == cb && !names.is_empty(),
        format!("{} artifacts compared, differing: {differing:?}, exit codes {ca:?}", names.len()),
    )
}

fn report(n: usize, name: &str, outcome: std::thread::Result<Outcome>) -> bool {
    let (ok, detail) = match outcome {
        Ok(Ok(d)) => (true, d),
        Ok(Err(d)) => (false, d),
        Err(_) => (false, "panicked".to_string()),
    };
    println!("criterion {n:>2} {:<40} {}  {detail}", name, if ok { "PASS" } else { "FAIL" });
    ok
}

fn main() {
    let fit = catch_unwind(run_fit).unwrap_or_else(|_| Err("panicked".into()));
    let criteria: Vec<Criterion> = vec![
        ("kernel vs 3D oracle", Box::new(kernel_oracle)),
        ("A11(0) closed form", Box::new(a11_closed_form)),
        ("Casimir and commutators", Box::new(casimir_commutators)),
        ("Hopf image on the unit sphere", Box::new(hopf_sphere)),
        ("operator/field-energy identity", Box::new(field_identity)),
        ("classical decomposition", Box::new(classical_decomposition)),
        ("NSD, c^2 scaling, single spin", Box::new(nsd_scaling_single)),
        ("variational trial identity", Box::new(variational)),
        ("quadratic coefficient and remainder", Box::new(|| quadratic(&fit))),
        ("photon number exponent", Box::new(|| photon_scaling(&fit))),
        ("ground multiplicity bound", Box::new(multiplicity)),
        ("deterministic artifacts", Box::new(determinism)),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        if !report(i + 1, name, catch_unwind(AssertUnwindSafe(f))) {
            failed += 1;
        }
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
