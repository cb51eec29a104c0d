//! Spherical Bessel functions of the first kind, orders 0 to 2.

const SERIES_CUTOFF: f64 = 1.0;

// Power series j_n(z) = z^n Σ_k (-z²/2)^k / (k! (2n+2k+1)!!).
fn series(n: u32, z: f64) -> f64 {
    let z2 = z * z;
    let mut dfact = 1.0;
    for k in 1..=n {
        dfact *= (2 * k + 1) as f64;
    }
    let mut term = z.powi(n as i32) / dfact;
    let mut sum = term;
    for k in 1..20 {
        term *= -z2 / (2.0 * k as f64 * (2 * n + 2 * k + 1) as f64);
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

pub fn j0(z: f64) -> f64 {
    if z.abs() < SERIES_CUTOFF {
        series(0, z)
    } else {
        z.sin() / z
    }
}

pub fn j1(z: f64) -> f64 {
    if z.abs() < SERIES_CUTOFF {
        series(1, z)
    } else {
        (z.sin() / z - z.cos()) / z
    }
}

pub fn j2(z: f64) -> f64 {
    if z.abs() < SERIES_CUTOFF {
        series(2, z)
    } else {
        let (s, c) = z.sin_cos();
        (3.0 / (z * z) - 1.0) * s / z - 3.0 * c / (z * z)
    }
}
