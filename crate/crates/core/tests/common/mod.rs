//! Test-side oracles, independent of the library's root finders.

#![allow(dead_code)]

use num_complex::Complex64;

pub fn psi(z: Complex64, a: f64, h: f64, eps: f64) -> Complex64 {
    eps * z * z - z - 1.0 + a * (-z * h).exp()
}

pub fn dpsi(z: Complex64, a: f64, h: f64, eps: f64) -> Complex64 {
    2.0 * eps * z - 1.0 - a * h * (-z * h).exp()
}

/// Roots with `Re z >= 0` satisfy `eps |z|^2 <= |z| + 1 + |a|`.
pub fn closed_halfplane_radius(a: f64, eps: f64) -> f64 {
    (1.0 + (1.0 + 4.0 * eps * (1.0 + a.abs())).sqrt()) / (2.0 * eps)
}

/// Distinct roots in the closed right half-disk, found by Newton's method
/// started from every node of a square grid of spacing `step`.
pub fn brute_force_roots(a: f64, h: f64, eps: f64, step: f64) -> Vec<Complex64> {
    let r = closed_halfplane_radius(a, eps) + step;
    let nre = (r / step).ceil() as i64;
    let mut roots: Vec<Complex64> = Vec::new();
    for i in 0..=nre {
        for j in -nre..=nre {
            let mut z = Complex64::new(i as f64 * step, j as f64 * step);
            let mut ok = false;
            for _ in 0..80 {
                let d = dpsi(z, a, h, eps);
                if d.norm() == 0.0 {
                    break;
                }
                let dz = psi(z, a, h, eps) / d;
                z -= dz;
                if !z.re.is_finite() || z.norm() > 4.0 * r {
                    break;
                }
                if dz.norm() < 1e-14 * (1.0 + z.norm()) {
                    ok = true;
                    break;
                }
            }
            if ok && z.re > -1e-9 && psi(z, a, h, eps).norm() < 1e-9 && !roots.iter().any(|w| (w - z).norm() < 1e-6) {
                roots.push(z);
            }
        }
    }
    roots
}

/// `n` equally spaced points from `lo` to `hi` inclusive.
pub fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}
