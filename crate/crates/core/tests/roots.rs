mod common;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use delayfront::charroots::{
    count_right_halfplane, hopf_crossing, imaginary_axis_roots, minimal_speed, negative_real_roots, CharParams,
};
use delayfront::speeds::{c_opt_upper, OptimalUpper};

#[test]
fn contour_count_matches_newton_sweep() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut compared = 0;
    while compared < 40 {
        let a = rng.gen_range(-8.0..8.0);
        let h = rng.gen_range(0.05..4.0);
        let eps = rng.gen_range(0.08..3.0);
        let roots = common::brute_force_roots(a, h, eps, 0.15);
        if roots.iter().any(|z| z.re.abs() < 1e-4) {
            continue;
        }
        compared += 1;
        let p = CharParams::new(a, h, eps).unwrap();
        let rc = count_right_halfplane(&p).unwrap();
        assert_eq!(rc.n_right, roots.len(), "a={a}, h={h}, eps={eps}, roots {roots:?}");
        if let Some(d) = rc.dominant {
            let best = roots.iter().map(|z| z.re).fold(f64::MIN, f64::max);
            assert!((d.re - best).abs() < 1e-8);
        }
    }
}

#[test]
fn imaginary_roots_are_roots() {
    // a = -2, eps = 0.5: the Hopf delay puts +-i omega exactly on the axis
    let hp = hopf_crossing(-2.0, 0.5).unwrap();
    let p = CharParams::new(-2.0, hp.h, 0.5).unwrap();
    let roots = imaginary_axis_roots(&p, 50.0);
    assert_eq!(roots.len(), 2);
    for z in roots {
        assert!(common::psi(z, -2.0, hp.h, 0.5).norm() < 1e-10);
        assert!((z.im.abs() - hp.omega).abs() < 1e-12);
    }
    // a unit modulus never reaches |a| on the axis away from zero
    let p = CharParams::new(0.5, 1.0, 1.0).unwrap();
    assert!(imaginary_axis_roots(&p, 50.0).is_empty());
}

#[test]
fn negative_roots_match_sign_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..30 {
        let a = rng.gen_range(-6.0..0.95);
        let h = rng.gen_range(0.1..3.0);
        let eps = rng.gen_range(0.1..2.0);
        let p = CharParams::new(a, h, eps).unwrap();
        let f = |x: f64| common::psi(Complex64::new(x, 0.0), a, h, eps).re;
        let mut lo = -common::closed_halfplane_radius(a, eps) * 4.0 - 10.0;
        // for a < 0 the exponential eventually wins; scan past that point
        while a < 0.0 && a.abs() * (-lo * h).exp() <= 10.0 * (eps * lo * lo - lo + 1.0) {
            lo *= 2.0;
        }
        let n = 400_000;
        let mut changes = 0;
        let mut prev = f(lo);
        for i in 1..=n {
            let x = lo + (0.0 - 1e-9 - lo) * i as f64 / n as f64;
            let v = f(x);
            if v.signum() != prev.signum() {
                changes += 1;
            }
            prev = v;
        }
        let got = negative_real_roots(&p);
        assert_eq!(got.len(), changes, "a={a}, h={h}, eps={eps}: {got:?}");
        for r in got {
            assert!(f(r).abs() < 1e-9 * (1.0 + (a * (-r * h).exp()).abs()));
        }
    }
}

#[test]
fn finite_c_opt_sits_on_an_axis_crossing() {
    for (gamma, h) in [(-3.0, 2.0), (-2.0, 3.0), (-5.0, 1.0), (-1.5, 4.0)] {
        match c_opt_upper(gamma, h).unwrap() {
            OptimalUpper::Finite(c) => {
                let eps = 1.0 / (c * c);
                // modulus condition (eps w^2 + 1)^2 + w^2 = gamma^2
                let b = 2.0 * eps + 1.0;
                let w2 = (-b + (b * b + 4.0 * eps * eps * (gamma * gamma - 1.0)).sqrt()) / (2.0 * eps * eps);
                let z = Complex64::new(0.0, w2.sqrt());
                let r = common::psi(z, gamma, h, eps).norm();
                assert!(r < 1e-6, "gamma={gamma}, h={h}: |psi(i w)| = {r:e}");
            }
            OptimalUpper::Infinite => panic!("gamma={gamma}, h={h} should be finite"),
        }
    }
}

#[test]
fn stable_delay_equation_gives_infinite_c_opt() {
    for (gamma, h) in [(-0.5, 10.0), (-1.0, 3.0), (-3.0, 0.3)] {
        assert_eq!(c_opt_upper(gamma, h).unwrap(), OptimalUpper::Infinite);
    }
}

#[test]
fn fold_is_a_double_root_at_long_delays() {
    for (a, h) in [(4.0, 50.0), (1.05, 20.0), (30.0, 8.0)] {
        let m = minimal_speed(a, h).unwrap();
        let z = Complex64::new(m.z0, 0.0);
        assert!(common::psi(z, a, h, m.epsilon0).norm() < 1e-10);
        assert!(common::dpsi(z, a, h, m.epsilon0).norm() < 1e-8);
        assert!(m.c_star <= (a.ln() / h).sqrt() + 1e-9);
    }
}

#[test]
fn documented_counts_agree_with_sweep() {
    for (a, h, eps) in [(std::f64::consts::E, 1.0, 0.5), (std::f64::consts::E, 1.0, 2.0), (-1.0, 0.5, 1.0)] {
        let p = CharParams::new(a, h, eps).unwrap();
        let oracle = common::brute_force_roots(a, h, eps, 0.1).len();
        assert_eq!(count_right_halfplane(&p).unwrap().n_right, oracle, "a={a}, h={h}, eps={eps}");
    }
    let p = CharParams::new(-1.0, 0.5, 1.0).unwrap();
    let rc = count_right_halfplane(&p).unwrap();
    assert_eq!(rc.n_right, 1);
    assert!(rc.dominant.unwrap().re > 0.0);
}

#[test]
fn small_feedback_has_no_axis_roots() {
    for h in [0.1, 1.0, 7.0] {
        let p = CharParams::new(-0.5, h, 1.0).unwrap();
        assert!(imaginary_axis_roots(&p, 10.0).is_empty());
    }
}
