use delayfront::birthfn::{analyze_structure, BirthFunction};
use delayfront::charroots::minimal_speed;
use delayfront::pdesim::{simulate, Initial, SimConfig};

/// Runs long enough for a front moving at about `c_*` to clear `0.4 L`.
fn config(g: BirthFunction, h: f64, nx: usize) -> SimConfig {
    let length = 200.0;
    let c_star = minimal_speed(g.slope_at_zero(), h).unwrap().c_star;
    SimConfig {
        length,
        nx,
        dt: SimConfig::stable_dt(length, nx, h),
        t_end: 0.6 * length / c_star,
        h,
        g,
        initial: Initial::Step { height: 0.5 },
        level: None,
        record_interval: 0.5,
    }
}

#[test]
fn state_behind_front_stays_in_permanence_interval() {
    for (p, h) in [(2.0, 1.0), (std::f64::consts::E.powi(2), 0.5)] {
        let g = BirthFunction::nicholson(p).unwrap();
        let report = analyze_structure(&g).unwrap();
        let r = simulate(&config(g, h, 801)).unwrap();
        assert!(r.mass_nonneg);
        assert!(r.min_u >= 0.0);
        let m = r.behind_front_mean;
        assert!(
            m >= report.zeta1 - 0.05 && m <= report.zeta2 + 0.05,
            "p={p}: mean {m} outside [{}, {}]",
            report.zeta1,
            report.zeta2
        );
    }
}

#[test]
fn front_advances_monotonically() {
    let g = BirthFunction::nicholson(2.0).unwrap();
    let r = simulate(&config(g, 0.0, 801)).unwrap();
    assert!(r.front_positions.len() > 10);
    let late = &r.front_positions[r.front_positions.len() / 4..];
    assert!(late.windows(2).all(|w| w[1].1 >= w[0].1 - 1e-9));
    assert!(r.speed_estimate.unwrap() > 1.5);
}
