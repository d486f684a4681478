//! The admissible speed interval `[c_*, c^*]` and the root-counting upper
//! bound `c_opt` it is compared against.

use serde::Serialize;

use crate::birthfn::{BirthFunction, StructureReport};
use crate::charroots::{count_right_halfplane, minimal_speed, quad_roots, CharParams};
use crate::numeric::{bisect, linspace};
use crate::{Error, Result};

/// `xi(h, c) = (mu - lambda) / (mu exp(-lambda h) - lambda exp(-mu h))`,
/// which lies in `[exp(-h), 1)` and decreases in `c`.
pub fn xi(h: f64, c: f64) -> f64 {
    let q = quad_roots(1.0 / (c * c));
    let (l, m) = (q.lambda_neg, q.mu_pos);
    // divide through by mu; mu can be huge for large c
    let r = l / m;
    (1.0 - r) / ((-l * h).exp() - r * (-m * h).exp())
}

/// `(G^2 + G) / (G^2 + 1)` with `G = g'(kappa)`.
pub fn threshold(gamma: f64) -> f64 {
    (gamma * gamma + gamma) / (gamma * gamma + 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "type", content = "value", rename_all = "lowercase")]
pub enum Upper {
    Infinite,
    Finite(f64),
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpeedInterval {
    pub c_star: f64,
    pub upper: Upper,
    pub gamma: f64,
    pub threshold: f64,
    pub xi_at_c_star: f64,
}

impl SpeedInterval {
    /// Whether `c` lies in the interval.
    pub fn admits(&self, c: f64) -> bool {
        match self.upper {
            Upper::Infinite => c >= self.c_star,
            Upper::Finite(u) => c >= self.c_star && c <= u,
            Upper::Empty => false,
        }
    }
}

pub fn speed_interval(report: &StructureReport, h: f64) -> Result<SpeedInterval> {
    speed_interval_from(report.a0_plus, report.gamma, h)
}

/// Speed interval from the two linearization slopes `a0 = g'(0+)` and
/// `gamma = g'(kappa)`.
pub fn speed_interval_from(a0: f64, gamma: f64, h: f64) -> Result<SpeedInterval> {
    if !(a0 > 1.0) {
        return Err(Error::WrongRegime(format!("speed interval needs g'(0+) > 1, got {a0}")));
    }
    if !(h >= 0.0 && h.is_finite()) {
        return Err(Error::DomainError(format!("delay h must be >= 0, got {h}")));
    }
    let c_star = minimal_speed(a0, h)?.c_star;
    let t = threshold(gamma);
    let xi_star = xi(h, c_star);
    let upper = if gamma >= 0.0 || (-h).exp() > t {
        Upper::Infinite
    } else if xi_star >= t {
        Upper::Finite(solve_xi_equals(h, t, c_star))
    } else {
        Upper::Empty
    };
    Ok(SpeedInterval {
        c_star,
        upper,
        gamma,
        threshold: t,
        xi_at_c_star: xi_star,
    })
}

/// Largest `c >= c_star` with `xi(h, c) >= t`, given `xi(h, c_star) >= t > exp(-h)`.
fn solve_xi_equals(h: f64, t: f64, c_star: f64) -> f64 {
    let f = |c: f64| xi(h, c) - t;
    if f(c_star) == 0.0 {
        return c_star;
    }
    let mut hi = 2.0 * c_star;
    let cap = c_star * 2f64.powi(20);
    while f(hi) >= 0.0 && hi < cap {
        hi *= 2.0;
    }
    let mut lo = c_star;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 1e-14 * mid {
            break;
        }
        if f(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "type", content = "value", rename_all = "lowercase")]
pub enum OptimalUpper {
    Infinite,
    Finite(f64),
}

/// Counts right-half-plane roots at speed `c`, nudging `eps` off a contour
/// degeneracy when one is hit.
fn count_at(gamma: f64, h: f64, c: f64) -> Result<usize> {
    let mut p = CharParams::from_speed(gamma, h, c)?;
    for attempt in 0..3 {
        match count_right_halfplane(&p) {
            Ok(rc) => return Ok(rc.n_right),
            Err(Error::ContourDegeneracy { .. }) if attempt < 2 => {
                p.epsilon *= 1.0 + 1e-9;
            }
            Err(e) => return Err(e),
        }
    }
    unreachable!()
}

/// Whether `x' = -x + gamma x(t - h)` is asymptotically stable.
fn delay_ode_stable(gamma: f64, h: f64) -> bool {
    if gamma >= -1.0 {
        return gamma < 1.0;
    }
    let g2 = gamma * gamma - 1.0;
    h < (1.0 / gamma).acos() / g2.sqrt()
}

/// Supremum of the speeds `c` at which `eps z^2 - z - 1 + gamma exp(-z h)`
/// has exactly one root with positive real part.
///
/// As `c -> inf` the count tends to one plus the number of unstable roots of
/// `x' = -x + gamma x(t - h)`, so the bound is infinite exactly when that
/// delay equation is stable; otherwise the count switches from one to three
/// at a finite speed, located by bisection.
pub fn c_opt_upper(gamma: f64, h: f64) -> Result<OptimalUpper> {
    if !(gamma < 0.0) {
        return Err(Error::WrongRegime(format!("c_opt needs gamma < 0, got {gamma}")));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::DomainError(format!("delay h must be > 0, got {h}")));
    }
    let mut probes: Vec<(f64, usize)> = Vec::new();
    let mut probe = |c: f64| -> Result<usize> {
        let n = count_at(gamma, h, c)?;
        probes.push((c, n));
        Ok(n)
    };

    if delay_ode_stable(gamma, h) {
        for c in [0.1, 1.0, 10.0, 100.0] {
            let n = probe(c)?;
            if n != 1 {
                return Err(Error::NonMonotoneCount(format!(
                    "stable delay equation but {n} right roots at c = {c}"
                )));
            }
        }
        return Ok(OptimalUpper::Infinite);
    }

    let (mut lo, mut hi) = (1.0, 1.0);
    if probe(1.0)? == 1 {
        while probe(hi)? == 1 {
            lo = hi;
            hi *= 2.0;
            if hi > 1e9 {
                return Err(Error::NonMonotoneCount(
                    "count stays at one despite an unstable delay equation".into(),
                ));
            }
        }
    } else {
        while probe(lo)? != 1 {
            hi = lo;
            lo *= 0.5;
            if lo < 1e-9 {
                return Err(Error::NonMonotoneCount(
                    "no speed with a single right root found".into(),
                ));
            }
        }
    }
    while hi - lo > 1e-9 * hi {
        let mid = 0.5 * (lo + hi);
        if probe(mid)? == 1 {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    probes.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    if let Some(w) = probes.windows(2).find(|w| w[1].1 < w[0].1) {
        return Err(Error::NonMonotoneCount(format!(
            "{} roots at c = {} but {} at c = {}",
            w[0].1, w[0].0, w[1].1, w[1].0
        )));
    }
    Ok(OptimalUpper::Finite(0.5 * (lo + hi)))
}

/// The reduced map `sigma = theta^{-1} o ((1 - xi) g)` with
/// `theta(x) = x - xi g_r^{-1}(x)`, where `g_r` is `g` restricted to its
/// decreasing branch `[x_M, inf)`. Defined when `g` is unimodal with
/// `kappa > x_M`.
#[derive(Debug, Clone)]
pub struct SigmaMap<'a> {
    g: &'a BirthFunction,
    x_m: f64,
    xi: f64,
    lo: f64,
    hi: f64,
}

impl<'a> SigmaMap<'a> {
    pub fn new(g: &'a BirthFunction, report: &StructureReport, h: f64, c: f64) -> Result<Self> {
        let x_m = match report.x_m {
            Some(x) if report.kappa > x && report.gamma < 0.0 => x,
            _ => {
                return Err(Error::WrongRegime(
                    "sigma needs a unimodal g with kappa beyond its peak".into(),
                ))
            }
        };
        if !(c > 0.0 && h >= 0.0) {
            return Err(Error::DomainError(format!("need c > 0 and h >= 0, got c = {c}, h = {h}")));
        }
        Ok(Self {
            g,
            x_m,
            xi: xi(h, c),
            lo: report.zeta1,
            hi: report.zeta2,
        })
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    /// `[zeta1, zeta2]`, on which the map is evaluated.
    pub fn domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// Inverse of the decreasing branch: the `z >= x_M` with `g(z) = y`.
    fn branch_inverse(&self, y: f64) -> Result<f64> {
        let f = |z: f64| self.g.value(z) - y;
        if f(self.x_m) < 0.0 {
            return Err(Error::DomainError(format!("{y} exceeds the peak of g")));
        }
        let mut top = 2.0 * self.x_m.max(1.0);
        while f(top) > 0.0 {
            top *= 2.0;
            if top > 1e6 {
                return Err(Error::DomainError(format!("g never drops below {y}")));
            }
        }
        Ok(bisect(f, self.x_m, top))
    }

    fn theta(&self, x: f64) -> Result<f64> {
        Ok(x - self.xi * self.branch_inverse(x)?)
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let v = (1.0 - self.xi) * self.g.value(x);
        // theta increases on (0, g(x_M)]
        let top = self.g.value(self.x_m);
        let mut bottom = 0.5 * self.lo.min(v).max(1e-12);
        while self.theta(bottom)? > v {
            bottom *= 0.5;
            if bottom < 1e-300 {
                return Err(Error::DomainError(format!("theta^-1 undefined at {v}")));
            }
        }
        if self.theta(top)? < v {
            return Err(Error::DomainError(format!("theta^-1 undefined at {v}")));
        }
        let failed = std::cell::Cell::new(false);
        let z = bisect(
            |z| match self.theta(z) {
                Ok(t) => t - v,
                Err(_) => {
                    failed.set(true);
                    0.0
                }
            },
            bottom,
            top,
        );
        if failed.get() {
            return Err(Error::DomainError(format!("theta^-1 undefined at {v}")));
        }
        Ok(z)
    }
}

/// Outcome of checking Singer's global-stability conditions on `sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SingerReport {
    pub xi: f64,
    pub threshold: f64,
    /// `xi > threshold`, equivalent to `|sigma'(kappa)| < 1`.
    pub xi_above_threshold: bool,
    pub sigma_prime_at_kappa: f64,
    /// Sign of the Schwarzian of `sigma` on a grid of `[zeta1, zeta2]`,
    /// away from `x_M`, by finite differences.
    pub schwarzian_negative: bool,
    /// Every sampled orbit reached `kappa` to `1e-6`.
    pub orbits_converge: bool,
    pub worst_orbit_distance: f64,
}

/// Evaluates `sigma` for the speed `c` and checks the hypotheses of
/// Singer's theorem together with the behaviour of sampled orbits.
pub fn singer_check(g: &BirthFunction, report: &StructureReport, h: f64, c: f64) -> Result<SingerReport> {
    let map = SigmaMap::new(g, report, h, c)?;
    let kappa = report.kappa;
    let step = 1e-4 * (1.0 + kappa);
    let sigma_prime_at_kappa = (map.eval(kappa + step)? - map.eval(kappa - step)?) / (2.0 * step);

    let (lo, hi) = map.domain();
    let d = 1e-2 * (hi - lo);
    let x_m = report.x_m.unwrap_or(f64::NAN);
    let mut schwarzian_negative = true;
    for x in linspace(lo + 2.0 * d, hi - 2.0 * d, 60) {
        if (x - x_m).abs() < 0.1 * (hi - lo) {
            continue;
        }
        let f = [
            map.eval(x - 2.0 * d)?,
            map.eval(x - d)?,
            map.eval(x)?,
            map.eval(x + d)?,
            map.eval(x + 2.0 * d)?,
        ];
        let d1 = (f[0] - 8.0 * f[1] + 8.0 * f[3] - f[4]) / (12.0 * d);
        let d2 = (-f[0] + 16.0 * f[1] - 30.0 * f[2] + 16.0 * f[3] - f[4]) / (12.0 * d * d);
        let d3 = (-f[0] + 2.0 * f[1] - 2.0 * f[3] + f[4]) / (2.0 * d * d * d);
        let s = d3 / d1 - 1.5 * (d2 / d1).powi(2);
        if s >= 0.0 {
            schwarzian_negative = false;
        }
    }

    let mut worst: f64 = 0.0;
    for x0 in linspace(lo, hi, 8) {
        let mut x = x0;
        for _ in 0..400 {
            x = map.eval(x)?;
            if (x - kappa).abs() < 1e-7 {
                break;
            }
        }
        worst = worst.max((x - kappa).abs());
    }
    let t = threshold(report.gamma);
    Ok(SingerReport {
        xi: map.xi(),
        threshold: t,
        xi_above_threshold: map.xi() > t,
        sigma_prime_at_kappa,
        schwarzian_negative,
        orbits_converge: worst < 1e-6,
        worst_orbit_distance: worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::birthfn::{analyze_structure, BirthFunction};
    use std::f64::consts::E;

    #[test]
    fn xi_golden_value() {
        let s5 = 5f64.sqrt();
        let (l, m) = ((1.0 - s5) / 2.0, (1.0 + s5) / 2.0);
        let want = (m - l) / (m * (-l).exp() - l * (-m).exp());
        assert!((xi(1.0, 1.0) - want).abs() < 1e-14);
        assert!((xi(1.0, 1.0) - 0.7157).abs() < 1e-4);
    }

    #[test]
    fn xi_limits() {
        assert!((xi(1e-9, 1.0) - 1.0).abs() < 1e-8);
        assert!((xi(1.0, 1e4) - (-1f64).exp()).abs() < 1e-3);
    }

    #[test]
    fn nicholson_gamma_minus_one_is_infinite() {
        let r = analyze_structure(&BirthFunction::nicholson(E * E).unwrap()).unwrap();
        for h in [0.1, 1.0, 10.0] {
            let s = speed_interval(&r, h).unwrap();
            assert_eq!(s.upper, Upper::Infinite);
        }
    }

    #[test]
    fn nicholson_e3() {
        let g = BirthFunction::nicholson(E.powi(3)).unwrap();
        let r = analyze_structure(&g).unwrap();
        assert!((r.gamma + 2.0).abs() < 1e-9);
        let s = speed_interval(&r, 0.5).unwrap();
        assert!((s.threshold - 0.4).abs() < 1e-9);
        assert_eq!(s.upper, Upper::Infinite);
        let s = speed_interval(&r, 1.2).unwrap();
        match s.upper {
            Upper::Finite(u) => {
                assert!(s.xi_at_c_star >= s.threshold);
                assert!((xi(1.2, u) - s.threshold).abs() < 1e-10);
            }
            Upper::Empty => assert!(s.xi_at_c_star < s.threshold),
            Upper::Infinite => panic!("threshold exceeds exp(-1.2)"),
        }
    }

    #[test]
    fn wrong_regime() {
        assert!(matches!(speed_interval_from(1.0, -2.0, 1.0), Err(Error::WrongRegime(_))));
        assert!(matches!(c_opt_upper(0.5, 1.0), Err(Error::WrongRegime(_))));
    }

    #[test]
    fn c_opt_gamma_minus_one_infinite() {
        assert_eq!(c_opt_upper(-1.0, 0.5).unwrap(), OptimalUpper::Infinite);
    }

    #[test]
    fn json_shape() {
        let s = speed_interval_from(2.0, 0.3, 1.0).unwrap();
        let v = serde_json::to_value(s).unwrap();
        assert_eq!(v["upper"]["type"], "infinite");
        assert!(v["upper"].get("value").is_none());
        let v = serde_json::to_value(Upper::Finite(1.5)).unwrap();
        assert_eq!(v["value"], 1.5);
    }

    #[test]
    fn sigma_fixes_kappa_with_known_slope() {
        let g = BirthFunction::nicholson(E.powi(3)).unwrap();
        let r = analyze_structure(&g).unwrap();
        for (h, c) in [(0.5, 2.0), (1.2, 3.0), (3.0, 1.5)] {
            let map = SigmaMap::new(&g, &r, h, c).unwrap();
            assert!((map.eval(3.0).unwrap() - 3.0).abs() < 1e-10);
            let x = map.xi();
            // theta'(kappa) = 1 - xi / gamma, sigma'(kappa) = (1 - xi) gamma / theta'(kappa)
            let expected = (1.0 - x) * 4.0 / (-2.0 - x);
            let got = singer_check(&g, &r, h, c).unwrap().sigma_prime_at_kappa;
            assert!((got - expected).abs() < 1e-6, "h={h}: {got} vs {expected}");
        }
    }

    #[test]
    fn singer_conditions_track_the_threshold() {
        let g = BirthFunction::nicholson(E.powi(3)).unwrap();
        let r = analyze_structure(&g).unwrap();
        let stable = singer_check(&g, &r, 0.5, 2.0).unwrap();
        assert!(stable.xi_above_threshold);
        assert!(stable.sigma_prime_at_kappa.abs() < 1.0);
        assert!(stable.schwarzian_negative);
        assert!(stable.orbits_converge);
        let unstable = singer_check(&g, &r, 3.0, 5.0).unwrap();
        assert!(!unstable.xi_above_threshold);
        assert!(unstable.sigma_prime_at_kappa.abs() > 1.0);
        assert!(!unstable.orbits_converge);
    }

    #[test]
    fn sigma_needs_unimodal_regime() {
        let g = BirthFunction::nicholson(2.0).unwrap();
        let r = analyze_structure(&g).unwrap();
        assert!(matches!(singer_check(&g, &r, 1.0, 1.0), Err(Error::WrongRegime(_))));
    }
}
