//! Roots of the quasipolynomial `psi(z, eps) = eps z^2 - z - 1 + a exp(-z h)`.
//!
//! With `a = g'(0)` this is the characteristic function of the profile
//! equation linearized at the trivial state; with `a = g'(kappa)` it is the
//! linearization at the positive equilibrium. `eps = 1/c^2` is used as the
//! primary parameter throughout.

use std::f64::consts::{FRAC_PI_2, TAU};

use num_complex::Complex64;
use serde::Serialize;

use crate::numeric::bisect;
use crate::ode::{integrate, Tolerance};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CharParams {
    pub a: f64,
    pub h: f64,
    pub epsilon: f64,
}

impl CharParams {
    pub fn new(a: f64, h: f64, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::DomainError(format!("epsilon must be > 0, got {epsilon}")));
        }
        if !(h >= 0.0 && h.is_finite()) {
            return Err(Error::DomainError(format!("delay h must be >= 0, got {h}")));
        }
        if !a.is_finite() {
            return Err(Error::DomainError(format!("a must be finite, got {a}")));
        }
        Ok(Self { a, h, epsilon })
    }

    /// Parameters for wave speed `c`, i.e. `eps = 1/c^2`.
    pub fn from_speed(a: f64, h: f64, c: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(Error::DomainError(format!("speed must be > 0, got {c}")));
        }
        Self::new(a, h, 1.0 / (c * c))
    }

    pub fn speed(&self) -> f64 {
        1.0 / self.epsilon.sqrt()
    }

    fn psi_re(&self, x: f64) -> f64 {
        (self.epsilon * x - 1.0) * x - 1.0 + self.a * (-x * self.h).exp()
    }

    fn dpsi_re(&self, x: f64) -> f64 {
        2.0 * self.epsilon * x - 1.0 - self.a * self.h * (-x * self.h).exp()
    }

    fn d2psi_re(&self, x: f64) -> f64 {
        2.0 * self.epsilon + self.a * self.h * self.h * (-x * self.h).exp()
    }
}

/// Roots `lambda < 0 < mu` of `eps z^2 - z - 1 = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadRoots {
    pub lambda_neg: f64,
    pub mu_pos: f64,
}

/// Cancellation-free forms of `(1 -+ sqrt(1 + 4 eps)) / (2 eps)`.
pub fn quad_roots(epsilon: f64) -> QuadRoots {
    let s = 1.0 + (1.0 + 4.0 * epsilon).sqrt();
    QuadRoots {
        lambda_neg: -2.0 / s,
        mu_pos: s / (2.0 * epsilon),
    }
}

pub fn psi(z: Complex64, p: &CharParams) -> Complex64 {
    (p.epsilon * z - 1.0) * z - 1.0 + p.a * (-z * p.h).exp()
}

/// `d psi / dz = 2 eps z - 1 - a h exp(-z h)`.
pub fn dpsi(z: Complex64, p: &CharParams) -> Complex64 {
    2.0 * p.epsilon * z - 1.0 - p.a * p.h * (-z * p.h).exp()
}

/// The two positive real roots `0 < lambda1 <= lambda2` below the fold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RealRootPair {
    pub lambda1: f64,
    pub lambda2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum RealRoots {
    Pair(RealRootPair),
    /// `eps > eps0`: `psi(x) > 0` for every real `x`.
    AboveFold,
}

impl RealRoots {
    pub fn pair(self) -> Option<RealRootPair> {
        match self {
            Self::Pair(p) => Some(p),
            Self::AboveFold => None,
        }
    }
}

/// Positive real roots of `psi` for `a > 1`. `psi` is strictly convex on the
/// real line, so they straddle its unique minimum.
pub fn real_root_pair(p: &CharParams) -> Result<RealRoots> {
    if !(p.a > 1.0) {
        return Err(Error::WrongRegime(format!(
            "real root pair needs a > 1, got a = {}",
            p.a
        )));
    }
    let mut hi = quad_roots(p.epsilon).mu_pos;
    while p.dpsi_re(hi) <= 0.0 {
        hi *= 2.0;
    }
    let zmin = bisect(|x| p.dpsi_re(x), 0.0, hi);
    let fmin = p.psi_re(zmin);
    if fmin >= 0.0 {
        if fold_is_near(p) {
            return Ok(RealRoots::Pair(RealRootPair {
                lambda1: zmin,
                lambda2: zmin,
            }));
        }
        return Ok(RealRoots::AboveFold);
    }
    let lambda1 = bisect(|x| p.psi_re(x), 0.0, zmin);
    let lambda2 = bisect(|x| p.psi_re(x), zmin, hi);
    Ok(RealRoots::Pair(RealRootPair { lambda1, lambda2 }))
}

fn fold_is_near(p: &CharParams) -> bool {
    minimal_speed(p.a, p.h)
        .map(|m| (p.epsilon - m.epsilon0).abs() < 1e-12 * (1.0 + m.epsilon0))
        .unwrap_or(false)
}

/// Solution of the fold system `psi = psi' = 0` in `(z, eps)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinimalSpeed {
    pub z0: f64,
    pub epsilon0: f64,
    pub c_star: f64,
}

/// The undelayed case `h = 0`: `eps0 = 1/(4(a-1))`, `c_* = 2 sqrt(a-1)`.
pub fn kpp_limit(a: f64) -> Result<MinimalSpeed> {
    if !(a > 1.0) {
        return Err(Error::WrongRegime(format!("minimal speed needs a > 1, got a = {a}")));
    }
    let epsilon0 = 0.25 / (a - 1.0);
    Ok(MinimalSpeed {
        z0: 2.0 * (a - 1.0),
        epsilon0,
        c_star: 2.0 * (a - 1.0).sqrt(),
    })
}

/// Minimal speed `c_* = 1/sqrt(eps0)` for `a > 1`, `h >= 0`.
///
/// Eliminating `eps` from the fold system leaves
/// `ln a - z h = ln((2 + z)/(2 + h z))`, whose unique positive root `z0` is
/// bracketed and bisected; `eps0 = (h z0 + h + 1)/(h z0^2 + 2 z0)` follows and
/// the pair is then polished by Newton on `(psi, psi')`.
pub fn minimal_speed(a: f64, h: f64) -> Result<MinimalSpeed> {
    if !(a > 1.0) || !a.is_finite() {
        return Err(Error::WrongRegime(format!("minimal speed needs a > 1, got a = {a}")));
    }
    if !(h >= 0.0 && h.is_finite()) {
        return Err(Error::DomainError(format!("delay h must be >= 0, got {h}")));
    }
    if h == 0.0 {
        return kpp_limit(a);
    }
    let ln_a = a.ln();
    let f = |z: f64| ln_a - z * h - (2.0 + z).ln() + (2.0 + h * z).ln();
    let mut hi = (4.0 * ln_a / h).max(10.0);
    while f(hi) > 0.0 {
        hi *= 2.0;
    }
    let z = bisect(f, 0.0, hi);
    let eps = (h * z + h + 1.0) / (h * z * z + 2.0 * z);
    let (z, eps) = polish_fold(a, h, z, eps);
    Ok(MinimalSpeed {
        z0: z,
        epsilon0: eps,
        c_star: 1.0 / eps.sqrt(),
    })
}

fn fold_residual(a: f64, h: f64, z: f64, eps: f64) -> (f64, f64) {
    let e = a * (-z * h).exp();
    ((eps * z - 1.0) * z - 1.0 + e, 2.0 * eps * z - 1.0 - h * e)
}

fn polish_fold(a: f64, h: f64, mut z: f64, mut eps: f64) -> (f64, f64) {
    let norm = |r: (f64, f64)| r.0.abs().max(r.1.abs());
    let mut res = fold_residual(a, h, z, eps);
    for _ in 0..8 {
        if norm(res) < 1e-15 {
            break;
        }
        let e = a * (-z * h).exp();
        let (j11, j12) = (res.1, z * z);
        let (j21, j22) = (2.0 * eps + h * h * e, 2.0 * z);
        let det = j11 * j22 - j12 * j21;
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let dz = (res.0 * j22 - j12 * res.1) / det;
        let de = (j11 * res.1 - j21 * res.0) / det;
        let (zn, en) = (z - dz, eps - de);
        let rn = fold_residual(a, h, zn, en);
        if !(zn > 0.0 && en > 0.0) || norm(rn) >= norm(res) {
            break;
        }
        z = zn;
        eps = en;
        res = rn;
    }
    (z, eps)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub h: f64,
    pub epsilon0: f64,
    pub c_star: f64,
}

/// Right-hand side of `d eps0/dh = F(h, eps0)`, written without the
/// cancellation in `sqrt(4 eps^2 + 4 h^2 eps + h^2)/2 - eps` near `h = 0`.
fn fold_ode_rhs(h: f64, eps: f64) -> f64 {
    let s = (4.0 * eps * eps + 4.0 * h * h * eps + h * h).sqrt();
    let num = eps * (2.0 * eps + 0.5 + h * (4.0 * eps + 1.0) / (2.0 * (s + 2.0 * eps)));
    num / (h * eps + 0.5 * (h + s))
}

/// `eps0(h)` on an ascending grid, from the ODE in `h` anchored at
/// `eps0(1) = 1/ln a` and integrated outward in both directions.
pub fn epsilon0_curve(a: f64, h_grid: &[f64]) -> Result<Vec<CurvePoint>> {
    if !(a > 1.0) {
        return Err(Error::WrongRegime(format!("minimal speed needs a > 1, got a = {a}")));
    }
    if h_grid.is_empty() {
        return Err(Error::DomainError("empty h grid".into()));
    }
    if let Some(bad) = h_grid.iter().find(|h| !(**h > 0.0 && h.is_finite())) {
        return Err(Error::DomainError(format!("grid contains h = {bad} <= 0")));
    }
    if h_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::DomainError("h grid must be strictly ascending".into()));
    }
    let tol = Tolerance {
        rtol: 1e-12,
        atol: 1e-14,
    };
    let anchor = 1.0 / a.ln();
    let mut eps = vec![0.0; h_grid.len()];
    let split = h_grid.partition_point(|&h| h < 1.0);

    let mut prev = (1.0, anchor);
    for i in split..h_grid.len() {
        let e = integrate(&fold_ode_rhs, prev.0, prev.1, h_grid[i], tol)
            .ok_or_else(|| Error::DomainError(format!("ODE integration failed at h = {}", h_grid[i])))?;
        eps[i] = e;
        prev = (h_grid[i], e);
    }
    prev = (1.0, anchor);
    for i in (0..split).rev() {
        let e = integrate(&fold_ode_rhs, prev.0, prev.1, h_grid[i], tol)
            .ok_or_else(|| Error::DomainError(format!("ODE integration failed at h = {}", h_grid[i])))?;
        eps[i] = e;
        prev = (h_grid[i], e);
    }
    Ok(h_grid
        .iter()
        .zip(eps)
        .map(|(&h, e)| CurvePoint {
            h,
            epsilon0: e,
            c_star: 1.0 / e.sqrt(),
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RootCount {
    /// Roots with `Re z > 0`, with multiplicity.
    pub n_right: usize,
    pub has_imaginary_axis_root: bool,
    /// Largest positive real root, reported only when every right-half-plane
    /// root is real (complex roots are counted but not located).
    #[serde(skip)]
    pub dominant: Option<Complex64>,
}

/// Bound on the modulus of any root with `Re z >= 0`.
fn right_root_radius(p: &CharParams) -> f64 {
    let e = p.epsilon;
    (1.0 + (1.0 + 4.0 * e * (1.0 + p.a.abs())).sqrt()) / (2.0 * e)
}

/// Number of zeros of `psi(., eps)` with `Re z > 0`, by the argument principle
/// on the boundary of the half-disk `{Re z >= 0, |z| <= R}` with
/// `R = 2 (1 + (1 + |a|)/eps)`. Roots on the imaginary axis are excluded by
/// semicircular indentations of radius `1e-6` into the right half-plane.
pub fn count_right_halfplane(p: &CharParams) -> Result<RootCount> {
    if p.a == 0.0 {
        // eps z^2 - z - 1: exactly one root, mu > 0
        let mu = quad_roots(p.epsilon).mu_pos;
        return Ok(RootCount {
            n_right: 1,
            has_imaginary_axis_root: false,
            dominant: Some(Complex64::new(mu, 0.0)),
        });
    }
    let r_big = 2.0 * (1.0 + (1.0 + p.a.abs()) / p.epsilon);
    let axis_roots: Vec<f64> = imaginary_axis_roots(p, r_big)
        .iter()
        .map(|z| z.im)
        .collect();
    let indent = 1e-6;

    let mut segments = vec![Segment::Arc {
        center: Complex64::new(0.0, 0.0),
        radius: r_big,
        from: -FRAC_PI_2,
        to: FRAC_PI_2,
    }];
    let mut omegas = axis_roots.clone();
    omegas.sort_by(|x, y| y.partial_cmp(x).unwrap());
    let mut top = r_big;
    for w in omegas {
        segments.push(Segment::Line {
            from: Complex64::new(0.0, top),
            to: Complex64::new(0.0, w + indent),
        });
        segments.push(Segment::Arc {
            center: Complex64::new(0.0, w),
            radius: indent,
            from: FRAC_PI_2,
            to: -FRAC_PI_2,
        });
        top = w - indent;
    }
    segments.push(Segment::Line {
        from: Complex64::new(0.0, top),
        to: Complex64::new(0.0, -r_big),
    });

    let mut total = 0.0;
    for seg in &segments {
        total += track_argument(seg, p)?;
    }
    let turns = total / TAU;
    let n = turns.round();
    if (turns - n).abs() > 0.1 || n < 0.0 {
        return Err(Error::ContourDegeneracy {
            re: 0.0,
            im: 0.0,
            distance: (turns - n).abs(),
        });
    }
    let n_right = n as usize;

    let positive = positive_real_roots(p);
    let dominant = if n_right > 0 && count_with_multiplicity(&positive, p) == n_right {
        positive.last().map(|&x| Complex64::new(x, 0.0))
    } else {
        None
    };
    Ok(RootCount {
        n_right,
        has_imaginary_axis_root: !axis_roots.is_empty(),
        dominant,
    })
}

fn count_with_multiplicity(roots: &[f64], p: &CharParams) -> usize {
    roots
        .iter()
        .map(|&x| if p.dpsi_re(x).abs() < 1e-8 { 2 } else { 1 })
        .sum()
}

enum Segment {
    Arc {
        center: Complex64,
        radius: f64,
        from: f64,
        to: f64,
    },
    Line {
        from: Complex64,
        to: Complex64,
    },
}

impl Segment {
    fn point(&self, s: f64) -> Complex64 {
        match *self {
            Segment::Arc {
                center,
                radius,
                from,
                to,
            } => center + Complex64::from_polar(radius, from + s * (to - from)),
            Segment::Line { from, to } => from + s * (to - from),
        }
    }

    fn length(&self) -> f64 {
        match *self {
            Segment::Arc {
                radius, from, to, ..
            } => radius * (to - from).abs(),
            Segment::Line { from, to } => (to - from).norm(),
        }
    }
}

/// Accumulated change of `arg psi` along one segment. Steps are accepted only
/// when `psi` changes by less than 30% of its modulus, which keeps each
/// increment well inside `(-pi/2, pi/2)`.
fn track_argument(seg: &Segment, p: &CharParams) -> Result<f64> {
    let len = seg.length();
    if len == 0.0 {
        return Ok(0.0);
    }
    let mut s = 0.0;
    let mut z = seg.point(0.0);
    let mut f = psi(z, p);
    let mut ds: f64 = 1e-3;
    let mut total = 0.0;
    while s < 1.0 {
        let slope = dpsi(z, p).norm() * len;
        if slope > 0.0 {
            ds = ds.min(0.3 * f.norm() / slope);
        }
        loop {
            let s1 = (s + ds).min(1.0);
            let z1 = seg.point(s1);
            if (z1 - z).norm() < 1e-12 * (1.0 + z.norm()) && s1 < 1.0 {
                return Err(Error::ContourDegeneracy {
                    re: z.re,
                    im: z.im,
                    distance: (z1 - z).norm(),
                });
            }
            let f1 = psi(z1, p);
            if f1 != Complex64::new(0.0, 0.0) && (f1 - f).norm() <= 0.3 * f.norm() {
                total += (f1 / f).arg();
                s = s1;
                z = z1;
                f = f1;
                ds *= 1.5;
                break;
            }
            ds *= 0.5;
        }
    }
    Ok(total)
}

/// Roots `i omega` with `|omega| <= omega_max`, conjugate pairs listed with the
/// positive frequency first.
///
/// `psi(i w) = 0` forces `|eps w^2 + 1 + i w| = |a|`, a quadratic in `w^2`
/// with at most one positive solution, so the only candidate frequency is
/// known in closed form; it is a root when the phase condition also holds.
pub fn imaginary_axis_roots(p: &CharParams, omega_max: f64) -> Vec<Complex64> {
    let tol = 1e-10 * (1.0 + p.a.abs());
    let mut out = Vec::new();
    if (p.a - 1.0).abs() < tol {
        out.push(Complex64::new(0.0, 0.0));
    }
    if let Some(w) = modulus_frequency(p.a, p.epsilon) {
        if w <= omega_max && psi(Complex64::new(0.0, w), p).norm() < tol {
            out.push(Complex64::new(0.0, w));
            out.push(Complex64::new(0.0, -w));
        }
    }
    out
}

/// Positive `w` with `(eps w^2 + 1)^2 + w^2 = a^2`, if any.
fn modulus_frequency(a: f64, eps: f64) -> Option<f64> {
    if a.abs() <= 1.0 {
        return None;
    }
    let b = 2.0 * eps + 1.0;
    let disc = b * b - 4.0 * eps * eps * (1.0 - a * a);
    // w^2 = (-b + sqrt(disc)) / (2 eps^2), rationalized
    let w2 = 2.0 * (a * a - 1.0) / (b + disc.sqrt());
    (w2 > 0.0).then(|| w2.sqrt())
}

/// Smallest delay at which `psi(., eps)` acquires the pair `+-i omega`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HopfPoint {
    pub h: f64,
    pub omega: f64,
}

/// For `|a| > 1` the crossing frequency is fixed by the modulus condition and
/// the delay by the phase: `a exp(-i w h) = eps w^2 + 1 + i w`.
pub fn hopf_crossing(a: f64, epsilon: f64) -> Option<HopfPoint> {
    let w = modulus_frequency(a, epsilon)?;
    let mut phase = (-w / a).atan2((epsilon * w * w + 1.0) / a);
    if phase <= 0.0 {
        phase += TAU;
    }
    Some(HopfPoint {
        h: phase / w,
        omega: w,
    })
}

/// All real roots of `psi` on `[lo, hi]`, ascending.
///
/// `psi''' = -a h^3 exp(-x h)` has constant sign, so `psi''` has at most one
/// zero, `psi'` at most two and `psi` at most three. Bisection between the
/// critical points of each level finds every root, tangential ones included.
fn real_roots_in(p: &CharParams, lo: f64, hi: f64) -> Vec<f64> {
    let mut nodes = vec![lo, hi];
    if p.d2psi_re(lo).signum() != p.d2psi_re(hi).signum() {
        nodes.insert(1, bisect(|x| p.d2psi_re(x), lo, hi));
    }
    let mut crit = vec![lo];
    for w in nodes.windows(2) {
        let (f0, f1) = (p.dpsi_re(w[0]), p.dpsi_re(w[1]));
        if f0 != 0.0 && f1 != 0.0 && (f0 > 0.0) != (f1 > 0.0) {
            crit.push(bisect(|x| p.dpsi_re(x), w[0], w[1]));
        }
        crit.push(w[1]);
    }
    let mut roots: Vec<f64> = Vec::new();
    let scale = 1.0 + p.a.abs();
    for w in crit.windows(2) {
        let (f0, f1) = (p.psi_re(w[0]), p.psi_re(w[1]));
        if f0 == 0.0 {
            roots.push(w[0]);
        } else if f1 != 0.0 && (f0 > 0.0) != (f1 > 0.0) {
            roots.push(bisect(|x| p.psi_re(x), w[0], w[1]));
        } else if f0.abs() < 1e-13 * scale && p.dpsi_re(w[0]).abs() < 1e-6 {
            roots.push(w[0]);
        }
    }
    if p.psi_re(hi) == 0.0 {
        roots.push(hi);
    }
    roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
    roots.dedup_by(|x, y| (*x - *y).abs() < 1e-12 * (1.0 + x.abs()));
    roots
}

fn quadratic_real_roots(eps: f64, c0: f64) -> Vec<f64> {
    // eps z^2 - z + c0 = 0
    let disc = 1.0 - 4.0 * eps * c0;
    if disc < 0.0 {
        return Vec::new();
    }
    let s = 1.0 + disc.sqrt();
    let mut r = vec![2.0 * c0 / s, s / (2.0 * eps)];
    r.sort_by(|x, y| x.partial_cmp(y).unwrap());
    r.dedup();
    r
}

fn positive_real_roots(p: &CharParams) -> Vec<f64> {
    if p.h == 0.0 || p.a == 0.0 {
        return quadratic_real_roots(p.epsilon, p.a - 1.0)
            .into_iter()
            .filter(|&x| x > 0.0)
            .collect();
    }
    real_roots_in(p, 0.0, right_root_radius(p))
        .into_iter()
        .filter(|&x| x > 0.0)
        .collect()
}

/// Real roots of `psi` in `(-inf, 0)`, ascending.
pub fn negative_real_roots(p: &CharParams) -> Vec<f64> {
    if p.h == 0.0 || p.a == 0.0 {
        return quadratic_real_roots(p.epsilon, p.a - 1.0)
            .into_iter()
            .filter(|&x| x < 0.0)
            .collect();
    }
    if p.a >= 1.0 {
        // psi(-y) >= y - 1 + a > 0 for y > 0
        return Vec::new();
    }
    let lo = if p.a > 0.0 {
        // psi(-y) > 0 once y >= 1
        -1.0
    } else {
        // beyond y = Y, psi(-y), and its first two y-derivatives are negative
        let q = |y: f64| p.psi_re(-y);
        let dq = |y: f64| -p.dpsi_re(-y);
        let d2q = |y: f64| p.d2psi_re(-y);
        let mut y = 1.0;
        while !(q(y) < 0.0 && dq(y) < 0.0 && d2q(y) < 0.0) && y < 1e6 {
            y *= 2.0;
        }
        -y
    };
    real_roots_in(p, lo, 0.0)
        .into_iter()
        .filter(|&x| x < 0.0)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::E;

    fn cp(a: f64, h: f64, e: f64) -> CharParams {
        CharParams::new(a, h, e).unwrap()
    }

    #[test]
    fn quad_roots_golden() {
        let q = quad_roots(1.0);
        assert!((q.lambda_neg - (1.0 - 5f64.sqrt()) / 2.0).abs() < 1e-15);
        assert!((q.mu_pos - (1.0 + 5f64.sqrt()) / 2.0).abs() < 1e-15);
        let q = quad_roots(1e-8);
        assert!((q.lambda_neg + 1.0).abs() < 1e-7);
        assert!((q.mu_pos * 1e-8 - 1.0).abs() < 1e-7);
        let q = quad_roots(0.25);
        assert!((q.lambda_neg * q.mu_pos + 4.0).abs() < 1e-12);
        assert!((q.lambda_neg + q.mu_pos - 4.0).abs() < 1e-12);
    }

    #[test]
    fn psi_values() {
        let z0 = Complex64::new(0.0, 0.0);
        assert!((psi(z0, &cp(3.5, 0.7, 0.2)) - 2.5).norm() < 1e-15);
        assert!(psi(Complex64::new(1.0, 0.0), &cp(E, 1.0, 1.0)).norm() < 1e-15);
        assert!((psi(Complex64::new(1.0, 0.0), &cp(2.0, 0.0, 1.0)) - 1.0).norm() < 1e-15);
    }

    #[test]
    fn fold_at_unit_delay() {
        let m = minimal_speed(E, 1.0).unwrap();
        assert!((m.z0 - 1.0).abs() < 1e-12);
        assert!((m.epsilon0 - 1.0).abs() < 1e-12);
        assert!((m.c_star - 1.0).abs() < 1e-12);
        let m = minimal_speed(2.0, 1.0).unwrap();
        assert!((m.z0 - 2f64.ln()).abs() < 1e-12);
        assert!((m.epsilon0 - 1.0 / 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn minimal_speed_regimes() {
        assert!(matches!(minimal_speed(1.0, 1.0), Err(Error::WrongRegime(_))));
        assert!(matches!(minimal_speed(2.0, -1.0), Err(Error::DomainError(_))));
        assert_eq!(minimal_speed(5.0, 0.0).unwrap(), kpp_limit(5.0).unwrap());
    }

    #[test]
    fn real_pair_examples() {
        let pair = real_root_pair(&cp(E, 1.0, 0.5)).unwrap().pair().unwrap();
        assert!(pair.lambda1 < 1.0 && 1.0 < pair.lambda2);
        assert_eq!(real_root_pair(&cp(E, 1.0, 1.5)).unwrap(), RealRoots::AboveFold);
        let m = minimal_speed(2.0, 1.0).unwrap();
        let pair = real_root_pair(&cp(2.0, 1.0, m.epsilon0)).unwrap().pair().unwrap();
        assert!((pair.lambda1 - 2f64.ln()).abs() < 1e-6);
        assert!((pair.lambda2 - 2f64.ln()).abs() < 1e-6);
        assert!(matches!(real_root_pair(&cp(0.5, 1.0, 1.0)), Err(Error::WrongRegime(_))));
    }

    #[test]
    fn curve_anchor_and_kpp_end() {
        let c = epsilon0_curve(E, &[1.0]).unwrap();
        assert!((c[0].epsilon0 - 1.0).abs() < 1e-14);
        let c = epsilon0_curve(E, &[0.5, 1.0, 2.0]).unwrap();
        assert!(c[0].epsilon0 < c[1].epsilon0 && c[1].epsilon0 < c[2].epsilon0);
        let c = epsilon0_curve(2.0, &[1e-6]).unwrap();
        assert!((c[0].c_star - 2.0).abs() < 1e-3);
        assert!(epsilon0_curve(2.0, &[0.0, 1.0]).is_err());
    }

    #[test]
    fn stable_negative_feedback_has_one_right_root() {
        let rc = count_right_halfplane(&cp(-1.0, 0.5, 1.0)).unwrap();
        assert_eq!(rc.n_right, 1);
        let d = rc.dominant.unwrap();
        assert!(d.im == 0.0 && d.re > 0.0);
        assert!(psi(d, &cp(-1.0, 0.5, 1.0)).norm() < 1e-10);
    }

    #[test]
    fn hopf_point_is_on_axis() {
        let hp = hopf_crossing(-2.0, 1.0).unwrap();
        let p = cp(-2.0, hp.h, 1.0);
        let roots = imaginary_axis_roots(&p, 10.0);
        assert_eq!(roots.len(), 2);
        assert!((roots[0].im - hp.omega).abs() < 1e-14);
        assert!(imaginary_axis_roots(&cp(-0.5, 1.3, 1.0), 10.0).is_empty());
        // the count is still well defined with the indentation
        let rc = count_right_halfplane(&p).unwrap();
        assert!(rc.has_imaginary_axis_root);
    }

    #[test]
    fn negative_roots_pure_quadratic() {
        let r = negative_real_roots(&cp(0.0, 1.0, 1.0));
        assert_eq!(r.len(), 1);
        assert!((r[0] - (1.0 - 5f64.sqrt()) / 2.0).abs() < 1e-14);
        assert!(negative_real_roots(&cp(E, 1.0, 1.0)).is_empty());
    }

    #[test]
    fn negative_roots_are_roots() {
        for (a, h, e) in [(-1.0, 0.5, 1.0), (-3.0, 0.2, 0.1), (0.5, 2.0, 0.3), (-0.2, 3.0, 2.0)] {
            let p = cp(a, h, e);
            for x in negative_real_roots(&p) {
                assert!(p.psi_re(x).abs() < 1e-10, "a={a} h={h} e={e} x={x}");
            }
        }
    }

    proptest! {
        #[test]
        fn fold_residuals_vanish(a in 1.01f64..20.0, h in 0.01f64..5.0) {
            let m = minimal_speed(a, h).unwrap();
            let p = cp(a, h, m.epsilon0);
            let z = Complex64::new(m.z0, 0.0);
            prop_assert!(psi(z, &p).norm() < 1e-8);
            prop_assert!(dpsi(z, &p).norm() < 1e-8);
        }

        #[test]
        fn ordering_chain(a in 1.05f64..20.0, h in 0.05f64..5.0, frac in 0.05f64..0.95) {
            let m = minimal_speed(a, h).unwrap();
            let p = cp(a, h, frac * m.epsilon0);
            let q = quad_roots(p.epsilon);
            let pair = real_root_pair(&p).unwrap().pair().unwrap();
            prop_assert!(q.lambda_neg < 0.0 && 0.0 < pair.lambda1);
            prop_assert!(pair.lambda1 < pair.lambda2 && pair.lambda2 < q.mu_pos);
        }

        #[test]
        fn above_fold_has_no_real_root(a in 1.05f64..20.0, h in 0.05f64..5.0, f in 1.01f64..5.0) {
            let m = minimal_speed(a, h).unwrap();
            let p = cp(a, h, f * m.epsilon0);
            prop_assert_eq!(real_root_pair(&p).unwrap(), RealRoots::AboveFold);
        }
    }

    #[test]
    fn fold_ode_matches_direct_derivative() {
        for (a, h) in [(2.0, 0.3), (E, 1.0), (10.0, 3.0)] {
            let d = 1e-5;
            let fd = (minimal_speed(a, h + d).unwrap().epsilon0
                - minimal_speed(a, h - d).unwrap().epsilon0)
                / (2.0 * d);
            let e = minimal_speed(a, h).unwrap().epsilon0;
            let rhs = fold_ode_rhs(h, e);
            assert!((fd - rhs).abs() < 1e-6 * (1.0 + rhs.abs()), "a={a} h={h}");
        }
    }
}
