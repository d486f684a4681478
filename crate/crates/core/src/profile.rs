//! Wave profiles as fixed points of the Green-function operator
//!
//! ```text
//! (A x)(t) = 1/(eps (mu - lambda)) * [ int_{-inf}^t e^{lambda (t - s)} G(s) ds
//!                                     + int_t^{inf}  e^{mu (t - s)} G(s) ds ],
//! G(s) = g(x(s - h)),
//! ```
//!
//! whose fixed points solve `eps x'' - x' - x + g(x(t - h)) = 0`.
//!
//! Profiles live on a uniform mesh whose step divides `h`, so the delayed
//! argument is an integer index shift. Between nodes `G` is replaced by its
//! cubic Lagrange interpolant and integrated exactly against the exponential
//! kernels, which makes the quadrature fourth order. Outside the mesh the
//! profile is given by analytic tails.

use serde::Serialize;

use crate::birthfn::{analyze_structure, BirthFunction};
use crate::charroots::{minimal_speed, quad_roots, real_root_pair, CharParams};
use crate::numeric::fit_line;
use crate::speeds::{speed_interval, xi};
use crate::{Error, Result};

/// Uniform mesh `t_i = t_minus + i dt`, `i < len`, with `h = delay_steps * dt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Mesh {
    pub t_minus: f64,
    pub dt: f64,
    pub len: usize,
    pub delay_steps: usize,
}

impl Mesh {
    /// Mesh covering `[t_minus, t_plus]` (the right end is rounded up to a
    /// whole step) with the largest step `<= dt_max` that divides `h`.
    pub fn new(h: f64, t_minus: f64, t_plus: f64, dt_max: f64) -> Result<Self> {
        if !(h >= 0.0 && dt_max > 0.0 && t_plus > t_minus) {
            return Err(Error::GridError(format!(
                "invalid mesh request h = {h}, [{t_minus}, {t_plus}], dt_max = {dt_max}"
            )));
        }
        let (dt, delay_steps) = if h == 0.0 {
            (dt_max, 0)
        } else {
            let n = (h / dt_max).ceil().max(1.0) as usize;
            (h / n as f64, n)
        };
        let steps = ((t_plus - t_minus) / dt - 1e-9).ceil() as usize;
        Ok(Self {
            t_minus,
            dt,
            len: steps + 1,
            delay_steps,
        })
    }

    /// Mesh with an explicit step; `dt` must divide `h`.
    pub fn with_step(h: f64, t_minus: f64, dt: f64, len: usize) -> Result<Self> {
        let ratio = h / dt;
        if !(dt > 0.0) || (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) || len < 4 {
            return Err(Error::GridError(format!(
                "step {dt} does not divide delay {h} (or mesh too short)"
            )));
        }
        Ok(Self {
            t_minus,
            dt,
            len,
            delay_steps: ratio.round() as usize,
        })
    }

    pub fn t(&self, i: usize) -> f64 {
        self.t_minus + self.dt * i as f64
    }

    pub fn t_plus(&self) -> f64 {
        self.t(self.len - 1)
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.t(i)).collect()
    }

    pub fn delay(&self) -> f64 {
        self.dt * self.delay_steps as f64
    }

    fn refined(&self) -> Self {
        Self {
            t_minus: self.t_minus,
            dt: 0.5 * self.dt,
            len: 2 * self.len - 1,
            delay_steps: 2 * self.delay_steps,
        }
    }

    fn nearest_index(&self, t: f64) -> usize {
        let i = ((t - self.t_minus) / self.dt).round();
        i.clamp(0.0, (self.len - 1) as f64) as usize
    }
}

/// Profile to the left of the mesh.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LeftTail {
    /// `x(t) = amplitude * exp(rate t)`.
    Exponential { amplitude: f64, rate: f64 },
    Constant { value: f64 },
}

impl LeftTail {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Self::Exponential { amplitude, rate } => amplitude * (rate * t).exp(),
            Self::Constant { value } => value,
        }
    }
}

/// Profile to the right of the mesh.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RightTail {
    Constant { value: f64 },
    /// `x(t) = amplitude * exp(rate t)`, `rate < mu`.
    Exponential { amplitude: f64, rate: f64 },
}

impl RightTail {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Self::Constant { value } => value,
            Self::Exponential { amplitude, rate } => amplitude * (rate * t).exp(),
        }
    }
}

/// `J_k(beta) = int_0^1 exp(beta v) v^k dv` for `k = 0..=3`.
fn exp_moments(beta: f64) -> [f64; 4] {
    let mut j = [0.0; 4];
    if beta.abs() < 2.0 {
        for (k, jk) in j.iter_mut().enumerate() {
            let mut term = 1.0;
            let mut sum = 0.0;
            for n in 0..60 {
                let add = term / (n + k + 1) as f64;
                sum += add;
                if add.abs() < 1e-18 * sum.abs() {
                    break;
                }
                term *= beta / (n + 1) as f64;
            }
            *jk = sum;
        }
    } else {
        let e = beta.exp();
        j[0] = (e - 1.0) / beta;
        for k in 1..4 {
            j[k] = (e - k as f64 * j[k - 1]) / beta;
        }
    }
    j
}

/// Power-basis coefficients of the cubic Lagrange basis on nodes -1, 0, 1, 2.
const LAGRANGE: [[f64; 4]; 4] = [
    [0.0, -1.0 / 3.0, 0.5, -1.0 / 6.0],
    [1.0, -0.5, -1.0, 0.5],
    [0.0, 1.0, 0.5, -0.5],
    [0.0, -1.0 / 6.0, 0.0, 1.0 / 6.0],
];

/// Weights `w_k = int_0^1 exp(beta v) l_k(v) dv`.
fn kernel_weights(beta: f64) -> [f64; 4] {
    let j = exp_moments(beta);
    let mut w = [0.0; 4];
    for (k, wk) in w.iter_mut().enumerate() {
        *wk = (0..4).map(|m| LAGRANGE[k][m] * j[m]).sum();
    }
    w
}

/// Everything `A` needs besides the profile values.
#[derive(Debug, Clone, Copy)]
pub struct OperatorSetup<'a> {
    pub mesh: &'a Mesh,
    pub left: LeftTail,
    pub right: RightTail,
    pub epsilon: f64,
    /// Slope used for the closed-form exponential tails, `g(x) ~ slope x`.
    pub slope: f64,
}

/// `(A x, (A x)')` on the mesh for the nonlinearity `g`.
fn operator<F: Fn(f64) -> f64>(x: &[f64], s: &OperatorSetup, g: F) -> Result<(Vec<f64>, Vec<f64>)> {
    let mesh = s.mesh;
    if x.len() != mesh.len {
        return Err(Error::GridError(format!(
            "profile has {} values, mesh has {}",
            x.len(),
            mesh.len
        )));
    }
    let q = quad_roots(s.epsilon);
    let (lam, mu) = (q.lambda_neg, q.mu_pos);
    let (n, d, dt) = (mesh.len, mesh.delay_steps, mesh.dt);
    let last = n - 1 + d; // index of t_plus + h

    // G on indices -1 ..= last + 2, stored with offset 1
    let gcount = last + 4;
    let mut gv = Vec::with_capacity(gcount);
    for jj in 0..gcount {
        let j = jj as isize - 1;
        let src = j - d as isize;
        let xv = if src < 0 {
            s.left.value(mesh.t_minus + dt * src as f64)
        } else if src as usize >= n {
            s.right.value(mesh.t_minus + dt * src as f64)
        } else {
            x[src as usize]
        };
        gv.push(g(xv));
    }
    let gat = |j: usize| &gv[j..j + 4]; // nodes j-1 .. j+2

    // left integral, forward
    let wl = kernel_weights(-lam * dt);
    let decay_l = (lam * dt).exp();
    let mut il = vec![0.0; n];
    il[0] = match s.left {
        LeftTail::Exponential { amplitude, rate } => {
            if !(rate > lam) {
                return Err(Error::GridError("left tail rate must exceed lambda".into()));
            }
            s.slope * amplitude * (-rate * mesh.delay()).exp() * (rate * mesh.t_minus).exp()
                / (rate - lam)
        }
        LeftTail::Constant { value } => g(value) / (-lam),
    };
    for i in 1..n {
        let gs = gat(i - 1);
        let seg: f64 = (0..4).map(|k| wl[k] * gs[k]).sum();
        il[i] = decay_l * (il[i - 1] + dt * seg);
    }

    // right integral, backward from t_plus + h
    let wr = kernel_weights(-mu * dt);
    let decay_r = (-mu * dt).exp();
    let t_end = mesh.t_minus + dt * last as f64;
    let mut ir = match s.right {
        RightTail::Constant { value } => g(value) / mu,
        RightTail::Exponential { amplitude, rate } => {
            if !(rate < mu) {
                return Err(Error::GridError("right tail rate must be below mu".into()));
            }
            s.slope * amplitude * (-rate * mesh.delay()).exp() * (rate * t_end).exp() / (mu - rate)
        }
    };
    let mut ir_mesh = vec![0.0; n];
    if last < n {
        ir_mesh[last] = ir;
    }
    for j in (0..last).rev() {
        let gs = gat(j);
        let seg: f64 = (0..4).map(|k| wr[k] * gs[k]).sum();
        ir = decay_r * ir + dt * seg;
        if j < n {
            ir_mesh[j] = ir;
        }
    }

    let scale = 1.0 / (s.epsilon * (mu - lam));
    let ax = il.iter().zip(&ir_mesh).map(|(a, b)| scale * (a + b)).collect();
    let dax = il
        .iter()
        .zip(&ir_mesh)
        .map(|(a, b)| scale * (lam * a + mu * b))
        .collect();
    Ok((ax, dax))
}

/// `A x` on the mesh. `p.a` is the slope `g'(0+)` used for exponential tails.
pub fn apply_a(
    x: &[f64],
    mesh: &Mesh,
    left: LeftTail,
    right: RightTail,
    g: &BirthFunction,
    p: &CharParams,
) -> Result<Vec<f64>> {
    let setup = OperatorSetup {
        mesh,
        left,
        right,
        epsilon: p.epsilon,
        slope: p.a,
    };
    Ok(operator(x, &setup, |v| g.value(v))?.0)
}

/// The linear operator `L` obtained from `A` with `g(x) = p.a * x`.
pub fn apply_linear(
    x: &[f64],
    mesh: &Mesh,
    left: LeftTail,
    right: RightTail,
    p: &CharParams,
) -> Result<Vec<f64>> {
    let setup = OperatorSetup {
        mesh,
        left,
        right,
        epsilon: p.epsilon,
        slope: p.a,
    };
    Ok(operator(x, &setup, |v| p.a * v)?.0)
}

/// Derivative `(A x)'` on the mesh, exact for the interpolated `G`.
pub fn apply_a_derivative(
    x: &[f64],
    mesh: &Mesh,
    left: LeftTail,
    right: RightTail,
    g: &BirthFunction,
    p: &CharParams,
) -> Result<Vec<f64>> {
    let setup = OperatorSetup {
        mesh,
        left,
        right,
        epsilon: p.epsilon,
        slope: p.a,
    };
    Ok(operator(x, &setup, |v| g.value(v))?.1)
}

/// `phi-(t) = delta (e^{l1 t} - e^{l2 t})` for `t <= 0` (else 0) and
/// `phi+(t) = delta e^{l1 t}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConeBounds {
    pub delta: f64,
    pub lambda1: f64,
    pub lambda2: f64,
}

impl ConeBounds {
    pub fn lower(&self, t: f64) -> f64 {
        if t > 0.0 {
            0.0
        } else {
            self.delta * ((self.lambda1 * t).exp() - (self.lambda2 * t).exp())
        }
    }

    pub fn upper(&self, t: f64) -> f64 {
        self.delta * (self.lambda1 * t).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iters: usize,
    pub dt_max: f64,
    /// Initial relaxation; halved whenever the residual grows.
    pub omega: f64,
    pub omega_min: f64,
    /// Overrides for the truncation points.
    pub t_minus: Option<f64>,
    pub t_plus: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iters: 10_000,
            dt_max: 0.05,
            omega: 1.0,
            omega_min: 1.0 / 64.0,
            t_minus: None,
            t_plus: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaveProfile {
    pub c: f64,
    pub h: f64,
    pub epsilon: f64,
    pub mesh: Mesh,
    pub values: Vec<f64>,
    pub tail_left: LeftTail,
    pub tail_right: RightTail,
    /// Fixed-point residual on the mesh at exit.
    pub iteration_residual: f64,
    /// `sup |A x - x|` recomputed on a mesh of half the step.
    pub residual_sup: f64,
    pub iterations: usize,
    pub converged: bool,
    pub kappa: f64,
    pub a0: f64,
    pub cone: ConeBounds,
    pub zeta1: f64,
    pub zeta2: f64,
    pub g_max: f64,
    pub warnings: Vec<String>,
}

impl WaveProfile {
    pub fn times(&self) -> Vec<f64> {
        self.mesh.times()
    }

    pub fn params(&self) -> CharParams {
        CharParams {
            a: self.a0,
            h: self.h,
            epsilon: self.epsilon,
        }
    }

    /// `t,x` rows with a header, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,x\n");
        for (i, v) in self.values.iter().enumerate() {
            out.push_str(&format!("{:.16e},{:.16e}\n", self.mesh.t(i), v));
        }
        out
    }

    /// Centered-difference slopes on the interior of the mesh.
    pub fn slopes(&self) -> Vec<f64> {
        let dt = self.mesh.dt;
        self.values
            .windows(3)
            .map(|w| (w[2] - w[0]) / (2.0 * dt))
            .collect()
    }

    /// `max g / (eps (mu - lambda))`, the bound on `|(A x)'|`.
    pub fn derivative_bound(&self) -> f64 {
        let q = quad_roots(self.epsilon);
        self.g_max / (self.epsilon * (q.mu_pos - q.lambda_neg))
    }
}

fn choose_delta(g: &BirthFunction, a0: f64, kappa: f64) -> f64 {
    if let BirthFunction::PiecewiseLinearCap { delta, .. } = *g {
        return delta;
    }
    let mut delta = 0.01 * kappa;
    for _ in 0..60 {
        let ok = (1..=100).all(|i| {
            let x = delta * i as f64 / 100.0;
            (g.value(x) - a0 * x).abs() <= 0.05 * a0 * x
        });
        if ok {
            break;
        }
        delta *= 0.5;
    }
    delta
}

/// Solves `x = A x` by damped Picard iteration from the cone's upper bound
/// capped at `kappa`. Non-convergence is reported through `converged`.
pub fn solve_profile(g: &BirthFunction, h: f64, c: f64, cfg: &SolverConfig) -> Result<WaveProfile> {
    if !(h >= 0.0 && h.is_finite()) {
        return Err(Error::DomainError(format!("delay h must be >= 0, got {h}")));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::DomainError(format!("speed must be > 0, got {c}")));
    }
    let report = analyze_structure(g)?;
    let a0 = report.a0_plus;
    let ms = minimal_speed(a0, h)?;
    let epsilon = 1.0 / (c * c);
    if epsilon >= ms.epsilon0 {
        return Err(Error::SpeedBelowMinimal {
            c,
            c_star: ms.c_star,
        });
    }
    let p = CharParams::new(a0, h, epsilon)?;
    let pair = real_root_pair(&p)?.pair().ok_or(Error::SpeedBelowMinimal {
        c,
        c_star: ms.c_star,
    })?;
    let (l1, l2) = (pair.lambda1, pair.lambda2);
    let kappa = report.kappa;
    let delta = choose_delta(g, a0, kappa);
    let cone = ConeBounds {
        delta,
        lambda1: l1,
        lambda2: l2,
    };

    let mut warnings = Vec::new();
    if let Ok(si) = speed_interval(&report, h) {
        if !si.admits(c) {
            warnings.push(format!(
                "c = {c} lies outside the proven speed interval (upper {:?})",
                si.upper
            ));
        }
    }

    let t_minus = cfg.t_minus.unwrap_or((-40.0 / l1).max(-400.0));
    // keeps the trailing third of the mesh clear of the transition layer
    let t_plus = cfg.t_plus.unwrap_or(40.0 * h + 40.0 - 0.5 * t_minus);
    let mesh = Mesh::new(h, t_minus, t_plus, cfg.dt_max)?;
    if l2 * mesh.dt > 5.0 {
        warnings.push(format!(
            "stiff mesh: lambda2 * dt = {:.3} > 5; results may be inaccurate",
            l2 * mesh.dt
        ));
    }
    let left = LeftTail::Exponential {
        amplitude: delta,
        rate: l1,
    };
    let right = RightTail::Constant { value: kappa };
    let setup = OperatorSetup {
        mesh: &mesh,
        left,
        right,
        epsilon,
        slope: a0,
    };
    let bound = 1.1 * report.zeta2.max(kappa);
    let gfun = |v: f64| g.value(v);

    let mut x: Vec<f64> = mesh.times().iter().map(|&t| cone.upper(t).min(kappa)).collect();
    let mut omega = cfg.omega.clamp(cfg.omega_min, 1.0);
    let mut prev_res = f64::INFINITY;
    let mut res = f64::INFINITY;
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        let (ax, _) = operator(&x, &setup, gfun)?;
        iterations += 1;
        res = 0.0;
        for (i, (&a, &v)) in ax.iter().zip(&x).enumerate() {
            if !(a >= -1e-12 && a <= bound) {
                return Err(Error::DivergedOutOfCone { bound, t: mesh.t(i) });
            }
            res = f64::max(res, (a - v).abs());
        }
        if res < cfg.tol {
            x = ax;
            break;
        }
        if res > prev_res {
            omega = (0.5 * omega).max(cfg.omega_min);
        }
        prev_res = res;
        for (v, a) in x.iter_mut().zip(&ax) {
            *v = ((1.0 - omega) * *v + omega * a).max(0.0);
        }
    }
    let converged = res < cfg.tol;
    let residual_sup = refined_residual(&x, &setup, gfun)?;

    let mut profile = WaveProfile {
        c,
        h,
        epsilon,
        mesh,
        values: x,
        tail_left: left,
        tail_right: right,
        iteration_residual: res,
        residual_sup,
        iterations,
        converged,
        kappa,
        a0,
        cone,
        zeta1: report.zeta1,
        zeta2: report.zeta2,
        g_max: report.g_max,
        warnings,
    };
    normalize_phase(&mut profile);
    Ok(profile)
}

/// Cubic midpoint interpolation onto the half-step mesh.
fn refine_values(x: &[f64], mesh: &Mesh, left: &LeftTail, right: &RightTail) -> Vec<f64> {
    let n = x.len();
    let at = |i: isize| -> f64 {
        if i < 0 {
            left.value(mesh.t_minus + mesh.dt * i as f64)
        } else if i as usize >= n {
            right.value(mesh.t_minus + mesh.dt * i as f64)
        } else {
            x[i as usize]
        }
    };
    let mut out = Vec::with_capacity(2 * n - 1);
    for i in 0..n {
        out.push(x[i]);
        if i + 1 < n {
            let k = i as isize;
            out.push((-at(k - 1) + 9.0 * at(k) + 9.0 * at(k + 1) - at(k + 2)) / 16.0);
        }
    }
    out
}

fn refined_residual<F: Fn(f64) -> f64>(x: &[f64], setup: &OperatorSetup, g: F) -> Result<f64> {
    let fine_mesh = setup.mesh.refined();
    let fine = refine_values(x, setup.mesh, &setup.left, &setup.right);
    let fine_setup = OperatorSetup {
        mesh: &fine_mesh,
        ..*setup
    };
    let (ax, _) = operator(&fine, &fine_setup, g)?;
    Ok(ax
        .iter()
        .zip(&fine)
        .map(|(a, v)| (a - v).abs())
        .fold(0.0, f64::max))
}

/// Shifts time so that the first upward crossing of `kappa/2` sits at `t = 0`.
fn normalize_phase(w: &mut WaveProfile) {
    let level = 0.5 * w.kappa;
    let Some(i) = w.values.windows(2).position(|p| p[0] < level && p[1] >= level) else {
        return;
    };
    let (x0, x1) = (w.values[i], w.values[i + 1]);
    let tc = w.mesh.t(i) + w.mesh.dt * (level - x0) / (x1 - x0);
    w.mesh.t_minus -= tc;
    if let LeftTail::Exponential { amplitude, rate } = w.tail_left {
        w.tail_left = LeftTail::Exponential {
            amplitude: amplitude * (rate * tc).exp(),
            rate,
        };
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Exponent {
    Lambda1,
    Lambda2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticsReport {
    pub fitted_rate: f64,
    pub r_squared: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub nearest: Exponent,
    pub relative_gap: f64,
    pub passes: bool,
    pub window: (f64, f64),
}

/// Least-squares slope of `ln x` against `t` over the first decade of values
/// (from the left) lying in `(1e-300, cutoff)`.
pub fn fit_left_rate(t: &[f64], x: &[f64], cutoff: f64) -> Result<(f64, f64, (f64, f64))> {
    let start = x
        .iter()
        .position(|&v| v > 1e-300 && v < cutoff)
        .ok_or_else(|| Error::InsufficientTail("no values below the cutoff".into()))?;
    let x0 = x[start];
    let mut end = start;
    while end + 1 < x.len() && x[end + 1] < cutoff && x[end + 1] > 1e-300 && x[end] < 10.0 * x0 {
        end += 1;
    }
    if end - start + 1 < 10 || x[end] < 10.0 * x0 {
        return Err(Error::InsufficientTail(format!(
            "left tail spans {} points and a factor {:.3}",
            end - start + 1,
            x[end] / x0
        )));
    }
    let ts = &t[start..=end];
    let ys: Vec<f64> = x[start..=end].iter().map(|v| v.ln()).collect();
    let fit = fit_line(ts, &ys).ok_or_else(|| Error::InsufficientTail("degenerate fit".into()))?;
    Ok((fit.slope, fit.r_squared, (ts[0], ts[ts.len() - 1])))
}

pub fn check_asymptotics(w: &WaveProfile) -> Result<AsymptoticsReport> {
    let (rate, r2, window) = fit_left_rate(&w.times(), &w.values, 0.1 * w.cone.delta)?;
    let (l1, l2) = (w.cone.lambda1, w.cone.lambda2);
    let (nearest, target) = if (rate - l1).abs() <= (rate - l2).abs() {
        (Exponent::Lambda1, l1)
    } else {
        (Exponent::Lambda2, l2)
    };
    let gap = (rate - target).abs() / target;
    Ok(AsymptoticsReport {
        fitted_rate: rate,
        r_squared: r2,
        lambda1: l1,
        lambda2: l2,
        nearest,
        relative_gap: gap,
        passes: gap < 1e-2,
        window,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TailClass {
    MonotoneApproach,
    OscillatoryAboutKappa,
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailReport {
    /// `OscillatoryAboutKappa` when the linearization at `kappa` has no root
    /// in `(-inf, 0)` or on the imaginary axis, `Undetermined` otherwise.
    pub predicted: TailClass,
    pub observed: TailClass,
    pub crossings: usize,
    pub gamma: f64,
    /// False when an oscillation was predicted but not seen.
    pub consistent: bool,
}

/// Sign changes of `x - kappa`, ignoring values within `tol` of `kappa`.
pub fn count_crossings(values: &[f64], kappa: f64, tol: f64) -> usize {
    let mut last = 0i8;
    let mut n = 0;
    for &v in values {
        let d = v - kappa;
        if d.abs() <= tol {
            continue;
        }
        let s = if d > 0.0 { 1 } else { -1 };
        if last != 0 && s != last {
            n += 1;
        }
        last = s;
    }
    n
}

pub fn classify_tail(w: &WaveProfile, g: &BirthFunction, h: f64) -> TailReport {
    use crate::charroots::{imaginary_axis_roots, negative_real_roots};
    let gamma = g.derivative(w.kappa, 1);
    let predicted = match CharParams::new(gamma, h, w.epsilon) {
        Ok(p) => {
            let omega_max = 2.0 * (1.0 + (1.0 + gamma.abs()) / w.epsilon);
            if negative_real_roots(&p).is_empty() && imaginary_axis_roots(&p, omega_max).is_empty() {
                TailClass::OscillatoryAboutKappa
            } else {
                TailClass::Undetermined
            }
        }
        Err(_) => TailClass::Undetermined,
    };

    let n = w.values.len();
    let tail = &w.values[n / 2..];
    let crossings = count_crossings(tail, w.kappa, 1e-7 * w.kappa);
    let last = &w.values[n - (n / 10).max(1)..];
    let mean = last.iter().sum::<f64>() / last.len() as f64;
    let observed = if crossings >= 2 {
        TailClass::OscillatoryAboutKappa
    } else if (mean - w.kappa).abs() <= 1e-3 * w.kappa {
        TailClass::MonotoneApproach
    } else {
        TailClass::Undetermined
    };
    let consistent =
        predicted != TailClass::OscillatoryAboutKappa || observed == TailClass::OscillatoryAboutKappa;
    TailReport {
        predicted,
        observed,
        crossings,
        gamma,
        consistent,
    }
}

/// 4-point Gauss–Legendre nodes and weights on `[-1, 1]`.
const GL_NODES: [f64; 4] = [
    -0.861_136_311_594_052_6,
    -0.339_981_043_584_856_3,
    0.339_981_043_584_856_3,
    0.861_136_311_594_052_6,
];
const GL_WEIGHTS: [f64; 4] = [
    0.347_854_845_137_453_9,
    0.652_145_154_862_546_1,
    0.652_145_154_862_546_1,
    0.347_854_845_137_453_9,
];

/// Residual of the variation-of-constants identity between the mesh points
/// nearest to `a_pt < b_pt`:
///
/// ```text
/// x(b) = xi(L) [x(a) + 1/(eps (mu - lambda)) int_a^b (e^{lambda (a-u)} - e^{mu (a-u)}) G(u) du]
///        + (1 - xi(L) e^{-mu L}) x'(b) / mu,       L = b - a.
/// ```
///
/// The last term vanishes at a true extremum; keeping it with a finite
/// difference estimate of `x'(b)` makes the check insensitive to where the
/// extremum falls between mesh points. `b` must be a discrete local extremum.
/// Integrals use Gauss–Legendre on each mesh cell with a cubic interpolant of
/// `x`, independent of the quadrature inside `A`.
pub fn voc_identity_check(w: &WaveProfile, g: &BirthFunction, h: f64, a_pt: f64, b_pt: f64) -> Result<f64> {
    let mesh = &w.mesh;
    let (ia, ib) = (mesh.nearest_index(a_pt), mesh.nearest_index(b_pt));
    if ib < 2 || ib + 2 >= w.values.len() || ia >= ib {
        return Err(Error::NotAnExtremum(ib));
    }
    let x = &w.values;
    let is_max = x[ib] >= x[ib - 1] && x[ib] >= x[ib + 1];
    let is_min = x[ib] <= x[ib - 1] && x[ib] <= x[ib + 1];
    if !(is_max || is_min) {
        return Err(Error::NotAnExtremum(ib));
    }
    let q = quad_roots(w.epsilon);
    let (lam, mu) = (q.lambda_neg, q.mu_pos);
    let (a, b) = (mesh.t(ia), mesh.t(ib));
    let len = b - a;
    let dt = mesh.dt;

    let sample = |i: isize| -> f64 {
        if i < 0 {
            w.tail_left.value(mesh.t_minus + dt * i as f64)
        } else if i as usize >= x.len() {
            w.tail_right.value(mesh.t_minus + dt * i as f64)
        } else {
            x[i as usize]
        }
    };
    // cubic interpolation of x at arbitrary t
    let interp = |t: f64| -> f64 {
        let s = (t - mesh.t_minus) / dt;
        let j = s.floor();
        let v = s - j;
        let j = j as isize;
        let basis = [
            (-v * v * v + 3.0 * v * v - 2.0 * v) / 6.0,
            (v * v * v - 2.0 * v * v - v + 2.0) / 2.0,
            -(v * v * v - v * v - 2.0 * v) / 2.0,
            (v * v * v - v) / 6.0,
        ];
        (0..4).map(|k| basis[k] * sample(j - 1 + k as isize)).sum()
    };

    let mut integral = 0.0;
    for cell in ia..ib {
        let (u0, u1) = (mesh.t(cell), mesh.t(cell + 1));
        let (mid, half) = (0.5 * (u0 + u1), 0.5 * (u1 - u0));
        for (node, weight) in GL_NODES.iter().zip(GL_WEIGHTS) {
            let u = mid + half * node;
            let gu = g.value(interp(u - h));
            integral += weight * half * ((lam * (a - u)).exp() - (mu * (a - u)).exp()) * gu;
        }
    }
    let k = xi(len, 1.0 / w.epsilon.sqrt());
    let slope_b = (x[ib - 2] - 8.0 * x[ib - 1] + 8.0 * x[ib + 1] - x[ib + 2]) / (12.0 * dt);
    let predicted = k * (x[ia] + integral / (w.epsilon * (mu - lam)))
        + (1.0 - k * (-mu * len).exp()) * slope_b / mu;
    Ok((x[ib] - predicted).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_match_both_branches() {
        for beta in [-1.999, 1.999, -2.001, 2.001] {
            let j = exp_moments(beta);
            // J_0 closed form
            assert!((j[0] - (beta.exp() - 1.0) / beta).abs() < 1e-13);
            // J_1 = (e^b (b - 1) + 1) / b^2
            let j1 = (beta.exp() * (beta - 1.0) + 1.0) / (beta * beta);
            assert!((j[1] - j1).abs() < 1e-12, "beta {beta}");
        }
        let j = exp_moments(0.0);
        for k in 0..4 {
            assert!((j[k] - 1.0 / (k + 1) as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn weights_integrate_cubics() {
        // exp(beta v) * v^3 has integral J_3; interpolate v^3 at -1,0,1,2 exactly
        let beta = -0.7;
        let w = kernel_weights(beta);
        let nodes = [-1.0f64, 0.0, 1.0, 2.0];
        let got: f64 = (0..4).map(|k| w[k] * nodes[k].powi(3)).sum();
        assert!((got - exp_moments(beta)[3]).abs() < 1e-14);
    }

    fn const_setup(kappa: f64, eps: f64, h: f64) -> (Mesh, LeftTail, RightTail, CharParams) {
        let mesh = Mesh::new(h, -20.0, 20.0, 0.05).unwrap();
        (
            mesh,
            LeftTail::Constant { value: kappa },
            RightTail::Constant { value: kappa },
            CharParams::new(2.0, h, eps).unwrap(),
        )
    }

    #[test]
    fn constant_kappa_is_fixed() {
        let g = BirthFunction::nicholson(std::f64::consts::E.powi(2)).unwrap();
        let (mesh, l, r, p) = const_setup(2.0, 0.2, 1.0);
        let x = vec![2.0; mesh.len];
        let ax = apply_a(&x, &mesh, l, r, &g, &p).unwrap();
        assert!(ax.iter().all(|v| (v - 2.0).abs() < 1e-12));
    }

    #[test]
    fn zero_is_fixed() {
        let g = BirthFunction::nicholson(2.0).unwrap();
        let (mesh, _, _, p) = const_setup(0.0, 0.3, 0.7);
        let x = vec![0.0; mesh.len];
        let z = LeftTail::Constant { value: 0.0 };
        let ax = apply_a(&x, &mesh, z, RightTail::Constant { value: 0.0 }, &g, &p).unwrap();
        assert!(ax.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mesh_mismatch_is_grid_error() {
        let g = BirthFunction::nicholson(2.0).unwrap();
        let (mesh, l, r, p) = const_setup(1.0, 0.3, 1.0);
        assert!(matches!(
            apply_a(&[1.0; 5], &mesh, l, r, &g, &p),
            Err(Error::GridError(_))
        ));
        assert!(Mesh::with_step(1.0, 0.0, 0.3, 100).is_err());
    }

    #[test]
    fn crossings_counter() {
        assert_eq!(count_crossings(&[1.0; 10], 1.0, 1e-9), 0);
        assert_eq!(count_crossings(&[0.5, 1.5, 0.8, 1.2], 1.0, 1e-9), 3);
        assert_eq!(count_crossings(&[0.5, 1.0, 0.5], 1.0, 1e-9), 0);
    }

    #[test]
    fn synthetic_tail_fits() {
        let t: Vec<f64> = (0..2000).map(|i| -100.0 + 0.05 * i as f64).collect();
        let x: Vec<f64> = t.iter().map(|&s| (0.5 * s).exp()).collect();
        let (rate, _, _) = fit_left_rate(&t, &x, 1e-3).unwrap();
        assert!((rate - 0.5).abs() < 1e-12);
        let x: Vec<f64> = t.iter().map(|&s| (0.5 * s).exp() + (0.9 * s).exp()).collect();
        let (rate, _, _) = fit_left_rate(&t, &x, 1e-3).unwrap();
        assert!((rate - 0.5).abs() < 1e-6);
        assert!(matches!(
            fit_left_rate(&t[..5], &x[..5], 1.0),
            Err(Error::InsufficientTail(_))
        ));
    }
}
