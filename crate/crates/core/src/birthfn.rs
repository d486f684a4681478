//! Birth functions `g`, their derivatives and the structural hypotheses the
//! wavefront theory relies on:
//!
//! * **H**: `g` unimodal with maximum at `x_M`, exactly two fixed points `0`
//!   and `kappa`, `1 < g'(0+) < inf`, and negative Schwarzian derivative on
//!   the permanence interval `[zeta1, zeta2]` away from `x_M`.
//! * **L**: `g(x) = p x` on some `[0, delta)` and `g(x) <= p x` everywhere.
//! * **B**: the weaker permanence conditions on `[zeta1, zeta2]`.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::numeric::{bisect, golden_max, linspace};
use crate::{Error, Result};

/// Number of subintervals used by every grid scan in this module.
const SCAN_INTERVALS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BirthKind {
    Nicholson,
    MackeyGlass,
    PiecewiseLinearCap,
    UserTabulated,
}

/// Monotone piecewise-cubic (Fritsch–Carlson) interpolant through tabulated
/// `(x, g(x))` pairs. Constant extension past the last knot.
#[derive(Debug, Clone, PartialEq)]
pub struct Tabulated {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl Tabulated {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 3 {
            return Err(Error::Tabulation(
                "need at least three (x, y) pairs of equal length".into(),
            ));
        }
        if xs[0] != 0.0 || ys[0] != 0.0 {
            return Err(Error::Tabulation("table must start at (0, 0)".into()));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Tabulation("x values must be strictly increasing".into()));
        }
        if ys.iter().any(|y| !(y.is_finite() && *y >= 0.0)) {
            return Err(Error::Tabulation("g values must be finite and >= 0".into()));
        }
        let n = xs.len();
        let secants: Vec<f64> = (0..n - 1)
            .map(|i| (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]))
            .collect();
        let mut slopes = vec![0.0; n];
        slopes[0] = secants[0];
        slopes[n - 1] = secants[n - 2];
        for i in 1..n - 1 {
            let (s0, s1) = (secants[i - 1], secants[i]);
            if s0 * s1 <= 0.0 {
                slopes[i] = 0.0;
            } else {
                // weighted harmonic mean (Fritsch–Butland)
                let h0 = xs[i] - xs[i - 1];
                let h1 = xs[i + 1] - xs[i];
                let w1 = 2.0 * h1 + h0;
                let w2 = h1 + 2.0 * h0;
                slopes[i] = (w1 + w2) / (w1 / s0 + w2 / s1);
            }
        }
        Ok(Self { xs, ys, slopes })
    }

    pub fn knots(&self) -> (&[f64], &[f64]) {
        (&self.xs, &self.ys)
    }

    fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let i = match self.xs.binary_search_by(|k| k.partial_cmp(&x).unwrap()) {
            Ok(i) => return self.ys[i],
            Err(i) => i - 1,
        };
        let h = self.xs[i + 1] - self.xs[i];
        let s = (x - self.xs[i]) / h;
        let (y0, y1) = (self.ys[i], self.ys[i + 1]);
        let (d0, d1) = (self.slopes[i] * h, self.slopes[i + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * d0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * d1
    }
}

/// The nonlinearity `g` of `u_t = u_xx - u + g(u(t - h, x))`.
#[derive(Debug, Clone, PartialEq)]
pub enum BirthFunction {
    /// `g(u) = p u exp(-u)`.
    Nicholson { p: f64 },
    /// `g(u) = p u / (1 + u^n)`, `n > 1`.
    MackeyGlass { p: f64, n: f64 },
    /// `g(u) = p min(u, delta)`: linear near zero with slope `p > 1`, capped.
    PiecewiseLinearCap { p: f64, delta: f64 },
    UserTabulated(Tabulated),
}

impl BirthFunction {
    pub fn nicholson(p: f64) -> Result<Self> {
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::DomainError(format!("Nicholson needs p > 0, got {p}")));
        }
        Ok(Self::Nicholson { p })
    }

    pub fn mackey_glass(p: f64, n: f64) -> Result<Self> {
        if !(p > 0.0 && p.is_finite() && n > 1.0 && n.is_finite()) {
            return Err(Error::DomainError(format!(
                "Mackey-Glass needs p > 0 and n > 1, got p = {p}, n = {n}"
            )));
        }
        Ok(Self::MackeyGlass { p, n })
    }

    pub fn piecewise_linear_cap(p: f64, delta: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite() && delta > 0.0 && delta.is_finite()) {
            return Err(Error::DomainError(format!(
                "piecewise-linear cap needs p > 1 and delta > 0, got p = {p}, delta = {delta}"
            )));
        }
        Ok(Self::PiecewiseLinearCap { p, delta })
    }

    pub fn tabulated(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        Ok(Self::UserTabulated(Tabulated::new(xs, ys)?))
    }

    pub fn kind(&self) -> BirthKind {
        match self {
            Self::Nicholson { .. } => BirthKind::Nicholson,
            Self::MackeyGlass { .. } => BirthKind::MackeyGlass,
            Self::PiecewiseLinearCap { .. } => BirthKind::PiecewiseLinearCap,
            Self::UserTabulated(_) => BirthKind::UserTabulated,
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match self {
            Self::Nicholson { p } => vec![*p],
            Self::MackeyGlass { p, n } => vec![*p, *n],
            Self::PiecewiseLinearCap { p, delta } => vec![*p, *delta],
            Self::UserTabulated(_) => Vec::new(),
        }
    }

    /// Highest derivative available in closed form.
    pub fn derivative_order(&self) -> usize {
        match self {
            Self::UserTabulated(_) => 0,
            _ => 3,
        }
    }

    /// `d^order g / dx^order` at `x >= 0`.
    pub fn eval(&self, x: f64, order: usize) -> Result<f64> {
        if order > self.derivative_order() {
            return Err(Error::UnsupportedDerivative {
                requested: order,
                available: self.derivative_order(),
            });
        }
        if !(x >= 0.0) {
            return Err(Error::DomainError(format!("g evaluated at x = {x} < 0")));
        }
        Ok(self.eval_unchecked(x, order))
    }

    /// `g(x)` for `x >= 0`; negative or NaN inputs are clamped to 0.
    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        self.eval_unchecked(x.max(0.0), 0)
    }

    fn eval_unchecked(&self, x: f64, order: usize) -> f64 {
        match *self {
            Self::Nicholson { p } => {
                let e = (-x).exp();
                match order {
                    0 => p * x * e,
                    1 => p * (1.0 - x) * e,
                    2 => p * (x - 2.0) * e,
                    _ => p * (3.0 - x) * e,
                }
            }
            Self::MackeyGlass { p, n } => {
                let xn = x.powf(n);
                let d = 1.0 + xn;
                let d2 = d * d;
                match order {
                    0 => p * x / d,
                    1 => p * (1.0 - (n - 1.0) * xn) / d2,
                    2 => {
                        p * (-n * (n + 1.0) * x.powf(n - 1.0) / d2
                            + 2.0 * n * n * x.powf(2.0 * n - 1.0) / (d2 * d))
                    }
                    _ => {
                        let n3 = n * n * n;
                        p * (-n * (n - 1.0) * (n + 1.0) * x.powf(n - 2.0) / d2
                            + 6.0 * n3 * x.powf(2.0 * n - 2.0) / (d2 * d)
                            - 6.0 * n3 * x.powf(3.0 * n - 2.0) / (d2 * d2))
                    }
                }
            }
            Self::PiecewiseLinearCap { p, delta } => match order {
                0 => p * x.min(delta),
                1 => {
                    if x < delta {
                        p
                    } else {
                        0.0
                    }
                }
                _ => 0.0,
            },
            Self::UserTabulated(ref t) => t.eval(x),
        }
    }

    /// Right derivative `g'(0+)`. Closed form for built-ins, end slope of the
    /// interpolant for tabulated data.
    pub fn slope_at_zero(&self) -> f64 {
        match self {
            Self::UserTabulated(t) => t.slopes[0],
            _ => self.eval_unchecked(0.0, 1),
        }
    }

    /// Derivative of order 1..=3 at `x`: exact where available, otherwise a
    /// 5-point finite difference (one-sided near zero).
    pub fn derivative(&self, x: f64, order: usize) -> f64 {
        if order <= self.derivative_order() {
            return self.eval_unchecked(x.max(0.0), order);
        }
        finite_difference(|s| self.value(s), x, order)
    }

    /// Schwarzian derivative `g'''/g' - 1.5 (g''/g')^2`.
    pub fn schwarzian(&self, x: f64) -> Result<f64> {
        if self.derivative_order() < 3 {
            return Err(Error::UnsupportedDerivative {
                requested: 3,
                available: self.derivative_order(),
            });
        }
        let d1 = self.eval(x, 1)?;
        if d1.abs() < 1e-12 {
            return Err(Error::SingularSchwarzian(x));
        }
        let d2 = self.eval(x, 2)?;
        let d3 = self.eval(x, 3)?;
        let r = d2 / d1;
        Ok(d3 / d1 - 1.5 * r * r)
    }

    /// Schwarzian from finite differences; used for tabulated `g`.
    fn schwarzian_fd(&self, x: f64) -> Option<f64> {
        let d1 = self.derivative(x, 1);
        if d1.abs() < 1e-8 {
            return None;
        }
        let r = self.derivative(x, 2) / d1;
        Some(self.derivative(x, 3) / d1 - 1.5 * r * r)
    }
}

fn finite_difference<F: Fn(f64) -> f64>(f: F, x: f64, order: usize) -> f64 {
    let s = match order {
        1 => 1e-4,
        2 => 1e-3,
        _ => 5e-3,
    } * (1.0 + x.abs());
    // shift the stencil right when it would cross zero
    let c = x.max(2.0 * s);
    let (fm2, fm1, f0, fp1, fp2) = (f(c - 2.0 * s), f(c - s), f(c), f(c + s), f(c + 2.0 * s));
    match order {
        1 => (fm2 - 8.0 * fm1 + 8.0 * fp1 - fp2) / (12.0 * s),
        2 => (-fm2 + 16.0 * fm1 - 30.0 * f0 + 16.0 * fp1 - fp2) / (12.0 * s * s),
        _ => (-fm2 + 2.0 * fm1 - 2.0 * fp1 + fp2) / (2.0 * s * s * s),
    }
}

impl fmt::Display for BirthFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Nicholson { p } => write!(f, "nicholson:p={p}"),
            Self::MackeyGlass { p, n } => write!(f, "mackey-glass:p={p},n={n}"),
            Self::PiecewiseLinearCap { p, delta } => write!(f, "plcap:p={p},delta={delta}"),
            Self::UserTabulated(t) => write!(f, "tabulated:knots={}", t.xs.len()),
        }
    }
}

/// Parses `name:key=val,key=val`, e.g. `nicholson:p=7.389`,
/// `mackey-glass:p=2,n=2`, `plcap:p=2,delta=0.1`, `tabulated:file=g.csv`.
impl FromStr for BirthFunction {
    type Err = Error;

    fn from_str(spec: &str) -> Result<Self> {
        let (name, rest) = spec.split_once(':').unwrap_or((spec, ""));
        let mut pairs = Vec::new();
        for item in rest.split(',').filter(|s| !s.trim().is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::DomainError(format!("expected key=value, got '{item}'")))?;
            pairs.push((k.trim().to_ascii_lowercase(), v.trim().to_string()));
        }
        let num = |key: &str| -> Result<f64> {
            let raw = pairs
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v.as_str())
                .ok_or_else(|| Error::DomainError(format!("'{name}' needs parameter '{key}'")))?;
            raw.parse::<f64>()
                .map_err(|_| Error::DomainError(format!("parameter {key}='{raw}' is not a number")))
        };
        match name.trim().to_ascii_lowercase().as_str() {
            "nicholson" => Self::nicholson(num("p")?),
            "mackey-glass" | "mackeyglass" | "mg" => Self::mackey_glass(num("p")?, num("n")?),
            "plcap" | "piecewise-linear-cap" | "piecewiselinearcap" => {
                Self::piecewise_linear_cap(num("p")?, num("delta")?)
            }
            "tabulated" => {
                let path = pairs
                    .iter()
                    .find(|(k, _)| k == "file")
                    .map(|(_, v)| v.clone())
                    .ok_or_else(|| Error::DomainError("tabulated needs file=PATH".into()))?;
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| Error::Tabulation(format!("{path}: {e}")))?;
                let (xs, ys) = parse_table(&text)?;
                Self::tabulated(xs, ys)
            }
            other => Err(Error::DomainError(format!("unknown birth function '{other}'"))),
        }
    }
}

/// Two numeric columns separated by comma or whitespace; non-numeric lines
/// (headers, comments) are skipped.
pub fn parse_table(text: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for line in text.lines() {
        let cols: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        if cols.len() < 2 {
            continue;
        }
        if let (Ok(x), Ok(y)) = (cols[0].parse::<f64>(), cols[1].parse::<f64>()) {
            xs.push(x);
            ys.push(y);
        }
    }
    Ok((xs, ys))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Hypothesis {
    H,
    L,
    B,
}

/// Structural constants of `g` and which hypotheses hold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructureReport {
    pub kappa: f64,
    pub x_m: Option<f64>,
    pub a0_minus: f64,
    pub a0_plus: f64,
    pub gamma: f64,
    pub zeta1: f64,
    pub zeta2: f64,
    pub zeta_star: f64,
    pub zeta_star_upper: f64,
    /// `sup g` over the scan range.
    pub g_max: f64,
    pub schwarzian_negative: bool,
    /// False when the Schwarzian came from finite differences of tabulated data.
    pub schwarzian_reliable: bool,
    pub hypotheses: Vec<Hypothesis>,
    /// Human-readable reasons for every failed check.
    pub notes: Vec<String>,
}

impl StructureReport {
    pub fn holds(&self, h: Hypothesis) -> bool {
        self.hypotheses.contains(&h)
    }
}

#[derive(Debug, PartialEq)]
enum Shape {
    Increasing,
    Unimodal { peak_index: usize },
    Other,
}

fn classify_shape(samples: &[f64]) -> Shape {
    let mut signs = Vec::new();
    for w in samples.windows(2) {
        let tol = 1e-14 * (1.0 + w[0].abs());
        let d = w[1] - w[0];
        let s = if d > tol {
            1
        } else if d < -tol {
            -1
        } else {
            0
        };
        signs.push(s);
    }
    let nonzero: Vec<(usize, i32)> = signs
        .iter()
        .copied()
        .enumerate()
        .filter(|(_, s)| *s != 0)
        .collect();
    let changes: Vec<usize> = nonzero
        .windows(2)
        .filter(|w| w[0].1 != w[1].1)
        .map(|w| w[1].0)
        .collect();
    match (nonzero.first(), changes.len()) {
        (Some((_, 1)), 0) => Shape::Increasing,
        (Some((_, 1)), 1) => Shape::Unimodal {
            peak_index: changes[0],
        },
        _ => Shape::Other,
    }
}

fn scan_grid(hi: f64) -> Vec<f64> {
    linspace(1e-12, hi, SCAN_INTERVALS).collect()
}

fn positive_fixed_point_brackets(g: &BirthFunction, grid: &[f64]) -> Vec<(f64, f64)> {
    let f = |x: f64| g.value(x) - x;
    let mut out = Vec::new();
    let mut prev = f(grid[0]);
    for w in grid.windows(2) {
        let cur = f(w[1]);
        if (prev > 0.0) != (cur > 0.0) {
            out.push((w[0], w[1]));
        }
        prev = cur;
    }
    out
}

/// Image of `[lo, hi]` under `g`, using unimodality when `x_m` is known.
fn interval_image(g: &BirthFunction, x_m: Option<f64>, unimodal: bool, lo: f64, hi: f64) -> (f64, f64) {
    if unimodal || x_m.is_none() {
        let (a, b) = (g.value(lo), g.value(hi));
        let mut top = a.max(b);
        if let Some(m) = x_m {
            if lo <= m && m <= hi {
                top = top.max(g.value(m));
            }
        }
        (a.min(b), top)
    } else {
        let vals: Vec<f64> = linspace(lo, hi, 200).map(|x| g.value(x)).collect();
        let lo_v = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi_v = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo_v, hi_v)
    }
}

/// Locates `kappa`, `x_M`, the permanence interval and the attractor
/// `[zeta_*, zeta^*]` of `g` on it, then decides which hypotheses hold.
pub fn analyze_structure(g: &BirthFunction) -> Result<StructureReport> {
    let a0 = g.slope_at_zero();
    if !(a0 > 1.0) {
        return Err(Error::NoPositiveFixedPoint(a0));
    }
    if !a0.is_finite() {
        return Err(Error::HypothesisHViolated(format!("g'(0+) = {a0} is not finite")));
    }
    let mut notes = Vec::new();

    // widen the scan until it covers the fixed point and the peak with room
    let mut hi = 10.0;
    let (grid, samples, brackets) = loop {
        let grid = scan_grid(hi);
        let samples: Vec<f64> = grid.iter().map(|&x| g.value(x)).collect();
        let brackets = positive_fixed_point_brackets(g, &grid);
        let peak = match classify_shape(&samples) {
            Shape::Unimodal { peak_index } => grid[peak_index],
            _ => 0.0,
        };
        let kappa_guess = brackets.first().map(|b| b.1).unwrap_or(f64::INFINITY);
        let wanted = 10.0 * kappa_guess.max(peak).max(1.0);
        if wanted <= hi * (1.0 + 1e-12) || hi > 1e6 {
            break (grid, samples, brackets);
        }
        hi = wanted.min(hi * 100.0);
    };

    if brackets.is_empty() {
        return Err(Error::HypothesisHViolated(format!(
            "no positive fixed point found on (0, {hi}]"
        )));
    }
    if brackets.len() > 1 {
        return Err(Error::HypothesisHViolated(format!(
            "{} positive fixed points found; expected exactly one",
            brackets.len()
        )));
    }
    let (k_lo, k_hi) = brackets[0];
    let mut kappa = bisect(|x| g.value(x) - x, k_lo, k_hi);
    if g.derivative_order() >= 1 {
        // one Newton polish, kept only if it improves the residual
        let d = g.derivative(kappa, 1) - 1.0;
        if d.abs() > 1e-12 {
            let cand = kappa - (g.value(kappa) - kappa) / d;
            if (g.value(cand) - cand).abs() < (g.value(kappa) - kappa).abs() {
                kappa = cand;
            }
        }
    }

    let shape = classify_shape(&samples);
    let unimodal = matches!(shape, Shape::Unimodal { .. });
    let x_m = match shape {
        Shape::Unimodal { peak_index } => {
            let lo = grid[peak_index.saturating_sub(1)];
            let hi_b = grid[(peak_index + 1).min(grid.len() - 1)];
            Some(locate_peak(g, lo, hi_b))
        }
        Shape::Increasing => None,
        Shape::Other => {
            notes.push("g is not unimodal on the scan range".into());
            None
        }
    };
    let sample_max = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let g_max = x_m.map_or(sample_max, |m| sample_max.max(g.value(m)));
    let gamma = g.derivative(kappa, 1);

    let zeta2 = match x_m {
        Some(m) => g.value(m),
        None => g_max.max(kappa),
    };
    let zeta1 = choose_zeta1(g, x_m, kappa, zeta2);

    // attractor of the interval map on [zeta1, zeta2]
    let (mut lo, mut hi_i) = (zeta1.min(zeta2), zeta2.max(zeta1));
    for _ in 0..10_000 {
        let (nlo, nhi) = interval_image(g, x_m, unimodal, lo, hi_i);
        let moved = (nlo - lo).abs().max((nhi - hi_i).abs());
        lo = nlo;
        hi_i = nhi;
        if moved < 1e-10 {
            break;
        }
    }
    let (zeta_star, zeta_star_upper) = (lo, hi_i);
    let (ilo, ihi) = interval_image(g, x_m, unimodal, zeta_star, zeta_star_upper);
    let attractor_tol = 1e-6 * (1.0 + zeta2);
    if (ilo - zeta_star).abs() > attractor_tol || (ihi - zeta_star_upper).abs() > attractor_tol {
        notes.push(format!(
            "interval iteration did not settle: g([{zeta_star}, {zeta_star_upper}]) = [{ilo}, {ihi}]"
        ));
    }

    // zeta checks on a dense grid of [zeta1, zeta2]
    let zgrid: Vec<f64> = linspace(zeta1, zeta2.max(zeta1), SCAN_INTERVALS).collect();
    let zvals: Vec<f64> = zgrid.iter().map(|&x| g.value(x)).collect();
    let ztol = 1e-9 * (1.0 + zeta2);
    let invariant = zvals.iter().all(|&v| v >= zeta1 - ztol && v <= zeta2 + ztol);
    let g_zeta1 = g.value(zeta1);
    let min_at_zeta1 = zvals.iter().all(|&v| v >= g_zeta1 - ztol);
    let bound = x_m.map_or(kappa, |m| g.value(zeta2).min(m).min(kappa));
    let zeta_ok = invariant && min_at_zeta1 && zeta1 <= bound + ztol && zeta1 > 0.0;
    if !invariant {
        notes.push("g([zeta1, zeta2]) is not contained in [zeta1, zeta2]".into());
    }
    if !min_at_zeta1 {
        notes.push("g(zeta1) is not the minimum of g on [zeta1, zeta2]".into());
    }

    // Schwarzian on [zeta1, zeta2] minus the critical point
    let schwarzian_reliable = g.derivative_order() >= 3;
    let mut schwarzian_negative = true;
    for &x in &zgrid {
        let s = if schwarzian_reliable {
            match g.schwarzian(x) {
                Ok(s) => Some(s),
                Err(Error::SingularSchwarzian(_)) => None,
                Err(e) => return Err(e),
            }
        } else {
            g.schwarzian_fd(x)
        };
        if let Some(s) = s {
            if !(s < 0.0) {
                schwarzian_negative = false;
                notes.push(format!("Schwarzian is {s} >= 0 at x = {x}"));
                break;
            }
        }
    }
    if !schwarzian_reliable {
        notes.push("Schwarzian estimated by finite differences of tabulated data".into());
    }

    let mut hypotheses = Vec::new();
    if unimodal && x_m.is_some() && zeta_ok && schwarzian_negative {
        hypotheses.push(Hypothesis::H);
    }
    if check_local_linearity(g, a0, kappa, &grid) {
        hypotheses.push(Hypothesis::L);
    }
    if check_b(g, zeta1, zeta2, kappa, &zvals, ztol) {
        hypotheses.push(Hypothesis::B);
    }

    Ok(StructureReport {
        kappa,
        x_m,
        a0_minus: a0,
        a0_plus: a0,
        gamma,
        zeta1,
        zeta2,
        zeta_star,
        zeta_star_upper,
        g_max,
        schwarzian_negative,
        schwarzian_reliable,
        hypotheses,
        notes,
    })
}

fn locate_peak(g: &BirthFunction, lo: f64, hi: f64) -> f64 {
    if g.derivative_order() >= 2 {
        let d1 = |x: f64| g.derivative(x, 1);
        if d1(lo) > 0.0 && d1(hi) < 0.0 {
            let mut x = bisect(d1, lo, hi);
            let d2 = g.derivative(x, 2);
            if d2.abs() > 1e-300 {
                let cand = x - d1(x) / d2;
                if cand > lo && cand < hi && d1(cand).abs() <= d1(x).abs() {
                    x = cand;
                }
            }
            return x;
        }
    }
    golden_max(|x| g.value(x), lo, hi)
}

/// Largest `zeta1 <= min{g(g(x_M)), x_M, kappa}` with `g(zeta1)` the minimum
/// of `g` over `[zeta1, zeta2]`.
fn choose_zeta1(g: &BirthFunction, x_m: Option<f64>, kappa: f64, zeta2: f64) -> f64 {
    let Some(m) = x_m else {
        return kappa;
    };
    let g_zeta2 = g.value(zeta2);
    let cand = g_zeta2.min(m).min(kappa);
    if zeta2 <= m || g.value(cand) <= g_zeta2 {
        return cand;
    }
    // g is increasing on (0, x_M): solve g(z) = g(zeta2) there
    bisect(|x| g.value(x) - g_zeta2, 0.0, cand)
}

fn check_local_linearity(g: &BirthFunction, a0: f64, kappa: f64, grid: &[f64]) -> bool {
    let probe = 1e-3 * kappa;
    let linear = linspace(0.0, probe, 20)
        .skip(1)
        .all(|x| (g.value(x) - a0 * x).abs() <= 1e-12 * a0 * x);
    let dominated = grid.iter().all(|&x| g.value(x) <= a0 * x * (1.0 + 1e-12));
    linear && dominated
}

fn check_b(g: &BirthFunction, zeta1: f64, zeta2: f64, kappa: f64, zvals: &[f64], tol: f64) -> bool {
    if !(0.0 < zeta1 && zeta1 < zeta2) {
        return false;
    }
    let g1 = g.value(zeta1);
    let b1 = zvals.iter().all(|&v| v >= zeta1 - tol && v <= zeta2 + tol)
        && linspace(0.0, zeta1, 1000).all(|x| g.value(x) <= zeta2 + tol);
    let b2 = zvals.iter().all(|&v| v >= g1 - tol);
    let b3 = linspace(0.0, zeta1, 1000)
        .skip(1)
        .all(|x| if x < zeta1 { g.value(x) > x } else { g.value(x) >= x - tol });
    let b4 = kappa <= zeta2 + tol;
    b1 && b2 && b3 && b4
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn nich(p: f64) -> BirthFunction {
        BirthFunction::nicholson(p).unwrap()
    }

    #[test]
    fn nicholson_slope_at_zero() {
        let g = nich(E * E);
        assert!((g.eval(0.0, 1).unwrap() - E * E).abs() < 1e-14);
    }

    #[test]
    fn nicholson_fixed_point_value() {
        let g = nich(E * E);
        assert!((g.eval(2.0, 0).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn mackey_glass_unit_point() {
        let g = BirthFunction::mackey_glass(2.0, 2.0).unwrap();
        assert_eq!(g.eval(1.0, 0).unwrap(), 1.0);
    }

    #[test]
    fn eval_errors() {
        let g = nich(2.0);
        assert!(matches!(g.eval(-1.0, 0), Err(Error::DomainError(_))));
        let t = BirthFunction::tabulated(vec![0.0, 1.0, 2.0], vec![0.0, 1.5, 1.0]).unwrap();
        assert!(matches!(
            t.eval(0.5, 1),
            Err(Error::UnsupportedDerivative { requested: 1, available: 0 })
        ));
    }

    /// (-x^2/2 + 2x - 3) / (1 - x)^2, from symbolic differentiation.
    fn nicholson_schwarzian_closed(x: f64) -> f64 {
        (-0.5 * x * x + 2.0 * x - 3.0) / ((1.0 - x) * (1.0 - x))
    }

    #[test]
    fn nicholson_schwarzian_values() {
        for p in [2.0, E * E, 30.0] {
            let g = nich(p);
            assert!((g.schwarzian(0.0).unwrap() + 3.0).abs() < 1e-13);
            assert!((g.schwarzian(2.0).unwrap() + 1.0).abs() < 1e-13);
            assert!(matches!(g.schwarzian(1.0), Err(Error::SingularSchwarzian(_))));
        }
    }

    #[test]
    fn nicholson_schwarzian_negative_on_grid() {
        let g = nich(5.0);
        for x in linspace(0.0, 10.0, 1000) {
            if (x - 1.0).abs() < 1e-9 {
                continue;
            }
            let s = g.schwarzian(x).unwrap();
            assert!(s < 0.0);
            let c = nicholson_schwarzian_closed(x);
            assert!((s - c).abs() <= 1e-9 * (1.0 + c.abs()), "x={x} s={s} closed={c}");
        }
    }

    #[test]
    fn nicholson_e2_structure() {
        let r = analyze_structure(&nich(E * E)).unwrap();
        assert!((r.kappa - 2.0).abs() < 1e-10);
        assert!((r.x_m.unwrap() - 1.0).abs() < 1e-10);
        assert!((r.gamma + 1.0).abs() < 1e-9);
        assert!(r.schwarzian_negative);
        assert!(r.holds(Hypothesis::H), "{:?}", r.notes);
        assert!(r.holds(Hypothesis::B));
        assert!(!r.holds(Hypothesis::L));
        assert!((r.zeta2 - E).abs() < 1e-12);
        // zeta1 is pushed below min{g(g(x_M)), x_M, kappa} = 1 so that g(zeta1) = g(zeta2)
        assert!(r.zeta1 < 1.0);
        assert!((r.kappa - r.g_max).abs() > 0.1);
        assert!(r.zeta_star <= 2.0 && 2.0 <= r.zeta_star_upper);
    }

    #[test]
    fn nicholson_p2_structure() {
        let r = analyze_structure(&nich(2.0)).unwrap();
        assert!((r.kappa - 2f64.ln()).abs() < 1e-10);
        assert!((r.gamma - (1.0 - 2f64.ln())).abs() < 1e-9);
        assert!(r.gamma > 0.0);
        assert!(r.holds(Hypothesis::H), "{:?}", r.notes);
    }

    #[test]
    fn plcap_satisfies_l() {
        let g = BirthFunction::piecewise_linear_cap(2.0, 0.1).unwrap();
        let r = analyze_structure(&g).unwrap();
        assert!(r.holds(Hypothesis::L));
        assert_eq!(r.a0_plus, 2.0);
        assert!((r.kappa - 0.2).abs() < 1e-12);
        assert!(r.x_m.is_none());
        assert!(!r.holds(Hypothesis::H));
    }

    #[test]
    fn slope_below_one_rejected() {
        assert!(matches!(
            analyze_structure(&nich(0.8)),
            Err(Error::NoPositiveFixedPoint(_))
        ));
    }

    #[test]
    fn three_fixed_points_rejected() {
        // bistable-looking table: crosses the diagonal three times
        let xs = vec![0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0];
        let ys = vec![0.0, 0.8, 0.9, 1.2, 2.4, 2.6, 2.7, 2.75];
        let g = BirthFunction::tabulated(xs, ys).unwrap();
        assert!(matches!(
            analyze_structure(&g),
            Err(Error::HypothesisHViolated(_))
        ));
    }

    #[test]
    fn tabulated_nicholson_matches_builtin() {
        let g = nich(E * E);
        let xs: Vec<f64> = linspace(0.0, 12.0, 1200).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| g.value(x)).collect();
        let t = BirthFunction::tabulated(xs, ys).unwrap();
        let r = analyze_structure(&t).unwrap();
        assert!(!r.schwarzian_reliable);
        assert!((r.kappa - 2.0).abs() < 1e-4);
        assert!((r.x_m.unwrap() - 1.0).abs() < 1e-3);
        assert!((r.gamma + 1.0).abs() < 1e-2);
    }

    #[test]
    fn parse_specs() {
        let g: BirthFunction = "nicholson:p=7.389".parse().unwrap();
        assert_eq!(g, BirthFunction::Nicholson { p: 7.389 });
        let g: BirthFunction = "mackey-glass:p=2,n=3".parse().unwrap();
        assert_eq!(g, BirthFunction::MackeyGlass { p: 2.0, n: 3.0 });
        let g: BirthFunction = "plcap:p=2,delta=0.1".parse().unwrap();
        assert_eq!(g.to_string(), "plcap:p=2,delta=0.1");
        assert!("nicholson".parse::<BirthFunction>().is_err());
        assert!("foo:p=1".parse::<BirthFunction>().is_err());
        assert!("nicholson:p=abc".parse::<BirthFunction>().is_err());
    }
}
