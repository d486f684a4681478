//! Method-of-lines simulation of `u_t = u_xx - u + g(u(t - h, x))` on
//! `[0, L]` with Neumann boundaries, used to measure how fast a front spreads
//! from localized initial data.
//!
//! Space: second-order central differences. Time: classical RK4. The delayed
//! term is read from a ring buffer holding `g(u)` for the last `h/dt` steps;
//! half-step stages average the two neighbouring buffered states.

use std::collections::VecDeque;

use serde::Serialize;

use crate::birthfn::BirthFunction;
use crate::numeric::fit_line;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Initial {
    /// `height * exp(-(x/width)^2)`.
    Bump { width: f64, height: f64 },
    /// `height` on `x <= 0.1 L`, zero elsewhere.
    Step { height: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub length: f64,
    pub nx: usize,
    pub dt: f64,
    pub t_end: f64,
    pub h: f64,
    pub g: BirthFunction,
    pub initial: Initial,
    /// Front level; `None` means `kappa / 2`.
    pub level: Option<f64>,
    /// Time between recorded front positions.
    pub record_interval: f64,
}

impl SimConfig {
    pub fn dx(&self) -> f64 {
        self.length / (self.nx - 1) as f64
    }

    /// Largest step `<= 0.4 dx^2` that divides `h`.
    pub fn stable_dt(length: f64, nx: usize, h: f64) -> f64 {
        let dx = length / (nx - 1) as f64;
        let dt_max = 0.4 * dx * dx;
        if h > 0.0 {
            h / (h / dt_max).ceil()
        } else {
            dt_max
        }
    }

    fn validate(&self) -> Result<usize> {
        if self.nx < 3 || !(self.length > 0.0) || !(self.t_end > 0.0) || !(self.dt > 0.0) {
            return Err(Error::ConfigError(
                "need nx >= 3 and positive length, dt, t_end".into(),
            ));
        }
        if !(self.h >= 0.0 && self.h.is_finite()) {
            return Err(Error::ConfigError(format!("delay must be >= 0, got {}", self.h)));
        }
        let dx = self.dx();
        if self.dt > 0.4 * dx * dx * (1.0 + 1e-12) {
            return Err(Error::ConfigError(format!(
                "dt = {} exceeds the diffusion limit 0.4 dx^2 = {}",
                self.dt,
                0.4 * dx * dx
            )));
        }
        let ratio = self.h / self.dt;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::ConfigError(format!(
                "dt = {} does not divide h = {}",
                self.dt, self.h
            )));
        }
        if !(self.record_interval > 0.0) {
            return Err(Error::ConfigError("record interval must be positive".into()));
        }
        Ok(ratio.round() as usize)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub front_positions: Vec<(f64, f64)>,
    /// Slope of a least-squares line through the last half of the positions
    /// inside `[0.1 L, 0.9 L]`; `None` when fewer than three qualify.
    pub speed_estimate: Option<f64>,
    pub r_squared: Option<f64>,
    pub mass_nonneg: bool,
    pub min_u: f64,
    pub max_u: f64,
    pub level: f64,
    /// Mean of `u` over `[0.2 L, 0.4 L]` at the final time.
    pub behind_front_mean: f64,
    pub steps: usize,
    pub t_final: f64,
}

fn laplacian_rhs(u: &[f64], delayed_g: &[f64], inv_dx2: f64, out: &mut [f64]) {
    let n = u.len();
    out[0] = 2.0 * (u[1] - u[0]) * inv_dx2 - u[0] + delayed_g[0];
    for i in 1..n - 1 {
        out[i] = (u[i - 1] - 2.0 * u[i] + u[i + 1]) * inv_dx2 - u[i] + delayed_g[i];
    }
    out[n - 1] = 2.0 * (u[n - 2] - u[n - 1]) * inv_dx2 - u[n - 1] + delayed_g[n - 1];
}

fn rightmost_crossing(u: &[f64], level: f64, dx: f64) -> Option<f64> {
    let i = u.windows(2).rposition(|w| w[0] >= level && w[1] < level)?;
    let frac = (u[i] - level) / (u[i] - u[i + 1]);
    Some(dx * (i as f64 + frac))
}

pub fn simulate(cfg: &SimConfig) -> Result<SimResult> {
    simulate_with_frames(cfg, None::<(f64, fn(f64, &[f64]))>)
}

/// Like [`simulate`], also handing a snapshot of `u` to `frames.1` every
/// `frames.0` time units (and at `t = 0`).
pub fn simulate_with_frames<F: FnMut(f64, &[f64])>(
    cfg: &SimConfig,
    mut frames: Option<(f64, F)>,
) -> Result<SimResult> {
    let delay_steps = cfg.validate()?;
    let kappa = crate::birthfn::analyze_structure(&cfg.g)
        .map(|r| r.kappa)
        .ok();
    let level = match (cfg.level, kappa) {
        (Some(l), _) => l,
        (None, Some(k)) => 0.5 * k,
        (None, None) => {
            return Err(Error::ConfigError(
                "no front level given and g has no positive fixed point".into(),
            ))
        }
    };
    let (nx, dx, dt) = (cfg.nx, cfg.dx(), cfg.dt);
    let inv_dx2 = 1.0 / (dx * dx);
    let xs: Vec<f64> = (0..nx).map(|i| i as f64 * dx).collect();
    let mut u: Vec<f64> = match cfg.initial {
        Initial::Bump { width, height } => xs.iter().map(|x| height * (-(x / width).powi(2)).exp()).collect(),
        Initial::Step { height } => xs
            .iter()
            .map(|&x| if x <= 0.1 * cfg.length { height } else { 0.0 })
            .collect(),
    };
    let gmap = |v: &[f64], out: &mut Vec<f64>| {
        out.clear();
        out.extend(v.iter().map(|&s| cfg.g.value(s.max(0.0))));
    };
    let blow_limit = 1e6 * u.iter().cloned().fold(1.0, f64::max).max(cfg.g.value(1.0));

    // g(u) history: front is t - h, back is the current time; constant before t = 0
    let mut history: VecDeque<Vec<f64>> = VecDeque::with_capacity(delay_steps + 2);
    let mut g0 = Vec::with_capacity(nx);
    gmap(&u, &mut g0);
    for _ in 0..=delay_steps {
        history.push_back(g0.clone());
    }

    let steps_total = (cfg.t_end / dt).round() as usize;
    let record_every = ((cfg.record_interval / dt).round() as usize).max(1);
    let frame_every = frames
        .as_ref()
        .map(|(every, _)| ((every / dt).round() as usize).max(1));
    if let Some((_, sink)) = frames.as_mut() {
        sink(0.0, &u);
    }

    let mut k = [vec![0.0; nx], vec![0.0; nx], vec![0.0; nx], vec![0.0; nx]];
    let mut stage = vec![0.0; nx];
    let mut gmid = vec![0.0; nx];
    let mut gbuf = Vec::with_capacity(nx);
    let mut positions = Vec::new();
    let (mut min_u, mut max_u) = (u.iter().cloned().fold(f64::INFINITY, f64::min), u.iter().cloned().fold(0.0, f64::max));
    let mut step = 0;
    let mut t = 0.0;
    if let Some(x) = rightmost_crossing(&u, level, dx) {
        positions.push((0.0, x));
    }

    while step < steps_total {
        if delay_steps > 0 {
            let (g_now, g_next) = (&history[0], &history[1]);
            for i in 0..nx {
                gmid[i] = 0.5 * (g_now[i] + g_next[i]);
            }
            laplacian_rhs(&u, &history[0], inv_dx2, &mut k[0]);
            for i in 0..nx {
                stage[i] = u[i] + 0.5 * dt * k[0][i];
            }
            laplacian_rhs(&stage, &gmid, inv_dx2, &mut k[1]);
            for i in 0..nx {
                stage[i] = u[i] + 0.5 * dt * k[1][i];
            }
            laplacian_rhs(&stage, &gmid, inv_dx2, &mut k[2]);
            for i in 0..nx {
                stage[i] = u[i] + dt * k[2][i];
            }
            laplacian_rhs(&stage, &history[1], inv_dx2, &mut k[3]);
        } else {
            gmap(&u, &mut gbuf);
            laplacian_rhs(&u, &gbuf, inv_dx2, &mut k[0]);
            for i in 0..nx {
                stage[i] = u[i] + 0.5 * dt * k[0][i];
            }
            gmap(&stage, &mut gbuf);
            laplacian_rhs(&stage, &gbuf, inv_dx2, &mut k[1]);
            for i in 0..nx {
                stage[i] = u[i] + 0.5 * dt * k[1][i];
            }
            gmap(&stage, &mut gbuf);
            laplacian_rhs(&stage, &gbuf, inv_dx2, &mut k[2]);
            for i in 0..nx {
                stage[i] = u[i] + dt * k[2][i];
            }
            gmap(&stage, &mut gbuf);
            laplacian_rhs(&stage, &gbuf, inv_dx2, &mut k[3]);
        }
        for i in 0..nx {
            u[i] += dt / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
        }
        step += 1;
        t = step as f64 * dt;

        for &v in &u {
            if !v.is_finite() || v.abs() > blow_limit {
                return Err(Error::NumericalBlowup { step });
            }
            min_u = min_u.min(v);
            max_u = max_u.max(v);
        }
        if delay_steps > 0 {
            let mut recycled = history.pop_front().unwrap_or_default();
            gmap(&u, &mut recycled);
            history.push_back(recycled);
        }
        if let (Some(every), Some((_, sink))) = (frame_every, frames.as_mut()) {
            if step % every == 0 {
                sink(t, &u);
            }
        }
        if step % record_every == 0 {
            if let Some(x) = rightmost_crossing(&u, level, dx) {
                positions.push((t, x));
                if x > 0.9 * cfg.length {
                    if t < 0.5 * cfg.t_end {
                        return Err(Error::DomainTooSmall { t });
                    }
                    break;
                }
            }
        }
    }

    let inside: Vec<(f64, f64)> = positions
        .iter()
        .copied()
        .filter(|&(_, x)| x >= 0.1 * cfg.length && x <= 0.9 * cfg.length)
        .collect();
    let tail = &inside[inside.len() / 2..];
    let fit = if tail.len() >= 3 {
        let ts: Vec<f64> = tail.iter().map(|p| p.0).collect();
        let xs: Vec<f64> = tail.iter().map(|p| p.1).collect();
        fit_line(&ts, &xs)
    } else {
        None
    };
    let (i0, i1) = (
        (0.2 * (nx - 1) as f64).round() as usize,
        (0.4 * (nx - 1) as f64).round() as usize,
    );
    let behind_front_mean = u[i0..=i1].iter().sum::<f64>() / (i1 - i0 + 1) as f64;

    Ok(SimResult {
        front_positions: positions,
        speed_estimate: fit.map(|f| f.slope),
        r_squared: fit.map(|f| f.r_squared),
        mass_nonneg: min_u >= -1e-12,
        min_u,
        max_u,
        level,
        behind_front_mean,
        steps: step,
        t_final: t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(h: f64) -> SimConfig {
        let (length, nx) = (60.0, 301);
        SimConfig {
            length,
            nx,
            dt: SimConfig::stable_dt(length, nx, h),
            t_end: 5.0,
            h,
            g: BirthFunction::nicholson(2.0).unwrap(),
            initial: Initial::Bump {
                width: 3.0,
                height: 0.6,
            },
            level: None,
            record_interval: 0.1,
        }
    }

    #[test]
    fn rejects_unstable_dt() {
        let mut c = base(1.0);
        c.dt *= 3.0;
        assert!(matches!(simulate(&c), Err(Error::ConfigError(_))));
    }

    #[test]
    fn rejects_misaligned_delay() {
        let mut c = base(1.0);
        c.dt *= 0.77;
        assert!(matches!(simulate(&c), Err(Error::ConfigError(_))));
    }

    #[test]
    fn zero_data_stays_zero() {
        let mut c = base(1.0);
        c.initial = Initial::Step { height: 0.0 };
        let r = simulate(&c).unwrap();
        assert!(r.front_positions.is_empty());
        assert!(r.speed_estimate.is_none());
        assert_eq!(r.max_u, 0.0);
    }

    #[test]
    fn short_run_stays_nonnegative_and_bounded() {
        let r = simulate(&base(1.0)).unwrap();
        assert!(r.mass_nonneg);
        assert!(r.max_u <= 2.0 / std::f64::consts::E + 1e-9);
    }

    #[test]
    fn crossing_interpolates() {
        let u = [1.0, 1.0, 0.6, 0.2, 0.0];
        assert!((rightmost_crossing(&u, 0.4, 1.0).unwrap() - 2.5).abs() < 1e-15);
    }

    #[test]
    fn frames_are_delivered() {
        let mut n = 0;
        simulate_with_frames(&base(0.0), Some((1.0, |_t: f64, u: &[f64]| {
            assert_eq!(u.len(), 301);
            n += 1;
        })))
        .unwrap();
        assert_eq!(n, 6);
    }
}
