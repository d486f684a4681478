use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use delayfront::birthfn::{analyze_structure, BirthFunction, Hypothesis};
use delayfront::charroots::{epsilon0_curve, minimal_speed};
use delayfront::pdesim::{simulate_with_frames, SimConfig};
use delayfront::profile::{check_asymptotics, classify_tail, solve_profile, SolverConfig};
use delayfront::speeds::{singer_check, speed_interval, Upper};

mod config;
mod output;
mod range;

use output::{Outcome, Output};

#[derive(Parser, Debug)]
#[command(
    name = "delayfront",
    version,
    about = "Wavefront speeds and profiles for u_t = u_xx - u + g(u(t - h, x))"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Serialize)]
struct Common {
    /// Emit a single JSON object on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// Also write results and a manifest into this directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Admissible speed interval [c_*, c^*] for a birth function and delay.
    SpeedInterval {
        /// Birth function, e.g. nicholson:p=7.389 or mackey-glass:p=2,n=4.
        #[arg(long)]
        g: String,
        #[arg(long)]
        h: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Minimal speed c_* as a function of the delay.
    CstarCurve {
        /// Slope g'(0+); alternatively give --g.
        #[arg(long, conflicts_with = "g")]
        a: Option<f64>,
        #[arg(long)]
        g: Option<String>,
        /// Delay grid start:stop:step (inclusive) or a single value.
        #[arg(long)]
        h: String,
        #[command(flatten)]
        common: Common,
    },
    /// Wave profile at speed c by fixed-point iteration.
    Profile {
        #[arg(long)]
        g: String,
        #[arg(long)]
        h: f64,
        /// Wave speed.
        #[arg(long, conflicts_with = "c_factor", required_unless_present = "c_factor")]
        c: Option<f64>,
        /// Wave speed as a multiple of c_*.
        #[arg(long)]
        c_factor: Option<f64>,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 10_000)]
        max_iters: usize,
        #[arg(long, default_value_t = 0.05)]
        dt_max: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Direct simulation of the PDE from a TOML configuration.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Time between saved snapshots (written to frames.bin under --out).
        #[arg(long)]
        frame_interval: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Structural constants of g and which hypotheses hold.
    CheckHypotheses {
        #[arg(long)]
        g: String,
        #[command(flatten)]
        common: Common,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(64)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let started = Instant::now();
    match run(cli.command, started) {
        Ok(outcome) => ExitCode::from(outcome.code()),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

type AnyResult<T> = std::result::Result<T, Box<dyn std::error::Error>>;

fn parse_g(spec: &str) -> AnyResult<BirthFunction> {
    Ok(spec.parse::<BirthFunction>()?)
}

fn run(cmd: Command, started: Instant) -> AnyResult<Outcome> {
    match cmd {
        Command::SpeedInterval { g, h, common } => {
            let gf = parse_g(&g)?;
            let report = analyze_structure(&gf)?;
            let si = speed_interval(&report, h)?;
            let body = json!({
                "g": gf.to_string(),
                "h": h,
                "c_star": si.c_star,
                "upper": si.upper,
                "gamma": si.gamma,
                "threshold": si.threshold,
                "xi_at_c_star": si.xi_at_c_star,
            });
            let outcome = if si.upper == Upper::Empty {
                Outcome::Negative
            } else {
                Outcome::Success
            };
            let out = Output::new("speed-interval", json!({"g": g, "h": h}), &common, started);
            out.emit_json(&body, "speed_interval.json", &[])?;
            Ok(outcome)
        }
        Command::CstarCurve { a, g, h, common } => {
            let slope = match (a, &g) {
                (Some(a), _) => a,
                (None, Some(spec)) => parse_g(spec)?.slope_at_zero(),
                (None, None) => return Err("either --a or --g is required".into()),
            };
            let grid = range::parse(&h)?;
            let curve = epsilon0_curve(slope, &grid)?;
            if curve.windows(2).any(|w| !(w[1].c_star < w[0].c_star)) {
                return Err("c_* is not strictly decreasing along the grid".into());
            }
            let mut csv = String::from("h,epsilon0,c_star\n");
            for p in &curve {
                csv.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", p.h, p.epsilon0, p.c_star));
            }
            let out = Output::new(
                "cstar-curve",
                json!({"a": slope, "g": g, "h": h}),
                &common,
                started,
            );
            if common.json {
                out.emit_json(&json!({"a": slope, "rows": curve}), "cstar_curve.json", &[])?;
            } else {
                out.emit_text(&csv, "cstar_curve.csv")?;
            }
            Ok(Outcome::Success)
        }
        Command::Profile {
            g,
            h,
            c,
            c_factor,
            tol,
            max_iters,
            dt_max,
            common,
        } => {
            let gf = parse_g(&g)?;
            let speed = match (c, c_factor) {
                (Some(c), _) => c,
                (None, Some(k)) => k * minimal_speed(gf.slope_at_zero(), h)?.c_star,
                (None, None) => return Err("either --c or --c-factor is required".into()),
            };
            let cfg = SolverConfig {
                tol,
                max_iters,
                dt_max,
                ..SolverConfig::default()
            };
            let w = solve_profile(&gf, h, speed, &cfg)?;
            let asym = check_asymptotics(&w).ok();
            let tail = classify_tail(&w, &gf, h);
            let singer = analyze_structure(&gf)
                .and_then(|r| singer_check(&gf, &r, h, speed))
                .ok();
            let body = json!({
                "c": w.c,
                "h": h,
                "g": gf.to_string(),
                "residual_sup": w.residual_sup,
                "iteration_residual": w.iteration_residual,
                "iterations": w.iterations,
                "converged": w.converged,
                "classification": tail,
                "fitted_rate": asym.map(|a| a.fitted_rate),
                "asymptotics": asym,
                "lambda1": w.cone.lambda1,
                "lambda2": w.cone.lambda2,
                "kappa": w.kappa,
                "singer": singer,
                "warnings": w.warnings,
                "csv": "profile.csv",
            });
            let out = Output::new(
                "profile",
                json!({"g": g, "h": h, "c": speed, "tol": tol, "max_iters": max_iters, "dt_max": dt_max}),
                &common,
                started,
            );
            out.emit_json(&body, "profile.json", &[("profile.csv", w.to_csv().into_bytes())])?;
            Ok(if w.converged {
                Outcome::Success
            } else {
                Outcome::NotConverged
            })
        }
        Command::Simulate {
            config,
            frame_interval,
            common,
        } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| format!("{}: {e}", config.display()))?;
            let file_cfg: config::SimFile = toml::from_str(&text)?;
            let cfg: SimConfig = file_cfg.clone().into_config()?;
            let mut frames: Vec<u8> = Vec::new();
            let mut frame_count = 0usize;
            let sink = |t: f64, u: &[f64]| {
                frames.extend_from_slice(&t.to_le_bytes());
                for v in u {
                    frames.extend_from_slice(&v.to_le_bytes());
                }
                frame_count += 1;
            };
            let want_frames = frame_interval.filter(|_| common.out.is_some());
            let res = simulate_with_frames(&cfg, want_frames.map(|dt| (dt, sink)))?;
            let c_star = minimal_speed(cfg.g.slope_at_zero(), cfg.h).ok().map(|m| m.c_star);
            let gap = match (res.speed_estimate, c_star) {
                (Some(s), Some(c)) => Some((s - c) / c),
                _ => None,
            };
            let mut csv = String::from("t,x_front\n");
            for (t, x) in &res.front_positions {
                csv.push_str(&format!("{t:.16e},{x:.16e}\n"));
            }
            let mut extra = vec![("fronts.csv", csv.into_bytes())];
            if let Some(dt) = want_frames {
                let header = json!({
                    "nx": cfg.nx,
                    "dx": cfg.dx(),
                    "frame_interval": dt,
                    "frames": frame_count,
                    "row": "t followed by nx values",
                    "dtype": "f64 little-endian",
                    "layout": "row-major",
                });
                let mut bytes = serde_json::to_vec(&header)?;
                bytes.push(b'\n');
                bytes.extend_from_slice(&frames);
                extra.push(("frames.bin", bytes));
            }
            let body = json!({
                "speed_estimate": res.speed_estimate,
                "c_star": c_star,
                "relative_gap": gap,
                "r_squared": res.r_squared,
                "mass_nonneg": res.mass_nonneg,
                "min_u": res.min_u,
                "max_u": res.max_u,
                "behind_front_mean": res.behind_front_mean,
                "level": res.level,
                "steps": res.steps,
                "t_final": res.t_final,
                "history": "constant initial condition on [-h, 0]",
                "csv": "fronts.csv",
            });
            let params = serde_json::to_value(&file_cfg)?;
            let out = Output::new("simulate", params, &common, started).with_input(text.as_bytes());
            if common.json {
                out.emit_json(&body, "simulate.json", &extra)?;
            } else {
                let line = match (res.speed_estimate, c_star, gap) {
                    (Some(s), Some(c), Some(r)) => {
                        format!("speed_estimate {s:.6}  c_star {c:.6}  relative_gap {r:+.3e}\n")
                    }
                    _ => "no front speed could be estimated\n".to_string(),
                };
                out.emit_text_with(&line, &body, "simulate.json", &extra)?;
            }
            Ok(Outcome::Success)
        }
        Command::CheckHypotheses { g, common } => {
            let gf = parse_g(&g)?;
            let report = analyze_structure(&gf)?;
            let out = Output::new("check-hypotheses", json!({"g": g}), &common, started);
            let body: Value = serde_json::to_value(&report)?;
            out.emit_json(&body, "structure.json", &[])?;
            Ok(if report.holds(Hypothesis::H) {
                Outcome::Success
            } else {
                Outcome::Negative
            })
        }
    }
}
