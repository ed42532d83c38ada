//! Cartesian sweeps over focusing parameters, one run directory per point.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use super::config::{InitialConfig, RunConfig};
use super::output::write_json_atomic;
use super::runner::{RunSummary, Simulation};
use crate::error::{Result, SimError};
use crate::initial_data::BumpShape;

pub const SUMMARY_FILE: &str = "summary.csv";

pub const SUMMARY_COLUMNS: [&str; 18] = [
    "point",
    "epsilon",
    "k",
    "amplitude",
    "status",
    "stop_reason",
    "steps",
    "t_final",
    "lambda_final",
    "t_star",
    "r_squared",
    "fit_samples",
    "growth",
    "transient_end",
    "lower_constant",
    "constancy_spread",
    "log_scale",
    "log_misfit",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub index: usize,
    pub epsilon: f64,
    pub k: u32,
    /// `None` when the base bumps were kept.
    pub amplitude: Option<f64>,
    pub config: RunConfig,
}

#[derive(Debug)]
pub struct SweepOutcome {
    pub point: SweepPoint,
    pub result: Result<RunSummary>,
}

fn base_amplitude(shape: &BumpShape) -> f64 {
    match *shape {
        BumpShape::Rational { amplitude, .. }
        | BumpShape::Gaussian { amplitude }
        | BumpShape::ProfileJ { amplitude }
        | BumpShape::RandomRational { amplitude, .. } => amplitude,
        BumpShape::Zero => 0.0,
    }
}

/// Expands the sweep axes of a focusing config. An empty axis keeps the
/// base value. Setting `k` or `amplitude` replaces both bumps by the default
/// shapes for that index; `c_small` is raised to `sqrt(epsilon)` if needed.
pub fn sweep_points(base: &RunConfig) -> Result<Vec<SweepPoint>> {
    let InitialConfig::Focusing(spec) = &base.initial else {
        return Err(SimError::Config("sweeps need the focusing initial family".into()));
    };
    let axes = base.sweep.clone().unwrap_or_default();
    let eps: Vec<f64> = if axes.epsilon.is_empty() { vec![spec.epsilon] } else { axes.epsilon.clone() };
    let ks: Vec<u32> = if axes.k.is_empty() { vec![spec.k] } else { axes.k.clone() };
    let amps: Vec<Option<f64>> = if axes.amplitude.is_empty() {
        vec![None]
    } else {
        axes.amplitude.iter().map(|&a| Some(a)).collect()
    };
    let mut out = Vec::new();
    for &e in &eps {
        for &k in &ks {
            for &a in &amps {
                let mut s = spec.clone();
                s.epsilon = e;
                s.c_small = s.c_small.max(e.sqrt());
                if k != spec.k || a.is_some() {
                    s.k = k;
                    let amp = a.unwrap_or_else(|| base_amplitude(&spec.u0));
                    s.u0 = BumpShape::default_u0(k, amp);
                    s.g0 = BumpShape::default_g0(k, amp);
                }
                let mut cfg = base.clone();
                cfg.initial = InitialConfig::Focusing(s);
                cfg.sweep = None;
                out.push(SweepPoint {
                    index: out.len(),
                    epsilon: e,
                    k,
                    amplitude: a,
                    config: cfg,
                });
            }
        }
    }
    Ok(out)
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NaN".to_string(), |v| format!("{v:.16e}"))
}

fn summary_line(o: &SweepOutcome) -> String {
    let p = &o.point;
    let mut s = format!("{},{:.16e},{},{}", p.index, p.epsilon, p.k, opt(p.amplitude));
    match &o.result {
        Ok(r) => {
            let rep = r.riccati.as_ref();
            let fit = rep.and_then(|x| x.blowup);
            let rate = rep.and_then(|x| x.rate_bounds);
            let _ = write!(
                s,
                ",ok,{},{},{:.16e},{:.16e},{},{},{},{},{},{},{},{},{}",
                r.stop_reason.as_str(),
                r.steps,
                r.t_final,
                r.lambda_final,
                opt(fit.map(|f| f.t_star)),
                opt(fit.map(|f| f.r_squared)),
                fit.map_or(0, |f| f.samples),
                opt(fit.map(|f| f.growth)),
                opt(rep.map(|x| x.transient_end)),
                opt(rate.map(|x| x.lower_constant)),
                opt(rate.map(|x| x.constancy_spread)),
                opt(rate.map(|x| x.log_scale)),
                opt(rate.map(|x| x.log_misfit)),
            );
        }
        Err(e) => {
            let msg = e.to_string().replace([',', '\n'], ";");
            let _ = write!(s, ",error: {msg},,0,NaN,NaN,NaN,NaN,0,NaN,NaN,NaN,NaN,NaN,NaN");
        }
    }
    s.push('\n');
    s
}

/// Runs every point on a pool of `threads` workers (0 means rayon's
/// default) and writes `summary.csv` in point order.
pub fn sweep(base: &RunConfig, out: &Path, threads: usize) -> Result<Vec<SweepOutcome>> {
    base.validate()?;
    let points = sweep_points(base)?;
    fs::create_dir_all(out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| SimError::Config(format!("thread pool: {e}")))?;
    let outcomes: Vec<SweepOutcome> = pool.install(|| {
        points
            .into_par_iter()
            .map(|point| {
                let dir = out.join(format!("point_{:04}", point.index));
                let result = fs::create_dir_all(&dir)
                    .map_err(SimError::from)
                    .and_then(|_| fs::write(dir.join("config.toml"), point.config.to_toml_string()).map_err(SimError::from))
                    .and_then(|_| Simulation::new(point.config.clone(), Some(&dir)))
                    .and_then(|mut sim| sim.run());
                if let Err(e) = &result {
                    log::warn!("sweep point {} failed: {e}", point.index);
                }
                SweepOutcome { point, result }
            })
            .collect()
    });
    let mut text = SUMMARY_COLUMNS.join(",");
    text.push('\n');
    for o in &outcomes {
        text.push_str(&summary_line(o));
    }
    fs::write(out.join(SUMMARY_FILE), text)?;
    let index: Vec<_> = outcomes
        .iter()
        .map(|o| {
            serde_json::json!({
                "point": o.point.index,
                "dir": format!("point_{:04}", o.point.index),
                "config_hash": o.point.config.hash(),
                "ok": o.result.is_ok(),
            })
        })
        .collect();
    write_json_atomic(&out.join("sweep.json"), &index)?;
    Ok(outcomes)
}
