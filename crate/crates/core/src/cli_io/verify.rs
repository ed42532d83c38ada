//! Invariant suite behind the `verify` subcommand.

use std::f64::consts::PI;

use super::config::{
    Formulation, InitialConfig, OutputConfig, ProfileDataSpec, RunConfig, StopConfig, TrackingConfig,
    TrackingMode, SCHEMA_ID,
};
use super::runner::Simulation;
use crate::diagnostics::{energy_report, DiagnosticsConfig};
use crate::error::Result;
use crate::evolution::{FieldState, SchemeConfig};
use crate::grid::{Grading, GridSpec, RadialGrid};
use crate::initial_data::BumpShape;
use crate::modulation::{extract_lambda, lambda_ode_rhs};
use crate::profiles::{apply_a, eval_i_dr, profile_point, ProfileConstants, ProfileParams};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub name: String,
    pub value: f64,
    /// Human-readable acceptance rule, e.g. `<= 1e-8`.
    pub rule: String,
    pub pass: bool,
}

fn at_most(name: &str, value: f64, tol: f64) -> CheckRow {
    CheckRow {
        name: name.into(),
        value,
        rule: format!("<= {tol:.0e}"),
        pass: value <= tol,
    }
}

fn within(name: &str, value: f64, lo: f64, hi: f64) -> CheckRow {
    CheckRow {
        name: name.into(),
        value,
        rule: format!("in [{lo}, {hi}]"),
        pass: value >= lo && value <= hi,
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn profile_run(
    grid: GridSpec,
    dt: f64,
    k: u32,
    mu: f64,
    bump: BumpShape,
    t_end: f64,
    formulation: Formulation,
) -> RunConfig {
    RunConfig {
        schema: SCHEMA_ID.into(),
        grid,
        scheme: SchemeConfig::with_dt(dt),
        initial: InitialConfig::Profile(ProfileDataSpec {
            k,
            mu,
            phi_bump: bump,
            phi_t_bump: BumpShape::Zero,
            seed: 0,
        }),
        output: OutputConfig {
            steps_per_report: 1,
            snapshot_every: 0,
            checkpoint_every: 0,
        },
        diagnostics: DiagnosticsConfig::default(),
        tracking: TrackingConfig {
            mode: TrackingMode::Rootfind,
            formulation,
        },
        stop: StopConfig {
            t_end,
            lambda_stop_factor: 1e3,
            resolution_nodes: 4.0,
            max_steps: None,
        },
        sweep: None,
    }
}

/// Time step that divides `t_end` and stays below `fraction * min spacing`.
fn fitting_dt(grid: &RadialGrid, t_end: f64, fraction: f64) -> f64 {
    let steps = (t_end / (fraction * grid.min_spacing())).ceil();
    t_end / steps
}

fn smooth_bump(k: u32, amplitude: f64) -> BumpShape {
    BumpShape::Rational {
        amplitude,
        power: k as f64,
        decay: k as f64 + 2.0,
    }
}

fn profile_checks(k: u32, grid: &RadialGrid, rows: &mut Vec<CheckRow>) -> Result<()> {
    let mut worst: f64 = 0.0;
    for kk in [4, 5, 6] {
        for lambda in [1.0, 16.0] {
            let p = ProfileParams::new(kk, lambda)?;
            for &r in grid.nodes() {
                let pt = profile_point(kk, lambda * r);
                worst = worst.max((r * eval_i_dr(p, r) - kk as f64 * pt.i.sin()).abs());
            }
        }
    }
    rows.push(at_most("profile: r I_r - k sin I (analytic)", worst, 1e-10));

    let mut res = Vec::new();
    for n in [800, 1600] {
        let g = RadialGrid::new(10.0, n, Grading::Uniform)?;
        let p = ProfileParams::new(k, 1.0)?;
        let j = g.map(|r| profile_point(k, r).j);
        let a = apply_a(p, &j, &g)?;
        res.push(a[..n - 1].iter().fold(0.0f64, |m, x| m.max(x.abs())));
    }
    rows.push(within("profile: A J residual ratio per halving", res[0] / res[1], 3.5, 4.5));

    let c = ProfileConstants::reference(k)?;
    let kf = k as f64;
    let c0 = 2.0 * PI / (PI / kf).sin();
    rows.push(at_most("constants: C0 vs 2 pi / sin(pi/k)", (c.c0_const - c0).abs() / c0, 1e-8));
    let jr2j = 4.0 * PI / (2.0 * PI / kf).sin();
    rows.push(at_most(
        "constants: <J, r^2 J> vs 4 pi / sin(2 pi/k)",
        (c.jr2j_inner - jr2j).abs() / jr2j,
        1e-8,
    ));
    Ok(())
}

fn quadrature_checks(spec: &GridSpec, rows: &mut Vec<CheckRow>) -> Result<()> {
    let mut errs = Vec::new();
    for s in [*spec, spec.refined()] {
        let g = s.build()?;
        let f = g.map(|r| (-r * r).exp());
        let exact = 0.5 * (1.0 - (-g.r_max() * g.r_max()).exp());
        errs.push((g.weighted_integral(&f, 0)? - exact).abs() / exact);
    }
    rows.push(at_most("quadrature: int exp(-r^2) r dr", errs[0], 1e-5));
    if errs[1] > 1e-13 {
        rows.push(within("quadrature: error ratio per refinement", errs[0] / errs[1], 3.5, 4.5));
    }
    Ok(())
}

fn static_checks(k: u32, rows: &mut Vec<CheckRow>) -> Result<()> {
    let mut spec = GridSpec {
        r_max: 20.0,
        n: 200,
        grading: Grading::Geometric { ratio: 1.04 },
    };
    let t_end = 0.05;
    let mut errs = Vec::new();
    let mut excess: f64 = 0.0;
    for _ in 0..3 {
        let g = spec.build()?;
        let cfg = profile_run(spec, fitting_dt(&g, t_end, 0.8), k, 1.0, BumpShape::Zero, t_end, Formulation::Velocity);
        let mut sim = Simulation::new(cfg, None)?;
        sim.run()?;
        let exact = g.map(|r| profile_point(k, r).i);
        errs.push(max_abs_diff(&sim.state().phi, &exact));
        excess = sim.rows().iter().fold(excess, |m, r| m.max(r.energy_excess.abs()));
        spec = spec.refined();
    }
    let order = (errs[1] / errs[2]).log2();
    rows.push(within("static profile: convergence order", order, 1.7, 2.3));
    rows.push(at_most("static profile: |E - 4 k pi| (finest)", excess, 1e-3));
    Ok(())
}

fn formulation_checks(k: u32, rows: &mut Vec<CheckRow>) -> Result<()> {
    // Both forms pin their field at r_max, which is only consistent when the
    // domain is wide; r_max = 20 keeps that mismatch near 1e-4.
    let spec = GridSpec {
        r_max: 20.0,
        n: 3200,
        grading: Grading::Uniform,
    };
    let g = spec.build()?;
    let t_end = 0.05;
    let dt = fitting_dt(&g, t_end, 0.25);
    let bump = smooth_bump(k, 1e-2);
    let mut a = Simulation::new(profile_run(spec, dt, k, 1.0, bump.clone(), t_end, Formulation::Velocity), None)?;
    a.run()?;
    let mut b = Simulation::new(profile_run(spec, dt, k, 1.0, bump, t_end, Formulation::Averaged), None)?;
    b.run()?;
    let rel = |x: &[f64], y: &[f64]| -> Result<f64> {
        let d: Vec<f64> = x.iter().zip(y).map(|(p, q)| p - q).collect();
        Ok((g.norm_sq(&d)? / g.norm_sq(x)?).sqrt())
    };
    rows.push(at_most("formulations: v (phi,v) vs (phi,h), rel L2", rel(&a.state().v, &b.state().v)?, 1e-3));
    let h_quad = g.running_average(&b.state().v)?;
    rows.push(at_most("formulations: evolved h vs quadrature of v", rel(&h_quad, &b.state().h)?, 1e-3));
    Ok(())
}

fn modulation_checks(k: u32, grid: &RadialGrid, rows: &mut Vec<CheckRow>) -> Result<()> {
    let consts = ProfileConstants::reference(k)?;
    let mut worst: f64 = 0.0;
    let mut rate: f64 = 0.0;
    for mu in [1.0, 16.0] {
        let n = grid.len();
        let phi = grid.map(|r| profile_point(k, mu * r).i);
        let st = FieldState::new(k, grid, phi, vec![0.0; n], vec![0.0; n])?;
        let l = extract_lambda(&st, mu * 1.3, grid)?;
        worst = worst.max((l - mu).abs() / mu);
        rate = rate.max(lambda_ode_rhs(&st, mu, &consts, grid)?.lambda_dot.abs());
    }
    rows.push(at_most("modulation: lambda of exact profile, rel", worst, 1e-8));
    rows.push(at_most("modulation: lambda_dot of exact profile", rate, 1e-10));

    let spec = GridSpec {
        r_max: 20.0,
        n: 400,
        grading: Grading::Geometric { ratio: 1.02 },
    };
    let g = spec.build()?;
    let t_end = 0.05;
    let cfg = profile_run(spec, fitting_dt(&g, t_end, 0.8), k, 1.0, smooth_bump(k, 1e-1), t_end, Formulation::Velocity);
    let mut sim = Simulation::new(cfg, None)?;
    sim.run()?;
    let ortho = sim.rows().iter().fold(0.0f64, |m, r| m.max(r.orthogonality));
    let div = sim.rows().iter().fold(0.0f64, |m, r| m.max(r.divergence_metric));
    rows.push(at_most("modulation: |<u, J>| / |J|^2 along run", ortho, 1e-8));
    rows.push(at_most("modulation: ode vs rootfind divergence", div, 1e-2));
    Ok(())
}

fn bogomolnyi_check(config: &RunConfig, rows: &mut Vec<CheckRow>) -> Result<()> {
    let sim = Simulation::new(config.clone(), None)?;
    let st = sim.state();
    let rep = energy_report(st, sim.lambda(), &config.diagnostics, sim.grid())?;
    let outer = *st.phi.last().expect("non-empty");
    let boundary = -2.0 * PI * st.k as f64 * (1.0 + outer.cos());
    let defect = (rep.energy_excess - PI * rep.bogomolnyi_norm - boundary).abs() / rep.energy;
    rows.push(at_most("energy: Bogomolnyi identity on config data", defect, 1e-10));
    Ok(())
}

/// Runs every check; the config supplies `k`, the quadrature grid and the
/// data for the Bogomolnyi check.
pub fn verify(config: &RunConfig) -> Result<Vec<CheckRow>> {
    config.validate()?;
    let k = match &config.initial {
        InitialConfig::Focusing(s) => s.k,
        InitialConfig::Profile(s) => s.k,
    };
    let grid = config.grid.build()?;
    let mut rows = Vec::new();
    profile_checks(k, &grid, &mut rows)?;
    quadrature_checks(&config.grid, &mut rows)?;
    static_checks(k, &mut rows)?;
    formulation_checks(k, &mut rows)?;
    modulation_checks(k, &grid, &mut rows)?;
    bogomolnyi_check(config, &mut rows)?;
    Ok(rows)
}

pub fn format_table(rows: &[CheckRow]) -> String {
    let w = rows.iter().map(|r| r.name.len()).max().unwrap_or(5).max(5);
    let mut s = format!("{:<w$}  {:>12}  {:<16}  result\n", "check", "value", "rule");
    for r in rows {
        s.push_str(&format!(
            "{:<w$}  {:>12.4e}  {:<16}  {}\n",
            r.name,
            r.value,
            r.rule,
            if r.pass { "PASS" } else { "FAIL" }
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_has_one_line_per_check() {
        let rows = vec![at_most("a", 1e-9, 1e-8), within("bb", 5.0, 1.0, 2.0)];
        let t = format_table(&rows);
        assert_eq!(t.lines().count(), 3);
        assert!(t.lines().nth(1).unwrap().ends_with("PASS"));
        assert!(t.lines().nth(2).unwrap().ends_with("FAIL"));
    }
}
