//! Time stepping with tracking, diagnostics and persistence.
//!
//! Quantities that need a centred time derivative at level `n` are formed
//! once level `n + 1` exists, so the row for step `n` is written one step
//! late. The final row of a run carries `NaN` in those columns.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{Formulation, InitialConfig, RunConfig, TrackingMode};
use super::output::{
    snapshot_path, write_json_atomic, CsvSink, Row, Snapshot, CHECKPOINT_FILE, MANIFEST_FILE,
    SNAPSHOT_DIR, TIMESERIES_FILE,
};
use crate::diagnostics::{
    dissipation_residual, e_delta_density, energy_report, h_energy_report, psi_field, total_energy,
    DissipationCheck, TimeIntegral,
};
use crate::error::{Result, SimError};
use crate::evolution::{h_rate, step, step_h_formulation, FieldState};
use crate::grid::{Grading, RadialGrid};
use crate::initial_data::{build_initial, project_out, ModulationSeed, SmallnessReport};
use crate::modulation::{
    extract_lambda, key1_residual, lambda_ode_rhs, riccati_coefficients, riccati_integrand,
    riccati_k1, riccati_monitor, ModulationTrack, OdeTracker, RiccatiCoefficients,
    RiccatiIntegrator, RiccatiReport,
};
use crate::profiles::{profile_point, ProfileConstants};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    TEnd,
    LambdaStop,
    Resolution,
    Nan,
    /// The orthogonality root left its bracket or the trajectory equation
    /// degenerated.
    TrackingLost,
    MaxSteps,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::TEnd => "t_end",
            StopReason::LambdaStop => "lambda_stop",
            StopReason::Resolution => "resolution",
            StopReason::Nan => "nan",
            StopReason::TrackingLost => "tracking_lost",
            StopReason::MaxSteps => "max_steps",
        }
    }
}

/// One time level with its modulation parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct Level {
    state: FieldState,
    /// Parameters of the configured track.
    lambda: f64,
    lambda_dot: f64,
    alpha: f64,
    lambda_root: f64,
    lambda_ode: f64,
    energy: f64,
    /// `A_l (u - w_0)`
    psi: Vec<f64>,
}

/// Facts fixed at `t = 0`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SetupInfo {
    /// Scale the data was built at (`eps^-4` or `mu`).
    pub lambda_build: f64,
    /// Root of the orthogonality condition at `t = 0`.
    pub lambda_initial: f64,
    pub seed: Option<ModulationSeed>,
    pub smallness: Option<SmallnessReport>,
    /// `<u_0, J_l0> / |J_l0|^2` after projection.
    pub orthogonality: f64,
    /// `I_l0(r_max) - pi`: the outer Dirichlet value is pinned at the profile.
    pub boundary_defect: f64,
    pub riccati: RiccatiCoefficients,
}

/// Everything needed to continue a run bit for bit.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct RunState {
    setup: SetupInfo,
    prev: Option<Level>,
    cur: Level,
    ode: OdeTracker,
    riccati: RiccatiIntegrator,
    e_delta_flux: TimeIntegral,
    h_tr_integral: TimeIntegral,
    track: ModulationTrack,
    rows: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct Checkpoint {
    version: u32,
    config_hash: String,
    config: RunConfig,
    /// Byte length of the time series when the checkpoint was taken.
    csv_len: u64,
    run: RunState,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridStats {
    pub n: usize,
    pub r_max: f64,
    pub grading: Grading,
    pub r_first: f64,
    pub min_spacing: f64,
    pub max_spacing: f64,
}

impl GridStats {
    fn of(grid: &RadialGrid) -> Self {
        Self {
            n: grid.len(),
            r_max: grid.r_max(),
            grading: grid.grading(),
            r_first: grid.nodes()[0],
            min_spacing: grid.min_spacing(),
            max_spacing: grid.spacing().iter().cloned().fold(0.0, f64::max),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub stop_reason: StopReason,
    pub steps: u64,
    pub t_final: f64,
    pub lambda_final: f64,
    pub rows: u64,
    pub e_delta_flux_integral: f64,
    pub h_tr_weighted_integral: f64,
    pub riccati: Option<RiccatiReport>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: String,
    pub program_version: String,
    pub config_hash: String,
    pub grid: GridStats,
    pub constants: ProfileConstants,
    pub setup: SetupInfo,
    pub summary: RunSummary,
}

/// Centred quantities at the middle of three levels.
#[derive(Debug, Clone, Copy)]
struct Centered {
    lambda_ddot: f64,
    key1: f64,
    riccati_integrand: f64,
    e_delta_level: f64,
    e_delta_flux: f64,
    dissipation: Option<DissipationCheck>,
}

enum Halt {
    Stop(StopReason),
    Fail(SimError),
}

impl From<SimError> for Halt {
    fn from(e: SimError) -> Self {
        Halt::Fail(e)
    }
}

struct Output {
    dir: PathBuf,
    csv: CsvSink,
}

pub struct Simulation {
    config: RunConfig,
    grid: RadialGrid,
    consts: ProfileConstants,
    hash: String,
    run: RunState,
    out: Option<Output>,
    rows: Vec<Row>,
    summary: Option<RunSummary>,
}

fn initial_state(
    cfg: &RunConfig,
    consts: &ProfileConstants,
    grid: &RadialGrid,
) -> Result<(FieldState, f64, Option<ModulationSeed>, Option<SmallnessReport>)> {
    match &cfg.initial {
        InitialConfig::Focusing(spec) => {
            let d = build_initial(spec, consts, grid)?;
            Ok((d.state, d.seed.lambda0, Some(d.seed), Some(d.smallness)))
        }
        InitialConfig::Profile(spec) => {
            let n = grid.len();
            let (k, mu) = (spec.k, spec.mu);
            let mut phi = grid.map(|r| profile_point(k, mu * r).i);
            let mut dir = grid.map(|r| profile_point(k, mu * r).j);
            dir[n - 1] = 0.0;
            let mut bump = spec.phi_bump.sample(k, mu, spec.seed, grid);
            bump[n - 1] = 0.0;
            if bump.iter().any(|&b| b != 0.0) {
                bump = project_out(&bump, &dir, grid)?;
            }
            for (p, b) in phi.iter_mut().zip(&bump) {
                *p += b;
            }
            let mut phi_t = spec.phi_t_bump.sample(k, mu, spec.seed.wrapping_add(1), grid);
            phi_t[n - 1] = 0.0;
            let state = FieldState::new(k, grid, phi, phi_t, vec![0.0; n])?;
            Ok((state, mu, None, None))
        }
    }
}

fn max_abs(f: &[f64]) -> f64 {
    f.iter().fold(0.0, |m: f64, x| m.max(x.abs()))
}

impl Simulation {
    /// Builds the initial data; `out` (if any) is created and receives a
    /// fresh time series.
    pub fn new(config: RunConfig, out: Option<&Path>) -> Result<Self> {
        config.validate()?;
        let grid = config.grid.build()?;
        let consts = ProfileConstants::reference(config.initial.k())?;
        let hash = config.hash();
        let (state, lambda_build, seed, smallness) = initial_state(&config, &consts, &grid)?;
        let lambda_initial = extract_lambda(&state, lambda_build, &grid)?;
        let ode = OdeTracker::new(&state, lambda_initial, &consts, &grid)?;
        let mode = config.tracking.mode;
        let cur = Self::level(&config, &consts, &grid, state, lambda_initial, &ode)?;
        let riccati = riccati_coefficients(&cur.state, cur.lambda, cur.lambda_dot, &consts, &grid)?;
        let j: Vec<f64> = grid.map(|r| profile_point(cur.state.k, lambda_initial * r).j);
        let u: Vec<f64> = grid
            .nodes()
            .iter()
            .zip(&cur.state.phi)
            .map(|(&r, p)| p - profile_point(cur.state.k, lambda_initial * r).i)
            .collect();
        let setup = SetupInfo {
            lambda_build,
            lambda_initial,
            seed,
            smallness,
            orthogonality: grid.inner(&u, &j)? / grid.norm_sq(&j)?,
            boundary_defect: profile_point(cur.state.k, lambda_build * grid.r_max()).i
                - std::f64::consts::PI,
            riccati,
        };
        let run = RunState {
            setup,
            prev: None,
            cur,
            ode,
            riccati: RiccatiIntegrator::new(riccati),
            e_delta_flux: TimeIntegral::default(),
            h_tr_integral: TimeIntegral::default(),
            track: ModulationTrack::new(mode.into()),
            rows: 0,
        };
        let out = match out {
            Some(dir) => {
                fs::create_dir_all(dir)?;
                if config.output.snapshot_every > 0 {
                    fs::create_dir_all(dir.join(SNAPSHOT_DIR))?;
                }
                Some(Output {
                    dir: dir.to_path_buf(),
                    csv: CsvSink::create(&dir.join(TIMESERIES_FILE))?,
                })
            }
            None => None,
        };
        let sim = Self {
            config,
            grid,
            consts,
            hash,
            run,
            out,
            rows: Vec::new(),
            summary: None,
        };
        sim.maybe_snapshot()?;
        Ok(sim)
    }

    /// Continues from `<dir>/checkpoint.json`; the time series in `dir` is cut
    /// back to its length at the checkpoint.
    pub fn resume(dir: &Path) -> Result<Self> {
        let path = dir.join(CHECKPOINT_FILE);
        let text = fs::read_to_string(&path)?;
        let ck: Checkpoint = serde_json::from_str(&text)
            .map_err(|e| SimError::Checkpoint(format!("{}: {e}", path.display())))?;
        if ck.version != CHECKPOINT_VERSION {
            return Err(SimError::Checkpoint(format!(
                "checkpoint version {} is not {CHECKPOINT_VERSION}",
                ck.version
            )));
        }
        ck.config.validate()?;
        let hash = ck.config.hash();
        if hash != ck.config_hash {
            return Err(SimError::Checkpoint("config hash does not match the stored config".into()));
        }
        let grid = ck.config.grid.build()?;
        let consts = ProfileConstants::reference(ck.config.initial.k())?;
        let csv = CsvSink::reopen_truncated(&dir.join(TIMESERIES_FILE), ck.csv_len)?;
        Ok(Self {
            config: ck.config,
            grid,
            consts,
            hash,
            run: ck.run,
            out: Some(Output {
                dir: dir.to_path_buf(),
                csv,
            }),
            rows: Vec::new(),
            summary: None,
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn constants(&self) -> &ProfileConstants {
        &self.consts
    }

    pub fn config_hash(&self) -> &str {
        &self.hash
    }

    pub fn setup(&self) -> &SetupInfo {
        &self.run.setup
    }

    pub fn state(&self) -> &FieldState {
        &self.run.cur.state
    }

    pub fn lambda(&self) -> f64 {
        self.run.cur.lambda
    }

    /// Rows produced by this process (rows written before a resume are only
    /// in the CSV file).
    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn track(&self) -> &ModulationTrack {
        &self.run.track
    }

    fn level(
        cfg: &RunConfig,
        consts: &ProfileConstants,
        grid: &RadialGrid,
        state: FieldState,
        lambda_root: f64,
        ode: &OdeTracker,
    ) -> Result<Level> {
        let (lambda, lambda_dot, alpha) = match cfg.tracking.mode {
            TrackingMode::Rootfind => {
                let rhs = lambda_ode_rhs(&state, lambda_root, consts, grid)?;
                (lambda_root, rhs.lambda_dot, rhs.alpha)
            }
            TrackingMode::Ode63 => (ode.lambda, ode.rhs.lambda_dot, ode.rhs.alpha),
        };
        let energy = total_energy(&state, grid)?;
        let psi = psi_field(&state, lambda, lambda_dot, consts, grid)?;
        Ok(Level {
            state,
            lambda,
            lambda_dot,
            alpha,
            lambda_root,
            lambda_ode: ode.lambda,
            energy,
            psi,
        })
    }

    fn stop_check(&self) -> Option<StopReason> {
        let cur = &self.run.cur;
        let s = &self.config.stop;
        let dt = self.config.scheme.dt;
        if cur.state.t >= s.t_end - 1e-9 * dt {
            return Some(StopReason::TEnd);
        }
        if cur.lambda > s.lambda_stop_factor * self.run.setup.lambda_initial {
            return Some(StopReason::LambdaStop);
        }
        let core = 1.0 / cur.lambda;
        if core < s.resolution_nodes * self.grid.spacing_at(core) {
            return Some(StopReason::Resolution);
        }
        if s.max_steps.is_some_and(|m| cur.state.step >= m) {
            return Some(StopReason::MaxSteps);
        }
        None
    }

    fn centered(&self, prev: Option<&Level>, cur: &Level, next: &Level) -> Result<Centered> {
        let grid = &self.grid;
        let dt = next.state.t - cur.state.t;
        let (back, span) = match prev {
            Some(p) => (p, 2.0 * dt),
            None => (cur, dt),
        };
        let lambda_ddot = (next.lambda_dot - back.lambda_dot) / span;
        let psi_t: Vec<f64> = next
            .psi
            .iter()
            .zip(&back.psi)
            .map(|(a, b)| (a - b) / span)
            .collect();
        let h_t = h_rate(&cur.state, grid)?;
        let key1 = key1_residual(
            &cur.state,
            &h_t,
            cur.lambda,
            cur.lambda_dot,
            lambda_ddot,
            &self.consts,
            grid,
        )?;
        let integrand =
            riccati_integrand(&cur.state, &h_t, cur.lambda, cur.lambda_dot, lambda_ddot, grid)?;
        let ed = e_delta_density(&cur.psi, &psi_t, cur.lambda, self.config.diagnostics.delta, grid)?;
        let dissipation = match prev {
            Some(p) => Some(dissipation_residual(
                [(&p.state, p.energy), (&cur.state, cur.energy), (&next.state, next.energy)],
                self.config.diagnostics.c0_sq,
                grid,
            )?),
            None => None,
        };
        Ok(Centered {
            lambda_ddot,
            key1: key1.residual,
            riccati_integrand: integrand,
            e_delta_level: ed.level,
            e_delta_flux: ed.flux,
            dissipation,
        })
    }

    fn make_row(&self, lv: &Level, c: Option<&Centered>, h_tr_weighted: f64) -> Result<Row> {
        let grid = &self.grid;
        let st = &lv.state;
        let rep = energy_report(st, lv.lambda, &self.config.diagnostics, grid)?;
        let j: Vec<f64> = grid.map(|r| profile_point(st.k, lv.lambda * r).j);
        let u: Vec<f64> = grid
            .nodes()
            .iter()
            .zip(&st.phi)
            .map(|(&r, p)| p - profile_point(st.k, lv.lambda * r).i)
            .collect();
        let orthogonality = (grid.inner(&u, &j)? / grid.norm_sq(&j)?).abs();
        let k1 = riccati_k1(st, lv.lambda, &self.consts, grid)?;
        let riccati_residual = self.run.riccati.residual(k1, lv.lambda, lv.lambda_dot, self.consts.c0_const);
        let (h_energy, h_dissipation) = rep.h_energy.map_or((f64::NAN, f64::NAN), |h| (h.energy, h.dissipation));
        let d = c.and_then(|c| c.dissipation);
        let nan = f64::NAN;
        let l = lv.lambda;
        Ok(Row {
            t: st.t,
            step: st.step,
            lambda: l,
            lambda_dot: lv.lambda_dot,
            lambda_ddot: c.map_or(nan, |c| c.lambda_ddot),
            gamma: -lv.lambda_dot / (l * l),
            focus_monitor: lv.lambda_dot.powi(4) / l.powi(7),
            alpha_coeff: lv.alpha,
            lambda_rootfind: lv.lambda_root,
            lambda_ode: lv.lambda_ode,
            divergence_metric: (lv.lambda_ode - lv.lambda_root).abs() / lv.lambda_root,
            orthogonality,
            key1_residual: c.map_or(nan, |c| c.key1),
            riccati_residual,
            energy: rep.energy,
            energy_excess: rep.energy_excess,
            bogomolnyi_norm: rep.bogomolnyi_norm,
            bogomolnyi_defect: rep.bogomolnyi_defect,
            e0: rep.e0,
            weighted: rep.weighted,
            exterior: rep.exterior,
            weighted_e0: rep.weighted_e0,
            h_energy,
            h_dissipation,
            h_tr_weighted,
            h_tr_weighted_integral: self.run.h_tr_integral.value,
            e_delta_level: c.map_or(nan, |c| c.e_delta_level),
            e_delta_flux_integral: self.run.e_delta_flux.value,
            dissipation_lhs: d.map_or(nan, |d| d.lhs),
            dissipation_rhs: d.map_or(nan, |d| d.rhs),
            dissipation_rhs_exact: d.map_or(nan, |d| d.rhs_exact_form),
            dissipation_residual: d.map_or(nan, |d| d.residual),
            dissipation_residual_exact: d.map_or(nan, |d| d.residual_exact_form),
            max_abs_phi_t: max_abs(&st.phi_t),
            max_abs_v: max_abs(&st.v),
        })
    }

    fn emit(&mut self, row: Row) -> Result<()> {
        if let Some(o) = self.out.as_mut() {
            o.csv.write_row(&row)?;
        }
        self.run.rows += 1;
        self.rows.push(row);
        Ok(())
    }

    fn try_step(&mut self) -> std::result::Result<(), Halt> {
        let grid = &self.grid;
        let cfg = &self.config;
        let cur = &self.run.cur;
        let next_state = match cfg.tracking.formulation {
            Formulation::Velocity => step(&cur.state, grid, &cfg.scheme),
            Formulation::Averaged => step_h_formulation(&cur.state, grid, &cfg.scheme),
        };
        let next_state = match next_state {
            Ok(s) => s,
            Err(SimError::NonFinite { .. }) => return Err(Halt::Stop(StopReason::Nan)),
            Err(e) => return Err(e.into()),
        };
        let lost = |e: SimError| match e {
            SimError::TrackingLost { .. }
            | SimError::DegenerateDenominator { .. }
            | SimError::NonFinite { .. } => Halt::Stop(StopReason::TrackingLost),
            other => Halt::Fail(other),
        };
        let mut ode = self.run.ode;
        ode.advance(&next_state, cfg.scheme.dt, &self.consts, grid).map_err(lost)?;
        let lambda_root = extract_lambda(&next_state, cur.lambda_root, grid).map_err(lost)?;
        let next = Self::level(cfg, &self.consts, grid, next_state, lambda_root, &ode).map_err(lost)?;

        let c = self.centered(self.run.prev.as_ref(), cur, &next)?;
        let h_tr_weighted = h_energy_report(&cur.state, cfg.diagnostics.delta, grid)?.h_tr_weighted;
        let t = cur.state.t;
        self.run.riccati.accumulate(t, c.riccati_integrand);
        self.run.e_delta_flux.add(t, c.e_delta_flux);
        self.run.h_tr_integral.add(t, h_tr_weighted);

        if cur.state.step % cfg.output.steps_per_report == 0 {
            let row = self.make_row(cur, Some(&c), h_tr_weighted)?;
            self.run.track.push(
                row.t,
                row.lambda,
                row.lambda_dot,
                row.alpha_coeff,
                row.key1_residual,
                row.divergence_metric,
            );
            self.emit(row)?;
        }

        self.run.ode = ode;
        let old = std::mem::replace(&mut self.run.cur, next);
        self.run.prev = Some(old);

        let step_no = self.run.cur.state.step;
        let every = self.config.output.checkpoint_every;
        if every > 0 && step_no % every == 0 {
            self.write_checkpoint()?;
        }
        self.maybe_snapshot()?;
        Ok(())
    }

    fn maybe_snapshot(&self) -> Result<()> {
        let every = self.config.output.snapshot_every;
        let step_no = self.run.cur.state.step;
        if let Some(o) = &self.out {
            if every > 0 && step_no % every == 0 {
                let snap = Snapshot::new(&self.run.cur.state, &self.grid, &self.hash);
                write_json_atomic(&snapshot_path(&o.dir, step_no), &snap)?;
            }
        }
        Ok(())
    }

    /// Writes `checkpoint.json` for the current level (no-op without an
    /// output directory).
    pub fn write_checkpoint(&mut self) -> Result<()> {
        let Some(o) = self.out.as_mut() else {
            return Ok(());
        };
        o.csv.flush()?;
        let ck = Checkpoint {
            version: CHECKPOINT_VERSION,
            config_hash: self.hash.clone(),
            config: self.config.clone(),
            csv_len: o.csv.len(),
            run: self.run.clone(),
        };
        write_json_atomic(&o.dir.join(CHECKPOINT_FILE), &ck)
    }

    fn finish(&mut self, reason: StopReason) -> Result<RunSummary> {
        if let Some(s) = &self.summary {
            return Ok(s.clone());
        }
        self.write_checkpoint()?;
        let cur = self.run.cur.clone();
        let h_tr = h_energy_report(&cur.state, self.config.diagnostics.delta, &self.grid)?.h_tr_weighted;
        let row = self.make_row(&cur, None, h_tr)?;
        self.run.track.push(
            row.t,
            row.lambda,
            row.lambda_dot,
            row.alpha_coeff,
            row.key1_residual,
            row.divergence_metric,
        );
        self.emit(row)?;
        let c_small = match &self.config.initial {
            InitialConfig::Focusing(s) => s.c_small,
            InitialConfig::Profile(_) => 1.0,
        };
        let summary = RunSummary {
            stop_reason: reason,
            steps: cur.state.step,
            t_final: cur.state.t,
            lambda_final: cur.lambda,
            rows: self.run.rows,
            e_delta_flux_integral: self.run.e_delta_flux.value,
            h_tr_weighted_integral: self.run.h_tr_integral.value,
            riccati: riccati_monitor(&self.run.track, c_small),
        };
        if let Some(o) = self.out.as_mut() {
            o.csv.flush()?;
            let manifest = Manifest {
                schema: self.config.schema.clone(),
                program_version: env!("CARGO_PKG_VERSION").to_string(),
                config_hash: self.hash.clone(),
                grid: GridStats::of(&self.grid),
                constants: self.consts,
                setup: self.run.setup.clone(),
                summary: summary.clone(),
            };
            write_json_atomic(&o.dir.join(MANIFEST_FILE), &manifest)?;
        }
        log::info!(
            "stopped ({}) at t = {:.6e}, step {}, lambda = {:.6e}",
            reason.as_str(),
            summary.t_final,
            summary.steps,
            summary.lambda_final
        );
        self.summary = Some(summary.clone());
        Ok(summary)
    }

    /// Takes up to `max_steps` steps. Returns the summary once a stop rule
    /// fires, `None` if the budget ran out first. On an unexpected error the
    /// current level is checkpointed before the error is returned.
    pub fn advance(&mut self, max_steps: u64) -> Result<Option<RunSummary>> {
        if let Some(s) = &self.summary {
            return Ok(Some(s.clone()));
        }
        for _ in 0..max_steps {
            if let Some(reason) = self.stop_check() {
                return self.finish(reason).map(Some);
            }
            match self.try_step() {
                Ok(()) => {}
                Err(Halt::Stop(reason)) => return self.finish(reason).map(Some),
                Err(Halt::Fail(e)) => {
                    if let Err(ck) = self.write_checkpoint() {
                        log::error!("could not persist checkpoint after failure: {ck}");
                    }
                    return Err(e);
                }
            }
        }
        Ok(None)
    }

    pub fn run(&mut self) -> Result<RunSummary> {
        loop {
            if let Some(s) = self.advance(u64::MAX)? {
                return Ok(s);
            }
        }
    }
}

/// Runs `config` to completion, writing artifacts to `out`.
pub fn run(config: RunConfig, out: &Path) -> Result<RunSummary> {
    Simulation::new(config, Some(out))?.run()
}

/// Continues the run checkpointed in `dir` to completion.
pub fn resume(dir: &Path) -> Result<RunSummary> {
    Simulation::resume(dir)?.run()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile_config(extra: &str) -> RunConfig {
        let text = format!(
            r#"
schema = "nematic-blowup/run/1"
[grid]
r_max = 10.0
n = 400
grading = {{ kind = "geometric", ratio = 1.01 }}
[scheme]
dt = 1e-3
[initial]
family = "profile"
k = 4
mu = 1.0
{extra}
[output]
steps_per_report = 5
checkpoint_every = 20
[stop]
t_end = 0.1
"#
        );
        RunConfig::from_toml_str(&text).unwrap()
    }

    #[test]
    fn static_profile_stays_in_ground_state() {
        let mut sim = Simulation::new(profile_config(""), None).unwrap();
        let s = sim.run().unwrap();
        assert_eq!(s.stop_reason, StopReason::TEnd);
        assert_eq!(s.steps, 100);
        for r in sim.rows() {
            assert!(r.energy_excess.abs() <= 1e-6, "{}", r.energy_excess);
            assert!((r.lambda - 1.0).abs() < 1e-6);
        }
        assert_eq!(sim.rows().len(), 21);
    }

    #[test]
    fn resume_reproduces_rows_byte_for_byte() {
        let bump = r#"phi_bump = { kind = "gaussian", amplitude = 1e-2 }"#;
        let full = tempfile::tempdir().unwrap();
        run(profile_config(bump), full.path()).unwrap();

        let cut = tempfile::tempdir().unwrap();
        let mut sim = Simulation::new(profile_config(bump), Some(cut.path())).unwrap();
        assert!(sim.advance(47).unwrap().is_none());
        drop(sim);
        // the crash left rows past step 40 that the resume must cut away
        let mut sim = Simulation::resume(cut.path()).unwrap();
        sim.run().unwrap();

        let a = fs::read(full.path().join(TIMESERIES_FILE)).unwrap();
        let b = fs::read(cut.path().join(TIMESERIES_FILE)).unwrap();
        assert_eq!(a, b);
        let ma = fs::read(full.path().join(MANIFEST_FILE)).unwrap();
        let mb = fs::read(cut.path().join(MANIFEST_FILE)).unwrap();
        assert_eq!(ma, mb);
    }
}
