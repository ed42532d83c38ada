//! Energies, weighted energies and dissipation checks.
//!
//! Gradient terms of the energy are integrated per cell: on the cell
//! `[r_j, r_{j+1}]` (including the stub from the origin, where `phi = 0`)
//! `phi_r` is the difference quotient `D_j` and `sin phi` is its cell mean
//! `S_j = (cos phi_j - cos phi_{j+1}) / (phi_{j+1} - phi_j)`, both taken at the
//! cell midpoint. Then `2k D_j S_j h_j` telescopes, and
//! `E - pi * bogomolnyi = 2 pi k (1 - cos phi_N)` holds to rounding.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::evolution::{h_rate, FieldState};
use crate::grid::RadialGrid;
use crate::profiles::{apply_a, eval_w0, profile_point, ProfileConstants, ProfileParams};

pub const DEFAULT_DELTA: f64 = 0.5;
pub const DEFAULT_CONE_SLOPE: f64 = 2.0;
/// `c_0^2` in the dissipation identity.
pub const DEFAULT_C0_SQ: f64 = 1.5;
/// `1 + cos(phi(r_max))` above this means the outer value is not near `pi`.
pub const SECTOR_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    /// Weight exponent offset, `r^{2 + delta}`; must lie in `(0, 1)`.
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Exterior region is `r >= cone_slope * t`.
    #[serde(default = "default_cone")]
    pub cone_slope: f64,
    /// `c_0^2` of the dissipation identity, in `(1, 2)`.
    #[serde(default = "default_c0_sq")]
    pub c0_sq: f64,
}

fn default_delta() -> f64 {
    DEFAULT_DELTA
}
fn default_cone() -> f64 {
    DEFAULT_CONE_SLOPE
}
fn default_c0_sq() -> f64 {
    DEFAULT_C0_SQ
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            delta: DEFAULT_DELTA,
            cone_slope: DEFAULT_CONE_SLOPE,
            c0_sq: DEFAULT_C0_SQ,
        }
    }
}

impl DiagnosticsConfig {
    pub fn validate(&self) -> Result<()> {
        validate_delta(self.delta)?;
        if !(self.cone_slope > 0.0) || !self.cone_slope.is_finite() {
            return Err(SimError::Config(format!("cone_slope must be positive, got {}", self.cone_slope)));
        }
        if !(self.c0_sq > 1.0 && self.c0_sq < 2.0) {
            return Err(SimError::Config(format!("c0_sq must lie in (1, 2), got {}", self.c0_sq)));
        }
        Ok(())
    }
}

pub fn validate_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(SimError::Config(format!("delta must lie in (0, 1), got {delta}")))
    }
}

/// Cell sums of the gradient energy.
#[derive(Debug, Clone, Copy, PartialEq)]
struct GradientSums {
    /// `sum (D^2 + k^2 S^2 / r_m^2) r_m h`
    energy: f64,
    /// `sum (D - k S / r_m)^2 r_m h`
    bogomolnyi: f64,
}

fn cell_sin_mean(a: f64, b: f64) -> f64 {
    let d = b - a;
    if d.abs() < 1e-7 {
        // mean of sin over [a, b] to O(d^2)
        let m = 0.5 * (a + b);
        m.sin() * (1.0 - d * d / 24.0)
    } else {
        (a.cos() - b.cos()) / d
    }
}

fn gradient_sums(phi: &[f64], k: u32, grid: &RadialGrid) -> GradientSums {
    let kf = k as f64;
    let nodes = grid.nodes();
    let spacing = grid.spacing();
    let mut energy = 0.0;
    let mut bogomolnyi = 0.0;
    let mut prev_r = 0.0;
    let mut prev_phi = 0.0;
    for (i, &r) in nodes.iter().enumerate() {
        let h = spacing[i];
        let rm = 0.5 * (prev_r + r);
        let d = (phi[i] - prev_phi) / h;
        let s = cell_sin_mean(prev_phi, phi[i]);
        let ks = kf * s / rm;
        energy += (d * d + ks * ks) * rm * h;
        bogomolnyi += (d - ks).powi(2) * rm * h;
        prev_r = r;
        prev_phi = phi[i];
    }
    GradientSums { energy, bogomolnyi }
}

/// `E = pi int (phi_t^2 + phi_r^2 + k^2 sin^2(phi)/r^2 + v^2) r dr`.
pub fn total_energy(state: &FieldState, grid: &RadialGrid) -> Result<f64> {
    let kin = grid.norm_sq(&state.phi_t)? + grid.norm_sq(&state.v)?;
    Ok(PI * (kin + gradient_sums(&state.phi, state.k, grid).energy))
}

/// `h` energies at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HEnergy {
    /// `int (h_t^2 + h_r^2 + h^2/r^2) r dr`
    pub energy: f64,
    /// `int (h_tr^2 + h_t^2/r^2 + h_t^2) r dr`
    pub dissipation: f64,
    /// `int h_tr^2 r^{2 + delta} dr`
    pub h_tr_weighted: f64,
    /// `int (h_t^2 + phi_t^2 + phi_r^2) r^{2 + delta} dr`
    pub weighted: f64,
}

/// `h` energies from the evolved `h` and `h_t` from its equation.
pub fn h_energy_report(state: &FieldState, delta: f64, grid: &RadialGrid) -> Result<HEnergy> {
    validate_delta(delta)?;
    let h_t = h_rate(state, grid)?;
    h_energy_from(&state.h, &h_t, &state.phi, &state.phi_t, delta, grid)
}

/// `h` energies for given `h`, `h_t`, `phi`, `phi_t` samples.
pub fn h_energy_from(
    h: &[f64],
    h_t: &[f64],
    phi: &[f64],
    phi_t: &[f64],
    delta: f64,
    grid: &RadialGrid,
) -> Result<HEnergy> {
    validate_delta(delta)?;
    let h_r = grid.derivative(h, 0.0)?;
    let h_tr = grid.derivative(h_t, 0.0)?;
    let phi_r = grid.derivative(phi, 0.0)?;
    let n = grid.len();
    let mut e = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut htw = vec![0.0; n];
    let mut w = vec![0.0; n];
    for (i, &r) in grid.nodes().iter().enumerate() {
        let r2 = r * r;
        e[i] = h_t[i] * h_t[i] + h_r[i] * h_r[i] + h[i] * h[i] / r2;
        d[i] = h_tr[i] * h_tr[i] + h_t[i] * h_t[i] / r2 + h_t[i] * h_t[i];
        let rw = r.powf(1.0 + delta);
        htw[i] = h_tr[i] * h_tr[i] * rw;
        w[i] = (h_t[i] * h_t[i] + phi_t[i] * phi_t[i] + phi_r[i] * phi_r[i]) * rw;
    }
    Ok(HEnergy {
        energy: grid.weighted_integral(&e, 0)?,
        dissipation: grid.weighted_integral(&d, 0)?,
        h_tr_weighted: grid.weighted_integral(&htw, 0)?,
        weighted: grid.weighted_integral(&w, 0)?,
    })
}

/// Instantaneous integrands of the `E_delta` functional of `psi = A_l w`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EDeltaDensity {
    /// `int l^-1 (l r)^d / (1 + r^d) [(L psi)^2 + psi^2/r^2] r dr`
    pub level: f64,
    /// `int [l^-1 (l r)^d / ((1 + r^d)^2 r) (L psi)^2 + (l r)^d/(1 + r^d) psi^2/r^3] r dr`
    pub flux: f64,
}

/// `psi = A_l (u - w_0)` with `u = phi - I_l`.
pub fn psi_field(
    state: &FieldState,
    lambda: f64,
    lambda_dot: f64,
    consts: &ProfileConstants,
    grid: &RadialGrid,
) -> Result<Vec<f64>> {
    let p = ProfileParams::new(state.k, lambda)?;
    let w0 = eval_w0(p, lambda_dot, consts, grid);
    let w: Vec<f64> = grid
        .nodes()
        .iter()
        .zip(&state.phi)
        .zip(&w0)
        .map(|((&r, &ph), &a)| ph - profile_point(state.k, lambda * r).i - a)
        .collect();
    apply_a(p, &w, grid)
}

/// `E_delta` integrands for `psi` with time derivative `psi_t`; `L = d_r + d_t`.
pub fn e_delta_density(
    psi: &[f64],
    psi_t: &[f64],
    lambda: f64,
    delta: f64,
    grid: &RadialGrid,
) -> Result<EDeltaDensity> {
    validate_delta(delta)?;
    grid.check(psi_t)?;
    let psi_r = grid.derivative(psi, 0.0)?;
    let n = grid.len();
    let mut level = vec![0.0; n];
    let mut flux = vec![0.0; n];
    for (i, &r) in grid.nodes().iter().enumerate() {
        let lpsi = psi_r[i] + psi_t[i];
        let q = 1.0 + r.powf(delta);
        let wgt = (lambda * r).powf(delta) / q;
        let p2 = psi[i] * psi[i];
        level[i] = wgt / lambda * (lpsi * lpsi + p2 / (r * r));
        flux[i] = wgt / (lambda * q * r) * lpsi * lpsi + wgt * p2 / (r * r * r);
    }
    Ok(EDeltaDensity {
        level: grid.weighted_integral(&level, 0)?,
        flux: grid.weighted_integral(&flux, 0)?,
    })
}

/// Energy functionals at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub t: f64,
    pub energy: f64,
    /// `E - 4 k pi`
    pub energy_excess: f64,
    /// `int [phi_t^2 + (phi_r - (k/r) sin phi)^2 + v^2] r dr`
    pub bogomolnyi_norm: f64,
    /// `E - 4 k pi - pi * bogomolnyi_norm`, the outer-boundary defect
    /// `-2 pi k (1 + cos phi(r_max))`.
    pub bogomolnyi_defect: f64,
    /// `int [phi_t^2 + u_r^2 + k^2 u^2/r^2 + v^2] r dr`
    pub e0: f64,
    /// `int (phi_t^2 + phi_r^2 + h_t^2) r^{2+delta} dr` when `h` is present,
    /// otherwise without the `h_t` term.
    pub weighted: f64,
    /// `int_{r >= slope t} r^2 [phi_t^2 + u_r^2 + k^2 u^2/r^2 + v^2] r dr`
    pub exterior: f64,
    /// The same integrand over the whole grid.
    pub weighted_e0: f64,
    pub h_energy: Option<HEnergy>,
    /// Outer value of `phi` is not near `pi`.
    pub out_of_sector: bool,
}

pub fn energy_report(
    state: &FieldState,
    lambda: f64,
    cfg: &DiagnosticsConfig,
    grid: &RadialGrid,
) -> Result<EnergyReport> {
    cfg.validate()?;
    grid.check(&state.phi)?;
    let k = state.k;
    let kf = k as f64;
    let kin = grid.norm_sq(&state.phi_t)? + grid.norm_sq(&state.v)?;
    let g = gradient_sums(&state.phi, k, grid);
    let energy = PI * (kin + g.energy);
    let bogomolnyi_norm = kin + g.bogomolnyi;
    let energy_excess = energy - 4.0 * kf * PI;

    let u: Vec<f64> = grid
        .nodes()
        .iter()
        .zip(&state.phi)
        .map(|(&r, &p)| p - profile_point(k, lambda * r).i)
        .collect();
    let u_r = grid.derivative(&u, 0.0)?;
    let e0_density: Vec<f64> = grid
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            state.phi_t[i].powi(2) + u_r[i].powi(2) + kf * kf * u[i] * u[i] / (r * r) + state.v[i].powi(2)
        })
        .collect();
    let e0 = grid.weighted_integral(&e0_density, 0)?;
    let r2_density: Vec<f64> = e0_density.iter().zip(grid.nodes()).map(|(e, r)| e * r * r).collect();
    let exterior = grid.weighted_integral_beyond(&r2_density, cfg.cone_slope * state.t)?;
    let weighted_e0 = grid.weighted_integral(&r2_density, 0)?;

    let h_energy = if state.h.len() == state.len() {
        Some(h_energy_report(state, cfg.delta, grid)?)
    } else {
        None
    };
    let weighted = match h_energy {
        Some(h) => h.weighted,
        None => {
            let phi_r = grid.derivative(&state.phi, 0.0)?;
            let w: Vec<f64> = grid
                .nodes()
                .iter()
                .enumerate()
                .map(|(i, &r)| (state.phi_t[i].powi(2) + phi_r[i].powi(2)) * r.powf(1.0 + cfg.delta))
                .collect();
            grid.weighted_integral(&w, 0)?
        }
    };
    let outer = *state.phi.last().expect("non-empty grid");
    Ok(EnergyReport {
        t: state.t,
        energy,
        energy_excess,
        bogomolnyi_norm,
        bogomolnyi_defect: energy_excess - PI * bogomolnyi_norm,
        e0,
        weighted,
        exterior,
        weighted_e0,
        h_energy,
        out_of_sector: 1.0 + outer.cos() > SECTOR_TOLERANCE,
    })
}

/// Centred check of the energy identity at the middle of three states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DissipationCheck {
    /// `d/dt (E / 2 pi)` by centred differencing
    pub lhs: f64,
    /// `-int (2 - c^2) phi_t^2 - int (1 - 1/c^2) v_r^2 - int (c phi_t + v_r / c)^2`
    pub rhs: f64,
    /// `-int v_r^2 - 2 int phi_t^2 - 2 int phi_t v_r`
    pub rhs_exact_form: f64,
    pub residual: f64,
    pub residual_exact_form: f64,
}

/// Right-hand sides of the energy identity at one state.
pub fn dissipation_rhs(state: &FieldState, c0_sq: f64, grid: &RadialGrid) -> Result<(f64, f64)> {
    if !(c0_sq > 1.0 && c0_sq < 2.0) {
        return Err(SimError::Config(format!("c0_sq must lie in (1, 2), got {c0_sq}")));
    }
    let v_r = grid.derivative(&state.v, grid.even_origin(&state.v))?;
    let c = c0_sq.sqrt();
    let n = grid.len();
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    for i in 0..n {
        let pt = state.phi_t[i];
        let vr = v_r[i];
        a[i] = (2.0 - c0_sq) * pt * pt + (1.0 - 1.0 / c0_sq) * vr * vr + (c * pt + vr / c).powi(2);
        b[i] = vr * vr + 2.0 * pt * pt + 2.0 * pt * vr;
    }
    Ok((-grid.weighted_integral(&a, 0)?, -grid.weighted_integral(&b, 0)?))
}

/// Relative tolerance on equal time spacing.
const SPACING_RTOL: f64 = 1e-9;

pub fn dissipation_residual(
    history: [(&FieldState, f64); 3],
    c0_sq: f64,
    grid: &RadialGrid,
) -> Result<DissipationCheck> {
    let [(s0, e0), (s1, _), (s2, e2)] = history;
    let dt0 = s1.t - s0.t;
    let dt1 = s2.t - s1.t;
    if !(dt0 > 0.0) || (dt1 - dt0).abs() > SPACING_RTOL * dt0 {
        return Err(SimError::NotReady("energy history needs uniform spacing"));
    }
    let lhs = (e2 - e0) / (2.0 * dt0) / (2.0 * PI);
    let (rhs, rhs_exact_form) = dissipation_rhs(s1, c0_sq, grid)?;
    Ok(DissipationCheck {
        lhs,
        rhs,
        rhs_exact_form,
        residual: (lhs - rhs).abs(),
        residual_exact_form: (lhs - rhs_exact_form).abs(),
    })
}

/// Running trapezoid integral in time.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TimeIntegral {
    pub value: f64,
    last: Option<(f64, f64)>,
}

impl TimeIntegral {
    pub fn add(&mut self, t: f64, f: f64) {
        if let Some((t0, f0)) = self.last {
            self.value += 0.5 * (t - t0) * (f0 + f);
        }
        self.last = Some((t, f));
    }
}
