//! Focusing initial data: a concentrated profile `I(lambda_0 r)` with a
//! small orthogonal perturbation, shrinking at rate `lambda_1`.
//!
//! ```text
//! v_0 = 0,  phi_0 = u_0 + I(lambda_0 r),  phi_1 = lambda_1 J(lambda_0 r) + g_0
//! lambda_0 = eps^-4,  lambda_1 = C_0^2 eps^5 / (pi |J(lambda_0 .)|^2)
//! ```

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::evolution::FieldState;
use crate::grid::RadialGrid;
use crate::profiles::{profile_point, ProfileConstants, ProfileParams};

/// Nodes required inside `r < 1/lambda_0`.
pub const MIN_CORE_NODES: usize = 16;

/// Radial bump shapes. `s = lambda_0 r` for the scale-adapted families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BumpShape {
    Zero,
    /// `amplitude s^power / (1 + s^2)^decay`
    Rational { amplitude: f64, power: f64, decay: f64 },
    /// `amplitude r exp(-r^2)`
    Gaussian { amplitude: f64 },
    /// `amplitude J(lambda_0 r)`
    ProfileJ { amplitude: f64 },
    /// Sum of `terms` rational bumps with seeded random coefficients in
    /// `[-amplitude, amplitude]`.
    RandomRational { amplitude: f64, terms: u32 },
}

impl BumpShape {
    pub fn default_u0(k: u32, amplitude: f64) -> Self {
        BumpShape::Rational {
            amplitude,
            power: 3.0,
            decay: (k as f64 + 2.0) / 2.0,
        }
    }

    pub fn default_g0(k: u32, amplitude: f64) -> Self {
        BumpShape::Rational {
            amplitude,
            power: 2.0,
            decay: (k as f64 + 3.0) / 2.0,
        }
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        match *self {
            BumpShape::Rational { amplitude, power, decay } => {
                if !amplitude.is_finite() {
                    return Err(SimError::Config(format!("{name}: amplitude must be finite")));
                }
                // finite weighted norms at 0 and infinity
                if power < 2.0 || 2.0 * decay - power <= 2.0 {
                    return Err(SimError::Config(format!(
                        "{name}: need power >= 2 and 2 decay - power > 2, got power {power}, decay {decay}"
                    )));
                }
            }
            BumpShape::Gaussian { amplitude }
            | BumpShape::ProfileJ { amplitude }
            | BumpShape::RandomRational { amplitude, .. } => {
                if !amplitude.is_finite() {
                    return Err(SimError::Config(format!("{name}: amplitude must be finite")));
                }
            }
            BumpShape::Zero => {}
        }
        Ok(())
    }

    /// Samples on the grid; `scale` plays the role of `lambda_0`.
    pub fn sample(&self, k: u32, scale: f64, seed: u64, grid: &RadialGrid) -> Vec<f64> {
        grid.map(|r| self.jet(k, scale, seed, U0_SALT, r)[0])
    }

    /// Concrete list of rational terms `(coef, power, decay)`, or `None` for
    /// the non-rational shapes.
    fn rational_terms(&self, k: u32, seed: u64, salt: u64) -> Option<Vec<(f64, f64, f64)>> {
        match *self {
            BumpShape::Rational { amplitude, power, decay } => Some(vec![(amplitude, power, decay)]),
            BumpShape::RandomRational { amplitude, terms } => {
                let mut rng = rand::rngs::StdRng::seed_from_u64(seed ^ salt);
                Some(
                    (0..terms)
                        .map(|i| {
                            let p = 2.0 + i as f64;
                            let c = amplitude * rng.gen_range(-1.0..=1.0);
                            (c, p, 0.5 * (p + k as f64) + 1.0)
                        })
                        .collect(),
                )
            }
            _ => None,
        }
    }

    /// Value and first two radial derivatives at `r`.
    fn jet(&self, k: u32, lambda0: f64, seed: u64, salt: u64, r: f64) -> [f64; 3] {
        if let Some(terms) = self.rational_terms(k, seed, salt) {
            let mut out = [0.0; 3];
            for (c, p, m) in terms {
                let j = rational_jet(p, m, lambda0 * r);
                out[0] += c * j[0];
                out[1] += c * lambda0 * j[1];
                out[2] += c * lambda0 * lambda0 * j[2];
            }
            return out;
        }
        match *self {
            BumpShape::Zero => [0.0; 3],
            BumpShape::Gaussian { amplitude: a } => {
                let e = (-r * r).exp();
                [a * r * e, a * (1.0 - 2.0 * r * r) * e, a * (4.0 * r.powi(3) - 6.0 * r) * e]
            }
            BumpShape::ProfileJ { amplitude: a } => {
                let j = j_jet(k, lambda0, r);
                [a * j[0], a * j[1], a * j[2]]
            }
            _ => unreachable!(),
        }
    }
}

/// `g(s) = s^p (1 + s^2)^-m` and its first two `s`-derivatives.
fn rational_jet(p: f64, m: f64, s: f64) -> [f64; 3] {
    if s <= 0.0 {
        return [0.0; 3];
    }
    let q = 1.0 + s * s;
    let g = s.powf(p) * q.powf(-m);
    // g'/g and its derivative
    let l = p / s - 2.0 * m * s / q;
    let dl = -p / (s * s) - 2.0 * m * (1.0 - s * s) / (q * q);
    [g, g * l, g * (l * l + dl)]
}

/// `J(lambda r)` with its first two `r`-derivatives.
fn j_jet(k: u32, lambda: f64, r: f64) -> [f64; 3] {
    if r <= 0.0 {
        return [0.0; 3];
    }
    let pt = profile_point(k, lambda * r);
    [pt.j, pt.r_dj / r, (pt.r_d_r_dj - pt.r_dj) / (r * r)]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialDataSpec {
    pub epsilon: f64,
    /// Smallness constant; must satisfy `c_small^2 >= epsilon`.
    pub c_small: f64,
    pub k: u32,
    pub u0: BumpShape,
    pub g0: BumpShape,
    #[serde(default)]
    pub seed: u64,
}

impl InitialDataSpec {
    /// Desk-scale defaults: `eps = 0.5`, `c_small^2 = eps`, amplitudes `1e-3`.
    pub fn default_for(k: u32) -> Self {
        let epsilon = 0.5;
        Self {
            epsilon,
            c_small: epsilon.sqrt(),
            k,
            u0: BumpShape::default_u0(k, 1e-3),
            g0: BumpShape::default_g0(k, 1e-3),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(SimError::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        // tolerate the rounding in c_small = sqrt(epsilon)
        if self.c_small * self.c_small < self.epsilon * (1.0 - 1e-12) {
            return Err(SimError::Config(format!(
                "c_small^2 = {} must be at least epsilon = {}",
                self.c_small * self.c_small,
                self.epsilon
            )));
        }
        if self.k < 4 {
            return Err(SimError::UnsupportedIndex {
                k: self.k,
                reason: "the focusing family needs k >= 4",
            });
        }
        self.u0.validate("u0")?;
        self.g0.validate("g0")
    }

    pub fn lambda0(&self) -> f64 {
        self.epsilon.powi(-4)
    }
}

const U0_SALT: u64 = 0x75_30;
const G0_SALT: u64 = 0x67_30;

/// Starting point of the modulation tracker.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulationSeed {
    pub lambda0: f64,
    pub lambda1: f64,
    /// `lambda_dot(0) = lambda_1 lambda_0`
    pub lambda_dot0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmallnessReport {
    pub functional: f64,
    /// `c_small^2 eps^2`
    pub bound: f64,
    pub within_bound: bool,
    /// Whether the derivatives were analytic (built-in shapes) or differenced.
    pub analytic: bool,
}

#[derive(Debug, Clone)]
pub struct InitialData {
    pub state: FieldState,
    pub seed: ModulationSeed,
    pub smallness: SmallnessReport,
    /// `<u_0, J(lambda_0 .)>` after projection.
    pub orthogonality: f64,
}

/// Removes the component of `f` along `dir` in `L^2(r dr)`.
pub fn project_out(f: &[f64], dir: &[f64], grid: &RadialGrid) -> Result<Vec<f64>> {
    let c = grid.inner(f, dir)? / grid.norm_sq(dir)?;
    Ok(f.iter().zip(dir).map(|(a, b)| a - c * b).collect())
}

pub fn check_resolution(grid: &RadialGrid, lambda: f64) -> Result<()> {
    let inside = grid.count_below(1.0 / lambda);
    if inside < MIN_CORE_NODES {
        return Err(SimError::Resolution(format!(
            "{inside} nodes inside r < 1/lambda = {:.3e}, need {MIN_CORE_NODES}",
            1.0 / lambda
        )));
    }
    Ok(())
}

pub fn build_initial(
    spec: &InitialDataSpec,
    consts: &ProfileConstants,
    grid: &RadialGrid,
) -> Result<InitialData> {
    spec.validate()?;
    if consts.k != spec.k {
        return Err(SimError::Config(format!(
            "profile constants are for k = {}, data for k = {}",
            consts.k, spec.k
        )));
    }
    let k = spec.k;
    let lambda0 = spec.lambda0();
    check_resolution(grid, lambda0)?;
    let n = grid.len();
    let p0 = ProfileParams::new(k, lambda0)?;

    let profile: Vec<f64> = grid.map(|r| profile_point(k, lambda0 * r).i);
    let j0: Vec<f64> = grid.map(|r| profile_point(k, lambda0 * r).j);
    let j_norm = grid.norm_sq(&j0)?;
    let eps = spec.epsilon;
    let lambda1 = consts.c0_const.powi(2) * eps.powi(5) / (PI * j_norm);

    // the outer node is pinned, so both u_0 and the projection direction vanish there
    let mut j_dir = j0.clone();
    j_dir[n - 1] = 0.0;
    let mut u_raw = grid.map(|r| spec.u0.jet(k, lambda0, spec.seed, U0_SALT, r)[0]);
    u_raw[n - 1] = 0.0;
    let u0 = project_out(&u_raw, &j_dir, grid)?;
    let orthogonality = grid.inner(&u0, &j0)?;

    let g0 = grid.map(|r| spec.g0.jet(k, lambda0, spec.seed, G0_SALT, r)[0]);
    let mut phi: Vec<f64> = profile.iter().zip(&u0).map(|(a, b)| a + b).collect();
    phi[n - 1] = profile[n - 1];
    let mut phi_t: Vec<f64> = j0.iter().zip(&g0).map(|(j, g)| lambda1 * j + g).collect();
    phi_t[n - 1] = 0.0;

    let state = FieldState::new(k, grid, phi, phi_t, vec![0.0; n])?;
    let smallness = analytic_smallness(spec, grid, &u_raw, &j_dir, p0)?;
    if !smallness.within_bound {
        log::warn!(
            "initial smallness functional {:.3e} exceeds c^2 eps^2 = {:.3e}",
            smallness.functional,
            smallness.bound
        );
    }
    Ok(InitialData {
        state,
        seed: ModulationSeed {
            lambda0,
            lambda1,
            lambda_dot0: lambda1 * lambda0,
        },
        smallness,
        orthogonality,
    })
}

/// Weighted integrand of the smallness functional at one node, from the jets
/// `[u, u', u'']` and `[g, g']`.
fn smallness_density(r: f64, u: [f64; 3], g: [f64; 2]) -> f64 {
    let r2 = r * r;
    let g_sq = g[0] * g[0];
    let i0 = (1.0 + r2) * (u[1] * u[1] + u[0] * u[0] / r2 + g_sq + g_sq / r2);
    let i1 = u[2] * u[2] + u[1] * u[1] / r2 + g[1] * g[1] + g_sq / r2;
    i0 + i1
}

fn analytic_smallness(
    spec: &InitialDataSpec,
    grid: &RadialGrid,
    u_raw: &[f64],
    j_dir: &[f64],
    p0: ProfileParams,
) -> Result<SmallnessReport> {
    let k = spec.k;
    let lambda0 = p0.lambda;
    let c = grid.inner(u_raw, j_dir)? / grid.norm_sq(j_dir)?;
    let n = grid.len();
    let density: Vec<f64> = grid
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            if i == n - 1 {
                return 0.0;
            }
            let ur = spec.u0.jet(k, lambda0, spec.seed, U0_SALT, r);
            let jj = j_jet(k, lambda0, r);
            let u = [ur[0] - c * jj[0], ur[1] - c * jj[1], ur[2] - c * jj[2]];
            let gj = spec.g0.jet(k, lambda0, spec.seed, G0_SALT, r);
            smallness_density(r, u, [gj[0], gj[1]])
        })
        .collect();
    Ok(finish_report(spec, grid.weighted_integral(&density, 0)?, true))
}

fn finish_report(spec: &InitialDataSpec, functional: f64, analytic: bool) -> SmallnessReport {
    let bound = (spec.c_small * spec.epsilon).powi(2);
    SmallnessReport {
        functional,
        bound,
        within_bound: functional <= bound,
        analytic,
    }
}

/// Smallness functional of arbitrary samples `u_0`, `g_0`, by differencing.
pub fn smallness_functional(u0: &[f64], g0: &[f64], grid: &RadialGrid) -> Result<f64> {
    let du = grid.derivative(u0, 0.0)?;
    let ddu = grid.second_derivative(u0, 0.0)?;
    let dg = grid.derivative(g0, 0.0)?;
    let density: Vec<f64> = (0..grid.len())
        .map(|i| {
            let r = grid.nodes()[i];
            smallness_density(r, [u0[i], du[i], ddu[i]], [g0[i], dg[i]])
        })
        .collect();
    grid.weighted_integral(&density, 0)
}

/// Smallness of a `t = 0` state: `u_0 = phi - I(lambda_0 r)`,
/// `g_0 = phi_t - lambda_1 J(lambda_0 r)`. Built-in shapes use their analytic
/// derivatives; other data falls back to differencing.
pub fn smallness_report(
    state: &FieldState,
    spec: &InitialDataSpec,
    consts: &ProfileConstants,
    grid: &RadialGrid,
) -> Result<SmallnessReport> {
    grid.check(&state.phi)?;
    let built = build_initial(spec, consts, grid)?;
    if built.state.phi == state.phi && built.state.phi_t == state.phi_t {
        return Ok(built.smallness);
    }
    let lambda0 = spec.lambda0();
    let lambda1 = built.seed.lambda1;
    let u0: Vec<f64> = grid
        .nodes()
        .iter()
        .zip(&state.phi)
        .map(|(&r, p)| p - profile_point(spec.k, lambda0 * r).i)
        .collect();
    let g0: Vec<f64> = grid
        .nodes()
        .iter()
        .zip(&state.phi_t)
        .map(|(&r, p)| p - lambda1 * profile_point(spec.k, lambda0 * r).j)
        .collect();
    Ok(finish_report(spec, smallness_functional(&u0, &g0, grid)?, false))
}
