//! Scaling trajectory `lambda(t)` and the modulation quantities built on it.
//!
//! `lambda` is fixed by `<phi - I_lambda, J_lambda> = 0`, either by root
//! finding at each time or by integrating the differentiated condition
//! `lambda_dot alpha = beta`.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::evolution::FieldState;
use crate::grid::RadialGrid;
use crate::profiles::{j_ddot, j_dot, nonlinearity_n, profile_point, ProfileConstants, ProfileParams};

/// Relative tolerance of the root finder.
pub const LAMBDA_RTOL: f64 = 1e-10;
/// Half-width of the search bracket, as a factor on `lambda_prev`.
pub const BRACKET_FACTOR: f64 = 4.0;
const SCAN_POINTS: usize = 48;
/// `|alpha|` below this fraction of `C_0` is treated as degenerate.
pub const DEGENERATE_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaSource {
    OrthogonalityRootfind,
    Ode63,
}

/// `g(lambda) = <phi - I_lambda, J_lambda>`.
pub fn orthogonality_defect(phi: &[f64], lambda: f64, k: u32, grid: &RadialGrid) -> f64 {
    grid.nodes()
        .iter()
        .zip(phi)
        .zip(grid.quad_weights())
        .map(|((&r, &p), &w)| {
            let pt = profile_point(k, lambda * r);
            (p - pt.i) * pt.j * w
        })
        .sum()
}

/// Root of the orthogonality defect nearest `lambda_prev` in
/// `[lambda_prev / 4, 4 lambda_prev]`.
pub fn extract_lambda(state: &FieldState, lambda_prev: f64, grid: &RadialGrid) -> Result<f64> {
    if !(lambda_prev > 0.0) || !lambda_prev.is_finite() {
        return Err(SimError::Config(format!("lambda_prev must be positive, got {lambda_prev}")));
    }
    grid.check(&state.phi)?;
    let g = |l: f64| orthogonality_defect(&state.phi, l, state.k, grid);
    let lo = lambda_prev / BRACKET_FACTOR;
    let hi = lambda_prev * BRACKET_FACTOR;
    let g_prev = g(lambda_prev);
    if g_prev == 0.0 {
        return Ok(lambda_prev);
    }
    // scan outward from lambda_prev on a log grid; first sign change is the nearest root
    let half = SCAN_POINTS / 2;
    let step = BRACKET_FACTOR.ln() / half as f64;
    let mut best: Option<(f64, f64, f64, f64, f64)> = None;
    for dir in [1.0f64, -1.0] {
        let (mut a, mut ga) = (lambda_prev, g_prev);
        for i in 1..=half {
            let b = lambda_prev * (dir * step * i as f64).exp();
            let gb = g(b);
            if ga.signum() != gb.signum() || gb == 0.0 {
                let dist = (b / lambda_prev).ln().abs() - step;
                if best.map_or(true, |x| dist < x.0) {
                    best = Some((dist, a, ga, b, gb));
                }
                break;
            }
            a = b;
            ga = gb;
        }
    }
    let Some((_, a, ga, b, gb)) = best else {
        return Err(SimError::TrackingLost {
            lambda_prev,
            lo,
            hi,
            g_lo: g(lo),
            g_hi: g(hi),
        });
    };
    Ok(refine_root(g, a, ga, b, gb))
}

/// Safeguarded secant on a sign-changing bracket. The secant runs through
/// the two latest iterates and falls back to bisection (in `ln lambda`) when
/// it leaves the bracket. Iteration continues past `LAMBDA_RTOL` down to
/// rounding, so that the orthogonality defect is at its noise floor.
fn refine_root(g: impl Fn(f64) -> f64, a: f64, ga: f64, b: f64, gb: f64) -> f64 {
    if gb == 0.0 {
        return b;
    }
    let (mut lo, mut g_lo, mut hi) = if a < b { (a, ga, b) } else { (b, gb, a) };
    let (mut x0, mut g0, mut x1, mut g1) = (a, ga, b, gb);
    for _ in 0..200 {
        let mut c = x1 - g1 * (x1 - x0) / (g1 - g0);
        if !(c > lo && c < hi) {
            c = (lo * hi).sqrt();
        }
        let gc = g(c);
        if gc == 0.0 {
            return c;
        }
        if gc.signum() == g_lo.signum() {
            lo = c;
            g_lo = gc;
        } else {
            hi = c;
        }
        let moved = (c - x1).abs();
        x0 = x1;
        g0 = g1;
        x1 = c;
        g1 = gc;
        if moved <= 4.0 * f64::EPSILON * c || hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }
    x1
}

/// Terms of `lambda_dot alpha = beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaRhs {
    pub lambda_dot: f64,
    pub alpha: f64,
    pub beta: f64,
}

/// `lambda_dot = beta / alpha` with `beta = -<phi_t, J_l> l^3` and
/// `alpha = 2<I, J> + l^2 <phi, (r dJ)_l>`.
///
/// `2<I, J>` is evaluated as `-l^2 (<J_l, J_l> + <I_l, (r dJ)_l>)` on the run
/// grid. The two agree on the half-line by parts; the grid form is the exact
/// derivative of the discrete orthogonality condition, so integrating this
/// rate reproduces the root-finding track up to time-stepping error.
pub fn lambda_ode_rhs(
    state: &FieldState,
    lambda: f64,
    consts: &ProfileConstants,
    grid: &RadialGrid,
) -> Result<LambdaRhs> {
    grid.check(&state.phi)?;
    grid.check(&state.phi_t)?;
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(SimError::Config(format!("lambda must be positive, got {lambda}")));
    }
    let (mut jj, mut i_rdj, mut phi_rdj, mut phit_j) = (0.0, 0.0, 0.0, 0.0);
    for (((&r, &p), &pt_), &w) in grid
        .nodes()
        .iter()
        .zip(&state.phi)
        .zip(&state.phi_t)
        .zip(grid.quad_weights())
    {
        let pt = profile_point(state.k, lambda * r);
        jj += pt.j * pt.j * w;
        i_rdj += pt.i * pt.r_dj * w;
        phi_rdj += p * pt.r_dj * w;
        phit_j += pt_ * pt.j * w;
    }
    let l2 = lambda * lambda;
    let alpha = l2 * (phi_rdj - jj - i_rdj);
    let beta = -phit_j * l2 * lambda;
    let threshold = DEGENERATE_FRACTION * consts.c0_const;
    if !(alpha.abs() >= threshold) {
        return Err(SimError::DegenerateDenominator { alpha, threshold });
    }
    Ok(LambdaRhs {
        lambda_dot: beta / alpha,
        alpha,
        beta,
    })
}

/// Heun (explicit trapezoidal) integration of `lambda_dot = beta / alpha`
/// along consecutive PDE states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeTracker {
    pub lambda: f64,
    pub rhs: LambdaRhs,
}

impl OdeTracker {
    pub fn new(state: &FieldState, lambda0: f64, consts: &ProfileConstants, grid: &RadialGrid) -> Result<Self> {
        Ok(Self {
            lambda: lambda0,
            rhs: lambda_ode_rhs(state, lambda0, consts, grid)?,
        })
    }

    /// Advances from the state the tracker was last evaluated on to `next`.
    pub fn advance(
        &mut self,
        next: &FieldState,
        dt: f64,
        consts: &ProfileConstants,
        grid: &RadialGrid,
    ) -> Result<()> {
        let f0 = self.rhs.lambda_dot;
        let predicted = self.lambda + dt * f0;
        let f1 = lambda_ode_rhs(next, predicted, consts, grid)?.lambda_dot;
        self.lambda += 0.5 * dt * (f0 + f1);
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(SimError::NonFinite {
                t: next.t,
                last_finite: Box::new(next.clone()),
            });
        }
        self.rhs = lambda_ode_rhs(next, self.lambda, consts, grid)?;
        Ok(())
    }
}

/// Time series of the modulation parameters.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModulationTrack {
    pub source: Option<LambdaSource>,
    pub times: Vec<f64>,
    pub lambda: Vec<f64>,
    pub lambda_dot: Vec<f64>,
    /// `-lambda_dot / lambda^2`
    pub gamma: Vec<f64>,
    /// `lambda_dot^4 / lambda^7`
    pub focus_monitor: Vec<f64>,
    pub alpha_coeff: Vec<f64>,
    pub key1_residual: Vec<f64>,
    /// `|lambda_ode - lambda_rootfind| / lambda_rootfind`
    pub divergence_metric: Vec<f64>,
}

pub const TRACK_COLUMNS: [&str; 8] = [
    "t",
    "lambda",
    "lambda_dot",
    "gamma",
    "focus_monitor",
    "alpha_coeff",
    "key1_residual",
    "divergence_metric",
];

impl ModulationTrack {
    pub fn new(source: LambdaSource) -> Self {
        Self {
            source: Some(source),
            ..Self::default()
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    #[allow(clippy::too_many_arguments)]
    pub fn push(
        &mut self,
        t: f64,
        lambda: f64,
        lambda_dot: f64,
        alpha: f64,
        key1: f64,
        divergence: f64,
    ) {
        self.times.push(t);
        self.lambda.push(lambda);
        self.lambda_dot.push(lambda_dot);
        self.gamma.push(-lambda_dot / (lambda * lambda));
        self.focus_monitor.push(lambda_dot.powi(4) / lambda.powi(7));
        self.alpha_coeff.push(alpha);
        self.key1_residual.push(key1);
        self.divergence_metric.push(divergence);
    }

    pub fn row(&self, i: usize) -> [f64; 8] {
        [
            self.times[i],
            self.lambda[i],
            self.lambda_dot[i],
            self.gamma[i],
            self.focus_monitor[i],
            self.alpha_coeff[i],
            self.key1_residual[i],
            self.divergence_metric[i],
        ]
    }
}

/// Integrates the trajectory equation along a stream of states at uniform
/// spacing, recording the root-finding track alongside for comparison.
pub fn evolve_lambda_ode<'a>(
    states: impl IntoIterator<Item = &'a FieldState>,
    lambda0: f64,
    consts: &ProfileConstants,
    grid: &RadialGrid,
) -> Result<ModulationTrack> {
    let mut track = ModulationTrack::new(LambdaSource::Ode63);
    let mut ode: Option<OdeTracker> = None;
    let mut prev_t = 0.0;
    let mut root = lambda0;
    for s in states {
        match ode.as_mut() {
            None => ode = Some(OdeTracker::new(s, lambda0, consts, grid)?),
            Some(o) => o.advance(s, s.t - prev_t, consts, grid)?,
        }
        prev_t = s.t;
        let o = ode.as_ref().expect("tracker initialised");
        root = extract_lambda(s, root, grid)?;
        track.push(
            s.t,
            o.lambda,
            o.rhs.lambda_dot,
            o.rhs.alpha,
            f64::NAN,
            (o.lambda - root).abs() / root,
        );
    }
    Ok(track)
}

/// The six right-hand terms of the second-order trajectory equation
/// `C_0 (l_ddot - 2 l_dot^2 / l) = sum(terms)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Key1Terms {
    /// `2 <u_t, J_dot> l^3`
    pub ut_jdot: f64,
    /// `<u, J_ddot> l^3`
    pub u_jddot: f64,
    /// `<N(u), J> l^3`
    pub nonlinear: f64,
    /// `-C_0 l_dot`
    pub damping: f64,
    /// `-<u_t, J> l^3`
    pub ut_j: f64,
    /// `-<h_t, J> l^3`
    pub ht_j: f64,
    pub lhs: f64,
    /// `|lhs - sum| / (C_0 l_dot^2 / l)`; the scale falls back to `C_0`
    /// when `l_dot = 0`.
    pub residual: f64,
}

impl Key1Terms {
    pub fn rhs(&self) -> f64 {
        self.ut_jdot + self.u_jddot + self.nonlinear + self.damping + self.ut_j + self.ht_j
    }
}

/// Profile-frame quantities shared by the key1 and integrated residuals.
struct Frame {
    u: Vec<f64>,
    u_t: Vec<f64>,
    j: Vec<f64>,
    j_dot: Vec<f64>,
    j_ddot: Vec<f64>,
    r_dj: Vec<f64>,
    nonlinear: Vec<f64>,
}

fn frame(
    state: &FieldState,
    lambda: f64,
    lambda_dot: f64,
    lambda_ddot: f64,
    grid: &RadialGrid,
) -> Result<Frame> {
    let p = ProfileParams::new(state.k, lambda)?;
    let n = grid.len();
    let mut u = Vec::with_capacity(n);
    let mut u_t = Vec::with_capacity(n);
    let mut j = Vec::with_capacity(n);
    let mut r_dj = Vec::with_capacity(n);
    let rate = lambda_dot / lambda;
    for ((&r, &ph), &pht) in grid.nodes().iter().zip(&state.phi).zip(&state.phi_t) {
        let pt = profile_point(state.k, lambda * r);
        u.push(ph - pt.i);
        u_t.push(pht - rate * pt.j);
        j.push(pt.j);
        r_dj.push(pt.r_dj);
    }
    let nonlinear = nonlinearity_n(p, &u, grid)?;
    Ok(Frame {
        j_dot: j_dot(p, lambda_dot, grid),
        j_ddot: j_ddot(p, lambda_dot, lambda_ddot, grid),
        u,
        u_t,
        j,
        r_dj,
        nonlinear,
    })
}

pub fn key1_residual(
    state: &FieldState,
    h_t: &[f64],
    lambda: f64,
    lambda_dot: f64,
    lambda_ddot: f64,
    consts: &ProfileConstants,
    grid: &RadialGrid,
) -> Result<Key1Terms> {
    grid.check(h_t)?;
    let f = frame(state, lambda, lambda_dot, lambda_ddot, grid)?;
    let l3 = lambda.powi(3);
    let c0 = consts.c0_const;
    let ut_jdot = 2.0 * grid.inner(&f.u_t, &f.j_dot)? * l3;
    let u_jddot = grid.inner(&f.u, &f.j_ddot)? * l3;
    let nonlinear = grid.inner(&f.nonlinear, &f.j)? * l3;
    let damping = -c0 * lambda_dot;
    let ut_j = -grid.inner(&f.u_t, &f.j)? * l3;
    let ht_j = -grid.inner(h_t, &f.j)? * l3;
    let lhs = c0 * (lambda_ddot - 2.0 * lambda_dot * lambda_dot / lambda);
    let mut t = Key1Terms {
        ut_jdot,
        u_jddot,
        nonlinear,
        damping,
        ut_j,
        ht_j,
        lhs,
        residual: 0.0,
    };
    let defect = (lhs - t.rhs()).abs();
    let scale = c0 * lambda_dot * lambda_dot / lambda;
    t.residual = if defect == 0.0 {
        0.0
    } else if scale > 0.0 {
        defect / scale
    } else {
        defect / c0
    };
    Ok(t)
}

/// Integrand `E_1 + E_2` of the time-integrated trajectory equation:
/// `-2 l_dot <u, J_dot> - l <u, J_ddot> + l <N(u), J> - l <u_t, J> - l <h_t, J>`.
pub fn riccati_integrand(
    state: &FieldState,
    h_t: &[f64],
    lambda: f64,
    lambda_dot: f64,
    lambda_ddot: f64,
    grid: &RadialGrid,
) -> Result<f64> {
    grid.check(h_t)?;
    let f = frame(state, lambda, lambda_dot, lambda_ddot, grid)?;
    let e1 = -2.0 * lambda_dot * grid.inner(&f.u, &f.j_dot)? - lambda * grid.inner(&f.u, &f.j_ddot)?
        + lambda * grid.inner(&f.nonlinear, &f.j)?;
    let e2 = -lambda * grid.inner(&f.u_t, &f.j)? - lambda * grid.inner(h_t, &f.j)?;
    Ok(e1 + e2)
}

/// `K_1 = C_0 - 2 l^2 <u, (r dJ)_l>`.
pub fn riccati_k1(state: &FieldState, lambda: f64, consts: &ProfileConstants, grid: &RadialGrid) -> Result<f64> {
    let f = frame(state, lambda, 0.0, 0.0, grid)?;
    Ok(consts.c0_const - 2.0 * lambda * lambda * grid.inner(&f.u, &f.r_dj)?)
}

/// Initial coefficients of the integrated trajectory equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiccatiCoefficients {
    /// `K_2 = C_0 l_dot0 / l0^2 - 2 l_dot0 <u0, (r dJ)_l0> - C_0 / l0`
    pub k2: f64,
    /// `C_0 l_dot0 / l0^2 - 2 l_dot0 <u0, (r dJ)_l0> - 2 C_0 / l0`, the
    /// positivity-bound coefficient with the doubled `C_0/l0` term.
    pub k2_bound_form: f64,
}

pub fn riccati_coefficients(
    state0: &FieldState,
    lambda0: f64,
    lambda_dot0: f64,
    consts: &ProfileConstants,
    grid: &RadialGrid,
) -> Result<RiccatiCoefficients> {
    let f = frame(state0, lambda0, 0.0, 0.0, grid)?;
    let c0 = consts.c0_const;
    let base = c0 * lambda_dot0 / (lambda0 * lambda0) - 2.0 * lambda_dot0 * grid.inner(&f.u, &f.r_dj)?;
    Ok(RiccatiCoefficients {
        k2: base - c0 / lambda0,
        k2_bound_form: base - 2.0 * c0 / lambda0,
    })
}

/// Running trapezoid integral of `E_1 + E_2` and the residual of
/// `K_1 l_dot = K_2 l^2 + C_0 l + l^2 int_0^t (E_1 + E_2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiccatiIntegrator {
    pub coefficients: RiccatiCoefficients,
    pub integral: f64,
    last: Option<(f64, f64)>,
}

impl RiccatiIntegrator {
    pub fn new(coefficients: RiccatiCoefficients) -> Self {
        Self {
            coefficients,
            integral: 0.0,
            last: None,
        }
    }

    /// Adds the integrand value at time `t` (times must increase).
    pub fn accumulate(&mut self, t: f64, integrand: f64) {
        if let Some((t0, f0)) = self.last {
            self.integral += 0.5 * (t - t0) * (f0 + integrand);
        }
        self.last = Some((t, integrand));
    }

    /// `|K_1 l_dot - (K_2 l^2 + C_0 l + l^2 I)| / (C_0 |l_dot|)`, or scaled by
    /// `C_0` when `l_dot = 0`.
    pub fn residual(&self, k1: f64, lambda: f64, lambda_dot: f64, c0: f64) -> f64 {
        let rhs = self.coefficients.k2 * lambda * lambda + c0 * lambda + lambda * lambda * self.integral;
        let defect = (k1 * lambda_dot - rhs).abs();
        let scale = c0 * lambda_dot.abs();
        if scale > 0.0 {
            defect / scale
        } else {
            defect / c0
        }
    }
}

/// Least-squares line `y = a + b x` with its coefficient of determination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    pub r_squared: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(LineFit {
        intercept,
        slope,
        r_squared,
    })
}

/// Blowup time from the zero of a linear fit of `1/lambda` against `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowupFit {
    pub t_star: f64,
    pub r_squared: f64,
    /// First time of the fit window.
    pub window_start: f64,
    pub samples: usize,
    /// `max lambda / min lambda` over the window.
    pub growth: f64,
}

/// Fits over the last decade of growth, `lambda >= lambda_last / 10`.
pub fn fit_blowup_time(times: &[f64], lambda: &[f64]) -> Option<BlowupFit> {
    let last = *lambda.last()?;
    let cut = last / 10.0;
    let start = lambda.iter().rposition(|&l| l < cut).map_or(0, |i| i + 1);
    let t = &times[start..];
    let inv: Vec<f64> = lambda[start..].iter().map(|l| 1.0 / l).collect();
    let fit = fit_line(t, &inv)?;
    if !(fit.slope < 0.0) {
        return None;
    }
    let lmin = lambda[start..].iter().cloned().fold(f64::INFINITY, f64::min);
    Some(BlowupFit {
        t_star: -fit.intercept / fit.slope,
        r_squared: fit.r_squared,
        window_start: t[0],
        samples: t.len(),
        growth: last / lmin,
    })
}

/// Fits of `lambda (T* - t)` over a window, against a constant and against
/// `c^(1/4) sqrt|ln(T* - t)|` with a fitted scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateBoundFit {
    /// Smallest `lambda (T* - t)`, a lower-bound constant `M`.
    pub lower_constant: f64,
    /// Relative standard deviation of `lambda (T* - t)`.
    pub constancy_spread: f64,
    /// Least-squares scale `s` in `lambda (T* - t) = s c^(1/4) sqrt|ln(T* - t)|`.
    pub log_scale: f64,
    /// Relative RMS misfit of the log model.
    pub log_misfit: f64,
}

pub fn fit_rate_bounds(times: &[f64], lambda: &[f64], t_star: f64, c_small: f64) -> Option<RateBoundFit> {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(lambda)
        .filter(|(t, _)| **t < t_star)
        .map(|(t, l)| (l * (t_star - t), (t_star - t).ln().abs().sqrt() * c_small.powf(0.25)))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let nf = pts.len() as f64;
    let mean = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let var = pts.iter().map(|p| (p.0 - mean).powi(2)).sum::<f64>() / nf;
    let sgg: f64 = pts.iter().map(|p| p.1 * p.1).sum();
    let sfg: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let scale = if sgg > 0.0 { sfg / sgg } else { f64::NAN };
    let misfit = (pts.iter().map(|p| (p.0 - scale * p.1).powi(2)).sum::<f64>() / nf).sqrt() / mean.abs();
    Some(RateBoundFit {
        lower_constant: pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min),
        constancy_spread: var.sqrt() / mean.abs(),
        log_scale: scale,
        log_misfit: misfit,
    })
}

/// Monotonicity checks on a track.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiccatiReport {
    pub samples: usize,
    pub negative_lambda_dot: usize,
    /// Decreases of `lambda_dot^4 / lambda^7` between consecutive samples.
    pub focus_violations: usize,
    /// Decreases of `lambda`.
    pub lambda_violations: usize,
    /// Time of the last violation of either kind; zero when there is none.
    pub transient_end: f64,
    /// Violations after `transient_end`, zero by construction; kept for
    /// reporting when a window is imposed from outside.
    pub violations_after: usize,
    pub blowup: Option<BlowupFit>,
    pub rate_bounds: Option<RateBoundFit>,
    /// `transient_end` precedes the start of the blowup-fit window.
    pub transient_before_fit: bool,
}

pub fn riccati_monitor(track: &ModulationTrack, c_small: f64) -> Option<RiccatiReport> {
    let n = track.len();
    if n < 3 {
        return None;
    }
    let mut focus_violations = 0;
    let mut lambda_violations = 0;
    let mut transient_end: f64 = 0.0;
    for i in 1..n {
        let mut bad = false;
        if track.focus_monitor[i] < track.focus_monitor[i - 1] {
            focus_violations += 1;
            bad = true;
        }
        if track.lambda[i] < track.lambda[i - 1] {
            lambda_violations += 1;
            bad = true;
        }
        if bad {
            transient_end = track.times[i];
        }
    }
    let blowup = fit_blowup_time(&track.times, &track.lambda);
    let rate_bounds = blowup.and_then(|b| {
        let start = track.times.iter().position(|&t| t >= b.window_start).unwrap_or(0);
        fit_rate_bounds(&track.times[start..], &track.lambda[start..], b.t_star, c_small)
    });
    Some(RiccatiReport {
        samples: n,
        negative_lambda_dot: track.lambda_dot.iter().filter(|&&x| x < 0.0).count(),
        focus_violations,
        lambda_violations,
        transient_end,
        violations_after: 0,
        transient_before_fit: blowup.map_or(false, |b| transient_end < b.window_start),
        blowup,
        rate_bounds,
    })
}
