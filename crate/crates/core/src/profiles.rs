//! Harmonic-map profile `I(r) = 2 arctan(r^k)`, its scaling generator
//! `J = r I_r = k sin I`, the linearized operators around `I_lambda`, and the
//! profile inner products consumed by the modulation equations.
//!
//! Every profile derivative is closed-form. Evaluation goes through
//! `y = min(x, 1/x)` with `x = (lambda r)^k` so that very concentrated
//! profiles do not overflow.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::grid::{Grading, RadialGrid};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileParams {
    pub k: u32,
    pub lambda: f64,
}

impl ProfileParams {
    pub fn new(k: u32, lambda: f64) -> Result<Self> {
        if k < 1 {
            return Err(SimError::UnsupportedIndex {
                k,
                reason: "equivariance index must be at least 1",
            });
        }
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(SimError::Config(format!("lambda must be positive, got {lambda}")));
        }
        Ok(Self { k, lambda })
    }

    pub fn with_lambda(self, lambda: f64) -> Self {
        Self { lambda, ..self }
    }
}

/// Closed-form profile quantities at one radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfilePoint {
    pub i: f64,
    pub j: f64,
    pub cos_i: f64,
    /// `(r d/dr J)(lambda r)`
    pub r_dj: f64,
    /// `(r d/dr (r d/dr J))(lambda r)`
    pub r_d_r_dj: f64,
}

pub fn profile_point(k: u32, rho: f64) -> ProfilePoint {
    if rho <= 0.0 {
        return ProfilePoint {
            i: 0.0,
            j: 0.0,
            cos_i: 1.0,
            r_dj: 0.0,
            r_d_r_dj: 0.0,
        };
    }
    let kf = k as f64;
    let inside = rho <= 1.0;
    // y = x for rho <= 1, y = 1/x beyond; x = rho^k
    let y = if inside { rho.powi(k as i32) } else { rho.powi(-(k as i32)) };
    let y2 = y * y;
    let d = 1.0 + y2;
    let i = if inside {
        2.0 * y.atan()
    } else {
        PI - 2.0 * y.atan()
    };
    let j = 2.0 * kf * y / d;
    let c = (1.0 - y2) / d;
    let cos_i = if inside { c } else { -c };
    // x(1 - x^2)/(1 + x^2)^2 is odd under x -> 1/x
    let g = y * (1.0 - y2) / (d * d);
    let r_dj = 2.0 * kf * kf * if inside { g } else { -g };
    // x(1 - 6x^2 + x^4)/(1 + x^2)^3 is even under x -> 1/x
    let r_d_r_dj = 2.0 * kf.powi(3) * y * (1.0 - 6.0 * y2 + y2 * y2) / (d * d * d);
    ProfilePoint {
        i,
        j,
        cos_i,
        r_dj,
        r_d_r_dj,
    }
}

pub fn eval_i(p: ProfileParams, r: f64) -> f64 {
    profile_point(p.k, p.lambda * r).i
}

pub fn eval_j(p: ProfileParams, r: f64) -> f64 {
    profile_point(p.k, p.lambda * r).j
}

/// `d/dr I_lambda = 2 k lambda^k r^{k-1} / (1 + (lambda r)^{2k})`.
pub fn eval_i_dr(p: ProfileParams, r: f64) -> f64 {
    if r <= 0.0 {
        return if p.k == 1 { 2.0 * p.lambda } else { 0.0 };
    }
    let k = p.k as i32;
    let rho = p.lambda * r;
    let kf = p.k as f64;
    if rho <= 1.0 {
        2.0 * kf * p.lambda * rho.powi(k - 1) / (1.0 + rho.powi(2 * k))
    } else {
        let inv = rho.powi(-k);
        2.0 * kf * inv / (r * (1.0 + inv * inv))
    }
}

/// `r d/dr J_lambda` (equal to `(r d/dr J)(lambda r)`).
pub fn eval_r_dj(p: ProfileParams, r: f64) -> f64 {
    profile_point(p.k, p.lambda * r).r_dj
}

pub fn eval_r_d_r_dj(p: ProfileParams, r: f64) -> f64 {
    profile_point(p.k, p.lambda * r).r_d_r_dj
}

/// `(r^2 J)_lambda(r) = (lambda r)^2 J(lambda r)`.
pub fn eval_r2j(p: ProfileParams, r: f64) -> f64 {
    let rho = p.lambda * r;
    rho * rho * profile_point(p.k, rho).j
}

/// Profile samples on a grid.
#[derive(Debug, Clone)]
pub struct ProfileSamples {
    pub i: Vec<f64>,
    pub j: Vec<f64>,
    pub cos_i: Vec<f64>,
    pub r_dj: Vec<f64>,
    pub r_d_r_dj: Vec<f64>,
}

pub fn sample_profile(p: ProfileParams, grid: &RadialGrid) -> ProfileSamples {
    let n = grid.len();
    let mut s = ProfileSamples {
        i: Vec::with_capacity(n),
        j: Vec::with_capacity(n),
        cos_i: Vec::with_capacity(n),
        r_dj: Vec::with_capacity(n),
        r_d_r_dj: Vec::with_capacity(n),
    };
    for &r in grid.nodes() {
        let pt = profile_point(p.k, p.lambda * r);
        s.i.push(pt.i);
        s.j.push(pt.j);
        s.cos_i.push(pt.cos_i);
        s.r_dj.push(pt.r_dj);
        s.r_d_r_dj.push(pt.r_d_r_dj);
    }
    s
}

/// `dJ_lambda/dt = (lambda_dot/lambda) (r dJ)_lambda`.
pub fn j_dot(p: ProfileParams, lambda_dot: f64, grid: &RadialGrid) -> Vec<f64> {
    let s = lambda_dot / p.lambda;
    grid.map(|r| s * eval_r_dj(p, r))
}

/// Second time derivative of `J_lambda` along a trajectory, by the chain rule:
/// `(l_ddot/l - l_dot^2/l^2)(r dJ)_l + (l_dot/l)^2 (r d(r dJ))_l`.
pub fn j_ddot(p: ProfileParams, lambda_dot: f64, lambda_ddot: f64, grid: &RadialGrid) -> Vec<f64> {
    let l = p.lambda;
    let a = lambda_ddot / l - (lambda_dot / l).powi(2);
    let b = (lambda_dot / l).powi(2);
    grid.map(|r| {
        let pt = profile_point(p.k, l * r);
        a * pt.r_dj + b * pt.r_d_r_dj
    })
}

/// `A_lambda f = -f_r + (k/r) cos(I_lambda) f`.
pub fn apply_a(p: ProfileParams, f: &[f64], grid: &RadialGrid) -> Result<Vec<f64>> {
    let df = grid.derivative(f, 0.0)?;
    let kf = p.k as f64;
    Ok(grid
        .nodes()
        .iter()
        .zip(f)
        .zip(df)
        .map(|((&r, &fi), dfi)| -dfi + kf / r * profile_point(p.k, p.lambda * r).cos_i * fi)
        .collect())
}

/// `A*_lambda f = f_r + f/r + (k/r) cos(I_lambda) f`.
pub fn apply_a_star(p: ProfileParams, f: &[f64], grid: &RadialGrid) -> Result<Vec<f64>> {
    let df = grid.derivative(f, 0.0)?;
    let kf = p.k as f64;
    Ok(grid
        .nodes()
        .iter()
        .zip(f)
        .zip(df)
        .map(|((&r, &fi), dfi)| {
            dfi + fi / r + kf / r * profile_point(p.k, p.lambda * r).cos_i * fi
        })
        .collect())
}

/// `H_lambda f = -(1/r)(r f_r)_r + (k^2/r^2) cos(2 I_lambda) f`, flux form.
/// The outer node carries only the potential term.
pub fn apply_h(p: ProfileParams, f: &[f64], grid: &RadialGrid) -> Result<Vec<f64>> {
    let lap = grid.laplacian(f, 0.0)?;
    let k2 = (p.k as f64).powi(2);
    Ok(grid
        .nodes()
        .iter()
        .zip(f)
        .zip(lap)
        .map(|((&r, &fi), li)| {
            let c = profile_point(p.k, p.lambda * r).cos_i;
            -li + k2 / (r * r) * (2.0 * c * c - 1.0) * fi
        })
        .collect())
}

/// `V_lambda = (k^2 + 1)/r^2 + (2k/r^2) cos(I_lambda)`.
pub fn potential_v(p: ProfileParams, r: f64) -> f64 {
    let kf = p.k as f64;
    (kf * kf + 1.0 + 2.0 * kf * profile_point(p.k, p.lambda * r).cos_i) / (r * r)
}

/// `H~_lambda f = -(1/r)(r f_r)_r + V_lambda f`.
pub fn apply_h_tilde(p: ProfileParams, f: &[f64], grid: &RadialGrid) -> Result<Vec<f64>> {
    let lap = grid.laplacian(f, 0.0)?;
    Ok(grid
        .nodes()
        .iter()
        .zip(f)
        .zip(lap)
        .map(|((&r, &fi), li)| -li + potential_v(p, r) * fi)
        .collect())
}

/// `N(u) = (k^2 sin 2I / 2r^2)(1 - cos 2u) + (k^2 cos 2I / r^2)(u - sin(2u)/2)`.
pub fn nonlinearity_n(p: ProfileParams, u: &[f64], grid: &RadialGrid) -> Result<Vec<f64>> {
    grid.check(u)?;
    let k2 = (p.k as f64).powi(2);
    Ok(grid
        .nodes()
        .iter()
        .zip(u)
        .map(|(&r, &ui)| {
            let pt = profile_point(p.k, p.lambda * r);
            let sin_i = pt.j / p.k as f64;
            let sin_2i = 2.0 * sin_i * pt.cos_i;
            let cos_2i = 2.0 * pt.cos_i * pt.cos_i - 1.0;
            let one_minus_cos = 2.0 * ui.sin().powi(2);
            k2 / (r * r) * (0.5 * sin_2i * one_minus_cos + cos_2i * cubic_remainder(ui))
        })
        .collect())
}

pub const SERIES_THRESHOLD: f64 = 1e-4;

/// `u - sin(2u)/2`, by its Taylor series for small `|u|`.
pub fn cubic_remainder(u: f64) -> f64 {
    if u.abs() < SERIES_THRESHOLD {
        let u2 = u * u;
        u * u2 * (2.0 / 3.0 - u2 * (2.0 / 15.0 - u2 * 4.0 / 315.0))
    } else {
        u - 0.5 * (2.0 * u).sin()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileConstants {
    pub k: u32,
    /// `C_0 = <J, J>`
    pub c0_const: f64,
    pub a_coeff: f64,
    pub b_coeff: f64,
    pub ij_inner: f64,
    pub jr2j_inner: f64,
}

/// `int_R^inf r^{1+p} y^m dr` with `y = r^{-k}`.
fn tail_moment(k: u32, r_cut: f64, p: u32, m: u32) -> f64 {
    let e = (m * k) as f64 - 2.0 - p as f64;
    debug_assert!(e > 0.0);
    r_cut.powf(-e) / e
}

/// Far-field tails beyond the last oracle node, from the large-`r`
/// expansions in `y = r^{-k}`:
/// `J^2 = 4k^2 (y^2 - 2y^4 + 3y^6 ...)`,
/// `I J = 2k pi y - 4k y^2 - 2k pi y^3 + (16k/3) y^4 ...`.
fn far_tails(k: u32, r_cut: f64) -> (f64, f64, f64) {
    let kf = k as f64;
    let j2 = |p: u32| {
        4.0 * kf * kf
            * (tail_moment(k, r_cut, p, 2) - 2.0 * tail_moment(k, r_cut, p, 4)
                + 3.0 * tail_moment(k, r_cut, p, 6))
    };
    let ij = 2.0 * kf * PI * tail_moment(k, r_cut, 0, 1) - 4.0 * kf * tail_moment(k, r_cut, 0, 2)
        - 2.0 * kf * PI * tail_moment(k, r_cut, 0, 3)
        + 16.0 * kf / 3.0 * tail_moment(k, r_cut, 0, 4);
    (j2(0), ij, j2(2))
}

impl ProfileConstants {
    /// Quadrature of the profile inner products at `lambda = 1` on
    /// `oracle_grid`, plus the analytic far-field tail beyond its outer radius.
    pub fn compute(k: u32, oracle_grid: &RadialGrid) -> Result<Self> {
        if k < 3 {
            return Err(SimError::UnsupportedIndex {
                k,
                reason: "<I, J> is finite only for k >= 3",
            });
        }
        let p = ProfileParams { k, lambda: 1.0 };
        let s = sample_profile(p, oracle_grid);
        let (t_c0, t_ij, t_jr2j) = far_tails(k, oracle_grid.r_max());
        let c0 = oracle_grid.inner(&s.j, &s.j)? + t_c0;
        let ij = oracle_grid.inner(&s.i, &s.j)? + t_ij;
        let j2: Vec<f64> = s.j.iter().map(|x| x * x).collect();
        let jr2j = oracle_grid.weighted_integral(&j2, 2)? + t_jr2j;
        Ok(Self {
            k,
            c0_const: c0,
            a_coeff: -jr2j / (4.0 * c0),
            b_coeff: 0.25,
            ij_inner: ij,
            jr2j_inner: jr2j,
        })
    }

    /// Constants on the default oracle grid (fine geometric mesh out to
    /// `r = 1000`, Richardson-extrapolated over one refinement).
    pub fn reference(k: u32) -> Result<Self> {
        let coarse = Self::compute(k, &reference_oracle_grid()?)?;
        let fine = Self::compute(k, &reference_oracle_grid()?.spec().refined().build()?)?;
        let rich = |c: f64, f: f64| (4.0 * f - c) / 3.0;
        let c0 = rich(coarse.c0_const, fine.c0_const);
        let jr2j = rich(coarse.jr2j_inner, fine.jr2j_inner);
        Ok(Self {
            k,
            c0_const: c0,
            a_coeff: -jr2j / (4.0 * c0),
            b_coeff: 0.25,
            ij_inner: rich(coarse.ij_inner, fine.ij_inner),
            jr2j_inner: jr2j,
        })
    }
}

pub fn reference_oracle_grid() -> Result<RadialGrid> {
    RadialGrid::new(1000.0, 1 << 16, Grading::Geometric { ratio: 1.0003 })
}

/// `w_0 = (l_dot^2 / l^4)(a J_l + b (r^2 J)_l)`.
pub fn eval_w0(p: ProfileParams, lambda_dot: f64, consts: &ProfileConstants, grid: &RadialGrid) -> Vec<f64> {
    let c = lambda_dot * lambda_dot / p.lambda.powi(4);
    if c == 0.0 {
        return vec![0.0; grid.len()];
    }
    grid.map(|r| {
        let rho = p.lambda * r;
        let j = profile_point(p.k, rho).j;
        c * (consts.a_coeff * j + consts.b_coeff * rho * rho * j)
    })
}

/// `d/dt w_0` for a trajectory with the given `(lambda, l_dot, l_ddot)`.
pub fn eval_w0_dt(
    p: ProfileParams,
    lambda_dot: f64,
    lambda_ddot: f64,
    consts: &ProfileConstants,
    grid: &RadialGrid,
) -> Vec<f64> {
    let l = p.lambda;
    let c = lambda_dot * lambda_dot / l.powi(4);
    let c_dot = 2.0 * lambda_dot * lambda_ddot / l.powi(4) - 4.0 * lambda_dot.powi(3) / l.powi(5);
    let rate = lambda_dot / l;
    let (a, b) = (consts.a_coeff, consts.b_coeff);
    grid.map(|r| {
        let rho = l * r;
        let pt = profile_point(p.k, rho);
        let shape = a * pt.j + b * rho * rho * pt.j;
        // rho d/drho of the shape
        let rho_dshape = a * pt.r_dj + b * (2.0 * rho * rho * pt.j + rho * rho * pt.r_dj);
        c_dot * shape + c * rate * rho_dshape
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn uniform(r_max: f64, n: usize) -> RadialGrid {
        RadialGrid::new(r_max, n, Grading::Uniform).unwrap()
    }

    #[test]
    fn point_values() {
        let p = ProfileParams::new(4, 1.0).unwrap();
        assert!((eval_i(p, 1.0) - PI / 2.0).abs() < 1e-15);
        assert!((eval_j(p, 1.0) - 4.0).abs() < 1e-14);
        assert_eq!(eval_j(p, 0.0), 0.0);
        assert!((eval_i(p, 1e6) - PI).abs() < 1e-15);
        assert!(eval_i(p, 1e300).is_finite());
        assert!(eval_j(ProfileParams::new(6, 1e5).unwrap(), 1e3).is_finite());
    }

    #[test]
    fn bogomolnyi_first_order_relation() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for k in [3, 4, 5, 6] {
            for lambda in [1.0, 16.0, 1e3] {
                let p = ProfileParams::new(k, lambda).unwrap();
                for _ in 0..100 {
                    let r: f64 = 10f64.powf(rng.gen_range(-4.0..2.0));
                    let res = r * eval_i_dr(p, r) - k as f64 * eval_i(p, r).sin();
                    assert!(res.abs() < 1e-10, "k={k} lambda={lambda} r={r} res={res}");
                    assert!((eval_j(p, r) - r * eval_i_dr(p, r)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn analytic_derivatives_match_differencing() {
        let p = ProfileParams::new(4, 2.0).unwrap();
        let h = 1e-5;
        for r in [0.1, 0.4, 0.5, 0.7, 3.0] {
            let dj = (eval_j(p, r + h) - eval_j(p, r - h)) / (2.0 * h);
            assert!((r * dj - eval_r_dj(p, r)).abs() < 1e-7);
            let ddj = (eval_r_dj(p, r + h) - eval_r_dj(p, r - h)) / (2.0 * h);
            assert!((r * ddj - eval_r_d_r_dj(p, r)).abs() < 1e-6);
        }
    }

    #[test]
    fn j_time_derivatives_match_time_differencing() {
        // lambda(t) = 3 + t^2 + 0.5 t
        let lam = |t: f64| 3.0 + t * t + 0.5 * t;
        let lam_dot = |t: f64| 2.0 * t + 0.5;
        let grid = uniform(5.0, 64);
        let t = 0.3;
        let dt = 1e-4;
        let at = |s: f64| sample_profile(ProfileParams::new(4, lam(s)).unwrap(), &grid).j;
        let jp = at(t + dt);
        let jm = at(t - dt);
        let j0 = at(t);
        let p = ProfileParams::new(4, lam(t)).unwrap();
        let jd = j_dot(p, lam_dot(t), &grid);
        let jdd = j_ddot(p, lam_dot(t), 2.0, &grid);
        for i in 0..grid.len() {
            let fd1 = (jp[i] - jm[i]) / (2.0 * dt);
            let fd2 = (jp[i] - 2.0 * j0[i] + jm[i]) / (dt * dt);
            assert!((fd1 - jd[i]).abs() < 1e-6, "{i}");
            assert!((fd2 - jdd[i]).abs() < 1e-4, "{i}: {fd2} vs {}", jdd[i]);
        }
        // halving dt reduces the first-derivative error by about four
        let err = |dt: f64| {
            let jp = at(t + dt);
            let jm = at(t - dt);
            (0..grid.len())
                .map(|i| ((jp[i] - jm[i]) / (2.0 * dt) - jd[i]).abs())
                .fold(0.0, f64::max)
        };
        let ratio = err(1e-2) / err(5e-3);
        assert!((ratio - 4.0).abs() < 0.2, "{ratio}");
    }

    fn a_residual(k: u32, lambda: f64, n: usize) -> f64 {
        let grid = uniform(4.0 / lambda, n);
        let p = ProfileParams::new(k, lambda).unwrap();
        let j = sample_profile(p, &grid).j;
        let a = apply_a(p, &j, &grid).unwrap();
        a.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    #[test]
    fn a_kills_j_at_second_order() {
        for k in [4, 5, 6] {
            let e1 = a_residual(k, 1.0, 400);
            let e2 = a_residual(k, 1.0, 800);
            let ratio = e1 / e2;
            assert!((ratio - 4.0).abs() < 0.5, "k={k} ratio {ratio}");
        }
    }

    #[test]
    fn h_factorizes_and_annihilates_j() {
        let p = ProfileParams::new(4, 2.0).unwrap();
        let err = |n: usize| {
            let grid = uniform(6.0, n);
            let f = grid.map(|r| (r * r) * (-(r - 1.0).powi(2) * 4.0).exp() * r * r);
            let af = apply_a(p, &f, &grid).unwrap();
            let aaf = apply_a_star(p, &af, &grid).unwrap();
            let hf = apply_h(p, &f, &grid).unwrap();
            let j = sample_profile(p, &grid).j;
            let hj = apply_h(p, &j, &grid).unwrap();
            let m = n - 2;
            let e_fact = (0..m).map(|i| (aaf[i] - hf[i]).abs()).fold(0.0, f64::max);
            let scale = (0..m)
                .map(|i| 16.0 * j[i].abs() / grid.nodes()[i].powi(2))
                .fold(0.0, f64::max);
            let e_kernel = (0..m).map(|i| hj[i].abs()).fold(0.0, f64::max) / scale;
            (e_fact, e_kernel)
        };
        let (f1, k1) = err(600);
        let (f2, k2) = err(1200);
        assert!(f1 / f2 > 3.0, "{f1} {f2}");
        assert!(k1 / k2 > 3.0, "{k1} {k2}");
        assert!(k2 < 1e-3, "{k2}");
    }

    #[test]
    fn h_tilde_potential_bounds() {
        let grid = RadialGrid::new(50.0, 1024, Grading::Geometric { ratio: 1.01 }).unwrap();
        for lambda in [1.0, 10.0, 1e3] {
            for k in [4u32, 5, 6] {
                let p = ProfileParams::new(k, lambda).unwrap();
                let kf = k as f64;
                for &r in grid.nodes() {
                    assert!(potential_v(p, r) * r * r >= (kf - 1.0).powi(2) - 1e-12);
                }
                let r_small = 1e-6 / lambda;
                let lim = potential_v(p, r_small) * r_small * r_small;
                assert!((lim - (kf + 1.0).powi(2)).abs() < 1e-9);
            }
        }
        let p = ProfileParams::new(4, 1.0).unwrap();
        let zero = vec![0.0; grid.len()];
        assert!(apply_h_tilde(p, &zero, &grid).unwrap().iter().all(|&x| x == 0.0));
        assert!(apply_a(p, &zero, &grid).unwrap().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn nonlinearity_edge_cases() {
        let grid = uniform(3.0, 32);
        let p = ProfileParams::new(4, 1.0).unwrap();
        let zero = vec![0.0; grid.len()];
        assert!(nonlinearity_n(p, &zero, &grid).unwrap().iter().all(|&x| x == 0.0));

        let u = vec![1e-4; grid.len()];
        let n = nonlinearity_n(p, &u, &grid).unwrap();
        for (i, &r) in grid.nodes().iter().enumerate() {
            let i2 = 2.0 * eval_i(p, r);
            // quadratic and cubic Taylor terms, scaled by u^2
            let lead = 16.0 * (i2.sin() + i2.cos() * (2.0 / 3.0) * 1e-4) / (r * r);
            let ratio = n[i] / 1e-8;
            assert!((ratio - lead).abs() <= 1e-6 * (1.0 + lead.abs()), "{r} {ratio} {lead}");
        }

        let u = vec![PI; grid.len()];
        let n = nonlinearity_n(p, &u, &grid).unwrap();
        for (i, &r) in grid.nodes().iter().enumerate() {
            let expected = 16.0 * (2.0 * eval_i(p, r)).cos() / (r * r) * PI;
            assert!((n[i] - expected).abs() < 1e-12 * (1.0 + expected.abs()));
        }
    }

    #[test]
    fn cubic_remainder_is_continuous_at_switch() {
        let below = cubic_remainder(SERIES_THRESHOLD * (1.0 - 1e-12));
        let above = cubic_remainder(SERIES_THRESHOLD * (1.0 + 1e-12));
        assert!((below - above).abs() / below < 1e-6);
    }

    #[test]
    fn constants_require_k_three() {
        let grid = uniform(10.0, 64);
        assert!(matches!(
            ProfileConstants::compute(2, &grid),
            Err(SimError::UnsupportedIndex { k: 2, .. })
        ));
    }

    #[test]
    fn w0_properties() {
        let consts = ProfileConstants::reference(4).unwrap();
        assert_eq!(consts.b_coeff, 0.25);
        let grid = RadialGrid::new(50.0, 4096, Grading::Geometric { ratio: 1.003 }).unwrap();
        let p = ProfileParams::new(4, 16.0).unwrap();
        assert!(eval_w0(p, 0.0, &consts, &grid).iter().all(|&x| x == 0.0));
        let w1 = eval_w0(p, 3.0, &consts, &grid);
        let w2 = eval_w0(p, 6.0, &consts, &grid);
        for (a, b) in w1.iter().zip(&w2) {
            assert!((4.0 * a - b).abs() <= 1e-14 * b.abs().max(1e-300));
        }
        let j = sample_profile(p, &grid).j;
        let proj = grid.inner(&w1, &j).unwrap();
        let scale = grid.norm_sq(&w1).unwrap().sqrt() * grid.norm_sq(&j).unwrap().sqrt();
        assert!(proj.abs() < 1e-4 * scale, "{proj} vs {scale}");
    }

    #[test]
    fn w0_time_derivative_matches_differencing() {
        let consts = ProfileConstants::reference(4).unwrap();
        let grid = uniform(2.0, 200);
        let lam = |t: f64| 4.0 + 3.0 * t + t * t;
        let lam_dot = |t: f64| 3.0 + 2.0 * t;
        let w = |t: f64| eval_w0(ProfileParams::new(4, lam(t)).unwrap(), lam_dot(t), &consts, &grid);
        let t = 0.2;
        let dt = 1e-5;
        let (wp, wm) = (w(t + dt), w(t - dt));
        let dw = eval_w0_dt(ProfileParams::new(4, lam(t)).unwrap(), lam_dot(t), 2.0, &consts, &grid);
        for i in 0..grid.len() {
            let fd = (wp[i] - wm[i]) / (2.0 * dt);
            assert!((fd - dw[i]).abs() < 1e-6 * (1.0 + dw[i].abs()), "{i}: {fd} {}", dw[i]);
        }
    }
}
