use nematic_blowup::grid::{Grading, RadialGrid};
use nematic_blowup::profiles::{eval_j, ProfileConstants, ProfileParams};
use rand::{Rng, SeedableRng};
use statrs::function::gamma::gamma;

/// `int_0^inf (2k x/(1+x^2))^2 r^{1+p} dr` with `x = r^k`, via `s = x^2`:
/// equals `2k B(1 + s0, 1 - s0)` with `s0 = (p + 2)/(2k)`.
fn beta_oracle(k: u32, p: u32) -> f64 {
    let s0 = (p as f64 + 2.0) / (2.0 * k as f64);
    let b = gamma(1.0 + s0) * gamma(1.0 - s0) / gamma(2.0);
    2.0 * k as f64 * b
}

#[test]
fn beta_oracle_matches_closed_forms() {
    use std::f64::consts::PI;
    for k in [4u32, 5, 6] {
        let kf = k as f64;
        assert!((beta_oracle(k, 0) - 2.0 * PI / (PI / kf).sin()).abs() < 1e-12);
        assert!((beta_oracle(k, 2) - 4.0 * PI / (2.0 * PI / kf).sin()).abs() < 1e-11);
    }
}

#[test]
fn reference_constants_match_beta_integrals() {
    for k in [4u32, 5, 6] {
        let c = ProfileConstants::reference(k).unwrap();
        let c0 = beta_oracle(k, 0);
        let m2 = beta_oracle(k, 2);
        assert!((c.c0_const / c0 - 1.0).abs() < 1e-8, "k={k} {} {c0}", c.c0_const);
        assert!((c.jr2j_inner / m2 - 1.0).abs() < 1e-8, "k={k} {} {m2}", c.jr2j_inner);
        assert!((c.a_coeff + m2 / (4.0 * c0)).abs() < 1e-8);
        assert_eq!(c.b_coeff, 0.25);
        assert!(c.ij_inner > 0.0);
    }
    let c = ProfileConstants::reference(4).unwrap();
    assert!((c.a_coeff + 1.0 / (2.0 * 2f64.sqrt())).abs() < 1e-8);
}

#[test]
fn rescaled_norm_follows_scaling() {
    let c0 = beta_oracle(4, 0);
    let mut rng = rand::rngs::StdRng::seed_from_u64(11);
    for _ in 0..10 {
        let lambda: f64 = 10f64.powf(rng.gen_range(-1.0..3.0));
        let p = ProfileParams::new(4, lambda).unwrap();
        // lambda r_max = 1000 leaves a far tail below 1e-17 for k = 4
        let norm = |n: usize, ratio: f64| {
            let grid = RadialGrid::new(1000.0 / lambda, n, Grading::Geometric { ratio }).unwrap();
            grid.norm_sq(&grid.map(|r| eval_j(p, r))).unwrap()
        };
        let coarse = norm(1 << 16, 1.0003);
        let fine = norm(1 << 17, 1.0003f64.sqrt());
        let rich = (4.0 * fine - coarse) / 3.0;
        let rel = (rich * lambda * lambda / c0 - 1.0).abs();
        assert!(rel < 1e-8, "{lambda} {rel}");
    }
}
