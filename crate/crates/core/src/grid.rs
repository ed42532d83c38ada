//! Radial mesh on `(0, r_max]` and the `r dr` quadrature used by every inner
//! product in the crate.
//!
//! The origin is not a node. Fields that need a value at `r = 0` take it as
//! an explicit ghost argument (always zero for the evolved fields).

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Result, SimError};

pub const MIN_NODES: usize = 16;
pub const MAX_GEOMETRIC_RATIO: f64 = 1.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Grading {
    Uniform,
    Geometric { ratio: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub r_max: f64,
    pub n: usize,
    pub grading: Grading,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            r_max: 50.0,
            n: 4096,
            grading: Grading::Geometric { ratio: 1.002 },
        }
    }
}

impl GridSpec {
    pub fn build(&self) -> Result<RadialGrid> {
        RadialGrid::new(self.r_max, self.n, self.grading)
    }

    /// Same outer radius with twice the nodes; a geometric ratio is replaced
    /// by its square root so every local spacing roughly halves.
    pub fn refined(&self) -> GridSpec {
        let grading = match self.grading {
            Grading::Uniform => Grading::Uniform,
            Grading::Geometric { ratio } => Grading::Geometric { ratio: ratio.sqrt() },
        };
        GridSpec {
            r_max: self.r_max,
            n: self.n * 2,
            grading,
        }
    }
}

/// First node of a geometric grid: `r_max (q - 1) / (q^n - 1)`.
pub fn geometric_first_node(r_max: f64, n: usize, ratio: f64) -> f64 {
    r_max * (ratio - 1.0) / (ratio.powi(n as i32) - 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    spec: GridSpec,
    nodes: Vec<f64>,
    /// `spacing[i] = r_i - r_{i-1}` with `r_{-1} = 0`.
    spacing: Vec<f64>,
    quad_weights: Vec<f64>,
}

impl RadialGrid {
    pub fn new(r_max: f64, n: usize, grading: Grading) -> Result<Self> {
        if !(r_max > 0.0) || !r_max.is_finite() {
            return Err(SimError::Config(format!("r_max must be positive, got {r_max}")));
        }
        if n < MIN_NODES {
            return Err(SimError::Config(format!(
                "grid needs at least {MIN_NODES} nodes, got {n}"
            )));
        }
        let nodes = match grading {
            Grading::Uniform => (1..=n).map(|i| r_max * i as f64 / n as f64).collect::<Vec<_>>(),
            Grading::Geometric { ratio } => {
                if !(ratio > 1.0 && ratio <= MAX_GEOMETRIC_RATIO) {
                    return Err(SimError::Config(format!(
                        "geometric ratio must lie in (1, {MAX_GEOMETRIC_RATIO}], got {ratio}"
                    )));
                }
                let r1 = geometric_first_node(r_max, n, ratio);
                let mut nodes = Vec::with_capacity(n);
                let mut r = 0.0;
                let mut h = r1;
                for _ in 0..n {
                    r += h;
                    nodes.push(r);
                    h *= ratio;
                }
                // pin the outer node exactly; accumulated rounding is O(n eps)
                nodes[n - 1] = r_max;
                nodes
            }
        };
        Self::from_parts(GridSpec { r_max, n, grading }, nodes)
    }

    pub(crate) fn from_parts(spec: GridSpec, nodes: Vec<f64>) -> Result<Self> {
        if nodes.is_empty() || nodes[0] <= 0.0 {
            return Err(SimError::Config("first node must be positive".into()));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(SimError::Config("nodes must be strictly increasing".into()));
        }
        let n = nodes.len();
        let mut spacing = Vec::with_capacity(n);
        let mut prev = 0.0;
        for &r in &nodes {
            spacing.push(r - prev);
            prev = r;
        }
        // trapezoid on g = f r; the integrand vanishes at r = 0 whatever f(0) is
        let quad_weights = (0..n)
            .map(|i| {
                let right = if i + 1 < n { spacing[i + 1] } else { 0.0 };
                nodes[i] * 0.5 * (spacing[i] + right)
            })
            .collect();
        Ok(Self {
            spec,
            nodes,
            spacing,
            quad_weights,
        })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn r_max(&self) -> f64 {
        self.spec.r_max
    }

    pub fn grading(&self) -> Grading {
        self.spec.grading
    }

    /// Weights for the measure `r dr`.
    pub fn quad_weights(&self) -> &[f64] {
        &self.quad_weights
    }

    /// `r_i - r_{i-1}`, with the first entry measured from the origin.
    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn min_spacing(&self) -> f64 {
        self.spacing.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Local spacing at radius `r` (the cell containing it).
    pub fn spacing_at(&self, r: f64) -> f64 {
        let idx = self.nodes.partition_point(|&x| x < r).min(self.len() - 1);
        self.spacing[idx]
    }

    /// Number of nodes with `r_i < r`.
    pub fn count_below(&self, r: f64) -> usize {
        self.nodes.partition_point(|&x| x < r)
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        self.nodes.iter().map(|&r| f(r)).collect()
    }

    pub fn check(&self, f: &[f64]) -> Result<()> {
        check_len(self.len(), f.len())
    }

    /// Trapezoid approximation of `int_0^{r_max} f r^{1+p} dr`.
    pub fn weighted_integral(&self, f: &[f64], p: u32) -> Result<f64> {
        self.check(f)?;
        Ok(if p == 0 {
            f.iter().zip(&self.quad_weights).map(|(a, w)| a * w).sum()
        } else {
            let p = p as i32;
            f.iter()
                .zip(&self.quad_weights)
                .zip(&self.nodes)
                .map(|((a, w), r)| a * w * r.powi(p))
                .sum()
        })
    }

    /// `<f, g> = int f g r dr`.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> Result<f64> {
        self.check(f)?;
        self.check(g)?;
        Ok(f.iter()
            .zip(g)
            .zip(&self.quad_weights)
            .map(|((a, b), w)| a * b * w)
            .sum())
    }

    pub fn norm_sq(&self, f: &[f64]) -> Result<f64> {
        self.inner(f, f)
    }

    /// `int f r dr` restricted to nodes with `r_i >= r_cut`, cutting on whole
    /// quadrature cells.
    pub fn weighted_integral_beyond(&self, f: &[f64], r_cut: f64) -> Result<f64> {
        self.check(f)?;
        let start = self.count_below(r_cut);
        Ok(f[start..]
            .iter()
            .zip(&self.quad_weights[start..])
            .map(|(a, w)| a * w)
            .sum())
    }

    /// `(1/r) int_0^r f(R) R dR` at every node.
    pub fn running_average(&self, f: &[f64]) -> Result<Vec<f64>> {
        self.check(f)?;
        let mut acc = 0.0;
        let mut prev = 0.0;
        let mut out = Vec::with_capacity(self.len());
        for i in 0..self.len() {
            let cur = f[i] * self.nodes[i];
            acc += 0.5 * self.spacing[i] * (prev + cur);
            prev = cur;
            out.push(acc / self.nodes[i]);
        }
        Ok(out)
    }

    /// Second-order first derivative at every node; `origin` is the value at
    /// `r = 0` used by the first stencil. The outer node uses a one-sided
    /// three-point formula.
    pub fn derivative(&self, f: &[f64], origin: f64) -> Result<Vec<f64>> {
        self.check(f)?;
        let n = self.len();
        let mut out = vec![0.0; n];
        for i in 0..n - 1 {
            let (fm, hm) = if i == 0 {
                (origin, self.spacing[0])
            } else {
                (f[i - 1], self.spacing[i])
            };
            let hp = self.spacing[i + 1];
            out[i] = (-hp / (hm * (hm + hp))) * fm
                + ((hp - hm) / (hm * hp)) * f[i]
                + (hm / (hp * (hm + hp))) * f[i + 1];
        }
        let h1 = self.spacing[n - 1];
        let h2 = self.spacing[n - 2];
        out[n - 1] = f[n - 1] * (2.0 * h1 + h2) / (h1 * (h1 + h2))
            - f[n - 2] * (h1 + h2) / (h1 * h2)
            + f[n - 3] * h1 / (h2 * (h1 + h2));
        Ok(out)
    }

    /// Plain second derivative (three-point, non-uniform) at interior nodes;
    /// the outer node is left at zero.
    pub fn second_derivative(&self, f: &[f64], origin: f64) -> Result<Vec<f64>> {
        self.check(f)?;
        let n = self.len();
        let mut out = vec![0.0; n];
        for i in 0..n - 1 {
            let fm = if i == 0 { origin } else { f[i - 1] };
            let hm = self.spacing[i];
            let hp = self.spacing[i + 1];
            out[i] = 2.0 * (fm / (hm * (hm + hp)) - f[i] / (hm * hp) + f[i + 1] / (hp * (hm + hp)));
        }
        Ok(out)
    }

    /// Flux-form radial Laplacian `(1/r)(r f_r)_r` at interior nodes; the
    /// outer node is a boundary node and is left at zero.
    pub fn laplacian(&self, f: &[f64], origin: f64) -> Result<Vec<f64>> {
        self.check(f)?;
        let n = self.len();
        let mut out = vec![0.0; n];
        for i in 0..n - 1 {
            let c = self.laplacian_coeffs(i);
            let fm = if i == 0 { origin } else { f[i - 1] };
            out[i] = c.lower * fm + c.diag * f[i] + c.upper * f[i + 1];
        }
        Ok(out)
    }

    /// Stencil of the flux-form Laplacian at interior node `i`.
    pub fn laplacian_coeffs(&self, i: usize) -> Stencil {
        let r = self.nodes[i];
        let hm = self.spacing[i];
        let hp = self.spacing[i + 1];
        let r_lo = r - 0.5 * hm;
        let r_hi = r + 0.5 * hp;
        let vol = r * 0.5 * (hm + hp);
        let lower = r_lo / (hm * vol);
        let upper = r_hi / (hp * vol);
        Stencil {
            lower,
            diag: -(lower + upper),
            upper,
        }
    }

    /// Stencil of the flux-form Laplacian for a field that is even in `r`
    /// (`f_r(0) = 0`): the first control volume reaches the origin, where the
    /// flux vanishes, so no ghost value enters.
    pub fn laplacian_coeffs_even(&self, i: usize) -> Stencil {
        if i > 0 {
            return self.laplacian_coeffs(i);
        }
        let hp = self.spacing[1];
        let r_hi = self.nodes[0] + 0.5 * hp;
        let upper = r_hi / (hp * 0.5 * r_hi * r_hi);
        Stencil {
            lower: 0.0,
            diag: -upper,
            upper,
        }
    }

    /// Value at `r = 0` of the even quadratic `a + b r^2` through the first
    /// two nodes; the origin argument for derivatives of even fields.
    pub fn even_origin(&self, f: &[f64]) -> f64 {
        let (r1, r2) = (self.nodes[0], self.nodes[1]);
        (r2 * r2 * f[0] - r1 * r1 * f[1]) / (r2 * r2 - r1 * r1)
    }

    /// Flux-form `(1/r)(r g)_r` with face values averaged from the nodes and
    /// `g(0) = origin`; the outer node uses the one-sided derivative.
    pub fn divergence(&self, g: &[f64], origin: f64) -> Result<Vec<f64>> {
        self.check(g)?;
        let n = self.len();
        let mut out = vec![0.0; n];
        for i in 0..n - 1 {
            let r = self.nodes[i];
            let hm = self.spacing[i];
            let hp = self.spacing[i + 1];
            let gm = if i == 0 { origin } else { g[i - 1] };
            let r_lo = r - 0.5 * hm;
            let r_hi = r + 0.5 * hp;
            let flux_hi = r_hi * 0.5 * (g[i] + g[i + 1]);
            let flux_lo = r_lo * 0.5 * (gm + g[i]);
            out[i] = (flux_hi - flux_lo) / (r * 0.5 * (hm + hp));
        }
        let d = self.derivative(g, origin)?;
        out[n - 1] = d[n - 1] + g[n - 1] / self.nodes[n - 1];
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Stencil {
    pub lower: f64,
    pub diag: f64,
    pub upper: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn even_stencil_exact_on_even_quadratics() {
        for grading in [Grading::Uniform, Grading::Geometric { ratio: 1.05 }] {
            let g = RadialGrid::new(2.0, 64, grading).unwrap();
            let f = g.map(|r| 3.0 - 0.7 * r * r);
            let c = g.laplacian_coeffs_even(0);
            let lap0 = c.diag * f[0] + c.upper * f[1];
            assert!((lap0 + 2.8).abs() < 1e-10, "{lap0}");
            assert!((g.even_origin(&f) - 3.0).abs() < 1e-12);
            let d = g.derivative(&f, g.even_origin(&f)).unwrap();
            assert!((d[0] + 1.4 * g.nodes()[0]).abs() < 1e-10);
        }
    }

    #[test]
    fn uniform_nodes() {
        let g = RadialGrid::new(1.0, 16, Grading::Uniform).unwrap();
        assert_eq!(g.nodes()[0], 1.0 / 16.0);
        assert_eq!(g.nodes()[15], 1.0);
        let spec = GridSpec {
            r_max: 1.0,
            n: 2,
            grading: Grading::Uniform,
        };
        let tiny = RadialGrid::from_parts(spec, vec![0.5, 1.0]).unwrap();
        assert_eq!(tiny.nodes(), &[0.5, 1.0]);
    }

    #[test]
    fn geometric_first_node_matches_closed_form() {
        let expected = geometric_first_node(50.0, 4096, 1.002);
        assert!(expected < 1e-3);
        let g = RadialGrid::new(50.0, 4096, Grading::Geometric { ratio: 1.002 }).unwrap();
        assert!((g.nodes()[0] - expected).abs() < 1e-15);
        assert!(g.nodes()[0] < 1e-3);
        assert_eq!(*g.nodes().last().unwrap(), 50.0);
        assert!(g.nodes().windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn rejects_bad_config() {
        assert!(RadialGrid::new(0.0, 32, Grading::Uniform).is_err());
        assert!(RadialGrid::new(-1.0, 32, Grading::Uniform).is_err());
        assert!(RadialGrid::new(1.0, 15, Grading::Uniform).is_err());
        assert!(RadialGrid::new(1.0, 32, Grading::Geometric { ratio: 1.0 }).is_err());
        assert!(RadialGrid::new(1.0, 32, Grading::Geometric { ratio: 1.2 }).is_err());
    }

    #[test]
    fn constants_integrate_exactly() {
        for grading in [Grading::Uniform, Grading::Geometric { ratio: 1.01 }] {
            let g = RadialGrid::new(7.0, 300, grading).unwrap();
            let one = vec![1.0; g.len()];
            let q = g.weighted_integral(&one, 0).unwrap();
            assert!((q - 24.5).abs() / 24.5 < 1e-12, "{q}");
        }
    }

    #[test]
    fn simple_moments() {
        let g = RadialGrid::new(1.0, 4096, Grading::Uniform).unwrap();
        let f = g.map(|r| r);
        assert!((g.weighted_integral(&f, 0).unwrap() - 1.0 / 3.0).abs() < 1e-7);
        let zero = vec![0.0; g.len()];
        assert_eq!(g.weighted_integral(&zero, 3).unwrap(), 0.0);
        assert!(g.weighted_integral(&zero[1..], 0).is_err());
    }

    fn gaussian_error(spec: GridSpec) -> f64 {
        let g = spec.build().unwrap();
        let f = g.map(|r| (-r * r).exp());
        // int_0^inf e^{-r^2} r dr = 1/2
        (g.weighted_integral(&f, 0).unwrap() - 0.5).abs()
    }

    #[test]
    fn quadrature_is_second_order() {
        for spec in [
            GridSpec {
                r_max: 10.0,
                n: 64,
                grading: Grading::Uniform,
            },
            GridSpec {
                r_max: 10.0,
                n: 128,
                grading: Grading::Geometric { ratio: 1.04 },
            },
        ] {
            let e0 = gaussian_error(spec);
            let e1 = gaussian_error(spec.refined());
            let e2 = gaussian_error(spec.refined().refined());
            for (a, b) in [(e0, e1), (e1, e2)] {
                let order = (a / b).log2();
                assert!((1.8..=2.2).contains(&order), "order {order} for {spec:?}");
            }
        }
    }

    #[test]
    fn derivative_and_laplacian_are_second_order() {
        let err = |n: usize| {
            let g = RadialGrid::new(6.0, n, Grading::Uniform).unwrap();
            let f = g.map(|r| (-r * r).exp() * r * r);
            let d = g.derivative(&f, 0.0).unwrap();
            let l = g.laplacian(&f, 0.0).unwrap();
            let mut ed: f64 = 0.0;
            let mut el: f64 = 0.0;
            for i in 0..n - 1 {
                let r = g.nodes()[i];
                let e = (-r * r).exp();
                let exact_d = e * (2.0 * r - 2.0 * r.powi(3));
                // (1/r)(r f')' for f = r^2 e^{-r^2}
                let exact_l = e * (4.0 - 12.0 * r * r + 4.0 * r.powi(4));
                ed = ed.max((d[i] - exact_d).abs());
                el = el.max((l[i] - exact_l).abs());
            }
            (ed, el)
        };
        let (d1, l1) = err(200);
        let (d2, l2) = err(400);
        assert!(((d1 / d2).log2() - 2.0).abs() < 0.2);
        assert!(((l1 / l2).log2() - 2.0).abs() < 0.2);
    }

    #[test]
    fn running_average_of_constant() {
        let g = RadialGrid::new(3.0, 64, Grading::Geometric { ratio: 1.05 }).unwrap();
        let h = g.running_average(&vec![2.0; g.len()]).unwrap();
        for (hi, r) in h.iter().zip(g.nodes()) {
            assert!((hi - r).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn integral_is_linear(a in -5.0f64..5.0, b in -5.0f64..5.0, seed in 0u64..1000) {
            let g = RadialGrid::new(4.0, 64, Grading::Geometric { ratio: 1.03 }).unwrap();
            let s = seed as f64;
            let f = g.map(|r| (r + s).sin());
            let h = g.map(|r| (2.0 * r - s).cos() * r);
            let combo: Vec<f64> = f.iter().zip(&h).map(|(x, y)| a * x + b * y).collect();
            let lhs = g.weighted_integral(&combo, 1).unwrap();
            let rhs = a * g.weighted_integral(&f, 1).unwrap() + b * g.weighted_integral(&h, 1).unwrap();
            let scale = 1.0 + lhs.abs().max(rhs.abs());
            prop_assert!((lhs - rhs).abs() / scale < 1e-12);
        }
    }
}
