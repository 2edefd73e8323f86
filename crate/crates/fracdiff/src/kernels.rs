//! The three nonlocal time-kernel families (variable order, distributed
//! order, multiterm), their Laplace symbols, and the discrete convolution
//! operators built on them.
//!
//! The convolution I_K g(t) = ∫0^t K(t-s) g(s) ds is weakly singular at
//! s = t; it is discretized by product integration: exact moments of the
//! singular kernel against piecewise-linear data, which keeps second-order
//! accuracy where naive quadrature would lose it.

use crate::special::{gamma, gauss_legendre_on};
use crate::{Error, Result};
use num_complex::Complex64;

/// Time grid t0 = 0 < t1 < ... < tM, optionally graded toward 0.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    points: Vec<f64>,
    grading: Grading,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Grading {
    Uniform,
    /// t_j = T (j/M)^gamma with gamma >= 1.
    Graded(f64),
    Explicit,
}

impl TimeGrid {
    pub fn uniform(t_end: f64, steps: usize) -> Result<Self> {
        Self::graded_impl(t_end, steps, 1.0, Grading::Uniform)
    }

    pub fn graded(t_end: f64, steps: usize, gamma: f64) -> Result<Self> {
        if gamma < 1.0 {
            return Err(Error::Validation(format!(
                "grading exponent must be >= 1, got {gamma}"
            )));
        }
        let grading = if gamma == 1.0 {
            Grading::Uniform
        } else {
            Grading::Graded(gamma)
        };
        Self::graded_impl(t_end, steps, gamma, grading)
    }

    fn graded_impl(t_end: f64, steps: usize, gamma: f64, grading: Grading) -> Result<Self> {
        if t_end <= 0.0 {
            return Err(Error::Validation(format!(
                "time horizon must be positive, got {t_end}"
            )));
        }
        if steps < 1 {
            return Err(Error::Validation("time grid needs at least one step".into()));
        }
        let points = (0..=steps)
            .map(|j| t_end * (j as f64 / steps as f64).powf(gamma))
            .collect();
        Ok(TimeGrid { points, grading })
    }

    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Validation("time grid needs at least two points".into()));
        }
        if points[0] != 0.0 {
            return Err(Error::Validation("time grid must start at t = 0".into()));
        }
        if !points.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::Validation(
                "time grid points must be strictly increasing".into(),
            ));
        }
        Ok(TimeGrid {
            points,
            grading: Grading::Explicit,
        })
    }

    /// Union of this grid with extra sample times (used to pin comparison
    /// times onto a run's grid).
    pub fn merged_with(&self, extra: &[f64]) -> Result<Self> {
        let mut pts = self.points.clone();
        pts.extend(extra.iter().copied().filter(|&t| t > 0.0));
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs());
        Self::from_points(pts)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn grading(&self) -> Grading {
        self.grading
    }

    /// Number intervals.
    pub fn steps(&self) -> usize {
        self.points.len() - 1
    }

    pub fn t_end(&self) -> f64 {
        *self.points.last().unwrap()
    }
}

/// Weight function of the distributed-order family, defined on (0, 1).
#[derive(Debug, Clone, PartialEq)]
pub enum MuWeight {
    /// mu ≡ 1.
    Uniform,
    /// Smooth bump centered at 1/2, peak value 1, vanishing at 0 and 1.
    Bump,
    /// Piecewise-linear interpolation of (alpha, mu) samples.
    Samples(Vec<(f64, f64)>),
}

impl MuWeight {
    pub fn eval(&self, a: f64) -> f64 {
        match self {
            MuWeight::Uniform => 1.0,
            MuWeight::Bump => {
                let s = 2.0 * a - 1.0;
                if s.abs() >= 1.0 {
                    0.0
                } else {
                    (1.0 - 1.0 / (1.0 - s * s)).exp()
                }
            }
            MuWeight::Samples(samples) => {
                if samples.is_empty() {
                    return 0.0;
                }
                if a <= samples[0].0 {
                    return samples[0].1;
                }
                if a >= samples[samples.len() - 1].0 {
                    return samples[samples.len() - 1].1;
                }
                for w in samples.windows(2) {
                    if a >= w[0].0 && a <= w[1].0 {
                        let s = (a - w[0].0) / (w[1].0 - w[0].0);
                        return w[0].1 + s * (w[1].1 - w[0].1);
                    }
                }
                0.0
            }
        }
    }
}

/// Spatially variable exponent field with its essential bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct VariableOrder {
    alpha: Vec<f64>,
    pub alpha_min: f64,
    pub alpha_max: f64,
}

/// Distributed-order kernel with a fixed Gauss-Legendre rule on (0, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct DistributedOrder {
    pub mu: MuWeight,
    pub alpha0: f64,
    pub eps: f64,
    quad_nodes: Vec<f64>,
    quad_weights: Vec<f64>,
    mu_values: Vec<f64>,
}

/// One term of the multiterm kernel: exponent and per-node weight field.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiTermComponent {
    pub alpha: f64,
    pub rho: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiTerm {
    terms: Vec<MultiTermComponent>,
}

/// The kernel K(t, x) of the nonlocal time derivative, one of the three
/// supported families.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    VariableOrder(VariableOrder),
    DistributedOrder(DistributedOrder),
    MultiTerm(MultiTerm),
}

pub const DEFAULT_ALPHA_QUAD: usize = 64;

impl VariableOrder {
    /// Per-node exponent field; enforces 0 < min <= max < 1 and the
    /// spread condition max < 2 min.
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() {
            return Err(Error::Validation("empty exponent field".into()));
        }
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for (i, &a) in alpha.iter().enumerate() {
            if !(a > 0.0 && a < 1.0) {
                return Err(Error::Validation(format!(
                    "exponent at node {i} must lie in (0,1), got {a}"
                )));
            }
            lo = lo.min(a);
            hi = hi.max(a);
        }
        if hi >= 2.0 * lo {
            return Err(Error::Validation(format!(
                "exponent spread violates alpha_max < 2 alpha_min: [{lo}, {hi}]"
            )));
        }
        Ok(VariableOrder {
            alpha,
            alpha_min: lo,
            alpha_max: hi,
        })
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }
}

impl DistributedOrder {
    /// Weight mu with its lower-bound window (alpha0, eps) and the node
    /// count of the fixed alpha-quadrature.
    pub fn new(mu: MuWeight, alpha0: f64, eps: f64, n_quad: usize) -> Result<Self> {
        if !(alpha0 > 0.0 && alpha0 < 1.0) {
            return Err(Error::Validation(format!(
                "alpha0 must lie in (0,1), got {alpha0}"
            )));
        }
        if !(eps > 0.0 && eps < alpha0) {
            return Err(Error::Validation(format!(
                "eps must lie in (0, alpha0), got {eps}"
            )));
        }
        if n_quad < 4 {
            return Err(Error::Validation("alpha quadrature needs >= 4 nodes".into()));
        }
        let mu0 = mu.eval(alpha0);
        if mu0 <= 0.0 {
            return Err(Error::Validation(format!(
                "mu(alpha0) must be positive, got {mu0}"
            )));
        }
        let (quad_nodes, quad_weights) = gauss_legendre_on(n_quad, 0.0, 1.0);
        let mu_values: Vec<f64> = quad_nodes.iter().map(|&a| mu.eval(a)).collect();
        for (a, &m) in quad_nodes.iter().zip(&mu_values) {
            if m < 0.0 {
                return Err(Error::Validation(format!(
                    "mu must be non-negative, mu({a}) = {m}"
                )));
            }
            if *a > alpha0 - eps && *a < alpha0 && m < mu0 / 2.0 {
                return Err(Error::Validation(format!(
                    "mu({a}) = {m} falls below mu(alpha0)/2 = {} inside the window",
                    mu0 / 2.0
                )));
            }
        }
        Ok(DistributedOrder {
            mu,
            alpha0,
            eps,
            quad_nodes,
            quad_weights,
            mu_values,
        })
    }

    /// Laplace symbol of the distributed family (x-independent):
    /// ϑ(p) = ∫0^1 p^a mu(a) da by the fixed rule.
    pub fn theta_symbol(&self, p: Complex64) -> Complex64 {
        let lp = p.ln();
        let mut acc = Complex64::new(0.0, 0.0);
        for ((a, w), m) in self
            .quad_nodes
            .iter()
            .zip(&self.quad_weights)
            .zip(&self.mu_values)
        {
            acc += (lp * *a).exp() * (w * m);
        }
        acc
    }
}

impl MultiTerm {
    /// Terms must have strictly increasing exponents in (0,1) and positive
    /// bounded weight fields of equal length.
    pub fn new(terms: Vec<MultiTermComponent>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Validation(
                "multiterm kernel needs at least one term".into(),
            ));
        }
        let n = terms[0].rho.len();
        if n == 0 {
            return Err(Error::Validation("empty weight field".into()));
        }
        for (j, term) in terms.iter().enumerate() {
            if !(term.alpha > 0.0 && term.alpha < 1.0) {
                return Err(Error::Validation(format!(
                    "exponent {j} must lie in (0,1), got {}",
                    term.alpha
                )));
            }
            if term.rho.len() != n {
                return Err(Error::Shape(format!(
                    "weight field {j} has length {}, expected {n}",
                    term.rho.len()
                )));
            }
            for (i, &r) in term.rho.iter().enumerate() {
                if r <= 0.0 || !r.is_finite() {
                    return Err(Error::Validation(format!(
                        "weight of term {j} at node {i} must be positive, got {r}"
                    )));
                }
            }
        }
        if !terms.windows(2).all(|w| w[1].alpha > w[0].alpha) {
            return Err(Error::Validation(
                "multiterm exponents must be strictly increasing".into(),
            ));
        }
        Ok(MultiTerm { terms })
    }

    pub fn terms(&self) -> &[MultiTermComponent] {
        &self.terms
    }

    pub fn alpha_first(&self) -> f64 {
        self.terms[0].alpha
    }

    pub fn alpha_last(&self) -> f64 {
        self.terms[self.terms.len() - 1].alpha
    }
}

/// Exact moments of the singular weight τ^{-a}/Γ(1-a) over [τ_r, τ_l]:
/// m0 = ∫ w(τ) dτ and m1 = ∫ (τ_l - τ) w(τ) dτ.
fn singular_moments(a: f64, tau_r: f64, tau_l: f64) -> (f64, f64) {
    let g1 = gamma(1.0 - a);
    let d1 = (tau_l.powf(1.0 - a) - tau_r.powf(1.0 - a)) / (1.0 - a);
    let d2 = (tau_l.powf(2.0 - a) - tau_r.powf(2.0 - a)) / (2.0 - a);
    ((d1 / g1), (tau_l * d1 - d2) / g1)
}

impl KernelSpec {
    /// Number of spatial nodes the kernel is tied to, if any (the
    /// distributed family is x-independent).
    pub fn n_nodes(&self) -> Option<usize> {
        match self {
            KernelSpec::VariableOrder(v) => Some(v.alpha.len()),
            KernelSpec::DistributedOrder(_) => None,
            KernelSpec::MultiTerm(m) => Some(m.terms[0].rho.len()),
        }
    }

    /// Smallest order exponent of the family; drives grading choices and
    /// conservative singularity handling.
    pub fn min_exponent(&self) -> f64 {
        match self {
            KernelSpec::VariableOrder(v) => v.alpha_min,
            KernelSpec::DistributedOrder(d) => d.alpha0 - d.eps,
            KernelSpec::MultiTerm(m) => m.alpha_first(),
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            KernelSpec::VariableOrder(_) => "variable-order",
            KernelSpec::DistributedOrder(_) => "distributed-order",
            KernelSpec::MultiTerm(_) => "multiterm",
        }
    }

    fn check_node(&self, x: usize) -> Result<()> {
        if let Some(n) = self.n_nodes() {
            if x >= n {
                return Err(Error::Index(format!(
                    "node {x} out of range for kernel with {n} nodes"
                )));
            }
        }
        Ok(())
    }

    /// K(t, x) for t > 0.
    pub fn kernel_time_eval(&self, t: f64, x: usize) -> Result<f64> {
        if t <= 0.0 {
            return Err(Error::Domain(format!(
                "kernel is singular at t = 0; got t = {t}"
            )));
        }
        self.check_node(x)?;
        Ok(match self {
            KernelSpec::VariableOrder(v) => {
                let a = v.alpha[x];
                t.powf(-a) / gamma(1.0 - a)
            }
            KernelSpec::DistributedOrder(d) => {
                let lt = t.ln();
                d.quad_nodes
                    .iter()
                    .zip(&d.quad_weights)
                    .zip(&d.mu_values)
                    .map(|((a, w), m)| w * m * (-a * lt).exp() / gamma(1.0 - a))
                    .sum()
            }
            KernelSpec::MultiTerm(mt) => mt
                .terms
                .iter()
                .map(|term| term.rho[x] * t.powf(-term.alpha) / gamma(1.0 - term.alpha))
                .sum(),
        })
    }

    /// Laplace symbol Φ(p, x) = p K̂(p, x) on the principal branch.
    pub fn laplace_symbol(&self, p: Complex64, x: usize) -> Result<Complex64> {
        if p.im == 0.0 && p.re <= 0.0 {
            return Err(Error::Domain(format!(
                "p = {p} lies on the branch cut (-inf, 0]"
            )));
        }
        self.check_node(x)?;
        Ok(match self {
            KernelSpec::VariableOrder(v) => p.powf(v.alpha[x]),
            KernelSpec::DistributedOrder(d) => d.theta_symbol(p),
            KernelSpec::MultiTerm(mt) => {
                let lp = p.ln();
                mt.terms
                    .iter()
                    .map(|term| (lp * term.alpha).exp() * term.rho[x])
                    .sum()
            }
        })
    }

    /// Laplace symbol over a whole field of nodes; the distributed family
    /// evaluates ϑ(p) once, the multiterm family one power per term.
    pub fn laplace_symbol_field(&self, p: Complex64, n_nodes: usize) -> Result<Vec<Complex64>> {
        if p.im == 0.0 && p.re <= 0.0 {
            return Err(Error::Domain(format!(
                "p = {p} lies on the branch cut (-inf, 0]"
            )));
        }
        if let Some(n) = self.n_nodes() {
            if n != n_nodes {
                return Err(Error::Shape(format!(
                    "kernel is defined on {n} nodes, requested {n_nodes}"
                )));
            }
        }
        Ok(match self {
            KernelSpec::VariableOrder(v) => {
                let lp = p.ln();
                v.alpha.iter().map(|&a| (lp * a).exp()).collect()
            }
            KernelSpec::DistributedOrder(d) => vec![d.theta_symbol(p); n_nodes],
            KernelSpec::MultiTerm(mt) => {
                let lp = p.ln();
                let powers: Vec<Complex64> =
                    mt.terms.iter().map(|t| (lp * t.alpha).exp()).collect();
                (0..n_nodes)
                    .map(|x| {
                        mt.terms
                            .iter()
                            .zip(&powers)
                            .map(|(t, pw)| pw * t.rho[x])
                            .sum()
                    })
                    .collect()
            }
        })
    }

    /// Product-integration moments of K(t_m - s, x) against 1 and (s - t_j)
    /// over [t_j, t_{j+1}]; x-independent families fill a single column.
    ///
    /// tau_l = t_m - t_j (the larger offset), tau_r = t_m - t_{j+1}.
    fn interval_moments(&self, tau_r: f64, tau_l: f64, out: &mut [(f64, f64)]) {
        match self {
            KernelSpec::VariableOrder(v) => {
                for (slot, &a) in out.iter_mut().zip(&v.alpha) {
                    *slot = singular_moments(a, tau_r, tau_l);
                }
            }
            KernelSpec::DistributedOrder(d) => {
                let mut m0 = 0.0;
                let mut m1 = 0.0;
                for ((a, w), m) in d.quad_nodes.iter().zip(&d.quad_weights).zip(&d.mu_values) {
                    let (s0, s1) = singular_moments(*a, tau_r, tau_l);
                    m0 += w * m * s0;
                    m1 += w * m * s1;
                }
                out[0] = (m0, m1);
            }
            KernelSpec::MultiTerm(mt) => {
                for slot in out.iter_mut() {
                    *slot = (0.0, 0.0);
                }
                for term in &mt.terms {
                    let (s0, s1) = singular_moments(term.alpha, tau_r, tau_l);
                    for (slot, &r) in out.iter_mut().zip(&term.rho) {
                        slot.0 += r * s0;
                        slot.1 += r * s1;
                    }
                }
            }
        }
    }

    fn moment_columns(&self, n_nodes: usize) -> usize {
        match self {
            KernelSpec::DistributedOrder(_) => 1,
            _ => n_nodes,
        }
    }

    /// Discrete I_K g: weakly singular Volterra convolution by product
    /// integration, exact for piecewise-linear g at constant order.
    ///
    /// `values` is time-major: values[m][x] = g(t_m, x). The output has the
    /// same shape, with the first row identically zero.
    pub fn apply_ik(&self, grid: &TimeGrid, values: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let pts = grid.points();
        if values.len() != pts.len() {
            return Err(Error::Shape(format!(
                "trajectory has {} rows but the grid has {} points",
                values.len(),
                pts.len()
            )));
        }
        let n_nodes = values[0].len();
        if let Some(n) = self.n_nodes() {
            if n != n_nodes {
                return Err(Error::Shape(format!(
                    "trajectory has {n_nodes} nodes but the kernel is defined on {n}"
                )));
            }
        }
        if values.iter().any(|row| row.len() != n_nodes) {
            return Err(Error::Shape("ragged trajectory rows".into()));
        }
        if !values[0].iter().all(|v| v.is_finite()) {
            return Err(Error::Validation("g(0, .) must be finite".into()));
        }

        let cols = self.moment_columns(n_nodes);
        use rayon::prelude::*;
        let mut out: Vec<Vec<f64>> = Vec::with_capacity(pts.len());
        out.push(vec![0.0; n_nodes]);
        let rest: Vec<Vec<f64>> = (1..pts.len())
            .into_par_iter()
            .map(|m| {
                let tm = pts[m];
                let mut acc = vec![0.0; n_nodes];
                let mut moments = vec![(0.0, 0.0); cols];
                for j in 0..m {
                    let (tl, tr) = (tm - pts[j], tm - pts[j + 1]);
                    let h = pts[j + 1] - pts[j];
                    self.interval_moments(tr, tl, &mut moments);
                    let (gj, gj1) = (&values[j], &values[j + 1]);
                    for x in 0..n_nodes {
                        let (m0, m1) = moments[if cols == 1 { 0 } else { x }];
                        acc[x] += gj[x] * m0 + (gj1[x] - gj[x]) / h * m1;
                    }
                }
                acc
            })
            .collect();
        out.extend(rest);
        Ok(out)
    }

    /// Discrete Riemann-Liouville derivative D_t^K g = d/dt I_K g.
    ///
    /// Second-order three-point differences on the (possibly graded) grid:
    /// central at interior points, one-sided backward at the final point.
    /// The derivative is singular at t = 0, so the first row is reported
    /// as zero and only interior rows carry the contract.
    pub fn riemann_liouville_derivative(
        &self,
        grid: &TimeGrid,
        values: &[Vec<f64>],
    ) -> Result<Vec<Vec<f64>>> {
        let pts = grid.points();
        if pts.len() < 3 {
            return Err(Error::Shape(
                "derivative needs at least 3 time points".into(),
            ));
        }
        let ik = self.apply_ik(grid, values)?;
        let n_nodes = values[0].len();
        let m_last = pts.len() - 1;
        let mut out = vec![vec![0.0; n_nodes]; pts.len()];
        for i in 1..m_last {
            let hm = pts[i] - pts[i - 1];
            let hp = pts[i + 1] - pts[i];
            let (cm, c0, cp) = (
                -hp / (hm * (hm + hp)),
                (hp - hm) / (hm * hp),
                hm / (hp * (hm + hp)),
            );
            for x in 0..n_nodes {
                out[i][x] = cm * ik[i - 1][x] + c0 * ik[i][x] + cp * ik[i + 1][x];
            }
        }
        // one-sided backward at the last point
        let h1 = pts[m_last - 1] - pts[m_last - 2];
        let h2 = pts[m_last] - pts[m_last - 1];
        let (c2, c1, c0) = (
            h2 / (h1 * (h1 + h2)),
            -(h1 + h2) / (h1 * h2),
            (h1 + 2.0 * h2) / (h2 * (h1 + h2)),
        );
        for x in 0..n_nodes {
            out[m_last][x] = c2 * ik[m_last - 2][x] + c1 * ik[m_last - 1][x] + c0 * ik[m_last][x];
        }
        Ok(out)
    }

    /// Truncated numerical Laplace transform of the kernel itself:
    /// ∫0^{T} e^{-pt} K(t, x) dt, with the kernel's exact moments against
    /// a piecewise-linear representation of e^{-pt}.
    pub fn laplace_transform_truncated(
        &self,
        grid: &TimeGrid,
        p: Complex64,
        x: usize,
    ) -> Result<Complex64> {
        self.check_node(x)?;
        let pts = grid.points();
        let n_cols = self.moment_columns(x + 1).max(x + 1);
        let mut moments = vec![(0.0, 0.0); n_cols];
        let col = if self.moment_columns(x + 1) == 1 { 0 } else { x };
        let mut acc = Complex64::new(0.0, 0.0);
        // here the kernel argument is the time variable itself, so the
        // moments are taken on [t_j, t_{j+1}] directly; m1 is anchored at
        // the right endpoint: m1 = ∫ (t_{j+1} - s) K(s) ds
        for j in 0..pts.len() - 1 {
            let (ta, tb) = (pts[j], pts[j + 1]);
            let h = tb - ta;
            self.interval_moments(ta, tb, &mut moments);
            let (m0, m1) = moments[col];
            let ea = (-p * ta).exp();
            let eb = (-p * tb).exp();
            acc += eb * m0 + (ea - eb) / h * m1;
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn const_alpha(n: usize, a: f64) -> KernelSpec {
        KernelSpec::VariableOrder(VariableOrder::new(vec![a; n]).unwrap())
    }

    #[test]
    fn variable_order_invariants() {
        assert!(VariableOrder::new(vec![0.5, 0.6]).is_ok());
        // spread violation: 0.9 >= 2*0.4
        assert!(VariableOrder::new(vec![0.4, 0.9]).is_err());
        assert!(VariableOrder::new(vec![1.0]).is_err());
        assert!(VariableOrder::new(vec![0.0]).is_err());
    }

    #[test]
    fn multiterm_invariants() {
        let mk = |alphas: &[f64]| {
            MultiTerm::new(
                alphas
                    .iter()
                    .map(|&a| MultiTermComponent {
                        alpha: a,
                        rho: vec![1.0; 4],
                    })
                    .collect(),
            )
        };
        assert!(mk(&[0.3, 0.7]).is_ok());
        assert!(mk(&[0.7, 0.3]).is_err());
        assert!(mk(&[0.3, 0.3]).is_err());
        assert!(mk(&[0.3, 1.2]).is_err());
    }

    #[test]
    fn distributed_window_condition() {
        assert!(DistributedOrder::new(MuWeight::Uniform, 0.5, 0.25, 64).is_ok());
        // a weight that dies inside the window is rejected
        let bad = MuWeight::Samples(vec![(0.0, 1.0), (0.45, 0.0), (0.5, 1.0), (1.0, 1.0)]);
        assert!(DistributedOrder::new(bad, 0.5, 0.2, 64).is_err());
        assert!(DistributedOrder::new(MuWeight::Uniform, 0.5, 0.6, 64).is_err());
    }

    #[test]
    fn kernel_eval_reference_values() {
        let k = const_alpha(3, 0.5);
        // t = 1: 1/Γ(1/2) = 1/sqrt(pi)
        assert_relative_eq!(
            k.kernel_time_eval(1.0, 0).unwrap(),
            1.0 / PI.sqrt(),
            max_relative = 1e-13
        );
        // single-term multiterm degenerates to the constant order
        let mt = KernelSpec::MultiTerm(
            MultiTerm::new(vec![MultiTermComponent {
                alpha: 0.5,
                rho: vec![1.0; 3],
            }])
            .unwrap(),
        );
        assert_relative_eq!(
            mt.kernel_time_eval(1.0, 2).unwrap(),
            1.0 / PI.sqrt(),
            max_relative = 1e-14
        );
        // golden value of ∫0^1 dα/Γ(1-α), frozen from an adaptive
        // quadrature oracle
        let d = KernelSpec::DistributedOrder(
            DistributedOrder::new(MuWeight::Uniform, 0.5, 0.25, 64).unwrap(),
        );
        assert_relative_eq!(
            d.kernel_time_eval(1.0, 0).unwrap(),
            0.541_235_734_328_670_6,
            max_relative = 1e-12
        );
        assert!(k.kernel_time_eval(0.0, 0).is_err());
        assert!(k.kernel_time_eval(1.0, 7).is_err());
    }

    #[test]
    fn laplace_symbol_reference_values() {
        let k = const_alpha(2, 0.5);
        let v = k.laplace_symbol(Complex64::new(4.0, 0.0), 0).unwrap();
        assert_relative_eq!(v.re, 2.0, max_relative = 1e-14);
        assert!(v.im.abs() < 1e-15);

        let mt = KernelSpec::MultiTerm(
            MultiTerm::new(vec![
                MultiTermComponent {
                    alpha: 0.3,
                    rho: vec![1.0; 2],
                },
                MultiTermComponent {
                    alpha: 0.7,
                    rho: vec![1.0; 2],
                },
            ])
            .unwrap(),
        );
        let v = mt.laplace_symbol(Complex64::new(1.0, 0.0), 1).unwrap();
        assert_relative_eq!(v.re, 2.0, max_relative = 1e-14);

        // ∫0^1 e^α dα = e - 1
        let d = KernelSpec::DistributedOrder(
            DistributedOrder::new(MuWeight::Uniform, 0.5, 0.25, 64).unwrap(),
        );
        let v = d
            .laplace_symbol(Complex64::new(std::f64::consts::E, 0.0), 0)
            .unwrap();
        assert_relative_eq!(v.re, std::f64::consts::E - 1.0, max_relative = 1e-13);

        // branch cut rejected
        assert!(k.laplace_symbol(Complex64::new(-1.0, 0.0), 0).is_err());
        assert!(k.laplace_symbol(Complex64::new(0.0, 0.0), 0).is_err());
    }

    #[test]
    fn symbol_conjugate_symmetry() {
        let kernels = [
            const_alpha(2, 0.62),
            KernelSpec::DistributedOrder(
                DistributedOrder::new(MuWeight::Bump, 0.5, 0.2, 64).unwrap(),
            ),
            KernelSpec::MultiTerm(
                MultiTerm::new(vec![
                    MultiTermComponent {
                        alpha: 0.4,
                        rho: vec![1.3; 2],
                    },
                    MultiTermComponent {
                        alpha: 0.8,
                        rho: vec![0.7; 2],
                    },
                ])
                .unwrap(),
            ),
        ];
        let samples = [
            Complex64::new(1.0, 2.0),
            Complex64::new(0.1, -7.0),
            Complex64::new(3.0, 0.4),
            Complex64::new(-2.0, 5.0),
        ];
        for k in &kernels {
            for &p in &samples {
                let a = k.laplace_symbol(p, 0).unwrap();
                let b = k.laplace_symbol(p.conj(), 0).unwrap();
                assert!(
                    (a.conj() - b).norm() <= 1e-14 * a.norm().max(1.0),
                    "conjugate symmetry broken at {p}"
                );
                if p.re > 0.0 {
                    assert!(a.re > 0.0);
                }
            }
        }
    }

    #[test]
    fn apply_ik_constant_and_linear_are_exact() {
        let k = const_alpha(1, 0.5);
        let grid = TimeGrid::graded(1.0, 64, 2.0).unwrap();
        let ones: Vec<Vec<f64>> = grid.points().iter().map(|_| vec![1.0]).collect();
        let out = k.apply_ik(&grid, &ones).unwrap();
        // I_K 1 = t^{1/2}/Γ(3/2); at t = 1: 2/sqrt(pi)
        assert_relative_eq!(
            out.last().unwrap()[0],
            2.0 / PI.sqrt(),
            max_relative = 1e-13
        );
        for (m, t) in grid.points().iter().enumerate().skip(1) {
            assert_relative_eq!(out[m][0], t.sqrt() / gamma(1.5), max_relative = 1e-12);
        }
        let lin: Vec<Vec<f64>> = grid.points().iter().map(|&t| vec![t]).collect();
        let out = k.apply_ik(&grid, &lin).unwrap();
        // I_K t = Γ(2)/Γ(5/2) t^{3/2}
        assert_relative_eq!(
            out.last().unwrap()[0],
            0.752_252_778_063_675_1,
            max_relative = 1e-12
        );
        let zeros: Vec<Vec<f64>> = grid.points().iter().map(|_| vec![0.0]).collect();
        let out = k.apply_ik(&grid, &zeros).unwrap();
        assert!(out.iter().all(|row| row[0] == 0.0));
    }

    #[test]
    fn apply_ik_quadratic_converges_second_order() {
        let k = const_alpha(1, 0.5);
        // I_K t^2 = Γ(3)/Γ(7/2) t^{5/2}
        let exact = 2.0 / gamma(3.5);
        let mut errs = Vec::new();
        for m in [16usize, 32, 64, 128] {
            let grid = TimeGrid::uniform(1.0, m).unwrap();
            let vals: Vec<Vec<f64>> = grid.points().iter().map(|&t| vec![t * t]).collect();
            let out = k.apply_ik(&grid, &vals).unwrap();
            errs.push((out.last().unwrap()[0] - exact).abs());
        }
        for pair in errs.windows(2) {
            let rate = (pair[0] / pair[1]).log2();
            assert!(rate > 1.7, "product integration rate dropped: {errs:?}");
        }
    }

    #[test]
    fn multiterm_single_term_matches_constant_order_everywhere() {
        let n = 5;
        let k_vo = const_alpha(n, 0.5);
        let k_mt = KernelSpec::MultiTerm(
            MultiTerm::new(vec![MultiTermComponent {
                alpha: 0.5,
                rho: vec![1.0; n],
            }])
            .unwrap(),
        );
        let grid = TimeGrid::graded(2.0, 32, 2.0).unwrap();
        let vals: Vec<Vec<f64>> = grid
            .points()
            .iter()
            .map(|&t| (0..n).map(|x| (t + x as f64).sin()).collect())
            .collect();
        let a = k_vo.apply_ik(&grid, &vals).unwrap();
        let b = k_mt.apply_ik(&grid, &vals).unwrap();
        for (ra, rb) in a.iter().zip(&b) {
            for (va, vb) in ra.iter().zip(rb) {
                assert_relative_eq!(va, vb, max_relative = 1e-13, epsilon = 1e-14);
            }
        }
        for t in [0.3, 1.0, 1.7] {
            for x in 0..n {
                assert_relative_eq!(
                    k_vo.kernel_time_eval(t, x).unwrap(),
                    k_mt.kernel_time_eval(t, x).unwrap(),
                    max_relative = 1e-14
                );
            }
        }
    }

    #[test]
    fn riemann_liouville_derivative_reference() {
        let k = const_alpha(1, 0.5);
        let grid = TimeGrid::uniform(2.0, 256).unwrap();
        let ones: Vec<Vec<f64>> = grid.points().iter().map(|_| vec![1.0]).collect();
        let d = k.riemann_liouville_derivative(&grid, &ones).unwrap();
        // D_t^K 1 = t^{-1/2}/Γ(1/2); check at the grid point nearest t = 1
        let i = grid
            .points()
            .iter()
            .position(|&t| (t - 1.0).abs() < 1e-12)
            .unwrap();
        assert_relative_eq!(d[i][0], 1.0 / PI.sqrt(), max_relative = 1e-4);

        let lin: Vec<Vec<f64>> = grid.points().iter().map(|&t| vec![t]).collect();
        let d = k.riemann_liouville_derivative(&grid, &lin).unwrap();
        // D_t^K t = 1.5 t^{1/2}/Γ(5/2); at t = 1: 2/sqrt(pi)
        assert_relative_eq!(d[i][0], 1.5 / gamma(2.5), max_relative = 1e-4);
        // one-sided value at the final point t = 2
        assert_relative_eq!(
            d.last().unwrap()[0],
            1.5 * 2.0f64.sqrt() / gamma(2.5),
            max_relative = 1e-3
        );

        let zeros: Vec<Vec<f64>> = grid.points().iter().map(|_| vec![0.0]).collect();
        let d = k.riemann_liouville_derivative(&grid, &zeros).unwrap();
        assert!(d.iter().flatten().all(|&v| v == 0.0));

        let short = TimeGrid::uniform(1.0, 1).unwrap();
        let two: Vec<Vec<f64>> = short.points().iter().map(|_| vec![1.0]).collect();
        assert!(k.riemann_liouville_derivative(&short, &two).is_err());
    }

    #[test]
    fn caputo_equals_rl_of_shifted_input() {
        // D_t^K[g - g(0)] vs I_K[g'] for smooth g(t) = t^2 + 3
        let k = const_alpha(1, 0.5);
        let grid = TimeGrid::uniform(1.0, 128).unwrap();
        let shifted: Vec<Vec<f64>> = grid.points().iter().map(|&t| vec![t * t]).collect();
        let dg: Vec<Vec<f64>> = grid.points().iter().map(|&t| vec![2.0 * t]).collect();
        let rl = k.riemann_liouville_derivative(&grid, &shifted).unwrap();
        let caputo = k.apply_ik(&grid, &dg).unwrap();
        for i in 32..grid.points().len() - 1 {
            assert_relative_eq!(rl[i][0], caputo[i][0], max_relative = 2e-3, epsilon = 1e-6);
        }
    }

    #[test]
    fn kernel_laplace_transform_converges_to_symbol() {
        let kernels = [
            const_alpha(1, 0.5),
            KernelSpec::DistributedOrder(
                DistributedOrder::new(MuWeight::Uniform, 0.5, 0.25, 64).unwrap(),
            ),
        ];
        let p = Complex64::new(1.0, 0.0);
        for k in &kernels {
            let mut errs = Vec::new();
            for t_max in [10.0, 20.0, 30.0] {
                let grid = TimeGrid::graded(t_max, 4096, 3.0).unwrap();
                let lt = k.laplace_transform_truncated(&grid, p, 0).unwrap();
                let khat = k.laplace_symbol(p, 0).unwrap() / p;
                errs.push((lt - khat).norm() / khat.norm());
            }
            assert!(
                *errs.last().unwrap() < 2e-4,
                "kernel transform mismatch: {errs:?}"
            );
            assert!(errs[0] >= errs[2] * 0.9, "tail did not shrink: {errs:?}");
        }
    }

    #[test]
    fn grid_validation() {
        assert!(TimeGrid::uniform(0.0, 4).is_err());
        assert!(TimeGrid::graded(1.0, 4, 0.5).is_err());
        assert!(TimeGrid::from_points(vec![0.0, 0.5, 0.5]).is_err());
        assert!(TimeGrid::from_points(vec![0.1, 0.5]).is_err());
        let g = TimeGrid::graded(1.0, 8, 2.0).unwrap();
        assert_eq!(g.points().len(), 9);
        assert_eq!(g.points()[0], 0.0);
        let merged = g.merged_with(&[0.33, 1.0]).unwrap();
        assert!(merged.points().contains(&0.33));
        assert_eq!(merged.points().iter().filter(|&&t| t == 1.0).count(), 1);
    }
}
