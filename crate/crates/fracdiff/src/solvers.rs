//! Solution operators for the three kernel families and the Duhamel
//! formula, realized as keyhole-contour quadratures of complex-shifted
//! resolvent solves.
//!
//! The homogeneous part applies (A + ρΦ(p))^{-1} ρ Φ(p)/p to the initial
//! datum; the source part folds the time convolution into the same contour
//! by the truncated transform C(p, t) = ∫0^t e^{p(t-τ)} F(τ) dτ, which has
//! closed-form exponential moments for piecewise-linear sources. That keeps
//! the τ-integration exact and leaves the contour quadrature as the only
//! error source.

use crate::contour::ContourPolicy;
use crate::elliptic::SpatialProblem;
use crate::kernels::{KernelSpec, TimeGrid};
use crate::{Error, Result};
use num_complex::Complex64;
use rayon::prelude::*;

/// Metadata a trajectory carries about how it was produced.
#[derive(Debug, Clone)]
pub struct TrajectoryMeta {
    pub kernel_family: String,
    pub contour: ContourPolicy,
    pub notes: Vec<String>,
}

/// Solution samples u(t_m, x) over the interior nodes; values[0] is the
/// initial datum.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: TimeGrid,
    pub values: Vec<Vec<f64>>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn new(grid: TimeGrid, values: Vec<Vec<f64>>, meta: TrajectoryMeta) -> Result<Self> {
        if values.len() != grid.points().len() {
            return Err(Error::Shape(format!(
                "{} value rows for {} grid points",
                values.len(),
                grid.points().len()
            )));
        }
        let n = values.first().map(|r| r.len()).unwrap_or(0);
        for (m, row) in values.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Shape(format!("ragged row at time index {m}")));
            }
            if !row.iter().all(|v| v.is_finite()) {
                return Err(Error::Validation(format!(
                    "non-finite value at time index {m}"
                )));
            }
        }
        Ok(Trajectory { grid, values, meta })
    }

    pub fn n_nodes(&self) -> usize {
        self.values.first().map(|r| r.len()).unwrap_or(0)
    }

    /// Row index of a given time, if it is a grid point.
    pub fn index_of_time(&self, t: f64) -> Option<usize> {
        self.grid
            .points()
            .iter()
            .position(|&g| (g - t).abs() <= 1e-12 * t.abs().max(1e-30))
    }
}

/// Time profile of a separable source g(t) w(x).
#[derive(Debug, Clone, PartialEq)]
pub enum TimeProfile {
    Constant(f64),
    /// Polynomial c0 + c1 t + c2 t^2 + ...
    Poly(Vec<f64>),
}

impl TimeProfile {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            TimeProfile::Constant(c) => *c,
            TimeProfile::Poly(c) => c.iter().rev().fold(0.0, |acc, ck| acc * t + ck),
        }
    }
}

#[derive(Debug, Clone)]
pub enum SourceKind {
    Zero,
    Separable { time: TimeProfile, space: Vec<f64> },
    Sampled { grid: TimeGrid, values: Vec<Vec<f64>> },
}

/// Source term with its declared growth certificate: the integer J for
/// which (1+t)^{-J} F is integrable. Membership is declared, not inferred.
#[derive(Debug, Clone)]
pub struct SourceSpec {
    pub kind: SourceKind,
    pub growth_certificate: Option<u32>,
}

impl SourceSpec {
    pub fn zero() -> Self {
        SourceSpec {
            kind: SourceKind::Zero,
            growth_certificate: Some(0),
        }
    }

    pub fn separable(time: TimeProfile, space: Vec<f64>, j: u32) -> Self {
        SourceSpec {
            kind: SourceKind::Separable { time, space },
            growth_certificate: Some(j),
        }
    }

    pub fn is_zero(&self) -> bool {
        match &self.kind {
            SourceKind::Zero => true,
            SourceKind::Separable { time, space } => {
                space.iter().all(|&v| v == 0.0)
                    || matches!(time, TimeProfile::Constant(c) if *c == 0.0)
            }
            SourceKind::Sampled { values, .. } => {
                values.iter().all(|row| row.iter().all(|&v| v == 0.0))
            }
        }
    }

    /// Sample the source on the run grid, time-major. Sampled sources must
    /// already live on that grid.
    pub fn sample_on(&self, grid: &TimeGrid, n_nodes: usize) -> Result<Option<Vec<Vec<f64>>>> {
        match &self.kind {
            SourceKind::Zero => Ok(None),
            SourceKind::Separable { time, space } => {
                if space.len() != n_nodes {
                    return Err(Error::Shape(format!(
                        "source space profile has {} nodes, expected {n_nodes}",
                        space.len()
                    )));
                }
                Ok(Some(
                    grid.points()
                        .iter()
                        .map(|&t| {
                            let g = time.eval(t);
                            space.iter().map(|w| g * w).collect()
                        })
                        .collect(),
                ))
            }
            SourceKind::Sampled { grid: sg, values } => {
                let same = sg.points().len() == grid.points().len()
                    && sg
                        .points()
                        .iter()
                        .zip(grid.points())
                        .all(|(a, b)| (a - b).abs() <= 1e-12 * b.abs().max(1e-30));
                if !same {
                    return Err(Error::Validation(
                        "sampled source must be defined on the run's time grid".into(),
                    ));
                }
                if values.iter().any(|r| r.len() != n_nodes) {
                    return Err(Error::Shape("sampled source node count mismatch".into()));
                }
                Ok(Some(values.clone()))
            }
        }
    }
}

/// Gate threshold for the contour self-test run before any solve.
fn unit_gate(policy: &ContourPolicy, t: f64) -> Result<()> {
    let dev = crate::contour::unit_check(policy, &[t])?;
    let gate = (100.0 * policy.tol).max(1e-10);
    if dev > gate {
        return Err(Error::Config(format!(
            "contour unit check failed at t = {t}: deviation {dev:.3e} > {gate:.3e}"
        )));
    }
    Ok(())
}

/// ∫_{ta}^{tb} e^{p(t-s)} ds and ∫_{ta}^{tb} (s-ta) e^{p(t-s)} ds.
fn exp_moments(p: Complex64, t: f64, ta: f64, tb: f64) -> (Complex64, Complex64) {
    let h = tb - ta;
    let za = p * (t - ta);
    let zb = p * (t - tb);
    if (p * h).norm() < 1e-8 {
        // nearly constant exponential across the interval
        let mid = (p * (t - 0.5 * (ta + tb))).exp();
        (mid * h, mid * h * h * 0.5)
    } else {
        let ea = za.exp();
        let eb = zb.exp();
        let i0 = (ea - eb) / p;
        let i1 = (i0 - h * eb) / p;
        (i0, i1)
    }
}

/// Regularized source transform
/// C(p, t_m) = ∫0^{t_m} e^{p(t_m-τ)} F(τ) dτ + F(t_m)/p + F'(t_m^-)/p²
/// for the piecewise-linear source samples.
///
/// The two added terms cancel the algebraically decaying boundary parts of
/// the convolution at τ = t_m; their own contour integrals vanish exactly
/// (the resolvent is holomorphic off the cut and decays, so the closed
/// contour picks up nothing), which restores exponential decay of the
/// truncated integrand.
fn source_transform(
    p: Complex64,
    t_index: usize,
    pts: &[f64],
    samples: &[Vec<f64>],
    out: &mut [Complex64],
) {
    for v in out.iter_mut() {
        *v = Complex64::new(0.0, 0.0);
    }
    let t = pts[t_index];
    for j in 0..t_index {
        let (ta, tb) = (pts[j], pts[j + 1]);
        let h = tb - ta;
        let (i0, i1) = exp_moments(p, t, ta, tb);
        let (fa, fb) = (&samples[j], &samples[j + 1]);
        for (x, o) in out.iter_mut().enumerate() {
            *o += fa[x] * i0 + (fb[x] - fa[x]) / h * i1;
        }
    }
    let h_last = pts[t_index] - pts[t_index - 1];
    let pinv = p.finv();
    let pinv2 = pinv * pinv;
    let (f_end, f_prev) = (&samples[t_index], &samples[t_index - 1]);
    for (x, o) in out.iter_mut().enumerate() {
        let slope = (f_end[x] - f_prev[x]) / h_last;
        *o += f_end[x] * pinv + slope * pinv2;
    }
}

/// (1/2πi) ∮ e^{tp} (A + ρΦ(p))^{-1} ρ (Φ(p)/p) u0 dp.
pub fn apply_s0(
    prob: &SpatialProblem,
    kernel: &KernelSpec,
    policy: &ContourPolicy,
    t: f64,
    u0: &[f64],
) -> Result<Vec<f64>> {
    solve_at_time(prob, kernel, policy, t, Some(u0), None, &[])
}

/// (1/2πi) ∮ e^{tp} (A + ρΦ(p))^{-1} f dp.
pub fn apply_s1(
    prob: &SpatialProblem,
    kernel: &KernelSpec,
    policy: &ContourPolicy,
    t: f64,
    f: &[f64],
) -> Result<Vec<f64>> {
    solve_at_time(prob, kernel, policy, t, None, Some(f), &[])
}

/// Shared resolvent-path evaluation at one time: initial datum and/or
/// constant vector and/or sampled source through the same factorizations.
fn solve_at_time(
    prob: &SpatialProblem,
    kernel: &KernelSpec,
    policy: &ContourPolicy,
    t: f64,
    u0: Option<&[f64]>,
    s1_vector: Option<&[f64]>,
    source_ctx: &[(usize, &[f64], &[Vec<f64>])],
) -> Result<Vec<f64>> {
    let n = prob.n_interior();
    if let Some(u0) = u0 {
        if u0.len() != n {
            return Err(Error::Shape(format!(
                "initial datum has {} nodes, problem has {n}",
                u0.len()
            )));
        }
    }
    if let Some(f) = s1_vector {
        if f.len() != n {
            return Err(Error::Shape(format!(
                "vector has {} nodes, problem has {n}",
                f.len()
            )));
        }
    }
    unit_gate(policy, t)?;
    let spec = policy.spec_for(t, 0.0)?;
    let mut csrc = vec![Complex64::new(0.0, 0.0); n];
    let out = spec.integrate(t, n, |p| {
        let phi = kernel.laplace_symbol_field(p, n)?;
        let shift: Vec<Complex64> = phi.iter().zip(&prob.rho).map(|(f, r)| f * r).collect();
        let mut rhs = vec![Complex64::new(0.0, 0.0); n];
        if let Some(u0) = u0 {
            for x in 0..n {
                rhs[x] += shift[x] / p * u0[x];
            }
        }
        if let Some(f) = s1_vector {
            for x in 0..n {
                rhs[x] += f[x];
            }
        }
        for (t_index, pts, samples) in source_ctx {
            source_transform(p, *t_index, pts, samples, &mut csrc);
            // the contour applies e^{tp} outside; C already carries it, so
            // divide it back out here
            let scale = (-t * p).exp();
            for x in 0..n {
                rhs[x] += csrc[x] * scale;
            }
        }
        prob.shifted_solve(&shift, &rhs)
    })?;
    Ok(out.into_iter().map(|z| z.re).collect())
}

/// Duhamel solution u(t) = S0(t) u0 + ∫0^t S1(t-τ) F(τ) dτ on the given
/// grid. The convolution is folded into the contour integral with exact
/// exponential moments of the piecewise-linear source.
pub fn duhamel_solve(
    prob: &SpatialProblem,
    kernel: &KernelSpec,
    policy: &ContourPolicy,
    u0: &[f64],
    source: &SourceSpec,
    grid: &TimeGrid,
) -> Result<Trajectory> {
    let n = prob.n_interior();
    if u0.len() != n {
        return Err(Error::Shape(format!(
            "initial datum has {} nodes, problem has {n}",
            u0.len()
        )));
    }
    if !source.is_zero() && source.growth_certificate.is_none() {
        return Err(Error::Validation(
            "nonzero source requires a declared growth certificate".into(),
        ));
    }
    let samples = source.sample_on(grid, n)?;
    unit_gate(policy, grid.t_end())?;
    let pts = grid.points();
    let u0_nonzero = u0.iter().any(|&v| v != 0.0);

    let rows: Result<Vec<Vec<f64>>> = (1..pts.len())
        .into_par_iter()
        .map(|m| {
            let t = pts[m];
            let spec = policy.spec_for(t, 0.0)?;
            let mut csrc = vec![Complex64::new(0.0, 0.0); n];
            let out = spec.integrate(t, n, |p| {
                let phi = kernel.laplace_symbol_field(p, n)?;
                let shift: Vec<Complex64> =
                    phi.iter().zip(&prob.rho).map(|(f, r)| f * r).collect();
                let mut rhs = vec![Complex64::new(0.0, 0.0); n];
                if u0_nonzero {
                    for x in 0..n {
                        rhs[x] += shift[x] / p * u0[x];
                    }
                }
                if let Some(samples) = &samples {
                    source_transform(p, m, pts, samples, &mut csrc);
                    let scale = (-t * p).exp();
                    for x in 0..n {
                        rhs[x] += csrc[x] * scale;
                    }
                }
                prob.shifted_solve(&shift, &rhs)
            })?;
            Ok(out.into_iter().map(|z| z.re).collect())
        })
        .collect();
    let mut values = vec![u0.to_vec()];
    values.extend(rows?);
    Trajectory::new(
        grid.clone(),
        values,
        TrajectoryMeta {
            kernel_family: kernel.family_name().to_string(),
            contour: policy.clone(),
            notes: Vec::new(),
        },
    )
}

/// Eigen-expansion path for the distributed-order family: per-mode scalar
/// contour integrals with ρ-weighted coefficients.
pub fn spectral_solve_distributed(
    prob: &SpatialProblem,
    kernel: &KernelSpec,
    policy: &ContourPolicy,
    u0: &[f64],
    source: &SourceSpec,
    grid: &TimeGrid,
    k_modes: usize,
) -> Result<Trajectory> {
    let dist = match kernel {
        KernelSpec::DistributedOrder(d) => d,
        _ => {
            return Err(Error::Validation(
                "spectral path applies to the distributed-order family".into(),
            ))
        }
    };
    let n = prob.n_interior();
    if u0.len() != n {
        return Err(Error::Shape(format!(
            "initial datum has {} nodes, problem has {n}",
            u0.len()
        )));
    }
    if !source.is_zero() && source.growth_certificate.is_none() {
        return Err(Error::Validation(
            "nonzero source requires a declared growth certificate".into(),
        ));
    }
    unit_gate(policy, grid.t_end())?;
    let basis = prob.eigensolve(k_modes)?;
    let samples = source.sample_on(grid, n)?;
    let pts = grid.points();

    // modal data: c0_k = <u0, phi_k>_rho, f_k(t) = <F(t), phi_k>_L2
    let c0: Vec<f64> = basis
        .eigenvectors
        .iter()
        .map(|phi| prob.rho_dot(u0, phi))
        .collect();
    let modal_src: Option<Vec<Vec<f64>>> = samples.as_ref().map(|rows| {
        rows.iter()
            .map(|row| {
                basis
                    .eigenvectors
                    .iter()
                    .map(|phi| prob.l2_dot(row, phi))
                    .collect()
            })
            .collect()
    });

    // modal tail energy of the initial datum, reported when significant
    let u0_energy = prob.rho_dot(u0, u0);
    let captured: f64 = c0.iter().map(|c| c * c).sum();
    let tail = (u0_energy - captured).max(0.0);
    let mut notes = Vec::new();
    if u0_energy > 0.0 && tail > 1e-10 * u0_energy {
        notes.push(format!(
            "modal tail energy {tail:.3e} of {u0_energy:.3e} not captured by {k_modes} modes"
        ));
    }

    let rows: Result<Vec<Vec<f64>>> = (1..pts.len())
        .into_par_iter()
        .map(|m| {
            let t = pts[m];
            let spec = policy.spec_for(t, 0.0)?;
            let amps = spec.integrate(t, k_modes, |p| {
                let theta = dist.theta_symbol(p);
                let mut out = vec![Complex64::new(0.0, 0.0); k_modes];
                for (k, amp) in out.iter_mut().enumerate() {
                    let denom = theta + basis.eigenvalues[k];
                    let mut v = theta / (p * denom) * c0[k];
                    if let Some(ms) = &modal_src {
                        // scalar source transform for mode k, with the same
                        // endpoint regularization as the resolvent path
                        let mut c = Complex64::new(0.0, 0.0);
                        for j in 0..m {
                            let (ta, tb) = (pts[j], pts[j + 1]);
                            let h = tb - ta;
                            let (i0, i1) = exp_moments(p, t, ta, tb);
                            c += ms[j][k] * i0 + (ms[j + 1][k] - ms[j][k]) / h * i1;
                        }
                        let h_last = pts[m] - pts[m - 1];
                        let slope = (ms[m][k] - ms[m - 1][k]) / h_last;
                        c += ms[m][k] / p + slope / (p * p);
                        v += c * (-t * p).exp() / denom;
                    }
                    *amp = v;
                }
                Ok(out)
            })?;
            let mut row = vec![0.0; n];
            for (k, amp) in amps.iter().enumerate() {
                for (x, r) in row.iter_mut().enumerate() {
                    *r += amp.re * basis.eigenvectors[k][x];
                }
            }
            Ok(row)
        })
        .collect();
    let mut values = vec![u0.to_vec()];
    values.extend(rows?);
    Trajectory::new(
        grid.clone(),
        values,
        TrajectoryMeta {
            kernel_family: kernel.family_name().to_string(),
            contour: policy.clone(),
            notes,
        },
    )
}

/// Finite-horizon problem: extend the source by zero beyond T and restrict
/// the global solution to (0, T). The result is independent of T because
/// the formula only sees the source on [0, t].
pub fn finite_time_solve(
    prob: &SpatialProblem,
    kernel: &KernelSpec,
    policy: &ContourPolicy,
    u0: &[f64],
    source: &SourceSpec,
    t_final: f64,
    grid: &TimeGrid,
) -> Result<Trajectory> {
    if grid.t_end() > t_final * (1.0 + 1e-12) {
        return Err(Error::Validation(format!(
            "grid extends to {} beyond the final time {t_final}",
            grid.t_end()
        )));
    }
    duhamel_solve(prob, kernel, policy, u0, source, grid)
}
