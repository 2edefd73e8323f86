//! Run configuration: a strict TOML format describing the spatial problem,
//! kernel family, time grid, data, contour settings, verification checks
//! and output layout. Unknown keys are rejected so a typo in a tolerance
//! key cannot silently weaken a verification claim.

use crate::contour::{ContourPolicy, DeltaMode};
use crate::elliptic::{assemble_operator, SpatialProblem};
use crate::kernels::{
    DistributedOrder, KernelSpec, MultiTerm, MultiTermComponent, MuWeight, TimeGrid,
    VariableOrder, DEFAULT_ALPHA_QUAD,
};
use crate::solvers::{SourceSpec, TimeProfile};
use crate::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemBlock,
    pub kernel: KernelBlock,
    pub time: TimeBlock,
    #[serde(default)]
    pub data: DataBlock,
    #[serde(default)]
    pub contour: ContourBlock,
    #[serde(default)]
    pub verify: VerifyBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemBlock {
    pub dim: usize,
    pub shape: Vec<usize>,
    #[serde(default = "default_one_field")]
    pub a: String,
    #[serde(default = "default_zero_field")]
    pub q: String,
    #[serde(default = "default_one_field")]
    pub rho: String,
}

fn default_one_field() -> String {
    "constant:1.0".into()
}

fn default_zero_field() -> String {
    "constant:0.0".into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelBlock {
    pub variant: String,
    /// variable-order: exponent field spec.
    pub alpha: Option<String>,
    /// distributed-order weight: "uniform", "bump" or "csv:FILE".
    pub mu: Option<String>,
    pub alpha0: Option<f64>,
    pub eps: Option<f64>,
    pub alpha_quad: Option<usize>,
    /// multiterm exponents, strictly increasing.
    pub exponents: Option<Vec<f64>>,
    /// multiterm weight fields, one spec per exponent.
    pub weights: Option<Vec<String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeBlock {
    pub horizon: f64,
    pub steps: usize,
    #[serde(default = "default_grading")]
    pub grading: f64,
}

fn default_grading() -> f64 {
    2.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataBlock {
    #[serde(default = "default_zero_str")]
    pub u0: String,
    #[serde(default = "default_zero_str")]
    pub source: String,
    #[serde(default)]
    pub growth_certificate: u32,
}

fn default_zero_str() -> String {
    "zero".into()
}

impl Default for DataBlock {
    fn default() -> Self {
        DataBlock {
            u0: "zero".into(),
            source: "zero".into(),
            growth_certificate: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContourBlock {
    /// Ray angle in units of π; must lie in (0.5, 1).
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default = "default_delta_mode")]
    pub delta_mode: String,
    #[serde(default = "default_n_arc")]
    pub n_arc: usize,
    #[serde(default = "default_n_ray")]
    pub n_ray: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_theta() -> f64 {
    0.75
}
fn default_delta_mode() -> String {
    "auto".into()
}
fn default_n_arc() -> usize {
    32
}
fn default_n_ray() -> usize {
    128
}
fn default_tol() -> f64 {
    1e-12
}

impl Default for ContourBlock {
    fn default() -> Self {
        ContourBlock {
            theta: default_theta(),
            delta_mode: default_delta_mode(),
            n_arc: default_n_arc(),
            n_ray: default_n_ray(),
            tol: default_tol(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyBlock {
    #[serde(default = "default_true")]
    pub enabled: bool,
    #[serde(default = "default_checks")]
    pub checks: Vec<String>,
    #[serde(default = "default_laplace_tol")]
    pub laplace_tol: f64,
    #[serde(default = "default_weak_tol")]
    pub weak_tol: f64,
    #[serde(default = "default_p_samples")]
    pub p_samples: Vec<String>,
    /// Eigenmode regression: mode index (1-based).
    pub eigenmode_mode: Option<usize>,
    #[serde(default = "default_eigenmode_tol")]
    pub eigenmode_tol: f64,
    /// "log:LO,HI,COUNT"; these times are merged into the run grid.
    pub eigenmode_times: Option<String>,
}

fn default_true() -> bool {
    true
}
fn default_checks() -> Vec<String> {
    vec!["contour".into(), "laplace".into(), "weak".into()]
}
fn default_laplace_tol() -> f64 {
    1e-4
}
fn default_weak_tol() -> f64 {
    1e-3
}
fn default_p_samples() -> Vec<String> {
    vec!["1".into(), "2".into(), "1+2i".into()]
}
fn default_eigenmode_tol() -> f64 {
    1e-5
}

impl Default for VerifyBlock {
    fn default() -> Self {
        VerifyBlock {
            enabled: true,
            checks: default_checks(),
            laplace_tol: default_laplace_tol(),
            weak_tol: default_weak_tol(),
            p_samples: default_p_samples(),
            eigenmode_mode: None,
            eigenmode_tol: default_eigenmode_tol(),
            eigenmode_times: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default = "default_out_dir")]
    pub dir: String,
    #[serde(default = "default_true")]
    pub solution: bool,
}

fn default_out_dir() -> String {
    "out".into()
}

impl Default for OutputBlock {
    fn default() -> Self {
        OutputBlock {
            dir: default_out_dir(),
            solution: true,
        }
    }
}

/// Everything needed to execute a run, with all file references resolved
/// and every invariant validated.
#[derive(Debug)]
pub struct ResolvedRun {
    pub problem: SpatialProblem,
    pub kernel: KernelSpec,
    pub grid: TimeGrid,
    pub u0: Vec<f64>,
    pub source: SourceSpec,
    pub policy: ContourPolicy,
    pub verify: VerifyBlock,
    pub p_samples: Vec<Complex64>,
    pub eigenmode_times: Vec<f64>,
    pub output: OutputBlock,
    /// Canonical TOML text of the parsed config (defaults filled).
    pub config_text: String,
}

/// Parse and fully validate a config file.
pub fn parse_config(path: &Path) -> Result<ResolvedRun> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    resolve_config_text(&text, base)
}

/// Parse a config from text, resolving file references against `base`.
pub fn resolve_config_text(text: &str, base: &Path) -> Result<ResolvedRun> {
    let config: RunConfig =
        toml::from_str(text).map_err(|e| Error::Config(format!("config parse error: {e}")))?;
    resolve(config, base)
}

fn resolve(config: RunConfig, base: &Path) -> Result<ResolvedRun> {
    let pb = &config.problem;
    if pb.dim != 1 && pb.dim != 2 {
        return Err(Error::Config(format!(
            "problem.dim must be 1 or 2, got {}",
            pb.dim
        )));
    }
    if pb.shape.len() != pb.dim {
        return Err(Error::Config(format!(
            "problem.shape needs {} entries for dim {}",
            pb.dim, pb.dim
        )));
    }
    let n: usize = pb.shape.iter().product();
    if n == 0 {
        return Err(Error::Config("problem.shape must be positive".into()));
    }

    let a = field_from_spec(&pb.a, n, pb.dim, &pb.shape, base, "problem.a")?;
    let q = field_from_spec(&pb.q, n, pb.dim, &pb.shape, base, "problem.q")?;
    let rho = field_from_spec(&pb.rho, n, pb.dim, &pb.shape, base, "problem.rho")?;
    let problem = assemble_operator(pb.dim, &pb.shape, &a, &q, &rho)?;

    let kernel = resolve_kernel(&config.kernel, n, pb.dim, &pb.shape, base)?;

    let tb = &config.time;
    if tb.horizon <= 0.0 {
        return Err(Error::Config(format!(
            "time.horizon must be positive, got {}",
            tb.horizon
        )));
    }
    if tb.grading < 1.0 {
        return Err(Error::Config(format!(
            "time.grading must be >= 1, got {}",
            tb.grading
        )));
    }
    let grid = TimeGrid::graded(tb.horizon, tb.steps, tb.grading)?;

    let cb = &config.contour;
    if !(cb.theta > 0.5 && cb.theta < 1.0) {
        return Err(Error::Config(format!(
            "contour.theta must lie in (0.5*pi, pi): got {} pi",
            cb.theta
        )));
    }
    let delta_mode = if cb.delta_mode == "auto" {
        DeltaMode::Auto
    } else if let Some(v) = cb.delta_mode.strip_prefix("fixed:") {
        let d: f64 = v
            .parse()
            .map_err(|_| Error::Config(format!("contour.delta_mode: bad value {v}")))?;
        DeltaMode::Fixed(d)
    } else {
        return Err(Error::Config(format!(
            "contour.delta_mode must be \"auto\" or \"fixed:VALUE\", got {}",
            cb.delta_mode
        )));
    };
    let policy = ContourPolicy {
        theta: cb.theta * std::f64::consts::PI,
        delta_mode,
        n_arc: cb.n_arc,
        n_ray: cb.n_ray,
        tol: cb.tol,
        half_symmetric: true,
    };
    policy.validate()?;

    // data
    let db = &config.data;
    let u0 = resolve_u0(&db.u0, &problem, base)?;
    let source = resolve_source(&db.source, db.growth_certificate, &problem, base)?;

    // verify block checks
    let vb = &config.verify;
    for c in &vb.checks {
        if !["contour", "eigenmode", "laplace", "weak"].contains(&c.as_str()) {
            return Err(Error::Config(format!(
                "verify.checks: unknown check \"{c}\""
            )));
        }
    }
    let p_samples = vb
        .p_samples
        .iter()
        .map(|s| parse_complex(s))
        .collect::<Result<Vec<_>>>()?;
    for p in &p_samples {
        if p.re <= 0.0 {
            return Err(Error::Config(format!(
                "verify.p_samples must satisfy Re p > 0, got {p}"
            )));
        }
    }
    let eigenmode_times = match &vb.eigenmode_times {
        None => Vec::new(),
        Some(spec) => parse_log_times(spec)?,
    };
    if vb.checks.iter().any(|c| c == "eigenmode") {
        if vb.eigenmode_mode.is_none() {
            return Err(Error::Config(
                "verify.eigenmode_mode required for the eigenmode check".into(),
            ));
        }
        match &kernel {
            KernelSpec::VariableOrder(v) if v.alpha_min == v.alpha_max => {}
            _ => {
                return Err(Error::Config(
                    "the eigenmode check requires a constant-order kernel".into(),
                ))
            }
        }
        if eigenmode_times.iter().any(|&t| t > tb.horizon) {
            return Err(Error::Config(
                "verify.eigenmode_times extend beyond the horizon".into(),
            ));
        }
    }

    let config_text = toml::to_string_pretty(&config)
        .map_err(|e| Error::Config(format!("config re-serialization failed: {e}")))?;
    Ok(ResolvedRun {
        problem,
        kernel,
        grid,
        u0,
        source,
        policy,
        verify: config.verify,
        p_samples,
        eigenmode_times,
        output: config.output,
        config_text,
    })
}

fn resolve_kernel(
    kb: &KernelBlock,
    n: usize,
    dim: usize,
    shape: &[usize],
    base: &Path,
) -> Result<KernelSpec> {
    match kb.variant.as_str() {
        "variable-order" => {
            let spec = kb.alpha.as_deref().ok_or_else(|| {
                Error::Config("kernel.alpha required for the variable-order family".into())
            })?;
            forbid(kb.mu.is_some(), "kernel.mu", "variable-order")?;
            forbid(kb.exponents.is_some(), "kernel.exponents", "variable-order")?;
            forbid(kb.weights.is_some(), "kernel.weights", "variable-order")?;
            let alpha = field_from_spec(spec, n, dim, shape, base, "kernel.alpha")?;
            Ok(KernelSpec::VariableOrder(VariableOrder::new(alpha)?))
        }
        "distributed-order" => {
            forbid(kb.alpha.is_some(), "kernel.alpha", "distributed-order")?;
            forbid(
                kb.exponents.is_some(),
                "kernel.exponents",
                "distributed-order",
            )?;
            forbid(kb.weights.is_some(), "kernel.weights", "distributed-order")?;
            let mu_spec = kb.mu.as_deref().unwrap_or("uniform");
            let mu = if mu_spec == "uniform" {
                MuWeight::Uniform
            } else if mu_spec == "bump" {
                MuWeight::Bump
            } else if let Some(file) = mu_spec.strip_prefix("csv:") {
                MuWeight::Samples(read_two_column_csv(&base.join(file))?)
            } else {
                return Err(Error::Config(format!(
                    "kernel.mu must be \"uniform\", \"bump\" or \"csv:FILE\", got {mu_spec}"
                )));
            };
            let alpha0 = kb
                .alpha0
                .ok_or_else(|| Error::Config("kernel.alpha0 required".into()))?;
            let eps = kb
                .eps
                .ok_or_else(|| Error::Config("kernel.eps required".into()))?;
            let quad = kb.alpha_quad.unwrap_or(DEFAULT_ALPHA_QUAD);
            Ok(KernelSpec::DistributedOrder(DistributedOrder::new(
                mu, alpha0, eps, quad,
            )?))
        }
        "multiterm" => {
            forbid(kb.alpha.is_some(), "kernel.alpha", "multiterm")?;
            forbid(kb.mu.is_some(), "kernel.mu", "multiterm")?;
            let exps = kb.exponents.as_ref().ok_or_else(|| {
                Error::Config("kernel.exponents required for the multiterm family".into())
            })?;
            let weights = kb.weights.as_ref().ok_or_else(|| {
                Error::Config("kernel.weights required for the multiterm family".into())
            })?;
            if exps.len() != weights.len() {
                return Err(Error::Config(format!(
                    "kernel.exponents has {} entries but kernel.weights has {}",
                    exps.len(),
                    weights.len()
                )));
            }
            if !exps.windows(2).all(|w| w[1] > w[0]) {
                return Err(Error::Config(
                    "kernel.exponents must be strictly increasing in (0,1)".into(),
                ));
            }
            let mut terms = Vec::new();
            for (j, (&alpha, wspec)) in exps.iter().zip(weights).enumerate() {
                let rho = field_from_spec(
                    wspec,
                    n,
                    dim,
                    shape,
                    base,
                    &format!("kernel.weights[{j}]"),
                )?;
                terms.push(MultiTermComponent { alpha, rho });
            }
            Ok(KernelSpec::MultiTerm(MultiTerm::new(terms)?))
        }
        other => Err(Error::Config(format!(
            "kernel.variant must be one of \"variable-order\", \"distributed-order\", \
             \"multiterm\"; got \"{other}\""
        ))),
    }
}

fn forbid(present: bool, key: &str, variant: &str) -> Result<()> {
    if present {
        Err(Error::Config(format!(
            "{key} is not a parameter of the {variant} family"
        )))
    } else {
        Ok(())
    }
}

/// Node x-coordinate of a flattened interior index (first axis).
fn x_coordinate(i: usize, dim: usize, shape: &[usize]) -> f64 {
    let nx = shape[0];
    let ix = if dim == 1 { i } else { i % nx };
    (ix + 1) as f64 / (nx as f64 + 1.0)
}

/// Field specs: "constant:V", "step:V1,V2,BREAK" (split on the x axis),
/// "csv:FILE" (node_index,value rows).
fn field_from_spec(
    spec: &str,
    n: usize,
    dim: usize,
    shape: &[usize],
    base: &Path,
    key: &str,
) -> Result<Vec<f64>> {
    if let Some(v) = spec.strip_prefix("constant:") {
        let value: f64 = v
            .parse()
            .map_err(|_| Error::Config(format!("{key}: bad constant \"{v}\"")))?;
        return Ok(vec![value; n]);
    }
    if let Some(rest) = spec.strip_prefix("step:") {
        let parts: Vec<&str> = rest.split(',').collect();
        if parts.len() != 3 {
            return Err(Error::Config(format!(
                "{key}: step spec needs VALUE1,VALUE2,BREAKPOINT"
            )));
        }
        let v1: f64 = parts[0]
            .parse()
            .map_err(|_| Error::Config(format!("{key}: bad step value \"{}\"", parts[0])))?;
        let v2: f64 = parts[1]
            .parse()
            .map_err(|_| Error::Config(format!("{key}: bad step value \"{}\"", parts[1])))?;
        let brk: f64 = parts[2]
            .parse()
            .map_err(|_| Error::Config(format!("{key}: bad breakpoint \"{}\"", parts[2])))?;
        return Ok((0..n)
            .map(|i| {
                if x_coordinate(i, dim, shape) < brk {
                    v1
                } else {
                    v2
                }
            })
            .collect());
    }
    if let Some(file) = spec.strip_prefix("csv:") {
        let rows = read_two_column_csv(&base.join(file))?;
        if rows.len() != n {
            return Err(Error::Config(format!(
                "{key}: csv has {} rows, expected {n}",
                rows.len()
            )));
        }
        let mut field = vec![0.0; n];
        for (idx, val) in rows {
            let i = idx as usize;
            if idx < 0.0 || i >= n || idx.fract() != 0.0 {
                return Err(Error::Config(format!("{key}: bad node index {idx}")));
            }
            field[i] = val;
        }
        return Ok(field);
    }
    Err(Error::Config(format!(
        "{key}: field spec must be \"constant:V\", \"step:V1,V2,BREAK\" or \"csv:FILE\"; \
         got \"{spec}\""
    )))
}

fn resolve_u0(spec: &str, problem: &SpatialProblem, base: &Path) -> Result<Vec<f64>> {
    let n = problem.n_interior();
    if spec == "zero" {
        return Ok(vec![0.0; n]);
    }
    if let Some(v) = spec.strip_prefix("eigenmode:") {
        let mode: usize = v
            .parse()
            .map_err(|_| Error::Config(format!("data.u0: bad eigenmode index \"{v}\"")))?;
        if mode == 0 {
            return Err(Error::Config("data.u0: eigenmode indices are 1-based".into()));
        }
        let basis = problem.eigensolve(mode)?;
        return Ok(basis.eigenvectors[mode - 1].clone());
    }
    field_from_spec(
        spec,
        n,
        problem.dim,
        &problem.shape,
        base,
        "data.u0",
    )
}

fn resolve_source(
    spec: &str,
    growth: u32,
    problem: &SpatialProblem,
    base: &Path,
) -> Result<SourceSpec> {
    if spec == "zero" {
        return Ok(SourceSpec::zero());
    }
    if let Some(rest) = spec.strip_prefix("separable:") {
        // TIME;SPACE with TIME = constant:V | poly:c0,c1,... and SPACE a
        // field spec or eigenmode
        let (tspec, xspec) = rest.split_once(';').ok_or_else(|| {
            Error::Config("data.source: separable spec needs TIME;SPACE".into())
        })?;
        let time = if let Some(v) = tspec.strip_prefix("constant:") {
            TimeProfile::Constant(v.parse().map_err(|_| {
                Error::Config(format!("data.source: bad constant \"{v}\""))
            })?)
        } else if let Some(v) = tspec.strip_prefix("poly:") {
            let coeffs = v
                .split(',')
                .map(|c| {
                    c.parse::<f64>().map_err(|_| {
                        Error::Config(format!("data.source: bad coefficient \"{c}\""))
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            TimeProfile::Poly(coeffs)
        } else {
            return Err(Error::Config(format!(
                "data.source: time profile must be constant:V or poly:..., got \"{tspec}\""
            )));
        };
        let space = resolve_u0(xspec, problem, base)?;
        return Ok(SourceSpec::separable(time, space, growth));
    }
    Err(Error::Config(format!(
        "data.source must be \"zero\" or \"separable:TIME;SPACE\", got \"{spec}\""
    )))
}

fn read_two_column_csv(path: &Path) -> Result<Vec<(f64, f64)>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (a, b) = line.split_once(',').ok_or_else(|| {
            Error::Config(format!("{}:{}: expected two columns", path.display(), ln + 1))
        })?;
        let a: f64 = a.trim().parse().map_err(|_| {
            Error::Config(format!("{}:{}: bad number \"{a}\"", path.display(), ln + 1))
        })?;
        let b: f64 = b.trim().parse().map_err(|_| {
            Error::Config(format!("{}:{}: bad number \"{b}\"", path.display(), ln + 1))
        })?;
        rows.push((a, b));
    }
    Ok(rows)
}

/// Complex literals of the form "a", "a+bi", "a-bi".
pub fn parse_complex(s: &str) -> Result<Complex64> {
    let s = s.trim().replace(' ', "");
    if let Some(core) = s.strip_suffix('i') {
        // find the split sign that is not leading and not part of an exponent
        let bytes = core.as_bytes();
        for k in (1..bytes.len()).rev() {
            let c = bytes[k] as char;
            if (c == '+' || c == '-') && !matches!(bytes[k - 1] as char, 'e' | 'E') {
                let re: f64 = core[..k]
                    .parse()
                    .map_err(|_| Error::Config(format!("bad complex literal \"{s}\"")))?;
                let imag_txt = &core[k..];
                let im: f64 = if imag_txt == "+" {
                    1.0
                } else if imag_txt == "-" {
                    -1.0
                } else {
                    imag_txt
                        .parse()
                        .map_err(|_| Error::Config(format!("bad complex literal \"{s}\"")))?
                };
                return Ok(Complex64::new(re, im));
            }
        }
        // purely imaginary
        let im: f64 = if core.is_empty() {
            1.0
        } else {
            core.parse()
                .map_err(|_| Error::Config(format!("bad complex literal \"{s}\"")))?
        };
        return Ok(Complex64::new(0.0, im));
    }
    let re: f64 = s
        .parse()
        .map_err(|_| Error::Config(format!("bad complex literal \"{s}\"")))?;
    Ok(Complex64::new(re, 0.0))
}

/// "log:LO,HI,COUNT" into log-spaced sample times.
fn parse_log_times(spec: &str) -> Result<Vec<f64>> {
    let rest = spec
        .strip_prefix("log:")
        .ok_or_else(|| Error::Config(format!("eigenmode_times must be \"log:LO,HI,N\", got {spec}")))?;
    let parts: Vec<&str> = rest.split(',').collect();
    if parts.len() != 3 {
        return Err(Error::Config("eigenmode_times needs LO,HI,N".into()));
    }
    let lo: f64 = parts[0]
        .parse()
        .map_err(|_| Error::Config(format!("bad time \"{}\"", parts[0])))?;
    let hi: f64 = parts[1]
        .parse()
        .map_err(|_| Error::Config(format!("bad time \"{}\"", parts[1])))?;
    let count: usize = parts[2]
        .parse()
        .map_err(|_| Error::Config(format!("bad count \"{}\"", parts[2])))?;
    if lo <= 0.0 || hi <= lo || count < 2 {
        return Err(Error::Config(
            "eigenmode_times needs 0 < LO < HI and N >= 2".into(),
        ));
    }
    Ok((0..count)
        .map(|i| lo * (hi / lo).powf(i as f64 / (count - 1) as f64))
        .collect())
}

/// Directory all relative paths in `manifest` resolve against.
pub fn manifest_base(path: &Path) -> PathBuf {
    path.parent().unwrap_or_else(|| Path::new(".")).to_path_buf()
}
