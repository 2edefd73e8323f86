//! Run orchestration: solve, verify, and artifact emission.
//!
//! A run writes `solution.csv` (t, node_index, value), `report.csv`
//! (check, sample, measured, tolerance, pass) and `manifest.toml`; the
//! manifest embeds the fully resolved configuration, so it alone suffices
//! to re-execute the run.

use crate::config::ResolvedRun;
use crate::contour::{unit_check, ContourPolicy};
use crate::kernels::{KernelSpec, TimeGrid};
use crate::solvers::{duhamel_solve, Trajectory, TrajectoryMeta};
use crate::verify::residual::{laplace_residual, weak_residual, LaplaceProbe, WeakResidualConfig};
use crate::verify::{digest_bytes, ml, VerificationReport};
use crate::{Error, Result};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub struct RunArtifacts {
    pub all_passed: bool,
    pub reports: Vec<VerificationReport>,
    pub trajectory: Trajectory,
    pub out_dir: PathBuf,
}

/// Full pipeline: solve, verify (when enabled), write artifacts.
pub fn execute_solve(run: &ResolvedRun, out_dir: &Path) -> Result<RunArtifacts> {
    std::fs::create_dir_all(out_dir)?;
    let grid = if run.eigenmode_times.is_empty() {
        run.grid.clone()
    } else {
        run.grid.merged_with(&run.eigenmode_times)?
    };
    let traj = duhamel_solve(
        &run.problem,
        &run.kernel,
        &run.policy,
        &run.u0,
        &run.source,
        &grid,
    )?;

    let mut solution_digest = String::new();
    if run.output.solution {
        let csv = solution_csv(&traj);
        solution_digest = digest_bytes(csv.as_bytes());
        std::fs::write(out_dir.join("solution.csv"), csv)?;
    }

    let reports = if run.verify.enabled {
        run_checks(run, &traj)?
    } else {
        Vec::new()
    };
    let all_passed = reports.iter().all(|r| r.pass());

    write_manifest(run, out_dir, &solution_digest, all_passed)?;
    if run.verify.enabled {
        std::fs::write(out_dir.join("report.csv"), report_csv(&reports))?;
    }
    print_summary(&reports, &traj);

    Ok(RunArtifacts {
        all_passed,
        reports,
        trajectory: traj,
        out_dir: out_dir.to_path_buf(),
    })
}

/// Verify an existing solution file against a config.
pub fn execute_verify(
    run: &ResolvedRun,
    solution_path: &Path,
    out_dir: &Path,
) -> Result<RunArtifacts> {
    std::fs::create_dir_all(out_dir)?;
    let traj = read_solution_csv(solution_path, &run.policy, &run.kernel)?;
    if traj.n_nodes() != run.problem.n_interior() {
        return Err(Error::Shape(format!(
            "solution has {} nodes but the configured problem has {}",
            traj.n_nodes(),
            run.problem.n_interior()
        )));
    }
    let mut run_for_checks = RunView {
        run,
        u0_override: Some(traj.values[0].clone()),
    };
    let reports = run_for_checks.checks(&traj)?;
    let all_passed = reports.iter().all(|r| r.pass());
    std::fs::write(out_dir.join("report.csv"), report_csv(&reports))?;
    write_manifest(run, out_dir, "", all_passed)?;
    print_summary(&reports, &traj);
    Ok(RunArtifacts {
        all_passed,
        reports,
        trajectory: traj,
        out_dir: out_dir.to_path_buf(),
    })
}

/// Contour identity, oracle self-consistency and the vanishing of the
/// algebraic Duhamel part on a shipped two-term problem; the gate run by
/// `selftest`.
pub fn selftest() -> Result<bool> {
    let mut ok = true;

    // contour identity at default node counts
    let policy = ContourPolicy::default();
    let dev = unit_check(&policy, &[0.1, 1.0, 10.0])?;
    let pass = dev <= 1e-10;
    println!(
        "contour-identity: {} (max deviation {dev:.3e}, tol 1.0e-10)",
        verdict(pass)
    );
    ok &= pass;

    // Mittag-Leffler route consistency on the overlap region
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for &alpha in &[0.7f64, 0.75, 0.8, 0.9] {
        for &beta in &[1.0f64, alpha] {
            for &lam in &[3.0f64, 4.0, 5.0] {
                if let Some(s) = ml::series(alpha, beta, -lam) {
                    let c = ml::cut_integral(alpha, beta, lam);
                    worst = worst.max((s - c).abs() / s.abs().max(1e-300));
                    checked += 1;
                }
            }
        }
    }
    let pass = checked >= 12 && worst <= 1e-10;
    println!(
        "mittag-leffler-consistency: {} ({checked} pairs, worst {worst:.3e}, tol 1.0e-10)",
        verdict(pass)
    );
    ok &= pass;

    // erfc identity spot check
    let ml_half = ml::mittag_leffler(0.5, 1.0, -1.0)?;
    let reference = std::f64::consts::E * crate::special::erfc(1.0);
    let dev = (ml_half - reference).abs() / reference;
    let pass = dev <= 1e-11;
    println!(
        "half-order-identity: {} (deviation {dev:.3e}, tol 1.0e-11)",
        verdict(pass)
    );
    ok &= pass;

    // algebraic Duhamel part on a shipped two-term problem
    let n = 63;
    let prob = crate::elliptic::assemble_operator(
        1,
        &[n],
        &vec![1.0; n],
        &vec![0.0; n],
        &vec![1.0; n],
    )?;
    let kernel = KernelSpec::MultiTerm(crate::kernels::MultiTerm::new(vec![
        crate::kernels::MultiTermComponent {
            alpha: 0.3,
            rho: vec![1.0; n],
        },
        crate::kernels::MultiTermComponent {
            alpha: 0.7,
            rho: vec![1.0; n],
        },
    ])?);
    let vectors = b_sample_vectors(&prob, 5)?;
    let radii: Vec<f64> = (1..=6).map(|k| 10f64.powi(2 * k)).collect();
    let report = crate::verify::probes::b_operator_norm(&prob, &kernel, &vectors, &radii)?;
    let pass = report.pass();
    let final_worst = report
        .rows
        .iter()
        .filter(|r| r.label.contains("@R=1.0e12"))
        .map(|r| r.measured)
        .fold(0.0f64, f64::max);
    println!(
        "algebraic-part-vanishes: {} (worst final norm {final_worst:.3e}, tol 1.0e-8)",
        verdict(pass)
    );
    ok &= pass;

    println!("selftest: {}", verdict(ok));
    Ok(ok)
}

/// Unit-norm probe vectors for the algebraic-part check: leading modes,
/// a localized bump and a mixed profile.
pub fn b_sample_vectors(
    prob: &crate::elliptic::SpatialProblem,
    count: usize,
) -> Result<Vec<Vec<f64>>> {
    let n = prob.n_interior();
    let basis = prob.eigensolve(count.min(n))?;
    let mut vectors = Vec::new();
    for k in 0..count.saturating_sub(2).min(basis.eigenvectors.len()) {
        let mut v = basis.eigenvectors[k].clone();
        let s = prob.l2_norm(&v);
        for x in v.iter_mut() {
            *x /= s;
        }
        vectors.push(v);
    }
    // localized bump
    let mut bump = vec![0.0; n];
    bump[n / 3] = 1.0;
    let s = prob.l2_norm(&bump);
    for x in bump.iter_mut() {
        *x /= s;
    }
    vectors.push(bump);
    // mixed profile
    let mut mixed: Vec<f64> = (0..n).map(|i| (0.7 * i as f64).sin() + 0.2).collect();
    let s = prob.l2_norm(&mixed);
    for x in mixed.iter_mut() {
        *x /= s;
    }
    vectors.push(mixed);
    vectors.truncate(count);
    Ok(vectors)
}

struct RunView<'a> {
    run: &'a ResolvedRun,
    u0_override: Option<Vec<f64>>,
}

impl RunView<'_> {
    fn checks(&mut self, traj: &Trajectory) -> Result<Vec<VerificationReport>> {
        let run = self.run;
        let u0 = self.u0_override.as_deref().unwrap_or(&run.u0);
        run_checks_impl(run, u0, traj)
    }
}

fn run_checks(run: &ResolvedRun, traj: &Trajectory) -> Result<Vec<VerificationReport>> {
    run_checks_impl(run, &run.u0, traj)
}

fn run_checks_impl(
    run: &ResolvedRun,
    u0: &[f64],
    traj: &Trajectory,
) -> Result<Vec<VerificationReport>> {
    let mut reports = Vec::new();
    for check in &run.verify.checks {
        match check.as_str() {
            "contour" => {
                let mut rep = VerificationReport::new("contour_identity", "-");
                for t in [0.1, 1.0, 10.0] {
                    let dev = unit_check(&run.policy, &[t])?;
                    rep.push(format!("t={t}"), dev, 1e-10);
                }
                reports.push(rep);
            }
            "eigenmode" => {
                let mode = run.verify.eigenmode_mode.ok_or_else(|| {
                    Error::Config("eigenmode check needs verify.eigenmode_mode".into())
                })?;
                let alpha = match &run.kernel {
                    KernelSpec::VariableOrder(v) if v.alpha_min == v.alpha_max => v.alpha_min,
                    _ => {
                        return Err(Error::Config(
                            "eigenmode check requires a constant-order kernel".into(),
                        ))
                    }
                };
                if !run.source.is_zero() {
                    return Err(Error::Config(
                        "eigenmode check requires a zero source".into(),
                    ));
                }
                let basis = run.problem.eigensolve(mode)?;
                let lam = basis.eigenvalues[mode - 1];
                let phi = &basis.eigenvectors[mode - 1];
                let coeff = run.problem.rho_dot(u0, phi);
                let mut rep = VerificationReport::new("eigenmode_match", "-");
                let times: Vec<f64> = if run.eigenmode_times.is_empty() {
                    traj.grid.points().iter().copied().filter(|&t| t > 0.0).collect()
                } else {
                    run.eigenmode_times.clone()
                };
                for &t in &times {
                    let m = traj.index_of_time(t).ok_or_else(|| {
                        Error::Validation(format!(
                            "eigenmode sample time {t} is not on the trajectory grid"
                        ))
                    })?;
                    let (s0, _) = ml::eigenmode_oracle(alpha, lam, t)?;
                    let expect: Vec<f64> = phi.iter().map(|v| coeff * s0 * v).collect();
                    let diff: Vec<f64> = traj.values[m]
                        .iter()
                        .zip(&expect)
                        .map(|(a, b)| a - b)
                        .collect();
                    let rel = run.problem.l2_norm(&diff) / run.problem.l2_norm(&expect).max(1e-300);
                    rep.push(format!("t={t:.6e}"), rel, run.verify.eigenmode_tol);
                }
                reports.push(rep);
            }
            "laplace" => {
                let probe = LaplaceProbe::new(run.p_samples.clone(), run.verify.laplace_tol)?;
                reports.push(laplace_residual(
                    &run.problem,
                    &run.kernel,
                    traj,
                    u0,
                    &run.source,
                    &probe,
                )?);
            }
            "weak" => {
                let config = WeakResidualConfig {
                    tolerance: run.verify.weak_tol,
                    ..WeakResidualConfig::default()
                };
                reports.push(weak_residual(
                    &run.problem,
                    &run.kernel,
                    traj,
                    u0,
                    &run.source,
                    &config,
                )?);
            }
            other => {
                return Err(Error::Config(format!("unknown check \"{other}\"")));
            }
        }
    }
    Ok(reports)
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn print_summary(reports: &[VerificationReport], traj: &Trajectory) {
    for note in &traj.meta.notes {
        println!("note: {note}");
    }
    for rep in reports {
        let worst = rep.worst();
        println!(
            "{}: {} ({} samples, worst {worst:.3e})",
            rep.check_name,
            verdict(rep.pass()),
            rep.rows.len()
        );
    }
}

/// CSV body for a trajectory: t,node_index,value rows, full precision.
pub fn solution_csv(traj: &Trajectory) -> String {
    let mut out = String::from("t,node_index,value\n");
    for (t, row) in traj.grid.points().iter().zip(&traj.values) {
        for (x, v) in row.iter().enumerate() {
            let _ = writeln!(out, "{t:e},{x},{v:e}");
        }
    }
    out
}

/// Parse a solution CSV back into a trajectory.
pub fn read_solution_csv(
    path: &Path,
    policy: &ContourPolicy,
    kernel: &KernelSpec,
) -> Result<Trajectory> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut times: Vec<f64> = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        if ln == 0 || line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let (Some(t), Some(x), Some(v)) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::Config(format!(
                "{}:{}: expected t,node_index,value",
                path.display(),
                ln + 1
            )));
        };
        let t: f64 = t
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad time \"{t}\"")))?;
        let x: usize = x
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad node index \"{x}\"")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad value \"{v}\"")))?;
        if times.last().map(|&last| t > last).unwrap_or(true) {
            times.push(t);
            rows.push(Vec::new());
        } else if (times.last().copied().unwrap() - t).abs() > 1e-14 * t.abs().max(1.0) {
            return Err(Error::Config(
                "solution rows must be grouped by increasing time".into(),
            ));
        }
        let row = rows.last_mut().unwrap();
        if row.len() != x {
            return Err(Error::Config(format!(
                "node indices must be contiguous; got {x} after {}",
                row.len()
            )));
        }
        row.push(v);
    }
    let grid = TimeGrid::from_points(times)?;
    Trajectory::new(
        grid,
        rows,
        TrajectoryMeta {
            kernel_family: kernel.family_name().to_string(),
            contour: policy.clone(),
            notes: vec![format!("loaded from {}", path.display())],
        },
    )
}

fn report_csv(reports: &[VerificationReport]) -> String {
    let mut out = String::from("check,sample,measured,tolerance,pass\n");
    for rep in reports {
        for row in &rep.rows {
            let _ = writeln!(
                out,
                "{},{},{:e},{:e},{}",
                rep.check_name, row.label, row.measured, row.tolerance, row.pass
            );
        }
    }
    out
}

fn write_manifest(
    run: &ResolvedRun,
    out_dir: &Path,
    solution_digest: &str,
    all_passed: bool,
) -> Result<()> {
    let config_value: toml::Value = toml::from_str(&run.config_text)
        .map_err(|e| Error::Config(format!("manifest embedding failed: {e}")))?;
    let mut root = toml::map::Map::new();
    let mut meta = toml::map::Map::new();
    meta.insert("tool".into(), toml::Value::String("fracdiff".into()));
    meta.insert(
        "version".into(),
        toml::Value::String(env!("CARGO_PKG_VERSION").into()),
    );
    meta.insert(
        "config_digest".into(),
        toml::Value::String(digest_bytes(run.config_text.as_bytes())),
    );
    if !solution_digest.is_empty() {
        meta.insert(
            "solution_digest".into(),
            toml::Value::String(solution_digest.into()),
        );
    }
    meta.insert("checks_passed".into(), toml::Value::Boolean(all_passed));
    root.insert("run".into(), toml::Value::Table(meta));
    root.insert("config".into(), config_value);
    let text = toml::to_string_pretty(&toml::Value::Table(root))
        .map_err(|e| Error::Config(format!("manifest serialization failed: {e}")))?;
    std::fs::write(out_dir.join("manifest.toml"), text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::resolve_config_text;

    const SMALL_RUN: &str = r#"
[problem]
dim = 1
shape = [31]

[kernel]
variant = "variable-order"
alpha = "constant:0.5"

[time]
horizon = 2.0
steps = 192
grading = 2.0

[data]
u0 = "eigenmode:1"

[verify]
checks = ["contour", "eigenmode", "laplace", "weak"]
eigenmode_mode = 1
eigenmode_times = "log:1e-1,2.0,5"
laplace_tol = 1e-3

[output]
dir = "out"
"#;

    #[test]
    fn solve_verify_roundtrip() {
        let run = resolve_config_text(SMALL_RUN, Path::new(".")).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let artifacts = execute_solve(&run, dir.path()).unwrap();
        assert!(artifacts.all_passed, "reports: {:#?}", summarize(&artifacts));
        assert!(dir.path().join("solution.csv").exists());
        assert!(dir.path().join("report.csv").exists());
        assert!(dir.path().join("manifest.toml").exists());

        // verify-only pass on the emitted solution
        let v = execute_verify(&run, &dir.path().join("solution.csv"), dir.path()).unwrap();
        assert!(v.all_passed);

        // corrupted solution must fail
        let text = std::fs::read_to_string(dir.path().join("solution.csv")).unwrap();
        let corrupted: String = text
            .lines()
            .enumerate()
            .map(|(i, line)| {
                if i == 0 {
                    line.to_string()
                } else {
                    let mut parts: Vec<String> =
                        line.split(',').map(|s| s.to_string()).collect();
                    let v: f64 = parts[2].parse().unwrap();
                    parts[2] = format!("{:e}", v * 1.01);
                    parts.join(",")
                }
            })
            .collect::<Vec<_>>()
            .join("\n");
        let bad_path = dir.path().join("bad.csv");
        std::fs::write(&bad_path, corrupted + "\n").unwrap();
        let v = execute_verify(&run, &bad_path, dir.path()).unwrap();
        assert!(!v.all_passed, "corrupted solution must fail verification");
    }

    fn summarize(a: &RunArtifacts) -> Vec<(String, bool, f64)> {
        a.reports
            .iter()
            .map(|r| (r.check_name.clone(), r.pass(), r.worst()))
            .collect()
    }

    #[test]
    fn manifest_reexecution_is_identical() {
        let run = resolve_config_text(SMALL_RUN, Path::new(".")).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let a = execute_solve(&run, &dir.path().join("first")).unwrap();
        let _ = a;
        let manifest: toml::Value = toml::from_str(
            &std::fs::read_to_string(dir.path().join("first/manifest.toml")).unwrap(),
        )
        .unwrap();
        let config = manifest.get("config").unwrap();
        let config_text = toml::to_string_pretty(config).unwrap();
        let run2 = resolve_config_text(&config_text, Path::new(".")).unwrap();
        let _b = execute_solve(&run2, &dir.path().join("second")).unwrap();
        let s1 = std::fs::read(dir.path().join("first/solution.csv")).unwrap();
        let s2 = std::fs::read(dir.path().join("second/solution.csv")).unwrap();
        assert_eq!(s1, s2, "manifest re-execution must be byte-identical");
    }

    #[test]
    fn selftest_passes() {
        assert!(selftest().unwrap());
    }
}
