//! Independent oracles and residual checks: Mittag-Leffler references,
//! Laplace-domain residuals, distributional (weak-form) residuals,
//! operator-norm exponent probes, and structured pass/fail reports.

pub mod ml;
pub mod probes;
pub mod residual;

pub use ml::{eigenmode_oracle, mittag_leffler};
pub use probes::{b_operator_norm, norm_slope_probe, OperatorTag};
pub use residual::{laplace_residual, weak_residual, LaplaceProbe, WeakResidualConfig};

/// One measured quantity inside a check.
#[derive(Debug, Clone)]
pub struct SampleRow {
    pub label: String,
    pub measured: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Outcome of a verification check: passes iff every sample row passes.
#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub check_name: String,
    pub inputs_digest: String,
    pub rows: Vec<SampleRow>,
}

impl VerificationReport {
    pub fn new(check_name: impl Into<String>, inputs_digest: impl Into<String>) -> Self {
        VerificationReport {
            check_name: check_name.into(),
            inputs_digest: inputs_digest.into(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, label: impl Into<String>, measured: f64, tolerance: f64) {
        let pass = measured.is_finite() && measured <= tolerance;
        self.rows.push(SampleRow {
            label: label.into(),
            measured,
            tolerance,
            pass,
        });
    }

    /// Push a row whose pass criterion is a predicate rather than
    /// measured <= tolerance (slope checks compare signed values).
    pub fn push_with(&mut self, label: impl Into<String>, measured: f64, tolerance: f64, pass: bool) {
        self.rows.push(SampleRow {
            label: label.into(),
            measured,
            tolerance,
            pass,
        });
    }

    pub fn pass(&self) -> bool {
        !self.rows.is_empty() && self.rows.iter().all(|r| r.pass)
    }

    pub fn worst(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.measured)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Digest of byte content used to tie reports to their inputs.
pub fn digest_bytes(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let out = hasher.finalize();
    out.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Digest of a field of floats (bit-exact).
pub fn digest_field(values: &[f64]) -> String {
    let mut bytes = Vec::with_capacity(values.len() * 8);
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    digest_bytes(&bytes)
}
