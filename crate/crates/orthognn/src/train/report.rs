//! Run reports: per-epoch records, final metrics, filter curves, and the
//! over-passing scaling check. Serialized to report.json; wall time is
//! kept out of the files so repeated runs stay byte-identical.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
    /// Validation accuracy (classification) or validation loss proxy.
    pub val_metric: Option<f64>,
    pub test_metric: Option<f64>,
    /// Per-channel Σ_k α², the squared filter RMS norm.
    pub rms_norm: Vec<f64>,
    pub a: f64,
    pub b: f64,
}

/// One row of the learned filter curve: g_α evaluated at a Laplacian
/// eigenvalue grid point (mapped through μ = 1 − λ).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FilterCurveRow {
    pub lambda: f64,
    pub values: Vec<f64>,
}

/// Per-q outcome of the coefficient-scaling (over-passing) check.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScalingCheck {
    pub q: f64,
    pub argmax_invariant: bool,
    /// Count of strictly-correct nodes whose loss failed to strictly drop.
    pub violations: usize,
    pub strictly_correct_nodes: usize,
    /// Loss deltas (after − before) on the strictly-correct nodes.
    pub loss_deltas: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FinalMetrics {
    Classification {
        best_epoch: usize,
        val_accuracy: f64,
        test_accuracy: f64,
        /// Exact low-pass spectral classifier on the same split, when
        /// the dense oracle is affordable.
        oracle_accuracy: Option<f64>,
        /// Mean ± half-width of the 95% interval over repeated splits,
        /// when repeats > 1.
        repeat_mean: Option<f64>,
        repeat_ci95: Option<f64>,
    },
    FilterFit {
        /// (filter name, average final squared loss over images).
        per_kind: Vec<(String, f64)>,
    },
    Demo {
        final_train_loss: f64,
        final_rms_norm: Vec<f64>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub task: String,
    pub config_echo: serde_json::Value,
    pub config_hash: String,
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: Option<usize>,
    pub final_a: f64,
    pub final_b: f64,
    pub final_metrics: FinalMetrics,
    pub filter_curve: Vec<FilterCurveRow>,
    pub scaling_checks: Vec<ScalingCheck>,
    /// Max over sampled epochs of |Σα² − ⟨g_α, g_α⟩_w| (quadrature
    /// recheck of the coefficient/filter-norm identity).
    pub reg_identity_max_defect: f64,
    pub metadata: BTreeMap<String, String>,
    /// Printed to stdout only; never written to output files.
    #[serde(skip)]
    pub wall_time_secs: f64,
}

impl RunReport {
    pub fn channel_count(&self) -> usize {
        self.epochs
            .first()
            .map(|e| e.rms_norm.len())
            .or_else(|| self.filter_curve.first().map(|r| r.values.len()))
            .unwrap_or(0)
    }
}
