//! Experiment configuration: JSON-loadable with flat key=value overrides
//! from the CLI. Unknown keys are rejected.

use super::TrainError;
use crate::spectral::FilterKind;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

/// Hyperparameter grids for random search. The default grids are the
/// standard search space for this family of models.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct Grids {
    pub lr: Vec<f64>,
    pub weight_decay: Vec<f64>,
    pub lr_ab: Vec<f64>,
    /// Also sample the initial (a, b) uniformly from the feasibility box.
    pub sample_ab_init: bool,
}

impl Default for Grids {
    fn default() -> Self {
        Grids {
            lr: vec![5e-4, 1e-3, 5e-3, 1e-2, 5e-2],
            weight_decay: vec![0.0, 5e-5, 1e-4, 5e-4, 1e-3],
            lr_ab: vec![5e-4, 1e-3, 5e-3, 1e-2, 5e-2],
            sample_ab_init: false,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    FitFilter,
    Classify,
    OverpassDemo,
    Verify,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum TransformModeCfg {
    Identity,
    Linear,
    Mlp,
}

/// External dataset files (edge list plus optional features/labels).
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DatasetPaths {
    pub edges: PathBuf,
    #[serde(default)]
    pub features: Option<PathBuf>,
    #[serde(default)]
    pub labels: Option<PathBuf>,
    #[serde(default)]
    pub csv_header: bool,
}

/// Planted-partition generator for the zero-external-data path.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticGraphCfg {
    pub nodes: usize,
    pub blocks: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub feature_noise: f64,
}

impl Default for SyntheticGraphCfg {
    fn default() -> Self {
        SyntheticGraphCfg {
            nodes: 400,
            blocks: 2,
            p_in: 0.1,
            p_out: 0.005,
            feature_noise: 1.0,
        }
    }
}

/// Image source for filter fitting: a directory of PGM files, or
/// synthetic smooth blobs when no directory is given. `noise` is the
/// per-pixel noise fraction mixed into synthetic images so their
/// spectral energy is spread over the whole band, as in natural images.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ImageCfg {
    pub count: usize,
    pub size: usize,
    pub noise: f64,
    pub dir: Option<PathBuf>,
}

impl Default for ImageCfg {
    fn default() -> Self {
        ImageCfg { count: 10, size: 16, noise: 0.3, dir: None }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub task: TaskKind,
    pub seed: u64,
    /// Polynomial order K.
    pub k: usize,
    pub epochs: usize,
    pub patience: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub lr_ab: f64,
    pub init_a: f64,
    pub init_b: f64,
    pub train_ab: bool,
    pub freeze_alpha: bool,
    pub mode: TransformModeCfg,
    pub hidden: usize,
    pub dropout: f64,
    pub add_self_loops: bool,
    pub dataset: Option<DatasetPaths>,
    pub synthetic: SyntheticGraphCfg,
    pub images: ImageCfg,
    pub filters: Vec<FilterKind>,
    pub grids: Grids,
    pub budget: usize,
    /// Repeat count for the multi-split confidence-interval protocol.
    pub repeats: usize,
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            task: TaskKind::Classify,
            seed: 0,
            k: 10,
            epochs: 1000,
            patience: 200,
            lr: 0.05,
            weight_decay: 5e-4,
            lr_ab: 5e-3,
            init_a: 0.0,
            init_b: 0.0,
            train_ab: true,
            freeze_alpha: false,
            mode: TransformModeCfg::Mlp,
            hidden: 64,
            dropout: 0.0,
            add_self_loops: false,
            dataset: None,
            synthetic: SyntheticGraphCfg::default(),
            images: ImageCfg::default(),
            filters: FilterKind::ALL.to_vec(),
            grids: Grids::default(),
            budget: 20,
            repeats: 1,
            output_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let fail = |msg: String| Err(TrainError::Config(msg));
        if self.patience == 0 {
            return fail("patience must be >= 1".into());
        }
        if self.epochs > 0 && self.patience > self.epochs {
            return fail(format!(
                "patience ({}) must not exceed epochs ({})",
                self.patience, self.epochs
            ));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return fail(format!("dropout must be in [0, 1), got {}", self.dropout));
        }
        for (name, v) in [("lr", self.lr), ("lr_ab", self.lr_ab)] {
            if !(v > 0.0 && v.is_finite()) {
                return fail(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return fail(format!("weight_decay must be >= 0, got {}", self.weight_decay));
        }
        if !(self.init_a > -1.0 && self.init_b > -1.0) {
            return fail(format!(
                "initial exponents must be > -1, got a={} b={}",
                self.init_a, self.init_b
            ));
        }
        if self.grids.lr.is_empty() || self.grids.weight_decay.is_empty() || self.grids.lr_ab.is_empty()
        {
            return fail("hyperparameter grids must be nonempty".into());
        }
        if self.filters.is_empty() {
            return fail("at least one target filter kind is required".into());
        }
        if self.budget == 0 {
            return fail("search budget must be >= 1".into());
        }
        if self.repeats == 0 {
            return fail("repeats must be >= 1".into());
        }
        if self.images.count == 0 && self.images.dir.is_none() {
            return fail("image count must be >= 1".into());
        }
        if self.images.size < 2 {
            return fail("image size must be >= 2".into());
        }
        if !(0.0..=1.0).contains(&self.images.noise) {
            return fail(format!("image noise must be in [0, 1], got {}", self.images.noise));
        }
        Ok(())
    }

    /// Applies one `key=value` override onto the JSON form of the config.
    /// Nested keys use dots (`synthetic.nodes=800`).
    pub fn apply_override(value: &mut serde_json::Value, pair: &str) -> Result<(), TrainError> {
        let (key, raw) = pair
            .split_once('=')
            .ok_or_else(|| TrainError::Config(format!("override {pair:?} is not key=value")))?;
        let mut slot = &mut *value;
        for part in key.split('.') {
            let obj = slot
                .as_object_mut()
                .ok_or_else(|| TrainError::Config(format!("cannot descend into {key:?}")))?;
            slot = obj
                .get_mut(part)
                .ok_or_else(|| TrainError::Config(format!("unknown config key {key:?}")))?;
        }
        let parsed: serde_json::Value = match slot {
            serde_json::Value::String(_) => serde_json::Value::String(raw.to_string()),
            _ => serde_json::from_str(raw)
                .map_err(|e| TrainError::Config(format!("invalid value for {key:?}: {e}")))?,
        };
        *slot = parsed;
        Ok(())
    }

    /// Parses a config from JSON text, applying overrides, and validates.
    pub fn from_json_with_overrides(
        json: Option<&str>,
        overrides: &[String],
    ) -> Result<ExperimentConfig, TrainError> {
        let base = match json {
            Some(text) => serde_json::from_str::<ExperimentConfig>(text)
                .map_err(|e| TrainError::Config(format!("config parse error: {e}")))?,
            None => ExperimentConfig::default(),
        };
        let mut value = serde_json::to_value(&base).expect("config serializes");
        for pair in overrides {
            Self::apply_override(&mut value, pair)?;
        }
        let cfg: ExperimentConfig = serde_json::from_value(value)
            .map_err(|e| TrainError::Config(format!("override produced invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Canonical JSON echo of the configuration.
    pub fn echo(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }

    /// SHA-256 of the canonical JSON echo.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let text = serde_json::to_string(&self.echo()).expect("echo serializes");
        let mut hasher = Sha256::new();
        hasher.update(text.as_bytes());
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        ExperimentConfig::default().validate().unwrap();
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = ExperimentConfig::from_json_with_overrides(Some(r#"{"typo_key": 3}"#), &[])
            .unwrap_err();
        assert!(err.to_string().contains("typo_key"), "{err}");
    }

    #[test]
    fn overrides_apply_and_unknown_override_named() {
        let cfg = ExperimentConfig::from_json_with_overrides(
            None,
            &["k=4".into(), "synthetic.nodes=100".into(), "lr=0.001".into()],
        )
        .unwrap();
        assert_eq!(cfg.k, 4);
        assert_eq!(cfg.synthetic.nodes, 100);
        assert_eq!(cfg.lr, 0.001);

        let err = ExperimentConfig::from_json_with_overrides(None, &["nope=1".into()]).unwrap_err();
        assert!(err.to_string().contains("nope"));
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = ExperimentConfig::default();
        let mut b = ExperimentConfig::default();
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn patience_bounds_checked() {
        let mut cfg = ExperimentConfig { epochs: 10, patience: 20, ..Default::default() };
        assert!(cfg.validate().is_err());
        cfg.patience = 10;
        assert!(cfg.validate().is_ok());
    }
}
