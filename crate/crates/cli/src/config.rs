use std::path::Path;

use curvsal::classifier::TrainConfig;
use curvsal::io::SyntheticSpec;
use curvsal::saliency::MaskOptConfig;
use curvsal::smoother::SmoothConfig;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

/// Every tunable of a run. Loaded from JSON, then overridden by `--set`
/// pairs, then by dedicated flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub smooth: SmoothConfig,
    pub mask: MaskOptConfig,
    pub train: TrainConfig,
    pub synthetic: SyntheticSpec,
    /// Surface samples drawn from each OFF mesh.
    pub points: usize,
    pub sample_seed: u64,
    /// Center inputs and scale them to unit max radius before use.
    pub normalize: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            smooth: SmoothConfig::default(),
            mask: MaskOptConfig::default(),
            train: TrainConfig::default(),
            synthetic: SyntheticSpec::default(),
            points: 1024,
            sample_seed: 0,
            normalize: true,
        }
    }
}

fn from_value(v: Value) -> Result<RunConfig, CliError> {
    serde_path_to_error::deserialize(v).map_err(|e| {
        let path = e.path().to_string();
        CliError::Config(format!("{path}: {}", e.into_inner()))
    })
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let v: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: line {}: {e}", path.display(), e.line())))?;
        from_value(v)
    }

    /// Applies a `dotted.path=value` override. The value is read as JSON
    /// when it parses as JSON and as a string otherwise.
    pub fn set(&mut self, assignment: &str) -> Result<(), CliError> {
        let (path, raw) = assignment
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--set expects key=value, got {assignment:?}")))?;
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        let mut root = serde_json::to_value(&*self).expect("config serializes");
        let mut slot = &mut root;
        for key in path.split('.') {
            slot = slot
                .as_object_mut()
                .and_then(|o| o.get_mut(key))
                .ok_or_else(|| CliError::Config(format!("{path}: no such setting")))?;
        }
        *slot = value;
        *self = from_value(root)?;
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let field = |prefix: &str, r: curvsal::Result<()>| {
            r.map_err(|e| {
                let msg = e.to_string();
                let msg = msg.strip_prefix("invalid parameter: ").unwrap_or(&msg).to_string();
                if msg.starts_with(prefix) {
                    CliError::Config(msg)
                } else {
                    CliError::Config(format!("{prefix}.{msg}"))
                }
            })
        };
        field("smooth", self.smooth.validate())?;
        field("mask", self.mask.validate())?;
        field("train", self.train.validate())?;
        if self.points == 0 {
            return Err(CliError::Config("points: must be positive".into()));
        }
        if self.synthetic.points == 0 || self.synthetic.per_class == 0 || self.synthetic.classes.is_empty() {
            return Err(CliError::Config("synthetic: classes, per_class and points must be non-empty".into()));
        }
        Ok(())
    }
}
