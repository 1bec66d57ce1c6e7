//! Versioned JSON container for trained [`ToyNet`] parameters.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ToyNet, ToyNetShape};
use crate::error::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format_version: u32,
    pub class_names: Vec<String>,
    /// Redundant with the layers; checked on load.
    pub shape: ToyNetShape,
    pub network: ToyNet,
}

impl Checkpoint {
    pub fn new(network: ToyNet, class_names: Vec<String>) -> Result<Self> {
        let c = Checkpoint { format_version: CHECKPOINT_VERSION, class_names, shape: network.shape(), network };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != CHECKPOINT_VERSION {
            return Err(Error::Parameter(format!(
                "unsupported checkpoint format_version {} (expected {CHECKPOINT_VERSION})",
                self.format_version
            )));
        }
        self.network.validate()?;
        let actual = self.network.shape();
        if actual != self.shape {
            return Err(Error::Parameter(format!(
                "declared shape {:?} does not match layers {:?}",
                self.shape, actual
            )));
        }
        if self.class_names.len() != actual.classes {
            return Err(Error::Parameter(format!(
                "{} class names for {} classes",
                self.class_names.len(),
                actual.classes
            )));
        }
        Ok(())
    }
}

pub fn parse_checkpoint(text: &str) -> Result<Checkpoint> {
    let c: Checkpoint =
        serde_json::from_str(text).map_err(|e| Error::parse("checkpoint", e.line().max(1), e.to_string()))?;
    // Semantic problems concern the whole document; report them at line 1.
    c.validate().map_err(|e| match e {
        Error::Parse { .. } => e,
        other => Error::parse("checkpoint", 1, other.to_string()),
    })?;
    Ok(c)
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    parse_checkpoint(&std::fs::read_to_string(path)?)
}

pub fn save_checkpoint(path: impl AsRef<Path>, checkpoint: &Checkpoint) -> Result<()> {
    checkpoint.validate()?;
    std::fs::write(path, serde_json::to_string(checkpoint)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Checkpoint {
        let net = ToyNet::new(&ToyNetShape { encoder: vec![4, 5], head: vec![3], classes: 2 }, 7).unwrap();
        Checkpoint::new(net, vec!["a".into(), "b".into()]).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let c = sample();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.json");
        save_checkpoint(&path, &c).unwrap();
        assert_eq!(load_checkpoint(&path).unwrap(), c);
    }

    #[test]
    fn version_and_shape_are_checked() {
        let mut c = sample();
        c.format_version = 99;
        assert!(parse_checkpoint(&serde_json::to_string(&c).unwrap()).is_err());

        let mut c = sample();
        c.network.encoder[1].bias.pop();
        assert!(parse_checkpoint(&serde_json::to_string(&c).unwrap()).is_err());

        let mut c = sample();
        c.class_names.push("extra".into());
        assert!(parse_checkpoint(&serde_json::to_string(&c).unwrap()).is_err());
    }

    #[test]
    fn syntax_errors_carry_a_line() {
        let err = parse_checkpoint("{\n  \"format_version\": 1,\n  oops\n}").unwrap_err();
        assert_eq!(err.location().unwrap().line, 3);
    }
}
