//! JSON pipeline configuration.

use std::path::Path;

use audiovat::audio::AudioConfig;
use audiovat::{CceConfig, SpecVatConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Every field is optional in the file; missing ones take their defaults.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub audio: AudioConfig,
    pub specvat: SpecVatConfig,
    pub cce: CceConfig,
    /// z-score each feature dimension before computing distances.
    pub standardize: bool,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn load_or_default(path: Option<&Path>) -> Result<Self> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use audiovat::audio::MelScale;
    use audiovat::ThresholdMode;

    #[test]
    fn partial_file_keeps_defaults() {
        let cfg = PipelineConfig::from_json(
            r#"{"audio": {"n_mels": 64, "mel_scale": "htk"}, "cce": {"threshold_mode": "zero"}}"#,
        )
        .unwrap();
        assert_eq!(cfg.audio.n_mels, 64);
        assert_eq!(cfg.audio.mel_scale, MelScale::Htk);
        assert_eq!(cfg.audio.hop, 512);
        assert_eq!(cfg.cce.threshold_mode, ThresholdMode::Zero);
        assert_eq!(cfg.specvat, SpecVatConfig::default());
        assert!(!cfg.standardize);
    }

    #[test]
    fn unknown_section_rejected() {
        assert!(PipelineConfig::from_json(r#"{"vat": {}}"#).is_err());
    }

    #[test]
    fn serialized_default_reloads() {
        let text = serde_json::to_string(&PipelineConfig::default()).unwrap();
        assert_eq!(
            PipelineConfig::from_json(&text).unwrap(),
            PipelineConfig::default()
        );
    }
}
