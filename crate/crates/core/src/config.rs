//! Pipeline configuration, loadable from a `key = value` text file.
//!
//! Blank lines and lines starting with `#` are ignored. Unknown keys are
//! rejected so that typos do not silently fall back to defaults.

use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::relations::RelationConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct AggregationConfig {
    /// Centroid displacement (m) above which an object counts as moved.
    pub replace_threshold_d: f64,
    /// Per-object point cap enforced after UPDATE.
    pub downsample_cap: usize,
    pub rng_seed: u64,
}

impl Default for AggregationConfig {
    fn default() -> Self {
        AggregationConfig {
            replace_threshold_d: 0.10,
            downsample_cap: 20_000,
            rng_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AudioConfig {
    /// Windowed-RMS threshold on normalized amplitude.
    pub epsilon: f64,
    pub window_secs: f64,
    pub hop_secs: f64,
    pub min_len_secs: f64,
}

impl Default for AudioConfig {
    fn default() -> Self {
        AudioConfig {
            epsilon: 0.02,
            window_secs: 0.050,
            hop_secs: 0.025,
            min_len_secs: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub aggregation: AggregationConfig,
    pub relations: RelationConfig,
    pub audio: AudioConfig,
    /// Raw correction steps whose best grounding score is below this are dropped.
    pub grounding_threshold: f64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            aggregation: AggregationConfig::default(),
            relations: RelationConfig::default(),
            audio: AudioConfig::default(),
            grounding_threshold: 0.5,
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: expected key = value")]
    Syntax { line: usize },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: bad value for {key}: {value:?}")]
    BadValue {
        line: usize,
        key: String,
        value: String,
    },
    #[error("invalid relation thresholds: {0}")]
    Invalid(String),
}

impl Config {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Config::default();
        for (index, raw) in text.lines().enumerate() {
            let line = index + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed
                .split_once('=')
                .ok_or(ConfigError::Syntax { line })?;
            cfg.set(line, key.trim(), value.trim())?;
        }
        cfg.relations.validate().map_err(ConfigError::Invalid)?;
        Ok(cfg)
    }

    fn set(&mut self, line: usize, key: &str, value: &str) -> Result<(), ConfigError> {
        let bad = || ConfigError::BadValue {
            line,
            key: key.to_string(),
            value: value.to_string(),
        };
        let float = || value.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(bad);
        let r = &mut self.relations;
        match key {
            "replace_threshold_d" => self.aggregation.replace_threshold_d = float()?,
            "downsample_cap" => {
                self.aggregation.downsample_cap =
                    value.parse().ok().filter(|v| *v > 0).ok_or_else(bad)?
            }
            "rng_seed" => self.aggregation.rng_seed = value.parse().map_err(|_| bad())?,
            "contact_max" => r.contact_max = float()?,
            "far_max" => r.far_max = float()?,
            "near_max" => r.near_max = float()?,
            "inside_frac" => r.inside_frac = float()?,
            "ontop_xy_frac" => r.ontop_xy_frac = float()?,
            "ontop_above_frac" => r.ontop_above_frac = float()?,
            "vert_component" => r.vert_component = float()?,
            "horiz_component" => r.horiz_component = float()?,
            "occl_depth_frac" => r.occl_depth_frac = float()?,
            "occl_overlap_frac" => r.occl_overlap_frac = float()?,
            "swap_occlusion" => r.swap_occlusion = value.parse().map_err(|_| bad())?,
            "audio_epsilon" => self.audio.epsilon = float()?,
            "audio_window" => self.audio.window_secs = float()?,
            "audio_hop" => self.audio.hop_secs = float()?,
            "audio_min_len" => self.audio.min_len_secs = float()?,
            "grounding_threshold" => self.grounding_threshold = float()?,
            _ => {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: key.to_string(),
                })
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_overrides_and_comments() {
        let cfg = Config::parse(
            "# tuning\nreplace_threshold_d = 0.2\nrng_seed=7\n\nnear_max = 0.12\nswap_occlusion = true\n",
        )
        .unwrap();
        assert_eq!(cfg.aggregation.replace_threshold_d, 0.2);
        assert_eq!(cfg.aggregation.rng_seed, 7);
        assert_eq!(cfg.relations.near_max, 0.12);
        assert!(cfg.relations.swap_occlusion);
        assert_eq!(cfg.aggregation.downsample_cap, 20_000);
    }

    #[test]
    fn rejects_unknown_keys_and_inconsistent_thresholds() {
        assert!(matches!(
            Config::parse("replace_threshold = 1"),
            Err(ConfigError::UnknownKey { line: 1, .. })
        ));
        assert!(matches!(Config::parse("near_max = 0.5"), Err(ConfigError::Invalid(_))));
        assert!(matches!(Config::parse("far_max"), Err(ConfigError::Syntax { line: 1 })));
    }
}
