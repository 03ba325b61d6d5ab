use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::PipelineConfig;
use crate::synth::SynthSpec;

/// TOML run configuration. Every command-line flag has a key here; flags
/// given on the command line take precedence.
///
/// ```toml
/// [run]
/// dataset = "data/tiny"
/// backend = "oracle"
/// seed = 7
///
/// [pipeline]
/// nms_iou = 0.3
///
/// [noise]
/// label_flip_prob = 0.1
/// ```
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub run: RunSection,
    pub pipeline: PipelineConfig,
    pub noise: NoiseSection,
    /// Synthetic dataset used when no dataset root is given.
    pub synth: SynthSpec,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub dataset: Option<PathBuf>,
    pub format: Option<String>,
    pub split: Option<String>,
    pub classes: Option<PathBuf>,
    pub backend: Option<String>,
    pub interchange_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    pub pred: Option<PathBuf>,
    pub gt: Option<PathBuf>,
    /// Images to inspect; all when empty.
    pub images: Vec<String>,
    /// Component AP added to evaluation reports: `classification` or
    /// `detection`.
    pub ap: Option<String>,
    pub ap_iou: Option<f64>,
    /// Ablation rows as `pp`, `gp`, `gg`, `pg` (labels then boxes source).
    pub rows: Vec<String>,
}

/// Oracle noise, starting from `preset` when given.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    pub preset: Option<String>,
    pub label_flip_prob: Option<f64>,
    pub box_jitter_frac: Option<f64>,
    pub mask_morph_radius: Option<i32>,
    pub part_split_prob: Option<f64>,
}

impl ConfigFile {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let cfg: ConfigFile =
            toml::from_str(text).map_err(|e| Error::Config(format!("{}: {}", path.display(), e.message())))?;
        cfg.pipeline.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }
}
