//! Pipeline configuration file (TOML).

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use scriptsort::{Binarization, ClusterConfig, CoderParams, FeatureMode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureSection {
    pub mode: FeatureMode,
    /// Min-max scale every dimension over the corpus.
    pub normalize: bool,
}

impl Default for FeatureSection {
    fn default() -> Self {
        Self {
            mode: FeatureMode::Concat,
            normalize: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineSection {
    /// Run k-means and complete linkage next to the GA when truth is known.
    pub enabled: bool,
    pub kmeans_restarts: usize,
}

impl Default for BaselineSection {
    fn default() -> Self {
        Self {
            enabled: true,
            kmeans_restarts: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub binarize: Binarization,
    /// Base seed; run `r` uses `seed + r`. Overrides `cluster.ga.seed`.
    pub seed: u64,
    pub runs: usize,
    pub coder: CoderParams,
    pub features: FeatureSection,
    pub cluster: ClusterConfig,
    pub baselines: BaselineSection,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            binarize: Binarization::Otsu,
            seed: 0,
            runs: 1,
            coder: CoderParams::default(),
            features: FeatureSection::default(),
            cluster: ClusterConfig {
                k: 3,
                ..ClusterConfig::default()
            },
            baselines: BaselineSection::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            bail!("runs must be at least 1");
        }
        self.coder.validate().context("invalid [coder] section")?;
        if self.cluster.k == 0 {
            bail!("cluster.k must be at least 1");
        }
        self.cluster.validate().context("invalid [cluster] section")?;
        if self.baselines.kmeans_restarts == 0 {
            bail!("baselines.kmeans_restarts must be at least 1");
        }
        Ok(())
    }

    /// Cluster parameters with the pipeline seed applied.
    pub fn cluster_config(&self) -> ClusterConfig {
        let mut cfg = self.cluster.clone();
        cfg.ga.seed = self.seed;
        cfg
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).context("serializing configuration")
    }
}

pub fn parse_config_str(text: &str) -> Result<PipelineConfig> {
    let cfg: PipelineConfig = toml::from_str(text).map_err(|e| anyhow::anyhow!("{}", e.to_string().trim_end()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<PipelineConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    parse_config_str(&text).with_context(|| format!("config {}", path.display()))
}
