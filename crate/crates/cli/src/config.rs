use anyhow::{bail, Context, Result};
use facefront::cascade::{FeatureConfig, TrainParams};
use facefront::eval::POSE_BINS;
use facefront::frontal::FrontalizeConfig;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const CONFIG_VERSION: u32 = 1;

/// Tool-wide configuration. Unknown keys are rejected so a typo cannot
/// silently fall back to a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub version: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub landmarker: LandmarkerConfig,
    #[serde(default)]
    pub frontalizer: FrontalizerConfig,
    #[serde(default)]
    pub evaluation: EvaluationConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LandmarkerConfig {
    pub stages: usize,
    pub clusters: usize,
    pub lambda: f64,
    pub perturbations: usize,
    pub patch_size: usize,
    pub cells: usize,
    pub bins: usize,
}

impl Default for LandmarkerConfig {
    fn default() -> Self {
        let f = FeatureConfig::default();
        let t = TrainParams::default();
        LandmarkerConfig {
            stages: t.stages,
            clusters: t.clusters,
            lambda: t.lambda,
            perturbations: t.perturbations,
            patch_size: f.patch_size,
            cells: f.cells,
            bins: f.bins,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FrontalizerConfig {
    pub crop_margin: f64,
    pub output_size: usize,
    pub density_threshold_factor: f64,
}

impl Default for FrontalizerConfig {
    fn default() -> Self {
        let f = FrontalizeConfig::default();
        FrontalizerConfig {
            crop_margin: f.crop_margin,
            output_size: f.output_size,
            density_threshold_factor: f.density_threshold_factor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluationConfig {
    pub sigma_multiplier: f64,
    pub window: usize,
    pub exclude_same_video: bool,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        EvaluationConfig {
            sigma_multiplier: 2.5,
            window: 5,
            exclude_same_video: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// Absolute yaw bins; negative angles are rendered too and merged.
    pub bins: Vec<u32>,
    /// Jittered renders per bin and sign.
    pub variants: usize,
    /// Landmark jitter amplitude in pixels.
    pub jitter: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            bins: POSE_BINS.to_vec(),
            variants: 5,
            jitter: 1.0,
        }
    }
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            version: CONFIG_VERSION,
            seed: 0,
            landmarker: LandmarkerConfig::default(),
            frontalizer: FrontalizerConfig::default(),
            evaluation: EvaluationConfig::default(),
            sweep: SweepConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let config: PipelineConfig =
            toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            bail!(
                "unsupported config version {} (this tool reads version {CONFIG_VERSION})",
                self.version
            );
        }
        let l = &self.landmarker;
        if l.stages == 0 || l.stages > 20 {
            bail!("landmarker.stages must be in 1..=20");
        }
        if l.clusters == 0 || l.clusters > 32 {
            bail!("landmarker.clusters must be in 1..=32");
        }
        if !(l.lambda >= 0.0) {
            bail!("landmarker.lambda must be non-negative");
        }
        if l.patch_size < 4 || l.cells == 0 || l.patch_size % l.cells != 0 {
            bail!("landmarker.patch_size must be at least 4 and divisible by cells");
        }
        if l.bins < 2 {
            bail!("landmarker.bins must be at least 2");
        }
        let f = &self.frontalizer;
        if !(0.0..=2.0).contains(&f.crop_margin) {
            bail!("frontalizer.crop_margin must be in 0..=2");
        }
        if !(16..=1024).contains(&f.output_size) {
            bail!("frontalizer.output_size must be in 16..=1024");
        }
        if !(f.density_threshold_factor > 0.0 && f.density_threshold_factor < 1.0) {
            bail!("frontalizer.density_threshold_factor must be in (0, 1)");
        }
        let e = &self.evaluation;
        if !(e.sigma_multiplier > 0.0) {
            bail!("evaluation.sigma_multiplier must be positive");
        }
        if e.window == 0 {
            bail!("evaluation.window must be at least 1");
        }
        let s = &self.sweep;
        if s.bins.is_empty() || s.variants == 0 {
            bail!("sweep.bins and sweep.variants must be non-empty");
        }
        for b in &s.bins {
            if !POSE_BINS.contains(b) {
                bail!("sweep bin {b} is not one of {POSE_BINS:?}");
            }
        }
        if !(0.0..=10.0).contains(&s.jitter) {
            bail!("sweep.jitter must be in 0..=10 pixels");
        }
        Ok(())
    }

    pub fn train_params(&self) -> TrainParams {
        TrainParams {
            stages: self.landmarker.stages,
            clusters: self.landmarker.clusters,
            lambda: self.landmarker.lambda,
            perturbations: self.landmarker.perturbations,
            seed: self.seed,
            feature_config: self.feature_config(),
        }
    }

    pub fn feature_config(&self) -> FeatureConfig {
        FeatureConfig {
            patch_size: self.landmarker.patch_size,
            cells: self.landmarker.cells,
            bins: self.landmarker.bins,
        }
    }

    pub fn frontalize_config(&self) -> FrontalizeConfig {
        FrontalizeConfig {
            crop_margin: self.frontalizer.crop_margin,
            output_size: self.frontalizer.output_size,
            density_threshold_factor: self.frontalizer.density_threshold_factor,
        }
    }
}
