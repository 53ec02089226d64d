//! TOML run configuration.
//!
//! Every field has a default, so an empty file (or no file) is the
//! full-scale reference setup. Unknown keys are rejected. Angles are given
//! in degrees and converted on the way into the core types.

use std::path::Path;

use anyhow::{bail, Context, Result};
use nearfield_core::estimator_sf::SearchGrid;
use nearfield_core::experiment::{EstimatorKind, ExperimentConfig, SceneSampler, Waveband};
use nearfield_core::search::Axis;
use nearfield_core::signal::{OfdmConfig, Scene};
use nearfield_core::{ArrayConfig, Target};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorChoice {
    Sf,
    Fresnel,
    Both,
}

impl EstimatorChoice {
    pub fn kinds(self) -> Vec<EstimatorKind> {
        match self {
            EstimatorChoice::Sf => vec![EstimatorKind::SubspaceFitting],
            EstimatorChoice::Fresnel => vec![EstimatorKind::Fresnel],
            EstimatorChoice::Both => EstimatorKind::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WavebandName {
    Narrowband,
    Wideband,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub schema_version: u32,
    pub seed: u64,
    pub array: ArraySection,
    pub ofdm: OfdmSection,
    pub experiment: ExperimentSection,
    pub sampler: SamplerSection,
    pub grid: GridSection,
    pub fresnel: FresnelSection,
    pub scene: SceneSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArraySection {
    pub n_elements: usize,
    pub carrier_freq_hz: f64,
    /// Half the carrier wavelength when absent.
    pub spacing_m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OfdmSection {
    pub n_subcarriers: usize,
    pub spacing_hz: f64,
    pub n_symbols: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    pub n_targets: usize,
    pub n_trials: usize,
    pub snr_db: Vec<f64>,
    pub bandwidth_hz: Vec<f64>,
    pub bandwidth_snr_db: f64,
    pub narrowband_spacing_hz: f64,
    pub wideband_spacing_hz: f64,
    pub wavebands: Vec<WavebandName>,
    pub estimator: EstimatorChoice,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerSection {
    pub range_m: [f64; 2],
    pub angle_deg: [f64; 2],
    pub min_range_sep_m: f64,
    pub min_angle_sep_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub range_m: AxisSpec,
    pub angle_deg: AxisSpec,
    pub refine_iters: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FresnelSection {
    pub n_windows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    pub range_m: f64,
    pub angle_deg: f64,
}

/// Fixed scene used by `spectrum` and `simulate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SceneSection {
    pub targets: Vec<TargetSpec>,
    pub snr_db: f64,
    /// Subcarrier spacing of the scene; `ofdm.spacing_hz` when absent.
    pub spacing_hz: Option<f64>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            schema_version: SCHEMA_VERSION,
            seed: 0,
            array: ArraySection::default(),
            ofdm: OfdmSection::default(),
            experiment: ExperimentSection::default(),
            sampler: SamplerSection::default(),
            grid: GridSection::default(),
            fresnel: FresnelSection::default(),
            scene: SceneSection::default(),
        }
    }
}

impl Default for ArraySection {
    fn default() -> Self {
        ArraySection { n_elements: 128, carrier_freq_hz: 28e9, spacing_m: None }
    }
}

impl Default for OfdmSection {
    fn default() -> Self {
        OfdmSection { n_subcarriers: 64, spacing_hz: 480e3, n_symbols: 200 }
    }
}

impl Default for ExperimentSection {
    fn default() -> Self {
        ExperimentSection {
            n_targets: 2,
            n_trials: 200,
            snr_db: vec![-20.0, -15.0, -10.0, -5.0, 0.0, 5.0, 10.0],
            bandwidth_hz: vec![1e6, 1e7, 1e8, 1e9, 1e10],
            bandwidth_snr_db: 0.0,
            narrowband_spacing_hz: 480.0,
            wideband_spacing_hz: 480e5,
            wavebands: vec![WavebandName::Narrowband, WavebandName::Wideband],
            estimator: EstimatorChoice::Both,
        }
    }
}

impl Default for SamplerSection {
    fn default() -> Self {
        SamplerSection {
            range_m: [5.0, 60.0],
            angle_deg: [40.0, 140.0],
            min_range_sep_m: 2.0,
            min_angle_sep_deg: 4.0,
        }
    }
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            range_m: AxisSpec { start: 3.0, stop: 80.0, step: 0.25 },
            angle_deg: AxisSpec { start: 30.0, stop: 150.0, step: 0.25 },
            refine_iters: 20,
        }
    }
}

impl Default for FresnelSection {
    fn default() -> Self {
        FresnelSection { n_windows: 50 }
    }
}

impl Default for SceneSection {
    fn default() -> Self {
        SceneSection {
            targets: vec![
                TargetSpec { range_m: 20.0, angle_deg: 80.0 },
                TargetSpec { range_m: 40.0, angle_deg: 100.0 },
            ],
            snr_db: 10.0,
            spacing_hz: None,
        }
    }
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).context("invalid configuration")?;
        if cfg.schema_version != SCHEMA_VERSION {
            bail!(
                "unsupported schema_version {} (this build reads version {SCHEMA_VERSION})",
                cfg.schema_version
            );
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        Self::from_toml_str(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn array(&self) -> Result<ArrayConfig> {
        let a = &self.array;
        Ok(match a.spacing_m {
            Some(d) => ArrayConfig::with_spacing(a.n_elements, a.carrier_freq_hz, d)?,
            None => ArrayConfig::new(a.n_elements, a.carrier_freq_hz)?,
        })
    }

    pub fn ofdm(&self) -> Result<OfdmConfig> {
        let o = &self.ofdm;
        Ok(OfdmConfig::new(o.n_subcarriers, o.spacing_hz, o.n_symbols)?)
    }

    pub fn grid(&self) -> Result<SearchGrid> {
        let g = &self.grid;
        let r = Axis::uniform(g.range_m.start, g.range_m.stop, g.range_m.step)
            .context("grid.range_m")?;
        let t = &g.angle_deg;
        let theta = Axis::uniform(t.start, t.stop, t.step)
            .and_then(|a| Axis::new(a.points().iter().map(|d| d.to_radians()).collect()))
            .context("grid.angle_deg")?;
        Ok(SearchGrid::new(r, theta, g.refine_iters).context("grid")?)
    }

    pub fn scene(&self) -> Result<Scene> {
        let targets = self
            .scene
            .targets
            .iter()
            .map(|t| Target::from_degrees(t.range_m, t.angle_deg))
            .collect::<Result<Vec<_>, _>>()
            .context("scene.targets")?;
        Ok(Scene::new(targets))
    }

    /// OFDM parameters of the fixed scene.
    pub fn scene_ofdm(&self) -> Result<OfdmConfig> {
        let ofdm = self.ofdm()?;
        Ok(match self.scene.spacing_hz {
            Some(df) => ofdm.with_spacing(df)?,
            None => ofdm,
        })
    }

    pub fn experiment(&self) -> Result<ExperimentConfig> {
        let e = &self.experiment;
        let s = &self.sampler;
        let cfg = ExperimentConfig {
            array: self.array()?,
            ofdm: self.ofdm()?,
            n_targets: e.n_targets,
            n_trials: e.n_trials,
            snr_list_db: e.snr_db.clone(),
            bandwidth_list_hz: e.bandwidth_hz.clone(),
            bandwidth_snr_db: e.bandwidth_snr_db,
            narrowband_spacing_hz: e.narrowband_spacing_hz,
            wideband_spacing_hz: e.wideband_spacing_hz,
            wavebands: e
                .wavebands
                .iter()
                .map(|w| match w {
                    WavebandName::Narrowband => Waveband::Narrowband,
                    WavebandName::Wideband => Waveband::Wideband,
                })
                .collect(),
            estimators: e.estimator.kinds(),
            sampler: SceneSampler {
                range_m: (s.range_m[0], s.range_m[1]),
                angle_rad: (s.angle_deg[0].to_radians(), s.angle_deg[1].to_radians()),
                min_range_sep_m: s.min_range_sep_m,
                min_angle_sep_rad: s.min_angle_sep_deg.to_radians(),
            },
            base_seed: self.seed,
            grid: self.grid()?,
            n_windows: self.fresnel.n_windows,
        };
        cfg.validate().context("experiment configuration")?;
        Ok(cfg)
    }
}
