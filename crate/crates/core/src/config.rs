//! TOML run configuration: one section per command, one master seed.

use serde::{Deserialize, Serialize};

use crate::array::ArrayGeometry;
use crate::channel::{ChannelConfig, CongruencePolicy};
use crate::codebook::Pairing;
use crate::error::{config, Error, Result};
use crate::eval::{sweep_search_settings, EtaMode, ExperimentConfig, FingerprintSweep, Method};
use crate::link::LinkBudget;
use crate::position::{BinGrid, DatabaseSettings, OverheadSettings, SceneConfig};
use crate::rng::derive_seed;
use crate::sparse::{SearchSettings, SolverConfig};
use crate::translation::{EnsembleSettings, FitSettings, SpectrumFamily};

/// The shipped standard configuration.
pub const DEFAULT_CONFIG: &str = include_str!("../config/standard.toml");

// seed streams derived from the master seed
const SCENE_STREAM: u64 = 1;
const FINGERPRINT_STREAM: u64 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub channel: Option<ChannelSection>,
    pub link: Option<LinkSection>,
    pub beamsearch: Option<BeamSearchSection>,
    pub fingerprint: Option<FingerprintSection>,
    pub covtranslate: Option<CovTranslateSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    /// Channel pairs written by `gen-channels`.
    pub realizations: usize,
    pub paths: usize,
    pub angle_range_deg: f64,
    pub max_delay_samples: f64,
    pub congruence_probability: f64,
    pub perturbation_deg: f64,
    pub mmwave_only: usize,
    pub mmwave_tx: ArrayGeometry,
    pub mmwave_rx: ArrayGeometry,
    pub sub6_tx: ArrayGeometry,
    pub sub6_rx: ArrayGeometry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSection {
    pub mmwave: LinkBudget,
    pub sub6: LinkBudget,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamSearchSection {
    pub methods: Vec<String>,
    pub distances_m: Vec<f64>,
    pub measurements: Vec<usize>,
    pub trials: usize,
    pub coherence_symbols: f64,
    pub eta_mode: EtaMode,
    pub oversampling: usize,
    pub pairing: Pairing,
    pub phase_bits: u32,
    /// Structured-beam gain threshold as a fraction of the array size.
    pub gamma: f64,
    pub weight_floor: f64,
    pub spread_steps: f64,
    pub lambda_scale: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub prior_snapshots: usize,
    pub prior_peaks: usize,
    pub target_fraction: f64,
    pub success_loss_db: f64,
    pub sector_training: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FingerprintSection {
    pub sides: Vec<usize>,
    pub symbols_per_beam: usize,
    /// Per-antenna SNR; omit for noiseless measurements.
    pub snr_db: Option<f64>,
    pub accumulation_db: f64,
    pub sigma_p: f64,
    pub target_probability: f64,
    pub loss_threshold_db: f64,
    pub trials: usize,
    pub snapshots: usize,
    pub depth: usize,
    pub survey_sigma: f64,
    pub scene: SceneSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSection {
    pub transmitter: [f64; 3],
    pub receiver_height: f64,
    pub region: BinGrid,
    pub blockage_probability: f64,
    pub min_reflectors: usize,
    pub max_reflectors: usize,
    pub reflection: (f64, f64),
    pub wall_offset: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovTranslateSection {
    pub family: String,
    pub cases: usize,
    pub mean_range_deg: f64,
    pub spread_range_deg: (f64, f64),
    pub low_antennas: usize,
    pub high_antennas: usize,
    /// Omit for the exact low-band correlation.
    pub snapshots: Option<usize>,
    /// Omit for noiseless snapshots.
    pub snr_db: Option<f64>,
}

fn section<'a, T>(s: &'a Option<T>, name: &str) -> Result<&'a T> {
    s.as_ref().ok_or_else(|| Error::Config(format!("configuration has no [{name}] section")))
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

impl RunConfig {
    /// Parses and validates every section present.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text)
            .map_err(|e| Error::Parse { line: e.span().map_or(0, |s| line_of(text, s.start)), message: e.message().to_string() })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn standard() -> Self {
        Self::parse(DEFAULT_CONFIG).expect("shipped configuration is valid")
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serialises")
    }

    pub fn validate(&self) -> Result<()> {
        if self.channel.is_some() {
            self.channel_setup()?;
        }
        if let Some(link) = &self.link {
            link.mmwave.validate()?;
            link.sub6.validate()?;
        }
        if self.beamsearch.is_some() {
            self.experiment()?.validate()?;
        }
        if self.fingerprint.is_some() {
            self.fingerprint_sweep()?.validate()?;
        }
        if self.covtranslate.is_some() {
            self.translation()?.validate()?;
        }
        Ok(())
    }

    /// Channel parameters; the sample period is the inverse mmWave bandwidth.
    pub fn channel_setup(&self) -> Result<(ChannelConfig, CongruencePolicy)> {
        let c = section(&self.channel, "channel")?;
        let link = section(&self.link, "link")?;
        link.mmwave.validate()?;
        if c.realizations == 0 {
            return config("realizations must be at least 1");
        }
        let cfg = ChannelConfig {
            paths: c.paths,
            angle_range: c.angle_range_deg.to_radians(),
            max_delay_samples: c.max_delay_samples,
            sample_period: 1.0 / link.mmwave.bandwidth_hz,
            mmwave_tx: c.mmwave_tx,
            mmwave_rx: c.mmwave_rx,
            sub6_tx: c.sub6_tx,
            sub6_rx: c.sub6_rx,
        };
        let policy = CongruencePolicy {
            probability: c.congruence_probability,
            perturbation_std: c.perturbation_deg.to_radians(),
            mmwave_only: c.mmwave_only,
        };
        cfg.validate(&policy)?;
        for g in [&cfg.mmwave_tx, &cfg.mmwave_rx, &cfg.sub6_tx, &cfg.sub6_rx] {
            if g.rows != 1 {
                return config("channel arrays must be linear");
            }
        }
        Ok((cfg, policy))
    }

    pub fn experiment(&self) -> Result<ExperimentConfig> {
        let b = section(&self.beamsearch, "beamsearch")?;
        let (channel, policy) = self.channel_setup()?;
        let link = section(&self.link, "link")?;
        let methods = b.methods.iter().map(|m| m.parse::<Method>()).collect::<Result<Vec<_>>>()?;
        let search = SearchSettings {
            measurements: b.measurements.first().copied().unwrap_or(1),
            pairing: b.pairing,
            phase_bits: b.phase_bits,
            gamma: b.gamma,
            weight_floor: b.weight_floor,
            spread_steps: b.spread_steps,
            solver: SolverConfig { lambda: None, lambda_scale: b.lambda_scale, max_iterations: b.max_iterations, tolerance: b.tolerance },
            ..sweep_search_settings()
        };
        Ok(ExperimentConfig {
            channel,
            policy,
            mmwave_link: link.mmwave,
            sub6_link: link.sub6,
            distances: b.distances_m.clone(),
            measurements: b.measurements.clone(),
            coherence_symbols: b.coherence_symbols,
            eta_mode: b.eta_mode,
            trials: b.trials,
            seed: self.seed,
            methods,
            oversampling: b.oversampling,
            search,
            prior_snapshots: b.prior_snapshots,
            prior_peaks: b.prior_peaks,
            target_fraction: b.target_fraction,
            success_loss_db: b.success_loss_db,
            sector_training: b.sector_training,
        })
    }

    pub fn fingerprint_sweep(&self) -> Result<FingerprintSweep> {
        let f = section(&self.fingerprint, "fingerprint")?;
        let s = &f.scene;
        Ok(FingerprintSweep {
            sides: f.sides.clone(),
            scene: SceneConfig {
                transmitter: s.transmitter,
                receiver_height: s.receiver_height,
                region: s.region,
                blockage_probability: s.blockage_probability,
                min_reflectors: s.min_reflectors,
                max_reflectors: s.max_reflectors,
                reflection: s.reflection,
                wall_offset: s.wall_offset,
                seed: derive_seed(self.seed, &[SCENE_STREAM]),
            },
            database: DatabaseSettings { snapshots: f.snapshots, depth: f.depth, survey_sigma: f.survey_sigma },
            overhead: OverheadSettings {
                sigma_p: f.sigma_p,
                symbols_per_beam: f.symbols_per_beam,
                target_probability: f.target_probability,
                loss_threshold_db: f.loss_threshold_db,
                trials: f.trials,
                snr_db: f.snr_db,
                accumulation_db: f.accumulation_db,
            },
            seed: derive_seed(self.seed, &[FINGERPRINT_STREAM]),
        })
    }

    pub fn translation(&self) -> Result<EnsembleSettings> {
        let c = section(&self.covtranslate, "covtranslate")?;
        let family: SpectrumFamily = c.family.parse()?;
        Ok(EnsembleSettings {
            family,
            cases: c.cases,
            mean_range: c.mean_range_deg.to_radians(),
            spread_range: (c.spread_range_deg.0.to_radians(), c.spread_range_deg.1.to_radians()),
            low: ArrayGeometry::ula(c.low_antennas),
            high: ArrayGeometry::ula(c.high_antennas),
            snapshots: c.snapshots,
            snr_db: c.snr_db,
            fit: FitSettings::default(),
        })
    }
}
