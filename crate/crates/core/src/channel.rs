//! Spatially congruent sub-6 GHz / mmWave geometric channels.
//!
//! The sub-6 GHz link is narrowband (one matrix). The mmWave link is a
//! 63-tap MIMO impulse response built from the paths through a roll-off 1
//! raised-cosine pulse, and its 256-subcarrier OFDM frequency response.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::array::{steering_vector, ArrayGeometry, Direction};
use crate::error::{config, Error, Result};
use crate::rng::{complex_normal, normal, seeded};

pub const NUM_TAPS: usize = 63;
pub const NUM_SUBCARRIERS: usize = 256;
pub const CYCLIC_PREFIX: usize = 64;
/// Taps kept free at the end of the impulse response for the pulse tail.
pub const TAP_GUARD: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Band {
    Sub6,
    Mmwave,
}

impl Band {
    pub fn as_str(&self) -> &'static str {
        match self {
            Band::Sub6 => "sub6",
            Band::Mmwave => "mmwave",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Path {
    pub gain: Complex64,
    pub departure: Direction,
    pub arrival: Direction,
    /// Seconds.
    pub delay: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub band: Band,
    pub paths: Vec<Path>,
}

impl PathSet {
    pub fn departures(&self) -> Vec<f64> {
        self.paths.iter().map(|p| p.departure.azimuth).collect()
    }

    pub fn arrivals(&self) -> Vec<f64> {
        self.paths.iter().map(|p| p.arrival.azimuth).collect()
    }

    pub fn validate(&self, max_paths: usize) -> Result<()> {
        if self.paths.is_empty() || self.paths.len() > max_paths {
            return config(format!("path count {} outside 1..={max_paths}", self.paths.len()));
        }
        for p in &self.paths {
            p.departure.check()?;
            p.arrival.check()?;
            if !(p.delay >= 0.0) {
                return config(format!("negative delay {}", p.delay));
            }
        }
        Ok(())
    }
}

/// How mmWave paths relate to sub-6 GHz paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CongruencePolicy {
    /// Probability that a mmWave path reuses the angles of its sub-6 counterpart.
    pub probability: f64,
    /// Standard deviation (radians) of the angular perturbation applied to shared angles.
    pub perturbation_std: f64,
    /// mmWave paths with no sub-6 counterpart at all.
    pub mmwave_only: usize,
}

impl CongruencePolicy {
    pub fn exact() -> Self {
        Self { probability: 1.0, perturbation_std: 0.0, mmwave_only: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.probability) {
            return config(format!("congruence probability {} outside [0, 1]", self.probability));
        }
        if !(self.perturbation_std >= 0.0 && self.perturbation_std.is_finite()) {
            return config(format!("angular perturbation {} must be non-negative", self.perturbation_std));
        }
        Ok(())
    }
}

/// Parameters for drawing a pair of congruent channels.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelConfig {
    /// Total mmWave paths (shared plus mmWave-only).
    pub paths: usize,
    /// Angles are drawn uniformly in `[-angle_range, angle_range]`.
    pub angle_range: f64,
    /// mmWave delays are uniform in `[0, max_delay_samples * sample_period]`.
    pub max_delay_samples: f64,
    /// mmWave sample period (1 / bandwidth).
    pub sample_period: f64,
    pub mmwave_tx: ArrayGeometry,
    pub mmwave_rx: ArrayGeometry,
    pub sub6_tx: ArrayGeometry,
    pub sub6_rx: ArrayGeometry,
}

impl ChannelConfig {
    /// Standard setup: 32x32 mmWave ULAs, 4x4 sub-6 ULAs, 4 paths, 320 MHz.
    pub fn standard() -> Self {
        Self {
            paths: 4,
            angle_range: 60f64.to_radians(),
            max_delay_samples: 48.0,
            sample_period: 1.0 / 320e6,
            mmwave_tx: ArrayGeometry::ula(32),
            mmwave_rx: ArrayGeometry::ula(32),
            sub6_tx: ArrayGeometry::ula(4),
            sub6_rx: ArrayGeometry::ula(4),
        }
    }

    pub fn validate(&self, policy: &CongruencePolicy) -> Result<()> {
        policy.validate()?;
        for g in [&self.mmwave_tx, &self.mmwave_rx, &self.sub6_tx, &self.sub6_rx] {
            g.validate()?;
        }
        if self.paths == 0 {
            return config("at least one mmWave path is required");
        }
        if policy.mmwave_only >= self.paths {
            return config(format!("mmwave_only ({}) must leave at least one shared path out of {}", policy.mmwave_only, self.paths));
        }
        if !(self.angle_range > 0.0 && self.angle_range <= PI / 2.0) {
            return config(format!("angle range {} outside (0, pi/2]", self.angle_range));
        }
        if !(self.sample_period > 0.0) {
            return config("sample period must be positive");
        }
        if !(self.max_delay_samples >= 0.0 && self.max_delay_samples < (NUM_TAPS - TAP_GUARD) as f64) {
            return config(format!("max delay {} samples must be below {}", self.max_delay_samples, NUM_TAPS - TAP_GUARD));
        }
        Ok(())
    }
}

fn clamp_angle(a: f64) -> f64 {
    a.clamp(-PI / 2.0, PI / 2.0)
}

/// Draws a sub-6 GHz path set and a mmWave path set that share angles
/// according to `policy`. Deterministic in `seed`.
///
/// Gains are complex Gaussian, scaled so that the expected squared Frobenius
/// norm of each band's channel equals `N_tx * N_rx`. A congruent mmWave path
/// takes the magnitude of its sub-6 counterpart (rescaled to the band's
/// per-path energy) with an independent phase.
pub fn generate_congruent_channels(cfg: &ChannelConfig, policy: &CongruencePolicy, seed: u64) -> Result<(PathSet, PathSet)> {
    cfg.validate(policy)?;
    let mut rng = seeded(seed);
    let shared = cfg.paths - policy.mmwave_only;
    let range = cfg.angle_range;
    let uniform_angle = |rng: &mut crate::rng::SimRng| rng.gen_range(-range..=range);

    let sub6_energy = (cfg.sub6_tx.len() * cfg.sub6_rx.len()) as f64 / shared as f64;
    let mm_energy = (cfg.mmwave_tx.len() * cfg.mmwave_rx.len()) as f64 / cfg.paths as f64;
    let max_delay = cfg.max_delay_samples * cfg.sample_period;

    let mut sub6 = Vec::with_capacity(shared);
    let mut mm = Vec::with_capacity(cfg.paths);
    for _ in 0..shared {
        let dod = uniform_angle(&mut rng);
        let doa = uniform_angle(&mut rng);
        let delay = rng.gen_range(0.0..=max_delay);
        let sub6_gain = complex_normal(&mut rng, sub6_energy);
        sub6.push(Path { gain: sub6_gain, departure: Direction::azimuth(dod), arrival: Direction::azimuth(doa), delay });
        // Draw every variate unconditionally so the stream layout does not
        // depend on the policy.
        let congruent = rng.gen::<f64>() < policy.probability;
        let d_dod = normal(&mut rng, policy.perturbation_std);
        let d_doa = normal(&mut rng, policy.perturbation_std);
        let ind_dod = uniform_angle(&mut rng);
        let ind_doa = uniform_angle(&mut rng);
        let ind_gain = complex_normal(&mut rng, mm_energy);
        // a congruent path keeps its sub-6 share of the power with a fresh phase
        let (m_dod, m_doa, m_gain) = if congruent {
            let mag = sub6_gain.norm() * (mm_energy / sub6_energy).sqrt();
            (clamp_angle(dod + d_dod), clamp_angle(doa + d_doa), Complex64::from_polar(mag, ind_gain.arg()))
        } else {
            (ind_dod, ind_doa, ind_gain)
        };
        mm.push(Path { gain: m_gain, departure: Direction::azimuth(m_dod), arrival: Direction::azimuth(m_doa), delay });
    }
    for _ in 0..policy.mmwave_only {
        let dod = uniform_angle(&mut rng);
        let doa = uniform_angle(&mut rng);
        mm.push(Path {
            gain: complex_normal(&mut rng, mm_energy),
            departure: Direction::azimuth(dod),
            arrival: Direction::azimuth(doa),
            delay: rng.gen_range(0.0..=max_delay),
        });
    }
    Ok((PathSet { band: Band::Sub6, paths: sub6 }, PathSet { band: Band::Mmwave, paths: mm }))
}

/// Raised-cosine pulse value at time `t` for symbol period `ts`.
pub fn raised_cosine(t: f64, ts: f64, rolloff: f64) -> f64 {
    assert!(ts > 0.0, "symbol period must be positive");
    let x = t / ts;
    let sinc = if x.abs() < 1e-12 { 1.0 } else { (PI * x).sin() / (PI * x) };
    if rolloff == 0.0 {
        return sinc;
    }
    // cos(pi y / 2) / (1 - y^2) with y = 2 rolloff t / ts, rewritten around |y| = 1
    // as sin(pi e / 2) / (e (1 + |y|)), e = 1 - |y|, to avoid cancellation
    let y = (2.0 * rolloff * x).abs();
    let e = 1.0 - y;
    let shaping = if e.abs() < 1e-3 {
        let ratio = if e == 0.0 { PI / 2.0 } else { (PI * e / 2.0).sin() / e };
        ratio / (1.0 + y)
    } else {
        (PI * y / 2.0).cos() / (1.0 - y * y)
    };
    sinc * shaping
}

/// Narrowband MIMO matrix `sum_l g_l a_rx(theta_l) a_tx(phi_l)^H`.
pub fn narrowband_matrix(paths: &PathSet, rx: &ArrayGeometry, tx: &ArrayGeometry) -> Result<DMatrix<Complex64>> {
    let mut h = DMatrix::zeros(rx.len(), tx.len());
    for p in &paths.paths {
        let ar = steering_vector(rx, p.arrival)?;
        let at = steering_vector(tx, p.departure)?;
        h += (ar * at.adjoint()) * p.gain;
    }
    Ok(h)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WidebandChannel {
    pub taps: Vec<DMatrix<Complex64>>,
    /// Empty until [`taps_to_subcarriers`] runs.
    pub subcarriers: Vec<DMatrix<Complex64>>,
    pub sample_period: f64,
}

impl WidebandChannel {
    pub fn rows(&self) -> usize {
        self.taps.first().map_or(0, |t| t.nrows())
    }

    pub fn cols(&self) -> usize {
        self.taps.first().map_or(0, |t| t.ncols())
    }

    /// Frequency response on one subcarrier, computed directly from the taps.
    pub fn subcarrier_matrix(&self, k: usize) -> DMatrix<Complex64> {
        if let Some(h) = self.subcarriers.get(k) {
            return h.clone();
        }
        let mut h = DMatrix::zeros(self.rows(), self.cols());
        for (d, tap) in self.taps.iter().enumerate() {
            let w = Complex64::from_polar(1.0, -2.0 * PI * (k * d) as f64 / NUM_SUBCARRIERS as f64);
            h += tap * w;
        }
        h
    }

    pub fn tap_energy(&self) -> f64 {
        self.taps.iter().map(|t| t.norm_squared()).sum()
    }
}

/// Samples the pulse-shaped multipath response into exactly [`NUM_TAPS`] taps.
pub fn paths_to_taps(paths: &PathSet, rx: &ArrayGeometry, tx: &ArrayGeometry, sample_period: f64) -> Result<WidebandChannel> {
    if !(sample_period > 0.0) {
        return config("sample period must be positive");
    }
    let limit = (NUM_TAPS - TAP_GUARD) as f64 * sample_period;
    let mut taps = vec![DMatrix::zeros(rx.len(), tx.len()); NUM_TAPS];
    for p in &paths.paths {
        if !(p.delay >= 0.0 && p.delay < limit) {
            return Err(Error::Config(format!("path delay {:.3e} s outside [0, {:.3e}) representable in {NUM_TAPS} taps", p.delay, limit)));
        }
        let ar = steering_vector(rx, p.arrival)?;
        let at = steering_vector(tx, p.departure)?;
        let outer = ar * at.adjoint();
        for (d, tap) in taps.iter_mut().enumerate() {
            let pulse = raised_cosine(d as f64 * sample_period - p.delay, sample_period, 1.0);
            if pulse != 0.0 {
                *tap += &outer * (p.gain * pulse);
            }
        }
    }
    Ok(WidebandChannel { taps, subcarriers: Vec::new(), sample_period })
}

/// Fills the 256 per-subcarrier matrices with the DFT of the zero-padded taps.
pub fn taps_to_subcarriers(mut channel: WidebandChannel) -> WidebandChannel {
    let (rows, cols) = (channel.rows(), channel.cols());
    let fft = FftPlanner::<f64>::new().plan_fft_forward(NUM_SUBCARRIERS);
    let mut subcarriers = vec![DMatrix::zeros(rows, cols); NUM_SUBCARRIERS];
    let mut buf = vec![Complex64::new(0.0, 0.0); NUM_SUBCARRIERS];
    for r in 0..rows {
        for c in 0..cols {
            buf.iter_mut().for_each(|x| *x = Complex64::new(0.0, 0.0));
            for (d, tap) in channel.taps.iter().enumerate() {
                buf[d] = tap[(r, c)];
            }
            fft.process(&mut buf);
            for (k, h) in subcarriers.iter_mut().enumerate() {
                h[(r, c)] = buf[k];
            }
        }
    }
    channel.subcarriers = subcarriers;
    channel
}
