//! Rate and overhead arithmetic.

use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Result};

/// Which training length enters the training-loss factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EtaMode {
    /// The symbols actually spent on training (`M` for compressive search).
    Measurements,
    /// `N_tx * N_rx` regardless of the method, as for an exhaustive sweep.
    FullSweep,
}

/// `max(0, 1 - training / coherence)`.
pub fn training_efficiency(training: f64, coherence: f64) -> f64 {
    (1.0 - training / coherence).clamp(0.0, 1.0)
}

/// `eta * log2(1 + gain * snr)` with `eta = max(0, 1 - training / coherence)`.
pub fn effective_rate(gain: f64, snr: f64, training: f64, coherence: f64) -> f64 {
    let eta = training_efficiency(training, coherence);
    if eta == 0.0 {
        return 0.0;
    }
    eta * (gain * snr).max(0.0).ln_1p() / std::f64::consts::LN_2
}

/// Two-stage sector sweep with quasi-omni patterns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverheadModel {
    pub sectors: usize,
    /// Quasi-omni patterns; derived as `sectors / 32` when unset.
    pub quasi_omni: Option<usize>,
    /// Sector-level training length in symbols.
    pub training_length: f64,
}

impl OverheadModel {
    /// One sector per antenna.
    pub fn from_antennas(antennas: usize, training_length: f64) -> Self {
        Self { sectors: antennas, quasi_omni: None, training_length }
    }

    pub fn quasi_omni_count(&self) -> Result<usize> {
        match self.quasi_omni {
            Some(0) => config("quasi-omni pattern count must be positive"),
            Some(q) => Ok(q),
            None if self.sectors % 32 == 0 && self.sectors > 0 => Ok(self.sectors / 32),
            None => config(format!("{} sectors do not give an integer quasi-omni count (sectors / 32)", self.sectors)),
        }
    }
}

/// `N_qo^2 * 32 * T_tr + 2 * (N_sec / N_qo) * T_tr` symbols.
pub fn ieee80211ad_overhead(model: &OverheadModel) -> Result<f64> {
    if model.sectors == 0 {
        return config("sector count must be positive");
    }
    if !(model.training_length > 0.0 && model.training_length.is_finite()) {
        return config(format!("training length {} must be positive", model.training_length));
    }
    let q = model.quasi_omni_count()? as f64;
    Ok(two_stage_overhead(model.sectors as f64, q, model.training_length))
}

/// The two-stage expression for real-valued pattern counts.
pub fn two_stage_overhead(sectors: f64, quasi_omni: f64, training_length: f64) -> f64 {
    quasi_omni * quasi_omni * 32.0 * training_length + 2.0 * (sectors / quasi_omni) * training_length
}

/// `(N_a^2 / 32 + 64) * T_tr`: the two-stage sweep with `N_sec = N_a`, `N_qo = N_a / 32`.
pub fn ieee80211ad_overhead_antennas(antennas: f64, training_length: f64) -> f64 {
    (antennas * antennas / 32.0 + 64.0) * training_length
}

/// `1 - method / baseline`; negative when the method costs more.
pub fn overhead_reduction(method: f64, baseline: f64) -> Result<f64> {
    if !(baseline > 0.0 && baseline.is_finite()) {
        return domain(format!("baseline overhead {baseline} must be positive"));
    }
    if !(method >= 0.0) {
        return domain(format!("method overhead {method} must be non-negative"));
    }
    Ok(1.0 - method / baseline)
}

/// Linear-interpolation percentile of sorted data, `q` in `[0, 1]`.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
        }
    }
}
