//! Link budget: close-in reference path loss and thermal-noise SNR.

use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Thermal noise density at room temperature.
pub const THERMAL_NOISE_DBM_PER_HZ: f64 = -174.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkBudget {
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub tx_power_dbm: f64,
    pub path_loss_exponent: f64,
    pub distance_m: f64,
    pub noise_figure_db: f64,
    pub reference_distance_m: f64,
}

impl LinkBudget {
    /// 28 GHz, 320 MHz, 37 dBm, exponent 3, 5 dB noise figure, 1 m reference.
    pub fn standard_mmwave() -> Self {
        Self {
            carrier_hz: 28e9,
            bandwidth_hz: 320e6,
            tx_power_dbm: 37.0,
            path_loss_exponent: 3.0,
            distance_m: 40.0,
            noise_figure_db: 5.0,
            reference_distance_m: 1.0,
        }
    }

    /// 3.5 GHz, 1 MHz, otherwise as [`LinkBudget::standard_mmwave`].
    pub fn standard_sub6() -> Self {
        Self { carrier_hz: 3.5e9, bandwidth_hz: 1e6, ..Self::standard_mmwave() }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("carrier_hz", self.carrier_hz),
            ("bandwidth_hz", self.bandwidth_hz),
            ("path_loss_exponent", self.path_loss_exponent),
            ("distance_m", self.distance_m),
            ("reference_distance_m", self.reference_distance_m),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return config(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.noise_figure_db.is_finite() && self.noise_figure_db >= 0.0) {
            return config(format!("noise_figure_db must be non-negative, got {}", self.noise_figure_db));
        }
        if !self.tx_power_dbm.is_finite() {
            return config("tx_power_dbm must be finite");
        }
        Ok(())
    }

    pub fn at_distance(mut self, distance_m: f64) -> Self {
        self.distance_m = distance_m;
        self
    }

    pub fn noise_power_dbm(&self) -> f64 {
        THERMAL_NOISE_DBM_PER_HZ + 10.0 * self.bandwidth_hz.log10() + self.noise_figure_db
    }
}

/// Free-space loss at the reference distance plus `10 n log10(d / d_ref)`.
pub fn path_loss_db(budget: &LinkBudget) -> Result<f64> {
    budget.validate()?;
    if budget.distance_m < budget.reference_distance_m {
        return domain(format!("distance {} m is below the reference distance {} m", budget.distance_m, budget.reference_distance_m));
    }
    let fspl = 20.0 * (4.0 * std::f64::consts::PI * budget.reference_distance_m * budget.carrier_hz / SPEED_OF_LIGHT).log10();
    Ok(fspl + 10.0 * budget.path_loss_exponent * (budget.distance_m / budget.reference_distance_m).log10())
}

/// Per-antenna SNR in dB for an explicit path loss.
pub fn snr_with_loss_db(budget: &LinkBudget, path_loss_db: f64) -> f64 {
    budget.tx_power_dbm - path_loss_db - budget.noise_power_dbm()
}

/// Per-antenna (pre-beamforming) SNR in dB.
pub fn link_snr(budget: &LinkBudget) -> Result<f64> {
    Ok(snr_with_loss_db(budget, path_loss_db(budget)?))
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn mmwave() -> LinkBudget {
        LinkBudget {
            carrier_hz: 28e9,
            bandwidth_hz: 320e6,
            tx_power_dbm: 37.0,
            path_loss_exponent: 3.0,
            distance_m: 40.0,
            noise_figure_db: 5.0,
            reference_distance_m: 1.0,
        }
    }

    #[test]
    fn quadrupling_distance_adds_18_db() {
        let a = path_loss_db(&mmwave().at_distance(10.0)).unwrap();
        let b = path_loss_db(&mmwave().at_distance(40.0)).unwrap();
        assert!((b - a - 30.0 * 4f64.log10()).abs() < 1e-12);
        assert!((b - a - 18.06).abs() < 0.01);
    }

    #[test]
    fn reference_distance_is_free_space_only() {
        let pl = path_loss_db(&mmwave().at_distance(1.0)).unwrap();
        // 20 log10(4 pi f / c) at 28 GHz, 1 m
        assert!((pl - 61.39094).abs() < 1e-4, "{pl}");
    }

    #[test]
    fn forty_metres_at_28ghz() {
        // independent arithmetic: 20*log10(4*pi*28e9/299792458) + 30*log10(40)
        let pl = path_loss_db(&mmwave()).unwrap();
        assert!((pl - 109.45274).abs() < 1e-4, "{pl}");
    }

    #[test]
    fn below_reference_is_domain_error() {
        assert!(path_loss_db(&mmwave().at_distance(0.5)).is_err());
    }

    #[test]
    fn snr_examples() {
        let b = mmwave();
        assert!((snr_with_loss_db(&b, 120.0) - 0.9485).abs() < 1e-3);
        let wide = LinkBudget { bandwidth_hz: 640e6, ..b };
        assert!((link_snr(&b).unwrap() - link_snr(&wide).unwrap() - 3.0103).abs() < 1e-3);
        let degenerate = LinkBudget { bandwidth_hz: 1.0, noise_figure_db: 0.0, ..b };
        assert!((snr_with_loss_db(&degenerate, 0.0) - 211.0).abs() < 1e-12);
    }

    #[test]
    fn validation() {
        assert!(LinkBudget { bandwidth_hz: 0.0, ..mmwave() }.validate().is_err());
        assert!(LinkBudget { noise_figure_db: -1.0, ..mmwave() }.validate().is_err());
    }
}
