use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use super::correlation::{correlation_nmse, sample_correlation, SpatialCorrelation};
use super::fit::{parametric_translate_with, FitSettings};
use super::nonparametric::nonparametric_translate;
use super::spectrum::{correlation_from_spectrum, AngularSpectrum, SpectrumFamily};
use crate::array::ArrayGeometry;
use crate::channel::Band;
use crate::error::{config, Result};
use crate::link::db_to_linear;
use crate::rng::{complex_normal, derive_seed, seeded};

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSettings {
    pub family: SpectrumFamily,
    pub cases: usize,
    /// Means are uniform in `+- mean_range` (radians).
    pub mean_range: f64,
    /// Spreads are uniform in this interval (radians).
    pub spread_range: (f64, f64),
    pub low: ArrayGeometry,
    pub high: ArrayGeometry,
    /// `None` uses the exact low-band correlation.
    pub snapshots: Option<usize>,
    /// Per-element SNR of the snapshots; `None` is noiseless.
    pub snr_db: Option<f64>,
    pub fit: FitSettings,
}

impl Default for EnsembleSettings {
    fn default() -> Self {
        Self {
            family: SpectrumFamily::Gaussian,
            cases: 100,
            mean_range: 45f64.to_radians(),
            spread_range: (2f64.to_radians(), 8f64.to_radians()),
            low: ArrayGeometry::ula(4),
            high: ArrayGeometry::ula(32),
            snapshots: Some(1000),
            snr_db: Some(20.0),
            fit: FitSettings::default(),
        }
    }
}

impl EnsembleSettings {
    pub fn validate(&self) -> Result<()> {
        self.low.validate()?;
        self.high.validate()?;
        if self.cases == 0 {
            return config("ensemble needs at least one case");
        }
        if !(self.mean_range >= 0.0 && self.mean_range <= std::f64::consts::FRAC_PI_2) {
            return config("mean range must lie in [0, pi/2]");
        }
        let (a, b) = self.spread_range;
        if !(a >= 0.0 && b >= a) {
            return config("spread range must be non-negative and ordered");
        }
        if self.snapshots == Some(0) {
            return config("snapshot count must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TranslationCase {
    pub index: usize,
    pub seed: u64,
    pub spectrum: AngularSpectrum,
    pub r_low: SpatialCorrelation,
    pub r_high: SpatialCorrelation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NmseRow {
    pub case: usize,
    pub seed: u64,
    pub family: SpectrumFamily,
    pub mean_deg: f64,
    pub spread_deg: f64,
    pub method: &'static str,
    pub nmse: f64,
}

fn sqrt_psd(r: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let eig = r.clone().symmetric_eigen();
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| Complex64::new(v.max(0.0).sqrt(), 0.0)));
    &eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

/// Draws case `index` of the ensemble: a random spectrum, its low-band
/// sample correlation and the exact high-band correlation.
pub fn draw_case(settings: &EnsembleSettings, master_seed: u64, index: usize) -> Result<TranslationCase> {
    settings.validate()?;
    let seed = derive_seed(master_seed, &[index as u64]);
    let mut rng = seeded(seed);
    let mean = if settings.mean_range > 0.0 { rng.gen_range(-settings.mean_range..=settings.mean_range) } else { 0.0 };
    let (a, b) = settings.spread_range;
    let spread = match settings.family {
        SpectrumFamily::SinglePath => 0.0,
        _ if b > a => rng.gen_range(a..b),
        _ => a,
    };
    let spectrum = AngularSpectrum::single(settings.family, mean, spread);
    let exact_low = correlation_from_spectrum(&settings.low, &spectrum, Band::Sub6)?;
    let mut r_high = correlation_from_spectrum(&settings.high, &spectrum, Band::Mmwave)?;
    let r_low = match settings.snapshots {
        None => {
            let mut r = exact_low;
            if let Some(snr) = settings.snr_db {
                let noise = 1.0 / db_to_linear(snr);
                for i in 0..r.dim() {
                    r.matrix[(i, i)] += Complex64::new(noise, 0.0);
                }
            }
            r
        }
        Some(t) => {
            let root = sqrt_psd(&exact_low.matrix);
            let n = settings.low.len();
            let noise = settings.snr_db.map(|s| 1.0 / db_to_linear(s));
            let mut signal_power = 0.0;
            let snaps: Vec<DVector<Complex64>> = (0..t)
                .map(|_| {
                    let z = DVector::from_fn(n, |_, _| complex_normal(&mut rng, 1.0));
                    let mut x = &root * z;
                    signal_power += x.norm_squared();
                    if let Some(v) = noise {
                        x.iter_mut().for_each(|e| *e += complex_normal(&mut rng, v));
                    }
                    x
                })
                .collect();
            // the reference carries the realised signal power of the snapshots
            r_high.matrix *= Complex64::new(signal_power / (t * n) as f64, 0.0);
            sample_correlation(&snaps, &settings.low, Band::Sub6)?
        }
    };
    Ok(TranslationCase { index, seed, spectrum, r_low, r_high })
}

/// Both translation methods on every case, two rows per case in case order.
pub fn run_translation_ensemble(settings: &EnsembleSettings, master_seed: u64) -> Result<Vec<NmseRow>> {
    settings.validate()?;
    let per_case: Vec<Result<[NmseRow; 2]>> = (0..settings.cases)
        .into_par_iter()
        .map(|i| {
            let case = draw_case(settings, master_seed, i)?;
            let para = parametric_translate_with(&case.r_low, &settings.high, settings.family, Band::Mmwave, &settings.fit)?;
            let nonpara = nonparametric_translate(&case.r_low, &settings.high, Band::Mmwave)?;
            let c = case.spectrum.components[0];
            let row = |method, m: &SpatialCorrelation| -> Result<NmseRow> {
                Ok(NmseRow {
                    case: i,
                    seed: case.seed,
                    family: settings.family,
                    mean_deg: c.mean.to_degrees(),
                    spread_deg: c.spread.to_degrees(),
                    method,
                    nmse: correlation_nmse(&m.matrix, &case.r_high.matrix)?,
                })
            };
            Ok([row("parametric", &para)?, row("nonparametric", &nonpara)?])
        })
        .collect();
    let mut rows = Vec::with_capacity(2 * settings.cases);
    for r in per_case {
        rows.extend(r?);
    }
    Ok(rows)
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}
