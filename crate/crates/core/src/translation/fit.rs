use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;

use super::correlation::SpatialCorrelation;
use super::neldermead::nelder_mead;
use super::spectrum::{approximate_lag, correlation_from_spectrum, AngularSpectrum, SpectrumComponent, SpectrumFamily, MAX_COMPONENTS};
use crate::array::ArrayGeometry;
use crate::channel::Band;
use crate::error::{config, domain, Error, Result};

const MIN_SPREAD: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct FitSettings {
    /// Mixture size, 1..=3.
    pub components: usize,
    /// Mean-angle grid step (radians) of the coarse search.
    pub mean_step: f64,
    /// Candidate spreads (radians) of the coarse search.
    pub spreads: Vec<f64>,
    /// Nelder-Mead refinement with the exact correlation model.
    pub refine: bool,
}

impl Default for FitSettings {
    fn default() -> Self {
        let spreads = [0.25, 0.5, 1.0, 2.0, 3.0, 4.0, 6.0, 8.0, 12.0, 16.0, 24.0, 32.0, 45.0, 60.0, 90.0]
            .iter()
            .map(|d: &f64| d.to_radians())
            .collect();
        Self { components: 1, mean_step: 0.5f64.to_radians(), spreads, refine: true }
    }
}

/// Normalised Hermitian-averaged lag sequence `r_k`, `k = 0..N`, with `r_0 = 1`.
fn lag_sequence(r: &SpatialCorrelation) -> Result<Vec<Complex64>> {
    let n = r.dim();
    let power = r.trace() / n as f64;
    if !(power > 0.0) {
        return domain("correlation has zero trace");
    }
    Ok((0..n)
        .map(|k| {
            let mut s = Complex64::new(0.0, 0.0);
            for m in k..n {
                s += r.matrix[(m, m - k)] + r.matrix[(m - k, m)].conj();
            }
            s / (2.0 * (n - k) as f64 * power)
        })
        .collect())
}

/// Squared Frobenius distance between the normalised correlation and a
/// Toeplitz model, up to the constant diagonal term.
fn misfit(lags: &[Complex64], spacing: f64, model: impl Fn(f64) -> Complex64) -> f64 {
    let n = lags.len();
    (1..n).map(|k| 2.0 * (n - k) as f64 * (model(spacing * k as f64) - lags[k]).norm_sqr()).sum()
}

fn decode(family: SpectrumFamily, k: usize, p: &[f64]) -> AngularSpectrum {
    let per = if family == SpectrumFamily::SinglePath { 1 } else { 2 };
    let logits: Vec<f64> = std::iter::once(0.0).chain(p[per * k..].iter().cloned()).collect();
    let top = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - top).exp()).collect();
    let total: f64 = exps.iter().sum();
    let components = (0..k)
        .map(|i| SpectrumComponent {
            weight: exps[i] / total,
            mean: p[per * i].clamp(-FRAC_PI_2, FRAC_PI_2),
            spread: if per == 2 { p[per * i + 1].exp().clamp(MIN_SPREAD, FRAC_PI_2) } else { 0.0 },
        })
        .collect();
    AngularSpectrum { family, components }
}

fn encode(spectrum: &AngularSpectrum) -> Vec<f64> {
    let mut p = Vec::new();
    for c in &spectrum.components {
        p.push(c.mean);
        if spectrum.family != SpectrumFamily::SinglePath {
            p.push(c.spread.max(MIN_SPREAD).ln());
        }
    }
    let w0 = spectrum.components[0].weight.max(1e-12);
    for c in &spectrum.components[1..] {
        p.push((c.weight.max(1e-12) / w0).ln());
    }
    p
}

fn coarse_single(lags: &[Complex64], spacing: f64, family: SpectrumFamily, settings: &FitSettings) -> AngularSpectrum {
    // best mean per candidate spread under the small-spread approximation,
    // then the exact model arbitrates between spreads
    let steps = (std::f64::consts::PI / settings.mean_step).round() as usize;
    let spreads: &[f64] = if family == SpectrumFamily::SinglePath { &[0.0] } else { &settings.spreads };
    let candidates = spreads.iter().map(|&spread| {
        let mut best = (f64::INFINITY, 0.0);
        for i in 0..=steps {
            let mean = -FRAC_PI_2 + i as f64 * settings.mean_step;
            let c = SpectrumComponent { weight: 1.0, mean, spread };
            let v = misfit(lags, spacing, |x| approximate_lag(family, &c, x));
            if v < best.0 {
                best = (v, mean);
            }
        }
        AngularSpectrum::single(family, best.1, spread)
    });
    candidates
        .map(|s| (misfit(lags, spacing, |x| s.lag_correlation(x)), s))
        .fold(None, |acc: Option<(f64, AngularSpectrum)>, (v, s)| match acc {
            Some((bv, bs)) if bv <= v => Some((bv, bs)),
            _ => Some((v, s)),
        })
        .map(|(_, s)| s)
        .expect("at least one candidate spread")
}

fn coarse_mixture(lags: &[Complex64], spacing: f64, family: SpectrumFamily, k: usize, settings: &FitSettings) -> AngularSpectrum {
    // Bartlett scan of the Toeplitz model for the initial means
    let steps = (std::f64::consts::PI / settings.mean_step).round() as usize;
    let n = lags.len();
    let scan: Vec<(f64, f64)> = (0..=steps)
        .map(|i| {
            let mean = -FRAC_PI_2 + i as f64 * settings.mean_step;
            let u = std::f64::consts::TAU * spacing * mean.sin();
            let mut p = n as f64;
            for (j, r) in lags.iter().enumerate().skip(1) {
                p += 2.0 * (n - j) as f64 * (r * Complex64::from_polar(1.0, -u * j as f64)).re;
            }
            (mean, p)
        })
        .collect();
    let mut peaks: Vec<(f64, f64)> = (0..scan.len())
        .filter(|&i| (i == 0 || scan[i].1 > scan[i - 1].1) && (i + 1 == scan.len() || scan[i].1 >= scan[i + 1].1))
        .map(|i| scan[i])
        .collect();
    peaks.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut means: Vec<f64> = peaks.iter().take(k).map(|p| p.0).collect();
    while means.len() < k {
        let j = means.len();
        means.push(-FRAC_PI_2 + (j as f64 + 0.5) * std::f64::consts::PI / k as f64);
    }
    let spread = if family == SpectrumFamily::SinglePath { 0.0 } else { 2f64.to_radians() };
    AngularSpectrum {
        family,
        components: means.into_iter().map(|mean| SpectrumComponent { weight: 1.0 / k as f64, mean, spread }).collect(),
    }
}

/// Least-squares fit of an angular spectrum to a low-band correlation.
pub fn fit_angular_spectrum(r_low: &SpatialCorrelation, family: SpectrumFamily) -> Result<AngularSpectrum> {
    fit_angular_spectrum_with(r_low, family, &FitSettings::default())
}

pub fn fit_angular_spectrum_with(r_low: &SpatialCorrelation, family: SpectrumFamily, settings: &FitSettings) -> Result<AngularSpectrum> {
    if !r_low.geometry.is_linear() {
        return Err(Error::UnsupportedGeometry("spectrum fit needs a linear array".into()));
    }
    if settings.components == 0 || settings.components > MAX_COMPONENTS {
        return config(format!("mixture size must be 1..={MAX_COMPONENTS}"));
    }
    if !(settings.mean_step > 0.0) {
        return config("mean grid step must be positive");
    }
    if family != SpectrumFamily::SinglePath && settings.spreads.iter().all(|s| !(*s >= 0.0)) {
        return config("spread grid must contain a non-negative value");
    }
    let lags = lag_sequence(r_low)?;
    let d = r_low.geometry.spacing;
    let k = settings.components;
    let start = if k == 1 { coarse_single(&lags, d, family, settings) } else { coarse_mixture(&lags, d, family, k, settings) };
    if !settings.refine {
        return Ok(start);
    }
    let x0 = encode(&start);
    let step: Vec<f64> = x0
        .iter()
        .enumerate()
        .map(|(i, _)| {
            let per = if family == SpectrumFamily::SinglePath { 1 } else { 2 };
            if i >= per * k {
                0.5
            } else if i % per == 0 {
                settings.mean_step
            } else {
                0.3
            }
        })
        .collect();
    let objective = |p: &[f64]| {
        let s = decode(family, k, p);
        misfit(&lags, d, |x| s.lag_correlation(x))
    };
    let best = nelder_mead(objective, &x0, &step, 400 * x0.len(), 1e-24, 1e-12);
    Ok(decode(family, k, &best.x))
}

/// Fits the low-band spectrum and re-evaluates it on the target array,
/// keeping the low-band average element power.
pub fn parametric_translate(
    r_low: &SpatialCorrelation,
    target: &ArrayGeometry,
    family: SpectrumFamily,
    band: Band,
) -> Result<SpatialCorrelation> {
    parametric_translate_with(r_low, target, family, band, &FitSettings::default())
}

pub fn parametric_translate_with(
    r_low: &SpatialCorrelation,
    target: &ArrayGeometry,
    family: SpectrumFamily,
    band: Band,
    settings: &FitSettings,
) -> Result<SpatialCorrelation> {
    let spectrum = fit_angular_spectrum_with(r_low, family, settings)?;
    let power = r_low.trace() / r_low.dim() as f64;
    let mut out = correlation_from_spectrum(target, &spectrum, band)?;
    out.matrix *= Complex64::new(power, 0.0);
    Ok(out)
}
