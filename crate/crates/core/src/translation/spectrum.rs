use std::f64::consts::{FRAC_PI_2, TAU};

use nalgebra::DMatrix;
use num_complex::Complex64;
use quadrature::integrate;

use super::correlation::{project_psd, SpatialCorrelation};
use crate::array::ArrayGeometry;
use crate::channel::Band;
use crate::error::{config, Error, Result};

/// Absolute tolerance of the spectrum integrals.
pub const QUADRATURE_TOL: f64 = 1e-10;
/// Gaussian components are integrated over `mean +- GAUSSIAN_SUPPORT * spread`.
pub const GAUSSIAN_SUPPORT: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpectrumFamily {
    SinglePath,
    /// Uniform in angle over `mean +- spread`.
    UniformSector,
    /// Normal in angle with standard deviation `spread`, truncated to the half plane.
    Gaussian,
}

impl SpectrumFamily {
    pub const ALL: [SpectrumFamily; 3] = [Self::SinglePath, Self::UniformSector, Self::Gaussian];

    pub fn name(&self) -> &'static str {
        match self {
            Self::SinglePath => "single-path",
            Self::UniformSector => "uniform-sector",
            Self::Gaussian => "gaussian",
        }
    }
}

impl std::str::FromStr for SpectrumFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown spectrum family '{s}', expected single-path, uniform-sector or gaussian")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumComponent {
    pub weight: f64,
    /// Radians.
    pub mean: f64,
    /// Radians; ignored by the single-path family.
    pub spread: f64,
}

/// Mixture of up to three components of one family.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularSpectrum {
    pub family: SpectrumFamily,
    pub components: Vec<SpectrumComponent>,
}

pub const MAX_COMPONENTS: usize = 3;

impl AngularSpectrum {
    pub fn single(family: SpectrumFamily, mean: f64, spread: f64) -> Self {
        Self { family, components: vec![SpectrumComponent { weight: 1.0, mean, spread }] }
    }

    pub fn validate(&self) -> Result<()> {
        if self.components.is_empty() || self.components.len() > MAX_COMPONENTS {
            return config(format!("spectrum needs 1..={MAX_COMPONENTS} components"));
        }
        let mut total = 0.0;
        for c in &self.components {
            if !(c.weight >= 0.0 && c.spread >= 0.0 && c.mean.is_finite() && c.spread.is_finite()) {
                return config("spectrum weights and spreads must be non-negative");
            }
            if c.mean.abs() > FRAC_PI_2 + 1e-12 {
                return config(format!("mean angle {} outside [-pi/2, pi/2]", c.mean));
            }
            total += c.weight;
        }
        if (total - 1.0).abs() > 1e-9 {
            return config(format!("component weights sum to {total}, not 1"));
        }
        Ok(())
    }

    /// `E[exp(j 2 pi x sin(theta))]` for a displacement of `x` wavelengths.
    pub fn lag_correlation(&self, x: f64) -> Complex64 {
        self.components.iter().map(|c| component_lag(self.family, c, x) * c.weight).sum()
    }
}

fn phasor(x: f64, theta: f64) -> Complex64 {
    Complex64::from_polar(1.0, TAU * x * theta.sin())
}

/// Integral of `density(theta) * exp(j 2 pi x sin theta)` over `[a, b]`, split
/// into panels spanning at most one phase cycle each.
fn oscillatory_integral<F: Fn(f64) -> f64>(density: F, a: f64, b: f64, x: f64) -> Complex64 {
    if b <= a {
        return Complex64::new(0.0, 0.0);
    }
    let panels = ((x.abs() * (b - a)).ceil() as usize).max(1) + 1;
    let width = (b - a) / panels as f64;
    let tol = QUADRATURE_TOL / panels as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for p in 0..panels {
        let lo = a + p as f64 * width;
        let hi = if p + 1 == panels { b } else { lo + width };
        let re = integrate(|t| density(t) * (TAU * x * t.sin()).cos(), lo, hi, tol).integral;
        let im = integrate(|t| density(t) * (TAU * x * t.sin()).sin(), lo, hi, tol).integral;
        acc += Complex64::new(re, im);
    }
    acc
}

fn component_lag(family: SpectrumFamily, c: &SpectrumComponent, x: f64) -> Complex64 {
    if family == SpectrumFamily::SinglePath || c.spread == 0.0 {
        return phasor(x, c.mean);
    }
    match family {
        SpectrumFamily::UniformSector => {
            let (a, b) = ((c.mean - c.spread).max(-FRAC_PI_2), (c.mean + c.spread).min(FRAC_PI_2));
            if b - a <= 0.0 {
                return phasor(x, c.mean);
            }
            oscillatory_integral(|_| 1.0, a, b, x) / (b - a)
        }
        SpectrumFamily::Gaussian => {
            let half = GAUSSIAN_SUPPORT * c.spread;
            let (a, b) = ((c.mean - half).max(-FRAC_PI_2), (c.mean + half).min(FRAC_PI_2));
            let density = |t: f64| (-(t - c.mean).powi(2) / (2.0 * c.spread * c.spread)).exp();
            let mass = oscillatory_integral(density, a, b, 0.0).re;
            if !(mass > 0.0) {
                return phasor(x, c.mean);
            }
            oscillatory_integral(density, a, b, x) / mass
        }
        SpectrumFamily::SinglePath => unreachable!(),
    }
}

/// Closed-form small-spread approximation used to seed the fit.
pub(crate) fn approximate_lag(family: SpectrumFamily, c: &SpectrumComponent, x: f64) -> Complex64 {
    let base = phasor(x, c.mean);
    let width = TAU * x * c.mean.cos() * c.spread;
    match family {
        SpectrumFamily::SinglePath => base,
        SpectrumFamily::Gaussian => base * (-0.5 * width * width).exp(),
        SpectrumFamily::UniformSector => {
            if width.abs() < 1e-12 {
                base
            } else {
                base * (width.sin() / width)
            }
        }
    }
}

pub(crate) fn toeplitz_from_lags(n: usize, lag: impl Fn(usize) -> Complex64) -> DMatrix<Complex64> {
    let r: Vec<Complex64> = (0..n).map(lag).collect();
    DMatrix::from_fn(n, n, |m, k| if m >= k { r[m - k] } else { r[k - m].conj() })
}

/// `R[m, n] = E[exp(j 2 pi d (m - n) sin theta)]` on a linear array.
pub fn correlation_from_spectrum(geometry: &ArrayGeometry, spectrum: &AngularSpectrum, band: Band) -> Result<SpatialCorrelation> {
    geometry.validate()?;
    spectrum.validate()?;
    if !geometry.is_linear() {
        return Err(Error::UnsupportedGeometry("correlation model needs a linear array".into()));
    }
    let d = geometry.spacing;
    let r = toeplitz_from_lags(geometry.len(), |k| spectrum.lag_correlation(d * k as f64));
    let n = geometry.len() as f64;
    SpatialCorrelation::new(project_psd(&r, n), band, geometry.clone())
}
