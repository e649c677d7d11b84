//! Spatial correlation estimation and translation from a small low-band
//! array to a large high-band array.

mod correlation;
mod ensemble;
mod fit;
mod neldermead;
mod nonparametric;
mod spectrum;

pub use correlation::{correlation_nmse, sample_correlation, SpatialCorrelation, HERMITIAN_TOL, PSD_TOL};
pub use ensemble::{draw_case, median, run_translation_ensemble, EnsembleSettings, NmseRow, TranslationCase};
pub use fit::{fit_angular_spectrum, fit_angular_spectrum_with, parametric_translate, parametric_translate_with, FitSettings};
pub use nonparametric::{nonparametric_translate, UniformSpline, TAPER_FRACTION};
pub use spectrum::{
    correlation_from_spectrum, AngularSpectrum, SpectrumComponent, SpectrumFamily, GAUSSIAN_SUPPORT, MAX_COMPONENTS, QUADRATURE_TOL,
};
