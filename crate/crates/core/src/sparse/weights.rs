use crate::codebook::AngleGrid;
use crate::error::{config, Result};

pub const DEFAULT_WEIGHT_FLOOR: f64 = 0.1;
/// Default mismatch kernel width, in grid steps.
pub const DEFAULT_SPREAD_STEPS: f64 = 2.0;

/// Per-coefficient penalties for the weighted solver.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return config("weight vector is empty");
        }
        if let Some(w) = values.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return config(format!("weights must be finite and positive, found {w}"));
        }
        Ok(Self(values))
    }

    pub fn uniform(len: usize) -> Self {
        Self(vec![1.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self(self.0.iter().map(|w| w * factor).collect())
    }
}

/// Normalised angular power on the transmit and receive grids.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleSpectrum {
    pub tx: Vec<f64>,
    pub rx: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OobWeights {
    pub weights: WeightVector,
    /// Set when the spectrum carried no energy and uniform weights were returned.
    pub degenerate: bool,
}

/// Convolves `spectrum` with a Gaussian in sine-angle of width `spread`
/// truncated at three widths. `spread == 0` is the identity.
pub fn smooth_spectrum(spectrum: &[f64], grid: &AngleGrid, spread: f64) -> Vec<f64> {
    if spread <= 0.0 {
        return spectrum.to_vec();
    }
    let s = grid.sines();
    (0..s.len())
        .map(|i| {
            s.iter()
                .zip(spectrum)
                .filter(|(sk, _)| (s[i] - **sk).abs() <= 3.0 * spread)
                .map(|(sk, p)| p * (-(s[i] - sk).powi(2) / (2.0 * spread * spread)).exp())
                .sum()
        })
        .collect()
}

/// `w_ij = 1 / (floor + s_ij / max s)` with `s_ij = S_tx(i) S_rx(j)` after smoothing.
///
/// `spread` is in sine units; use `DEFAULT_SPREAD_STEPS * grid.sin_step()` for the default.
pub fn oob_weights(spectrum: &AngleSpectrum, tx_grid: &AngleGrid, rx_grid: &AngleGrid, spread: f64, floor: f64) -> Result<OobWeights> {
    if spectrum.tx.len() != tx_grid.len() || spectrum.rx.len() != rx_grid.len() {
        return config("spectrum length does not match the grid");
    }
    if !(spread >= 0.0 && spread.is_finite()) {
        return config(format!("mismatch spread {spread} must be non-negative"));
    }
    if !(floor > 0.0 && floor.is_finite()) {
        return config(format!("weight floor {floor} must be positive"));
    }
    if spectrum.tx.iter().chain(&spectrum.rx).any(|p| !(*p >= 0.0 && p.is_finite())) {
        return config("angle spectrum must be non-negative");
    }
    let st = smooth_spectrum(&spectrum.tx, tx_grid, spread);
    let sr = smooth_spectrum(&spectrum.rx, rx_grid, spread);
    let peak = st.iter().cloned().fold(0.0, f64::max) * sr.iter().cloned().fold(0.0, f64::max);
    let n = st.len() * sr.len();
    if peak <= 0.0 {
        log::warn!("out-of-band spectrum is empty, falling back to uniform weights");
        return Ok(OobWeights { weights: WeightVector::uniform(n), degenerate: true });
    }
    let values = st.iter().flat_map(|t| sr.iter().map(move |r| 1.0 / (floor + t * r / peak))).collect();
    Ok(OobWeights { weights: WeightVector(values), degenerate: false })
}
