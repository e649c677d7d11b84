//! Angular priors extracted from the sub-6 GHz channel.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::weights::AngleSpectrum;
use crate::array::ArrayGeometry;
use crate::codebook::AngleGrid;
use crate::error::{config, Result};
use crate::rng::{complex_normal, seeded};

pub const DEFAULT_SNAPSHOTS: usize = 100;
pub const DEFAULT_PEAKS: usize = 2;

/// Angular power on the mmWave grids plus the dominant directions.
#[derive(Debug, Clone, PartialEq)]
pub struct OobPrior {
    pub spectrum: AngleSpectrum,
    /// Strongest departure directions, strongest first (radians).
    pub tx_angles: Vec<f64>,
    /// Strongest arrival directions, strongest first (radians).
    pub rx_angles: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorSettings {
    pub snapshots: usize,
    /// Per-entry SNR of each sub-6 channel snapshot (linear).
    pub snr: f64,
    pub peaks: usize,
}

impl Default for PriorSettings {
    fn default() -> Self {
        Self { snapshots: DEFAULT_SNAPSHOTS, snr: 1e3, peaks: DEFAULT_PEAKS }
    }
}

fn normalise(v: &mut [f64]) {
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        v.iter_mut().for_each(|x| *x /= s);
    }
}

/// Indices of the `k` largest local maxima, strongest first. Falls back to
/// the global maximum when the spectrum has no interior peak.
pub fn spectrum_peaks(spectrum: &[f64], k: usize) -> Vec<usize> {
    let n = spectrum.len();
    let mut peaks: Vec<usize> = (0..n)
        .filter(|&i| {
            let left = i == 0 || spectrum[i] > spectrum[i - 1];
            let right = i + 1 == n || spectrum[i] >= spectrum[i + 1];
            left && right && spectrum[i] > 0.0
        })
        .collect();
    peaks.sort_by(|&a, &b| spectrum[b].total_cmp(&spectrum[a]).then(a.cmp(&b)));
    peaks.truncate(k);
    if peaks.is_empty() && n > 0 {
        let best = (0..n).fold(0, |b, i| if spectrum[i] > spectrum[b] { i } else { b });
        peaks.push(best);
    }
    peaks
}

/// Averaged beamspace periodogram of noisy sub-6 channel snapshots,
/// evaluated at the mmWave grid directions.
pub fn estimate_prior(
    h_sub6: &DMatrix<Complex64>,
    sub6_tx: &ArrayGeometry,
    sub6_rx: &ArrayGeometry,
    tx_grid: &AngleGrid,
    rx_grid: &AngleGrid,
    settings: &PriorSettings,
    seed: u64,
) -> Result<OobPrior> {
    if h_sub6.nrows() != sub6_rx.len() || h_sub6.ncols() != sub6_tx.len() {
        return config("sub-6 channel does not match the sub-6 arrays");
    }
    if settings.snapshots == 0 {
        return config("at least one sub-6 snapshot is required");
    }
    if !(settings.snr > 0.0) {
        return config(format!("sub-6 snr {} must be positive", settings.snr));
    }
    let at = tx_grid.steering_matrix(sub6_tx);
    let ar = rx_grid.steering_matrix(sub6_rx);
    let var = 1.0 / settings.snr;
    let mut rng = seeded(seed);
    let mut ptx = vec![0.0; tx_grid.len()];
    let mut prx = vec![0.0; rx_grid.len()];
    for _ in 0..settings.snapshots {
        let noisy = h_sub6.map(|h| h + complex_normal(&mut rng, var));
        let bt = &noisy * &at;
        let br = ar.ad_mul(&noisy);
        for (p, col) in ptx.iter_mut().zip(bt.column_iter()) {
            *p += col.norm_squared();
        }
        for (p, row) in prx.iter_mut().zip(br.row_iter()) {
            *p += row.norm_squared();
        }
    }
    normalise(&mut ptx);
    normalise(&mut prx);
    let tx_angles = spectrum_peaks(&ptx, settings.peaks).into_iter().map(|i| tx_grid.angles()[i]).collect();
    let rx_angles = spectrum_peaks(&prx, settings.peaks).into_iter().map(|i| rx_grid.angles()[i]).collect();
    Ok(OobPrior { spectrum: AngleSpectrum { tx: ptx, rx: prx }, tx_angles, rx_angles })
}

/// Prior with unit mass split over the grid points nearest to known angles.
pub fn prior_from_angles(tx_angles: &[f64], rx_angles: &[f64], tx_grid: &AngleGrid, rx_grid: &AngleGrid) -> OobPrior {
    let mass = |angles: &[f64], grid: &AngleGrid| {
        let mut v = vec![0.0; grid.len()];
        for &a in angles {
            v[grid.nearest(a)] += 1.0;
        }
        normalise(&mut v);
        v
    };
    OobPrior {
        spectrum: AngleSpectrum { tx: mass(tx_angles, tx_grid), rx: mass(rx_angles, rx_grid) },
        tx_angles: tx_angles.to_vec(),
        rx_angles: rx_angles.to_vec(),
    }
}
