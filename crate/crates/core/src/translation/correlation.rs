use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::array::ArrayGeometry;
use crate::channel::Band;
use crate::error::{config, domain, Result};

/// Hermitian tolerance of emitted correlations.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Allowed negative eigenvalue, relative to `trace / N`.
pub const PSD_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct SpatialCorrelation {
    pub matrix: DMatrix<Complex64>,
    pub band: Band,
    pub geometry: ArrayGeometry,
}

impl SpatialCorrelation {
    pub fn new(matrix: DMatrix<Complex64>, band: Band, geometry: ArrayGeometry) -> Result<Self> {
        geometry.validate()?;
        if matrix.nrows() != matrix.ncols() || matrix.nrows() != geometry.len() {
            return config(format!("correlation is {}x{} for a {}-element array", matrix.nrows(), matrix.ncols(), geometry.len()));
        }
        Ok(Self { matrix, band, geometry })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn hermitian_error(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_part(&self.matrix).symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Hermitian within [`HERMITIAN_TOL`] and PSD within [`PSD_TOL`] `* trace / N`.
    pub fn check(&self) -> Result<()> {
        let h = self.hermitian_error();
        if !(h <= HERMITIAN_TOL) {
            return domain(format!("correlation is not Hermitian (max asymmetry {h:e})"));
        }
        let floor = -PSD_TOL * self.trace().abs() / self.dim() as f64;
        let m = self.min_eigenvalue();
        if !(m >= floor) {
            return domain(format!("correlation is not positive semidefinite (eigenvalue {m:e})"));
        }
        Ok(())
    }
}

pub(crate) fn hermitian_part(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Clips negative eigenvalues at zero when the smallest one is below
/// `-1e-12 * trace / N`, then rescales to keep `target_trace`.
pub(crate) fn project_psd(m: &DMatrix<Complex64>, target_trace: f64) -> DMatrix<Complex64> {
    let h = hermitian_part(m);
    let n = h.nrows() as f64;
    let eig = h.clone().symmetric_eigen();
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if min >= -1e-12 * target_trace.abs() / n {
        return h;
    }
    let clipped = eig.eigenvalues.map(|v| v.max(0.0));
    let total: f64 = clipped.iter().sum();
    let scale = if total > 0.0 { target_trace / total } else { 0.0 };
    let d = DMatrix::from_diagonal(&clipped.map(|v| Complex64::new(v * scale, 0.0)));
    hermitian_part(&(&eig.eigenvectors * d * eig.eigenvectors.adjoint()))
}

/// Average of outer products `v v^H`.
pub fn sample_correlation(snapshots: &[DVector<Complex64>], geometry: &ArrayGeometry, band: Band) -> Result<SpatialCorrelation> {
    let Some(first) = snapshots.first() else {
        return domain("no snapshots to average");
    };
    let n = first.len();
    if snapshots.iter().any(|s| s.len() != n) {
        return config("snapshots have different lengths");
    }
    let mut r = DMatrix::<Complex64>::zeros(n, n);
    for s in snapshots {
        r.ger(Complex64::new(1.0, 0.0), s, &s.conjugate(), Complex64::new(1.0, 0.0));
    }
    r /= Complex64::new(snapshots.len() as f64, 0.0);
    let trace = r.diagonal().iter().map(|z| z.re).sum();
    SpatialCorrelation::new(project_psd(&r, trace), band, geometry.clone())
}

/// `||R_hat - R||_F^2 / ||R||_F^2`.
pub fn correlation_nmse(estimate: &DMatrix<Complex64>, truth: &DMatrix<Complex64>) -> Result<f64> {
    if estimate.shape() != truth.shape() {
        return config("correlation matrices differ in size");
    }
    let denom = truth.norm_squared();
    if denom == 0.0 {
        return domain("reference correlation is zero");
    }
    Ok((estimate - truth).norm_squared() / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::{steering_vector, Direction};
    use crate::rng::{complex_normal, seeded};

    #[test]
    fn single_snapshot_is_rank_one() {
        let g = ArrayGeometry::ula(4);
        let v = DVector::from_vec(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 2.0),
            Complex64::new(-1.0, 1.0),
            Complex64::new(0.5, 0.0),
        ]);
        let r = sample_correlation(&[v.clone()], &g, Band::Sub6).unwrap();
        assert!((&r.matrix - &v * v.adjoint()).norm() < 1e-12);
        let eig = r.matrix.clone().symmetric_eigen().eigenvalues;
        assert_eq!(eig.iter().filter(|e| e.abs() > 1e-9).count(), 1);
        r.check().unwrap();
    }

    #[test]
    fn white_snapshots_decorrelate() {
        let g = ArrayGeometry::ula(4);
        let mut rng = seeded(3);
        let snaps: Vec<_> = (0..10_000).map(|_| DVector::from_fn(4, |_, _| complex_normal(&mut rng, 1.0))).collect();
        let r = sample_correlation(&snaps, &g, Band::Sub6).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert!(r.matrix[(i, j)].norm() < 0.05);
                }
            }
        }
    }

    #[test]
    fn steering_snapshots_give_outer_product() {
        let g = ArrayGeometry::ula(8);
        let a = steering_vector(&g, Direction::azimuth(0.4)).unwrap();
        let snaps: Vec<_> = (0..5).map(|k| &a * Complex64::from_polar(1.0, k as f64)).collect();
        let r = sample_correlation(&snaps, &g, Band::Mmwave).unwrap();
        assert!((r.matrix - &a * a.adjoint()).norm() < 1e-12);
    }

    #[test]
    fn nmse_examples() {
        let r = DMatrix::from_fn(3, 3, |i, j| Complex64::new(1.0 / (1.0 + (i + j) as f64), i as f64 - j as f64));
        assert_eq!(correlation_nmse(&r, &r).unwrap(), 0.0);
        assert!((correlation_nmse(&DMatrix::zeros(3, 3), &r).unwrap() - 1.0).abs() < 1e-15);
        assert!((correlation_nmse(&(&r * Complex64::new(2.0, 0.0)), &r).unwrap() - 1.0).abs() < 1e-15);
        assert!(correlation_nmse(&r, &DMatrix::zeros(3, 3)).is_err());
        assert!(sample_correlation(&[], &ArrayGeometry::ula(2), Band::Sub6).is_err());
    }

    #[test]
    fn psd_projection_repairs_and_keeps_trace() {
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0), Complex64::new(2.0, 0.0), Complex64::new(1.0, 0.0)],
        );
        let p = project_psd(&m, 2.0);
        let eig = p.clone().symmetric_eigen().eigenvalues;
        assert!(eig.iter().all(|e| *e >= -1e-12));
        assert!((p.diagonal().iter().map(|z| z.re).sum::<f64>() - 2.0).abs() < 1e-12);
    }
}
