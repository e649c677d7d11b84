use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::array::ArrayGeometry;
use crate::codebook::{AngleGrid, Pairing, TrainingDictionary};
use crate::error::{config, Result};
use crate::rng::{complex_normal, seeded};

/// Transmit/receive arrays together with their beamspace grids.
#[derive(Debug, Clone)]
pub struct Beamspace {
    pub tx: ArrayGeometry,
    pub rx: ArrayGeometry,
    pub tx_grid: AngleGrid,
    pub rx_grid: AngleGrid,
    /// `N_tx x G_tx` steering matrix of the transmit grid.
    pub tx_steering: DMatrix<Complex64>,
    /// `N_rx x G_rx` steering matrix of the receive grid.
    pub rx_steering: DMatrix<Complex64>,
}

impl Beamspace {
    pub fn new(tx: ArrayGeometry, rx: ArrayGeometry, tx_grid: AngleGrid, rx_grid: AngleGrid) -> Result<Self> {
        tx.validate()?;
        rx.validate()?;
        tx_grid.validate_for(&tx)?;
        rx_grid.validate_for(&rx)?;
        let tx_steering = tx_grid.steering_matrix(&tx);
        let rx_steering = rx_grid.steering_matrix(&rx);
        Ok(Self { tx, rx, tx_grid, rx_grid, tx_steering, rx_steering })
    }

    /// Linear arrays with `oversampling * N` sine-uniform grid points per side.
    pub fn uniform(tx: ArrayGeometry, rx: ArrayGeometry, oversampling: usize) -> Result<Self> {
        let tg = AngleGrid::uniform_sin(oversampling.max(1) * tx.len());
        let rg = AngleGrid::uniform_sin(oversampling.max(1) * rx.len());
        Self::new(tx, rx, tg, rg)
    }

    pub fn size(&self) -> usize {
        self.tx_grid.len() * self.rx_grid.len()
    }

    /// Flat coefficient index of grid pair `(tx, rx)`.
    pub fn flat(&self, tx: usize, rx: usize) -> usize {
        tx * self.rx_grid.len() + rx
    }

    pub fn unflat(&self, idx: usize) -> (usize, usize) {
        (idx / self.rx_grid.len(), idx % self.rx_grid.len())
    }

    /// `|a_rx(theta_j)^H H a_tx(phi_i)|^2` for every grid pair, flat-indexed.
    pub fn pair_gains(&self, h: &DMatrix<Complex64>) -> Vec<f64> {
        // (G_rx x G_tx), column-major so entry (j, i) sits at i * G_rx + j
        let b = self.rx_steering.adjoint() * h * &self.tx_steering;
        b.iter().map(|z| z.norm_sqr()).collect()
    }
}

/// Linear map from beamspace coefficients to training observations.
#[derive(Debug, Clone)]
pub enum SensingOperator {
    /// Explicit `M x G` matrix (zipped pairing or arbitrary rows).
    Dense(DMatrix<Complex64>),
    /// Cartesian pairing: observation `(p, q)` at flat index `p * M_rx + q`
    /// equals `sum_ij tx[p, i] x[i, j] rx[q, j]`.
    Kronecker { tx: DMatrix<Complex64>, rx: DMatrix<Complex64> },
}

impl SensingOperator {
    pub fn rows(&self) -> usize {
        match self {
            Self::Dense(a) => a.nrows(),
            Self::Kronecker { tx, rx } => tx.nrows() * rx.nrows(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            Self::Dense(a) => a.ncols(),
            Self::Kronecker { tx, rx } => tx.ncols() * rx.ncols(),
        }
    }

    pub fn apply(&self, x: &DVector<Complex64>) -> DVector<Complex64> {
        match self {
            Self::Dense(a) => a * x,
            Self::Kronecker { tx, rx } => {
                // x viewed column-major as X^T (G_rx x G_tx)
                let xt = DMatrix::from_column_slice(rx.ncols(), tx.ncols(), x.as_slice());
                let yt = rx * xt * tx.transpose();
                DVector::from_column_slice(yt.as_slice())
            }
        }
    }

    pub fn adjoint(&self, y: &DVector<Complex64>) -> DVector<Complex64> {
        match self {
            Self::Dense(a) => a.ad_mul(y),
            Self::Kronecker { tx, rx } => {
                let yt = DMatrix::from_column_slice(rx.nrows(), tx.nrows(), y.as_slice());
                let gt = rx.ad_mul(&yt) * tx.conjugate();
                DVector::from_column_slice(gt.as_slice())
            }
        }
    }

    pub fn column_norms(&self) -> Vec<f64> {
        match self {
            Self::Dense(a) => a.column_iter().map(|c| c.norm()).collect(),
            Self::Kronecker { tx, rx } => {
                let rn: Vec<f64> = rx.column_iter().map(|c| c.norm()).collect();
                tx.column_iter()
                    .flat_map(|c| {
                        let t = c.norm();
                        rn.iter().map(move |r| t * r).collect::<Vec<_>>()
                    })
                    .collect()
            }
        }
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        match self {
            Self::Dense(a) => a.clone(),
            Self::Kronecker { tx, rx } => {
                let (mr, gr) = (rx.nrows(), rx.ncols());
                DMatrix::from_fn(self.rows(), self.cols(), |row, col| {
                    let (p, q) = (row / mr, row % mr);
                    let (i, j) = (col / gr, col % gr);
                    tx[(p, i)] * rx[(q, j)]
                })
            }
        }
    }

    /// Largest eigenvalue of `A^H A` by power iteration.
    pub fn spectral_norm_sq(&self, iterations: usize) -> f64 {
        let n = self.cols();
        let mut v = DVector::from_element(n, Complex64::new(1.0 / (n as f64).sqrt(), 0.0));
        let mut est = 0.0;
        for _ in 0..iterations {
            let w = self.adjoint(&self.apply(&v));
            let norm = w.norm();
            if norm == 0.0 {
                return 0.0;
            }
            est = norm;
            v = w / Complex64::new(norm, 0.0);
        }
        est
    }
}

#[derive(Debug, Clone)]
pub struct BeamSearchProblem {
    pub sensing: SensingOperator,
    pub observations: DVector<Complex64>,
    /// Standard deviation of the complex observation noise.
    pub noise_std: f64,
    pub tx_grid: AngleGrid,
    pub rx_grid: AngleGrid,
}

impl BeamSearchProblem {
    pub fn measurements(&self) -> usize {
        self.observations.len()
    }

    pub fn residual_norm(&self, x: &DVector<Complex64>) -> f64 {
        (self.sensing.apply(x) - &self.observations).norm()
    }
}

/// Forms the compressive observations `w_m^H H f_m + n` for every training
/// pair and the matching beamspace sensing operator.
pub fn build_problem(
    h: &DMatrix<Complex64>,
    dictionary: &TrainingDictionary,
    space: &Beamspace,
    noise_std: f64,
    noise_seed: u64,
) -> Result<BeamSearchProblem> {
    if h.nrows() != space.rx.len() || h.ncols() != space.tx.len() {
        return config(format!("channel is {}x{} but arrays are {} (rx) x {} (tx)", h.nrows(), h.ncols(), space.rx.len(), space.tx.len()));
    }
    if dictionary.tx.beams.iter().any(|b| b.len() != space.tx.len()) || dictionary.rx.beams.iter().any(|b| b.len() != space.rx.len()) {
        return config("training beam length does not match the array size");
    }
    if !(noise_std >= 0.0 && noise_std.is_finite()) {
        return config(format!("noise level {noise_std} must be non-negative"));
    }
    let f = dictionary.tx.matrix();
    let w = dictionary.rx.matrix();
    // tx[p, i] = a_tx(phi_i)^H f_p ; rx[q, j] = w_q^H a_rx(theta_j)
    let tx = (space.tx_steering.ad_mul(&f)).transpose();
    let rx = w.ad_mul(&space.rx_steering);
    // received[q, p] = w_q^H H f_p
    let received = w.ad_mul(&(h * &f));

    let mut rng = seeded(noise_seed);
    let variance = noise_std * noise_std;
    let (sensing, clean) = match dictionary.pairing {
        Pairing::Cartesian => {
            let clean = DVector::from_column_slice(received.as_slice());
            (SensingOperator::Kronecker { tx, rx }, clean)
        }
        Pairing::Zipped => {
            let m = dictionary.tx.len();
            let (gt, gr) = (tx.ncols(), rx.ncols());
            let a = DMatrix::from_fn(m, gt * gr, |row, col| tx[(row, col / gr)] * rx[(row, col % gr)]);
            let clean = DVector::from_iterator(m, (0..m).map(|k| received[(k, k)]));
            (SensingOperator::Dense(a), clean)
        }
    };
    let observations = clean.map(|c| c + complex_normal(&mut rng, variance));
    Ok(BeamSearchProblem { sensing, observations, noise_std, tx_grid: space.tx_grid.clone(), rx_grid: space.rx_grid.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::{steering_vector, Direction};
    use crate::codebook::{random_dictionary, steering_codebook};

    fn space(n: usize) -> Beamspace {
        Beamspace::uniform(ArrayGeometry::ula(n), ArrayGeometry::ula(n), 1).unwrap()
    }

    fn on_grid(space: &Beamspace, pairs: &[(usize, usize, Complex64)]) -> (DMatrix<Complex64>, DVector<Complex64>) {
        let mut h = DMatrix::zeros(space.rx.len(), space.tx.len());
        let mut x = DVector::zeros(space.size());
        for &(i, j, g) in pairs {
            h += space.rx_steering.column(j) * space.tx_steering.column(i).adjoint() * g;
            x[space.flat(i, j)] = g;
        }
        (h, x)
    }

    fn random_training(n: usize, mt: usize, mr: usize, pairing: Pairing, seed: u64) -> TrainingDictionary {
        let g = ArrayGeometry::ula(n);
        let tx = random_dictionary(&g, mt, 5, seed).unwrap();
        let rx = random_dictionary(&g, mr, 5, seed + 1).unwrap();
        TrainingDictionary::new(tx, rx, pairing).unwrap()
    }

    #[test]
    fn on_grid_residual_vanishes() {
        let s = space(16);
        let (h, x) = on_grid(&s, &[(3, 11, Complex64::new(0.7, -1.2))]);
        for pairing in [Pairing::Cartesian, Pairing::Zipped] {
            let d = random_training(16, 6, 6, pairing, 4);
            let p = build_problem(&h, &d, &s, 0.0, 0).unwrap();
            assert!(p.residual_norm(&x) < 1e-10);
        }
    }

    #[test]
    fn kronecker_matches_dense_rows() {
        let s = space(8);
        let d = random_training(8, 3, 5, Pairing::Cartesian, 2);
        let p = build_problem(&DMatrix::zeros(8, 8), &d, &s, 0.0, 0).unwrap();
        let dense = p.sensing.to_dense();
        // explicit row oracle: (A_T^H f_p)^T (x) (w_q^H A_R)
        let f = d.tx.matrix();
        let w = d.rx.matrix();
        for pi in 0..3 {
            for q in 0..5 {
                for i in 0..8 {
                    for j in 0..8 {
                        let expect = s.tx_steering.column(i).dotc(&f.column(pi)) * w.column(q).dotc(&s.rx_steering.column(j));
                        assert!((dense[(pi * 5 + q, i * 8 + j)] - expect).norm() < 1e-12);
                    }
                }
            }
        }
        let x = DVector::from_fn(64, |k, _| Complex64::new((k as f64).sin(), (k as f64 * 0.3).cos()));
        let y = DVector::from_fn(15, |k, _| Complex64::new((k as f64).cos(), 0.2 * k as f64));
        assert!((p.sensing.apply(&x) - &dense * &x).norm() < 1e-10);
        assert!((p.sensing.adjoint(&y) - dense.ad_mul(&y)).norm() < 1e-10);
        let norms = p.sensing.column_norms();
        for (c, n) in dense.column_iter().zip(norms) {
            assert!((c.norm() - n).abs() < 1e-12);
        }
        let top = dense.singular_values().max();
        assert!((p.sensing.spectral_norm_sq(200) - top * top).abs() < 1e-6 * top * top);
    }

    #[test]
    fn zero_channel_gives_pure_noise() {
        let s = space(8);
        let d = random_training(8, 20, 20, Pairing::Cartesian, 7);
        let p = build_problem(&DMatrix::zeros(8, 8), &d, &s, 0.5, 3).unwrap();
        let m = p.measurements() as f64;
        let var = p.observations.norm_squared() / m;
        assert!((var - 0.25).abs() < 0.25 * 4.0 / m.sqrt(), "{var}");
        let mean = p.observations.sum() / Complex64::new(m, 0.0);
        assert!(mean.norm() < 4.0 * 0.5 / m.sqrt());
    }

    #[test]
    fn full_steering_training_inverts_exactly() {
        let s = space(4);
        let g = ArrayGeometry::ula(4);
        let tx = steering_codebook(&g, &s.tx_grid).unwrap();
        let rx = steering_codebook(&g, &s.rx_grid).unwrap();
        let d = TrainingDictionary::new(tx, rx, Pairing::Cartesian).unwrap();
        let (h, x) = on_grid(&s, &[(1, 2, Complex64::new(1.0, 0.5)), (3, 0, Complex64::new(-0.4, 0.9))]);
        let p = build_problem(&h, &d, &s, 0.0, 0).unwrap();
        let a = p.sensing.to_dense();
        let est = a.lu().solve(&p.observations).unwrap();
        assert!((est - x).norm() < 1e-8);
    }

    #[test]
    fn dimension_mismatch_is_config_error() {
        let s = space(8);
        let d = random_training(8, 2, 2, Pairing::Cartesian, 0);
        assert!(matches!(build_problem(&DMatrix::zeros(4, 8), &d, &s, 0.0, 0), Err(crate::Error::Config(_))));
        let short = random_training(4, 2, 2, Pairing::Cartesian, 0);
        assert!(build_problem(&DMatrix::zeros(8, 8), &short, &s, 0.0, 0).is_err());
    }

    #[test]
    fn pair_gains_match_steering() {
        let s = space(8);
        let h =
            steering_vector(&s.rx, Direction::azimuth(0.2)).unwrap() * steering_vector(&s.tx, Direction::azimuth(-0.6)).unwrap().adjoint();
        let g = s.pair_gains(&h);
        let (i, j) = (5, 2);
        let expect = s.rx_steering.column(j).dotc(&(&h * s.tx_steering.column(i))).norm_sqr();
        assert!((g[s.flat(i, j)] - expect).abs() < 1e-14);
    }
}
