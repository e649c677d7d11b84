#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use oobmm::array::ArrayGeometry;
use oobmm::codebook::{random_dictionary, Pairing, TrainingDictionary};
use oobmm::rng::{complex_normal, seeded};
use oobmm::sparse::{build_problem, BeamSearchProblem, Beamspace};

/// Support of size `k` minimising the least-squares residual, by enumeration.
pub fn restricted_ls_support(a: &DMatrix<Complex64>, y: &DVector<Complex64>, k: usize) -> Vec<usize> {
    let n = a.ncols();
    let corr = a.ad_mul(y);
    let energy: Vec<f64> = a.column_iter().map(|c| c.norm_squared()).collect();
    match k {
        1 => {
            let best = (0..n)
                .max_by(|&i, &j| (corr[i].norm_sqr() / energy[i]).total_cmp(&(corr[j].norm_sqr() / energy[j])).then(j.cmp(&i)))
                .unwrap();
            vec![best]
        }
        2 => {
            let gram = a.adjoint() * a;
            let mut best = (f64::NEG_INFINITY, 0, 0);
            for i in 0..n {
                for j in i + 1..n {
                    // explained energy b^H G^{-1} b for the 2x2 Gram block
                    let (g11, g22, g12) = (gram[(i, i)].re, gram[(j, j)].re, gram[(i, j)]);
                    let det = g11 * g22 - g12.norm_sqr();
                    if det <= 1e-12 * g11 * g22 {
                        continue;
                    }
                    let (b1, b2) = (corr[i], corr[j]);
                    let q = (g22 * b1.norm_sqr() + g11 * b2.norm_sqr() - 2.0 * (b1.conj() * g12 * b2).re) / det;
                    if q > best.0 {
                        best = (q, i, j);
                    }
                }
            }
            vec![best.1, best.2]
        }
        _ => panic!("oracle supports k <= 2"),
    }
}

/// Indices of the `k` largest magnitudes, ascending.
pub fn top_k(x: &DVector<Complex64>, k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&i, &j| x[j].norm().total_cmp(&x[i].norm()).then(i.cmp(&j)));
    let mut t = idx[..k].to_vec();
    t.sort();
    t
}

pub struct SparseCase {
    pub problem: BeamSearchProblem,
    pub support: Vec<usize>,
}

/// On-grid channel with `k` unit-scale paths observed through random
/// 5-bit training at per-measurement SNR `snr_db`.
pub fn sparse_case(space: &Beamspace, k: usize, m_side: usize, snr_db: f64, seed: u64) -> SparseCase {
    let mut rng = seeded(seed);
    let mut h = DMatrix::zeros(space.rx.len(), space.tx.len());
    let mut support = Vec::new();
    while support.len() < k {
        let (i, j) = (rng.gen_range(0..space.tx_grid.len()), rng.gen_range(0..space.rx_grid.len()));
        let flat = space.flat(i, j);
        if support.contains(&flat) {
            continue;
        }
        support.push(flat);
        let g = Complex64::from_polar(rng.gen_range(0.5..1.0), rng.gen_range(0.0..std::f64::consts::TAU));
        h += space.rx_steering.column(j) * space.tx_steering.column(i).adjoint() * g;
    }
    support.sort();
    let geom_t = space.tx.clone();
    let geom_r = space.rx.clone();
    let tx = random_dictionary(&geom_t, m_side, 5, rng.gen()).unwrap();
    let rx = random_dictionary(&geom_r, m_side, 5, rng.gen()).unwrap();
    let d = TrainingDictionary::new(tx, rx, Pairing::Cartesian).unwrap();
    let clean = build_problem(&h, &d, space, 0.0, 0).unwrap();
    let signal = clean.observations.norm_squared() / clean.measurements() as f64;
    let noise_std = (signal / 10f64.powf(snr_db / 10.0)).sqrt();
    let problem = build_problem(&h, &d, space, noise_std, rng.gen()).unwrap();
    SparseCase { problem, support }
}

pub fn ula_space(n: usize, oversampling: usize) -> Beamspace {
    Beamspace::uniform(ArrayGeometry::ula(n), ArrayGeometry::ula(n), oversampling).unwrap()
}

pub fn random_matrix(m: usize, n: usize, seed: u64) -> DMatrix<Complex64> {
    let mut rng = seeded(seed);
    DMatrix::from_fn(m, n, |_, _| complex_normal(&mut rng, 1.0))
}
