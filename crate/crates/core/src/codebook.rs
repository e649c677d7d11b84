//! Beamformers, angle grids and training dictionaries.
//!
//! Training beams are constant modulus with phases on a `2^bits` lattice.
//! Structured random dictionaries additionally guarantee a minimum gain toward
//! angles suggested by out-of-band information.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::array::{steering_from_cosines, steering_vector, ArrayGeometry, Direction};
use crate::error::{config, domain, Error, Result};
use crate::rng::seeded;

/// Default cap on construction attempts per structured beam.
pub const MAX_SHAPING_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct Beamformer {
    pub weights: DVector<Complex64>,
    /// Phase-shifter resolution when the beam is quantized.
    pub phase_bits: Option<u32>,
}

impl Beamformer {
    pub fn unquantized(weights: DVector<Complex64>) -> Self {
        Self { weights, phase_bits: None }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Unit norm, and for quantized beams constant modulus on the phase lattice.
    pub fn check_invariants(&self, tol: f64) -> Result<()> {
        let norm = self.weights.norm();
        if (norm - 1.0).abs() > tol {
            return domain(format!("beam norm {norm} differs from 1"));
        }
        if let Some(bits) = self.phase_bits {
            let modulus = 1.0 / (self.len() as f64).sqrt();
            let levels = (1u64 << bits) as f64;
            for (i, w) in self.weights.iter().enumerate() {
                if (w.norm() - modulus).abs() > tol {
                    return domain(format!("entry {i} modulus {} off the constant-modulus value", w.norm()));
                }
                let q = w.arg() * levels / (2.0 * PI);
                if (q - q.round()).abs() > 1e-9 {
                    return domain(format!("entry {i} phase not on the {bits}-bit lattice"));
                }
            }
        }
        Ok(())
    }
}

/// Candidate angles for the beamspace representation.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleGrid {
    angles: Vec<f64>,
}

impl AngleGrid {
    pub fn new(angles: Vec<f64>) -> Result<Self> {
        if angles.is_empty() {
            return domain("angle grid is empty");
        }
        if angles.windows(2).any(|w| !(w[1] > w[0])) {
            return domain("angle grid must be strictly increasing");
        }
        for &a in &angles {
            Direction::azimuth(a).check()?;
        }
        Ok(Self { angles })
    }

    /// `size` angles whose sines are the midpoints of a uniform partition of `[-1, 1]`.
    pub fn uniform_sin(size: usize) -> Self {
        assert!(size > 0);
        let angles = (0..size).map(|k| (-1.0 + (2 * k + 1) as f64 / size as f64).asin()).collect();
        Self { angles }
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn sines(&self) -> Vec<f64> {
        self.angles.iter().map(|a| a.sin()).collect()
    }

    /// Spacing of the sine lattice (exact for `uniform_sin` grids).
    pub fn sin_step(&self) -> f64 {
        if self.angles.len() < 2 {
            return 2.0;
        }
        (self.angles[self.angles.len() - 1].sin() - self.angles[0].sin()) / (self.angles.len() - 1) as f64
    }

    /// Grid index whose sine is closest to `sin(angle)`; ties go to the lower index.
    pub fn nearest(&self, angle: f64) -> usize {
        let s = angle.sin();
        let mut best = 0;
        for (i, a) in self.angles.iter().enumerate() {
            if (a.sin() - s).abs() < (self.angles[best].sin() - s).abs() {
                best = i;
            }
        }
        best
    }

    /// `N x G` matrix whose columns are the steering vectors of the grid angles.
    pub fn steering_matrix(&self, geometry: &ArrayGeometry) -> DMatrix<Complex64> {
        let cols: Vec<_> = self.angles.iter().map(|a| steering_from_cosines(geometry, a.sin(), 0.0)).collect();
        DMatrix::from_columns(&cols)
    }

    pub fn validate_for(&self, geometry: &ArrayGeometry) -> Result<()> {
        if self.len() < geometry.len() {
            return config(format!("grid of {} angles is smaller than the {}-element array", self.len(), geometry.len()));
        }
        Ok(())
    }
}

/// Ordered beams for one side of the link.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    pub beams: Vec<Beamformer>,
}

impl Codebook {
    pub fn len(&self) -> usize {
        self.beams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beams.is_empty()
    }

    /// `N x M` matrix with one beam per column.
    pub fn matrix(&self) -> DMatrix<Complex64> {
        let cols: Vec<_> = self.beams.iter().map(|b| b.weights.clone()).collect();
        DMatrix::from_columns(&cols)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pairing {
    /// Every transmit beam with every receive beam (`M = M_tx * M_rx`).
    Cartesian,
    /// Beam `m` on one side with beam `m` on the other (`M = M_tx = M_rx`).
    Zipped,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingDictionary {
    pub tx: Codebook,
    pub rx: Codebook,
    pub pairing: Pairing,
}

impl TrainingDictionary {
    pub fn new(tx: Codebook, rx: Codebook, pairing: Pairing) -> Result<Self> {
        if tx.is_empty() || rx.is_empty() {
            return config("training dictionary needs at least one beam per side");
        }
        if pairing == Pairing::Zipped && tx.len() != rx.len() {
            return config(format!("zipped pairing needs equal beam counts, got {} and {}", tx.len(), rx.len()));
        }
        Ok(Self { tx, rx, pairing })
    }

    pub fn measurements(&self) -> usize {
        match self.pairing {
            Pairing::Cartesian => self.tx.len() * self.rx.len(),
            Pairing::Zipped => self.tx.len(),
        }
    }
}

/// `|b^H a(direction)|^2 * N`, so a matched unquantized beam scores `N`.
pub fn beam_gain(beam: &Beamformer, geometry: &ArrayGeometry, direction: Direction) -> Result<f64> {
    let a = steering_vector(geometry, direction)?;
    if a.len() != beam.len() {
        return config(format!("beam length {} does not match array size {}", beam.len(), a.len()));
    }
    Ok(beam.weights.dotc(&a).norm_sqr() * geometry.len() as f64)
}

fn gain_against(beam: &DVector<Complex64>, a: &DVector<Complex64>) -> f64 {
    beam.dotc(a).norm_sqr() * beam.len() as f64
}

/// One unquantized steering beam per grid angle.
pub fn steering_codebook(geometry: &ArrayGeometry, grid: &AngleGrid) -> Result<Codebook> {
    geometry.validate()?;
    let beams = grid
        .angles()
        .iter()
        .map(|&a| steering_vector(geometry, Direction::azimuth(a)).map(Beamformer::unquantized))
        .collect::<Result<Vec<_>>>()?;
    Ok(Codebook { beams })
}

fn lattice_entry(q: u64, bits: u32, modulus: f64) -> Complex64 {
    Complex64::from_polar(modulus, 2.0 * PI * q as f64 / (1u64 << bits) as f64)
}

fn quantize_vector(weights: &DVector<Complex64>, bits: u32) -> DVector<Complex64> {
    let levels = 1u64 << bits;
    let modulus = 1.0 / (weights.len() as f64).sqrt();
    weights.map(|w| {
        let q = (w.arg() * levels as f64 / (2.0 * PI)).round().rem_euclid(levels as f64) as u64;
        lattice_entry(q, bits, modulus)
    })
}

/// Rounds every phase to the nearest multiple of `2 pi / 2^bits` and forces
/// constant modulus `1 / sqrt(N)`.
pub fn quantize_phases(beam: &Beamformer, bits: u32) -> Result<Beamformer> {
    if bits == 0 || bits > 16 {
        return domain(format!("phase resolution {bits} bits outside 1..=16"));
    }
    Ok(Beamformer { weights: quantize_vector(&beam.weights, bits), phase_bits: Some(bits) })
}

fn random_lattice_beam<R: Rng>(rng: &mut R, n: usize, bits: u32) -> DVector<Complex64> {
    let levels = 1u64 << bits;
    let modulus = 1.0 / (n as f64).sqrt();
    DVector::from_iterator(n, (0..n).map(|_| lattice_entry(rng.gen_range(0..levels), bits, modulus)))
}

/// `m` beams with independent uniform phases on the `bits` lattice.
pub fn random_dictionary(geometry: &ArrayGeometry, m: usize, bits: u32, seed: u64) -> Result<Codebook> {
    geometry.validate()?;
    if m == 0 {
        return domain("dictionary size must be at least 1");
    }
    if bits == 0 || bits > 16 {
        return domain(format!("phase resolution {bits} bits outside 1..=16"));
    }
    let mut rng = seeded(seed);
    let beams =
        (0..m).map(|_| Beamformer { weights: random_lattice_beam(&mut rng, geometry.len(), bits), phase_bits: Some(bits) }).collect();
    Ok(Codebook { beams })
}

/// Highest gain a quantized beam is guaranteed to reach at `angle`: the
/// gain of the quantized steering beam.
pub fn quantized_peak_gain(geometry: &ArrayGeometry, angle: f64, bits: u32) -> Result<f64> {
    let a = steering_vector(geometry, Direction::azimuth(angle))?;
    Ok(gain_against(&quantize_vector(&a, bits), &a))
}

/// Random beams constrained to reach `threshold` (linear, same units as
/// [`beam_gain`]) toward every angle in `oob_angles`.
///
/// Each beam starts as a random lattice beam. When it misses the threshold,
/// it is mixed with a random-phase combination of the out-of-band steering
/// vectors, with the mixing weight raised step by step up to a pure
/// combination, re-quantizing and re-checking at each step. With a zero
/// threshold the draws coincide with [`random_dictionary`] for the same seed.
pub fn structured_random_dictionary(
    geometry: &ArrayGeometry,
    m: usize,
    oob_angles: &[f64],
    threshold: f64,
    bits: u32,
    seed: u64,
    max_attempts: usize,
) -> Result<Codebook> {
    geometry.validate()?;
    if m == 0 {
        return domain("dictionary size must be at least 1");
    }
    if oob_angles.is_empty() {
        return domain("structured dictionary needs at least one out-of-band angle");
    }
    if bits == 0 || bits > 16 {
        return domain(format!("phase resolution {bits} bits outside 1..=16"));
    }
    let n = geometry.len();
    let targets = oob_angles.iter().map(|&a| steering_vector(geometry, Direction::azimuth(a))).collect::<Result<Vec<_>>>()?;
    let meets = |b: &DVector<Complex64>| targets.iter().all(|a| gain_against(b, a) >= threshold);
    const MIX_STEPS: usize = 10;

    let mut rng = seeded(seed);
    let mut beams = Vec::with_capacity(m);
    for _ in 0..m {
        let mut found = None;
        let mut worst = (0usize, f64::INFINITY);
        for _ in 0..max_attempts.max(1) {
            let r = random_lattice_beam(&mut rng, n, bits);
            if meets(&r) {
                found = Some(r);
                break;
            }
            let mut combo = targets[0].clone();
            for a in &targets[1..] {
                combo += a * Complex64::from_polar(1.0, rng.gen_range(0.0..2.0 * PI));
            }
            let combo_norm = combo.norm();
            if combo_norm > 0.0 {
                combo /= Complex64::new(combo_norm, 0.0);
            }
            for step in 1..=MIX_STEPS {
                let alpha = step as f64 / MIX_STEPS as f64;
                let mixed = &r * Complex64::new(1.0 - alpha, 0.0) + &combo * Complex64::new(alpha, 0.0);
                let b = quantize_vector(&mixed, bits);
                if meets(&b) {
                    found = Some(b);
                    break;
                }
                if step == MIX_STEPS {
                    // report the weakest angle of the pure combination
                    worst =
                        targets
                            .iter()
                            .map(|a| gain_against(&b, a))
                            .enumerate()
                            .fold((0, f64::INFINITY), |w, (i, g)| if g < w.1 { (i, g) } else { w });
                }
            }
            if found.is_some() {
                break;
            }
        }
        match found {
            Some(weights) => beams.push(Beamformer { weights, phase_bits: Some(bits) }),
            None => return Err(Error::Infeasible { angle_deg: oob_angles[worst.0].to_degrees(), threshold, achieved: worst.1 }),
        }
    }
    Ok(Codebook { beams })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ula(n: usize) -> ArrayGeometry {
        ArrayGeometry::ula(n)
    }

    #[test]
    fn dft_codebook_is_scaled_unitary() {
        let grid = AngleGrid::uniform_sin(4);
        let cb = steering_codebook(&ula(4), &grid).unwrap();
        let m = cb.matrix();
        let gram = m.adjoint() * &m;
        assert!((gram - DMatrix::<Complex64>::identity(4, 4)).norm() < 1e-12);
    }

    #[test]
    fn single_angle_grid_gives_steering_vector() {
        let grid = AngleGrid::new(vec![0.4]).unwrap();
        let cb = steering_codebook(&ula(8), &grid).unwrap();
        let a = steering_vector(&ula(8), Direction::azimuth(0.4)).unwrap();
        assert_eq!(cb.len(), 1);
        assert!((&cb.beams[0].weights - a).norm() < 1e-15);
    }

    #[test]
    fn adjacent_beam_crossover_loss() {
        // sweep the pattern between two neighbouring beams of the 32/64 codebook
        let g = ula(32);
        let grid = AngleGrid::uniform_sin(64);
        let cb = steering_codebook(&g, &grid).unwrap();
        let s = grid.sines();
        let mut worst = f64::INFINITY;
        for k in 20..40 {
            for t in 0..=50 {
                let u = s[k] + (s[k + 1] - s[k]) * t as f64 / 50.0;
                let best = cb.beams[k..=k + 1].iter().map(|b| beam_gain(b, &g, Direction::azimuth(u.asin())).unwrap()).fold(0.0, f64::max);
                worst = worst.min(best);
            }
        }
        let loss_db = 10.0 * (32.0 / worst).log10();
        assert!(loss_db < 4.0, "{loss_db}");
    }

    #[test]
    fn grid_validation() {
        assert!(AngleGrid::new(vec![0.1, 0.1]).is_err());
        assert!(AngleGrid::new(vec![]).is_err());
        assert!(AngleGrid::uniform_sin(4).validate_for(&ula(8)).is_err());
        let g = AngleGrid::uniform_sin(64);
        assert!(g.angles().windows(2).all(|w| w[1] > w[0]));
        assert_eq!(g.nearest(g.angles()[17]), 17);
    }

    #[test]
    fn quantization_idempotent_and_bounded() {
        let beams = random_dictionary(&ula(32), 5, 5, 1).unwrap();
        for b in &beams.beams {
            let q = quantize_phases(b, 5).unwrap();
            assert!((&q.weights - &b.weights).norm() < 1e-12);
        }
        let mut rng = seeded(9);
        let raw = DVector::from_iterator(32, (0..32).map(|_| Complex64::from_polar(rng.gen_range(0.1..2.0), rng.gen_range(-PI..PI))));
        let q = quantize_phases(&Beamformer::unquantized(raw.clone()), 5).unwrap();
        q.check_invariants(1e-12).unwrap();
        for (a, b) in raw.iter().zip(q.weights.iter()) {
            let err = (b / a).arg().abs();
            assert!(err <= PI / 32.0 + 1e-12);
        }
        let one = quantize_phases(&Beamformer::unquantized(raw), 1).unwrap();
        let m = 1.0 / 32f64.sqrt();
        for w in one.weights.iter() {
            assert!((w - Complex64::new(m, 0.0)).norm() < 1e-12 || (w + Complex64::new(m, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn random_dictionary_deterministic_and_valid() {
        let a = random_dictionary(&ula(16), 1, 5, 42).unwrap();
        let b = random_dictionary(&ula(16), 1, 5, 42).unwrap();
        assert_eq!(a, b);
        let d = random_dictionary(&ula(32), 36, 5, 3).unwrap();
        assert_eq!(d.len(), 36);
        for beam in &d.beams {
            beam.check_invariants(1e-12).unwrap();
        }
    }

    #[test]
    fn random_beams_are_isotropic_on_average() {
        let g = ula(32);
        let d = random_dictionary(&g, 500, 5, 17).unwrap();
        let grid = AngleGrid::uniform_sin(64);
        let mut mean = 0.0;
        for b in &d.beams {
            for &a in grid.angles() {
                mean += beam_gain(b, &g, Direction::azimuth(a)).unwrap();
            }
        }
        mean /= (d.len() * grid.len()) as f64;
        assert!((10.0 * mean.log10()).abs() < 0.5, "{mean}");
    }

    #[test]
    fn matched_and_orthogonal_gains() {
        let g = ula(32);
        let grid = AngleGrid::uniform_sin(32);
        let cb = steering_codebook(&g, &grid).unwrap();
        let a = grid.angles()[10];
        assert!((beam_gain(&cb.beams[10], &g, Direction::azimuth(a)).unwrap() - 32.0).abs() < 1e-10);
        assert!(beam_gain(&cb.beams[11], &g, Direction::azimuth(a)).unwrap() < 1e-20);
        let q = quantize_phases(&cb.beams[10], 5).unwrap();
        assert!(beam_gain(&q, &g, Direction::azimuth(a)).unwrap() >= 0.98 * 32.0);
    }

    #[test]
    fn saturated_threshold_yields_quantized_steering_beam() {
        let g = ula(32);
        let theta = 0.37;
        let peak = quantized_peak_gain(&g, theta, 5).unwrap();
        let d = structured_random_dictionary(&g, 4, &[theta], peak, 5, 8, MAX_SHAPING_ATTEMPTS).unwrap();
        let target = quantize_vector(&steering_vector(&g, Direction::azimuth(theta)).unwrap(), 5);
        for b in &d.beams {
            // equal up to a global phase on the lattice
            let rot = b.weights[0] / target[0];
            assert!((&b.weights - &target * rot).norm() < 1e-9);
        }
    }

    #[test]
    fn zero_threshold_reproduces_random_dictionary() {
        let g = ula(32);
        let a = structured_random_dictionary(&g, 12, &[0.2, -0.5], 0.0, 5, 77, MAX_SHAPING_ATTEMPTS).unwrap();
        let b = random_dictionary(&g, 12, 5, 77).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn half_peak_threshold_is_met_and_raises_mean_gain() {
        let g = ula(32);
        let theta = -0.3;
        let gamma = 0.5 * quantized_peak_gain(&g, theta, 5).unwrap();
        let d = structured_random_dictionary(&g, 36, &[theta], gamma, 5, 5, MAX_SHAPING_ATTEMPTS).unwrap();
        let r = random_dictionary(&g, 36, 5, 5).unwrap();
        let gains = |c: &Codebook| c.beams.iter().map(|b| beam_gain(b, &g, Direction::azimuth(theta)).unwrap()).collect::<Vec<_>>();
        let gs = gains(&d);
        let gr = gains(&r);
        assert!(gs.iter().all(|&x| x >= gamma));
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!(mean(&gs) > mean(&gr));
        for b in &d.beams {
            b.check_invariants(1e-12).unwrap();
        }
    }

    #[test]
    fn infeasible_threshold_names_angle() {
        let g = ula(8);
        let err = structured_random_dictionary(&g, 2, &[0.5], 8.5, 5, 1, 20).unwrap_err();
        match err {
            Error::Infeasible { angle_deg, .. } => assert!((angle_deg - 0.5f64.to_degrees()).abs() < 1e-9),
            other => panic!("unexpected {other:?}"),
        }
    }
}
