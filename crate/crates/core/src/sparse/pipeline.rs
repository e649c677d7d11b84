//! End-to-end compressive beam search: dictionary, observations, solver, selection.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::prior::OobPrior;
use super::problem::{build_problem, Beamspace};
use super::solver::{bpdn, weighted_bpdn, Solution, SolverConfig};
use super::weights::{oob_weights, WeightVector, DEFAULT_SPREAD_STEPS, DEFAULT_WEIGHT_FLOOR};
use crate::codebook::{random_dictionary, structured_random_dictionary, Codebook, Pairing, TrainingDictionary, MAX_SHAPING_ATTEMPTS};
use crate::error::{config, domain, Result};
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SearchMethod {
    Bpdn,
    WBpdn,
    SwBpdn,
}

impl SearchMethod {
    pub const ALL: [SearchMethod; 3] = [Self::Bpdn, Self::WBpdn, Self::SwBpdn];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Bpdn => "bpdn",
            Self::WBpdn => "w-bpdn",
            Self::SwBpdn => "sw-bpdn",
        }
    }

    pub fn uses_prior(&self) -> bool {
        !matches!(self, Self::Bpdn)
    }
}

impl std::str::FromStr for SearchMethod {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .map_or_else(|| config(format!("unknown search method '{s}', expected bpdn, w-bpdn or sw-bpdn")), Ok)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchSettings {
    /// Total training pairs `M`.
    pub measurements: usize,
    pub pairing: Pairing,
    pub phase_bits: u32,
    /// Structured-dictionary gain threshold as a fraction of the array size.
    pub gamma: f64,
    pub shape_tx: bool,
    pub shape_rx: bool,
    pub weight_floor: f64,
    /// Mismatch kernel width in grid steps.
    pub spread_steps: f64,
    pub max_attempts: usize,
    pub solver: SolverConfig,
}

impl Default for SearchSettings {
    fn default() -> Self {
        Self {
            measurements: 36,
            pairing: Pairing::Cartesian,
            phase_bits: 5,
            gamma: 0.33,
            shape_tx: true,
            shape_rx: true,
            weight_floor: DEFAULT_WEIGHT_FLOOR,
            spread_steps: DEFAULT_SPREAD_STEPS,
            max_attempts: MAX_SHAPING_ATTEMPTS,
            solver: SolverConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub method: SearchMethod,
    pub coefficients: DVector<Complex64>,
    pub tx_index: usize,
    pub rx_index: usize,
    pub dictionary: TrainingDictionary,
    /// The solver returned all zeros and the pair came from weighted correlation.
    pub fallback: bool,
    pub iterations: usize,
    pub converged: bool,
}

/// Splits `m` into `(m_tx, m_rx)` with `m_tx <= m_rx` as close to square as possible.
pub fn factor_measurements(m: usize) -> Result<(usize, usize)> {
    if m == 0 {
        return domain("measurement count must be at least 1");
    }
    let mut t = (m as f64).sqrt() as usize;
    while t > 1 && m % t != 0 {
        t -= 1;
    }
    let t = t.max(1);
    Ok((t, m / t))
}

/// Grid pair of the largest-magnitude coefficient, ties to the lowest flat index.
pub fn select_beam_pair(coefficients: &DVector<Complex64>, space: &Beamspace) -> Result<(usize, usize)> {
    if coefficients.is_empty() {
        return domain("no coefficients to select from");
    }
    if coefficients.len() != space.size() {
        return config("coefficient vector does not match the beamspace");
    }
    let mut best = 0;
    let mut best_mag = coefficients[0].norm_sqr();
    for (i, c) in coefficients.iter().enumerate().skip(1) {
        let m = c.norm_sqr();
        if m > best_mag {
            best = i;
            best_mag = m;
        }
    }
    Ok(space.unflat(best))
}

fn training_codebooks(
    method: SearchMethod,
    space: &Beamspace,
    prior: Option<&OobPrior>,
    settings: &SearchSettings,
    seed: u64,
) -> Result<TrainingDictionary> {
    let (m_tx, m_rx) = match settings.pairing {
        Pairing::Cartesian => factor_measurements(settings.measurements)?,
        Pairing::Zipped => (settings.measurements, settings.measurements),
    };
    let (tx_seed, rx_seed) = (derive_seed(seed, &[0]), derive_seed(seed, &[1]));
    let bits = settings.phase_bits;
    let side = |geom, m, angles: Option<&[f64]>, s| -> Result<Codebook> {
        match angles {
            Some(a) if !a.is_empty() => {
                let threshold = settings.gamma * crate::array::ArrayGeometry::len(geom) as f64;
                structured_random_dictionary(geom, m, a, threshold, bits, s, settings.max_attempts)
            }
            _ => random_dictionary(geom, m, bits, s),
        }
    };
    let (tx_angles, rx_angles) = match (method, prior) {
        (SearchMethod::SwBpdn, Some(p)) => {
            (settings.shape_tx.then_some(p.tx_angles.as_slice()), settings.shape_rx.then_some(p.rx_angles.as_slice()))
        }
        (SearchMethod::SwBpdn, None) => return config("sw-bpdn needs an out-of-band prior"),
        _ => (None, None),
    };
    let tx = side(&space.tx, m_tx, tx_angles, tx_seed)?;
    let rx = side(&space.rx, m_rx, rx_angles, rx_seed)?;
    TrainingDictionary::new(tx, rx, settings.pairing)
}

/// Runs one beam search on the narrowband matrix `h` with complex noise
/// standard deviation `noise_std` per observation.
///
/// Dictionaries and noise depend only on `seed`, so methods sharing a seed
/// see the same random beams (up to shaping) and the same noise.
pub fn run_search(
    method: SearchMethod,
    h: &DMatrix<Complex64>,
    space: &Beamspace,
    prior: Option<&OobPrior>,
    settings: &SearchSettings,
    noise_std: f64,
    seed: u64,
) -> Result<SearchOutcome> {
    let dictionary = training_codebooks(method, space, prior, settings, seed)?;
    let problem = build_problem(h, &dictionary, space, noise_std, derive_seed(seed, &[2]))?;
    let weights = match method {
        SearchMethod::Bpdn => WeightVector::uniform(space.size()),
        _ => {
            let p = prior.ok_or_else(|| crate::Error::Config(format!("{} needs an out-of-band prior", method.name())))?;
            let spread = settings.spread_steps * space.tx_grid.sin_step();
            oob_weights(&p.spectrum, &space.tx_grid, &space.rx_grid, spread, settings.weight_floor)?.weights
        }
    };
    let solution: Solution = match method {
        SearchMethod::Bpdn => bpdn(&problem, &settings.solver)?,
        _ => weighted_bpdn(&problem, &weights, &settings.solver)?,
    };
    let fallback = solution.is_zero();
    let (tx_index, rx_index) = if fallback {
        let corr = problem.sensing.adjoint(&problem.observations);
        let scores =
            DVector::from_iterator(corr.len(), corr.iter().zip(weights.as_slice()).map(|(c, w)| Complex64::new(c.norm() / w, 0.0)));
        select_beam_pair(&scores, space)?
    } else {
        select_beam_pair(&solution.coefficients, space)?
    };
    Ok(SearchOutcome {
        method,
        coefficients: solution.coefficients,
        tx_index,
        rx_index,
        dictionary,
        fallback,
        iterations: solution.iterations,
        converged: solution.converged,
    })
}

/// Weighted recovery over a structured random dictionary shaped toward
/// `prior`'s dominant directions with gain threshold `gamma * N`.
pub fn sw_bpdn_pipeline(
    h: &DMatrix<Complex64>,
    space: &Beamspace,
    prior: &OobPrior,
    measurements: usize,
    gamma: f64,
    settings: &SearchSettings,
    noise_std: f64,
    seed: u64,
) -> Result<SearchOutcome> {
    let s = SearchSettings { measurements, gamma, ..*settings };
    run_search(SearchMethod::SwBpdn, h, space, Some(prior), &s, noise_std, seed)
}
