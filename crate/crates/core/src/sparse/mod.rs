//! Compressive beam search as (weighted) basis pursuit denoising on a beamspace grid.

mod pipeline;
mod prior;
mod problem;
mod solver;
mod weights;

pub use pipeline::{factor_measurements, run_search, select_beam_pair, sw_bpdn_pipeline, SearchMethod, SearchOutcome, SearchSettings};
pub use prior::{estimate_prior, prior_from_angles, spectrum_peaks, OobPrior, PriorSettings, DEFAULT_PEAKS, DEFAULT_SNAPSHOTS};
pub use problem::{build_problem, BeamSearchProblem, Beamspace, SensingOperator};
pub use solver::{bpdn, universal_lambda, weighted_bpdn, Solution, SolverConfig};
pub use weights::{oob_weights, smooth_spectrum, AngleSpectrum, OobWeights, WeightVector, DEFAULT_SPREAD_STEPS, DEFAULT_WEIGHT_FLOOR};
