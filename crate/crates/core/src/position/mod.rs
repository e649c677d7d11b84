//! Position-aided beam pointing and inverse fingerprinting.

mod database;
mod fingerprint;
mod pointing;
mod scene;

pub use database::{FingerprintDatabase, RankedPair, DATABASE_FORMAT_VERSION};
pub use fingerprint::{
    build_fingerprint_db, exhaustive_best, fingerprint_overhead, pair_power, path_channel, power_loss_db, rank_beam_pairs, wilson_interval,
    DatabaseSettings, OverheadResult, OverheadSettings, UpaCodebook, MIN_OVERHEAD_TRIALS,
};
pub use pointing::{bearing, pointing_direction, select_beamwidth, BeamwidthChoice, Pose, PositionEstimate};
pub use scene::{BinEnvironment, BinGrid, Scene, SceneConfig, Wall};
