//! Fingerprint training overhead against the two-stage sector sweep over
//! array sizes.

use std::fmt::Write as _;

use super::metrics::ieee80211ad_overhead_antennas;
use crate::error::{config, Result};
use crate::position::{
    build_fingerprint_db, fingerprint_overhead, DatabaseSettings, FingerprintDatabase, OverheadSettings, Scene, SceneConfig, UpaCodebook,
};
use crate::rng::derive_seed;

#[derive(Debug, Clone, PartialEq)]
pub struct FingerprintSweep {
    /// Square array sides; both ends use `side x side` arrays.
    pub sides: Vec<usize>,
    pub scene: SceneConfig,
    pub database: DatabaseSettings,
    pub overhead: OverheadSettings,
    pub seed: u64,
}

impl Default for FingerprintSweep {
    fn default() -> Self {
        Self {
            sides: vec![8, 16, 24, 32],
            scene: SceneConfig::default(),
            database: DatabaseSettings::default(),
            overhead: OverheadSettings::default(),
            seed: 0,
        }
    }
}

impl FingerprintSweep {
    pub fn validate(&self) -> Result<()> {
        if self.sides.is_empty() || self.sides.contains(&0) {
            return config("array sides must be a non-empty list of positive sizes");
        }
        self.scene.validate()?;
        self.database.validate()?;
        self.overhead.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FingerprintRow {
    pub side: usize,
    /// Elements per array, `N_a = side^2`.
    pub antennas: usize,
    pub pairs: usize,
    pub symbols: usize,
    pub ieee80211ad_symbols: f64,
    /// Fingerprint symbols over 802.11ad symbols.
    pub ratio: f64,
    pub success_probability: f64,
    pub interval: (f64, f64),
    pub reachable: bool,
    pub mean_loss_db: f64,
}

/// Builds the scene once and, per array size, a database and the overhead
/// evaluation. The baseline uses the same symbols per beam as training length.
pub fn run_fingerprint_sweep(sweep: &FingerprintSweep) -> Result<Vec<FingerprintRow>> {
    run_fingerprint_sweep_with(sweep, |scene, cb| build_fingerprint_db(scene, cb, cb, &sweep.database))
}

/// [`run_fingerprint_sweep`] with the database of each array size supplied
/// by `database` (built, loaded from disk, ...).
pub fn run_fingerprint_sweep_with(
    sweep: &FingerprintSweep,
    mut database: impl FnMut(&Scene, &UpaCodebook) -> Result<FingerprintDatabase>,
) -> Result<Vec<FingerprintRow>> {
    sweep.validate()?;
    let scene = Scene::new(sweep.scene.clone())?;
    let mut rows = Vec::with_capacity(sweep.sides.len());
    for (k, &side) in sweep.sides.iter().enumerate() {
        let cb = UpaCodebook::new(side)?;
        let db = database(&scene, &cb)?;
        let r = fingerprint_overhead(&db, &scene, &cb, &cb, &sweep.overhead, derive_seed(sweep.seed, &[k as u64]))?;
        let antennas = side * side;
        let baseline = ieee80211ad_overhead_antennas(antennas as f64, sweep.overhead.symbols_per_beam as f64);
        log::info!("{side}x{side}: {} pairs, {} symbols, {:.4} of 802.11ad", r.pairs, r.symbols, r.symbols as f64 / baseline);
        rows.push(FingerprintRow {
            side,
            antennas,
            pairs: r.pairs,
            symbols: r.symbols,
            ieee80211ad_symbols: baseline,
            ratio: r.symbols as f64 / baseline,
            success_probability: r.success_probability,
            interval: r.interval,
            reachable: r.reachable,
            mean_loss_db: r.mean_loss_db,
        });
    }
    Ok(rows)
}

pub const FINGERPRINT_HEADER: &str =
    "side,antennas,pairs,fingerprint_symbols,ieee80211ad_symbols,ratio,success_prob,ci_low,ci_high,reachable,mean_loss_db";

pub fn fingerprint_csv(rows: &[FingerprintRow]) -> String {
    let mut s = String::from(FINGERPRINT_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.side,
            r.antennas,
            r.pairs,
            r.symbols,
            r.ieee80211ad_symbols,
            r.ratio,
            r.success_probability,
            r.interval.0,
            r.interval.1,
            r.reachable,
            r.mean_loss_db
        );
    }
    s
}

/// Least-squares `(a, b)` of `y = a x^2 + b`.
pub fn quadratic_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return config("quadratic fit needs at least two paired points");
    }
    let n = xs.len() as f64;
    let u: Vec<f64> = xs.iter().map(|x| x * x).collect();
    let (su, sy) = (u.iter().sum::<f64>(), ys.iter().sum::<f64>());
    let suu = u.iter().map(|v| v * v).sum::<f64>();
    let suy = u.iter().zip(ys).map(|(a, b)| a * b).sum::<f64>();
    let det = n * suu - su * su;
    if det == 0.0 {
        return config("quadratic fit needs at least two distinct |x|");
    }
    let a = (n * suy - su * sy) / det;
    Ok((a, (sy - a * su) / n))
}
