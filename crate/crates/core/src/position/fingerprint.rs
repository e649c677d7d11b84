//! Inverse fingerprinting: per-bin beam-pair rankings and their training overhead.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::database::{FingerprintDatabase, RankedPair};
use super::pointing::PositionEstimate;
use super::scene::Scene;
use crate::array::{line_response, steering_from_cosines, ArrayGeometry};
use crate::channel::PathSet;
use crate::codebook::{Beamformer, Codebook};
use crate::error::{config, domain, Result};
use crate::link::db_to_linear;
use crate::rng::{complex_normal, normal, rng_from};

pub const MIN_OVERHEAD_TRIALS: usize = 1000;
const DB_STREAM: u64 = 1;

/// Separable DFT codebook of a square planar array: beam `k * side + l`
/// steers to direction cosines `(u_k, v_l)` on the uniform midpoint lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct UpaCodebook {
    pub side: usize,
    sines: Vec<f64>,
}

impl UpaCodebook {
    pub fn new(side: usize) -> Result<Self> {
        if side == 0 {
            return config("codebook side must be at least 1");
        }
        let sines = (0..side).map(|k| -1.0 + (2 * k + 1) as f64 / side as f64).collect();
        Ok(Self { side, sines })
    }

    pub fn geometry(&self) -> ArrayGeometry {
        ArrayGeometry::upa(self.side, self.side)
    }

    pub fn len(&self) -> usize {
        self.side * self.side
    }

    pub fn is_empty(&self) -> bool {
        self.side == 0
    }

    pub fn cosines(&self, beam: usize) -> (f64, f64) {
        (self.sines[beam / self.side], self.sines[beam % self.side])
    }

    pub fn to_codebook(&self) -> Codebook {
        let g = self.geometry();
        let beams = (0..self.len())
            .map(|b| {
                let (u, v) = self.cosines(b);
                Beamformer::unquantized(steering_from_cosines(&g, u, v))
            })
            .collect();
        Codebook { beams }
    }

    /// `beam^H a(u, v)` for every beam.
    fn responses(&self, u: f64, v: f64) -> Vec<Complex64> {
        let axis = |c: f64| {
            let a = line_response(self.side, 0.5, c);
            self.sines.iter().map(|&s| line_response(self.side, 0.5, s).dotc(&a)).collect::<Vec<_>>()
        };
        let (h, w) = (axis(u), axis(v));
        h.iter().flat_map(|x| w.iter().map(move |y| x * y)).collect()
    }
}

/// Pair amplitudes `w_j^H H f_i` of a path channel scaled by `sqrt(Nt Nr)`,
/// kept factored per path.
struct PairField {
    /// `g_p * conj(f_i^H a_tx,p)`, tx-major.
    tx: Vec<Complex64>,
    /// `w_j^H a_rx,p`, rx-major.
    rx: Vec<Complex64>,
    paths: usize,
    scale: f64,
}

impl PairField {
    fn new(paths: &PathSet, tx: &UpaCodebook, rx: &UpaCodebook) -> Self {
        let np = paths.paths.len();
        let (mut tf, mut rf) = (vec![Complex64::default(); tx.len() * np], vec![Complex64::default(); rx.len() * np]);
        for (p, path) in paths.paths.iter().enumerate() {
            let (u, v) = path.departure.cosines();
            for (i, t) in tx.responses(u, v).into_iter().enumerate() {
                tf[i * np + p] = path.gain * t.conj();
            }
            let (u, v) = path.arrival.cosines();
            for (j, r) in rx.responses(u, v).into_iter().enumerate() {
                rf[j * np + p] = r;
            }
        }
        Self { tx: tf, rx: rf, paths: np, scale: ((tx.len() * rx.len()) as f64).sqrt() }
    }

    fn amplitude(&self, i: usize, j: usize) -> Complex64 {
        let (t, r) = (&self.tx[i * self.paths..][..self.paths], &self.rx[j * self.paths..][..self.paths]);
        t.iter().zip(r).map(|(a, b)| a * b).sum::<Complex64>() * self.scale
    }

    fn power(&self, i: usize, j: usize) -> f64 {
        self.amplitude(i, j).norm_sqr()
    }

    /// Calls `f(i, j, power)` for every pair.
    fn for_each(&self, mut f: impl FnMut(usize, usize, f64)) {
        let np = self.paths;
        let s2 = self.scale * self.scale;
        for (i, t) in self.tx.chunks_exact(np).enumerate() {
            for (j, r) in self.rx.chunks_exact(np).enumerate() {
                let a: Complex64 = t.iter().zip(r).map(|(a, b)| a * b).sum();
                f(i, j, a.norm_sqr() * s2);
            }
        }
    }

    fn best(&self) -> ((usize, usize), f64) {
        let mut best = ((0, 0), f64::NEG_INFINITY);
        self.for_each(|i, j, p| {
            if p > best.1 {
                best = ((i, j), p);
            }
        });
        best
    }
}

/// Received power of pair `(tx, rx)` over a path channel, in units where a
/// single unit-gain path matched on both sides scores `Nt * Nr`.
pub fn pair_power(paths: &PathSet, tx: &UpaCodebook, rx: &UpaCodebook, pair: (usize, usize)) -> Result<f64> {
    if pair.0 >= tx.len() || pair.1 >= rx.len() {
        return domain(format!("pair {pair:?} outside {}x{}", tx.len(), rx.len()));
    }
    Ok(PairField::new(paths, tx, rx).power(pair.0, pair.1))
}

/// Strongest pair by full scan of both codebooks, ties to the lowest `(tx, rx)`.
pub fn exhaustive_best(paths: &PathSet, tx: &UpaCodebook, rx: &UpaCodebook) -> ((usize, usize), f64) {
    PairField::new(paths, tx, rx).best()
}

fn loss_db(best: f64, selected: f64) -> f64 {
    if !(selected > 0.0) {
        return f64::INFINITY;
    }
    (10.0 * (best / selected).log10()).max(0.0)
}

/// `10 log10(P_best / P_selected)` for beam pair `selected = (tx, rx)` on the
/// matrix channel `h` (rx x tx), with the best pair found by full scan.
/// Returns `+inf` when the selected pair receives no power.
pub fn power_loss_db(selected: (usize, usize), h: &DMatrix<Complex64>, tx: &Codebook, rx: &Codebook) -> Result<f64> {
    if selected.0 >= tx.len() || selected.1 >= rx.len() {
        return domain(format!("pair {selected:?} outside {}x{}", tx.len(), rx.len()));
    }
    let (f, w) = (tx.matrix(), rx.matrix());
    if h.ncols() != f.nrows() || h.nrows() != w.nrows() {
        return config(format!(
            "channel {}x{} does not match beams of length {} (rx) and {} (tx)",
            h.nrows(),
            h.ncols(),
            w.nrows(),
            f.nrows()
        ));
    }
    let g = w.ad_mul(&(h * f));
    let best = g.iter().map(|x| x.norm_sqr()).fold(0.0, f64::max);
    Ok(loss_db(best, g[(selected.1, selected.0)].norm_sqr()))
}

fn top_pairs(powers: &[f64], rx_beams: usize, depth: usize, count: usize) -> Vec<RankedPair> {
    let mut idx: Vec<usize> = (0..powers.len()).collect();
    let order = |a: &usize, b: &usize| powers[*b].total_cmp(&powers[*a]).then(a.cmp(b));
    let depth = depth.min(idx.len());
    if depth < idx.len() {
        idx.select_nth_unstable_by(depth, order);
        idx.truncate(depth);
    }
    idx.sort_by(order);
    idx.into_iter().map(|k| RankedPair { tx: k / rx_beams, rx: k % rx_beams, power: powers[k], count }).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatabaseSettings {
    /// Channel snapshots averaged per bin.
    pub snapshots: usize,
    /// Pairs kept per bin.
    pub depth: usize,
    /// Position error of the surveying vehicles (m per axis). Snapshots are
    /// filed under the reported position, so bins near a blockage edge also
    /// collect their neighbours' paths.
    pub survey_sigma: f64,
}

impl Default for DatabaseSettings {
    fn default() -> Self {
        Self { snapshots: 64, depth: 1024, survey_sigma: 0.5 }
    }
}

impl DatabaseSettings {
    pub fn validate(&self) -> Result<()> {
        if self.snapshots == 0 {
            return config("fingerprint database needs at least one snapshot per bin");
        }
        if self.depth == 0 {
            return config("ranking depth must be at least 1");
        }
        if !(self.survey_sigma >= 0.0 && self.survey_sigma.is_finite()) {
            return config(format!("survey position error {} must be non-negative", self.survey_sigma));
        }
        Ok(())
    }
}

/// Averages pair powers over snapshots reported in each bin and keeps the
/// strongest `depth` pairs per bin.
pub fn build_fingerprint_db(scene: &Scene, tx: &UpaCodebook, rx: &UpaCodebook, settings: &DatabaseSettings) -> Result<FingerprintDatabase> {
    settings.validate()?;
    let grid = *scene.grid();
    let (nt, nr) = (tx.len(), rx.len());
    let snapshots = settings.snapshots;
    let bins = (0..grid.len())
        .into_par_iter()
        .map(|bin| {
            let mut acc = vec![0.0; nt * nr];
            for s in 0..snapshots {
                let mut rng = rng_from(scene.config.seed, &[DB_STREAM, bin as u64, s as u64]);
                let (rx_x, rx_y) = scene.sample_in_bin(bin, &mut rng)?;
                let (ex, ey) = (normal(&mut rng, settings.survey_sigma), normal(&mut rng, settings.survey_sigma));
                let (x, y) = grid.clamp(rx_x + ex, rx_y + ey);
                let env = scene.environment(grid.bin_of(x, y)?)?;
                let paths = scene.paths_at(&env, x, y, &mut rng)?;
                PairField::new(&paths, tx, rx).for_each(|i, j, p| acc[i * nr + j] += p);
            }
            acc.iter_mut().for_each(|p| *p /= snapshots as f64);
            Ok(top_pairs(&acc, nr, settings.depth, snapshots))
        })
        .collect::<Result<Vec<_>>>()?;
    FingerprintDatabase::new(grid, nt, nr, bins)
}

/// Stored ranking of the bin containing `estimate`; positions outside the
/// region are a domain error.
pub fn rank_beam_pairs<'a>(db: &'a FingerprintDatabase, estimate: &PositionEstimate) -> Result<&'a [RankedPair]> {
    db.rank(estimate)
}

/// Wilson score interval for `successes` out of `trials` at normal quantile `z`.
pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverheadSettings {
    /// Position error standard deviation per axis (m).
    pub sigma_p: f64,
    pub symbols_per_beam: usize,
    pub target_probability: f64,
    pub loss_threshold_db: f64,
    pub trials: usize,
    /// Per-antenna SNR before beamforming; `None` measures without noise.
    pub snr_db: Option<f64>,
    /// Coherent accumulation gain of the training symbols.
    pub accumulation_db: f64,
}

impl Default for OverheadSettings {
    fn default() -> Self {
        Self {
            sigma_p: 0.5,
            symbols_per_beam: 10,
            target_probability: 0.99,
            loss_threshold_db: 3.0,
            trials: MIN_OVERHEAD_TRIALS,
            snr_db: Some(-16.88),
            accumulation_db: 10.0,
        }
    }
}

impl OverheadSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_p >= 0.0 && self.sigma_p.is_finite()) {
            return config(format!("position error {} must be non-negative", self.sigma_p));
        }
        if self.symbols_per_beam == 0 {
            return config("symbols per beam must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.target_probability) {
            return config(format!("target probability {} outside [0, 1]", self.target_probability));
        }
        if !(self.loss_threshold_db >= 0.0) {
            return config(format!("loss threshold {} dB must be non-negative", self.loss_threshold_db));
        }
        if self.trials < MIN_OVERHEAD_TRIALS {
            return config(format!("overhead needs at least {MIN_OVERHEAD_TRIALS} trials, got {}", self.trials));
        }
        if self.snr_db.is_some_and(|s| !s.is_finite()) || !self.accumulation_db.is_finite() {
            return config("snr and accumulation gain must be finite");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverheadResult {
    /// Beam pairs trained.
    pub pairs: usize,
    pub symbols: usize,
    /// Success probability at `pairs` (at the deepest ranking when unreachable).
    pub success_probability: f64,
    /// 95% Wilson interval of `success_probability`.
    pub interval: (f64, f64),
    pub reachable: bool,
    /// Success probability after training the top `n + 1` pairs.
    pub curve: Vec<f64>,
    /// Mean loss (dB) of the selection at `pairs`, infinite losses excluded.
    pub mean_loss_db: f64,
}

/// Smallest number of top-ranked pairs whose measured-best choice keeps the
/// loss within the threshold with the target probability.
///
/// Each trial draws a vehicle position, its channel, a position fix and one
/// measurement noise per ranked pair; every candidate count reuses them.
pub fn fingerprint_overhead(
    db: &FingerprintDatabase,
    scene: &Scene,
    tx: &UpaCodebook,
    rx: &UpaCodebook,
    settings: &OverheadSettings,
    seed: u64,
) -> Result<OverheadResult> {
    settings.validate()?;
    if db.tx_beams != tx.len() || db.rx_beams != rx.len() {
        return config(format!("database built for {}x{} beams, codebooks have {}x{}", db.tx_beams, db.rx_beams, tx.len(), rx.len()));
    }
    if db.grid != *scene.grid() {
        return config("database grid does not match the scene region");
    }
    let depth = (0..db.len()).map(|b| db.bin(b).map_or(0, <[_]>::len)).max().unwrap_or(0);
    if depth == 0 {
        return config("fingerprint database is empty");
    }
    let amp = settings.snr_db.map(|s| db_to_linear(s + settings.accumulation_db).sqrt());
    let grid = *scene.grid();
    // per trial: loss after training the top n + 1 pairs
    let losses = (0..settings.trials)
        .into_par_iter()
        .map(|t| -> Result<Vec<f64>> {
            let mut rng = rng_from(seed, &[t as u64]);
            let (x, y) = scene.sample_position(&mut rng);
            let env = scene.environment(grid.bin_of(x, y)?)?;
            let paths = scene.paths_at(&env, x, y, &mut rng)?;
            let (ex, ey) = (normal(&mut rng, settings.sigma_p), normal(&mut rng, settings.sigma_p));
            let (fx, fy) = grid.clamp(x + ex, y + ey);
            let ranking = rank_beam_pairs(db, &PositionEstimate::new(fx, fy, settings.sigma_p)?)?;
            let field = PairField::new(&paths, tx, rx);
            let best = field.best().1;
            let mut out = Vec::with_capacity(depth);
            let (mut measured_best, mut selected) = (f64::NEG_INFINITY, 0.0);
            for k in 0..depth {
                if let Some(p) = ranking.get(k) {
                    let a = field.amplitude(p.tx, p.rx);
                    let noise = complex_normal(&mut rng, 1.0);
                    let m = amp.map_or(a.norm_sqr(), |s| (a * s + noise).norm_sqr());
                    if m > measured_best {
                        measured_best = m;
                        selected = a.norm_sqr();
                    }
                }
                out.push(loss_db(best, selected));
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    let successes: Vec<usize> = (0..depth).map(|k| losses.iter().filter(|l| l[k] <= settings.loss_threshold_db).count()).collect();
    let n = settings.trials as f64;
    let curve: Vec<f64> = successes.iter().map(|&s| s as f64 / n).collect();
    let hit = curve.iter().position(|&p| p >= settings.target_probability);
    let k = hit.unwrap_or(depth - 1);
    let finite: Vec<f64> = losses.iter().map(|l| l[k]).filter(|l| l.is_finite()).collect();
    let mean_loss_db = if finite.is_empty() { f64::INFINITY } else { finite.iter().sum::<f64>() / finite.len() as f64 };
    let pairs = match hit {
        Some(k) => k + 1,
        None => {
            log::warn!("loss target unreachable within {depth} ranked pairs (p = {:.4}); reporting the full codebook", curve[depth - 1]);
            tx.len() * rx.len()
        }
    };
    Ok(OverheadResult {
        pairs,
        symbols: pairs * settings.symbols_per_beam,
        success_probability: curve[k],
        interval: wilson_interval(successes[k], settings.trials, 1.959_963_984_540_054),
        reachable: hit.is_some(),
        curve,
        mean_loss_db,
    })
}

/// Matrix channel `sqrt(Nt Nr) * sum_p g_p a_rx a_tx^H` of a path set on square arrays.
pub fn path_channel(paths: &PathSet, tx: &UpaCodebook, rx: &UpaCodebook) -> Result<DMatrix<Complex64>> {
    let h = crate::channel::narrowband_matrix(paths, &rx.geometry(), &tx.geometry())?;
    Ok(h * Complex64::from(((tx.len() * rx.len()) as f64).sqrt()))
}
