//! Monte Carlo beam-search experiments over distance and training length.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::metrics::{effective_rate, ieee80211ad_overhead, overhead_reduction, percentile, training_efficiency, EtaMode, OverheadModel};
use crate::channel::{generate_congruent_channels, narrowband_matrix, paths_to_taps, ChannelConfig, CongruencePolicy};
use crate::error::{config, domain, Error, Result};
use crate::link::{db_to_linear, link_snr, LinkBudget};
use crate::rng::derive_seed;
use crate::sparse::{estimate_prior, run_search, Beamspace, OobPrior, PriorSettings, SearchMethod, SearchSettings};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Search(SearchMethod),
    /// Exhaustive two-stage sector sweep.
    Ieee80211ad,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Search(m) => m.name(),
            Self::Ieee80211ad => "11ad",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "11ad" => Ok(Self::Ieee80211ad),
            "fingerprint" => config("method 'fingerprint' runs in the fingerprint experiment, not the beam search sweep"),
            _ => s
                .parse::<SearchMethod>()
                .map(Self::Search)
                .map_err(|_| Error::Config(format!("unknown method '{s}', expected one of bpdn, w-bpdn, sw-bpdn, 11ad"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub channel: ChannelConfig,
    pub policy: CongruencePolicy,
    pub mmwave_link: LinkBudget,
    pub sub6_link: LinkBudget,
    pub distances: Vec<f64>,
    pub measurements: Vec<usize>,
    /// Channel coherence length `L_H` in symbols.
    pub coherence_symbols: f64,
    pub eta_mode: EtaMode,
    pub trials: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    /// Grid points per antenna on each side.
    pub oversampling: usize,
    pub search: SearchSettings,
    pub prior_snapshots: usize,
    pub prior_peaks: usize,
    /// Alignment quality (gain over the exhaustive best) a method must reach
    /// for its training length to count toward the overhead reduction.
    pub target_fraction: f64,
    /// A selection succeeds when its loss is at most this many dB.
    pub success_loss_db: f64,
    /// Sector-level training length of the 802.11ad baseline (symbols).
    pub sector_training: f64,
}

/// Search settings of the beam-search sweep: a milder structured-dictionary
/// threshold, softer weights and a lower regularisation than the module
/// defaults, which leave the out-of-band methods behind plain BPDN with the
/// 4-antenna sub-6 prior.
pub fn sweep_search_settings() -> SearchSettings {
    let mut s = SearchSettings::default();
    s.gamma = 0.02;
    s.weight_floor = 0.3;
    s.solver.lambda_scale = 0.5;
    s
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            channel: ChannelConfig::standard(),
            policy: CongruencePolicy { probability: 0.9, perturbation_std: 1f64.to_radians(), mmwave_only: 1 },
            mmwave_link: LinkBudget::standard_mmwave(),
            sub6_link: LinkBudget::standard_sub6(),
            distances: vec![40.0],
            measurements: vec![36],
            coherence_symbols: 2048.0,
            eta_mode: EtaMode::Measurements,
            trials: 100,
            seed: 0,
            methods: SearchMethod::ALL.iter().map(|m| Method::Search(*m)).collect(),
            oversampling: 1,
            search: sweep_search_settings(),
            prior_snapshots: PriorSettings::default().snapshots,
            prior_peaks: PriorSettings::default().peaks,
            target_fraction: 0.5,
            success_loss_db: 3.0,
            sector_training: 1.0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.channel.validate(&self.policy)?;
        self.mmwave_link.validate()?;
        self.sub6_link.validate()?;
        if self.distances.is_empty() || self.distances.windows(2).any(|w| !(w[1] > w[0])) {
            return config("distance grid must be non-empty and strictly increasing");
        }
        if self.distances.iter().any(|d| !(*d >= self.mmwave_link.reference_distance_m)) {
            return config("every distance must be at least the path-loss reference distance");
        }
        if self.measurements.is_empty() || self.measurements.windows(2).any(|w| w[1] <= w[0]) || self.measurements[0] == 0 {
            return config("measurement grid must be non-empty, positive and strictly increasing");
        }
        if !(self.coherence_symbols > 0.0 && self.coherence_symbols.is_finite()) {
            return config(format!("coherence length {} must be positive", self.coherence_symbols));
        }
        if self.trials == 0 {
            return config("at least one trial is required");
        }
        if self.methods.is_empty() {
            return config("no methods selected");
        }
        if self.oversampling == 0 {
            return config("grid oversampling must be at least 1");
        }
        if self.prior_snapshots == 0 || self.prior_peaks == 0 {
            return config("prior needs at least one snapshot and one peak");
        }
        if !(0.0..=1.0).contains(&self.target_fraction) {
            return config(format!("target fraction {} outside [0, 1]", self.target_fraction));
        }
        if !(self.sector_training > 0.0) {
            return config("sector training length must be positive");
        }
        self.search.solver.validate()?;
        Ok(())
    }

    pub fn beamspace(&self) -> Result<Beamspace> {
        Beamspace::uniform(self.channel.mmwave_tx, self.channel.mmwave_rx, self.oversampling)
    }

    fn eta_training(&self, training: f64) -> f64 {
        match self.eta_mode {
            EtaMode::Measurements => training,
            EtaMode::FullSweep => (self.channel.mmwave_tx.len() * self.channel.mmwave_rx.len()) as f64,
        }
    }

    fn baseline_training(&self) -> Result<f64> {
        let n = self.channel.mmwave_tx.len().max(self.channel.mmwave_rx.len());
        let model = OverheadModel { sectors: n, quasi_omni: Some((n / 32).max(1)), training_length: self.sector_training };
        ieee80211ad_overhead(&model)
    }
}

/// One trial's mmWave channel with its out-of-band prior.
#[derive(Debug, Clone)]
pub struct EnsembleMember {
    /// Narrowband matrix on pilot subcarrier 0.
    pub h: DMatrix<Complex64>,
    pub prior: OobPrior,
    /// Per-antenna SNR (linear).
    pub snr: f64,
    /// Seed of the training dictionaries and measurement noise.
    pub search_seed: u64,
}

impl EnsembleMember {
    pub fn noise_std(&self) -> f64 {
        1.0 / self.snr.sqrt()
    }
}

/// Draws the congruent channel pair of `(distance_index, trial)` and the
/// sub-6 prior.
pub fn draw_member(cfg: &ExperimentConfig, space: &Beamspace, distance_index: usize, trial: usize) -> Result<EnsembleMember> {
    let distance = cfg.distances[distance_index];
    let cell = derive_seed(cfg.seed, &[distance_index as u64, trial as u64]);
    let (sub6, mm) = generate_congruent_channels(&cfg.channel, &cfg.policy, derive_seed(cell, &[0]))?;
    let c = &cfg.channel;
    let h = paths_to_taps(&mm, &c.mmwave_rx, &c.mmwave_tx, c.sample_period)?.subcarrier_matrix(0);
    let h_sub6 = narrowband_matrix(&sub6, &c.sub6_rx, &c.sub6_tx)?;
    let prior_settings = PriorSettings {
        snapshots: cfg.prior_snapshots,
        snr: db_to_linear(link_snr(&cfg.sub6_link.at_distance(distance))?),
        peaks: cfg.prior_peaks,
    };
    let prior = estimate_prior(&h_sub6, &c.sub6_tx, &c.sub6_rx, &space.tx_grid, &space.rx_grid, &prior_settings, derive_seed(cell, &[1]))?;
    let snr = db_to_linear(link_snr(&cfg.mmwave_link.at_distance(distance))?);
    Ok(EnsembleMember { h, prior, snr, search_seed: derive_seed(cell, &[2]) })
}

/// Selected grid pair and its gain next to the exhaustive best.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Alignment {
    pub tx_index: usize,
    pub rx_index: usize,
    pub gain: f64,
    pub best_gain: f64,
}

impl Alignment {
    pub fn quality(&self) -> f64 {
        if self.best_gain > 0.0 {
            self.gain / self.best_gain
        } else {
            1.0
        }
    }

    pub fn loss_db(&self) -> f64 {
        if !(self.gain > 0.0) {
            return f64::INFINITY;
        }
        (10.0 * (self.best_gain / self.gain).log10()).max(0.0)
    }
}

fn best_pair(space: &Beamspace, gains: &[f64]) -> (usize, usize, f64) {
    let k = (0..gains.len()).fold(0, |b, i| if gains[i] > gains[b] { i } else { b });
    let (t, r) = space.unflat(k);
    (t, r, gains[k])
}

/// Runs `method` with `m` training measurements on one member.
pub fn align(method: Method, member: &EnsembleMember, space: &Beamspace, settings: &SearchSettings, m: usize) -> Result<Alignment> {
    let gains = space.pair_gains(&member.h);
    let (bt, br, best) = best_pair(space, &gains);
    let (tx_index, rx_index) = match method {
        Method::Ieee80211ad => (bt, br),
        Method::Search(s) => {
            let settings = SearchSettings { measurements: m, ..*settings };
            let out = run_search(s, &member.h, space, Some(&member.prior), &settings, member.noise_std(), member.search_seed)?;
            (out.tx_index, out.rx_index)
        }
    };
    Ok(Alignment { tx_index, rx_index, gain: gains[space.flat(tx_index, rx_index)], best_gain: best })
}

/// Smallest grid entry whose mean quality reaches `target`, `None` when no
/// entry does (an infinite requirement). `quality(i, m)` scores member `i`.
pub fn measurements_to_target_with(
    members: usize,
    target: f64,
    grid: &[usize],
    mut quality: impl FnMut(usize, usize) -> Result<f64>,
) -> Result<Option<usize>> {
    if members == 0 {
        return domain("empty channel ensemble");
    }
    if grid.is_empty() || grid.windows(2).any(|w| w[1] <= w[0]) {
        return config("measurement grid must be non-empty and strictly increasing");
    }
    if target <= 0.0 {
        return Ok(Some(grid[0]));
    }
    for &m in grid {
        let mut sum = 0.0;
        for i in 0..members {
            sum += quality(i, m)?;
        }
        if sum / members as f64 >= target {
            return Ok(Some(m));
        }
    }
    Ok(None)
}

/// [`measurements_to_target_with`] for a search method over an ensemble.
pub fn measurements_to_target(
    method: Method,
    ensemble: &[EnsembleMember],
    space: &Beamspace,
    settings: &SearchSettings,
    target: f64,
    grid: &[usize],
) -> Result<Option<usize>> {
    measurements_to_target_with(ensemble.len(), target, grid, |i, m| Ok(align(method, &ensemble[i], space, settings, m)?.quality()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRecord {
    pub method: Method,
    pub distance_m: f64,
    pub measurements: usize,
    pub trial: usize,
    pub seed: u64,
    pub tx_index: usize,
    pub rx_index: usize,
    pub gain: f64,
    pub best_gain: f64,
    pub snr: f64,
    pub eta: f64,
    pub rate: f64,
    pub loss_db: f64,
    pub overhead_symbols: f64,
    /// Set when the cell failed; the numeric fields are then NaN.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: Method,
    pub distance_m: f64,
    pub measurements: usize,
    pub trials: usize,
    pub mean_rate: f64,
    pub median_rate: f64,
    pub p05_rate: f64,
    pub mean_loss_db: f64,
    pub success_prob: f64,
    pub overhead_symbols: f64,
    /// Overhead reduction against BPDN at the target alignment quality.
    pub reduction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub records: Vec<MetricRecord>,
    pub summary: Vec<SummaryRow>,
}

pub const SUMMARY_HEADER: &str =
    "method,distance_m,M,trials,mean_rate,median_rate,p05_rate,mean_loss_db,success_prob,overhead_symbols,reduction";

fn method_rank(cfg: &ExperimentConfig, m: Method) -> usize {
    cfg.methods.iter().position(|x| *x == m).unwrap_or(usize::MAX)
}

fn trial_records(cfg: &ExperimentConfig, space: &Beamspace, di: usize, trial: usize) -> Vec<MetricRecord> {
    let distance = cfg.distances[di];
    let seed = derive_seed(cfg.seed, &[di as u64, trial as u64]);
    let baseline = cfg.baseline_training();
    let member = draw_member(cfg, space, di, trial);
    let mut out = Vec::new();
    for &method in &cfg.methods {
        let grid: &[usize] = match method {
            Method::Ieee80211ad => &[0],
            Method::Search(_) => &cfg.measurements,
        };
        for &m in grid {
            let result = member.as_ref().map_err(Clone::clone).and_then(|member| {
                let training = match method {
                    Method::Ieee80211ad => baseline.clone()?,
                    Method::Search(_) => m as f64,
                };
                let a = align(method, member, space, &cfg.search, m)?;
                let eta = training_efficiency(cfg.eta_training(training), cfg.coherence_symbols);
                let rate = effective_rate(a.gain, member.snr, cfg.eta_training(training), cfg.coherence_symbols);
                Ok((a, member.snr, eta, rate, training))
            });
            let measurements = match method {
                Method::Ieee80211ad => baseline.as_ref().map_or(0, |b| b.round() as usize),
                Method::Search(_) => m,
            };
            let mut rec = MetricRecord {
                method,
                distance_m: distance,
                measurements,
                trial,
                seed,
                tx_index: 0,
                rx_index: 0,
                gain: f64::NAN,
                best_gain: f64::NAN,
                snr: f64::NAN,
                eta: f64::NAN,
                rate: f64::NAN,
                loss_db: f64::NAN,
                overhead_symbols: f64::NAN,
                error: None,
            };
            match result {
                Ok((a, snr, eta, rate, training)) => {
                    rec.tx_index = a.tx_index;
                    rec.rx_index = a.rx_index;
                    rec.gain = a.gain;
                    rec.best_gain = a.best_gain;
                    rec.snr = snr;
                    rec.eta = eta;
                    rec.rate = rate;
                    rec.loss_db = a.loss_db();
                    rec.overhead_symbols = training;
                }
                Err(e) => {
                    log::error!("{} at {distance} m, M={m}, trial {trial}: {e}", method.name());
                    rec.error = Some(e.to_string());
                }
            }
            out.push(rec);
        }
    }
    out
}

/// Runs every (distance, trial) cell and aggregates per (method, distance, M).
///
/// Cells run in parallel; records are sorted by distance, method (config
/// order), M and trial before aggregation, so the output does not depend on
/// scheduling.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let space = cfg.beamspace()?;
    let cells: Vec<(usize, usize)> = (0..cfg.distances.len()).flat_map(|d| (0..cfg.trials).map(move |t| (d, t))).collect();
    let mut records: Vec<MetricRecord> = cells.par_iter().flat_map_iter(|&(d, t)| trial_records(cfg, &space, d, t)).collect();
    records.sort_by(|a, b| {
        a.distance_m
            .total_cmp(&b.distance_m)
            .then(method_rank(cfg, a.method).cmp(&method_rank(cfg, b.method)))
            .then(a.measurements.cmp(&b.measurements))
            .then(a.trial.cmp(&b.trial))
    });
    let summary = summarise(cfg, &records);
    Ok(ExperimentResult { records, summary })
}

fn summarise(cfg: &ExperimentConfig, records: &[MetricRecord]) -> Vec<SummaryRow> {
    let mut rows: Vec<SummaryRow> = Vec::new();
    for chunk in records.chunk_by(|a, b| a.method == b.method && a.distance_m == b.distance_m && a.measurements == b.measurements) {
        let ok: Vec<&MetricRecord> = chunk.iter().filter(|r| r.error.is_none()).collect();
        let n = ok.len();
        let mut rates: Vec<f64> = ok.iter().map(|r| r.rate).collect();
        rates.sort_by(f64::total_cmp);
        let mean = |v: &mut dyn Iterator<Item = f64>| if n == 0 { f64::NAN } else { v.sum::<f64>() / n as f64 };
        let first = &chunk[0];
        rows.push(SummaryRow {
            method: first.method,
            distance_m: first.distance_m,
            measurements: first.measurements,
            trials: n,
            mean_rate: mean(&mut rates.iter().copied()),
            median_rate: percentile(&rates, 0.5),
            p05_rate: percentile(&rates, 0.05),
            mean_loss_db: mean(&mut ok.iter().map(|r| r.loss_db)),
            success_prob: mean(&mut ok.iter().map(|r| f64::from(u8::from(r.loss_db <= cfg.success_loss_db)))),
            overhead_symbols: ok.first().map_or(f64::NAN, |r| r.overhead_symbols),
            reduction: None,
        });
    }
    // training each method needs to reach the target quality at each distance
    let quality = |row: &SummaryRow| -> f64 {
        let q: Vec<f64> = records
            .iter()
            .filter(|r| r.error.is_none() && r.method == row.method && r.distance_m == row.distance_m)
            .filter(|r| r.measurements == row.measurements)
            .map(|r| if r.best_gain > 0.0 { r.gain / r.best_gain } else { 1.0 })
            .collect();
        q.iter().sum::<f64>() / q.len().max(1) as f64
    };
    let needed: Vec<Option<f64>> = rows
        .iter()
        .map(|row| {
            rows.iter()
                .filter(|r| r.method == row.method && r.distance_m == row.distance_m && r.trials > 0)
                .find(|r| quality(r) >= cfg.target_fraction)
                .map(|r| r.overhead_symbols)
        })
        .collect();
    let bpdn = Method::Search(SearchMethod::Bpdn);
    for i in 0..rows.len() {
        let base = rows.iter().zip(&needed).find(|(r, _)| r.method == bpdn && r.distance_m == rows[i].distance_m).and_then(|(_, n)| *n);
        rows[i].reduction = match (needed[i], base) {
            (Some(m), Some(b)) => overhead_reduction(m, b).ok(),
            _ => None,
        };
    }
    rows
}

fn num(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v}")
    }
}

/// Summary rows as CSV with [`SUMMARY_HEADER`].
pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut s = String::from(SUMMARY_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.method.name(),
            r.distance_m,
            r.measurements,
            r.trials,
            num(r.mean_rate),
            num(r.median_rate),
            num(r.p05_rate),
            num(r.mean_loss_db),
            num(r.success_prob),
            num(r.overhead_symbols),
            r.reduction.map_or(String::new(), num)
        );
    }
    s
}

pub const RECORD_HEADER: &str =
    "method,distance_m,M,trial,seed,tx_index,rx_index,gain,best_gain,snr,eta,rate,loss_db,overhead_symbols,error";

/// Raw records as CSV with [`RECORD_HEADER`].
pub fn records_csv(records: &[MetricRecord]) -> String {
    let mut s = String::from(RECORD_HEADER);
    s.push('\n');
    for r in records {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.method.name(),
            r.distance_m,
            r.measurements,
            r.trial,
            r.seed,
            r.tx_index,
            r.rx_index,
            num(r.gain),
            num(r.best_gain),
            num(r.snr),
            num(r.eta),
            num(r.rate),
            num(r.loss_db),
            num(r.overhead_symbols),
            r.error.as_deref().unwrap_or("").replace(',', ";")
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::ArrayGeometry;
    use crate::channel::{CongruencePolicy, PathSet};

    fn small() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.channel.mmwave_tx = ArrayGeometry::ula(8);
        cfg.channel.mmwave_rx = ArrayGeometry::ula(8);
        cfg.measurements = vec![16];
        cfg.trials = 3;
        cfg
    }

    #[test]
    fn one_trial_one_record() {
        let mut cfg = small();
        cfg.trials = 1;
        cfg.methods = vec![Method::Search(SearchMethod::Bpdn)];
        let r = run_experiment(&cfg).unwrap();
        assert_eq!(r.records.len(), 1);
        assert_eq!(r.summary.len(), 1);
        let rec = &r.records[0];
        assert!(rec.error.is_none());
        assert!((0.0..=1.0).contains(&rec.eta));
        assert!(rec.loss_db >= 0.0);
        assert_eq!(summary_csv(&r.summary).lines().next(), Some(SUMMARY_HEADER));
    }

    #[test]
    fn summary_is_reproducible_and_thread_independent() {
        let cfg = small();
        let run = |threads| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| run_experiment(&cfg).unwrap())
        };
        let a = run(1);
        let b = run(3);
        assert_eq!(summary_csv(&a.summary), summary_csv(&b.summary));
        assert_eq!(records_csv(&a.records), records_csv(&b.records));
        assert_eq!(summary_csv(&a.summary), summary_csv(&run_experiment(&cfg).unwrap().summary));
    }

    #[test]
    fn ieee80211ad_row() {
        let mut cfg = small();
        cfg.channel.mmwave_tx = ArrayGeometry::ula(32);
        cfg.channel.mmwave_rx = ArrayGeometry::ula(32);
        cfg.trials = 2;
        cfg.methods = vec![Method::Ieee80211ad];
        let r = run_experiment(&cfg).unwrap();
        for rec in &r.records {
            assert_eq!(rec.overhead_symbols, 96.0);
            assert_eq!(rec.loss_db, 0.0);
            assert_eq!(rec.gain, rec.best_gain);
        }
    }

    #[test]
    fn failed_cells_are_logged_not_fatal() {
        let mut cfg = small();
        // unreachable gain threshold for every structured beam
        cfg.search.gamma = 1.5;
        let r = run_experiment(&cfg).unwrap();
        let (bad, good): (Vec<_>, Vec<_>) = r.records.iter().partition(|r| r.error.is_some());
        assert!(bad.iter().all(|r| r.method == Method::Search(SearchMethod::SwBpdn) && r.rate.is_nan()));
        assert_eq!(bad.len(), cfg.trials);
        assert_eq!(good.len(), 2 * cfg.trials);
        let sw = r.summary.iter().find(|s| s.method == Method::Search(SearchMethod::SwBpdn)).unwrap();
        assert_eq!(sw.trials, 0);
    }

    #[test]
    fn method_names() {
        assert_eq!("11ad".parse::<Method>().unwrap(), Method::Ieee80211ad);
        assert_eq!("w-bpdn".parse::<Method>().unwrap(), Method::Search(SearchMethod::WBpdn));
        assert!(matches!("fingerprint".parse::<Method>(), Err(Error::Config(_))));
        let e = "omp".parse::<Method>().unwrap_err().to_string();
        assert!(e.contains("bpdn, w-bpdn, sw-bpdn, 11ad"), "{e}");
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = small();
        cfg.distances = vec![50.0, 40.0];
        assert!(cfg.validate().is_err());
        let mut cfg = small();
        cfg.measurements = vec![];
        assert!(cfg.validate().is_err());
        let mut cfg = small();
        cfg.trials = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn target_edge_cases() {
        let grid = [4, 9, 16];
        assert!(matches!(measurements_to_target_with(0, 0.5, &grid, |_, _| Ok(1.0)), Err(Error::Domain(_))));
        assert_eq!(measurements_to_target_with(3, 0.0, &grid, |_, _| Ok(0.0)).unwrap(), Some(4));
        assert_eq!(measurements_to_target_with(3, 0.5, &grid, |_, _| Ok(0.1)).unwrap(), None);
        assert!(measurements_to_target_with(3, 0.5, &[9, 4], |_, _| Ok(1.0)).is_err());
    }

    #[test]
    fn exhaustive_probe_order_oracle() {
        // one on-grid path per channel; the dictionary probes grid pairs in
        // flat order, so the target is met once the true pair is probed
        let cfg = small();
        let space = cfg.beamspace().unwrap();
        let truth = [(5usize, 2usize), (1, 7), (3, 3)];
        let hs: Vec<DMatrix<Complex64>> = truth
            .iter()
            .map(|&(t, r)| {
                let ps = PathSet {
                    band: crate::channel::Band::Mmwave,
                    paths: vec![crate::channel::Path {
                        gain: Complex64::new(1.0, 0.0),
                        departure: crate::array::Direction::azimuth(space.tx_grid.angles()[t]),
                        arrival: crate::array::Direction::azimuth(space.rx_grid.angles()[r]),
                        delay: 0.0,
                    }],
                };
                narrowband_matrix(&ps, &space.rx, &space.tx).unwrap()
            })
            .collect();
        let quality = |i: usize, m: usize| -> Result<f64> {
            let g = space.pair_gains(&hs[i]);
            let best = g.iter().cloned().fold(0.0, f64::max);
            let probed = m.min(g.len());
            let sel = (0..probed).fold(0, |b, k| if g[k] > g[b] { k } else { b });
            Ok(g[sel] / best)
        };
        let grid: Vec<usize> = (1..=64).collect();
        let oracle = truth.iter().map(|&(t, r)| space.flat(t, r) + 1).max();
        assert_eq!(measurements_to_target_with(3, 1.0 - 1e-9, &grid, quality).unwrap(), oracle);
        // one channel alone
        let single = measurements_to_target_with(1, 1.0 - 1e-9, &grid, |_, m| quality(1, m)).unwrap();
        assert_eq!(single, Some(space.flat(1, 7) + 1));
    }

    #[test]
    fn alignment_loss() {
        let a = Alignment { tx_index: 0, rx_index: 0, gain: 0.5, best_gain: 1.0 };
        assert!((a.loss_db() - 3.0103).abs() < 1e-4);
        assert_eq!(a.quality(), 0.5);
        let z = Alignment { gain: 0.0, ..a };
        assert_eq!(z.loss_db(), f64::INFINITY);
    }

    #[test]
    fn prior_follows_congruent_paths() {
        let mut cfg = small();
        cfg.channel.paths = 1;
        cfg.policy = CongruencePolicy::exact();
        let space = cfg.beamspace().unwrap();
        let m = draw_member(&cfg, &space, 0, 0).unwrap();
        let g = space.pair_gains(&m.h);
        let best = g.iter().cloned().fold(0.0, f64::max);
        let (t, r) = (space.tx_grid.nearest(m.prior.tx_angles[0]), space.rx_grid.nearest(m.prior.rx_angles[0]));
        assert!(g[space.flat(t, r)] >= 0.5 * best);
    }
}
