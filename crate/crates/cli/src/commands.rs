//! The four experiment commands.

use std::fmt::Write as _;
use std::path::Path;

use oobmm::channel::{generate_congruent_channels, narrowband_matrix, paths_to_taps, PathSet};
use oobmm::config::RunConfig;
use oobmm::eval::{fingerprint_csv, records_csv, run_experiment, run_fingerprint_sweep_with, summary_csv};
use oobmm::position::{build_fingerprint_db, FingerprintDatabase};
use oobmm::rng::derive_seed;
use oobmm::textio::MatrixFile;
use oobmm::translation::run_translation_ensemble;

use crate::artifacts::{read_text, OutputDir};
use crate::CliError;

fn header(pairs: &[(&str, String)]) -> Vec<(String, String)> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn path_rows(out: &mut String, realization: usize, set: &PathSet) {
    for p in &set.paths {
        let _ = writeln!(
            out,
            "{realization},{},{:e},{:e},{:e},{:e},{:e}",
            set.band.as_str(),
            p.gain.re,
            p.gain.im,
            p.departure.azimuth,
            p.arrival.azimuth,
            p.delay
        );
    }
}

pub fn gen_channels(cfg: &RunConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let (channel, policy) = cfg.channel_setup()?;
    let realizations = cfg.channel.as_ref().map_or(1, |c| c.realizations);
    let mut paths = String::from("realization,band,gain_re,gain_im,departure_rad,arrival_rad,delay_s\n");
    for r in 0..realizations {
        let seed = derive_seed(cfg.seed, &[r as u64]);
        let (sub6, mm) = generate_congruent_channels(&channel, &policy, seed)?;
        let h = narrowband_matrix(&sub6, &channel.sub6_rx, &channel.sub6_tx)?;
        let taps = paths_to_taps(&mm, &channel.mmwave_rx, &channel.mmwave_tx, channel.sample_period)?;
        let common = [("seed", seed.to_string()), ("realization", r.to_string())];
        let sub6_file =
            MatrixFile::single(header(&[("band", "sub6".into()), common[0].clone(), common[1].clone(), ("kind", "narrowband".into())]), h);
        let mm_file = MatrixFile {
            header: header(&[
                ("band", "mmwave".into()),
                common[0].clone(),
                common[1].clone(),
                ("kind", "taps".into()),
                ("sample_period_s", format!("{:e}", channel.sample_period)),
            ]),
            blocks: taps.taps,
        };
        out.write(&format!("channels/r{r:04}_sub6.txt"), &sub6_file.to_text()?)?;
        out.write(&format!("channels/r{r:04}_mmwave_taps.txt"), &mm_file.to_text()?)?;
        path_rows(&mut paths, r, &sub6);
        path_rows(&mut paths, r, &mm);
    }
    out.write("paths.csv", &paths)?;
    Ok(())
}

pub fn beamsearch(cfg: &RunConfig, out: &mut OutputDir, records: bool) -> Result<(), CliError> {
    let exp = cfg.experiment()?;
    let result = run_experiment(&exp)?;
    let failed = result.records.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        log::warn!("{failed} of {} cells failed; see the error column of records.csv", result.records.len());
    }
    out.write("summary.csv", &summary_csv(&result.summary))?;
    if records || failed > 0 {
        out.write("records.csv", &records_csv(&result.records))?;
    }
    Ok(())
}

pub fn fingerprint(cfg: &RunConfig, out: &mut OutputDir, save_db: bool, load_db: Option<&Path>) -> Result<(), CliError> {
    let sweep = cfg.fingerprint_sweep()?;
    let mut saved: Vec<(String, String)> = Vec::new();
    let rows = run_fingerprint_sweep_with(&sweep, |scene, cb| {
        let name = format!("db_{}x{}.txt", cb.side, cb.side);
        let db = match load_db {
            Some(dir) => {
                let text = read_text(&dir.join(&name)).map_err(|e| oobmm::Error::Config(e.to_string()))?;
                FingerprintDatabase::from_text(&text)?
            }
            None => build_fingerprint_db(scene, cb, cb, &sweep.database)?,
        };
        if db.grid != *scene.grid() {
            return Err(oobmm::Error::Config(format!("{name} was built for a different region")));
        }
        if save_db {
            saved.push((name, db.to_text()));
        }
        Ok(db)
    })?;
    for (name, text) in saved {
        out.write(&format!("databases/{name}"), &text)?;
    }
    out.write("fingerprint.csv", &fingerprint_csv(&rows))?;
    Ok(())
}

pub fn covtranslate(cfg: &RunConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let settings = cfg.translation()?;
    let rows = run_translation_ensemble(&settings, cfg.seed)?;
    let mut s = String::from("case,seed,family,mean_deg,spread_deg,method,nmse\n");
    for r in &rows {
        let _ = writeln!(s, "{},{},{},{},{},{},{:e}", r.case, r.seed, r.family.name(), r.mean_deg, r.spread_deg, r.method, r.nmse);
    }
    out.write("nmse.csv", &s)?;
    Ok(())
}
