use std::fmt::Write as _;

use super::pointing::PositionEstimate;
use super::scene::BinGrid;
use crate::error::{config, Error, Result};

pub const DATABASE_FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "# oobmm fingerprint database";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankedPair {
    pub tx: usize,
    pub rx: usize,
    /// Mean received power (linear).
    pub power: f64,
    /// Channel snapshots averaged into `power`.
    pub count: usize,
}

/// Per-bin beam-pair rankings, strongest first.
#[derive(Debug, Clone, PartialEq)]
pub struct FingerprintDatabase {
    pub grid: BinGrid,
    pub tx_beams: usize,
    pub rx_beams: usize,
    bins: Vec<Vec<RankedPair>>,
}

fn rank_order(a: &RankedPair, b: &RankedPair) -> std::cmp::Ordering {
    b.power.total_cmp(&a.power).then((a.tx, a.rx).cmp(&(b.tx, b.rx)))
}

impl FingerprintDatabase {
    /// Validates the entries and sorts each bin by descending power, ties by
    /// ascending `(tx, rx)`.
    pub fn new(grid: BinGrid, tx_beams: usize, rx_beams: usize, mut bins: Vec<Vec<RankedPair>>) -> Result<Self> {
        grid.validate()?;
        if bins.len() != grid.len() {
            return config(format!("database has {} bins, the grid has {}", bins.len(), grid.len()));
        }
        for (b, list) in bins.iter_mut().enumerate() {
            for p in list.iter() {
                if p.tx >= tx_beams || p.rx >= rx_beams {
                    return config(format!("bin {b}: pair ({}, {}) outside {tx_beams}x{rx_beams}", p.tx, p.rx));
                }
                if !(p.power >= 0.0 && p.power.is_finite()) {
                    return config(format!("bin {b}: power {} must be finite and non-negative", p.power));
                }
            }
            list.sort_by(rank_order);
        }
        Ok(Self { grid, tx_beams, rx_beams, bins })
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn bin(&self, bin: usize) -> Option<&[RankedPair]> {
        self.bins.get(bin).map(Vec::as_slice)
    }

    /// Ranking of the bin containing `estimate`.
    pub fn rank(&self, estimate: &PositionEstimate) -> Result<&[RankedPair]> {
        let b = self.grid.bin_of(estimate.x, estimate.y)?;
        Ok(&self.bins[b])
    }

    pub fn to_text(&self) -> String {
        let g = &self.grid;
        let mut s = format!("{MAGIC} v{DATABASE_FORMAT_VERSION}\n");
        let _ = writeln!(s, "# grid {} {} {} {} {}", g.x_min, g.x_max, g.y_min, g.y_max, g.size);
        let _ = writeln!(s, "# beams {} {}", self.tx_beams, self.rx_beams);
        let _ = writeln!(s, "# bin tx rx power count");
        for (b, list) in self.bins.iter().enumerate() {
            for p in list {
                let _ = writeln!(s, "{b} {} {} {:e} {}", p.tx, p.rx, p.power, p.count);
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let perr = |line: usize, message: String| Error::Parse { line, message };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        let (_, head) = lines.next().ok_or_else(|| perr(1, "empty database file".into()))?;
        let version = head
            .strip_prefix(MAGIC)
            .and_then(|v| v.trim().strip_prefix('v'))
            .ok_or_else(|| perr(1, format!("missing header '{MAGIC} v<N>'")))?;
        if version.parse::<u32>().ok() != Some(DATABASE_FORMAT_VERSION) {
            return Err(perr(1, format!("unsupported database version '{version}'")));
        }
        let mut grid = None;
        let mut beams = None;
        let mut rows = Vec::new();
        for (n, line) in lines {
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let mut f = rest.split_whitespace();
                match f.next() {
                    Some("grid") => {
                        let v = f.map(str::parse::<f64>).collect::<std::result::Result<Vec<_>, _>>();
                        match v.as_deref() {
                            Ok([x0, x1, y0, y1, sz]) => grid = Some(BinGrid { x_min: *x0, x_max: *x1, y_min: *y0, y_max: *y1, size: *sz }),
                            _ => return Err(perr(n, "grid header needs five numbers".into())),
                        }
                    }
                    Some("beams") => {
                        let v = f.map(str::parse::<usize>).collect::<std::result::Result<Vec<_>, _>>();
                        match v.as_deref() {
                            Ok([t, r]) => beams = Some((*t, *r)),
                            _ => return Err(perr(n, "beams header needs two counts".into())),
                        }
                    }
                    _ => {}
                }
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 5 {
                return Err(perr(n, format!("expected 5 fields, found {}", f.len())));
            }
            let int = |s: &str, what: &str| s.parse::<usize>().map_err(|e| perr(n, format!("bad {what} '{s}': {e}")));
            let bin = int(f[0], "bin")?;
            let pair = RankedPair {
                tx: int(f[1], "tx beam")?,
                rx: int(f[2], "rx beam")?,
                power: f[3].parse().map_err(|e| perr(n, format!("bad power '{}': {e}", f[3])))?,
                count: int(f[4], "count")?,
            };
            rows.push((n, bin, pair));
        }
        let grid = grid.ok_or_else(|| perr(1, "missing '# grid' header".into()))?;
        let (tx_beams, rx_beams) = beams.ok_or_else(|| perr(1, "missing '# beams' header".into()))?;
        grid.validate()?;
        let mut bins = vec![Vec::new(); grid.len()];
        for (n, bin, pair) in rows {
            bins.get_mut(bin).ok_or_else(|| perr(n, format!("bin {bin} outside the grid")))?.push(pair);
        }
        Self::new(grid, tx_beams, rx_beams, bins)
    }
}
