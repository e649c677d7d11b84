//! Seeded synthetic street scene: a roadside unit at the origin serving
//! vehicles on a rectangular stretch of road.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::pointing::{bearing, Pose};
use crate::channel::{Band, Path, PathSet};
use crate::error::{config, domain, Result};
use crate::link::SPEED_OF_LIGHT;
use crate::rng::{rng_from, SimRng};

/// Rectangular region split into square bins, row-major from `(x_min, y_min)`.
///
/// A point on a shared edge belongs to the lower-index bin; the last bin of
/// each row and column is clipped to the region when the extent is not a
/// multiple of `size`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BinGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub size: f64,
}

impl BinGrid {
    pub fn validate(&self) -> Result<()> {
        let vals = [self.x_min, self.x_max, self.y_min, self.y_max, self.size];
        if vals.iter().any(|v| !v.is_finite()) {
            return config("bin grid bounds must be finite");
        }
        if !(self.x_max > self.x_min && self.y_max > self.y_min) {
            return config(format!("empty region x [{}, {}] y [{}, {}]", self.x_min, self.x_max, self.y_min, self.y_max));
        }
        if !(self.size > 0.0) {
            return config(format!("bin size {} must be positive", self.size));
        }
        Ok(())
    }

    fn cells(extent: f64, size: f64) -> usize {
        // absorb rounding so 20.0 / 1.0 stays 20 bins
        ((extent / size) - 1e-9).ceil().max(1.0) as usize
    }

    pub fn nx(&self) -> usize {
        Self::cells(self.x_max - self.x_min, self.size)
    }

    pub fn ny(&self) -> usize {
        Self::cells(self.y_max - self.y_min, self.size)
    }

    pub fn len(&self) -> usize {
        self.nx() * self.ny()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x_min && x <= self.x_max && y >= self.y_min && y <= self.y_max
    }

    fn axis_index(offset: f64, size: f64, count: usize) -> usize {
        let k = (offset / size).ceil() as i64 - 1;
        k.clamp(0, count as i64 - 1) as usize
    }

    pub fn bin_of(&self, x: f64, y: f64) -> Result<usize> {
        if !self.contains(x, y) {
            return domain(format!(
                "position ({x:.3}, {y:.3}) outside region x [{}, {}] y [{}, {}]",
                self.x_min, self.x_max, self.y_min, self.y_max
            ));
        }
        let ix = Self::axis_index(x - self.x_min, self.size, self.nx());
        let iy = Self::axis_index(y - self.y_min, self.size, self.ny());
        Ok(iy * self.nx() + ix)
    }

    /// `(x_lo, x_hi, y_lo, y_hi)` of a bin.
    pub fn bounds(&self, bin: usize) -> Result<(f64, f64, f64, f64)> {
        if bin >= self.len() {
            return domain(format!("bin {bin} outside 0..{}", self.len()));
        }
        let (ix, iy) = ((bin % self.nx()) as f64, (bin / self.nx()) as f64);
        let x_lo = self.x_min + ix * self.size;
        let y_lo = self.y_min + iy * self.size;
        Ok((x_lo, (x_lo + self.size).min(self.x_max), y_lo, (y_lo + self.size).min(self.y_max)))
    }

    /// Clamps a point into the region.
    pub fn clamp(&self, x: f64, y: f64) -> (f64, f64) {
        (x.clamp(self.x_min, self.x_max), y.clamp(self.y_min, self.y_max))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    /// Roadside unit position; its array faces +y.
    pub transmitter: [f64; 3],
    /// Vehicle array height; the array faces -y, toward the roadside unit.
    pub receiver_height: f64,
    pub region: BinGrid,
    pub blockage_probability: f64,
    pub min_reflectors: usize,
    pub max_reflectors: usize,
    /// Range of wall amplitude reflection coefficients.
    pub reflection: (f64, f64),
    /// Range of wall distances beyond the road and the transmitter (m).
    pub wall_offset: (f64, f64),
    pub seed: u64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            transmitter: [0.0, 0.0, 6.0],
            receiver_height: 1.5,
            region: BinGrid { x_min: -10.0, x_max: 10.0, y_min: 8.0, y_max: 12.0, size: 1.0 },
            blockage_probability: 0.2,
            min_reflectors: 1,
            max_reflectors: 3,
            reflection: (0.3, 0.7),
            wall_offset: (3.0, 20.0),
            seed: 0,
        }
    }
}

impl SceneConfig {
    /// Unblocked line of sight only.
    pub fn los_only(self) -> Self {
        Self { blockage_probability: 0.0, min_reflectors: 0, max_reflectors: 0, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        self.region.validate()?;
        if self.transmitter.iter().any(|v| !v.is_finite()) || !self.receiver_height.is_finite() {
            return config("scene positions must be finite");
        }
        if !(self.region.y_min > self.transmitter[1]) {
            return config("the road region must lie in front of the transmitter (y_min > transmitter y)");
        }
        if !(0.0..=1.0).contains(&self.blockage_probability) {
            return config(format!("blockage probability {} outside [0, 1]", self.blockage_probability));
        }
        if self.min_reflectors > self.max_reflectors {
            return config(format!("reflector range {}..={} is empty", self.min_reflectors, self.max_reflectors));
        }
        let (r0, r1) = self.reflection;
        if !(r0 > 0.0 && r1 >= r0 && r1 <= 1.0) {
            return config(format!("reflection range ({r0}, {r1}) must satisfy 0 < lo <= hi <= 1"));
        }
        let (w0, w1) = self.wall_offset;
        if !(w0 > 0.0 && w1 >= w0 && w1.is_finite()) {
            return config(format!("wall offset range ({w0}, {w1}) must satisfy 0 < lo <= hi"));
        }
        Ok(())
    }
}

/// Vertical reflecting plane `x = const`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wall {
    pub x: f64,
    pub reflection: f64,
}

/// Propagation environment seen from one bin.
#[derive(Debug, Clone, PartialEq)]
pub struct BinEnvironment {
    pub los: bool,
    pub walls: Vec<Wall>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub config: SceneConfig,
    /// Reflectors shared by every bin.
    pub walls: Vec<Wall>,
}

const WALL_STREAM: u64 = 0;
const BLOCKAGE_STREAM: u64 = 2;

/// Walls on either side of the road, beyond both the region and the transmitter.
fn place_walls(c: &SceneConfig) -> Vec<Wall> {
    let mut rng = rng_from(c.seed, &[WALL_STREAM]);
    let count = rng.gen_range(c.min_reflectors..=c.max_reflectors);
    let (lo, hi) = (c.transmitter[0].min(c.region.x_min), c.transmitter[0].max(c.region.x_max));
    (0..count)
        .map(|_| {
            let offset = c.wall_offset.0 + rng.gen::<f64>() * (c.wall_offset.1 - c.wall_offset.0);
            let x = if rng.gen::<bool>() { hi + offset } else { lo - offset };
            let reflection = c.reflection.0 + rng.gen::<f64>() * (c.reflection.1 - c.reflection.0);
            Wall { x, reflection }
        })
        .collect()
}

impl Scene {
    pub fn new(config: SceneConfig) -> Result<Self> {
        config.validate()?;
        let walls = place_walls(&config);
        Ok(Self { config, walls })
    }

    pub fn grid(&self) -> &BinGrid {
        &self.config.region
    }

    pub fn transmitter(&self) -> Pose {
        Pose { position: self.config.transmitter, facing: FRAC_PI_2 }
    }

    pub fn receiver_at(&self, x: f64, y: f64) -> Pose {
        Pose { position: [x, y, self.config.receiver_height], facing: -FRAC_PI_2 }
    }

    /// Environment of `bin`; depends only on `(bin, seed)`.
    pub fn environment(&self, bin: usize) -> Result<BinEnvironment> {
        self.config.region.bounds(bin)?;
        let mut rng = rng_from(self.config.seed, &[BLOCKAGE_STREAM, bin as u64]);
        let blocked = rng.gen::<f64>() < self.config.blockage_probability;
        // without reflectors the line of sight is always kept
        Ok(BinEnvironment { los: !blocked || self.walls.is_empty(), walls: self.walls.clone() })
    }

    /// Paths to a vehicle at `(x, y)` with independent uniform phases,
    /// normalised so the squared gains sum to one. Amplitudes fall as
    /// 1/length; delays are the path lengths over c.
    pub fn paths_at(&self, env: &BinEnvironment, x: f64, y: f64, rng: &mut SimRng) -> Result<PathSet> {
        let tx = self.transmitter();
        let rx = self.receiver_at(x, y);
        let t = tx.position;
        let r = rx.position;
        let dist = |a: [f64; 3], b: [f64; 3]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
        let mut paths = Vec::new();
        if env.los {
            let d = dist(t, r);
            paths.push((1.0 / d, bearing(&tx, r)?, bearing(&rx, t)?, d));
        }
        for w in &env.walls {
            if (t[0] - w.x).signum() != (r[0] - w.x).signum() {
                continue;
            }
            let image = [2.0 * w.x - t[0], t[1], t[2]];
            let s = (w.x - image[0]) / (r[0] - image[0]);
            let hit = [w.x, image[1] + s * (r[1] - image[1]), image[2] + s * (r[2] - image[2])];
            let d = dist(image, r);
            paths.push((w.reflection / d, bearing(&tx, hit)?, bearing(&rx, hit)?, d));
        }
        if paths.is_empty() {
            return domain(format!("no propagation path reaches ({x}, {y})"));
        }
        let total: f64 = paths.iter().map(|p| p.0 * p.0).sum();
        let paths = paths
            .into_iter()
            .map(|(amp, departure, arrival, d)| Path {
                gain: Complex64::from_polar(amp / total.sqrt(), rng.gen::<f64>() * 2.0 * PI),
                departure,
                arrival,
                delay: d / SPEED_OF_LIGHT,
            })
            .collect();
        Ok(PathSet { band: Band::Mmwave, paths })
    }

    /// Uniform position inside `bin`.
    pub fn sample_in_bin(&self, bin: usize, rng: &mut SimRng) -> Result<(f64, f64)> {
        let (x0, x1, y0, y1) = self.config.region.bounds(bin)?;
        Ok((x0 + rng.gen::<f64>() * (x1 - x0), y0 + rng.gen::<f64>() * (y1 - y0)))
    }

    /// Uniform position in the whole region.
    pub fn sample_position(&self, rng: &mut SimRng) -> (f64, f64) {
        let g = &self.config.region;
        (g.x_min + rng.gen::<f64>() * (g.x_max - g.x_min), g.y_min + rng.gen::<f64>() * (g.y_max - g.y_min))
    }
}
