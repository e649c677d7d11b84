use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::array::{line_response, steering_vector, ArrayGeometry, Direction};
use crate::error::{config, domain, Result};
use crate::rng::{normal, seeded};

/// Position fix on the road plane with isotropic error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositionEstimate {
    pub x: f64,
    pub y: f64,
    /// Error standard deviation per axis (m).
    pub sigma: f64,
}

impl PositionEstimate {
    pub fn new(x: f64, y: f64, sigma: f64) -> Result<Self> {
        if !(x.is_finite() && y.is_finite()) {
            return domain(format!("position ({x}, {y}) is not finite"));
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return domain(format!("position error {sigma} must be non-negative"));
        }
        Ok(Self { x, y, sigma })
    }

    /// Array pose at this position, `height` metres up, boresight yaw `facing`.
    pub fn pose(&self, height: f64, facing: f64) -> Pose {
        Pose { position: [self.x, self.y, height], facing }
    }
}

/// Array location and orientation. `facing` is the boresight yaw in radians
/// counter-clockwise from +x; the array plane is vertical.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub position: [f64; 3],
    pub facing: f64,
}

/// Direction of `target` in the local frame of `from`.
///
/// Azimuth is positive toward the right of boresight (`boresight` rotated by
/// -90 degrees), elevation positive upward. Targets behind the array plane
/// are a domain error.
pub fn bearing(from: &Pose, target: [f64; 3]) -> Result<Direction> {
    let d = [target[0] - from.position[0], target[1] - from.position[1], target[2] - from.position[2]];
    let norm = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    if !(norm > 1e-12) {
        return domain("bearing between coincident points is undefined");
    }
    let (s, c) = from.facing.sin_cos();
    let ahead = d[0] * c + d[1] * s;
    let lateral = d[0] * s - d[1] * c;
    let dir = Direction::new(lateral.atan2(ahead), d[2].atan2(ahead.hypot(lateral)));
    if dir.azimuth.abs() > FRAC_PI_2 + 1e-12 {
        return domain(format!("target lies behind the array (azimuth {:.3} rad)", dir.azimuth));
    }
    Ok(Direction::new(dir.azimuth.clamp(-FRAC_PI_2, FRAC_PI_2), dir.elevation))
}

/// Line-of-sight (departure, arrival) pair between two array poses.
pub fn pointing_direction(tx: &Pose, rx: &Pose) -> Result<(Direction, Direction)> {
    Ok((bearing(tx, rx.position)?, bearing(rx, tx.position)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamwidthChoice {
    /// Index into the candidate list, widest (2 elements) first.
    pub index: usize,
    pub active_elements: usize,
    /// Monte Carlo mean gain per candidate.
    pub mean_gains: Vec<f64>,
}

/// Picks the number of active elements `2^k` (k = 1..log2 N) of an `n`-element
/// ULA that maximises the mean gain toward a receiver `distance` metres away
/// at broadside, when the beam is steered at a position fix with error `sigma_p`.
///
/// All candidates and all `sigma_p` share the same standard normal draws, so a
/// sweep over `sigma_p` uses common random numbers. Ties go to the wider beam.
pub fn select_beamwidth(n: usize, sigma_p: f64, distance: f64, trials: usize, seed: u64) -> Result<BeamwidthChoice> {
    if !n.is_power_of_two() || n < 4 {
        return config(format!("array size {n} must be a power of two with at least two candidate widths"));
    }
    if trials == 0 {
        return config("beamwidth selection needs at least one trial");
    }
    if !(sigma_p >= 0.0 && sigma_p.is_finite()) {
        return domain(format!("position error {sigma_p} must be non-negative"));
    }
    if !(distance > 0.0 && distance.is_finite()) {
        return domain(format!("link distance {distance} must be positive"));
    }
    let truth_response = steering_vector(&ArrayGeometry::ula(n), Direction::azimuth(0.0))?;
    let tx = Pose { position: [0.0, 0.0, 0.0], facing: FRAC_PI_2 };
    let widths: Vec<usize> = (1..=n.trailing_zeros()).map(|k| 1usize << k).collect();
    let mut rng = seeded(seed);
    let mut sums = vec![0.0; widths.len()];
    for _ in 0..trials {
        let (ex, ey) = (normal(&mut rng, 1.0), normal(&mut rng, 1.0));
        let target = [sigma_p * ex, distance + sigma_p * ey, 0.0];
        // estimates behind the array are pointed at endfire
        let az = match bearing(&tx, target) {
            Ok(d) => d.azimuth,
            Err(_) => FRAC_PI_2.copysign(target[0]),
        };
        for (sum, &active) in sums.iter_mut().zip(&widths) {
            // unit-norm beam on the first `active` elements, inactive ones at zero
            let beam = line_response(active, 0.5, az.sin());
            *sum += beam.dotc(&truth_response.rows(0, active)).norm_sqr() * n as f64;
        }
    }
    let mean_gains: Vec<f64> = sums.iter().map(|s| s / trials as f64).collect();
    let index = (1..widths.len()).fold(0, |best, i| if mean_gains[i] > mean_gains[best] { i } else { best });
    Ok(BeamwidthChoice { index, active_elements: widths[index], mean_gains })
}
