//! Antenna array geometry and steering vectors.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArrayKind {
    Linear,
    Planar,
}

/// Uniform linear or planar array.
///
/// Element `(m, n)` of a planar array sits at `(m, n) * spacing` wavelengths
/// and is stored at flat index `m * rows + n`. A linear array has a single
/// column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayGeometry {
    pub kind: ArrayKind,
    /// Elements along the horizontal axis.
    pub cols: usize,
    /// Elements along the vertical axis (1 for linear arrays).
    pub rows: usize,
    /// Element spacing in carrier wavelengths.
    pub spacing: f64,
}

impl ArrayGeometry {
    pub fn ula(n: usize) -> Self {
        Self { kind: ArrayKind::Linear, cols: n, rows: 1, spacing: 0.5 }
    }

    pub fn upa(cols: usize, rows: usize) -> Self {
        Self { kind: ArrayKind::Planar, cols, rows, spacing: 0.5 }
    }

    pub fn with_spacing(mut self, spacing: f64) -> Self {
        self.spacing = spacing;
        self
    }

    pub fn len(&self) -> usize {
        self.cols * self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_linear(&self) -> bool {
        self.kind == ArrayKind::Linear
    }

    pub fn validate(&self) -> Result<()> {
        if self.cols == 0 || self.rows == 0 {
            return Err(Error::Config(format!("array needs at least one element, got {}x{}", self.cols, self.rows)));
        }
        if self.kind == ArrayKind::Linear && self.rows != 1 {
            return Err(Error::Config(format!("linear array must have a single row, got {}", self.rows)));
        }
        if !(self.spacing.is_finite() && self.spacing > 0.0) {
            return Err(Error::Config(format!("element spacing must be positive, got {}", self.spacing)));
        }
        Ok(())
    }
}

/// Propagation direction in an array's local frame.
///
/// Azimuth is measured from broadside in the horizontal plane, elevation
/// from the horizontal plane. Both must lie in `[-pi/2, pi/2]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Direction {
    pub azimuth: f64,
    pub elevation: f64,
}

impl Direction {
    pub fn new(azimuth: f64, elevation: f64) -> Self {
        Self { azimuth, elevation }
    }

    pub fn azimuth(azimuth: f64) -> Self {
        Self { azimuth, elevation: 0.0 }
    }

    pub fn check(&self) -> Result<()> {
        for (name, a) in [("azimuth", self.azimuth), ("elevation", self.elevation)] {
            if !a.is_finite() || a.abs() > FRAC_PI_2 {
                return domain(format!("{name} {a} rad outside [-pi/2, pi/2]"));
            }
        }
        Ok(())
    }

    /// Direction cosines `(u, v)` along the horizontal and vertical array axes.
    pub fn cosines(&self) -> (f64, f64) {
        (self.elevation.cos() * self.azimuth.sin(), self.elevation.sin())
    }
}

/// Unit-norm response of a `n`-element line with the given spacing to a
/// plane wave with direction cosine `u`.
pub fn line_response(n: usize, spacing: f64, u: f64) -> DVector<Complex64> {
    let scale = 1.0 / (n as f64).sqrt();
    let step = 2.0 * PI * spacing * u;
    DVector::from_iterator(n, (0..n).map(|k| Complex64::from_polar(scale, step * k as f64)))
}

/// Steering vector for direction cosines `(u, v)`; no domain check.
pub fn steering_from_cosines(geometry: &ArrayGeometry, u: f64, v: f64) -> DVector<Complex64> {
    let horiz = line_response(geometry.cols, geometry.spacing, u);
    if geometry.rows == 1 {
        return horiz;
    }
    let vert = line_response(geometry.rows, geometry.spacing, v);
    DVector::from_iterator(geometry.len(), horiz.iter().flat_map(|h| vert.iter().map(move |w| h * w)))
}

/// Array response toward `direction`, normalised to unit norm.
pub fn steering_vector(geometry: &ArrayGeometry, direction: Direction) -> Result<DVector<Complex64>> {
    geometry.validate()?;
    direction.check()?;
    let (u, v) = direction.cosines();
    Ok(steering_from_cosines(geometry, u, v))
}
