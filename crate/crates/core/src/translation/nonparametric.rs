use std::f64::consts::PI;

use num_complex::Complex64;

use super::correlation::{project_psd, SpatialCorrelation};
use super::spectrum::toeplitz_from_lags;
use crate::array::ArrayGeometry;
use crate::channel::Band;
use crate::error::{domain, Error, Result};

/// Fraction of the unmeasured lag span covered by the extrapolation taper.
pub const TAPER_FRACTION: f64 = 0.5;

/// Natural cubic spline through complex samples on uniform knots.
#[derive(Debug, Clone)]
pub struct UniformSpline {
    start: f64,
    step: f64,
    values: Vec<Complex64>,
    second: Vec<Complex64>,
}

impl UniformSpline {
    pub fn new(start: f64, step: f64, values: Vec<Complex64>) -> Self {
        let n = values.len();
        let mut second = vec![Complex64::new(0.0, 0.0); n];
        if n > 2 {
            // Thomas algorithm on M_{i-1} + 4 M_i + M_{i+1} = 6 (y_{i+1} - 2 y_i + y_{i-1}) / h^2
            let m = n - 2;
            let mut c = vec![0.0; m];
            let mut d = vec![Complex64::new(0.0, 0.0); m];
            for i in 0..m {
                let rhs = (values[i + 2] - values[i + 1] * 2.0 + values[i]) * (6.0 / (step * step));
                let (prev_c, prev_d) = if i == 0 { (0.0, Complex64::new(0.0, 0.0)) } else { (c[i - 1], d[i - 1]) };
                let denom = 4.0 - prev_c;
                c[i] = 1.0 / denom;
                d[i] = (rhs - prev_d) / denom;
            }
            for i in (0..m).rev() {
                let next = if i + 1 < m { second[i + 2] } else { Complex64::new(0.0, 0.0) };
                second[i + 1] = d[i] - next * c[i];
            }
        }
        Self { start, step, values, second }
    }

    pub fn end(&self) -> f64 {
        self.start + self.step * (self.values.len() - 1) as f64
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        let n = self.values.len();
        if n == 1 {
            return self.values[0];
        }
        let pos = ((x - self.start) / self.step).clamp(0.0, (n - 1) as f64);
        let i = (pos.floor() as usize).min(n - 2);
        let t = pos - i as f64;
        let u = 1.0 - t;
        let h2 = self.step * self.step / 6.0;
        self.values[i] * u + self.values[i + 1] * t + (self.second[i] * (u * u * u - u) + self.second[i + 1] * (t * t * t - t)) * h2
    }
}

fn unwrap(phases: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(phases.len());
    let mut offset = 0.0;
    for (i, &p) in phases.iter().enumerate() {
        if i > 0 {
            let prev = phases[i - 1];
            let jump = p - prev;
            if jump > PI {
                offset -= 2.0 * PI;
            } else if jump < -PI {
                offset += 2.0 * PI;
            }
        }
        out.push(p + offset);
    }
    out
}

/// Interpolates the Toeplitz lag sequence of `r_low` in wavelength units and
/// extrapolates with a raised-cosine magnitude taper and linear phase.
pub fn nonparametric_translate(r_low: &SpatialCorrelation, target: &ArrayGeometry, band: Band) -> Result<SpatialCorrelation> {
    if !r_low.geometry.is_linear() || !target.is_linear() {
        return Err(Error::UnsupportedGeometry("non-parametric translation needs linear arrays".into()));
    }
    target.validate()?;
    let n = r_low.dim();
    if n < 2 {
        return domain("non-parametric translation needs at least two low-band elements");
    }
    let lags: Vec<Complex64> = (0..n)
        .map(|k| {
            let mut s = Complex64::new(0.0, 0.0);
            for m in k..n {
                s += r_low.matrix[(m, m - k)] + r_low.matrix[(m - k, m)].conj();
            }
            s / (2.0 * (n - k) as f64)
        })
        .collect();
    if !(lags[0].re > 0.0) {
        return domain("correlation has zero trace");
    }
    let d = r_low.geometry.spacing;
    // knots at -(n-1) d .. (n-1) d using Hermitian symmetry
    let values: Vec<Complex64> = lags[1..].iter().rev().map(|z| z.conj()).chain(lags.iter().cloned()).collect();
    let spline = UniformSpline::new(-d * (n - 1) as f64, d, values);
    let x_max = spline.end();

    let weights: Vec<f64> = lags.iter().map(|z| z.norm()).collect();
    let phases = unwrap(&lags.iter().map(|z| z.arg()).collect::<Vec<_>>());
    let (num, den) = (1..n).fold((0.0, 0.0), |(a, b), k| {
        let x = d * k as f64;
        (a + weights[k] * x * phases[k], b + weights[k] * x * x)
    });
    let slope = if den > 0.0 { num / den } else { 0.0 };
    let edge = lags[n - 1];
    let edge_phase = phases[n - 1];

    let target_max = target.spacing * (target.len() - 1) as f64;
    let window = TAPER_FRACTION * (target_max - x_max).max(0.0);
    let lag_value = |x: f64| -> Complex64 {
        if x <= x_max + 1e-12 {
            return spline.eval(x);
        }
        let s = x - x_max;
        if window <= 0.0 || s >= window {
            return Complex64::new(0.0, 0.0);
        }
        let taper = 0.5 * (1.0 + (PI * s / window).cos());
        Complex64::from_polar(edge.norm() * taper, edge_phase + slope * s)
    };
    let r = toeplitz_from_lags(target.len(), |k| lag_value(target.spacing * k as f64));
    let trace = lags[0].re * target.len() as f64;
    SpatialCorrelation::new(project_psd(&r, trace), band, target.clone())
}
