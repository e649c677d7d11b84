//! Weighted l1-regularised least squares by monotone accelerated proximal
//! gradient (MFISTA) with backtracking.

use nalgebra::DVector;
use num_complex::Complex64;

use super::problem::BeamSearchProblem;
use super::weights::WeightVector;
use crate::error::{config, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Explicit regularisation; `None` selects the universal threshold.
    pub lambda: Option<f64>,
    /// Multiplier of the universal threshold `sigma sqrt(2 ln G) max_col_norm`.
    pub lambda_scale: f64,
    pub max_iterations: usize,
    /// Stop when the relative objective decrease of an accepted step falls below this.
    pub tolerance: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { lambda: None, lambda_scale: 2.0, max_iterations: 300, tolerance: 1e-6 }
    }
}

impl SolverConfig {
    pub fn with_lambda(lambda: f64) -> Self {
        Self { lambda: Some(lambda), ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(l) = self.lambda {
            if !(l >= 0.0 && l.is_finite()) {
                return config(format!("lambda {l} must be non-negative"));
            }
        }
        if !(self.lambda_scale >= 0.0) {
            return config("lambda_scale must be non-negative");
        }
        if !(self.tolerance > 0.0) {
            return config("solver tolerance must be positive");
        }
        if self.max_iterations == 0 {
            return config("max_iterations must be at least 1");
        }
        Ok(())
    }

    pub fn resolve_lambda(&self, problem: &BeamSearchProblem) -> f64 {
        self.lambda.unwrap_or_else(|| universal_lambda(problem, self.lambda_scale))
    }
}

/// `scale * sigma * sqrt(2 ln G) * max column norm`.
pub fn universal_lambda(problem: &BeamSearchProblem, scale: f64) -> f64 {
    let g = problem.sensing.cols().max(2) as f64;
    let col = problem.sensing.column_norms().into_iter().fold(0.0, f64::max);
    scale * problem.noise_std * (2.0 * g.ln()).sqrt() * col
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub coefficients: DVector<Complex64>,
    pub lambda: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after each iteration, starting with the initial point.
    pub objective: Vec<f64>,
}

impl Solution {
    pub fn is_zero(&self) -> bool {
        self.coefficients.iter().all(|c| *c == Complex64::new(0.0, 0.0))
    }
}

/// `min 1/2 ||y - A x||^2 + lambda ||x||_1`.
pub fn bpdn(problem: &BeamSearchProblem, cfg: &SolverConfig) -> Result<Solution> {
    let ones = WeightVector::uniform(problem.sensing.cols());
    weighted_bpdn(problem, &ones, cfg)
}

fn soft_threshold(v: &DVector<Complex64>, thresholds: &[f64], inv_l: f64) -> DVector<Complex64> {
    DVector::from_iterator(
        v.len(),
        v.iter().zip(thresholds).map(|(z, &t)| {
            let m = z.norm();
            let tau = t * inv_l;
            // a few ulps of slack so lambda = max|A^H y| zeroes every entry
            if m <= tau * (1.0 + 8.0 * f64::EPSILON) {
                Complex64::new(0.0, 0.0)
            } else {
                z * ((m - tau) / m)
            }
        }),
    )
}

fn penalty(x: &DVector<Complex64>, thresholds: &[f64]) -> f64 {
    x.iter().zip(thresholds).map(|(z, &t)| t * z.norm()).sum()
}

/// `min 1/2 ||y - A x||^2 + lambda sum_i w_i |x_i|`.
///
/// The objective sequence is non-increasing. Uniform unit weights reproduce
/// [`bpdn`] exactly, and only the products `lambda * w_i` enter the iteration.
pub fn weighted_bpdn(problem: &BeamSearchProblem, weights: &WeightVector, cfg: &SolverConfig) -> Result<Solution> {
    cfg.validate()?;
    let a = &problem.sensing;
    let n = a.cols();
    if weights.len() != n {
        return config(format!("{} weights for {} coefficients", weights.len(), n));
    }
    let lambda = cfg.resolve_lambda(problem);
    let thresholds: Vec<f64> = weights.as_slice().iter().map(|w| lambda * w).collect();
    let b = &problem.observations;

    let mut x = DVector::<Complex64>::zeros(n);
    let mut ax = DVector::<Complex64>::zeros(b.len());
    let mut y = x.clone();
    let mut ay = ax.clone();
    let mut t = 1.0f64;
    let mut lip = a.spectral_norm_sq(30).max(f64::MIN_POSITIVE);
    let mut f_x = 0.5 * b.norm_squared();
    let mut objective = vec![f_x];
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..cfg.max_iterations {
        iterations += 1;
        let ry = &ay - b;
        let smooth_y = 0.5 * ry.norm_squared();
        let grad = a.adjoint(&ry);
        let (z, az, smooth_z) = loop {
            let step = &y - &grad * Complex64::new(1.0 / lip, 0.0);
            let z = soft_threshold(&step, &thresholds, 1.0 / lip);
            let az = a.apply(&z);
            let smooth_z = 0.5 * (&az - b).norm_squared();
            let dz = &z - &y;
            let bound = smooth_y + grad.dotc(&dz).re + 0.5 * lip * dz.norm_squared();
            if smooth_z <= bound * (1.0 + 1e-12) + 1e-300 || lip > 1e300 {
                break (z, az, smooth_z);
            }
            lip *= 2.0;
        };
        let f_z = smooth_z + penalty(&z, &thresholds);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let accepted = f_z <= f_x;
        let (x_next, ax_next, f_next) = if accepted { (z.clone(), az.clone(), f_z) } else { (x.clone(), ax.clone(), f_x) };
        let c1 = Complex64::new(t / t_next, 0.0);
        let c2 = Complex64::new((t - 1.0) / t_next, 0.0);
        y = &x_next + (&z - &x_next) * c1 + (&x_next - &x) * c2;
        ay = &ax_next + (&az - &ax_next) * c1 + (&ax_next - &ax) * c2;
        let decrease = f_x - f_next;
        let moved = accepted && z != x;
        x = x_next;
        ax = ax_next;
        t = t_next;
        objective.push(f_next);
        if accepted && (!moved || decrease <= cfg.tolerance * f_x.abs().max(f64::MIN_POSITIVE)) {
            converged = true;
            break;
        }
        f_x = f_next;
    }
    Ok(Solution { coefficients: x, lambda, iterations, converged, objective })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::AngleGrid;
    use crate::sparse::problem::SensingOperator;
    use nalgebra::DMatrix;
    use rand::Rng;

    fn problem(a: DMatrix<Complex64>, y: DVector<Complex64>) -> BeamSearchProblem {
        let g = AngleGrid::uniform_sin(1);
        BeamSearchProblem { sensing: SensingOperator::Dense(a), observations: y, noise_std: 0.0, tx_grid: g.clone(), rx_grid: g }
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn monotone(s: &Solution) -> bool {
        s.objective.windows(2).all(|w| w[1] <= w[0])
    }

    fn random_problem(seed: u64, m: usize, n: usize) -> BeamSearchProblem {
        let mut rng = crate::rng::seeded(seed);
        let a = DMatrix::from_fn(m, n, |_, _| crate::rng::complex_normal(&mut rng, 1.0 / m as f64));
        let y = DVector::from_fn(m, |_, _| crate::rng::complex_normal(&mut rng, 1.0));
        problem(a, y)
    }

    #[test]
    fn orthonormal_case_is_soft_thresholding() {
        let p = problem(DMatrix::identity(4, 4), DVector::from_vec(vec![c(0.0), c(2.0), c(0.0), c(0.0)]));
        let s = bpdn(&p, &SolverConfig::with_lambda(0.5)).unwrap();
        let expect = DVector::from_vec(vec![c(0.0), c(1.5), c(0.0), c(0.0)]);
        assert!((s.coefficients - expect).norm() < 1e-9);
        assert!(s.converged);
    }

    #[test]
    fn large_lambda_kills_everything() {
        let p = random_problem(3, 10, 20);
        let cap = p.sensing.adjoint(&p.observations).iter().map(|z| z.norm()).fold(0.0, f64::max);
        let s = bpdn(&p, &SolverConfig::with_lambda(cap)).unwrap();
        assert!(s.is_zero());
        assert!(monotone(&s));
    }

    #[test]
    fn uniform_weights_reproduce_bpdn() {
        let p = random_problem(5, 12, 30);
        let cfg = SolverConfig::with_lambda(0.05);
        let a = bpdn(&p, &cfg).unwrap();
        let b = weighted_bpdn(&p, &WeightVector::new(vec![1.0; 30]).unwrap(), &cfg).unwrap();
        assert_eq!(a.coefficients, b.coefficients);
        assert_eq!(a.objective, b.objective);
    }

    #[test]
    fn lambda_weight_product_invariance() {
        let p = random_problem(8, 12, 30);
        let mut rng = crate::rng::seeded(1);
        let w = WeightVector::new((0..30).map(|_| rng.gen_range(0.5..4.0)).collect()).unwrap();
        let a = weighted_bpdn(&p, &w, &SolverConfig::with_lambda(0.04)).unwrap();
        let b = weighted_bpdn(&p, &w.scaled(0.5), &SolverConfig::with_lambda(0.08)).unwrap();
        assert_eq!(a.objective, b.objective);
        assert_eq!(a.coefficients, b.coefficients);
    }

    #[test]
    fn heavy_off_support_weights_recover_support() {
        // oracle: restricted least squares on the known support
        let mut p = random_problem(11, 8, 24);
        let support = [4usize, 17];
        let mut x = DVector::zeros(24);
        x[4] = Complex64::new(1.0, -0.5);
        x[17] = Complex64::new(-0.8, 0.3);
        p.observations = p.sensing.apply(&x);
        let w = WeightVector::new((0..24).map(|i| if support.contains(&i) { 1.0 } else { 1e6 }).collect()).unwrap();
        let cfg = SolverConfig { lambda: Some(1e-4), max_iterations: 5000, tolerance: 1e-12, ..SolverConfig::default() };
        let s = weighted_bpdn(&p, &w, &cfg).unwrap();
        let found: Vec<usize> = (0..24).filter(|&i| s.coefficients[i].norm() > 1e-6).collect();
        assert_eq!(found, support);
        let dense = p.sensing.to_dense();
        let sub = DMatrix::from_columns(&[dense.column(4), dense.column(17)]);
        let ls = (sub.adjoint() * &sub).lu().solve(&sub.ad_mul(&p.observations)).unwrap();
        assert!((s.coefficients[4] - ls[0]).norm() < 1e-3);
        assert!(monotone(&s));
    }

    #[test]
    fn invalid_configs_and_weights() {
        let p = random_problem(1, 4, 6);
        assert!(bpdn(&p, &SolverConfig { tolerance: 0.0, ..SolverConfig::default() }).is_err());
        assert!(bpdn(&p, &SolverConfig::with_lambda(-1.0)).is_err());
        assert!(weighted_bpdn(&p, &WeightVector::uniform(5), &SolverConfig::default()).is_err());
    }

    #[test]
    fn iteration_cap_is_reported() {
        let p = random_problem(2, 20, 40);
        let s = bpdn(&p, &SolverConfig { lambda: Some(1e-3), max_iterations: 2, ..SolverConfig::default() }).unwrap();
        assert_eq!(s.iterations, 2);
        assert!(!s.converged);
        assert_eq!(s.objective.len(), 3);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(32))]
        #[test]
        fn objective_never_increases(seed in 0u64..10_000, lambda in 1e-3f64..1.0) {
            let p = random_problem(seed, 10, 25);
            let s = bpdn(&p, &SolverConfig::with_lambda(lambda)).unwrap();
            proptest::prop_assert!(monotone(&s));
            let w = WeightVector::new((0..25).map(|i| 0.5 + (i % 5) as f64).collect()).unwrap();
            let s = weighted_bpdn(&p, &w, &SolverConfig::with_lambda(lambda)).unwrap();
            proptest::prop_assert!(monotone(&s));
        }
    }
}
