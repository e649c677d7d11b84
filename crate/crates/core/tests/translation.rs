use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use oobmm::array::ArrayGeometry;
use oobmm::channel::Band;
use oobmm::rng::{complex_normal, seeded};
use oobmm::translation::{
    correlation_from_spectrum, correlation_nmse, fit_angular_spectrum, median, parametric_translate, run_translation_ensemble,
    sample_correlation, AngularSpectrum, EnsembleSettings, SpectrumFamily,
};

#[test]
fn gaussian_spread_fit_under_noise() {
    let g = ArrayGeometry::ula(4);
    let truth = AngularSpectrum::single(SpectrumFamily::Gaussian, 10f64.to_radians(), 3f64.to_radians());
    let r = correlation_from_spectrum(&g, &truth, Band::Sub6).unwrap().matrix;
    let eig = r.symmetric_eigen();
    let root = &eig.eigenvectors
        * DMatrix::from_diagonal(&eig.eigenvalues.map(|v| Complex64::new(v.max(0.0).sqrt(), 0.0)))
        * eig.eigenvectors.adjoint();
    let noise = 0.01;
    let mut worst = 0.0f64;
    for trial in 0..100 {
        let mut rng = seeded(300 + trial);
        let snaps: Vec<DVector<Complex64>> = (0..1000)
            .map(|_| {
                let z = DVector::from_fn(4, |_, _| complex_normal(&mut rng, 1.0));
                (&root * z).map(|e| e + complex_normal(&mut rng, noise))
            })
            .collect();
        let r_low = sample_correlation(&snaps, &g, Band::Sub6).unwrap();
        let fit = fit_angular_spectrum(&r_low, SpectrumFamily::Gaussian).unwrap();
        worst = worst.max((fit.components[0].spread.to_degrees() - 3.0).abs());
    }
    eprintln!("worst spread error {worst:.3} deg");
    assert!(worst <= 1.5);
}

#[test]
fn parametric_wins_on_gaussian_ensemble() {
    let rows = run_translation_ensemble(&EnsembleSettings::default(), 2024).unwrap();
    assert_eq!(rows.len(), 200);
    let mut para: Vec<f64> = rows.iter().filter(|r| r.method == "parametric").map(|r| r.nmse).collect();
    let mut nonpara: Vec<f64> = rows.iter().filter(|r| r.method == "nonparametric").map(|r| r.nmse).collect();
    let (mp, mn) = (median(&mut para), median(&mut nonpara));
    eprintln!("median nmse parametric {mp:.4e} nonparametric {mn:.4e}");
    assert!(mp < mn);
}

#[test]
fn single_path_ensemble_is_exact() {
    let settings = EnsembleSettings { family: SpectrumFamily::SinglePath, cases: 20, snr_db: None, ..EnsembleSettings::default() };
    let rows = run_translation_ensemble(&settings, 5).unwrap();
    for r in rows.iter().filter(|r| r.method == "parametric") {
        assert!(r.nmse <= 1e-8, "{r:?}");
    }
}

#[test]
fn congruent_spectra_translate_consistently() {
    let s = AngularSpectrum::single(SpectrumFamily::Gaussian, -0.3, 0.05);
    let low = correlation_from_spectrum(&ArrayGeometry::ula(4), &s, Band::Sub6).unwrap();
    let high = ArrayGeometry::ula(32);
    let direct = correlation_from_spectrum(&high, &s, Band::Mmwave).unwrap();
    let out = parametric_translate(&low, &high, SpectrumFamily::Gaussian, Band::Mmwave).unwrap();
    assert!(correlation_nmse(&out.matrix, &direct.matrix).unwrap() < 1e-6);
    assert!((out.matrix[(0, 0)] - Complex64::new(1.0, 0.0)).norm() < 1e-9);
}
