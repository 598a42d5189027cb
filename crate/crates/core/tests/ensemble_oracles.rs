use freefall::constants::{ATOM_MASS, G_ROUNDED, HBAR};
use freefall::moments::{monte_carlo_average, positional_average, third_order_allowance, GaussianEnsemble};
use freefall::potential::{GravityModel, GravitySource};
use freefall::trajectory::IntegrationOptions;
use freefall::verify::random_ensembles;
use freefall::wigner::{classical_density_mc, pq_moments, FallSetup, GaussianState1D, DEFAULT_BINS};
use nalgebra::Vector3;
use statrs::distribution::{ContinuousCDF, Normal};

fn lab() -> GravitySource {
    GravitySource::new(G_ROUNDED, 1e3, 1.5).unwrap()
}

#[test]
fn strong_gradient_average_matches_monte_carlo() {
    // natural units with a short radius so the second-order terms are large
    let (g, r, t) = (1.0, 20.0, 1.0);
    let model = GravityModel::cubic_with(g, r).unwrap();
    let opts = IntegrationOptions::default();
    for (i, ens) in random_ensembles(11, 5).unwrap().iter().enumerate() {
        let ens = GaussianEnsemble::new(
            ens.mean_r * 20.0,
            ens.mean_v * 100.0,
            ens.sigma_r * 20.0,
            ens.sigma_v * 200.0,
        )
        .unwrap();
        let mc = monte_carlo_average(&model, &ens, t, 100_000, 100 + i as u64, &opts).unwrap();
        let pa = positional_average(&ens.moments(), g, 1.0 / r, t);
        let bound = 3.0 * mc.std_error + third_order_allowance(&ens, g, 1.0 / r, t);
        assert!(
            (mc.mean - pa).abs() <= bound,
            "state {i}: {:e} vs {pa:e} (bound {bound:e})",
            mc.mean
        );
    }
}

#[test]
fn release_histogram_recovers_initial_marginal() {
    let ens = GaussianEnsemble::isotropic(2e-3, 1e-3, Vector3::new(1e-3, 0.0, 0.0), Vector3::zeros()).unwrap();
    let n = 50_000;
    let prof = classical_density_mc(
        &GravityModel::exact(lab()),
        &ens,
        0.0,
        DEFAULT_BINS,
        n,
        3,
        &IntegrationOptions::default(),
    )
    .unwrap();
    let law = Normal::new(1e-3, 2e-3).unwrap();
    let w = prof.bin_width.unwrap();
    for (x, d) in prof.x.iter().zip(&prof.density) {
        let mass = law.cdf(x + 0.5 * w) - law.cdf(x - 0.5 * w);
        let count = mass * n as f64;
        if count > 100.0 {
            assert!((d * w / mass - 1.0).abs() < 4.0 / count.sqrt(), "bin at {x:e}");
        }
    }
}

#[test]
fn full_model_histogram_mean_matches_positional_average() {
    let s = lab();
    let ens =
        GaussianEnsemble::isotropic(1e-3, 1e-3, Vector3::new(2e-3, 0.0, 0.0), Vector3::new(1e-3, 0.0, 0.0)).unwrap();
    let t = 10.0;
    let n = 100_000;
    let prof = classical_density_mc(
        &GravityModel::exact(s),
        &ens,
        t,
        DEFAULT_BINS,
        n,
        5,
        &IntegrationOptions::default(),
    )
    .unwrap();
    let pa = positional_average(&ens.moments(), s.g(), 1.0 / s.distance, t);
    let spread = 1e-3f64.hypot(1e-3 * t);
    let se = spread / (n as f64).sqrt();
    // bin-centre rounding adds at most w/√12 per sample, averaged down by √n
    let binning = prof.bin_width.unwrap() / (12.0 * n as f64).sqrt();
    assert!(
        (prof.mean() - pa).abs() <= 3.0 * (se + binning),
        "{:e} vs {pa:e}",
        prof.mean()
    );
}

#[test]
fn classical_plus_quantum_density_is_normalized() {
    let s = lab();
    let (sx, sv) = (2.3e-6, 2.3e-4);
    let t = 10.0;
    let n = 20_000;
    let ens = GaussianEnsemble::isotropic(sx, sv, Vector3::zeros(), Vector3::zeros()).unwrap();
    let pc = classical_density_mc(
        &GravityModel::exact(s),
        &ens,
        t,
        DEFAULT_BINS,
        n,
        9,
        &IntegrationOptions::default(),
    )
    .unwrap();
    let setup = FallSetup::new(s.g(), 1.0 / s.distance, ATOM_MASS, HBAR).unwrap();
    let pq = pq_moments(&GaussianState1D::centred(sx, sv).unwrap(), &setup, t).unwrap()[0];
    let total = pc.integral() + pq;
    assert!((total - 1.0).abs() <= 1.0 / (n as f64).sqrt() + 1e-6, "{total}");
}
