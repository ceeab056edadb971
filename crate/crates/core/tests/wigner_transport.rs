use std::f64::consts::PI;

use num_complex::Complex64;
use wavekit_core::beam::*;
use wavekit_core::dispersion::DispersionModel;
use wavekit_core::medium::RefractiveIndex;
use wavekit_core::rays::{project_to_shell, trace_ray, transport_amplitude, RayOptions, Span};
use wavekit_core::wigner::*;

fn lens() -> DispersionModel {
    DispersionModel::scalar(2, |k, x| {
        let r2 = &x[0] * &x[0] + &x[1] * &x[1];
        &k[0] * &k[0] + &k[1] * &k[1] - ((r2 * -0.25).exp() * 0.3 + 1.0)
    })
}

#[test]
fn mass_is_conserved_without_absorption() {
    let model = lens();
    let mut samples = Vec::new();
    for i in 0..12 {
        let x = vec![-3.0, -1.5 + 0.25 * i as f64];
        let k = project_to_shell(&model, &x, &[1.0, 0.05 * i as f64], 0).unwrap();
        samples.push(WignerSample { k, x, w: 1.0 + 0.1 * i as f64, weight: 0.01 * (1.0 + i as f64) });
    }
    let st = WignerState::new(samples, 1e-9);
    let out = evolve_wigner(&model, &|_, _| 0.0, &st, 3.0, &WignerOptions::default()).unwrap();
    assert!((out.mass() - st.mass()).abs() < 1e-6 * st.mass());
    assert!(out.off_shell(&model).unwrap().is_empty());
}

#[test]
fn mono_kinetic_state_follows_ray_transport() {
    let model = DispersionModel::scalar(2, |k, x| {
        &k[0] * &k[0] + &k[1] * &k[1] - 1.0 + ((&x[0] * 0.7).sin() * 0.5 + 1.0) * Complex64::new(0.0, -0.1)
    });
    let (x0, k0) = (vec![0.2, -0.4], vec![0.6, 0.8]);
    let st = WignerState::new(vec![WignerSample { k: k0.clone(), x: x0.clone(), w: 2.0, weight: (2.0 * PI).powi(2) }], 1e-9);
    let ell = 0.5;
    let i0 = intensity_from_wigner(&st, &x0, ell).unwrap();
    let ray = trace_ray(&model, &x0, &k0, Span::Tau(4.0), &RayOptions::default()).unwrap();
    let ray = transport_amplitude(&ray, 0.0, |x: &[f64], k: &[f64]| model.gamma(k, x)).unwrap();
    let out = evolve_wigner(&model, &|_, _| 0.0, &st, 4.0, &WignerOptions::default()).unwrap();
    let i1 = intensity_from_wigner(&out, &out.samples[0].x, ell).unwrap();
    let go = ray.last().log_a2.exp();
    assert!(((i1 / i0) / go - 1.0).abs() < 1e-6, "{} vs {go}", i1 / i0);
}

/// Windowed Wigner reconstruction of a closed-form train against its
/// phase-averaged envelope `A² e^{−2ξ²/w²}/2`.
fn reconstruction_error(k0w0: f64, t: f64) -> f64 {
    let spec = TrainSpec::new(1.0, k0w0, 1.0, RefractiveIndex::cold_plasma(1.0).unwrap(), DEFAULT_MIN_K0W0).unwrap();
    let p = dispersion_params(&spec).unwrap();
    let s = propagate_closed_form(&spec, &p, t);
    let dx = 2.0 * PI / 16.0;
    let m = ((16.0 * s.w / dx) as usize).next_power_of_two();
    let x_min = s.x_c - 0.5 * m as f64 * dx;
    let field = sample_field(&s, m, x_min, dx, Gouy::Half).unwrap();
    let ell = 1.6 / spec.k0;
    let half = 2.0 * s.w;
    let st = WignerState::from_field(&field, 2, Some((s.x_c - half - 6.0 * ell, s.x_c + half + 6.0 * ell)));
    let peak = 0.5 * s.a_mag * s.a_mag;
    let mut worst: f64 = 0.0;
    for i in 0..=40 {
        let x = s.x_c - half + 2.0 * half * i as f64 / 40.0;
        let xi = x - s.x_c;
        let target = peak * (-2.0 * xi * xi / (s.w * s.w)).exp();
        let got = intensity_from_wigner(&st, &[x], ell).unwrap();
        worst = worst.max((got - target).abs() / peak);
    }
    worst
}

#[test]
fn gaussian_train_intensity_matches_envelope() {
    for (k0w0, t) in [(20.0, 0.0), (20.0, 800.0), (40.0, 1500.0)] {
        let err = reconstruction_error(k0w0, t);
        assert!(err < 0.02, "k0w0 = {k0w0}, t = {t}: {err}");
    }
}
