use std::f64::consts::PI;

use num_complex::Complex64;
use wavekit_core::beam::*;
use wavekit_core::medium::RefractiveIndex;
use wavekit_core::oracle::*;
use wavekit_core::symbols::GridField;

/// BT field vs. the spectral solution when the train has doubled its width.
fn error_at_double_width(k0w0: f64, gouy: Gouy) -> (f64, Comparison, BeamState) {
    let medium = RefractiveIndex::cold_plasma(1.0).unwrap();
    let spec = TrainSpec::new(1.0, k0w0, 1.0, medium.clone(), DEFAULT_MIN_K0W0).unwrap();
    let p = dispersion_params(&spec).unwrap();
    // w = 2 w0  ⇔  u = √3.
    let t = 3f64.sqrt() * spec.k0 * spec.w0 * spec.w0 / (2.0 * (1.0 - p.r) * p.vg);
    let plan = plan_grid(&spec, &p, t, 0.0);
    let psi0 = GridField::from_fn(plan.m, plan.x_min, plan.dx, 0.0, |x| Complex64::new(spec.initial_field(x), 0.0)).unwrap();
    let exact = exact_propagate(&psi0, &medium, t).unwrap();
    let state = propagate_closed_form(&spec, &p, t);
    let bt = sample_field(&state, plan.m, plan.x_min, plan.dx, gouy).unwrap();
    let c = compare_fields(&exact, &bt).unwrap();
    (c.l2_rel, c, state)
}

#[test]
fn closed_form_converges_to_exact_solution() {
    let (e20, c20, s20) = error_at_double_width(20.0, Gouy::Half);
    let (e40, _, _) = error_at_double_width(40.0, Gouy::Half);
    assert!((s20.w / 20.0 - 2.0).abs() < 1e-12);
    assert!(e20 <= 0.05, "k0w0 = 20: {e20}");
    assert!(e20 / e40 >= 1.5, "ratio {}", e20 / e40);
    // Envelope width of the exact field follows w(t).
    assert!((c20.width_a - s20.w).abs() < 0.02 * s20.w);
    assert!((c20.peak_a - s20.x_c).abs() < 1.0);
}

#[test]
fn full_gouy_shift_misses_exact_solution() {
    let (err, _, _) = error_at_double_width(20.0, Gouy::Full);
    assert!(err > 0.3, "{err}");
}

#[test]
fn hyperbolic_width_and_gouy_saturation() {
    let spec = TrainSpec::new(2.0, 30.0, 1.0, RefractiveIndex::Vacuum, DEFAULT_MIN_K0W0)
        .unwrap()
        .with_overrides(Overrides { r: 0.2, vg_over_vp: 0.8, vp: 1.0 });
    let p = dispersion_params(&spec).unwrap();
    let mut last = -1.0;
    for i in 0..200 {
        let t = 10f64.powf(i as f64 / 20.0) - 1.0;
        let s = propagate_closed_form(&spec, &p, t);
        let u = 2.0 * (1.0 - p.r) * p.vg * t / (spec.k0 * spec.w0 * spec.w0);
        assert!(((s.w / spec.w0).powi(2) - u * u - 1.0).abs() < 1e-9 * (1.0 + u * u));
        assert!((s.a_mag.powi(2) * s.w - 4.0 * 30.0).abs() < 1e-12 * 120.0);
        assert!(s.phi >= last && s.phi < PI / 2.0);
        last = s.phi;
    }
    assert!(PI / 2.0 - last < 1e-6);
}
