use std::f64::consts::PI;

use num_complex::Complex64;
use wavekit_core::parametrix::*;
use wavekit_core::symbols::compose_left;

fn ramp(t_scale: f64, nu0: f64) -> ColdPlasmaMedium {
    ColdPlasmaMedium::new(move |t| (t * (1.0 / t_scale)).tanh() * 0.3 + 1.0, nu0 / t_scale, 1.0).unwrap()
}

#[test]
fn conductivity_matches_closed_forms_at_probes() {
    let m = ramp(5.0, 0.2);
    let probes = m.probes((0.5, 6.0), (-10.0, 10.0), 100, 7);
    let p = conductivity(&m, 2, &probes).unwrap();
    let mut worst: f64 = 0.0;
    for (k, x) in &probes {
        let (omega, t) = (-k[0], x[0]);
        let (wp, dwp) = m.omega_pe(t);
        let z = Complex64::new(omega, m.nu());
        let p_lead = Complex64::i() * wp * wp / (4.0 * PI * z);
        let p_next = wp * wp / (4.0 * PI * z * z) * (2.0 / wp * dwp - m.nu());
        let a = p.terms()[0].eval_scalar(k, x).unwrap();
        let b = p.terms()[1].eval_scalar(k, x).unwrap();
        worst = worst.max((a - p_lead).norm() / p_lead.norm()).max((b - p_next).norm() / p_next.norm());
    }
    assert!(worst < 1e-12, "{worst:e}");
}

/// `|p∘q − 1|` at a fixed rescaled phase-space point.
fn residual(t_scale: f64) -> f64 {
    let m = ramp(t_scale, 0.2);
    let probes = [m.phase_point(2.0, 0.3 * t_scale)];
    let p = conductivity(&m, 2, &probes).unwrap();
    let prod = compose_left(&p.to_symbol(), &m.ohm_symbol().to_symbol(), 3).unwrap();
    let (k, x) = &probes[0];
    (prod.eval_scalar(k, x).unwrap() - 1.0).norm()
}

#[test]
fn parametrix_residual_is_second_order() {
    let scales = [10.0, 20.0, 40.0, 80.0];
    let r: Vec<f64> = scales.iter().map(|&s| residual(s)).collect();
    for w in r.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order >= 1.9, "{r:?}");
    }
}

#[test]
fn time_derivative_parametrix_is_a_left_inverse() {
    let nu = 0.3;
    let q = time_derivative_symbol(nu, 1.0).unwrap();
    let p = time_derivative_parametrix(nu, 1.0, 2).unwrap();
    // ∂_t has x-independent symbols, so the product collapses to p·q.
    let prod = compose_left(&p.to_symbol(), &q.to_symbol(), 3).unwrap();
    for w in [0.5, 1.0, 4.0] {
        let z = Complex64::new(w, nu);
        let v = prod.eval_scalar(&[-w], &[1.0]).unwrap();
        let expect = 1.0 + (-nu / (z * z)) * (-nu);
        assert!((v - expect).norm() < 1e-13);
    }
}
