//! Paraxial tracing of Gaussian wave trains in one spatial dimension, in
//! units with `c = 1`.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::dispersion::{group_velocity, DispersionError, DispersionModel};
use crate::jet::Jet;
use crate::medium::RefractiveIndex;
use crate::ode::{integrate, Control, OdeError, OdeOptions};
use crate::rays::Ray;
use crate::symbols::{GridField, SymbolError};

/// Default hard floor on `k0·w0`.
pub const DEFAULT_MIN_K0W0: f64 = 6.0;

/// Default half-width of the paraxial window, in units of `w(t)`.
pub const DEFAULT_WINDOW: f64 = 5.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BeamError {
    #[error("w0 and k0 must be positive and finite (w0 = {w0}, k0 = {k0})")]
    BadTrain { w0: f64, k0: f64 },
    #[error("k0·w0 = {value} is below the paraxial floor {floor}")]
    NotParaxial { value: f64, floor: f64 },
    #[error("no forward root of the dispersion relation for k0 = {k0}")]
    NoRoot { k0: f64 },
    #[error("{count} roots of the dispersion relation for k0 = {k0}; select a branch")]
    AmbiguousRoot { k0: f64, count: usize },
    #[error("branch {branch} requested but only {count} roots exist")]
    Branch { branch: usize, count: usize },
    #[error("invalid override: {0}")]
    Override(String),
    #[error(transparent)]
    Dispersion(#[from] DispersionError),
    #[error("reference ray does not cover t = {t} (covers [{t0}, {t1}])")]
    RayCoverage { t: f64, t0: f64, t1: f64 },
    #[error("reference ray must live in (x, t) space-time, got dimension {0}")]
    RayDimension(usize),
    #[error("Riccati solution blew up at t = {t} (Im Φ = {im:e})")]
    RiccatiBlowUp { t: f64, im: f64 },
    #[error("beam width {w} at t = {t} exceeds the paraxial limit {limit}")]
    WidthLimit { t: f64, w: f64, limit: f64 },
    #[error("integration failed: {0}")]
    Step(String),
    #[error(transparent)]
    Grid(#[from] SymbolError),
}

/// Replaces the computed dispersion parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Overrides {
    pub r: f64,
    pub vg_over_vp: f64,
    /// Phase velocity; `ω0 = k0·vp`.
    pub vp: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainSpec {
    pub a0: f64,
    pub w0: f64,
    pub k0: f64,
    pub medium: RefractiveIndex,
    pub overrides: Option<Overrides>,
    /// Root index (ascending ω) when the dispersion relation has several.
    pub branch: Option<usize>,
}

impl TrainSpec {
    /// Checks `w0, k0 > 0` and `k0·w0 ≥ min_k0w0`.
    pub fn new(a0: f64, w0: f64, k0: f64, medium: RefractiveIndex, min_k0w0: f64) -> Result<TrainSpec, BeamError> {
        if !(w0 > 0.0 && k0 > 0.0 && w0.is_finite() && k0.is_finite()) {
            return Err(BeamError::BadTrain { w0, k0 });
        }
        if k0 * w0 < min_k0w0 {
            return Err(BeamError::NotParaxial {
                value: k0 * w0,
                floor: min_k0w0,
            });
        }
        Ok(TrainSpec {
            a0,
            w0,
            k0,
            medium,
            overrides: None,
            branch: None,
        })
    }

    pub fn with_overrides(mut self, o: Overrides) -> Self {
        self.overrides = Some(o);
        self
    }

    pub fn with_branch(mut self, branch: usize) -> Self {
        self.branch = Some(branch);
        self
    }

    /// Set when less than one wavelength fits in the envelope.
    pub fn paraxial_warning(&self) -> Option<String> {
        let kw = self.k0 * self.w0;
        (kw < 2.0 * PI).then(|| format!("k0·w0 = {kw:.3} < 2π: the envelope holds less than one wavelength"))
    }

    /// `A0 e^{−x²/w0²} cos(k0 x)`.
    pub fn initial_field(&self, x: f64) -> f64 {
        self.a0 * (-(x / self.w0).powi(2)).exp() * (self.k0 * x).cos()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DispersionParams {
    pub omega0: f64,
    pub vp: f64,
    pub vg: f64,
    pub r: f64,
}

impl DispersionParams {
    /// `k0·ω″ = (1 − r) v_g`.
    pub fn omega_kk(&self, k0: f64) -> f64 {
        (1.0 - self.r) * self.vg / k0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BeamState {
    pub t: f64,
    /// Envelope centre.
    pub x_c: f64,
    /// Carrier wavenumber at the centre.
    pub k: f64,
    pub omega0: f64,
    pub vg: f64,
    pub vp: f64,
    pub r: f64,
    pub w: f64,
    pub inv_r: f64,
    pub phi: f64,
    pub s0: f64,
    pub a_mag: f64,
}

impl BeamState {
    /// `Φ = k/R + 2i/w²`.
    pub fn phi_complex(&self) -> Complex64 {
        Complex64::new(self.k * self.inv_r, 2.0 / (self.w * self.w))
    }
}

pub(crate) fn forward_roots(medium: &RefractiveIndex, k0: f64) -> Vec<f64> {
    match medium {
        RefractiveIndex::Vacuum => vec![k0],
        RefractiveIndex::ColdPlasma { omega_pe } => vec![(omega_pe * omega_pe + k0 * k0).sqrt()],
        RefractiveIndex::Table(s) => {
            let (lo, hi) = s.range();
            let f = |w: f64| w * s.eval(w).0 - k0;
            let segments = 2000;
            let h = (hi - lo) / segments as f64;
            let mut roots = Vec::new();
            let mut a = lo;
            let mut fa = f(a);
            for i in 1..=segments {
                let b = lo + i as f64 * h;
                let fb = f(b);
                if fa == 0.0 {
                    roots.push(a);
                } else if fa * fb < 0.0 {
                    roots.push(refine(&f, a, b));
                }
                a = b;
                fa = fb;
            }
            if fa == 0.0 {
                roots.push(a);
            }
            roots
        }
    }
}

fn refine(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 || (b - a) < 1e-15 * m.abs().max(1.0) {
            return m;
        }
        if fa * fm < 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    0.5 * (a + b)
}

/// Carrier frequency, phase and group velocity, and the spreading
/// parameter `r` of the train.
pub fn dispersion_params(spec: &TrainSpec) -> Result<DispersionParams, BeamError> {
    if let Some(o) = spec.overrides {
        if !(o.vp > 0.0 && o.vg_over_vp.is_finite() && o.r.is_finite()) {
            return Err(BeamError::Override(format!("{o:?}")));
        }
        return Ok(DispersionParams {
            omega0: spec.k0 * o.vp,
            vp: o.vp,
            vg: o.vg_over_vp * o.vp,
            r: o.r,
        });
    }
    let roots = forward_roots(&spec.medium, spec.k0);
    let omega = match (roots.len(), spec.branch) {
        (0, _) => return Err(BeamError::NoRoot { k0: spec.k0 }),
        (count, Some(b)) if b >= count => return Err(BeamError::Branch { branch: b, count }),
        (_, Some(b)) => roots[b],
        (1, None) => roots[0],
        (count, None) => return Err(BeamError::AmbiguousRoot { k0: spec.k0, count }),
    };
    let (n, n1, n2) = spec.medium.derivs(omega);
    let model = DispersionModel::transverse_wave(spec.medium.clone());
    let vg = group_velocity(&model, &[spec.k0, -omega], &[0.0, 0.0])?[0];
    let vp = 1.0 / n;
    let r = (vg * vg) / (vp * vp)
        * (1.0 + 4.0 * omega / n * n1 + (omega * n1 / n).powi(2) + omega * omega / n * n2);
    Ok(DispersionParams { omega0: omega, vp, vg, r })
}

/// Homogeneous-medium solution at time `t`.
pub fn propagate_closed_form(spec: &TrainSpec, p: &DispersionParams, t: f64) -> BeamState {
    let zr = spec.k0 * spec.w0 * spec.w0;
    let u = 2.0 * (1.0 - p.r) * p.vg * t / zr;
    let w = spec.w0 * (1.0 + u * u).sqrt();
    BeamState {
        t,
        x_c: p.vg * t,
        k: spec.k0,
        omega0: p.omega0,
        vg: p.vg,
        vp: p.vp,
        r: p.r,
        w,
        inv_r: 2.0 * u / (zr * (1.0 + u * u)),
        phi: u.atan(),
        s0: -p.omega0 * (t - p.vg * t / p.vp),
        a_mag: spec.a0 * (spec.w0 / w).sqrt(),
    }
}

/// How the Gouy shift `φ` enters the carrier phase.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gouy {
    /// `−φ/2`, the phase of `(1 + iu)^{−1/2}`; matches the exact solution.
    Half,
    /// `−φ`; kept for comparison only.
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldValue {
    pub value: f64,
    /// `|x − x_c|` is outside the paraxial window.
    pub extrapolated: bool,
}

pub fn evaluate_field(state: &BeamState, x: f64) -> FieldValue {
    evaluate_field_with(state, x, DEFAULT_WINDOW, Gouy::Half)
}

/// `A e^{−ξ²/w²} cos(S0 + kξ + (k/2)ξ²/R − φ_G)` with `ξ = x − x_c`.
pub fn evaluate_field_with(state: &BeamState, x: f64, window: f64, gouy: Gouy) -> FieldValue {
    let xi = x - state.x_c;
    let shift = match gouy {
        Gouy::Half => 0.5 * state.phi,
        Gouy::Full => state.phi,
    };
    let phase = state.s0 + state.k * xi + 0.5 * state.k * state.inv_r * xi * xi - shift;
    FieldValue {
        value: state.a_mag * (-(xi / state.w).powi(2)).exp() * phase.cos(),
        extrapolated: xi.abs() > window * state.w,
    }
}

/// Real field on a uniform grid (`m` a power of two).
pub fn sample_field(state: &BeamState, m: usize, x_min: f64, dx: f64, gouy: Gouy) -> Result<GridField, BeamError> {
    Ok(GridField::from_fn(m, x_min, dx, state.t, |x| {
        Complex64::new(evaluate_field_with(state, x, f64::INFINITY, gouy).value, 0.0)
    })?)
}

/// `D = k_t + ω0 + v_g(κ − k0) + ½ω″(κ − k0)²` over `(κ, k_t = −ω)`: the
/// quadratic frequency model implied by `p`.
pub fn quadratic_model(p: &DispersionParams, k0: f64) -> DispersionModel {
    let (omega0, vg, okk) = (p.omega0, p.vg, p.omega_kk(k0));
    DispersionModel::scalar(2, move |k, _| {
        let dk = &k[0] - k0;
        &k[1] + omega0 + &dk * vg + &(&dk * &dk) * (0.5 * okk)
    })
}

#[derive(Clone, Copy, Debug)]
pub struct ParaxialOptions {
    pub tol: f64,
    /// Largest admissible `w`; `None` disables the check.
    pub max_width: Option<f64>,
}

impl Default for ParaxialOptions {
    fn default() -> Self {
        ParaxialOptions {
            tol: 1e-12,
            max_width: None,
        }
    }
}

/// Frequency `Ω(κ, ξ, t)` defined implicitly by `D = 0`, with first and
/// second derivatives in `(κ, ξ)`.
struct Frequency {
    omega: f64,
    o_k: f64,
    o_kk: f64,
    o_kx: f64,
    o_xx: f64,
}

fn frequency(model: &DispersionModel, k: &[f64], x: &[f64]) -> Result<Frequency, BeamError> {
    let ev = model.evaluate(k, x)?;
    // Variable order (κ, k_t, ξ, t).
    let h = |a: usize, b: usize| ev.hess_at(a, b);
    let dt = ev.grad_k[1];
    if dt == 0.0 {
        return Err(DispersionError::Stationary(0.0).into());
    }
    let kk = -ev.grad_k[0] / dt;
    let kx = -ev.grad_x[0] / dt;
    let second = |a: usize, b: usize, ka: f64, kb: f64| -(h(a, b) + h(a, 1) * kb + h(b, 1) * ka + h(1, 1) * ka * kb) / dt;
    Ok(Frequency {
        omega: -k[1],
        o_k: -kk,
        o_kk: -second(0, 0, kk, kk),
        o_kx: -second(0, 2, kk, kx),
        o_xx: -second(2, 2, kx, kx),
    })
}

/// Ray position and wavevector at time `t`, by cubic Hermite interpolation
/// in `t` between samples.
pub fn ray_at_time(ray: &Ray, t: f64) -> Result<(Vec<f64>, Vec<f64>), BeamError> {
    if ray.dim != 2 {
        return Err(BeamError::RayDimension(ray.dim));
    }
    let s = &ray.samples;
    let t0 = s[0].x[1];
    let t1 = s[s.len() - 1].x[1];
    let (lo, hi) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
    let slack = 1e-12 * (1.0 + hi.abs());
    if t < lo - slack || t > hi + slack || s.len() < 2 && t != t0 {
        return Err(BeamError::RayCoverage { t, t0, t1 });
    }
    if s.len() == 1 {
        return Ok((s[0].x.clone(), s[0].k.clone()));
    }
    let i = s
        .windows(2)
        .position(|w| (w[0].x[1] - t) * (w[1].x[1] - t) <= 0.0)
        .unwrap_or(if (t - t0).abs() < (t - t1).abs() { 0 } else { s.len() - 2 });
    let (a, b) = (&s[i], &s[i + 1]);
    let h = b.x[1] - a.x[1];
    if h == 0.0 {
        return Ok((a.x.clone(), a.k.clone()));
    }
    let u = (t - a.x[1]) / h;
    let h00 = (1.0 + 2.0 * u) * (1.0 - u).powi(2);
    let h10 = u * (1.0 - u).powi(2);
    let h01 = u * u * (3.0 - 2.0 * u);
    let h11 = u * u * (u - 1.0);
    let ra = 1.0 / a.xdot[1];
    let rb = 1.0 / b.xdot[1];
    let mix = |p0: &[f64], d0: &[f64], p1: &[f64], d1: &[f64]| -> Vec<f64> {
        (0..p0.len())
            .map(|j| h00 * p0[j] + h10 * h * d0[j] * ra + h01 * p1[j] + h11 * h * d1[j] * rb)
            .collect()
    };
    let mut x = mix(&a.x, &a.xdot, &b.x, &b.xdot);
    x[1] = t;
    Ok((x, mix(&a.k, &a.kdot, &b.k, &b.kdot)))
}

/// Integrates the paraxial parameters along a reference ray in `(x, t)`.
///
/// `Φ = k/R + 2i/w²` follows `dΦ/dt = −(Ω_ξξ + 2Ω_κξ Φ + Ω_κκ Φ²)`, the
/// complex log-amplitude `ln a` follows `−½(Ω_κξ + Ω_κκ Φ)`, and the
/// centre phase `S0` follows `κẊ − Ω`. Returns one state per entry of
/// `times`, which must be monotone and start at or after `init.t`.
pub fn propagate_paraxial_ode(
    model: &DispersionModel,
    ray: &Ray,
    init: &BeamState,
    times: &[f64],
    opts: &ParaxialOptions,
) -> Result<Vec<BeamState>, BeamError> {
    let phi0 = init.phi_complex();
    let mut y = vec![phi0.re, phi0.im, init.a_mag.ln(), -0.5 * init.phi, init.s0];
    let mut t = init.t;
    let ode = OdeOptions::with_tol(opts.tol);
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| -> Result<(), BeamError> {
        let (x, k) = ray_at_time(ray, t)?;
        let f = frequency(model, &k, &x)?;
        let phi = Complex64::new(y[0], y[1]);
        if !(phi.im > 0.0) || !phi.is_finite() {
            return Err(BeamError::RiccatiBlowUp { t, im: phi.im });
        }
        let dphi = -(f.o_xx + 2.0 * f.o_kx * phi + f.o_kk * phi * phi);
        let dln = -0.5 * (f.o_kx + f.o_kk * phi);
        dy[0] = dphi.re;
        dy[1] = dphi.im;
        dy[2] = dln.re;
        dy[3] = dln.im;
        dy[4] = k[0] * f.o_k - f.omega;
        Ok(())
    };
    let mut out = Vec::with_capacity(times.len());
    let mut rhs = rhs;
    for &target in times {
        if target != t {
            let (yn, _) = integrate(&mut rhs, t, &y, target, &ode, |_, _, _| Control::Continue).map_err(|e| match e {
                OdeError::Rhs { source, .. } => source,
                other => BeamError::Step(other.to_string()),
            })?;
            y = yn;
            t = target;
        }
        let (x, k) = ray_at_time(ray, t)?;
        let f = frequency(model, &k, &x)?;
        if !(y[1] > 0.0) {
            return Err(BeamError::RiccatiBlowUp { t, im: y[1] });
        }
        let w = (2.0 / y[1]).sqrt();
        if let Some(limit) = opts.max_width {
            if w > limit {
                return Err(BeamError::WidthLimit { t, w, limit });
            }
        }
        out.push(BeamState {
            t,
            x_c: x[0],
            k: k[0],
            omega0: f.omega,
            vg: f.o_k,
            vp: f.omega / k[0],
            r: 1.0 - k[0] * f.o_kk / f.o_k,
            w,
            inv_r: y[0] / k[0],
            phi: -2.0 * y[3],
            s0: y[4],
            a_mag: y[2].exp(),
        });
    }
    Ok(out)
}

/// `ω(k)` for a jet-valued `k` by Newton on `ω n(ω) = k`; used to check
/// `(1 − r) v_g = k ω″`.
pub fn omega_of_k(medium: &RefractiveIndex, k: f64) -> Option<(f64, f64, f64)> {
    let roots = forward_roots(medium, k);
    let w = *roots.first()?;
    // Implicit differentiation of F(ω, k) = ω² n²(ω) − k² = 0.
    let j = medium.n2_jet(&Jet::variable(1, 2, 0, w));
    let n2 = j.value().re;
    let n2p = j.derivative(&[1]).re;
    let n2pp = j.derivative(&[2]).re;
    let fw = 2.0 * w * n2 + w * w * n2p;
    let fww = 2.0 * n2 + 4.0 * w * n2p + w * w * n2pp;
    let fk = -2.0 * k;
    let fkk = -2.0;
    let wk = -fk / fw;
    let wkk = -(fkk + fww * wk * wk) / fw;
    Some((w, wk, wkk))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rays::{trace_ray, RayOptions, Span};

    fn train(medium: RefractiveIndex, k0w0: f64) -> TrainSpec {
        TrainSpec::new(1.0, k0w0, 1.0, medium, DEFAULT_MIN_K0W0).unwrap()
    }

    #[test]
    fn vacuum_is_nondispersive() {
        let spec = train(RefractiveIndex::Vacuum, 20.0);
        let p = dispersion_params(&spec).unwrap();
        assert!((p.omega0 - 1.0).abs() < 1e-15 && (p.vg - 1.0).abs() < 1e-12 && (p.r - 1.0).abs() < 1e-12);
        let s = propagate_closed_form(&spec, &p, 37.0);
        assert_eq!((s.w, s.inv_r, s.phi), (20.0, 0.0, 0.0));
        for x in [20.0, 37.0, 41.5] {
            let v = evaluate_field(&s, x).value;
            assert!((v - spec.initial_field(x - 37.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn cold_plasma_parameters_match_explicit_root() {
        let medium = RefractiveIndex::cold_plasma(1.0).unwrap();
        let spec = train(medium.clone(), 20.0);
        let p = dispersion_params(&spec).unwrap();
        assert!((p.omega0 - 2f64.sqrt()).abs() < 1e-14);
        assert!((p.vg / p.vp - 0.5).abs() < 1e-12);
        assert!((p.r - 0.5).abs() < 1e-12);
        let (_, wk, wkk) = omega_of_k(&medium, 1.0).unwrap();
        assert!((wk - p.vg).abs() < 1e-12);
        assert!(((1.0 - p.r) * p.vg - wkk).abs() < 1e-12);
    }

    #[test]
    fn rayleigh_scale_values() {
        let spec = train(RefractiveIndex::Vacuum, 20.0).with_overrides(Overrides {
            r: 0.2,
            vg_over_vp: 0.8,
            vp: 1.0,
        });
        let p = dispersion_params(&spec).unwrap();
        let t = 400.0 / (2.0 * 0.8 * 0.8);
        let s = propagate_closed_form(&spec, &p, t);
        assert!((s.w - 2f64.sqrt() * 20.0).abs() < 1e-12);
        assert!((s.phi - PI / 4.0).abs() < 1e-15);
        assert!((1.0 / s.inv_r - 2.0 * 0.8 * 0.8 * t).abs() < 1e-9);
        assert!((s.a_mag.powi(2) * s.w - 20.0).abs() < 1e-12);
        let peak = evaluate_field(&s, s.x_c).value;
        assert!((peak - s.a_mag * (s.s0 - s.phi / 2.0).cos()).abs() < 1e-15);
    }

    #[test]
    fn table_root_and_branch_errors() {
        let omega: Vec<f64> = (0..50).map(|i| 0.8 + i as f64 * 0.05).collect();
        let n: Vec<f64> = omega.iter().map(|w| (1.0 - 0.25 / (w * w)).sqrt()).collect();
        let medium = RefractiveIndex::table(omega, n).unwrap();
        let p = dispersion_params(&train(medium, 20.0)).unwrap();
        assert!((p.omega0 - 1.25f64.sqrt()).abs() < 1e-5);
        assert!(matches!(
            dispersion_params(&train(RefractiveIndex::Vacuum, 20.0).with_branch(1)),
            Err(BeamError::Branch { .. })
        ));
        assert!(TrainSpec::new(1.0, 2.0, 1.0, RefractiveIndex::Vacuum, 6.0).is_err());
        assert!(TrainSpec::new(1.0, 6.0, 1.0, RefractiveIndex::Vacuum, 6.0).unwrap().paraxial_warning().is_some());
    }

    fn ode_vs_closed(spec: &TrainSpec, model: &DispersionModel, t_end: f64) -> f64 {
        let p = dispersion_params(spec).unwrap();
        let init = propagate_closed_form(spec, &p, 0.0);
        let ray = trace_ray(
            model,
            &[0.0, 0.0],
            &[spec.k0, -p.omega0],
            Span::Coordinate { axis: 1, value: t_end },
            &RayOptions::default(),
        )
        .unwrap();
        let times: Vec<f64> = (0..=20).map(|i| t_end * i as f64 / 20.0).collect();
        let states = propagate_paraxial_ode(model, &ray, &init, &times, &ParaxialOptions::default()).unwrap();
        let mut worst: f64 = 0.0;
        for s in &states {
            let c = propagate_closed_form(spec, &p, s.t);
            worst = worst
                .max(((s.w - c.w) / c.w).abs())
                .max((s.inv_r - c.inv_r).abs() * c.w * c.w * spec.k0)
                .max((s.phi - c.phi).abs())
                .max((s.s0 - c.s0).abs() / (1.0 + c.s0.abs()))
                .max((s.a_mag.powi(2) * s.w - spec.w0).abs() / spec.w0);
        }
        worst
    }

    #[test]
    fn ode_matches_closed_form_in_cold_plasma() {
        let spec = train(RefractiveIndex::cold_plasma(1.0).unwrap(), 20.0);
        let model = DispersionModel::transverse_wave(spec.medium.clone());
        assert!(ode_vs_closed(&spec, &model, 2000.0) < 1e-8);
    }

    #[test]
    fn nondispersive_riccati_is_frozen() {
        let spec = train(RefractiveIndex::Vacuum, 20.0);
        let p = dispersion_params(&spec).unwrap();
        let model = quadratic_model(&p, 1.0);
        let ray = trace_ray(&model, &[0.0, 0.0], &[1.0, -1.0], Span::Tau(50.0), &RayOptions::default()).unwrap();
        let init = propagate_closed_form(&spec, &p, 0.0);
        let out = propagate_paraxial_ode(&model, &ray, &init, &[50.0], &ParaxialOptions::default()).unwrap();
        assert_eq!(out[0].phi_complex(), init.phi_complex());
    }
}
