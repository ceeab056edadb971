//! Exact forward propagation of `∂²_t(N̂²ψ) − ∂²_xψ = 0` in a homogeneous
//! medium by Fourier modes, and field comparison metrics.

use std::io::{self, Read, Write};

use num_complex::Complex64;
use rustfft::FftPlanner;
use thiserror::Error;

use crate::beam::{forward_roots, DispersionParams, TrainSpec};
use crate::jet::Jet;
use crate::medium::RefractiveIndex;
use crate::symbols::{GridField, SymbolError};

/// Spectral power (relative to the peak) below which a mode may be dropped
/// when it has no root.
pub const NEGLIGIBLE_POWER: f64 = 1e-12;

/// Residual `|D(k, ω)|` accepted after refinement.
pub const ROOT_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("no forward root for mode k = {k} (power {power:e} of the peak)")]
    Root { k: f64, power: f64 },
    #[error("initial field: {0}")]
    Initial(SymbolError),
    #[error("propagated field reaches the grid boundary; enlarge the domain ({0})")]
    Domain(SymbolError),
    #[error("initial field must be real")]
    Complex,
    #[error("grids differ: {0}")]
    GridMismatch(String),
    #[error("snapshot: {0}")]
    Io(#[from] io::Error),
    #[error("snapshot header is malformed: {0}")]
    Snapshot(String),
}

/// `F(ω) = ω² n²(ω) − k²` and `F′(ω)`.
fn residual(medium: &RefractiveIndex, k: f64, omega: f64) -> (f64, f64) {
    let j = medium.n2_jet(&Jet::variable(1, 1, 0, omega));
    let n2 = j.value().re;
    let n2p = j.derivative(&[1]).re;
    (omega * omega * n2 - k * k, 2.0 * omega * n2 + omega * omega * n2p)
}

/// Forward root of `D(k, ω) = 0` by damped Newton from `seed`.
pub fn solve_root(medium: &RefractiveIndex, k: f64, seed: f64) -> Option<f64> {
    let mut w = seed;
    let (mut f, mut fp) = residual(medium, k, w);
    for _ in 0..100 {
        if f.abs() <= 1e-14 * (k * k).max(1.0) {
            return Some(w);
        }
        if fp == 0.0 || !fp.is_finite() {
            return None;
        }
        let step = f / fp;
        let mut lambda = 1.0;
        loop {
            let trial = w - lambda * step;
            if trial > 0.0 {
                let (ft, fpt) = residual(medium, k, trial);
                if ft.is_finite() && ft.abs() < f.abs() {
                    w = trial;
                    f = ft;
                    fp = fpt;
                    break;
                }
            }
            lambda *= 0.5;
            if lambda < 1e-10 {
                return (f.abs() <= ROOT_TOL).then_some(w);
            }
        }
    }
    (f.abs() <= ROOT_TOL).then_some(w)
}

/// Forward-branch `ω(k)` for every listed wavenumber (ascending order is
/// not required), continued from `omega_ref` at `k_ref`.
pub fn dispersion_curve(medium: &RefractiveIndex, ks: &[f64], k_ref: f64, omega_ref: f64) -> Vec<Option<f64>> {
    let mut order: Vec<usize> = (0..ks.len()).collect();
    order.sort_by(|&a, &b| ks[a].total_cmp(&ks[b]));
    let start = order
        .iter()
        .position(|&i| ks[i] >= k_ref)
        .unwrap_or(order.len().saturating_sub(1));
    let mut out = vec![None; ks.len()];
    let mut seed = omega_ref;
    for &i in &order[start..] {
        out[i] = solve_root(medium, ks[i], seed);
        if let Some(w) = out[i] {
            seed = w;
        }
    }
    seed = omega_ref;
    for &i in order[..start].iter().rev() {
        out[i] = solve_root(medium, ks[i], seed);
        if let Some(w) = out[i] {
            seed = w;
        }
    }
    out
}

/// Advances a real field by `t` keeping only forward-propagating modes:
/// `ψ(t) = 2 Re Σ_{k>0} ψ̂_k e^{i(kx − ω(k)t)}` (plus the `k = 0` mode).
pub fn exact_propagate(psi0: &GridField, medium: &RefractiveIndex, t: f64) -> Result<GridField, OracleError> {
    if psi0.samples.iter().any(|v| v.im != 0.0) {
        return Err(OracleError::Complex);
    }
    psi0.check_decay().map_err(OracleError::Initial)?;
    let m = psi0.len();
    let mut spec = psi0.samples.clone();
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(m).process(&mut spec);
    if t == 0.0 {
        return Ok(psi0.clone());
    }
    let ks = psi0.wavenumbers();
    let half: Vec<usize> = (0..m / 2).collect();
    let peak = half.iter().map(|&i| spec[i].norm_sqr()).fold(0.0, f64::max);
    let i_ref = half
        .iter()
        .copied()
        .max_by(|&a, &b| spec[a].norm_sqr().total_cmp(&spec[b].norm_sqr()))
        .unwrap_or(0);
    let k_ref = ks[i_ref];
    let omega_ref = forward_roots(medium, k_ref)
        .first()
        .copied()
        .ok_or(OracleError::Root { k: k_ref, power: 1.0 })?;
    let half_k: Vec<f64> = half.iter().map(|&i| ks[i]).collect();
    let omegas = dispersion_curve(medium, &half_k, k_ref, omega_ref);

    let mut out = vec![Complex64::new(0.0, 0.0); m];
    for (&i, omega) in half.iter().zip(&omegas) {
        let power = if peak > 0.0 { spec[i].norm_sqr() / peak } else { 0.0 };
        match omega {
            Some(w) => {
                let weight = if i == 0 { 1.0 } else { 2.0 };
                out[i] = spec[i] * Complex64::from_polar(weight, -w * t);
            }
            None if power <= NEGLIGIBLE_POWER => {}
            None => return Err(OracleError::Root { k: ks[i], power }),
        }
    }
    planner.plan_fft_inverse(m).process(&mut out);
    let scale = 1.0 / m as f64;
    let samples = out.iter().map(|v| Complex64::new(v.re * scale, 0.0)).collect();
    let field = GridField::new(samples, psi0.x_min, psi0.dx, psi0.time + t).map_err(OracleError::Initial)?;
    field.check_decay().map_err(OracleError::Domain)?;
    Ok(field)
}

/// `Σ_{k≥0} |ψ̂_k|²` over the half-spectrum.
pub fn half_spectrum_mass(psi: &GridField) -> f64 {
    let mut spec = psi.samples.clone();
    FftPlanner::<f64>::new().plan_fft_forward(psi.len()).process(&mut spec);
    spec[..psi.len() / 2].iter().map(|v| v.norm_sqr()).sum()
}

/// Magnitude of the analytic signal `|2 Σ_{k>0} ψ̂_k e^{ikx}|`.
pub fn envelope(psi: &GridField) -> Vec<f64> {
    let m = psi.len();
    let mut spec = psi.samples.clone();
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(m).process(&mut spec);
    for (i, v) in spec.iter_mut().enumerate() {
        if i > m / 2 {
            *v = Complex64::new(0.0, 0.0);
        } else if i > 0 && i < m / 2 {
            *v *= 2.0;
        }
    }
    planner.plan_fft_inverse(m).process(&mut spec);
    spec.iter().map(|v| v.norm() / m as f64).collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Comparison {
    /// `‖a − b‖₂ / ‖a‖₂`.
    pub l2_rel: f64,
    pub linf_rel: f64,
    /// `2σ` of the squared envelope (the `e⁻¹` half-width for a Gaussian).
    pub width_a: f64,
    pub width_b: f64,
    pub peak_a: f64,
    pub peak_b: f64,
    /// `peak_b − peak_a`.
    pub peak_shift: f64,
}

fn same_grid(a: &GridField, b: &GridField) -> Result<(), OracleError> {
    let tol = 1e-12 * (1.0 + a.x_min.abs());
    if a.len() != b.len() || (a.x_min - b.x_min).abs() > tol || (a.dx - b.dx).abs() > 1e-12 * a.dx {
        return Err(OracleError::GridMismatch(format!(
            "({}, {}, {}) vs ({}, {}, {})",
            a.len(),
            a.x_min,
            a.dx,
            b.len(),
            b.x_min,
            b.dx
        )));
    }
    if (a.time - b.time).abs() > 1e-9 * (1.0 + a.time.abs()) {
        return Err(OracleError::GridMismatch(format!("t = {} vs {}", a.time, b.time)));
    }
    Ok(())
}

/// Peak position by a parabola through the largest sample and its
/// neighbours.
pub fn peak_position(field: &GridField, env: &[f64]) -> f64 {
    let (j, _) = env
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    if j == 0 || j + 1 >= env.len() {
        return field.x(j);
    }
    let (l, c, r) = (env[j - 1], env[j], env[j + 1]);
    let denom = l - 2.0 * c + r;
    let offset = if denom != 0.0 { 0.5 * (l - r) / denom } else { 0.0 };
    field.x(j) + offset * field.dx
}

fn width(field: &GridField, env: &[f64]) -> f64 {
    let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for (j, e) in env.iter().enumerate() {
        let p = e * e;
        let x = field.x(j);
        m0 += p;
        m1 += p * x;
        m2 += p * x * x;
    }
    if m0 == 0.0 {
        return 0.0;
    }
    let mean = m1 / m0;
    2.0 * (m2 / m0 - mean * mean).max(0.0).sqrt()
}

pub fn compare_fields(a: &GridField, b: &GridField) -> Result<Comparison, OracleError> {
    same_grid(a, b)?;
    let (mut num, mut den, mut dmax) = (0.0, 0.0, 0.0f64);
    for (x, y) in a.samples.iter().zip(&b.samples) {
        let d = (x - y).norm();
        num += d * d;
        den += x.norm_sqr();
        dmax = dmax.max(d);
    }
    let amax = a.max_abs();
    let (ea, eb) = (envelope(a), envelope(b));
    let (pa, pb) = (peak_position(a, &ea), peak_position(b, &eb));
    Ok(Comparison {
        l2_rel: if den > 0.0 { (num / den).sqrt() } else { 0.0 },
        linf_rel: if amax > 0.0 { dmax / amax } else { 0.0 },
        width_a: width(a, &ea),
        width_b: width(b, &eb),
        peak_a: pa,
        peak_b: pb,
        peak_shift: pb - pa,
    })
}

/// Uniform grid for a train followed up to `t_max`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridPlan {
    pub m: usize,
    pub x_min: f64,
    pub dx: f64,
}

/// Domain covering `x_c(t_max) + 8w(t_max) + 8w0` with `dx ≤ λ0/16`,
/// widened by `margin` (a fraction of the length) and rounded up to a
/// power-of-two point count.
pub fn plan_grid(spec: &TrainSpec, p: &DispersionParams, t_max: f64, margin: f64) -> GridPlan {
    let end = crate::beam::propagate_closed_form(spec, p, t_max);
    let lo = end.x_c.min(0.0) - 8.0 * spec.w0.max(end.w);
    let hi = end.x_c.max(0.0) + 8.0 * spec.w0.max(end.w);
    let length = (hi - lo) * (1.0 + margin.max(0.0));
    let dx_max = 2.0 * std::f64::consts::PI / spec.k0 / 16.0;
    let m = ((length / dx_max).ceil() as usize).max(2).next_power_of_two();
    let dx = length / m as f64;
    let centre = 0.5 * (lo + hi);
    GridPlan {
        m,
        x_min: centre - 0.5 * length,
        dx,
    }
}

/// Little-endian `f64` header `[M, x_min, dx, t]`, then `M` pairs `(Re, Im)`.
pub fn write_snapshot(mut w: impl Write, field: &GridField) -> Result<(), OracleError> {
    for v in [field.len() as f64, field.x_min, field.dx, field.time] {
        w.write_all(&v.to_le_bytes())?;
    }
    for z in &field.samples {
        w.write_all(&z.re.to_le_bytes())?;
        w.write_all(&z.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_snapshot(mut r: impl Read) -> Result<GridField, OracleError> {
    let mut next = || -> Result<f64, OracleError> {
        let mut b = [0u8; 8];
        r.read_exact(&mut b)?;
        Ok(f64::from_le_bytes(b))
    };
    let m = next()?;
    if !(m >= 2.0 && m.fract() == 0.0 && m <= (1u64 << 40) as f64) {
        return Err(OracleError::Snapshot(format!("M = {m}")));
    }
    let (x_min, dx, t) = (next()?, next()?, next()?);
    let mut samples = Vec::with_capacity(m as usize);
    for _ in 0..m as usize {
        let re = next()?;
        let im = next()?;
        samples.push(Complex64::new(re, im));
    }
    GridField::new(samples, x_min, dx, t).map_err(|e| OracleError::Snapshot(e.to_string()))
}
