//! Wigner-function transport along characteristics, and reconstruction of
//! the scale-averaged intensity.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use thiserror::Error;

use crate::dispersion::{DispersionError, DispersionModel};
use crate::rays::{integrate_span, interpolate, trace_ray, RayError, RayOptions, RaySample, Span};
use crate::symbols::GridField;

/// Fraction of each k-axis range treated as its boundary layer.
pub const EDGE_FRACTION: f64 = 0.05;

/// Largest tolerated share of kernel weight in the k boundary layer.
pub const COVERAGE_LIMIT: f64 = 0.01;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WignerError {
    #[error("sample {index} is off the dispersion surface: |D| = {value:e} > {tol:e}")]
    OffShell { index: usize, value: f64, tol: f64 },
    #[error("sample {index}: {source}")]
    Ray { index: usize, source: RayError },
    #[error(transparent)]
    Dispersion(#[from] DispersionError),
    #[error("source term with vanishing absorption at k = {k:?}, x = {x:?}: no finite on-shell limit")]
    UnregularizedSource { k: Vec<f64>, x: Vec<f64> },
    #[error("k-support looks truncated: {share:.3} of the weight sits in the boundary layer")]
    Coverage { share: f64 },
    #[error("kernel width must be positive")]
    KernelWidth,
    #[error("sample dimensions do not match ({0} vs {1})")]
    Dimension(usize, usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct WignerSample {
    pub k: Vec<f64>,
    pub x: Vec<f64>,
    pub w: f64,
    /// Phase-space volume `dᴺk dᴺx` carried by the sample.
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WignerState {
    pub samples: Vec<WignerSample>,
    pub shell_tol: f64,
}

#[derive(Clone, Debug)]
pub struct WignerOptions {
    pub ray: RayOptions,
    /// Longest `τ` interval for one exponential/midpoint update.
    pub max_substep: f64,
}

impl Default for WignerOptions {
    fn default() -> Self {
        WignerOptions {
            ray: RayOptions {
                detect_caustics: false,
                ..Default::default()
            },
            max_substep: 1e-2,
        }
    }
}

impl WignerState {
    pub fn new(samples: Vec<WignerSample>, shell_tol: f64) -> WignerState {
        WignerState { samples, shell_tol }
    }

    pub fn dim(&self) -> usize {
        self.samples.first().map_or(0, |s| s.x.len())
    }

    /// `Σ W·weight`.
    pub fn mass(&self) -> f64 {
        self.samples.iter().map(|s| s.w * s.weight).sum()
    }

    pub fn max_w(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| m.max(s.w.abs()))
    }

    /// Indices of samples violating `|D| < shell_tol`, with the value.
    pub fn off_shell(&self, model: &DispersionModel) -> Result<Vec<(usize, f64)>, WignerError> {
        let mut bad = Vec::new();
        for (i, s) in self.samples.iter().enumerate() {
            let d = model.hamiltonian(&s.k, &s.x)?;
            if !(d.abs() < self.shell_tol) {
                bad.push((i, d));
            }
        }
        Ok(bad)
    }

    /// Discrete pseudo-Wigner transform of a 1-D snapshot.
    ///
    /// Rows are taken at every `stride`-th grid point inside `window` (all
    /// points when `None`); lags run over the whole grid (zero outside).
    /// The k grid has spacing `π/(M dx)` and covers `|k| < π/(2dx)`, so the
    /// field must be band-limited to that.
    pub fn from_field(field: &GridField, stride: usize, window: Option<(f64, f64)>) -> WignerState {
        let m = field.len();
        let dx = field.dx;
        let stride = stride.max(1);
        let p = m;
        let dk = PI / (p as f64 * dx);
        let mut planner = FftPlanner::<f64>::new();
        let fft = planner.plan_fft_forward(p);
        let psi = &field.samples;
        let mut samples = Vec::new();
        let mut buf = vec![Complex64::new(0.0, 0.0); p];
        for j in (0..m).step_by(stride) {
            if let Some((lo, hi)) = window {
                if field.x(j) < lo || field.x(j) > hi {
                    continue;
                }
            }
            let half = p / 2;
            for v in buf.iter_mut() {
                *v = Complex64::new(0.0, 0.0);
            }
            for lag in -(half as isize) + 1..half as isize {
                let a = j as isize + lag;
                let b = j as isize - lag;
                if a < 0 || b < 0 || a >= m as isize || b >= m as isize {
                    continue;
                }
                let idx = lag.rem_euclid(p as isize) as usize;
                buf[idx] = psi[a as usize] * psi[b as usize].conj();
            }
            fft.process(&mut buf);
            for (n, v) in buf.iter().enumerate() {
                let nn = if n < p / 2 { n as f64 } else { n as f64 - p as f64 };
                samples.push(WignerSample {
                    k: vec![nn * dk],
                    x: vec![field.x(j)],
                    w: 2.0 * dx * v.re,
                    weight: stride as f64 * dx * dk,
                });
            }
        }
        WignerState::new(samples, f64::INFINITY)
    }
}

/// Advects every sample along its characteristic for `span` in `τ`, with
/// `dW/dτ = 2γ_A W + s` and `s = −2 n/γ_A`, `n(k, x) = e*·N·e`.
///
/// Each interval uses the exact exponential of `∫2γ_A` and the midpoint
/// rule for `s`. The weights are unchanged (Liouville).
pub fn evolve_wigner(
    model: &DispersionModel,
    source: &dyn Fn(&[f64], &[f64]) -> f64,
    state: &WignerState,
    span: f64,
    opts: &WignerOptions,
) -> Result<WignerState, WignerError> {
    if let Some(&(index, value)) = state.off_shell(model)?.first() {
        return Err(WignerError::OffShell {
            index,
            value,
            tol: state.shell_tol,
        });
    }
    let mut ray_opts = opts.ray.clone();
    ray_opts.shell_tol = ray_opts.shell_tol.max(state.shell_tol);
    let mut out = Vec::with_capacity(state.samples.len());
    for (index, s) in state.samples.iter().enumerate() {
        let ray = trace_ray(model, &s.x, &s.k, Span::Tau(span), &ray_opts)
            .map_err(|source| WignerError::Ray { index, source })?;
        if let Some(note) = &ray.note {
            return Err(WignerError::Ray {
                index,
                source: RayError::Step(note.clone()),
            });
        }
        let mut w = s.w;
        for pair in ray.samples.windows(2) {
            w = advance(model, source, &pair[0], &pair[1], w, opts.max_substep)?;
        }
        let last = ray.last();
        out.push(WignerSample {
            k: last.k.clone(),
            x: last.x.clone(),
            w,
            weight: s.weight,
        });
    }
    Ok(WignerState::new(out, state.shell_tol))
}

fn advance(
    model: &DispersionModel,
    source: &dyn Fn(&[f64], &[f64]) -> f64,
    a: &RaySample,
    b: &RaySample,
    mut w: f64,
    max_substep: f64,
) -> Result<f64, WignerError> {
    let h = b.tau - a.tau;
    let pieces = ((h.abs() / max_substep).ceil() as usize).max(1);
    let dt = h / pieces as f64;
    let mut two_gamma = |x: &[f64], k: &[f64]| model.gamma(k, x).map(|g| 2.0 * g);
    for p in 0..pieces {
        let t0 = a.tau + p as f64 * dt;
        let g = integrate_span(a, b, t0, t0 + dt, &mut two_gamma)?;
        let (xm, km) = interpolate(a, b, t0 + 0.5 * dt);
        let n = source(&km, &xm);
        let s_eff = if n == 0.0 {
            0.0
        } else {
            let gm = model.gamma(&km, &xm)?;
            if gm == 0.0 {
                return Err(WignerError::UnregularizedSource { k: km, x: xm });
            }
            -2.0 * n / gm
        };
        w = w * g.exp() + dt * s_eff * (0.5 * g).exp();
    }
    Ok(w)
}

/// `⟨|ψ|²⟩_ℓ(x) = Σ W·weight·K_ℓ(x − x_j) / (2π)ᴺ` with a normalized
/// Gaussian kernel of standard deviation `ell` per axis.
///
/// Fails with [`WignerError::Coverage`] when more than 1% of the kernel
/// weight comes from the outer 5% of the sampled k-range on any axis.
pub fn intensity_from_wigner(state: &WignerState, x: &[f64], ell: f64) -> Result<f64, WignerError> {
    if !(ell > 0.0) {
        return Err(WignerError::KernelWidth);
    }
    if state.samples.is_empty() {
        return Ok(0.0);
    }
    let n = state.dim();
    if x.len() != n {
        return Err(WignerError::Dimension(x.len(), n));
    }
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![f64::NEG_INFINITY; n];
    for s in &state.samples {
        for i in 0..n {
            lo[i] = lo[i].min(s.k[i]);
            hi[i] = hi[i].max(s.k[i]);
        }
    }
    let norm = (2.0 * PI * ell * ell).powf(-0.5 * n as f64) / (2.0 * PI).powi(n as i32);
    let (mut total, mut abs_total, mut edge) = (0.0, 0.0, 0.0);
    for s in &state.samples {
        let r2: f64 = s.x.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
        let c = s.w * s.weight * norm * (-0.5 * r2 / (ell * ell)).exp();
        total += c;
        abs_total += c.abs();
        let at_edge = (0..n).any(|i| {
            let width = hi[i] - lo[i];
            width > 0.0 && (s.k[i] - lo[i] < EDGE_FRACTION * width || hi[i] - s.k[i] < EDGE_FRACTION * width)
        });
        if at_edge {
            edge += c.abs();
        }
    }
    if abs_total > 0.0 && edge / abs_total > COVERAGE_LIMIT {
        return Err(WignerError::Coverage { share: edge / abs_total });
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn homogeneous(eta: f64) -> DispersionModel {
        DispersionModel::scalar(1, move |k, _| &k[0] * &k[0] - 4.0 + Complex64::new(0.0, eta))
    }

    fn one(k: f64, x: f64, w: f64) -> WignerState {
        WignerState::new(
            vec![WignerSample {
                k: vec![k],
                x: vec![x],
                w,
                weight: 2.0 * PI,
            }],
            1e-8,
        )
    }

    #[test]
    fn delta_state_has_unit_intensity() {
        let st = one(2.0, 0.0, 1.0);
        let ell = 0.3;
        let peak = intensity_from_wigner(&st, &[0.0], ell).unwrap();
        assert!((peak * (2.0 * PI).sqrt() * ell - 1.0).abs() < 1e-14);
        let empty = WignerState::new(Vec::new(), 1e-8);
        assert_eq!(intensity_from_wigner(&empty, &[0.0], ell).unwrap(), 0.0);
    }

    #[test]
    fn pure_advection_and_decay() {
        let st = one(2.0, 1.0, 3.0);
        let out = evolve_wigner(&homogeneous(0.0), &|_, _| 0.0, &st, 2.0, &WignerOptions::default()).unwrap();
        assert!((out.samples[0].x[0] - 9.0).abs() < 1e-10);
        assert!((out.samples[0].w - 3.0).abs() < 1e-14);
        let out = evolve_wigner(&homogeneous(-0.1), &|_, _| 0.0, &st, 2.0, &WignerOptions::default()).unwrap();
        assert!((out.samples[0].w - 3.0 * (-0.4f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn driven_balance_is_reached() {
        let (gamma, n) = (-0.5, 0.2);
        let st = one(2.0, 0.0, 0.0);
        let out = evolve_wigner(&homogeneous(gamma), &|_, _| n, &st, 40.0, &WignerOptions::default()).unwrap();
        let fixed = n / (gamma * gamma);
        assert!((out.samples[0].w - fixed).abs() < 1e-5 * fixed);
        assert!(matches!(
            evolve_wigner(&homogeneous(0.0), &|_, _| n, &st, 1.0, &WignerOptions::default()),
            Err(WignerError::UnregularizedSource { .. })
        ));
    }

    #[test]
    fn off_shell_input_is_rejected() {
        let st = one(1.0, 0.0, 1.0);
        assert!(matches!(
            evolve_wigner(&homogeneous(0.0), &|_, _| 0.0, &st, 1.0, &WignerOptions::default()),
            Err(WignerError::OffShell { .. })
        ));
    }

    #[test]
    fn truncated_support_is_reported() {
        let samples = (0..21)
            .map(|i| WignerSample {
                k: vec![i as f64 * 0.1],
                x: vec![0.0],
                w: 1.0,
                weight: 0.1,
            })
            .collect();
        let st = WignerState::new(samples, f64::INFINITY);
        assert!(matches!(intensity_from_wigner(&st, &[0.0], 1.0), Err(WignerError::Coverage { .. })));
    }

    #[test]
    fn snapshot_marginal_is_intensity() {
        let field = GridField::from_fn(256, -12.8, 0.1, 0.0, |x| {
            Complex64::from_polar((-x * x / 4.0).exp(), 1.5 * x)
        })
        .unwrap();
        let st = WignerState::from_field(&field, 1, None);
        let j = 128;
        let marginal: f64 = st
            .samples
            .iter()
            .filter(|s| (s.x[0] - field.x(j)).abs() < 1e-12)
            .map(|s| s.w * s.weight / 0.1 / (2.0 * PI))
            .sum();
        assert!((marginal - field.samples[j].norm_sqr()).abs() < 1e-12);
    }
}
