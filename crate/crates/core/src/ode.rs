//! Dormand–Prince 5(4) with adaptive step control.

use thiserror::Error;

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step magnitude; chosen automatically when `None`.
    pub h0: Option<f64>,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-9,
            atol: 1e-12,
            h0: None,
            h_max: f64::INFINITY,
            max_steps: 200_000,
        }
    }
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> Self {
        OdeOptions {
            rtol: tol,
            atol: tol * 1e-3,
            ..Default::default()
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError<E> {
    #[error("right-hand side failed at t = {t}: {source}")]
    Rhs { t: f64, source: E },
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepSize { t: f64, h: f64 },
    #[error("more than {0} steps required")]
    MaxSteps(usize),
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
    /// Final time reached (equals the target unless the observer stopped).
    pub t_end: f64,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Observer verdict after each accepted step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

/// Integrates `y' = f(t, y)` from `t0` to `t1` (either direction).
///
/// `observe` sees the initial state and every accepted step; returning
/// [`Control::Stop`] ends the integration early.
pub fn integrate<E, F, O>(
    mut f: F,
    t0: f64,
    y0: &[f64],
    t1: f64,
    opts: &OdeOptions,
    mut observe: O,
) -> Result<(Vec<f64>, OdeStats), OdeError<E>>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<(), E>,
    O: FnMut(f64, &[f64], &[f64]) -> Control,
{
    let n = y0.len();
    let mut stats = OdeStats {
        t_end: t0,
        ..Default::default()
    };
    let mut y = y0.to_vec();
    let mut t = t0;
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let span = (t1 - t0).abs();

    let mut k1 = vec![0.0; n];
    let eval = |f: &mut F, t: f64, y: &[f64], out: &mut [f64], stats: &mut OdeStats| {
        stats.evaluations += 1;
        f(t, y, out).map_err(|source| OdeError::Rhs { t, source })
    };
    eval(&mut f, t, &y, &mut k1, &mut stats)?;
    if observe(t, &y, &k1) == Control::Stop || span == 0.0 {
        return Ok((y, stats));
    }

    let scale = |a: f64, b: f64| opts.atol + opts.rtol * a.abs().max(b.abs());
    let mut h = match opts.h0 {
        Some(h) => h.min(span),
        None => {
            let d0 = rms(&y, &y, scale);
            let d1 = rms(&k1, &y, scale);
            let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
            h.min(span).min(opts.h_max)
        }
    };

    let (mut k2, mut k3, mut k4, mut k5, mut k6, mut k7) =
        (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    let mut err_prev: f64 = 1e-4;

    while (t1 - t) * dir > 0.0 {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(OdeError::MaxSteps(opts.max_steps));
        }
        let last = (t + dir * h - t1) * dir >= 0.0;
        let hs = if last { t1 - t } else { dir * h };
        if hs.abs() <= 16.0 * f64::EPSILON * t.abs().max(1.0) {
            return Err(OdeError::StepSize { t, h: hs });
        }

        for i in 0..n {
            tmp[i] = y[i] + hs * A21 * k1[i];
        }
        eval(&mut f, t + C2 * hs, &tmp, &mut k2, &mut stats)?;
        for i in 0..n {
            tmp[i] = y[i] + hs * (A31 * k1[i] + A32 * k2[i]);
        }
        eval(&mut f, t + C3 * hs, &tmp, &mut k3, &mut stats)?;
        for i in 0..n {
            tmp[i] = y[i] + hs * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        eval(&mut f, t + C4 * hs, &tmp, &mut k4, &mut stats)?;
        for i in 0..n {
            tmp[i] = y[i] + hs * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        eval(&mut f, t + C5 * hs, &tmp, &mut k5, &mut stats)?;
        for i in 0..n {
            tmp[i] = y[i]
                + hs * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        eval(&mut f, t + hs, &tmp, &mut k6, &mut stats)?;
        for i in 0..n {
            y_new[i] = y[i]
                + hs * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
        }
        let t_new = if last { t1 } else { t + hs };
        eval(&mut f, t_new, &y_new, &mut k7, &mut stats)?;

        let mut err = 0.0;
        for i in 0..n {
            let e = hs
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let s = scale(y[i], y_new[i]);
            err += (e / s).powi(2);
        }
        let err = if n == 0 { 0.0 } else { (err / n as f64).sqrt() };

        if err <= 1.0 {
            // PI controller (Hairer & Wanner defaults).
            let fac = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.7 / 5.0) * err_prev.powf(0.4 / 5.0)).clamp(0.2, 5.0)
            };
            err_prev = err.max(1e-4);
            t = t_new;
            std::mem::swap(&mut y, &mut y_new);
            std::mem::swap(&mut k1, &mut k7);
            stats.accepted += 1;
            stats.t_end = t;
            if observe(t, &y, &k1) == Control::Stop {
                return Ok((y, stats));
            }
            h = (hs.abs() * fac).min(opts.h_max);
        } else {
            stats.rejected += 1;
            let fac = (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
            h = hs.abs() * fac;
        }
        if !h.is_finite() {
            return Err(OdeError::StepSize { t, h });
        }
    }
    Ok((y, stats))
}

fn rms(v: &[f64], y: &[f64], scale: impl Fn(f64, f64) -> f64) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    (v.iter()
        .zip(y)
        .map(|(a, b)| (a / scale(*b, *b)).powi(2))
        .sum::<f64>()
        / v.len() as f64)
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::convert::Infallible;

    #[test]
    fn exponential_decay() {
        let (y, stats) = integrate(
            |_, y, dy| {
                dy[0] = -y[0];
                Ok::<_, Infallible>(())
            },
            0.0,
            &[1.0],
            5.0,
            &OdeOptions::with_tol(1e-10),
            |_, _, _| Control::Continue,
        )
        .unwrap();
        assert!((y[0] - (-5.0f64).exp()).abs() < 1e-11);
        assert_eq!(stats.t_end, 5.0);
    }

    #[test]
    fn harmonic_oscillator_backward() {
        let (y, _) = integrate(
            |_, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
                Ok::<_, Infallible>(())
            },
            0.0,
            &[1.0, 0.0],
            -3.0,
            &OdeOptions::with_tol(1e-11),
            |_, _, _| Control::Continue,
        )
        .unwrap();
        assert!((y[0] - 3.0f64.cos()).abs() < 1e-9);
        assert!((y[1] - 3.0f64.sin()).abs() < 1e-9);
    }

    #[test]
    fn observer_can_stop_and_errors_propagate() {
        let mut seen = 0;
        let (_, stats) = integrate(
            |_, _, dy| {
                dy[0] = 1.0;
                Ok::<_, Infallible>(())
            },
            0.0,
            &[0.0],
            10.0,
            &OdeOptions {
                h0: Some(0.5),
                h_max: 0.5,
                ..Default::default()
            },
            |t, _, _| {
                seen += 1;
                if t >= 2.0 {
                    Control::Stop
                } else {
                    Control::Continue
                }
            },
        )
        .unwrap();
        assert!(stats.t_end >= 2.0 && stats.t_end < 10.0);
        assert!(seen >= 2);
        let res = integrate(
            |t, _, dy| {
                dy[0] = 1.0;
                if t > 1.0 {
                    Err("boom")
                } else {
                    Ok(())
                }
            },
            0.0,
            &[0.0],
            2.0,
            &OdeOptions::default(),
            |_, _, _| Control::Continue,
        );
        assert!(matches!(res, Err(OdeError::Rhs { source: "boom", .. })));
    }
}
