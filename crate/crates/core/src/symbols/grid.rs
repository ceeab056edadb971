use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::{Form, ReducedSymbol, SymbolError};

/// Complex samples on a uniform 1-D grid at a fixed time.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    pub samples: Vec<Complex64>,
    pub x_min: f64,
    pub dx: f64,
    pub time: f64,
}

/// Edge-to-peak ratio above which a field is considered to wrap around.
pub const BOUNDARY_TOL: f64 = 1e-12;

impl GridField {
    pub fn new(samples: Vec<Complex64>, x_min: f64, dx: f64, time: f64) -> Result<GridField, SymbolError> {
        let m = samples.len();
        if m < 2 || !m.is_power_of_two() {
            return Err(SymbolError::GridSize(m));
        }
        Ok(GridField {
            samples,
            x_min,
            dx,
            time,
        })
    }

    /// Samples `f` at `x_min + j dx`.
    pub fn from_fn(
        m: usize,
        x_min: f64,
        dx: f64,
        time: f64,
        f: impl Fn(f64) -> Complex64,
    ) -> Result<GridField, SymbolError> {
        let samples = (0..m).map(|j| f(x_min + j as f64 * dx)).collect();
        GridField::new(samples, x_min, dx, time)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.dx
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.x(j)).collect()
    }

    /// Angular wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        fft_wavenumbers(self.len(), self.dx)
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn check_decay(&self) -> Result<(), SymbolError> {
        let peak = self.max_abs();
        if peak == 0.0 {
            return Ok(());
        }
        let edge = self.samples[0].norm().max(self.samples[self.len() - 1].norm());
        let ratio = edge / peak;
        if ratio >= BOUNDARY_TOL {
            return Err(SymbolError::BoundaryDecay { ratio });
        }
        Ok(())
    }

    /// Discrete L2 norm `sqrt(Σ|ψ|² dx)`.
    pub fn l2_norm(&self) -> f64 {
        (self.samples.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.dx).sqrt()
    }
}

pub fn fft_wavenumbers(m: usize, dx: f64) -> Vec<f64> {
    let dk = 2.0 * PI / (m as f64 * dx);
    (0..m)
        .map(|j| {
            let s = if j < m / 2 { j as isize } else { j as isize - m as isize };
            s as f64 * dk
        })
        .collect()
}

fn spectrum(field: &GridField) -> Vec<Complex64> {
    let mut buf = field.samples.clone();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

fn inverse(mut buf: Vec<Complex64>) -> Vec<Complex64> {
    let m = buf.len();
    FftPlanner::new().plan_fft_inverse(m).process(&mut buf);
    let s = 1.0 / m as f64;
    buf.iter_mut().for_each(|v| *v *= s);
    buf
}

fn check_symbol(d: &ReducedSymbol) -> Result<(), SymbolError> {
    if d.form() != Form::LEFT {
        return Err(SymbolError::FormMismatch {
            expected: Form::LEFT,
            found: d.form(),
        });
    }
    if d.dim() != 1 {
        return Err(SymbolError::Shape("N=1".into(), format!("N={}", d.dim())));
    }
    Ok(())
}

/// `(D̂ψ)(x) = Σ_k d(k, x) ψ̂(k) e^{ikx}` with the left-form symbol `d`.
///
/// `k`-only symbols are applied by spectral multiplication; otherwise the
/// sum is evaluated for every grid point (`O(M²)` symbol evaluations).
pub fn apply_operator(d: &ReducedSymbol, psi: &GridField) -> Result<GridField, SymbolError> {
    if d.mat() != 1 {
        return Err(SymbolError::NotScalar);
    }
    let out = apply_operator_stacked(d, std::slice::from_ref(psi))?;
    Ok(out.into_iter().next().unwrap())
}

/// Matrix symbol acting on `n` stacked fields sharing one grid.
pub fn apply_operator_stacked(d: &ReducedSymbol, psi: &[GridField]) -> Result<Vec<GridField>, SymbolError> {
    check_symbol(d)?;
    let n = d.mat();
    if psi.len() != n {
        return Err(SymbolError::Shape(format!("{n} components"), format!("{} fields", psi.len())));
    }
    for f in psi {
        if f.len() != psi[0].len() || f.dx != psi[0].dx || f.x_min != psi[0].x_min {
            return Err(SymbolError::Shape("matching grids".into(), "different grids".into()));
        }
        GridField::new(f.samples.clone(), f.x_min, f.dx, f.time)?;
        f.check_decay()?;
    }
    let grid = &psi[0];
    let m = grid.len();
    let ks = grid.wavenumbers();
    let spectra: Vec<Vec<Complex64>> = psi.iter().map(spectrum).collect();
    let zero = Complex64::new(0.0, 0.0);

    if d.is_x_independent() {
        let mut out_spec = vec![vec![zero; m]; n];
        for (j, &k) in ks.iter().enumerate() {
            let v = d.eval(&[k], &[grid.x_min])?;
            for r in 0..n {
                for c in 0..n {
                    out_spec[r][j] += v[r * n + c] * spectra[c][j];
                }
            }
        }
        return Ok(out_spec
            .into_iter()
            .zip(psi)
            .map(|(s, f)| GridField {
                samples: inverse(s),
                ..f.clone()
            })
            .collect());
    }

    // Phases are taken relative to x_min, matching the DFT convention.
    let mut out = vec![vec![zero; m]; n];
    let scale = 1.0 / m as f64;
    for i in 0..m {
        let x = grid.x(i);
        for (j, &k) in ks.iter().enumerate() {
            let v = d.eval(&[k], &[x])?;
            let phase = Complex64::from_polar(scale, k * (x - grid.x_min));
            for r in 0..n {
                let mut acc = zero;
                for c in 0..n {
                    acc += v[r * n + c] * spectra[c][j];
                }
                out[r][i] += acc * phase;
            }
        }
    }
    Ok(out
        .into_iter()
        .zip(psi)
        .map(|(s, f)| GridField {
            samples: s,
            ..f.clone()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(m: usize) -> GridField {
        let l = 40.0;
        let dx = l / m as f64;
        GridField::from_fn(m, -l / 2.0, dx, 0.0, |x| {
            Complex64::from_polar((-x * x / 8.0).exp(), 2.0 * x)
        })
        .unwrap()
    }

    #[test]
    fn identity_and_size_checks() {
        let psi = gaussian(128);
        let one = ReducedSymbol::constant(1, Form::LEFT, 1.0);
        let out = apply_operator(&one, &psi).unwrap();
        for (a, b) in out.samples.iter().zip(&psi.samples) {
            assert!((a - b).norm() < 1e-14);
        }
        assert_eq!(
            GridField::new(vec![Complex64::new(0.0, 0.0); 100], 0.0, 1.0, 0.0).unwrap_err(),
            SymbolError::GridSize(100)
        );
    }

    #[test]
    fn boundary_guard() {
        let psi = GridField::from_fn(64, -1.0, 2.0 / 64.0, 0.0, |_| Complex64::new(1.0, 0.0)).unwrap();
        let one = ReducedSymbol::constant(1, Form::LEFT, 1.0);
        assert!(matches!(
            apply_operator(&one, &psi),
            Err(SymbolError::BoundaryDecay { .. })
        ));
    }

    #[test]
    fn x_dependent_multiplier_matches_pointwise_product() {
        let psi = gaussian(64);
        let d = ReducedSymbol::scalar(1, Form::LEFT, 0.0, |_, x| x[0].sin());
        let out = apply_operator(&d, &psi).unwrap();
        for (j, v) in out.samples.iter().enumerate() {
            let expect = psi.samples[j] * psi.x(j).sin();
            assert!((v - expect).norm() < 1e-12);
        }
    }
}
