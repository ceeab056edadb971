//! Homogeneous refractive-index models `n(ω)` in units with `c = 1`.

use thiserror::Error;

use crate::jet::Jet;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MediumError {
    #[error("table needs at least 3 strictly increasing frequencies with matching values")]
    BadTable,
    #[error("plasma frequency must be positive and finite, got {0}")]
    BadPlasmaFrequency(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub enum RefractiveIndex {
    Vacuum,
    /// `n² = 1 − ω_pe²/ω²`.
    ColdPlasma { omega_pe: f64 },
    /// Natural cubic spline through `(omega[i], n[i])`; the end segments
    /// are extended outside the table.
    Table(Spline),
}

impl RefractiveIndex {
    pub fn cold_plasma(omega_pe: f64) -> Result<Self, MediumError> {
        if !(omega_pe.is_finite() && omega_pe > 0.0) {
            return Err(MediumError::BadPlasmaFrequency(omega_pe));
        }
        Ok(RefractiveIndex::ColdPlasma { omega_pe })
    }

    pub fn table(omega: Vec<f64>, n: Vec<f64>) -> Result<Self, MediumError> {
        Ok(RefractiveIndex::Table(Spline::natural(omega, n)?))
    }

    /// `n(ω)` and its first two derivatives.
    pub fn derivs(&self, omega: f64) -> (f64, f64, f64) {
        match self {
            RefractiveIndex::Vacuum => (1.0, 0.0, 0.0),
            RefractiveIndex::ColdPlasma { .. } => {
                let j = self.n2_jet(&Jet::variable(1, 2, 0, omega)).sqrt();
                (j.value().re, j.derivative(&[1]).re, j.derivative(&[2]).re)
            }
            RefractiveIndex::Table(s) => s.eval(omega),
        }
    }

    pub fn n(&self, omega: f64) -> f64 {
        self.derivs(omega).0
    }

    pub fn n2(&self, omega: f64) -> f64 {
        match self {
            RefractiveIndex::Vacuum => 1.0,
            RefractiveIndex::ColdPlasma { omega_pe } => 1.0 - (omega_pe / omega).powi(2),
            RefractiveIndex::Table(s) => s.eval(omega).0.powi(2),
        }
    }

    /// `n²(ω)` on a jet; exact derivatives for every variant.
    pub fn n2_jet(&self, omega: &Jet) -> Jet {
        match self {
            RefractiveIndex::Vacuum => Jet::constant(omega.nvars(), omega.order(), 1.0),
            RefractiveIndex::ColdPlasma { omega_pe } => 1.0 - omega.powi(-2) * (omega_pe * omega_pe),
            RefractiveIndex::Table(s) => {
                let n = s.eval_jet(omega);
                &n * &n
            }
        }
    }

    /// Frequency below which no propagating root exists, if any.
    pub fn cutoff(&self) -> Option<f64> {
        match self {
            RefractiveIndex::ColdPlasma { omega_pe } => Some(*omega_pe),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Spline {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl Spline {
    pub fn natural(x: Vec<f64>, y: Vec<f64>) -> Result<Spline, MediumError> {
        let n = x.len();
        if n < 3 || y.len() != n || x.windows(2).any(|w| !(w[1] > w[0])) || y.iter().any(|v| !v.is_finite()) {
            return Err(MediumError::BadTable);
        }
        // Tridiagonal solve for interior second derivatives.
        let mut m = vec![0.0; n];
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        for i in 1..n - 1 {
            let h0 = x[i] - x[i - 1];
            let h1 = x[i + 1] - x[i];
            let a = h0 / 6.0;
            let b = (h0 + h1) / 3.0;
            let cc = h1 / 6.0;
            let rhs = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
            let denom = b - a * c[i - 1];
            c[i] = cc / denom;
            d[i] = (rhs - a * d[i - 1]) / denom;
        }
        for i in (1..n - 1).rev() {
            m[i] = d[i] - c[i] * m[i + 1];
        }
        Ok(Spline { x, y, m })
    }

    fn segment(&self, t: f64) -> usize {
        let n = self.x.len();
        match self.x.partition_point(|&v| v <= t) {
            0 => 0,
            i if i >= n => n - 2,
            i => i - 1,
        }
    }

    /// Local cubic coefficients `[a, b, c, d]` in `u = t − x[i]`.
    fn coeffs(&self, i: usize) -> [f64; 4] {
        let h = self.x[i + 1] - self.x[i];
        let (y0, y1, m0, m1) = (self.y[i], self.y[i + 1], self.m[i], self.m[i + 1]);
        [
            y0,
            (y1 - y0) / h - h * (2.0 * m0 + m1) / 6.0,
            m0 / 2.0,
            (m1 - m0) / (6.0 * h),
        ]
    }

    pub fn eval(&self, t: f64) -> (f64, f64, f64) {
        let i = self.segment(t);
        let [a, b, c, d] = self.coeffs(i);
        let u = t - self.x[i];
        (
            a + u * (b + u * (c + u * d)),
            b + u * (2.0 * c + 3.0 * d * u),
            2.0 * c + 6.0 * d * u,
        )
    }

    pub fn eval_jet(&self, t: &Jet) -> Jet {
        let i = self.segment(t.value().re);
        let [a, b, c, d] = self.coeffs(i);
        let u = t - self.x[i];
        ((&u * d + c) * &u + b) * &u + a
    }

    pub fn range(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cold_plasma_derivatives() {
        let m = RefractiveIndex::cold_plasma(1.0).unwrap();
        let w: f64 = 2.0f64.sqrt();
        let (n, n1, n2) = m.derivs(w);
        let exact_n = (1.0 - 1.0 / (w * w)).sqrt();
        assert!((n - exact_n).abs() < 1e-15);
        let h = 1e-4;
        let fd1 = (m.n(w + h) - m.n(w - h)) / (2.0 * h);
        let fd2 = (m.n(w + h) - 2.0 * n + m.n(w - h)) / (h * h);
        assert!((n1 - fd1).abs() < 1e-7);
        assert!((n2 - fd2).abs() < 1e-6);
    }

    #[test]
    fn spline_reproduces_cubic_interior_and_jet() {
        let xs: Vec<f64> = (0..30).map(|i| 1.0 + i as f64 * 0.1).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 1.0 + 0.1 * x.sin()).collect();
        let s = Spline::natural(xs, ys).unwrap();
        let (v, d1, _) = s.eval(2.05);
        assert!((v - (1.0 + 0.1 * 2.05f64.sin())).abs() < 1e-6);
        assert!((d1 - 0.1 * 2.05f64.cos()).abs() < 1e-4);
        let j = s.eval_jet(&Jet::variable(1, 2, 0, 2.05));
        let (a, b, c) = s.eval(2.05);
        assert!((j.value().re - a).abs() < 1e-15);
        assert!((j.derivative(&[1]).re - b).abs() < 1e-13);
        assert!((j.derivative(&[2]).re - c).abs() < 1e-12);
        assert_eq!(
            Spline::natural(vec![1.0, 1.0, 2.0], vec![1.0; 3]).unwrap_err(),
            MediumError::BadTable
        );
    }
}
