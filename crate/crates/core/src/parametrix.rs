//! Approximate inverses of first-order-in-time operators by the left-symbol
//! recursion, and the cold-plasma conductivity and dielectric symbols.
//!
//! Time-dependent symbols use one phase-space pair `(k, x) = (−ω/c, ct)`;
//! the spatial point is a fixed parameter of the medium.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

use crate::jet::Jet;
use crate::symbols::{compose_left, Form, ReducedSymbol, SymbolError};

/// Relative floor on `|q_leading|` at probe points.
pub const ZERO_FLOOR: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParametrixError {
    #[error(transparent)]
    Symbol(#[from] SymbolError),
    #[error("levels must be 1 or 2, got {0}")]
    Levels(usize),
    #[error("leading symbol nearly vanishes at k = {k:?}, x = {x:?} (|q| = {value:e})")]
    ZeroCrossing { k: Vec<f64>, x: Vec<f64>, value: f64 },
    #[error("series orders must decrease by one per term")]
    SeriesOrder,
    #[error("collision frequency must be positive, got {0}")]
    NonPositiveNu(f64),
    #[error("speed of light must be positive, got {0}")]
    BadLightSpeed(f64),
    #[error("no probe points supplied")]
    NoProbes,
}

/// `s = s₀ + s₁ + ⋯` with `order(s_{j+1}) = order(s_j) − 1`.
#[derive(Clone, Debug)]
pub struct SymbolSeries {
    terms: Vec<ReducedSymbol>,
}

impl SymbolSeries {
    pub fn new(terms: Vec<ReducedSymbol>) -> Result<SymbolSeries, ParametrixError> {
        if terms.is_empty() {
            return Err(SymbolError::NoTerms.into());
        }
        for w in terms.windows(2) {
            if (w[0].order_m() - w[1].order_m() - 1.0).abs() > 1e-12
                || w[0].dim() != w[1].dim()
                || w[0].form() != w[1].form()
            {
                return Err(ParametrixError::SeriesOrder);
            }
        }
        Ok(SymbolSeries { terms })
    }

    pub fn terms(&self) -> &[ReducedSymbol] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn leading(&self) -> &ReducedSymbol {
        &self.terms[0]
    }

    /// The series as one graded symbol.
    pub fn to_symbol(&self) -> ReducedSymbol {
        ReducedSymbol::graded(self.terms.clone())
    }

    pub fn eval(&self, k: &[f64], x: &[f64]) -> Result<Complex64, SymbolError> {
        self.terms.iter().map(|t| t.eval_scalar(k, x)).sum()
    }
}

fn check_levels(levels: usize) -> Result<(), ParametrixError> {
    if levels == 1 || levels == 2 {
        Ok(())
    } else {
        Err(ParametrixError::Levels(levels))
    }
}

/// Left symbol `p = p₀ + p₁` of a parametrix of `q`:
/// `p₀ = 1/q₀`, `p₁ = −p₀ (p₀ q₁ − i ∂_k p₀ ∂_x q₀)`.
///
/// `probes` are `(k, x)` points where `q₀` must stay away from zero.
pub fn build_parametrix(
    q: &SymbolSeries,
    levels: usize,
    probes: &[(Vec<f64>, Vec<f64>)],
) -> Result<SymbolSeries, ParametrixError> {
    check_levels(levels)?;
    let lead = q.leading();
    if lead.mat() != 1 {
        return Err(SymbolError::NotScalar.into());
    }
    if lead.form() != Form::LEFT {
        return Err(SymbolError::FormMismatch {
            expected: Form::LEFT,
            found: lead.form(),
        }
        .into());
    }
    if probes.is_empty() {
        return Err(ParametrixError::NoProbes);
    }
    let mags = probes
        .iter()
        .map(|(k, x)| lead.eval_scalar(k, x).map(|v| v.norm()))
        .collect::<Result<Vec<f64>, _>>()?;
    let typical = mags.iter().sum::<f64>() / mags.len() as f64;
    for ((k, x), &m) in probes.iter().zip(&mags) {
        if !(m >= ZERO_FLOOR * typical) || m == 0.0 {
            return Err(ParametrixError::ZeroCrossing {
                k: k.clone(),
                x: x.clone(),
                value: m,
            });
        }
    }

    let p0 = lead.recip()?;
    let mut out = vec![p0.clone()];
    if levels == 2 {
        let transport = compose_left(&p0, lead, 2)?.grading().unwrap()[1].clone();
        let inner = match q.terms().get(1) {
            Some(q1) => p0.times(q1)?.plus(&transport)?,
            None => transport,
        };
        let p1 = p0.times(&inner)?.scaled(-1.0).with_order(p0.order_m() - 1.0);
        out.push(p1);
    }
    SymbolSeries::new(out)
}

/// Time profile of the plasma frequency at a fixed point.
pub type Profile = Arc<dyn Fn(&Jet) -> Jet + Send + Sync>;

/// Cold unmagnetized plasma with time-varying `ω_pe(t)` at a fixed position.
#[derive(Clone)]
pub struct ColdPlasmaMedium {
    omega_pe: Profile,
    nu: f64,
    c: f64,
    position: [f64; 3],
}

impl std::fmt::Debug for ColdPlasmaMedium {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ColdPlasmaMedium")
            .field("nu", &self.nu)
            .field("c", &self.c)
            .field("position", &self.position)
            .finish_non_exhaustive()
    }
}

impl ColdPlasmaMedium {
    /// `omega_pe(t)` is evaluated on jets so its time derivatives are exact.
    pub fn new(
        omega_pe: impl Fn(&Jet) -> Jet + Send + Sync + 'static,
        nu: f64,
        c: f64,
    ) -> Result<ColdPlasmaMedium, ParametrixError> {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(ParametrixError::NonPositiveNu(nu));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(ParametrixError::BadLightSpeed(c));
        }
        Ok(ColdPlasmaMedium {
            omega_pe: Arc::new(omega_pe),
            nu,
            c,
            position: [0.0; 3],
        })
    }

    pub fn stationary(omega_pe: f64, nu: f64, c: f64) -> Result<ColdPlasmaMedium, ParametrixError> {
        ColdPlasmaMedium::new(move |t| Jet::constant(t.nvars(), t.order(), omega_pe), nu, c)
    }

    /// `ω_pe(t) = ω₀ (1 + ε t)`.
    pub fn linear_ramp(omega0: f64, eps: f64, nu: f64, c: f64) -> Result<ColdPlasmaMedium, ParametrixError> {
        ColdPlasmaMedium::new(move |t| (t * eps + 1.0) * omega0, nu, c)
    }

    pub fn at_position(mut self, r: [f64; 3]) -> Self {
        self.position = r;
        self
    }

    pub fn position(&self) -> [f64; 3] {
        self.position
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// `ω_pe` and `∂ω_pe/∂t` at time `t`.
    pub fn omega_pe(&self, t: f64) -> (f64, f64) {
        let j = (self.omega_pe)(&Jet::variable(1, 1, 0, t));
        (j.value().re, j.derivative(&[1]).re)
    }

    pub fn omega_pe_jet(&self, t: &Jet) -> Jet {
        (self.omega_pe)(t)
    }

    /// Phase-space point `(k, x) = (−ω/c, ct)`.
    pub fn phase_point(&self, omega: f64, t: f64) -> (Vec<f64>, Vec<f64>) {
        (vec![-omega / self.c], vec![self.c * t])
    }

    fn frequency(&self, k: &Jet) -> Jet {
        k * (-self.c)
    }

    fn time(&self, x: &Jet) -> Jet {
        x / self.c
    }

    /// `q = q₊₁ + q₀` with `q₊₁ = −4πi(ω + iν)/ω_pe²`, `q₀ = −4πν/ω_pe²`.
    pub fn ohm_symbol(&self) -> SymbolSeries {
        let nu = self.nu;
        let (m1, m0) = (self.clone(), self.clone());
        let q1 = ReducedSymbol::scalar(1, Form::LEFT, 1.0, move |k, x| {
            let w = m1.frequency(&k[0]) + Complex64::new(0.0, nu);
            let wp = m1.omega_pe_jet(&m1.time(&x[0]));
            w * Complex64::new(0.0, -4.0 * PI) / (&wp * &wp)
        });
        let q0 = ReducedSymbol::scalar(1, Form::LEFT, 0.0, move |_k, x| {
            let wp = m0.omega_pe_jet(&m0.time(&x[0]));
            (-4.0 * PI * nu) / (&wp * &wp)
        });
        SymbolSeries::new(vec![q1, q0]).expect("orders 1 and 0")
    }

    /// Probe points for the zero floor of `q₊₁` over a frequency window and
    /// time interval.
    pub fn probes(&self, omega: (f64, f64), t: (f64, f64), count: usize, seed: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
        let mut s = crate::symbols::ProbeSampler::new(seed);
        (0..count)
            .map(|_| {
                let w = s.uniform(omega.0, omega.1);
                let tt = s.uniform(t.0, t.1);
                self.phase_point(w, tt)
            })
            .collect()
    }
}

/// Symbol of `∂_t`, split as `q₊₁ = −i(ω + iν)` and `q₀ = −ν`.
pub fn time_derivative_symbol(nu: f64, c: f64) -> Result<SymbolSeries, ParametrixError> {
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(ParametrixError::NonPositiveNu(nu));
    }
    let q1 = ReducedSymbol::multiplier(1, 1, Form::LEFT, 1.0, move |k| {
        crate::symbols::SymMat::scalar((&k[0] * (-c) + Complex64::new(0.0, nu)) * Complex64::new(0.0, -1.0))
    });
    let q0 = ReducedSymbol::constant(1, Form::LEFT, -nu);
    Ok(SymbolSeries::new(vec![q1, q0])?)
}

/// Parametrix of `∂_t`: `i/(ω + iν) − ν/(ω + iν)² + ⋯`, truncated at `levels`.
pub fn time_derivative_parametrix(nu: f64, c: f64, levels: usize) -> Result<SymbolSeries, ParametrixError> {
    check_levels(levels)?;
    let q = time_derivative_symbol(nu, c)?;
    // q₊₁ has no zero for real ω when ν > 0; one probe satisfies the floor check.
    build_parametrix(&q, levels, &[(vec![-1.0 / c], vec![0.0])])
}

/// Left symbol of the conductivity operator, the parametrix of Ohm's law.
pub fn conductivity(
    m: &ColdPlasmaMedium,
    levels: usize,
    probes: &[(Vec<f64>, Vec<f64>)],
) -> Result<SymbolSeries, ParametrixError> {
    build_parametrix(&m.ohm_symbol(), levels, probes)
}

/// `ε = 1 + 4π T∘σ`, with `T` the parametrix of `∂_t` and `σ` the
/// conductivity, both kept to `levels` terms.
pub fn dielectric_symbol(m: &ColdPlasmaMedium, levels: usize) -> Result<ReducedSymbol, ParametrixError> {
    check_levels(levels)?;
    let probes = [(vec![-1.0 / m.c], vec![0.0])];
    let t = time_derivative_parametrix(m.nu, m.c, levels)?;
    let sigma = conductivity(m, levels, &probes)?;
    let prod = compose_left(&t.to_symbol(), &sigma.to_symbol(), levels)?;
    let parts = prod.grading().unwrap();
    let one = ReducedSymbol::constant(1, Form::LEFT, 1.0);
    let mut comps = vec![one.plus(&parts[0].scaled(4.0 * PI))?.with_order(0.0)];
    for p in &parts[1..] {
        comps.push(p.scaled(4.0 * PI));
    }
    Ok(ReducedSymbol::graded(comps))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn constant_symbol_inverts_exactly() {
        let alpha = Complex64::new(2.0, -0.5);
        let q = SymbolSeries::new(vec![ReducedSymbol::constant(1, Form::LEFT, alpha)]).unwrap();
        let p = build_parametrix(&q, 2, &[(vec![0.3], vec![0.1])]).unwrap();
        let v0 = p.terms()[0].eval_scalar(&[0.7], &[-2.0]).unwrap();
        let v1 = p.terms()[1].eval_scalar(&[0.7], &[-2.0]).unwrap();
        assert!(rel(v0, 1.0 / alpha) < 1e-15);
        assert_eq!(v1, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn time_derivative_series() {
        let (nu, c) = (0.05, 1.0);
        let p = time_derivative_parametrix(nu, c, 2).unwrap();
        let w = 1.7;
        let z = Complex64::new(w, nu);
        let k = [-w / c];
        let v0 = p.terms()[0].eval_scalar(&k, &[0.0]).unwrap();
        let v1 = p.terms()[1].eval_scalar(&k, &[0.0]).unwrap();
        assert!(rel(v0, Complex64::i() / z) < 1e-14);
        assert!(rel(v1, -nu / (z * z)) < 1e-14);
    }

    #[test]
    fn zero_crossing_is_rejected() {
        let q = SymbolSeries::new(vec![ReducedSymbol::scalar(1, Form::LEFT, 1.0, |k, _| k[0].clone())]).unwrap();
        let err = build_parametrix(&q, 1, &[(vec![1.0], vec![0.0]), (vec![0.0], vec![0.0])]).unwrap_err();
        assert!(matches!(err, ParametrixError::ZeroCrossing { .. }));
        assert_eq!(build_parametrix(&q, 3, &[(vec![1.0], vec![0.0])]).unwrap_err(), ParametrixError::Levels(3));
    }

    #[test]
    fn adiabatic_dielectric() {
        let m = ColdPlasmaMedium::linear_ramp(1.0, 0.1, 1e-3, 1.0).unwrap();
        let eps = dielectric_symbol(&m, 1).unwrap();
        let (w, t) = (3.0, 0.4);
        let (k, x) = m.phase_point(w, t);
        let wp = 1.0 + 0.1 * t;
        let z = Complex64::new(w, 1e-3);
        let expect = 1.0 - wp * wp / (z * z);
        assert!(rel(eps.eval_scalar(&k, &x).unwrap(), expect) < 1e-14);
    }
}
