//! Hamiltonian `D(k, x)`, polarization `e(k, x)` and absorption from a
//! (possibly matrix-valued) symbol.

use num_complex::Complex64;
use thiserror::Error;

use crate::jet::Jet;
use crate::linalg::hermitian_eigen;
use crate::medium::RefractiveIndex;
use crate::symbols::{hermitian_split, Form, ReducedSymbol, SymMat, SymbolError, TwoPointSymbol};

/// Relative eigenvalue gap below which a mode is declared degenerate.
pub const DEGENERACY_TOL: f64 = 1e-8;

/// Relative floor on `|∂D/∂ω|` for group velocities.
pub const STATIONARY_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DispersionError {
    #[error(transparent)]
    Symbol(#[from] SymbolError),
    #[error("branch {branch} selected from a {n}x{n} symbol")]
    Branch { branch: usize, n: usize },
    #[error("eigenvalue {value} is degenerate with a neighbor (gap {gap:e}) at k = {k:?}, x = {x:?}")]
    Degenerate { value: f64, gap: f64, k: Vec<f64>, x: Vec<f64> },
    #[error("∂D/∂ω vanishes (|D_ω| = {0:e}); group velocity undefined")]
    Stationary(f64),
    #[error("intrinsic absorption needs a symbol graded into d0 and d1")]
    GradingMissing,
    #[error("group velocity needs at least one spatial and one time coordinate")]
    NoTimeAxis,
}

/// Eigenvalue `branch` (ascending) of the Hermitian symbol `d_h` at `(k, x)`
/// and its unit eigenvector, largest component real-positive.
pub fn eigen_mode(
    d_h: &ReducedSymbol,
    k: &[f64],
    x: &[f64],
    branch: usize,
) -> Result<(f64, Vec<Complex64>), DispersionError> {
    let n = d_h.mat();
    if branch >= n {
        return Err(DispersionError::Branch { branch, n });
    }
    let h = d_h.eval(k, x)?;
    let eig = hermitian_eigen(&h, n);
    check_gap(&eig.values, &h, branch, k, x)?;
    Ok((eig.values[branch], eig.vectors[branch].clone()))
}

fn check_gap(values: &[f64], h: &[Complex64], branch: usize, k: &[f64], x: &[f64]) -> Result<(), DispersionError> {
    let scale = h.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    let v = values[branch];
    let gap = values
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != branch)
        .map(|(_, w)| (w - v).abs())
        .fold(f64::INFINITY, f64::min);
    if gap <= DEGENERACY_TOL * scale {
        return Err(DispersionError::Degenerate {
            value: v,
            gap,
            k: k.to_vec(),
            x: x.to_vec(),
        });
    }
    Ok(())
}

/// Hamiltonian with derivatives to second order at one phase-space point.
///
/// Gradients and the Hessian use the variable order `(k_1..k_N, x_1..x_N)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeEval {
    pub d: f64,
    pub e: Vec<Complex64>,
    pub grad_k: Vec<f64>,
    pub grad_x: Vec<f64>,
    /// `2N × 2N`, row-major.
    pub hess: Vec<f64>,
}

impl ModeEval {
    pub fn dim(&self) -> usize {
        self.grad_k.len()
    }

    pub fn hess_at(&self, a: usize, b: usize) -> f64 {
        self.hess[a * 2 * self.dim() + b]
    }
}

/// Dispersion data of one mode of a wave operator.
#[derive(Clone, Debug)]
pub struct DispersionModel {
    symbol: ReducedSymbol,
    tensor: ReducedSymbol,
    anti: ReducedSymbol,
    branch: usize,
    c: f64,
}

impl DispersionModel {
    /// `symbol` may be graded; its principal part defines `D` and `e`.
    pub fn new(symbol: ReducedSymbol, branch: usize) -> Result<DispersionModel, DispersionError> {
        if branch >= symbol.mat() {
            return Err(DispersionError::Branch {
                branch,
                n: symbol.mat(),
            });
        }
        let (tensor, _) = hermitian_split(symbol.principal());
        let (_, anti) = hermitian_split(&symbol);
        Ok(DispersionModel {
            symbol,
            tensor,
            anti,
            branch,
            c: 1.0,
        })
    }

    /// Scalar real Hamiltonian given on jets, Weyl form.
    pub fn scalar<F>(dim: usize, f: F) -> DispersionModel
    where
        F: Fn(&[Jet], &[Jet]) -> Jet + Send + Sync + 'static,
    {
        DispersionModel::new(ReducedSymbol::scalar(dim, Form::WEYL, 2.0, f), 0).unwrap()
    }

    /// `D(k, ω) = −ω² n²(ω)/c² + k²` in space-time variables `(k, −ω/c)`,
    /// `(x, ct)` with `c = 1`.
    pub fn transverse_wave(medium: RefractiveIndex) -> DispersionModel {
        DispersionModel::scalar(2, move |k, _x| {
            let omega = -&k[1];
            let n2 = medium.n2_jet(&omega);
            &k[0] * &k[0] - &(&omega * &omega) * &n2
        })
    }

    pub fn with_light_speed(mut self, c: f64) -> Self {
        self.c = c;
        self
    }

    pub fn symbol(&self) -> &ReducedSymbol {
        &self.symbol
    }

    /// Hermitian part of the principal symbol (the dispersion tensor).
    pub fn tensor(&self) -> &ReducedSymbol {
        &self.tensor
    }

    pub fn dim(&self) -> usize {
        self.symbol.dim()
    }

    pub fn branch(&self) -> usize {
        self.branch
    }

    pub fn form(&self) -> Form {
        self.symbol.form()
    }

    pub fn eigen_mode(&self, k: &[f64], x: &[f64]) -> Result<(f64, Vec<Complex64>), DispersionError> {
        eigen_mode(&self.tensor, k, x, self.branch)
    }

    pub fn hamiltonian(&self, k: &[f64], x: &[f64]) -> Result<f64, DispersionError> {
        Ok(self.eigen_mode(k, x)?.0)
    }

    /// `D`, `e`, gradient and Hessian at `(k, x)`.
    pub fn evaluate(&self, k: &[f64], x: &[f64]) -> Result<ModeEval, DispersionError> {
        let nn = 2 * self.dim();
        let t = self.tensor.taylor(k, x, 2)?;
        if t.n() == 1 {
            return Ok(scalar_eval(&t.into_scalar(), nn));
        }
        self.matrix_eval(&t, k, x)
    }

    fn matrix_eval(&self, t: &SymMat, k: &[f64], x: &[f64]) -> Result<ModeEval, DispersionError> {
        let n = t.n();
        let nn = 2 * self.dim();
        let h0 = t.values();
        let eig = hermitian_eigen(&h0, n);
        check_gap(&eig.values, &h0, self.branch, k, x)?;
        let b = self.branch;
        let e = &eig.vectors[b];
        let idx = |a: usize, c: Option<usize>| {
            let mut beta = vec![0u8; nn];
            beta[a] += 1;
            if let Some(c) = c {
                beta[c] += 1;
            }
            beta
        };
        let deriv_mat = |beta: &[u8]| -> Vec<Complex64> {
            t.entries().iter().map(|j| j.derivative(beta)).collect()
        };
        let sandwich = |u: &[Complex64], m: &[Complex64], v: &[Complex64]| -> Complex64 {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..n {
                for j in 0..n {
                    acc += u[i].conj() * m[i * n + j] * v[j];
                }
            }
            acc
        };
        let firsts: Vec<Vec<Complex64>> = (0..nn).map(|a| deriv_mat(&idx(a, None))).collect();
        let grad: Vec<f64> = firsts.iter().map(|m| sandwich(e, m, e).re).collect();
        // Couplings of the selected mode to the others through each first derivative.
        let coupling: Vec<Vec<Complex64>> = firsts
            .iter()
            .map(|m| (0..n).map(|o| sandwich(e, m, &eig.vectors[o])).collect())
            .collect();
        let mut hess = vec![0.0; nn * nn];
        for a in 0..nn {
            for c in a..nn {
                let second = deriv_mat(&idx(a, Some(c)));
                let mut v = sandwich(e, &second, e).re;
                for o in (0..n).filter(|&o| o != b) {
                    let denom = eig.values[b] - eig.values[o];
                    v += 2.0 * (coupling[a][o] * coupling[c][o].conj()).re / denom;
                }
                hess[a * nn + c] = v;
                hess[c * nn + a] = v;
            }
        }
        let dim = self.dim();
        Ok(ModeEval {
            d: eig.values[b],
            e: e.clone(),
            grad_k: grad[..dim].to_vec(),
            grad_x: grad[dim..].to_vec(),
            hess,
        })
    }

    /// `γ_A` in the form of the model's symbol.
    pub fn gamma(&self, k: &[f64], x: &[f64]) -> Result<f64, DispersionError> {
        let (_, e) = self.eigen_mode(k, x)?;
        absorption_reduced(&self.symbol, &self.tensor, &self.anti, &e, k, x)
    }

    /// Spatial group velocity `v_g^i = c D_{k_i}/D_{k_t}`, taking the last
    /// coordinate pair as `(−ω/c, ct)`.
    pub fn group_velocity(&self, k: &[f64], x: &[f64]) -> Result<Vec<f64>, DispersionError> {
        group_velocity(self, k, x)
    }
}

fn scalar_eval(j: &Jet, nn: usize) -> ModeEval {
    let dim = nn / 2;
    let mut beta = vec![0u8; nn];
    let mut grad = vec![0.0; nn];
    for (a, g) in grad.iter_mut().enumerate() {
        beta[a] = 1;
        *g = j.derivative(&beta).re;
        beta[a] = 0;
    }
    let mut hess = vec![0.0; nn * nn];
    for a in 0..nn {
        for c in a..nn {
            beta[a] += 1;
            beta[c] += 1;
            let v = j.derivative(&beta).re;
            beta[a] = 0;
            beta[c] = 0;
            hess[a * nn + c] = v;
            hess[c * nn + a] = v;
        }
    }
    ModeEval {
        d: j.value().re,
        e: vec![Complex64::new(1.0, 0.0)],
        grad_k: grad[..dim].to_vec(),
        grad_x: grad[dim..].to_vec(),
        hess,
    }
}

pub fn group_velocity(model: &DispersionModel, k: &[f64], x: &[f64]) -> Result<Vec<f64>, DispersionError> {
    let dim = model.dim();
    if dim < 2 {
        return Err(DispersionError::NoTimeAxis);
    }
    let ev = model.evaluate(k, x)?;
    let dt = ev.grad_k[dim - 1];
    let norm = ev.grad_k.iter().map(|v| v * v).sum::<f64>().sqrt();
    if dt.abs() <= STATIONARY_FLOOR * norm || dt == 0.0 {
        return Err(DispersionError::Stationary(dt.abs() / model.c));
    }
    Ok(ev.grad_k[..dim - 1].iter().map(|g| model.c * g / dt).collect())
}

fn contract(e: &[Complex64], m: &[Complex64]) -> f64 {
    let n = e.len();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += e[i].conj() * m[i * n + j] * e[j];
        }
    }
    acc.re
}

fn herm(m: Vec<Complex64>, n: usize) -> Vec<Complex64> {
    (0..n * n)
        .map(|idx| {
            let (i, j) = (idx / n, idx % n);
            (m[i * n + j] + m[j * n + i].conj()) * 0.5
        })
        .collect()
}

/// `Σ_i ∂²T/∂k_i∂x_i` for a reduced symbol at `(k, x)`.
fn mixed_trace(t: &ReducedSymbol, k: &[f64], x: &[f64]) -> Result<Vec<Complex64>, SymbolError> {
    let dim = t.dim();
    let tay = t.taylor(k, x, 2)?;
    let mut acc = vec![Complex64::new(0.0, 0.0); t.mat() * t.mat()];
    for i in 0..dim {
        let mut beta = vec![0u8; 2 * dim];
        beta[i] = 1;
        beta[dim + i] = 1;
        for (a, j) in acc.iter_mut().zip(tay.entries()) {
            *a += j.derivative(&beta);
        }
    }
    Ok(acc)
}

fn absorption_reduced(
    symbol: &ReducedSymbol,
    tensor: &ReducedSymbol,
    anti: &ReducedSymbol,
    e: &[Complex64],
    k: &[f64],
    x: &[f64],
) -> Result<f64, DispersionError> {
    let p = symbol.form().p;
    let d_a = anti.eval(k, x)?;
    let mut gamma = contract(e, &d_a);
    if p != 0.5 {
        let mixed = herm(mixed_trace(tensor, k, x)?, symbol.mat());
        gamma -= (p - 0.5) * contract(e, &mixed);
    }
    Ok(gamma)
}

/// Where the absorption coefficient is computed from.
#[derive(Clone, Copy, Debug)]
pub enum AbsorptionSource<'a> {
    /// `(q, p)` reduced symbol:
    /// `e*[d_A − (p − ½) Σ ∂²D/∂k_i∂x_i] e`, with `D` the Hermitian part of
    /// the principal component (or of the whole symbol when ungraded).
    Reduced(&'a ReducedSymbol),
    /// Graded two-point symbol:
    /// `e*[d_{1,A} + ½ Σ (∂²d₀/∂k_i∂x_i − ∂²d₀/∂k_i∂x'_i)] e` on the diagonal.
    Intrinsic(&'a TwoPointSymbol),
}

pub fn absorption_coefficient(
    src: AbsorptionSource<'_>,
    e: &[Complex64],
    k: &[f64],
    x: &[f64],
) -> Result<f64, DispersionError> {
    match src {
        AbsorptionSource::Reduced(d) => {
            let (tensor, _) = hermitian_split(d.principal());
            let (_, anti) = hermitian_split(d);
            absorption_reduced(d, &tensor, &anti, e, k, x)
        }
        AbsorptionSource::Intrinsic(d) => {
            let parts = d.grading().filter(|g| g.len() >= 2).ok_or(DispersionError::GradingMissing)?;
            let n = d.mat();
            let dim = d.dim();
            let d1 = parts[1].eval(k, x, x)?;
            let anti: Vec<Complex64> = (0..n * n)
                .map(|idx| {
                    let (i, j) = (idx / n, idx % n);
                    (d1[i * n + j] - d1[j * n + i].conj()) / Complex64::new(0.0, 2.0)
                })
                .collect();
            let tay = parts[0].taylor(k, x, x, 2)?;
            let mut mixed = vec![Complex64::new(0.0, 0.0); n * n];
            for i in 0..dim {
                let mut bx = vec![0u8; 3 * dim];
                bx[i] = 1;
                bx[dim + i] = 1;
                let mut bxp = vec![0u8; 3 * dim];
                bxp[i] = 1;
                bxp[2 * dim + i] = 1;
                for (a, j) in mixed.iter_mut().zip(tay.entries()) {
                    *a += (j.derivative(&bx) - j.derivative(&bxp)) * 0.5;
                }
            }
            Ok(contract(e, &anti) + contract(e, &herm(mixed, n)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn scalar_and_diagonal_modes() {
        let s = ReducedSymbol::scalar(1, Form::WEYL, 2.0, |k, x| &k[0] * &k[0] - &x[0]);
        let (d, e) = eigen_mode(&s, &[2.0], &[1.0], 0).unwrap();
        assert_eq!(d, 3.0);
        assert_eq!(e, vec![c(1.0, 0.0)]);
        let m = ReducedSymbol::analytic(1, 2, Form::WEYL, 0.0, |k, _| {
            let z = Jet::zero(k[0].nvars(), k[0].order());
            SymMat::from_entries(2, vec![k[0].clone(), z.clone(), z, &k[0] + 1.0])
        });
        let (d, e) = eigen_mode(&m, &[0.5], &[0.0], 0).unwrap();
        assert_eq!(d, 0.5);
        assert_eq!(e, vec![c(1.0, 0.0), c(0.0, 0.0)]);
        assert!(matches!(eigen_mode(&m, &[0.5], &[0.0], 2), Err(DispersionError::Branch { .. })));
    }

    #[test]
    fn degeneracy_is_an_error() {
        let m = ReducedSymbol::analytic(1, 2, Form::WEYL, 0.0, |k, _| {
            let z = Jet::zero(k[0].nvars(), k[0].order());
            SymMat::from_entries(2, vec![k[0].clone(), z.clone(), z, k[0].clone()])
        });
        assert!(matches!(eigen_mode(&m, &[1.0], &[0.0], 0), Err(DispersionError::Degenerate { .. })));
    }

    #[test]
    fn matrix_derivatives_match_finite_differences() {
        let sym = ReducedSymbol::analytic(1, 2, Form::WEYL, 2.0, |k, x| {
            let off = &k[0] * &x[0].sin() * 0.3;
            SymMat::from_entries(
                2,
                vec![&k[0] * &k[0], off.clone(), off, &x[0] * &x[0] + 2.0],
            )
        });
        let model = DispersionModel::new(sym, 1).unwrap();
        let (k, x) = (0.7, 0.4);
        let ev = model.evaluate(&[k], &[x]).unwrap();
        let d = |k: f64, x: f64| model.hamiltonian(&[k], &[x]).unwrap();
        let h = 1e-4;
        let dk = (d(k + h, x) - d(k - h, x)) / (2.0 * h);
        let dx = (d(k, x + h) - d(k, x - h)) / (2.0 * h);
        let dkx = (d(k + h, x + h) - d(k + h, x - h) - d(k - h, x + h) + d(k - h, x - h)) / (4.0 * h * h);
        let dkk = (d(k + h, x) - 2.0 * d(k, x) + d(k - h, x)) / (h * h);
        assert!((ev.grad_k[0] - dk).abs() < 1e-7);
        assert!((ev.grad_x[0] - dx).abs() < 1e-7);
        assert!((ev.hess_at(0, 1) - dkx).abs() < 1e-5);
        assert!((ev.hess_at(0, 0) - dkk).abs() < 1e-5);
    }

    #[test]
    fn vacuum_group_velocity() {
        let model = DispersionModel::transverse_wave(RefractiveIndex::Vacuum);
        let v = model.group_velocity(&[1.3, -1.3], &[0.0, 0.0]).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cold_plasma_group_velocity() {
        let model = DispersionModel::transverse_wave(RefractiveIndex::cold_plasma(1.0).unwrap());
        let w = 2.0f64.sqrt();
        assert!(model.hamiltonian(&[1.0, -w], &[0.0, 0.0]).unwrap().abs() < 1e-15);
        let v = model.group_velocity(&[1.0, -w], &[0.0, 0.0]).unwrap();
        assert!((v[0] - 1.0 / w).abs() < 1e-15);
    }

    #[test]
    fn hermitian_symbol_has_no_absorption() {
        let s = ReducedSymbol::scalar(1, Form::LEFT, 2.0, |k, _| &k[0] * &k[0]);
        for form in [Form::LEFT, Form::WEYL, Form::RIGHT] {
            let s = crate::symbols::convert_form(&s, form, 2).unwrap();
            let g = absorption_coefficient(AbsorptionSource::Reduced(&s), &[c(1.0, 0.0)], &[0.3], &[0.2]).unwrap();
            assert_eq!(g, 0.0);
        }
        let w = ReducedSymbol::scalar(1, Form::WEYL, 0.0, |k, _| &k[0] * 0.0 + Complex64::new(0.0, 0.25));
        let g = absorption_coefficient(AbsorptionSource::Reduced(&w), &[c(1.0, 0.0)], &[0.3], &[0.2]).unwrap();
        assert_eq!(g, 0.25);
    }

    #[test]
    fn intrinsic_path_needs_grading() {
        let d = TwoPointSymbol::scalar(1, 1.0, 1.0, |k, x, _| &k[0] * &x[0]);
        assert_eq!(
            absorption_coefficient(AbsorptionSource::Intrinsic(&d), &[c(1.0, 0.0)], &[0.0], &[0.0]).unwrap_err(),
            DispersionError::GradingMissing
        );
    }
}
