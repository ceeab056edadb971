//! Lazily evaluated symbol expressions.
//!
//! Every symbol is backed by a [`TaylorSource`]: given a base point and an
//! order it returns the truncated Taylor expansion of the (matrix) symbol in
//! all of its variables. Composite nodes ask their children for expansions of
//! higher order and differentiate them exactly.

use std::sync::Arc;

use num_complex::Complex64;

use super::matrix::SymMat;
use super::{Form, SymbolError};
use crate::jet::{multi_factorial, Jet};

pub(crate) type Source = Arc<dyn TaylorSource>;

pub(crate) trait TaylorSource: Send + Sync {
    fn taylor(&self, point: &[f64], order: usize) -> Result<SymMat, SymbolError>;

    /// Highest derivative order the source can supply; `None` means unlimited.
    fn max_order(&self) -> Option<usize> {
        None
    }
}

fn check_order(src: &dyn TaylorSource, order: usize) -> Result<(), SymbolError> {
    match src.max_order() {
        Some(avail) if order > avail => Err(SymbolError::MissingDerivative {
            required: order,
            available: avail,
        }),
        _ => Ok(()),
    }
}

pub(crate) fn sub_order(a: Option<usize>, need: usize) -> Option<usize> {
    a.map(|m| m.saturating_sub(need))
}

pub(crate) fn min_order(a: Option<usize>, b: Option<usize>) -> Option<usize> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (Some(x), None) | (None, Some(x)) => Some(x),
        (None, None) => None,
    }
}

/// All multi-indices of length `n` with total degree `total`.
pub(crate) fn multi_indices(n: usize, total: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; n];
    fn rec(i: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let n = cur.len();
        if i == n - 1 {
            cur[i] = left;
            out.push(cur.clone());
            return;
        }
        for e in (0..=left).rev() {
            cur[i] = e;
            rec(i + 1, left - e, cur, out);
        }
        cur[i] = 0;
    }
    if n == 0 {
        return out;
    }
    rec(0, total, &mut cur, &mut out);
    out
}

fn alpha_factorial(alpha: &[usize]) -> f64 {
    let b: Vec<u8> = alpha.iter().map(|&a| a as u8).collect();
    multi_factorial(&b)
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Closure on jets, exact derivatives of any order.
pub(crate) struct FnSource {
    pub f: Arc<dyn Fn(&[Jet]) -> SymMat + Send + Sync>,
}

impl TaylorSource for FnSource {
    fn taylor(&self, point: &[f64], order: usize) -> Result<SymMat, SymbolError> {
        let seeds = Jet::seeds(point, order);
        let m = (self.f)(&seeds);
        Ok(m.truncate(order))
    }
}

/// Plain closure on real coordinates; derivatives by central differences.
pub(crate) struct SampledSource {
    pub n: usize,
    pub max_order: usize,
    pub f: Arc<dyn Fn(&[f64]) -> Vec<Complex64> + Send + Sync>,
}

impl SampledSource {
    fn derivative(&self, point: &[f64], beta: &[u8]) -> Vec<Complex64> {
        let deg: usize = beta.iter().map(|&b| b as usize).sum();
        let nn = self.n * self.n;
        if deg == 0 {
            return (self.f)(point);
        }
        let base = f64::EPSILON.powf(1.0 / (deg as f64 + 2.0));
        let steps: Vec<f64> = point.iter().map(|&c| base * c.abs().max(1.0)).collect();
        let active: Vec<usize> = (0..point.len()).filter(|&v| beta[v] > 0).collect();
        let mut acc = vec![Complex64::new(0.0, 0.0); nn];
        let mut counters = vec![0usize; active.len()];
        let mut probe = point.to_vec();
        loop {
            let mut weight = 1.0;
            for (slot, &v) in active.iter().enumerate() {
                let b = beta[v] as usize;
                let j = counters[slot];
                let h = steps[v];
                probe[v] = point[v] + (b as f64 / 2.0 - j as f64) * h;
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                weight *= sign * binom(b, j) / h.powi(b as i32);
            }
            let vals = (self.f)(&probe);
            for (a, v) in acc.iter_mut().zip(vals.iter()) {
                *a += v * weight;
            }
            let mut slot = 0;
            loop {
                if slot == active.len() {
                    return acc;
                }
                counters[slot] += 1;
                if counters[slot] <= beta[active[slot]] as usize {
                    break;
                }
                counters[slot] = 0;
                slot += 1;
            }
        }
    }
}

impl TaylorSource for SampledSource {
    fn taylor(&self, point: &[f64], order: usize) -> Result<SymMat, SymbolError> {
        check_order(self, order)?;
        let nvars = point.len();
        let template = Jet::zero(nvars, order);
        let exps = template.exponents().to_vec();
        let nn = self.n * self.n;
        let mut coeffs = vec![vec![Complex64::new(0.0, 0.0); exps.len()]; nn];
        for (i, beta) in exps.iter().enumerate() {
            let d = self.derivative(point, beta);
            let fact = multi_factorial(beta);
            for e in 0..nn {
                coeffs[e][i] = d[e] / fact;
            }
        }
        let entries = coeffs
            .into_iter()
            .map(|c| Jet::from_coeffs(nvars, order, c))
            .collect();
        Ok(SymMat::from_entries(self.n, entries))
    }

    fn max_order(&self) -> Option<usize> {
        Some(self.max_order)
    }
}

pub(crate) struct ConstSource {
    pub n: usize,
    pub values: Vec<Complex64>,
}

impl TaylorSource for ConstSource {
    fn taylor(&self, point: &[f64], order: usize) -> Result<SymMat, SymbolError> {
        let entries = self
            .values
            .iter()
            .map(|&v| Jet::constant(point.len(), order, v))
            .collect();
        Ok(SymMat::from_entries(self.n, entries))
    }
}

pub(crate) struct SumSource {
    pub terms: Vec<Source>,
}

impl TaylorSource for SumSource {
    fn taylor(&self, point: &[f64], order: usize) -> Result<SymMat, SymbolError> {
        let mut acc = self.terms[0].taylor(point, order)?;
        for t in &self.terms[1..] {
            acc = acc.add(&t.taylor(point, order)?);
        }
        Ok(acc)
    }

    fn max_order(&self) -> Option<usize> {
        self.terms
            .iter()
            .fold(None, |acc, t| min_order(acc, t.max_order()))
    }
}

/// Pointwise (matrix) product `a(k,x)·b(k,x)`.
pub(crate) struct ProductSource {
    pub a: Source,
    pub b: Source,
}

impl TaylorSource for ProductSource {
    fn taylor(&self, point: &[f64], order: usize) -> Result<SymMat, SymbolError> {
        Ok(self
            .a
            .taylor(point, order)?
            .matmul(&self.b.taylor(point, order)?))
    }

    fn max_order(&self) -> Option<usize> {
        min_order(self.a.max_order(), self.b.max_order())
    }
}

pub(crate) struct ScaleSource {
    pub a: Source,
    pub s: Complex64,
}

impl TaylorSource for ScaleSource {
    fn taylor(&self, point: &[f64], order: usize) -> Result<SymMat, SymbolError> {
        Ok(self.a.taylor(point, order)?.scale(self.s))
    }

    fn max_order(&self) -> Option<usize> {
        self.a.max_order()
    }
}

pub(crate) struct AdjointSource {
    pub a: Source,
}

impl TaylorSource for AdjointSource {
    fn taylor(&self, point: &[f64], order: usize) -> Result<SymMat, SymbolError> {
        Ok(self.a.taylor(point, order)?.adjoint())
    }

    fn max_order(&self) -> Option<usize> {
        self.a.max_order()
    }
}

/// Scalar function applied to a scalar symbol.
pub(crate) struct MapSource {
    pub a: Source,
    pub f: Arc<dyn Fn(&Jet) -> Jet + Send + Sync>,
}

impl TaylorSource for MapSource {
    fn taylor(&self, point: &[f64], order: usize) -> Result<SymMat, SymbolError> {
        let m = self.a.taylor(point, order)?;
        if m.n() != 1 {
            return Err(SymbolError::NotScalar);
        }
        Ok(SymMat::scalar((self.f)(&m.into_scalar())))
    }

    fn max_order(&self) -> Option<usize> {
        self.a.max_order()
    }
}

/// ℓ-th term of the `(q,p)` reduction of a two-point symbol:
/// `Σ_{|α|=ℓ} i^ℓ/α! ∂_k^α ∂_s^α d(k, r + p s, r − q s)|_{s=0}`.
pub(crate) struct ReductionTerm {
    pub src: Source,
    pub dim: usize,
    pub form: Form,
    pub ell: usize,
}

impl TaylorSource for ReductionTerm {
    fn taylor(&self, point: &[f64], order: usize) -> Result<SymMat, SymbolError> {
        let n = self.dim;
        let need = order + 2 * self.ell;
        check_order(self.src.as_ref(), need)?;
        let mut full = Vec::with_capacity(3 * n);
        full.extend_from_slice(&point[..n]);
        full.extend_from_slice(&point[n..2 * n]);
        full.extend_from_slice(&point[n..2 * n]);
        let expansion = self.src.taylor(&full, need)?;
        let size = expansion.n();
        let mut acc = SymMat::zeros(size, 3 * n, order);
        let (q, p) = (self.form.q, self.form.p);
        let i_pow = Complex64::new(0.0, 1.0).powu(self.ell as u32);
        for alpha in multi_indices(n, self.ell) {
            let coef = i_pow / alpha_factorial(&alpha);
            // (p ∂_x − q ∂_x')^α expanded binomially per dimension.
            let splits: Vec<Vec<usize>> = alpha.iter().map(|&a| (0..=a).collect()).collect();
            let mut choice = vec![0usize; n];
            loop {
                let mut weight = coef;
                let mut beta = vec![0usize; 3 * n];
                for d in 0..n {
                    let a = alpha[d];
                    let j = splits[d][choice[d]];
                    weight *= binom(a, j) * p.powi(j as i32) * (-q).powi((a - j) as i32);
                    beta[d] = a;
                    beta[n + d] = j;
                    beta[2 * n + d] = a - j;
                }
                if weight != Complex64::new(0.0, 0.0) {
                    acc = acc.add(&expansion.diff_multi(&beta).scale(weight));
                }
                let mut d = 0;
                loop {
                    if d == n {
                        break;
                    }
                    choice[d] += 1;
                    if choice[d] <= alpha[d] {
                        break;
                    }
                    choice[d] = 0;
                    d += 1;
                }
                if d == n {
                    break;
                }
            }
        }
        let map: Vec<usize> = (0..n).chain(n..2 * n).chain(n..2 * n).collect();
        Ok(acc.map(|j| j.merge_vars(&map, 2 * n)))
    }

    fn max_order(&self) -> Option<usize> {
        sub_order(self.src.max_order(), 2 * self.ell)
    }
}

/// Two-point symbol `a(k, q x + p x')` built from a reduced symbol.
pub(crate) struct PullbackSource {
    pub src: Source,
    pub dim: usize,
    pub form: Form,
}

impl TaylorSource for PullbackSource {
    fn taylor(&self, point: &[f64], order: usize) -> Result<SymMat, SymbolError> {
        let n = self.dim;
        let (q, p) = (self.form.q, self.form.p);
        let mut reduced = point[..n].to_vec();
        for d in 0..n {
            reduced.push(q * point[n + d] + p * point[2 * n + d]);
        }
        let expansion = self.src.taylor(&reduced, order)?;
        let seeds = Jet::seeds(point, order);
        let mut inputs: Vec<Jet> = seeds[..n].to_vec();
        for d in 0..n {
            inputs.push(&seeds[n + d] * q + &seeds[2 * n + d] * p);
        }
        Ok(expansion.map(|j| j.substitute(&inputs)))
    }

    fn max_order(&self) -> Option<usize> {
        self.src.max_order()
    }
}

/// ℓ-th term of the left product rule: `Σ_{|α|=ℓ} (−i)^ℓ/α! ∂_k^α a ∂_x^α b`.
pub(crate) struct LeftTerm {
    pub a: Source,
    pub b: Source,
    pub dim: usize,
    pub ell: usize,
}

impl TaylorSource for LeftTerm {
    fn taylor(&self, point: &[f64], order: usize) -> Result<SymMat, SymbolError> {
        let n = self.dim;
        let need = order + self.ell;
        check_order(self, order)?;
        let a = self.a.taylor(point, need)?;
        let b = self.b.taylor(point, need)?;
        let mut acc = SymMat::zeros(a.n(), 2 * n, order);
        let phase = Complex64::new(0.0, -1.0).powu(self.ell as u32);
        for alpha in multi_indices(n, self.ell) {
            let mut ak = vec![0usize; 2 * n];
            let mut bx = vec![0usize; 2 * n];
            ak[..n].copy_from_slice(&alpha);
            bx[n..].copy_from_slice(&alpha);
            let term = a.diff_multi(&ak).matmul(&b.diff_multi(&bx));
            acc = acc.add(&term.scale(phase / alpha_factorial(&alpha)));
        }
        Ok(acc)
    }

    fn max_order(&self) -> Option<usize> {
        sub_order(min_order(self.a.max_order(), self.b.max_order()), self.ell)
    }
}

/// `Σ_i ∂_{x_i} a ∂_{k_i} b − ∂_{k_i} a ∂_{x_i} b` (matrix order kept: `a` on
/// the left). For scalars this is the Poisson bracket `{a, b}`.
pub(crate) struct BracketSource {
    pub a: Source,
    pub b: Source,
    pub dim: usize,
}

impl TaylorSource for BracketSource {
    fn taylor(&self, point: &[f64], order: usize) -> Result<SymMat, SymbolError> {
        let n = self.dim;
        check_order(self, order)?;
        let a = self.a.taylor(point, order + 1)?;
        let b = self.b.taylor(point, order + 1)?;
        let mut acc = SymMat::zeros(a.n(), 2 * n, order);
        for i in 0..n {
            let xa = a.diff(n + i);
            let kb = b.diff(i);
            let ka = a.diff(i);
            let xb = b.diff(n + i);
            acc = acc.add(&xa.matmul(&kb)).sub(&ka.matmul(&xb));
        }
        Ok(acc)
    }

    fn max_order(&self) -> Option<usize> {
        sub_order(min_order(self.a.max_order(), self.b.max_order()), 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multi_index_enumeration() {
        assert_eq!(multi_indices(2, 2).len(), 3);
        assert_eq!(multi_indices(3, 2).len(), 6);
        assert_eq!(multi_indices(1, 4), vec![vec![4]]);
        assert_eq!(multi_indices(2, 0), vec![vec![0, 0]]);
    }

    #[test]
    fn sampled_source_first_and_second_derivatives() {
        let src = SampledSource {
            n: 1,
            max_order: 2,
            f: Arc::new(|v: &[f64]| vec![Complex64::new(v[0].sin() * v[1].exp(), 0.0)]),
        };
        let t = src.taylor(&[0.4, 0.2], 2).unwrap().into_scalar();
        let exact_k = 0.4f64.cos() * 0.2f64.exp();
        let exact_kx = exact_k;
        let exact_kk = -(0.4f64.sin()) * 0.2f64.exp();
        assert!((t.derivative(&[1, 0]).re - exact_k).abs() < 1e-6 * exact_k.abs());
        assert!((t.derivative(&[1, 1]).re - exact_kx).abs() < 1e-5 * exact_kx.abs());
        assert!((t.derivative(&[2, 0]).re - exact_kk).abs() < 1e-5 * exact_kk.abs());
        assert!(matches!(
            src.taylor(&[0.4, 0.2], 3),
            Err(SymbolError::MissingDerivative { required: 3, available: 2 })
        ));
    }
}
