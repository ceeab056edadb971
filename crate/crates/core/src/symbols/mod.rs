//! Phase-space symbols of pseudodifferential operators and their calculus.
//!
//! A [`TwoPointSymbol`] is a matrix-valued function `d(k, x, x')`; a
//! [`ReducedSymbol`] depends on a single point and carries its `(q, p)` form.
//! Both are lazy: evaluation requests a truncated Taylor expansion from the
//! underlying expression, so every derivative used by the product rules and
//! the reduction formula is exact up to rounding.
//!
//! Variables are ordered `(k_1..k_N, x_1..x_N)` for reduced symbols and
//! `(k_1..k_N, x_1..x_N, x'_1..x'_N)` for two-point symbols.

mod calculus;
mod grid;
mod matrix;
mod nodes;

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

pub use calculus::{
    compose_left, compose_weyl, convert_form, hermitian_split, poisson_bracket, reduce_symbol,
};
pub use grid::{apply_operator, apply_operator_stacked, GridField};
pub use matrix::SymMat;

use crate::jet::Jet;
use nodes::{
    AdjointSource, ConstSource, FnSource, MapSource, ProductSource, SampledSource, ScaleSource,
    Source, SumSource,
};

/// Number of terms kept when a truncation is not specified.
pub const DEFAULT_TERMS: usize = 2;

/// Highest derivative order a finite-difference backed symbol will supply.
pub const SAMPLED_MAX_ORDER: usize = 2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SymbolError {
    #[error("(q, p) = ({q}, {p}) does not satisfy q + p = 1")]
    Form { q: f64, p: f64 },
    #[error("derivatives up to order {required} required, symbol supplies {available}")]
    MissingDerivative { required: usize, available: usize },
    #[error("expected a symbol in {expected} form, got {found}")]
    FormMismatch { expected: Form, found: Form },
    #[error("Weyl product supports at most 2 terms, {0} requested")]
    Truncation(usize),
    #[error("at least one term must be retained")]
    NoTerms,
    #[error("symbols act on different spaces ({0} vs {1})")]
    Shape(String, String),
    #[error("operation requires a scalar symbol")]
    NotScalar,
    #[error("grid size {0} is not a power of two")]
    GridSize(usize),
    #[error("field does not decay at the grid boundary (edge/max = {ratio:e})")]
    BoundaryDecay { ratio: f64 },
}

/// The `(q, p)` form of a reduced symbol: dependence on `q x + p x'`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Form {
    pub q: f64,
    pub p: f64,
}

impl Form {
    pub const LEFT: Form = Form { q: 1.0, p: 0.0 };
    pub const RIGHT: Form = Form { q: 0.0, p: 1.0 };
    pub const WEYL: Form = Form { q: 0.5, p: 0.5 };

    pub fn new(q: f64, p: f64) -> Result<Form, SymbolError> {
        if !q.is_finite() || !p.is_finite() || (q + p - 1.0).abs() > 1e-14 {
            return Err(SymbolError::Form { q, p });
        }
        Ok(Form { q, p: 1.0 - q })
    }

    pub fn is_left(&self) -> bool {
        self.q == 1.0 && self.p == 0.0
    }

    pub fn is_weyl(&self) -> bool {
        self.q == 0.5 && self.p == 0.5
    }
}

impl fmt::Display for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_left() {
            write!(f, "left")
        } else if self.is_weyl() {
            write!(f, "Weyl")
        } else {
            write!(f, "(q, p) = ({}, {})", self.q, self.p)
        }
    }
}

/// Matrix-valued symbol `d(k, x, x')`.
#[derive(Clone)]
pub struct TwoPointSymbol {
    pub(crate) src: Source,
    dim: usize,
    mat: usize,
    order_m: f64,
    scale_l: f64,
    grading: Option<Vec<TwoPointSymbol>>,
}

impl fmt::Debug for TwoPointSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TwoPointSymbol")
            .field("dim", &self.dim)
            .field("mat", &self.mat)
            .field("order_m", &self.order_m)
            .field("scale_l", &self.scale_l)
            .field("graded", &self.grading.is_some())
            .finish()
    }
}

impl TwoPointSymbol {
    /// Symbol given on jets; `f(k, x, x')` returns an `n × n` matrix.
    pub fn analytic<F>(dim: usize, mat: usize, order_m: f64, scale_l: f64, f: F) -> TwoPointSymbol
    where
        F: Fn(&[Jet], &[Jet], &[Jet]) -> SymMat + Send + Sync + 'static,
    {
        let src = FnSource {
            f: Arc::new(move |v: &[Jet]| f(&v[..dim], &v[dim..2 * dim], &v[2 * dim..])),
        };
        TwoPointSymbol {
            src: Arc::new(src),
            dim,
            mat,
            order_m,
            scale_l,
            grading: None,
        }
    }

    pub fn scalar<F>(dim: usize, order_m: f64, scale_l: f64, f: F) -> TwoPointSymbol
    where
        F: Fn(&[Jet], &[Jet], &[Jet]) -> Jet + Send + Sync + 'static,
    {
        TwoPointSymbol::analytic(dim, 1, order_m, scale_l, move |k, x, xp| {
            SymMat::scalar(f(k, x, xp))
        })
    }

    /// Symbol known only through point values. Derivatives fall back to
    /// central differences and are limited to [`SAMPLED_MAX_ORDER`].
    pub fn sampled<F>(dim: usize, mat: usize, order_m: f64, scale_l: f64, f: F) -> TwoPointSymbol
    where
        F: Fn(&[f64], &[f64], &[f64]) -> Vec<Complex64> + Send + Sync + 'static,
    {
        let src = SampledSource {
            n: mat,
            max_order: SAMPLED_MAX_ORDER,
            f: Arc::new(move |v: &[f64]| f(&v[..dim], &v[dim..2 * dim], &v[2 * dim..])),
        };
        TwoPointSymbol {
            src: Arc::new(src),
            dim,
            mat,
            order_m,
            scale_l,
            grading: None,
        }
    }

    /// Declares an asymptotic split `d ~ d₀ + d₁ + ⋯`, component `ℓ` of order
    /// `m − ℓ`. The symbol itself becomes the sum of the components.
    pub fn graded(components: Vec<TwoPointSymbol>) -> TwoPointSymbol {
        assert!(!components.is_empty(), "empty grading");
        let first = &components[0];
        let src = Arc::new(SumSource {
            terms: components.iter().map(|c| c.src.clone()).collect(),
        });
        TwoPointSymbol {
            src,
            dim: first.dim,
            mat: first.mat,
            order_m: first.order_m,
            scale_l: first.scale_l,
            grading: Some(components),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mat(&self) -> usize {
        self.mat
    }

    pub fn order_m(&self) -> f64 {
        self.order_m
    }

    pub fn scale_l(&self) -> f64 {
        self.scale_l
    }

    pub fn grading(&self) -> Option<&[TwoPointSymbol]> {
        self.grading.as_deref()
    }

    pub fn max_derivative_order(&self) -> Option<usize> {
        self.src.max_order()
    }

    fn point(&self, k: &[f64], x: &[f64], xp: &[f64]) -> Vec<f64> {
        assert!(k.len() == self.dim && x.len() == self.dim && xp.len() == self.dim);
        k.iter().chain(x).chain(xp).copied().collect()
    }

    pub fn taylor(&self, k: &[f64], x: &[f64], xp: &[f64], order: usize) -> Result<SymMat, SymbolError> {
        self.src.taylor(&self.point(k, x, xp), order)
    }

    /// Values at a point, row-major `n × n`.
    pub fn eval(&self, k: &[f64], x: &[f64], xp: &[f64]) -> Result<Vec<Complex64>, SymbolError> {
        Ok(self.taylor(k, x, xp, 0)?.values())
    }

    /// `∂_k^α ∂_z^β d` with `z = (x, x')`, so `beta` has length `2N`.
    pub fn deriv(
        &self,
        alpha: &[usize],
        beta: &[usize],
        k: &[f64],
        x: &[f64],
        xp: &[f64],
    ) -> Result<Vec<Complex64>, SymbolError> {
        assert_eq!(alpha.len(), self.dim);
        assert_eq!(beta.len(), 2 * self.dim);
        let order: usize = alpha.iter().chain(beta).sum();
        let t = self.taylor(k, x, xp, order)?;
        let idx: Vec<u8> = alpha.iter().chain(beta).map(|&a| a as u8).collect();
        Ok(t.entries().iter().map(|j| j.derivative(&idx)).collect())
    }
}

/// Single-point symbol `d^{(q,p)}(k, x)`.
#[derive(Clone)]
pub struct ReducedSymbol {
    pub(crate) src: Source,
    dim: usize,
    mat: usize,
    form: Form,
    order_m: f64,
    truncation: usize,
    grading: Option<Vec<ReducedSymbol>>,
    x_independent: bool,
}

impl fmt::Debug for ReducedSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ReducedSymbol")
            .field("dim", &self.dim)
            .field("mat", &self.mat)
            .field("form", &self.form)
            .field("order_m", &self.order_m)
            .field("truncation", &self.truncation)
            .field("graded", &self.grading.as_ref().map(Vec::len))
            .finish()
    }
}

impl ReducedSymbol {
    pub(crate) fn from_source(src: Source, dim: usize, mat: usize, form: Form, order_m: f64) -> Self {
        ReducedSymbol {
            src,
            dim,
            mat,
            form,
            order_m,
            truncation: 1,
            grading: None,
            x_independent: false,
        }
    }

    pub fn analytic<F>(dim: usize, mat: usize, form: Form, order_m: f64, f: F) -> ReducedSymbol
    where
        F: Fn(&[Jet], &[Jet]) -> SymMat + Send + Sync + 'static,
    {
        let src = FnSource {
            f: Arc::new(move |v: &[Jet]| f(&v[..dim], &v[dim..])),
        };
        ReducedSymbol::from_source(Arc::new(src), dim, mat, form, order_m)
    }

    pub fn scalar<F>(dim: usize, form: Form, order_m: f64, f: F) -> ReducedSymbol
    where
        F: Fn(&[Jet], &[Jet]) -> Jet + Send + Sync + 'static,
    {
        ReducedSymbol::analytic(dim, 1, form, order_m, move |k, x| SymMat::scalar(f(k, x)))
    }

    /// Symbol that depends on `k` only (a Fourier multiplier). Grid
    /// application uses exact spectral multiplication for these.
    pub fn multiplier<F>(dim: usize, mat: usize, form: Form, order_m: f64, f: F) -> ReducedSymbol
    where
        F: Fn(&[Jet]) -> SymMat + Send + Sync + 'static,
    {
        let mut s = ReducedSymbol::analytic(dim, mat, form, order_m, move |k, _| f(k));
        s.x_independent = true;
        s
    }

    pub fn sampled<F>(dim: usize, mat: usize, form: Form, order_m: f64, f: F) -> ReducedSymbol
    where
        F: Fn(&[f64], &[f64]) -> Vec<Complex64> + Send + Sync + 'static,
    {
        let src = SampledSource {
            n: mat,
            max_order: SAMPLED_MAX_ORDER,
            f: Arc::new(move |v: &[f64]| f(&v[..dim], &v[dim..])),
        };
        ReducedSymbol::from_source(Arc::new(src), dim, mat, form, order_m)
    }

    pub fn constant(dim: usize, form: Form, value: impl Into<Complex64>) -> ReducedSymbol {
        let src = ConstSource {
            n: 1,
            values: vec![value.into()],
        };
        let mut s = ReducedSymbol::from_source(Arc::new(src), dim, 1, form, 0.0);
        s.x_independent = true;
        s
    }

    /// Attaches a grading `[d₀, d₁, …]`; the symbol becomes their sum.
    pub fn graded(components: Vec<ReducedSymbol>) -> ReducedSymbol {
        assert!(!components.is_empty(), "empty grading");
        let first = &components[0];
        let src = Arc::new(SumSource {
            terms: components.iter().map(|c| c.src.clone()).collect(),
        });
        ReducedSymbol {
            src,
            dim: first.dim,
            mat: first.mat,
            form: first.form,
            order_m: first.order_m,
            truncation: components.len(),
            x_independent: components.iter().all(|c| c.x_independent),
            grading: Some(components),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mat(&self) -> usize {
        self.mat
    }

    pub fn form(&self) -> Form {
        self.form
    }

    pub fn order_m(&self) -> f64 {
        self.order_m
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn grading(&self) -> Option<&[ReducedSymbol]> {
        self.grading.as_deref()
    }

    /// Leading (principal) component: `d₀` when graded, else the symbol itself.
    pub fn principal(&self) -> &ReducedSymbol {
        self.grading.as_ref().map(|g| &g[0]).unwrap_or(self)
    }

    pub fn is_x_independent(&self) -> bool {
        self.x_independent
    }

    pub fn max_derivative_order(&self) -> Option<usize> {
        self.src.max_order()
    }

    pub(crate) fn with_order(mut self, order_m: f64) -> Self {
        self.order_m = order_m;
        self
    }

    pub(crate) fn mark_x_independent(mut self) -> Self {
        self.x_independent = true;
        if let Some(g) = self.grading.as_mut() {
            for c in g {
                c.x_independent = true;
            }
        }
        self
    }

    fn point(&self, k: &[f64], x: &[f64]) -> Vec<f64> {
        assert!(k.len() == self.dim && x.len() == self.dim, "point dimension mismatch");
        k.iter().chain(x).copied().collect()
    }

    pub fn taylor(&self, k: &[f64], x: &[f64], order: usize) -> Result<SymMat, SymbolError> {
        self.src.taylor(&self.point(k, x), order)
    }

    pub fn eval(&self, k: &[f64], x: &[f64]) -> Result<Vec<Complex64>, SymbolError> {
        Ok(self.taylor(k, x, 0)?.values())
    }

    pub fn eval_scalar(&self, k: &[f64], x: &[f64]) -> Result<Complex64, SymbolError> {
        if self.mat != 1 {
            return Err(SymbolError::NotScalar);
        }
        Ok(self.eval(k, x)?[0])
    }

    /// `∂_k^α ∂_x^β d` at `(k, x)`, row-major.
    pub fn deriv(
        &self,
        alpha: &[usize],
        beta: &[usize],
        k: &[f64],
        x: &[f64],
    ) -> Result<Vec<Complex64>, SymbolError> {
        assert_eq!(alpha.len(), self.dim);
        assert_eq!(beta.len(), self.dim);
        let order: usize = alpha.iter().chain(beta).sum();
        let t = self.taylor(k, x, order)?;
        let idx: Vec<u8> = alpha.iter().chain(beta).map(|&a| a as u8).collect();
        Ok(t.entries().iter().map(|j| j.derivative(&idx)).collect())
    }

    fn check_shape(&self, other: &ReducedSymbol) -> Result<(), SymbolError> {
        if self.dim != other.dim || self.mat != other.mat {
            return Err(SymbolError::Shape(
                format!("N={}, n={}", self.dim, self.mat),
                format!("N={}, n={}", other.dim, other.mat),
            ));
        }
        Ok(())
    }

    /// Pointwise sum. Gradings are not propagated.
    pub fn plus(&self, other: &ReducedSymbol) -> Result<ReducedSymbol, SymbolError> {
        self.check_shape(other)?;
        let src = Arc::new(SumSource {
            terms: vec![self.src.clone(), other.src.clone()],
        });
        let mut s = ReducedSymbol::from_source(src, self.dim, self.mat, self.form, self.order_m.max(other.order_m));
        s.x_independent = self.x_independent && other.x_independent;
        Ok(s)
    }

    pub fn minus(&self, other: &ReducedSymbol) -> Result<ReducedSymbol, SymbolError> {
        self.plus(&other.scaled(-1.0))
    }

    /// Pointwise (matrix) product, not operator composition.
    pub fn times(&self, other: &ReducedSymbol) -> Result<ReducedSymbol, SymbolError> {
        self.check_shape(other)?;
        let src = Arc::new(ProductSource {
            a: self.src.clone(),
            b: other.src.clone(),
        });
        let mut s = ReducedSymbol::from_source(src, self.dim, self.mat, self.form, self.order_m + other.order_m);
        s.x_independent = self.x_independent && other.x_independent;
        Ok(s)
    }

    pub fn scaled(&self, c: impl Into<Complex64>) -> ReducedSymbol {
        let src = Arc::new(ScaleSource {
            a: self.src.clone(),
            s: c.into(),
        });
        let mut s = ReducedSymbol::from_source(src, self.dim, self.mat, self.form, self.order_m);
        s.x_independent = self.x_independent;
        s
    }

    /// Pointwise conjugate transpose.
    pub fn adjoint(&self) -> ReducedSymbol {
        let src = Arc::new(AdjointSource { a: self.src.clone() });
        let mut s = ReducedSymbol::from_source(src, self.dim, self.mat, self.form, self.order_m);
        s.x_independent = self.x_independent;
        s
    }

    /// Applies a scalar function to a scalar symbol.
    pub fn map_scalar<F>(&self, order_m: f64, f: F) -> Result<ReducedSymbol, SymbolError>
    where
        F: Fn(&Jet) -> Jet + Send + Sync + 'static,
    {
        if self.mat != 1 {
            return Err(SymbolError::NotScalar);
        }
        let src = Arc::new(MapSource {
            a: self.src.clone(),
            f: Arc::new(f),
        });
        let mut s = ReducedSymbol::from_source(src, self.dim, 1, self.form, order_m);
        s.x_independent = self.x_independent;
        Ok(s)
    }

    /// Pointwise reciprocal of a scalar symbol.
    pub fn recip(&self) -> Result<ReducedSymbol, SymbolError> {
        self.map_scalar(-self.order_m, Jet::recip)
    }
}

/// Seeded sampler for probe points in a box; fixed seeds keep tests and CLI
/// output reproducible.
pub struct ProbeSampler {
    rng: rand_chacha::ChaCha8Rng,
}

impl ProbeSampler {
    pub fn new(seed: u64) -> ProbeSampler {
        use rand::SeedableRng;
        ProbeSampler {
            rng: rand_chacha::ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        use rand::Rng;
        self.rng.gen_range(lo..hi)
    }

    /// One point with coordinate `i` drawn from `bounds[i]`.
    pub fn point(&mut self, bounds: &[(f64, f64)]) -> Vec<f64> {
        bounds.iter().map(|&(lo, hi)| self.uniform(lo, hi)).collect()
    }

    pub fn points(&mut self, count: usize, bounds: &[(f64, f64)]) -> Vec<Vec<f64>> {
        (0..count).map(|_| self.point(bounds)).collect()
    }
}
