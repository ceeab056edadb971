//! Truncated multivariate Taylor series ("jets") with complex coefficients.
//!
//! A [`Jet`] in `V` variables truncated at total degree `K` stores the Taylor
//! coefficients `c_β = ∂^β f / β!` of a smooth function around a base point,
//! for every multi-index `|β| ≤ K`. Arithmetic and elementary functions act on
//! jets exactly (up to rounding), which is what the symbol calculus uses to
//! obtain mixed derivatives of arbitrary order without finite differences.
//!
//! Monomials are stored in graded order, so the layout of order `K − 1` is a
//! prefix of the layout of order `K`; truncation is a slice.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

pub(crate) struct Layout {
    nvars: usize,
    order: usize,
    exps: Vec<Vec<u8>>,
    degree_start: Vec<usize>,
    index: HashMap<Vec<u8>, usize>,
    mul: Vec<(u32, u32, u32)>,
}

fn monomials_of_degree(nvars: usize, degree: usize, out: &mut Vec<Vec<u8>>) {
    fn rec(prefix: &mut Vec<u8>, remaining: usize, left: usize, out: &mut Vec<Vec<u8>>) {
        if left == 1 {
            prefix.push(remaining as u8);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for e in (0..=remaining).rev() {
            prefix.push(e as u8);
            rec(prefix, remaining - e, left - 1, out);
            prefix.pop();
        }
    }
    if nvars == 0 {
        if degree == 0 {
            out.push(Vec::new());
        }
        return;
    }
    rec(&mut Vec::with_capacity(nvars), degree, nvars, out);
}

impl Layout {
    fn build(nvars: usize, order: usize) -> Layout {
        let mut exps = Vec::new();
        let mut degree_start = Vec::with_capacity(order + 2);
        for d in 0..=order {
            degree_start.push(exps.len());
            monomials_of_degree(nvars, d, &mut exps);
        }
        degree_start.push(exps.len());
        let index: HashMap<Vec<u8>, usize> =
            exps.iter().enumerate().map(|(i, e)| (e.clone(), i)).collect();
        let degree = |i: usize| exps[i].iter().map(|&e| e as usize).sum::<usize>();
        let mut mul = Vec::new();
        let mut scratch = vec![0u8; nvars];
        for i in 0..exps.len() {
            let di = degree(i);
            let jmax = degree_start[order - di + 1];
            for j in 0..jmax {
                for v in 0..nvars {
                    scratch[v] = exps[i][v] + exps[j][v];
                }
                let k = index[&scratch];
                mul.push((i as u32, j as u32, k as u32));
            }
        }
        Layout {
            nvars,
            order,
            exps,
            degree_start,
            index,
            mul,
        }
    }

    pub(crate) fn get(nvars: usize, order: usize) -> Arc<Layout> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<Layout>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("jet layout cache poisoned");
        guard
            .entry((nvars, order))
            .or_insert_with(|| Arc::new(Layout::build(nvars, order)))
            .clone()
    }

    fn len(&self) -> usize {
        self.exps.len()
    }

    fn len_for_order(&self, order: usize) -> usize {
        self.degree_start[order + 1]
    }
}

/// Number of monomials of total degree `≤ order` in `nvars` variables.
pub fn jet_len(nvars: usize, order: usize) -> usize {
    Layout::get(nvars, order).len()
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, v| acc * v as f64)
}

/// `β!` for a multi-index.
pub fn multi_factorial(beta: &[u8]) -> f64 {
    beta.iter().map(|&b| factorial(b as usize)).product()
}

#[derive(Clone)]
pub struct Jet {
    layout: Arc<Layout>,
    coeffs: Vec<Complex64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("nvars", &self.layout.nvars)
            .field("order", &self.layout.order)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl Jet {
    pub fn zero(nvars: usize, order: usize) -> Jet {
        let layout = Layout::get(nvars, order);
        let coeffs = vec![Complex64::new(0.0, 0.0); layout.len()];
        Jet { layout, coeffs }
    }

    /// Builds a jet from coefficients in storage order (see [`Jet::exponents`]).
    pub fn from_coeffs(nvars: usize, order: usize, coeffs: Vec<Complex64>) -> Jet {
        let layout = Layout::get(nvars, order);
        assert_eq!(coeffs.len(), layout.len(), "coefficient count mismatch");
        Jet { layout, coeffs }
    }

    pub fn constant(nvars: usize, order: usize, value: impl Into<Complex64>) -> Jet {
        let mut j = Jet::zero(nvars, order);
        j.coeffs[0] = value.into();
        j
    }

    /// The coordinate function `v_var` expanded around `value`.
    pub fn variable(nvars: usize, order: usize, var: usize, value: f64) -> Jet {
        assert!(var < nvars, "variable index out of range");
        let mut j = Jet::constant(nvars, order, value);
        if order >= 1 {
            let mut e = vec![0u8; nvars];
            e[var] = 1;
            let idx = j.layout.index[&e];
            j.coeffs[idx] = Complex64::new(1.0, 0.0);
        }
        j
    }

    /// One seeded variable per coordinate of `point`.
    pub fn seeds(point: &[f64], order: usize) -> Vec<Jet> {
        (0..point.len())
            .map(|i| Jet::variable(point.len(), order, i, point[i]))
            .collect()
    }

    pub fn nvars(&self) -> usize {
        self.layout.nvars
    }

    pub fn order(&self) -> usize {
        self.layout.order
    }

    pub fn value(&self) -> Complex64 {
        self.coeffs[0]
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Exponent tuples in storage order.
    pub fn exponents(&self) -> &[Vec<u8>] {
        &self.layout.exps
    }

    /// Taylor coefficient of the monomial with exponents `beta` (zero if the
    /// monomial is beyond the truncation order).
    pub fn coeff(&self, beta: &[u8]) -> Complex64 {
        assert_eq!(beta.len(), self.nvars());
        self.layout
            .index
            .get(beta)
            .map(|&i| self.coeffs[i])
            .unwrap_or_default()
    }

    /// Mixed partial derivative `∂^β f` at the base point.
    pub fn derivative(&self, beta: &[u8]) -> Complex64 {
        let deg: usize = beta.iter().map(|&b| b as usize).sum();
        assert!(
            deg <= self.order(),
            "derivative of degree {deg} requested from a jet of order {}",
            self.order()
        );
        self.coeff(beta) * multi_factorial(beta)
    }

    pub fn truncate(&self, order: usize) -> Jet {
        if order >= self.order() {
            return self.clone();
        }
        let layout = Layout::get(self.nvars(), order);
        let coeffs = self.coeffs[..layout.len()].to_vec();
        Jet { layout, coeffs }
    }

    /// Partial derivative with respect to `var`; the result has order `K − 1`.
    pub fn diff(&self, var: usize) -> Jet {
        assert!(self.order() >= 1, "cannot differentiate an order-0 jet");
        let mut out = Jet::zero(self.nvars(), self.order() - 1);
        let mut e = vec![0u8; self.nvars()];
        for (i, ex) in self.layout.exps.iter().enumerate() {
            let p = ex[var];
            if p == 0 {
                continue;
            }
            e.copy_from_slice(ex);
            e[var] -= 1;
            let t = self.layout.index[&e];
            out.coeffs[t] += self.coeffs[i] * p as f64;
        }
        out
    }

    /// Repeated partial derivative `∂^β`.
    pub fn diff_multi(&self, beta: &[usize]) -> Jet {
        let mut out = self.clone();
        for (var, &times) in beta.iter().enumerate() {
            for _ in 0..times {
                out = out.diff(var);
            }
        }
        out
    }

    pub fn conj(&self) -> Jet {
        Jet {
            layout: self.layout.clone(),
            coeffs: self.coeffs.iter().map(|c| c.conj()).collect(),
        }
    }

    pub fn re(&self) -> Jet {
        Jet {
            layout: self.layout.clone(),
            coeffs: self.coeffs.iter().map(|c| Complex64::new(c.re, 0.0)).collect(),
        }
    }

    pub fn im(&self) -> Jet {
        Jet {
            layout: self.layout.clone(),
            coeffs: self.coeffs.iter().map(|c| Complex64::new(c.im, 0.0)).collect(),
        }
    }

    pub fn scale(&self, s: impl Into<Complex64>) -> Jet {
        let s = s.into();
        Jet {
            layout: self.layout.clone(),
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    fn common(a: &Jet, b: &Jet) -> (usize, Arc<Layout>) {
        assert_eq!(a.nvars(), b.nvars(), "jets over different variable sets");
        if a.order() <= b.order() {
            (a.order(), a.layout.clone())
        } else {
            (b.order(), b.layout.clone())
        }
    }

    fn zip_with(&self, rhs: &Jet, f: impl Fn(Complex64, Complex64) -> Complex64) -> Jet {
        let (_, layout) = Jet::common(self, rhs);
        let n = layout.len();
        let coeffs = (0..n).map(|i| f(self.coeffs[i], rhs.coeffs[i])).collect();
        Jet { layout, coeffs }
    }

    fn product(&self, rhs: &Jet) -> Jet {
        let (order, layout) = Jet::common(self, rhs);
        let mut coeffs = vec![Complex64::new(0.0, 0.0); layout.len()];
        if order == 0 {
            coeffs[0] = self.coeffs[0] * rhs.coeffs[0];
        } else {
            for &(i, j, k) in &layout.mul {
                coeffs[k as usize] += self.coeffs[i as usize] * rhs.coeffs[j as usize];
            }
        }
        Jet { layout, coeffs }
    }

    /// Applies a univariate function given its Taylor coefficients
    /// `t_j = f^{(j)}(a₀)/j!` at the constant part `a₀`, `j = 0..=order`.
    pub fn compose_series(&self, taylor: &[Complex64]) -> Jet {
        let k = self.order();
        assert!(taylor.len() > k, "not enough Taylor coefficients");
        let mut h = self.clone();
        h.coeffs[0] = Complex64::new(0.0, 0.0);
        let mut out = Jet::constant(self.nvars(), k, taylor[k]);
        for j in (0..k).rev() {
            out = out.product(&h);
            out.coeffs[0] += taylor[j];
        }
        out
    }

    pub fn recip(&self) -> Jet {
        let a0 = self.value();
        let inv = 1.0 / a0;
        let mut t = Vec::with_capacity(self.order() + 1);
        let mut p = inv;
        for _ in 0..=self.order() {
            t.push(p);
            p = -p * inv;
        }
        self.compose_series(&t)
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        let t: Vec<Complex64> = (0..=self.order()).map(|j| e / factorial(j)).collect();
        self.compose_series(&t)
    }

    pub fn ln(&self) -> Jet {
        let a0 = self.value();
        let mut t = vec![a0.ln()];
        for j in 1..=self.order() {
            let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
            t.push(sign / (j as f64 * a0.powi(j as i32)));
        }
        self.compose_series(&t)
    }

    pub fn powf(&self, s: f64) -> Jet {
        let a0 = self.value();
        let mut t = Vec::with_capacity(self.order() + 1);
        let mut binom = 1.0;
        for j in 0..=self.order() {
            if j > 0 {
                binom *= (s - (j as f64 - 1.0)) / j as f64;
            }
            t.push(a0.powc(Complex64::new(s - j as f64, 0.0)) * binom);
        }
        self.compose_series(&t)
    }

    pub fn powi(&self, n: i32) -> Jet {
        if n >= 0 {
            let mut out = Jet::constant(self.nvars(), self.order(), 1.0);
            for _ in 0..n {
                out = out.product(self);
            }
            out
        } else {
            self.powi(-n).recip()
        }
    }

    pub fn sqrt(&self) -> Jet {
        self.powf(0.5)
    }

    fn cyclic(&self, d: [Complex64; 4]) -> Jet {
        let t: Vec<Complex64> = (0..=self.order())
            .map(|j| d[j % 4] / factorial(j))
            .collect();
        self.compose_series(&t)
    }

    pub fn sin(&self) -> Jet {
        let a = self.value();
        self.cyclic([a.sin(), a.cos(), -a.sin(), -a.cos()])
    }

    pub fn cos(&self) -> Jet {
        let a = self.value();
        self.cyclic([a.cos(), -a.sin(), -a.cos(), a.sin()])
    }

    pub fn sinh(&self) -> Jet {
        let a = self.value();
        self.cyclic([a.sinh(), a.cosh(), a.sinh(), a.cosh()])
    }

    pub fn cosh(&self) -> Jet {
        let a = self.value();
        self.cyclic([a.cosh(), a.sinh(), a.cosh(), a.sinh()])
    }

    pub fn tanh(&self) -> Jet {
        &self.sinh() / &self.cosh()
    }

    pub fn atan(&self) -> Jet {
        let i = Complex64::new(0.0, 1.0);
        let one = Jet::constant(self.nvars(), self.order(), 1.0);
        let iz = self.scale(i);
        let diff = &(&one - &iz).ln() - &(&one + &iz).ln();
        diff.scale(i * 0.5)
    }

    /// Renames variables: old variable `v` becomes new variable `map[v]`.
    /// Several old variables may map onto the same new one, which evaluates
    /// the function on the corresponding diagonal.
    pub fn merge_vars(&self, map: &[usize], new_nvars: usize) -> Jet {
        assert_eq!(map.len(), self.nvars());
        let mut out = Jet::zero(new_nvars, self.order());
        let mut e = vec![0u8; new_nvars];
        for (i, ex) in self.layout.exps.iter().enumerate() {
            e.iter_mut().for_each(|v| *v = 0);
            for (v, &p) in ex.iter().enumerate() {
                e[map[v]] += p;
            }
            let t = out.layout.index[&e];
            out.coeffs[t] += self.coeffs[i];
        }
        out
    }

    /// Composes this centred expansion `P(y)` with jets `y_i(ξ)` whose constant
    /// parts are ignored (treated as the base point of `P`). The result is
    /// truncated at the smaller of the two orders.
    pub fn substitute(&self, inputs: &[Jet]) -> Jet {
        assert_eq!(inputs.len(), self.nvars());
        assert!(!inputs.is_empty());
        let w = inputs[0].nvars();
        let order = inputs
            .iter()
            .map(Jet::order)
            .fold(self.order(), usize::min);
        let ys: Vec<Jet> = inputs
            .iter()
            .map(|y| {
                let mut y = y.truncate(order);
                y.coeffs[0] = Complex64::new(0.0, 0.0);
                y
            })
            .collect();
        let src_len = self.layout.len_for_order(order);
        let mut products: Vec<Jet> = Vec::with_capacity(src_len);
        let mut out = Jet::zero(w, order);
        for (i, ex) in self.layout.exps[..src_len].iter().enumerate() {
            let prod = if i == 0 {
                Jet::constant(w, order, 1.0)
            } else {
                let v = ex.iter().position(|&p| p > 0).unwrap();
                let mut parent = ex.clone();
                parent[v] -= 1;
                let pi = self.layout.index[&parent];
                products[pi].product(&ys[v])
            };
            let c = self.coeffs[i];
            if c != Complex64::new(0.0, 0.0) {
                for (o, p) in out.coeffs.iter_mut().zip(prod.coeffs.iter()) {
                    *o += c * p;
                }
            }
            products.push(prod);
        }
        out
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        self.product(rhs)
    }
}

impl Div for &Jet {
    type Output = Jet;
    fn div(self, rhs: &Jet) -> Jet {
        self.product(&rhs.recip())
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl AddAssign<&Jet> for Jet {
    fn add_assign(&mut self, rhs: &Jet) {
        *self = &*self + rhs;
    }
}

macro_rules! forward_owned {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr for Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet { (&self).$m(&rhs) }
        }
        impl $tr<&Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: &Jet) -> Jet { (&self).$m(rhs) }
        }
        impl $tr<Jet> for &Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet { self.$m(&rhs) }
        }
    )*};
}
forward_owned!(Add add, Sub sub, Mul mul, Div div);

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

macro_rules! scalar_ops {
    ($($s:ty),*) => {$(
        impl Add<$s> for &Jet {
            type Output = Jet;
            fn add(self, rhs: $s) -> Jet {
                let mut out = self.clone();
                out.coeffs[0] += Complex64::from(rhs);
                out
            }
        }
        impl Add<$s> for Jet {
            type Output = Jet;
            fn add(self, rhs: $s) -> Jet { &self + rhs }
        }
        impl Sub<$s> for &Jet {
            type Output = Jet;
            fn sub(self, rhs: $s) -> Jet {
                let mut out = self.clone();
                out.coeffs[0] -= Complex64::from(rhs);
                out
            }
        }
        impl Sub<$s> for Jet {
            type Output = Jet;
            fn sub(self, rhs: $s) -> Jet { &self - rhs }
        }
        impl Mul<$s> for &Jet {
            type Output = Jet;
            fn mul(self, rhs: $s) -> Jet { self.scale(Complex64::from(rhs)) }
        }
        impl Mul<$s> for Jet {
            type Output = Jet;
            fn mul(self, rhs: $s) -> Jet { self.scale(Complex64::from(rhs)) }
        }
        impl Div<$s> for &Jet {
            type Output = Jet;
            fn div(self, rhs: $s) -> Jet { self.scale(1.0 / Complex64::from(rhs)) }
        }
        impl Div<$s> for Jet {
            type Output = Jet;
            fn div(self, rhs: $s) -> Jet { self.scale(1.0 / Complex64::from(rhs)) }
        }
        impl Mul<&Jet> for $s {
            type Output = Jet;
            fn mul(self, rhs: &Jet) -> Jet { rhs.scale(Complex64::from(self)) }
        }
        impl Mul<Jet> for $s {
            type Output = Jet;
            fn mul(self, rhs: Jet) -> Jet { rhs.scale(Complex64::from(self)) }
        }
        impl Add<&Jet> for $s {
            type Output = Jet;
            fn add(self, rhs: &Jet) -> Jet { rhs + self }
        }
        impl Add<Jet> for $s {
            type Output = Jet;
            fn add(self, rhs: Jet) -> Jet { &rhs + self }
        }
        impl Sub<&Jet> for $s {
            type Output = Jet;
            fn sub(self, rhs: &Jet) -> Jet { -(rhs - self) }
        }
        impl Sub<Jet> for $s {
            type Output = Jet;
            fn sub(self, rhs: Jet) -> Jet { -(&rhs - self) }
        }
        impl Div<&Jet> for $s {
            type Output = Jet;
            fn div(self, rhs: &Jet) -> Jet { rhs.recip().scale(Complex64::from(self)) }
        }
        impl Div<Jet> for $s {
            type Output = Jet;
            fn div(self, rhs: Jet) -> Jet { rhs.recip().scale(Complex64::from(self)) }
        }
    )*};
}
scalar_ops!(f64, Complex64);

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol * (1.0 + b.norm())
    }

    #[test]
    fn layout_is_graded_prefix() {
        let lo = Layout::get(3, 2);
        let hi = Layout::get(3, 4);
        assert_eq!(&hi.exps[..lo.len()], &lo.exps[..]);
        assert_eq!(jet_len(3, 4), 35);
        assert_eq!(jet_len(2, 0), 1);
    }

    #[test]
    fn product_of_variables() {
        let v = Jet::seeds(&[2.0, -1.0], 3);
        let f = &(&v[0] * &v[0]) * &v[1];
        assert!(close(f.value(), Complex64::new(-4.0, 0.0), 1e-15));
        assert!(close(f.derivative(&[1, 0]), Complex64::new(-4.0, 0.0), 1e-15));
        assert!(close(f.derivative(&[2, 1]), Complex64::new(2.0, 0.0), 1e-15));
        assert!(close(f.derivative(&[1, 1]), Complex64::new(4.0, 0.0), 1e-15));
    }

    #[test]
    fn elementary_functions_match_closed_derivatives() {
        let x0 = 0.7;
        let x = Jet::variable(1, 5, 0, x0);
        let s = x.sin();
        let e = x.exp();
        let l = x.ln();
        let r = x.sqrt();
        let a = x.atan();
        for j in 0..=5u8 {
            let sj = [x0.sin(), x0.cos(), -x0.sin(), -x0.cos()][j as usize % 4];
            assert!(close(s.derivative(&[j]), sj.into(), 1e-13));
            assert!(close(e.derivative(&[j]), x0.exp().into(), 1e-13));
        }
        assert!(close(l.derivative(&[3]), (2.0 / x0.powi(3)).into(), 1e-12));
        assert!(close(r.derivative(&[2]), (-0.25 * x0.powf(-1.5)).into(), 1e-12));
        let da = -2.0 * x0 / (1.0 + x0 * x0).powi(2);
        assert!(close(a.derivative(&[2]), da.into(), 1e-12));
        let q = (&x * &x + 1.0).recip();
        assert!(close(q.derivative(&[1]), (-2.0 * x0 / (1.0 + x0 * x0).powi(2)).into(), 1e-13));
    }

    #[test]
    fn diff_and_merge() {
        let v = Jet::seeds(&[0.3, 0.5, 0.5], 4);
        // f(k, x, x') = k x x'^2
        let f = &(&v[0] * &v[1]) * &(&v[2] * &v[2]);
        let d = f.diff(2);
        assert_eq!(d.order(), 3);
        assert!(close(d.value(), Complex64::new(2.0 * 0.3 * 0.5 * 0.5, 0.0), 1e-15));
        // Diagonal x = x' = r: g(k, r) = k r^3
        let g = f.merge_vars(&[0, 1, 1], 2);
        assert!(close(g.derivative(&[1, 2]), Complex64::new(6.0 * 0.5, 0.0), 1e-14));
    }

    #[test]
    fn substitute_linear_map() {
        // P(y) = y^3 around y0 = 1 ; y = q x + p x'
        let y = Jet::variable(1, 3, 0, 1.0);
        let p = &(&y * &y) * &y;
        let vars = Jet::seeds(&[1.0, 1.0], 3);
        let lin = &vars[0] * 0.25 + &vars[1] * 0.75;
        let out = p.substitute(&[lin]);
        // d^2/dx dx' of (0.25x + 0.75x')^3 = 6 * 0.25 * 0.75 * y
        assert!(close(out.derivative(&[1, 1]), Complex64::new(6.0 * 0.1875, 0.0), 1e-14));
        assert!(close(out.value(), Complex64::new(1.0, 0.0), 1e-15));
    }
}
