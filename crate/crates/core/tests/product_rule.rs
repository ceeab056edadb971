//! Left-symbol composition against explicit composition of polynomial
//! differential operators `Σ c_mn x^m D^n`, `D = −i∂_x`.

use num_complex::Complex64;
use proptest::prelude::*;
use wavekit_core::jet::Jet;
use wavekit_core::symbols::{compose_left, Form, ReducedSymbol};

/// Gaussian-integer coefficients `c[m][n]` of `x^m D^n`.
type Poly = Vec<Vec<(i64, i64)>>;

fn mul(a: (i64, i64), b: (i64, i64)) -> (i64, i64) {
    (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0)
}

fn binom(n: usize, k: usize) -> i64 {
    (0..k).fold(1i64, |acc, i| acc * (n - i) as i64 / (i as i64 + 1))
}

fn falling(p: usize, j: usize) -> i64 {
    (0..j).map(|i| (p - i) as i64).product()
}

/// `(−i)^j` as a Gaussian integer.
fn minus_i_pow(j: usize) -> (i64, i64) {
    [(1, 0), (0, -1), (-1, 0), (0, 1)][j % 4]
}

/// Normal-ordered product, using `D^n x^p = Σ_j C(n,j) (−i)^j p!/(p−j)! x^{p−j} D^{n−j}`.
fn compose(a: &Poly, b: &Poly) -> Poly {
    let mut out = vec![vec![(0i64, 0i64); 7]; 7];
    for (m, row) in a.iter().enumerate() {
        for (n, &ca) in row.iter().enumerate() {
            for (p, brow) in b.iter().enumerate() {
                for (q, &cb) in brow.iter().enumerate() {
                    for j in 0..=n.min(p) {
                        let s = binom(n, j) * falling(p, j);
                        let c = mul(mul(ca, cb), minus_i_pow(j));
                        let slot = &mut out[m + p - j][n - j + q];
                        slot.0 += s * c.0;
                        slot.1 += s * c.1;
                    }
                }
            }
        }
    }
    out
}

fn eval_poly(c: &Poly, k: f64, x: f64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (m, row) in c.iter().enumerate() {
        for (n, &(re, im)) in row.iter().enumerate() {
            acc += Complex64::new(re as f64, im as f64) * x.powi(m as i32) * k.powi(n as i32);
        }
    }
    acc
}

fn symbol(c: Poly) -> ReducedSymbol {
    ReducedSymbol::scalar(1, Form::LEFT, 3.0, move |k, x| {
        let mut acc = Jet::zero(k[0].nvars(), k[0].order());
        for (m, row) in c.iter().enumerate() {
            for (n, &(re, im)) in row.iter().enumerate() {
                if (re, im) != (0, 0) {
                    acc = acc + x[0].powi(m as i32) * &k[0].powi(n as i32) * Complex64::new(re as f64, im as f64);
                }
            }
        }
        acc
    })
}

/// Polynomials of total degree ≤ 3 with small Gaussian-integer coefficients.
fn poly() -> impl Strategy<Value = Poly> {
    prop::collection::vec((-3i64..=3, -3i64..=3), 10).prop_map(|cs| {
        let mut p = vec![vec![(0, 0); 4]; 4];
        let mut it = cs.into_iter();
        for m in 0..4 {
            for n in 0..4 - m {
                p[m][n] = it.next().unwrap();
            }
        }
        p
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn compose_left_matches_operator_product(a in poly(), b in poly(), k in -2.0f64..2.0, x in -2.0f64..2.0) {
        let exact = compose(&a, &b);
        let c = compose_left(&symbol(a), &symbol(b), 4).unwrap();
        let got = c.eval_scalar(&[k], &[x]).unwrap();
        let want = eval_poly(&exact, k, x);
        prop_assert!((got - want).norm() <= 1e-12 * want.norm().max(1.0), "{got} vs {want}");
    }
}

#[test]
fn commutator_of_x_and_d() {
    // [D, x] = −i.
    let x = vec![vec![(0, 0)], vec![(1, 0)]];
    let d = vec![vec![(0, 0), (1, 0)]];
    let dx = compose(&d, &x);
    let xd = compose(&x, &d);
    assert_eq!(dx[0][0], (0, -1));
    assert_eq!(dx[1][1], xd[1][1]);
}
