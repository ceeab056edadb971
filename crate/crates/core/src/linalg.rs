//! Closed-form eigendecomposition of small Hermitian matrices (n ≤ 3).

use std::f64::consts::PI;

use num_complex::Complex64;

#[derive(Clone, Debug)]
pub struct HermitianEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Unit eigenvectors, `vectors[i]` belongs to `values[i]`.
    pub vectors: Vec<Vec<Complex64>>,
}

fn c0() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// Rotates `v` so its largest-magnitude component is real and positive,
/// then normalizes.
pub fn fix_phase(v: &mut [Complex64]) {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let (imax, _) = v
        .iter()
        .enumerate()
        .fold((0, -1.0), |(bi, bm), (i, z)| if z.norm() > bm { (i, z.norm()) } else { (bi, bm) });
    let pivot = v[imax];
    let rot = if pivot.norm() > 0.0 { pivot.conj() / pivot.norm() } else { Complex64::new(1.0, 0.0) };
    for z in v.iter_mut() {
        *z = *z * rot / norm;
    }
    v[imax] = Complex64::new(v[imax].re, 0.0);
}

fn cross(a: &[Complex64], b: &[Complex64]) -> [Complex64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn null_vector_3(h: &[Complex64], lambda: f64) -> Vec<Complex64> {
    let row = |i: usize| -> [Complex64; 3] {
        let mut r = [h[3 * i], h[3 * i + 1], h[3 * i + 2]];
        r[i] -= lambda;
        r
    };
    let rows = [row(0), row(1), row(2)];
    let mut best = [c0(); 3];
    let mut best_norm = -1.0;
    for (a, b) in [(0, 1), (0, 2), (1, 2)] {
        let c = cross(&rows[a], &rows[b]);
        let n: f64 = c.iter().map(|z| z.norm_sqr()).sum();
        if n > best_norm {
            best_norm = n;
            best = c;
        }
    }
    best.to_vec()
}

fn orthonormal_complement(vs: &[Vec<Complex64>], n: usize) -> Vec<Complex64> {
    // Gram-Schmidt of the unit vector basis against the given vectors.
    let mut best = vec![c0(); n];
    let mut best_norm = -1.0;
    for j in 0..n {
        let mut u = vec![c0(); n];
        u[j] = Complex64::new(1.0, 0.0);
        for v in vs {
            let dot: Complex64 = v.iter().zip(&u).map(|(a, b)| a.conj() * b).sum();
            for (ui, vi) in u.iter_mut().zip(v) {
                *ui -= dot * vi;
            }
        }
        let nrm: f64 = u.iter().map(|z| z.norm_sqr()).sum();
        if nrm > best_norm {
            best_norm = nrm;
            best = u;
        }
    }
    best
}

/// Eigenpairs of a Hermitian `n × n` matrix (row-major, `n ≤ 3`). Only the
/// Hermitian part of `h` is used.
pub fn hermitian_eigen(h: &[Complex64], n: usize) -> HermitianEigen {
    assert!((1..=3).contains(&n) && h.len() == n * n, "n must be 1, 2 or 3");
    let herm: Vec<Complex64> = (0..n * n)
        .map(|idx| {
            let (i, j) = (idx / n, idx % n);
            (h[i * n + j] + h[j * n + i].conj()) * 0.5
        })
        .collect();
    match n {
        1 => HermitianEigen {
            values: vec![herm[0].re],
            vectors: vec![vec![Complex64::new(1.0, 0.0)]],
        },
        2 => eigen2(&herm),
        _ => eigen3(&herm),
    }
}

fn eigen2(h: &[Complex64]) -> HermitianEigen {
    let (a, b, d) = (h[0].re, h[1], h[3].re);
    let mean = 0.5 * (a + d);
    let half = 0.5 * (a - d);
    let rad = half.hypot(b.norm());
    let values = vec![mean - rad, mean + rad];
    let vectors = values
        .iter()
        .map(|&l| {
            let v1 = [b, Complex64::new(l - a, 0.0)];
            let v2 = [Complex64::new(l - d, 0.0), b.conj()];
            let n1 = v1[0].norm_sqr() + v1[1].norm_sqr();
            let n2 = v2[0].norm_sqr() + v2[1].norm_sqr();
            let mut v = if n1 == 0.0 && n2 == 0.0 {
                // Multiple of the identity.
                if l == values[0] {
                    vec![Complex64::new(1.0, 0.0), c0()]
                } else {
                    vec![c0(), Complex64::new(1.0, 0.0)]
                }
            } else if n1 >= n2 {
                v1.to_vec()
            } else {
                v2.to_vec()
            };
            fix_phase(&mut v);
            v
        })
        .collect();
    HermitianEigen { values, vectors }
}

fn eigen3(h: &[Complex64]) -> HermitianEigen {
    let (a, b, c) = (h[0].re, h[4].re, h[8].re);
    let (d, e, f) = (h[1], h[5], h[2]);
    let p1 = d.norm_sqr() + e.norm_sqr() + f.norm_sqr();
    let mean = (a + b + c) / 3.0;
    let mut values = if p1 == 0.0 {
        vec![a, b, c]
    } else {
        let p2 = (a - mean).powi(2) + (b - mean).powi(2) + (c - mean).powi(2) + 2.0 * p1;
        let p = (p2 / 6.0).sqrt();
        // det((H - mean I)/p) / 2 via the real closed form of a Hermitian determinant.
        let (aa, bb, cc) = ((a - mean) / p, (b - mean) / p, (c - mean) / p);
        let (dd, ee, ff) = (d / p, e / p, f / p);
        let det = aa * bb * cc + 2.0 * (dd * ee * ff.conj()).re
            - aa * ee.norm_sqr()
            - bb * ff.norm_sqr()
            - cc * dd.norm_sqr();
        let r = (det / 2.0).clamp(-1.0, 1.0);
        let phi = r.acos() / 3.0;
        let l1 = mean + 2.0 * p * phi.cos();
        let l3 = mean + 2.0 * p * (phi + 2.0 * PI / 3.0).cos();
        let l2 = 3.0 * mean - l1 - l3;
        vec![l1, l2, l3]
    };
    values.sort_by(|x, y| x.partial_cmp(y).unwrap());

    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let repeated: Vec<bool> = (0..3)
        .map(|i| {
            (i > 0 && (values[i] - values[i - 1]).abs() <= 1e-13 * scale)
                || (i + 1 < 3 && (values[i + 1] - values[i]).abs() <= 1e-13 * scale)
        })
        .collect();
    let mut slots: Vec<Option<Vec<Complex64>>> = vec![None; 3];
    for i in (0..3).filter(|&i| !repeated[i]) {
        let mut v = null_vector_3(h, values[i]);
        fix_phase(&mut v);
        slots[i] = Some(v);
    }
    // A repeated eigenvalue spans the complement of the simple ones.
    for i in (0..3).filter(|&i| repeated[i]) {
        let found: Vec<Vec<Complex64>> = slots.iter().flatten().cloned().collect();
        let mut v = orthonormal_complement(&found, 3);
        fix_phase(&mut v);
        slots[i] = Some(v);
    }
    let vectors: Vec<Vec<Complex64>> = slots.into_iter().map(Option::unwrap).collect();
    // Rayleigh quotients tighten the eigenvalues to the vectors actually used.
    for (l, v) in values.iter_mut().zip(&vectors) {
        let mut acc = c0();
        for i in 0..3 {
            for j in 0..3 {
                acc += v[i].conj() * h[3 * i + j] * v[j];
            }
        }
        *l = acc.re;
    }
    HermitianEigen { values, vectors }
}

/// `‖(H − λI)v‖` for a row-major `n × n` matrix.
pub fn eigen_residual(h: &[Complex64], n: usize, lambda: f64, v: &[Complex64]) -> f64 {
    (0..n)
        .map(|i| {
            let mut acc = -v[i] * lambda;
            for j in 0..n {
                acc += h[i * n + j] * v[j];
            }
            acc.norm_sqr()
        })
        .sum::<f64>()
        .sqrt()
}

/// Determinant of a small real row-major matrix by Gaussian elimination
/// with partial pivoting.
pub fn det_real(m: &[f64], n: usize) -> f64 {
    let mut a = m.to_vec();
    let mut det = 1.0;
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i * n + col].abs().partial_cmp(&a[j * n + col].abs()).unwrap())
            .unwrap();
        if a[piv * n + col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            for j in 0..n {
                a.swap(col * n + j, piv * n + j);
            }
            det = -det;
        }
        let p = a[col * n + col];
        det *= p;
        for i in col + 1..n {
            let f = a[i * n + col] / p;
            for j in col..n {
                a[i * n + j] -= f * a[col * n + j];
            }
        }
    }
    det
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn diagonal_two_by_two() {
        let h = [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(3.0, 0.0)];
        let eig = hermitian_eigen(&h, 2);
        assert_eq!(eig.values, vec![1.0, 3.0]);
        assert_eq!(eig.vectors[0], vec![c(1.0, 0.0), c(0.0, 0.0)]);
    }

    #[test]
    fn degenerate_three_by_three() {
        let h = [
            c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0),
            c(0.0, 0.0), c(2.0, 0.0), c(0.0, 0.0),
            c(0.0, 0.0), c(0.0, 0.0), c(5.0, 0.0),
        ];
        let eig = hermitian_eigen(&h, 3);
        for (l, v) in eig.values.iter().zip(&eig.vectors) {
            assert!(eigen_residual(&h, 3, *l, v) < 1e-14);
        }
        let dot: Complex64 = eig.vectors[0].iter().zip(&eig.vectors[1]).map(|(a, b)| a.conj() * b).sum();
        assert!(dot.norm() < 1e-14);
    }

    #[test]
    fn determinant() {
        assert!((det_real(&[2.0, 1.0, 1.0, 3.0], 2) - 5.0).abs() < 1e-15);
        assert!((det_real(&[0.0, 1.0, 1.0, 0.0], 2) + 1.0).abs() < 1e-15);
    }

    fn hermitian3() -> impl Strategy<Value = Vec<Complex64>> {
        prop::collection::vec(-2.0f64..2.0, 9).prop_map(|r| {
            vec![
                c(r[0], 0.0), c(r[3], r[4]), c(r[5], r[6]),
                c(r[3], -r[4]), c(r[1], 0.0), c(r[7], r[8]),
                c(r[5], -r[6]), c(r[7], -r[8]), c(r[2], 0.0),
            ]
        })
    }

    proptest! {
        #[test]
        fn eigenpairs_are_consistent(h in hermitian3()) {
            let eig = hermitian_eigen(&h, 3);
            let scale = h.iter().map(|z| z.norm()).fold(1.0, f64::max);
            for w in eig.values.windows(2) {
                prop_assert!(w[0] <= w[1] + 1e-12 * scale);
            }
            let gaps_ok = eig.values.windows(2).all(|w| (w[1] - w[0]).abs() > 1e-4 * scale);
            if gaps_ok {
                for (l, v) in eig.values.iter().zip(&eig.vectors) {
                    prop_assert!(eigen_residual(&h, 3, *l, v) < 1e-10 * scale);
                    let nrm: f64 = v.iter().map(|z| z.norm_sqr()).sum();
                    prop_assert!((nrm - 1.0).abs() < 1e-13);
                }
            }
            let trace = h[0].re + h[4].re + h[8].re;
            prop_assert!((eig.values.iter().sum::<f64>() - trace).abs() < 1e-12 * scale);
        }

        #[test]
        fn two_by_two_residual(a in -3.0f64..3.0, d in -3.0f64..3.0, br in -1.0f64..1.0, bi in -1.0f64..1.0) {
            let h = [c(a, 0.0), c(br, bi), c(br, -bi), c(d, 0.0)];
            let eig = hermitian_eigen(&h, 2);
            for (l, v) in eig.values.iter().zip(&eig.vectors) {
                prop_assert!(eigen_residual(&h, 2, *l, v) < 1e-12);
            }
        }
    }
}
