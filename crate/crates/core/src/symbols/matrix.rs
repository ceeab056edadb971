use num_complex::Complex64;

use crate::jet::Jet;

/// Small dense matrix of jets, row-major. Scalar symbols are `1 × 1`.
#[derive(Clone, Debug)]
pub struct SymMat {
    n: usize,
    entries: Vec<Jet>,
}

impl SymMat {
    pub fn scalar(value: Jet) -> SymMat {
        SymMat {
            n: 1,
            entries: vec![value],
        }
    }

    pub fn from_entries(n: usize, entries: Vec<Jet>) -> SymMat {
        assert_eq!(entries.len(), n * n, "expected {} entries", n * n);
        SymMat { n, entries }
    }

    pub fn zeros(n: usize, nvars: usize, order: usize) -> SymMat {
        SymMat {
            n,
            entries: vec![Jet::zero(nvars, order); n * n],
        }
    }

    pub fn identity(n: usize, nvars: usize, order: usize) -> SymMat {
        let mut m = SymMat::zeros(n, nvars, order);
        for i in 0..n {
            m.entries[i * n + i] = Jet::constant(nvars, order, 1.0);
        }
        m
    }

    /// Diagonal matrix from jets.
    pub fn diagonal(diag: Vec<Jet>) -> SymMat {
        let n = diag.len();
        let nvars = diag[0].nvars();
        let order = diag.iter().map(Jet::order).min().unwrap();
        let mut m = SymMat::zeros(n, nvars, order);
        for (i, d) in diag.into_iter().enumerate() {
            m.entries[i * n + i] = d.truncate(order);
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.entries.iter().map(Jet::order).min().unwrap_or(0)
    }

    pub fn nvars(&self) -> usize {
        self.entries[0].nvars()
    }

    pub fn entry(&self, i: usize, j: usize) -> &Jet {
        &self.entries[i * self.n + j]
    }

    pub fn entries(&self) -> &[Jet] {
        &self.entries
    }

    /// The `1 × 1` entry of a scalar symbol.
    pub fn into_scalar(self) -> Jet {
        assert_eq!(self.n, 1, "not a scalar symbol");
        self.entries.into_iter().next().unwrap()
    }

    /// Constant parts, row-major.
    pub fn values(&self) -> Vec<Complex64> {
        self.entries.iter().map(Jet::value).collect()
    }

    pub fn map(&self, f: impl Fn(&Jet) -> Jet) -> SymMat {
        SymMat {
            n: self.n,
            entries: self.entries.iter().map(f).collect(),
        }
    }

    pub fn zip(&self, rhs: &SymMat, f: impl Fn(&Jet, &Jet) -> Jet) -> SymMat {
        assert_eq!(self.n, rhs.n, "matrix size mismatch");
        SymMat {
            n: self.n,
            entries: self
                .entries
                .iter()
                .zip(rhs.entries.iter())
                .map(|(a, b)| f(a, b))
                .collect(),
        }
    }

    pub fn add(&self, rhs: &SymMat) -> SymMat {
        self.zip(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &SymMat) -> SymMat {
        self.zip(rhs, |a, b| a - b)
    }

    pub fn scale(&self, s: Complex64) -> SymMat {
        self.map(|a| a.scale(s))
    }

    pub fn matmul(&self, rhs: &SymMat) -> SymMat {
        assert_eq!(self.n, rhs.n, "matrix size mismatch");
        let n = self.n;
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = self.entry(i, 0) * rhs.entry(0, j);
                for l in 1..n {
                    acc += &(self.entry(i, l) * rhs.entry(l, j));
                }
                entries.push(acc);
            }
        }
        SymMat { n, entries }
    }

    /// Pointwise conjugate transpose.
    pub fn adjoint(&self) -> SymMat {
        let n = self.n;
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                entries.push(self.entry(j, i).conj());
            }
        }
        SymMat { n, entries }
    }

    pub fn truncate(&self, order: usize) -> SymMat {
        self.map(|a| a.truncate(order))
    }

    pub fn diff(&self, var: usize) -> SymMat {
        self.map(|a| a.diff(var))
    }

    pub fn diff_multi(&self, beta: &[usize]) -> SymMat {
        self.map(|a| a.diff_multi(beta))
    }
}
