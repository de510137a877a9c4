//! Dense complex matrices and the Hermitian positive-definite factorization
//! used by the beamformer.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(CMatrix { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn scale(&mut self, c: f64) {
        for v in &mut self.data {
            *v *= c;
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// Largest `|m_ij - conj(m_ji)|`; zero for an exactly Hermitian matrix.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in 0..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Lower-triangular Cholesky factor `L` with `R = L·Lᴴ`.
///
/// Immutable after construction, so one factor can serve any number of
/// concurrent solves.
#[derive(Debug, Clone)]
pub struct HermitianCholesky {
    n: usize,
    // Row-major lower triangle; the diagonal is real and positive.
    lower: Vec<Complex64>,
}

impl HermitianCholesky {
    /// Factor a Hermitian positive-definite matrix; only the lower triangle is read.
    pub fn factor(r: &CMatrix) -> Result<Self> {
        let n = r.rows();
        if r.cols() != n {
            return Err(Error::Shape(format!("cannot factor a {}x{} matrix", n, r.cols())));
        }
        let mut lower = vec![Complex64::new(0.0, 0.0); n * n];
        for j in 0..n {
            let mut d = r[(j, j)].re;
            for k in 0..j {
                d -= lower[j * n + k].norm_sqr();
            }
            if !(d.is_finite() && d > 0.0) {
                return Err(Error::Factorization {
                    bin: None,
                    cell: None,
                    reason: format!("matrix is not positive definite (pivot {j} = {d:e})"),
                });
            }
            let d = d.sqrt();
            lower[j * n + j] = Complex64::new(d, 0.0);
            for i in j + 1..n {
                let mut s = r[(i, j)];
                for k in 0..j {
                    s -= lower[i * n + k] * lower[j * n + k].conj();
                }
                lower[i * n + j] = s / d;
            }
        }
        Ok(HermitianCholesky { n, lower })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `aᴴ R⁻¹ a = ‖L⁻¹a‖²`, by forward substitution. `scratch` must hold `n` values.
    pub fn inverse_quadratic_form(&self, a: &[Complex64], scratch: &mut [Complex64]) -> f64 {
        let n = self.n;
        debug_assert_eq!(a.len(), n);
        let mut acc = 0.0;
        for i in 0..n {
            let row = &self.lower[i * n..i * n + i];
            let mut s = a[i];
            for (l, z) in row.iter().zip(&scratch[..i]) {
                s -= l * z;
            }
            let z = s / self.lower[i * n + i].re;
            scratch[i] = z;
            acc += z.norm_sqr();
        }
        acc
    }
}
