//! Complex/real matrix and vector types, the R <-> C identifications used to
//! turn complex systems into real ones, phases, and the complex Gaussian
//! sampler everything else draws from.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Real vectors are plain nalgebra vectors; no invariants worth a newtype.
pub type RealVector = DVector<f64>;

/// Mean modulus of a standard complex Gaussian entry: sqrt(pi/2).
pub fn kappa() -> f64 {
    (std::f64::consts::PI / 2.0).sqrt()
}

/// a/|a| for a != 0, and exactly 0 at a = 0.
///
/// Components are divided by the hypot-based modulus directly, so tiny inputs
/// neither overflow nor lose their direction.
pub fn phase(a: Complex64) -> Complex64 {
    if a.re == 0.0 && a.im == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        let n = a.norm();
        Complex64::new(a.re / n, a.im / n)
    }
}

fn check_shape(what: &'static str, rows: usize, cols: usize) -> Result<()> {
    if rows == 0 || cols == 0 {
        return Err(Error::Empty { what });
    }
    Ok(())
}

/// Dense complex matrix. Constructors take row-major entry order (the same
/// order the CSV format uses) and reject empty shapes and non-finite entries.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    inner: DMatrix<Complex64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<Complex64>) -> Result<Self> {
        check_shape("complex matrix", rows, cols)?;
        if entries.len() != rows * cols {
            return Err(Error::Dimension {
                context: "complex matrix entries",
                left: rows * cols,
                right: entries.len(),
            });
        }
        if !entries.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFinite {
                what: "complex matrix",
            });
        }
        let inner = DMatrix::from_fn(rows, cols, |i, j| entries[i * cols + j]);
        Ok(Self { inner })
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> Complex64) -> Result<Self> {
        check_shape("complex matrix", rows, cols)?;
        let inner = DMatrix::from_fn(rows, cols, f);
        if !inner.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFinite {
                what: "complex matrix",
            });
        }
        Ok(Self { inner })
    }

    pub(crate) fn from_dmatrix(inner: DMatrix<Complex64>) -> Self {
        Self { inner }
    }

    pub fn rows(&self) -> usize {
        self.inner.nrows()
    }

    pub fn cols(&self) -> usize {
        self.inner.ncols()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.inner[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.inner
    }

    /// k-th row as a vector (not conjugated).
    pub fn row(&self, k: usize) -> ComplexVector {
        ComplexVector::from_dvector(self.inner.row(k).transpose())
    }

    pub fn mul_vec(&self, v: &ComplexVector) -> Result<ComplexVector> {
        if self.cols() != v.len() {
            return Err(Error::Dimension {
                context: "matrix-vector product",
                left: self.cols(),
                right: v.len(),
            });
        }
        Ok(ComplexVector::from_dvector(&self.inner * v.vector()))
    }

    pub fn norm_fro(&self) -> f64 {
        self.inner.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Trace inner product <A, B> = sum conj(a_ij) b_ij.
    pub fn dot_conj(&self, other: &ComplexMatrix) -> Result<Complex64> {
        if self.rows() != other.rows() || self.cols() != other.cols() {
            return Err(Error::Dimension {
                context: "trace inner product",
                left: self.rows() * self.cols(),
                right: other.rows() * other.cols(),
            });
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for (a, b) in self.inner.iter().zip(other.inner.iter()) {
            acc += a.conj() * b;
        }
        Ok(acc)
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self {
            inner: self.inner.map(|z| z * c),
        }
    }
}

/// Dense complex vector; same validation rules as `ComplexMatrix`.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexVector {
    inner: DVector<Complex64>,
}

impl ComplexVector {
    pub fn new(entries: Vec<Complex64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Empty {
                what: "complex vector",
            });
        }
        if !entries.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFinite {
                what: "complex vector",
            });
        }
        Ok(Self {
            inner: DVector::from_vec(entries),
        })
    }

    pub fn from_fn(len: usize, mut f: impl FnMut(usize) -> Complex64) -> Result<Self> {
        Self::new((0..len).map(&mut f).collect())
    }

    pub(crate) fn from_dvector(inner: DVector<Complex64>) -> Self {
        Self { inner }
    }

    pub fn len(&self) -> usize {
        self.inner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inner.is_empty()
    }

    pub fn get(&self, k: usize) -> Complex64 {
        self.inner[k]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        self.inner.as_slice()
    }

    pub fn vector(&self) -> &DVector<Complex64> {
        &self.inner
    }

    pub fn iter(&self) -> impl Iterator<Item = &Complex64> {
        self.inner.iter()
    }

    pub fn norm(&self) -> f64 {
        self.inner.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn norm_l1(&self) -> f64 {
        self.inner.iter().map(|z| z.norm()).sum()
    }

    /// <u, v> = sum conj(u_k) v_k, conjugate-linear in self.
    pub fn dot_conj(&self, other: &ComplexVector) -> Result<Complex64> {
        if self.len() != other.len() {
            return Err(Error::Dimension {
                context: "inner product",
                left: self.len(),
                right: other.len(),
            });
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for (a, b) in self.inner.iter().zip(other.inner.iter()) {
            acc += a.conj() * b;
        }
        Ok(acc)
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self {
            inner: self.inner.map(|z| z * c),
        }
    }

    pub fn sub(&self, other: &ComplexVector) -> Result<ComplexVector> {
        if self.len() != other.len() {
            return Err(Error::Dimension {
                context: "vector difference",
                left: self.len(),
                right: other.len(),
            });
        }
        Ok(Self {
            inner: &self.inner - other.vector(),
        })
    }
}

/// Dense real matrix with the same constructor conventions.
#[derive(Clone, Debug, PartialEq)]
pub struct RealMatrix {
    inner: DMatrix<f64>,
}

impl RealMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self> {
        check_shape("real matrix", rows, cols)?;
        if entries.len() != rows * cols {
            return Err(Error::Dimension {
                context: "real matrix entries",
                left: rows * cols,
                right: entries.len(),
            });
        }
        if !entries.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite { what: "real matrix" });
        }
        Ok(Self {
            inner: DMatrix::from_row_slice(rows, cols, &entries),
        })
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        check_shape("real matrix", rows, cols)?;
        let inner = DMatrix::from_fn(rows, cols, f);
        if !inner.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite { what: "real matrix" });
        }
        Ok(Self { inner })
    }

    pub(crate) fn from_dmatrix(inner: DMatrix<f64>) -> Self {
        Self { inner }
    }

    pub fn rows(&self) -> usize {
        self.inner.nrows()
    }

    pub fn cols(&self) -> usize {
        self.inner.ncols()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.inner[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.inner
    }

    pub fn norm_fro(&self) -> f64 {
        self.inner.norm()
    }
}

/// [A]_R: stack Re(A) over Im(A), giving a 2m x n real matrix.
pub fn to_real(a: &ComplexMatrix) -> RealMatrix {
    let (m, n) = (a.rows(), a.cols());
    let inner = DMatrix::from_fn(2 * m, n, |i, j| {
        if i < m {
            a.get(i, j).re
        } else {
            a.get(i - m, j).im
        }
    });
    RealMatrix { inner }
}

/// [B]_C: top half + i * bottom half. Inverse of `to_real`; the row count
/// must be even.
pub fn to_complex(b: &RealMatrix) -> Result<ComplexMatrix> {
    if b.rows() % 2 != 0 {
        return Err(Error::Dimension {
            context: "real-to-complex lift (rows must be even)",
            left: b.rows(),
            right: b.rows() + 1,
        });
    }
    let m = b.rows() / 2;
    let inner = DMatrix::from_fn(m, b.cols(), |i, j| Complex64::new(b.get(i, j), b.get(i + m, j)));
    Ok(ComplexMatrix { inner })
}

/// Stack [Re(u); Im(u)] into a real vector of twice the length.
pub fn embed_vector(u: &ComplexVector) -> RealVector {
    let n = u.len();
    RealVector::from_fn(2 * n, |k, _| {
        if k < n {
            u.get(k).re
        } else {
            u.get(k - n).im
        }
    })
}

/// Inverse of `embed_vector`; the length must be even.
pub fn unembed_vector(v: &RealVector) -> Result<ComplexVector> {
    if v.len() % 2 != 0 {
        return Err(Error::Dimension {
            context: "real-to-complex vector lift (length must be even)",
            left: v.len(),
            right: v.len() + 1,
        });
    }
    let n = v.len() / 2;
    ComplexVector::new((0..n).map(|k| Complex64::new(v[k], v[k + n])).collect())
}

/// i.i.d. entries drawn as N(0,1) + i N(0,1), filled row by row (real part
/// then imaginary part), so a fixed RNG seed pins the whole matrix.
pub fn sample_complex_gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Result<ComplexMatrix> {
    check_shape("complex matrix", rows, cols)?;
    let mut entries = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        entries.push(Complex64::new(re, im));
    }
    ComplexMatrix::new(rows, cols, entries)
}

pub fn sample_complex_gaussian_vector<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Result<ComplexVector> {
    let m = sample_complex_gaussian(len, 1, rng)?;
    ComplexVector::new((0..len).map(|k| m.get(k, 0)).collect())
}
