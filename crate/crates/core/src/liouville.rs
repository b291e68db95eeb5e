//! Vectorized Liouvillian construction.
//!
//! Vectorization convention (used everywhere in this crate): column-major,
//! `vec(rho)[i + d*j] = rho[i, j]`. Under this convention
//! `vec(A rho B) = (B^T kron A) vec(rho)`.

use crate::hilbert::kron;
use crate::{C64, Operator, Result, SimError};
use ndarray::{Array1, Array2};

/// Dense superoperator acting on column-vectorized operators.
#[derive(Debug, Clone)]
pub struct Superoperator {
    dim: usize,
    matrix: Array2<C64>,
}

impl Superoperator {
    pub fn new(dim: usize, matrix: Array2<C64>) -> Self {
        assert_eq!(matrix.nrows(), dim * dim);
        assert_eq!(matrix.ncols(), dim * dim);
        Superoperator { dim, matrix }
    }

    /// Hilbert-space dimension `d`; the matrix is `d^2 x d^2`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub fn apply_vec(&self, v: &Array1<C64>) -> Array1<C64> {
        self.matrix.dot(v)
    }

    pub fn apply(&self, rho: &Array2<C64>) -> Array2<C64> {
        unvec(&self.apply_vec(&vec_op(rho)), self.dim)
    }
}

/// Column-major vectorization `vec(rho)[i + d*j] = rho[i, j]`.
pub fn vec_op(rho: &Array2<C64>) -> Array1<C64> {
    let d = rho.nrows();
    let mut v = Array1::zeros(d * d);
    for j in 0..d {
        for i in 0..d {
            v[i + d * j] = rho[[i, j]];
        }
    }
    v
}

pub fn unvec(v: &Array1<C64>, d: usize) -> Array2<C64> {
    let mut m = Array2::zeros((d, d));
    for j in 0..d {
        for i in 0..d {
            m[[i, j]] = v[i + d * j];
        }
    }
    m
}

/// Build the generator `L` with `d vec(rho)/dt = L vec(rho)` for
/// `-i[H, rho] + sum_c (r_c/2)(2 O rho O^dag - {O^dag O, rho})`.
///
/// Each channel `(r, O)` carries the convention that `r` is the population
/// decay rate of the channel.
pub fn liouvillian(h: &Operator, channels: &[(f64, Operator)]) -> Result<Superoperator> {
    h.check_hermitian()?;
    let d = h.dim();
    let id = Array2::<C64>::eye(d);
    let i = C64::new(0.0, 1.0);

    // -i (I kron H - H^T kron I)
    let mut l = kron(&id, h.matrix()).mapv(|z| -i * z)
        + kron(&h.matrix().t().to_owned(), &id).mapv(|z| i * z);

    for (rate, op) in channels {
        if *op.space() != *h.space() {
            return Err(SimError::SpaceMismatch);
        }
        let o = op.matrix();
        let od = op.dagger();
        let odo = od.matrix().dot(o);
        let half = C64::new(rate / 2.0, 0.0);
        // (r/2)(2 conj(O) kron O - I kron O^dag O - (O^dag O)^T kron I)
        l = l
            + kron(&o.mapv(|z| z.conj()), o).mapv(|z| 2.0 * half * z)
            - kron(&id, &odo).mapv(|z| half * z)
            - kron(&odo.t().to_owned(), &id).mapv(|z| half * z);
    }
    Ok(Superoperator::new(d, l))
}

/// Row vector representing the trace functional, `vec(I)^T`.
pub fn trace_row(d: usize) -> Array1<C64> {
    vec_op(&Array2::eye(d))
}
