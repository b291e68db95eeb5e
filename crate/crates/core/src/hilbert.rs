//! Composite Hilbert-space bookkeeping: tensor factors, dense operators,
//! and density matrices.
//!
//! The composite space is always ordered 4-level system first, then one
//! factor per cavity mode of dimension `n_max + 1`.

use crate::{C64, Result, SimError};
use ndarray::{Array1, Array2};
use ndarray_linalg::{EigValsh, Norm, UPLO};

pub const SYSTEM_DIM: usize = 4;

/// Ordered list of tensor-factor dimensions. The first factor is the
/// 4-level system; up to two cavity factors may follow.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HilbertSpace {
    factors: Vec<usize>,
}

impl HilbertSpace {
    /// Space of the bare 4-level system.
    pub fn system_only() -> Self {
        HilbertSpace { factors: vec![SYSTEM_DIM] }
    }

    /// Composite space with one factor of dimension `n_max + 1` per cavity
    /// cutoff in `cavity_cutoffs`.
    pub fn with_cavities(cavity_cutoffs: &[usize]) -> Result<Self> {
        if cavity_cutoffs.len() > 2 {
            return Err(SimError::InvalidParameter(format!(
                "at most 2 cavity modes supported, got {}",
                cavity_cutoffs.len()
            )));
        }
        let mut factors = vec![SYSTEM_DIM];
        for &n_max in cavity_cutoffs {
            if n_max < 1 {
                return Err(SimError::InvalidParameter(
                    "cavity Fock cutoff must be at least 1".into(),
                ));
            }
            factors.push(n_max + 1);
        }
        Ok(HilbertSpace { factors })
    }

    pub fn dim(&self) -> usize {
        self.factors.iter().product()
    }

    pub fn n_factors(&self) -> usize {
        self.factors.len()
    }

    pub fn factor_dim(&self, index: usize) -> usize {
        self.factors[index]
    }

    pub fn factors(&self) -> &[usize] {
        &self.factors
    }
}

/// Dense operator on a composite Hilbert space. Entries are dimensionless
/// unless stated; energies carried in rad/ns.
#[derive(Debug, Clone)]
pub struct Operator {
    space: HilbertSpace,
    matrix: Array2<C64>,
}

impl Operator {
    pub fn new(space: HilbertSpace, matrix: Array2<C64>) -> Result<Self> {
        if matrix.nrows() != space.dim() || matrix.ncols() != space.dim() {
            return Err(SimError::DimensionMismatch {
                expected: space.dim(),
                got: matrix.nrows(),
            });
        }
        Ok(Operator { space, matrix })
    }

    pub fn zero(space: HilbertSpace) -> Self {
        let d = space.dim();
        Operator { space, matrix: Array2::zeros((d, d)) }
    }

    pub fn identity(space: HilbertSpace) -> Self {
        let d = space.dim();
        Operator { space, matrix: Array2::eye(d) }
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn dagger(&self) -> Operator {
        Operator {
            space: self.space.clone(),
            matrix: self.matrix.t().mapv(|z| z.conj()),
        }
    }

    pub fn scaled(&self, c: C64) -> Operator {
        Operator { space: self.space.clone(), matrix: self.matrix.mapv(|z| c * z) }
    }

    pub fn add(&self, other: &Operator) -> Result<Operator> {
        if self.space != other.space {
            return Err(SimError::SpaceMismatch);
        }
        Ok(Operator {
            space: self.space.clone(),
            matrix: &self.matrix + &other.matrix,
        })
    }

    pub fn matmul(&self, other: &Operator) -> Result<Operator> {
        if self.space != other.space {
            return Err(SimError::SpaceMismatch);
        }
        Ok(Operator {
            space: self.space.clone(),
            matrix: self.matrix.dot(&other.matrix),
        })
    }

    pub fn trace(&self) -> C64 {
        self.matrix.diag().sum()
    }

    /// Max-norm deviation from Hermiticity, `max |A - A^dag|`.
    pub fn hermiticity_deviation(&self) -> f64 {
        hermiticity_deviation(&self.matrix)
    }

    /// Verify the Hermitian flag: `max|A - A^dag| < 1e-12 * max|A|`.
    pub fn check_hermitian(&self) -> Result<()> {
        let scale = self.matrix.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let dev = self.hermiticity_deviation();
        if dev > 1e-12 * scale.max(1e-300) {
            return Err(SimError::NotHermitian { deviation: dev });
        }
        Ok(())
    }
}

pub fn hermiticity_deviation(m: &Array2<C64>) -> f64 {
    let mut dev: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            dev = dev.max((m[[i, j]] - m[[j, i]].conj()).norm());
        }
    }
    dev
}

/// Transition operator `|i><j|` on the bare 4-level system.
pub fn sigma(i: usize, j: usize) -> Operator {
    assert!(i < SYSTEM_DIM && j < SYSTEM_DIM);
    let mut m = Array2::zeros((SYSTEM_DIM, SYSTEM_DIM));
    m[[i, j]] = C64::new(1.0, 0.0);
    Operator { space: HilbertSpace::system_only(), matrix: m }
}

/// Truncated ladder operator with entries `a[n-1, n] = sqrt(n)` on a space
/// of dimension `n_max + 1`.
pub fn annihilation(n_max: usize) -> Result<Operator> {
    if n_max < 1 {
        return Err(SimError::InvalidParameter(
            "annihilation operator needs n_max >= 1".into(),
        ));
    }
    let d = n_max + 1;
    let mut m = Array2::zeros((d, d));
    for n in 1..d {
        m[[n - 1, n]] = C64::new((n as f64).sqrt(), 0.0);
    }
    Ok(Operator { space: HilbertSpace { factors: vec![d] }, matrix: m })
}

/// Embed a single-factor operator into a composite space:
/// `I x ... x op x ... x I` with `op` at position `which_factor`.
pub fn embed(op: &Operator, which_factor: usize, space: &HilbertSpace) -> Result<Operator> {
    if which_factor >= space.n_factors() {
        return Err(SimError::FactorOutOfRange {
            index: which_factor,
            n_factors: space.n_factors(),
        });
    }
    let fd = space.factor_dim(which_factor);
    if op.dim() != fd {
        return Err(SimError::DimensionMismatch { expected: fd, got: op.dim() });
    }
    let left: usize = space.factors()[..which_factor].iter().product();
    let right: usize = space.factors()[which_factor + 1..].iter().product();
    let mut out = kron(&Array2::eye(left), op.matrix());
    out = kron(&out, &Array2::eye(right));
    Ok(Operator { space: space.clone(), matrix: out })
}

/// Kronecker product `a (x) b`.
pub fn kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (ra, ca) = a.dim();
    let (rb, cb) = b.dim();
    let mut out = Array2::zeros((ra * rb, ca * cb));
    for i in 0..ra {
        for j in 0..ca {
            let aij = a[[i, j]];
            if aij == C64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..rb {
                for l in 0..cb {
                    out[[i * rb + k, j * cb + l]] = aij * b[[k, l]];
                }
            }
        }
    }
    out
}

/// Hermitian, unit-trace, positive operator on the composite space.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    space: HilbertSpace,
    matrix: Array2<C64>,
}

impl DensityMatrix {
    /// Validates Hermiticity (1e-10 absolute on unit-trace normalization),
    /// unit trace (1e-10), and positivity (min eigenvalue >= -1e-8).
    pub fn new(space: HilbertSpace, matrix: Array2<C64>) -> Result<Self> {
        if matrix.nrows() != space.dim() || matrix.ncols() != space.dim() {
            return Err(SimError::DimensionMismatch {
                expected: space.dim(),
                got: matrix.nrows(),
            });
        }
        let herm = hermiticity_deviation(&matrix);
        if herm > 1e-10 {
            return Err(SimError::NotHermitian { deviation: herm });
        }
        let tr = matrix.diag().sum();
        let tr_dev = (tr - C64::new(1.0, 0.0)).norm();
        if tr_dev > 1e-10 {
            return Err(SimError::TraceDeviation { deviation: tr_dev });
        }
        let min_eig = min_eigenvalue(&matrix)?;
        if min_eig < -1e-8 {
            return Err(SimError::NotPositive { min_eig });
        }
        Ok(DensityMatrix { space, matrix })
    }

    /// Construct without validation; for internal use where the invariants
    /// are checked separately (e.g. integrator diagnostics).
    pub(crate) fn new_unchecked(space: HilbertSpace, matrix: Array2<C64>) -> Self {
        DensityMatrix { space, matrix }
    }

    /// Pure state `|i><i|` of one factor's basis on a single-factor space.
    pub fn pure_system(level: usize) -> Self {
        let mut m = Array2::zeros((SYSTEM_DIM, SYSTEM_DIM));
        m[[level, level]] = C64::new(1.0, 0.0);
        DensityMatrix { space: HilbertSpace::system_only(), matrix: m }
    }

    /// Equal mixture of the two spin ground states on the bare 4LS.
    pub fn mixed_ground() -> Self {
        let mut m = Array2::zeros((SYSTEM_DIM, SYSTEM_DIM));
        m[[0, 0]] = C64::new(0.5, 0.0);
        m[[1, 1]] = C64::new(0.5, 0.0);
        DensityMatrix { space: HilbertSpace::system_only(), matrix: m }
    }

    /// Tensor a 4LS state with vacuum in every cavity factor of `space`.
    pub fn with_vacuum(&self, space: &HilbertSpace) -> Result<DensityMatrix> {
        if self.space.n_factors() != 1 {
            return Err(SimError::InvalidParameter(
                "with_vacuum expects a bare 4LS state".into(),
            ));
        }
        let mut m = self.matrix.clone();
        for &fd in &space.factors()[1..] {
            let mut vac = Array2::zeros((fd, fd));
            vac[[0, 0]] = C64::new(1.0, 0.0);
            m = kron(&m, &vac);
        }
        DensityMatrix::new(space.clone(), m)
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub fn trace(&self) -> C64 {
        self.matrix.diag().sum()
    }

    /// Expectation value `Tr[rho O]`.
    pub fn expect(&self, op: &Operator) -> Result<C64> {
        if *op.space() != self.space {
            return Err(SimError::SpaceMismatch);
        }
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..self.matrix.nrows() {
            for k in 0..self.matrix.ncols() {
                acc += self.matrix[[i, k]] * op.matrix()[[k, i]];
            }
        }
        Ok(acc)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        min_eigenvalue(&self.matrix)
    }

    /// Partial trace over all cavity factors, leaving the 4LS state.
    pub fn trace_out_cavities(&self) -> DensityMatrix {
        let d_env: usize = self.space.factors()[1..].iter().product();
        let mut out = Array2::zeros((SYSTEM_DIM, SYSTEM_DIM));
        for i in 0..SYSTEM_DIM {
            for j in 0..SYSTEM_DIM {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..d_env {
                    acc += self.matrix[[i * d_env + k, j * d_env + k]];
                }
                out[[i, j]] = acc;
            }
        }
        DensityMatrix { space: HilbertSpace::system_only(), matrix: out }
    }
}

/// Smallest eigenvalue of the Hermitian part of `m`.
pub fn min_eigenvalue(m: &Array2<C64>) -> Result<f64> {
    let herm = (m + &m.t().mapv(|z| z.conj())).mapv(|z| 0.5 * z);
    let eigs: Array1<f64> = herm.eigvalsh(UPLO::Lower)?;
    Ok(eigs.iter().cloned().fold(f64::INFINITY, f64::min))
}

/// Frobenius-norm distance helper used by oracle tests.
pub fn max_abs_diff(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    let mut dev: f64 = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        dev = dev.max((x - y).norm());
    }
    dev
}

#[allow(dead_code)]
fn frobenius(m: &Array2<C64>) -> f64 {
    m.norm_l2()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn embed_identity_is_identity() {
        let space = HilbertSpace::system_only();
        let id = Operator::identity(space.clone());
        let out = embed(&id, 0, &space).unwrap();
        assert_eq!(out.matrix(), id.matrix());
    }

    #[test]
    fn embed_projector_into_composite() {
        // sigma_22 (|1><1| zero-indexed) into [4, 3]: ones on the diagonal
        // at composite indices |1> x |n>, n = 0..2.
        let space = HilbertSpace::with_cavities(&[2]).unwrap();
        let p = sigma(1, 1);
        let out = embed(&p, 0, &space).unwrap();
        assert_eq!(out.dim(), 12);
        for i in 0..12 {
            for j in 0..12 {
                let expected = if i == j && (3..6).contains(&i) { 1.0 } else { 0.0 };
                assert!((out.matrix()[[i, j]] - c(expected)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn annihilation_entries() {
        let a = annihilation(1).unwrap();
        assert!((a.matrix()[[0, 1]] - c(1.0)).norm() < 1e-15);
        assert!((a.matrix()[[1, 0]]).norm() < 1e-15);

        let a = annihilation(2).unwrap();
        assert!((a.matrix()[[0, 1]] - c(1.0)).norm() < 1e-15);
        assert!((a.matrix()[[1, 2]] - c(2f64.sqrt())).norm() < 1e-15);
        // number operator eigenvalue on |2>
        let n = a.dagger().matmul(&a).unwrap();
        assert!((n.matrix()[[2, 2]] - c(2.0)).norm() < 1e-14);
    }

    #[test]
    fn annihilation_rejects_zero_cutoff() {
        assert!(annihilation(0).is_err());
    }

    #[test]
    fn truncated_commutator() {
        // [a, a^dag] = I - (n_max + 1)|n_max><n_max| on the truncated space,
        // verified inside the composite space [4, 3].
        let space = HilbertSpace::with_cavities(&[2]).unwrap();
        let a = embed(&annihilation(2).unwrap(), 1, &space).unwrap();
        let ad = a.dagger();
        let comm = a.matmul(&ad).unwrap().add(&ad.matmul(&a).unwrap().scaled(c(-1.0))).unwrap();

        let mut expected = Array2::<C64>::eye(3);
        expected[[2, 2]] = c(-2.0);
        let proj = Operator::new(HilbertSpace { factors: vec![3] }, expected).unwrap();
        let expected_full = embed(&proj, 1, &space).unwrap();
        assert!(max_abs_diff(comm.matrix(), expected_full.matrix()) < 1e-14);
    }

    #[test]
    fn embed_is_multiplicative() {
        let space = HilbertSpace::with_cavities(&[2, 3]).unwrap();
        let a = annihilation(2).unwrap();
        let b = a.dagger();
        let ab = a.matmul(&b).unwrap();
        let lhs = embed(&ab, 1, &space).unwrap();
        let rhs = embed(&a, 1, &space).unwrap().matmul(&embed(&b, 1, &space).unwrap()).unwrap();
        assert!(max_abs_diff(lhs.matrix(), rhs.matrix()) < 1e-14);
    }

    #[test]
    fn embed_dimension_mismatch() {
        let space = HilbertSpace::with_cavities(&[2]).unwrap();
        let a = annihilation(3).unwrap();
        assert!(matches!(embed(&a, 1, &space), Err(SimError::DimensionMismatch { .. })));
        assert!(matches!(embed(&a, 2, &space), Err(SimError::FactorOutOfRange { .. })));
    }

    #[test]
    fn density_matrix_invariants() {
        let rho = DensityMatrix::pure_system(3);
        assert!((rho.trace() - c(1.0)).norm() < 1e-15);

        // trace violation rejected
        let mut bad = Array2::<C64>::zeros((4, 4));
        bad[[0, 0]] = c(0.9);
        assert!(matches!(
            DensityMatrix::new(HilbertSpace::system_only(), bad),
            Err(SimError::TraceDeviation { .. })
        ));

        // negative eigenvalue rejected
        let mut neg = Array2::<C64>::zeros((4, 4));
        neg[[0, 0]] = c(1.1);
        neg[[1, 1]] = c(-0.1);
        assert!(matches!(
            DensityMatrix::new(HilbertSpace::system_only(), neg),
            Err(SimError::NotPositive { .. })
        ));
    }

    #[test]
    fn partial_trace_to_system() {
        let space = HilbertSpace::with_cavities(&[2]).unwrap();
        let rho = DensityMatrix::mixed_ground().with_vacuum(&space).unwrap();
        let reduced = rho.trace_out_cavities();
        assert!((reduced.matrix()[[0, 0]] - c(0.5)).norm() < 1e-14);
        assert!((reduced.matrix()[[1, 1]] - c(0.5)).norm() < 1e-14);
        assert!((reduced.trace() - c(1.0)).norm() < 1e-14);
    }
}
