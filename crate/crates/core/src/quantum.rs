//! Dense complex linear algebra on composite Hilbert spaces.
//!
//! Every operator and state carries the ordered list of its subsystem
//! dimensions. Basis indices follow the Kronecker convention: the first
//! subsystem is the most significant digit.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Relative Hermiticity tolerance for operators built as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Tolerances a state must satisfy to be accepted as valid.
pub const PURE_NORM_TOL: f64 = 1e-10;
pub const DENSITY_HERMITIAN_TOL: f64 = 1e-10;
pub const DENSITY_TRACE_TOL: f64 = 1e-9;
pub const DENSITY_MIN_EIGENVALUE: f64 = -1e-8;

fn product(dims: &[usize]) -> usize {
    dims.iter().product()
}

fn check_dims(dims: &[usize], dim: usize) -> Result<()> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::Usage(format!("invalid subsystem dimensions {dims:?}")));
    }
    if product(dims) != dim {
        return Err(Error::Usage(format!(
            "subsystem dimensions {dims:?} do not multiply to {dim}"
        )));
    }
    Ok(())
}

/// Largest entrywise modulus of a matrix.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// `max |M - M†|`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut defect = 0.0_f64;
    for j in 0..n {
        for i in 0..=j {
            defect = defect.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    defect
}

/// Square complex matrix on a composite space.
#[derive(Clone, PartialEq)]
pub struct Operator {
    matrix: CMatrix,
    dims: Vec<usize>,
}

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Operator")
            .field("dims", &self.dims)
            .field("matrix", &self.matrix)
            .finish()
    }
}

impl Operator {
    pub fn new(matrix: CMatrix, dims: Vec<usize>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Usage(format!(
                "operator must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        check_dims(&dims, matrix.nrows())?;
        Ok(Self { matrix, dims })
    }

    /// Single-subsystem operator.
    pub fn from_matrix(matrix: CMatrix) -> Result<Self> {
        let n = matrix.nrows();
        Self::new(matrix, vec![n])
    }

    /// Build an operator that must be Hermitian; rejects it otherwise.
    pub fn hermitian(matrix: CMatrix, dims: Vec<usize>) -> Result<Self> {
        let op = Self::new(matrix, dims)?;
        op.ensure_hermitian()?;
        Ok(op)
    }

    /// Real matrix given row by row.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Usage("rows must form a square matrix".into()));
        }
        Self::from_matrix(CMatrix::from_fn(n, n, |i, j| C64::new(rows[i][j], 0.0)))
    }

    pub fn identity(dims: &[usize]) -> Self {
        let n = product(dims);
        Self {
            matrix: CMatrix::identity(n, n),
            dims: dims.to_vec(),
        }
    }

    pub fn zeros(dims: &[usize]) -> Self {
        let n = product(dims);
        Self {
            matrix: CMatrix::zeros(n, n),
            dims: dims.to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.matrix[(row, col)]
    }

    pub fn dagger(&self) -> Self {
        Self {
            matrix: self.matrix.adjoint(),
            dims: self.dims.clone(),
        }
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            matrix: &self.matrix * factor,
            dims: self.dims.clone(),
        }
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(C64::new(factor, 0.0))
    }

    pub fn hermiticity_defect(&self) -> f64 {
        hermiticity_defect(&self.matrix)
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.matrix)
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_defect() <= HERMITIAN_TOL * self.max_abs()
    }

    pub fn ensure_hermitian(&self) -> Result<()> {
        let defect = self.hermiticity_defect();
        let allowed = HERMITIAN_TOL * self.max_abs();
        if defect > allowed {
            return Err(Error::NotHermitian { defect, allowed });
        }
        Ok(())
    }

    /// Largest entrywise distance to another operator of the same shape.
    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        max_abs(&(&self.matrix - &other.matrix))
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// `U† U = I` within `tol` entrywise.
    pub fn is_unitary(&self, tol: f64) -> bool {
        let n = self.dim();
        let prod = self.matrix.adjoint() * &self.matrix;
        max_abs(&(prod - CMatrix::identity(n, n))) <= tol
    }

    pub fn apply(&self, v: &CVector) -> CVector {
        &self.matrix * v
    }

    /// Restrict to the span of the given basis indices: `P† O P`.
    pub fn restrict(&self, indices: &[usize]) -> CMatrix {
        CMatrix::from_fn(indices.len(), indices.len(), |i, j| {
            self.matrix[(indices[i], indices[j])]
        })
    }

    fn combine_check(&self, other: &Operator) {
        assert_eq!(
            self.dims, other.dims,
            "operator arithmetic on mismatched spaces"
        );
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        self.combine_check(rhs);
        Operator {
            matrix: &self.matrix + &rhs.matrix,
            dims: self.dims.clone(),
        }
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        self.combine_check(rhs);
        Operator {
            matrix: &self.matrix - &rhs.matrix,
            dims: self.dims.clone(),
        }
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        self.combine_check(rhs);
        Operator {
            matrix: &self.matrix * &rhs.matrix,
            dims: self.dims.clone(),
        }
    }
}

/// Kronecker product of the factors in the listed order.
pub fn tensor(factors: &[Operator]) -> Result<Operator> {
    let (first, rest) = factors
        .split_first()
        .ok_or_else(|| Error::Usage("tensor of an empty factor list".into()))?;
    let mut matrix = first.matrix.clone();
    let mut dims = first.dims.clone();
    for f in rest {
        matrix = matrix.kronecker(&f.matrix);
        dims.extend_from_slice(&f.dims);
    }
    Ok(Operator { matrix, dims })
}

/// Place a single-subsystem operator at `position` of a composite space,
/// with identities elsewhere.
pub fn embed(op: &Operator, position: usize, dims: &[usize]) -> Result<Operator> {
    if position >= dims.len() {
        return Err(Error::Usage(format!(
            "subsystem {position} out of range for {dims:?}"
        )));
    }
    if op.dim() != dims[position] {
        return Err(Error::DimensionMismatch {
            expected: dims[position],
            got: op.dim(),
        });
    }
    let factors: Vec<Operator> = dims
        .iter()
        .enumerate()
        .map(|(k, &d)| {
            if k == position {
                Operator {
                    matrix: op.matrix.clone(),
                    dims: vec![d],
                }
            } else {
                Operator::identity(&[d])
            }
        })
        .collect();
    tensor(&factors)
}

pub fn commutator(a: &Operator, b: &Operator) -> Result<Operator> {
    if a.dims != b.dims {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    Ok(&(a * b) - &(b * a))
}

/// `|v><v|` for a (not necessarily normalized) vector.
pub fn projector(v: &CVector, dims: &[usize]) -> Result<Operator> {
    check_dims(dims, v.len())?;
    Ok(Operator {
        matrix: v * v.adjoint(),
        dims: dims.to_vec(),
    })
}

/// Projector onto a single computational basis state.
pub fn basis_projector(dims: &[usize], index: usize) -> Result<Operator> {
    let n = product(dims);
    if index >= n {
        return Err(Error::Usage(format!("basis index {index} out of range {n}")));
    }
    let mut m = CMatrix::zeros(n, n);
    m[(index, index)] = ONE;
    Operator::new(m, dims.to_vec())
}

/// Flat basis index of a product state given per-subsystem levels.
pub fn basis_index(dims: &[usize], levels: &[usize]) -> Result<usize> {
    if dims.len() != levels.len() {
        return Err(Error::Usage(format!(
            "{} levels given for {} subsystems",
            levels.len(),
            dims.len()
        )));
    }
    let mut index = 0;
    for (&d, &l) in dims.iter().zip(levels) {
        if l >= d {
            return Err(Error::Usage(format!("level {l} out of range {d}")));
        }
        index = index * d + l;
    }
    Ok(index)
}

/// Inverse of [`basis_index`].
pub fn basis_levels(dims: &[usize], mut index: usize) -> Vec<usize> {
    let mut levels = vec![0; dims.len()];
    for (k, &d) in dims.iter().enumerate().rev() {
        levels[k] = index % d;
        index /= d;
    }
    levels
}

pub fn basis_vector(dims: &[usize], index: usize) -> CVector {
    let mut v = CVector::zeros(product(dims));
    v[index] = ONE;
    v
}

/// Truncated bosonic lowering operator on `n_max + 1` Fock levels.
pub fn annihilation_operator(n_max: usize) -> Result<Operator> {
    if n_max < 1 {
        return Err(Error::Usage("Fock cutoff must be at least 1".into()));
    }
    let n = n_max + 1;
    let mut m = CMatrix::zeros(n, n);
    for k in 1..n {
        m[(k - 1, k)] = C64::new((k as f64).sqrt(), 0.0);
    }
    Operator::new(m, vec![n])
}

pub fn creation_operator(n_max: usize) -> Result<Operator> {
    Ok(annihilation_operator(n_max)?.dagger())
}

/// Spectral decomposition `H = V diag(E) V†` of a Hermitian operator.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn new(h: &Operator) -> Result<Self> {
        h.ensure_hermitian()?;
        Ok(Self::of_matrix(h.matrix()))
    }

    /// Decompose without the Hermiticity check; the strictly upper triangle
    /// is ignored in favour of the lower one.
    pub fn of_matrix(m: &CMatrix) -> Self {
        let eig = SymmetricEigen::new(m.clone());
        Self {
            values: eig.eigenvalues.iter().copied().collect(),
            vectors: eig.eigenvectors,
        }
    }

    /// `V exp(-i E t) V†`.
    pub fn propagator(&self, t: f64) -> CMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for (j, &e) in self.values.iter().enumerate() {
            let phase = C64::from_polar(1.0, -e * t);
            for i in 0..n {
                scaled[(i, j)] *= phase;
            }
        }
        scaled * self.vectors.adjoint()
    }

    pub fn spectral_radius(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |acc, e| acc.max(e.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// `exp(-iHt)` for Hermitian `H` and `t >= 0`, via eigendecomposition.
pub fn matrix_exponential_propagator(h: &Operator, t: f64) -> Result<Operator> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::param("t", format!("duration must be finite and >= 0, got {t}")));
    }
    let eig = HermitianEigen::new(h)?;
    Operator::new(eig.propagator(t), h.dims.clone())
}

#[derive(Clone, Debug, PartialEq)]
enum StateData {
    Pure(CVector),
    Density(CMatrix),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StateKind {
    Pure,
    Density,
}

/// Health figures of a density matrix.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DensityDiagnostics {
    pub trace_drift: f64,
    pub hermiticity_defect: f64,
    pub min_eigenvalue: f64,
}

impl DensityDiagnostics {
    pub fn of(rho: &CMatrix) -> Self {
        let herm = (rho + rho.adjoint()) * C64::new(0.5, 0.0);
        Self {
            trace_drift: (rho.trace() - ONE).norm(),
            hermiticity_defect: hermiticity_defect(rho),
            min_eigenvalue: HermitianEigen::of_matrix(&herm).min(),
        }
    }

    /// Fold another sample into a running worst case.
    pub fn worst(self, other: Self) -> Self {
        Self {
            trace_drift: self.trace_drift.max(other.trace_drift),
            hermiticity_defect: self.hermiticity_defect.max(other.hermiticity_defect),
            min_eigenvalue: self.min_eigenvalue.min(other.min_eigenvalue),
        }
    }

    pub fn violation(&self) -> Option<String> {
        if self.trace_drift > DENSITY_TRACE_TOL {
            return Some(format!("trace drift {:.3e}", self.trace_drift));
        }
        if self.hermiticity_defect > DENSITY_HERMITIAN_TOL {
            return Some(format!("hermiticity defect {:.3e}", self.hermiticity_defect));
        }
        if self.min_eigenvalue < DENSITY_MIN_EIGENVALUE {
            return Some(format!("negative eigenvalue {:.3e}", self.min_eigenvalue));
        }
        None
    }
}

/// Pure state vector or density matrix on a composite space.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState {
    data: StateData,
    dims: Vec<usize>,
}

impl QuantumState {
    pub fn pure(psi: CVector, dims: Vec<usize>) -> Result<Self> {
        check_dims(&dims, psi.len())?;
        let norm = psi.norm();
        if (norm - 1.0).abs() > PURE_NORM_TOL {
            return Err(Error::param("psi", format!("state norm {norm} is not 1")));
        }
        Ok(Self {
            data: StateData::Pure(psi),
            dims,
        })
    }

    /// Normalize and wrap an arbitrary non-zero vector.
    pub fn pure_normalized(psi: CVector, dims: Vec<usize>) -> Result<Self> {
        let norm = psi.norm();
        if norm == 0.0 {
            return Err(Error::param("psi", "zero vector"));
        }
        Self::pure(psi.unscale(norm), dims)
    }

    pub fn density(rho: CMatrix, dims: Vec<usize>) -> Result<Self> {
        if !rho.is_square() {
            return Err(Error::param("rho", "density matrix must be square"));
        }
        check_dims(&dims, rho.nrows())?;
        if let Some(v) = DensityDiagnostics::of(&rho).violation() {
            return Err(Error::param("rho", v));
        }
        Ok(Self {
            data: StateData::Density(rho),
            dims,
        })
    }

    /// Wrap a density matrix produced by a trusted integrator, skipping checks.
    pub(crate) fn density_unchecked(rho: CMatrix, dims: Vec<usize>) -> Self {
        Self {
            data: StateData::Density(rho),
            dims,
        }
    }

    pub fn basis(dims: &[usize], index: usize) -> Result<Self> {
        let n = product(dims);
        if index >= n {
            return Err(Error::Usage(format!("basis index {index} out of range {n}")));
        }
        Self::pure(basis_vector(dims, index), dims.to_vec())
    }

    pub fn kind(&self) -> StateKind {
        match self.data {
            StateData::Pure(_) => StateKind::Pure,
            StateData::Density(_) => StateKind::Density,
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        product(&self.dims)
    }

    pub fn as_pure(&self) -> Option<&CVector> {
        match &self.data {
            StateData::Pure(v) => Some(v),
            StateData::Density(_) => None,
        }
    }

    pub fn density_matrix(&self) -> CMatrix {
        match &self.data {
            StateData::Pure(v) => v * v.adjoint(),
            StateData::Density(m) => m.clone(),
        }
    }

    pub fn to_density(&self) -> Self {
        Self {
            data: StateData::Density(self.density_matrix()),
            dims: self.dims.clone(),
        }
    }

    pub fn diagnostics(&self) -> DensityDiagnostics {
        match &self.data {
            StateData::Pure(v) => DensityDiagnostics {
                trace_drift: (v.norm_squared() - 1.0).abs(),
                hermiticity_defect: 0.0,
                min_eigenvalue: 0.0,
            },
            StateData::Density(m) => DensityDiagnostics::of(m),
        }
    }

    /// Reduced density matrix on the subsystems listed in `keep`, in their
    /// original order.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        let rho = self.density_matrix();
        let (reduced, dims) = partial_trace(&rho, &self.dims, keep)?;
        Ok(Self::density_unchecked(reduced, dims))
    }
}

/// Trace out every subsystem not listed in `keep`.
pub fn partial_trace(
    rho: &CMatrix,
    dims: &[usize],
    keep: &[usize],
) -> Result<(CMatrix, Vec<usize>)> {
    check_dims(dims, rho.nrows())?;
    let mut sorted = keep.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != keep.len() || sorted.iter().any(|&k| k >= dims.len()) {
        return Err(Error::Usage(format!("invalid subsystem selection {keep:?}")));
    }
    let kept_dims: Vec<usize> = sorted.iter().map(|&k| dims[k]).collect();
    let n_kept = product(&kept_dims);
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !sorted.contains(k)).collect();
    let traced_dims: Vec<usize> = traced.iter().map(|&k| dims[k]).collect();
    let n_traced = product(&traced_dims);

    let full_index = |kept: usize, env: usize| -> usize {
        let kl = basis_levels(&kept_dims, kept);
        let el = basis_levels(&traced_dims, env);
        let mut levels = vec![0; dims.len()];
        for (pos, &k) in sorted.iter().enumerate() {
            levels[k] = kl[pos];
        }
        for (pos, &k) in traced.iter().enumerate() {
            levels[k] = el[pos];
        }
        levels.iter().zip(dims).fold(0, |acc, (&l, &d)| acc * d + l)
    };

    let mut out = CMatrix::zeros(n_kept, n_kept);
    for i in 0..n_kept {
        for j in 0..n_kept {
            let mut acc = ZERO;
            for e in 0..n_traced {
                acc += rho[(full_index(i, e), full_index(j, e))];
            }
            out[(i, j)] = acc;
        }
    }
    Ok((out, kept_dims))
}

/// `Tr(rho A)`.
pub fn expectation(state: &QuantumState, op: &Operator) -> Result<C64> {
    if state.dim() != op.dim() {
        return Err(Error::DimensionMismatch {
            expected: op.dim(),
            got: state.dim(),
        });
    }
    Ok(match &state.data {
        StateData::Pure(v) => (v.adjoint() * (op.matrix() * v))[(0, 0)],
        StateData::Density(rho) => trace_product(rho, op.matrix()),
    })
}

/// `Tr(A B)` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pauli_z() -> Operator {
        Operator::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]]).unwrap()
    }

    fn pauli_x() -> Operator {
        Operator::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap()
    }

    #[test]
    fn tensor_of_identities_is_identity() {
        let id = Operator::identity(&[2]);
        let t = tensor(&[id.clone(), id]).unwrap();
        assert_eq!(t.dims(), &[2, 2]);
        assert_eq!(t.max_abs_diff(&Operator::identity(&[2, 2])), 0.0);
    }

    #[test]
    fn tensor_sigma_z_identity_is_diagonal() {
        let t = tensor(&[pauli_z(), Operator::identity(&[2])]).unwrap();
        let expected = [1.0, 1.0, -1.0, -1.0];
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { expected[i] } else { 0.0 };
                assert_eq!(t.get(i, j), C64::new(want, 0.0));
            }
        }
    }

    #[test]
    fn tensor_rejects_empty_list() {
        assert!(matches!(tensor(&[]), Err(Error::Usage(_))));
    }

    #[test]
    fn operator_rejects_bad_space_labels() {
        assert!(Operator::new(CMatrix::identity(4, 4), vec![3]).is_err());
        assert!(Operator::new(CMatrix::zeros(2, 3), vec![2]).is_err());
    }

    #[test]
    fn zero_hamiltonian_gives_identity() {
        let u = matrix_exponential_propagator(&Operator::zeros(&[3]), 7.5).unwrap();
        assert_abs_diff_eq!(u.max_abs_diff(&Operator::identity(&[3])), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn half_rabi_flop_is_minus_i_sigma_x() {
        let omega = 2.7;
        let h = pauli_x().scale_real(omega / 2.0);
        let u = matrix_exponential_propagator(&h, std::f64::consts::PI / omega).unwrap();
        let expected = pauli_x().scale(-I);
        assert!(u.max_abs_diff(&expected) < 1e-12);
        assert!(u.is_unitary(1e-12));
    }

    #[test]
    fn propagator_rejects_non_hermitian_and_negative_time() {
        let m = Operator::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        assert!(matches!(
            matrix_exponential_propagator(&m, 1.0),
            Err(Error::NotHermitian { .. })
        ));
        assert!(matrix_exponential_propagator(&pauli_x(), -1.0).is_err());
    }

    #[test]
    fn annihilation_ladder() {
        let a = annihilation_operator(1).unwrap();
        assert_eq!(a.get(0, 1), ONE);
        assert_eq!(a.get(1, 0), ZERO);
        let a2 = annihilation_operator(2).unwrap();
        assert_abs_diff_eq!(a2.get(1, 2).re, 2f64.sqrt(), epsilon = 1e-15);
        assert!(annihilation_operator(0).is_err());
    }

    #[test]
    fn truncated_commutator_has_top_level_correction() {
        for n_max in 1..5 {
            let a = annihilation_operator(n_max).unwrap();
            let c = commutator(&a, &a.dagger()).unwrap();
            let n = n_max + 1;
            let mut expected = Operator::identity(&[n]);
            expected = &expected - &basis_projector(&[n], n_max).unwrap().scale_real(n as f64);
            assert!(c.max_abs_diff(&expected) < 1e-12, "n_max = {n_max}");
        }
    }

    #[test]
    fn expectation_of_hermitian_is_real() {
        let psi = QuantumState::pure_normalized(
            CVector::from_vec(vec![C64::new(1.0, 0.5), C64::new(-0.3, 0.2)]),
            vec![2],
        )
        .unwrap();
        let e = expectation(&psi, &pauli_x()).unwrap();
        assert!(e.im.abs() < 1e-12);
        let e_rho = expectation(&psi.to_density(), &pauli_x()).unwrap();
        assert!((e - e_rho).norm() < 1e-12);
    }

    #[test]
    fn state_validation() {
        let v = CVector::from_vec(vec![ONE, ONE]);
        assert!(QuantumState::pure(v.clone(), vec![2]).is_err());
        assert!(QuantumState::pure_normalized(v, vec![2]).is_ok());
        let bad = CMatrix::from_diagonal(&CVector::from_vec(vec![C64::new(1.2, 0.0), C64::new(-0.2, 0.0)]));
        assert!(QuantumState::density(bad, vec![2]).is_err());
        let mixed = CMatrix::identity(3, 3) * C64::new(1.0 / 3.0, 0.0);
        assert!(QuantumState::density(mixed, vec![3]).is_ok());
    }

    #[test]
    fn partial_trace_of_product_state() {
        let dims = [2, 3];
        let idx = basis_index(&dims, &[1, 2]).unwrap();
        let s = QuantumState::basis(&dims, idx).unwrap();
        let r = s.partial_trace(&[0]).unwrap().density_matrix();
        assert_eq!(r[(1, 1)], ONE);
        assert_eq!(r[(0, 0)], ZERO);
        let r = s.partial_trace(&[1]).unwrap().density_matrix();
        assert_eq!(r[(2, 2)], ONE);
    }

    #[test]
    fn basis_index_roundtrip() {
        let dims = [3, 4, 3];
        for idx in 0..36 {
            assert_eq!(basis_index(&dims, &basis_levels(&dims, idx)).unwrap(), idx);
        }
    }
}
