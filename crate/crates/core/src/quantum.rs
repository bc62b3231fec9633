//! Finite-dimensional states, observables and unitary evolution.
//!
//! Everything here is dense and small (dimension up to a few dozen). Hermitian
//! matrices are diagonalised once at construction; time evolution is then the
//! exact exponential `V exp(-i diag(lambda) t) V^dagger`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Tolerance for properties that hold by construction (normalisation, hermiticity).
pub const CONSTRUCTION_TOL: f64 = 1e-12;
/// Tolerance for derived identities (unitarity, spectral reconstruction).
pub const IDENTITY_TOL: f64 = 1e-10;

pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// A vector in a `dim`-dimensional Hilbert space.
///
/// The vector is not required to be normalised; operations that need a
/// normalised input check it with [`StateVector::ensure_normalized`].
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: DVector<C64>,
}

impl StateVector {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() < 2 {
            return Err(Error::DimensionTooSmall(amplitudes.len()));
        }
        if amplitudes.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("state vector".into()));
        }
        Ok(Self {
            amps: DVector::from_vec(amplitudes),
        })
    }

    /// Builds a state and rescales it to unit norm.
    pub fn normalized(amplitudes: Vec<C64>) -> Result<Self> {
        let state = Self::new(amplitudes)?;
        let norm = state.norm();
        if norm == 0.0 {
            return Err(Error::NotNormalized {
                context: "zero vector".into(),
                norm_sqr: 0.0,
            });
        }
        Ok(state.scaled(1.0 / norm))
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::new(amplitudes.iter().map(|&x| c(x, 0.0)).collect())
    }

    /// Computational basis vector `|index>` (zero-based).
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::InvalidArgument(format!(
                "basis index {index} out of range for dimension {dim}"
            )));
        }
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[index] = c(1.0, 0.0);
        Self::new(amps)
    }

    pub(crate) fn from_dvector(amps: DVector<C64>) -> Self {
        Self { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        self.amps.as_slice()
    }

    pub fn as_dvector(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= CONSTRUCTION_TOL
    }

    pub fn ensure_normalized(&self, context: &str) -> Result<()> {
        if self.is_normalized() {
            Ok(())
        } else {
            Err(Error::NotNormalized {
                context: context.into(),
                norm_sqr: self.norm_sqr(),
            })
        }
    }

    /// `<self|other>`, antilinear in `self`.
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amps.dotc(&other.amps)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            amps: self.amps.map(|z| z * factor),
        }
    }

    pub fn ensure_dim(&self, dim: usize, context: &str) -> Result<()> {
        if self.dim() == dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                context: context.into(),
                expected: dim,
                found: self.dim(),
            })
        }
    }
}

/// Completes a set of orthonormal vectors to an orthonormal basis.
///
/// The returned vectors are the *additional* ones, in a deterministic order
/// obtained by orthogonalising the computational basis vectors against
/// everything accepted so far.
pub fn complete_basis(vectors: &[StateVector]) -> Result<Vec<StateVector>> {
    let dim = match vectors.first() {
        Some(v) => v.dim(),
        None => return Err(Error::InvalidArgument("empty vector set".into())),
    };
    for v in vectors {
        v.ensure_dim(dim, "basis completion")?;
    }
    let mut accepted: Vec<DVector<C64>> = vectors.iter().map(|v| v.amps.clone()).collect();
    let mut extra = Vec::new();
    for j in 0..dim {
        if accepted.len() == dim {
            break;
        }
        let mut cand = DVector::from_element(dim, c(0.0, 0.0));
        cand[j] = c(1.0, 0.0);
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for a in &accepted {
                let proj = a.dotc(&cand);
                cand -= a * proj;
            }
        }
        let norm = cand.norm();
        if norm > 1e-6 {
            let v = cand / c(norm, 0.0);
            accepted.push(v.clone());
            extra.push(StateVector::from_dvector(fix_phase(v)));
        }
    }
    if accepted.len() != dim {
        return Err(Error::NotOrthonormal("basis completion input".into()));
    }
    Ok(extra)
}

/// Gram matrix deviation `max |<v_i|v_j> - delta_ij|`.
pub fn orthonormality_defect(vectors: &[StateVector]) -> f64 {
    let mut worst = 0.0f64;
    for (i, a) in vectors.iter().enumerate() {
        for (j, b) in vectors.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((a.inner(b) - c(target, 0.0)).norm());
        }
    }
    worst
}

// First component with non-negligible modulus is made real and positive.
fn fix_phase(mut v: DVector<C64>) -> DVector<C64> {
    let scale = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if let Some(pivot) = v.iter().find(|z| z.norm() > 1e-10 * scale.max(1e-300)).copied() {
        let phase = pivot.conj() / pivot.norm();
        v *= phase;
    }
    v
}

fn frobenius(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn check_square(m: &DMatrix<C64>, context: &str) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            context: format!("{context} (non-square)"),
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    if m.nrows() < 2 {
        return Err(Error::DimensionTooSmall(m.nrows()));
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite(context.into()));
    }
    Ok(m.nrows())
}

pub fn is_hermitian(m: &DMatrix<C64>) -> bool {
    m.nrows() == m.ncols() && frobenius(&(m - m.adjoint())) <= CONSTRUCTION_TOL * frobenius(m)
}

/// Eigenpairs of a Hermitian matrix, sorted by ascending eigenvalue, with the
/// phase convention applied to every eigenvector.
fn hermitian_eigen(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let dim = m.nrows();
    // symmetrise exactly before handing to the solver
    let sym = (m + m.adjoint()) * c(0.5, 0.0);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::from_element(dim, dim, c(0.0, 0.0));
    for (col, &i) in order.iter().enumerate() {
        let v = fix_phase(eig.eigenvectors.column(i).into_owned());
        vectors.set_column(col, &v);
    }
    if unitarity_defect(&vectors) > CONSTRUCTION_TOL {
        vectors = gram_schmidt_columns(&vectors);
    }
    (values, vectors)
}

fn gram_schmidt_columns(m: &DMatrix<C64>) -> DMatrix<C64> {
    let mut out = m.clone();
    for j in 0..m.ncols() {
        let mut v = out.column(j).into_owned();
        for _ in 0..2 {
            for k in 0..j {
                let u = out.column(k).into_owned();
                let proj = u.dotc(&v);
                v -= u * proj;
            }
        }
        let n = v.norm();
        out.set_column(j, &fix_phase(v / c(n, 0.0)));
    }
    out
}

fn unitarity_defect(v: &DMatrix<C64>) -> f64 {
    let n = v.ncols();
    frobenius(&(v.adjoint() * v - DMatrix::<C64>::identity(n, n)))
}

/// A Hermitian operator together with its spectral decomposition
/// `M = sum_i |i> a_i <i|`.
///
/// Eigenvector `i` labels the `i`-th branch of every virtual path passing
/// through a step that measures this observable, so the column order matters.
/// [`Observable::new`] orders eigenpairs by ascending eigenvalue;
/// [`Observable::from_eigenbasis`] keeps the order it is given.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    matrix: DMatrix<C64>,
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<C64>,
}

impl Observable {
    pub fn new(matrix: DMatrix<C64>) -> Result<Self> {
        check_square(&matrix, "observable")?;
        if !is_hermitian(&matrix) {
            return Err(Error::NotHermitian("observable".into()));
        }
        let (eigenvalues, eigenvectors) = hermitian_eigen(&matrix);
        let obs = Self {
            matrix,
            eigenvalues,
            eigenvectors,
        };
        obs.check_decomposition()?;
        Ok(obs)
    }

    /// Builds `sum_i |v_i> a_i <v_i|` from an orthonormal basis and its eigenvalues.
    pub fn from_eigenbasis(basis: &[StateVector], eigenvalues: &[f64]) -> Result<Self> {
        let dim = basis.len();
        if dim < 2 {
            return Err(Error::DimensionTooSmall(dim));
        }
        if eigenvalues.len() != dim {
            return Err(Error::DimensionMismatch {
                context: "eigenvalues".into(),
                expected: dim,
                found: eigenvalues.len(),
            });
        }
        if eigenvalues.iter().any(|a| !a.is_finite()) {
            return Err(Error::NonFinite("eigenvalues".into()));
        }
        for v in basis {
            v.ensure_dim(dim, "eigenbasis")?;
        }
        if orthonormality_defect(basis) > IDENTITY_TOL {
            return Err(Error::NotOrthonormal("eigenbasis".into()));
        }
        let mut vectors = DMatrix::from_element(dim, dim, c(0.0, 0.0));
        for (j, v) in basis.iter().enumerate() {
            vectors.set_column(j, &v.amps);
        }
        let diag = DMatrix::from_diagonal(&DVector::from_iterator(
            dim,
            eigenvalues.iter().map(|&a| c(a, 0.0)),
        ));
        let mut matrix = &vectors * diag * vectors.adjoint();
        matrix = (&matrix + matrix.adjoint()) * c(0.5, 0.0);
        let obs = Self {
            matrix,
            eigenvalues: eigenvalues.to_vec(),
            eigenvectors: vectors,
        };
        obs.check_decomposition()?;
        Ok(obs)
    }

    /// Diagonal observable in the computational basis, eigenvalues in the given order.
    pub fn diagonal(eigenvalues: &[f64]) -> Result<Self> {
        let dim = eigenvalues.len();
        let basis = (0..dim)
            .map(|i| StateVector::basis(dim, i))
            .collect::<Result<Vec<_>>>()?;
        Self::from_eigenbasis(&basis, eigenvalues)
    }

    /// Projector `|v><v|` onto a normalised state; `v` is eigenvector 0 with
    /// eigenvalue 1, the completion follows with eigenvalue 0.
    pub fn projector(state: &StateVector) -> Result<Self> {
        state.ensure_normalized("projector state")?;
        let mut basis = vec![state.clone()];
        basis.extend(complete_basis(&basis)?);
        let mut values = vec![0.0; state.dim()];
        values[0] = 1.0;
        Self::from_eigenbasis(&basis, &values)
    }

    pub fn pauli_x() -> Self {
        Self::new(DMatrix::from_row_slice(
            2,
            2,
            &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
        ))
        .expect("pauli x is hermitian")
    }

    pub fn pauli_y() -> Self {
        Self::new(DMatrix::from_row_slice(
            2,
            2,
            &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)],
        ))
        .expect("pauli y is hermitian")
    }

    pub fn pauli_z() -> Self {
        Self::new(DMatrix::from_row_slice(
            2,
            2,
            &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)],
        ))
        .expect("pauli z is hermitian")
    }

    fn check_decomposition(&self) -> Result<()> {
        if unitarity_defect(&self.eigenvectors) > IDENTITY_TOL
            || self.reconstruction_defect() > IDENTITY_TOL
        {
            return Err(Error::NotOrthonormal("observable eigendecomposition".into()));
        }
        Ok(())
    }

    /// `|| sum_i |i> a_i <i| - M ||`.
    pub fn reconstruction_defect(&self) -> f64 {
        let dim = self.dim();
        let diag = DMatrix::from_diagonal(&DVector::from_iterator(
            dim,
            self.eigenvalues.iter().map(|&a| c(a, 0.0)),
        ));
        frobenius(&(&self.eigenvectors * diag * self.eigenvectors.adjoint() - &self.matrix))
    }

    pub fn eigenvector_unitarity_defect(&self) -> f64 {
        unitarity_defect(&self.eigenvectors)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn ensure_dim(&self, dim: usize, context: &str) -> Result<()> {
        if self.dim() == dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                context: context.into(),
                expected: dim,
                found: self.dim(),
            })
        }
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<C64> {
        &self.eigenvectors
    }

    pub fn eigenvector(&self, i: usize) -> StateVector {
        StateVector::from_dvector(self.eigenvectors.column(i).into_owned())
    }

    /// `<psi|M|psi>`; real for a Hermitian `M`.
    pub fn expectation(&self, state: &StateVector) -> f64 {
        state.amps.dotc(&(&self.matrix * &state.amps)).re
    }

    pub fn commutator_norm(&self, other: &Observable) -> f64 {
        frobenius(&(&self.matrix * &other.matrix - &other.matrix * &self.matrix))
    }
}

/// Time evolution under a constant Hamiltonian (hbar = 1).
#[derive(Debug, Clone, PartialEq)]
pub struct Propagator {
    hamiltonian: DMatrix<C64>,
    // None for the zero Hamiltonian, where U(t) = I exactly
    spectrum: Option<(Vec<f64>, DMatrix<C64>)>,
}

impl Propagator {
    pub fn new(hamiltonian: DMatrix<C64>) -> Result<Self> {
        check_square(&hamiltonian, "hamiltonian")?;
        if !is_hermitian(&hamiltonian) {
            return Err(Error::NotHermitian("hamiltonian".into()));
        }
        let spectrum = if hamiltonian.iter().all(|z| *z == c(0.0, 0.0)) {
            None
        } else {
            Some(hermitian_eigen(&hamiltonian))
        };
        Ok(Self {
            hamiltonian,
            spectrum,
        })
    }

    pub fn zero(dim: usize) -> Result<Self> {
        Self::new(DMatrix::from_element(dim, dim, c(0.0, 0.0)))
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.nrows()
    }

    pub fn hamiltonian(&self) -> &DMatrix<C64> {
        &self.hamiltonian
    }

    pub fn is_zero(&self) -> bool {
        self.spectrum.is_none()
    }

    /// `U(t) = exp(-i H t)`.
    pub fn unitary(&self, t: f64) -> DMatrix<C64> {
        let dim = self.dim();
        match &self.spectrum {
            None => DMatrix::identity(dim, dim),
            Some((values, vectors)) => {
                let phases = DVector::from_iterator(
                    dim,
                    values.iter().map(|&e| C64::from_polar(1.0, -e * t)),
                );
                vectors * DMatrix::from_diagonal(&phases) * vectors.adjoint()
            }
        }
    }

    /// Applies `U(t)` without any normalisation requirement.
    pub fn apply(&self, t: f64, state: &StateVector) -> Result<StateVector> {
        state.ensure_dim(self.dim(), "propagator application")?;
        if self.is_zero() {
            return Ok(state.clone());
        }
        Ok(StateVector::from_dvector(self.unitary(t) * &state.amps))
    }

    pub fn unitarity_defect(&self, t: f64) -> f64 {
        unitarity_defect(&self.unitary(t))
    }
}

/// `U(t)|state>` for a normalised state.
pub fn evolve(state: &StateVector, prop: &Propagator, t: f64) -> Result<StateVector> {
    if !t.is_finite() {
        return Err(Error::NonFinite("evolution time".into()));
    }
    state.ensure_dim(prop.dim(), "evolve")?;
    state.ensure_normalized("evolved state")?;
    prop.apply(t, state)
}

/// Both sides of the Robertson bound `sigma_A sigma_B >= |<[A,B]>| / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UncertaintyCheck {
    pub lhs: f64,
    pub rhs: f64,
}

impl UncertaintyCheck {
    pub fn holds(&self) -> bool {
        self.lhs >= self.rhs - IDENTITY_TOL
    }
}

pub fn robertson_check(
    state: &StateVector,
    a: &Observable,
    b: &Observable,
) -> Result<UncertaintyCheck> {
    state.ensure_dim(a.dim(), "robertson check (A)")?;
    b.ensure_dim(a.dim(), "robertson check (B)")?;
    state.ensure_normalized("robertson check state")?;
    for (m, name) in [(a, "A"), (b, "B")] {
        if !is_hermitian(m.matrix()) {
            return Err(Error::NotHermitian(format!("observable {name}")));
        }
    }
    let psi = state.as_dvector();
    let spread = |m: &DMatrix<C64>| {
        let mpsi = m * psi;
        let mean = psi.dotc(&mpsi).re;
        let second = mpsi.norm_squared();
        (second - mean * mean).max(0.0).sqrt()
    };
    let lhs = spread(a.matrix()) * spread(b.matrix());
    let comm = a.matrix() * b.matrix() - b.matrix() * a.matrix();
    let rhs = psi.dotc(&(comm * psi)).norm() / 2.0;
    Ok(UncertaintyCheck { lhs, rhs })
}

/// Outcome probabilities of a final measurement of `B`, with and without an
/// accurate intermediate measurement of `A`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisturbanceEntry {
    pub outcome: usize,
    pub eigenvalue: f64,
    pub disturbed: f64,
    pub undisturbed: f64,
}

/// Compares `|<i_B|U(T)|psi>|^2` with the sum over the intermediate
/// `A`-outcomes of the squared path amplitudes.
pub fn disturbance_gap(
    psi: &StateVector,
    a: &Observable,
    b: &Observable,
    prop: &Propagator,
    t_mid: f64,
    t_final: f64,
) -> Result<Vec<DisturbanceEntry>> {
    if !(t_mid.is_finite() && t_final.is_finite() && 0.0 < t_mid && t_mid < t_final) {
        return Err(Error::InvalidTimeOrdering(format!(
            "need 0 < t_mid < T, got t_mid = {t_mid}, T = {t_final}"
        )));
    }
    let dim = prop.dim();
    psi.ensure_dim(dim, "disturbance gap state")?;
    a.ensure_dim(dim, "disturbance gap (A)")?;
    b.ensure_dim(dim, "disturbance gap (B)")?;
    psi.ensure_normalized("disturbance gap state")?;

    let direct = prop.unitary(t_final) * psi.as_dvector();
    let first = prop.unitary(t_mid) * psi.as_dvector();
    let second = prop.unitary(t_final - t_mid);
    // <i_A|U(t_mid)|psi>
    let to_a: Vec<C64> = (0..dim)
        .map(|ia| a.eigenvectors().column(ia).dotc(&first))
        .collect();
    let mut table = Vec::with_capacity(dim);
    for ib in 0..dim {
        let bvec = b.eigenvectors().column(ib);
        let undisturbed = bvec.dotc(&direct).norm_sqr();
        let disturbed = (0..dim)
            .map(|ia| {
                let hop = bvec.dotc(&(&second * a.eigenvectors().column(ia)));
                (hop * to_a[ia]).norm_sqr()
            })
            .sum();
        table.push(DisturbanceEntry {
            outcome: ib,
            eigenvalue: b.eigenvalues()[ib],
            disturbed,
            undisturbed,
        });
    }
    Ok(table)
}
