//! Dense complex linear algebra for small Hilbert spaces.
//!
//! States are normalized column vectors carrying opaque basis labels;
//! operators are square complex matrices. Everything here is a pure value
//! type, so results may be shared freely between threads.
//!
//! Natural units are used throughout (ħ = 1): a Hamiltonian `h` held for a
//! duration `dt` generates `exp(-i h dt)`.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Amplitude = Complex64;

/// Unnormalized column vector, the result of applying a general operator.
pub type Ket = DVector<Complex64>;

pub const NORM_TOL: f64 = 1e-10;
pub const UNITARITY_TOL: f64 = 1e-10;
pub const HERMITICITY_TOL: f64 = 1e-10;
pub const COMPOSE_TOL: f64 = 1e-9;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Labels `"0"`, `"1"`, ... used when a caller does not name the basis.
pub fn default_labels(dim: usize) -> Vec<String> {
    (0..dim).map(|k| k.to_string()).collect()
}

/// A normalized pure state.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amps: Ket,
    labels: Vec<String>,
}

impl StateVector {
    /// Builds a state from components that must already be unit norm.
    pub fn new(components: Vec<Complex64>, labels: Vec<String>) -> Result<Self> {
        let amps = Self::validated(components, &labels)?;
        let norm = amps.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::Normalization { norm });
        }
        Ok(StateVector { amps, labels })
    }

    /// Builds a state by rescaling `components` to unit norm.
    pub fn normalized(components: Vec<Complex64>, labels: Vec<String>) -> Result<Self> {
        let amps = Self::validated(components, &labels)?;
        let norm = amps.norm();
        if norm < NORM_TOL {
            return Err(Error::Normalization { norm });
        }
        Ok(StateVector {
            amps: amps.unscale(norm),
            labels,
        })
    }

    /// Rescales a ket produced by some operator application.
    pub fn from_ket(ket: Ket, labels: Vec<String>) -> Result<Self> {
        Self::normalized(ket.iter().copied().collect(), labels)
    }

    /// Real-valued components with default labels, rescaled to unit norm.
    pub fn from_real(components: &[f64]) -> Result<Self> {
        Self::normalized(
            components.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
            default_labels(components.len()),
        )
    }

    /// The `k`-th element of the labelled basis.
    pub fn basis_state(labels: &[String], k: usize) -> Result<Self> {
        if k >= labels.len() {
            return Err(Error::Dimension {
                expected: labels.len(),
                found: k + 1,
            });
        }
        let mut amps = Ket::zeros(labels.len());
        amps[k] = ONE;
        Ok(StateVector {
            amps,
            labels: labels.to_vec(),
        })
    }

    /// `|k⟩` in dimension `dim` with default labels.
    pub fn basis(dim: usize, k: usize) -> Result<Self> {
        Self::basis_state(&default_labels(dim), k)
    }

    fn validated(components: Vec<Complex64>, labels: &[String]) -> Result<Ket> {
        if components.is_empty() {
            return Err(Error::Dimension {
                expected: 1,
                found: 0,
            });
        }
        if labels.len() != components.len() {
            return Err(Error::Dimension {
                expected: components.len(),
                found: labels.len(),
            });
        }
        if components
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite("state components"));
        }
        Ok(Ket::from_vec(components))
    }

    /// Wraps a vector already known to be normalized (e.g. a unitary image).
    pub(crate) fn from_unit_ket(amps: Ket, labels: Vec<String>) -> Self {
        debug_assert!((amps.norm() - 1.0).abs() < 1e-8);
        StateVector { amps, labels }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn components(&self) -> &[Complex64] {
        self.amps.as_slice()
    }

    pub fn amplitude(&self, k: usize) -> Complex64 {
        self.amps[k]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn as_ket(&self) -> &Ket {
        &self.amps
    }

    /// Same state multiplied by the global phase `e^{iθ}`.
    pub fn with_phase(&self, theta: f64) -> Self {
        let phase = Complex64::from_polar(1.0, theta);
        StateVector {
            amps: &self.amps * phase,
            labels: self.labels.clone(),
        }
    }

    pub fn relabel(self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                found: labels.len(),
            });
        }
        Ok(StateVector { labels, ..self })
    }
}

impl fmt::Display for StateVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self
            .amps
            .iter()
            .zip(&self.labels)
            .filter(|(z, _)| z.norm() > 1e-14)
            .map(|(z, l)| format!("({:.6}{:+.6}i)|{}⟩", z.re, z.im, l))
            .collect();
        write!(f, "{}", terms.join(" + "))
    }
}

/// `⟨bra|ket⟩ = Σ conj(bra_i) ket_i`.
pub fn inner_product(bra: &StateVector, ket: &StateVector) -> Result<Amplitude> {
    check_dim(bra.dim(), ket.dim())?;
    Ok(bra.amps.dotc(&ket.amps))
}

/// Matrix-vector product; the result is not renormalized.
pub fn apply(op: &Operator, v: &StateVector) -> Result<Ket> {
    check_dim(op.dim(), v.dim())?;
    Ok(&op.m * &v.amps)
}

/// `⟨bra| op |ket⟩`.
pub fn bracket(bra: &StateVector, op: &Operator, ket: &StateVector) -> Result<Amplitude> {
    check_dim(bra.dim(), op.dim())?;
    Ok(bra.amps.dotc(&apply(op, ket)?))
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Dimension { expected, found })
    }
}

/// Square complex matrix with finite entries.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    m: DMatrix<Complex64>,
}

impl Operator {
    pub fn new(m: DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() == 0 {
            return Err(Error::Dimension {
                expected: 1,
                found: 0,
            });
        }
        check_dim(m.nrows(), m.ncols())?;
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("operator entries"));
        }
        Ok(Operator { m })
    }

    /// Row-major construction.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let n = rows.len();
        for r in rows {
            check_dim(n, r.len())?;
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let rows: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn identity(dim: usize) -> Self {
        Operator {
            m: DMatrix::identity(dim, dim),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Operator {
            m: DMatrix::zeros(dim, dim),
        }
    }

    pub fn pauli_x() -> Self {
        Operator {
            m: DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
        }
    }

    pub fn pauli_y() -> Self {
        let i = Complex64::i();
        Operator {
            m: DMatrix::from_row_slice(2, 2, &[ZERO, -i, i, ZERO]),
        }
    }

    pub fn pauli_z() -> Self {
        Operator {
            m: DMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
        }
    }

    /// The symmetric 50:50 splitter `(|0⟩⟨0| + |0⟩⟨1| + |1⟩⟨0| - |1⟩⟨1|)/√2`.
    pub fn hadamard() -> Self {
        let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Operator {
            m: DMatrix::from_row_slice(2, 2, &[s, s, s, -s]),
        }
    }

    /// `|v⟩⟨v|`.
    pub fn projector(v: &StateVector) -> Self {
        Operator {
            m: &v.amps * v.amps.adjoint(),
        }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.m
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.m[(i, j)]
    }

    pub fn adjoint(&self) -> Self {
        Operator {
            m: self.m.adjoint(),
        }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Operator { m: &self.m * c }
    }

    pub fn add(&self, other: &Operator) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        Ok(Operator {
            m: &self.m + &other.m,
        })
    }

    /// `self · other`.
    pub fn mul(&self, other: &Operator) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        Ok(Operator {
            m: &self.m * &other.m,
        })
    }

    /// `max |A - B|` over entries.
    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        if self.dim() != other.dim() {
            return f64::INFINITY;
        }
        max_abs(&(&self.m - &other.m))
    }

    /// `‖A - A†‖_max`.
    pub fn hermiticity_deviation(&self) -> f64 {
        max_abs(&(&self.m - self.m.adjoint()))
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_deviation() <= HERMITICITY_TOL
    }

    /// `‖A†A - I‖_max`.
    pub fn unitarity_deviation(&self) -> f64 {
        let n = self.dim();
        max_abs(&(self.m.adjoint() * &self.m - DMatrix::<Complex64>::identity(n, n)))
    }
}

/// `true` iff `‖U†U − I‖_max ≤ UNITARITY_TOL`.
pub fn check_unitary(u: &Operator) -> bool {
    u.unitarity_deviation() <= UNITARITY_TOL
}

/// An operator verified to be unitary.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryOperator(Operator);

impl UnitaryOperator {
    pub fn new(op: Operator) -> Result<Self> {
        let deviation = op.unitarity_deviation();
        if deviation > UNITARITY_TOL {
            return Err(Error::Unitarity { deviation });
        }
        Ok(UnitaryOperator(op))
    }

    pub fn identity(dim: usize) -> Self {
        UnitaryOperator(Operator::identity(dim))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn as_operator(&self) -> &Operator {
        &self.0
    }

    pub fn into_operator(self) -> Operator {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        UnitaryOperator(self.0.adjoint())
    }

    /// `self · other`. Products of unitaries stay unitary, so no recheck.
    pub fn compose(&self, other: &UnitaryOperator) -> Result<Self> {
        Ok(UnitaryOperator(self.0.mul(&other.0)?))
    }

    /// `U|v⟩` as a state carrying the labels of `v`.
    pub fn evolve(&self, v: &StateVector) -> Result<StateVector> {
        let ket = apply(&self.0, v)?;
        Ok(StateVector::from_unit_ket(ket, v.labels.clone()))
    }
}

/// `exp(-i h dt)` for Hermitian `h`, via the spectral decomposition
/// `h = V diag(λ) V†`.
pub fn matrix_exponential(h: &Operator, dt: f64) -> Result<UnitaryOperator> {
    let deviation = h.hermiticity_deviation();
    if deviation > HERMITICITY_TOL {
        return Err(Error::Hermiticity { deviation });
    }
    if !dt.is_finite() {
        return Err(Error::NonFinite("time step"));
    }
    if dt == 0.0 {
        return Ok(UnitaryOperator::identity(h.dim()));
    }
    // Symmetrize so the eigensolver sees an exactly Hermitian input.
    let sym = (&h.m + h.m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = sym.symmetric_eigen();
    let phases = eig
        .eigenvalues
        .map(|lambda| Complex64::from_polar(1.0, -lambda * dt));
    let v = &eig.eigenvectors;
    let m = v * DMatrix::from_diagonal(&phases) * v.adjoint();
    Ok(UnitaryOperator(Operator { m }))
}
