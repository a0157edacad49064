//! Random instances for property suites.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::contour::HamiltonianSchedule;
use crate::histories::BasisSet;
use crate::linalg::{default_labels, matrix_exponential, Operator, StateVector, UnitaryOperator};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// `(G + G†)/2` for a complex Gaussian `G`.
pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Operator {
    let g = DMatrix::from_fn(dim, dim, |_, _| gaussian(rng));
    let h = (&g + g.adjoint()) * Complex64::new(0.5, 0.0);
    Operator::new(h).expect("finite square matrix")
}

pub fn random_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> StateVector {
    loop {
        let amps: Vec<Complex64> = (0..dim).map(|_| gaussian(rng)).collect();
        if let Ok(s) = StateVector::normalized(amps, default_labels(dim)) {
            return s;
        }
    }
}

/// `exp(-i H)` for a random Hermitian `H` scaled so the spectrum spans a few radians.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> UnitaryOperator {
    matrix_exponential(&random_hermitian(dim, rng), 2.0).expect("Hermitian generator")
}

/// The columns of a random unitary, labelled `b0, b1, ...`.
pub fn random_basis<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> BasisSet {
    let u = random_unitary(dim, rng);
    let m = u.as_operator().matrix();
    let members = (0..dim)
        .map(|k| {
            let col: Vec<Complex64> = m.column(k).iter().copied().collect();
            let state = StateVector::normalized(col, default_labels(dim)).expect("unit column");
            (format!("b{k}"), state)
        })
        .collect();
    BasisSet::new(members).expect("unitary columns are orthonormal")
}

/// `segments` random Hermitian pieces on a random strictly increasing grid
/// starting at `start`.
pub fn random_schedule<R: Rng + ?Sized>(
    dim: usize,
    segments: usize,
    start: f64,
    rng: &mut R,
) -> HamiltonianSchedule {
    let mut grid = vec![start];
    for _ in 0..segments {
        let last = grid[grid.len() - 1];
        grid.push(last + rng.random_range(0.1..1.0));
    }
    let hs = (0..segments).map(|_| random_hermitian(dim, rng)).collect();
    HamiltonianSchedule::new(grid, hs).expect("valid random schedule")
}
