//! Test-side oracles, written independently of the library's spectral
//! exponential.
#![allow(dead_code)]

use fpf_core::contour::HamiltonianSchedule;
use fpf_core::linalg::{Operator, StateVector};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type CMat = DMatrix<Complex64>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn one_norm(m: &CMat) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `exp(-i h dt)` by scaling and squaring of a truncated Taylor series.
pub fn taylor_exp(h: &CMat, dt: f64) -> CMat {
    let n = h.nrows();
    let a = h * Complex64::new(0.0, -dt);
    let norm = one_norm(&a);
    let mut squarings = 0;
    let mut scale = 1.0;
    while norm * scale > 0.25 {
        scale *= 0.5;
        squarings += 1;
    }
    let a = &a * Complex64::new(scale, 0.0);
    let mut term = CMat::identity(n, n);
    let mut sum = CMat::identity(n, n);
    for k in 1..=24 {
        term = &term * &a * Complex64::new(1.0 / k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// Fine-step product of Taylor step propagators along a schedule. The
/// steps are shared out among segments in proportion to their length, so
/// no step straddles a grid point.
pub fn trotter(sched: &HamiltonianSchedule, t_from: f64, t_to: f64, steps: usize) -> CMat {
    let d = sched.dim();
    let mut u = CMat::identity(d, d);
    let span = t_to - t_from;
    for (w, h) in sched.grid().windows(2).zip(sched.segments()) {
        let (a, b) = (t_from.max(w[0]), t_to.min(w[1]));
        if b <= a {
            continue;
        }
        let n = ((steps as f64 * (b - a) / span).round() as usize).max(1);
        let step = taylor_exp(h.matrix(), (b - a) / n as f64);
        for _ in 0..n {
            u = &step * u;
        }
    }
    u
}

pub fn max_diff(a: &CMat, b: &CMat) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn ket(s: &StateVector) -> DVector<Complex64> {
    DVector::from_column_slice(s.components())
}

/// `⟨a|m|b⟩` straight from components.
pub fn sandwich(a: &StateVector, m: &CMat, b: &StateVector) -> Complex64 {
    ket(a).dotc(&(m * ket(b)))
}

pub fn overlap(a: &StateVector, b: &StateVector) -> Complex64 {
    ket(a).dotc(&ket(b))
}

/// Oracle propagator `U(t_to, t_from)` for forward `t_from <= t_to`, built
/// segment by segment from Taylor exponentials.
pub fn oracle_propagator(sched: &HamiltonianSchedule, t_from: f64, t_to: f64) -> CMat {
    let (lo, hi, invert) = if t_from <= t_to {
        (t_from, t_to, false)
    } else {
        (t_to, t_from, true)
    };
    let d = sched.dim();
    let mut u = CMat::identity(d, d);
    for (w, h) in sched.grid().windows(2).zip(sched.segments()) {
        let a = lo.max(w[0]);
        let b = hi.min(w[1]);
        if b > a {
            u = taylor_exp(h.matrix(), b - a) * u;
        }
    }
    if invert {
        u.adjoint()
    } else {
        u
    }
}

pub fn op(m: CMat) -> Operator {
    Operator::new(m).unwrap()
}
