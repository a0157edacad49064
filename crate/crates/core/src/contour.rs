//! The two-branch time contour.
//!
//! The forward branch runs chronologically from the earliest time to the
//! latest; the backward branch returns anti-chronologically. A single
//! piecewise-constant [`HamiltonianSchedule`] drives both branches, so the
//! Hamiltonian is branch-independent by construction.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::linalg::{matrix_exponential, Operator, StateVector, UnitaryOperator, HERMITICITY_TOL};

/// Branch of the contour.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Branch {
    Forward,
    Backward,
}

/// A physical time tagged with the branch it sits on.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContourTime {
    t: f64,
    branch: Branch,
}

impl ContourTime {
    pub fn new(t: f64, branch: Branch) -> Result<Self> {
        if !t.is_finite() {
            return Err(Error::NonFinite("contour time"));
        }
        Ok(ContourTime { t, branch })
    }

    pub fn forward(t: f64) -> Result<Self> {
        Self::new(t, Branch::Forward)
    }

    pub fn backward(t: f64) -> Result<Self> {
        Self::new(t, Branch::Backward)
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn branch(&self) -> Branch {
        self.branch
    }
}

/// Position of `z1` relative to `z2` along the contour: `Less` means `z1`
/// comes first.
pub fn contour_compare(z1: &ContourTime, z2: &ContourTime) -> Ordering {
    match (z1.branch, z2.branch) {
        (Branch::Forward, Branch::Backward) => Ordering::Less,
        (Branch::Backward, Branch::Forward) => Ordering::Greater,
        (Branch::Forward, Branch::Forward) => z1.t.total_cmp(&z2.t),
        (Branch::Backward, Branch::Backward) => z2.t.total_cmp(&z1.t),
    }
}

impl Eq for ContourTime {}

impl PartialOrd for ContourTime {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ContourTime {
    fn cmp(&self, other: &Self) -> Ordering {
        contour_compare(self, other)
    }
}

/// Piecewise-constant Hermitian Hamiltonian on a strictly increasing grid.
/// Segment `j` acts on `[grid[j], grid[j + 1]]`.
#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianSchedule {
    grid: Vec<f64>,
    segments: Vec<Operator>,
}

impl HamiltonianSchedule {
    pub fn new(grid: Vec<f64>, segments: Vec<Operator>) -> Result<Self> {
        if grid.len() < 2 {
            return Err(Error::Schedule("grid needs at least two times".into()));
        }
        if segments.len() != grid.len() - 1 {
            return Err(Error::Schedule(format!(
                "{} grid times need {} segments, found {}",
                grid.len(),
                grid.len() - 1,
                segments.len()
            )));
        }
        if grid.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFinite("schedule grid"));
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Schedule("grid must be strictly increasing".into()));
        }
        let dim = segments[0].dim();
        for h in &segments {
            if h.dim() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    found: h.dim(),
                });
            }
            let deviation = h.hermiticity_deviation();
            if deviation > HERMITICITY_TOL {
                return Err(Error::Hermiticity { deviation });
            }
        }
        Ok(HamiltonianSchedule { grid, segments })
    }

    /// One Hamiltonian held over `[start, end]`.
    pub fn constant(h: Operator, start: f64, end: f64) -> Result<Self> {
        Self::new(vec![start, end], vec![h])
    }

    /// Free evolution on the given grid.
    pub fn free(dim: usize, grid: Vec<f64>) -> Result<Self> {
        let n = grid.len().saturating_sub(1);
        Self::new(grid, vec![Operator::zeros(dim); n])
    }

    pub fn dim(&self) -> usize {
        self.segments[0].dim()
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn segments(&self) -> &[Operator] {
        &self.segments
    }

    pub fn start(&self) -> f64 {
        self.grid[0]
    }

    pub fn end(&self) -> f64 {
        self.grid[self.grid.len() - 1]
    }

    pub fn covers(&self, t: f64) -> bool {
        t >= self.start() && t <= self.end()
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if self.covers(t) {
            Ok(())
        } else {
            Err(Error::Grid {
                t,
                start: self.start(),
                end: self.end(),
            })
        }
    }

    /// The schedule generating the inverse dynamics: the grid is mirrored
    /// through its midpoint and every segment is negated, so that
    /// `U_rev(T - s, T - t) = U(s, t)` with `T = start + end`.
    pub fn time_reversed(&self) -> Self {
        let total = self.start() + self.end();
        let grid = self.grid.iter().rev().map(|t| total - t).collect();
        let segments = self
            .segments
            .iter()
            .rev()
            .map(|h| h.scale(num_complex::Complex64::new(-1.0, 0.0)))
            .collect();
        HamiltonianSchedule { grid, segments }
    }

    /// `(segment index, duration)` pairs covering `[lo, hi]` in chronological order.
    fn pieces(&self, lo: f64, hi: f64) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.grid.windows(2).enumerate().filter_map(move |(j, w)| {
            let dt = hi.min(w[1]) - lo.max(w[0]);
            (dt > 0.0).then_some((j, dt))
        })
    }

    /// Chronologically ordered product (latest factor leftmost) mapping
    /// states at `lo` to states at `hi`, for `lo <= hi`.
    fn chronological(&self, lo: f64, hi: f64) -> Result<UnitaryOperator> {
        let mut u = UnitaryOperator::identity(self.dim());
        for (j, dt) in self.pieces(lo, hi) {
            u = matrix_exponential(&self.segments[j], dt)?.compose(&u)?;
        }
        Ok(u)
    }

    /// Anti-chronologically ordered product of inverse segment exponentials
    /// (earliest factor leftmost), mapping states at `hi` back to `lo`.
    fn anti_chronological(&self, lo: f64, hi: f64) -> Result<UnitaryOperator> {
        let mut u = UnitaryOperator::identity(self.dim());
        for (j, dt) in self.pieces(lo, hi) {
            u = u.compose(&matrix_exponential(&self.segments[j], -dt)?)?;
        }
        Ok(u)
    }

    /// The unitary carrying a state at `t_from` to `t_to` on `branch`.
    ///
    /// On the forward branch the segment exponentials are multiplied
    /// chronologically. On the backward branch the contour runs from the
    /// later time to the earlier one, so the product is assembled
    /// anti-chronologically from inverse exponentials and then inverted to
    /// express it as a map `t_from → t_to`. Because the schedule is shared,
    /// `branch_propagator(b, t1, t2) = branch_propagator(f, t2, t1)†`.
    pub fn branch_propagator(
        &self,
        t_from: f64,
        t_to: f64,
        branch: Branch,
    ) -> Result<UnitaryOperator> {
        self.check_time(t_from)?;
        self.check_time(t_to)?;
        let (lo, hi) = if t_from <= t_to {
            (t_from, t_to)
        } else {
            (t_to, t_from)
        };
        let later_from_earlier = match branch {
            Branch::Forward => self.chronological(lo, hi)?,
            Branch::Backward => self.anti_chronological(lo, hi)?.adjoint(),
        };
        Ok(if t_from <= t_to {
            later_from_earlier
        } else {
            later_from_earlier.adjoint()
        })
    }

    /// Forward-branch propagator `U(t_to, t_from)`.
    pub fn propagator(&self, t_from: f64, t_to: f64) -> Result<UnitaryOperator> {
        self.branch_propagator(t_from, t_to, Branch::Forward)
    }

    /// Evolves `v` from `t_from` to `t_to` on `branch`.
    pub fn evolve(
        &self,
        v: &StateVector,
        t_from: f64,
        t_to: f64,
        branch: Branch,
    ) -> Result<StateVector> {
        self.branch_propagator(t_from, t_to, branch)?.evolve(v)
    }
}

/// Free-function form of [`HamiltonianSchedule::branch_propagator`].
pub fn branch_propagator(
    sched: &HamiltonianSchedule,
    t_from: f64,
    t_to: f64,
    branch: Branch,
) -> Result<UnitaryOperator> {
    sched.branch_propagator(t_from, t_to, branch)
}

/// Free-function form of [`HamiltonianSchedule::evolve`].
pub fn evolve(
    sched: &HamiltonianSchedule,
    v: &StateVector,
    t_from: f64,
    t_to: f64,
    branch: Branch,
) -> Result<StateVector> {
    sched.evolve(v, t_from, t_to, branch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{inner_product, Amplitude};
    use std::f64::consts::PI;

    fn fwd(t: f64) -> ContourTime {
        ContourTime::forward(t).unwrap()
    }

    fn bwd(t: f64) -> ContourTime {
        ContourTime::backward(t).unwrap()
    }

    #[test]
    fn contour_ordering() {
        assert_eq!(contour_compare(&fwd(1.0), &fwd(2.0)), Ordering::Less);
        assert_eq!(contour_compare(&bwd(1.0), &bwd(2.0)), Ordering::Greater);
        assert_eq!(contour_compare(&fwd(5.0), &bwd(1.0)), Ordering::Less);
        assert_eq!(contour_compare(&bwd(3.0), &bwd(3.0)), Ordering::Equal);
        assert_ne!(contour_compare(&fwd(3.0), &bwd(3.0)), Ordering::Equal);
    }

    #[test]
    fn contour_sort_walks_out_and_back() {
        let mut zs = vec![bwd(1.0), fwd(2.0), bwd(2.0), fwd(1.0)];
        zs.sort();
        assert_eq!(zs, vec![fwd(1.0), fwd(2.0), bwd(2.0), bwd(1.0)]);
    }

    #[test]
    fn non_finite_contour_time_rejected() {
        assert!(ContourTime::forward(f64::NAN).is_err());
    }

    #[test]
    fn schedule_validation() {
        let h = Operator::pauli_x();
        assert!(HamiltonianSchedule::new(vec![0.0], vec![]).is_err());
        assert!(HamiltonianSchedule::new(vec![0.0, 0.0], vec![h.clone()]).is_err());
        assert!(HamiltonianSchedule::new(vec![0.0, 1.0, 2.0], vec![h.clone()]).is_err());
        assert!(matches!(
            HamiltonianSchedule::new(vec![0.0, 1.0, 2.0], vec![h, Operator::zeros(3)]),
            Err(Error::Dimension { .. })
        ));
        let skew = Operator::from_real_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]).unwrap();
        assert!(matches!(
            HamiltonianSchedule::constant(skew, 0.0, 1.0),
            Err(Error::Hermiticity { .. })
        ));
    }

    #[test]
    fn empty_interval_is_identity() {
        let s = HamiltonianSchedule::constant(Operator::pauli_y(), 0.0, 2.0).unwrap();
        for branch in [Branch::Forward, Branch::Backward] {
            let u = s.branch_propagator(0.7, 0.7, branch).unwrap();
            assert_eq!(u.as_operator().max_abs_diff(&Operator::identity(2)), 0.0);
        }
    }

    #[test]
    fn single_segment_matches_exponential() {
        let s = HamiltonianSchedule::constant(Operator::pauli_y(), 0.0, 2.0).unwrap();
        let u = s.propagator(0.25, 1.5).unwrap();
        let expected = matrix_exponential(&Operator::pauli_y(), 1.25).unwrap();
        assert!(u.as_operator().max_abs_diff(expected.as_operator()) < 1e-14);
    }

    #[test]
    fn out_of_grid_times_rejected() {
        let s = HamiltonianSchedule::constant(Operator::pauli_y(), 0.0, 2.0).unwrap();
        assert!(matches!(s.propagator(-0.1, 1.0), Err(Error::Grid { .. })));
        assert!(matches!(s.propagator(0.0, 2.1), Err(Error::Grid { .. })));
    }

    #[test]
    fn two_segments_order_latest_leftmost() {
        let h1 = Operator::pauli_x();
        let h2 = Operator::pauli_z();
        let s =
            HamiltonianSchedule::new(vec![0.0, 1.0, 2.0], vec![h1.clone(), h2.clone()]).unwrap();
        let u = s.propagator(0.0, 2.0).unwrap();
        let e1 = matrix_exponential(&h1, 1.0).unwrap();
        let e2 = matrix_exponential(&h2, 1.0).unwrap();
        let expected = e2.compose(&e1).unwrap();
        assert!(u.as_operator().max_abs_diff(expected.as_operator()) < 1e-14);
        let wrong = e1.compose(&e2).unwrap();
        assert!(u.as_operator().max_abs_diff(wrong.as_operator()) > 1e-3);
    }

    #[test]
    fn partial_segments_split_analytically() {
        let s = HamiltonianSchedule::new(
            vec![0.0, 1.0, 2.0],
            vec![Operator::pauli_x(), Operator::pauli_z()],
        )
        .unwrap();
        let u = s.propagator(0.4, 1.3).unwrap();
        let expected = matrix_exponential(&Operator::pauli_z(), 0.3)
            .unwrap()
            .compose(&matrix_exponential(&Operator::pauli_x(), 0.6).unwrap())
            .unwrap();
        assert!(u.as_operator().max_abs_diff(expected.as_operator()) < 1e-14);
    }

    #[test]
    fn backward_branch_is_adjoint_of_reversed_forward() {
        let s = HamiltonianSchedule::new(
            vec![0.0, 0.5, 2.0],
            vec![
                Operator::pauli_x(),
                Operator::pauli_y().add(&Operator::pauli_z()).unwrap(),
            ],
        )
        .unwrap();
        let b = s.branch_propagator(0.2, 1.7, Branch::Backward).unwrap();
        let f = s
            .branch_propagator(1.7, 0.2, Branch::Forward)
            .unwrap()
            .adjoint();
        assert!(b.as_operator().max_abs_diff(f.as_operator()) < 1e-14);
    }

    #[test]
    fn zero_hamiltonian_leaves_state_unchanged() {
        let s = HamiltonianSchedule::free(3, vec![0.0, 1.0, 4.0]).unwrap();
        let v = StateVector::from_real(&[1.0, 2.0, 3.0]).unwrap();
        let out = s.evolve(&v, 0.0, 4.0, Branch::Forward).unwrap();
        assert_eq!(out, v);
    }

    #[test]
    fn rabi_period_returns_to_ground_state() {
        let s = HamiltonianSchedule::constant(Operator::pauli_x(), 0.0, PI).unwrap();
        let zero = StateVector::basis(2, 0).unwrap();
        let out = s.evolve(&zero, 0.0, PI, Branch::Forward).unwrap();
        // exp(-iπσx) = -I
        assert!((out.amplitude(0) + Amplitude::new(1.0, 0.0)).norm() < 1e-14);
        assert!((inner_product(&zero, &out).unwrap().norm_sqr() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn splitter_segment_acting_on_left_port() {
        // (π/2)(I - H) generates the symmetric splitter H exactly
        let gen = Operator::identity(2)
            .add(&Operator::hadamard().scale(Amplitude::new(-1.0, 0.0)))
            .unwrap()
            .scale(Amplitude::new(PI / 2.0, 0.0));
        let s = HamiltonianSchedule::constant(gen, 0.0, 1.0).unwrap();
        let labels = vec!["L".to_string(), "R".to_string()];
        let left = StateVector::basis_state(&labels, 0).unwrap();
        let out = evolve(&s, &left, 0.0, 1.0, Branch::Forward).unwrap();
        let expected = std::f64::consts::FRAC_1_SQRT_2;
        assert!((out.amplitude(0) - Amplitude::new(expected, 0.0)).norm() < 1e-14);
        assert!((out.amplitude(1) - Amplitude::new(expected, 0.0)).norm() < 1e-14);
        assert_eq!(out.labels(), &labels[..]);
    }

    #[test]
    fn time_reversed_schedule_inverts_dynamics() {
        let s = HamiltonianSchedule::new(
            vec![0.0, 1.0, 3.0],
            vec![Operator::pauli_x(), Operator::pauli_y()],
        )
        .unwrap();
        let r = s.time_reversed();
        assert_eq!(r.grid(), &[0.0, 2.0, 3.0]);
        let u = s.propagator(0.5, 2.5).unwrap();
        let u_rev = r.propagator(3.0 - 2.5, 3.0 - 0.5).unwrap();
        assert!(u_rev.as_operator().max_abs_diff(u.adjoint().as_operator()) < 1e-14);
    }
}
