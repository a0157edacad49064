//! Pre- and post-selected calculators: two-state vectors, the ABL rule,
//! weak values and multiple-time amplitudes.
//!
//! A [`TwoStateVector`] keeps its backward-directed bra and forward-directed
//! ket as separate timed records. The two parts live in different spaces and
//! are only contracted inside the named rule functions below.

use num_complex::Complex64;

use crate::contour::HamiltonianSchedule;
use crate::error::{Error, Result};
use crate::histories::{history_amplitude, BasisSet, FixedPoint, QuantumHistory};
use crate::linalg::{bracket, check_dim, inner_product, Amplitude, Operator, StateVector};

/// Denominators below this magnitude are treated as vanishing.
pub const DEGENERATE_TOL: f64 = 1e-12;

/// A state attached to a time. Inside a two-state vector the bra part is
/// stored as the ket `|χ⟩` whose dual `⟨χ|` is meant.
#[derive(Clone, Debug, PartialEq)]
pub struct TimedState {
    pub state: StateVector,
    pub t: f64,
}

/// `⟨χ(t_bra)| ⊗ |ψ(t_ket)⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoStateVector {
    pub bra: TimedState,
    pub ket: TimedState,
}

impl TwoStateVector {
    /// Conjugated components of the bra part.
    pub fn bra_components(&self) -> Vec<Complex64> {
        self.bra
            .state
            .components()
            .iter()
            .map(|z| z.conj())
            .collect()
    }

    /// Largest componentwise deviation from `other`, or infinity when the
    /// parts sit at different times.
    pub fn deviation(&self, other: &TwoStateVector) -> f64 {
        if self.bra.t != other.bra.t || self.ket.t != other.ket.t {
            return f64::INFINITY;
        }
        let diff = |a: &StateVector, b: &StateVector| {
            (a.as_ket() - b.as_ket())
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max)
        };
        diff(&self.bra.state, &other.bra.state).max(diff(&self.ket.state, &other.ket.state))
    }
}

/// A state prepared at `t1`, a state post-selected at `t2`, and the
/// dynamics in between.
#[derive(Clone, Debug, PartialEq)]
pub struct PrePostSelection {
    pre: StateVector,
    post: StateVector,
    t1: f64,
    t2: f64,
    schedule: HamiltonianSchedule,
}

impl PrePostSelection {
    pub fn new(
        pre: StateVector,
        t1: f64,
        post: StateVector,
        t2: f64,
        schedule: HamiltonianSchedule,
    ) -> Result<Self> {
        if t1.partial_cmp(&t2) != Some(std::cmp::Ordering::Less) {
            return Err(Error::TimeOrder(format!(
                "pre-selection time {t1} must precede {t2}"
            )));
        }
        for t in [t1, t2] {
            if !schedule.covers(t) {
                return Err(Error::Grid {
                    t,
                    start: schedule.start(),
                    end: schedule.end(),
                });
            }
        }
        check_dim(schedule.dim(), pre.dim())?;
        check_dim(schedule.dim(), post.dim())?;
        Ok(PrePostSelection {
            pre,
            post,
            t1,
            t2,
            schedule,
        })
    }

    pub fn pre(&self) -> &StateVector {
        &self.pre
    }

    pub fn post(&self) -> &StateVector {
        &self.post
    }

    pub fn t1(&self) -> f64 {
        self.t1
    }

    pub fn t2(&self) -> f64 {
        self.t2
    }

    pub fn schedule(&self) -> &HamiltonianSchedule {
        &self.schedule
    }

    /// The same experiment with roles of past and future exchanged: the
    /// post-selected state is prepared and the pre-selected one post-selected,
    /// under the time-reversed schedule.
    pub fn reversed(&self) -> Result<Self> {
        let rev = self.schedule.time_reversed();
        let total = self.schedule.start() + self.schedule.end();
        Self::new(
            self.post.clone(),
            total - self.t2,
            self.pre.clone(),
            total - self.t1,
            rev,
        )
    }

    /// Maps a time of this selection onto the reversed one.
    pub fn mirror_time(&self, t: f64) -> f64 {
        self.schedule.start() + self.schedule.end() - t
    }

    fn check_window(&self, t: f64) -> Result<()> {
        if t < self.t1 || t > self.t2 {
            return Err(Error::TimeOrder(format!(
                "time {t} lies outside the selection window [{}, {}]",
                self.t1, self.t2
            )));
        }
        Ok(())
    }

    /// `U(t, t1)|ψ⟩`.
    pub fn forward_at(&self, t: f64) -> Result<StateVector> {
        self.schedule.propagator(self.t1, t)?.evolve(&self.pre)
    }

    /// `|χ⟩ = U(t, t2)|φ⟩`, so that `⟨χ| = ⟨φ|U(t2, t)`.
    pub fn backward_at(&self, t: f64) -> Result<StateVector> {
        self.schedule.propagator(self.t2, t)?.evolve(&self.post)
    }

    /// `⟨φ|U(t2, t)|n⟩⟨n|U(t, t1)|ψ⟩` for every `n` in `basis`.
    pub fn outcome_amplitudes(&self, basis: &BasisSet, t: f64) -> Result<Vec<Amplitude>> {
        self.check_window(t)?;
        check_dim(self.schedule.dim(), basis.dim())?;
        let fwd = self.forward_at(t)?;
        let back = self.backward_at(t)?;
        basis
            .states()
            .map(|n| Ok(inner_product(&back, n)? * inner_product(n, &fwd)?))
            .collect()
    }
}

/// ABL probabilities of a complete strong measurement in `basis` at `t`.
pub fn abl_probability(sel: &PrePostSelection, basis: &BasisSet, t: f64) -> Result<Vec<f64>> {
    if basis.len() != sel.schedule.dim() {
        return Err(Error::Dimension {
            expected: sel.schedule.dim(),
            found: basis.len(),
        });
    }
    let weights: Vec<f64> = sel
        .outcome_amplitudes(basis, t)?
        .iter()
        .map(|a| a.norm_sqr())
        .collect();
    let denominator: f64 = weights.iter().sum();
    if denominator < DEGENERATE_TOL {
        return Err(Error::DegenerateSelection { denominator });
    }
    Ok(weights.iter().map(|w| w / denominator).collect())
}

/// `O_w = ⟨φ|U(t2,t) Ô U(t,t1)|ψ⟩ / ⟨φ|U(t2,t) U(t,t1)|ψ⟩`.
pub fn weak_value(sel: &PrePostSelection, obs: &Operator, t: f64) -> Result<Amplitude> {
    sel.check_window(t)?;
    check_dim(sel.schedule.dim(), obs.dim())?;
    let fwd = sel.forward_at(t)?;
    let back = sel.backward_at(t)?;
    let denominator = inner_product(&back, &fwd)?;
    if denominator.norm() < DEGENERATE_TOL {
        return Err(Error::DegenerateSelection {
            denominator: denominator.norm(),
        });
    }
    Ok(bracket(&back, obs, &fwd)? / denominator)
}

fn check_pair(lo: f64, t_prime: f64, t_dprime: f64, hi: f64) -> Result<()> {
    if lo <= t_prime && t_prime <= t_dprime && t_dprime <= hi {
        Ok(())
    } else {
        Err(Error::TimeOrder(format!(
            "need {lo} <= t' = {t_prime} <= t'' = {t_dprime} <= {hi}"
        )))
    }
}

/// Boundary-to-fixed-point propagation: `⟨φ|U(t2,t'')` at `t''` and
/// `U(t',t1)|ψ⟩` at `t'`.
pub fn two_state_btfp(
    sel: &PrePostSelection,
    t_prime: f64,
    t_dprime: f64,
) -> Result<TwoStateVector> {
    check_pair(sel.t1, t_prime, t_dprime, sel.t2)?;
    Ok(TwoStateVector {
        bra: TimedState {
            state: sel.backward_at(t_dprime)?,
            t: t_dprime,
        },
        ket: TimedState {
            state: sel.forward_at(t_prime)?,
            t: t_prime,
        },
    })
}

/// Fixed-point-to-boundary propagation out of a fixed point `|n⟩` at
/// `t ∈ [t', t'']`: `⟨n|U(t,t')` at `t'` and `U(t'',t)|n⟩` at `t''`. The
/// bra now sits at the earlier time, the reverse of BTFP.
pub fn two_state_fptb(
    fp: &FixedPoint,
    sched: &HamiltonianSchedule,
    t_prime: f64,
    t_dprime: f64,
) -> Result<TwoStateVector> {
    if !(t_prime <= fp.t && fp.t <= t_dprime) {
        return Err(Error::TimeOrder(format!(
            "need t' = {t_prime} <= t = {} <= t'' = {t_dprime}",
            fp.t
        )));
    }
    Ok(TwoStateVector {
        bra: TimedState {
            state: sched
                .propagator(fp.t, t_prime)?
                .evolve(fp.backward_part())?,
            t: t_prime,
        },
        ket: TimedState {
            state: sched
                .propagator(fp.t, t_dprime)?
                .evolve(fp.forward_part())?,
            t: t_dprime,
        },
    })
}

/// The crossing assignment: `⟨φ|U(t2,t')` at `t'` and `U(t'',t1)|ψ⟩` at
/// `t''`, each part carried past the other.
pub fn crossing_two_state(
    sel: &PrePostSelection,
    t_prime: f64,
    t_dprime: f64,
) -> Result<TwoStateVector> {
    check_pair(sel.t1, t_prime, t_dprime, sel.t2)?;
    Ok(TwoStateVector {
        bra: TimedState {
            state: sel.backward_at(t_prime)?,
            t: t_prime,
        },
        ket: TimedState {
            state: sel.forward_at(t_dprime)?,
            t: t_dprime,
        },
    })
}

/// Correlation chain `Π_i ⟨ψ_{i+1}|U(t_{i+1},t_i)|ψ_i⟩` over time-ordered
/// states. This is the calculational reading of a multiple-time state, in
/// which consecutive bras and kets are contracted.
pub fn multiple_time_amplitude(
    states: &[(f64, StateVector)],
    sched: &HamiltonianSchedule,
) -> Result<Amplitude> {
    let points = states
        .iter()
        .enumerate()
        .map(|(i, (t, s))| FixedPoint::new(*t, s.clone(), i.to_string()))
        .collect::<Result<Vec<_>>>()?;
    history_amplitude(&QuantumHistory::new(points)?, sched)
}
