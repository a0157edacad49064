//! Fixed points, quantum histories and their measures of existence.
//!
//! A fixed point pins the state at one time with equal forward- and
//! backward-directed parts, so it is stored once. A history is a time-ordered
//! chain of at least two fixed points joined by branch propagators. Its
//! weight is the forward transition-amplitude chain multiplied by the
//! backward (conjugate) chain, i.e. `|amplitude|²`, and the measure of
//! existence is that weight normalized over a consistent family.

use num_complex::Complex64;

use crate::contour::{Branch, HamiltonianSchedule};
use crate::error::{Error, Result};
use crate::linalg::{bracket, check_dim, inner_product, Amplitude, StateVector, NORM_TOL};

pub const CONSISTENCY_TOL: f64 = 1e-10;

/// A time-stamped state with equal forward and backward parts.
#[derive(Clone, Debug, PartialEq)]
pub struct FixedPoint {
    pub t: f64,
    pub state: StateVector,
    pub label: String,
}

impl FixedPoint {
    pub fn new(t: f64, state: StateVector, label: impl Into<String>) -> Result<Self> {
        if !t.is_finite() {
            return Err(Error::NonFinite("fixed point time"));
        }
        Ok(FixedPoint {
            t,
            state,
            label: label.into(),
        })
    }

    /// The forward-directed part `|ψ^f(t)⟩`.
    pub fn forward_part(&self) -> &StateVector {
        &self.state
    }

    /// The backward-directed part `|ψ^b(t)⟩`, equal to the forward part.
    pub fn backward_part(&self) -> &StateVector {
        &self.state
    }
}

/// A strictly time-ordered sequence of `N_t ≥ 2` fixed points.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumHistory {
    points: Vec<FixedPoint>,
}

impl QuantumHistory {
    pub fn new(points: Vec<FixedPoint>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::History(format!(
                "a history needs at least two fixed points, found {}",
                points.len()
            )));
        }
        if points.windows(2).any(|w| w[1].t <= w[0].t) {
            return Err(Error::History(
                "fixed point times must be strictly increasing".into(),
            ));
        }
        let dim = points[0].state.dim();
        for p in &points {
            check_dim(dim, p.state.dim())?;
        }
        Ok(QuantumHistory { points })
    }

    pub fn points(&self) -> &[FixedPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].state.dim()
    }

    pub fn times(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.t).collect()
    }

    /// Fixed-point labels joined by arrows, e.g. `"psi -> 0 -> phi"`.
    pub fn label(&self) -> String {
        self.points
            .iter()
            .map(|p| p.label.as_str())
            .collect::<Vec<_>>()
            .join(" -> ")
    }

    /// Same history with the state at fixed point `index` replaced.
    pub fn with_state(&self, index: usize, state: StateVector) -> Result<Self> {
        let mut points = self.points.clone();
        let p = points
            .get_mut(index)
            .ok_or_else(|| Error::History(format!("no fixed point at index {index}")))?;
        check_dim(p.state.dim(), state.dim())?;
        p.state = state;
        Ok(QuantumHistory { points })
    }
}

/// Forward-branch transition-amplitude chain
/// `Π_i ⟨ψ_{i+1}| U(t_{i+1}, t_i) |ψ_i⟩`.
pub fn history_amplitude(h: &QuantumHistory, sched: &HamiltonianSchedule) -> Result<Amplitude> {
    check_dim(sched.dim(), h.dim())?;
    h.points
        .windows(2)
        .try_fold(Complex64::new(1.0, 0.0), |acc, w| {
            let u = sched.branch_propagator(w[0].t, w[1].t, Branch::Forward)?;
            Ok(acc * bracket(w[1].forward_part(), u.as_operator(), w[0].forward_part())?)
        })
}

/// The chain read in reverse, from the last fixed point back to the first
/// through adjoint propagators: `Π_i ⟨ψ_i| U(t_i, t_{i+1}) |ψ_{i+1}⟩`.
/// This is the complex conjugate of [`history_amplitude`].
pub fn reversed_amplitude(h: &QuantumHistory, sched: &HamiltonianSchedule) -> Result<Amplitude> {
    check_dim(sched.dim(), h.dim())?;
    h.points
        .windows(2)
        .rev()
        .try_fold(Complex64::new(1.0, 0.0), |acc, w| {
            let u = sched.branch_propagator(w[1].t, w[0].t, Branch::Backward)?;
            Ok(acc * bracket(w[0].backward_part(), u.as_operator(), w[1].backward_part())?)
        })
}

/// `ΔΨ = |history_amplitude|²`.
pub fn history_weight(h: &QuantumHistory, sched: &HamiltonianSchedule) -> Result<f64> {
    Ok(history_amplitude(h, sched)?.norm_sqr())
}

/// Pairwise overlap report for a set of histories.
#[derive(Clone, Debug, PartialEq)]
pub struct ConsistencyReport {
    pub consistent: bool,
    /// `(l, k, |⟨h_l|h_k⟩|)` for every pair violating `⟨h_l|h_k⟩ = δ_lk`.
    /// A history whose self-overlap deviates from one appears as `(k, k, ..)`.
    pub violating_pairs: Vec<(usize, usize, f64)>,
}

/// `⟨h_l|h_k⟩ = Π_i ⟨ψ_{l_i}|ψ_{k_i}⟩` over same-time fixed points.
pub fn history_overlap(l: &QuantumHistory, k: &QuantumHistory) -> Result<Amplitude> {
    if l.times() != k.times() {
        return Err(Error::FamilyShape(
            "histories are defined on different time grids".into(),
        ));
    }
    l.points
        .iter()
        .zip(&k.points)
        .try_fold(Complex64::new(1.0, 0.0), |acc, (a, b)| {
            Ok(acc * inner_product(&a.state, &b.state)?)
        })
}

/// Checks `⟨h_l|h_k⟩ = δ_lk` within [`CONSISTENCY_TOL`] for every pair.
pub fn check_family_consistency(histories: &[QuantumHistory]) -> Result<ConsistencyReport> {
    if let Some(first) = histories.first() {
        let times = first.times();
        if let Some(bad) = histories.iter().position(|h| h.times() != times) {
            return Err(Error::FamilyShape(format!(
                "history {bad} uses a different time grid from history 0"
            )));
        }
    }
    let mut violating_pairs = Vec::new();
    for (k, hk) in histories.iter().enumerate() {
        let selfo = history_overlap(hk, hk)?;
        if (selfo - Complex64::new(1.0, 0.0)).norm() > CONSISTENCY_TOL {
            violating_pairs.push((k, k, selfo.norm()));
        }
        for (l, hl) in histories.iter().enumerate().skip(k + 1) {
            let o = history_overlap(hl, hk)?.norm();
            if o > CONSISTENCY_TOL {
                violating_pairs.push((k, l, o));
            }
        }
    }
    Ok(ConsistencyReport {
        consistent: violating_pairs.is_empty(),
        violating_pairs,
    })
}

/// Histories sharing one time grid, together with the dynamics joining them.
#[derive(Clone, Debug, PartialEq)]
pub struct HistoryFamily {
    histories: Vec<QuantumHistory>,
    schedule: HamiltonianSchedule,
}

impl HistoryFamily {
    /// Validates shape (shared grid, dimensions, schedule coverage). Overlap
    /// consistency is checked separately by [`HistoryFamily::consistency`].
    pub fn new(histories: Vec<QuantumHistory>, schedule: HamiltonianSchedule) -> Result<Self> {
        let first = histories
            .first()
            .ok_or_else(|| Error::FamilyShape("a family needs at least one history".into()))?;
        let times = first.times();
        for (i, h) in histories.iter().enumerate() {
            if h.times() != times {
                return Err(Error::FamilyShape(format!(
                    "history {i} uses a different time grid from history 0"
                )));
            }
            check_dim(schedule.dim(), h.dim())?;
        }
        for &t in &times {
            if !schedule.covers(t) {
                return Err(Error::Grid {
                    t,
                    start: schedule.start(),
                    end: schedule.end(),
                });
            }
        }
        Ok(HistoryFamily {
            histories,
            schedule,
        })
    }

    pub fn histories(&self) -> &[QuantumHistory] {
        &self.histories
    }

    pub fn schedule(&self) -> &HamiltonianSchedule {
        &self.schedule
    }

    pub fn len(&self) -> usize {
        self.histories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.histories.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.histories[0].times()
    }

    pub fn consistency(&self) -> ConsistencyReport {
        check_family_consistency(&self.histories).expect("family grid validated on construction")
    }

    /// `ΔΨ_k` for every history, in family order.
    pub fn weights(&self) -> Result<Vec<f64>> {
        self.histories
            .iter()
            .map(|h| history_weight(h, &self.schedule))
            .collect()
    }

    /// Measure of existence of `h`, which must be a member of the family.
    pub fn measure_of_existence(&self, h: &QuantumHistory) -> Result<f64> {
        if !self.histories.contains(h) {
            return Err(Error::NotInFamily);
        }
        let total: f64 = self.weights()?.iter().sum();
        if total <= 0.0 {
            return Err(Error::DegenerateFamily);
        }
        Ok(history_weight(h, &self.schedule)? / total)
    }
}

/// Free-function form of [`HistoryFamily::measure_of_existence`].
pub fn measure_of_existence(h: &QuantumHistory, fam: &HistoryFamily) -> Result<f64> {
    fam.measure_of_existence(h)
}

/// An orthonormal (not necessarily complete) set of labelled states.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisSet {
    members: Vec<(String, StateVector)>,
}

impl BasisSet {
    pub fn new(members: Vec<(String, StateVector)>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::Basis { deviation: 1.0 });
        }
        let dim = members[0].1.dim();
        let mut deviation: f64 = 0.0;
        for (i, (_, a)) in members.iter().enumerate() {
            check_dim(dim, a.dim())?;
            for (j, (_, b)) in members.iter().enumerate().skip(i) {
                let target = if i == j { 1.0 } else { 0.0 };
                deviation = deviation.max((inner_product(a, b)? - target).norm());
            }
        }
        if deviation > NORM_TOL {
            return Err(Error::Basis { deviation });
        }
        Ok(BasisSet { members })
    }

    /// The labelled computational basis.
    pub fn computational(labels: &[String]) -> Result<Self> {
        let members = (0..labels.len())
            .map(|k| Ok((labels[k].clone(), StateVector::basis_state(labels, k)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(BasisSet { members })
    }

    /// A one-element set pinning a single prepared or post-selected state.
    pub fn single(label: impl Into<String>, state: StateVector) -> Self {
        BasisSet {
            members: vec![(label.into(), state)],
        }
    }

    pub fn members(&self) -> &[(String, StateVector)] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.members[0].1.dim()
    }

    pub fn states(&self) -> impl Iterator<Item = &StateVector> {
        self.members.iter().map(|(_, s)| s)
    }
}

/// Every history whose fixed point at time `times[i]` is drawn from
/// `bases[i]` and passes `allowed(i, label)`.
///
/// Histories are produced in lexicographic order with the earliest time
/// varying slowest.
pub fn enumerate_family<F>(
    times: &[f64],
    bases: &[BasisSet],
    allowed: F,
    schedule: &HamiltonianSchedule,
) -> Result<HistoryFamily>
where
    F: Fn(usize, &str) -> bool,
{
    if times.len() != bases.len() {
        return Err(Error::FamilyShape(format!(
            "{} times but {} basis sets",
            times.len(),
            bases.len()
        )));
    }
    let choices: Vec<Vec<&(String, StateVector)>> = bases
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let kept: Vec<_> = b.members.iter().filter(|(l, _)| allowed(i, l)).collect();
            if kept.is_empty() {
                Err(Error::EmptyFamily {
                    index: i,
                    t: times[i],
                })
            } else {
                Ok(kept)
            }
        })
        .collect::<Result<_>>()?;

    let mut histories = Vec::new();
    let mut cursor = vec![0usize; choices.len()];
    loop {
        let points = cursor
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let (label, state) = choices[i][c];
                FixedPoint::new(times[i], state.clone(), label.clone())
            })
            .collect::<Result<Vec<_>>>()?;
        histories.push(QuantumHistory::new(points)?);

        // odometer increment, last time fastest
        let mut i = choices.len();
        loop {
            if i == 0 {
                return HistoryFamily::new(histories, schedule.clone());
            }
            i -= 1;
            cursor[i] += 1;
            if cursor[i] < choices[i].len() {
                break;
            }
            cursor[i] = 0;
        }
    }
}

/// One row of a [`MeasureTable`].
#[derive(Clone, Debug, PartialEq)]
pub struct MeasureEntry {
    pub history: usize,
    pub label: String,
    pub weight: f64,
    pub measure: f64,
}

/// Measures of existence of every history in a family.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasureTable {
    pub entries: Vec<MeasureEntry>,
    /// `Σ_k ΔΨ_k`.
    pub normalization: f64,
}

impl MeasureTable {
    pub fn measures(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.measure).collect()
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|e| e.measure).sum()
    }
}

/// Probabilities of every history, identified with their measures of
/// existence. Zero-measure histories are kept.
pub fn vaidman_probabilities(fam: &HistoryFamily) -> Result<MeasureTable> {
    let report = fam.consistency();
    if !report.consistent {
        return Err(Error::InconsistentFamily(report.violating_pairs.len()));
    }
    let weights = fam.weights()?;
    let normalization: f64 = weights.iter().sum();
    if normalization <= 0.0 {
        return Err(Error::DegenerateFamily);
    }
    let entries = fam
        .histories
        .iter()
        .zip(weights)
        .enumerate()
        .map(|(history, (h, weight))| MeasureEntry {
            history,
            label: h.label(),
            weight,
            measure: weight / normalization,
        })
        .collect();
    Ok(MeasureTable {
        entries,
        normalization,
    })
}
