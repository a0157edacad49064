//! Offer/confirmation transactions for a source feeding two arms, and the
//! contingent-absorber comparison against the fixed-point family picture.
//!
//! The source state lives in a two-dimensional arm space: component 0 is the
//! left arm, component 1 the right arm.
//!
//! For the family picture every detector pattern "which absorbers have
//! registered by time t" is an orthonormal proposition state, e.g. `A&~B`.
//! Each arm path produces a deterministic record sequence; the dynamics
//! between detection times is the permutation carrying each path's record
//! forward, and the source fixed point is the arm superposition written on
//! the records of the first detection time.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::contour::HamiltonianSchedule;
use crate::error::{Error, Result};
use crate::histories::{
    enumerate_family, vaidman_probabilities, BasisSet, HistoryFamily, MeasureTable,
};
use crate::linalg::{check_dim, Amplitude, Operator, StateVector, NORM_TOL};

const MAX_ABSORBERS: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arm {
    Left,
    Right,
}

impl Arm {
    pub const ALL: [Arm; 2] = [Arm::Left, Arm::Right];

    pub fn index(self) -> usize {
        match self {
            Arm::Left => 0,
            Arm::Right => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Arm::Left => "left",
            Arm::Right => "right",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Absorber {
    pub label: String,
    pub arm: Arm,
    /// Time at which a particle travelling down `arm` reaches the absorber.
    pub active_from: f64,
}

/// `mover` relocates to `to_arm` iff `trigger` has registered nothing by
/// `deadline`.
#[derive(Clone, Debug, PartialEq)]
pub struct Contingency {
    pub mover: String,
    pub trigger: String,
    pub deadline: f64,
    pub to_arm: Arm,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AbsorberConfig {
    emission_time: f64,
    absorbers: Vec<Absorber>,
    contingency: Option<Contingency>,
}

impl AbsorberConfig {
    pub fn new(
        emission_time: f64,
        absorbers: Vec<Absorber>,
        contingency: Option<Contingency>,
    ) -> Result<Self> {
        let bad = |msg: String| Err(Error::AbsorberConfig(msg));
        if absorbers.is_empty() {
            return bad("at least one absorber is required".into());
        }
        if absorbers.len() > MAX_ABSORBERS {
            return bad(format!("at most {MAX_ABSORBERS} absorbers are supported"));
        }
        if !emission_time.is_finite() {
            return Err(Error::NonFinite("emission time"));
        }
        let mut seen = BTreeSet::new();
        for a in &absorbers {
            if !seen.insert(a.label.as_str()) {
                return bad(format!("duplicate absorber label `{}`", a.label));
            }
            if !a.active_from.is_finite() || a.active_from <= emission_time {
                return bad(format!(
                    "absorber `{}` must activate after the emission time",
                    a.label
                ));
            }
        }
        let cfg = AbsorberConfig {
            emission_time,
            absorbers,
            contingency,
        };
        if let Some(c) = &cfg.contingency {
            let mover = cfg.position(&c.mover).ok_or_else(|| {
                Error::AbsorberConfig(format!("contingency names unknown absorber `{}`", c.mover))
            })?;
            if cfg.position(&c.trigger).is_none() {
                return bad(format!(
                    "contingency names unknown absorber `{}`",
                    c.trigger
                ));
            }
            if c.mover == c.trigger {
                return bad("an absorber cannot be contingent on itself".into());
            }
            if !c.deadline.is_finite() {
                return Err(Error::NonFinite("contingency deadline"));
            }
            let moved = cfg.relocated(mover, c.to_arm);
            moved.check_no_collisions()?;
        }
        cfg.check_no_collisions()?;
        Ok(cfg)
    }

    pub fn emission_time(&self) -> f64 {
        self.emission_time
    }

    pub fn absorbers(&self) -> &[Absorber] {
        &self.absorbers
    }

    pub fn contingency(&self) -> Option<&Contingency> {
        self.contingency.as_ref()
    }

    fn position(&self, label: &str) -> Option<usize> {
        self.absorbers.iter().position(|a| a.label == label)
    }

    fn relocated(&self, index: usize, arm: Arm) -> AbsorberConfig {
        let mut absorbers = self.absorbers.clone();
        absorbers[index].arm = arm;
        AbsorberConfig {
            emission_time: self.emission_time,
            absorbers,
            contingency: None,
        }
    }

    fn without_contingency(&self) -> AbsorberConfig {
        AbsorberConfig {
            contingency: None,
            ..self.clone()
        }
    }

    fn check_no_collisions(&self) -> Result<()> {
        for (i, a) in self.absorbers.iter().enumerate() {
            for b in &self.absorbers[i + 1..] {
                if a.arm == b.arm && a.active_from == b.active_from {
                    return Err(Error::AbsorberConfig(format!(
                        "`{}` and `{}` sit at the same place on the {} arm",
                        a.label,
                        b.label,
                        a.arm.name()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Index of the absorber that a particle on `arm` reaches first.
    fn first_on(&self, arm: Arm) -> Option<usize> {
        self.absorbers
            .iter()
            .enumerate()
            .filter(|(_, a)| a.arm == arm)
            .min_by(|x, y| x.1.active_from.total_cmp(&y.1.active_from))
            .map(|(i, _)| i)
    }

    /// Where each absorber sits on the path of a particle taking `path`.
    fn placement_on_path(&self, path: Arm) -> Vec<Arm> {
        let mut arms: Vec<Arm> = self.absorbers.iter().map(|a| a.arm).collect();
        if let Some(c) = &self.contingency {
            let trigger = &self.absorbers[self.position(&c.trigger).expect("validated")];
            let mover = self.position(&c.mover).expect("validated");
            let trigger_fired = trigger.arm == path && trigger.active_from <= c.deadline;
            if !trigger_fired && self.absorbers[mover].active_from > c.deadline {
                arms[mover] = c.to_arm;
            }
        }
        arms
    }

    /// Indices of the absorbers a particle on `path` has reached by `t`.
    fn record(&self, path: Arm, t: f64) -> Vec<usize> {
        self.placement_on_path(path)
            .iter()
            .zip(&self.absorbers)
            .enumerate()
            .filter(|(_, (&arm, a))| arm == path && a.active_from <= t)
            .map(|(i, _)| i)
            .collect()
    }
}

/// One completed offer/confirmation pair.
#[derive(Clone, Debug, PartialEq)]
pub struct Transaction {
    pub absorber_label: String,
    pub offer_amplitude: Amplitude,
    pub confirmation_amplitude: Amplitude,
    pub probability: f64,
}

fn check_source(source: &StateVector) -> Result<()> {
    check_dim(2, source.dim())
}

/// Transactions for absorbers whose positions do not depend on any outcome.
///
/// Each arm's offer wave is absorbed by the first absorber it reaches; that
/// absorber answers with a confirmation wave of equal amplitude and phase
/// travelling backwards in time, i.e. the complex conjugate of the offer.
pub fn ti_fixed_absorbers(source: &StateVector, cfg: &AbsorberConfig) -> Result<Vec<Transaction>> {
    if cfg.contingency.is_some() {
        return Err(Error::Contingency);
    }
    check_source(source)?;
    for arm in Arm::ALL {
        let p = source.amplitude(arm.index()).norm_sqr();
        if p > NORM_TOL && cfg.first_on(arm).is_none() {
            return Err(Error::AbsorberConfig(format!(
                "amplitude on the {} arm reaches no absorber",
                arm.name()
            )));
        }
    }
    Ok(transactions(source, cfg))
}

/// Offer/confirmation pairs, leaving amplitude on an arm without absorbers unclaimed.
fn transactions(source: &StateVector, cfg: &AbsorberConfig) -> Vec<Transaction> {
    cfg.absorbers
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let offer = if cfg.first_on(a.arm) == Some(i) {
                source.amplitude(a.arm.index())
            } else {
                Complex64::new(0.0, 0.0)
            };
            let confirmation = offer.conj();
            Transaction {
                absorber_label: a.label.clone(),
                offer_amplitude: offer,
                confirmation_amplitude: confirmation,
                probability: (offer * confirmation).norm(),
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Discrepancy {
    pub absorber: String,
    pub recipe: f64,
    pub forced: f64,
}

/// Outcome of applying the transaction recipe to a contingent layout.
#[derive(Clone, Debug, PartialEq)]
pub struct ContingencyReport {
    /// Whether the contingency can actually relocate its absorber.
    pub triggered: bool,
    /// Offer-confirmation probabilities with every confirming absorber in place.
    pub recipe: Vec<(String, f64)>,
    /// Probabilities forced by the contingency logic once the moved absorber
    /// has sent a confirmation.
    pub forced: Vec<(String, f64)>,
    pub inconsistent: bool,
    pub discrepancy: Option<Discrepancy>,
}

fn probabilities(ts: &[Transaction]) -> Vec<(String, f64)> {
    ts.iter()
        .map(|t| (t.absorber_label.clone(), t.probability))
        .collect()
}

/// Applies the transaction recipe to a layout with a contingent absorber.
///
/// A confirmation wave from the moved absorber requires it to have been hit
/// by an offer wave, hence to have moved, hence the trigger to have stayed
/// dark: given that confirmation the moved absorber detects with
/// certainty. The recipe instead assigns it the offer-confirmation product.
/// The two are compared and any difference is reported.
pub fn ti_contingent(source: &StateVector, cfg: &AbsorberConfig) -> Result<ContingencyReport> {
    check_source(source)?;
    let fixed = cfg.without_contingency();
    let untriggered = |fixed: &AbsorberConfig| -> Result<ContingencyReport> {
        let p = probabilities(&ti_fixed_absorbers(source, fixed)?);
        Ok(ContingencyReport {
            triggered: false,
            recipe: p.clone(),
            forced: p,
            inconsistent: false,
            discrepancy: None,
        })
    };
    let Some(c) = &cfg.contingency else {
        return untriggered(&fixed);
    };
    let mover = cfg.position(&c.mover).expect("validated");
    let trigger = &cfg.absorbers[cfg.position(&c.trigger).expect("validated")];
    let p_trigger_fires = if trigger.active_from <= c.deadline {
        source.amplitude(trigger.arm.index()).norm_sqr()
    } else {
        0.0
    };
    let can_move = cfg.absorbers[mover].arm != c.to_arm
        && cfg.absorbers[mover].active_from > c.deadline
        && 1.0 - p_trigger_fires > NORM_TOL;
    if !can_move {
        return untriggered(&fixed);
    }

    // the relocated layout may leave an arm bare; its amplitude then confirms nothing
    let recipe = probabilities(&transactions(source, &cfg.relocated(mover, c.to_arm)));
    let forced: Vec<(String, f64)> = cfg
        .absorbers
        .iter()
        .enumerate()
        .map(|(i, a)| (a.label.clone(), if i == mover { 1.0 } else { 0.0 }))
        .collect();
    let recipe_mover = recipe[mover].1;
    let inconsistent = (recipe_mover - 1.0).abs() > NORM_TOL;
    Ok(ContingencyReport {
        triggered: true,
        recipe,
        forced,
        inconsistent,
        discrepancy: inconsistent.then(|| Discrepancy {
            absorber: c.mover.clone(),
            recipe: recipe_mover,
            forced: 1.0,
        }),
    })
}

/// Label of the proposition basis state with index `k`: index 0 has every
/// absorber registered, the last index none, e.g. `A&B, A&~B, ~A&B, ~A&~B`.
pub fn proposition_labels(names: &[&str]) -> Vec<String> {
    let n = names.len();
    (0..1usize << n)
        .map(|k| {
            let mask = (1usize << n) - 1 - k;
            names
                .iter()
                .enumerate()
                .map(|(j, name)| {
                    if mask >> (n - 1 - j) & 1 == 1 {
                        name.to_string()
                    } else {
                        format!("~{name}")
                    }
                })
                .collect::<Vec<_>>()
                .join("&")
        })
        .collect()
}

fn proposition_index(n: usize, clicked: &[usize]) -> usize {
    let mask: usize = clicked.iter().map(|&j| 1usize << (n - 1 - j)).sum();
    (1usize << n) - 1 - mask
}

/// Hermitian `H` with `exp(-i H dt)` equal to the permutation sending basis
/// state `i` to `perm[i]`, built cycle by cycle from the discrete Fourier
/// eigenvectors of each cyclic shift.
pub fn permutation_generator(perm: &[usize], dt: f64) -> Result<Operator> {
    let d = perm.len();
    let mut seen = vec![false; d];
    let mut h = DMatrix::<Complex64>::zeros(d, d);
    for start in 0..d {
        if seen[start] {
            continue;
        }
        let mut cycle = vec![start];
        seen[start] = true;
        let mut next = perm[start];
        while next != start {
            if next >= d || seen[next] {
                return Err(Error::AbsorberConfig(
                    "record map is not a permutation".into(),
                ));
            }
            seen[next] = true;
            cycle.push(next);
            next = perm[next];
        }
        let m = cycle.len();
        for k in 1..m {
            // eigenvalue e^{2πik/m}, phase wrapped into (-π, π]
            let mut phase = 2.0 * PI * k as f64 / m as f64;
            if phase > PI {
                phase -= 2.0 * PI;
            }
            let theta = -phase / dt;
            let v: Vec<Complex64> = (0..m)
                .map(|j| {
                    Complex64::from_polar(
                        1.0 / (m as f64).sqrt(),
                        -2.0 * PI * (j * k) as f64 / m as f64,
                    )
                })
                .collect();
            for (a, &ia) in cycle.iter().enumerate() {
                for (b, &ib) in cycle.iter().enumerate() {
                    h[(ia, ib)] += v[a] * v[b].conj() * theta;
                }
            }
        }
    }
    Operator::new(h)
}

/// A layout rewritten as fixed-point constraints on the proposition space.
#[derive(Clone, Debug, PartialEq)]
pub struct PropositionModel {
    pub labels: Vec<String>,
    /// Emission time followed by the distinct detection times.
    pub times: Vec<f64>,
    /// `records[arm][i]`: proposition index reached by that arm's path at `times[i + 1]`.
    pub records: [Vec<usize>; 2],
    pub source_state: StateVector,
    pub family: HistoryFamily,
}

impl PropositionModel {
    pub fn new(source: &StateVector, cfg: &AbsorberConfig) -> Result<Self> {
        check_source(source)?;
        let names: Vec<&str> = cfg.absorbers.iter().map(|a| a.label.as_str()).collect();
        let n = names.len();
        let dim = 1usize << n;
        let labels = proposition_labels(&names);

        let mut events: Vec<f64> = cfg.absorbers.iter().map(|a| a.active_from).collect();
        events.sort_by(f64::total_cmp);
        events.dedup();

        let records: [Vec<usize>; 2] = Arm::ALL.map(|arm| {
            events
                .iter()
                .map(|&t| proposition_index(n, &cfg.record(arm, t)))
                .collect()
        });
        if records[0][0] == records[1][0] {
            return Err(Error::AbsorberConfig(
                "the two arms leave identical records at the first detection time".into(),
            ));
        }

        let mut segments = vec![Operator::zeros(dim)];
        for w in 0..events.len() - 1 {
            let mut perm: Vec<Option<usize>> = vec![None; dim];
            for arm in Arm::ALL {
                let (from, to) = (records[arm.index()][w], records[arm.index()][w + 1]);
                match perm[from] {
                    Some(prev) if prev != to => {
                        return Err(Error::AbsorberConfig(format!(
                            "record `{}` at t = {} has more than one successor",
                            labels[from], events[w]
                        )))
                    }
                    _ => perm[from] = Some(to),
                }
            }
            let targets: BTreeSet<usize> = perm.iter().flatten().copied().collect();
            if targets.len() != perm.iter().flatten().count() {
                return Err(Error::AbsorberConfig(format!(
                    "distinct records merge between t = {} and t = {}",
                    events[w],
                    events[w + 1]
                )));
            }
            let mut free_targets = (0..dim).filter(|k| !targets.contains(k));
            let perm: Vec<usize> = perm
                .into_iter()
                .map(|p| p.unwrap_or_else(|| free_targets.next().expect("bijection")))
                .collect();
            if perm.iter().enumerate().all(|(i, &p)| i == p) {
                segments.push(Operator::zeros(dim));
            } else {
                segments.push(permutation_generator(&perm, events[w + 1] - events[w])?);
            }
        }

        let mut times = vec![cfg.emission_time];
        times.extend(&events);
        let schedule = HamiltonianSchedule::new(times.clone(), segments)?;

        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        for arm in Arm::ALL {
            amps[records[arm.index()][0]] += source.amplitude(arm.index());
        }
        let source_state = StateVector::new(amps, labels.clone())?;

        let comp = BasisSet::computational(&labels)?;
        let mut bases = vec![BasisSet::single("source", source_state.clone())];
        bases.extend(std::iter::repeat_n(comp, events.len()));
        let family = enumerate_family(
            &times,
            &bases,
            |i, label| {
                i == 0
                    || Arm::ALL
                        .iter()
                        .any(|arm| labels[records[arm.index()][i - 1]] == label)
            },
            &schedule,
        )?;
        Ok(PropositionModel {
            labels,
            times,
            records,
            source_state,
            family,
        })
    }

    /// The record sequence of the path taken along `arm`, as labels.
    pub fn path_labels(&self, arm: Arm) -> Vec<&str> {
        self.records[arm.index()]
            .iter()
            .map(|&k| self.labels[k].as_str())
            .collect()
    }
}

/// Family-picture statistics of a layout.
#[derive(Clone, Debug, PartialEq)]
pub struct FpfResolution {
    pub model: PropositionModel,
    pub table: MeasureTable,
    pub family_consistent: bool,
    /// Measure of histories in which each absorber is the first to register.
    pub first_detection: Vec<(String, f64)>,
    /// Measure of histories in which nothing registers.
    pub undetected: f64,
    /// Set when a history off every physical path carries weight, or when
    /// first-detection statistics depart from the arm occupation
    /// probabilities.
    pub inconsistent: bool,
}

/// Evaluates the layout as a family of fixed-point histories and assigns
/// each history its measure of existence.
pub fn fpf_resolution(source: &StateVector, cfg: &AbsorberConfig) -> Result<FpfResolution> {
    let model = PropositionModel::new(source, cfg)?;
    let table = vaidman_probabilities(&model.family)?;
    let family_consistent = model.family.consistency().consistent;
    let n = cfg.absorbers.len();

    let first_of = |seq: &[&str]| -> Option<usize> {
        let nothing = model.labels.len() - 1;
        seq.iter()
            .map(|l| {
                model
                    .labels
                    .iter()
                    .position(|x| x == l)
                    .expect("proposition label")
            })
            .find(|&k| k != nothing)
            .map(|k| {
                let mask = (1usize << n) - 1 - k;
                (0..n)
                    .find(|&j| mask >> (n - 1 - j) & 1 == 1)
                    .expect("non-empty record")
            })
    };

    let mut first_detection: Vec<(String, f64)> = cfg
        .absorbers
        .iter()
        .map(|a| (a.label.clone(), 0.0))
        .collect();
    let mut undetected = 0.0;
    let mut off_path = false;
    let paths: Vec<Vec<&str>> = Arm::ALL.iter().map(|&a| model.path_labels(a)).collect();
    for (h, entry) in model.family.histories().iter().zip(&table.entries) {
        let seq: Vec<&str> = h.points()[1..].iter().map(|p| p.label.as_str()).collect();
        if entry.measure > NORM_TOL && !paths.contains(&seq) {
            off_path = true;
        }
        match first_of(&seq) {
            Some(j) => first_detection[j].1 += entry.measure,
            None => undetected += entry.measure,
        }
    }

    let mut expected = vec![0.0; n];
    for arm in Arm::ALL {
        if let Some(j) = first_of(&paths[arm.index()]) {
            expected[j] += source.amplitude(arm.index()).norm_sqr();
        }
    }
    let born_mismatch = first_detection
        .iter()
        .zip(&expected)
        .any(|((_, p), q)| (p - q).abs() > NORM_TOL);
    let inconsistent =
        !family_consistent || off_path || born_mismatch || (table.total() - 1.0).abs() > NORM_TOL;

    Ok(FpfResolution {
        model,
        table,
        family_consistent,
        first_detection,
        undetected,
        inconsistent,
    })
}
