//! Declarative scenario documents: parsing, validation, serialization and
//! evaluation.
//!
//! A document is a JSON object. Complex numbers are `[re, im]` pairs and
//! matrices are lists of rows.

use std::collections::BTreeSet;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::contour::HamiltonianSchedule;
use crate::error::{Error, Result};
use crate::histories::{enumerate_family, vaidman_probabilities, BasisSet, FixedPoint};
use crate::linalg::{Operator, StateVector};
use crate::rules::{
    abl_probability, crossing_two_state, two_state_btfp, two_state_fptb, weak_value,
    PrePostSelection, TimedState, TwoStateVector,
};
use crate::transactional::{
    fpf_resolution, ti_contingent, ti_fixed_absorbers, Absorber, AbsorberConfig, Arm, Contingency,
    FpfResolution,
};

/// Explicit states further than this from unit norm are rejected.
pub const STATE_NORM_SLACK: f64 = 1e-6;

const BUILTIN_SOURCES: &[(&str, &str)] = &[
    (
        "beamsplitter",
        include_str!("../scenarios/beamsplitter.json"),
    ),
    ("maudlin", include_str!("../scenarios/maudlin.json")),
    ("maudlin_ti", include_str!("../scenarios/maudlin_ti.json")),
    ("rabi", include_str!("../scenarios/rabi.json")),
    ("tsvf_weak", include_str!("../scenarios/tsvf_weak.json")),
    ("tsvf_strong", include_str!("../scenarios/tsvf_strong.json")),
    (
        "btfp_fptb_demo",
        include_str!("../scenarios/btfp_fptb_demo.json"),
    ),
];

type ComplexDoc = [f64; 2];
type MatrixDoc = Vec<Vec<ComplexDoc>>;

/// Raw document layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDocument {
    pub name: String,
    pub dim: usize,
    pub basis_labels: Vec<String>,
    pub schedule: ScheduleDoc,
    pub fixed_points: Vec<FixedPointDoc>,
    pub mode: Mode,
    #[serde(default)]
    pub mode_params: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleDoc {
    pub grid: Vec<f64>,
    pub segments: Vec<MatrixDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedPointDoc {
    pub t: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allowed: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<Vec<ComplexDoc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    FpfFamily,
    Abl,
    WeakValue,
    TiFixed,
    TiContingent,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::FpfFamily => "fpf_family",
            Mode::Abl => "abl",
            Mode::WeakValue => "weak_value",
            Mode::TiFixed => "ti_fixed",
            Mode::TiContingent => "ti_contingent",
        }
    }
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NoParams {}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BasisMemberDoc {
    label: String,
    state: Vec<ComplexDoc>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AblParamsDoc {
    t: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    basis: Option<Vec<BasisMemberDoc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    t_prime: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    t_dprime: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeakParamsDoc {
    t: f64,
    observable: MatrixDoc,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AbsorberDoc {
    label: String,
    arm: Arm,
    active_from: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ContingencyDoc {
    mover: String,
    trigger: String,
    deadline: f64,
    to_arm: Arm,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AbsorberParamsDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    emission_time: Option<f64>,
    absorbers: Vec<AbsorberDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    contingency: Option<ContingencyDoc>,
}

/// A validated fixed-point constraint.
#[derive(Clone, Debug, PartialEq)]
pub enum Constraint {
    /// Any of the listed computational basis states.
    Allowed { t: f64, labels: Vec<String> },
    /// One explicit state.
    State {
        t: f64,
        state: StateVector,
        label: String,
    },
}

impl Constraint {
    pub fn t(&self) -> f64 {
        match self {
            Constraint::Allowed { t, .. } | Constraint::State { t, .. } => *t,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ModeParams {
    FpfFamily,
    Abl {
        t: f64,
        basis: BasisSet,
        two_state: Option<(f64, f64)>,
    },
    WeakValue {
        t: f64,
        observable: Operator,
    },
    TiFixed(AbsorberConfig),
    TiContingent(AbsorberConfig),
}

impl ModeParams {
    pub fn mode(&self) -> Mode {
        match self {
            ModeParams::FpfFamily => Mode::FpfFamily,
            ModeParams::Abl { .. } => Mode::Abl,
            ModeParams::WeakValue { .. } => Mode::WeakValue,
            ModeParams::TiFixed(_) => Mode::TiFixed,
            ModeParams::TiContingent(_) => Mode::TiContingent,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioSpec {
    name: String,
    basis_labels: Vec<String>,
    schedule: HamiltonianSchedule,
    fixed_points: Vec<Constraint>,
    params: ModeParams,
}

fn parse_err(path: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::Parse {
        path: path.into(),
        reason: reason.into(),
    }
}

fn pointer_of(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => {
                out.push_str(&format!("/{}", key.replace('~', "~0").replace('/', "~1")))
            }
            Segment::Enum { variant } => out.push_str(&format!("/{variant}")),
            Segment::Unknown => {}
        }
    }
    out
}

/// Converts a serde failure into a JSON-pointer located parse error. For a
/// missing or unknown field the pointer names the field itself.
fn located(prefix: &str, e: serde_path_to_error::Error<serde_json::Error>) -> Error {
    let mut path = format!("{prefix}{}", pointer_of(e.path()));
    let reason = e.inner().to_string();
    for marker in ["missing field `", "unknown field `"] {
        if let Some(field) = reason
            .strip_prefix(marker)
            .and_then(|r| r.split('`').next())
        {
            let leaf = format!("/{field}");
            if !path.ends_with(&leaf) {
                path.push_str(&leaf);
            }
        }
    }
    if path.is_empty() {
        path.push('/');
    }
    // serde_json appends " at line L column C"; the pointer already locates it
    let reason = match reason.rfind(" at line ") {
        Some(i) => reason[..i].to_string(),
        None => reason,
    };
    parse_err(path, reason)
}

fn complex(z: &ComplexDoc) -> Complex64 {
    Complex64::new(z[0], z[1])
}

fn complex_doc(z: Complex64) -> ComplexDoc {
    [z.re, z.im]
}

fn matrix(m: &MatrixDoc, dim: usize, path: &str) -> Result<Operator> {
    if m.len() != dim || m.iter().any(|row| row.len() != dim) {
        return Err(parse_err(path, format!("expected a {dim}x{dim} matrix")));
    }
    let rows: Vec<Vec<Complex64>> = m.iter().map(|r| r.iter().map(complex).collect()).collect();
    Operator::from_rows(&rows)
}

fn matrix_doc(op: &Operator) -> MatrixDoc {
    let d = op.dim();
    (0..d)
        .map(|i| (0..d).map(|j| complex_doc(op.entry(i, j))).collect())
        .collect()
}

/// Loads an explicit state, renormalizing small deviations from unit norm.
fn state(components: &[ComplexDoc], labels: &[String], path: &str) -> Result<StateVector> {
    if components.len() != labels.len() {
        return Err(parse_err(
            path,
            format!(
                "expected {} components, found {}",
                labels.len(),
                components.len()
            ),
        ));
    }
    let amps: Vec<Complex64> = components.iter().map(complex).collect();
    let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if !norm.is_finite() || (norm - 1.0).abs() > STATE_NORM_SLACK {
        return Err(parse_err(
            path,
            format!("state norm {norm} is not within {STATE_NORM_SLACK} of 1"),
        ));
    }
    if (norm - 1.0).abs() <= 4.0 * f64::EPSILON {
        StateVector::new(amps, labels.to_vec())
    } else {
        StateVector::normalized(amps, labels.to_vec())
    }
}

fn state_doc(s: &StateVector) -> Vec<ComplexDoc> {
    s.components().iter().map(|&z| complex_doc(z)).collect()
}

fn params_from<T: for<'de> Deserialize<'de>>(value: &Value) -> Result<T> {
    let value = if value.is_null() {
        json!({})
    } else {
        value.clone()
    };
    serde_path_to_error::deserialize(value).map_err(|e| located("/mode_params", e))
}

/// Parses and validates a scenario document.
pub fn parse_scenario(document: &str) -> Result<ScenarioSpec> {
    let mut de = serde_json::Deserializer::from_str(document);
    let doc: ScenarioDocument =
        serde_path_to_error::deserialize(&mut de).map_err(|e| located("", e))?;
    de.end().map_err(|e| parse_err("/", e.to_string()))?;
    ScenarioSpec::from_document(&doc)
}

impl ScenarioSpec {
    pub fn from_document(doc: &ScenarioDocument) -> Result<Self> {
        if doc.dim == 0 {
            return Err(parse_err("/dim", "dimension must be positive"));
        }
        if doc.basis_labels.len() != doc.dim {
            return Err(parse_err(
                "/basis_labels",
                format!(
                    "expected {} labels, found {}",
                    doc.dim,
                    doc.basis_labels.len()
                ),
            ));
        }
        let mut seen = BTreeSet::new();
        for (i, l) in doc.basis_labels.iter().enumerate() {
            if !seen.insert(l) {
                return Err(parse_err(
                    format!("/basis_labels/{i}"),
                    format!("duplicate label `{l}`"),
                ));
            }
        }
        let labels = doc.basis_labels.clone();

        let segments = doc
            .schedule
            .segments
            .iter()
            .enumerate()
            .map(|(k, m)| matrix(m, doc.dim, &format!("/schedule/segments/{k}")))
            .collect::<Result<Vec<_>>>()?;
        let schedule =
            HamiltonianSchedule::new(doc.schedule.grid.clone(), segments).map_err(|e| match e {
                Error::Schedule(reason) => parse_err("/schedule", reason),
                Error::NonFinite(what) => {
                    parse_err("/schedule/grid", format!("non-finite value in {what}"))
                }
                other => other,
            })?;

        let mut fixed_points = Vec::with_capacity(doc.fixed_points.len());
        for (i, fp) in doc.fixed_points.iter().enumerate() {
            let path = format!("/fixed_points/{i}");
            if !schedule.covers(fp.t) {
                return Err(parse_err(
                    format!("{path}/t"),
                    format!(
                        "time {} lies outside the schedule grid [{}, {}]",
                        fp.t,
                        schedule.start(),
                        schedule.end()
                    ),
                ));
            }
            let c = match (&fp.allowed, &fp.state) {
                (Some(allowed), None) => {
                    if fp.label.is_some() {
                        return Err(parse_err(
                            format!("{path}/label"),
                            "labels apply to explicit states only",
                        ));
                    }
                    if allowed.is_empty() {
                        return Err(parse_err(format!("{path}/allowed"), "no allowed labels"));
                    }
                    for (j, l) in allowed.iter().enumerate() {
                        if !labels.contains(l) {
                            return Err(parse_err(
                                format!("{path}/allowed/{j}"),
                                format!("unknown basis label `{l}`"),
                            ));
                        }
                    }
                    Constraint::Allowed {
                        t: fp.t,
                        labels: allowed.clone(),
                    }
                }
                (None, Some(components)) => Constraint::State {
                    t: fp.t,
                    state: state(components, &labels, &format!("{path}/state"))?,
                    label: fp.label.clone().unwrap_or_else(|| format!("fp{i}")),
                },
                _ => {
                    return Err(parse_err(
                        path,
                        "exactly one of `allowed` and `state` is required",
                    ))
                }
            };
            fixed_points.push(c);
        }
        if doc.fixed_points.windows(2).any(|w| w[1].t <= w[0].t) {
            return Err(parse_err(
                "/fixed_points",
                "fixed-point times must be strictly increasing",
            ));
        }

        let explicit = |i: usize| -> Result<&StateVector> {
            match fixed_points.get(i) {
                Some(Constraint::State { state, .. }) => Ok(state),
                _ => Err(parse_err(
                    format!("/fixed_points/{i}/state"),
                    "an explicit state is required here",
                )),
            }
        };
        let need_points = |n: usize| -> Result<()> {
            if fixed_points.len() == n {
                Ok(())
            } else {
                Err(parse_err(
                    "/fixed_points",
                    format!(
                        "mode `{}` needs {n} fixed point(s), found {}",
                        doc.mode.name(),
                        fixed_points.len()
                    ),
                ))
            }
        };

        let params = match doc.mode {
            Mode::FpfFamily => {
                params_from::<NoParams>(&doc.mode_params)?;
                if fixed_points.len() < 2 {
                    return Err(parse_err(
                        "/fixed_points",
                        "a family needs at least two fixed points",
                    ));
                }
                ModeParams::FpfFamily
            }
            Mode::Abl => {
                need_points(2)?;
                explicit(0)?;
                explicit(1)?;
                let p: AblParamsDoc = params_from(&doc.mode_params)?;
                let basis = match &p.basis {
                    None => BasisSet::computational(&labels)?,
                    Some(members) => {
                        let members = members
                            .iter()
                            .enumerate()
                            .map(|(k, m)| {
                                Ok((
                                    m.label.clone(),
                                    state(
                                        &m.state,
                                        &labels,
                                        &format!("/mode_params/basis/{k}/state"),
                                    )?,
                                ))
                            })
                            .collect::<Result<Vec<_>>>()?;
                        BasisSet::new(members)?
                    }
                };
                let two_state = match (p.t_prime, p.t_dprime) {
                    (None, None) => None,
                    (Some(a), Some(b)) => Some((a, b)),
                    (Some(_), None) => {
                        return Err(parse_err(
                            "/mode_params/t_dprime",
                            "missing field `t_dprime`",
                        ))
                    }
                    (None, Some(_)) => {
                        return Err(parse_err("/mode_params/t_prime", "missing field `t_prime`"))
                    }
                };
                ModeParams::Abl {
                    t: p.t,
                    basis,
                    two_state,
                }
            }
            Mode::WeakValue => {
                need_points(2)?;
                explicit(0)?;
                explicit(1)?;
                let p: WeakParamsDoc = params_from(&doc.mode_params)?;
                let observable = matrix(&p.observable, doc.dim, "/mode_params/observable")?;
                if !observable.is_hermitian() {
                    return Err(Error::Hermiticity {
                        deviation: observable.hermiticity_deviation(),
                    });
                }
                ModeParams::WeakValue { t: p.t, observable }
            }
            Mode::TiFixed | Mode::TiContingent => {
                need_points(1)?;
                explicit(0)?;
                if doc.dim != 2 {
                    return Err(parse_err(
                        "/dim",
                        "absorber scenarios use the two-arm space (dim 2)",
                    ));
                }
                let p: AbsorberParamsDoc = params_from(&doc.mode_params)?;
                if doc.mode == Mode::TiFixed && p.contingency.is_some() {
                    return Err(parse_err(
                        "/mode_params/contingency",
                        "ti_fixed takes no contingency",
                    ));
                }
                let emission_time = p.emission_time.unwrap_or(schedule.end());
                if !schedule.covers(emission_time) || emission_time < fixed_points[0].t() {
                    return Err(parse_err(
                        "/mode_params/emission_time",
                        "emission must lie on the schedule, after the source fixed point",
                    ));
                }
                let absorbers = p
                    .absorbers
                    .iter()
                    .map(|a| Absorber {
                        label: a.label.clone(),
                        arm: a.arm,
                        active_from: a.active_from,
                    })
                    .collect();
                let contingency = p.contingency.as_ref().map(|c| Contingency {
                    mover: c.mover.clone(),
                    trigger: c.trigger.clone(),
                    deadline: c.deadline,
                    to_arm: c.to_arm,
                });
                let cfg = AbsorberConfig::new(emission_time, absorbers, contingency).map_err(
                    |e| match e {
                        Error::AbsorberConfig(reason) => parse_err("/mode_params", reason),
                        other => other,
                    },
                )?;
                if doc.mode == Mode::TiFixed {
                    ModeParams::TiFixed(cfg)
                } else {
                    ModeParams::TiContingent(cfg)
                }
            }
        };

        Ok(ScenarioSpec {
            name: doc.name.clone(),
            basis_labels: labels,
            schedule,
            fixed_points,
            params,
        })
    }

    pub fn to_document(&self) -> ScenarioDocument {
        let fixed_points = self
            .fixed_points
            .iter()
            .map(|c| match c {
                Constraint::Allowed { t, labels } => FixedPointDoc {
                    t: *t,
                    allowed: Some(labels.clone()),
                    state: None,
                    label: None,
                },
                Constraint::State { t, state, label } => FixedPointDoc {
                    t: *t,
                    allowed: None,
                    state: Some(state_doc(state)),
                    label: Some(label.clone()),
                },
            })
            .collect();
        let absorber_params = |cfg: &AbsorberConfig| {
            let doc = AbsorberParamsDoc {
                emission_time: Some(cfg.emission_time()),
                absorbers: cfg
                    .absorbers()
                    .iter()
                    .map(|a| AbsorberDoc {
                        label: a.label.clone(),
                        arm: a.arm,
                        active_from: a.active_from,
                    })
                    .collect(),
                contingency: cfg.contingency().map(|c| ContingencyDoc {
                    mover: c.mover.clone(),
                    trigger: c.trigger.clone(),
                    deadline: c.deadline,
                    to_arm: c.to_arm,
                }),
            };
            serde_json::to_value(doc).expect("serializable")
        };
        let mode_params = match &self.params {
            ModeParams::FpfFamily => json!({}),
            ModeParams::Abl {
                t,
                basis,
                two_state,
            } => serde_json::to_value(AblParamsDoc {
                t: *t,
                basis: Some(
                    basis
                        .members()
                        .iter()
                        .map(|(label, s)| BasisMemberDoc {
                            label: label.clone(),
                            state: state_doc(s),
                        })
                        .collect(),
                ),
                t_prime: two_state.map(|p| p.0),
                t_dprime: two_state.map(|p| p.1),
            })
            .expect("serializable"),
            ModeParams::WeakValue { t, observable } => serde_json::to_value(WeakParamsDoc {
                t: *t,
                observable: matrix_doc(observable),
            })
            .expect("serializable"),
            ModeParams::TiFixed(cfg) | ModeParams::TiContingent(cfg) => absorber_params(cfg),
        };
        ScenarioDocument {
            name: self.name.clone(),
            dim: self.dim(),
            basis_labels: self.basis_labels.clone(),
            schedule: ScheduleDoc {
                grid: self.schedule.grid().to_vec(),
                segments: self.schedule.segments().iter().map(matrix_doc).collect(),
            },
            fixed_points,
            mode: self.mode(),
            mode_params,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("serializable")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.basis_labels.len()
    }

    pub fn basis_labels(&self) -> &[String] {
        &self.basis_labels
    }

    pub fn schedule(&self) -> &HamiltonianSchedule {
        &self.schedule
    }

    pub fn fixed_points(&self) -> &[Constraint] {
        &self.fixed_points
    }

    pub fn mode(&self) -> Mode {
        self.params.mode()
    }

    pub fn params(&self) -> &ModeParams {
        &self.params
    }

    fn explicit_state(&self, i: usize) -> (&StateVector, f64) {
        match &self.fixed_points[i] {
            Constraint::State { state, t, .. } => (state, *t),
            Constraint::Allowed { .. } => unreachable!("validated at parse time"),
        }
    }

    fn selection(&self) -> Result<PrePostSelection> {
        let (pre, t1) = self.explicit_state(0);
        let (post, t2) = self.explicit_state(1);
        PrePostSelection::new(pre.clone(), t1, post.clone(), t2, self.schedule.clone())
    }

    fn source(&self, cfg: &AbsorberConfig) -> Result<StateVector> {
        let (s, t) = self.explicit_state(0);
        self.schedule.propagator(t, cfg.emission_time())?.evolve(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub family_size: usize,
    pub consistency: bool,
    pub normalization: f64,
}

/// Outcome of running a scenario; `results` depends on the mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub name: String,
    pub mode: Mode,
    pub results: Value,
    pub diagnostics: Diagnostics,
}

impl ResultDocument {
    /// Every probability list in the results, for normalization checks.
    pub fn probability_sets(&self) -> Vec<Vec<f64>> {
        let nums = |v: &Value| -> Vec<f64> {
            v.as_array()
                .map(|a| a.iter().filter_map(Value::as_f64).collect())
                .unwrap_or_default()
        };
        let r = &self.results;
        match self.mode {
            Mode::FpfFamily => vec![nums(&r["measures"])],
            Mode::Abl | Mode::TiFixed => vec![nums(&r["probabilities"])],
            Mode::WeakValue => vec![],
            Mode::TiContingent => vec![
                nums(&r["recipe_probabilities"]),
                nums(&r["forced_probabilities"]),
                nums(&r["fpf"]["measures"]),
            ],
        }
    }
}

fn cjson(z: Complex64) -> Value {
    json!([z.re, z.im])
}

fn state_json(s: &StateVector) -> Value {
    Value::Array(s.components().iter().map(|&z| cjson(z)).collect())
}

fn timed_json(ts: &TimedState) -> Value {
    json!({ "t": ts.t, "state": state_json(&ts.state) })
}

fn two_state_json(tsv: &TwoStateVector) -> Value {
    json!({ "bra": timed_json(&tsv.bra), "ket": timed_json(&tsv.ket) })
}

fn fpf_json(res: &FpfResolution) -> Value {
    json!({
        "histories": res.table.entries.iter().map(|e| json!({
            "label": e.label, "weight": e.weight, "measure": e.measure,
        })).collect::<Vec<_>>(),
        "measures": res.table.measures(),
        "first_detection": res.first_detection.iter().map(|(l, p)| json!({ "absorber": l, "probability": p })).collect::<Vec<_>>(),
        "undetected": res.undetected,
        "family_consistent": res.family_consistent,
        "inconsistent": res.inconsistent,
    })
}

/// Evaluates a scenario. The result depends only on the spec.
pub fn run_scenario(spec: &ScenarioSpec) -> Result<ResultDocument> {
    evaluate(spec).map_err(|e| e.in_scenario(&spec.name))
}

fn evaluate(spec: &ScenarioSpec) -> Result<ResultDocument> {
    let (results, diagnostics) = match &spec.params {
        ModeParams::FpfFamily => {
            let comp = BasisSet::computational(&spec.basis_labels)?;
            let mut times = Vec::new();
            let mut bases = Vec::new();
            for c in &spec.fixed_points {
                times.push(c.t());
                bases.push(match c {
                    Constraint::Allowed { .. } => comp.clone(),
                    Constraint::State { state, label, .. } => {
                        BasisSet::single(label.clone(), state.clone())
                    }
                });
            }
            let allowed = |i: usize, label: &str| match &spec.fixed_points[i] {
                Constraint::Allowed { labels, .. } => labels.iter().any(|l| l == label),
                Constraint::State { .. } => true,
            };
            let family = enumerate_family(&times, &bases, allowed, &spec.schedule)?;
            let table = vaidman_probabilities(&family)?;
            let results = json!({
                "histories": table.entries.iter().map(|e| json!({
                    "label": e.label, "weight": e.weight, "measure": e.measure,
                })).collect::<Vec<_>>(),
                "measures": table.measures(),
            });
            let diag = Diagnostics {
                family_size: family.len(),
                consistency: family.consistency().consistent,
                normalization: table.normalization,
            };
            (results, diag)
        }
        ModeParams::Abl {
            t,
            basis,
            two_state,
        } => {
            let sel = spec.selection()?;
            let p = abl_probability(&sel, basis, *t)?;
            let denominator: f64 = sel
                .outcome_amplitudes(basis, *t)?
                .iter()
                .map(|a| a.norm_sqr())
                .sum();
            let mut results = json!({
                "t": t,
                "outcomes": basis.members().iter().zip(&p).map(|((l, _), p)| json!({ "label": l, "probability": p })).collect::<Vec<_>>(),
                "probabilities": p,
            });
            if let Some((tp, tdp)) = two_state {
                let btfp = two_state_btfp(&sel, *tp, *tdp)?;
                let crossing = crossing_two_state(&sel, *tp, *tdp)?;
                let fptb = basis
                    .members()
                    .iter()
                    .map(|(label, s)| {
                        let fp = FixedPoint::new(*t, s.clone(), label.clone())?;
                        Ok(json!({ "outcome": label, "two_state": two_state_json(&two_state_fptb(&fp, &spec.schedule, *tp, *tdp)?) }))
                    })
                    .collect::<Result<Vec<_>>>()?;
                results["two_state"] = json!({
                    "t_prime": tp,
                    "t_dprime": tdp,
                    "btfp": two_state_json(&btfp),
                    "fptb": fptb,
                    "crossing": two_state_json(&crossing),
                });
            }
            (
                results,
                Diagnostics {
                    family_size: basis.len(),
                    consistency: true,
                    normalization: denominator,
                },
            )
        }
        ModeParams::WeakValue { t, observable } => {
            let sel = spec.selection()?;
            let w = weak_value(&sel, observable, *t)?;
            let overlap = crate::linalg::inner_product(
                sel.post(),
                &sel.schedule()
                    .propagator(sel.t1(), sel.t2())?
                    .evolve(sel.pre())?,
            )?;
            let results = json!({ "t": t, "weak_value": cjson(w), "re": w.re, "im": w.im });
            (
                results,
                Diagnostics {
                    family_size: 1,
                    consistency: true,
                    normalization: overlap.norm_sqr(),
                },
            )
        }
        ModeParams::TiFixed(cfg) => {
            let source = spec.source(cfg)?;
            let ts = ti_fixed_absorbers(&source, cfg)?;
            let probabilities: Vec<f64> = ts.iter().map(|t| t.probability).collect();
            let results = json!({
                "source": state_json(&source),
                "transactions": ts.iter().map(|t| json!({
                    "absorber": t.absorber_label,
                    "offer": cjson(t.offer_amplitude),
                    "confirmation": cjson(t.confirmation_amplitude),
                    "probability": t.probability,
                })).collect::<Vec<_>>(),
                "probabilities": probabilities,
            });
            let total = probabilities.iter().sum();
            (
                results,
                Diagnostics {
                    family_size: ts.len(),
                    consistency: true,
                    normalization: total,
                },
            )
        }
        ModeParams::TiContingent(cfg) => {
            let source = spec.source(cfg)?;
            let report = ti_contingent(&source, cfg)?;
            let fpf = fpf_resolution(&source, cfg)?;
            let listing = |v: &[(String, f64)]| {
                v.iter()
                    .map(|(l, p)| json!({ "absorber": l, "probability": p }))
                    .collect::<Vec<_>>()
            };
            let results = json!({
                "source": state_json(&source),
                "triggered": report.triggered,
                "inconsistent": report.inconsistent,
                "recipe": listing(&report.recipe),
                "forced": listing(&report.forced),
                "recipe_probabilities": report.recipe.iter().map(|p| p.1).collect::<Vec<_>>(),
                "forced_probabilities": report.forced.iter().map(|p| p.1).collect::<Vec<_>>(),
                "discrepancy": report.discrepancy.as_ref().map(|d| json!({
                    "absorber": d.absorber, "recipe": d.recipe, "forced": d.forced,
                })),
                "fpf": fpf_json(&fpf),
            });
            let diag = Diagnostics {
                family_size: fpf.model.family.len(),
                consistency: fpf.family_consistent,
                normalization: fpf.table.normalization,
            };
            (results, diag)
        }
    };
    Ok(ResultDocument {
        name: spec.name.clone(),
        mode: spec.mode(),
        results,
        diagnostics,
    })
}

/// Names of the bundled scenarios, in listing order.
pub fn builtin_names() -> Vec<&'static str> {
    BUILTIN_SOURCES.iter().map(|(n, _)| *n).collect()
}

/// The bundled document text for `name`.
pub fn builtin_source(name: &str) -> Option<&'static str> {
    BUILTIN_SOURCES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, s)| *s)
}

pub fn builtin(name: &str) -> Option<ScenarioSpec> {
    builtin_source(name).map(|s| parse_scenario(s).expect("bundled scenarios are valid"))
}

pub fn builtin_scenarios() -> Vec<ScenarioSpec> {
    BUILTIN_SOURCES
        .iter()
        .map(|(_, s)| parse_scenario(s).expect("bundled scenarios are valid"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const PREPOST_IDENTITY: &str = include_str!("../tests/fixtures/prepost_identity.json");

    #[test]
    fn builtins_parse_and_round_trip() {
        for (name, src) in BUILTIN_SOURCES {
            let spec = parse_scenario(src).unwrap();
            assert_eq!(spec.name(), *name);
            let again = parse_scenario(&spec.to_json()).unwrap();
            assert_eq!(spec, again, "{name}");
        }
    }

    #[test]
    fn maudlin_structure() {
        let spec = builtin("maudlin").unwrap();
        assert_eq!(spec.basis_labels().len(), 4);
        assert_eq!(spec.schedule().grid().len(), 3);
    }

    #[test]
    fn maudlin_measures() {
        let doc = run_scenario(&builtin("maudlin").unwrap()).unwrap();
        let m = &doc.probability_sets()[0];
        for (a, b) in m.iter().zip([0.5, 0.0, 0.0, 0.5]) {
            assert!((a - b).abs() < 1e-12, "{m:?}");
        }
        assert!(doc.diagnostics.consistency);
    }

    #[test]
    fn beamsplitter_halves() {
        let doc = run_scenario(&builtin("beamsplitter").unwrap()).unwrap();
        for p in &doc.probability_sets()[0] {
            assert!((p - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn prepost_identity_fixture() {
        let doc = run_scenario(&parse_scenario(PREPOST_IDENTITY).unwrap()).unwrap();
        assert_eq!(doc.probability_sets()[0], vec![1.0, 0.0]);
    }

    #[test]
    fn every_builtin_runs_and_normalizes() {
        for spec in builtin_scenarios() {
            let doc = run_scenario(&spec).unwrap();
            for set in doc.probability_sets() {
                assert!(
                    (set.iter().sum::<f64>() - 1.0).abs() < 1e-10,
                    "{}: {set:?}",
                    spec.name()
                );
            }
        }
    }

    #[test]
    fn missing_dim_is_located() {
        let mut v: Value = serde_json::from_str(PREPOST_IDENTITY).unwrap();
        v.as_object_mut().unwrap().remove("dim");
        match parse_scenario(&v.to_string()) {
            Err(Error::Parse { path, .. }) => assert_eq!(path, "/dim"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn nested_paths_and_unknown_fields() {
        let mut v: Value = serde_json::from_str(PREPOST_IDENTITY).unwrap();
        v["schedule"]["grid"][1] = json!("late");
        match parse_scenario(&v.to_string()) {
            Err(Error::Parse { path, .. }) => assert_eq!(path, "/schedule/grid/1"),
            other => panic!("{other:?}"),
        }
        let mut v: Value = serde_json::from_str(PREPOST_IDENTITY).unwrap();
        v["extra"] = json!(1);
        let e = parse_scenario(&v.to_string());
        assert!(
            matches!(&e, Err(Error::Parse { path, .. }) if path == "/extra"),
            "{e:?}"
        );
        let mut v: Value = serde_json::from_str(PREPOST_IDENTITY).unwrap();
        v["mode_params"]["tt"] = json!(1);
        assert!(
            matches!(parse_scenario(&v.to_string()), Err(Error::Parse { path, .. }) if path == "/mode_params/tt")
        );
    }

    #[test]
    fn non_hermitian_segment_rejected() {
        let mut v: Value = serde_json::from_str(PREPOST_IDENTITY).unwrap();
        v["schedule"]["segments"][0][0][1] = json!([1.0, 0.0]);
        v["schedule"]["segments"][0][1][0] = json!([2.0, 0.0]);
        assert!(matches!(
            parse_scenario(&v.to_string()),
            Err(Error::Hermiticity { .. })
        ));
    }

    #[test]
    fn near_unit_states_are_normalized() {
        let mut v: Value = serde_json::from_str(PREPOST_IDENTITY).unwrap();
        v["fixed_points"][0]["state"] = json!([[1.0000001, 0.0], [0.0, 0.0]]);
        let spec = parse_scenario(&v.to_string()).unwrap();
        let Constraint::State { state, .. } = &spec.fixed_points()[0] else {
            panic!()
        };
        assert_eq!(state.amplitude(0), Complex64::new(1.0, 0.0));
        v["fixed_points"][0]["state"] = json!([[1.001, 0.0], [0.0, 0.0]]);
        assert!(
            matches!(parse_scenario(&v.to_string()), Err(Error::Parse { path, .. }) if path == "/fixed_points/0/state")
        );
    }

    #[test]
    fn unknown_label_rejected() {
        let src = builtin_source("maudlin").unwrap();
        let mut v: Value = serde_json::from_str(src).unwrap();
        v["fixed_points"][1]["allowed"][0] = json!("C&D");
        assert!(
            matches!(parse_scenario(&v.to_string()), Err(Error::Parse { path, .. }) if path == "/fixed_points/1/allowed/0")
        );
    }

    #[test]
    fn runs_are_deterministic() {
        for spec in builtin_scenarios() {
            let a = serde_json::to_string(&run_scenario(&spec).unwrap()).unwrap();
            let b = serde_json::to_string(&run_scenario(&spec).unwrap()).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn maudlin_ti_reports_inconsistency() {
        let doc = run_scenario(&builtin("maudlin_ti").unwrap()).unwrap();
        let r = &doc.results;
        assert_eq!(r["inconsistent"], json!(true));
        assert!((r["discrepancy"]["recipe"].as_f64().unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(r["discrepancy"]["forced"], json!(1.0));
        assert_eq!(r["fpf"]["inconsistent"], json!(false));
    }

    #[test]
    fn degenerate_errors_carry_scenario_context() {
        let mut v: Value = serde_json::from_str(PREPOST_IDENTITY).unwrap();
        v["fixed_points"][1]["state"] = json!([[0.0, 0.0], [1.0, 0.0]]);
        let err = run_scenario(&parse_scenario(&v.to_string()).unwrap()).unwrap_err();
        assert!(err.is_degenerate());
        assert!(matches!(err, Error::Scenario { ref name, .. } if name == "prepost_identity"));
    }
}
