//! Randomized invariant suites behind `fpf verify`.

use fpf_core::contour::{Branch, HamiltonianSchedule};
use fpf_core::histories::{
    enumerate_family, history_amplitude, reversed_amplitude, vaidman_probabilities, BasisSet,
    FixedPoint, QuantumHistory, CONSISTENCY_TOL,
};
use fpf_core::linalg::{inner_product, Operator, NORM_TOL, UNITARITY_TOL};
use fpf_core::rules::{abl_probability, PrePostSelection};
use fpf_core::sampling::{random_basis, random_schedule, random_state};
use fpf_core::scenarios::{builtin, run_scenario};
use fpf_core::transactional::{
    fpf_resolution, ti_contingent, Absorber, AbsorberConfig, Arm, Contingency,
};
use fpf_core::{Error, Result};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Outcome, EXIT_OK, EXIT_VERIFY_FAILED};

const CASES: usize = 100;
const GOLDEN_TOL: f64 = 1e-12;
const PERTURBATION: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteReport {
    pub name: &'static str,
    pub cases: usize,
    pub max_deviation: f64,
    pub tolerance: f64,
    /// Set when a case could not be evaluated at all.
    pub error: Option<String>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.error.is_none() && self.max_deviation <= self.tolerance
    }
}

struct Tally {
    max: f64,
}

impl Tally {
    fn see(&mut self, d: f64) {
        // NaN deviations must fail the suite
        if d.is_nan() || d > self.max {
            self.max = if d.is_nan() { f64::INFINITY } else { d };
        }
    }
}

fn suite<F>(name: &'static str, tolerance: f64, cases: usize, seed: u64, mut body: F) -> SuiteReport
where
    F: FnMut(&mut ChaCha8Rng, &mut Tally) -> Result<()>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tally = Tally { max: 0.0 };
    let mut error = None;
    for _ in 0..cases {
        if let Err(e) = body(&mut rng, &mut tally) {
            error = Some(e.to_string());
            break;
        }
    }
    SuiteReport {
        name,
        cases,
        max_deviation: tally.max,
        tolerance,
        error,
    }
}

fn small_dim(rng: &mut ChaCha8Rng) -> usize {
    rng.random_range(2..=8)
}

fn schedule(rng: &mut ChaCha8Rng, dim: usize) -> HamiltonianSchedule {
    let segments = rng.random_range(1..=3);
    random_schedule(dim, segments, 0.0, rng)
}

fn time_in(rng: &mut ChaCha8Rng, s: &HamiltonianSchedule) -> f64 {
    rng.random_range(s.start()..=s.end())
}

fn born_recovery(rng: &mut ChaCha8Rng, tally: &mut Tally) -> Result<()> {
    let dim = small_dim(rng);
    let s = schedule(rng, dim);
    let psi = random_state(dim, rng);
    let basis = random_basis(dim, rng);
    let fam = enumerate_family(
        &[s.start(), s.end()],
        &[BasisSet::single("psi", psi.clone()), basis.clone()],
        |_, _| true,
        &s,
    )?;
    let measures = vaidman_probabilities(&fam)?.measures();
    let evolved = s.propagator(s.start(), s.end())?.evolve(&psi)?;
    for (m, phi) in measures.iter().zip(basis.states()) {
        tally.see((m - inner_product(phi, &evolved)?.norm_sqr()).abs());
    }
    Ok(())
}

fn abl_recovery(rng: &mut ChaCha8Rng, tally: &mut Tally) -> Result<()> {
    let dim = small_dim(rng);
    let s = schedule(rng, dim);
    let (psi, phi) = (random_state(dim, rng), random_state(dim, rng));
    let basis = random_basis(dim, rng);
    let t = time_in(rng, &s);
    let fam = enumerate_family(
        &[s.start(), t, s.end()],
        &[
            BasisSet::single("psi", psi.clone()),
            basis.clone(),
            BasisSet::single("phi", phi.clone()),
        ],
        |_, _| true,
        &s,
    )?;
    let measures = vaidman_probabilities(&fam)?.measures();
    let sel = PrePostSelection::new(psi, s.start(), phi, s.end(), s.clone())?;
    for (m, p) in measures.iter().zip(abl_probability(&sel, &basis, t)?) {
        tally.see((m - p).abs());
    }
    Ok(())
}

fn unitarity(perturb: bool) -> impl FnMut(&mut ChaCha8Rng, &mut Tally) -> Result<()> {
    move |rng, tally| {
        let dim = small_dim(rng);
        let s = schedule(rng, dim);
        let (a, b) = (time_in(rng, &s), time_in(rng, &s));
        let mut u: Operator = s.propagator(a, b)?.into_operator();
        if perturb {
            let mut m = u.matrix().clone();
            m[(0, 0)] += Complex64::new(PERTURBATION, 0.0);
            u = Operator::new(m)?;
        }
        tally.see(u.unitarity_deviation());
        Ok(())
    }
}

fn normalization(rng: &mut ChaCha8Rng, tally: &mut Tally) -> Result<()> {
    let dim = small_dim(rng);
    let s = schedule(rng, dim);
    let psi = random_state(dim, rng);
    let (a, b) = (time_in(rng, &s), time_in(rng, &s));
    let evolved = s.propagator(a, b)?.evolve(&psi)?;
    tally.see((evolved.as_ket().norm() - 1.0).abs());

    let t = time_in(rng, &s);
    let fam = enumerate_family(
        &[s.start(), t, s.end()],
        &[
            BasisSet::single("psi", psi),
            random_basis(dim, rng),
            random_basis(dim, rng),
        ],
        |_, _| true,
        &s,
    );
    // a random three-time family is generally inconsistent; only score consistent ones
    if let Ok(fam) = fam {
        if fam.consistency().consistent {
            tally.see((vaidman_probabilities(&fam)?.total() - 1.0).abs());
        }
    }
    Ok(())
}

fn time_reversal_conjugation(rng: &mut ChaCha8Rng, tally: &mut Tally) -> Result<()> {
    let dim = small_dim(rng);
    let s = schedule(rng, dim);
    let n = rng.random_range(2..=4);
    let mut times: Vec<f64> = (0..n).map(|_| time_in(rng, &s)).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    if times.len() >= 2 {
        let points = times
            .iter()
            .enumerate()
            .map(|(i, &t)| FixedPoint::new(t, random_state(dim, rng), format!("p{i}")))
            .collect::<Result<Vec<_>>>()?;
        let h = QuantumHistory::new(points)?;
        tally.see((reversed_amplitude(&h, &s)? - history_amplitude(&h, &s)?.conj()).norm());
    }
    let (a, b) = (time_in(rng, &s), time_in(rng, &s));
    let back = s.branch_propagator(a, b, Branch::Backward)?;
    let fwd = s.branch_propagator(b, a, Branch::Forward)?;
    tally.see(
        back.as_operator()
            .max_abs_diff(&fwd.adjoint().into_operator()),
    );
    Ok(())
}

fn maudlin_golden(tally: &mut Tally) -> Result<()> {
    let spec =
        builtin("maudlin").ok_or_else(|| Error::History("builtin `maudlin` missing".into()))?;
    let doc = run_scenario(&spec)?;
    let measures: Vec<f64> = doc.results["measures"]
        .as_array()
        .map(|a| a.iter().filter_map(|x| x.as_f64()).collect())
        .unwrap_or_default();
    if measures.len() != 4 {
        return Err(Error::FamilyShape(format!(
            "expected 4 histories, found {}",
            measures.len()
        )));
    }
    for (m, e) in measures.iter().zip([0.5, 0.0, 0.0, 0.5]) {
        tally.see((m - e).abs());
    }

    let source = fpf_core::linalg::StateVector::from_real(&[1.0, 1.0])?;
    let cfg = AbsorberConfig::new(
        0.0,
        vec![
            Absorber {
                label: "A".into(),
                arm: Arm::Right,
                active_from: 1.0,
            },
            Absorber {
                label: "B".into(),
                arm: Arm::Right,
                active_from: 2.0,
            },
        ],
        Some(Contingency {
            mover: "B".into(),
            trigger: "A".into(),
            deadline: 1.0,
            to_arm: Arm::Left,
        }),
    )?;
    let report = ti_contingent(&source, &cfg)?;
    match &report.discrepancy {
        Some(d) if report.inconsistent => {
            tally.see((d.recipe - 0.5).abs());
            tally.see((d.forced - 1.0).abs());
        }
        _ => tally.see(f64::INFINITY),
    }
    let fpf = fpf_resolution(&source, &cfg)?;
    tally.see(if fpf.inconsistent { f64::INFINITY } else { 0.0 });
    tally.see((fpf.table.total() - 1.0).abs());
    for (m, e) in fpf.table.measures().iter().zip([0.5, 0.0, 0.0, 0.5]) {
        tally.see((m - e).abs());
    }
    Ok(())
}

/// Runs all suites. The same seed always yields the same reports.
pub fn run_suites(seed: u64, perturb_unitary: bool) -> Vec<SuiteReport> {
    vec![
        suite("born_recovery", CONSISTENCY_TOL, CASES, seed, born_recovery),
        suite(
            "abl_recovery",
            CONSISTENCY_TOL,
            CASES,
            seed.wrapping_add(1),
            abl_recovery,
        ),
        suite(
            "unitarity",
            UNITARITY_TOL,
            CASES,
            seed.wrapping_add(2),
            unitarity(perturb_unitary),
        ),
        suite(
            "normalization",
            NORM_TOL,
            CASES,
            seed.wrapping_add(3),
            normalization,
        ),
        suite(
            "time_reversal_conjugation",
            CONSISTENCY_TOL,
            CASES,
            seed.wrapping_add(4),
            time_reversal_conjugation,
        ),
        suite("maudlin_golden", GOLDEN_TOL, 1, seed, |_, tally| {
            maudlin_golden(tally)
        }),
    ]
}

pub fn render(reports: &[SuiteReport], seed: u64) -> String {
    let mut out = format!("verify seed {seed}\n");
    for r in reports {
        let status = if r.passed() { "pass" } else { "FAIL" };
        out.push_str(&format!(
            "{:<26} {status}  max deviation {:.3e}  tolerance {:.0e}  cases {}\n",
            r.name, r.max_deviation, r.tolerance, r.cases
        ));
        if let Some(e) = &r.error {
            out.push_str(&format!("{:<26} error: {e}\n", ""));
        }
    }
    let failed = reports.iter().filter(|r| !r.passed()).count();
    if failed == 0 {
        out.push_str("all suites passed\n");
    } else {
        out.push_str(&format!("{failed} suite(s) failed\n"));
    }
    out
}

pub fn cmd_verify(seed: u64, perturb_unitary: bool) -> Outcome {
    let reports = run_suites(seed, perturb_unitary);
    let code = if reports.iter().all(SuiteReport::passed) {
        EXIT_OK
    } else {
        EXIT_VERIFY_FAILED
    };
    Outcome {
        code,
        stdout: render(&reports, seed),
        stderr: String::new(),
    }
}
