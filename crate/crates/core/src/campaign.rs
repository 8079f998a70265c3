//! Seeded Monte Carlo verification campaigns.
//!
//! Trial `n` of a run with seed `s` draws everything from `s ^ n`, so the
//! report does not depend on how trials are scheduled across threads.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::canonical::verify_omega_conservation;
use crate::gate::{find_gate_unitary_complex, find_gate_unitary_real, resultant_spectrum, DEFAULT_GRID};
use crate::invariants::{brute_force_invariants_with, compute_invariants_with, orbit_fingerprints_equal, OrbitRelation};
use crate::povm::{
    appendix_checks, apply_deterministic_povm, outcome_invariants_closed_form, solve_condpovm, DeterministicPovm,
};
use crate::protocols::{ghz_to_complex, ghz_to_real, ProtocolTrace, TargetComplexSpec, TargetRealSpec};
use crate::random::{random_kraus_pair, random_local_unitaries, rng_from_seed, sample_state, Ensemble, DEFAULT_MAX_ATTEMPTS};
use crate::state::{Party, PureState3Q};
use crate::{Error, Result, Tolerances};

/// Failure details kept in a report; the seed list itself is complete.
const MAX_RECORDED_FAILURES: usize = 50;

/// Points per axis of the real protocol grid.
const PROTOCOL_GRID: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Campaign {
    Theorem1,
    RealGate,
    ComplexGate,
    Appendix,
    InvariantOracle,
    Protocol,
    ClosedForm,
    Resultant,
    Fingerprint,
}

impl Campaign {
    pub const ALL: [Campaign; 9] = [
        Campaign::Theorem1,
        Campaign::RealGate,
        Campaign::ComplexGate,
        Campaign::Appendix,
        Campaign::InvariantOracle,
        Campaign::Protocol,
        Campaign::ClosedForm,
        Campaign::Resultant,
        Campaign::Fingerprint,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Campaign::Theorem1 => "theorem1",
            Campaign::RealGate => "real_gate",
            Campaign::ComplexGate => "complex_gate",
            Campaign::Appendix => "appendix",
            Campaign::InvariantOracle => "invariant_oracle",
            Campaign::Protocol => "protocol",
            Campaign::ClosedForm => "closed_form",
            Campaign::Resultant => "resultant",
            Campaign::Fingerprint => "fingerprint",
        }
    }

    /// Random trials in a full run. The protocol campaign also runs a fixed
    /// grid of real targets on top of its random complex ones.
    pub fn default_trials(self) -> usize {
        match self {
            Campaign::Theorem1 | Campaign::RealGate => 1000,
            Campaign::ComplexGate | Campaign::ClosedForm => 500,
            Campaign::Appendix | Campaign::InvariantOracle | Campaign::Fingerprint => 200,
            Campaign::Protocol | Campaign::Resultant => 100,
        }
    }

    /// Names and thresholds of the checks, in report order.
    fn checks(self) -> &'static [(&'static str, f64)] {
        match self {
            Campaign::Theorem1 => &[("re_omega_conservation", 1e-8)],
            Campaign::RealGate => &[("cond1_residual", 1e-9), ("cond2_residual", 1e-9), ("same_orbit", 0.0)],
            Campaign::ComplexGate => &[("gate_residual", 1e-9), ("same_orbit", 0.0)],
            Campaign::Appendix => &[
                ("root_product", 1e-9),
                ("third_root", 1e-9),
                ("one_root_above_one", 0.0),
                ("cayley_hamilton", 1e-9),
                ("i5_decreases", 0.0),
            ],
            Campaign::InvariantOracle => &[("max_abs_difference", 1e-9)],
            Campaign::Protocol => &[
                ("fidelity_deficit", 1e-10),
                ("probability_sum", 1e-10),
                ("max_abs_re_omega", 1e-8),
            ],
            Campaign::ClosedForm => &[("closed_form", 1e-10), ("outcome_symmetry", 1e-10)],
            Campaign::Resultant => &[("off_band_energy", 1e-6)],
            Campaign::Fingerprint => &[("conjugate_orbit", 0.0), ("same_orbit", 0.0)],
        }
    }
}

impl fmt::Display for Campaign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Campaign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Campaign> {
        Campaign::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown campaign {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub tolerances: Tolerances,
    pub seed: u64,
    pub grid_size: usize,
    /// `None` means [`Campaign::default_trials`].
    pub trials: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            tolerances: Tolerances::default(),
            seed: 0,
            grid_size: DEFAULT_GRID,
            trials: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub name: String,
    /// Residuals at or below this pass; boolean checks use 0 for a pass
    /// and 1 for a failure.
    pub threshold: f64,
    pub passed: usize,
    pub failed: usize,
    pub max_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialFailure {
    pub trial: usize,
    pub seed: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub campaign: Campaign,
    pub seed: u64,
    pub trials: usize,
    pub grid_size: usize,
    pub checks: Vec<CheckSummary>,
    pub trials_passed: usize,
    pub success_rate: f64,
    pub failing_seeds: Vec<u64>,
    pub failures: Vec<TrialFailure>,
}

impl CampaignReport {
    pub fn check(&self, name: &str) -> Option<&CheckSummary> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn all_passed(&self) -> bool {
        self.trials_passed == self.trials
    }
}

fn flag(ok: bool) -> f64 {
    if ok {
        0.0
    } else {
        1.0
    }
}

fn random_party(rng: &mut ChaCha8Rng) -> Party {
    Party::ALL[rng.random_range(0..3)]
}

fn ghz_state(rng: &mut ChaCha8Rng, ensemble: Ensemble, tol: &Tolerances) -> Result<PureState3Q> {
    sample_state(rng, ensemble, tol, DEFAULT_MAX_ATTEMPTS)
}

/// A gate state, its party and the gate search that produced it; even
/// trials start from real states, odd ones from complex states.
fn gate_state(trial: usize, rng: &mut ChaCha8Rng, tol: &Tolerances) -> Result<(PureState3Q, Party)> {
    if trial.is_multiple_of(2) {
        let s = ghz_state(rng, Ensemble::GhzClassReal, tol)?;
        let p = random_party(rng);
        Ok((find_gate_unitary_real(&s, p, tol)?.transformed, p))
    } else {
        let s = ghz_state(rng, Ensemble::GhzClassComplex, tol)?;
        Ok((find_gate_unitary_complex(&s, Party::A, tol)?.transformed, Party::A))
    }
}

fn theorem1(rng: &mut ChaCha8Rng, tol: &Tolerances) -> Result<Vec<f64>> {
    let s = ghz_state(rng, Ensemble::GhzClassComplex, tol)?;
    let party = random_party(rng);
    let kraus = random_kraus_pair(rng, 0.05);
    let report = verify_omega_conservation(&s, party, &kraus, tol)?;
    Ok(vec![report.difference.abs()])
}

fn real_gate(rng: &mut ChaCha8Rng, tol: &Tolerances) -> Result<Vec<f64>> {
    let s = ghz_state(rng, Ensemble::GhzClassReal, tol)?;
    let lambda = rng.random_range(1.1..10.0);
    let (mut r1, mut r2, mut same) = (0.0f64, 0.0f64, true);
    for p in Party::ALL {
        let g = find_gate_unitary_real(&s, p, tol)?;
        r1 = r1.max(g.residuals.r1.abs());
        r2 = r2.max(g.residuals.r2.norm());
        let povm = DeterministicPovm::build(&s, p, &g.unitary, lambda, tol);
        same &= povm.is_ok();
    }
    Ok(vec![r1, r2, flag(same)])
}

fn complex_gate(rng: &mut ChaCha8Rng, tol: &Tolerances) -> Result<Vec<f64>> {
    let s = ghz_state(rng, Ensemble::GhzClassComplex, tol)?;
    let g = find_gate_unitary_complex(&s, Party::A, tol)?;
    let lambda = g.lambda.unwrap_or(2.0);
    let povm = DeterministicPovm::build(&s, Party::A, &g.unitary, lambda, tol)?;
    let app = apply_deterministic_povm(&s, &povm, tol)?;
    Ok(vec![g.residuals.max_abs(), flag(app.verdict == OrbitRelation::SameOrbit)])
}

fn appendix(trial: usize, rng: &mut ChaCha8Rng, tol: &Tolerances) -> Result<Vec<f64>> {
    let (g, p) = gate_state(trial, rng, tol)?;
    let lambda = rng.random_range(1.1..10.0);
    let r = appendix_checks(&g, p, lambda, tol)?;
    Ok(vec![
        r.root_product_gap(),
        r.third_root_gap(),
        flag(r.exactly_one_above_one),
        r.cayley_hamilton_gap(),
        flag(r.i5_decreases()),
    ])
}

fn invariant_oracle(trial: usize, rng: &mut ChaCha8Rng, tol: &Tolerances) -> Result<Vec<f64>> {
    const ENSEMBLES: [Ensemble; 4] = [
        Ensemble::ComplexHaar,
        Ensemble::RealOrthogonal,
        Ensemble::GhzClassReal,
        Ensemble::GhzClassComplex,
    ];
    let s = ghz_state(rng, ENSEMBLES[trial % 4], tol)?;
    let fast = compute_invariants_with(&s, tol.i6);
    let slow = brute_force_invariants_with(&s, tol.i6);
    Ok(vec![fast.max_abs_diff(&slow)])
}

fn closed_form(trial: usize, rng: &mut ChaCha8Rng, tol: &Tolerances) -> Result<Vec<f64>> {
    let (g, p) = gate_state(trial, rng, tol)?;
    let mut t = g.t_matrices(p);
    if t.a > t.b {
        t = t.flipped();
    }
    let (x, y) = solve_condpovm(t.a, t.b, rng.random_range(1.1..10.0))?;
    let closed = outcome_invariants_closed_form(&t, x, y);
    let partner = outcome_invariants_closed_form(&t, 1.0 - x, 1.0 - y);
    let outcome = PureState3Q::normalized(t.scale_slices(x, y).amplitudes())?;
    let direct = compute_invariants_with(&outcome, tol.i6).real_part();
    let gap = |u: &[f64; 5], v: &[f64; 5]| u.iter().zip(v).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    Ok(vec![gap(&closed, &direct), gap(&closed, &partner)])
}

fn protocol_residuals(trace: &ProtocolTrace) -> Vec<f64> {
    vec![
        1.0 - trace.min_fidelity,
        (trace.total_probability - 1.0).abs(),
        trace.max_abs_re_omega,
    ]
}

/// The `i`th point of the real target grid.
pub fn protocol_grid_spec(i: usize) -> Result<TargetRealSpec> {
    let n = PROTOCOL_GRID;
    let (im, id, idp) = (i / (n * n), (i / n) % n, i % n);
    let mu = FRAC_1_SQRT_2 + (0.99 - FRAC_1_SQRT_2) * im as f64 / (n - 1) as f64;
    let delta = |k: usize| FRAC_PI_2 * (k + 1) as f64 / n as f64;
    TargetRealSpec::new(mu, delta(id), delta(idp))
}

fn protocol(trial: usize, rng: &mut ChaCha8Rng, tol: &Tolerances) -> Result<Vec<f64>> {
    let grid = PROTOCOL_GRID.pow(3);
    let trace = if trial < grid {
        ghz_to_real(protocol_grid_spec(trial)?, tol)?
    } else {
        let mut d = || rng.random_range(0.02..FRAC_PI_2 - 0.02);
        let (a, b, c) = (d(), d(), d());
        ghz_to_complex(TargetComplexSpec::new(a, b, c)?, tol)?
    };
    Ok(protocol_residuals(&trace))
}

fn resultant(rng: &mut ChaCha8Rng, grid_size: usize, tol: &Tolerances) -> Result<Vec<f64>> {
    let s = ghz_state(rng, Ensemble::GhzClassComplex, tol)?;
    let spectrum = resultant_spectrum(&s, Party::A, grid_size)?;
    Ok(vec![1.0 - spectrum.structured_fraction])
}

fn fingerprint(rng: &mut ChaCha8Rng, tol: &Tolerances) -> Result<Vec<f64>> {
    let s = ghz_state(rng, Ensemble::ComplexHaar, tol)?;
    let image = s.apply_local_unitaries(&random_local_unitaries(rng), tol.unit)?;
    let f = compute_invariants_with(&s, tol.i6);
    let conj = orbit_fingerprints_equal(&f, &compute_invariants_with(&s.conjugate(), tol.i6), tol.orbit);
    let same = orbit_fingerprints_equal(&f, &compute_invariants_with(&image, tol.i6), tol.orbit);
    Ok(vec![
        flag(conj == OrbitRelation::ConjugateOrbit),
        flag(same == OrbitRelation::SameOrbit),
    ])
}

pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    seed ^ trial as u64
}

fn run_trial(campaign: Campaign, trial: usize, config: &RunConfig) -> Result<Vec<f64>> {
    let mut rng = rng_from_seed(trial_seed(config.seed, trial));
    let tol = &config.tolerances;
    match campaign {
        Campaign::Theorem1 => theorem1(&mut rng, tol),
        Campaign::RealGate => real_gate(&mut rng, tol),
        Campaign::ComplexGate => complex_gate(&mut rng, tol),
        Campaign::Appendix => appendix(trial, &mut rng, tol),
        Campaign::InvariantOracle => invariant_oracle(trial, &mut rng, tol),
        Campaign::Protocol => protocol(trial, &mut rng, tol),
        Campaign::ClosedForm => closed_form(trial, &mut rng, tol),
        Campaign::Resultant => resultant(&mut rng, config.grid_size, tol),
        Campaign::Fingerprint => fingerprint(&mut rng, tol),
    }
}

pub fn run_campaign(campaign: Campaign, config: &RunConfig) -> Result<CampaignReport> {
    config.tolerances.validate()?;
    if config.grid_size < 64 {
        return Err(Error::InvalidParameter(format!("grid size {} is below 64", config.grid_size)));
    }
    let random = config.trials.unwrap_or_else(|| campaign.default_trials());
    let trials = match campaign {
        Campaign::Protocol => random + PROTOCOL_GRID.pow(3),
        _ => random,
    };
    let outcomes: Vec<Result<Vec<f64>>> = (0..trials)
        .into_par_iter()
        .map(|n| run_trial(campaign, n, config))
        .collect();

    let specs = campaign.checks();
    let mut checks: Vec<CheckSummary> = specs
        .iter()
        .map(|&(name, threshold)| CheckSummary {
            name: name.to_string(),
            threshold,
            passed: 0,
            failed: 0,
            max_residual: 0.0,
        })
        .collect();
    let mut trials_passed = 0;
    let mut failing_seeds = Vec::new();
    let mut failures = Vec::new();
    for (n, outcome) in outcomes.into_iter().enumerate() {
        let seed = trial_seed(config.seed, n);
        let reason = match outcome {
            Ok(values) => {
                let mut bad = Vec::new();
                for (c, v) in checks.iter_mut().zip(values) {
                    c.max_residual = c.max_residual.max(v);
                    if v <= c.threshold {
                        c.passed += 1;
                    } else {
                        c.failed += 1;
                        bad.push(format!("{} = {v:e}", c.name));
                    }
                }
                (!bad.is_empty()).then(|| bad.join(", "))
            }
            Err(e) => {
                for c in &mut checks {
                    c.failed += 1;
                    c.max_residual = f64::INFINITY;
                }
                Some(format!("{}: {e}", e.code()))
            }
        };
        match reason {
            None => trials_passed += 1,
            Some(reason) => {
                failing_seeds.push(seed);
                if failures.len() < MAX_RECORDED_FAILURES {
                    failures.push(TrialFailure { trial: n, seed, reason });
                }
            }
        }
    }
    Ok(CampaignReport {
        campaign,
        seed: config.seed,
        trials,
        grid_size: config.grid_size,
        checks,
        trials_passed,
        success_rate: if trials == 0 { 1.0 } else { trials_passed as f64 / trials as f64 },
        failing_seeds,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(trials: usize) -> RunConfig {
        RunConfig {
            trials: Some(trials),
            seed: 42,
            ..RunConfig::default()
        }
    }

    #[test]
    fn names_round_trip() {
        for c in Campaign::ALL {
            assert_eq!(c.name().parse::<Campaign>().unwrap(), c);
            assert_eq!(serde_json::to_string(&c).unwrap(), format!("\"{}\"", c.name()));
        }
        assert!("nope".parse::<Campaign>().is_err());
    }

    #[test]
    fn small_runs_pass_and_repeat() {
        for c in [Campaign::Theorem1, Campaign::RealGate, Campaign::ComplexGate, Campaign::Fingerprint] {
            let a = run_campaign(c, &small(8)).unwrap();
            assert!(a.all_passed(), "{c}: {:?}", a.failures);
            let b = run_campaign(c, &small(8)).unwrap();
            assert_eq!(crate::json::to_string(&a).unwrap(), crate::json::to_string(&b).unwrap());
        }
    }

    #[test]
    fn protocol_grid_covers_the_ranges() {
        let first = protocol_grid_spec(0).unwrap();
        let last = protocol_grid_spec(PROTOCOL_GRID.pow(3) - 1).unwrap();
        assert!((first.mu - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((last.mu - 0.99).abs() < 1e-15);
        assert!((last.delta - FRAC_PI_2).abs() < 1e-15);
        assert_eq!(run_campaign(Campaign::Protocol, &small(2)).unwrap().trials, 127);
    }

    #[test]
    fn failures_are_data() {
        let r = run_campaign(Campaign::Appendix, &small(4)).unwrap();
        assert_eq!(r.check("i5_decreases").unwrap().failed, 4);
        assert_eq!(r.failing_seeds.len(), 4);
        assert_eq!(r.check("root_product").unwrap().failed, 0);
    }

    #[test]
    fn bad_config_is_rejected() {
        let mut c = small(1);
        c.grid_size = 8;
        assert!(run_campaign(Campaign::Resultant, &c).is_err());
        c.grid_size = DEFAULT_GRID;
        c.tolerances.gate = 0.0;
        assert!(run_campaign(Campaign::Resultant, &c).is_err());
    }
}
