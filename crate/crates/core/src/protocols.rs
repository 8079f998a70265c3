//! Deterministic three-step protocols taking GHZ to the real states with
//! `Re Ω = 0`, with every branch simulated and corrected back onto one state.
//!
//! Roles: the `third` party measures first and prepares `|φ′⟩`, the
//! `second` prepares `|φ⟩`, and the `first` party finally sets the weights
//! (or the `i|φ″⟩` term). With the standard roles these are Charlie, Bob
//! and Alice.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::canonical::{decompose_ghz, omega, GhzParameters};
use crate::invariants::{compute_invariants_with, orbit_fingerprints_equal, OrbitRelation};
use crate::mat2::Mat2;
use crate::random::{haar_orthogonal, rng_from_seed, sample_state, Ensemble};
use crate::state::{Party, PureState3Q};
use crate::{Error, Result, Tolerances};

/// Slack on the closed ends of the parameter ranges.
const RANGE_SLACK: f64 = 1e-12;

/// `|Ω|` or `|cos δ|` below this counts as zero when reading a target.
const ZERO_OMEGA: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Roles {
    pub first: Party,
    pub second: Party,
    pub third: Party,
}

impl Roles {
    pub const STANDARD: Roles = Roles {
        first: Party::A,
        second: Party::B,
        third: Party::C,
    };

    pub fn new(first: Party, second: Party, third: Party) -> Result<Self> {
        if first == second || second == third || first == third {
            return Err(Error::InvalidParameter(format!(
                "roles ({first}, {second}, {third}) are not a permutation"
            )));
        }
        Ok(Roles { first, second, third })
    }

    /// The roles with `first` holding `|1⟩` and the other two in `A, B, C`
    /// order.
    pub fn led_by(first: Party) -> Self {
        let [second, third] = first.others();
        Roles { first, second, third }
    }

    fn deltas(&self, first: f64, second: f64, third: f64) -> [f64; 3] {
        let mut d = [0.0; 3];
        d[self.first.index()] = first;
        d[self.second.index()] = second;
        d[self.third.index()] = third;
        d
    }
}

impl Default for Roles {
    fn default() -> Self {
        Roles::STANDARD
    }
}

/// `μ|000⟩ + ν|1⟩|φ⟩|φ′⟩`, `ν = √(1 − μ²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetRealSpec {
    pub mu: f64,
    pub delta: f64,
    pub delta_prime: f64,
}

impl TargetRealSpec {
    pub fn new(mu: f64, delta: f64, delta_prime: f64) -> Result<Self> {
        if !(FRAC_1_SQRT_2 - RANGE_SLACK..1.0).contains(&mu) {
            return Err(Error::OutOfRange(format!("mu = {mu} is outside [1/√2, 1)")));
        }
        for (name, d) in [("delta", delta), ("delta_prime", delta_prime)] {
            if !(d > 0.0 && d <= FRAC_PI_2 + RANGE_SLACK) {
                return Err(Error::OutOfRange(format!("{name} = {d} is outside (0, π/2]")));
            }
        }
        Ok(TargetRealSpec {
            mu: mu.max(FRAC_1_SQRT_2),
            delta: delta.min(FRAC_PI_2),
            delta_prime: delta_prime.min(FRAC_PI_2),
        })
    }

    pub fn nu(&self) -> f64 {
        (1.0 - self.mu * self.mu).sqrt()
    }

    pub fn target(&self, roles: Roles) -> Result<PureState3Q> {
        GhzParameters {
            mu: self.mu,
            nu: self.nu(),
            gamma: 0.0,
            deltas: roles.deltas(FRAC_PI_2, self.delta, self.delta_prime),
        }
        .state()
    }
}

/// `(|000⟩ + i|φ″⟩|φ⟩|φ′⟩)/√2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetComplexSpec {
    pub delta: f64,
    pub delta_prime: f64,
    pub delta_double_prime: f64,
}

impl TargetComplexSpec {
    pub fn new(delta: f64, delta_prime: f64, delta_double_prime: f64) -> Result<Self> {
        for (name, d) in [
            ("delta", delta),
            ("delta_prime", delta_prime),
            ("delta_double_prime", delta_double_prime),
        ] {
            // at 0 or π/2 the state is LU-equivalent to a real one
            if !(d > 0.0 && d < FRAC_PI_2) {
                return Err(Error::OutOfRange(format!("{name} = {d} is outside (0, π/2)")));
            }
        }
        Ok(TargetComplexSpec {
            delta,
            delta_prime,
            delta_double_prime,
        })
    }

    pub fn target(&self, roles: Roles) -> Result<PureState3Q> {
        GhzParameters {
            mu: FRAC_1_SQRT_2,
            nu: FRAC_1_SQRT_2,
            gamma: FRAC_PI_2,
            deltas: roles.deltas(self.delta_double_prime, self.delta, self.delta_prime),
        }
        .state()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProtocolTarget {
    Real(TargetRealSpec),
    Complex(TargetComplexSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchRecord {
    /// Outcomes along the way, e.g. `"01"`.
    pub path: String,
    /// Probability of this outcome given its parent.
    pub probability: f64,
    pub outcome: PureState3Q,
    /// Local unitaries applied to the outcome, in `A, B, C` order.
    pub corrections: [Mat2; 3],
    pub corrected: PureState3Q,
    pub fidelity: f64,
    pub re_omega_outcome: f64,
    pub re_omega_corrected: f64,
    /// Relation between this outcome and its sibling.
    pub verdict: OrbitRelation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub party: Party,
    pub pre_rotation: Mat2,
    /// `[E0 V, E1 V]` including the pre-rotation `V`.
    pub kraus: [Mat2; 2],
    pub completeness_deviation: f64,
    pub target: PureState3Q,
    pub branches: Vec<BranchRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leaf {
    pub path: String,
    pub probability: f64,
    pub state: PureState3Q,
    pub fidelity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolTrace {
    pub spec: ProtocolTarget,
    pub roles: Roles,
    pub target: PureState3Q,
    pub steps: Vec<StepRecord>,
    pub leaves: Vec<Leaf>,
    pub total_probability: f64,
    pub min_fidelity: f64,
    /// Largest `|Re Ω|` over every outcome and corrected state.
    pub max_abs_re_omega: f64,
}

struct StepPlan {
    party: Party,
    pre_rotation: Mat2,
    diag: [Mat2; 2],
    corrections: [[Mat2; 3]; 2],
    target: PureState3Q,
}

struct Branch {
    path: String,
    probability: f64,
    state: PureState3Q,
}

/// `(√2/2)[[1, 1], [−1, 1]]`.
fn balancing_unitary() -> Mat2 {
    Mat2::from_real(FRAC_1_SQRT_2, FRAC_1_SQRT_2, -FRAC_1_SQRT_2, FRAC_1_SQRT_2)
}

/// `E0 = diag(√x, √(1−x))`, `E1 = diag(√(1−x), √x)`.
fn balanced_povm(x: f64) -> [Mat2; 2] {
    let (p, q) = (x.sqrt(), (1.0 - x).sqrt());
    [Mat2::diag_real(p, q), Mat2::diag_real(q, p)]
}

/// Real rotation with first row `(√x, −√(1−x))`.
fn aligning_rotation(x: f64) -> Mat2 {
    let (p, q) = (x.sqrt(), (1.0 - x).sqrt());
    Mat2::from_real(p, -q, q, p)
}

fn lift(ops: &[(Party, Mat2)]) -> [Mat2; 3] {
    let mut out = [Mat2::IDENTITY; 3];
    for (p, m) in ops {
        out[p.index()] = *m * out[p.index()];
    }
    out
}

/// A balanced step on `party`: after `U` and the POVM, outcome `k` holds
/// `E_k U|0⟩ ∝ |0_k⟩` and `E_k U|1⟩ ∝ |1_k⟩` with `⟨0_k|1_k⟩ = ±(2x − 1)`.
/// The rotation taking `|0_k⟩` to `|0⟩` sends `|1_k⟩` to `|φ⟩` for `k = 0`
/// and to `(−cos δ, sin δ)` for `k = 1`; `Z` on the party then gives
/// `−|φ⟩`, and `Z` on `first` absorbs the sign.
fn preparation_step(party: Party, first: Party, delta: f64, target: PureState3Q) -> StepPlan {
    let x = (1.0 + delta.cos()) / 2.0;
    StepPlan {
        party,
        pre_rotation: balancing_unitary(),
        diag: balanced_povm(x),
        corrections: [
            lift(&[(party, aligning_rotation(x))]),
            lift(&[
                (party, Mat2::pauli_z() * aligning_rotation(1.0 - x)),
                (first, Mat2::pauli_z()),
            ]),
        ],
        target,
    }
}

fn intermediate_targets(roles: Roles, delta: f64, delta_prime: f64) -> Result<[PureState3Q; 2]> {
    let half = |deltas| {
        GhzParameters {
            mu: FRAC_1_SQRT_2,
            nu: FRAC_1_SQRT_2,
            gamma: 0.0,
            deltas,
        }
        .state()
    };
    Ok([
        half(roles.deltas(FRAC_PI_2, FRAC_PI_2, delta_prime))?,
        half(roles.deltas(FRAC_PI_2, delta, delta_prime))?,
    ])
}

fn run(spec: ProtocolTarget, roles: Roles, final_step: StepPlan, delta: f64, delta_prime: f64, tol: &Tolerances) -> Result<ProtocolTrace> {
    let [t1, t2] = intermediate_targets(roles, delta, delta_prime)?;
    let target = final_step.target;
    let plans = [
        preparation_step(roles.third, roles.first, delta_prime, t1),
        preparation_step(roles.second, roles.first, delta, t2),
        final_step,
    ];
    let mut branches = vec![Branch {
        path: String::new(),
        probability: 1.0,
        state: PureState3Q::ghz(),
    }];
    let mut steps = Vec::with_capacity(3);
    let mut max_abs_re_omega = 0.0f64;
    for (index, plan) in plans.iter().enumerate() {
        let (record, next) = run_step(plan, &branches, tol).map_err(|e| Error::Step {
            index,
            party: plan.party,
            source: Box::new(e),
        })?;
        for b in &record.branches {
            max_abs_re_omega = max_abs_re_omega.max(b.re_omega_outcome.abs()).max(b.re_omega_corrected.abs());
        }
        steps.push(record);
        branches = next;
    }
    let leaves: Vec<Leaf> = branches
        .into_iter()
        .map(|b| Leaf {
            fidelity: b.state.fidelity_up_to_global_phase(&target),
            path: b.path,
            probability: b.probability,
            state: b.state,
        })
        .collect();
    Ok(ProtocolTrace {
        spec,
        roles,
        target,
        total_probability: leaves.iter().map(|l| l.probability).sum(),
        min_fidelity: leaves.iter().map(|l| l.fidelity).fold(f64::INFINITY, f64::min),
        steps,
        leaves,
        max_abs_re_omega,
    })
}

fn run_step(plan: &StepPlan, inputs: &[Branch], tol: &Tolerances) -> Result<(StepRecord, Vec<Branch>)> {
    let kraus = plan.diag.map(|e| e * plan.pre_rotation);
    let completeness = kraus[0].adjoint() * kraus[0] + kraus[1].adjoint() * kraus[1];
    let completeness_deviation = completeness.max_abs_diff(&Mat2::IDENTITY);
    if completeness_deviation > tol.unit {
        return Err(Error::IncompletePovm {
            deviation: completeness_deviation,
        });
    }
    let mut records = Vec::with_capacity(2 * inputs.len());
    let mut next = Vec::with_capacity(2 * inputs.len());
    for input in inputs {
        let outcomes = [0, 1].map(|k| input.state.apply_kraus(plan.party, &kraus[k], tol));
        let [o0, o1] = outcomes;
        let outcomes = [o0?, o1?];
        let prints = outcomes.map(|(s, _)| compute_invariants_with(&s, tol.i6));
        let verdict = orbit_fingerprints_equal(&prints[0], &prints[1], tol.orbit);
        for (k, (outcome, q)) in outcomes.into_iter().enumerate() {
            let corrected = outcome.apply_local_unitaries(&plan.corrections[k], tol.unit)?;
            let fidelity = corrected.fidelity_up_to_global_phase(&plan.target);
            if !(fidelity >= 1.0 - tol.proto) {
                return Err(Error::BranchCorrectionFailed {
                    leaf: next.len(),
                    fidelity,
                });
            }
            let path = format!("{}{k}", input.path);
            records.push(BranchRecord {
                path: path.clone(),
                probability: q,
                outcome,
                corrections: plan.corrections[k],
                corrected,
                fidelity,
                re_omega_outcome: omega(&outcome, tol)?.value.re,
                re_omega_corrected: omega(&corrected, tol)?.value.re,
                verdict,
            });
            next.push(Branch {
                path,
                probability: input.probability * q,
                state: corrected,
            });
        }
    }
    Ok((
        StepRecord {
            party: plan.party,
            pre_rotation: plan.pre_rotation,
            kraus,
            completeness_deviation,
            target: plan.target,
            branches: records,
        },
        next,
    ))
}

pub fn ghz_to_real(spec: TargetRealSpec, tol: &Tolerances) -> Result<ProtocolTrace> {
    ghz_to_real_with_roles(spec, Roles::STANDARD, tol)
}

pub fn ghz_to_real_with_roles(spec: TargetRealSpec, roles: Roles, tol: &Tolerances) -> Result<ProtocolTrace> {
    let spec = TargetRealSpec::new(spec.mu, spec.delta, spec.delta_prime)?;
    // outcome 1 is ν|000⟩ + μ|1φφ′⟩: X on first and the reflections
    // |0⟩ ↔ |φ⟩, |0⟩ ↔ |φ′⟩ swap the two terms back
    let last = StepPlan {
        party: roles.first,
        pre_rotation: Mat2::IDENTITY,
        diag: balanced_povm(spec.mu * spec.mu),
        corrections: [
            [Mat2::IDENTITY; 3],
            lift(&[
                (roles.first, Mat2::pauli_x()),
                (roles.second, Mat2::reflection(spec.delta)),
                (roles.third, Mat2::reflection(spec.delta_prime)),
            ]),
        ],
        target: spec.target(roles)?,
    };
    run(ProtocolTarget::Real(spec), roles, last, spec.delta, spec.delta_prime, tol)
}

/// `A0 = [[1, i cos δ″], [0, i sin δ″]]/√2` and its conjugate.
pub fn complex_step_kraus(delta_double_prime: f64) -> [Mat2; 2] {
    let (s, c) = delta_double_prime.sin_cos();
    let h = FRAC_1_SQRT_2;
    let zero = Complex64::new(0.0, 0.0);
    let a0 = Mat2::new(Complex64::new(h, 0.0), Complex64::new(0.0, h * c), zero, Complex64::new(0.0, h * s));
    [a0, a0.conj()]
}

pub fn ghz_to_complex(spec: TargetComplexSpec, tol: &Tolerances) -> Result<ProtocolTrace> {
    ghz_to_complex_with_roles(spec, Roles::STANDARD, tol)
}

pub fn ghz_to_complex_with_roles(spec: TargetComplexSpec, roles: Roles, tol: &Tolerances) -> Result<ProtocolTrace> {
    let spec = TargetComplexSpec::new(spec.delta, spec.delta_prime, spec.delta_double_prime)?;
    // outcome 1 is the conjugate; three reflections swap |000⟩ and
    // |φ″φφ′⟩, giving the target times −i
    let last = StepPlan {
        party: roles.first,
        pre_rotation: Mat2::IDENTITY,
        diag: complex_step_kraus(spec.delta_double_prime),
        corrections: [
            [Mat2::IDENTITY; 3],
            lift(&[
                (roles.first, Mat2::reflection(spec.delta_double_prime)),
                (roles.second, Mat2::reflection(spec.delta)),
                (roles.third, Mat2::reflection(spec.delta_prime)),
            ]),
        ],
        target: spec.target(roles)?,
    };
    run(ProtocolTarget::Complex(spec), roles, last, spec.delta, spec.delta_prime, tol)
}

pub fn run_protocol(spec: ProtocolTarget, roles: Roles, tol: &Tolerances) -> Result<ProtocolTrace> {
    match spec {
        ProtocolTarget::Real(s) => ghz_to_real_with_roles(s, roles, tol),
        ProtocolTarget::Complex(s) => ghz_to_complex_with_roles(s, roles, tol),
    }
}

/// How a target relates to GHZ under deterministic LOCC.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Reachability {
    /// The protocol for `spec` with `roles`, followed by the local unitaries
    /// `frame`, produces the target on every branch.
    Reachable {
        spec: ProtocolTarget,
        roles: Roles,
        frame: [Mat2; 3],
        min_fidelity: f64,
    },
    /// `Re Ω` differs from GHZ's value, which no deterministic protocol
    /// can change.
    Unreachable { re_omega_source: f64, re_omega_target: f64 },
    /// `Re Ω = 0`, but the target is not LU-equivalent to a real state.
    Open { omega: Complex64 },
}

fn clamp_delta(d: f64) -> f64 {
    d.clamp(0.0, FRAC_PI_2)
}

/// Protocol parameters (and the final local unitaries) for a GHZ-class
/// target, read off its canonical form.
pub fn reachability(target: &PureState3Q, tol: &Tolerances) -> Result<Reachability> {
    let form = decompose_ghz(target, tol)?;
    let om = form.omega;
    if om.re.abs() > tol.orbit {
        return Ok(Reachability::Unreachable {
            re_omega_source: 0.0,
            re_omega_target: om.re,
        });
    }
    let deltas = form.deltas().map(clamp_delta);
    let n = (form.mu * form.mu + form.nu * form.nu).sqrt();
    // the frame maps the target onto its canonical form; undo it at the end
    let undo = form.frame.map(|u| u.adjoint());
    let (spec, roles, frame) = if om.norm() <= ZERO_OMEGA {
        let Some(first) = Party::ALL.into_iter().find(|p| deltas[p.index()].cos().abs() <= ZERO_OMEGA) else {
            return Ok(Reachability::Open { omega: om });
        };
        let roles = Roles::led_by(first);
        let spec = TargetRealSpec::new(form.mu / n, deltas[roles.second.index()], deltas[roles.third.index()])?;
        (ProtocolTarget::Real(spec), roles, undo)
    } else if (form.mu - form.nu).abs() <= tol.degenerate * form.mu {
        let spec = TargetComplexSpec::new(deltas[1], deltas[2], deltas[0])?;
        let mut frame = undo;
        if form.gamma.sin() < 0.0 {
            // the −i member is the conjugate; the reflections map it to the
            // +i member up to a global phase
            for (p, d) in Party::ALL.into_iter().zip(deltas) {
                frame[p.index()] = undo[p.index()] * Mat2::reflection(d);
            }
        }
        (ProtocolTarget::Complex(spec), Roles::STANDARD, frame)
    } else {
        return Ok(Reachability::Open { omega: om });
    };
    let trace = run_protocol(spec, roles, tol)?;
    let mut min_fidelity = f64::INFINITY;
    for (leaf, l) in trace.leaves.iter().enumerate() {
        let fidelity = l.state.apply_local_unitaries(&frame, tol.unit)?.fidelity_up_to_global_phase(target);
        if !(fidelity >= 1.0 - tol.proto) {
            return Err(Error::BranchCorrectionFailed { leaf, fidelity });
        }
        min_fidelity = min_fidelity.min(fidelity);
    }
    Ok(Reachability::Reachable {
        spec,
        roles,
        frame,
        min_fidelity,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum TargetFamily {
    /// `μ|000⟩ + ν` times `|1⟩` on `first` and `|φ⟩, |φ′⟩` on the others.
    Orthogonal { first: Party },
    /// `(|000⟩ ± i|φ⟩|φ′⟩|φ″⟩)/√2` with no factor equal to `|0⟩` or `|1⟩`.
    ImaginaryOverlap,
}

impl TargetFamily {
    pub fn all() -> [TargetFamily; 4] {
        [
            TargetFamily::Orthogonal { first: Party::A },
            TargetFamily::Orthogonal { first: Party::B },
            TargetFamily::Orthogonal { first: Party::C },
            TargetFamily::ImaginaryOverlap,
        ]
    }

    pub fn describe(&self) -> String {
        match self {
            TargetFamily::Orthogonal { first } => format!(
                "mu|000> + nu|1>_{first}|phi>|phi'>, mu in [1/sqrt2, 1), delta, delta' in (0, pi/2]"
            ),
            TargetFamily::ImaginaryOverlap => {
                "(|000> +- i|phi''>|phi>|phi'>)/sqrt2, all deltas in (0, pi/2)".to_string()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySample {
    pub family: TargetFamily,
    pub target: PureState3Q,
    pub reachability: Reachability,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReachabilityReport {
    pub families: Vec<(TargetFamily, String)>,
    pub samples: Vec<FamilySample>,
    /// Random real GHZ-class states with `Re Ω ≠ 0`, all of which must come
    /// back unreachable.
    pub rejected: Vec<(PureState3Q, Reachability)>,
}

fn sample_family<R: Rng>(rng: &mut R, family: TargetFamily, tol: &Tolerances) -> Result<PureState3Q> {
    let mut delta = || rng.random_range(0.05..FRAC_PI_2 - 0.05);
    let state = match family {
        TargetFamily::Orthogonal { first } => {
            let (d, dp) = (delta(), delta());
            let mu = rng.random_range(FRAC_1_SQRT_2..0.99);
            TargetRealSpec::new(mu, d, dp)?.target(Roles::led_by(first))?
        }
        TargetFamily::ImaginaryOverlap => {
            let (d, dp, dpp) = (delta(), delta(), delta());
            TargetComplexSpec::new(d, dp, dpp)?.target(Roles::STANDARD)?
        }
    };
    // hide the canonical frame behind random real local unitaries
    let us = [haar_orthogonal(rng), haar_orthogonal(rng), haar_orthogonal(rng)];
    state.apply_local_unitaries(&us, tol.unit)
}

/// The reachable real targets of a GHZ-orbit state, checked on sampled
/// members of every family and on sampled states outside the subclass.
pub fn enumerate_reachable_real_targets(
    state: &PureState3Q,
    samples_per_family: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<ReachabilityReport> {
    let ghz = compute_invariants_with(&PureState3Q::ghz(), tol.i6);
    let own = compute_invariants_with(state, tol.i6);
    if orbit_fingerprints_equal(&own, &ghz, tol.orbit) != OrbitRelation::SameOrbit {
        return Err(Error::NotGhzOrbit);
    }
    let mut rng = rng_from_seed(seed);
    let mut samples = Vec::new();
    for family in TargetFamily::all() {
        for _ in 0..samples_per_family {
            let target = sample_family(&mut rng, family, tol)?;
            samples.push(FamilySample {
                family,
                reachability: reachability(&target, tol)?,
                target,
            });
        }
    }
    let mut rejected = Vec::new();
    while rejected.len() < samples_per_family {
        let s = sample_state(&mut rng, Ensemble::GhzClassReal, tol, 1000)?;
        if let Ok(r @ Reachability::Unreachable { .. }) = reachability(&s, tol) {
            rejected.push((s, r));
        }
    }
    Ok(ReachabilityReport {
        families: TargetFamily::all().iter().map(|f| (*f, f.describe())).collect(),
        samples,
        rejected,
    })
}
