//! Deterministic two-outcome POVMs on gate states.
//!
//! After the gate unitary, the POVM is diagonal, `E0 = diag(√x, √y)` and
//! `E1 = diag(√(1−x), √(1−y))`, with `a² x(1−x) = b² y(1−y)`. Taking
//! `a ≤ b` (a bit flip swaps the slices otherwise), the constraint leaves
//! one parameter `λ = y/x ≥ 1`: `λ = 1` does nothing and `λ → ∞` tends to a
//! projective measurement.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::canonical::omega;
use crate::gate::{find_gate_unitary_complex_with, find_gate_unitary_real, gate_residuals, LambdaChoice, DEFAULT_GRID};
use crate::invariants::{
    compute_invariants_with, orbit_fingerprints_equal, trace_moments, Im6Sign, InvariantVector, OrbitRelation,
};
use crate::mat2::Mat2;
use crate::poly::companion_roots;
use crate::state::{norm_of, Party, PureState3Q, TMatrixPair};
use crate::{Error, Result, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagonalPovm {
    pub x: f64,
    pub y: f64,
    pub party: Party,
}

impl DiagonalPovm {
    pub fn new(x: f64, y: f64, party: Party) -> Result<Self> {
        for (name, v) in [("x", x), ("y", y)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::OutOfRange(format!("{name} = {v} is outside (0, 1)")));
            }
        }
        Ok(DiagonalPovm { x, y, party })
    }

    pub fn e0(&self) -> Mat2 {
        Mat2::diag_real(self.x.sqrt(), self.y.sqrt())
    }

    pub fn e1(&self) -> Mat2 {
        Mat2::diag_real((1.0 - self.x).sqrt(), (1.0 - self.y).sqrt())
    }

    pub fn is_identity_like(&self) -> bool {
        self.x == self.y
    }
}

/// `(x, y)` on the constraint `a² x(1−x) = b² y(1−y)` with `y = λx`.
pub fn solve_condpovm(a: f64, b: f64, lambda: f64) -> Result<(f64, f64)> {
    if !(a > 0.0 && b > 0.0 && a < 1.0 && b < 1.0) {
        return Err(Error::InvalidParameter(format!("slice weights a = {a}, b = {b} must lie in (0, 1)")));
    }
    if a > b * (1.0 + 1e-12) {
        return Err(Error::InvalidParameter(format!("expected a ≤ b, got a = {a}, b = {b}")));
    }
    if !(lambda > 1.0) {
        return Err(Error::OutOfRange(format!("lambda = {lambda} must exceed 1")));
    }
    let (a2, b2) = (a * a, b * b);
    let x = (b2 * lambda - a2) / (b2 * lambda * lambda - a2);
    let y = lambda * x;
    if !(x > 0.0 && x < 1.0 && y > 0.0 && y < 1.0) {
        return Err(Error::OutOfRange(format!(
            "lambda = {lambda} gives (x, y) = ({x}, {y}), outside the open unit square"
        )));
    }
    Ok((x, y))
}

/// The two normalized outcomes of `diag` on a `T`-matrix pair, with their
/// probabilities.
fn diagonal_outcomes(t: &TMatrixPair, x: f64, y: f64, tol: &Tolerances) -> Result<[(PureState3Q, f64); 2]> {
    let one = |x: f64, y: f64| -> Result<(PureState3Q, f64)> {
        let amps = t.scale_slices(x, y).amplitudes();
        let q = norm_of(&amps).powi(2);
        if !(q >= tol.prob) {
            return Err(Error::ZeroProbabilityOutcome { probability: q });
        }
        Ok((PureState3Q::normalized(amps)?, q))
    };
    Ok([one(x, y)?, one(1.0 - x, 1.0 - y)?])
}

/// The slices of a gate state with `a ≤ b`, and whether a flip was needed.
fn oriented(t: TMatrixPair) -> (TMatrixPair, bool) {
    if t.a > t.b {
        (t.flipped(), true)
    } else {
        (t, false)
    }
}

fn check_gate(t: &TMatrixPair, tol: &Tolerances) -> Result<()> {
    let r = gate_residuals(t);
    if !r.within(tol.gate) {
        return Err(Error::GateConditionViolated {
            r1: r.r1,
            r2: r.r2.norm(),
        });
    }
    Ok(())
}

fn relation(outcomes: &[(PureState3Q, f64); 2], tol: &Tolerances) -> (OrbitRelation, [InvariantVector; 2]) {
    let f = [0, 1].map(|n| compute_invariants_with(&outcomes[n].0, tol.i6));
    (orbit_fingerprints_equal(&f[0], &f[1], tol.orbit), f)
}

/// Orbit relation between the outcomes of the `λ` POVM on a gate state,
/// without checking the gate conditions.
pub fn outcome_relation(gate_state: &PureState3Q, party: Party, lambda: f64, tol: &Tolerances) -> Result<OrbitRelation> {
    let (t, _) = oriented(gate_state.t_matrices(party));
    let (x, y) = solve_condpovm(t.a, t.b, lambda)?;
    Ok(relation(&diagonal_outcomes(&t, x, y, tol)?, tol).0)
}

/// Whether the `λ` POVM on a gate state demonstrably keeps both outcomes in
/// one orbit. Near a projective measurement `Im I6` of the outcomes shrinks
/// into the zero band, where opposite signs would pass as equal; so unless
/// the input itself has `Im I6 ≈ 0`, both signs must be resolved.
pub fn confirms_same_orbit(gate_state: &PureState3Q, party: Party, lambda: f64, tol: &Tolerances) -> bool {
    let (t, _) = oriented(gate_state.t_matrices(party));
    let Ok((x, y)) = solve_condpovm(t.a, t.b, lambda) else {
        return false;
    };
    let Ok(outcomes) = diagonal_outcomes(&t, x, y, tol) else {
        return false;
    };
    let (verdict, prints) = relation(&outcomes, tol);
    let input_real = compute_invariants_with(gate_state, tol.i6).im6_sign == Im6Sign::Zero;
    verdict == OrbitRelation::SameOrbit && (input_real || prints[0].im6_sign != Im6Sign::Zero)
}

/// A two-outcome POVM `{E0 V, E1 V}` whose outcomes lie in one orbit; `V`
/// is the gate unitary, followed by a bit flip when needed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeterministicPovm {
    pub pre_rotation: Mat2,
    pub diag: DiagonalPovm,
    pub lambda: f64,
    pub outcome_fingerprint: InvariantVector,
}

impl DeterministicPovm {
    /// The `λ` member of the family for `state`, given the gate unitary on
    /// `party`. `λ = 1` gives the trivial POVM `E0 = E1 = 1/√2`.
    pub fn build(state: &PureState3Q, party: Party, gate: &Mat2, lambda: f64, tol: &Tolerances) -> Result<Self> {
        let moved = state.apply_local_unitary(party, gate, tol.unit)?;
        let t = moved.t_matrices(party);
        check_gate(&t, tol)?;
        let (t, flipped) = oriented(t);
        let pre_rotation = if flipped { Mat2::pauli_x() * *gate } else { *gate };
        let (x, y) = if lambda == 1.0 {
            (0.5, 0.5)
        } else {
            solve_condpovm(t.a, t.b, lambda)?
        };
        Self::finish(state, pre_rotation, DiagonalPovm::new(x, y, party)?, tol)
    }

    /// A POVM with explicit diagonal weights after `pre_rotation`.
    pub fn from_diagonal(state: &PureState3Q, pre_rotation: &Mat2, diag: DiagonalPovm, tol: &Tolerances) -> Result<Self> {
        if !diag.is_identity_like() {
            let moved = state.apply_local_unitary(diag.party, pre_rotation, tol.unit)?;
            let t = moved.t_matrices(diag.party);
            check_gate(&t, tol)?;
            let residual = t.a * t.a * diag.x * (1.0 - diag.x) - t.b * t.b * diag.y * (1.0 - diag.y);
            if residual.abs() > tol.gate {
                return Err(Error::InvalidParameter(format!(
                    "(x, y) = ({}, {}) misses the outcome constraint by {residual:e}",
                    diag.x, diag.y
                )));
            }
        }
        Self::finish(state, *pre_rotation, diag, tol)
    }

    fn finish(state: &PureState3Q, pre_rotation: Mat2, diag: DiagonalPovm, tol: &Tolerances) -> Result<Self> {
        let mut povm = DeterministicPovm {
            pre_rotation,
            diag,
            lambda: diag.y / diag.x,
            outcome_fingerprint: compute_invariants_with(state, tol.i6),
        };
        let app = apply_deterministic_povm(state, &povm, tol)?;
        if app.verdict != OrbitRelation::SameOrbit {
            return Err(Error::NotDeterministic(format!("{:?}", app.verdict)));
        }
        if povm.outcome_fingerprint.im6_sign != Im6Sign::Zero && app.fingerprints[0].im6_sign == Im6Sign::Zero {
            return Err(Error::NotDeterministic(format!(
                "Im I6 of the outcomes ({:e}) is inside the zero band",
                app.fingerprints[0].i6.im
            )));
        }
        povm.outcome_fingerprint = app.fingerprints[0];
        Ok(povm)
    }

    pub fn party(&self) -> Party {
        self.diag.party
    }

    /// `[E0 V, E1 V]`.
    pub fn kraus(&self) -> [Mat2; 2] {
        [self.diag.e0() * self.pre_rotation, self.diag.e1() * self.pre_rotation]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PovmApplication {
    pub outcomes: [PureState3Q; 2],
    pub probabilities: [f64; 2],
    pub verdict: OrbitRelation,
    pub fingerprints: [InvariantVector; 2],
}

pub fn apply_deterministic_povm(state: &PureState3Q, povm: &DeterministicPovm, tol: &Tolerances) -> Result<PovmApplication> {
    let party = povm.party();
    let moved = state.apply_local_unitary(party, &povm.pre_rotation, tol.unit)?;
    let t = moved.t_matrices(party);
    if !povm.diag.is_identity_like() {
        check_gate(&t, tol)?;
    }
    let outcomes = diagonal_outcomes(&t, povm.diag.x, povm.diag.y, tol)?;
    let (verdict, fingerprints) = relation(&outcomes, tol);
    Ok(PovmApplication {
        outcomes: [outcomes[0].0, outcomes[1].0],
        probabilities: [outcomes[0].1, outcomes[1].1],
        verdict,
        fingerprints,
    })
}

/// `I1..I5` (in `A, B, C` order for the purities) of the normalized
/// outcome of `diag(√x, √y)` on the `T`-matrix pair, from trace moments.
pub fn outcome_invariants_closed_form(t: &TMatrixPair, x: f64, y: f64) -> [f64; 5] {
    let m = trace_moments(t);
    let (a, b) = (t.a, t.b);
    let d = a * x + b * y;
    let d2 = d * d;
    let own = (x * x * a * a + 2.0 * x * y * (m.tr01 * m.tr10).re + y * y * b * b) / d2;
    let row = (x * x * m.f0 + 2.0 * x * y * m.tr0011.re + y * y * m.f1) / d2;
    let col = (x * x * m.f0 + 2.0 * x * y * m.tr0110.re + y * y * m.f1) / d2;
    let i4 = x * y * pencil_tangle(t) / d2;
    let i5 = (x * x * x * m.g00.re + 3.0 * x * x * y * m.g01.re + 3.0 * x * y * y * m.g10.re + y * y * y * m.g11.re)
        / (d2 * d);
    place_purities(t.party, own, row, col, i4, i5)
}

fn place_purities(party: Party, own: f64, row: f64, col: f64, i4: f64, i5: f64) -> [f64; 5] {
    let mut out = [0.0, 0.0, 0.0, i4, i5];
    let [r, c] = party.others();
    out[party.index()] = own;
    out[r.index()] = row;
    out[c.index()] = col;
    out
}

fn pencil_tangle(t: &TMatrixPair) -> f64 {
    let d0 = t.t0.det();
    let d1 = t.t1.det();
    let mixed = (t.t0 + t.t1).det() - d0 - d1;
    2.0 * (mixed * mixed - 4.0 * d0 * d1).norm()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveSample {
    pub lambda: f64,
    pub invariants: [f64; 5],
    /// `Re Ω` of the outcome; absent once the outcome is numerically
    /// outside the GHZ class.
    pub re_omega: Option<f64>,
}

/// The curve `I_i(λ) = α_i + β_i λ/(a + bλ)²` (`i ≤ 4`) and
/// `I5(λ) = α5 + λ(β5 + γ5 λ)/(a + bλ)³` traced by the family on a gate
/// state. Index `k` of `alpha` and `beta` refers to `I_{k+1}`, with the
/// purities in `A, B, C` order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitCurve {
    pub party: Party,
    pub a: f64,
    pub b: f64,
    pub alpha: [f64; 5],
    pub beta: [f64; 5],
    pub gamma5: f64,
    pub samples: Vec<CurveSample>,
}

impl OrbitCurve {
    pub fn eval(&self, lambda: f64) -> [f64; 5] {
        let d = self.a + self.b * lambda;
        std::array::from_fn(|k| {
            if k < 4 {
                self.alpha[k] + self.beta[k] * lambda / (d * d)
            } else {
                self.alpha[4] + lambda * (self.beta[4] + self.gamma5 * lambda) / (d * d * d)
            }
        })
    }
}

pub fn orbit_curve(
    gate_state: &PureState3Q,
    party: Party,
    lambda_max: f64,
    n_samples: usize,
    tol: &Tolerances,
) -> Result<OrbitCurve> {
    if !(lambda_max >= 1.0 && lambda_max.is_finite()) {
        return Err(Error::InvalidParameter(format!("lambda_max = {lambda_max} must be a finite value ≥ 1")));
    }
    if n_samples == 0 {
        return Err(Error::InvalidParameter("at least one sample is needed".into()));
    }
    let t0 = gate_state.t_matrices(party);
    check_gate(&t0, tol)?;
    let (t, _) = oriented(t0);
    let m = trace_moments(&t);
    let (a, b) = (t.a, t.b);
    let sq = m.f0 / (a * a);
    let alpha = place_purities(party, 1.0, sq, sq, 0.0, m.h0 / (a * a * a));
    let beta = place_purities(
        party,
        2.0 * ((m.tr01 * m.tr10).re - a * b),
        2.0 * (m.tr0011.re - b * m.f0 / a),
        2.0 * (m.tr0110.re - b * m.f0 / a),
        pencil_tangle(&t),
        3.0 * (m.g01.re - b * m.h0 / a),
    );
    let gamma5 = 3.0 * (m.g10.re - b * b * m.h0 / (a * a));
    let mut curve = OrbitCurve {
        party,
        a,
        b,
        alpha,
        beta,
        gamma5,
        samples: Vec::with_capacity(n_samples),
    };
    for k in 0..n_samples {
        let lambda = if n_samples == 1 {
            1.0
        } else {
            lambda_max.powf(k as f64 / (n_samples - 1) as f64)
        };
        let outcome = if lambda == 1.0 {
            Some(*gate_state)
        } else {
            solve_condpovm(a, b, lambda)
                .and_then(|(x, y)| diagonal_outcomes(&t, x, y, tol))
                .ok()
                .map(|o| o[0].0)
        };
        let re_omega = outcome.and_then(|s| omega(&s, tol).ok()).map(|w| w.value.re);
        curve.samples.push(CurveSample {
            lambda,
            invariants: curve.eval(lambda),
            re_omega,
        });
    }
    Ok(curve)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainStep {
    pub party: Party,
    pub lambda: f64,
    pub alpha: f64,
    pub zeta: f64,
    pub probabilities: [f64; 2],
    pub invariants: [f64; 5],
    pub re_omega: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainResult {
    pub initial: PureState3Q,
    pub final_state: PureState3Q,
    pub initial_invariants: [f64; 5],
    pub initial_re_omega: f64,
    pub trajectory: Vec<ChainStep>,
}

impl ChainResult {
    /// Largest `|Re Ω(step) − Re Ω(initial)|` along the chain.
    pub fn max_re_omega_drift(&self) -> f64 {
        self.trajectory
            .iter()
            .map(|s| (s.re_omega - self.initial_re_omega).abs())
            .fold(0.0, f64::max)
    }
}

/// Applies deterministic POVMs in sequence; each step finds a gate unitary
/// for its party, applies the `λ` POVM and continues from outcome 0.
pub fn chain_deterministic(state: &PureState3Q, steps: &[(Party, f64)], tol: &Tolerances) -> Result<ChainResult> {
    let inv = |s: &PureState3Q| compute_invariants_with(s, tol.i6).real_part();
    let initial_re_omega = omega(state, tol)?.value.re;
    let mut current = *state;
    let mut trajectory = Vec::with_capacity(steps.len());
    for (index, &(party, lambda)) in steps.iter().enumerate() {
        let step = || -> Result<(PureState3Q, ChainStep)> {
            let gate = if current.is_real_amplitudes(tol.norm) {
                find_gate_unitary_real(&current, party, tol)?
            } else {
                find_gate_unitary_complex_with(&current, party, LambdaChoice::Fixed(lambda), DEFAULT_GRID, tol)?
            };
            let povm = DeterministicPovm::build(&current, party, &gate.unitary, lambda, tol)?;
            let app = apply_deterministic_povm(&current, &povm, tol)?;
            let next = app.outcomes[0];
            Ok((
                next,
                ChainStep {
                    party,
                    lambda,
                    alpha: gate.alpha,
                    zeta: gate.zeta,
                    probabilities: app.probabilities,
                    invariants: inv(&next),
                    re_omega: omega(&next, tol)?.value.re,
                },
            ))
        };
        let (next, record) = step().map_err(|e| e.at_step(index, party))?;
        current = next;
        trajectory.push(record);
    }
    Ok(ChainResult {
        initial: *state,
        final_state: current,
        initial_invariants: inv(state),
        initial_re_omega,
        trajectory,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AppendixReport {
    pub a: f64,
    pub b: f64,
    pub x: f64,
    pub y: f64,
    pub g00_over_a3: f64,
    pub g11_over_b3: f64,
    /// Roots of the `I5` cubic: the two positive ones (`y/x` first) and the
    /// negative one.
    pub roots: [Complex64; 3],
    pub root_product: f64,
    pub root_product_target: f64,
    pub third_root_target: f64,
    pub exactly_one_above_one: bool,
    pub i5_gate_state: f64,
    pub i5_outcome: f64,
    /// `G11 − μ b³`; the monotonicity argument divides by it.
    pub leading_coefficient: f64,
    /// Every coefficient of the cubic vanishes, so every `z` is a root and
    /// `roots` holds the three expected values.
    pub cubic_vanishes: bool,
    /// `λ = 1`: nothing is measured and the root checks are vacuous.
    pub identity_povm: bool,
}

impl AppendixReport {
    pub fn cayley_hamilton_gap(&self) -> f64 {
        (self.g00_over_a3 - self.g11_over_b3).abs()
    }

    pub fn root_product_gap(&self) -> f64 {
        (self.root_product - self.root_product_target).abs()
    }

    pub fn third_root_gap(&self) -> f64 {
        (self.roots[2] - self.third_root_target).norm()
    }

    /// Strict decrease, by more than `1e-10`.
    pub fn i5_decreases(&self) -> bool {
        self.i5_outcome < self.i5_gate_state - 1e-10
    }
}

/// Numerical check of the algebra behind the outcome constraint.
pub fn appendix_checks(gate_state: &PureState3Q, party: Party, lambda: f64, tol: &Tolerances) -> Result<AppendixReport> {
    let t0 = gate_state.t_matrices(party);
    check_gate(&t0, tol)?;
    let (t, _) = oriented(t0);
    let m = trace_moments(&t);
    let (a, b) = (t.a, t.b);
    let i5_gate_state = compute_invariants_with(gate_state, tol.i6).i5;
    let mut report = AppendixReport {
        a,
        b,
        x: 0.5,
        y: 0.5,
        g00_over_a3: m.g00.re / (a * a * a),
        g11_over_b3: m.g11.re / (b * b * b),
        roots: [Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(-a / b, 0.0)],
        root_product: 1.0,
        root_product_target: a * a / (b * b),
        third_root_target: -a / b,
        exactly_one_above_one: false,
        i5_gate_state,
        i5_outcome: i5_gate_state,
        leading_coefficient: 0.0,
        cubic_vanishes: false,
        identity_povm: true,
    };
    if lambda == 1.0 {
        return Ok(report);
    }
    let (x, y) = solve_condpovm(a, b, lambda)?;
    let outcomes = diagonal_outcomes(&t, x, y, tol)?;
    let mu = compute_invariants_with(&outcomes[0].0, tol.i6).i5;
    let desc = [
        m.g11.re - mu * b * b * b,
        3.0 * (m.g10.re - mu * a * b * b),
        3.0 * (m.g01.re - mu * a * a * b),
        m.g00.re - mu * a * a * a,
    ];
    let scale = [m.g00.re, m.g01.re, m.g10.re, m.g11.re].iter().fold(0.0f64, |acc, g| acc.max(g.abs()));
    let cubic_vanishes = desc.iter().all(|c| c.abs() <= 1e-12 * scale);
    let roots = if cubic_vanishes {
        [y / x, (1.0 - y) / (1.0 - x), -a / b].map(|z| Complex64::new(z, 0.0))
    } else {
        let mut roots: Vec<Complex64> = companion_roots(&desc)
            .into_iter()
            .map(|(re, im)| Complex64::new(re, im))
            .collect();
        if roots.len() != 3 {
            return Err(Error::RootRefinementFailed(format!("I5 cubic has {} roots", roots.len())));
        }
        // z0 is y/x by construction of μ; the negative root goes last
        let nearest = (0..3)
            .min_by(|&i, &j| (roots[i] - y / x).norm().total_cmp(&(roots[j] - y / x).norm()))
            .unwrap();
        roots.swap(0, nearest);
        if roots[1].re < roots[2].re {
            roots.swap(1, 2);
        }
        [roots[0], roots[1], roots[2]]
    };
    let (z0, z1) = (roots[0], roots[1]);
    report.x = x;
    report.y = y;
    report.roots = roots;
    report.root_product = (z0 * z1).re;
    report.exactly_one_above_one = (z0.re > 1.0) != (z1.re > 1.0);
    report.leading_coefficient = desc[0];
    report.cubic_vanishes = cubic_vanishes;
    report.i5_outcome = mu;
    report.identity_povm = false;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gate::find_gate_unitary_real;
    use crate::invariants::compute_invariants;
    use crate::random::{random_state, rng_from_seed, Ensemble};
    use rand::Rng;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn ut_state() -> PureState3Q {
        let u = Mat2::from_real(1.0, 1.0, -1.0, 1.0) * std::f64::consts::FRAC_1_SQRT_2;
        PureState3Q::ghz().apply_local_unitary(Party::C, &u, 1e-12).unwrap()
    }

    #[test]
    fn condpovm_closed_form() {
        let mut rng = rng_from_seed(1);
        for _ in 0..200 {
            let a: f64 = rng.random_range(0.01..0.5);
            let b = 1.0 - a;
            let lambda: f64 = 1.0 + rng.random_range(0.0..50.0f64);
            let (x, y) = solve_condpovm(a, b, lambda).unwrap();
            assert!((a * a * x * (1.0 - x) - b * b * y * (1.0 - y)).abs() < 1e-12);
            assert!((y / x - lambda).abs() < 1e-9 * lambda);
        }
        let (x, y) = solve_condpovm(0.5, 0.5, 3.0).unwrap();
        assert!((x - 0.25).abs() < 1e-15 && (y - 0.75).abs() < 1e-15);
        let (x, _) = solve_condpovm(0.3, 0.7, 1.0 + 1e-9).unwrap();
        assert!((1.0 - x) < 1e-7);
        assert!(solve_condpovm(0.3, 0.7, 1.0).is_err());
        assert!(solve_condpovm(0.7, 0.3, 2.0).is_err());
    }

    #[test]
    fn xy_condition_equivalence() {
        // x y/(a x + b y)² = (1 − x)(1 − y)/(a(1 − x) + b(1 − y))² exactly on the constraint
        let mut rng = rng_from_seed(2);
        for _ in 0..200 {
            let a: f64 = rng.random_range(0.05..0.5);
            let b = 1.0 - a;
            let (x, y): (f64, f64) = (rng.random_range(0.01..0.99), rng.random_range(0.01..0.99));
            let lhs = x * y / (a * x + b * y).powi(2);
            let rhs = (1.0 - x) * (1.0 - y) / (a * (1.0 - x) + b * (1.0 - y)).powi(2);
            let cond = a * a * x * (1.0 - x) - b * b * y * (1.0 - y);
            // x = y solves the left-hand identity trivially
            if cond.abs() > 1e-6 && (x - y).abs() > 1e-3 {
                assert!((lhs - rhs).abs() > 1e-12, "{a} {x} {y}");
            }
            let (xs, ys) = solve_condpovm(a, b, 1.0 + rng.random_range(0.1..10.0f64)).unwrap();
            let l = xs * ys / (a * xs + b * ys).powi(2);
            let r = (1.0 - xs) * (1.0 - ys) / (a * (1.0 - xs) + b * (1.0 - ys)).powi(2);
            assert!((l - r).abs() < 1e-12);
        }
    }

    #[test]
    fn ghz_first_step() {
        let t = tol();
        let u = Mat2::from_real(1.0, 1.0, -1.0, 1.0) * std::f64::consts::FRAC_1_SQRT_2;
        let diag = DiagonalPovm::new(0.8, 0.2, Party::C).unwrap();
        let povm = DeterministicPovm::from_diagonal(&PureState3Q::ghz(), &u, diag, &t).unwrap();
        let app = apply_deterministic_povm(&PureState3Q::ghz(), &povm, &t).unwrap();
        assert!((app.probabilities[0] - 0.5).abs() < 1e-14);
        assert!((app.probabilities[1] - 0.5).abs() < 1e-14);
        assert_eq!(app.verdict, OrbitRelation::SameOrbit);
    }

    #[test]
    fn identity_like_povm_leaves_state() {
        let t = tol();
        let s = random_state(3, Ensemble::GhzClassComplex, &t).unwrap();
        let povm =
            DeterministicPovm::from_diagonal(&s, &Mat2::IDENTITY, DiagonalPovm::new(0.3, 0.3, Party::B).unwrap(), &t)
                .unwrap();
        let app = apply_deterministic_povm(&s, &povm, &t).unwrap();
        assert!(app.outcomes[0].max_abs_diff(&s) < 1e-14);
        assert!(app.outcomes[1].max_abs_diff(&s) < 1e-14);
    }

    #[test]
    fn non_gate_state_is_rejected() {
        let t = tol();
        let s = random_state(3, Ensemble::GhzClassReal, &t).unwrap();
        assert!(matches!(
            DeterministicPovm::build(&s, Party::A, &Mat2::IDENTITY, 2.0, &t),
            Err(Error::GateConditionViolated { .. })
        ));
    }

    #[test]
    fn closed_forms_match_outcomes() {
        let t = tol();
        for seed in 0..40 {
            let s = random_state(seed, Ensemble::GhzClassComplex, &t).unwrap();
            for p in Party::ALL {
                let tm = s.t_matrices(p);
                let (x, y) = (0.2 + 0.01 * seed as f64, 0.7);
                let closed = outcome_invariants_closed_form(&tm, x, y);
                let direct = compute_invariants(&diagonal_outcomes(&tm, x, y, &t).unwrap()[0].0).real_part();
                for k in 0..5 {
                    assert!((closed[k] - direct[k]).abs() < 1e-12, "{seed} {p} {k}");
                }
            }
        }
    }

    #[test]
    fn real_gate_states_give_deterministic_povms() {
        let t = tol();
        for seed in 0..30 {
            let s = random_state(seed, Ensemble::GhzClassReal, &t).unwrap();
            let g = find_gate_unitary_real(&s, Party::A, &t).unwrap();
            let povm = DeterministicPovm::build(&s, Party::A, &g.unitary, 3.0, &t).unwrap();
            let app = apply_deterministic_povm(&s, &povm, &t).unwrap();
            assert_eq!(app.verdict, OrbitRelation::SameOrbit);
            assert!((app.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            // I5 moves up toward its product-state value
            assert!(app.fingerprints[0].i5 > compute_invariants(&s).i5);
            let k = povm.kraus();
            let sum = k[0].adjoint() * k[0] + k[1].adjoint() * k[1];
            assert!(sum.max_abs_diff(&Mat2::IDENTITY) < 1e-14);
        }
    }

    #[test]
    fn curve_endpoints() {
        let t = tol();
        let s = ut_state();
        let curve = orbit_curve(&s, Party::C, 1e6, 13, &t).unwrap();
        let start = compute_invariants(&s).real_part();
        for k in 0..5 {
            assert!((curve.samples[0].invariants[k] - start[k]).abs() < 1e-10);
        }
        let last = curve.samples.last().unwrap();
        assert!(last.invariants[3] <= 1e-5 * start[3]);
        for sample in &curve.samples[1..] {
            let (x, y) = solve_condpovm(curve.a, curve.b, sample.lambda).unwrap();
            let (tt, _) = oriented(s.t_matrices(Party::C));
            let closed = outcome_invariants_closed_form(&tt, x, y);
            for k in 0..5 {
                assert!((closed[k] - sample.invariants[k]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn appendix_on_reference_state() {
        let r = appendix_checks(&ut_state(), Party::C, 2.0, &tol()).unwrap();
        assert!((r.third_root_target + 1.0).abs() < 1e-14);
        assert!(r.root_product_gap() < 1e-9);
        assert!(r.third_root_gap() < 1e-9);
        assert!(r.exactly_one_above_one);
        // all four G's coincide here, so I5 stays at 1/4 for every λ
        assert!(r.cubic_vanishes);
        assert!((r.i5_outcome - 0.25).abs() < 1e-12);
        assert!(!r.i5_decreases());
        assert!(r.cayley_hamilton_gap() < 1e-12);
        assert!(appendix_checks(&ut_state(), Party::C, 1.0, &tol()).unwrap().identity_povm);
    }

    #[test]
    fn empty_chain_is_identity() {
        let t = tol();
        let s = random_state(2, Ensemble::GhzClassReal, &t).unwrap();
        let c = chain_deterministic(&s, &[], &t).unwrap();
        assert_eq!(c.final_state, s);
        assert!(c.trajectory.is_empty());
    }

    #[test]
    fn real_chain_conserves_re_omega() {
        let t = tol();
        let s = random_state(8, Ensemble::GhzClassReal, &t).unwrap();
        let c = chain_deterministic(&s, &[(Party::A, 2.0), (Party::B, 1.5), (Party::C, 3.0)], &t).unwrap();
        assert_eq!(c.trajectory.len(), 3);
        assert!(c.max_re_omega_drift() < 1e-7);
    }
}
