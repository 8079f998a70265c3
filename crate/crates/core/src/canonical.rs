//! Two-product-term decomposition of GHZ-class states and the `Ω`
//! invariant.
//!
//! Every GHZ-class state is a sum of two product vectors
//! `|μ⟩ + |ν⟩` with `‖μ‖ ≥ ‖ν‖`, unique up to swapping the terms when the
//! norms coincide. The terms are found from the two rank-1 members of
//! Alice's pencil `x T0 + y T1`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::invariants::three_tangle;
use crate::mat2::Mat2;
use crate::state::{inner_amps, norm_of, product_amps, Party, PureState3Q};
use crate::{Error, Result, Tolerances};

/// Below this `|⟨m_X|n_X⟩|` the two local factors count as orthogonal and
/// the phase `γ` is removed by a local unitary on that party.
const ORTHOGONAL_FACTOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateClass {
    GhzClass,
    WClass,
    Biseparable,
    FullyProduct,
}

pub fn classify(state: &PureState3Q, tol: &Tolerances) -> StateClass {
    let pure = Party::ALL
        .iter()
        .filter(|&&p| 1.0 - state.purity(p) <= tol.tangle)
        .count();
    match pure {
        3 => StateClass::FullyProduct,
        // two pure marginals force the third to be pure as well, up to rounding
        1 | 2 => StateClass::Biseparable,
        _ if three_tangle(state) > tol.tangle => StateClass::GhzClass,
        _ => StateClass::WClass,
    }
}

/// The parameters `(μ, ν, γ, δ_A, δ_B, δ_C)` of the canonical form
/// `μ|000⟩ + ν e^{iγ} |φ_A φ_B φ_C⟩`, `|φ_X⟩ = cos δ_X |0⟩ + sin δ_X |1⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GhzParameters {
    pub mu: f64,
    pub nu: f64,
    pub gamma: f64,
    pub deltas: [f64; 3],
}

impl GhzParameters {
    /// Amplitudes of the canonical form, without normalization.
    pub fn amplitudes(&self) -> [Complex64; 8] {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let phi = |d: f64| [Complex64::new(d.cos(), 0.0), Complex64::new(d.sin(), 0.0)];
        let first = product_amps([one * self.mu, zero], [one, zero], [one, zero]);
        let second = product_amps(
            phi(self.deltas[0]).map(|z| z * Complex64::from_polar(self.nu, self.gamma)),
            phi(self.deltas[1]),
            phi(self.deltas[2]),
        );
        std::array::from_fn(|n| first[n] + second[n])
    }

    pub fn state(&self) -> Result<PureState3Q> {
        PureState3Q::normalized(self.amplitudes())
    }

    /// `μ ν e^{iγ} cos δ_A cos δ_B cos δ_C` for this (possibly unnormalized)
    /// parameter set.
    pub fn omega(&self) -> Complex64 {
        let c: f64 = self.deltas.iter().map(|d| d.cos()).product();
        Complex64::from_polar(self.mu * self.nu * c, self.gamma)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GhzCanonicalForm {
    pub mu: f64,
    pub nu: f64,
    pub gamma: f64,
    pub delta_a: f64,
    pub delta_b: f64,
    pub delta_c: f64,
    /// The larger product term, in the frame of the input state.
    pub term_mu: [Complex64; 8],
    pub term_nu: [Complex64; 8],
    /// `⟨μ|ν⟩`.
    pub omega: Complex64,
    /// `μ` and `ν` agree within the degeneracy band, so the sign of `Im Ω`
    /// depends on an arbitrary labelling of the terms.
    pub im_sign_ambiguous: bool,
    /// Local unitaries taking the input to the canonical form.
    pub frame: [Mat2; 3],
}

impl GhzCanonicalForm {
    pub fn parameters(&self) -> GhzParameters {
        GhzParameters {
            mu: self.mu,
            nu: self.nu,
            gamma: self.gamma,
            deltas: [self.delta_a, self.delta_b, self.delta_c],
        }
    }

    pub fn deltas(&self) -> [f64; 3] {
        [self.delta_a, self.delta_b, self.delta_c]
    }
}

/// Roots of `c2 x² + c1 xy + c0 y² = 0` as homogeneous pairs, computed with
/// the cancellation-free form. Fails when the discriminant vanishes.
fn pencil_roots(c2: Complex64, c1: Complex64, c0: Complex64, tol: &Tolerances) -> Result<[(Complex64, Complex64); 2]> {
    let disc = c1 * c1 - 4.0 * c2 * c0;
    let scale = c1.norm_sqr() + (c2 * c0).norm();
    if !(disc.norm() > tol.tangle * scale.max(f64::MIN_POSITIVE)) {
        return Err(Error::DegeneratePencil {
            discriminant: disc.norm(),
        });
    }
    let sq = disc.sqrt();
    let plus = c1 + sq;
    let minus = c1 - sq;
    let q = if plus.norm() >= minus.norm() { -plus / 2.0 } else { -minus / 2.0 };
    Ok([(q, c2), (c0, q)])
}

/// Splits a rank-1 2×2 matrix into `b cᵀ` with `b` a unit vector.
fn rank_one_factors(n: &Mat2) -> ([Complex64; 2], [Complex64; 2]) {
    let col = |k: usize| [n.0[0][k], n.0[1][k]];
    let cn = |v: [Complex64; 2]| (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    let k = if cn(col(0)) >= cn(col(1)) { 0 } else { 1 };
    let len = cn(col(k));
    let b = col(k).map(|z| z / len);
    let c = [0, 1].map(|kk| b[0].conj() * n.0[0][kk] + b[1].conj() * n.0[1][kk]);
    (b, c)
}

fn unit(v: [Complex64; 2]) -> [Complex64; 2] {
    let len = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    v.map(|z| z / len)
}

fn dot(a: &[Complex64; 2], b: &[Complex64; 2]) -> Complex64 {
    a[0].conj() * b[0] + a[1].conj() * b[1]
}

pub fn decompose_ghz(state: &PureState3Q, tol: &Tolerances) -> Result<GhzCanonicalForm> {
    if classify(state, tol) != StateClass::GhzClass {
        return Err(Error::NotGhzClass);
    }
    let t = state.t_matrices(Party::A);
    let c2 = t.t0.det();
    let c0 = t.t1.det();
    let c1 = (t.t0 + t.t1).det() - c2 - c0;
    let roots = pencil_roots(c2, c1, c0, tol)?;
    // rows of R are the root pairs; [N1; N2] = R [T0; T1]
    let r = Mat2::new(roots[0].0, roots[0].1, roots[1].0, roots[1].1);
    let c = r.inverse().ok_or(Error::DegeneratePencil {
        discriminant: r.det().norm(),
    })?;

    let mut terms = [[Complex64::new(0.0, 0.0); 8]; 2];
    let mut factors = [[[Complex64::new(0.0, 0.0); 2]; 3]; 2];
    for (n, (x, y)) in roots.iter().enumerate() {
        let pencil = t.t0 * *x + t.t1 * *y;
        let (b, ck) = rank_one_factors(&pencil);
        let a = [c.0[0][n], c.0[1][n]];
        terms[n] = product_amps(a, b, ck);
        factors[n] = [unit(a), b, unit(ck)];
    }
    let (mu_idx, nu_idx) = if norm_of(&terms[0]) >= norm_of(&terms[1]) { (0, 1) } else { (1, 0) };
    let (term_mu, term_nu) = (terms[mu_idx], terms[nu_idx]);
    let (m, nvec) = (factors[mu_idx], factors[nu_idx]);
    let mu = norm_of(&term_mu);
    let nu = norm_of(&term_nu);
    let omega = inner_amps(&term_mu, &term_nu);

    // Per-party frame: m_X -> |0>, n_X -> e^{iθ_X}(cos δ_X, sin δ_X).
    let mut frame = [Mat2::IDENTITY; 3];
    let mut deltas = [0.0; 3];
    let mut thetas = [0.0; 3];
    let mut orthogonal = None;
    for x in 0..3 {
        let mx = m[x];
        let perp = [-mx[1].conj(), mx[0].conj()];
        let overlap = dot(&mx, &nvec[x]);
        let side = dot(&perp, &nvec[x]);
        deltas[x] = overlap.norm().min(1.0).acos();
        thetas[x] = if overlap.norm() > ORTHOGONAL_FACTOR { overlap.arg() } else { 0.0 };
        if overlap.norm() <= ORTHOGONAL_FACTOR && orthogonal.is_none() {
            orthogonal = Some(x);
        }
        let row1 = Complex64::from_polar(1.0, thetas[x] - side.arg());
        frame[x] = Mat2::new(mx[0].conj(), mx[1].conj(), row1 * perp[0].conj(), row1 * perp[1].conj());
    }
    // Phase of each term after the per-party frames.
    let aligned_mu = apply_frame(&term_mu, &frame);
    let aligned_nu = apply_frame(&term_nu, &frame);
    let mu_phase = aligned_mu[0].arg();
    let nu_coeff = canonical_coefficient(&aligned_nu, &deltas);
    let mut gamma = (nu_coeff.arg() - mu_phase).rem_euclid(std::f64::consts::TAU);
    frame[0] = frame[0] * Complex64::from_polar(1.0, -mu_phase);
    if let Some(x) = orthogonal {
        frame[x] = Mat2::diag(Complex64::new(1.0, 0.0), Complex64::from_polar(1.0, -gamma)) * frame[x];
        gamma = 0.0;
    }
    // `rem_euclid` may round up to exactly 2π
    if gamma >= std::f64::consts::TAU {
        gamma = 0.0;
    }

    Ok(GhzCanonicalForm {
        mu,
        nu,
        gamma,
        delta_a: deltas[0],
        delta_b: deltas[1],
        delta_c: deltas[2],
        term_mu,
        term_nu,
        omega,
        im_sign_ambiguous: (mu - nu).abs() <= tol.degenerate * mu,
        frame,
    })
}

fn apply_frame(amps: &[Complex64; 8], frame: &[Mat2; 3]) -> [Complex64; 8] {
    let mut out = *amps;
    for (p, u) in Party::ALL.iter().zip(frame) {
        out = crate::state::apply_local(&out, *p, u);
    }
    out
}

/// Recovers `c` in `c·|φ_A φ_B φ_C⟩` from the largest component.
fn canonical_coefficient(amps: &[Complex64; 8], deltas: &[f64; 3]) -> Complex64 {
    let basis = GhzParameters {
        mu: 0.0,
        nu: 1.0,
        gamma: 0.0,
        deltas: *deltas,
    }
    .amplitudes();
    let n = (0..8).max_by(|&i, &j| basis[i].norm().total_cmp(&basis[j].norm())).unwrap_or(0);
    amps[n] / basis[n]
}

/// `Ω` together with whether the sign of its imaginary part is meaningful.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Omega {
    pub value: Complex64,
    pub im_sign_ambiguous: bool,
}

pub fn omega(state: &PureState3Q, tol: &Tolerances) -> Result<Omega> {
    let form = decompose_ghz(state, tol)?;
    Ok(Omega {
        value: form.omega,
        im_sign_ambiguous: form.im_sign_ambiguous,
    })
}

/// Whether the state is LU-equivalent to one with real amplitudes.
pub fn is_real_state(state: &PureState3Q, tol: &Tolerances) -> bool {
    match classify(state, tol) {
        StateClass::GhzClass => match decompose_ghz(state, tol) {
            Ok(f) => f.omega.im.abs() <= tol.i6 || f.im_sign_ambiguous,
            Err(_) => true,
        },
        _ => true,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConservationReport {
    pub re_omega_input: f64,
    pub re_omega_outcomes: [f64; 2],
    pub probabilities: [f64; 2],
    pub weighted_sum: f64,
    pub difference: f64,
}

/// Checks that `Re Ω` of the input equals the probability-weighted average
/// over the two outcomes of `kraus` applied by `party`.
pub fn verify_omega_conservation(
    state: &PureState3Q,
    party: Party,
    kraus: &[Mat2; 2],
    tol: &Tolerances,
) -> Result<ConservationReport> {
    let completeness = kraus[0].adjoint() * kraus[0] + kraus[1].adjoint() * kraus[1];
    let deviation = completeness.max_abs_diff(&Mat2::IDENTITY);
    if !(deviation <= tol.unit) {
        return Err(Error::IncompletePovm { deviation });
    }
    let input = omega(state, tol)?;
    let mut re_out = [0.0; 2];
    let mut probs = [0.0; 2];
    for (n, k) in kraus.iter().enumerate() {
        // a singular Kraus operator projects one party out of the entanglement
        if !(k.det().norm() > tol.prob.sqrt()) {
            return Err(Error::OutcomeLeftGhzClass { outcome: n });
        }
        let (out, q) = state.apply_kraus(party, k, tol)?;
        let w = omega(&out, tol).map_err(|e| match e {
            Error::NotGhzClass | Error::DegeneratePencil { .. } => Error::OutcomeLeftGhzClass { outcome: n },
            other => other,
        })?;
        re_out[n] = w.value.re;
        probs[n] = q;
    }
    let weighted_sum = probs[0] * re_out[0] + probs[1] * re_out[1];
    Ok(ConservationReport {
        re_omega_input: input.value.re,
        re_omega_outcomes: re_out,
        probabilities: probs,
        weighted_sum,
        difference: (input.value.re - weighted_sum).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{haar_unitary, random_kraus_pair, random_state, rng_from_seed, Ensemble};
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn classes_of_standard_states() {
        let t = tol();
        assert_eq!(classify(&PureState3Q::basis(0), &t), StateClass::FullyProduct);
        assert_eq!(classify(&PureState3Q::ghz(), &t), StateClass::GhzClass);
        assert_eq!(classify(&PureState3Q::w(), &t), StateClass::WClass);
        // |0> (|00> + |11>)/√2
        let h = FRAC_1_SQRT_2;
        let bisep = PureState3Q::from_real([h, 0.0, 0.0, h, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(classify(&bisep, &t), StateClass::Biseparable);
    }

    #[test]
    fn ghz_decomposition() {
        let f = decompose_ghz(&PureState3Q::ghz(), &tol()).unwrap();
        assert!((f.mu - FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((f.nu - FRAC_1_SQRT_2).abs() < 1e-12);
        for d in f.deltas() {
            assert!((d - FRAC_PI_2).abs() < 1e-12);
        }
        assert!(f.omega.norm() < 1e-15);
        assert!(f.im_sign_ambiguous);
    }

    #[test]
    fn parameter_round_trip() {
        let p = GhzParameters {
            mu: 0.8,
            nu: 0.6,
            gamma: 1.0,
            deltas: [1.0, 0.7, 0.5],
        };
        let norm = norm_of(&p.amplitudes());
        let state = p.state().unwrap();
        let f = decompose_ghz(&state, &tol()).unwrap();
        assert!((f.mu - p.mu / norm).abs() < 1e-8, "{} {}", f.mu, p.mu / norm);
        assert!((f.nu - p.nu / norm).abs() < 1e-8);
        assert!((f.gamma - p.gamma).abs() < 1e-8, "{}", f.gamma);
        for (a, b) in f.deltas().iter().zip(p.deltas) {
            assert!((a - b).abs() < 1e-8);
        }
        let expected = p.omega() / (norm * norm);
        assert!((f.omega - expected).norm() < 1e-9);
        assert!(!f.im_sign_ambiguous);
    }

    #[test]
    fn terms_are_products_summing_to_the_state() {
        let t = tol();
        for seed in 0..50 {
            let s = random_state(seed, Ensemble::GhzClassComplex, &t).unwrap();
            let f = decompose_ghz(&s, &t).unwrap();
            for n in 0..8 {
                assert!((f.term_mu[n] + f.term_nu[n] - s.amps()[n]).norm() < 1e-10);
            }
            for term in [f.term_mu, f.term_nu] {
                let ts = PureState3Q::normalized(term).unwrap();
                for p in Party::ALL {
                    assert!(ts.marginal(p).det().norm() < 1e-9);
                }
            }
            assert!(f.mu >= f.nu);
            let c: f64 = f.deltas().iter().map(|d| d.cos()).product();
            let formula = Complex64::from_polar(f.mu * f.nu * c, f.gamma);
            assert!((formula - f.omega).norm() < 1e-9);
            // the frame maps the input onto the canonical form
            let aligned = apply_frame(s.amps(), &f.frame);
            let canon = f.parameters().amplitudes();
            for n in 0..8 {
                assert!((aligned[n] - canon[n]).norm() < 1e-9, "seed {seed}");
            }
            for u in &f.frame {
                assert!(u.unitarity_deviation() < 1e-12);
            }
        }
    }

    #[test]
    fn real_target_has_zero_omega() {
        // μ|000> + ν|1>|φ>|φ'>
        let p = GhzParameters {
            mu: 0.8,
            nu: 0.6,
            gamma: 0.0,
            deltas: [FRAC_PI_2, 0.4, 1.1],
        };
        let f = decompose_ghz(&p.state().unwrap(), &tol()).unwrap();
        assert!(f.omega.norm() < 1e-15, "{}", f.omega);
        assert_eq!(f.gamma, 0.0);
    }

    #[test]
    fn omega_is_lu_invariant_and_conjugates() {
        let t = tol();
        let mut rng = rng_from_seed(3);
        for seed in 0..50 {
            let s = random_state(seed, Ensemble::GhzClassComplex, &t).unwrap();
            let w = omega(&s, &t).unwrap();
            let us = [haar_unitary(&mut rng), haar_unitary(&mut rng), haar_unitary(&mut rng)];
            let moved = s.apply_local_unitaries(&us, t.unit).unwrap();
            assert!((omega(&moved, &t).unwrap().value - w.value).norm() < 1e-9);
            if !w.im_sign_ambiguous {
                assert!((omega(&s.conjugate(), &t).unwrap().value - w.value.conj()).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn omega_stays_below_a_quarter() {
        // Re<μ|ν> ≤ μν < (μ² + ν²)/2 = (1 − 2 Re<μ|ν>)/2
        let t = tol();
        for seed in 0..200 {
            let s = random_state(seed, Ensemble::GhzClassComplex, &t).unwrap();
            assert!(omega(&s, &t).unwrap().value.re < 0.25);
        }
    }

    #[test]
    fn reality_detection() {
        let t = tol();
        for seed in 0..20 {
            assert!(is_real_state(&random_state(seed, Ensemble::GhzClassReal, &t).unwrap(), &t));
        }
        let h = FRAC_1_SQRT_2;
        let compreal = GhzParameters {
            mu: h,
            nu: h,
            gamma: FRAC_PI_2,
            deltas: [0.6, 0.8, 1.1],
        };
        assert!(is_real_state(&compreal.state().unwrap(), &t));
        let complex = GhzParameters {
            mu: 0.8,
            nu: 0.6,
            gamma: 1.0,
            deltas: [1.0, 0.7, 0.5],
        };
        assert!(!is_real_state(&complex.state().unwrap(), &t));
        assert!(is_real_state(&PureState3Q::w(), &t));
    }

    #[test]
    fn conservation_under_random_povms() {
        let t = tol();
        let mut rng = rng_from_seed(11);
        for seed in 0..100 {
            let s = random_state(seed, Ensemble::GhzClassComplex, &t).unwrap();
            let kraus = random_kraus_pair(&mut rng, 0.05);
            let party = Party::ALL[seed as usize % 3];
            let r = verify_omega_conservation(&s, party, &kraus, &t).unwrap();
            assert!(r.difference < 1e-8, "{r:?}");
            assert!((r.probabilities[0] + r.probabilities[1] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn conservation_edge_contracts() {
        let t = tol();
        let s = random_state(1, Ensemble::GhzClassComplex, &t).unwrap();
        let err = verify_omega_conservation(&s, Party::A, &[Mat2::IDENTITY, Mat2::ZERO], &t).unwrap_err();
        assert_eq!(err, Error::OutcomeLeftGhzClass { outcome: 1 });
        let k = [Mat2::IDENTITY * 0.3f64.sqrt(), Mat2::IDENTITY * 0.7f64.sqrt()];
        let r = verify_omega_conservation(&s, Party::B, &k, &t).unwrap();
        assert!(r.difference < 1e-12);
        assert!((r.re_omega_outcomes[0] - r.re_omega_input).abs() < 1e-12);
        let bad = [Mat2::IDENTITY, Mat2::IDENTITY];
        assert!(matches!(
            verify_omega_conservation(&s, Party::B, &bad, &t),
            Err(Error::IncompletePovm { .. })
        ));
    }
}
