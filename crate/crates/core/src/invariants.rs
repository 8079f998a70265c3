//! Local-unitary invariants `I1..I6` of three-qubit pure states.
//!
//! `I1..I5` are real and blind to complex conjugation of the amplitudes; the
//! sign of `Im I6` separates a state's orbit from the orbit of its conjugate.
//! [`compute_invariants`] evaluates them through 2×2 trace identities;
//! [`brute_force_invariants`] performs the literal index sums and is kept as
//! the reference the fast path is tested against.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::mat2::Mat2;
use crate::state::{flat_index, Party, PureState3Q, TMatrixPair};
use crate::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Im6Sign {
    #[serde(rename = "+")]
    Positive,
    #[serde(rename = "-")]
    Negative,
    #[serde(rename = "0")]
    Zero,
}

impl Im6Sign {
    pub fn of(i6: Complex64, band: f64) -> Im6Sign {
        if i6.im.abs() <= band {
            Im6Sign::Zero
        } else if i6.im > 0.0 {
            Im6Sign::Positive
        } else {
            Im6Sign::Negative
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Im6Sign::Positive => "+",
            Im6Sign::Negative => "-",
            Im6Sign::Zero => "0",
        }
    }
}

/// The orbit fingerprint of a state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantVector {
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    pub i4: f64,
    pub i5: f64,
    pub i6: Complex64,
    pub im6_sign: Im6Sign,
}

impl InvariantVector {
    pub fn new(real: [f64; 5], i6: Complex64, band: f64) -> Self {
        InvariantVector {
            i1: real[0],
            i2: real[1],
            i3: real[2],
            i4: real[3],
            i5: real[4],
            i6,
            im6_sign: Im6Sign::of(i6, band),
        }
    }

    pub fn real_part(&self) -> [f64; 5] {
        [self.i1, self.i2, self.i3, self.i4, self.i5]
    }

    /// Recomputes the sign with a different zero band.
    pub fn with_sign_band(mut self, band: f64) -> Self {
        self.im6_sign = Im6Sign::of(self.i6, band);
        self
    }

    /// Largest componentwise difference, `I6` compared as a complex number.
    pub fn max_abs_diff(&self, other: &InvariantVector) -> f64 {
        let real = self
            .real_part()
            .iter()
            .zip(other.real_part())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        real.max((self.i6 - other.i6).norm())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrbitRelation {
    SameOrbit,
    ConjugateOrbit,
    Different,
}

pub fn orbit_fingerprints_equal(v1: &InvariantVector, v2: &InvariantVector, tol: f64) -> OrbitRelation {
    let close = v1
        .real_part()
        .iter()
        .zip(v2.real_part())
        .all(|(a, b)| (a - b).abs() <= tol);
    if !close {
        return OrbitRelation::Different;
    }
    use Im6Sign::*;
    match (v1.im6_sign, v2.im6_sign) {
        (Positive, Negative) | (Negative, Positive) => OrbitRelation::ConjugateOrbit,
        (a, b) if a == b => OrbitRelation::SameOrbit,
        _ => OrbitRelation::Different,
    }
}

pub fn compute_invariants(state: &PureState3Q) -> InvariantVector {
    compute_invariants_with(state, Tolerances::default().i6)
}

pub fn compute_invariants_with(state: &PureState3Q, i6_band: f64) -> InvariantVector {
    let t = state.t_matrices(Party::A);
    let real = [
        state.purity(Party::A),
        state.purity(Party::B),
        state.purity(Party::C),
        three_tangle(state),
        i5_from_t(&t),
    ];
    InvariantVector::new(real, i6_contracted(state), i6_band)
}

/// `I4` as twice the modulus of the discriminant of `det(x T0 + y T1)`.
pub fn three_tangle(state: &PureState3Q) -> f64 {
    let t = state.t_matrices(Party::A);
    let d0 = t.t0.det();
    let d1 = t.t1.det();
    let mixed = (t.t0 + t.t1).det() - d0 - d1;
    2.0 * (mixed * mixed - 4.0 * d0 * d1).norm()
}

/// `I5 = Σ_{inp} Tr[T_i T_n^dag T_p T_i^dag T_n T_p^dag]`.
pub(crate) fn i5_from_t(t: &TMatrixPair) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..2 {
        for n in 0..2 {
            for p in 0..2 {
                let (ti, tn, tp) = (t.get(i), t.get(n), t.get(p));
                let left = *ti * tn.adjoint() * *tp;
                let right = ti.adjoint() * *tn * tp.adjoint();
                acc += left.trace_mul(&right);
            }
        }
    }
    acc.re
}

/// `I6` through the partial contractions `M = Σ_ij t_ijk t*_ijk'` and
/// `N = Σ_i t_ijk t*_ij'k'`, leaving a ten-index sum.
fn i6_contracted(state: &PureState3Q) -> Complex64 {
    let t = state.amps();
    let mut m = [[Complex64::new(0.0, 0.0); 2]; 2];
    let mut n = [[Complex64::new(0.0, 0.0); 4]; 4];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for k2 in 0..2 {
                    m[k][k2] += t[flat_index(i, j, k)] * t[flat_index(i, j, k2)].conj();
                }
                for j2 in 0..2 {
                    for k2 in 0..2 {
                        n[2 * j + k][2 * j2 + k2] += t[flat_index(i, j, k)] * t[flat_index(i, j2, k2)].conj();
                    }
                }
            }
        }
    }
    let nn = |j: usize, k: usize, j2: usize, k2: usize| n[2 * j + k][2 * j2 + k2];
    let mut acc = Complex64::new(0.0, 0.0);
    for bits in 0..1024usize {
        let b = |s: usize| (bits >> s) & 1;
        let (k1, k2, k3, k4, k5, k6) = (b(0), b(1), b(2), b(3), b(4), b(5));
        let (j3, j4, j5, j6) = (b(6), b(7), b(8), b(9));
        acc += m[k1][k3]
            * m[k2][k4]
            * nn(j3, k3, j4, k5)
            * nn(j4, k4, j3, k1)
            * nn(j5, k5, j6, k2)
            * nn(j6, k6, j5, k6);
    }
    acc
}

/// Literal nested index sums for every invariant.
pub fn brute_force_invariants(state: &PureState3Q) -> InvariantVector {
    brute_force_invariants_with(state, Tolerances::default().i6)
}

pub fn brute_force_invariants_with(state: &PureState3Q, i6_band: f64) -> InvariantVector {
    let t = |i: usize, j: usize, k: usize| state.amp(i, j, k);
    let c = |i: usize, j: usize, k: usize| state.amp(i, j, k).conj();
    let bit = |x: usize, s: usize| (x >> s) & 1;
    let zero = Complex64::new(0.0, 0.0);

    let (mut i1, mut i2, mut i3) = (zero, zero, zero);
    for x in 0..64usize {
        let (i, j, k, m, p, q) = (bit(x, 0), bit(x, 1), bit(x, 2), bit(x, 3), bit(x, 4), bit(x, 5));
        i1 += t(k, i, j) * c(m, i, j) * t(m, p, q) * c(k, p, q);
        i2 += t(i, k, j) * c(i, m, j) * t(p, m, q) * c(p, k, q);
        i3 += t(i, j, k) * c(i, j, m) * t(p, q, m) * c(p, q, k);
    }

    let eps = |a: usize, b: usize| -> f64 {
        match (a, b) {
            (0, 1) => 1.0,
            (1, 0) => -1.0,
            _ => 0.0,
        }
    };
    let mut i4 = zero;
    for x in 0..4096usize {
        let v: [usize; 12] = std::array::from_fn(|s| bit(x, s));
        let [i, j, k, l, m, n, o, p, q, r, s, u] = v;
        let e = eps(i, l) * eps(o, r) * eps(j, m) * eps(p, s) * eps(k, q) * eps(n, u);
        if e != 0.0 {
            i4 += t(i, j, k) * t(l, m, n) * t(o, p, q) * t(r, s, u) * e;
        }
    }

    let mut i5 = zero;
    for x in 0..512usize {
        let v: [usize; 9] = std::array::from_fn(|s| bit(x, s));
        let [i, j, k, l, m, n, o, p, q] = v;
        i5 += t(i, j, k) * c(i, l, m) * t(n, l, o) * c(p, j, o) * t(p, q, m) * c(n, q, k);
    }

    let mut i6 = zero;
    for x in 0..(1usize << 18) {
        let i: [usize; 6] = std::array::from_fn(|s| bit(x, s));
        let j: [usize; 6] = std::array::from_fn(|s| bit(x, 6 + s));
        let k: [usize; 6] = std::array::from_fn(|s| bit(x, 12 + s));
        let top = t(i[0], j[0], k[0])
            * t(i[1], j[1], k[1])
            * t(i[2], j[2], k[2])
            * t(i[3], j[3], k[3])
            * t(i[4], j[4], k[4])
            * t(i[5], j[5], k[5]);
        let bottom = c(i[0], j[0], k[2])
            * c(i[1], j[1], k[3])
            * c(i[2], j[3], k[4])
            * c(i[3], j[2], k[0])
            * c(i[4], j[5], k[1])
            * c(i[5], j[4], k[5]);
        i6 += top * bottom;
    }

    InvariantVector::new([i1.re, i2.re, i3.re, i4.norm(), i5.re], i6, i6_band)
}

/// Traces of `T`-matrix products entering the outcome invariants of a
/// diagonal POVM.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceMoments {
    pub a: f64,
    pub b: f64,
    /// `Tr[(T0 T0^dag)²]`
    pub f0: f64,
    /// `Tr[(T1 T1^dag)²]`
    pub f1: f64,
    /// `Tr[T_i T_j^dag T_i T_i^dag T_j T_i^dag]`
    pub g00: Complex64,
    pub g01: Complex64,
    pub g10: Complex64,
    pub g11: Complex64,
    /// `Tr[T0 T1^dag]`
    pub tr01: Complex64,
    /// `Tr[T1 T0^dag]`
    pub tr10: Complex64,
    /// `Tr[T0 T0^dag T1 T1^dag]`
    pub tr0011: Complex64,
    /// `Tr[T0 T1^dag T1 T0^dag]`
    pub tr0110: Complex64,
    /// `Tr[(T0 T0^dag)³]`
    pub h0: f64,
    /// `Tr[(T1 T1^dag)³]`
    pub h1: f64,
}

pub fn trace_moments(t: &TMatrixPair) -> TraceMoments {
    let (t0, t1) = (t.t0, t.t1);
    let (d0, d1) = (t0.adjoint(), t1.adjoint());
    let p00 = t0 * d0;
    let p11 = t1 * d1;
    let g = |ti: Mat2, tj: Mat2| -> Complex64 {
        let (di, dj) = (ti.adjoint(), tj.adjoint());
        (ti * dj * ti).trace_mul(&(di * tj * di))
    };
    TraceMoments {
        a: t.a,
        b: t.b,
        f0: p00.trace_mul(&p00).re,
        f1: p11.trace_mul(&p11).re,
        g00: g(t0, t0),
        g01: g(t0, t1),
        g10: g(t1, t0),
        g11: g(t1, t1),
        tr01: t0.trace_mul(&d1),
        tr10: t1.trace_mul(&d0),
        tr0011: p00.trace_mul(&p11),
        tr0110: (t0 * d1).trace_mul(&(t1 * d0)),
        h0: (p00 * p00).trace_mul(&p00).re,
        h1: (p11 * p11).trace_mul(&p11).re,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_local_unitaries, random_state, rng_from_seed, Ensemble};

    fn ensembles() -> [Ensemble; 4] {
        [
            Ensemble::ComplexHaar,
            Ensemble::RealOrthogonal,
            Ensemble::GhzClassReal,
            Ensemble::GhzClassComplex,
        ]
    }

    #[test]
    fn product_state_values() {
        let v = compute_invariants(&PureState3Q::basis(0));
        assert_eq!((v.i1, v.i2, v.i3, v.i4, v.i5), (1.0, 1.0, 1.0, 0.0, 1.0));
        assert_eq!(v.i6, Complex64::new(1.0, 0.0));
        let b = brute_force_invariants(&PureState3Q::basis(0));
        assert!(b.max_abs_diff(&v) < 1e-15);
    }

    // GHZ values below were produced by the literal index sums of
    // `brute_force_invariants` (independently cross-checked with numpy einsum):
    // I4 = 1/2, I5 = 1/4, I6 = 1/32.
    #[test]
    fn ghz_values_from_oracle() {
        let ghz = PureState3Q::ghz();
        let b = brute_force_invariants(&ghz);
        for x in [b.i1, b.i2, b.i3] {
            assert!((x - 0.5).abs() < 1e-15);
        }
        assert!((b.i4 - 0.5).abs() < 1e-15);
        assert!((b.i5 - 0.25).abs() < 1e-15);
        assert!((b.i6 - Complex64::new(0.03125, 0.0)).norm() < 1e-15);
        assert!(compute_invariants(&ghz).max_abs_diff(&b) < 1e-15);
    }

    #[test]
    fn w_state_has_zero_tangle() {
        let w = PureState3Q::w();
        assert!(brute_force_invariants(&w).i4 < 1e-15);
        assert!(three_tangle(&w) < 1e-15);
    }

    #[test]
    fn fast_path_agrees_with_index_sums() {
        let tol = Tolerances::default();
        for (n, e) in ensembles().into_iter().enumerate() {
            for seed in 0..10 {
                let s = random_state(100 * n as u64 + seed, e, &tol).unwrap();
                let d = compute_invariants(&s).max_abs_diff(&brute_force_invariants(&s));
                assert!(d < 1e-12, "{e:?} seed {seed}: {d}");
            }
        }
    }

    #[test]
    fn real_states_have_real_i6() {
        let tol = Tolerances::default();
        for seed in 0..30 {
            let s = random_state(seed, Ensemble::RealOrthogonal, &tol).unwrap();
            let v = compute_invariants(&s);
            assert!(v.i6.im.abs() <= tol.i6);
            assert_eq!(v.im6_sign, Im6Sign::Zero);
        }
    }

    #[test]
    fn bounds_hold() {
        let tol = Tolerances::default();
        for seed in 0..50 {
            let v = compute_invariants(&random_state(seed, Ensemble::ComplexHaar, &tol).unwrap());
            for x in [v.i1, v.i2, v.i3] {
                assert!((0.25 - 1e-12..=1.0 + 1e-12).contains(&x));
            }
            assert!((0.0..=1.0).contains(&v.i4));
        }
    }

    #[test]
    fn local_unitary_invariance() {
        let tol = Tolerances::default();
        let mut rng = rng_from_seed(77);
        for seed in 0..40 {
            let s = random_state(seed, Ensemble::ComplexHaar, &tol).unwrap();
            let v = compute_invariants(&s);
            for _ in 0..10 {
                let us = random_local_unitaries(&mut rng);
                let moved = s.apply_local_unitaries(&us, 1e-10).unwrap();
                assert!((moved.norm() - 1.0).abs() < 1e-12);
                assert!(compute_invariants(&moved).max_abs_diff(&v) < 1e-9);
            }
        }
    }

    #[test]
    fn conjugation_flips_i6_only() {
        let tol = Tolerances::default();
        for seed in 0..30 {
            let s = random_state(seed, Ensemble::GhzClassComplex, &tol).unwrap();
            let (v, w) = (compute_invariants(&s), compute_invariants(&s.conjugate()));
            for (a, b) in v.real_part().iter().zip(w.real_part()) {
                assert!((a - b).abs() < 1e-13);
            }
            assert!((v.i6.conj() - w.i6).norm() < 1e-13);
        }
    }

    #[test]
    fn tangle_symmetric_under_party_permutations() {
        let tol = Tolerances::default();
        let perms = [
            [Party::A, Party::B, Party::C],
            [Party::A, Party::C, Party::B],
            [Party::B, Party::A, Party::C],
            [Party::B, Party::C, Party::A],
            [Party::C, Party::A, Party::B],
            [Party::C, Party::B, Party::A],
        ];
        for seed in 0..20 {
            let s = random_state(seed, Ensemble::ComplexHaar, &tol).unwrap();
            let base = three_tangle(&s);
            for p in perms {
                assert!((three_tangle(&s.permute_parties(p).unwrap()) - base).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn fingerprint_relations() {
        let tol = Tolerances::default();
        let s = random_state(3, Ensemble::GhzClassComplex, &tol).unwrap();
        let v = compute_invariants(&s);
        assert_eq!(orbit_fingerprints_equal(&v, &v, 1e-8), OrbitRelation::SameOrbit);
        let c = compute_invariants(&s.conjugate());
        assert_eq!(orbit_fingerprints_equal(&v, &c, 1e-8), OrbitRelation::ConjugateOrbit);
        let g = compute_invariants(&PureState3Q::ghz());
        let p = compute_invariants(&PureState3Q::basis(0));
        assert_eq!(orbit_fingerprints_equal(&g, &p, 1e-8), OrbitRelation::Different);
    }

    #[test]
    fn trace_moments_examples() {
        let ghz = PureState3Q::ghz().t_matrices(Party::A);
        let m = trace_moments(&ghz);
        assert!((m.f0 - 0.25).abs() < 1e-15 && (m.f1 - 0.25).abs() < 1e-15);
        assert_eq!(m.tr01, Complex64::new(0.0, 0.0));

        let rotated = TMatrixPair::new(Mat2::diag_real(0.5, 0.5), Mat2::diag_real(-0.5, 0.5), Party::C);
        let m = trace_moments(&rotated);
        assert!((m.f0 - 0.125).abs() < 1e-15 && (m.f1 - 0.125).abs() < 1e-15);

        let lone = TMatrixPair::new(Mat2::diag_real(1.0, 0.0), Mat2::ZERO, Party::A);
        let m = trace_moments(&lone);
        assert_eq!((m.f1, m.g11, m.tr01, m.tr0011), (0.0, 0.0.into(), 0.0.into(), 0.0.into()));
    }

    #[test]
    fn g_traces_are_real() {
        // the six-fold products are palindromic, hence Hermitian
        let tol = Tolerances::default();
        for seed in 0..20 {
            let s = random_state(seed, Ensemble::ComplexHaar, &tol).unwrap();
            let m = trace_moments(&s.t_matrices(Party::B));
            for g in [m.g00, m.g01, m.g10, m.g11] {
                assert!(g.im.abs() < 1e-15);
            }
            assert!((m.g00.re - m.h0).abs() < 1e-15);
        }
    }
}
