//! Three-qubit pure states, party-relative `T` matrices and local operations.
//!
//! Amplitudes are stored in flat order `4i + 2j + k` for the basis state
//! `|ijk⟩`, Alice being the leftmost factor. For a chosen party the state is
//! viewed as a pair of 2×2 matrices `T0`, `T1` selected by that party's index:
//!
//! - Alice: `(T_i)_jk = t_ijk`
//! - Bob: `(T_i)_jk = t_jik`
//! - Charlie: `(T_i)_jk = t_jki`
//!
//! A unitary applied by the chosen party mixes `T0` and `T1`; unitaries
//! applied by the two remaining parties act by left and right multiplication.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::mat2::Mat2;
use crate::{Error, Result, Tolerances};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Party {
    A,
    B,
    C,
}

impl Party {
    pub const ALL: [Party; 3] = [Party::A, Party::B, Party::C];

    pub fn index(self) -> usize {
        match self {
            Party::A => 0,
            Party::B => 1,
            Party::C => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Party> {
        Party::ALL.get(i).copied()
    }

    /// Bit weight of this party's qubit in the flat amplitude index.
    #[inline]
    fn stride(self) -> usize {
        4 >> self.index()
    }

    /// The other two parties, in `A, B, C` order.
    pub fn others(self) -> [Party; 2] {
        match self {
            Party::A => [Party::B, Party::C],
            Party::B => [Party::A, Party::C],
            Party::C => [Party::A, Party::B],
        }
    }
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Party::A => "A",
            Party::B => "B",
            Party::C => "C",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Party {
    type Err = Error;

    fn from_str(s: &str) -> Result<Party> {
        match s {
            "A" | "a" => Ok(Party::A),
            "B" | "b" => Ok(Party::B),
            "C" | "c" => Ok(Party::C),
            _ => Err(Error::InvalidParameter(format!("unknown party {s:?}"))),
        }
    }
}

/// Flat index of `|ijk⟩` where `bits` are listed in `A, B, C` order.
#[inline]
pub fn flat_index(i: usize, j: usize, k: usize) -> usize {
    4 * i + 2 * j + k
}

/// A normalized three-qubit pure state.
///
/// Serializes as `{"amps": [[re, im], ...]}`; deserializing checks
/// normalization at the default tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawState")]
pub struct PureState3Q {
    amps: [Complex64; 8],
}

#[derive(Deserialize)]
struct RawState {
    amps: [Complex64; 8],
}

impl TryFrom<RawState> for PureState3Q {
    type Error = Error;

    fn try_from(raw: RawState) -> Result<PureState3Q> {
        PureState3Q::new(raw.amps)
    }
}

impl PureState3Q {
    /// Validates finiteness and normalization at the default tolerance.
    pub fn new(amps: [Complex64; 8]) -> Result<Self> {
        Self::with_tolerance(amps, Tolerances::default().norm)
    }

    pub fn with_tolerance(amps: [Complex64; 8], eps_norm: f64) -> Result<Self> {
        if let Some(index) = amps.iter().position(|z| !z.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        let norm = norm_of(&amps);
        if (norm - 1.0).abs() > eps_norm {
            return Err(Error::NotNormalized { norm });
        }
        Ok(PureState3Q { amps })
    }

    /// Rescales to unit norm. Fails on the zero vector.
    pub fn normalized(amps: [Complex64; 8]) -> Result<Self> {
        if let Some(index) = amps.iter().position(|z| !z.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        let norm = norm_of(&amps);
        if norm == 0.0 {
            return Err(Error::NotNormalized { norm });
        }
        let inv = 1.0 / norm;
        Ok(PureState3Q {
            amps: amps.map(|z| z * inv),
        })
    }

    pub fn from_real(amps: [f64; 8]) -> Result<Self> {
        Self::normalized(amps.map(|x| Complex64::new(x, 0.0)))
    }

    pub fn basis(index: usize) -> Self {
        let mut amps = [ZERO; 8];
        amps[index] = Complex64::new(1.0, 0.0);
        PureState3Q { amps }
    }

    /// `(|000⟩ + |111⟩)/√2`.
    pub fn ghz() -> Self {
        let mut amps = [ZERO; 8];
        amps[0] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        amps[7] = amps[0];
        PureState3Q { amps }
    }

    /// `(|001⟩ + |010⟩ + |100⟩)/√3`.
    pub fn w() -> Self {
        let c = Complex64::new(1.0 / 3f64.sqrt(), 0.0);
        let mut amps = [ZERO; 8];
        amps[1] = c;
        amps[2] = c;
        amps[4] = c;
        PureState3Q { amps }
    }

    /// Normalized product `|a⟩|b⟩|c⟩`.
    pub fn product(a: [Complex64; 2], b: [Complex64; 2], c: [Complex64; 2]) -> Result<Self> {
        Self::normalized(product_amps(a, b, c))
    }

    #[inline]
    pub fn amps(&self) -> &[Complex64; 8] {
        &self.amps
    }

    #[inline]
    pub fn amp(&self, i: usize, j: usize, k: usize) -> Complex64 {
        self.amps[flat_index(i, j, k)]
    }

    pub fn norm(&self) -> f64 {
        norm_of(&self.amps)
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState3Q) -> Complex64 {
        inner_amps(&self.amps, &other.amps)
    }

    pub fn conjugate(&self) -> PureState3Q {
        PureState3Q {
            amps: self.amps.map(|z| z.conj()),
        }
    }

    pub fn max_imag(&self) -> f64 {
        self.amps.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    pub fn is_real_amplitudes(&self, tol: f64) -> bool {
        self.max_imag() <= tol
    }

    pub fn t_matrices(&self, party: Party) -> TMatrixPair {
        let slice = |i: usize| {
            let mut m = Mat2::ZERO;
            for j in 0..2 {
                for k in 0..2 {
                    m.0[j][k] = self.amps[party_index(party, i, j, k)];
                }
            }
            m
        };
        TMatrixPair::new(slice(0), slice(1), party)
    }

    pub fn from_t_matrices(t: &TMatrixPair) -> Result<PureState3Q> {
        PureState3Q::new(t.amplitudes())
    }

    /// Applies `u` to `party`'s qubit after checking unitarity.
    pub fn apply_local_unitary(&self, party: Party, u: &Mat2, eps_unit: f64) -> Result<PureState3Q> {
        let deviation = u.unitarity_deviation();
        if !(deviation <= eps_unit) {
            return Err(Error::NonUnitaryOperator { deviation });
        }
        Ok(PureState3Q {
            amps: apply_local(&self.amps, party, u),
        })
    }

    /// Applies a product of three local unitaries.
    pub fn apply_local_unitaries(&self, us: &[Mat2; 3], eps_unit: f64) -> Result<PureState3Q> {
        let mut s = *self;
        for (p, u) in Party::ALL.iter().zip(us) {
            s = s.apply_local_unitary(*p, u, eps_unit)?;
        }
        Ok(s)
    }

    /// Applies the Kraus operator `k` on `party` and returns the normalized
    /// outcome together with its probability.
    pub fn apply_kraus(&self, party: Party, k: &Mat2, tol: &Tolerances) -> Result<(PureState3Q, f64)> {
        let norm = k.operator_norm();
        if !(norm <= 1.0 + tol.unit) {
            return Err(Error::KrausNormTooLarge { norm });
        }
        let out = apply_local(&self.amps, party, k);
        let q = out.iter().map(|z| z.norm_sqr()).sum::<f64>();
        if !(q >= tol.prob) {
            return Err(Error::ZeroProbabilityOutcome { probability: q });
        }
        let inv = 1.0 / q.sqrt();
        Ok((PureState3Q { amps: out.map(|z| z * inv) }, q))
    }

    /// `|⟨self|other⟩|`.
    pub fn fidelity_up_to_global_phase(&self, other: &PureState3Q) -> f64 {
        self.inner(other).norm()
    }

    /// Reduced density matrix of one party.
    pub fn marginal(&self, party: Party) -> Mat2 {
        let t = self.t_matrices(party);
        // (ρ)_{ii'} = Σ_{jk} (T_i)_{jk} (T_i')*_{jk} = Tr[T_i T_i'^dag]
        let e = |x: &Mat2, y: &Mat2| x.trace_mul(&y.adjoint());
        Mat2::new(e(&t.t0, &t.t0), e(&t.t0, &t.t1), e(&t.t1, &t.t0), e(&t.t1, &t.t1))
    }

    /// `Tr ρ²` of a party's marginal.
    pub fn purity(&self, party: Party) -> f64 {
        let rho = self.marginal(party);
        rho.trace_mul(&rho).re
    }

    /// Relabels the qubits: position `p` of the result holds the qubit that
    /// was at position `perm[p]`.
    pub fn permute_parties(&self, perm: [Party; 3]) -> Result<PureState3Q> {
        let mut seen = [false; 3];
        for p in perm {
            seen[p.index()] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidParameter(format!("{perm:?} is not a permutation")));
        }
        let mut amps = [ZERO; 8];
        for (n, slot) in amps.iter_mut().enumerate() {
            let new_bits = [(n >> 2) & 1, (n >> 1) & 1, n & 1];
            let mut old_bits = [0; 3];
            for p in 0..3 {
                old_bits[perm[p].index()] = new_bits[p];
            }
            *slot = self.amps[flat_index(old_bits[0], old_bits[1], old_bits[2])];
        }
        Ok(PureState3Q { amps })
    }

    pub fn max_abs_diff(&self, other: &PureState3Q) -> f64 {
        self.amps
            .iter()
            .zip(other.amps.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

#[inline]
fn party_index(party: Party, i: usize, j: usize, k: usize) -> usize {
    match party {
        Party::A => flat_index(i, j, k),
        Party::B => flat_index(j, i, k),
        Party::C => flat_index(j, k, i),
    }
}

pub(crate) fn norm_of(amps: &[Complex64; 8]) -> f64 {
    amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub(crate) fn inner_amps(a: &[Complex64; 8], b: &[Complex64; 8]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn product_amps(a: [Complex64; 2], b: [Complex64; 2], c: [Complex64; 2]) -> [Complex64; 8] {
    let mut amps = [ZERO; 8];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                amps[flat_index(i, j, k)] = a[i] * b[j] * c[k];
            }
        }
    }
    amps
}

/// Applies an arbitrary 2×2 operator on one qubit, without any checks.
pub(crate) fn apply_local(amps: &[Complex64; 8], party: Party, m: &Mat2) -> [Complex64; 8] {
    let stride = party.stride();
    let mut out = [ZERO; 8];
    for base in (0..8).filter(|n| n & stride == 0) {
        let v0 = amps[base];
        let v1 = amps[base | stride];
        out[base] = m.0[0][0] * v0 + m.0[0][1] * v1;
        out[base | stride] = m.0[1][0] * v0 + m.0[1][1] * v1;
    }
    out
}

/// The two amplitude slices of a state seen from one party.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TMatrixPair {
    pub t0: Mat2,
    pub t1: Mat2,
    pub party: Party,
    /// `Tr[T0 T0^dag]`
    pub a: f64,
    /// `Tr[T1 T1^dag]`
    pub b: f64,
}

impl TMatrixPair {
    pub fn new(t0: Mat2, t1: Mat2, party: Party) -> Self {
        let a = t0.frobenius().powi(2);
        let b = t1.frobenius().powi(2);
        TMatrixPair { t0, t1, party, a, b }
    }

    #[inline]
    pub fn get(&self, i: usize) -> &Mat2 {
        if i == 0 {
            &self.t0
        } else {
            &self.t1
        }
    }

    /// Reassembles the flat amplitude vector.
    pub fn amplitudes(&self) -> [Complex64; 8] {
        let mut amps = [ZERO; 8];
        for i in 0..2 {
            let m = self.get(i);
            for j in 0..2 {
                for k in 0..2 {
                    amps[party_index(self.party, i, j, k)] = m.0[j][k];
                }
            }
        }
        amps
    }

    /// `T'_i = Σ_j u_ij T_j`: the effect of a unitary by this pair's party.
    pub fn mix(&self, u: &Mat2) -> TMatrixPair {
        let m = &u.0;
        TMatrixPair::new(
            self.t0 * m[0][0] + self.t1 * m[0][1],
            self.t0 * m[1][0] + self.t1 * m[1][1],
            self.party,
        )
    }

    /// Scales the slices by `√x` and `√y`: a diagonal Kraus operator on this
    /// party, without normalization.
    pub fn scale_slices(&self, x: f64, y: f64) -> TMatrixPair {
        TMatrixPair::new(self.t0 * x.sqrt(), self.t1 * y.sqrt(), self.party)
    }

    /// Swaps the slices (a bit flip on this party).
    pub fn flipped(&self) -> TMatrixPair {
        TMatrixPair::new(self.t1, self.t0, self.party)
    }
}
