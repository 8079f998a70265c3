//! Seeded ensembles of states, unitaries and two-outcome POVMs.
//!
//! Every sampler draws from a `ChaCha8Rng`, so a seed reproduces the same
//! values on every platform.

use nalgebra::{Complex, Matrix2};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::invariants::three_tangle;
use crate::mat2::Mat2;
use crate::state::{Party, PureState3Q};
use crate::{Error, Result, Tolerances};

pub const DEFAULT_MAX_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ensemble {
    /// Unitarily invariant measure on the unit sphere of C^8.
    ComplexHaar,
    /// Uniform on the unit sphere of R^8.
    RealOrthogonal,
    /// Real amplitudes, conditioned on nonzero three-tangle.
    GhzClassReal,
    /// Complex amplitudes, conditioned on nonzero three-tangle.
    GhzClassComplex,
}

impl std::str::FromStr for Ensemble {
    type Err = Error;

    fn from_str(s: &str) -> Result<Ensemble> {
        match s {
            "complex_haar" => Ok(Ensemble::ComplexHaar),
            "real_orthogonal" => Ok(Ensemble::RealOrthogonal),
            "ghz_class_real" => Ok(Ensemble::GhzClassReal),
            "ghz_class_complex" => Ok(Ensemble::GhzClassComplex),
            _ => Err(Error::InvalidParameter(format!("unknown ensemble {s:?}"))),
        }
    }
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_state(seed: u64, ensemble: Ensemble, tol: &Tolerances) -> Result<PureState3Q> {
    let mut rng = rng_from_seed(seed);
    sample_state(&mut rng, ensemble, tol, DEFAULT_MAX_ATTEMPTS)
}

pub fn sample_state<R: Rng>(
    rng: &mut R,
    ensemble: Ensemble,
    tol: &Tolerances,
    max_attempts: usize,
) -> Result<PureState3Q> {
    let real = matches!(ensemble, Ensemble::RealOrthogonal | Ensemble::GhzClassReal);
    let conditioned = matches!(ensemble, Ensemble::GhzClassReal | Ensemble::GhzClassComplex);
    for _ in 0..max_attempts.max(1) {
        let amps: [Complex64; 8] = std::array::from_fn(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = if real { 0.0 } else { rng.sample(StandardNormal) };
            Complex64::new(re, im)
        });
        let Ok(state) = PureState3Q::normalized(amps) else {
            continue;
        };
        if !conditioned || is_tripartite_ghz(&state, tol) {
            return Ok(state);
        }
    }
    Err(Error::EnsembleExhausted {
        attempts: max_attempts,
    })
}

fn is_tripartite_ghz(state: &PureState3Q, tol: &Tolerances) -> bool {
    three_tangle(state) > tol.tangle
        && Party::ALL
            .iter()
            .all(|&p| state.marginal(p).det().re > tol.tangle)
}

fn gaussian_c<R: Rng>(rng: &mut R) -> Complex<f64> {
    Complex::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-distributed element of U(2): QR of a complex Ginibre matrix with
/// the phases of `R`'s diagonal moved into `Q`.
pub fn haar_unitary<R: Rng>(rng: &mut R) -> Mat2 {
    let g = Matrix2::from_fn(|_, _| gaussian_c(rng));
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let mut out = Mat2::ZERO;
    for col in 0..2 {
        let d = r[(col, col)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex::new(1.0, 0.0) };
        for row in 0..2 {
            out.0[row][col] = q[(row, col)] * phase;
        }
    }
    out
}

/// Haar-distributed element of O(2).
pub fn haar_orthogonal<R: Rng>(rng: &mut R) -> Mat2 {
    let g = Matrix2::<f64>::from_fn(|_, _| rng.sample(StandardNormal));
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let mut out = Mat2::ZERO;
    for col in 0..2 {
        let sign = if r[(col, col)] < 0.0 { -1.0 } else { 1.0 };
        for row in 0..2 {
            out.0[row][col] = Complex64::new(q[(row, col)] * sign, 0.0);
        }
    }
    out
}

pub fn random_local_unitaries<R: Rng>(rng: &mut R) -> [Mat2; 3] {
    [haar_unitary(rng), haar_unitary(rng), haar_unitary(rng)]
}

/// A random full-rank two-outcome POVM `{V0 E0 U, V1 E1 U}` with diagonal
/// weights drawn from `[lo, 1 − lo]`.
pub fn random_kraus_pair<R: Rng>(rng: &mut R, lo: f64) -> [Mat2; 2] {
    let u = haar_unitary(rng);
    let v0 = haar_unitary(rng);
    let v1 = haar_unitary(rng);
    let x: f64 = rng.random_range(lo..1.0 - lo);
    let y: f64 = rng.random_range(lo..1.0 - lo);
    let e0 = Mat2::diag_real(x.sqrt(), y.sqrt());
    let e1 = Mat2::diag_real((1.0 - x).sqrt(), (1.0 - y).sqrt());
    [v0 * e0 * u, v1 * e1 * u]
}
