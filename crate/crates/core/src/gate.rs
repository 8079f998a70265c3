//! Search for a local unitary that turns a state into a gate state.
//!
//! A state is a gate state for a party when its `T` matrices satisfy
//!
//! ```text
//! r1 = a² Tr[(T1 T1†)²] − b² Tr[(T0 T0†)²] = 0
//! r2 = a G10 − b G01 = 0,   G_ij = Tr[T_i T_j† T_i T_i† T_j T_i†]
//! ```
//!
//! The party's unitary is `U(α, ζ) = R(α) diag(e^{iζ}, e^{−iζ})`. For fixed
//! `ζ`, both residuals are `cos⁸α` times a structured degree-8 polynomial in
//! `z = tan α`, which reduces to a cubic in `w = 1/z − z`. Real states only
//! need `ζ = 0`; complex states need a `ζ` where the two cubics share a real
//! root, located through the zeros of their resultant.

use std::f64::consts::{FRAC_PI_4, PI, TAU};
use std::sync::OnceLock;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::canonical::{classify, StateClass};
use crate::invariants::trace_moments;
use crate::mat2::Mat2;
use crate::poly::{bisect, complex_polynomial_roots, sylvester_resultant, w_to_z, ReducedCubic, StructuredFitter};
use crate::povm::confirms_same_orbit;
use crate::state::{Party, PureState3Q, TMatrixPair};
use crate::{Error, Result, Tolerances};

const FIT_SAMPLES: usize = 17;
/// Max abs residual of the structured fit at unit state norm.
const FIT_TOLERANCE: f64 = 1e-10;
const BISECTION_TOL: f64 = 1e-13;
pub const DEFAULT_GRID: usize = 512;

/// POVM parameters tried, in order, when confirming that a gate candidate
/// gives outcomes in the same orbit.
pub const LAMBDA_PROBES: [f64; 11] = [2.0, 1.5, 1.2, 1.05, 1.01, 1.001, 1.0001, 5.0, 20.0, 100.0, 1000.0];

fn fitter() -> &'static StructuredFitter {
    static FITTER: OnceLock<StructuredFitter> = OnceLock::new();
    FITTER.get_or_init(|| StructuredFitter::uniform(FIT_SAMPLES).expect("fixed sample set is well conditioned"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateConditionsResidual {
    pub r1: f64,
    pub r2: Complex64,
}

impl GateConditionsResidual {
    pub fn within(&self, eps: f64) -> bool {
        self.r1.abs() <= eps && self.r2.norm() <= eps
    }

    pub fn max_abs(&self) -> f64 {
        self.r1.abs().max(self.r2.norm())
    }
}

pub fn gate_residuals(t: &TMatrixPair) -> GateConditionsResidual {
    let m = trace_moments(t);
    GateConditionsResidual {
        r1: t.a * t.a * m.f1 - t.b * t.b * m.f0,
        r2: m.g10 * t.a - m.g01 * t.b,
    }
}

/// `R(α) diag(e^{iζ}, e^{−iζ})`.
pub fn gate_unitary(alpha: f64, zeta: f64) -> Mat2 {
    Mat2::rotation(alpha) * Mat2::phase(zeta)
}

fn residuals_at(t: &TMatrixPair, alpha: f64, zeta: f64) -> GateConditionsResidual {
    gate_residuals(&t.mix(&gate_unitary(alpha, zeta)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateSearchResult {
    pub party: Party,
    pub alpha: f64,
    pub zeta: f64,
    pub unitary: Mat2,
    pub residuals: GateConditionsResidual,
    pub transformed: PureState3Q,
    /// `ζ` candidates examined, the accepted one included.
    pub candidates_tried: usize,
    /// A POVM parameter at which the outcomes were confirmed to share an
    /// orbit; `None` for the real branch, where this holds for every `λ`.
    pub lambda: Option<f64>,
}

/// Fits both structured polynomials at a fixed `ζ`.
fn fit_pair(t: &TMatrixPair, zeta: f64) -> ([crate::poly::PolynomialP8; 2], f64) {
    let f = fitter();
    let mut v1 = [0.0; FIT_SAMPLES];
    let mut v2 = [0.0; FIT_SAMPLES];
    for (k, &alpha) in f.alphas().iter().enumerate() {
        let r = residuals_at(t, alpha, zeta);
        v1[k] = r.r1;
        v2[k] = r.r2.re;
    }
    let (p1, e1) = f.fit(&v1);
    let (p2, e2) = f.fit(&v2);
    ([p1, p2], e1.max(e2))
}

fn checked_pair(t: &TMatrixPair, zeta: f64) -> Result<[crate::poly::PolynomialP8; 2]> {
    let (p, residual) = fit_pair(t, zeta);
    let scale = t.a + t.b;
    if !(residual <= FIT_TOLERANCE * scale.powi(4).max(1.0)) {
        return Err(Error::StructureViolation { residual });
    }
    Ok(p)
}

/// The cond1 polynomial of a real state under real rotations.
pub fn build_p1_real(state: &PureState3Q, party: Party, tol: &Tolerances) -> Result<crate::poly::PolynomialP8> {
    require_real(state, tol)?;
    Ok(checked_pair(&state.t_matrices(party), 0.0)?[0])
}

/// The reduced cubics of both conditions at a fixed `ζ`.
pub fn build_cubics_complex(state: &PureState3Q, party: Party, zeta: f64) -> Result<(ReducedCubic, ReducedCubic)> {
    let [p1, p2] = checked_pair(&state.t_matrices(party), zeta)?;
    Ok((ReducedCubic::from_p8(&p1), ReducedCubic::from_p8(&p2)))
}

fn require_real(state: &PureState3Q, tol: &Tolerances) -> Result<()> {
    let max_imag = state.max_imag();
    if max_imag > tol.norm {
        return Err(Error::NotRealAmplitudes { max_imag });
    }
    Ok(())
}

fn require_ghz(state: &PureState3Q, tol: &Tolerances) -> Result<()> {
    if classify(state, tol) != StateClass::GhzClass {
        return Err(Error::NotGhzClass);
    }
    Ok(())
}

/// `|g(w)|` relative to the coefficient scale of `g` at `w`.
fn relative_value(g: &ReducedCubic, w: f64) -> f64 {
    let scale = g.scale() * (1.0 + w.abs()).powi(3);
    if scale == 0.0 {
        0.0
    } else {
        g.eval(w).abs() / scale
    }
}

/// An angle at `tan α = z`, taking `z = ±∞` to `π/2`.
fn angle_of(z: f64) -> f64 {
    if z.is_finite() {
        z.atan()
    } else {
        PI / 2.0
    }
}

/// Real roots `w` of `g1` with `|g2(w)|` below `eps` (relative), best first.
/// When `g1` vanishes identically the roots of `g2` are used instead.
fn common_real_roots(g1: &ReducedCubic, g2: &ReducedCubic, eps: f64) -> CommonRoots {
    let (lead, other) = if g1.scale() > 0.0 { (g1, g2) } else { (g2, g1) };
    if lead.scale() == 0.0 {
        // both conditions hold for every rotation
        return CommonRoots {
            real: vec![(0.0, f64::INFINITY)],
        };
    }
    let roots = lead.real_roots(1e-12, 1e-7);
    let mut scored: Vec<(f64, f64)> = roots.iter().map(|&w| (relative_value(other, w), w)).collect();
    scored.sort_by(|x, y| x.0.total_cmp(&y.0));
    CommonRoots {
        real: scored.into_iter().filter(|s| s.0 <= eps).map(|s| (s.1, w_to_z(s.1))).collect(),
    }
}

struct CommonRoots {
    /// `(w, z)` pairs with `z` on the positive branch.
    real: Vec<(f64, f64)>,
}

/// Bisection of `f` around `alpha0`, widening the bracket until the sign
/// changes.
fn refine_near<F: FnMut(f64) -> f64>(mut f: F, alpha0: f64) -> Option<f64> {
    let f0 = f(alpha0);
    if f0 == 0.0 {
        return Some(alpha0);
    }
    let mut h = 1e-9;
    while h <= 1e-2 {
        for (lo, hi) in [(alpha0 - h, alpha0), (alpha0, alpha0 + h)] {
            let (flo, fhi) = (f(lo), f(hi));
            if flo.signum() != fhi.signum() {
                return bisect(&mut f, lo, hi, BISECTION_TOL).ok();
            }
        }
        h *= 10.0;
    }
    None
}

/// Gate search for a state with real amplitudes, over real rotations.
///
/// The cond1 polynomial always has a root with `|z| ≤ 1`, but only the
/// root shared with the cond2 polynomial yields outcomes with equal `I5`,
/// so that root is preferred; the guaranteed sign change of cond1 on
/// `[−π/4, π/4]` is the fallback.
pub fn find_gate_unitary_real(state: &PureState3Q, party: Party, tol: &Tolerances) -> Result<GateSearchResult> {
    require_ghz(state, tol)?;
    require_real(state, tol)?;
    let t = state.t_matrices(party);
    let [p1, p2] = checked_pair(&t, 0.0)?;
    let (g1, g2) = (ReducedCubic::from_p8(&p1), ReducedCubic::from_p8(&p2));
    let f1 = |alpha: f64| residuals_at(&t, alpha, 0.0).r1;

    let mut alpha = None;
    let roots = common_real_roots(&g1, &g2, 1e-6);
    for &(_, z) in &roots.real {
        // of the pair z, −1/z keep the one in [−1, 1]
        let z = if z.abs() <= 1.0 { z } else { -1.0 / z };
        let a0 = angle_of(z);
        if f1(a0).abs() <= tol.gate {
            alpha = Some(a0);
            break;
        }
        if let Some(a) = refine_near(f1, a0) {
            alpha = Some(a);
            break;
        }
    }
    let alpha = match alpha {
        Some(a) => a,
        None => bisect(f1, -FRAC_PI_4, FRAC_PI_4, BISECTION_TOL)?,
    };
    finish(state, &t, party, alpha, 0.0, 1, None, tol, false)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    state: &PureState3Q,
    t: &TMatrixPair,
    party: Party,
    alpha: f64,
    zeta: f64,
    candidates_tried: usize,
    lambda: Option<f64>,
    tol: &Tolerances,
    require_r2: bool,
) -> Result<GateSearchResult> {
    let unitary = gate_unitary(alpha, zeta);
    let residuals = gate_residuals(&t.mix(&unitary));
    let ok = if require_r2 {
        residuals.within(tol.gate)
    } else {
        residuals.r1.abs() <= tol.gate
    };
    if !ok {
        return Err(Error::GateConditionViolated {
            r1: residuals.r1,
            r2: residuals.r2.norm(),
        });
    }
    Ok(GateSearchResult {
        party,
        alpha,
        zeta,
        unitary,
        residuals,
        transformed: state.apply_local_unitary(party, &unitary, tol.unit)?,
        candidates_tried,
        lambda,
    })
}

/// `Res(g1, g2)` at one `ζ`.
pub fn resultant_at(state: &PureState3Q, party: Party, zeta: f64) -> Result<f64> {
    let (g1, g2) = build_cubics_complex(state, party, zeta)?;
    Ok(sylvester_resultant(&g1, &g2))
}

fn resultant_grid(t: &TMatrixPair, n: usize) -> Result<Vec<f64>> {
    (0..n)
        .map(|k| {
            let [p1, p2] = checked_pair(t, TAU * k as f64 / n as f64)?;
            Ok(sylvester_resultant(&ReducedCubic::from_p8(&p1), &ReducedCubic::from_p8(&p2)))
        })
        .collect()
}

/// Highest frequency of `Res(g1, g2)(ζ)` as a trigonometric polynomial.
const RESULTANT_BANDWIDTH: usize = 18;

/// Companion roots within this distance of the unit circle are kept as
/// candidates; close pairs of real zeros split off the circle slightly.
const UNIT_CIRCLE_BAND: f64 = 1e-3;

/// Zeros of `Res(g1, g2)(ζ)` on `[0, 2π)`, in increasing order.
///
/// The grid samples give the resultant's Fourier coefficients exactly, so
/// its zeros are the unit-circle roots of a degree-36 polynomial in
/// `e^{iζ}`. Grid sign changes are added as well, and every candidate is
/// refined by bisection where the sign changes nearby.
pub fn resultant_scan(state: &PureState3Q, party: Party, grid_size: usize, tol: &Tolerances) -> Result<Vec<f64>> {
    if grid_size < 64 {
        return Err(Error::InvalidParameter(format!("grid size {grid_size} is below 64")));
    }
    let t = state.t_matrices(party);
    let grid = resultant_grid(&t, grid_size)?;
    let scale = grid.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return Ok(vec![0.0]);
    }
    let res = |zeta: f64| {
        checked_pair(&t, zeta)
            .map(|[p1, p2]| sylvester_resultant(&ReducedCubic::from_p8(&p1), &ReducedCubic::from_p8(&p2)))
            .unwrap_or(f64::NAN)
    };
    let step = TAU / grid_size as f64;
    let mut raw = Vec::new();
    for k in 0..grid_size {
        let (v0, v1) = (grid[k], grid[(k + 1) % grid_size]);
        let z0 = step * k as f64;
        if v0.abs() <= tol.res * scale {
            raw.push(z0);
        } else if v1.abs() > tol.res * scale && v0.signum() != v1.signum() {
            raw.push(bisect(res, z0, z0 + step, BISECTION_TOL)?);
        }
    }
    for u in trig_roots(&grid) {
        if (u.norm() - 1.0).abs() <= UNIT_CIRCLE_BAND {
            let zeta = u.arg().rem_euclid(TAU);
            raw.push(refine_near(res, zeta).unwrap_or(zeta));
        }
    }
    let mut out: Vec<f64> = raw.into_iter().map(|z| z.rem_euclid(TAU)).collect();
    out.sort_by(f64::total_cmp);
    out.dedup_by(|a, b| (*a - *b).abs() <= 1e-9);
    if out.len() > 1 && out[0] + TAU - out[out.len() - 1] <= 1e-9 {
        out.pop();
    }
    if out.is_empty() {
        return Err(Error::NoSignChange);
    }
    Ok(out)
}

/// Roots `u` of `e^{iBζ} Res(ζ)` as a polynomial in `u = e^{iζ}`, with the
/// coefficients read off the FFT of the grid.
fn trig_roots(grid: &[f64]) -> Vec<Complex64> {
    let n = grid.len();
    let mut buf: Vec<Complex64> = grid.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let band = RESULTANT_BANDWIDTH.min(n / 2 - 1);
    // Res(ζ) = Σ_k C_k e^{ikζ}, C_k = X_k / n with X the forward transform
    // of the samples, and C_{−k} = conj(C_k)
    let c = |k: isize| {
        if k >= 0 {
            buf[k as usize] / n as f64
        } else {
            buf[n - (-k) as usize] / n as f64
        }
    };
    let coeffs: Vec<Complex64> = (0..=2 * band).map(|m| c(m as isize - band as isize)).collect();
    complex_polynomial_roots(&coeffs, 1e-13)
}

/// Energy of the sampled resultant by FFT bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultantSpectrum {
    /// `energy[k]` combines bins `k` and `n − k`, for `k ≤ n/2`.
    pub energy: Vec<f64>,
    /// Share of the energy in bins 2, 6, 10, 14 and 18.
    pub structured_fraction: f64,
}

pub const RESULTANT_FREQUENCIES: [usize; 5] = [2, 6, 10, 14, 18];

pub fn resultant_spectrum(state: &PureState3Q, party: Party, grid_size: usize) -> Result<ResultantSpectrum> {
    if grid_size < 64 {
        return Err(Error::InvalidParameter(format!("grid size {grid_size} is below 64")));
    }
    let grid = resultant_grid(&state.t_matrices(party), grid_size)?;
    let mut buf: Vec<Complex64> = grid.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(grid_size).process(&mut buf);
    let half = grid_size / 2;
    let energy: Vec<f64> = (0..=half)
        .map(|k| {
            if k == 0 || 2 * k == grid_size {
                buf[k].norm_sqr()
            } else {
                buf[k].norm_sqr() + buf[grid_size - k].norm_sqr()
            }
        })
        .collect();
    let total: f64 = energy.iter().sum();
    let structured: f64 = RESULTANT_FREQUENCIES.iter().filter(|&&k| k <= half).map(|&k| energy[k]).sum();
    Ok(ResultantSpectrum {
        structured_fraction: if total > 0.0 { structured / total } else { 1.0 },
        energy,
    })
}

/// Which POVM parameters count when confirming a candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaChoice {
    /// Accept the first of [`LAMBDA_PROBES`] that works.
    Probe,
    /// Require this parameter.
    Fixed(f64),
}

/// Two Newton steps on `(r1, Re r2)` in `(α, ζ)` with a finite-difference
/// Jacobian.
fn polish(t: &TMatrixPair, mut alpha: f64, mut zeta: f64) -> (f64, f64) {
    let f = |a: f64, z: f64| {
        let r = residuals_at(t, a, z);
        [r.r1, r.r2.re]
    };
    let h = 1e-7;
    for _ in 0..3 {
        let r = f(alpha, zeta);
        let (ra_p, ra_m) = (f(alpha + h, zeta), f(alpha - h, zeta));
        let (rz_p, rz_m) = (f(alpha, zeta + h), f(alpha, zeta - h));
        let j = [
            [(ra_p[0] - ra_m[0]) / (2.0 * h), (rz_p[0] - rz_m[0]) / (2.0 * h)],
            [(ra_p[1] - ra_m[1]) / (2.0 * h), (rz_p[1] - rz_m[1]) / (2.0 * h)],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let da = (j[1][1] * r[0] - j[0][1] * r[1]) / det;
        let dz = (j[0][0] * r[1] - j[1][0] * r[0]) / det;
        if !(da.abs() < 1e-4 && dz.abs() < 1e-4) {
            break;
        }
        alpha -= da;
        zeta -= dz;
    }
    (alpha, zeta)
}

/// Gate search over `U(α, ζ)` for an arbitrary GHZ-class state. The first
/// candidate whose deterministic POVM has both outcomes in the same orbit
/// is returned.
pub fn find_gate_unitary_complex(state: &PureState3Q, party: Party, tol: &Tolerances) -> Result<GateSearchResult> {
    find_gate_unitary_complex_with(state, party, LambdaChoice::Probe, DEFAULT_GRID, tol)
}

pub fn find_gate_unitary_complex_with(
    state: &PureState3Q,
    party: Party,
    lambdas: LambdaChoice,
    grid_size: usize,
    tol: &Tolerances,
) -> Result<GateSearchResult> {
    require_ghz(state, tol)?;
    let t = state.t_matrices(party);
    let candidates = resultant_scan(state, party, grid_size, tol)?;
    let probes: &[f64] = match lambdas {
        LambdaChoice::Probe => &LAMBDA_PROBES,
        LambdaChoice::Fixed(ref l) => std::slice::from_ref(l),
    };
    let mut real_common = 0;
    for (n, &zeta0) in candidates.iter().enumerate() {
        let [p1, p2] = checked_pair(&t, zeta0)?;
        let (g1, g2) = (ReducedCubic::from_p8(&p1), ReducedCubic::from_p8(&p2));
        let roots = common_real_roots(&g1, &g2, tol.gate);
        for &(_, z) in &roots.real {
            real_common += 1;
            let mut alpha = angle_of(z);
            let mut zeta = zeta0;
            if !residuals_at(&t, alpha, zeta).within(tol.gate) {
                (alpha, zeta) = polish(&t, alpha, zeta);
            }
            let residuals = residuals_at(&t, alpha, zeta);
            if !residuals.within(tol.gate) {
                continue;
            }
            let transformed = state.apply_local_unitary(party, &gate_unitary(alpha, zeta), tol.unit)?;
            for &lambda in probes {
                if confirms_same_orbit(&transformed, party, lambda, tol) {
                    return finish(state, &t, party, alpha, zeta, n + 1, Some(lambda), tol, true);
                }
            }
        }
    }
    if real_common == 0 {
        Err(Error::OnlyComplexCommonRoots {
            candidates: candidates.len(),
        })
    } else {
        Err(Error::OnlyConjugateOrbitOutcomes {
            candidates: candidates.len(),
        })
    }
}

/// Real branch for states with real amplitudes, complex branch otherwise.
pub fn find_gate_unitary(state: &PureState3Q, party: Party, tol: &Tolerances) -> Result<GateSearchResult> {
    if state.is_real_amplitudes(tol.norm) {
        find_gate_unitary_real(state, party, tol)
    } else {
        find_gate_unitary_complex(state, party, tol)
    }
}
