//! Real polynomial machinery behind the gate search: the structured
//! degree-8 form, its cubic reduction, companion-matrix roots, Sylvester
//! resultants and bracketed bisection.

use nalgebra::{DMatrix, DVector, Matrix3, SMatrix};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// `A(1 − z⁸) + B(z + z⁷) + C(z² − z⁶) + D(z³ + z⁵)`.
///
/// With `z = tan α` and the common factor `cos⁸ α` restored, this is the
/// homogeneous form evaluated by [`PolynomialP8::eval_angle`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolynomialP8 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl PolynomialP8 {
    pub fn eval(&self, z: f64) -> f64 {
        let z2 = z * z;
        let z4 = z2 * z2;
        let z8 = z4 * z4;
        self.a * (1.0 - z8) + self.b * (z + z4 * z2 * z) + self.c * (z2 - z4 * z2) + self.d * (z2 * z + z4 * z)
    }

    pub fn eval_complex(&self, z: num_complex::Complex64) -> num_complex::Complex64 {
        let p = |n: i32| z.powi(n);
        self.a * (1.0 - p(8)) + self.b * (z + p(7)) + self.c * (p(2) - p(6)) + self.d * (p(3) + p(5))
    }

    /// `cos⁸α · p(tan α)`, finite for every angle.
    pub fn eval_angle(&self, alpha: f64) -> f64 {
        let basis = angle_basis(alpha);
        self.a * basis[0] + self.b * basis[1] + self.c * basis[2] + self.d * basis[3]
    }

    /// Coefficients in ascending powers of `z`.
    pub fn dense(&self) -> [f64; 9] {
        [self.a, self.b, self.c, self.d, 0.0, self.d, -self.c, self.b, -self.a]
    }

    /// Least-squares fit of the four structured coefficients to samples of
    /// `cos⁸α · p(tan α)`. Returns the fit and its max abs residual.
    pub fn fit(samples: &[(f64, f64)]) -> Result<(PolynomialP8, f64)> {
        let fitter = StructuredFitter::new(samples.iter().map(|s| s.0).collect())?;
        let values: Vec<f64> = samples.iter().map(|s| s.1).collect();
        Ok(fitter.fit(&values))
    }

    pub fn max_coefficient(&self) -> f64 {
        self.a.abs().max(self.b.abs()).max(self.c.abs()).max(self.d.abs())
    }
}

fn angle_basis(alpha: f64) -> [f64; 4] {
    let (s, c) = alpha.sin_cos();
    let (s2, c2) = (s * s, c * c);
    [
        c2 * c2 * c2 * c2 - s2 * s2 * s2 * s2,
        c2 * c2 * c2 * c * s + c * s2 * s2 * s2 * s,
        c2 * c2 * c2 * s2 - c2 * s2 * s2 * s2,
        c2 * c2 * c * s2 * s + c2 * c * s2 * s2 * s,
    ]
}

/// Least-squares fitter for a fixed set of sample angles, with the
/// pseudo-inverse of the design matrix computed once.
#[derive(Debug, Clone)]
pub struct StructuredFitter {
    alphas: Vec<f64>,
    design: DMatrix<f64>,
    pinv: DMatrix<f64>,
}

impl StructuredFitter {
    pub fn new(alphas: Vec<f64>) -> Result<Self> {
        if alphas.len() < 4 {
            return Err(Error::InvalidParameter("structured fit needs at least 4 samples".into()));
        }
        let design = DMatrix::from_fn(alphas.len(), 4, |r, c| angle_basis(alphas[r])[c]);
        let pinv = design
            .clone()
            .pseudo_inverse(1e-14)
            .map_err(|e| Error::RootRefinementFailed(format!("structured fit: {e}")))?;
        Ok(StructuredFitter { alphas, design, pinv })
    }

    /// `n` angles evenly spread over `(−π/2, π/2)`.
    pub fn uniform(n: usize) -> Result<Self> {
        let pi = std::f64::consts::PI;
        Self::new((0..n).map(|k| -pi / 2.0 + pi * (k as f64 + 0.5) / n as f64).collect())
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    /// Fits values sampled at [`StructuredFitter::alphas`]; returns the fit
    /// and its max abs residual.
    pub fn fit(&self, values: &[f64]) -> (PolynomialP8, f64) {
        let v = DVector::from_column_slice(values);
        let sol = &self.pinv * &v;
        let residual = (&self.design * &sol - v).amax();
        (
            PolynomialP8 {
                a: sol[0],
                b: sol[1],
                c: sol[2],
                d: sol[3],
            },
            residual,
        )
    }
}

/// `A w³ + B w² + (C + 2A) w + (D + B)`: the degree-8 form divided by
/// `(1 + z²) z³`, in the variable `w = 1/z − z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedCubic {
    pub c3: f64,
    pub c2: f64,
    pub c1: f64,
    pub c0: f64,
}

impl ReducedCubic {
    pub fn from_p8(p: &PolynomialP8) -> Self {
        ReducedCubic {
            c3: p.a,
            c2: p.b,
            c1: p.c + 2.0 * p.a,
            c0: p.d + p.b,
        }
    }

    pub fn eval(&self, w: f64) -> f64 {
        ((self.c3 * w + self.c2) * w + self.c1) * w + self.c0
    }

    pub fn derivative(&self, w: f64) -> f64 {
        (3.0 * self.c3 * w + 2.0 * self.c2) * w + self.c1
    }

    pub fn coefficients(&self) -> [f64; 4] {
        [self.c3, self.c2, self.c1, self.c0]
    }

    pub fn scale(&self) -> f64 {
        self.coefficients().iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Roots from the eigenvalues of the companion matrix, after dropping
    /// leading coefficients below `rel_tol` of the largest. Complex roots are
    /// returned as `(re, im)`.
    pub fn roots(&self, rel_tol: f64) -> Vec<(f64, f64)> {
        let scale = self.scale();
        if scale == 0.0 {
            return Vec::new();
        }
        let mut coeffs: Vec<f64> = self.coefficients().to_vec();
        while coeffs.len() > 1 && coeffs[0].abs() <= rel_tol * scale {
            coeffs.remove(0);
        }
        companion_roots(&coeffs)
    }

    /// Real roots, each polished by a few Newton steps.
    pub fn real_roots(&self, rel_tol: f64, imag_tol: f64) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .roots(rel_tol)
            .into_iter()
            .filter(|&(re, im)| im.abs() <= imag_tol * (1.0 + re.abs()))
            .map(|(re, _)| self.polish(re))
            .collect();
        out.sort_by(f64::total_cmp);
        out
    }

    fn polish(&self, mut w: f64) -> f64 {
        for _ in 0..4 {
            let d = self.derivative(w);
            if d == 0.0 {
                break;
            }
            let step = self.eval(w) / d;
            if !step.is_finite() || step.abs() > 1e-3 * (1.0 + w.abs()) {
                break;
            }
            w -= step;
        }
        w
    }
}

/// Eigenvalues of the companion matrix of a polynomial given in descending
/// powers (leading coefficient nonzero).
pub fn companion_roots(desc: &[f64]) -> Vec<(f64, f64)> {
    match desc.len() {
        0 | 1 => Vec::new(),
        2 => vec![(-desc[1] / desc[0], 0.0)],
        3 => {
            let m = nalgebra::Matrix2::new(-desc[1] / desc[0], -desc[2] / desc[0], 1.0, 0.0);
            m.complex_eigenvalues().iter().map(|z| (z.re, z.im)).collect()
        }
        4 => {
            let lead = desc[0];
            let m = Matrix3::new(
                -desc[1] / lead,
                -desc[2] / lead,
                -desc[3] / lead,
                1.0,
                0.0,
                0.0,
                0.0,
                1.0,
                0.0,
            );
            m.complex_eigenvalues().iter().map(|z| (z.re, z.im)).collect()
        }
        _ => unreachable!("only polynomials up to degree three are used"),
    }
}

/// Roots of `Σ c_m u^m` (ascending, complex coefficients) from the
/// eigenvalues of the companion matrix. Leading and trailing coefficients
/// below `rel_tol` times the largest are dropped first; trailing ones only
/// add roots at `u = 0`.
pub fn complex_polynomial_roots(coeffs: &[Complex64], rel_tol: f64) -> Vec<Complex64> {
    let scale = coeffs.iter().fold(0.0f64, |m, c| m.max(c.norm()));
    if scale == 0.0 {
        return Vec::new();
    }
    let small = |c: &Complex64| c.norm() <= rel_tol * scale;
    let lo = coeffs.iter().position(|c| !small(c)).unwrap_or(0);
    let hi = coeffs.iter().rposition(|c| !small(c)).unwrap_or(0);
    let c = &coeffs[lo..=hi];
    let n = c.len() - 1;
    if n == 0 {
        return Vec::new();
    }
    let lead = c[n];
    let m = DMatrix::from_fn(n, n, |r, col| {
        if r == 0 {
            -c[n - 1 - col] / lead
        } else if r == col + 1 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    m.schur().eigenvalues().map(|v| v.iter().copied().collect()).unwrap_or_default()
}

/// Resultant of two cubics: the determinant of their 6×6 Sylvester matrix.
pub fn sylvester_resultant(p: &ReducedCubic, q: &ReducedCubic) -> f64 {
    let (pc, qc) = (p.coefficients(), q.coefficients());
    let mut m = SMatrix::<f64, 6, 6>::zeros();
    for r in 0..3 {
        for (c, v) in pc.iter().enumerate() {
            m[(r, r + c)] = *v;
        }
        for (c, v) in qc.iter().enumerate() {
            m[(3 + r, r + c)] = *v;
        }
    }
    m.determinant()
}

/// `z` with `w = 1/z − z` on the branch `z = (−w + √(w² + 4))/2`, which
/// lies in `(0, ∞)`; the other branch is `−1/z`.
pub fn w_to_z(w: f64) -> f64 {
    let r = (w * w + 4.0).sqrt();
    if w >= 0.0 {
        2.0 / (w + r)
    } else {
        (r - w) / 2.0
    }
}

/// Bisection on a bracket with `f(lo)` and `f(hi)` of opposite sign (or
/// either zero). Stops when the bracket is narrower than `x_tol`.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, x_tol: f64) -> Result<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() || !flo.is_finite() || !fhi.is_finite() {
        return Err(Error::RootRefinementFailed(format!(
            "no sign change on [{lo}, {hi}]: {flo:e}, {fhi:e}"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= x_tol || mid == lo || mid == hi {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Err(Error::RootRefinementFailed("bisection did not converge".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn horner_desc(desc: &[f64], z: f64) -> f64 {
        desc.iter().fold(0.0, |acc, c| acc * z + c)
    }

    #[test]
    fn structural_identities() {
        let p = PolynomialP8 {
            a: 0.3,
            b: -1.2,
            c: 0.7,
            d: 2.1,
        };
        assert_eq!(p.eval(1.0), -p.eval(-1.0));
        assert!(p.eval_complex(Complex64::i()).norm() < 1e-14);
        assert!(p.eval_complex(-Complex64::i()).norm() < 1e-14);
        let dense = p.dense();
        for z in [-2.0, -0.3, 0.5, 1.7] {
            let direct = dense.iter().rev().fold(0.0, |acc, c| acc * z + c);
            assert!((direct - p.eval(z)).abs() < 1e-12);
        }
    }

    #[test]
    fn cubic_roots_map_back_through_w() {
        let p = PolynomialP8 {
            a: 0.5,
            b: 0.1,
            c: -2.0,
            d: 0.3,
        };
        let g = ReducedCubic::from_p8(&p);
        let roots = g.real_roots(1e-14, 1e-9);
        assert!(!roots.is_empty());
        for w in roots {
            let z = w_to_z(w);
            assert!((1.0 / z - z - w).abs() < 1e-10);
            assert!(p.eval(z).abs() < 1e-9, "{}", p.eval(z));
            assert!(p.eval(-1.0 / z).abs() < 1e-8 * (1.0 + z.powi(-8)));
        }
    }

    #[test]
    fn degenerate_leading_coefficient() {
        let g = ReducedCubic {
            c3: 0.0,
            c2: 1.0,
            c1: -3.0,
            c0: 2.0,
        };
        let r = g.real_roots(1e-14, 1e-12);
        assert_eq!(r.len(), 2);
        assert!((r[0] - 1.0).abs() < 1e-12 && (r[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn fit_recovers_structured_coefficients() {
        let p = PolynomialP8 {
            a: -0.014,
            b: 0.043,
            c: 0.0128,
            d: -0.0171,
        };
        let samples: Vec<_> = (0..17)
            .map(|k| {
                let alpha = -1.4 + 0.175 * k as f64;
                (alpha, p.eval_angle(alpha))
            })
            .collect();
        let (fit, res) = PolynomialP8::fit(&samples).unwrap();
        assert!(res < 1e-15);
        assert!((fit.a - p.a).abs() < 1e-14 && (fit.d - p.d).abs() < 1e-14);
    }

    #[test]
    fn resultant_detects_common_root() {
        // (w − 1)(w² + 1) and (w − 1)(w + 3)(w − 2)
        let p = ReducedCubic {
            c3: 1.0,
            c2: -1.0,
            c1: 1.0,
            c0: -1.0,
        };
        let q = ReducedCubic {
            c3: 1.0,
            c2: 0.0,
            c1: -7.0,
            c0: 6.0,
        };
        assert!(sylvester_resultant(&p, &q).abs() < 1e-12);
        let r = ReducedCubic { c0: -2.0, ..q };
        assert!(sylvester_resultant(&p, &r).abs() > 1e-3);
    }

    #[test]
    fn resultant_is_product_over_roots() {
        // Res(p, q) = lead(p)^3 lead(q)^3 Π (r_i − s_j), with p = (w−1)(w−2)(w−3), q = w³ − 5
        let p = ReducedCubic {
            c3: 1.0,
            c2: -6.0,
            c1: 11.0,
            c0: -6.0,
        };
        let q = ReducedCubic {
            c3: 1.0,
            c2: 0.0,
            c1: 0.0,
            c0: -5.0,
        };
        // Π_j q(r_j) for monic p
        let expected = [1.0, 2.0, 3.0].iter().map(|r: &f64| r.powi(3) - 5.0).product::<f64>();
        assert!((sylvester_resultant(&p, &q) - expected).abs() < 1e-9);
    }

    #[test]
    fn bisection() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-12).is_err());
    }

    proptest! {
        #[test]
        fn root_pairs_are_symmetric(a in -1.0..1.0f64, b in -1.0..1.0f64, c in -1.0..1.0f64, d in -1.0..1.0f64) {
            let p = PolynomialP8 { a, b, c, d };
            let g = ReducedCubic::from_p8(&p);
            for w in g.real_roots(1e-12, 1e-9) {
                let z = w_to_z(w);
                let partner = -1.0 / z;
                let scale = p.dense().iter().fold(0.0f64, |m, v| m.max(v.abs())) * (1.0 + z.abs().powi(8) + partner.abs().powi(8));
                prop_assert!(horner_desc(&p.dense().iter().rev().copied().collect::<Vec<_>>(), z).abs() <= 1e-8 * scale);
                prop_assert!(p.eval(partner).abs() <= 1e-8 * scale);
            }
        }
    }

    #[test]
    fn complex_roots_of_a_product() {
        let r = [Complex64::new(0.6, 0.8), Complex64::new(-1.0, 0.0), Complex64::new(0.0, 2.0)];
        // (u − r0)(u − r1)(u − r2) times u
        let mut c = vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)];
        for root in r {
            let mut next = vec![Complex64::new(0.0, 0.0); c.len() + 1];
            for (k, v) in c.iter().enumerate() {
                next[k + 1] += v;
                next[k] -= v * root;
            }
            c = next;
        }
        let found = complex_polynomial_roots(&c, 1e-14);
        assert_eq!(found.len(), 3);
        for root in r {
            assert!(found.iter().any(|f| (f - root).norm() < 1e-12));
        }
    }
}
