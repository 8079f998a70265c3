use serde::{Deserialize, Serialize};

/// Numerical thresholds shared by every module.
///
/// All values are absolute unless noted; states are normalized so the
/// natural scale of every quantity is 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Normalization of states and of `a + b = 1`.
    pub norm: f64,
    /// `||U^dag U - 1||` for operators accepted as unitary.
    pub unit: f64,
    /// Smallest outcome probability for which an outcome state is defined.
    pub prob: f64,
    /// `I4` at or below this value is treated as zero three-tangle.
    pub tangle: f64,
    /// Zero band for `Im I6`.
    pub i6: f64,
    /// Relative band within which `mu` and `nu` are considered equal.
    pub degenerate: f64,
    /// Gate condition residuals.
    pub gate: f64,
    /// Resultant zero, relative to the largest grid magnitude.
    pub res: f64,
    /// Fingerprint comparison after a POVM.
    pub orbit: f64,
    /// Leaf fidelity deficit in the GHZ protocols.
    pub proto: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            norm: 1e-10,
            unit: 1e-10,
            prob: 1e-12,
            tangle: 1e-6,
            i6: 1e-9,
            degenerate: 1e-7,
            gate: 1e-9,
            res: 1e-10,
            orbit: 1e-8,
            proto: 1e-10,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> crate::Result<()> {
        let all = [
            ("norm", self.norm),
            ("unit", self.unit),
            ("prob", self.prob),
            ("tangle", self.tangle),
            ("i6", self.i6),
            ("degenerate", self.degenerate),
            ("gate", self.gate),
            ("res", self.res),
            ("orbit", self.orbit),
            ("proto", self.proto),
        ];
        for (name, v) in all {
            if !(v > 0.0 && v.is_finite()) {
                return Err(crate::Error::InvalidParameter(format!(
                    "tolerance {name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }
}
