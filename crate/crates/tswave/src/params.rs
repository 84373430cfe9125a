//! Flow parameters and the scales derived from them.

use crate::error::{Result, TsError};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// How the streamwise wavenumber depends on ε.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Regime {
    /// α = K ε^{1/8}.
    Main,
    /// α = C ε^b with b in (1/12, 1/8). Not validated.
    Experimental { prefactor: f64, exponent: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowParams {
    pub mach: f64,
    pub eps: f64,
    pub k: f64,
    pub theta: f64,
    pub lambda: f64,
    pub regime: Regime,
}

/// Upper Mach bound for the resolvent construction.
pub fn resolvent_mach_limit() -> f64 {
    1.0 / 3f64.sqrt()
}

impl FlowParams {
    pub fn new(mach: f64, eps: f64, k: f64) -> Result<Self> {
        let p = FlowParams { mach, eps, k, theta: 0.5, lambda: 0.0, regime: Regime::Main };
        p.validate()?;
        Ok(p)
    }

    pub fn with_theta(mut self, theta: f64) -> Result<Self> {
        self.theta = theta;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(TsError::InvalidParameter(m));
        if !(self.mach > 0.0 && self.mach < 1.0) {
            return bad(format!("Mach number {} outside (0, 1)", self.mach));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return bad(format!("eps = {} outside (0, 1)", self.eps));
        }
        if !(self.k > 0.0 && self.k.is_finite()) {
            return bad(format!("K = {} must be positive", self.k));
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return bad(format!("theta = {} outside (0, 1)", self.theta));
        }
        if !(self.lambda >= 0.0) {
            return bad(format!("lambda = {} must be non-negative", self.lambda));
        }
        if let Regime::Experimental { prefactor, exponent } = self.regime {
            if !(prefactor > 0.0 && exponent > 1.0 / 12.0 && exponent < 0.125) {
                return bad(format!("experimental regime needs C > 0 and exponent in (1/12, 1/8), got {prefactor}, {exponent}"));
            }
        }
        Ok(())
    }

    /// The resolvent and exact-mode paths need M < 1/√3.
    pub fn require_resolvent_mach(&self) -> Result<()> {
        if self.mach >= resolvent_mach_limit() {
            return Err(TsError::InvalidParameter(format!(
                "Mach number {} not below 1/sqrt(3) = {:.6}, required by the resolvent construction",
                self.mach,
                resolvent_mach_limit()
            )));
        }
        Ok(())
    }

    pub fn alpha(&self) -> f64 {
        match self.regime {
            Regime::Main => self.k * self.eps.powf(0.125),
            Regime::Experimental { prefactor, exponent } => prefactor * self.eps.powf(exponent),
        }
    }

    /// n = α/√ε.
    pub fn n(&self) -> f64 {
        self.alpha() / self.eps.sqrt()
    }

    /// Decay rate used for the weighted bounds: ½(1-M²)^{1/2}α.
    pub fn beta1(&self) -> f64 {
        0.5 * (1.0 - self.mach * self.mach).sqrt() * self.alpha()
    }

    /// A at infinity: 1 - M²(1-c)².
    pub fn a_inf(&self, c: Complex64) -> Complex64 {
        let w = 1.0 - c;
        1.0 - self.mach * self.mach * w * w
    }

    /// β = α A_∞^{1/2}, principal branch.
    pub fn beta(&self, c: Complex64) -> Complex64 {
        self.alpha() * self.a_inf(c).sqrt()
    }

    /// Sublayer scale δ = e^{-iπ/6} n^{-1/3}.
    pub fn delta(&self) -> Complex64 {
        Complex64::from_polar(self.n().powf(-1.0 / 3.0), -std::f64::consts::PI / 6.0)
    }

    /// Truncation length for the half line: max(40, 25/β₁).
    pub fn default_ymax(&self) -> f64 {
        40f64.max(25.0 / self.beta1())
    }
}
