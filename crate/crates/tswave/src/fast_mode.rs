//! Viscous sublayer (fast) mode built from the Airy primitives.
//!
//! With z = Y/δ, δ = e^{-iπ/6}n^{-1/3}, z₀ = -c/δ:
//!   u^f(Y) = -Ai(1, z+z₀)/Ai(2, z₀),   v^f(Y) = iαδ Ai(2, z+z₀)/Ai(2, z₀),
//! and every Y-derivative follows from ∂Ai(k,·) = Ai(k-1,·).

use crate::airy::{airy_scaled, Scaled};
use crate::error::{Result, TsError};
use crate::fit::linear_fit;
use crate::mode::ModeBundle;
use crate::params::FlowParams;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

type C = Complex64;

/// Beyond this |z + z₀| the sublayer fields are below e^{-10⁴}.
const NEGLIGIBLE_RADIUS: f64 = 2000.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SublayerScales {
    pub n: f64,
    pub delta: C,
    pub z0: C,
    /// δ⁻¹Φ(0;c), the amplitude of the fast mode in the approximate mode.
    pub eta: C,
}

impl SublayerScales {
    pub fn new(params: &FlowParams, c: C, phi_wall: C) -> Self {
        let delta = params.delta();
        SublayerScales { n: params.n(), delta, z0: -c / delta, eta: phi_wall / delta }
    }

    /// |i n δ³ - 1|.
    pub fn closure_error(&self) -> f64 {
        (C::new(0.0, self.n) * self.delta.powi(3) - 1.0).norm()
    }
}

/// Values and first two Y-derivatives of u^f and v^f at one node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FastPoint {
    pub u: [C; 3],
    pub v: [C; 3],
}

#[derive(Clone, Debug)]
pub struct FastMode {
    pub scales: SublayerScales,
    pub alpha: f64,
    pub y: Vec<f64>,
    pub points: Vec<FastPoint>,
}

fn ratio(a: Scaled, b: Scaled) -> C {
    a.div(b).to_c64().unwrap_or(C::new(f64::INFINITY, 0.0))
}

pub fn build_fast_mode(params: &FlowParams, scales: SublayerScales, y: &[f64]) -> Result<FastMode> {
    let alpha = params.alpha();
    let d = scales.delta;
    let at_wall = airy_scaled(scales.z0)?;
    let norm = at_wall.ai2;
    if norm.m.norm() == 0.0 || norm.log_abs() < -700.0 {
        return Err(TsError::AiryUnderflow(norm.log_abs()));
    }
    let ia = C::new(0.0, alpha);
    let zero = C::new(0.0, 0.0);
    let mut points = Vec::with_capacity(y.len());
    for &yy in y {
        let z = yy / d + scales.z0;
        if z.norm() > NEGLIGIBLE_RADIUS {
            points.push(FastPoint { u: [zero; 3], v: [zero; 3] });
            continue;
        }
        let b = airy_scaled(z)?;
        let a0 = ratio(b.ai, norm);
        let a1 = ratio(b.ai1, norm);
        let a2 = ratio(b.ai2, norm);
        let ap = ratio(b.ai_prime, norm);
        points.push(FastPoint {
            u: [-a1, -a0 / d, -ap / (d * d)],
            v: [ia * d * a2, ia * a1, ia * a0 / d],
        });
    }
    Ok(FastMode { scales, alpha, y: y.to_vec(), points })
}

impl FastMode {
    pub fn fluid(&self) -> ModeBundle {
        ModeBundle {
            rho: vec![C::new(0.0, 0.0); self.y.len()],
            u: self.points.iter().map(|p| p.u[0]).collect(),
            v: self.points.iter().map(|p| p.v[0]).collect(),
        }
    }

    /// Residual of U₀'' - (z+z₀)U₀ - V₀ in sublayer variables at each node.
    pub fn sublayer_residual(&self) -> Vec<f64> {
        let d = self.scales.delta;
        let ia = C::new(0.0, self.alpha);
        self.points
            .iter()
            .zip(&self.y)
            .map(|(p, &yy)| {
                let z = yy / d;
                let u0 = p.u[0];
                let u0zz = p.u[2] * d * d;
                let v0 = p.v[0] / (ia * d);
                (u0zz - (z + self.scales.z0) * u0 - v0).norm()
            })
            .collect()
    }

    /// Fitted exponential decay rate τ₁ of |∂^k u^f| in the variable
    /// n^{1/3}Y, over the range where the envelope lies between 1e-2 and
    /// 1e-12 of its maximum.
    pub fn decay_rate(&self, k: usize) -> f64 {
        let s = self.scales.n.powf(1.0 / 3.0);
        let mags: Vec<f64> = self.points.iter().map(|p| p.u[k].norm()).collect();
        let max = mags.iter().cloned().fold(0.0, f64::max);
        let pts: Vec<(f64, f64)> = self
            .y
            .iter()
            .zip(&mags)
            .filter(|(_, &m)| m > 0.0 && m < 1e-2 * max && m > 1e-12 * max)
            .map(|(&yy, &m)| (yy * s, m.ln()))
            .collect();
        -linear_fit(&pts).slope
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scale_closure() {
        let p = FlowParams::new(0.3, 1e-8, 8.0).unwrap();
        let s = SublayerScales::new(&p, C::new(0.8, 0.01), C::new(0.1, 0.0));
        assert!(s.closure_error() < 1e-14);
    }

    #[test]
    fn wall_normalisation() {
        let p = FlowParams::new(0.3, 1e-8, 8.0).unwrap();
        let s = SublayerScales::new(&p, C::new(0.82, 0.02), C::new(0.1, 0.0));
        let f = build_fast_mode(&p, s, &[0.0]).unwrap();
        let want = C::new(0.0, p.alpha()) * s.delta;
        assert!((f.points[0].v[0] - want).norm() < 1e-12 * want.norm());
    }
}
