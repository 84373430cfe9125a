//! Inviscid slow mode: an approximate solution of the compressible
//! Rayleigh (Lee-Lin) equation
//!
//!   ∂_Y{A⁻¹[(U-c)Φ' - ΦU']} - α²(U-c)Φ = 0,   A = 1 - M²(U-c)²,
//!
//! built from the α = 0 solutions φ₊ = U-c, φ₋ and a decaying corrector.
//!
//! Both integrals in the corrector have closed forms:
//!   ∫_Y^∞ φ₊A⁻²U' = ((1-c)² - (U-c)²)/(2A_∞A)
//!   ∫_0^Y φ₋A⁻²U' = φ₋(U-c)/(2A) + φ₋(0)c/(2A(0)) - Y/2
//! so the only quadrature left is J(Y) = ∫_1^Y (U-c)⁻², and every
//! derivative up to third order is carried exactly by Taylor jets.

use crate::error::{Result, TsError};
use crate::jet::Jet;
use crate::mode::ModeBundle;
use crate::params::FlowParams;
use crate::profile::ShearProfile;
use crate::quad::{integrate, QuadTol};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

type C = Complex64;

fn ci(re: f64, im: f64) -> C {
    C::new(re, im)
}

/// Everything needed to evaluate the slow mode at a given c.
#[derive(Clone, Debug)]
pub struct SlowContext<'a> {
    pub profile: &'a ShearProfile,
    pub mach: f64,
    pub alpha: f64,
    pub c: C,
    pub beta: C,
    pub a_inf: C,
    pub tol: QuadTol,
    phi_minus_wall: C,
}

/// All slow-mode quantities at one point, as jets in Y.
#[derive(Clone, Copy, Debug)]
pub struct SlowPoint {
    pub y: f64,
    pub phi_plus: C,
    pub phi_minus: C,
    pub phi1: Jet,
    pub phi: Jet,
    pub rho: Jet,
    pub u: Jet,
    pub v: Jet,
    /// Explicit residual formula.
    pub ray: Jet,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WallValues {
    pub phi: C,
    pub dphi: C,
    pub rho: C,
    pub phi_minus: C,
    pub phi1: C,
}

#[derive(Clone, Debug)]
pub struct SlowMode {
    pub c: C,
    pub alpha: f64,
    pub mach: f64,
    pub beta: C,
    pub beta1: f64,
    pub y: Vec<f64>,
    pub points: Vec<SlowPoint>,
    pub wall: WallValues,
}

impl<'a> SlowContext<'a> {
    pub fn new(profile: &'a ShearProfile, params: &FlowParams, c: C) -> Result<Self> {
        Self::with_tol(profile, params, c, QuadTol::default())
    }

    pub fn with_tol(profile: &'a ShearProfile, params: &FlowParams, c: C, tol: QuadTol) -> Result<Self> {
        if !(c.im > 0.0) {
            return Err(TsError::InvalidParameter(format!("slow mode needs Im c > 0, got {c}")));
        }
        let mut ctx = SlowContext {
            profile,
            mach: params.mach,
            alpha: params.alpha(),
            c,
            beta: params.beta(c),
            a_inf: params.a_inf(c),
            tol,
            phi_minus_wall: ci(0.0, 0.0),
        };
        let a0 = 1.0 - ctx.mach * ctx.mach * c * c;
        if a0.norm() < 1e-8 || ctx.a_inf.norm() < 1e-8 {
            return Err(TsError::ADegenerate { y: 0.0, modulus: a0.norm().min(ctx.a_inf.norm()) });
        }
        // φ₋(0) = (0 - c) J(0) = c ∫_0^1 (U-c)⁻²
        ctx.phi_minus_wall = c * ctx.inv_sq_integral(0.0, 1.0)?;
        Ok(ctx)
    }

    fn inv_sq_integral(&self, a: f64, b: f64) -> Result<C> {
        let c = self.c;
        let p = self.profile;
        let f = move |x: f64| {
            let w = p.derivs(x)[0] - c;
            1.0 / (w * w)
        };
        let mut cuts = vec![a];
        cuts.extend(self.critical_cuts().into_iter().filter(|&x| x > a && x < b));
        cuts.push(b);
        let mut sum = ci(0.0, 0.0);
        for w in cuts.windows(2) {
            sum += integrate(f, w[0], w[1], self.tol)?;
        }
        Ok(sum)
    }

    /// Breakpoints clustered geometrically around the critical point
    /// U(Y_c) = Re c, where (U-c)⁻² peaks with width about Im c/U'(Y_c).
    fn critical_cuts(&self) -> Vec<f64> {
        let p = self.profile;
        let target = self.c.re;
        if !(target > 0.0 && target < 1.0) {
            return Vec::new();
        }
        // U increases from 0 to 1, so bisection on [0, hi] finds Y_c.
        let mut hi = 1.0;
        while p.derivs(hi)[0] < target && hi < 1e3 {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if p.derivs(mid)[0] < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let yc = 0.5 * (lo + hi);
        let width = self.c.im / p.derivs(yc)[1].abs().max(1e-300);
        let mut cuts = vec![yc];
        let mut s = width;
        while s < 1.0 {
            cuts.push(yc - s);
            cuts.push(yc + s);
            s *= 8.0;
        }
        cuts.sort_by(f64::total_cmp);
        cuts
    }

    /// J(Y) = ∫_1^Y (U-c)⁻² dX.
    pub fn j_integral(&self, y: f64) -> Result<C> {
        if y < 0.0 {
            return Err(TsError::NegativeY(y));
        }
        self.inv_sq_integral(1.0, y)
    }

    /// (φ₊(Y), φ₋(Y)).
    pub fn phi_basis(&self, y: f64) -> Result<(C, C)> {
        let j = self.j_integral(y)?;
        let w = self.profile.derivs(y)[0] - self.c;
        Ok((w, w * (j - self.mach * self.mach * y)))
    }

    pub fn phi_minus_at_wall(&self) -> C {
        self.phi_minus_wall
    }

    /// Corrector value at Y.
    pub fn corrector(&self, y: f64) -> Result<C> {
        let j = self.j_integral(y)?;
        Ok(self.point(y, j)?.phi1.value())
    }

    /// Closed form of the corrector at the wall.
    pub fn corrector_at_wall(&self) -> C {
        let m2 = self.mach * self.mach;
        let c = self.c;
        -self.phi_minus_wall * (1.0 - 2.0 * c) / ((1.0 - m2 * (1.0 - c) * (1.0 - c)) * (1.0 - m2 * c * c))
    }

    /// All jets at Y given J(Y).
    pub fn point(&self, y: f64, j: C) -> Result<SlowPoint> {
        let m2 = self.mach * self.mach;
        let c = self.c;
        let d = self.profile.derivs(y);
        let u = Jet::from_real_derivs(d);
        let yj = Jet::variable(y);
        let w = u - c;
        let a = Jet::real_const(1.0) - w * w * m2;
        if a.value().norm() < 1e-8 {
            return Err(TsError::ADegenerate { y, modulus: a.value().norm() });
        }
        let ainv = a.recip();
        let winv = w.recip();
        let jj = (winv * winv).integral(j);
        let phi_p = w;
        let phi_m = w * (jj - yj * m2);
        let winf = 1.0 - c;
        // (1-c)² - (U-c)² from the deficit 1-U, free of cancellation far out.
        let def = Jet::from_real_derivs([self.profile.deficit(y), -d[1], -d[2], -d[3]]);
        let wsq_gap = def * (Jet::constant(2.0 * winf) - def);
        let i2 = wsq_gap * ainv * (0.5 / self.a_inf);
        let a0 = 1.0 - m2 * c * c;
        let i1 = phi_m * w * ainv * 0.5 + Jet::constant(self.phi_minus_wall * c / (2.0 * a0)) - yj * 0.5;
        let e = (yj * (-self.beta)).exp();
        let phi1 = (phi_p * i1 + phi_m * i2) * e * (-2.0);
        let phi = e * phi_p + phi1 * self.beta;
        let uprime = u.deriv();
        let dphi = phi.deriv();
        let rho = (w * dphi - phi * uprime) * ainv * (-m2);
        let uu = dphi - w * rho;
        let v = phi * ci(0.0, -self.alpha);
        let b2 = self.beta * self.beta;
        let al2 = self.alpha * self.alpha;
        let ray = ainv * ainv * uprime * phi1 * (-2.0 * b2)
            + e * i2 * (4.0 * b2)
            + ainv * w * wsq_gap * phi * (-al2 * m2);
        Ok(SlowPoint {
            y,
            phi_plus: e.value() * phi_p.value(),
            phi_minus: e.value() * phi_m.value(),
            phi1,
            phi,
            rho,
            u: uu,
            v,
            ray,
        })
    }

    /// Φ(0), Φ'(0), ρˢ(0) without building a grid.
    pub fn wall_values(&self) -> Result<WallValues> {
        let j0 = -self.inv_sq_integral(0.0, 1.0)?;
        let p = self.point(0.0, j0)?;
        Ok(WallValues {
            phi: p.phi.value(),
            dphi: p.phi.d(1),
            rho: p.rho.value(),
            phi_minus: self.phi_minus_wall,
            phi1: p.phi1.value(),
        })
    }

    /// J at every node of an increasing grid, accumulated panel by panel
    /// outward from Y = 1.
    pub fn j_on_nodes(&self, y: &[f64]) -> Result<Vec<C>> {
        let n = y.len();
        let mut out = vec![ci(0.0, 0.0); n];
        if n == 0 {
            return Ok(out);
        }
        let k0 = y.iter().enumerate().min_by(|a, b| (a.1 - 1.0).abs().total_cmp(&(b.1 - 1.0).abs())).unwrap().0;
        out[k0] = self.j_integral(y[k0])?;
        for k in (k0 + 1)..n {
            out[k] = out[k - 1] + self.inv_sq_integral(y[k - 1], y[k])?;
        }
        for k in (0..k0).rev() {
            out[k] = out[k + 1] - self.inv_sq_integral(y[k], y[k + 1])?;
        }
        Ok(out)
    }

    pub fn build(&self, y: &[f64]) -> Result<SlowMode> {
        let mut js = self.j_on_nodes(y)?;
        // The wall node uses the same J as `wall_values`, so that the fast
        // mode amplitude cancels v exactly there.
        if y.first() == Some(&0.0) {
            js[0] = -self.inv_sq_integral(0.0, 1.0)?;
        }
        let points = y.iter().zip(&js).map(|(&yy, &j)| self.point(yy, j)).collect::<Result<Vec<_>>>()?;
        Ok(SlowMode {
            c: self.c,
            alpha: self.alpha,
            mach: self.mach,
            beta: self.beta,
            beta1: 0.5 * (1.0 - self.mach * self.mach).sqrt() * self.alpha,
            y: y.to_vec(),
            points,
            wall: self.wall_values()?,
        })
    }
}

/// Lee-Lin operator applied directly to a jet of Φ (needs Φ to order 2).
pub fn lee_lin_direct(profile_derivs: [f64; 4], mach: f64, alpha: f64, c: C, phi: Jet) -> C {
    let u = Jet::from_real_derivs(profile_derivs);
    let w = u - c;
    let a = Jet::real_const(1.0) - w * w * (mach * mach);
    let inner = (w * phi.deriv() - phi * u.deriv()) * a.recip();
    inner.d(1) - alpha * alpha * w.value() * phi.value()
}

impl SlowMode {
    pub fn fluid(&self) -> ModeBundle {
        ModeBundle {
            rho: self.points.iter().map(|p| p.rho.value()).collect(),
            u: self.points.iter().map(|p| p.u.value()).collect(),
            v: self.points.iter().map(|p| p.v.value()).collect(),
        }
    }

    /// [Φ, Φ', Φ'', Φ'''] per node.
    pub fn psi_derivs(&self) -> Vec<[C; 4]> {
        self.points.iter().map(|p| p.phi.derivs()).collect()
    }

    pub fn rayleigh_residual(&self) -> Vec<C> {
        self.points.iter().map(|p| p.ray.value()).collect()
    }

    pub fn rayleigh_residual_derivative(&self) -> Vec<C> {
        self.points.iter().map(|p| p.ray.d(1)).collect()
    }
}

pub fn build_slow_mode(profile: &ShearProfile, params: &FlowParams, c: C, y: &[f64]) -> Result<SlowMode> {
    SlowContext::new(profile, params, c)?.build(y)
}
