//! Approximate growing mode Ξ_app = Ξˢ + ηΞᶠ, its dispersion function, and
//! the regular/smallness split of its residual.

use crate::airy::airy_ratio;
use crate::error::{Result, TsError};
use crate::fast_mode::{build_fast_mode, FastMode, SublayerScales};
use crate::fit::linear_fit;
use crate::grid::HalfLineGrid;
use crate::mode::ModeBundle;
use crate::params::FlowParams;
use crate::profile::ShearProfile;
use crate::quad::QuadTol;
use crate::slow_mode::{SlowContext, SlowMode};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

type C = Complex64;

fn i() -> C {
    C::new(0.0, 1.0)
}

/// Exact derivatives of (ρ, u, v) at one node: [ρ, ρ'], [u, u', u''], [v, v', v''].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldDerivs {
    pub rho: [C; 2],
    pub u: [C; 3],
    pub v: [C; 3],
}

#[derive(Clone, Debug)]
pub struct ApproxMode {
    pub c: C,
    pub eta: C,
    pub slow: SlowMode,
    pub fast: FastMode,
    pub bundle: ModeBundle,
    pub derivs: Vec<FieldDerivs>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FAppParts {
    pub phi0: C,
    pub dphi0: C,
    pub rho0: C,
    pub airy_ratio: C,
    pub value: C,
}

/// F_app(c) = Φ'(0) + cρˢ(0) - δ⁻¹Φ(0) Ai(1,z₀)/Ai(2,z₀), evaluated from
/// wall data only.
pub fn f_app_parts(profile: &ShearProfile, params: &FlowParams, c: C) -> Result<FAppParts> {
    f_app_parts_with(profile, params, c, QuadTol::default())
}

pub fn f_app_parts_with(profile: &ShearProfile, params: &FlowParams, c: C, tol: QuadTol) -> Result<FAppParts> {
    let ctx = SlowContext::with_tol(profile, params, c, tol)?;
    let w = ctx.wall_values()?;
    let s = SublayerScales::new(params, c, w.phi);
    let r = airy_ratio(s.z0)?;
    Ok(FAppParts { phi0: w.phi, dphi0: w.dphi, rho0: w.rho, airy_ratio: r, value: w.dphi + c * w.rho - s.eta * r })
}

pub fn f_app(profile: &ShearProfile, params: &FlowParams, c: C) -> Result<C> {
    Ok(f_app_parts(profile, params, c)?.value)
}

pub fn assemble(slow: SlowMode, fast: FastMode) -> Result<ApproxMode> {
    if slow.y != fast.y {
        return Err(TsError::GridMismatch("slow and fast modes sampled on different grids".into()));
    }
    let eta = fast.scales.eta;
    let bundle = slow.fluid().axpy(eta, &fast.fluid());
    let derivs = slow
        .points
        .iter()
        .zip(&fast.points)
        .map(|(s, f)| FieldDerivs {
            rho: [s.rho.d(0), s.rho.d(1)],
            u: [s.u.d(0) + eta * f.u[0], s.u.d(1) + eta * f.u[1], s.u.d(2) + eta * f.u[2]],
            v: [s.v.d(0) + eta * f.v[0], s.v.d(1) + eta * f.v[1], s.v.d(2) + eta * f.v[2]],
        })
        .collect();
    Ok(ApproxMode { c: slow.c, eta, slow, fast, bundle, derivs })
}

/// Build slow and fast parts on `y` and combine them.
pub fn build_approx(profile: &ShearProfile, params: &FlowParams, c: C, y: &[f64]) -> Result<ApproxMode> {
    build_approx_with(profile, params, c, y, QuadTol::default())
}

pub fn build_approx_with(profile: &ShearProfile, params: &FlowParams, c: C, y: &[f64], tol: QuadTol) -> Result<ApproxMode> {
    let slow = SlowContext::with_tol(profile, params, c, tol)?.build(y)?;
    let scales = SublayerScales::new(params, c, slow.wall.phi);
    let fast = build_fast_mode(params, scales, y)?;
    assemble(slow, fast)
}

/// The linearised operator applied pointwise to exact derivatives.
pub fn apply_l_point(ud: [f64; 4], params: &FlowParams, c: C, f: &FieldDerivs) -> [C; 3] {
    let a = params.alpha();
    let ia = i() * a;
    let se = params.eps.sqrt();
    let lam = params.lambda;
    let m2inv = 1.0 / (params.mach * params.mach);
    let w = ud[0] - c;
    let div = ia * f.u[0] + f.v[1];
    let ddiv = ia * f.u[1] + f.v[2];
    let r1 = ia * w * f.rho[0] + div;
    let r2 = se * (f.u[2] - a * a * f.u[0]) + lam * ia * se * div - ia * w * f.u[0] - (ia * m2inv + se * ud[2]) * f.rho[0]
        - f.v[0] * ud[1];
    let r3 = se * (f.v[2] - a * a * f.v[0]) + lam * se * ddiv - ia * w * f.v[0] - m2inv * f.rho[1];
    [r1, r2, r3]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormKind {
    L2,
    H1,
    L2w,
    H1w,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedNorm {
    pub kind: NormKind,
    pub value: f64,
    /// Estimated fraction contributed beyond the last node.
    pub tail_fraction: f64,
}

pub const TAIL_LIMIT: f64 = 1e-3;

/// ∫|f|²e^{log_w} over the grid plus an exponential-fit tail. The weight
/// is applied in log form so that huge weights times tiny values stay finite.
fn weighted_sq(grid: &HalfLineGrid, f: &[C], log_w: &[f64]) -> (f64, f64) {
    let g: Vec<f64> = f
        .iter()
        .zip(log_w)
        .map(|(v, lw)| {
            let m = v.norm();
            if m == 0.0 {
                0.0
            } else {
                (2.0 * m.ln() + lw).exp()
            }
        })
        .collect();
    let body = grid.integrate_real(&g).max(0.0);
    if body == 0.0 {
        return (0.0, 0.0);
    }
    let n = g.len();
    let start = n - (n / 10).max(8);
    let pts: Vec<(f64, f64)> = (start..n).filter(|&k| g[k] > 0.0).map(|k| (grid.y[k], g[k].ln())).collect();
    let last = g[n - 1];
    let tail = if last <= 1e-300 {
        0.0
    } else {
        let slope = linear_fit(&pts).slope;
        if slope < 0.0 {
            last / -slope
        } else {
            // No visible decay (noise floor): bound by a flat continuation
            // over one more grid length.
            last * grid.ymax()
        }
    };
    (body + tail, tail / body)
}

/// Norm of `f` on the grid. `df` supplies an exact derivative for the H
/// kinds; otherwise the grid operator is used. The weighted kinds use
/// |U''|⁻¹ as the weight on |f|².
pub fn norm(grid: &HalfLineGrid, profile: &ShearProfile, f: &[C], df: Option<&[C]>, kind: NormKind) -> Result<WeightedNorm> {
    let ones = vec![0.0; f.len()];
    let inv_u2: Vec<f64> = grid.y.iter().map(|&y| -profile.log_abs_curvature(y)).collect();
    let deriv = || -> Vec<C> { df.map(|d| d.to_vec()).unwrap_or_else(|| grid.d1.apply(f)) };
    let (value, tail) = match kind {
        NormKind::L2 => {
            let (s, t) = weighted_sq(grid, f, &ones);
            (s.sqrt(), t)
        }
        NormKind::H1 => {
            let d = deriv();
            let (s0, t0) = weighted_sq(grid, f, &ones);
            let (s1, t1) = weighted_sq(grid, &d, &ones);
            ((s0 + s1).sqrt(), t0.max(t1))
        }
        NormKind::L2w => {
            let (s, t) = weighted_sq(grid, f, &inv_u2);
            (s.sqrt(), t)
        }
        NormKind::H1w => {
            let d = deriv();
            let (s0, t0) = weighted_sq(grid, f, &inv_u2);
            let (s1, t1) = weighted_sq(grid, &d, &inv_u2);
            (s0.sqrt() + s1.sqrt(), t0.max(t1))
        }
    };
    if tail > TAIL_LIMIT {
        return Err(TsError::NormTail(tail));
    }
    Ok(WeightedNorm { kind, value, tail_fraction: tail })
}

/// How many times `error_terms_auto` may double Y_max.
const MAX_DOUBLINGS: usize = 4;

/// Error terms on a `for_params` grid, doubling Y_max (and the node count)
/// while the norm tail beyond the grid exceeds `TAIL_LIMIT`.
pub fn error_terms_auto(
    profile: &ShearProfile,
    params: &FlowParams,
    c: C,
    ymax_floor: f64,
    n: usize,
    tol: QuadTol,
) -> Result<(HalfLineGrid, ErrorTerms)> {
    let mut ymax = ymax_floor;
    let mut n = n;
    let mut doublings = 0;
    loop {
        let grid = HalfLineGrid::for_params(params, ymax, n)?;
        let am = build_approx_with(profile, params, c, &grid.y, tol)?;
        match error_terms(&am, profile, params, &grid) {
            Err(TsError::NormTail(_)) if doublings < MAX_DOUBLINGS => {
                ymax = 2.0 * grid.ymax();
                n *= 2;
                doublings += 1;
            }
            r => return r.map(|et| (grid, et)),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ErrorTerms {
    pub ev_re: Vec<C>,
    pub ev_re_dy: Vec<C>,
    pub eu_sm: Vec<C>,
    pub ev_sm: Vec<C>,
    pub ev_re_h1w: WeightedNorm,
    pub sm_l2: f64,
}

/// Regular part Ray(Φ) and the smallness parts of ℒ(Ξ_app).
///
/// Note the sign of the ηα²√ε u^f term: the sublayer equation absorbs
/// √ε∂²u^f, leaving -√εα²u^f from Δ_α.
pub fn error_terms(am: &ApproxMode, profile: &ShearProfile, params: &FlowParams, grid: &HalfLineGrid) -> Result<ErrorTerms> {
    if grid.y != am.slow.y {
        return Err(TsError::GridMismatch("error terms need the grid the mode was built on".into()));
    }
    let a = params.alpha();
    let ia = i() * a;
    let se = params.eps.sqrt();
    let lam = params.lambda;
    let eta = am.eta;
    let c = am.c;
    let wall_slope = profile.derivs(0.0)[1];
    let n = grid.len();
    let mut eu = Vec::with_capacity(n);
    let mut ev = Vec::with_capacity(n);
    for k in 0..n {
        let y = grid.y[k];
        let d = profile.derivs(y);
        let s = &am.slow.points[k];
        let f = &am.fast.points[k];
        let (us, vs, rs) = (s.u.derivs(), s.v.derivs(), s.rho.derivs());
        let div = ia * us[0] + vs[1];
        let ddiv = ia * us[1] + vs[2];
        let e_u = se * (us[2] - a * a * us[0]) + lam * ia * se * div - se * d[2] * rs[0] - eta * se * a * a * f.u[0]
            - ia * eta * (d[0] - wall_slope * y) * f.u[0]
            - eta * f.v[0] * (d[1] - wall_slope);
        let e_v = se * (vs[2] - a * a * vs[0]) + lam * se * ddiv + eta * se * (f.v[2] - a * a * f.v[0]) - ia * eta * (d[0] - c) * f.v[0];
        eu.push(e_u);
        ev.push(e_v);
    }
    let ev_re = am.slow.rayleigh_residual();
    let ev_re_dy = am.slow.rayleigh_residual_derivative();
    let ev_re_h1w = norm(grid, profile, &ev_re, Some(&ev_re_dy), NormKind::H1w)?;
    let nu = norm(grid, profile, &eu, None, NormKind::L2)?;
    let nv = norm(grid, profile, &ev, None, NormKind::L2)?;
    Ok(ErrorTerms { ev_re, ev_re_dy, eu_sm: eu, ev_sm: ev, ev_re_h1w, sm_l2: (nu.value.powi(2) + nv.value.powi(2)).sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weighted_norm_of_exponential() {
        let g = HalfLineGrid::build(40.0, 1024, 0.05).unwrap();
        let p = ShearProfile::exponential();
        let f: Vec<C> = g.y.iter().map(|&y| C::new((-y).exp(), 0.0)).collect();
        let n = norm(&g, &p, &f, None, NormKind::L2w).unwrap();
        assert!((n.value - 1.0).abs() < 1e-9, "{n:?}");
    }
}
