//! Background shear profiles and the structural quantities built on them.

use crate::error::{Result, TsError};
use crate::stencil::{fornberg, window};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProfileKind {
    /// U = 1 - e^{-Y}
    Exponential,
    /// U = tanh Y
    Tanh,
    /// Sampled profile. Derivatives are either supplied (columns U', U'', U''')
    /// or obtained from local degree-5 interpolation.
    Tabulated {
        y: Vec<f64>,
        u: Vec<f64>,
        #[serde(default)]
        derivs: Option<Vec<[f64; 3]>>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShearProfile {
    pub kind: ProfileKind,
}

impl ShearProfile {
    pub fn exponential() -> Self {
        ShearProfile { kind: ProfileKind::Exponential }
    }

    pub fn tanh() -> Self {
        ShearProfile { kind: ProfileKind::Tanh }
    }

    pub fn tabulated(y: Vec<f64>, u: Vec<f64>, derivs: Option<Vec<[f64; 3]>>) -> Result<Self> {
        if y.len() < 6 || y.len() != u.len() {
            return Err(TsError::InvalidParameter("tabulated profile needs >= 6 matching samples".into()));
        }
        if y.windows(2).any(|w| w[1] <= w[0]) || y[0] != 0.0 {
            return Err(TsError::InvalidParameter("tabulated Y must start at 0 and increase".into()));
        }
        if let Some(d) = &derivs {
            if d.len() != y.len() {
                return Err(TsError::InvalidParameter("derivative table length mismatch".into()));
            }
        }
        Ok(ShearProfile { kind: ProfileKind::Tabulated { y, u, derivs } })
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ProfileKind::Exponential => "exponential",
            ProfileKind::Tanh => "tanh",
            ProfileKind::Tabulated { .. } => "tabulated",
        }
    }

    pub fn supported_order(&self) -> usize {
        3
    }

    /// True when derivatives come from interpolation rather than closed forms.
    pub fn derivatives_approximate(&self) -> bool {
        matches!(self.kind, ProfileKind::Tabulated { derivs: None, .. })
    }

    /// `∂^order U(Y)`.
    pub fn eval(&self, y: f64, order: usize) -> Result<f64> {
        if order > 3 {
            return Err(TsError::OrderTooHigh(order));
        }
        if y < 0.0 || !y.is_finite() {
            return Err(TsError::NegativeY(y));
        }
        Ok(self.derivs(y)[order])
    }

    /// `[U, U', U'', U''']` at `y >= 0` (no argument checks).
    pub fn derivs(&self, y: f64) -> [f64; 4] {
        match &self.kind {
            ProfileKind::Exponential => {
                let e = (-y).exp();
                [-(-y).exp_m1(), e, -e, e]
            }
            ProfileKind::Tanh => {
                let t = y.tanh();
                let s2 = 1.0 - t * t;
                [t, s2, -2.0 * t * s2, s2 * (6.0 * t * t - 2.0)]
            }
            ProfileKind::Tabulated { y: ys, u, derivs } => tabulated_derivs(ys, u, derivs.as_deref(), y),
        }
    }

    /// ln|U''(y)|, finite where U'' itself underflows.
    pub fn log_abs_curvature(&self, y: f64) -> f64 {
        match &self.kind {
            ProfileKind::Exponential => -y,
            ProfileKind::Tanh => {
                // |U''| = 2 tanh(y) sech²(y)
                let ln_sech = -y + std::f64::consts::LN_2 - (-2.0 * y).exp().ln_1p();
                std::f64::consts::LN_2 + y.tanh().ln() + 2.0 * ln_sech
            }
            ProfileKind::Tabulated { .. } => self.derivs(y)[2].abs().ln(),
        }
    }

    /// 1 - U(y), accurate where U is close to 1.
    pub fn deficit(&self, y: f64) -> f64 {
        match &self.kind {
            ProfileKind::Exponential => (-y).exp(),
            ProfileKind::Tanh => {
                let e = (-2.0 * y).exp();
                2.0 * e / (1.0 + e)
            }
            ProfileKind::Tabulated { .. } => 1.0 - self.derivs(y)[0],
        }
    }
}

fn tabulated_derivs(ys: &[f64], u: &[f64], derivs: Option<&[[f64; 3]]>, y: f64) -> [f64; 4] {
    let n = ys.len();
    let last = ys[n - 1];
    if y >= last {
        // constant continuation beyond the table
        return [u[n - 1], 0.0, 0.0, 0.0];
    }
    let i = match ys.binary_search_by(|p| p.total_cmp(&y)) {
        Ok(i) => i,
        Err(i) => i.saturating_sub(1),
    };
    let win = window(i, 6, n);
    let xs = &ys[win.clone()];
    let w = fornberg(y, xs, 3);
    let mut out = [0.0; 4];
    match derivs {
        None => {
            for (k, o) in out.iter_mut().enumerate() {
                *o = w[k].iter().zip(&u[win.clone()]).map(|(a, b)| a * b).sum();
            }
        }
        Some(d) => {
            out[0] = w[0].iter().zip(&u[win.clone()]).map(|(a, b)| a * b).sum();
            for k in 1..4 {
                out[k] = w[0].iter().zip(&d[win.clone()]).map(|(a, b)| a * b[k - 1]).sum();
            }
        }
    }
    out
}

/// Geometric-plus-uniform hybrid grid on [0, ymax]: the first quarter of
/// the nodes grow geometrically from a spacing of 1e-4, the rest are
/// uniform up to `ymax`.
pub fn validation_grid(ymax: f64, n: usize) -> Vec<f64> {
    let n = n.max(16);
    let ng = n / 4;
    let y_switch = 1.0f64.min(ymax / 4.0);
    let h0 = 1e-4f64.min(y_switch / ng as f64);
    // solve h0 (r^ng - 1)/(r - 1) = y_switch for r by bisection
    let sum = |r: f64| if (r - 1.0).abs() < 1e-14 { h0 * ng as f64 } else { h0 * (r.powi(ng as i32) - 1.0) / (r - 1.0) };
    let (mut lo, mut hi) = (1.0, 2.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if sum(mid) < y_switch {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let r = 0.5 * (lo + hi);
    let mut y = Vec::with_capacity(n);
    y.push(0.0);
    let mut h = h0;
    for _ in 0..ng {
        let next = y[y.len() - 1] + h;
        y.push(next);
        h *= r;
    }
    let start = *y.last().expect("non-empty");
    let nu = n - 1 - ng;
    for k in 1..=nu {
        y.push(start + (ymax - start) * k as f64 / nu as f64);
    }
    y
}

/// H(Y), the structural function whose positive lower bound defines the
/// admissible class.
pub fn h_function(d: [f64; 4], mach: f64) -> f64 {
    let m2 = mach * mach;
    let (u, u1, u2) = (d[0], d[1], d[2]);
    (-u2 * (1.0 - m2 * u * u) - 2.0 * m2 * u * u1 * u1) / (u2.abs() + u1 * u1)
}

/// Closed-form leading and first-order parts of the multiplier.
pub fn w0_w1(d: [f64; 4], mach: f64) -> (f64, f64) {
    let m2 = mach * mach;
    let (u, u1, u2) = (d[0], d[1], d[2]);
    let h = h_function(d, mach);
    let g = u1 * u1 + u2.abs();
    let b = 1.0 - m2 * u * u;
    let w0 = b * b / (h * g);
    let w1 = 4.0 * m2 * u * b / (h * g) - 2.0 * m2 * b * b * (u1 * u1 - u * u2) / (h * h * g * g);
    (w0, w1)
}

/// The factorised expression for w0 - U w1 whose sign is controlled by
/// 1 - 3 M^2 U^2.
pub fn w0_minus_u_w1_factored(d: [f64; 4], mach: f64) -> f64 {
    let m2 = mach * mach;
    let (u, u1, u2) = (d[0], d[1], d[2]);
    let h = h_function(d, mach);
    let g = u1 * u1 + u2.abs();
    let b = 1.0 - m2 * u * u;
    b / (h * h * g * g) * ((1.0 - 3.0 * m2 * u * u) * b * u2.abs() + 8.0 * m2 * m2 * u.powi(3) * u1 * u1)
}

/// Exact multiplier w = -(∂_Y (A^{-1} ∂_Y U))^{-1}.
pub fn multiplier(d: [f64; 4], mach: f64, c: Complex64) -> Complex64 {
    let m2 = mach * mach;
    let wv = d[0] - c;
    let a = 1.0 - m2 * wv * wv;
    -(a * a) / (d[2] * a + 2.0 * m2 * wv * d[1] * d[1])
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PassFlags {
    pub a0: bool,
    pub a1: bool,
    pub a2: bool,
    pub a3: bool,
    pub a4: bool,
}

impl PassFlags {
    pub fn all(&self) -> bool {
        self.a0 && self.a1 && self.a2 && self.a3 && self.a4
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ValidationReport {
    pub profile: String,
    pub mach: f64,
    pub s0: f64,
    pub s1: f64,
    pub s2: f64,
    pub sigma1: f64,
    /// (1 - M^2)/2, the published bound for the exponential profile.
    pub sigma1_reference: Option<f64>,
    pub sigma2: f64,
    pub min_h: f64,
    pub argmin_h: f64,
    pub concavity_margin: f64,
    pub w0_bound_constant: f64,
    pub pass_flags: PassFlags,
    pub warnings: Vec<String>,
}

/// Check the structural assumptions on `grid`. `sigma1` defaults to the
/// measured minimum of H.
pub fn validate(profile: &ShearProfile, mach: f64, grid: &[f64], sigma1: Option<f64>) -> Result<ValidationReport> {
    if !(0.0..1.0).contains(&mach) {
        return Err(TsError::InvalidParameter(format!("Mach number {mach} outside (0,1)")));
    }
    if grid.len() < 8 {
        return Err(TsError::InvalidParameter("validation grid too small".into()));
    }
    let mut warnings = Vec::new();
    if profile.derivatives_approximate() {
        warnings.push("tabulated profile differentiated by local interpolation; derivative accuracy limited by sampling".into());
    }
    let ds: Vec<[f64; 4]> = grid.iter().map(|&y| profile.derivs(y)).collect();
    let ymax = *grid.last().expect("non-empty");

    // (A0)
    let d0 = profile.derivs(0.0);
    let tol = if profile.derivatives_approximate() { 1e-6 } else { 1e-12 };
    let increasing = ds.windows(2).all(|w| w[1][0] > w[0][0] || (w[1][0] - 1.0).abs() < tol);
    let a0 = d0[0].abs() <= tol && (d0[1] - 1.0).abs() <= tol && increasing && ds.iter().all(|d| d[0] <= 1.0 + tol) && (1.0 - ds.last().expect("non-empty")[0]) < 1e-6;

    // (A2): envelope fit on the outer half where U' is representable
    let tail: Vec<(f64, f64)> = grid
        .iter()
        .zip(&ds)
        .filter(|(y, d)| **y >= 0.5 * ymax && d[1] > 1e-290)
        .map(|(y, d)| (*y, d[1].ln()))
        .collect();
    let s0 = if tail.len() >= 2 { -crate::fit::linear_fit(&tail).slope } else { f64::NAN };
    let mut s1 = f64::INFINITY;
    let mut s2 = 0.0f64;
    for (y, d) in grid.iter().zip(&ds) {
        if d[1] <= 0.0 {
            continue;
        }
        let e = d[1] * (s0 * y).exp();
        s1 = s1.min(e);
        s2 = s2.max(e);
    }
    let a2 = s0.is_finite() && s0 > 0.0 && s1 > 0.0 && s2.is_finite();

    // (A1)
    let mut min_h = f64::INFINITY;
    let mut argmin_h = 0.0;
    for (y, d) in grid.iter().zip(&ds) {
        let h = h_function(*d, mach);
        if h < min_h {
            min_h = h;
            argmin_h = *y;
        }
    }
    let sigma1 = sigma1.unwrap_or(min_h);
    let a1 = sigma1 > 0.0 && min_h >= sigma1;

    // (A3): largest of the three ratios
    let mut sigma2 = 0.0f64;
    for d in &ds {
        if d[1] <= 1e-300 || d[2].abs() <= 1e-300 {
            continue;
        }
        let r1 = (d[3] / d[2]).abs();
        let r2 = d[2].abs() / d[1];
        let r3 = (1.0 - d[0]) / d[1];
        sigma2 = sigma2.max(r1).max(r2).max(r3);
    }
    let a3 = sigma2.is_finite() && sigma2 > 0.0;

    // (A4)
    let mut margin = f64::INFINITY;
    for d in &ds {
        if d[1] <= 1e-150 {
            continue;
        }
        margin = margin.min(-d[2] * (1.0 - mach * mach) / (d[1] * d[1]));
    }
    let a4 = ds.iter().all(|d| d[2] < 0.0 || d[1] <= 1e-150) && margin >= sigma1 - 1e-10;
    if a1 && !a4 {
        warnings.push("H bound holds but concavity bound fails: check sampling".into());
    }

    // Two-sided bound on w0 relative to 1/|U''|.
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for d in &ds {
        if d[2] >= 0.0 || d[1] <= 1e-150 {
            continue;
        }
        let (w0, _) = w0_w1(*d, mach);
        let v = w0 * d[2].abs();
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let w0_bound_constant = hi.max(1.0 / lo);

    let sigma1_reference = match profile.kind {
        ProfileKind::Exponential => Some((1.0 - mach * mach) / 2.0),
        _ => None,
    };
    Ok(ValidationReport {
        profile: profile.name().to_string(),
        mach,
        s0,
        s1,
        s2,
        sigma1,
        sigma1_reference,
        sigma2,
        min_h,
        argmin_h,
        concavity_margin: margin,
        w0_bound_constant,
        pass_flags: PassFlags { a0, a1, a2, a3, a4 },
        warnings,
    })
}

#[derive(Clone, Debug)]
pub struct StructuralFunctions {
    pub y: Vec<f64>,
    pub a: Vec<Complex64>,
    pub a_inf: Complex64,
    pub h: Vec<f64>,
    pub w: Vec<Complex64>,
    pub w0: Vec<f64>,
    pub w1: Vec<f64>,
    /// |U''| at the nodes, kept for weight evaluations.
    pub abs_u2: Vec<f64>,
    pub u: Vec<f64>,
}

pub fn structural(profile: &ShearProfile, mach: f64, c: Complex64, grid: &[f64]) -> Result<StructuralFunctions> {
    if !(0.0..1.0).contains(&mach) {
        return Err(TsError::InvalidParameter(format!("Mach number {mach} outside [0,1)")));
    }
    if c.im < 0.0 || (c.im == 0.0 && c.re != 0.0) {
        return Err(TsError::InvalidParameter("structural functions need Im c > 0 or c = 0".into()));
    }
    let m2 = mach * mach;
    let mut out = StructuralFunctions {
        y: grid.to_vec(),
        a: Vec::with_capacity(grid.len()),
        a_inf: 1.0 - m2 * (1.0 - c) * (1.0 - c),
        h: Vec::with_capacity(grid.len()),
        w: Vec::with_capacity(grid.len()),
        w0: Vec::with_capacity(grid.len()),
        w1: Vec::with_capacity(grid.len()),
        abs_u2: Vec::with_capacity(grid.len()),
        u: Vec::with_capacity(grid.len()),
    };
    for &y in grid {
        let d = profile.derivs(y);
        let wv = d[0] - c;
        let a = 1.0 - m2 * wv * wv;
        if a.norm() < 1e-8 {
            return Err(TsError::ADegenerate { y, modulus: a.norm() });
        }
        let (w0, w1) = w0_w1(d, mach);
        out.a.push(a);
        out.h.push(h_function(d, mach));
        out.w.push(multiplier(d, mach, c));
        out.w0.push(w0);
        out.w1.push(w1);
        out.abs_u2.push(d[2].abs());
        out.u.push(d[0]);
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub enum PositivityStatus {
    Ok,
    /// M >= 1/sqrt(3): outside the hypothesis, the bound may fail.
    Warning,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PositivityReport {
    pub margin: f64,
    pub status: PositivityStatus,
}

/// Minimum over the grid of (w0 - U w1)|U''|.
pub fn positivity_check(s: &StructuralFunctions, mach: f64) -> PositivityReport {
    let mut margin = f64::INFINITY;
    for i in 0..s.y.len() {
        if s.abs_u2[i] <= 1e-150 {
            continue;
        }
        margin = margin.min((s.w0[i] - s.u[i] * s.w1[i]) * s.abs_u2[i]);
    }
    let status = if mach >= 1.0 / 3f64.sqrt() { PositivityStatus::Warning } else { PositivityStatus::Ok };
    PositivityReport { margin, status }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_closed_forms() {
        let p = ShearProfile::exponential();
        assert_eq!(p.eval(0.0, 0).unwrap(), 0.0);
        assert_eq!(p.eval(0.0, 1).unwrap(), 1.0);
        assert!((p.eval(2f64.ln(), 2).unwrap() + 0.5).abs() < 1e-15);
        assert!(p.eval(1.0, 4).is_err());
        assert!(p.eval(-1.0, 0).is_err());
    }

    #[test]
    fn tabulated_reproduces_smooth_profile() {
        let y: Vec<f64> = (0..801).map(|i| i as f64 * 0.05).collect();
        let u: Vec<f64> = y.iter().map(|y| 1.0 - (-y).exp()).collect();
        let p = ShearProfile::tabulated(y, u, None).unwrap();
        let d = p.derivs(1.234);
        let e = (-1.234f64).exp();
        assert!((d[0] - (1.0 - e)).abs() < 1e-9);
        assert!((d[1] - e).abs() < 1e-7);
        assert!((d[2] + e).abs() < 1e-5);
    }
}
