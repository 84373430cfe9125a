//! Adaptive Gauss-Kronrod (7/15) quadrature for complex integrands and
//! fixed Gauss-Legendre rules.

use crate::error::{Result, TsError};
use num_complex::Complex64;
use std::sync::OnceLock;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// One G7/K15 panel: (Kronrod estimate, error estimate). The error uses
/// the usual scaled |K - G| with a round-off floor.
pub fn gk15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64) {
    let (v, e, _) = gk15_floor(f, a, b);
    (v, e)
}

/// As `gk15`, also returning the round-off floor 50·ε·∫|f| of the panel.
fn gk15_floor<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut fv = [Complex64::new(0.0, 0.0); 15];
    fv[7] = f(c);
    let mut rk = fv[7] * WGK[7];
    let mut rg = fv[7] * WG[3];
    let mut resabs = fv[7].norm() * WGK[7];
    for j in 0..7 {
        let dx = h * XGK[j];
        let (l, r) = (f(c - dx), f(c + dx));
        fv[j] = l;
        fv[14 - j] = r;
        rk += (l + r) * WGK[j];
        resabs += (l.norm() + r.norm()) * WGK[j];
        if j % 2 == 1 {
            rg += (l + r) * WG[j / 2];
        }
    }
    let mean = rk * 0.5;
    let mut resasc = (fv[7] - mean).norm() * WGK[7];
    for j in 0..7 {
        resasc += ((fv[j] - mean).norm() + (fv[14 - j] - mean).norm()) * WGK[j];
    }
    let h = h.abs();
    let (resabs, resasc) = (resabs * h, resasc * h);
    let mut err = ((rk - rg) * h).norm();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    let floor = 50.0 * f64::EPSILON * resabs;
    err = err.max(floor);
    (rk * (0.5 * (b - a)), err, floor)
}

#[derive(Clone, Copy, Debug)]
pub struct QuadTol {
    pub abs: f64,
    pub rel: f64,
    pub max_panels: usize,
}

impl Default for QuadTol {
    fn default() -> Self {
        QuadTol { abs: 1e-12, rel: 1e-12, max_panels: 4000 }
    }
}

/// Globally adaptive integration of `f` over `[a, b]`. Panels whose error
/// has reached their round-off floor are not refined further; the request
/// is then met up to the summed floors.
pub fn integrate<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, tol: QuadTol) -> Result<Complex64> {
    if a == b {
        return Ok(Complex64::new(0.0, 0.0));
    }
    // (a, b, value, error, floor)
    let mut panels = vec![{
        let (v, e, fl) = gk15_floor(&f, a, b);
        (a, b, v, e, fl)
    }];
    loop {
        let total: Complex64 = panels.iter().map(|p| p.2).sum();
        let err: f64 = panels.iter().map(|p| p.3).sum();
        let floor: f64 = panels.iter().map(|p| p.4).sum();
        let wanted = tol.abs.max(tol.rel * total.norm());
        if err <= wanted.max(2.0 * floor) {
            return Ok(total);
        }
        let pick = panels
            .iter()
            .enumerate()
            .filter(|(_, p)| p.3 > 2.0 * p.4 && (p.1 - p.0).abs() > 1e-15 * (1.0 + p.0.abs()))
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(k, _)| k);
        let Some(k) = pick else {
            return Err(TsError::Quadrature { achieved: err, wanted });
        };
        if panels.len() >= tol.max_panels {
            return Err(TsError::Quadrature { achieved: err, wanted });
        }
        let (pa, pb, _, _, _) = panels.swap_remove(k);
        let m = 0.5 * (pa + pb);
        let (v1, e1, f1) = gk15_floor(&f, pa, m);
        let (v2, e2, f2) = gk15_floor(&f, m, pb);
        panels.push((pa, m, v1, e1, f1));
        panels.push((m, pb, v2, e2, f2));
    }
}

/// Integrate over `[a, inf)` for an integrand with exponential envelope
/// `|f(y)| <= C e^{-rate y}`; the truncation point is chosen so that the
/// envelope tail is below the absolute tolerance.
pub fn integrate_to_infinity<F: Fn(f64) -> Complex64>(
    f: F,
    a: f64,
    rate: f64,
    tol: QuadTol,
) -> Result<Complex64> {
    if rate <= 0.0 {
        return Err(TsError::InvalidParameter("tail rate must be positive".into()));
    }
    let mut sum = Complex64::new(0.0, 0.0);
    let mut lo = a;
    let step = 4.0 / rate;
    for _ in 0..400 {
        let hi = lo + step;
        let piece = integrate(&f, lo, hi, tol)?;
        sum += piece;
        let fb = f(hi).norm();
        let tail = fb / rate;
        lo = hi;
        if tail < tol.abs.max(tol.rel * sum.norm()) && piece.norm() < 10.0 * tol.abs.max(tol.rel * sum.norm()) + tail * 10.0 {
            return Ok(sum);
        }
    }
    let bound = f(lo).norm() / rate;
    Err(TsError::TailTruncation { bound, tol: tol.abs })
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

pub fn gl20() -> &'static (Vec<f64>, Vec<f64>) {
    static GL: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    GL.get_or_init(|| gauss_legendre(20))
}
