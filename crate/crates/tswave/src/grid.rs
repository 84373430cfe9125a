//! Graded half-line grid with fourth-order finite differences and
//! interpolatory quadrature weights.

use crate::error::{Result, TsError};
use crate::params::FlowParams;
use crate::quad::gauss_legendre;
use crate::sparse::SparseRows;
use crate::stencil::{fornberg, window};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

type C = Complex64;

pub const MIN_NODES: usize = 256;
const WIDTH: usize = 5;

/// Five-point stencils on physical nodes, one row per node.
#[derive(Clone, Debug)]
pub struct Stencil {
    pub start: Vec<usize>,
    pub w: Vec<[f64; WIDTH]>,
}

impl Stencil {
    pub fn apply(&self, f: &[C]) -> Vec<C> {
        self.start
            .iter()
            .zip(&self.w)
            .map(|(&s, w)| (0..WIDTH).map(|k| f[s + k] * w[k]).sum())
            .collect()
    }

    pub fn apply_real(&self, f: &[f64]) -> Vec<f64> {
        self.start
            .iter()
            .zip(&self.w)
            .map(|(&s, w)| (0..WIDTH).map(|k| f[s + k] * w[k]).sum())
            .collect()
    }

    pub fn to_sparse(&self) -> SparseRows {
        let n = self.start.len();
        let rows = self
            .start
            .iter()
            .zip(&self.w)
            .map(|(&s, w)| (0..WIDTH).map(|k| (s + k, C::new(w[k], 0.0))).collect())
            .collect();
        SparseRows::from_rows(rows, n)
    }
}

#[derive(Clone, Debug)]
pub struct HalfLineGrid {
    pub y: Vec<f64>,
    pub d1: Stencil,
    pub d2: Stencil,
    pub weights: Vec<f64>,
    pub kappa: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridSelfTest {
    pub d1_quartic_error: f64,
    pub d2_quartic_error: f64,
    pub quadrature_error: f64,
    pub nodes_in_sublayer: usize,
    pub pass: bool,
}

/// κ with κ/sinh κ = r (r in (0,1)), by bisection.
fn stretch_for(r: f64) -> f64 {
    if r >= 1.0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (1e-12f64, 60.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid / mid.sinh() > r {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

impl HalfLineGrid {
    /// Nodes `Y_j = Y_max sinh(κ j/N)/sinh κ`, with κ chosen so the first
    /// spacing is about `sublayer_width/16`.
    pub fn build(ymax: f64, n: usize, sublayer_width: f64) -> Result<Self> {
        if n < MIN_NODES {
            return Err(TsError::InvalidParameter(format!("grid needs N >= {MIN_NODES}, got {n}")));
        }
        let h0 = sublayer_width / 16.0;
        let kappa = stretch_for(n as f64 * h0 / ymax);
        let g = Self::with_stretch(ymax, n, kappa)?;
        let inside = g.y.iter().filter(|&&y| y <= 3.0 * sublayer_width).count();
        if inside < 12 {
            return Err(TsError::GridTooCoarse(format!("{inside} nodes inside 3|δ|, need 12")));
        }
        Ok(g)
    }

    /// Grid for one parameter point: Y_max is at least `ymax_floor` and at
    /// least 25/β₁, and the first spacing resolves the sublayer |δ|.
    pub fn for_params(params: &FlowParams, ymax_floor: f64, n: usize) -> Result<Self> {
        Self::build(ymax_floor.max(params.default_ymax()), n, params.delta().norm())
    }

    /// Same mapping with an explicit stretching parameter (κ = 0 is uniform).
    pub fn with_stretch(ymax: f64, n: usize, kappa: f64) -> Result<Self> {
        if !(ymax > 0.0) || n < 8 {
            return Err(TsError::InvalidParameter(format!("bad grid request: ymax {ymax}, n {n}")));
        }
        let y: Vec<f64> = (0..=n)
            .map(|j| {
                let s = j as f64 / n as f64;
                if kappa < 1e-10 {
                    ymax * s
                } else {
                    ymax * (kappa * s).sinh() / kappa.sinh()
                }
            })
            .collect();
        Ok(Self::from_nodes(y, kappa))
    }

    pub fn from_nodes(y: Vec<f64>, kappa: f64) -> Self {
        let np = y.len();
        let mut s1 = Stencil { start: Vec::with_capacity(np), w: Vec::with_capacity(np) };
        let mut s2 = Stencil { start: Vec::with_capacity(np), w: Vec::with_capacity(np) };
        for i in 0..np {
            let r = window(i, WIDTH, np);
            let w = fornberg(y[i], &y[r.clone()], 2);
            let mut a = [0.0; WIDTH];
            let mut b = [0.0; WIDTH];
            a.copy_from_slice(&w[1]);
            b.copy_from_slice(&w[2]);
            s1.start.push(r.start);
            s1.w.push(a);
            s2.start.push(r.start);
            s2.w.push(b);
        }
        let (gx, gw) = gauss_legendre(3);
        let mut weights = vec![0.0; np];
        for i in 0..np - 1 {
            let r = window(i + 1, 6, np);
            let (a, b) = (y[i], y[i + 1]);
            for (x, wq) in gx.iter().zip(&gw) {
                let t = 0.5 * (a + b) + 0.5 * (b - a) * x;
                let l = fornberg(t, &y[r.clone()], 0);
                for (k, lk) in l[0].iter().enumerate() {
                    weights[r.start + k] += 0.5 * (b - a) * wq * lk;
                }
            }
        }
        HalfLineGrid { y, d1: s1, d2: s2, weights, kappa }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn ymax(&self) -> f64 {
        *self.y.last().unwrap()
    }

    pub fn first_spacing(&self) -> f64 {
        self.y[1] - self.y[0]
    }

    pub fn integrate(&self, f: &[C]) -> C {
        f.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }

    pub fn integrate_real(&self, f: &[f64]) -> f64 {
        f.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }

    /// ∫ |f|².
    pub fn l2_sq(&self, f: &[C]) -> f64 {
        f.iter().zip(&self.weights).map(|(v, w)| v.norm_sqr() * w).sum()
    }

    pub fn l2(&self, f: &[C]) -> f64 {
        self.l2_sq(f).max(0.0).sqrt()
    }

    pub fn h1(&self, f: &[C]) -> f64 {
        let df = self.d1.apply(f);
        (self.l2_sq(f) + self.l2_sq(&df)).max(0.0).sqrt()
    }

    pub fn self_test(&self, sublayer_width: f64) -> GridSelfTest {
        let ym = self.ymax();
        let f: Vec<C> = self.y.iter().map(|&y| C::new((y / ym).powi(4), 0.0)).collect();
        let d1 = self.d1.apply(&f);
        let d2 = self.d2.apply(&f);
        let mut e1 = 0.0f64;
        let mut e2 = 0.0f64;
        for (k, &y) in self.y.iter().enumerate() {
            let t = y / ym;
            e1 = e1.max((d1[k].re - 4.0 * t.powi(3) / ym).abs() * ym);
            e2 = e2.max((d2[k].re - 12.0 * t * t / (ym * ym)).abs() * ym * ym);
        }
        let g: Vec<f64> = self.y.iter().map(|y| (-y).exp()).collect();
        let q = (self.integrate_real(&g) - (1.0 - (-ym).exp())).abs();
        let inside = self.y.iter().filter(|&&y| y <= 3.0 * sublayer_width).count();
        GridSelfTest {
            d1_quartic_error: e1,
            d2_quartic_error: e2,
            quadrature_error: q,
            nodes_in_sublayer: inside,
            pass: e1 < 1e-8 && e2 < 1e-6 && q < 1e-10 && inside >= 12,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_of_square() {
        let g = HalfLineGrid::build(40.0, 512, 0.05).unwrap();
        let f: Vec<C> = g.y.iter().map(|&y| C::new(y * y, 0.0)).collect();
        let d = g.d1.apply(&f);
        for (k, &y) in g.y.iter().enumerate() {
            assert!((d[k].re - 2.0 * y).abs() < 1e-9 * (1.0 + y), "node {k}");
        }
    }

    #[test]
    fn default_grid_resolves_sublayer() {
        let g = HalfLineGrid::build(40.0, 2048, 0.05).unwrap();
        let t = g.self_test(0.05);
        assert!(t.pass, "{t:?}");
    }

    #[test]
    fn refuses_coarse_grids() {
        assert!(HalfLineGrid::build(40.0, 100, 0.05).is_err());
        assert!(matches!(HalfLineGrid::build(1e4, 256, 1e-30), Err(TsError::GridTooCoarse(_))));
    }
}
