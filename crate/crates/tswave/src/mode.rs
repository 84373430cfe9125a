//! (ρ, u, v) triples sampled on a grid.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

type C = Complex64;

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct ModeBundle {
    pub rho: Vec<C>,
    pub u: Vec<C>,
    pub v: Vec<C>,
}

impl ModeBundle {
    pub fn zeros(n: usize) -> Self {
        let z = vec![C::new(0.0, 0.0); n];
        ModeBundle { rho: z.clone(), u: z.clone(), v: z }
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    /// (ρ(0), u(0), v(0)).
    pub fn traces(&self) -> [C; 3] {
        [self.rho[0], self.u[0], self.v[0]]
    }

    /// self + s·other
    pub fn axpy(&self, s: C, other: &ModeBundle) -> ModeBundle {
        let f = |a: &[C], b: &[C]| a.iter().zip(b).map(|(x, y)| x + s * y).collect();
        ModeBundle { rho: f(&self.rho, &other.rho), u: f(&self.u, &other.u), v: f(&self.v, &other.v) }
    }

    pub fn scale(&self, s: C) -> ModeBundle {
        let f = |a: &[C]| a.iter().map(|x| x * s).collect();
        ModeBundle { rho: f(&self.rho), u: f(&self.u), v: f(&self.v) }
    }

    /// Interleave as [ρ₀, u₀, v₀, ρ₁, ...].
    pub fn interleave(&self) -> Vec<C> {
        let mut out = Vec::with_capacity(3 * self.len());
        for k in 0..self.len() {
            out.extend([self.rho[k], self.u[k], self.v[k]]);
        }
        out
    }

    pub fn deinterleave(x: &[C]) -> ModeBundle {
        let n = x.len() / 3;
        ModeBundle {
            rho: (0..n).map(|k| x[3 * k]).collect(),
            u: (0..n).map(|k| x[3 * k + 1]).collect(),
            v: (0..n).map(|k| x[3 * k + 2]).collect(),
        }
    }
}
