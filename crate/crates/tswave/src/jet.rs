//! Truncated Taylor jets in one variable, used to carry exact derivatives
//! (up to third order) through the closed-form slow-mode expressions.

use num_complex::Complex64;
use std::ops::{Add, Div, Mul, Neg, Sub};

pub const ORDER: usize = 3;
const LEN: usize = ORDER + 1;
const FACT: [f64; LEN] = [1.0, 1.0, 2.0, 6.0];

/// Taylor coefficients `c[k] = f^(k)(y)/k!`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub c: [Complex64; LEN],
}

impl Jet {
    pub fn constant(v: Complex64) -> Self {
        let mut c = [Complex64::new(0.0, 0.0); LEN];
        c[0] = v;
        Jet { c }
    }

    pub fn real_const(v: f64) -> Self {
        Self::constant(Complex64::new(v, 0.0))
    }

    /// The independent variable itself, evaluated at `y`.
    pub fn variable(y: f64) -> Self {
        let mut j = Self::real_const(y);
        j.c[1] = Complex64::new(1.0, 0.0);
        j
    }

    /// Build from derivatives `[f, f', f'', f''']`.
    pub fn from_derivs(d: [Complex64; LEN]) -> Self {
        let mut c = d;
        for (k, v) in c.iter_mut().enumerate() {
            *v /= FACT[k];
        }
        Jet { c }
    }

    pub fn from_real_derivs(d: [f64; LEN]) -> Self {
        Self::from_derivs(d.map(|x| Complex64::new(x, 0.0)))
    }

    pub fn value(&self) -> Complex64 {
        self.c[0]
    }

    /// k-th derivative.
    pub fn d(&self, k: usize) -> Complex64 {
        self.c[k] * FACT[k]
    }

    pub fn derivs(&self) -> [Complex64; LEN] {
        [self.d(0), self.d(1), self.d(2), self.d(3)]
    }

    /// Jet of the derivative (loses the top order, which becomes zero).
    pub fn deriv(&self) -> Self {
        let mut c = [Complex64::new(0.0, 0.0); LEN];
        for k in 0..ORDER {
            c[k] = self.c[k + 1] * (k as f64 + 1.0);
        }
        Jet { c }
    }

    /// Jet of an antiderivative with value `v0` at the expansion point.
    pub fn integral(&self, v0: Complex64) -> Self {
        let mut c = [Complex64::new(0.0, 0.0); LEN];
        c[0] = v0;
        for k in 1..LEN {
            c[k] = self.c[k - 1] / k as f64;
        }
        Jet { c }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Jet { c: self.c.map(|x| x * s) }
    }

    pub fn recip(&self) -> Self {
        let a0 = self.c[0];
        let mut r = [Complex64::new(0.0, 0.0); LEN];
        r[0] = 1.0 / a0;
        for k in 1..LEN {
            let mut s = Complex64::new(0.0, 0.0);
            for j in 1..=k {
                s += self.c[j] * r[k - j];
            }
            r[k] = -s / a0;
        }
        Jet { c: r }
    }

    pub fn exp(&self) -> Self {
        // f' = f g'  ->  k f_k = sum_{j=1..k} j g_j f_{k-j}
        let mut f = [Complex64::new(0.0, 0.0); LEN];
        f[0] = self.c[0].exp();
        for k in 1..LEN {
            let mut s = Complex64::new(0.0, 0.0);
            for j in 1..=k {
                s += self.c[j] * f[k - j] * j as f64;
            }
            f[k] = s / k as f64;
        }
        Jet { c: f }
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        let mut c = self.c;
        for k in 0..LEN {
            c[k] += o.c[k];
        }
        Jet { c }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        let mut c = self.c;
        for k in 0..LEN {
            c[k] -= o.c[k];
        }
        Jet { c }
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        Jet { c: self.c.map(|x| -x) }
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let mut c = [Complex64::new(0.0, 0.0); LEN];
        for i in 0..LEN {
            for j in 0..LEN - i {
                c[i + j] += self.c[i] * o.c[j];
            }
        }
        Jet { c }
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, o: Jet) -> Jet {
        self * o.recip()
    }
}

impl Add<Complex64> for Jet {
    type Output = Jet;
    fn add(mut self, o: Complex64) -> Jet {
        self.c[0] += o;
        self
    }
}

impl Sub<Complex64> for Jet {
    type Output = Jet;
    fn sub(mut self, o: Complex64) -> Jet {
        self.c[0] -= o;
        self
    }
}

impl Mul<Complex64> for Jet {
    type Output = Jet;
    fn mul(self, o: Complex64) -> Jet {
        self.scale(o)
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, o: f64) -> Jet {
        self.scale(Complex64::new(o, 0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() <= 1e-13 * (1.0 + b.norm())
    }

    #[test]
    fn exp_of_linear() {
        let y = 0.7;
        let j = (Jet::variable(y) * -2.0).exp();
        for k in 0..4 {
            let want = (-2.0f64).powi(k as i32) * (-2.0 * y).exp();
            assert!(close(j.d(k), Complex64::new(want, 0.0)));
        }
    }

    #[test]
    fn recip_matches_quotient_rule() {
        let y = 1.3;
        let x = Jet::variable(y);
        let f = (x * x + Complex64::new(0.0, 1.0)).recip();
        let g = |t: f64| 1.0 / (Complex64::new(t * t, 1.0));
        let h = 1e-3;
        let fd2 = (g(y + h) - 2.0 * g(y) + g(y - h)) / (h * h);
        assert!((f.d(2) - fd2).norm() < 1e-5);
    }
}
