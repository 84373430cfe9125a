//! Complex banded LU factorisation with partial pivoting.
//!
//! Storage follows the usual column layout: entry A(i,j) lives at
//! `ab[j*ld + kv + i - j]` with `kv = kl + ku`, leaving `kl` extra rows
//! above the band for fill-in produced by row interchanges.

use crate::error::{Result, TsError};
use crate::sparse::SparseRows;
use num_complex::Complex64;

type C = Complex64;

#[derive(Clone, Debug)]
pub struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    ld: usize,
    ab: Vec<C>,
    ipiv: Vec<usize>,
    norm1: f64,
}

impl BandLu {
    pub fn factor(a: &SparseRows) -> Result<Self> {
        let n = a.nrows();
        assert_eq!(n, a.ncols(), "banded factorisation needs a square matrix");
        let (kl, ku) = a.bandwidths();
        let kv = kl + ku;
        let ld = 2 * kl + ku + 1;
        let mut ab = vec![C::new(0.0, 0.0); ld * n];
        let mut colsum = vec![0.0f64; n];
        for i in 0..n {
            for &(j, v) in a.row(i) {
                ab[j * ld + kv + i - j] += v;
                colsum[j] += v.norm();
            }
        }
        let norm1 = colsum.iter().cloned().fold(0.0, f64::max);
        let mut ipiv = vec![0usize; n];
        let idx = |i: usize, j: usize| j * ld + kv + i - j;
        let mut ju = 0usize;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let mut jp = 0;
            let mut best = -1.0;
            for r in 0..=km {
                let m = ab[idx(j + r, j)].norm();
                if m > best {
                    best = m;
                    jp = r;
                }
            }
            ipiv[j] = j + jp;
            if best == 0.0 {
                return Err(TsError::Singular(j));
            }
            ju = ju.max((j + ku + jp).min(n - 1));
            if jp != 0 {
                for col in j..=ju {
                    ab.swap(idx(j, col), idx(j + jp, col));
                }
            }
            let piv = ab[idx(j, j)];
            for r in 1..=km {
                ab[idx(j + r, j)] /= piv;
            }
            for col in (j + 1)..=ju {
                let ujc = ab[idx(j, col)];
                if ujc == C::new(0.0, 0.0) {
                    continue;
                }
                for r in 1..=km {
                    let l = ab[idx(j + r, j)];
                    ab[idx(j + r, col)] -= l * ujc;
                }
            }
        }
        Ok(BandLu { n, kl, ku, ld, ab, ipiv, norm1 })
    }

    fn at(&self, i: usize, j: usize) -> C {
        self.ab[j * self.ld + self.kl + self.ku + i - j]
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[C]) -> Vec<C> {
        let n = self.n;
        let kv = self.kl + self.ku;
        let mut x = b.to_vec();
        for j in 0..n {
            let p = self.ipiv[j];
            if p != j {
                x.swap(j, p);
            }
            let km = self.kl.min(n - 1 - j);
            let xj = x[j];
            for r in 1..=km {
                x[j + r] -= self.at(j + r, j) * xj;
            }
        }
        for j in (0..n).rev() {
            x[j] /= self.at(j, j);
            let xj = x[j];
            for r in 1..=kv.min(j) {
                x[j - r] -= self.at(j - r, j) * xj;
            }
        }
        x
    }

    /// Solve Aᴴ x = b.
    pub fn solve_adjoint(&self, b: &[C]) -> Vec<C> {
        let n = self.n;
        let kv = self.kl + self.ku;
        let mut x = b.to_vec();
        // Uᴴ y = b
        for j in 0..n {
            let mut s = x[j];
            for r in 1..=kv.min(j) {
                s -= self.at(j - r, j).conj() * x[j - r];
            }
            x[j] = s / self.at(j, j).conj();
        }
        // Lᴴ, then undo the interchanges in reverse order
        for j in (0..n).rev() {
            let km = self.kl.min(n - 1 - j);
            let mut s = x[j];
            for r in 1..=km {
                s -= self.at(j + r, j).conj() * x[j + r];
            }
            x[j] = s;
            let p = self.ipiv[j];
            if p != j {
                x.swap(j, p);
            }
        }
        x
    }

    /// Hager-Higham estimate of the 1-norm condition number.
    pub fn condition_estimate(&self) -> f64 {
        let n = self.n;
        let mut x = vec![C::new(1.0 / n as f64, 0.0); n];
        let mut est = 0.0;
        for _ in 0..5 {
            let y = self.solve(&x);
            let ny: f64 = y.iter().map(|v| v.norm()).sum();
            if ny <= est {
                break;
            }
            est = ny;
            let xi: Vec<C> = y.iter().map(|v| if v.norm() > 0.0 { v / v.norm() } else { C::new(1.0, 0.0) }).collect();
            let z = self.solve_adjoint(&xi);
            let (jmax, zmax) = z.iter().enumerate().fold((0, 0.0), |acc, (j, v)| if v.norm() > acc.1 { (j, v.norm()) } else { acc });
            let ztx: f64 = z.iter().zip(&x).map(|(a, b)| (a.conj() * b).re).sum();
            if zmax <= ztx {
                break;
            }
            x = vec![C::new(0.0, 0.0); n];
            x[jmax] = C::new(1.0, 0.0);
        }
        est * self.norm1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn solves_random_banded_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n: usize = 60;
        let (kl, ku) = (3, 5);
        let mut rows = Vec::new();
        for i in 0..n {
            let mut r = Vec::new();
            for j in i.saturating_sub(kl)..(i + ku + 1).min(n) {
                // weak diagonal forces pivoting
                let scale = if i == j { 0.1 } else { 1.0 };
                r.push((j, C::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5) * scale));
            }
            rows.push(r);
        }
        let a = SparseRows::from_rows(rows, n);
        let x: Vec<C> = (0..n).map(|k| C::new(k as f64, 1.0 - k as f64 * 0.5)).collect();
        let b = a.apply(&x);
        let lu = BandLu::factor(&a).unwrap();
        let got = lu.solve(&b);
        let err: f64 = got.iter().zip(&x).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-9, "err {err}");
        // adjoint solve: check <A y, z> = <y, Aᴴ z>
        let z: Vec<C> = (0..n).map(|k| C::new((k as f64).sin(), (k as f64).cos())).collect();
        let w = lu.solve_adjoint(&z);
        let back: Vec<C> = (0..n)
            .map(|j| (0..n).map(|i| a.row(i).iter().filter(|e| e.0 == j).map(|e| e.1.conj() * w[i]).sum::<C>()).sum())
            .collect();
        let err2: f64 = back.iter().zip(&z).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err2 < 1e-9, "adjoint err {err2}");
        assert!(lu.condition_estimate() > 1.0);
    }
}
