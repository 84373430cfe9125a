//! Row-compressed complex sparse matrices, enough to compose finite
//! difference operators and assemble block systems.

use num_complex::Complex64;

type C = Complex64;

#[derive(Clone, Debug, PartialEq)]
pub struct SparseRows {
    ncols: usize,
    rows: Vec<Vec<(usize, C)>>,
}

fn merge(mut v: Vec<(usize, C)>) -> Vec<(usize, C)> {
    v.sort_by_key(|e| e.0);
    let mut out: Vec<(usize, C)> = Vec::with_capacity(v.len());
    for (j, a) in v {
        match out.last_mut() {
            Some(last) if last.0 == j => last.1 += a,
            _ => out.push((j, a)),
        }
    }
    out
}

impl SparseRows {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        SparseRows { ncols, rows: vec![Vec::new(); nrows] }
    }

    pub fn identity(n: usize) -> Self {
        Self::diag(&vec![C::new(1.0, 0.0); n])
    }

    pub fn diag(d: &[C]) -> Self {
        SparseRows { ncols: d.len(), rows: d.iter().enumerate().map(|(i, &a)| vec![(i, a)]).collect() }
    }

    pub fn from_rows(rows: Vec<Vec<(usize, C)>>, ncols: usize) -> Self {
        SparseRows { ncols, rows: rows.into_iter().map(merge).collect() }
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn row(&self, i: usize) -> &[(usize, C)] {
        &self.rows[i]
    }

    pub fn set_row(&mut self, i: usize, entries: Vec<(usize, C)>) {
        self.rows[i] = merge(entries);
    }

    /// For a row `k` that reads x_k = b_k, drop column k from every other
    /// row. The solution is unchanged when b_k = 0 is imposed, and an LU
    /// factorisation then returns x_k exactly.
    pub fn decouple_dirichlet(&mut self, k: usize) {
        for (i, r) in self.rows.iter_mut().enumerate() {
            if i != k {
                r.retain(|e| e.0 != k);
            }
        }
    }

    pub fn apply(&self, x: &[C]) -> Vec<C> {
        assert_eq!(x.len(), self.ncols, "dimension mismatch in sparse apply");
        self.rows.iter().map(|r| r.iter().map(|&(j, a)| a * x[j]).sum()).collect()
    }

    /// self · other
    pub fn compose(&self, other: &SparseRows) -> SparseRows {
        assert_eq!(self.ncols, other.nrows(), "dimension mismatch in sparse compose");
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let mut acc = Vec::new();
                for &(k, a) in r {
                    for &(j, b) in other.row(k) {
                        acc.push((j, a * b));
                    }
                }
                merge(acc)
            })
            .collect();
        SparseRows { ncols: other.ncols, rows }
    }

    /// diag(d) · self
    pub fn left_scale(&self, d: &[C]) -> SparseRows {
        let rows = self.rows.iter().zip(d).map(|(r, &s)| r.iter().map(|&(j, a)| (j, a * s)).collect()).collect();
        SparseRows { ncols: self.ncols, rows }
    }

    pub fn scale(&self, s: C) -> SparseRows {
        let rows = self.rows.iter().map(|r| r.iter().map(|&(j, a)| (j, a * s)).collect()).collect();
        SparseRows { ncols: self.ncols, rows }
    }

    pub fn add(&self, other: &SparseRows) -> SparseRows {
        assert_eq!(self.nrows(), other.nrows());
        assert_eq!(self.ncols, other.ncols);
        let rows = self
            .rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| merge(a.iter().chain(b.iter()).cloned().collect()))
            .collect();
        SparseRows { ncols: self.ncols, rows }
    }

    pub fn sub(&self, other: &SparseRows) -> SparseRows {
        self.add(&other.scale(C::new(-1.0, 0.0)))
    }

    /// Add `block` into the interleaved layout with `nf` fields per node:
    /// block row i lands on row `i*nf + fr`, column j on `j*nf + fc`.
    pub fn add_block(&mut self, block: &SparseRows, nf: usize, fr: usize, fc: usize) {
        for (i, r) in block.rows.iter().enumerate() {
            let target = i * nf + fr;
            let mut v = std::mem::take(&mut self.rows[target]);
            v.extend(r.iter().map(|&(j, a)| (j * nf + fc, a)));
            self.rows[target] = merge(v);
        }
    }

    /// (lower, upper) bandwidths.
    pub fn bandwidths(&self) -> (usize, usize) {
        let mut kl = 0;
        let mut ku = 0;
        for (i, r) in self.rows.iter().enumerate() {
            for &(j, a) in r {
                if a == C::new(0.0, 0.0) {
                    continue;
                }
                if j < i {
                    kl = kl.max(i - j);
                } else {
                    ku = ku.max(j - i);
                }
            }
        }
        (kl, ku)
    }
}
