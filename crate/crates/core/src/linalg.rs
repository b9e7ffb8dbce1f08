//! Small linear-algebra kernels not covered by `nalgebra`'s dense routines:
//! a tridiagonal (Thomas) solver and a symmetric banded LDLᵀ factorization.

use crate::error::{Error, Result};

/// Solves a tridiagonal system with sub-diagonal `a` (a[0] unused),
/// diagonal `b` and super-diagonal `c` (c[n−1] unused).
pub fn solve_tridiagonal(a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    let mut cp = vec![0.0; n];
    let mut dp = vec![0.0; n];
    let mut piv = b[0];
    if piv == 0.0 {
        return Err(Error::Numerical("zero pivot in tridiagonal solve".into()));
    }
    cp[0] = if n > 1 { c[0] / piv } else { 0.0 };
    dp[0] = d[0] / piv;
    for i in 1..n {
        piv = b[i] - a[i] * cp[i - 1];
        if piv == 0.0 {
            return Err(Error::Numerical("zero pivot in tridiagonal solve".into()));
        }
        cp[i] = if i + 1 < n { c[i] / piv } else { 0.0 };
        dp[i] = (d[i] - a[i] * dp[i - 1]) / piv;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = dp[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = dp[i] - cp[i] * x[i + 1];
    }
    Ok(x)
}

/// Symmetric banded matrix stored by lower diagonals: `band[i][k]` = A[i][i−k]
/// for k = 0..=bw.
#[derive(Debug, Clone)]
pub struct BandedSym {
    pub n: usize,
    pub bw: usize,
    band: Vec<f64>,
}

impl BandedSym {
    pub fn zeros(n: usize, bw: usize) -> Self {
        BandedSym { n, bw, band: vec![0.0; n * (bw + 1)] }
    }

    #[inline]
    fn idx(&self, i: usize, k: usize) -> usize {
        i * (self.bw + 1) + k
    }

    /// Adds v to A[i][j] (and, by symmetry, A[j][i]).
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        let k = hi - lo;
        assert!(k <= self.bw, "entry outside band");
        let id = self.idx(hi, k);
        self.band[id] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        let k = hi - lo;
        if k > self.bw {
            0.0
        } else {
            self.band[self.idx(hi, k)]
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            y[i] += self.band[self.idx(i, 0)] * x[i];
            for k in 1..=self.bw.min(i) {
                let v = self.band[self.idx(i, k)];
                y[i] += v * x[i - k];
                y[i - k] += v * x[i];
            }
        }
        y
    }

    /// LDLᵀ factorization without pivoting. Returns the factor and the
    /// number of non-positive pivots (0 for a positive-definite matrix).
    pub fn ldlt(&self) -> Result<(BandedLdlt, usize)> {
        let n = self.n;
        let bw = self.bw;
        let mut l = self.band.clone();
        let mut d = vec![0.0; n];
        let mut nonpos = 0;
        let stride = bw + 1;
        for j in 0..n {
            // d_j = A_jj − Σ_k L_jk² d_k
            let kmin = j.saturating_sub(bw);
            let mut dj = l[j * stride];
            for k in kmin..j {
                let ljk = l[j * stride + (j - k)];
                dj -= ljk * ljk * d[k];
            }
            if dj == 0.0 || !dj.is_finite() {
                return Err(Error::Numerical(format!("singular pivot at row {j}")));
            }
            if dj < 0.0 {
                nonpos += 1;
            }
            d[j] = dj;
            // L_ij for i in j+1..=j+bw
            let imax = (j + bw).min(n - 1);
            for i in j + 1..=imax {
                let kmin_i = i.saturating_sub(bw);
                let mut v = l[i * stride + (i - j)];
                for k in kmin_i.max(kmin)..j {
                    v -= l[i * stride + (i - k)] * l[j * stride + (j - k)] * d[k];
                }
                l[i * stride + (i - j)] = v / dj;
            }
        }
        Ok((BandedLdlt { n, bw, l, d }, nonpos))
    }
}

/// Factor produced by [`BandedSym::ldlt`].
#[derive(Debug, Clone)]
pub struct BandedLdlt {
    n: usize,
    bw: usize,
    l: Vec<f64>,
    d: Vec<f64>,
}

impl BandedLdlt {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let stride = self.bw + 1;
        let mut x = b.to_vec();
        for i in 0..n {
            let kmin = i.saturating_sub(self.bw);
            let mut v = x[i];
            for k in kmin..i {
                v -= self.l[i * stride + (i - k)] * x[k];
            }
            x[i] = v;
        }
        for i in 0..n {
            x[i] /= self.d[i];
        }
        for i in (0..n).rev() {
            let imax = (i + self.bw).min(n - 1);
            let mut v = x[i];
            for k in i + 1..=imax {
                v -= self.l[k * stride + (k - i)] * x[k];
            }
            x[i] = v;
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiagonal_matches_direct() {
        let a = [0.0, 1.0, 1.0, 1.0];
        let b = [4.0, 4.0, 4.0, 4.0];
        let c = [1.0, 1.0, 1.0, 0.0];
        let x = [1.0, -2.0, 3.0, 0.5];
        let d: Vec<f64> = (0..4)
            .map(|i| {
                b[i] * x[i] + if i > 0 { a[i] * x[i - 1] } else { 0.0 } + if i < 3 { c[i] * x[i + 1] } else { 0.0 }
            })
            .collect();
        let got = solve_tridiagonal(&a, &b, &c, &d).unwrap();
        for i in 0..4 {
            assert!((got[i] - x[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn banded_ldlt_solves_spd_system() {
        let n = 30;
        let bw = 4;
        let mut m = BandedSym::zeros(n, bw);
        for i in 0..n {
            m.add(i, i, 10.0 + i as f64 * 0.1);
            for k in 1..=bw {
                if i >= k {
                    m.add(i, i - k, -1.0 / (k as f64 + 1.0));
                }
            }
        }
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin()).collect();
        let b = m.matvec(&x);
        let (f, nonpos) = m.ldlt().unwrap();
        assert_eq!(nonpos, 0);
        let y = f.solve(&b);
        for i in 0..n {
            assert!((y[i] - x[i]).abs() < 1e-12);
        }
    }
}
