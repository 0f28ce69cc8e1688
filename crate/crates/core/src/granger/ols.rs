//! Least-squares kernel shared by the Granger and ADF regressions.

use crate::error::{Error, Result};

/// Dense row-major matrix, just enough for building regression designs.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::LengthMismatch {
                left: cols,
                right: bad.len(),
            });
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    pub coefficients: Vec<f64>,
    pub ssr: f64,
    pub n_obs: usize,
    pub n_params: usize,
    /// Diagonal of `(X'X)^{-1}`.
    xtx_inv_diag: Vec<f64>,
}

impl OlsFit {
    /// Residual variance `ssr / (n - k)`.
    pub fn sigma2(&self) -> f64 {
        self.ssr / (self.n_obs - self.n_params) as f64
    }

    pub fn std_errors(&self) -> Vec<f64> {
        let s2 = self.sigma2();
        self.xtx_inv_diag.iter().map(|d| (s2 * d).sqrt()).collect()
    }

    /// Akaike criterion `n ln(ssr / n) + 2k`.
    pub fn aic(&self) -> f64 {
        let n = self.n_obs as f64;
        n * (self.ssr / n).ln() + 2.0 * self.n_params as f64
    }
}

/// Relative pivot size below which a column is treated as linearly dependent.
const RANK_TOL: f64 = 1e-10;

/// Ordinary least squares via Householder QR.
pub fn ols_fit(design: &Matrix, target: &[f64]) -> Result<OlsFit> {
    let (n, k) = (design.rows, design.cols);
    if target.len() != n {
        return Err(Error::LengthMismatch {
            left: n,
            right: target.len(),
        });
    }
    if k == 0 || n < k + 1 {
        return Err(Error::InsufficientData {
            needed: k + 1,
            got: n,
        });
    }

    // Column-major working copy.
    let mut a: Vec<Vec<f64>> = (0..k)
        .map(|c| (0..n).map(|r| design.get(r, c)).collect())
        .collect();
    let col_norms: Vec<f64> = a.iter().map(|c| norm(c)).collect();
    let mut qty = target.to_vec();

    for j in 0..k {
        let alpha = norm(&a[j][j..]);
        if col_norms[j] == 0.0 || alpha <= RANK_TOL * col_norms[j] {
            return Err(Error::SingularDesign);
        }
        let alpha = if a[j][j] > 0.0 { -alpha } else { alpha };
        let mut v: Vec<f64> = a[j][j..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        a[j][j] = alpha;
        for x in a[j][j + 1..].iter_mut() {
            *x = 0.0;
        }
        if vnorm2 == 0.0 {
            continue;
        }
        let reflect = |col: &mut [f64]| {
            let dot: f64 = v.iter().zip(col.iter()).map(|(p, q)| p * q).sum();
            let f = 2.0 * dot / vnorm2;
            for (x, vi) in col.iter_mut().zip(&v) {
                *x -= f * vi;
            }
        };
        for col in a.iter_mut().skip(j + 1) {
            reflect(&mut col[j..]);
        }
        reflect(&mut qty[j..]);
    }
    // After the rank check the diagonal is bounded away from zero, but a
    // column can still collapse during later reflections.
    if (0..k).any(|j| a[j][j].abs() <= RANK_TOL * col_norms[j]) {
        return Err(Error::SingularDesign);
    }

    let r = |i: usize, j: usize| a[j][i];
    let mut coef = vec![0.0; k];
    for i in (0..k).rev() {
        let s: f64 = (i + 1..k).map(|j| r(i, j) * coef[j]).sum();
        coef[i] = (qty[i] - s) / r(i, i);
    }

    // R^{-1}, upper triangular.
    let mut rinv = vec![vec![0.0; k]; k];
    for col in 0..k {
        for i in (0..=col).rev() {
            let rhs = if i == col { 1.0 } else { 0.0 };
            let s: f64 = (i + 1..=col).map(|j| r(i, j) * rinv[j][col]).sum();
            rinv[i][col] = (rhs - s) / r(i, i);
        }
    }
    let xtx_inv_diag = rinv
        .iter()
        .map(|row| row.iter().map(|x| x * x).sum())
        .collect();

    let ssr = (0..n)
        .map(|i| {
            let fitted: f64 = design.row(i).iter().zip(&coef).map(|(x, b)| x * b).sum();
            let e = target[i] - fitted;
            e * e
        })
        .sum();

    Ok(OlsFit {
        coefficients: coef,
        ssr,
        n_obs: n,
        n_params: k,
        xtx_inv_diag,
    })
}

fn norm(v: &[f64]) -> f64 {
    // Scaled to avoid overflow on large columns.
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    scale * v.iter().map(|x| (x / scale).powi(2)).sum::<f64>().sqrt()
}
