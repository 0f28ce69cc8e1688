//! Independent reference computations used to freeze expected values.
//! Nothing here calls into the library's numerical kernels.

/// Adaptive Simpson quadrature on `[a, b]`.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// `P(F_{d1,d2} > f)` by quadrature of the F density.
///
/// Substituting `w = d1 x / (d1 x + d2)` and then `w = v^2` turns the density
/// into `2 v^{d1-1} (1 - v^2)^{d2/2 - 1}` on `[0, 1)`, smooth for `d1 >= 1`,
/// `d2 >= 2`. The normalising constant is integrated the same way.
pub fn f_tail_quadrature(f: f64, d1: usize, d2: usize) -> f64 {
    let (a, b) = (d1 as f64 / 2.0, d2 as f64 / 2.0);
    let g = |v: f64| {
        if v <= 0.0 {
            if d1 == 1 { 2.0 } else { 0.0 }
        } else if v >= 1.0 {
            if d2 == 2 { 2.0 * v.powf(2.0 * a - 1.0) } else { 0.0 }
        } else {
            2.0 * v.powf(2.0 * a - 1.0) * (1.0 - v * v).powf(b - 1.0)
        }
    };
    let w0 = d1 as f64 * f / (d1 as f64 * f + d2 as f64);
    let v0 = w0.sqrt();
    let total = simpson(&g, 0.0, 1.0, 1e-15);
    let upper = simpson(&g, v0, 1.0, 1e-15);
    upper / total
}

/// `P(|Z| > z)` for a standard normal, by quadrature of the density.
pub fn normal_two_sided_tail(z: f64) -> f64 {
    let phi = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    1.0 - 2.0 * simpson(&phi, 0.0, z, 1e-14)
}

/// Least squares through the normal equations, solved by Gauss-Jordan
/// elimination with partial pivoting. Returns `(coefficients, ssr)`.
pub fn normal_equations(rows: &[Vec<f64>], y: &[f64]) -> (Vec<f64>, f64) {
    let k = rows[0].len();
    let mut aug = vec![vec![0.0; k + 1]; k];
    for (row, yi) in rows.iter().zip(y) {
        for i in 0..k {
            for j in 0..k {
                aug[i][j] += row[i] * row[j];
            }
            aug[i][k] += row[i] * yi;
        }
    }
    for c in 0..k {
        let p = (c..k)
            .max_by(|&a, &b| aug[a][c].abs().total_cmp(&aug[b][c].abs()))
            .unwrap();
        aug.swap(c, p);
        for r in 0..k {
            if r != c {
                let f = aug[r][c] / aug[c][c];
                for j in c..=k {
                    aug[r][j] -= f * aug[c][j];
                }
            }
        }
    }
    let b: Vec<f64> = (0..k).map(|i| aug[i][k] / aug[i][i]).collect();
    let ssr = rows
        .iter()
        .zip(y)
        .map(|(r, yi)| {
            let e = yi - r.iter().zip(&b).map(|(x, bb)| x * bb).sum::<f64>();
            e * e
        })
        .sum();
    (b, ssr)
}

/// Brute-force Granger F test of `x -> y` at `lag`: explicit design rows,
/// normal-equation solves and a quadrature p-value. Returns `(F, p)`.
pub fn granger_brute_force(x: &[f64], y: &[f64], lag: usize) -> (f64, f64) {
    let t = x.len();
    let mut unrestricted = Vec::new();
    let mut restricted = Vec::new();
    let mut target = Vec::new();
    for i in lag..t {
        let mut r = vec![1.0];
        for k in 1..=lag {
            r.push(y[i - k]);
        }
        restricted.push(r.clone());
        for k in 1..=lag {
            r.push(x[i - k]);
        }
        unrestricted.push(r);
        target.push(y[i]);
    }
    let (_, ssr_u) = normal_equations(&unrestricted, &target);
    let (_, ssr_r) = normal_equations(&restricted, &target);
    let df2 = target.len() - 2 * lag - 1;
    let f = ((ssr_r - ssr_u) / lag as f64) / (ssr_u / df2 as f64);
    (f, f_tail_quadrature(f.max(0.0), lag, df2))
}
