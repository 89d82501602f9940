//! Closed-form reference values and polynomial fitting of numerical samples.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Clone, Copy, Debug, Serialize)]
pub struct AsymptoticPrediction {
    pub lambda_plus: Complex64,
    pub lambda_minus: Complex64,
    /// Largest predicted real part.
    pub growth: f64,
    /// `dIm λ / dRe λ` along the unstable branch.
    pub locus_slope: f64,
    pub g: f64,
    pub mu: f64,
    pub eps: f64,
}

/// Leading-order Benjamin–Feir pair
/// `λ± = √g(iμ/2 ± με/(2√2))`.
pub fn predict_lambda(mu: f64, eps: f64, g: f64) -> AsymptoticPrediction {
    let sg = g.sqrt();
    let re = sg * mu * eps / (2.0 * std::f64::consts::SQRT_2);
    let im = sg * mu / 2.0;
    let slope = if eps == 0.0 { f64::INFINITY } else { mu.signum() * std::f64::consts::SQRT_2 / eps.abs() };
    AsymptoticPrediction {
        lambda_plus: Complex64::new(re, im),
        lambda_minus: Complex64::new(-re, im),
        growth: re.abs(),
        locus_slope: slope,
        g,
        mu,
        eps,
    }
}

/// Flat-water frequencies `ω± = √g((μ+k) ± √|μ+k|)`; eigenvalues are `iω±`.
pub fn flat_dispersion(k: i64, mu: f64, g: f64) -> (f64, f64) {
    let x = k as f64 + mu;
    let sg = g.sqrt();
    (sg * (x + x.abs().sqrt()), sg * (x - x.abs().sqrt()))
}

/// Leading expansions of the reduced matrix `A_{μ,ε}` (1-based entries
/// `[j-1][k-1]`), at `g = 1`, through `O(ε²)`.
pub fn reference_a(mu: f64, eps: f64) -> [[Complex64; 4]; 4] {
    let z = Complex64::new(0.0, 0.0);
    let e2 = eps * eps;
    let mut a = [[z; 4]; 4];
    a[0][0] = I * mu * (1.0 + 1.5 * e2);
    a[0][1] = -I * mu * eps;
    a[0][3] = Complex64::from(mu * (1.0 - e2));
    a[1][0] = -I * mu * eps;
    a[1][1] = I * mu * (0.5 - 1.25 * e2);
    a[2][1] = Complex64::from(-e2);
    a[2][2] = I * mu * (0.5 - 1.25 * e2);
    a[2][3] = -1.5 * I * mu * eps;
    a[3][0] = Complex64::from(-1.0);
    a[3][2] = -0.5 * I * mu * eps;
    a[3][3] = I * mu;
    a
}

/// Leading sideband entries `(B₂₁, B₂₃, B₃₄)` at `λ = iμ/2`.
pub fn reference_b(mu: f64, eps: f64) -> (Complex64, Complex64, Complex64) {
    (0.75 * I * mu * eps, Complex64::from(-mu * mu / 8.0), 0.5 * I * mu * eps)
}

#[derive(Clone, Debug, Serialize)]
pub struct SeriesFit {
    pub abscissae: Vec<f64>,
    pub values: Vec<Complex64>,
    pub degree: usize,
    /// Coefficients of `x⁰, x¹, …` in the original variable.
    pub coefficients: Vec<Complex64>,
    /// Euclidean norm of the fit residual.
    pub residual: f64,
    pub condition: f64,
    pub warning: Option<String>,
}

const MAX_CONDITION: f64 = 1e10;

struct Design {
    vmat: DMatrix<f64>,
    svd: nalgebra::SVD<f64, nalgebra::Dyn, nalgebra::Dyn>,
    scale: f64,
    degree: usize,
    condition: f64,
    warning: Option<String>,
}

fn design(xs: &[f64], degree: usize) -> Result<Design> {
    let distinct = {
        let mut v = xs.to_vec();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v.dedup();
        v.len()
    };
    if distinct < degree + 2 {
        return Err(Error::Fit(format!("{distinct} distinct abscissae cannot test a degree-{degree} fit")));
    }
    let scale = xs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return Err(Error::Fit("all abscissae are zero".into()));
    }
    let mut degree = degree;
    let mut warning = None;
    loop {
        let v = DMatrix::from_fn(xs.len(), degree + 1, |i, j| (xs[i] / scale).powi(j as i32));
        let svd = v.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        let condition = smax / smin;
        if condition <= MAX_CONDITION || degree == 0 {
            return Ok(Design { vmat: v, svd, scale, degree, condition, warning });
        }
        warning = Some(format!("Vandermonde condition {condition:e}; degree lowered to {}", degree - 1));
        degree -= 1;
    }
}

impl Design {
    fn solve(&self, ys: &[Complex64]) -> (Vec<Complex64>, DVector<Complex64>) {
        let re = DVector::from_iterator(ys.len(), ys.iter().map(|z| z.re));
        let im = DVector::from_iterator(ys.len(), ys.iter().map(|z| z.im));
        let cr = self.svd.solve(&re, 0.0).expect("SVD carries both factors");
        let ci = self.svd.solve(&im, 0.0).expect("SVD carries both factors");
        let coeffs: Vec<Complex64> = (0..=self.degree)
            .map(|j| Complex64::new(cr[j], ci[j]) / self.scale.powi(j as i32))
            .collect();
        let fit_r = &self.vmat * &cr;
        let fit_i = &self.vmat * &ci;
        let res = DVector::from_fn(ys.len(), |i, _| Complex64::new(re[i] - fit_r[i], im[i] - fit_i[i]));
        (coeffs, res)
    }
}

/// Least-squares polynomial of the given degree through `(xs, ys)`.
pub fn fit_series(xs: &[f64], ys: &[Complex64], degree: usize) -> Result<SeriesFit> {
    if xs.len() != ys.len() {
        return Err(Error::Fit("abscissae and values differ in length".into()));
    }
    let d = design(xs, degree)?;
    let (coefficients, res) = d.solve(ys);
    Ok(SeriesFit {
        abscissae: xs.to_vec(),
        values: ys.to_vec(),
        degree: d.degree,
        coefficients,
        residual: res.norm(),
        condition: d.condition,
        warning: d.warning,
    })
}

/// Fits every component of vector-valued samples with one design matrix.
/// Returns per-component coefficients and the total residual norm.
pub fn fit_vector_series(xs: &[f64], ys: &[Vec<Complex64>], degree: usize) -> Result<(Vec<Vec<Complex64>>, f64)> {
    if xs.len() != ys.len() || ys.is_empty() {
        return Err(Error::Fit("sample count mismatch".into()));
    }
    let d = design(xs, degree)?;
    let dim = ys[0].len();
    let mut all = Vec::with_capacity(dim);
    let mut res2 = 0.0;
    for c in 0..dim {
        let col: Vec<Complex64> = ys.iter().map(|y| y[c]).collect();
        let (coeffs, res) = d.solve(&col);
        res2 += res.norm_squared();
        all.push(coeffs);
    }
    Ok((all, res2.sqrt()))
}

#[derive(Clone, Debug, Serialize)]
pub struct RemainderEstimate {
    pub residual_full: f64,
    pub residual_half: f64,
    pub ratio: f64,
    /// `log₂` of the ratio.
    pub order: f64,
}

/// Fits on `xs` and on `xs/2` and compares the residual norms.
pub fn remainder_order(
    xs: &[f64],
    degree: usize,
    mut sample: impl FnMut(f64) -> Result<Vec<Complex64>>,
) -> Result<RemainderEstimate> {
    let full: Vec<Vec<Complex64>> = xs.iter().map(|&x| sample(x)).collect::<Result<_>>()?;
    let halves: Vec<f64> = xs.iter().map(|x| 0.5 * x).collect();
    let half: Vec<Vec<Complex64>> = halves.iter().map(|&x| sample(x)).collect::<Result<_>>()?;
    let (_, rf) = fit_vector_series(xs, &full, degree)?;
    let (_, rh) = fit_vector_series(&halves, &half, degree)?;
    let ratio = rf / rh;
    Ok(RemainderEstimate { residual_full: rf, residual_half: rh, ratio, order: ratio.log2() })
}

/// `log₂(r(x)/r(x/2))` for a residual measured at two scales.
pub fn halving_order(at_full: f64, at_half: f64) -> f64 {
    (at_full / at_half).log2()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prediction_example() {
        let p = predict_lambda(0.0025, 0.05, 1.0);
        assert!((p.lambda_plus.re - 4.4194e-5).abs() < 1e-9);
        assert!((p.lambda_plus.im - 0.00125).abs() < 1e-16);
        let flat = predict_lambda(0.0025, 0.0, 1.0);
        assert_eq!(flat.growth, 0.0);
        let g4 = predict_lambda(0.0025, 0.05, 4.0);
        assert!((g4.lambda_plus - p.lambda_plus * 2.0).norm() < 1e-18);
        assert!((p.locus_slope - 28.284271247461902).abs() < 1e-12);
    }

    #[test]
    fn prediction_symmetries() {
        let a = predict_lambda(0.01, 0.05, 1.0);
        let b = predict_lambda(0.01, -0.05, 1.0);
        let c = predict_lambda(0.02, 0.05, 1.0);
        assert_eq!(a.lambda_plus.re, -b.lambda_plus.re);
        assert!((c.lambda_plus.im - 2.0 * a.lambda_plus.im).abs() < 1e-18);
    }

    #[test]
    fn dispersion_examples() {
        assert_eq!(flat_dispersion(0, 0.0, 1.0), (0.0, 0.0));
        assert_eq!(flat_dispersion(1, 0.0, 1.0), (2.0, 0.0));
        assert_eq!(flat_dispersion(-1, 0.0, 1.0).0, 0.0);
        let (p, m) = flat_dispersion(-1, 0.1, 1.0);
        assert!((p - (-0.9 + 0.9f64.sqrt())).abs() < 1e-15);
        assert!((m - (-0.9 - 0.9f64.sqrt())).abs() < 1e-15);
    }

    #[test]
    fn exact_polynomial_fit() {
        let xs: Vec<f64> = (1..=6).map(|i| 0.01 * i as f64).collect();
        let c = [Complex64::new(0.3, -1.0), Complex64::new(-2.0, 0.5), Complex64::new(1.5, 2.0)];
        let ys: Vec<Complex64> = xs.iter().map(|&x| c[0] + c[1] * x + c[2] * x * x).collect();
        let f = fit_series(&xs, &ys, 2).unwrap();
        for (a, b) in f.coefficients.iter().zip(&c) {
            assert!((a - b).norm() < 1e-12 * b.norm().max(1.0), "{a} {b}");
        }
        assert!(f.residual < 1e-14);
    }

    #[test]
    fn constant_fit() {
        let xs = [1.0, 2.0, 3.0];
        let ys = [Complex64::new(4.0, 0.0); 3];
        let f = fit_series(&xs, &ys, 0).unwrap();
        assert!((f.coefficients[0] - ys[0]).norm() < 1e-14);
        assert!(f.residual < 1e-14);
    }

    #[test]
    fn too_few_points() {
        assert!(fit_series(&[0.1, 0.2, 0.3], &[Complex64::new(0.0, 0.0); 3], 2).is_err());
    }

    #[test]
    fn remainder_order_of_cubic_tail() {
        let xs: Vec<f64> = (1..=5).map(|i| 0.01 * i as f64).collect();
        let est = remainder_order(&xs, 2, |x| Ok(vec![Complex64::new(1.0 - 2.0 * x + 1.5 * x * x + 7.0 * x.powi(3), 0.0)])).unwrap();
        assert!((est.order - 3.0).abs() < 1e-6, "{}", est.order);
    }
}
