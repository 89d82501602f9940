//! Three calls for the demo page. Each returns a flat `Float64Array`;
//! complex numbers are interleaved `re, im`.

use stokes_spectra::asymptotics::predict_lambda;
use stokes_spectra::background::{Background, Settings};
use stokes_spectra::bloch::{assemble, max_real_part, nearest, spectrum};
use stokes_spectra::Complex64;
use wasm_bindgen::prelude::*;

const MAX_K: usize = 48;

fn background(eps: f64, k: usize) -> Result<Background, String> {
    if !(4..=MAX_K).contains(&k) {
        return Err(format!("K={k} outside 4..={MAX_K}"));
    }
    Background::new(eps, &Settings::default().with_k(k)).map_err(|e| e.to_string())
}

fn eigenvalues(bg: &Background, mu: f64) -> Result<Vec<Complex64>, String> {
    let m = assemble(mu, bg.eps, &bg.coeffs).map_err(|e| e.to_string())?;
    spectrum(&m, false).map(|s| s.eigenvalues).map_err(|e| e.to_string())
}

/// Sorted eigenvalues at `(μ, ε)`.
pub fn spectrum_values(eps: f64, mu: f64, k: usize) -> Result<Vec<f64>, String> {
    let bg = background(eps, k)?;
    Ok(eigenvalues(&bg, mu)?.iter().flat_map(|z| [z.re, z.im]).collect())
}

/// `[max Re λ, Re argmax, Im argmax, predicted Re λ₊, predicted Im λ₊]`.
pub fn growth_values(eps: f64, mu: f64, k: usize) -> Result<Vec<f64>, String> {
    let bg = background(eps, k)?;
    let (re, arg) = max_real_part(&eigenvalues(&bg, mu)?);
    let p = predict_lambda(mu, eps, 1.0);
    Ok(vec![re, arg.re, arg.im, p.lambda_plus.re.abs(), p.lambda_plus.im])
}

/// The unstable branch for `n` values of μ evenly spaced in `(0, mu_max]`,
/// tracked as the eigenvalue nearest the prediction.
pub fn locus_values(eps: f64, mu_max: f64, n: usize, k: usize) -> Result<Vec<f64>, String> {
    if n == 0 || n > 200 {
        return Err(format!("n={n} outside 1..=200"));
    }
    let bg = background(eps, k)?;
    let mut out = Vec::with_capacity(2 * n);
    for j in 1..=n {
        let mu = mu_max * j as f64 / n as f64;
        let p = predict_lambda(mu, eps, 1.0).lambda_plus;
        let z = nearest(&eigenvalues(&bg, mu)?, Complex64::new(p.re.abs(), p.im));
        out.extend([z.re, z.im]);
    }
    Ok(out)
}

#[wasm_bindgen]
pub fn spectrum_at(eps: f64, mu: f64, k: usize) -> Result<Vec<f64>, JsError> {
    spectrum_values(eps, mu, k).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn growth(eps: f64, mu: f64, k: usize) -> Result<Vec<f64>, JsError> {
    growth_values(eps, mu, k).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn locus(eps: f64, mu_max: f64, n: usize, k: usize) -> Result<Vec<f64>, JsError> {
    locus_values(eps, mu_max, n, k).map_err(|e| JsError::new(&e))
}
