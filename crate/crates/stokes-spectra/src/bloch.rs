//! The Bloch operator `ℒ_{μ,ε}` on modes `-K..=K`:
//!
//! ```text
//! ℒ = [ (∂ₓ+iμ)∘p      |D+μ|      ]
//!     [ −(g+q)/ζ′      p(∂ₓ+iμ)   ]
//! ```
//!
//! It factors as `J·K` with `J = [[0, 1], [−1, 0]]` and `K` Hermitian.

use std::cmp::Ordering;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::background::{Background, Settings};
use crate::conformal::LinearizedCoefficients;
use crate::eigen;
use crate::error::{Error, Result};
use crate::fourier::{sign, FourierVector, StateVector};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Reduces `μ` into `[−½, ½)` by an integer shift, returned alongside.
pub fn reduce_mu(mu: f64) -> (f64, i64) {
    let mut shift = mu.round();
    let mut m = mu - shift;
    if m >= 0.5 {
        m -= 1.0;
        shift += 1.0;
    }
    (m, shift as i64)
}

#[derive(Clone, Debug)]
pub struct BlochMatrix {
    pub mu: f64,
    pub shift: i64,
    pub eps: f64,
    pub k: usize,
    pub g: f64,
    entries: DMatrix<Complex64>,
}

/// `M[i, j] = f_{i−j}`, the matrix of multiplication by `f`.
pub fn multiplication_matrix(f: &FourierVector) -> DMatrix<Complex64> {
    let n = f.len();
    DMatrix::from_fn(n, n, |i, j| f.get(i as i64 - j as i64))
}

fn wavenumbers(k: usize, mu: f64) -> Vec<f64> {
    (0..2 * k + 1).map(|j| j as f64 - k as f64 + mu).collect()
}

pub fn assemble(mu: f64, eps: f64, coeffs: &LinearizedCoefficients) -> Result<BlochMatrix> {
    let (m, shift) = reduce_mu(mu);
    let k = coeffs.p.truncation();
    if coeffs.gq_over_zp.truncation() != k {
        return Err(Error::TruncationMismatch(k, coeffs.gq_over_zp.truncation()));
    }
    let n = 2 * k + 1;
    let xi = wavenumbers(k, m);
    let mp = multiplication_matrix(coeffs.p.coeffs());
    let mr = multiplication_matrix(coeffs.gq_over_zp.coeffs());
    let mut a = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = I * xi[i] * mp[(i, j)];
            a[(n + i, j)] = -mr[(i, j)];
            a[(n + i, n + j)] = mp[(i, j)] * I * xi[j];
        }
        a[(i, n + i)] = xi[i].abs().into();
    }
    Ok(BlochMatrix { mu: m, shift, eps, k, g: coeffs.g, entries: a })
}

impl BlochMatrix {
    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<Complex64> {
        self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn apply(&self, u: &StateVector) -> StateVector {
        let v = nalgebra::DVector::from_vec(u.to_vec());
        StateVector::from_slice(self.k, (&self.entries * v).as_slice()).expect("dimension is fixed")
    }
}

/// `ℒ_μ u` built from the Fourier primitives instead of the matrix.
pub fn apply_operator(mu: f64, coeffs: &LinearizedCoefficients, u: &StateVector) -> StateVector {
    let p = coeffs.p.coeffs();
    let first = &p.product(&u.first).shifted_derivative(mu) + &u.second.abs_d(mu);
    let second = &(-&coeffs.gq_over_zp.coeffs().product(&u.first)) + &p.product(&u.second.shifted_derivative(mu));
    StateVector { first, second }
}

/// `L¹u = (i p u₁ + sign(D) u₂, i p u₂)`.
pub fn apply_l1(coeffs: &LinearizedCoefficients, u: &StateVector) -> StateVector {
    let ip = coeffs.p.coeffs().scale(I);
    let sgn = u.second.map_symbol(|k| sign(k as f64).into());
    StateVector { first: &ip.product(&u.first) + &sgn, second: ip.product(&u.second) }
}

/// `L♯u = (mean of u₂, 0)`.
pub fn apply_lsharp(u: &StateVector) -> StateVector {
    let k = u.truncation();
    let mut first = FourierVector::zeros(k);
    first.set(0, u.second.mean()).expect("mode 0 exists");
    StateVector { first, second: FourierVector::zeros(k) }
}

/// The constant skew factor `J`.
pub fn j_matrix(k: usize) -> DMatrix<Complex64> {
    let n = 2 * k + 1;
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = 1.0.into();
        j[(n + i, i)] = (-1.0).into();
    }
    j
}

/// The Hermitian factor `K` with `ℒ = J·K`.
pub fn hamiltonian_k(mu: f64, coeffs: &LinearizedCoefficients) -> DMatrix<Complex64> {
    let (m, _) = reduce_mu(mu);
    let k = coeffs.p.truncation();
    let n = 2 * k + 1;
    let xi = wavenumbers(k, m);
    let mp = multiplication_matrix(coeffs.p.coeffs());
    let mr = multiplication_matrix(coeffs.gq_over_zp.coeffs());
    let mut h = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            h[(i, j)] = mr[(i, j)];
            h[(i, n + j)] = -mp[(i, j)] * I * xi[j];
            h[(n + i, j)] = I * xi[i] * mp[(i, j)];
        }
        h[(n + i, n + i)] = xi[i].abs().into();
    }
    h
}

/// `R·conj(M)·R` with `R` reversing the modes of each component.
pub fn conjugate_reversal(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let dim = m.nrows();
    let n = dim / 2;
    let r = |i: usize| if i < n { n - 1 - i } else { n + (2 * n - 1 - i) };
    DMatrix::from_fn(dim, dim, |i, j| m[(r(i), r(j))].conj())
}

#[derive(Clone, Debug)]
pub struct SpectrumResult {
    /// Sorted by real part, then imaginary part.
    pub eigenvalues: Vec<Complex64>,
    pub vectors: Option<Vec<StateVector>>,
    pub residuals: Vec<f64>,
}

/// Deterministic order: real parts compared on a grid of `1e-10·scale` so
/// that roundoff-level real parts do not scramble the imaginary order.
pub fn sort_eigenvalues(v: &mut [Complex64]) {
    let scale = v.iter().fold(1.0f64, |m, z| m.max(z.norm()));
    let q = 1e-10 * scale;
    v.sort_by(|a, b| {
        let ka = (a.re / q).round();
        let kb = (b.re / q).round();
        ka.partial_cmp(&kb).unwrap_or(Ordering::Equal).then(a.im.partial_cmp(&b.im).unwrap_or(Ordering::Equal))
    });
}

/// Largest distance in a greedy nearest-neighbour pairing of two lists of
/// equal length.
pub fn match_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len(), "spectra of different sizes");
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for x in a {
        let mut best = (f64::INFINITY, usize::MAX);
        for (j, y) in b.iter().enumerate() {
            if !used[j] {
                let d = (x - y).norm();
                if d < best.0 {
                    best = (d, j);
                }
            }
        }
        used[best.1] = true;
        worst = worst.max(best.0);
    }
    worst
}

pub fn spectrum(m: &BlochMatrix, want_vectors: bool) -> Result<SpectrumResult> {
    let mut ev = eigen::eigenvalues(m.entries())?;
    sort_eigenvalues(&mut ev);
    if !want_vectors {
        return Ok(SpectrumResult { eigenvalues: ev, vectors: None, residuals: Vec::new() });
    }
    let mut vectors = Vec::with_capacity(ev.len());
    let mut residuals = Vec::with_capacity(ev.len());
    for &l in &ev {
        let (v, res) = eigen::eigenvector(m.entries(), l)?;
        vectors.push(StateVector::from_slice(m.k, v.as_slice())?);
        residuals.push(res);
    }
    Ok(SpectrumResult { eigenvalues: ev, vectors: Some(vectors), residuals })
}

/// Largest real part and an eigenvalue attaining it, ties to larger `Im`.
pub fn max_real_part(eigs: &[Complex64]) -> (f64, Complex64) {
    let mut best = eigs[0];
    for &z in &eigs[1..] {
        let tol = 1e-14 * z.norm().max(1.0);
        if z.re > best.re + tol || ((z.re - best.re).abs() <= tol && z.im > best.im) {
            best = z;
        }
    }
    (best.re, best)
}

/// Eigenvalue nearest `target`, ties to larger `|Re|`.
pub fn nearest(eigs: &[Complex64], target: Complex64) -> Complex64 {
    let mut best = eigs[0];
    for &z in &eigs[1..] {
        let d = (z - target).norm();
        let db = (best - target).norm();
        if d < db - 1e-15 || ((d - db).abs() <= 1e-15 && z.re.abs() > best.re.abs()) {
            best = z;
        }
    }
    best
}

/// Spectrum at `(μ, ε)`, computed at `g = 1` and scaled by `√g`.
pub fn spectrum_at(mu: f64, eps: f64, settings: &Settings) -> Result<Vec<Complex64>> {
    let unit = Settings { g: 1.0, ..settings.clone() };
    let bg = Background::new(eps, &unit)?;
    let m = assemble(mu, eps, &bg.coeffs)?;
    let sg = settings.g.sqrt();
    let mut ev: Vec<Complex64> = spectrum(&m, false)?.eigenvalues.into_iter().map(|z| z * sg).collect();
    sort_eigenvalues(&mut ev);
    Ok(ev)
}

/// `(max Re λ, argmax λ)` at `(μ, ε)`.
pub fn growth_rate(mu: f64, eps: f64, settings: &Settings) -> Result<(f64, Complex64)> {
    let ev = spectrum_at(mu, eps, settings)?;
    Ok(max_real_part(&ev))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::inner_product;

    fn coeffs(eps: f64, k: usize) -> LinearizedCoefficients {
        Background::new(eps, &Settings::series(k)).unwrap().coeffs
    }

    fn random_state(k: usize, seed: u64) -> StateVector {
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let mut f = || FourierVector::from_fn(k, |_| Complex64::new(next(), next()));
        StateVector { first: f(), second: f() }
    }

    #[test]
    fn mu_reduction() {
        assert_eq!(reduce_mu(0.25), (0.25, 0));
        assert_eq!(reduce_mu(1.25), (0.25, 1));
        assert_eq!(reduce_mu(0.5), (-0.5, 1));
        assert_eq!(reduce_mu(-0.3), (-0.3, 0));
    }

    #[test]
    fn flat_spectrum() {
        let k = 8;
        let c = coeffs(0.0, k);
        for &mu in &[0.1, 0.3] {
            let m = assemble(mu, 0.0, &c).unwrap();
            let ev = spectrum(&m, false).unwrap().eigenvalues;
            for j in -(k as i64)..=(k as i64) {
                let x = j as f64 + mu;
                for s in [1.0, -1.0] {
                    let w = I * (x + s * x.abs().sqrt());
                    assert!((nearest(&ev, w) - w).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn zero_has_multiplicity_four_at_rest() {
        let m = assemble(0.0, 0.0, &coeffs(0.0, 6)).unwrap();
        let ev = spectrum(&m, false).unwrap().eigenvalues;
        assert_eq!(ev.iter().filter(|z| z.norm() < 1e-6).count(), 4);
    }

    #[test]
    fn hamiltonian_factorization() {
        let c = coeffs(0.05, 8);
        let m = assemble(0.01, 0.05, &c).unwrap();
        let h = hamiltonian_k(0.01, &c);
        assert!((m.entries() - j_matrix(8) * &h).camax() < 1e-13);
        assert!((&h - h.adjoint()).camax() < 1e-13);
        let j = j_matrix(8);
        assert!((m.entries().adjoint() - &j * m.entries() * &j).camax() < 1e-12);
    }

    #[test]
    fn matrix_matches_operator() {
        let k = 8;
        let c = coeffs(0.05, k);
        for &mu in &[0.0, 0.0025, -0.2] {
            let m = assemble(mu, 0.05, &c).unwrap();
            for s in 0..5 {
                let u = random_state(k, s);
                let d = &m.apply(&u) - &apply_operator(mu, &c, &u);
                assert!(d.max_abs() < 1e-12);
            }
        }
    }

    #[test]
    fn decomposition_in_mu() {
        let k = 8;
        let c = coeffs(0.05, k);
        let mu = 0.01;
        let l0 = assemble(0.0, 0.05, &c).unwrap();
        let lm = assemble(mu, 0.05, &c).unwrap();
        let u = random_state(k, 42);
        let lhs = &lm.apply(&u) - &l0.apply(&u);
        let rhs = (&apply_l1(&c, &u) + &apply_lsharp(&u)).scale(mu.into());
        assert!((&lhs - &rhs).max_abs() < 1e-13);
    }

    #[test]
    fn negative_mu_is_conjugate_reversal() {
        let c = coeffs(0.05, 8);
        let a = assemble(0.1, 0.05, &c).unwrap();
        let b = assemble(-0.1, 0.05, &c).unwrap();
        assert!((conjugate_reversal(a.entries()) - b.entries()).camax() < 1e-14);
    }

    #[test]
    fn eigenvectors_have_small_residuals() {
        let m = assemble(0.01, 0.05, &coeffs(0.05, 6)).unwrap();
        let s = spectrum(&m, true).unwrap();
        let vs = s.vectors.as_ref().unwrap();
        for (v, r) in vs.iter().zip(&s.residuals) {
            assert!(*r <= 1e-8 * (inner_product(v, v).re / crate::fourier::TWO_PI).sqrt().max(1.0));
        }
    }

    #[test]
    fn growth_picks_largest_real_part() {
        let ev = vec![Complex64::new(0.0, 1.0), Complex64::new(1e-3, -2.0), Complex64::new(1e-3, 2.0)];
        assert_eq!(max_real_part(&ev).1, Complex64::new(1e-3, 2.0));
        assert_eq!(nearest(&ev, Complex64::new(0.0, 0.9)), ev[0]);
    }

    #[test]
    fn sorting_is_stable_against_roundoff() {
        let mut a = vec![Complex64::new(1e-15, 2.0), Complex64::new(-1e-15, 1.0), Complex64::new(0.0, -1.0)];
        sort_eigenvalues(&mut a);
        assert_eq!(a.iter().map(|z| z.im).collect::<Vec<_>>(), vec![-1.0, 1.0, 2.0]);
    }
}
