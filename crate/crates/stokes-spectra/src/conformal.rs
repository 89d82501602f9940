//! Boundary trace of the conformal map that flattens the fluid domain, and
//! the Dirichlet–Neumann operator expressed through it.
//!
//! The stretch solves `ζ(x) = x + H(η∘ζ)(x)`. Compositions are evaluated by
//! sampling on the `4K+1` point grid and projecting back to modes `-K..=K`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fourier::{FourierVector, Grid, Parity, TrigPolynomial};

pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITER: usize = 200;
const INVERSE_TOL: f64 = 1e-13;
const INVERSE_MAX_STEPS: usize = 50;

#[derive(Clone, Debug)]
pub struct ConformalMap {
    zeta_offset: TrigPolynomial,
    zeta_prime: TrigPolynomial,
    eta_mean: f64,
    iterations: usize,
    residual: f64,
    steps: Vec<f64>,
    grid: Grid,
    // ζ, ζ′ and ζ⁻¹ at the grid points
    zeta_pts: Vec<f64>,
    zp_pts: Vec<f64>,
    inv_pts: Vec<f64>,
}

/// Fixed-point iteration `ζₙ₊₁ = x + H(η∘ζₙ)` from `ζ₀ = x`.
///
/// The mean of `η` is removed first (it does not move the map) and kept in
/// [`ConformalMap::eta_mean`].
pub fn solve_riemann_stretch(eta: &FourierVector, tol: f64, max_iter: usize) -> Result<ConformalMap> {
    let k = eta.truncation();
    let grid = Grid::new(k);
    let eta_mean = eta.mean().re;
    let mut e0 = eta.real_function();
    e0.set(0, Complex64::new(0.0, 0.0))?;

    let mut z = FourierVector::zeros(k);
    let mut steps = Vec::new();
    let mut converged = false;
    for _ in 0..max_iter {
        let pts = stretched_points(&grid, &z);
        let znew = grid.project(&Grid::eval_at(&e0, &pts)).hilbert().real_function();
        let step = grid.sample(&(&znew - &z)).iter().fold(0.0f64, |m, v| m.max(v.norm()));
        z = znew;
        steps.push(step);
        if step < tol {
            converged = true;
            break;
        }
    }
    let last = steps.last().copied().unwrap_or(f64::INFINITY);
    if !converged {
        return Err(Error::StretchNonConvergence { iterations: steps.len(), residual: last });
    }

    let zeta_pts = stretched_points(&grid, &z);
    let check = grid.project(&Grid::eval_at(&e0, &zeta_pts)).hilbert().real_function();
    let residual = grid.sample(&(&check - &z)).iter().fold(0.0f64, |m, v| m.max(v.norm()));

    let zeta_offset = TrigPolynomial::real_from(&z, Parity::Odd)?;
    let zp = &FourierVector::constant(k, 1.0) + &zeta_offset.coeffs().derivative();
    let zeta_prime = TrigPolynomial::real_from(&zp, Parity::Even)?;
    let zp_pts = grid.sample_real(zeta_prime.coeffs());

    // a denser look at ζ′ than the working grid
    let dense = 8 * grid.len();
    for j in 0..dense {
        let x = crate::fourier::TWO_PI * j as f64 / dense as f64;
        let v = zeta_prime.coeffs().eval(x).re;
        if v <= 0.0 {
            return Err(Error::SingularMap(format!("zeta' = {v:e} at x = {x:.6}")));
        }
    }

    let inv_pts = invert_points(&grid, zeta_offset.coeffs(), zeta_prime.coeffs())?;

    Ok(ConformalMap {
        zeta_offset,
        zeta_prime,
        eta_mean,
        iterations: steps.len(),
        residual,
        steps,
        grid,
        zeta_pts,
        zp_pts,
        inv_pts,
    })
}

fn stretched_points(grid: &Grid, z: &FourierVector) -> Vec<f64> {
    grid.points().iter().zip(grid.sample_real(z)).map(|(x, dz)| x + dz).collect()
}

// Per-point Newton solve of y + z(y) = x_j.
fn invert_points(grid: &Grid, z: &FourierVector, zp: &FourierVector) -> Result<Vec<f64>> {
    grid.points()
        .iter()
        .map(|&x| {
            let mut y = x;
            for _ in 0..INVERSE_MAX_STEPS {
                let f = y + z.eval(y).re - x;
                if f.abs() < INVERSE_TOL {
                    return Ok(y);
                }
                let d = zp.eval(y).re;
                if d <= 0.0 {
                    return Err(Error::SingularMap(format!("zeta' = {d:e} during inversion")));
                }
                y -= f / d;
            }
            let f = y + z.eval(y).re - x;
            if f.abs() < 10.0 * INVERSE_TOL {
                Ok(y)
            } else {
                Err(Error::SingularMap(format!("inversion stalled at x = {x:.6}, defect {f:e}")))
            }
        })
        .collect()
}

impl ConformalMap {
    pub fn identity(k: usize) -> Self {
        solve_riemann_stretch(&FourierVector::zeros(k), DEFAULT_TOL, DEFAULT_MAX_ITER)
            .expect("flat map always converges")
    }

    pub fn truncation(&self) -> usize {
        self.grid.truncation()
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `ζ(x) - x`, odd.
    pub fn zeta_offset(&self) -> &TrigPolynomial {
        &self.zeta_offset
    }

    /// `ζ′`, even and positive.
    pub fn zeta_prime(&self) -> &TrigPolynomial {
        &self.zeta_prime
    }

    pub fn eta_mean(&self) -> f64 {
        self.eta_mean
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Sup-norm fixed-point defect of the returned map.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// Sup-norm distances between successive iterates.
    pub fn iterate_steps(&self) -> &[f64] {
        &self.steps
    }

    /// `ζ′` sampled on the grid.
    pub fn zeta_prime_samples(&self) -> &[f64] {
        &self.zp_pts
    }

    /// `ζ_♯ f = f∘ζ`.
    pub fn pullback(&self, f: &FourierVector) -> FourierVector {
        self.grid.project(&Grid::eval_at(f, &self.zeta_pts))
    }

    /// `ζ_* f = ζ′·(f∘ζ)`.
    pub fn pushforward(&self, f: &FourierVector) -> FourierVector {
        let vals: Vec<Complex64> = Grid::eval_at(f, &self.zeta_pts)
            .into_iter()
            .zip(&self.zp_pts)
            .map(|(v, w)| v * w)
            .collect();
        self.grid.project(&vals)
    }

    /// `ζ_♯` or `ζ_*` depending on `weighted`.
    pub fn compose(&self, f: &FourierVector, weighted: bool) -> FourierVector {
        if weighted {
            self.pushforward(f)
        } else {
            self.pullback(f)
        }
    }

    /// `ζ⁻¹_♯ f = f∘ζ⁻¹`.
    pub fn pullback_inverse(&self, f: &FourierVector) -> FourierVector {
        self.grid.project(&Grid::eval_at(f, &self.inv_pts))
    }

    /// `G(η)f = ∂ₓ(ζ⁻¹_♯ H(ζ_♯ f))`.
    pub fn dirichlet_neumann(&self, f: &FourierVector) -> FourierVector {
        self.pullback_inverse(&self.pullback(f).hilbert()).derivative()
    }

    /// Divides a real function by `ζ′` on the grid.
    pub fn divide_by_zeta_prime(&self, f: &FourierVector) -> FourierVector {
        let vals: Vec<f64> =
            self.grid.sample_real(f).into_iter().zip(&self.zp_pts).map(|(v, w)| v / w).collect();
        self.grid.project_real(&vals)
    }
}

/// Horizontal and vertical velocity traces `B`, `V` evaluated from the
/// numerical Dirichlet–Neumann operator.
pub fn numeric_traces(map: &ConformalMap, eta: &FourierVector, psi: &FourierVector) -> Result<(TrigPolynomial, TrigPolynomial)> {
    let grid = map.grid();
    let gpsi = map.dirichlet_neumann(psi);
    let ex = eta.derivative();
    let px = psi.derivative();
    let b = grid.pointwise(&[&gpsi, &px, &ex], |v| (v[0] + v[1] * v[2]) / (1.0 + v[2] * v[2]));
    let v = grid.pointwise(&[&px, &b, &ex], |v| v[0] - v[1] * v[2]);
    Ok((TrigPolynomial::real_from(&b, Parity::Odd)?, TrigPolynomial::real_from(&v, Parity::Even)?))
}

#[derive(Clone, Debug)]
pub struct LinearizedCoefficients {
    pub p: TrigPolynomial,
    pub q: TrigPolynomial,
    /// `(g + q)/ζ′`
    pub gq_over_zp: TrigPolynomial,
    pub g: f64,
}

/// `p = (c − ζ_♯V)/ζ′`, `q = −p ∂ₓ(ζ_♯B)` and `(g + q)/ζ′`.
pub fn coefficient_functions(
    speed: f64,
    g: f64,
    map: &ConformalMap,
    b: &FourierVector,
    v: &FourierVector,
) -> Result<LinearizedCoefficients> {
    let grid = map.grid();
    let k = map.truncation();
    let num = &FourierVector::constant(k, speed) - &map.pullback(v);
    let p = map.divide_by_zeta_prime(&num);
    let db = map.pullback(b).derivative();
    let q = grid.pointwise(&[&p, &db], |v| -v[0] * v[1]);
    let r = map.divide_by_zeta_prime(&(&FourierVector::constant(k, g) + &q));
    Ok(LinearizedCoefficients {
        p: TrigPolynomial::real_from(&p, Parity::Even)?,
        q: TrigPolynomial::real_from(&q, Parity::Even)?,
        gq_over_zp: TrigPolynomial::real_from(&r, Parity::Even)?,
        g,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stokes::stokes_series;

    fn stokes_map(eps: f64, k: usize) -> (crate::stokes::StokesWave, ConformalMap) {
        let w = stokes_series(eps, 0.0, 1.0, 3, k).unwrap();
        let m = solve_riemann_stretch(w.eta.coeffs(), 1e-14, 200).unwrap();
        (w, m)
    }

    #[test]
    fn flat_map_is_identity() {
        let m = solve_riemann_stretch(&FourierVector::zeros(8), DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(m.iterations(), 1);
        assert_eq!(m.zeta_offset().coeffs().max_abs(), 0.0);
        let f = FourierVector::from_fn(8, |k| Complex64::new(1.0 / (1.0 + (k * k) as f64), 0.0));
        assert!(m.pullback(&f).distance(&f) < 1e-14);
        let g = m.dirichlet_neumann(&f);
        assert!(g.distance(&f.abs_d(0.0)) < 1e-13);
    }

    #[test]
    fn stretch_leading_terms() {
        // ζ = x + ε sin x + ε² sin 2x + O(ε³)
        let eps = 0.01;
        let (_, m) = stokes_map(eps, 16);
        let z = m.zeta_offset();
        assert!((z.sin_coeff(1) / eps - 1.0).abs() < 1e-3);
        assert!((z.sin_coeff(2) / (eps * eps) - 1.0).abs() < 2e-2);
    }

    #[test]
    fn iterate_steps_contract() {
        let (_, m) = stokes_map(0.05, 16);
        let s = m.iterate_steps();
        assert!(s.len() > 3);
        for w in s.windows(2).take(s.len().saturating_sub(3)) {
            if w[0] > 1e-13 {
                assert!(w[1] / w[0] < 0.2, "ratio {}", w[1] / w[0]);
            }
        }
    }

    #[test]
    fn chain_rule_for_pushforward() {
        let (_, m) = stokes_map(0.05, 16);
        let f = FourierVector::from_fn(16, |k| Complex64::new((0.5f64).powi(k.abs() as i32), 0.1 * k as f64 * (0.6f64).powi(k.abs() as i32)));
        let lhs = m.pushforward(&f.derivative());
        let rhs = m.pullback(&f).derivative();
        assert!(lhs.distance(&rhs) < 1e-10, "{}", lhs.distance(&rhs));
    }

    #[test]
    fn pullback_inverse_undoes_pullback() {
        let (_, m) = stokes_map(0.05, 16);
        let f = FourierVector::cos_series(16, &[0.2, 1.0, 0.3, -0.1]);
        let back = m.pullback_inverse(&m.pullback(&f));
        assert!(back.distance(&f) < 1e-11);
    }

    #[test]
    fn dno_annihilates_constants_and_has_zero_mean() {
        let (w, m) = stokes_map(0.05, 16);
        assert!(m.dirichlet_neumann(&FourierVector::constant(16, 1.0)).max_abs() < 1e-14);
        assert!(m.dirichlet_neumann(w.psi.coeffs()).mean().norm() < 1e-15);
    }

    #[test]
    fn mean_of_eta_does_not_move_the_map() {
        let w = stokes_series(0.05, 0.0, 1.0, 3, 16).unwrap();
        let shifted = &w.eta.coeffs().clone() + &FourierVector::constant(16, 3.0);
        let a = solve_riemann_stretch(w.eta.coeffs(), 1e-14, 200).unwrap();
        let b = solve_riemann_stretch(&shifted, 1e-14, 200).unwrap();
        assert_eq!(b.eta_mean(), 3.0);
        assert!(a.zeta_offset().coeffs().distance(b.zeta_offset().coeffs()) < 1e-15);
    }

    #[test]
    fn stokes_traces_and_coefficients() {
        let eps = 0.01;
        let (w, m) = stokes_map(eps, 16);
        let (b, v) = numeric_traces(&m, w.eta.coeffs(), w.psi.coeffs()).unwrap();
        assert!((b.sin_coeff(1) / eps - 1.0).abs() < 1e-3);
        assert!((v.cos_coeff(0) / (eps * eps) - 0.5).abs() < 1e-2);
        let zb = m.pullback(b.coeffs());
        assert!((zb.sin_coeff(2).re / (eps * eps) - 1.0).abs() < 2e-2);
        let c = coefficient_functions(w.speed, 1.0, &m, b.coeffs(), v.coeffs()).unwrap();
        assert!((c.p.cos_coeff(1) / eps + 2.0).abs() < 1e-2);
        assert!((c.p.cos_coeff(0) - 1.0) / (eps * eps) - 1.5 < 2e-2);
        assert!((c.gq_over_zp.cos_coeff(2) / (eps * eps) + 2.0).abs() < 2e-2);
    }

    #[test]
    fn flat_coefficients() {
        let m = ConformalMap::identity(8);
        let zero = FourierVector::zeros(8);
        let c = coefficient_functions(2.0, 4.0, &m, &zero, &zero).unwrap();
        assert!(c.p.coeffs().distance(&FourierVector::constant(8, 2.0)) < 1e-15);
        assert!(c.q.coeffs().max_abs() < 1e-15);
        assert!(c.gq_over_zp.coeffs().distance(&FourierVector::constant(8, 4.0)) < 1e-14);
    }

    #[test]
    fn dno_self_adjoint_and_positive() {
        let (_, m) = stokes_map(0.05, 16);
        let f = FourierVector::cos_series(16, &[0.0, 1.0, 0.4, 0.1]);
        let g = &FourierVector::sin_series(16, &[0.0, 0.3, -0.7, 0.2]) + &FourierVector::cos(16, 2, 0.5);
        let ip = |a: &FourierVector, b: &FourierVector| -> Complex64 {
            a.coeffs().iter().zip(b.coeffs()).map(|(x, y)| x * y.conj()).sum()
        };
        let lhs = ip(&m.dirichlet_neumann(&f), &g);
        let rhs = ip(&f, &m.dirichlet_neumann(&g));
        assert!((lhs - rhs).norm() < 1e-9);
        assert!(ip(&f, &m.dirichlet_neumann(&f)).re > 0.0);
    }

    #[test]
    fn shape_derivative_of_dno() {
        // [G(η+δη̄)ψ − G(η)ψ]/δ → −G(η)(Bη̄) − ∂ₓ(Vη̄)
        let k = 16;
        let (w, m) = stokes_map(0.05, k);
        let (b, v) = numeric_traces(&m, w.eta.coeffs(), w.psi.coeffs()).unwrap();
        let bar = FourierVector::cos_series(k, &[0.0, 0.3, 0.5, 0.2]);
        let g0 = m.dirichlet_neumann(w.psi.coeffs());
        let grid = m.grid();
        let expect = {
            let bb = b.coeffs().product(&bar);
            let vb = grid.pointwise(&[v.coeffs(), &bar], |x| x[0] * x[1]);
            &(-&m.dirichlet_neumann(&bb)) - &vb.derivative()
        };
        let mut errs = Vec::new();
        for delta in [1e-3, 5e-4] {
            let e2 = w.eta.coeffs() + &(&bar * delta);
            let m2 = solve_riemann_stretch(&e2, 1e-15, 300).unwrap();
            let fd = &(&m2.dirichlet_neumann(w.psi.coeffs()) - &g0) * (1.0 / delta);
            errs.push(fd.distance(&expect));
        }
        assert!(errs[0] < 1e-2, "{errs:?}");
        let ratio = errs[0] / errs[1];
        assert!((1.6..2.5).contains(&ratio), "first order in delta: {ratio}");
    }
}
