//! Lyapunov–Schmidt reduction of the Bloch eigenvalue problem onto the
//! four-dimensional generalized kernel of `ℒ_{0,ε}`.
//!
//! The eigenvalue problem `ℒ_μ U = λU` near the origin is equivalent to the
//! vanishing of a 4×4 determinant
//!
//! ```text
//! 𝒫(λ) = det(A − λI + B(λ))
//! A_jk = (ℒ_μ U_j, U_k)/(U_k, U_k)
//! I_jk = (U_j, U_k)/(U_k, U_k)
//! B_jk = (ℒ_μ W_j, U_k)/(U_k, U_k)
//! ```
//!
//! where the sideband functions `W_j ⊥ U` solve `Π(ℒ_μ − λ)W_j = −Πℒ_μ U_j`.
//! On a truncated space the reduction is exact, so roots of `𝒫` coincide with
//! eigenvalues of the Bloch matrix.

use nalgebra::{DMatrix, DVector, Dyn, Matrix4, SVD};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::background::Background;
use crate::bloch::assemble;
use crate::conformal::LinearizedCoefficients;
use crate::error::{Error, Result};
use crate::fourier::{inner_product, FourierVector, StateVector};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const GRAM_CONDITION_LIMIT: f64 = 10.0;
const RANK_TOL: f64 = 1e-10;
const NEWTON_MAX_STEPS: usize = 50;

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

#[derive(Clone, Debug)]
pub struct KernelBasis {
    /// `U₁ … U₄`.
    pub u: [StateVector; 4],
    pub u2_tilde: StateVector,
    /// `gram[(j, k)] = (U_j, U_k)`.
    pub gram: DMatrix<Complex64>,
    pub eps: f64,
    /// `∂ₐc` at `a = ε`.
    pub dc: f64,
    pub g: f64,
}

impl KernelBasis {
    pub fn truncation(&self) -> usize {
        self.u[0].truncation()
    }

    /// Columns are the stacked coefficient vectors of `U₁ … U₄`.
    pub fn matrix(&self) -> DMatrix<Complex64> {
        let cols: Vec<DVector<Complex64>> = self.u.iter().map(|u| DVector::from_vec(u.to_vec())).collect();
        DMatrix::from_columns(&cols)
    }

    /// Condition number of the Gram matrix after unit-diagonal scaling.
    pub fn gram_condition(&self) -> f64 {
        let d: Vec<f64> = (0..4).map(|j| self.gram[(j, j)].re.sqrt()).collect();
        let g = DMatrix::from_fn(4, 4, |i, j| self.gram[(i, j)] / (d[i] * d[j]));
        let s = g.singular_values();
        s.max() / s.min()
    }
}

/// Kernel basis of `ℒ_{0,ε}` built from the background wave and its tangent.
pub fn kernel_basis(bg: &Background) -> Result<KernelBasis> {
    let k = bg.truncation();
    let g = bg.g();
    let map = &bg.map;
    let grid = map.grid();
    let tangent = bg.tangent()?;

    let u1 = StateVector::new(FourierVector::zeros(k), FourierVector::constant(k, 1.0))?;
    let u2_tilde = StateVector::new(map.pullback(bg.wave.eta.coeffs()).derivative(), map.pullback(bg.v.coeffs()))?;
    let u2 = if bg.eps == 0.0 {
        StateVector::new(FourierVector::sin(k, 1, -1.0), FourierVector::cos(k, 1, g.sqrt()))?
    } else {
        let mean = u2_tilde.second.mean();
        let scaled = u2_tilde.scale((1.0 / bg.eps).into());
        &scaled - &u1.scale(mean / bg.eps)
    };
    let b_da_eta = grid.pointwise(&[bg.b.coeffs(), &tangent.eta], |v| v[0] * v[1]);
    let u3 = StateVector::new(map.pushforward(&tangent.eta), map.pullback(&(&tangent.psi - &b_da_eta)))?;
    let u4 = StateVector::new(
        map.zeta_prime().coeffs() * (1.0 / g),
        &map.pullback(bg.b.coeffs()) * (-1.0 / g),
    )?;

    let u = [u1, u2, u3, u4];
    let gram = DMatrix::from_fn(4, 4, |j, l| inner_product(&u[j], &u[l]));
    let basis = KernelBasis { u, u2_tilde, gram, eps: bg.eps, dc: tangent.speed, g };
    let cond = basis.gram_condition();
    if !(cond < GRAM_CONDITION_LIMIT) {
        return Err(Error::Gram(cond));
    }
    Ok(basis)
}

#[derive(Clone, Debug, Serialize)]
pub struct KernelResiduals {
    pub eps: f64,
    /// `‖ℒ₀U₁‖`
    pub u1: f64,
    /// `‖ℒ₀Ũ₂‖`
    pub u2_tilde: f64,
    /// `‖ℒ₀U₃ + ∂ₐc·Ũ₂‖`
    pub u3: f64,
    /// `‖ℒ₀U₄ + U₁‖`
    pub u4: f64,
    /// `(ℒ₀U₃, U₂)/(U₂, U₂)`
    pub a32: Complex64,
}

/// Residuals of the generalized-kernel relations.
pub fn check_generalized_kernel(basis: &KernelBasis, coeffs: &LinearizedCoefficients) -> Result<KernelResiduals> {
    let l0 = assemble(0.0, basis.eps, coeffs)?;
    let [u1, u2, u3, u4] = &basis.u;
    let lu3 = l0.apply(u3);
    Ok(KernelResiduals {
        eps: basis.eps,
        u1: l0.apply(u1).norm(),
        u2_tilde: l0.apply(&basis.u2_tilde).norm(),
        u3: (&lu3 + &basis.u2_tilde.scale(basis.dc.into())).norm(),
        u4: (&l0.apply(u4) + u1).norm(),
        a32: inner_product(&lu3, u2) / inner_product(u2, u2),
    })
}

/// How the sideband functions are computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum SidebandMethod {
    /// Partial Neumann sum up to the given power.
    Neumann { order: usize },
    /// Bordered linear solve on the truncated space.
    Direct,
}

#[derive(Clone, Debug)]
pub struct SidebandSet {
    pub w: [StateVector; 4],
    pub lambda: Complex64,
    pub mu: f64,
    pub method: SidebandMethod,
    /// Set when the Neumann series failed to contract and the direct solve
    /// was used instead.
    pub fell_back: bool,
    /// Largest ratio of successive Neumann terms.
    pub contraction: Option<f64>,
}

/// 4×4 reduced matrices at one `(μ, λ)`, indexed `[j-1][k-1]`.
#[derive(Clone, Debug, Serialize)]
pub struct ReducedSystem {
    pub a: [[Complex64; 4]; 4],
    pub i: [[Complex64; 4]; 4],
    pub b: [[Complex64; 4]; 4],
    pub lambda: Complex64,
    pub mu: f64,
    pub eps: f64,
}

impl ReducedSystem {
    /// `A − λI + B`
    pub fn matrix(&self) -> Matrix4<Complex64> {
        Matrix4::from_fn(|j, k| self.a[j][k] - self.lambda * self.i[j][k] + self.b[j][k])
    }

    pub fn determinant(&self) -> Complex64 {
        self.matrix().determinant()
    }

    /// Hadamard bound `∏ ‖row‖`, the natural size of the determinant.
    pub fn scale(&self) -> f64 {
        let m = self.matrix();
        (0..4).map(|j| m.row(j).norm()).product::<f64>().max(f64::MIN_POSITIVE)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RootPair {
    /// Root with the larger real part.
    pub plus: Complex64,
    pub minus: Complex64,
    pub iterations: [usize; 2],
    /// `|𝒫|` over its Hadamard scale at each root.
    pub residuals: [f64; 2],
    /// `ε = 0`: the pair is the flat-water pair, reported without iterating.
    pub degenerate: bool,
    pub mu: f64,
    pub eps: f64,
}

/// Taylor coefficients of `𝒫` about `λ = iμ/2` and the constants read off them.
#[derive(Clone, Debug, Serialize)]
pub struct PolynomialFit {
    pub mu: f64,
    pub eps: f64,
    /// Coefficients of `δ⁰ … δ³`, `δ = λ − iμ/2`.
    pub coefficients: [Complex64; 4],
    pub r1: Complex64,
    pub r2: Complex64,
    /// Constant term over its leading prediction `−ε²μ³/8`.
    pub constant_ratio: Complex64,
}

/// The reduction at one amplitude.
pub struct Reduction {
    pub basis: KernelBasis,
    coeffs: LinearizedCoefficients,
    k: usize,
    umat: DMatrix<Complex64>,
    l0: DMatrix<Complex64>,
    proj: DMatrix<Complex64>,
    xi: SVD<Complex64, Dyn, Dyn>,
    /// Smallest over largest singular value of the augmented system.
    pub xi_conditioning: f64,
}

impl Reduction {
    pub fn new(bg: &Background) -> Result<Self> {
        let basis = kernel_basis(bg)?;
        Self::with_basis(basis, bg.coeffs.clone())
    }

    pub fn with_basis(basis: KernelBasis, coeffs: LinearizedCoefficients) -> Result<Self> {
        let k = basis.truncation();
        let dim = 2 * (2 * k + 1);
        let umat = basis.matrix();
        let gram = umat.adjoint() * &umat;
        let ginv = gram
            .try_inverse()
            .ok_or_else(|| Error::Gram(f64::INFINITY))?;
        let proj = DMatrix::identity(dim, dim) - &umat * ginv * umat.adjoint();
        let l0 = assemble(0.0, basis.eps, &coeffs)?.into_entries();
        let pl0 = &proj * &l0;
        let mut aug = DMatrix::zeros(dim + 4, dim);
        aug.view_mut((0, 0), (dim, dim)).copy_from(&pl0);
        aug.view_mut((dim, 0), (4, dim)).copy_from(&umat.adjoint());
        let xi = aug.svd(true, true);
        let s = &xi.singular_values;
        let ratio = s.min() / s.max();
        if !(ratio > RANK_TOL) {
            return Err(Error::IllPosed(format!(
                "augmented system is rank deficient (σ_min/σ_max = {ratio:e}); K too small or ε too large"
            )));
        }
        Ok(Self { basis, coeffs, k, umat, l0, proj, xi, xi_conditioning: ratio })
    }

    pub fn eps(&self) -> f64 {
        self.basis.eps
    }

    pub fn g(&self) -> f64 {
        self.basis.g
    }

    fn dim(&self) -> usize {
        2 * (2 * self.k + 1)
    }

    fn to_state(&self, v: &DVector<Complex64>) -> StateVector {
        StateVector::from_slice(self.k, v.as_slice()).expect("dimension is fixed")
    }

    /// Matrix of `ℒ_μ` at this amplitude.
    pub fn operator(&self, mu: f64) -> Result<DMatrix<Complex64>> {
        Ok(assemble(mu, self.basis.eps, &self.coeffs)?.into_entries())
    }

    /// Orthogonal projection onto the complement of the kernel.
    pub fn project(&self, v: &StateVector) -> StateVector {
        self.to_state(&(&self.proj * DVector::from_vec(v.to_vec())))
    }

    fn xi_solve(&self, f: &DVector<Complex64>) -> DVector<Complex64> {
        let dim = self.dim();
        let mut rhs = DVector::zeros(dim + 4);
        rhs.rows_mut(0, dim).copy_from(f);
        self.xi.solve(&rhs, 0.0).expect("SVD carries both factors")
    }

    /// `Ξ F`: the solution `V ⊥ U` of `Πℒ₀V = F`, by constrained least squares.
    pub fn invert(&self, f: &StateVector) -> StateVector {
        self.to_state(&self.xi_solve(&DVector::from_vec(f.to_vec())))
    }

    /// Sideband functions at `(μ, λ)`.
    pub fn sideband(&self, mu: f64, lambda: Complex64, method: SidebandMethod) -> Result<SidebandSet> {
        let l = self.operator(mu)?;
        self.sideband_with(&l, mu, lambda, method)
    }

    fn sideband_with(&self, l: &DMatrix<Complex64>, mu: f64, lambda: Complex64, method: SidebandMethod) -> Result<SidebandSet> {
        let lu = l * &self.umat;
        let (cols, fell_back, contraction) = match method {
            SidebandMethod::Direct => (self.direct_sideband(l, &lu, lambda)?, false, None),
            SidebandMethod::Neumann { order } => match self.neumann_sideband(l, &lu, lambda, order) {
                Some((cols, ratio)) => (cols, false, Some(ratio)),
                None => (self.direct_sideband(l, &lu, lambda)?, true, None),
            },
        };
        let w = [0, 1, 2, 3].map(|j| self.to_state(&cols[j]));
        Ok(SidebandSet { w, lambda, mu, method, fell_back, contraction })
    }

    fn direct_sideband(&self, l: &DMatrix<Complex64>, lu: &DMatrix<Complex64>, lambda: Complex64) -> Result<Vec<DVector<Complex64>>> {
        let dim = self.dim();
        let mut m = DMatrix::zeros(dim + 4, dim + 4);
        m.view_mut((0, 0), (dim, dim)).copy_from(l);
        for i in 0..dim {
            m[(i, i)] -= lambda;
        }
        m.view_mut((0, dim), (dim, 4)).copy_from(&self.umat);
        m.view_mut((dim, 0), (4, dim)).copy_from(&self.umat.adjoint());
        let fact = m.lu();
        let mut rhs = DMatrix::zeros(dim + 4, 4);
        rhs.view_mut((0, 0), (dim, 4)).copy_from(&(-lu));
        let sol = fact
            .solve(&rhs)
            .ok_or_else(|| Error::IllPosed(format!("bordered sideband system singular at λ = {lambda}")))?;
        Ok((0..4).map(|j| sol.view((0, j), (dim, 1)).into_owned().column(0).into_owned()).collect())
    }

    /// Partial sums of `Σ (−S)^m Ξr` with `S = ΞΠ(ℒ_μ − ℒ₀ − λ)`; `None` if the
    /// terms stop shrinking.
    fn neumann_sideband(
        &self,
        l: &DMatrix<Complex64>,
        lu: &DMatrix<Complex64>,
        lambda: Complex64,
        order: usize,
    ) -> Option<(Vec<DVector<Complex64>>, f64)> {
        let dim = self.dim();
        let mut delta = l - &self.l0;
        for i in 0..dim {
            delta[(i, i)] -= lambda;
        }
        let pdelta = &self.proj * delta;
        let mut worst = 0.0f64;
        let mut out = Vec::with_capacity(4);
        for j in 0..4 {
            let r = -(&self.proj * lu.column(j));
            let mut term = self.xi_solve(&r);
            let mut sum = term.clone();
            for _ in 0..order {
                let next = -self.xi_solve(&(&pdelta * &term));
                let (a, b) = (next.norm(), term.norm());
                if b > 0.0 {
                    let ratio = a / b;
                    worst = worst.max(ratio);
                    if !(ratio < 1.0) {
                        return None;
                    }
                }
                sum += &next;
                term = next;
            }
            out.push(sum);
        }
        Some((out, worst))
    }

    /// Reduced matrices at `(μ, λ)`.
    pub fn matrices(&self, mu: f64, lambda: Complex64, method: SidebandMethod) -> Result<ReducedSystem> {
        let l = self.operator(mu)?;
        self.matrices_with(&l, mu, lambda, method)
    }

    fn matrices_with(&self, l: &DMatrix<Complex64>, mu: f64, lambda: Complex64, method: SidebandMethod) -> Result<ReducedSystem> {
        let side = self.sideband_with(l, mu, lambda, method)?;
        let u = &self.basis.u;
        let apply = |s: &StateVector| self.to_state(&(l * DVector::from_vec(s.to_vec())));
        let lu: Vec<StateVector> = u.iter().map(apply).collect();
        let lw: Vec<StateVector> = side.w.iter().map(apply).collect();
        let mut a = [[zero(); 4]; 4];
        let mut id = [[zero(); 4]; 4];
        let mut b = [[zero(); 4]; 4];
        for k in 0..4 {
            let nk = self.basis.gram[(k, k)];
            for j in 0..4 {
                a[j][k] = inner_product(&lu[j], &u[k]) / nk;
                id[j][k] = self.basis.gram[(j, k)] / nk;
                b[j][k] = inner_product(&lw[j], &u[k]) / nk;
            }
        }
        Ok(ReducedSystem { a, i: id, b, lambda, mu, eps: self.basis.eps })
    }

    /// `𝒫(λ; μ, ε)` and its Hadamard scale.
    pub fn char_poly(&self, mu: f64, lambda: Complex64, method: SidebandMethod) -> Result<(Complex64, f64)> {
        let sys = self.matrices(mu, lambda, method)?;
        Ok((sys.determinant(), sys.scale()))
    }

    /// The two roots of `𝒫` bifurcating from `iμ/2`.
    pub fn unstable_roots(&self, mu: f64) -> Result<RootPair> {
        self.unstable_roots_with(mu, &RootOptions::default())
    }

    pub fn unstable_roots_with(&self, mu: f64, opts: &RootOptions) -> Result<RootPair> {
        if !(opts.residual_tol > 0.0) {
            return Err(Error::InvalidParameter("Newton tolerance must be positive".into()));
        }
        let eps = self.basis.eps;
        let sg = self.g().sqrt();
        if eps == 0.0 {
            let (a, b) = degenerate_pair(mu);
            return Ok(RootPair {
                plus: a * sg,
                minus: b * sg,
                iterations: [0, 0],
                residuals: [0.0, 0.0],
                degenerate: true,
                mu,
                eps,
            });
        }
        let l = self.operator(mu)?;
        let eval = |lam: Complex64| -> Result<(Complex64, f64)> {
            let sys = self.matrices_with(&l, mu, lam, opts.method)?;
            Ok((sys.determinant(), sys.scale()))
        };
        let split = mu * eps / (2.0 * std::f64::consts::SQRT_2);
        let centre = Complex64::new(0.0, mu / 2.0);
        let mut roots = [zero(); 2];
        let mut its = [0usize; 2];
        let mut res = [0.0; 2];
        for (slot, sgn) in [1.0, -1.0].into_iter().enumerate() {
            let start = (centre + sgn * split) * sg;
            let (root, n, r) = newton(start, mu, opts.residual_tol, &eval)?;
            roots[slot] = root;
            its[slot] = n;
            res[slot] = r;
        }
        let (plus, minus, iterations, residuals) = if roots[0].re >= roots[1].re {
            (roots[0], roots[1], its, res)
        } else {
            (roots[1], roots[0], [its[1], its[0]], [res[1], res[0]])
        };
        if (plus - minus).norm() <= 1e-12 * mu.abs().max(1e-300) {
            return Err(Error::RootNotFound(format!("both starts converged to {plus}")));
        }
        Ok(RootPair { plus, minus, iterations, residuals, degenerate: false, mu, eps })
    }

    /// Samples `𝒫` on a circle about `iμ/2` and reads off its Taylor
    /// coefficients, then `r₁`, `r₂` from
    /// `𝒫 ≈ μδ²(1 + ε²r₁) − ε²r₂μ²δ − ε²μ³/8`.
    pub fn fit_polynomial(&self, mu: f64) -> Result<PolynomialFit> {
        let eps = self.basis.eps;
        if eps == 0.0 || mu == 0.0 {
            return Err(Error::Fit("the fit needs nonzero μ and ε".into()));
        }
        let l = self.operator(mu)?;
        let n = 16;
        let rho = mu.abs() / 8.0;
        let centre = Complex64::new(0.0, mu / 2.0) * self.g().sqrt();
        let mut samples = Vec::with_capacity(n);
        for j in 0..n {
            let z = Complex64::from_polar(rho, 2.0 * std::f64::consts::PI * j as f64 / n as f64);
            let sys = self.matrices_with(&l, mu, centre + z, SidebandMethod::Direct)?;
            samples.push((z, sys.determinant()));
        }
        let mut c = [zero(); 4];
        for (m, cm) in c.iter_mut().enumerate() {
            let s: Complex64 = samples.iter().map(|(z, p)| p / z.powu(m as u32)).sum();
            *cm = s / n as f64;
        }
        let e2 = eps * eps;
        Ok(PolynomialFit {
            mu,
            eps,
            coefficients: c,
            r1: (c[2] / mu - 1.0) / e2,
            r2: -c[1] / (e2 * mu * mu),
            constant_ratio: c[0] / (-e2 * mu.powi(3) / 8.0),
        })
    }
}

/// `r₁`, `r₂` extrapolated to `μ → 0` from fits at `μ` and `μ/2`; the raw
/// `r₁` of a single fit carries an `O(μ/ε²)` bias.
#[derive(Clone, Debug, Serialize)]
pub struct ConstantsEstimate {
    pub eps: f64,
    pub r1: Complex64,
    pub r2: Complex64,
    pub fits: [PolynomialFit; 2],
}

impl Reduction {
    pub fn estimate_constants(&self, mu: f64) -> Result<ConstantsEstimate> {
        let a = self.fit_polynomial(mu)?;
        let b = self.fit_polynomial(mu / 2.0)?;
        Ok(ConstantsEstimate {
            eps: self.basis.eps,
            r1: b.r1 * 2.0 - a.r1,
            r2: b.r2 * 2.0 - a.r2,
            fits: [a, b],
        })
    }
}

fn newton(
    start: Complex64,
    mu: f64,
    tol: f64,
    eval: &impl Fn(Complex64) -> Result<(Complex64, f64)>,
) -> Result<(Complex64, usize, f64)> {
    let h = 1e-7 * mu.abs().max(1e-3);
    let mut lam = start;
    let mut trace = Vec::new();
    for step in 1..=NEWTON_MAX_STEPS {
        let (p, scale) = eval(lam)?;
        trace.push((lam, p.norm() / scale));
        if p.norm() <= tol * scale {
            return Ok((lam, step - 1, p.norm() / scale));
        }
        let (pp, _) = eval(lam + h)?;
        let (pm, _) = eval(lam - h)?;
        let dp = (pp - pm) / (2.0 * h);
        if dp.norm() == 0.0 || !dp.is_finite() {
            break;
        }
        let d = p / dp;
        lam -= d;
        if d.norm() <= 1e-14 * lam.norm().max(mu.abs()) {
            let (p, scale) = eval(lam)?;
            return Ok((lam, step, p.norm() / scale));
        }
    }
    let tail: Vec<String> = trace.iter().rev().take(5).map(|(l, r)| format!("{l} (|𝒫|/scale {r:e})")).collect();
    Err(Error::RootNotFound(format!("Newton from {start} did not converge; last iterates: {}", tail.join(", "))))
}

/// Newton settings for [`Reduction::unstable_roots_with`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootOptions {
    pub method: SidebandMethod,
    /// Stop once `|𝒫| ≤ tol·scale`; a negligible step also stops.
    pub residual_tol: f64,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self { method: SidebandMethod::Direct, residual_tol: 1e-15 }
    }
}

/// Flat-water eigenvalues `i(1 + μ − √(1+μ))` and `i(−1 + μ + √(1−μ))` that
/// collide at the origin when `μ = 0`.
pub fn degenerate_pair(mu: f64) -> (Complex64, Complex64) {
    let a = I * (1.0 + mu - (1.0 + mu).abs().sqrt());
    let b = I * (-1.0 + mu + (1.0 - mu).abs().sqrt());
    (a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::background::Settings;
    use crate::bloch::{apply_l1, spectrum};
    use crate::fourier::Parity;

    fn reduction(eps: f64, settings: &Settings) -> Reduction {
        Reduction::new(&Background::new(eps, settings).unwrap()).unwrap()
    }

    fn state_distance(a: &StateVector, b: &StateVector) -> f64 {
        (a - b).norm()
    }

    #[test]
    fn flat_basis_is_explicit() {
        let k = 8;
        let r = reduction(0.0, &Settings::series(k));
        let want = [
            (FourierVector::zeros(k), FourierVector::constant(k, 1.0)),
            (FourierVector::sin(k, 1, -1.0), FourierVector::cos(k, 1, 1.0)),
            (FourierVector::cos(k, 1, 1.0), FourierVector::sin(k, 1, 1.0)),
            (FourierVector::constant(k, 1.0), FourierVector::zeros(k)),
        ];
        for (u, (f, s)) in r.basis.u.iter().zip(want) {
            assert!(state_distance(u, &StateVector::new(f, s).unwrap()) < 1e-14);
        }
    }

    #[test]
    fn first_order_basis_terms() {
        let k = 16;
        let eps = 1e-3;
        let r = reduction(eps, &Settings::series(k));
        let u2 = &r.basis.u[1];
        let u3 = &r.basis.u[2];
        let u4 = &r.basis.u[3];
        let e2 = (&u2.first - &FourierVector::sin(k, 1, -1.0)).scale((1.0 / eps).into());
        assert!(e2.distance(&FourierVector::sin(k, 2, -2.0)) < 1e-2);
        let e3 = (&u3.first - &FourierVector::cos(k, 1, 1.0)).scale((1.0 / eps).into());
        assert!(e3.distance(&FourierVector::cos(k, 2, 2.0)) < 1e-2);
        let e4 = (&u4.second).scale((1.0 / eps).into());
        assert!(e4.distance(&FourierVector::sin(k, 1, -1.0)) < 1e-2);
    }

    #[test]
    fn basis_parities_and_mean() {
        let r = reduction(0.05, &Settings::default().with_k(16));
        let [u1, u2, u3, u4] = &r.basis.u;
        assert_eq!(u2.parity(), (Parity::Odd, Parity::Even));
        assert_eq!(u3.parity(), (Parity::Even, Parity::Odd));
        assert_eq!(u4.parity(), (Parity::Even, Parity::Odd));
        assert_eq!(u1.second.parity(), Parity::Even);
        assert!(u2.first.mean().norm() < 1e-14);
        assert!(u2.second.mean().norm() < 1e-14);
        assert!(r.basis.gram_condition() < 2.0);
    }

    #[test]
    fn kernel_relations() {
        let bg = Background::new(0.05, &Settings::series(32)).unwrap();
        let r = Reduction::new(&bg).unwrap();
        let res = check_generalized_kernel(&r.basis, &bg.coeffs).unwrap();
        assert!(res.u1 < 1e-12);
        assert!(res.u4 < 1e-10);
        assert!((res.a32.re / -0.0025 - 1.0).abs() < 0.02, "{}", res.a32);
        let flat = Background::new(0.0, &Settings::series(8)).unwrap();
        let r0 = Reduction::new(&flat).unwrap();
        let res0 = check_generalized_kernel(&r0.basis, &flat.coeffs).unwrap();
        assert!(res0.u3 < 1e-11 && res0.u4 < 1e-11);
    }

    #[test]
    fn projection_properties() {
        let k = 8;
        let r = reduction(0.05, &Settings::series(k));
        for u in &r.basis.u {
            assert!(r.project(u).norm() < 1e-12);
        }
        let v = StateVector::new(
            FourierVector::from_fn(k, |m| Complex64::new(1.0 / (1.0 + (m * m) as f64), 0.3 * m as f64 / 9.0)),
            FourierVector::from_fn(k, |m| Complex64::new((m as f64).cos(), 0.1)),
        )
        .unwrap();
        let pv = r.project(&v);
        assert!(state_distance(&r.project(&pv), &pv) < 1e-12);
        for u in &r.basis.u {
            assert!(inner_product(&pv, u).norm() < 1e-12);
        }
        let odd_even = StateVector::new(FourierVector::sin(k, 3, 1.0), FourierVector::cos(k, 2, 1.0)).unwrap();
        assert_eq!(r.project(&odd_even).parity(), (Parity::Odd, Parity::Even));
    }

    #[test]
    fn flat_inverse_matches_closed_form() {
        let k = 8;
        let r = reduction(0.0, &Settings::series(k));
        let raw = StateVector::new(
            FourierVector::from_fn(k, |m| Complex64::new(0.2 / (1.0 + m.abs() as f64), 0.05 * m as f64)),
            FourierVector::from_fn(k, |m| Complex64::new(0.1 * (m as f64).sin(), 0.3 / (2.0 + m as f64 * m as f64))),
        )
        .unwrap();
        let f = r.project(&raw);
        let v = r.invert(&f);
        for u in &r.basis.u {
            assert!(inner_product(&v, u).norm() < 1e-12);
        }
        let back = r.project(&r.to_state(&(&r.l0 * DVector::from_vec(v.to_vec()))));
        assert!(state_distance(&back, &f) < 1e-12);
        for m in (-(k as i64)..=k as i64).filter(|m| m.abs() >= 2) {
            let km = m as f64;
            let want = (f.first.get(m) + I * km * f.second.get(m)) / (-km * km + km.abs());
            assert!((v.second.get(m) - want).norm() < 1e-13, "mode {m}");
        }
    }

    #[test]
    fn inverse_switches_parity() {
        let k = 12;
        let r = reduction(0.05, &Settings::series(k));
        let f = r.project(&StateVector::new(FourierVector::sin(k, 2, 1.0), FourierVector::cos(k, 3, 0.5)).unwrap());
        let v = r.invert(&f);
        assert!(v.first.is_even() && v.second.is_odd());
    }

    #[test]
    fn inverse_of_l1_u2() {
        // ΞΠL¹U₂ = (i/4)(−C, S) + (iε/4)(1 − 6C₂, −3S₂) + O(ε²)
        let k = 16;
        let leading = StateVector::new(FourierVector::cos(k, 1, -1.0), FourierVector::sin(k, 1, 1.0))
            .unwrap()
            .scale(I * 0.25);
        let first = StateVector::new(
            &FourierVector::constant(k, 1.0) - &FourierVector::cos(k, 2, 6.0),
            FourierVector::sin(k, 2, -3.0),
        )
        .unwrap()
        .scale(I * 0.25);
        let gap = |eps: f64| {
            let bg = Background::new(eps, &Settings::series(k)).unwrap();
            let r = Reduction::new(&bg).unwrap();
            let v = r.invert(&r.project(&apply_l1(&bg.coeffs, &r.basis.u[1])));
            state_distance(&v, &(&leading + &first.scale(eps.into())))
        };
        assert!(gap(0.0) < 1e-12, "{}", gap(0.0));
        let (a, b) = (gap(0.02), gap(0.01));
        assert!(a < 0.02, "{a}");
        assert!((a / b) > 3.0, "{}", a / b);
    }

    #[test]
    fn sideband_orthogonality_and_methods() {
        let r = reduction(0.05, &Settings::default().with_k(16));
        let mu = 0.01;
        let lam = Complex64::new(0.0, mu / 2.0);
        let d = r.sideband(mu, lam, SidebandMethod::Direct).unwrap();
        let n = r.sideband(mu, lam, SidebandMethod::Neumann { order: 6 }).unwrap();
        assert!(!n.fell_back);
        assert!(n.contraction.unwrap() < 0.5);
        for j in 0..4 {
            for u in &r.basis.u {
                assert!(inner_product(&d.w[j], u).norm() < 1e-11);
            }
            assert!(state_distance(&d.w[j], &n.w[j]) < 1e-10, "{}", state_distance(&d.w[j], &n.w[j]));
        }
        // at μ = 0 only the defect of the basis is left to correct
        let zero = r.sideband(0.0, Complex64::new(0.0, 0.0), SidebandMethod::Direct).unwrap();
        let worst = zero.w.iter().map(|w| w.norm()).fold(0.0, f64::max);
        assert!(worst < 1e-7, "{worst:e}");
        let flat = reduction(0.0, &Settings::series(8));
        let zero = flat.sideband(0.0, Complex64::new(0.0, 0.0), SidebandMethod::Direct).unwrap();
        assert!(zero.w.iter().all(|w| w.norm() < 1e-14));
    }

    #[test]
    fn neumann_falls_back_when_divergent() {
        let r = reduction(0.05, &Settings::series(8));
        let s = r.sideband(0.4, Complex64::new(0.0, 3.0), SidebandMethod::Neumann { order: 4 }).unwrap();
        assert!(s.fell_back);
    }

    #[test]
    fn structural_entries() {
        let r = reduction(0.05, &Settings::default().with_k(16));
        let sys = r.matrices(0.01, Complex64::new(0.0, 0.005), SidebandMethod::Direct).unwrap();
        assert!((sys.a[3][0] + 1.0).norm() < 1e-12);
        for (j, k) in [(1, 2), (1, 3), (3, 1)] {
            assert!(sys.a[j][k].norm() < 1e-12, "A{}{} = {}", j + 1, k + 1, sys.a[j][k]);
        }
        for j in 0..4 {
            assert!((sys.i[j][j] - 1.0).norm() < 1e-14);
        }
    }

    #[test]
    fn roots_are_eigenvalues() {
        let settings = Settings::default().with_k(16);
        let bg = Background::new(0.05, &settings).unwrap();
        let r = Reduction::new(&bg).unwrap();
        let mu = 0.0025;
        let roots = r.unstable_roots(mu).unwrap();
        assert!(roots.plus.re > 0.0);
        let ev = spectrum(&assemble(mu, 0.05, &bg.coeffs).unwrap(), false).unwrap().eigenvalues;
        for root in [roots.plus, roots.minus] {
            let d = ev.iter().map(|z| (z - root).norm()).fold(f64::INFINITY, f64::min);
            assert!(d < 1e-9, "{root}: {d:e}");
        }
    }

    #[test]
    fn flat_roots_are_reported() {
        let r = reduction(0.0, &Settings::series(8));
        let p = r.unstable_roots(0.01).unwrap();
        assert!(p.degenerate);
        let (a, b) = degenerate_pair(0.01);
        assert_eq!((p.plus, p.minus), (a, b));
        // both are roots of 𝒫 on the flat background
        for lam in [a, b] {
            let (v, s) = r.char_poly(0.01, lam, SidebandMethod::Direct).unwrap();
            assert!(v.norm() <= 1e-9 * s, "{v} {s}");
        }
    }
}
