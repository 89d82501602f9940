//! Small-amplitude Stokes waves `(η, ψ, c)` in the amplitude coordinate `a`.
//!
//! With `C_k = cos(kx)`, `S_k = sin(kx)` and `g = 1`, `P = 0`:
//!
//! ```text
//! η = a C + ½a² C₂ + a³(⅛C + ⅜C₃)
//! ψ = a S + ½a² S₂ + a³(−⅛S + ⅜S₃)
//! c = 1 + ½a²
//! ```
//!
//! General `g` multiplies `ψ` and `c` by `√g`; `P` shifts `η` by `P/g`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::conformal::{numeric_traces, solve_riemann_stretch, ConformalMap};
use crate::error::{Error, Result};
use crate::fourier::{FourierVector, TrigPolynomial};

pub const MAX_SERIES_AMPLITUDE: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum WaveKind {
    /// Truncated series of the given order.
    Series { order: u32 },
    /// Series polished by Newton's method on the steady equations.
    Refined { modes: usize },
}

#[derive(Clone, Debug)]
pub struct StokesWave {
    pub amplitude: f64,
    pub bernoulli: f64,
    pub gravity: f64,
    pub eta: TrigPolynomial,
    pub psi: TrigPolynomial,
    pub speed: f64,
    pub kind: WaveKind,
}

/// `∂ₐ(η, ψ, c)` along the family at fixed `P`.
#[derive(Clone, Debug)]
pub struct WaveTangent {
    pub eta: FourierVector,
    pub psi: FourierVector,
    pub speed: f64,
}

fn check_series_args(a: f64, g: f64, order: u32, k: usize) -> Result<()> {
    if !(1..=3).contains(&order) {
        return Err(Error::InvalidOrder(order));
    }
    if !(a.abs() <= MAX_SERIES_AMPLITUDE) {
        return Err(Error::Amplitude(a));
    }
    if !(g > 0.0) || !g.is_finite() {
        return Err(Error::InvalidParameter(format!("gravity must be positive, got {g}")));
    }
    if k < 3 {
        return Err(Error::InvalidParameter(format!("truncation K={k} cannot hold the third harmonic")));
    }
    Ok(())
}

pub fn stokes_series(a: f64, p: f64, g: f64, order: u32, k: usize) -> Result<StokesWave> {
    check_series_args(a, g, order, k)?;
    let sg = g.sqrt();
    let mut eta = [p / g, a, 0.0, 0.0];
    let mut psi = [0.0, a, 0.0, 0.0];
    let mut c = 1.0;
    if order >= 2 {
        eta[2] = 0.5 * a * a;
        psi[2] = 0.5 * a * a;
        c += 0.5 * a * a;
    }
    if order >= 3 {
        let a3 = a * a * a;
        eta[1] += a3 / 8.0;
        eta[3] = 3.0 * a3 / 8.0;
        psi[1] -= a3 / 8.0;
        psi[3] = 3.0 * a3 / 8.0;
    }
    let psi: Vec<f64> = psi.iter().map(|v| v * sg).collect();
    Ok(StokesWave {
        amplitude: a,
        bernoulli: p,
        gravity: g,
        eta: TrigPolynomial::cosines(k, &eta),
        psi: TrigPolynomial::sines(k, &psi),
        speed: sg * c,
        kind: WaveKind::Series { order },
    })
}

/// Analytic `a`-derivative of the series family.
pub fn series_tangent(a: f64, g: f64, order: u32, k: usize) -> Result<WaveTangent> {
    check_series_args(a, g, order, k)?;
    let sg = g.sqrt();
    let mut eta = [0.0, 1.0, 0.0, 0.0];
    let mut psi = [0.0, 1.0, 0.0, 0.0];
    let mut dc = 0.0;
    if order >= 2 {
        eta[2] = a;
        psi[2] = a;
        dc = a;
    }
    if order >= 3 {
        let a2 = a * a;
        eta[1] += 3.0 * a2 / 8.0;
        eta[3] = 9.0 * a2 / 8.0;
        psi[1] -= 3.0 * a2 / 8.0;
        psi[3] = 9.0 * a2 / 8.0;
    }
    let psi: Vec<f64> = psi.iter().map(|v| v * sg).collect();
    Ok(WaveTangent {
        eta: FourierVector::cos_series(k, &eta),
        psi: FourierVector::sin_series(k, &psi),
        speed: sg * dc,
    })
}

#[derive(Clone, Debug)]
pub struct VelocityTraces {
    pub b: TrigPolynomial,
    pub v: TrigPolynomial,
    pub order: u32,
}

/// Closed-form traces to second order:
/// `B = εS + ½ε²S₂`, `V = εC + ½ε²(1 + C₂)`, scaled by `√g`.
pub fn velocity_traces(wave: &StokesWave) -> VelocityTraces {
    let k = wave.eta.truncation();
    let a = wave.amplitude;
    let sg = wave.gravity.sqrt();
    let order = match wave.kind {
        WaveKind::Series { order } => order.min(2),
        WaveKind::Refined { .. } => 2,
    };
    let (b2, v2) = if order >= 2 { (0.5 * a * a, 0.5 * a * a) } else { (0.0, 0.0) };
    VelocityTraces {
        b: TrigPolynomial::sines(k, &[0.0, sg * a, sg * b2]),
        v: TrigPolynomial::cosines(k, &[sg * v2, sg * a, sg * v2]),
        order,
    }
}

/// The two steady equations evaluated with the numerical DN operator.
pub fn steady_equations(wave: &StokesWave, map: &ConformalMap) -> (FourierVector, FourierVector) {
    let grid = map.grid();
    let eta = wave.eta.coeffs();
    let psi = wave.psi.coeffs();
    let gpsi = map.dirichlet_neumann(psi);
    let ex = eta.derivative();
    let px = psi.derivative();
    let f1 = &(&ex * wave.speed) + &gpsi;
    let (c, g, p) = (wave.speed, wave.gravity, wave.bernoulli);
    let f2 = grid.pointwise(&[&px, &gpsi, &ex, eta], |v| {
        let (px, gp, ex, e) = (v[0], v[1], v[2], v[3]);
        c * px - 0.5 * px * px + 0.5 * (gp + px * ex).powi(2) / (1.0 + ex * ex) - g * e + p
    });
    (f1, f2)
}

/// `(‖F₁‖, ‖F₂‖)` in `L²(T)`.
pub fn steady_residual(wave: &StokesWave, tol: f64) -> Result<(f64, f64)> {
    let map = solve_riemann_stretch(wave.eta.coeffs(), tol, 500)?;
    let (f1, f2) = steady_equations(wave, &map);
    Ok((f1.l2_norm(), f2.l2_norm()))
}

const REFINE_MAP_TOL: f64 = 1e-15;
const REFINE_MAX_STEPS: usize = 12;

/// Newton polish of a wave on the steady equations with `cos x` amplitude of
/// `η` held fixed. Unknowns are the mean and harmonics `2..=M` of `η`,
/// harmonics `1..=M` of `ψ`, and `c`.
pub fn refine(seed: &StokesWave, modes: usize) -> Result<StokesWave> {
    let k = seed.eta.truncation();
    let m = modes.min(k);
    if m < 1 {
        return Err(Error::Refinement("need at least one harmonic".into()));
    }
    let (g, p) = (seed.gravity, seed.bernoulli);
    let sg = g.sqrt();
    // work at g = 1, P = 0
    let base = StokesWave {
        amplitude: seed.amplitude,
        bernoulli: 0.0,
        gravity: 1.0,
        eta: TrigPolynomial::cosines(k, &{
            let mut c: Vec<f64> = (0..=m).map(|j| seed.eta.cos_coeff(j)).collect();
            c[0] -= p / g;
            c
        }),
        psi: TrigPolynomial::sines(k, &(0..=m).map(|j| seed.psi.sin_coeff(j) / sg).collect::<Vec<_>>()),
        speed: seed.speed / sg,
        kind: seed.kind,
    };
    let a1 = base.eta.cos_coeff(1);
    let n = 2 * m + 1;

    let pack = |w: &StokesWave| -> DVector<f64> {
        let mut u = DVector::zeros(n);
        u[0] = w.eta.cos_coeff(0);
        for j in 2..=m {
            u[j - 1] = w.eta.cos_coeff(j);
        }
        for j in 1..=m {
            u[m - 1 + j] = w.psi.sin_coeff(j);
        }
        u[2 * m] = w.speed;
        u
    };
    let unpack = |u: &DVector<f64>| -> StokesWave {
        let mut e = vec![0.0; m + 1];
        e[0] = u[0];
        e[1] = a1;
        for j in 2..=m {
            e[j] = u[j - 1];
        }
        let mut s = vec![0.0; m + 1];
        for j in 1..=m {
            s[j] = u[m - 1 + j];
        }
        StokesWave {
            eta: TrigPolynomial::cosines(k, &e),
            psi: TrigPolynomial::sines(k, &s),
            speed: u[2 * m],
            ..base.clone()
        }
    };
    let residual = |u: &DVector<f64>| -> Result<DVector<f64>> {
        let w = unpack(u);
        let map = solve_riemann_stretch(w.eta.coeffs(), REFINE_MAP_TOL, 500)?;
        let (f1, f2) = steady_equations(&w, &map);
        let mut r = DVector::zeros(n);
        for j in 1..=m {
            r[j - 1] = f1.sin_coeff(j).re;
        }
        r[m] = f2.cos_coeff(0).re;
        for j in 1..=m {
            r[m + j] = f2.cos_coeff(j).re;
        }
        Ok(r)
    };

    let mut u = pack(&base);
    let mut r = residual(&u)?;
    let mut rn = r.amax();
    if a1 != 0.0 {
        for _ in 0..REFINE_MAX_STEPS {
            if rn < 1e-15 {
                break;
            }
            let mut jac = DMatrix::zeros(n, n);
            for j in 0..n {
                let h = 1e-7 * u[j].abs().max(1e-3);
                let mut up = u.clone();
                up[j] += h;
                let mut um = u.clone();
                um[j] -= h;
                let col = (residual(&up)? - residual(&um)?) / (2.0 * h);
                jac.set_column(j, &col);
            }
            let du = jac
                .lu()
                .solve(&(-&r))
                .ok_or_else(|| Error::Refinement("singular Jacobian".into()))?;
            let un = &u + &du;
            let rnew = residual(&un)?;
            let rnn = rnew.amax();
            u = un;
            r = rnew;
            let stalled = rnn > 0.5 * rn;
            rn = rnn;
            if stalled && rn < 1e-13 {
                break;
            }
        }
    }
    if !(rn < 1e-12) {
        return Err(Error::Refinement(format!("steady residual {rn:e} after Newton")));
    }

    let w = unpack(&u);
    let mut eta = w.eta.coeffs().clone();
    eta.set(0, (eta.mean().re + p / g).into())?;
    Ok(StokesWave {
        amplitude: seed.amplitude,
        bernoulli: p,
        gravity: g,
        eta: TrigPolynomial::cosines(k, &(0..=k).map(|j| eta.cos_coeff(j).re).collect::<Vec<_>>()),
        psi: TrigPolynomial::sines(k, &(0..=k).map(|j| sg * w.psi.sin_coeff(j)).collect::<Vec<_>>()),
        speed: sg * w.speed,
        kind: WaveKind::Refined { modes: m },
    })
}

/// Default number of refined harmonics for truncation `k`.
pub fn refine_modes(k: usize) -> usize {
    (k / 2).clamp(1, 20)
}

/// Refined wave at amplitude `a`, seeded by the order-3 series.
pub fn refined_wave(a: f64, p: f64, g: f64, k: usize) -> Result<StokesWave> {
    refine(&stokes_series(a, p, g, 3, k)?, refine_modes(k))
}

/// Central-difference tangent of the refined family.
pub fn refined_tangent(a: f64, g: f64, k: usize) -> Result<WaveTangent> {
    let h = 1e-4;
    let wp = refined_wave(a + h, 0.0, g, k)?;
    let wm = refined_wave(a - h, 0.0, g, k)?;
    let s = 1.0 / (2.0 * h);
    Ok(WaveTangent {
        eta: &(wp.eta.coeffs() - wm.eta.coeffs()) * s,
        psi: &(wp.psi.coeffs() - wm.psi.coeffs()) * s,
        speed: (wp.speed - wm.speed) * s,
    })
}

impl StokesWave {
    /// Velocity traces from the numerical DN operator on `map`.
    pub fn numeric_traces(&self, map: &ConformalMap) -> Result<(TrigPolynomial, TrigPolynomial)> {
        numeric_traces(map, self.eta.coeffs(), self.psi.coeffs())
    }

    pub fn truncation(&self) -> usize {
        self.eta.truncation()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::Parity;

    #[test]
    fn first_order_wave() {
        let w = stokes_series(0.1, 0.0, 1.0, 1, 8).unwrap();
        assert!(w.eta.coeffs().distance(&FourierVector::cos(8, 1, 0.1)) < 1e-16);
        assert!(w.psi.coeffs().distance(&FourierVector::sin(8, 1, 0.1)) < 1e-16);
        assert_eq!(w.speed, 1.0);
    }

    #[test]
    fn speed_scales_with_root_g() {
        let a = 0.07;
        let w = stokes_series(a, 0.0, 9.0, 3, 8).unwrap();
        assert!((w.speed - 3.0 * (1.0 + 0.5 * a * a)).abs() < 1e-15);
    }

    #[test]
    fn flat_shifted_water() {
        let w = stokes_series(0.0, 5.0, 1.0, 3, 8).unwrap();
        assert!(w.eta.coeffs().distance(&FourierVector::constant(8, 5.0)) < 1e-15);
        assert_eq!(w.psi.coeffs().max_abs(), 0.0);
        assert_eq!(w.speed, 1.0);
        let (r1, r2) = steady_residual(&w, 1e-12).unwrap();
        assert!(r1 < 1e-12 && r2 < 1e-12);
    }

    #[test]
    fn third_order_coefficients() {
        let a = 0.1;
        let w = stokes_series(a, 0.0, 1.0, 3, 8).unwrap();
        assert!((w.eta.cos_coeff(1) - (a + a.powi(3) / 8.0)).abs() < 1e-16);
        assert!((w.eta.cos_coeff(3) - 3.0 * a.powi(3) / 8.0).abs() < 1e-16);
        // ψ a³ term: ¼(3 S C₂ + S) = −⅛S + ⅜S₃
        let s = FourierVector::sin(8, 1, 1.0);
        let expanded = &(&s.product(&FourierVector::cos(8, 2, 3.0)) + &s) * 0.25;
        assert!((w.psi.sin_coeff(1) - a - a.powi(3) * expanded.sin_coeff(1).re).abs() < 1e-16);
        assert!((w.psi.sin_coeff(3) - a.powi(3) * expanded.sin_coeff(3).re).abs() < 1e-16);
    }

    #[test]
    fn invalid_arguments() {
        assert_eq!(stokes_series(0.1, 0.0, 1.0, 4, 8).unwrap_err(), Error::InvalidOrder(4));
        assert!(matches!(stokes_series(0.3, 0.0, 1.0, 3, 8), Err(Error::Amplitude(_))));
        assert!(stokes_series(0.1, 0.0, -1.0, 3, 8).is_err());
    }

    #[test]
    fn parity_for_all_orders() {
        for order in 1..=3 {
            for &(a, p, g) in &[(0.1, 0.0, 1.0), (-0.05, 2.0, 4.0), (0.2, -1.0, 0.5)] {
                let w = stokes_series(a, p, g, order, 8).unwrap();
                assert!(w.eta.coeffs().has_parity(Parity::Even));
                assert!(w.psi.coeffs().has_parity(Parity::Odd));
            }
        }
    }

    #[test]
    fn g_covariance() {
        let (a, p, g) = (0.08, 1.5, 2.5);
        let w = stokes_series(a, p, g, 3, 8).unwrap();
        let w1 = stokes_series(a, 0.0, 1.0, 3, 8).unwrap();
        let shifted = w1.eta.coeffs() + &FourierVector::constant(8, p / g);
        assert!(w.eta.coeffs().distance(&shifted) < 1e-16);
        assert!(w.psi.coeffs().distance(&(w1.psi.coeffs() * g.sqrt())) < 1e-16);
        assert!((w.speed - g.sqrt() * w1.speed).abs() < 1e-15);
    }

    #[test]
    fn tangent_matches_difference_quotient() {
        let (a, h) = (0.05, 1e-5);
        let t = series_tangent(a, 1.0, 3, 8).unwrap();
        let wp = stokes_series(a + h, 0.0, 1.0, 3, 8).unwrap();
        let wm = stokes_series(a - h, 0.0, 1.0, 3, 8).unwrap();
        let fd = &(wp.eta.coeffs() - wm.eta.coeffs()) * (0.5 / h);
        assert!(fd.distance(&t.eta) < 1e-9);
        let fd = &(wp.psi.coeffs() - wm.psi.coeffs()) * (0.5 / h);
        assert!(fd.distance(&t.psi) < 1e-9);
        assert!(((wp.speed - wm.speed) * 0.5 / h - t.speed).abs() < 1e-9);
    }

    #[test]
    fn residual_fourth_order() {
        let r = |a: f64| steady_residual(&stokes_series(a, 0.0, 1.0, 3, 32).unwrap(), 1e-14).unwrap();
        let (a, b) = (r(0.02), r(0.01));
        let o1 = (a.0 / b.0).log2();
        let o2 = (a.1 / b.1).log2();
        assert!((3.5..4.5).contains(&o1), "{o1}");
        assert!((3.5..4.5).contains(&o2), "{o2}");
    }

    #[test]
    fn residual_invariant_under_bernoulli_shift() {
        let w0 = stokes_series(0.05, 0.0, 1.0, 3, 16).unwrap();
        let wp = stokes_series(0.05, 0.7, 1.0, 3, 16).unwrap();
        let (a, b) = (steady_residual(&w0, 1e-14).unwrap(), steady_residual(&wp, 1e-14).unwrap());
        assert!((a.0 - b.0).abs() < 1e-13 && (a.1 - b.1).abs() < 1e-13);
    }

    #[test]
    fn series_traces() {
        let w = stokes_series(0.0, 0.0, 1.0, 3, 8).unwrap();
        let t = velocity_traces(&w);
        assert_eq!(t.b.coeffs().max_abs(), 0.0);
        assert_eq!(t.v.coeffs().max_abs(), 0.0);
        let eps = 0.05;
        let t = velocity_traces(&stokes_series(eps, 0.0, 1.0, 3, 8).unwrap());
        assert_eq!(t.b.sin_coeff(1), eps);
        assert_eq!(t.v.cos_coeff(0), 0.5 * eps * eps);
    }

    #[test]
    fn refinement_solves_steady_equations() {
        let seed = stokes_series(0.1, 0.3, 2.0, 3, 24).unwrap();
        let before = steady_residual(&seed, 1e-14).unwrap();
        let w = refine(&seed, 12).unwrap();
        let after = steady_residual(&w, 1e-15).unwrap();
        assert!(before.0 > 1e-6);
        assert!(after.0 < 1e-12 && after.1 < 1e-11, "{after:?}");
        assert!((w.eta.cos_coeff(1) - seed.eta.cos_coeff(1)).abs() < 1e-15);
        assert!((w.eta.cos_coeff(2) - seed.eta.cos_coeff(2)).abs() < 1e-3);
        assert!(w.eta.coeffs().has_parity(Parity::Even));
        assert!(w.psi.coeffs().has_parity(Parity::Odd));
    }
}
