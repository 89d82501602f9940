//! The numbered acceptance checks, each returning the numbers it judged.

use std::collections::BTreeMap;
use std::time::Instant;

use num_complex::Complex64;
use serde::Serialize;

use crate::asymptotics::{fit_series, fit_vector_series, flat_dispersion, halving_order, predict_lambda};
use crate::background::{Background, Settings};
use crate::bloch::{assemble, hamiltonian_k, j_matrix, match_distance, max_real_part, nearest, sort_eigenvalues, spectrum};
use crate::error::Result;
use crate::fourier::FourierVector;
use crate::reduction::{check_generalized_kernel, Reduction, SidebandMethod};
use crate::stokes::{steady_residual, stokes_series};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Clone, Debug, Serialize)]
pub struct CriterionReport {
    pub id: u32,
    pub name: String,
    pub pass: bool,
    pub numbers: BTreeMap<String, f64>,
    pub detail: String,
    pub seconds: f64,
}

impl CriterionReport {
    fn new(id: u32, name: &str) -> Self {
        Self { id, name: name.into(), pass: true, numbers: BTreeMap::new(), detail: String::new(), seconds: 0.0 }
    }

    fn num(&mut self, key: &str, v: f64) {
        self.numbers.insert(key.into(), v);
    }

    /// Records a sub-check; the criterion passes only if all of them do.
    fn check(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.pass = false;
            if !self.detail.is_empty() {
                self.detail.push_str("; ");
            }
            self.detail.push_str(&what.into());
        }
    }

    fn within_time(&mut self, start: Instant, limit: f64) {
        self.seconds = start.elapsed().as_secs_f64();
        self.num("seconds", self.seconds);
        self.check(self.seconds < limit, format!("took {:.2} s, limit {limit} s", self.seconds));
    }

    fn failed(id: u32, name: &str, err: crate::Error, start: Instant) -> Self {
        let mut r = Self::new(id, name);
        r.pass = false;
        r.detail = format!("error: {err}");
        r.seconds = start.elapsed().as_secs_f64();
        r
    }

    pub fn line(&self) -> String {
        let status = if self.pass { "PASS" } else { "FAIL" };
        if self.detail.is_empty() {
            format!("criterion {:>2} {status}  {}", self.id, self.name)
        } else {
            format!("criterion {:>2} {status}  {}  ({})", self.id, self.name, self.detail)
        }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct AcceptanceOptions {
    /// Adds this multiple of `cos x` to `p` in every background.
    pub corrupt_p: Option<f64>,
}

impl AcceptanceOptions {
    fn background(&self, eps: f64, settings: &Settings) -> Result<Background> {
        let bg = Background::new(eps, settings)?;
        match self.corrupt_p {
            Some(d) => bg.with_corrupted_p(d),
            None => Ok(bg),
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn crel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm()
}

fn run(id: u32, name: &str, body: impl FnOnce(&mut CriterionReport) -> Result<()>) -> CriterionReport {
    let start = Instant::now();
    let mut r = CriterionReport::new(id, name);
    match body(&mut r) {
        Ok(()) => {
            if r.seconds == 0.0 {
                r.seconds = start.elapsed().as_secs_f64();
            }
            r
        }
        Err(e) => CriterionReport::failed(id, name, e, start),
    }
}

pub fn criterion_1(opts: &AcceptanceOptions) -> CriterionReport {
    run(1, "flat-water dispersion", |r| {
        let start = Instant::now();
        let k = 32;
        let bg = opts.background(0.0, &Settings::default().with_k(k))?;
        let mut worst = 0.0f64;
        for mu in [0.1, 0.3] {
            let ev = spectrum(&assemble(mu, 0.0, &bg.coeffs)?, false)?.eigenvalues;
            for m in -(k as i64 - 2)..=(k as i64 - 2) {
                let (p, q) = flat_dispersion(m, mu, 1.0);
                for w in [p, q] {
                    let want = I * w;
                    worst = worst.max((nearest(&ev, want) - want).norm());
                }
            }
        }
        r.num("max_error", worst);
        r.check(worst <= 1e-9, format!("max error {worst:e}"));
        r.within_time(start, 2.0);
        Ok(())
    })
}

pub fn criterion_2(opts: &AcceptanceOptions) -> CriterionReport {
    run(2, "Benjamin-Feir growth rate", |r| {
        let start = Instant::now();
        let settings = Settings::default();
        let mut errors = Vec::new();
        for (eps, tag) in [(0.05, "eps_0.05"), (0.025, "eps_0.025")] {
            let mu = eps * eps;
            let bg = opts.background(eps, &settings)?;
            let ev = spectrum(&assemble(mu, eps, &bg.coeffs)?, false)?.eigenvalues;
            let (growth, arg) = max_real_part(&ev);
            let pred = predict_lambda(mu, eps, 1.0);
            let err = rel(growth, pred.growth);
            let im_err = rel(arg.im, mu / 2.0);
            r.num(&format!("{tag}.growth"), growth);
            r.num(&format!("{tag}.predicted"), pred.growth);
            r.num(&format!("{tag}.rel_error"), err);
            r.num(&format!("{tag}.im_rel_error"), im_err);
            errors.push(err);
            if eps == 0.05 {
                r.check(err <= 0.15, format!("growth off by {:.2}%", 100.0 * err));
                r.check(im_err <= 0.05, format!("Im λ off by {:.2}%", 100.0 * im_err));
            }
        }
        r.check(errors[1] < errors[0], format!("error did not shrink: {:e} → {:e}", errors[0], errors[1]));
        r.within_time(start, 10.0);
        Ok(())
    })
}

pub fn criterion_3(opts: &AcceptanceOptions) -> CriterionReport {
    run(3, "locus slope", |r| {
        let eps = 0.05;
        let bg = opts.background(eps, &Settings::default())?;
        let mus = [0.0005, 0.001, 0.0015, 0.002, 0.0025];
        let mut re = Vec::new();
        let mut im = Vec::new();
        for &mu in &mus {
            let ev = spectrum(&assemble(mu, eps, &bg.coeffs)?, false)?.eigenvalues;
            let (_, arg) = max_real_part(&ev);
            re.push(arg.re);
            im.push(Complex64::from(arg.im));
        }
        let fit = fit_series(&re, &im, 1)?;
        let slope = fit.coefficients[1].re;
        let want = std::f64::consts::SQRT_2 / eps;
        r.num("slope", slope);
        r.num("predicted", want);
        r.num("rel_error", rel(slope, want));
        r.check(rel(slope, want) <= 0.15, format!("slope {slope:.3} vs {want:.3}"));
        Ok(())
    })
}

pub fn criterion_4(_opts: &AcceptanceOptions) -> CriterionReport {
    run(4, "Stokes residual order", |r| {
        let k = 64;
        let big = steady_residual(&stokes_series(0.04, 0.0, 1.0, 3, k)?, 1e-14)?;
        let small = steady_residual(&stokes_series(0.02, 0.0, 1.0, 3, k)?, 1e-14)?;
        let o1 = halving_order(big.0, small.0);
        let o2 = halving_order(big.1, small.1);
        r.num("order_f1", o1);
        r.num("order_f2", o2);
        for (name, o) in [("F1", o1), ("F2", o2)] {
            r.check((3.5..=4.5).contains(&o), format!("{name} order {o:.3}"));
        }
        Ok(())
    })
}

pub fn criterion_5(opts: &AcceptanceOptions) -> CriterionReport {
    run(5, "coefficient expansions", |r| {
        let k = 32;
        let settings = Settings::default().with_k(k);
        let xs: Vec<f64> = (1..=5).map(|i| 0.01 * i as f64).collect();
        let halves: Vec<f64> = xs.iter().map(|x| 0.5 * x).collect();
        let sample = |eps: f64| -> Result<[FourierVector; 4]> {
            let bg = opts.background(eps, &settings)?;
            Ok([
                bg.map.zeta_offset().coeffs().clone(),
                bg.coeffs.p.coeffs().clone(),
                bg.coeffs.q.coeffs().clone(),
                bg.coeffs.gq_over_zp.coeffs().clone(),
            ])
        };
        let full: Vec<[FourierVector; 4]> = xs.iter().map(|&e| sample(e)).collect::<Result<_>>()?;
        let half: Vec<[FourierVector; 4]> = halves.iter().map(|&e| sample(e)).collect::<Result<_>>()?;

        // (function, kind, mode, power, expected); kind 's' = sine, 'c' = cosine amplitude
        let names = ["zeta", "p", "q", "r"];
        let targets: [(usize, char, usize, usize, f64); 11] = [
            (0, 's', 1, 1, 1.0),
            (0, 's', 2, 2, 1.0),
            (1, 'c', 1, 1, -2.0),
            (1, 'c', 0, 2, 1.5),
            (1, 'c', 2, 2, -2.0),
            (2, 'c', 1, 1, -1.0),
            (2, 'c', 0, 2, 1.0),
            (2, 'c', 2, 2, -1.0),
            (3, 'c', 1, 1, -2.0),
            (3, 'c', 0, 2, 2.0),
            (3, 'c', 2, 2, -2.0),
        ];
        for (f, kind, mode, power, want) in targets {
            let ys: Vec<Complex64> = full
                .iter()
                .map(|s| {
                    let v = &s[f];
                    let c = if kind == 's' { v.sin_coeff(mode) } else { v.cos_coeff(mode) };
                    Complex64::from(c.re)
                })
                .collect();
            let fit = fit_series(&xs, &ys, 2)?;
            let got = fit.coefficients[power].re;
            let key = format!("{}.{}{}.eps{}", names[f], if kind == 's' { "sin" } else { "cos" }, mode, power);
            r.num(&key, got);
            r.check(rel(got, want) <= 0.02, format!("{key} = {got:.4}, expected {want}"));
        }
        for (f, name) in names.iter().enumerate() {
            let vf: Vec<Vec<Complex64>> = full.iter().map(|s| s[f].coeffs().to_vec()).collect();
            let vh: Vec<Vec<Complex64>> = half.iter().map(|s| s[f].coeffs().to_vec()).collect();
            let (_, rf) = fit_vector_series(&xs, &vf, 2)?;
            let (_, rh) = fit_vector_series(&halves, &vh, 2)?;
            let ratio = rf / rh;
            r.num(&format!("{name}.halving_ratio"), ratio);
            r.check((6.0..=10.0).contains(&ratio), format!("{name} remainder ratio {ratio:.3}"));
        }
        Ok(())
    })
}

pub fn criterion_6(opts: &AcceptanceOptions) -> CriterionReport {
    run(6, "kernel structure", |r| {
        let settings = Settings::series(32);
        let mut res = Vec::new();
        for eps in [0.05, 0.025] {
            let bg = opts.background(eps, &settings)?;
            let red = Reduction::new(&bg)?;
            res.push(check_generalized_kernel(&red.basis, &bg.coeffs)?);
        }
        let (a, b) = (&res[0], &res[1]);
        r.num("l0_u1", a.u1.max(b.u1));
        r.check(a.u1 <= 1e-12 && b.u1 <= 1e-12, format!("‖ℒ₀U₁‖ = {:e}", a.u1.max(b.u1)));
        for (name, x, y) in [("u2_tilde", a.u2_tilde, b.u2_tilde), ("u3", a.u3, b.u3), ("u4", a.u4, b.u4)] {
            let ratio = x / y;
            r.num(&format!("{name}.eps_0.05"), x);
            r.num(&format!("{name}.eps_0.025"), y);
            r.num(&format!("{name}.halving_ratio"), ratio);
            let at_floor = x <= 1e-11 && y <= 1e-11;
            r.check(
                (12.0..=20.0).contains(&ratio) || at_floor,
                format!("{name} halving ratio {ratio:.3} ({x:.3e} → {y:.3e})"),
            );
        }
        let want = -0.05f64 * 0.05;
        r.num("a32", a.a32.re);
        r.num("a32.rel_error", crel(a.a32, want.into()));
        r.check(crel(a.a32, want.into()) <= 0.02, format!("projection of ℒ₀U₃ on U₂ = {:.6e}", a.a32.re));
        Ok(())
    })
}

pub fn criterion_7(opts: &AcceptanceOptions) -> CriterionReport {
    run(7, "reduction matches direct spectrum", |r| {
        let start = Instant::now();
        let (eps, mu) = (0.05, 0.0025);
        let bg = opts.background(eps, &Settings::default())?;
        let red = Reduction::new(&bg)?;
        let roots = red.unstable_roots(mu)?;
        let ev = spectrum(&assemble(mu, eps, &bg.coeffs)?, false)?.eigenvalues;
        let mut worst = 0.0f64;
        for (tag, root) in [("plus", roots.plus), ("minus", roots.minus)] {
            let d = (nearest(&ev, root) - root).norm();
            r.num(&format!("{tag}.re"), root.re);
            r.num(&format!("{tag}.im"), root.im);
            r.num(&format!("{tag}.distance"), d);
            worst = worst.max(d);
        }
        r.check(worst <= 1e-9, format!("root-to-eigenvalue distance {worst:e}"));
        r.within_time(start, 30.0);
        Ok(())
    })
}

pub fn criterion_8(opts: &AcceptanceOptions) -> CriterionReport {
    run(8, "sideband matrix entries", |r| {
        let settings = Settings::default();
        let method = SidebandMethod::Direct;
        // B₂₃/μ² at ε = 0, extrapolated to μ = 0 from μ and μ/2
        let flat = Reduction::new(&opts.background(0.0, &settings)?)?;
        let b23 = |mu: f64| -> Result<Complex64> {
            Ok(flat.matrices(mu, I * (mu / 2.0), method)?.b[1][2] / (mu * mu))
        };
        let (v1, v2) = (b23(0.005)?, b23(0.0025)?);
        let lead = v2 * 2.0 - v1;
        r.num("b23.mu2", lead.re);
        r.check(crel(lead, Complex64::from(-0.125)) <= 0.05, format!("B₂₃ μ² coefficient {lead:.5}"));

        // odd-in-ε part over με, extrapolated to μ = 0
        let eps = 0.01;
        let plus = Reduction::new(&opts.background(eps, &settings)?)?;
        let minus = Reduction::new(&opts.background(-eps, &settings)?)?;
        let odd = |mu: f64| -> Result<(Complex64, Complex64)> {
            let lam = I * (mu / 2.0);
            let bp = plus.matrices(mu, lam, method)?.b;
            let bm = minus.matrices(mu, lam, method)?.b;
            let s = 1.0 / (2.0 * mu * eps);
            Ok(((bp[1][0] - bm[1][0]) * s, (bp[2][3] - bm[2][3]) * s))
        };
        let (a1, c1) = odd(0.002)?;
        let (a2, c2) = odd(0.001)?;
        let b21 = a2 * 2.0 - a1;
        let b34 = c2 * 2.0 - c1;
        r.num("b21.mu_eps.im", b21.im);
        r.num("b34.mu_eps.im", b34.im);
        r.check(crel(b21, I * 0.75) <= 0.10, format!("B₂₁ με coefficient {b21:.5}"));
        r.check(crel(b34, I * 0.5) <= 0.10, format!("B₃₄ με coefficient {b34:.5}"));
        Ok(())
    })
}

pub fn criterion_9(opts: &AcceptanceOptions) -> CriterionReport {
    run(9, "matrix-entry asymptotics", |r| {
        let settings = Settings::default();
        let mu = 0.01;
        let lam = I * (mu / 2.0);
        let epss: Vec<f64> = (1..=5).map(|i| 0.01 * i as f64).collect();
        let mut a11 = Vec::new();
        let mut a22 = Vec::new();
        let mut a14 = Vec::new();
        let mut worst41 = 0.0f64;
        for &eps in &epss {
            let red = Reduction::new(&opts.background(eps, &settings)?)?;
            let a = red.matrices(mu, lam, SidebandMethod::Direct)?.a;
            worst41 = worst41.max((a[3][0] + 1.0).norm());
            a11.push(a[0][0] / (I * mu));
            a22.push(a[1][1] / (I * mu));
            a14.push(a[0][3] / mu);
        }
        r.num("a41.error", worst41);
        r.check(worst41 <= 1e-12, format!("|A₄₁ + 1| = {worst41:e}"));
        // the diagonal entries and A₁₄ are even in ε, so fit in ε²
        let x2: Vec<f64> = epss.iter().map(|e| e * e).collect();
        for (name, ys, want) in [("a11", &a11, 1.5), ("a22", &a22, -1.25), ("a14", &a14, -1.0)] {
            let fit = fit_series(&x2, ys, 2)?;
            let c = fit.coefficients[1];
            r.num(&format!("{name}.eps2"), c.re);
            r.check(crel(c, want.into()) <= 0.05, format!("{name} ε² coefficient {c:.5}, expected {want}"));
        }
        Ok(())
    })
}

pub fn criterion_10(opts: &AcceptanceOptions) -> CriterionReport {
    run(10, "Hamiltonian symmetries", |r| {
        let (eps, mu) = (0.05, 0.01);
        let bg = opts.background(eps, &Settings::default())?;
        let m = assemble(mu, eps, &bg.coeffs)?;
        let l = m.entries();
        let j = j_matrix(bg.truncation());
        let k = hamiltonian_k(mu, &bg.coeffs);
        let fact = (l - &j * &k).camax();
        let adj = (l.adjoint() - &j * l * &j).camax();
        let ev = spectrum(&m, false)?.eigenvalues;
        let neg = spectrum(&assemble(-mu, eps, &bg.coeffs)?, false)?.eigenvalues;
        let conj_neg: Vec<Complex64> = neg.iter().map(|z| z.conj()).collect();
        let reflect: Vec<Complex64> = ev.iter().map(|z| -z.conj()).collect();
        let d_mu = match_distance(&ev, &conj_neg);
        let d_ref = match_distance(&ev, &reflect);
        r.num("l_minus_jk", fact);
        r.num("adjoint_identity", adj);
        r.num("mu_reflection", d_mu);
        r.num("hamiltonian_pairs", d_ref);
        r.check(fact <= 1e-13, format!("‖ℒ − JK‖ = {fact:e}"));
        r.check(adj <= 1e-12, format!("‖ℒᴴ − JℒJ‖ = {adj:e}"));
        r.check(d_mu <= 1e-9, format!("spec(μ) vs conj spec(−μ): {d_mu:e}"));
        r.check(d_ref <= 1e-9, format!("spec vs −conj spec: {d_ref:e}"));
        Ok(())
    })
}

pub fn criterion_11(opts: &AcceptanceOptions) -> CriterionReport {
    run(11, "g-rescaling", |r| {
        let (eps, mu) = (0.05, 0.01);
        let one = opts.background(eps, &Settings::default())?;
        let four = opts.background(eps, &Settings::default().with_g(4.0))?;
        let mut a: Vec<Complex64> = spectrum(&assemble(mu, eps, &one.coeffs)?, false)?.eigenvalues.iter().map(|z| z * 2.0).collect();
        let mut b = spectrum(&assemble(mu, eps, &four.coeffs)?, false)?.eigenvalues;
        sort_eigenvalues(&mut a);
        sort_eigenvalues(&mut b);
        let elementwise = a.iter().zip(&b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        r.num("elementwise", elementwise);
        r.num("matched", match_distance(&a, &b));
        r.check(a.len() == b.len() && elementwise <= 1e-9, format!("max difference {elementwise:e}"));
        Ok(())
    })
}

pub fn run_all(opts: &AcceptanceOptions) -> Vec<CriterionReport> {
    vec![
        criterion_1(opts),
        criterion_2(opts),
        criterion_3(opts),
        criterion_4(opts),
        criterion_5(opts),
        criterion_6(opts),
        criterion_7(opts),
        criterion_8(opts),
        criterion_9(opts),
        criterion_10(opts),
        criterion_11(opts),
    ]
}

/// Runs one criterion by number.
pub fn run_one(id: u32, opts: &AcceptanceOptions) -> Option<CriterionReport> {
    let f: fn(&AcceptanceOptions) -> CriterionReport = match id {
        1 => criterion_1,
        2 => criterion_2,
        3 => criterion_3,
        4 => criterion_4,
        5 => criterion_5,
        6 => criterion_6,
        7 => criterion_7,
        8 => criterion_8,
        9 => criterion_9,
        10 => criterion_10,
        11 => criterion_11,
        _ => return None,
    };
    Some(f(opts))
}
