//! Truncated Fourier series of 2π-periodic functions.
//!
//! A series with truncation `K` stores the amplitudes of `e^{ikx}` for
//! `k = -K..=K`, mode `k` at index `k + K`.

use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const TWO_PI: f64 = 2.0 * PI;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Relative tolerance for parity and real-valuedness checks.
pub const PARITY_TOL: f64 = 1e-13;

#[derive(Clone, Debug, PartialEq)]
pub struct FourierVector {
    k: usize,
    coeffs: Vec<Complex64>,
}

impl FourierVector {
    pub fn zeros(k: usize) -> Self {
        Self { k, coeffs: vec![Complex64::new(0.0, 0.0); 2 * k + 1] }
    }

    pub fn from_coeffs(k: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != 2 * k + 1 {
            return Err(Error::Length { len: coeffs.len(), k });
        }
        Ok(Self { k, coeffs })
    }

    pub fn from_fn(k: usize, f: impl FnMut(i64) -> Complex64) -> Self {
        let kk = k as i64;
        Self { k, coeffs: (-kk..=kk).map(f).collect() }
    }

    pub fn constant(k: usize, value: f64) -> Self {
        let mut v = Self::zeros(k);
        v.coeffs[k] = value.into();
        v
    }

    /// `amp * e^{imx}`.
    pub fn exp_mode(k: usize, m: i64, amp: Complex64) -> Result<Self> {
        let mut v = Self::zeros(k);
        v.set(m, amp)?;
        Ok(v)
    }

    /// `amp * cos(mx)`; `m` must not exceed `k`.
    pub fn cos(k: usize, m: usize, amp: f64) -> Self {
        assert!(m <= k, "mode {m} outside truncation {k}");
        let mut v = Self::zeros(k);
        if m == 0 {
            v.coeffs[k] = amp.into();
        } else {
            v.coeffs[k + m] += 0.5 * amp;
            v.coeffs[k - m] += 0.5 * amp;
        }
        v
    }

    /// `amp * sin(mx)`; `m` must not exceed `k`.
    pub fn sin(k: usize, m: usize, amp: f64) -> Self {
        assert!(m <= k, "mode {m} outside truncation {k}");
        let mut v = Self::zeros(k);
        if m > 0 {
            v.coeffs[k + m] += Complex64::new(0.0, -0.5 * amp);
            v.coeffs[k - m] += Complex64::new(0.0, 0.5 * amp);
        }
        v
    }

    /// Cosine series `Σ a[m] cos(mx)`, modes beyond `k` dropped.
    pub fn cos_series(k: usize, amps: &[f64]) -> Self {
        let mut v = Self::zeros(k);
        for (m, &a) in amps.iter().enumerate().take(k + 1) {
            v += &Self::cos(k, m, a);
        }
        v
    }

    /// Sine series `Σ b[m] sin(mx)`; `b[0]` is ignored.
    pub fn sin_series(k: usize, amps: &[f64]) -> Self {
        let mut v = Self::zeros(k);
        for (m, &b) in amps.iter().enumerate().take(k + 1) {
            v += &Self::sin(k, m, b);
        }
        v
    }

    pub fn truncation(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Amplitude of mode `m`, zero outside the truncation.
    pub fn get(&self, m: i64) -> Complex64 {
        if m.unsigned_abs() as usize > self.k {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[(m + self.k as i64) as usize]
        }
    }

    pub fn set(&mut self, m: i64, value: Complex64) -> Result<()> {
        if m.unsigned_abs() as usize > self.k {
            return Err(Error::ModeOutOfRange { mode: m, k: self.k });
        }
        self.coeffs[(m + self.k as i64) as usize] = value;
        Ok(())
    }

    pub fn modes(&self) -> impl Iterator<Item = i64> {
        let kk = self.k as i64;
        -kk..=kk
    }

    /// Coefficient of `cos(mx)` in the real-form expansion (constant for `m=0`).
    pub fn cos_coeff(&self, m: usize) -> Complex64 {
        if m == 0 {
            self.get(0)
        } else {
            self.get(m as i64) + self.get(-(m as i64))
        }
    }

    /// Coefficient of `sin(mx)` in the real-form expansion.
    pub fn sin_coeff(&self, m: usize) -> Complex64 {
        if m == 0 {
            Complex64::new(0.0, 0.0)
        } else {
            I * (self.get(m as i64) - self.get(-(m as i64)))
        }
    }

    pub fn mean(&self) -> Complex64 {
        self.coeffs[self.k]
    }

    /// Pads with zeros or drops modes beyond the new truncation.
    pub fn resize(&self, k: usize) -> Self {
        Self::from_fn(k, |m| self.get(m))
    }

    /// Multiplies mode `k` by `symbol(k)`.
    pub fn map_symbol(&self, symbol: impl Fn(i64) -> Complex64) -> Self {
        let kk = self.k as i64;
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| c * symbol(j as i64 - kk))
            .collect();
        Self { k: self.k, coeffs }
    }

    /// Fourier multiplier `m(D + μ)`: mode `k` is scaled by `m(k + μ)`.
    pub fn apply_multiplier(&self, m: impl Fn(f64) -> f64, mu: f64) -> Result<Self> {
        if !(mu.abs() < 0.5) {
            return Err(Error::BlochParameter(mu));
        }
        let mut out = self.clone();
        for (j, c) in out.coeffs.iter_mut().enumerate() {
            let xi = (j as i64 - self.k as i64) as f64 + mu;
            let s = m(xi);
            if !s.is_finite() {
                return Err(Error::NonFiniteSymbol(xi));
            }
            *c *= s;
        }
        Ok(out)
    }

    pub fn derivative(&self) -> Self {
        self.map_symbol(|k| I * k as f64)
    }

    /// `i(D + μ)`, the derivative conjugated by `e^{iμx}`.
    pub fn shifted_derivative(&self, mu: f64) -> Self {
        self.map_symbol(|k| I * (k as f64 + mu))
    }

    /// Symbol `-i sign(k)` with `sign(0) = 0`.
    pub fn hilbert(&self) -> Self {
        self.map_symbol(|k| -I * sign(k as f64))
    }

    /// `|D + μ|`.
    pub fn abs_d(&self, mu: f64) -> Self {
        self.map_symbol(|k| ((k as f64 + mu).abs()).into())
    }

    /// Product of the two functions, truncated back to `K`.
    pub fn product(&self, other: &Self) -> Self {
        assert_eq!(self.k, other.k, "truncation mismatch in product");
        let k = self.k as i64;
        let mut out = Self::zeros(self.k);
        for m in -k..=k {
            let a = self.coeffs[(m + k) as usize];
            if a == Complex64::new(0.0, 0.0) {
                continue;
            }
            let lo = (-k).max(-k - m);
            let hi = k.min(k - m);
            for n in lo..=hi {
                out.coeffs[(m + n + k) as usize] += a * other.coeffs[(n + k) as usize];
            }
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self { k: self.k, coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    pub fn l2_norm(&self) -> f64 {
        (TWO_PI * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.norm()))
    }

    /// Coefficients of `conj(f(x))`: `c'_k = conj(c_{-k})`.
    pub fn conj_function(&self) -> Self {
        let k = self.k as i64;
        Self::from_fn(self.k, |m| self.coeffs[(k - m) as usize].conj())
    }

    /// Coefficients of `f(-x)`.
    pub fn reflect(&self) -> Self {
        let k = self.k as i64;
        Self::from_fn(self.k, |m| self.coeffs[(k - m) as usize])
    }

    /// The real part of the represented function.
    pub fn real_function(&self) -> Self {
        (self + &self.conj_function()).scale(0.5.into())
    }

    fn tol(&self) -> f64 {
        PARITY_TOL * self.max_abs().max(1.0)
    }

    pub fn is_real_valued(&self) -> bool {
        let t = self.tol();
        self.modes().all(|m| (self.get(m) - self.get(-m).conj()).norm() <= t)
    }

    pub fn is_even(&self) -> bool {
        let t = self.tol();
        self.modes().all(|m| (self.get(m) - self.get(-m)).norm() <= t)
    }

    pub fn is_odd(&self) -> bool {
        let t = self.tol();
        self.modes().all(|m| (self.get(m) + self.get(-m)).norm() <= t)
    }

    /// Detected parity; the zero function reports `Even`.
    pub fn parity(&self) -> Parity {
        if self.is_even() {
            Parity::Even
        } else if self.is_odd() {
            Parity::Odd
        } else {
            Parity::None
        }
    }

    pub fn has_parity(&self, p: Parity) -> bool {
        match p {
            Parity::Even => self.is_even(),
            Parity::Odd => self.is_odd(),
            Parity::None => true,
        }
    }

    /// Point evaluation `Σ c_k e^{ikx}`.
    pub fn eval(&self, x: f64) -> Complex64 {
        let w = Complex64::from_polar(1.0, x);
        let mut e = Complex64::from_polar(1.0, -(self.k as f64) * x);
        let mut s = Complex64::new(0.0, 0.0);
        for (j, c) in self.coeffs.iter().enumerate() {
            if j % 16 == 0 {
                // re-anchor the recurrence to keep roundoff flat in K
                e = Complex64::from_polar(1.0, (j as f64 - self.k as f64) * x);
            }
            s += c * e;
            e *= w;
        }
        s
    }

    pub fn distance(&self, other: &Self) -> f64 {
        (self - other).l2_norm()
    }
}

pub fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

impl Add<&FourierVector> for &FourierVector {
    type Output = FourierVector;
    fn add(self, rhs: &FourierVector) -> FourierVector {
        assert_eq!(self.k, rhs.k, "truncation mismatch");
        let coeffs = self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect();
        FourierVector { k: self.k, coeffs }
    }
}

impl Sub<&FourierVector> for &FourierVector {
    type Output = FourierVector;
    fn sub(self, rhs: &FourierVector) -> FourierVector {
        assert_eq!(self.k, rhs.k, "truncation mismatch");
        let coeffs = self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect();
        FourierVector { k: self.k, coeffs }
    }
}

impl Add for FourierVector {
    type Output = FourierVector;
    fn add(self, rhs: FourierVector) -> FourierVector {
        &self + &rhs
    }
}

impl Sub for FourierVector {
    type Output = FourierVector;
    fn sub(self, rhs: FourierVector) -> FourierVector {
        &self - &rhs
    }
}

impl AddAssign<&FourierVector> for FourierVector {
    fn add_assign(&mut self, rhs: &FourierVector) {
        assert_eq!(self.k, rhs.k, "truncation mismatch");
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a += b;
        }
    }
}

impl SubAssign<&FourierVector> for FourierVector {
    fn sub_assign(&mut self, rhs: &FourierVector) {
        assert_eq!(self.k, rhs.k, "truncation mismatch");
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a -= b;
        }
    }
}

impl Neg for &FourierVector {
    type Output = FourierVector;
    fn neg(self) -> FourierVector {
        self.scale((-1.0).into())
    }
}

impl Mul<f64> for &FourierVector {
    type Output = FourierVector;
    fn mul(self, s: f64) -> FourierVector {
        self.scale(s.into())
    }
}

impl Mul<Complex64> for &FourierVector {
    type Output = FourierVector;
    fn mul(self, s: Complex64) -> FourierVector {
        self.scale(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
    None,
}

impl Parity {
    /// Parity of a product.
    pub fn mul(self, other: Parity) -> Parity {
        match (self, other) {
            (Parity::None, _) | (_, Parity::None) => Parity::None,
            (a, b) if a == b => Parity::Even,
            _ => Parity::Odd,
        }
    }

    /// Parity after `∂ₓ` or `H`.
    pub fn flip(self) -> Parity {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
            Parity::None => Parity::None,
        }
    }
}

/// A truncated series tagged with a validated parity and real flag.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigPolynomial {
    coeffs: FourierVector,
    parity: Parity,
    real: bool,
}

impl TrigPolynomial {
    pub fn new(coeffs: FourierVector, parity: Parity, real: bool) -> Result<Self> {
        if real && !coeffs.is_real_valued() {
            return Err(Error::Parity("series tagged real has non-conjugate coefficients".into()));
        }
        if !coeffs.has_parity(parity) {
            return Err(Error::Parity(format!("series is not {parity:?}")));
        }
        Ok(Self { coeffs, parity, real })
    }

    /// Real even series `Σ a[m] cos(mx)`.
    pub fn cosines(k: usize, amps: &[f64]) -> Self {
        Self { coeffs: FourierVector::cos_series(k, amps), parity: Parity::Even, real: true }
    }

    /// Real odd series `Σ b[m] sin(mx)`.
    pub fn sines(k: usize, amps: &[f64]) -> Self {
        Self { coeffs: FourierVector::sin_series(k, amps), parity: Parity::Odd, real: true }
    }

    /// Tags a real function with its detected parity, symmetrizing roundoff away.
    pub fn real_from(coeffs: &FourierVector, parity: Parity) -> Result<Self> {
        let re = coeffs.real_function();
        let sym = match parity {
            Parity::Even => (&re + &re.reflect()).scale(0.5.into()),
            Parity::Odd => (&re - &re.reflect()).scale(0.5.into()),
            Parity::None => re.clone(),
        };
        let scale = coeffs.max_abs().max(1.0);
        if (&sym - coeffs).max_abs() > 1e-9 * scale {
            return Err(Error::Parity(format!(
                "deviation {:e} from a real {parity:?} series",
                (&sym - coeffs).max_abs()
            )));
        }
        Ok(Self { coeffs: sym, parity, real: true })
    }

    pub fn coeffs(&self) -> &FourierVector {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> FourierVector {
        self.coeffs
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn truncation(&self) -> usize {
        self.coeffs.truncation()
    }

    /// Real cosine coefficient of `cos(mx)`.
    pub fn cos_coeff(&self, m: usize) -> f64 {
        self.coeffs.cos_coeff(m).re
    }

    pub fn sin_coeff(&self, m: usize) -> f64 {
        self.coeffs.sin_coeff(m).re
    }
}

/// A pair `(u₁, u₂)` of series sharing one truncation.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    pub first: FourierVector,
    pub second: FourierVector,
}

impl StateVector {
    pub fn new(first: FourierVector, second: FourierVector) -> Result<Self> {
        if first.truncation() != second.truncation() {
            return Err(Error::TruncationMismatch(first.truncation(), second.truncation()));
        }
        Ok(Self { first, second })
    }

    pub fn zeros(k: usize) -> Self {
        Self { first: FourierVector::zeros(k), second: FourierVector::zeros(k) }
    }

    pub fn truncation(&self) -> usize {
        self.first.truncation()
    }

    /// Stacked coefficients `[u₁; u₂]`.
    pub fn to_vec(&self) -> Vec<Complex64> {
        self.first.coeffs().iter().chain(self.second.coeffs()).copied().collect()
    }

    pub fn from_slice(k: usize, v: &[Complex64]) -> Result<Self> {
        let n = 2 * k + 1;
        if v.len() != 2 * n {
            return Err(Error::Length { len: v.len(), k });
        }
        Ok(Self {
            first: FourierVector::from_coeffs(k, v[..n].to_vec())?,
            second: FourierVector::from_coeffs(k, v[n..].to_vec())?,
        })
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self { first: self.first.scale(s), second: self.second.scale(s) }
    }

    pub fn norm(&self) -> f64 {
        inner_product(self, self).re.max(0.0).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.first.max_abs().max(self.second.max_abs())
    }

    pub fn parity(&self) -> (Parity, Parity) {
        (self.first.parity(), self.second.parity())
    }
}

impl Add<&StateVector> for &StateVector {
    type Output = StateVector;
    fn add(self, rhs: &StateVector) -> StateVector {
        StateVector { first: &self.first + &rhs.first, second: &self.second + &rhs.second }
    }
}

impl Sub<&StateVector> for &StateVector {
    type Output = StateVector;
    fn sub(self, rhs: &StateVector) -> StateVector {
        StateVector { first: &self.first - &rhs.first, second: &self.second - &rhs.second }
    }
}

impl Mul<Complex64> for &StateVector {
    type Output = StateVector;
    fn mul(self, s: Complex64) -> StateVector {
        self.scale(s)
    }
}

/// `∫_T (F₁ conj G₁ + F₂ conj G₂) dx`, exact by Parseval.
pub fn inner_product(f: &StateVector, g: &StateVector) -> Complex64 {
    assert_eq!(f.truncation(), g.truncation(), "truncation mismatch");
    let dot = |a: &FourierVector, b: &FourierVector| -> Complex64 {
        a.coeffs().iter().zip(b.coeffs()).map(|(x, y)| x * y.conj()).sum()
    };
    (dot(&f.first, &g.first) + dot(&f.second, &g.second)) * TWO_PI
}

/// Uniform sample grid `x_j = 2πj/N` with `N = 4K+1`, used for compositions,
/// quotients and other pointwise operations.
#[derive(Clone, Debug)]
pub struct Grid {
    k: usize,
    x: Vec<f64>,
    // table[j * n + m] = e^{i (m-K) x_j}
    table: Vec<Complex64>,
}

impl Grid {
    pub fn new(k: usize) -> Self {
        let npts = 4 * k + 1;
        let n = 2 * k + 1;
        let x: Vec<f64> = (0..npts).map(|j| TWO_PI * j as f64 / npts as f64).collect();
        let mut table = Vec::with_capacity(npts * n);
        for j in 0..npts {
            for m in 0..n {
                // exact reduction of the phase index keeps the table symmetric
                let p = ((m as i64 - k as i64) * j as i64).rem_euclid(npts as i64);
                table.push(Complex64::from_polar(1.0, TWO_PI * p as f64 / npts as f64));
            }
        }
        Self { k, x, table }
    }

    pub fn truncation(&self) -> usize {
        self.k
    }

    pub fn points(&self) -> &[f64] {
        &self.x
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn sample(&self, f: &FourierVector) -> Vec<Complex64> {
        assert_eq!(f.truncation(), self.k, "grid truncation mismatch");
        let n = 2 * self.k + 1;
        (0..self.x.len())
            .map(|j| {
                self.table[j * n..(j + 1) * n].iter().zip(f.coeffs()).map(|(e, c)| e * c).sum()
            })
            .collect()
    }

    pub fn sample_real(&self, f: &FourierVector) -> Vec<f64> {
        self.sample(f).into_iter().map(|z| z.re).collect()
    }

    /// `c_k = (1/N) Σ_j f(x_j) e^{-ikx_j}`.
    pub fn project(&self, values: &[Complex64]) -> FourierVector {
        assert_eq!(values.len(), self.x.len(), "sample count mismatch");
        let n = 2 * self.k + 1;
        let npts = self.x.len() as f64;
        let mut out = FourierVector::zeros(self.k);
        for (j, v) in values.iter().enumerate() {
            let row = &self.table[j * n..(j + 1) * n];
            for (c, e) in out.coeffs_mut().iter_mut().zip(row) {
                *c += v * e.conj();
            }
        }
        out.scale((1.0 / npts).into())
    }

    pub fn project_real(&self, values: &[f64]) -> FourierVector {
        let z: Vec<Complex64> = values.iter().map(|&v| v.into()).collect();
        self.project(&z)
    }

    /// Evaluates `f` at arbitrary points.
    pub fn eval_at(f: &FourierVector, xs: &[f64]) -> Vec<Complex64> {
        xs.iter().map(|&x| f.eval(x)).collect()
    }

    /// Pointwise map of real functions through the grid.
    pub fn pointwise(&self, fs: &[&FourierVector], op: impl Fn(&[f64]) -> f64) -> FourierVector {
        let samples: Vec<Vec<f64>> = fs.iter().map(|f| self.sample_real(f)).collect();
        let mut args = vec![0.0; fs.len()];
        let vals: Vec<f64> = (0..self.len())
            .map(|j| {
                for (a, s) in args.iter_mut().zip(&samples) {
                    *a = s[j];
                }
                op(&args)
            })
            .collect();
        self.project_real(&vals)
    }
}
