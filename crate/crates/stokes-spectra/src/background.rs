//! Everything the linearization needs at one amplitude: the Stokes wave, its
//! conformal map, velocity traces and the variable coefficients.

use serde::{Deserialize, Serialize};

use crate::conformal::{coefficient_functions, solve_riemann_stretch, ConformalMap, LinearizedCoefficients};
use crate::error::{Error, Result};
use crate::fourier::{FourierVector, Parity, TrigPolynomial};
use crate::stokes::{refine, refine_modes, refined_tangent, series_tangent, stokes_series, StokesWave, WaveTangent};

/// Which Stokes wave feeds the linearization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WaveModel {
    /// The truncated series itself.
    Series,
    /// The series polished to a steady solution at the working truncation.
    Refined,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Settings {
    pub k: usize,
    pub g: f64,
    pub wave: WaveModel,
    pub stokes_order: u32,
    pub fixed_point_tol: f64,
    pub max_iter: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            k: 32,
            g: 1.0,
            wave: WaveModel::Refined,
            stokes_order: 3,
            fixed_point_tol: crate::conformal::DEFAULT_TOL,
            max_iter: crate::conformal::DEFAULT_MAX_ITER,
        }
    }
}

impl Settings {
    pub fn series(k: usize) -> Self {
        Self { k, wave: WaveModel::Series, ..Self::default() }
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k;
        self
    }

    pub fn with_g(mut self, g: f64) -> Self {
        self.g = g;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 4 {
            return Err(Error::InvalidParameter(format!("K={} too small", self.k)));
        }
        if !(self.g > 0.0) || !self.g.is_finite() {
            return Err(Error::InvalidParameter(format!("g={} must be positive", self.g)));
        }
        if !(self.fixed_point_tol > 0.0) {
            return Err(Error::InvalidParameter("fixed-point tolerance must be positive".into()));
        }
        if !(1..=3).contains(&self.stokes_order) {
            return Err(Error::InvalidOrder(self.stokes_order));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Background {
    pub eps: f64,
    pub settings: Settings,
    pub wave: StokesWave,
    pub map: ConformalMap,
    /// Horizontal velocity trace, numerical.
    pub b: TrigPolynomial,
    /// Vertical velocity trace, numerical.
    pub v: TrigPolynomial,
    pub coeffs: LinearizedCoefficients,
}

impl Background {
    pub fn new(eps: f64, settings: &Settings) -> Result<Self> {
        settings.validate()?;
        let k = settings.k;
        let seed = stokes_series(eps, 0.0, settings.g, settings.stokes_order, k)?;
        let wave = match settings.wave {
            WaveModel::Series => seed,
            WaveModel::Refined if eps == 0.0 => seed,
            WaveModel::Refined => refine(&seed, refine_modes(k))?,
        };
        Self::from_wave(eps, settings, wave)
    }

    pub fn from_wave(eps: f64, settings: &Settings, wave: StokesWave) -> Result<Self> {
        let map = solve_riemann_stretch(wave.eta.coeffs(), settings.fixed_point_tol, settings.max_iter)?;
        let (b, v) = wave.numeric_traces(&map)?;
        let coeffs = coefficient_functions(wave.speed, wave.gravity, &map, b.coeffs(), v.coeffs())?;
        Ok(Self { eps, settings: settings.clone(), wave, map, b, v, coeffs })
    }

    pub fn truncation(&self) -> usize {
        self.settings.k
    }

    pub fn g(&self) -> f64 {
        self.wave.gravity
    }

    /// `∂ₐ(η, ψ, c)` at `a = ε`.
    pub fn tangent(&self) -> Result<WaveTangent> {
        match self.settings.wave {
            WaveModel::Refined if self.eps != 0.0 => refined_tangent(self.eps, self.g(), self.settings.k),
            _ => series_tangent(self.eps, self.g(), self.settings.stokes_order, self.settings.k),
        }
    }

    /// Adds `delta·cos x` to `p`; used to check that the diagnostics notice.
    pub fn with_corrupted_p(mut self, delta: f64) -> Result<Self> {
        let k = self.settings.k;
        let p = self.coeffs.p.coeffs() + &FourierVector::cos(k, 1, delta);
        self.coeffs.p = TrigPolynomial::new(p, Parity::Even, true)?;
        Ok(self)
    }
}
