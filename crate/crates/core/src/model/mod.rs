//! The neutral stochastic delay equation class
//!
//! ```text
//! d[X(t) - G(X(t - tau))] = b(X(t), X(t - tau)) dt + sigma(X(t), X(t - tau)) dB(t)
//! d[X(t) - G(X(t - tau))] = b(X(t), X(t - tau)) dt + ∫_U g(X(t-), X((t - tau)-), u) Ñ(du, dt)
//! ```
//!
//! with `X(theta) = xi(theta)` on `[-tau, 0]`. A [`NeutralModel`] carries the
//! coefficient functions plus the polynomial-growth constants its author
//! declares; [`validate_assumptions`] spot-checks those declarations.

mod assumptions;
mod grid;
mod segment;

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

pub use assumptions::{
    validate_assumptions, validate_assumptions_in_box, AssumptionCheck, AssumptionId,
    AssumptionReport,
};
pub use grid::{build_grid, TimeGrid};
pub use segment::{eval_segment, InitialSegment};

use crate::error::{Error, Result};

/// Neutral term `G(y)`, written into `out`.
pub type NeutralFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
/// Drift `b(x, y)` or any other `(state, delayed) -> state` map.
pub type DriftFn = Arc<dyn Fn(&[f64], &[f64], &mut [f64]) + Send + Sync>;
/// Diffusion `sigma(x, y)` as a row-major `n x m` matrix.
pub type DiffusionFn = Arc<dyn Fn(&[f64], &[f64], &mut [f64]) + Send + Sync>;
/// Jump coefficient `g(x, y, u)`.
pub type JumpFn = Arc<dyn Fn(&[f64], &[f64], f64, &mut [f64]) + Send + Sync>;

/// Constants of the polynomial Lipschitz conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthConstants {
    pub l: f64,
    pub q: f64,
    pub l0: f64,
    pub r: f64,
}

impl Default for GrowthConstants {
    fn default() -> Self {
        Self {
            l: 1.0,
            q: 1.0,
            l0: 0.0,
            r: 1.0,
        }
    }
}

/// Law of a single jump mark `u`, normalised to a probability distribution.
/// The intensity measure is `total_intensity * law`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MarkLaw {
    Uniform { low: f64, high: f64 },
    Normal { mean: f64, std_dev: f64 },
    Constant { value: f64 },
}

impl MarkLaw {
    pub fn mean(&self) -> f64 {
        match *self {
            MarkLaw::Uniform { low, high } => 0.5 * (low + high),
            MarkLaw::Normal { mean, .. } => mean,
            MarkLaw::Constant { value } => value,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            MarkLaw::Uniform { low, high } => {
                if low == high {
                    low
                } else {
                    rng.random_range(low..high)
                }
            }
            MarkLaw::Normal { mean, std_dev } => Normal::new(mean, std_dev)
                .expect("validated at construction")
                .sample(rng),
            MarkLaw::Constant { value } => value,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            MarkLaw::Uniform { low, high } => low.is_finite() && high.is_finite() && low <= high,
            MarkLaw::Normal { mean, std_dev } => {
                mean.is_finite() && std_dev.is_finite() && std_dev >= 0.0
            }
            MarkLaw::Constant { value } => value.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidModel(format!("bad mark law {self:?}")))
        }
    }
}

/// Finite-activity compensated Poisson driver.
#[derive(Clone)]
pub struct JumpPart {
    pub coefficient: JumpFn,
    /// `∫_U g(x, y, u) λ(du)`, supplied analytically.
    pub compensator: DriftFn,
    pub total_intensity: f64,
    pub marks: MarkLaw,
}

#[derive(Clone)]
pub enum NoiseTerm {
    None,
    Brownian { dim: usize, diffusion: DiffusionFn },
    Jump(JumpPart),
}

impl NoiseTerm {
    pub fn kind(&self) -> &'static str {
        match self {
            NoiseTerm::None => "none",
            NoiseTerm::Brownian { .. } => "brownian",
            NoiseTerm::Jump(_) => "jump",
        }
    }
}

#[derive(Clone)]
pub struct NeutralModel {
    name: String,
    dim: usize,
    neutral: Option<NeutralFn>,
    drift: Option<DriftFn>,
    noise: NoiseTerm,
    growth: GrowthConstants,
}

impl fmt::Debug for NeutralModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NeutralModel")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("neutral", &self.neutral.is_some())
            .field("drift", &self.drift.is_some())
            .field("noise", &self.noise.kind())
            .field("growth", &self.growth)
            .finish()
    }
}

impl NeutralModel {
    /// Deterministic model with `G ≡ 0` and `b ≡ 0`.
    pub fn new(name: impl Into<String>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidModel(
                "state dimension must be positive".into(),
            ));
        }
        Ok(Self {
            name: name.into(),
            dim,
            neutral: None,
            drift: None,
            noise: NoiseTerm::None,
            growth: GrowthConstants::default(),
        })
    }

    pub fn with_neutral(mut self, neutral: NeutralFn) -> Self {
        self.neutral = Some(neutral);
        self
    }

    pub fn with_drift(mut self, drift: DriftFn) -> Self {
        self.drift = Some(drift);
        self
    }

    pub fn with_diffusion(mut self, noise_dim: usize, diffusion: DiffusionFn) -> Result<Self> {
        if noise_dim == 0 {
            return Err(Error::InvalidModel(
                "noise dimension must be positive".into(),
            ));
        }
        self.noise = NoiseTerm::Brownian {
            dim: noise_dim,
            diffusion,
        };
        Ok(self)
    }

    pub fn with_jumps(mut self, jumps: JumpPart) -> Result<Self> {
        if !(jumps.total_intensity.is_finite() && jumps.total_intensity >= 0.0) {
            return Err(Error::InvalidModel(format!(
                "total intensity must be finite and non-negative, got {}",
                jumps.total_intensity
            )));
        }
        jumps.marks.validate()?;
        self.noise = NoiseTerm::Jump(jumps);
        Ok(self)
    }

    pub fn with_growth(mut self, growth: GrowthConstants) -> Result<Self> {
        let GrowthConstants { l, q, l0, r } = growth;
        if !(l >= 0.0 && q >= 1.0 && l0 >= 0.0 && r > 0.0)
            || ![l, q, l0, r].iter().all(|v| v.is_finite())
        {
            return Err(Error::InvalidModel(format!(
                "bad growth constants {growth:?}"
            )));
        }
        self.growth = growth;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Brownian dimension; zero for jump or deterministic models.
    pub fn noise_dim(&self) -> usize {
        match &self.noise {
            NoiseTerm::Brownian { dim, .. } => *dim,
            _ => 0,
        }
    }

    pub fn noise(&self) -> &NoiseTerm {
        &self.noise
    }

    pub fn jump_part(&self) -> Option<&JumpPart> {
        match &self.noise {
            NoiseTerm::Jump(j) => Some(j),
            _ => None,
        }
    }

    pub fn growth(&self) -> GrowthConstants {
        self.growth
    }

    pub fn has_neutral(&self) -> bool {
        self.neutral.is_some()
    }

    pub fn has_drift(&self) -> bool {
        self.drift.is_some()
    }

    pub fn neutral_into(&self, y: &[f64], out: &mut [f64]) {
        match &self.neutral {
            Some(f) => f(y, out),
            None => out.fill(0.0),
        }
    }

    pub fn drift_into(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        match &self.drift {
            Some(f) => f(x, y, out),
            None => out.fill(0.0),
        }
    }

    /// Writes the `n x m` diffusion matrix; zero-sized for non-Brownian models.
    pub fn diffusion_into(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        match &self.noise {
            NoiseTerm::Brownian { diffusion, .. } => diffusion(x, y, out),
            _ => out.fill(0.0),
        }
    }
}

/// Helpers to lift scalar closures into coefficient functions.
pub mod scalar {
    use std::sync::Arc;

    use super::{DiffusionFn, DriftFn, JumpFn, NeutralFn};

    pub fn neutral(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> NeutralFn {
        Arc::new(move |y, out| out[0] = f(y[0]))
    }

    pub fn drift(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> DriftFn {
        Arc::new(move |x, y, out| out[0] = f(x[0], y[0]))
    }

    pub fn diffusion(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> DiffusionFn {
        Arc::new(move |x, y, out| out[0] = f(x[0], y[0]))
    }

    pub fn jump(f: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static) -> JumpFn {
        Arc::new(move |x, y, u, out| out[0] = f(x[0], y[0], u))
    }
}

/// Euclidean norm.
pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Euclidean distance.
pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
