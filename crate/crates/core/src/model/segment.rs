use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Slack on the `[-tau, 0]` domain so grid nodes built as `k * h` are accepted.
const DOMAIN_SLACK: f64 = 1e-12;

type SegmentFn = Arc<dyn Fn(f64, &mut [f64]) + Send + Sync>;

/// Initial data `xi` on `[-tau, 0]` with its declared Lipschitz constant.
#[derive(Clone)]
pub struct InitialSegment {
    tau: f64,
    dim: usize,
    lipschitz: f64,
    description: String,
    xi: SegmentFn,
}

impl fmt::Debug for InitialSegment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("InitialSegment")
            .field("tau", &self.tau)
            .field("dim", &self.dim)
            .field("lipschitz", &self.lipschitz)
            .field("description", &self.description)
            .finish()
    }
}

impl InitialSegment {
    pub fn constant(value: Vec<f64>, tau: f64) -> Result<Self> {
        check_tau(tau)?;
        let dim = value.len();
        let description = format!("constant {value:?}");
        Self::from_fn(dim, tau, 0.0, description, move |_, out| {
            out.copy_from_slice(&value)
        })
    }

    /// `xi(theta) = intercept + slope * theta`.
    pub fn linear(intercept: Vec<f64>, slope: Vec<f64>, tau: f64) -> Result<Self> {
        check_tau(tau)?;
        if intercept.len() != slope.len() {
            return Err(Error::DimensionMismatch(
                "linear segment intercept and slope differ in length".into(),
            ));
        }
        let lipschitz = crate::model::norm(&slope);
        let description = format!("linear {intercept:?} + {slope:?} theta");
        Self::from_fn(
            intercept.len(),
            tau,
            lipschitz,
            description,
            move |theta, out| {
                for ((o, a), s) in out.iter_mut().zip(&intercept).zip(&slope) {
                    *o = a + s * theta;
                }
            },
        )
    }

    pub fn from_fn(
        dim: usize,
        tau: f64,
        lipschitz: f64,
        description: impl Into<String>,
        xi: impl Fn(f64, &mut [f64]) + Send + Sync + 'static,
    ) -> Result<Self> {
        check_tau(tau)?;
        if dim == 0 {
            return Err(Error::DimensionMismatch(
                "segment dimension must be positive".into(),
            ));
        }
        if !(lipschitz.is_finite() && lipschitz >= 0.0) {
            return Err(Error::InvalidModel(format!(
                "bad Lipschitz constant {lipschitz}"
            )));
        }
        Ok(Self {
            tau,
            dim,
            lipschitz,
            description: description.into(),
            xi: Arc::new(xi),
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn eval_into(&self, theta: f64, out: &mut [f64]) -> Result<()> {
        let slack = DOMAIN_SLACK * self.tau;
        if !(theta >= -self.tau - slack && theta <= slack) {
            return Err(Error::OutOfDomain {
                theta,
                tau: self.tau,
            });
        }
        (self.xi)(theta.clamp(-self.tau, 0.0), out);
        Ok(())
    }

    pub fn eval(&self, theta: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(theta, &mut out)?;
        Ok(out)
    }
}

pub fn eval_segment(seg: &InitialSegment, theta: f64) -> Result<Vec<f64>> {
    seg.eval(theta)
}

fn check_tau(tau: f64) -> Result<()> {
    if tau.is_finite() && tau > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidGrid(format!(
            "tau must be positive, got {tau}"
        )))
    }
}
