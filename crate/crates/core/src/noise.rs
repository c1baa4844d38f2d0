//! Reproducible noise: Brownian increments on nested grids and
//! finite-activity marked jump streams.
//!
//! Every path owns a ChaCha8 substream selected by `(master_seed, purpose)`
//! as the key and the path index as the stream id. ChaCha is counter-based,
//! so a path's noise does not depend on which other paths were generated or
//! in what order. Normal variates use `rand_distr::StandardNormal`
//! (ziggurat); streams are reproducible per crate version and seed.

use std::cmp::Ordering;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{NeutralModel, TimeGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StreamPurpose {
    Brownian,
    Jumps,
    Probe,
}

impl StreamPurpose {
    fn tag(self) -> u64 {
        match self {
            StreamPurpose::Brownian => 1,
            StreamPurpose::Jumps => 2,
            StreamPurpose::Probe => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedPlan {
    pub master_seed: u64,
}

impl SeedPlan {
    pub fn new(master_seed: u64) -> Self {
        Self { master_seed }
    }

    /// Substream key for `(path, purpose)`: 32-byte ChaCha key plus stream id.
    pub fn substream_key(&self, path: u64, purpose: StreamPurpose) -> ([u8; 32], u64) {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.master_seed.to_le_bytes());
        key[8..16].copy_from_slice(&purpose.tag().to_le_bytes());
        key[16..24].copy_from_slice(b"nsdde-v1");
        (key, path)
    }

    pub fn rng(&self, path: u64, purpose: StreamPurpose) -> ChaCha8Rng {
        let (key, stream) = self.substream_key(path, purpose);
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(stream);
        rng
    }
}

/// Row-major `[steps x dim]` array of Gaussian increments with variance
/// `fine_step`.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianIncrements {
    fine_step: f64,
    steps: usize,
    dim: usize,
    data: Vec<f64>,
}

impl BrownianIncrements {
    pub fn from_vec(fine_step: f64, dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || !data.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch(format!(
                "{} increments do not split into rows of {dim}",
                data.len()
            )));
        }
        Ok(Self {
            fine_step,
            steps: data.len() / dim,
            dim,
            data,
        })
    }

    pub fn fine_step(&self) -> f64 {
        self.fine_step
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Sums consecutive blocks of `factor` increments.
    pub fn coarsen(&self, factor: usize) -> Result<BrownianIncrements> {
        coarsen(self, factor)
    }
}

pub fn sample_brownian(
    grid: &TimeGrid,
    dim: usize,
    plan: &SeedPlan,
    path: u64,
) -> BrownianIncrements {
    let steps = grid.fine_steps();
    let fine_step = grid.fine_step();
    let sd = fine_step.sqrt();
    let mut rng = plan.rng(path, StreamPurpose::Brownian);
    let data = (0..steps * dim)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            sd * z
        })
        .collect();
    BrownianIncrements {
        fine_step,
        steps,
        dim,
        data,
    }
}

pub fn coarsen(inc: &BrownianIncrements, factor: usize) -> Result<BrownianIncrements> {
    if factor == 0 || !inc.steps.is_multiple_of(factor) {
        return Err(Error::IndivisibleFactor {
            steps: inc.steps,
            factor,
        });
    }
    let dim = inc.dim;
    let steps = inc.steps / factor;
    let mut data = vec![0.0; steps * dim];
    for (k, out) in data.chunks_exact_mut(dim).enumerate() {
        for i in k * factor..(k + 1) * factor {
            for (o, v) in out.iter_mut().zip(inc.row(i)) {
                *o += v;
            }
        }
    }
    Ok(BrownianIncrements {
        fine_step: inc.fine_step * factor as f64,
        steps,
        dim,
        data,
    })
}

/// Jump epochs in `(0, T]` with their marks.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpStream {
    times: Vec<f64>,
    marks: Vec<f64>,
    total_intensity: f64,
}

impl JumpStream {
    pub fn new(times: Vec<f64>, marks: Vec<f64>, total_intensity: f64) -> Result<Self> {
        if times.len() != marks.len() {
            return Err(Error::DimensionMismatch(
                "jump times and marks differ in length".into(),
            ));
        }
        if times
            .windows(2)
            .any(|w| w[0].partial_cmp(&w[1]) != Some(Ordering::Less))
        {
            return Err(Error::InvalidModel(
                "jump times must be strictly increasing".into(),
            ));
        }
        if times
            .first()
            .is_some_and(|&t| t.partial_cmp(&0.0) != Some(Ordering::Greater))
        {
            return Err(Error::InvalidModel("jump times must be positive".into()));
        }
        Ok(Self {
            times,
            marks,
            total_intensity,
        })
    }

    pub fn empty(total_intensity: f64) -> Self {
        Self {
            times: Vec::new(),
            marks: Vec::new(),
            total_intensity,
        }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn marks(&self) -> &[f64] {
        &self.marks
    }

    pub fn total_intensity(&self) -> f64 {
        self.total_intensity
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Number of jumps in `(start, end]`.
    pub fn count_in(&self, start: f64, end: f64) -> usize {
        let lo = self.times.partition_point(|&t| t <= start);
        let hi = self.times.partition_point(|&t| t <= end);
        hi.saturating_sub(lo)
    }
}

/// Poisson count, then i.i.d. uniform epochs on `(0, T]` sorted, then marks.
pub fn sample_jumps(
    grid: &TimeGrid,
    model: &NeutralModel,
    plan: &SeedPlan,
    path: u64,
) -> Result<JumpStream> {
    let jumps = model.jump_part().ok_or(Error::NoJumpPart)?;
    let horizon = grid.horizon();
    let mean = jumps.total_intensity * horizon;
    if mean == 0.0 {
        return Ok(JumpStream::empty(jumps.total_intensity));
    }
    let mut rng = plan.rng(path, StreamPurpose::Jumps);
    let poisson =
        Poisson::new(mean).map_err(|e| Error::InvalidModel(format!("poisson mean {mean}: {e}")))?;
    let count = poisson.sample(&mut rng) as usize;
    let mut times: Vec<f64> = (0..count)
        .map(|_| horizon * (1.0 - rng.random::<f64>()))
        .collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let marks = (0..times.len())
        .map(|_| jumps.marks.sample(&mut rng))
        .collect();
    Ok(JumpStream {
        times,
        marks,
        total_intensity: jumps.total_intensity,
    })
}
