use crate::model::{JumpPart, NeutralModel, TimeGrid};
use crate::noise::{BrownianIncrements, JumpStream};

/// Noise contribution over one coarse step with coefficients frozen at the
/// left node.
pub(super) trait StepDriver {
    fn freeze(&mut self, y: &[f64], yd: &[f64]);

    /// Adds the contribution from `k h` up to sub-node `r` of step `k`
    /// (`r = refine` is the full step). Calls within a step have
    /// non-decreasing `r`.
    fn add_to(&mut self, k: usize, r: usize, elapsed: f64, out: &mut [f64]);
}

pub(super) struct NullDriver;

impl StepDriver for NullDriver {
    fn freeze(&mut self, _y: &[f64], _yd: &[f64]) {}

    fn add_to(&mut self, _k: usize, _r: usize, _elapsed: f64, _out: &mut [f64]) {}
}

pub(super) struct BrownianDriver<'a> {
    model: &'a NeutralModel,
    inc: &'a BrownianIncrements,
    refine: usize,
    sigma: Vec<f64>,
    partial: Vec<f64>,
    summed: usize,
}

impl<'a> BrownianDriver<'a> {
    pub(super) fn new(model: &'a NeutralModel, inc: &'a BrownianIncrements, refine: usize) -> Self {
        Self {
            model,
            inc,
            refine,
            sigma: vec![0.0; model.dim() * inc.dim()],
            partial: vec![0.0; inc.dim()],
            summed: 0,
        }
    }
}

impl StepDriver for BrownianDriver<'_> {
    fn freeze(&mut self, y: &[f64], yd: &[f64]) {
        self.model.diffusion_into(y, yd, &mut self.sigma);
        self.partial.fill(0.0);
        self.summed = 0;
    }

    fn add_to(&mut self, k: usize, r: usize, _elapsed: f64, out: &mut [f64]) {
        while self.summed < r {
            let row = self.inc.row(k * self.refine + self.summed);
            for (p, v) in self.partial.iter_mut().zip(row) {
                *p += v;
            }
            self.summed += 1;
        }
        let d = self.partial.len();
        for (i, o) in out.iter_mut().enumerate() {
            let s = &self.sigma[i * d..(i + 1) * d];
            *o += s.iter().zip(&self.partial).map(|(a, b)| a * b).sum::<f64>();
        }
    }
}

/// Compensated jump integral with left-limit state arguments: a jump at
/// time `t` belongs to the step `(kh, (k+1)h]` and to every sub-node at or
/// after `t`.
pub(super) struct JumpDriver<'a> {
    part: &'a JumpPart,
    stream: &'a JumpStream,
    h: f64,
    refine: usize,
    next: usize,
    y: Vec<f64>,
    yd: Vec<f64>,
    compensator: Vec<f64>,
    sum: Vec<f64>,
    scratch: Vec<f64>,
}

impl<'a> JumpDriver<'a> {
    pub(super) fn new(
        model: &NeutralModel,
        part: &'a JumpPart,
        stream: &'a JumpStream,
        grid: &TimeGrid,
        refine: usize,
    ) -> Self {
        let n = model.dim();
        Self {
            part,
            stream,
            h: grid.h(),
            refine,
            next: stream.times().partition_point(|&t| t <= 0.0),
            y: vec![0.0; n],
            yd: vec![0.0; n],
            compensator: vec![0.0; n],
            sum: vec![0.0; n],
            scratch: vec![0.0; n],
        }
    }

    fn node_time(&self, k: usize, r: usize) -> f64 {
        let j = k * self.refine + r;
        (j / self.refine) as f64 * self.h + (j % self.refine) as f64 * (self.h / self.refine as f64)
    }
}

impl StepDriver for JumpDriver<'_> {
    fn freeze(&mut self, y: &[f64], yd: &[f64]) {
        self.y.copy_from_slice(y);
        self.yd.copy_from_slice(yd);
        (self.part.compensator)(y, yd, &mut self.compensator);
        self.sum.fill(0.0);
    }

    fn add_to(&mut self, k: usize, r: usize, elapsed: f64, out: &mut [f64]) {
        let until = self.node_time(k, r);
        let times = self.stream.times();
        let marks = self.stream.marks();
        while self.next < times.len() && times[self.next] <= until {
            (self.part.coefficient)(&self.y, &self.yd, marks[self.next], &mut self.scratch);
            for (s, g) in self.sum.iter_mut().zip(&self.scratch) {
                *s += g;
            }
            self.next += 1;
        }
        for ((o, s), c) in out.iter_mut().zip(&self.sum).zip(&self.compensator) {
            *o += s - c * elapsed;
        }
    }
}
