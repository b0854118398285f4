use rand::Rng;
use serde::{Deserialize, Serialize};

use super::layers::{Block, LayerSpec, Stage};
use crate::error::{check_len, Error, Result};

/// Shape-checked architecture: a 1-channel input sequence flowing through a
/// list of stages.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub input_len: usize,
    pub stages: Vec<Stage>,
}

impl Architecture {
    pub fn new(input_len: usize, stages: Vec<Stage>) -> Result<Self> {
        let arch = Self { input_len, stages };
        arch.shapes()?;
        Ok(arch)
    }

    /// `(channels, length)` entering each stage, plus the final output shape.
    fn shapes(&self) -> Result<Vec<(usize, usize)>> {
        if self.input_len == 0 {
            return Err(Error::Config("network input length must be positive".into()));
        }
        let mut shape = (1, self.input_len);
        let mut shapes = vec![shape];
        for stage in &self.stages {
            shape = match stage {
                Stage::Conv(c) => {
                    check_len("conv input channels", c.in_channels, shape.0)?;
                    (c.out_channels, shape.1)
                }
                Stage::Block(b) => {
                    check_len("block input channels", b.in_channels(), shape.0)?;
                    (b.out_channels(), shape.1)
                }
                Stage::Dense(d) => {
                    check_len("dense input features", d.in_features, shape.0 * shape.1)?;
                    (1, d.out_features)
                }
            };
            shapes.push(shape);
        }
        Ok(shapes)
    }

    pub fn output_len(&self) -> usize {
        let (c, l) = *self.shapes().expect("validated").last().unwrap();
        c * l
    }

    pub fn param_count(&self) -> usize {
        self.stages.iter().map(Stage::param_count).sum()
    }

    pub fn layers(&self) -> Vec<LayerSpec> {
        self.stages.iter().flat_map(Stage::layers).collect()
    }
}

/// Intermediate activations of one forward pass.
#[derive(Clone, Debug)]
pub struct Trace {
    input: Vec<f64>,
    stages: Vec<StageTrace>,
}

#[derive(Clone, Debug)]
enum StageTrace {
    Conv { out: Vec<f64>, length: usize },
    Block { a1: Vec<f64>, a2: Vec<f64>, a3: Vec<f64>, out: Vec<f64>, length: usize },
    Dense { out: Vec<f64> },
}

impl StageTrace {
    fn output(&self) -> &[f64] {
        match self {
            StageTrace::Conv { out, .. } | StageTrace::Block { out, .. } | StageTrace::Dense { out } => out,
        }
    }
}

impl Trace {
    pub fn output(&self) -> &[f64] {
        self.stages.last().map_or(&self.input, StageTrace::output)
    }
}

/// A sequential network with its flat parameter vector (declaration order:
/// per layer, kernel then bias; inside a block c1, c2, c3, skip).
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    arch: Architecture,
    offsets: Vec<usize>,
    params: Vec<f64>,
    frozen: Vec<bool>,
}

impl Network {
    /// Builds the network with fan-in scaled uniform weights and zero biases.
    pub fn new(arch: Architecture, seed: u64) -> Self {
        let mut rng = crate::seed::rng(seed);
        let mut params = Vec::with_capacity(arch.param_count());
        let mut init = |fan_in: usize, weights: usize, biases: usize, params: &mut Vec<f64>| {
            let bound = (3.0 / fan_in as f64).sqrt();
            params.extend((0..weights).map(|_| rng.random_range(-bound..bound)));
            params.extend(std::iter::repeat_n(0.0, biases));
        };
        for stage in &arch.stages {
            match stage {
                Stage::Conv(c) => init(c.kernel_size * c.in_channels, c.weight_count(), c.out_channels, &mut params),
                Stage::Block(b) => {
                    for c in b.convs.iter().chain(b.skip.iter()) {
                        init(c.kernel_size * c.in_channels, c.weight_count(), c.out_channels, &mut params);
                    }
                }
                Stage::Dense(d) => init(d.in_features, d.in_features * d.out_features, d.out_features, &mut params),
            }
        }
        Self::from_params(arch, params).expect("initializer matches parameter count")
    }

    pub fn from_params(arch: Architecture, params: Vec<f64>) -> Result<Self> {
        check_len("network parameters", arch.param_count(), params.len())?;
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Format("non-finite network parameter".into()));
        }
        let mut offsets = Vec::with_capacity(arch.stages.len());
        let mut at = 0;
        for s in &arch.stages {
            offsets.push(at);
            at += s.param_count();
        }
        let frozen = vec![false; arch.stages.len()];
        Ok(Self {
            arch,
            offsets,
            params,
            frozen,
        })
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn input_len(&self) -> usize {
        self.arch.input_len
    }

    pub fn output_len(&self) -> usize {
        self.arch.output_len()
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        check_len("network parameters", self.params.len(), params.len())?;
        self.params.copy_from_slice(params);
        Ok(())
    }

    /// Parameter range `[start, end)` of stage `index`.
    pub fn stage_range(&self, index: usize) -> std::ops::Range<usize> {
        let start = self.offsets[index];
        start..start + self.arch.stages[index].param_count()
    }

    /// Excludes a stage from optimizer updates.
    pub fn freeze_stage(&mut self, index: usize) {
        self.frozen[index] = true;
    }

    pub fn freeze_all(&mut self) {
        self.frozen.iter_mut().for_each(|f| *f = true);
    }

    pub fn is_frozen(&self, index: usize) -> bool {
        self.frozen[index]
    }

    /// Parameter ranges the optimizer may update.
    pub fn trainable_ranges(&self) -> Vec<std::ops::Range<usize>> {
        (0..self.arch.stages.len())
            .filter(|&i| !self.frozen[i])
            .map(|i| self.stage_range(i))
            .collect()
    }

    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>> {
        check_len("network input", self.input_len(), input.len())?;
        Ok(self.trace(input).output().to_vec())
    }

    /// Forward pass keeping every activation needed by [`Network::backward`].
    /// The caller guarantees `input.len() == self.input_len()`.
    pub fn trace(&self, input: &[f64]) -> Trace {
        debug_assert_eq!(input.len(), self.input_len());
        let mut stages = Vec::with_capacity(self.arch.stages.len());
        let mut length = self.arch.input_len;
        for (i, stage) in self.arch.stages.iter().enumerate() {
            let x: &[f64] = stages.last().map_or(input, StageTrace::output);
            let p = &self.params[self.offsets[i]..];
            let st = match stage {
                Stage::Conv(c) => StageTrace::Conv { out: c.forward(p, x, length), length },
                Stage::Block(b) => block_forward(b, p, x, length),
                Stage::Dense(d) => {
                    length = d.out_features;
                    StageTrace::Dense { out: d.forward(p, x) }
                }
            };
            stages.push(st);
        }
        Trace {
            input: input.to_vec(),
            stages,
        }
    }

    /// Reverse pass: accumulates `d loss / d params` into `grad_params` and
    /// returns `d loss / d input` when `want_input_grad` is set.
    pub fn backward(
        &self,
        trace: &Trace,
        grad_output: &[f64],
        grad_params: &mut [f64],
        want_input_grad: bool,
    ) -> Option<Vec<f64>> {
        let mut grad = grad_output.to_vec();
        let n = self.arch.stages.len();
        for i in (0..n).rev() {
            let x: &[f64] = if i == 0 { &trace.input } else { trace.stages[i - 1].output() };
            let need_gx = i > 0 || want_input_grad;
            let p = &self.params[self.offsets[i]..];
            let gp = &mut grad_params[self.offsets[i]..];
            let gx = match (&self.arch.stages[i], &trace.stages[i]) {
                (Stage::Conv(c), StageTrace::Conv { out, length }) => {
                    c.backward(p, x, out, &grad, *length, gp, need_gx)
                }
                (Stage::Block(b), StageTrace::Block { a1, a2, a3, length, .. }) => {
                    block_backward(b, p, x, a1, a2, a3, &grad, *length, gp, need_gx)
                }
                (Stage::Dense(d), StageTrace::Dense { out }) => d.backward(p, x, out, &grad, gp, need_gx),
                _ => unreachable!("trace does not match architecture"),
            };
            grad = gx?;
        }
        Some(grad)
    }
}

fn block_forward(b: &Block, p: &[f64], x: &[f64], length: usize) -> StageTrace {
    let [c1, c2, c3] = &b.convs;
    let o2 = c1.param_count();
    let o3 = o2 + c2.param_count();
    let os = o3 + c3.param_count();
    let a1 = c1.forward(p, x, length);
    let a2 = c2.forward(&p[o2..], &a1, length);
    let a3 = c3.forward(&p[o3..], &a2, length);
    let mut out = match &b.skip {
        Some(s) => s.forward(&p[os..], x, length),
        None => x.to_vec(),
    };
    for (o, a) in out.iter_mut().zip(&a3) {
        *o += a;
    }
    StageTrace::Block { a1, a2, a3, out, length }
}

#[allow(clippy::too_many_arguments)]
fn block_backward(
    b: &Block,
    p: &[f64],
    x: &[f64],
    a1: &[f64],
    a2: &[f64],
    a3: &[f64],
    grad: &[f64],
    length: usize,
    gp: &mut [f64],
    need_gx: bool,
) -> Option<Vec<f64>> {
    let [c1, c2, c3] = &b.convs;
    let o2 = c1.param_count();
    let o3 = o2 + c2.param_count();
    let os = o3 + c3.param_count();
    let g2 = c3.backward(&p[o3..], a2, a3, grad, length, &mut gp[o3..], true).unwrap();
    let g1 = c2.backward(&p[o2..], a1, a2, &g2, length, &mut gp[o2..], true).unwrap();
    let gx_main = c1.backward(p, x, a1, &g1, length, gp, need_gx);
    let gx_skip = match &b.skip {
        // skip conv has no activation, so its output is not needed for the mask
        Some(s) => s.backward(&p[os..], x, &[], grad, length, &mut gp[os..], need_gx),
        None => need_gx.then(|| grad.to_vec()),
    };
    match (gx_main, gx_skip) {
        (Some(mut a), Some(s)) => {
            a.iter_mut().zip(&s).for_each(|(a, s)| *a += s);
            Some(a)
        }
        _ => None,
    }
}
