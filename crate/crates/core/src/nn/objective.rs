//! Per-sample training objectives.

use std::ops::Range;

use super::loss::{l1, l1_grad};
use super::network::Network;
use crate::error::{check_len, Result};

pub trait Objective: Sync {
    /// Checks that samples of the given shape fit the network under training.
    fn check_dims(&self, net: &Network, input_dim: usize, target_dim: usize) -> Result<()>;

    /// Loss of one sample; the caller has checked dimensions.
    fn loss(&self, net: &Network, input: &[f64], target: &[f64]) -> f64;

    /// Loss of one sample, accumulating its parameter gradient into `grad`.
    fn loss_grad(&self, net: &Network, input: &[f64], target: &[f64], grad: &mut [f64]) -> f64;

    /// Model output the loss compares against the target.
    fn prediction(&self, net: &Network, input: &[f64]) -> Vec<f64>;
}

/// `L1(net(x), y)`.
#[derive(Clone, Copy, Debug, Default)]
pub struct DirectL1;

impl Objective for DirectL1 {
    fn check_dims(&self, net: &Network, input_dim: usize, target_dim: usize) -> Result<()> {
        check_len("network input", net.input_len(), input_dim)?;
        check_len("network output", net.output_len(), target_dim)
    }

    fn loss(&self, net: &Network, input: &[f64], target: &[f64]) -> f64 {
        l1(net.trace(input).output(), target)
    }

    fn loss_grad(&self, net: &Network, input: &[f64], target: &[f64], grad: &mut [f64]) -> f64 {
        let trace = net.trace(input);
        let out = trace.output();
        let g = l1_grad(out, target);
        net.backward(&trace, &g, grad, false);
        l1(out, target)
    }

    fn prediction(&self, net: &Network, input: &[f64]) -> Vec<f64> {
        net.trace(input).output().to_vec()
    }
}

/// Re-simulation misfit `L1(outer([inner(x), x[carry]]), y)`: the trained
/// network is `inner`; `outer` is held fixed and only propagates gradients.
#[derive(Clone, Debug)]
pub struct Composed<'a> {
    pub outer: &'a Network,
    /// Input positions appended after the inner output to form the outer input.
    pub carry: Range<usize>,
}

impl Composed<'_> {
    fn outer_input(&self, inner_out: &[f64], input: &[f64]) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.outer.input_len());
        v.extend_from_slice(inner_out);
        v.extend_from_slice(&input[self.carry.clone()]);
        v
    }
}

impl Objective for Composed<'_> {
    fn check_dims(&self, net: &Network, input_dim: usize, target_dim: usize) -> Result<()> {
        check_len("inner network input", net.input_len(), input_dim)?;
        if self.carry.end > input_dim {
            return Err(crate::Error::Dimension {
                context: "carried input positions",
                expected: input_dim,
                found: self.carry.end,
            });
        }
        check_len(
            "outer network input",
            self.outer.input_len(),
            net.output_len() + self.carry.len(),
        )?;
        check_len("outer network output", self.outer.output_len(), target_dim)
    }

    fn loss(&self, net: &Network, input: &[f64], target: &[f64]) -> f64 {
        l1(&self.prediction(net, input), target)
    }

    fn loss_grad(&self, net: &Network, input: &[f64], target: &[f64], grad: &mut [f64]) -> f64 {
        let inner = net.trace(input);
        let outer = self.outer.trace(&self.outer_input(inner.output(), input));
        let out = outer.output();
        let g = l1_grad(out, target);
        let mut scratch = vec![0.0; self.outer.param_count()];
        let g_outer_in = self
            .outer
            .backward(&outer, &g, &mut scratch, true)
            .expect("input gradient requested");
        let n_inner = net.output_len();
        net.backward(&inner, &g_outer_in[..n_inner], grad, false);
        l1(out, target)
    }

    fn prediction(&self, net: &Network, input: &[f64]) -> Vec<f64> {
        let inner = net.trace(input);
        self.outer
            .trace(&self.outer_input(inner.output(), input))
            .output()
            .to_vec()
    }
}
