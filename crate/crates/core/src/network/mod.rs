//! Three-layer `tanh` network (inputs → hidden → outputs).
//!
//! Parameters are flattened in the order `w1` (hidden × inputs, row-major),
//! `b1`, `w2` (outputs × hidden, row-major), `b2`. Gradients use the same
//! layout.

mod scg;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};
use crate::math;

pub use scg::{scg_train, scg_train_from, StopReason, TrainReport};

/// Input width produced by the default Gabor bank.
pub const DEFAULT_INPUTS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub inputs: usize,
    pub hidden: usize,
    pub outputs: usize,
    /// Seed used to draw the initial weights.
    pub seed: u64,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl MlpModel {
    pub fn zeros(inputs: usize, hidden: usize, outputs: usize) -> Self {
        Self {
            inputs,
            hidden,
            outputs,
            seed: 0,
            w1: vec![0.0; hidden * inputs],
            b1: vec![0.0; hidden],
            w2: vec![0.0; outputs * hidden],
            b2: vec![0.0; outputs],
        }
    }

    /// Every parameter drawn uniformly from `[-0.5, 0.5]`.
    pub fn random(inputs: usize, hidden: usize, outputs: usize, seed: u64) -> Self {
        let mut model = Self::zeros(inputs, hidden, outputs);
        model.seed = seed;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params: Vec<f64> =
            (0..model.num_params()).map(|_| rng.random_range(-0.5..=0.5)).collect();
        model.set_params(&params);
        model
    }

    pub fn num_params(&self) -> usize {
        self.hidden * self.inputs + self.hidden + self.outputs * self.hidden + self.outputs
    }

    /// Checks the weight arrays against the declared sizes.
    pub fn validate(&self) -> Result<()> {
        let expect = [
            (self.w1.len(), self.hidden * self.inputs),
            (self.b1.len(), self.hidden),
            (self.w2.len(), self.outputs * self.hidden),
            (self.b2.len(), self.outputs),
        ];
        for (got, expected) in expect {
            if got != expected {
                return Err(Error::ShapeError { expected, got });
            }
        }
        if self.inputs == 0 || self.hidden == 0 || self.outputs == 0 {
            return Err(Error::InvalidParams("network layers must be nonempty".into()));
        }
        if self.params().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("model weights"));
        }
        Ok(())
    }

    pub fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.num_params());
        p.extend_from_slice(&self.w1);
        p.extend_from_slice(&self.b1);
        p.extend_from_slice(&self.w2);
        p.extend_from_slice(&self.b2);
        p
    }

    /// Panics if `params.len() != self.num_params()`.
    pub fn set_params(&mut self, params: &[f64]) {
        assert_eq!(params.len(), self.num_params());
        let (w1, rest) = params.split_at(self.w1.len());
        let (b1, rest) = rest.split_at(self.b1.len());
        let (w2, b2) = rest.split_at(self.w2.len());
        self.w1.copy_from_slice(w1);
        self.b1.copy_from_slice(b1);
        self.w2.copy_from_slice(w2);
        self.b2.copy_from_slice(b2);
    }

    fn hidden_activations(&self, x: &[f64], out: &mut [f64]) {
        for (j, h) in out.iter_mut().enumerate() {
            let row = &self.w1[j * self.inputs..(j + 1) * self.inputs];
            let z: f64 = row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.b1[j];
            *h = math::tanh(z);
        }
    }

    fn output_activations(&self, hidden: &[f64], out: &mut [f64]) {
        for (k, y) in out.iter_mut().enumerate() {
            let row = &self.w2[k * self.hidden..(k + 1) * self.hidden];
            let z: f64 = row.iter().zip(hidden).map(|(w, h)| w * h).sum::<f64>() + self.b2[k];
            *y = math::tanh(z);
        }
    }

    /// `tanh(w2 · tanh(w1 · x + b1) + b2)`.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.inputs {
            return Err(Error::ShapeError { expected: self.inputs, got: x.len() });
        }
        let mut hidden = vec![0.0; self.hidden];
        let mut out = vec![0.0; self.outputs];
        self.hidden_activations(x, &mut hidden);
        self.output_activations(&hidden, &mut out);
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub max_epochs: usize,
    /// Stop once the regularized performance falls to this value.
    pub mse_goal: f64,
    /// Stop once the gradient norm falls to this value.
    pub grad_goal: f64,
    /// Weight of the MSE term; `1 - reg_gamma` weighs the mean squared weight.
    pub reg_gamma: f64,
    pub hidden: usize,
    pub seed: u64,
    /// Gradient-difference step scale.
    pub sigma0: f64,
    /// Initial Levenberg scale.
    pub lambda0: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            max_epochs: 300,
            mse_goal: 3.0e-4,
            grad_goal: 1.0e-6,
            reg_gamma: 0.9,
            hidden: 25,
            seed: 1,
            sigma0: 1.0e-5,
            lambda0: 1.0e-7,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.mse_goal) || !positive(self.grad_goal) {
            return Err(Error::InvalidParams("training goals must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.reg_gamma) {
            return Err(Error::InvalidParams(format!(
                "regularization ratio {} outside [0, 1]",
                self.reg_gamma
            )));
        }
        if self.hidden == 0 {
            return Err(Error::InvalidParams("hidden layer must be nonempty".into()));
        }
        if !positive(self.sigma0) || !positive(self.lambda0) {
            return Err(Error::InvalidParams("SCG sigma0 and lambda0 must be positive".into()));
        }
        Ok(())
    }
}

/// Patterns with their `±1` target vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSet {
    inputs: usize,
    outputs: usize,
    patterns: Vec<Vec<f64>>,
    targets: Vec<Vec<f64>>,
}

impl TrainingSet {
    pub fn new(patterns: Vec<Vec<f64>>, targets: Vec<Vec<f64>>) -> Result<Self> {
        let invalid = |msg: alloc::string::String| Err(Error::InvalidTrainingSet(msg));
        if patterns.is_empty() {
            return invalid("no patterns".into());
        }
        if patterns.len() != targets.len() {
            return invalid(format!("{} patterns but {} targets", patterns.len(), targets.len()));
        }
        let inputs = patterns[0].len();
        let outputs = targets[0].len();
        if inputs == 0 || outputs == 0 {
            return invalid("empty pattern or target".into());
        }
        if patterns.iter().any(|p| p.len() != inputs) {
            return invalid("patterns differ in length".into());
        }
        if patterns.iter().flatten().any(|v| !v.is_finite()) {
            return invalid("non-finite pattern value".into());
        }
        if targets.iter().any(|t| t.len() != outputs) {
            return invalid("targets differ in length".into());
        }
        if targets.iter().flatten().any(|&t| t != 1.0 && t != -1.0) {
            return invalid("target entries must be +1 or -1".into());
        }
        let flat = || targets.iter().flatten();
        if !flat().any(|&t| t == 1.0) || !flat().any(|&t| t == -1.0) {
            return invalid("all targets are equal".into());
        }
        Ok(Self { inputs, outputs, patterns, targets })
    }

    /// One-hot `±1` targets: `Some(i)` is a positive for feature `i`,
    /// `None` a non-feature pattern (all `-1`).
    pub fn from_labels(
        patterns: Vec<Vec<f64>>,
        labels: &[Option<usize>],
        outputs: usize,
    ) -> Result<Self> {
        if let Some(i) = labels.iter().flatten().find(|&&i| i >= outputs) {
            return Err(Error::InvalidTrainingSet(format!(
                "feature index {i} out of range for {outputs} outputs"
            )));
        }
        let targets = labels
            .iter()
            .map(|l| (0..outputs).map(|k| if *l == Some(k) { 1.0 } else { -1.0 }).collect())
            .collect();
        Self::new(patterns, targets)
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn patterns(&self) -> &[Vec<f64>] {
        &self.patterns
    }

    pub fn targets(&self) -> &[Vec<f64>] {
        &self.targets
    }
}

fn check_shapes(m: &MlpModel, set: &TrainingSet) -> Result<()> {
    if m.inputs != set.inputs {
        return Err(Error::ShapeError { expected: m.inputs, got: set.inputs });
    }
    if m.outputs != set.outputs {
        return Err(Error::ShapeError { expected: m.outputs, got: set.outputs });
    }
    Ok(())
}

fn mean_square(values: &[f64]) -> f64 {
    values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64
}

fn output_errors_sum(m: &MlpModel, set: &TrainingSet) -> f64 {
    let mut hidden = vec![0.0; m.hidden];
    let mut out = vec![0.0; m.outputs];
    let mut sse = 0.0;
    for (x, t) in set.patterns.iter().zip(&set.targets) {
        m.hidden_activations(x, &mut hidden);
        m.output_activations(&hidden, &mut out);
        sse += out.iter().zip(t).map(|(y, t)| (t - y) * (t - y)).sum::<f64>();
    }
    sse
}

/// Mean squared error over patterns and output units.
pub fn mse(m: &MlpModel, set: &TrainingSet) -> Result<f64> {
    check_shapes(m, set)?;
    Ok(output_errors_sum(m, set) / (set.len() * set.outputs) as f64)
}

/// Regularized performance `γ·MSE + (1 − γ)·mean(p²)` over all parameters
/// `p` (weights and biases).
pub fn perf(m: &MlpModel, set: &TrainingSet, gamma: f64) -> Result<f64> {
    let e = mse(m, set)?;
    Ok(gamma * e + (1.0 - gamma) * mean_square(&m.params()))
}

/// Gradient of [`perf`] with respect to the flattened parameters.
pub fn gradient(m: &MlpModel, set: &TrainingSet, gamma: f64) -> Result<Vec<f64>> {
    check_shapes(m, set)?;
    Ok(perf_and_gradient(m, set, gamma).1)
}

pub(crate) fn perf_and_gradient(m: &MlpModel, set: &TrainingSet, gamma: f64) -> (f64, Vec<f64>) {
    let (ni, nh, no) = (m.inputs, m.hidden, m.outputs);
    let mut gw1 = vec![0.0; nh * ni];
    let mut gb1 = vec![0.0; nh];
    let mut gw2 = vec![0.0; no * nh];
    let mut gb2 = vec![0.0; no];
    let mut hidden = vec![0.0; nh];
    let mut out = vec![0.0; no];
    let mut delta_out = vec![0.0; no];
    let mut delta_hidden = vec![0.0; nh];
    let scale = 2.0 * gamma / (set.len() * no) as f64;
    let mut sse = 0.0;

    for (x, t) in set.patterns.iter().zip(&set.targets) {
        m.hidden_activations(x, &mut hidden);
        m.output_activations(&hidden, &mut out);
        for k in 0..no {
            let err = out[k] - t[k];
            sse += err * err;
            delta_out[k] = scale * err * (1.0 - out[k] * out[k]);
        }
        for j in 0..nh {
            let back: f64 = (0..no).map(|k| m.w2[k * nh + j] * delta_out[k]).sum();
            delta_hidden[j] = back * (1.0 - hidden[j] * hidden[j]);
        }
        for k in 0..no {
            gb2[k] += delta_out[k];
            let row = &mut gw2[k * nh..(k + 1) * nh];
            for (g, h) in row.iter_mut().zip(&hidden) {
                *g += delta_out[k] * h;
            }
        }
        for j in 0..nh {
            gb1[j] += delta_hidden[j];
            let row = &mut gw1[j * ni..(j + 1) * ni];
            for (g, v) in row.iter_mut().zip(x) {
                *g += delta_hidden[j] * v;
            }
        }
    }

    let params = m.params();
    let n = params.len() as f64;
    let mut grad = Vec::with_capacity(params.len());
    grad.extend(gw1);
    grad.extend(gb1);
    grad.extend(gw2);
    grad.extend(gb2);
    let decay = 2.0 * (1.0 - gamma) / n;
    for (g, p) in grad.iter_mut().zip(&params) {
        *g += decay * p;
    }
    let perf = gamma * sse / (set.len() * no) as f64 + (1.0 - gamma) * mean_square(&params);
    (perf, grad)
}
