//! Scaled conjugate gradient training (Møller, 1993).
//!
//! No line search: curvature along the search direction comes from a
//! finite difference of gradients, and a Levenberg-style scale `λ` keeps the
//! local quadratic model positive definite. A step is taken only when the
//! comparison ratio `Δ` is positive, so accepted steps always lower the
//! performance and rejected steps leave the weights untouched.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{check_shapes, perf_and_gradient, MlpModel, TrainingSet};
use crate::network::TrainConfig;
use crate::{Error, Result};
use crate::math;

/// `λ` above this aborts training.
pub const LAMBDA_MAX: f64 = 1e15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Epochs,
    MseGoal,
    GradGoal,
    LambdaOverflow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs_run: usize,
    pub final_perf: f64,
    pub final_grad_norm: f64,
    pub stop_reason: StopReason,
    /// Performance before the first epoch followed by the value after each
    /// epoch; `epochs_run + 1` entries.
    pub perf_history: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(w: &[f64], step: f64, dir: &[f64]) -> Vec<f64> {
    w.iter().zip(dir).map(|(w, d)| w + step * d).collect()
}

fn evaluate(model: &mut MlpModel, w: &[f64], set: &TrainingSet, gamma: f64) -> (f64, Vec<f64>) {
    model.set_params(w);
    perf_and_gradient(model, set, gamma)
}

fn finite(values: &[f64]) -> bool {
    values.iter().all(|v| v.is_finite())
}

/// Initializes weights uniformly in `[-0.5, 0.5]` from `cfg.seed` and trains.
pub fn scg_train(set: &TrainingSet, cfg: &TrainConfig) -> Result<(MlpModel, TrainReport)> {
    cfg.validate()?;
    let model = MlpModel::random(set.inputs(), cfg.hidden, set.outputs(), cfg.seed);
    scg_train_from(model, set, cfg)
}

/// Trains starting from `model`.
pub fn scg_train_from(
    mut model: MlpModel,
    set: &TrainingSet,
    cfg: &TrainConfig,
) -> Result<(MlpModel, TrainReport)> {
    cfg.validate()?;
    model.validate()?;
    check_shapes(&model, set)?;
    let gamma = cfg.reg_gamma;
    let n = model.num_params();

    let mut w = model.params();
    let (mut perf, mut grad) = perf_and_gradient(&model, set, gamma);
    if !perf.is_finite() || !finite(&grad) {
        return Err(Error::NonFinite("initial performance"));
    }
    let mut r: Vec<f64> = grad.iter().map(|g| -g).collect();
    let mut p = r.clone();
    let mut lambda = cfg.lambda0;
    let mut lambda_bar = 0.0;
    let mut success = true;
    let mut delta = 0.0;
    let mut history = Vec::with_capacity(cfg.max_epochs + 1);
    history.push(perf);
    let mut epoch = 0;

    let stop_reason = loop {
        let grad_norm = math::sqrt(dot(&grad, &grad));
        if perf <= cfg.mse_goal {
            break StopReason::MseGoal;
        }
        if grad_norm <= cfg.grad_goal {
            break StopReason::GradGoal;
        }
        if epoch >= cfg.max_epochs {
            break StopReason::Epochs;
        }
        if lambda > LAMBDA_MAX {
            break StopReason::LambdaOverflow;
        }
        epoch += 1;

        let p_sq = dot(&p, &p);
        if success {
            // Second-order information along p from a gradient difference.
            let sigma = cfg.sigma0 / math::sqrt(p_sq);
            let (_, g_probe) = evaluate(&mut model, &axpy(&w, sigma, &p), set, gamma);
            let s: Vec<f64> = g_probe.iter().zip(&grad).map(|(a, b)| (a - b) / sigma).collect();
            delta = dot(&p, &s);
        }
        delta += (lambda - lambda_bar) * p_sq;
        if delta <= 0.0 {
            lambda_bar = 2.0 * (lambda - delta / p_sq);
            delta = -delta + lambda * p_sq;
            lambda = lambda_bar;
        }
        let mu = dot(&p, &r);
        let alpha = mu / delta;
        let w_new = axpy(&w, alpha, &p);
        let (perf_new, grad_new) = evaluate(&mut model, &w_new, set, gamma);
        let comparison = if perf_new.is_finite() && finite(&grad_new) {
            2.0 * delta * (perf - perf_new) / (mu * mu)
        } else {
            -1.0
        };

        if comparison > 0.0 {
            w = w_new;
            perf = perf_new;
            grad = grad_new;
            let r_new: Vec<f64> = grad.iter().map(|g| -g).collect();
            lambda_bar = 0.0;
            success = true;
            if epoch % n == 0 {
                p = r_new.clone();
            } else {
                let beta = (dot(&r_new, &r_new) - dot(&r_new, &r)) / mu;
                p = r_new.iter().zip(&p).map(|(r, p)| r + beta * p).collect();
            }
            r = r_new;
            if comparison >= 0.75 {
                lambda *= 0.25;
            }
        } else {
            lambda_bar = lambda;
            success = false;
        }
        if comparison < 0.25 {
            lambda += delta * (1.0 - comparison) / p_sq;
        }
        if !lambda.is_finite() {
            lambda = f64::INFINITY;
        }
        history.push(perf);
    };

    model.set_params(&w);
    let final_grad_norm = math::sqrt(dot(&grad, &grad));
    let report = TrainReport {
        epochs_run: epoch,
        final_perf: perf,
        final_grad_norm,
        stop_reason,
        perf_history: history,
    };
    Ok((model, report))
}
