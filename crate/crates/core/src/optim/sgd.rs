use super::config::TrainConfig;
use crate::arch::{Gradients, ParamMut};
use crate::error::{Error, Result};

/// `base_lr · 10^(−⌊epoch / lr_step⌋)`.
pub fn lr_at(epoch: usize, config: &TrainConfig) -> f64 {
    let decades = (epoch / config.lr_step) as i32;
    config.base_lr / 10f64.powi(decades)
}

/// Clamp every element into `[−τ/η, τ/η]`, bounding each step's gradient
/// contribution `η·g` by `τ` whatever the current learning rate.
pub fn clip_gradients(grads: &mut Gradients, lr: f64, tau: f64) {
    let bound = (tau / lr) as f32;
    for e in grads.iter_mut() {
        for g in &mut e.data {
            *g = g.clamp(-bound, bound);
        }
    }
}

/// Momentum buffers, one per parameter tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState {
    pub velocity: Vec<Vec<f32>>,
    pub shapes: Vec<Vec<usize>>,
    pub epoch: usize,
    pub step: u64,
}

impl OptimizerState {
    pub fn new(params: &[ParamMut<'_>]) -> Self {
        OptimizerState {
            velocity: params.iter().map(|p| vec![0.0; p.data.len()]).collect(),
            shapes: params.iter().map(|p| p.shape.clone()).collect(),
            epoch: 0,
            step: 0,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.velocity.iter().flatten().all(|v| v.is_finite())
    }
}

/// One momentum step at the learning rate of `state.epoch`:
///
/// ```text
/// g' = g + weight_decay·θ      (weights only)
/// Δ  = m·Δ − η·g'
/// θ  = θ + Δ
/// ```
///
/// `grads` must already be clipped. A non-finite gradient aborts the step
/// before any parameter changes.
pub fn sgd_step(
    params: &mut [ParamMut<'_>],
    grads: &Gradients,
    state: &mut OptimizerState,
    config: &TrainConfig,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.velocity.len() {
        return Err(Error::Usage(format!(
            "{} parameters, {} gradients, {} velocity buffers",
            params.len(),
            grads.len(),
            state.velocity.len()
        )));
    }
    for (p, g) in params.iter().zip(grads.iter()) {
        if p.name != g.name || p.data.len() != g.data.len() {
            return Err(Error::Usage(format!("gradient {} does not match parameter {}", g.name, p.name)));
        }
        if g.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteGradient(p.name.clone()));
        }
    }
    let lr = lr_at(state.epoch, config);
    let m = config.momentum;
    for ((p, g), vel) in params.iter_mut().zip(grads.iter()).zip(&mut state.velocity) {
        let decay = if p.kind.decays() { config.weight_decay } else { 0.0 };
        for ((theta, &grad), v) in p.data.iter_mut().zip(&g.data).zip(vel.iter_mut()) {
            let effective = grad as f64 + decay * *theta as f64;
            let delta = m * *v as f64 - lr * effective;
            *v = delta as f32;
            *theta = (*theta as f64 + delta) as f32;
        }
    }
    state.step += 1;
    Ok(())
}
