use super::{Dims, Mode, Tensor};
use crate::error::{Error, Result};

pub const BN_EPSILON: f32 = 1e-5;
/// Weight of the current batch in the running-statistics moving average.
pub const BN_MOMENTUM: f32 = 0.1;

/// Per-channel batch normalization: `γ·(x − μ)/√(σ² + ε) + β`.
#[derive(Clone, Debug, PartialEq)]
pub struct BnParams {
    pub name: String,
    pub gamma: Vec<f32>,
    pub beta: Vec<f32>,
    pub running_mean: Vec<f32>,
    pub running_var: Vec<f32>,
    pub epsilon: f32,
    /// False until a training-mode pass has produced running statistics.
    pub tracked: bool,
}

impl BnParams {
    pub fn new(name: impl Into<String>, channels: usize) -> Self {
        BnParams {
            name: name.into(),
            gamma: vec![1.0; channels],
            beta: vec![0.0; channels],
            running_mean: vec![0.0; channels],
            running_var: vec![1.0; channels],
            epsilon: BN_EPSILON,
            tracked: false,
        }
    }

    pub fn channels(&self) -> usize {
        self.gamma.len()
    }
}

/// Saved by the forward pass for the backward pass.
#[derive(Clone, Debug)]
pub struct BnCache {
    mode: Mode,
    normalized: Tensor,
    inv_std: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BnGrads {
    pub input: Tensor,
    pub gamma: Vec<f32>,
    pub beta: Vec<f32>,
}

fn channel_stats(input: &Tensor, c: usize) -> (f64, f64) {
    let d = input.dims();
    let hw = d.plane();
    let mut sum = 0.0f64;
    for n in 0..d.n {
        let start = (n * d.c + c) * hw;
        sum += input.data()[start..start + hw].iter().map(|&v| v as f64).sum::<f64>();
    }
    let count = (d.n * hw) as f64;
    let mean = sum / count;
    let mut sq = 0.0f64;
    for n in 0..d.n {
        let start = (n * d.c + c) * hw;
        sq += input.data()[start..start + hw]
            .iter()
            .map(|&v| (v as f64 - mean).powi(2))
            .sum::<f64>();
    }
    (mean, sq / count)
}

fn for_channel_planes(d: Dims, c: usize, mut f: impl FnMut(std::ops::Range<usize>)) {
    let hw = d.plane();
    for n in 0..d.n {
        let start = (n * d.c + c) * hw;
        f(start..start + hw);
    }
}

pub fn bn_forward(input: &Tensor, params: &mut BnParams, mode: Mode) -> Result<(Tensor, BnCache)> {
    let d = input.dims();
    if params.channels() != d.c {
        return Err(Error::config(
            &params.name,
            format!("normalizes {} channels, input has {}", params.channels(), d.c),
        ));
    }
    if mode == Mode::Eval && !params.tracked {
        return Err(Error::UninitializedStatistics(params.name.clone()));
    }
    let count = d.n * d.plane();
    if mode == Mode::Train && count == 0 {
        return Err(Error::Usage(format!("{}: empty batch", params.name)));
    }
    let mut normalized = Tensor::zeros(d);
    let mut out = Tensor::zeros(d);
    let mut inv_std = Vec::with_capacity(d.c);
    for c in 0..d.c {
        let (mean, var) = match mode {
            Mode::Train => {
                let (mean, var) = channel_stats(input, c);
                let unbiased = if count > 1 {
                    var * count as f64 / (count - 1) as f64
                } else {
                    var
                };
                let m = BN_MOMENTUM as f64;
                params.running_mean[c] =
                    ((1.0 - m) * params.running_mean[c] as f64 + m * mean) as f32;
                params.running_var[c] =
                    ((1.0 - m) * params.running_var[c] as f64 + m * unbiased) as f32;
                (mean, var)
            }
            Mode::Eval => (params.running_mean[c] as f64, params.running_var[c] as f64),
        };
        let istd = 1.0 / (var + params.epsilon as f64).sqrt();
        inv_std.push(istd);
        let (g, b) = (params.gamma[c] as f64, params.beta[c] as f64);
        for_channel_planes(d, c, |range| {
            for i in range {
                let xhat = (input.data()[i] as f64 - mean) * istd;
                normalized.data_mut()[i] = xhat as f32;
                out.data_mut()[i] = (g * xhat + b) as f32;
            }
        });
    }
    if mode == Mode::Train {
        params.tracked = true;
    }
    Ok((
        out,
        BnCache {
            mode,
            normalized,
            inv_std,
        },
    ))
}

pub fn bn_backward(cache: &BnCache, params: &BnParams, grad_out: &Tensor) -> Result<BnGrads> {
    let d = grad_out.dims();
    if cache.normalized.dims() != d {
        return Err(Error::config(
            &params.name,
            format!("gradient dims {d} do not match cached {}", cache.normalized.dims()),
        ));
    }
    let count = (d.n * d.plane()) as f64;
    let mut grad_input = Tensor::zeros(d);
    let mut gamma = Vec::with_capacity(d.c);
    let mut beta = Vec::with_capacity(d.c);
    for c in 0..d.c {
        let mut sum_g = 0.0f64;
        let mut sum_gx = 0.0f64;
        for_channel_planes(d, c, |range| {
            for i in range {
                let g = grad_out.data()[i] as f64;
                sum_g += g;
                sum_gx += g * cache.normalized.data()[i] as f64;
            }
        });
        gamma.push(sum_gx as f32);
        beta.push(sum_g as f32);
        let scale = params.gamma[c] as f64 * cache.inv_std[c];
        for_channel_planes(d, c, |range| {
            for i in range {
                let g = grad_out.data()[i] as f64;
                let v = match cache.mode {
                    Mode::Train => {
                        let xhat = cache.normalized.data()[i] as f64;
                        scale * (g - sum_g / count - xhat * sum_gx / count)
                    }
                    Mode::Eval => scale * g,
                };
                grad_input.data_mut()[i] = v as f32;
            }
        });
    }
    Ok(BnGrads {
        input: grad_input,
        gamma,
        beta,
    })
}
