use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// `(1 / 2n)·Σ‖prediction − target‖²` over a batch of `n`, and its gradient
/// `(prediction − target) / n`.
pub fn euclidean_loss(prediction: &Tensor, target: &Tensor) -> Result<(f64, Tensor)> {
    if prediction.dims() != target.dims() {
        return Err(Error::Usage(format!(
            "loss operands differ: {} vs {}",
            prediction.dims(),
            target.dims()
        )));
    }
    let n = prediction.dims().n.max(1) as f64;
    let mut sum = 0.0f64;
    let grad = prediction
        .data()
        .iter()
        .zip(target.data())
        .map(|(&p, &t)| {
            let d = p as f64 - t as f64;
            sum += d * d;
            (d / n) as f32
        })
        .collect();
    Ok((sum / (2.0 * n), Tensor::from_vec(prediction.dims(), grad)?))
}

/// Loss of a predicted residual (network output before the global skip)
/// against the high-frequency target `hr − lr`.
pub fn residual_loss(residual: &Tensor, lr: &Tensor, hr: &Tensor) -> Result<(f64, Tensor)> {
    if lr.dims() != hr.dims() {
        return Err(Error::Usage(format!("LR {} and HR {} differ", lr.dims(), hr.dims())));
    }
    let target = Tensor::from_vec(
        hr.dims(),
        hr.data().iter().zip(lr.data()).map(|(h, l)| h - l).collect(),
    )?;
    euclidean_loss(residual, &target)
}
