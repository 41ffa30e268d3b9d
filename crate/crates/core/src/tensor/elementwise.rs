use super::{ensure_same_dims, Tensor};
use crate::error::Result;

pub fn relu_forward(input: &Tensor) -> Tensor {
    input.map(|v| v.max(0.0))
}

/// Passes `grad_out` where `input > 0`; the subgradient at exactly zero is 0.
pub fn relu_backward(input: &Tensor, grad_out: &Tensor) -> Result<Tensor> {
    ensure_same_dims("relu", input.dims(), grad_out.dims())?;
    let data = input
        .data()
        .iter()
        .zip(grad_out.data())
        .map(|(&x, &g)| if x > 0.0 { g } else { 0.0 })
        .collect();
    Tensor::from_vec(input.dims(), data)
}

/// Elementwise sum; mismatched dims usually mean an ill-formed shortcut.
pub fn add_forward(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    ensure_same_dims("add", a.dims(), b.dims())?;
    let data = a.data().iter().zip(b.data()).map(|(x, y)| x + y).collect();
    Tensor::from_vec(a.dims(), data)
}

/// Both operands receive `grad_out` unchanged.
pub fn add_backward(grad_out: &Tensor) -> (Tensor, Tensor) {
    (grad_out.clone(), grad_out.clone())
}
