//! Dense NCHW tensors and the layer primitives used by the networks.
//!
//! Every op here is a pure function of its arguments apart from batch
//! normalization in training mode, which also advances running statistics.
//! Reductions that feed gradients or losses accumulate in `f64`.

mod bn;
mod conv;
mod elementwise;

pub use bn::{bn_backward, bn_forward, BnCache, BnGrads, BnParams, BN_EPSILON, BN_MOMENTUM};
pub use conv::{conv2d_backward, conv2d_forward, naive, ConvGrads, ConvParams};
pub use elementwise::{add_backward, add_forward, relu_backward, relu_forward};

use std::fmt;

use crate::error::{Error, Result};

/// Whether a forward pass is part of training or plain inference.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Extent of a 4-D tensor: batch, channels, height, width.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Dims {
    pub n: usize,
    pub c: usize,
    pub h: usize,
    pub w: usize,
}

impl Dims {
    pub const fn new(n: usize, c: usize, h: usize, w: usize) -> Self {
        Dims { n, c, h, w }
    }

    pub const fn len(&self) -> usize {
        self.n * self.c * self.h * self.w
    }

    pub const fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Elements in one spatial plane.
    pub const fn plane(&self) -> usize {
        self.h * self.w
    }

    /// Elements in one batch item.
    pub const fn item(&self) -> usize {
        self.c * self.h * self.w
    }

    pub const fn to_array(self) -> [usize; 4] {
        [self.n, self.c, self.h, self.w]
    }
}

impl fmt::Display for Dims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {}, {})", self.n, self.c, self.h, self.w)
    }
}

/// Row-major `(n, c, h, w)` array of `f32`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    dims: Dims,
    data: Vec<f32>,
}

impl Tensor {
    pub fn zeros(dims: Dims) -> Self {
        Tensor {
            dims,
            data: vec![0.0; dims.len()],
        }
    }

    pub fn full(dims: Dims, value: f32) -> Self {
        Tensor {
            dims,
            data: vec![value; dims.len()],
        }
    }

    pub fn from_vec(dims: Dims, data: Vec<f32>) -> Result<Self> {
        if data.len() != dims.len() {
            return Err(Error::Usage(format!(
                "tensor of dims {dims} needs {} values, got {}",
                dims.len(),
                data.len()
            )));
        }
        Ok(Tensor { dims, data })
    }

    pub fn from_fn(dims: Dims, mut f: impl FnMut(usize, usize, usize, usize) -> f32) -> Self {
        let mut data = Vec::with_capacity(dims.len());
        for n in 0..dims.n {
            for c in 0..dims.c {
                for y in 0..dims.h {
                    for x in 0..dims.w {
                        data.push(f(n, c, y, x));
                    }
                }
            }
        }
        Tensor { dims, data }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn index(&self, n: usize, c: usize, y: usize, x: usize) -> usize {
        debug_assert!(n < self.dims.n && c < self.dims.c && y < self.dims.h && x < self.dims.w);
        ((n * self.dims.c + c) * self.dims.h + y) * self.dims.w + x
    }

    #[inline]
    pub fn at(&self, n: usize, c: usize, y: usize, x: usize) -> f32 {
        self.data[self.index(n, c, y, x)]
    }

    #[inline]
    pub fn set(&mut self, n: usize, c: usize, y: usize, x: usize, value: f32) {
        let i = self.index(n, c, y, x);
        self.data[i] = value;
    }

    /// Slice holding batch item `n`.
    pub fn item(&self, n: usize) -> &[f32] {
        let len = self.dims.item();
        &self.data[n * len..(n + 1) * len]
    }

    pub fn map(&self, f: impl Fn(f32) -> f32) -> Tensor {
        Tensor {
            dims: self.dims,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scale(&self, alpha: f32) -> Tensor {
        self.map(|v| v * alpha)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `Σ self·other` accumulated in `f64`.
    pub fn dot(&self, other: &Tensor) -> f64 {
        debug_assert_eq!(self.dims, other.dims);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| a as f64 * b as f64)
            .sum()
    }

    pub fn max_abs(&self) -> f32 {
        self.data.iter().fold(0.0f32, |m, v| m.max(v.abs()))
    }

    /// Stack single-item tensors with equal dims along the batch axis.
    pub fn stack(items: &[&Tensor]) -> Result<Tensor> {
        let first = items
            .first()
            .ok_or_else(|| Error::Usage("cannot stack zero tensors".into()))?
            .dims;
        let mut data = Vec::with_capacity(first.len() * items.len());
        for t in items {
            if (Dims { n: first.n, ..t.dims }) != first {
                return Err(Error::Usage(format!(
                    "cannot stack {} with {}",
                    t.dims, first
                )));
            }
            data.extend_from_slice(&t.data);
        }
        Ok(Tensor {
            dims: Dims {
                n: first.n * items.len(),
                ..first
            },
            data,
        })
    }
}

pub(crate) fn ensure_same_dims(layer: &str, a: Dims, b: Dims) -> Result<()> {
    if a != b {
        return Err(Error::config(
            layer,
            format!("dimension mismatch: {a} vs {b}"),
        ));
    }
    Ok(())
}
