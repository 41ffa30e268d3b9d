use rayon::prelude::*;

use super::{Dims, Tensor};
use crate::error::{Error, Result};

/// Weights and bias of a stride-1, zero-padded square convolution.
///
/// Padding is always `kernel / 2`, so odd kernels preserve spatial size.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvParams {
    pub name: String,
    /// `(out_c, in_c, k, k)`.
    pub weight: Tensor,
    pub bias: Vec<f32>,
}

impl ConvParams {
    pub fn zeros(name: impl Into<String>, in_c: usize, out_c: usize, kernel: usize) -> Self {
        ConvParams {
            name: name.into(),
            weight: Tensor::zeros(Dims::new(out_c, in_c, kernel, kernel)),
            bias: vec![0.0; out_c],
        }
    }

    pub fn in_channels(&self) -> usize {
        self.weight.dims().c
    }

    pub fn out_channels(&self) -> usize {
        self.weight.dims().n
    }

    pub fn kernel(&self) -> usize {
        self.weight.dims().h
    }

    pub fn padding(&self) -> usize {
        self.kernel() / 2
    }

    pub fn parameter_count(&self) -> usize {
        self.weight.len() + self.bias.len()
    }

    fn check_input(&self, input: Dims) -> Result<()> {
        let wd = self.weight.dims();
        if wd.h != wd.w || wd.h.is_multiple_of(2) {
            return Err(Error::config(
                &self.name,
                format!("kernel must be square and odd, got {}x{}", wd.h, wd.w),
            ));
        }
        if self.bias.len() != wd.n {
            return Err(Error::config(
                &self.name,
                format!("bias has {} entries for {} filters", self.bias.len(), wd.n),
            ));
        }
        if input.c != wd.c {
            return Err(Error::config(
                &self.name,
                format!("expects {} input channels, got {}", wd.c, input.c),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvGrads {
    pub input: Tensor,
    pub weight: Tensor,
    pub bias: Vec<f32>,
}

/// Unfold one `(c, h, w)` item into a `(c·k·k, h·w)` patch matrix.
fn im2col(item: &[f32], c: usize, h: usize, w: usize, k: usize, cols: &mut [f32]) {
    let pad = k / 2;
    let hw = h * w;
    debug_assert_eq!(cols.len(), c * k * k * hw);
    for ci in 0..c {
        let plane = &item[ci * hw..(ci + 1) * hw];
        for ky in 0..k {
            for kx in 0..k {
                let row = (ci * k + ky) * k + kx;
                let dst = &mut cols[row * hw..(row + 1) * hw];
                for y in 0..h {
                    let sy = y as isize + ky as isize - pad as isize;
                    let out = &mut dst[y * w..(y + 1) * w];
                    if sy < 0 || sy >= h as isize {
                        out.fill(0.0);
                        continue;
                    }
                    let src = &plane[sy as usize * w..(sy as usize + 1) * w];
                    let shift = kx as isize - pad as isize;
                    for (x, o) in out.iter_mut().enumerate() {
                        let sx = x as isize + shift;
                        *o = if sx < 0 || sx >= w as isize {
                            0.0
                        } else {
                            src[sx as usize]
                        };
                    }
                }
            }
        }
    }
}

/// Fold a patch-matrix gradient back onto the `(c, h, w)` item it came from.
fn col2im(cols: &[f32], c: usize, h: usize, w: usize, k: usize, item: &mut [f32]) {
    let pad = k / 2;
    let hw = h * w;
    for ci in 0..c {
        let plane = &mut item[ci * hw..(ci + 1) * hw];
        for ky in 0..k {
            for kx in 0..k {
                let row = (ci * k + ky) * k + kx;
                let src = &cols[row * hw..(row + 1) * hw];
                let shift = kx as isize - pad as isize;
                for y in 0..h {
                    let sy = y as isize + ky as isize - pad as isize;
                    if sy < 0 || sy >= h as isize {
                        continue;
                    }
                    let dst = &mut plane[sy as usize * w..(sy as usize + 1) * w];
                    let s = &src[y * w..(y + 1) * w];
                    // clip x so that sx = x + shift stays inside [0, w)
                    let x0 = (-shift).max(0) as usize;
                    let x1 = (w as isize - shift).min(w as isize) as usize;
                    for x in x0..x1 {
                        dst[(x as isize + shift) as usize] += s[x];
                    }
                }
            }
        }
    }
}

/// Row-major `c = alpha·a·b + beta·c`, with strides describing how `a` and `b` are read.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f32],
    (rsa, csa): (usize, usize),
    b: &[f32],
    (rsb, csb): (usize, usize),
    beta: f32,
    c: &mut [f32],
) {
    assert!(m == 0 || k == 0 || (m - 1) * rsa + (k - 1) * csa < a.len());
    assert!(k == 0 || n == 0 || (k - 1) * rsb + (n - 1) * csb < b.len());
    assert_eq!(c.len(), m * n);
    // SAFETY: the asserts above bound every index the kernel touches.
    unsafe {
        matrixmultiply::sgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Patch-matrix view of an item; a 1×1 kernel needs no unfolding.
fn unfold<'a>(item: &'a [f32], d: Dims, k: usize, scratch: &'a mut Vec<f32>) -> &'a [f32] {
    if k == 1 {
        return item;
    }
    scratch.resize(d.c * k * k * d.plane(), 0.0);
    im2col(item, d.c, d.h, d.w, k, scratch);
    scratch
}

/// Cross-correlation with zero padding `k / 2`, lowered to a matrix product per batch item.
pub fn conv2d_forward(input: &Tensor, params: &ConvParams) -> Result<Tensor> {
    let d = input.dims();
    params.check_input(d)?;
    let k = params.kernel();
    let out_c = params.out_channels();
    let kk = d.c * k * k;
    let hw = d.plane();
    let out_dims = Dims::new(d.n, out_c, d.h, d.w);
    let mut out = Tensor::zeros(out_dims);
    if out.is_empty() {
        return Ok(out);
    }
    let weight = params.weight.data();
    out.data_mut()
        .par_chunks_mut(out_c * hw)
        .enumerate()
        .for_each(|(n, dst)| {
            for (o, row) in dst.chunks_mut(hw).enumerate() {
                row.fill(params.bias[o]);
            }
            let mut scratch = Vec::new();
            let cols = unfold(input.item(n), d, k, &mut scratch);
            gemm(out_c, kk, hw, weight, (kk, 1), cols, (hw, 1), 1.0, dst);
        });
    Ok(out)
}

/// Gradients of `⟨grad_out, conv2d_forward(input, params)⟩` with respect to
/// the input, the weights and the bias.
pub fn conv2d_backward(input: &Tensor, params: &ConvParams, grad_out: &Tensor) -> Result<ConvGrads> {
    let d = input.dims();
    params.check_input(d)?;
    let k = params.kernel();
    let out_c = params.out_channels();
    let expected = Dims::new(d.n, out_c, d.h, d.w);
    if grad_out.dims() != expected {
        return Err(Error::config(
            &params.name,
            format!("gradient dims {} do not match output dims {expected}", grad_out.dims()),
        ));
    }
    let kk = d.c * k * k;
    let hw = d.plane();
    let weight = params.weight.data();

    let per_item: Vec<(Vec<f32>, Vec<f32>, Vec<f64>)> = (0..d.n)
        .into_par_iter()
        .map(|n| {
            let gout = grad_out.item(n);
            let mut scratch = Vec::new();
            let cols = unfold(input.item(n), d, k, &mut scratch);

            let mut dw = vec![0.0f32; out_c * kk];
            gemm(out_c, hw, kk, gout, (hw, 1), cols, (1, hw), 0.0, &mut dw);

            let mut din = vec![0.0f32; d.item()];
            if k == 1 {
                gemm(kk, out_c, hw, weight, (1, kk), gout, (hw, 1), 0.0, &mut din);
            } else {
                let mut dcols = vec![0.0f32; kk * hw];
                gemm(kk, out_c, hw, weight, (1, kk), gout, (hw, 1), 0.0, &mut dcols);
                col2im(&dcols, d.c, d.h, d.w, k, &mut din);
            }

            let db = gout
                .chunks(hw.max(1))
                .map(|row| row.iter().map(|&v| v as f64).sum())
                .collect();
            (din, dw, db)
        })
        .collect();

    // Fixed-order reduction keeps results independent of the worker count.
    let mut grad_input = Vec::with_capacity(d.len());
    let mut dw_acc = vec![0.0f64; out_c * kk];
    let mut db_acc = vec![0.0f64; out_c];
    for (din, dw, db) in per_item {
        grad_input.extend_from_slice(&din);
        for (acc, v) in dw_acc.iter_mut().zip(dw) {
            *acc += v as f64;
        }
        for (acc, v) in db_acc.iter_mut().zip(db) {
            *acc += v;
        }
    }
    Ok(ConvGrads {
        input: Tensor::from_vec(d, grad_input)?,
        weight: Tensor::from_vec(
            params.weight.dims(),
            dw_acc.into_iter().map(|v| v as f32).collect(),
        )?,
        bias: db_acc.into_iter().map(|v| v as f32).collect(),
    })
}

/// Direct nested-loop convolution used as the correctness reference for the
/// lowered kernel. Slow; meant for tests and small fixtures.
pub mod naive {
    use super::*;

    pub fn conv2d(input: &Tensor, params: &ConvParams) -> Result<Tensor> {
        let d = input.dims();
        params.check_input(d)?;
        let k = params.kernel() as isize;
        let pad = params.padding() as isize;
        let out_c = params.out_channels();
        let mut out = Tensor::zeros(Dims::new(d.n, out_c, d.h, d.w));
        for n in 0..d.n {
            for o in 0..out_c {
                for y in 0..d.h as isize {
                    for x in 0..d.w as isize {
                        let mut acc = params.bias[o] as f64;
                        for c in 0..d.c {
                            for ky in 0..k {
                                for kx in 0..k {
                                    let sy = y + ky - pad;
                                    let sx = x + kx - pad;
                                    if sy < 0 || sx < 0 || sy >= d.h as isize || sx >= d.w as isize {
                                        continue;
                                    }
                                    acc += input.at(n, c, sy as usize, sx as usize) as f64
                                        * params.weight.at(o, c, ky as usize, kx as usize) as f64;
                                }
                            }
                        }
                        out.set(n, o, y as usize, x as usize, acc as f32);
                    }
                }
            }
        }
        Ok(out)
    }
}
