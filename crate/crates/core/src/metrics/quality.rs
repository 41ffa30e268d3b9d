use crate::data::ImagePlane;
use crate::error::{Error, Result};

/// Reported PSNR for identical images.
pub const PSNR_CAP_DB: f64 = 100.0;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_C1: f64 = (0.01 * 255.0) * (0.01 * 255.0);
pub const SSIM_C2: f64 = (0.03 * 255.0) * (0.03 * 255.0);

/// 8-bit level of a `[0, 1]` value, rounding half away from zero.
pub fn quantize(v: f32) -> f64 {
    (v.clamp(0.0, 1.0) as f64 * 255.0).round()
}

/// Shave `shave` pixels off every border and quantize to the 0–255 scale.
pub fn shaved_levels(img: &ImagePlane, shave: usize) -> Result<(usize, usize, Vec<f64>)> {
    let (h, w) = img.dims();
    if 2 * shave >= h || 2 * shave >= w {
        return Err(Error::Usage(format!(
            "shave {shave} leaves nothing of a {h}x{w} image"
        )));
    }
    let (ch, cw) = (h - 2 * shave, w - 2 * shave);
    let mut out = Vec::with_capacity(ch * cw);
    for y in shave..h - shave {
        out.extend(img.row(y)[shave..w - shave].iter().map(|&v| quantize(v)));
    }
    Ok((ch, cw, out))
}

fn check_dims(a: &ImagePlane, b: &ImagePlane) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::Usage(format!(
            "image dims differ: {:?} vs {:?}",
            a.dims(),
            b.dims()
        )));
    }
    Ok(())
}

/// `10·log10(255² / MSE)` over the shaved, quantized planes; capped at
/// [`PSNR_CAP_DB`].
pub fn psnr(a: &ImagePlane, b: &ImagePlane, shave: usize) -> Result<f64> {
    check_dims(a, b)?;
    let (_, _, la) = shaved_levels(a, shave)?;
    let (_, _, lb) = shaved_levels(b, shave)?;
    let mse = la.iter().zip(&lb).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / la.len() as f64;
    if mse == 0.0 {
        return Ok(PSNR_CAP_DB);
    }
    Ok((10.0 * (255.0f64 * 255.0 / mse).log10()).min(PSNR_CAP_DB))
}

/// Normalized 1-D Gaussian taps; their outer product is the 2-D window.
pub fn gaussian_taps(size: usize, sigma: f64) -> Vec<f64> {
    let c = (size as f64 - 1.0) / 2.0;
    let raw: Vec<f64> = (0..size)
        .map(|i| (-((i as f64 - c).powi(2)) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / sum).collect()
}

/// Valid-mode separable filtering of an `h×w` grid.
fn filter_valid(src: &[f64], h: usize, w: usize, taps: &[f64]) -> Vec<f64> {
    let k = taps.len();
    let (oh, ow) = (h - k + 1, w - k + 1);
    let mut rows = vec![0.0; h * ow];
    for y in 0..h {
        for x in 0..ow {
            rows[y * ow + x] = taps.iter().enumerate().map(|(i, t)| t * src[y * w + x + i]).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = taps.iter().enumerate().map(|(i, t)| t * rows[(y + i) * ow + x]).sum();
        }
    }
    out
}

/// Mean single-scale SSIM: 11×11 Gaussian window (σ = 1.5) over every valid
/// position of the shaved 0–255 planes.
pub fn ssim(a: &ImagePlane, b: &ImagePlane, shave: usize) -> Result<f64> {
    check_dims(a, b)?;
    let (h, w, la) = shaved_levels(a, shave)?;
    let (_, _, lb) = shaved_levels(b, shave)?;
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(Error::Usage(format!(
            "{h}x{w} image is smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} SSIM window"
        )));
    }
    let taps = gaussian_taps(SSIM_WINDOW, SSIM_SIGMA);
    let prod = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p * q).collect::<Vec<f64>>();
    let mu_a = filter_valid(&la, h, w, &taps);
    let mu_b = filter_valid(&lb, h, w, &taps);
    let e_aa = filter_valid(&prod(&la, &la), h, w, &taps);
    let e_bb = filter_valid(&prod(&lb, &lb), h, w, &taps);
    let e_ab = filter_valid(&prod(&la, &lb), h, w, &taps);
    let mut total = 0.0;
    for i in 0..mu_a.len() {
        let (ma, mb) = (mu_a[i], mu_b[i]);
        let va = e_aa[i] - ma * ma;
        let vb = e_bb[i] - mb * mb;
        let cov = e_ab[i] - ma * mb;
        total += ((2.0 * ma * mb + SSIM_C1) * (2.0 * cov + SSIM_C2))
            / ((ma * ma + mb * mb + SSIM_C1) * (va + vb + SSIM_C2));
    }
    Ok(total / mu_a.len() as f64)
}
