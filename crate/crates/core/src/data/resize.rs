use super::plane::ImagePlane;

/// Keys cubic convolution parameter.
pub const BICUBIC_A: f64 = -0.5;

/// Keys cubic kernel with `a = −0.5`; support `[−2, 2]`.
pub fn cubic_kernel(x: f64) -> f64 {
    let a = BICUBIC_A;
    let t = x.abs();
    if t <= 1.0 {
        ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0
    } else if t < 2.0 {
        ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a
    } else {
        0.0
    }
}

/// Taps for one output sample: first source index (may be negative) and weights.
struct Taps {
    start: isize,
    weights: Vec<f64>,
}

/// Weights mapping `in_len` samples onto `out_len`, pixel centers aligned.
/// Minification widens the kernel by the scale factor (anti-aliasing).
fn axis_taps(in_len: usize, out_len: usize) -> Vec<Taps> {
    let scale = out_len as f64 / in_len as f64;
    let stretch = if scale < 1.0 { scale } else { 1.0 };
    let radius = 2.0 / stretch;
    (0..out_len)
        .map(|i| {
            let center = (i as f64 + 0.5) / scale - 0.5;
            let start = (center - radius).floor() as isize;
            let end = (center + radius).ceil() as isize;
            let mut weights: Vec<f64> = (start..=end)
                .map(|j| cubic_kernel((j as f64 - center) * stretch))
                .collect();
            let sum: f64 = weights.iter().sum();
            for w in &mut weights {
                *w /= sum;
            }
            Taps { start, weights }
        })
        .collect()
}

fn clamp_index(j: isize, len: usize) -> usize {
    j.clamp(0, len as isize - 1) as usize
}

/// Separable bicubic resampling with edge replication; output clamped to `[0, 1]`.
pub fn bicubic_resize(img: &ImagePlane, out_h: usize, out_w: usize) -> ImagePlane {
    assert!(out_h >= 1 && out_w >= 1, "output dims must be positive");
    let (in_h, in_w) = img.dims();
    let xtaps = axis_taps(in_w, out_w);
    let ytaps = axis_taps(in_h, out_h);

    // horizontal pass kept in f64, rows of length out_w
    let mut tmp = vec![0.0f64; in_h * out_w];
    for y in 0..in_h {
        let row = img.row(y);
        for (x, t) in xtaps.iter().enumerate() {
            tmp[y * out_w + x] = t
                .weights
                .iter()
                .enumerate()
                .map(|(k, w)| w * row[clamp_index(t.start + k as isize, in_w)] as f64)
                .sum();
        }
    }
    let mut out = ImagePlane::filled(out_h, out_w, 0.0);
    for (y, t) in ytaps.iter().enumerate() {
        for x in 0..out_w {
            let v: f64 = t
                .weights
                .iter()
                .enumerate()
                .map(|(k, w)| w * tmp[clamp_index(t.start + k as isize, in_h) * out_w + x])
                .sum();
            out.set(y, x, v.clamp(0.0, 1.0) as f32);
        }
    }
    out
}
