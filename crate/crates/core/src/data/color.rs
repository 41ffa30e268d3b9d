//! Full-range BT.601 YCbCr, with chroma centered on 0.5.

use super::plane::{ColorImage, ImagePlane};

const KR: f64 = 0.299;
const KG: f64 = 0.587;
const KB: f64 = 0.114;

/// RGB to `[y, cb, cr]`.
pub fn rgb_to_ycbcr(rgb: &ColorImage) -> ColorImage {
    let (h, w) = rgb.dims();
    let [r, g, b] = &rgb.planes;
    let n = h * w;
    let (mut y, mut cb, mut cr) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for i in 0..n {
        let (rv, gv, bv) = (r.data()[i] as f64, g.data()[i] as f64, b.data()[i] as f64);
        let luma = KR * rv + KG * gv + KB * bv;
        y.push(luma as f32);
        cb.push((0.5 + (bv - luma) / (2.0 * (1.0 - KB))) as f32);
        cr.push((0.5 + (rv - luma) / (2.0 * (1.0 - KR))) as f32);
    }
    ColorImage {
        planes: [
            ImagePlane::new(h, w, y).expect("sized"),
            ImagePlane::new(h, w, cb).expect("sized"),
            ImagePlane::new(h, w, cr).expect("sized"),
        ],
    }
}

/// `[y, cb, cr]` back to RGB, clamped to `[0, 1]`.
pub fn ycbcr_to_rgb(ycc: &ColorImage) -> ColorImage {
    let (h, w) = ycc.dims();
    let [y, cb, cr] = &ycc.planes;
    let n = h * w;
    let (mut r, mut g, mut b) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for i in 0..n {
        let luma = y.data()[i] as f64;
        let pb = cb.data()[i] as f64 - 0.5;
        let pr = cr.data()[i] as f64 - 0.5;
        let rv = luma + 2.0 * (1.0 - KR) * pr;
        let bv = luma + 2.0 * (1.0 - KB) * pb;
        let gv = (luma - KR * rv - KB * bv) / KG;
        r.push(rv.clamp(0.0, 1.0) as f32);
        g.push(gv.clamp(0.0, 1.0) as f32);
        b.push(bv.clamp(0.0, 1.0) as f32);
    }
    ColorImage {
        planes: [
            ImagePlane::new(h, w, r).expect("sized"),
            ImagePlane::new(h, w, g).expect("sized"),
            ImagePlane::new(h, w, b).expect("sized"),
        ],
    }
}

pub fn to_luminance(rgb: &ColorImage) -> ImagePlane {
    let [r, g, b] = &rgb.planes;
    let (h, w) = rgb.dims();
    ImagePlane::from_fn(h, w, |y, x| {
        (KR * r.get(y, x) as f64 + KG * g.get(y, x) as f64 + KB * b.get(y, x) as f64) as f32
    })
}

pub fn from_luminance(y: &ImagePlane, cb: &ImagePlane, cr: &ImagePlane) -> ColorImage {
    ycbcr_to_rgb(&ColorImage {
        planes: [y.clone(), cb.clone(), cr.clone()],
    })
}
