use super::plane::ImagePlane;
use super::resize::bicubic_resize;
use crate::error::{Error, Result};

/// Simulated low-resolution observation at the HR grid size: crop to a
/// multiple of `scale`, bicubic-downscale by `scale`, bicubic-upscale back.
///
/// Returns `(hr_cropped, lr_upscaled)`.
pub fn degrade_pair(hr: &ImagePlane, scale: usize) -> Result<(ImagePlane, ImagePlane)> {
    if scale == 0 {
        return Err(Error::Data("scale factor must be positive".into()));
    }
    if hr.height() < scale || hr.width() < scale {
        return Err(Error::Data(format!(
            "{}x{} image is smaller than scale factor {scale}",
            hr.height(),
            hr.width()
        )));
    }
    let cropped = hr.crop_to_multiple(scale);
    let (h, w) = cropped.dims();
    let small = bicubic_resize(&cropped, h / scale, w / scale);
    let lr = bicubic_resize(&small, h, w);
    Ok((cropped, lr))
}

/// Degraded, re-upscaled version of `hr` (cropped to a multiple of `scale`).
pub fn degrade(hr: &ImagePlane, scale: usize) -> Result<ImagePlane> {
    degrade_pair(hr, scale).map(|(_, lr)| lr)
}

/// Co-located LR/HR training example at HR grid size.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplePair {
    pub lr: ImagePlane,
    pub hr: ImagePlane,
    pub scale: usize,
}

/// Number of `patch`-sized windows on a grid with the given stride.
pub fn patch_grid_count(h: usize, w: usize, patch: usize, stride: usize) -> usize {
    if patch > h || patch > w || stride == 0 {
        return 0;
    }
    ((h - patch) / stride + 1) * ((w - patch) / stride + 1)
}

/// Aligned patch pairs on a regular grid. An image smaller than the patch
/// yields nothing and logs a warning.
pub fn extract_patches(
    hr: &ImagePlane,
    lr: &ImagePlane,
    patch: usize,
    stride: usize,
    scale: usize,
) -> Result<Vec<SamplePair>> {
    if hr.dims() != lr.dims() {
        return Err(Error::Usage(format!(
            "HR {:?} and LR {:?} planes differ in size",
            hr.dims(),
            lr.dims()
        )));
    }
    if patch == 0 || stride == 0 {
        return Err(Error::Usage("patch size and stride must be positive".into()));
    }
    let (h, w) = hr.dims();
    if patch > h || patch > w {
        log::warn!("skipping {h}x{w} image: smaller than {patch}x{patch} patch");
        return Ok(Vec::new());
    }
    let mut out = Vec::with_capacity(patch_grid_count(h, w, patch, stride));
    for top in (0..=h - patch).step_by(stride) {
        for left in (0..=w - patch).step_by(stride) {
            out.push(SamplePair {
                lr: lr.crop(top, left, patch, patch)?,
                hr: hr.crop(top, left, patch, patch)?,
                scale,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_counts() {
        assert_eq!(patch_grid_count(41, 41, 41, 41), 1);
        assert_eq!(patch_grid_count(81, 81, 41, 40), 4);
        assert_eq!(patch_grid_count(100, 100, 41, 21), 9);
        assert_eq!(patch_grid_count(40, 100, 41, 21), 0);
    }

    #[test]
    fn patches_are_colocated() {
        let hr = ImagePlane::from_fn(81, 81, |y, x| ((y * 81 + x) % 255) as f32 / 255.0);
        let lr = ImagePlane::from_fn(81, 81, |y, x| ((y + x) % 255) as f32 / 255.0);
        let pairs = extract_patches(&hr, &lr, 41, 40, 2).unwrap();
        assert_eq!(pairs.len(), 4);
        let last = &pairs[3];
        assert_eq!(last.hr.get(0, 0), hr.get(40, 40));
        assert_eq!(last.lr.get(0, 0), lr.get(40, 40));
        assert_eq!(last.hr.dims(), (41, 41));
    }

    #[test]
    fn oversized_patch_skips_image() {
        let img = ImagePlane::filled(10, 10, 0.5);
        assert!(extract_patches(&img, &img, 41, 41, 2).unwrap().is_empty());
    }

    #[test]
    fn degrade_unit_scale_and_constants() {
        let img = ImagePlane::from_fn(12, 9, |y, x| ((y * 9 + x) as f32 * 0.21).cos() * 0.4 + 0.5);
        let same = degrade(&img, 1).unwrap();
        for (a, b) in same.data().iter().zip(img.data()) {
            assert!((a - b).abs() <= 1e-6);
        }
        let flat = ImagePlane::filled(13, 13, 0.7);
        for s in 2..=4 {
            let out = degrade(&flat, s).unwrap();
            assert_eq!(out.dims(), (13 / s * s, 13 / s * s));
            assert!(out.data().iter().all(|&v| (v - 0.7).abs() < 1e-6));
        }
    }

    #[test]
    fn degrade_rejects_tiny_images() {
        assert!(matches!(degrade(&ImagePlane::filled(2, 5, 0.1), 3), Err(Error::Data(_))));
    }
}
