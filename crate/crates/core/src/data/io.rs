use std::fs;
use std::path::{Path, PathBuf};

use image::{DynamicImage, GrayImage, RgbImage};

use super::color::to_luminance;
use super::plane::{ColorImage, ImagePlane};
use crate::error::{Error, Result};

/// Decoded input: grayscale sources stay single-plane.
#[derive(Clone, Debug, PartialEq)]
pub enum LoadedImage {
    Gray(ImagePlane),
    Color(ColorImage),
}

impl LoadedImage {
    pub fn luminance(&self) -> ImagePlane {
        match self {
            LoadedImage::Gray(p) => p.clone(),
            LoadedImage::Color(c) => to_luminance(c),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        match self {
            LoadedImage::Gray(p) => p.dims(),
            LoadedImage::Color(c) => c.dims(),
        }
    }
}

fn image_error(path: &Path, e: impl ToString) -> Error {
    Error::Image {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

pub fn load_image(path: &Path) -> Result<LoadedImage> {
    let img = image::open(path).map_err(|e| image_error(path, e))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    if img.color().has_color() {
        let rgb = img.to_rgb32f();
        let plane = |c: usize| {
            ImagePlane::new(h, w, rgb.pixels().map(|p| p.0[c].clamp(0.0, 1.0)).collect())
                .expect("decoded size")
        };
        Ok(LoadedImage::Color(ColorImage {
            planes: [plane(0), plane(1), plane(2)],
        }))
    } else {
        let luma = img.to_luma32f();
        Ok(LoadedImage::Gray(
            ImagePlane::new(h, w, luma.pixels().map(|p| p.0[0].clamp(0.0, 1.0)).collect())
                .expect("decoded size"),
        ))
    }
}

pub fn load_luminance(path: &Path) -> Result<ImagePlane> {
    load_image(path).map(|i| i.luminance())
}

pub(crate) fn to_u8(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) as f64 * 255.0).round() as u8
}

fn gray_image(plane: &ImagePlane) -> GrayImage {
    let (h, w) = plane.dims();
    GrayImage::from_raw(w as u32, h as u32, plane.data().iter().map(|&v| to_u8(v)).collect())
        .expect("buffer sized")
}

fn rgb_image(img: &ColorImage) -> RgbImage {
    let (h, w) = img.dims();
    let mut buf = Vec::with_capacity(h * w * 3);
    for i in 0..h * w {
        for p in &img.planes {
            buf.push(to_u8(p.data()[i]));
        }
    }
    RgbImage::from_raw(w as u32, h as u32, buf).expect("buffer sized")
}

/// Write via a sibling temporary file so a failed write leaves nothing behind.
/// The format follows the extension of `path`.
pub fn save_image(path: &Path, img: &LoadedImage) -> Result<()> {
    let dynamic = match img {
        LoadedImage::Gray(p) => DynamicImage::ImageLuma8(gray_image(p)),
        LoadedImage::Color(c) => DynamicImage::ImageRgb8(rgb_image(c)),
    };
    let format = image::ImageFormat::from_path(path).map_err(|e| image_error(path, e))?;
    let mut bytes = std::io::Cursor::new(Vec::new());
    dynamic
        .write_to(&mut bytes, format)
        .map_err(|e| image_error(path, e))?;
    crate::fsutil::write_atomic(path, bytes.get_ref())
}

pub fn save_png_gray(path: &Path, plane: &ImagePlane) -> Result<()> {
    save_image(path, &LoadedImage::Gray(plane.clone()))
}

const IMAGE_EXTENSIONS: [&str; 4] = ["png", "pgm", "ppm", "pnm"];

/// Image files directly inside `dir`, sorted by file name.
pub fn list_images(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::Data(format!("cannot read {}: {e}", dir.display())))? {
        let path = entry?.path();
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        if path.is_file() && ext.is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.as_str())) {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}
