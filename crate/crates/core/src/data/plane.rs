use crate::error::{Error, Result};
use crate::tensor::{Dims, Tensor};

/// Single-channel image with values in `[0, 1]`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ImagePlane {
    height: usize,
    width: usize,
    data: Vec<f32>,
}

impl ImagePlane {
    pub fn new(height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::Usage(format!(
                "{height}x{width} plane needs {} values, got {}",
                height * width,
                data.len()
            )));
        }
        Ok(ImagePlane { height, width, data })
    }

    pub fn filled(height: usize, width: usize, value: f32) -> Self {
        ImagePlane {
            height,
            width,
            data: vec![value; height * width],
        }
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f32) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for y in 0..height {
            for x in 0..width {
                data.push(f(y, x));
            }
        }
        ImagePlane { height, width, data }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> f32 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, v: f32) {
        self.data[y * self.width + x] = v;
    }

    pub fn row(&self, y: usize) -> &[f32] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn clamp_unit(&mut self) {
        for v in &mut self.data {
            *v = v.clamp(0.0, 1.0);
        }
    }

    pub fn crop(&self, top: usize, left: usize, height: usize, width: usize) -> Result<ImagePlane> {
        if top + height > self.height || left + width > self.width {
            return Err(Error::Usage(format!(
                "crop {height}x{width}+{top}+{left} exceeds {}x{} image",
                self.height, self.width
            )));
        }
        Ok(ImagePlane::from_fn(height, width, |y, x| self.get(top + y, left + x)))
    }

    /// Top-left anchored crop to the largest size divisible by `scale`.
    pub fn crop_to_multiple(&self, scale: usize) -> ImagePlane {
        let h = self.height / scale * scale;
        let w = self.width / scale * scale;
        self.crop(0, 0, h, w).expect("crop fits inside the image")
    }

    pub fn flip_horizontal(&self) -> ImagePlane {
        ImagePlane::from_fn(self.height, self.width, |y, x| self.get(y, self.width - 1 - x))
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().map(|&v| v as f64).sum::<f64>() / self.data.len().max(1) as f64
    }

    pub fn to_tensor(&self) -> Tensor {
        Tensor::from_vec(Dims::new(1, 1, self.height, self.width), self.data.clone())
            .expect("plane length matches dims")
    }

    /// Plane view of batch item `n`, channel 0.
    pub fn from_tensor(t: &Tensor, n: usize) -> ImagePlane {
        let d = t.dims();
        ImagePlane {
            height: d.h,
            width: d.w,
            data: t.item(n)[..d.plane()].to_vec(),
        }
    }
}

/// Three planes of a color image: `[r, g, b]` or `[y, cb, cr]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ColorImage {
    pub planes: [ImagePlane; 3],
}

impl ColorImage {
    pub fn dims(&self) -> (usize, usize) {
        self.planes[0].dims()
    }

    pub fn map_planes(&self, mut f: impl FnMut(&ImagePlane) -> ImagePlane) -> ColorImage {
        ColorImage {
            planes: [f(&self.planes[0]), f(&self.planes[1]), f(&self.planes[2])],
        }
    }
}
