use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use super::quality::{psnr, ssim};
use crate::arch::Network;
use crate::data::{degrade_pair, ImagePlane};
use crate::error::{Error, Result};

/// Scores of one image at one scale, for the model and the bicubic input.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalRow {
    pub image: String,
    pub scale: usize,
    pub psnr: f64,
    pub ssim: f64,
    pub bicubic_psnr: f64,
    pub bicubic_ssim: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScaleSummary {
    pub scale: usize,
    pub images: usize,
    pub psnr: f64,
    pub ssim: f64,
    pub bicubic_psnr: f64,
    pub bicubic_ssim: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub dataset: String,
    pub rows: Vec<EvalRow>,
    pub summaries: Vec<ScaleSummary>,
    /// Border pixels cropped before scoring, per scale (equal to the scale).
    pub shave: Vec<(usize, usize)>,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

impl EvalReport {
    pub fn from_rows(dataset: impl Into<String>, rows: Vec<EvalRow>, scales: &[usize]) -> Self {
        let summaries = scales
            .iter()
            .map(|&s| {
                let of = |f: fn(&EvalRow) -> f64| mean(rows.iter().filter(|r| r.scale == s).map(f));
                ScaleSummary {
                    scale: s,
                    images: rows.iter().filter(|r| r.scale == s).count(),
                    psnr: of(|r| r.psnr),
                    ssim: of(|r| r.ssim),
                    bicubic_psnr: of(|r| r.bicubic_psnr),
                    bicubic_ssim: of(|r| r.bicubic_ssim),
                }
            })
            .collect();
        EvalReport {
            dataset: dataset.into(),
            rows,
            summaries,
            shave: scales.iter().map(|&s| (s, s)).collect(),
        }
    }

    pub fn summary(&self, scale: usize) -> Option<&ScaleSummary> {
        self.summaries.iter().find(|s| s.scale == scale)
    }

    /// Mean PSNR over all scales; used to rank checkpoints.
    pub fn mean_psnr(&self) -> f64 {
        mean(self.summaries.iter().map(|s| s.psnr))
    }

    /// `dataset,scale,method,psnr,ssim`: one bicubic and one model row per scale.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("dataset,scale,method,psnr,ssim\n");
        for s in &self.summaries {
            let _ = writeln!(out, "{},{},bicubic,{:.4},{:.4}", self.dataset, s.scale, s.bicubic_psnr, s.bicubic_ssim);
            let _ = writeln!(out, "{},{},model,{:.4},{:.4}", self.dataset, s.scale, s.psnr, s.ssim);
        }
        out
    }

    pub fn per_image_csv(&self) -> String {
        let mut out = String::from("image,scale,psnr,ssim,bicubic_psnr,bicubic_ssim\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{:.4},{:.4},{:.4},{:.4}",
                r.image, r.scale, r.psnr, r.ssim, r.bicubic_psnr, r.bicubic_ssim
            );
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        crate::fsutil::write_atomic(path, self.to_csv().as_bytes())
    }
}

/// Super-resolve one luminance plane already upscaled to the target grid.
pub fn super_resolve(net: &Network, lr_upscaled: &ImagePlane) -> Result<ImagePlane> {
    let out = net.infer(&lr_upscaled.to_tensor())?;
    let mut plane = ImagePlane::from_tensor(&out, 0);
    plane.clamp_unit();
    Ok(plane)
}

/// For each image and scale: crop to a multiple of the scale, degrade,
/// super-resolve, clamp, and score against the cropped original with the
/// border shave equal to the scale.
pub fn evaluate(
    net: &Network,
    dataset: &str,
    images: &[(String, ImagePlane)],
    scales: &[usize],
) -> Result<EvalReport> {
    evaluate_with(|lr| super_resolve(net, lr), dataset, images, scales)
}

/// [`evaluate`] with an arbitrary predictor from the upscaled LR plane to
/// the output plane.
pub fn evaluate_with<F>(
    predict: F,
    dataset: &str,
    images: &[(String, ImagePlane)],
    scales: &[usize],
) -> Result<EvalReport>
where
    F: Fn(&ImagePlane) -> Result<ImagePlane> + Sync,
{
    if images.is_empty() {
        return Err(Error::Data("evaluation set is empty".into()));
    }
    if scales.is_empty() {
        return Err(Error::Usage("no evaluation scales".into()));
    }
    let jobs: Vec<(&String, &ImagePlane, usize)> = images
        .iter()
        .flat_map(|(name, img)| scales.iter().map(move |&s| (name, img, s)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(name, img, s)| {
            let (hr, lr) = degrade_pair(img, s)?;
            let sr = predict(&lr)?;
            Ok(EvalRow {
                image: name.clone(),
                scale: s,
                psnr: psnr(&sr, &hr, s)?,
                ssim: ssim(&sr, &hr, s)?,
                bicubic_psnr: psnr(&lr, &hr, s)?,
                bicubic_ssim: ssim(&lr, &hr, s)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport::from_rows(dataset, rows, scales))
}
