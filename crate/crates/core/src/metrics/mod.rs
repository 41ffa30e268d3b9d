//! PSNR and SSIM on shaved luminance planes, and dataset-level reports.

mod quality;
mod report;

pub use quality::{
    gaussian_taps, psnr, quantize, shaved_levels, ssim, PSNR_CAP_DB, SSIM_C1, SSIM_C2,
    SSIM_SIGMA, SSIM_WINDOW,
};
pub use report::{evaluate, evaluate_with, super_resolve, EvalReport, EvalRow, ScaleSummary};
