//! Width-profile comparison at matched depth.

use std::fmt::{self, Write as _};

use crate::arch::{count_parameters, ArchSpec, Container, Network};
use crate::data::{Dataset, ImagePlane};
use crate::error::{Error, Result};
use crate::optim::{train, validate, TrainConfig, Validation};

pub const SHAPE_CONTAINERS: usize = 6;
pub const SHAPE_UNITS: usize = 2;
pub const MIN_BASE_WIDTH: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShapeFamily {
    Increasing,
    Decreasing,
    IncreasingDecreasing,
    DecreasingIncreasing,
    Constant,
}

impl ShapeFamily {
    pub const ALL: [ShapeFamily; 5] = [
        ShapeFamily::Increasing,
        ShapeFamily::Decreasing,
        ShapeFamily::IncreasingDecreasing,
        ShapeFamily::DecreasingIncreasing,
        ShapeFamily::Constant,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ShapeFamily::Increasing => "increase",
            ShapeFamily::Decreasing => "decrease",
            ShapeFamily::IncreasingDecreasing => "increase-decrease",
            ShapeFamily::DecreasingIncreasing => "decrease-increase",
            ShapeFamily::Constant => "baseline",
        }
    }

    /// Container widths for maximum width `n`. Varying profiles move
    /// linearly (rounded) between `n/4` and `n`.
    pub fn widths(self, n: usize) -> Vec<usize> {
        let lo = (n as f64 / 4.0).round().max(1.0);
        let hi = n as f64;
        let ramp = |steps: usize| -> Vec<usize> {
            (0..steps)
                .map(|i| {
                    let t = if steps > 1 { i as f64 / (steps - 1) as f64 } else { 1.0 };
                    (lo + (hi - lo) * t).round() as usize
                })
                .collect()
        };
        let half = SHAPE_CONTAINERS / 2;
        match self {
            ShapeFamily::Increasing => ramp(SHAPE_CONTAINERS),
            ShapeFamily::Decreasing => ramp(SHAPE_CONTAINERS).into_iter().rev().collect(),
            ShapeFamily::IncreasingDecreasing => {
                let up = ramp(half);
                up.iter().chain(up.iter().rev()).copied().collect()
            }
            ShapeFamily::DecreasingIncreasing => {
                let up = ramp(half);
                up.iter().rev().chain(up.iter()).copied().collect()
            }
            ShapeFamily::Constant => vec![n; SHAPE_CONTAINERS],
        }
    }

    pub fn arch(self, n: usize) -> Result<ArchSpec> {
        if n < MIN_BASE_WIDTH {
            return Err(Error::Usage(format!("base width must be at least {MIN_BASE_WIDTH}, got {n}")));
        }
        let arch = ArchSpec::new(
            self.widths(n)
                .into_iter()
                .map(|filters| Container { filters, units: SHAPE_UNITS })
                .collect(),
        );
        arch.validate()?;
        Ok(arch)
    }
}

impl fmt::Display for ShapeFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShapeResult {
    pub family: ShapeFamily,
    pub arch: ArchSpec,
    pub depth: usize,
    pub params: usize,
    /// Mean validation PSNR over the configured scales after training.
    pub val_psnr: f64,
    pub bicubic_psnr: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShapeExperiment {
    pub base_width: usize,
    pub results: Vec<ShapeResult>,
}

impl ShapeExperiment {
    /// Max minus min validation PSNR across families.
    pub fn psnr_spread(&self) -> f64 {
        let it = || self.results.iter().map(|r| r.val_psnr);
        it().fold(f64::NEG_INFINITY, f64::max) - it().fold(f64::INFINITY, f64::min)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("family,arch,depth,params,val_psnr,bicubic_psnr\n");
        for r in &self.results {
            let _ = writeln!(
                out,
                "{},\"{}\",{},{},{:.4},{:.4}",
                r.family, r.arch, r.depth, r.params, r.val_psnr, r.bicubic_psnr
            );
        }
        out
    }
}

/// Train every family from the same seed on the same data and score it.
pub fn run_shapes_experiment(
    base_width: usize,
    dataset: &Dataset,
    validation: Validation<'_>,
    config: &TrainConfig,
) -> Result<ShapeExperiment> {
    validation_nonempty(validation.images)?;
    let mut results = Vec::with_capacity(ShapeFamily::ALL.len());
    for family in ShapeFamily::ALL {
        let arch = family.arch(base_width)?;
        let mut net = Network::build(&arch, config.seed)?;
        log::info!("shape {family}: {arch}, {} parameters", count_parameters(&arch));
        let report = train(&mut net, dataset, config, Some(validation), |_| {})?;
        let final_net = report.best.map(|b| b.network).unwrap_or(net);
        let eval = validate(&final_net, config.objective, validation)?;
        let n = eval.summaries.len() as f64;
        results.push(ShapeResult {
            family,
            depth: arch.depth(),
            params: count_parameters(&arch),
            val_psnr: eval.mean_psnr(),
            bicubic_psnr: eval.summaries.iter().map(|s| s.bicubic_psnr).sum::<f64>() / n,
            arch,
        });
    }
    Ok(ShapeExperiment { base_width, results })
}

fn validation_nonempty(images: &[(String, ImagePlane)]) -> Result<()> {
    if images.is_empty() {
        return Err(Error::Data("shapes experiment needs validation images".into()));
    }
    Ok(())
}
