use std::fmt::Write as _;
use std::path::Path;

use log::{debug, info, warn};

use super::config::{Objective, TrainConfig};
use super::loss::euclidean_loss;
use super::sgd::{clip_gradients, lr_at, sgd_step, OptimizerState};
use crate::arch::Network;
use crate::data::{Dataset, ImagePlane};
use crate::error::{Error, Result};
use crate::metrics::{evaluate_with, EvalReport};
use crate::tensor::{Mode, Tensor};

/// One row of the training history.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    pub mean_train_loss: f64,
    /// Validation PSNR per evaluated scale.
    pub val_psnr: Vec<(usize, f64)>,
}

impl EpochRecord {
    pub fn psnr_at(&self, scale: usize) -> Option<f64> {
        self.val_psnr.iter().find(|(s, _)| *s == scale).map(|&(_, p)| p)
    }

    fn mean_psnr(&self) -> Option<f64> {
        if self.val_psnr.is_empty() {
            return None;
        }
        Some(self.val_psnr.iter().map(|(_, p)| p).sum::<f64>() / self.val_psnr.len() as f64)
    }
}

/// `epoch,lr,mean_train_loss,val_psnr_x2,val_psnr_x3,val_psnr_x4`; cells
/// for scales that were not evaluated are left blank.
pub fn history_csv(history: &[EpochRecord]) -> String {
    let mut out = String::from("epoch,lr,mean_train_loss,val_psnr_x2,val_psnr_x3,val_psnr_x4\n");
    for r in history {
        let _ = write!(out, "{},{},{:.8}", r.epoch, r.lr, r.mean_train_loss);
        for s in [2, 3, 4] {
            match r.psnr_at(s) {
                Some(p) => {
                    let _ = write!(out, ",{p:.4}");
                }
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}

pub fn write_history(path: &Path, history: &[EpochRecord]) -> Result<()> {
    crate::fsutil::write_atomic(path, history_csv(history).as_bytes())
}

/// Held-out images scored after every epoch.
#[derive(Clone, Copy, Debug)]
pub struct Validation<'a> {
    pub images: &'a [(String, ImagePlane)],
    pub scales: &'a [usize],
}

#[derive(Clone, Debug)]
pub struct BestSnapshot {
    pub epoch: usize,
    pub mean_psnr: f64,
    pub network: Network,
}

#[derive(Debug)]
pub struct TrainReport {
    pub history: Vec<EpochRecord>,
    /// Highest mean validation PSNR seen, when validating.
    pub best: Option<BestSnapshot>,
    pub steps: u64,
}

/// Network output under `objective`, clamped to the unit range.
pub fn predict(net: &Network, objective: Objective, lr_upscaled: &ImagePlane) -> Result<ImagePlane> {
    let input = lr_upscaled.to_tensor();
    let out = match objective {
        Objective::Residual => net.infer(&input)?,
        Objective::Direct => net.infer_residual(&input)?,
    };
    let mut plane = ImagePlane::from_tensor(&out, 0);
    plane.clamp_unit();
    Ok(plane)
}

pub fn validate(
    net: &Network,
    objective: Objective,
    validation: Validation<'_>,
) -> Result<EvalReport> {
    evaluate_with(
        |lr| predict(net, objective, lr),
        "validation",
        validation.images,
        validation.scales,
    )
}

fn stack_batch(dataset: &Dataset, indices: &[usize], objective: Objective) -> Result<(Tensor, Tensor)> {
    let pairs = dataset.pairs();
    let lr: Vec<Tensor> = indices.iter().map(|&i| pairs[i].lr.to_tensor()).collect();
    let targets: Vec<Tensor> = indices
        .iter()
        .map(|&i| {
            let p = &pairs[i];
            match objective {
                Objective::Residual => {
                    let data = p.hr.data().iter().zip(p.lr.data()).map(|(h, l)| h - l).collect();
                    ImagePlane::new(p.hr.height(), p.hr.width(), data).map(|pl| pl.to_tensor())
                }
                Objective::Direct => Ok(p.hr.to_tensor()),
            }
        })
        .collect::<Result<_>>()?;
    let lr_refs: Vec<&Tensor> = lr.iter().collect();
    let target_refs: Vec<&Tensor> = targets.iter().collect();
    Ok((Tensor::stack(&lr_refs)?, Tensor::stack(&target_refs)?))
}

fn params_finite(net: &Network) -> Option<String> {
    net.named_tensors()
        .into_iter()
        .find(|t| t.data.iter().any(|v| !v.is_finite()))
        .map(|t| t.name)
}

/// One forward/backward/update on a stacked batch. Returns the batch loss.
pub fn train_step(
    net: &mut Network,
    state: &mut OptimizerState,
    config: &TrainConfig,
    input: &Tensor,
    target: &Tensor,
) -> Result<f64> {
    let (_, cache) = net.forward(input, Mode::Train)?;
    let (loss, grad) = euclidean_loss(cache.residual(), target)?;
    if !loss.is_finite() {
        return Err(Error::NonFiniteGradient("loss".into()));
    }
    let mut grads = net.backward(&cache, &grad)?.params;
    clip_gradients(&mut grads, lr_at(state.epoch, config), config.clip_tau);
    let mut params = net.params_mut();
    sgd_step(&mut params, &grads, state, config)?;
    Ok(loss)
}

/// Mini-batch momentum SGD over `config.epochs` epochs.
///
/// The per-epoch visiting order comes from the dataset seed, so a run is
/// reproducible for a fixed seed, data and config. `on_epoch` sees each row
/// as it is produced. If a loss, gradient or parameter becomes non-finite,
/// training stops, `net` is restored to the best (or last finite)
/// end-of-epoch state, and `Error::NonFiniteGradient` is returned.
pub fn train(
    net: &mut Network,
    dataset: &Dataset,
    config: &TrainConfig,
    validation: Option<Validation<'_>>,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainReport> {
    config.validate()?;
    let mut state = OptimizerState::new(&net.params_mut());
    let mut history = Vec::with_capacity(config.epochs);
    let mut best: Option<BestSnapshot> = None;
    let mut last_good = net.clone();

    for epoch in 0..config.epochs {
        state.epoch = epoch;
        let lr = lr_at(epoch, config);
        let order = dataset.epoch_order(epoch);
        let mut loss_sum = 0.0f64;
        let mut batches = 0usize;
        let mut failure = None;
        for chunk in order.chunks(config.batch_size) {
            let step = stack_batch(dataset, chunk, config.objective)
                .and_then(|(x, t)| train_step(net, &mut state, config, &x, &t));
            match step {
                Ok(loss) => {
                    loss_sum += loss;
                    batches += 1;
                }
                Err(e @ Error::NonFiniteGradient(_)) => {
                    failure = Some(e);
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        if failure.is_none() {
            if let Some(name) = params_finite(net) {
                failure = Some(Error::NonFiniteGradient(name));
            } else if !state.is_finite() {
                failure = Some(Error::NonFiniteGradient("momentum".into()));
            }
        }
        if let Some(e) = failure {
            warn!("epoch {epoch}: training diverged ({e}); restoring last good weights");
            *net = match best {
                Some(b) => b.network,
                None => last_good,
            };
            return Err(e);
        }

        let mut record = EpochRecord {
            epoch,
            lr,
            mean_train_loss: loss_sum / batches.max(1) as f64,
            val_psnr: Vec::new(),
        };
        if let Some(v) = validation {
            let report = validate(net, config.objective, v)?;
            record.val_psnr = report.summaries.iter().map(|s| (s.scale, s.psnr)).collect();
            let mean = record.mean_psnr().unwrap_or(f64::NEG_INFINITY);
            if best.as_ref().is_none_or(|b| mean > b.mean_psnr) {
                best = Some(BestSnapshot { epoch, mean_psnr: mean, network: net.clone() });
            }
        }
        info!(
            "epoch {epoch} lr {lr:.2e} loss {:.6}{}",
            record.mean_train_loss,
            record
                .val_psnr
                .iter()
                .map(|(s, p)| format!(" x{s} {p:.2}dB"))
                .collect::<String>()
        );
        debug!("epoch {epoch}: {batches} batches, {} steps total", state.step);
        on_epoch(&record);
        history.push(record);
        last_good = net.clone();
    }
    Ok(TrainReport { history, best, steps: state.step })
}
