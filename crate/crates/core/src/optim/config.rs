use crate::data::parse_scales;
use crate::error::{Error, Result};

/// What the network output before the global skip is trained to match.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Objective {
    /// The high-frequency residual `hr − lr`; the input is added back at the output.
    #[default]
    Residual,
    /// The HR patch itself, with no input added back.
    Direct,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub base_lr: f64,
    /// Epochs per tenfold learning-rate decay.
    pub lr_step: usize,
    pub momentum: f64,
    pub weight_decay: f64,
    /// Gradients are clamped to `±clip_tau / lr`.
    pub clip_tau: f64,
    pub batch_size: usize,
    pub patch_size: usize,
    pub scales: Vec<usize>,
    pub epochs: usize,
    pub seed: u64,
    pub objective: Objective,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            base_lr: 0.1,
            lr_step: 30,
            momentum: 0.9,
            weight_decay: 1e-4,
            clip_tau: 0.01,
            batch_size: 64,
            patch_size: 41,
            scales: vec![2, 3, 4],
            epochs: 80,
            seed: 0,
            objective: Objective::Residual,
        }
    }
}

impl TrainConfig {
    pub const MIN_PATCH: usize = 9;

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Usage(format!("invalid training config: {m}")));
        if !(self.base_lr > 0.0 && self.base_lr.is_finite()) {
            return bad("learning rate must be positive");
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad("momentum must lie in [0, 1)");
        }
        if !(self.clip_tau > 0.0 && self.clip_tau.is_finite()) {
            return bad("clip tau must be positive");
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return bad("weight decay must be non-negative");
        }
        if self.batch_size == 0 {
            return bad("batch size must be at least 1");
        }
        if self.lr_step == 0 {
            return bad("lr step must be at least 1");
        }
        if self.patch_size < Self::MIN_PATCH {
            return bad("patch size must be at least 9");
        }
        if self.scales.is_empty() {
            return bad("no scales");
        }
        Ok(())
    }

    /// Apply one `key=value` setting. Keys: `lr`, `lr_step`, `momentum`,
    /// `weight_decay`, `clip_tau`, `batch`, `patch`, `scales`, `epochs`,
    /// `seed`, `objective` (`residual` or `direct`).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .trim()
                .parse()
                .map_err(|_| Error::Usage(format!("config key '{key}': cannot parse '{value}'")))
        }
        match key {
            "lr" => self.base_lr = num(key, value)?,
            "lr_step" => self.lr_step = num(key, value)?,
            "momentum" => self.momentum = num(key, value)?,
            "weight_decay" => self.weight_decay = num(key, value)?,
            "clip_tau" => self.clip_tau = num(key, value)?,
            "batch" => self.batch_size = num(key, value)?,
            "patch" => self.patch_size = num(key, value)?,
            "scales" => self.scales = parse_scales(value)?,
            "epochs" => self.epochs = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "objective" => {
                self.objective = match value.trim() {
                    "residual" => Objective::Residual,
                    "direct" => Objective::Direct,
                    other => {
                        return Err(Error::Usage(format!(
                            "config key 'objective': expected residual or direct, got '{other}'"
                        )))
                    }
                }
            }
            _ => return Err(Error::Usage(format!("unknown config key '{key}'"))),
        }
        Ok(())
    }
}

/// Split `key=value` lines, skipping blanks and `#` comments.
pub fn parse_key_values(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Usage(format!("line {}: expected key=value", i + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}
