use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use srres::arch::{count_parameters, parse_arch, path_stats, perturbation_impact, receptive_field, ArchSpec, Network};
use srres::checkpoint::{load_checkpoint, save_checkpoint};
use srres::data::{
    bicubic_resize, build_dataset, degrade_pair, from_luminance, list_images, load_image, load_luminance,
    pairs_from_planes, parse_scales, rgb_to_ycbcr, save_image, save_png_gray, Dataset, DatasetManifest, ImagePlane,
    LoadedImage,
};
use srres::experiments::{run_shapes_experiment, ShapeFamily};
use srres::fsutil::write_atomic;
use srres::metrics::{evaluate, super_resolve};
use srres::optim::{parse_key_values, train, write_history, EpochRecord, TrainConfig, Validation};
use srres::{Error, Result};

use crate::{Cli, Command, TrainFlags};

const DEFAULT_ARCH: &str = "16_3,32_3,64_3";

pub fn run(cli: Cli) -> Result<()> {
    let config = cli.config.as_deref();
    match cli.command {
        Command::Train { data, out, arch, val, history, flags } => {
            cmd_train(config, cli.seed, &data, &out, arch, val.as_deref(), history, &flags)
        }
        Command::Eval { checkpoint, data, scales, out, per_image } => {
            cmd_eval(&checkpoint, &data, &scales, out.as_deref(), per_image.as_deref())
        }
        Command::Upscale { checkpoint, input, scale, output } => cmd_upscale(&checkpoint, &input, scale, &output),
        Command::Analyze { arch, compare } => cmd_analyze(&arch, compare.as_deref()),
        Command::ShapesExperiment { base_width, data, val, out, flags } => {
            cmd_shapes(config, cli.seed, base_width, &data, val.as_deref(), &out, &flags)
        }
        Command::Degrade { input, scale, output, small } => cmd_degrade(&input, scale, &output, small.as_deref()),
    }
}

/// Files written so far by a command; removed again if a later step fails.
#[derive(Default)]
struct Outputs(Vec<PathBuf>);

impl Outputs {
    fn track(&mut self, path: &Path, result: Result<()>) -> Result<()> {
        if result.is_ok() {
            self.0.push(path.to_path_buf());
        }
        result
    }

    fn discard(self) {
        for p in self.0 {
            let _ = fs::remove_file(p);
        }
    }
}

/// Training data plus the resolved config. Precedence, lowest first:
/// defaults, manifest, config file, flags.
struct Resolved {
    manifest: DatasetManifest,
    config: TrainConfig,
    arch: Option<String>,
}

fn resolve(config_file: Option<&Path>, seed: Option<u64>, data: &Path, flags: &TrainFlags) -> Result<Resolved> {
    let mut config = TrainConfig::default();
    let mut manifest = if data.is_dir() {
        let mut m = DatasetManifest::for_dir(data, config.scales.clone())?;
        m.stride = config.patch_size;
        m
    } else {
        let m = DatasetManifest::load(data)?;
        config.scales = m.scales.clone();
        config.patch_size = m.patch_size;
        config.seed = m.seed;
        m
    };
    let mut arch = None;
    if let Some(path) = config_file {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Usage(format!("cannot read config {}: {e}", path.display())))?;
        for (key, value) in parse_key_values(&text)? {
            match key.as_str() {
                "arch" => arch = Some(value),
                "stride" => {
                    manifest.stride = value
                        .parse()
                        .map_err(|_| Error::Usage(format!("config key 'stride': cannot parse '{value}'")))?
                }
                _ => config.set(&key, &value)?,
            }
        }
    }
    let overrides = [
        ("epochs", &flags.epochs),
        ("lr", &flags.lr),
        ("lr_step", &flags.lr_step),
        ("momentum", &flags.momentum),
        ("weight_decay", &flags.weight_decay),
        ("clip_tau", &flags.clip_tau),
        ("batch", &flags.batch),
        ("patch", &flags.patch),
        ("scales", &flags.scales),
        ("objective", &flags.objective),
    ];
    for (key, value) in overrides {
        if let Some(v) = value {
            config.set(key, v)?;
        }
    }
    if let Some(s) = seed {
        config.seed = s;
    }
    if let Some(s) = flags.stride {
        manifest.stride = s;
    }
    manifest.scales = config.scales.clone();
    manifest.patch_size = config.patch_size;
    manifest.seed = config.seed;
    config.validate()?;
    manifest.validate()?;
    Ok(Resolved { manifest, config, arch })
}

fn load_named(dir: &Path) -> Result<Vec<(String, ImagePlane)>> {
    let paths = list_images(dir)?;
    if paths.is_empty() {
        return Err(Error::Data(format!("no images in {}", dir.display())));
    }
    paths.iter().map(|p| Ok((image_name(p), load_luminance(p)?))).collect()
}

fn image_name(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// `model.ckpt` -> `model.best.ckpt`.
pub fn best_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    match out.extension() {
        Some(ext) => out.with_file_name(format!("{stem}.best.{}", ext.to_string_lossy())),
        None => out.with_file_name(format!("{stem}.best")),
    }
}

fn history_path(out: &Path) -> PathBuf {
    let name = out.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{name}.history.csv"))
}

fn print_epoch(r: &EpochRecord) {
    let psnr: String = r.val_psnr.iter().map(|(s, p)| format!("  x{s} {p:.3} dB")).collect();
    println!("epoch {:>4}  lr {:.1e}  loss {:.6}{psnr}", r.epoch, r.lr, r.mean_train_loss);
}

#[allow(clippy::too_many_arguments)]
fn cmd_train(
    config_file: Option<&Path>,
    seed: Option<u64>,
    data: &Path,
    out: &Path,
    arch_flag: Option<String>,
    val: Option<&Path>,
    history: Option<PathBuf>,
    flags: &TrainFlags,
) -> Result<()> {
    let resolved = resolve(config_file, seed, data, flags)?;
    let cfg = resolved.config;
    let arch_text = arch_flag.or(resolved.arch).unwrap_or_else(|| DEFAULT_ARCH.to_string());
    let arch = parse_arch(&arch_text)?;
    let val_images = val.map(load_named).transpose()?;
    let dataset = build_dataset(&resolved.manifest)?;
    info!("{} training pairs from {} images", dataset.len(), resolved.manifest.images.len());

    let mut net = Network::build(&arch, cfg.seed)?;
    println!("training {arch} ({} parameters) on {} pairs, scales {:?}", count_parameters(&arch), dataset.len(), cfg.scales);
    let validation = val_images.as_ref().map(|images| Validation { images, scales: &cfg.scales });
    let mut rows = Vec::new();
    let result = train(&mut net, &dataset, &cfg, validation, |r| {
        print_epoch(r);
        rows.push(r.clone());
    });

    let best = best_path(out);
    let report = match result {
        Ok(r) => r,
        Err(e @ Error::NonFiniteGradient(_)) => {
            // `net` holds the best (or last finite) weights.
            save_checkpoint(&net, &best)?;
            eprintln!("training diverged; kept {}", best.display());
            return Err(e);
        }
        Err(e) => return Err(e),
    };
    let mut written = Outputs::default();
    let history = history.unwrap_or_else(|| history_path(out));
    let steps = (|| {
        written.track(out, save_checkpoint(&net, out))?;
        written.track(&history, write_history(&history, &report.history))?;
        if let Some(b) = &report.best {
            written.track(&best, save_checkpoint(&b.network, &best))?;
            println!("best epoch {} ({:.3} dB) -> {}", b.epoch, b.mean_psnr, best.display());
        }
        Ok(())
    })();
    if let Err(e) = steps {
        written.discard();
        return Err(e);
    }
    println!("wrote {} and {}", out.display(), history.display());
    Ok(())
}

fn cmd_eval(checkpoint: &Path, data: &Path, scales: &str, out: Option<&Path>, per_image: Option<&Path>) -> Result<()> {
    let scales = parse_scales(scales)?;
    let net = load_checkpoint(checkpoint)?;
    let images = load_named(data)?;
    let name = image_name(data);
    let report = evaluate(&net, &name, &images, &scales)?;
    print!("{}", report.to_csv());
    let mut written = Outputs::default();
    let steps = (|| {
        if let Some(p) = out {
            written.track(p, report.write_csv(p))?;
        }
        if let Some(p) = per_image {
            written.track(p, write_atomic(p, report.per_image_csv().as_bytes()))?;
        }
        Ok(())
    })();
    if steps.is_err() {
        written.discard();
    }
    steps
}

fn cmd_upscale(checkpoint: &Path, input: &Path, scale: usize, output: &Path) -> Result<()> {
    parse_scales(&scale.to_string())?;
    let net = load_checkpoint(checkpoint)?;
    let img = load_image(input)?;
    let (h, w) = img.dims();
    let (oh, ow) = (h * scale, w * scale);
    let result = match img {
        LoadedImage::Gray(p) => LoadedImage::Gray(super_resolve(&net, &bicubic_resize(&p, oh, ow))?),
        LoadedImage::Color(c) => {
            let up = c.map_planes(|p| bicubic_resize(p, oh, ow));
            let [y, cb, cr] = rgb_to_ycbcr(&up).planes;
            LoadedImage::Color(from_luminance(&super_resolve(&net, &y)?, &cb, &cr))
        }
    };
    save_image(output, &result)?;
    println!("{}x{} -> {}x{}: {}", w, h, ow, oh, output.display());
    Ok(())
}

fn describe(spec: &ArchSpec) -> Result<String> {
    let stats = path_stats(spec)?;
    let rf = receptive_field(spec);
    let histogram: Vec<String> = stats.depth_histogram.iter().map(|(d, n)| format!("{d}:{n}")).collect();
    let mut out = format!(
        "arch            {spec}\ndepth           {}\nparameters      {}\nreceptive field {rf}x{rf}\nresidual units  {}\npaths           {}\npath depths     {}\n",
        spec.depth(),
        count_parameters(spec),
        spec.total_units(),
        stats.total_paths,
        histogram.join(" ")
    );
    for (i, c) in spec.containers.iter().enumerate() {
        out += &format!(
            "container {i} ({}_{}): perturbation impact {:.6}\n",
            c.filters,
            c.units,
            perturbation_impact(spec, i)?
        );
    }
    Ok(out)
}

fn cmd_analyze(arch: &str, compare: Option<&str>) -> Result<()> {
    let spec = parse_arch(arch)?;
    print!("{}", describe(&spec)?);
    if let Some(other) = compare {
        let other = parse_arch(other)?;
        let (a, b) = (count_parameters(&spec) as i64, count_parameters(&other) as i64);
        println!();
        print!("{}", describe(&other)?);
        println!();
        println!(
            "parameters {a} vs {b}: {} fewer ({:+.2}%)",
            b - a,
            (a - b) as f64 / b as f64 * 100.0
        );
    }
    Ok(())
}

fn cmd_shapes(
    config_file: Option<&Path>,
    seed: Option<u64>,
    base_width: usize,
    data: &Path,
    val: Option<&Path>,
    out: &Path,
    flags: &TrainFlags,
) -> Result<()> {
    for family in ShapeFamily::ALL {
        family.arch(base_width)?;
    }
    let resolved = resolve(config_file, seed, data, flags)?;
    let cfg = resolved.config;
    let manifest = resolved.manifest;
    let mut train_images: Vec<(String, ImagePlane)> = manifest
        .images
        .iter()
        .map(|p| Ok((image_name(p), load_luminance(p)?)))
        .collect::<Result<_>>()?;
    let held = match val {
        Some(dir) => load_named(dir)?,
        None => {
            if train_images.len() < 2 {
                return Err(Error::Data("need at least two images to hold one out; pass --val".into()));
            }
            let n = (train_images.len() / 5).max(1);
            train_images.split_off(train_images.len() - n)
        }
    };
    let planes: Vec<ImagePlane> = train_images.into_iter().map(|(_, p)| p).collect();
    let pairs = pairs_from_planes(&planes, &cfg.scales, cfg.patch_size, manifest.stride, manifest.flip)?;
    let dataset = Dataset::new(pairs, cfg.seed)?;
    let exp = run_shapes_experiment(base_width, &dataset, Validation { images: &held, scales: &cfg.scales }, &cfg)?;
    let csv = exp.to_csv();
    print!("{csv}");
    println!("psnr spread {:.4} dB", exp.psnr_spread());
    write_atomic(out, csv.as_bytes())
}

fn cmd_degrade(input: &Path, scale: usize, output: &Path, small: Option<&Path>) -> Result<()> {
    parse_scales(&scale.to_string())?;
    let img = load_luminance(input)?;
    let (hr, lr) = degrade_pair(&img, scale)?;
    let mut written = Outputs::default();
    let steps = (|| {
        written.track(output, save_png_gray(output, &lr))?;
        if let Some(p) = small {
            let (h, w) = hr.dims();
            written.track(p, save_png_gray(p, &bicubic_resize(&hr, h / scale, w / scale)))?;
        }
        Ok(())
    })();
    if steps.is_err() {
        written.discard();
    }
    steps
}
