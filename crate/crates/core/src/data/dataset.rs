use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::io::{list_images, load_luminance};
use super::pairs::{degrade_pair, extract_patches, SamplePair};
use super::plane::ImagePlane;
use crate::error::{Error, Result};

pub const SUPPORTED_SCALES: [usize; 3] = [2, 3, 4];

pub fn parse_scales(text: &str) -> Result<Vec<usize>> {
    let mut set = BTreeSet::new();
    for tok in text.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let s: usize = tok
            .parse()
            .map_err(|_| Error::Usage(format!("bad scale '{tok}'")))?;
        if !SUPPORTED_SCALES.contains(&s) {
            return Err(Error::Usage(format!(
                "unsupported scale {s}; supported scales are 2, 3, 4"
            )));
        }
        set.insert(s);
    }
    if set.is_empty() {
        return Err(Error::Usage("no scales given".into()));
    }
    Ok(set.into_iter().collect())
}

/// Training-data description, read from a `key=value` file:
///
/// ```text
/// images=train/        # directory, relative to the manifest
/// scales=2,3,4
/// patch=41
/// stride=41
/// seed=1
/// augment=flip         # optional; default none
/// ```
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetManifest {
    pub images: Vec<PathBuf>,
    pub scales: Vec<usize>,
    pub patch_size: usize,
    pub stride: usize,
    pub seed: u64,
    /// Adds a horizontally mirrored copy of every pair.
    pub flip: bool,
}

impl DatasetManifest {
    pub const DEFAULT_PATCH: usize = 41;
    pub const DEFAULT_STRIDE: usize = 41;

    pub fn for_dir(dir: &Path, scales: Vec<usize>) -> Result<Self> {
        let images = list_images(dir)?;
        Ok(DatasetManifest {
            images,
            scales,
            patch_size: Self::DEFAULT_PATCH,
            stride: Self::DEFAULT_STRIDE,
            seed: 0,
            flip: false,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Data(format!("cannot read manifest {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut dir = None;
        let mut scales = None;
        let mut patch = Self::DEFAULT_PATCH;
        let mut stride = Self::DEFAULT_STRIDE;
        let mut seed = 0u64;
        let mut flip = false;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Usage(format!("manifest line {}: expected key=value", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            let int = |v: &str| -> Result<usize> {
                v.parse()
                    .map_err(|_| Error::Usage(format!("manifest key '{key}': bad integer '{v}'")))
            };
            match key {
                "images" => dir = Some(base.join(value)),
                "scales" => scales = Some(parse_scales(value)?),
                "patch" => patch = int(value)?,
                "stride" => stride = int(value)?,
                "seed" => seed = int(value)? as u64,
                "augment" => {
                    flip = match value {
                        "none" => false,
                        "flip" => true,
                        _ => return Err(Error::Usage(format!("manifest key 'augment': unknown value '{value}'"))),
                    }
                }
                _ => return Err(Error::Usage(format!("unknown manifest key '{key}'"))),
            }
        }
        let dir = dir.ok_or_else(|| Error::Usage("manifest is missing 'images'".into()))?;
        let manifest = DatasetManifest {
            images: list_images(&dir)?,
            scales: scales.unwrap_or_else(|| vec![2, 3, 4]),
            patch_size: patch,
            stride,
            seed,
            flip,
        };
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn validate(&self) -> Result<()> {
        if self.images.is_empty() {
            return Err(Error::Data("manifest lists no images".into()));
        }
        if self.scales.is_empty() {
            return Err(Error::Usage("manifest lists no scales".into()));
        }
        if self.patch_size == 0 || self.stride == 0 {
            return Err(Error::Usage("patch and stride must be positive".into()));
        }
        Ok(())
    }
}

/// Patch pairs across all images and scales, in a seed-determined order.
#[derive(Clone, Debug)]
pub struct Dataset {
    pairs: Vec<SamplePair>,
    seed: u64,
}

impl Dataset {
    /// Shuffles `pairs` by `seed`.
    pub fn new(mut pairs: Vec<SamplePair>, seed: u64) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::Data("dataset is empty".into()));
        }
        pairs.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        Ok(Dataset { pairs, seed })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[SamplePair] {
        &self.pairs
    }

    /// Visiting order for `epoch`; a fresh permutation every epoch.
    pub fn epoch_order(&self, epoch: usize) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.pairs.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(epoch as u64 + 1);
        order.shuffle(&mut rng);
        order
    }

    pub fn count_for_scale(&self, scale: usize) -> usize {
        self.pairs.iter().filter(|p| p.scale == scale).count()
    }
}

/// Degrade every image at every scale and cut aligned patches.
/// Images are processed in parallel and merged in input order.
pub fn pairs_from_planes(
    images: &[ImagePlane],
    scales: &[usize],
    patch: usize,
    stride: usize,
    flip: bool,
) -> Result<Vec<SamplePair>> {
    let per_image: Vec<Result<Vec<SamplePair>>> = images
        .par_iter()
        .map(|img| {
            let mut out = Vec::new();
            for &s in scales {
                let (hr, lr) = degrade_pair(img, s)?;
                for pair in extract_patches(&hr, &lr, patch, stride, s)? {
                    if flip {
                        out.push(SamplePair {
                            lr: pair.lr.flip_horizontal(),
                            hr: pair.hr.flip_horizontal(),
                            scale: s,
                        });
                    }
                    out.push(pair);
                }
            }
            Ok(out)
        })
        .collect();
    let mut all = Vec::new();
    for r in per_image {
        all.extend(r?);
    }
    Ok(all)
}

pub fn build_dataset(manifest: &DatasetManifest) -> Result<Dataset> {
    manifest.validate()?;
    let images = manifest
        .images
        .par_iter()
        .map(|p| load_luminance(p))
        .collect::<Result<Vec<_>>>()?;
    let pairs = pairs_from_planes(
        &images,
        &manifest.scales,
        manifest.patch_size,
        manifest.stride,
        manifest.flip,
    )?;
    Dataset::new(pairs, manifest.seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texture(h: usize, w: usize) -> ImagePlane {
        ImagePlane::from_fn(h, w, |y, x| if (y / 3 + x / 4) % 2 == 0 { 0.8 } else { 0.2 })
    }

    #[test]
    fn one_pair_per_scale() {
        let img = texture(41, 41);
        let single = pairs_from_planes(std::slice::from_ref(&img), &[2], 41, 41, false).unwrap();
        // the 2x crop of 41 is 40, smaller than the patch
        assert!(single.is_empty());
        let img = texture(48, 48);
        let pairs = pairs_from_planes(&[img], &[2, 3, 4], 41, 41, false).unwrap();
        assert_eq!(pairs.iter().map(|p| p.scale).collect::<Vec<_>>(), vec![2, 3, 4]);
    }

    #[test]
    fn empty_dataset_rejected() {
        assert!(matches!(Dataset::new(Vec::new(), 0), Err(Error::Data(_))));
    }

    #[test]
    fn order_is_seeded_and_changes_per_epoch() {
        let pairs = pairs_from_planes(&[texture(96, 96)], &[2, 3, 4], 16, 16, false).unwrap();
        let a = Dataset::new(pairs.clone(), 5).unwrap();
        let b = Dataset::new(pairs, 5).unwrap();
        assert_eq!(a.pairs(), b.pairs());
        assert_eq!(a.epoch_order(3), b.epoch_order(3));
        assert_ne!(a.epoch_order(0), a.epoch_order(1));
        for s in [2, 3, 4] {
            assert!(a.count_for_scale(s) > 0);
        }
    }

    #[test]
    fn manifest_parsing() {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir(dir.path().join("imgs")).unwrap();
        super::super::io::save_png_gray(&dir.path().join("imgs/a.png"), &texture(50, 50)).unwrap();
        let m = DatasetManifest::parse("images=imgs\nscales=3, 2\npatch=20 # comment\nstride=10\nseed=9\n", dir.path()).unwrap();
        assert_eq!(m.scales, vec![2, 3]);
        assert_eq!((m.patch_size, m.stride, m.seed), (20, 10, 9));
        assert_eq!(m.images.len(), 1);
        assert!(DatasetManifest::parse("images=imgs\nbogus=1\n", dir.path()).is_err());
        assert!(DatasetManifest::parse("images=imgs\nscales=5\n", dir.path()).is_err());
        let ds = build_dataset(&m).unwrap();
        assert!(!ds.is_empty());
    }
}
