//! Image planes, color conversion, the bicubic degradation model and
//! training-pair extraction.

mod color;
mod dataset;
mod io;
mod pairs;
mod plane;
mod resize;

pub use color::{from_luminance, rgb_to_ycbcr, to_luminance, ycbcr_to_rgb};
pub use dataset::{
    build_dataset, pairs_from_planes, parse_scales, Dataset, DatasetManifest, SUPPORTED_SCALES,
};
pub use io::{list_images, load_image, load_luminance, save_image, save_png_gray, LoadedImage};
pub use pairs::{degrade, degrade_pair, extract_patches, patch_grid_count, SamplePair};
pub use plane::{ColorImage, ImagePlane};
pub use resize::{bicubic_resize, cubic_kernel, BICUBIC_A};
