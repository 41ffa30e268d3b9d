//! Static properties of an architecture: size, depth, receptive field and the
//! unfolded view of a residual stack as a set of paths.
//!
//! A stack of `U` residual units unrolls into `2^U` paths, one per choice of
//! "through the branch" or "along the shortcut" at each unit. A path's depth
//! is the number of branches it takes, so `C(U, d)` paths have depth `d`.

use std::collections::BTreeMap;

use super::spec::{ArchSpec, ReluPosition};
use crate::error::{Error, Result};

fn conv_params(in_c: usize, out_c: usize, kernel: usize) -> usize {
    in_c * out_c * kernel * kernel + out_c
}

/// Weight plus bias elements of every convolution (projection shortcuts
/// included) plus `γ, β` of every batch-norm layer.
///
/// Closed form, with `conv(i, o, k) = i·o·k² + o`, head width `N₁`, tail
/// width `N_L`, `F` head convs, `T` tail convs and `C` convs per unit:
///
/// ```text
/// conv(1, N₁, 3) + (F−1)·conv(N₁, N₁, 3)
///   + Σ_units [ conv(P, N, 3) + (C−1)·conv(N, N, 3) + [P ≠ N]·conv(P, N, proj) ]
///   + (T−1)·conv(N_L, N_L, 3) + conv(N_L, 1, 3)
/// ```
///
/// where `P` is the width entering the unit.
pub fn count_parameters(spec: &ArchSpec) -> usize {
    let first = spec.first_width();
    let last = spec.last_width();
    let mut total = conv_params(1, first, 3) + (spec.feature_convs - 1) * conv_params(first, first, 3);
    let mut width = first;
    for container in &spec.containers {
        let n = container.filters;
        for _ in 0..container.units {
            total += conv_params(width, n, 3) + (spec.convs_per_unit - 1) * conv_params(n, n, 3);
            if width != n {
                total += conv_params(width, n, spec.projection_kernel);
            }
            if spec.use_bn {
                let first_bn = match spec.relu_position {
                    ReluPosition::BeforeConv => width,
                    ReluPosition::AfterConv => n,
                };
                total += 2 * (first_bn + (spec.convs_per_unit - 1) * n);
            }
            width = n;
        }
    }
    total + (spec.reconstruction_convs - 1) * conv_params(last, last, 3) + conv_params(last, 1, 3)
}

/// Receptive field of a stack of `depth` 3×3 stride-1 convolutions.
pub fn receptive_field_for_depth(depth: usize) -> usize {
    2 * depth + 1
}

pub fn receptive_field(spec: &ArchSpec) -> usize {
    receptive_field_for_depth(spec.depth())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathStats {
    pub units: usize,
    pub total_paths: u128,
    /// Path depth (branches taken) to number of paths.
    pub depth_histogram: BTreeMap<usize, u128>,
}

/// Largest unit count for which [`enumerate_paths`] walks every path.
pub const MAX_ENUMERATED_UNITS: usize = 30;

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // exact at every step: acc·(n−i)/(i+1) = C(n, i+1)
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Closed-form path statistics for `units` residual units.
pub fn path_stats_for_units(units: usize) -> Result<PathStats> {
    if units >= 127 {
        return Err(Error::Usage(format!("{units} units overflow 128-bit path counts")));
    }
    Ok(PathStats {
        units,
        total_paths: 1u128 << units,
        depth_histogram: (0..=units).map(|d| (d, binomial(units, d))).collect(),
    })
}

pub fn path_stats(spec: &ArchSpec) -> Result<PathStats> {
    path_stats_for_units(spec.total_units())
}

/// Walk all `2^units` paths and tally their depths. Refuses more than
/// [`MAX_ENUMERATED_UNITS`] units; use [`path_stats_for_units`] instead.
pub fn enumerate_paths(units: usize) -> Result<PathStats> {
    if units > MAX_ENUMERATED_UNITS {
        return Err(Error::Usage(format!(
            "refusing to enumerate 2^{units} paths; closed form only above {MAX_ENUMERATED_UNITS} units"
        )));
    }
    let mut hist = BTreeMap::new();
    for mask in 0u64..(1u64 << units) {
        *hist.entry(mask.count_ones() as usize).or_insert(0u128) += 1;
    }
    Ok(PathStats {
        units,
        total_paths: 1u128 << units,
        depth_histogram: hist,
    })
}

/// Fraction of unfolded paths that pass through at least one residual branch
/// of container `index`, i.e. the paths affected by changing its width:
/// `1 − 2^(−k)` for a container of `k` units.
pub fn perturbation_impact(spec: &ArchSpec, index: usize) -> Result<f64> {
    let container = spec.containers.get(index).ok_or_else(|| {
        Error::Usage(format!(
            "container index {index} out of range for {} containers",
            spec.containers.len()
        ))
    })?;
    let k = container.units as i32;
    Ok(1.0 - 0.5f64.powi(k))
}
