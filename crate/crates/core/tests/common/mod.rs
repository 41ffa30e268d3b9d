#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use srres::arch::{ArchSpec, Container, ReluPosition};
use srres::data::ImagePlane;
use srres::tensor::{Dims, Tensor};

pub mod gradcheck;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_tensor(rng: &mut ChaCha8Rng, dims: Dims, lo: f32, hi: f32) -> Tensor {
    Tensor::from_fn(dims, |_, _, _, _| rng.random_range(lo..hi))
}

/// Uniform values kept at least `gap` away from zero, so ReLU kinks stay
/// outside a finite-difference stencil.
pub fn away_from_zero(rng: &mut ChaCha8Rng, dims: Dims, gap: f32) -> Tensor {
    Tensor::from_fn(dims, |_, _, _, _| {
        let m = rng.random_range(gap..1.0);
        if rng.random_bool(0.5) {
            m
        } else {
            -m
        }
    })
}

/// `‖a − b‖ / max(‖a‖, ‖b‖, 1e-3)`. The floor covers gradients that are
/// zero in exact arithmetic, such as a bias feeding batch normalization.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&diff) / norm(a).max(norm(b)).max(1e-3)
}

/// Central differences of `f` with respect to every element of `x`.
pub fn numeric_gradient(x: &mut [f32], eps: f32, mut f: impl FnMut(&[f32]) -> f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let orig = x[i];
            x[i] = orig + eps;
            let up = f(x);
            x[i] = orig - eps;
            let down = f(x);
            x[i] = orig;
            // The perturbation that was actually applied, after f32 rounding.
            let h = (orig + eps) as f64 - (orig - eps) as f64;
            (up - down) / h
        })
        .collect()
}

pub fn weighted_sum(t: &Tensor, w: &Tensor) -> f64 {
    t.dot(w)
}

/// Smooth band-limited texture with some edges, values in [0, 1].
#[allow(clippy::approx_constant)]
pub fn texture(h: usize, w: usize, seed: u64) -> ImagePlane {
    let mut r = rng(seed);
    let waves: Vec<(f32, f32, f32, f32)> = (0..6)
        .map(|_| {
            (
                r.random_range(0.05..0.6),
                r.random_range(0.05..0.6),
                r.random_range(0.0..6.28),
                r.random_range(0.03..0.12),
            )
        })
        .collect();
    let (cy, cx, rad) = (
        r.random_range(0.0..h as f32),
        r.random_range(0.0..w as f32),
        r.random_range(4.0..(h.min(w) as f32 / 2.0).max(5.0)),
    );
    ImagePlane::from_fn(h, w, |y, x| {
        let (yf, xf) = (y as f32, x as f32);
        let mut v = 0.5;
        for &(fy, fx, ph, a) in &waves {
            v += a * (fy * yf + fx * xf + ph).sin();
        }
        if (yf - cy).hypot(xf - cx) < rad {
            v += 0.15;
        }
        v.clamp(0.0, 1.0)
    })
}

/// Independent f64 reimplementation of the network forward pass, built on
/// plain nested loops and read from the public layer structures.
pub mod oracle {
    use srres::arch::{Network, ReluPosition};
    use srres::tensor::{ConvParams, Dims, Tensor};

    #[derive(Clone, Debug)]
    pub struct Conv {
        pub w: Vec<f64>,
        pub b: Vec<f64>,
        pub in_c: usize,
        pub out_c: usize,
        pub k: usize,
    }

    #[derive(Clone, Debug)]
    pub struct Bn {
        pub gamma: Vec<f64>,
        pub beta: Vec<f64>,
        pub eps: f64,
    }

    #[derive(Clone, Debug)]
    pub struct Unit {
        pub convs: Vec<Conv>,
        pub bns: Vec<Bn>,
        pub proj: Option<Conv>,
    }

    #[derive(Clone, Debug)]
    pub struct Net {
        pub head: Vec<Conv>,
        pub units: Vec<Unit>,
        pub tail: Vec<Conv>,
        pub relu_after: bool,
    }

    /// Activations in NCHW order with their dims.
    #[derive(Clone, Debug)]
    pub struct Act {
        pub n: usize,
        pub c: usize,
        pub h: usize,
        pub w: usize,
        pub v: Vec<f64>,
    }

    impl Act {
        pub fn from_tensor(t: &Tensor) -> Act {
            let d = t.dims();
            Act { n: d.n, c: d.c, h: d.h, w: d.w, v: t.data().iter().map(|&x| x as f64).collect() }
        }

        pub fn dims(&self) -> Dims {
            Dims::new(self.n, self.c, self.h, self.w)
        }
    }

    fn conv_from(p: &ConvParams) -> Conv {
        Conv {
            w: p.weight.data().iter().map(|&x| x as f64).collect(),
            b: p.bias.iter().map(|&x| x as f64).collect(),
            in_c: p.in_channels(),
            out_c: p.out_channels(),
            k: p.kernel(),
        }
    }

    impl Net {
        pub fn from_network(net: &Network) -> Net {
            Net {
                head: net.head().iter().map(conv_from).collect(),
                units: net
                    .units()
                    .iter()
                    .map(|u| Unit {
                        convs: u.convs.iter().map(conv_from).collect(),
                        bns: u
                            .bns
                            .iter()
                            .map(|b| Bn {
                                gamma: b.gamma.iter().map(|&x| x as f64).collect(),
                                beta: b.beta.iter().map(|&x| x as f64).collect(),
                                eps: b.epsilon as f64,
                            })
                            .collect(),
                        proj: u.shortcut.as_ref().map(conv_from),
                    })
                    .collect(),
                tail: net.tail().iter().map(conv_from).collect(),
                relu_after: net.arch().relu_position == ReluPosition::AfterConv,
            }
        }

        /// Parameter vectors in the library's parameter order.
        pub fn params_mut(&mut self) -> Vec<&mut Vec<f64>> {
            let mut out: Vec<&mut Vec<f64>> = Vec::new();
            for c in &mut self.head {
                out.push(&mut c.w);
                out.push(&mut c.b);
            }
            for u in &mut self.units {
                for c in &mut u.convs {
                    out.push(&mut c.w);
                    out.push(&mut c.b);
                }
                for b in &mut u.bns {
                    out.push(&mut b.gamma);
                    out.push(&mut b.beta);
                }
                if let Some(c) = &mut u.proj {
                    out.push(&mut c.w);
                    out.push(&mut c.b);
                }
            }
            for c in &mut self.tail {
                out.push(&mut c.w);
                out.push(&mut c.b);
            }
            out
        }

        /// Output before the global skip; batch norm uses batch statistics.
        pub fn residual(&self, x: &Act) -> Act {
            let mut a = x.clone();
            for c in &self.head {
                a = relu(&conv(&a, c));
            }
            for u in &self.units {
                let mut y = a.clone();
                for (j, c) in u.convs.iter().enumerate() {
                    if self.relu_after {
                        y = conv(&y, c);
                        if let Some(b) = u.bns.get(j) {
                            y = bn(&y, b);
                        }
                        y = relu(&y);
                    } else {
                        if let Some(b) = u.bns.get(j) {
                            y = bn(&y, b);
                        }
                        y = conv(&relu(&y), c);
                    }
                }
                let skip = match &u.proj {
                    Some(p) => conv(&a, p),
                    None => a.clone(),
                };
                a = Act { v: skip.v.iter().zip(&y.v).map(|(s, f)| s + f).collect(), ..y };
            }
            for c in &self.tail {
                a = conv(&a, c);
            }
            a
        }

        pub fn output(&self, x: &Act) -> Act {
            let r = self.residual(x);
            Act { v: r.v.iter().zip(&x.v).map(|(r, x)| r + x).collect(), ..r }
        }
    }

    /// Zero-padded "same" convolution, stride 1.
    pub fn conv(x: &Act, c: &Conv) -> Act {
        assert_eq!(x.c, c.in_c);
        let p = c.k as isize / 2;
        let mut v = vec![0.0; x.n * c.out_c * x.h * x.w];
        for n in 0..x.n {
            for o in 0..c.out_c {
                for y in 0..x.h {
                    for xx in 0..x.w {
                        let mut s = c.b[o];
                        for i in 0..c.in_c {
                            for ky in 0..c.k {
                                for kx in 0..c.k {
                                    let sy = y as isize + ky as isize - p;
                                    let sx = xx as isize + kx as isize - p;
                                    if sy < 0 || sx < 0 || sy >= x.h as isize || sx >= x.w as isize {
                                        continue;
                                    }
                                    let wi = ((o * c.in_c + i) * c.k + ky) * c.k + kx;
                                    let xi = ((n * x.c + i) * x.h + sy as usize) * x.w + sx as usize;
                                    s += c.w[wi] * x.v[xi];
                                }
                            }
                        }
                        v[((n * c.out_c + o) * x.h + y) * x.w + xx] = s;
                    }
                }
            }
        }
        Act { n: x.n, c: c.out_c, h: x.h, w: x.w, v }
    }

    pub fn relu(x: &Act) -> Act {
        Act { v: x.v.iter().map(|&v| v.max(0.0)).collect(), ..x.clone() }
    }

    /// Training-mode batch normalization with the biased batch variance.
    pub fn bn(x: &Act, b: &Bn) -> Act {
        let mut v = x.v.clone();
        let hw = x.h * x.w;
        let count = (x.n * hw) as f64;
        for c in 0..x.c {
            let idx = |n: usize, i: usize| (n * x.c + c) * hw + i;
            let mut mean = 0.0;
            for n in 0..x.n {
                for i in 0..hw {
                    mean += x.v[idx(n, i)];
                }
            }
            mean /= count;
            let mut var = 0.0;
            for n in 0..x.n {
                for i in 0..hw {
                    var += (x.v[idx(n, i)] - mean).powi(2);
                }
            }
            var /= count;
            let inv = 1.0 / (var + b.eps).sqrt();
            for n in 0..x.n {
                for i in 0..hw {
                    v[idx(n, i)] = b.gamma[c] * (x.v[idx(n, i)] - mean) * inv + b.beta[c];
                }
            }
        }
        Act { v, ..x.clone() }
    }
}

/// Piecewise-smooth synthetic scene: shaded background, filled discs and
/// rectangles, and thin stripes. Sharp edges give bicubic upscaling
/// something to miss.
pub fn scene(h: usize, w: usize, seed: u64) -> ImagePlane {
    let mut r = rng(seed ^ 0x5eed);
    let (gy, gx, g0) = (r.random_range(-0.004..0.004), r.random_range(-0.004..0.004), r.random_range(0.3..0.7));
    let mut img = ImagePlane::from_fn(h, w, |y, x| g0 + gy * y as f32 + gx * x as f32);
    for _ in 0..r.random_range(3..7) {
        let level = r.random_range(0.05..0.95);
        if r.random_bool(0.5) {
            let (cy, cx) = (r.random_range(0.0..h as f32), r.random_range(0.0..w as f32));
            let rad = r.random_range(3.0..(h.min(w) as f32 / 3.0).max(4.0));
            for y in 0..h {
                for x in 0..w {
                    if (y as f32 - cy).hypot(x as f32 - cx) < rad {
                        img.set(y, x, level);
                    }
                }
            }
        } else {
            let (y0, x0) = (r.random_range(0..h), r.random_range(0..w));
            let (y1, x1) = ((y0 + r.random_range(3..h / 2 + 4)).min(h), (x0 + r.random_range(3..w / 2 + 4)).min(w));
            for y in y0..y1 {
                for x in x0..x1 {
                    img.set(y, x, level);
                }
            }
        }
    }
    let period = r.random_range(3..7);
    let (sy0, sy1) = {
        let a = r.random_range(0..h);
        (a, (a + r.random_range(4..h / 3 + 5)).min(h))
    };
    let level = r.random_range(0.0..1.0);
    for y in sy0..sy1 {
        for x in 0..w {
            if (x / period) % 2 == 0 {
                img.set(y, x, level);
            }
        }
    }
    img.clamp_unit();
    img
}

/// Random blueprint: 1 to 3 containers, small widths, every unit option
/// drawn at random.
pub fn random_arch(r: &mut ChaCha8Rng) -> ArchSpec {
    let containers = (0..r.random_range(1..4))
        .map(|_| Container { filters: r.random_range(1..9), units: r.random_range(1..4) })
        .collect();
    let mut spec = ArchSpec::new(containers);
    spec.convs_per_unit = r.random_range(2..4);
    spec.relu_position = if r.random_bool(0.5) { ReluPosition::AfterConv } else { ReluPosition::BeforeConv };
    spec.use_bn = r.random_bool(0.5);
    spec.feature_convs = r.random_range(1..4);
    spec.reconstruction_convs = r.random_range(1..4);
    spec.projection_kernel = if r.random_bool(0.5) { 1 } else { 3 };
    spec.validate().expect("generated spec is valid");
    spec
}

/// Five fixed image pairs for metric checks: additive noise, a blur,
/// a brightness offset, a structural inversion and an unrelated image.
pub fn metric_fixtures() -> Vec<(ImagePlane, ImagePlane, usize)> {
    let base = texture(32, 32, 1);
    let mut r = rng(99);
    let noisy = ImagePlane::from_fn(32, 32, |y, x| (base.get(y, x) + r.random_range(-0.05..0.05)).clamp(0.0, 1.0));
    let blurred = srres::data::degrade(&base, 2).unwrap();
    let brighter = ImagePlane::from_fn(32, 32, |y, x| (base.get(y, x) + 0.04).min(1.0));
    let inverted = ImagePlane::from_fn(32, 32, |y, x| 1.0 - base.get(y, x));
    let other = scene(32, 32, 4);
    vec![(base.clone(), noisy, 0), (base.clone(), blurred, 2), (base.clone(), brighter, 3), (base.clone(), inverted, 1), (base, other, 4)]
}

/// Metric formulas evaluated literally, one window at a time.
pub mod metric_oracle {
    use srres::data::ImagePlane;

    fn level(v: f32) -> f64 {
        let t = (v as f64).clamp(0.0, 1.0) * 255.0;
        // round half away from zero, spelled out
        let f = t.floor();
        if t - f >= 0.5 {
            f + 1.0
        } else {
            f
        }
    }

    fn grid(img: &ImagePlane, shave: usize) -> Vec<Vec<f64>> {
        (shave..img.height() - shave)
            .map(|y| (shave..img.width() - shave).map(|x| level(img.get(y, x))).collect())
            .collect()
    }

    pub fn psnr(a: &ImagePlane, b: &ImagePlane, shave: usize) -> f64 {
        let (ga, gb) = (grid(a, shave), grid(b, shave));
        let mut sse = 0.0;
        let mut n = 0.0;
        for (ra, rb) in ga.iter().zip(&gb) {
            for (x, y) in ra.iter().zip(rb) {
                sse += (x - y) * (x - y);
                n += 1.0;
            }
        }
        if sse == 0.0 {
            return 100.0;
        }
        20.0 * 255.0f64.log10() - 10.0 * (sse / n).log10()
    }

    pub fn ssim(a: &ImagePlane, b: &ImagePlane, shave: usize) -> f64 {
        let (ga, gb) = (grid(a, shave), grid(b, shave));
        let (h, w) = (ga.len(), ga[0].len());
        let k = 11;
        let sigma = 1.5f64;
        let mut win = vec![vec![0.0; k]; k];
        let mut total = 0.0;
        for (i, row) in win.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                let (di, dj) = (i as f64 - 5.0, j as f64 - 5.0);
                *v = (-(di * di + dj * dj) / (2.0 * sigma * sigma)).exp();
                total += *v;
            }
        }
        let (c1, c2) = ((0.01f64 * 255.0).powi(2), (0.03f64 * 255.0).powi(2));
        let mut acc = 0.0;
        let mut count = 0.0;
        for y in 0..=h - k {
            for x in 0..=w - k {
                let weighted = |f: &dyn Fn(usize, usize) -> f64| {
                    let mut s = 0.0;
                    for (i, row) in win.iter().enumerate() {
                        for (j, wv) in row.iter().enumerate() {
                            s += wv / total * f(y + i, x + j);
                        }
                    }
                    s
                };
                let ma = weighted(&|p, q| ga[p][q]);
                let mb = weighted(&|p, q| gb[p][q]);
                let va = weighted(&|p, q| (ga[p][q] - ma).powi(2));
                let vb = weighted(&|p, q| (gb[p][q] - mb).powi(2));
                let cov = weighted(&|p, q| (ga[p][q] - ma) * (gb[p][q] - mb));
                acc += (2.0 * ma * mb + c1) * (2.0 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
                count += 1.0;
            }
        }
        acc / count
    }
}

/// Parameter count from an explicit list of every layer the blueprint
/// implies, each conv written as `(in, out, kernel)`.
pub fn enumerated_parameters(spec: &ArchSpec) -> usize {
    let mut convs: Vec<(usize, usize, usize)> = Vec::new();
    let mut bn_channels: Vec<usize> = Vec::new();
    let first = spec.containers[0].filters;
    let mut width = 1;
    for _ in 0..spec.feature_convs {
        convs.push((width, first, 3));
        width = first;
    }
    for c in &spec.containers {
        for _ in 0..c.units {
            let mut w = width;
            for j in 0..spec.convs_per_unit {
                if spec.use_bn {
                    let before = spec.relu_position == ReluPosition::BeforeConv;
                    bn_channels.push(if before && j == 0 { width } else { c.filters });
                }
                convs.push((w, c.filters, 3));
                w = c.filters;
            }
            if width != c.filters {
                convs.push((width, c.filters, spec.projection_kernel));
            }
            width = c.filters;
        }
    }
    for i in 0..spec.reconstruction_convs {
        let out = if i + 1 == spec.reconstruction_convs { 1 } else { width };
        convs.push((width, out, 3));
        width = out;
    }
    convs.iter().map(|&(i, o, k)| i * o * k * k + o).sum::<usize>() + 2 * bn_channels.iter().sum::<usize>()
}

/// Path-depth histogram found by recursively choosing shortcut or branch at
/// every unit.
pub fn brute_force_paths(units: usize) -> std::collections::BTreeMap<usize, u128> {
    fn walk(left: usize, depth: usize, hist: &mut std::collections::BTreeMap<usize, u128>) {
        if left == 0 {
            *hist.entry(depth).or_insert(0) += 1;
            return;
        }
        walk(left - 1, depth, hist);
        walk(left - 1, depth + 1, hist);
    }
    let mut hist = std::collections::BTreeMap::new();
    walk(units, 0, &mut hist);
    hist
}

/// Fraction of all `2^U` paths that take a branch of at least one unit in
/// container `index`, found by listing every path.
pub fn brute_force_impact(spec: &ArchSpec, index: usize) -> f64 {
    let units: Vec<usize> = spec
        .containers
        .iter()
        .enumerate()
        .flat_map(|(i, c)| std::iter::repeat_n(i, c.units))
        .collect();
    let total = 1u64 << units.len();
    let hit = (0..total)
        .filter(|mask| units.iter().enumerate().any(|(b, &c)| c == index && mask >> b & 1 == 1))
        .count();
    hit as f64 / total as f64
}
