//! Central finite differences against every hand-written backward pass.
//! Each check appends `(label, relative error)`.

use rand::Rng;
use srres::arch::{parse_arch, Network};
use srres::optim as loss;
use srres::tensor::*;

use super::{away_from_zero, numeric_gradient, oracle, random_tensor, relative_error, rng};

pub const TOL: f64 = 1e-3;

pub const NETWORKS: [&str; 6] = ["4_1", "4_1;relu=after", "4_1;bn=1", "4_1;relu=after;bn=1", "2_1,4_1", "2_1,3_1;proj=3;convs=3"];

fn record(out: &mut Vec<(String, f64)>, label: &str, analytic: &[f32], numeric: &[f64]) {
    let a: Vec<f64> = analytic.iter().map(|&v| v as f64).collect();
    out.push((label.to_string(), relative_error(&a, numeric)));
}

/// Every check in the suite.
pub fn all() -> Vec<(String, f64)> {
    let mut out = Vec::new();
    conv(&mut out);
    relu(&mut out);
    add(&mut out);
    batch_norm(&mut out);
    residual_loss(&mut out);
    for (i, arch) in NETWORKS.iter().enumerate() {
        network(&mut out, arch, i as u64 + 1);
    }
    out
}

fn conv_params(rng: &mut rand_chacha::ChaCha8Rng, in_c: usize, out_c: usize, k: usize) -> ConvParams {
    let mut p = ConvParams::zeros("conv", in_c, out_c, k);
    for w in p.weight.data_mut() {
        *w = rng.random_range(-0.5..0.5);
    }
    for b in &mut p.bias {
        *b = rng.random_range(-0.5..0.5);
    }
    p
}

pub fn conv(out: &mut Vec<(String, f64)>) {
    let mut r = rng(11);
    for (k, in_c, out_c) in [(3, 3, 4), (1, 4, 2), (3, 1, 1)] {
        let x = random_tensor(&mut r, Dims::new(2, in_c, 5, 5), -1.0, 1.0);
        let mut p = conv_params(&mut r, in_c, out_c, k);
        let w = random_tensor(&mut r, Dims::new(2, out_c, 5, 5), -1.0, 1.0);
        let g = conv2d_backward(&x, &p, &w).unwrap();

        let mut xs = x.data().to_vec();
        let num = numeric_gradient(&mut xs, 1e-2, |v| {
            let t = Tensor::from_vec(x.dims(), v.to_vec()).unwrap();
            conv2d_forward(&t, &p).unwrap().dot(&w)
        });
        record(out, "conv input", g.input.data(), &num);

        let mut ws = p.weight.data().to_vec();
        let q = p.clone();
        let num = numeric_gradient(&mut ws, 1e-2, |v| {
            let mut q = q.clone();
            q.weight.data_mut().copy_from_slice(v);
            conv2d_forward(&x, &q).unwrap().dot(&w)
        });
        record(out, "conv weight", g.weight.data(), &num);

        let mut bs = p.bias.clone();
        let num = numeric_gradient(&mut bs, 1e-2, |v| {
            p.bias.copy_from_slice(v);
            conv2d_forward(&x, &p).unwrap().dot(&w)
        });
        record(out, "conv bias", &g.bias, &num);
    }
}

pub fn relu(out: &mut Vec<(String, f64)>) {
    let mut r = rng(12);
    let d = Dims::new(2, 4, 5, 5);
    let x = away_from_zero(&mut r, d, 0.05);
    let w = random_tensor(&mut r, d, -1.0, 1.0);
    let g = relu_backward(&x, &w).unwrap();
    let mut xs = x.data().to_vec();
    let num = numeric_gradient(&mut xs, 1e-3, |v| {
        relu_forward(&Tensor::from_vec(d, v.to_vec()).unwrap()).dot(&w)
    });
    record(out, "relu", g.data(), &num);
}

pub fn add(out: &mut Vec<(String, f64)>) {
    let mut r = rng(13);
    let d = Dims::new(2, 3, 4, 5);
    let a = random_tensor(&mut r, d, -1.0, 1.0);
    let b = random_tensor(&mut r, d, -1.0, 1.0);
    let w = random_tensor(&mut r, d, -1.0, 1.0);
    let (ga, gb) = add_backward(&w);
    let mut xs = a.data().to_vec();
    let num = numeric_gradient(&mut xs, 1e-2, |v| {
        add_forward(&Tensor::from_vec(d, v.to_vec()).unwrap(), &b).unwrap().dot(&w)
    });
    record(out, "add lhs", ga.data(), &num);
    let mut xs = b.data().to_vec();
    let num = numeric_gradient(&mut xs, 1e-2, |v| {
        add_forward(&a, &Tensor::from_vec(d, v.to_vec()).unwrap()).unwrap().dot(&w)
    });
    record(out, "add rhs", gb.data(), &num);
}

pub fn batch_norm(out: &mut Vec<(String, f64)>) {
    let mut r = rng(14);
    let d = Dims::new(2, 3, 4, 4);
    let x = random_tensor(&mut r, d, -1.0, 1.0);
    let w = random_tensor(&mut r, d, -1.0, 1.0);
    let mut bn = BnParams::new("bn", 3);
    for c in 0..3 {
        bn.gamma[c] = r.random_range(0.5..1.5);
        bn.beta[c] = r.random_range(-0.5..0.5);
    }
    let (_, cache) = bn_forward(&x, &mut bn.clone(), Mode::Train).unwrap();
    let g = bn_backward(&cache, &bn, &w).unwrap();

    let mut xs = x.data().to_vec();
    let num = numeric_gradient(&mut xs, 1e-2, |v| {
        let t = Tensor::from_vec(d, v.to_vec()).unwrap();
        bn_forward(&t, &mut bn.clone(), Mode::Train).unwrap().0.dot(&w)
    });
    record(out, "bn input", g.input.data(), &num);

    let mut gs = bn.gamma.clone();
    let num = numeric_gradient(&mut gs, 1e-2, |v| {
        let mut b = bn.clone();
        b.gamma.copy_from_slice(v);
        bn_forward(&x, &mut b, Mode::Train).unwrap().0.dot(&w)
    });
    record(out, "bn gamma", &g.gamma, &num);

    let mut bs = bn.beta.clone();
    let num = numeric_gradient(&mut bs, 1e-2, |v| {
        let mut b = bn.clone();
        b.beta.copy_from_slice(v);
        bn_forward(&x, &mut b, Mode::Train).unwrap().0.dot(&w)
    });
    record(out, "bn beta", &g.beta, &num);

    // Eval mode is an affine map of the input.
    let mut tracked = bn.clone();
    bn_forward(&x, &mut tracked, Mode::Train).unwrap();
    let (_, cache) = bn_forward(&x, &mut tracked.clone(), Mode::Eval).unwrap();
    let g = bn_backward(&cache, &tracked, &w).unwrap();
    let mut xs = x.data().to_vec();
    let num = numeric_gradient(&mut xs, 1e-2, |v| {
        let t = Tensor::from_vec(d, v.to_vec()).unwrap();
        bn_forward(&t, &mut tracked.clone(), Mode::Eval).unwrap().0.dot(&w)
    });
    record(out, "bn eval input", g.input.data(), &num);
}

pub fn residual_loss(out: &mut Vec<(String, f64)>) {
    let mut r = rng(15);
    let d = Dims::new(2, 1, 5, 5);
    let pred = random_tensor(&mut r, d, -0.5, 0.5);
    let lr = random_tensor(&mut r, d, 0.0, 1.0);
    let hr = random_tensor(&mut r, d, 0.0, 1.0);
    let (_, g) = loss::residual_loss(&pred, &lr, &hr).unwrap();
    let mut xs = pred.data().to_vec();
    let num = numeric_gradient(&mut xs, 1e-2, |v| {
        loss::residual_loss(&Tensor::from_vec(d, v.to_vec()).unwrap(), &lr, &hr).unwrap().0
    });
    record(out, "residual loss", g.data(), &num);
}

/// Network gradients against central differences of the f64 oracle, where
/// a step of 1e-6 is far below any ReLU kink spacing and rounding noise.
pub fn network(out: &mut Vec<(String, f64)>, arch: &str, seed: u64) {
    let spec = parse_arch(arch).unwrap();
    let mut net = Network::build(&spec, seed).unwrap();
    let mut r = rng(seed + 100);
    // Random biases so every ReLU sees a mix of signs.
    for p in net.params_mut() {
        if p.name.ends_with("bias") || p.name.ends_with("beta") {
            for v in p.data.iter_mut() {
                *v = r.random_range(-0.2..0.2);
            }
        }
    }
    let d = Dims::new(2, 1, 5, 5);
    let x = random_tensor(&mut r, d, 0.0, 1.0);
    let w = random_tensor(&mut r, d, -1.0, 1.0);
    let (_, cache) = net.forward(&x, Mode::Train).unwrap();
    let back = net.backward(&cache, &w).unwrap();

    let wv: Vec<f64> = w.data().iter().map(|&v| v as f64).collect();
    let dot = |a: &oracle::Act| a.v.iter().zip(&wv).map(|(a, b)| a * b).sum::<f64>();
    let base = oracle::Net::from_network(&net);
    let x0 = oracle::Act::from_tensor(&x);
    let h = 1e-6;

    let num: Vec<f64> = (0..x0.v.len())
        .map(|i| {
            let mut up = x0.clone();
            up.v[i] += h;
            let mut down = x0.clone();
            down.v[i] -= h;
            (dot(&base.output(&up)) - dot(&base.output(&down))) / (2.0 * h)
        })
        .collect();
    record(out, &format!("{arch} input"), back.input.data(), &num);

    let sizes: Vec<usize> = base.clone().params_mut().iter().map(|p| p.len()).collect();
    let names: Vec<String> = net.params_mut().into_iter().map(|p| p.name).collect();
    assert_eq!(sizes.len(), names.len());
    for (idx, name) in names.iter().enumerate() {
        let num: Vec<f64> = (0..sizes[idx])
            .map(|i| {
                let mut up = base.clone();
                up.params_mut()[idx][i] += h;
                let mut down = base.clone();
                down.params_mut()[idx][i] -= h;
                (dot(&up.output(&x0)) - dot(&down.output(&x0))) / (2.0 * h)
            })
            .collect();
        assert_eq!(&back.params.entries[idx].name, name);
        record(out, &format!("{arch} {name}"), &back.params.entries[idx].data, &num);
    }
}

