use std::sync::atomic::{AtomicU64, Ordering};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::spec::{ArchSpec, ReluPosition};
use crate::error::{Error, Result};
use crate::tensor::{
    add_forward, bn_backward, bn_forward, conv2d_backward, conv2d_forward, relu_backward,
    relu_forward, BnCache, BnParams, ConvParams, Dims, Mode, Tensor,
};

static NEXT_NETWORK_ID: AtomicU64 = AtomicU64::new(1);

fn next_id() -> u64 {
    NEXT_NETWORK_ID.fetch_add(1, Ordering::Relaxed)
}

/// One residual unit: `shortcut(x) + f(x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualUnit {
    pub convs: Vec<ConvParams>,
    /// One per convolution when batch normalization is enabled, else empty.
    pub bns: Vec<BnParams>,
    /// Projection used where the unit changes the channel count; identity otherwise.
    pub shortcut: Option<ConvParams>,
}

impl ResidualUnit {
    pub fn in_channels(&self) -> usize {
        self.convs[0].in_channels()
    }

    pub fn out_channels(&self) -> usize {
        self.convs[self.convs.len() - 1].out_channels()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamKind {
    Weight,
    Bias,
    BnGamma,
    BnBeta,
}

impl ParamKind {
    /// Weight decay applies to convolution weights only.
    pub fn decays(self) -> bool {
        self == ParamKind::Weight
    }
}

/// Mutable access to one learnable tensor.
#[derive(Debug)]
pub struct ParamMut<'a> {
    pub name: String,
    pub kind: ParamKind,
    pub shape: Vec<usize>,
    pub data: &'a mut [f32],
}

/// Read-only view of a named tensor (learnable or running statistic).
#[derive(Clone, Debug, PartialEq)]
pub struct NamedTensor<'a> {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: &'a [f32],
}

/// Gradient tensors in parameter order.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub entries: Vec<GradEntry>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

impl Gradients {
    pub fn get(&self, name: &str) -> Option<&[f32]> {
        self.entries
            .iter()
            .find(|e| e.name == name)
            .map(|e| e.data.as_slice())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &GradEntry> {
        self.entries.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut GradEntry> {
        self.entries.iter_mut()
    }

    pub fn max_abs(&self) -> f32 {
        self.entries
            .iter()
            .flat_map(|e| e.data.iter())
            .fold(0.0f32, |m, v| m.max(v.abs()))
    }
}

#[derive(Clone, Debug)]
enum OpCache {
    Conv(Tensor),
    Relu(Tensor),
    Bn(BnCache),
}

#[derive(Clone, Debug)]
struct UnitCache {
    input: Tensor,
    ops: Vec<OpCache>,
}

/// Intermediate activations recorded by [`Network::forward`].
#[derive(Clone, Debug)]
pub struct ForwardCache {
    network_id: u64,
    generation: u64,
    mode: Mode,
    input_dims: Dims,
    head: Vec<(Tensor, Tensor)>,
    units: Vec<UnitCache>,
    tail: Vec<Tensor>,
    residual: Tensor,
}

impl ForwardCache {
    /// Network output before the global skip adds the input back.
    pub fn residual(&self) -> &Tensor {
        &self.residual
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }
}

/// Result of [`Network::backward`].
#[derive(Clone, Debug)]
pub struct Backward {
    pub params: Gradients,
    pub input: Tensor,
}

/// Feature-representation head, residual body and reconstruction tail,
/// wrapped by one global skip from the input to the output.
#[derive(Debug, PartialEq)]
pub struct Network {
    arch: ArchSpec,
    head: Vec<ConvParams>,
    units: Vec<ResidualUnit>,
    tail: Vec<ConvParams>,
    id: u64,
    generation: u64,
}

impl Clone for Network {
    fn clone(&self) -> Self {
        Network {
            arch: self.arch.clone(),
            head: self.head.clone(),
            units: self.units.clone(),
            tail: self.tail.clone(),
            id: next_id(),
            generation: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum BranchOp {
    Conv(usize),
    Relu,
    Bn(usize),
}

fn branch_ops(arch: &ArchSpec, convs: usize) -> Vec<BranchOp> {
    let mut ops = Vec::new();
    for j in 0..convs {
        match arch.relu_position {
            ReluPosition::BeforeConv => {
                if arch.use_bn {
                    ops.push(BranchOp::Bn(j));
                }
                ops.push(BranchOp::Relu);
                ops.push(BranchOp::Conv(j));
            }
            ReluPosition::AfterConv => {
                ops.push(BranchOp::Conv(j));
                if arch.use_bn {
                    ops.push(BranchOp::Bn(j));
                }
                ops.push(BranchOp::Relu);
            }
        }
    }
    ops
}

impl Network {
    /// All-zero network for `arch`; call [`Network::build`] for initialized weights.
    pub fn zeros(arch: &ArchSpec) -> Result<Network> {
        arch.validate()?;
        let first = arch.first_width();
        let last = arch.last_width();
        let head = (0..arch.feature_convs)
            .map(|i| ConvParams::zeros(format!("head.{i}"), if i == 0 { 1 } else { first }, first, 3))
            .collect();
        let mut units = Vec::with_capacity(arch.total_units());
        let mut width = first;
        for (ci, container) in arch.containers.iter().enumerate() {
            for ui in 0..container.units {
                let prefix = format!("body.{ci}.{ui}");
                let n = container.filters;
                let convs = (0..arch.convs_per_unit)
                    .map(|j| ConvParams::zeros(format!("{prefix}.conv{j}"), if j == 0 { width } else { n }, n, 3))
                    .collect();
                let bns = if arch.use_bn {
                    (0..arch.convs_per_unit)
                        .map(|j| {
                            let channels = match arch.relu_position {
                                ReluPosition::BeforeConv if j == 0 => width,
                                _ => n,
                            };
                            BnParams::new(format!("{prefix}.bn{j}"), channels)
                        })
                        .collect()
                } else {
                    Vec::new()
                };
                let shortcut = (width != n)
                    .then(|| ConvParams::zeros(format!("{prefix}.proj"), width, n, arch.projection_kernel));
                units.push(ResidualUnit { convs, bns, shortcut });
                width = n;
            }
        }
        let tail = (0..arch.reconstruction_convs)
            .map(|i| {
                let out = if i + 1 == arch.reconstruction_convs { 1 } else { last };
                ConvParams::zeros(format!("tail.{i}"), last, out, 3)
            })
            .collect();
        Ok(Network {
            arch: arch.clone(),
            head,
            units,
            tail,
            id: next_id(),
            generation: 0,
        })
    }

    /// He-initialized network: Gaussian weights with variance `2 / (k·k·in_c)`,
    /// zero biases, deterministic in `seed`.
    pub fn build(arch: &ArchSpec, seed: u64) -> Result<Network> {
        let mut net = Network::zeros(arch)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let init = |conv: &mut ConvParams, rng: &mut ChaCha8Rng| {
            let d = conv.weight.dims();
            let std = (2.0 / (d.h * d.w * d.c) as f64).sqrt();
            let normal = Normal::new(0.0, std).expect("positive std");
            for w in conv.weight.data_mut() {
                *w = normal.sample(rng) as f32;
            }
        };
        for conv in net.convs_mut() {
            init(conv, &mut rng);
        }
        Ok(net)
    }

    pub fn arch(&self) -> &ArchSpec {
        &self.arch
    }

    pub fn head(&self) -> &[ConvParams] {
        &self.head
    }

    pub fn units(&self) -> &[ResidualUnit] {
        &self.units
    }

    pub fn tail(&self) -> &[ConvParams] {
        &self.tail
    }

    fn convs_mut(&mut self) -> impl Iterator<Item = &mut ConvParams> {
        self.head
            .iter_mut()
            .chain(self.units.iter_mut().flat_map(|u| u.convs.iter_mut().chain(u.shortcut.iter_mut())))
            .chain(self.tail.iter_mut())
    }

    /// Every learnable tensor, in checkpoint order.
    pub fn params_mut(&mut self) -> Vec<ParamMut<'_>> {
        self.generation += 1;
        let mut out = Vec::new();
        fn conv<'a>(out: &mut Vec<ParamMut<'a>>, c: &'a mut ConvParams) {
            let shape = c.weight.dims().to_array().to_vec();
            out.push(ParamMut {
                name: format!("{}.weight", c.name),
                kind: ParamKind::Weight,
                shape,
                data: c.weight.data_mut(),
            });
            out.push(ParamMut {
                name: format!("{}.bias", c.name),
                kind: ParamKind::Bias,
                shape: vec![c.bias.len()],
                data: &mut c.bias,
            });
        }
        for c in &mut self.head {
            conv(&mut out, c);
        }
        for unit in &mut self.units {
            for c in &mut unit.convs {
                conv(&mut out, c);
            }
            for bn in &mut unit.bns {
                out.push(ParamMut {
                    name: format!("{}.gamma", bn.name),
                    kind: ParamKind::BnGamma,
                    shape: vec![bn.gamma.len()],
                    data: &mut bn.gamma,
                });
                out.push(ParamMut {
                    name: format!("{}.beta", bn.name),
                    kind: ParamKind::BnBeta,
                    shape: vec![bn.beta.len()],
                    data: &mut bn.beta,
                });
            }
            if let Some(c) = &mut unit.shortcut {
                conv(&mut out, c);
            }
        }
        for c in &mut self.tail {
            conv(&mut out, c);
        }
        out
    }

    /// Every stored tensor in checkpoint order: learnable parameters, with
    /// each batch-norm layer's running statistics right after its `beta`.
    pub fn named_tensors(&self) -> Vec<NamedTensor<'_>> {
        let mut out = Vec::new();
        fn conv<'a>(out: &mut Vec<NamedTensor<'a>>, c: &'a ConvParams) {
            out.push(NamedTensor {
                name: format!("{}.weight", c.name),
                shape: c.weight.dims().to_array().to_vec(),
                data: c.weight.data(),
            });
            out.push(NamedTensor {
                name: format!("{}.bias", c.name),
                shape: vec![c.bias.len()],
                data: &c.bias,
            });
        }
        fn vec(name: String, data: &[f32]) -> NamedTensor<'_> {
            NamedTensor {
                name,
                shape: vec![data.len()],
                data,
            }
        }
        for c in &self.head {
            conv(&mut out, c);
        }
        for unit in &self.units {
            for c in &unit.convs {
                conv(&mut out, c);
            }
            for bn in &unit.bns {
                out.push(vec(format!("{}.gamma", bn.name), &bn.gamma));
                out.push(vec(format!("{}.beta", bn.name), &bn.beta));
                out.push(vec(format!("{}.running_mean", bn.name), &bn.running_mean));
                out.push(vec(format!("{}.running_var", bn.name), &bn.running_var));
            }
            if let Some(c) = &unit.shortcut {
                conv(&mut out, c);
            }
        }
        for c in &self.tail {
            conv(&mut out, c);
        }
        out
    }

    /// Overwrite the tensor called `name`; used when restoring checkpoints.
    pub(crate) fn load_tensor(&mut self, name: &str, data: &[f32]) -> Result<()> {
        let (prefix, field) = name
            .rsplit_once('.')
            .ok_or_else(|| Error::Usage(format!("bad tensor name {name}")))?;
        let fill = |dst: &mut [f32]| -> Result<()> {
            if dst.len() != data.len() {
                return Err(Error::Usage(format!("{name}: expected {} values, got {}", dst.len(), data.len())));
            }
            dst.copy_from_slice(data);
            Ok(())
        };
        self.generation += 1;
        let convs = self
            .head
            .iter_mut()
            .chain(self.units.iter_mut().flat_map(|u| u.convs.iter_mut().chain(u.shortcut.iter_mut())))
            .chain(self.tail.iter_mut());
        for c in convs {
            if c.name == prefix {
                return match field {
                    "weight" => fill(c.weight.data_mut()),
                    "bias" => fill(&mut c.bias),
                    _ => Err(Error::Usage(format!("unknown tensor {name}"))),
                };
            }
        }
        for bn in self.units.iter_mut().flat_map(|u| u.bns.iter_mut()) {
            if bn.name == prefix {
                return match field {
                    "gamma" => fill(&mut bn.gamma),
                    "beta" => fill(&mut bn.beta),
                    "running_mean" => fill(&mut bn.running_mean),
                    "running_var" => {
                        fill(&mut bn.running_var)?;
                        bn.tracked = true;
                        Ok(())
                    }
                    _ => Err(Error::Usage(format!("unknown tensor {name}"))),
                };
            }
        }
        Err(Error::Usage(format!("unknown tensor {name}")))
    }

    /// Total weight and bias elements, found by walking the built layers.
    pub fn parameter_count(&self) -> usize {
        let convs = self
            .head
            .iter()
            .chain(self.units.iter().flat_map(|u| u.convs.iter().chain(u.shortcut.iter())))
            .chain(self.tail.iter());
        let bn: usize = self
            .units
            .iter()
            .flat_map(|u| u.bns.iter())
            .map(|b| b.gamma.len() + b.beta.len())
            .sum();
        convs.map(ConvParams::parameter_count).sum::<usize>() + bn
    }

    pub fn zero_parameters(&mut self) {
        for p in self.params_mut() {
            p.data.fill(0.0);
        }
    }

    fn check_input(&self, input: &Tensor) -> Result<()> {
        if input.dims().c != 1 {
            return Err(Error::config(
                "input",
                format!("network takes one luminance channel, got {}", input.dims().c),
            ));
        }
        Ok(())
    }

    /// Run the network; `output = input + residual`. Training mode uses batch
    /// statistics and advances running statistics.
    pub fn forward(&mut self, input: &Tensor, mode: Mode) -> Result<(Tensor, ForwardCache)> {
        self.check_input(input)?;
        let mut x = input.clone();
        let mut head = Vec::with_capacity(self.head.len());
        for conv in &self.head {
            let pre = conv2d_forward(&x, conv)?;
            let post = relu_forward(&pre);
            head.push((x, pre));
            x = post;
        }
        let arch = self.arch.clone();
        let mut units = Vec::with_capacity(self.units.len());
        for unit in &mut self.units {
            let ops = branch_ops(&arch, unit.convs.len());
            let unit_input = x;
            let mut y = unit_input.clone();
            let mut cache = Vec::with_capacity(ops.len());
            for op in ops {
                y = match op {
                    BranchOp::Conv(j) => {
                        let out = conv2d_forward(&y, &unit.convs[j])?;
                        cache.push(OpCache::Conv(y));
                        out
                    }
                    BranchOp::Relu => {
                        let out = relu_forward(&y);
                        cache.push(OpCache::Relu(y));
                        out
                    }
                    BranchOp::Bn(j) => {
                        let (out, c) = bn_forward(&y, &mut unit.bns[j], mode)?;
                        cache.push(OpCache::Bn(c));
                        out
                    }
                };
            }
            let skip = match &unit.shortcut {
                Some(proj) => conv2d_forward(&unit_input, proj)?,
                None => unit_input.clone(),
            };
            x = add_forward(&skip, &y)?;
            units.push(UnitCache {
                input: unit_input,
                ops: cache,
            });
        }
        let mut tail = Vec::with_capacity(self.tail.len());
        for conv in &self.tail {
            let out = conv2d_forward(&x, conv)?;
            tail.push(x);
            x = out;
        }
        let output = add_forward(input, &x)?;
        Ok((
            output,
            ForwardCache {
                network_id: self.id,
                generation: self.generation,
                mode,
                input_dims: input.dims(),
                head,
                units,
                tail,
                residual: x,
            },
        ))
    }

    /// Evaluation-mode forward pass that keeps no intermediate activations.
    pub fn infer(&self, input: &Tensor) -> Result<Tensor> {
        self.infer_residual(input).and_then(|r| add_forward(input, &r))
    }

    /// Evaluation-mode output before the global skip.
    pub fn infer_residual(&self, input: &Tensor) -> Result<Tensor> {
        self.check_input(input)?;
        let mut x = input.clone();
        for conv in &self.head {
            x = relu_forward(&conv2d_forward(&x, conv)?);
        }
        for unit in &self.units {
            let mut y = x.clone();
            for op in branch_ops(&self.arch, unit.convs.len()) {
                y = match op {
                    BranchOp::Conv(j) => conv2d_forward(&y, &unit.convs[j])?,
                    BranchOp::Relu => relu_forward(&y),
                    BranchOp::Bn(j) => {
                        let mut bn = unit.bns[j].clone();
                        bn_forward(&y, &mut bn, Mode::Eval)?.0
                    }
                };
            }
            let skip = match &unit.shortcut {
                Some(proj) => conv2d_forward(&x, proj)?,
                None => x,
            };
            x = add_forward(&skip, &y)?;
        }
        for conv in &self.tail {
            x = conv2d_forward(&x, conv)?;
        }
        Ok(x)
    }

    /// Gradients of `⟨grad_out, output⟩` for every parameter and for the input.
    ///
    /// Because `output = input + residual`, `grad_out` is also the gradient
    /// with respect to the residual, so this serves the direct-prediction
    /// objective unchanged.
    pub fn backward(&self, cache: &ForwardCache, grad_out: &Tensor) -> Result<Backward> {
        if cache.network_id != self.id || cache.generation != self.generation {
            return Err(Error::Usage(
                "forward cache is stale or belongs to another network".into(),
            ));
        }
        if cache.mode != Mode::Train {
            return Err(Error::Usage("backward needs a training-mode forward cache".into()));
        }
        if grad_out.dims() != cache.input_dims {
            return Err(Error::Usage(format!(
                "gradient dims {} do not match output dims {}",
                grad_out.dims(),
                cache.input_dims
            )));
        }

        // Collected in reverse parameter order, flipped at the end.
        let mut rev: Vec<GradEntry> = Vec::new();
        let push_conv = |rev: &mut Vec<GradEntry>, conv: &ConvParams, w: Tensor, b: Vec<f32>| {
            rev.push(GradEntry {
                name: format!("{}.bias", conv.name),
                shape: vec![b.len()],
                data: b,
            });
            rev.push(GradEntry {
                name: format!("{}.weight", conv.name),
                shape: conv.weight.dims().to_array().to_vec(),
                data: w.into_vec(),
            });
        };

        let mut g = grad_out.clone();
        for (conv, input) in self.tail.iter().zip(&cache.tail).rev() {
            let grads = conv2d_backward(input, conv, &g)?;
            push_conv(&mut rev, conv, grads.weight, grads.bias);
            g = grads.input;
        }

        for (unit, uc) in self.units.iter().zip(&cache.units).rev() {
            let mut branch_grads: Vec<Option<(Tensor, Vec<f32>)>> = vec![None; unit.convs.len()];
            let mut bn_grads: Vec<Option<(Vec<f32>, Vec<f32>)>> = vec![None; unit.bns.len()];
            let ops = branch_ops(&self.arch, unit.convs.len());
            let mut gb = g.clone();
            for (op, oc) in ops.iter().zip(&uc.ops).rev() {
                gb = match (op, oc) {
                    (BranchOp::Conv(j), OpCache::Conv(input)) => {
                        let grads = conv2d_backward(input, &unit.convs[*j], &gb)?;
                        branch_grads[*j] = Some((grads.weight, grads.bias));
                        grads.input
                    }
                    (BranchOp::Relu, OpCache::Relu(input)) => relu_backward(input, &gb)?,
                    (BranchOp::Bn(j), OpCache::Bn(c)) => {
                        let grads = bn_backward(c, &unit.bns[*j], &gb)?;
                        bn_grads[*j] = Some((grads.gamma, grads.beta));
                        grads.input
                    }
                    _ => unreachable!("cache layout follows branch_ops"),
                };
            }
            let g_skip = match &unit.shortcut {
                Some(proj) => {
                    let grads = conv2d_backward(&uc.input, proj, &g)?;
                    push_conv(&mut rev, proj, grads.weight, grads.bias);
                    grads.input
                }
                None => g,
            };
            for (bn, grads) in unit.bns.iter().zip(bn_grads).rev() {
                let (gamma, beta) = grads.expect("every bn layer visited");
                rev.push(GradEntry {
                    name: format!("{}.beta", bn.name),
                    shape: vec![beta.len()],
                    data: beta,
                });
                rev.push(GradEntry {
                    name: format!("{}.gamma", bn.name),
                    shape: vec![gamma.len()],
                    data: gamma,
                });
            }
            for (conv, grads) in unit.convs.iter().zip(branch_grads).rev() {
                let (w, b) = grads.expect("every conv visited");
                push_conv(&mut rev, conv, w, b);
            }
            g = add_forward(&g_skip, &gb)?;
        }

        for (conv, (input, pre)) in self.head.iter().zip(&cache.head).rev() {
            let g_pre = relu_backward(pre, &g)?;
            let grads = conv2d_backward(input, conv, &g_pre)?;
            push_conv(&mut rev, conv, grads.weight, grads.bias);
            g = grads.input;
        }
        rev.reverse();
        Ok(Backward {
            params: Gradients { entries: rev },
            input: add_forward(&g, grad_out)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::parse_arch;

    fn input(n: usize, hw: usize) -> Tensor {
        Tensor::from_fn(Dims::new(n, 1, hw, hw), |n, _, y, x| {
            (((n * 13 + y * 7 + x * 3) % 17) as f32) / 16.0
        })
    }

    #[test]
    fn zero_network_is_identity() {
        let mut net = Network::zeros(&parse_arch("4_2,8_1").unwrap()).unwrap();
        let x = input(2, 6);
        let (y, _) = net.forward(&x, Mode::Train).unwrap();
        assert_eq!(y, x);
        assert_eq!(net.infer(&x).unwrap(), x);
    }

    #[test]
    fn zero_gradient_and_identity_input_gradient() {
        let mut net = Network::zeros(&parse_arch("3_1,5_1").unwrap()).unwrap();
        let x = input(1, 5);
        let (_, cache) = net.forward(&x, Mode::Train).unwrap();
        let g = Tensor::from_fn(x.dims(), |_, _, y, x| (y as f32 - x as f32) * 0.1);
        let back = net.backward(&cache, &g).unwrap();
        assert_eq!(back.input, g);

        let mut net = Network::build(&parse_arch("3_1,5_1").unwrap(), 3).unwrap();
        let (_, cache) = net.forward(&x, Mode::Train).unwrap();
        let back = net.backward(&cache, &Tensor::zeros(x.dims())).unwrap();
        assert!(back.params.iter().all(|e| e.data.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn every_parameter_gets_a_gradient_in_order() {
        let arch = parse_arch("3_1,5_2;bn=1").unwrap();
        let mut net = Network::build(&arch, 1).unwrap();
        let x = input(2, 4);
        let (_, cache) = net.forward(&x, Mode::Train).unwrap();
        let back = net.backward(&cache, &Tensor::full(x.dims(), 1.0)).unwrap();
        let names: Vec<_> = net.params_mut().into_iter().map(|p| (p.name, p.shape)).collect();
        let got: Vec<_> = back.params.iter().map(|e| (e.name.clone(), e.shape.clone())).collect();
        assert_eq!(names, got);
    }

    #[test]
    fn stale_cache_is_rejected() {
        let arch = parse_arch("2_1").unwrap();
        let mut net = Network::build(&arch, 1).unwrap();
        let x = input(1, 4);
        let (_, cache) = net.forward(&x, Mode::Train).unwrap();
        net.params_mut()[0].data[0] += 1.0;
        assert!(matches!(net.backward(&cache, &x), Err(Error::Usage(_))));

        let other = net.clone();
        let (_, cache) = net.forward(&x, Mode::Train).unwrap();
        assert!(other.backward(&cache, &x).is_err());

        let (_, eval_cache) = net.forward(&x, Mode::Eval).unwrap();
        assert!(net.backward(&eval_cache, &x).is_err());
    }

    #[test]
    fn build_is_deterministic_in_seed() {
        let arch = parse_arch("4_2").unwrap();
        assert_eq!(Network::build(&arch, 7).unwrap().named_tensors().iter().map(|t| t.data.to_vec()).collect::<Vec<_>>(),
                   Network::build(&arch, 7).unwrap().named_tensors().iter().map(|t| t.data.to_vec()).collect::<Vec<_>>());
        let a = Network::build(&arch, 7).unwrap();
        let b = Network::build(&arch, 8).unwrap();
        assert_ne!(a.head()[0].weight, b.head()[0].weight);
    }

    #[test]
    fn he_initialization_statistics() {
        let arch = parse_arch("64_1").unwrap();
        let net = Network::build(&arch, 11).unwrap();
        let w = net.units()[0].convs[0].weight.data();
        let mean = w.iter().map(|&v| v as f64).sum::<f64>() / w.len() as f64;
        let var = w.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / w.len() as f64;
        let expected = 2.0 / (9.0 * 64.0);
        assert!(mean.abs() < 0.01);
        assert!((var / expected - 1.0).abs() < 0.05, "var {var} expected {expected}");
        assert!(net.units()[0].convs[0].bias.iter().all(|&b| b == 0.0));
    }

    #[test]
    fn non_luminance_input_rejected() {
        let mut net = Network::zeros(&parse_arch("2_1").unwrap()).unwrap();
        let x = Tensor::zeros(Dims::new(1, 3, 4, 4));
        assert!(net.forward(&x, Mode::Train).is_err());
    }

    #[test]
    fn bn_network_eval_needs_statistics() {
        let arch = parse_arch("2_1;bn=1").unwrap();
        let mut net = Network::build(&arch, 1).unwrap();
        let x = input(2, 4);
        assert!(matches!(net.infer(&x), Err(Error::UninitializedStatistics(_))));
        net.forward(&x, Mode::Train).unwrap();
        assert!(net.infer(&x).unwrap().is_finite());
    }
}
