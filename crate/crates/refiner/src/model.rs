//! Offset-predicting network: per-channel residual embeddings, mean
//! neighbourhood convolutions, a pre-norm attention encoder and a
//! coarse-to-fine decoder over a Morton-sorted vertex pyramid.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use uvkit_core::geom::Vec2;
use uvkit_core::{Error, Result};

use crate::features::{morton_order, FeatureStats, FeaturePack, CHANNELS};
use crate::tape::{Mat, RowMix, Tape, Var};

/// Keeps saturated outputs strictly inside (−1, 1).
const HEAD_SQUASH: f64 = 1.0 - 1e-9;
/// Smallest vertex count the two-level pyramid is defined for.
pub const MIN_PYRAMID_VERTICES: usize = 4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArchConfig {
    /// Embedding width per input channel: uv, position, normal, degree,
    /// curvature.
    pub embed: [usize; 5],
    /// Graph feature and encoder width.
    pub width: usize,
    pub sage_layers: usize,
    pub heads: usize,
    pub encoder_layers: usize,
    /// Feed-forward hidden width as a multiple of `width`.
    pub ffn_mult: usize,
}

impl Default for ArchConfig {
    fn default() -> Self {
        ArchConfig::scaled(0.25)
    }
}

impl ArchConfig {
    /// Full-size widths are 128/64/32/32/32 and 512; `scale` multiplies
    /// them. Heads and depth stay at the desk-scale values.
    pub fn scaled(scale: f64) -> Self {
        let w = |x: f64| ((x * scale).round() as usize).max(1);
        ArchConfig {
            embed: [w(128.0), w(64.0), w(32.0), w(32.0), w(32.0)],
            width: w(512.0).max(4),
            sage_layers: 5,
            heads: 4,
            encoder_layers: 2,
            ffn_mult: 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.embed.contains(&0) || self.width == 0 || self.heads == 0 || self.ffn_mult == 0 {
            return Err(Error::InvalidArgument("network widths must be positive".into()));
        }
        if self.sage_layers == 0 {
            return Err(Error::InvalidArgument("need at least one graph layer".into()));
        }
        if self.width % self.heads != 0 {
            return Err(Error::InvalidArgument(format!(
                "width {} is not divisible by {} heads",
                self.width, self.heads
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug)]
struct Linear {
    w: usize,
    b: Option<usize>,
}

#[derive(Clone, Copy, Debug)]
struct Norm {
    gain: usize,
    bias: usize,
}

#[derive(Clone, Debug)]
struct Embed {
    hidden: Linear,
    out: Linear,
    residual: Linear,
}

#[derive(Clone, Debug)]
struct EncoderLayer {
    ln1: Norm,
    q: Linear,
    k: Linear,
    v: Linear,
    o: Linear,
    ln2: Norm,
    ff1: Linear,
    ff2: Linear,
}

/// Parameter indices for every layer, derived from an [`ArchConfig`].
#[derive(Clone, Debug)]
struct Layout {
    embed: Vec<Embed>,
    sage: Vec<(Linear, Linear)>,
    encoder: Vec<EncoderLayer>,
    final_norm: Norm,
    down: [Linear; 2],
    up: [Linear; 2],
    head: Linear,
}

#[derive(Default)]
struct Shapes(Vec<(String, usize, usize, Init)>);

#[derive(Clone, Copy, Debug, PartialEq)]
enum Init {
    Fan(f64),
    Zero,
    One,
}

impl Shapes {
    fn add(&mut self, name: String, r: usize, c: usize, init: Init) -> usize {
        self.0.push((name, r, c, init));
        self.0.len() - 1
    }

    fn linear(&mut self, name: &str, din: usize, dout: usize, bias: bool, gain: f64) -> Linear {
        let w = self.add(format!("{name}.weight"), din, dout, Init::Fan(gain));
        let b = bias.then(|| self.add(format!("{name}.bias"), 1, dout, Init::Zero));
        Linear { w, b }
    }

    fn norm(&mut self, name: &str, dim: usize) -> Norm {
        Norm {
            gain: self.add(format!("{name}.gain"), 1, dim, Init::One),
            bias: self.add(format!("{name}.bias"), 1, dim, Init::Zero),
        }
    }
}

fn layout(arch: &ArchConfig) -> (Layout, Shapes) {
    let mut s = Shapes::default();
    let embed = CHANNELS
        .iter()
        .zip(arch.embed)
        .map(|(&(name, din), w)| Embed {
            hidden: s.linear(&format!("embed.{name}.hidden"), din, w, true, 1.0),
            out: s.linear(&format!("embed.{name}.out"), w, w, true, 1.0),
            residual: s.linear(&format!("embed.{name}.residual"), din, w, false, 1.0),
        })
        .collect();
    let mut din: usize = arch.embed.iter().sum();
    let w = arch.width;
    let mut sage = Vec::new();
    for k in 0..arch.sage_layers {
        sage.push((
            s.linear(&format!("sage.{k}.self"), din, w, true, 1.0),
            s.linear(&format!("sage.{k}.neighbors"), din, w, false, 1.0),
        ));
        din = w;
    }
    let hidden = w * arch.ffn_mult;
    let encoder = (0..arch.encoder_layers)
        .map(|k| EncoderLayer {
            ln1: s.norm(&format!("encoder.{k}.ln1"), w),
            q: s.linear(&format!("encoder.{k}.query"), w, w, true, 1.0),
            k: s.linear(&format!("encoder.{k}.key"), w, w, true, 1.0),
            v: s.linear(&format!("encoder.{k}.value"), w, w, true, 1.0),
            o: s.linear(&format!("encoder.{k}.out"), w, w, true, 1.0),
            ln2: s.norm(&format!("encoder.{k}.ln2"), w),
            ff1: s.linear(&format!("encoder.{k}.ff1"), w, hidden, true, 1.0),
            ff2: s.linear(&format!("encoder.{k}.ff2"), hidden, w, true, 1.0),
        })
        .collect();
    let final_norm = s.norm("encoder.final_norm", w);
    let down = [
        s.linear("decoder.down_half", w, w, true, 1.0),
        s.linear("decoder.down_quarter", w, w, true, 1.0),
    ];
    let up = [
        s.linear("decoder.up_half", w, w, true, 1.0),
        s.linear("decoder.up_full", w, w, true, 1.0),
    ];
    let head = s.linear("head", w, 2, true, 0.1);
    (
        Layout {
            embed,
            sage,
            encoder,
            final_norm,
            down,
            up,
            head,
        },
        s,
    )
}

/// One named weight tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    pub name: String,
    pub value: Mat,
}

/// Network weights plus the feature statistics they were trained with.
#[derive(Clone, Debug)]
pub struct RefinerParams {
    pub arch: ArchConfig,
    pub stats: FeatureStats,
    pub tensors: Vec<Tensor>,
    layout: Arc<Layout>,
}

impl PartialEq for RefinerParams {
    fn eq(&self, other: &Self) -> bool {
        self.arch == other.arch && self.stats == other.stats && self.tensors == other.tensors
    }
}

impl RefinerParams {
    /// Scaled-normal weights (variance `gain²/fan_in`), zero biases, unit
    /// norm gains. The output head starts at one tenth of that scale.
    pub fn init(arch: ArchConfig, stats: FeatureStats, seed: u64) -> Result<Self> {
        arch.validate()?;
        let (layout, shapes) = layout(&arch);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tensors = shapes
            .0
            .into_iter()
            .map(|(name, r, c, init)| {
                let value = match init {
                    Init::Zero => Mat::zeros(r, c),
                    Init::One => Mat::from_element(r, c, 1.0),
                    Init::Fan(gain) => {
                        let normal = Normal::new(0.0, gain / (r as f64).sqrt())
                            .expect("positive standard deviation");
                        Mat::from_fn(r, c, |_, _| normal.sample(&mut rng))
                    }
                };
                Tensor { name, value }
            })
            .collect();
        Ok(RefinerParams {
            arch,
            stats,
            tensors,
            layout: Arc::new(layout),
        })
    }

    /// Rebuilds parameters from named tensors, checking names and shapes
    /// against the architecture.
    pub fn from_tensors(arch: ArchConfig, stats: FeatureStats, tensors: Vec<Tensor>) -> Result<Self> {
        arch.validate()?;
        let (layout, shapes) = layout(&arch);
        if shapes.0.len() != tensors.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} tensors, found {}",
                shapes.0.len(),
                tensors.len()
            )));
        }
        for ((name, r, c, _), t) in shapes.0.iter().zip(&tensors) {
            if *name != t.name || (*r, *c) != t.value.shape() {
                return Err(Error::InvalidArgument(format!(
                    "tensor {} {:?} does not match expected {name} ({r}, {c})",
                    t.name,
                    t.value.shape()
                )));
            }
        }
        Ok(RefinerParams {
            arch,
            stats,
            tensors,
            layout: Arc::new(layout),
        })
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors.iter().map(|t| t.value.len()).sum()
    }

    pub fn zeros_like(&self) -> Vec<Mat> {
        self.tensors
            .iter()
            .map(|t| Mat::zeros(t.value.nrows(), t.value.ncols()))
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.iter().all(|t| t.value.iter().all(|x| x.is_finite()))
    }

    pub fn fill(&mut self, value: f64) {
        for t in &mut self.tensors {
            t.value.fill(value);
        }
    }
}

/// Network output for one chart.
#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    /// `Q_o`, every component in (−1, 1).
    pub offsets: Vec<Vec2>,
    /// The chart had too few vertices for the pyramid, which was bypassed.
    pub pyramid_skipped: bool,
}

impl Prediction {
    /// `Q_i + Q_o`.
    pub fn apply(&self, q_init: &[Vec2]) -> Vec<Vec2> {
        q_init
            .iter()
            .zip(&self.offsets)
            .map(|(q, o)| [q[0] + o[0], q[1] + o[1]])
            .collect()
    }
}

struct Graph<'a> {
    tape: Tape,
    params: &'a RefinerParams,
    leaves: Vec<Option<Var>>,
}

impl<'a> Graph<'a> {
    fn new(params: &'a RefinerParams) -> Self {
        Graph {
            tape: Tape::new(),
            params,
            leaves: vec![None; params.tensors.len()],
        }
    }

    fn p(&mut self, i: usize) -> Var {
        if let Some(v) = self.leaves[i] {
            return v;
        }
        let v = self.tape.param(i, self.params.tensors[i].value.clone());
        self.leaves[i] = Some(v);
        v
    }

    fn linear(&mut self, x: Var, l: Linear) -> Var {
        let w = self.p(l.w);
        let y = self.tape.matmul(x, w);
        match l.b {
            Some(b) => {
                let b = self.p(b);
                self.tape.add_row(y, b)
            }
            None => y,
        }
    }

    fn norm(&mut self, x: Var, n: Norm) -> Var {
        let (g, b) = (self.p(n.gain), self.p(n.bias));
        self.tape.layer_norm(x, g, b)
    }

    /// Embeddings and graph convolutions.
    fn graph_features(&mut self, pack: &FeaturePack) -> Var {
        let layout = Arc::clone(&self.params.layout);
        let mut parts = Vec::new();
        for (block, ch) in layout.embed.iter().zip(&pack.channels) {
            let x = self.tape.input(ch.clone());
            let h = self.linear(x, block.hidden);
            let h = self.tape.gelu(h);
            let h = self.linear(h, block.out);
            let r = self.linear(x, block.residual);
            parts.push(self.tape.add(h, r));
        }
        let mut h = self.tape.concat_cols(&parts);
        let mean = Arc::new(RowMix::mean(pack.vertex_count(), &pack.neighbors));
        for &(own, nb) in &layout.sage {
            let agg = self.tape.row_mix(h, Arc::clone(&mean));
            let a = self.linear(h, own);
            let b = self.linear(agg, nb);
            let s = self.tape.add(a, b);
            h = self.tape.gelu(s);
        }
        h
    }

    fn encoder(&mut self, mut h: Var) -> Var {
        let layout = Arc::clone(&self.params.layout);
        let heads = self.params.arch.heads;
        let d = self.params.arch.width / heads;
        let scale = 1.0 / (d as f64).sqrt();
        for layer in &layout.encoder {
            let x = self.norm(h, layer.ln1);
            let q = self.linear(x, layer.q);
            let k = self.linear(x, layer.k);
            let v = self.linear(x, layer.v);
            let mut outs = Vec::with_capacity(heads);
            for head in 0..heads {
                let qh = self.tape.slice_cols(q, head * d, d);
                let kh = self.tape.slice_cols(k, head * d, d);
                let vh = self.tape.slice_cols(v, head * d, d);
                let s = self.tape.matmul_nt(qh, kh);
                let s = self.tape.scale(s, scale);
                let a = self.tape.softmax_rows(s);
                outs.push(self.tape.matmul(a, vh));
            }
            let cat = self.tape.concat_cols(&outs);
            let att = self.linear(cat, layer.o);
            h = self.tape.add(h, att);
            let x = self.norm(h, layer.ln2);
            let f = self.linear(x, layer.ff1);
            let f = self.tape.gelu(f);
            let f = self.linear(f, layer.ff2);
            h = self.tape.add(h, f);
        }
        self.norm(h, layout.final_norm)
    }

    fn pyramid(&mut self, h: Var, q_init: &[Vec2]) -> Var {
        let layout = Arc::clone(&self.params.layout);
        let n = q_init.len();
        let order = morton_order(q_init);
        let mut inverse = vec![0; n];
        for (i, &v) in order.iter().enumerate() {
            inverse[v] = i;
        }
        let n1 = n.div_ceil(2);
        let n2 = n1.div_ceil(2);

        let x0 = self.tape.row_mix(h, Arc::new(RowMix::gather(n, &order)));
        let s1 = self.tape.row_mix(x0, Arc::new(stride(n)));
        let e1 = self.linear(s1, layout.down[0]);
        let e1 = self.tape.gelu(e1);
        let s2 = self.tape.row_mix(e1, Arc::new(stride(n1)));
        let e2 = self.linear(s2, layout.down[1]);
        let e2 = self.tape.gelu(e2);

        let u = self.tape.row_mix(e2, Arc::new(upsample(n2, n1)));
        let u = self.tape.add(u, e1);
        let u1 = self.linear(u, layout.up[0]);
        let u1 = self.tape.gelu(u1);
        let u = self.tape.row_mix(u1, Arc::new(upsample(n1, n)));
        let u = self.tape.add(u, x0);
        let u0 = self.linear(u, layout.up[1]);
        let u0 = self.tape.gelu(u0);
        self.tape.row_mix(u0, Arc::new(RowMix::gather(n, &inverse)))
    }

    fn build(&mut self, pack: &FeaturePack) -> (Var, bool) {
        let h = self.graph_features(pack);
        let h = self.encoder(h);
        let skipped = pack.vertex_count() < MIN_PYRAMID_VERTICES;
        let h = if skipped { h } else { self.pyramid(h, &pack.q_init) };
        let head = self.params.layout.head;
        let o = self.linear(h, head);
        let o = self.tape.tanh(o);
        (self.tape.scale(o, HEAD_SQUASH), skipped)
    }
}

/// Every other row, starting with the first.
fn stride(n: usize) -> RowMix {
    let idx: Vec<usize> = (0..n).step_by(2).collect();
    RowMix::gather(n, &idx)
}

/// Coarse row `j` lands on fine row `2j`; odd fine rows average their two
/// coarse neighbours.
fn upsample(coarse: usize, fine: usize) -> RowMix {
    RowMix {
        cols_in: coarse,
        rows: (0..fine)
            .map(|i| {
                let j0 = (i / 2).min(coarse - 1);
                let j1 = (j0 + 1).min(coarse - 1);
                if i % 2 == 0 || j0 == j1 {
                    vec![(j0, 1.0)]
                } else {
                    vec![(j0, 0.5), (j1, 0.5)]
                }
            })
            .collect(),
    }
}

fn check_pack(pack: &FeaturePack) -> Result<()> {
    let n = pack.vertex_count();
    if n == 0 {
        return Err(Error::EmptyChart);
    }
    for ((name, w), ch) in CHANNELS.iter().zip(&pack.channels) {
        if ch.shape() != (n, *w) {
            return Err(Error::InvalidArgument(format!(
                "channel {name} has shape {:?}, expected ({n}, {w})",
                ch.shape()
            )));
        }
    }
    if pack.neighbors.len() != n {
        return Err(Error::LengthMismatch(pack.neighbors.len(), n));
    }
    Ok(())
}

fn offsets_of(m: &Mat) -> Vec<Vec2> {
    (0..m.nrows()).map(|i| [m[(i, 0)], m[(i, 1)]]).collect()
}

/// Predicted per-vertex offsets `Q_o`.
pub fn forward(params: &RefinerParams, pack: &FeaturePack) -> Result<Prediction> {
    check_pack(pack)?;
    let mut g = Graph::new(params);
    let (out, skipped) = g.build(pack);
    if skipped {
        log::warn!(
            "chart with {} vertices bypasses the pyramid decoder",
            pack.vertex_count()
        );
    }
    Ok(Prediction {
        offsets: offsets_of(g.tape.value(out)),
        pyramid_skipped: skipped,
    })
}

/// Output of the embedding and graph-convolution stages, before any
/// vertex-order dependent processing.
pub fn graph_features(params: &RefinerParams, pack: &FeaturePack) -> Result<Mat> {
    check_pack(pack)?;
    let mut g = Graph::new(params);
    let h = g.graph_features(pack);
    Ok(g.tape.value(h).clone())
}

/// Forward pass, then `loss(offsets) -> (value, ∂value/∂offsets)` and the
/// parameter gradients of that value.
pub fn forward_backward(
    params: &RefinerParams,
    pack: &FeaturePack,
    loss: impl FnOnce(&Prediction) -> Result<(f64, Vec<Vec2>)>,
) -> Result<(f64, Prediction, Vec<Mat>)> {
    check_pack(pack)?;
    let mut g = Graph::new(params);
    let (out, skipped) = g.build(pack);
    let prediction = Prediction {
        offsets: offsets_of(g.tape.value(out)),
        pyramid_skipped: skipped,
    };
    let (value, grad) = loss(&prediction)?;
    if !value.is_finite() || grad.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::Degenerate("non-finite loss".into()));
    }
    if grad.len() != pack.vertex_count() {
        return Err(Error::LengthMismatch(grad.len(), pack.vertex_count()));
    }
    let seed = Mat::from_fn(grad.len(), 2, |i, k| grad[i][k]);
    let grads = g.tape.backward(out, seed);
    let mut out_grads = params.zeros_like();
    grads.accumulate_params(&mut out_grads);
    Ok((value, prediction, out_grads))
}
