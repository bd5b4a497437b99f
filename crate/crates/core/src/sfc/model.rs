use ndarray::{s, Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::encode::{EncodedTrajectory, IN_DIM, N_PROPS};
use super::SfcError;

const LN_EPS: f32 = 1e-5;
/// Keeps the reported probability strictly inside (0, 1).
const PROB_CLAMP: f64 = 1e-12;

/// Architecture integers stored in the weight file's metadata block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SfcConfig {
    pub d_model: usize,
    pub n_heads: usize,
    pub n_layers: usize,
    pub seq_len: usize,
    pub n_props: usize,
    pub in_dim: usize,
    pub d_ff: usize,
    pub hidden: usize,
}

impl Default for SfcConfig {
    fn default() -> Self {
        SfcConfig { d_model: 32, n_heads: 2, n_layers: 2, seq_len: 100, n_props: N_PROPS, in_dim: IN_DIM, d_ff: 64, hidden: 64 }
    }
}

impl SfcConfig {
    pub fn validate(&self) -> Result<(), SfcError> {
        let bad = |m: String| Err(SfcError::Metadata(m));
        if self.in_dim != IN_DIM || self.n_props != N_PROPS {
            return bad(format!("in_dim/n_props must be {IN_DIM}/{N_PROPS}, got {}/{}", self.in_dim, self.n_props));
        }
        if [self.d_model, self.n_heads, self.n_layers, self.seq_len, self.d_ff, self.hidden].contains(&0) {
            return bad("architecture sizes must be positive".into());
        }
        if !self.d_model.is_multiple_of(self.n_heads) {
            return bad(format!("d_model {} not divisible by n_heads {}", self.d_model, self.n_heads));
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.d_model / self.n_heads
    }
}

/// `y = W x + b` with `W` stored `[out, in]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub weight: Array2<f32>,
    pub bias: Array1<f32>,
}

impl Linear {
    pub fn zeros(out: usize, inp: usize) -> Self {
        Linear { weight: Array2::zeros((out, inp)), bias: Array1::zeros(out) }
    }

    fn random(out: usize, inp: usize, rng: &mut ChaCha8Rng) -> Self {
        let bound = 1.0 / (inp as f32).sqrt();
        Linear {
            weight: Array2::from_shape_fn((out, inp), |_| rng.random_range(-bound..bound)),
            bias: Array1::from_shape_fn(out, |_| rng.random_range(-bound..bound)),
        }
    }

    /// Applies the layer to every row of `x`.
    pub fn rows(&self, x: &Array2<f32>) -> Array2<f32> {
        x.dot(&self.weight.t()) + &self.bias
    }

    pub fn vector(&self, x: &Array1<f32>) -> Array1<f32> {
        self.weight.dot(x) + &self.bias
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerNorm {
    pub gain: Array1<f32>,
    pub bias: Array1<f32>,
}

impl LayerNorm {
    pub fn identity(d: usize) -> Self {
        LayerNorm { gain: Array1::ones(d), bias: Array1::zeros(d) }
    }

    pub fn rows(&self, x: &Array2<f32>) -> Array2<f32> {
        let mut out = x.clone();
        for mut row in out.rows_mut() {
            let n = row.len() as f32;
            let mean = row.sum() / n;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f32>() / n;
            let inv = 1.0 / (var + LN_EPS).sqrt();
            for (j, v) in row.iter_mut().enumerate() {
                *v = (*v - mean) * inv * self.gain[j] + self.bias[j];
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderLayer {
    pub ln1: LayerNorm,
    pub q: Linear,
    pub k: Linear,
    pub v: Linear,
    pub o: Linear,
    pub ln2: LayerNorm,
    pub ff1: Linear,
    pub ff2: Linear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SfcModel {
    pub config: SfcConfig,
    pub embed: Linear,
    /// `[seq_len, d_model]`; derived from the config, not stored on disk.
    pub pos_table: Array2<f32>,
    pub layers: Vec<EncoderLayer>,
    pub head_fc1: Linear,
    pub head_fc2: Linear,
}

/// Intermediate values from [`SfcModel::forward_traced`].
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub probability: f64,
    pub logit: f32,
    /// `attention[layer][head]` is a `[seq_len, seq_len]` row-stochastic matrix.
    pub attention: Vec<Vec<Array2<f32>>>,
    pub pooled: Array1<f32>,
}

/// Standard sine/cosine table: even columns `sin(pos / 10000^(2i/d))`, odd
/// columns the matching cosine.
pub fn sinusoidal_table(n: usize, d: usize) -> Array2<f32> {
    Array2::from_shape_fn((n, d), |(pos, j)| {
        let i = (j / 2) as f64;
        let angle = pos as f64 / 10000f64.powf(2.0 * i / d as f64);
        (if j % 2 == 0 { angle.sin() } else { angle.cos() }) as f32
    })
}

fn relu(mut x: Array2<f32>) -> Array2<f32> {
    x.mapv_inplace(|v| v.max(0.0));
    x
}

fn softmax_rows(mut x: Array2<f32>) -> Array2<f32> {
    for mut row in x.rows_mut() {
        let m = row.fold(f32::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - m).exp());
        let s = row.sum();
        row.mapv_inplace(|v| v / s);
    }
    x
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl SfcModel {
    /// Every weight zero, layer-norm gains one.
    pub fn zeros(config: SfcConfig) -> Result<Self, SfcError> {
        config.validate()?;
        let d = config.d_model;
        let layer = EncoderLayer {
            ln1: LayerNorm::identity(d),
            q: Linear::zeros(d, d),
            k: Linear::zeros(d, d),
            v: Linear::zeros(d, d),
            o: Linear::zeros(d, d),
            ln2: LayerNorm::identity(d),
            ff1: Linear::zeros(config.d_ff, d),
            ff2: Linear::zeros(d, config.d_ff),
        };
        Ok(SfcModel {
            config,
            embed: Linear::zeros(d, config.in_dim),
            pos_table: sinusoidal_table(config.seq_len, d),
            layers: vec![layer; config.n_layers],
            head_fc1: Linear::zeros(config.hidden, d + config.n_props),
            head_fc2: Linear::zeros(1, config.hidden),
        })
    }

    /// Uniform fan-in initialisation, deterministic per seed.
    pub fn random(config: SfcConfig, seed: u64) -> Result<Self, SfcError> {
        let mut m = SfcModel::zeros(config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = config.d_model;
        m.embed = Linear::random(d, config.in_dim, &mut rng);
        for layer in &mut m.layers {
            for lin in [&mut layer.q, &mut layer.k, &mut layer.v, &mut layer.o] {
                *lin = Linear::random(d, d, &mut rng);
            }
            layer.ff1 = Linear::random(config.d_ff, d, &mut rng);
            layer.ff2 = Linear::random(d, config.d_ff, &mut rng);
            for ln in [&mut layer.ln1, &mut layer.ln2] {
                ln.gain.mapv_inplace(|_| rng.random_range(0.8..1.2));
                ln.bias.mapv_inplace(|_| rng.random_range(-0.1..0.1));
            }
        }
        m.head_fc1 = Linear::random(config.hidden, d + config.n_props, &mut rng);
        m.head_fc2 = Linear::random(1, config.hidden, &mut rng);
        Ok(m)
    }

    pub fn seq_len(&self) -> usize {
        self.config.seq_len
    }

    /// Every stored tensor with its file name, in file order.
    pub fn named_tensors(&self) -> Vec<(String, Vec<usize>, &[f32])> {
        let mut names = Vec::new();
        collect_names(self.config.n_layers, &mut names);
        names
            .into_iter()
            .map(|name| {
                let (shape, data) = self.tensor(&name).expect("known tensor name");
                (name, shape, data)
            })
            .collect()
    }

    fn tensor(&self, name: &str) -> Option<(Vec<usize>, &[f32])> {
        fn two(a: &Array2<f32>) -> (Vec<usize>, &[f32]) {
            (a.shape().to_vec(), a.as_slice().expect("standard layout"))
        }
        fn one(a: &Array1<f32>) -> (Vec<usize>, &[f32]) {
            (a.shape().to_vec(), a.as_slice().expect("standard layout"))
        }
        fn linear<'a>(l: &'a Linear, field: &str) -> Option<(Vec<usize>, &'a [f32])> {
            match field {
                "weight" => Some(two(&l.weight)),
                "bias" => Some(one(&l.bias)),
                _ => None,
            }
        }
        fn norm<'a>(n: &'a LayerNorm, field: &str) -> Option<(Vec<usize>, &'a [f32])> {
            match field {
                "gain" => Some(one(&n.gain)),
                "bias" => Some(one(&n.bias)),
                _ => None,
            }
        }
        let parts: Vec<&str> = name.split('.').collect();
        match parts.as_slice() {
            ["embed", f] => linear(&self.embed, f),
            ["head", "fc1", f] => linear(&self.head_fc1, f),
            ["head", "fc2", f] => linear(&self.head_fc2, f),
            ["layers", i, rest @ ..] => {
                let l = self.layers.get(i.parse::<usize>().ok()?)?;
                match rest {
                    ["ln1", f] => norm(&l.ln1, f),
                    ["ln2", f] => norm(&l.ln2, f),
                    ["attn", p, f] => linear(
                        match *p {
                            "q" => &l.q,
                            "k" => &l.k,
                            "v" => &l.v,
                            "o" => &l.o,
                            _ => return None,
                        },
                        f,
                    ),
                    ["ff1", f] => linear(&l.ff1, f),
                    ["ff2", f] => linear(&l.ff2, f),
                    _ => None,
                }
            }
            _ => None,
        }
    }

    /// Mutable view of a stored tensor's data by file name.
    pub(crate) fn tensor_mut(&mut self, name: &str) -> Option<(Vec<usize>, &mut [f32])> {
        fn two(a: &mut Array2<f32>) -> (Vec<usize>, &mut [f32]) {
            (a.shape().to_vec(), a.as_slice_mut().expect("standard layout"))
        }
        fn one(a: &mut Array1<f32>) -> (Vec<usize>, &mut [f32]) {
            (a.shape().to_vec(), a.as_slice_mut().expect("standard layout"))
        }
        fn linear<'a>(l: &'a mut Linear, field: &str) -> Option<(Vec<usize>, &'a mut [f32])> {
            match field {
                "weight" => Some(two(&mut l.weight)),
                "bias" => Some(one(&mut l.bias)),
                _ => None,
            }
        }
        fn norm<'a>(n: &'a mut LayerNorm, field: &str) -> Option<(Vec<usize>, &'a mut [f32])> {
            match field {
                "gain" => Some(one(&mut n.gain)),
                "bias" => Some(one(&mut n.bias)),
                _ => None,
            }
        }
        let parts: Vec<&str> = name.split('.').collect();
        match parts.as_slice() {
            ["embed", f] => linear(&mut self.embed, f),
            ["head", "fc1", f] => linear(&mut self.head_fc1, f),
            ["head", "fc2", f] => linear(&mut self.head_fc2, f),
            ["layers", i, rest @ ..] => {
                let l = self.layers.get_mut(i.parse::<usize>().ok()?)?;
                match rest {
                    ["ln1", f] => norm(&mut l.ln1, f),
                    ["ln2", f] => norm(&mut l.ln2, f),
                    ["attn", "q", f] => linear(&mut l.q, f),
                    ["attn", "k", f] => linear(&mut l.k, f),
                    ["attn", "v", f] => linear(&mut l.v, f),
                    ["attn", "o", f] => linear(&mut l.o, f),
                    ["ff1", f] => linear(&mut l.ff1, f),
                    ["ff2", f] => linear(&mut l.ff2, f),
                    _ => None,
                }
            }
            _ => None,
        }
    }

    /// Shape and finiteness checks against the config.
    pub fn validate(&self) -> Result<(), SfcError> {
        self.config.validate()?;
        let c = &self.config;
        for (name, expected) in expected_shapes(c) {
            let (found, data) = self.tensor(&name).ok_or_else(|| SfcError::UnexpectedTensor(name.clone()))?;
            if found != expected {
                return Err(SfcError::ShapeMismatch { name, expected, found });
            }
            if data.iter().any(|v| !v.is_finite()) {
                return Err(SfcError::NonFinite(name));
            }
        }
        if self.layers.len() != c.n_layers {
            return Err(SfcError::Metadata(format!("{} layers present, {} declared", self.layers.len(), c.n_layers)));
        }
        if self.pos_table.shape() != [c.seq_len, c.d_model] {
            return Err(SfcError::ShapeMismatch {
                name: "pos_table".into(),
                expected: vec![c.seq_len, c.d_model],
                found: self.pos_table.shape().to_vec(),
            });
        }
        Ok(())
    }

    pub fn forward(&self, x: &EncodedTrajectory) -> Result<f64, SfcError> {
        self.run(x, false).map(|t| t.probability)
    }

    /// Forward pass that also returns the attention matrices.
    pub fn forward_traced(&self, x: &EncodedTrajectory) -> Result<ForwardTrace, SfcError> {
        self.run(x, true)
    }

    fn run(&self, x: &EncodedTrajectory, keep: bool) -> Result<ForwardTrace, SfcError> {
        let c = &self.config;
        let shape = x.matrix.shape();
        if shape != [c.seq_len, c.in_dim] {
            return Err(SfcError::ShapeMismatch {
                name: "input".into(),
                expected: vec![c.seq_len, c.in_dim],
                found: shape.to_vec(),
            });
        }
        if x.props.len() != c.n_props {
            return Err(SfcError::ShapeMismatch { name: "props".into(), expected: vec![c.n_props], found: vec![x.props.len()] });
        }
        let input = x.matrix.mapv(|v| v as f32);
        let mut h = self.embed.rows(&input) + &self.pos_table;
        let dh = c.head_dim();
        let scale = 1.0 / (dh as f32).sqrt();
        let mut attention = Vec::new();
        for layer in &self.layers {
            let a = layer.ln1.rows(&h);
            let (q, k, v) = (layer.q.rows(&a), layer.k.rows(&a), layer.v.rows(&a));
            let mut heads = Array2::zeros((c.seq_len, c.d_model));
            let mut maps = Vec::new();
            for hd in 0..c.n_heads {
                let cols = s![.., hd * dh..(hd + 1) * dh];
                let scores = q.slice(cols).dot(&k.slice(cols).t()) * scale;
                let weights = softmax_rows(scores);
                heads.slice_mut(cols).assign(&weights.dot(&v.slice(cols)));
                if keep {
                    maps.push(weights);
                }
            }
            h = h + layer.o.rows(&heads);
            let b = layer.ln2.rows(&h);
            h = h + layer.ff2.rows(&relu(layer.ff1.rows(&b)));
            if keep {
                attention.push(maps);
            }
        }
        let pooled = h.mean_axis(Axis(0)).expect("non-empty sequence");
        let mut z = Array1::zeros(c.d_model + c.n_props);
        z.slice_mut(s![..c.d_model]).assign(&pooled);
        for (i, p) in x.props.iter().enumerate() {
            z[c.d_model + i] = *p as f32;
        }
        let hidden = self.head_fc1.vector(&z).mapv(|v| v.max(0.0));
        let logit = self.head_fc2.vector(&hidden)[0];
        let probability = sigmoid(logit as f64).clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
        Ok(ForwardTrace { probability, logit, attention, pooled })
    }
}

pub(crate) fn collect_names(n_layers: usize, out: &mut Vec<String>) {
    out.push("embed.weight".into());
    out.push("embed.bias".into());
    for i in 0..n_layers {
        for part in [
            "ln1.gain", "ln1.bias", "attn.q.weight", "attn.q.bias", "attn.k.weight", "attn.k.bias", "attn.v.weight",
            "attn.v.bias", "attn.o.weight", "attn.o.bias", "ln2.gain", "ln2.bias", "ff1.weight", "ff1.bias",
            "ff2.weight", "ff2.bias",
        ] {
            out.push(format!("layers.{i}.{part}"));
        }
    }
    for part in ["head.fc1.weight", "head.fc1.bias", "head.fc2.weight", "head.fc2.bias"] {
        out.push(part.into());
    }
}

/// File order of tensors with the shapes the config requires.
pub(crate) fn expected_shapes(c: &SfcConfig) -> Vec<(String, Vec<usize>)> {
    let d = c.d_model;
    let mut names = Vec::new();
    collect_names(c.n_layers, &mut names);
    names
        .into_iter()
        .map(|name| {
            let shape = match name.rsplit_once('.').map(|(p, f)| (p.rsplit('.').next().unwrap_or(p), f)) {
                Some(("embed", "weight")) => vec![d, c.in_dim],
                Some(("fc1", "weight")) if name.starts_with("head") => vec![c.hidden, d + c.n_props],
                Some(("fc1", "bias")) if name.starts_with("head") => vec![c.hidden],
                Some(("fc2", "weight")) if name.starts_with("head") => vec![1, c.hidden],
                Some(("fc2", "bias")) if name.starts_with("head") => vec![1],
                Some(("ff1", "weight")) => vec![c.d_ff, d],
                Some(("ff1", "bias")) => vec![c.d_ff],
                Some(("ff2", "weight")) => vec![d, c.d_ff],
                Some((_, "weight")) => vec![d, d],
                _ => vec![d],
            };
            (name, shape)
        })
        .collect()
}
