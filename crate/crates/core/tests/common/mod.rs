#![allow(dead_code)]

use std::collections::HashMap;
use std::path::PathBuf;

use sfrrt::container::ContainerSpec;
use sfrrt::experiment::{load_containers, load_scenes, NamedContainer};
use sfrrt::se3::Scene;
use sfrrt::sfc::{EncodedTrajectory, SfcModel};

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data")
}

pub fn scenes() -> Vec<Scene> {
    load_scenes(&data_dir().join("scenes")).expect("shipped scenes load")
}

pub fn scene(name: &str) -> Scene {
    scenes().into_iter().find(|s| s.name == name).expect("scene exists")
}

pub fn containers() -> Vec<NamedContainer> {
    load_containers(&data_dir().join("containers")).expect("shipped containers load")
}

pub fn container(name: &str) -> ContainerSpec {
    containers().into_iter().find(|c| c.name == name).expect("container exists").spec
}

/// Plain nested-loop transformer in f64, written from the architecture
/// description rather than from the runtime code.
pub struct Reference {
    t: HashMap<String, (Vec<usize>, Vec<f64>)>,
    d: usize,
    heads: usize,
    layers: usize,
    pos: Vec<Vec<f64>>,
}

impl Reference {
    pub fn new(m: &SfcModel) -> Self {
        let t = m
            .named_tensors()
            .into_iter()
            .map(|(n, s, d)| (n, (s, d.iter().map(|v| *v as f64).collect())))
            .collect();
        let (n, d) = (m.config.seq_len, m.config.d_model);
        let pos = (0..n)
            .map(|p| {
                (0..d)
                    .map(|j| {
                        let f = (p as f64) / 10000f64.powf((2 * (j / 2)) as f64 / d as f64);
                        if j % 2 == 0 { f.sin() } else { f.cos() }
                    })
                    .collect()
            })
            .collect();
        Reference { t, d, heads: m.config.n_heads, layers: m.config.n_layers, pos }
    }

    pub fn zero_positions(&mut self) {
        for row in &mut self.pos {
            row.iter_mut().for_each(|v| *v = 0.0);
        }
    }

    fn linear(&self, name: &str, x: &[f64]) -> Vec<f64> {
        let (shape, w) = &self.t[&format!("{name}.weight")];
        let (_, b) = &self.t[&format!("{name}.bias")];
        (0..shape[0]).map(|o| b[o] + (0..shape[1]).map(|i| w[o * shape[1] + i] * x[i]).sum::<f64>()).collect()
    }

    fn norm(&self, name: &str, x: &[f64]) -> Vec<f64> {
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let g = &self.t[&format!("{name}.gain")].1;
        let b = &self.t[&format!("{name}.bias")].1;
        x.iter().enumerate().map(|(j, v)| (v - mean) / (var + 1e-5).sqrt() * g[j] + b[j]).collect()
    }

    pub fn probability(&self, x: &EncodedTrajectory) -> f64 {
        let rows = x.matrix.nrows();
        let mut h: Vec<Vec<f64>> = (0..rows)
            .map(|i| {
                let input: Vec<f64> = x.matrix.row(i).to_vec();
                let e = self.linear("embed", &input);
                e.iter().zip(&self.pos[i]).map(|(a, b)| a + b).collect()
            })
            .collect();
        let dh = self.d / self.heads;
        for l in 0..self.layers {
            let p = format!("layers.{l}");
            let a: Vec<Vec<f64>> = h.iter().map(|r| self.norm(&format!("{p}.ln1"), r)).collect();
            let q: Vec<Vec<f64>> = a.iter().map(|r| self.linear(&format!("{p}.attn.q"), r)).collect();
            let k: Vec<Vec<f64>> = a.iter().map(|r| self.linear(&format!("{p}.attn.k"), r)).collect();
            let v: Vec<Vec<f64>> = a.iter().map(|r| self.linear(&format!("{p}.attn.v"), r)).collect();
            let mut mixed = vec![vec![0.0; self.d]; rows];
            for hd in 0..self.heads {
                let cols = hd * dh..(hd + 1) * dh;
                for i in 0..rows {
                    let scores: Vec<f64> = (0..rows)
                        .map(|j| cols.clone().map(|c| q[i][c] * k[j][c]).sum::<f64>() / (dh as f64).sqrt())
                        .collect();
                    let m = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let w: Vec<f64> = scores.iter().map(|s| (s - m).exp()).collect();
                    let z: f64 = w.iter().sum();
                    for c in cols.clone() {
                        mixed[i][c] = (0..rows).map(|j| w[j] / z * v[j][c]).sum();
                    }
                }
            }
            for i in 0..rows {
                let o = self.linear(&format!("{p}.attn.o"), &mixed[i]);
                h[i].iter_mut().zip(o).for_each(|(a, b)| *a += b);
                let b = self.norm(&format!("{p}.ln2"), &h[i]);
                let f: Vec<f64> = self.linear(&format!("{p}.ff1"), &b).into_iter().map(|v| v.max(0.0)).collect();
                let f = self.linear(&format!("{p}.ff2"), &f);
                h[i].iter_mut().zip(f).for_each(|(a, b)| *a += b);
            }
        }
        let mut z: Vec<f64> = (0..self.d).map(|c| h.iter().map(|r| r[c]).sum::<f64>() / rows as f64).collect();
        z.extend(x.props.iter());
        let hidden: Vec<f64> = self.linear("head.fc1", &z).into_iter().map(|v| v.max(0.0)).collect();
        let logit = self.linear("head.fc2", &hidden)[0];
        1.0 / (1.0 + (-logit).exp())
    }
}
