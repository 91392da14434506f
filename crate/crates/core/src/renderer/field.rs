//! The density/color field network.
//!
//! Architecture (desk-scale shrink of the usual 8x256 coordinate MLP, sizes
//! configurable): encoded position -> `hidden_layers` ReLU layers of `width`
//! -> density head (shifted softplus, guaranteeing sigma >= 0) and a linear
//! bottleneck; [bottleneck, encoded direction] -> one ReLU layer -> RGB head
//! (sigmoid, guaranteeing colors in [0, 1]).

use super::encoding::{encode_into, encoded_len, EncodingConfig};
use super::FieldEval;
use crate::nn::{relu, sigmoid, softplus, Linear, LinearGrad};
use ndarray::{Array1, Array2};
use rand::Rng;

/// Density preactivation shift: softplus(x - SHIFT) keeps initial densities
/// small so early renders stay near the background.
const DENSITY_SHIFT: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldConfig {
    pub hidden_layers: usize,
    pub width: usize,
    pub encoding: EncodingConfig,
}

impl Default for FieldConfig {
    fn default() -> Self {
        FieldConfig {
            hidden_layers: 4,
            width: 128,
            encoding: EncodingConfig::default(),
        }
    }
}

impl FieldConfig {
    pub fn pos_in_dim(&self) -> usize {
        encoded_len(3, self.encoding.num_freqs_position, self.encoding.include_input)
    }

    pub fn dir_in_dim(&self) -> usize {
        encoded_len(3, self.encoding.num_freqs_direction, self.encoding.include_input)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeuralField {
    pub cfg: FieldConfig,
    pub pos_layers: Vec<Linear>,
    pub sigma_head: Linear,
    pub bottleneck: Linear,
    pub dir_layer: Linear,
    pub rgb_head: Linear,
}

/// Everything the backward pass needs: layer inputs plus head preactivations.
pub struct FieldCache {
    enc_x: Array2<f64>,
    /// Activations after each position layer; `acts[i]` is the input of
    /// layer `i + 1`.
    acts: Vec<Array2<f64>>,
    dir_input: Array2<f64>,
    dir_act: Array2<f64>,
    sigma_pre: Array1<f64>,
    rgb_out: Array2<f64>,
}

#[derive(Debug, Clone)]
pub struct FieldGrads {
    pub pos_layers: Vec<LinearGrad>,
    pub sigma_head: LinearGrad,
    pub bottleneck: LinearGrad,
    pub dir_layer: LinearGrad,
    pub rgb_head: LinearGrad,
}

impl NeuralField {
    pub fn init(cfg: FieldConfig, rng: &mut impl Rng) -> Self {
        assert!(cfg.hidden_layers >= 1);
        let mut pos_layers = Vec::with_capacity(cfg.hidden_layers);
        let mut in_dim = cfg.pos_in_dim();
        for _ in 0..cfg.hidden_layers {
            pos_layers.push(Linear::glorot(in_dim, cfg.width, rng));
            in_dim = cfg.width;
        }
        NeuralField {
            sigma_head: Linear::glorot(cfg.width, 1, rng),
            bottleneck: Linear::glorot(cfg.width, cfg.width, rng),
            dir_layer: Linear::glorot(cfg.width + cfg.dir_in_dim(), cfg.width, rng),
            rgb_head: Linear::glorot(cfg.width, 3, rng),
            pos_layers,
            cfg,
        }
    }

    fn encode_batch(values: &Array2<f64>, num_freqs: usize, include_input: bool) -> Array2<f64> {
        let n = values.nrows();
        let dim = encoded_len(3, num_freqs, include_input);
        let mut data = Vec::with_capacity(n * dim);
        for row in values.rows() {
            encode_into(&[row[0], row[1], row[2]], num_freqs, include_input, &mut data);
        }
        Array2::from_shape_vec((n, dim), data).expect("encoding shape")
    }

    /// Forward pass with cached intermediates for backprop.
    pub fn forward(
        &self,
        positions: &Array2<f64>,
        dirs: &Array2<f64>,
    ) -> (Array1<f64>, Array2<f64>, FieldCache) {
        assert_eq!(positions.nrows(), dirs.nrows());
        let enc = &self.cfg.encoding;
        let enc_x = Self::encode_batch(positions, enc.num_freqs_position, enc.include_input);
        let enc_d = Self::encode_batch(dirs, enc.num_freqs_direction, enc.include_input);

        let mut acts = Vec::with_capacity(self.pos_layers.len());
        let mut h = enc_x.clone();
        for layer in &self.pos_layers {
            h = layer.forward(&h).mapv(relu);
            acts.push(h.clone());
        }
        let sigma_pre = self.sigma_head.forward(&h).column(0).to_owned();
        let sigma = sigma_pre.mapv(|v| softplus(v - DENSITY_SHIFT));

        let bott = self.bottleneck.forward(&h);
        let dir_input = ndarray::concatenate(ndarray::Axis(1), &[bott.view(), enc_d.view()])
            .expect("concat bottleneck and direction encoding");
        let dir_act = self.dir_layer.forward(&dir_input).mapv(relu);
        let rgb_out = self.rgb_head.forward(&dir_act).mapv(sigmoid);

        (
            sigma,
            rgb_out.clone(),
            FieldCache {
                enc_x,
                acts,
                dir_input,
                dir_act,
                sigma_pre,
                rgb_out,
            },
        )
    }

    /// Backward pass. `d_sigma (n)`, `d_rgb (n, 3)` are gradients at the
    /// field outputs; returns parameter gradients (input gradients are not
    /// needed: sample positions are not optimized).
    pub fn backward(&self, cache: &FieldCache, d_sigma: &Array1<f64>, d_rgb: &Array2<f64>) -> FieldGrads {
        let n = d_sigma.len();
        let width = self.cfg.width;

        // Heads.
        let d_rgb_pre = {
            let mut g = d_rgb.clone();
            g.zip_mut_with(&cache.rgb_out, |gv, &o| *gv *= o * (1.0 - o));
            g
        };
        let (rgb_grad, d_dir_act) = self.rgb_head.backward(&cache.dir_act, &d_rgb_pre);

        let d_dir_pre = {
            let mut g = d_dir_act;
            g.zip_mut_with(&cache.dir_act, |gv, &a| {
                if a <= 0.0 {
                    *gv = 0.0;
                }
            });
            g
        };
        let (dir_grad, d_dir_input) = self.dir_layer.backward(&cache.dir_input, &d_dir_pre);
        let d_bott = d_dir_input.slice(ndarray::s![.., 0..width]).to_owned();
        let last_act = cache.acts.last().expect("at least one position layer");
        let (bott_grad, d_h_from_bott) = self.bottleneck.backward(last_act, &d_bott);

        let d_sigma_pre = Array2::from_shape_fn((n, 1), |(i, _)| {
            d_sigma[i] * sigmoid(cache.sigma_pre[i] - DENSITY_SHIFT)
        });
        let (sigma_grad, d_h_from_sigma) = self.sigma_head.backward(last_act, &d_sigma_pre);

        // Position trunk, walked backwards.
        let mut d_act = d_h_from_bott + d_h_from_sigma;
        let mut pos_grads: Vec<Option<LinearGrad>> = (0..self.pos_layers.len()).map(|_| None).collect();
        for idx in (0..self.pos_layers.len()).rev() {
            let act = &cache.acts[idx];
            let mut d_pre = d_act;
            d_pre.zip_mut_with(act, |gv, &a| {
                if a <= 0.0 {
                    *gv = 0.0;
                }
            });
            let input = if idx == 0 { &cache.enc_x } else { &cache.acts[idx - 1] };
            if idx == 0 {
                pos_grads[idx] = Some(self.pos_layers[idx].backward_params(input, &d_pre));
                d_act = Array2::zeros((0, 0));
            } else {
                let (grad, d_input) = self.pos_layers[idx].backward(input, &d_pre);
                pos_grads[idx] = Some(grad);
                d_act = d_input;
            }
        }

        FieldGrads {
            pos_layers: pos_grads.into_iter().map(|g| g.unwrap()).collect(),
            sigma_head: sigma_grad,
            bottleneck: bott_grad,
            dir_layer: dir_grad,
            rgb_head: rgb_grad,
        }
    }

    /// Trainable tensors in a fixed order (weights then bias per layer),
    /// matching [`FieldGrads::slices`] and the optimizer/checkpoint layout.
    pub fn param_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for i in 0..self.pos_layers.len() {
            names.push(format!("pos{i}.w"));
            names.push(format!("pos{i}.b"));
        }
        for head in ["sigma", "bottleneck", "dir", "rgb"] {
            names.push(format!("{head}.w"));
            names.push(format!("{head}.b"));
        }
        names
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for layer in &mut self.pos_layers {
            out.push(layer.w.as_slice_mut().expect("contiguous"));
            out.push(layer.b.as_slice_mut().expect("contiguous"));
        }
        for layer in [
            &mut self.sigma_head,
            &mut self.bottleneck,
            &mut self.dir_layer,
            &mut self.rgb_head,
        ] {
            out.push(layer.w.as_slice_mut().expect("contiguous"));
            out.push(layer.b.as_slice_mut().expect("contiguous"));
        }
        out
    }

    pub fn param_slices(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for layer in &self.pos_layers {
            out.push(layer.w.as_slice().expect("contiguous"));
            out.push(layer.b.as_slice().expect("contiguous"));
        }
        for layer in [&self.sigma_head, &self.bottleneck, &self.dir_layer, &self.rgb_head] {
            out.push(layer.w.as_slice().expect("contiguous"));
            out.push(layer.b.as_slice().expect("contiguous"));
        }
        out
    }
}

impl FieldGrads {
    pub fn zeros_like(field: &NeuralField) -> Self {
        FieldGrads {
            pos_layers: field.pos_layers.iter().map(|l| l.grad_zeros()).collect(),
            sigma_head: field.sigma_head.grad_zeros(),
            bottleneck: field.bottleneck.grad_zeros(),
            dir_layer: field.dir_layer.grad_zeros(),
            rgb_head: field.rgb_head.grad_zeros(),
        }
    }

    pub fn accumulate(&mut self, other: &FieldGrads) {
        for (a, b) in self.pos_layers.iter_mut().zip(&other.pos_layers) {
            a.accumulate(b);
        }
        self.sigma_head.accumulate(&other.sigma_head);
        self.bottleneck.accumulate(&other.bottleneck);
        self.dir_layer.accumulate(&other.dir_layer);
        self.rgb_head.accumulate(&other.rgb_head);
    }

    /// Flat gradient slices in the same order as the field's parameters.
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for g in &self.pos_layers {
            out.push(g.dw.as_slice().expect("contiguous"));
            out.push(g.db.as_slice().expect("contiguous"));
        }
        for g in [&self.sigma_head, &self.bottleneck, &self.dir_layer, &self.rgb_head] {
            out.push(g.dw.as_slice().expect("contiguous"));
            out.push(g.db.as_slice().expect("contiguous"));
        }
        out
    }
}

impl FieldEval for NeuralField {
    fn eval(&self, positions: &Array2<f64>, dirs: &Array2<f64>) -> (Array1<f64>, Array2<f64>) {
        let (sigma, rgb, _) = self.forward(positions, dirs);
        (sigma, rgb)
    }
}
