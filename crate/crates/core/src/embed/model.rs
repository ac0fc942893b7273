//! Configuration, parameter containers and initialization.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pcm::ObservationMode;

/// Cap on the number of triangle triples sampled per epoch.
pub const MAX_TRIANGLE_SAMPLES: usize = 200_000;

/// Standard deviation of the initial node embeddings.
pub const H0_STD: f64 = 0.1;
/// Standard deviation of the noise added to the structured weight initializers.
pub const WEIGHT_NOISE_STD: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Nonlinearity {
    Relu,
    Tanh,
    /// No nonlinearity; the model becomes a linear filter of the embeddings.
    Identity,
}

impl Nonlinearity {
    pub(crate) fn apply(self, z: f64) -> f64 {
        match self {
            Nonlinearity::Relu => z.max(0.0),
            Nonlinearity::Tanh => z.tanh(),
            Nonlinearity::Identity => z,
        }
    }

    /// Derivative given the pre-activation `z` and output `h = phi(z)`;
    /// the ReLU subgradient at 0 is 0.
    pub(crate) fn derivative(self, z: f64, h: f64) -> f64 {
        match self {
            Nonlinearity::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Nonlinearity::Tanh => 1.0 - h * h,
            Nonlinearity::Identity => 1.0,
        }
    }
}

/// Edge head mapping two node embeddings to a predicted log-ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadKind {
    /// `t_ij = v . (h_i - h_j)`.
    LinearDifference,
    /// `t_ij = (f(h_i - h_j) - f(h_j - h_i)) / 2` with a one-hidden-layer
    /// tanh network `f(u) = c . tanh(A u + b)`.
    MlpDifference { hidden: usize },
}

/// Which data loss the model is trained with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelMode {
    /// Binary cross-entropy on `sigma(t_ij)` against win counts.
    Btl,
    /// Squared error against observed log-ratios.
    Lls,
}

impl ModelMode {
    pub fn observation_mode(self) -> ObservationMode {
        match self {
            ModelMode::Btl => ObservationMode::BinaryCounts,
            ModelMode::Lls => ObservationMode::Cardinal,
        }
    }

    pub fn for_observations(mode: ObservationMode) -> Self {
        match mode {
            ObservationMode::BinaryCounts => ModelMode::Btl,
            ObservationMode::Cardinal => ModelMode::Lls,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    /// Embedding dimension.
    pub d: usize,
    /// Number of message-passing layers.
    pub layers: usize,
    pub nonlinearity: Nonlinearity,
    pub head: HeadKind,
    pub mode: ModelMode,
    pub lambda_triangle: f64,
    pub lambda_reg: f64,
    /// Triples per epoch; `None` means `min(10 |edges|, 200 000)`.
    pub triangle_samples: Option<usize>,
    /// One `(W1, W2)` pair reused by every layer (`true`) or one per layer.
    pub shared_weights: bool,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            d: 32,
            layers: 2,
            nonlinearity: Nonlinearity::Relu,
            head: HeadKind::LinearDifference,
            mode: ModelMode::Lls,
            lambda_triangle: 1.0,
            lambda_reg: 1e-4,
            triangle_samples: None,
            shared_weights: true,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        if self.d == 0 {
            return bad("embedding dimension must be at least 1".into());
        }
        if self.layers == 0 {
            return bad("at least one message-passing layer is required".into());
        }
        if !(self.lambda_triangle >= 0.0 && self.lambda_triangle.is_finite()) {
            return bad(format!("lambda_triangle must be >= 0, got {}", self.lambda_triangle));
        }
        if !(self.lambda_reg >= 0.0 && self.lambda_reg.is_finite()) {
            return bad(format!("lambda_reg must be >= 0, got {}", self.lambda_reg));
        }
        if let HeadKind::MlpDifference { hidden: 0 } = self.head {
            return bad("MLP head needs a hidden width of at least 1".into());
        }
        Ok(())
    }

    /// Triples sampled per epoch for `edge_count` observed entries.
    pub fn triangle_count(&self, edge_count: usize) -> usize {
        self.triangle_samples
            .unwrap_or_else(|| (10 * edge_count).min(MAX_TRIANGLE_SAMPLES))
    }

    /// Number of distinct `(W1, W2)` pairs.
    pub fn weight_sets(&self) -> usize {
        if self.shared_weights {
            1
        } else {
            self.layers
        }
    }
}

/// Edge-head parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadParams {
    Linear { v: Array1<f64> },
    /// `f(u) = c . tanh(a u + b)`; an output bias would cancel in the
    /// antisymmetrized head and is therefore omitted.
    Mlp { a: Array2<f64>, b: Array1<f64>, c: Array1<f64> },
}

/// All parameters except the node embeddings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub w1: Vec<Array2<f64>>,
    pub w2: Vec<Array2<f64>>,
    pub head: HeadParams,
}

impl Weights {
    pub fn zeros_like(&self) -> Self {
        Self {
            w1: self.w1.iter().map(|w| Array2::zeros(w.raw_dim())).collect(),
            w2: self.w2.iter().map(|w| Array2::zeros(w.raw_dim())).collect(),
            head: match &self.head {
                HeadParams::Linear { v } => HeadParams::Linear {
                    v: Array1::zeros(v.len()),
                },
                HeadParams::Mlp { a, b, c } => HeadParams::Mlp {
                    a: Array2::zeros(a.raw_dim()),
                    b: Array1::zeros(b.len()),
                    c: Array1::zeros(c.len()),
                },
            },
        }
    }

    /// Every parameter array as a flat slice, in a fixed order.
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for w in self.w1.iter().chain(&self.w2) {
            out.push(w.as_slice().expect("standard layout"));
        }
        match &self.head {
            HeadParams::Linear { v } => out.push(v.as_slice().expect("standard layout")),
            HeadParams::Mlp { a, b, c } => {
                out.push(a.as_slice().expect("standard layout"));
                out.push(b.as_slice().expect("standard layout"));
                out.push(c.as_slice().expect("standard layout"));
            }
        }
        out
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for w in self.w1.iter_mut().chain(self.w2.iter_mut()) {
            out.push(w.as_slice_mut().expect("standard layout"));
        }
        match &mut self.head {
            HeadParams::Linear { v } => out.push(v.as_slice_mut().expect("standard layout")),
            HeadParams::Mlp { a, b, c } => {
                out.push(a.as_slice_mut().expect("standard layout"));
                out.push(b.as_slice_mut().expect("standard layout"));
                out.push(c.as_slice_mut().expect("standard layout"));
            }
        }
        out
    }

    /// Regularizer: squared Frobenius norms of `W1`, `W2` and the head
    /// weights (`v`, or `A` and `c`); biases are not penalized.
    pub fn reg_loss(&self) -> f64 {
        let sq = |s: &[f64]| s.iter().map(|v| v * v).sum::<f64>();
        let mut total: f64 = self
            .w1
            .iter()
            .chain(&self.w2)
            .map(|w| sq(w.as_slice().expect("standard layout")))
            .sum();
        total += match &self.head {
            HeadParams::Linear { v } => sq(v.as_slice().expect("standard layout")),
            HeadParams::Mlp { a, c, .. } => {
                sq(a.as_slice().expect("standard layout")) + sq(c.as_slice().expect("standard layout"))
            }
        };
        total
    }

    /// Add `scale * d(reg_loss)` to `grad`.
    pub(crate) fn add_reg_gradient(&self, grad: &mut Weights, scale: f64) {
        for (g, w) in grad.w1.iter_mut().zip(&self.w1) {
            g.scaled_add(2.0 * scale, w);
        }
        for (g, w) in grad.w2.iter_mut().zip(&self.w2) {
            g.scaled_add(2.0 * scale, w);
        }
        match (&mut grad.head, &self.head) {
            (HeadParams::Linear { v: gv }, HeadParams::Linear { v }) => gv.scaled_add(2.0 * scale, v),
            (HeadParams::Mlp { a: ga, c: gc, .. }, HeadParams::Mlp { a, c, .. }) => {
                ga.scaled_add(2.0 * scale, a);
                gc.scaled_add(2.0 * scale, c);
            }
            _ => unreachable!("gradient and parameters share a head kind"),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|v| v.is_finite()))
    }
}

/// Node embeddings plus weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    /// Initial embeddings, one row per node.
    pub h0: Array2<f64>,
    pub weights: Weights,
}

/// Gradients share the parameter layout.
pub type Gradients = Params;

impl Params {
    /// Random initialization for `n` nodes.
    ///
    /// `H0 ~ N(0, 0.1^2)`, `W1 = I + noise`, `W2 = I / 2 + noise`,
    /// `v = 1 + noise` (noise std 0.01); MLP head weights use
    /// fan-average normal scaling with zero biases.
    pub fn init<R: Rng + ?Sized>(n: usize, cfg: &ModelConfig, rng: &mut R) -> Self {
        let d = cfg.d;
        let h0_dist = Normal::new(0.0, H0_STD).expect("valid std");
        let noise = Normal::new(0.0, WEIGHT_NOISE_STD).expect("valid std");
        let h0 = Array2::from_shape_simple_fn((n, d), || h0_dist.sample(rng));
        let structured = |diag: f64, rng: &mut R| {
            Array2::from_shape_fn((d, d), |(r, c)| {
                let base = if r == c { diag } else { 0.0 };
                base + noise.sample(rng)
            })
        };
        let sets = cfg.weight_sets();
        let w1: Vec<Array2<f64>> = (0..sets).map(|_| structured(1.0, rng)).collect();
        let w2: Vec<Array2<f64>> = (0..sets).map(|_| structured(0.5, rng)).collect();
        let head = match cfg.head {
            HeadKind::LinearDifference => HeadParams::Linear {
                v: Array1::from_shape_simple_fn(d, || 1.0 + noise.sample(rng)),
            },
            HeadKind::MlpDifference { hidden } => {
                let a_dist = Normal::new(0.0, (2.0 / (d + hidden) as f64).sqrt()).expect("valid std");
                let c_dist = Normal::new(0.0, (2.0 / (hidden + 1) as f64).sqrt()).expect("valid std");
                HeadParams::Mlp {
                    a: Array2::from_shape_simple_fn((hidden, d), || a_dist.sample(rng)),
                    b: Array1::zeros(hidden),
                    c: Array1::from_shape_simple_fn(hidden, || c_dist.sample(rng)),
                }
            }
        };
        Self {
            h0,
            weights: Weights { w1, w2, head },
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            h0: Array2::zeros(self.h0.raw_dim()),
            weights: self.weights.zeros_like(),
        }
    }

    pub fn n(&self) -> usize {
        self.h0.nrows()
    }

    pub fn is_finite(&self) -> bool {
        self.h0.iter().all(|v| v.is_finite()) && self.weights.is_finite()
    }

    /// Check that the arrays have the shapes `cfg` implies for `n` nodes.
    pub fn check_shapes(&self, cfg: &ModelConfig) -> Result<()> {
        let d = cfg.d;
        let bad = |what: &str| Err(Error::InvalidInput(format!("parameter shape mismatch: {what}")));
        if self.h0.ncols() != d {
            return bad("h0 columns");
        }
        let sets = cfg.weight_sets();
        if self.weights.w1.len() != sets || self.weights.w2.len() != sets {
            return bad("number of weight sets");
        }
        if self.weights.w1.iter().chain(&self.weights.w2).any(|w| w.dim() != (d, d)) {
            return bad("W1/W2 must be d x d");
        }
        match (&self.weights.head, cfg.head) {
            (HeadParams::Linear { v }, HeadKind::LinearDifference) if v.len() == d => Ok(()),
            (HeadParams::Mlp { a, b, c }, HeadKind::MlpDifference { hidden })
                if a.dim() == (hidden, d) && b.len() == hidden && c.len() == hidden =>
            {
                Ok(())
            }
            _ => bad("edge head"),
        }
    }
}
