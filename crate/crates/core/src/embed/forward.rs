//! Forward pass, loss and reverse-mode gradients.
//!
//! Everything here works on a *local* graph: `h0` holds one row per local
//! node and all ids in the batch are local. Full-batch training passes the
//! whole graph; the mini-batch trainer passes an induced subgraph.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::model::{Gradients, HeadParams, ModelConfig, ModelMode, Weights};
use crate::btl::{log_sigmoid, sigmoid};
use crate::scale::edge_index::{aggregate_into, EdgeIndex};

/// The three loss terms and their weighted total.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub data_loss: f64,
    pub triangle_loss: f64,
    pub reg_loss: f64,
    pub total: f64,
}

/// Activations kept for the backward pass.
pub(crate) struct ForwardPass {
    /// `hs[l]` is the input to layer `l`; the last entry is the output.
    pub hs: Vec<Array2<f64>>,
    pub zs: Vec<Array2<f64>>,
    pub ms: Vec<Array2<f64>>,
}

impl ForwardPass {
    pub fn output(&self) -> &Array2<f64> {
        self.hs.last().expect("at least the input")
    }
}

fn weight_set(cfg: &ModelConfig, layer: usize) -> usize {
    if cfg.shared_weights {
        0
    } else {
        layer
    }
}

/// `h <- phi(W1 h_i + W2 sum_{j in N(i)} h_j)` applied `cfg.layers` times.
pub(crate) fn forward(cfg: &ModelConfig, w: &Weights, h0: ArrayView2<f64>, adj: &EdgeIndex) -> ForwardPass {
    let (n, d) = h0.dim();
    let mut hs = Vec::with_capacity(cfg.layers + 1);
    let mut zs = Vec::with_capacity(cfg.layers);
    let mut ms = Vec::with_capacity(cfg.layers);
    hs.push(h0.to_owned());
    for layer in 0..cfg.layers {
        let k = weight_set(cfg, layer);
        let h = &hs[layer];
        let mut m = Array2::zeros((n, d));
        aggregate_into(adj, h.view(), &mut m);
        let mut z = h.dot(&w.w1[k].t());
        z += &m.dot(&w.w2[k].t());
        let next = z.mapv(|v| cfg.nonlinearity.apply(v));
        zs.push(z);
        ms.push(m);
        hs.push(next);
    }
    ForwardPass { hs, zs, ms }
}

/// Per-node projections of the final embeddings that make pair predictions
/// cheap: `s = H v` for the linear head, `P = H A^T` for the MLP head.
pub(crate) enum NodeProjection<'a> {
    Linear { s: Array1<f64> },
    Mlp {
        p: Array2<f64>,
        b: &'a Array1<f64>,
        c: &'a Array1<f64>,
    },
}

impl<'a> NodeProjection<'a> {
    pub fn new(head: &'a HeadParams, h: ArrayView2<f64>) -> Self {
        match head {
            HeadParams::Linear { v } => NodeProjection::Linear { s: h.dot(v) },
            HeadParams::Mlp { a, b, c } => NodeProjection::Mlp {
                p: h.dot(&a.t()),
                b,
                c,
            },
        }
    }

    /// Predicted log-ratio `t_ij`; `t_ji = -t_ij` holds bit for bit.
    pub fn pair(&self, i: usize, j: usize) -> f64 {
        match self {
            NodeProjection::Linear { s } => s[i] - s[j],
            NodeProjection::Mlp { p, b, c } => {
                let (pi, pj) = (p.row(i), p.row(j));
                let mut acc = 0.0;
                for k in 0..b.len() {
                    let q = pi[k] - pj[k];
                    acc += c[k] * ((b[k] + q).tanh() - (b[k] - q).tanh());
                }
                0.5 * acc
            }
        }
    }
}

/// Gradient accumulators matching [`NodeProjection`].
enum ProjectionGrad {
    Linear { ds: Array1<f64> },
    Mlp { dp: Array2<f64>, db: Array1<f64>, dc: Array1<f64> },
}

impl ProjectionGrad {
    fn new(proj: &NodeProjection) -> Self {
        match proj {
            NodeProjection::Linear { s } => ProjectionGrad::Linear {
                ds: Array1::zeros(s.len()),
            },
            NodeProjection::Mlp { p, b, .. } => ProjectionGrad::Mlp {
                dp: Array2::zeros(p.raw_dim()),
                db: Array1::zeros(b.len()),
                dc: Array1::zeros(b.len()),
            },
        }
    }

    /// Accumulate `g * d t_ij`.
    fn add_pair(&mut self, proj: &NodeProjection, i: usize, j: usize, g: f64) {
        match (self, proj) {
            (ProjectionGrad::Linear { ds }, NodeProjection::Linear { .. }) => {
                ds[i] += g;
                ds[j] -= g;
            }
            (ProjectionGrad::Mlp { dp, db, dc }, NodeProjection::Mlp { p, b, c }) => {
                let half = 0.5 * g;
                for k in 0..b.len() {
                    let q = p[(i, k)] - p[(j, k)];
                    let ap = (b[k] + q).tanh();
                    let am = (b[k] - q).tanh();
                    dc[k] += half * (ap - am);
                    let dup = half * c[k] * (1.0 - ap * ap);
                    let dum = -half * c[k] * (1.0 - am * am);
                    db[k] += dup + dum;
                    let dq = dup - dum;
                    dp[(i, k)] += dq;
                    dp[(j, k)] -= dq;
                }
            }
            _ => unreachable!("projection and gradient share a head kind"),
        }
    }

    /// Push the node-level gradient back to `dH` and the head parameters.
    fn finish(self, head: &HeadParams, h: &Array2<f64>, dhead: &mut HeadParams) -> Array2<f64> {
        match (self, head, dhead) {
            (ProjectionGrad::Linear { ds }, HeadParams::Linear { v }, HeadParams::Linear { v: dv }) => {
                *dv += &h.t().dot(&ds);
                let ds_col = ds.insert_axis(Axis(1));
                let v_row = v.view().insert_axis(Axis(0));
                ds_col.dot(&v_row)
            }
            (
                ProjectionGrad::Mlp { dp, db, dc },
                HeadParams::Mlp { a, .. },
                HeadParams::Mlp { a: da, b: gb, c: gc },
            ) => {
                *da += &dp.t().dot(h);
                *gb += &db;
                *gc += &dc;
                dp.dot(a)
            }
            _ => unreachable!("parameters and gradient share a head kind"),
        }
    }
}

/// One evaluation problem on a local graph.
pub(crate) struct Batch<'a> {
    /// Symmetrized neighbourhoods over local ids.
    pub adj: &'a EdgeIndex,
    /// `(i, j, target)`: log-ratio in LLS mode, win count in BTL mode.
    pub edges: &'a [(usize, usize, f64)],
    /// Multiplier on the data loss (mini-batch rescaling).
    pub data_scale: f64,
    pub triples: &'a [(usize, usize, usize)],
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Loss and, when requested, the gradient with respect to `h0` and all
/// weights.
pub(crate) fn evaluate(
    cfg: &ModelConfig,
    w: &Weights,
    h0: ArrayView2<f64>,
    batch: &Batch,
    with_grad: bool,
) -> (LossBreakdown, Option<Gradients>) {
    let fp = forward(cfg, w, h0, batch.adj);
    let h = fp.output();
    let proj = NodeProjection::new(&w.head, h.view());
    let mut pg = with_grad.then(|| ProjectionGrad::new(&proj));

    let mut data = 0.0;
    for &(i, j, y) in batch.edges {
        let t = proj.pair(i, j);
        let g = match cfg.mode {
            ModelMode::Lls => {
                let r = t - y;
                data += r * r;
                2.0 * r
            }
            ModelMode::Btl => {
                data -= y * log_sigmoid(t);
                -y * sigmoid(-t)
            }
        };
        if let Some(pg) = pg.as_mut() {
            pg.add_pair(&proj, i, j, batch.data_scale * g);
        }
    }
    data *= batch.data_scale;

    let mut triangle = 0.0;
    if !batch.triples.is_empty() {
        let inv = 1.0 / batch.triples.len() as f64;
        for &(i, j, k) in batch.triples {
            let defect = proj.pair(i, j) + proj.pair(j, k) - proj.pair(i, k);
            triangle += defect.abs();
            if let Some(pg) = pg.as_mut() {
                let g = cfg.lambda_triangle * inv * sign(defect);
                if g != 0.0 {
                    pg.add_pair(&proj, i, j, g);
                    pg.add_pair(&proj, j, k, g);
                    pg.add_pair(&proj, i, k, -g);
                }
            }
        }
        triangle *= inv;
    }

    let reg = w.reg_loss();
    let loss = LossBreakdown {
        data_loss: data,
        triangle_loss: triangle,
        reg_loss: reg,
        total: data + cfg.lambda_triangle * triangle + cfg.lambda_reg * reg,
    };
    let Some(pg) = pg else {
        return (loss, None);
    };

    let mut gw = w.zeros_like();
    let mut dh = pg.finish(&w.head, h, &mut gw.head);
    let (n, d) = h0.dim();
    let mut scratch = Array2::zeros((n, d));
    for layer in (0..cfg.layers).rev() {
        let k = weight_set(cfg, layer);
        let mut dz = dh;
        ndarray::Zip::from(&mut dz)
            .and(&fp.zs[layer])
            .and(&fp.hs[layer + 1])
            .for_each(|g, &z, &hv| *g *= cfg.nonlinearity.derivative(z, hv));
        gw.w1[k] += &dz.t().dot(&fp.hs[layer]);
        gw.w2[k] += &dz.t().dot(&fp.ms[layer]);
        // dH = dZ W1 + A (dZ W2), A symmetric.
        let through_neighbors = dz.dot(&w.w2[k]);
        aggregate_into(batch.adj, through_neighbors.view(), &mut scratch);
        dh = dz.dot(&w.w1[k]);
        dh += &scratch;
    }
    w.add_reg_gradient(&mut gw, cfg.lambda_reg);
    (loss, Some(Gradients { h0: dh, weights: gw }))
}
