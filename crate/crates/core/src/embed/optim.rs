//! Adam with an optional row-sparse update for the node embeddings.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::model::{Gradients, Params, Weights};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub epochs: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            epochs: 200,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate > 0.0
            && self.learning_rate.is_finite()
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.epsilon > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("invalid optimizer configuration {self:?}")))
        }
    }
}

pub(crate) struct Adam {
    cfg: OptimizerConfig,
    step: i32,
    m_h0: Array2<f64>,
    v_h0: Array2<f64>,
    m_w: Weights,
    v_w: Weights,
}

impl Adam {
    pub fn new(cfg: OptimizerConfig, params: &Params) -> Self {
        Self {
            cfg,
            step: 0,
            m_h0: Array2::zeros(params.h0.raw_dim()),
            v_h0: Array2::zeros(params.h0.raw_dim()),
            m_w: params.weights.zeros_like(),
            v_w: params.weights.zeros_like(),
        }
    }

    fn corrections(&mut self) -> (f64, f64) {
        self.step = self.step.saturating_add(1);
        (
            1.0 - self.cfg.beta1.powi(self.step),
            1.0 - self.cfg.beta2.powi(self.step),
        )
    }

    fn update(&self, p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64], c1: f64, c2: f64) {
        let OptimizerConfig {
            learning_rate: lr,
            beta1: b1,
            beta2: b2,
            epsilon: eps,
            ..
        } = self.cfg;
        for k in 0..p.len() {
            m[k] = b1 * m[k] + (1.0 - b1) * g[k];
            v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
            p[k] -= lr * (m[k] / c1) / ((v[k] / c2).sqrt() + eps);
        }
    }

    fn update_weights(&mut self, w: &mut Weights, g: &Weights, c1: f64, c2: f64) {
        let mut m = std::mem::replace(&mut self.m_w, g.zeros_like());
        let mut v = std::mem::replace(&mut self.v_w, g.zeros_like());
        for (((p, g), m), v) in w
            .slices_mut()
            .into_iter()
            .zip(g.slices())
            .zip(m.slices_mut())
            .zip(v.slices_mut())
        {
            self.update(p, g, m, v, c1, c2);
        }
        self.m_w = m;
        self.v_w = v;
    }

    /// Full update of every parameter.
    pub fn step(&mut self, params: &mut Params, grads: &Gradients) {
        let (c1, c2) = self.corrections();
        self.update_weights(&mut params.weights, &grads.weights, c1, c2);
        let p = params.h0.as_slice_mut().expect("standard layout");
        let g = grads.h0.as_slice().expect("standard layout");
        let mut m = std::mem::take(&mut self.m_h0);
        let mut v = std::mem::take(&mut self.v_h0);
        self.update(
            p,
            g,
            m.as_slice_mut().expect("standard layout"),
            v.as_slice_mut().expect("standard layout"),
            c1,
            c2,
        );
        self.m_h0 = m;
        self.v_h0 = v;
    }

    /// Update the weights and only the embedding rows `rows`, whose
    /// gradients are the rows of `local_h0_grad` in the same order. Moments
    /// of untouched rows are left as they are.
    pub fn step_rows(&mut self, params: &mut Params, weights_grad: &Weights, rows: &[usize], local_h0_grad: &Array2<f64>) {
        let (c1, c2) = self.corrections();
        self.update_weights(&mut params.weights, weights_grad, c1, c2);
        let mut m = std::mem::take(&mut self.m_h0);
        let mut v = std::mem::take(&mut self.v_h0);
        for (local, &row) in rows.iter().enumerate() {
            let g = local_h0_grad.row(local);
            let mut p_row = params.h0.row_mut(row);
            let mut m_row = m.row_mut(row);
            let mut v_row = v.row_mut(row);
            self.update(
                p_row.as_slice_mut().expect("contiguous row"),
                g.as_slice().expect("contiguous row"),
                m_row.as_slice_mut().expect("contiguous row"),
                v_row.as_slice_mut().expect("contiguous row"),
                c1,
                c2,
            );
        }
        self.m_h0 = m;
        self.v_h0 = v;
    }
}
