//! Bias-corrected Adam.

use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use super::params::ParamStore;
use super::tape::ParamGrads;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    first: Vec<Matrix>,
    second: Vec<Matrix>,
}

impl AdamState {
    pub fn new(config: AdamConfig, store: &ParamStore) -> Self {
        let zeros: Vec<Matrix> = store
            .entries()
            .iter()
            .map(|e| Matrix::zeros(e.value.rows(), e.value.cols()))
            .collect();
        AdamState {
            config,
            step: 0,
            first: zeros.clone(),
            second: zeros,
        }
    }

    /// One update of every parameter.
    pub fn step(&mut self, store: &mut ParamStore, grads: &ParamGrads) -> Result<()> {
        let all = vec![true; store.len()];
        self.step_masked(store, grads, &all)
    }

    /// One update of the parameters whose `trainable` flag is set; the
    /// others keep both their values and moment estimates.
    pub fn step_masked(
        &mut self,
        store: &mut ParamStore,
        grads: &ParamGrads,
        trainable: &[bool],
    ) -> Result<()> {
        if grads.len() != store.len() || self.first.len() != store.len() || trainable.len() != store.len()
        {
            return Err(Error::shape(
                "adam step",
                format!(
                    "{} parameters, {} gradients, {} moment slots, {} mask entries",
                    store.len(),
                    grads.len(),
                    self.first.len(),
                    trainable.len()
                ),
            ));
        }
        for (id, g) in grads.iter() {
            if store.get(id).shape() != g.shape() || self.first[id.0].shape() != g.shape() {
                return Err(Error::shape(
                    "adam step",
                    format!("parameter {} shape differs from its gradient", store.name(id)),
                ));
            }
        }
        self.step += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
        } = self.config;
        let t = self.step as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        for (id, g) in grads.iter() {
            if !trainable[id.0] {
                continue;
            }
            let m = self.first[id.0].as_mut_slice();
            let v = self.second[id.0].as_mut_slice();
            let p = store.get_mut(id).as_mut_slice();
            for k in 0..p.len() {
                let gk = g.as_slice()[k];
                m[k] = beta1 * m[k] + (1.0 - beta1) * gk;
                v[k] = beta2 * v[k] + (1.0 - beta2) * gk * gk;
                let m_hat = m[k] / c1;
                let v_hat = v[k] / c2;
                p[k] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::params::ParamId;

    fn scalar_store(v: f64) -> ParamStore {
        let mut s = ParamStore::new();
        s.add("p", Matrix::filled(1, 1, v));
        s
    }

    fn grads_of(store: &ParamStore, g: f64) -> ParamGrads {
        let mut grads = ParamGrads::zeros_like(store);
        grads.get_mut(ParamId(0)).set(0, 0, g);
        grads
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut store = scalar_store(1.25);
        let mut adam = AdamState::new(AdamConfig::default(), &store);
        for _ in 0..5 {
            let g = grads_of(&store, 0.0);
            adam.step(&mut store, &g).unwrap();
        }
        assert_eq!(store.get(ParamId(0)).get(0, 0), 1.25);
    }

    #[test]
    fn three_step_hand_trace() {
        // Hand trace for constant g = 0.5, lr = 1e-3, β1 = 0.9, β2 = 0.999:
        //   t=1: m = 0.05,      v = 0.00025,        m̂ = 0.5, v̂ = 0.25
        //   t=2: m = 0.095,     v = 0.00049975,     m̂ = 0.5, v̂ = 0.25
        //   t=3: m = 0.1355,    v = 0.000749250..., m̂ = 0.5, v̂ = 0.25
        // so every step moves by lr·0.5/(0.5 + 1e-8).
        let mut store = scalar_store(0.0);
        let mut adam = AdamState::new(AdamConfig::default(), &store);
        let step = 1e-3 * 0.5 / (0.5 + 1e-8);
        let mut expected = 0.0;
        for _ in 0..3 {
            let g = grads_of(&store, 0.5);
            adam.step(&mut store, &g).unwrap();
            expected -= step;
            assert!((store.get(ParamId(0)).get(0, 0) - expected).abs() < 1e-15);
        }
        assert!((adam.first[0].get(0, 0) - 0.1355).abs() < 1e-15);
        assert!((adam.second[0].get(0, 0) - 0.25 * (1.0 - 0.999f64.powi(3))).abs() < 1e-15);
    }

    #[test]
    fn identical_inputs_identical_updates() {
        let mut a = scalar_store(0.3);
        let mut b = scalar_store(0.3);
        let mut sa = AdamState::new(AdamConfig::default(), &a);
        let mut sb = AdamState::new(AdamConfig::default(), &b);
        for g in [0.1, -0.4, 2.0] {
            let ga = grads_of(&a, g);
            sa.step(&mut a, &ga).unwrap();
            let gb = grads_of(&b, g);
            sb.step(&mut b, &gb).unwrap();
        }
        assert_eq!(a, b);
    }

    #[test]
    fn masked_params_untouched() {
        let mut store = scalar_store(1.0);
        store.add("q", Matrix::filled(1, 1, 1.0));
        let mut adam = AdamState::new(AdamConfig::default(), &store);
        let mut grads = ParamGrads::zeros_like(&store);
        grads.get_mut(ParamId(0)).set(0, 0, 1.0);
        grads.get_mut(ParamId(1)).set(0, 0, 1.0);
        adam.step_masked(&mut store, &grads, &[true, false]).unwrap();
        assert!(store.get(ParamId(0)).get(0, 0) < 1.0);
        assert_eq!(store.get(ParamId(1)).get(0, 0), 1.0);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut store = scalar_store(1.0);
        let mut adam = AdamState::new(AdamConfig::default(), &store);
        let other = scalar_store(0.0);
        let mut two = other.clone();
        two.add("x", Matrix::zeros(2, 2));
        assert!(adam.step(&mut store, &ParamGrads::zeros_like(&two)).is_err());
    }
}
