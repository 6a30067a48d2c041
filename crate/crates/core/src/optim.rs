//! Adam with one learning rate per parameter group.

use ndarray::{Array2, Zip};

use crate::param::Param;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

#[derive(Debug, Clone)]
struct Moments {
    m: Array2<f64>,
    v: Array2<f64>,
}

/// Moment buffers are matched to parameters by position, so callers must
/// pass the same parameter list in the same order on every step.
#[derive(Debug, Clone)]
pub struct Adam {
    cfg: AdamConfig,
    step: i32,
    moments: Vec<Moments>,
}

impl Adam {
    pub fn new(cfg: AdamConfig) -> Self {
        Adam { cfg, step: 0, moments: Vec::new() }
    }

    pub fn steps(&self) -> i32 {
        self.step
    }

    /// One update over `params`; each entry pairs a tensor with its learning rate.
    pub fn step(&mut self, params: &mut [(&mut Param, f64)]) {
        if self.moments.is_empty() {
            self.moments = params
                .iter()
                .map(|(p, _)| Moments { m: Array2::zeros(p.value.raw_dim()), v: Array2::zeros(p.value.raw_dim()) })
                .collect();
        }
        assert_eq!(self.moments.len(), params.len(), "parameter list changed between steps");
        self.step += 1;
        let AdamConfig { beta1, beta2, eps } = self.cfg;
        let c1 = 1.0 - beta1.powi(self.step);
        let c2 = 1.0 - beta2.powi(self.step);
        for ((p, lr), mo) in params.iter_mut().zip(&mut self.moments) {
            let lr = *lr;
            Zip::from(&mut p.value)
                .and(&p.grad)
                .and(&mut mo.m)
                .and(&mut mo.v)
                .for_each(|w, &g, m, v| {
                    *m = beta1 * *m + (1.0 - beta1) * g;
                    *v = beta2 * *v + (1.0 - beta2) * g * g;
                    let m_hat = *m / c1;
                    let v_hat = *v / c2;
                    *w -= lr * m_hat / (v_hat.sqrt() + eps);
                });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn minimizes_quadratic() {
        let mut p = Param::new("x", array![[3.0, -2.0]]);
        let mut adam = Adam::new(AdamConfig::default());
        for _ in 0..2000 {
            p.grad = p.value.mapv(|x| 2.0 * x);
            adam.step(&mut [(&mut p, 0.05)]);
        }
        assert!(p.value.iter().all(|x| x.abs() < 1e-3), "{:?}", p.value);
    }

    #[test]
    fn zero_learning_rate_freezes() {
        let mut p = Param::new("x", array![[1.0]]);
        let mut adam = Adam::new(AdamConfig::default());
        p.grad = array![[5.0]];
        adam.step(&mut [(&mut p, 0.0)]);
        assert_eq!(p.value[[0, 0]], 1.0);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut p = Param::new("x", array![[1.0]]);
        let mut adam = Adam::new(AdamConfig::default());
        p.grad = array![[0.3]];
        adam.step(&mut [(&mut p, 0.1)]);
        assert!((p.value[[0, 0]] - 0.9).abs() < 1e-6);
    }
}
