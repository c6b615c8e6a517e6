//! Adam with bias correction.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First and second moment estimates for one parameter tensor.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Moments {
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Moments {
    pub fn new(len: usize) -> Self {
        Moments {
            m: vec![0.0; len],
            v: vec![0.0; len],
        }
    }
}

/// One Adam update of `params` in place. `t` is the 1-based step count.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut Moments, cfg: &AdamConfig, t: u64) {
    assert_eq!(params.len(), grads.len(), "parameter/gradient length mismatch");
    assert_eq!(params.len(), state.m.len(), "parameter/state length mismatch");
    assert!(t >= 1, "adam step count is 1-based");
    let bc1 = 1.0 - cfg.beta1.powi(t as i32);
    let bc2 = 1.0 - cfg.beta2.powi(t as i32);
    for (((p, &g), m), v) in params
        .iter_mut()
        .zip(grads)
        .zip(state.m.iter_mut())
        .zip(state.v.iter_mut())
    {
        *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
        *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        *p -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_on_fresh_state_is_a_no_op() {
        let mut p = vec![0.5, -1.0, 2.0];
        let before = p.clone();
        let mut s = Moments::new(3);
        adam_step(&mut p, &[0.0; 3], &mut s, &AdamConfig::default(), 1);
        assert_eq!(p, before);
    }

    #[test]
    fn first_step_moves_by_learning_rate_against_gradient_sign() {
        // m̂ = g and v̂ = g², so the step is lr · g / (|g| + ε).
        let cfg = AdamConfig::default();
        let grads = [3.0, -0.25, 1e-3];
        let mut p = vec![0.0; 3];
        adam_step(&mut p, &grads, &mut Moments::new(3), &cfg, 1);
        for (x, g) in p.iter().zip(grads) {
            let expect = -cfg.learning_rate * g / (g.abs() + cfg.epsilon);
            assert!((x - expect).abs() < 1e-15);
            assert!((x + cfg.learning_rate * g.signum()).abs() < 1e-7);
        }
    }

    #[test]
    fn tensors_do_not_interact() {
        let cfg = AdamConfig::default();
        let mut a = vec![1.0, 1.0];
        let mut b = vec![1.0, 1.0];
        let (mut sa, mut sb) = (Moments::new(2), Moments::new(2));
        adam_step(&mut a, &[1.0, -1.0], &mut sa, &cfg, 1);
        adam_step(&mut b, &[0.0, 0.0], &mut sb, &cfg, 1);
        assert_eq!(b, vec![1.0, 1.0]);
        let mut a2 = vec![1.0, 1.0];
        adam_step(&mut a2, &[1.0, -1.0], &mut Moments::new(2), &cfg, 1);
        assert_eq!(a, a2);
    }
}
