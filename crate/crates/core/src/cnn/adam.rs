use super::CnnParams;

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// First and second moment estimates for every parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: CnnParams,
    pub v: CnnParams,
    pub t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(params: &CnnParams) -> Self {
        Self {
            m: CnnParams::zeros_like(params),
            v: CnnParams::zeros_like(params),
            t: 0,
            beta1: BETA1,
            beta2: BETA2,
            epsilon: EPSILON,
        }
    }

    /// One bias-corrected Adam update of `params` along `grads`.
    pub fn step(&mut self, params: &mut CnnParams, grads: &CnnParams, lr: f64) {
        self.t += 1;
        let (b1, b2, eps) = (self.beta1, self.beta2, self.epsilon);
        let c1 = 1.0 - b1.powi(self.t as i32);
        let c2 = 1.0 - b2.powi(self.t as i32);
        let grads = grads.named();
        let tensors = params
            .tensors_mut()
            .into_iter()
            .zip(self.m.tensors_mut())
            .zip(self.v.tensors_mut())
            .zip(grads.iter().map(|(_, _, g)| *g));
        for (((p, m), v), g) in tensors {
            for i in 0..p.len() {
                let gi = g[i];
                m[i] = b1 * m[i] + (1.0 - b1) * gi;
                v[i] = b2 * v[i] + (1.0 - b2) * gi * gi;
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnn::{init_params, CnnConfig};
    use crate::rng::seeded;

    fn params() -> CnnParams {
        let cfg = CnnConfig {
            embedding_dim: 3,
            filter_widths: vec![2],
            feature_maps: 2,
            num_departments: 3,
            ..Default::default()
        };
        init_params(&cfg, 4, &mut seeded(1))
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut p = params();
        let before = p.clone();
        let mut state = AdamState::new(&p);
        let zeros = CnnParams::zeros_like(&p);
        for _ in 0..3 {
            state.step(&mut p, &zeros, 1e-3);
        }
        assert_eq!(p, before);
        assert_eq!(state.t, 3);
    }

    #[test]
    fn first_step_is_bounded_by_lr() {
        let mut p = params();
        let before = p.clone();
        let mut g = CnnParams::zeros_like(&p);
        g.origin.weights[0] = 0.3;
        g.origin.weights[1] = -40.0;
        g.destination.bias[2] = 1e-3;
        let mut state = AdamState::new(&p);
        state.step(&mut p, &g, 1e-3);
        let moved = |a: f64, b: f64| a - b;
        // first bias-corrected step is lr * g / (|g| + eps)
        assert!((moved(p.origin.weights[0], before.origin.weights[0]) + 1e-3).abs() < 1e-9);
        assert!((moved(p.origin.weights[1], before.origin.weights[1]) - 1e-3).abs() < 1e-9);
        assert!(moved(p.destination.bias[2], before.destination.bias[2]) < 0.0);
        for ((_, _, a), (_, _, b)) in p.named().iter().zip(before.named().iter()) {
            for (x, y) in a.iter().zip(b.iter()) {
                assert!((x - y).abs() <= 1e-3 + 1e-12);
            }
        }
    }
}
