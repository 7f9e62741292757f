use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamParams {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam with bias-corrected moments, one moment buffer per parameter tensor.
#[derive(Clone, Debug)]
pub struct Adam {
    params: AdamParams,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(params: AdamParams, tensor_lens: &[usize]) -> Self {
        Self {
            params,
            step: 0,
            m: tensor_lens.iter().map(|&n| vec![0.0; n]).collect(),
            v: tensor_lens.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]], learning_rate: f64) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::shape(format!(
                "optimizer tracks {} tensors, got {} parameters and {} gradients",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        for (k, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.len() != self.m[k].len() || g.len() != self.m[k].len() {
                return Err(Error::shape(format!(
                    "tensor {k}: expected {} entries, got {} parameters and {} gradients",
                    self.m[k].len(),
                    p.len(),
                    g.len()
                )));
            }
        }

        self.step += 1;
        let AdamParams { beta1, beta2, eps } = self.params;
        let t = self.step as i32;
        let bc1 = 1.0 - beta1.powi(t);
        let bc2 = 1.0 - beta2.powi(t);
        for (k, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            let m = &mut self.m[k];
            let v = &mut self.v[k];
            for i in 0..p.len() {
                let gi = g[i];
                m[i] = beta1 * m[i] + (1.0 - beta1) * gi;
                v[i] = beta2 * v[i] + (1.0 - beta2) * gi * gi;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p[i] -= learning_rate * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Scalar transcription of the Adam recurrence, kept separate from the
    /// vectorized optimizer.
    fn reference(theta0: f64, grads: &[f64], lr: f64) -> f64 {
        let (b1, b2, eps) = (0.9_f64, 0.999_f64, 1e-8_f64);
        let (mut m, mut v, mut theta) = (0.0, 0.0, theta0);
        for (i, g) in grads.iter().enumerate() {
            let t = (i + 1) as f64;
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let mh = m / (1.0 - b1.powf(t));
            let vh = v / (1.0 - b2.powf(t));
            theta -= lr * mh / (vh.sqrt() + eps);
        }
        theta
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut adam = Adam::new(AdamParams::default(), &[3]);
        let mut p = [1.0, -2.0, 0.5];
        adam.step(&mut [&mut p[..]], &[&[0.0, 0.0, 0.0]], 1e-3).unwrap();
        assert_eq!(p, [1.0, -2.0, 0.5]);
        assert_eq!(adam.steps(), 1);
    }

    #[test]
    fn first_step_closed_form() {
        // t = 1: m_hat = g, v_hat = g^2, so delta = -lr * g / (|g| + eps)
        let lr = 0.01;
        for g in [0.5, -3.0, 1e-6] {
            let mut adam = Adam::new(AdamParams::default(), &[1]);
            let mut p = [0.0];
            adam.step(&mut [&mut p[..]], &[&[g]], lr).unwrap();
            let expected = -lr * g / (g.abs() + 1e-8);
            assert!((p[0] - expected).abs() < 1e-15, "{g}: {} vs {expected}", p[0]);
        }
    }

    #[test]
    fn constant_gradient_matches_reference_and_tends_to_lr_steps() {
        let lr = 1e-3;
        let g = 0.7;
        let mut adam = Adam::new(AdamParams::default(), &[1]);
        let mut p = [2.0];
        let mut last = p[0];
        let mut last_delta = 0.0;
        for _ in 0..2000 {
            adam.step(&mut [&mut p[..]], &[&[g]], lr).unwrap();
            last_delta = p[0] - last;
            last = p[0];
        }
        let expected = reference(2.0, &[g; 2000], lr);
        assert!((p[0] - expected).abs() < 1e-12);
        assert!((last_delta + lr).abs() < 1e-6 * lr + 1e-12, "{last_delta}");
    }

    #[test]
    fn varying_gradients_match_reference() {
        let grads: Vec<f64> = (0..50).map(|i| ((i * 37 % 11) as f64 - 5.0) * 0.1).collect();
        let mut adam = Adam::new(AdamParams::default(), &[1]);
        let mut p = [0.3];
        for g in &grads {
            adam.step(&mut [&mut p[..]], &[&[*g]], 0.05).unwrap();
        }
        assert!((p[0] - reference(0.3, &grads, 0.05)).abs() < 1e-12);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut adam = Adam::new(AdamParams::default(), &[2]);
        let mut p = [0.0; 3];
        assert!(adam.step(&mut [&mut p[..]], &[&[0.0; 3]], 0.1).is_err());
    }
}
