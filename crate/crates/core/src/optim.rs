//! First-order update rules.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    /// Plain gradient descent.
    Sgd,
    /// Adaptive-moment descent (Adam).
    #[default]
    Adam,
}

#[derive(Debug, Clone)]
pub enum Optimizer {
    Sgd,
    Adam {
        beta1: f64,
        beta2: f64,
        eps: f64,
        t: u64,
        m: Vec<f64>,
        v: Vec<f64>,
    },
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, len: usize) -> Self {
        match kind {
            OptimizerKind::Sgd => Self::Sgd,
            OptimizerKind::Adam => Self::Adam {
                beta1: 0.9,
                beta2: 0.999,
                eps: 1e-8,
                t: 0,
                m: vec![0.0; len],
                v: vec![0.0; len],
            },
        }
    }

    /// Moves `params` against `grad` with step size `lr`.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        match self {
            Self::Sgd => {
                for (p, g) in params.iter_mut().zip(grad) {
                    *p -= lr * g;
                }
            }
            Self::Adam {
                beta1,
                beta2,
                eps,
                t,
                m,
                v,
            } => {
                *t += 1;
                let bc1 = 1.0 - beta1.powi(*t as i32);
                let bc2 = 1.0 - beta2.powi(*t as i32);
                for i in 0..params.len() {
                    m[i] = *beta1 * m[i] + (1.0 - *beta1) * grad[i];
                    v[i] = *beta2 * v[i] + (1.0 - *beta2) * grad[i] * grad[i];
                    let mh = m[i] / bc1;
                    let vh = v[i] / bc2;
                    params[i] -= lr * mh / (vh.sqrt() + *eps);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_rules_minimize_a_quadratic() {
        for kind in [OptimizerKind::Sgd, OptimizerKind::Adam] {
            let mut x = vec![3.0, -2.0];
            let mut opt = Optimizer::new(kind, 2);
            for _ in 0..3000 {
                let g: Vec<f64> = x.iter().map(|xi| 2.0 * (xi - 1.0)).collect();
                opt.step(&mut x, &g, 0.01);
            }
            assert!(x.iter().all(|xi| (xi - 1.0).abs() < 1e-2), "{kind:?}: {x:?}");
        }
    }

    #[test]
    fn adam_first_step_has_size_lr() {
        let mut x = vec![0.0];
        let mut opt = Optimizer::new(OptimizerKind::Adam, 1);
        opt.step(&mut x, &[123.0], 0.05);
        assert!((x[0] + 0.05).abs() < 1e-9);
    }
}
