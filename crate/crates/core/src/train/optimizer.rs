//! First-order optimizers. Master weights stay f32; moments and update
//! arithmetic are f64, rounded once per step.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OptimizerSpec {
    SgdMomentum {
        lr0: f64,
        momentum: f64,
    },
    Adam {
        lr0: f64,
        beta1: f64,
        beta2: f64,
        eps: f64,
    },
}

impl OptimizerSpec {
    pub fn lr0(&self) -> f64 {
        match self {
            OptimizerSpec::SgdMomentum { lr0, .. } | OptimizerSpec::Adam { lr0, .. } => *lr0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lr0().is_finite() && self.lr0() > 0.0) {
            return Err(Error::Config(format!(
                "optimizer lr0 must be > 0, got {}",
                self.lr0()
            )));
        }
        match self {
            OptimizerSpec::SgdMomentum { momentum, .. } => {
                if !(*momentum >= 0.0 && *momentum < 1.0) {
                    return Err(Error::Config(format!(
                        "momentum must lie in [0,1), got {momentum}"
                    )));
                }
            }
            OptimizerSpec::Adam {
                beta1, beta2, eps, ..
            } => {
                for (name, b) in [("beta1", beta1), ("beta2", beta2)] {
                    if !(*b >= 0.0 && *b < 1.0) {
                        return Err(Error::Config(format!("{name} must lie in [0,1), got {b}")));
                    }
                }
                if !(eps.is_finite() && *eps > 0.0) {
                    return Err(Error::Config(format!("eps must be > 0, got {eps}")));
                }
            }
        }
        Ok(())
    }

    pub(crate) fn state(&self, n_params: usize) -> OptimizerState {
        match *self {
            OptimizerSpec::SgdMomentum { momentum, .. } => OptimizerState::Sgd {
                momentum,
                velocity: vec![0.0; n_params],
            },
            OptimizerSpec::Adam {
                beta1, beta2, eps, ..
            } => OptimizerState::Adam {
                beta1,
                beta2,
                eps,
                m: vec![0.0; n_params],
                v: vec![0.0; n_params],
                t: 0,
            },
        }
    }
}

pub(crate) enum OptimizerState {
    Sgd {
        momentum: f64,
        velocity: Vec<f64>,
    },
    Adam {
        beta1: f64,
        beta2: f64,
        eps: f64,
        m: Vec<f64>,
        v: Vec<f64>,
        t: i32,
    },
}

impl OptimizerState {
    pub fn step(&mut self, lr: f64, weights: &mut [f32], grad: &[f32]) {
        debug_assert_eq!(weights.len(), grad.len());
        match self {
            OptimizerState::Sgd { momentum, velocity } => {
                for i in 0..weights.len() {
                    let g = grad[i] as f64;
                    velocity[i] = *momentum * velocity[i] + g;
                    weights[i] = (weights[i] as f64 - lr * velocity[i]) as f32;
                }
            }
            OptimizerState::Adam {
                beta1,
                beta2,
                eps,
                m,
                v,
                t,
            } => {
                *t += 1;
                let bc1 = 1.0 - beta1.powi(*t);
                let bc2 = 1.0 - beta2.powi(*t);
                for i in 0..weights.len() {
                    let g = grad[i] as f64;
                    m[i] = *beta1 * m[i] + (1.0 - *beta1) * g;
                    v[i] = *beta2 * v[i] + (1.0 - *beta2) * g * g;
                    let m_hat = m[i] / bc1;
                    let v_hat = v[i] / bc2;
                    weights[i] = (weights[i] as f64 - lr * m_hat / (v_hat.sqrt() + *eps)) as f32;
                }
            }
        }
    }
}
