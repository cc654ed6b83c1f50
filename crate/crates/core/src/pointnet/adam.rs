use super::net::Gradients;
use super::params::ModelParams;
use crate::error::{Error, Result};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// First and second moment estimates plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        AdamState { m: vec![0.0; len], v: vec![0.0; len], t: 0 }
    }
}

/// One bias-corrected Adam update.
pub fn adam_step(params: &mut ModelParams, grads: &Gradients, state: &mut AdamState, lr: f64) -> Result<()> {
    let n = params.len();
    for len in [grads.0.len(), state.m.len(), state.v.len()] {
        if len != n {
            return Err(Error::LengthMismatch { expected: n, actual: len });
        }
    }
    state.t += 1;
    let c1 = 1.0 - ADAM_BETA1.powi(state.t as i32);
    let c2 = 1.0 - ADAM_BETA2.powi(state.t as i32);
    for (((theta, &g), m), v) in
        params.values_mut().iter_mut().zip(&grads.0).zip(state.m.iter_mut()).zip(state.v.iter_mut())
    {
        *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
        *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *theta -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
    }
    Ok(())
}
