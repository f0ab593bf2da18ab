use super::model::TensorStore;
use super::scalar::Scalar;
use super::train::TrainConfig;
use crate::error::{Error, Result};

/// First/second moment estimates and the step counter.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<T> {
    pub m: TensorStore<T>,
    pub v: TensorStore<T>,
    pub t: u64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(params: &TensorStore<T>) -> Self {
        AdamState {
            m: params.zeros_like(),
            v: params.zeros_like(),
            t: 0,
        }
    }
}

/// One bias-corrected Adam update applied in place.
pub fn adam_step<T: Scalar>(
    params: &mut TensorStore<T>,
    grads: &TensorStore<T>,
    state: &mut AdamState<T>,
    cfg: &TrainConfig,
) -> Result<()> {
    if !params.is_congruent(grads) || !params.is_congruent(&state.m) {
        return Err(Error::Shape(
            "gradient or optimizer state does not match parameters".into(),
        ));
    }
    state.t += 1;
    let (b1, b2) = (cfg.beta1, cfg.beta2);
    let c1 = 1.0 - b1.powi(state.t as i32);
    let c2 = 1.0 - b2.powi(state.t as i32);
    let (b1t, b2t) = (T::from_f64(b1), T::from_f64(b2));
    let lr = T::from_f64(cfg.learning_rate);
    let (c1t, c2t) = (T::from_f64(c1), T::from_f64(c2));
    let eps = T::from_f64(cfg.adam_epsilon);
    for (key, p) in params.tensors.iter_mut() {
        let g = &grads.tensors[key].data;
        let m = &mut state.m.tensors.get_mut(key).expect("congruent").data;
        let v = &mut state.v.tensors.get_mut(key).expect("congruent").data;
        for i in 0..p.data.len() {
            m[i] = b1t * m[i] + (T::one() - b1t) * g[i];
            v[i] = b2t * v[i] + (T::one() - b2t) * g[i] * g[i];
            let mh = m[i] / c1t;
            let vh = v[i] / c2t;
            p.data[i] -= lr * mh / (vh.sqrt() + eps);
        }
    }
    Ok(())
}
