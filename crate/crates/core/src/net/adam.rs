//! Adam with bias correction.

use crate::net::model::ModelParams;
use crate::net::tensor::{Elem, Tensor};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First/second moment accumulators plus the step counter.
pub struct AdamState<T> {
    m: Vec<Tensor<T>>,
    v: Vec<Tensor<T>>,
    step: u64,
}

impl<T: Elem> AdamState<T> {
    pub fn new(params: &ModelParams<T>) -> Self {
        let zeros: Vec<Tensor<T>> = params
            .entries()
            .iter()
            .map(|(_, t)| Tensor::zeros(t.shape()))
            .collect();
        AdamState {
            m: zeros.clone(),
            v: zeros,
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// One update. `grads` must align with the parameter layout; a `None` entry
/// means zero gradient for that tensor.
pub fn adam_step<T: Elem>(
    params: &mut ModelParams<T>,
    grads: &[Option<Tensor<T>>],
    state: &mut AdamState<T>,
    cfg: &AdamConfig,
) -> Result<()> {
    if grads.len() != params.len() {
        return Err(Error::dimension(format!(
            "{} gradients for {} parameters",
            grads.len(),
            params.len()
        )));
    }
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - cfg.beta1.powi(t);
    let bc2 = 1.0 - cfg.beta2.powi(t);
    let (b1, b2) = (T::from_f64(cfg.beta1), T::from_f64(cfg.beta2));
    let (ob1, ob2) = (T::from_f64(1.0 - cfg.beta1), T::from_f64(1.0 - cfg.beta2));
    let lr = T::from_f64(cfg.lr / bc1);
    let denom_scale = T::from_f64(1.0 / bc2.sqrt());
    let eps = T::from_f64(cfg.eps);

    for (k, (_, p)) in params.entries_mut().iter_mut().enumerate() {
        let Some(g) = grads[k].as_ref() else { continue };
        if g.shape() != p.shape() {
            return Err(Error::dimension(format!(
                "gradient shape {:?} vs parameter {:?}",
                g.shape(),
                p.shape()
            )));
        }
        let m = state.m[k].data_mut();
        let v = state.v[k].data_mut();
        for (((pv, &gv), mv), vv) in p
            .data_mut()
            .iter_mut()
            .zip(g.data())
            .zip(m.iter_mut())
            .zip(v.iter_mut())
        {
            *mv = gv.mul_add(ob1, *mv * b1);
            *vv = (gv * gv).mul_add(ob2, *vv * b2);
            let update = lr * *mv / ((*vv).sqrt() * denom_scale + eps);
            *pv += -update;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::model::ModelSpec;
    use crate::raster::Rng;

    fn tiny_params() -> ModelParams<f64> {
        let spec = ModelSpec {
            in_bands: 1,
            features: 4,
            num_rrdb: 1,
            growth: 2,
        };
        let mut rng = Rng::from_seed(1);
        ModelParams::init(&spec, &mut rng)
    }

    #[test]
    fn zero_gradients_leave_params_unchanged() {
        let mut params = tiny_params();
        let before = params.clone();
        let mut state = AdamState::new(&params);
        let grads: Vec<Option<Tensor<f64>>> = params
            .entries()
            .iter()
            .map(|(_, t)| Some(Tensor::zeros(t.shape())))
            .collect();
        adam_step(&mut params, &grads, &mut state, &AdamConfig::default()).unwrap();
        assert_eq!(params, before);
        assert_eq!(state.step_count(), 1);
    }

    #[test]
    fn first_step_magnitude_is_lr() {
        // After bias correction the first update is lr * g / (|g| + ~eps).
        let mut params = tiny_params();
        let before = params.clone();
        let mut state = AdamState::new(&params);
        let mut rng = Rng::from_seed(2);
        let grads: Vec<Option<Tensor<f64>>> = params
            .entries()
            .iter()
            .map(|(_, t)| {
                let n = t.numel();
                Some(Tensor::from_vec(
                    t.shape(),
                    (0..n)
                        .map(|_| {
                            let sign = if rng.below(2) == 0 { -1.0 } else { 1.0 };
                            sign * (0.05 + rng.uniform())
                        })
                        .collect(),
                ))
            })
            .collect();
        let cfg = AdamConfig::default();
        adam_step(&mut params, &grads, &mut state, &cfg).unwrap();
        for (k, ((_, after), (_, before))) in params
            .entries()
            .iter()
            .zip(before.entries())
            .enumerate()
        {
            for (i, (a, b)) in after.data().iter().zip(before.data()).enumerate() {
                let delta = (a - b).abs();
                let g = grads[k].as_ref().unwrap().data()[i];
                assert!(
                    (delta - cfg.lr).abs() / cfg.lr < 1e-6,
                    "param {k}[{i}]: step {delta:e} vs lr {:e}",
                    cfg.lr
                );
                // Direction opposes the gradient.
                assert!((a - b).signum() == -g.signum());
            }
        }
    }

    #[test]
    fn updates_are_deterministic() {
        let run = || {
            let mut params = tiny_params();
            let mut state = AdamState::new(&params);
            let mut rng = Rng::from_seed(3);
            for _ in 0..10 {
                let grads: Vec<Option<Tensor<f64>>> = params
                    .entries()
                    .iter()
                    .map(|(_, t)| {
                        let n = t.numel();
                        Some(Tensor::from_vec(
                            t.shape(),
                            (0..n).map(|_| rng.uniform() - 0.5).collect(),
                        ))
                    })
                    .collect();
                adam_step(&mut params, &grads, &mut state, &AdamConfig::default()).unwrap();
            }
            params
        };
        assert_eq!(run(), run());
    }
}
