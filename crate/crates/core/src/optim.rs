//! Adam with bias correction.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for Adam {
    /// Learning rate 2e-4 and beta1 0.5, the usual conditional-GAN setting.
    fn default() -> Self {
        Adam {
            lr: 2e-4,
            beta1: 0.5,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First/second moment estimates and step count for one parameter list.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub first: Vec<Tensor<T>>,
    pub second: Vec<Tensor<T>>,
    pub step: u64,
}

impl<T: Scalar> AdamState<T> {
    pub fn for_params<'a>(params: impl IntoIterator<Item = &'a Tensor<T>>) -> Self {
        let (first, second) = params
            .into_iter()
            .map(|p| (Tensor::zeros(p.shape()), Tensor::zeros(p.shape())))
            .unzip();
        AdamState {
            first,
            second,
            step: 0,
        }
    }
}

impl Adam {
    /// One update of every parameter in place; increments `state.step` once.
    pub fn step<T: Scalar>(
        &self,
        params: &mut [&mut Tensor<T>],
        grads: &[Tensor<T>],
        state: &mut AdamState<T>,
    ) -> Result<()> {
        if params.len() != grads.len() || params.len() != state.first.len() || params.len() != state.second.len() {
            return Err(Error::shape(
                "adam_step",
                format!(
                    "{} params, {} grads, {} moment slots",
                    params.len(),
                    grads.len(),
                    state.first.len()
                ),
            ));
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.shape() != g.shape() || p.shape() != state.first[i].shape() || p.shape() != state.second[i].shape() {
                return Err(Error::shape(
                    "adam_step",
                    format!("parameter {i}: {:?} vs grad {:?}", p.shape(), g.shape()),
                ));
            }
        }
        state.step += 1;
        let t = state.step as i32;
        let b1 = T::from_f64(self.beta1);
        let b2 = T::from_f64(self.beta2);
        let one = T::one();
        let c1 = one - b1.powi(t);
        let c2 = one - b2.powi(t);
        let lr = T::from_f64(self.lr);
        let eps = T::from_f64(self.eps);
        for (i, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            let m = state.first[i].data_mut();
            let v = state.second[i].data_mut();
            for (((pv, &gv), mv), vv) in p.data_mut().iter_mut().zip(g.data()).zip(m.iter_mut()).zip(v.iter_mut()) {
                *mv = b1 * *mv + (one - b1) * gv;
                *vv = b2 * *vv + (one - b2) * gv * gv;
                let m_hat = *mv / c1;
                let v_hat = *vv / c2;
                *pv = *pv - lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}
