use super::{Network, Tensor};
use crate::scalar::lit;
use crate::{Error, Result, Scalar};

/// Bias-corrected Adam moments for one parameter set.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<T> {
    pub step_count: u64,
    pub lr: T,
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
    first_moment: Vec<Tensor<T>>,
    second_moment: Vec<Tensor<T>>,
}

impl<T: Scalar> AdamState<T> {
    /// Zeroed moments congruent with `shapes`.
    pub fn with_shapes(shapes: &[&[usize]], lr: T) -> Self {
        let zeros: Vec<Tensor<T>> = shapes.iter().map(|s| Tensor::zeros(s)).collect();
        Self {
            step_count: 0,
            lr,
            beta1: lit(0.9),
            beta2: lit(0.999),
            eps: lit(1e-8),
            first_moment: zeros.clone(),
            second_moment: zeros,
        }
    }

    pub fn for_network(net: &Network<T>, lr: T) -> Self {
        let shapes: Vec<&[usize]> = net.params().iter().flatten().map(Tensor::shape).collect();
        Self::with_shapes(&shapes, lr)
    }

    /// Applies one update to `pairs` of (parameter, gradient) and zeroes the
    /// gradients. Non-finite gradients abort before anything is modified.
    pub fn update<'a, I>(&mut self, pairs: I) -> Result<()>
    where
        I: IntoIterator<Item = (&'a mut Tensor<T>, &'a mut Tensor<T>)>,
    {
        let mut pairs: Vec<_> = pairs.into_iter().collect();
        if pairs.len() != self.first_moment.len() {
            return Err(Error::Shape(format!(
                "optimizer tracks {} tensors, got {}",
                self.first_moment.len(),
                pairs.len()
            )));
        }
        for (index, (p, g)) in pairs.iter().enumerate() {
            if p.shape() != self.first_moment[index].shape() || g.shape() != p.shape() {
                return Err(Error::Shape(format!("optimizer tensor {index} changed shape")));
            }
            g.check_finite("gradient passed to adam")?;
        }
        self.step_count += 1;
        let t = self.step_count as i32;
        let one = T::one();
        let correction1 = one - self.beta1.powi(t);
        let correction2 = one - self.beta2.powi(t);
        for (index, (p, g)) in pairs.iter_mut().enumerate() {
            let m = self.first_moment[index].data_mut();
            let v = self.second_moment[index].data_mut();
            for (((pi, gi), mi), vi) in p.data_mut().iter_mut().zip(g.data_mut()).zip(m).zip(v) {
                *mi = self.beta1 * *mi + (one - self.beta1) * *gi;
                *vi = self.beta2 * *vi + (one - self.beta2) * *gi * *gi;
                let m_hat = *mi / correction1;
                let v_hat = *vi / correction2;
                *pi -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
                *gi = T::zero();
            }
        }
        Ok(())
    }
}

/// One Adam update of `net` from its accumulated gradients; gradients are
/// zeroed afterwards.
pub fn adam_step<T: Scalar>(net: &mut Network<T>, state: &mut AdamState<T>) -> Result<()> {
    state.update(net.params_and_grads_mut())
}
