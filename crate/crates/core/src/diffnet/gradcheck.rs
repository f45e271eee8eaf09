//! Central finite differences for verifying analytic gradients.

use super::{Network, Tensor};
use crate::scalar::lit;
use crate::{Error, Result, Scalar};

/// Step used by the crate's gradient checks.
pub const DEFAULT_STEP: f64 = 1e-5;

/// Numerical gradient of `f` at `x` by central differences with step `h`.
pub fn central_difference<T: Scalar, F>(mut f: F, x: &[T], h: T) -> Vec<T>
where
    F: FnMut(&[T]) -> T,
{
    let mut probe = x.to_vec();
    let two: T = lit(2.0);
    (0..x.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + h;
            let plus = f(&probe);
            probe[i] = orig - h;
            let minus = f(&probe);
            probe[i] = orig;
            (plus - minus) / (two * h)
        })
        .collect()
}

/// `|a - b| / max(|a|, |b|, 1e-6)`; the floor keeps vanishing gradients from
/// turning rounding noise into large ratios.
pub fn relative_error<T: Scalar>(analytic: T, numeric: T) -> T {
    let scale = analytic.abs().max(numeric.abs()).max(lit(1e-6));
    (analytic - numeric).abs() / scale
}

pub fn max_relative_error<T: Scalar>(analytic: &[T], numeric: &[T]) -> T {
    analytic.iter().zip(numeric).map(|(&a, &n)| relative_error(a, n)).fold(T::zero(), T::max)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_param_error: f64,
    pub max_input_error: f64,
    pub checked_params: usize,
    pub checked_inputs: usize,
}

impl GradCheckReport {
    pub fn max_error(&self) -> f64 {
        self.max_param_error.max(self.max_input_error)
    }
}

fn probe_indices(len: usize, limit: Option<usize>) -> Vec<usize> {
    match limit {
        Some(k) if k < len => (0..k).map(|i| i * len / k).collect(),
        _ => (0..len).collect(),
    }
}

/// Compares backward against finite differences for the scalar objective
/// `sum(output * projection)`. `limit` caps how many parameters and inputs
/// are probed (evenly spaced) for large networks.
pub fn check_network(
    net: &Network<f64>,
    input: &Tensor<f64>,
    projection: &[f64],
    h: f64,
    limit: Option<usize>,
) -> Result<GradCheckReport> {
    let mut work = net.clone();
    work.zero_grads();
    let (out, cache) = work.forward(input)?;
    if projection.len() != out.len() {
        return Err(Error::Shape(format!("projection has {} entries, output has {}", projection.len(), out.len())));
    }
    let out_grad = Tensor::from_parts(out.shape().to_vec(), projection.to_vec())?;
    let input_grad = work.backward(&cache, &out_grad)?;
    let analytic_params = work.flat_grads();
    let params = net.flat_params();

    let objective = |n: &Network<f64>, x: &Tensor<f64>| -> f64 {
        let y = n.infer(x).expect("probe forward");
        y.data().iter().zip(projection).map(|(a, b)| a * b).sum()
    };

    let mut probe_net = net.clone();
    let mut max_param_error = 0.0f64;
    let param_idx = probe_indices(params.len(), limit);
    for &i in &param_idx {
        let mut flat = params.clone();
        let numeric = central_difference(
            |p: &[f64]| {
                flat[i] = p[0];
                probe_net.set_flat_params(&flat).expect("same size");
                objective(&probe_net, input)
            },
            &[params[i]],
            h,
        )[0];
        max_param_error = max_param_error.max(relative_error(analytic_params[i], numeric));
    }

    let mut max_input_error = 0.0f64;
    let input_idx = probe_indices(input.len(), limit);
    for &i in &input_idx {
        let mut x = input.clone();
        let numeric = central_difference(
            |v: &[f64]| {
                x.data_mut()[i] = v[0];
                objective(net, &x)
            },
            &[input.data()[i]],
            h,
        )[0];
        max_input_error = max_input_error.max(relative_error(input_grad.data()[i], numeric));
    }

    Ok(GradCheckReport {
        max_param_error,
        max_input_error,
        checked_params: param_idx.len(),
        checked_inputs: input_idx.len(),
    })
}
