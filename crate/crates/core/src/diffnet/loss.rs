use super::Tensor;
use crate::scalar::lit;
use crate::{Error, Result, Scalar};

/// Mean of squared differences and its gradient `2 (pred - target) / N`.
pub fn mse_loss<T: Scalar>(pred: &Tensor<T>, target: &Tensor<T>) -> Result<(T, Tensor<T>)> {
    if pred.shape() != target.shape() {
        return Err(Error::Shape(format!("mse between {:?} and {:?}", pred.shape(), target.shape())));
    }
    let n: T = lit(pred.len() as f64);
    let two: T = lit(2.0);
    let mut sum = T::zero();
    let grad: Vec<T> = pred
        .data()
        .iter()
        .zip(target.data())
        .map(|(&p, &t)| {
            let d = p - t;
            sum += d * d;
            two * d / n
        })
        .collect();
    let loss = sum / n;
    if !loss.is_finite() {
        return Err(Error::NonFinite("mse loss".into()));
    }
    Ok((loss, Tensor::from_parts(pred.shape().to_vec(), grad)?))
}

/// `ln(1 + e^x)` without overflow.
pub fn softplus<T: Scalar>(x: T) -> T {
    x.max(T::zero()) + (-x.abs()).exp().ln_1p()
}

pub fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// Binary cross-entropy on a logit: `softplus(z) - y z`, gradient `sigmoid(z) - y`.
pub fn bce_with_logits<T: Scalar>(logit: T, label: bool) -> Result<(T, T)> {
    if !logit.is_finite() {
        return Err(Error::NonFinite("discriminator logit".into()));
    }
    let y = if label { T::one() } else { T::zero() };
    Ok((softplus(logit) - y * logit, sigmoid(logit) - y))
}

fn check_same<T: Scalar>(mean: &[T], log_std: &[T], action: &[T]) -> Result<()> {
    if mean.len() != log_std.len() || mean.len() != action.len() {
        return Err(Error::Shape(format!(
            "gaussian log-prob over mean {}, log_std {}, action {}",
            mean.len(),
            log_std.len(),
            action.len()
        )));
    }
    Ok(())
}

/// Log density of `action` under a diagonal Gaussian.
pub fn gaussian_logprob<T: Scalar>(mean: &[T], log_std: &[T], action: &[T]) -> Result<T> {
    check_same(mean, log_std, action)?;
    let half_log_two_pi: T = lit(0.5 * (2.0 * std::f64::consts::PI).ln());
    let half: T = lit(0.5);
    Ok(mean.iter().zip(log_std).zip(action).fold(T::zero(), |acc, ((&m, &ls), &a)| {
        let z = (a - m) / ls.exp();
        acc - half * z * z - ls - half_log_two_pi
    }))
}

/// Gradients of [`gaussian_logprob`] with respect to the mean and the log std.
pub fn gaussian_logprob_grad<T: Scalar>(mean: &[T], log_std: &[T], action: &[T]) -> Result<(Vec<T>, Vec<T>)> {
    check_same(mean, log_std, action)?;
    let mut d_mean = Vec::with_capacity(mean.len());
    let mut d_log_std = Vec::with_capacity(mean.len());
    for ((&m, &ls), &a) in mean.iter().zip(log_std).zip(action) {
        let std = ls.exp();
        let z = (a - m) / std;
        d_mean.push(z / std);
        d_log_std.push(z * z - T::one());
    }
    Ok((d_mean, d_log_std))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{LN_2, PI};

    #[test]
    fn mse_examples() {
        let a = Tensor::new(vec![2], vec![1.0, 1.0]).unwrap();
        let z = Tensor::new(vec![2], vec![0.0, 0.0]).unwrap();
        assert_eq!(mse_loss(&a, &a).unwrap().0, 0.0);
        let (loss, grad) = mse_loss(&a, &z).unwrap();
        assert_eq!(loss, 1.0);
        assert_eq!(grad.data(), &[1.0, 1.0]);
        assert!(mse_loss(&a, &Tensor::zeros(&[3])).is_err());
    }

    #[test]
    fn bce_examples() {
        assert!((bce_with_logits(0.0, true).unwrap().0 - LN_2).abs() < 1e-15);
        assert!((bce_with_logits(0.0, false).unwrap().0 - LN_2).abs() < 1e-15);
        let (loss, grad) = bce_with_logits(50.0f64, true).unwrap();
        assert!((0.0..1e-20).contains(&loss));
        assert!(grad.abs() < 1e-20);
        let (loss, _) = bce_with_logits(-800.0f64, true).unwrap();
        assert!((loss - 800.0).abs() < 1e-9);
        assert!(bce_with_logits(f64::NAN, true).is_err());
    }

    #[test]
    fn gaussian_examples() {
        let lp = gaussian_logprob(&[0.0, 0.0], &[0.0, 0.0], &[0.0, 0.0]).unwrap();
        assert!((lp + (2.0 * PI).ln()).abs() < 1e-14);
        let lp = gaussian_logprob(&[0.0], &[0.0], &[1.0]).unwrap();
        assert!((lp - (-0.5 - 0.5 * (2.0 * PI).ln())).abs() < 1e-14);
        assert!((lp + 1.4189).abs() < 1e-4);
        assert!(gaussian_logprob(&[0.0], &[0.0, 1.0], &[1.0]).is_err());
    }

    #[test]
    fn sigmoid_is_stable_at_extremes() {
        assert_eq!(sigmoid(-1000.0f64), 0.0);
        assert_eq!(sigmoid(1000.0f64), 1.0);
        assert!((sigmoid(0.0f64) - 0.5).abs() < 1e-16);
    }
}
