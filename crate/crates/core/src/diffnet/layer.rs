use crate::{Error, Result, Scalar};

/// One stage of a feed-forward network. Shapes exclude the batch dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LayerSpec {
    Dense { in_dim: usize, out_dim: usize },
    Conv2d { in_channels: usize, out_channels: usize, kernel: usize, stride: usize, padding: usize },
    Relu,
    Tanh,
    Flatten,
}

impl LayerSpec {
    pub fn dense(in_dim: usize, out_dim: usize) -> Self {
        LayerSpec::Dense { in_dim, out_dim }
    }

    /// 3x3 convolution, the only kernel size the crate's networks use.
    pub fn conv3x3(in_channels: usize, out_channels: usize, stride: usize, padding: usize) -> Self {
        LayerSpec::Conv2d { in_channels, out_channels, kernel: 3, stride, padding }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LayerSpec::Dense { .. } => "dense",
            LayerSpec::Conv2d { .. } => "conv2d",
            LayerSpec::Relu => "relu",
            LayerSpec::Tanh => "tanh",
            LayerSpec::Flatten => "flatten",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            LayerSpec::Dense { in_dim, out_dim } if in_dim == 0 || out_dim == 0 => {
                Err(Error::InvalidSpec(format!("dense dims must be positive, got {in_dim}->{out_dim}")))
            }
            LayerSpec::Conv2d { in_channels, out_channels, kernel, stride, .. } => {
                if in_channels == 0 || out_channels == 0 || stride == 0 || kernel == 0 {
                    Err(Error::InvalidSpec(format!("conv2d dims must be positive: {self:?}")))
                } else if kernel % 2 == 0 {
                    Err(Error::InvalidSpec(format!("conv2d kernel must be odd, got {kernel}")))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// Shapes of the layer's parameter tensors: `[weight, bias]` or nothing.
    pub fn param_shapes(&self) -> Vec<Vec<usize>> {
        match *self {
            LayerSpec::Dense { in_dim, out_dim } => vec![vec![out_dim, in_dim], vec![out_dim]],
            LayerSpec::Conv2d { in_channels, out_channels, kernel, .. } => {
                vec![vec![out_channels, in_channels, kernel, kernel], vec![out_channels]]
            }
            _ => Vec::new(),
        }
    }

    pub fn param_count(&self) -> usize {
        self.param_shapes().iter().map(|s| s.iter().product::<usize>()).sum()
    }

    /// (fan_in, fan_out) for weight initialization.
    pub(crate) fn fans(&self) -> Option<(usize, usize)> {
        match *self {
            LayerSpec::Dense { in_dim, out_dim } => Some((in_dim, out_dim)),
            LayerSpec::Conv2d { in_channels, out_channels, kernel, .. } => {
                Some((in_channels * kernel * kernel, out_channels * kernel * kernel))
            }
            _ => None,
        }
    }

    /// Per-sample output shape, or a description of why `input` is unacceptable.
    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>, String> {
        match *self {
            LayerSpec::Dense { in_dim, out_dim } => {
                if input == [in_dim] {
                    Ok(vec![out_dim])
                } else {
                    Err(format!("dense expects [{in_dim}], got {input:?}"))
                }
            }
            LayerSpec::Conv2d { in_channels, out_channels, kernel, stride, padding } => match input {
                &[c, h, w] if c == in_channels && h + 2 * padding >= kernel && w + 2 * padding >= kernel => Ok(vec![
                    out_channels,
                    (h + 2 * padding - kernel) / stride + 1,
                    (w + 2 * padding - kernel) / stride + 1,
                ]),
                _ => Err(format!(
                    "conv2d expects [{in_channels}, H, W] with H, W >= {}, got {input:?}",
                    kernel.saturating_sub(2 * padding)
                )),
            },
            LayerSpec::Relu | LayerSpec::Tanh => Ok(input.to_vec()),
            LayerSpec::Flatten => Ok(vec![input.iter().product()]),
        }
    }
}

/// Output positions `o` in `[lo, hi)` whose input tap `o * stride + offset - pad`
/// falls inside `[0, in_len)`.
fn valid_range(out_len: usize, in_len: usize, offset: usize, stride: usize, pad: usize) -> (usize, usize) {
    let lo = if pad > offset { (pad - offset).div_ceil(stride) } else { 0 };
    if in_len + pad < offset + 1 {
        return (0, 0);
    }
    let hi = ((in_len - 1 + pad - offset) / stride + 1).min(out_len);
    (lo.min(hi), hi)
}

pub(crate) struct ConvGeometry {
    pub batch: usize,
    pub in_channels: usize,
    pub out_channels: usize,
    pub in_h: usize,
    pub in_w: usize,
    pub out_h: usize,
    pub out_w: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
}

/// Dot product with eight independent partial sums, so the loop is not
/// bound by add latency. The summation order is fixed, hence deterministic.
pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut lanes = [T::zero(); 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            lanes[k] += x[k] * y[k];
        }
    }
    let mut tail = T::zero();
    for (x, y) in ra.iter().zip(rb) {
        tail += *x * *y;
    }
    (lanes[0] + lanes[4]) + (lanes[1] + lanes[5]) + (lanes[2] + lanes[6]) + (lanes[3] + lanes[7]) + tail
}

/// `y += alpha * x`.
pub(crate) fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * *xi;
    }
}

pub(crate) fn dense_forward<T: Scalar>(
    x: &[T],
    w: &[T],
    b: &[T],
    batch: usize,
    in_dim: usize,
    out_dim: usize,
) -> Vec<T> {
    let mut out = Vec::with_capacity(batch * out_dim);
    for xs in x.chunks_exact(in_dim) {
        for (o, row) in w.chunks_exact(in_dim).enumerate() {
            out.push(b[o] + dot(row, xs));
        }
    }
    out
}

/// Accumulates weight and bias gradients; returns the input gradient if asked.
#[allow(clippy::too_many_arguments)]
pub(crate) fn dense_backward<T: Scalar>(
    x: &[T],
    w: &[T],
    grad_out: &[T],
    grad_w: &mut [T],
    grad_b: &mut [T],
    in_dim: usize,
    out_dim: usize,
    want_input_grad: bool,
) -> Option<Vec<T>> {
    let batch = grad_out.len() / out_dim;
    let mut grad_in = if want_input_grad { vec![T::zero(); batch * in_dim] } else { Vec::new() };
    for n in 0..batch {
        let xs = &x[n * in_dim..(n + 1) * in_dim];
        let gs = &grad_out[n * out_dim..(n + 1) * out_dim];
        for (o, &g) in gs.iter().enumerate() {
            if g == T::zero() {
                continue;
            }
            grad_b[o] += g;
            axpy(g, xs, &mut grad_w[o * in_dim..(o + 1) * in_dim]);
            if want_input_grad {
                axpy(g, &w[o * in_dim..(o + 1) * in_dim], &mut grad_in[n * in_dim..(n + 1) * in_dim]);
            }
        }
    }
    want_input_grad.then_some(grad_in)
}

impl ConvGeometry {
    fn taps(&self) -> usize {
        self.in_channels * self.kernel * self.kernel
    }

    fn out_plane(&self) -> usize {
        self.out_h * self.out_w
    }

    /// Unfolds one sample into a `[C * k * k, out_h * out_w]` matrix whose
    /// row `(c, ky, kx)` holds the input value each output position reads
    /// through that tap, zero where it falls in the padding.
    fn im2col<T: Scalar>(&self, x: &[T], cols: &mut [T]) {
        let (k, s, p) = (self.kernel, self.stride, self.padding);
        let in_plane = self.in_h * self.in_w;
        cols.iter_mut().for_each(|v| *v = T::zero());
        for c in 0..self.in_channels {
            let src = &x[c * in_plane..][..in_plane];
            for ky in 0..k {
                let (y_lo, y_hi) = valid_range(self.out_h, self.in_h, ky, s, p);
                for kx in 0..k {
                    let (x_lo, x_hi) = valid_range(self.out_w, self.in_w, kx, s, p);
                    let row = &mut cols[((c * k + ky) * k + kx) * self.out_plane()..][..self.out_plane()];
                    for oy in y_lo..y_hi {
                        let src_row = &src[(oy * s + ky - p) * self.in_w..][..self.in_w];
                        let dst = &mut row[oy * self.out_w..][..self.out_w];
                        for ox in x_lo..x_hi {
                            dst[ox] = src_row[ox * s + kx - p];
                        }
                    }
                }
            }
        }
    }

    /// Adjoint of `im2col`: scatters column gradients back onto the input.
    fn col2im<T: Scalar>(&self, cols: &[T], grad_x: &mut [T]) {
        let (k, s, p) = (self.kernel, self.stride, self.padding);
        let in_plane = self.in_h * self.in_w;
        for c in 0..self.in_channels {
            let dst = &mut grad_x[c * in_plane..][..in_plane];
            for ky in 0..k {
                let (y_lo, y_hi) = valid_range(self.out_h, self.in_h, ky, s, p);
                for kx in 0..k {
                    let (x_lo, x_hi) = valid_range(self.out_w, self.in_w, kx, s, p);
                    let row = &cols[((c * k + ky) * k + kx) * self.out_plane()..][..self.out_plane()];
                    for oy in y_lo..y_hi {
                        let dst_row = &mut dst[(oy * s + ky - p) * self.in_w..][..self.in_w];
                        let src = &row[oy * self.out_w..][..self.out_w];
                        for ox in x_lo..x_hi {
                            dst_row[ox * s + kx - p] += src[ox];
                        }
                    }
                }
            }
        }
    }
}

pub(crate) fn conv_forward<T: Scalar>(x: &[T], w: &[T], b: &[T], geo: &ConvGeometry) -> Vec<T> {
    let taps = geo.taps();
    let out_plane = geo.out_plane();
    let in_size = geo.in_channels * geo.in_h * geo.in_w;
    let mut out = vec![T::zero(); geo.batch * geo.out_channels * out_plane];
    let mut cols = vec![T::zero(); taps * out_plane];
    for n in 0..geo.batch {
        geo.im2col(&x[n * in_size..][..in_size], &mut cols);
        for o in 0..geo.out_channels {
            let dst = &mut out[(n * geo.out_channels + o) * out_plane..][..out_plane];
            dst.iter_mut().for_each(|v| *v = b[o]);
            for (j, &wv) in w[o * taps..][..taps].iter().enumerate() {
                axpy(wv, &cols[j * out_plane..][..out_plane], dst);
            }
        }
    }
    out
}

pub(crate) fn conv_backward<T: Scalar>(
    x: &[T],
    w: &[T],
    grad_out: &[T],
    grad_w: &mut [T],
    grad_b: &mut [T],
    geo: &ConvGeometry,
    want_input_grad: bool,
) -> Option<Vec<T>> {
    let taps = geo.taps();
    let out_plane = geo.out_plane();
    let in_size = geo.in_channels * geo.in_h * geo.in_w;
    let mut grad_in = if want_input_grad { vec![T::zero(); x.len()] } else { Vec::new() };
    let mut cols = vec![T::zero(); taps * out_plane];
    let mut grad_cols = vec![T::zero(); if want_input_grad { taps * out_plane } else { 0 }];
    for n in 0..geo.batch {
        geo.im2col(&x[n * in_size..][..in_size], &mut cols);
        grad_cols.iter_mut().for_each(|v| *v = T::zero());
        for o in 0..geo.out_channels {
            let g = &grad_out[(n * geo.out_channels + o) * out_plane..][..out_plane];
            grad_b[o] += g.iter().fold(T::zero(), |acc, &v| acc + v);
            for j in 0..taps {
                let col = &cols[j * out_plane..][..out_plane];
                grad_w[o * taps + j] += dot(g, col);
                if want_input_grad {
                    axpy(w[o * taps + j], g, &mut grad_cols[j * out_plane..][..out_plane]);
                }
            }
        }
        if want_input_grad {
            geo.col2im(&grad_cols, &mut grad_in[n * in_size..][..in_size]);
        }
    }
    want_input_grad.then_some(grad_in)
}
