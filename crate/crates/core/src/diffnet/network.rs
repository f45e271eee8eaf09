use rand::Rng;

use super::layer::{conv_backward, conv_forward, dense_backward, dense_forward, ConvGeometry, LayerSpec};
use super::Tensor;
use crate::scalar::lit;
use crate::{Error, Result, Scalar};

/// Feed-forward network: an ordered layer list with parameter and gradient
/// storage. Inputs carry a leading batch dimension.
///
/// Gradients accumulate across [`Network::backward`] calls until an optimizer
/// step (or [`Network::zero_grads`]) clears them, so several batches can be
/// summed before one update.
#[derive(Clone, Debug, PartialEq)]
pub struct Network<T> {
    layers: Vec<LayerSpec>,
    params: Vec<Vec<Tensor<T>>>,
    grads: Vec<Vec<Tensor<T>>>,
}

/// Activations recorded by [`Network::forward`]: the input followed by the
/// output of every layer.
#[derive(Clone, Debug)]
pub struct ForwardCache<T> {
    layers: Vec<LayerSpec>,
    activations: Vec<Tensor<T>>,
}

impl<T> ForwardCache<T> {
    pub fn output(&self) -> &Tensor<T> {
        self.activations.last().expect("cache holds at least the input")
    }
}

impl<T: Scalar> Network<T> {
    /// Network with Glorot-uniform weights and zero biases.
    pub fn new<R: Rng + ?Sized>(layers: Vec<LayerSpec>, rng: &mut R) -> Result<Self> {
        let mut net = Self::zeroed(layers)?;
        for (spec, params) in net.layers.iter().zip(net.params.iter_mut()) {
            if let Some((fan_in, fan_out)) = spec.fans() {
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                for w in params[0].data_mut() {
                    *w = lit(rng.gen_range(-limit..limit));
                }
            }
        }
        Ok(net)
    }

    /// Network with every parameter set to zero.
    pub fn zeroed(layers: Vec<LayerSpec>) -> Result<Self> {
        for spec in &layers {
            spec.validate()?;
        }
        if layers.is_empty() {
            return Err(Error::InvalidSpec("network needs at least one layer".into()));
        }
        let params: Vec<Vec<Tensor<T>>> =
            layers.iter().map(|spec| spec.param_shapes().iter().map(|s| Tensor::zeros(s)).collect()).collect();
        let grads = params.clone();
        Ok(Self { layers, params, grads })
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn params(&self) -> &[Vec<Tensor<T>>] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Vec<Tensor<T>>] {
        &mut self.params
    }

    pub fn grads(&self) -> &[Vec<Tensor<T>>] {
        &self.grads
    }

    pub fn grads_mut(&mut self) -> &mut [Vec<Tensor<T>>] {
        &mut self.grads
    }

    /// Parameters and gradients, layer by layer, in storage order.
    pub(crate) fn params_and_grads_mut(&mut self) -> impl Iterator<Item = (&mut Tensor<T>, &mut Tensor<T>)> {
        self.params.iter_mut().flatten().zip(self.grads.iter_mut().flatten())
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(LayerSpec::param_count).sum()
    }

    pub fn zero_grads(&mut self) {
        self.grads.iter_mut().flatten().for_each(|g| g.fill(T::zero()));
    }

    /// All parameters flattened in storage order.
    pub fn flat_params(&self) -> Vec<T> {
        self.params.iter().flatten().flat_map(|t| t.data().iter().copied()).collect()
    }

    pub fn flat_grads(&self) -> Vec<T> {
        self.grads.iter().flatten().flat_map(|t| t.data().iter().copied()).collect()
    }

    pub fn set_flat_params(&mut self, values: &[T]) -> Result<()> {
        if values.len() != self.param_count() {
            return Err(Error::Shape(format!("expected {} parameters, got {}", self.param_count(), values.len())));
        }
        let mut offset = 0;
        for t in self.params.iter_mut().flatten() {
            let n = t.len();
            t.data_mut().copy_from_slice(&values[offset..offset + n]);
            offset += n;
        }
        Ok(())
    }

    /// Per-sample output shape for a per-sample input shape.
    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        let mut shape = input.to_vec();
        for (index, spec) in self.layers.iter().enumerate() {
            shape = spec.output_shape(&shape).map_err(|message| Error::LayerShape { layer: index, message })?;
        }
        Ok(shape)
    }

    fn apply_layer(&self, index: usize, input: &Tensor<T>) -> Result<Tensor<T>> {
        let spec = self.layers[index];
        let batch = input.batch();
        let out_sample =
            spec.output_shape(&input.shape()[1..]).map_err(|message| Error::LayerShape { layer: index, message })?;
        let mut out_shape = vec![batch];
        out_shape.extend_from_slice(&out_sample);
        let data = match spec {
            LayerSpec::Dense { in_dim, out_dim } => {
                let p = &self.params[index];
                dense_forward(input.data(), p[0].data(), p[1].data(), batch, in_dim, out_dim)
            }
            LayerSpec::Conv2d { .. } => {
                let p = &self.params[index];
                let geo = geometry(&spec, input.shape(), &out_sample);
                conv_forward(input.data(), p[0].data(), p[1].data(), &geo)
            }
            LayerSpec::Relu => input.data().iter().map(|&v| v.max(T::zero())).collect(),
            LayerSpec::Tanh => input.data().iter().map(|&v| v.tanh()).collect(),
            LayerSpec::Flatten => input.data().to_vec(),
        };
        Tensor::from_parts(out_shape, data)
    }

    fn check_input(&self, input: &Tensor<T>) -> Result<()> {
        if input.shape().len() < 2 {
            return Err(Error::LayerShape {
                layer: 0,
                message: format!("input needs a batch dimension, got shape {:?}", input.shape()),
            });
        }
        input.check_finite("network input")
    }

    /// Runs the network and records the activations needed by `backward`.
    pub fn forward(&self, input: &Tensor<T>) -> Result<(Tensor<T>, ForwardCache<T>)> {
        self.check_input(input)?;
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(input.clone());
        for index in 0..self.layers.len() {
            let next = self.apply_layer(index, activations.last().unwrap())?;
            activations.push(next);
        }
        let output = activations.last().unwrap().clone();
        output.check_finite("network output")?;
        Ok((output, ForwardCache { layers: self.layers.clone(), activations }))
    }

    /// Forward pass without recording activations.
    pub fn infer(&self, input: &Tensor<T>) -> Result<Tensor<T>> {
        self.check_input(input)?;
        let mut current = self.apply_layer(0, input)?;
        for index in 1..self.layers.len() {
            current = self.apply_layer(index, &current)?;
        }
        current.check_finite("network output")?;
        Ok(current)
    }

    /// Back-propagates `output_grad`, accumulating parameter gradients, and
    /// returns the gradient with respect to the network input.
    pub fn backward(&mut self, cache: &ForwardCache<T>, output_grad: &Tensor<T>) -> Result<Tensor<T>> {
        Ok(self.backward_impl(cache, output_grad, true)?.expect("input gradient requested"))
    }

    /// Like [`Network::backward`] but skips the first layer's input gradient.
    pub fn accumulate_grads(&mut self, cache: &ForwardCache<T>, output_grad: &Tensor<T>) -> Result<()> {
        self.backward_impl(cache, output_grad, false).map(|_| ())
    }

    fn backward_impl(
        &mut self,
        cache: &ForwardCache<T>,
        output_grad: &Tensor<T>,
        want_input_grad: bool,
    ) -> Result<Option<Tensor<T>>> {
        if cache.layers != self.layers || cache.activations.len() != self.layers.len() + 1 {
            return Err(Error::CacheMismatch("cache was produced by a different layer list".into()));
        }
        if output_grad.shape() != cache.output().shape() {
            return Err(Error::CacheMismatch(format!(
                "output gradient shape {:?} differs from output shape {:?}",
                output_grad.shape(),
                cache.output().shape()
            )));
        }
        output_grad.check_finite("output gradient")?;
        let mut grad = output_grad.data().to_vec();
        for index in (0..self.layers.len()).rev() {
            let input = &cache.activations[index];
            let output = &cache.activations[index + 1];
            let need_input = want_input_grad || index > 0;
            let spec = self.layers[index];
            grad = match spec {
                LayerSpec::Dense { in_dim, out_dim } => {
                    let w = self.params[index][0].data();
                    let (gw, gb) = split_grads(&mut self.grads[index]);
                    let g = dense_backward(input.data(), w, &grad, gw, gb, in_dim, out_dim, need_input);
                    g.unwrap_or_default()
                }
                LayerSpec::Conv2d { .. } => {
                    let geo = geometry(&spec, input.shape(), &output.shape()[1..]);
                    let w = self.params[index][0].data();
                    let (gw, gb) = split_grads(&mut self.grads[index]);
                    conv_backward(input.data(), w, &grad, gw, gb, &geo, need_input).unwrap_or_default()
                }
                LayerSpec::Relu => {
                    grad.iter().zip(input.data()).map(|(&g, &x)| if x > T::zero() { g } else { T::zero() }).collect()
                }
                LayerSpec::Tanh => grad.iter().zip(output.data()).map(|(&g, &y)| g * (T::one() - y * y)).collect(),
                LayerSpec::Flatten => grad,
            };
            if !need_input {
                return Ok(None);
            }
        }
        let input = &cache.activations[0];
        Ok(Some(Tensor::from_parts(input.shape().to_vec(), grad)?))
    }
}

fn split_grads<T: Scalar>(grads: &mut [Tensor<T>]) -> (&mut [T], &mut [T]) {
    let (w, b) = grads.split_at_mut(1);
    (w[0].data_mut(), b[0].data_mut())
}

fn geometry(spec: &LayerSpec, input_shape: &[usize], out_sample: &[usize]) -> ConvGeometry {
    let LayerSpec::Conv2d { in_channels, out_channels, kernel, stride, padding } = *spec else {
        unreachable!("geometry is only computed for conv layers")
    };
    ConvGeometry {
        batch: input_shape[0],
        in_channels,
        out_channels,
        in_h: input_shape[2],
        in_w: input_shape[3],
        out_h: out_sample[1],
        out_w: out_sample[2],
        kernel,
        stride,
        padding,
    }
}

/// Assembles a layer list from a per-sample input shape, inferring the input
/// width of each dense layer.
#[derive(Debug)]
pub struct NetworkBuilder {
    shape: Vec<usize>,
    layers: Vec<LayerSpec>,
    error: Option<Error>,
}

impl NetworkBuilder {
    pub fn new(input_shape: &[usize]) -> Self {
        Self { shape: input_shape.to_vec(), layers: Vec::new(), error: None }
    }

    fn push(mut self, spec: LayerSpec) -> Self {
        if self.error.is_some() {
            return self;
        }
        match spec.output_shape(&self.shape) {
            Ok(shape) => {
                self.shape = shape;
                self.layers.push(spec);
            }
            Err(message) => self.error = Some(Error::LayerShape { layer: self.layers.len(), message }),
        }
        self
    }

    pub fn dense(self, out_dim: usize) -> Self {
        let in_dim = if self.shape.len() == 1 { self.shape[0] } else { 0 };
        if in_dim == 0 {
            let layer = self.layers.len();
            let message = format!("dense needs a flat input, got {:?}", self.shape);
            return Self { error: Some(Error::LayerShape { layer, message }), ..self };
        }
        self.push(LayerSpec::dense(in_dim, out_dim))
    }

    pub fn conv3x3(self, out_channels: usize, stride: usize, padding: usize) -> Self {
        let in_channels = self.shape.first().copied().unwrap_or(0);
        self.push(LayerSpec::conv3x3(in_channels, out_channels, stride, padding))
    }

    pub fn relu(self) -> Self {
        self.push(LayerSpec::Relu)
    }

    pub fn tanh(self) -> Self {
        self.push(LayerSpec::Tanh)
    }

    pub fn flatten(self) -> Self {
        self.push(LayerSpec::Flatten)
    }

    pub fn output_shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn into_layers(self) -> Result<Vec<LayerSpec>> {
        match self.error {
            Some(e) => Err(e),
            None => Ok(self.layers),
        }
    }

    pub fn build<T: Scalar, R: Rng + ?Sized>(self, rng: &mut R) -> Result<Network<T>> {
        Network::new(self.into_layers()?, rng)
    }
}
