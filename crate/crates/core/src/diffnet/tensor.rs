use crate::{Error, Result, Scalar};

/// Dense row-major tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    /// Builds a tensor, rejecting inconsistent shapes and non-finite values.
    pub fn new(shape: Vec<usize>, data: Vec<T>) -> Result<Self> {
        let tensor = Self::from_parts(shape, data)?;
        tensor.check_finite("tensor construction")?;
        Ok(tensor)
    }

    /// Like [`Tensor::new`] but leaves finiteness to the caller.
    pub(crate) fn from_parts(shape: Vec<usize>, data: Vec<T>) -> Result<Self> {
        if shape.contains(&0) {
            return Err(Error::Shape(format!("zero-sized dimension in {shape:?}")));
        }
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::Shape(format!("shape {shape:?} holds {expected} values, got {}", data.len())));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let len = shape.iter().product();
        Self { shape: shape.to_vec(), data: vec![T::zero(); len] }
    }

    /// 1-D tensor from a slice.
    pub fn from_slice(values: &[T]) -> Result<Self> {
        Self::new(vec![values.len()], values.to_vec())
    }

    pub fn scalar(value: T) -> Self {
        Self { shape: vec![1], data: vec![value] }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    /// Reinterprets the buffer under a new shape of equal size.
    pub fn reshape(self, shape: Vec<usize>) -> Result<Self> {
        Self::from_parts(shape, self.data)
    }

    pub fn fill(&mut self, value: T) {
        self.data.iter_mut().for_each(|x| *x = value);
    }

    pub fn check_finite(&self, context: &str) -> Result<()> {
        if self.data.iter().all(|x| x.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite(context.to_string()))
        }
    }

    /// Size of the leading (batch) dimension.
    pub fn batch(&self) -> usize {
        self.shape[0]
    }

    /// Values of the `index`-th slice along the leading dimension.
    pub fn row(&self, index: usize) -> &[T] {
        let width = self.data.len() / self.shape[0];
        &self.data[index * width..(index + 1) * width]
    }
}
