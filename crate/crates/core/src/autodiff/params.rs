use indexmap::IndexMap;
use ndarray::Array2;
use rand::Rng;

use super::AutodiffError;

pub type Gradients = IndexMap<String, Array2<f64>>;

/// Named trainable matrices in insertion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Parameters {
    values: IndexMap<String, Array2<f64>>,
}

impl Parameters {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Array2<f64>) {
        self.values.insert(name.into(), value);
    }

    /// Uniform in `±√(6/(fan_in+fan_out))`.
    pub fn insert_glorot<R: Rng>(
        &mut self,
        name: impl Into<String>,
        rows: usize,
        cols: usize,
        rng: &mut R,
    ) {
        let bound = (6.0 / (rows + cols).max(1) as f64).sqrt();
        let value = Array2::from_shape_fn((rows, cols), |_| rng.random_range(-bound..=bound));
        self.insert(name, value);
    }

    pub fn insert_zeros(&mut self, name: impl Into<String>, rows: usize, cols: usize) {
        self.insert(name, Array2::zeros((rows, cols)));
    }

    pub fn get(&self, name: &str) -> Result<&Array2<f64>, AutodiffError> {
        self.values
            .get(name)
            .ok_or_else(|| AutodiffError::UnknownParameter(name.to_string()))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Array2<f64>, AutodiffError> {
        self.values
            .get_mut(name)
            .ok_or_else(|| AutodiffError::UnknownParameter(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.values.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Array2<f64>)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Array2<f64>)> {
        self.values.iter_mut().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Total number of scalars.
    pub fn n_scalars(&self) -> usize {
        self.values.values().map(|v| v.len()).sum()
    }
}
