use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Labelled multi-temporal pixels: `X ∈ ℝ^{i × t × b}` plus one class id per
/// sample. Class ids index into `classes`.
#[derive(Clone, Debug, PartialEq)]
pub struct PixelDataset {
    x: Tensor<f32>,
    labels: Vec<usize>,
    classes: Vec<String>,
    pub provenance: String,
}

impl PixelDataset {
    pub fn new(x: Tensor<f32>, labels: Vec<usize>, classes: Vec<String>) -> Result<Self> {
        if x.rank() != 3 {
            return Err(Error::data(format!("dataset tensor must be i × t × b, got {:?}", x.shape())));
        }
        if labels.len() != x.shape()[0] {
            return Err(Error::data(format!("{} labels for {} samples", labels.len(), x.shape()[0])));
        }
        if let Some(bad) = labels.iter().find(|&&l| l >= classes.len()) {
            return Err(Error::data(format!("label {bad} outside catalog of {} classes", classes.len())));
        }
        Ok(PixelDataset { x, labels, classes, provenance: String::new() })
    }

    pub fn with_provenance(mut self, note: impl Into<String>) -> Self {
        self.provenance = note.into();
        self
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn time_steps(&self) -> usize {
        self.x.shape()[1]
    }

    pub fn bands(&self) -> usize {
        self.x.shape()[2]
    }

    pub fn features(&self) -> usize {
        self.time_steps() * self.bands()
    }

    pub fn shape(&self) -> [usize; 3] {
        [self.len(), self.time_steps(), self.bands()]
    }

    pub fn x(&self) -> &Tensor<f32> {
        &self.x
    }

    pub fn x_mut(&mut self) -> &mut Tensor<f32> {
        &mut self.x
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    /// Flat `t·b` feature row of sample `i`.
    pub fn row(&self, i: usize) -> &[f32] {
        self.x.row(i)
    }

    /// Sample `i` as a `t × b` matrix.
    pub fn sample(&self, i: usize) -> Tensor<f32> {
        Tensor::new(vec![self.time_steps(), self.bands()], self.row(i).to_vec()).expect("row has t·b values")
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.classes.len()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// New dataset holding the given samples in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::EmptyDataset("subset selects no samples".into()));
        }
        let f = self.features();
        let mut data = Vec::with_capacity(indices.len() * f);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        let x = Tensor::new(vec![indices.len(), self.time_steps(), self.bands()], data)?;
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        Ok(PixelDataset { x, labels, classes: self.classes.clone(), provenance: self.provenance.clone() })
    }
}
