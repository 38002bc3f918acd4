use super::PixelDataset;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// `(NIR − Red) / (NIR + Red)` for one reflectance pair; `0` where both are zero.
#[inline]
pub fn ndvi_value(nir: f32, red: f32) -> f32 {
    let sum = nir + red;
    if sum == 0.0 {
        0.0
    } else {
        (nir - red) / sum
    }
}

/// Element-wise NDVI of a near-infrared (B8) and a red (B4) grid.
pub fn ndvi(b8: &[f32], b4: &[f32]) -> Result<Vec<f32>> {
    if b8.len() != b4.len() {
        return Err(Error::data(format!("NDVI grids differ in size: {} vs {}", b8.len(), b4.len())));
    }
    Ok(b8.iter().zip(b4).map(|(&n, &r)| ndvi_value(n, r)).collect())
}

/// Reflectance grids for one acquisition date, `height × width` row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct BandStack {
    /// ISO date, e.g. `2015-07-18`; stacks must be in strictly increasing order.
    pub date: String,
    pub height: usize,
    pub width: usize,
    pub blue: Vec<f32>,
    pub green: Vec<f32>,
    pub red: Vec<f32>,
    pub nir: Vec<f32>,
}

impl BandStack {
    fn check(&self) -> Result<()> {
        let n = self.height * self.width;
        for (name, grid) in [("B2", &self.blue), ("B3", &self.green), ("B4", &self.red), ("B8", &self.nir)] {
            if grid.len() != n {
                return Err(Error::data(format!(
                    "{} band {name} has {} cells, expected {}×{}",
                    self.date,
                    grid.len(),
                    self.height,
                    self.width
                )));
            }
        }
        Ok(())
    }
}

/// Ground-truth class per grid cell; `None` for unlabelled cells.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelMask {
    pub height: usize,
    pub width: usize,
    pub cells: Vec<Option<usize>>,
    pub classes: Vec<String>,
}

/// Bands per sample produced by [`assemble_dataset`]: B2, B3, B4, B8, NDVI.
pub const ASSEMBLED_BANDS: usize = 5;

/// Extracts every labelled cell across all dates into a `i × t × 5` dataset.
/// Rows follow date order; columns are B2, B3, B4, B8 and NDVI. Samples are
/// taken in row-major cell order.
pub fn assemble_dataset(stacks: &[BandStack], mask: &LabelMask) -> Result<PixelDataset> {
    if stacks.is_empty() {
        return Err(Error::data("need at least one acquisition date"));
    }
    if mask.cells.len() != mask.height * mask.width {
        return Err(Error::data("label mask cell count does not match its dims"));
    }
    for s in stacks {
        s.check()?;
        if (s.height, s.width) != (mask.height, mask.width) {
            return Err(Error::data(format!(
                "{} is {}×{}, mask is {}×{}",
                s.date, s.height, s.width, mask.height, mask.width
            )));
        }
    }
    if let Some(w) = stacks.windows(2).find(|w| w[0].date >= w[1].date) {
        return Err(Error::data(format!("dates not strictly increasing: {} then {}", w[0].date, w[1].date)));
    }

    let t = stacks.len();
    let labelled: Vec<(usize, usize)> =
        mask.cells.iter().enumerate().filter_map(|(cell, l)| l.map(|l| (cell, l))).collect();
    if labelled.is_empty() {
        return Err(Error::EmptyDataset("mask has no labelled cells".into()));
    }
    let mut data = Vec::with_capacity(labelled.len() * t * ASSEMBLED_BANDS);
    for &(cell, _) in &labelled {
        for s in stacks {
            let (nir, red) = (s.nir[cell], s.red[cell]);
            data.extend_from_slice(&[s.blue[cell], s.green[cell], red, nir, ndvi_value(nir, red)]);
        }
    }
    let x = Tensor::new(vec![labelled.len(), t, ASSEMBLED_BANDS], data)?;
    let labels = labelled.into_iter().map(|(_, l)| l).collect();
    PixelDataset::new(x, labels, mask.classes.clone())
}
