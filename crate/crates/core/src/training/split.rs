use crate::data::PixelDataset;
use crate::error::{Error, Result};
use crate::tensor::RngState;

/// Per-class training counts: floors of `nₖ·fraction`, with the slots still
/// missing from `round(N·fraction)` handed to the largest remainders.
/// Remainders are compared at 1e-9 resolution; ties go to the lower class.
pub fn stratified_allocation(counts: &[usize], fraction: f64) -> Result<Vec<usize>> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::param(format!("train fraction must be in (0, 1), got {fraction}")));
    }
    if let Some(k) = counts.iter().position(|&n| n == 0) {
        return Err(Error::data(format!("class {k} has no samples")));
    }
    let total: usize = counts.iter().sum();
    let target = (total as f64 * fraction).round() as usize;
    let shares: Vec<f64> = counts.iter().map(|&n| n as f64 * fraction).collect();
    let mut alloc: Vec<usize> = shares.iter().map(|s| s.floor() as usize).collect();
    let rem: Vec<i64> = shares.iter().zip(&alloc).map(|(s, &f)| ((s - f as f64) * 1e9).round() as i64).collect();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| rem[b].cmp(&rem[a]).then(a.cmp(&b)));
    let missing = target.saturating_sub(alloc.iter().sum());
    for &k in order.iter().take(missing) {
        alloc[k] += 1;
    }
    Ok(alloc)
}

/// Seeded stratified split. Indices within each part are in dataset order.
pub fn stratified_split(d: &PixelDataset, train_fraction: f64, seed: u64) -> Result<(PixelDataset, PixelDataset)> {
    let (train, test) = stratified_indices(d, train_fraction, seed)?;
    Ok((d.subset(&train)?, d.subset(&test)?))
}

pub fn stratified_indices(d: &PixelDataset, train_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    let alloc = stratified_allocation(&d.class_counts(), train_fraction)?;
    let mut rng = RngState::new(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (k, &n_train) in alloc.iter().enumerate() {
        let mut members: Vec<usize> = (0..d.len()).filter(|&i| d.labels()[i] == k).collect();
        rng.shuffle(&mut members);
        train.extend_from_slice(&members[..n_train]);
        test.extend_from_slice(&members[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}
