//! Pixel datasets: assembly from band grids, synthetic generation, file I/O
//! and PCA export.

mod bands;
mod dataset;
mod io;
mod pca;
mod synth;

pub use bands::{assemble_dataset, ndvi, ndvi_value, BandStack, LabelMask, ASSEMBLED_BANDS};
pub use dataset::PixelDataset;
pub use io::{
    load_dataset, read_csv_dataset, read_dataset, save_dataset, write_dataset, dataset_file_size,
};
pub use pca::{pca_project, write_pca_csv, write_ratios_csv, PcaProjection};
pub use synth::{synth_generate, SeasonalCurve, SynthSpec, REFERENCE_LAND_COVER, REFERENCE_TOTAL};
