//! Exploratory diagnostics: PCA, correlations, histograms, seasonality and
//! plot-data export.

pub mod describe;
pub mod export;
pub mod pca;

pub use describe::{
    circular_histogram, linear_histogram, monthly_presence_counts, pearson_matrix, point_biserial,
    Histogram, MonthlyCounts, DEFAULT_CIRCULAR_BINS, DEFAULT_LINEAR_BINS,
};
pub use pca::{pca_fit, pca_inverse, pca_transform, PcaModel};
