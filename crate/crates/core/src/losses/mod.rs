//! Training objective on predicted UVs: rotation alignment, reconstruction,
//! soft-silhouette, singular-value distortion and flip terms, each with an
//! analytic gradient.

mod horn;
mod raster;
mod terms;
mod total;

pub use horn::{
    alignment_residual, centroid, horn_align, optimal_angle, similarity_align, svd2, Alignment,
    Rotation2, Svd2,
};
pub use raster::{
    boundary_edges, rasterize_silhouette, silhouette_loss, RasterConfig, SilhouetteImage,
    SoftRaster, MIN_RESOLUTION,
};
pub use terms::{
    distortion_loss, distortion_metric, distortion_sums, overlap_terms, recon_loss,
    DistortionSums, OverlapTerms, DEFAULT_MARGIN,
};
pub use total::{total_loss, LossContext, LossReport, LossWeights};
