//! Garment geometry image codec: sewing patterns, UV layout, rasterization,
//! remeshing and seam stitching.

pub mod fixtures;
pub mod geom;
pub mod ggi_io;
pub mod layout;
pub mod mesh_io;
pub mod metrics;
pub mod palette;
pub mod pattern;
pub mod pipeline;
pub mod raster;
pub mod remesh;
pub mod stitcher;
