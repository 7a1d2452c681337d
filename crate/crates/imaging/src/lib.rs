//! Diagram preprocessing: luminance conversion, contrast stretch and
//! fixed-grid overlapping tiles.

pub mod normalize;
pub mod tiles;

pub use normalize::{
    load_and_normalize, normalize, percentile, stretch_contrast, CanonicalImage, LoadError, NormalizeOptions,
    Provenance, Stretch,
};
pub use tiles::{crop, plan_tiles, write_tiles, Tile, TileError, TilePlan, DEFAULT_OVERLAP, DEFAULT_TILE};
