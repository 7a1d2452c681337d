use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::normalize::CanonicalImage;

pub const DEFAULT_TILE: u32 = 1024;
pub const DEFAULT_OVERLAP: u32 = 128;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TileError {
    #[error("tile dimensions must be at least 1 pixel")]
    ZeroTile,
    #[error("image dimensions must be at least 1 pixel")]
    ZeroImage,
    #[error("overlap {overlap} must be smaller than the tile dimension {tile}")]
    Overlap { overlap: u32, tile: u32 },
    #[error("tile ({x}, {y}, {w}x{h}) lies outside the {width}x{height} image")]
    OutOfBounds {
        x: u32,
        y: u32,
        w: u32,
        h: u32,
        width: u32,
        height: u32,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tile {
    pub row: u32,
    pub col: u32,
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl Tile {
    pub fn contains(&self, px: u32, py: u32) -> bool {
        px >= self.x && px < self.x + self.w && py >= self.y && py < self.y + self.h
    }

    /// `<stem>_r<row>_c<col>.png`
    pub fn file_name(&self, stem: &str) -> String {
        format!("{stem}_r{}_c{}.png", self.row, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TilePlan {
    pub width: u32,
    pub height: u32,
    pub tile_w: u32,
    pub tile_h: u32,
    pub overlap: u32,
    pub rows: u32,
    pub cols: u32,
    /// Row-major.
    pub tiles: Vec<Tile>,
}

impl TilePlan {
    pub fn len(&self) -> usize {
        self.tiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tiles.is_empty()
    }

    pub fn tile(&self, row: u32, col: u32) -> Option<&Tile> {
        if row >= self.rows || col >= self.cols {
            return None;
        }
        self.tiles.get((row * self.cols + col) as usize)
    }
}

/// Tile origins along one axis. A tile larger than the axis is clipped to
/// it; otherwise every tile has full size and the last one is moved back so
/// its far edge meets the boundary.
fn axis_origins(len: u32, tile: u32, overlap: u32) -> (Vec<u32>, u32) {
    if tile >= len {
        return (vec![0], len);
    }
    let stride = tile - overlap;
    let mut origins = vec![0];
    let mut pos = 0;
    while pos + tile < len {
        pos = (pos + stride).min(len - tile);
        origins.push(pos);
    }
    (origins, tile)
}

pub fn plan_tiles(width: u32, height: u32, tile_w: u32, tile_h: u32, overlap: u32) -> Result<TilePlan, TileError> {
    if tile_w == 0 || tile_h == 0 {
        return Err(TileError::ZeroTile);
    }
    if width == 0 || height == 0 {
        return Err(TileError::ZeroImage);
    }
    let min_tile = tile_w.min(tile_h);
    if overlap >= min_tile {
        return Err(TileError::Overlap { overlap, tile: min_tile });
    }
    let (xs, w) = axis_origins(width, tile_w, overlap);
    let (ys, h) = axis_origins(height, tile_h, overlap);
    let mut tiles = Vec::with_capacity(xs.len() * ys.len());
    for (row, &y) in ys.iter().enumerate() {
        for (col, &x) in xs.iter().enumerate() {
            tiles.push(Tile {
                row: row as u32,
                col: col as u32,
                x,
                y,
                w,
                h,
            });
        }
    }
    Ok(TilePlan {
        width,
        height,
        tile_w,
        tile_h,
        overlap,
        rows: ys.len() as u32,
        cols: xs.len() as u32,
        tiles,
    })
}

/// Pixel-exact copy of every planned rectangle.
pub fn crop(img: &CanonicalImage, plan: &TilePlan) -> Result<Vec<CanonicalImage>, TileError> {
    let mut out = Vec::with_capacity(plan.len());
    for t in &plan.tiles {
        if t.x as u64 + t.w as u64 > img.width() as u64 || t.y as u64 + t.h as u64 > img.height() as u64 {
            return Err(TileError::OutOfBounds {
                x: t.x,
                y: t.y,
                w: t.w,
                h: t.h,
                width: img.width(),
                height: img.height(),
            });
        }
        let stride = img.width() as usize;
        let mut pixels = Vec::with_capacity(t.w as usize * t.h as usize);
        for row in t.y..t.y + t.h {
            let start = row as usize * stride + t.x as usize;
            pixels.extend_from_slice(&img.pixels()[start..start + t.w as usize]);
        }
        let mut tile = CanonicalImage::new(t.w, t.h, pixels).map_err(|_| TileError::ZeroTile)?;
        tile.provenance = img.provenance.clone();
        out.push(tile);
    }
    Ok(out)
}

/// Write tiles as PNG files into `dir`, returning the paths in plan order.
pub fn write_tiles(
    tiles: &[CanonicalImage],
    plan: &TilePlan,
    dir: &Path,
    stem: &str,
) -> Result<Vec<PathBuf>, image::ImageError> {
    std::fs::create_dir_all(dir).map_err(image::ImageError::IoError)?;
    let mut paths = Vec::with_capacity(tiles.len());
    for (img, t) in tiles.iter().zip(&plan.tiles) {
        let path = dir.join(t.file_name(stem));
        img.save_png(&path)?;
        paths.push(path);
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn whole_image_tile() {
        let p = plan_tiles(1000, 800, 1000, 800, 0).unwrap();
        assert_eq!(p.tiles, vec![Tile { row: 0, col: 0, x: 0, y: 0, w: 1000, h: 800 }]);
    }

    #[test]
    fn last_column_moves_inward() {
        let p = plan_tiles(2000, 800, 1200, 800, 200).unwrap();
        let xs: Vec<u32> = p.tiles.iter().map(|t| t.x).collect();
        assert_eq!(xs, vec![0, 800]);
        assert!(p.tiles.iter().all(|t| t.w == 1200 && t.x + t.w <= 2000));
    }

    #[test]
    fn exact_stride_fit_needs_no_shift() {
        let p = plan_tiles(2200, 300, 1200, 300, 200).unwrap();
        let xs: Vec<u32> = p.tiles.iter().map(|t| t.x).collect();
        assert_eq!(xs, vec![0, 1000]);
    }

    #[test]
    fn overlap_must_be_below_tile_size() {
        assert_eq!(
            plan_tiles(2000, 800, 1200, 800, 1200),
            Err(TileError::Overlap { overlap: 1200, tile: 800 })
        );
        assert_eq!(plan_tiles(2000, 2000, 1200, 1200, 1200), Err(TileError::Overlap { overlap: 1200, tile: 1200 }));
        assert_eq!(plan_tiles(10, 10, 0, 5, 0), Err(TileError::ZeroTile));
    }

    #[test]
    fn small_image_gets_one_clipped_tile() {
        let p = plan_tiles(300, 200, 1024, 1024, 128).unwrap();
        assert_eq!(p.tiles, vec![Tile { row: 0, col: 0, x: 0, y: 0, w: 300, h: 200 }]);
    }

    #[test]
    fn row_major_order_and_lookup() {
        let p = plan_tiles(250, 250, 100, 100, 10).unwrap();
        assert_eq!((p.rows, p.cols), (3, 3));
        for (i, t) in p.tiles.iter().enumerate() {
            assert_eq!((t.row, t.col), (i as u32 / 3, i as u32 % 3));
        }
        assert_eq!(p.tile(2, 1).unwrap().y, 150);
        assert_eq!(p.tile(3, 0), None);
    }

    #[test]
    fn file_names() {
        let t = Tile { row: 2, col: 11, x: 0, y: 0, w: 1, h: 1 };
        assert_eq!(t.file_name("eastman"), "eastman_r2_c11.png");
    }

    #[test]
    fn empty_plan_crops_nothing() {
        let img = CanonicalImage::new(4, 4, vec![0; 16]).unwrap();
        let mut plan = plan_tiles(4, 4, 4, 4, 0).unwrap();
        plan.tiles.clear();
        assert!(crop(&img, &plan).unwrap().is_empty());
    }

    #[test]
    fn crop_rejects_foreign_plan() {
        let img = CanonicalImage::new(4, 4, vec![0; 16]).unwrap();
        let plan = plan_tiles(8, 8, 4, 4, 0).unwrap();
        assert!(matches!(crop(&img, &plan), Err(TileError::OutOfBounds { .. })));
    }
}
