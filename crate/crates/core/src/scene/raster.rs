use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Scene;
use crate::grid::{Grid, MAP_SIZE};
use crate::rng::stream;
use crate::{Error, Result};

const EPS: f64 = 1e-9;

/// Distance below the lowest ceiling for [`SliceMode::Center`].
pub const CENTER_SLICE_DROP_M: f64 = 0.75;

/// Offset from floor or ceiling for the extreme slice modes.
const EDGE_SLICE_OFFSET_M: f64 = 0.1;

/// Number of slices stacked by [`SliceMode::FiveRandom`].
pub const MULTI_SLICE_COUNT: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SliceMode {
    /// Below the lowest ceiling by [`CENTER_SLICE_DROP_M`].
    Center,
    /// One uniform height between floor and the highest ceiling.
    Random,
    Floor,
    /// Just below the highest ceiling.
    Ceiling,
    /// Several random heights, one map each.
    FiveRandom,
}

/// Binary top view of a scene at one or more slice heights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Floormap {
    /// Walls cut at the slice height.
    pub slice: Grid<bool>,
    /// Additional slices for multi-slice modes.
    pub extra_slices: Vec<Grid<bool>>,
    /// Pixels covered by any room.
    pub scene_mask: Grid<bool>,
    pub map_area_m: f64,
    /// World coordinate of the map's south-west corner.
    pub origin: [f64; 2],
    pub slice_heights: Vec<f64>,
}

impl Floormap {
    pub fn pixel_size_m(&self) -> f64 {
        self.map_area_m / MAP_SIZE as f64
    }

    /// Pixel `(row, col)` containing a world point; row 0 is the north edge.
    pub fn to_pixel(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let px = self.pixel_size_m();
        let c = ((x - self.origin[0]) / px).floor();
        let r = ((y - self.origin[1]) / px).floor();
        if c < 0.0 || r < 0.0 || c >= MAP_SIZE as f64 || r >= MAP_SIZE as f64 {
            return None;
        }
        Some((MAP_SIZE - 1 - r as usize, c as usize))
    }

    /// World coordinate of a pixel center.
    pub fn pixel_center(&self, row: usize, col: usize) -> [f64; 2] {
        let px = self.pixel_size_m();
        [self.origin[0] + (col as f64 + 0.5) * px, self.origin[1] + ((MAP_SIZE - 1 - row) as f64 + 0.5) * px]
    }

    /// All slice maps, primary first.
    pub fn slices(&self) -> impl Iterator<Item = &Grid<bool>> {
        std::iter::once(&self.slice).chain(&self.extra_slices)
    }
}

/// Pixel indices whose extent overlaps `(a, b)` with positive length, given
/// map-relative coordinates in pixel units.
fn overlap_span(a: f64, b: f64) -> std::ops::Range<i64> {
    let lo = (a + EPS).floor() as i64;
    let hi = (b - EPS).ceil() as i64;
    lo.max(0)..hi.min(MAP_SIZE as i64)
}

fn slice_heights(scene: &Scene, mode: SliceMode, seed: u64) -> Vec<f64> {
    let lowest = scene.rooms.iter().map(|r| r.height).fold(f64::INFINITY, f64::min);
    let highest = scene.rooms.iter().map(|r| r.height).fold(0.0, f64::max);
    let mut rng = stream(seed, &["slice"]);
    let mut random = || rng.random_range(EDGE_SLICE_OFFSET_M..(highest - EDGE_SLICE_OFFSET_M).max(0.2));
    match mode {
        SliceMode::Center => vec![(lowest - CENTER_SLICE_DROP_M).max(EDGE_SLICE_OFFSET_M)],
        SliceMode::Random => vec![random()],
        SliceMode::Floor => vec![EDGE_SLICE_OFFSET_M],
        SliceMode::Ceiling => vec![highest - EDGE_SLICE_OFFSET_M],
        SliceMode::FiveRandom => (0..MULTI_SLICE_COUNT).map(|_| random()).collect(),
    }
}

/// Rasterizes a scene centered in a `map_area_m` square.
///
/// Wall lines are clamped into the pixel footprint of their own room so the
/// slice never leaves the scene mask.
pub fn rasterize_floormap(scene: &Scene, mode: SliceMode, map_area_m: f64, seed: u64) -> Result<Floormap> {
    if map_area_m <= 0.0 {
        return Err(Error::InvalidArgument("map area must be positive".into()));
    }
    let n = MAP_SIZE;
    let empty = Grid::filled(n, n, false);
    let Some((lo, hi)) = scene.bbox() else {
        return Ok(Floormap {
            slice: empty.clone(),
            extra_slices: Vec::new(),
            scene_mask: empty,
            map_area_m,
            origin: [0.0, 0.0],
            slice_heights: Vec::new(),
        });
    };
    let (w, d) = (hi[0] - lo[0], hi[1] - lo[1]);
    if w > map_area_m + EPS || d > map_area_m + EPS {
        return Err(Error::SceneTooLarge { width: w, depth: d, map_area: map_area_m });
    }
    let origin = [0.5 * (lo[0] + hi[0]) - 0.5 * map_area_m, 0.5 * (lo[1] + hi[1]) - 0.5 * map_area_m];
    let px = map_area_m / n as f64;
    let to_px = |v: f64, axis: usize| (v - origin[axis]) / px;
    let flip = |r: i64| n - 1 - r as usize;

    let spans: Vec<_> = scene
        .rooms
        .iter()
        .map(|room| {
            (
                overlap_span(to_px(room.min()[0], 0), to_px(room.max()[0], 0)),
                overlap_span(to_px(room.min()[1], 1), to_px(room.max()[1], 1)),
            )
        })
        .collect();
    let mut scene_mask = empty.clone();
    for (cols, rows) in &spans {
        for r in rows.clone() {
            for c in cols.clone() {
                scene_mask.set(flip(r), c as usize, true);
            }
        }
    }

    let heights = slice_heights(scene, mode, seed);
    let mut slices = heights.iter().map(|&h| {
        let mut slice = empty.clone();
        for piece in scene.wall_pieces(Some(h)) {
            let (cols, rows) = &spans[piece.room];
            if cols.is_empty() || rows.is_empty() {
                continue;
            }
            let clamp = |v: f64, span: &std::ops::Range<i64>| (v.floor() as i64).clamp(span.start, span.end - 1);
            if (piece.a[1] - piece.b[1]).abs() < EPS {
                let r = clamp(to_px(piece.a[1], 1), rows);
                for c in overlap_span(to_px(piece.a[0], 0), to_px(piece.b[0], 0)) {
                    slice.set(flip(r), c as usize, true);
                }
            } else {
                let c = clamp(to_px(piece.a[0], 0), cols);
                for r in overlap_span(to_px(piece.a[1], 1), to_px(piece.b[1], 1)) {
                    slice.set(flip(r), c as usize, true);
                }
            }
        }
        slice
    });
    let slice = slices.next().unwrap_or_else(|| empty.clone());
    let extra_slices = slices.collect();
    Ok(Floormap { slice, extra_slices, scene_mask, map_area_m, origin, slice_heights: heights })
}
