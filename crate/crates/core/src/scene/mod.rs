//! Multi-room shoebox scenes: geometry, materials, receivers and floormaps.
//!
//! Coordinates are meters in the horizontal plane, `x` to the east and `y` to
//! the north. Every room is an axis-aligned box resting on the floor at z = 0.

mod generate;
mod materials;
mod raster;
mod receivers;
mod stats;

use serde::{Deserialize, Serialize};

pub use generate::{gen_grid_scene, gen_line_scene, SizeRanges};
pub use materials::{assign_materials, default_library, material_variants, Material, SurfaceMaterials};
pub use raster::{rasterize_floormap, Floormap, SliceMode};
pub use receivers::{
    place_sources, place_sources_with, populate_positions, populate_positions_with, receiver_grid, receiver_grid_with,
    PlacementConfig, RECEIVER_CLEARANCE_M, RECEIVER_SPACING_M, SOURCES_PER_ROOM,
};
pub use stats::{dataset_stats, FloormapStats};

/// Height of sources and receivers above the floor, in meters.
pub const LISTENER_HEIGHT_M: f64 = 1.5;

/// Narrowest allowed doorframe, in meters.
pub const MIN_DOOR_WIDTH_M: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Room {
    /// South-west corner.
    pub origin: [f64; 2],
    /// Extent along x and y.
    pub size: [f64; 2],
    pub height: f64,
    pub materials: Option<SurfaceMaterials>,
}

impl Room {
    pub fn min(&self) -> [f64; 2] {
        self.origin
    }

    pub fn max(&self) -> [f64; 2] {
        [self.origin[0] + self.size[0], self.origin[1] + self.size[1]]
    }

    pub fn volume(&self) -> f64 {
        self.size[0] * self.size[1] * self.height
    }

    pub fn floor_area(&self) -> f64 {
        self.size[0] * self.size[1]
    }

    pub fn wall_area(&self) -> f64 {
        2.0 * (self.size[0] + self.size[1]) * self.height
    }

    pub fn surface_area(&self) -> f64 {
        2.0 * self.floor_area() + self.wall_area()
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let [x0, y0] = self.min();
        let [x1, y1] = self.max();
        x >= x0 && x <= x1 && y >= y0 && y <= y1
    }

    /// Distance from an interior point to the nearest wall.
    pub fn clearance(&self, x: f64, y: f64) -> f64 {
        let [x0, y0] = self.min();
        let [x1, y1] = self.max();
        (x - x0).min(x1 - x).min(y - y0).min(y1 - y)
    }
}

/// Orientation of the wall a doorframe sits in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WallAxis {
    /// Wall at constant x, the opening spans y.
    ConstX,
    /// Wall at constant y, the opening spans x.
    ConstY,
}

/// Full-height opening in the wall shared by two rooms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Doorframe {
    pub rooms: [usize; 2],
    pub axis: WallAxis,
    /// Position of the wall along its normal.
    pub coordinate: f64,
    /// Opening interval along the wall.
    pub span: [f64; 2],
    /// Opening height: the lower of the two ceilings.
    pub height: f64,
}

impl Doorframe {
    pub fn width(&self) -> f64 {
        self.span[1] - self.span[0]
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height
    }

    pub fn center(&self) -> [f64; 2] {
        let mid = 0.5 * (self.span[0] + self.span[1]);
        match self.axis {
            WallAxis::ConstX => [self.coordinate, mid],
            WallAxis::ConstY => [mid, self.coordinate],
        }
    }

    pub fn other(&self, room: usize) -> Option<usize> {
        match self.rooms {
            [a, b] if a == room => Some(b),
            [a, b] if b == room => Some(a),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pattern {
    Line,
    Grid,
}

/// A receiver location; sources are drawn from these.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
    pub room: usize,
}

impl Position {
    pub fn distance(&self, other: &Position) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub rooms: Vec<Room>,
    pub doorframes: Vec<Doorframe>,
    pub pattern: Pattern,
    pub receivers: Vec<Position>,
    /// Indices into `receivers`.
    pub sources: Vec<usize>,
    pub rng_seed: u64,
}

/// A straight wall piece with no opening, at floor level up to `top`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WallPiece {
    pub room: usize,
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub top: f64,
}

impl Scene {
    pub fn empty(pattern: Pattern) -> Self {
        Self { rooms: vec![], doorframes: vec![], pattern, receivers: vec![], sources: vec![], rng_seed: 0 }
    }

    /// Axis-aligned bounding box `(min, max)` of all rooms.
    pub fn bbox(&self) -> Option<([f64; 2], [f64; 2])> {
        let mut it = self.rooms.iter();
        let first = it.next()?;
        let (mut lo, mut hi) = (first.min(), first.max());
        for r in it {
            lo = [lo[0].min(r.min()[0]), lo[1].min(r.min()[1])];
            hi = [hi[0].max(r.max()[0]), hi[1].max(r.max()[1])];
        }
        Some((lo, hi))
    }

    pub fn room_at(&self, x: f64, y: f64) -> Option<usize> {
        self.rooms.iter().position(|r| r.contains(x, y))
    }

    pub fn source_positions(&self) -> Vec<Position> {
        self.sources.iter().map(|&i| self.receivers[i]).collect()
    }

    /// Doorframe indices touching each room.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.rooms.len()];
        for (d, door) in self.doorframes.iter().enumerate() {
            adj[door.rooms[0]].push(d);
            adj[door.rooms[1]].push(d);
        }
        adj
    }

    /// Rooms reachable from room 0 through doorframes cover every room.
    pub fn is_connected(&self) -> bool {
        if self.rooms.is_empty() {
            return true;
        }
        let adj = self.adjacency();
        let mut seen = vec![false; self.rooms.len()];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(r) = stack.pop() {
            for &d in &adj[r] {
                if let Some(o) = self.doorframes[d].other(r) {
                    if !seen[o] {
                        seen[o] = true;
                        stack.push(o);
                    }
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Wall pieces present at `height`, with doorframe openings removed
    /// wherever the opening reaches that height.
    pub fn wall_pieces(&self, height: Option<f64>) -> Vec<WallPiece> {
        let mut pieces = Vec::new();
        for (ri, room) in self.rooms.iter().enumerate() {
            if height.is_some_and(|h| h >= room.height) {
                continue;
            }
            let [x0, y0] = room.min();
            let [x1, y1] = room.max();
            let edges = [
                (WallAxis::ConstY, y0, x0, x1),
                (WallAxis::ConstY, y1, x0, x1),
                (WallAxis::ConstX, x0, y0, y1),
                (WallAxis::ConstX, x1, y0, y1),
            ];
            for (axis, coord, lo, hi) in edges {
                let mut openings: Vec<[f64; 2]> = self
                    .doorframes
                    .iter()
                    .filter(|d| d.rooms.contains(&ri) && d.axis == axis && (d.coordinate - coord).abs() < 1e-9)
                    .filter(|d| height.is_none_or(|h| h < d.height))
                    .map(|d| d.span)
                    .collect();
                openings.sort_by(|a, b| a[0].total_cmp(&b[0]));
                let mut cursor = lo;
                let mut push = |s: f64, e: f64| {
                    if e - s > 1e-9 {
                        let (a, b) = match axis {
                            WallAxis::ConstY => ([s, coord], [e, coord]),
                            WallAxis::ConstX => ([coord, s], [coord, e]),
                        };
                        pieces.push(WallPiece { room: ri, a, b, top: room.height });
                    }
                };
                for o in openings {
                    push(cursor, o[0].max(cursor));
                    cursor = cursor.max(o[1]);
                }
                push(cursor, hi);
            }
        }
        pieces
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_rooms() -> Scene {
        let room = |x: f64| Room { origin: [x, 0.0], size: [3.0, 3.0], height: 3.0, materials: None };
        Scene {
            rooms: vec![room(0.0), room(3.0)],
            doorframes: vec![Doorframe {
                rooms: [0, 1],
                axis: WallAxis::ConstX,
                coordinate: 3.0,
                span: [1.0, 2.0],
                height: 3.0,
            }],
            ..Scene::empty(Pattern::Line)
        }
    }

    #[test]
    fn wall_pieces_skip_openings() {
        let s = two_rooms();
        let pieces = s.wall_pieces(Some(1.0));
        // each room: 3 full walls + shared wall split in two
        assert_eq!(pieces.len(), 10);
        let total: f64 = pieces.iter().map(|p| ((p.b[0] - p.a[0]).powi(2) + (p.b[1] - p.a[1]).powi(2)).sqrt()).sum();
        assert!((total - (24.0 - 2.0)).abs() < 1e-9);
        // above every ceiling there is nothing left
        assert!(s.wall_pieces(Some(3.5)).is_empty());
    }

    #[test]
    fn connectivity() {
        let mut s = two_rooms();
        assert!(s.is_connected());
        s.doorframes.clear();
        assert!(!s.is_connected());
    }
}
