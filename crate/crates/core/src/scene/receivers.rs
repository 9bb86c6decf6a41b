use rand::seq::index::sample;

use serde::{Deserialize, Serialize};

use super::{Position, Scene};
use crate::rng::stream;
use crate::{Error, Result};

/// Receiver grid pitch, in meters.
pub const RECEIVER_SPACING_M: f64 = 0.3;

/// Minimum distance from a receiver to any wall of its room, in meters.
pub const RECEIVER_CLEARANCE_M: f64 = 0.5;

/// Source positions drawn per room.
pub const SOURCES_PER_ROOM: usize = 3;

/// Receiver grid and source count settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlacementConfig {
    pub spacing_m: f64,
    pub clearance_m: f64,
    pub sources_per_room: usize,
}

impl Default for PlacementConfig {
    fn default() -> Self {
        Self { spacing_m: RECEIVER_SPACING_M, clearance_m: RECEIVER_CLEARANCE_M, sources_per_room: SOURCES_PER_ROOM }
    }
}

impl PlacementConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.spacing_m > 0.0 && self.clearance_m >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "receiver spacing {} and clearance {} must be positive",
                self.spacing_m, self.clearance_m
            )));
        }
        Ok(())
    }
}

fn axis_points(lo: f64, hi: f64, cfg: &PlacementConfig) -> Vec<f64> {
    let span = hi - lo - 2.0 * cfg.clearance_m;
    if span < -1e-9 {
        return Vec::new();
    }
    let span = span.max(0.0);
    let n = (span / cfg.spacing_m + 1e-9).floor() as usize + 1;
    let start = lo + cfg.clearance_m + 0.5 * (span - (n - 1) as f64 * cfg.spacing_m);
    (0..n).map(|i| start + i as f64 * cfg.spacing_m).collect()
}

/// Axis-aligned receiver grid per room, centered in the room and clipped
/// to the clearance rule. Ordered by room, then row (y), then column (x).
pub fn receiver_grid(scene: &Scene) -> Vec<Position> {
    receiver_grid_with(scene, &PlacementConfig::default())
}

pub fn receiver_grid_with(scene: &Scene, cfg: &PlacementConfig) -> Vec<Position> {
    let mut out = Vec::new();
    for (ri, room) in scene.rooms.iter().enumerate() {
        let xs = axis_points(room.min()[0], room.max()[0], cfg);
        let ys = axis_points(room.min()[1], room.max()[1], cfg);
        if xs.is_empty() || ys.is_empty() {
            log::warn!("room {ri} ({:.2} x {:.2} m) is too small for receivers", room.size[0], room.size[1]);
            continue;
        }
        for &y in &ys {
            for &x in &xs {
                out.push(Position { x, y, room: ri });
            }
        }
    }
    out
}

/// Up to [`SOURCES_PER_ROOM`] receivers per room, drawn uniformly without
/// replacement. Returns indices into `scene.receivers`.
pub fn place_sources(scene: &Scene, seed: u64) -> Vec<usize> {
    place_sources_with(scene, seed, SOURCES_PER_ROOM)
}

pub fn place_sources_with(scene: &Scene, seed: u64, per_room: usize) -> Vec<usize> {
    let mut rng = stream(seed, &["sources"]);
    let mut out = Vec::new();
    for ri in 0..scene.rooms.len() {
        let pool: Vec<usize> = (0..scene.receivers.len()).filter(|&i| scene.receivers[i].room == ri).collect();
        let k = per_room.min(pool.len());
        let mut picked: Vec<usize> = sample(&mut rng, pool.len(), k).into_iter().map(|j| pool[j]).collect();
        picked.sort_unstable();
        out.extend(picked);
    }
    out
}

/// Fills in receivers and sources of a scene.
pub fn populate_positions(scene: &mut Scene, seed: u64) {
    populate_positions_with(scene, seed, &PlacementConfig::default());
}

pub fn populate_positions_with(scene: &mut Scene, seed: u64, cfg: &PlacementConfig) {
    scene.receivers = receiver_grid_with(scene, cfg);
    scene.sources = place_sources_with(scene, seed, cfg.sources_per_room);
}
