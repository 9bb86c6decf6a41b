use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Doorframe, Pattern, Room, Scene, WallAxis, MIN_DOOR_WIDTH_M};
use crate::rng::{stream, StreamRng};
use crate::{Error, Result};

/// Uniform ranges for room extents, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SizeRanges {
    pub width: (f64, f64),
    pub depth: (f64, f64),
    pub height: (f64, f64),
}

impl Default for SizeRanges {
    fn default() -> Self {
        Self { width: (2.5, 6.0), depth: (2.5, 6.0), height: (2.4, 4.0) }
    }
}

impl SizeRanges {
    fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [("width", self.width), ("depth", self.depth), ("height", self.height)] {
            if !(lo > 0.0 && hi >= lo) {
                return Err(Error::InvalidArgument(format!("{name} range ({lo}, {hi})")));
            }
        }
        if self.depth.0 < MIN_DOOR_WIDTH_M {
            return Err(Error::InvalidArgument("rooms must be deep enough for a doorframe".into()));
        }
        Ok(())
    }
}

fn uniform(rng: &mut StreamRng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo { rng.random_range(lo..=hi) } else { lo }
}

/// Random door on the shared interval `[lo, hi]` of a wall.
fn door_span(rng: &mut StreamRng, lo: f64, hi: f64) -> [f64; 2] {
    let width = uniform(rng, (MIN_DOOR_WIDTH_M, hi - lo));
    let start = uniform(rng, (lo, hi - width));
    [start, start + width]
}

fn check_fits(scene: &Scene, map_area_m: f64) -> Result<()> {
    if let Some((lo, hi)) = scene.bbox() {
        let (w, d) = (hi[0] - lo[0], hi[1] - lo[1]);
        if w > map_area_m + 1e-9 || d > map_area_m + 1e-9 {
            return Err(Error::SceneTooLarge { width: w, depth: d, map_area: map_area_m });
        }
    }
    Ok(())
}

/// Shoebox rooms chained along x, each sharing part of a wall with the
/// previous one through a single doorframe.
pub fn gen_line_scene(n_rooms: usize, ranges: &SizeRanges, map_area_m: f64, seed: u64) -> Result<Scene> {
    if n_rooms < 2 {
        return Err(Error::InvalidArgument("a line scene needs at least two rooms".into()));
    }
    ranges.validate()?;
    let mut rng = stream(seed, &["line-scene"]);
    let mut rooms: Vec<Room> = Vec::with_capacity(n_rooms);
    let mut doorframes = Vec::with_capacity(n_rooms - 1);
    let mut x = 0.0;
    for i in 0..n_rooms {
        let w = uniform(&mut rng, ranges.width);
        let d = uniform(&mut rng, ranges.depth);
        let h = uniform(&mut rng, ranges.height);
        let y = match rooms.last() {
            None => 0.0,
            Some(prev) => {
                // keep at least a doorframe's worth of shared wall and the
                // whole chain within the map depth
                let y_min = rooms.iter().map(|r| r.origin[1]).fold(f64::INFINITY, f64::min);
                let y_max = rooms.iter().map(|r| r.max()[1]).fold(f64::NEG_INFINITY, f64::max);
                let lo = (prev.origin[1] - d + MIN_DOOR_WIDTH_M).max(y_max - map_area_m);
                let hi = (prev.max()[1] - MIN_DOOR_WIDTH_M).min(y_min + map_area_m - d);
                if lo > hi {
                    return Err(Error::SceneTooLarge { width: x + w, depth: y_max - y_min + d, map_area: map_area_m });
                }
                uniform(&mut rng, (lo, hi))
            }
        };
        let room = Room { origin: [x, y], size: [w, d], height: h, materials: None };
        if let Some(prev) = rooms.last() {
            let lo = prev.origin[1].max(y);
            let hi = prev.max()[1].min(y + d);
            doorframes.push(Doorframe {
                rooms: [i - 1, i],
                axis: WallAxis::ConstX,
                coordinate: x,
                span: door_span(&mut rng, lo, hi),
                height: prev.height.min(h),
            });
        }
        x += w;
        rooms.push(room);
    }
    // shift so the bounding box starts at the origin
    let min_y = rooms.iter().map(|r| r.origin[1]).fold(f64::INFINITY, f64::min);
    for r in &mut rooms {
        r.origin[1] -= min_y;
    }
    for d in &mut doorframes {
        d.span = [d.span[0] - min_y, d.span[1] - min_y];
    }
    let scene = Scene { rooms, doorframes, rng_seed: seed, ..Scene::empty(Pattern::Line) };
    check_fits(&scene, map_area_m)?;
    Ok(scene)
}

/// Random cut positions splitting `[0, length]` into `parts` cells no
/// narrower than `min_cell`.
fn random_cuts(rng: &mut StreamRng, length: f64, parts: usize, min_cell: f64) -> Result<Vec<f64>> {
    let slack = length - parts as f64 * min_cell;
    if slack < 0.0 {
        return Err(Error::SceneGeneration(format!("{length} m cannot hold {parts} cells of {min_cell} m")));
    }
    let weights: Vec<f64> = (0..parts).map(|_| rng.random_range(0.2..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let mut edges = vec![0.0];
    let mut acc = 0.0;
    for w in &weights[..parts - 1] {
        acc += min_cell + slack * w / total;
        edges.push(acc);
    }
    edges.push(length);
    Ok(edges)
}

/// Smallest grid cell, in meters.
const MIN_GRID_CELL_M: f64 = 1.8;

/// Probability of an extra doorframe beyond the spanning tree.
const EXTRA_DOOR_PROB: f64 = 0.25;

/// Subdivides a `area.0 × area.1` rectangle into `splits.0 × splits.1` rooms
/// at random cut positions and connects them with doorframes along a random
/// spanning tree plus a few extra openings.
pub fn gen_grid_scene(
    area: (f64, f64),
    splits: (usize, usize),
    height_range: (f64, f64),
    map_area_m: f64,
    seed: u64,
) -> Result<Scene> {
    let (nx, ny) = splits;
    if nx == 0 || ny == 0 || nx * ny < 2 {
        return Err(Error::InvalidArgument("a grid scene needs at least two cells".into()));
    }
    if !(area.0 > 0.0 && area.1 > 0.0 && height_range.0 > 0.0 && height_range.1 >= height_range.0) {
        return Err(Error::InvalidArgument("non-positive grid dimensions".into()));
    }
    let mut rng = stream(seed, &["grid-scene"]);
    let xs = random_cuts(&mut rng, area.0, nx, MIN_GRID_CELL_M)?;
    let ys = random_cuts(&mut rng, area.1, ny, MIN_GRID_CELL_M)?;
    let index = |i: usize, j: usize| j * nx + i;
    let mut rooms = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            rooms.push(Room {
                origin: [xs[i], ys[j]],
                size: [xs[i + 1] - xs[i], ys[j + 1] - ys[j]],
                height: uniform(&mut rng, height_range),
                materials: None,
            });
        }
    }

    // candidate doors between neighbouring cells
    let mut edges = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            if i + 1 < nx {
                edges.push((index(i, j), index(i + 1, j)));
            }
            if j + 1 < ny {
                edges.push((index(i, j), index(i, j + 1)));
            }
        }
    }
    edges.shuffle(&mut rng);

    // randomized Kruskal
    let mut parent: Vec<usize> = (0..rooms.len()).collect();
    fn find(parent: &mut [usize], mut a: usize) -> usize {
        while parent[a] != a {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        a
    }
    let mut chosen = Vec::new();
    for &(a, b) in &edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        let joins = ra != rb;
        if joins {
            parent[ra] = rb;
        }
        if joins || rng.random_bool(EXTRA_DOOR_PROB) {
            chosen.push((a, b));
        }
    }
    chosen.sort_unstable();

    let doorframes = chosen
        .into_iter()
        .map(|(a, b)| {
            let (ra, rb) = (&rooms[a], &rooms[b]);
            let height = ra.height.min(rb.height);
            if (ra.max()[0] - rb.origin[0]).abs() < 1e-9 {
                Doorframe {
                    rooms: [a, b],
                    axis: WallAxis::ConstX,
                    coordinate: rb.origin[0],
                    span: door_span(&mut rng, ra.origin[1], ra.max()[1]),
                    height,
                }
            } else {
                Doorframe {
                    rooms: [a, b],
                    axis: WallAxis::ConstY,
                    coordinate: rb.origin[1],
                    span: door_span(&mut rng, ra.origin[0], ra.max()[0]),
                    height,
                }
            }
        })
        .collect();

    let scene = Scene { rooms, doorframes, rng_seed: seed, ..Scene::empty(Pattern::Grid) };
    check_fits(&scene, map_area_m)?;
    Ok(scene)
}
