use super::SimConfig;
use crate::analysis::OMNI_BANDS_HZ;
use crate::scene::Room;
use crate::{Error, Result};

/// One mirror image of the source, seen from the receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageSource {
    /// Image position relative to the receiver, meters.
    pub offset: [f64; 3],
    pub distance: f64,
    /// Per-band product of reflection gains.
    pub amplitude: [f64; 6],
    pub order: usize,
}

impl ImageSource {
    pub fn azimuth(&self) -> f64 {
        self.offset[1].atan2(self.offset[0])
    }

    pub fn elevation(&self) -> f64 {
        (self.offset[2] / self.distance).clamp(-1.0, 1.0).asin()
    }
}

/// Pressure reflection gains `sqrt(1 - α)` of (walls, floor, ceiling) per band.
pub fn reflection_gains(room: &Room) -> Result<[[f64; 6]; 3]> {
    let m = room
        .materials
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("room has no materials assigned".into()))?;
    let beta = |a: &[f64; 6]| a.map(|v| (1.0 - v).max(0.0).sqrt());
    Ok([beta(&m.walls.absorption), beta(&m.floor.absorption), beta(&m.ceiling.absorption)])
}

/// Enumerates image sources of a shoebox with at most `max_order`
/// reflections and at most `max_distance` from the receiver.
///
/// `src` and `rcv` are in room-local coordinates (origin at the floor's
/// south-west corner). Images whose gain vanishes in every band are skipped.
pub fn image_sources(
    dims: [f64; 3],
    gains: &[[f64; 6]; 3],
    src: [f64; 3],
    rcv: [f64; 3],
    max_order: usize,
    max_distance: f64,
    mut visit: impl FnMut(&ImageSource),
) {
    let pow = |g: &[f64; 6], n: usize| g.map(|v| v.powi(n as i32));
    // per axis: candidate (coordinate offset, reflections on low wall, on high wall)
    let axis_images = |axis: usize| {
        let (l, s, r) = (dims[axis], src[axis], rcv[axis]);
        let mut out = Vec::new();
        for q in 0..2i64 {
            let base = (1 - 2 * q) as f64 * s;
            let m_lo = ((r - max_distance - base) / (2.0 * l)).ceil() as i64;
            let m_hi = ((r + max_distance - base) / (2.0 * l)).floor() as i64;
            for m in m_lo..=m_hi {
                let (low, high) = ((m - q).unsigned_abs() as usize, m.unsigned_abs() as usize);
                if low + high <= max_order {
                    out.push((base + 2.0 * m as f64 * l - r, low, high));
                }
            }
        }
        out
    };
    let (xs, ys, zs) = (axis_images(0), axis_images(1), axis_images(2));
    let d2_max = max_distance * max_distance;
    for &(dx, xl, xh) in &xs {
        for &(dy, yl, yh) in &ys {
            let wall_refl = xl + xh + yl + yh;
            let dxy2 = dx * dx + dy * dy;
            if wall_refl > max_order || dxy2 > d2_max {
                continue;
            }
            for &(dz, floor, ceil) in &zs {
                let order = wall_refl + floor + ceil;
                let d2 = dxy2 + dz * dz;
                if order > max_order || d2 > d2_max {
                    continue;
                }
                let (gw, gf, gc) = (pow(&gains[0], wall_refl), pow(&gains[1], floor), pow(&gains[2], ceil));
                let amplitude = std::array::from_fn(|b| gw[b] * gf[b] * gc[b]);
                if amplitude.iter().all(|&a| a == 0.0) {
                    continue;
                }
                visit(&ImageSource { offset: [dx, dy, dz], distance: d2.sqrt(), amplitude, order });
            }
        }
    }
}

/// Per-band impulse trains of one shoebox room.
#[derive(Debug, Clone, PartialEq)]
pub struct BandTrains {
    pub bands_hz: Vec<f64>,
    pub sample_rate: u32,
    pub trains: Vec<Vec<f64>>,
}

impl BandTrains {
    pub fn len(&self) -> usize {
        self.trains.first().map_or(0, |t| t.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn local(room: &Room, p: [f64; 3]) -> [f64; 3] {
    [p[0] - room.origin[0], p[1] - room.origin[1], p[2]]
}

fn strictly_inside(room: &Room, p: [f64; 3]) -> bool {
    let l = local(room, p);
    l[0] > 0.0 && l[0] < room.size[0] && l[1] > 0.0 && l[1] < room.size[1] && l[2] > 0.0 && l[2] < room.height
}

/// Classical image-source response of an isolated shoebox: each image adds
/// `gain / distance` at the sample nearest to `distance / c`.
///
/// `src` and `rcv` are world coordinates (x, y, z). The trains cover
/// [`OMNI_BANDS_HZ`] and are `length` samples long.
pub fn image_source_shoebox(room: &Room, src: [f64; 3], rcv: [f64; 3], config: &SimConfig, length: usize) -> Result<BandTrains> {
    if !strictly_inside(room, src) || !strictly_inside(room, rcv) {
        return Err(Error::InvalidArgument("source and receiver must lie strictly inside the room".into()));
    }
    let d = ((src[0] - rcv[0]).powi(2) + (src[1] - rcv[1]).powi(2) + (src[2] - rcv[2]).powi(2)).sqrt();
    if d < 1e-9 {
        return Err(Error::ZeroDistance);
    }
    let gains = reflection_gains(room)?;
    let fs = config.sample_rate as f64;
    let max_distance = config.speed_of_sound * length as f64 / fs;
    let mut trains = vec![vec![0.0; length]; OMNI_BANDS_HZ.len()];
    image_sources(
        [room.size[0], room.size[1], room.height],
        &gains,
        local(room, src),
        local(room, rcv),
        config.max_order,
        max_distance,
        |img| {
            let idx = (img.distance / config.speed_of_sound * fs).round() as usize;
            if idx < length {
                for (train, a) in trains.iter_mut().zip(img.amplitude) {
                    train[idx] += a / img.distance;
                }
            }
        },
    );
    Ok(BandTrains { bands_hz: OMNI_BANDS_HZ.to_vec(), sample_rate: config.sample_rate, trains })
}
