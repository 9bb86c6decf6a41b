use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::formulas::{equivalent_absorption_area, sabine_eyring_t60, T60Formula};
use super::ism::{image_sources, reflection_gains};
use super::SimConfig;
use crate::ambisonics::{sh_sn3d, ACN_ORDER, CHANNELS};
use crate::analysis::{OctaveFilterbank, OMNI_BANDS_HZ};
use crate::rir::{ChannelLayout, RoomImpulseResponse};
use crate::rng::{derive_seed, stream};
use crate::scene::{Scene, WallPiece, LISTENER_HEIGHT_M};
use crate::{Error, Result};

const BANDS: usize = OMNI_BANDS_HZ.len();

/// Pressure gain per doorframe on a path without line of sight.
pub const DOOR_GAIN: f64 = 0.25;

/// Extra noise per bank so pairs can start at different offsets.
const NOISE_SLACK_S: f64 = 0.5;

/// The image-source part always extends this far past the direct sound.
const MIN_EARLY_AFTER_DIRECT_S: f64 = 0.02;

/// Gap between the first arrival and the leaked reverberation in another room.
const COUPLED_TAIL_GAP_S: f64 = 0.003;

/// Headroom for filter ringing when band trains are recombined.
const RINGING_PAD_S: f64 = 0.1;

/// Window before the crossfade used to level-match a same-room tail.
const MATCH_WINDOW_S: f64 = 0.02;

const MATCH_GAIN_RANGE: (f64, f64) = (0.25, 4.0);

struct PathInfo {
    /// Total length from source to receiver through door centers.
    length: f64,
    /// Doorframes crossed, in order.
    doors: Vec<usize>,
}

/// One early arrival: time, per-band pressure and direction.
struct EarlyArrival {
    delay_s: f64,
    amplitude: [f64; BANDS],
    azimuth: f64,
    elevation: f64,
}

/// Synthesizes RIRs for any (source, receiver) pair of one scene.
///
/// Construction prepares everything shared by the pairs (per-room decay,
/// band-limited noise, wall geometry); [`SceneSimulator::rir`] is then a pure
/// function of the pair, so pairs can be generated in any order or in
/// parallel with identical results.
pub struct SceneSimulator {
    scene: Scene,
    config: SimConfig,
    length: usize,
    bank: OctaveFilterbank,
    noise: Vec<Vec<f64>>,
    t60: Vec<[f64; BANDS]>,
    absorption_area: Vec<[f64; BANDS]>,
    gains: Vec<[[f64; BANDS]; 3]>,
    walls: Vec<WallPiece>,
}

impl SceneSimulator {
    pub fn new(scene: &Scene, config: &SimConfig) -> Result<Self> {
        config.validate()?;
        if scene.rooms.is_empty() {
            return Err(Error::EmptyInput("scene rooms"));
        }
        let fs = config.sample_rate;
        let bank = OctaveFilterbank::new(&OMNI_BANDS_HZ, fs)?;
        let mut t60 = Vec::with_capacity(scene.rooms.len());
        let mut absorption_area = Vec::with_capacity(scene.rooms.len());
        let mut gains = Vec::with_capacity(scene.rooms.len());
        for room in &scene.rooms {
            let mut t = [0.0; BANDS];
            let mut a = [0.0; BANDS];
            for (b, &hz) in OMNI_BANDS_HZ.iter().enumerate() {
                t[b] = sabine_eyring_t60(room, T60Formula::Eyring, hz)?;
                a[b] = equivalent_absorption_area(room, hz)?;
            }
            t60.push(t);
            absorption_area.push(a);
            gains.push(reflection_gains(room)?);
        }
        let longest = t60.iter().flatten().fold(0.0f64, |m, &v| m.max(v));
        let duration = (1.1 * longest).clamp(config.tail_duration_s, config.max_duration_s);
        let length = (duration * fs as f64).round() as usize;
        let noise = noise_bank(&bank, length + (NOISE_SLACK_S * fs as f64) as usize, derive_seed(config.rng_seed, &["noise", &scene.rng_seed.to_string()]));
        Ok(Self {
            scene: scene.clone(),
            config: config.clone(),
            length,
            bank,
            noise,
            t60,
            absorption_area,
            gains,
            walls: scene.wall_pieces(Some(LISTENER_HEIGHT_M)),
        })
    }

    /// Samples per RIR for this scene.
    pub fn length(&self) -> usize {
        self.length
    }

    pub fn scene(&self) -> &Scene {
        &self.scene
    }

    /// Eyring T60 per room and band.
    pub fn room_t60(&self) -> &[[f64; BANDS]] {
        &self.t60
    }

    /// Every (source receiver index, receiver index) pair with distinct points.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for &s in &self.scene.sources {
            for r in 0..self.scene.receivers.len() {
                if r != s {
                    out.push((s, r));
                }
            }
        }
        out
    }

    /// True when the straight segment between two points crosses no wall.
    pub fn line_of_sight(&self, a: [f64; 2], b: [f64; 2]) -> bool {
        !self.walls.iter().any(|w| segments_cross(a, b, w.a, w.b))
    }

    fn door_path(&self, src_room: usize, src: [f64; 2], rcv_room: usize, rcv: [f64; 2]) -> Option<PathInfo> {
        let doors = &self.scene.doorframes;
        let n = doors.len() + 2;
        let point = |i: usize| match i {
            0 => src,
            i if i == n - 1 => rcv,
            i => doors[i - 1].center(),
        };
        let connected = |i: usize, j: usize| -> bool {
            let rooms_of = |k: usize| -> Vec<usize> {
                match k {
                    0 => vec![src_room],
                    k if k == n - 1 => vec![rcv_room],
                    k => doors[k - 1].rooms.to_vec(),
                }
            };
            let (ri, rj) = (rooms_of(i), rooms_of(j));
            ri.iter().any(|r| rj.contains(r))
        };
        let mut dist = vec![f64::INFINITY; n];
        let mut prev = vec![usize::MAX; n];
        let mut done = vec![false; n];
        dist[0] = 0.0;
        for _ in 0..n {
            let Some(u) = (0..n).filter(|&i| !done[i] && dist[i].is_finite()).min_by(|&a, &b| dist[a].total_cmp(&dist[b]))
            else {
                break;
            };
            done[u] = true;
            // the endpoints only connect through doorframes
            for v in 1..n {
                if done[v] || (u == 0 && v == n - 1) || !connected(u, v) {
                    continue;
                }
                let (pu, pv) = (point(u), point(v));
                let d = dist[u] + ((pu[0] - pv[0]).powi(2) + (pu[1] - pv[1]).powi(2)).sqrt();
                if d < dist[v] {
                    dist[v] = d;
                    prev[v] = u;
                }
            }
        }
        if !dist[n - 1].is_finite() {
            return None;
        }
        let mut nodes = Vec::new();
        let mut k = prev[n - 1];
        while k != 0 {
            nodes.push(k - 1);
            k = prev[k];
        }
        nodes.reverse();
        Some(PathInfo { length: dist[n - 1], doors: nodes })
    }

    fn early_arrivals(&self, s: usize, r: usize, max_distance: f64) -> Result<(Vec<EarlyArrival>, Option<PathInfo>)> {
        let ps = self.scene.receivers[s];
        let pr = self.scene.receivers[r];
        let z = LISTENER_HEIGHT_M;
        let room = &self.scene.rooms[pr.room];
        let rcv_local = [pr.x - room.origin[0], pr.y - room.origin[1], z];
        let dims = [room.size[0], room.size[1], room.height];
        let c = self.config.speed_of_sound;
        let mut out = Vec::new();
        if ps.room == pr.room {
            let src_local = [ps.x - room.origin[0], ps.y - room.origin[1], z];
            image_sources(dims, &self.gains[pr.room], src_local, rcv_local, self.config.max_order, max_distance, |img| {
                out.push(EarlyArrival {
                    delay_s: img.distance / c,
                    amplitude: img.amplitude.map(|a| a / img.distance),
                    azimuth: img.azimuth(),
                    elevation: img.elevation(),
                });
            });
            return Ok((out, None));
        }

        // Sound reaching another room arrives as one (possibly diffracted)
        // first arrival followed by the reverberant field leaking through
        // the doorframes.

        let path = self
            .door_path(ps.room, [ps.x, ps.y], pr.room, [pr.x, pr.y])
            .ok_or_else(|| Error::SceneGeneration("receiver room is unreachable from the source room".into()))?;
        if self.line_of_sight([ps.x, ps.y], [pr.x, pr.y]) {
            let d = ps.distance(&pr);
            out.push(EarlyArrival {
                delay_s: d / c,
                amplitude: [1.0 / d; BANDS],
                azimuth: (ps.y - pr.y).atan2(ps.x - pr.x),
                elevation: 0.0,
            });
        } else {
            let [dx, dy] = self.scene.doorframes[*path.doors.last().expect("cross-room path has a door")].center();
            out.push(EarlyArrival {
                delay_s: path.length / c,
                amplitude: [DOOR_GAIN.powi(path.doors.len() as i32) / path.length; BANDS],
                azimuth: (dy - pr.y).atan2(dx - pr.x),
                elevation: 0.0,
            });
        }
        Ok((out, Some(path)))
    }

    /// Squared tail envelope per band as two `(level, rate)` terms: the
    /// expected energy per sample at sample `t` is the sum of `level · rate^t`.
    ///
    /// In another room the reverberant energy builds up from the source
    /// room's decaying field (first-order energy balance): the difference of
    /// the two room exponentials, scaled by the steady-state transfer
    /// `S_door / (S_door + A_next)` of every doorframe on the path.
    fn tail_terms(&self, s_room: usize, r_room: usize, path: Option<&PathInfo>) -> Vec<[(f64, f64); 2]> {
        let fs = self.config.sample_rate as f64;
        let c = self.config.speed_of_sound;
        let tau = |t60: f64| t60 / (6.0 * 10f64.ln());
        let rate = |tau: f64| if tau > 0.0 { (-1.0 / (tau * fs)).exp() } else { 0.0 };
        let level = |room: usize| 4.0 * PI * c / (self.scene.rooms[room].volume() * fs);
        let adjacency = self.scene.adjacency();
        (0..BANDS)
            .map(|b| match path {
                None => [(level(r_room), rate(tau(self.t60[r_room][b]))), (0.0, 0.0)],
                Some(path) => {
                    let mut transfer = level(s_room);
                    let mut current = s_room;
                    for &d in &path.doors {
                        let door = &self.scene.doorframes[d];
                        current = door.other(current).unwrap_or(door.rooms[1]);
                        transfer *= door.area() / (door.area() + self.absorption_area[current][b]);
                    }
                    let tau_s = tau(self.t60[s_room][b]);
                    // the receiving room also loses energy through its openings
                    let open: f64 = adjacency[r_room].iter().map(|&d| self.scene.doorframes[d].area()).sum();
                    let volume = self.scene.rooms[r_room].volume();
                    let mut tau_r = 4.0 * volume / (c * (self.absorption_area[r_room][b] + open));
                    if (tau_s - tau_r).abs() < 1e-3 * tau_s {
                        tau_r = tau_s * (1.0 - 1e-3);
                    }
                    if tau_s <= 0.0 {
                        return [(0.0, 0.0), (0.0, 0.0)];
                    }
                    let k = transfer * tau_s / (tau_s - tau_r);
                    [(k, rate(tau_s)), (-k, rate(tau_r))]
                }
            })
            .collect()
    }

    /// Rescales a same-room tail so that its expected energy over the window
    /// just before the crossfade equals the energy of the image sources
    /// arriving in that window.
    fn match_early_level(&self, arrivals: &[EarlyArrival], xf_start: f64, terms: &mut [[(f64, f64); 2]]) {
        let fs = self.config.sample_rate as f64;
        let w0 = ((xf_start - MATCH_WINDOW_S) * fs).max(0.0).round() as i32;
        let w1 = (xf_start * fs).round() as i32;
        if w1 <= w0 {
            return;
        }
        for (b, term) in terms.iter_mut().enumerate() {
            let (level, rate) = term[0];
            let early: f64 = arrivals
                .iter()
                .filter(|a| {
                    let i = (a.delay_s * fs).round() as i32;
                    i >= w0 && i < w1
                })
                .map(|a| a.amplitude[b].powi(2))
                .sum();
            let expected: f64 = (w0..w1).map(|i| level * rate.powi(i)).sum();
            if early > 0.0 && expected > 0.0 {
                term[0].0 *= (early / expected).clamp(MATCH_GAIN_RANGE.0, MATCH_GAIN_RANGE.1);
            }
        }
    }

    /// RIR from the receiver position `source` to the receiver position `receiver`.
    pub fn rir(&self, source: usize, receiver: usize) -> Result<RoomImpulseResponse> {
        let n_rcv = self.scene.receivers.len();
        if source >= n_rcv || receiver >= n_rcv {
            return Err(Error::InvalidArgument(format!("pair ({source}, {receiver}) outside {n_rcv} receivers")));
        }
        if self.scene.receivers[source].distance(&self.scene.receivers[receiver]) < 1e-9 {
            return Err(Error::ZeroDistance);
        }
        let fs = self.config.sample_rate as f64;
        let c = self.config.speed_of_sound;
        let ps = self.scene.receivers[source];
        let pr = self.scene.receivers[receiver];

        let half = 0.5 * self.config.crossfade_width_s;
        // `origin` is where the tail envelope clock starts: emission for the
        // source room, the first arrival for a room the sound leaks into
        let (xf_start, origin) = if ps.room == pr.room {
            ((self.config.crossfade_s - half).max(ps.distance(&pr) / c + MIN_EARLY_AFTER_DIRECT_S), 0.0)
        } else {
            let los = self.line_of_sight([ps.x, ps.y], [pr.x, pr.y]);
            let path = self.door_path(ps.room, [ps.x, ps.y], pr.room, [pr.x, pr.y]);
            let first = if los { ps.distance(&pr) } else { path.map_or(ps.distance(&pr), |p| p.length) } / c;
            (first + COUPLED_TAIL_GAP_S, first)
        };
        let xf_end = xf_start + 2.0 * half;
        let (arrivals, path) = self.early_arrivals(source, receiver, c * xf_end)?;

        let channels = match self.config.layout {
            ChannelLayout::Mono => 1,
            ChannelLayout::Ambisonic2 => CHANNELS,
        };
        let len = self.length;
        let s0 = ((xf_start * fs).floor() as usize).min(len);
        let s1 = ((xf_end * fs).ceil() as usize).min(len);
        let early_len = (s1 + (RINGING_PAD_S * fs) as usize).min(len);
        let mut rng = stream(
            self.config.rng_seed,
            &["pair", &self.scene.rng_seed.to_string(), &source.to_string(), &receiver.to_string()],
        );
        let mut terms = self.tail_terms(ps.room, pr.room, path.as_ref());
        if path.is_none() {
            self.match_early_level(&arrivals, xf_start, &mut terms);
        }
        let slack = self.noise[0].len() - len;

        let directions: Vec<[f64; CHANNELS]> = arrivals.iter().map(|a| sh_sn3d(a.azimuth, a.elevation)).collect();
        let mut out = Vec::with_capacity(channels);
        for ch in 0..channels {
            // early part: broadband mean plus band-filtered deviations
            let mut trains = vec![vec![0.0f64; early_len]; BANDS];
            for (a, sh) in arrivals.iter().zip(&directions) {
                let idx = (a.delay_s * fs).round() as usize;
                if idx >= s1 {
                    continue;
                }
                let y = sh[ch];
                for (train, amp) in trains.iter_mut().zip(a.amplitude) {
                    train[idx] += y * amp;
                }
            }
            let mut signal = vec![0.0f64; len];
            let mean: Vec<f64> = (0..early_len).map(|i| trains.iter().map(|t| t[i]).sum::<f64>() / BANDS as f64).collect();
            signal[..early_len].copy_from_slice(&mean);
            for (band, mut train) in self.bank.bands().iter().zip(trains) {
                if train.iter().zip(&mean).all(|(t, m)| t == m) {
                    continue;
                }
                for (t, m) in train.iter_mut().zip(&mean) {
                    *t -= m;
                }
                band.filter_zero_phase(&mut train);
                for (s, t) in signal.iter_mut().zip(&train) {
                    *s += t;
                }
            }
            for (i, s) in signal.iter_mut().enumerate().skip(s0) {
                *s *= if i >= s1 { 0.0 } else { (FRAC_PI_2 * (i - s0) as f64 / (s1 - s0).max(1) as f64).cos() };
            }

            // late part: band-limited noise under the decay envelope
            let diffuse = 1.0 / (2 * ACN_ORDER[ch] + 1) as f64;
            for (b, noise) in self.noise.iter().enumerate() {
                let offset = rng.random_range(0..=slack);
                let [(l1, r1), (l2, r2)] = terms[b];
                let elapsed = s0 as i32 - (origin * fs).round() as i32;
                let (mut e1, mut e2) = (l1 * diffuse * r1.powi(elapsed), l2 * diffuse * r2.powi(elapsed));
                for i in s0..len {
                    let fade = if i < s1 { (FRAC_PI_2 * (i - s0) as f64 / (s1 - s0).max(1) as f64).sin() } else { 1.0 };
                    signal[i] += fade * (e1 + e2).max(0.0).sqrt() * noise[offset + i];
                    e1 *= r1;
                    e2 *= r2;
                }
            }
            out.push(signal.into_iter().map(|v| v as f32).collect());
        }
        let layout = if channels == 1 { ChannelLayout::Mono } else { ChannelLayout::Ambisonic2 };
        RoomImpulseResponse::new(out, self.config.sample_rate, layout)
    }
}

/// Per-band Gaussian noise whose filterbank analysis has the same per-band
/// energy as unit white noise.
fn noise_bank(bank: &OctaveFilterbank, len: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = stream(seed, &["white"]);
    let white: Vec<f64> = (0..len).map(|_| StandardNormal.sample(&mut rng)).collect();
    let energy = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
    let target: Vec<f64> = bank.split(&white).iter().map(|x| energy(x)).collect();
    let mut noise: Vec<Vec<f64>> = bank
        .bands()
        .iter()
        .enumerate()
        .map(|(b, band)| {
            let mut rng = stream(seed, &["band", &b.to_string()]);
            let mut x: Vec<f64> = (0..len).map(|_| StandardNormal.sample(&mut rng)).collect();
            band.filter_zero_phase(&mut x);
            x
        })
        .collect();
    for _ in 0..2 {
        let sum: Vec<f64> = (0..len).map(|i| noise.iter().map(|n| n[i]).sum()).collect();
        let actual: Vec<f64> = bank.split(&sum).iter().map(|x| energy(x)).collect();
        for (n, (t, a)) in noise.iter_mut().zip(target.iter().zip(&actual)) {
            let g = (t / a).sqrt();
            n.iter_mut().for_each(|v| *v *= g);
        }
    }
    noise
}

fn segments_cross(p1: [f64; 2], p2: [f64; 2], q1: [f64; 2], q2: [f64; 2]) -> bool {
    let orient = |a: [f64; 2], b: [f64; 2], c: [f64; 2]| (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
    let (d1, d2) = (orient(q1, q2, p1), orient(q1, q2, p2));
    let (d3, d4) = (orient(p1, p2, q1), orient(p1, p2, q2));
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// RIRs for every (source, receiver) pair of a scene, keyed by receiver
/// indices.
pub fn synth_scene_rirs(scene: &Scene, config: &SimConfig) -> Result<BTreeMap<(usize, usize), RoomImpulseResponse>> {
    let sim = SceneSimulator::new(scene, config)?;
    sim.pairs().into_iter().map(|(s, r)| Ok(((s, r), sim.rir(s, r)?))).collect()
}
