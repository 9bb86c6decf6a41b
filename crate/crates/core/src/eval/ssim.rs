use crate::grid::Grid;
use crate::{Error, Result};

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

/// Data range of normalized maps, whose bulk lies in (-1, 1).
pub const SSIM_DATA_RANGE: f64 = 2.0;

fn window_taps() -> Vec<f64> {
    let half = (SSIM_WINDOW / 2) as f64;
    (0..SSIM_WINDOW).map(|i| (-(i as f64 - half).powi(2) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp()).collect()
}

/// Window sums `Σ g_i g_j f(r + i - half, c + j - half)` for every centre
/// whose window lies inside the image (other entries are left at zero).
fn window_sums(field: &[f64], h: usize, w: usize, taps: &[f64]) -> Vec<f64> {
    let half = taps.len() / 2;
    let mut rows = vec![0.0; h * w];
    for r in 0..h {
        for c in half..w - half {
            rows[r * w + c] = taps.iter().enumerate().map(|(j, g)| g * field[r * w + c + j - half]).sum();
        }
    }
    let mut out = vec![0.0; h * w];
    for r in half..h - half {
        for c in half..w - half {
            out[r * w + c] = taps.iter().enumerate().map(|(i, g)| g * rows[(r + i - half) * w + c]).sum();
        }
    }
    out
}

fn ssim_formula(mx: f64, my: f64, vx: f64, vy: f64, cxy: f64, c1: f64, c2: f64) -> f64 {
    ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2))
}

/// Weighted moments over the valid pixels of `pixels`.
fn moments(pixels: impl Iterator<Item = (f64, f64, f64)>) -> Option<(f64, f64, f64, f64, f64)> {
    let (mut sw, mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for (w, x, y) in pixels {
        sw += w;
        sx += w * x;
        sy += w * y;
        sxx += w * x * x;
        syy += w * y * y;
        sxy += w * x * y;
    }
    if !(sw > 0.0) {
        return None;
    }
    let (mx, my) = (sx / sw, sy / sw);
    Some((mx, my, sxx / sw - mx * mx, syy / sw - my * my, sxy / sw - mx * my))
}

/// SSIM of two maps, averaged over valid window centres.
///
/// Windows are 11×11 Gaussian (σ = 1.5) placed fully inside the image;
/// statistics inside a window use only `mask` pixels, with the weights
/// renormalized. A centre counts when it is itself in `mask`. If the mask
/// is smaller than one window, or no centre qualifies, the global
/// statistics of the masked pixels are used instead.
pub fn ssim_masked(pred: &Grid<f32>, target: &Grid<f32>, mask: &Grid<bool>, data_range: f64) -> Result<f64> {
    if !pred.same_shape(target) || !pred.same_shape(mask) {
        return Err(Error::ShapeMismatch(format!(
            "pred {:?}, target {:?}, mask {:?}",
            pred.shape(),
            target.shape(),
            mask.shape()
        )));
    }
    let c1 = (SSIM_K1 * data_range).powi(2);
    let c2 = (SSIM_K2 * data_range).powi(2);
    let (h, w) = mask.shape();
    let valid = |r: usize, c: usize| *mask.get(r, c) && pred.get(r, c).is_finite() && target.get(r, c).is_finite();
    let pair = |r: usize, c: usize| (*pred.get(r, c) as f64, *target.get(r, c) as f64);
    let n_valid = (0..h).flat_map(|r| (0..w).map(move |c| (r, c))).filter(|&(r, c)| valid(r, c)).count();
    if n_valid == 0 {
        return Err(Error::EmptyMask);
    }

    let mut total = 0.0;
    let mut centres = 0usize;
    if n_valid >= SSIM_WINDOW * SSIM_WINDOW && h >= SSIM_WINDOW && w >= SSIM_WINDOW {
        let taps = window_taps();
        let half = SSIM_WINDOW / 2;
        let field = |f: &dyn Fn(f64, f64) -> f64| -> Vec<f64> {
            let v: Vec<f64> = (0..h * w)
                .map(|i| {
                    let (r, c) = (i / w, i % w);
                    if valid(r, c) {
                        let (x, y) = pair(r, c);
                        f(x, y)
                    } else {
                        0.0
                    }
                })
                .collect();
            window_sums(&v, h, w, &taps)
        };
        let sw = field(&|_, _| 1.0);
        let sx = field(&|x, _| x);
        let sy = field(&|_, y| y);
        let sxx = field(&|x, _| x * x);
        let syy = field(&|_, y| y * y);
        let sxy = field(&|x, y| x * y);
        for r in half..h - half {
            for c in half..w - half {
                let i = r * w + c;
                if !valid(r, c) || !(sw[i] > 0.0) {
                    continue;
                }
                let (mx, my) = (sx[i] / sw[i], sy[i] / sw[i]);
                let (vx, vy, cxy) = (sxx[i] / sw[i] - mx * mx, syy[i] / sw[i] - my * my, sxy[i] / sw[i] - mx * my);
                total += ssim_formula(mx, my, vx, vy, cxy, c1, c2);
                centres += 1;
            }
        }
    }
    if centres == 0 {
        log::debug!("ssim: {n_valid} valid pixels, using global statistics");
        let px = (0..h).flat_map(|r| (0..w).map(move |c| (r, c))).filter(|&(r, c)| valid(r, c)).map(|(r, c)| {
            let (x, y) = pair(r, c);
            (1.0, x, y)
        });
        let (mx, my, vx, vy, cxy) = moments(px).expect("non-empty");
        return Ok(ssim_formula(mx, my, vx, vy, cxy, c1, c2));
    }
    Ok(total / centres as f64)
}
