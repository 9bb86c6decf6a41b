use crate::grid::Grid;
use crate::{Error, Result};

/// First active value; sums are taken relative to it so that a constant
/// field averages back to that constant without rounding.
fn reference(values: &Grid<f64>, active: &Grid<bool>) -> Option<f64> {
    values.as_slice().iter().zip(active.as_slice()).find(|(_, &a)| a).map(|(&v, _)| v)
}

/// Summed-area table with a zero border: `t[(r + 1) * (w + 1) + c + 1]` is the
/// sum over rows `..=r` and columns `..=c`.
fn summed_area(h: usize, w: usize, f: impl Fn(usize, usize) -> f64) -> Vec<f64> {
    let mut t = vec![0.0; (h + 1) * (w + 1)];
    for r in 0..h {
        let mut row = 0.0;
        for c in 0..w {
            row += f(r, c);
            t[(r + 1) * (w + 1) + c + 1] = t[r * (w + 1) + c + 1] + row;
        }
    }
    t
}

fn box_sum(t: &[f64], w: usize, r0: usize, r1: usize, c0: usize, c1: usize) -> f64 {
    // rows r0..r1, cols c0..c1 (exclusive ends)
    t[r1 * (w + 1) + c1] - t[r0 * (w + 1) + c1] - t[r1 * (w + 1) + c0] + t[r0 * (w + 1) + c0]
}

/// Mean of the active pixels inside a `kernel × kernel` window around every
/// pixel. Returns the dense map and its coverage; uncovered pixels are NaN.
pub fn masked_average_pool(values: &Grid<f64>, active: &Grid<bool>, kernel: usize) -> Result<(Grid<f64>, Grid<bool>)> {
    if kernel % 2 == 0 {
        return Err(Error::InvalidArgument(format!("pooling kernel must be odd, got {kernel}")));
    }
    if !values.same_shape(active) {
        return Err(Error::ShapeMismatch(format!("values {:?} vs mask {:?}", values.shape(), active.shape())));
    }
    let base = reference(values, active).ok_or(Error::NoActivePixels)?;
    let (h, w) = values.shape();
    let sums = summed_area(h, w, |r, c| if *active.get(r, c) { values.get(r, c) - base } else { 0.0 });
    let counts = summed_area(h, w, |r, c| *active.get(r, c) as u8 as f64);
    let half = kernel / 2;
    let mut out = Grid::filled(h, w, f64::NAN);
    let mut coverage = Grid::filled(h, w, false);
    for r in 0..h {
        let (r0, r1) = (r.saturating_sub(half), (r + half + 1).min(h));
        for c in 0..w {
            let (c0, c1) = (c.saturating_sub(half), (c + half + 1).min(w));
            let n = box_sum(&counts, w, r0, r1, c0, c1);
            if n > 0.5 {
                out.set(r, c, base + box_sum(&sums, w, r0, r1, c0, c1) / n.round());
                coverage.set(r, c, true);
            }
        }
    }
    Ok((out, coverage))
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as i64;
    (-radius..=radius).map(|d| (-(d * d) as f64 / (2.0 * sigma * sigma)).exp()).collect()
}

/// Separable 2D convolution with zero padding.
fn convolve(input: &[f64], h: usize, w: usize, kernel: &[f64]) -> Vec<f64> {
    let radius = (kernel.len() / 2) as i64;
    let mut tmp = vec![0.0; h * w];
    for r in 0..h {
        for c in 0..w {
            let mut acc = 0.0;
            for (k, g) in kernel.iter().enumerate() {
                let cc = c as i64 + k as i64 - radius;
                if cc >= 0 && (cc as usize) < w {
                    acc += g * input[r * w + cc as usize];
                }
            }
            tmp[r * w + c] = acc;
        }
    }
    let mut out = vec![0.0; h * w];
    for r in 0..h {
        for c in 0..w {
            let mut acc = 0.0;
            for (k, g) in kernel.iter().enumerate() {
                let rr = r as i64 + k as i64 - radius;
                if rr >= 0 && (rr as usize) < h {
                    acc += g * tmp[rr as usize * w + c];
                }
            }
            out[r * w + c] = acc;
        }
    }
    out
}

/// Mask-normalized Gaussian smoothing: invalid pixels contribute neither
/// value nor kernel mass. Output is NaN outside `mask`.
pub fn gaussian_lowpass(map: &Grid<f64>, mask: &Grid<bool>, sigma_px: f64) -> Result<Grid<f64>> {
    if !map.same_shape(mask) {
        return Err(Error::ShapeMismatch(format!("map {:?} vs mask {:?}", map.shape(), mask.shape())));
    }
    let (h, w) = map.shape();
    let Some(base) = reference(map, mask) else {
        return Ok(Grid::filled(h, w, f64::NAN));
    };
    if !(sigma_px > 1e-6) {
        return Ok(Grid::from_fn(h, w, |r, c| if *mask.get(r, c) { *map.get(r, c) } else { f64::NAN }));
    }
    let kernel = gaussian_kernel(sigma_px);
    let weighted: Vec<f64> = map
        .as_slice()
        .iter()
        .zip(mask.as_slice())
        .map(|(&v, &m)| if m { v - base } else { 0.0 })
        .collect();
    let mass: Vec<f64> = mask.as_slice().iter().map(|&m| m as u8 as f64).collect();
    let num = convolve(&weighted, h, w, &kernel);
    let den = convolve(&mass, h, w, &kernel);
    Ok(Grid::from_fn(h, w, |r, c| {
        let i = r * w + c;
        if *mask.get(r, c) { base + num[i] / den[i] } else { f64::NAN }
    }))
}

/// Nearest-active-pixel fill (Euclidean; ties go to the lowest row-major
/// index).
///
/// Searches square rings of growing Chebyshev radius around each pixel and
/// stops once the ring cannot hold anything closer than the best match.
pub fn voronoi_map(values: &Grid<f64>, active: &Grid<bool>) -> Result<Grid<f64>> {
    if !values.same_shape(active) {
        return Err(Error::ShapeMismatch(format!("values {:?} vs mask {:?}", values.shape(), active.shape())));
    }
    if active.count() == 0 {
        return Err(Error::NoActivePixels);
    }
    let (h, w) = values.shape();
    let (hi, wi) = (h as i64, w as i64);
    let max_radius = hi.max(wi);
    let mut out = Grid::filled(h, w, 0.0);
    for r in 0..hi {
        for c in 0..wi {
            // (squared distance, row-major index)
            let mut best: Option<(i64, i64)> = None;
            let consider = |rr: i64, cc: i64, best: &mut Option<(i64, i64)>| {
                if rr < 0 || cc < 0 || rr >= hi || cc >= wi || !*active.get(rr as usize, cc as usize) {
                    return;
                }
                let cand = ((rr - r).pow(2) + (cc - c).pow(2), rr * wi + cc);
                if best.is_none_or(|b| cand < b) {
                    *best = Some(cand);
                }
            };
            for radius in 0..=max_radius {
                if best.is_some_and(|(d2, _)| radius * radius > d2) {
                    break;
                }
                if radius == 0 {
                    consider(r, c, &mut best);
                    continue;
                }
                for k in -radius..=radius {
                    consider(r - radius, c + k, &mut best);
                    consider(r + radius, c + k, &mut best);
                }
                for k in -radius + 1..radius {
                    consider(r + k, c - radius, &mut best);
                    consider(r + k, c + radius, &mut best);
                }
            }
            let (_, idx) = best.expect("at least one active pixel");
            out.set(r as usize, c as usize, *values.get((idx / wi) as usize, (idx % wi) as usize));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_field_pools_to_itself_exactly() {
        let v = Grid::filled(32, 32, 0.1f64);
        let a = Grid::filled(32, 32, true);
        let (out, cov) = masked_average_pool(&v, &a, 7).unwrap();
        assert!(cov.as_slice().iter().all(|&c| c));
        assert!(out.as_slice().iter().all(|&x| x == 0.1));
    }

    #[test]
    fn single_pixel_fills_its_neighbourhood() {
        let mut v = Grid::filled(9, 9, 0.0);
        let mut a = Grid::filled(9, 9, false);
        v.set(4, 4, 2.5);
        a.set(4, 4, true);
        let (out, cov) = masked_average_pool(&v, &a, 3).unwrap();
        for r in 0..9usize {
            for c in 0..9usize {
                let inside = r.abs_diff(4usize) <= 1 && c.abs_diff(4usize) <= 1;
                assert_eq!(*cov.get(r, c), inside);
                if inside {
                    assert_eq!(*out.get(r, c), 2.5);
                } else {
                    assert!(out.get(r, c).is_nan());
                }
            }
        }
    }

    #[test]
    fn pooling_matches_brute_force_window_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let v = Grid::from_fn(20, 17, |_, _| rng.random_range(-5.0..5.0));
            let a = Grid::from_fn(20, 17, |_, _| rng.random_bool(0.1));
            if a.count() == 0 {
                continue;
            }
            let (out, cov) = masked_average_pool(&v, &a, 5).unwrap();
            for r in 0..20usize {
                for c in 0..17usize {
                    let mut vals = vec![];
                    for rr in r.saturating_sub(2)..(r + 3).min(20) {
                        for cc in c.saturating_sub(2)..(c + 3).min(17) {
                            if *a.get(rr, cc) {
                                vals.push(*v.get(rr, cc));
                            }
                        }
                    }
                    assert_eq!(*cov.get(r, c), !vals.is_empty());
                    if !vals.is_empty() {
                        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
                        assert!((out.get(r, c) - mean).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn two_pixels_in_one_window_average() {
        let mut v = Grid::filled(7, 7, 0.0);
        let mut a = Grid::filled(7, 7, false);
        v.set(3, 2, 1.0);
        v.set(3, 4, 4.0);
        a.set(3, 2, true);
        a.set(3, 4, true);
        let (out, _) = masked_average_pool(&v, &a, 3).unwrap();
        assert_eq!(*out.get(3, 3), 2.5);
        assert_eq!(*out.get(3, 1), 1.0);
    }

    #[test]
    fn pooling_rejects_even_kernel_and_empty_input() {
        let v = Grid::filled(4, 4, 0.0);
        assert!(masked_average_pool(&v, &Grid::filled(4, 4, true), 4).is_err());
        assert!(matches!(masked_average_pool(&v, &Grid::filled(4, 4, false), 3), Err(Error::NoActivePixels)));
    }

    #[test]
    fn lowpass_keeps_constants_and_ignores_masked_pixels() {
        let mut v = Grid::filled(30, 30, 0.37f64);
        let mut m = Grid::filled(30, 30, true);
        for c in 0..30 {
            v.set(10, c, 1e6);
            m.set(10, c, false);
        }
        let out = gaussian_lowpass(&v, &m, 1.5).unwrap();
        for r in 0..30 {
            for c in 0..30 {
                if r == 10 {
                    assert!(out.get(r, c).is_nan());
                } else {
                    assert!((out.get(r, c) - 0.37).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn lowpass_spike_is_a_gaussian_bump() {
        let n = 31;
        let sigma = 1.5;
        let mut v = Grid::filled(n, n, 0.0);
        v.set(15, 15, 1.0);
        let out = gaussian_lowpass(&v, &Grid::filled(n, n, true), sigma).unwrap();
        // Oracle: direct 2D evaluation of the truncated kernel; far from the
        // border the normalizer is the full kernel mass.
        let radius = (3.0f64 * sigma).ceil() as i64;
        let g2 = |dr: i64, dc: i64| (-((dr * dr + dc * dc) as f64) / (2.0 * sigma * sigma)).exp();
        let mass: f64 = (-radius..=radius).flat_map(|a| (-radius..=radius).map(move |b| g2(a, b))).sum();
        for r in 8..23i64 {
            for c in 8..23i64 {
                let (dr, dc) = (r - 15, c - 15);
                let expected = if dr.abs() <= radius && dc.abs() <= radius { g2(dr, dc) / mass } else { 0.0 };
                assert!((out.get(r as usize, c as usize) - expected).abs() < 1e-12, "({r}, {c})");
            }
        }
        // radial symmetry
        assert!((out.get(15, 17) - out.get(17, 15)).abs() < 1e-15);
        assert!((out.get(13, 15) - out.get(15, 17)).abs() < 1e-15);
    }

    #[test]
    fn lowpass_with_zero_sigma_is_identity() {
        let v = Grid::from_fn(8, 8, |r, c| (r * 8 + c) as f64);
        let out = gaussian_lowpass(&v, &Grid::filled(8, 8, true), 0.0).unwrap();
        assert_eq!(out, v);
    }

    /// O(N²) oracle: scan all active pixels in row-major order, keep strict
    /// improvements only.
    fn voronoi_oracle(v: &Grid<f64>, a: &Grid<bool>) -> Grid<f64> {
        let (h, w) = v.shape();
        let sites: Vec<(usize, usize)> = (0..h).flat_map(|r| (0..w).map(move |c| (r, c))).filter(|&(r, c)| *a.get(r, c)).collect();
        Grid::from_fn(h, w, |r, c| {
            let mut best = (usize::MAX, 0.0);
            for &(sr, sc) in &sites {
                let d2 = sr.abs_diff(r).pow(2) + sc.abs_diff(c).pow(2);
                if d2 < best.0 {
                    best = (d2, *v.get(sr, sc));
                }
            }
            best.1
        })
    }

    #[test]
    fn voronoi_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let v = Grid::from_fn(16, 16, |_, _| rng.random_range(0..10) as f64);
            let mut a = Grid::from_fn(16, 16, |_, _| rng.random_bool(0.05));
            a.set(rng.random_range(0..16), rng.random_range(0..16), true);
            assert_eq!(voronoi_map(&v, &a).unwrap(), voronoi_oracle(&v, &a));
        }
    }

    #[test]
    fn voronoi_simple_cases() {
        let mut v = Grid::filled(6, 6, 0.0);
        let mut a = Grid::filled(6, 6, false);
        v.set(2, 2, 7.0);
        a.set(2, 2, true);
        assert!(voronoi_map(&v, &a).unwrap().as_slice().iter().all(|&x| x == 7.0));
        // two sites on one row: columns split at the bisector, ties left
        v.set(2, 4, 9.0);
        a.set(2, 4, true);
        let out = voronoi_map(&v, &a).unwrap();
        for r in 0..6 {
            for c in 0..6 {
                assert_eq!(*out.get(r, c), if c <= 3 { 7.0 } else { 9.0 });
            }
        }
        assert!(voronoi_map(&v, &Grid::filled(6, 6, false)).is_err());
    }
}
