use serde::{Deserialize, Serialize};

use super::Floormap;

/// Pixel-count estimates of floor area and wall length for a set of
/// floormaps. Both are upper bounds of the true values since every touched
/// pixel counts fully.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloormapStats {
    pub area_m2: Vec<f64>,
    pub perimeter_m: Vec<f64>,
}

impl FloormapStats {
    pub fn mean_area(&self) -> f64 {
        mean(&self.area_m2)
    }

    pub fn mean_perimeter(&self) -> f64 {
        mean(&self.perimeter_m)
    }
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

pub fn dataset_stats<'a>(floormaps: impl IntoIterator<Item = &'a Floormap>) -> FloormapStats {
    let mut stats = FloormapStats { area_m2: Vec::new(), perimeter_m: Vec::new() };
    for fm in floormaps {
        let px = fm.pixel_size_m();
        stats.area_m2.push(fm.scene_mask.count() as f64 * px * px);
        stats.perimeter_m.push(fm.slice.count() as f64 * px);
    }
    stats
}
