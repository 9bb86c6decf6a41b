use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Scene;
use crate::analysis::OMNI_BANDS_HZ;
use crate::rng::stream;
use crate::{Error, Result};

/// Surface material with per-octave-band coefficients on [`OMNI_BANDS_HZ`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub name: String,
    pub absorption: [f64; 6],
    pub scattering: [f64; 6],
}

impl Material {
    pub fn new(name: &str, absorption: [f64; 6], scattering: [f64; 6]) -> Result<Self> {
        if absorption.iter().chain(&scattering).any(|c| !(0.0..=1.0).contains(c)) {
            return Err(Error::InvalidArgument(format!("material {name}: coefficients must lie in [0, 1]")));
        }
        Ok(Self { name: name.to_string(), absorption, scattering })
    }

    /// Absorption of the octave band closest to `center_hz` (log distance).
    pub fn absorption_at(&self, center_hz: f64) -> f64 {
        let idx = OMNI_BANDS_HZ
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1.ln() - center_hz.ln()).abs().total_cmp(&(b.1.ln() - center_hz.ln()).abs()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        self.absorption[idx]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceMaterials {
    pub floor: Material,
    pub ceiling: Material,
    pub walls: Material,
}

/// Common interior finishes plus the two extremes: a near-anechoic
/// absorber and a hard reflector.
pub fn default_library() -> Vec<Material> {
    let m = |name: &str, a: [f64; 6], s: f64| Material::new(name, a, [s; 6]).expect("library coefficients");
    vec![
        m("carpet", [0.02, 0.06, 0.14, 0.37, 0.60, 0.65], 0.1),
        m("concrete", [0.01, 0.01, 0.015, 0.02, 0.02, 0.02], 0.05),
        m("plaster", [0.013, 0.015, 0.02, 0.03, 0.04, 0.05], 0.05),
        m("wood_panel", [0.28, 0.22, 0.17, 0.09, 0.10, 0.11], 0.1),
        m("brick", [0.03, 0.03, 0.03, 0.04, 0.05, 0.07], 0.2),
        m("glass", [0.35, 0.25, 0.18, 0.12, 0.07, 0.04], 0.05),
        m("acoustic_tile", [0.50, 0.70, 0.60, 0.70, 0.70, 0.50], 0.1),
        m("curtain", [0.07, 0.31, 0.49, 0.75, 0.70, 0.60], 0.3),
        m("absorber", [0.95; 6], 0.1),
        m("reflector", [0.02; 6], 0.05),
    ]
}

/// Draws floor, ceiling and wall materials for every room uniformly from
/// `library`.
pub fn assign_materials(scene: &Scene, library: &[Material], seed: u64) -> Result<Scene> {
    if library.is_empty() {
        return Err(Error::EmptyInput("material library"));
    }
    let mut rng = stream(seed, &["materials"]);
    let mut out = scene.clone();
    for room in &mut out.rooms {
        let mut pick = || library[rng.random_range(0..library.len())].clone();
        room.materials = Some(SurfaceMaterials { floor: pick(), ceiling: pick(), walls: pick() });
    }
    Ok(out)
}

/// `count` independent material configurations of the same geometry.
pub fn material_variants(scene: &Scene, library: &[Material], count: usize, seed: u64) -> Result<Vec<Scene>> {
    (0..count)
        .map(|v| assign_materials(scene, library, crate::rng::derive_seed(seed, &["variant", &v.to_string()])))
        .collect()
}
