use serde::{Deserialize, Serialize};

use crate::scene::Room;
use crate::{Error, Result};

/// Sabine's constant 24 ln 10 / c at c = 343 m/s, rounded as usual.
pub const SABINE_CONSTANT: f64 = 0.161;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum T60Formula {
    Sabine,
    Eyring,
}

/// Area-weighted mean absorption of a room's six surfaces in one band.
pub fn mean_absorption(room: &Room, band_hz: f64) -> Result<f64> {
    let m = room
        .materials
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("room has no materials assigned".into()))?;
    let floor = room.floor_area();
    let walls = room.wall_area();
    let absorbed =
        floor * (m.floor.absorption_at(band_hz) + m.ceiling.absorption_at(band_hz)) + walls * m.walls.absorption_at(band_hz);
    Ok(absorbed / room.surface_area())
}

/// Reverberation time of a shoebox from volume, surface and mean
/// absorption.
pub fn t60_from_absorption(volume: f64, surface: f64, alpha: f64, formula: T60Formula) -> Result<f64> {
    if !(volume > 0.0 && surface > 0.0) {
        return Err(Error::InvalidArgument("room volume and surface must be positive".into()));
    }
    if !(alpha > 0.0) {
        return Err(Error::ZeroAbsorption);
    }
    if alpha > 1.0 {
        return Err(Error::InvalidArgument(format!("mean absorption {alpha} exceeds 1")));
    }
    Ok(match formula {
        T60Formula::Sabine => SABINE_CONSTANT * volume / (surface * alpha),
        T60Formula::Eyring if alpha >= 1.0 => 0.0,
        T60Formula::Eyring => SABINE_CONSTANT * volume / (-surface * (1.0 - alpha).ln()),
    })
}

pub fn sabine_eyring_t60(room: &Room, formula: T60Formula, band_hz: f64) -> Result<f64> {
    t60_from_absorption(room.volume(), room.surface_area(), mean_absorption(room, band_hz)?, formula)
}

/// Equivalent absorption area `-S ln(1 - ᾱ)` in m², consistent with Eyring.
pub fn equivalent_absorption_area(room: &Room, band_hz: f64) -> Result<f64> {
    let alpha = mean_absorption(room, band_hz)?.min(1.0 - 1e-12);
    Ok(-room.surface_area() * (1.0 - alpha).ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{Material, SurfaceMaterials};

    fn room(alpha: f64) -> Room {
        let m = Material::new("uniform", [alpha; 6], [0.0; 6]).unwrap();
        Room {
            origin: [0.0, 0.0],
            size: [5.0, 4.0],
            height: 3.0,
            materials: Some(SurfaceMaterials { floor: m.clone(), ceiling: m.clone(), walls: m }),
        }
    }

    #[test]
    fn hand_evaluated_examples() {
        let r = room(0.3);
        assert_eq!(r.volume(), 60.0);
        assert_eq!(r.surface_area(), 94.0);
        let sabine = sabine_eyring_t60(&r, T60Formula::Sabine, 1000.0).unwrap();
        let eyring = sabine_eyring_t60(&r, T60Formula::Eyring, 1000.0).unwrap();
        assert!((sabine - 0.161 * 60.0 / (94.0 * 0.3)).abs() < 1e-12);
        assert!((sabine - 0.343).abs() < 5e-4);
        assert!((eyring - 0.161 * 60.0 / (94.0 * 0.356_674_943_9)).abs() < 1e-9);
        assert!((eyring - 0.288).abs() < 5e-4);
    }

    #[test]
    fn limits_and_errors() {
        assert_eq!(sabine_eyring_t60(&room(1.0), T60Formula::Eyring, 500.0).unwrap(), 0.0);
        let near = sabine_eyring_t60(&room(0.999_999), T60Formula::Eyring, 500.0).unwrap();
        assert!(near < 0.01);
        assert!(matches!(sabine_eyring_t60(&room(0.0), T60Formula::Sabine, 500.0), Err(Error::ZeroAbsorption)));
        let mut bare = room(0.3);
        bare.materials = None;
        assert!(sabine_eyring_t60(&bare, T60Formula::Sabine, 500.0).is_err());
    }

    #[test]
    fn eyring_never_exceeds_sabine() {
        for a in [0.01, 0.1, 0.3, 0.6, 0.9] {
            let r = room(a);
            assert!(
                sabine_eyring_t60(&r, T60Formula::Eyring, 250.0).unwrap()
                    < sabine_eyring_t60(&r, T60Formula::Sabine, 250.0).unwrap()
            );
        }
    }
}
