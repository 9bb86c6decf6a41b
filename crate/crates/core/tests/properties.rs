use acousmap_core::ambisonics::{maxre_gains, rotate_azimuth, BeamPattern, CHANNELS};
use acousmap_core::analysis::{energy_ratio, schroeder_edc, EnergyRatio};
use acousmap_core::heatmap::masked_average_pool;
use acousmap_core::rir::{ChannelLayout, RoomImpulseResponse};
use acousmap_core::Grid;
use proptest::prelude::*;
use serde::Deserialize;

#[derive(Deserialize)]
struct GoldenCase {
    steering_azimuth: f64,
    azimuth: f64,
    elevation: f64,
    response: f64,
}

#[derive(Deserialize)]
struct Golden {
    order: usize,
    gains: Vec<f64>,
    cases: Vec<GoldenCase>,
}

#[test]
fn maxre_matches_golden_addition_theorem_values() {
    // regenerate with scripts/golden_maxre.py
    let golden: Golden = serde_json::from_str(include_str!("golden/maxre_order2.json")).unwrap();
    for (got, want) in maxre_gains(golden.order).iter().zip(&golden.gains) {
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }
    for c in &golden.cases {
        let got = BeamPattern::maxre(c.steering_azimuth).response(c.azimuth, c.elevation);
        assert!((got - c.response).abs() < 1e-12, "{got} vs {}", c.response);
    }
}

proptest! {
    #[test]
    fn edc_never_increases(x in prop::collection::vec(-1.0f64..1.0, 2..400)) {
        prop_assume!(x.iter().any(|v| *v != 0.0));
        let edc = schroeder_edc(&x, 24000).unwrap();
        for w in edc.values_db().windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9, "{} then {}", w[0], w[1]);
        }
    }

    #[test]
    fn energy_ratios_ignore_gain(
        x in prop::collection::vec(-1.0f64..1.0, 2000..3000),
        gain in 1e-3f64..1e3,
        onset in 0usize..500,
    ) {
        let scaled: Vec<f64> = x.iter().map(|v| v * gain).collect();
        for kind in [EnergyRatio::C50, EnergyRatio::Drr] {
            let a = energy_ratio(&x, 24000, onset, kind).unwrap();
            let b = energy_ratio(&scaled, 24000, onset, kind).unwrap();
            prop_assert!((a - b).abs() < 1e-9, "{kind:?}: {a} vs {b}");
        }
    }

    #[test]
    fn rotations_compose(
        a in -3.2f64..3.2,
        b in -3.2f64..3.2,
        data in prop::collection::vec(-1.0f32..1.0, CHANNELS * 16),
    ) {
        let field = RoomImpulseResponse::new(data.chunks(16).map(<[f32]>::to_vec).collect(), 24000, ChannelLayout::Ambisonic2).unwrap();
        let twice = rotate_azimuth(&rotate_azimuth(&field, a).unwrap(), b).unwrap();
        let once = rotate_azimuth(&field, a + b).unwrap();
        for (x, y) in twice.channels().iter().flatten().zip(once.channels().iter().flatten()) {
            prop_assert!((x - y).abs() < 1e-5, "{x} vs {y}");
        }
    }

    #[test]
    fn pooled_values_stay_within_the_active_range(
        cells in prop::collection::vec((any::<bool>(), -50.0f64..50.0), 144),
        kernel in prop::sample::select(vec![1usize, 3, 5, 7]),
    ) {
        prop_assume!(cells.iter().any(|c| c.0));
        let values = Grid::from_fn(12, 12, |r, c| cells[r * 12 + c].1);
        let active = Grid::from_fn(12, 12, |r, c| cells[r * 12 + c].0);
        let (lo, hi) = cells.iter().filter(|c| c.0).fold((f64::MAX, f64::MIN), |(lo, hi), c| (lo.min(c.1), hi.max(c.1)));
        let (pooled, cover) = masked_average_pool(&values, &active, kernel).unwrap();
        prop_assert!(active.is_subset_of(&cover));
        for (v, m) in pooled.as_slice().iter().zip(cover.as_slice()) {
            if *m {
                prop_assert!(*v >= lo - 1e-9 && *v <= hi + 1e-9);
            }
        }
    }
}
