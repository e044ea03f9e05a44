use std::io::Cursor;

use biolage_cli::formats::{
    read_chi, read_density, read_histogram, read_moments, write_chi, write_density,
    write_histogram, write_moments,
};
use biolage_core::ibm::Histogram;
use biolage_core::pde::DensitySnapshot;
use biolage_core::MomentVector;
use proptest::prelude::*;

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![-1e300..1e300f64, -1.0..1.0f64, Just(0.0)]
}

proptest! {
    #[test]
    fn chi_table_round_trips(chi in prop::collection::vec(finite(), 1..50)) {
        let mut buf = Vec::new();
        write_chi(&mut buf, &chi).unwrap();
        prop_assert_eq!(read_chi(Cursor::new(buf)).unwrap(), chi);
    }

    #[test]
    fn histogram_round_trips(
        w in 0.01..5.0f64,
        counts in prop::collection::vec(0u64..1_000_000, 1..40),
        overflow in 0u64..100,
    ) {
        let h = Histogram { bin_width: w, counts, overflow };
        let mut buf = Vec::new();
        write_histogram(&mut buf, &h).unwrap();
        prop_assert_eq!(read_histogram(Cursor::new(buf)).unwrap(), h);
    }

    #[test]
    fn moments_round_trip(
        rows in prop::collection::vec((0.0..100.0f64, prop::collection::vec(0.0..1e200f64, 5)), 1..6),
    ) {
        let points: Vec<MomentVector> =
            rows.into_iter().map(|(t, v)| MomentVector::from_linear(t, v)).collect();
        let mut buf = Vec::new();
        write_moments(&mut buf, &points).unwrap();
        prop_assert_eq!(read_moments(Cursor::new(buf)).unwrap(), points);
    }

    #[test]
    fn log_scaled_moments_round_trip(t in 0.0..10.0f64, ln in prop::collection::vec(0.0..2000.0f64, 3)) {
        let m = MomentVector::from_ln(t, &ln);
        let mut buf = Vec::new();
        write_moments(&mut buf, std::slice::from_ref(&m)).unwrap();
        let back = read_moments(Cursor::new(buf)).unwrap();
        prop_assert_eq!(&back[0].scales, &m.scales);
        for k in 0..3 {
            prop_assert!((back[0].ln_abs(k) - m.ln_abs(k)).abs() <= 1e-12 * m.ln_abs(k).abs().max(1.0));
        }
    }

    #[test]
    fn density_round_trips(
        t in 0.0..50.0f64,
        cells in prop::collection::vec((0.0..100.0f64, 0.0..10.0f64), 1..30),
    ) {
        let (b_center, density): (Vec<f64>, Vec<f64>) = cells.into_iter().unzip();
        let snaps = vec![DensitySnapshot { t, b_center, density }];
        let mut buf = Vec::new();
        write_density(&mut buf, &snaps).unwrap();
        prop_assert_eq!(read_density(Cursor::new(buf)).unwrap(), snaps);
    }
}
