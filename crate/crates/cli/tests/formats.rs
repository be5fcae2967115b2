//! Property tests for the file formats: map serialization must round-trip
//! bitwise for arbitrary contents, and the unit-suffix rule must hold for
//! every dimensioned key, not just the ones unit tests happen to pick.

use num_complex::Complex64;
use proptest::prelude::*;

use magopt::sweep::{MapKind, MapValues, SpectrumMap, SweepAxis};
use magopt_cli::artifacts::{parse_map, serialize_map, serialize_mask};
use magopt_cli::config::ConfigFile;

fn axis_strategy(name: &'static str) -> impl Strategy<Value = SweepAxis> {
    (
        -1.0e9..1.0e9f64,
        1.0e-6..1.0e9f64,
        2usize..9,
    )
        .prop_map(move |(start, span, points)| {
            SweepAxis::new(name, start, start + span, points).unwrap()
        })
}

fn finite_value() -> impl Strategy<Value = f64> {
    prop_oneof![
        -1.0e12..1.0e12f64,
        -1.0..1.0f64,
        Just(0.0),
        Just(2.2250738585072014e-308),
        Just(1.7976931348623157e308),
        Just(-4.9e-324),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, ..ProptestConfig::default() })]

    #[test]
    fn any_map_round_trips_bitwise(
        x in axis_strategy("field_t"),
        y in axis_strategy("probe_hz"),
        complex_kind in any::<bool>(),
        fills in proptest::collection::vec(finite_value(), 128),
        poison in proptest::collection::vec(any::<bool>(), 64),
    ) {
        let kind = if complex_kind { MapKind::Reflection } else { MapKind::ConversionAntiStokes };
        let mut map = SpectrumMap::zeros(x, y, kind);
        if !complex_kind {
            map.values = MapValues::Real(vec![0.0; map.x_axis.points * map.y_axis.points]);
        }
        let n = map.x_axis.points * map.y_axis.points;
        match &mut map.values {
            MapValues::Complex(v) => {
                for i in 0..n {
                    v[i] = Complex64::new(fills[(2 * i) % fills.len()], fills[(2 * i + 1) % fills.len()]);
                }
            }
            MapValues::Real(v) => {
                for i in 0..n {
                    v[i] = fills[i % fills.len()];
                }
            }
        }
        for i in 0..n {
            if poison[i % poison.len()] && i % 3 == 0 {
                map.valid[i] = false;
                match &mut map.values {
                    MapValues::Complex(v) => v[i] = Complex64::new(f64::NAN, f64::NAN),
                    MapValues::Real(v) => v[i] = f64::NAN,
                }
            }
        }
        let text = serialize_map(&map);
        let back = parse_map(&text).unwrap();
        prop_assert!(map.bitwise_eq(&back), "round trip changed the map");
        let poisoned = map.valid.iter().filter(|v| !**v).count();
        prop_assert_eq!(serialize_mask(&map).is_some(), poisoned > 0);
    }

    #[test]
    fn every_dimensioned_key_rejects_bare_numbers(
        key_idx in 0usize..16,
        value in -1.0e6..1.0e6f64,
    ) {
        let keys = [
            ("transducer", "omega_a"), ("transducer", "kappa_a"),
            ("transducer", "gamma_a"), ("transducer", "omega_m"),
            ("transducer", "gamma_m"), ("transducer", "omega_b"),
            ("transducer", "kappa_b"), ("transducer", "gamma_b"),
            ("transducer", "g_ma"), ("transducer", "g_mb"),
            ("transducer", "delta_b"), ("geometry", "mu0_hm"),
            ("geometry", "d"), ("geometry", "l1"), ("geometry", "l2"),
            ("geometry", "gyro_over_2pi"),
        ];
        let (section, key) = keys[key_idx];
        let quoted: std::collections::HashMap<&str, String> = keys
            .iter()
            .map(|(s, k)| {
                let good = match *s {
                    "transducer" if *k == "delta_b" => "\"7.0 GHz\"".to_string(),
                    "transducer" => "\"5.0 MHz\"".to_string(),
                    _ if *k == "mu0_hm" => "\"175 mT\"".to_string(),
                    _ if *k == "gyro_over_2pi" => "\"28 GHz/T\"".to_string(),
                    _ => "\"1.0 mm\"".to_string(),
                };
                (*k, good)
            })
            .collect();
        let mut text = String::from("schema_version = 1\n\n[transducer]\n");
        for k in [
            "omega_a", "kappa_a", "gamma_a", "omega_m", "gamma_m", "omega_b",
            "kappa_b", "gamma_b", "g_ma", "g_mb",
        ] {
            if section == "transducer" && k == key {
                text.push_str(&format!("{k} = {value}\n"));
            } else {
                text.push_str(&format!("{k} = {}\n", quoted[k]));
            }
        }
        text.push_str("process = \"anti_stokes\"\n");
        if section == "transducer" && key == "delta_b" {
            text.push_str(&format!("delta_b = {value}\n"));
        } else {
            text.push_str("delta_b = \"7.0 GHz\"\n");
        }
        text.push_str("\n[geometry]\n");
        for k in ["mu0_hm", "d", "l1", "l2", "gyro_over_2pi"] {
            if section == "geometry" && k == key {
                text.push_str(&format!("{k} = {value}\n"));
            } else {
                text.push_str(&format!("{k} = {}\n", quoted[k]));
            }
        }
        let cfg = ConfigFile::parse(&text).unwrap();
        let err = match section {
            "transducer" => cfg.transducer().unwrap_err(),
            _ => cfg.geometry().unwrap_err(),
        };
        let msg = format!("{err}");
        let full = format!("{section}.{key}");
        prop_assert!(msg.contains(&full), "error {msg:?} must name {full}");
        prop_assert!(msg.contains("missing unit suffix"), "{msg}");
        prop_assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn valid_quantities_resolve_for_every_suffix(
        value in 0.1..999.0f64,
        suffix_idx in 0usize..5,
    ) {
        let (suffix, factor) = [
            ("Hz", 1.0), ("kHz", 1e3), ("MHz", 1e6), ("GHz", 1e9), ("THz", 1e12),
        ][suffix_idx];
        let text = format!(
            concat!(
                "schema_version = 1\n\n[simulate]\n",
                "probe_start = \"{v} {s}\"\n",
                "probe_stop = \"{v2} {s}\"\n",
                "points = 2\n",
            ),
            v = value,
            v2 = value * 3.0,
            s = suffix,
        );
        let plan = ConfigFile::parse(&text).unwrap().simulate().unwrap();
        prop_assert_eq!(plan.axis.start, value * factor);
        prop_assert_eq!(plan.axis.stop, value * 3.0 * factor);
    }
}
