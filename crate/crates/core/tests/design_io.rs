use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use sfv::design::{load_design_csv, load_response_csv, standardize_columns};
use sfv::harness::csvio::{save_matrix_csv, save_vector_csv};

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        -1e6f64..1e6,
        any::<f64>().prop_filter("finite", |v| v.is_finite()),
        Just(0.0),
        Just(-0.0),
        Just(f64::MIN_POSITIVE),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matrix_csv_roundtrip_is_exact(rows in 1usize..12, cols in 1usize..8, vals in prop::collection::vec(finite(), 96)) {
        let x = DMatrix::from_fn(rows, cols, |i, j| vals[i * cols + j]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        save_matrix_csv(&x, &path).unwrap();
        let back = load_design_csv(&path, false).unwrap();
        prop_assert_eq!(back.shape(), x.shape());
        for (a, b) in back.iter().zip(x.iter()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn vector_csv_roundtrip_is_exact(vals in prop::collection::vec(finite(), 1..40)) {
        let v = DVector::from_vec(vals);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("y.csv");
        save_vector_csv(&v, &path).unwrap();
        let back = load_response_csv(&path).unwrap();
        prop_assert_eq!(back.len(), v.len());
        for (a, b) in back.iter().zip(v.iter()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn standardizing_is_idempotent(rows in 3usize..20, cols in 1usize..6, vals in prop::collection::vec(-100.0f64..100.0, 120)) {
        let x = DMatrix::from_fn(rows, cols, |i, j| vals[i * cols + j]);
        let Ok(s) = standardize_columns(&x) else { return Ok(()); };
        for col in s.column_iter() {
            prop_assert!(col.sum().abs() <= 1e-12 * rows as f64);
            prop_assert!((col.norm() - 1.0).abs() <= 1e-12);
        }
        let again = standardize_columns(&s).unwrap();
        prop_assert!((again - &s).amax() <= 1e-12);
    }
}
