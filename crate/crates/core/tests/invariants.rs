//! Property tests over randomized inputs.

use nalgebra::{Point3, Rotation3, Unit, Vector3};
use onh_core::dvc::{effective_strain, SymTensor};
use onh_core::experiment::make_splits;
use onh_core::geometry::{cylindrical_crop, knn_interpolate, resample_indices};
use onh_core::{seed, Frame, OnhPointCloud, Tissue};
use proptest::prelude::*;

fn tensor() -> impl Strategy<Value = SymTensor> {
    prop::array::uniform6(-0.1f64..0.1).prop_map(SymTensor::from_components)
}

fn point() -> impl Strategy<Value = Point3<f64>> {
    (-3.0f64..3.0, -3.0f64..3.0, -1.0f64..1.0).prop_map(|(x, y, z)| Point3::new(x, y, z))
}

fn aligned(points: Vec<Point3<f64>>) -> OnhPointCloud {
    let n = points.len();
    OnhPointCloud::new(points, vec![Tissue::Rnfl; n], vec![0.1; n], None, Frame::BmoAligned).unwrap()
}

proptest! {
    #[test]
    fn effective_strain_is_a_rotation_invariant_norm(
        eps in tensor(),
        axis in (-1.0f64..1.0, -1.0f64..1.0, 0.1f64..1.0),
        angle in 0.0f64..std::f64::consts::TAU,
        scale in -5.0f64..5.0,
        hydro in -0.1f64..0.1,
    ) {
        let e = effective_strain(&eps);
        prop_assert!(e >= 0.0);
        let r = Rotation3::from_axis_angle(&Unit::new_normalize(Vector3::new(axis.0, axis.1, axis.2)), angle);
        let rotated = SymTensor::sym(&(r.matrix() * eps.to_matrix() * r.matrix().transpose()));
        prop_assert!((effective_strain(&rotated) - e).abs() < 1e-12);
        let scaled = SymTensor::from_components(eps.components().map(|c| c * scale));
        prop_assert!((effective_strain(&scaled) - scale.abs() * e).abs() < 1e-12);
        let mut shifted = eps;
        shifted.xx += hydro;
        shifted.yy += hydro;
        shifted.zz += hydro;
        prop_assert!((effective_strain(&shifted) - e).abs() < 1e-12);
    }

    #[test]
    fn crop_keeps_exactly_the_cylinder(points in prop::collection::vec(point(), 1..100), radius in 0.2f64..3.0) {
        let cloud = aligned(points.clone());
        let inside = points.iter().filter(|p| p.x.hypot(p.y) <= radius).count();
        match cylindrical_crop(&cloud, radius) {
            Ok(c) => {
                prop_assert_eq!(c.len(), inside);
                prop_assert!(c.points().iter().all(|p| p.x.hypot(p.y) <= radius));
                let again = cylindrical_crop(&c, radius).unwrap();
                prop_assert_eq!(again.points(), c.points());
            }
            Err(_) => prop_assert_eq!(inside, 0),
        }
    }

    #[test]
    fn knn_mean_stays_within_sample_range(
        samples in prop::collection::vec((point(), -1.0f64..1.0), 1..50),
        queries in prop::collection::vec(point(), 1..20),
        k in 1usize..10,
    ) {
        let lo = samples.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
        let hi = samples.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
        for v in knn_interpolate(&queries, &samples, k).unwrap() {
            prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
        }
    }

    #[test]
    fn resampling_draws_valid_indices(len in 1usize..500, n in 1usize..4000, s in any::<u64>()) {
        let idx = resample_indices(len, n, &mut seed::rng(s));
        prop_assert_eq!(idx.len(), n);
        prop_assert!(idx.iter().all(|&i| i < len));
        if n <= len {
            let mut sorted = idx.clone();
            sorted.sort_unstable();
            sorted.dedup();
            prop_assert_eq!(sorted.len(), n);
        }
    }

    #[test]
    fn splits_partition_every_fold(n in 20usize..150, folds in 2usize..6, s in any::<u64>()) {
        prop_assume!(2 * folds <= n);
        let subjects: Vec<(String, usize)> = (0..n).map(|i| (format!("s{i}"), (i * 7919) % 13)).collect();
        let plan = make_splits(&subjects, folds, s).unwrap();
        prop_assert_eq!(plan.folds.len(), folds);
        for f in &plan.folds {
            let mut all: Vec<&String> = f.train.iter().chain(&f.val).chain(&f.test).collect();
            prop_assert_eq!(all.len(), n);
            all.sort();
            all.dedup();
            prop_assert_eq!(all.len(), n);
        }
    }
}
