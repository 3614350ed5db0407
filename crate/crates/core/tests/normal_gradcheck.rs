mod common;

use common::{finite_difference, max_relative_error, random_depth};
use pcstruct::depth::{normal_loss, normal_loss_gradient, normals_from_depth};
use pcstruct::{DepthEncoding, DepthMap};
use proptest::prelude::*;

#[test]
fn analytic_gradient_matches_central_differences() {
    for seed in 0..10u64 {
        let sim = random_depth(16, 16, 2 * seed);
        let rec = random_depth(16, 16, 2 * seed + 1);
        let analytic = normal_loss_gradient(&sim, &rec, 1.0).unwrap();
        let numeric = finite_difference(&rec, 1e-4, |d| normal_loss(&sim, d, 1.0).unwrap());
        let err = max_relative_error(&analytic, &numeric, 1e-6);
        assert!(err < 1e-4, "seed {seed}: max relative error {err}");
    }
}

#[test]
fn plane_against_ramp() {
    let plane = DepthMap::from_fn(12, 10, DepthEncoding::MetricMm, |_, _| 3.0).unwrap();
    let ramp = DepthMap::from_fn(12, 10, DepthEncoding::MetricMm, |x, _| x as f64).unwrap();
    let n_plane = normals_from_depth(&plane, 1.0).unwrap();
    let n_ramp = normals_from_depth(&ramp, 1.0).unwrap();
    for y in 1..9 {
        for x in 1..11 {
            let (a, b) = (n_plane.normals[y * 12 + x], n_ramp.normals[y * 12 + x]);
            let cos = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
            assert!((1.0 - cos - (1.0 - 1.0 / 2f64.sqrt())).abs() < 1e-10);
        }
    }
}

fn mirror_x(d: &DepthMap) -> DepthMap {
    let w = d.width();
    DepthMap::from_fn(w, d.height(), d.encoding(), |x, y| d.get(w - 1 - x, y)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn normals_are_unit(seed in any::<u64>(), step in 0.1f64..5.0) {
        let n = normals_from_depth(&random_depth(9, 7, seed), step).unwrap();
        for v in &n.normals {
            prop_assert!(((v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt() - 1.0).abs() < 1e-12);
            prop_assert!(v[2] > 0.0);
        }
    }

    #[test]
    fn mirroring_flips_x_component(seed in any::<u64>()) {
        let d = random_depth(9, 7, seed);
        let a = normals_from_depth(&d, 1.0).unwrap();
        let b = normals_from_depth(&mirror_x(&d), 1.0).unwrap();
        for y in 0..7 {
            for x in 0..9 {
                let p = a.normals[y * 9 + x];
                let q = b.normals[y * 9 + 8 - x];
                prop_assert!((p[0] + q[0]).abs() < 1e-12);
                prop_assert!((p[1] - q[1]).abs() < 1e-12);
                prop_assert!((p[2] - q[2]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn loss_is_symmetric_and_bounded(sa in any::<u64>(), sb in any::<u64>()) {
        let a = random_depth(10, 8, sa);
        let b = random_depth(10, 8, sb);
        let ab = normal_loss(&a, &b, 1.0).unwrap();
        prop_assert!((ab - normal_loss(&b, &a, 1.0).unwrap()).abs() < 1e-12);
        prop_assert!((0.0..=2.0).contains(&ab));
        prop_assert!(normal_loss(&a, &a, 1.0).unwrap().abs() < 1e-12);
    }
}
