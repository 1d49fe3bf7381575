//! Property tests for the serialization round trips and kernel identities.

use proptest::prelude::*;

use aliassr::raster::{read_raster, write_raster, Plane, Raster};
use aliassr::signal::{blur, gaussian_kernel};

fn raster_strategy() -> impl Strategy<Value = Raster> {
    (1usize..=3, 1usize..=8, 1usize..=8)
        .prop_flat_map(|(bands, h, w)| {
            let n = bands * h * w;
            (
                Just((bands, h, w)),
                proptest::collection::vec(-1e6f32..1e6f32, n),
            )
        })
        .prop_map(|((bands, h, w), data)| Raster::new(bands, h, w, data).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ras1_roundtrip_is_bit_exact(raster in raster_strategy()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.ras");
        write_raster(&raster, &path).unwrap();
        let back = read_raster(&path).unwrap();
        prop_assert_eq!(raster, back);
    }

    #[test]
    fn blur_is_linear(
        data_a in proptest::collection::vec(-100.0f32..100.0, 81),
        data_b in proptest::collection::vec(-100.0f32..100.0, 81),
        a in -2.0f32..2.0,
        b in -2.0f32..2.0,
        sigma in 0.1f64..2.0,
    ) {
        let x = Plane::from_vec(9, 9, data_a);
        let y = Plane::from_vec(9, 9, data_b);
        let kernel = gaussian_kernel(sigma).unwrap();
        let combo = Plane::from_fn(9, 9, |i, j| a * x.get(i, j) + b * y.get(i, j));
        let lhs = blur(&combo, &kernel);
        let bx = blur(&x, &kernel);
        let by = blur(&y, &kernel);
        for i in 0..9 {
            for j in 0..9 {
                let rhs = a * bx.get(i, j) + b * by.get(i, j);
                prop_assert!((lhs.get(i, j) - rhs).abs() < 1e-3,
                    "({}, {}): {} vs {}", i, j, lhs.get(i, j), rhs);
            }
        }
    }

    #[test]
    fn checkpoint_roundtrip_random_weights(seed in 0u64..1000) {
        use aliassr::net::checkpoint::{load_checkpoint, save_checkpoint};
        use aliassr::net::model::{ModelParams, ModelSpec};
        let spec = ModelSpec { in_bands: 1, features: 4, num_rrdb: 1, growth: 2 };
        let mut rng = aliassr::raster::Rng::from_seed(seed);
        let params = ModelParams::<f32>::init(&spec, &mut rng);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.srw");
        save_checkpoint(&path, &spec, &params).unwrap();
        let (spec2, params2) = load_checkpoint(&path).unwrap();
        prop_assert_eq!(spec, spec2);
        prop_assert_eq!(params, params2);
    }
}
