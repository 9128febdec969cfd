use camcal::camera::plan_resize_pad;
use camcal::camera_image::encode_variant;
use camcal::cami::{decode_bytes, encode_bytes};
use camcal::recovery::{calib_error, recover_intrinsics};
use camcal::{ChannelVariant, ImageDims, Intrinsics, RansacConfig};
use proptest::prelude::*;

fn camera() -> impl Strategy<Value = (Intrinsics, ImageDims)> {
    (40usize..160, 40usize..160, 0.5f64..2.0, 0.8f64..1.25, -0.2f64..0.2, -0.2f64..0.2).prop_map(
        |(w, h, f, aspect, ox, oy)| {
            let fx = f * w as f64;
            let k = Intrinsics::new(
                fx,
                fx * aspect,
                (0.5 + ox) * (w - 1) as f64,
                (0.5 + oy) * (h - 1) as f64,
            )
            .unwrap();
            (k, ImageDims::new(w, h).unwrap())
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn stored_file_recovers_intrinsics((k, dims) in camera(), seed in any::<u64>()) {
        let ci = encode_variant(&k, dims, None, ChannelVariant::Constant(0.5)).unwrap();
        let back = decode_bytes(&encode_bytes(&ci).unwrap()).unwrap();
        let cfg = RansacConfig { seed, ..RansacConfig::default() };
        let (pred, _) = recover_intrinsics(&back, &cfg).unwrap();
        let err = calib_error(&pred, &k, dims);
        // single-precision storage
        prop_assert!(err.e_f < 1e-5 && err.e_b < 1e-5, "{:?}", err);
    }

    #[test]
    fn crop_matches_shifted_intrinsics((k, dims) in camera(), x0 in 0usize..10, y0 in 0usize..10) {
        let ci = encode_variant(&k, dims, None, ChannelVariant::DuplicateTheta).unwrap();
        let (w, h) = (dims.width - x0 - 10, dims.height - y0 - 10);
        let crop = ci.crop(x0, y0, w, h).unwrap();
        let (pred, _) = recover_intrinsics(&crop, &RansacConfig::default()).unwrap();
        let want = k.after_crop(x0 as f64, y0 as f64);
        let err = calib_error(&pred, &want, ImageDims::new(w, h).unwrap());
        prop_assert!(err.e_f < 1e-9 && err.e_b < 1e-9, "{:?}", err);
    }

    #[test]
    fn resize_pad_canvas_is_encodable((k, dims) in camera()) {
        let target = ImageDims::new(96, 64).unwrap();
        let plan = plan_resize_pad(dims, target).unwrap();
        prop_assert_eq!(plan.output_dims(), target);
        let canvas = plan.apply(&k, dims).unwrap();
        let ci = encode_variant(&canvas, target, None, ChannelVariant::Constant(0.0)).unwrap();
        let (pred, _) = recover_intrinsics(&ci, &RansacConfig::default()).unwrap();
        let err = calib_error(&pred, &canvas, target);
        prop_assert!(err.e_f < 1e-9 && err.e_b < 1e-9, "{:?}", err);
    }
}
