use bisym_core::edge::{
    self, canny, count_edges, gradient, nms_neighbors, smoothed_sobel, threshold_edges,
    CannyParams, GradientOperator,
};
use bisym_core::image::GrayImage;
use bisym_core::phantom::{generate_phantom, phantom_suite, Grade, PhantomSpec};
use bisym_core::rng::Xoshiro256;
use proptest::prelude::*;

fn half_plane(size: usize, angle: f64, offset: f64) -> GrayImage {
    let (nx, ny) = (angle.cos(), angle.sin());
    let c = size as f64 / 2.0;
    GrayImage::from_fn(size, size, |x, y| {
        if (x as f64 - c) * nx + (y as f64 - c) * ny < offset {
            40
        } else {
            200
        }
    })
}

#[test]
fn straight_edges_are_one_pixel_wide_across_gradient() {
    let params = CannyParams::default();
    for deg in [0.0f64, 10.0, 30.0, 45.0, 60.0, 90.0, 120.0, 135.0, 170.0] {
        let img = half_plane(48, deg.to_radians(), 0.3);
        let edges = canny(&img, &params).unwrap();
        let field = smoothed_sobel(&img, params.sigma).unwrap();
        assert!(edges.count() > 20, "angle {deg}");
        for (x, y) in edges.iter_set() {
            let i = y * img.width() + x;
            let dirs = nms_neighbors(field.orientation[i]);
            for (dx, dy) in dirs {
                let (qx, qy) = (x as i64 + dx as i64, y as i64 + dy as i64);
                if !edges.get_signed(qx, qy) {
                    continue;
                }
                let j = qy as usize * img.width() + qx as usize;
                assert_ne!(
                    nms_neighbors(field.orientation[j]),
                    dirs,
                    "angle {deg} at ({x},{y})"
                );
            }
        }
    }
}

#[test]
fn canny_ignores_constant_offset_on_phantom() {
    let spec = PhantomSpec {
        texture_amplitude: 6.0,
        ..phantom_suite()[0].spec.clone()
    };
    let spec = PhantomSpec {
        noise_sigma: 0.0,
        ..spec
    };
    let (img, _) = generate_phantom(&spec).unwrap();
    assert!(img.pixels().iter().all(|&v| v <= 225));
    let shifted = GrayImage::from_fn(img.width(), img.height(), |x, y| img.get(x, y) + 30);
    let p = CannyParams::default();
    assert_eq!(canny(&img, &p).unwrap(), canny(&shifted, &p).unwrap());
}

#[test]
fn smoothing_preserves_constant_images() {
    for v in [0u8, 1, 117, 255] {
        let img = GrayImage::filled(11, 9, v);
        let plane = edge::gaussian_smooth(&img, 1.4);
        for y in 0..9 {
            for x in 0..11 {
                assert_eq!(plane.get(x, y), v as f64);
            }
        }
    }
}

#[test]
fn operator_counts_on_suite() {
    let p = CannyParams::default();
    let (mut high, mut low) = (0usize, 0usize);
    for entry in phantom_suite() {
        let (img, _) = generate_phantom(&entry.spec).unwrap();
        let homogenized = bisym_core::process_image(&img, &Default::default());
        let count =
            |op| count_edges(&threshold_edges(&gradient(&homogenized, op).unwrap(), 0.1).unwrap());
        let (r, pw) = (
            count(GradientOperator::Roberts),
            count(GradientOperator::Prewitt),
        );
        let c = count_edges(&canny(&homogenized, &p).unwrap());
        assert!(r > pw && pw > c, "{}: {r} {pw} {c}", entry.name);
        match entry.grade {
            Grade::High => high += c,
            Grade::Low => low += c,
        }
    }
    assert!(high > low);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn canny_offset_invariance(seed in any::<u64>(), offset in 1u8..=55) {
        let mut rng = Xoshiro256::seed_from_u64(seed);
        let base: Vec<u8> = (0..24 * 20).map(|_| (rng.next_u64() % 201) as u8).collect();
        let img = GrayImage::new(24, 20, base.clone()).unwrap();
        let shifted = GrayImage::new(24, 20, base.iter().map(|v| v + offset).collect()).unwrap();
        let p = CannyParams::default();
        prop_assert_eq!(canny(&img, &p).unwrap(), canny(&shifted, &p).unwrap());
    }

    #[test]
    fn canny_is_subset_of_its_low_threshold(seed in any::<u64>(), sigma in 0.5f64..2.5) {
        let mut rng = Xoshiro256::seed_from_u64(seed);
        let img = GrayImage::from_fn(20, 20, |_, _| rng.next_u64() as u8);
        let p = CannyParams::new(sigma, 0.2, 0.4).unwrap();
        let field = smoothed_sobel(&img, sigma).unwrap();
        let low = threshold_edges(&field, 0.2).unwrap();
        prop_assert!(canny(&img, &p).unwrap().is_subset_of(&low));
    }
}
