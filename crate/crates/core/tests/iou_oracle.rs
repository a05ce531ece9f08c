use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ctxplace_core::eval::{iou, BoxAnnotation};
use ctxplace_testkit::{monte_carlo_iou, RawBox};

#[test]
fn iou_agrees_with_volume_sampling() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for pair in 0..50 {
        let mut draw = || RawBox {
            center: [rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5), rng.random_range(0.0..0.6)],
            extents: [rng.random_range(0.3..1.5), rng.random_range(0.3..1.5), rng.random_range(0.3..1.2)],
            yaw: rng.random_range(0.0..2.0 * PI),
        };
        let (a, b) = (draw(), draw());
        let ann = |r: &RawBox| BoxAnnotation { center: r.center, extents: r.extents, yaw: r.yaw, front: None };
        let exact = iou(&ann(&a), &ann(&b));
        // 100^3 = 1e6 jittered samples.
        let sampled = monte_carlo_iou(&a, &b, 100, pair);
        worst = worst.max((exact - sampled).abs());
        assert!((exact - sampled).abs() <= 1e-3, "pair {pair}: {exact} vs {sampled}");
    }
    println!("worst IoU deviation {worst:.2e}");
}
