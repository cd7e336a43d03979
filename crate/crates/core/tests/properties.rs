use levy_attack::attack::{
    clip_canonical, orthogonal_project, rescale_step, shrink_toward_source, sq_distance,
};
use levy_attack::metrics::{lp_norm, Norm};
use levy_attack::oracle::{argmax, Activation, Layer};
use levy_attack::stable::empirical_cf;
use levy_attack::{Bounds, Network, RngSeed, StableParams};
use proptest::prelude::*;
use rand::distr::Distribution;

fn vec_of(dim: std::ops::RangeInclusive<usize>, scale: f64) -> impl Strategy<Value = Vec<f64>> {
    dim.prop_flat_map(move |d| prop::collection::vec(-scale..scale, d))
}

/// Three vectors of a shared random dimension.
fn triple(
    dims: std::ops::RangeInclusive<usize>,
) -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
    dims.prop_flat_map(|d| {
        (
            prop::collection::vec(0.0..1.0f64, d),
            prop::collection::vec(-1.0..1.0f64, d),
            prop::collection::vec(-1.0..1.0f64, d),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn projection_stays_on_sphere((x, offset, step) in triple(2..=512), delta in 1e-4..2.0f64) {
        let current: Vec<f64> = x.iter().zip(&offset).map(|(a, b)| a + b).collect();
        let d = sq_distance(&current, &x);
        prop_assume!(d > 1e-12);
        let eta = rescale_step(&step, delta, d);
        prop_assume!(eta.is_ok());
        let p = orthogonal_project(&x, &current, &eta.unwrap()).unwrap();
        let rel = (sq_distance(&p, &x) - d).abs() / d;
        prop_assert!(rel < 1e-9, "relative error {rel}");
    }

    #[test]
    fn shrink_hits_ratio((x, offset, _) in triple(2..=512), eps in 1e-6..0.99f64) {
        let c: Vec<f64> = x.iter().zip(&offset).map(|(a, b)| a + b).collect();
        let d = sq_distance(&c, &x);
        prop_assume!(d > 1e-12);
        let p = shrink_toward_source(&x, &c, eps);
        let ratio = sq_distance(&p, &x) / d;
        prop_assert!((ratio - (1.0 - eps)).abs() < 1e-12, "ratio {ratio} vs {}", 1.0 - eps);
    }

    #[test]
    fn rescaled_step_length(eta in vec_of(1..=256, 1e6), delta in 1e-6..10.0f64, d in 1e-8..1e3f64) {
        prop_assume!(eta.iter().any(|&v| v != 0.0));
        let s = rescale_step(&eta, delta, d).unwrap();
        let norm = lp_norm(&s, Norm::L2);
        prop_assert!((norm - delta * d).abs() <= 1e-12 * delta * d);
    }

    #[test]
    fn norm_ordering(tau in vec_of(1..=300, 1e3)) {
        let (inf, two, one) = (lp_norm(&tau, Norm::Linf), lp_norm(&tau, Norm::L2), lp_norm(&tau, Norm::L1));
        prop_assert!(inf <= two * (1.0 + 1e-12));
        prop_assert!(two <= one * (1.0 + 1e-12));
    }

    #[test]
    fn canonical_points_reconstruct_exactly((x, offset, _) in triple(1..=200), spread in 0.0..3.0f64) {
        let bounds = Bounds::new(0.0, 1.0).unwrap();
        let raw: Vec<f64> = x.iter().zip(&offset).map(|(a, b)| a + spread * b).collect();
        let c = clip_canonical(&x, &raw, &bounds);
        for i in 0..x.len() {
            let tau = c[i] - x[i];
            prop_assert_eq!(x[i] + tau, c[i]);
            prop_assert!(bounds.contains(c[i]));
        }
    }

    #[test]
    fn location_scale_equivariance(alpha in 0.3..=2.0f64, mu in -5.0..5.0f64, gamma in 0.1..10.0f64, seed in any::<u64>()) {
        let standard = StableParams::standard(alpha).unwrap();
        let shifted = StableParams::new(alpha, mu, gamma).unwrap();
        let mut a = RngSeed(seed).rng();
        let mut b = RngSeed(seed).rng();
        for _ in 0..64 {
            let z: f64 = standard.sample(&mut a);
            let y: f64 = shifted.sample(&mut b);
            let expect = mu + gamma * z;
            prop_assert!((y - expect).abs() <= 1e-12 * expect.abs().max(1.0));
        }
    }

    #[test]
    fn network_matches_naive_forward(
        seed in any::<u64>(),
        dims in (1usize..8, 1usize..8, 2usize..6),
        input in prop::collection::vec(-2.0..2.0f64, 8),
    ) {
        use rand::Rng;
        let (d_in, hid, k) = dims;
        let mut rng = RngSeed(seed).rng();
        let mut rand_vec = |n: usize| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<f64>>();
        let (w1, b1, w2, b2) = (rand_vec(hid * d_in), rand_vec(hid), rand_vec(k * hid), rand_vec(k));
        let net = Network::new(vec![
            Layer::new(hid, d_in, w1.clone(), b1.clone(), Activation::Relu).unwrap(),
            Layer::new(k, hid, w2.clone(), b2.clone(), Activation::Identity).unwrap(),
        ]).unwrap();
        let x = &input[..d_in];
        let mut h = vec![0.0; hid];
        for r in 0..hid {
            let mut acc = b1[r];
            for c in 0..d_in {
                acc += w1[r * d_in + c] * x[c];
            }
            h[r] = if acc > 0.0 { acc } else { 0.0 };
        }
        let mut best = (0, f64::NEG_INFINITY);
        for r in 0..k {
            let mut acc = b2[r];
            for c in 0..hid {
                acc += w2[r * hid + c] * h[c];
            }
            if acc > best.1 {
                best = (r, acc);
            }
        }
        prop_assert_eq!(argmax(&net.scores(x)), best.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// Standard error of one CF coordinate is below `1/sqrt(2n)`; the bound
    /// is about 4.5 of those.
    #[test]
    fn empirical_cf_tracks_analytic(alpha in 0.4..=2.0f64, s in 0.2..3.0f64, seed in any::<u64>()) {
        let n = 20_000;
        let p = StableParams::standard(alpha).unwrap();
        let mut rng = RngSeed(seed).rng();
        let xs: Vec<f64> = (0..n).map(|_| p.sample(&mut rng)).collect();
        let emp = empirical_cf(&xs, s).unwrap();
        let exact = (-(s.abs()).powf(alpha)).exp();
        prop_assert!((emp.re - exact).abs() < 0.0225 && emp.im.abs() < 0.0225, "{emp} vs {exact}");
    }
}
