//! Property-based invariants across the numerical core.

use proptest::prelude::*;
use wavedbn::config::RunConfig;
use wavedbn::dataset::{split_holdout, LabeledDataset, SplitSpec};
use wavedbn::ensemble::weighted_vote;
use wavedbn::rbm::{sample_bernoulli, Rbm, VisibleKind};
use wavedbn::rng;
use wavedbn::wavelet::{decompose_full_2level, dwt2, idwt2, Image, WaveletFilter};

fn image_strategy(max_half: usize) -> impl Strategy<Value = Image> {
    (1..=max_half, 1..=max_half).prop_flat_map(|(hw, hh)| {
        let (w, h) = (hw * 2, hh * 2);
        prop::collection::vec(-10.0f64..10.0, w * h)
            .prop_map(move |pixels| Image::new(w, h, pixels).unwrap())
    })
}

fn filter_strategy() -> impl Strategy<Value = WaveletFilter> {
    prop_oneof![
        Just(WaveletFilter::haar()),
        Just(WaveletFilter::daubechies4())
    ]
}

proptest! {
    #[test]
    fn dwt2_reconstructs_exactly(img in image_strategy(12), filter in filter_strategy()) {
        let bands = dwt2(&img, &filter).unwrap();
        let back = idwt2(&bands, &filter).unwrap();
        for (a, b) in img.pixels().iter().zip(back.pixels()) {
            prop_assert!((a - b).abs() < 1e-10, "{} vs {}", a, b);
        }
    }

    #[test]
    fn dwt2_preserves_energy(img in image_strategy(12), filter in filter_strategy()) {
        let input: f64 = img.pixels().iter().map(|p| p * p).sum();
        let bands = dwt2(&img, &filter).unwrap();
        let output: f64 = [&bands.ll, &bands.lh, &bands.hl, &bands.hh]
            .iter()
            .flat_map(|b| b.pixels())
            .map(|p| p * p)
            .sum();
        prop_assert!((input - output).abs() <= 1e-8 * input.max(1.0));
    }

    #[test]
    fn dwt2_is_linear(
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        seed in 0u64..1000,
        filter in filter_strategy(),
    ) {
        let mut r = rng::seeded(seed);
        let (w, h) = (8, 6);
        let x = Image::new(w, h, (0..w * h).map(|_| rng::uniform(&mut r)).collect()).unwrap();
        let y = Image::new(w, h, (0..w * h).map(|_| rng::uniform(&mut r)).collect()).unwrap();
        let combo = Image::new(
            w,
            h,
            x.pixels().iter().zip(y.pixels()).map(|(p, q)| a * p + b * q).collect(),
        )
        .unwrap();

        let bx = dwt2(&x, &filter).unwrap();
        let by = dwt2(&y, &filter).unwrap();
        let bc = dwt2(&combo, &filter).unwrap();
        for ((cx, cy), cc) in [&bx.ll, &bx.lh, &bx.hl, &bx.hh]
            .iter()
            .flat_map(|band| band.pixels())
            .zip([&by.ll, &by.lh, &by.hl, &by.hh].iter().flat_map(|band| band.pixels()))
            .zip([&bc.ll, &bc.lh, &bc.hl, &bc.hh].iter().flat_map(|band| band.pixels()))
        {
            prop_assert!((a * cx + b * cy - cc).abs() < 1e-10);
        }
    }

    #[test]
    fn full_decomposition_size_law(half in 1usize..=8, filter in filter_strategy()) {
        let (w, h) = (half * 4, half * 4);
        let img = Image::constant(w, h, 0.25);
        let set = decompose_full_2level(&img, &filter).unwrap();
        prop_assert_eq!(set.subbands().len(), 16);
        for band in set.subbands() {
            prop_assert_eq!((band.width(), band.height()), (w / 4, h / 4));
        }
    }

    #[test]
    fn dwt2_is_deterministic(img in image_strategy(8)) {
        let filter = WaveletFilter::haar();
        let a = dwt2(&img, &filter).unwrap();
        let b = dwt2(&img, &filter).unwrap();
        prop_assert_eq!(a.ll.pixels(), b.ll.pixels());
        prop_assert_eq!(a.hh.pixels(), b.hh.pixels());
    }

    #[test]
    fn vote_scaling_and_permutation_invariance(
        preds in prop::collection::vec(0usize..6, 16),
        raw_weights in prop::collection::vec(0.01f64..2.0, 16),
        lambda in 0.001f64..100.0,
        perm_seed in 0u64..500,
    ) {
        let base = weighted_vote(&preds, &raw_weights, 6).unwrap();
        let scaled: Vec<f64> = raw_weights.iter().map(|w| w * lambda).collect();
        prop_assert_eq!(weighted_vote(&preds, &scaled, 6).unwrap().predicted, base.predicted);

        let mut idx: Vec<usize> = (0..16).collect();
        let mut r = rng::seeded(perm_seed);
        rng::shuffle(&mut r, &mut idx);
        let p: Vec<usize> = idx.iter().map(|&i| preds[i]).collect();
        let w: Vec<f64> = idx.iter().map(|&i| raw_weights[i]).collect();
        let permuted = weighted_vote(&p, &w, 6).unwrap();
        prop_assert_eq!(permuted.predicted, base.predicted);
        for (a, b) in permuted.tally.iter().zip(&base.tally) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn vote_equal_weights_is_plurality(preds in prop::collection::vec(0usize..5, 16)) {
        let v = weighted_vote(&preds, &[1.0; 16], 5).unwrap();
        let mut counts = [0usize; 5];
        for &p in &preds {
            counts[p] += 1;
        }
        let mut best = 0;
        for c in 0..5 {
            if counts[c] > counts[best] {
                best = c;
            }
        }
        prop_assert_eq!(v.predicted, best);
    }

    #[test]
    fn split_partitions_every_class(
        sizes in prop::collection::vec(2usize..40, 1..6),
        fraction in 0.05f64..0.95,
        seed in 0u64..1000,
    ) {
        let mut images = Vec::new();
        let mut labels = Vec::new();
        for (class, &count) in sizes.iter().enumerate() {
            for i in 0..count {
                images.push(Image::constant(2, 2, (class * 1000 + i) as f64));
                labels.push(class);
            }
        }
        let ds = LabeledDataset {
            images,
            labels,
            n_classes: sizes.len(),
            class_names: None,
        };
        let spec = SplitSpec { train_fraction: fraction, seed, stratified: true };
        let (train, test) = split_holdout(&ds, &spec).unwrap();
        prop_assert_eq!(train.len() + test.len(), ds.len());
        for (class, &count) in sizes.iter().enumerate() {
            let in_train = train.labels.iter().filter(|&&l| l == class).count();
            let in_test = test.labels.iter().filter(|&&l| l == class).count();
            prop_assert_eq!(in_train + in_test, count);
            prop_assert!(in_train >= 1 && in_test >= 1);
            // Stratification: within one sample of the rounded target.
            let target = (fraction * count as f64).round() as i64;
            prop_assert!((in_train as i64 - target).abs() <= 1);
        }
        // Disjointness via the unique constant pixels.
        let mut seen: Vec<u64> = train
            .images
            .iter()
            .chain(test.images.iter())
            .map(|img| img.pixels()[0] as u64)
            .collect();
        let total = seen.len();
        seen.sort_unstable();
        seen.dedup();
        prop_assert_eq!(seen.len(), total);
    }

    #[test]
    fn bernoulli_sampling_respects_probabilities(
        probs in prop::collection::vec(0.0f64..=1.0, 1..20),
        seed in 0u64..1000,
    ) {
        let mut r = rng::seeded(seed);
        let out = sample_bernoulli(&probs, &mut r).unwrap();
        for (x, p) in out.iter().zip(&probs) {
            prop_assert!(*x == 0.0 || *x == 1.0);
            if *p == 0.0 {
                prop_assert_eq!(*x, 0.0);
            }
            if *p == 1.0 {
                prop_assert_eq!(*x, 1.0);
            }
        }
    }

    #[test]
    fn rbm_conditionals_are_probabilities(seed in 0u64..300) {
        let mut r = rng::seeded(seed);
        let mut rbm = Rbm::new(5, 4, VisibleKind::BernoulliReal, seed).unwrap();
        for w in &mut rbm.weights {
            *w = 2.0 * rng::standard_normal(&mut r);
        }
        let v: Vec<f64> = (0..5).map(|_| rng::uniform(&mut r)).collect();
        for p in rbm.prob_h_given_v(&v).unwrap() {
            prop_assert!(p > 0.0 && p < 1.0);
        }
    }

    /// The config parser must reject or accept arbitrary input without
    /// panicking, and whatever it accepts must be gated by validate().
    #[test]
    fn config_parser_never_panics(text in "\\PC{0,400}") {
        match RunConfig::parse_str(&text) {
            Ok(cfg) => {
                let _ = cfg.validate();
            }
            Err(e) => {
                let _ = e.to_string();
            }
        }
    }

    #[test]
    fn config_parser_handles_linewise_junk(
        lines in prop::collection::vec(
            prop_oneof![
                Just("[run]".to_string()),
                Just("[dataset]".to_string()),
                Just("seed = 1".to_string()),
                Just("kind = coil20".to_string()),
                "\\w{1,12} = [-0-9a-z.]{0,8}",
                "[\\[\\]=# ]{0,10}",
            ],
            0..12,
        )
    ) {
        let text = lines.join("\n");
        match RunConfig::parse_str(&text) {
            Ok(cfg) => {
                let _ = cfg.validate();
            }
            Err(e) => {
                let _ = e.to_string();
            }
        }
    }
}
