use super::*;
use crate::imagecore::{generate_phantom, LabelMask, PhantomSpec, Slice};
use crate::neural::Matrix;
use crate::superpixel::SuperpixelLabeling;

fn phantom(size: usize, seed: u64) -> (Slice, LabelMask) {
    generate_phantom(&PhantomSpec {
        size,
        seed,
        ..Default::default()
    })
    .unwrap()
}

fn tiny_model(seed: u64) -> GnnSegModel {
    GnnSegModel::new(GnnSegConfig::tiny(2), seed).unwrap()
}

#[test]
fn parameter_counts() {
    let model = GnnSegModel::new(GnnSegConfig::with_modalities(3), 0).unwrap();
    let c = model.count_parameters();
    // Streams 2180 + 2160, stream self interactions 2 x 10100, attention
    // layers 3500 + 25100, graph self interaction 110, mutual 4210, final 36301.
    assert_eq!(c.structural, 93_761);
    // 36 -> 64 -> 32 -> 4.
    assert_eq!(c.classifier, 4_580);
    assert_eq!(c.total, c.structural + c.classifier);
    assert!((50_000..=200_000).contains(&c.structural));
}

#[test]
fn zero_network_outputs_zero() {
    let mut model = tiny_model(1);
    model.store.zero_all();
    let (slice, mask) = phantom(32, 0);
    let prep = PreparedSlice::new(&slice, Some(&mask), &model.config).unwrap();
    let out = model.structural_forward(&prep).unwrap();
    assert_eq!(out.len(), prep.graph.n);
    assert!(out.iter().all(|&v| v == 0.0));
    // Uniform logits everywhere: every pixel goes to class 0.
    let inf = model.infer(&prep).unwrap();
    assert!(inf.mask.labels().iter().all(|&l| l == 0));
}

#[test]
fn single_node_graph() {
    let mut config = GnnSegConfig::tiny(2);
    config.superpixel.target_regions = 1;
    let model = GnnSegModel::new(config, 2).unwrap();
    let (slice, _) = phantom(16, 0);
    let prep = PreparedSlice::new(&slice, None, &model.config).unwrap();
    let out = model.structural_forward(&prep).unwrap();
    assert_eq!(out.len(), 1);
    assert!(out[0].is_finite());
}

#[test]
fn reconstruct_fixtures() {
    let one = SuperpixelLabeling::from_region_map(3, 2, vec![0; 6]).unwrap();
    assert_eq!(reconstruct_slice(&one, &[2.5]).unwrap(), vec![2.5; 6]);
    let map: Vec<usize> = (0..16).map(|p| ((p / 4) / 2) * 2 + (p % 4) / 2).collect();
    let blocks = SuperpixelLabeling::from_region_map(4, 4, map.clone()).unwrap();
    let img = reconstruct_slice(&blocks, &[1.0, 2.0, 3.0, 4.0]).unwrap();
    for p in 0..16 {
        assert_eq!(img[p], (map[p] + 1) as f64);
    }
    assert!(reconstruct_slice(&blocks, &[1.0]).is_err());
}

#[test]
fn zero_classifier_picks_class_zero() {
    let mut model = tiny_model(3);
    model.store.zero_all();
    for h in [5usize, 9, 16] {
        let (slice, _) = phantom(h, 1);
        let mask = model.classify_pixels(&slice, &vec![0.3; h * h]).unwrap();
        assert_eq!((mask.width(), mask.height()), (h, h));
        assert!(mask.labels().iter().all(|&l| l == 0));
    }
}

/// Hand-set weights: the first hidden unit reads the centre value of the
/// feature channel minus 0.5; later layers pass it through, and only the
/// CSF logit depends on it. ELU keeps the sign, so class 1 is chosen
/// exactly where the scaled feature exceeds 0.5 and class 0 elsewhere.
#[test]
fn threshold_classifier() {
    let mut model = tiny_model(4);
    model.store.zero_all();
    let m = 2;
    let centre = 4 * (m + 1) + m;
    let layers = model.classifier.layers.clone();
    model.store.get_mut(layers[0].weight).set(centre, 0, 1.0);
    model.store.get_mut(layers[0].bias).set(0, 0, -0.5);
    model.store.get_mut(layers[1].weight).set(0, 0, 1.0);
    let last = layers.len() - 1;
    model.store.get_mut(layers[last].weight).set(0, 1, 1.0);
    model.store.get_mut(layers[last].bias).set(0, 2, -10.0);
    model.store.get_mut(layers[last].bias).set(0, 3, -10.0);

    let (slice, _) = phantom(12, 2);
    let feature: Vec<f64> = (0..144).map(|p| ((p * 37) % 144) as f64 / 143.0).collect();
    let mask = model.classify_pixels(&slice, &feature).unwrap();
    for (p, &f) in feature.iter().enumerate() {
        assert_eq!(mask.labels()[p], u8::from(f > 0.5), "pixel {p}");
    }
}

#[test]
fn argmax_ties_go_low() {
    let logits = Matrix::from_rows(&[vec![1.0, 1.0, 0.0, 1.0], vec![0.0, 2.0, 2.0, 1.0]]).unwrap();
    assert_eq!(labels_from_logits(&logits, 2, 1).unwrap().labels(), &[0, 1]);
}

#[test]
fn training_rules() {
    let mut model = tiny_model(5);
    let (slice, mask) = phantom(16, 0);
    let prep = PreparedSlice::new(&slice, Some(&mask), &model.config).unwrap();
    let cfg = TrainConfig { epochs: 0, ..Default::default() };
    assert!(train(&mut model, &[prep.clone()], &cfg, |_, _| Control::Continue).is_err());
    let unlabeled = PreparedSlice::new(&slice, None, &model.config).unwrap();
    let cfg = TrainConfig { epochs: 1, ..Default::default() };
    assert!(train(&mut model, &[unlabeled], &cfg, |_, _| Control::Continue).is_err());

    // A zero learning rate leaves every parameter untouched.
    let before = model.store.clone();
    let mut cfg = TrainConfig { epochs: 2, ..Default::default() };
    cfg.adam.lr = 0.0;
    train(&mut model, &[prep], &cfg, |_, _| Control::Continue).unwrap();
    assert_eq!(model.store, before);
}

#[test]
fn overfits_one_sample_deterministically() {
    let (slice, mask) = phantom(16, 0);
    let run = || {
        let mut model = tiny_model(6);
        let prep = PreparedSlice::new(&slice, Some(&mask), &model.config).unwrap();
        let cfg = TrainConfig { epochs: 200, seed: 9, ..Default::default() };
        let report = train(&mut model, &[prep], &cfg, |_, _| Control::Continue).unwrap();
        (report, model.to_checkpoint_bytes(0).unwrap())
    };
    let (a, ca) = run();
    let (b, cb) = run();
    assert_eq!(a.epoch_losses.len(), 200);
    assert!(a.epoch_losses.iter().all(|l| l.is_finite()));
    assert!(a.epoch_losses[199] < a.epoch_losses[0]);
    assert_eq!(a, b);
    assert_eq!(ca, cb);
}

#[test]
fn frozen_classifier_keeps_its_weights() {
    let mut config = GnnSegConfig::tiny(2);
    config.classifier.frozen = true;
    let mut model = GnnSegModel::new(config, 7).unwrap();
    let before = model.store.clone();
    let (slice, mask) = phantom(16, 0);
    let prep = PreparedSlice::new(&slice, Some(&mask), &model.config).unwrap();
    let cfg = TrainConfig { epochs: 3, ..Default::default() };
    train(&mut model, &[prep], &cfg, |_, _| Control::Continue).unwrap();
    for (e, b) in model.store.entries().iter().zip(before.entries()) {
        if e.name.starts_with(CLASSIFIER_PREFIX) {
            assert_eq!(e.value, b.value);
        }
    }
    assert_ne!(model.store, before);
}

#[test]
fn checkpoint_roundtrip_is_bit_exact() {
    let model = tiny_model(8);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.ckpt");
    model.save(&path, 42).unwrap();
    let (loaded, step) = GnnSegModel::load(&path).unwrap();
    assert_eq!(step, 42);
    assert_eq!(loaded, model);
    assert_eq!(loaded.count_parameters(), model.count_parameters());
    let (slice, _) = phantom(24, 3);
    let prep = PreparedSlice::new(&slice, None, &model.config).unwrap();
    assert_eq!(loaded.structural_forward(&prep).unwrap(), model.structural_forward(&prep).unwrap());
}

#[test]
fn superpixels_share_feature() {
    let model = tiny_model(9);
    let spec = PhantomSpec { size: 32, noise_sigma: 0.0, ..Default::default() };
    let (slice, _) = generate_phantom(&spec).unwrap();
    let prep = PreparedSlice::new(&slice, None, &model.config).unwrap();
    let inf = model.infer(&prep).unwrap();
    for r in 0..prep.labeling.region_count() {
        let vals: Vec<f64> = prep.labeling.pixels_of(r).iter().map(|&(x, y)| inf.i_prime[y * 32 + x]).collect();
        assert!(vals.iter().all(|&v| v == vals[0]));
    }
}

#[test]
fn gcn_variant_runs() {
    let mut config = GnnSegConfig::tiny(2);
    config.gnn_kind = GnnKind::Gcn;
    let model = GnnSegModel::new(config, 10).unwrap();
    let (slice, _) = phantom(16, 0);
    let prep = PreparedSlice::new(&slice, None, &model.config).unwrap();
    assert!(model.structural_forward(&prep).unwrap().iter().all(|v| v.is_finite()));
}
