use levy_attack::data::{make_synthetic_blobs, DataError};
use levy_attack::oracle::{
    decode_model, encode_model, save_model, train_toy_classifier, Activation, Layer, TrainConfig,
};
use levy_attack::{
    load_model, Bounds, Dataset, Label, Network, Oracle, OracleError, PixelScale, Point, RngSeed,
};
use rand::Rng;

fn blobs(seed: u64) -> Dataset {
    make_synthetic_blobs(3, 20, 100, 6.0, &mut RngSeed(seed).rng()).unwrap()
}

fn unit() -> Bounds<f64> {
    Bounds::new(0.0, 1.0).unwrap()
}

#[test]
fn hand_computed_relu_network() {
    // h = relu([[1, -1], [2, 0.5]] x + [0, -1]); s = [[1, 0], [-1, 1]] h + [0.5, 0]
    let net = Network::new(vec![
        Layer::new(
            2,
            2,
            vec![1.0, -1.0, 2.0, 0.5],
            vec![0.0, -1.0],
            Activation::Relu,
        )
        .unwrap(),
        Layer::new(
            2,
            2,
            vec![1.0, 0.0, -1.0, 1.0],
            vec![0.5, 0.0],
            Activation::Identity,
        )
        .unwrap(),
    ])
    .unwrap();
    // x = (1, 3): h = relu(-2, 2.5) = (0, 2.5); s = (0.5, 2.5)
    assert_eq!(net.scores(&[1.0, 3.0]), vec![0.5, 2.5]);
    // x = (3, 1): h = relu(2, 5.5) = (2, 5.5); s = (2.5, 3.5)
    assert_eq!(net.scores(&[3.0, 1.0]), vec![2.5, 3.5]);
    let mut o = Oracle::new(net, Bounds::new(-10.0, 10.0).unwrap());
    assert_eq!(o.predict(&[1.0, 3.0]).unwrap(), Label(1));
    // x = (0, 0): s = (0.5, 0) -> class 0
    assert_eq!(o.predict(&[0.0, 0.0]).unwrap(), Label(0));
    assert_eq!(o.query_count(), 2);
}

#[test]
fn trained_model_separates_blobs() {
    let data = blobs(3);
    let trained =
        train_toy_classifier(&data, &TrainConfig::default(), &mut RngSeed(0).rng()).unwrap();
    assert!(
        trained.train_accuracy >= 0.99,
        "accuracy {}",
        trained.train_accuracy
    );
    let test = blobs(4);
    let mut o = trained.into_oracle(unit());
    let correct = test
        .points
        .iter()
        .zip(&test.labels)
        .filter(|(p, &l)| o.predict(p).unwrap() == l)
        .count();
    assert!(correct as f64 / test.len() as f64 >= 0.99);
}

#[test]
fn softmax_regression_variant_trains() {
    let data = blobs(5);
    let cfg = TrainConfig {
        hidden: None,
        ..TrainConfig::default()
    };
    let trained = train_toy_classifier(&data, &cfg, &mut RngSeed(1).rng()).unwrap();
    assert_eq!(trained.network.layers().len(), 1);
    assert!(trained.train_accuracy >= 0.99);
}

#[test]
fn training_is_deterministic() {
    let data = blobs(6);
    let a = train_toy_classifier(&data, &TrainConfig::default(), &mut RngSeed(9).rng()).unwrap();
    let b = train_toy_classifier(&data, &TrainConfig::default(), &mut RngSeed(9).rng()).unwrap();
    assert_eq!(encode_model(&a.network), encode_model(&b.network));
}

#[test]
fn single_class_data_is_rejected() {
    let data = blobs(7);
    let zeros: Vec<usize> = (0..data.len())
        .filter(|&i| data.labels[i] == Label(0))
        .collect();
    let one_class = data.subset(&zeros);
    let err = train_toy_classifier(&one_class, &TrainConfig::default(), &mut RngSeed(0).rng())
        .unwrap_err();
    assert!(matches!(err, OracleError::DegenerateLabels));
}

#[test]
fn saved_model_predicts_identically() {
    let data = blobs(8);
    let trained =
        train_toy_classifier(&data, &TrainConfig::default(), &mut RngSeed(2).rng()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.bin");
    save_model(&trained.network, &path).unwrap();
    let mut reloaded = load_model(&path, unit()).unwrap();
    let decoded: Network<f64> = decode_model(&std::fs::read(&path).unwrap()).unwrap();
    assert_eq!(decoded, trained.network);

    let mut original = trained.into_oracle(unit());
    let mut rng = RngSeed(11).rng();
    for _ in 0..100 {
        let p: Vec<f64> = (0..data.dim())
            .map(|_| rng.random_range(0.0..1.0))
            .collect();
        assert_eq!(original.predict(&p).unwrap(), reloaded.predict(&p).unwrap());
    }
    assert_eq!(reloaded.query_count(), 100);
}

#[test]
fn f32_cast_agrees_on_clear_inputs() {
    let data = blobs(10);
    let trained =
        train_toy_classifier(&data, &TrainConfig::default(), &mut RngSeed(3).rng()).unwrap();
    let mut wide = Oracle::new(trained.network.clone(), unit());
    let mut narrow = Oracle::new(
        trained.network.cast::<f32>(),
        Bounds::new(0.0f32, 1.0).unwrap(),
    );
    for p in data.points.iter().take(50) {
        let q: Vec<f32> = p.iter().map(|&v| v as f32).collect();
        assert_eq!(wide.predict(p).unwrap(), narrow.predict(&q).unwrap());
    }
}

#[test]
fn idx_files_round_trip_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let (img, lab) = (dir.path().join("img.idx"), dir.path().join("lab.idx"));
    let points = vec![
        Point::from_f64_slice(&[0.0, 1.0, 2.0, 255.0, 128.0, 7.0]),
        Point::from_f64_slice(&[9.0, 8.0, 7.0, 6.0, 5.0, 4.0]),
        Point::from_f64_slice(&[255.0; 6]),
    ];
    let ds = Dataset::new(
        points,
        vec![Label(2), Label(0), Label(1)],
        PixelScale::Raw.bounds(),
        3,
    )
    .unwrap();
    ds.write_idx(&img, &lab, 2, 3, PixelScale::Raw).unwrap();
    let back = Dataset::load_idx(&img, &lab, PixelScale::Raw, 3).unwrap();
    assert_eq!(back.points, ds.points);
    assert_eq!(back.labels, ds.labels);

    let unit_scaled = Dataset::load_idx(&img, &lab, PixelScale::Unit, 3).unwrap();
    assert_eq!(unit_scaled.points[0][3], 1.0);
    assert_eq!(unit_scaled.points[0][4], 128.0 / 255.0);

    // Labels past num_classes are typed errors.
    assert!(matches!(
        Dataset::load_idx(&img, &lab, PixelScale::Raw, 2),
        Err(DataError::InvalidLabel { .. })
    ));
    assert!(matches!(
        Dataset::load_idx(dir.path().join("missing"), &lab, PixelScale::Raw, 3),
        Err(DataError::Io { .. })
    ));
}

#[test]
fn oracle_rejects_bad_queries_without_counting() {
    let data = blobs(12);
    let trained =
        train_toy_classifier(&data, &TrainConfig::default(), &mut RngSeed(0).rng()).unwrap();
    let mut o = trained.into_oracle(unit());
    assert!(matches!(
        o.predict(&[0.5; 3]),
        Err(OracleError::DimensionMismatch { .. })
    ));
    let mut outside = vec![0.5; data.dim()];
    outside[4] = 1.5;
    assert!(matches!(
        o.predict(&outside),
        Err(OracleError::OutOfBounds { index: 4, .. })
    ));
    assert_eq!(o.query_count(), 0);
    let fork = o.fork();
    o.predict(&data.points[0]).unwrap();
    assert_eq!((o.query_count(), fork.query_count()), (1, 0));
}
