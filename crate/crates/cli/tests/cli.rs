use std::path::Path;
use std::process::{Command, Output};

use levy_attack::data::make_synthetic_blobs;
use levy_attack::{Dataset, PixelScale, RngSeed};
use levy_attack_cli::dump::{decode_pgm, dequantize};
use serde_json::Value;

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_levy-attack"))
        .args(args)
        .output()
        .unwrap()
}

/// Blobs snapped to the 1/255 pixel grid so they encode as IDX bytes.
fn pixel_blobs(dim: usize, per_class: usize, separation: f64, seed: u64) -> Dataset {
    let mut d: Dataset =
        make_synthetic_blobs(2, dim, per_class, separation, &mut RngSeed(seed).rng()).unwrap();
    for p in &mut d.points {
        for v in p.iter_mut() {
            *v = (*v * 255.0).round() / 255.0;
        }
    }
    d
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn out_of_range_alpha_is_a_usage_error() {
    let o = cli(&["sweep", "--synthetic", "--alpha", "3.0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("(0, 2]"));
    assert_eq!(
        cli(&["sweep", "--synthetic", "--alpha", "0"]).status.code(),
        Some(2)
    );
}

#[test]
fn missing_inputs_are_usage_errors() {
    assert_eq!(
        cli(&["sweep", "--synthetic", "--model", "/no/such/model"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        cli(&[
            "sweep",
            "--dataset-images",
            "/no/img",
            "--dataset-labels",
            "/no/lab",
            "--model",
            "/no/m"
        ])
        .status
        .code(),
        Some(2)
    );
    assert_eq!(cli(&["sweep"]).status.code(), Some(2));
    assert_eq!(cli(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn sweep_report_shape() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let csv = dir.path().join("r.csv");
    let o = cli(&[
        "sweep",
        "--synthetic",
        "--alpha",
        "2.0",
        "--alpha",
        "0.5",
        "--samples",
        "20",
        "--out",
        path(&out),
        "--csv",
        path(&csv),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let v: Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    let rows = v["per_alpha"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    for (row, alpha) in rows.iter().zip([2.0, 0.5]) {
        assert_eq!(row["alpha"], alpha);
        assert_eq!(row["n_success"], 20);
        assert_eq!(row["n_fail"], 0);
        assert!(row["norms"]["l2"]["median"].as_f64().unwrap() > 0.0);
        assert!(row["mean_iterations"].as_f64().unwrap() <= 5000.0);
    }
    assert_eq!(v["config"]["samples"], 20);
    let table = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(table.lines().count(), 3);
    assert!(table.starts_with("alpha,linf_mean"));
}

#[test]
fn same_seed_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let go = |name: &str, seed: &str| {
        let out = dir.path().join(name);
        let o = cli(&[
            "sweep",
            "--synthetic",
            "--alpha",
            "1.5",
            "--samples",
            "6",
            "--max-steps",
            "800",
            "--seed",
            seed,
            "--out",
            path(&out),
        ]);
        assert_eq!(o.status.code(), Some(0));
        std::fs::read(out).unwrap()
    };
    let a = go("a.json", "7");
    assert_eq!(a, go("b.json", "7"));
    assert_ne!(a, go("c.json", "8"));
}

#[test]
fn validate_sampler_exit_codes() {
    let o = cli(&["validate-sampler", "--n", "10"]);
    assert_eq!(o.status.code(), Some(2));
    let o = cli(&["validate-sampler"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(text.matches("cf residuals").count(), 4);
    let o = cli(&["validate-sampler", "--alpha", "2.0", "--n", "100000"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    let ks: f64 = text
        .split("ks ")
        .nth(1)
        .unwrap()
        .split_whitespace()
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!(ks < 0.01);
}

/// Synthetic blobs written as 1x50 IDX images, trained on and attacked
/// through the file-based path.
#[test]
fn idx_train_attack_and_dump() {
    let dir = tempfile::tempdir().unwrap();
    let (img, lab, model) = (
        dir.path().join("img"),
        dir.path().join("lab"),
        dir.path().join("model.bin"),
    );
    let blobs = pixel_blobs(49, 60, 8.0, 4);
    blobs.write_idx(&img, &lab, 7, 7, PixelScale::Unit).unwrap();

    let data = [
        "--dataset-images",
        path(&img),
        "--dataset-labels",
        path(&lab),
        "--scale-01",
        "--num-classes",
        "2",
    ];
    let mut train = vec!["train"];
    train.extend(data);
    train.extend(["--out", path(&model)]);
    let o = cli(&train);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );

    // Uniform restarts push every pixel up; the all-bright corner is
    // class 0 here, so attack a class 1 point.
    let index = blobs
        .labels
        .iter()
        .position(|l| l.0 == 1)
        .unwrap()
        .to_string();
    let dump = dir.path().join("dump");
    let mut attack = vec!["attack"];
    attack.extend(data);
    attack.extend([
        "--model",
        path(&model),
        "--alpha",
        "0.5",
        "--index",
        &index,
        "--dump-dir",
        path(&dump),
    ]);
    let o = cli(&attack);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let record: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(record["success"], true, "{record}");

    let mut pgms = 0;
    for kind in ["original", "adversarial", "difference"] {
        let bytes = std::fs::read(dump.join(format!("a0.5_s{index}_{kind}.pgm"))).unwrap();
        assert!(bytes.starts_with(b"P5\n"));
        let (rows, cols, px) = decode_pgm(&bytes).unwrap();
        assert_eq!((rows, cols, px.len()), (7, 7, 49));
        pgms += 1;
    }
    assert_eq!(pgms, 3);
    let meta: Value = serde_json::from_slice(
        &std::fs::read(dump.join(format!("a0.5_s{index}_meta.json"))).unwrap(),
    )
    .unwrap();
    assert!(meta["difference_scale"].as_f64().unwrap() > 0.0);

    let raw = std::fs::read(dump.join(format!("a0.5_s{index}_adversarial.f64"))).unwrap();
    let adv: Vec<f64> = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let (_, _, px) =
        decode_pgm(&std::fs::read(dump.join(format!("a0.5_s{index}_adversarial.pgm"))).unwrap())
            .unwrap();
    let bounds = PixelScale::Unit.bounds();
    for (&v, &p) in adv.iter().zip(&px) {
        assert!((dequantize(p, &bounds) - v).abs() <= 1.0 / 255.0);
    }
}

#[test]
fn idx_without_model_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let (img, lab) = (dir.path().join("img"), dir.path().join("lab"));
    let blobs = pixel_blobs(4, 3, 4.0, 0);
    blobs.write_idx(&img, &lab, 2, 2, PixelScale::Unit).unwrap();
    let o = cli(&[
        "sweep",
        "--dataset-images",
        path(&img),
        "--dataset-labels",
        path(&lab),
        "--scale-01",
    ]);
    assert_eq!(o.status.code(), Some(2));
}
