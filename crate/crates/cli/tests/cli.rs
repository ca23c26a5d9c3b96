use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use privspi_cli::imageio::{load_image, load_raster, save_image};
use privspi_core::phantom::Phantom;
use privspi_core::Image;

fn privspi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_privspi"))
        .args(args)
        .env("PRIVSPI_WORKERS", "1")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn phantom_files(dir: &Path, seed: u64) -> PathBuf {
    let out = privspi(&[
        "phantom",
        "--out",
        dir.to_str().unwrap(),
        "--seed",
        &seed.to_string(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    dir.join(format!("phantom_{seed:03}.png"))
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn save_load_round_trip_within_quantization() {
    let dir = tempfile::tempdir().unwrap();
    for (channels, ext) in [(1, "png"), (3, "png"), (1, "pgm"), (3, "ppm")] {
        let ph = Phantom::generate(32, channels, 4);
        let noisy: Vec<f64> = ph
            .image
            .data()
            .iter()
            .enumerate()
            .map(|(k, v)| (v + 0.001 * (k % 7) as f64).min(1.0))
            .collect();
        let img = Image::new(32, channels, noisy).unwrap();
        let path = dir.path().join(format!("x{channels}.{ext}"));
        save_image(&img, &path).unwrap();
        let back = load_image(&path, channels).unwrap();
        let worst = img
            .data()
            .iter()
            .zip(back.data())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 1.0 / 255.0, "{ext}/{channels}: {worst}");
    }
}

#[test]
fn rgb_file_in_mono_mode_uses_luma_weights() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rgb.png");
    // Pure red, green and blue pixels plus white.
    let data = [
        vec![1.0, 0.0, 0.0, 1.0],
        vec![0.0, 1.0, 0.0, 1.0],
        vec![0.0, 0.0, 1.0, 1.0],
    ]
    .concat();
    save_image(&Image::new(2, 3, data).unwrap(), &path).unwrap();
    assert_eq!(load_raster(&path).unwrap().channels, 3);
    let mono = load_image(&path, 1).unwrap();
    let want = [0.299, 0.587, 0.114, 1.0];
    for (got, want) in mono.data().iter().zip(want) {
        assert!((got - want).abs() < 1e-6, "{got} vs {want}");
    }
}

#[test]
fn missing_image_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = privspi(&[
        "run",
        "--image",
        "/nonexistent/scene.png",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn missing_boxes_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let image = phantom_files(dir.path(), 1);
    std::fs::remove_file(image.with_extension("boxes")).unwrap();
    let out = privspi(&[
        "run",
        "--image",
        image.to_str().unwrap(),
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3);
}

#[test]
fn bad_configuration_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let image = phantom_files(dir.path(), 1);
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "sampling_rate = 0.5\n").unwrap();
    let o = dir.path().join("o");
    let args = ["run", "--image", image.to_str().unwrap(), "--out", o.to_str().unwrap()];

    let out = privspi(&[&args[..], &["--config", cfg.to_str().unwrap()]].concat());
    assert_eq!(code(&out), 2);
    let out = privspi(&[&args[..], &["--rate", "1.5"]].concat());
    assert_eq!(code(&out), 2);
    let out = privspi(&[&args[..], &["--sweep-k", "1.0"]].concat());
    assert_eq!(code(&out), 2);
    let out = privspi(&[&args[..], &["--methods", "magic"]].concat());
    assert_eq!(code(&out), 2);
}

#[test]
fn original_and_defocus_rows() {
    let dir = tempfile::tempdir().unwrap();
    let image = phantom_files(dir.path(), 2);
    let o = dir.path().join("o");
    let out = privspi(&[
        "run",
        "--image",
        image.to_str().unwrap(),
        "--methods",
        "original,defocus",
        "--out",
        o.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(o.join("report.json")).unwrap()).unwrap();
    let rows = report["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0]["method"], "original");
    assert_eq!(rows[0]["psnr_outside_db"], "inf");
    assert_eq!(rows[1]["method"], "defocus");
    let defocus: f64 = rows[1]["psnr_outside_db"].as_str().unwrap().parse().unwrap();
    assert!(defocus.is_finite() && defocus < 40.0);
    let csv = std::fs::read_to_string(o.join("report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(o.join("phantom_002/defocus/final.png").exists());
}

#[test]
fn k_sweep_records_feedback_counts() {
    let dir = tempfile::tempdir().unwrap();
    let image = phantom_files(dir.path(), 3);
    // 32x32 blocks at rate 0.5 give 512 acquisitions per block.
    let cfg = dir.path().join("sweep.toml");
    std::fs::write(&cfg, "block = 32\nmax_iterations = 5\nprovisional_max_iterations = 2\n").unwrap();
    let o = dir.path().join("o");
    let out = privspi(&[
        "run",
        "--image",
        image.to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
        "--methods",
        "ours-passthrough",
        "--sweep-k",
        "1.5,2,4,8,16",
        "--out",
        o.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(&o);
    let cells = m["cells"].as_array().unwrap();
    let counts: Vec<u64> = cells.iter().map(|c| c["capture"]["n_f"].as_u64().unwrap()).collect();
    assert_eq!(counts, vec![16, 9, 5, 3, 3]);
    let ks: Vec<f64> = cells.iter().map(|c| c["point"]["feedback_base"].as_f64().unwrap()).collect();
    assert_eq!(ks, vec![1.5, 2.0, 4.0, 8.0, 16.0]);
    for c in cells {
        assert_eq!(c["capture"]["acquisitions"], 512);
    }
    let k4 = &cells[2]["capture"]["schedule"];
    assert_eq!(k4, &serde_json::json!([1, 4, 16, 64, 256]));
}

#[test]
fn rerun_gives_identical_bundles_and_replays() {
    let dir = tempfile::tempdir().unwrap();
    let image = phantom_files(dir.path(), 5);
    let run = |name: &str| {
        let o = dir.path().join(name);
        let out = privspi(&[
            "run",
            "--image",
            image.to_str().unwrap(),
            "--methods",
            "ours-oracle,ours-silhouette",
            "--seed",
            "11",
            "--out",
            o.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        o
    };
    let (a, b) = (run("a"), run("b"));
    for method in ["ours-oracle", "ours-silhouette"] {
        let rel = format!("phantom_005/k4_r0.5/{method}/bundle.spb");
        let (x, y) = (std::fs::read(a.join(&rel)).unwrap(), std::fs::read(b.join(&rel)).unwrap());
        assert_eq!(x, y, "{method}");
    }
    assert_eq!(manifest(&a)["seed"], 11);

    let bundle = a.join("phantom_005/k4_r0.5/ours-oracle/bundle.spb");
    let input = a.join("phantom_005/input.png");
    let out = privspi(&["replay", "--bundle", bundle.to_str().unwrap(), "--image", input.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    // Replaying against a different scene fails.
    let other = phantom_files(dir.path(), 6);
    let out = privspi(&["replay", "--bundle", bundle.to_str().unwrap(), "--image", other.to_str().unwrap()]);
    assert_eq!(code(&out), 1);

    let attack = dir.path().join("attack.png");
    let out = privspi(&["attack", "--bundle", bundle.to_str().unwrap(), "--out", attack.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let from_cli = load_image(&attack, 1).unwrap();
    let from_run = load_image(&a.join("phantom_005/k4_r0.5/ours-oracle/attack.png"), 1).unwrap();
    assert_eq!(from_cli, from_run);
}

#[test]
fn damaged_bundle_exits_5() {
    let dir = tempfile::tempdir().unwrap();
    let image = phantom_files(dir.path(), 7);
    let o = dir.path().join("o");
    let out = privspi(&[
        "run",
        "--image",
        image.to_str().unwrap(),
        "--methods",
        "ours-passthrough",
        "--out",
        o.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let bundle = o.join("phantom_007/k4_r0.5/ours-passthrough/bundle.spb");
    let mut bytes = std::fs::read(&bundle).unwrap();
    let n = bytes.len();
    bytes[n / 2] ^= 0x40;
    let bad = dir.path().join("bad.spb");
    std::fs::write(&bad, &bytes).unwrap();
    assert_eq!(code(&privspi(&["inspect", "--bundle", bad.to_str().unwrap()])), 5);
    std::fs::write(&bad, &bytes[..n / 3]).unwrap();
    assert_eq!(code(&privspi(&["inspect", "--bundle", bad.to_str().unwrap()])), 5);
    assert_eq!(code(&privspi(&["inspect", "--bundle", "/nonexistent.spb"])), 3);
    let good = privspi(&["inspect", "--bundle", bundle.to_str().unwrap()]);
    assert_eq!(code(&good), 0);
    let summary: serde_json::Value = serde_json::from_slice(&good.stdout).unwrap();
    assert_eq!(summary["records"], 32 * 64);
}

#[test]
fn strict_flags_non_convergence() {
    let dir = tempfile::tempdir().unwrap();
    let image = phantom_files(dir.path(), 8);
    let cfg = dir.path().join("short.toml");
    std::fs::write(&cfg, "max_iterations = 2\n").unwrap();
    let o = dir.path().join("o");
    let args = [
        "run",
        "--image",
        image.to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
        "--methods",
        "ours-passthrough",
        "--out",
        o.to_str().unwrap(),
    ];
    assert_eq!(code(&privspi(&args)), 0);
    assert_eq!(code(&privspi(&[&args[..], &["--strict"]].concat())), 4);
    // Artifacts are still written.
    assert!(o.join("manifest.json").exists());
}

#[test]
fn large_images_are_fitted_to_the_grid() {
    let dir = tempfile::tempdir().unwrap();
    let ph = Phantom::generate(128, 3, 9);
    let path = dir.path().join("big.png");
    save_image(&ph.image, &path).unwrap();
    std::fs::write(dir.path().join("big.boxes"), privspi_core::domain::format_boxes(&ph.boxes)).unwrap();
    let o = dir.path().join("o");
    let out = privspi(&[
        "run",
        "--image",
        path.to_str().unwrap(),
        "--methods",
        "original",
        "--out",
        o.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let input = load_image(&o.join("big/input.png"), 1).unwrap();
    assert_eq!(input.side(), 64);
    let b = &ph.boxes[0];
    let text = std::fs::read_to_string(o.join("big/input.boxes")).unwrap();
    assert_eq!(text.trim(), format!("face {} {} {} {}", b.x0 / 2, b.y0 / 2, b.x1.div_ceil(2), b.y1.div_ceil(2)));
}

#[test]
fn bad_worker_count_is_a_config_error() {
    let out = Command::new(env!("CARGO_BIN_EXE_privspi"))
        .args(["inspect", "--bundle", "/nonexistent.spb"])
        .env("PRIVSPI_WORKERS", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
}
