mod common;

use common::*;
use privspi_core::capture::{capture, capture_with, replay_attack};
use privspi_core::maskgen::{JitterSchedule, OracleMask, OracleMaskParams};
use privspi_core::measurement::MeasurementBundle;
use privspi_core::metrics::{psnr_masked, region_mse};
use privspi_core::phantom::Phantom;
use privspi_core::{BoundingBox, CaptureConfig, ChannelMode, Image, MaskKind, PatternMode};

fn hard_oracle(seed: u64) -> CaptureConfig {
    CaptureConfig {
        mask: MaskKind::Oracle,
        mask_dilation: 0.0,
        mask_softness: 0.0,
        mask_jitter: 0.0,
        seed,
        ..CaptureConfig::default()
    }
}

#[test]
fn full_rate_passthrough_is_exact() {
    let x = random_image(64, 1, 1);
    let cfg = CaptureConfig {
        rate: 1.0,
        lambda: 0.0,
        seed: 1,
        ..CaptureConfig::default()
    };
    let trace = capture(&x, &[], &cfg).unwrap();
    assert!(max_abs_diff(trace.final_image().data(), x.data()) < 1e-6);
    assert_eq!(trace.bundle.records().len(), 64 * 64);
}

#[test]
fn hard_oracle_measurements_ignore_the_region() {
    let ph = Phantom::generate(64, 1, 5);
    let cfg = hard_oracle(5);
    let a = capture(&ph.image, &ph.boxes, &cfg).unwrap();

    let mut other = ph.image.clone();
    for b in &ph.boxes {
        for r in b.y0..b.y1 {
            for c in b.x0..b.x1 {
                other.set(0, r, c, 1.0 - ph.image.get(0, r, c));
            }
        }
    }
    let b = capture(&other, &ph.boxes, &cfg).unwrap();
    let nb = cfg.grid().unwrap().num_blocks();
    for i in 2..=a.bundle.acquisitions() {
        for j in 0..nb {
            assert_eq!(
                a.bundle.measurement(i, j, 0).to_bits(),
                b.bundle.measurement(i, j, 0).to_bits(),
                "acquisition {i} block {j}"
            );
        }
    }
    // Before the first feedback round the region is still sampled.
    let differs = (0..nb).any(|j| a.bundle.measurement(1, j, 0) != b.bundle.measurement(1, j, 0));
    assert!(differs);
}

#[test]
fn snapshots_follow_schedule() {
    let ph = Phantom::generate(64, 1, 3);
    for base in [1.5, 2.0, 4.0, 16.0] {
        let cfg = CaptureConfig {
            feedback_base: base,
            max_iterations: 20,
            provisional_max_iterations: 10,
            ..hard_oracle(3)
        };
        let trace = capture(&ph.image, &ph.boxes, &cfg).unwrap();
        let got: Vec<usize> = trace.snapshots.iter().map(|s| s.acquisition).collect();
        assert_eq!(got, trace.schedule.indices());
        let events: Vec<usize> = trace.bundle.events().iter().map(|e| e.acquisition).collect();
        assert_eq!(events, got);
        assert_eq!(trace.bundle.records().len(), 32 * 64);
    }
}

#[test]
fn paper_scale_structure() {
    let ph = Phantom::generate(256, 3, 0);
    let cfg = CaptureConfig {
        max_iterations: 3,
        provisional_max_iterations: 3,
        mask: MaskKind::Oracle,
        ..CaptureConfig::paper()
    };
    let trace = capture(&ph.image, &ph.boxes, &cfg).unwrap();
    let got: Vec<usize> = trace.snapshots.iter().map(|s| s.acquisition).collect();
    assert_eq!(got, vec![1, 4, 16, 64, 256]);
    assert_eq!(trace.schedule.rounds(), 5);
    assert_eq!(trace.bundle.records().len(), 512 * 64 * 3);
    assert_eq!(trace.final_image().side(), 256);
    assert_eq!(trace.final_image().channels(), 3);
}

#[test]
fn replay_attack_sees_only_what_was_sampled() {
    let ph = Phantom::generate(64, 1, 7);
    let open = capture(&ph.image, &ph.boxes, &CaptureConfig { seed: 7, ..CaptureConfig::default() }).unwrap();
    let masked = capture(&ph.image, &ph.boxes, &hard_oracle(7)).unwrap();
    let params = CaptureConfig::default().admm_params();

    let open_attack = replay_attack(&open.bundle, &params).unwrap();
    let masked_attack = replay_attack(&masked.bundle, &params).unwrap();
    // The attacker reproduces what the device itself reconstructed.
    assert!(max_abs_diff(open_attack.image.data(), open.final_image().data()) < 1e-9);
    assert!(psnr_masked(&ph.image, &open_attack.image, &[]).unwrap().db() > 30.0);

    let open_mse = region_mse(&ph.image, &open_attack.image, &ph.boxes).unwrap();
    let masked_mse = region_mse(&ph.image, &masked_attack.image, &ph.boxes).unwrap();
    assert!(masked_mse >= 10.0 * open_mse, "{masked_mse} vs {open_mse}");
}

#[test]
fn single_acquisition_capture() {
    let ph = Phantom::generate(16, 1, 2);
    let cfg = CaptureConfig {
        side: 16,
        block: 4,
        rate: 1.0 / 16.0,
        ..hard_oracle(2)
    };
    let trace = capture(&ph.image, &[], &cfg).unwrap();
    assert_eq!(trace.bundle.acquisitions(), 1);
    assert!(trace.snapshots.is_empty());
    let attack = replay_attack(&trace.bundle, &cfg.admm_params()).unwrap();
    assert!(attack.image.data().iter().all(|v| v.is_finite()));
}

#[test]
fn capture_is_deterministic() {
    let ph = Phantom::generate(64, 3, 4);
    let cfg = CaptureConfig {
        channel_mode: ChannelMode::Rgb,
        mask: MaskKind::Oracle,
        noise_std: 0.01,
        seed: 4,
        max_iterations: 30,
        ..CaptureConfig::default()
    };
    let a = capture(&ph.image, &ph.boxes, &cfg).unwrap();
    let b = capture(&ph.image, &ph.boxes, &cfg).unwrap();
    assert_eq!(a.bundle.to_bytes(), b.bundle.to_bytes());
    assert_eq!(a.final_image(), b.final_image());
    let c = capture(&ph.image, &ph.boxes, &CaptureConfig { seed: 5, ..cfg }).unwrap();
    assert_ne!(a.bundle.to_bytes(), c.bundle.to_bytes());
}

#[test]
fn noisy_binary_rgb_bundle_replays() {
    let ph = Phantom::generate(32, 3, 9);
    let cfg = CaptureConfig {
        side: 32,
        channel_mode: ChannelMode::Rgb,
        pattern_mode: PatternMode::Binary,
        mask: MaskKind::Oracle,
        noise_std: 0.02,
        seed: 9,
        max_iterations: 30,
        ..CaptureConfig::default()
    };
    let trace = capture(&ph.image, &ph.boxes, &cfg).unwrap();
    let report = trace.bundle.replay(&ph.image).unwrap();
    assert!(report.schedule_matches);
    assert_eq!(report.records, trace.bundle.records().len());
    assert!(report.max_abs_error < 1e-12, "{}", report.max_abs_error);

    // A different scene does not replay.
    let other = Image::filled(32, 3, 0.5).unwrap();
    assert!(trace.bundle.replay(&other).unwrap().max_abs_error > 1e-3);
}

#[test]
fn silhouette_capture_runs() {
    let ph = Phantom::generate(64, 1, 11);
    let cfg = CaptureConfig {
        mask: MaskKind::Silhouette,
        seed: 11,
        ..CaptureConfig::default()
    };
    let trace = capture(&ph.image, &ph.boxes, &cfg).unwrap();
    assert_eq!(trace.snapshots.len(), trace.schedule.indices().len());
    for s in &trace.snapshots {
        assert!(s.weight.values().iter().all(|w| (0.0..=1.0).contains(w)));
    }
    assert!(trace.final_image().data().iter().all(|v| v.is_finite()));
}

#[test]
fn explicit_generator_matches_config() {
    let ph = Phantom::generate(64, 1, 13);
    let cfg = hard_oracle(13);
    let mask = OracleMask::new(OracleMaskParams {
        boxes: ph.boxes.clone(),
        dilation: 0.0,
        softness: 0.0,
        jitter: JitterSchedule::none(),
    })
    .unwrap();
    let a = capture(&ph.image, &ph.boxes, &cfg).unwrap();
    let b = capture_with(&ph.image, &mask, &cfg).unwrap();
    assert_eq!(a.bundle.to_bytes(), b.bundle.to_bytes());
}

#[test]
fn bundle_file_round_trip() {
    let ph = Phantom::generate(32, 1, 14);
    let cfg = CaptureConfig {
        side: 32,
        ..hard_oracle(14)
    };
    let trace = capture(&ph.image, &ph.boxes, &cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("capture.spb");
    trace.bundle.write_to(std::fs::File::create(&path).unwrap()).unwrap();
    let back = MeasurementBundle::read_from(std::fs::File::open(&path).unwrap()).unwrap();
    assert_eq!(back.to_bytes(), trace.bundle.to_bytes());
    assert_eq!(back.config(), trace.bundle.config());

    let mut bytes = std::fs::read(&path).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 1;
    assert!(MeasurementBundle::from_bytes(&bytes).is_err());
    assert!(MeasurementBundle::from_bytes(&bytes[..mid]).is_err());
}

#[test]
fn mismatched_scene_is_rejected() {
    let cfg = CaptureConfig::default();
    let x = Image::filled(32, 1, 0.5).unwrap();
    assert!(capture(&x, &[], &cfg).is_err());
    let boxes = [BoundingBox::new("far", 60, 60, 80, 80).unwrap()];
    let x = Image::filled(64, 1, 0.5).unwrap();
    assert!(capture(&x, &boxes, &hard_oracle(0)).is_err());
}
