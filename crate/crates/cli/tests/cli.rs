//! End-to-end subcommand tests driving the compiled `lunarad` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lunarad_core::dataset::{read_container, read_terrain_container, SampleProvenance};
use tempfile::TempDir;

fn lunarad() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lunarad"))
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("spawning lunarad");
    assert!(
        out.status.success(),
        "command failed with {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn run_expect_code(cmd: &mut Command, code: i32) -> Output {
    let out = cmd.output().expect("spawning lunarad");
    assert_eq!(
        out.status.code(),
        Some(code),
        "expected exit code {code}\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// 48-cell terrain with two epochs: big enough to exercise everything,
/// small enough to keep each test under a second or two.
fn write_small_config(dir: &Path) -> PathBuf {
    let path = dir.join("config.toml");
    std::fs::write(
        &path,
        "[terrain]\n\
         grid_size = 48\n\
         n_epochs = 2\n\
         \n\
         [dataset]\n\
         n_terrains = 2\n\
         tx_per_terrain = 1\n",
    )
    .unwrap();
    path
}

#[test]
fn terrain_runs_are_byte_identical_and_ordered() {
    let dir = TempDir::new().unwrap();
    let config = write_small_config(dir.path());
    let out_a = dir.path().join("a.lrtc");
    let out_b = dir.path().join("b.lrtc");
    for out in [&out_a, &out_b] {
        run_ok(lunarad().args([
            "terrain",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]));
    }
    let bytes_a = std::fs::read(&out_a).unwrap();
    let bytes_b = std::fs::read(&out_b).unwrap();
    assert_eq!(bytes_a, bytes_b);

    let maps = read_terrain_container(&out_a).unwrap();
    assert_eq!(maps.len(), 2);
    assert_eq!(maps[0].seed(), 0);
    assert_eq!(maps[1].seed(), 1);
    assert_eq!(maps[0].size(), 48);
    assert!(dir.path().join("a.lrtc.config.json").exists());
}

#[test]
fn terrain_count_zero_writes_empty_container() {
    let dir = TempDir::new().unwrap();
    let config = write_small_config(dir.path());
    let out = dir.path().join("empty.lrtc");
    run_ok(lunarad().args([
        "terrain",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--count",
        "0",
    ]));
    assert!(read_terrain_container(&out).unwrap().is_empty());
    run_ok(lunarad().args(["validate", out.to_str().unwrap()]));
}

#[test]
fn terrain_seed_list_overrides_config() {
    let dir = TempDir::new().unwrap();
    let config = write_small_config(dir.path());
    let out = dir.path().join("seeded.lrtc");
    run_ok(lunarad().args([
        "terrain",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--seeds",
        "5,9",
    ]));
    let maps = read_terrain_container(&out).unwrap();
    let seeds: Vec<u64> = maps.iter().map(|m| m.seed()).collect();
    assert_eq!(seeds, vec![5, 9]);
}

#[test]
fn dataset_produces_one_sample_per_terrain_tx_frequency() {
    let dir = TempDir::new().unwrap();
    let config = write_small_config(dir.path());
    let out = dir.path().join("data.lrdc");
    run_ok(lunarad().args([
        "dataset",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]));

    let samples = read_container(&out).unwrap();
    assert_eq!(samples.len(), 4);
    let high: usize = samples.iter().map(|s| s.i_hz[(0, 0)] as usize).sum();
    assert_eq!(high, 2, "two of four samples should be high-band");
    for s in &samples {
        assert_eq!(s.meta.provenance, SampleProvenance::EngineRendered);
        assert!(s.meta.repair_method.is_none());
    }
    // Both bands of one terrain share the transmitter position.
    let seed0: Vec<_> = samples.iter().filter(|s| s.meta.terrain_seed == 0).collect();
    assert_eq!(seed0.len(), 2);
    assert_eq!(
        (seed0[0].meta.tx_row, seed0[0].meta.tx_col),
        (seed0[1].meta.tx_row, seed0[1].meta.tx_col)
    );

    // Rerun lands on the identical byte stream.
    let out2 = dir.path().join("data2.lrdc");
    run_ok(lunarad().args([
        "dataset",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out2.to_str().unwrap(),
    ]));
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(&out2).unwrap());

    // Split manifest partitions terrain seeds.
    let splits: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("data.lrdc.splits.json")).unwrap())
            .unwrap();
    let count = |k: &str| splits[k].as_array().unwrap().len();
    assert_eq!(count("train") + count("val") + count("test"), 2);

    // Config echo carries provenance markers.
    let echo: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("data.lrdc.config.json")).unwrap())
            .unwrap();
    assert_eq!(
        echo["provenance"]["propagation.frequencies_hz"],
        "paper"
    );
    assert_eq!(
        echo["provenance"]["propagation.render.rx_height_m"],
        "non-paper-default"
    );
    assert_eq!(echo["config"]["terrain"]["grid_size"], 48);
}

#[test]
fn dataset_png_export_writes_three_images_per_sample() {
    let dir = TempDir::new().unwrap();
    let config = write_small_config(dir.path());
    let out = dir.path().join("data.lrdc");
    let png_dir = dir.path().join("png");
    run_ok(lunarad().args([
        "dataset",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--png",
        png_dir.to_str().unwrap(),
    ]));
    let mut names: Vec<String> = std::fs::read_dir(&png_dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names.len(), 12, "4 samples x 3 channels: {names:?}");
    assert!(names.iter().all(|n| n.ends_with(".png")));
    assert_eq!(names.iter().filter(|n| n.ends_with("_hm.png")).count(), 4);
    assert_eq!(names.iter().filter(|n| n.ends_with("_rm.png")).count(), 4);
    assert_eq!(names.iter().filter(|n| n.ends_with("_km.png")).count(), 4);
}

fn write_sidecar_scene(
    dir: &Path,
    stem: &str,
    frequency_hz: f64,
    terrain_seed: u64,
    tx: (usize, usize),
    values: impl Fn(usize, usize) -> f32,
) -> PathBuf {
    let rows = 48;
    let cols = 48;
    let mut payload = Vec::with_capacity(rows * cols * 4);
    for i in 0..rows {
        for j in 0..cols {
            payload.extend_from_slice(&values(i, j).to_le_bytes());
        }
    }
    std::fs::write(dir.join(format!("{stem}.f32")), payload).unwrap();
    let sidecar = serde_json::json!({
        "rows": rows,
        "cols": cols,
        "frequency_hz": frequency_hz,
        "null_sentinel": "nan",
        "terrain_seed": terrain_seed,
        "tx_row": tx.0,
        "tx_col": tx.1,
    });
    let path = dir.join(format!("{stem}.json"));
    std::fs::write(&path, serde_json::to_string(&sidecar).unwrap()).unwrap();
    path
}

#[test]
fn ingest_merges_instances_and_fills_gaps() {
    let dir = TempDir::new().unwrap();
    let config = write_small_config(dir.path());
    let base = |i: usize, j: usize| -80.0 - 0.3 * ((i * i + j * j) as f32).sqrt();

    // Two low-band instances with complementary nulls, one gappy high-band
    // scene, and one complete high-band scene.
    let a = write_sidecar_scene(dir.path(), "a", 415.0e6, 0, (10, 12), |i, j| {
        if (i * 48 + j) % 7 == 0 { f32::NAN } else { base(i, j) }
    });
    let b = write_sidecar_scene(dir.path(), "b", 415.0e6, 0, (10, 12), |i, j| {
        if (i + j) % 5 == 0 { f32::NAN } else { base(i, j) }
    });
    let c = write_sidecar_scene(dir.path(), "c", 5.8e9, 1, (30, 5), |i, j| {
        if (i * j) % 11 == 3 { f32::NAN } else { base(i, j) }
    });
    let d = write_sidecar_scene(dir.path(), "d", 5.8e9, 0, (10, 12), base);

    let out = dir.path().join("ingested.lrdc");
    run_ok(lunarad().args([
        "ingest",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        a.to_str().unwrap(),
        b.to_str().unwrap(),
        c.to_str().unwrap(),
        d.to_str().unwrap(),
    ]));

    let samples = read_container(&out).unwrap();
    assert_eq!(samples.len(), 3);
    let repair = |seed: u64, f: f64| {
        samples
            .iter()
            .find(|s| s.meta.terrain_seed == seed && s.meta.frequency_hz == f)
            .unwrap()
            .meta
            .repair_method
            .clone()
            .unwrap()
    };
    assert_eq!(repair(0, 415.0e6), "merge(2)+bilinear");
    assert_eq!(repair(1, 5.8e9), "static");
    assert_eq!(repair(0, 5.8e9), "noop");
    for s in &samples {
        assert_eq!(s.meta.provenance, SampleProvenance::Ingested);
    }
    run_ok(lunarad().args(["validate", out.to_str().unwrap()]));
}

#[test]
fn ingest_rejects_dimension_mismatch_with_config_error() {
    let dir = TempDir::new().unwrap();
    let config = write_small_config(dir.path());
    // Sidecar claims 32x32, config terrain is 48x48.
    let rows = 32usize;
    let payload: Vec<u8> = (0..rows * rows)
        .flat_map(|_| (-90.0f32).to_le_bytes())
        .collect();
    std::fs::write(dir.path().join("small.f32"), payload).unwrap();
    let sidecar = serde_json::json!({
        "rows": rows, "cols": rows, "frequency_hz": 415.0e6,
        "null_sentinel": "nan", "terrain_seed": 0, "tx_row": 2, "tx_col": 3,
    });
    let path = dir.path().join("small.json");
    std::fs::write(&path, serde_json::to_string(&sidecar).unwrap()).unwrap();

    let out = run_expect_code(
        lunarad().args([
            "ingest",
            "--config",
            config.to_str().unwrap(),
            "--out",
            dir.path().join("x.lrdc").to_str().unwrap(),
            path.to_str().unwrap(),
        ]),
        2,
    );
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("32"), "stderr should name the bad dims: {stderr}");
}

#[test]
fn eval_against_itself_reports_perfect_scores() {
    let dir = TempDir::new().unwrap();
    let config = write_small_config(dir.path());
    let data = dir.path().join("data.lrdc");
    run_ok(lunarad().args([
        "dataset",
        "--config",
        config.to_str().unwrap(),
        "--out",
        data.to_str().unwrap(),
    ]));

    let json_path = dir.path().join("report.json");
    let table_path = dir.path().join("report.txt");
    let out = run_ok(lunarad().args([
        "eval",
        "--predictions",
        data.to_str().unwrap(),
        "--references",
        data.to_str().unwrap(),
        "--out-json",
        json_path.to_str().unwrap(),
        "--out-table",
        table_path.to_str().unwrap(),
    ]));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("+inf"), "self-eval PSNR should be +inf: {stdout}");

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
    assert_eq!(report["combined"]["psnr"], "+inf");
    assert_eq!(report["combined"]["rmse"], 0.0);
    assert_eq!(report["combined"]["ssim"], 1.0);
    assert_eq!(report["combined"]["n_samples"], 4);
    assert_eq!(
        std::fs::read_to_string(&table_path).unwrap(),
        stdout,
        "table file should match the printed table"
    );

    // Band filter drops the other band from the report.
    let low_json = dir.path().join("low.json");
    run_ok(lunarad().args([
        "eval",
        "--predictions",
        data.to_str().unwrap(),
        "--references",
        data.to_str().unwrap(),
        "--band",
        "low",
        "--out-json",
        low_json.to_str().unwrap(),
    ]));
    let low: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&low_json).unwrap()).unwrap();
    assert!(low["high_band"].is_null());
    assert_eq!(low["low_band"]["n_samples"], 2);
    assert_eq!(low["combined"]["n_samples"], 2);
}

#[test]
fn eval_missing_file_exits_3_and_names_the_path() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("nope.lrdc");
    let out = run_expect_code(
        lunarad().args([
            "eval",
            "--predictions",
            missing.to_str().unwrap(),
            "--references",
            missing.to_str().unwrap(),
        ]),
        3,
    );
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("nope.lrdc"), "stderr should name the path: {stderr}");
}

#[test]
fn vectors_are_deterministic_and_tampering_is_caught() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        run_ok(lunarad().args([
            "vectors",
            "--out",
            out.to_str().unwrap(),
            "--cases",
            "3",
            "--timesteps",
            "50",
        ]));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    run_ok(lunarad().args(["validate", a.to_str().unwrap()]));

    // Nudge one expected scalar; validation must notice.
    let mut file: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&a).unwrap()).unwrap();
    let case = file["cases"]
        .as_array_mut()
        .unwrap()
        .iter_mut()
        .find(|c| c["op"] == "total_loss")
        .expect("a total_loss case");
    let bumped = case["expected"].as_f64().unwrap() + 0.5;
    case["expected"] = serde_json::json!(bumped);
    let tampered = dir.path().join("tampered.json");
    std::fs::write(&tampered, serde_json::to_string_pretty(&file).unwrap()).unwrap();
    let out = run_expect_code(lunarad().args(["validate", tampered.to_str().unwrap()]), 4);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("violation"), "stderr: {stderr}");
}

#[test]
fn validate_detects_container_corruption() {
    let dir = TempDir::new().unwrap();
    let config = write_small_config(dir.path());
    let out = dir.path().join("data.lrdc");
    run_ok(lunarad().args([
        "dataset",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]));
    run_ok(lunarad().args(["validate", out.to_str().unwrap()]));

    let mut bytes = std::fs::read(&out).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0xff;
    let bad = dir.path().join("bad.lrdc");
    std::fs::write(&bad, &bytes).unwrap();
    let result = run_expect_code(lunarad().args(["validate", bad.to_str().unwrap()]), 4);
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(
        stderr.contains("checksum") || stderr.contains("truncated") || stderr.contains("dtype"),
        "stderr should describe the corruption: {stderr}"
    );
}

#[test]
fn malformed_config_exits_2() {
    let dir = TempDir::new().unwrap();
    let bad_toml = dir.path().join("bad.toml");
    std::fs::write(&bad_toml, "[terrain\ngrid_size = 48\n").unwrap();
    run_expect_code(
        lunarad().args([
            "terrain",
            "--config",
            bad_toml.to_str().unwrap(),
            "--out",
            dir.path().join("x.lrtc").to_str().unwrap(),
        ]),
        2,
    );

    let unknown_field = dir.path().join("unknown.toml");
    std::fs::write(&unknown_field, "[terrain]\ngird_size = 48\n").unwrap();
    run_expect_code(
        lunarad().args([
            "terrain",
            "--config",
            unknown_field.to_str().unwrap(),
            "--out",
            dir.path().join("y.lrtc").to_str().unwrap(),
        ]),
        2,
    );

    let missing = dir.path().join("missing.toml");
    run_expect_code(
        lunarad().args([
            "terrain",
            "--config",
            missing.to_str().unwrap(),
            "--out",
            dir.path().join("z.lrtc").to_str().unwrap(),
        ]),
        3,
    );
}

#[test]
fn output_root_env_prefixes_relative_paths() {
    let dir = TempDir::new().unwrap();
    let config = write_small_config(dir.path());
    let root = dir.path().join("outputs");
    run_ok(
        lunarad()
            .env("LUNARAD_OUTPUT_ROOT", &root)
            .env("LUNARAD_PARALLELISM", "1")
            .args([
                "terrain",
                "--config",
                config.to_str().unwrap(),
                "--out",
                "nested/terr.lrtc",
            ]),
    );
    assert!(root.join("nested/terr.lrtc").exists());
    assert!(read_terrain_container(root.join("nested/terr.lrtc")).unwrap().len() == 2);
}
