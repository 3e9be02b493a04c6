//! End-to-end tests through the `wavedbn` binary: exit codes, file
//! outputs, and report identities.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use wavedbn::pgm;
use wavedbn::rng;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wavedbn"))
}

fn tmp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("wavedbn-cli-tests").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_toy_dataset(dir: &Path) {
    let mut r = rng::seeded(4242);
    for k in 1..=3usize {
        for angle in 0..12usize {
            let base = 40 + k * 60;
            let data: Vec<u8> = (0..64)
                .map(|_| (base + rng::below(&mut r, 25)) as u8)
                .collect();
            pgm::write_pgm_p5(&dir.join(format!("obj{k}__{angle}.pgm")), 8, 8, &data).unwrap();
        }
    }
}

fn toy_config_text(data_dir: &Path, out_dir: &Path) -> String {
    format!(
        "[dataset]\nkind = generic-pgm-dir\npath = {}\n\
         [preprocess]\ndownsample = 1\n\
         [architecture]\nhidden_sizes = 4\n\
         [pretrain]\nepochs = 4\nbatch_size = 4\n\
         [finetune]\nepochs = 25\nbatch_size = 4\n\
         [split]\ntrain_fraction = 0.7\n\
         [run]\nseed = 11\nworkers = 1\nout_dir = {}\n",
        data_dir.display(),
        out_dir.display()
    )
}

fn kv_value(kv: &str, key: &str) -> String {
    kv.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("missing key {key}"))
        .to_string()
}

fn assert_exit(output: &Output, code: i32) {
    assert_eq!(
        output.status.code(),
        Some(code),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

#[test]
fn print_defaults_round_trips_through_parser() {
    let out = bin().arg("--print-defaults").output().unwrap();
    assert_exit(&out, 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let cfg = wavedbn::config::RunConfig::parse_str(&text).unwrap();
    cfg.validate().unwrap();
}

#[test]
fn train_then_eval_and_inspect() {
    let data_dir = tmp_dir("flow_data");
    write_toy_dataset(&data_dir);
    let out_dir = tmp_dir("flow_out");
    let cfg_path = tmp_dir("flow_cfg").join("run.cfg");
    std::fs::write(&cfg_path, toy_config_text(&data_dir, &out_dir)).unwrap();

    let out = bin().args(["train", "--config"]).arg(&cfg_path).output().unwrap();
    assert_exit(&out, 0);
    let model_path = out_dir.join("model.wavedbn");
    assert!(model_path.exists());

    // Report identities: error% and confusion trace.
    let kv = std::fs::read_to_string(out_dir.join("report.kv")).unwrap();
    let acc: f64 = kv_value(&kv, "ensemble_test_accuracy").parse().unwrap();
    let err: f64 = kv_value(&kv, "test_error_percent").parse().unwrap();
    assert!((err - 100.0 * (1.0 - acc)).abs() < 1e-9);
    let test_size: f64 = kv_value(&kv, "test_size").parse().unwrap();
    let mut trace = 0u64;
    for c in 0..3 {
        trace += kv_value(&kv, &format!("confusion_{c:02}_{c:02}"))
            .parse::<u64>()
            .unwrap();
    }
    assert!((acc - trace as f64 / test_size).abs() < 1e-12);

    // eval reproduces the training report's accuracies exactly.
    let out = bin()
        .args(["eval", "--model"])
        .arg(&model_path)
        .arg("--config")
        .arg(&cfg_path)
        .output()
        .unwrap();
    assert_exit(&out, 0);
    let eval_text = String::from_utf8(out.stdout).unwrap();
    let train_acc: f64 = kv_value(&kv, "ensemble_train_accuracy").parse().unwrap();
    assert!(
        eval_text.contains(&format!("train accuracy {:.4}%", 100.0 * train_acc)),
        "eval output does not repeat training accuracy:\n{eval_text}"
    );

    // inspect prints the sixteen weights in range.
    let out = bin().args(["inspect", "--model"]).arg(&model_path).output().unwrap();
    assert_exit(&out, 0);
    let dump = String::from_utf8(out.stdout).unwrap();
    assert!(dump.contains("HH.HH"));
}

#[test]
fn workers_do_not_change_the_model() {
    let data_dir = tmp_dir("workers_data");
    write_toy_dataset(&data_dir);
    let out_a = tmp_dir("workers_a");
    let out_b = tmp_dir("workers_b");
    let cfg_path = tmp_dir("workers_cfg").join("run.cfg");
    std::fs::write(&cfg_path, toy_config_text(&data_dir, &out_a)).unwrap();

    let out = bin().args(["train", "--config"]).arg(&cfg_path).args(["--workers", "1"]).output().unwrap();
    assert_exit(&out, 0);
    let out = bin()
        .args(["train", "--config"])
        .arg(&cfg_path)
        .args(["--workers", "4", "--out"])
        .arg(&out_b)
        .output()
        .unwrap();
    assert_exit(&out, 0);

    // out_dir and workers differ between the two runs, so the provenance
    // lines differ; everything else must match bit for bit.
    let strip = |p: PathBuf| {
        std::fs::read_to_string(p)
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with("timestamp ") && !l.starts_with("config_hash "))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(
        strip(out_a.join("model.wavedbn")),
        strip(out_b.join("model.wavedbn")),
        "sequential and parallel runs must produce identical models"
    );
}

#[test]
fn validation_errors_exit_1_before_training() {
    let cfg_path = tmp_dir("bad_cfg").join("bad.cfg");
    std::fs::write(
        &cfg_path,
        "[dataset]\nkind = coil20\npath = wherever\n[pretrain]\nlearning_rate = -0.1\n",
    )
    .unwrap();
    let out = bin().args(["train", "--config"]).arg(&cfg_path).output().unwrap();
    assert_exit(&out, 1);
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("learning_rate"), "{stderr}");

    // Unknown key is caught at parse time.
    let cfg_path = tmp_dir("bad_cfg2").join("bad.cfg");
    std::fs::write(&cfg_path, "[run]\nspeed = 9\n").unwrap();
    let out = bin().args(["train", "--config"]).arg(&cfg_path).output().unwrap();
    assert_exit(&out, 1);
}

#[test]
fn missing_inputs_exit_2() {
    let cfg_path = tmp_dir("io_cfg").join("run.cfg");
    std::fs::write(
        &cfg_path,
        "[dataset]\nkind = coil20\npath = /definitely/not/a/dir\n",
    )
    .unwrap();
    let out = bin().args(["train", "--config"]).arg(&cfg_path).output().unwrap();
    assert_exit(&out, 2);

    let out = bin().args(["inspect", "--model", "/no/such/model"]).output().unwrap();
    assert_exit(&out, 2);

    // Truncated model file: still exit 2, message carries a byte offset.
    let data_dir = tmp_dir("io_data");
    write_toy_dataset(&data_dir);
    let out_dir = tmp_dir("io_out");
    let cfg2 = tmp_dir("io_cfg2").join("run.cfg");
    std::fs::write(&cfg2, toy_config_text(&data_dir, &out_dir)).unwrap();
    assert_exit(&bin().args(["train", "--config"]).arg(&cfg2).output().unwrap(), 0);
    let model = std::fs::read_to_string(out_dir.join("model.wavedbn")).unwrap();
    let broken = out_dir.join("broken.wavedbn");
    std::fs::write(&broken, &model[..model.len() / 2]).unwrap();
    let out = bin().args(["inspect", "--model"]).arg(&broken).output().unwrap();
    assert_exit(&out, 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("byte"));
}

#[test]
fn decompose_writes_bands_and_validates_dims() {
    let dir = tmp_dir("decompose");
    let img = dir.join("input.pgm");
    let mut r = rng::seeded(7);
    let data: Vec<u8> = (0..256).map(|_| rng::below(&mut r, 256) as u8).collect();
    pgm::write_pgm_p5(&img, 16, 16, &data).unwrap();

    let out_dir = tmp_dir("decompose_out");
    let out = bin()
        .args(["decompose", "--data"])
        .arg(&img)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_exit(&out, 0);
    for j in 0..16 {
        let band = out_dir.join(format!("band_{j:02}.pgm"));
        assert!(band.exists(), "missing {band:?}");
        let decoded = pgm::read_pgm(&band).unwrap();
        assert_eq!((decoded.width, decoded.height), (4, 4));
    }
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("band_00 LL.LL"), "{stdout}");

    // 10x10 is not divisible by 4.
    let bad = dir.join("bad.pgm");
    pgm::write_pgm_p5(&bad, 10, 10, &[7u8; 100]).unwrap();
    let out = bin()
        .args(["decompose", "--data"])
        .arg(&bad)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_exit(&out, 1);
}

#[test]
fn usage_and_flag_errors() {
    let out = bin().output().unwrap();
    assert_exit(&out, 1);
    let out = bin().args(["train", "--config"]).output().unwrap();
    assert_exit(&out, 1);
    let out = bin().args(["train", "--nonsense"]).output().unwrap();
    assert_exit(&out, 1);
    let out = bin().args(["--help"]).output().unwrap();
    assert_exit(&out, 0);
}
