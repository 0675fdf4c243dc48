//! Exit-code and error-path checks for the command-line tool.

use std::path::Path;
use std::process::{Command, Output};

fn facefront(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_facefront"))
        .args(args)
        .output()
        .expect("spawning the binary")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(code(&facefront(&["--help"])), 0);
    assert_eq!(code(&facefront(&["--version"])), 0);
    assert_eq!(code(&facefront(&["landmark", "--help"])), 0);
}

#[test]
fn bad_usage_exits_one() {
    // Unknown subcommand and missing required arguments are caller errors.
    assert_eq!(code(&facefront(&["no-such-command"])), 1);
    assert_eq!(code(&facefront(&["landmark"])), 1);
    assert_eq!(code(&facefront(&["gen-template", "--bogus-flag", "x"])), 1);
}

#[test]
fn bad_config_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("config.toml");
    std::fs::write(&cfg, "version = 1\nunknown_key = 5\n").unwrap();
    let out = facefront(&[
        "yield-sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out-dir",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown_key"));
}

#[test]
fn empty_training_directory_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = facefront(&[
        "train-landmarker",
        "--train-dir",
        dir.path().to_str().unwrap(),
        "--model-out",
        dir.path().join("m.cmr").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
    assert!(!dir.path().join("m.cmr").exists());
}

#[test]
fn missing_model_file_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = facefront(&[
        "inspect-model",
        "--model",
        dir.path().join("nope.cmr").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
}

fn write_fvec(path: &Path, values: &[f32]) {
    let mut bytes = Vec::new();
    bytes.extend_from_slice(b"FVEC");
    bytes.extend_from_slice(&(values.len() as u32).to_le_bytes());
    bytes.extend_from_slice(&1u32.to_le_bytes());
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(path, bytes).unwrap();
}

#[test]
fn single_video_evaluation_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    write_fvec(&dir.path().join("only.fvec"), &[1.0, 2.0, 3.0]);
    std::fs::write(
        dir.path().join("labels.csv"),
        "file,subject,video\nonly.fvec,alice,a1\n",
    )
    .unwrap();
    let out = facefront(&[
        "evaluate",
        "--descriptor-dir",
        dir.path().to_str().unwrap(),
        "--labels",
        dir.path().join("labels.csv").to_str().unwrap(),
        "--out-dir",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("at least 2"));
}

#[test]
fn training_reports_non_increasing_stage_errors() {
    use facefront::cascade::{io, Shape2D};
    use rand::{Rng, SeedableRng};

    let dir = tempfile::tempdir().unwrap();
    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(4);
    let base = Shape2D::new(vec![
        18.0, 18.0, 52.0, 20.0, 35.0, 34.0, 16.0, 48.0, 54.0, 50.0, 35.0, 62.0,
    ]);
    for k in 0..10 {
        let shape = base
            .scaled(rng.gen_range(0.9..1.1))
            .translated(rng.gen_range(8.0..16.0), rng.gen_range(8.0..16.0));
        let img = image::GrayImage::from_fn(95, 105, |x, y| {
            let mut v = 0.0_f64;
            for p in shape.points() {
                let d2 = (x as f64 - p.x).powi(2) + (y as f64 - p.y).powi(2);
                v += 180.0 * (-d2 / 18.0).exp();
            }
            image::Luma([v.min(255.0) as u8])
        });
        img.save(dir.path().join(format!("s{k}.png"))).unwrap();
        io::save_landmarks(&shape, &dir.path().join(format!("s{k}.lm"))).unwrap();
    }
    let cfg = dir.path().join("config.toml");
    std::fs::write(
        &cfg,
        "version = 1\nseed = 2\n\n[landmarker]\nstages = 3\nclusters = 2\nperturbations = 1\npatch_size = 12\ncells = 2\nbins = 6\n",
    )
    .unwrap();
    let out = facefront(&[
        "train-landmarker",
        "--config",
        cfg.to_str().unwrap(),
        "--train-dir",
        dir.path().to_str().unwrap(),
        "--model-out",
        dir.path().join("m.cmr").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    // Table rows after the header: "init 0.0629", "1 0.0001", ...
    let errors: Vec<f64> = stdout
        .lines()
        .skip_while(|l| !l.starts_with("stage"))
        .skip(1)
        .map_while(|l| {
            let fields: Vec<&str> = l.split_whitespace().collect();
            match fields.as_slice() {
                [_, err] => err.parse().ok(),
                _ => None,
            }
        })
        .collect();
    assert!(errors.len() >= 4, "no stage error table in:\n{stdout}");
    for pair in errors.windows(2) {
        assert!(pair[1] <= pair[0] + 1e-12, "stage errors increase: {errors:?}");
    }
    assert!(dir.path().join("m.cmr").exists());
}
