use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use imtrans::checkpoint::Checkpoint;
use imtrans::manifest;
use imtrans_core::training::{Task, TrainConfig, TrainState};
use tempfile::{tempdir, TempDir};

fn imtrans(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_imtrans"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn tiny_config(dataset: &Path, out: &Path, epochs: u64) -> String {
    format!(
        "task = paired\ndataset = {}\noutput = {}\nimage_size = 16\ngen_depth = 4\ngen_width = 4\n\
         disc_width = 4\npatch = patch16\nbatch_size = 2\nepochs = {epochs}\nseed = 5\nsamples = 2\n",
        dataset.display(),
        out.display()
    )
}

/// A 6-pair 16x16 dataset and a config file for it inside a fresh directory.
fn setup(epochs: u64) -> (TempDir, PathBuf, PathBuf) {
    let dir = tempdir().unwrap();
    let data = dir.path().join("data");
    let o = imtrans(&["make-dataset", "--n-train", "6", "--n-val", "4", "--size", "16", "--seed", "1", "--out", p(&data)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let config = dir.path().join("run.conf");
    fs::write(&config, tiny_config(&data, &dir.path().join("run"), epochs)).unwrap();
    (dir, data, config)
}

fn files_under(root: &Path) -> BTreeSet<PathBuf> {
    let mut out = BTreeSet::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(path.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    out
}

fn listed(root: &Path) -> BTreeSet<PathBuf> {
    let text = fs::read_to_string(root.join("manifest.txt")).unwrap();
    manifest::parse(&text)
        .into_iter()
        .filter(|(k, _)| k == "file")
        .map(|(_, v)| PathBuf::from(v))
        .collect()
}

fn assert_manifest_complete(root: &Path) {
    let mut on_disk = files_under(root);
    assert!(on_disk.remove(Path::new("manifest.txt")));
    assert_eq!(listed(root), on_disk);
}

#[test]
fn unknown_config_key_fails_before_writing() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("out");
    let config = dir.path().join("bad.conf");
    fs::write(&config, format!("task = paired\noutput = {}\nlearning_rate = 0.1\n", out.display())).unwrap();
    let o = imtrans(&["train", "--config", p(&config)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("learning_rate"));
    assert!(!out.exists());

    fs::write(&config, format!("task = paired\noutput = {}\nbatch_size = 0\n", out.display())).unwrap();
    assert_eq!(imtrans(&["train", "--config", p(&config)]).status.code(), Some(1));
    assert!(!out.exists());
}

#[test]
fn missing_config_and_usage_errors() {
    assert_eq!(imtrans(&["train", "--config", "/nonexistent.conf"]).status.code(), Some(3));
    assert_eq!(imtrans(&["train"]).status.code(), Some(1));
    assert_eq!(imtrans(&["frobnicate"]).status.code(), Some(1));
    assert!(imtrans(&["--help"]).status.success());
}

#[test]
fn receptive_field_reports_nominal_sizes() {
    let o = imtrans(&["receptive-field"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "patch16 16\npatch70 70\npatch286 286\n");
    let o = imtrans(&["receptive-field", "--variant", "patch70"]);
    assert_eq!(stdout(&o), "patch70 70\n");
    assert_eq!(imtrans(&["receptive-field", "--variant", "patch12"]).status.code(), Some(1));
}

fn max_error(out: &str, op: &str) -> f64 {
    out.lines()
        .find(|l| l.split_whitespace().next() == Some(op))
        .and_then(|l| l.split_whitespace().nth(2))
        .unwrap()
        .parse()
        .unwrap()
}

#[test]
fn gradcheck_exit_codes_and_monotone_trials() {
    let o = imtrans(&["gradcheck", "--ops", "corrupted", "--trials", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("FAIL"));
    assert_eq!(imtrans(&["gradcheck", "--ops", "softmax"]).status.code(), Some(1));

    let one = imtrans(&["gradcheck", "--ops", "conv2d,tanh", "--trials", "1", "--seed", "4"]);
    let ten = imtrans(&["gradcheck", "--ops", "conv2d,tanh", "--trials", "10", "--seed", "4"]);
    assert!(one.status.success() && ten.status.success());
    for op in ["conv2d", "tanh"] {
        assert!(max_error(&stdout(&ten), op) >= max_error(&stdout(&one), op));
    }

    let dir = tempdir().unwrap();
    let o = imtrans(&["gradcheck", "--ops", "add", "--out", p(dir.path())]);
    assert!(o.status.success());
    assert_manifest_complete(dir.path());
}

#[test]
fn training_writes_listed_artifacts_and_replays_from_its_manifest() {
    let (dir, _, config) = setup(2);
    let o = imtrans(&["train", "--config", p(&config)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let run = dir.path().join("run");
    let files = files_under(&run);
    for f in [
        "config.txt",
        "losses.csv",
        "checkpoints/epoch_0001.ckpt",
        "checkpoints/epoch_0002.ckpt",
        "samples/epoch_0001.png",
        "samples/epoch_0002.png",
    ] {
        assert!(files.contains(Path::new(f)), "missing {f}");
    }
    assert_manifest_complete(&run);

    let csv = fs::read_to_string(run.join("losses.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 3);
    let grid = imtrans::png_io::read_png(&run.join("samples/epoch_0002.png")).unwrap();
    assert_eq!((grid.width, grid.height), (3 * 16, 2 * 16));

    let text = fs::read_to_string(run.join("manifest.txt")).unwrap();
    assert!(text.contains("status=completed"));
    assert!(text.contains("config.jitter_upsize="));
    let replay_conf = dir.path().join("replay.conf");
    fs::write(&replay_conf, manifest::config_text(&text)).unwrap();
    let replay = dir.path().join("replay");
    let o = imtrans(&["train", "--config", p(&replay_conf), "--out", p(&replay)]);
    assert!(o.status.success());
    assert_eq!(fs::read(replay.join("losses.csv")).unwrap(), csv.as_bytes());

    let ckpt = Checkpoint::read(&run.join("checkpoints/epoch_0002.ckpt")).unwrap();
    assert_eq!((ckpt.epoch, ckpt.step), (2, 6));
}

#[test]
fn resume_matches_an_uninterrupted_run() {
    let (dir, _, config) = setup(2);
    let full = dir.path().join("full");
    assert!(imtrans(&["train", "--config", p(&config), "--out", p(&full)]).status.success());
    let first = dir.path().join("first");
    assert!(imtrans(&["train", "--config", p(&config), "--out", p(&first), "--epochs", "1"]).status.success());
    let resumed = dir.path().join("resumed");
    let ckpt = first.join("checkpoints/epoch_0001.ckpt");
    let o = imtrans(&["train", "--config", p(&config), "--out", p(&resumed), "--resume", p(&ckpt)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let full_csv = fs::read_to_string(full.join("losses.csv")).unwrap();
    let resumed_csv = fs::read_to_string(resumed.join("losses.csv")).unwrap();
    let tail: Vec<&str> = full_csv.lines().skip(4).collect();
    assert_eq!(resumed_csv.lines().skip(1).collect::<Vec<_>>(), tail);
    let a = Checkpoint::read(&full.join("checkpoints/epoch_0002.ckpt")).unwrap();
    let b = Checkpoint::read(&resumed.join("checkpoints/epoch_0002.ckpt")).unwrap();
    assert_eq!(a.networks, b.networks);
    assert_eq!((a.gen_opt.clone(), a.disc_opt.clone(), a.rng), (b.gen_opt, b.disc_opt, b.rng));

    let other = dir.path().join("other");
    let o = imtrans(&["train", "--config", p(&config), "--out", p(&other), "--resume", p(&ckpt), "--seed", "9"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!other.exists());
}

#[test]
fn divergence_exits_with_numeric_code_and_records_the_abort() {
    let (dir, _, config) = setup(3);
    let mut text = fs::read_to_string(&config).unwrap();
    text.push_str("lr = 1e300\n");
    fs::write(&config, text).unwrap();
    let o = imtrans(&["train", "--config", p(&config)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("non-finite"));
    let run = dir.path().join("run");
    let manifest = fs::read_to_string(run.join("manifest.txt")).unwrap();
    assert!(manifest.contains("status=aborted"));
    assert_manifest_complete(&run);
}

#[test]
fn evaluate_reports_are_deterministic_and_self_evaluation_is_perfect() {
    let (dir, data, config) = setup(1);
    assert!(imtrans(&["train", "--config", p(&config)]).status.success());
    let ckpt = dir.path().join("run/checkpoints/epoch_0001.ckpt");

    let args = ["evaluate", "--checkpoint", p(&ckpt), "--n", "4", "--k", "2", "--seed", "3"];
    let a = imtrans(&args);
    let b = imtrans(&args);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let report = stdout(&a);
    for key in ["precision=", "recall=", "fid=", "k=2", "embedder=random_projection(d=64,seed=3)", "n=4", "seed=3", "covariance_divisor=n-1"] {
        assert!(report.contains(key), "{key} missing from\n{report}");
    }

    let o = imtrans(&["evaluate", "--checkpoint", p(&ckpt), "--n", "4", "--self-eval"]);
    let report = stdout(&o);
    assert!(report.contains("precision=1.0000000000000000e0"), "{report}");
    assert!(report.contains("recall=1.0000000000000000e0"), "{report}");

    let o = imtrans(&["evaluate", "--checkpoint", p(&ckpt), "--dataset", p(&data), "--n", "5"]);
    assert_eq!(o.status.code(), Some(1));
    let o = imtrans(&["evaluate", "--checkpoint", p(&ckpt)]);
    assert_eq!(o.status.code(), Some(1), "256 exceeds the 4 validation images");

    let out = dir.path().join("eval");
    let o = imtrans(&["evaluate", "--checkpoint", p(&ckpt), "--n", "4", "--out", p(&out)]);
    assert!(o.status.success());
    assert_eq!(fs::read(out.join("report.txt")).unwrap(), o.stdout);
    assert_manifest_complete(&out);
}

#[test]
fn evaluate_accepts_external_features() {
    let dir = tempdir().unwrap();
    let gen = dir.path().join("gen.txt");
    let real = dir.path().join("real.txt");
    fs::write(&gen, "4 2\n0 0\n1 0\n0 1\n1 1\n").unwrap();
    fs::write(&real, "4 2\n0 0\n1 0\n0 1\n1 1.5\n").unwrap();
    let o = imtrans(&["evaluate", "--embedding-file", p(&gen), p(&real), "--k", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("embedder=external"));
    let o = imtrans(&["evaluate", "--embedding-file", p(&real), p(&real), "--k", "1"]);
    assert!(stdout(&o).contains("fid=0.0000000000000000e0"), "{}", stdout(&o));

    fs::write(&gen, "2 2\n0 0\n1 x\n").unwrap();
    let o = imtrans(&["evaluate", "--embedding-file", p(&gen), p(&real)]);
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("gen.txt") && err.contains("line 3"), "{err}");

    fs::write(&gen, "4 3\n0 0 0\n1 0 0\n0 1 0\n1 1 0\n").unwrap();
    let o = imtrans(&["evaluate", "--embedding-file", p(&gen), p(&real)]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn infer_preserves_names_and_is_seed_deterministic() {
    let (dir, data, config) = setup(1);
    assert!(imtrans(&["train", "--config", p(&config)]).status.success());
    let ckpt = dir.path().join("run/checkpoints/epoch_0001.ckpt");
    let inputs = dir.path().join("inputs");
    fs::create_dir_all(&inputs).unwrap();
    for name in ["cat.png", "dog.png"] {
        let joined = imtrans::png_io::read_png(&data.join("val/00000.png")).unwrap();
        let (left, _) = joined.split_halves().unwrap();
        imtrans::png_io::write_png(&inputs.join(name), &left).unwrap();
    }
    let run = |seed: &str, out: &Path| {
        let o = imtrans(&["infer", "--checkpoint", p(&ckpt), "--input", p(&inputs), "--seed", seed, "--out", p(out)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    };
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    run("1", &a);
    run("1", &b);
    run("2", &c);
    for name in ["cat.png", "dog.png"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap());
    }
    assert_ne!(fs::read(a.join("cat.png")).unwrap(), fs::read(c.join("cat.png")).unwrap());
    assert_manifest_complete(&a);

    let single = dir.path().join("single");
    let o = imtrans(&["infer", "--checkpoint", p(&ckpt), "--input", p(&inputs.join("dog.png")), "--out", p(&single)]);
    assert!(o.status.success());
    assert!(single.join("dog.png").exists());
}

#[test]
fn infer_rejects_channel_mismatch() {
    let dir = tempdir().unwrap();
    let mut config = TrainConfig::new(Task::Paired);
    config.channels = 1;
    config.image_size = 16;
    config.gen_depth = 4;
    config.gen_width = 4;
    config.disc_width = 4;
    let ckpt = dir.path().join("grey.ckpt");
    Checkpoint::from_state(&TrainState::<f32>::new(config).unwrap()).write(&ckpt).unwrap();
    let img = dir.path().join("x.png");
    imtrans::png_io::write_png(&img, &imtrans_core::data::RgbImage::filled(16, 16, [9, 9, 9])).unwrap();
    let out = dir.path().join("out");
    let o = imtrans(&["infer", "--checkpoint", p(&ckpt), "--input", p(&img), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("channels"));
}

#[test]
fn make_dataset_writes_both_layouts() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("u");
    let o = imtrans(&["make-dataset", "--task", "unpaired", "--n-train", "3", "--n-val", "2", "--size", "16", "--out", p(&out)]);
    assert!(o.status.success());
    for (sub, n) in [("trainA", 3), ("trainB", 3), ("valA", 2), ("valB", 2)] {
        assert_eq!(fs::read_dir(out.join(sub)).unwrap().count(), n, "{sub}");
    }
    assert_manifest_complete(&out);
    assert_eq!(imtrans(&["make-dataset", "--size", "20", "--out", p(&dir.path().join("bad"))]).status.code(), Some(1));
}
