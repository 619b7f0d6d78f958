use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use swarmtsc_core::data::Dataset;
use swarmtsc_core::io::TrajectoryBatch;
use swarmtsc_core::sim::TacticLabel;

fn swarmtsc(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_swarmtsc"))
        .current_dir(dir)
        .args(args)
        .args(["--log-level", "warn"])
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn manifest(dir: &Path, name: &str) -> serde_json::Value {
    serde_json::from_slice(&fs::read(dir.join(name)).expect("manifest exists")).unwrap()
}

fn read_batch(path: &Path) -> TrajectoryBatch {
    TrajectoryBatch::read(fs::File::open(path).unwrap()).unwrap()
}

#[test]
fn simulate_writes_container_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "simulate",
        "--tactic",
        "auction+",
        "--na",
        "10",
        "--nd",
        "10",
        "--instances",
        "4",
        "--seed",
        "7",
        "--out",
        "a.swrm",
    ];
    let o = swarmtsc(dir.path(), &args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let batch = read_batch(&dir.path().join("a.swrm"));
    assert_eq!(batch.records.len(), 4);
    assert!(batch.records.iter().all(|r| r.tactic == TacticLabel::AUCTION_PLUS));

    let m = manifest(dir.path(), "a.swrm.manifest.json");
    assert_eq!(m["status"], "ok");
    assert_eq!(m["config"]["instances"], 4);
    assert_eq!(m["config"]["max-steps"], 1000);
    let hash = m["outputs"][0]["hash"].as_str().unwrap();
    assert_eq!(hash.len(), 64);

    // rerun: identical bytes
    let first = fs::read(dir.path().join("a.swrm")).unwrap();
    let first_manifest = fs::read(dir.path().join("a.swrm.manifest.json")).unwrap();
    assert_eq!(code(&swarmtsc(dir.path(), &args)), 0);
    assert_eq!(fs::read(dir.path().join("a.swrm")).unwrap(), first);
    assert_eq!(
        fs::read(dir.path().join("a.swrm.manifest.json")).unwrap(),
        first_manifest
    );
}

#[test]
fn mixed_containers_give_baseline_split_counts() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for (tactics, seed, out) in [("greedy,greedy+", "1", "g.swrm"), ("auction,auction+", "2", "a.swrm")] {
        let o = swarmtsc(
            d,
            &[
                "simulate",
                "--tactic",
                tactics,
                "--instances",
                "1200",
                "--seed",
                seed,
                "--out",
                out,
            ],
        );
        assert_eq!(code(&o), 0);
    }
    let o = swarmtsc(
        d,
        &["build-dataset", "--in", "g.swrm", "--in", "a.swrm", "--out", "ds.swrm"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let ds = Dataset::read(fs::File::open(d.join("ds.swrm")).unwrap()).unwrap();
    assert_eq!(ds.tactics.len(), 4800);
    assert_eq!(
        (ds.splits.train.len(), ds.splits.val.len(), ds.splits.test.len()),
        (2880, 720, 1200)
    );
    for t in TacticLabel::ALL {
        assert_eq!(ds.tactics.iter().filter(|&&x| x == t).count(), 1200);
    }
    assert_eq!(
        manifest(d, "ds.swrm.manifest.json")["inputs"].as_array().unwrap().len(),
        2
    );
}

fn small_dataset(d: &Path) {
    assert_eq!(
        code(&swarmtsc(
            d,
            &["simulate", "--instances", "12", "--seed", "3", "--out", "t.swrm"]
        )),
        0
    );
    let o = swarmtsc(
        d,
        &["build-dataset", "--in", "t.swrm", "--window", "20", "--out", "ds.swrm"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn train_then_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_dataset(d);
    let args = [
        "train", "--model", "fcn", "--output", "mh", "--window", "20", "--data", "ds.swrm", "--seed", "1", "--epochs",
        "2", "--out", "m.ckpt",
    ];
    let o = swarmtsc(d, &args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(d.join("m.ckpt.report.json")).unwrap()).unwrap();
    assert_eq!(report["model"], "fcn-mh");
    assert_eq!(report["time"], 20);
    assert!(report["test"]["tactic"]["accuracy"].is_number());

    let ckpt = fs::read(d.join("m.ckpt")).unwrap();
    let report_bytes = fs::read(d.join("m.ckpt.report.json")).unwrap();
    assert_eq!(code(&swarmtsc(d, &args)), 0);
    assert_eq!(fs::read(d.join("m.ckpt")).unwrap(), ckpt);
    assert_eq!(fs::read(d.join("m.ckpt.report.json")).unwrap(), report_bytes);

    let o = swarmtsc(d, &["evaluate", "--model-ckpt", "m.ckpt", "--data", "ds.swrm"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("fcn-mh tactic: accuracy"));
    let eval: serde_json::Value = serde_json::from_slice(&fs::read(d.join("m.ckpt.eval.json")).unwrap()).unwrap();
    assert_eq!(eval["test"]["tactic"], report["test"]["tactic"]);

    // training straight from trajectories
    let o = swarmtsc(
        d,
        &[
            "train", "--model", "logreg", "--output", "mc", "--data", "t.swrm", "--epochs", "1", "--out", "lr.ckpt",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_dataset(d);

    assert_eq!(code(&swarmtsc(d, &["simulate", "--bogus"])), 2);
    assert_eq!(code(&swarmtsc(d, &["train", "--model", "cnn"])), 2);
    assert_eq!(code(&swarmtsc(d, &["train", "--model", "rnn", "--data", "ds.swrm"])), 2);
    // window disagrees with the dataset
    assert_eq!(
        code(&swarmtsc(d, &["train", "--data", "ds.swrm", "--window", "full"])),
        2
    );

    // missing input, manifest still written
    let o = swarmtsc(d, &["build-dataset", "--in", "nope.swrm", "--out", "x.swrm"]);
    assert_eq!(code(&o), 3);
    let m = manifest(d, "x.swrm.manifest.json");
    assert_eq!(m["status"], "error");
    assert_eq!(m["exit_code"], 3);
    assert!(m["inputs"][0]["hash"].is_null());

    // garbage and wrong-version containers
    fs::write(d.join("junk.swrm"), b"not a container").unwrap();
    assert_eq!(code(&swarmtsc(d, &["build-dataset", "--in", "junk.swrm"])), 3);
    let mut bytes = fs::read(d.join("t.swrm")).unwrap();
    bytes[4] = 9;
    fs::write(d.join("v9.swrm"), bytes).unwrap();
    let o = swarmtsc(d, &["build-dataset", "--in", "v9.swrm", "--out", "v9ds.swrm"]);
    assert_eq!(code(&o), 3);
    assert!(manifest(d, "v9ds.swrm.manifest.json")["error"]
        .as_str()
        .unwrap()
        .contains("version"));

    // runaway learning rate
    let o = swarmtsc(
        d,
        &[
            "train", "--model", "logreg", "--output", "mc", "--data", "ds.swrm", "--window", "20", "--lr", "1e308",
            "--out", "div.ckpt",
        ],
    );
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(manifest(d, "div.ckpt.manifest.json")["exit_code"], 4);
}

#[test]
fn config_file_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(
        d.join("run.toml"),
        "[simulate]\ntactic = \"greedy\"\ninstances = 3\nseed = 5\nout = \"cfg.swrm\"\n",
    )
    .unwrap();
    let o = swarmtsc(d, &["--config", "run.toml", "simulate", "--instances", "2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let batch = read_batch(&d.join("cfg.swrm"));
    assert_eq!(batch.records.len(), 2);
    assert!(batch.records.iter().all(|r| r.tactic == TacticLabel::GREEDY));
    let m = manifest(d, "cfg.swrm.manifest.json");
    assert_eq!(m["config"]["instances"], 2);
    assert_eq!(m["config"]["seed"], 5);
    assert_eq!(m["config"]["na"], 10);

    fs::write(d.join("bad.toml"), "[simulate]\ninstance = 3\n").unwrap();
    assert_eq!(code(&swarmtsc(d, &["--config", "bad.toml", "simulate"])), 2);
}

#[test]
fn opening_checks() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = swarmtsc(d, &["opening", "--seed", "11"]);
    assert_eq!(code(&o), 0);
    let mut rdr = csv::Reader::from_path(d.join("opening.checks.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 4);
    for r in &rows {
        match &r[0] {
            "greedy" | "greedy+" => assert_eq!(&r[1], "0"),
            _ => assert_eq!(&r[2], "0"),
        }
    }
    assert!(fs::metadata(d.join("opening.csv")).unwrap().len() > 0);
}

#[test]
fn sweep_csv_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_dataset(d);
    let args = [
        "sweep",
        "--kind",
        "window",
        "--data",
        "t.swrm",
        "--models",
        "logreg-mh",
        "--windows",
        "10,20",
        "--epochs",
        "2",
        "--out",
        "w.csv",
    ];
    assert_eq!(code(&swarmtsc(d, &args)), 0);
    let first = fs::read_to_string(d.join("w.csv")).unwrap();
    assert!(first.starts_with("axis,model,head,accuracy,acc_adj,ner,val_loss,params,seconds\n"));
    // 2 windows x 3 heads
    assert_eq!(first.lines().count(), 7);
    assert_eq!(code(&swarmtsc(d, &args)), 0);
    assert_eq!(fs::read_to_string(d.join("w.csv")).unwrap(), first);

    let o = swarmtsc(
        d,
        &[
            "sweep",
            "--kind",
            "noise",
            "--data",
            "t.swrm",
            "--models",
            "logreg-mc",
            "--factors",
            "20,10",
            "--epochs",
            "1",
        ],
    );
    assert_eq!(code(&o), 2);
}

#[test]
fn pca_projection() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_dataset(d);
    let o = swarmtsc(d, &["pca", "--data", "ds.swrm", "--k", "3"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(d.join("pca.csv")).unwrap();
    assert!(text.starts_with("instance,step,tactic,pc1,pc2,pc3\n"));
    assert_eq!(text.lines().count(), 1 + 48 * 20);
}
