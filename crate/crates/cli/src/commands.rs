use log::{info, warn};
use serde::Serialize;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use swarmtsc_core::analysis::{
    evaluate, fit_and_score, flatten_rows, opening_moves, pca_project, sweep_noise, sweep_swarmsize, sweep_window,
    MetricsReport, ModelEntry, SweepResult,
};
use swarmtsc_core::data::{
    build_dataset, generate_batch, Dataset, DatasetConfig, NoiseProtocol, SplitName, SplitSpec, Window,
};
use swarmtsc_core::io::{container_kind, TrajectoryBatch};
use swarmtsc_core::nn::{evaluate_loss, read_checkpoint, write_checkpoint, TrainConfig, TrainReport};
use swarmtsc_core::sim::{EngagementConfig, TacticLabel};

use crate::args::{BuildArgs, EvaluateArgs, OpeningArgs, PcaArgs, SimulateArgs, SweepArgs, TrainArgs, TrainOpts};
use crate::error::CliError;
use crate::manifest::Record;

type Result<T> = std::result::Result<T, CliError>;

fn required<T: Clone>(value: &Option<T>, flag: &str) -> Result<T> {
    value
        .clone()
        .ok_or_else(|| CliError::Usage(format!("--{flag} is required")))
}

fn parse_list<T: FromStr<Err = swarmtsc_core::Error>>(s: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse::<T>().map_err(CliError::from))
        .collect()
}

fn parse_numbers<T: FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            p.parse::<T>()
                .map_err(|_| CliError::Usage(format!("bad {what} value '{p}'")))
        })
        .collect()
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn open(path: &Path, rec: &mut Record) -> Result<BufReader<File>> {
    rec.input(path);
    File::open(path).map(BufReader::new).map_err(|e| CliError::io(path, e))
}

fn write_file(path: &Path, rec: &mut Record, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    rec.output(path);
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w)?;
    w.flush().map_err(|e| CliError::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, rec: &mut Record, value: &T) -> Result<()> {
    write_file(path, rec, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        w.write_all(b"\n").map_err(|e| CliError::io(path, e))
    })
}

fn read_trajectories(paths: &[PathBuf], rec: &mut Record) -> Result<TrajectoryBatch> {
    let mut batches = Vec::with_capacity(paths.len());
    for p in paths {
        batches.push(TrajectoryBatch::read(open(p, rec)?)?);
    }
    Ok(TrajectoryBatch::merge(batches)?)
}

fn fill_train_opts(o: &mut TrainOpts) {
    let d = TrainConfig::default();
    o.epochs.get_or_insert(d.max_epochs);
    o.lr.get_or_insert(d.learning_rate);
    o.batch_size.get_or_insert(d.batch_size);
    o.patience.get_or_insert(d.patience);
    o.momentum.get_or_insert(d.momentum);
}

fn train_config(o: &TrainOpts, seed: u64) -> TrainConfig {
    let d = TrainConfig::default();
    TrainConfig {
        learning_rate: o.lr.unwrap_or(d.learning_rate),
        batch_size: o.batch_size.unwrap_or(d.batch_size),
        max_epochs: o.epochs.unwrap_or(d.max_epochs),
        patience: o.patience.unwrap_or(d.patience),
        momentum: o.momentum.unwrap_or(d.momentum),
        loss_weights: d.loss_weights,
        seed,
    }
}

pub fn simulate(mut a: SimulateArgs, rec: &mut Record) -> Result<()> {
    let defaults = EngagementConfig::default();
    let tactic = a.tactic.get_or_insert_with(|| "all".into()).clone();
    let na = *a.na.get_or_insert(defaults.n_attackers);
    let nd = *a.nd.get_or_insert(defaults.n_defenders);
    let instances = *a.instances.get_or_insert(1200);
    let seed = *a.seed.get_or_insert(0);
    let max_steps = *a.max_steps.get_or_insert(defaults.max_steps);
    let out = a.out.get_or_insert_with(|| "trajectories.swrm".into()).clone();
    rec.begin(&a, &out)?;

    let tactics = if tactic.eq_ignore_ascii_case("all") {
        TacticLabel::ALL.to_vec()
    } else {
        parse_list::<TacticLabel>(&tactic)?
    };
    if tactics.is_empty() || instances == 0 {
        return Err(CliError::Usage("need at least one tactic and one instance".into()));
    }
    let mut base = defaults.with_size(na, nd);
    base.max_steps = max_steps;
    let batch = generate_batch(&base, &tactics, instances, seed)?;
    let truncated = batch.records.iter().filter(|r| r.truncated).count();
    if truncated > 0 {
        warn!("{truncated} engagements hit the {max_steps}-step cap");
    }
    write_file(&out, rec, |w| Ok(batch.write(w)?))?;
    info!("wrote {} trajectories to {}", batch.records.len(), out.display());
    Ok(())
}

fn dataset_config(window: &str, noise: f64, protocol: &str, seed: u64) -> Result<DatasetConfig> {
    let noise_protocol = match protocol {
        "matched" => NoiseProtocol::Matched,
        "clean-train" => NoiseProtocol::CleanTrain,
        other => return Err(CliError::Usage(format!("unknown noise protocol '{other}'"))),
    };
    Ok(DatasetConfig {
        window: window.parse()?,
        noise_factor: noise,
        noise_protocol,
        split: SplitSpec::default(),
        seed,
    })
}

pub fn build(mut a: BuildArgs, rec: &mut Record) -> Result<()> {
    let window = a.window.get_or_insert_with(|| "full".into()).clone();
    let noise = *a.noise_factor.get_or_insert(0.0);
    let protocol = a.noise_protocol.get_or_insert_with(|| "matched".into()).clone();
    let seed = *a.seed.get_or_insert(0);
    let out = a.out.get_or_insert_with(|| "dataset.swrm".into()).clone();
    rec.begin(&a, &out)?;
    if a.inputs.is_empty() {
        return Err(CliError::Usage("--in is required".into()));
    }
    let cfg = dataset_config(&window, noise, &protocol, seed)?;
    let batch = read_trajectories(&a.inputs, rec)?;
    let ds = build_dataset(&batch, &cfg)?;
    info!(
        "{} instances, window {} of {} steps (mean engagement {:.1}), splits {}/{}/{}",
        ds.tactics.len(),
        ds.time(),
        ds.truncation.min_len,
        ds.truncation.mean_len,
        ds.splits.train.len(),
        ds.splits.val.len(),
        ds.splits.test.len()
    );
    write_file(&out, rec, |w| Ok(ds.write(w)?))
}

#[derive(Serialize)]
struct TrainOutput<'a> {
    model: String,
    params: usize,
    time: usize,
    features: usize,
    dataset: &'a DatasetConfig,
    train: TrainReport,
    test: MetricsReport,
}

pub fn train(mut a: TrainArgs, rec: &mut Record) -> Result<()> {
    let model = a.model.get_or_insert_with(|| "cnn".into()).clone();
    let output = a.output.get_or_insert_with(|| "mh".into()).clone();
    let seed = *a.seed.get_or_insert(0);
    let noise = *a.noise_factor.get_or_insert(0.0);
    fill_train_opts(&mut a.train);
    let timing = *a.timing.get_or_insert(false);
    let out = a.out.get_or_insert_with(|| "model.ckpt".into()).clone();
    let report_path = a
        .report
        .get_or_insert_with(|| with_suffix(&out, ".report.json"))
        .clone();
    rec.begin(&a, &out)?;

    let entry = ModelEntry::new(model.parse()?, output.parse()?);
    let data = required(&a.data, "data")?;
    let kind = container_kind(open(&data, rec)?)?;
    let ds = match kind.as_str() {
        "dataset" => {
            let ds = Dataset::read(open(&data, rec)?)?;
            if let Some(w) = &a.window {
                if w.parse::<Window>()? != ds.config.window {
                    return Err(CliError::Usage(format!(
                        "dataset was built with window {}, not {w}",
                        ds.config.window
                    )));
                }
            }
            ds
        }
        "trajectories" => {
            let window = a.window.clone().unwrap_or_else(|| "full".into());
            let batch = TrajectoryBatch::read(open(&data, rec)?)?;
            build_dataset(&batch, &dataset_config(&window, noise, "matched", seed)?)?
        }
        other => {
            return Err(CliError::Core(swarmtsc_core::Error::Format(format!(
                "cannot train on '{other}'"
            ))))
        }
    };

    let cfg = train_config(&a.train, seed);
    let mut fitted = fit_and_score(entry, &ds, &cfg)?;
    if !timing {
        fitted.train.seconds = 0.0;
    }
    if let Some(t) = fitted.test.tactic {
        info!("{entry}: test tactic accuracy {:.4}", t.accuracy);
    }
    write_file(&out, rec, |w| {
        Ok(write_checkpoint(w, &fitted.model, Some(&cfg), Some(&ds.norm))?)
    })?;
    let report = TrainOutput {
        model: entry.to_string(),
        params: fitted.model.param_count(),
        time: ds.time(),
        features: ds.features.features(),
        dataset: &ds.config,
        train: fitted.train,
        test: fitted.test,
    };
    write_json(&report_path, rec, &report)
}

#[derive(Serialize)]
struct EvalOutput {
    model: String,
    split: &'static str,
    val_loss: f64,
    test: MetricsReport,
}

pub fn evaluate_cmd(mut a: EvaluateArgs, rec: &mut Record) -> Result<()> {
    let ckpt = required(&a.model_ckpt, "model-ckpt")?;
    let out = a.out.get_or_insert_with(|| with_suffix(&ckpt, ".eval.json")).clone();
    rec.begin(&a, &out)?;
    let data = required(&a.data, "data")?;
    let (model, header) = read_checkpoint(open(&ckpt, rec)?)?;
    let ds = Dataset::read(open(&data, rec)?)?;
    if header.norm.as_ref().is_some_and(|n| *n != ds.norm) {
        warn!("dataset normalization differs from the one the model was trained with");
    }
    let weights = header.train_config.map(|c| c.loss_weights).unwrap_or_default();
    let val_loss = evaluate_loss(&model, &ds.split(SplitName::Val), &weights)?.combined;
    let test = evaluate(&model, &ds.split(SplitName::Test))?;
    let entry = ModelEntry::new(model.spec.arch, model.spec.output);
    for (name, head) in [("tactic", test.tactic), ("comms", test.comms), ("pronav", test.pronav)] {
        if let Some(h) = head {
            println!(
                "{entry} {name}: accuracy {:.4} adjusted {:.4} ner {:.4}",
                h.accuracy, h.adjusted, h.normalized_error
            );
        }
    }
    write_json(
        &out,
        rec,
        &EvalOutput {
            model: entry.to_string(),
            split: "test",
            val_loss,
            test,
        },
    )
}

pub fn sweep(mut a: SweepArgs, rec: &mut Record) -> Result<()> {
    let kind = required(&a.kind, "kind")?;
    let models = a.models.get_or_insert_with(|| "cnn-mh,fcn-mh".into()).clone();
    let seed = *a.seed.get_or_insert(0);
    let window = a.window.get_or_insert_with(|| "full".into()).clone();
    fill_train_opts(&mut a.train);
    let timing = *a.timing.get_or_insert(false);
    match kind.as_str() {
        "window" => {
            a.windows.get_or_insert_with(|| "20,full".into());
        }
        "noise" => {
            a.factors.get_or_insert_with(|| "0,10,20,30,40,50".into());
        }
        "size" => {
            a.sizes.get_or_insert_with(|| "10,25,50".into());
            a.large.get_or_insert(false);
            a.instances.get_or_insert(1200);
        }
        other => return Err(CliError::Usage(format!("unknown sweep kind '{other}'"))),
    }
    let out = a.out.get_or_insert_with(|| format!("{kind}.csv").into()).clone();
    rec.begin(&a, &out)?;

    let models = parse_list::<ModelEntry>(&models)?;
    let cfg = train_config(&a.train, seed);
    let base = dataset_config(&window, 0.0, "matched", seed)?;
    let mut result: SweepResult = match kind.as_str() {
        "window" => {
            let windows = parse_list::<Window>(a.windows.as_deref().unwrap_or_default())?;
            let batch = read_trajectories(&[required(&a.data, "data")?], rec)?;
            sweep_window(&models, &batch, &base, &windows, &cfg)?
        }
        "noise" => {
            let factors = parse_numbers::<f64>(a.factors.as_deref().unwrap_or_default(), "factor")?;
            let batch = read_trajectories(&[required(&a.data, "data")?], rec)?;
            sweep_noise(&models, &batch, &base, &factors, &cfg)?
        }
        _ => {
            let mut sizes = parse_numbers::<usize>(a.sizes.as_deref().unwrap_or_default(), "size")?;
            if a.large == Some(true) {
                for extra in [75, 100] {
                    if !sizes.contains(&extra) {
                        sizes.push(extra);
                    }
                }
            }
            let instances = a.instances.unwrap_or(1200);
            sweep_swarmsize(
                &models,
                &sizes,
                &EngagementConfig::default(),
                instances,
                seed,
                &base,
                &cfg,
            )?
        }
    };
    if !timing {
        result.seconds = 0.0;
        for c in &mut result.cells {
            c.seconds = 0.0;
        }
    }
    write_file(&out, rec, |w| Ok(result.write_csv(w, timing)?))?;
    write_json(&with_suffix(&out, ".json"), rec, &result)
}

pub fn opening_cmd(mut a: OpeningArgs, rec: &mut Record) -> Result<()> {
    let seed = *a.seed.get_or_insert(0);
    let defaults = EngagementConfig::default();
    let na = *a.na.get_or_insert(defaults.n_attackers);
    let nd = *a.nd.get_or_insert(defaults.n_defenders);
    let out = a.out.get_or_insert_with(|| "opening.csv".into()).clone();
    let checks = a.checks.get_or_insert_with(|| out.with_extension("checks.csv")).clone();
    rec.begin(&a, &out)?;
    let f = opening_moves(&defaults.with_size(na, nd).with_seed(seed))?;
    for c in &f.checks {
        println!(
            "{}: {} attackers off their nearest defender, {} duplicated targets at step 0",
            c.tactic, c.nearest_mismatches, c.duplicated_targets
        );
    }
    write_file(&out, rec, |w| Ok(f.write_csv(w)?))?;
    write_file(&checks, rec, |w| Ok(f.write_checks_csv(w)?))
}

pub fn pca_cmd(mut a: PcaArgs, rec: &mut Record) -> Result<()> {
    let k = *a.k.get_or_insert(2);
    let out = a.out.get_or_insert_with(|| "pca.csv".into()).clone();
    rec.begin(&a, &out)?;
    if !(2..=3).contains(&k) {
        return Err(CliError::Usage("--k must be 2 or 3".into()));
    }
    let data = required(&a.data, "data")?;
    let ds = Dataset::read(open(&data, rec)?)?;
    let p = pca_project(flatten_rows(&ds.features).view(), k)?;
    let ratios = p.explained_ratio();
    println!("explained variance ratio: {ratios:?}");
    let t = ds.time();
    write_file(&out, rec, |w| {
        let mut csv = csv::Writer::from_writer(w);
        let mut header = vec!["instance".to_string(), "step".into(), "tactic".into()];
        header.extend((1..=k).map(|c| format!("pc{c}")));
        csv.write_record(&header)?;
        for (row, point) in p.projected.outer_iter().enumerate() {
            let mut rec = vec![
                (row / t).to_string(),
                (row % t).to_string(),
                ds.tactics[row / t].to_string(),
            ];
            rec.extend(point.iter().map(|v| v.to_string()));
            csv.write_record(&rec)?;
        }
        csv.flush().map_err(|e| CliError::io(&out, e))
    })
}
