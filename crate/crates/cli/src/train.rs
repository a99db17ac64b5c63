use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use log::warn;
use serde::Serialize;
use spectra_core::models::{save_checkpoint, CheckpointHeader};
use spectra_core::tasks::{
    feature_sweep, hyperparameter_grid, load_dataset, run_experiment, DataSource, EpochRecord,
    ExperimentConfig, ExperimentReport, MeanStd, RunResult, TaskKind,
};

use crate::error::CliError;
use crate::io::{create_dir, digest_file, to_json, write_text};
use crate::{GridArgs, SweepArgs, TrainArgs};

/// Reads a config, applies overrides and resolves relative data paths
/// against the config's directory.
fn load_config(path: &Path, overrides: &[String]) -> Result<ExperimentConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::read(path, e))?;
    let mut config = ExperimentConfig::from_json_with_overrides(&text, overrides)?;
    let base = path.parent().unwrap_or(Path::new(""));
    if let DataSource::EdgeList { path, labels, .. } = &mut config.data {
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(path);
        if let Some(l) = labels {
            resolve(l);
        }
    }
    for w in config.range_warnings() {
        warn!("{w}");
    }
    Ok(config)
}

fn unix_seconds() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

#[derive(Serialize)]
struct Manifest<'a> {
    toolkit_version: &'static str,
    seed: u64,
    config: &'a ExperimentConfig,
    /// 64-bit FNV-1a digests of every input file, keyed by path.
    input_digests: BTreeMap<String, String>,
    started_unix: u64,
    finished_unix: u64,
}

fn input_digests(
    config_path: &Path,
    config: &ExperimentConfig,
) -> Result<BTreeMap<String, String>, CliError> {
    let mut files = vec![config_path.to_path_buf()];
    if let DataSource::EdgeList { path, labels, .. } = &config.data {
        files.push(path.clone());
        files.extend(labels.clone());
    }
    files
        .iter()
        .map(|p| Ok((p.display().to_string(), digest_file(p)?)))
        .collect()
}

#[derive(Serialize)]
struct Summary<'a> {
    task: &'static str,
    model: &'static str,
    seed: u64,
    n_repeats: usize,
    in_dim: usize,
    out_dim: usize,
    summary: &'a BTreeMap<String, MeanStd>,
    runs: &'a [RunResult],
}

#[derive(Serialize)]
struct EpochLine<'a> {
    repeat: usize,
    #[serde(flatten)]
    record: &'a EpochRecord,
}

fn epochs_jsonl(report: &ExperimentReport) -> String {
    let mut s = String::new();
    for run in &report.runs {
        for record in &run.curve {
            s.push_str(
                &serde_json::to_string(&EpochLine {
                    repeat: run.repeat,
                    record,
                })
                .expect("serializable"),
            );
            s.push('\n');
        }
    }
    s
}

fn runs_csv(report: &ExperimentReport) -> String {
    let keys: Vec<&String> = report.summary.keys().collect();
    let mut s = String::from("repeat,seed,selected_epoch,val_metric");
    for k in &keys {
        write!(s, ",{k}").expect("string write");
    }
    s.push('\n');
    for r in &report.runs {
        write!(
            s,
            "{},{},{},{}",
            r.repeat, r.seed, r.selected_epoch, r.val_metric
        )
        .expect("string write");
        for k in &keys {
            write!(s, ",{}", r.metrics.get(*k).copied().unwrap_or(f64::NAN)).expect("string write");
        }
        s.push('\n');
    }
    s
}

/// Weights of the run with the best validation metric (first on ties).
fn best_run(report: &ExperimentReport) -> Option<&RunResult> {
    report
        .runs
        .iter()
        .filter(|r| !r.params.is_empty())
        .fold(None, |best: Option<&RunResult>, r| match best {
            Some(b) if r.val_metric.partial_cmp(&b.val_metric) != Some(Ordering::Greater) => {
                Some(b)
            }
            _ => Some(r),
        })
}

pub fn train(a: &TrainArgs) -> Result<(), CliError> {
    let started = unix_seconds();
    let config = load_config(&a.config, &a.overrides)?;
    let digests = input_digests(&a.config, &config)?;
    let data = load_dataset(&config.data)?;
    let report = run_experiment(&data, &config)?;
    create_dir(&a.out)?;

    let summary = Summary {
        task: report.task.name(),
        model: report.model.name(),
        seed: config.seed,
        n_repeats: report.n_repeats,
        in_dim: report.in_dim,
        out_dim: report.out_dim,
        summary: &report.summary,
        runs: &report.runs,
    };
    write_text(&a.out.join("summary.json"), &to_json(&summary))?;
    write_text(&a.out.join("epochs.jsonl"), &epochs_jsonl(&report))?;
    write_text(&a.out.join("runs.csv"), &runs_csv(&report))?;
    if let Some(run) = best_run(&report).filter(|_| config.task != TaskKind::Cluster) {
        let header = CheckpointHeader {
            model: config.model.clone(),
            in_dim: report.in_dim,
            out_dim: report.out_dim,
            seed: run.seed,
            task: report.task.name().to_string(),
        };
        let path = a.out.join("checkpoint.spck");
        let file = File::create(&path).map_err(|e| CliError::write(&path, e))?;
        save_checkpoint(BufWriter::new(file), &header, &run.params)?;
    }
    let manifest = Manifest {
        toolkit_version: env!("CARGO_PKG_VERSION"),
        seed: config.seed,
        config: &config,
        input_digests: digests,
        started_unix: started,
        finished_unix: unix_seconds(),
    };
    write_text(&a.out.join("manifest.json"), &to_json(&manifest))?;
    for (metric, ms) in &report.summary {
        println!("{metric}: {:.4} ± {:.4}", ms.mean, ms.std);
    }
    Ok(())
}

pub fn sweep(a: &SweepArgs) -> Result<(), CliError> {
    let config = load_config(&a.config, &a.overrides)?;
    if config.task == TaskKind::Cluster {
        return Err(CliError::domain(
            "the clustering task has no feature dimension",
        ));
    }
    let data = load_dataset(&config.data)?;
    let points = feature_sweep(&data, &config, &a.dims)?;
    let mut csv = String::from("feature_dim,metric,mean,std\n");
    for p in &points {
        for (metric, ms) in &p.summary {
            writeln!(csv, "{},{metric},{},{}", p.feature_dim, ms.mean, ms.std)
                .expect("string write");
        }
    }
    create_dir(&a.out)?;
    write_text(&a.out.join("sweep.csv"), &csv)?;
    write_text(&a.out.join("sweep.json"), &to_json(&points))
}

pub fn grid(a: &GridArgs) -> Result<(), CliError> {
    let config = load_config(&a.config, &a.overrides)?;
    let data = load_dataset(&config.data)?;
    let result = hyperparameter_grid(&data, &config, &a.lrs, &a.wds)?;
    let mut csv = String::from("lr,weight_decay,val_mean,val_std\n");
    for p in &result.points {
        writeln!(
            csv,
            "{},{},{},{}",
            p.lr, p.weight_decay, p.validation.mean, p.validation.std
        )
        .expect("string write");
    }
    create_dir(&a.out)?;
    write_text(&a.out.join("grid.csv"), &csv)?;
    write_text(&a.out.join("grid.json"), &to_json(&result))?;
    println!(
        "best lr {} weight_decay {}",
        result.best_lr, result.best_weight_decay
    );
    Ok(())
}
