use std::fs;
use std::path::Path;
use std::process::Command;

use crate::Verdict;

const CONFIGS: &[(&str, &str)] = &[
    (
        "nodeclass-sgcn2",
        r#"{"model": {"model": "sgcn2", "hidden_dim": 8}, "data": {"ssbm": {"nodes_per_cluster": 100, "p_intra": 0.08, "p_inter": 0.04, "seed": 3}},
            "features": "one_hot", "known_per_class": 2, "epochs": 40, "n_repeats": 3, "seed": 11}"#,
    ),
    (
        "linksign-sgcn1",
        r#"{"model": {"model": "sgcn1", "hidden_dim": 8}, "task": "linksign", "data": {"ssbm": {"nodes_per_cluster": 60, "p_intra": 0.15, "p_inter": 0.08, "directed": true}},
            "feature_dim": 8, "epochs": 30, "n_repeats": 2, "seed": 5}"#,
    ),
    (
        "nodeclass-magnet",
        r#"{"model": {"model": "magnet", "hidden_dim": 8, "q": 0.1}, "data": {"ssbm": {"nodes_per_cluster": 80, "p_intra": 0.1, "p_inter": 0.05, "directed": true}},
            "feature_dim": 16, "epochs": 30, "n_repeats": 2}"#,
    ),
];

const OUTPUTS: &[&str] = &[
    "summary.json",
    "runs.csv",
    "epochs.jsonl",
    "checkpoint.spck",
];

fn train(config: &Path, out: &Path, threads: &str) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_spectra"))
        .args(["train", "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .env("SPECTRA_THREADS", threads)
        .output()
        .map_err(|e| e.to_string())?;
    if status.status.success() {
        Ok(())
    } else {
        Err(format!(
            "spectra train failed: {}",
            String::from_utf8_lossy(&status.stderr)
        ))
    }
}

fn compare(name: &str, text: &str, dir: &Path) -> Result<(), String> {
    let config = dir.join(format!("{name}.json"));
    fs::write(&config, text).map_err(|e| e.to_string())?;
    let (a, b) = (dir.join(format!("{name}-a")), dir.join(format!("{name}-b")));
    train(&config, &a, "1")?;
    train(&config, &b, "2")?;
    for file in OUTPUTS {
        let read = |d: &Path| fs::read(d.join(file)).map_err(|e| format!("{name}/{file}: {e}"));
        if read(&a)? != read(&b)? {
            return Err(format!("{name}: {file} differs between runs"));
        }
    }
    Ok(())
}

pub fn train_twice() -> Verdict {
    let dir = tempfile::tempdir().expect("temporary directory");
    let failures: Vec<String> = CONFIGS
        .iter()
        .filter_map(|(name, text)| compare(name, text, dir.path()).err())
        .collect();
    if failures.is_empty() {
        Verdict::Pass(format!(
            "{} configs run twice (1 and 2 worker threads): {} byte-identical",
            CONFIGS.len(),
            OUTPUTS.join(", ")
        ))
    } else {
        Verdict::Fail(failures.join("; "))
    }
}
