//! Acceptance suite: one `[PASS]`, `[FAIL]` or `[SKIP]` line per criterion.
//!
//! Pass criterion numbers as arguments to run a subset, e.g.
//! `cargo test -p spectra-cli --test acceptance -- 3 6`.

mod determinism;
mod experiments;
mod kernels;
mod models;
mod oracles;
mod spectral;

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

pub enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

/// `Pass` when `ok`, otherwise `Fail`, with the same detail either way.
pub fn verdict(ok: bool, detail: String) -> Verdict {
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

struct Criterion {
    id: u32,
    title: &'static str,
    budget: Option<Duration>,
    run: fn() -> Verdict,
}

const fn secs(s: u64) -> Option<Duration> {
    Some(Duration::from_secs(s))
}

const CRITERIA: &[Criterion] = &[
    Criterion {
        id: 1,
        title: "signed magnetic Laplacians are PSD",
        budget: secs(30),
        run: spectral::psd,
    },
    Criterion {
        id: 2,
        title: "normalized spectrum lies in [0, 2]",
        budget: secs(30),
        run: spectral::range,
    },
    Criterion {
        id: 3,
        title: "operator and model reductions",
        budget: None,
        run: spectral::reductions,
    },
    Criterion {
        id: 4,
        title: "gradients match finite differences",
        budget: secs(60),
        run: models::gradients,
    },
    Criterion {
        id: 5,
        title: "forward passes match dense oracles",
        budget: None,
        run: models::dense_oracles,
    },
    Criterion {
        id: 6,
        title: "algebraic identities",
        budget: None,
        run: models::identities,
    },
    Criterion {
        id: 7,
        title: "SSBM node classification",
        budget: secs(600),
        run: experiments::node_classification,
    },
    Criterion {
        id: 8,
        title: "directed SSBM clustering",
        budget: secs(60),
        run: experiments::clustering,
    },
    Criterion {
        id: 9,
        title: "Bitcoin-Alpha link sign prediction",
        budget: secs(1800),
        run: experiments::bitcoin_alpha,
    },
    Criterion {
        id: 10,
        title: "eigensolver and truncated SVD accuracy",
        budget: secs(60),
        run: kernels::kernels,
    },
    Criterion {
        id: 11,
        title: "train summaries are reproducible",
        budget: None,
        run: determinism::train_twice,
    },
];

fn main() -> ExitCode {
    let selected: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for c in CRITERIA
        .iter()
        .filter(|c| selected.is_empty() || selected.contains(&c.id))
    {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Verdict::Fail(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let outcome = match (outcome, c.budget) {
            (Verdict::Pass(d), Some(b)) if elapsed > b => Verdict::Fail(format!(
                "{d}; took {:.1}s, budget {}s",
                elapsed.as_secs_f64(),
                b.as_secs()
            )),
            (o, _) => o,
        };
        let (tag, detail) = match outcome {
            Verdict::Pass(d) => ("PASS", d),
            Verdict::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Verdict::Skip(d) => ("SKIP", d),
        };
        println!(
            "[{tag}] {:>2} {} ({:.1}s): {detail}",
            c.id,
            c.title,
            elapsed.as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
