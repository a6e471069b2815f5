use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use schedsim::experiments::{RunReport, Scenario};
use schedsim::queue_validator::{SimOutcome, SimSpec};

/// A CSV/JSONL row type; `HEADER` lets an empty CSV still carry its header.
pub trait Record: Serialize {
    const HEADER: &'static [&'static str];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Jsonl,
}

/// One row per sweep point, algorithm and scheduler. Schedulers are
/// numbered from 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioRecord {
    pub scenario: String,
    pub sweep_param: Option<&'static str>,
    pub sweep_value: Option<f64>,
    pub algorithm: &'static str,
    pub scheduler: usize,
    pub objective_value: f64,
    pub response_time: f64,
    pub fairness_index: f64,
    pub converged: bool,
    pub cycles_used: usize,
}

impl Record for ScenarioRecord {
    const HEADER: &'static [&'static str] = &[
        "scenario",
        "sweep_param",
        "sweep_value",
        "algorithm",
        "scheduler",
        "objective_value",
        "response_time",
        "fairness_index",
        "converged",
        "cycles_used",
    ];
}

pub fn scenario_records(report: &RunReport) -> Vec<ScenarioRecord> {
    let mut records = Vec::new();
    for alg in &report.algorithms {
        let Some(run) = &alg.run else { continue };
        for (i, s) in run.schedulers.iter().enumerate() {
            records.push(ScenarioRecord {
                scenario: report.label.clone(),
                sweep_param: report.point.map(|p| p.parameter.as_str()),
                sweep_value: report.point.map(|p| p.value),
                algorithm: alg.algorithm.as_str(),
                scheduler: i + 1,
                objective_value: s.objective,
                response_time: s.response_time,
                fairness_index: run.fairness.fi,
                converged: run.converged,
                cycles_used: run.cycles_used,
            });
        }
    }
    records
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueueRecord {
    pub lambda: f64,
    pub mu: f64,
    pub kind: String,
    pub jobs: usize,
    pub warmup: usize,
    pub seed: u64,
    pub analytic_mean: f64,
    pub empirical_mean: f64,
    pub std_error: f64,
    pub z_score: f64,
    pub rng: &'static str,
}

impl Record for QueueRecord {
    const HEADER: &'static [&'static str] = &[
        "lambda",
        "mu",
        "kind",
        "jobs",
        "warmup",
        "seed",
        "analytic_mean",
        "empirical_mean",
        "std_error",
        "z_score",
        "rng",
    ];
}

impl QueueRecord {
    pub fn new(spec: &SimSpec, analytic: f64, outcome: &SimOutcome) -> Self {
        Self {
            lambda: spec.lambda,
            mu: spec.mu,
            kind: spec.service.to_string(),
            jobs: spec.jobs,
            warmup: spec.warmup,
            seed: spec.seed,
            analytic_mean: analytic,
            empirical_mean: outcome.mean_sojourn,
            std_error: outcome.std_error,
            z_score: (outcome.mean_sojourn - analytic) / outcome.std_error,
            rng: outcome.rng,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ListRecord {
    pub name: String,
    pub nodes: usize,
    pub schedulers: usize,
    pub rho: f64,
    pub extension_nodes: usize,
    pub extension_schedulers: usize,
}

impl Record for ListRecord {
    const HEADER: &'static [&'static str] = &[
        "name",
        "nodes",
        "schedulers",
        "rho",
        "extension_nodes",
        "extension_schedulers",
    ];
}

impl ListRecord {
    pub fn new(s: &Scenario) -> Self {
        let ext = s.extension_tables();
        Self {
            name: s.label.clone(),
            nodes: s.mu.len(),
            schedulers: s.phi.len(),
            rho: s.rho,
            extension_nodes: ext.mu.len(),
            extension_schedulers: ext.phi.len(),
        }
    }
}

fn sink(out: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn write<T: Record>(out: Option<&Path>, format: Format, records: &[T]) -> io::Result<()> {
    let mut sink = sink(out)?;
    match format {
        Format::Csv => {
            let mut writer = csv::Writer::from_writer(&mut sink);
            if records.is_empty() {
                writer.write_record(T::HEADER)?;
            }
            for r in records {
                writer.serialize(r).map_err(io::Error::other)?;
            }
            writer.flush()?;
        }
        Format::Jsonl => {
            for r in records {
                serde_json::to_writer(&mut sink, r)?;
                sink.write_all(b"\n")?;
            }
        }
    }
    sink.flush()
}

pub fn write_text(out: Option<&Path>, text: &str) -> io::Result<()> {
    let mut sink = sink(out)?;
    sink.write_all(text.as_bytes())?;
    sink.flush()
}
