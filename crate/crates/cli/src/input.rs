use std::path::Path;

use schedsim::experiments::{
    builtin_scenario, ExperimentError, Scenario, SweepSpec, BUILTIN_NAMES,
};
use schedsim::schedulers::Algorithm;

use crate::Exit;

/// Reads a scenario file, or falls back to a built-in of that name.
pub fn load_scenario(name: &str, algorithms: Option<&[Algorithm]>) -> Result<Scenario, Exit> {
    let path = Path::new(name);
    let scenario = if path.is_file() {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Exit::config(format!("cannot read {}: {e}", path.display())))?;
        let mut scenario = Scenario::from_json(&text).map_err(|e| experiment_exit(&e))?;
        if scenario.label.is_empty() {
            scenario.label = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
        }
        scenario
    } else if let Some(scenario) = builtin_scenario(name) {
        scenario
    } else {
        return Err(Exit::config(format!(
            "`{name}` is neither a readable scenario file nor a built-in ({})",
            BUILTIN_NAMES.join(", ")
        )));
    };
    Ok(match algorithms {
        Some(list) => scenario.with_algorithms(&dedup(list)),
        None => scenario,
    })
}

fn dedup(list: &[Algorithm]) -> Vec<Algorithm> {
    let mut out: Vec<Algorithm> = Vec::with_capacity(list.len());
    for &a in list {
        if !out.contains(&a) {
            out.push(a);
        }
    }
    out
}

pub fn experiment_exit(e: &ExperimentError) -> Exit {
    match e {
        ExperimentError::Infeasible(_) => Exit::new(Exit::INFEASIBLE, e.to_string()),
        _ => Exit::config(e.to_string()),
    }
}

pub fn check_scenario(scenario: &Scenario) -> Result<(), Exit> {
    scenario.validate().map_err(|e| experiment_exit(&e))
}

pub fn check_sweep(sweep: &SweepSpec) -> Result<(), Exit> {
    sweep.validate().map_err(|e| experiment_exit(&e))
}
