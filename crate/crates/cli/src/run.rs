//! Executes a validated scenario and writes its artifacts.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use qpathnet::classical::{classical_mean, classical_sample, ClassicalNetwork, ClassicalPath};
use qpathnet::meter::{joint_reading_distribution, reading_distribution, weak_limit_sweep, Grid, PointerDistribution};
use qpathnet::paths::{amplitude_distribution, DEFAULT_MERGE_TOL};
use qpathnet::sampling::{sample_trials, write_trials_csv, SampleSummary};

use crate::config::{Mode, Scenario};

pub const DEFAULT_TRIALS: u64 = 100_000;

#[derive(Debug)]
pub enum RunError {
    Engine(qpathnet::Error),
    Io { path: PathBuf, source: std::io::Error },
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Engine(e) => write!(f, "{e}"),
            RunError::Io { path, source } => write!(f, "{}: {source}", path.display()),
        }
    }
}

impl std::error::Error for RunError {}

impl From<qpathnet::Error> for RunError {
    fn from(e: qpathnet::Error) -> Self {
        RunError::Engine(e)
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<(), RunError> {
    let mut w = BufWriter::new(File::create(path).map_err(io_err(path))?);
    f(&mut w).and_then(|_| w.flush()).map_err(io_err(path))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), RunError> {
    write_file(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)
    })
}

/// Files written by one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
}

pub fn run(scenario: &Scenario, out: &Path) -> Result<RunOutput, RunError> {
    fs::create_dir_all(out).map_err(io_err(out))?;
    match scenario.run.mode {
        Mode::Exact => run_exact(scenario, out),
        Mode::Sweep => run_sweep(scenario, out),
        Mode::Sample => run_sample(scenario, out),
        Mode::Classical => run_classical(scenario, out),
    }
}

fn grids(s: &Scenario) -> Result<Vec<Grid>, RunError> {
    Ok(s.meters
        .iter()
        .map(|m| m.default_grid(&s.chain, &s.run.grid))
        .collect::<qpathnet::Result<_>>()?)
}

fn pair(z: qpathnet::quantum::C64) -> [f64; 2] {
    [z.re, z.im]
}

fn run_exact(s: &Scenario, out: &Path) -> Result<RunOutput, RunError> {
    let grids = grids(s)?;
    let chain = &s.chain;
    let mut files = Vec::new();

    let marginals: Vec<PointerDistribution> = if s.meters.len() == 1 {
        vec![reading_distribution(chain, &s.meters[0], &grids[0])?]
    } else {
        let joint = joint_reading_distribution(chain, &s.meters, &grids)?;
        (0..s.meters.len())
            .map(|r| joint.marginal(r))
            .collect::<qpathnet::Result<_>>()?
    };

    let mut meters = Vec::new();
    let mut weak_marginals = Vec::new();
    for (k, (m, p)) in s.meters.iter().zip(&marginals).enumerate() {
        let dist = amplitude_distribution(chain, &m.functional, DEFAULT_MERGE_TOL)?;
        let weak = dist.weak_value()?;
        weak_marginals.push(weak.re);
        let relative: Vec<[f64; 3]> = dist
            .relative_amplitudes()?
            .into_iter()
            .map(|(f, a)| [f, a.re, a.im])
            .collect();
        meters.push(json!({
            "functional": s.meter_functionals[k],
            "profile": m.profile,
            "weak_value": pair(weak),
            "strong_mean": dist.strong_mean()?,
            "strong_bins": dist.strong_bins(),
            "relative_amplitudes": relative,
            "mean_reading": p.mean()?,
            "norm": p.norm,
            "grid": p.grid,
        }));

        let stem = if s.meters.len() == 1 { "distribution".to_string() } else { format!("distribution_{}", k + 1) };
        let csv = out.join(format!("{stem}.csv"));
        write_file(&csv, |w| p.write_csv(w))?;
        files.push(csv);
        let js = out.join(format!("{stem}.json"));
        write_json(&js, p)?;
        files.push(js);
    }
    let summary = json!({
        "name": s.name,
        "mode": "exact",
        "dim": chain.dim(),
        "success_probability": chain.transition_amplitude().norm_sqr(),
        "transition_amplitude": pair(chain.transition_amplitude()),
        "weak_marginals": weak_marginals,
        "meters": meters,
    });
    let path = out.join("summary.json");
    write_json(&path, &summary)?;
    files.push(path);
    Ok(RunOutput { files })
}

fn run_sweep(s: &Scenario, out: &Path) -> Result<RunOutput, RunError> {
    let k = s.run.meter;
    let meter = &s.meters[k];
    let dist = amplitude_distribution(&s.chain, &meter.functional, DEFAULT_MERGE_TOL)?;
    let report = weak_limit_sweep(&dist, &s.run.widths, &s.run.grid)?;
    let csv = out.join("sweep.csv");
    write_file(&csv, |w| {
        writeln!(w, "width,mean,abs_error")?;
        for r in &report.rows {
            writeln!(w, "{},{},{}", r.width, r.mean, r.error)?;
        }
        Ok(())
    })?;
    let relative = if report.limit != 0.0 { Some(report.final_error / report.limit.abs()) } else { None };
    let summary = json!({
        "name": s.name,
        "mode": "sweep",
        "dim": s.chain.dim(),
        "meter": k,
        "functional": s.meter_functionals[k],
        "weak_value": pair(report.weak_value),
        "limit": report.limit,
        "monotone": report.monotone,
        "final_error": report.final_error,
        "final_relative_error": relative,
        "rows": report.rows,
    });
    let path = out.join("summary.json");
    write_json(&path, &summary)?;
    Ok(RunOutput { files: vec![csv, path] })
}

fn run_sample(s: &Scenario, out: &Path) -> Result<RunOutput, RunError> {
    let grids = grids(s)?;
    let trials = s.run.trials.unwrap_or(DEFAULT_TRIALS);
    let seed = s.run.seed.unwrap_or(0);
    let result = sample_trials(&s.chain, &s.meters, &grids, trials, seed)?;
    let csv = out.join("trials.csv");
    write_file(&csv, |w| write_trials_csv(&result.records, w))?;
    #[derive(Serialize)]
    struct Summary<'a> {
        name: &'a str,
        mode: &'static str,
        dim: usize,
        functionals: &'a [String],
        #[serde(flatten)]
        stats: &'a SampleSummary,
    }
    let path = out.join("summary.json");
    write_json(
        &path,
        &Summary {
            name: &s.name,
            mode: "sample",
            dim: s.chain.dim(),
            functionals: &s.meter_functionals,
            stats: &result.summary,
        },
    )?;
    Ok(RunOutput { files: vec![csv, path] })
}

/// Values of every named functional on each classical path.
fn classical_values(s: &Scenario, net: &ClassicalNetwork, paths: &[ClassicalPath], derived: bool) -> Result<(Vec<String>, Vec<Vec<f64>>), RunError> {
    if derived {
        let (dim, steps) = (s.chain.dim(), s.chain.step_count());
        let mut columns = Vec::new();
        for f in &s.functionals {
            let values = f.values(&s.chain)?;
            columns.push(
                paths
                    .iter()
                    .map(|p| {
                        let flat = p.hops[..steps].iter().fold(0, |acc, h| acc * dim + h.outlet);
                        values[flat]
                    })
                    .collect(),
            );
        }
        return Ok((s.functional_names.clone(), columns));
    }
    let spec = s.classical.as_ref().expect("custom networks come from the config");
    let mut names = Vec::new();
    let mut columns = Vec::new();
    for (name, terms) in &spec.functionals {
        let col = paths
            .iter()
            .map(|p| {
                let v = p.connector_values(net);
                terms
                    .iter()
                    .map(|&(k, w)| {
                        v.get(k).map(|x| w * x).ok_or_else(|| {
                            qpathnet::Error::InvalidFunctional(format!(
                                "functional `{name}` reads valued connector {k}, path `{}` passes only {}",
                                p.describe(net),
                                v.len()
                            ))
                        })
                    })
                    .sum::<qpathnet::Result<f64>>()
            })
            .collect::<qpathnet::Result<Vec<f64>>>()?;
        names.push(name.clone());
        columns.push(col);
    }
    Ok((names, columns))
}

fn run_classical(s: &Scenario, out: &Path) -> Result<RunOutput, RunError> {
    let (net, derived) = match &s.classical {
        Some(c) => (ClassicalNetwork::new(c.network.clone())?, false),
        None => (ClassicalNetwork::from_chain(&s.chain)?, true),
    };
    let paths = net.paths();
    let (names, columns) = classical_values(s, &net, &paths, derived)?;
    let sample = match s.run.trials {
        Some(n) => Some(classical_sample(&net, n, s.run.seed.unwrap_or(0))?),
        None => None,
    };

    let csv = out.join("paths.csv");
    write_file(&csv, |w| {
        write!(w, "path,route,receptacle,probability")?;
        if sample.is_some() {
            write!(w, ",frequency")?;
        }
        for n in &names {
            write!(w, ",{n}")?;
        }
        writeln!(w)?;
        let freqs = sample.as_ref().map(|s| s.frequencies());
        for (i, p) in paths.iter().enumerate() {
            write!(w, "{},{},{},{}", i + 1, p.describe(&net), p.receptacle, p.probability)?;
            if let Some(f) = &freqs {
                write!(w, ",{}", f[i])?;
            }
            for col in &columns {
                write!(w, ",{}", col[i])?;
            }
            writeln!(w)?;
        }
        Ok(())
    })?;

    let receptacles = net.receptacles();
    let mut probabilities = serde_json::Map::new();
    for r in receptacles {
        let p: f64 = paths.iter().filter(|p| &p.receptacle == r).map(|p| p.probability).sum();
        probabilities.insert(r.clone(), json!(p));
    }
    let mut means = serde_json::Map::new();
    let mut sampled = serde_json::Map::new();
    for (name, col) in names.iter().zip(&columns) {
        let mut per = serde_json::Map::new();
        let mut per_sampled = serde_json::Map::new();
        let all: Vec<&str> = receptacles.iter().map(String::as_str).collect();
        let mut conditions: Vec<(String, Vec<&str>)> = all.iter().map(|r| (r.to_string(), vec![*r])).collect();
        conditions.push(("all".into(), all.clone()));
        for (label, cond) in &conditions {
            let mean = match classical_mean(&paths, col, cond) {
                Ok(m) => Value::from(m),
                Err(qpathnet::Error::ZeroConditionalProbability) => Value::Null,
                Err(e) => return Err(e.into()),
            };
            per.insert(label.clone(), mean);
            if let Some(smp) = &sample {
                let v = match smp.conditional_mean(&paths, col, cond) {
                    Ok((m, se)) => json!({"mean": m, "se": se}),
                    Err(_) => Value::Null,
                };
                per_sampled.insert(label.clone(), v);
            }
        }
        means.insert(name.clone(), Value::Object(per));
        if sample.is_some() {
            sampled.insert(name.clone(), Value::Object(per_sampled));
        }
    }
    let mut summary = json!({
        "name": s.name,
        "mode": "classical",
        "dim": s.chain.dim(),
        "derived_from_chain": derived,
        "receptacle_probabilities": probabilities,
        "means": means,
    });
    if derived {
        // post-selected quantum strong means for comparison with the f1 column
        let mut quantum = serde_json::Map::new();
        for (name, f) in s.functional_names.iter().zip(&s.functionals) {
            let m = amplitude_distribution(&s.chain, f, DEFAULT_MERGE_TOL)?.strong_mean().ok();
            quantum.insert(name.clone(), json!(m));
        }
        summary["quantum_strong_means"] = Value::Object(quantum);
    }
    if let Some(smp) = &sample {
        summary["trials"] = json!(smp.trials);
        summary["seed"] = json!(smp.seed);
        summary["sampled_means"] = Value::Object(sampled);
    }
    let path = out.join("means.json");
    write_json(&path, &summary)?;
    Ok(RunOutput { files: vec![csv, path] })
}
