use std::path::Path;

use anyhow::{anyhow, bail, Context};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::commands::{solve_case, SolveFlags, SolveSummary, Status};
use crate::config::RunConfig;

pub const THREADS_ENV: &str = "DS_PAINLEVE_THREADS";

/// One swept field with its values.
#[derive(Clone, Debug, PartialEq)]
pub struct Axis {
    pub name: String,
    pub values: Vec<f64>,
}

const FIELDS: [&str; 8] = ["alpha0", "alpha1", "alpha3", "alpha4", "t0", "lambda0", "mu0", "t_end"];

fn apply(cfg: &mut RunConfig, name: &str, v: f64) {
    match name {
        "alpha0" => cfg.alphas[0] = v,
        "alpha1" => cfg.alphas[1] = v,
        "alpha3" => cfg.alphas[2] = v,
        "alpha4" => cfg.alphas[3] = v,
        "t0" => cfg.initial.t = v,
        "lambda0" => cfg.initial.lambda = v,
        "mu0" => cfg.initial.mu = v,
        "t_end" => cfg.t_end = v,
        _ => unreachable!("field names are validated when parsing"),
    }
}

/// `name=start:stop:count[,name=...]`; `count = 1` takes `start` alone.
pub fn parse_grid(spec: &str) -> anyhow::Result<Vec<Axis>> {
    let mut axes = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (name, range) = part.split_once('=').ok_or_else(|| anyhow!("`{part}`: expected name=start:stop:count"))?;
        if !FIELDS.contains(&name) {
            bail!("`{name}` cannot be swept; choose from {}", FIELDS.join(", "));
        }
        if axes.iter().any(|a: &Axis| a.name == name) {
            bail!("`{name}` appears twice");
        }
        let bits: Vec<&str> = range.split(':').collect();
        let [start, stop, count] = bits[..] else {
            bail!("`{part}`: expected name=start:stop:count");
        };
        let (start, stop): (f64, f64) = (start.parse()?, stop.parse()?);
        let count: usize = count.parse().with_context(|| format!("count in `{part}`"))?;
        if count == 0 {
            bail!("`{part}`: count must be positive");
        }
        let values = if count == 1 {
            vec![start]
        } else {
            (0..count).map(|k| start + (stop - start) * k as f64 / (count - 1) as f64).collect()
        };
        axes.push(Axis {
            name: name.to_string(),
            values,
        });
    }
    if axes.is_empty() {
        bail!("empty sweep specification");
    }
    Ok(axes)
}

/// Cartesian product, last axis fastest.
pub fn expand(base: &RunConfig, axes: &[Axis]) -> Vec<(Vec<f64>, RunConfig)> {
    let mut cases = vec![(Vec::new(), base.clone())];
    for axis in axes {
        cases = cases
            .into_iter()
            .flat_map(|(vals, cfg)| {
                axis.values.iter().map(move |&v| {
                    let mut c = cfg.clone();
                    apply(&mut c, &axis.name, v);
                    let mut vs = vals.clone();
                    vs.push(v);
                    (vs, c)
                })
            })
            .collect();
    }
    cases
}

pub fn thread_cap() -> anyhow::Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => {
            let n: usize = v.trim().parse().with_context(|| format!("{THREADS_ENV}={v}"))?;
            if n == 0 {
                bail!("{THREADS_ENV} must be at least 1");
            }
            Ok(Some(n))
        }
        Err(_) => Ok(None),
    }
}

#[derive(Serialize)]
struct IndexEntry {
    case: usize,
    values: serde_json::Map<String, serde_json::Value>,
    file: String,
    summary: Option<SolveSummary>,
    error: Option<String>,
}

/// Runs every grid point, writing `case-NNNN.<ext>` into `dir` and then
/// `index.json`.
pub fn run(base: &RunConfig, flags: SolveFlags, axes: &[Axis], dir: &Path) -> anyhow::Result<Status> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let cases = expand(base, axes);
    for (_, cfg) in &cases {
        cfg.validate()?;
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_cap()? {
        builder = builder.num_threads(n);
    }
    let pool = builder.build()?;
    let ext = base.format.extension();
    let results: Vec<IndexEntry> = pool.install(|| {
        cases
            .par_iter()
            .enumerate()
            .map(|(i, (vals, cfg))| {
                let file = format!("case-{i:04}.{ext}");
                let values = axes
                    .iter()
                    .zip(vals)
                    .map(|(a, v)| (a.name.clone(), json!(v)))
                    .collect();
                let outcome = solve_case(cfg, flags).and_then(|(table, summary)| {
                    let meta = json!({ "command": "solve", "case": i, "config": cfg, "summary": summary });
                    table.write(cfg.format, &meta, Some(&dir.join(&file)))?;
                    Ok(summary)
                });
                let (summary, error) = match outcome {
                    Ok(s) => (Some(s), None),
                    Err(e) => (None, Some(format!("{e:#}"))),
                };
                IndexEntry {
                    case: i,
                    values,
                    file,
                    summary,
                    error,
                }
            })
            .collect()
    });

    let mut status = Status::Ok;
    for r in &results {
        let s = match (&r.summary, &r.error) {
            (Some(s), _) => s.status,
            _ => Status::Failed,
        };
        eprintln!("case {:04}: {:?}{}", r.case, s, r.error.as_deref().map(|e| format!(" ({e})")).unwrap_or_default());
        status = status.max(s);
    }
    let index = json!({
        "axes": axes.iter().map(|a| json!({"name": a.name, "values": a.values})).collect::<Vec<_>>(),
        "cases": results,
    });
    let path = dir.join("index.json");
    std::fs::write(&path, serde_json::to_string_pretty(&index)? + "\n").with_context(|| format!("writing {}", path.display()))?;
    eprintln!("index: {}", path.display());
    Ok(status)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        let axes = parse_grid("alpha1=0:1:3, t_end=3.5:3.5:1").unwrap();
        assert_eq!(axes[0].values, vec![0.0, 0.5, 1.0]);
        assert_eq!(axes[1].values, vec![3.5]);
        assert!(parse_grid("alpha2=0:1:2").is_err());
        assert!(parse_grid("alpha1=0:1").is_err());
        assert!(parse_grid("alpha1=0:1:0").is_err());
        assert!(parse_grid("alpha1=0:1:2,alpha1=0:1:2").is_err());
    }

    #[test]
    fn expansion_order() {
        let axes = parse_grid("alpha0=0:1:2,mu0=-1:-2:2").unwrap();
        let cases = expand(&RunConfig::default(), &axes);
        let vals: Vec<Vec<f64>> = cases.iter().map(|c| c.0.clone()).collect();
        assert_eq!(vals, vec![vec![0.0, -1.0], vec![0.0, -2.0], vec![1.0, -1.0], vec![1.0, -2.0]]);
        assert_eq!(cases[3].1.alphas[0], 1.0);
        assert_eq!(cases[3].1.initial.mu, -2.0);
    }
}
