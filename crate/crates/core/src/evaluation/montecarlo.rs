//! Seeded Monte Carlo study of data-driven controllers over controller
//! classes.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::closed_loop::{
    assemble_closed_loop, estimate_jmr, performance_metric, simulate_closed_loop,
};
use crate::error::Result;
use crate::identification::{
    build_regressors, default_trim, identify_all, ControllerParametrization,
};
use crate::lti::Signal;
use crate::network::{simulate_plant, simulate_reference, white_noise, MultiSignal, NetworkSpec};
use crate::virtual_signals::virtual_references_distributed;

#[derive(Clone, Debug)]
pub struct ControllerClass {
    pub label: String,
    pub param: ControllerParametrization,
}

#[derive(Clone, Debug)]
pub struct MonteCarloConfig {
    pub spec: NetworkSpec,
    pub classes: Vec<ControllerClass>,
    /// Identification data length.
    pub horizon: usize,
    pub sigma_u: f64,
    pub sigma_v: f64,
    /// Replicate `k` uses seed `seed + k`.
    pub seed: u64,
    pub runs: usize,
    pub grid: Vec<f64>,
    /// Regressor trim; `None` uses the largest basis denominator degree.
    pub trim: Option<usize>,
    /// Length of the step-response evaluation.
    pub step_horizon: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReplicateRecord {
    pub replicate: usize,
    pub seed: u64,
    pub class: String,
    pub metric: f64,
    pub jmr: f64,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassSummary {
    pub class: String,
    pub runs: usize,
    pub failures: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub median_jmr: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MonteCarloResult {
    pub records: Vec<ReplicateRecord>,
    pub summaries: Vec<ClassSummary>,
}

impl MonteCarloResult {
    pub fn summary(&self, class: &str) -> Option<&ClassSummary> {
        self.summaries.iter().find(|s| s.class == class)
    }
}

/// Per-node step amplitudes in `(0, 1]`.
pub fn step_references<R: Rng>(rng: &mut R, nodes: usize, horizon: usize) -> MultiSignal {
    MultiSignal::new(
        (0..nodes)
            .map(|_| Signal::step(horizon, 1.0 - rng.random::<f64>()))
            .collect(),
    )
    .expect("equal horizons")
}

/// Identification data `(u, y)` of one replicate: white inputs, plant
/// response plus white output noise.
pub fn generate_data<R: Rng>(
    rng: &mut R,
    spec: &NetworkSpec,
    horizon: usize,
    sigma_u: f64,
    sigma_v: f64,
) -> Result<(MultiSignal, MultiSignal)> {
    let l = spec.nodes();
    let u = white_noise(rng, l, horizon, sigma_u);
    let v = white_noise(rng, l, horizon, sigma_v);
    let y = simulate_plant(spec, &u, Some(&v))?;
    Ok((u, y))
}

/// Identified parameters for one class from `(u, y)`.
pub fn synthesize(
    spec: &NetworkSpec,
    param: &ControllerParametrization,
    u: &MultiSignal,
    y: &MultiSignal,
    trim: Option<usize>,
) -> Result<Vec<Vec<f64>>> {
    let vd = virtual_references_distributed(&spec.output_coupled(), y)?;
    let reg = build_regressors(param, &vd, u, trim.unwrap_or_else(|| default_trim(param)))?;
    Ok(identify_all(&reg)?.into_iter().map(|r| r.rho).collect())
}

fn evaluate_class(
    cfg: &MonteCarloConfig,
    class: &ControllerClass,
    u: &MultiSignal,
    y: &MultiSignal,
    r: &MultiSignal,
    yd: &MultiSignal,
) -> Result<(f64, f64)> {
    let rho = synthesize(&cfg.spec, &class.param, u, y, cfg.trim)?;
    let ctrl = class.param.controller(&cfg.spec, &rho)?;
    let metric = performance_metric(&cfg.spec, &ctrl, &cfg.grid)?;
    let cls = assemble_closed_loop(&cfg.spec, &ctrl)?;
    let resp = simulate_closed_loop(&cls, r, None)?;
    let jmr = if resp.diverged {
        f64::INFINITY
    } else {
        estimate_jmr(&resp.y, yd)?
    };
    Ok((metric, jmr))
}

/// One replicate: every class is identified from the same data and
/// evaluated on the same step references.
pub fn run_replicate(cfg: &MonteCarloConfig, k: usize) -> Vec<ReplicateRecord> {
    let seed = cfg.seed.wrapping_add(k as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fail = |class: &str, e: String| ReplicateRecord {
        replicate: k,
        seed,
        class: class.to_string(),
        metric: f64::NAN,
        jmr: f64::NAN,
        error: Some(e),
    };
    let data = generate_data(&mut rng, &cfg.spec, cfg.horizon, cfg.sigma_u, cfg.sigma_v);
    let r = step_references(&mut rng, cfg.spec.nodes(), cfg.step_horizon);
    let prepared = data.and_then(|(u, y)| Ok((u, y, simulate_reference(&cfg.spec, &r)?)));
    let (u, y, yd) = match prepared {
        Ok(v) => v,
        Err(e) => {
            return cfg
                .classes
                .iter()
                .map(|c| fail(&c.label, e.to_string()))
                .collect()
        }
    };
    cfg.classes
        .iter()
        .map(|c| match evaluate_class(cfg, c, &u, &y, &r, &yd) {
            Ok((metric, jmr)) => ReplicateRecord {
                replicate: k,
                seed,
                class: c.label.clone(),
                metric,
                jmr,
                error: None,
            },
            Err(e) => {
                log::warn!("replicate {k}, class {}: {e}", c.label);
                fail(&c.label, e.to_string())
            }
        })
        .collect()
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = p * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize(records: &[ReplicateRecord], classes: &[ControllerClass]) -> Vec<ClassSummary> {
    classes
        .iter()
        .map(|c| {
            let mine: Vec<&ReplicateRecord> =
                records.iter().filter(|r| r.class == c.label).collect();
            let mut m: Vec<f64> = mine
                .iter()
                .filter(|r| r.error.is_none())
                .map(|r| r.metric)
                .collect();
            let mut j: Vec<f64> = mine
                .iter()
                .filter(|r| r.error.is_none())
                .map(|r| r.jmr)
                .collect();
            m.sort_by(f64::total_cmp);
            j.sort_by(f64::total_cmp);
            ClassSummary {
                class: c.label.clone(),
                runs: mine.len(),
                failures: mine.len() - m.len(),
                min: m.first().copied().unwrap_or(f64::NAN),
                q1: quantile(&m, 0.25),
                median: quantile(&m, 0.5),
                q3: quantile(&m, 0.75),
                max: m.last().copied().unwrap_or(f64::NAN),
                median_jmr: quantile(&j, 0.5),
            }
        })
        .collect()
}

/// Runs all replicates (in parallel) and summarizes per class. Records are
/// ordered by replicate, then class.
pub fn monte_carlo(cfg: &MonteCarloConfig) -> MonteCarloResult {
    let records: Vec<ReplicateRecord> = (0..cfg.runs)
        .into_par_iter()
        .map(|k| run_replicate(cfg, k))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    let summaries = summarize(&records, &cfg.classes);
    MonteCarloResult { records, summaries }
}

pub fn write_records_csv<W: Write>(records: &[ReplicateRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["replicate", "seed", "class", "metric", "jmr", "error"])?;
    for r in records {
        w.write_record([
            r.replicate.to_string(),
            r.seed.to_string(),
            r.class.clone(),
            format!("{:e}", r.metric),
            format!("{:e}", r.jmr),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary_csv<W: Write>(summaries: &[ClassSummary], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "class",
        "runs",
        "failures",
        "min",
        "q1",
        "median",
        "q3",
        "max",
        "median_jmr",
    ])?;
    for s in summaries {
        w.write_record([
            s.class.clone(),
            s.runs.to_string(),
            s.failures.to_string(),
            format!("{:e}", s.min),
            format!("{:e}", s.q1),
            format!("{:e}", s.median),
            format!("{:e}", s.q3),
            format!("{:e}", s.max),
            format!("{:e}", s.median_jmr),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::frequency_grid;
    use crate::network::presets::nine_node;

    fn config(sigma_v: f64, runs: usize) -> MonteCarloConfig {
        let spec = nine_node().unwrap();
        MonteCarloConfig {
            classes: vec![ControllerClass {
                label: "full".into(),
                param: ControllerParametrization::full(&spec).unwrap(),
            }],
            spec,
            horizon: 100,
            sigma_u: 1.0,
            sigma_v,
            seed: 42,
            runs,
            grid: frequency_grid(32),
            trim: None,
            step_horizon: 50,
        }
    }

    #[test]
    fn noise_free_replicates_are_exact() {
        let res = monte_carlo(&config(0.0, 2));
        for r in &res.records {
            assert!(r.error.is_none());
            assert!(r.metric <= 1e-8, "{}", r.metric);
            assert!(r.jmr <= 1e-12);
        }
    }

    #[test]
    fn same_seed_same_summary() {
        let cfg = config(0.1, 2);
        let a = monte_carlo(&cfg);
        let b = monte_carlo(&cfg);
        assert_eq!(a, b);
        let mut buf = Vec::new();
        write_summary_csv(&a.summaries, &mut buf).unwrap();
        assert!(String::from_utf8(buf)
            .unwrap()
            .starts_with("class,runs,failures"));
    }

    #[test]
    fn quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert_eq!(quantile(&v, 0.25), 1.75);
        assert!(quantile(&[], 0.5).is_nan());
    }
}
