//! results.csv, orders.csv, value_function.csv and trace.json.

use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;
use topt_core::{NewtonStatus, ValueSample};

use crate::run::{Order, Reference, RunRecord};

#[derive(Debug, Serialize)]
struct ResultRow<'a> {
    preset: &'a str,
    #[serde(rename = "M")]
    m: usize,
    n: usize,
    #[serde(rename = "N")]
    nodes: usize,
    #[serde(rename = "T_k")]
    time: Option<f64>,
    #[serde(rename = "T_ref")]
    reference: Option<f64>,
    abs_error: Option<f64>,
    newton_steps: Option<usize>,
    damped_steps: Option<usize>,
    cg_steps_total: Option<usize>,
    status: String,
    wall_time: f64,
}

pub fn status_name(r: &RunRecord) -> String {
    match &r.outcome {
        Ok(t) => match t.status {
            NewtonStatus::Converged => "converged".into(),
            NewtonStatus::NoConvergence => "no-convergence".into(),
            NewtonStatus::NonQualified => "non-qualified".into(),
        },
        Err(_) => "error".into(),
    }
}

pub fn write_results(dir: &Path, records: &[RunRecord], reference: Option<&Reference>) -> io::Result<()> {
    let mut w = csv::Writer::from_path(dir.join("results.csv"))?;
    for r in records {
        let trace = r.outcome.as_ref().ok();
        let time = r.time();
        let t_ref = reference.map(|x| x.time);
        w.serialize(ResultRow {
            preset: r.spec.preset.name(),
            m: r.spec.m,
            n: r.spec.n,
            nodes: r.spec.preset.node_count(r.spec.n),
            time,
            reference: t_ref,
            abs_error: time.zip(t_ref).map(|(t, x)| (t - x).abs()),
            newton_steps: trace.map(|t| t.newton_steps()),
            damped_steps: trace.map(|t| t.damped_steps()),
            cg_steps_total: trace.map(|t| t.inner_iterations()),
            status: status_name(r),
            wall_time: r.wall_time.as_secs_f64(),
        })?;
    }
    w.flush()
}

#[derive(Debug, Serialize)]
struct OrderRow {
    axis: &'static str,
    /// `n` for temporal rows, `M` for spatial rows.
    fixed: usize,
    from: usize,
    to: usize,
    error_from: f64,
    error_to: f64,
    order: f64,
}

pub fn write_orders(dir: &Path, orders: &[Order]) -> io::Result<()> {
    let mut w = csv::Writer::from_path(dir.join("orders.csv"))?;
    if orders.is_empty() {
        w.write_record(["axis", "fixed", "from", "to", "error_from", "error_to", "order"])?;
    }
    for o in orders {
        w.serialize(OrderRow {
            axis: o.axis,
            fixed: o.fixed,
            from: o.from,
            to: o.to,
            error_from: o.error_from,
            error_to: o.error_to,
            order: o.order,
        })?;
    }
    w.flush()
}

#[derive(Debug, Serialize)]
struct SampleRow {
    nu: f64,
    delta: f64,
}

pub fn write_value_function(dir: &Path, samples: &[ValueSample<f64>]) -> io::Result<()> {
    let mut w = csv::Writer::from_path(dir.join("value_function.csv"))?;
    for s in samples {
        w.serialize(SampleRow { nu: s.nu, delta: s.delta })?;
    }
    w.flush()
}

#[derive(Debug, Serialize)]
struct StepJson {
    nu: f64,
    delta: f64,
    derivative: f64,
    damping_count: usize,
    inner_iterations: usize,
    gap: f64,
    bisection: bool,
}

#[derive(Debug, Serialize)]
struct InnerJson {
    iter: usize,
    objective: f64,
    gap: f64,
    atoms: usize,
}

#[derive(Debug, Serialize)]
struct RunJson {
    preset: &'static str,
    #[serde(rename = "M")]
    m: usize,
    n: usize,
    #[serde(rename = "N")]
    nodes: usize,
    delta0: f64,
    nu0: f64,
    tol_delta: f64,
    tol_gap: f64,
    accelerate: bool,
    status: String,
    error: Option<String>,
    restarts: usize,
    steps: Vec<StepJson>,
    /// Iteration log of the inner solve at the last iterate.
    final_inner_log: Vec<InnerJson>,
}

#[derive(Debug, Serialize)]
struct TraceJson {
    reference: Option<String>,
    seed: u64,
    runs: Vec<RunJson>,
}

/// Deterministic: wall-clock times are left out.
pub fn write_trace(dir: &Path, records: &[RunRecord], reference: Option<&Reference>, seed: u64) -> io::Result<()> {
    let runs = records
        .iter()
        .map(|r| {
            let o = &r.spec.options;
            let (restarts, steps, log) = match &r.outcome {
                Ok(t) => (
                    t.restarts,
                    t.steps
                        .iter()
                        .map(|s| StepJson {
                            nu: s.nu,
                            delta: s.delta,
                            derivative: s.derivative,
                            damping_count: s.damping_count,
                            inner_iterations: s.inner_iterations,
                            gap: s.gap,
                            bisection: s.bisection,
                        })
                        .collect(),
                    t.solution
                        .log
                        .iter()
                        .map(|i| InnerJson { iter: i.iter, objective: i.objective, gap: i.gap, atoms: i.atoms })
                        .collect(),
                ),
                Err(_) => (0, Vec::new(), Vec::new()),
            };
            RunJson {
                preset: r.spec.preset.name(),
                m: r.spec.m,
                n: r.spec.n,
                nodes: r.spec.preset.node_count(r.spec.n),
                delta0: r.spec.delta0,
                nu0: o.nu0,
                tol_delta: o.tol_delta,
                tol_gap: o.inner.tol_gap,
                accelerate: o.inner.accelerate,
                status: status_name(r),
                error: r.outcome.as_ref().err().map(|e| e.to_string()),
                restarts,
                steps,
                final_inner_log: log,
            }
        })
        .collect();
    let trace = TraceJson { reference: reference.map(|r| r.note.clone()), seed, runs };
    let text = serde_json::to_string_pretty(&trace).map_err(io::Error::other)?;
    fs::write(dir.join("trace.json"), text + "\n")
}
