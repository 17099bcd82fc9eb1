//! Solves, references and convergence orders.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use topt_core::{newton_solve, sample_value_function, NewtonTrace, Preset, TimeGrid, ValueSample};

use crate::config::{RunSpec, Sampling};

pub struct RunRecord {
    pub spec: RunSpec,
    pub outcome: Result<NewtonTrace<f64>, topt_core::Error>,
    pub wall_time: Duration,
}

impl RunRecord {
    pub fn time(&self) -> Option<f64> {
        match &self.outcome {
            Ok(t) if t.converged() => Some(t.final_nu()),
            _ => None,
        }
    }
}

pub fn execute(spec: &RunSpec) -> RunRecord {
    let t0 = Instant::now();
    let outcome = spec
        .preset
        .build::<f64>(spec.n, Some(spec.delta0))
        .and_then(|s| newton_solve(s.as_ref(), TimeGrid::new(spec.m)?, &spec.options));
    RunRecord { spec: spec.clone(), outcome, wall_time: t0.elapsed() }
}

/// Runs every spec on up to `jobs` threads; results keep the input order.
pub fn execute_all(specs: &[RunSpec], jobs: usize) -> Vec<RunRecord> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<RunRecord>>> = Mutex::new((0..specs.len()).map(|_| None).collect());
    thread::scope(|scope| {
        for _ in 0..jobs.min(specs.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(spec) = specs.get(i) else { break };
                let record = execute(spec);
                slots.lock().unwrap()[i] = Some(record);
            });
        }
    });
    slots.into_inner().unwrap().into_iter().map(|r| r.expect("every slot is filled")).collect()
}

pub fn sample(spec: &RunSpec, sampling: &Sampling) -> topt_core::Result<Vec<ValueSample<f64>>> {
    let s = spec.preset.build::<f64>(spec.n, Some(spec.delta0))?;
    sample_value_function(s.as_ref(), TimeGrid::new(spec.m)?, &sampling.points(), &spec.options.inner)
}

/// Where the error column is measured from.
#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub time: f64,
    pub note: String,
    /// Index of the run that serves as reference, if any.
    pub run: Option<usize>,
}

/// Analytic time for the pendulum, otherwise the finest converged run of a
/// sweep (largest `n`, then largest `M`). A single heat run has no reference.
pub fn reference(preset: Preset, records: &[RunRecord], sweep: bool) -> Option<Reference> {
    if let Some(t) = preset.reference_time() {
        return Some(Reference { time: t, note: "analytic optimal time 11*pi/6".into(), run: None });
    }
    if !sweep || records.len() < 2 {
        return None;
    }
    let (i, r) = records.iter().enumerate().max_by_key(|(_, r)| (r.spec.n, r.spec.m))?;
    let time = r.time()?;
    Some(Reference {
        time,
        note: format!("finest run of the sweep (M={}, n={})", r.spec.m, r.spec.n),
        run: Some(i),
    })
}

/// One observed order between consecutive runs along one axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Order {
    pub axis: &'static str,
    pub fixed: usize,
    pub from: usize,
    pub to: usize,
    pub error_from: f64,
    pub error_to: f64,
    pub order: f64,
}

/// `log2(e_i / e_{i+1}) / log2(h_i / h_{i+1})` between neighbours in `M`
/// (temporal, `h = 1/M`) and in `n` (spatial, `h = 1/n`). The reference run
/// itself is left out.
pub fn orders(records: &[RunRecord], reference: &Reference) -> Vec<Order> {
    let error = |i: usize| -> Option<f64> {
        if reference.run == Some(i) {
            return None;
        }
        records[i].time().map(|t| (t - reference.time).abs()).filter(|e| *e > 0.0)
    };
    let mut out = Vec::new();
    let mut axis = |name: &'static str, key: fn(&RunSpec) -> (usize, usize)| {
        let mut idx: Vec<usize> = (0..records.len()).collect();
        idx.sort_by_key(|&i| key(&records[i].spec));
        for w in idx.windows(2) {
            let (a, b) = (key(&records[w[0]].spec), key(&records[w[1]].spec));
            if a.0 != b.0 || a.1 == b.1 {
                continue;
            }
            if let (Some(ea), Some(eb)) = (error(w[0]), error(w[1])) {
                let order = (ea / eb).log2() / (b.1 as f64 / a.1 as f64).log2();
                out.push(Order { axis: name, fixed: a.0, from: a.1, to: b.1, error_from: ea, error_to: eb, order });
            }
        }
    };
    axis("temporal", |s| (s.n, s.m));
    axis("spatial", |s| (s.m, s.n));
    out
}
