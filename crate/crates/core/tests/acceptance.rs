//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Criteria 3 and 4 solve on the 65 x 65 mesh and take a long time; they run
//! only with `TOPT_ACCEPTANCE_FULL=1` and print SKIP otherwise. Numeric
//! arguments after `--` pick single criteria.

use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use topt_core::cg::{exact_linesearch, project_simplex, ssn_combination, HullObjective};
use topt_core::linalg::DenseMatrix;
use topt_core::oracles::{brute_simplex_qp, fd_derivative, grid_bisection_root};
use topt_core::{
    cg_solve, delta_eval, newton_solve, CgOptions, EvolutionSystem, NewtonTrace, Preset, TimeGrid,
    PENDULUM_OPTIMAL_TIME,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

struct Run {
    trace: NewtonTrace<f64>,
    elapsed: Duration,
}

fn solve(preset: Preset, n: usize, m: usize) -> Run {
    let s = preset.build::<f64>(n, None).unwrap();
    let t0 = Instant::now();
    let trace = newton_solve(s.as_ref(), TimeGrid::new(m).unwrap(), &preset.options(preset.radius())).unwrap();
    Run { trace, elapsed: t0.elapsed() }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Least-squares slope of `log e` against `log h`.
fn observed_order(h: &[f64], e: &[f64]) -> f64 {
    let x: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn tail_ratio(trace: &NewtonTrace<f64>) -> f64 {
    let d: Vec<f64> = trace.steps.iter().map(|s| s.delta.abs()).collect();
    match d.len() {
        0 | 1 => f64::NAN,
        k => d[k - 1] / d[k - 2],
    }
}

fn c1_pendulum(pendulum: &Run) -> Outcome {
    let t = pendulum.trace.final_nu();
    let (e_exact, e_ref) = ((t - PENDULUM_OPTIMAL_TIME).abs(), (t - 5.756636).abs());
    let steps = pendulum.trace.newton_steps();
    let secs = pendulum.elapsed.as_secs_f64();
    let pass = pendulum.trace.converged() && e_exact <= 5e-3 && e_ref <= 1e-3 && steps <= 8 && secs < 10.0;
    outcome(
        pass,
        format!("pendulum M=10000: T={t:.6} |T-11pi/6|={e_exact:.2e} |T-5.756636|={e_ref:.2e} steps={steps} time={secs:.2}s"),
    )
}

fn c2_temporal_order(pendulum: &Run) -> Outcome {
    let mut errs = Vec::new();
    for m in [100, 1000] {
        errs.push((solve(Preset::Pendulum, 0, m).trace.final_nu() - PENDULUM_OPTIMAL_TIME).abs());
    }
    errs.push((pendulum.trace.final_nu() - PENDULUM_OPTIMAL_TIME).abs());
    let order = observed_order(&[1e-2, 1e-3, 1e-4], &errs);
    outcome((order - 1.0).abs() <= 0.15, format!("temporal order {order:.3} from errors {errs:.3?}"))
}

fn c3_heat_distributed() -> Outcome {
    let run = solve(Preset::HeatDistributed, 64, 320);
    let t = run.trace.final_nu();
    let secs = run.elapsed.as_secs_f64();
    let (steps, damped) = (run.trace.newton_steps(), run.trace.damped_steps());
    let mut detail = format!(
        "heat-distributed M=320 N=4225: T={t:.6} rel.err={:.2e} steps={steps} damped={damped} time={secs:.0}s",
        rel(t, 1.4842)
    );
    let mut pass = run.trace.converged() && rel(t, 1.4842) <= 0.02 && steps <= 8 && damped == 0 && secs < 300.0;
    let ns = [8, 16, 32, 64];
    let times: Vec<f64> = ns.iter().map(|&n| solve(Preset::HeatDistributed, n, 640).trace.final_nu()).collect();
    // finest run as reference
    let errs: Vec<f64> = times[..3].iter().map(|t| (t - times[3]).abs()).collect();
    let hs: Vec<f64> = ns[..3].iter().map(|&n| 1.0 / n as f64).collect();
    let order = observed_order(&hs, &errs);
    let monotone = errs.windows(2).all(|w| w[1] < w[0]);
    pass &= monotone && (order - 2.0).abs() <= 0.3;
    detail += &format!("; M=640 sweep T={times:.6?} spatial order {order:.3}");
    outcome(pass, detail)
}

fn c4_heat_neumann() -> Outcome {
    let run = solve(Preset::HeatNeumann, 64, 320);
    let t = run.trace.final_nu();
    let steps = run.trace.newton_steps();
    let cg = run.trace.inner_iterations();
    let pass = run.trace.converged() && rel(t, 0.8487) <= 0.02 && steps <= 6 && cg <= 3 * 8432;
    outcome(
        pass,
        format!(
            "heat-neumann M=320 N=4225: T={t:.6} rel.err={:.2e} steps={steps} cg={cg} (limit {}) time={:.0}s",
            rel(t, 0.8487),
            3 * 8432,
            run.elapsed.as_secs_f64()
        ),
    )
}

fn small(preset: Preset) -> (Box<dyn EvolutionSystem<f64>>, TimeGrid) {
    let (n, m) = match preset {
        Preset::Pendulum => (0, 200),
        Preset::HeatDistributed => (8, 20),
        Preset::HeatNeumann => (4, 20),
    };
    (preset.build(n, None).unwrap(), TimeGrid::new(m).unwrap())
}

fn c5_derivative() -> Outcome {
    let mut worst: f64 = 0.0;
    for (preset, nus) in [
        (Preset::Pendulum, [2.0, 3.0, 4.5]),
        (Preset::HeatDistributed, [0.4, 0.6, 0.8]),
        (Preset::HeatNeumann, [0.4, 0.47, 0.54]),
    ] {
        let (s, grid) = small(preset);
        let opts = CgOptions { tol_gap: 1e-12, max_iter: 50_000, ..CgOptions::for_radius(s.radius()) };
        for nu in nus {
            let ev = delta_eval(s.as_ref(), nu, grid, None, &opts).unwrap();
            let Some(d) = ev.derivative else {
                return outcome(false, format!("{preset} at {nu}: no derivative"));
            };
            let warm = Some(&ev.solution.control);
            let fd = fd_derivative(|x| delta_eval(s.as_ref(), x, grid, warm, &opts).unwrap().delta, nu, 1e-5);
            worst = worst.max(rel(fd, d));
        }
    }
    outcome(worst <= 1e-4, format!("max |d' - FD|/|d'| = {worst:.2e} over 9 samples"))
}

fn c6_simplex() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut dev, mut invariant): (f64, f64) = (0.0, 0.0);
    for _ in 0..1000 {
        let m = rng.gen_range(1..=6);
        let y: Vec<f64> = (0..m).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let p = project_simplex(&y);
        for (a, b) in p.point().iter().zip(brute_simplex_qp(&y)) {
            dev = dev.max((a - b).abs());
        }
        let again = project_simplex(p.point());
        for (a, b) in again.point().iter().zip(p.point()) {
            invariant = invariant.max((a - b).abs());
        }
        let neg = p.point().iter().fold(0.0f64, |w, &x| w.max(-x));
        invariant = invariant.max(neg).max((p.point().iter().sum::<f64>() - 1.0).abs());
    }
    outcome(dev <= 1e-12 && invariant <= 1e-12, format!("max deviation {dev:.1e}, invariant violation {invariant:.1e}"))
}

fn c7_certificates() -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    let mut monotone = true;
    let mut logged = 0;
    for (preset, nu) in [(Preset::Pendulum, 4.0), (Preset::HeatDistributed, 0.8), (Preset::HeatNeumann, 0.6)] {
        let (s, grid) = small(preset);
        for accelerate in [true, false] {
            let opts = CgOptions { tol_gap: 1e-7, accelerate, max_iter: 3000, ..CgOptions::for_radius(s.radius()) };
            let u0 = s.midpoint_control(grid).unwrap();
            let sol = cg_solve(s.as_ref(), nu, &u0, &opts).unwrap();
            let tight = CgOptions { tol_gap: 1e-8, max_iter: 20_000, accelerate: true, ..opts };
            let reference = cg_solve(s.as_ref(), nu, &u0, &tight).unwrap();
            let f_ref = reference.delta;
            for it in &sol.log {
                worst = worst.max(it.objective - f_ref - it.gap);
            }
            monotone &= sol.log.windows(2).all(|w| w[1].objective <= w[0].objective);
            logged += sol.log.len();
        }
    }
    outcome(
        monotone && worst <= 1e-10,
        format!("{logged} iterates, max f - f_ref - gap = {worst:.2e}, monotone={monotone}"),
    )
}

/// Standard and fully corrective objective from one random checkpoint.
fn checkpoint(s: &dyn EvolutionSystem<f64>, nu: f64, grid: TimeGrid, rng: &mut ChaCha8Rng) -> f64 {
    let m = rng.gen_range(2..=8);
    let n_c = s.control_dim();
    let (lo, hi) = (s.lower().to_vec(), s.upper().to_vec());
    let misfits: Vec<Vec<f64>> = (0..m)
        .map(|_| {
            let values =
                (0..grid.intervals() * n_c).map(|i| if rng.gen_bool(0.5) { lo[i % n_c] } else { hi[i % n_c] }).collect();
            let u = s.control_from_values(grid, values).unwrap();
            s.solve_terminal(nu, &u).unwrap().iter().zip(s.target()).map(|(a, b)| a - b).collect()
        })
        .collect();
    let riesz: Vec<Vec<f64>> = misfits.iter().map(|d| s.h_riesz(d)).collect();
    let mut gram = DenseMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            gram[(i, j)] = s.h_inner(&misfits[i], &misfits[j]);
        }
    }
    let e: Vec<f64> = (0..m - 1).map(|_| -rng.gen_range(f64::EPSILON..1.0f64).ln()).collect();
    let total: f64 = e.iter().sum();
    let mut coeffs: Vec<f64> = e.iter().map(|x| x / total).collect();
    coeffs.push(0.0);
    let r: Vec<f64> = (0..s.state_dim()).map(|k| (0..m).map(|i| coeffs[i] * misfits[i][k]).sum()).collect();
    let dir: Vec<f64> = misfits[m - 1].iter().zip(&r).map(|(a, b)| a - b).collect();
    let t = exact_linesearch(&r, &dir, |a, b| s.h_inner(a, b));
    let mut standard: Vec<f64> = coeffs.iter().map(|c| c * (1.0 - t)).collect();
    standard[m - 1] = t;
    let objective = HullObjective::new(
        misfits.iter().map(Vec::as_slice).collect(),
        riesz.iter().map(Vec::as_slice).collect(),
        gram,
    );
    let out = ssn_combination(&objective, &coeffs, &CgOptions::default()).unwrap();
    out.value - objective.value(&standard)
}

fn c8_dominance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let grid = TimeGrid::new(16).unwrap();
    let systems: Vec<(Box<dyn EvolutionSystem<f64>>, f64)> = vec![
        (Preset::Pendulum.build(0, None).unwrap(), 4.0),
        (Preset::HeatDistributed.build(8, None).unwrap(), 0.8),
        (Preset::HeatNeumann.build(4, None).unwrap(), 0.6),
    ];
    let worst = (0..100).map(|i| {
        let (s, nu) = &systems[i % 3];
        checkpoint(s.as_ref(), *nu, grid, &mut rng)
    });
    let worst = worst.fold(f64::NEG_INFINITY, f64::max);
    outcome(worst <= 1e-10, format!("100 checkpoints, max accelerated - standard = {worst:.2e}"))
}

fn c9_equivalence() -> Outcome {
    let mut worst_ratio: f64 = 0.0;
    let mut root_ok = true;
    let mut notes = Vec::new();
    for (preset, nus, lo, hi, width) in [
        (Preset::Pendulum, [1.5, 2.5, 3.5, 4.0, 4.5], 1.0, 5.0, 0.05),
        (Preset::HeatDistributed, [0.2, 0.35, 0.5, 0.65, 0.8], 0.05, 0.85, 0.02),
        (Preset::HeatNeumann, [0.15, 0.25, 0.35, 0.45, 0.5], 0.05, 0.55, 0.02),
    ] {
        let (s, grid) = small(preset);
        let opts = preset.options(s.radius());
        let delta = |nu: f64| delta_eval(s.as_ref(), nu, grid, None, &opts.inner).unwrap().delta;
        for nu in nus {
            let back = grid_bisection_root(delta, delta(nu), lo, hi, width).unwrap_or(f64::NAN);
            worst_ratio = worst_ratio.max((back - nu).abs() / width);
        }
        let trace = newton_solve(s.as_ref(), grid, &opts).unwrap();
        let last = trace.steps.last().unwrap();
        let ok = trace.converged() && last.delta.abs() < opts.tol_delta && last.gap < opts.inner.tol_gap;
        root_ok &= ok;
        notes.push(format!("{preset} |delta|={:.1e} gap={:.1e}", last.delta.abs(), last.gap));
    }
    outcome(
        worst_ratio <= 2.0 && root_ok,
        format!("max |T(delta(nu)) - nu| = {worst_ratio:.3} grid widths; at the root: {}", notes.join(", ")),
    )
}

fn c10_superlinear(runs: &[(String, &NewtonTrace<f64>)]) -> Outcome {
    let ratios: Vec<String> = runs.iter().map(|(name, t)| format!("{name} {:.1e}", tail_ratio(t))).collect();
    let pass = runs.iter().all(|(_, t)| t.converged() && tail_ratio(t) <= 0.05);
    outcome(pass, format!("final |delta| ratios: {}", ratios.join(", ")))
}

fn main() -> ExitCode {
    let full = std::env::var("TOPT_ACCEPTANCE_FULL").is_ok_and(|v| v == "1");
    // numeric arguments select criteria; other test-runner flags are ignored
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let wanted = |id: usize| only.is_empty() || only.contains(&id);
    let pendulum = OnceLock::new();
    let pendulum = || pendulum.get_or_init(|| solve(Preset::Pendulum, 0, 10_000));

    let criteria: Vec<(usize, &str, bool, Box<dyn Fn() -> Outcome + '_>)> = vec![
        (1, "pendulum optimal time", false, Box::new(|| c1_pendulum(pendulum()))),
        (2, "temporal convergence order", false, Box::new(|| c2_temporal_order(pendulum()))),
        (3, "heat-distributed optimal time and spatial order", true, Box::new(c3_heat_distributed)),
        (4, "heat-neumann optimal time", true, Box::new(c4_heat_neumann)),
        (5, "derivative against finite differences", false, Box::new(c5_derivative)),
        (6, "simplex projection", false, Box::new(c6_simplex)),
        (7, "conditional gradient certificates", false, Box::new(c7_certificates)),
        (8, "acceleration dominance", false, Box::new(c8_dominance)),
        (9, "equivalence identities", false, Box::new(c9_equivalence)),
        (10, "superlinear Newton tail", false, Box::new(|| {
            let heat = solve(Preset::HeatDistributed, 16, 320);
            let neumann = solve(Preset::HeatNeumann, 8, 320);
            c10_superlinear(&[
                ("pendulum M=10000".to_string(), &pendulum().trace),
                ("heat-distributed n=16 M=320".to_string(), &heat.trace),
                ("heat-neumann n=8 M=320".to_string(), &neumann.trace),
            ])
        })),
    ];

    let mut failed = false;
    for (id, name, heavy, check) in &criteria {
        if !wanted(*id) {
            continue;
        }
        if *heavy && !full {
            println!("SKIP [{id}] {name}: needs TOPT_ACCEPTANCE_FULL=1");
            continue;
        }
        let o = check();
        println!("{} [{id}] {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed |= !o.pass;
    }
    if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
