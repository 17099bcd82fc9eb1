use topt_core::oracles::{fd_derivative, grid_bisection_root};
use topt_core::{
    delta_eval, newton_solve, pendulum_preset, sample_value_function, structural_diagnostic, CgOptions,
    EvolutionSystem, NewtonStatus, Preset, TimeGrid, PENDULUM_OPTIMAL_TIME,
};

fn tight(delta0: f64) -> CgOptions<f64> {
    CgOptions { tol_gap: 1e-12, max_iter: 50_000, ..CgOptions::for_radius(delta0) }
}

#[test]
fn pendulum_value_function_decreases_below_the_optimal_time() {
    let s = pendulum_preset::<f64>();
    let grid = TimeGrid::new(1000).unwrap();
    let ev = delta_eval(&s, 0.6 * PENDULUM_OPTIMAL_TIME, grid, None, &CgOptions::for_radius(1e-6)).unwrap();
    assert!(ev.trusted);
    assert!(ev.delta > 0.0);
    assert!(ev.derivative.unwrap() < 0.0);
}

#[test]
fn derivative_matches_central_differences() {
    let cases = [
        (Preset::Pendulum, 0, 200, [2.0, 3.0, 4.5]),
        (Preset::HeatDistributed, 8, 20, [0.4, 0.6, 0.8]),
        (Preset::HeatNeumann, 4, 20, [0.4, 0.47, 0.54]),
    ];
    for (preset, n, m, nus) in cases {
        let s = preset.build::<f64>(n, None).unwrap();
        let grid = TimeGrid::new(m).unwrap();
        let opts = tight(s.radius());
        for nu in nus {
            let ev = delta_eval(s.as_ref(), nu, grid, None, &opts).unwrap();
            let d = ev.derivative.unwrap();
            let warm = Some(&ev.solution.control);
            let fd = fd_derivative(|x| delta_eval(s.as_ref(), x, grid, warm, &opts).unwrap().delta, nu, 1e-5);
            let rel = (d - fd).abs() / d.abs();
            assert!(rel <= 1e-4, "{preset} at {nu}: {d} vs {fd}");
        }
    }
}

#[test]
fn newton_converges_on_every_preset() {
    for (preset, n, m) in [(Preset::Pendulum, 0, 1000), (Preset::HeatDistributed, 8, 40), (Preset::HeatNeumann, 4, 40)] {
        let s = preset.build::<f64>(n, None).unwrap();
        let grid = TimeGrid::new(m).unwrap();
        let opts = preset.options(preset.radius());
        let trace = newton_solve(s.as_ref(), grid, &opts).unwrap();
        assert_eq!(trace.status, NewtonStatus::Converged, "{preset}");
        let last = trace.steps.last().unwrap();
        assert!(last.delta.abs() < opts.tol_delta && last.gap < opts.inner.tol_gap);
        let d: Vec<f64> = trace.steps.iter().map(|st| st.delta.abs()).collect();
        let k = d.len();
        assert!(k >= 3);
        assert!(d[k - 1] / d[k - 2] <= 0.05, "{preset}: {d:?}");
        assert!(d[k - 1] < d[k - 2] && d[k - 2] < d[k - 3], "{preset}: {d:?}");
    }
}

#[test]
fn pendulum_time_at_a_thousand_steps() {
    let s = pendulum_preset::<f64>();
    let trace =
        newton_solve(&s, TimeGrid::new(1000).unwrap(), &Preset::Pendulum.options(1e-6)).unwrap();
    assert!((trace.final_nu() - 5.729975).abs() <= 1e-5, "{}", trace.final_nu());
    assert!(trace.newton_steps() <= 8);
}

#[test]
fn starting_beyond_the_root_restarts_lower() {
    let s = pendulum_preset::<f64>();
    let mut opts = Preset::Pendulum.options(1e-6);
    opts.nu0 = 9.0;
    let trace = newton_solve(&s, TimeGrid::new(200).unwrap(), &opts).unwrap();
    assert!(trace.converged());
    assert!(trace.restarts >= 1);
    let reference = newton_solve(&s, TimeGrid::new(200).unwrap(), &Preset::Pendulum.options(1e-6)).unwrap();
    assert!((trace.final_nu() - reference.final_nu()).abs() <= 1e-6);
}

#[test]
fn sampled_value_function_shape() {
    let s = pendulum_preset::<f64>();
    let grid = TimeGrid::new(200).unwrap();
    let nus: Vec<f64> = (0..50).map(|i| 1.0 + 6.0 * i as f64 / 49.0).collect();
    let opts = CgOptions::for_radius(1e-6);
    let samples = sample_value_function(&s, grid, &nus, &opts).unwrap();
    assert!(samples.iter().all(|v| v.delta >= -s.radius()));
    let first_root = samples.iter().position(|v| v.delta <= 1e-8).unwrap();
    assert!(first_root > 10);
    for w in samples[..first_root].windows(2) {
        assert!(w[1].delta < w[0].delta, "{} -> {}", w[0].nu, w[1].nu);
    }
    let start = sample_value_function(&s, grid, &[1e-3], &opts).unwrap()[0].delta;
    let expected = s.h_norm(s.initial_state()) - s.radius();
    assert!(start > 0.0 && (start - expected).abs() <= 2e-3, "{start} vs {expected}");
}

#[test]
fn structural_measure_grows_linearly_for_the_pendulum() {
    let s = pendulum_preset::<f64>();
    // fine enough that one cell stays inside the smallest band
    let grid = TimeGrid::new(100_000).unwrap();
    let ev = delta_eval(&s, 5.0, grid, None, &CgOptions::for_radius(1e-6)).unwrap();
    let b = ev.solution.bstar_p();
    let w = s.control_weights();
    let max = b.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let eps = [0.0, 1e-4, 1e-3, 1e-2, max];
    let d = structural_diagnostic(b, w, grid, &eps);
    assert_eq!(d[0].1, 0.0);
    assert!((d[4].1 - w.iter().sum::<f64>()).abs() <= 1e-9);
    assert!(d.windows(2).all(|p| p[1].1 >= p[0].1));
    let slopes: Vec<f64> = d[1..4].iter().map(|(e, m)| m / e).collect();
    let (lo, hi) = slopes.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
    assert!(hi / lo <= 3.0, "{slopes:?}");
}

#[test]
fn bisection_inverse_recovers_the_horizon() {
    let s = pendulum_preset::<f64>();
    let grid = TimeGrid::new(200).unwrap();
    let opts = CgOptions::for_radius(1e-6);
    let delta = |nu: f64| delta_eval(&s, nu, grid, None, &opts).unwrap().delta;
    let width = 0.05;
    for nu in [1.5, 2.5, 3.5, 4.5] {
        let level = delta(nu);
        let back = grid_bisection_root(delta, level, 1.0, 6.0, width).unwrap();
        assert!((back - nu).abs() <= 2.0 * width, "{nu} -> {back}");
    }
    let trace = newton_solve(&s, grid, &Preset::Pendulum.options(1e-6)).unwrap();
    let root = grid_bisection_root(delta, 0.0, 1.0, 7.0, width).unwrap();
    assert!((root - trace.final_nu()).abs() <= 1e-3, "{root} vs {}", trace.final_nu());
}
