//! Root finding for the minimal-distance value function `delta(nu)`.
//!
//! The optimal time is the smallest root of `delta`. Each evaluation of
//! `delta` is an inner conditional gradient solve; the derivative comes
//! from the Hamiltonian integral at the inner optimum, so one Newton step
//! costs one inner solve plus one state/adjoint pair.

use crate::cg::{cg_solve, CgOptions, ConvergenceFlag, DistanceSolution};
use crate::error::{Error, Result};
use crate::evolution::{adjoint_sensitivity, hamiltonian_integral, Control, EvolutionSystem, TimeGrid};
use crate::Scalar;

/// Outer solver settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions<T> {
    pub nu0: T,
    pub tol_delta: T,
    pub max_steps: usize,
    /// Step multiplier applied while the trial point overshoots the root.
    pub damping: T,
    /// Divisor for `nu0` when it starts beyond the root.
    pub bracket_expand: T,
    pub inner: CgOptions<T>,
}

/// Damped steps before bisection takes over.
const MAX_DAMPING: usize = 20;
const MAX_RESTARTS: usize = 10;

impl<T: Scalar> NewtonOptions<T> {
    /// Defaults for a target radius `delta0`: `tol_delta = 1e-8 (1 + delta0)`,
    /// damping `0.9`.
    pub fn for_radius(nu0: T, delta0: T) -> Self {
        Self {
            nu0,
            tol_delta: T::lit(1e-8) * (T::one() + delta0),
            max_steps: 30,
            damping: T::lit(0.9),
            bracket_expand: T::lit(2.0),
            inner: CgOptions::for_radius(delta0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu0 > T::zero()) {
            return Err(Error::ConfigError("nu0 must be positive".into()));
        }
        if !(self.tol_delta > T::zero()) {
            return Err(Error::ConfigError("tol_delta must be positive".into()));
        }
        if !(self.damping > T::zero() && self.damping < T::one()) {
            return Err(Error::ConfigError("damping must lie in (0, 1)".into()));
        }
        if !(self.bracket_expand > T::one()) {
            return Err(Error::ConfigError("bracket_expand must exceed 1".into()));
        }
        self.inner.validate()
    }
}

/// `delta(nu)` with its derivative and the inner solution behind it.
#[derive(Debug, Clone)]
pub struct DeltaEvaluation<T> {
    pub nu: T,
    pub delta: T,
    /// `None` when the target is hit exactly (`delta = -delta0`) or the
    /// inner solve stopped at its cutoff.
    pub derivative: Option<T>,
    /// False when the inner solve stopped before reaching its gap tolerance.
    pub trusted: bool,
    pub solution: DistanceSolution<T>,
}

/// Evaluates `delta(nu)` and `delta'(nu)`, warm starting the inner solve
/// from `warm_start` (midpoint control otherwise).
pub fn delta_eval<T: Scalar, S: EvolutionSystem<T> + ?Sized>(
    system: &S,
    nu: T,
    grid: TimeGrid,
    warm_start: Option<&Control<T>>,
    opts: &CgOptions<T>,
) -> Result<DeltaEvaluation<T>> {
    let u0 = match warm_start {
        Some(u) => u.clone(),
        None => system.midpoint_control(grid)?,
    };
    let solution = cg_solve(system, nu, &u0, opts)?;
    let derivative = match solution.status {
        ConvergenceFlag::TargetReached | ConvergenceFlag::BelowCutoff => None,
        _ => match adjoint_sensitivity(system, nu, &solution.control) {
            Ok((y, p)) => Some(hamiltonian_integral(system, nu, &solution.control, &y, &p)?),
            Err(Error::DegenerateTarget { .. }) => None,
            Err(e) => return Err(e),
        },
    };
    Ok(DeltaEvaluation { nu, delta: solution.delta, derivative, trusted: solution.converged(), solution })
}

/// One accepted outer iterate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonStep<T> {
    pub nu: T,
    pub delta: T,
    pub derivative: T,
    /// Damping reductions spent to reach this iterate.
    pub damping_count: usize,
    /// Inner iterations spent on this iterate, rejected trials included.
    pub inner_iterations: usize,
    pub gap: T,
    /// True if bisection replaced the Newton step.
    pub bisection: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NewtonStatus {
    Converged,
    NoConvergence,
    NonQualified,
}

/// Outer iteration history.
#[derive(Debug, Clone)]
pub struct NewtonTrace<T> {
    pub steps: Vec<NewtonStep<T>>,
    pub status: NewtonStatus,
    /// Restarts from a smaller `nu0`.
    pub restarts: usize,
    /// Inner solution at the last iterate.
    pub solution: DistanceSolution<T>,
}

impl<T: Scalar> NewtonTrace<T> {
    pub fn final_nu(&self) -> T {
        self.steps.last().map_or(T::nan(), |s| s.nu)
    }

    /// Newton updates performed (iterates after the initial one).
    pub fn newton_steps(&self) -> usize {
        self.steps.len().saturating_sub(1)
    }

    /// Updates that needed at least one damping reduction.
    pub fn damped_steps(&self) -> usize {
        self.steps.iter().filter(|s| s.damping_count > 0).count()
    }

    pub fn inner_iterations(&self) -> usize {
        self.steps.iter().map(|s| s.inner_iterations).sum()
    }

    pub fn converged(&self) -> bool {
        self.status == NewtonStatus::Converged
    }
}

/// Damped Newton method for the root of `delta`.
///
/// Returns `Err` only for hard failures (configuration, linear solver,
/// degenerate targets). Non-convergence and non-qualified stationarity are
/// reported through [`NewtonTrace::status`] together with the full trace.
pub fn newton_solve<T: Scalar, S: EvolutionSystem<T> + ?Sized>(
    system: &S,
    grid: TimeGrid,
    opts: &NewtonOptions<T>,
) -> Result<NewtonTrace<T>> {
    opts.validate()?;
    let tol = opts.tol_delta;
    // overshooting trials only need the sign of delta + tol
    let trial_opts = CgOptions { cutoff: Some(-tol), ..opts.inner };

    let mut nu = opts.nu0;
    let mut restarts = 0;
    let mut inner_spent = 0;
    let mut current = loop {
        let ev = delta_eval(system, nu, grid, None, &trial_opts)?;
        inner_spent += ev.solution.iterations;
        if ev.delta >= -tol || restarts >= MAX_RESTARTS {
            break ev;
        }
        restarts += 1;
        nu = nu / opts.bracket_expand;
    };
    if current.delta < -tol {
        return Ok(NewtonTrace {
            steps: vec![step_record(&current, 0, inner_spent, false)],
            status: NewtonStatus::NoConvergence,
            restarts,
            solution: current.solution,
        });
    }

    let mut steps = vec![step_record(&current, 0, inner_spent, false)];
    // bracket: delta(low) > 0 > delta(high)
    let mut low = current.nu;
    let mut high: Option<T> = None;
    loop {
        if current.delta.abs() < tol {
            return Ok(NewtonTrace { steps, status: NewtonStatus::Converged, restarts, solution: current.solution });
        }
        if steps.len() > opts.max_steps {
            return Ok(NewtonTrace { steps, status: NewtonStatus::NoConvergence, restarts, solution: current.solution });
        }
        let derivative = current.derivative.unwrap_or(T::zero());
        if derivative.abs() < T::lit(1e-14) * (T::one() + current.delta.abs()) {
            return Ok(NewtonTrace { steps, status: NewtonStatus::NonQualified, restarts, solution: current.solution });
        }
        let mut step = -current.delta / derivative;
        let mut damping_count = 0;
        let mut inner = 0;
        let mut bisection = false;
        let next = loop {
            let trial = if damping_count >= MAX_DAMPING && high.is_some() {
                bisection = true;
                (low + high.unwrap()) * T::lit(0.5)
            } else {
                current.nu + step
            };
            if !(trial > T::zero()) || !trial.is_finite() {
                step = step * opts.damping;
                damping_count += 1;
                if damping_count > 10 * MAX_DAMPING {
                    return Ok(NewtonTrace { steps, status: NewtonStatus::NoConvergence, restarts, solution: current.solution });
                }
                continue;
            }
            let ev = delta_eval(system, trial, grid, Some(&current.solution.control), &trial_opts)?;
            inner += ev.solution.iterations;
            if ev.delta > -tol {
                break ev;
            }
            high = Some(high.map_or(trial, |h| h.min(trial)));
            if bisection {
                // bisection keeps shrinking the bracket from above
                if damping_count > 10 * MAX_DAMPING {
                    return Ok(NewtonTrace { steps, status: NewtonStatus::NoConvergence, restarts, solution: current.solution });
                }
            }
            step = step * opts.damping;
            damping_count += 1;
        };
        if next.delta > T::zero() {
            low = low.max(next.nu);
        }
        steps.push(step_record(&next, damping_count, inner, bisection));
        current = next;
    }
}

fn step_record<T: Scalar>(ev: &DeltaEvaluation<T>, damping_count: usize, inner: usize, bisection: bool) -> NewtonStep<T> {
    NewtonStep {
        nu: ev.nu,
        delta: ev.delta,
        derivative: ev.derivative.unwrap_or(T::nan()),
        damping_count,
        inner_iterations: inner,
        gap: ev.solution.gap,
        bisection,
    }
}

/// Measure of `{(t, x) : |B*p| <= eps}` for each `eps`, weighted by `k w_j`.
pub fn structural_diagnostic<T: Scalar>(bstar_p: &[T], weights: &[T], grid: TimeGrid, eps: &[T]) -> Vec<(T, T)> {
    let k: T = grid.step();
    let n_c = weights.len();
    eps.iter()
        .map(|&e| {
            let measure = bstar_p
                .iter()
                .enumerate()
                .filter(|(_, b)| b.abs() <= e)
                .fold(T::zero(), |s, (i, _)| s + k * weights[i % n_c]);
            (e, measure)
        })
        .collect()
}

/// One point of the sampled value function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueSample<T> {
    pub nu: T,
    pub delta: T,
    pub gap: T,
    pub converged: bool,
    /// The inner solve hit the target exactly (`delta = -delta0`).
    pub degenerate: bool,
}

/// Cold-start evaluations of `delta` on `nus`.
pub fn sample_value_function<T: Scalar, S: EvolutionSystem<T> + ?Sized>(
    system: &S,
    grid: TimeGrid,
    nus: &[T],
    opts: &CgOptions<T>,
) -> Result<Vec<ValueSample<T>>> {
    nus.iter()
        .map(|&nu| {
            let u0 = system.midpoint_control(grid)?;
            let s = cg_solve(system, nu, &u0, opts)?;
            Ok(ValueSample {
                nu,
                delta: s.delta,
                gap: s.gap,
                converged: s.converged(),
                degenerate: s.status == ConvergenceFlag::TargetReached,
            })
        })
        .collect()
}
