//! Iteration driver shared by the single-layer and consensus solvers.

use crate::config::StepRule;
use crate::error::SolveError;

/// Number of step sizes tried by backtracking: 1, 1/2, ..., 2^-10.
const LADDER_LEN: i32 = 11;

pub(crate) struct Descent<S> {
    pub state: S,
    /// Objective before the first update, then after each update.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

pub(crate) struct Schedule {
    pub rule: StepRule,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub floor: f64,
}

/// Runs `step` until the relative objective change drops below the
/// tolerance. `repair` may patch an accepted state (returning true when it
/// changed anything) before its objective is recorded. Under backtracking,
/// when no step size avoids an increase the update falls back to a zero
/// step.
pub(crate) fn descend<S>(
    init: S,
    schedule: &Schedule,
    mut step: impl FnMut(&S, f64) -> Result<S, SolveError>,
    objective: impl Fn(&S) -> f64,
    mut repair: impl FnMut(&mut S) -> bool,
) -> Result<Descent<S>, SolveError> {
    let mut state = init;
    let mut prev = objective(&state);
    if !prev.is_finite() {
        return Err(SolveError::NonFiniteObjective { iteration: 0 });
    }
    let mut trace = vec![prev];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < schedule.max_iters {
        iterations += 1;
        let (mut next, mut value) = match schedule.rule {
            StepRule::Fixed(eta) => {
                let s = step(&state, eta)?;
                let v = objective(&s);
                (s, v)
            }
            StepRule::Backtracking => {
                let mut accepted = None;
                for i in 0..LADDER_LEN {
                    let s = step(&state, 0.5f64.powi(i))?;
                    let v = objective(&s);
                    if v <= prev {
                        accepted = Some((s, v));
                        break;
                    }
                }
                match accepted {
                    Some(found) => found,
                    None => {
                        // A zero step leaves the factor alone but still lets
                        // the solver refresh any auxiliary state.
                        let s = step(&state, 0.0)?;
                        let v = objective(&s);
                        (s, v)
                    }
                }
            }
        };
        if repair(&mut next) {
            value = objective(&next);
        }
        if !value.is_finite() {
            return Err(SolveError::NonFiniteObjective { iteration: iterations });
        }
        trace.push(value);
        state = next;
        let change = (value - prev).abs() / prev.max(schedule.floor);
        prev = value;
        if change < schedule.rel_tol {
            converged = true;
            break;
        }
    }
    Ok(Descent { state, trace, iterations, converged })
}
