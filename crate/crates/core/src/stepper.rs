//! Explicit Euler integration of the full system.
//!
//! Every right-hand side is evaluated from the state at `tⁿ` and the new
//! state is committed in one go. Nothing is clamped: a step that drives a
//! density negative is reported as an error.

use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::diagnostics::{EventDetector, EventLog, Recorder, TimeSeriesRow};
use crate::fluxes::{
    diffusive_fluxes_u, diffusive_fluxes_w, drift_velocity_u, drift_velocity_w, upwind_fluxes,
};
use crate::grid::{divergence_unchecked, total_mass, Field2D};
use crate::model::{inflow_rate, ModelParams, SimState, StepLimits};
use crate::reactions::{conversion, deplete_food, nest_exchange, pheromone_rhs};
use crate::scenario::{build_initial_state, BuildError, Scenario};

/// Values below this are treated as a loss of positivity.
pub const NEGATIVE_TOLERANCE: f64 = -1e-14;

/// Fraction of the positivity bound used for `dt_max`.
pub const SAFETY_FACTOR: f64 = 0.9;

#[derive(Debug, Error, Clone, PartialEq, Serialize)]
pub enum StepError {
    #[error("negative density in {field} at cell ({i}, {j}): {value:e}")]
    NegativeDensity {
        field: &'static str,
        i: usize,
        j: usize,
        value: f64,
    },
    #[error("nonfinite value in {field} at cell ({i}, {j}): {value}")]
    NonFinite {
        field: &'static str,
        i: usize,
        j: usize,
        value: f64,
    },
    #[error("time step must be positive and finite, got {0}")]
    InvalidDt(f64),
}

/// Step bounds for the current state.
///
/// The three partial limits are the inverse worst-case loss rates of a
/// cell: diffusion through four faces, upwind drift out of every outgoing
/// face, and pointwise decay. `dt_max` is the safety factor times the
/// inverse of their summed rates, which keeps every update a convex
/// combination and hence nonnegative.
pub fn cfl_limits(state: &SimState, params: &ModelParams) -> StepLimits {
    let h = state.grid().h();
    let dt_diffusion = h * h / (4.0 * params.alpha1.max(params.alpha3).max(1.0));

    let out_u = drift_velocity_u(&state.v, state.z(), params).max_outflow_sum();
    let out_w = drift_velocity_w(state, params).max_outflow_sum();
    let out = out_u.max(out_w);
    let dt_advection = if out > 0.0 { h / out } else { f64::INFINITY };

    let dt_reaction = 1.0 / state.c.max().max(params.alpha5).max(1.0);

    let rate = 1.0 / dt_diffusion + 1.0 / dt_advection + 1.0 / dt_reaction;
    StepLimits {
        dt_diffusion,
        dt_advection,
        dt_reaction,
        dt_max: SAFETY_FACTOR / rate,
    }
}

/// Advances `state` by one explicit Euler step of length `dt`.
pub fn step(state: &SimState, params: &ModelParams, dt: f64) -> Result<SimState, StepError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(StepError::InvalidDt(dt));
    }
    let SimState { t, u, w, v, c, .. } = state;
    let t = *t;

    let vel_u = drift_velocity_u(v, state.z(), params);
    let flux_u = upwind_fluxes(u, &vel_u, params).sub(&diffusive_fluxes_u(u, v, params));
    let div_u = divergence_unchecked(&flux_u);

    let vel_w = drift_velocity_w(state, params);
    let flux_w = upwind_fluxes(w, &vel_w, params).sub(&diffusive_fluxes_w(w, params));
    let div_w = divergence_unchecked(&flux_w);

    let conv = conversion(u, c);
    let (du_nest, dw_nest) = nest_exchange(u, w, state, params, t);
    let v_rhs = pheromone_rhs(v, w);

    let advance = |old: &Field2D, terms: &dyn Fn(usize) -> f64| {
        let mut next = old.clone();
        for (k, x) in next.values_mut().iter_mut().enumerate() {
            *x += dt * terms(k);
        }
        next
    };
    let (dv, cv, dun, dwn, rv) = (
        div_u.values(),
        conv.values(),
        du_nest.values(),
        dw_nest.values(),
        v_rhs.values(),
    );
    let u_next = advance(u, &|k| -dv[k] - cv[k] + dun[k]);
    let dvw = div_w.values();
    let w_next = advance(w, &|k| -dvw[k] + cv[k] + dwn[k]);
    let v_next = advance(v, &|k| rv[k]);
    let c_next = deplete_food(c, u, params, dt);

    for (name, f) in [("u", &u_next), ("w", &w_next), ("v", &v_next), ("c", &c_next)] {
        if let Some((i, j, value)) = f.find_nonfinite() {
            return Err(StepError::NonFinite {
                field: name,
                i,
                j,
                value,
            });
        }
    }
    for (name, f) in [("u", &u_next), ("w", &w_next), ("v", &v_next)] {
        if let Some(k) = f.values().iter().position(|&x| x < NEGATIVE_TOLERANCE) {
            let nx = f.grid().nx();
            return Err(StepError::NegativeDensity {
                field: name,
                i: k % nx,
                j: k / nx,
                value: f.values()[k],
            });
        }
    }

    let mut ledger = state.ledger;
    ledger.inflow += dt * inflow_rate(t, params);
    let unloaded = w.zip_map(state.nest_mask(), |wv, m| wv * m);
    ledger.unloaded += dt * params.alpha5 * total_mass(&unloaded);

    let mut next = SimState::new(t + dt, u_next, w_next, v_next, c_next, state.statics().clone());
    next.ledger = ledger;
    Ok(next)
}

pub type ObserverError = Box<dyn std::error::Error + Send + Sync>;

/// Hook invoked on committed states at a fixed step cadence.
pub trait Observer {
    /// Cadence in steps; 0 disables the observer.
    fn every(&self) -> u64;

    fn observe(&mut self, step: u64, state: &SimState) -> Result<(), ObserverError>;
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum Termination {
    Completed,
    /// Every food source depleted and every trail faded.
    EarlyStop { step: u64 },
    Error { step: u64, error: StepError },
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub steps_taken: u64,
    pub final_time: f64,
    pub final_row: TimeSeriesRow,
    pub series: Vec<TimeSeriesRow>,
    pub events: EventLog,
    pub wall_time: Duration,
    pub termination: Termination,
}

impl RunReport {
    pub fn is_error(&self) -> bool {
        matches!(self.termination, Termination::Error { .. })
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error("observer failed at step {step}: {source}")]
    Observer {
        step: u64,
        #[source]
        source: ObserverError,
    },
}

/// Runs a scenario from its initial state.
///
/// The returned report always carries the time series recorded so far; a
/// failing step ends the run with [`Termination::Error`] rather than an
/// `Err`, so callers can still write out what was produced.
pub fn run(scenario: &Scenario, observers: &mut [&mut dyn Observer]) -> Result<RunReport, RunError> {
    let started = Instant::now();
    let mut state = build_initial_state(scenario)?;
    let recorder = Recorder::new(scenario, state.grid());
    let mut detector = EventDetector::new(&scenario.events, scenario.food.len());
    let run = &scenario.run;
    let dt = run.dt;

    let mut series = Vec::new();
    fn push_row(row: TimeSeriesRow, series: &mut Vec<TimeSeriesRow>, detector: &mut EventDetector) {
        detector.push(&row);
        series.push(row);
    }

    let notify = |observers: &mut [&mut dyn Observer], step: u64, state: &SimState| {
        for obs in observers.iter_mut() {
            let every = obs.every();
            if every > 0 && step.is_multiple_of(every) {
                obs.observe(step, state)
                    .map_err(|source| RunError::Observer { step, source })?;
            }
        }
        Ok::<(), RunError>(())
    };

    push_row(recorder.record(0, &state), &mut series, &mut detector);
    notify(observers, 0, &state)?;

    let mut termination = Termination::Completed;
    let mut taken = 0;
    let mut last_recorded = 0;
    for n in 1..=run.steps {
        match step(&state, &scenario.params, dt) {
            Ok(next) => state = next,
            Err(error) => {
                termination = Termination::Error { step: n, error };
                break;
            }
        }
        taken = n;
        let mut recorded = false;
        if run.timeseries_every > 0 && n % run.timeseries_every == 0 {
            push_row(recorder.record(n, &state), &mut series, &mut detector);
            last_recorded = n;
            recorded = true;
        }
        notify(observers, n, &state)?;
        if run.stop_when_faded && recorded && detector.all_done() {
            termination = Termination::EarlyStop { step: n };
            break;
        }
    }
    if last_recorded != taken {
        push_row(recorder.record(taken, &state), &mut series, &mut detector);
    }

    let events = detector.finish();
    Ok(RunReport {
        steps_taken: taken,
        final_time: state.t,
        final_row: series.last().cloned().expect("initial row is always recorded"),
        series,
        events,
        wall_time: started.elapsed(),
        termination,
    })
}
