//! Conservation ledgers, trail metrics and event detection.

use serde::{Serialize, Serializer};

use crate::grid::{interp_bilinear, total_mass, Field2D, Grid, Point};
use crate::model::SimState;
use crate::scenario::{disk_cells, EventSpec, Scenario};

/// One line of the time series.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesRow {
    pub step: u64,
    pub t: f64,
    pub mass_u: f64,
    pub mass_w: f64,
    pub mass_v: f64,
    pub mass_c: f64,
    /// Food left in each source disk.
    pub food: Vec<f64>,
    /// Weakest-link pheromone level between the nest and each source.
    pub trail: Vec<f64>,
    /// Cumulative ants emitted by the nest.
    pub inflow: f64,
    /// Cumulative returning-ant mass unloaded at the nest.
    pub unloaded: f64,
}

impl TimeSeriesRow {
    pub fn csv_header(sources: usize) -> String {
        let mut cols: Vec<String> = ["step", "t", "mass_u", "mass_w", "mass_v", "mass_c"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        cols.extend((0..sources).map(|k| format!("food_{k}")));
        cols.extend((0..sources).map(|k| format!("trail_{k}")));
        cols.push("inflow".into());
        cols.push("unloaded".into());
        cols.join(",")
    }

    pub fn csv_line(&self) -> String {
        let mut cols = vec![self.step.to_string()];
        cols.extend(
            [self.t, self.mass_u, self.mass_w, self.mass_v, self.mass_c]
                .iter()
                .map(|&x| crate::output::fmt_f64(x)),
        );
        cols.extend(self.food.iter().map(|&x| crate::output::fmt_f64(x)));
        cols.extend(self.trail.iter().map(|&x| crate::output::fmt_f64(x)));
        cols.push(crate::output::fmt_f64(self.inflow));
        cols.push(crate::output::fmt_f64(self.unloaded));
        cols.join(",")
    }
}

/// Minimum of the bilinearly interpolated pheromone over `k` equally spaced
/// points strictly between the nest rim and the food rim.
pub fn trail_strength(
    v: &Field2D,
    nest_center: Point,
    nest_radius: f64,
    food_center: Point,
    food_radius: f64,
    k: usize,
) -> f64 {
    let k = k.max(2);
    let dist = nest_center.distance(food_center);
    let (dx, dy) = if dist > 0.0 {
        ((food_center.x - nest_center.x) / dist, (food_center.y - nest_center.y) / dist)
    } else {
        (0.0, 0.0)
    };
    let (start, end) = if dist > nest_radius + food_radius {
        (
            Point::new(nest_center.x + dx * nest_radius, nest_center.y + dy * nest_radius),
            Point::new(food_center.x - dx * food_radius, food_center.y - dy * food_radius),
        )
    } else {
        (nest_center, food_center)
    };
    (1..=k)
        .map(|s| {
            let f = s as f64 / (k + 1) as f64;
            let p = Point::new(start.x + f * (end.x - start.x), start.y + f * (end.y - start.y));
            interp_bilinear(v, p)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Precomputed per-source cell lists for fast row recording.
#[derive(Debug, Clone)]
pub struct Recorder {
    nest_center: Point,
    nest_radius: f64,
    samples: usize,
    sources: Vec<(Point, f64, Vec<usize>)>,
}

impl Recorder {
    pub fn new(scenario: &Scenario, grid: &Grid) -> Self {
        let sources = scenario
            .food
            .iter()
            .map(|f| {
                let cells = disk_cells(grid, f.center, f.radius)
                    .into_iter()
                    .map(|(i, j)| grid.idx(i, j))
                    .collect();
                (f.center, f.radius, cells)
            })
            .collect();
        Recorder {
            nest_center: scenario.nest_center(),
            nest_radius: scenario.nest.radius,
            samples: scenario.events.trail_samples,
            sources,
        }
    }

    pub fn record(&self, step: u64, state: &SimState) -> TimeSeriesRow {
        let h2 = state.grid().h().powi(2);
        let c = state.c.values();
        let food = self
            .sources
            .iter()
            .map(|(_, _, cells)| cells.iter().map(|&k| c[k]).sum::<f64>() * h2)
            .collect();
        let trail = self
            .sources
            .iter()
            .map(|&(center, radius, _)| {
                trail_strength(
                    &state.v,
                    self.nest_center,
                    self.nest_radius,
                    center,
                    radius,
                    self.samples,
                )
            })
            .collect();
        TimeSeriesRow {
            step,
            t: state.t,
            mass_u: total_mass(&state.u),
            mass_w: total_mass(&state.w),
            mass_v: total_mass(&state.v),
            mass_c: total_mass(&state.c),
            food,
            trail,
            inflow: state.ledger.inflow,
            unloaded: state.ledger.unloaded,
        }
    }
}

/// Row for `state`, computing the disk lists on the fly.
pub fn record(step: u64, state: &SimState, scenario: &Scenario) -> TimeSeriesRow {
    Recorder::new(scenario, state.grid()).record(step, state)
}

/// Time of an event, or "never".
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EventTime(pub Option<f64>);

impl EventTime {
    pub const NEVER: EventTime = EventTime(None);

    pub fn at(t: f64) -> Self {
        EventTime(Some(t))
    }

    pub fn get(self) -> Option<f64> {
        self.0
    }

    pub fn is_never(self) -> bool {
        self.0.is_none()
    }
}

impl Serialize for EventTime {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0 {
            Some(t) => s.serialize_f64(t),
            None => s.serialize_str("never"),
        }
    }
}

impl std::fmt::Display for EventTime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.0 {
            Some(t) => write!(f, "{t}"),
            None => f.write_str("never"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct SourceEvents {
    pub formation_time: EventTime,
    pub depletion_time: EventTime,
    pub fade_time: EventTime,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct EventLog {
    pub sources: Vec<SourceEvents>,
}

/// Streaming event detection over time-series rows.
///
/// Formation is the first upward crossing of `theta_form`. Depletion is the
/// first row where a source holds at most `depletion_fraction` of its
/// initial food. Fade is the first row at or after depletion, once the
/// trail has formed, whose strength is at or below `theta_fade`.
#[derive(Debug, Clone)]
pub struct EventDetector {
    spec: EventSpec,
    initial_food: Option<Vec<f64>>,
    events: Vec<SourceEvents>,
    last_trail: Vec<f64>,
}

impl EventDetector {
    pub fn new(spec: &EventSpec, sources: usize) -> Self {
        EventDetector {
            spec: *spec,
            initial_food: None,
            events: vec![SourceEvents::default(); sources],
            last_trail: vec![0.0; sources],
        }
    }

    pub fn push(&mut self, row: &TimeSeriesRow) {
        let initial = self.initial_food.get_or_insert_with(|| row.food.clone());
        for (k, ev) in self.events.iter_mut().enumerate() {
            let strength = row.trail[k];
            self.last_trail[k] = strength;
            if ev.formation_time.is_never() && strength >= self.spec.theta_form {
                ev.formation_time = EventTime::at(row.t);
            }
            if ev.depletion_time.is_never()
                && row.food[k] <= self.spec.depletion_fraction * initial[k]
            {
                ev.depletion_time = EventTime::at(row.t);
            }
            if ev.fade_time.is_never()
                && !ev.formation_time.is_never()
                && !ev.depletion_time.is_never()
                && strength <= self.spec.theta_fade
            {
                ev.fade_time = EventTime::at(row.t);
            }
        }
    }

    /// Every source depleted and no trail left standing.
    pub fn all_done(&self) -> bool {
        self.events.iter().zip(&self.last_trail).all(|(ev, &s)| {
            !ev.depletion_time.is_never()
                && (!ev.fade_time.is_never() || (ev.formation_time.is_never() && s <= self.spec.theta_fade))
        })
    }

    pub fn log(&self) -> EventLog {
        EventLog {
            sources: self.events.clone(),
        }
    }

    pub fn finish(self) -> EventLog {
        EventLog {
            sources: self.events,
        }
    }
}

pub fn detect_events(
    series: &[TimeSeriesRow],
    theta_form: f64,
    theta_fade: f64,
    depletion_fraction: f64,
) -> EventLog {
    let sources = series.first().map_or(0, |r| r.food.len());
    let spec = EventSpec {
        theta_form,
        theta_fade,
        depletion_fraction,
        ..EventSpec::default()
    };
    let mut det = EventDetector::new(&spec, sources);
    for row in series {
        det.push(row);
    }
    det.finish()
}
