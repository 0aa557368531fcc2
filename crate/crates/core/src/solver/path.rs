//! Warm-started continuation in `t` for the approximation equation.

use super::dhym::newton_solve;
use super::{PathState, SolveConfig};
use crate::error::{Error, Result};
use crate::phase::{window_membership, PhaseWindow};
use crate::torus::{relative_spectrum, Backgrounds, PotentialField};

/// Maximum number of times a failed step is halved.
pub const MAX_STEP_BISECTIONS: usize = 8;
const MAX_RAISES: usize = 60;

#[derive(Debug, Clone, PartialEq)]
pub struct PathRun {
    /// One state per requested `t`, in schedule order.
    pub states: Vec<PathState>,
    /// Parameters solved before the schedule when its first entry had too
    /// small a background margin (largest first).
    pub warmup: Vec<f64>,
    /// Intermediate parameters inserted by step bisection.
    pub inserted: Vec<f64>,
}

pub fn validate_schedule(schedule: &[f64]) -> Result<()> {
    if schedule.is_empty() {
        return Err(Error::InvalidSchedule("empty schedule".into()));
    }
    if schedule.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(Error::InvalidSchedule("parameters must be positive and finite".into()));
    }
    if schedule.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidSchedule("parameters must be strictly decreasing".into()));
    }
    Ok(())
}

fn background_margin(backgrounds: &Backgrounds, t: f64, window: &PhaseWindow) -> Result<f64> {
    let spec = relative_spectrum(&backgrounds.path_form(t), &backgrounds.omega)?;
    Ok((0..spec.len())
        .map(|p| window_membership(&spec.spectrum(p), window).margin())
        .fold(f64::INFINITY, f64::min))
}

/// Solves along a strictly decreasing schedule, warm-starting each step from
/// the previous solution.
pub fn continuity_path(
    backgrounds: &Backgrounds,
    schedule: &[f64],
    f: &PotentialField,
    window: PhaseWindow,
    config: &SolveConfig,
) -> Result<PathRun> {
    validate_schedule(schedule)?;
    config.validate(window.theta0)?;
    let mut warmup = Vec::new();
    let mut t_start = schedule[0];
    let mut raises = 0;
    while background_margin(backgrounds, t_start, &window)? < 2.0 * config.cone_safety {
        raises += 1;
        if raises > MAX_RAISES {
            return Err(Error::InvalidSchedule(
                "no parameter gives an admissible background".into(),
            ));
        }
        t_start *= 2.0;
    }
    if t_start > schedule[0] {
        warmup.push(t_start);
    }

    let mut inserted = Vec::new();
    let mut states = Vec::with_capacity(schedule.len());
    let mut phi = PotentialField::zeros(backgrounds.grid());
    let mut current: Option<f64> = None;
    if let Some(&tw) = warmup.first() {
        phi = newton_solve(backgrounds, &phi, tw, f, window, config)?.phi;
        current = Some(tw);
    }
    for &target in schedule {
        let mut step_target = target;
        let mut bisections = 0;
        loop {
            match newton_solve(backgrounds, &phi, step_target, f, window, config) {
                Ok(state) => {
                    phi = state.phi.clone();
                    current = Some(step_target);
                    if step_target == target {
                        states.push(state);
                        break;
                    }
                    inserted.push(step_target);
                    step_target = target;
                }
                Err(e) => {
                    let Some(from) = current else { return Err(e) };
                    bisections += 1;
                    if bisections > MAX_STEP_BISECTIONS {
                        return Err(e);
                    }
                    step_target = 0.5 * (from + step_target);
                }
            }
        }
    }
    Ok(PathRun {
        states,
        warmup,
        inserted,
    })
}
