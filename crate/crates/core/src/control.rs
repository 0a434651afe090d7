//! Fixed-time signal control.
//!
//! A controller runs one cycle of mutually conflicting phases. Each phase
//! owns a green interval followed by yellow and all-red clearance; outside
//! that window it shows red. Stop lines reference exactly one
//! `(controller, phase)` pair.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Indication {
    Green,
    Yellow,
    Red,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Phase {
    pub id: String,
    /// Start of green within the cycle, s.
    pub green_start: f64,
    pub green: f64,
    pub yellow: f64,
    pub all_red: f64,
}

impl Phase {
    pub fn clearance(&self) -> f64 {
        self.yellow + self.all_red
    }

    fn end(&self) -> f64 {
        self.green_start + self.green + self.clearance()
    }

    fn indication(&self, tau: f64) -> Indication {
        let g_end = self.green_start + self.green;
        if tau >= self.green_start && tau < g_end {
            Indication::Green
        } else if tau >= g_end && tau < g_end + self.yellow {
            Indication::Yellow
        } else {
            Indication::Red
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignalController {
    pub id: String,
    pub cycle_length: f64,
    pub offset: f64,
    pub phases: Vec<Phase>,
}

/// Indications of every phase of one controller at one instant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignalState {
    pub phases: Vec<Indication>,
}

impl SignalController {
    /// Lays phases back to back from the start of the cycle.
    pub fn sequential(id: &str, cycle_length: f64, offset: f64, phases: &[(&str, f64, f64, f64)]) -> Self {
        let mut t = 0.0;
        let phases = phases
            .iter()
            .map(|&(pid, green, yellow, all_red)| {
                let p = Phase {
                    id: pid.into(),
                    green_start: t,
                    green,
                    yellow,
                    all_red,
                };
                t += green + yellow + all_red;
                p
            })
            .collect();
        SignalController {
            id: id.into(),
            cycle_length,
            offset,
            phases,
        }
    }

    /// Position within the cycle, in [0, cycle_length).
    pub fn cycle_time(&self, t: f64) -> f64 {
        let tau = libm::fmod(t - self.offset, self.cycle_length);
        if tau < 0.0 {
            tau + self.cycle_length
        } else {
            tau
        }
    }

    pub fn indication(&self, phase: usize, t: f64) -> Indication {
        self.phases[phase].indication(self.cycle_time(t))
    }

    pub fn state_at(&self, t: f64) -> SignalState {
        let tau = self.cycle_time(t);
        SignalState {
            phases: self.phases.iter().map(|p| p.indication(tau)).collect(),
        }
    }

    pub fn total_green(&self) -> f64 {
        self.phases.iter().map(|p| p.green).sum()
    }

    pub fn validate(&self) -> Result<()> {
        let err = |m: &str| Err(Error::Signal(alloc::format!("{}: {m}", self.id)));
        if !(self.cycle_length > 0.0 && self.cycle_length.is_finite()) {
            return err("cycle length must be positive");
        }
        if self.phases.is_empty() {
            return err("controller has no phases");
        }
        for p in &self.phases {
            if !(p.green > 0.0 && p.yellow >= 0.0 && p.all_red >= 0.0 && p.green_start >= 0.0) {
                return err("phase durations must be positive");
            }
            if p.end() > self.cycle_length + 1e-9 {
                return err("phase interval exceeds the cycle");
            }
        }
        let mut spans: Vec<(f64, f64)> = self.phases.iter().map(|p| (p.green_start, p.end())).collect();
        spans.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in spans.windows(2) {
            if w[1].0 < w[0].1 - 1e-9 {
                return err("conflicting phases overlap");
            }
        }
        Ok(())
    }
}

/// Two-phase crossover controller: each through movement gets the same
/// green, followed by its clearance.
pub fn two_phase_crossover(id: &str, phases: [&str; 2], cycle: f64, green: f64, clearance: f64, yellow: f64, offset: f64) -> SignalController {
    let y = yellow.min(clearance);
    SignalController::sequential(
        id,
        cycle,
        offset,
        &[(phases[0], green, y, clearance - y), (phases[1], green, y, clearance - y)],
    )
}

/// Three-phase diamond terminal: through, left onto the on-ramp, left from
/// the off-ramp.
pub fn three_phase_terminal(id: &str, cycle: f64, greens: [f64; 3], clearance: f64, yellow: f64, offset: f64) -> SignalController {
    let y = yellow.min(clearance);
    let r = clearance - y;
    SignalController::sequential(
        id,
        cycle,
        offset,
        &[
            ("through", greens[0], y, r),
            ("left_to_ramp", greens[1], y, r),
            ("left_from_ramp", greens[2], y, r),
        ],
    )
}

/// Built-in crossover plans: west and east crossovers, 55 s green per
/// through movement, 5 s clearance, 120 s cycle, zero offsets.
pub fn default_ddi_plan() -> Vec<SignalController> {
    alloc::vec![
        two_phase_crossover("west_crossover", ["eb_inbound", "wb_outbound"], 120.0, 55.0, 5.0, 3.0, 0.0),
        two_phase_crossover("east_crossover", ["eb_outbound", "wb_inbound"], 120.0, 55.0, 5.0, 3.0, 0.0),
    ]
}

/// Built-in diamond terminal plans: 73/17/18 s greens, 4 s clearance each.
pub fn default_cdi_plan() -> Vec<SignalController> {
    alloc::vec![
        three_phase_terminal("west_terminal", 120.0, [73.0, 17.0, 18.0], 4.0, 3.0, 0.0),
        three_phase_terminal("east_terminal", 120.0, [73.0, 17.0, 18.0], 4.0, 3.0, 0.0),
    ]
}
