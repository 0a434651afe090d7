//! Driver models: longitudinal car-following (IDM, constant-acceleration
//! heuristic, and their enhanced blend), start-up lost time, gap-acceptance
//! lane changing, and the confusion slowdown.

mod car_following;
mod confusion;
mod lane_change;
mod params;

pub use car_following::{
    cah_accel, clamp_command, desired_gap, eidm_accel, hv_accel, idm_accel, longitudinal_accel,
    must_stop_for_signal, signal_approach_accel, LeaderContext, EMERGENCY_DECEL,
};
pub use confusion::{confusion_speed_filter, ConfusionBehavior};
pub use lane_change::{
    lane_change_decision, LaneCandidate, LaneChange, LaneChangeRules, LaneNeed, Side,
};
pub use params::{DriverParams, VehicleClass};
