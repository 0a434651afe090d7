use crate::units::kmh_to_mps;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum VehicleClass {
    Hv,
    Cav,
}

impl VehicleClass {
    pub fn as_str(self) -> &'static str {
        match self {
            VehicleClass::Hv => "HV",
            VehicleClass::Cav => "CAV",
        }
    }
}

/// Car-following parameter bundle for one vehicle class. All SI.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriverParams {
    /// Maximum acceleration `a`, m/s².
    pub a_max: f64,
    /// Comfortable (desired) deceleration `b`, m/s², positive.
    pub b_comf: f64,
    /// Coolness factor `c` of the enhanced model, in [0, 1].
    pub coolness: f64,
    /// Free-acceleration exponent `δ`.
    pub delta: f64,
    /// Desired time gap `T`, s.
    pub time_gap: f64,
    /// Standstill distance `s₀`, m.
    pub min_gap: f64,
    /// Open-road desired speed, m/s. Capped by the link limit at run time.
    pub desired_speed: f64,
    /// Delay before a queue leader reacts to green, s.
    pub startup_lost_time: f64,
    /// Use the constant-acceleration-heuristic blend (automated control).
    pub uses_cah: bool,
}

impl DriverParams {
    /// Automated-vehicle controller parameters.
    pub fn cav() -> Self {
        DriverParams {
            a_max: 2.0,
            b_comf: 2.0,
            coolness: 0.99,
            delta: 4.0,
            time_gap: 0.9,
            min_gap: 1.0,
            desired_speed: kmh_to_mps(105.0),
            startup_lost_time: 0.0,
            uses_cah: true,
        }
    }

    /// Human driver stand-in: plain IDM with human-calibrated values and a
    /// 2 s start-up lost time. Desired speed follows the link limit.
    pub fn hv(desired_speed: f64) -> Self {
        DriverParams {
            a_max: 1.5,
            b_comf: 2.0,
            coolness: 0.0,
            delta: 4.0,
            time_gap: 1.5,
            min_gap: 2.0,
            desired_speed,
            startup_lost_time: 2.0,
            uses_cah: false,
        }
    }

    /// Returns the list of violated bounds, empty when valid.
    pub fn violations(&self) -> alloc::vec::Vec<&'static str> {
        let mut v = alloc::vec::Vec::new();
        let finite = [
            self.a_max,
            self.b_comf,
            self.coolness,
            self.delta,
            self.time_gap,
            self.min_gap,
            self.desired_speed,
            self.startup_lost_time,
        ]
        .iter()
        .all(|x| x.is_finite());
        if !finite {
            v.push("all parameters must be finite");
            return v;
        }
        if self.a_max <= 0.0 {
            v.push("max_accel must be > 0");
        }
        if self.b_comf <= 0.0 {
            v.push("comfortable_decel must be > 0");
        }
        if self.min_gap <= 0.0 {
            v.push("min_gap must be > 0");
        }
        if self.time_gap < 0.0 {
            v.push("time_gap must be >= 0");
        }
        if !(0.0..=1.0).contains(&self.coolness) {
            v.push("coolness must lie in [0, 1]");
        }
        if self.delta <= 0.0 {
            v.push("delta must be > 0");
        }
        if self.desired_speed <= 0.0 {
            v.push("desired_speed must be > 0");
        }
        if self.startup_lost_time < 0.0 {
            v.push("startup_lost_time must be >= 0");
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_valid() {
        assert!(DriverParams::cav().violations().is_empty());
        assert!(DriverParams::hv(22.352).violations().is_empty());
        let cav = DriverParams::cav();
        assert_eq!(cav.time_gap, 0.9);
        assert_eq!(cav.min_gap, 1.0);
        assert_eq!(cav.coolness, 0.99);
        assert_eq!(cav.startup_lost_time, 0.0);
        assert!((cav.desired_speed - 29.1667).abs() < 1e-4);
        assert_eq!(DriverParams::hv(20.0).startup_lost_time, 2.0);
    }

    #[test]
    fn bad_coolness_rejected() {
        let mut p = DriverParams::cav();
        p.coolness = 1.2;
        p.min_gap = 0.0;
        assert_eq!(p.violations().len(), 2);
    }
}
