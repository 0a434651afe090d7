/// Unfamiliar-driver settings. Confused drivers slow down inside zones
/// placed upstream of the unconventional features and act on route
/// decisions later, with a relaxed gap acceptance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfusionBehavior {
    pub slowdown_factor: f64,
}

impl Default for ConfusionBehavior {
    fn default() -> Self {
        ConfusionBehavior {
            slowdown_factor: 0.5,
        }
    }
}

/// Current desired speed of a vehicle given its base desired speed.
pub fn confusion_speed_filter(base: f64, confused: bool, in_zone: bool, behavior: &ConfusionBehavior) -> f64 {
    if confused && in_zone {
        base * behavior.slowdown_factor
    } else {
        base
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slowdown_applies_only_to_confused_in_zone() {
        let b = ConfusionBehavior::default();
        assert_eq!(confusion_speed_filter(22.35, false, true, &b), 22.35);
        assert!((confusion_speed_filter(22.35, true, true, &b) - 11.175).abs() < 1e-12);
        assert_eq!(confusion_speed_filter(22.35, true, false, &b), 22.35);
    }
}
