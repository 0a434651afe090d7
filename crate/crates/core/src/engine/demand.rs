//! Demand generation: Poisson arrivals per origin and the per-vehicle
//! class, confusion and route draws.
//!
//! Every draw consumes exactly one uniform from its own stream whatever the
//! outcome, so runs that differ only in MPR or confusion share see the same
//! arrival times and routes.

use alloc::vec::Vec;

use crate::dynamics::VehicleClass;
use crate::rng::Uniform;

/// Homogeneous Poisson arrival process.
#[derive(Debug, Clone)]
pub struct ArrivalProcess {
    stream: Uniform,
    mean_headway: f64,
    next: f64,
}

impl ArrivalProcess {
    pub fn new(vph: f64, mut stream: Uniform) -> Self {
        let mean_headway = if vph > 0.0 { 3600.0 / vph } else { f64::INFINITY };
        let next = exponential(&mut stream, mean_headway);
        ArrivalProcess {
            stream,
            mean_headway,
            next,
        }
    }

    /// Time of the next arrival (infinite for zero demand).
    pub fn peek(&self) -> f64 {
        self.next
    }

    /// Returns the next arrival if it happens at or before `t`.
    pub fn pop_until(&mut self, t: f64) -> Option<f64> {
        if self.next > t {
            return None;
        }
        let now = self.next;
        self.next = now + exponential(&mut self.stream, self.mean_headway);
        Some(now)
    }
}

fn exponential(u: &mut Uniform, mean: f64) -> f64 {
    if !mean.is_finite() {
        return f64::INFINITY;
    }
    -mean * libm::log(1.0 - u.next_f64())
}

/// Arrival times in `[0, horizon)` for a rate of `vph` vehicles per hour.
pub fn generate_arrivals(vph: f64, horizon: f64, stream: Uniform) -> Vec<f64> {
    let mut p = ArrivalProcess::new(vph, stream);
    let mut out = Vec::new();
    while p.peek() < horizon {
        out.extend(p.pop_until(horizon));
    }
    out
}

/// Bernoulli(`mpr`) draw of the vehicle class.
pub fn assign_class(stream: &mut Uniform, mpr: f64) -> VehicleClass {
    if stream.next_f64() < mpr {
        VehicleClass::Cav
    } else {
        VehicleClass::Hv
    }
}

/// Whether a vehicle's driver is unfamiliar with the design. Automated
/// vehicles are never confused.
pub fn assign_confusion(stream: &mut Uniform, share: f64, class: VehicleClass) -> bool {
    let u = stream.next_f64();
    class == VehicleClass::Hv && u < share
}

/// Index into `shares` drawn proportionally to the shares.
pub fn choose_route(stream: &mut Uniform, shares: &[f64]) -> usize {
    let u = stream.next_f64() * shares.iter().sum::<f64>();
    let mut acc = 0.0;
    for (i, s) in shares.iter().enumerate() {
        acc += s;
        if u < acc {
            return i;
        }
    }
    // rounding at the top end lands on the last route with nonzero share
    shares.iter().rposition(|&s| s > 0.0).unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{RandomStream, StreamKind};

    fn stream(seed: u64) -> Uniform {
        RandomStream::new(seed).substream(StreamKind::Arrivals(0))
    }

    #[test]
    fn zero_demand_is_empty() {
        assert!(generate_arrivals(0.0, 3600.0, stream(1)).is_empty());
    }

    #[test]
    fn poisson_count_within_three_sigma() {
        for seed in 0..5 {
            let n = generate_arrivals(3600.0, 3600.0, stream(seed)).len() as f64;
            assert!((n - 3600.0).abs() <= 180.0, "seed {seed}: {n}");
        }
    }

    #[test]
    fn arrivals_sorted_and_reproducible() {
        let a = generate_arrivals(1000.0, 600.0, stream(3));
        assert_eq!(a, generate_arrivals(1000.0, 600.0, stream(3)));
        assert!(a.windows(2).all(|w| w[0] <= w[1]));
        assert!(a.iter().all(|&t| (0.0..600.0).contains(&t)));
    }

    #[test]
    fn class_extremes_and_share() {
        let mut s = stream(5);
        assert!((0..1000).all(|_| assign_class(&mut s, 0.0) == VehicleClass::Hv));
        assert!((0..1000).all(|_| assign_class(&mut s, 1.0) == VehicleClass::Cav));
        let cav = (0..10_000).filter(|_| assign_class(&mut s, 0.5) == VehicleClass::Cav).count();
        assert!((4700..=5300).contains(&cav), "{cav}");
    }

    #[test]
    fn confusion_only_for_humans() {
        let mut s = stream(6);
        assert!((0..1000).all(|_| !assign_confusion(&mut s, 0.0, VehicleClass::Hv)));
        assert!((0..1000).all(|_| !assign_confusion(&mut s, 0.2, VehicleClass::Cav)));
        let n = (0..10_000).filter(|_| assign_confusion(&mut s, 0.2, VehicleClass::Hv)).count();
        assert!((1700..=2300).contains(&n), "{n}");
    }

    #[test]
    fn route_choice_follows_shares() {
        let mut s = stream(7);
        let mut counts = [0usize; 3];
        for _ in 0..10_000 {
            counts[choose_route(&mut s, &[0.5, 0.0, 0.5])] += 1;
        }
        assert_eq!(counts[1], 0);
        assert!((4700..=5300).contains(&counts[0]));
    }
}
