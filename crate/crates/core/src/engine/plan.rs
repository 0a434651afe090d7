//! Lane planning along a route: how many lane changes each lane still needs
//! and which lane a vehicle enters on the next link.

use alloc::vec;
use alloc::vec::Vec;

use crate::netmodel::{RoadNetwork, RouteId};

/// Cost of a lane from which the route cannot be completed.
pub const UNREACHABLE: u32 = u32::MAX / 4;

#[derive(Debug, Clone, PartialEq)]
pub struct RoutePlan {
    /// `transfer[k][i]`: changes still needed after leaving link `k` from lane `i`.
    pub transfer: Vec<Vec<u32>>,
    /// `cost[k][i]`: fewest changes to finish the route from lane `i` of link `k`.
    pub cost: Vec<Vec<u32>>,
    /// Lane taken on link `k + 1` when leaving link `k` from lane `i`.
    pub next_lane: Vec<Vec<Option<u8>>>,
    /// Minimum of `transfer[k]`.
    pub best: Vec<u32>,
}

impl RoutePlan {
    pub fn new(net: &RoadNetwork, route: RouteId) -> Self {
        let links = &net.route(route).links;
        let m = links.len();
        let lanes = |k: usize| net.link(links[k]).lane_count as usize;
        let mut transfer: Vec<Vec<u32>> = (0..m).map(|k| vec![UNREACHABLE; lanes(k)]).collect();
        let mut cost: Vec<Vec<u32>> = (0..m).map(|k| vec![UNREACHABLE; lanes(k)]).collect();
        let mut next_lane: Vec<Vec<Option<u8>>> = (0..m).map(|k| vec![None; lanes(k)]).collect();
        transfer[m - 1].iter_mut().for_each(|c| *c = 0);
        for k in (0..m).rev() {
            if k + 1 < m {
                let conn = net.link(links[k]).connector_to(links[k + 1]).expect("validated route");
                for &(a, b) in &conn.lanes {
                    let c = cost[k + 1][b as usize];
                    let slot = &mut transfer[k][a as usize];
                    let better = match next_lane[k][a as usize] {
                        None => true,
                        Some(prev) => c < *slot || (c == *slot && b < prev),
                    };
                    if better {
                        *slot = c;
                        next_lane[k][a as usize] = Some(b);
                    }
                }
            }
            for i in 0..lanes(k) {
                cost[k][i] = (0..lanes(k))
                    .filter(|&l| transfer[k][l] < UNREACHABLE)
                    .map(|l| transfer[k][l] + i.abs_diff(l) as u32)
                    .min()
                    .unwrap_or(UNREACHABLE);
            }
        }
        let best = transfer.iter().map(|t| t.iter().copied().min().unwrap_or(UNREACHABLE)).collect();
        RoutePlan {
            transfer,
            cost,
            next_lane,
            best,
        }
    }

    /// Adjacent lane index that moves toward the nearest lane with the
    /// best transfer cost on link `k`, or `None` when `lane` already has it.
    pub fn toward_best(&self, k: usize, lane: u8) -> Option<u8> {
        self.toward(k, lane, |t| t == self.best[k])
    }

    /// Same, toward any lane that can still complete the route.
    pub fn toward_feasible(&self, k: usize, lane: u8) -> Option<u8> {
        self.toward(k, lane, |t| t < UNREACHABLE)
    }

    fn toward(&self, k: usize, lane: u8, ok: impl Fn(u32) -> bool) -> Option<u8> {
        let t = &self.transfer[k];
        if ok(t[lane as usize]) {
            return None;
        }
        let target = (0..t.len())
            .filter(|&l| ok(t[l]))
            .min_by_key(|&l| (l.abs_diff(lane as usize), l))?;
        Some(if target > lane as usize { lane + 1 } else { lane - 1 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ScenarioConfig;
    use crate::netmodel::{build, NetworkKind};

    fn plan(kind: NetworkKind, route: &str) -> (RoadNetwork, RoutePlan) {
        let net = build(&ScenarioConfig::baseline(kind)).unwrap();
        let r = net.routes.iter().find(|r| r.name == route).unwrap().id;
        let p = RoutePlan::new(&net, r);
        (net, p)
    }

    #[test]
    fn through_route_needs_no_changes() {
        let (_, p) = plan(NetworkKind::Ddi, "eb_through");
        // only the extra bay and ramp lanes of the four-lane links cost a change
        let expect: Vec<Vec<u32>> = vec![
            vec![0, 0, 0],
            vec![0, 0, 0],
            vec![0, 0, 0, 1],
            vec![0, 0, 0],
            vec![1, 0, 0, 0],
            vec![0, 0, 0],
        ];
        assert_eq!(p.cost, expect);
    }

    #[test]
    fn ddi_left_turn_heads_for_the_inside_lane() {
        let (_, p) = plan(NetworkKind::Ddi, "eb_left");
        assert_eq!(p.cost[0], vec![2, 1, 0]);
        assert_eq!(p.toward_best(0, 0), Some(1));
        assert_eq!(p.toward_best(0, 2), None);
        // lanes that cannot reach the on-ramp from the merge section dead-end
        assert_eq!(p.next_lane[2], vec![None, None, Some(0), None]);
    }

    #[test]
    fn rcut_uturn_needs_the_pocket() {
        let (_, p) = plan(NetworkKind::Rcut, "minor_uturn");
        // acceleration lane, then three more changes up to the pocket
        assert_eq!(p.cost[0], vec![4]);
        assert_eq!(p.cost[3], vec![3, 2, 1, 0]);
        assert_eq!(p.transfer[3][3], 0);
        assert_eq!(p.transfer[3][0], UNREACHABLE);
        assert_eq!(p.toward_feasible(3, 1), Some(2));
    }

    #[test]
    fn cdi_left_uses_the_bay() {
        let (_, p) = plan(NetworkKind::Cdi, "eb_left");
        // between-terminals lane 2 may continue into lane 2 or the bay (3)
        assert_eq!(p.next_lane[2][2], Some(3));
        assert_eq!(p.cost[3][3], 0);
    }
}
