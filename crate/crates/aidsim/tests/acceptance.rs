//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runs every replication the criteria call for, so it takes
//! minutes rather than seconds.

use std::process::ExitCode;
use std::time::Instant;

use aidsim::analysis::delay_anova;
use aidsim::experiment::{run_levels, LevelRun};
use aidsim::{Scenario, Sweep};
use aidsim_core::dynamics::{
    cah_accel, desired_gap, eidm_accel, idm_accel, longitudinal_accel, DriverParams, LeaderContext, EMERGENCY_DECEL,
};
use aidsim_core::engine::{detector_bins, measure_delay, measure_throughput, run_on};
use aidsim_core::netmodel::build;
use aidsim_core::rng::{RandomStream, StreamKind};
use aidsim_core::stats::{anova_oneway, bootstrap_ci, tukey_hsd, SampleGroup};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Runs a bundled scenario with its sweeps replaced by `sweep`.
fn sweep(name: &str, sets: &[&str], sweep: &str) -> Vec<LevelRun> {
    let t = Instant::now();
    let mut s = Scenario::bundled(name).expect("bundled scenario");
    for a in sets {
        s.set_str(a).expect("override");
    }
    s.sweeps = vec![sweep.parse::<Sweep>().expect("sweep")];
    let levels = s.levels().expect("levels").into_iter().map(|(l, c)| (l.label, c)).collect();
    let runs = run_levels(levels, jobs()).expect("runs");
    let n: usize = runs.iter().map(|l| l.records.len()).sum();
    eprintln!("  {name} {sets:?} {sweep}: {n} runs in {:.0} s", t.elapsed().as_secs_f64());
    runs
}

fn mean(x: impl IntoIterator<Item = f64>) -> f64 {
    let (s, n) = x.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    s / n as f64
}

fn throughput(l: &LevelRun) -> f64 {
    mean(l.records.iter().map(measure_throughput))
}

fn delay(l: &LevelRun) -> f64 {
    mean(l.records.iter().map(|r| measure_delay(r).unwrap_or(f64::NAN)))
}

fn criterion_1(cdi: &[LevelRun], ddi: &[LevelRun]) -> Outcome {
    let (c, d) = (throughput(&cdi[0]), throughput(&ddi[0]));
    outcome(
        d >= 1.10 * c,
        format!("MPR 0: CDI {c:.0} vph, DDI {d:.0} vph, ratio {:.3} (need >= 1.10)", d / c),
    )
}

fn criterion_2(cdi: &[LevelRun], ddi: &[LevelRun]) -> Outcome {
    let gaps: Vec<f64> = cdi.iter().zip(ddi).map(|(c, d)| delay(c) - delay(d)).collect();
    let worst = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    let list: Vec<String> = gaps.iter().map(|g| format!("{g:.1}")).collect();
    outcome(
        gaps.iter().all(|g| *g >= 20.0),
        format!("CDI minus DDI delay by MPR level [{}] s, min {worst:.1} (need >= 20)", list.join(", ")),
    )
}

fn criterion_3(cdi: &[LevelRun], ddi: &[LevelRun]) -> Outcome {
    let (c0, c1) = (throughput(&cdi[0]), throughput(cdi.last().unwrap()));
    let (d0, d1) = (throughput(&ddi[0]), throughput(ddi.last().unwrap()));
    let cav_gain = c1 - c0;
    let conversion_gain = d0 - c0;
    outcome(
        c1 >= c0 && d1 >= d0 && cav_gain < conversion_gain,
        format!(
            "CDI {c0:.0} -> {c1:.0}, DDI {d0:.0} -> {d1:.0} vph; CDI CAV gain {cav_gain:.0} vs conversion gain {conversion_gain:.0}"
        ),
    )
}

fn max_diverging_flow(l: &LevelRun) -> f64 {
    l.records
        .iter()
        .flat_map(|r| detector_bins(r, "diverging").expect("diverging detector"))
        .map(|(f, _)| f)
        .fold(0.0, f64::max)
}

fn criterion_4(rcut: &[LevelRun]) -> Outcome {
    let (hv, cav) = (max_diverging_flow(&rcut[0]), max_diverging_flow(&rcut[1]));
    outcome(
        cav >= 1900.0 && hv < cav,
        format!("max 5-min diverging flow: MPR 0 {hv:.0}, MPR 100 {cav:.0} vph/lane (need CAV >= 1900 and HV lower)"),
    )
}

/// Largest set of levels that are pairwise significantly different.
fn largest_separated_set(significant: &[Vec<bool>]) -> usize {
    let k = significant.len();
    (0u32..1 << k)
        .filter(|m| (0..k).all(|i| (i + 1..k).all(|j| m & (1 << i) == 0 || m & (1 << j) == 0 || significant[i][j])))
        .map(u32::count_ones)
        .max()
        .unwrap_or(0) as usize
}

/// Whether the level means increase strictly, and the largest set of
/// mutually separated levels.
fn ordering(runs: &[LevelRun]) -> (bool, usize, String) {
    let a = delay_anova(runs).expect("anova").expect("at least two levels");
    let means = &a.tukey.means;
    let increasing = means.windows(2).all(|w| w[1] > w[0]);
    let separate = largest_separated_set(&a.tukey.significant);
    let cells: Vec<String> = (0..means.len())
        .map(|i| format!("{} {:.2} {}", a.groups[i].label, means[i], a.tukey.letters[i]))
        .collect();
    (
        increasing,
        separate,
        format!("F = {:.2}, p = {:.2e}; {}", a.anova.f, a.anova.p, cells.join(" | ")),
    )
}

fn criterion_5(rcut: &[LevelRun], ddi: &[LevelRun]) -> Outcome {
    let (ri, rs, rd) = ordering(rcut);
    let (di, ds, dd) = ordering(ddi);
    let pass = ri && rs == rcut.len() && di && ds >= 3;
    outcome(
        pass,
        format!(
            "RCUT increasing {ri}, {rs}/{} mutually separate (need all) [{rd}]; DDI increasing {di}, {ds}/{} mutually separate (need 3) [{dd}]",
            rcut.len(),
            ddi.len()
        ),
    )
}

fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300) || a == b
}

/// Textbook evaluation of the three car-following formulas, written out
/// independently of the library.
fn straight_line_examples() -> Result<(), String> {
    let p = DriverParams::cav();
    let (a, b, t, s0) = (2.0f64, 2.0f64, 0.9f64, 1.0f64);
    let v0 = p.desired_speed;
    let gap = |v: f64, vl: f64| (s0 + v * t + v * (v - vl) / (2.0 * (a * b).sqrt())).max(s0);
    let idm = |v: f64, vl: f64, s: f64| a * (1.0 - (v / v0).powi(4) - (gap(v, vl) / s).powi(2));
    let checks = [
        ("s*(20,20)", desired_gap(&p, 20.0, 20.0), gap(20.0, 20.0)),
        ("s*(0,0)", desired_gap(&p, 0.0, 0.0), 1.0),
        ("s*(20,25)", desired_gap(&p, 20.0, 25.0), 1.0),
        ("idm(v0)", idm_accel(&p, v0, None), 0.0),
        ("idm(0)", idm_accel(&p, 0.0, None), 2.0),
        (
            "idm(20,20,19)",
            idm_accel(&p, 20.0, Some(&LeaderContext::new(19.0, 20.0, 0.0))),
            idm(20.0, 20.0, 19.0),
        ),
        ("cah(20,20,19)", cah_accel(&p, 20.0, &LeaderContext::new(19.0, 20.0, 0.0)), 0.0),
        ("cah(20,25,19)", cah_accel(&p, 20.0, &LeaderContext::new(19.0, 25.0, 0.0)), 0.0),
        ("cah(25,20,10)", cah_accel(&p, 25.0, &LeaderContext::new(10.0, 20.0, 0.0)), -1.25),
    ];
    for (name, got, want) in checks {
        if !(rel_close(got, want, 1e-12) || (want == 0.0 && got.abs() < 1e-12)) {
            return Err(format!("{name}: {got} vs {want}"));
        }
    }
    // lower branch of the blend with idm = -8, cah = -1
    let c = 0.99;
    let blend = (1.0 - c) * -8.0 + c * (-1.0 + b * (-7.0f64 / b).tanh());
    if (blend + 3.05).abs() > 0.01 {
        return Err(format!("blend {blend}"));
    }
    if (idm(20.0, 20.0, 19.0) + 0.442).abs() > 1e-3 {
        return Err(format!("idm example {}", idm(20.0, 20.0, 19.0)));
    }
    Ok(())
}

fn equilibrium_residual() -> f64 {
    let mut worst: f64 = 0.0;
    for p in [DriverParams::cav(), DriverParams::hv(22.352)] {
        for i in 0..98 {
            let v = f64::from(i) / 100.0 * p.desired_speed;
            let free = 1.0 - (v / p.desired_speed).powf(p.delta);
            let g = desired_gap(&p, v, v) / free.sqrt();
            let acc = longitudinal_accel(&p, p.desired_speed, v, Some(&LeaderContext::new(g, v, 0.0)));
            worst = worst.max(acc.abs());
        }
    }
    worst
}

/// Branch identity and softening over 10^6 random states; returns the
/// number of violations.
fn eidm_sweep() -> usize {
    let mut u = RandomStream::new(2024).substream(StreamKind::Bootstrap);
    let ps = [DriverParams::cav(), DriverParams::hv(22.352)];
    let mut bad = 0;
    for i in 0..1_000_000 {
        let p = &ps[i % 2];
        let v = 40.0 * u.next_f64();
        let l = LeaderContext::new(0.05 + 300.0 * u.next_f64(), 40.0 * u.next_f64(), -9.0 + 12.0 * u.next_f64());
        let idm = idm_accel(p, v, Some(&l));
        let eidm = eidm_accel(p, v, Some(&l));
        let cah = cah_accel(p, v, &l);
        let bounded = |x: f64| x.is_finite() && (EMERGENCY_DECEL..=p.a_max).contains(&x);
        let identity = idm < cah || eidm == idm;
        if !(bounded(idm) && bounded(eidm) && eidm >= idm && cah.is_finite() && identity) {
            bad += 1;
        }
    }
    bad
}

fn criterion_6(all: &[&[LevelRun]]) -> Outcome {
    let records = || all.iter().flat_map(|s| s.iter()).flat_map(|l| l.records.iter());
    let runs = records().count();
    let collisions: usize = records().map(|r| r.collisions()).sum();
    let unconserved = records().filter(|r| !r.counts.conserved()).count();
    let mut reruns = 0;
    let mut differing = 0;
    for set in all {
        for l in [&set[0], set.last().unwrap()] {
            let net = build(&l.config).expect("network");
            let r = &l.records[0];
            reruns += 1;
            if run_on(&net, &l.config, r.replication, r.seed) != *r {
                differing += 1;
            }
        }
    }
    let residual = equilibrium_residual();
    let sweep_bad = eidm_sweep();
    let scalar = straight_line_examples();
    let pass = collisions == 0 && unconserved == 0 && differing == 0 && residual < 1e-9 && sweep_bad == 0 && scalar.is_ok();
    outcome(
        pass,
        format!(
            "{runs} runs: {collisions} collisions, {unconserved} unconserved; {differing}/{reruns} reruns differ; \
             residual {residual:.1e}; {sweep_bad} bad of 1e6 states; scalar examples {}",
            scalar.map_or_else(|e| e, |()| "ok".into())
        ),
    )
}

struct Reference {
    groups: &'static [&'static [f64]],
    f: f64,
    p: f64,
    q_crit: f64,
    pairs: &'static [&'static [f64]],
}

// Frozen from scipy.stats.f_oneway and scipy.stats.tukey_hsd.
const REFERENCES: [Reference; 3] = [
    Reference {
        groups: &[
            &[6.9, 5.4, 5.8, 4.6, 4.0],
            &[8.3, 6.8, 7.8, 9.2, 6.5],
            &[8.0, 10.5, 8.1, 6.9, 9.3],
            &[5.8, 3.8, 6.1, 5.6, 6.2],
        ],
        f: 9.72383993988353,
        p: 0.0006844538653704723,
        q_crit: 4.046093060626182,
        pairs: &[
            &[1.0, 0.022793380009273, 0.002210821923137707, 0.996121079613238],
            &[0.022793380009273, 1.0, 0.6644649023627884, 0.0351544790349676],
            &[0.002210821923137707, 0.6644649023627884, 1.0, 0.0034505561857393063],
            &[0.996121079613238, 0.0351544790349676, 0.0034505561857393063, 1.0],
        ],
    },
    Reference {
        groups: &[
            &[24.5, 23.5, 26.4, 27.1, 29.9],
            &[28.4, 34.2, 29.5, 32.2, 30.1, 28.8],
            &[26.1, 28.3, 24.3, 26.2, 27.8, 25.0, 27.4],
            &[32.1, 31.4, 33.0],
        ],
        f: 10.539273517233447,
        p: 0.00037588936910377827,
        q_crit: 4.019984785971552,
        pairs: &[
            &[1.0, 0.010341398812385383, 0.9989077801925931, 0.003376784606323957],
            &[0.010341398812385383, 1.0, 0.007263597074463557, 0.6411348375389953],
            &[0.9989077801925931, 0.007263597074463557, 1.0, 0.0026217190070769725],
            &[0.003376784606323957, 0.6411348375389953, 0.0026217190070769725, 1.0],
        ],
    },
    Reference {
        groups: &[
            &[72.1, 73.4, 71.8, 72.9, 74.0, 72.5],
            &[73.0, 74.1, 72.2, 73.8, 75.0, 73.3],
            &[74.2, 75.5, 73.9, 74.8, 76.1, 74.4],
            &[75.0, 76.2, 74.6, 75.9, 77.3, 75.2],
            &[76.1, 77.0, 75.5, 76.8, 78.2, 76.0],
        ],
        f: 17.166945373467115,
        p: 6.86160575558491e-07,
        q_crit: 4.153363329963531,
        pairs: &[
            &[1.0, 0.5824886473655897, 0.005981425527507023, 8.853976506861816e-05, 1.3480642296892498e-06],
            &[0.5824886473655897, 1.0, 0.15795257858627476, 0.0037514799865019377, 5.074855872899686e-05],
            &[0.005981425527507023, 0.15795257858627476, 1.0, 0.46818832824776935, 0.018582645164339384],
            &[8.853976506861816e-05, 0.0037514799865019377, 0.46818832824776935, 1.0, 0.4498385424466499],
            &[1.3480642296892498e-06, 5.074855872899686e-05, 0.018582645164339384, 0.4498385424466499, 1.0],
        ],
    },
];

fn criterion_7() -> Outcome {
    let mut mismatches = Vec::new();
    let mut compared = 0;
    for (n, r) in REFERENCES.iter().enumerate() {
        let g: Vec<SampleGroup> = r
            .groups
            .iter()
            .enumerate()
            .map(|(i, x)| SampleGroup::new(format!("g{i}"), x.to_vec()))
            .collect();
        let a = anova_oneway(&g).expect("anova");
        let t = tukey_hsd(&g, 0.95).expect("tukey");
        let mut values = vec![("F", a.f, r.f), ("p", a.p, r.p), ("q", t.q_crit, r.q_crit)];
        for i in 0..g.len() {
            for j in 0..g.len() {
                if i != j {
                    values.push(("pair", t.p_values[i][j], r.pairs[i][j]));
                }
            }
        }
        for (what, got, want) in values {
            compared += 1;
            if !rel_close(got, want, 1e-6) {
                mismatches.push(format!("dataset {n} {what}: {got} vs {want}"));
            }
        }
    }
    let mut u = RandomStream::new(7).substream(StreamKind::Bootstrap);
    let ci = bootstrap_ci(&[4.2; 12], 0.90, 1000, &mut u).expect("bootstrap");
    let zero_width = ci.high - ci.low == 0.0 && (ci.mean - 4.2).abs() < 1e-12;
    outcome(
        mismatches.is_empty() && zero_width,
        format!(
            "{compared} reference values, {} mismatches{}; constant-data interval [{}, {}]",
            mismatches.len(),
            mismatches.first().map_or(String::new(), |m| format!(" (first: {m})")),
            ci.low,
            ci.high
        ),
    )
}

fn main() -> ExitCode {
    let start = Instant::now();
    eprintln!("acceptance runs on {} thread(s)", jobs());
    let mpr = "mpr=0,10,20,30,40,50,60,70,80,90,100";
    let cdi = sweep("base-cdi", &[], mpr);
    let ddi = sweep("base-ddi", &[], mpr);
    let rcut = sweep("rcut-confusion", &["run.replications=10"], "mpr=0,100");
    let rcut_confusion = sweep("rcut-confusion", &[], "confusion=0,5,10,15,20");
    let ddi_confusion = sweep("base-ddi", &["run.replications=30"], "confusion=0,5,10,15,20");

    let results = [
        ("1 DDI throughput >= 1.10 x CDI at MPR 0", criterion_1(&cdi, &ddi)),
        ("2 CDI delay exceeds DDI by >= 20 s at every MPR", criterion_2(&cdi, &ddi)),
        ("3 CAV effect direction", criterion_3(&cdi, &ddi)),
        ("4 RCUT full-CAV capacity", criterion_4(&rcut)),
        ("5 confusion ANOVA ordering", criterion_5(&rcut_confusion, &ddi_confusion)),
        (
            "6 property suite",
            criterion_6(&[&cdi, &ddi, &rcut, &rcut_confusion, &ddi_confusion]),
        ),
        ("7 statistics oracle", criterion_7()),
    ];
    let mut failed = 0;
    for (name, o) in &results {
        println!("{} criterion {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!(
        "{} of {} criteria passed in {:.0} s",
        results.len() - failed,
        results.len(),
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
