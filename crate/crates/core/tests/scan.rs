use std::f64::consts::FRAC_PI_4;

use diew::optimize::{bisect_threshold, table1_threshold, OptimizerConfig, ScanParam};
use diew::scan::{
    classify_point, column_spans, is_up_set, read_csv, sweep, write_csv, GridSpec, RegionPoint, ScanMode,
};
use diew::states::{Family, StateParams};
use diew::witnesses::WitnessName;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn grid(theta: &str, p: &str, p1: f64) -> GridSpec {
    GridSpec::new(theta.parse().unwrap(), p.parse().unwrap(), p1).unwrap()
}

fn cfg(restarts: usize) -> OptimizerConfig {
    OptimizerConfig::default().with_restarts(restarts)
}

/// Distance of a point from the closest of the four closed-form boundaries.
fn boundary_gap(w: WitnessName, pt: &RegionPoint) -> f64 {
    Family::ALL
        .iter()
        .map(|&f| {
            let t = table1_threshold(w, f, pt.theta).unwrap();
            let x = if f == Family::Rho2 { pt.p1 } else { pt.p };
            (x - t).abs()
        })
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn analytic_and_numeric_agree_away_from_boundaries() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut checked = 0;
    while checked < 20 {
        let theta = rng.random_range(0.1..FRAC_PI_4);
        let p = rng.random_range(0.0..1.0);
        let p1 = rng.random_range(0.4..0.9);
        let probe = classify_point(theta, p, p1, WitnessName::Bancal, ScanMode::Analytic, &cfg(1)).unwrap();
        if boundary_gap(WitnessName::Bancal, &probe) <= 0.02 {
            continue;
        }
        let numeric = classify_point(theta, p, p1, WitnessName::Bancal, ScanMode::Numeric, &cfg(16)).unwrap();
        assert_eq!(probe.violated, numeric.violated, "theta={theta} p={p} p1={p1}");
        assert_eq!(probe.enhanced, numeric.enhanced);
        checked += 1;
    }
}

#[test]
fn numeric_disagreements_hug_the_boundaries() {
    for w in [WitnessName::Mermin, WitnessName::Bancal] {
        let g = grid("0.2:0.7853981634:4", "0.3:1:15", 0.6);
        let analytic = sweep(&g, w, ScanMode::Analytic, &cfg(1)).unwrap();
        let numeric = sweep(&g, w, ScanMode::Numeric, &cfg(16)).unwrap();
        for (a, n) in analytic.iter().zip(&numeric) {
            assert_eq!((a.theta, a.p), (n.theta, n.p));
            if a.violated != n.violated {
                assert!(boundary_gap(w, a) < 2e-3, "{w} at theta={} p={}", a.theta, a.p);
            }
        }
        assert!(is_up_set(&numeric, |pt| pt.violated[3]));
    }
}

#[test]
fn enhancement_region_follows_closed_curves() {
    let g = grid("0.1:0.7853981634:40", "0:1:201", 0.6);
    let pts = sweep(&g, WitnessName::Bancal, ScanMode::Analytic, &cfg(1)).unwrap();
    assert_eq!(pts.len(), 40 * 201);
    let step = g.p.step();
    let spans = column_spans(&pts, |pt| pt.enhanced);
    assert!(spans.len() > 30);
    for s in spans {
        let lo = 1.0 / (s.theta.cos().powi(2) + 1.0);
        let hi = (2.0 / (3.0 * (2.0 * s.theta).sin())).min(1.0);
        assert!(
            (s.lo - lo).abs() <= step + 1e-9,
            "theta={} lo={} vs {lo}",
            s.theta,
            s.lo
        );
        assert!(
            (s.hi - hi).abs() <= step + 1e-9,
            "theta={} hi={} vs {hi}",
            s.theta,
            s.hi
        );
    }
    assert!(is_up_set(&pts, |pt| pt.violated[3]));
}

#[test]
fn middle_state_above_two_thirds_blocks_enhancement() {
    let g = grid("0.1:0.7853981634:20", "0:1:51", 0.7);
    let pts = sweep(&g, WitnessName::Bancal, ScanMode::Analytic, &cfg(1)).unwrap();
    assert!(pts.iter().all(|pt| pt.violated[1] && !pt.enhanced));
}

#[test]
fn steering_boundary_for_the_swapped_state() {
    let fixed = StateParams::new(1.0, 1.0, FRAC_PI_4).unwrap();
    let t = bisect_threshold(
        WitnessName::Cavalcanti,
        Family::Rho2,
        ScanParam::P1,
        fixed,
        1e-3,
        &cfg(24),
    )
    .unwrap()
    .threshold;
    assert!((t - 0.670236).abs() < 1e-3);
    let g = grid("0.1:0.7853981634:3", "0.4:1:25", 0.6);
    let pts = sweep(&g, WitnessName::Cavalcanti, ScanMode::Numeric, &cfg(12)).unwrap();
    assert!(is_up_set(&pts, |pt| pt.violated[3]));
    for s in column_spans(&pts, |pt| pt.violated[3]) {
        let expected = 1.0 / ((2.0 / t - 2.0) * s.theta.cos().powi(2) + 1.0);
        assert!(
            s.lo >= expected - 1e-3 && s.lo - expected <= g.p.step() + 1e-3,
            "theta={}",
            s.theta
        );
    }
}

#[test]
fn csv_round_trip_with_values() {
    let g = grid("0.3:0.7:3", "0.5:1:4", 0.65);
    let pts = sweep(&g, WitnessName::Liang, ScanMode::Numeric, &cfg(4)).unwrap();
    assert!(pts.iter().all(|pt| pt.values.is_some()));
    let mut buf = Vec::new();
    write_csv(&pts, &mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    let header = text.lines().next().unwrap();
    assert_eq!(
        header,
        "theta,p,p1,v_rho1,v_rho2,v_rho3,v_rho4,enhanced,val_rho1,val_rho2,val_rho3,val_rho4"
    );
    assert_eq!(read_csv(buf.as_slice()).unwrap(), pts);
}

#[test]
fn sweep_is_deterministic_across_schedules() {
    use diew::par::Execution;
    let g = grid("0.3:0.7:3", "0.5:1:3", 0.65);
    let a = sweep(&g, WitnessName::Mermin, ScanMode::Numeric, &cfg(4)).unwrap();
    let b = sweep(
        &g,
        WitnessName::Mermin,
        ScanMode::Numeric,
        &cfg(4).with_exec(Execution::Sequential),
    )
    .unwrap();
    assert_eq!(a, b);
    let order: Vec<(f64, f64)> = a.iter().map(|pt| (pt.theta, pt.p)).collect();
    let mut sorted = order.clone();
    sorted.sort_by(|x, y| x.partial_cmp(y).unwrap());
    assert_eq!(order, sorted);
}
