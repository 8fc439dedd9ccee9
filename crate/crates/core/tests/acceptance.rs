//! Acceptance gate. Each test prints one `ACCEPTANCE n: PASS/FAIL` line with
//! the measured values before asserting, so the verdicts survive in the output
//! of both passing and failing runs (use `--nocapture` to see the PASS lines).
//!
//! Targets and tolerances are pinned here and nowhere else. Criteria 1, 2, 3,
//! and 8 currently fail: the maximizer finds narrow above-2 spikes close to
//! the classical bound whose onset sits near x = 2.12 (and near x = 0.95 for
//! the unitary kernel), not at the published 2.0 / 2.6, and the spike-driven
//! nonunitary crossing is not stable under solver-resolution changes. See the
//! repository README for the numerical discussion.

use std::time::Instant;

use meson_bell::chsh::{find_threshold, maximize_chsh, OptimizerOptions};
use meson_bell::correlation::{corr_from_table, correlation, joint_table, CorrelationKind, TimePair};
use meson_bell::model::builtin_systems;
use meson_bell::montecarlo::{estimate_chsh, estimate_correlation, sample_events, SettingIndex};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const SQRT8: f64 = 2.828427124746190;

fn defaults() -> OptimizerOptions {
    OptimizerOptions::default()
}

fn report(n: u32, pass: bool, detail: &str) {
    println!("ACCEPTANCE {n}: {}; {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "ACCEPTANCE {n} failed; {detail}");
}

#[test]
fn acceptance_1_nonunitary_threshold() {
    let start = Instant::now();
    let r = find_threshold(CorrelationKind::NonUnitary, 0.0, 1e-3, defaults()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let pass = (r.critical_x - 2.0).abs() <= 0.05 && secs < 120.0;
    report(
        1,
        pass,
        &format!(
            "nonunitary threshold critical_x = {:.8}, target 2.0 +/- 0.05, runtime {secs:.2} s (budget 120 s)",
            r.critical_x
        ),
    );
}

#[test]
fn acceptance_2_unitary_threshold() {
    let start = Instant::now();
    let r = find_threshold(CorrelationKind::Unitary, 0.0, 1e-3, defaults()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let pass = (r.critical_x - 2.6).abs() <= 0.05 && secs < 120.0;
    report(
        2,
        pass,
        &format!(
            "unitary threshold critical_x = {:.8}, target 2.6 +/- 0.05, runtime {secs:.2} s (budget 120 s)",
            r.critical_x
        ),
    );
}

#[test]
fn acceptance_3_kaon_limit_threshold() {
    let r = find_threshold(CorrelationKind::Unitary, 1.993, 1e-3, defaults()).unwrap();
    let nu = find_threshold(CorrelationKind::NonUnitary, 0.0, 1e-3, defaults()).unwrap();
    let pass = (r.critical_x - 2.0).abs() <= 0.1;
    report(
        3,
        pass,
        &format!(
            "unitary threshold at y = 1.993 critical_x = {:.8}, target 2.0 +/- 0.1 (nonunitary comparison {:.8})",
            r.critical_x, nu.critical_x
        ),
    );
}

#[test]
fn acceptance_4_verdict_table() {
    let mut lines = Vec::new();
    let mut pass = true;
    for sys in builtin_systems() {
        let expect_violation = sys.name == "Bs";
        for kind in [CorrelationKind::NonUnitary, CorrelationKind::Unitary] {
            let got = meson_bell::chsh::verdict(sys.system, sys.bound, &[kind], defaults())
                .unwrap()
                .remove(0);
            if got.violates != expect_violation {
                pass = false;
            }
            lines.push(format!(
                "{} {:?} s_max {:.8} violates {}",
                sys.name, kind, got.s_max, got.violates
            ));
        }
    }
    report(
        4,
        pass,
        &format!(
            "violation only for Bs across both decaying kinds [{}]",
            lines.join(", ")
        ),
    );
}

#[test]
fn acceptance_5_renormalized_formal_violation() {
    let r = maximize_chsh(CorrelationKind::Renormalized, 0.77, 0.0, defaults()).unwrap();
    let pass = (r.s_max - SQRT8).abs() <= 1e-3;
    report(
        5,
        pass,
        &format!(
            "renormalized s_max = {:.9} at x = 0.77, target 2*sqrt(2) +/- 1e-3",
            r.s_max
        ),
    );
}

#[test]
fn acceptance_6_table_closed_form_consistency() {
    let mut rng = StdRng::seed_from_u64(20260823);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let x = rng.random_range(0.0..5.0);
        let y = rng.random_range(0.0..1.99);
        let times = TimePair::new(rng.random_range(0.0..6.0), rng.random_range(0.0..6.0)).unwrap();
        let table = joint_table(x, y, times).unwrap();
        for kind in CorrelationKind::ALL {
            let direct = correlation(kind, x, y, times).unwrap();
            let tabled = corr_from_table(&table, kind).unwrap();
            worst = worst.max((direct - tabled).abs());
        }
    }
    let pass = worst < 1e-12;
    report(
        6,
        pass,
        &format!("1000 random draws, worst closed-form/table gap {worst:.3e}, tolerance 1e-12"),
    );
}

#[test]
fn acceptance_7_monte_carlo_convergence() {
    let start = Instant::now();
    let n = 1_000_000;
    let x = 0.95;
    let y = 1.0;
    let mut pass = true;
    let mut worst_z: f64 = 0.0;
    let mut worst_se: f64 = 0.0;

    // Estimates against closed forms at two settings batteries inside
    // [0, 1.5], where every estimator keeps enough events for se < 0.005.
    for st in [
        meson_bell::chsh::ChshSettings::new(0.3, 0.9, 0.6, 1.2).unwrap(),
        meson_bell::chsh::ChshSettings::new(0.0, 1.5, 0.75, 1.5).unwrap(),
    ] {
        let events = sample_events(x, y, st, n, 7).unwrap();
        for (setting, times) in SettingIndex::ALL.iter().zip(st.time_pairs()) {
            let block = &events[setting.index() * n..(setting.index() + 1) * n];
            for kind in CorrelationKind::ALL {
                let est = estimate_correlation(block, kind).unwrap();
                let closed = correlation(kind, x, y, times).unwrap();
                let z = (est.value - closed).abs() / est.std_error;
                worst_z = worst_z.max(z);
                worst_se = worst_se.max(est.std_error);
                if z > 5.0 || est.std_error >= 0.005 {
                    pass = false;
                }
            }
        }
    }

    // The renormalized pseudo-experiment at CHSH-optimal settings shows the
    // formal violation with high significance.
    let best = maximize_chsh(CorrelationKind::Renormalized, 0.77, 0.0, defaults()).unwrap();
    let events = sample_events(0.77, 0.0, best.settings, n, 2026).unwrap();
    let est = estimate_chsh(&events, CorrelationKind::Renormalized).unwrap();
    let excess_sigma = (est.value - 2.0) / est.std_error;
    if excess_sigma <= 3.0 {
        pass = false;
    }

    let secs = start.elapsed().as_secs_f64();
    if secs >= 60.0 {
        pass = false;
    }
    report(
        7,
        pass,
        &format!(
            "n = 1e6 per setting: worst |z| = {worst_z:.2} (limit 5), worst se = {worst_se:.5} (limit 0.005), renormalized violation at {excess_sigma:.1} sigma (needs > 3), runtime {secs:.1} s (budget 60 s)"
        ),
    );
}

#[test]
fn acceptance_8_solver_robustness() {
    let mut pass = true;
    let mut parts = Vec::new();
    for kind in [CorrelationKind::NonUnitary, CorrelationKind::Unitary] {
        let base = find_threshold(kind, 0.0, 1e-3, defaults()).unwrap();
        for (label, opts) in [
            (
                "t_max 16",
                OptimizerOptions {
                    t_max: 16.0,
                    ..defaults()
                },
            ),
            (
                "grid 21",
                OptimizerOptions {
                    grid_points: 21,
                    ..defaults()
                },
            ),
        ] {
            let shifted = find_threshold(kind, 0.0, 1e-3, opts).unwrap();
            let shift = (shifted.critical_x - base.critical_x).abs();
            if shift >= 1e-3 {
                pass = false;
            }
            parts.push(format!("{kind:?} {label}: shift {shift:.3e}"));
        }
    }
    report(
        8,
        pass,
        &format!(
            "threshold stability under solver-resolution changes, tolerance 1e-3 [{}]",
            parts.join(", ")
        ),
    );
}
