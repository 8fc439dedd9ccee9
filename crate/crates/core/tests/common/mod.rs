//! Shared test utilities.
//!
//! `oracle_maximum` is an independent check on the production optimizer: a
//! dense grid pass, per-axis interval-shrinking scans, and 2-D pair scans that
//! escape the S = 2 plateau (leaving it can require moving two probe times at
//! once, so axis moves alone stall there). It is slower and structurally
//! different from the simplex search, so agreement between the two is
//! meaningful evidence that both found the box maximum.

// Compiled once per integration-test target; not every target uses the oracle.
#![allow(dead_code)]

use meson_bell::chsh::{chsh_value, ChshSettings};
use meson_bell::correlation::CorrelationKind;

pub fn chsh_at(kind: CorrelationKind, x: f64, y: f64, s: [f64; 4]) -> f64 {
    let settings = ChshSettings::new(s[0], s[1], s[2], s[3]).expect("valid settings");
    chsh_value(kind, x, y, settings).expect("valid parameters")
}

fn dense_seed(kind: CorrelationKind, x: f64, y: f64, t_max: f64, n: usize) -> [f64; 4] {
    let axis: Vec<f64> = (0..n)
        .map(|i| t_max * i as f64 / (n - 1) as f64)
        .collect();
    let mut best = ([0.0; 4], f64::NEG_INFINITY);
    for &a in &axis {
        for &ap in &axis {
            for &b in &axis {
                for &bp in &axis {
                    let v = chsh_at(kind, x, y, [a, ap, b, bp]);
                    if v > best.1 {
                        best = ([a, ap, b, bp], v);
                    }
                }
            }
        }
    }
    best.0
}

/// Repeated scans of one axis over a shrinking interval centred on the best
/// point so far. 121 points per pass keeps half-period features of
/// oscillations up to x ~ 25 resolvable at t_max = 8.
fn refine_axis(
    kind: CorrelationKind,
    x: f64,
    y: f64,
    t_max: f64,
    point: &mut [f64; 4],
    axis: usize,
) -> f64 {
    let mut lo = 0.0f64;
    let mut hi = t_max;
    let mut best_v = chsh_at(kind, x, y, *point);
    while hi - lo > 1e-10 {
        let mut best_t = point[axis];
        for i in 0..=120 {
            let t = lo + (hi - lo) * i as f64 / 120.0;
            let mut probe = *point;
            probe[axis] = t;
            let v = chsh_at(kind, x, y, probe);
            if v > best_v {
                best_v = v;
                best_t = t;
            }
        }
        point[axis] = best_t;
        let span = (hi - lo) / 8.0;
        lo = (best_t - span).max(0.0);
        hi = (best_t + span).min(t_max);
    }
    best_v
}

fn polish(kind: CorrelationKind, x: f64, y: f64, t_max: f64, point: &mut [f64; 4]) -> f64 {
    let mut value = chsh_at(kind, x, y, *point);
    for _ in 0..40 {
        let before = value;
        for axis in 0..4 {
            value = refine_axis(kind, x, y, t_max, point, axis);
        }
        if value - before < 1e-13 {
            break;
        }
    }
    value
}

/// One coarse full-box scan of a coordinate pair; spacing t_max/160 resolves
/// oscillation half-periods up to x ~ 30 at t_max = 8.
fn scan_pair(
    kind: CorrelationKind,
    x: f64,
    y: f64,
    t_max: f64,
    point: [f64; 4],
    (i, j): (usize, usize),
) -> ([f64; 4], f64) {
    let mut best = (point, chsh_at(kind, x, y, point));
    for a in 0..=160 {
        for b in 0..=160 {
            let mut probe = point;
            probe[i] = t_max * a as f64 / 160.0;
            probe[j] = t_max * b as f64 / 160.0;
            let v = chsh_at(kind, x, y, probe);
            if v > best.1 {
                best = (probe, v);
            }
        }
    }
    best
}

pub fn oracle_maximum(kind: CorrelationKind, x: f64, y: f64, t_max: f64) -> (f64, [f64; 4]) {
    let mut point = dense_seed(kind, x, y, t_max, 17);
    let mut value = polish(kind, x, y, t_max, &mut point);
    for _ in 0..8 {
        let mut improved = false;
        for pair in [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)] {
            let (p, v) = scan_pair(kind, x, y, t_max, point, pair);
            if v > value + 1e-12 {
                point = p;
                value = polish(kind, x, y, t_max, &mut point);
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
    (value, point)
}
