//! The CHSH functional over four probe times, deterministic global
//! maximization, threshold bisection in x, and per-system verdicts.
//!
//! The probe times (τ_A, τ_A′) on the left and (τ_B, τ_B′) on the right play
//! the role of analyzer orientations: S = |E(τ_A,τ_B) − E(τ_A,τ_B′)| +
//! |E(τ_A′,τ_B) + E(τ_A′,τ_B′)|, and any local realistic model keeps S ≤ 2.
//!
//! Maximization is a deterministic multistart: every point of a uniform grid
//! over [0, T_max]⁴ is evaluated, the best K seeds (ties broken by
//! lexicographically smaller settings) are refined with a bounded Nelder-Mead
//! simplex, and the overall best is reported. The initial simplex steps are
//! shrunk near the domain boundary so maxima sitting on a face or edge of the
//! box are resolved; several of the interesting maxima live there.

use rayon::prelude::*;
use serde::Serialize;

use crate::correlation::{
    check_y, corr_nonunitary_raw, corr_renormalized_raw, corr_unitary_raw, CorrelationKind,
    TimePair,
};
use crate::error::{Error, Result};
use crate::model::{ReducedSystem, SystemBound};

/// Margin above 2 required before a maximum counts as a violation, absorbing
/// numerical noise at the classical boundary.
pub const VIOLATION_MARGIN: f64 = 1e-6;

/// Best two refined seeds must agree within this for `converged` to hold.
const SEED_AGREEMENT: f64 = 1e-6;

/// The four measurement times of one CHSH configuration, in mean lifetimes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChshSettings {
    pub tau_a: f64,
    pub tau_a_prime: f64,
    pub tau_b: f64,
    pub tau_b_prime: f64,
}

impl ChshSettings {
    pub fn new(tau_a: f64, tau_a_prime: f64, tau_b: f64, tau_b_prime: f64) -> Result<Self> {
        let s = Self {
            tau_a,
            tau_a_prime,
            tau_b,
            tau_b_prime,
        };
        for (field, value) in [
            ("tau_a", tau_a),
            ("tau_a_prime", tau_a_prime),
            ("tau_b", tau_b),
            ("tau_b_prime", tau_b_prime),
        ] {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::InvalidParameter {
                    field,
                    reason: format!("time must be finite and non-negative, got {value}"),
                });
            }
        }
        Ok(s)
    }

    /// The four (left, right) probe-time pairs in fixed order:
    /// (A,B), (A,B′), (A′,B), (A′,B′).
    pub fn time_pairs(self) -> [TimePair; 4] {
        let p = |l: f64, r: f64| TimePair::new(l, r).expect("settings are validated");
        [
            p(self.tau_a, self.tau_b),
            p(self.tau_a, self.tau_b_prime),
            p(self.tau_a_prime, self.tau_b),
            p(self.tau_a_prime, self.tau_b_prime),
        ]
    }

    /// Settings as [tau_a, tau_a_prime, tau_b, tau_b_prime].
    pub fn to_array(self) -> [f64; 4] {
        [self.tau_a, self.tau_a_prime, self.tau_b, self.tau_b_prime]
    }

    fn from_array(a: [f64; 4]) -> Self {
        Self {
            tau_a: a[0],
            tau_a_prime: a[1],
            tau_b: a[2],
            tau_b_prime: a[3],
        }
    }
}

/// Knobs of the deterministic multistart maximizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerOptions {
    /// Upper edge of the search box [0, t_max]⁴.
    pub t_max: f64,
    /// Grid points per axis used for seeding.
    pub grid_points: usize,
    /// Number of best grid seeds refined by local search.
    pub top_k: usize,
    /// Simplex diameter below which refinement stops.
    pub param_tol: f64,
    /// Iteration cap per refinement; hitting it clears `converged`.
    pub max_iterations: usize,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            t_max: 8.0,
            grid_points: 13,
            top_k: 32,
            param_tol: 1e-7,
            max_iterations: 600,
        }
    }
}

impl OptimizerOptions {
    fn validate(&self) -> Result<()> {
        if !self.t_max.is_finite() || self.t_max <= 0.0 {
            return Err(Error::InvalidParameter {
                field: "t_max",
                reason: format!("must be finite and positive, got {}", self.t_max),
            });
        }
        if self.grid_points < 2 {
            return Err(Error::InvalidParameter {
                field: "grid_points",
                reason: format!("need at least 2 per axis, got {}", self.grid_points),
            });
        }
        if self.top_k == 0 {
            return Err(Error::InvalidParameter {
                field: "top_k",
                reason: "must be at least 1".into(),
            });
        }
        if !self.param_tol.is_finite() || self.param_tol <= 0.0 {
            return Err(Error::InvalidParameter {
                field: "param_tol",
                reason: format!("must be finite and positive, got {}", self.param_tol),
            });
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter {
                field: "max_iterations",
                reason: "must be at least 1".into(),
            });
        }
        Ok(())
    }
}

/// Outcome of one global maximization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaxResult {
    pub s_max: f64,
    /// Settings attaining `s_max`; re-evaluating [`chsh_value`] there
    /// reproduces `s_max` exactly.
    pub settings: ChshSettings,
    /// Correlation-kernel evaluations spent (four per CHSH evaluation).
    pub evaluations: u64,
    /// True when the two best refined seeds agreed within 1e-6 and no
    /// refinement hit its iteration cap.
    pub converged: bool,
}

/// Outcome of a threshold bisection in x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdResult {
    /// Midpoint of the final bracket.
    pub critical_x: f64,
    /// Final bisection bracket; width is at most the requested tolerance.
    pub bracket: (f64, f64),
    /// Maximized S at `critical_x`.
    pub s_at_critical: f64,
    /// Bisection steps taken (bracket expansion and pre-scan not counted).
    pub iterations: u32,
}

/// Per-kind verdict for one meson system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KindVerdict {
    pub kind: CorrelationKind,
    pub s_max: f64,
    pub violates: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub caveat: Option<&'static str>,
}

pub const UPPER_BOUND_CAVEAT: &str = "no violation for all x below bound";
pub const LOWER_BOUND_CAVEAT: &str = "violation for all x above bound given monotone crossing";

/// Dispatch-resolved kernel for the hot loops; y is validated up front.
#[derive(Clone, Copy)]
struct Kernel {
    kind: CorrelationKind,
    x: f64,
    y: f64,
}

impl Kernel {
    #[inline]
    fn corr(self, tau_l: f64, tau_r: f64) -> f64 {
        match self.kind {
            CorrelationKind::NonUnitary => corr_nonunitary_raw(self.x, tau_l, tau_r),
            CorrelationKind::Unitary => corr_unitary_raw(self.x, self.y, tau_l, tau_r),
            CorrelationKind::Renormalized => corr_renormalized_raw(self.x, self.y, tau_l, tau_r),
        }
    }

    #[inline]
    fn chsh(self, s: [f64; 4]) -> f64 {
        let [a, ap, b, bp] = s;
        let e_ab = self.corr(a, b);
        let e_ab_prime = self.corr(a, bp);
        let e_ap_b = self.corr(ap, b);
        let e_ap_b_prime = self.corr(ap, bp);
        (e_ab - e_ab_prime).abs() + (e_ap_b + e_ap_b_prime).abs()
    }
}

/// S for one configuration of the four probe times.
pub fn chsh_value(
    kind: CorrelationKind,
    x: f64,
    y: f64,
    settings: ChshSettings,
) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::InvalidParameter {
            field: "x",
            reason: format!("must be finite, got {x}"),
        });
    }
    if kind == CorrelationKind::Unitary {
        check_y(y)?;
    }
    Ok(Kernel { kind, x, y }.chsh(settings.to_array()))
}

/// Value-descending order with lexicographically ascending settings as the
/// tie-break; a total order, so parallel reductions stay deterministic.
fn rank(a: &(f64, [f64; 4]), b: &(f64, [f64; 4])) -> std::cmp::Ordering {
    b.0.total_cmp(&a.0).then_with(|| {
        for k in 0..4 {
            let ord = a.1[k].total_cmp(&b.1[k]);
            if ord != std::cmp::Ordering::Equal {
                return ord;
            }
        }
        std::cmp::Ordering::Equal
    })
}

struct Refined {
    value: f64,
    point: [f64; 4],
    /// CHSH evaluations spent by this refinement.
    evaluations: u64,
    truncated: bool,
}

/// Bounded Nelder-Mead with the classic reflect/expand/contract/shrink
/// coefficients (1, 2, 1/2, 1/2); every candidate is clamped into the box.
///
/// The initial simplex steps +0.5 per coordinate, except 0.05 inward for a
/// coordinate starting on a box face; the small step is what lets the search
/// climb the narrow ridges attached to the boundary.
fn refine(kernel: Kernel, start: [f64; 4], options: &OptimizerOptions) -> Refined {
    const STEP: f64 = 0.5;
    const BOUNDARY_STEP: f64 = 0.05;
    let t_max = options.t_max;
    let clamp = |p: [f64; 4]| p.map(|v| v.clamp(0.0, t_max));

    let mut pts: Vec<[f64; 4]> = Vec::with_capacity(5);
    pts.push(start);
    for i in 0..4 {
        let mut v = start;
        if v[i] + STEP <= t_max {
            if v[i] == 0.0 {
                v[i] = BOUNDARY_STEP;
            } else {
                v[i] += STEP;
            }
        } else {
            v[i] -= BOUNDARY_STEP;
        }
        pts.push(clamp(v));
    }
    let mut vals: Vec<f64> = pts.iter().map(|&p| kernel.chsh(p)).collect();
    let mut evaluations = 5u64;

    for _ in 0..options.max_iterations {
        // Best (largest) first; stable sort keeps tie handling deterministic.
        let mut order: Vec<usize> = (0..5).collect();
        order.sort_by(|&i, &j| vals[j].total_cmp(&vals[i]));
        pts = order.iter().map(|&i| pts[i]).collect();
        vals = order.iter().map(|&i| vals[i]).collect();

        let diameter = pts[1..]
            .iter()
            .map(|p| {
                (0..4)
                    .map(|k| (p[k] - pts[0][k]).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if diameter < options.param_tol {
            return Refined {
                value: vals[0],
                point: pts[0],
                evaluations,
                truncated: false,
            };
        }

        let mut centroid = [0.0; 4];
        for p in &pts[..4] {
            for k in 0..4 {
                centroid[k] += p[k];
            }
        }
        for c in &mut centroid {
            *c *= 0.25;
        }

        let worst = pts[4];
        let reflected = clamp(std::array::from_fn(|k| 2.0 * centroid[k] - worst[k]));
        let f_reflected = kernel.chsh(reflected);
        evaluations += 1;

        if f_reflected > vals[0] {
            let expanded =
                clamp(std::array::from_fn(|k| centroid[k] + 2.0 * (centroid[k] - worst[k])));
            let f_expanded = kernel.chsh(expanded);
            evaluations += 1;
            if f_expanded > f_reflected {
                pts[4] = expanded;
                vals[4] = f_expanded;
            } else {
                pts[4] = reflected;
                vals[4] = f_reflected;
            }
        } else if f_reflected > vals[3] {
            pts[4] = reflected;
            vals[4] = f_reflected;
        } else {
            let toward = if f_reflected > vals[4] {
                reflected
            } else {
                worst
            };
            let contracted =
                clamp(std::array::from_fn(|k| centroid[k] + 0.5 * (toward[k] - centroid[k])));
            let f_contracted = kernel.chsh(contracted);
            evaluations += 1;
            if f_contracted > f_reflected.max(vals[4]) {
                pts[4] = contracted;
                vals[4] = f_contracted;
            } else {
                for i in 1..5 {
                    pts[i] = clamp(std::array::from_fn(|k| {
                        pts[0][k] + 0.5 * (pts[i][k] - pts[0][k])
                    }));
                    vals[i] = kernel.chsh(pts[i]);
                    evaluations += 1;
                }
            }
        }
    }

    Refined {
        value: vals[0],
        point: pts[0],
        evaluations,
        truncated: true,
    }
}

/// Global maximum of S over settings in [0, t_max]⁴.
///
/// Deterministic for fixed inputs regardless of thread count: grid values are
/// pure per-index computations and every selection uses the total order of
/// [`rank`].
pub fn maximize_chsh(
    kind: CorrelationKind,
    x: f64,
    y: f64,
    options: OptimizerOptions,
) -> Result<MaxResult> {
    options.validate()?;
    if !x.is_finite() || x < 0.0 {
        return Err(Error::InvalidParameter {
            field: "x",
            reason: format!("must be finite and non-negative, got {x}"),
        });
    }
    check_y(y)?;
    let kernel = Kernel { kind, x, y };

    let g = options.grid_points;
    let axis: Vec<f64> = (0..g)
        .map(|i| options.t_max * i as f64 / (g - 1) as f64)
        .collect();
    let total = g * g * g * g;

    let mut seeds: Vec<(f64, [f64; 4])> = (0..total)
        .into_par_iter()
        .map(|idx| {
            let s = [
                axis[idx / (g * g * g)],
                axis[(idx / (g * g)) % g],
                axis[(idx / g) % g],
                axis[idx % g],
            ];
            (kernel.chsh(s), s)
        })
        .collect();
    seeds.sort_unstable_by(rank);

    let k = options.top_k.min(seeds.len());
    let refined: Vec<Refined> = seeds[..k]
        .par_iter()
        .map(|&(_, s)| refine(kernel, s, &options))
        .collect();

    let truncated = refined.iter().any(|r| r.truncated);
    let local_evaluations: u64 = refined.iter().map(|r| r.evaluations).sum();

    let mut ranked: Vec<(f64, [f64; 4])> = refined.iter().map(|r| (r.value, r.point)).collect();
    ranked.sort_unstable_by(rank);

    let converged = if ranked.len() >= 2 {
        (ranked[0].0 - ranked[1].0).abs() < SEED_AGREEMENT && !truncated
    } else {
        !truncated
    };

    // Refinement starts from the seed vertex and never discards the best, so
    // the winner dominates its seed; comparing against the grid best makes
    // the no-lost-ground guarantee explicit.
    let (s_max, best) = if rank(&seeds[0], &ranked[0]) == std::cmp::Ordering::Less {
        seeds[0]
    } else {
        ranked[0]
    };

    Ok(MaxResult {
        s_max,
        settings: ChshSettings::from_array(best),
        evaluations: 4 * (total as u64 + local_evaluations),
        converged,
    })
}

const BRACKET_START: (f64, f64) = (0.5, 10.0);
const BRACKET_LIMIT: (f64, f64) = (0.01, 100.0);
const PRESCAN_POINTS: usize = 9;
const MAX_BISECTIONS: u32 = 200;

/// Critical x where the maximized S first exceeds the violation margin,
/// located by bisection to bracket width `tol`.
///
/// The initial bracket [0.5, 10] expands toward [0.01, 100] if it does not
/// straddle the boundary. Before bisecting, a 9-point scan across the bracket
/// must show the violation indicator switching false to true exactly once;
/// anything else means the crossing structure is not a single threshold and
/// bisection would silently pick an arbitrary one.
///
/// The `Renormalized` kind is rejected: its maximum sits at the Tsirelson
/// value 2√2 for every x > 0, so no threshold exists.
pub fn find_threshold(
    kind: CorrelationKind,
    y: f64,
    tol: f64,
    options: OptimizerOptions,
) -> Result<ThresholdResult> {
    if kind == CorrelationKind::Renormalized {
        return Err(Error::NoThreshold { kind: kind.label() });
    }
    if !tol.is_finite() || tol <= 0.0 {
        return Err(Error::InvalidParameter {
            field: "tol",
            reason: format!("must be finite and positive, got {tol}"),
        });
    }
    options.validate()?;
    check_y(y)?;

    let violated =
        |x: f64| -> Result<bool> { Ok(maximize_chsh(kind, x, y, options)?.s_max > 2.0 + VIOLATION_MARGIN) };

    let (mut lo, mut hi) = BRACKET_START;
    let mut lo_violated = violated(lo)?;
    while lo_violated && lo > BRACKET_LIMIT.0 {
        lo = (lo * 0.2).max(BRACKET_LIMIT.0);
        lo_violated = violated(lo)?;
    }
    let mut hi_violated = violated(hi)?;
    while !hi_violated && hi < BRACKET_LIMIT.1 {
        hi = (hi * 2.0).min(BRACKET_LIMIT.1);
        hi_violated = violated(hi)?;
    }
    if lo_violated || !hi_violated {
        return Err(Error::Bracketing { lo, hi });
    }

    let flags: Vec<bool> = (0..PRESCAN_POINTS)
        .map(|i| violated(lo + (hi - lo) * i as f64 / (PRESCAN_POINTS - 1) as f64))
        .collect::<Result<_>>()?;
    let transitions = flags.windows(2).filter(|w| w[0] != w[1]).count();
    if transitions != 1 || flags[0] || !flags[PRESCAN_POINTS - 1] {
        return Err(Error::AmbiguousCrossing { lo, hi });
    }

    let mut iterations = 0u32;
    while hi - lo > tol && iterations < MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if violated(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
        iterations += 1;
    }

    let critical_x = 0.5 * (lo + hi);
    let s_at_critical = maximize_chsh(kind, critical_x, y, options)?.s_max;
    Ok(ThresholdResult {
        critical_x,
        bracket: (lo, hi),
        s_at_critical,
        iterations,
    })
}

/// One maximization per grid point, output in input order.
///
/// The grid must be strictly increasing and non-negative. A failure at any
/// point is reported with that x attached.
pub fn scan_x(
    kind: CorrelationKind,
    y: f64,
    x_grid: &[f64],
    options: OptimizerOptions,
) -> Result<Vec<(f64, MaxResult)>> {
    for w in x_grid.windows(2) {
        if !(w[0] < w[1]) {
            return Err(Error::InvalidParameter {
                field: "x_grid",
                reason: format!("must be strictly increasing, got {} then {}", w[0], w[1]),
            });
        }
    }
    if let Some(&first) = x_grid.first() {
        if !first.is_finite() || first < 0.0 {
            return Err(Error::InvalidParameter {
                field: "x_grid",
                reason: format!("values must be finite and non-negative, got {first}"),
            });
        }
    }
    x_grid
        .iter()
        .map(|&x| {
            maximize_chsh(kind, x, y, options)
                .map(|r| (x, r))
                .map_err(|e| Error::ScanPoint {
                    x,
                    source: Box::new(e),
                })
        })
        .collect()
}

/// Violation verdicts for one system under each requested kind.
///
/// Systems whose x is only an experimental bound carry a caveat describing how
/// to read the verdict.
pub fn verdict(
    system: ReducedSystem,
    bound: SystemBound,
    kinds: &[CorrelationKind],
    options: OptimizerOptions,
) -> Result<Vec<KindVerdict>> {
    let caveat = match bound {
        SystemBound::Exact => None,
        SystemBound::UpperBound => Some(UPPER_BOUND_CAVEAT),
        SystemBound::LowerBound => Some(LOWER_BOUND_CAVEAT),
    };
    kinds
        .iter()
        .map(|&kind| {
            let r = maximize_chsh(kind, system.x, system.y, options)?;
            Ok(KindVerdict {
                kind,
                s_max: r.s_max,
                violates: r.s_max > 2.0 + VIOLATION_MARGIN,
                caveat,
            })
        })
        .collect()
}
