//! Correlation kernels for an entangled neutral-meson pair, plus the joint
//! outcome-probability table they derive from.
//!
//! The pair starts in the antisymmetric flavor state and each side is probed at
//! its own (dimensionless) time. Three treatments of the decay are supported:
//!
//! * [`CorrelationKind::Unitary`]: the dichotomic question "is it a meson, or
//!   not?", where a decayed state counts as "not". Norm is conserved, decay
//!   products contribute.
//! * [`CorrelationKind::NonUnitary`]: the flavor question "meson or antimeson?"
//!   applied to the surviving amplitude only; decayed events contribute zero.
//! * [`CorrelationKind::Renormalized`]: the non-unitary correlation divided by
//!   the probability that both mesons are still alive, i.e. the post-selected
//!   estimator −cos(xΔτ)/cosh(yΔτ/2).
//!
//! All kernels are functions of the reduced parameters x, y and a [`TimePair`];
//! times are measured in mean lifetimes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which treatment of decayed mesons a correlation uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationKind {
    NonUnitary,
    Unitary,
    Renormalized,
}

impl CorrelationKind {
    pub const ALL: [CorrelationKind; 3] = [
        CorrelationKind::NonUnitary,
        CorrelationKind::Unitary,
        CorrelationKind::Renormalized,
    ];

    /// Lowercase identifier used in CLI flags and serialized output.
    pub fn label(self) -> &'static str {
        match self {
            CorrelationKind::NonUnitary => "nonunitary",
            CorrelationKind::Unitary => "unitary",
            CorrelationKind::Renormalized => "renormalized",
        }
    }

    /// Value assigned to a single-side outcome by this kind's question.
    ///
    /// Unitary asks "meson, or not?" so antimesons and decay products both map
    /// to −1. NonUnitary asks "meson or antimeson?" and scores decayed events
    /// as zero. Renormalized shares the NonUnitary map but is conditioned on
    /// both sides surviving by its estimator, not by this map.
    pub(crate) fn outcome_value(self, outcome: Outcome) -> f64 {
        match (self, outcome) {
            (_, Outcome::MesonAlive) => 1.0,
            (_, Outcome::AntimesonAlive) => -1.0,
            (CorrelationKind::Unitary, Outcome::Decayed) => -1.0,
            (_, Outcome::Decayed) => 0.0,
        }
    }
}

/// Single-side measurement outcome at a fixed probe time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    MesonAlive,
    AntimesonAlive,
    Decayed,
}

impl Outcome {
    /// Fixed enumeration order; also the row/column order of the joint table.
    pub const ALL: [Outcome; 3] = [
        Outcome::MesonAlive,
        Outcome::AntimesonAlive,
        Outcome::Decayed,
    ];

    pub(crate) fn index(self) -> usize {
        match self {
            Outcome::MesonAlive => 0,
            Outcome::AntimesonAlive => 1,
            Outcome::Decayed => 2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Outcome::MesonAlive => "meson_alive",
            Outcome::AntimesonAlive => "antimeson_alive",
            Outcome::Decayed => "decayed",
        }
    }
}

/// Probe times (in mean lifetimes) for the left and right side.
///
/// Both components are non-negative and finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimePair {
    tau_l: f64,
    tau_r: f64,
}

impl TimePair {
    pub fn new(tau_l: f64, tau_r: f64) -> Result<Self> {
        for (field, value) in [("tau_l", tau_l), ("tau_r", tau_r)] {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::InvalidParameter {
                    field,
                    reason: format!("time must be finite and non-negative, got {value}"),
                });
            }
        }
        Ok(Self { tau_l, tau_r })
    }

    pub fn tau_l(self) -> f64 {
        self.tau_l
    }

    pub fn tau_r(self) -> f64 {
        self.tau_r
    }

    /// τ_l + τ_r, the total elapsed lifetime controlling overall damping.
    pub fn sum(self) -> f64 {
        self.tau_l + self.tau_r
    }

    /// Δτ = τ_l − τ_r, the only combination the oscillatory factors see.
    pub fn delta(self) -> f64 {
        self.tau_l - self.tau_r
    }
}

/// Exponential arguments beyond this are flushed to zero analytically instead
/// of being evaluated, avoiding subnormal noise deep in the decayed regime.
const EXP_FLUSH: f64 = 700.0;

#[inline]
pub(crate) fn exp_neg(t: f64) -> f64 {
    if t > EXP_FLUSH {
        0.0
    } else {
        (-t).exp()
    }
}

pub(crate) fn check_y(y: f64) -> Result<()> {
    if !y.is_finite() || !(0.0..2.0).contains(&y) {
        return Err(Error::Domain(format!(
            "width asymmetry y must lie in [0, 2), got {y}"
        )));
    }
    Ok(())
}

#[inline]
pub(crate) fn corr_nonunitary_raw(x: f64, tau_l: f64, tau_r: f64) -> f64 {
    -(x * (tau_l - tau_r)).cos() * exp_neg(tau_l + tau_r)
}

#[inline]
pub(crate) fn corr_unitary_raw(x: f64, y: f64, tau_l: f64, tau_r: f64) -> f64 {
    let g1 = 1.0 + 0.5 * y;
    let g2 = 1.0 - 0.5 * y;
    corr_nonunitary_raw(x, tau_l, tau_r)
        + 0.5 * (1.0 - exp_neg(g1 * tau_l)) * (1.0 - exp_neg(g2 * tau_r))
        + 0.5 * (1.0 - exp_neg(g2 * tau_l)) * (1.0 - exp_neg(g1 * tau_r))
}

#[inline]
pub(crate) fn corr_renormalized_raw(x: f64, y: f64, tau_l: f64, tau_r: f64) -> f64 {
    let delta = tau_l - tau_r;
    let half = 0.5 * y * delta;
    if half.abs() > EXP_FLUSH {
        0.0
    } else {
        -(x * delta).cos() / half.cosh()
    }
}

/// Flavor correlation keeping only surviving amplitudes: −cos(xΔτ)·e^(−(τ_l+τ_r)).
///
/// Independent of y in dimensionless form.
pub fn corr_nonunitary(x: f64, times: TimePair) -> f64 {
    corr_nonunitary_raw(x, times.tau_l, times.tau_r)
}

/// Norm-conserving correlation for the question "meson, or not?".
///
/// Adds to the non-unitary kernel the decay-product contributions
/// ½(1−e^(−Γ̂₁τ_l))(1−e^(−Γ̂₂τ_r)) + ½(1−e^(−Γ̂₂τ_l))(1−e^(−Γ̂₁τ_r)) with
/// Γ̂₁,₂ = 1 ± y/2. Requires 0 ≤ y < 2.
pub fn corr_unitary(x: f64, y: f64, times: TimePair) -> Result<f64> {
    check_y(y)?;
    Ok(corr_unitary_raw(x, y, times.tau_l, times.tau_r))
}

/// Survivor-renormalized correlation −cos(xΔτ)/cosh(yΔτ/2).
///
/// This is the non-unitary correlation divided by the both-alive probability;
/// the post-selection makes it undamped. Expects 0 ≤ y < 2.
pub fn corr_renormalized(x: f64, y: f64, times: TimePair) -> f64 {
    corr_renormalized_raw(x, y, times.tau_l, times.tau_r)
}

/// Kernel dispatch by kind. Propagates the unitary domain check on y.
pub fn correlation(kind: CorrelationKind, x: f64, y: f64, times: TimePair) -> Result<f64> {
    match kind {
        CorrelationKind::NonUnitary => Ok(corr_nonunitary(x, times)),
        CorrelationKind::Unitary => corr_unitary(x, y, times),
        CorrelationKind::Renormalized => Ok(corr_renormalized(x, y, times)),
    }
}

/// Probability that both sides are still undecayed at the given times:
/// e^(−(τ_l+τ_r))·cosh(yΔτ/2), computed in overflow-safe split form.
pub fn both_alive_probability(y: f64, times: TimePair) -> Result<f64> {
    check_y(y)?;
    let g1 = 1.0 + 0.5 * y;
    let g2 = 1.0 - 0.5 * y;
    Ok(0.5
        * (exp_neg(g1 * times.tau_l + g2 * times.tau_r)
            + exp_neg(g2 * times.tau_l + g1 * times.tau_r)))
}

/// Joint probability table over per-side outcomes at one pair of probe times.
///
/// Entries are indexed by ([`Outcome`], [`Outcome`]) for (left, right), lie in
/// [0, 1], and sum to 1. This table is the single source of truth for Monte
/// Carlo sampling; the closed-form kernels are algebraically derivable from it
/// (and tested as such).
#[derive(Debug, Clone, PartialEq)]
pub struct JointOutcomeTable {
    p: [[f64; 3]; 3],
}

impl JointOutcomeTable {
    pub fn probability(&self, left: Outcome, right: Outcome) -> f64 {
        self.p[left.index()][right.index()]
    }

    /// Total probability that both sides are undecayed.
    pub fn both_alive_mass(&self) -> f64 {
        self.p[0][0] + self.p[0][1] + self.p[1][0] + self.p[1][1]
    }

    /// Cells in fixed left-major order, the same order sampling consumes them.
    pub fn cells(&self) -> impl Iterator<Item = (Outcome, Outcome, f64)> + '_ {
        Outcome::ALL.into_iter().flat_map(move |l| {
            Outcome::ALL
                .into_iter()
                .map(move |r| (l, r, self.probability(l, r)))
        })
    }
}

/// Negative entries larger than this magnitude indicate a bug rather than
/// floating-point cancellation.
const NEGATIVE_PROBABILITY_TOLERANCE: f64 = 1e-15;

fn clamp_probability(p: f64, cell: &str) -> Result<f64> {
    if p < -NEGATIVE_PROBABILITY_TOLERANCE {
        return Err(Error::Inconsistency(format!(
            "probability for {cell} came out {p}"
        )));
    }
    Ok(p.max(0.0))
}

/// Builds the 3×3 outcome table from the entangled-state amplitudes.
///
/// The alive-alive block comes from the two-particle surviving amplitude:
/// with E₁₂ = e^(−Γ̂₁τ_l−Γ̂₂τ_r), E₂₁ = e^(−Γ̂₂τ_l−Γ̂₁τ_r) and the interference
/// term C = e^(−(τ_l+τ_r))cos(xΔτ),
///
/// * P(same flavor)     = (E₁₂ + E₂₁ − 2C)/8 per cell,
/// * P(opposite flavor) = (E₁₂ + E₂₁ + 2C)/8 per cell.
///
/// Alive-decayed entries follow from single-side marginals minus the row or
/// column sums of the alive-alive block, and decayed-decayed from
/// normalization; decay products are orthogonal to both flavor states, which
/// is all that unitarity of the evolution requires.
pub fn joint_table(x: f64, y: f64, times: TimePair) -> Result<JointOutcomeTable> {
    check_y(y)?;
    let (tl, tr) = (times.tau_l, times.tau_r);
    let g1 = 1.0 + 0.5 * y;
    let g2 = 1.0 - 0.5 * y;

    let e12 = exp_neg(g1 * tl + g2 * tr);
    let e21 = exp_neg(g2 * tl + g1 * tr);
    let c = exp_neg(tl + tr) * (x * times.delta()).cos();

    let same = 0.125 * (e12 + e21 - 2.0 * c);
    let opposite = 0.125 * (e12 + e21 + 2.0 * c);

    // Single-side survival factors for the two mass eigenstates.
    let sl1 = exp_neg(g1 * tl);
    let sl2 = exp_neg(g2 * tl);
    let sr1 = exp_neg(g1 * tr);
    let sr2 = exp_neg(g2 * tr);

    // Each flavor on the left pairs eigenstate 1 with eigenstate 2 on the
    // right and vice versa, hence the crossed indices.
    let alive_decayed = 0.25 * (sl1 * (1.0 - sr2) + sl2 * (1.0 - sr1));
    let decayed_alive = 0.25 * ((1.0 - sl1) * sr2 + (1.0 - sl2) * sr1);
    let decayed_decayed = 0.5 * ((1.0 - sl1) * (1.0 - sr2) + (1.0 - sl2) * (1.0 - sr1));

    let p = [
        [
            clamp_probability(same, "(meson, meson)")?,
            clamp_probability(opposite, "(meson, antimeson)")?,
            clamp_probability(alive_decayed, "(meson, decayed)")?,
        ],
        [
            clamp_probability(opposite, "(antimeson, meson)")?,
            clamp_probability(same, "(antimeson, antimeson)")?,
            clamp_probability(alive_decayed, "(antimeson, decayed)")?,
        ],
        [
            clamp_probability(decayed_alive, "(decayed, meson)")?,
            clamp_probability(decayed_alive, "(decayed, antimeson)")?,
            clamp_probability(decayed_decayed, "(decayed, decayed)")?,
        ],
    ];

    let total: f64 = p.iter().flatten().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::Inconsistency(format!(
            "outcome table sums to {total}"
        )));
    }

    Ok(JointOutcomeTable { p })
}

/// Expectation of the per-side value product under the given kind's question,
/// computed from the table alone.
///
/// For `Renormalized` this is the flavor expectation conditioned on both sides
/// surviving; it fails if the surviving mass is exactly zero.
pub fn corr_from_table(table: &JointOutcomeTable, kind: CorrelationKind) -> Result<f64> {
    match kind {
        CorrelationKind::Unitary | CorrelationKind::NonUnitary => Ok(table
            .cells()
            .map(|(l, r, p)| kind.outcome_value(l) * kind.outcome_value(r) * p)
            .sum()),
        CorrelationKind::Renormalized => {
            let mass = table.both_alive_mass();
            if mass == 0.0 {
                return Err(Error::DegenerateConditioning);
            }
            let nu: f64 = table
                .cells()
                .map(|(l, r, p)| {
                    CorrelationKind::NonUnitary.outcome_value(l)
                        * CorrelationKind::NonUnitary.outcome_value(r)
                        * p
                })
                .sum();
            Ok(nu / mass)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(l: f64, r: f64) -> TimePair {
        TimePair::new(l, r).unwrap()
    }

    #[test]
    fn time_pair_rejects_bad_values() {
        assert!(TimePair::new(-0.1, 0.0).is_err());
        assert!(TimePair::new(0.0, f64::NAN).is_err());
        assert!(TimePair::new(f64::INFINITY, 1.0).is_err());
    }

    #[test]
    fn nonunitary_at_origin_is_perfectly_anticorrelated() {
        for x in [0.0, 0.77, 13.2] {
            assert_eq!(corr_nonunitary(x, pair(0.0, 0.0)), -1.0);
        }
    }

    #[test]
    fn nonunitary_equal_times_decay_only() {
        let got = corr_nonunitary(2.0, pair(1.0, 1.0));
        assert!((got - (-(-2.0f64).exp())).abs() < 1e-15);
        assert!((got + 0.135335).abs() < 1e-6);
    }

    #[test]
    fn nonunitary_half_period_flips_sign() {
        let got = corr_nonunitary(1.0, pair(std::f64::consts::PI, 0.0));
        assert!((got - (-std::f64::consts::PI).exp()).abs() < 1e-15);
        assert!((got - 0.043214).abs() < 1e-6);
    }

    #[test]
    fn unitary_at_origin_is_perfectly_anticorrelated() {
        assert_eq!(corr_unitary(3.0, 1.4, pair(0.0, 0.0)).unwrap(), -1.0);
    }

    #[test]
    fn unitary_late_times_saturate_at_plus_one() {
        // Both sides have decayed, both answer "not a meson".
        let got = corr_unitary(0.5, 0.0, pair(800.0, 800.0)).unwrap();
        assert_eq!(got, 1.0);
    }

    #[test]
    fn unitary_equal_times_example() {
        let got = corr_unitary(0.77, 0.0, pair(1.0, 1.0)).unwrap();
        let want = -(-2.0f64).exp() + (1.0 - (-1.0f64).exp()).powi(2);
        assert!((got - want).abs() < 1e-15);
        assert!((got - 0.264241).abs() < 1e-6);
    }

    #[test]
    fn unitary_rejects_y_outside_domain() {
        assert!(corr_unitary(1.0, 2.0, pair(1.0, 0.0)).is_err());
        assert!(corr_unitary(1.0, -0.5, pair(1.0, 0.0)).is_err());
        assert!(corr_unitary(1.0, f64::NAN, pair(1.0, 0.0)).is_err());
    }

    #[test]
    fn renormalized_equal_times() {
        assert_eq!(corr_renormalized(5.0, 1.7, pair(3.0, 3.0)), -1.0);
    }

    #[test]
    fn renormalized_zero_asymmetry_is_pure_cosine() {
        let got = corr_renormalized(0.77, 0.0, pair(2.0, 1.0));
        assert!((got + 0.77f64.cos()).abs() < 1e-15);
        assert!((got + 0.717911).abs() < 1e-6);
    }

    #[test]
    fn renormalized_generic_point() {
        let got = corr_renormalized(0.95, 1.0, pair(1.0, 0.0));
        let want = -0.95f64.cos() / 0.5f64.cosh();
        assert!((got - want).abs() < 1e-15);
        assert!((got + 0.5158475).abs() < 1e-6);
    }

    #[test]
    fn table_at_origin_pins_unlike_flavors() {
        let t = joint_table(0.77, 0.0, pair(0.0, 0.0)).unwrap();
        assert_eq!(t.probability(Outcome::MesonAlive, Outcome::AntimesonAlive), 0.5);
        assert_eq!(t.probability(Outcome::AntimesonAlive, Outcome::MesonAlive), 0.5);
        assert_eq!(t.probability(Outcome::MesonAlive, Outcome::MesonAlive), 0.0);
        assert_eq!(t.probability(Outcome::Decayed, Outcome::Decayed), 0.0);
        assert_eq!(t.both_alive_mass(), 1.0);
    }

    #[test]
    fn table_late_times_fully_decayed() {
        let t = joint_table(1.3, 0.4, pair(50.0, 50.0)).unwrap();
        assert!((t.probability(Outcome::Decayed, Outcome::Decayed) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn table_question_one_expectation_matches_unitary_kernel() {
        let times = pair(1.0, 0.5);
        let t = joint_table(0.77, 0.0, times).unwrap();
        let from_table = corr_from_table(&t, CorrelationKind::Unitary).unwrap();
        let closed = corr_unitary(0.77, 0.0, times).unwrap();
        assert!((from_table - closed).abs() < 1e-12);
    }

    #[test]
    fn table_flavor_expectation_matches_nonunitary_kernel() {
        let times = pair(2.3, 0.9);
        let t = joint_table(4.2, 1.1, times).unwrap();
        let from_table = corr_from_table(&t, CorrelationKind::NonUnitary).unwrap();
        assert!((from_table - corr_nonunitary(4.2, times)).abs() < 1e-12);
    }

    #[test]
    fn table_at_origin_unitary_expectation() {
        let t = joint_table(1.0, 0.5, pair(0.0, 0.0)).unwrap();
        assert_eq!(corr_from_table(&t, CorrelationKind::Unitary).unwrap(), -1.0);
    }

    #[test]
    fn table_fully_decayed_unitary_expectation() {
        let t = joint_table(1.0, 0.0, pair(50.0, 50.0)).unwrap();
        let got = corr_from_table(&t, CorrelationKind::Unitary).unwrap();
        assert!((got - 1.0).abs() < 1e-9);
    }

    #[test]
    fn renormalized_conditioning_fails_without_survivors() {
        // Flushed exponentials leave exactly zero surviving mass.
        let t = joint_table(1.0, 0.0, pair(800.0, 800.0)).unwrap();
        let err = corr_from_table(&t, CorrelationKind::Renormalized).unwrap_err();
        assert!(matches!(err, Error::DegenerateConditioning));
    }

    #[test]
    fn flushed_exponentials_are_exact_zeros() {
        assert_eq!(exp_neg(700.5), 0.0);
        assert_eq!(corr_nonunitary(1.0, pair(400.0, 400.0)), 0.0);
    }

    #[test]
    fn both_alive_probability_matches_table_mass() {
        for (x, y, tl, tr) in [
            (0.77, 0.0, 1.0, 0.5),
            (0.95, 1.993, 2.0, 0.1),
            (3.0, 1.2, 0.3, 4.0),
        ] {
            let times = pair(tl, tr);
            let t = joint_table(x, y, times).unwrap();
            let direct = both_alive_probability(y, times).unwrap();
            assert!((t.both_alive_mass() - direct).abs() < 1e-14);
            // Split-exponential form agrees with the cosh closed form.
            let cosh_form = exp_neg(tl + tr) * (0.5 * y * (tl - tr)).cosh();
            assert!((direct - cosh_form).abs() < 1e-14);
        }
    }

    #[test]
    fn outcome_value_maps() {
        use CorrelationKind::*;
        assert_eq!(Unitary.outcome_value(Outcome::MesonAlive), 1.0);
        assert_eq!(Unitary.outcome_value(Outcome::AntimesonAlive), -1.0);
        assert_eq!(Unitary.outcome_value(Outcome::Decayed), -1.0);
        assert_eq!(NonUnitary.outcome_value(Outcome::Decayed), 0.0);
        assert_eq!(Renormalized.outcome_value(Outcome::Decayed), 0.0);
    }
}
