//! Meson-system parameters and their dimensionless reduction.
//!
//! A [`MesonSystem`] carries the physical decay widths and mass difference of a
//! neutral meson pair species. Every correlation kernel depends on them only
//! through the dimensionless pair x = |Δm|/Γ and y = |Γ₁−Γ₂|/Γ with
//! Γ = (Γ₁+Γ₂)/2, captured by [`ReducedSystem`].

use serde::Serialize;

use crate::error::{Error, Result};

/// Physical parameters of a neutral meson pair species, in units where ħ = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct MesonSystem {
    pub name: String,
    /// Decay width of mass eigenstate 1.
    pub gamma1: f64,
    /// Decay width of mass eigenstate 2.
    pub gamma2: f64,
    /// Mass difference m₁ − m₂; any sign, kernels are even in it.
    pub delta_m: f64,
}

impl MesonSystem {
    /// Validates widths (strictly positive, finite) and the mass difference (finite).
    pub fn new(
        name: impl Into<String>,
        gamma1: f64,
        gamma2: f64,
        delta_m: f64,
    ) -> Result<Self> {
        let name = name.into();
        if name.is_empty() {
            return Err(Error::InvalidParameter {
                field: "name",
                reason: "must be non-empty".into(),
            });
        }
        for (field, value) in [("gamma1", gamma1), ("gamma2", gamma2)] {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::InvalidParameter {
                    field,
                    reason: format!("width must be finite and positive, got {value}"),
                });
            }
        }
        if !delta_m.is_finite() {
            return Err(Error::InvalidParameter {
                field: "delta_m",
                reason: format!("mass difference must be finite, got {delta_m}"),
            });
        }
        Ok(Self {
            name,
            gamma1,
            gamma2,
            delta_m,
        })
    }

    /// Reduces to the dimensionless parameters governing all kernels.
    ///
    /// Scale-invariant: rescaling (Γ₁, Γ₂, Δm) by a common factor leaves the
    /// result unchanged.
    pub fn reduce(&self) -> ReducedSystem {
        let gamma = 0.5 * (self.gamma1 + self.gamma2);
        ReducedSystem {
            x: self.delta_m.abs() / gamma,
            y: (self.gamma1 - self.gamma2).abs() / gamma,
        }
    }
}

/// Dimensionless mixing parameter x = |Δm|/Γ and width asymmetry y = |ΔΓ|/Γ.
///
/// Invariants: x ≥ 0 and 0 ≤ y < 2 (y = 2 would mean one width is exactly
/// zero, which never terminates the long-lived component; excluded as a limit).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReducedSystem {
    pub x: f64,
    pub y: f64,
}

impl ReducedSystem {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !x.is_finite() || x < 0.0 {
            return Err(Error::InvalidParameter {
                field: "x",
                reason: format!("must be finite and non-negative, got {x}"),
            });
        }
        if !y.is_finite() || !(0.0..2.0).contains(&y) {
            return Err(Error::InvalidParameter {
                field: "y",
                reason: format!("must lie in [0, 2), got {y}"),
            });
        }
        Ok(Self { x, y })
    }
}

/// Whether a catalogued x value is a measurement or an experimental bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemBound {
    Exact,
    UpperBound,
    LowerBound,
}

/// A catalogued meson system: reduced parameters plus how to read its x value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuiltinSystem {
    pub name: &'static str,
    pub system: ReducedSystem,
    pub bound: SystemBound,
}

/// Default width asymmetry for the K⁰K̄⁰ system.
///
/// The K_S width dominates the K_L width by a lifetime ratio of roughly 579,
/// giving y = 2(ρ − 1)/(ρ + 1) ≈ 1.993.
pub const DEFAULT_KAON_Y: f64 = 1.993;

/// The four catalogued systems: B⁰, K⁰, D⁰ (upper bound), B⁰ₛ (lower bound).
///
/// Stable across calls; K⁰ uses [`DEFAULT_KAON_Y`].
pub fn builtin_systems() -> Vec<BuiltinSystem> {
    builtin_systems_with_kaon_y(DEFAULT_KAON_Y).expect("default kaon y is valid")
}

/// Same catalogue with a caller-chosen kaon width asymmetry.
pub fn builtin_systems_with_kaon_y(kaon_y: f64) -> Result<Vec<BuiltinSystem>> {
    let kaon = ReducedSystem::new(0.95, kaon_y)?;
    Ok(vec![
        BuiltinSystem {
            name: "B0",
            system: ReducedSystem { x: 0.77, y: 0.0 },
            bound: SystemBound::Exact,
        },
        BuiltinSystem {
            name: "K0",
            system: kaon,
            bound: SystemBound::Exact,
        },
        BuiltinSystem {
            name: "D0",
            system: ReducedSystem { x: 0.03, y: 0.0 },
            bound: SystemBound::UpperBound,
        },
        BuiltinSystem {
            name: "Bs",
            system: ReducedSystem { x: 20.60, y: 0.0 },
            bound: SystemBound::LowerBound,
        },
    ])
}

/// Case-insensitive lookup in the built-in catalogue.
pub fn find_system(name: &str) -> Option<BuiltinSystem> {
    builtin_systems()
        .into_iter()
        .find(|s| s.name.eq_ignore_ascii_case(name))
}
