use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::params::AbcdParams;

/// Default tolerance for the equality tests in [`classify_phase`].
pub const PHASE_EPS: f64 = 1e-9;

/// Regions of the `(A, C)` phase diagram.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    MaxCurrent,
    LowDensity,
    HighDensity,
    /// `AC = 1` away from the corner.
    FanBoundary,
    /// `A = 1, C < 1`.
    MCBoundaryA,
    /// `A < 1, C = 1`.
    MCBoundaryC,
    /// `A = C = 1`.
    CornerAC1,
    /// `AC > 1` off the coexistence line.
    ShockRegion,
    /// `A = C > 1`.
    CoexistenceLine,
}

impl Phase {
    pub const ALL: [Phase; 9] = [
        Phase::MaxCurrent,
        Phase::LowDensity,
        Phase::HighDensity,
        Phase::FanBoundary,
        Phase::MCBoundaryA,
        Phase::MCBoundaryC,
        Phase::CornerAC1,
        Phase::ShockRegion,
        Phase::CoexistenceLine,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Phase::MaxCurrent => "MaxCurrent",
            Phase::LowDensity => "LowDensity",
            Phase::HighDensity => "HighDensity",
            Phase::FanBoundary => "FanBoundary",
            Phase::MCBoundaryA => "MCBoundaryA",
            Phase::MCBoundaryC => "MCBoundaryC",
            Phase::CornerAC1 => "CornerAC1",
            Phase::ShockRegion => "ShockRegion",
            Phase::CoexistenceLine => "CoexistenceLine",
        }
    }

    /// Whether a Gaussian/excursion/meander limit field is attached to the phase.
    pub fn has_limit_field(&self) -> bool {
        !matches!(self, Phase::ShockRegion | Phase::CoexistenceLine)
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Phase {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Phase::ALL
            .iter()
            .copied()
            .find(|p| p.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown phase {s:?}"))
    }
}

/// Classifies `(A, C)`. Boundaries are tested before open regions, in the
/// order: corner, `AC = 1`, `A = 1`, `C = 1`, coexistence line, shock region,
/// maximal current, low density, high density.
pub fn classify_phase(ab: &AbcdParams, eps: f64) -> Phase {
    let (a, c) = (ab.a, ab.c);
    let near_one = |v: f64| (v - 1.0).abs() <= eps;
    if near_one(a) && near_one(c) {
        return Phase::CornerAC1;
    }
    if (a * c - 1.0).abs() <= eps {
        return Phase::FanBoundary;
    }
    if near_one(a) && c < 1.0 - eps {
        return Phase::MCBoundaryA;
    }
    if near_one(c) && a < 1.0 - eps {
        return Phase::MCBoundaryC;
    }
    if (a - c).abs() <= eps && a > 1.0 + eps {
        return Phase::CoexistenceLine;
    }
    if a * c > 1.0 + eps {
        return Phase::ShockRegion;
    }
    if a < 1.0 - eps && c < 1.0 - eps {
        return Phase::MaxCurrent;
    }
    if c > 1.0 + eps && c > a + eps {
        return Phase::LowDensity;
    }
    if a > 1.0 + eps && a > c + eps {
        return Phase::HighDensity;
    }
    // Only reachable through the eps bands, e.g. A = 1 with C slightly above 1
    // but AC within the shock threshold; fall back to the larger parameter.
    if c >= a {
        Phase::LowDensity
    } else {
        Phase::HighDensity
    }
}

/// Limiting bulk density `lim n^{-1} sum tau_j`, when one is defined.
///
/// In the shock region the density follows whichever of `A`, `C` dominates;
/// on the coexistence line the profile is not flat and `None` is returned.
pub fn bulk_density(ab: &AbcdParams, phase: Phase) -> Option<f64> {
    match phase {
        Phase::MaxCurrent | Phase::MCBoundaryA | Phase::MCBoundaryC | Phase::CornerAC1 => Some(0.5),
        Phase::LowDensity => Some(ab.rho_a()),
        Phase::HighDensity | Phase::FanBoundary => Some(ab.rho_b()),
        Phase::ShockRegion => Some(if ab.c > ab.a { ab.rho_a() } else { ab.rho_b() }),
        Phase::CoexistenceLine => None,
    }
}
