use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qseries::Q_MAX;

/// Boundary and bulk rates of the open ASEP.
///
/// Particles enter at site 1 with rate `alpha` and leave there with rate
/// `gamma`; they leave at site n with rate `beta` and enter there with rate
/// `delta`. Bulk hops go right at rate 1 and left at rate `q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsepParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub q: f64,
}

/// The `(A, B, C, D, q)` parametrisation that governs phases and
/// Askey-Wilson laws. `A, C >= 0` and `B, D` lie in `(-1, 0]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbcdParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub q: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

fn finite(name: &'static str, v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::invalid(name, format!("{v} is not finite")));
    }
    Ok(())
}

fn check_q(q: f64) -> Result<()> {
    finite("q", q)?;
    if !(0.0..1.0).contains(&q) {
        return Err(Error::invalid("q", format!("{q} is outside [0, 1)")));
    }
    if q > Q_MAX {
        return Err(Error::invalid(
            "q",
            format!("{q} exceeds the supported {Q_MAX}"),
        ));
    }
    Ok(())
}

impl AsepParams {
    pub fn new(alpha: f64, beta: f64, gamma: f64, delta: f64, q: f64) -> Result<Self> {
        let p = AsepParams {
            alpha,
            beta,
            gamma,
            delta,
            q,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("delta", self.delta),
        ] {
            finite(name, v)?;
        }
        if !(self.alpha > 0.0) {
            return Err(Error::invalid("alpha", "must be positive"));
        }
        if !(self.beta > 0.0) {
            return Err(Error::invalid("beta", "must be positive"));
        }
        if self.gamma < 0.0 {
            return Err(Error::invalid("gamma", "must be nonnegative"));
        }
        if self.delta < 0.0 {
            return Err(Error::invalid("delta", "must be nonnegative"));
        }
        check_q(self.q)
    }

    /// `A = kappa+(beta, delta)`, `B = kappa-(beta, delta)`, `C`, `D` likewise
    /// from `(alpha, gamma)`.
    pub fn abcd(&self) -> AbcdParams {
        let (a, b) = kappa_pair(self.beta, self.delta, self.q);
        let (c, d) = kappa_pair(self.alpha, self.gamma, self.q);
        AbcdParams {
            a,
            b,
            c,
            d,
            q: self.q,
        }
    }

    /// Swaps the roles of particles and holes and mirrors the lattice.
    pub fn particle_hole_dual(&self) -> AsepParams {
        AsepParams {
            alpha: self.beta,
            beta: self.alpha,
            gamma: self.delta,
            delta: self.gamma,
            q: self.q,
        }
    }
}

pub fn abcd_from_asep(p: &AsepParams) -> Result<AbcdParams> {
    p.validate()?;
    Ok(p.abcd())
}

pub fn particle_hole_dual(p: &AsepParams) -> AsepParams {
    p.particle_hole_dual()
}

/// `(1/(2x)) (1 - q - x + y +/- sqrt((1 - q - x + y)^2 + 4xy))`.
pub fn kappa(x: f64, y: f64, q: f64, sign: Sign) -> Result<f64> {
    finite("x", x)?;
    finite("y", y)?;
    if !(x > 0.0) {
        return Err(Error::invalid("x", "must be positive"));
    }
    if y < 0.0 {
        return Err(Error::invalid("y", "must be nonnegative"));
    }
    check_q(q)?;
    let (plus, minus) = kappa_pair(x, y, q);
    Ok(match sign {
        Sign::Plus => plus,
        Sign::Minus => minus,
    })
}

// Both roots of x k^2 - (1 - q - x + y) k - y = 0. The root that would suffer
// cancellation is recovered from the product k+ k- = -y / x.
fn kappa_pair(x: f64, y: f64, q: f64) -> (f64, f64) {
    let u = 1.0 - q - x + y;
    let disc = (u * u + 4.0 * x * y).sqrt();
    if u >= 0.0 {
        let plus = (u + disc) / (2.0 * x);
        let minus = if plus > 0.0 { -y / (x * plus) } else { 0.0 };
        (plus, minus)
    } else {
        let minus = (u - disc) / (2.0 * x);
        (-y / (x * minus), minus)
    }
}

impl AbcdParams {
    pub fn new(a: f64, b: f64, c: f64, d: f64, q: f64) -> Result<Self> {
        let p = AbcdParams { a, b, c, d, q };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("A", self.a), ("B", self.b), ("C", self.c), ("D", self.d)] {
            finite(name, v)?;
        }
        if self.a < 0.0 {
            return Err(Error::invalid("A", "must be nonnegative"));
        }
        if self.c < 0.0 {
            return Err(Error::invalid("C", "must be nonnegative"));
        }
        if !(self.b > -1.0 && self.b <= 0.0) {
            return Err(Error::invalid("B", "must lie in (-1, 0]"));
        }
        if !(self.d > -1.0 && self.d <= 0.0) {
            return Err(Error::invalid("D", "must lie in (-1, 0]"));
        }
        check_q(self.q)
    }

    /// Left reservoir density `1 / (1 + C)`.
    pub fn rho_a(&self) -> f64 {
        1.0 / (1.0 + self.c)
    }

    /// Right reservoir density `A / (1 + A)`.
    pub fn rho_b(&self) -> f64 {
        self.a / (1.0 + self.a)
    }

    /// Rates reproducing these parameters.
    pub fn to_asep(&self) -> Result<AsepParams> {
        self.validate()?;
        let beta = (1.0 - self.q) / ((1.0 + self.a) * (1.0 + self.b));
        let alpha = (1.0 - self.q) / ((1.0 + self.c) * (1.0 + self.d));
        // -0.0 when B or D vanishes; normalise so serialised output stays clean.
        let delta = (-self.a * self.b * beta).max(0.0);
        let gamma = (-self.c * self.d * alpha).max(0.0);
        AsepParams::new(alpha, beta, gamma, delta, self.q)
    }
}
