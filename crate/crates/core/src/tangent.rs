//! The tangent process `Z` of the Askey-Wilson process at the upper edge of
//! its support, and the rescaled kernels converging to it.

use std::f64::consts::PI;
use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::askey_wilson::{constant_c1, constant_c2, AwProcessSpec, AwState};
use crate::error::{Error, Result};
use crate::path::{check_increasing, PathSample};
use crate::quadrature::Integrator;
use crate::rng::{component, replica_rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZKernelQuery {
    pub s: f64,
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

impl ZKernelQuery {
    pub fn validate(&self) -> Result<()> {
        if !(self.s < self.t) || !self.s.is_finite() || !self.t.is_finite() {
            return Err(Error::invalid("s, t", "need s < t"));
        }
        if !(self.x >= 0.0 && self.y >= 0.0) {
            return Err(Error::invalid("x, y", "states must be nonnegative"));
        }
        Ok(())
    }
}

// Unchecked kernel with h = t - s.
fn q_kernel(h: f64, x: f64, y: f64) -> f64 {
    let h2 = h * h;
    let den = h2 * h2 + 2.0 * h2 * (x + y) + (x - y) * (x - y);
    2.0 * h * y.sqrt() / (PI * den)
}

/// `q_{s,t}(x, y) = 2 (t-s) sqrt(y) / (pi [(t-s)^4 + 2 (t-s)^2 (x+y) + (x-y)^2])`.
pub fn z_kernel(s: f64, t: f64, x: f64, y: f64) -> Result<f64> {
    ZKernelQuery { s, t, x, y }.validate()?;
    Ok(q_kernel(t - s, x, y))
}

/// `P(Z_t <= y | Z_s = x)` in closed form.
pub fn z_kernel_cdf(s: f64, t: f64, x: f64, y: f64) -> Result<f64> {
    ZKernelQuery { s, t, x, y }.validate()?;
    Ok(cdf_sqrt(t - s, x.sqrt(), y.sqrt()))
}

// CDF as a function of v = sqrt(y) from u = sqrt(x).
fn cdf_sqrt(h: f64, u: f64, v: f64) -> f64 {
    if v.is_infinite() {
        return 1.0;
    }
    let g = if u == 0.0 {
        2.0 / PI * (v / h).atan() - 2.0 * h * v / (PI * (h * h + v * v))
    } else {
        let log = (-4.0 * u * v / (h * h + (v + u) * (v + u))).ln_1p();
        h / (2.0 * PI * u) * log + (((v - u) / h).atan() + ((v + u) / h).atan()) / PI
    };
    g.clamp(0.0, 1.0)
}

// Density of sqrt(Z_t) at v.
fn pdf_sqrt(h: f64, u: f64, v: f64) -> f64 {
    2.0 * v * q_kernel(h, u * u, v * v)
}

/// Draws `Z_t` given `Z_s = x` by inverting the closed-form CDF.
pub fn z_sample_step<R: Rng + ?Sized>(rng: &mut R, h: f64, x: f64) -> f64 {
    z_quantile(h, x, rng.random())
}

/// Inverse of `y -> P(Z_{s+h} <= y | Z_s = x)` at `w`.
pub fn z_quantile(h: f64, x: f64, w: f64) -> f64 {
    let u = x.sqrt();
    let mut hi = u + h;
    while cdf_sqrt(h, u, hi) < w {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    let mut v = 0.5 * (lo + hi);
    for _ in 0..200 {
        let g = cdf_sqrt(h, u, v) - w;
        if g == 0.0 {
            break;
        }
        if g < 0.0 {
            lo = v;
        } else {
            hi = v;
        }
        let d = pdf_sqrt(h, u, v);
        let newton = v - g / d;
        let next = if d > 0.0 && newton >= lo && newton <= hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - v).abs() <= 1e-15 * v || hi - lo <= 1e-15 * hi {
            v = next;
            break;
        }
        v = next;
    }
    v * v
}

/// `Z` on `times` started from `Z_0 = u0`.
pub fn z_path_with<R: Rng + ?Sized>(rng: &mut R, u0: f64, times: &[f64]) -> Result<PathSample> {
    if !(u0 >= 0.0 && u0.is_finite()) {
        return Err(Error::invalid("u0", "must be nonnegative"));
    }
    check_increasing("times", times, true)?;
    let mut prev_t = 0.0;
    let mut z = u0;
    let mut values = Vec::with_capacity(times.len());
    for &t in times {
        z = z_sample_step(rng, t - prev_t, z);
        values.push(z);
        prev_t = t;
    }
    Ok(PathSample {
        times: times.to_vec(),
        values,
    })
}

/// One seeded path of `Z`.
pub fn z_sample_path(u0: f64, times: &[f64], seed: u64) -> Result<PathSample> {
    let mut rng = replica_rng(seed, 0, component::Z_PATH);
    z_path_with(&mut rng, u0, times)
}

/// `int_0^inf g`, split at `breaks` and mapped to a finite interval beyond.
pub(crate) fn half_line<F: FnMut(f64) -> f64>(integ: &Integrator, mut g: F, breaks: &[f64]) -> f64 {
    let mut pts = vec![0.0];
    pts.extend(breaks.iter().copied().filter(|&b| b > 0.0 && b.is_finite()));
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let last = *pts.last().unwrap();
    let head = if pts.len() > 1 {
        integ.integrate_breaks(&mut g, &pts).value
    } else {
        0.0
    };
    head + integ.integrate_to_infinity(&mut g, last).value
}

fn default_integrator() -> Integrator {
    Integrator::new(1e-14, 1e-12).with_max_intervals(4000)
}

fn sqrt_breaks(h: f64, a: f64, b: f64) -> Vec<f64> {
    vec![a, b, (a + b) * 0.5, a.max(b) + h, a.max(b) + 10.0 * h]
}

/// `int_0^inf x^{-1/2} q_{0,t}(x, y) dx` by quadrature, and its closed form
/// `sqrt(y) / (y + t^2)`.
pub fn meander_integral_identity(t: f64, y: f64) -> Result<(f64, f64)> {
    if !(t > 0.0 && y > 0.0) {
        return Err(Error::invalid("t, y", "must be positive"));
    }
    // x = w^2.
    let lhs = half_line(
        &default_integrator(),
        |w| 2.0 * q_kernel(t, w * w, y),
        &sqrt_breaks(t, 0.0, y.sqrt()),
    );
    Ok((lhs, y.sqrt() / (y + t * t)))
}

/// `int_0^inf u^{1/2} q_{0,t}(u, y) du`, equal to `y^{1/2}` by stationarity.
pub fn stationarity_integral(t: f64, y: f64) -> Result<f64> {
    if !(t > 0.0 && y >= 0.0) {
        return Err(Error::invalid("t, y", "need t > 0, y >= 0"));
    }
    Ok(half_line(
        &default_integrator(),
        |w| 2.0 * w * w * q_kernel(t, w * w, y),
        &sqrt_breaks(t, 0.0, y.sqrt()),
    ))
}

/// `int_0^inf q_{s,t}(x, y) dy`.
pub fn kernel_mass(s: f64, t: f64, x: f64) -> Result<f64> {
    z_kernel(s, t, x, 0.0)?;
    let h = t - s;
    Ok(half_line(
        &default_integrator(),
        |v| pdf_sqrt(h, x.sqrt(), v),
        &sqrt_breaks(h, 0.0, x.sqrt()),
    ))
}

/// `int_0^inf q_{s,r}(x, w) q_{r,t}(w, y) dw`.
pub fn chapman_kolmogorov(s: f64, r: f64, t: f64, x: f64, y: f64) -> Result<f64> {
    z_kernel(s, r, x, y)?;
    z_kernel(r, t, x, y)?;
    let (h1, h2) = (r - s, t - r);
    Ok(half_line(
        &default_integrator(),
        |v| 2.0 * v * q_kernel(h1, x, v * v) * q_kernel(h2, v * v, y),
        &sqrt_breaks(h1.min(h2), x.sqrt(), y.sqrt()),
    ))
}

/// Which of the two tangent regimes a parameter set belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TangentRegime {
    /// `A < 1, C < 1`
    MaxCurrent,
    /// `A = 1, C < 1`
    BoundaryA,
}

pub const REGIME_EPS: f64 = 1e-12;

pub fn tangent_regime(spec: &AwProcessSpec) -> Result<TangentRegime> {
    let ab = &spec.abcd;
    if ab.c >= 1.0 {
        return Err(Error::invalid("C", "tangent limit needs C < 1"));
    }
    if (ab.a - 1.0).abs() <= REGIME_EPS {
        Ok(TangentRegime::BoundaryA)
    } else if ab.a < 1.0 {
        Ok(TangentRegime::MaxCurrent)
    } else {
        Err(Error::invalid("A", "tangent limit needs A <= 1"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RescaledKernelQuery {
    pub n: f64,
    pub s: f64,
    pub t: f64,
    pub u: f64,
    pub v: f64,
}

// Angle theta with 1 - cos(theta) = u / (2n).
fn edge_angle(n: f64, u: f64) -> f64 {
    2.0 * (u / (4.0 * n)).sqrt().asin()
}

fn check_window(spec: &AwProcessSpec, tau: f64) -> Result<()> {
    let ab = &spec.abcd;
    let floor = (ab.c * ab.c).max(ab.d * ab.d);
    if tau <= floor {
        return Err(Error::invalid(
            "n",
            format!("time {tau} is not above max(C^2, D^2) = {floor}; increase n"),
        ));
    }
    Ok(())
}

/// Transition density of `2n (1 - Y_{exp(-2 s / sqrt n)})` from `u` at time
/// `s` to `v` at time `t`, computed through the reversed Askey-Wilson
/// transition and the ratio of marginal densities.
pub fn rescaled_kernel(qy: &RescaledKernelQuery, spec: &AwProcessSpec) -> Result<f64> {
    tangent_regime(spec)?;
    let RescaledKernelQuery { n, s, t, u, v } = *qy;
    if !(n > 0.0 && 0.0 <= s && s < t) {
        return Err(Error::invalid("n, s, t", "need n > 0 and 0 <= s < t"));
    }
    let edge = 4.0 * n;
    if !(u > 0.0 && u < edge && v >= 0.0 && v < edge) {
        return Err(Error::invalid("u, v", "need 0 < u < 4n and 0 <= v < 4n"));
    }
    if v == 0.0 {
        return Ok(0.0);
    }
    let sn = (-2.0 * s / n.sqrt()).exp();
    let tn = (-2.0 * t / n.sqrt()).exp();
    check_window(spec, tn)?;
    let (tx, ty) = (edge_angle(n, u), edge_angle(n, v));
    let fwd = spec.transition_from(tn, sn, AwState::Angle(ty))?;
    let p = fwd.density_theta(tx) / tx.sin();
    let pi_t = spec.marginal(tn)?.density_theta(ty) / ty.sin();
    let pi_s = spec.marginal(sn)?.density_theta(tx) / tx.sin();
    Ok(p * pi_t / pi_s / (2.0 * n))
}

/// Density of `2n (1 - Y_1)` at `u`.
pub fn rescaled_initial_density(n: f64, u: f64, spec: &AwProcessSpec) -> Result<f64> {
    tangent_regime(spec)?;
    if !(n > 0.0 && u > 0.0 && u < 4.0 * n) {
        return Err(Error::invalid("u", "need 0 < u < 4n"));
    }
    let th = edge_angle(n, u);
    Ok(spec.marginal(1.0)?.density_theta(th) / th.sin() / (2.0 * n))
}

/// Large-`n` form of [`rescaled_initial_density`]: `c1 u^{1/2} / n^{3/2}`
/// or `c2 u^{-1/2} / n^{1/2}`.
pub fn initial_density_limit(n: f64, u: f64, spec: &AwProcessSpec) -> Result<f64> {
    Ok(match tangent_regime(spec)? {
        TangentRegime::MaxCurrent => constant_c1(&spec.abcd)? * u.sqrt() / n.powf(1.5),
        TangentRegime::BoundaryA => constant_c2(&spec.abcd)? / (u.sqrt() * n.sqrt()),
    })
}

/// CSV `x,y,kernel` over a grid.
pub fn write_kernel_grid<W: Write>(mut w: W, s: f64, t: f64, xs: &[f64], ys: &[f64]) -> Result<()> {
    writeln!(w, "x,y,kernel")?;
    for &x in xs {
        for &y in ys {
            writeln!(w, "{x},{y},{:.12e}", z_kernel(s, t, x, y)?)?;
        }
    }
    Ok(())
}

/// One row of a convergence table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: f64,
    pub u: f64,
    pub v: f64,
    pub rescaled: f64,
    pub limit: f64,
    pub rel_error: f64,
}

pub fn kernel_convergence(
    spec: &AwProcessSpec,
    ns: &[f64],
    s: f64,
    t: f64,
    us: &[f64],
    vs: &[f64],
) -> Result<Vec<ConvergenceRow>> {
    let mut rows = Vec::new();
    for &n in ns {
        for &u in us {
            for &v in vs {
                let rescaled = rescaled_kernel(&RescaledKernelQuery { n, s, t, u, v }, spec)?;
                let limit = z_kernel(s, t, u, v)?;
                rows.push(ConvergenceRow {
                    n,
                    u,
                    v,
                    rescaled,
                    limit,
                    rel_error: (rescaled - limit).abs() / limit,
                });
            }
        }
    }
    Ok(rows)
}

/// CSV `n,u,v,rescaled,limit,rel_error`.
pub fn write_convergence_csv<W: Write>(mut w: W, rows: &[ConvergenceRow]) -> Result<()> {
    writeln!(w, "n,u,v,rescaled,limit,rel_error")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{:.12e},{:.12e},{:.6e}",
            r.n, r.u, r.v, r.rescaled, r.limit, r.rel_error
        )?;
    }
    Ok(())
}
