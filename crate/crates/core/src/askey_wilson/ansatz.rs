use std::cell::RefCell;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asep::AbcdParams;
use crate::error::{Error, Result};
use crate::qseries::poch_re;
use crate::quadrature::Integrator;
use crate::rng::{component, replica_rng};

use super::measure::AwMeasure;
use super::process::{AwProcessSpec, AwState};

/// Largest number of distinct times handled by nested quadrature.
pub const QUADRATURE_MAX_LEVELS: usize = 3;

const MC_CHUNK: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnsatzMethod {
    Quadrature,
    MonteCarlo {
        paths: usize,
        seed: u64,
    },
    /// Quadrature for up to three sites, Monte Carlo beyond.
    Auto {
        paths: usize,
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnsatzEstimate {
    pub value: f64,
    /// Zero for quadrature.
    pub std_error: f64,
    pub monte_carlo: bool,
}

fn check_ts(ts: &[f64]) -> Result<()> {
    if ts.is_empty() {
        return Err(Error::invalid("ts", "empty"));
    }
    let mut prev = 0.0;
    for &t in ts {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::invalid("ts", "values must be positive"));
        }
        if t < prev {
            return Err(Error::invalid("ts", "values must be nondecreasing"));
        }
        prev = t;
    }
    Ok(())
}

// Distinct times with multiplicities.
fn group(ts: &[f64]) -> Vec<(f64, i32)> {
    let mut out: Vec<(f64, i32)> = Vec::new();
    for &t in ts {
        match out.last_mut() {
            Some((s, m)) if *s == t => *m += 1,
            _ => out.push((t, 1)),
        }
    }
    out
}

// (1 + t + 2 sqrt(t) y) / 4, raised to the multiplicity.
fn factor(t: f64, m: i32, y: f64) -> f64 {
    ((1.0 + t + 2.0 * t.sqrt() * y) / 4.0).powi(m)
}

fn inner_integrator() -> Integrator {
    Integrator::new(1e-13, 1e-11).with_max_intervals(400)
}

fn nested(
    spec: &AwProcessSpec,
    levels: &[(f64, i32)],
    k: usize,
    from: Option<AwState>,
    err: &RefCell<Option<Error>>,
) -> f64 {
    if k == levels.len() {
        return 1.0;
    }
    let (t, mult) = levels[k];
    let law = match from {
        None => spec.marginal(t),
        Some(state) => spec.transition_from(levels[k - 1].0, t, state),
    };
    let m = match law {
        Ok(m) => m,
        Err(e) => {
            err.borrow_mut().get_or_insert(e);
            return f64::NAN;
        }
    };
    let mut total = 0.0;
    for a in &m.atoms {
        total += a.mass
            * factor(t, mult, a.y)
            * nested(spec, levels, k + 1, Some(AwState::Root(a.root)), err);
    }
    total
        + m.integrate_continuous(
            |y, th| factor(t, mult, y) * nested(spec, levels, k + 1, Some(AwState::Angle(th)), err),
            &[],
            &inner_integrator(),
        )
}

/// `E prod_j (1 + t_j + 2 sqrt(t_j) Y_{t_j}) / 4^n` by nested quadrature.
pub fn scaled_product_moment(spec: &AwProcessSpec, ts: &[f64]) -> Result<f64> {
    check_ts(ts)?;
    let levels = group(ts);
    if levels.len() > QUADRATURE_MAX_LEVELS {
        return Err(Error::invalid(
            "ts",
            format!("quadrature handles at most {QUADRATURE_MAX_LEVELS} distinct times"),
        ));
    }
    let err = RefCell::new(None);
    let v = nested(spec, &levels, 0, None, &err);
    match err.into_inner() {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

fn product_moment_mc(
    spec: &AwProcessSpec,
    ts: &[f64],
    paths: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if paths < 2 {
        return Err(Error::invalid("paths", "need at least 2"));
    }
    let levels = group(ts);
    let times: Vec<f64> = levels.iter().map(|l| l.0).collect();
    let sampler = spec.sampler(&times)?;
    let chunks = paths.div_ceil(MC_CHUNK);
    let sums: Vec<Result<(f64, f64)>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = replica_rng(seed, c as u64, component::AW_PATH);
            let count = MC_CHUNK.min(paths - c * MC_CHUNK);
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..count {
                let states = sampler.sample_states(&mut rng)?;
                let v: f64 = levels
                    .iter()
                    .zip(&states)
                    .map(|(&(t, m), st)| factor(t, m, st.y()))
                    .product();
                s1 += v;
                s2 += v * v;
            }
            Ok((s1, s2))
        })
        .collect();
    let (mut s1, mut s2) = (0.0, 0.0);
    for r in sums {
        let (a, b) = r?;
        s1 += a;
        s2 += b;
    }
    let n = paths as f64;
    let mean = s1 / n;
    let var = ((s2 - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok((mean, (var / n).sqrt()))
}

/// Right-hand side of the Askey-Wilson representation of
/// `< prod_j t_j^{tau_j} >` for `t_1 <= ... <= t_n`.
pub fn ansatz_rhs(
    spec: &AwProcessSpec,
    ts: &[f64],
    method: AnsatzMethod,
) -> Result<AnsatzEstimate> {
    check_ts(ts)?;
    let n = ts.len();
    let z = partition_zn_scaled(spec, n)?;
    let use_mc = match method {
        AnsatzMethod::Quadrature => {
            if n > QUADRATURE_MAX_LEVELS {
                return Err(Error::invalid("method", "quadrature supports n <= 3"));
            }
            None
        }
        AnsatzMethod::MonteCarlo { paths, seed } => Some((paths, seed)),
        AnsatzMethod::Auto { paths, seed } => (n > QUADRATURE_MAX_LEVELS).then_some((paths, seed)),
    };
    match use_mc {
        None => Ok(AnsatzEstimate {
            value: scaled_product_moment(spec, ts)? / z,
            std_error: 0.0,
            monte_carlo: false,
        }),
        Some((paths, seed)) => {
            let (m, se) = product_moment_mc(spec, ts, paths, seed)?;
            Ok(AnsatzEstimate {
                value: m / z,
                std_error: se / z,
                monte_carlo: true,
            })
        }
    }
}

/// `E ((1 + Y_1) / 2)^n`.
pub fn partition_zn_scaled(spec: &AwProcessSpec, n: usize) -> Result<f64> {
    let m = spec.marginal(1.0)?;
    Ok(scaled_moment(&m, n))
}

fn scaled_moment(m: &AwMeasure, n: usize) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let g = |y: f64| ((1.0 + y) / 2.0).powi(n as i32);
    let atoms: f64 = m.atoms.iter().map(|a| a.mass * g(a.y)).sum();
    // The integrand concentrates within O(1/sqrt n) of theta = 0.
    let w = 1.0 / (n.max(1) as f64).sqrt();
    let breaks: Vec<f64> = (1..=8).map(|k| k as f64 * w).filter(|&b| b < PI).collect();
    let integ = Integrator::new(0.0, 1e-12).with_max_intervals(4000);
    atoms + m.integrate_continuous(|y, _| g(y), &breaks, &integ)
}

/// `Z_n = E (1 + Y_1)^n`; overflows to infinity for `n` beyond about 1000.
pub fn partition_zn(spec: &AwProcessSpec, n: usize) -> Result<f64> {
    Ok(partition_zn_scaled(spec, n)? * 2f64.powi(n as i32))
}

fn qp(args: &[f64], q: f64) -> f64 {
    args.iter().map(|&a| poch_re(a, q)).product()
}

/// Constant in the `A < 1, C < 1` asymptotics.
pub fn constant_c1(ab: &AbcdParams) -> Result<f64> {
    let AbcdParams { a, b, c, d, q } = *ab;
    if !(a < 1.0 && c < 1.0) {
        return Err(Error::invalid("A, C", "c1 needs A < 1 and C < 1"));
    }
    let num = qp(&[q], q).powi(3) * qp(&[a * b, a * c, a * d, b * c, b * d, c * d], q);
    let den = qp(&[a * b * c * d], q) * qp(&[a, b, c, d], q).powi(2);
    Ok(num / (PI * den))
}

/// Constant in the `A = 1, C < 1` asymptotics.
pub fn constant_c2(ab: &AbcdParams) -> Result<f64> {
    let AbcdParams { a, b, c, d, q } = *ab;
    if (a - 1.0).abs() > 1e-12 || c >= 1.0 {
        return Err(Error::invalid("A, C", "c2 needs A = 1 and C < 1"));
    }
    let num = qp(&[q], q) * qp(&[b * c, b * d, c * d], q);
    let den = qp(&[b * c * d, b, c, d], q);
    Ok(num / (PI * den))
}

/// Mass of `Y_1` at its leading atom `(A + 1/A) / 2`.
pub fn leading_atom_mass(ab: &AbcdParams) -> Result<f64> {
    let AbcdParams { a, b, c, d, q } = *ab;
    if a <= 1.0 {
        return Err(Error::invalid("A", "the leading atom needs A > 1"));
    }
    Ok(qp(&[1.0 / (a * a), b * c, b * d, c * d], q) / qp(&[b / a, c / a, d / a, a * b * c * d], q))
}
