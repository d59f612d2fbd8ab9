//! Brownian motion, excursion and meander: samplers, Laplace transforms, the
//! dual representations through the tangent process, and the limit fields of
//! the centered height function.

use std::f64::consts::{PI, SQRT_2};
use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asep::{AbcdParams, Phase};
use crate::error::{Error, Result};
use crate::path::PathSample;
use crate::quadrature::Integrator;
use crate::rng::{component, replica_rng};
use crate::stats;
use crate::tangent::{half_line, z_path_with};

/// How the `s_k` of a [`LaplaceQuery`] are built from its coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SConvention {
    /// `s_k = c_k + ... + c_d`
    Full,
    /// `s_k = (c_k + ... + c_d) / 2`
    Half,
}

/// Points `0 < x_1 < ... < x_d <= 1` and coefficients `c_k > 0` of
/// `E exp(-sum_k c_k X_{x_k})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaplaceQuery {
    pub xs: Vec<f64>,
    pub cs: Vec<f64>,
    pub convention: SConvention,
}

impl LaplaceQuery {
    pub fn new(xs: Vec<f64>, cs: Vec<f64>, convention: SConvention) -> Result<Self> {
        let q = LaplaceQuery { xs, cs, convention };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        if self.xs.is_empty() || self.xs.len() != self.cs.len() {
            return Err(Error::invalid("xs, cs", "need equal, nonzero lengths"));
        }
        let mut prev = 0.0;
        for &x in &self.xs {
            if !(x > prev && x <= 1.0) {
                return Err(Error::invalid("xs", "need 0 < x_1 < ... < x_d <= 1"));
            }
            prev = x;
        }
        if self.cs.iter().any(|&c| !(c > 0.0 && c.is_finite())) {
            return Err(Error::invalid("cs", "coefficients must be positive"));
        }
        Ok(())
    }

    pub fn d(&self) -> usize {
        self.xs.len()
    }

    /// `s_1 > ... > s_d > s_{d+1} = 0`, `d + 1` values.
    pub fn s(&self) -> Vec<f64> {
        let f = match self.convention {
            SConvention::Full => 1.0,
            SConvention::Half => 0.5,
        };
        let d = self.d();
        let mut s = vec![0.0; d + 1];
        for k in (0..d).rev() {
            s[k] = s[k + 1] + f * self.cs[k];
        }
        s
    }

    /// `s_k - s_{k+1}`, the coefficient of `X_{x_k}`.
    pub fn weights(&self) -> Vec<f64> {
        let s = self.s();
        (0..self.d()).map(|k| s[k] - s[k + 1]).collect()
    }

    fn weighted_sum(&self, values: &[f64]) -> f64 {
        self.weights().iter().zip(values).map(|(w, v)| w * v).sum()
    }
}

/// `E exp(-sum_k (s_k - s_{k+1}) B_{x_k}) = exp(sum_k s_k^2 (x_k - x_{k-1}) / 2)`.
pub fn bm_laplace(lq: &LaplaceQuery) -> Result<f64> {
    lq.validate()?;
    let s = lq.s();
    let mut prev = 0.0;
    let mut acc = 0.0;
    for (k, &x) in lq.xs.iter().enumerate() {
        acc += s[k] * s[k] * (x - prev);
        prev = x;
    }
    Ok((0.5 * acc).exp())
}

fn check_grid(grid: &[f64]) -> Result<()> {
    let mut prev = f64::NEG_INFINITY;
    for &x in grid {
        if !(0.0..=1.0).contains(&x) || x <= prev {
            return Err(Error::invalid(
                "grid",
                "need strictly increasing points in [0, 1]",
            ));
        }
        prev = x;
    }
    Ok(())
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

fn bm_values<R: Rng + ?Sized>(rng: &mut R, grid: &[f64]) -> Vec<f64> {
    let mut prev = 0.0;
    let mut b = 0.0;
    grid.iter()
        .map(|&x| {
            b += (x - prev).sqrt() * normal(rng);
            prev = x;
            b
        })
        .collect()
}

// Standard Brownian bridge on [0, 1] from 0 to 0.
fn bridge_values<R: Rng + ?Sized>(rng: &mut R, grid: &[f64]) -> Vec<f64> {
    let mut prev = 0.0;
    let mut b = 0.0;
    grid.iter()
        .map(|&x| {
            if x >= 1.0 {
                b = 0.0;
            } else {
                let rest = 1.0 - prev;
                let mean = b * (1.0 - x) / rest;
                let var = (x - prev) * (1.0 - x) / rest;
                b = mean + var.sqrt() * normal(rng);
            }
            prev = x;
            b
        })
        .collect()
}

// Three-dimensional Bessel bridge from 0 to `end` at time 1.
fn bessel3_bridge<R: Rng + ?Sized>(rng: &mut R, grid: &[f64], end: f64) -> Vec<f64> {
    let b1 = bridge_values(rng, grid);
    let b2 = bridge_values(rng, grid);
    let b3 = bridge_values(rng, grid);
    grid.iter()
        .enumerate()
        .map(|(i, &x)| {
            let first = b1[i] + x * end;
            (first * first + b2[i] * b2[i] + b3[i] * b3[i]).sqrt()
        })
        .collect()
}

fn rayleigh<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    (-2.0 * (1.0 - u).ln()).sqrt()
}

pub fn bm_path_with<R: Rng + ?Sized>(rng: &mut R, grid: &[f64]) -> Result<PathSample> {
    check_grid(grid)?;
    Ok(PathSample {
        times: grid.to_vec(),
        values: bm_values(rng, grid),
    })
}

/// Excursion as the norm of a three-dimensional Brownian bridge.
pub fn excursion_path_with<R: Rng + ?Sized>(rng: &mut R, grid: &[f64]) -> Result<PathSample> {
    check_grid(grid)?;
    Ok(PathSample {
        times: grid.to_vec(),
        values: bessel3_bridge(rng, grid, 0.0),
    })
}

/// Meander as a three-dimensional Bessel bridge to a Rayleigh endpoint.
pub fn meander_path_with<R: Rng + ?Sized>(rng: &mut R, grid: &[f64]) -> Result<PathSample> {
    check_grid(grid)?;
    let end = rayleigh(rng);
    Ok(PathSample {
        times: grid.to_vec(),
        values: bessel3_bridge(rng, grid, end),
    })
}

pub fn sample_bm(grid: &[f64], seed: u64) -> Result<PathSample> {
    bm_path_with(&mut replica_rng(seed, 0, component::BROWNIAN), grid)
}

pub fn sample_excursion(grid: &[f64], seed: u64) -> Result<PathSample> {
    excursion_path_with(&mut replica_rng(seed, 0, component::EXCURSION), grid)
}

pub fn sample_meander(grid: &[f64], seed: u64) -> Result<PathSample> {
    meander_path_with(&mut replica_rng(seed, 0, component::MEANDER), grid)
}

/// Process whose Laplace transform is estimated by [`laplace_mc`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseProcess {
    Brownian,
    Excursion,
    Meander,
}

/// Monte Carlo `E exp(-sum_k (s_k - s_{k+1}) X_{x_k})` with its standard error.
pub fn laplace_mc(
    lq: &LaplaceQuery,
    process: BaseProcess,
    samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    lq.validate()?;
    if samples < 2 {
        return Err(Error::invalid("samples", "need at least 2"));
    }
    let vals: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let (comp, f): (u8, fn(&mut _, &[f64]) -> Result<PathSample>) = match process {
                BaseProcess::Brownian => (component::BROWNIAN, bm_path_with),
                BaseProcess::Excursion => (component::EXCURSION, excursion_path_with),
                BaseProcess::Meander => (component::MEANDER, meander_path_with),
            };
            let mut rng = replica_rng(seed, i as u64, comp);
            let p = f(&mut rng, &lq.xs).expect("grid validated");
            (-lq.weighted_sum(&p.values)).exp()
        })
        .collect();
    let m = stats::mean(&vals);
    Ok((m, (stats::variance(&vals) / samples as f64).sqrt()))
}

/// Weight `u^{1/2}` (excursion) or `u^{-1/2}` (meander) in the dual formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DualKind {
    Excursion,
    Meander,
}

/// Largest `d` evaluated by nested quadrature.
pub const DUAL_QUADRATURE_MAX_D: usize = 2;

fn dual_integrator() -> Integrator {
    Integrator::new(1e-12, 1e-10).with_max_intervals(600)
}

// Tangent times tau_0 = 0 < s_d < ... < s_1 with the coefficient of Z at each.
fn dual_schedule(lq: &LaplaceQuery) -> (Vec<f64>, Vec<f64>) {
    let s = lq.s();
    let d = lq.d();
    let mut times = vec![0.0];
    let mut coef = vec![0.5 * (1.0 - lq.xs[d - 1])];
    for j in 1..=d {
        let k = d - j;
        times.push(s[k]);
        let left = if k == 0 { 0.0 } else { lq.xs[k - 1] };
        coef.push(0.5 * (lq.xs[k] - left));
    }
    (times, coef)
}

fn sqrt_pdf(h: f64, u: f64, v: f64) -> f64 {
    let (x, y) = (u * u, v * v);
    let h2 = h * h;
    let den = h2 * h2 + 2.0 * h2 * (x + y) + (x - y) * (x - y);
    4.0 * h * y / (PI * den)
}

// E_{Z_{tau_{j-1}} = b^2} exp(-sum_{i >= j} coef_i Z_{tau_i}).
fn dual_inner(times: &[f64], coef: &[f64], j: usize, b: f64) -> f64 {
    if j == times.len() {
        return 1.0;
    }
    let h = times[j] - times[j - 1];
    let a = coef[j];
    let breaks = [b, b + h, b + 5.0 * h, 1.0 / a.sqrt(), 4.0 / a.sqrt()];
    half_line(
        &dual_integrator(),
        |v| sqrt_pdf(h, b, v) * (-a * v * v).exp() * dual_inner(times, coef, j + 1, v),
        &breaks,
    )
}

/// `(2 pi)^{-1/2} int u^{+-1/2} E_u exp(-sum_k Z_{s_k} (x_k - x_{k-1}) / 2) du`
/// by nested quadrature over the tangent kernel (`d <= 2`).
pub fn laplace_dual(lq: &LaplaceQuery, kind: DualKind) -> Result<f64> {
    lq.validate()?;
    if lq.d() > DUAL_QUADRATURE_MAX_D {
        return Err(Error::invalid(
            "xs",
            "nested quadrature supports d <= 2; use laplace_dual_mc",
        ));
    }
    let (times, coef) = dual_schedule(lq);
    let a0 = coef[0];
    let first_h = times[1];
    let mut breaks = vec![
        first_h,
        5.0 * first_h,
        1.0 / coef[1].sqrt(),
        4.0 / coef[1].sqrt(),
    ];
    if a0 > 0.0 {
        breaks.push(1.0 / a0.sqrt());
    }
    // u = a^2.
    let weight = |a: f64| match kind {
        DualKind::Excursion => 2.0 * a * a,
        DualKind::Meander => 2.0,
    };
    let v = half_line(
        &dual_integrator(),
        |a| weight(a) * (-a0 * a * a).exp() * dual_inner(&times, &coef, 1, a),
        &breaks,
    );
    Ok(v / (2.0 * PI).sqrt())
}

pub fn excursion_laplace_dual(lq: &LaplaceQuery) -> Result<f64> {
    laplace_dual(lq, DualKind::Excursion)
}

pub fn meander_laplace_dual(lq: &LaplaceQuery) -> Result<f64> {
    laplace_dual(lq, DualKind::Meander)
}

/// Monte Carlo version of [`laplace_dual`] for any `d`, drawing `u` from a
/// Gamma law that absorbs the `u^{+-1/2} e^{-u (1 - x_d) / 2}` factor;
/// needs `x_d < 1`.
pub fn laplace_dual_mc(
    lq: &LaplaceQuery,
    kind: DualKind,
    samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    lq.validate()?;
    let (times, coef) = dual_schedule(lq);
    let rate = coef[0];
    if rate <= 0.0 {
        return Err(Error::invalid("xs", "the Monte Carlo dual needs x_d < 1"));
    }
    if samples < 2 {
        return Err(Error::invalid("samples", "need at least 2"));
    }
    let shape = match kind {
        DualKind::Excursion => 1.5,
        DualKind::Meander => 0.5,
    };
    let gamma =
        Gamma::new(shape, 1.0 / rate).map_err(|e| Error::invalid("gamma", e.to_string()))?;
    // int u^{shape-1} e^{-rate u} du.
    let norm = statrs::function::gamma::gamma(shape) * rate.powf(-shape) / (2.0 * PI).sqrt();
    let vals: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = replica_rng(seed, i as u64, component::Z_PATH);
            let u = gamma.sample(&mut rng);
            let path = z_path_with(&mut rng, u, &times[1..]).expect("times are increasing");
            let e: f64 = path.values.iter().zip(&coef[1..]).map(|(z, c)| c * z).sum();
            (-e).exp()
        })
        .collect();
    let m = stats::mean(&vals);
    let se = (stats::variance(&vals) / samples as f64).sqrt();
    Ok((norm * m, norm * se))
}

/// Limit field attached to a phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LimitField {
    /// `scale * B`
    Gaussian { scale: f64 },
    /// `(B + B^ex) / (2 sqrt 2)`
    BrownianPlusExcursion,
    /// `(B + B^me) / (2 sqrt 2)`
    BrownianPlusMeander,
    /// `(B_x + B^me_{1-x} - B^me_1) / (2 sqrt 2)`
    BrownianPlusReversedMeander,
}

impl LimitField {
    pub fn for_phase(phase: Phase, ab: &AbcdParams) -> Result<LimitField> {
        Ok(match phase {
            Phase::FanBoundary | Phase::CornerAC1 | Phase::HighDensity => LimitField::Gaussian {
                scale: ab.a.sqrt() / (1.0 + ab.a),
            },
            Phase::LowDensity => LimitField::Gaussian {
                scale: ab.c.sqrt() / (1.0 + ab.c),
            },
            Phase::MaxCurrent => LimitField::BrownianPlusExcursion,
            Phase::MCBoundaryA => LimitField::BrownianPlusMeander,
            Phase::MCBoundaryC => LimitField::BrownianPlusReversedMeander,
            Phase::ShockRegion | Phase::CoexistenceLine => {
                return Err(Error::Unsupported(format!("no limit field for {phase}")))
            }
        })
    }

    /// One replica on `grid`, each component from its own stream.
    pub fn sample(&self, grid: &[f64], seed: u64, replica: u64) -> Result<Vec<f64>> {
        check_grid(grid)?;
        let mut rb = replica_rng(seed, replica, component::BROWNIAN);
        let b = bm_values(&mut rb, grid);
        let k = 1.0 / (2.0 * SQRT_2);
        Ok(match *self {
            LimitField::Gaussian { scale } => b.iter().map(|v| scale * v).collect(),
            LimitField::BrownianPlusExcursion => {
                let mut r = replica_rng(seed, replica, component::EXCURSION);
                let e = bessel3_bridge(&mut r, grid, 0.0);
                b.iter().zip(&e).map(|(x, y)| k * (x + y)).collect()
            }
            LimitField::BrownianPlusMeander => {
                let mut r = replica_rng(seed, replica, component::MEANDER);
                let end = rayleigh(&mut r);
                let m = bessel3_bridge(&mut r, grid, end);
                b.iter().zip(&m).map(|(x, y)| k * (x + y)).collect()
            }
            LimitField::BrownianPlusReversedMeander => {
                let mut r = replica_rng(seed, replica, component::MEANDER);
                let end = rayleigh(&mut r);
                // Meander on the reflected grid 1 - x, increasing.
                let rev: Vec<f64> = grid
                    .iter()
                    .rev()
                    .map(|&x| 1.0 - x)
                    .filter(|&x| x > 0.0)
                    .collect();
                let m = bessel3_bridge(&mut r, &rev, end);
                let at = |x: f64| -> f64 {
                    let y = 1.0 - x;
                    if y <= 0.0 {
                        0.0
                    } else {
                        let i = rev
                            .iter()
                            .position(|&p| p == y)
                            .expect("reflected grid point");
                        m[i]
                    }
                };
                grid.iter()
                    .zip(&b)
                    .map(|(&x, bx)| k * (bx + at(x) - end))
                    .collect()
            }
        })
    }
}

/// Replicas of a limit field on a common grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSampleSet {
    pub phase: Phase,
    pub field: LimitField,
    pub xs: Vec<f64>,
    /// `values[i][k]` is replica `i` at `xs[k]`.
    pub values: Vec<Vec<f64>>,
}

impl FieldSampleSet {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        self.values.iter().map(|row| row[k]).collect()
    }

    /// CSV rows `replica,x,value`, the layout used for simulated heights.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "replica,x,value")?;
        for (i, row) in self.values.iter().enumerate() {
            for (x, v) in self.xs.iter().zip(row) {
                writeln!(w, "{i},{x},{v:.12e}")?;
            }
        }
        Ok(())
    }
}

/// `replicas` independent draws of the phase's limit field on `grid`.
pub fn limit_field_samples(
    phase: Phase,
    ab: &AbcdParams,
    grid: &[f64],
    replicas: usize,
    seed: u64,
) -> Result<FieldSampleSet> {
    let field = LimitField::for_phase(phase, ab)?;
    check_grid(grid)?;
    let values = (0..replicas)
        .into_par_iter()
        .map(|i| field.sample(grid, seed, i as u64))
        .collect::<Result<Vec<_>>>()?;
    Ok(FieldSampleSet {
        phase,
        field,
        xs: grid.to_vec(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{ks_one_sample, ks_p_value, ks_two_sample, mean, variance};

    fn q(xs: &[f64], cs: &[f64]) -> LaplaceQuery {
        LaplaceQuery::new(xs.to_vec(), cs.to_vec(), SConvention::Full).unwrap()
    }

    #[test]
    fn query_validation_and_s() {
        let lq = q(&[0.3, 0.8], &[1.0, 2.0]);
        assert_eq!(lq.s(), vec![3.0, 2.0, 0.0]);
        let half = LaplaceQuery::new(vec![0.3, 0.8], vec![1.0, 2.0], SConvention::Half).unwrap();
        assert_eq!(half.s(), vec![1.5, 1.0, 0.0]);
        assert!(LaplaceQuery::new(vec![0.5, 0.4], vec![1.0, 1.0], SConvention::Full).is_err());
        assert!(LaplaceQuery::new(vec![0.5], vec![0.0], SConvention::Full).is_err());
    }

    #[test]
    fn bm_laplace_values() {
        assert!((bm_laplace(&q(&[1.0], &[1.0])).unwrap() - 0.5f64.exp()).abs() < 1e-15);
        assert!((bm_laplace(&q(&[0.5], &[1e-9])).unwrap() - 1.0).abs() < 1e-15);
        // Gaussian closed form: Var(c1 B_x1 + c2 B_x2).
        let (x1, x2, c1, c2) = (0.3, 0.8, 0.7, 1.2);
        let var = c1 * c1 * x1 + c2 * c2 * x2 + 2.0 * c1 * c2 * x1;
        let lq = q(&[x1, x2], &[c1, c2]);
        assert!((bm_laplace(&lq).unwrap() - (0.5 * var).exp()).abs() < 1e-12);
        let (m, se) = laplace_mc(&lq, BaseProcess::Brownian, 100_000, 1).unwrap();
        assert!((m - (0.5 * var).exp()).abs() < 3.0 * se, "{m} +- {se}");
    }

    #[test]
    fn excursion_sampler_properties() {
        let grid: Vec<f64> = (1..=20).map(|i| i as f64 / 20.0).collect();
        let p = sample_excursion(&grid, 3).unwrap();
        assert_eq!(*p.values.last().unwrap(), 0.0);
        for seed in 0..200 {
            let p = sample_excursion(&grid, seed).unwrap();
            assert!(p.values[..19].iter().all(|&v| v > 0.0));
        }
        // Time reversal in law.
        let g = [0.3, 0.7];
        let mut r = replica_rng(8, 0, component::EXCURSION);
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for _ in 0..100_000 {
            let p = excursion_path_with(&mut r, &g).unwrap();
            a.push(p.values[0]);
            b.push(p.values[1]);
        }
        assert!(ks_two_sample(&a, &b) < 0.02);
    }

    #[test]
    fn meander_endpoint_is_rayleigh() {
        let mut r = replica_rng(9, 0, component::MEANDER);
        let ends: Vec<f64> = (0..100_000)
            .map(|_| meander_path_with(&mut r, &[0.5, 1.0]).unwrap().values[1])
            .collect();
        assert!((mean(&ends) / (PI / 2.0).sqrt() - 1.0).abs() < 0.01);
        let d = ks_one_sample(&ends, |x| 1.0 - (-x * x / 2.0).exp());
        assert!(ks_p_value(d, ends.len()) > 0.001);
        let p = sample_meander(&[0.1, 0.5, 0.9], 4).unwrap();
        assert!(p.values.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn excursion_dual_matches_direct() {
        let lq = q(&[0.4], &[1.3]);
        let dual = excursion_laplace_dual(&lq).unwrap();
        let (m, se) = laplace_mc(&lq, BaseProcess::Excursion, 100_000, 5).unwrap();
        assert!(
            (dual - m).abs() <= (0.01 * m).max(3.0 * se),
            "{dual} vs {m} +- {se}"
        );
        // Endpoint of the excursion is zero.
        assert!((excursion_laplace_dual(&q(&[1.0], &[0.8])).unwrap() - 1.0).abs() < 1e-8);
        assert!((excursion_laplace_dual(&q(&[0.5], &[1e-8])).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn meander_dual_values() {
        let integ = Integrator::new(1e-14, 1e-12);
        let want = half_line(
            &integ,
            |r| (-r).exp() * r * (-r * r / 2.0).exp(),
            &[1.0, 4.0],
        );
        // 1 - e^{1/2} sqrt(2 pi) P(N > 1).
        let tail = 0.5 * statrs::function::erf::erfc(1.0 / SQRT_2);
        let closed = 1.0 - 0.5f64.exp() * (2.0 * PI).sqrt() * tail;
        assert!((want - closed).abs() < 1e-9, "{want} vs {closed}");
        assert!((want - 0.3443).abs() < 1e-4);
        let got = meander_laplace_dual(&q(&[1.0], &[1.0])).unwrap();
        assert!((got - want).abs() < 1e-7, "{got} vs {want}");
        let lq = q(&[0.5], &[1.0]);
        let (m, se) = laplace_mc(&lq, BaseProcess::Meander, 100_000, 6).unwrap();
        let got = meander_laplace_dual(&lq).unwrap();
        assert!(
            (got - m).abs() <= (0.01 * m).max(3.0 * se),
            "{got} vs {m} +- {se}"
        );
    }

    #[test]
    fn two_point_duals() {
        let lq = q(&[0.3, 0.7], &[0.8, 0.6]);
        for (kind, base) in [
            (DualKind::Excursion, BaseProcess::Excursion),
            (DualKind::Meander, BaseProcess::Meander),
        ] {
            let dual = laplace_dual(&lq, kind).unwrap();
            let (m, se) = laplace_mc(&lq, base, 100_000, 7).unwrap();
            assert!(
                (dual - m).abs() <= (0.01 * m).max(3.0 * se),
                "{kind:?}: {dual} vs {m} +- {se}"
            );
            let (mc, mse) = laplace_dual_mc(&lq, kind, 50_000, 8).unwrap();
            assert!(
                (mc - dual).abs() <= 4.0 * mse + 1e-3 * dual,
                "{kind:?}: {mc} +- {mse} vs {dual}"
            );
        }
        assert!(laplace_dual(&q(&[0.2, 0.4, 0.6], &[1.0; 3]), DualKind::Excursion).is_err());
    }

    #[test]
    fn fields() {
        let ab = AbcdParams::new(0.5, 0.0, 0.5, 0.0, 0.0).unwrap();
        let grid = [0.25, 0.5, 1.0];
        let set = limit_field_samples(Phase::MaxCurrent, &ab, &grid, 20_000, 1).unwrap();
        let v = variance(&set.column(2));
        assert!((v - 0.125).abs() < 4.0 * 0.125 * (2.0 / 20_000f64).sqrt());

        let set = limit_field_samples(Phase::MCBoundaryC, &ab, &grid, 20_000, 2).unwrap();
        let col = set.column(2);
        let se = (variance(&col) / col.len() as f64).sqrt();
        assert!((mean(&col) + 0.4431).abs() < 4.0 * se);

        assert!(limit_field_samples(Phase::ShockRegion, &ab, &grid, 10, 1).is_err());

        // Independent components: B and B^ex at x = 0.5.
        let n = 20_000;
        let (mut bs, mut es) = (Vec::new(), Vec::new());
        for i in 0..n {
            let mut rb = replica_rng(3, i, component::BROWNIAN);
            let mut re = replica_rng(3, i, component::EXCURSION);
            bs.push(bm_values(&mut rb, &[0.5])[0]);
            es.push(bessel3_bridge(&mut re, &[0.5], 0.0)[0]);
        }
        let (mb, me) = (mean(&bs), mean(&es));
        let cov: Vec<f64> = bs
            .iter()
            .zip(&es)
            .map(|(b, e)| (b - mb) * (e - me))
            .collect();
        let se = (variance(&cov) / n as f64).sqrt();
        assert!(mean(&cov).abs() < 4.0 * se);
    }

    #[test]
    fn reversed_meander_field_matches_reversed_paths() {
        // (B + B^me) reversed: W_x = F_{1-x} - F_1 with F = (B + B^me)/(2 sqrt 2),
        // has the law of the C = 1 field at x.
        let ab = AbcdParams::new(0.5, 0.0, 1.0, 0.0, 0.0).unwrap();
        let grid = [0.3, 0.7, 1.0];
        let c1 = limit_field_samples(Phase::MCBoundaryC, &ab, &grid, 50_000, 4).unwrap();
        let a1 = limit_field_samples(Phase::MCBoundaryA, &ab, &[0.3, 0.7, 1.0], 50_000, 5).unwrap();
        for (k, &x) in grid.iter().enumerate() {
            let rev: Vec<f64> = a1
                .values
                .iter()
                .map(|row| {
                    let at = |y: f64| {
                        if y <= 0.0 {
                            0.0
                        } else {
                            row[a1.xs.iter().position(|&p| (p - y).abs() < 1e-12).unwrap()]
                        }
                    };
                    at(1.0 - x) - row[2]
                })
                .collect();
            assert!(ks_two_sample(&c1.column(k), &rev) < 0.02, "x={x}");
        }
    }
}
