use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asep::{bulk_density, classify_phase, site_count, AsepParams, Centering, PHASE_EPS};
use crate::error::{Error, Result};
use crate::rng::{component, replica_rng, StreamRng};
use crate::stats::Summary;

use super::engine::{Configuration, Simulator};

/// A stationary Monte Carlo run.
///
/// Retained configurations are split over `chains` independent chains, each
/// with its own burn-in and RNG stream. Within a chain, configurations are
/// read off at the arrival times of an independent Poisson clock whose rate
/// is `thinning_events` times smaller than the mean event rate, so on average
/// `thinning_events` events separate consecutive samples. Sampling at Poisson
/// times (rather than every k-th jump) sees the continuous-time stationary
/// law exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimPlan {
    pub n: usize,
    pub params: AsepParams,
    pub seed: u64,
    pub burn_in_events: u64,
    pub samples: usize,
    pub thinning_events: u64,
    #[serde(default = "one")]
    pub chains: usize,
}

fn one() -> usize {
    1
}

impl SimPlan {
    /// Plan with burn-in `20 n^2` and thinning `n` events.
    pub fn new(n: usize, params: AsepParams, seed: u64, samples: usize) -> Self {
        let n64 = n as u64;
        SimPlan {
            n,
            params,
            seed,
            burn_in_events: 20 * n64 * n64,
            samples,
            thinning_events: n64.max(1),
            chains: 1,
        }
    }

    pub fn with_burn_in(mut self, events: u64) -> Self {
        self.burn_in_events = events;
        self
    }

    pub fn with_thinning(mut self, events: u64) -> Self {
        self.thinning_events = events;
        self
    }

    pub fn with_chains(mut self, chains: usize) -> Self {
        self.chains = chains;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.n == 0 {
            return Err(Error::invalid("n", "need at least one site"));
        }
        if self.samples == 0 {
            return Err(Error::invalid("samples", "need at least one sample"));
        }
        if self.thinning_events == 0 {
            return Err(Error::invalid("thinning_events", "must be at least 1"));
        }
        if self.chains == 0 {
            return Err(Error::invalid("chains", "need at least one chain"));
        }
        Ok(())
    }

    fn chain_samples(&self, chain: usize) -> usize {
        let base = self.samples / self.chains;
        base + usize::from(chain < self.samples % self.chains)
    }
}

/// Initial configuration: i.i.d. sites at the limiting bulk density.
fn initial_configuration(n: usize, p: &AsepParams, rng: &mut StreamRng) -> Configuration {
    let ab = p.abcd();
    let rho = bulk_density(&ab, classify_phase(&ab, PHASE_EPS)).unwrap_or(0.5);
    let occ = (0..n)
        .map(|_| u8::from(rng.random::<f64>() < rho))
        .collect();
    Configuration::from_occupations(occ).expect("n >= 1")
}

/// Runs chain `chain` of the plan and hands every retained occupation string
/// to `observe`.
pub fn run_chain_with<F: FnMut(&[u8])>(plan: &SimPlan, chain: usize, mut observe: F) -> Result<()> {
    plan.validate()?;
    let mut rng = replica_rng(plan.seed, chain as u64, component::ASEP);
    let init = initial_configuration(plan.n, &plan.params, &mut rng);
    let mut sim = Simulator::new(&init, &plan.params)?;

    // The mean holding time 1/R is averaged instead of sampled holding times;
    // it has the same expectation and lower variance.
    let mut elapsed = 0.0;
    for _ in 0..plan.burn_in_events {
        elapsed += 1.0 / sim.total_rate();
        sim.jump(&mut rng);
    }
    let mean_rate = if plan.burn_in_events > 0 {
        plan.burn_in_events as f64 / elapsed
    } else {
        sim.total_rate()
    };
    let clock = mean_rate / plan.thinning_events as f64;

    let wanted = plan.chain_samples(chain);
    let mut taken = 0;
    while taken < wanted {
        let total = sim.total_rate();
        let r = rng.random::<f64>() * (total + clock);
        if r < clock {
            observe(sim.occupations());
            taken += 1;
        } else {
            let ev = sim.select(r - clock);
            sim.apply(ev);
        }
    }
    Ok(())
}

/// Retained configurations of all chains, in chain order.
pub fn run_stationary(plan: &SimPlan) -> Result<Vec<Configuration>> {
    plan.validate()?;
    let per_chain: Vec<Result<Vec<Configuration>>> = (0..plan.chains)
        .into_par_iter()
        .map(|c| {
            let mut out = Vec::with_capacity(plan.chain_samples(c));
            run_chain_with(plan, c, |occ| {
                out.push(Configuration::from_occupations(occ.to_vec()).expect("valid"))
            })?;
            Ok(out)
        })
        .collect();
    let mut all = Vec::with_capacity(plan.samples);
    for r in per_chain {
        all.extend(r?);
    }
    Ok(all)
}

/// Height profiles `n^{-1/2} sum_{j <= floor(n x)} (tau_j - rho)` on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeightSampleSet {
    pub n: usize,
    pub xs: Vec<f64>,
    pub centering: Centering,
    pub centering_value: f64,
    /// `values[i][k]` is sample `i` at `xs[k]`.
    pub values: Vec<Vec<f64>>,
    /// Chain that produced each row.
    pub chain: Vec<u32>,
}

/// Per-grid-point summary in a JSON export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSummary {
    pub x: f64,
    #[serde(flatten)]
    pub summary: Summary,
}

impl HeightSampleSet {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Column of samples at grid index `k`.
    pub fn column(&self, k: usize) -> Vec<f64> {
        self.values.iter().map(|row| row[k]).collect()
    }

    /// Heights spread uniformly over their lattice cell of width `1/sqrt(n)`,
    /// so that they can be compared with a continuous law by KS distance.
    pub fn jittered(&self, seed: u64) -> HeightSampleSet {
        let step = 1.0 / (self.n as f64).sqrt();
        let mut out = self.clone();
        for (i, row) in out.values.iter_mut().enumerate() {
            let mut rng = replica_rng(seed, i as u64, component::JITTER);
            for v in row.iter_mut() {
                *v += (rng.random::<f64>() - 0.5) * step;
            }
        }
        out
    }

    pub fn summaries(&self) -> Vec<PointSummary> {
        self.xs
            .iter()
            .enumerate()
            .map(|(k, &x)| PointSummary {
                x,
                summary: Summary::of(&self.column(k)),
            })
            .collect()
    }

    /// CSV rows `replica,x,value`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "replica,x,value")?;
        for (i, row) in self.values.iter().enumerate() {
            for (x, v) in self.xs.iter().zip(row) {
                writeln!(w, "{i},{x},{v:.12e}")?;
            }
        }
        Ok(())
    }

    pub fn summary_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.summaries())?)
    }
}

pub(crate) fn validate_grid(xs: &[f64]) -> Result<()> {
    let mut prev = f64::NEG_INFINITY;
    for &x in xs {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::invalid("grid", format!("{x} is outside [0, 1]")));
        }
        if x < prev {
            return Err(Error::invalid("grid", "must be nondecreasing"));
        }
        prev = x;
    }
    Ok(())
}

/// Centered partial sums at the given site counts, scaled by `scale`.
pub fn heights(occ: &[u8], sites: &[usize], rho: f64, scale: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(sites.len());
    let mut count = 0usize;
    let mut j = 0;
    for &m in sites {
        while j < m {
            count += occ[j] as usize;
            j += 1;
        }
        out.push((count as f64 - rho * m as f64) * scale);
    }
    out
}

pub fn height_fluctuation_samples(
    plan: &SimPlan,
    xs: &[f64],
    centering: Centering,
) -> Result<HeightSampleSet> {
    plan.validate()?;
    validate_grid(xs)?;
    let rho = centering.value(&plan.params.abcd());
    let sites: Vec<usize> = xs.iter().map(|&x| site_count(plan.n, x)).collect();
    let scale = 1.0 / (plan.n as f64).sqrt();
    let per_chain: Vec<Result<Vec<Vec<f64>>>> = (0..plan.chains)
        .into_par_iter()
        .map(|c| {
            let mut rows = Vec::with_capacity(plan.chain_samples(c));
            run_chain_with(plan, c, |occ| rows.push(heights(occ, &sites, rho, scale)))?;
            Ok(rows)
        })
        .collect();
    let mut values = Vec::with_capacity(plan.samples);
    let mut chain = Vec::with_capacity(plan.samples);
    for (c, r) in per_chain.into_iter().enumerate() {
        let rows = r?;
        chain.extend(std::iter::repeat_n(c as u32, rows.len()));
        values.extend(rows);
    }
    Ok(HeightSampleSet {
        n: plan.n,
        xs: xs.to_vec(),
        centering,
        centering_value: rho,
        values,
        chain,
    })
}
