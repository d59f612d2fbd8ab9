use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::generator::RateMatrix;
use super::params::AsepParams;

/// Largest lattice solved by dense LU; bigger ones go through GMRES.
pub const DENSE_N_MAX: usize = 10;

/// Residual above which a stationary solve is reported as failed.
pub const RESIDUAL_LIMIT: f64 = 1e-8;

/// Exact stationary law over the `2^n` configurations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StationaryTable {
    pub n: usize,
    pub params: AsepParams,
    pub probs: Vec<f64>,
    /// `max_j |(pi Q)_j|` of the returned vector.
    pub residual: f64,
}

impl StationaryTable {
    pub fn prob(&self, state: usize) -> f64 {
        self.probs[state]
    }

    /// Occupation of site `j` (1-based) in `state`.
    pub fn occupied(state: usize, j: usize) -> bool {
        state >> (j - 1) & 1 == 1
    }

    /// Configuration as a string of 0/1, site 1 first.
    pub fn bits(&self, state: usize) -> String {
        (1..=self.n)
            .map(|j| if Self::occupied(state, j) { '1' } else { '0' })
            .collect()
    }

    /// `P(tau_j = 1)` for j = 1..n.
    pub fn density_profile(&self) -> Vec<f64> {
        let mut rho = vec![0.0; self.n];
        for (s, &p) in self.probs.iter().enumerate() {
            for (j, r) in rho.iter_mut().enumerate() {
                if s >> j & 1 == 1 {
                    *r += p;
                }
            }
        }
        rho
    }

    /// Law of `(1 - tau_{n - j + 1})_j`, the particle-hole image.
    pub fn reversed_complement(&self) -> Vec<f64> {
        let dim = self.probs.len();
        let mut out = vec![0.0; dim];
        for (s, &p) in self.probs.iter().enumerate() {
            let mut t = 0;
            for j in 0..self.n {
                if s >> j & 1 == 0 {
                    t |= 1 << (self.n - 1 - j);
                }
            }
            out[t] = p;
        }
        out
    }

    /// CSV with columns `config_bits,probability`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "config_bits,probability")?;
        for (s, p) in self.probs.iter().enumerate() {
            writeln!(w, "{},{:.17e}", self.bits(s), p)?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Solves `pi Q = 0`, `sum pi = 1` with one balance equation replaced by the
/// normalisation.
pub fn stationary_exact(q: &RateMatrix) -> Result<StationaryTable> {
    let mut pi = if q.n <= DENSE_N_MAX {
        solve_dense(q)?
    } else {
        solve_gmres(q)?
    };
    for p in pi.iter_mut() {
        if *p < 0.0 {
            *p = 0.0;
        }
    }
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|p| *p /= total);
    let residual = max_abs(&q.left_mul(&pi));
    if !(residual <= RESIDUAL_LIMIT) {
        return Err(Error::NotConverged {
            what: "stationary solve",
            residual,
        });
    }
    Ok(StationaryTable {
        n: q.n,
        params: q.params,
        probs: pi,
        residual,
    })
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn solve_dense(q: &RateMatrix) -> Result<Vec<f64>> {
    let dim = q.dim();
    // Row j of Q^T holds the balance equation for state j.
    let mut m = DMatrix::<f64>::zeros(dim, dim);
    for s in 0..dim {
        m[(s, s)] = q.diag(s);
        for (t, v) in q.row(s) {
            m[(t, s)] += v;
        }
    }
    for c in 0..dim {
        m[(0, c)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(dim);
    rhs[0] = 1.0;
    let x = m.lu().solve(&rhs).ok_or(Error::NotConverged {
        what: "dense stationary solve",
        residual: f64::INFINITY,
    })?;
    Ok(x.iter().copied().collect())
}

// A x with A = Q^T whose first row is replaced by all ones.
fn apply_system(q: &RateMatrix, x: &[f64]) -> Vec<f64> {
    let mut y = q.left_mul(x);
    y[0] = x.iter().sum();
    y
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Restarted GMRES with a right Jacobi preconditioner.
fn solve_gmres(q: &RateMatrix) -> Result<Vec<f64>> {
    const RESTART: usize = 80;
    const MAX_CYCLES: usize = 400;
    const REL_TOL: f64 = 1e-14;
    let dim = q.dim();
    let mut inv_diag: Vec<f64> = (0..dim).map(|s| 1.0 / q.diag(s)).collect();
    inv_diag[0] = 1.0;
    let mut b = vec![0.0; dim];
    b[0] = 1.0;
    let mut x = vec![1.0 / dim as f64; dim];

    let mut last = f64::INFINITY;
    for _ in 0..MAX_CYCLES {
        let ax = apply_system(q, &x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let beta = norm(&r);
        last = beta;
        if beta <= REL_TOL {
            return Ok(x);
        }
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|x| x / beta).collect()];
        let mut h = vec![vec![0.0; RESTART]; RESTART + 1];
        let mut cs = vec![0.0; RESTART];
        let mut sn = vec![0.0; RESTART];
        let mut g = vec![0.0; RESTART + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..RESTART {
            let z: Vec<f64> = v[k].iter().zip(&inv_diag).map(|(a, d)| a * d).collect();
            let mut w = apply_system(q, &z);
            for (i, vi) in v.iter().enumerate() {
                let hik = dot(&w, vi);
                h[i][k] = hik;
                w.iter_mut().zip(vi).for_each(|(w, v)| *w -= hik * v);
            }
            let hn = norm(&w);
            h[k + 1][k] = hn;
            for i in 0..k {
                let t = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = t;
            }
            let rho = h[k][k].hypot(h[k + 1][k]);
            cs[k] = h[k][k] / rho;
            sn[k] = h[k + 1][k] / rho;
            h[k][k] = rho;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k_used = k + 1;
            if g[k + 1].abs() <= REL_TOL || hn == 0.0 {
                break;
            }
            v.push(w.iter().map(|x| x / hn).collect());
        }
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let s: f64 = (i + 1..k_used).map(|j| h[i][j] * y[j]).sum();
            y[i] = (g[i] - s) / h[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            for ((xi, vi), d) in x.iter_mut().zip(&v[j]).zip(&inv_diag) {
                *xi += yj * vi * d;
            }
        }
    }
    Err(Error::NotConverged {
        what: "GMRES stationary solve",
        residual: last,
    })
}
