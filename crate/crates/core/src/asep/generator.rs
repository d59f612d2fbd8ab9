use crate::error::{Error, Result};

use super::params::AsepParams;

/// Largest lattice accepted by [`build_generator`] unless overridden.
pub const DEFAULT_N_MAX: usize = 16;

/// Sparse ASEP generator on `2^n` configurations.
///
/// Configuration `s` has site `j` (1-based) occupied iff bit `j - 1` is set.
/// Off-diagonal rates are stored row-wise; the diagonal is kept separately.
#[derive(Debug, Clone)]
pub struct RateMatrix {
    pub n: usize,
    pub params: AsepParams,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
    diag: Vec<f64>,
}

impl RateMatrix {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Off-diagonal `(target, rate)` pairs out of `state`.
    pub fn row(&self, state: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[state]..self.row_ptr[state + 1];
        self.cols[r.clone()]
            .iter()
            .zip(&self.vals[r])
            .map(|(&c, &v)| (c as usize, v))
    }

    pub fn diag(&self, state: usize) -> f64 {
        self.diag[state]
    }

    /// `Q[i][j]`, mainly for tests.
    pub fn rate(&self, from: usize, to: usize) -> f64 {
        if from == to {
            return self.diag[from];
        }
        self.row(from)
            .filter(|&(c, _)| c == to)
            .map(|(_, v)| v)
            .sum()
    }

    pub fn row_sum(&self, state: usize) -> f64 {
        self.row(state).map(|(_, v)| v).sum::<f64>() + self.diag[state]
    }

    /// Row vector times generator, `(pi Q)_j`.
    pub fn left_mul(&self, pi: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = pi.iter().zip(&self.diag).map(|(p, d)| p * d).collect();
        for (s, &p) in pi.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for (t, v) in self.row(s) {
                out[t] += p * v;
            }
        }
        out
    }

    /// Generator times column vector, `(Q x)_i`.
    pub fn right_mul(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim())
            .map(|s| self.row(s).map(|(t, v)| v * x[t]).sum::<f64>() + self.diag[s] * x[s])
            .collect()
    }
}

pub fn build_generator(n: usize, p: &AsepParams) -> Result<RateMatrix> {
    build_generator_with_limit(n, p, DEFAULT_N_MAX)
}

pub fn build_generator_with_limit(n: usize, p: &AsepParams, n_max: usize) -> Result<RateMatrix> {
    p.validate()?;
    if n == 0 {
        return Err(Error::invalid("n", "need at least one site"));
    }
    if n > n_max {
        return Err(Error::invalid(
            "n",
            format!("{n} exceeds the limit {n_max}"),
        ));
    }
    if n > 31 {
        return Err(Error::invalid("n", "state index overflow"));
    }
    let dim = 1usize << n;
    let mut row_ptr = Vec::with_capacity(dim + 1);
    let mut cols = Vec::with_capacity(dim * 3);
    let mut vals = Vec::with_capacity(dim * 3);
    let mut diag = Vec::with_capacity(dim);
    let mut row: Vec<(usize, f64)> = Vec::with_capacity(n + 2);
    row_ptr.push(0);
    for s in 0..dim {
        row.clear();
        let mut push = |t: usize, r: f64| {
            if r > 0.0 {
                match row.iter_mut().find(|(c, _)| *c == t) {
                    Some(e) => e.1 += r,
                    None => row.push((t, r)),
                }
            }
        };
        for k in 0..n - 1 {
            let here = s >> k & 1;
            let next = s >> (k + 1) & 1;
            let swapped = s ^ (0b11 << k);
            if here == 1 && next == 0 {
                push(swapped, 1.0);
            } else if here == 0 && next == 1 {
                push(swapped, p.q);
            }
        }
        if s & 1 == 0 {
            push(s | 1, p.alpha);
        } else {
            push(s & !1, p.gamma);
        }
        let last = 1 << (n - 1);
        if s & last == 0 {
            push(s | last, p.delta);
        } else {
            push(s & !last, p.beta);
        }
        row.sort_by_key(|e| e.0);
        let out: f64 = row.iter().map(|e| e.1).sum();
        for &(t, r) in &row {
            cols.push(t as u32);
            vals.push(r);
        }
        diag.push(-out);
        row_ptr.push(cols.len());
    }
    Ok(RateMatrix {
        n,
        params: *p,
        row_ptr,
        cols,
        vals,
        diag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn one_site() {
        let p = AsepParams::new(0.3, 0.7, 0.2, 0.4, 0.5).unwrap();
        let q = build_generator(1, &p).unwrap();
        assert_eq!(q.dim(), 2);
        assert!((q.rate(0, 1) - 0.7).abs() < 1e-15);
        assert!((q.rate(1, 0) - 0.9).abs() < 1e-15);
    }

    #[test]
    fn two_sites_from_10() {
        // Site 1 occupied, site 2 empty: bit pattern 0b01.
        let p = AsepParams::new(0.3, 0.7, 0.2, 0.4, 0.5).unwrap();
        let q = build_generator(2, &p).unwrap();
        let s = 0b01;
        assert_eq!(q.rate(s, 0b10), 1.0);
        assert_eq!(q.rate(s, 0b00), 0.2);
        assert_eq!(q.rate(s, 0b11), 0.4);
        assert_eq!(q.row(s).count(), 3);
        // Site 2 occupied only: left hop at rate q, exit at beta, entry at alpha.
        assert_eq!(q.rate(0b10, 0b01), 0.5);
        assert_eq!(q.rate(0b10, 0b00), 0.7);
        assert_eq!(q.rate(0b10, 0b11), 0.3);
    }

    #[test]
    fn size_guard() {
        let p = AsepParams::new(1.0, 1.0, 0.0, 0.0, 0.0).unwrap();
        assert!(build_generator(17, &p).is_err());
        assert!(build_generator(0, &p).is_err());
        assert!(build_generator_with_limit(5, &p, 4).is_err());
    }

    proptest! {
        #[test]
        fn rows_sum_to_zero(n in 1usize..8, a in 0.01f64..3.0, b in 0.01f64..3.0,
                            g in 0.0f64..2.0, d in 0.0f64..2.0, q in 0.0f64..0.9) {
            let p = AsepParams::new(a, b, g, d, q).unwrap();
            let m = build_generator(n, &p).unwrap();
            for s in 0..m.dim() {
                prop_assert_eq!(m.row_sum(s), 0.0);
                for (t, v) in m.row(s) {
                    prop_assert!(v > 0.0);
                    prop_assert!(t != s);
                }
            }
        }
    }
}
