//! q-Pochhammer symbols `(a; q)_n = prod_{j<n} (1 - a q^j)` over complex `a`.
//!
//! Every Askey-Wilson density and atom mass is a ratio of these products, so the
//! infinite-order variant carries an explicit truncation bound: the product is
//! cut at the first `J` with `|a| q^J / (1 - q) < tol / 2`, which keeps the
//! dropped tail within a multiplicative factor `tol` of one.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest supported `q`. Truncation length grows like `1 / (1 - q)`.
pub const Q_MAX: f64 = 0.999;

/// Truncation tolerance used by the internal fast paths.
pub const DEFAULT_TOL: f64 = 1e-16;

/// Order of a q-Pochhammer symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    Finite(usize),
    Infinite,
}

/// A single q-Pochhammer evaluation request.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QPochQuery {
    pub a: Complex64,
    pub q: f64,
    pub order: Order,
}

impl QPochQuery {
    pub fn eval(&self, tol: f64) -> Result<Complex64> {
        match self.order {
            Order::Finite(n) => qpoch_finite(self.a, self.q, n),
            Order::Infinite => qpoch_infinite(self.a, self.q, tol),
        }
    }
}

pub(crate) fn check_q(q: f64) -> Result<()> {
    if !(0.0..=Q_MAX).contains(&q) {
        return Err(Error::invalid("q", format!("{q} is outside [0, {Q_MAX}]")));
    }
    Ok(())
}

/// `(a; q)_n`; the empty product `n = 0` is one.
pub fn qpoch_finite(a: Complex64, q: f64, n: usize) -> Result<Complex64> {
    check_q(q)?;
    Ok(poch_finite(a, q, n))
}

/// `(a; q)_inf` truncated so the neglected tail is a factor within `tol` of one.
pub fn qpoch_infinite(a: Complex64, q: f64, tol: f64) -> Result<Complex64> {
    check_q(q)?;
    if !(tol > 0.0) {
        return Err(Error::invalid("tol", format!("{tol} must be positive")));
    }
    Ok(poch_inf_tol(a, q, tol))
}

/// `(a_1, ..., a_k; q)_n`, the product of the individual symbols.
pub fn qpoch_product(args: &[Complex64], q: f64, order: Order, tol: f64) -> Result<Complex64> {
    args.iter().try_fold(Complex64::new(1.0, 0.0), |acc, &a| {
        let v = QPochQuery { a, q, order }.eval(tol)?;
        Ok(acc * v)
    })
}

/// Number of factors kept by the infinite-product truncation rule.
pub fn truncation_length(a_abs: f64, q: f64, tol: f64) -> usize {
    if a_abs == 0.0 {
        return 0;
    }
    if q == 0.0 {
        return 1;
    }
    let mut j = 0;
    let mut mag = a_abs;
    while mag / (1.0 - q) >= tol / 2.0 {
        j += 1;
        mag *= q;
    }
    j
}

pub(crate) fn poch_finite(a: Complex64, q: f64, n: usize) -> Complex64 {
    let mut acc = Complex64::new(1.0, 0.0);
    let mut term = a;
    for _ in 0..n {
        acc *= Complex64::new(1.0, 0.0) - term;
        term *= q;
    }
    acc
}

pub(crate) fn poch_inf_tol(a: Complex64, q: f64, tol: f64) -> Complex64 {
    if q == 0.0 {
        return Complex64::new(1.0, 0.0) - a;
    }
    let n = truncation_length(a.norm(), q, tol);
    poch_finite(a, q, n)
}

/// `(a; q)_inf` at machine precision.
#[inline]
pub(crate) fn poch(a: Complex64, q: f64) -> Complex64 {
    poch_inf_tol(a, q, DEFAULT_TOL)
}

/// Real-argument `(a; q)_inf` at machine precision.
pub(crate) fn poch_re(a: f64, q: f64) -> f64 {
    if q == 0.0 {
        return 1.0 - a;
    }
    let mut acc = 1.0;
    let mut term = a;
    while term.abs() / (1.0 - q) >= DEFAULT_TOL / 2.0 {
        acc *= 1.0 - term;
        term *= q;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn finite_examples() {
        assert_eq!(qpoch_finite(c(0.7), 0.3, 0).unwrap(), c(1.0));
        assert_eq!(qpoch_finite(c(0.5), 0.0, 3).unwrap(), c(0.5));
        assert_eq!(qpoch_finite(c(2.0), 0.5, 2).unwrap(), c(0.0));
    }

    #[test]
    fn infinite_examples() {
        assert_eq!(qpoch_infinite(c(0.0), 0.9, 1e-12).unwrap(), c(1.0));
        assert_eq!(qpoch_infinite(c(0.3), 0.0, 1e-12).unwrap(), c(0.7));

        // Partial products of (1/2; 1/2), run until they stop moving.
        let mut oracle = 1.0f64;
        let mut prev = f64::NAN;
        let mut j = 0;
        while (oracle - prev).abs() >= 1e-13 || j < 3 {
            prev = oracle;
            oracle *= 1.0 - 0.5 * 0.5f64.powi(j);
            j += 1;
        }
        let v = qpoch_infinite(c(0.5), 0.5, 1e-12).unwrap();
        assert!((v.re - oracle).abs() < 1e-12);
        assert!((v.re - 0.288788).abs() < 1e-6);
        assert_eq!(v.im, 0.0);
    }

    #[test]
    fn rejects_bad_domain() {
        assert!(qpoch_finite(c(0.1), 1.0, 2).is_err());
        assert!(qpoch_finite(c(0.1), -0.1, 2).is_err());
        assert!(qpoch_infinite(c(0.1), 0.9995, 1e-12).is_err());
        assert!(qpoch_infinite(c(0.1), 0.5, 0.0).is_err());
        assert!(qpoch_infinite(c(0.1), 0.5, -1.0).is_err());
    }

    #[test]
    fn product_examples() {
        assert_eq!(
            qpoch_product(&[], 0.4, Order::Infinite, 1e-12).unwrap(),
            c(1.0)
        );
        let single = qpoch_product(&[c(0.5)], 0.5, Order::Infinite, 1e-12).unwrap();
        assert_eq!(single, qpoch_infinite(c(0.5), 0.5, 1e-12).unwrap());

        let a = Complex64::from_polar(0.8, 1.1);
        let pair = qpoch_product(&[a, a.conj()], 0.6, Order::Infinite, 1e-14).unwrap();
        let one = qpoch_infinite(a, 0.6, 1e-14).unwrap();
        assert!(pair.im.abs() < 1e-14);
        assert!(pair.re >= 0.0);
        assert!((pair.re - one.norm_sqr()).abs() < 1e-13);
    }

    #[test]
    fn real_fast_path_matches_complex() {
        for &(a, q) in &[(0.3, 0.5), (-0.9, 0.9), (1.7, 0.2), (0.5, 0.0)] {
            let r = poch_re(a, q);
            let z = poch(c(a), q);
            assert!((r - z.re).abs() <= 1e-14 * r.abs().max(1.0));
        }
    }

    #[test]
    fn truncation_moves_less_than_tol() {
        let tol = 1e-10;
        for &(a, q) in &[(0.9, 0.9), (1.9, 0.95), (0.2, 0.5), (-1.5, 0.8)] {
            let j = truncation_length(f64::abs(a), q, tol);
            let base = poch_finite(c(a), q, j);
            let longer = poch_finite(c(a), q, j + 200);
            assert!((longer - base).norm() <= tol * base.norm().max(1e-300));
        }
    }

    proptest! {
        #[test]
        fn conjugate_symmetry(r in 0.0f64..2.0, th in -3.2f64..3.2, q in 0.0f64..0.95) {
            let a = Complex64::from_polar(r, th);
            let v = qpoch_infinite(a, q, 1e-14).unwrap();
            let w = qpoch_infinite(a.conj(), q, 1e-14).unwrap();
            prop_assert!((w - v.conj()).norm() <= 1e-14 * v.norm().max(1.0));
        }

        #[test]
        fn shift_identity(r in 0.0f64..2.0, th in -3.2f64..3.2, q in 0.0f64..0.95) {
            let tol = 1e-12;
            let a = Complex64::from_polar(r, th);
            let lhs = qpoch_infinite(a, q, tol).unwrap();
            let rhs = (Complex64::new(1.0, 0.0) - a) * qpoch_infinite(a * q, q, tol).unwrap();
            prop_assert!((lhs - rhs).norm() <= tol * lhs.norm().max(1.0));
        }
    }
}
