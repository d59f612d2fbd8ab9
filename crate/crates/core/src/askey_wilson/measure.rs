use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qseries::{check_q, poch, poch_finite};
use crate::quadrature::Integrator;

/// Generators with `|alpha| <= 1 + ATOM_EPS` produce no atoms.
pub const ATOM_EPS: f64 = 1e-12;

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Parameters `(a, b, c, d, q)` of an Askey-Wilson law. Each of `a..d` is
/// real or belongs to a complex-conjugate pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AwParams {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
    pub q: f64,
}

fn real_ge_one(z: Complex64) -> bool {
    z.im.abs() <= 1e-14 * z.norm().max(1.0) && z.re >= 1.0
}

impl AwParams {
    /// Checked constructor: enforces conjugate pairing and admissibility.
    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64, q: f64) -> Result<Self> {
        let p = AwParams { a, b, c, d, q };
        p.check_structure()?;
        if let Some(bad) = p.admissibility_violation() {
            return Err(Error::invalid(
                "askey-wilson parameters",
                format!("{bad} lies in [1, inf)"),
            ));
        }
        Ok(p)
    }

    pub fn real(a: f64, b: f64, c: f64, d: f64, q: f64) -> Result<Self> {
        let z = |x: f64| Complex64::new(x, 0.0);
        Self::new(z(a), z(b), z(c), z(d), q)
    }

    /// Skips the admissibility test. Transition laws out of an atom have
    /// `ad = q^{-j}` and are legitimate degenerate (purely atomic) laws.
    pub(crate) fn unchecked(
        a: Complex64,
        b: Complex64,
        c: Complex64,
        d: Complex64,
        q: f64,
    ) -> Self {
        AwParams { a, b, c, d, q }
    }

    pub fn as_array(&self) -> [Complex64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn permuted(&self, perm: [usize; 4]) -> AwParams {
        let v = self.as_array();
        AwParams {
            a: v[perm[0]],
            b: v[perm[1]],
            c: v[perm[2]],
            d: v[perm[3]],
            q: self.q,
        }
    }

    fn check_structure(&self) -> Result<()> {
        check_q(self.q)?;
        let v = self.as_array();
        if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invalid(
                "askey-wilson parameters",
                "non-finite value",
            ));
        }
        let mut used = [false; 4];
        for i in 0..4 {
            if v[i].im == 0.0 || used[i] {
                continue;
            }
            let partner = (0..4).find(|&j| {
                j != i && !used[j] && (v[j] - v[i].conj()).norm() <= 1e-14 * v[i].norm().max(1.0)
            });
            match partner {
                Some(j) => {
                    used[i] = true;
                    used[j] = true;
                }
                None => {
                    return Err(Error::invalid(
                        "askey-wilson parameters",
                        "complex values must come in conjugate pairs",
                    ))
                }
            }
        }
        Ok(())
    }

    /// First product among `ac, ad, bc, bd, qac, qad, qbc, qbd, abcd, qabcd`
    /// that lies in `[1, inf)`, if any.
    pub fn admissibility_violation(&self) -> Option<&'static str> {
        let (a, b, c, d, q) = (self.a, self.b, self.c, self.d, self.q);
        let checks: [(&'static str, Complex64); 10] = [
            ("ac", a * c),
            ("ad", a * d),
            ("bc", b * c),
            ("bd", b * d),
            ("qac", a * c * q),
            ("qad", a * d * q),
            ("qbc", b * c * q),
            ("qbd", b * d * q),
            ("abcd", a * b * c * d),
            ("qabcd", a * b * c * d * q),
        ];
        checks
            .iter()
            .find(|(_, z)| real_ge_one(*z))
            .map(|(n, _)| *n)
    }
}

/// A point mass of an Askey-Wilson law. `generator` is the index (0..4) of
/// the parameter producing it and `j` its position in that family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub y: f64,
    /// `alpha q^j`, so that `y = (alpha q^j + 1 / (alpha q^j)) / 2`.
    pub root: f64,
    pub mass: f64,
    pub generator: usize,
    pub j: usize,
}

/// Atoms of `nu(dy; a, b, c, d, q)` with their masses.
pub fn aw_atoms(p: &AwParams) -> Result<Vec<Atom>> {
    let v = p.as_array();
    let q = p.q;
    let mut out = Vec::new();
    for (g, &alpha) in v.iter().enumerate() {
        if alpha.im != 0.0 || alpha.re.abs() <= 1.0 + ATOM_EPS {
            continue;
        }
        let a = alpha.re;
        let others: Vec<Complex64> = (0..4).filter(|&i| i != g).map(|i| v[i]).collect();
        let (b, c, d) = (others[0], others[1], others[2]);
        let az = Complex64::new(a, 0.0);
        let num = poch(ONE / (az * az), q) * poch(b * c, q) * poch(b * d, q) * poch(c * d, q);
        let den = poch(b / az, q) * poch(c / az, q) * poch(d / az, q) * poch(az * b * c * d, q);
        let p0 = (num / den).re;
        let mut j = 0;
        let mut aqj = a;
        while aqj.abs() > 1.0 + ATOM_EPS {
            let y = 0.5 * (aqj + 1.0 / aqj);
            let mass = if j == 0 {
                p0
            } else if p0 == 0.0 {
                0.0
            } else {
                atom_ratio(az, b, c, d, q, j) * p0
            };
            out.push(Atom {
                y,
                root: aqj,
                mass: clean_mass(mass),
                generator: g,
                j,
            });
            if q == 0.0 {
                break;
            }
            j += 1;
            aqj *= q;
        }
    }
    Ok(out)
}

fn clean_mass(m: f64) -> f64 {
    if m < 0.0 && m > -1e-13 {
        0.0
    } else {
        m
    }
}

// p(y_j) / p(y_0) for j >= 1.
// (q a / x; q)_j x^j = prod_k (x - a q^{k+1}) stays finite at x = 0, so the
// ratio is evaluated in that form.
fn atom_ratio(a: Complex64, b: Complex64, c: Complex64, d: Complex64, q: f64, j: usize) -> f64 {
    let qz = Complex64::new(q, 0.0);
    let num = poch_finite(a * a, q, j)
        * poch_finite(a * b, q, j)
        * poch_finite(a * c, q, j)
        * poch_finite(a * d, q, j)
        * (ONE - a * a * q.powi(2 * j as i32));
    let shifted =
        |x: Complex64| -> Complex64 { (1..=j).map(|k| x - a * q.powi(k as i32)).product() };
    let den = poch_finite(qz, q, j) * shifted(b) * shifted(c) * shifted(d) * (ONE - a * a);
    (num / den * (qz / a).powi(j as i32)).re
}

/// Mixed law `f(y) dy + sum_j p_j delta_{y_j}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AwMeasure {
    pub params: AwParams,
    pub atoms: Vec<Atom>,
    /// `K / (2 pi)` with `K = (q, ab, ac, ad, bc, bd, cd; q) / (abcd; q)`;
    /// zero for a purely atomic law.
    pub density_scale: f64,
    /// Angles of complex parameters, where the density in theta may peak.
    peaks: Vec<f64>,
}

/// Integration accuracy used by [`AwMeasure::expect`].
pub fn default_integrator() -> Integrator {
    Integrator::new(1e-13, 1e-11).with_max_intervals(4000)
}

impl AwMeasure {
    pub fn new(params: AwParams) -> Result<Self> {
        let atoms = aw_atoms(&params)?;
        let (a, b, c, d, q) = (params.a, params.b, params.c, params.d, params.q);
        let num = poch(Complex64::new(q, 0.0), q)
            * poch(a * b, q)
            * poch(a * c, q)
            * poch(a * d, q)
            * poch(b * c, q)
            * poch(b * d, q)
            * poch(c * d, q);
        let k = (num / poch(a * b * c * d, q)).re;
        let peaks = params
            .as_array()
            .iter()
            .filter(|z| z.im != 0.0)
            .map(|z| z.arg().abs())
            .collect();
        Ok(AwMeasure {
            params,
            atoms,
            density_scale: (k / (2.0 * PI)).max(0.0),
            peaks,
        })
    }

    /// Unit mass at `(root + 1 / root) / 2`.
    pub fn point_mass(params: AwParams, root: f64) -> Self {
        AwMeasure {
            params,
            atoms: vec![Atom {
                y: 0.5 * (root + 1.0 / root),
                root,
                mass: 1.0,
                generator: 0,
                j: 0,
            }],
            density_scale: 0.0,
            peaks: Vec::new(),
        }
    }

    pub fn has_density(&self) -> bool {
        self.density_scale > 0.0
    }

    /// `f(cos theta) sin theta`, the density of `theta` on `[0, pi]`.
    pub fn density_theta(&self, theta: f64) -> f64 {
        if self.density_scale == 0.0 {
            return 0.0;
        }
        let p = &self.params;
        let q = p.q;
        let e = Complex64::from_polar(1.0, theta);
        let top = poch(e * e, q).norm_sqr();
        let bottom = poch(p.a * e, q).norm_sqr()
            * poch(p.b * e, q).norm_sqr()
            * poch(p.c * e, q).norm_sqr()
            * poch(p.d * e, q).norm_sqr();
        if top == 0.0 {
            return 0.0;
        }
        self.density_scale * top / bottom
    }

    /// Density `f(y)` of the continuous part; zero outside `(-1, 1)`.
    pub fn density(&self, y: f64) -> f64 {
        if !(y > -1.0 && y < 1.0) {
            return 0.0;
        }
        let theta = y.acos();
        self.density_theta(theta) / theta.sin()
    }

    pub fn atom_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    pub(crate) fn breaks(&self, extra: &[f64]) -> Vec<f64> {
        let mut b: Vec<f64> = vec![0.0, PI];
        b.extend(self.peaks.iter().copied().filter(|&t| t > 0.0 && t < PI));
        b.extend(extra.iter().copied().filter(|&t| t > 0.0 && t < PI));
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    /// `int g(theta) f(cos theta) sin theta dtheta` over `[0, pi]`.
    pub fn integrate_continuous<F: FnMut(f64, f64) -> f64>(
        &self,
        mut g: F,
        extra_breaks: &[f64],
        integ: &Integrator,
    ) -> f64 {
        if !self.has_density() {
            return 0.0;
        }
        integ
            .integrate_breaks(
                |th| {
                    let w = self.density_theta(th);
                    if w == 0.0 {
                        0.0
                    } else {
                        w * g(th.cos(), th)
                    }
                },
                &self.breaks(extra_breaks),
            )
            .value
    }

    pub fn continuous_mass(&self) -> f64 {
        self.integrate_continuous(|_, _| 1.0, &[], &default_integrator())
    }

    pub fn total_mass(&self) -> f64 {
        self.continuous_mass() + self.atom_mass()
    }

    /// `int f d nu`.
    pub fn expect<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        let atoms: f64 = self.atoms.iter().map(|a| a.mass * f(a.y)).sum();
        atoms + self.integrate_continuous(|y, _| f(y), &[], &default_integrator())
    }

    /// CSV `y,density` on `points` interior points of `[-1, 1]`.
    pub fn write_density_csv<W: Write>(&self, mut w: W, points: usize) -> Result<()> {
        writeln!(w, "y,density")?;
        for i in 1..=points {
            let y = -1.0 + 2.0 * i as f64 / (points + 1) as f64;
            writeln!(w, "{y},{:.12e}", self.density(y))?;
        }
        Ok(())
    }

    pub fn atoms_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.atoms)?)
    }
}

/// `f(y; a, b, c, d, q)`.
pub fn aw_density(y: f64, p: &AwParams) -> Result<f64> {
    Ok(AwMeasure::new(*p)?.density(y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn semicircle() {
        let m = AwMeasure::new(AwParams::real(0.0, 0.0, 0.0, 0.0, 0.0).unwrap()).unwrap();
        assert!((m.density(0.0) - 2.0 / PI).abs() < 1e-15);
        for &y in &[-0.7f64, 0.2, 0.9] {
            let semi = 2.0 * (1.0 - y * y).sqrt() / PI;
            assert!((m.density(y) - semi).abs() < 1e-14);
        }
        assert_eq!(m.density(1.5), 0.0);
        assert_eq!(m.density(-1.0), 0.0);
        assert!(m.atoms.is_empty());
        assert!((m.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn no_atoms_inside_unit_disk() {
        let p = AwParams::real(0.9, -0.5, 0.3, -0.99, 0.5).unwrap();
        assert!(aw_atoms(&p).unwrap().is_empty());
    }

    #[test]
    fn total_mass_with_atom() {
        let p = AwParams::real(1.6, -0.3, 0.2, -0.1, 0.5).unwrap();
        let m = AwMeasure::new(p).unwrap();
        assert_eq!(m.atoms.len(), 1);
        assert!((m.atoms[0].y - 0.5 * (1.6 + 1.0 / 1.6)).abs() < 1e-15);
        assert!((m.total_mass() - 1.0).abs() < 1e-8, "{}", m.total_mass());
    }

    #[test]
    fn higher_atoms() {
        let p = AwParams::real(3.0, -0.2, 0.2, -0.1, 0.5).unwrap();
        let atoms = aw_atoms(&p).unwrap();
        // 3, 1.5 exceed one; 0.75 does not.
        assert_eq!(atoms.len(), 2);
        let m = AwMeasure::new(p).unwrap();
        assert!((m.total_mass() - 1.0).abs() < 1e-8, "{}", m.total_mass());
    }

    #[test]
    fn higher_atoms_with_zero_parameters() {
        // The zero-parameter masses are the limits of the general formula.
        for (b, c) in [(0.0, 0.2), (-0.3, 0.0), (0.0, 0.0)] {
            let p = AwParams::real(3.0, b, c, 0.0, 0.5).unwrap();
            let atoms = aw_atoms(&p).unwrap();
            assert_eq!(atoms.len(), 2);
            let near = AwParams::real(3.0, b + 1e-7, c - 1e-7, -1e-7, 0.5).unwrap();
            let near = aw_atoms(&near).unwrap();
            for (x, y) in atoms.iter().zip(&near) {
                assert!((x.mass - y.mass).abs() < 1e-5, "{} vs {}", x.mass, y.mass);
            }
            let m = AwMeasure::new(p).unwrap();
            assert!((m.total_mass() - 1.0).abs() < 1e-8, "{}", m.total_mass());
        }
    }

    #[test]
    fn rejects_inadmissible_and_unpaired() {
        assert!(AwParams::real(2.0, 0.0, 0.6, 0.0, 0.0).is_err());
        assert!(AwParams::real(0.5, 0.0, 0.6, 0.0, 1.0).is_err());
        let z = Complex64::new(0.3, 0.4);
        assert!(AwParams::new(z, c(0.1), c(0.2), c(0.0), 0.3).is_err());
        assert!(AwParams::new(z, c(0.1), z.conj(), c(0.0), 0.3).is_ok());
    }

    #[test]
    fn complex_pair_normalises() {
        let z = Complex64::from_polar(0.8, 1.1);
        let p = AwParams::new(c(1.4), c(-0.3), z, z.conj(), 0.4).unwrap();
        let m = AwMeasure::new(p).unwrap();
        assert!((m.total_mass() - 1.0).abs() < 1e-9, "{}", m.total_mass());
    }

    #[test]
    fn dumps() {
        let m = AwMeasure::new(AwParams::real(1.6, -0.3, 0.2, -0.1, 0.5).unwrap()).unwrap();
        let mut buf = Vec::new();
        m.write_density_csv(&mut buf, 9).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 10);
        let js: serde_json::Value = serde_json::from_str(&m.atoms_json().unwrap()).unwrap();
        assert_eq!(js.as_array().unwrap().len(), 1);
    }

    fn param() -> impl Strategy<Value = f64> {
        prop_oneof![-0.95f64..0.95, 1.05f64..2.5, -2.5f64..-1.05]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]
        #[test]
        fn normalisation(a in param(), b in -0.9f64..0.9, c_ in -0.9f64..0.9,
                         d in -0.9f64..0.9, q in prop_oneof![Just(0.0), 0.0f64..0.7]) {
            // The positivity region also needs ab, cd outside [1, inf); the
            // process laws always have ab <= 0 and cd < 1.
            prop_assume!(a * b < 1.0 && c_ * d < 1.0);
            let p = AwParams::real(a, b, c_, d, q);
            prop_assume!(p.is_ok());
            let m = AwMeasure::new(p.unwrap());
            prop_assume!(m.is_ok());
            let m = m.unwrap();
            prop_assert!((m.total_mass() - 1.0).abs() <= 1e-7, "mass {}", m.total_mass());
        }

        #[test]
        fn permutation_invariance(a in -0.95f64..0.95, b in -0.95f64..0.95, r in 0.0f64..0.95,
                                  phi in 0.0f64..3.1, q in 0.0f64..0.8, y in -0.99f64..0.99,
                                  perm in Just([0usize, 1, 2, 3]).prop_shuffle()) {
            let z = Complex64::from_polar(r, phi);
            let p = AwParams::new(c(a), c(b), z, z.conj(), q).unwrap();
            let base = AwMeasure::new(p).unwrap().density(y);
            let other = AwMeasure::new(p.permuted(perm)).unwrap().density(y);
            prop_assert!((base - other).abs() <= 1e-10 * base.abs().max(1e-300));
        }
    }
}
