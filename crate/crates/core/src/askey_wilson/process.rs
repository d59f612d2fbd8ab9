use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::asep::AbcdParams;
use crate::error::{Error, Result};
use crate::path::{check_increasing, PathSample};
use crate::rng::{component, replica_rng};

use super::measure::{Atom, AwMeasure, AwParams};

/// `AC` within this distance of one is treated as the deterministic boundary.
pub const AC_BOUNDARY_EPS: f64 = 1e-12;

/// Table resolution for marginal laws.
pub const MARGINAL_TABLE_CELLS: usize = 4096;
/// Table resolution for transition laws, rebuilt at every step of a path.
pub const TRANSITION_TABLE_CELLS: usize = 1024;

/// The Askey-Wilson process with parameters `(A, B, C, D, q)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AwProcessSpec {
    pub abcd: AbcdParams,
}

/// Position of the process in a form that keeps full precision near and
/// beyond the edges of `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AwState {
    /// `y = cos theta`, `theta` in `[0, pi]`.
    Angle(f64),
    /// `y = (r + 1/r) / 2` with `|r| > 1`.
    Root(f64),
}

impl AwState {
    pub fn from_y(y: f64) -> AwState {
        if y.abs() < 1.0 {
            AwState::Angle(y.acos())
        } else if y == 1.0 {
            AwState::Angle(0.0)
        } else if y == -1.0 {
            AwState::Angle(PI)
        } else {
            let r = y + y.signum() * (y * y - 1.0).sqrt();
            AwState::Root(r)
        }
    }

    pub fn y(&self) -> f64 {
        match *self {
            AwState::Angle(t) => t.cos(),
            AwState::Root(r) => 0.5 * (r + 1.0 / r),
        }
    }
}

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

impl AwProcessSpec {
    pub fn new(abcd: AbcdParams) -> Result<Self> {
        abcd.validate()?;
        let ac = abcd.a * abcd.c;
        if ac > 1.0 + AC_BOUNDARY_EPS {
            return Err(Error::invalid("A, C", format!("AC = {ac} exceeds 1")));
        }
        Ok(AwProcessSpec { abcd })
    }

    /// `AC = 1`: every marginal is a point mass.
    pub fn is_deterministic(&self) -> bool {
        (self.abcd.a * self.abcd.c - 1.0).abs() <= AC_BOUNDARY_EPS
    }

    /// `(A sqrt t + 1 / (A sqrt t)) / 2`, the value of `Y_t` when `AC = 1`.
    pub fn boundary_trajectory(&self, t: f64) -> f64 {
        let r = self.abcd.a * t.sqrt();
        0.5 * (r + 1.0 / r)
    }

    pub fn marginal_params(&self, t: f64) -> AwParams {
        let p = &self.abcd;
        let st = t.sqrt();
        AwParams::unchecked(re(p.a * st), re(p.b * st), re(p.c / st), re(p.d / st), p.q)
    }

    /// Law of `Y_t`.
    pub fn marginal(&self, t: f64) -> Result<AwMeasure> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::invalid("t", "must be positive"));
        }
        let params = self.marginal_params(t);
        if self.is_deterministic() {
            return Ok(AwMeasure::point_mass(params, self.abcd.a * t.sqrt()));
        }
        let p = &params;
        let checked = AwParams::new(p.a, p.b, p.c, p.d, p.q)?;
        AwMeasure::new(checked)
    }

    /// Law of `Y_t` given `Y_s = y`.
    pub fn transition(&self, s: f64, t: f64, y: f64) -> Result<AwMeasure> {
        self.transition_from(s, t, AwState::from_y(y))
    }

    /// Law of `Y_t` given the state at time `s`.
    pub fn transition_from(&self, s: f64, t: f64, from: AwState) -> Result<AwMeasure> {
        if !(s > 0.0 && s < t && t.is_finite()) {
            return Err(Error::invalid("s, t", "need 0 < s < t"));
        }
        let a = self.abcd.a * t.sqrt();
        if self.is_deterministic() {
            return Ok(AwMeasure::point_mass(self.marginal_params(t), a));
        }
        let b = self.abcd.b * t.sqrt();
        let r = (s / t).sqrt();
        let (c, d) = match from {
            AwState::Angle(th) => {
                let z = Complex64::from_polar(r, th);
                (z, z.conj())
            }
            AwState::Root(x) => (re(r * x), re(r / x)),
        };
        let params = AwParams::unchecked(re(a), re(b), c, d, self.abcd.q);
        if params.admissibility_violation().is_none() {
            return AwMeasure::new(params);
        }
        // Out of an atom of the `a` (or `b`) family with index j the product
        // with `d` equals q^{-j} and the law sits on that family's first
        // j + 1 atoms.
        let AwState::Root(_) = from else {
            return AwMeasure::new(params);
        };
        let (g, root) = if (a * d.re) >= 1.0 - 1e-9 {
            (0, a)
        } else {
            (1, b)
        };
        let prod = root * d.re;
        let q = self.abcd.q;
        let jdeg = if q == 0.0 || prod < 1.0 + 1e-9 {
            0
        } else {
            (prod.ln() / -q.ln()).round() as usize
        };
        if jdeg == 0 {
            return Ok(AwMeasure::point_mass(params, root));
        }
        let mut m = AwMeasure::new(params)?;
        m.atoms.retain(|at| at.generator == g && at.j <= jdeg);
        let total: f64 = m.atoms.iter().map(|at| at.mass).sum();
        for at in &mut m.atoms {
            at.mass /= total;
        }
        m.density_scale = 0.0;
        Ok(m)
    }

    /// `Y` along `times`, one path per call.
    pub fn sampler(&self, times: &[f64]) -> Result<AwPathSampler> {
        check_increasing("times", times, true)?;
        let first = match times.first() {
            Some(&t) => Some(AwSampler::new(&self.marginal(t)?, MARGINAL_TABLE_CELLS)),
            None => None,
        };
        Ok(AwPathSampler {
            spec: *self,
            times: times.to_vec(),
            first,
        })
    }
}

/// Monotone inverse-CDF table of the continuous part in `theta`.
#[derive(Debug, Clone)]
pub struct ThetaTable {
    thetas: Vec<f64>,
    cum: Vec<f64>,
}

impl ThetaTable {
    /// Cells are refined until each carries at most `1 / cells` of the
    /// continuous mass and Simpson's rule on it is stable.
    pub fn build(m: &AwMeasure, cells: usize) -> ThetaTable {
        let f = |th: f64| m.density_theta(th);
        let scale = (1.0 - m.atom_mass()).max(1e-12) / cells as f64;
        let breaks = m.breaks(&[]);
        let mut thetas = vec![0.0];
        let mut cum = vec![0.0];
        for w in breaks.windows(2) {
            let pieces = ((cells as f64 / 8.0) * (w[1] - w[0]) / PI).ceil().max(4.0) as usize;
            let h = (w[1] - w[0]) / pieces as f64;
            for k in 0..pieces {
                let lo = w[0] + k as f64 * h;
                let hi = if k + 1 == pieces { w[1] } else { lo + h };
                let (flo, fmid, fhi) = (f(lo), f(0.5 * (lo + hi)), f(hi));
                refine(&f, lo, hi, flo, fmid, fhi, scale, 0, &mut thetas, &mut cum);
            }
        }
        let total = *cum.last().unwrap();
        if total > 0.0 {
            for c in &mut cum {
                *c /= total;
            }
        }
        ThetaTable { thetas, cum }
    }

    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.len() < 2
    }

    pub fn cdf(&self, theta: f64) -> f64 {
        let k = self.thetas.partition_point(|&t| t <= theta);
        if k == 0 {
            return 0.0;
        }
        if k >= self.thetas.len() {
            return 1.0;
        }
        let (t0, t1) = (self.thetas[k - 1], self.thetas[k]);
        let w = (theta - t0) / (t1 - t0);
        self.cum[k - 1] + w * (self.cum[k] - self.cum[k - 1])
    }

    pub fn quantile(&self, u: f64) -> f64 {
        let k = self
            .cum
            .partition_point(|&c| c < u)
            .clamp(1, self.cum.len() - 1);
        let (c0, c1) = (self.cum[k - 1], self.cum[k]);
        let w = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
        self.thetas[k - 1] + w.clamp(0.0, 1.0) * (self.thetas[k] - self.thetas[k - 1])
    }
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> f64>(
    f: &F,
    lo: f64,
    hi: f64,
    flo: f64,
    fmid: f64,
    fhi: f64,
    scale: f64,
    depth: u32,
    thetas: &mut Vec<f64>,
    cum: &mut Vec<f64>,
) {
    let h = hi - lo;
    let mid = 0.5 * (lo + hi);
    let whole = h / 6.0 * (flo + 4.0 * fmid + fhi);
    let (ql, qr) = (f(0.5 * (lo + mid)), f(0.5 * (mid + hi)));
    let left = h / 12.0 * (flo + 4.0 * ql + fmid);
    let right = h / 12.0 * (fmid + 4.0 * qr + fhi);
    if depth < 40 && (left + right > scale || (left + right - whole).abs() > 1e-3 * scale) {
        refine(f, lo, mid, flo, ql, fmid, scale, depth + 1, thetas, cum);
        refine(f, mid, hi, fmid, qr, fhi, scale, depth + 1, thetas, cum);
        return;
    }
    let last = *cum.last().unwrap();
    thetas.push(mid);
    cum.push(last + left.max(0.0));
    thetas.push(hi);
    cum.push(last + (left + right).max(0.0));
}

/// Draws from one Askey-Wilson law: atoms by direct lookup, the continuous
/// part through a [`ThetaTable`].
#[derive(Debug, Clone)]
pub struct AwSampler {
    atoms: Vec<Atom>,
    atom_weight: f64,
    table: Option<ThetaTable>,
    cont_weight: f64,
}

impl AwSampler {
    pub fn new(m: &AwMeasure, cells: usize) -> AwSampler {
        let atoms: Vec<Atom> = m.atoms.iter().filter(|a| a.mass > 0.0).copied().collect();
        let atom_weight: f64 = atoms.iter().map(|a| a.mass).sum();
        let (table, cont_weight) = if m.has_density() {
            let t = ThetaTable::build(m, cells);
            let w = (1.0 - atom_weight).max(0.0);
            (Some(t), w)
        } else {
            (None, 0.0)
        };
        AwSampler {
            atoms,
            atom_weight,
            table,
            cont_weight,
        }
    }

    pub fn sample_state<R: Rng + ?Sized>(&self, rng: &mut R) -> AwState {
        let total = self.atom_weight + self.cont_weight;
        let mut u = rng.random::<f64>() * total;
        for a in &self.atoms {
            if u < a.mass {
                return AwState::Root(a.root);
            }
            u -= a.mass;
        }
        match &self.table {
            Some(t) => AwState::Angle(t.quantile(rng.random::<f64>())),
            None => AwState::Root(self.atoms.last().expect("empty law").root),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sample_state(rng).y()
    }
}

/// Sequential sampler of `(Y_{t_1}, ..., Y_{t_k})`.
#[derive(Debug, Clone)]
pub struct AwPathSampler {
    spec: AwProcessSpec,
    times: Vec<f64>,
    first: Option<AwSampler>,
}

impl AwPathSampler {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn sample_states<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<AwState>> {
        let mut out = Vec::with_capacity(self.times.len());
        let Some(first) = &self.first else {
            return Ok(out);
        };
        if self.spec.is_deterministic() {
            return Ok(self
                .times
                .iter()
                .map(|&t| AwState::Root(self.spec.abcd.a * t.sqrt()))
                .collect());
        }
        let mut state = first.sample_state(rng);
        out.push(state);
        for w in self.times.windows(2) {
            let m = self.spec.transition_from(w[0], w[1], state)?;
            state = if m.has_density() || m.atoms.len() > 1 {
                AwSampler::new(&m, TRANSITION_TABLE_CELLS).sample_state(rng)
            } else {
                AwState::Root(m.atoms[0].root)
            };
            out.push(state);
        }
        Ok(out)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<PathSample> {
        let values = self.sample_states(rng)?.iter().map(AwState::y).collect();
        Ok(PathSample {
            times: self.times.clone(),
            values,
        })
    }
}

/// One seeded path of `Y` on `times`.
pub fn aw_sample_path(spec: &AwProcessSpec, times: &[f64], seed: u64) -> Result<PathSample> {
    let mut rng = replica_rng(seed, 0, component::AW_PATH);
    spec.sampler(times)?.sample(&mut rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::Integrator;
    use crate::stats;

    fn spec(a: f64, b: f64, c: f64, d: f64, q: f64) -> AwProcessSpec {
        AwProcessSpec::new(AbcdParams::new(a, b, c, d, q).unwrap()).unwrap()
    }

    #[test]
    fn marginal_examples() {
        let s = spec(0.5, 0.0, 0.5, 0.0, 0.0);
        assert!(s.marginal(1.0).unwrap().atoms.is_empty());
        assert!(s.marginal(0.0).is_err());

        let s = spec(2.0, -0.1, 0.2, -0.2, 0.3);
        let m = s.marginal(1.0).unwrap();
        let p0 = m
            .atoms
            .iter()
            .find(|a| a.generator == 0 && a.j == 0)
            .unwrap();
        assert!((p0.y - 1.25).abs() < 1e-15);
        let z = |x: f64| Complex64::new(x, 0.0);
        let q = 0.3;
        let (a, b, c, d) = (2.0, -0.1, 0.2, -0.2);
        let poch = |x: f64| crate::qseries::qpoch_infinite(z(x), q, 1e-16).unwrap().re;
        let want = poch(1.0 / (a * a)) * poch(b * c) * poch(b * d) * poch(c * d)
            / (poch(b / a) * poch(c / a) * poch(d / a) * poch(a * b * c * d));
        assert!((p0.mass - want).abs() < 1e-13);
    }

    #[test]
    fn deterministic_boundary() {
        let s = spec(2.0, -0.3, 0.5, -0.1, 0.4);
        assert!(s.is_deterministic());
        let m = s.marginal(3.0).unwrap();
        assert_eq!(m.atoms.len(), 1);
        let r = 2.0 * 3f64.sqrt();
        assert!((m.atoms[0].y - 0.5 * (r + 1.0 / r)).abs() < 1e-15);
        let times = [0.5, 1.0, 2.0, 4.0];
        let path = aw_sample_path(&s, &times, 3).unwrap();
        for (k, &t) in times.iter().enumerate() {
            assert_eq!(path.values[k], s.boundary_trajectory(t));
        }
        assert!(AwProcessSpec::new(AbcdParams::new(2.0, 0.0, 0.6, 0.0, 0.0).unwrap()).is_err());
    }

    #[test]
    fn leading_atom_is_absorbing() {
        let s = spec(2.0, -0.2, 0.2, -0.1, 0.5);
        let y0 = |t: f64| s.boundary_trajectory(t);
        let m = s.transition(1.0, 2.0, y0(1.0)).unwrap();
        assert_eq!(m.atoms.len(), 1);
        assert!((m.atoms[0].y - y0(2.0)).abs() < 1e-12);
        assert_eq!(m.atoms[0].mass, 1.0);
        let sampler = s.sampler(&[1.0, 1.5, 2.0, 3.0]).unwrap();
        let mut rng = replica_rng(11, 0, component::AW_PATH);
        let mut hits = 0;
        for _ in 0..400 {
            let p = sampler.sample(&mut rng).unwrap();
            if (p.values[0] - y0(1.0)).abs() < 1e-12 {
                hits += 1;
                for (k, &t) in p.times.iter().enumerate() {
                    assert!((p.values[k] - y0(t)).abs() < 1e-12);
                }
            }
        }
        assert!(hits > 0);
    }

    #[test]
    fn transition_from_higher_atom_is_discrete_and_normalised() {
        // A sqrt(s) q = 1.5, so the second atom exists at time s = 1.
        let s = spec(3.0, -0.2, 0.2, -0.1, 0.5);
        let m1 = s.marginal(1.0).unwrap();
        let a1 = m1
            .atoms
            .iter()
            .find(|a| a.generator == 0 && a.j == 1)
            .unwrap();
        let m = s.transition_from(1.0, 2.0, AwState::Root(a1.root)).unwrap();
        assert!(!m.has_density());
        assert_eq!(m.atoms.len(), 2);
        assert!(m.atoms.iter().all(|a| a.mass >= 0.0));
        let raw: f64 = {
            let p = &m.params;
            let full = super::super::measure::aw_atoms(p).unwrap();
            full.iter()
                .filter(|a| a.generator == 0 && a.j <= 1)
                .map(|a| a.mass)
                .sum()
        };
        assert!((raw - 1.0).abs() < 1e-9, "raw atom mass {raw}");
    }

    // Integral of p_{s,t}(y, z) pi_s(dy) against the density of pi_t at z.
    fn flow_density(s: &AwProcessSpec, t0: f64, t1: f64, z: f64) -> f64 {
        let m0 = s.marginal(t0).unwrap();
        let integ = Integrator::new(1e-12, 1e-10);
        let mut total: f64 = m0
            .atoms
            .iter()
            .map(|a| {
                a.mass
                    * s.transition_from(t0, t1, AwState::Root(a.root))
                        .unwrap()
                        .density(z)
            })
            .sum();
        total += m0.integrate_continuous(
            |_, th| {
                s.transition_from(t0, t1, AwState::Angle(th))
                    .unwrap()
                    .density(z)
            },
            &[z.acos()],
            &integ,
        );
        total
    }

    #[test]
    fn marginal_flow() {
        for s in [
            spec(0.5, 0.0, 0.5, 0.0, 0.0),
            spec(0.8, -0.3, 0.4, -0.2, 0.5),
            spec(1.6, -0.2, 0.3, 0.0, 0.0),
        ] {
            for &(t0, t1) in &[(0.5, 1.0), (1.0, 2.5)] {
                let mt = s.marginal(t1).unwrap();
                for &z in &[-0.6, 0.1, 0.75] {
                    let got = flow_density(&s, t0, t1, z);
                    let want = mt.density(z);
                    assert!(
                        (got - want).abs() < 1e-6,
                        "{t0}->{t1} z={z}: {got} vs {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn chapman_kolmogorov() {
        let s = spec(0.7, -0.2, 0.5, -0.1, 0.5);
        let integ = Integrator::new(1e-12, 1e-10);
        for &(t0, t1, t2) in &[(0.5, 1.0, 2.0), (1.0, 1.5, 3.0)] {
            for &y in &[-0.5, 0.3] {
                let mid = s.transition(t0, t1, y).unwrap();
                for &z in &[-0.4, 0.6] {
                    let direct = s.transition(t0, t2, y).unwrap().density(z);
                    let mut comp: f64 = mid
                        .atoms
                        .iter()
                        .map(|a| {
                            a.mass
                                * s.transition_from(t1, t2, AwState::Root(a.root))
                                    .unwrap()
                                    .density(z)
                        })
                        .sum();
                    comp += mid.integrate_continuous(
                        |_, th| {
                            s.transition_from(t1, t2, AwState::Angle(th))
                                .unwrap()
                                .density(z)
                        },
                        &[z.acos()],
                        &integ,
                    );
                    assert!((comp - direct).abs() < 1e-6, "{comp} vs {direct}");
                }
            }
        }
    }

    #[test]
    fn table_reproduces_cdf() {
        let s = spec(1.6, -0.3, 0.4, -0.2, 0.5);
        let m = s.marginal(1.0).unwrap();
        let t = ThetaTable::build(&m, MARGINAL_TABLE_CELLS);
        let cont = m.continuous_mass();
        let integ = Integrator::new(1e-13, 1e-11);
        for &th in &[0.3, 1.0, 2.2] {
            let exact = integ.integrate(|x| m.density_theta(x), 0.0, th).value / cont;
            assert!((t.cdf(th) - exact).abs() < 1e-5, "{} vs {exact}", t.cdf(th));
        }
        for &u in &[0.01, 0.5, 0.93] {
            assert!((t.cdf(t.quantile(u)) - u).abs() < 1e-12);
        }
    }

    #[test]
    fn sample_mean_matches_quadrature() {
        let s = spec(1.6, -0.3, 0.4, -0.2, 0.5);
        let m = s.marginal(1.0).unwrap();
        let want = m.expect(|y| y);
        let sampler = s.sampler(&[1.0]).unwrap();
        let mut rng = replica_rng(5, 0, component::AW_PATH);
        let xs: Vec<f64> = (0..100_000)
            .map(|_| sampler.sample(&mut rng).unwrap().values[0])
            .collect();
        let se = (stats::variance(&xs) / xs.len() as f64).sqrt();
        assert!((stats::mean(&xs) - want).abs() < 4.0 * se);
    }

    #[test]
    fn seeded_paths_repeat() {
        let s = spec(0.5, -0.1, 0.5, -0.2, 0.5);
        let times = [0.5, 1.0, 1.7];
        assert_eq!(
            aw_sample_path(&s, &times, 9).unwrap(),
            aw_sample_path(&s, &times, 9).unwrap()
        );
        assert_ne!(
            aw_sample_path(&s, &times, 9).unwrap(),
            aw_sample_path(&s, &times, 10).unwrap()
        );
        assert!(aw_sample_path(&s, &[1.0, 0.5], 9).is_err());
    }
}
