use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::params::AbcdParams;
use super::stationary::StationaryTable;

/// Constant subtracted from each occupation in a height function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Centering {
    /// `1/2`
    Half,
    /// `1 / (1 + C)`
    Low,
    /// `A / (1 + A)`
    High,
}

impl Centering {
    pub fn value(&self, ab: &AbcdParams) -> f64 {
        match self {
            Centering::Half => 0.5,
            Centering::Low => ab.rho_a(),
            Centering::High => ab.rho_b(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Centering::Half => "half",
            Centering::Low => "low",
            Centering::High => "high",
        }
    }
}

/// `floor(n x)` with a guard so that grid points `x = j / n` land on `j`.
pub fn site_count(n: usize, x: f64) -> usize {
    ((n as f64 * x + 1e-12).floor().max(0.0) as usize).min(n)
}

/// Evaluation points and coefficients of `exp(-sum_k c_k h(x_k))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeightQuery {
    pub xs: Vec<f64>,
    pub cs: Vec<f64>,
    pub centering: Centering,
}

impl HeightQuery {
    pub fn new(xs: Vec<f64>, cs: Vec<f64>, centering: Centering) -> Result<Self> {
        let hq = HeightQuery { xs, cs, centering };
        hq.validate()?;
        Ok(hq)
    }

    pub fn validate(&self) -> Result<()> {
        if self.xs.len() != self.cs.len() {
            return Err(Error::invalid("cs", "length differs from xs"));
        }
        if self.xs.is_empty() {
            return Err(Error::invalid("xs", "empty query"));
        }
        let mut prev = 0.0;
        for &x in &self.xs {
            if !(x > prev && x <= 1.0) {
                return Err(Error::invalid("xs", "must increase within (0, 1]"));
            }
            prev = x;
        }
        if self.cs.iter().any(|&c| !(c > 0.0) || !c.is_finite()) {
            return Err(Error::invalid("cs", "coefficients must be positive"));
        }
        Ok(())
    }
}

/// `sum_config pi(config) prod_j t_j^{tau_j}`.
pub fn joint_pgf_exact(pi: &StationaryTable, ts: &[f64]) -> Result<f64> {
    if ts.len() != pi.n {
        return Err(Error::invalid(
            "ts",
            format!("expected {} values, got {}", pi.n, ts.len()),
        ));
    }
    let mut total = 0.0;
    for (s, &p) in pi.probs.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let mut w = p;
        for (j, &t) in ts.iter().enumerate() {
            if s >> j & 1 == 1 {
                w *= t;
            }
        }
        total += w;
    }
    Ok(total)
}

/// `< exp(-sum_k (c_k / scale) h(x_k)) >` under the stationary law.
pub fn height_laplace_exact(pi: &StationaryTable, hq: &HeightQuery, scale: f64) -> Result<f64> {
    hq.validate()?;
    if !(scale > 0.0) {
        return Err(Error::invalid("scale", "must be positive"));
    }
    let rho = hq.centering.value(&pi.params.abcd());
    let sites: Vec<usize> = hq.xs.iter().map(|&x| site_count(pi.n, x)).collect();
    let mut total = 0.0;
    for (s, &p) in pi.probs.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let mut expo = 0.0;
        let mut h = 0.0;
        let mut j = 0;
        for (k, &m) in sites.iter().enumerate() {
            while j < m {
                h += (s >> j & 1) as f64 - rho;
                j += 1;
            }
            expo += hq.cs[k] / scale * h;
        }
        total += p * (-expo).exp();
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::super::generator::build_generator;
    use super::super::params::AsepParams;
    use super::super::stationary::stationary_exact;
    use super::*;

    fn table(n: usize, p: &AsepParams) -> StationaryTable {
        stationary_exact(&build_generator(n, p).unwrap()).unwrap()
    }

    #[test]
    fn pgf_examples() {
        let p = AsepParams::new(0.4, 0.9, 0.1, 0.3, 0.5).unwrap();
        let t = table(4, &p);
        assert!((joint_pgf_exact(&t, &[1.0; 4]).unwrap() - 1.0).abs() < 1e-13);
        assert_eq!(joint_pgf_exact(&t, &[0.0; 4]).unwrap(), t.prob(0));
        assert!(joint_pgf_exact(&t, &[1.0; 3]).is_err());

        let t1 = table(1, &p);
        let occ = t1.prob(1);
        let v = joint_pgf_exact(&t1, &[0.3]).unwrap();
        assert!((v - ((1.0 - occ) + occ * 0.3)).abs() < 1e-15);
    }

    #[test]
    fn height_single_site() {
        let p = AsepParams::new(0.4, 0.9, 0.1, 0.3, 0.5).unwrap();
        let t = table(1, &p);
        let occ = t.prob(1);
        let (c, scale) = (0.7, 0.8);
        let hq = HeightQuery::new(vec![1.0], vec![c], Centering::Half).unwrap();
        let v = height_laplace_exact(&t, &hq, scale).unwrap();
        let expect = (1.0 - occ) * (c / (2.0 * scale)).exp() + occ * (-c / (2.0 * scale)).exp();
        assert!((v - expect).abs() < 1e-14);
    }

    #[test]
    fn small_coefficients_approach_one() {
        let p = AsepParams::new(0.4, 0.9, 0.1, 0.3, 0.5).unwrap();
        let t = table(5, &p);
        let hq = HeightQuery::new(vec![0.4, 1.0], vec![1e-12, 1e-12], Centering::High).unwrap();
        assert!((height_laplace_exact(&t, &hq, 1.0).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn height_matches_pgf_rearrangement() {
        let p = AsepParams::new(0.7, 0.45, 0.2, 0.05, 0.3).unwrap();
        let n = 6;
        let t = table(n, &p);
        let scale = 1.0 / (n as f64).sqrt();
        for centering in [Centering::Half, Centering::Low, Centering::High] {
            let hq = HeightQuery::new(vec![0.5, 2.0 / 3.0, 1.0], vec![0.3, 0.5, 0.2], centering)
                .unwrap();
            let rho = centering.value(&p.abcd());
            let sites: Vec<usize> = hq.xs.iter().map(|&x| site_count(n, x)).collect();
            let ts: Vec<f64> = (1..=n)
                .map(|j| {
                    let s: f64 = sites
                        .iter()
                        .zip(&hq.cs)
                        .filter(|(m, _)| **m >= j)
                        .map(|(_, c)| c / scale)
                        .sum();
                    (-s).exp()
                })
                .collect();
            let pre: f64 = sites
                .iter()
                .zip(&hq.cs)
                .map(|(&m, c)| rho * m as f64 * c / scale)
                .sum();
            let via_pgf = pre.exp() * joint_pgf_exact(&t, &ts).unwrap();
            let direct = height_laplace_exact(&t, &hq, scale).unwrap();
            assert!((via_pgf - direct).abs() <= 1e-12 * direct, "{centering:?}");
        }
    }

    #[test]
    fn grid_points_do_not_round_down() {
        assert_eq!(site_count(10, 0.3), 3);
        assert_eq!(site_count(3, 1.0 / 3.0), 1);
        assert_eq!(site_count(7, 1.0), 7);
        assert_eq!(site_count(2000, 0.25), 500);
    }

    #[test]
    fn query_validation() {
        assert!(HeightQuery::new(vec![0.5, 0.4], vec![1.0, 1.0], Centering::Half).is_err());
        assert!(HeightQuery::new(vec![0.0], vec![1.0], Centering::Half).is_err());
        assert!(HeightQuery::new(vec![0.5], vec![0.0], Centering::Half).is_err());
        assert!(HeightQuery::new(vec![0.5], vec![1.0, 2.0], Centering::Half).is_err());
    }
}
