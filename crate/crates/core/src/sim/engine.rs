use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::asep::AsepParams;
use crate::error::{Error, Result};

/// Occupation string `tau_1 .. tau_n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Configuration {
    occ: Vec<u8>,
}

impl Configuration {
    pub fn empty(n: usize) -> Self {
        Configuration { occ: vec![0; n] }
    }

    pub fn from_occupations(occ: Vec<u8>) -> Result<Self> {
        if occ.is_empty() {
            return Err(Error::invalid("configuration", "need at least one site"));
        }
        if occ.iter().any(|&b| b > 1) {
            return Err(Error::invalid(
                "configuration",
                "occupations must be 0 or 1",
            ));
        }
        Ok(Configuration { occ })
    }

    /// Reads the bit-indexed state used by the exact solver.
    pub fn from_state(n: usize, state: usize) -> Self {
        Configuration {
            occ: (0..n).map(|j| (state >> j & 1) as u8).collect(),
        }
    }

    pub fn to_state(&self) -> usize {
        self.occ
            .iter()
            .enumerate()
            .fold(0, |s, (j, &b)| s | (b as usize) << j)
    }

    pub fn n(&self) -> usize {
        self.occ.len()
    }

    pub fn occupations(&self) -> &[u8] {
        &self.occ
    }

    pub fn particles(&self) -> usize {
        self.occ.iter().map(|&b| b as usize).sum()
    }
}

/// Index set with O(1) insert, remove and uniform selection.
#[derive(Debug, Clone)]
struct IndexSet {
    members: Vec<u32>,
    pos: Vec<u32>,
}

const ABSENT: u32 = u32::MAX;

impl IndexSet {
    fn new(cap: usize) -> Self {
        IndexSet {
            members: Vec::with_capacity(cap),
            pos: vec![ABSENT; cap],
        }
    }

    #[inline]
    fn set(&mut self, k: usize, present: bool) {
        let p = self.pos[k];
        if present && p == ABSENT {
            self.pos[k] = self.members.len() as u32;
            self.members.push(k as u32);
        } else if !present && p != ABSENT {
            let last = *self.members.last().unwrap();
            self.members.swap_remove(p as usize);
            if last as usize != k {
                self.pos[last as usize] = p;
            }
            self.pos[k] = ABSENT;
        }
    }

    #[inline]
    fn insert(&mut self, k: usize) {
        debug_assert_eq!(self.pos[k], ABSENT);
        self.pos[k] = self.members.len() as u32;
        self.members.push(k as u32);
    }

    #[inline]
    fn remove(&mut self, k: usize) {
        let p = self.pos[k];
        debug_assert_ne!(p, ABSENT);
        let last = *self.members.last().unwrap();
        self.members.swap_remove(p as usize);
        self.pos[last as usize] = p;
        self.pos[k] = ABSENT;
    }

    #[inline]
    fn len(&self) -> usize {
        self.members.len()
    }
}

/// One transition of the chain. Bond `k` joins sites `k + 1` and `k + 2`
/// (0-based `k`, 1-based sites).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Event {
    RightHop(usize),
    LeftHop(usize),
    EnterLeft,
    ExitLeft,
    EnterRight,
    ExitRight,
}

/// Event-driven simulator that keeps the enabled bulk hops in index sets, so
/// each step costs O(1) regardless of the lattice size.
#[derive(Debug, Clone)]
pub struct Simulator {
    occ: Vec<u8>,
    p: AsepParams,
    right: IndexSet,
    left: IndexSet,
    track_left: bool,
}

impl Simulator {
    pub fn new(c: &Configuration, p: &AsepParams) -> Result<Self> {
        p.validate()?;
        let n = c.n();
        let bonds = n.saturating_sub(1);
        let mut s = Simulator {
            occ: c.occ.clone(),
            p: *p,
            right: IndexSet::new(bonds),
            left: IndexSet::new(bonds),
            track_left: p.q > 0.0,
        };
        for k in 0..bonds {
            s.refresh(k);
        }
        Ok(s)
    }

    pub fn n(&self) -> usize {
        self.occ.len()
    }

    pub fn occupations(&self) -> &[u8] {
        &self.occ
    }

    pub fn configuration(&self) -> Configuration {
        Configuration {
            occ: self.occ.clone(),
        }
    }

    #[inline]
    fn refresh(&mut self, k: usize) {
        let a = self.occ[k];
        let b = self.occ[k + 1];
        self.right.set(k, a == 1 && b == 0);
        if self.track_left {
            self.left.set(k, a == 0 && b == 1);
        }
    }

    #[inline]
    fn refresh_around(&mut self, k: usize) {
        let bonds = self.occ.len() - 1;
        if k > 0 {
            self.refresh(k - 1);
        }
        self.refresh(k);
        if k + 1 < bonds {
            self.refresh(k + 1);
        }
    }

    #[inline]
    fn left_boundary_rate(&self) -> f64 {
        if self.occ[0] == 0 {
            self.p.alpha
        } else {
            self.p.gamma
        }
    }

    #[inline]
    fn right_boundary_rate(&self) -> f64 {
        if self.occ[self.occ.len() - 1] == 0 {
            self.p.delta
        } else {
            self.p.beta
        }
    }

    /// Sum of the rates of all enabled transitions.
    #[inline]
    pub fn total_rate(&self) -> f64 {
        let left = if self.track_left {
            self.p.q * self.left.len() as f64
        } else {
            0.0
        };
        self.right.len() as f64 + left + self.left_boundary_rate() + self.right_boundary_rate()
    }

    /// Picks the event at position `r` in `[0, total_rate)` of the cumulative
    /// rate line: right hops first, then left hops, then the two boundaries.
    #[inline]
    pub fn select(&self, mut r: f64) -> Event {
        let nr = self.right.len();
        if r < nr as f64 {
            return Event::RightHop(self.right.members[(r as usize).min(nr - 1)] as usize);
        }
        r -= nr as f64;
        if self.track_left {
            let nl = self.left.len();
            let w = self.p.q * nl as f64;
            if r < w {
                let i = ((r / self.p.q) as usize).min(nl - 1);
                return Event::LeftHop(self.left.members[i] as usize);
            }
            r -= w;
        }
        let lb = self.left_boundary_rate();
        let rb = self.right_boundary_rate();
        if lb > 0.0 && (r < lb || rb == 0.0) {
            if self.occ[0] == 0 {
                Event::EnterLeft
            } else {
                Event::ExitLeft
            }
        } else if rb > 0.0 {
            if self.occ[self.occ.len() - 1] == 0 {
                Event::EnterRight
            } else {
                Event::ExitRight
            }
        } else if nr > 0 {
            // Rounding pushed r past a zero-rate boundary tail.
            Event::RightHop(self.right.members[nr - 1] as usize)
        } else {
            Event::LeftHop(self.left.members[self.left.len() - 1] as usize)
        }
    }

    #[inline]
    pub fn apply(&mut self, ev: Event) {
        let n = self.occ.len();
        match ev {
            Event::RightHop(k) => {
                self.occ[k] = 0;
                self.occ[k + 1] = 1;
                self.right.remove(k);
                if self.track_left {
                    self.left.insert(k);
                }
                // Bond k-1 went from (x, 1) to (x, 0); bond k+1 from (0, y) to (1, y).
                if k > 0 {
                    if self.occ[k - 1] == 1 {
                        self.right.insert(k - 1);
                    } else if self.track_left {
                        self.left.remove(k - 1);
                    }
                }
                if k + 2 < n {
                    if self.occ[k + 2] == 0 {
                        self.right.insert(k + 1);
                    } else if self.track_left {
                        self.left.remove(k + 1);
                    }
                }
            }
            Event::LeftHop(k) => {
                self.occ[k] = 1;
                self.occ[k + 1] = 0;
                self.refresh_around(k);
            }
            Event::EnterLeft | Event::ExitLeft => {
                self.occ[0] ^= 1;
                if n > 1 {
                    self.refresh(0);
                }
            }
            Event::EnterRight | Event::ExitRight => {
                self.occ[n - 1] ^= 1;
                if n > 1 {
                    self.refresh(n - 2);
                }
            }
        }
    }

    /// Advances one event; returns it with the exponential holding time.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> (Event, f64) {
        let total = self.total_rate();
        let u: f64 = rng.random();
        let ev = self.select(u * total);
        let e: f64 = rng.random();
        let dt = -(1.0 - e).ln() / total;
        self.apply(ev);
        (ev, dt)
    }

    /// Advances one event without drawing a holding time.
    #[inline]
    pub fn jump<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let total = self.total_rate();
        let u: f64 = rng.random();
        let ev = self.select(u * total);
        self.apply(ev);
    }
}

/// One Gillespie step from `c`: returns the next configuration and the
/// holding time.
pub fn gillespie_step<R: Rng + ?Sized>(
    c: &Configuration,
    p: &AsepParams,
    rng: &mut R,
) -> Result<(Configuration, f64)> {
    let mut s = Simulator::new(c, p)?;
    let (_, dt) = s.step(rng);
    Ok((s.configuration(), dt))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use std::collections::HashMap;

    #[test]
    fn single_site_empty_fills() {
        let p = AsepParams::new(0.3, 1.0, 0.5, 0.2, 0.0).unwrap();
        let mut rng = stream_rng(1, 0);
        let mut total_dt = 0.0;
        let reps = 20000;
        for _ in 0..reps {
            let (c, dt) = gillespie_step(&Configuration::empty(1), &p, &mut rng).unwrap();
            assert_eq!(c.occupations(), &[1]);
            total_dt += dt;
        }
        // Holding time is Exp(alpha + delta) with mean 2.
        let m = total_dt / reps as f64;
        let se = 2.0 / (reps as f64).sqrt();
        assert!((m - 2.0).abs() < 4.0 * se, "{m}");
    }

    #[test]
    fn full_pair_can_only_exit() {
        let p = AsepParams::new(0.3, 0.8, 0.0, 0.0, 0.0).unwrap();
        let c = Configuration::from_occupations(vec![1, 1]).unwrap();
        let mut rng = stream_rng(2, 0);
        for _ in 0..100 {
            let (next, _) = gillespie_step(&c, &p, &mut rng).unwrap();
            assert_eq!(next.occupations(), &[1, 0]);
        }
    }

    #[test]
    fn event_frequencies_follow_rates() {
        // State 1 0 1 1 0: right hops on bonds 0 and 3, left hop on bond 1,
        // exit at site 1 (gamma), entry at site 5 (delta).
        let p = AsepParams::new(0.4, 0.9, 0.35, 0.6, 0.45).unwrap();
        let c = Configuration::from_occupations(vec![1, 0, 1, 1, 0]).unwrap();
        let sim = Simulator::new(&c, &p).unwrap();
        let rates: HashMap<Event, f64> = [
            (Event::RightHop(0), 1.0),
            (Event::RightHop(3), 1.0),
            (Event::LeftHop(1), 0.45),
            (Event::ExitLeft, 0.35),
            (Event::EnterRight, 0.6),
        ]
        .into_iter()
        .collect();
        let total: f64 = rates.values().sum();
        assert!((sim.total_rate() - total).abs() < 1e-14);

        let mut rng = stream_rng(3, 0);
        let steps = 1_000_000;
        let mut counts: HashMap<Event, u64> = HashMap::new();
        for _ in 0..steps {
            let u: f64 = rng.random();
            *counts.entry(sim.select(u * sim.total_rate())).or_default() += 1;
        }
        assert_eq!(counts.len(), rates.len());
        for (ev, r) in &rates {
            let p = r / total;
            let got = counts[ev] as f64 / steps as f64;
            let se = (p * (1.0 - p) / steps as f64).sqrt();
            assert!((got - p).abs() < 3.0 * se, "{ev:?}: {got} vs {p}");
        }
    }

    #[test]
    fn index_sets_stay_consistent() {
        let p = AsepParams::new(0.7, 0.6, 0.2, 0.1, 0.5).unwrap();
        let c = Configuration::from_occupations(vec![0, 1, 1, 0, 1, 0, 0, 1]).unwrap();
        let mut sim = Simulator::new(&c, &p).unwrap();
        let mut rng = stream_rng(4, 0);
        for _ in 0..5000 {
            sim.jump(&mut rng);
            let fresh = Simulator::new(&sim.configuration(), &p).unwrap();
            let mut a = sim.right.members.clone();
            let mut b = fresh.right.members.clone();
            a.sort();
            b.sort();
            assert_eq!(a, b);
            let mut a = sim.left.members.clone();
            let mut b = fresh.left.members.clone();
            a.sort();
            b.sort();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn state_round_trip() {
        let c = Configuration::from_state(5, 0b10110);
        assert_eq!(c.occupations(), &[0, 1, 1, 0, 1]);
        assert_eq!(c.to_state(), 0b10110);
        assert!(Configuration::from_occupations(vec![0, 2]).is_err());
    }
}
