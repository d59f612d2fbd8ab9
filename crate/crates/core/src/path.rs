use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One realisation of a process on a finite set of times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl PathSample {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Value at `times[k]`.
    pub fn at(&self, k: usize) -> f64 {
        self.values[k]
    }
}

pub(crate) fn check_increasing(
    name: &'static str,
    times: &[f64],
    strictly_positive: bool,
) -> Result<()> {
    let mut prev = f64::NEG_INFINITY;
    for &t in times {
        if !t.is_finite() {
            return Err(Error::invalid(name, "non-finite time"));
        }
        if strictly_positive && t <= 0.0 {
            return Err(Error::invalid(name, "times must be positive"));
        }
        if t <= prev {
            return Err(Error::invalid(name, "times must be strictly increasing"));
        }
        prev = t;
    }
    Ok(())
}
