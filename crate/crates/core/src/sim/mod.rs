//! Continuous-time Monte Carlo for the open ASEP.

mod engine;
mod run;

pub use engine::{gillespie_step, Configuration, Event, Simulator};
pub use run::{
    height_fluctuation_samples, heights, run_chain_with, run_stationary, HeightSampleSet,
    PointSummary, SimPlan,
};
