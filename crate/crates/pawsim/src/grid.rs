//! Uniform time grids.

use crate::clock::{ClockModel, ClockNetwork, DEFAULT_DENOMINATOR_CAP};
use crate::error::Result;

/// Default node count for period-spanning grids.
pub const DEFAULT_GRID_NODES: usize = 256;

/// A uniform grid of time values.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl TimeGrid {
    pub fn new(start: f64, step: f64, len: usize) -> Self {
        Self { start, step, len }
    }

    /// `len` nodes covering [0, period), endpoint excluded.
    pub fn periodic(period: f64, len: usize) -> Self {
        Self {
            start: 0.0,
            step: period / len as f64,
            len,
        }
    }

    /// One full period of the clock, 256 uniform nodes.
    pub fn default_for_clock(clock: &ClockModel) -> Result<Self> {
        let class = clock.classify_spectrum(DEFAULT_DENOMINATOR_CAP)?;
        Ok(Self::periodic(class.period, DEFAULT_GRID_NODES))
    }

    /// One full period of the network's global spectrum, 256 uniform nodes.
    pub fn default_for_network(net: &ClockNetwork) -> Result<Self> {
        let class = net.classify_global(DEFAULT_DENOMINATOR_CAP)?;
        Ok(Self::periodic(class.period, DEFAULT_GRID_NODES))
    }

    pub fn node(&self, k: usize) -> f64 {
        self.start + self.step * k as f64
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(|k| self.node(k))
    }

    /// Total span `step · len` (one period for periodic grids).
    pub fn span(&self) -> f64 {
        self.step * self.len as f64
    }
}
