//! Fine simulation grid on [-L, T] and segment grids on [0, T].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid with `history_cells` cells before the origin 0 and
/// `horizon_cells` cells in [0, T].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationGrid {
    step: f64,
    history_cells: usize,
    horizon_cells: usize,
}

impl SimulationGrid {
    /// `warmup` is rounded up to a whole number of cells.
    pub fn new(horizon: f64, horizon_cells: usize, warmup: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidArgument(format!("horizon must be positive, got {horizon}")));
        }
        if horizon_cells == 0 {
            return Err(Error::EmptyGrid);
        }
        if !(warmup >= 0.0 && warmup.is_finite()) {
            return Err(Error::InvalidArgument(format!("warm-up must be >= 0, got {warmup}")));
        }
        let step = horizon / horizon_cells as f64;
        let history_cells = (warmup / step - 1e-9).ceil().max(0.0) as usize;
        Ok(SimulationGrid { step, history_cells, horizon_cells })
    }

    pub fn step(&self) -> f64 {
        self.step
    }
    pub fn history_cells(&self) -> usize {
        self.history_cells
    }
    pub fn horizon_cells(&self) -> usize {
        self.horizon_cells
    }
    pub fn cell_count(&self) -> usize {
        self.history_cells + self.horizon_cells
    }
    pub fn warmup_start(&self) -> f64 {
        -(self.history_cells as f64) * self.step
    }
    pub fn origin(&self) -> f64 {
        0.0
    }
    pub fn horizon(&self) -> f64 {
        self.horizon_cells as f64 * self.step
    }
    pub fn time(&self, j: usize) -> f64 {
        j as f64 * self.step
    }

    /// Grid index of `t` in [0, T], if `t` is a grid point.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let x = t / self.step;
        let j = x.round();
        if (x - j).abs() > 1e-7 {
            return Err(Error::OffGrid(t));
        }
        if j < 0.0 || j > self.horizon_cells as f64 {
            return Err(Error::OutOfRange { t, lo: 0.0, hi: self.horizon() });
        }
        Ok(j as usize)
    }
}

/// Breakpoints 0 = T_0 < ... < T_n = T on the fine grid, stored as indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentGrid {
    breakpoints: Vec<usize>,
    step: f64,
}

impl SegmentGrid {
    pub fn from_indices(breakpoints: Vec<usize>, grid: &SimulationGrid) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::EmptyGrid);
        }
        if breakpoints[0] != 0 || *breakpoints.last().unwrap() != grid.horizon_cells() {
            return Err(Error::InvalidArgument(format!(
                "segment grid must run from 0 to T = {}",
                grid.horizon()
            )));
        }
        for w in breakpoints.windows(2) {
            if w[1] < w[0] + 2 {
                return Err(Error::DegenerateSegment {
                    start: grid.time(w[0]),
                    end: grid.time(w[1]),
                    cells: w[1].saturating_sub(w[0]),
                });
            }
        }
        Ok(SegmentGrid { breakpoints, step: grid.step() })
    }

    pub fn from_times(times: &[f64], grid: &SimulationGrid) -> Result<Self> {
        let idx = times.iter().map(|&t| grid.index_of(t)).collect::<Result<Vec<_>>>()?;
        Self::from_indices(idx, grid)
    }

    pub fn single(grid: &SimulationGrid) -> Result<Self> {
        Self::from_indices(vec![0, grid.horizon_cells()], grid)
    }

    /// T_k = kT/2^n.
    pub fn dyadic(level: u32, grid: &SimulationGrid) -> Result<Self> {
        let n = grid.horizon_cells();
        let parts = 1usize.checked_shl(level).unwrap_or(0);
        if parts == 0 || n % parts != 0 {
            return Err(Error::InvalidArgument(format!(
                "dyadic level {level} does not divide {n} fine cells"
            )));
        }
        let m = n / parts;
        Self::from_indices((0..=parts).map(|k| k * m).collect(), grid)
    }

    pub fn uniform(segments: usize, grid: &SimulationGrid) -> Result<Self> {
        let n = grid.horizon_cells();
        if segments == 0 || n % segments != 0 {
            return Err(Error::InvalidArgument(format!(
                "{segments} segments do not divide {n} fine cells"
            )));
        }
        let m = n / segments;
        Self::from_indices((0..=segments).map(|k| k * m).collect(), grid)
    }

    pub fn indices(&self) -> &[usize] {
        &self.breakpoints
    }

    pub fn times(&self) -> Vec<f64> {
        self.breakpoints.iter().map(|&j| j as f64 * self.step).collect()
    }

    pub fn segments(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.breakpoints.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn len(&self) -> usize {
        self.breakpoints.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.breakpoints.len() < 2
    }

    /// ε, the smallest segment length.
    pub fn min_spacing(&self) -> f64 {
        self.segments().map(|(a, b)| b - a).min().unwrap_or(0) as f64 * self.step
    }

    /// Adds a breakpoint at fine index `j` (no-op if present).
    pub fn refine_at(&self, j: usize, grid: &SimulationGrid) -> Result<Self> {
        let mut b = self.breakpoints.clone();
        if let Err(pos) = b.binary_search(&j) {
            b.insert(pos, j);
        }
        Self::from_indices(b, grid)
    }
}
