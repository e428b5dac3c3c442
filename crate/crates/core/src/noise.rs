//! The driving Brownian increments on [-L, T], shared by every H.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::SimulationGrid;
use crate::rng::fill_standard_normals;

#[derive(Debug, Clone, PartialEq)]
pub struct NoisePath {
    grid: SimulationGrid,
    seed: u64,
    increments: Arc<[f64]>,
}

impl NoisePath {
    /// ΔB over every cell of `grid`, N(0, step), from the counter-based stream.
    pub fn generate(seed: u64, grid: &SimulationGrid) -> NoisePath {
        let m = grid.history_cells();
        let mut inc = vec![0.0; grid.cell_count()];
        fill_standard_normals(seed, -(m as i64), &mut inc);
        let sd = grid.step().sqrt();
        for v in inc.iter_mut() {
            *v *= sd;
        }
        NoisePath { grid: *grid, seed, increments: inc.into() }
    }

    pub fn from_increments(grid: &SimulationGrid, seed: u64, increments: Vec<f64>) -> Result<NoisePath> {
        if increments.len() != grid.cell_count() {
            return Err(Error::InvalidArgument(format!(
                "expected {} increments, got {}",
                grid.cell_count(),
                increments.len()
            )));
        }
        Ok(NoisePath { grid: *grid, seed, increments: increments.into() })
    }

    pub fn grid(&self) -> &SimulationGrid {
        &self.grid
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// All increments, history first; cell k in [-M, N) sits at k + M.
    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    pub fn history(&self) -> &[f64] {
        &self.increments[..self.grid.history_cells()]
    }

    /// Increments of cells [t_j, t_{j+1}), j = 0..N.
    pub fn horizon(&self) -> &[f64] {
        &self.increments[self.grid.history_cells()..]
    }

    /// B(t_j) - B(0), j = 0..=N.
    pub fn brownian_path(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.grid.horizon_cells() + 1);
        let mut acc = 0.0;
        out.push(0.0);
        for &d in self.horizon() {
            acc += d;
            out.push(acc);
        }
        out
    }

    /// Copy with every increment of a cell starting at or after t_j set to 0.
    pub fn masked_from(&self, j: usize) -> NoisePath {
        let mut inc = self.increments.to_vec();
        let m = self.grid.history_cells();
        for v in &mut inc[m + j.min(self.grid.horizon_cells())..] {
            *v = 0.0;
        }
        NoisePath { grid: self.grid, seed: self.seed, increments: inc.into() }
    }

    /// FNV-1a over the increment bit patterns.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for v in self.increments.iter() {
            for b in v.to_bits().to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        h
    }

    pub fn descriptor(&self) -> NoiseDescriptor {
        NoiseDescriptor { seed: self.seed, grid: self.grid, checksum: format!("{:016x}", self.checksum()) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseDescriptor {
    pub seed: u64,
    pub grid: SimulationGrid,
    pub checksum: String,
}
