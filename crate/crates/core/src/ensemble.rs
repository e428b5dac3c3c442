//! Replication ensembles: one derived seed and one noise path per replication.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::grid::SimulationGrid;
use crate::noise::NoisePath;
use crate::rng::mix_seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub grid: SimulationGrid,
    pub seed: u64,
    pub replications: usize,
}

impl Ensemble {
    pub fn new(grid: SimulationGrid, seed: u64, replications: usize) -> Self {
        Ensemble { grid, seed, replications }
    }

    pub fn seed_for(&self, rep: usize) -> u64 {
        mix_seed(self.seed, rep as u64)
    }

    pub fn path(&self, rep: usize) -> NoisePath {
        NoisePath::generate(self.seed_for(rep), &self.grid)
    }

    /// Evaluates `f` on every replication in parallel; results come back in
    /// replication order regardless of scheduling.
    pub fn map<T, F>(&self, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize, &NoisePath) -> T + Sync + Send,
    {
        (0..self.replications)
            .into_par_iter()
            .map(|r| {
                let p = self.path(r);
                f(r, &p)
            })
            .collect()
    }
}
