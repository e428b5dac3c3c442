//! Discretized Mandelbrot-Van Ness scheme for one (H, grid) pair.
//!
//! With scale = c_H dt^α and Φ, ΔΦ from [`crate::kernel`], noise cell k
//! covering [t_k, t_{k+1}):
//!
//! B_H(t_j) = scale Σ_k [Φ(j-k) - Φ(-k)] ΔB_k
//! B_H(t_{j+1}) - B_H(t_j) = scale Σ_{k<=j} ΔΦ(j-k) ΔB_k
//!
//! For a segment starting at t_a the increment over cell j >= a splits into
//! the W_H part (k >= a) and ∫_cell 𝒟R_H (k < a). The latter further splits
//! into the history before 0 (`tail`, independent of a) and the part from
//! [0, t_a) (`cross`). Since `full(j)` collects every k in [0, j],
//! cross_a(j) = full(j) - local_a(j).

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::conv::{convolve_window, WindowConvolution};
use crate::error::{Error, Result};
use crate::grid::SimulationGrid;
use crate::hurst::HurstParameter;
use crate::kernel::{cell_kernel_increments, cell_kernel_table, history_tail_covariance, pow_diff};
use crate::noise::NoisePath;

#[derive(Debug)]
pub struct MvnScheme {
    hp: HurstParameter,
    grid: SimulationGrid,
    scale: f64,
    phi: Vec<f64>,
    dphi: Vec<f64>,
    dphi_sq_prefix: Vec<f64>,
    tail_plan: Option<WindowConvolution>,
    full_plan: Option<WindowConvolution>,
}

type SchemeKey = (u64, u64, usize, usize);

fn cache() -> &'static Mutex<HashMap<SchemeKey, Arc<MvnScheme>>> {
    static CACHE: OnceLock<Mutex<HashMap<SchemeKey, Arc<MvnScheme>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

impl MvnScheme {
    pub fn new(hp: HurstParameter, grid: SimulationGrid) -> Result<Self> {
        if !hp.is_brownian() && grid.history_cells() == 0 {
            return Err(Error::EmptyWarmup(hp.h()));
        }
        let m = grid.history_cells();
        let n = grid.horizon_cells();
        let a = hp.alpha();
        let phi = cell_kernel_table(m + n, a);
        let dphi = cell_kernel_increments(m + n, a);
        let mut dphi_sq_prefix = Vec::with_capacity(dphi.len() + 1);
        let mut acc = 0.0;
        dphi_sq_prefix.push(0.0);
        for d in &dphi {
            acc += d * d;
            dphi_sq_prefix.push(acc);
        }
        let (tail_plan, full_plan) = if hp.is_brownian() {
            (None, None)
        } else {
            (
                Some(WindowConvolution::new(&dphi, m, m, n)),
                Some(WindowConvolution::new(&dphi, n, 0, n)),
            )
        };
        Ok(MvnScheme {
            hp,
            grid,
            scale: hp.c_h() * grid.step().powf(a),
            phi,
            dphi,
            dphi_sq_prefix,
            tail_plan,
            full_plan,
        })
    }

    /// Process-wide cached instance; building one costs two kernel FFTs.
    pub fn shared(hp: HurstParameter, grid: &SimulationGrid) -> Result<Arc<MvnScheme>> {
        let key = (hp.h().to_bits(), grid.step().to_bits(), grid.history_cells(), grid.horizon_cells());
        if let Some(s) = cache().lock().unwrap().get(&key) {
            return Ok(s.clone());
        }
        let s = Arc::new(MvnScheme::new(hp, *grid)?);
        cache().lock().unwrap().entry(key).or_insert_with(|| s.clone());
        Ok(s)
    }

    pub fn hurst(&self) -> &HurstParameter {
        &self.hp
    }

    pub fn grid(&self) -> &SimulationGrid {
        &self.grid
    }

    /// c_H dt^α.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn phi(&self, d: i64) -> f64 {
        if d <= 0 {
            0.0
        } else {
            self.phi[d as usize]
        }
    }

    pub fn dphi(&self) -> &[f64] {
        &self.dphi
    }

    fn check(&self, noise: &NoisePath) {
        assert_eq!(noise.grid(), &self.grid, "noise path built on a different grid");
    }

    pub fn realize<'a>(&'a self, noise: &'a NoisePath) -> Realization<'a> {
        self.check(noise);
        let n = self.grid.horizon_cells();
        let (tail, full) = if self.hp.is_brownian() {
            (vec![0.0; n], noise.horizon().to_vec())
        } else {
            let t = self.tail_plan.as_ref().unwrap().apply(noise.history());
            let f = self.full_plan.as_ref().unwrap().apply(noise.horizon());
            (
                t.into_iter().map(|v| v * self.scale).collect(),
                f.into_iter().map(|v| v * self.scale).collect(),
            )
        };
        Realization { scheme: self, noise, tail, full }
    }

    /// B_H(t_j) by direct summation; O(M + j).
    pub fn fbm_at(&self, noise: &NoisePath, j: usize) -> f64 {
        self.check(noise);
        let m = self.grid.history_cells() as i64;
        let inc = noise.increments();
        let mut acc = 0.0;
        for k in -m..j as i64 {
            acc += (self.phi(j as i64 - k) - self.phi(-k)) * inc[(k + m) as usize];
        }
        self.scale * acc
    }

    /// W_H(t_j) for a segment starting at t_a: scale Σ_{a<=k<j} Φ(j-k) ΔB_k.
    pub fn w_at(&self, noise: &NoisePath, a: usize, j: usize) -> f64 {
        self.check(noise);
        let h = noise.horizon();
        let mut acc = 0.0;
        for k in a..j {
            acc += self.phi((j - k) as i64) * h[k];
        }
        self.scale * acc
    }

    /// R_H(t_j) for a segment starting at t_a by the history kernel:
    /// scale Σ_{k<a} [Φ(j-k) - Φ(a-k)] ΔB_k.
    pub fn r_direct_at(&self, noise: &NoisePath, a: usize, j: usize) -> f64 {
        self.check(noise);
        if self.hp.is_brownian() {
            return 0.0;
        }
        let m = self.grid.history_cells() as i64;
        let inc = noise.increments();
        let mut acc = 0.0;
        for k in -m..a as i64 {
            acc += (self.phi(j as i64 - k) - self.phi(a as i64 - k)) * inc[(k + m) as usize];
        }
        self.scale * acc
    }

    /// 𝒟R_H(t) for a segment starting at t_a, any t > t_a:
    /// (c_H/dt) Σ_{k<a} [(t-t_k)^α - (t-t_{k+1})^α] ΔB_k.
    pub fn dr_at(&self, noise: &NoisePath, a: usize, t: f64) -> f64 {
        self.check(noise);
        if self.hp.is_brownian() {
            return 0.0;
        }
        let dt = self.grid.step();
        let m = self.grid.history_cells() as i64;
        let inc = noise.increments();
        let al = self.hp.alpha();
        let mut acc = 0.0;
        for k in -m..a as i64 {
            let near = t - (k + 1) as f64 * dt;
            let far = t - k as f64 * dt;
            acc += pow_diff(far, near, al) * inc[(k + m) as usize];
        }
        self.hp.c_h() / dt * acc
    }

    /// Weights w_k with 𝒟R_H(t) = Σ_{k<a} w_k ΔB_k, history cell order.
    pub fn dr_weights(&self, a: usize, t: f64) -> Vec<f64> {
        let dt = self.grid.step();
        let m = self.grid.history_cells() as i64;
        let al = self.hp.alpha();
        let c = if self.hp.is_brownian() { 0.0 } else { self.hp.c_h() / dt };
        (-m..a as i64)
            .map(|k| c * pow_diff(t - k as f64 * dt, t - (k + 1) as f64 * dt, al))
            .collect()
    }

    /// Σ w_k ΔB_k over the first `w.len()` cells of the noise.
    pub fn apply_weights(&self, noise: &NoisePath, w: &[f64]) -> f64 {
        self.check(noise);
        noise.increments()[..w.len()].iter().zip(w).map(|(x, y)| x * y).sum()
    }

    /// ∫_{cell j} ρ̂(t,0) dt only, skipping the horizon convolution.
    pub fn tail_increments(&self, noise: &NoisePath) -> Vec<f64> {
        self.check(noise);
        match &self.tail_plan {
            None => vec![0.0; self.grid.horizon_cells()],
            Some(p) => p.apply(noise.history()).into_iter().map(|v| v * self.scale).collect(),
        }
    }

    // ---- exact moments of the discrete estimators ----

    /// E[(B_H(t_{j1}))(B_H(t_{j2}))] under the scheme.
    pub fn fbm_covariance_discrete(&self, j1: usize, j2: usize) -> f64 {
        let m = self.grid.history_cells() as i64;
        let top = j1.max(j2) as i64;
        let mut acc = 0.0;
        for k in -m..top {
            let z = self.phi(-k);
            acc += (self.phi(j1 as i64 - k) - z) * (self.phi(j2 as i64 - k) - z);
        }
        self.scale * self.scale * self.grid.step() * acc
    }

    /// E(B_H(t_{j1}) - B_H(t_{j0}))² under the scheme.
    pub fn increment_variance_discrete(&self, j0: usize, j1: usize) -> f64 {
        let m = self.grid.history_cells() as i64;
        let mut acc = 0.0;
        for k in -m..j1 as i64 {
            let d = self.phi(j1 as i64 - k) - self.phi(j0 as i64 - k);
            acc += d * d;
        }
        self.scale * self.scale * self.grid.step() * acc
    }

    /// E 𝒟R_H(t)² for a segment starting at t_a.
    pub fn dr_second_moment_discrete(&self, a: usize, t: f64) -> f64 {
        if self.hp.is_brownian() {
            return 0.0;
        }
        let dt = self.grid.step();
        let m = self.grid.history_cells() as i64;
        let al = self.hp.alpha();
        let mut acc = 0.0;
        for k in -m..a as i64 {
            let w = pow_diff(t - k as f64 * dt, t - (k + 1) as f64 * dt, al);
            acc += w * w;
        }
        let c = self.hp.c_h() / dt;
        c * c * dt * acc
    }

    /// E Σ_{j=a}^{a+cells-1} (∫_cell_j 𝒟R_H)²/dt, the discrete energy.
    pub fn dr_energy_discrete(&self, a: usize, cells: usize) -> f64 {
        if self.hp.is_brownian() {
            return 0.0;
        }
        let m = self.grid.history_cells();
        let p = &self.dphi_sq_prefix;
        let mut acc = 0.0;
        for j in a..a + cells {
            acc += p[j + m + 1] - p[j - a + 1];
        }
        self.scale * self.scale * acc
    }

    /// E Σ_k (B_H(T_{k+1}) - B_H(T_k))² over a uniform coarse grid of `steps` steps.
    pub fn quadratic_variation_discrete(&self, steps: usize) -> Result<f64> {
        let n = self.grid.horizon_cells();
        if steps == 0 || n % steps != 0 {
            return Err(Error::InvalidArgument(format!("{steps} steps do not divide {n} cells")));
        }
        let w = n / steps;
        Ok((0..steps).map(|k| self.increment_variance_discrete(k * w, (k + 1) * w)).sum())
    }

    // ---- continuum values for the same truncated history ----

    /// Variance of the history older than -L carried by B_H(t1), B_H(t2).
    pub fn fbm_truncation(&self, t1: f64, t2: f64) -> f64 {
        history_tail_covariance(t1, t2, -self.grid.warmup_start(), &self.hp)
    }

    /// Part of E 𝒟R_H(t)² carried by history older than -L.
    pub fn dr_pointwise_truncation(&self, t: f64) -> f64 {
        dr_pointwise_tail(&self.hp, t + -self.grid.warmup_start())
    }

    /// Part of E ∫_{t0}^{t1} 𝒟R_H² carried by history older than -L.
    pub fn dr_energy_truncation(&self, t0: f64, t1: f64) -> f64 {
        let l = -self.grid.warmup_start();
        dr_energy_tail(&self.hp, t0 + l, t1 + l)
    }
}

/// c²α² d^{2α-1}/(1-2α): contribution of history beyond distance d.
fn dr_pointwise_tail(hp: &HurstParameter, d: f64) -> f64 {
    if hp.is_brownian() {
        return 0.0;
    }
    let a = hp.alpha();
    let c = hp.c_h();
    c * c * a * a * d.powf(2.0 * a - 1.0) / (1.0 - 2.0 * a)
}

fn dr_energy_tail(hp: &HurstParameter, d0: f64, d1: f64) -> f64 {
    if hp.is_brownian() {
        return 0.0;
    }
    let a = hp.alpha();
    let c = hp.c_h();
    c * c * a * a / (1.0 - 2.0 * a) * pow_diff(d1, d0, 2.0 * a) / (2.0 * a)
}

/// One noise path seen through one scheme: per-cell fBm increments split
/// into history-before-0 and the rest.
#[derive(Debug)]
pub struct Realization<'a> {
    scheme: &'a MvnScheme,
    noise: &'a NoisePath,
    tail: Vec<f64>,
    full: Vec<f64>,
}

impl<'a> Realization<'a> {
    pub fn scheme(&self) -> &'a MvnScheme {
        self.scheme
    }

    pub fn noise(&self) -> &'a NoisePath {
        self.noise
    }

    /// ∫_{cell j} ρ̂(t,0) dt: the 𝒟R contribution of history before 0.
    pub fn tail_increments(&self) -> &[f64] {
        &self.tail
    }

    /// scale Σ_{0<=k<=j} ΔΦ(j-k) ΔB_k.
    pub fn full_increments(&self) -> &[f64] {
        &self.full
    }

    pub fn fbm_increments(&self) -> Vec<f64> {
        self.tail.iter().zip(&self.full).map(|(a, b)| a + b).collect()
    }

    /// B_H(t_j), j = 0..=N.
    pub fn fbm_path(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.full.len() + 1);
        let mut acc = 0.0;
        out.push(0.0);
        for (a, b) in self.tail.iter().zip(&self.full) {
            acc += a + b;
            out.push(acc);
        }
        out
    }

    /// W_H increments over cells a..b for the segment starting at t_a.
    pub fn local_increments(&self, a: usize, b: usize) -> Vec<f64> {
        let h = &self.noise.horizon()[a..b];
        if self.scheme.hp.is_brownian() {
            return h.to_vec();
        }
        let s = self.scheme.scale;
        convolve_window(h, &self.scheme.dphi[..b - a], 0, b - a)
            .into_iter()
            .map(|v| v * s)
            .collect()
    }

    /// 𝒟R contribution of history in [0, t_a) over cells a..b.
    pub fn cross_increments(&self, a: usize, b: usize) -> Vec<f64> {
        if self.scheme.hp.is_brownian() {
            return vec![0.0; b - a];
        }
        let local = self.local_increments(a, b);
        self.full[a..b].iter().zip(local).map(|(f, l)| f - l).collect()
    }

    /// ∫_{cell j} 𝒟R_H for the segment starting at t_a, cells a..b.
    pub fn dr_cell_increments(&self, a: usize, b: usize) -> Vec<f64> {
        let cross = self.cross_increments(a, b);
        self.tail[a..b].iter().zip(cross).map(|(t, c)| t + c).collect()
    }
}
