//! Delayed integral of a segment-predictable integrand, its extension by
//! dyadic projection, and the classical baselines.
//!
//! On a segment [T_{k-1}, T_k) with γ measurable at T_{k-1}:
//!
//! ∫ γ d̲B_H = ∫ G_H(τ, T_{k-1}, T_k, γ) dB(τ) + ∫ γ(t) 𝒟R_H(t) dt
//!
//! and 𝒟R_H splits at 0 into ρ̂ (history before 0) and ρ (history in
//! [0, T_{k-1})). The Itô part uses the cell average of G_H over each noise
//! cell, so that γ ≡ 1 telescopes exactly to B_H(T_k) - B_H(T_{k-1}).

use serde::{Deserialize, Serialize};

use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::grid::SegmentGrid;
use crate::hurst::HurstParameter;
use crate::integrand::{InformationSchedule, Integrand, PathContext};
use crate::kernel::{gh_cell_averages, SampledFunction};
use crate::noise::NoisePath;
use crate::scheme::{MvnScheme, Realization};
use crate::stats::{compensated_sum, weighted_slope, KahanSum, MCResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayedIntegralResult {
    pub value: f64,
    /// Σ_k ∫ G_H dB
    pub ito_part: f64,
    /// ∫ γ(t) ρ̂(t,0) dt
    pub tail_part: f64,
    /// Σ_k ∫ γ(t) ρ(t,0,T_{k-1}) dt
    pub cross_part: f64,
    pub grid: SegmentGrid,
    /// T · E∫_0^T (𝒟R_H lost to the warm-up cut)² dt; bounds the variance of
    /// the truncation error per unit sup|γ|².
    pub truncation_budget: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SegmentParts {
    pub ito: f64,
    pub tail: f64,
    pub cross: f64,
}

impl SegmentParts {
    pub fn total(&self) -> f64 {
        self.ito + self.tail + self.cross
    }
}

/// The three parts on cells a..b for left-endpoint values `g` (whole grid).
pub fn segment_parts(real: &Realization, g: &[f64], a: usize, b: usize) -> SegmentParts {
    let scheme = real.scheme();
    let grid = scheme.grid();
    let dt = grid.step();
    let seg = SampledFunction { start: grid.time(a), step: dt, values: g[a..b].to_vec() };
    let gbar = gh_cell_averages(&seg, scheme.hurst());
    let db = &real.noise().horizon()[a..b];
    let ito = compensated_sum(gbar.iter().zip(db).map(|(x, y)| x * y));
    if scheme.hurst().is_brownian() {
        return SegmentParts { ito, tail: 0.0, cross: 0.0 };
    }
    let tail = compensated_sum(g[a..b].iter().zip(&real.tail_increments()[a..b]).map(|(x, y)| x * y));
    let cross_inc = real.cross_increments(a, b);
    let cross = compensated_sum(g[a..b].iter().zip(&cross_inc).map(|(x, y)| x * y));
    SegmentParts { ito, tail, cross }
}

fn check_segment(gamma: &dyn Integrand, cells: usize, a: usize, b: usize, dt: f64) -> Result<()> {
    if b < a + 2 {
        return Err(Error::DegenerateSegment { start: a as f64 * dt, end: b as f64 * dt, cells: b.saturating_sub(a) });
    }
    if gamma.is_deterministic() || gamma.schedule(cells).measurable_at(a, b) {
        Ok(())
    } else {
        Err(Error::NotSegmentPredictable { label: gamma.label(), start: a as f64 * dt, end: b as f64 * dt })
    }
}

/// ∫_{seg_start}^{seg_end} γ d̲B_H on one segment; γ must be known at seg_start.
pub fn delayed_segment(
    gamma: &dyn Integrand,
    seg_start: f64,
    seg_end: f64,
    noise: &NoisePath,
    hp: &HurstParameter,
) -> Result<f64> {
    let grid = noise.grid();
    let a = grid.index_of(seg_start)?;
    let b = grid.index_of(seg_end)?;
    check_segment(gamma, grid.horizon_cells(), a, b, grid.step())?;
    let scheme = MvnScheme::shared(*hp, grid)?;
    let real = scheme.realize(noise);
    let ctx = PathContext::new(noise);
    let g = gamma.sample(&ctx, &InformationSchedule::pathwise(grid.horizon_cells()))?;
    Ok(segment_parts(&real, &g, a, b).total())
}

/// Σ over segments of `grid`, with values `g` already measurable at each
/// segment start.
pub fn delayed_integral_values(real: &Realization, g: &[f64], grid: &SegmentGrid) -> DelayedIntegralResult {
    let mut ito = KahanSum::default();
    let mut tail = KahanSum::default();
    let mut cross = KahanSum::default();
    for (a, b) in grid.segments() {
        let p = segment_parts(real, g, a, b);
        ito.add(p.ito);
        tail.add(p.tail);
        cross.add(p.cross);
    }
    let (ito, tail, cross) = (ito.total(), tail.total(), cross.total());
    let scheme = real.scheme();
    let t = scheme.grid().horizon();
    DelayedIntegralResult {
        value: ito + tail + cross,
        ito_part: ito,
        tail_part: tail,
        cross_part: cross,
        grid: grid.clone(),
        truncation_budget: t * scheme.dr_energy_truncation(0.0, t),
        seed: real.noise().seed(),
    }
}

/// I_H(γ) = Σ_k ∫_{T_{k-1}}^{T_k} γ d̲B_H for γ measurable at every T_{k-1}.
pub fn delayed_integral_xd(
    gamma: &dyn Integrand,
    grid: &SegmentGrid,
    noise: &NoisePath,
    hp: &HurstParameter,
) -> Result<DelayedIntegralResult> {
    let sim = noise.grid();
    let cells = sim.horizon_cells();
    if *grid.indices().last().unwrap() != cells {
        return Err(Error::InvalidArgument("segment grid does not match the noise grid".into()));
    }
    for (a, b) in grid.segments() {
        check_segment(gamma, cells, a, b, sim.step())?;
    }
    let scheme = MvnScheme::shared(*hp, sim)?;
    let real = scheme.realize(noise);
    let ctx = PathContext::new(noise);
    let g = gamma.sample(&ctx, &InformationSchedule::pathwise(cells))?;
    Ok(delayed_integral_values(&real, &g, grid))
}

/// I_H(γ_n) for the dyadic projection γ_n on one path.
pub fn projected_integral(
    gamma: &dyn Integrand,
    level: u32,
    real: &Realization,
    ctx: &PathContext,
) -> Result<DelayedIntegralResult> {
    let sim = real.scheme().grid();
    let cells = sim.horizon_cells();
    let grid = SegmentGrid::dyadic(level, sim)?;
    let g = if gamma.is_deterministic() {
        gamma.sample(ctx, &InformationSchedule::pathwise(cells))?
    } else {
        gamma.sample(ctx, &InformationSchedule::frozen(&grid))?
    };
    Ok(delayed_integral_values(real, &g, &grid))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtensionTrace {
    pub integrand: String,
    pub hurst: HurstParameter,
    pub levels: Vec<u32>,
    /// E I_H(γ_n) per level
    pub means: Vec<MCResult>,
    /// E|I_H(γ_{n+1}) - I_H(γ_n)|, one per consecutive pair of levels
    pub gaps: Vec<MCResult>,
    /// (E|I_H(γ_{n+1}) - I_H(γ_n)|²)^{1/2}, diagnostic only
    pub gaps_l2: Vec<f64>,
    pub tolerance: f64,
    pub stopping_level: u32,
    pub converged: bool,
    /// log₂ slope of the gaps against the level and its standard error
    pub fitted_slope: Option<(f64, f64)>,
    /// -(ν/2 + H - 1/2) when ν is known
    pub target_slope: Option<f64>,
}

/// Per-path values I_H(γ_n), n = levels, on every replication.
pub fn projected_values(
    gamma: &dyn Integrand,
    hp: &HurstParameter,
    ensemble: &Ensemble,
    levels: &[u32],
) -> Result<Vec<Vec<f64>>> {
    let scheme = MvnScheme::shared(*hp, &ensemble.grid)?;
    let rows = ensemble.map(|_, noise| -> Result<Vec<f64>> {
        let real = scheme.realize(noise);
        let ctx = PathContext::new(noise);
        levels.iter().map(|&n| Ok(projected_integral(gamma, n, &real, &ctx)?.value)).collect()
    });
    rows.into_iter().collect()
}

/// Gap statistics between consecutive columns of `rows`.
pub fn level_gaps(rows: &[Vec<f64>], seed: u64) -> (Vec<MCResult>, Vec<f64>) {
    let k = rows.first().map_or(0, |r| r.len());
    let mut gaps = Vec::new();
    let mut l2 = Vec::new();
    for i in 0..k.saturating_sub(1) {
        let d: Vec<f64> = rows.iter().map(|r| (r[i + 1] - r[i]).abs()).collect();
        gaps.push(MCResult::from_samples(&d, seed, 0.0));
        l2.push((compensated_sum(d.iter().map(|x| x * x)) / d.len() as f64).sqrt());
    }
    (gaps, l2)
}

/// Log₂ regression of gap estimates on the level, weighted by the delta-method
/// standard errors; `None` when fewer than three gaps are above `floor`.
pub fn fit_gap_slope(levels: &[u32], gaps: &[MCResult], floor: f64) -> Option<(f64, f64)> {
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut sd = Vec::new();
    for (n, g) in levels.iter().zip(gaps) {
        if g.estimate > floor {
            x.push(*n as f64);
            y.push(g.estimate.log2());
            sd.push((g.std_error / (g.estimate * std::f64::consts::LN_2)).max(1e-12));
        }
    }
    if x.len() < 3 {
        return None;
    }
    Some(weighted_slope(&x, &y, &sd))
}

/// Gap floor below which differences are rounding, relative to the level means.
pub fn quadrature_floor(means: &[MCResult]) -> f64 {
    let scale = means.iter().map(|m| m.estimate.abs() + m.std_error).fold(1e-300, f64::max);
    1e-10 * scale
}

/// I_H(γ) = lim I_H(γ_n) over dyadic levels `n_min..=n_max` on common noise.
pub fn extended_integral(
    gamma: &dyn Integrand,
    hp: &HurstParameter,
    ensemble: &Ensemble,
    tol: f64,
    n_min: u32,
    n_max: u32,
) -> Result<ExtensionTrace> {
    if !(tol > 0.0) || n_max <= n_min {
        return Err(Error::InvalidArgument(format!(
            "extension needs tol > 0 and n_max > n_min, got tol={tol}, {n_min}..{n_max}"
        )));
    }
    let all: Vec<u32> = (n_min..=n_max).collect();
    let rows = projected_values(gamma, hp, ensemble, &all)?;
    let (gaps, gaps_l2) = level_gaps(&rows, ensemble.seed);
    let stop = gaps.iter().position(|g| g.estimate < tol);
    let used = stop.map_or(all.len(), |i| i + 2);
    let levels = all[..used].to_vec();
    let means: Vec<MCResult> = (0..used)
        .map(|i| {
            let col: Vec<f64> = rows.iter().map(|r| r[i]).collect();
            MCResult::from_samples(&col, ensemble.seed, 0.0)
        })
        .collect();
    let gaps = gaps[..used - 1].to_vec();
    let gaps_l2 = gaps_l2[..used - 1].to_vec();
    let floor = quadrature_floor(&means);
    let fitted_slope = fit_gap_slope(&levels, &gaps, floor);
    let target_slope = gamma
        .nu()
        .filter(|v| v.is_finite())
        .map(|nu| -(nu / 2.0 + hp.h() - 0.5));
    Ok(ExtensionTrace {
        integrand: gamma.label(),
        hurst: *hp,
        stopping_level: *levels.last().unwrap(),
        levels,
        means,
        gaps,
        gaps_l2,
        tolerance: tol,
        converged: stop.is_some(),
        fitted_slope,
        target_slope,
    })
}

/// Left-point Itô sum Σ γ(t_j) ΔB_j on the fine grid.
pub fn ito_integral(gamma: &dyn Integrand, noise: &NoisePath) -> Result<f64> {
    let ctx = PathContext::new(noise);
    let g = gamma.sample(&ctx, &InformationSchedule::pathwise(noise.grid().horizon_cells()))?;
    Ok(compensated_sum(g.iter().zip(noise.horizon()).map(|(x, y)| x * y)))
}

/// Σ_k γ(T_k)(B_H(T_{k+1}) - B_H(T_k)) with `path` = B_H on the fine grid.
pub fn riemann_sum(g: &[f64], path: &[f64], n_steps: usize) -> Result<f64> {
    let cells = path.len() - 1;
    if n_steps == 0 || cells % n_steps != 0 {
        return Err(Error::InvalidArgument(format!("{n_steps} steps do not divide {cells} cells")));
    }
    let w = cells / n_steps;
    Ok(compensated_sum((0..n_steps).map(|k| g[k * w] * (path[(k + 1) * w] - path[k * w]))))
}

/// Left-point Riemann sum of γ against B_H on an `n_steps` uniform grid.
pub fn riemann_fbm_integral(
    gamma: &dyn Integrand,
    n_steps: usize,
    noise: &NoisePath,
    hp: &HurstParameter,
) -> Result<f64> {
    let ctx = PathContext::new(noise);
    let g = gamma.sample(&ctx, &InformationSchedule::pathwise(noise.grid().horizon_cells()))?;
    let path = ctx.fbm_path(hp)?;
    riemann_sum(&g, &path, n_steps)
}
