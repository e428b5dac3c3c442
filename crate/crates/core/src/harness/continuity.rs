//! E|I_H(γ) - I_{1/2}(γ)| as H ↓ 1/2 on common noise, and the level-to-level
//! decay of the extension I_H(γ_n).

use serde::{Deserialize, Serialize};

use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::grid::SegmentGrid;
use crate::hurst::HurstParameter;
use crate::integrand::{x_norm, InformationSchedule, Integrand, IntegrandSpec, PathContext, XNorm};
use crate::integrator::{delayed_integral_values, fit_gap_slope, level_gaps, projected_values, quadrature_floor};
use crate::scheme::MvnScheme;
use crate::stats::MCResult;

pub const DEFAULT_HURSTS: [f64; 4] = [0.7, 0.6, 0.55, 0.51];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuityCurve {
    pub integrand: IntegrandSpec,
    pub hurst_values: Vec<f64>,
    pub gaps: Vec<MCResult>,
    pub seed: u64,
    pub x_norm: XNorm,
    /// integrals taken on this segment grid (own grid for 𝒳^d integrands,
    /// the dyadic projection at `level` otherwise)
    pub segments: usize,
    pub level: Option<u32>,
    /// final gap must be below rel_tol · ‖γ‖_𝒳
    pub rel_tol: f64,
    pub decreasing: bool,
    pub final_below: bool,
    /// every H consumed a noise path with the same checksum, per replication
    pub common_noise: bool,
}

impl ContinuityCurve {
    pub fn threshold(&self) -> f64 {
        self.rel_tol * self.x_norm.value
    }
}

fn qualify(spec: &IntegrandSpec, gamma: &dyn Integrand) -> Result<()> {
    if spec.tracks_integrator() {
        return Err(Error::NotQualifying(format!(
            "integrand '{spec}' moves with the integrator's H (B_H against dB_H), a case not applicable to \
             the convergence as H -> 1/2: E int B_H dB_H stays near T^(2H)/2 (see the `nonconv` command)"
        )));
    }
    let nu = gamma.nu().unwrap_or(0.0);
    if gamma.is_piecewise_predictable() || nu > 0.0 {
        Ok(())
    } else {
        Err(Error::NotQualifying(format!(
            "integrand '{spec}' has forecast-variance exponent nu = {nu}; continuity in H needs a \
             piecewise-predictable integrand or nu > 0 (try pp:{spec}:8 or fbm:0.75)"
        )))
    }
}

/// Gaps E|I_H(γ) - I_{1/2}(γ)| for each H in `hursts` on common noise.
///
/// Piecewise-predictable integrands are integrated on their own segments,
/// the others through the dyadic projection at `level`.
pub fn continuity_study(
    spec: &IntegrandSpec,
    hursts: &[f64],
    ensemble: &Ensemble,
    level: u32,
    rel_tol: f64,
) -> Result<ContinuityCurve> {
    let horizon = ensemble.grid.horizon();
    let gamma = spec.build(horizon, &HurstParameter::BROWNIAN)?;
    qualify(spec, gamma.as_ref())?;
    if hursts.is_empty() {
        return Err(Error::InvalidArgument("empty Hurst sequence".into()));
    }
    let cells = ensemble.grid.horizon_cells();
    let (seg_grid, used_level) = match spec {
        _ if gamma.is_deterministic() => (SegmentGrid::single(&ensemble.grid)?, None),
        IntegrandSpec::Frozen(_, n) => (SegmentGrid::uniform(*n, &ensemble.grid)?, None),
        _ => (SegmentGrid::dyadic(level, &ensemble.grid)?, Some(level)),
    };
    let info = if gamma.is_deterministic() {
        InformationSchedule::pathwise(cells)
    } else {
        InformationSchedule::frozen(&seg_grid)
    };
    let mut all = vec![HurstParameter::BROWNIAN];
    for &h in hursts {
        all.push(HurstParameter::new(h)?);
    }
    let schemes = all
        .iter()
        .map(|hp| MvnScheme::shared(*hp, &ensemble.grid))
        .collect::<Result<Vec<_>>>()?;
    let rows = ensemble.map(|_, noise| -> Result<(Vec<f64>, bool)> {
        let ctx = PathContext::new(noise);
        let g = gamma.sample(&ctx, &info)?;
        let reference = noise.checksum();
        let mut same = true;
        let mut vals = Vec::with_capacity(schemes.len());
        for s in &schemes {
            let real = s.realize(noise);
            same &= real.noise().checksum() == reference;
            vals.push(delayed_integral_values(&real, &g, &seg_grid).value);
        }
        Ok((vals, same))
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let common_noise = rows.iter().all(|r| r.1);
    let gaps: Vec<MCResult> = (1..all.len())
        .map(|i| {
            let d: Vec<f64> = rows.iter().map(|r| (r.0[i] - r.0[0]).abs()).collect();
            MCResult::from_samples(&d, ensemble.seed, 0.0)
        })
        .collect();
    let xn = x_norm(gamma.as_ref(), ensemble)?;
    let decreasing = gaps
        .windows(2)
        .all(|w| w[1].estimate <= w[0].estimate + w[1].std_error.max(w[0].std_error));
    let final_below = gaps.last().unwrap().estimate < rel_tol * xn.value;
    Ok(ContinuityCurve {
        integrand: spec.clone(),
        hurst_values: hursts.to_vec(),
        gaps,
        seed: ensemble.seed,
        x_norm: xn,
        segments: seg_grid.len(),
        level: used_level,
        rel_tol,
        decreasing,
        final_below,
        common_noise,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub integrand: IntegrandSpec,
    pub hurst: f64,
    pub levels: Vec<u32>,
    /// E|I_H(γ_{n+1}) - I_H(γ_n)| for n = levels[..len-1]
    pub gaps: Vec<MCResult>,
    pub slope: Option<f64>,
    pub slope_se: Option<f64>,
    /// slope ± 2 SE
    pub band: Option<(f64, f64)>,
    /// -(ν/2 + H - 1/2)
    pub target: Option<f64>,
    pub seed: u64,
}

/// Log₂ slope of the extension gaps over `levels` (consecutive).
pub fn cauchy_decay_study(spec: &IntegrandSpec, hp: &HurstParameter, levels: &[u32], ensemble: &Ensemble) -> Result<DecayFit> {
    if levels.len() < 2 || levels.windows(2).any(|w| w[1] != w[0] + 1) {
        return Err(Error::InvalidArgument("decay study needs at least two consecutive levels".into()));
    }
    let gamma = spec.build(ensemble.grid.horizon(), hp)?;
    let nu = gamma.nu().ok_or_else(|| {
        Error::NotQualifying(format!("integrand '{spec}' has no closed-form forecast variance"))
    })?;
    let rows = projected_values(gamma.as_ref(), hp, ensemble, levels)?;
    let (gaps, _) = level_gaps(&rows, ensemble.seed);
    let means: Vec<MCResult> = (0..levels.len())
        .map(|i| MCResult::from_samples(&rows.iter().map(|r| r[i]).collect::<Vec<_>>(), ensemble.seed, 0.0))
        .collect();
    let fit = if gamma.is_deterministic() {
        None
    } else {
        fit_gap_slope(&levels[..levels.len() - 1], &gaps, quadrature_floor(&means))
    };
    Ok(DecayFit {
        integrand: spec.clone(),
        hurst: hp.h(),
        levels: levels.to_vec(),
        gaps,
        slope: fit.map(|f| f.0),
        slope_se: fit.map(|f| f.1),
        band: fit.map(|(s, se)| (s - 2.0 * se, s + 2.0 * se)),
        target: nu.is_finite().then(|| -(nu / 2.0 + hp.h() - 0.5)),
        seed: ensemble.seed,
    })
}
