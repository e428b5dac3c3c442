//! Second-moment checks for 𝒟R_H and the fBm law.
//!
//! Each Monte Carlo estimate is compared with its continuum closed form. The
//! allowed deviation is 3 SE plus two declared budgets, both computed
//! exactly rather than estimated:
//! - truncation: the part of the closed form carried by history older than -L;
//! - discretization: closed form - truncation - exact expectation of the
//!   discrete estimator (cell-averaged kernels lose within-cell variation).

use serde::{Deserialize, Serialize};

use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::hurst::HurstParameter;
use crate::process::{dr_energy_closed_form, dr_second_moment_closed_form, fbm_covariance};
use crate::scheme::MvnScheme;
use crate::stats::{compensated_sum, sample_moments, MCResult, SampleMoments};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentCheck {
    pub quantity: String,
    pub hurst: f64,
    pub span: f64,
    pub mc: MCResult,
    pub closed_form: f64,
    /// exact expectation of the discrete estimator
    pub discrete_expectation: f64,
    pub discretization_budget: f64,
    pub pass: bool,
}

impl MomentCheck {
    fn new(quantity: &str, hurst: f64, span: f64, samples: &[f64], seed: u64, closed: f64, trunc: f64, discrete: f64) -> Self {
        let mc = MCResult::from_samples(samples, seed, trunc);
        let disc = closed - trunc - discrete;
        let pass = mc.within(closed, 3.0, disc.abs() + 1e-14 * closed.abs());
        MomentCheck {
            quantity: quantity.to_string(),
            hurst,
            span,
            mc,
            closed_form: closed,
            discrete_expectation: discrete,
            discretization_budget: disc,
            pass,
        }
    }

    /// Total declared budget (truncation + |discretization|).
    pub fn budget(&self) -> f64 {
        self.mc.truncation_budget + self.discretization_budget.abs()
    }

    /// Deviation in units of SE after removing the budgets.
    pub fn excess_z(&self) -> f64 {
        let d = (self.mc.estimate - self.closed_form).abs() - self.budget();
        if self.mc.std_error > 0.0 {
            d.max(0.0) / self.mc.std_error
        } else if d > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrMomentsReport {
    pub pointwise: MomentCheck,
    pub energy: MomentCheck,
}

fn check_reps(ensemble: &Ensemble, min: usize) -> Result<()> {
    if ensemble.replications < min {
        return Err(Error::InvalidArgument(format!(
            "needs at least {min} replications, got {}",
            ensemble.replications
        )));
    }
    Ok(())
}

/// E 𝒟R_H(span)² and E ∫_0^span 𝒟R_H² for a segment starting at 0.
pub fn verify_dr_moments(hp: &HurstParameter, span: f64, ensemble: &Ensemble) -> Result<DrMomentsReport> {
    check_reps(ensemble, 100)?;
    let grid = &ensemble.grid;
    let j = grid.index_of(span)?;
    if j == 0 {
        return Err(Error::InvalidArgument("span must be positive".into()));
    }
    let scheme = MvnScheme::shared(*hp, grid)?;
    let w = scheme.dr_weights(0, span);
    let dt = grid.step();
    let pairs = ensemble.map(|_, noise| {
        if hp.is_brownian() {
            return (0.0, 0.0);
        }
        let dr = scheme.apply_weights(noise, &w);
        let tail = scheme.tail_increments(noise);
        let energy = compensated_sum(tail[..j].iter().map(|x| x * x / dt));
        (dr * dr, energy)
    });
    let point: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let energy: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    Ok(DrMomentsReport {
        pointwise: MomentCheck::new(
            "E DR_H(t)^2",
            hp.h(),
            span,
            &point,
            ensemble.seed,
            dr_second_moment_closed_form(hp, span),
            scheme.dr_pointwise_truncation(span),
            scheme.dr_second_moment_discrete(0, span),
        ),
        energy: MomentCheck::new(
            "E int DR_H^2",
            hp.h(),
            span,
            &energy,
            ensemble.seed,
            dr_energy_closed_form(hp, span),
            scheme.dr_energy_truncation(0.0, span),
            scheme.dr_energy_discrete(0, j),
        ),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FbmLawReport {
    pub variance: MomentCheck,
    pub covariance: MomentCheck,
    pub w_variance: MomentCheck,
    /// moments of B_H(t1) with normal-theory standard errors sqrt(6/n), sqrt(24/n)
    pub shape: SampleMoments,
    pub skewness_se: f64,
    pub kurtosis_se: f64,
}

/// Var B_H(t1), Cov(B_H(t1), B_H(t2)) and E W_H(t1)² (segment at 0).
pub fn verify_fbm_law(hp: &HurstParameter, t1: f64, t2: f64, ensemble: &Ensemble) -> Result<FbmLawReport> {
    check_reps(ensemble, 100)?;
    let grid = &ensemble.grid;
    let j1 = grid.index_of(t1)?;
    let j2 = grid.index_of(t2)?;
    let scheme = MvnScheme::shared(*hp, grid)?;
    let triples = ensemble.map(|_, noise| (scheme.fbm_at(noise, j1), scheme.fbm_at(noise, j2), scheme.w_at(noise, 0, j1)));
    let x: Vec<f64> = triples.iter().map(|t| t.0).collect();
    let var: Vec<f64> = x.iter().map(|v| v * v).collect();
    let cov: Vec<f64> = triples.iter().map(|t| t.0 * t.1).collect();
    let wv: Vec<f64> = triples.iter().map(|t| t.2 * t.2).collect();
    let n = x.len() as f64;
    let w_disc = scheme.scale() * scheme.scale() * grid.step() * compensated_sum((1..=j1).map(|d| scheme.phi(d as i64).powi(2)));
    Ok(FbmLawReport {
        variance: MomentCheck::new(
            "Var B_H(t)",
            hp.h(),
            t1,
            &var,
            ensemble.seed,
            fbm_covariance(hp, t1, t1),
            scheme.fbm_truncation(t1, t1),
            scheme.fbm_covariance_discrete(j1, j1),
        ),
        covariance: MomentCheck::new(
            "Cov B_H(t) B_H(u)",
            hp.h(),
            t1,
            &cov,
            ensemble.seed,
            fbm_covariance(hp, t1, t2),
            scheme.fbm_truncation(t1, t2),
            scheme.fbm_covariance_discrete(j1, j2),
        ),
        w_variance: MomentCheck::new(
            "E W_H(t)^2",
            hp.h(),
            t1,
            &wv,
            ensemble.seed,
            crate::process::w_variance(hp, t1),
            0.0,
            w_disc,
        ),
        shape: sample_moments(&x),
        skewness_se: (6.0 / n).sqrt(),
        kurtosis_se: (24.0 / n).sqrt(),
    })
}
