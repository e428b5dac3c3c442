//! Hurst index and the Mandelbrot-Van Ness normalizing constant
//!
//! c_H = sqrt(2H Γ(3/2 - H) / (Γ(1/2 + H) Γ(2 - 2H))), chosen so that
//! Var B_H(t) = t^{2H}.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

/// Validated Hurst index in [1/2, 1) with its derived constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct HurstParameter {
    h: f64,
    c_h: f64,
    d_h: f64,
}

impl HurstParameter {
    pub const BROWNIAN: HurstParameter = HurstParameter { h: 0.5, c_h: 1.0, d_h: 0.0 };

    pub fn new(h: f64) -> Result<Self> {
        if !(0.5..1.0).contains(&h) {
            return Err(Error::HurstOutOfRange(h));
        }
        if h == 0.5 {
            return Ok(Self::BROWNIAN);
        }
        let c_h = (2.0 * h * gamma(1.5 - h) / (gamma(0.5 + h) * gamma(2.0 - 2.0 * h))).sqrt();
        Ok(HurstParameter { h, c_h, d_h: c_h * (h - 0.5) })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn c_h(&self) -> f64 {
        self.c_h
    }

    pub fn d_h(&self) -> f64 {
        self.d_h
    }

    /// Exponent H - 1/2 of the moving-average kernel.
    pub fn alpha(&self) -> f64 {
        self.h - 0.5
    }

    pub fn is_brownian(&self) -> bool {
        self.h == 0.5
    }
}

impl TryFrom<f64> for HurstParameter {
    type Error = Error;
    fn try_from(h: f64) -> Result<Self> {
        HurstParameter::new(h)
    }
}

impl From<HurstParameter> for f64 {
    fn from(hp: HurstParameter) -> f64 {
        hp.h
    }
}

pub fn hurst_constant(h: f64) -> Result<HurstParameter> {
    HurstParameter::new(h)
}
