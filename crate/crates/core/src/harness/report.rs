//! CSV tables for the harness reports. Floats use Rust's shortest round-trip
//! formatting so reruns with the same seed are byte-identical.

use std::io::Write;

use crate::error::Result;

use super::continuity::{ContinuityCurve, DecayFit};
use super::identities::{NonconvergenceReport, ShiryaevReport};
use super::moments::MomentCheck;

fn f(x: f64) -> String {
    format!("{x:?}")
}

fn opt(x: Option<f64>) -> String {
    x.map(f).unwrap_or_default()
}

pub fn write_moment_checks<W: Write>(out: W, checks: &[&MomentCheck]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["h", "span", "quantity", "estimate", "closed_form", "se", "budget", "pass"])?;
    for c in checks {
        w.write_record([
            f(c.hurst),
            f(c.span),
            c.quantity.clone(),
            f(c.mc.estimate),
            f(c.closed_form),
            f(c.mc.std_error),
            f(c.budget()),
            c.pass.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_continuity<W: Write>(out: W, curve: &ContinuityCurve) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["h", "gap", "se"])?;
    for (h, g) in curve.hurst_values.iter().zip(&curve.gaps) {
        w.write_record([f(*h), f(g.estimate), f(g.std_error)])?;
    }
    w.flush()?;
    Ok(())
}

/// One row per gap level; the fitted slope is repeated on every row.
pub fn write_decay<W: Write>(out: W, fit: &DecayFit) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["level", "gap", "se", "fitted_slope"])?;
    for (n, g) in fit.levels.iter().zip(&fit.gaps) {
        w.write_record([n.to_string(), f(g.estimate), f(g.std_error), opt(fit.slope)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_nonconvergence<W: Write>(out: W, report: &NonconvergenceReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["h", "riemann", "ito", "gap", "se", "expected_gap", "refinement_bias", "corrected_gap"])?;
    for r in &report.rows {
        w.write_record([
            f(r.hurst),
            f(r.riemann.estimate),
            f(r.ito.estimate),
            f(r.gap.estimate),
            f(r.gap.std_error),
            f(r.expected_gap),
            f(r.refinement_bias),
            f(r.corrected_gap),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_shiryaev<W: Write>(out: W, report: &ShiryaevReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["h", "steps", "defect", "se", "expected"])?;
    for r in &report.rows {
        w.write_record([f(report.hurst), r.steps.to_string(), f(r.defect.estimate), f(r.defect.std_error), f(r.expected)])?;
    }
    w.flush()?;
    Ok(())
}
