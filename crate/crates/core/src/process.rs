//! B, B_H, W_H, R_H and 𝒟R_H synthesized from a noise path.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hurst::HurstParameter;
use crate::noise::NoisePath;
use crate::scheme::MvnScheme;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProcessKind {
    #[serde(rename = "B")]
    Brownian,
    #[serde(rename = "B_H")]
    Fbm,
    #[serde(rename = "W_H")]
    W,
    #[serde(rename = "R_H")]
    R,
    #[serde(rename = "DR_H")]
    Dr,
}

impl ProcessKind {
    pub fn label(&self) -> &'static str {
        match self {
            ProcessKind::Brownian => "B",
            ProcessKind::Fbm => "B_H",
            ProcessKind::W => "W_H",
            ProcessKind::R => "R_H",
            ProcessKind::Dr => "DR_H",
        }
    }
}

impl std::str::FromStr for ProcessKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "b" | "bm" => Ok(ProcessKind::Brownian),
            "b_h" | "bh" | "fbm" => Ok(ProcessKind::Fbm),
            "w_h" | "wh" | "w" => Ok(ProcessKind::W),
            "r_h" | "rh" | "r" => Ok(ProcessKind::R),
            "dr_h" | "drh" | "dr" => Ok(ProcessKind::Dr),
            _ => Err(Error::InvalidArgument(format!(
                "unknown process kind '{s}'; expected one of B, B_H, W_H, R_H, DR_H"
            ))),
        }
    }
}

/// Values on the grid points t_j >= segment_start (for 𝒟R_H: t_j > segment_start).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessPath {
    pub kind: ProcessKind,
    pub hurst: HurstParameter,
    pub segment_start: f64,
    pub step: f64,
    pub seed: u64,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl ProcessPath {
    /// CSV with a `time,<kind>[h=..;seed=..]` header row.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let label = format!("{}[h={};seed={}]", self.kind.label(), self.hurst.h(), self.seed);
        w.write_record(["time", label.as_str()])?;
        for (t, v) in self.times.iter().zip(&self.values) {
            w.write_record([format!("{t}"), format!("{v:e}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn synthesize_brownian(noise: &NoisePath) -> ProcessPath {
    let g = noise.grid();
    let vals = noise.brownian_path();
    ProcessPath {
        kind: ProcessKind::Brownian,
        hurst: HurstParameter::BROWNIAN,
        segment_start: 0.0,
        step: g.step(),
        seed: noise.seed(),
        times: (0..vals.len()).map(|j| g.time(j)).collect(),
        values: vals,
    }
}

/// B_H on [0, T] with B_H(0) = 0.
pub fn synthesize_fbm(noise: &NoisePath, hp: &HurstParameter) -> Result<ProcessPath> {
    let g = noise.grid();
    let scheme = MvnScheme::shared(*hp, g)?;
    let vals = scheme.realize(noise).fbm_path();
    Ok(ProcessPath {
        kind: ProcessKind::Fbm,
        hurst: *hp,
        segment_start: 0.0,
        step: g.step(),
        seed: noise.seed(),
        times: (0..vals.len()).map(|j| g.time(j)).collect(),
        values: vals,
    })
}

fn segment_indices(noise: &NoisePath, seg_start: f64, t: f64) -> Result<(usize, usize)> {
    let g = noise.grid();
    let a = g.index_of(seg_start)?;
    let j = g.index_of(t)?;
    if j < a {
        return Err(Error::OutOfRange { t, lo: seg_start, hi: g.horizon() });
    }
    Ok((a, j))
}

/// W_H(t) = c_H ∫_{seg_start}^t (t-r)^{H-1/2} dB(r); both times on the grid.
pub fn synthesize_w(noise: &NoisePath, hp: &HurstParameter, seg_start: f64, t: f64) -> Result<f64> {
    let (a, j) = segment_indices(noise, seg_start, t)?;
    let scheme = MvnScheme::shared(*hp, noise.grid())?;
    Ok(scheme.w_at(noise, a, j))
}

/// 𝒟R_H(t) for the segment starting at the grid point `seg_start`; `t` may
/// lie anywhere in (seg_start, T].
pub fn synthesize_dr(noise: &NoisePath, hp: &HurstParameter, seg_start: f64, t: f64) -> Result<f64> {
    let g = noise.grid();
    let a = g.index_of(seg_start)?;
    if !(t > seg_start) || t > g.horizon() * (1.0 + 1e-12) {
        return Err(Error::OutOfRange { t, lo: seg_start, hi: g.horizon() });
    }
    if hp.is_brownian() {
        return Ok(0.0);
    }
    let scheme = MvnScheme::shared(*hp, g)?;
    Ok(scheme.dr_at(noise, a, t))
}

fn segment_path(
    noise: &NoisePath,
    hp: &HurstParameter,
    kind: ProcessKind,
    seg_start: f64,
    values: Vec<f64>,
    first: usize,
) -> ProcessPath {
    let g = noise.grid();
    ProcessPath {
        kind,
        hurst: *hp,
        segment_start: seg_start,
        step: g.step(),
        seed: noise.seed(),
        times: (0..values.len()).map(|i| g.time(first + i)).collect(),
        values,
    }
}

/// W_H on the grid points of [seg_start, T].
pub fn w_path(noise: &NoisePath, hp: &HurstParameter, seg_start: f64) -> Result<ProcessPath> {
    let g = noise.grid();
    let a = g.index_of(seg_start)?;
    let scheme = MvnScheme::shared(*hp, g)?;
    let inc = scheme.realize(noise).local_increments(a, g.horizon_cells());
    Ok(segment_path(noise, hp, ProcessKind::W, seg_start, cumulative(&inc), a))
}

/// R_H on the grid points of [seg_start, T], by integrating 𝒟R_H.
pub fn r_path(noise: &NoisePath, hp: &HurstParameter, seg_start: f64) -> Result<ProcessPath> {
    let g = noise.grid();
    let a = g.index_of(seg_start)?;
    let scheme = MvnScheme::shared(*hp, g)?;
    let inc = scheme.realize(noise).dr_cell_increments(a, g.horizon_cells());
    Ok(segment_path(noise, hp, ProcessKind::R, seg_start, cumulative(&inc), a))
}

/// R_H(t) by the history kernel f(t,r) directly; cross-check for [`r_path`].
pub fn r_direct(noise: &NoisePath, hp: &HurstParameter, seg_start: f64, t: f64) -> Result<f64> {
    let (a, j) = segment_indices(noise, seg_start, t)?;
    let scheme = MvnScheme::shared(*hp, noise.grid())?;
    Ok(scheme.r_direct_at(noise, a, j))
}

/// 𝒟R_H on the grid points of (seg_start, T].
pub fn dr_path(noise: &NoisePath, hp: &HurstParameter, seg_start: f64) -> Result<ProcessPath> {
    let g = noise.grid();
    let a = g.index_of(seg_start)?;
    let n = g.horizon_cells();
    let vals = if hp.is_brownian() {
        vec![0.0; n - a]
    } else {
        let scheme = MvnScheme::shared(*hp, g)?;
        (a + 1..=n).map(|j| scheme.dr_at(noise, a, g.time(j))).collect()
    };
    Ok(segment_path(noise, hp, ProcessKind::Dr, seg_start, vals, a + 1))
}

fn cumulative(inc: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(inc.len() + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for v in inc {
        acc += v;
        out.push(acc);
    }
    out
}

/// E 𝒟R_H(t)² = c_H²(H-1/2)²/(2-2H) (t-s)^{2H-2}.
pub fn dr_second_moment_closed_form(hp: &HurstParameter, span: f64) -> f64 {
    if hp.is_brownian() {
        return 0.0;
    }
    let h = hp.h();
    hp.d_h() * hp.d_h() / (2.0 - 2.0 * h) * span.powf(2.0 * h - 2.0)
}

/// E ∫_s^t 𝒟R_H(r)² dr = c_H²(H-1/2)/(2(2-2H)) (t-s)^{2H-1}.
pub fn dr_energy_closed_form(hp: &HurstParameter, span: f64) -> f64 {
    if hp.is_brownian() {
        return 0.0;
    }
    let h = hp.h();
    hp.c_h() * hp.d_h() / (2.0 * (2.0 - 2.0 * h)) * span.powf(2.0 * h - 1.0)
}

/// Cov(B_H(t), B_H(u)) = ½(t^{2H} + u^{2H} - |t-u|^{2H}).
pub fn fbm_covariance(hp: &HurstParameter, t: f64, u: f64) -> f64 {
    let e = 2.0 * hp.h();
    0.5 * (t.abs().powf(e) + u.abs().powf(e) - (t - u).abs().powf(e))
}

/// E W_H(t)² = c_H²(t-s)^{2H}/(2H).
pub fn w_variance(hp: &HurstParameter, span: f64) -> f64 {
    hp.c_h() * hp.c_h() * span.powf(2.0 * hp.h()) / (2.0 * hp.h())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SimulationGrid;
    use crate::hurst::hurst_constant;

    #[test]
    fn closed_form_oracles() {
        let hp = hurst_constant(0.75).unwrap();
        assert!((dr_energy_closed_form(&hp, 1.0) - 0.28603491131318).abs() < 1e-12);
        assert!((dr_second_moment_closed_form(&hp, 1.0) - 0.14301745565659).abs() < 1e-12);
        let hp9 = hurst_constant(0.9).unwrap();
        assert!((dr_energy_closed_form(&hp9, 1.0) - 0.658078939974121).abs() < 1e-12);
        let bm = HurstParameter::BROWNIAN;
        assert_eq!(dr_energy_closed_form(&bm, 3.0), 0.0);
        assert_eq!(dr_second_moment_closed_form(&bm, 3.0), 0.0);
        // homogeneity
        let r = dr_second_moment_closed_form(&hp, 2.0) / dr_second_moment_closed_form(&hp, 1.0);
        assert!((r - 2f64.powf(-0.5)).abs() < 1e-14);
        let r = dr_energy_closed_form(&hp, 2.0) / dr_energy_closed_form(&hp, 1.0);
        assert!((r - 2f64.powf(0.5)).abs() < 1e-14);
        assert!((fbm_covariance(&hp, 1.0, 0.5) - 0.5).abs() < 1e-15);
        assert!((w_variance(&hp, 1.0) - 1.1441396452527197821 / 1.5).abs() < 1e-14);
    }

    #[test]
    fn segment_values_and_errors() {
        let g = SimulationGrid::new(1.0, 128, 2.0).unwrap();
        let p = NoisePath::generate(4, &g);
        let hp = hurst_constant(0.7).unwrap();
        assert_eq!(synthesize_w(&p, &hp, 0.25, 0.25).unwrap(), 0.0);
        assert!(synthesize_w(&p, &hp, 0.5, 0.25).is_err());
        assert!(synthesize_dr(&p, &hp, 0.5, 0.5).is_err());
        assert!(synthesize_dr(&p, &hp, 0.5, 0.4).is_err());
        let bm = HurstParameter::BROWNIAN;
        let b = p.brownian_path();
        let w = synthesize_w(&p, &bm, 0.25, 0.75).unwrap();
        assert!((w - (b[96] - b[32])).abs() < 1e-13);
        assert_eq!(synthesize_dr(&p, &bm, 0.25, 0.75).unwrap(), 0.0);
        let r = r_path(&p, &bm, 0.25).unwrap();
        assert!(r.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn fbm_minus_segment_start_is_w_plus_r() {
        let g = SimulationGrid::new(1.0, 256, 4.0).unwrap();
        let p = NoisePath::generate(8, &g);
        for h in [0.55, 0.8] {
            let hp = hurst_constant(h).unwrap();
            let bh = synthesize_fbm(&p, &hp).unwrap();
            let w = w_path(&p, &hp, 0.375).unwrap();
            let r = r_path(&p, &hp, 0.375).unwrap();
            assert_eq!(w.values[0], 0.0);
            let a = 96;
            for (i, t) in w.times.iter().enumerate() {
                let j = a + i;
                assert!((*t - g.time(j)).abs() < 1e-15);
                let lhs = bh.values[j] - bh.values[a];
                assert!((lhs - w.values[i] - r.values[i]).abs() < 1e-12, "h={h} j={j}");
                if i % 40 == 0 {
                    let rd = r_direct(&p, &hp, 0.375, *t).unwrap();
                    assert!((rd - r.values[i]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn csv_header_names_kind_h_and_seed() {
        let g = SimulationGrid::new(1.0, 64, 1.0).unwrap();
        let p = NoisePath::generate(21, &g);
        let path = synthesize_fbm(&p, &hurst_constant(0.75).unwrap()).unwrap();
        let mut buf = Vec::new();
        path.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("time,B_H[h=0.75;seed=21]\n0,0e0\n"), "{}", &text[..60]);
        assert_eq!(text.lines().count(), 66);
    }
}
