//! Integrands: pathwise values, conditional expectations E_τ γ(t) and the
//! forecast variance E Var_τ γ(t), dyadic projections and the 𝒳 / 𝒴 norms.
//!
//! Values are taken at left endpoints t_j of the fine cells. Conditioning on
//! 𝒢_τ keeps the noise cells that end at or before τ and drops the rest.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::conv::convolve_window;
use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::grid::SegmentGrid;
use crate::hurst::HurstParameter;
use crate::kernel::{mvn_kernel, SampledFunction};
use crate::noise::NoisePath;
use crate::scheme::MvnScheme;
use crate::stats::{compensated_sum, MCResult};

/// Information index per fine cell: on `start..end` the value at t_j is
/// conditioned on 𝒢 at t_info, or on 𝒢_{t_j} itself when `info` is `None`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InfoRun {
    pub start: usize,
    pub end: usize,
    pub info: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InformationSchedule {
    cells: usize,
    runs: Vec<InfoRun>,
}

impl InformationSchedule {
    pub fn pathwise(cells: usize) -> Self {
        InformationSchedule { cells, runs: vec![InfoRun { start: 0, end: cells, info: None }] }
    }

    /// Frozen at each segment's left endpoint.
    pub fn frozen(grid: &SegmentGrid) -> Self {
        let cells = *grid.indices().last().unwrap();
        let runs = grid.segments().map(|(a, b)| InfoRun { start: a, end: b, info: Some(a) }).collect();
        InformationSchedule { cells, runs }
    }

    /// Frozen on `parts` equal blocks; `parts` must divide `cells`.
    pub fn blocks(cells: usize, parts: usize) -> Result<Self> {
        if parts == 0 || cells % parts != 0 {
            return Err(Error::InvalidArgument(format!("{parts} blocks do not divide {cells} cells")));
        }
        let m = cells / parts;
        let runs = (0..parts).map(|k| InfoRun { start: k * m, end: (k + 1) * m, info: Some(k * m) }).collect();
        Ok(InformationSchedule { cells, runs })
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn runs(&self) -> &[InfoRun] {
        &self.runs
    }

    pub fn info_at(&self, j: usize) -> usize {
        let r = self.runs.iter().find(|r| r.start <= j && j < r.end).expect("cell out of schedule");
        r.info.unwrap_or(j)
    }

    /// Conditioning on the smaller information set cell by cell.
    pub fn restrict(&self, other: &InformationSchedule) -> InformationSchedule {
        assert_eq!(self.cells, other.cells, "schedules over different grids");
        let mut cuts: Vec<usize> = self
            .runs
            .iter()
            .chain(other.runs.iter())
            .flat_map(|r| [r.start, r.end])
            .collect();
        cuts.sort_unstable();
        cuts.dedup();
        let mut runs: Vec<InfoRun> = Vec::new();
        for w in cuts.windows(2) {
            let (s, e) = (w[0], w[1]);
            let a = self.run_info(s);
            let b = other.run_info(s);
            let info = match (a, b) {
                (None, x) | (x, None) => x,
                (Some(x), Some(y)) => Some(x.min(y)),
            };
            match runs.last_mut() {
                Some(last) if last.info == info && info.is_some() && last.end == s => last.end = e,
                _ => runs.push(InfoRun { start: s, end: e, info }),
            }
        }
        InformationSchedule { cells: self.cells, runs }
    }

    fn run_info(&self, j: usize) -> Option<usize> {
        self.runs.iter().find(|r| r.start <= j && j < r.end).and_then(|r| r.info)
    }

    /// True when every cell of [a, b) is conditioned at or before t_a.
    pub fn measurable_at(&self, a: usize, b: usize) -> bool {
        self.runs.iter().filter(|r| r.end > a && r.start < b).all(|r| match r.info {
            Some(c) => c <= a,
            None => r.end.min(b) <= a + 1,
        })
    }
}

/// A noise path plus cached per-path fields shared by integrands.
pub struct PathContext<'a> {
    pub noise: &'a NoisePath,
    cache: Mutex<HashMap<(u8, u64), Arc<Vec<f64>>>>,
}

impl fmt::Debug for PathContext<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PathContext").field("seed", &self.noise.seed()).finish()
    }
}

impl<'a> PathContext<'a> {
    pub fn new(noise: &'a NoisePath) -> Self {
        PathContext { noise, cache: Mutex::new(HashMap::new()) }
    }

    fn cached(&self, key: (u8, u64), make: impl FnOnce() -> Result<Vec<f64>>) -> Result<Arc<Vec<f64>>> {
        if let Some(v) = self.cache.lock().unwrap().get(&key) {
            return Ok(v.clone());
        }
        let v = Arc::new(make()?);
        self.cache.lock().unwrap().insert(key, v.clone());
        Ok(v)
    }

    /// B_H(t_j), j = 0..=N.
    pub fn fbm_path(&self, hp: &HurstParameter) -> Result<Arc<Vec<f64>>> {
        self.cached((0, hp.h().to_bits()), || {
            let s = MvnScheme::shared(*hp, self.noise.grid())?;
            Ok(s.realize(self.noise).fbm_path())
        })
    }

    /// W_H(t_j) for the segment starting at 0, j = 0..=N.
    pub fn rl_path(&self, hp: &HurstParameter) -> Result<Arc<Vec<f64>>> {
        self.cached((1, hp.h().to_bits()), || {
            let s = MvnScheme::shared(*hp, self.noise.grid())?;
            let n = self.noise.grid().horizon_cells();
            let inc = s.realize(self.noise).local_increments(0, n);
            let mut out = Vec::with_capacity(n + 1);
            let mut acc = 0.0;
            out.push(0.0);
            for v in inc {
                acc += v;
                out.push(acc);
            }
            Ok(out)
        })
    }

    pub fn brownian_path(&self) -> Result<Arc<Vec<f64>>> {
        self.cached((2, 0), || Ok(self.noise.brownian_path()))
    }
}

/// The integrand contract.
pub trait Integrand: fmt::Debug + Send + Sync {
    fn label(&self) -> String;

    /// E[γ(t_j) | 𝒢 at the schedule's information index], j = 0..N.
    fn sample(&self, ctx: &PathContext, info: &InformationSchedule) -> Result<Vec<f64>>;

    /// E_τ γ(t) for grid times τ <= t (τ >= t gives the pathwise value).
    fn cond_exp(&self, ctx: &PathContext, tau: f64, t: f64) -> Result<f64>;

    /// E Var_τ γ(t), closed form.
    fn cond_var(&self, tau: f64, t: f64) -> f64;

    fn value(&self, ctx: &PathContext, t: f64) -> Result<f64> {
        self.cond_exp(ctx, t, t)
    }

    /// γ(t) is known at t - ε. Deterministic integrands report +∞,
    /// piecewise-predictable ones their segment length.
    fn predictability(&self) -> Option<f64> {
        None
    }

    /// Own information structure on `cells` fine cells.
    fn schedule(&self, cells: usize) -> InformationSchedule {
        InformationSchedule::pathwise(cells)
    }

    fn is_deterministic(&self) -> bool {
        false
    }

    /// Largest ν with γ ∈ 𝒴_ν by the closed-form forecast variance.
    fn nu(&self) -> Option<f64>;

    /// Member of 𝒳^d: measurable at the left end of each segment of a grid.
    fn is_piecewise_predictable(&self) -> bool {
        self.is_deterministic()
    }
}

fn grid_index(ctx: &PathContext, t: f64) -> Result<usize> {
    ctx.noise.grid().index_of(t)
}

// ---------------------------------------------------------------- deterministic

#[derive(Debug, Clone, PartialEq)]
pub enum Deterministic {
    Const(f64),
    /// a0 + a1 t + a2 t² + ...
    Poly(Vec<f64>),
    Sampled(SampledFunction),
}

impl Deterministic {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Deterministic::Const(c) => *c,
            Deterministic::Poly(a) => a.iter().rev().fold(0.0, |acc, c| acc * t + c),
            Deterministic::Sampled(g) => g.value_at(t),
        }
    }
}

impl Integrand for Deterministic {
    fn label(&self) -> String {
        match self {
            Deterministic::Const(c) => format!("det:const:{c}"),
            Deterministic::Poly(a) => {
                format!("det:poly:{}", a.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(","))
            }
            Deterministic::Sampled(g) => format!("det:sampled[{}]", g.values.len()),
        }
    }

    fn sample(&self, ctx: &PathContext, _info: &InformationSchedule) -> Result<Vec<f64>> {
        let g = ctx.noise.grid();
        Ok((0..g.horizon_cells()).map(|j| self.eval(g.time(j))).collect())
    }

    fn cond_exp(&self, _ctx: &PathContext, _tau: f64, t: f64) -> Result<f64> {
        Ok(self.eval(t))
    }

    fn cond_var(&self, _tau: f64, _t: f64) -> f64 {
        0.0
    }

    fn predictability(&self) -> Option<f64> {
        Some(f64::INFINITY)
    }

    fn is_deterministic(&self) -> bool {
        true
    }

    fn nu(&self) -> Option<f64> {
        Some(f64::INFINITY)
    }
}

// ---------------------------------------------------------------- Wiener integrals

/// γ(t) = ∫_{-L}^t k(t,r) dB(r).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WienerKernel {
    /// k = 1 on [0, t): γ = B
    Brownian,
    /// Mandelbrot-Van Ness kernel with origin 0: γ = B_{H1}
    Fbm(HurstParameter),
    /// c (t-r)^{H1-1/2} on [0, t): γ = W_{H1} started at 0
    RiemannLiouville(HurstParameter),
}

impl WienerKernel {
    pub fn kernel(&self, t: f64, r: f64) -> Result<f64> {
        match self {
            WienerKernel::Brownian => Ok(if (0.0..t).contains(&r) { 1.0 } else { 0.0 }),
            WienerKernel::Fbm(hp) => Ok(hp.c_h() * mvn_kernel(t, 0.0, r, hp)?),
            WienerKernel::RiemannLiouville(hp) => Ok(if (0.0..t).contains(&r) {
                hp.c_h() * mvn_kernel(t, 0.0, r, hp)?
            } else {
                0.0
            }),
        }
    }

    fn hurst(&self) -> Option<&HurstParameter> {
        match self {
            WienerKernel::Brownian => None,
            WienerKernel::Fbm(hp) | WienerKernel::RiemannLiouville(hp) => Some(hp),
        }
    }
}

impl Integrand for WienerKernel {
    fn label(&self) -> String {
        match self {
            WienerKernel::Brownian => "bm".into(),
            WienerKernel::Fbm(hp) => format!("fbm:{}", hp.h()),
            WienerKernel::RiemannLiouville(hp) => format!("wh:{}", hp.h()),
        }
    }

    fn sample(&self, ctx: &PathContext, info: &InformationSchedule) -> Result<Vec<f64>> {
        let n = ctx.noise.grid().horizon_cells();
        let path = match self {
            WienerKernel::Brownian => ctx.brownian_path()?,
            WienerKernel::Fbm(hp) => ctx.fbm_path(hp)?,
            WienerKernel::RiemannLiouville(hp) => ctx.rl_path(hp)?,
        };
        let mut out = vec![0.0; n];
        let h = ctx.noise.horizon();
        for run in info.runs() {
            match (run.info, self.hurst()) {
                (None, _) => out[run.start..run.end].copy_from_slice(&path[run.start..run.end]),
                (Some(c), None) => out[run.start..run.end].iter_mut().for_each(|v| *v = path[c]),
                (Some(c), Some(hp)) => {
                    // drop scale Σ_{c<=k<j} Φ(j-k) ΔB_k from the pathwise value
                    let scheme = MvnScheme::shared(*hp, ctx.noise.grid())?;
                    let phi: Vec<f64> = (0..=(run.end - c) as i64).map(|d| scheme.phi(d)).collect();
                    let loc = convolve_window(&h[c..run.end], &phi, run.start - c, run.end - run.start);
                    for (i, l) in loc.iter().enumerate() {
                        let j = run.start + i;
                        out[j] = path[j] - scheme.scale() * l;
                    }
                }
            }
        }
        Ok(out)
    }

    fn cond_exp(&self, ctx: &PathContext, tau: f64, t: f64) -> Result<f64> {
        let j = grid_index(ctx, t)?;
        let c = grid_index(ctx, tau)?.min(j);
        let g = ctx.noise.grid();
        match self {
            WienerKernel::Brownian => Ok(ctx.brownian_path()?[c]),
            WienerKernel::Fbm(hp) | WienerKernel::RiemannLiouville(hp) => {
                let scheme = MvnScheme::shared(*hp, g)?;
                let m = g.history_cells() as i64;
                let inc = ctx.noise.increments();
                let lo = if matches!(self, WienerKernel::Fbm(_)) { -m } else { 0 };
                let mut acc = 0.0;
                for k in lo..c as i64 {
                    let z = if lo < 0 { scheme.phi(-k) } else { 0.0 };
                    acc += (scheme.phi(j as i64 - k) - z) * inc[(k + m) as usize];
                }
                Ok(scheme.scale() * acc)
            }
        }
    }

    fn cond_var(&self, tau: f64, t: f64) -> f64 {
        let d = (t - tau).max(0.0);
        match self {
            WienerKernel::Brownian => d,
            WienerKernel::Fbm(hp) | WienerKernel::RiemannLiouville(hp) => {
                hp.c_h() * hp.c_h() * d.powf(2.0 * hp.h()) / (2.0 * hp.h())
            }
        }
    }

    fn nu(&self) -> Option<f64> {
        Some(match self.hurst() {
            None => 0.0,
            Some(hp) => 2.0 * hp.h() - 1.0,
        })
    }
}

// ---------------------------------------------------------------- B²

/// γ(t) = B(t)², E_τ γ(t) = B(τ)² + (t-τ), E Var_τ γ(t) = 4τ(t-τ) + 2(t-τ)².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticBrownian;

impl Integrand for QuadraticBrownian {
    fn label(&self) -> String {
        "bm2".into()
    }

    fn sample(&self, ctx: &PathContext, info: &InformationSchedule) -> Result<Vec<f64>> {
        let b = ctx.brownian_path()?;
        let g = ctx.noise.grid();
        let mut out = vec![0.0; g.horizon_cells()];
        for run in info.runs() {
            for (j, v) in out.iter_mut().enumerate().take(run.end).skip(run.start) {
                let c = run.info.unwrap_or(j);
                *v = b[c] * b[c] + (g.time(j) - g.time(c));
            }
        }
        Ok(out)
    }

    fn cond_exp(&self, ctx: &PathContext, tau: f64, t: f64) -> Result<f64> {
        let j = grid_index(ctx, t)?;
        let c = grid_index(ctx, tau)?.min(j);
        let b = ctx.brownian_path()?;
        let g = ctx.noise.grid();
        Ok(b[c] * b[c] + (g.time(j) - g.time(c)))
    }

    fn cond_var(&self, tau: f64, t: f64) -> f64 {
        let d = (t - tau).max(0.0);
        4.0 * tau * d + 2.0 * d * d
    }

    fn nu(&self) -> Option<f64> {
        Some(0.0)
    }
}

// ---------------------------------------------------------------- 𝒳^d

/// Inner integrand conditioned at the left endpoint of each of `segments`
/// equal segments of [0, horizon].
#[derive(Debug, Clone)]
pub struct PiecewisePredictable {
    inner: Arc<dyn Integrand>,
    segments: usize,
    horizon: f64,
}

impl PiecewisePredictable {
    pub fn new(inner: Arc<dyn Integrand>, segments: usize, horizon: f64) -> Result<Self> {
        if segments == 0 || !(horizon > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "piecewise-predictable integrand needs segments >= 1 and horizon > 0, got {segments}, {horizon}"
            )));
        }
        Ok(PiecewisePredictable { inner, segments, horizon })
    }

    pub fn inner(&self) -> &Arc<dyn Integrand> {
        &self.inner
    }

    pub fn segments(&self) -> usize {
        self.segments
    }

    fn freeze_time(&self, t: f64) -> f64 {
        let w = self.horizon / self.segments as f64;
        let k = ((t / w) * (1.0 + 1e-12)).floor().clamp(0.0, (self.segments - 1) as f64);
        k * w
    }
}

impl Integrand for PiecewisePredictable {
    fn label(&self) -> String {
        format!("pp:{}:{}", self.inner.label(), self.segments)
    }

    fn sample(&self, ctx: &PathContext, info: &InformationSchedule) -> Result<Vec<f64>> {
        let own = self.schedule(info.cells());
        self.inner.sample(ctx, &info.restrict(&own))
    }

    fn cond_exp(&self, ctx: &PathContext, tau: f64, t: f64) -> Result<f64> {
        let f = self.freeze_time(t);
        self.inner.cond_exp(ctx, tau.min(f), t)
    }

    fn cond_var(&self, tau: f64, t: f64) -> f64 {
        let f = self.freeze_time(t);
        if tau >= f {
            0.0
        } else {
            (self.inner.cond_var(tau, t) - self.inner.cond_var(f, t)).max(0.0)
        }
    }

    fn predictability(&self) -> Option<f64> {
        Some(self.horizon / self.segments as f64)
    }

    fn schedule(&self, cells: usize) -> InformationSchedule {
        let base = InformationSchedule::blocks(cells, self.segments)
            .expect("segment count must divide the fine grid");
        self.inner.schedule(cells).restrict(&base)
    }

    fn is_deterministic(&self) -> bool {
        self.inner.is_deterministic()
    }

    fn nu(&self) -> Option<f64> {
        // constant on each segment's information: in every 𝒴_ν for lags
        // below the segment length
        Some(f64::INFINITY)
    }

    fn is_piecewise_predictable(&self) -> bool {
        true
    }
}

/// γ_n(t) = E_{T_k} γ(t) on [T_k, T_{k+1}), T_k = kT/2^n.
pub fn dyadic_projection(gamma: &Arc<dyn Integrand>, n: u32, horizon: f64) -> Result<Arc<dyn Integrand>> {
    if gamma.is_deterministic() {
        return Ok(gamma.clone());
    }
    let parts = 1usize.checked_shl(n).ok_or_else(|| Error::InvalidArgument(format!("level {n} too deep")))?;
    Ok(Arc::new(PiecewisePredictable::new(gamma.clone(), parts, horizon)?))
}

// ---------------------------------------------------------------- specs

/// Textual integrand specification, e.g. `fbm:0.75` or `pp:bm:8`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum IntegrandSpec {
    Const(f64),
    Poly(Vec<f64>),
    Brownian,
    QuadraticBrownian,
    Fbm(f64),
    RiemannLiouville(f64),
    /// B_H with the integrator's own H
    FbmSelf,
    Frozen(Box<IntegrandSpec>, usize),
}

fn parse_f64(s: &str, whole: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| Error::UnknownIntegrand(whole.to_string()))
}

impl FromStr for IntegrandSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::UnknownIntegrand(s.to_string());
        let t = s.trim();
        if let Some(rest) = t.strip_prefix("pp:") {
            let (inner, n) = rest.rsplit_once(':').ok_or_else(bad)?;
            let n: usize = n.trim().parse().map_err(|_| bad())?;
            if n == 0 {
                return Err(bad());
            }
            return Ok(IntegrandSpec::Frozen(Box::new(inner.parse()?), n));
        }
        if let Some(rest) = t.strip_prefix("det:const:") {
            return Ok(IntegrandSpec::Const(parse_f64(rest, s)?));
        }
        if let Some(rest) = t.strip_prefix("det:poly:") {
            let coeffs = rest.split(',').map(|c| parse_f64(c, s)).collect::<Result<Vec<_>>>()?;
            return Ok(IntegrandSpec::Poly(coeffs));
        }
        if let Some(rest) = t.strip_prefix("fbm:") {
            if rest == "self" {
                return Ok(IntegrandSpec::FbmSelf);
            }
            let h = parse_f64(rest, s)?;
            HurstParameter::new(h)?;
            return Ok(IntegrandSpec::Fbm(h));
        }
        if let Some(rest) = t.strip_prefix("wh:") {
            let h = parse_f64(rest, s)?;
            HurstParameter::new(h)?;
            return Ok(IntegrandSpec::RiemannLiouville(h));
        }
        match t {
            "bm" => Ok(IntegrandSpec::Brownian),
            "bm2" => Ok(IntegrandSpec::QuadraticBrownian),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for IntegrandSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IntegrandSpec::Const(c) => write!(f, "det:const:{c}"),
            IntegrandSpec::Poly(a) => {
                write!(f, "det:poly:{}", a.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(","))
            }
            IntegrandSpec::Brownian => write!(f, "bm"),
            IntegrandSpec::QuadraticBrownian => write!(f, "bm2"),
            IntegrandSpec::Fbm(h) => write!(f, "fbm:{h}"),
            IntegrandSpec::RiemannLiouville(h) => write!(f, "wh:{h}"),
            IntegrandSpec::FbmSelf => write!(f, "fbm:self"),
            IntegrandSpec::Frozen(inner, n) => write!(f, "pp:{inner}:{n}"),
        }
    }
}

impl TryFrom<String> for IntegrandSpec {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<IntegrandSpec> for String {
    fn from(s: IntegrandSpec) -> String {
        s.to_string()
    }
}

impl IntegrandSpec {
    /// Instance for an experiment on [0, horizon] integrated at `integrator`.
    pub fn build(&self, horizon: f64, integrator: &HurstParameter) -> Result<Arc<dyn Integrand>> {
        Ok(match self {
            IntegrandSpec::Const(c) => Arc::new(Deterministic::Const(*c)),
            IntegrandSpec::Poly(a) => Arc::new(Deterministic::Poly(a.clone())),
            IntegrandSpec::Brownian => Arc::new(WienerKernel::Brownian),
            IntegrandSpec::QuadraticBrownian => Arc::new(QuadraticBrownian),
            IntegrandSpec::Fbm(h) => Arc::new(WienerKernel::Fbm(HurstParameter::new(*h)?)),
            IntegrandSpec::RiemannLiouville(h) => {
                Arc::new(WienerKernel::RiemannLiouville(HurstParameter::new(*h)?))
            }
            IntegrandSpec::FbmSelf => Arc::new(WienerKernel::Fbm(*integrator)),
            IntegrandSpec::Frozen(inner, n) => {
                Arc::new(PiecewisePredictable::new(inner.build(horizon, integrator)?, *n, horizon)?)
            }
        })
    }

    pub fn tracks_integrator(&self) -> bool {
        match self {
            IntegrandSpec::FbmSelf => true,
            IntegrandSpec::Frozen(inner, _) => inner.tracks_integrator(),
            _ => false,
        }
    }
}

pub fn parse_integrand(spec: &str, horizon: f64, integrator: &HurstParameter) -> Result<Arc<dyn Integrand>> {
    spec.parse::<IntegrandSpec>()?.build(horizon, integrator)
}

// ---------------------------------------------------------------- norms

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XNorm {
    pub value: f64,
    pub std_error: f64,
    /// MC estimate of E ∫ γ² dt
    pub mean_square: MCResult,
}

/// ‖γ‖_𝒳 = (E ∫_0^T γ(t)² dt)^{1/2} by a left-point rule on the fine grid.
pub fn x_norm(gamma: &dyn Integrand, ensemble: &Ensemble) -> Result<XNorm> {
    if ensemble.replications < 2 {
        return Err(Error::InvalidArgument("x_norm needs at least 2 replications".into()));
    }
    let dt = ensemble.grid.step();
    let n = ensemble.grid.horizon_cells();
    let samples = ensemble.map(|_, p| -> Result<f64> {
        let ctx = PathContext::new(p);
        let v = gamma.sample(&ctx, &InformationSchedule::pathwise(n))?;
        Ok(compensated_sum(v.iter().map(|x| x * x * dt)))
    });
    let samples = samples.into_iter().collect::<Result<Vec<_>>>()?;
    let ms = MCResult::from_samples(&samples, ensemble.seed, 0.0);
    let value = ms.estimate.max(0.0).sqrt();
    let std_error = if value > 0.0 { ms.std_error / (2.0 * value) } else { 0.0 };
    Ok(XNorm { value, std_error, mean_square: ms })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YNorm {
    pub value: f64,
    pub x_norm: f64,
    pub variance_term: f64,
    /// the variance ratio keeps growing as t - τ shrinks
    pub blowup: bool,
    /// log₂ growth of the ratio per halving of the lag at the finest scales
    pub local_exponent: f64,
}

/// ‖γ‖_𝒳 + sup_τ sup_{t ∈ (τ, τ+ε]} (E Var_τ γ(t))^{1/2}/(t-τ)^{(1+ν)/2}.
///
/// τ runs over `resolution` points of [0, T) and t - τ over ε 2^{-i},
/// i = 0..=`lag_levels`; suprema are grid maxima.
pub fn y_norm(
    gamma: &dyn Integrand,
    nu: f64,
    eps: f64,
    resolution: usize,
    lag_levels: u32,
    x: &XNorm,
    horizon: f64,
) -> Result<YNorm> {
    if !(nu >= 0.0) || !(eps > 0.0) || resolution == 0 || lag_levels < 4 {
        return Err(Error::InvalidArgument(
            "y_norm needs nu >= 0, eps > 0, resolution >= 1 and at least 4 lag levels".into(),
        ));
    }
    let mut per_level = vec![0.0f64; lag_levels as usize + 1];
    for r in 0..resolution {
        let tau = horizon * r as f64 / resolution as f64;
        for (i, slot) in per_level.iter_mut().enumerate() {
            let d = eps * 0.5f64.powi(i as i32);
            if tau + d > horizon {
                continue;
            }
            let ratio = gamma.cond_var(tau, tau + d).max(0.0).sqrt() / d.powf(0.5 * (1.0 + nu));
            *slot = slot.max(ratio);
        }
    }
    let sup = per_level.iter().copied().fold(0.0, f64::max);
    let k = per_level.len() - 1;
    let fine = per_level[k];
    let coarse = per_level[k - 4];
    let local_exponent = if fine > 0.0 && coarse > 0.0 { (fine / coarse).log2() / 4.0 } else { 0.0 };
    let blowup = local_exponent > 1e-6;
    Ok(YNorm {
        value: if blowup { f64::INFINITY } else { x.value + sup },
        x_norm: x.value,
        variance_term: sup,
        blowup,
        local_exponent,
    })
}
