//! Power-law kernels of the Mandelbrot-Van Ness representation
//!
//! B_H(t) - B_H(s) = c_H ∫_s^t (t-q)^{H-1/2} dB(q)
//!                 + c_H ∫_{-∞}^s [(t-q)^{H-1/2} - (s-q)^{H-1/2}] dB(q)
//!
//! and the Riemann-Liouville type transform
//!
//! G_H(τ,s,T,g) = c_H (H-1/2) ∫_τ^T (t-τ)^{H-3/2} g(t) dt.
//!
//! Everything singular is integrated analytically cell by cell against
//! piecewise-constant data.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hurst::HurstParameter;

/// `a^p - b^p` for `a, b >= 0`, without cancellation when `a` and `b` are close.
pub fn pow_diff(a: f64, b: f64, p: f64) -> f64 {
    debug_assert!(a >= 0.0 && b >= 0.0);
    if b == 0.0 {
        return if a == 0.0 { 0.0 } else { a.powf(p) };
    }
    b.powf(p) * (p * ((a - b) / b).ln_1p()).exp_m1()
}

/// ∫_lower^upper x^exponent dx over distances from the singular point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerKernelCell {
    pub exponent: f64,
    pub lower: f64,
    pub upper: f64,
}

impl PowerKernelCell {
    pub fn new(exponent: f64, lower: f64, upper: f64) -> Result<Self> {
        if !(lower >= 0.0 && lower < upper && upper.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "kernel cell needs 0 <= lower < upper, got [{lower}, {upper}]"
            )));
        }
        if exponent <= -1.0 && lower == 0.0 {
            return Err(Error::InvalidArgument(format!(
                "x^{exponent} is not integrable at 0"
            )));
        }
        Ok(PowerKernelCell { exponent, lower, upper })
    }

    pub fn integral(&self) -> f64 {
        let q = self.exponent + 1.0;
        if q == 0.0 {
            return (self.upper / self.lower).ln();
        }
        pow_diff(self.upper, self.lower, q) / q
    }
}

/// Mandelbrot-Van Ness kernel: (t-r)^{H-1/2} for s < r < t, the history
/// kernel (t-r)^{H-1/2} - (s-r)^{H-1/2} for r <= s.
pub fn mvn_kernel(t: f64, s: f64, r: f64, hp: &HurstParameter) -> Result<f64> {
    if r >= t {
        return Err(Error::KernelDomain { t, r });
    }
    if s > t {
        return Err(Error::InvalidArgument(format!("s = {s} exceeds t = {t}")));
    }
    let a = hp.alpha();
    if r > s {
        return Ok((t - r).powf(a));
    }
    if hp.is_brownian() {
        return Ok(0.0);
    }
    if r == s {
        return Ok((t - r).powf(a));
    }
    Ok(pow_diff(t - r, s - r, a))
}

/// Piecewise-constant function on a uniform grid: value `values[j]` on
/// `[start + j*step, start + (j+1)*step)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledFunction {
    pub start: f64,
    pub step: f64,
    pub values: Vec<f64>,
}

impl SampledFunction {
    pub fn new(start: f64, step: f64, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyGrid);
        }
        if !(step > 0.0) {
            return Err(Error::InvalidArgument(format!("step must be positive, got {step}")));
        }
        Ok(SampledFunction { start, step, values })
    }

    pub fn constant(start: f64, end: f64, cells: usize, c: f64) -> Result<Self> {
        Self::new(start, (end - start) / cells as f64, vec![c; cells])
    }

    pub fn end(&self) -> f64 {
        self.start + self.step * self.values.len() as f64
    }

    pub fn cell_of(&self, t: f64) -> usize {
        let j = ((t - self.start) / self.step).floor();
        (j.max(0.0) as usize).min(self.values.len() - 1)
    }

    pub fn value_at(&self, t: f64) -> f64 {
        self.values[self.cell_of(t)]
    }
}

/// G_H(τ,s,T,g) with g piecewise constant on a uniform grid of [s,T].
///
/// Each cell contributes c_H g_j [(min(b_j,T)-τ)^α - (max(a_j,τ)-τ)^α].
/// At H = 1/2 the transform is the identity, g(τ).
pub fn gh_transform(tau: f64, s: f64, t_end: f64, g: &SampledFunction, hp: &HurstParameter) -> Result<f64> {
    if g.values.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let slack = 1e-9 * g.step;
    if (g.start - s).abs() > slack || (g.end() - t_end).abs() > 1e-9 * (t_end - s).abs().max(g.step) {
        return Err(Error::InvalidArgument(format!(
            "sampled function covers [{}, {}], expected [{s}, {t_end}]",
            g.start,
            g.end()
        )));
    }
    if !(tau >= s - slack && tau <= t_end + slack) {
        return Err(Error::OutOfRange { t: tau, lo: s, hi: t_end });
    }
    let tau = tau.clamp(s, t_end);
    if hp.is_brownian() {
        return Ok(g.value_at(tau));
    }
    let a = hp.alpha();
    // one cell early: rounding in cell_of can skip a sliver [τ, t_j) whose
    // contribution ε^α is far from negligible for small α
    let first = g.cell_of(tau).saturating_sub(1);
    let mut acc = 0.0;
    for j in first..g.values.len() {
        let lo = (g.start + j as f64 * g.step).max(tau) - tau;
        let hi = (g.start + (j + 1) as f64 * g.step).min(t_end) - tau;
        if hi > lo {
            acc += g.values[j] * pow_diff(hi, lo, a);
        }
    }
    Ok(hp.c_h() * acc)
}

/// Φ(d) = [d^{α+1} - (d-1)^{α+1}]/(α+1) for d >= 1, zero for d <= 0.
///
/// c_H dt^α Φ(d) is the cell average of the kernel (t-q)^α over a noise cell
/// whose right end lies d cells before t.
pub fn cell_kernel(d: i64, alpha: f64) -> f64 {
    if d <= 0 {
        return 0.0;
    }
    let d = d as f64;
    pow_diff(d, d - 1.0, alpha + 1.0) / (alpha + 1.0)
}

/// Table of Φ(0..=n).
pub fn cell_kernel_table(n: usize, alpha: f64) -> Vec<f64> {
    (0..=n as i64).map(|d| cell_kernel(d, alpha)).collect()
}

/// Table of Φ(d+1) - Φ(d), d = 0..n.
///
/// c_H dt^α times entry d is the double cell average of c_H α (t-q)^{α-1}:
/// q over a noise cell, t over the cell d positions later.
pub fn cell_kernel_increments(n: usize, alpha: f64) -> Vec<f64> {
    let phi = cell_kernel_table(n, alpha);
    phi.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Cell averages of τ ↦ G_H(τ, s, T, g) over the cells of `g`.
///
/// Average over cell i equals c_H step^α Σ_{j>=i} g_j ΔΦ(j-i), exactly.
pub fn gh_cell_averages(g: &SampledFunction, hp: &HurstParameter) -> Vec<f64> {
    if hp.is_brownian() {
        return g.values.clone();
    }
    let n = g.values.len();
    let dphi = cell_kernel_increments(n, hp.alpha());
    let scale = hp.c_h() * g.step.powf(hp.alpha());
    crate::conv::correlate(&g.values, &dphi)
        .into_iter()
        .map(|v| scale * v)
        .collect()
}

/// c_H² ∫_L^∞ f(t1,-x) f(t2,-x) dx with f(t,r) = (t-r)^α - (-r)^α: the
/// covariance contributed by history older than -L to B_H(t1), B_H(t2).
///
/// Composite Simpson on geometric blocks [L 2^k, L 2^{k+1}], then the
/// leading-order asymptotic α² t1 t2 X^{2α-1}/(1-2α) beyond X = L 2^60.
pub fn history_tail_covariance(t1: f64, t2: f64, horizon: f64, hp: &HurstParameter) -> f64 {
    if hp.is_brownian() {
        return 0.0;
    }
    let a = hp.alpha();
    let f = |t: f64, x: f64| pow_diff(t + x, x, a);
    let g = |x: f64| f(t1, x) * f(t2, x);
    let start = horizon.max(1e-3 * t1.max(t2));
    let mut acc = 0.0;
    let mut lo = start;
    for _ in 0..60 {
        let hi = 2.0 * lo;
        acc += simpson(&g, lo, hi, 256);
        lo = hi;
    }
    acc += a * a * t1 * t2 * lo.powf(2.0 * a - 1.0) / (1.0 - 2.0 * a);
    if start > horizon {
        acc += simpson(&g, horizon, start, 4096);
    }
    hp.c_h() * hp.c_h() * acc
}

fn simpson(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    let h = (hi - lo) / n as f64;
    let mut acc = f(lo) + f(hi);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(lo + k as f64 * h);
    }
    acc * h / 3.0
}

/// Bound on the variance of the history discarded below -L, uniform over
/// t - s <= span: c_H² span² α² L^{2α-1}/(1-2α).
pub fn truncation_bound(horizon: f64, span: f64, hp: &HurstParameter) -> f64 {
    if hp.is_brownian() {
        return 0.0;
    }
    let a = hp.alpha();
    let c = hp.c_h();
    c * c * span * span * a * a * horizon.powf(2.0 * a - 1.0) / (1.0 - 2.0 * a)
}

/// Smallest warm-up length L with `truncation_bound(L, span) <= tol`.
pub fn truncation_horizon(tol: f64, span: f64, hp: &HurstParameter) -> Result<f64> {
    if !(tol > 0.0) || !(span > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "truncation horizon needs tol > 0 and span > 0, got tol={tol}, span={span}"
        )));
    }
    if hp.is_brownian() {
        return Ok(0.0);
    }
    let a = hp.alpha();
    let c = hp.c_h();
    let k = c * c * span * span * a * a / (1.0 - 2.0 * a);
    Ok((tol / k).powf(1.0 / (2.0 * a - 1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hurst::hurst_constant;

    #[test]
    fn pow_diff_matches_naive_when_well_separated() {
        for &(a, b, p) in &[(2.0, 1.0, 0.25), (5.0, 0.5, 1.3), (1.0, 0.0, 0.7)] {
            let naive: f64 = f64::powf(a, p) - f64::powf(b, p);
            assert!((pow_diff(a, b, p) - naive).abs() < 1e-14);
        }
    }

    #[test]
    fn pow_diff_close_arguments() {
        // (1+d)^0.5 - 1 = d/2 - d²/8 + ...; d is the representable gap
        let a = 1.0 + 1e-12;
        let d = a - 1.0;
        let v = pow_diff(a, 1.0, 0.5);
        assert!((v / (0.5 * d - 0.125 * d * d) - 1.0).abs() < 1e-12, "{v}");
    }

    #[test]
    fn kernel_examples() {
        let hp = hurst_constant(0.75).unwrap();
        for r in [-3.0, -0.5, 0.9] {
            assert_eq!(mvn_kernel(1.0, 1.0, r, &hp).unwrap(), 0.0);
        }
        let bm = HurstParameter::BROWNIAN;
        assert_eq!(mvn_kernel(2.0, 1.0, 0.3, &bm).unwrap(), 0.0);
        let v = mvn_kernel(2.0, 1.0, 0.0, &hp).unwrap();
        assert!((v - 0.189207115002721).abs() < 1e-13);
        assert!(mvn_kernel(1.0, 0.5, 1.0, &hp).is_err());
        assert!(mvn_kernel(1.0, 0.5, 1.5, &hp).is_err());
    }

    #[test]
    fn kernel_continuous_in_t_for_history_points() {
        let hp = hurst_constant(0.6).unwrap();
        let a = mvn_kernel(1.0, 1.0, 0.2, &hp).unwrap();
        let b = mvn_kernel(1.0 + 1e-9, 1.0, 0.2, &hp).unwrap();
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn power_cell_integrals() {
        let c = PowerKernelCell::new(0.25, 0.0, 1.0).unwrap();
        assert!((c.integral() - 0.8).abs() < 1e-15);
        let c = PowerKernelCell::new(-0.75, 1.0, 16.0).unwrap();
        // [4 x^{1/4}]_1^16 = 4
        assert!((c.integral() - 4.0).abs() < 1e-13);
        let c = PowerKernelCell::new(-1.75, 1.0, 16.0).unwrap();
        // [-(4/3) x^{-3/4}]_1^16 = (4/3)(1 - 1/8)
        assert!((c.integral() - 7.0 / 6.0).abs() < 1e-13, "{}", c.integral());
        assert!(PowerKernelCell::new(-1.5, 0.0, 1.0).is_err());
        assert!(PowerKernelCell::new(0.5, 1.0, 1.0).is_err());
        let c = PowerKernelCell::new(-1.0, 1.0, std::f64::consts::E).unwrap();
        assert!((c.integral() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn transform_of_zero_and_identity_case() {
        let hp = hurst_constant(0.75).unwrap();
        let z = SampledFunction::constant(0.0, 1.0, 64, 0.0).unwrap();
        assert_eq!(gh_transform(0.3, 0.0, 1.0, &z, &hp).unwrap(), 0.0);
        let g = SampledFunction::new(0.0, 0.25, vec![1.0, -2.0, 3.0, 5.0]).unwrap();
        let bm = HurstParameter::BROWNIAN;
        assert_eq!(gh_transform(0.3, 0.0, 1.0, &g, &bm).unwrap(), -2.0);
        assert_eq!(gh_transform(1.0, 0.0, 1.0, &g, &bm).unwrap(), 5.0);
    }

    #[test]
    fn transform_of_one_is_exact_on_any_grid() {
        for h in [0.6, 0.75, 0.9] {
            let hp = hurst_constant(h).unwrap();
            for cells in [1usize, 3, 64, 1000] {
                let g = SampledFunction::constant(0.5, 2.0, cells, 1.0).unwrap();
                for tau in [0.5, 0.77, 1.25, 1.999] {
                    let got = gh_transform(tau, 0.5, 2.0, &g, &hp).unwrap();
                    let want = hp.c_h() * (2.0 - tau).powf(h - 0.5);
                    assert!(((got - want) / want).abs() < 1e-12, "h={h} cells={cells} tau={tau}");
                }
            }
        }
    }

    #[test]
    fn tau_on_grid_points_keeps_the_first_sliver() {
        let hp = hurst_constant(0.51).unwrap();
        let g = SampledFunction::constant(0.0, 1.0, 1000, 1.0).unwrap();
        for k in 0..1000 {
            let tau = k as f64 * 0.001;
            let got = gh_transform(tau, 0.0, 1.0, &g, &hp).unwrap();
            let want = hp.c_h() * (1.0 - tau).powf(0.01);
            assert!(((got - want) / want).abs() < 1e-12, "tau={tau}");
        }
    }

    #[test]
    fn transform_rejects_bad_inputs() {
        let hp = hurst_constant(0.75).unwrap();
        let g = SampledFunction::constant(0.0, 1.0, 8, 1.0).unwrap();
        assert!(gh_transform(1.5, 0.0, 1.0, &g, &hp).is_err());
        assert!(gh_transform(-0.1, 0.0, 1.0, &g, &hp).is_err());
        assert!(gh_transform(0.5, 0.0, 2.0, &g, &hp).is_err());
        assert!(SampledFunction::new(0.0, 0.1, vec![]).is_err());
    }

    #[test]
    fn transform_against_fine_midpoint_quadrature() {
        // g(t) = t² on a coarse grid; compare with a fine substitution rule
        // u = (t-τ)^α which removes the singularity.
        let hp = hurst_constant(0.7).unwrap();
        let cells = 16;
        let g = SampledFunction::new(
            0.0,
            1.0 / cells as f64,
            (0..cells).map(|j| ((j as f64) / cells as f64).powi(2)).collect(),
        )
        .unwrap();
        let tau: f64 = 0.3;
        let a = hp.alpha();
        let umax = (1.0 - tau).powf(a);
        let m = 2_000_000;
        let mut acc = 0.0;
        for k in 0..m {
            let u = (k as f64 + 0.5) / m as f64 * umax;
            let t = tau + u.powf(1.0 / a);
            acc += g.value_at(t);
        }
        let want = hp.c_h() * acc * umax / m as f64;
        let got = gh_transform(tau, 0.0, 1.0, &g, &hp).unwrap();
        assert!((got - want).abs() < 1e-5, "{got} vs {want}");
    }

    #[test]
    fn cell_averages_match_averaged_pointwise_transform() {
        let hp = hurst_constant(0.8).unwrap();
        let g = SampledFunction::new(0.0, 0.125, vec![1.0, 0.5, -1.0, 2.0, 0.0, 3.0, -0.5, 1.5]).unwrap();
        let avg = gh_cell_averages(&g, &hp);
        for i in 0..8 {
            let m = 20_000;
            let mut acc = 0.0;
            for k in 0..m {
                let tau = 0.125 * (i as f64 + (k as f64 + 0.5) / m as f64);
                acc += gh_transform(tau, 0.0, 1.0, &g, &hp).unwrap();
            }
            let want = acc / m as f64;
            assert!((avg[i] - want).abs() < 1e-5, "cell {i}: {} vs {want}", avg[i]);
        }
    }

    #[test]
    fn cell_kernel_basics() {
        assert_eq!(cell_kernel(0, 0.25), 0.0);
        assert!((cell_kernel(1, 0.25) - 0.8).abs() < 1e-15);
        let inc = cell_kernel_increments(4, 0.0);
        assert_eq!(inc, vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn truncation_horizon_examples() {
        let bm = HurstParameter::BROWNIAN;
        assert_eq!(truncation_horizon(1e-3, 1.0, &bm).unwrap(), 0.0);
        let hp = hurst_constant(0.75).unwrap();
        let l1 = truncation_horizon(1e-6, 1.0, &hp).unwrap();
        let l2 = truncation_horizon(0.5e-6, 1.0, &hp).unwrap();
        assert!(l2 > l1);
        // c²/16/0.5 · L^{-1/2} = 1e-6
        let want = (1.1441396452527197821 / 8.0 / 1e-6f64).powi(2);
        assert!((l1 / want - 1.0).abs() < 1e-10);
        assert!((truncation_bound(l1, 1.0, &hp) - 1e-6).abs() < 1e-18);
        assert!(truncation_horizon(0.0, 1.0, &hp).is_err());
    }

    #[test]
    fn bound_dominates_numerical_tail() {
        for h in [0.55, 0.75, 0.9] {
            let hp = hurst_constant(h).unwrap();
            for l in [1.0, 8.0, 100.0] {
                let exact = history_tail_covariance(1.0, 1.0, l, &hp);
                let bound = truncation_bound(l, 1.0, &hp);
                assert!(exact > 0.0 && exact <= bound, "h={h} L={l}: {exact} > {bound}");
                // the bound is the leading term, so it is tight for large L
                if l == 100.0 {
                    assert!(exact / bound > 0.9, "h={h}: {}", exact / bound);
                }
            }
        }
    }

    #[test]
    fn tail_covariance_closed_form_at_h_three_quarters() {
        // Var B_H(1) = c² [∫_0^∞ f(1,x)² dx + 1/(2H)] = 1, so the tail from L = 0
        // equals 1 - c²/(2H).
        let hp = hurst_constant(0.75).unwrap();
        let tail0 = history_tail_covariance(1.0, 1.0, 0.0, &hp);
        let want = 1.0 - hp.c_h() * hp.c_h() / 1.5;
        assert!((tail0 - want).abs() < 1e-6, "{tail0} vs {want}");
    }
}
