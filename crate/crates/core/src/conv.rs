//! Linear convolution windows through rustfft, with a direct path for
//! small problems.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

const DIRECT_LIMIT: usize = 1 << 16;

/// out[t] = Σ_i signal[i] kernel[out_start + t - i], kernel indices outside
/// `0..kernel.len()` read as zero.
pub fn convolve_window(signal: &[f64], kernel: &[f64], out_start: usize, out_len: usize) -> Vec<f64> {
    if signal.len().saturating_mul(out_len) <= DIRECT_LIMIT {
        return direct_window(signal, kernel, out_start, out_len);
    }
    WindowConvolution::new(kernel, signal.len(), out_start, out_len).apply(signal)
}

/// out[i] = Σ_{j>=i} signal[j] kernel[j-i].
pub fn correlate(signal: &[f64], kernel: &[f64]) -> Vec<f64> {
    let n = signal.len();
    let rev: Vec<f64> = signal.iter().rev().copied().collect();
    let mut out = convolve_window(&rev, kernel, 0, n);
    out.reverse();
    out
}

fn direct_window(signal: &[f64], kernel: &[f64], out_start: usize, out_len: usize) -> Vec<f64> {
    let mut out = vec![0.0; out_len];
    for (t, o) in out.iter_mut().enumerate() {
        let lag = out_start + t;
        let lo = (lag + 1).saturating_sub(kernel.len());
        let hi = signal.len().min(lag + 1);
        let mut acc = 0.0;
        for i in lo..hi {
            acc += signal[i] * kernel[lag - i];
        }
        *o = acc;
    }
    out
}

fn smooth_len(min: usize) -> usize {
    let mut best = min.next_power_of_two();
    let mut p3 = 1usize;
    while p3 < best {
        let mut v = p3;
        while v < min {
            v *= 2;
        }
        best = best.min(v);
        p3 *= 3;
    }
    best
}

/// Planned convolution against a fixed kernel, reusable across signals of
/// the same length.
pub struct WindowConvolution {
    sig_len: usize,
    out_start: usize,
    out_len: usize,
    n: usize,
    spectrum: Vec<Complex<f64>>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for WindowConvolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WindowConvolution")
            .field("sig_len", &self.sig_len)
            .field("out_start", &self.out_start)
            .field("out_len", &self.out_len)
            .field("fft_len", &self.n)
            .finish()
    }
}

impl WindowConvolution {
    pub fn new(kernel: &[f64], sig_len: usize, out_start: usize, out_len: usize) -> Self {
        // Only kernel lags up to out_start + out_len - 1 matter. Circular
        // wrap-around must not reach the output window: lags of the linear
        // result span [0, sig_len + klen - 1); aliasing of index m lands on
        // m - n, which must stay below out_start.
        let klen = kernel.len().min(out_start + out_len);
        let min_len = (sig_len + klen).saturating_sub(1).max(out_start + out_len).max(1);
        let n = smooth_len(min_len);
        let mut planner = FftPlanner::<f64>::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let mut spectrum: Vec<Complex<f64>> = (0..n)
            .map(|i| Complex::new(if i < klen { kernel[i] } else { 0.0 }, 0.0))
            .collect();
        fwd.process(&mut spectrum);
        let norm = 1.0 / n as f64;
        for z in spectrum.iter_mut() {
            *z *= norm;
        }
        WindowConvolution { sig_len, out_start, out_len, n, spectrum, fwd, inv }
    }

    pub fn signal_len(&self) -> usize {
        self.sig_len
    }

    pub fn apply(&self, signal: &[f64]) -> Vec<f64> {
        assert_eq!(signal.len(), self.sig_len, "signal length mismatch");
        let mut buf: Vec<Complex<f64>> = (0..self.n)
            .map(|i| Complex::new(if i < signal.len() { signal[i] } else { 0.0 }, 0.0))
            .collect();
        self.fwd.process(&mut buf);
        for (z, k) in buf.iter_mut().zip(&self.spectrum) {
            *z *= k;
        }
        self.inv.process(&mut buf);
        buf[self.out_start..self.out_start + self.out_len].iter().map(|z| z.re).collect()
    }

    /// Two signals through one complex transform (real and imaginary lanes).
    pub fn apply_pair(&self, a: &[f64], b: &[f64]) -> (Vec<f64>, Vec<f64>) {
        assert_eq!(a.len(), self.sig_len, "signal length mismatch");
        assert_eq!(b.len(), self.sig_len, "signal length mismatch");
        let mut buf: Vec<Complex<f64>> = (0..self.n)
            .map(|i| {
                if i < self.sig_len {
                    Complex::new(a[i], b[i])
                } else {
                    Complex::new(0.0, 0.0)
                }
            })
            .collect();
        self.fwd.process(&mut buf);
        for (z, k) in buf.iter_mut().zip(&self.spectrum) {
            *z *= k;
        }
        self.inv.process(&mut buf);
        let w = &buf[self.out_start..self.out_start + self.out_len];
        (w.iter().map(|z| z.re).collect(), w.iter().map(|z| z.im).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((*seed >> 11) as f64 / (1u64 << 53) as f64) - 0.5
    }

    #[test]
    fn smooth_lengths() {
        assert_eq!(smooth_len(36863), 36864);
        assert_eq!(smooth_len(1025), 1152);
        assert_eq!(smooth_len(1), 1);
        assert_eq!(smooth_len(4096), 4096);
    }

    #[test]
    fn fft_matches_direct() {
        let mut s = 7u64;
        for &(sl, kl, start, len) in &[(300, 500, 250, 200), (1000, 40, 0, 1039), (64, 4000, 3000, 900)] {
            let sig: Vec<f64> = (0..sl).map(|_| lcg(&mut s)).collect();
            let ker: Vec<f64> = (0..kl).map(|_| lcg(&mut s)).collect();
            let d = direct_window(&sig, &ker, start, len);
            let plan = WindowConvolution::new(&ker, sl, start, len);
            let f = plan.apply(&sig);
            for (x, y) in d.iter().zip(&f) {
                assert!((x - y).abs() < 1e-12, "{x} {y}");
            }
            let sig2: Vec<f64> = sig.iter().map(|v| v * 3.0 - 1.0).collect();
            let (p, q) = plan.apply_pair(&sig, &sig2);
            let d2 = direct_window(&sig2, &ker, start, len);
            for i in 0..len {
                assert!((p[i] - d[i]).abs() < 1e-12);
                assert!((q[i] - d2[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn correlation_definition() {
        let sig = [1.0, 2.0, 3.0];
        let ker = [10.0, 1.0, 0.1];
        let c = correlate(&sig, &ker);
        assert!((c[0] - (10.0 + 2.0 + 0.3)).abs() < 1e-12);
        assert!((c[1] - (20.0 + 3.0)).abs() < 1e-12);
        assert!((c[2] - 30.0).abs() < 1e-12);
    }
}
