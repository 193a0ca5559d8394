//! Power spectrum and band-power primitives.
//!
//! The freeze band is 3-8 Hz and the locomotor band 0.5-3 Hz. With the DFT
//! length N and sampling rate fs, the corresponding bin indices are
//! H1 = 3N/fs, H2 = 8N/fs and L = 0.5N/fs (rounded to nearest); at the
//! defaults fs = 64 Hz, N = 256 they are exactly 12, 32 and 2.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use rustfft::{num_complex::Complex, Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// DFT configuration plus the derived band-edge bin indices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralContext {
    pub fs: f64,
    pub n_fft: usize,
    /// Lower edge of the freeze band (H1), bin index.
    pub freeze_lo: usize,
    /// Upper edge of the freeze band (H2), bin index.
    pub freeze_hi: usize,
    /// Lower edge of the locomotor band (L), bin index.
    pub locomotor_lo: usize,
}

impl SpectralContext {
    pub fn new(fs: f64, n_fft: usize) -> Result<Self> {
        if fs <= 0.0 || n_fft == 0 {
            return Err(Error::invalid("spectral context needs fs > 0 and n_fft > 0"));
        }
        let bin = |hz: f64| (hz * n_fft as f64 / fs).round() as usize;
        let ctx = SpectralContext {
            fs,
            n_fft,
            freeze_lo: bin(3.0),
            freeze_hi: bin(8.0),
            locomotor_lo: bin(0.5),
        };
        if !(ctx.locomotor_lo < ctx.freeze_lo
            && ctx.freeze_lo < ctx.freeze_hi
            && ctx.freeze_hi <= n_fft / 2)
        {
            return Err(Error::invalid(format!(
                "degenerate band indices L={} H1={} H2={} for fs={fs} n_fft={n_fft}",
                ctx.locomotor_lo, ctx.freeze_lo, ctx.freeze_hi
            )));
        }
        Ok(ctx)
    }
}

impl Default for SpectralContext {
    fn default() -> Self {
        SpectralContext::new(64.0, 256).expect("default context is valid")
    }
}

thread_local! {
    static FFT_PLANS: RefCell<HashMap<usize, Arc<dyn Fft<f64>>>> = RefCell::new(HashMap::new());
}

fn plan(n: usize) -> Arc<dyn Fft<f64>> {
    FFT_PLANS.with(|plans| {
        plans
            .borrow_mut()
            .entry(n)
            .or_insert_with(|| FftPlanner::new().plan_fft_forward(n))
            .clone()
    })
}

/// One-sided power spectrum |DFT(x)(i)|^2 for bins 0..=N/2.
///
/// No taper is applied (rectangular window). Inputs shorter than `n_fft`
/// are zero-padded; longer inputs are an error.
pub fn power_spectrum(signal: &[f64], ctx: &SpectralContext) -> Result<Vec<f64>> {
    if signal.len() > ctx.n_fft {
        return Err(Error::invalid(format!(
            "signal length {} exceeds n_fft {}",
            signal.len(),
            ctx.n_fft
        )));
    }
    let mut buffer: Vec<Complex<f64>> = signal
        .iter()
        .map(|&v| Complex::new(v, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(ctx.n_fft)
        .collect();
    plan(ctx.n_fft).process(&mut buffer);
    Ok(buffer[..=ctx.n_fft / 2].iter().map(|c| c.norm_sqr()).collect())
}

/// Trapezoid-style band power over `pxx` bins (lo, hi]:
///
/// (1/2fs) * [ sum_{i=lo+1..=hi} Pxx(i) + sum_{i=lo..=hi-1} Pxx(i) ]
pub fn band_power(pxx: &[f64], lo: usize, hi: usize, fs: f64) -> Result<f64> {
    if lo >= hi || hi >= pxx.len() {
        return Err(Error::invalid(format!(
            "band indices must satisfy lo < hi < len, got lo={lo} hi={hi} len={}",
            pxx.len()
        )));
    }
    let upper: f64 = pxx[lo + 1..=hi].iter().sum();
    let lower: f64 = pxx[lo..hi].iter().sum();
    Ok((upper + lower) / (2.0 * fs))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute-force O(n^2) DFT power spectrum, the independent oracle.
    pub(crate) fn dft_power_oracle(signal: &[f64], n_fft: usize) -> Vec<f64> {
        let mut padded = signal.to_vec();
        padded.resize(n_fft, 0.0);
        (0..=n_fft / 2)
            .map(|k| {
                let mut re = 0.0;
                let mut im = 0.0;
                for (n, &x) in padded.iter().enumerate() {
                    let angle = -std::f64::consts::TAU * k as f64 * n as f64 / n_fft as f64;
                    re += x * angle.cos();
                    im += x * angle.sin();
                }
                re * re + im * im
            })
            .collect()
    }

    #[test]
    fn default_band_indices() {
        let ctx = SpectralContext::default();
        assert_eq!(ctx.freeze_lo, 12);
        assert_eq!(ctx.freeze_hi, 32);
        assert_eq!(ctx.locomotor_lo, 2);
    }

    #[test]
    fn zero_signal_gives_zero_spectrum() {
        let ctx = SpectralContext::default();
        let pxx = power_spectrum(&vec![0.0; 256], &ctx).unwrap();
        assert_eq!(pxx.len(), 129);
        assert!(pxx.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn pure_cosine_concentrates_at_its_bin() {
        let ctx = SpectralContext::default();
        let k = 20usize;
        let amp = 3.0;
        let signal: Vec<f64> = (0..256)
            .map(|n| amp * (std::f64::consts::TAU * k as f64 * n as f64 / 256.0).cos())
            .collect();
        let pxx = power_spectrum(&signal, &ctx).unwrap();
        let expected = (amp * 256.0 / 2.0).powi(2);
        assert!((pxx[k] - expected).abs() / expected < 1e-9);
        for (i, &p) in pxx.iter().enumerate() {
            if i != k {
                assert!(p < expected * 1e-18, "bin {i} leaked {p}");
            }
        }
    }

    #[test]
    fn matches_dft_oracle_on_random_input() {
        use rand::{Rng, SeedableRng};
        let ctx = SpectralContext::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let signal: Vec<f64> = (0..256).map(|_| rng.random_range(-1.0..1.0)).collect();
        let fast = power_spectrum(&signal, &ctx).unwrap();
        let slow = dft_power_oracle(&signal, 256);
        let scale: f64 = slow.iter().cloned().fold(0.0, f64::max);
        for (f, s) in fast.iter().zip(&slow) {
            assert!((f - s).abs() <= 1e-9 * scale.max(1.0));
        }
    }

    #[test]
    fn zero_padding_matches_oracle() {
        let ctx = SpectralContext::new(64.0, 256).unwrap();
        let signal: Vec<f64> = (0..100).map(|i| (i as f64 * 0.17).sin()).collect();
        let fast = power_spectrum(&signal, &ctx).unwrap();
        let slow = dft_power_oracle(&signal, 256);
        for (f, s) in fast.iter().zip(&slow) {
            assert!((f - s).abs() <= 1e-6);
        }
    }

    #[test]
    fn oversized_signal_is_error() {
        let ctx = SpectralContext::new(64.0, 256).unwrap();
        assert!(power_spectrum(&vec![0.0; 257], &ctx).is_err());
    }

    #[test]
    fn band_power_hand_expansion() {
        // Pxx = 1 everywhere, lo=2, hi=4:
        // (1/2fs) * [(P3 + P4) + (P2 + P3)] = (1/128) * 4 = 0.03125
        let pxx = vec![1.0; 129];
        let bp = band_power(&pxx, 2, 4, 64.0).unwrap();
        assert_eq!(bp, 0.03125);
    }

    #[test]
    fn band_power_of_zero_spectrum_is_zero() {
        let pxx = vec![0.0; 129];
        assert_eq!(band_power(&pxx, 12, 32, 64.0).unwrap(), 0.0);
    }

    #[test]
    fn band_power_bounds_checked() {
        let pxx = vec![1.0; 10];
        assert!(band_power(&pxx, 5, 5, 64.0).is_err());
        assert!(band_power(&pxx, 5, 10, 64.0).is_err());
    }
}
