//! Analytic signal, instantaneous frequency and mean time-scale of an IMF.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::emd::find_extrema;
use crate::error::{Error, Result};

/// `z(t) = c(t) + i d(t) = a(t) exp(i theta(t))`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticSignal {
    pub real: Vec<f64>,
    /// Discrete Hilbert transform of `real`.
    pub imag: Vec<f64>,
    pub amplitude: Vec<f64>,
    /// Unwrapped phase in radians.
    pub phase: Vec<f64>,
}

/// Frequency-domain Hilbert transform: zero the negative frequencies, double
/// the positive ones, keep DC and Nyquist.
pub fn analytic_signal(series: &[f64]) -> Result<AnalyticSignal> {
    let n = series.len();
    if n < 8 {
        return Err(Error::TooShort { min: 8, actual: n });
    }
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(n);
    let inverse = planner.plan_fft_inverse(n);
    let mut buf: Vec<Complex64> = series.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    forward.process(&mut buf);
    let half = n / 2;
    for (k, c) in buf.iter_mut().enumerate() {
        let weight = if k == 0 || (n.is_multiple_of(2) && k == half) {
            1.0
        } else if k <= (n - 1) / 2 {
            2.0
        } else {
            0.0
        };
        *c *= weight / n as f64;
    }
    inverse.process(&mut buf);
    let imag: Vec<f64> = buf.iter().map(|c| c.im).collect();
    let amplitude = series.iter().zip(&imag).map(|(r, i)| r.hypot(*i)).collect();
    let wrapped: Vec<f64> = series.iter().zip(&imag).map(|(r, i)| i.atan2(*r)).collect();
    Ok(AnalyticSignal {
        real: series.to_vec(),
        imag,
        amplitude,
        phase: unwrap_phase(&wrapped),
    })
}

pub fn unwrap_phase(wrapped: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(wrapped.len());
    let mut offset = 0.0;
    let mut prev: Option<f64> = None;
    for &p in wrapped {
        if let Some(q) = prev {
            let d = p - q;
            if d > PI {
                offset -= 2.0 * PI;
            } else if d < -PI {
                offset += 2.0 * PI;
            }
        }
        out.push(p + offset);
        prev = Some(p);
    }
    out
}

/// Instantaneous frequency in cycles per sample (cycles per trading day).
#[derive(Debug, Clone, PartialEq)]
pub struct InstFrequency {
    pub omega: Vec<f64>,
    /// True where `omega` is non-positive or not finite.
    pub flagged: Vec<bool>,
}

/// Central differences of the unwrapped phase (one-sided at the ends) over 2 pi.
pub fn inst_frequency(sig: &AnalyticSignal) -> InstFrequency {
    let p = &sig.phase;
    let n = p.len();
    let omega: Vec<f64> = (0..n)
        .map(|t| {
            let d = if n < 2 {
                0.0
            } else if t == 0 {
                p[1] - p[0]
            } else if t == n - 1 {
                p[n - 1] - p[n - 2]
            } else {
                0.5 * (p[t + 1] - p[t - 1])
            };
            d / (2.0 * PI)
        })
        .collect();
    let flagged = omega.iter().map(|w| !(w.is_finite() && *w > 0.0)).collect();
    InstFrequency { omega, flagged }
}

/// Mean period of an IMF, in days.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeScale {
    /// Mean of `1/omega` over unflagged interior samples.
    pub tau: f64,
    /// Series length over the number of maxima, for cross-checking.
    pub tau_maxima: f64,
    pub samples_used: usize,
    pub samples_flagged: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeScaleConfig {
    /// Fraction trimmed from each end before averaging.
    pub trim: f64,
}

impl Default for TimeScaleConfig {
    fn default() -> Self {
        Self { trim: 0.05 }
    }
}

pub fn mean_timescale(imf: &[f64]) -> Result<TimeScale> {
    mean_timescale_with(imf, &TimeScaleConfig::default())
}

pub fn mean_timescale_with(imf: &[f64], config: &TimeScaleConfig) -> Result<TimeScale> {
    let n = imf.len();
    if n < 8 {
        return Err(Error::TooShort { min: 8, actual: n });
    }
    let maxima = find_extrema(imf)?.maxima.len();
    if maxima < 2 {
        return Err(Error::NonOscillatory);
    }
    let sig = analytic_signal(imf)?;
    let freq = inst_frequency(&sig);
    let cut = (config.trim * n as f64).floor() as usize;
    let interior = cut..n - cut;
    let mut sum = 0.0;
    let mut used = 0;
    let mut flagged = 0;
    for t in interior {
        if freq.flagged[t] {
            flagged += 1;
        } else {
            sum += 1.0 / freq.omega[t];
            used += 1;
        }
    }
    if used == 0 {
        return Err(Error::NonOscillatory);
    }
    Ok(TimeScale {
        tau: sum / used as f64,
        tau_maxima: n as f64 / maxima as f64,
        samples_used: used,
        samples_flagged: flagged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wave(n: usize, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..n).map(|t| f(t as f64)).collect()
    }

    #[test]
    fn cosine_quadrature() {
        let n = 1000;
        let x = wave(n, |t| (2.0 * PI * t / 20.0).cos());
        let sig = analytic_signal(&x).unwrap();
        for t in n / 20..n - n / 20 {
            let expect = (2.0 * PI * t as f64 / 20.0).sin();
            assert!((sig.imag[t] - expect).abs() < 0.02, "t={t}");
            assert!((sig.amplitude[t] - 1.0).abs() < 0.02);
            let r2 = sig.real[t].powi(2) + sig.imag[t].powi(2);
            assert!((sig.amplitude[t].powi(2) - r2).abs() < 1e-12);
        }
    }

    #[test]
    fn amplitude_scales() {
        let x = wave(512, |t| 3.5 * (2.0 * PI * t / 32.0).cos());
        let sig = analytic_signal(&x).unwrap();
        for t in 26..486 {
            assert!((sig.amplitude[t] - 3.5).abs() < 0.05);
        }
    }

    #[test]
    fn chirp_frequency_rises() {
        let n = 2048;
        let x = wave(n, |t| (2.0 * PI * (t / 64.0 + t * t / 8192.0)).cos());
        let f = inst_frequency(&analytic_signal(&x).unwrap());
        // Smooth over 64 samples; the analytic rate is 1/64 + t/4096.
        let window = 64;
        let means: Vec<f64> = (n / 10..n / 2)
            .step_by(window)
            .map(|s| f.omega[s..s + window].iter().sum::<f64>() / window as f64)
            .collect();
        assert!(means.windows(2).all(|w| w[1] > w[0]), "{means:?}");
    }

    #[test]
    fn tone_frequencies() {
        for (period, expect) in [(20.0, 0.05), (4.0, 0.25)] {
            let x = wave(1000, |t| (2.0 * PI * t / period).sin());
            let f = inst_frequency(&analytic_signal(&x).unwrap());
            for t in 50..950 {
                assert!(
                    (f.omega[t] - expect).abs() < 0.05 * expect,
                    "period {period} t={t}"
                );
                assert!(!f.flagged[t]);
            }
        }
    }

    #[test]
    fn flat_tail_is_flagged() {
        let mut x = wave(256, |t| (2.0 * PI * t / 16.0).sin());
        for v in x.iter_mut().skip(200) {
            *v = 0.0;
        }
        let mut sig = analytic_signal(&x).unwrap();
        // Force a stalled phase at the tail.
        for t in 240..256 {
            sig.phase[t] = sig.phase[239];
        }
        let f = inst_frequency(&sig);
        assert!(f.flagged[245]);
    }

    #[test]
    fn tone_timescale() {
        let x = wave(1024, |t| (2.0 * PI * t / 32.0).sin());
        let ts = mean_timescale(&x).unwrap();
        assert!((ts.tau - 32.0).abs() < 1.0, "{}", ts.tau);
        assert!((ts.tau - ts.tau_maxima).abs() < 0.1 * ts.tau);
        let scaled: Vec<f64> = x.iter().map(|v| -7.0 * v).collect();
        assert!((mean_timescale(&scaled).unwrap().tau - ts.tau).abs() < 1e-9 * ts.tau);
        let doubled: Vec<f64> = x.iter().map(|v| 4.0 * v).collect();
        assert_eq!(mean_timescale(&doubled).unwrap().tau, ts.tau);
    }

    #[test]
    fn non_oscillatory() {
        let x = wave(100, |t| t);
        assert!(matches!(mean_timescale(&x), Err(Error::NonOscillatory)));
        assert!(matches!(
            analytic_signal(&[1.0; 4]),
            Err(Error::TooShort { .. })
        ));
    }
}
