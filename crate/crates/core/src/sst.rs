//! Significance test of IMFs against the Gaussian white-noise null.
//!
//! For unit-variance white noise the IMFs (apart from the first) lie along
//! `ln E + ln T = 0` in the (ln mean period, ln energy density) plane, with
//! `ln E` spread as `N(-x, 2 e^x / N)`. IMFs above the upper spread line carry
//! information beyond noise at the chosen confidence.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::emd::{find_extrema, sift, ImfSet, SiftConfig};
use crate::error::{Error, Result};

/// Mean of squares.
pub fn energy_density(imf: &[f64]) -> Result<f64> {
    if imf.is_empty() {
        return Err(Error::EmptySeries);
    }
    Ok(imf.iter().map(|v| v * v).sum::<f64>() / imf.len() as f64)
}

/// Series length divided by the number of local maxima.
pub fn mean_period(imf: &[f64]) -> Result<f64> {
    let maxima = find_extrema(imf)?.maxima.len();
    if maxima == 0 {
        return Err(Error::NoMaxima);
    }
    Ok(imf.len() as f64 / maxima as f64)
}

/// Spectrum-weighted mean period `sum(P) / sum(P f)` over positive
/// frequencies of the periodogram, in samples.
pub fn spectrum_weighted_period(imf: &[f64]) -> Result<f64> {
    let n = imf.len();
    if n < 2 {
        return Err(Error::TooShort { min: 2, actual: n });
    }
    let mut buf: Vec<Complex64> = imf.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::<f64>::new()
        .plan_fft_forward(n)
        .process(&mut buf);
    let (mut power, mut weighted) = (0.0, 0.0);
    for (k, c) in buf.iter().enumerate().take(n / 2 + 1).skip(1) {
        let p = c.norm_sqr();
        power += p;
        weighted += p * k as f64 / n as f64;
    }
    if weighted == 0.0 {
        return Err(Error::NoMaxima);
    }
    Ok(power / weighted)
}

/// Quantile multiplier for the supported confidence levels.
pub fn k_for_confidence(confidence: f64) -> Result<f64> {
    const TABLE: [(f64, f64); 3] = [(0.90, 1.645), (0.95, 1.960), (0.99, 2.326)];
    TABLE
        .iter()
        .find(|(c, _)| (c - confidence).abs() < 1e-9)
        .map(|(_, k)| *k)
        .ok_or(Error::UnsupportedConfidence(confidence))
}

/// `y = -x -/+ k sqrt(2/N) e^(x/2)` at each `x`.
pub fn spread_lines(xs: &[f64], n: usize, k: f64) -> (Vec<f64>, Vec<f64>) {
    let c = k * (2.0 / n as f64).sqrt();
    xs.iter()
        .map(|&x| {
            let w = c * (0.5 * x).exp();
            (-x - w, -x + w)
        })
        .unzip()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ImfStat {
    pub n: usize,
    pub energy: f64,
    pub mean_period: f64,
    /// `ln mean_period`.
    pub x: f64,
    /// `ln energy`; `None` when the energy is zero.
    pub y: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BandPosition {
    Above,
    Inside,
    Below,
    Undefined,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpreadPoint {
    pub x: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SstReport {
    pub stats: Vec<ImfStat>,
    pub confidence: f64,
    pub k: f64,
    pub samples: usize,
    pub spread: Vec<SpreadPoint>,
    pub position: Vec<BandPosition>,
    /// Above the upper spread line, for IMFs other than the first.
    pub significant: Vec<bool>,
    /// The first IMF does not follow the white-noise law and is never judged.
    pub excluded: Vec<bool>,
}

impl SstReport {
    pub fn significant_indices(&self) -> Vec<usize> {
        self.stats
            .iter()
            .zip(&self.significant)
            .filter(|(_, s)| **s)
            .map(|(st, _)| st.n)
            .collect()
    }
}

/// Where `(x, y)` falls relative to the band.
pub fn band_position(x: f64, y: Option<f64>, n: usize, k: f64) -> BandPosition {
    let Some(y) = y else {
        return BandPosition::Undefined;
    };
    let (lo, hi) = spread_lines(&[x], n, k);
    if y > hi[0] {
        BandPosition::Above
    } else if y < lo[0] {
        BandPosition::Below
    } else {
        BandPosition::Inside
    }
}

/// Judges each IMF of a unit-variance series.
pub fn classify_significance(
    imfset: &ImfSet,
    samples: usize,
    confidence: f64,
) -> Result<SstReport> {
    let k = k_for_confidence(confidence)?;
    let mut stats = Vec::with_capacity(imfset.len());
    for imf in imfset.imfs() {
        let energy = energy_density(&imf.values)?;
        let period = mean_period(&imf.values)?;
        stats.push(ImfStat {
            n: imf.index,
            energy,
            mean_period: period,
            x: period.ln(),
            y: (energy > 0.0).then(|| energy.ln()),
        });
    }
    let position: Vec<BandPosition> = stats
        .iter()
        .map(|s| band_position(s.x, s.y, samples, k))
        .collect();
    let excluded: Vec<bool> = stats.iter().map(|s| s.n == 1).collect();
    let significant = position
        .iter()
        .zip(&excluded)
        .map(|(p, ex)| !ex && *p == BandPosition::Above)
        .collect();
    let x_max = (samples as f64).ln().max(1.0);
    let grid: Vec<f64> = (0..=100).map(|i| x_max * i as f64 / 100.0).collect();
    let (lower, upper) = spread_lines(&grid, samples, k);
    let spread = grid
        .iter()
        .zip(lower.iter().zip(&upper))
        .map(|(&x, (&lower, &upper))| SpreadPoint { x, lower, upper })
        .collect();
    Ok(SstReport {
        stats,
        confidence,
        k,
        samples,
        spread,
        position,
        significant,
        excluded,
    })
}

/// Zero-mean, unit-variance copy of `series` with the removed mean and
/// standard deviation.
pub fn standardize(series: &[f64]) -> Result<(Vec<f64>, f64, f64)> {
    if series.is_empty() {
        return Err(Error::EmptySeries);
    }
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    let var = series.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    if !(var > 0.0) {
        return Err(Error::ConstantSeries);
    }
    let sd = var.sqrt();
    Ok((series.iter().map(|v| (v - mean) / sd).collect(), mean, sd))
}

/// Standardizes, decomposes and judges `series` in one go. The returned IMFs
/// are those of the standardized series.
pub fn significance_test(
    series: &[f64],
    confidence: f64,
    config: &SiftConfig,
) -> Result<(ImfSet, SstReport)> {
    let (z, _, _) = standardize(series)?;
    let set = sift(&z, config)?;
    let report = classify_significance(&set, z.len(), confidence)?;
    Ok((set, report))
}
