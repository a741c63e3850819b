//! Empirical mode decomposition.
//!
//! A series is sifted into intrinsic mode functions (IMFs) and a residue:
//! `x = sum(imf) + residue`. Each sifting pass subtracts the mean of the upper
//! and lower natural-spline envelopes; the extrema nearest each boundary are
//! mirrored across it before the splines are built.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spline::NaturalCubicSpline;

/// Indices of strict local maxima and minima. Flat runs count once, at the
/// midpoint of the run.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Extrema {
    pub maxima: Vec<usize>,
    pub minima: Vec<usize>,
}

impl Extrema {
    pub fn count(&self) -> usize {
        self.maxima.len() + self.minima.len()
    }
}

pub fn find_extrema(series: &[f64]) -> Result<Extrema> {
    let n = series.len();
    if n < 3 {
        return Err(Error::TooShort { min: 3, actual: n });
    }
    let mut ext = Extrema::default();
    let mut i = 1;
    while i < n - 1 {
        let v = series[i];
        let mut j = i;
        while j + 1 < n && series[j + 1] == v {
            j += 1;
        }
        if j == n - 1 {
            break;
        }
        let (left, right) = (series[i - 1], series[j + 1]);
        if left < v && right < v {
            ext.maxima.push((i + j) / 2);
        } else if left > v && right > v {
            ext.minima.push((i + j) / 2);
        }
        i = j + 1;
    }
    Ok(ext)
}

/// Sign changes, ignoring exact zeros.
pub fn zero_crossings(series: &[f64]) -> usize {
    let mut last = 0.0_f64;
    let mut count = 0;
    for &v in series {
        if v == 0.0 {
            continue;
        }
        if last != 0.0 && (v > 0.0) != (last > 0.0) {
            count += 1;
        }
        last = v;
    }
    count
}

/// `|#extrema - #zero crossings| <= 1`.
pub fn satisfies_imf_counts(series: &[f64]) -> bool {
    match find_extrema(series) {
        Ok(ext) => ext.count().abs_diff(zero_crossings(series)) <= 1,
        Err(_) => false,
    }
}

fn envelope(series: &[f64], idx: &[usize]) -> Result<Vec<f64>> {
    let n = series.len();
    let last = (n - 1) as f64;
    let mut xs = Vec::with_capacity(idx.len() + 4);
    let mut ys = Vec::with_capacity(idx.len() + 4);
    let head = idx.len().min(2);
    for &p in idx[..head].iter().rev() {
        xs.push(-(p as f64));
        ys.push(series[p]);
    }
    for &p in idx {
        xs.push(p as f64);
        ys.push(series[p]);
    }
    for &p in idx[idx.len() - head..].iter().rev() {
        xs.push(2.0 * last - p as f64);
        ys.push(series[p]);
    }
    let spline = NaturalCubicSpline::new(xs, ys)?;
    Ok(spline.eval_sorted((0..n).map(|t| t as f64)))
}

/// Pointwise mean of the upper and lower spline envelopes.
pub fn envelope_mean(series: &[f64]) -> Result<Vec<f64>> {
    let ext = find_extrema(series)?;
    if ext.maxima.is_empty() || ext.minima.is_empty() {
        return Err(Error::InsufficientExtrema {
            maxima: ext.maxima.len(),
            minima: ext.minima.len(),
        });
    }
    let upper = envelope(series, &ext.maxima)?;
    let lower = envelope(series, &ext.minima)?;
    Ok(upper
        .iter()
        .zip(&lower)
        .map(|(u, l)| 0.5 * (u + l))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SiftConfig {
    /// Stop sifting once `sum((h_prev - h)^2) / sum(h_prev^2)` drops below this.
    pub sd_threshold: f64,
    pub max_sift_iterations: usize,
    /// Defaults to `ceil(log2(N)) + 1`.
    pub max_imfs: Option<usize>,
    /// Keep sifting until the extrema / zero-crossing counts agree within one,
    /// as well as meeting the SD criterion (still bounded by the iteration cap).
    pub enforce_count_condition: bool,
}

impl Default for SiftConfig {
    fn default() -> Self {
        Self {
            sd_threshold: 0.2,
            max_sift_iterations: 50,
            max_imfs: None,
            enforce_count_condition: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Imf {
    /// 1-based extraction order.
    pub index: usize,
    pub values: Vec<f64>,
    pub sift_iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImfSet {
    imfs: Vec<Imf>,
    residue: Vec<f64>,
}

impl ImfSet {
    pub fn new(imfs: Vec<Imf>, residue: Vec<f64>) -> Self {
        Self { imfs, residue }
    }

    pub fn imfs(&self) -> &[Imf] {
        &self.imfs
    }

    pub fn residue(&self) -> &[f64] {
        &self.residue
    }

    pub fn len(&self) -> usize {
        self.imfs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.imfs.is_empty()
    }

    pub fn series_len(&self) -> usize {
        self.residue.len()
    }

    /// Sum of all IMFs plus the residue.
    pub fn reconstruct(&self) -> Vec<f64> {
        let mut out = self.residue.clone();
        for imf in &self.imfs {
            for (o, v) in out.iter_mut().zip(&imf.values) {
                *o += v;
            }
        }
        out
    }

    /// Every component multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            imfs: self
                .imfs
                .iter()
                .map(|imf| Imf {
                    values: imf.values.iter().map(|v| v * factor).collect(),
                    ..imf.clone()
                })
                .collect(),
            residue: self.residue.iter().map(|v| v * factor).collect(),
        }
    }
}

/// Decomposes `series` into IMFs ordered from fastest to slowest.
pub fn sift(series: &[f64], config: &SiftConfig) -> Result<ImfSet> {
    let n = series.len();
    if n < 8 {
        return Err(Error::TooShort { min: 8, actual: n });
    }
    if series.iter().all(|&v| v == series[0]) {
        return Err(Error::ConstantSeries);
    }
    let cap = config
        .max_imfs
        .unwrap_or_else(|| (n as f64).log2().ceil() as usize + 1);
    let mut residue = series.to_vec();
    let mut imfs = Vec::new();
    while imfs.len() < cap {
        if find_extrema(&residue)?.count() < 3 {
            break;
        }
        let mut h = residue.clone();
        let mut iterations = 0;
        while iterations < config.max_sift_iterations {
            let mean = match envelope_mean(&h) {
                Ok(m) => m,
                Err(Error::InsufficientExtrema { .. }) => break,
                Err(e) => return Err(e),
            };
            let change: f64 = mean.iter().map(|m| m * m).sum();
            let energy: f64 = h.iter().map(|v| v * v).sum();
            for (v, m) in h.iter_mut().zip(&mean) {
                *v -= m;
            }
            iterations += 1;
            // Stop tests start at the second pass, whose input is offset-free.
            if iterations == 1 {
                continue;
            }
            let sd = if energy > 0.0 { change / energy } else { 0.0 };
            if sd < config.sd_threshold
                && (!config.enforce_count_condition || satisfies_imf_counts(&h))
            {
                break;
            }
        }
        for (r, v) in residue.iter_mut().zip(&h) {
            *r -= v;
        }
        imfs.push(Imf {
            index: imfs.len() + 1,
            values: h,
            sift_iterations: iterations,
        });
    }
    Ok(ImfSet { imfs, residue })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn tone(n: usize, period: f64) -> Vec<f64> {
        (0..n)
            .map(|t| (2.0 * PI * t as f64 / period).sin())
            .collect()
    }

    fn corr(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let ma = a.iter().sum::<f64>() / n;
        let mb = b.iter().sum::<f64>() / n;
        let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
        for (x, y) in a.iter().zip(b) {
            sab += (x - ma) * (y - mb);
            saa += (x - ma).powi(2);
            sbb += (y - mb).powi(2);
        }
        sab / (saa * sbb).sqrt()
    }

    #[test]
    fn extrema_basics() {
        let e = find_extrema(&[0.0, 1.0, 0.0]).unwrap();
        assert_eq!(e.maxima, vec![1]);
        assert!(e.minima.is_empty());
        let mono: Vec<f64> = (0..50).map(|i| i as f64 * 0.3).collect();
        assert_eq!(find_extrema(&mono).unwrap().count(), 0);
        assert!(matches!(
            find_extrema(&[1.0, 2.0]),
            Err(Error::TooShort { .. })
        ));
    }

    #[test]
    fn plateau_midpoint() {
        let e = find_extrema(&[0.0, 2.0, 2.0, 2.0, 2.0, 0.0, -1.0, -1.0, 0.5]).unwrap();
        assert_eq!(e.maxima, vec![2]);
        assert_eq!(e.minima, vec![6]);
        // A plateau touching an end is not an extremum.
        let e = find_extrema(&[1.0, 1.0, 0.0, 3.0, 3.0]).unwrap();
        assert_eq!(e.maxima, Vec::<usize>::new());
        assert_eq!(e.minima, vec![2]);
    }

    #[test]
    fn sine_extrema_count() {
        let e = find_extrema(&tone(1024, 32.0)).unwrap();
        assert!(e.maxima.len().abs_diff(32) <= 1, "{}", e.maxima.len());
        assert!(e.minima.len().abs_diff(32) <= 1, "{}", e.minima.len());
    }

    #[test]
    fn zero_crossing_count() {
        assert_eq!(zero_crossings(&[1.0, -1.0, 1.0]), 2);
        assert_eq!(zero_crossings(&[-1.0, 0.0, 1.0]), 1);
        assert_eq!(zero_crossings(&[1.0, 0.0, 1.0]), 0);
    }

    fn interior(n: usize) -> std::ops::Range<usize> {
        n / 10..n - n / 10
    }

    #[test]
    fn envelope_mean_of_sine_is_zero() {
        let x = tone(1024, 32.0);
        let m = envelope_mean(&x).unwrap();
        for t in interior(1024) {
            assert!(m[t].abs() < 0.05, "t={t} m={}", m[t]);
        }
        let shifted: Vec<f64> = x.iter().map(|v| v + 3.0).collect();
        let m = envelope_mean(&shifted).unwrap();
        for t in interior(1024) {
            assert!((m[t] - 3.0).abs() < 0.05);
        }
    }

    #[test]
    fn envelope_mean_tracks_trend() {
        let n = 1024;
        let a = 0.002;
        let x: Vec<f64> = tone(n, 32.0)
            .iter()
            .enumerate()
            .map(|(t, v)| v + a * t as f64)
            .collect();
        let m = envelope_mean(&x).unwrap();
        let range = a * (n - 1) as f64;
        for t in interior(n) {
            let err = (m[t] - a * t as f64).abs();
            assert!(err < 0.05 * range, "t={t} err={err}");
        }
    }

    #[test]
    fn envelope_needs_extrema() {
        let mono: Vec<f64> = (0..20).map(|i| i as f64).collect();
        assert!(matches!(
            envelope_mean(&mono),
            Err(Error::InsufficientExtrema { .. })
        ));
    }

    #[test]
    fn guards() {
        assert!(matches!(
            sift(&[1.0; 16], &SiftConfig::default()),
            Err(Error::ConstantSeries)
        ));
        assert!(matches!(
            sift(&[1.0, 2.0, 1.0], &SiftConfig::default()),
            Err(Error::TooShort { .. })
        ));
    }

    #[test]
    fn single_tone() {
        let x = tone(1024, 32.0);
        let set = sift(&x, &SiftConfig::default()).unwrap();
        assert!(!set.is_empty());
        assert!(corr(&set.imfs()[0].values, &x) > 0.99);
        let total: f64 = x.iter().map(|v| v * v).sum();
        let rest: f64 = set.imfs()[1..]
            .iter()
            .flat_map(|i| i.values.iter())
            .chain(set.residue())
            .map(|v| v * v)
            .sum();
        assert!(rest < 0.01 * total, "rest energy share {}", rest / total);
    }

    #[test]
    fn two_tones_separate() {
        let n = 2048;
        let fast = tone(n, 16.0);
        let slow = tone(n, 128.0);
        let x: Vec<f64> = fast.iter().zip(&slow).map(|(a, b)| a + b).collect();
        let set = sift(&x, &SiftConfig::default()).unwrap();
        assert!(set.len() >= 2);
        assert!(corr(&set.imfs()[0].values, &fast) > 0.95);
        assert!(corr(&set.imfs()[1].values, &slow) > 0.95);
    }

    #[test]
    fn reconstruction_is_exact() {
        let x: Vec<f64> = (0..700)
            .map(|t| {
                let t = t as f64;
                (t / 7.0).sin() * 2.0 + (t / 41.0).cos() + 0.01 * t + (t * t * 1e-4).sin() * 0.3
            })
            .collect();
        let set = sift(&x, &SiftConfig::default()).unwrap();
        let rec = set.reconstruct();
        let scale = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        for (a, b) in x.iter().zip(&rec) {
            assert!((a - b).abs() <= 1e-9 * scale);
        }
        for imf in set.imfs() {
            assert!(satisfies_imf_counts(&imf.values), "IMF {}", imf.index);
        }
    }

    #[test]
    fn shift_moves_only_the_residue() {
        let x: Vec<f64> = (0..512)
            .map(|t| (t as f64 / 5.0).sin() + 0.5 * (t as f64 / 37.0).sin())
            .collect();
        let c = 10.0;
        let y: Vec<f64> = x.iter().map(|v| v + c).collect();
        let a = sift(&x, &SiftConfig::default()).unwrap();
        let b = sift(&y, &SiftConfig::default()).unwrap();
        assert_eq!(a.len(), b.len());
        for (ia, ib) in a.imfs().iter().zip(b.imfs()) {
            for (u, v) in ia.values.iter().zip(&ib.values) {
                assert!((u - v).abs() < 1e-6);
            }
        }
        for (u, v) in a.residue().iter().zip(b.residue()) {
            assert!((u + c - v).abs() < 1e-6);
        }
    }

    #[test]
    fn imf_cap() {
        let x: Vec<f64> = (0..64).map(|t| ((t * 7919) % 97) as f64).collect();
        let set = sift(&x, &SiftConfig::default()).unwrap();
        assert!(set.len() <= 7);
    }
}
