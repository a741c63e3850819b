//! Pearson correlation, its t-test p-value, and dominant-IMF selection.

use serde::Serialize;

use crate::emd::ImfSet;
use crate::error::{Error, Result};
use crate::special::ln_beta_inc_reg;
use crate::sst::SstReport;

/// Product-moment correlation coefficient.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    if a.len() < 3 {
        return Err(Error::TooShort {
            min: 3,
            actual: a.len(),
        });
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::ConstantInput);
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// A probability kept as its natural logarithm.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct PValue {
    pub ln: f64,
}

/// Values below this are reported as `< 1e-300`.
pub const P_FLOOR: f64 = 1e-300;

impl PValue {
    pub fn zero() -> Self {
        Self {
            ln: f64::NEG_INFINITY,
        }
    }

    /// May underflow to zero for very small p.
    pub fn value(self) -> f64 {
        self.ln.exp()
    }

    pub fn log10(self) -> f64 {
        self.ln / std::f64::consts::LN_10
    }

    /// Decimal exponent, e.g. `-120` for `9.86e-120`.
    pub fn exponent(self) -> i32 {
        self.log10().floor() as i32
    }
}

impl std::fmt::Display for PValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.ln < P_FLOOR.ln() {
            f.write_str("< 1e-300")
        } else {
            write!(f, "{:.3e}", self.value())
        }
    }
}

/// Two-sided p-value of `nu` from the t statistic with `n - 2` degrees of freedom.
///
/// With `t^2 = df nu^2 / (1 - nu^2)`, the tail is `I_{1 - nu^2}(df/2, 1/2)`.
pub fn p_value(nu: f64, n: usize) -> Result<PValue> {
    if n < 3 {
        return Err(Error::TooShort { min: 3, actual: n });
    }
    if !(1.0 - nu.abs() > 4.0 * f64::EPSILON) {
        return Err(Error::DegenerateCorrelation);
    }
    let df = (n - 2) as f64;
    let x = (1.0 - nu) * (1.0 + nu);
    Ok(PValue {
        ln: ln_beta_inc_reg(0.5 * df, 0.5, x).min(0.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelationResult {
    pub nu: f64,
    pub p: PValue,
    pub n: usize,
    /// `|nu| = 1` to rounding; `p` is zero by convention.
    pub degenerate: bool,
}

pub fn correlate(a: &[f64], b: &[f64]) -> Result<CorrelationResult> {
    let nu = pearson(a, b)?;
    let (p, degenerate) = match p_value(nu, a.len()) {
        Ok(p) => (p, false),
        Err(Error::DegenerateCorrelation) => (PValue::zero(), true),
        Err(e) => return Err(e),
    };
    Ok(CorrelationResult {
        nu,
        p,
        n: a.len(),
        degenerate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DominantImf {
    /// 1-based IMF index.
    pub index: usize,
    pub nu: f64,
}

/// The significant IMF most correlated with `original`; ties go to the slower IMF.
pub fn dominant_imf(original: &[f64], imfset: &ImfSet, sst: &SstReport) -> Result<DominantImf> {
    let mut best: Option<DominantImf> = None;
    for (imf, significant) in imfset.imfs().iter().zip(&sst.significant) {
        if !significant {
            continue;
        }
        let nu = pearson(original, &imf.values)?;
        if best.is_none_or(|b| nu >= b.nu) {
            best = Some(DominantImf {
                index: imf.index,
                nu,
            });
        }
    }
    best.ok_or(Error::NoSignificantImf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Exhaustive two-sided permutation p-value: share of orderings of `b`
    /// whose |nu| reaches the observed one.
    fn permutation_p(a: &[f64], b: &[f64]) -> f64 {
        let observed = pearson(a, b).unwrap().abs();
        let mut perm = b.to_vec();
        let n = perm.len();
        let mut c = vec![0usize; n];
        let mut hits = 0u64;
        let mut total = 0u64;
        let mut check = |p: &[f64]| {
            total += 1;
            if pearson(a, p).unwrap().abs() >= observed - 1e-12 {
                hits += 1;
            }
        };
        check(&perm);
        // Heap's algorithm.
        let mut i = 0;
        while i < n {
            if c[i] < i {
                if i % 2 == 0 {
                    perm.swap(0, i);
                } else {
                    perm.swap(c[i], i);
                }
                check(&perm);
                c[i] += 1;
                i = 0;
            } else {
                c[i] = 0;
                i += 1;
            }
        }
        hits as f64 / total as f64
    }

    #[test]
    fn pearson_examples() {
        let a = [1.0, 2.0, 3.0, 4.0];
        assert!((pearson(&a, &a).unwrap() - 1.0).abs() < 1e-15);
        let neg: Vec<f64> = a.iter().map(|v| -v).collect();
        assert!((pearson(&a, &neg).unwrap() + 1.0).abs() < 1e-15);
        // Hand evaluation: deviations (-1.5,-.5,.5,1.5) and (-1.75,-.75,.25,2.25);
        // sum of products 6.5, sums of squares 5 and 8.75.
        let expected = 6.5 / (5.0_f64 * 8.75).sqrt();
        assert!((pearson(&a, &[1.0, 2.0, 3.0, 5.0]).unwrap() - expected).abs() < 1e-15);
        assert!(matches!(pearson(&a, &[1.0; 4]), Err(Error::ConstantInput)));
        assert!(matches!(
            pearson(&a, &[1.0; 3]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn p_value_basics() {
        for n in [3, 10, 500] {
            assert!((p_value(0.0, n).unwrap().value() - 1.0).abs() < 1e-12);
        }
        assert!(matches!(
            p_value(1.0, 10),
            Err(Error::DegenerateCorrelation)
        ));
        let r = correlate(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.p.value(), 0.0);
    }

    #[test]
    fn p_value_matches_t_distribution() {
        use statrs::distribution::{ContinuousCDF, StudentsT};
        for &(nu, n) in &[(0.3, 20usize), (0.5, 12), (-0.7, 9), (0.1, 300)] {
            let df = (n - 2) as f64;
            let t = nu * (df / (1.0 - nu * nu)).sqrt();
            let dist = StudentsT::new(0.0, 1.0, df).unwrap();
            let expect = 2.0 * (1.0 - dist.cdf(t.abs()));
            let got = p_value(nu, n).unwrap().value();
            assert!(
                (got - expect).abs() < 1e-9,
                "nu={nu} n={n}: {got} vs {expect}"
            );
        }
    }

    #[test]
    fn permutation_oracle_small_samples() {
        let cases: [(&[f64], &[f64]); 4] = [
            (
                &[1.2, 2.3, 2.9, 4.4, 5.1, 5.8, 7.2, 8.0],
                &[0.8, 2.9, 2.2, 3.9, 6.0, 4.8, 7.9, 7.1],
            ),
            (
                &[0.3, -1.1, 0.8, 1.9, -0.4, 0.2, 1.1, -0.9],
                &[0.5, -0.2, 0.1, 1.2, 0.9, -1.3, 0.4, -0.1],
            ),
            (
                &[3.0, 1.0, 4.0, 1.5, 5.0, 9.0, 2.0],
                &[2.7, 1.8, 2.8, 1.8, 4.5, 9.0, 0.4],
            ),
            (
                &[0.1, 0.9, 0.4, 0.6, 0.2, 0.8, 0.3, 0.7],
                &[0.15, 0.55, 0.8, 0.25, 0.6, 0.35, 0.9, 0.1],
            ),
        ];
        for (a, b) in cases {
            let nu = pearson(a, b).unwrap();
            let t = p_value(nu, a.len()).unwrap().value();
            let perm = permutation_p(a, b);
            assert!(
                (t - perm).abs() < 0.02,
                "nu={nu}: t-test {t} vs permutation {perm}"
            );
        }
    }

    #[test]
    fn huge_samples_keep_exponent() {
        let p = p_value(0.93, 466).unwrap();
        assert!(p.ln.is_finite());
        assert!(p.exponent() < -150);
        let tiny = p_value(0.999, 466).unwrap();
        assert_eq!(tiny.to_string(), "< 1e-300");
        assert!(tiny.log10() < -300.0);
    }

    proptest! {
        #[test]
        fn pearson_affine_invariance(
            a in prop::collection::vec(-100.0f64..100.0, 5..40),
            scale in 0.01f64..100.0,
            shift in -1e3f64..1e3,
        ) {
            let b: Vec<f64> = a.iter().enumerate().map(|(i, v)| v * 0.5 + (i as f64).sin()).collect();
            let Ok(r) = pearson(&a, &b) else { return Ok(()); };
            let a2: Vec<f64> = a.iter().map(|v| v * scale + shift).collect();
            let r2 = pearson(&a2, &b).unwrap();
            prop_assert!((r - r2).abs() < 1e-9);
            let neg: Vec<f64> = a.iter().map(|v| -v).collect();
            prop_assert!((pearson(&neg, &b).unwrap() + r).abs() < 1e-12);
        }

        #[test]
        fn p_value_monotone(nu in 0.01f64..0.95, dnu in 0.001f64..0.04, n in 5usize..400) {
            let p1 = p_value(nu, n).unwrap().ln;
            let p2 = p_value(nu + dnu, n).unwrap().ln;
            let p3 = p_value(nu, n + 10).unwrap().ln;
            prop_assert!(p2 < p1);
            prop_assert!(p3 < p1);
        }
    }
}
