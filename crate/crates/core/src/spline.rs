//! Natural cubic spline interpolation.

use crate::error::{Error, Result};

/// Natural cubic spline (zero second derivative at both ends).
#[derive(Debug, Clone)]
pub struct NaturalCubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Second derivative at each knot.
    m: Vec<f64>,
}

impl NaturalCubicSpline {
    /// Knots must be strictly increasing; two knots give a straight line.
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::LengthMismatch {
                expected: xs.len(),
                actual: ys.len(),
            });
        }
        if xs.len() < 2 {
            return Err(Error::TooShort {
                min: 2,
                actual: xs.len(),
            });
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidSegment(
                "spline knots must be strictly increasing".into(),
            ));
        }
        let m = second_derivatives(&xs, &ys);
        Ok(Self { xs, ys, m })
    }

    /// Evaluates at `x`, extrapolating with the end cubic outside the knots.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        let i = self.xs.partition_point(|&k| k <= x).clamp(1, n - 1) - 1;
        self.eval_in(i, x)
    }

    /// Evaluates at each point of an ascending grid in one pass.
    pub fn eval_sorted(&self, grid: impl IntoIterator<Item = f64>) -> Vec<f64> {
        let n = self.xs.len();
        let mut i = 0;
        grid.into_iter()
            .map(|x| {
                while i + 2 < n && x >= self.xs[i + 1] {
                    i += 1;
                }
                self.eval_in(i, x)
            })
            .collect()
    }

    fn eval_in(&self, i: usize, x: f64) -> f64 {
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let h = x1 - x0;
        let a = (x1 - x) / h;
        let b = (x - x0) / h;
        a * self.ys[i]
            + b * self.ys[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }
}

/// Solves the tridiagonal system for interior second derivatives (Thomas algorithm).
fn second_derivatives(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut m = vec![0.0; n];
    if n < 3 {
        return m;
    }
    let k = n - 2;
    let mut diag = vec![0.0; k];
    let mut upper = vec![0.0; k];
    let mut rhs = vec![0.0; k];
    for j in 0..k {
        let i = j + 1;
        let h0 = xs[i] - xs[i - 1];
        let h1 = xs[i + 1] - xs[i];
        diag[j] = 2.0 * (h0 + h1);
        upper[j] = h1;
        rhs[j] = 6.0 * ((ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0);
    }
    // Forward sweep; the sub-diagonal entry of row j is h0 = xs[j+1] - xs[j].
    for j in 1..k {
        let lower = xs[j + 1] - xs[j];
        let w = lower / diag[j - 1];
        diag[j] -= w * upper[j - 1];
        rhs[j] -= w * rhs[j - 1];
    }
    m[k] = rhs[k - 1] / diag[k - 1];
    for j in (0..k - 1).rev() {
        m[j + 1] = (rhs[j] - upper[j] * m[j + 2]) / diag[j];
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn interpolates_knots() {
        let xs = vec![0.0, 1.0, 2.5, 4.0, 7.0];
        let ys = vec![1.0, -2.0, 0.5, 3.0, 2.0];
        let s = NaturalCubicSpline::new(xs.clone(), ys.clone()).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            assert_abs_diff_eq!(s.eval(*x), *y, epsilon = 1e-12);
        }
    }

    #[test]
    fn reproduces_lines() {
        let xs: Vec<f64> = (0..6).map(|i| i as f64 * 1.7).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 - 0.5 * x).collect();
        let s = NaturalCubicSpline::new(xs, ys).unwrap();
        for x in [-1.0, 0.3, 4.4, 9.0, 12.0] {
            assert_abs_diff_eq!(s.eval(x), 3.0 - 0.5 * x, epsilon = 1e-12);
        }
    }

    #[test]
    fn natural_end_conditions() {
        let xs = vec![0.0, 1.0, 2.0, 3.0];
        let ys = vec![0.0, 1.0, 0.0, 1.0];
        let s = NaturalCubicSpline::new(xs, ys).unwrap();
        assert_eq!(s.m[0], 0.0);
        assert_eq!(s.m[3], 0.0);
        // Second derivative by finite differences near the left end.
        let h = 1e-4;
        let d2 = (s.eval(2.0 * h) - 2.0 * s.eval(h) + s.eval(0.0)) / (h * h);
        assert!(d2.abs() < 1e-2);
    }

    #[test]
    fn sorted_eval_matches_pointwise() {
        let xs = vec![-2.0, 0.0, 1.0, 5.0, 6.0, 9.0];
        let ys = vec![0.0, 2.0, -1.0, 4.0, 4.5, 0.0];
        let s = NaturalCubicSpline::new(xs, ys).unwrap();
        let grid: Vec<f64> = (-30..=100).map(|i| i as f64 * 0.1).collect();
        let fast = s.eval_sorted(grid.iter().copied());
        for (x, v) in grid.iter().zip(fast) {
            assert_abs_diff_eq!(s.eval(*x), v, epsilon = 1e-12);
        }
    }

    #[test]
    fn rejects_bad_knots() {
        assert!(NaturalCubicSpline::new(vec![0.0], vec![1.0]).is_err());
        assert!(NaturalCubicSpline::new(vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
        assert!(NaturalCubicSpline::new(vec![0.0, 1.0], vec![1.0]).is_err());
    }
}
