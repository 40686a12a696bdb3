//! Piecewise cubics on uniform knots over `s in [0, 1]`.

use crate::error::{Error, Result};

/// A piecewise cubic on `n` equal segments of `[0, 1]`.
///
/// Each segment is stored in its local variable `u = s - s_i` as
/// `c0 + c1 u + c2 u^2 + c3 u^3`; [`CubicSpline::coefficients`] gives the
/// equivalent global form `a s^3 + b s^2 + c s + d`.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline {
    local: Vec<[f64; 4]>,
}

impl CubicSpline {
    /// Interpolating C2 spline through `values` at `s_i = i / n` with zero
    /// end slopes. Needs at least two values.
    pub fn clamped(values: &[f64]) -> Result<Self> {
        let n = values.len().checked_sub(1).filter(|&n| n >= 1).ok_or_else(|| {
            Error::InvalidArgument("a clamped spline needs at least two knot values".into())
        })?;
        let h = 1.0 / n as f64;
        let mut slopes = vec![0.0; n + 1];
        if n >= 2 {
            // m[i-1] + 4 m[i] + m[i+1] = 3 (y[i+1] - y[i-1]) / h, m[0] = m[n] = 0.
            let interior = n - 1;
            let mut diag = vec![4.0; interior];
            let mut rhs: Vec<f64> = (1..n).map(|i| 3.0 * (values[i + 1] - values[i - 1]) / h).collect();
            for j in 1..interior {
                let w = 1.0 / diag[j - 1];
                diag[j] -= w;
                rhs[j] -= w * rhs[j - 1];
            }
            slopes[interior] = rhs[interior - 1] / diag[interior - 1];
            for j in (0..interior - 1).rev() {
                slopes[j + 1] = (rhs[j] - slopes[j + 2]) / diag[j];
            }
        }
        Ok(Self::from_hermite(values, &slopes))
    }

    /// Cubic Hermite interpolant of knot values and first derivatives.
    pub fn from_hermite(values: &[f64], slopes: &[f64]) -> Self {
        assert_eq!(values.len(), slopes.len());
        let n = values.len() - 1;
        let h = 1.0 / n as f64;
        let local = (0..n)
            .map(|i| {
                let (y0, y1, m0, m1) = (values[i], values[i + 1], slopes[i], slopes[i + 1]);
                let dy = (y1 - y0) / h;
                [y0, m0, (3.0 * dy - 2.0 * m0 - m1) / h, (m0 + m1 - 2.0 * dy) / (h * h)]
            })
            .collect();
        Self { local }
    }

    /// Builds from global coefficients `[a, b, c, d]` per segment.
    pub fn from_coefficients(coeffs: &[[f64; 4]]) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidArgument("spline needs at least one segment".into()));
        }
        let n = coeffs.len();
        let local = coeffs
            .iter()
            .enumerate()
            .map(|(i, &[a, b, c, d])| {
                let s = i as f64 / n as f64;
                [
                    ((a * s + b) * s + c) * s + d,
                    (3.0 * a * s + 2.0 * b) * s + c,
                    3.0 * a * s + b,
                    a,
                ]
            })
            .collect();
        Ok(Self { local })
    }

    pub fn segments(&self) -> usize {
        self.local.len()
    }

    pub fn knot(&self, i: usize) -> f64 {
        i as f64 / self.local.len() as f64
    }

    /// Global coefficients `[a, b, c, d]` of every segment.
    pub fn coefficients(&self) -> Vec<[f64; 4]> {
        let n = self.local.len();
        self.local
            .iter()
            .enumerate()
            .map(|(i, &[c0, c1, c2, c3])| {
                let s = i as f64 / n as f64;
                [
                    c3,
                    c2 - 3.0 * c3 * s,
                    c1 - 2.0 * c2 * s + 3.0 * c3 * s * s,
                    c0 - c1 * s + c2 * s * s - c3 * s * s * s,
                ]
            })
            .collect()
    }

    #[inline]
    fn locate(&self, s: f64) -> (usize, f64) {
        let n = self.local.len();
        let i = ((s * n as f64).floor().max(0.0) as usize).min(n - 1);
        (i, s - i as f64 / n as f64)
    }

    /// Value at `s`.
    #[inline]
    pub fn value(&self, s: f64) -> f64 {
        let (i, u) = self.locate(s);
        let [c0, c1, c2, c3] = self.local[i];
        ((c3 * u + c2) * u + c1) * u + c0
    }

    /// Value, first and second derivative at `s`.
    #[inline]
    pub fn eval(&self, s: f64) -> (f64, f64, f64) {
        let (i, u) = self.locate(s);
        let [c0, c1, c2, c3] = self.local[i];
        (
            ((c3 * u + c2) * u + c1) * u + c0,
            (3.0 * c3 * u + 2.0 * c2) * u + c1,
            6.0 * c3 * u + 2.0 * c2,
        )
    }

    /// One-sided evaluation at knot `i` using segment `seg` (for
    /// continuity checks).
    pub fn eval_on_segment(&self, seg: usize, s: f64) -> (f64, f64, f64) {
        let [c0, c1, c2, c3] = self.local[seg];
        let u = s - self.knot(seg);
        (
            ((c3 * u + c2) * u + c1) * u + c0,
            (3.0 * c3 * u + 2.0 * c2) * u + c1,
            6.0 * c3 * u + 2.0 * c2,
        )
    }
}
