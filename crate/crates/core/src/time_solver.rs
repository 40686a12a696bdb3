//! The flight time of a shape is an exact quadratic in the free middle
//! value of the semi-latus rectum: with `p(s) = gamma1(s) x + gamma2(s)`,
//! `t = int (gamma1 x + gamma2)^2 dL / (hbar eta1^2) ds`, and nothing else
//! in the integrand depends on `x`. Solving that quadratic enforces the
//! time-of-flight constraint without iteration.

use crate::error::{Error, Result};
use crate::spline::CubicSpline;

/// `a x^2 + b x + c = 0`, with `p1 = origin + x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeQuadratic {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub origin: f64,
}

impl TimeQuadratic {
    pub fn discriminant(&self) -> f64 {
        self.b * self.b - 4.0 * self.a * self.c
    }

    /// Flight time minus the required one at `p1`.
    pub fn residual(&self, p1: f64) -> f64 {
        let x = p1 - self.origin;
        (self.a * x + self.b) * x + self.c
    }

    /// Roots as `p1` values, `(+sqrt branch, -sqrt branch)`.
    pub fn roots(&self) -> Option<(f64, f64)> {
        let d = self.discriminant();
        if !(d >= 0.0) || self.a == 0.0 {
            if self.a == 0.0 && self.b != 0.0 {
                let x = -self.c / self.b;
                return Some((self.origin + x, self.origin + x));
            }
            return None;
        }
        let sq = d.sqrt();
        // Larger-magnitude root first, the other from the product of roots.
        let q = -0.5 * (self.b + self.b.signum() * sq);
        let (x_plus, x_minus) = if q == 0.0 {
            (0.0, 0.0)
        } else if self.b >= 0.0 {
            (self.c / q, q / self.a)
        } else {
            (q / self.a, self.c / q)
        };
        Some((self.origin + x_plus, self.origin + x_minus))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    /// Discriminant of the time quadratic, SI units of `b^2`.
    pub delta_t: f64,
    /// Larger root minus the minimum admissible `p1`, m.
    pub delta_p: f64,
    pub roots: Vec<f64>,
    pub chosen: Option<f64>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.chosen.is_some()
    }
}

/// The `p`-independent pieces of the time integrand.
#[derive(Debug, Clone, Copy)]
pub struct TimeIntegrand<'a> {
    pub f: &'a CubicSpline,
    pub g: &'a CubicSpline,
    pub hbar: &'a CubicSpline,
    pub l0: f64,
    pub dl: f64,
}

impl TimeIntegrand<'_> {
    /// `dL / (hbar (1 + f cos L + g sin L)^2)` at `s`.
    pub fn weight(&self, s: f64) -> Result<f64> {
        let l = self.l0 + s * self.dl;
        let (sl, cl) = l.sin_cos();
        let hbar = self.hbar.value(s);
        let eta1 = 1.0 + self.f.value(s) * cl + self.g.value(s) * sl;
        if !(hbar > 0.0) {
            return Err(Error::DegenerateShape { s, reason: "non-positive angular momentum" });
        }
        if !(eta1 > 0.0) {
            return Err(Error::DegenerateShape { s, reason: "radius denominator 1 + f cos L + g sin L <= 0" });
        }
        Ok(self.dl / (hbar * eta1 * eta1))
    }
}

/// Coefficients by trapezoid quadrature of the expanded integrand, for
/// `p(s) = gamma1(s) x + gamma2(s)` and required flight time `tof`.
pub fn quadratic_coeffs_direct(
    gamma1: impl Fn(f64) -> f64,
    gamma2: impl Fn(f64) -> f64,
    integrand: &TimeIntegrand<'_>,
    tof: f64,
    nodes: usize,
    origin: f64,
) -> Result<TimeQuadratic> {
    if nodes < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 quadrature intervals, got {nodes}")));
    }
    let h = 1.0 / nodes as f64;
    let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
    for i in 0..=nodes {
        let s = i as f64 * h;
        let w = integrand.weight(s)? * if i == 0 || i == nodes { 0.5 } else { 1.0 };
        let (g1, g2) = (gamma1(s), gamma2(s));
        a += w * g1 * g1;
        b += 2.0 * w * g1 * g2;
        c += w * g2 * g2;
    }
    Ok(TimeQuadratic { a: a * h, b: b * h, c: c * h - tof, origin })
}

/// Coefficients from three flight-time evaluations at
/// `p1 = (p0 + p2)/2 + {dp, -dp, 0}` with `dp = (p2 - p0)/2`.
pub fn quadratic_coeffs_sampled(
    mut time_at: impl FnMut(f64) -> Result<f64>,
    p0: f64,
    p2: f64,
    tof: f64,
) -> Result<TimeQuadratic> {
    let origin = 0.5 * (p0 + p2);
    let mut dp = 0.5 * (p2 - p0);
    if dp == 0.0 {
        dp = 0.1 * p0;
    }
    if !(dp.is_finite() && dp != 0.0) {
        return Err(Error::InvalidArgument("zero probe step for the time quadratic".into()));
    }
    let t1 = time_at(origin + dp)?;
    let t2 = time_at(origin - dp)?;
    let t3 = time_at(origin)?;
    Ok(TimeQuadratic {
        a: (t1 + t2 - 2.0 * t3) / (2.0 * dp * dp),
        b: (t1 - t2) / (2.0 * dp),
        c: t3 - tof,
        origin,
    })
}

/// Picks `p1` from the roots: candidates are real roots at or above
/// `p_min`; the one with smaller `delta_v_of` wins, ties go to the `+sqrt`
/// root. An evaluation error counts as an infinite velocity increment.
pub fn solve_free_knot(
    q: &TimeQuadratic,
    p_min: f64,
    mut delta_v_of: impl FnMut(f64) -> Result<f64>,
) -> FeasibilityReport {
    let delta_t = q.discriminant();
    let Some((r1, r2)) = q.roots() else {
        // No real root: measure the margin from the vertex instead.
        let vertex = if q.a != 0.0 { q.origin - q.b / (2.0 * q.a) } else { q.origin };
        return FeasibilityReport { delta_t, delta_p: vertex - p_min, roots: Vec::new(), chosen: None };
    };
    let delta_p = r1.max(r2) - p_min;
    let roots = vec![r1, r2];
    if delta_t < 0.0 || delta_p < 0.0 {
        return FeasibilityReport { delta_t, delta_p, roots, chosen: None };
    }
    let ok1 = r1 >= p_min;
    let ok2 = r2 >= p_min && r2 != r1;
    let chosen = match (ok1, ok2) {
        (true, false) => r1,
        (false, true) => r2,
        _ => {
            let dv1 = delta_v_of(r1).unwrap_or(f64::INFINITY);
            let dv2 = delta_v_of(r2).unwrap_or(f64::INFINITY);
            let tie = (dv1 - dv2).abs() <= 1e-9 * dv1.abs().max(dv2.abs());
            if dv1 <= dv2 || tie {
                r1
            } else {
                r2
            }
        }
    };
    FeasibilityReport { delta_t, delta_p, roots, chosen: Some(chosen) }
}
