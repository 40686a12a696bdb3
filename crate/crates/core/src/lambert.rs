//! Multi-revolution Lambert solver.
//!
//! Izzo's non-dimensional formulation: the time of flight is written as a
//! function `T(x)` of a single free variable `x` in `(-1, inf)` and solved
//! with Householder iterations. For `M > 0` full revolutions `T(x)` has a
//! minimum at `x_min`; the two branches on either side of it are the
//! `Low` (`x > x_min`) and `High` (`x < x_min`) path solutions. Each branch
//! falls back to bisection inside its bracket if Householder drifts.

use std::f64::consts::PI;

use nalgebra::Vector3;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    Low,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Prograde,
    Retrograde,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambertSolution {
    pub v0: Vector3<f64>,
    pub vf: Vector3<f64>,
    pub revs: u32,
    pub branch: Branch,
}

const TOL: f64 = 1e-14;
const MAX_ITER: usize = 60;

/// Velocities at both ends of the transfer with `revs` full revolutions.
/// `branch` is ignored when `revs == 0`.
pub fn lambert(
    r0: &Vector3<f64>,
    rf: &Vector3<f64>,
    tof: f64,
    mu: f64,
    revs: u32,
    branch: Branch,
    direction: Direction,
) -> Result<(Vector3<f64>, Vector3<f64>)> {
    let geom = Geometry::new(r0, rf, tof, mu, direction)?;
    let x = geom.solve_x(revs, branch)?;
    Ok(geom.velocities(x))
}

/// Every solution with up to `max_revs` revolutions (both branches for
/// each multi-revolution count) that exists for this time of flight.
pub fn lambert_all(
    r0: &Vector3<f64>,
    rf: &Vector3<f64>,
    tof: f64,
    mu: f64,
    max_revs: u32,
    direction: Direction,
) -> Result<Vec<LambertSolution>> {
    let geom = Geometry::new(r0, rf, tof, mu, direction)?;
    let mut out = Vec::new();
    let top = geom.max_revs().min(max_revs);
    for revs in 0..=top {
        let branches: &[Branch] = if revs == 0 { &[Branch::Low] } else { &[Branch::Low, Branch::High] };
        for &branch in branches {
            if let Ok(x) = geom.solve_x(revs, branch) {
                let (v0, vf) = geom.velocities(x);
                out.push(LambertSolution { v0, vf, revs, branch });
            }
        }
    }
    Ok(out)
}

struct Geometry {
    lambda: f64,
    t: f64,
    r1: f64,
    r2: f64,
    c: f64,
    gamma: f64,
    ir1: Vector3<f64>,
    ir2: Vector3<f64>,
    it1: Vector3<f64>,
    it2: Vector3<f64>,
}

impl Geometry {
    fn new(r0: &Vector3<f64>, rf: &Vector3<f64>, tof: f64, mu: f64, direction: Direction) -> Result<Self> {
        if !(tof > 0.0) || !(mu > 0.0) {
            return Err(Error::Lambert(format!("need tof > 0 and mu > 0, got tof = {tof}, mu = {mu}")));
        }
        let r1 = r0.norm();
        let r2 = rf.norm();
        if r1 == 0.0 || r2 == 0.0 {
            return Err(Error::Lambert("zero position vector".into()));
        }
        let chord = rf - r0;
        let c = chord.norm();
        let s = 0.5 * (r1 + r2 + c);
        let ir1 = r0 / r1;
        let ir2 = rf / r2;
        let cross = ir1.cross(&ir2);
        let mut lambda = (1.0 - c / s).max(0.0).sqrt();

        let (mut it1, mut it2);
        if cross.norm() > 1e-12 {
            let ih = cross.normalize();
            if ih.z < 0.0 {
                lambda = -lambda;
                it1 = ir1.cross(&ih);
                it2 = ir2.cross(&ih);
            } else {
                it1 = ih.cross(&ir1);
                it2 = ih.cross(&ir2);
            }
        } else if ir1.dot(&ir2) < 0.0 && ir1.z.abs() < 1.0 - 1e-12 {
            // Exactly opposed endpoints leave the plane undetermined; use the
            // one whose normal is closest to +z.
            let ez = Vector3::z();
            let ih = (ez - ir1 * ir1.dot(&ez)).normalize();
            it1 = ih.cross(&ir1);
            it2 = ih.cross(&ir2);
        } else {
            return Err(Error::Lambert("collinear endpoints leave the transfer plane undefined".into()));
        }
        if direction == Direction::Retrograde {
            lambda = -lambda;
            it1 = -it1;
            it2 = -it2;
        }
        Ok(Self {
            lambda,
            t: tof * (2.0 * mu / s.powi(3)).sqrt(),
            r1,
            r2,
            c,
            gamma: (mu * s / 2.0).sqrt(),
            ir1,
            ir2,
            it1,
            it2,
        })
    }

    fn y(&self, x: f64) -> f64 {
        (1.0 - self.lambda * self.lambda * (1.0 - x * x)).sqrt()
    }

    fn tof(&self, x: f64, m: u32) -> f64 {
        let l = self.lambda;
        let y = self.y(x);
        if m == 0 && x > 0.6_f64.sqrt() && x < 1.4_f64.sqrt() {
            let eta = y - l * x;
            let s1 = 0.5 * (1.0 - l - x * eta);
            let q = 4.0 / 3.0 * hyp2f1b(s1);
            0.5 * (eta.powi(3) * q + 4.0 * l * eta)
        } else {
            let psi = if x < 1.0 {
                (x * y + l * (1.0 - x * x)).clamp(-1.0, 1.0).acos()
            } else if x > 1.0 {
                ((y - x * l) * (x * x - 1.0).sqrt()).asinh()
            } else {
                0.0
            };
            let one_m_x2 = 1.0 - x * x;
            ((psi + m as f64 * PI) / one_m_x2.abs().sqrt() - x + l * y) / one_m_x2
        }
    }

    /// First three derivatives of `T(x)`.
    fn derivatives(&self, x: f64, t: f64) -> (f64, f64, f64) {
        let l = self.lambda;
        let y = self.y(x);
        let one_m_x2 = 1.0 - x * x;
        let l2 = l * l;
        let l3 = l2 * l;
        let d1 = (3.0 * t * x - 2.0 + 2.0 * l3 * x / y) / one_m_x2;
        let d2 = (3.0 * t + 5.0 * x * d1 + 2.0 * (1.0 - l2) * l3 / y.powi(3)) / one_m_x2;
        let d3 = (7.0 * x * d2 + 8.0 * d1 - 6.0 * (1.0 - l2) * l3 * l2 * x / y.powi(5)) / one_m_x2;
        (d1, d2, d3)
    }

    /// Location and value of the minimum of `T(x)` for `m >= 1`.
    fn t_min(&self, m: u32) -> Result<(f64, f64)> {
        if self.lambda == 1.0 {
            return Ok((0.0, self.tof(0.0, m)));
        }
        let mut x = 0.1;
        for _ in 0..MAX_ITER {
            let t = self.tof(x, m);
            let (d1, d2, d3) = self.derivatives(x, t);
            let denom = 2.0 * d2 * d2 - d1 * d3;
            if d2 == 0.0 || denom == 0.0 {
                break;
            }
            let next = (x - 2.0 * d1 * d2 / denom).clamp(-1.0 + 1e-12, 1.0 - 1e-12);
            let done = (next - x).abs() < TOL;
            x = next;
            if done {
                return Ok((x, self.tof(x, m)));
            }
        }
        Err(Error::Lambert(format!("minimum time of flight search failed for {m} revolutions")))
    }

    fn max_revs(&self) -> u32 {
        let mut m_max = (self.t / PI).floor() as u32;
        let t00 = self.lambda.acos() + self.lambda * (1.0 - self.lambda * self.lambda).sqrt();
        if m_max > 0 && self.t < t00 + m_max as f64 * PI {
            match self.t_min(m_max) {
                Ok((_, tmin)) if self.t >= tmin => {}
                _ => m_max -= 1,
            }
        }
        m_max
    }

    fn solve_x(&self, m: u32, branch: Branch) -> Result<f64> {
        let (t, l) = (self.t, self.lambda);
        if m == 0 {
            let t00 = l.acos() + l * (1.0 - l * l).sqrt();
            let t1 = 2.0 / 3.0 * (1.0 - l.powi(3));
            let x0 = if t >= t00 {
                (t00 / t).powf(2.0 / 3.0) - 1.0
            } else if t < t1 {
                2.5 * t1 / t * (t1 - t) / (1.0 - l.powi(5)) + 1.0
            } else {
                (t00 / t).powf((t1 / t00).log2()) - 1.0
            };
            // T(x) decreases monotonically on (-1, inf) for zero revolutions.
            let x = self
                .householder(x0, m)
                .filter(|x| *x > -1.0 && self.tof_residual_ok(*x, m));
            return match x {
                Some(x) => Ok(x),
                None => self.bisect(-1.0 + 1e-14, upper_zero_rev_bracket(self, m), m, false),
            };
        }

        let (x_min, t_min) = self.t_min(m)?;
        if t < t_min {
            return Err(Error::Lambert(format!(
                "time of flight below the {m}-revolution minimum"
            )));
        }
        let a = ((m as f64 * PI + PI) / (8.0 * t)).powf(2.0 / 3.0);
        let x0l = (a - 1.0) / (a + 1.0);
        let b = (8.0 * t / (m as f64 * PI)).powf(2.0 / 3.0);
        let x0r = (b - 1.0) / (b + 1.0);
        let (x0, on_side): (f64, Box<dyn Fn(f64) -> bool>) = match branch {
            Branch::Low => (x0l.max(x0r), Box::new(move |x: f64| x >= x_min && x < 1.0)),
            Branch::High => (x0l.min(x0r), Box::new(move |x: f64| x <= x_min && x > -1.0)),
        };
        if let Some(x) = self.householder(x0, m) {
            if on_side(x) && self.tof_residual_ok(x, m) {
                return Ok(x);
            }
        }
        match branch {
            Branch::Low => self.bisect(x_min, 1.0 - 1e-14, m, true),
            Branch::High => self.bisect(-1.0 + 1e-14, x_min, m, false),
        }
    }

    fn tof_residual_ok(&self, x: f64, m: u32) -> bool {
        (self.tof(x, m) - self.t).abs() <= 1e-9 * self.t.max(1.0)
    }

    fn householder(&self, mut x: f64, m: u32) -> Option<f64> {
        for _ in 0..MAX_ITER {
            let tx = self.tof(x, m);
            let f = tx - self.t;
            let (d1, d2, d3) = self.derivatives(x, tx);
            let next = x - f * ((d1 * d1 - f * d2 / 2.0) / (d1 * (d1 * d1 - f * d2) + d3 * f * f / 6.0));
            if !next.is_finite() {
                return None;
            }
            if (next - x).abs() < TOL {
                return Some(next);
            }
            x = next;
        }
        None
    }

    /// Bisection on a bracket where `T - t` changes sign; `increasing`
    /// gives the direction of `T` on the bracket.
    fn bisect(&self, mut lo: f64, mut hi: f64, m: u32, increasing: bool) -> Result<f64> {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let above = self.tof(mid, m) > self.t;
            if above == increasing {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 4.0 * f64::EPSILON * mid.abs().max(1.0) {
                break;
            }
        }
        let x = 0.5 * (lo + hi);
        if self.tof_residual_ok(x, m) {
            Ok(x)
        } else {
            Err(Error::Lambert(format!("no convergence for {m} revolutions")))
        }
    }

    fn velocities(&self, x: f64) -> (Vector3<f64>, Vector3<f64>) {
        let l = self.lambda;
        let y = self.y(x);
        let rho = (self.r1 - self.r2) / self.c;
        let sigma = (1.0 - rho * rho).max(0.0).sqrt();
        let g = self.gamma;
        let vr1 = g * ((l * y - x) - rho * (l * y + x)) / self.r1;
        let vr2 = -g * ((l * y - x) + rho * (l * y + x)) / self.r2;
        let vt1 = g * sigma * (y + l * x) / self.r1;
        let vt2 = g * sigma * (y + l * x) / self.r2;
        (self.ir1 * vr1 + self.it1 * vt1, self.ir2 * vr2 + self.it2 * vt2)
    }
}

fn upper_zero_rev_bracket(geom: &Geometry, m: u32) -> f64 {
    let mut hi = 2.0;
    while geom.tof(hi, m) > geom.t && hi < 1e6 {
        hi *= 2.0;
    }
    hi
}

/// Gauss hypergeometric series 2F1(3, 1; 5/2; z) for |z| < 1.
fn hyp2f1b(z: f64) -> f64 {
    if z >= 1.0 {
        return f64::INFINITY;
    }
    let mut res = 1.0;
    let mut term = 1.0;
    let mut i = 0.0;
    loop {
        term *= (3.0 + i) * (1.0 + i) / (2.5 + i) * z / (i + 1.0);
        let prev = res;
        res += term;
        if res == prev {
            return res;
        }
        i += 1.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{AU, MU_SUN};
    use crate::elements::CartesianState;
    use crate::kepler::landing_error;
    use approx::assert_relative_eq;

    #[test]
    fn hohmann_half_transfer() {
        let (r1, r2) = (AU, 1.524 * AU);
        let tof = PI * ((0.5 * (r1 + r2)).powi(3) / MU_SUN).sqrt();
        let a = Vector3::new(r1, 0.0, 0.0);
        let b = Vector3::new(-r2, 0.0, 0.0);
        let (v0, vf) = lambert(&a, &b, tof, MU_SUN, 0, Branch::Low, Direction::Prograde).unwrap();
        let expected = (2.0 * MU_SUN * r2 / (r1 * (r1 + r2))).sqrt();
        assert_relative_eq!(v0.norm(), expected, max_relative = 1e-9);
        assert!(v0.x.abs() < 1e-6 * expected, "radial component {}", v0.x);
        assert!(v0.y > 0.0);
        assert!(vf.y < 0.0);
    }

    #[test]
    fn zero_rev_lands_on_target() {
        let a = Vector3::new(AU, 0.1 * AU, 0.02 * AU);
        let b = Vector3::new(-0.3 * AU, 1.3 * AU, -0.1 * AU);
        let tof = 200.0 * 86400.0;
        for dir in [Direction::Prograde, Direction::Retrograde] {
            let (v0, _) = lambert(&a, &b, tof, MU_SUN, 0, Branch::Low, dir).unwrap();
            let err = landing_error(&CartesianState { r: a, v: v0 }, tof, &b, MU_SUN).unwrap();
            assert!(err < 1e-8, "{dir:?}: {err}");
        }
    }

    #[test]
    fn multi_rev_branches_are_distinct_and_land() {
        let a = Vector3::new(AU, 0.0, 0.0);
        let b = Vector3::new(0.2 * AU, 1.4 * AU, 0.05 * AU);
        let tof = 3.0 * 365.25 * 86400.0;
        let lo = lambert(&a, &b, tof, MU_SUN, 1, Branch::Low, Direction::Prograde).unwrap();
        let hi = lambert(&a, &b, tof, MU_SUN, 1, Branch::High, Direction::Prograde).unwrap();
        assert!((lo.0 - hi.0).norm() > 1.0);
        for (v0, _) in [lo, hi] {
            let err = landing_error(&CartesianState { r: a, v: v0 }, tof, &b, MU_SUN).unwrap();
            assert!(err < 1e-8, "{err}");
        }
    }

    #[test]
    fn too_many_revolutions_is_an_error() {
        let a = Vector3::new(AU, 0.0, 0.0);
        let b = Vector3::new(0.0, AU, 0.0);
        let tof = 100.0 * 86400.0;
        assert!(lambert(&a, &b, tof, MU_SUN, 3, Branch::Low, Direction::Prograde).is_err());
    }

    #[test]
    fn collinear_same_direction_is_an_error() {
        let a = Vector3::new(AU, 0.0, 0.0);
        let b = Vector3::new(2.0 * AU, 0.0, 0.0);
        assert!(lambert(&a, &b, 1e7, MU_SUN, 0, Branch::Low, Direction::Prograde).is_err());
    }
}
