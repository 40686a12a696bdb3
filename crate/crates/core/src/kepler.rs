//! Two-body propagation: Kepler's equation, anomaly conversions, analytic
//! ephemerides for catalogue bodies, and Cartesian state propagation.

use nalgebra::Vector3;

use crate::constants::TWO_PI;
use crate::elements::{classical_to_meoe, meoe_to_cartesian, CartesianState, ClassicalElements, Epoch, Meoe};
use crate::error::{Error, Result};

const KEPLER_MAX_ITER: usize = 50;

/// Solves `E - e sin E = M` for the eccentric anomaly.
///
/// Newton steps from `E0 = M + e sin M`, replaced by a Halley step when
/// Newton fails to reduce the residual and by bisection when an update
/// leaves the bracket. The returned `E` carries the same winding as `M`.
pub fn solve_kepler(mean_anomaly: f64, ecc: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&ecc) || !mean_anomaly.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "kepler: need finite M and 0 <= e < 1, got M = {mean_anomaly}, e = {ecc}"
        )));
    }
    let turns = (mean_anomaly / TWO_PI).round();
    let m = mean_anomaly - turns * TWO_PI;
    if ecc == 0.0 || m == 0.0 {
        return Ok(mean_anomaly);
    }
    let residual = |e: f64| e - ecc * e.sin() - m;

    // f(E) is increasing, f(-pi) <= 0 <= f(pi).
    let (mut lo, mut hi) = (-std::f64::consts::PI, std::f64::consts::PI);
    let mut e = m + ecc * m.sin();
    let mut fe = residual(e);
    for _ in 0..KEPLER_MAX_ITER {
        if fe == 0.0 {
            return Ok(e + turns * TWO_PI);
        }
        if fe < 0.0 {
            lo = lo.max(e);
        } else {
            hi = hi.min(e);
        }
        let d1 = 1.0 - ecc * e.cos();
        let mut next = e - fe / d1;
        let mut f_next = residual(next);
        if !(lo..=hi).contains(&next) || f_next.abs() >= fe.abs() {
            let d2 = ecc * e.sin();
            next = e - fe / (d1 - 0.5 * fe * d2 / d1);
            if !(lo..=hi).contains(&next) {
                next = 0.5 * (lo + hi);
            }
            f_next = residual(next);
        }
        let step = next - e;
        e = next;
        fe = f_next;
        if step.abs() <= 4.0 * f64::EPSILON * e.abs().max(1.0) || fe.abs() <= f64::EPSILON {
            return Ok(e + turns * TWO_PI);
        }
    }
    Err(Error::KeplerNonConvergence { mean_anomaly, ecc })
}

// nu - E and E - nu are bounded and continuous in the anomaly, so these
// forms keep the winding of their input.
pub fn eccentric_to_true(ecc_anomaly: f64, e: f64) -> f64 {
    let b = e / (1.0 + (1.0 - e * e).sqrt());
    let (s, c) = ecc_anomaly.sin_cos();
    ecc_anomaly + 2.0 * (b * s / (1.0 - b * c)).atan()
}

pub fn true_to_eccentric(nu: f64, e: f64) -> f64 {
    let b = e / (1.0 + (1.0 - e * e).sqrt());
    let (s, c) = nu.sin_cos();
    nu - 2.0 * (b * s / (1.0 + b * c)).atan()
}

pub fn eccentric_to_mean(ecc_anomaly: f64, e: f64) -> f64 {
    ecc_anomaly - e * ecc_anomaly.sin()
}

/// A body on a fixed Keplerian orbit about the central mass.
#[derive(Debug, Clone, PartialEq)]
pub struct Body {
    pub name: String,
    pub elements: ClassicalElements,
    pub ref_epoch: Epoch,
    pub mu_central: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyState {
    pub elements: ClassicalElements,
    pub meoe: Meoe,
    pub cartesian: CartesianState,
}

impl Body {
    pub fn new(name: impl Into<String>, elements: ClassicalElements, ref_epoch: Epoch, mu_central: f64) -> Result<Self> {
        elements.validate()?;
        Ok(Self { name: name.into(), elements, ref_epoch, mu_central })
    }

    /// Element set and state at `t`; only the true anomaly advances.
    pub fn propagate(&self, t: Epoch) -> Result<BodyState> {
        let el = self.elements;
        let dt = t.seconds_since(self.ref_epoch);
        if !dt.is_finite() {
            return Err(Error::InvalidArgument("non-finite epoch".into()));
        }
        let m0 = eccentric_to_mean(true_to_eccentric(el.nu, el.e), el.e);
        let m = m0 + el.mean_motion(self.mu_central) * dt;
        let nu = eccentric_to_true(solve_kepler(m, el.e)?, el.e);
        let elements = ClassicalElements { nu, ..el };
        let meoe = classical_to_meoe(&elements)?;
        Ok(BodyState { elements, meoe, cartesian: meoe_to_cartesian(&meoe, self.mu_central) })
    }
}

/// Propagates an elliptic Cartesian state by `dt` seconds using Lagrange
/// coefficients written in the eccentric-anomaly change.
pub fn propagate_state(state: &CartesianState, dt: f64, mu: f64) -> Result<CartesianState> {
    let r0 = state.r.norm();
    let energy = state.specific_energy(mu);
    if energy >= 0.0 || r0 == 0.0 {
        return Err(Error::InvalidArgument("propagate_state supports elliptic orbits only".into()));
    }
    let a = -mu / (2.0 * energy);
    let sqrt_a = a.sqrt();
    let sigma0 = state.r.dot(&state.v) / mu.sqrt();
    let n = (mu / (a * a * a)).sqrt();

    let dm_total = n * dt;
    let turns = (dm_total / TWO_PI).round();
    let dm = dm_total - turns * TWO_PI;
    let c1 = sigma0 / sqrt_a;
    let c2 = 1.0 - r0 / a;
    let kepler = |de: f64| de + c1 * (1.0 - de.cos()) - c2 * de.sin() - dm;

    // The residual is increasing in dE (its slope is r/a > 0).
    let (mut lo, mut hi) = (dm - 2.0 * (c1.abs() + c2.abs()) - 1.0, dm + 2.0 * (c1.abs() + c2.abs()) + 1.0);
    let mut de = dm;
    for _ in 0..100 {
        let f = kepler(de);
        if f == 0.0 {
            break;
        }
        if f < 0.0 {
            lo = de;
        } else {
            hi = de;
        }
        let slope = 1.0 + c1 * de.sin() - c2 * de.cos();
        let mut next = de - f / slope;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let done = (next - de).abs() <= 2.0 * f64::EPSILON * de.abs().max(1.0);
        de = next;
        if done {
            break;
        }
    }

    let (s, c) = de.sin_cos();
    let r = a + (r0 - a) * c + sigma0 * sqrt_a * s;
    let f = 1.0 - a / r0 * (1.0 - c);
    let g = a * sigma0 / mu.sqrt() * (1.0 - c) + r0 * (a / mu).sqrt() * s;
    let fdot = -(mu * a).sqrt() / (r * r0) * s;
    let gdot = 1.0 - a / r * (1.0 - c);
    Ok(CartesianState {
        r: state.r * f + state.v * g,
        v: state.r * fdot + state.v * gdot,
    })
}

/// Relative position error of landing on `target` after propagating.
pub fn landing_error(start: &CartesianState, dt: f64, target: &Vector3<f64>, mu: f64) -> Result<f64> {
    let end = propagate_state(start, dt, mu)?;
    Ok((end.r - target).norm() / target.norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{AU, MU_SUN};
    use approx::assert_relative_eq;

    #[test]
    fn trivial_kepler_cases() {
        assert_eq!(solve_kepler(0.0, 0.4).unwrap(), 0.0);
        for m in [0.1, 1.0, 3.0, 5.5, -2.0] {
            assert_eq!(solve_kepler(m, 0.0).unwrap(), m);
        }
    }

    #[test]
    fn kepler_matches_bisection() {
        let (m, e) = (std::f64::consts::FRAC_PI_2, 0.4);
        let (mut lo, mut hi) = (0.0_f64, std::f64::consts::PI);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid - e * mid.sin() - m < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert_relative_eq!(solve_kepler(m, e).unwrap(), 0.5 * (lo + hi), epsilon = 1e-12);
    }

    #[test]
    fn kepler_residual_grid() {
        for e in [0.0, 0.3, 0.6, 0.9, 0.99] {
            for i in 0..720 {
                let m = i as f64 * TWO_PI / 720.0;
                let ea = solve_kepler(m, e).unwrap();
                assert!((ea - e * ea.sin() - m).abs() <= 1e-13, "M={m} e={e}");
            }
        }
    }

    #[test]
    fn kepler_rejects_non_elliptic() {
        assert!(solve_kepler(1.0, 1.0).is_err());
        assert!(solve_kepler(f64::NAN, 0.1).is_err());
    }

    #[test]
    fn anomaly_conversions_are_inverse_and_keep_winding() {
        for e in [0.0, 0.2, 0.7, 0.95] {
            for nu in [-7.0, -0.3, 0.0, 1.0, 3.1, 9.0, 40.0] {
                let ea = true_to_eccentric(nu, e);
                assert_relative_eq!(eccentric_to_true(ea, e), nu, epsilon = 1e-12);
                assert!((ea - nu).abs() < std::f64::consts::PI);
            }
        }
    }

    fn earth() -> Body {
        Body::new(
            "Earth",
            ClassicalElements::from_au_deg(0.999584, 0.016375, 0.002666, 134.239190, 329.982886, 69.425162),
            Epoch::from_mjd(56000.0),
            MU_SUN,
        )
        .unwrap()
    }

    #[test]
    fn body_at_reference_epoch_is_unchanged() {
        let b = earth();
        let st = b.propagate(b.ref_epoch).unwrap();
        assert_relative_eq!(st.elements.nu, b.elements.nu, epsilon = 1e-14);
        assert_eq!(st.elements.a, b.elements.a);
    }

    #[test]
    fn body_after_one_period_returns() {
        let b = earth();
        let period = b.elements.period(MU_SUN);
        let st = b.propagate(b.ref_epoch.plus_seconds(period)).unwrap();
        let d = (st.elements.nu - b.elements.nu).rem_euclid(TWO_PI);
        assert!(d.min(TWO_PI - d) < 1e-10);
    }

    #[test]
    fn propagate_state_circular_quarter_turn() {
        let vc = (MU_SUN / AU).sqrt();
        let st = CartesianState { r: Vector3::new(AU, 0.0, 0.0), v: Vector3::new(0.0, vc, 0.0) };
        let quarter = 0.25 * TWO_PI * (AU.powi(3) / MU_SUN).sqrt();
        let out = propagate_state(&st, quarter, MU_SUN).unwrap();
        assert_relative_eq!(out.r, Vector3::new(0.0, AU, 0.0), epsilon = 1e-9 * AU);
        assert_relative_eq!(out.v, Vector3::new(-vc, 0.0, 0.0), epsilon = 1e-9 * vc);
    }
}
