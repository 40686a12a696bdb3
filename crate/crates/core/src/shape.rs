//! Shaped trajectories: six spline-shaped functions of `s in [0, 1]`
//! (`p, f, g, h, k` and the angular-momentum magnitude `hbar`) with the
//! true longitude running linearly, `L = L0 + s dL`.
//!
//! Physical time enters through `ds/dt = hbar / (r^2 dL)`; velocity,
//! acceleration and the thrust acceleration needed to fly the shape follow
//! from the chain rule through the position partials.

use nalgebra::Vector3;

use crate::constants::G0;
use crate::elements::{meoe_to_cartesian, CartesianState, Epoch, Meoe};
use crate::error::{Error, Result};
use crate::spline::CubicSpline;

/// Index of the angular-momentum spline in [`ShapedTrajectory::splines`].
pub const HBAR: usize = 5;

/// A scalar with its first and second derivatives along `s`.
#[derive(Debug, Clone, Copy)]
struct Jet {
    v: f64,
    d: f64,
    dd: f64,
}

impl Jet {
    fn constant(v: f64) -> Self {
        Jet { v, d: 0.0, dd: 0.0 }
    }

    fn add(self, o: Jet) -> Jet {
        Jet { v: self.v + o.v, d: self.d + o.d, dd: self.dd + o.dd }
    }

    fn scale(self, c: f64) -> Jet {
        Jet { v: c * self.v, d: c * self.d, dd: c * self.dd }
    }

    fn mul(self, o: Jet) -> Jet {
        Jet { v: self.v * o.v, d: self.d * o.v + self.v * o.d, dd: self.dd * o.v + 2.0 * self.d * o.d + self.v * o.dd }
    }

    fn recip(self) -> Jet {
        let inv = 1.0 / self.v;
        let d = -self.d * inv * inv;
        Jet { v: inv, d, dd: (2.0 * self.d * self.d * inv - self.dd) * inv * inv }
    }
}

/// Position with its first two `s`-derivatives, the radius and `dr/ds`.
/// Writing `r = p / (eta1 beta2) * w(h, k, L)` keeps this to scalar
/// products instead of contracting the full element Hessian.
fn position_jets(
    p: Jet,
    f: Jet,
    g: Jet,
    h: Jet,
    k: Jet,
    l: f64,
    dl: f64,
) -> (Vector3<f64>, Vector3<f64>, Vector3<f64>, f64, f64) {
    let (sl, cl) = l.sin_cos();
    let c = Jet { v: cl, d: -sl * dl, dd: -cl * dl * dl };
    let sn = Jet { v: sl, d: cl * dl, dd: -sl * dl * dl };
    let one = Jet::constant(1.0);
    let eta1 = one.add(f.mul(c)).add(g.mul(sn));
    let hh = h.mul(h);
    let kk = k.mul(k);
    let beta2 = one.add(hh).add(kk);
    let alpha2 = hh.add(kk.scale(-1.0));
    let hk2 = h.mul(k).scale(2.0);
    let w = [
        one.add(alpha2).mul(c).add(hk2.mul(sn)),
        one.add(alpha2.scale(-1.0)).mul(sn).add(hk2.mul(c)),
        h.mul(sn).add(k.mul(c).scale(-1.0)).scale(2.0),
    ];
    let rho = p.mul(eta1.mul(beta2).recip());
    let r = p.mul(eta1.recip());
    let comp = |j: usize| rho.mul(w[j]);
    let (x, y, z) = (comp(0), comp(1), comp(2));
    (
        Vector3::new(x.v, y.v, z.v),
        Vector3::new(x.d, y.d, z.d),
        Vector3::new(x.dd, y.dd, z.dd),
        r.v,
        r.d,
    )
}

/// Default trapezoid interval count for a shape spanning `revs` extra turns.
pub fn default_nodes(revs: u32) -> usize {
    2000.max(500 * (revs as usize + 1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapedTrajectory {
    /// `[p, f, g, h, k, hbar]`.
    pub splines: [CubicSpline; 6],
    pub l0: f64,
    pub dl: f64,
    pub t0: Epoch,
    pub tf: Epoch,
    pub mu: f64,
}

/// Kinematic state at one value of `s`. `t` is elapsed seconds from `t0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSample {
    pub s: f64,
    pub l: f64,
    pub oe: Meoe,
    pub hbar: f64,
    pub r: Vector3<f64>,
    pub v: Vector3<f64>,
    pub a: Vector3<f64>,
    pub u: Vector3<f64>,
    pub t_prime: f64,
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spacecraft {
    pub m0: f64,
    pub isp: f64,
    pub t_max: f64,
}

impl Spacecraft {
    pub fn new(m0: f64, isp: f64, t_max: f64) -> Result<Self> {
        let sc = Self { m0, isp, t_max };
        sc.validate()?;
        Ok(sc)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, x) in [("m0", self.m0), ("isp", self.isp), ("t_max", self.t_max)] {
            if !(x.is_finite() && x > 0.0) {
                return Err(Error::InvalidArgument(format!("spacecraft {name} = {x} must be positive")));
            }
        }
        Ok(())
    }

    pub fn exhaust_velocity(&self) -> f64 {
        self.isp * G0
    }

    /// Final mass after spending `delta_v` from `m_start`.
    pub fn final_mass(&self, m_start: f64, delta_v: f64) -> f64 {
        m_start * (-delta_v / self.exhaust_velocity()).exp()
    }
}

/// Velocity increment and peak thrust acceleration of a shape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeMetrics {
    pub delta_v: f64,
    pub u_max: f64,
    pub transfer_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryMetrics {
    pub delta_v: f64,
    pub u_max: f64,
    /// Largest `m ||u||` over the quadrature nodes, N.
    pub thrust_max: f64,
    pub m0: f64,
    pub m_final: f64,
    pub transfer_time: f64,
}

impl TrajectoryMetrics {
    pub fn propellant(&self) -> f64 {
        self.m0 - self.m_final
    }
}

/// Samples on a uniform grid together with the mass history.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub samples: Vec<PathSample>,
    pub mass: Vec<f64>,
    pub metrics: TrajectoryMetrics,
}

impl Profile {
    /// Mass at `s` by linear interpolation of the node masses.
    pub fn mass_at(&self, s: f64) -> f64 {
        let n = self.mass.len() - 1;
        let x = (s.clamp(0.0, 1.0) * n as f64).min(n as f64);
        let i = (x.floor() as usize).min(n.saturating_sub(1));
        let w = x - i as f64;
        if n == 0 {
            return self.mass[0];
        }
        self.mass[i] * (1.0 - w) + self.mass[i + 1] * w
    }
}

impl ShapedTrajectory {
    pub fn new(splines: [CubicSpline; 6], l0: f64, dl: f64, t0: Epoch, tf: Epoch, mu: f64) -> Result<Self> {
        if !(dl.is_finite() && dl > 0.0) {
            return Err(Error::InvalidArgument(format!("longitude span {dl} must be positive")));
        }
        if !(tf.mjd > t0.mjd) {
            return Err(Error::InvalidArgument("arrival epoch must follow departure".into()));
        }
        Ok(Self { splines, l0, dl, t0, tf, mu })
    }

    pub fn time_of_flight(&self) -> f64 {
        self.tf.seconds_since(self.t0)
    }

    /// Shaped elements and `hbar` at `s`.
    pub fn elements_at(&self, s: f64) -> (Meoe, f64) {
        let v: [f64; 6] = std::array::from_fn(|j| self.splines[j].value(s));
        (Meoe { p: v[0], f: v[1], g: v[2], h: v[3], k: v[4], l: self.l0 + s * self.dl }, v[HBAR])
    }

    /// dt/ds at `s`; only the radius and `hbar` are needed.
    pub fn time_derivative(&self, s: f64) -> Result<f64> {
        let (oe, hbar) = self.elements_at(s);
        check_point(s, &oe, hbar)?;
        let r = oe.radius();
        Ok(r * r * self.dl / hbar)
    }

    /// State at `s` without the elapsed time (`t` is left at zero).
    pub fn point(&self, s: f64) -> Result<PathSample> {
        let mut e = [(0.0, 0.0, 0.0); 6];
        for (j, sp) in self.splines.iter().enumerate() {
            e[j] = sp.eval(s);
        }
        let oe = Meoe { p: e[0].0, f: e[1].0, g: e[2].0, h: e[3].0, k: e[4].0, l: self.l0 + s * self.dl };
        let (hbar, dhbar, _) = e[HBAR];
        check_point(s, &oe, hbar)?;

        let jet = |i: usize| Jet { v: e[i].0, d: e[i].1, dd: e[i].2 };
        let (r_vec, r_s, r_ss, r, r_prime) = position_jets(jet(0), jet(1), jet(2), jet(3), jet(4), oe.l, self.dl);

        let sdot = hbar / (r * r * self.dl);
        let sddot = sdot / (r * r * self.dl) * (dhbar - 2.0 * hbar * r_prime / r);
        let v = r_s * sdot;
        let a = r_s * sddot + r_ss * (sdot * sdot);
        let u = a + r_vec * (self.mu / (r * r * r));
        Ok(PathSample { s, l: oe.l, oe, hbar, r: r_vec, v, a, u, t_prime: 1.0 / sdot, t: 0.0 })
    }

    /// State at `s` with elapsed time from a trapezoid sum at the default
    /// node spacing.
    pub fn eval_state(&self, s: f64) -> Result<PathSample> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::InvalidArgument(format!("s = {s} outside [0, 1]")));
        }
        let mut out = self.point(s)?;
        let nodes = ((s * self.default_nodes() as f64).ceil() as usize).max(1);
        let h = s / nodes as f64;
        let mut t = 0.0;
        let mut prev = self.time_derivative(0.0)?;
        for i in 1..=nodes {
            let next = if i == nodes { out.t_prime } else { self.time_derivative(i as f64 * h)? };
            t += 0.5 * h * (prev + next);
            prev = next;
        }
        out.t = t;
        Ok(out)
    }

    /// Revolution count implied by the longitude span.
    pub fn revs(&self) -> u32 {
        (self.dl / crate::constants::TWO_PI).floor().max(0.0) as u32
    }

    pub fn default_nodes(&self) -> usize {
        default_nodes(self.revs())
    }

    /// States at `s_i = i / nodes`, `i = 0..=nodes`, with trapezoid time.
    pub fn sample(&self, nodes: usize) -> Result<Vec<PathSample>> {
        check_nodes(nodes)?;
        let h = 1.0 / nodes as f64;
        let mut out = Vec::with_capacity(nodes + 1);
        for i in 0..=nodes {
            let mut pt = self.point(i as f64 * h)?;
            if let Some(prev) = out.last() {
                let prev: &PathSample = prev;
                pt.t = prev.t + 0.5 * h * (prev.t_prime + pt.t_prime);
            }
            out.push(pt);
        }
        Ok(out)
    }

    /// Trapezoid estimate of the flight time the shape implies.
    pub fn transfer_time(&self, nodes: usize) -> Result<f64> {
        check_nodes(nodes)?;
        let h = 1.0 / nodes as f64;
        let mut sum = 0.0;
        for i in 0..=nodes {
            let w = if i == 0 || i == nodes { 0.5 } else { 1.0 };
            sum += w * self.time_derivative(i as f64 * h)?;
        }
        Ok(sum * h)
    }

    /// `delta_v = integral of ||u|| dt` and the peak `||u||` over the nodes.
    pub fn shape_metrics(&self, nodes: usize) -> Result<ShapeMetrics> {
        check_nodes(nodes)?;
        let h = 1.0 / nodes as f64;
        let (mut dv, mut tt, mut u_max) = (0.0, 0.0, 0.0_f64);
        for i in 0..=nodes {
            let pt = self.point(i as f64 * h)?;
            let w = if i == 0 || i == nodes { 0.5 } else { 1.0 };
            let un = pt.u.norm();
            dv += w * un * pt.t_prime;
            tt += w * pt.t_prime;
            u_max = u_max.max(un);
        }
        Ok(ShapeMetrics { delta_v: dv * h, u_max, transfer_time: tt * h })
    }

    /// Osculating boundary states implied by the spline end values.
    pub fn boundary_states(&self) -> (CartesianState, CartesianState) {
        let (oe0, _) = self.elements_at(0.0);
        let (oef, _) = self.elements_at(1.0);
        (meoe_to_cartesian(&oe0, self.mu), meoe_to_cartesian(&oef, self.mu))
    }
}

/// Samples plus the mass history `m(s) = m0 exp(-int ||u|| t' ds / (Isp g0))`.
pub fn profile(traj: &ShapedTrajectory, sc: &Spacecraft, nodes: usize) -> Result<Profile> {
    sc.validate()?;
    let samples = traj.sample(nodes)?;
    let h = 1.0 / nodes as f64;
    let ve = sc.exhaust_velocity();
    let mut mass = Vec::with_capacity(samples.len());
    let (mut dv, mut u_max, mut thrust_max) = (0.0, 0.0_f64, 0.0_f64);
    for (i, pt) in samples.iter().enumerate() {
        if i > 0 {
            let prev = &samples[i - 1];
            dv += 0.5 * h * (prev.u.norm() * prev.t_prime + pt.u.norm() * pt.t_prime);
        }
        let m = sc.m0 * (-dv / ve).exp();
        let un = pt.u.norm();
        u_max = u_max.max(un);
        thrust_max = thrust_max.max(m * un);
        mass.push(m);
    }
    let metrics = TrajectoryMetrics {
        delta_v: dv,
        u_max,
        thrust_max,
        m0: sc.m0,
        m_final: sc.final_mass(sc.m0, dv),
        transfer_time: samples.last().map_or(0.0, |p| p.t),
    };
    Ok(Profile { samples, mass, metrics })
}

pub fn mass_and_metrics(traj: &ShapedTrajectory, sc: &Spacecraft, nodes: usize) -> Result<TrajectoryMetrics> {
    Ok(profile(traj, sc, nodes)?.metrics)
}

fn check_nodes(nodes: usize) -> Result<()> {
    if nodes < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 quadrature intervals, got {nodes}")));
    }
    Ok(())
}

#[inline]
fn check_point(s: f64, oe: &Meoe, hbar: f64) -> Result<()> {
    if !(oe.p > 0.0) {
        return Err(Error::DegenerateShape { s, reason: "non-positive semi-latus rectum" });
    }
    if !(hbar > 0.0) {
        return Err(Error::DegenerateShape { s, reason: "non-positive angular momentum" });
    }
    if !(oe.radius_factor() > 0.0) {
        return Err(Error::DegenerateShape { s, reason: "radius denominator 1 + f cos L + g sin L <= 0" });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{AU, MU_SUN, TWO_PI};
    use approx::assert_relative_eq;

    #[test]
    fn path_derivatives_match_the_element_hessian() {
        use crate::partials::PositionTerms;
        let x = [(1.7 * AU, 0.3 * AU, -0.2 * AU), (0.21, -0.4, 0.9), (-0.33, 0.25, -0.6), (0.08, 0.05, 0.3), (-0.12, 0.2, -0.1)];
        let (l, dl) = (2.3, 14.0);
        let j = |i: usize| Jet { v: x[i].0, d: x[i].1, dd: x[i].2 };
        let (r_vec, r_s, r_ss, r, r_prime) = position_jets(j(0), j(1), j(2), j(3), j(4), l, dl);

        let oe = Meoe { p: x[0].0, f: x[1].0, g: x[2].0, h: x[3].0, k: x[4].0, l };
        let terms = PositionTerms::new(&oe);
        let (jac, grad) = (terms.first(), terms.radius_gradient());
        let hess = terms.second(&jac);
        let d1 = [x[0].1, x[1].1, x[2].1, x[3].1, x[4].1, dl];
        let d2 = [x[0].2, x[1].2, x[2].2, x[3].2, x[4].2, 0.0];
        let mut want_s = Vector3::zeros();
        let mut want_ss = Vector3::zeros();
        for a in 0..6 {
            want_s += jac[a] * d1[a];
            want_ss += jac[a] * d2[a];
            for b in 0..6 {
                want_ss += hess[a][b] * (d1[a] * d1[b]);
            }
        }
        let want_prime: f64 = (0..6).map(|a| grad[a] * d1[a]).sum();
        assert_relative_eq!(r_vec, terms.r_vec, max_relative = 1e-14);
        assert_relative_eq!(r, terms.r, max_relative = 1e-14);
        assert_relative_eq!(r_s, want_s, max_relative = 1e-12);
        assert_relative_eq!(r_ss, want_ss, max_relative = 1e-12);
        assert_relative_eq!(r_prime, want_prime, max_relative = 1e-12);
    }

    fn constant_shape(oe: Meoe, hbar: f64, dl: f64, tof: f64) -> ShapedTrajectory {
        let c = |x: f64| CubicSpline::clamped(&[x, x]).unwrap();
        let t0 = Epoch::from_mjd(60000.0);
        ShapedTrajectory::new(
            [c(oe.p), c(oe.f), c(oe.g), c(oe.h), c(oe.k), c(hbar)],
            oe.l,
            dl,
            t0,
            t0.plus_seconds(tof),
            MU_SUN,
        )
        .unwrap()
    }

    fn kepler_shape() -> ShapedTrajectory {
        let oe = Meoe { p: 1.2 * AU, f: 0.1, g: -0.2, h: 0.05, k: 0.1, l: 0.3 };
        constant_shape(oe, (MU_SUN * oe.p).sqrt(), TWO_PI, 1.0)
    }

    #[test]
    fn keplerian_shape_needs_no_thrust() {
        let traj = kepler_shape();
        for i in 0..=50 {
            let pt = traj.point(i as f64 / 50.0).unwrap();
            let r = pt.r.norm();
            assert!(pt.u.norm() <= 1e-10 * MU_SUN / (r * r), "s = {}", pt.s);
        }
    }

    #[test]
    fn keplerian_shape_velocity_is_osculating() {
        let traj = kepler_shape();
        for s in [0.0, 0.37, 1.0] {
            let pt = traj.point(s).unwrap();
            let st = meoe_to_cartesian(&pt.oe, MU_SUN);
            assert_relative_eq!(pt.v, st.v, max_relative = 1e-12);
        }
    }

    #[test]
    fn circular_transfer_time_is_the_period() {
        let oe = Meoe { p: AU, f: 0.0, g: 0.0, h: 0.0, k: 0.0, l: 0.0 };
        let traj = constant_shape(oe, (MU_SUN * AU).sqrt(), TWO_PI, 1.0);
        let period = TWO_PI * (AU.powi(3) / MU_SUN).sqrt();
        assert_relative_eq!(traj.transfer_time(2000).unwrap(), period, max_relative = 1e-12);
    }

    #[test]
    fn zero_thrust_profile_keeps_mass() {
        let traj = kepler_shape();
        let sc = Spacecraft::new(4000.0, 3000.0, 0.6).unwrap();
        let m = mass_and_metrics(&traj, &sc, 2000).unwrap();
        assert!(m.delta_v < 1e-6);
        assert_relative_eq!(m.m_final, sc.m0, max_relative = 1e-12);
    }

    #[test]
    fn degenerate_radius_is_reported() {
        let oe = Meoe { p: AU, f: 0.0, g: 0.0, h: 0.0, k: 0.0, l: 0.0 };
        let mut traj = constant_shape(oe, (MU_SUN * AU).sqrt(), TWO_PI, 1.0);
        traj.splines[1] = CubicSpline::clamped(&[0.0, 3.0]).unwrap();
        assert!(matches!(traj.transfer_time(100), Err(Error::DegenerateShape { .. })));
    }

    #[test]
    fn spacecraft_validation() {
        assert!(Spacecraft::new(0.0, 3000.0, 0.6).is_err());
        assert!(Spacecraft::new(4000.0, f64::NAN, 0.6).is_err());
    }

    #[test]
    fn default_node_rule() {
        assert_eq!(default_nodes(0), 2000);
        assert_eq!(default_nodes(3), 2000);
        assert_eq!(default_nodes(6), 3500);
    }
}
