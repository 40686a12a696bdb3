//! Orbital element sets and the conversions between them.
//!
//! The shaping machinery works in modified equinoctial elements
//! `[p, f, g, h, k, L]`, which stay regular for circular and equatorial
//! orbits and are singular only at `i = 180°`. The true longitude `L` is
//! carried unwrapped so that a shaped arc can span several revolutions.

use nalgebra::Vector3;

use crate::constants::TWO_PI;
use crate::error::{Error, Result};

/// A point in time as a Modified Julian Date.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Epoch {
    pub mjd: f64,
}

impl Epoch {
    pub fn from_mjd(mjd: f64) -> Self {
        Self { mjd }
    }

    /// Seconds elapsed from `earlier` to `self`.
    pub fn seconds_since(&self, earlier: Epoch) -> f64 {
        (self.mjd - earlier.mjd) * crate::constants::SECONDS_PER_DAY
    }

    pub fn plus_seconds(&self, dt: f64) -> Epoch {
        Epoch::from_mjd(self.mjd + dt / crate::constants::SECONDS_PER_DAY)
    }

    pub fn plus_days(&self, days: f64) -> Epoch {
        Epoch::from_mjd(self.mjd + days)
    }
}

/// Classical Keplerian elements of an elliptic orbit. Angles in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalElements {
    pub a: f64,
    pub e: f64,
    pub i: f64,
    pub raan: f64,
    pub argp: f64,
    pub nu: f64,
}

impl ClassicalElements {
    /// Builds elements from AU and degrees, the units the tables use.
    pub fn from_au_deg(a_au: f64, e: f64, i: f64, raan: f64, argp: f64, nu: f64) -> Self {
        Self {
            a: a_au * crate::constants::AU,
            e,
            i: i.to_radians(),
            raan: raan.to_radians(),
            argp: argp.to_radians(),
            nu: nu.to_radians(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.a, self.e, self.i, self.raan, self.argp, self.nu]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidElements("non-finite element".into()));
        }
        if self.a <= 0.0 {
            return Err(Error::InvalidElements(format!("a = {} must be positive", self.a)));
        }
        if !(0.0..1.0).contains(&self.e) {
            return Err(Error::InvalidElements(format!(
                "e = {} outside the elliptic range [0, 1)",
                self.e
            )));
        }
        if !(0.0..std::f64::consts::PI).contains(&self.i) {
            return Err(Error::InvalidElements(format!(
                "i = {} rad outside [0, pi); equinoctial elements are singular at pi",
                self.i
            )));
        }
        Ok(())
    }

    pub fn mean_motion(&self, mu: f64) -> f64 {
        (mu / self.a.powi(3)).sqrt()
    }

    pub fn period(&self, mu: f64) -> f64 {
        TWO_PI / self.mean_motion(mu)
    }
}

/// Modified equinoctial elements. `l` is the unwrapped true longitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Meoe {
    pub p: f64,
    pub f: f64,
    pub g: f64,
    pub h: f64,
    pub k: f64,
    pub l: f64,
}

impl Meoe {
    pub fn from_array(x: [f64; 6]) -> Self {
        Self { p: x[0], f: x[1], g: x[2], h: x[3], k: x[4], l: x[5] }
    }

    pub fn to_array(&self) -> [f64; 6] {
        [self.p, self.f, self.g, self.h, self.k, self.l]
    }

    /// `1 + f cos L + g sin L`; the radius is `p` divided by this.
    pub fn radius_factor(&self) -> f64 {
        1.0 + self.f * self.l.cos() + self.g * self.l.sin()
    }

    pub fn radius(&self) -> f64 {
        self.p / self.radius_factor()
    }

    pub fn eccentricity(&self) -> f64 {
        self.f.hypot(self.g)
    }

    pub fn semi_major_axis(&self) -> f64 {
        self.p / (1.0 - self.f * self.f - self.g * self.g)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.to_array().iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidElements("non-finite equinoctial element".into()));
        }
        if self.p <= 0.0 {
            return Err(Error::InvalidElements(format!("p = {} must be positive", self.p)));
        }
        if self.radius_factor() <= 0.0 {
            return Err(Error::InvalidElements("1 + f cos L + g sin L <= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartesianState {
    pub r: Vector3<f64>,
    pub v: Vector3<f64>,
}

impl CartesianState {
    pub fn specific_energy(&self, mu: f64) -> f64 {
        0.5 * self.v.norm_squared() - mu / self.r.norm()
    }

    pub fn angular_momentum(&self) -> Vector3<f64> {
        self.r.cross(&self.v)
    }
}

pub fn classical_to_meoe(ce: &ClassicalElements) -> Result<Meoe> {
    ce.validate()?;
    let lon_peri = ce.raan + ce.argp;
    let tan_half_i = (0.5 * ce.i).tan();
    Ok(Meoe {
        p: ce.a * (1.0 - ce.e * ce.e),
        f: ce.e * lon_peri.cos(),
        g: ce.e * lon_peri.sin(),
        h: tan_half_i * ce.raan.cos(),
        k: tan_half_i * ce.raan.sin(),
        l: lon_peri + ce.nu,
    })
}

/// Inverse of [`classical_to_meoe`]. Angles are returned in `[0, 2pi)`,
/// except `nu` which keeps whatever winding `L` carried.
pub fn meoe_to_classical(oe: &Meoe) -> Result<ClassicalElements> {
    oe.validate()?;
    let e = oe.eccentricity();
    if e >= 1.0 {
        return Err(Error::InvalidElements(format!("e = {e} is not elliptic")));
    }
    let raan = oe.k.atan2(oe.h).rem_euclid(TWO_PI);
    let lon_peri = oe.g.atan2(oe.f);
    Ok(ClassicalElements {
        a: oe.p / (1.0 - e * e),
        e,
        i: 2.0 * oe.h.hypot(oe.k).atan(),
        raan,
        argp: (lon_peri - raan).rem_euclid(TWO_PI),
        nu: oe.l - lon_peri,
    })
}

pub fn meoe_to_cartesian(oe: &Meoe, mu: f64) -> CartesianState {
    let (sl, cl) = oe.l.sin_cos();
    let Meoe { p, f, g, h, k, .. } = *oe;
    let alpha2 = h * h - k * k;
    let beta2 = 1.0 + h * h + k * k;
    let r = p / (1.0 + f * cl + g * sl);
    let hk2 = 2.0 * h * k;

    let pos = Vector3::new(
        (1.0 + alpha2) * cl + hk2 * sl,
        (1.0 - alpha2) * sl + hk2 * cl,
        2.0 * (h * sl - k * cl),
    ) * (r / beta2);

    let w = (mu / p).sqrt() / beta2;
    let vel = Vector3::new(
        -w * (sl + alpha2 * sl - hk2 * cl + g - 2.0 * f * h * k + alpha2 * g),
        -w * (-cl + alpha2 * cl + hk2 * sl - f + 2.0 * g * h * k + alpha2 * f),
        2.0 * w * (h * cl + k * sl + f * h + g * k),
    );
    CartesianState { r: pos, v: vel }
}

/// Positive true-longitude span from `l0` to `lf` plus `revs` whole turns.
pub fn true_longitude_span(l0: f64, lf: f64, revs: u32) -> f64 {
    (lf - l0).rem_euclid(TWO_PI) + TWO_PI * revs as f64
}
