//! Parameter-free shaping: single clamped cubics for `f, g, h, k, hbar`
//! and a two-segment cubic for `p` whose middle value is fixed by the
//! time-of-flight quadratic. No iteration is involved, which makes it
//! cheap enough to scan revolution counts and drive epoch searches.

use std::ops::RangeInclusive;

use rayon::prelude::*;

use crate::constants::TWO_PI;
use crate::elements::{classical_to_meoe, true_longitude_span, ClassicalElements, Epoch, Meoe};
use crate::error::{Error, Result};
use crate::shape::{default_nodes, ShapeMetrics, ShapedTrajectory};
use crate::spline::CubicSpline;
use crate::time_solver::{quadratic_coeffs_direct, solve_free_knot, FeasibilityReport, TimeIntegrand};

/// Osculating boundary data of a rendezvous.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryConditions {
    pub oe0: Meoe,
    pub oef: Meoe,
    pub hbar0: f64,
    pub hbarf: f64,
    pub t0: Epoch,
    pub tf: Epoch,
    pub revs: u32,
}

impl BoundaryConditions {
    pub fn new(oe0: Meoe, oef: Meoe, t0: Epoch, tf: Epoch, revs: u32, mu: f64) -> Result<Self> {
        oe0.validate()?;
        oef.validate()?;
        if !(tf.mjd > t0.mjd) {
            return Err(Error::InvalidArgument(format!(
                "arrival epoch {} must follow departure {}",
                tf.mjd, t0.mjd
            )));
        }
        let bc = Self {
            oe0,
            oef,
            hbar0: (mu * oe0.p).sqrt(),
            hbarf: (mu * oef.p).sqrt(),
            t0,
            tf,
            revs,
        };
        if !(bc.dl() > 0.0) {
            return Err(Error::InvalidArgument("zero longitude span; add a revolution".into()));
        }
        Ok(bc)
    }

    pub fn from_classical(
        ce0: &ClassicalElements,
        cef: &ClassicalElements,
        t0: Epoch,
        tf: Epoch,
        revs: u32,
        mu: f64,
    ) -> Result<Self> {
        Self::new(classical_to_meoe(ce0)?, classical_to_meoe(cef)?, t0, tf, revs, mu)
    }

    pub fn with_revs(&self, revs: u32) -> Self {
        Self { revs, ..*self }
    }

    pub fn dl(&self) -> f64 {
        true_longitude_span(self.oe0.l, self.oef.l, self.revs)
    }

    pub fn tof(&self) -> f64 {
        self.tf.seconds_since(self.t0)
    }

    /// Period of the osculating departure orbit.
    pub fn initial_period(&self, mu: f64) -> f64 {
        TWO_PI * (self.oe0.semi_major_axis().powi(3) / mu).sqrt()
    }

    /// `[0, ceil(1.5 tof / T0)]`.
    pub fn default_rev_range(&self, mu: f64) -> RangeInclusive<u32> {
        0..=(1.5 * self.tof() / self.initial_period(mu)).ceil() as u32
    }

    /// Boundary values of the six shaped functions, `[p, f, g, h, k, hbar]`.
    pub fn end_values(&self) -> ([f64; 6], [f64; 6]) {
        let a = self.oe0;
        let b = self.oef;
        ([a.p, a.f, a.g, a.h, a.k, self.hbar0], [b.p, b.f, b.g, b.h, b.k, self.hbarf])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RapidOptions {
    /// Trapezoid intervals; `None` picks [`default_nodes`] for the revs.
    pub nodes: Option<usize>,
    /// Minimum admissible middle `p` as a fraction of `min(p0, pf)`.
    pub p_min_factor: f64,
}

impl Default for RapidOptions {
    fn default() -> Self {
        Self { nodes: None, p_min_factor: 0.2 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RapidShape {
    pub traj: ShapedTrajectory,
    pub report: FeasibilityReport,
    pub metrics: ShapeMetrics,
    /// Offset of the middle `p` value from `(p0 + pf)/2`.
    pub delta_p: f64,
    pub revs: u32,
}

impl RapidShape {
    pub fn is_feasible(&self) -> bool {
        self.report.is_feasible()
    }
}

/// Weight of the middle-value offset in the two-segment `p` cubic.
pub fn gamma(s: f64) -> f64 {
    if s <= 0.5 {
        4.0 * (3.0 * s * s - 4.0 * s * s * s)
    } else {
        -4.0 * (1.0 - 6.0 * s + 9.0 * s * s - 4.0 * s * s * s)
    }
}

/// The single clamped cubic between two boundary values.
pub fn base_cubic(y0: f64, yf: f64, s: f64) -> f64 {
    y0 + (yf - y0) * s * s * (3.0 - 2.0 * s)
}

/// Global coefficients `[a, b, c, d]` of both `p` segments for middle
/// offset `dp` (so `p(0.5) = (p0 + pf)/2 + dp`).
pub fn p_segment_coefficients(p0: f64, pf: f64, dp: f64) -> [[f64; 4]; 2] {
    let d = pf - p0;
    [
        [-2.0 * d - 16.0 * dp, 3.0 * d + 12.0 * dp, 0.0, p0],
        [-2.0 * d + 16.0 * dp, 3.0 * d - 36.0 * dp, 24.0 * dp, p0 - 4.0 * dp],
    ]
}

fn build(bc: &BoundaryConditions, mu: f64, dp: f64) -> Result<ShapedTrajectory> {
    let (y0, yf) = bc.end_values();
    let p = CubicSpline::from_coefficients(&p_segment_coefficients(y0[0], yf[0], dp))?;
    let c = |j: usize| CubicSpline::clamped(&[y0[j], yf[j]]);
    ShapedTrajectory::new([p, c(1)?, c(2)?, c(3)?, c(4)?, c(5)?], bc.oe0.l, bc.dl(), bc.t0, bc.tf, mu)
}

/// Shapes the transfer for `bc.revs`. When the time constraint has no
/// admissible root the middle `p` is set to `p0` and the report says so.
pub fn shape_rapid(bc: &BoundaryConditions, mu: f64, opts: &RapidOptions) -> Result<RapidShape> {
    let nodes = opts.nodes.unwrap_or_else(|| default_nodes(bc.revs));
    let (p0, pf) = (bc.oe0.p, bc.oef.p);
    let mid = 0.5 * (p0 + pf);
    let skeleton = build(bc, mu, 0.0)?;
    let [_, f, g, _, _, hbar] = &skeleton.splines;
    let integrand = TimeIntegrand { f, g, hbar, l0: skeleton.l0, dl: skeleton.dl };
    let q = quadratic_coeffs_direct(gamma, |s| base_cubic(p0, pf, s), &integrand, bc.tof(), nodes, mid)?;

    let mut tried: Vec<(f64, ShapedTrajectory, ShapeMetrics)> = Vec::with_capacity(2);
    let report = solve_free_knot(&q, opts.p_min_factor * p0.min(pf), |p1| {
        let traj = build(bc, mu, p1 - mid)?;
        let m = traj.shape_metrics(nodes)?;
        let dv = m.delta_v;
        tried.push((p1, traj, m));
        Ok(dv)
    });

    let p1 = report.chosen.unwrap_or(p0);
    let (traj, metrics) = match tried.into_iter().find(|(r, _, _)| *r == p1) {
        Some((_, traj, m)) => (traj, m),
        None => {
            let traj = build(bc, mu, p1 - mid)?;
            let m = traj.shape_metrics(nodes)?;
            (traj, m)
        }
    };
    Ok(RapidShape { traj, report, metrics, delta_p: p1 - mid, revs: bc.revs })
}

/// Feasible revolution count with the smallest velocity increment; ties go
/// to fewer revolutions.
pub fn best_revolution(
    bc: &BoundaryConditions,
    mu: f64,
    revs: RangeInclusive<u32>,
    opts: &RapidOptions,
) -> Result<RapidShape> {
    let (lo, hi) = (*revs.start(), *revs.end());
    if lo > hi {
        return Err(Error::InvalidArgument("empty revolution range".into()));
    }
    let candidates: Vec<Option<RapidShape>> = revs
        .into_par_iter()
        .map(|n| shape_rapid(&bc.with_revs(n), mu, opts).ok().filter(|r| r.is_feasible()))
        .collect();
    let mut best: Option<RapidShape> = None;
    for cand in candidates.into_iter().flatten() {
        if best.as_ref().map_or(true, |b| cand.metrics.delta_v < b.metrics.delta_v) {
            best = Some(cand);
        }
    }
    best.ok_or(Error::NoFeasibleRevolution { lo, hi })
}
