//! Preliminary mission design: propellant estimates for single legs and
//! epoch searches over chained multi-leg missions.
//!
//! A mission with `n` legs is searched over `[launch, arrival_1, ...,
//! arrival_n]`; leg `i + 1` departs `stay_days` after arrival `i`.

use crate::elements::Epoch;
use crate::error::{Error, Result};
use crate::kepler::Body;
use crate::lambert::{lambert_all, Branch, Direction};
use crate::pso::{pso_minimize, PsoConfig};
use crate::rapid::{best_revolution, BoundaryConditions, RapidOptions};
use crate::shape::{ShapeMetrics, Spacecraft};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    RapidShape,
    Lambert,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LegSpec {
    pub from: Body,
    pub to: Body,
    /// Departure window, MJD.
    pub t0_bounds: (f64, f64),
    /// Arrival window, MJD.
    pub tf_bounds: (f64, f64),
    pub estimator: Estimator,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MissionSpec {
    pub legs: Vec<LegSpec>,
    pub stay_days: f64,
    pub spacecraft: Spacecraft,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EstimateOptions {
    pub rapid: RapidOptions,
    /// Largest revolution count tried by either estimator; `None` uses the
    /// rapid shaper's default range and every Lambert count that exists.
    pub max_revs: Option<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LegEstimate {
    pub t0: Epoch,
    pub tf: Epoch,
    pub revs: u32,
    pub delta_v: f64,
    pub m_start: f64,
    pub delta_m: f64,
    /// Lambert branch, when that estimator was used.
    pub branch: Option<Branch>,
    /// Rapid-shape metrics, when that estimator was used.
    pub shape: Option<ShapeMetrics>,
}

impl LegSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [("departure", self.t0_bounds), ("arrival", self.tf_bounds)] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::InvalidArgument(format!("{name} window [{lo}, {hi}] is empty")));
            }
        }
        if self.tf_bounds.1 <= self.t0_bounds.0 {
            return Err(Error::InvalidArgument("arrival window lies before the departure window".into()));
        }
        Ok(())
    }
}

/// Propellant for one leg flown from `m_start`, minimized over revolution
/// counts (and Lambert branches).
pub fn estimate_leg(
    leg: &LegSpec,
    t0: Epoch,
    tf: Epoch,
    m_start: f64,
    sc: &Spacecraft,
    opts: &EstimateOptions,
) -> Result<LegEstimate> {
    if !(tf.mjd > t0.mjd) {
        return Err(Error::InvalidArgument(format!("arrival {} is not after departure {}", tf.mjd, t0.mjd)));
    }
    let dep = leg.from.propagate(t0)?;
    let arr = leg.to.propagate(tf)?;
    let mu = leg.from.mu_central;
    let (delta_v, revs, branch, shape) = match leg.estimator {
        Estimator::RapidShape => {
            let bc = BoundaryConditions::new(dep.meoe, arr.meoe, t0, tf, 0, mu)?;
            let mut range = bc.default_rev_range(mu);
            if let Some(cap) = opts.max_revs {
                range = *range.start()..=cap;
            }
            let best = best_revolution(&bc, mu, range, &opts.rapid)?;
            (best.metrics.delta_v, best.revs, None, Some(best.metrics))
        }
        Estimator::Lambert => {
            let tof = tf.seconds_since(t0);
            let (r0, v0) = (dep.cartesian.r, dep.cartesian.v);
            let (rf, vf) = (arr.cartesian.r, arr.cartesian.v);
            let sols = lambert_all(&r0, &rf, tof, mu, opts.max_revs.unwrap_or(u32::MAX), Direction::Prograde)?;
            let best = sols
                .iter()
                .map(|s| ((s.v0 - v0).norm() + (vf - s.vf).norm(), s))
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.revs.cmp(&b.1.revs)))
                .ok_or_else(|| Error::Lambert("no solution for this geometry".into()))?;
            (best.0, best.1.revs, Some(best.1.branch), None)
        }
    };
    let delta_m = m_start - sc.final_mass(m_start, delta_v);
    Ok(LegEstimate { t0, tf, revs, delta_v, m_start, delta_m, branch, shape })
}

/// Departure and arrival epochs of every leg from the compact vector.
pub fn leg_epochs(epochs: &[f64], stay_days: f64) -> Vec<(f64, f64)> {
    epochs
        .windows(2)
        .enumerate()
        .map(|(i, w)| (if i == 0 { w[0] } else { w[0] + stay_days }, w[1]))
        .collect()
}

/// Leg flight times in days.
pub fn leg_durations(epochs: &[f64], stay_days: f64) -> Vec<f64> {
    leg_epochs(epochs, stay_days).into_iter().map(|(a, b)| b - a).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MissionEvaluation {
    pub legs: Vec<LegEstimate>,
    pub total_delta_m: f64,
    pub m_final: f64,
}

impl MissionSpec {
    pub fn validate(&self) -> Result<()> {
        if self.legs.is_empty() {
            return Err(Error::InvalidArgument("mission has no legs".into()));
        }
        if !(self.stay_days.is_finite() && self.stay_days >= 0.0) {
            return Err(Error::InvalidArgument(format!("stay time {} must be non-negative", self.stay_days)));
        }
        self.spacecraft.validate()?;
        self.legs.iter().try_for_each(LegSpec::validate)
    }

    /// Box bounds of the compact epoch vector.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        std::iter::once(self.legs[0].t0_bounds).chain(self.legs.iter().map(|l| l.tf_bounds)).collect()
    }

    fn check_chaining(&self, epochs: &[f64]) -> Result<()> {
        if epochs.len() != self.legs.len() + 1 {
            return Err(Error::Chaining(format!(
                "{} epochs given for {} legs",
                epochs.len(),
                self.legs.len()
            )));
        }
        for (i, (dep, arr)) in leg_epochs(epochs, self.stay_days).into_iter().enumerate() {
            if !(arr > dep) {
                return Err(Error::Chaining(format!("leg {} arrives at {arr} before departing at {dep}", i + 1)));
            }
        }
        Ok(())
    }
}

/// Flies the legs in order, each starting with the mass the previous one
/// ended with.
pub fn evaluate_mission(mission: &MissionSpec, epochs: &[f64], opts: &EstimateOptions) -> Result<MissionEvaluation> {
    mission.check_chaining(epochs)?;
    let sc = &mission.spacecraft;
    let mut m = sc.m0;
    let mut legs = Vec::with_capacity(mission.legs.len());
    for (leg, (dep, arr)) in mission.legs.iter().zip(leg_epochs(epochs, mission.stay_days)) {
        let est = estimate_leg(leg, Epoch::from_mjd(dep), Epoch::from_mjd(arr), m, sc, opts)?;
        m -= est.delta_m;
        legs.push(est);
    }
    Ok(MissionEvaluation { total_delta_m: sc.m0 - m, m_final: m, legs })
}

/// Pushes each arrival to at least one day after its departure, then
/// back into the box. Returns `None` if no such point exists nearby.
pub fn repair_epochs(mission: &MissionSpec, x: &[f64]) -> Option<Vec<f64>> {
    let bounds = mission.bounds();
    let mut e = x.to_vec();
    for i in 1..e.len() {
        let dep = if i == 1 { e[0] } else { e[i - 1] + mission.stay_days };
        let (lo, hi) = bounds[i];
        e[i] = e[i].max(dep + 1.0).clamp(lo, hi);
    }
    mission.check_chaining(&e).ok().map(|_| e)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub epochs: Vec<f64>,
    pub best_delta_m: f64,
    pub history: Vec<f64>,
    pub evaluation: Option<MissionEvaluation>,
}

/// Swarm search for the epoch vector with the least total propellant.
pub fn pso_search(mission: &MissionSpec, cfg: &PsoConfig, opts: &EstimateOptions) -> Result<SearchResult> {
    mission.validate()?;
    let objective = |x: &[f64]| -> f64 {
        match repair_epochs(mission, x) {
            Some(e) => evaluate_mission(mission, &e, opts).map_or(f64::INFINITY, |ev| ev.total_delta_m),
            None => f64::INFINITY,
        }
    };
    let res = pso_minimize(objective, &mission.bounds(), cfg)?;
    let epochs = repair_epochs(mission, &res.best_x).unwrap_or(res.best_x);
    let evaluation = evaluate_mission(mission, &epochs, opts).ok();
    Ok(SearchResult { epochs, best_delta_m: res.best_f, history: res.history, evaluation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::MU_SUN;
    use crate::elements::ClassicalElements;

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
    fn leg_durations_subtract_the_stay() {
        let d = leg_durations(&[100.0, 300.0, 500.0, 700.0], 60.0);
        assert_eq!(d, vec![200.0, 140.0, 140.0]);
    }

    #[test]
    fn same_body_one_period_costs_nothing() {
        let e = earth();
        let period_days = e.elements.period(MU_SUN) / crate::constants::SECONDS_PER_DAY;
        let leg = LegSpec {
            from: e.clone(),
            to: e.clone(),
            t0_bounds: (56000.0, 56000.0),
            tf_bounds: (56000.0 + period_days, 56000.0 + period_days),
            estimator: Estimator::RapidShape,
        };
        let sc = Spacecraft::new(4000.0, 3000.0, 0.32).unwrap();
        let est = estimate_leg(
            &leg,
            Epoch::from_mjd(56000.0),
            Epoch::from_mjd(56000.0 + period_days),
            4000.0,
            &sc,
            &EstimateOptions::default(),
        )
        .unwrap();
        // The span wraps to just under or just over one turn depending on roundoff.
        assert!(est.revs <= 1);
        assert!(est.delta_m < 1e-3, "dm = {}", est.delta_m);
    }

    #[test]
    fn chaining_violation_is_an_error() {
        let e = earth();
        let leg = LegSpec {
            from: e.clone(),
            to: e,
            t0_bounds: (56000.0, 56100.0),
            tf_bounds: (56200.0, 56400.0),
            estimator: Estimator::Lambert,
        };
        let mission = MissionSpec {
            legs: vec![leg.clone(), leg],
            stay_days: 60.0,
            spacecraft: Spacecraft::new(1500.0, 3000.0, 0.36).unwrap(),
        };
        let r = evaluate_mission(&mission, &[56000.0, 56300.0, 56320.0], &EstimateOptions::default());
        assert!(matches!(r, Err(Error::Chaining(_))));
        let fixed = repair_epochs(&mission, &[56000.0, 56300.0, 56320.0]).unwrap();
        assert!(fixed[2] >= 56300.0 + 60.0 + 1.0);
    }
}
