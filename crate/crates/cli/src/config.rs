//! Run configuration. Units are part of every key name; angles are in
//! degrees and epochs in MJD, converted to SI on the way in.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use splinetraj::constants::{AU, MU_SUN};
use splinetraj::elements::{ClassicalElements, Epoch};
use splinetraj::kepler::Body;
use splinetraj::mission::{Estimator, LegSpec, MissionSpec};
use splinetraj::pso::PsoConfig;
use splinetraj::shape::Spacecraft;

use crate::failure::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Shape,
    Optimize,
    ScanRevs,
    Search,
    Mission,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Shape => "shape",
            Scenario::Optimize => "optimize",
            Scenario::ScanRevs => "scan_revs",
            Scenario::Search => "search",
            Scenario::Mission => "mission",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Optional; must match the subcommand when present.
    pub scenario: Option<String>,
    pub mu_m3_s2: Option<f64>,
    pub transfer: Option<TransferConfig>,
    pub spacecraft: Option<SpacecraftConfig>,
    #[serde(default)]
    pub shaping: ShapingConfig,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub pso: PsoSection,
    #[serde(default)]
    pub bodies: BTreeMap<String, BodyConfig>,
    pub mission: Option<MissionConfig>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitConfig {
    pub a_au: f64,
    pub e: f64,
    pub i_deg: f64,
    pub raan_deg: f64,
    pub argp_deg: f64,
    pub nu_deg: f64,
}

impl OrbitConfig {
    fn elements(&self) -> ClassicalElements {
        ClassicalElements::from_au_deg(self.a_au, self.e, self.i_deg, self.raan_deg, self.argp_deg, self.nu_deg)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodyConfig {
    pub a_au: f64,
    pub e: f64,
    pub i_deg: f64,
    pub raan_deg: f64,
    pub argp_deg: f64,
    pub nu_deg: f64,
    /// Epoch of the elements above.
    pub epoch_mjd: f64,
}

impl BodyConfig {
    fn orbit(&self) -> OrbitConfig {
        OrbitConfig {
            a_au: self.a_au,
            e: self.e,
            i_deg: self.i_deg,
            raan_deg: self.raan_deg,
            argp_deg: self.argp_deg,
            nu_deg: self.nu_deg,
        }
    }
}

/// A transfer end: either a body name from `[bodies]` or the osculating
/// elements at that end's epoch.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Endpoint {
    Body(String),
    Orbit(OrbitConfig),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransferConfig {
    pub departure: Endpoint,
    pub arrival: Endpoint,
    pub t0_mjd: f64,
    pub tf_mjd: Option<f64>,
    pub tof_days: Option<f64>,
    pub revs: Option<u32>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpacecraftConfig {
    pub m0_kg: f64,
    pub isp_s: f64,
    pub tmax_newton: f64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapingConfig {
    pub n: Option<usize>,
    pub c: Option<usize>,
    pub nodes: Option<usize>,
    pub p_min_factor: Option<f64>,
    pub revs_min: Option<u32>,
    pub revs_max: Option<u32>,
    pub rho_t: Option<f64>,
    pub rho_p: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    pub max_evals: Option<usize>,
    pub tol_rel: Option<f64>,
    pub rho_begin: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsoSection {
    pub swarm: Option<usize>,
    pub iters: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MissionConfig {
    pub stay_days: f64,
    /// `[launch, arrival_1, ..., arrival_n]`, used by `mission`.
    pub epochs_mjd: Option<Vec<f64>>,
    pub max_revs: Option<u32>,
    pub legs: Vec<LegConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LegConfig {
    pub from: String,
    pub to: String,
    pub t0_window_mjd: [f64; 2],
    pub tf_window_mjd: [f64; 2],
    #[serde(default = "default_estimator")]
    pub estimator: String,
}

fn default_estimator() -> String {
    "rapid".into()
}

pub fn load(path: &Path) -> Result<RunConfig, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::config("CONFIG_UNREADABLE", format!("{}: {e}", path.display())))?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<RunConfig, Failure> {
    toml::from_str(text).map_err(|e| {
        let msg = e.message().to_string();
        let code = if msg.starts_with("missing field") { "CONFIG_MISSING_FIELD" } else { "CONFIG_PARSE" };
        Failure::config(code, e.to_string().trim_end().to_string())
    })
}

fn missing(field: &str, scenario: Scenario) -> Failure {
    Failure::config("CONFIG_MISSING_FIELD", format!("`{field}` is required for {}", scenario.name()))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure::config("CONFIG_INVALID", msg.into())
}

/// Transfer ends resolved to elements at their epochs.
pub struct Transfer {
    pub departure: ClassicalElements,
    pub arrival: ClassicalElements,
    pub t0: Epoch,
    pub tf: Epoch,
    pub revs: Option<u32>,
}

impl RunConfig {
    pub fn check_scenario(&self, scenario: Scenario) -> Result<(), Failure> {
        match &self.scenario {
            Some(s) if s.replace('-', "_") != scenario.name() => {
                Err(invalid(format!("config is for scenario `{s}` but `{}` was requested", scenario.name())))
            }
            _ => Ok(()),
        }
    }

    pub fn mu(&self) -> Result<f64, Failure> {
        let mu = self.mu_m3_s2.unwrap_or(MU_SUN);
        if !(mu.is_finite() && mu > 0.0) {
            return Err(invalid(format!("mu_m3_s2 = {mu} must be positive")));
        }
        Ok(mu)
    }

    pub fn spacecraft(&self, scenario: Scenario) -> Result<Spacecraft, Failure> {
        let sc = self.spacecraft.ok_or_else(|| missing("spacecraft", scenario))?;
        Spacecraft::new(sc.m0_kg, sc.isp_s, sc.tmax_newton).map_err(|e| invalid(e.to_string()))
    }

    pub fn optional_spacecraft(&self) -> Result<Option<Spacecraft>, Failure> {
        self.spacecraft
            .map(|sc| Spacecraft::new(sc.m0_kg, sc.isp_s, sc.tmax_newton).map_err(|e| invalid(e.to_string())))
            .transpose()
    }

    pub fn body(&self, name: &str) -> Result<Body, Failure> {
        let b = self.bodies.get(name).ok_or_else(|| invalid(format!("unknown body `{name}` (not in [bodies])")))?;
        Body::new(name, b.orbit().elements(), Epoch::from_mjd(b.epoch_mjd), self.mu()?).map_err(|e| invalid(format!("body `{name}`: {e}")))
    }

    fn endpoint(&self, end: &Endpoint, at: Epoch, label: &str) -> Result<ClassicalElements, Failure> {
        match end {
            Endpoint::Body(name) => {
                let state = self.body(name)?.propagate(at).map_err(|e| invalid(e.to_string()))?;
                Ok(state.elements)
            }
            Endpoint::Orbit(o) => {
                let el = o.elements();
                el.validate().map_err(|e| invalid(format!("transfer.{label}: {e}")))?;
                if el.a <= 0.0 || !(el.a / AU).is_finite() {
                    return Err(invalid(format!("transfer.{label}.a_au must be positive")));
                }
                Ok(el)
            }
        }
    }

    pub fn transfer(&self, scenario: Scenario) -> Result<Transfer, Failure> {
        let tr = self.transfer.as_ref().ok_or_else(|| missing("transfer", scenario))?;
        let t0 = Epoch::from_mjd(tr.t0_mjd);
        let tf = match (tr.tf_mjd, tr.tof_days) {
            (Some(tf), None) => Epoch::from_mjd(tf),
            (None, Some(days)) => t0.plus_days(days),
            (Some(_), Some(_)) => return Err(invalid("give only one of transfer.tf_mjd and transfer.tof_days")),
            (None, None) => return Err(missing("transfer.tf_mjd or transfer.tof_days", scenario)),
        };
        if !(tf.mjd > t0.mjd) {
            return Err(invalid(format!("arrival {} MJD is not after departure {} MJD", tf.mjd, t0.mjd)));
        }
        Ok(Transfer {
            departure: self.endpoint(&tr.departure, t0, "departure")?,
            arrival: self.endpoint(&tr.arrival, tf, "arrival")?,
            t0,
            tf,
            revs: tr.revs,
        })
    }

    pub fn pso(&self, seed_override: Option<u64>) -> Result<PsoConfig, Failure> {
        let mut cfg = PsoConfig::default();
        if let Some(s) = self.pso.swarm {
            cfg.swarm = s;
        }
        if let Some(i) = self.pso.iters {
            cfg.iters = i;
        }
        if let Some(s) = seed_override.or(self.pso.seed) {
            cfg.seed = s;
        }
        cfg.validate().map_err(|e| invalid(e.to_string()))?;
        Ok(cfg)
    }

    pub fn mission(&self, scenario: Scenario) -> Result<(MissionSpec, &MissionConfig), Failure> {
        let m = self.mission.as_ref().ok_or_else(|| missing("mission", scenario))?;
        if m.legs.is_empty() {
            return Err(missing("mission.legs", scenario));
        }
        let legs = m
            .legs
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let estimator = match l.estimator.as_str() {
                    "rapid" => Estimator::RapidShape,
                    "lambert" => Estimator::Lambert,
                    other => return Err(invalid(format!("mission.legs[{i}].estimator `{other}`: use rapid or lambert"))),
                };
                Ok(LegSpec {
                    from: self.body(&l.from)?,
                    to: self.body(&l.to)?,
                    t0_bounds: (l.t0_window_mjd[0], l.t0_window_mjd[1]),
                    tf_bounds: (l.tf_window_mjd[0], l.tf_window_mjd[1]),
                    estimator,
                })
            })
            .collect::<Result<Vec<_>, Failure>>()?;
        let spec = MissionSpec { legs, stay_days: m.stay_days, spacecraft: self.spacecraft(scenario)? };
        spec.validate().map_err(|e| invalid(e.to_string()))?;
        Ok((spec, m))
    }
}
