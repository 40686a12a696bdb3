mod config;
mod failure;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use splinetraj::constants::{AU, SECONDS_PER_DAY};
use splinetraj::constrained::{optimize, ConstraintGrid, FreeParams, OptimizeOptions, OptimizerStatus, ShaperOptions};
use splinetraj::elements::Epoch;
use splinetraj::mission::{evaluate_mission, pso_search, EstimateOptions, MissionEvaluation, MissionSpec};
use splinetraj::rapid::{shape_rapid, BoundaryConditions, RapidOptions, RapidShape};
use splinetraj::shape::{default_nodes, profile, Spacecraft, TrajectoryMetrics};
use splinetraj::time_solver::FeasibilityReport;

use config::{RunConfig, Scenario};
use failure::{Failure, EXIT_INFEASIBLE, EXIT_OPTIMIZER_CAP};

#[derive(Parser)]
#[command(name = "splinetraj", version, about = "Low-thrust trajectory shaping with cubic-spline element histories")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rapid shape for a fixed revolution count.
    Shape(Common),
    /// Thrust-constrained optimization started from the rapid shape.
    Optimize(Common),
    /// Rapid shapes over a revolution range; keeps the cheapest.
    ScanRevs(Common),
    /// Swarm search over mission epochs.
    Search(Common),
    /// Propellant estimate for given mission epochs.
    Mission(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Trapezoid intervals along the shape.
    #[arg(long)]
    nodes: Option<usize>,
}

struct Outcome {
    summary: Map<String, Value>,
    exit: i32,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (scenario, args) = match &cli.command {
        Command::Shape(a) => (Scenario::Shape, a),
        Command::Optimize(a) => (Scenario::Optimize, a),
        Command::ScanRevs(a) => (Scenario::ScanRevs, a),
        Command::Search(a) => (Scenario::Search, a),
        Command::Mission(a) => (Scenario::Mission, a),
    };
    match run(scenario, args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(f) => {
            eprintln!("{f}");
            ExitCode::from(f.exit as u8)
        }
    }
}

fn run(scenario: Scenario, args: &Common) -> Result<i32, Failure> {
    let start = Instant::now();
    let cfg = config::load(&args.config)?;
    cfg.check_scenario(scenario)?;
    if args.nodes.is_some_and(|n| n < 2) {
        return Err(Failure::config("CONFIG_INVALID", "--nodes must be at least 2"));
    }
    std::fs::create_dir_all(&args.out).map_err(|e| Failure::io(&args.out.display().to_string(), e))?;

    let mut outcome = match scenario {
        Scenario::Shape => run_shape(&cfg, args)?,
        Scenario::Optimize => run_optimize(&cfg, args)?,
        Scenario::ScanRevs => run_scan(&cfg, args)?,
        Scenario::Search => run_search(&cfg, args)?,
        Scenario::Mission => run_mission(&cfg, args)?,
    };
    let s = &mut outcome.summary;
    s.insert("scenario".into(), json!(scenario.name()));
    s.insert("exit_code".into(), json!(outcome.exit));
    s.insert("wall_time_s".into(), json!(start.elapsed().as_secs_f64()));
    output::emit_summary(&Value::Object(outcome.summary), &args.out.join("summary.json"))?;
    match outcome.exit {
        EXIT_INFEASIBLE => eprintln!("error[INFEASIBLE]: scenario has no feasible solution; see summary.json"),
        EXIT_OPTIMIZER_CAP => eprintln!("error[OPTIMIZER_CAP]: evaluation cap reached before convergence"),
        _ => {}
    }
    Ok(outcome.exit)
}

fn rapid_options(cfg: &RunConfig, args: &Common) -> RapidOptions {
    let mut o = RapidOptions { nodes: args.nodes.or(cfg.shaping.nodes), ..RapidOptions::default() };
    if let Some(f) = cfg.shaping.p_min_factor {
        o.p_min_factor = f;
    }
    o
}

fn boundary(cfg: &RunConfig, scenario: Scenario, revs: u32) -> Result<BoundaryConditions, Failure> {
    let tr = cfg.transfer(scenario)?;
    Ok(BoundaryConditions::from_classical(&tr.departure, &tr.arrival, tr.t0, tr.tf, revs, cfg.mu()?)?)
}

fn required_revs(cfg: &RunConfig, scenario: Scenario) -> Result<u32, Failure> {
    cfg.transfer(scenario)?
        .revs
        .ok_or_else(|| Failure::config("CONFIG_MISSING_FIELD", format!("`transfer.revs` is required for {}", scenario.name())))
}

fn report_json(r: &FeasibilityReport, mu: f64) -> Value {
    let (dt, dp) = splinetraj::constrained::canonical_discriminants(r, mu);
    json!({
        "time_feasible": r.is_feasible(),
        "discriminant_canonical": dt,
        "delta_p_au": dp,
        "roots_p1_au": r.roots.iter().map(|x| x / AU).collect::<Vec<_>>(),
        "chosen_p1_au": r.chosen.map(|x| x / AU),
    })
}

fn epochs_json(bc: &BoundaryConditions) -> Value {
    json!({ "t0_mjd": bc.t0.mjd, "tf_mjd": bc.tf.mjd })
}

fn metrics_into(s: &mut Map<String, Value>, m: &TrajectoryMetrics) {
    s.insert("delta_v_km_s".into(), json!(m.delta_v / 1e3));
    s.insert("u_max_mm_s2".into(), json!(m.u_max * 1e3));
    s.insert("thrust_max_newton".into(), json!(m.thrust_max));
    s.insert("m0_kg".into(), json!(m.m0));
    s.insert("m_f".into(), json!(m.m_final));
    s.insert("propellant_kg".into(), json!(m.propellant()));
    s.insert("transfer_time_days".into(), json!(m.transfer_time / SECONDS_PER_DAY));
}

/// Writes the rapid shape's trajectory and fills the shape part of the
/// summary.
fn emit_rapid(
    rapid: &RapidShape,
    sc: Option<&Spacecraft>,
    nodes: usize,
    path: &Path,
    s: &mut Map<String, Value>,
) -> Result<(), Failure> {
    match sc {
        Some(sc) => {
            let prof = profile(&rapid.traj, sc, nodes)?;
            output::emit_profile(&prof, path)?;
            metrics_into(s, &prof.metrics);
        }
        None => {
            output::emit_samples(&rapid.traj.sample(nodes)?, path)?;
            s.insert("delta_v_km_s".into(), json!(rapid.metrics.delta_v / 1e3));
            s.insert("u_max_mm_s2".into(), json!(rapid.metrics.u_max * 1e3));
            s.insert("m_f".into(), Value::Null);
            s.insert("transfer_time_days".into(), json!(rapid.metrics.transfer_time / SECONDS_PER_DAY));
        }
    }
    Ok(())
}

fn base_summary(nodes: usize) -> Map<String, Value> {
    let mut s = Map::new();
    s.insert("trajectory_schema".into(), json!(output::TRAJECTORY_SCHEMA));
    s.insert("nodes".into(), json!(nodes));
    s
}

fn run_shape(cfg: &RunConfig, args: &Common) -> Result<Outcome, Failure> {
    let revs = required_revs(cfg, Scenario::Shape)?;
    let bc = boundary(cfg, Scenario::Shape, revs)?;
    let sc = cfg.optional_spacecraft()?;
    let opts = rapid_options(cfg, args);
    let mu = cfg.mu()?;
    let rapid = shape_rapid(&bc, mu, &opts)?;
    let nodes = opts.nodes.unwrap_or_else(|| default_nodes(revs));
    let mut s = base_summary(nodes);
    s.insert("revs".into(), json!(revs));
    s.insert("epochs".into(), epochs_json(&bc));
    s.insert("flags".into(), report_json(&rapid.report, mu));
    emit_rapid(&rapid, sc.as_ref(), nodes, &args.out.join("trajectory.csv"), &mut s)?;
    let exit = if rapid.is_feasible() { 0 } else { EXIT_INFEASIBLE };
    Ok(Outcome { summary: s, exit })
}

fn run_scan(cfg: &RunConfig, args: &Common) -> Result<Outcome, Failure> {
    let (lo, hi) = (cfg.shaping.revs_min.unwrap_or(0), cfg.shaping.revs_max.unwrap_or(30));
    if lo > hi {
        return Err(Failure::config("CONFIG_INVALID", format!("shaping.revs_min {lo} exceeds revs_max {hi}")));
    }
    let bc = boundary(cfg, Scenario::ScanRevs, lo)?;
    let mu = cfg.mu()?;
    let opts = rapid_options(cfg, args);
    let mut rows = Vec::new();
    let mut best: Option<RapidShape> = None;
    for revs in lo..=hi {
        let r = shape_rapid(&bc.with_revs(revs), mu, &opts);
        let (feasible, dv, um, dt, dp) = match &r {
            Ok(r) => {
                let (dt, dp) = splinetraj::constrained::canonical_discriminants(&r.report, mu);
                (r.is_feasible(), r.metrics.delta_v, r.metrics.u_max, dt, dp)
            }
            Err(_) => (false, f64::NAN, f64::NAN, f64::NAN, f64::NAN),
        };
        rows.push(vec![revs as f64, if feasible { 1.0 } else { 0.0 }, dv / 1e3, um * 1e3, dt, dp]);
        if let Ok(r) = r {
            if r.is_feasible() && best.as_ref().map_or(true, |b| r.metrics.delta_v < b.metrics.delta_v) {
                best = Some(r);
            }
        }
    }
    output::emit_table(
        "revs,feasible,delta_v_km_s,u_max_mm_s2,discriminant_canonical,delta_p_au",
        &rows,
        &args.out.join("revs.csv"),
    )?;
    let Some(best) = best else {
        let mut s = base_summary(0);
        s.insert("revs_opt".into(), Value::Null);
        s.insert("revs_range".into(), json!([lo, hi]));
        return Ok(Outcome { summary: s, exit: EXIT_INFEASIBLE });
    };
    let nodes = opts.nodes.unwrap_or_else(|| default_nodes(best.revs));
    let mut s = base_summary(nodes);
    s.insert("revs_opt".into(), json!(best.revs));
    s.insert("revs".into(), json!(best.revs));
    s.insert("revs_range".into(), json!([lo, hi]));
    s.insert("epochs".into(), epochs_json(&bc));
    s.insert("flags".into(), report_json(&best.report, mu));
    emit_rapid(&best, cfg.optional_spacecraft()?.as_ref(), nodes, &args.out.join("trajectory.csv"), &mut s)?;
    Ok(Outcome { summary: s, exit: 0 })
}

fn run_optimize(cfg: &RunConfig, args: &Common) -> Result<Outcome, Failure> {
    let sc = cfg.spacecraft(Scenario::Optimize)?;
    let revs = required_revs(cfg, Scenario::Optimize)?;
    let missing = |f: &str| Failure::config("CONFIG_MISSING_FIELD", format!("`{f}` is required for optimize"));
    let n = cfg.shaping.n.ok_or_else(|| missing("shaping.n"))?;
    let c = cfg.shaping.c.ok_or_else(|| missing("shaping.c"))?;
    let grid = ConstraintGrid::new(n, c)?;
    let bc = boundary(cfg, Scenario::Optimize, revs)?;
    let mu = cfg.mu()?;

    let rapid = shape_rapid(&bc, mu, &RapidOptions { nodes: None, ..rapid_options(cfg, args) })?;
    let init = FreeParams::resample(&rapid.traj, n)?;
    let d = ShaperOptions::default();
    let shaper = ShaperOptions {
        nodes: args.nodes.or(cfg.shaping.nodes),
        p_min_factor: cfg.shaping.p_min_factor.unwrap_or(d.p_min_factor),
        rho_t: cfg.shaping.rho_t.unwrap_or(d.rho_t),
        rho_p: cfg.shaping.rho_p.unwrap_or(d.rho_p),
    };
    let d = OptimizeOptions::default();
    let opts = OptimizeOptions {
        tol_rel: cfg.optimizer.tol_rel.unwrap_or(d.tol_rel),
        max_evals: cfg.optimizer.max_evals.unwrap_or(d.max_evals),
        rho_begin: cfg.optimizer.rho_begin.unwrap_or(d.rho_begin),
    };
    let out = optimize(&bc, &sc, &grid, &init, mu, &shaper, &opts)?;
    let nodes = shaper.nodes_for(&bc, Some(&grid));
    let prof = profile(&out.traj, &sc, nodes)?;
    output::emit_profile(&prof, &args.out.join("trajectory.csv"))?;
    output::emit_table("evaluation,best_objective_kg", &indexed(&out.history), &args.out.join("history.csv"))?;

    let mut s = base_summary(nodes);
    s.insert("revs".into(), json!(revs));
    s.insert("n".into(), json!(n));
    s.insert("c".into(), json!(c));
    s.insert("epochs".into(), epochs_json(&bc));
    metrics_into(&mut s, &out.metrics);
    let thrust_ok = out.max_violation <= 1e-3 * sc.t_max;
    let mut flags = report_json(&out.report, mu);
    flags["thrust_feasible"] = json!(thrust_ok);
    flags["max_thrust_violation_newton"] = json!(out.max_violation);
    flags["optimizer_status"] = json!(format!("{:?}", out.status));
    s.insert("flags".into(), flags);
    s.insert("evaluations".into(), json!(out.evaluations));
    s.insert("objective_kg".into(), json!(out.objective));
    s.insert("rapid_delta_v_km_s".into(), json!(rapid.metrics.delta_v / 1e3));
    let exit = if !out.report.is_feasible() || !thrust_ok {
        EXIT_INFEASIBLE
    } else if out.status == OptimizerStatus::EvaluationCap {
        EXIT_OPTIMIZER_CAP
    } else {
        0
    };
    Ok(Outcome { summary: s, exit })
}

fn indexed(values: &[f64]) -> Vec<Vec<f64>> {
    values.iter().enumerate().map(|(i, &v)| vec![(i + 1) as f64, v]).collect()
}

fn estimate_options(cfg: &RunConfig, args: &Common) -> EstimateOptions {
    EstimateOptions {
        rapid: rapid_options(cfg, args),
        max_revs: cfg.mission.as_ref().and_then(|m| m.max_revs),
    }
}

/// Per-leg summary entries, plus a trajectory file for every leg flown
/// with the rapid estimator.
fn emit_legs(
    mission: &MissionSpec,
    ev: &MissionEvaluation,
    opts: &EstimateOptions,
    out: &Path,
) -> Result<Vec<Value>, Failure> {
    let mut legs = Vec::new();
    for (i, (leg, est)) in mission.legs.iter().zip(&ev.legs).enumerate() {
        let mut entry = json!({
            "from": leg.from.name,
            "to": leg.to.name,
            "t0_mjd": est.t0.mjd,
            "tf_mjd": est.tf.mjd,
            "duration_days": est.tf.mjd - est.t0.mjd,
            "revs": est.revs,
            "delta_v_km_s": est.delta_v / 1e3,
            "m_start_kg": est.m_start,
            "delta_m_kg": est.delta_m,
            "estimator": format!("{:?}", leg.estimator),
        });
        if let Some(b) = est.branch {
            entry["lambert_branch"] = json!(format!("{b:?}"));
        }
        if est.shape.is_some() {
            let mu = leg.from.mu_central;
            let dep = leg.from.propagate(Epoch::from_mjd(est.t0.mjd))?.meoe;
            let arr = leg.to.propagate(Epoch::from_mjd(est.tf.mjd))?.meoe;
            let bc = BoundaryConditions::new(dep, arr, est.t0, est.tf, est.revs, mu)?;
            let rapid = shape_rapid(&bc, mu, &opts.rapid)?;
            let sc = Spacecraft { m0: est.m_start, ..mission.spacecraft };
            let nodes = opts.rapid.nodes.unwrap_or_else(|| default_nodes(est.revs));
            let file = format!("leg_{}.csv", i + 1);
            output::emit_profile(&profile(&rapid.traj, &sc, nodes)?, &out.join(&file))?;
            entry["u_max_mm_s2"] = json!(rapid.metrics.u_max * 1e3);
            entry["trajectory_file"] = json!(file);
        }
        legs.push(entry);
    }
    Ok(legs)
}

fn mission_summary(
    mission: &MissionSpec,
    ev: &MissionEvaluation,
    epochs: &[f64],
    opts: &EstimateOptions,
    out: &Path,
) -> Result<Map<String, Value>, Failure> {
    let mut s = Map::new();
    s.insert("trajectory_schema".into(), json!(output::TRAJECTORY_SCHEMA));
    s.insert("epochs".into(), json!(epochs));
    s.insert("stay_days".into(), json!(mission.stay_days));
    s.insert("m0_kg".into(), json!(mission.spacecraft.m0));
    s.insert("total_delta_m_kg".into(), json!(ev.total_delta_m));
    s.insert("m_f".into(), json!(ev.m_final));
    s.insert("delta_v_km_s".into(), json!(ev.legs.iter().map(|l| l.delta_v).sum::<f64>() / 1e3));
    s.insert("revs".into(), json!(ev.legs.iter().map(|l| l.revs).collect::<Vec<_>>()));
    s.insert("legs".into(), Value::Array(emit_legs(mission, ev, opts, out)?));
    Ok(s)
}

fn run_search(cfg: &RunConfig, args: &Common) -> Result<Outcome, Failure> {
    let (mission, _) = cfg.mission(Scenario::Search)?;
    let pso = cfg.pso(args.seed)?;
    let opts = estimate_options(cfg, args);
    let res = pso_search(&mission, &pso, &opts)?;
    output::emit_table("iteration,best_delta_m_kg", &indexed(&res.history), &args.out.join("history.csv"))?;
    let Some(ev) = res.evaluation.as_ref().filter(|_| res.best_delta_m.is_finite()) else {
        let mut s = Map::new();
        s.insert("epochs".into(), json!(res.epochs));
        s.insert("total_delta_m_kg".into(), Value::Null);
        return Ok(Outcome { summary: s, exit: EXIT_INFEASIBLE });
    };
    let mut s = mission_summary(&mission, ev, &res.epochs, &opts, &args.out)?;
    s.insert("seed".into(), json!(pso.seed));
    s.insert("swarm".into(), json!(pso.swarm));
    s.insert("iters".into(), json!(pso.iters));
    Ok(Outcome { summary: s, exit: 0 })
}

fn run_mission(cfg: &RunConfig, args: &Common) -> Result<Outcome, Failure> {
    let (mission, mc) = cfg.mission(Scenario::Mission)?;
    let epochs = mc
        .epochs_mjd
        .clone()
        .ok_or_else(|| Failure::config("CONFIG_MISSING_FIELD", "`mission.epochs_mjd` is required for mission"))?;
    let opts = estimate_options(cfg, args);
    let ev = evaluate_mission(&mission, &epochs, &opts)?;
    let mut s = mission_summary(&mission, &ev, &epochs, &opts, &args.out)?;
    let durations = splinetraj::mission::leg_durations(&epochs, mission.stay_days);
    s.insert("leg_durations_days".into(), json!(durations));
    Ok(Outcome { summary: s, exit: 0 })
}
