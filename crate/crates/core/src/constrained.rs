//! Shaping with `n` uniform segments for every element. The interior knot
//! values are free parameters, except the first interior `p` knot which the
//! time-of-flight quadratic fixes. A derivative-free optimizer (COBYLA)
//! moves the free knots to minimize propellant while keeping the thrust
//! below its limit at a grid of check points.

use std::cell::{Cell, RefCell};
use std::rc::Rc;

use cobyla::{minimize, FailStatus, RhoBeg, StopTols, SuccessStatus};

use crate::constants::AU;
use crate::error::{Error, Result};
use crate::rapid::BoundaryConditions;
use crate::shape::{default_nodes, profile, Profile, ShapedTrajectory, Spacecraft, TrajectoryMetrics, HBAR};
use crate::spline::CubicSpline;
use crate::time_solver::{quadratic_coeffs_sampled, solve_free_knot, FeasibilityReport};

/// Objective assigned to shapes that cannot be evaluated.
const DEGENERATE_OBJECTIVE: f64 = 1e9;

/// Interior knot values at `s_i = i/n`, `i = 1..n-1`: `p_2..p_{n-1}`, then
/// `f, g, h, k, hbar` at every interior knot.
#[derive(Debug, Clone, PartialEq)]
pub struct FreeParams {
    pub n: usize,
    pub values: Vec<f64>,
}

impl FreeParams {
    pub fn len_for(n: usize) -> usize {
        6 * (n - 1) - 1
    }

    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 segments, got {n}")));
        }
        if values.len() != Self::len_for(n) {
            return Err(Error::InvalidArgument(format!(
                "{} free parameters given, {} segments need {}",
                values.len(),
                n,
                Self::len_for(n)
            )));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite free parameter".into()));
        }
        Ok(Self { n, values })
    }

    /// Samples an existing shape at the interior knots.
    pub fn resample(traj: &ShapedTrajectory, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 segments, got {n}")));
        }
        let knot = |j: usize, i: usize| traj.splines[j].value(i as f64 / n as f64);
        let mut values: Vec<f64> = (2..n).map(|i| knot(0, i)).collect();
        for j in 1..6 {
            values.extend((1..n).map(|i| knot(j, i)));
        }
        Self::new(n, values)
    }

    /// Interior `p` knots after the free one (`p_2..p_{n-1}`).
    pub fn p_tail(&self) -> &[f64] {
        &self.values[..self.n - 2]
    }

    /// Interior knots of element `j` in `1..=5` (`f, g, h, k, hbar`).
    pub fn interior(&self, j: usize) -> &[f64] {
        let start = self.n - 2 + (j - 1) * (self.n - 1);
        &self.values[start..start + self.n - 1]
    }
}

/// Thrust check points `s_ij = (i - 1 + j/c)/n`, `nc + 1` of them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintGrid {
    pub n: usize,
    pub c: usize,
}

impl ConstraintGrid {
    pub fn new(n: usize, c: usize) -> Result<Self> {
        if n < 2 || c < 1 {
            return Err(Error::InvalidArgument(format!("constraint grid needs n >= 2 and c >= 1, got n={n} c={c}")));
        }
        Ok(Self { n, c })
    }

    pub fn points(&self) -> Vec<f64> {
        let total = self.n * self.c;
        (0..=total).map(|m| m as f64 / total as f64).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShaperOptions {
    /// Trapezoid intervals; `None` uses the default rounded up to a
    /// multiple of the constraint grid.
    pub nodes: Option<usize>,
    pub p_min_factor: f64,
    pub rho_t: f64,
    pub rho_p: f64,
}

impl Default for ShaperOptions {
    fn default() -> Self {
        Self { nodes: None, p_min_factor: 0.2, rho_t: 1e4, rho_p: 1e4 }
    }
}

impl ShaperOptions {
    /// Trapezoid intervals used for `bc`, optionally aligned to `grid`.
    pub fn nodes_for(&self, bc: &BoundaryConditions, grid: Option<&ConstraintGrid>) -> usize {
        self.nodes.unwrap_or_else(|| {
            let base = default_nodes(bc.revs);
            let step = grid.map_or(1, |g| g.n * g.c);
            base.div_ceil(step) * step
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assembled {
    pub traj: ShapedTrajectory,
    pub report: FeasibilityReport,
    pub p1: f64,
}

fn build_trajectory(bc: &BoundaryConditions, z: &FreeParams, p1: f64, mu: f64) -> Result<ShapedTrajectory> {
    let (y0, yf) = bc.end_values();
    let mut p = Vec::with_capacity(z.n + 1);
    p.push(y0[0]);
    p.push(p1);
    p.extend_from_slice(z.p_tail());
    p.push(yf[0]);
    let spline = |j: usize| -> Result<CubicSpline> {
        let mut v = Vec::with_capacity(z.n + 1);
        v.push(y0[j]);
        v.extend_from_slice(z.interior(j));
        v.push(yf[j]);
        CubicSpline::clamped(&v)
    };
    ShapedTrajectory::new(
        [CubicSpline::clamped(&p)?, spline(1)?, spline(2)?, spline(3)?, spline(4)?, spline(HBAR)?],
        bc.oe0.l,
        bc.dl(),
        bc.t0,
        bc.tf,
        mu,
    )
}

/// Builds the shape for free knots `z`, solving the first interior `p`
/// knot from the time constraint. Without an admissible root that knot is
/// set to `p0` and the report records the infeasibility.
pub fn assemble_shape(bc: &BoundaryConditions, z: &FreeParams, mu: f64, opts: &ShaperOptions) -> Result<Assembled> {
    let nodes = opts.nodes_for(bc, None);
    assemble_with(bc, z, mu, opts, nodes, |traj| Ok(traj.shape_metrics(nodes)?.delta_v)).map(|(a, _)| a)
}

fn assemble_with<T: Clone + HasDeltaV>(
    bc: &BoundaryConditions,
    z: &FreeParams,
    mu: f64,
    opts: &ShaperOptions,
    nodes: usize,
    mut eval: impl FnMut(&ShapedTrajectory) -> Result<T>,
) -> Result<(Assembled, Option<T>)> {
    let p0 = bc.oe0.p;
    let p2 = if z.n == 2 { bc.oef.p } else { z.p_tail()[0] };
    let q = quadratic_coeffs_sampled(
        |p1| build_trajectory(bc, z, p1, mu)?.transfer_time(nodes),
        p0,
        p2,
        bc.tof(),
    )?;
    let mut tried: Vec<(f64, ShapedTrajectory, T)> = Vec::with_capacity(2);
    let report = solve_free_knot(&q, opts.p_min_factor * p0.min(bc.oef.p), |p1| {
        let traj = build_trajectory(bc, z, p1, mu)?;
        let out = eval(&traj)?;
        let dv = out.delta_v();
        tried.push((p1, traj, out));
        Ok(dv)
    });
    let p1 = report.chosen.unwrap_or(p0);
    let (traj, extra) = match tried.into_iter().find(|(r, _, _)| *r == p1) {
        Some((_, traj, out)) => (traj, Some(out)),
        None => (build_trajectory(bc, z, p1, mu)?, None),
    };
    Ok((Assembled { traj, report, p1 }, extra))
}

trait HasDeltaV {
    fn delta_v(&self) -> f64;
}

impl HasDeltaV for f64 {
    fn delta_v(&self) -> f64 {
        *self
    }
}

impl HasDeltaV for Profile {
    fn delta_v(&self) -> f64 {
        self.metrics.delta_v
    }
}

/// Time and `p` discriminants in canonical units (AU and
/// `sqrt(AU^3/mu)`), so the penalty weights are scale-free.
pub fn canonical_discriminants(report: &FeasibilityReport, mu: f64) -> (f64, f64) {
    let tu = (AU.powi(3) / mu).sqrt();
    (report.delta_t * (AU / tu).powi(2), report.delta_p / AU)
}

/// Propellant plus penalties on negative feasibility discriminants.
pub fn penalized_objective(metrics: &TrajectoryMetrics, report: &FeasibilityReport, mu: f64, opts: &ShaperOptions) -> f64 {
    let (dt, dp) = canonical_discriminants(report, mu);
    metrics.propellant() - opts.rho_t * dt.min(0.0) - opts.rho_p * dp.min(0.0)
}

/// `(s, m ||u|| - T_max)` at every grid point; mass is interpolated from
/// the profile's node masses.
pub fn thrust_violations(traj: &ShapedTrajectory, prof: &Profile, sc: &Spacecraft, grid: &ConstraintGrid) -> Result<Vec<(f64, f64)>> {
    let nodes = prof.samples.len() - 1;
    grid.points()
        .into_iter()
        .map(|s| {
            let x = s * nodes as f64;
            let un = if (x - x.round()).abs() < 1e-9 {
                prof.samples[x.round() as usize].u.norm()
            } else {
                traj.point(s)?.u.norm()
            };
            Ok((s, prof.mass_at(s) * un - sc.t_max))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizeOptions {
    pub tol_rel: f64,
    pub max_evals: usize,
    /// Initial trust-region radius in scaled variables.
    pub rho_begin: f64,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self { tol_rel: 1e-4, max_evals: 5000, rho_begin: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerStatus {
    Converged,
    EvaluationCap,
    RoundoffLimited,
    Failed,
}

#[derive(Debug, Clone)]
pub struct Optimized {
    pub traj: ShapedTrajectory,
    pub report: FeasibilityReport,
    pub metrics: TrajectoryMetrics,
    pub z: FreeParams,
    pub objective: f64,
    /// Largest `m ||u|| - T_max` over the constraint grid.
    pub max_violation: f64,
    pub status: OptimizerStatus,
    pub evaluations: usize,
    /// Best feasible-first objective after each evaluation.
    pub history: Vec<f64>,
}

struct Eval {
    objective: f64,
    constraints: Vec<f64>,
}

struct Problem<'a> {
    bc: &'a BoundaryConditions,
    sc: &'a Spacecraft,
    grid: ConstraintGrid,
    mu: f64,
    opts: &'a ShaperOptions,
    nodes: usize,
    scale: Vec<f64>,
    cache: RefCell<Option<(Vec<f64>, Rc<Eval>)>>,
    evals: Cell<usize>,
    // (relative violation, objective, scaled x)
    best: RefCell<Option<(f64, f64, Vec<f64>)>>,
    history: RefCell<Vec<f64>>,
}

impl Problem<'_> {
    fn unscale(&self, x: &[f64]) -> FreeParams {
        FreeParams { n: self.grid.n, values: x.iter().zip(&self.scale).map(|(v, s)| v * s).collect() }
    }

    fn evaluate_z(&self, z: &FreeParams) -> Result<(Assembled, Profile, f64, Vec<f64>)> {
        let (assembled, prof) = assemble_with(self.bc, z, self.mu, self.opts, self.nodes, |traj| {
            profile(traj, self.sc, self.nodes)
        })?;
        let prof = match prof {
            Some(p) => p,
            None => profile(&assembled.traj, self.sc, self.nodes)?,
        };
        let objective = penalized_objective(&prof.metrics, &assembled.report, self.mu, self.opts);
        let cons = thrust_violations(&assembled.traj, &prof, self.sc, &self.grid)?
            .into_iter()
            .map(|(_, v)| -v / self.sc.t_max)
            .collect();
        Ok((assembled, prof, objective, cons))
    }

    fn eval(&self, x: &[f64]) -> Rc<Eval> {
        if let Some((cx, e)) = self.cache.borrow().as_ref() {
            if cx.as_slice() == x {
                return e.clone();
            }
        }
        let m = self.grid.n * self.grid.c + 1;
        let e = match self.evaluate_z(&self.unscale(x)) {
            Ok((_, _, objective, constraints)) if objective.is_finite() => Eval { objective, constraints },
            _ => Eval { objective: DEGENERATE_OBJECTIVE, constraints: vec![-1e3; m] },
        };
        self.evals.set(self.evals.get() + 1);
        let viol = e.constraints.iter().fold(0.0_f64, |acc, c| acc.max(-c));
        {
            let mut best = self.best.borrow_mut();
            let better = match best.as_ref() {
                None => true,
                Some((bv, bo, _)) => rank(viol, e.objective) < rank(*bv, *bo),
            };
            if better {
                *best = Some((viol, e.objective, x.to_vec()));
            }
            self.history.borrow_mut().push(best.as_ref().map_or(e.objective, |b| b.1));
        }
        let e = Rc::new(e);
        *self.cache.borrow_mut() = Some((x.to_vec(), e.clone()));
        e
    }
}

/// Relative thrust excess still counted as satisfying the limit.
const VIOLATION_TOL: f64 = 1e-3;

/// Feasible points first, ordered by objective; then by violation.
fn rank(viol: f64, objective: f64) -> (bool, f64) {
    if viol <= VIOLATION_TOL {
        (false, objective)
    } else {
        (true, viol)
    }
}

/// Minimizes propellant over the free knots starting from `init`, subject
/// to the thrust limit on `grid`.
pub fn optimize(
    bc: &BoundaryConditions,
    sc: &Spacecraft,
    grid: &ConstraintGrid,
    init: &FreeParams,
    mu: f64,
    shaper: &ShaperOptions,
    opts: &OptimizeOptions,
) -> Result<Optimized> {
    sc.validate()?;
    if init.n != grid.n {
        return Err(Error::InvalidArgument(format!(
            "initial guess has {} segments, grid has {}",
            init.n, grid.n
        )));
    }
    let n = grid.n;
    let p_scale = 0.5 * (bc.oe0.p + bc.oef.p);
    let h_scale = 0.5 * (bc.hbar0 + bc.hbarf);
    let mut scale = vec![p_scale; n - 2];
    for j in 1..6 {
        scale.extend(std::iter::repeat_n(if j == HBAR { h_scale } else { 1.0 }, n - 1));
    }
    let problem = Problem {
        bc,
        sc,
        grid: *grid,
        mu,
        opts: shaper,
        nodes: shaper.nodes_for(bc, Some(grid)),
        scale,
        cache: RefCell::new(None),
        evals: Cell::new(0),
        best: RefCell::new(None),
        history: RefCell::new(Vec::new()),
    };
    let x0: Vec<f64> = init.values.iter().zip(&problem.scale).map(|(v, s)| v / s).collect();
    let bounds: Vec<(f64, f64)> = problem
        .scale
        .iter()
        .map(|&s| if s == 1.0 { (f64::NEG_INFINITY, f64::INFINITY) } else { (1e-3, f64::INFINITY) })
        .collect();

    let objective = |x: &[f64], _: &mut ()| problem.eval(x).objective;
    let constraints: Vec<Box<dyn Fn(&[f64], &mut ()) -> f64 + '_>> = (0..grid.n * grid.c + 1)
        .map(|i| {
            let p = &problem;
            Box::new(move |x: &[f64], _: &mut ()| p.eval(x).constraints[i]) as Box<dyn Fn(&[f64], &mut ()) -> f64>
        })
        .collect();
    let tols = StopTols { ftol_rel: opts.tol_rel, xtol_rel: opts.tol_rel, ..StopTols::default() };
    let outcome = minimize(
        objective,
        &x0,
        &bounds,
        &constraints,
        (),
        opts.max_evals,
        RhoBeg::All(opts.rho_begin),
        Some(tols),
    );
    let status = match &outcome {
        Ok((SuccessStatus::MaxEvalReached, _, _)) => OptimizerStatus::EvaluationCap,
        Ok(_) => OptimizerStatus::Converged,
        Err((FailStatus::RoundoffLimited, _, _)) => OptimizerStatus::RoundoffLimited,
        Err(_) => OptimizerStatus::Failed,
    };
    drop(constraints);

    // The tracked best is at least as good as the optimizer's final point
    // and never worse than the start.
    let x_best = problem.best.borrow().as_ref().map(|b| b.2.clone()).unwrap_or(x0);
    let z = problem.unscale(&x_best);
    let (assembled, prof, objective, cons) = problem.evaluate_z(&z)?;
    let max_violation = cons.iter().fold(f64::NEG_INFINITY, |acc, c| acc.max(-c)) * sc.t_max;
    let history = problem.history.borrow().clone();
    Ok(Optimized {
        traj: assembled.traj,
        report: assembled.report,
        metrics: prof.metrics,
        z,
        objective,
        max_violation,
        status,
        evaluations: problem.evals.get(),
        history,
    })
}
