#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use splinetraj::constants::MU_SUN;
use splinetraj::constrained::{assemble_shape, Assembled, FreeParams, ShaperOptions};
use splinetraj::elements::{ClassicalElements, Epoch};
use splinetraj::kepler::Body;
use splinetraj::rapid::{shape_rapid, BoundaryConditions, RapidOptions};
use splinetraj::shape::default_nodes;

pub const JULIAN_YEAR_DAYS: f64 = 365.25;

pub fn table1_departure() -> ClassicalElements {
    ClassicalElements::from_au_deg(1.0, 0.4, 10.0, 15.0, 25.0, 10.0)
}

pub fn table1_target() -> ClassicalElements {
    ClassicalElements::from_au_deg(3.0, 0.6, 40.0, 25.0, 25.0, 40.0)
}

/// Table 1 rendezvous lasting `years`, starting at an arbitrary epoch.
pub fn table1_bc(years: f64, revs: u32) -> BoundaryConditions {
    let t0 = Epoch::from_mjd(60000.0);
    let tf = t0.plus_days(years * JULIAN_YEAR_DAYS);
    BoundaryConditions::from_classical(&table1_departure(), &table1_target(), t0, tf, revs, MU_SUN).unwrap()
}

fn body(name: &str, el: [f64; 6]) -> Body {
    Body::new(
        name,
        ClassicalElements::from_au_deg(el[0], el[1], el[2], el[3], el[4], el[5]),
        Epoch::from_mjd(56000.0),
        MU_SUN,
    )
    .unwrap()
}

pub fn earth() -> Body {
    body("Earth", [0.999584, 0.016375, 0.002666, 134.239190, 329.982886, 69.425162])
}

pub fn dionysus() -> Body {
    body("Dionysus", [2.199238, 0.541127, 13.526692, 82.074057, 204.296334, 180.509774])
}

pub fn ao10() -> Body {
    body("1999 AO10", [0.911569, 0.110968, 2.624497, 313.313332, 7.678286, 186.819009])
}

pub fn lg6() -> Body {
    body("2000 LG6", [0.917259, 0.110893, 2.830149, 72.571729, 8.144765, 312.238767])
}

/// Table 1 shapes (16 yr, 6 revs) with randomly perturbed interior knots
/// on `n` segments, kept only when the time constraint is solvable.
pub fn perturbed_shapes(n: usize, count: usize, seed: u64) -> Vec<(FreeParams, Assembled)> {
    let bc = table1_bc(16.0, 6);
    let rapid = shape_rapid(&bc, MU_SUN, &RapidOptions::default()).unwrap();
    let base = FreeParams::resample(&rapid.traj, n).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p_count = n - 2;
    let mut out = Vec::new();
    while out.len() < count {
        let mut z = base.clone();
        for (idx, v) in z.values.iter_mut().enumerate() {
            // p and hbar knots scale, the angle-like elements shift.
            if idx < p_count || idx >= p_count + 4 * (n - 1) {
                *v *= 1.0 + rng.gen_range(-0.05..0.05);
            } else {
                *v += rng.gen_range(-0.03..0.03);
            }
        }
        if let Ok(a) = assemble_shape(&bc, &z, MU_SUN, &ShaperOptions::default()) {
            if a.report.is_feasible() && a.traj.transfer_time(default_nodes(6)).is_ok() {
                out.push((z, a));
            }
        }
    }
    out
}
