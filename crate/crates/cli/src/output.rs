//! File emission. Floats are written with `{:.16e}`, 17 significant
//! digits, so identical runs give identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde_json::Value;

use splinetraj::shape::{PathSample, Profile};

use crate::failure::Failure;

pub const TRAJECTORY_HEADER: &str = "s,t_sec,L_rad,rx,ry,rz,vx,vy,vz,ux,uy,uz,u_norm,mass_kg,thrust_N";
/// Bumped whenever the trajectory columns change.
pub const TRAJECTORY_SCHEMA: &str = "trajectory-v1";

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::io(&path.display().to_string(), e))
}

fn push_row(out: &mut String, values: &[f64]) {
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(out, "{v:.16e}");
    }
    out.push('\n');
}

/// One row per sample; mass and thrust are NaN without a spacecraft.
pub fn trajectory_csv(samples: &[PathSample], mass: Option<&[f64]>) -> String {
    let mut out = String::with_capacity(samples.len() * 400);
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for (i, p) in samples.iter().enumerate() {
        let un = p.u.norm();
        let m = mass.map_or(f64::NAN, |m| m[i]);
        push_row(
            &mut out,
            &[p.s, p.t, p.l, p.r.x, p.r.y, p.r.z, p.v.x, p.v.y, p.v.z, p.u.x, p.u.y, p.u.z, un, m, m * un],
        );
    }
    out
}

pub fn emit_profile(profile: &Profile, path: &Path) -> Result<(), Failure> {
    write(path, &trajectory_csv(&profile.samples, Some(&profile.mass)))
}

pub fn emit_samples(samples: &[PathSample], path: &Path) -> Result<(), Failure> {
    write(path, &trajectory_csv(samples, None))
}

pub fn emit_table(header: &str, rows: &[Vec<f64>], path: &Path) -> Result<(), Failure> {
    let mut out = String::new();
    out.push_str(header);
    out.push('\n');
    for r in rows {
        push_row(&mut out, r);
    }
    write(path, &out)
}

pub fn emit_summary(summary: &Value, path: &Path) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(summary).expect("summary is plain JSON");
    text.push('\n');
    write(path, &text)
}
