//! Synthetic flight-path generation and path CSV I/O.
//!
//! Paths have three phases: vertical takeoff from ground to a cruise
//! altitude, a cruise of several straight legs with random turns, and a
//! vertical landing. Consecutive points are exactly `speed * dt` apart, so
//! one path point corresponds to one environment timestep.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::Rng;

use crate::env::Scenario;
use crate::seed;
use crate::{Error, Result};

const PATH_LABEL: u64 = 0x5041_5448; // "PATH"
const MAX_LEG_RETRIES: usize = 200;
/// Spacing slack for paths loaded from files (generated ones are exact).
const SPACING_TOL_M: f64 = 1e-6;

/// Phase boundaries as point indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Phases {
    /// Index of the last takeoff point (cruise altitude first reached here).
    pub takeoff_end: usize,
    /// Index of the first landing point.
    pub landing_start: usize,
}

/// A timestamped 3D trajectory; `points[t]` is the UAV position at step `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlightPath {
    pub id: u32,
    pub points: Vec<[f64; 3]>,
    pub phases: Option<Phases>,
}

impl FlightPath {
    /// Number of path points `T`; an episode makes `T - 1` transitions.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn validate(&self, step_len_m: f64) -> Result<()> {
        if self.points.len() < 2 {
            return Err(Error::Scenario(format!(
                "path {} has {} points; need at least 2",
                self.id,
                self.points.len()
            )));
        }
        for (t, w) in self.points.windows(2).enumerate() {
            let d = dist(w[0], w[1]);
            if d > step_len_m + SPACING_TOL_M {
                return Err(Error::Scenario(format!(
                    "path {} point spacing {d} at step {t} exceeds step length {step_len_m}",
                    self.id
                )));
            }
        }
        for (t, p) in self.points.iter().enumerate() {
            if !(0.0..=100.0).contains(&p[2]) {
                return Err(Error::Scenario(format!(
                    "path {} altitude {} at step {t} outside [0, 100] m",
                    self.id, p[2]
                )));
            }
        }
        Ok(())
    }
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// Tunable knobs for path generation. Lengths in meters; the cruise altitude
/// and leg lengths are snapped to whole path steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathGen {
    pub cruise_alt_min_m: f64,
    pub cruise_alt_max_m: f64,
    pub turns_min: u32,
    pub turns_max: u32,
    pub leg_len_min_m: f64,
    pub leg_len_max_m: f64,
    pub margin_m: f64,
}

impl Default for PathGen {
    fn default() -> Self {
        Self {
            cruise_alt_min_m: 20.0,
            cruise_alt_max_m: 30.0,
            turns_min: 3,
            turns_max: 6,
            leg_len_min_m: 150.0,
            leg_len_max_m: 400.0,
            margin_m: 50.0,
        }
    }
}

/// Generates `count` reproducible paths with the default geometry knobs.
pub fn generate_paths(scenario: &Scenario, count: u32, seed: u64) -> Result<Vec<FlightPath>> {
    generate_paths_with(scenario, count, seed, &PathGen::default())
}

/// Generates `count` reproducible paths; path ids are 1-based. Each path has
/// its own derived random stream, so any subset regenerates identically.
pub fn generate_paths_with(
    scenario: &Scenario,
    count: u32,
    seed: u64,
    gen: &PathGen,
) -> Result<Vec<FlightPath>> {
    if count < 1 {
        return Err(Error::Config("path count must be at least 1".into()));
    }
    (1..=count)
        .map(|id| generate_one(scenario, id, seed::derive2(seed, PATH_LABEL, u64::from(id)), gen))
        .collect()
}

fn generate_one(scenario: &Scenario, id: u32, seed: u64, gen: &PathGen) -> Result<FlightPath> {
    let step = scenario.step_len_m();
    let margin = gen.margin_m;
    let (lx, ly) = (scenario.area_l_m, scenario.area_w_m);
    if lx <= 2.0 * margin + gen.leg_len_min_m || ly <= 2.0 * margin + gen.leg_len_min_m {
        return Err(Error::Scenario(format!(
            "area {lx}x{ly} too small for legs of {} m inside a {} m margin",
            gen.leg_len_min_m, gen.margin_m
        )));
    }
    let alt_cap = gen.cruise_alt_max_m.min(scenario.max_altitude_m);
    let alt_floor = gen.cruise_alt_min_m.min(alt_cap);
    let climb_min = (alt_floor / step).ceil().max(1.0) as u64;
    let climb_max = ((alt_cap / step).floor() as u64).max(climb_min);

    let mut rng = seed::rng_from(seed);
    let climb_steps = rng.random_range(climb_min..=climb_max) as usize;
    let cruise_alt = climb_steps as f64 * step;
    let legs = rng.random_range(gen.turns_min..=gen.turns_max) as usize + 1;
    let leg_steps_min = (gen.leg_len_min_m / step).ceil().max(1.0) as u64;
    let leg_steps_max = ((gen.leg_len_max_m / step).floor() as u64).max(leg_steps_min);

    let start = [
        rng.random_range(margin..=lx - margin),
        rng.random_range(margin..=ly - margin),
        0.0,
    ];
    let mut points = Vec::new();
    points.push(start);
    for j in 1..=climb_steps {
        points.push([start[0], start[1], j as f64 * step]);
    }
    let takeoff_end = points.len() - 1;

    let mut anchor = [start[0], start[1], cruise_alt];
    for _ in 0..legs {
        let n = rng.random_range(leg_steps_min..=leg_steps_max) as usize;
        let mut placed = false;
        for _ in 0..MAX_LEG_RETRIES {
            let theta = rng.random_range(0.0..std::f64::consts::TAU);
            let (dx, dy) = (theta.cos(), theta.sin());
            let end_x = anchor[0] + n as f64 * step * dx;
            let end_y = anchor[1] + n as f64 * step * dy;
            if end_x < margin || end_x > lx - margin || end_y < margin || end_y > ly - margin {
                continue;
            }
            for j in 1..=n {
                points.push([
                    anchor[0] + j as f64 * step * dx,
                    anchor[1] + j as f64 * step * dy,
                    cruise_alt,
                ]);
            }
            anchor = *points.last().expect("leg pushed at least one point");
            placed = true;
            break;
        }
        if !placed {
            return Err(Error::Scenario(format!(
                "could not place a cruise leg inside the area after {MAX_LEG_RETRIES} tries (path {id})"
            )));
        }
    }
    let landing_start = points.len();
    for j in 1..=climb_steps {
        points.push([anchor[0], anchor[1], cruise_alt - j as f64 * step]);
    }

    let path = FlightPath {
        id,
        points,
        phases: Some(Phases {
            takeoff_end,
            landing_start,
        }),
    };
    path.validate(step)?;
    Ok(path)
}

/// Writes one path as `path_id,step,x,y,z` CSV.
pub fn write_path_csv(file: &Path, path: &FlightPath) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(file)?);
    writeln!(out, "path_id,step,x,y,z")?;
    for (t, p) in path.points.iter().enumerate() {
        writeln!(out, "{},{},{},{},{}", path.id, t, p[0], p[1], p[2])?;
    }
    out.flush()?;
    Ok(())
}

/// Loads one path CSV written by [`write_path_csv`].
pub fn load_path_csv(file: &Path) -> Result<FlightPath> {
    let reader = BufReader::new(std::fs::File::open(file)?);
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse(format!("{}: empty path file", file.display())))??;
    if header.trim() != "path_id,step,x,y,z" {
        return Err(Error::Parse(format!(
            "{}: unexpected header {header:?}",
            file.display()
        )));
    }
    let mut id: Option<u32> = None;
    let mut points = Vec::new();
    for (n, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::Parse(format!(
                "{}: line {}: expected 5 fields, got {}",
                file.display(),
                n + 2,
                fields.len()
            )));
        }
        let row_id: u32 = fields[0]
            .parse()
            .map_err(|e| Error::Parse(format!("{}: bad path_id: {e}", file.display())))?;
        match id {
            None => id = Some(row_id),
            Some(prev) if prev != row_id => {
                return Err(Error::Parse(format!(
                    "{}: mixed path ids {prev} and {row_id}",
                    file.display()
                )))
            }
            _ => {}
        }
        let step: usize = fields[1]
            .parse()
            .map_err(|e| Error::Parse(format!("{}: bad step: {e}", file.display())))?;
        if step != points.len() {
            return Err(Error::Parse(format!(
                "{}: step {} out of order (expected {})",
                file.display(),
                step,
                points.len()
            )));
        }
        let mut p = [0.0; 3];
        for (k, f) in fields[2..].iter().enumerate() {
            p[k] = f
                .parse()
                .map_err(|e| Error::Parse(format!("{}: bad coordinate: {e}", file.display())))?;
        }
        points.push(p);
    }
    let id = id.ok_or_else(|| Error::Parse(format!("{}: no data rows", file.display())))?;
    Ok(FlightPath {
        id,
        points,
        phases: None,
    })
}
