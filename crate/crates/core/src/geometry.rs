//! Orbit geometry: two-body propagation, target crossings, roll angles,
//! visibility windows, and roll-maneuver timing.
//!
//! The model is deliberately small: Keplerian two-body motion, a spherical
//! rotating Earth, and a linearized sidereal-angle formula. Targets are fixed
//! to the rotating Earth; the satellite observes by rolling about its
//! velocity axis, so a target is visible while it stays inside the sensor
//! cone around the rolled optical axis.

use chrono::{DateTime, Utc};
use thiserror::Error;

use crate::instance::{
    OrbitElements, SatelliteConfig, Target, TaskKind, TaskSpec, EARTH_RADIUS_KM,
};

/// Earth gravitational parameter, km^3/s^2.
pub const MU_EARTH_KM3_S2: f64 = 398600.4418;
/// Earth rotation rate: one sidereal day per 360 degrees.
pub const EARTH_ROT_DEG_PER_S: f64 = 360.0 / 86164.0905;

const KEPLER_TOL_RAD: f64 = 1e-10;
const KEPLER_MAX_ITER: usize = 50;
/// Grid step for sign-change scans, seconds.
const SCAN_STEP_S: f64 = 1.0;
/// Bisection stops once the bracket is this narrow, seconds.
const BISECT_TOL_S: f64 = 1e-3;
/// A visibility window is abandoned if an edge is not found within this many
/// scan steps of the crossing (far beyond any physical pass length).
const WINDOW_SCAN_CAP: usize = 1800;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("Kepler solve did not converge after {iterations} iterations (e = {eccentricity})")]
    KeplerDiverged {
        iterations: usize,
        eccentricity: f64,
    },
}

// Minimal 3-vector helpers; all geometry here fits in a handful of ops.

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

fn scale(a: [f64; 3], s: f64) -> [f64; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn unit(a: [f64; 3]) -> [f64; 3] {
    scale(a, 1.0 / norm(a))
}

fn rot_z(v: [f64; 3], ang_rad: f64) -> [f64; 3] {
    let (s, c) = ang_rad.sin_cos();
    [c * v[0] - s * v[1], s * v[0] + c * v[1], v[2]]
}

fn rot_x(v: [f64; 3], ang_rad: f64) -> [f64; 3] {
    let (s, c) = ang_rad.sin_cos();
    [v[0], c * v[1] - s * v[2], s * v[1] + c * v[2]]
}

/// Rotate `v` by `ang_rad` about the unit axis `k` (Rodrigues formula).
fn rotate_about(v: [f64; 3], k: [f64; 3], ang_rad: f64) -> [f64; 3] {
    let (s, c) = ang_rad.sin_cos();
    let kxv = cross(k, v);
    let kdv = dot(k, v);
    [
        v[0] * c + kxv[0] * s + k[0] * kdv * (1.0 - c),
        v[1] * c + kxv[1] * s + k[1] * kdv * (1.0 - c),
        v[2] * c + kxv[2] * s + k[2] * kdv * (1.0 - c),
    ]
}

/// Greenwich sidereal angle in degrees at `epoch`, linearized in Julian days.
fn gmst_deg(epoch: DateTime<Utc>) -> f64 {
    let jd = epoch.timestamp() as f64 / 86400.0 + 2440587.5;
    (280.46061837 + 360.98564736629 * (jd - 2451545.0)).rem_euclid(360.0)
}

/// Solve Kepler's equation `M = E - e sin E` for the eccentric anomaly (rad).
fn solve_kepler(mean_anom_rad: f64, ecc: f64) -> Result<f64, GeometryError> {
    let mut e_anom = mean_anom_rad;
    for _ in 0..KEPLER_MAX_ITER {
        let f = e_anom - ecc * e_anom.sin() - mean_anom_rad;
        let step = f / (1.0 - ecc * e_anom.cos());
        e_anom -= step;
        if step.abs() < KEPLER_TOL_RAD {
            return Ok(e_anom);
        }
    }
    Err(GeometryError::KeplerDiverged {
        iterations: KEPLER_MAX_ITER,
        eccentricity: ecc,
    })
}

/// Orbital period in seconds.
pub fn orbital_period_s(orbit: &OrbitElements) -> f64 {
    let a = orbit.semi_major_axis_km;
    2.0 * std::f64::consts::PI * (a * a * a / MU_EARTH_KM3_S2).sqrt()
}

/// Inertial position (km) and velocity (km/s) at `t` seconds past epoch.
pub fn eci_state(orbit: &OrbitElements, t: f64) -> Result<([f64; 3], [f64; 3]), GeometryError> {
    let a = orbit.semi_major_axis_km;
    let e = orbit.eccentricity;
    let nu0 = orbit.true_anomaly_deg.to_radians();

    // True anomaly at epoch -> eccentric -> mean, then advance at mean motion.
    let e0 =
        2.0 * ((1.0 - e).sqrt() * (nu0 / 2.0).sin()).atan2((1.0 + e).sqrt() * (nu0 / 2.0).cos());
    let m0 = e0 - e * e0.sin();
    let n = (MU_EARTH_KM3_S2 / (a * a * a)).sqrt();
    let e_anom = solve_kepler(m0 + n * t, e)?;

    let nu = 2.0
        * ((1.0 + e).sqrt() * (e_anom / 2.0).sin()).atan2((1.0 - e).sqrt() * (e_anom / 2.0).cos());
    let r_mag = a * (1.0 - e * e_anom.cos());
    let r_pf = [r_mag * nu.cos(), r_mag * nu.sin(), 0.0];
    let v_scale = (MU_EARTH_KM3_S2 * a).sqrt() / r_mag;
    let v_pf = [
        -v_scale * e_anom.sin(),
        v_scale * (1.0 - e * e).sqrt() * e_anom.cos(),
        0.0,
    ];

    let to_eci = |v: [f64; 3]| {
        rot_z(
            rot_x(
                rot_z(v, orbit.arg_perigee_deg.to_radians()),
                orbit.inclination_deg.to_radians(),
            ),
            orbit.raan_deg.to_radians(),
        )
    };
    Ok((to_eci(r_pf), to_eci(v_pf)))
}

/// Sub-satellite point and altitude at `t` seconds past epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundTrackSample {
    pub t: f64,
    pub sub_lat_deg: f64,
    pub sub_lon_deg: f64,
    pub altitude_km: f64,
}

/// Project the satellite onto the rotating spherical Earth at `t`.
pub fn propagate(orbit: &OrbitElements, t: f64) -> Result<GroundTrackSample, GeometryError> {
    let (r, _) = eci_state(orbit, t)?;
    let r_mag = norm(r);
    let theta = gmst_deg(orbit.epoch) + EARTH_ROT_DEG_PER_S * t;
    let lon = (r[1].atan2(r[0]).to_degrees() - theta + 180.0).rem_euclid(360.0) - 180.0;
    Ok(GroundTrackSample {
        t,
        sub_lat_deg: (r[2] / r_mag).asin().to_degrees(),
        sub_lon_deg: lon,
        altitude_km: r_mag - EARTH_RADIUS_KM,
    })
}

/// Target position in the inertial frame at `t` seconds past epoch.
fn target_eci(target: &Target, gmst0_deg: f64, t: f64) -> [f64; 3] {
    let lat = target.lat_deg.to_radians();
    let lon = (target.lon_deg + gmst0_deg + EARTH_ROT_DEG_PER_S * t).to_radians();
    [
        EARTH_RADIUS_KM * lat.cos() * lon.cos(),
        EARTH_RADIUS_KM * lat.cos() * lon.sin(),
        EARTH_RADIUS_KM * lat.sin(),
    ]
}

/// Along-track projection of the satellite-to-target line. Roots are the
/// instants the target passes abeam of the satellite.
fn along_track(
    orbit: &OrbitElements,
    target: &Target,
    gmst0_deg: f64,
    t: f64,
) -> Result<f64, GeometryError> {
    let (r, v) = eci_state(orbit, t)?;
    Ok(dot(sub(target_eci(target, gmst0_deg, t), r), unit(v)))
}

/// Times in `horizon` at which the target crosses the plane perpendicular to
/// the velocity vector, found by a 1 s scan plus bisection.
pub fn crossing_time(
    orbit: &OrbitElements,
    target: &Target,
    horizon: (f64, f64),
) -> Result<Vec<f64>, GeometryError> {
    let gmst0 = gmst_deg(orbit.epoch);
    let mut roots = Vec::new();
    let push_root = |t: f64, roots: &mut Vec<f64>| {
        if roots.last().is_none_or(|&last| t - last > BISECT_TOL_S) {
            roots.push(t);
        }
    };

    let mut t_prev = horizon.0;
    let mut f_prev = along_track(orbit, target, gmst0, t_prev)?;
    if f_prev == 0.0 {
        push_root(t_prev, &mut roots);
    }
    while t_prev < horizon.1 {
        let t_next = (t_prev + SCAN_STEP_S).min(horizon.1);
        let f_next = along_track(orbit, target, gmst0, t_next)?;
        if f_next == 0.0 {
            push_root(t_next, &mut roots);
        } else if f_prev != 0.0 && f_prev.signum() != f_next.signum() {
            let (mut lo, mut hi, mut f_lo) = (t_prev, t_next, f_prev);
            while hi - lo > BISECT_TOL_S {
                let mid = 0.5 * (lo + hi);
                let f_mid = along_track(orbit, target, gmst0, mid)?;
                if f_mid == 0.0 || f_lo.signum() != f_mid.signum() {
                    hi = mid;
                } else {
                    lo = mid;
                    f_lo = f_mid;
                }
            }
            push_root(0.5 * (lo + hi), &mut roots);
        }
        t_prev = t_next;
        f_prev = f_next;
    }
    Ok(roots)
}

/// Roll angle (deg) that points the optical axis at an arc distance
/// `arc_deg` across the spherical Earth, seen from orbital radius `r_km`.
pub fn look_angle_deg(arc_deg: f64, r_km: f64) -> f64 {
    let sigma = arc_deg.to_radians();
    (EARTH_RADIUS_KM * sigma.sin())
        .atan2(r_km - EARTH_RADIUS_KM * sigma.cos())
        .to_degrees()
}

/// Signed roll (deg) that centers the target at the crossing instant:
/// positive toward the left of the velocity vector (the orbit-normal side).
pub fn roll_angle_for(
    orbit: &OrbitElements,
    target: &Target,
    t_cross: f64,
) -> Result<f64, GeometryError> {
    let gmst0 = gmst_deg(orbit.epoch);
    let (r, v) = eci_state(orbit, t_cross)?;
    let p = target_eci(target, gmst0, t_cross);
    let arc = dot(unit(r), unit(p)).clamp(-1.0, 1.0).acos().to_degrees();
    let eta = look_angle_deg(arc, norm(r));
    Ok(if dot(p, cross(r, v)) < 0.0 { -eta } else { eta })
}

/// Cone angle (deg) between the rolled optical axis and the target at `t`.
fn cone_angle(
    orbit: &OrbitElements,
    target: &Target,
    gmst0_deg: f64,
    roll_deg: f64,
    t: f64,
) -> Result<f64, GeometryError> {
    let (r, v) = eci_state(orbit, t)?;
    let axis = rotate_about(unit(scale(r, -1.0)), unit(v), roll_deg.to_radians());
    let to_target = unit(sub(target_eci(target, gmst0_deg, t), r));
    Ok(dot(axis, to_target).clamp(-1.0, 1.0).acos().to_degrees())
}

/// Visibility window around `t_cross` with the roll held at the crossing
/// value, or `None` if the required roll exceeds the satellite limit. Edges
/// are where the target leaves the sensor cone, located by a 1 s scan plus
/// bisection.
pub fn time_window_for(
    orbit: &OrbitElements,
    sat: &SatelliteConfig,
    target: &Target,
    t_cross: f64,
) -> Result<Option<(f64, f64)>, GeometryError> {
    let roll = roll_angle_for(orbit, target, t_cross)?;
    if roll.abs() > sat.max_roll_deg {
        return Ok(None);
    }
    let gmst0 = gmst_deg(orbit.epoch);
    let half = sat.sensor_half_angle_deg;
    if cone_angle(orbit, target, gmst0, roll, t_cross)? > half {
        return Ok(None);
    }

    // Walk outward until the target exits the cone, then bisect the edge.
    let mut edges = [0.0f64; 2];
    for (slot, dir) in [(0usize, -1.0f64), (1usize, 1.0f64)] {
        let mut inside = t_cross;
        let mut outside = None;
        for step in 1..=WINDOW_SCAN_CAP {
            let t = t_cross + dir * step as f64 * SCAN_STEP_S;
            if cone_angle(orbit, target, gmst0, roll, t)? > half {
                outside = Some(t);
                break;
            }
            inside = t;
        }
        let Some(mut outside) = outside else {
            return Ok(None);
        };
        while (outside - inside).abs() > BISECT_TOL_S {
            let mid = 0.5 * (inside + outside);
            if cone_angle(orbit, target, gmst0, roll, mid)? > half {
                outside = mid;
            } else {
                inside = mid;
            }
        }
        edges[slot] = 0.5 * (inside + outside);
    }
    Ok(Some((edges[0], edges[1])))
}

/// One crossing of one target: when, at what roll, and the visibility window
/// if the roll is admissible.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub t_cross: f64,
    pub roll_deg: f64,
    pub window: Option<(f64, f64)>,
}

/// All crossings of `target` within `horizon`, with window geometry.
pub fn observation_candidates(
    orbit: &OrbitElements,
    sat: &SatelliteConfig,
    target: &Target,
    horizon: (f64, f64),
) -> Result<Vec<Candidate>, GeometryError> {
    let mut out = Vec::new();
    for t_cross in crossing_time(orbit, target, horizon)? {
        out.push(Candidate {
            t_cross,
            roll_deg: roll_angle_for(orbit, target, t_cross)?,
            window: time_window_for(orbit, sat, target, t_cross)?,
        });
    }
    Ok(out)
}

/// Roll-maneuver kinematics: bang-bang acceleration with a rate cap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManeuverProfile {
    /// Peak roll rate, degrees per second.
    pub max_rate: f64,
    /// Roll acceleration, degrees per second squared.
    pub accel: f64,
}

impl From<&SatelliteConfig> for ManeuverProfile {
    fn from(sat: &SatelliteConfig) -> Self {
        ManeuverProfile {
            max_rate: sat.max_roll_rate,
            accel: sat.roll_accel,
        }
    }
}

/// Minimum time (s) to roll from `from_deg` to `to_deg`: a triangular rate
/// profile for short slews, trapezoidal once the rate cap binds.
pub fn maneuver_time(from_deg: f64, to_deg: f64, profile: &ManeuverProfile) -> f64 {
    let delta = (to_deg - from_deg).abs();
    if delta == 0.0 {
        return 0.0;
    }
    if delta >= profile.max_rate * profile.max_rate / profile.accel {
        delta / profile.max_rate + profile.max_rate / profile.accel
    } else {
        2.0 * (delta / profile.accel).sqrt()
    }
}

/// Settings for turning target geometry into a task list.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskGenConfig {
    /// Storage units one observation occupies.
    pub obs_memory_delta: i64,
    /// Spacing between download slots, seconds (zero disables downloads).
    pub download_interval_s: i64,
    /// Length of each download slot, seconds.
    pub download_duration_s: i64,
    /// Storage change per download (negative frees space).
    pub download_memory_delta: i64,
}

impl Default for TaskGenConfig {
    fn default() -> Self {
        TaskGenConfig {
            obs_memory_delta: 1,
            download_interval_s: 300,
            download_duration_s: 60,
            download_memory_delta: -4,
        }
    }
}

/// Build the task list for `targets` over an integer-second horizon.
///
/// Window edges round inward to whole seconds; a window is dropped (never
/// clipped) if it pokes outside the horizon, degenerates under rounding, or
/// no longer brackets its crossing. The first crossing of a target reuses the
/// target id; later crossings and download slots get fresh ids above every
/// target id. Tasks come back sorted by `(window_start, id)`.
pub fn build_tasks(
    orbit: &OrbitElements,
    sat: &SatelliteConfig,
    targets: &[Target],
    horizon: (i64, i64),
    gen: &TaskGenConfig,
) -> Result<Vec<TaskSpec>, GeometryError> {
    let hf = (horizon.0 as f64, horizon.1 as f64);
    let mut tasks = Vec::new();
    let mut next_id = targets.iter().map(|t| t.id).max().unwrap_or(0) + 1;

    for target in targets {
        let mut first = true;
        for cand in observation_candidates(orbit, sat, target, hf)? {
            let Some((start, end)) = cand.window else {
                continue;
            };
            if start < hf.0 || end > hf.1 {
                continue;
            }
            let ws = start.ceil() as i64;
            let we = end.floor() as i64;
            if ws >= we || (ws as f64) >= cand.t_cross || cand.t_cross >= (we as f64) {
                continue;
            }
            let id = if first {
                first = false;
                target.id
            } else {
                next_id += 1;
                next_id - 1
            };
            tasks.push(TaskSpec {
                id,
                kind: TaskKind::Observation,
                window_start: ws,
                window_end: we,
                roll_deg: cand.roll_deg,
                memory_delta: gen.obs_memory_delta,
                reward: target.reward,
            });
        }
    }

    if gen.download_interval_s > 0 && gen.download_duration_s > 0 && gen.download_memory_delta < 0 {
        let mut ws = horizon.0 + gen.download_interval_s;
        while ws + gen.download_duration_s <= horizon.1 {
            tasks.push(TaskSpec {
                id: next_id,
                kind: TaskKind::Download,
                window_start: ws,
                window_end: ws + gen.download_duration_s,
                roll_deg: 0.0,
                memory_delta: gen.download_memory_delta,
                reward: 0,
            });
            next_id += 1;
            ws += gen.download_interval_s;
        }
    }

    tasks.sort_by_key(|t| (t.window_start, t.id));
    Ok(tasks)
}
