//! 2D maze domain: a differential-drive disc robot with laser and bumper
//! sensors, driven by an MLP policy, under two reward modes.
//!
//! Deceptive mode rewards per-step progress toward the goal (r_t = d_{t-1}
//! − d_t), which telescopes to d_0 − d_T; the reported score is the
//! normalized −d_T so the optimum is exactly 0 at the goal. Illumination
//! mode charges energy: r_t = −‖a_t‖², optimal for a motionless robot.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::path::Path;

use crate::evo::{mlp_forward_into, MlpGenome, MlpLayout, MlpScratch};
use crate::subagg::{Rect, StepRecord, Trajectory};
use crate::{Error, Result};

/// Wall segment from a to b.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: (f64, f64),
    pub b: (f64, f64),
}

/// Reward mode selecting which r_t the rollout records.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RewardMode {
    Deceptive,
    Illumination,
}

/// Physical constants of the robot and its sensors. The 0.025 action scale
/// is part of the action formula itself, not a tunable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MazePhysics {
    /// Robot disc radius ρ.
    pub rho: f64,
    /// Laser max range L_max; readings are normalized by it.
    pub laser_range: f64,
}

impl Default for MazePhysics {
    fn default() -> Self {
        MazePhysics {
            rho: 0.015,
            laser_range: 0.2,
        }
    }
}

/// Per-step displacement bound: |v| ≤ 0.025 by the clip formula.
pub const ACTION_SCALE: f64 = 0.025;

/// Maze geometry: bounds, interior walls, start pose, goal disc.
#[derive(Debug, Clone, PartialEq)]
pub struct MazeMap {
    pub bounds: Rect,
    pub walls: Vec<Segment>,
    pub start: (f64, f64, f64),
    pub goal: (f64, f64),
    pub goal_radius: f64,
    /// Walls plus the four boundary edges; what sensors and collisions see.
    segments: Vec<Segment>,
}

/// Robot pose. The radius lives in [`MazePhysics`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotState {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

fn cross(ax: f64, ay: f64, bx: f64, by: f64) -> f64 {
    ax * by - ay * bx
}

/// Distance along the ray (origin o, unit direction d) to the segment, if hit.
fn ray_segment_distance(o: (f64, f64), d: (f64, f64), seg: &Segment) -> Option<f64> {
    let e = (seg.b.0 - seg.a.0, seg.b.1 - seg.a.1);
    let denom = cross(d.0, d.1, e.0, e.1);
    if denom.abs() < 1e-15 {
        return None;
    }
    let w = (seg.a.0 - o.0, seg.a.1 - o.1);
    let t = cross(w.0, w.1, e.0, e.1) / denom;
    let s = cross(w.0, w.1, d.0, d.1) / denom;
    ((0.0..=1.0).contains(&s) && t >= 0.0).then_some(t)
}

/// Squared distance from point p to the segment.
fn point_segment_dist_sq(p: (f64, f64), seg: &Segment) -> f64 {
    let v = (seg.b.0 - seg.a.0, seg.b.1 - seg.a.1);
    let w = (p.0 - seg.a.0, p.1 - seg.a.1);
    let c1 = v.0 * w.0 + v.1 * w.1;
    let c2 = v.0 * v.0 + v.1 * v.1;
    let frac = if c2 > 0.0 {
        (c1 / c2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let dx = w.0 - frac * v.0;
    let dy = w.1 - frac * v.1;
    dx * dx + dy * dy
}

impl MazeMap {
    fn build(
        bounds: Rect,
        walls: Vec<Segment>,
        start: (f64, f64, f64),
        goal: (f64, f64),
        goal_radius: f64,
    ) -> MazeMap {
        let mut segments = walls.clone();
        segments.push(Segment {
            a: (bounds.x_min, bounds.y_min),
            b: (bounds.x_max, bounds.y_min),
        });
        segments.push(Segment {
            a: (bounds.x_max, bounds.y_min),
            b: (bounds.x_max, bounds.y_max),
        });
        segments.push(Segment {
            a: (bounds.x_max, bounds.y_max),
            b: (bounds.x_min, bounds.y_max),
        });
        segments.push(Segment {
            a: (bounds.x_min, bounds.y_max),
            b: (bounds.x_min, bounds.y_min),
        });
        MazeMap {
            bounds,
            walls,
            start,
            goal,
            goal_radius,
            segments,
        }
    }

    /// Walls plus boundary edges.
    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// True if a disc of radius rho centered at p overlaps a wall or pokes
    /// outside the bounds.
    pub fn disc_collides(&self, p: (f64, f64), rho: f64) -> bool {
        if p.0 < self.bounds.x_min + rho
            || p.0 > self.bounds.x_max - rho
            || p.1 < self.bounds.y_min + rho
            || p.1 > self.bounds.y_max - rho
        {
            return true;
        }
        let rho_sq = rho * rho;
        self.walls
            .iter()
            .any(|seg| point_segment_dist_sq(p, seg) < rho_sq)
    }

    /// The start pose must leave the robot collision-free.
    pub fn validate_physics(&self, physics: &MazePhysics) -> Result<()> {
        if self.disc_collides((self.start.0, self.start.1), physics.rho) {
            return Err(Error::config(format!(
                "start pose ({}, {}) collides at robot radius {}",
                self.start.0, self.start.1, physics.rho
            )));
        }
        Ok(())
    }

    pub fn start_state(&self) -> RobotState {
        RobotState {
            x: self.start.0,
            y: self.start.1,
            theta: self.start.2,
        }
    }

    pub fn distance_to_goal(&self, p: (f64, f64)) -> f64 {
        let dx = p.0 - self.goal.0;
        let dy = p.1 - self.goal.1;
        (dx * dx + dy * dy).sqrt()
    }

    /// The shipped hard-maze geometry: a cul-de-sac pocket sits on the
    /// straight start-to-goal line, and the goal chamber only opens at the
    /// top of the right corridor, so greedy approach dead-ends.
    pub fn builtin_deceptive() -> MazeMap {
        parse_maze_map("builtin:deceptive", BUILTIN_DECEPTIVE).expect("builtin map is valid")
    }
}

/// Shipped map source; also available as maps/deceptive_maze.map.
pub const BUILTIN_DECEPTIVE: &str = include_str!("../maps/deceptive_maze.map");

/// Normalized laser reading at `relative_angle` from the robot's heading:
/// nearest hit distance clamped to L_max and divided by it; 1.0 on no hit.
pub fn cast_laser(map: &MazeMap, state: &RobotState, relative_angle: f64, laser_range: f64) -> f64 {
    let angle = state.theta + relative_angle;
    let dir = (angle.cos(), angle.sin());
    let origin = (state.x, state.y);
    let nearest = map
        .segments()
        .iter()
        .filter_map(|seg| ray_segment_distance(origin, dir, seg))
        .fold(f64::INFINITY, f64::min);
    (nearest / laser_range).min(1.0)
}

/// Contact flag at ±90°: 1.0 when a wall sits within twice the robot radius
/// along that side, else 0.0.
pub fn bumper(map: &MazeMap, state: &RobotState, relative_angle: f64, rho: f64) -> f64 {
    let angle = state.theta + relative_angle;
    let dir = (angle.cos(), angle.sin());
    let origin = (state.x, state.y);
    let contact = map
        .segments()
        .iter()
        .filter_map(|seg| ray_segment_distance(origin, dir, seg))
        .any(|t| t <= 2.0 * rho);
    if contact {
        1.0
    } else {
        0.0
    }
}

/// One physics step: a_t = clip(raw, −1, 1)·0.025, rotate, then translate
/// unless the moved disc would collide (translation cancelled, rotation
/// kept). Returns the new state and the executed action a_t.
pub fn step_robot(
    map: &MazeMap,
    physics: &MazePhysics,
    state: &RobotState,
    raw_action: [f64; 2],
) -> (RobotState, [f64; 2]) {
    let a = [
        raw_action[0].clamp(-1.0, 1.0) * ACTION_SCALE,
        raw_action[1].clamp(-1.0, 1.0) * ACTION_SCALE,
    ];
    let v = (a[0] + a[1]) / 2.0;
    let omega = (a[1] - a[0]) / (2.0 * physics.rho);
    let theta = state.theta + omega;
    let candidate = (state.x + v * theta.cos(), state.y + v * theta.sin());
    let (x, y) = if map.disc_collides(candidate, physics.rho) {
        (state.x, state.y)
    } else {
        candidate
    };
    (RobotState { x, y, theta }, a)
}

/// Sensor vector in network input order: lasers at −45°/0°/+45°, then
/// bumpers at +90°/−90°.
pub fn sense(map: &MazeMap, physics: &MazePhysics, state: &RobotState) -> [f64; 5] {
    [
        cast_laser(map, state, -FRAC_PI_4, physics.laser_range),
        cast_laser(map, state, 0.0, physics.laser_range),
        cast_laser(map, state, FRAC_PI_4, physics.laser_range),
        bumper(map, state, FRAC_PI_2, physics.rho),
        bumper(map, state, -FRAC_PI_2, physics.rho),
    ]
}

/// Run the policy for `steps` steps and record one StepRecord per step with
/// the post-step position and the mode's reward.
pub fn rollout(
    map: &MazeMap,
    physics: &MazePhysics,
    layout: MlpLayout,
    genome: &MlpGenome,
    mode: RewardMode,
    steps: usize,
) -> Trajectory {
    debug_assert!(steps >= 1);
    let mut state = map.start_state();
    let mut scratch = MlpScratch::new(layout);
    let mut d_prev = map.distance_to_goal((state.x, state.y));
    let mut records = Vec::with_capacity(steps);
    for t in 1..=steps {
        let input = sense(map, physics, &state);
        let raw = mlp_forward_into(layout, genome, &input, &mut scratch);
        let (next, a) = step_robot(map, physics, &state, raw);
        state = next;
        let reward = match mode {
            RewardMode::Deceptive => {
                let d = map.distance_to_goal((state.x, state.y));
                let r = d_prev - d;
                d_prev = d;
                r
            }
            RewardMode::Illumination => -(a[0] * a[0] + a[1] * a[1]),
        };
        records.push(StepRecord {
            t,
            pos: (state.x, state.y),
            reward,
        });
    }
    Trajectory::new(records, map.bounds)
}

/// End position of the robot.
pub fn maze_measure(traj: &Trajectory) -> (f64, f64) {
    traj.steps.last().expect("rollouts are non-empty").pos
}

/// The reported (normalized) score of a deceptive rollout: −d_T, computed
/// directly from the final position so the optimum at the goal is exactly 0.
pub fn deceptive_score(map: &MazeMap, traj: &Trajectory) -> f64 {
    -map.distance_to_goal(maze_measure(traj))
}

fn parse_floats<const N: usize>(
    name: &str,
    lineno: usize,
    what: &str,
    parts: &[&str],
) -> Result<[f64; N]> {
    if parts.len() != N {
        return Err(Error::parse(
            name,
            lineno,
            format!("{what} takes {N} numbers, got {}", parts.len()),
        ));
    }
    let mut out = [0.0f64; N];
    for (slot, raw) in out.iter_mut().zip(parts) {
        *slot = raw
            .parse()
            .map_err(|_| Error::parse(name, lineno, format!("bad number {raw:?}")))?;
        if !slot.is_finite() {
            return Err(Error::parse(
                name,
                lineno,
                format!("non-finite number {raw:?}"),
            ));
        }
    }
    Ok(out)
}

/// Parse the map format: `bounds`/`start`/`goal` exactly once each, any
/// number of `wall` lines, `#` comments and blank lines ignored.
pub fn parse_maze_map(name: &str, text: &str) -> Result<MazeMap> {
    let mut bounds: Option<Rect> = None;
    let mut start: Option<(f64, f64, f64)> = None;
    let mut goal: Option<(f64, f64, f64)> = None;
    let mut walls: Vec<Segment> = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let directive = parts.next().expect("non-empty line");
        let rest: Vec<&str> = parts.collect();
        match directive {
            "bounds" => {
                if bounds.is_some() {
                    return Err(Error::parse(name, lineno, "duplicate bounds"));
                }
                let [x_min, y_min, x_max, y_max] =
                    parse_floats::<4>(name, lineno, "bounds", &rest)?;
                let r = Rect::new(x_min, y_min, x_max, y_max);
                if !(r.width() > 0.0 && r.height() > 0.0) {
                    return Err(Error::parse(name, lineno, "degenerate bounds"));
                }
                bounds = Some(r);
            }
            "start" => {
                if start.is_some() {
                    return Err(Error::parse(name, lineno, "duplicate start"));
                }
                let [x, y, theta] = parse_floats::<3>(name, lineno, "start", &rest)?;
                start = Some((x, y, theta));
            }
            "goal" => {
                if goal.is_some() {
                    return Err(Error::parse(name, lineno, "duplicate goal"));
                }
                let [x, y, r] = parse_floats::<3>(name, lineno, "goal", &rest)?;
                if r <= 0.0 {
                    return Err(Error::parse(name, lineno, "goal radius must be positive"));
                }
                goal = Some((x, y, r));
            }
            "wall" => {
                let [x1, y1, x2, y2] = parse_floats::<4>(name, lineno, "wall", &rest)?;
                if x1 == x2 && y1 == y2 {
                    return Err(Error::parse(name, lineno, "zero-length wall"));
                }
                walls.push(Segment {
                    a: (x1, y1),
                    b: (x2, y2),
                });
            }
            other => {
                return Err(Error::parse(
                    name,
                    lineno,
                    format!("unknown directive {other:?}"),
                ));
            }
        }
    }
    let bounds = bounds.ok_or_else(|| Error::parse(name, 0, "missing bounds line"))?;
    let start = start.ok_or_else(|| Error::parse(name, 0, "missing start line"))?;
    let (gx, gy, gr) = goal.ok_or_else(|| Error::parse(name, 0, "missing goal line"))?;

    let strictly_inside = |x: f64, y: f64| {
        x > bounds.x_min && x < bounds.x_max && y > bounds.y_min && y < bounds.y_max
    };
    if !strictly_inside(start.0, start.1) {
        return Err(Error::parse(
            name,
            0,
            "start must be strictly inside bounds",
        ));
    }
    if !strictly_inside(gx, gy) {
        return Err(Error::parse(name, 0, "goal must be strictly inside bounds"));
    }
    for w in &walls {
        for (x, y) in [w.a, w.b] {
            if !bounds.contains(x, y) {
                return Err(Error::parse(
                    name,
                    0,
                    format!("wall endpoint ({x}, {y}) outside bounds"),
                ));
            }
        }
    }
    Ok(MazeMap::build(bounds, walls, start, (gx, gy), gr))
}

pub fn load_maze_map(path: &Path) -> Result<MazeMap> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_maze_map(&path.display().to_string(), &text)
}
