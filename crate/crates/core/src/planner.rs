//! RRT* over container poses with a tilt cap on every state and edge.

use std::collections::HashMap;

use log::debug;
use nalgebra::Vector3;
use rand::Rng;
use thiserror::Error;

use crate::container::{ContainerSpec, GeometryError};
use crate::sampler::{PoseSampler, SamplerConfig, SamplerMode};
use crate::se3::{
    edge_steps, in_collision, interpolate, max_tilt_along, rotation_angle, tilt_of, ContainerBody, Pose, Scene,
};

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("no path found after {iterations} iterations")]
    NoPathFound { iterations: usize },
    #[error("infeasible query: {0}")]
    InfeasibleQuery(String),
    #[error("invalid planner config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannerConfig {
    pub max_iterations: usize,
    /// Steering step in meters-equivalent.
    pub step: f64,
    /// Meters per radian of rotation in the distance metric.
    pub w_rot: f64,
    pub goal_bias: f64,
    /// Rewiring radius is `gamma * (ln n / n)^(1/6)`.
    pub gamma: f64,
    /// Largest capsule-point displacement between collision samples (m).
    pub edge_resolution: f64,
    /// Tilt cap in radians; `None` uses the container's quasi-static limit.
    pub tilt_cap: Option<f64>,
    /// Accept a cap above the container's limit.
    pub allow_cap_above_limit: bool,
    pub sampler: SamplerMode,
    pub seed: u64,
    /// Stop this many iterations after the first solution; `None` runs the
    /// whole budget.
    pub refine_iterations: Option<usize>,
}

pub const DEFAULT_STEP: f64 = 0.10;

/// Gamma giving a rewiring radius of three steps at one thousand nodes.
pub fn default_gamma(step: f64) -> f64 {
    3.0 * step / (1000f64.ln() / 1000.0).powf(1.0 / 6.0)
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            max_iterations: 5000,
            step: DEFAULT_STEP,
            w_rot: 0.3,
            goal_bias: 0.05,
            gamma: default_gamma(DEFAULT_STEP),
            edge_resolution: 0.01,
            tilt_cap: None,
            allow_cap_above_limit: false,
            sampler: SamplerMode::Informed,
            seed: 0,
            refine_iterations: None,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<(), PlanError> {
        let positive = [self.step, self.w_rot, self.gamma, self.edge_resolution];
        if self.max_iterations == 0 || positive.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(PlanError::InvalidConfig("iterations, step, w_rot, gamma and resolution must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.goal_bias) {
            return Err(PlanError::InvalidConfig(format!("goal bias {} outside [0, 1)", self.goal_bias)));
        }
        if let Some(cap) = self.tilt_cap {
            if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&cap) {
                return Err(PlanError::InvalidConfig(format!("tilt cap {cap} outside [0, pi/2]")));
            }
        }
        Ok(())
    }

    /// Resolves the effective tilt cap for `container`.
    pub fn effective_cap(&self, container: &ContainerSpec) -> Result<f64, PlanError> {
        let limit = container.theta_max()?;
        match self.tilt_cap {
            None => Ok(limit),
            Some(cap) if cap <= limit + 1e-12 || self.allow_cap_above_limit => Ok(cap),
            Some(cap) => Err(PlanError::InvalidConfig(format!(
                "tilt cap {:.2} deg exceeds container limit {:.2} deg",
                cap.to_degrees(),
                limit.to_degrees()
            ))),
        }
    }
}

/// Waypoints from start to goal with their metric cost.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub poses: Vec<Pose>,
    pub cost: f64,
}

impl Path {
    pub fn from_poses(poses: Vec<Pose>, w_rot: f64) -> Self {
        let cost = poses.windows(2).map(|w| distance(&w[0], &w[1], w_rot)).sum();
        Path { poses, cost }
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn max_tilt(&self) -> f64 {
        self.poses.windows(2).map(|w| max_tilt_along(&w[0], &w[1])).fold(
            self.poses.first().map(tilt_of).unwrap_or(0.0),
            f64::max,
        )
    }
}

/// `|dp| + w_rot * geodesic angle`.
pub fn distance(a: &Pose, b: &Pose, w_rot: f64) -> f64 {
    (b.position - a.position).norm() + w_rot * rotation_angle(&a.orientation, &b.orientation)
}

/// Edge feasibility shared by planning, pruning and the pipeline.
#[derive(Debug, Clone)]
pub struct EdgeChecker<'a> {
    pub scene: &'a Scene,
    /// Capsule grown by half the resolution so that sampled checks cover
    /// the continuous sweep between samples.
    pub padded: ContainerBody,
    pub resolution: f64,
    pub tilt_cap: f64,
}

impl<'a> EdgeChecker<'a> {
    pub fn new(scene: &'a Scene, body: ContainerBody, resolution: f64, tilt_cap: f64) -> Self {
        let padded = ContainerBody { radius: body.radius + 0.5 * resolution, ..body };
        EdgeChecker { scene, padded, resolution, tilt_cap }
    }

    pub fn state_valid(&self, p: &Pose) -> bool {
        tilt_of(p) <= self.tilt_cap && !in_collision(p, &self.padded, self.scene)
    }

    pub fn edge_valid(&self, a: &Pose, b: &Pose) -> bool {
        if max_tilt_along(a, b) > self.tilt_cap {
            return false;
        }
        let n = edge_steps(a, b, &self.padded, self.resolution);
        (0..=n).all(|k| !in_collision(&interpolate(a, b, k as f64 / n as f64), &self.padded, self.scene))
    }
}

#[derive(Debug, Clone)]
struct Node {
    pose: Pose,
    parent: Option<usize>,
    cost: f64,
    children: Vec<usize>,
}

/// Uniform hash grid over node positions. The metric is bounded below by
/// the position distance, which makes cell rings a valid pruning bound.
struct Grid {
    cell: f64,
    cells: HashMap<[i64; 3], Vec<usize>>,
    span: i64,
}

impl Grid {
    fn new(cell: f64, extent: Vector3<f64>) -> Self {
        let span = (extent.max() / cell).ceil() as i64 + 1;
        Grid { cell, cells: HashMap::new(), span }
    }

    fn key(&self, p: &Vector3<f64>) -> [i64; 3] {
        [(p.x / self.cell).floor() as i64, (p.y / self.cell).floor() as i64, (p.z / self.cell).floor() as i64]
    }

    fn insert(&mut self, p: &Vector3<f64>, id: usize) {
        let k = self.key(p);
        self.cells.entry(k).or_default().push(id);
    }

    fn visit_ring(&self, center: [i64; 3], ring: i64, mut f: impl FnMut(usize)) {
        for dx in -ring..=ring {
            for dy in -ring..=ring {
                for dz in -ring..=ring {
                    if dx.abs().max(dy.abs()).max(dz.abs()) != ring {
                        continue;
                    }
                    if let Some(ids) = self.cells.get(&[center[0] + dx, center[1] + dy, center[2] + dz]) {
                        ids.iter().copied().for_each(&mut f);
                    }
                }
            }
        }
    }

    fn nearest(&self, nodes: &[Node], q: &Pose, w_rot: f64) -> usize {
        let c = self.key(&q.position);
        let mut best = (usize::MAX, f64::INFINITY);
        for ring in 0..=self.span {
            self.visit_ring(c, ring, |id| {
                let d = distance(&nodes[id].pose, q, w_rot);
                if d < best.1 || (d == best.1 && id < best.0) {
                    best = (id, d);
                }
            });
            if best.0 != usize::MAX && best.1 <= ring as f64 * self.cell {
                break;
            }
        }
        best.0
    }

    fn within(&self, nodes: &[Node], q: &Pose, radius: f64, w_rot: f64) -> Vec<usize> {
        let c = self.key(&q.position);
        let reach = (radius / self.cell).ceil() as i64;
        let mut out = Vec::new();
        for ring in 0..=reach {
            self.visit_ring(c, ring, |id| {
                if distance(&nodes[id].pose, q, w_rot) <= radius {
                    out.push(id);
                }
            });
        }
        out.sort_unstable();
        out
    }
}

/// Planner run statistics.
#[derive(Debug, Clone, Default)]
pub struct PlanStats {
    pub iterations: usize,
    pub nodes: usize,
    /// Best goal cost after each iteration (infinite before the first solution).
    pub best_cost_history: Vec<f64>,
}

fn in_goal(p: &Pose, scene: &Scene) -> bool {
    (p.position - scene.goal.position).norm() <= scene.goal_position_tolerance
        && (tilt_of(p) - tilt_of(&scene.goal)).abs() <= scene.goal_tilt_tolerance
}

pub fn plan(scene: &Scene, container: &ContainerSpec, cfg: &PlannerConfig) -> Result<Path, PlanError> {
    plan_with_stats(scene, container, cfg).map(|(p, _)| p)
}

pub fn plan_with_stats(
    scene: &Scene,
    container: &ContainerSpec,
    cfg: &PlannerConfig,
) -> Result<(Path, PlanStats), PlanError> {
    cfg.validate()?;
    scene.validate().map_err(|e| PlanError::InfeasibleQuery(e.to_string()))?;
    let cap = cfg.effective_cap(container)?;
    let body = ContainerBody::from_container(container);
    let checker = EdgeChecker::new(scene, body, cfg.edge_resolution, cap);
    for (label, p) in [("start", &scene.start), ("goal", &scene.goal)] {
        if tilt_of(p) > cap {
            return Err(PlanError::InfeasibleQuery(format!(
                "{label} tilt {:.2} deg exceeds cap {:.2} deg",
                tilt_of(p).to_degrees(),
                cap.to_degrees()
            )));
        }
        if !checker.state_valid(p) {
            return Err(PlanError::InfeasibleQuery(format!("{label} pose in collision")));
        }
    }

    let mut sampler = PoseSampler::new(SamplerConfig {
        theta_max: cap,
        bounds: scene.bounds,
        mode: cfg.sampler,
        seed: cfg.seed,
    });
    let mut nodes = vec![Node { pose: scene.start, parent: None, cost: 0.0, children: Vec::new() }];
    let mut grid = Grid::new(cfg.step, scene.bounds.extent());
    grid.insert(&scene.start.position, 0);
    let mut goal_nodes: Vec<usize> = Vec::new();
    if in_goal(&scene.start, scene) {
        goal_nodes.push(0);
    }
    let mut stats = PlanStats::default();
    let mut first_solution: Option<usize> = None;

    for iter in 0..cfg.max_iterations {
        stats.iterations = iter + 1;
        let target = if sampler.rng().random::<f64>() < cfg.goal_bias { scene.goal } else { sampler.sample() };
        let near_id = grid.nearest(&nodes, &target, cfg.w_rot);
        let from = nodes[near_id].pose;
        let d = distance(&from, &target, cfg.w_rot);
        if d < 1e-12 {
            stats.best_cost_history.push(best_cost(&nodes, &goal_nodes));
            continue;
        }
        let new_pose = if d > cfg.step { interpolate(&from, &target, cfg.step / d) } else { target };

        if checker.state_valid(&new_pose) && checker.edge_valid(&from, &new_pose) {
            let n = nodes.len() as f64 + 1.0;
            let radius = cfg.gamma * (n.ln() / n).powf(1.0 / 6.0);
            let near = grid.within(&nodes, &new_pose, radius, cfg.w_rot);

            // Choose the cheapest valid parent.
            let mut parent = near_id;
            let mut parent_cost = nodes[near_id].cost + d.min(cfg.step);
            let mut candidates: Vec<(f64, usize)> = near
                .iter()
                .filter(|&&id| id != near_id)
                .map(|&id| (nodes[id].cost + distance(&nodes[id].pose, &new_pose, cfg.w_rot), id))
                .filter(|(c, _)| *c < parent_cost)
                .collect();
            candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (c, id) in candidates {
                if checker.edge_valid(&nodes[id].pose, &new_pose) {
                    parent = id;
                    parent_cost = c;
                    break;
                }
            }
            let new_id = nodes.len();
            nodes.push(Node { pose: new_pose, parent: Some(parent), cost: parent_cost, children: Vec::new() });
            nodes[parent].children.push(new_id);
            grid.insert(&new_pose.position, new_id);

            // Rewire neighbours through the new node.
            for &id in &near {
                if id == parent || id == 0 {
                    continue;
                }
                let via = parent_cost + distance(&new_pose, &nodes[id].pose, cfg.w_rot);
                if via + 1e-12 < nodes[id].cost && checker.edge_valid(&new_pose, &nodes[id].pose) {
                    reparent(&mut nodes, id, new_id, via);
                }
            }
            if in_goal(&new_pose, scene) {
                goal_nodes.push(new_id);
                if first_solution.is_none() {
                    first_solution = Some(iter);
                    debug!("first solution at iteration {iter}, cost {parent_cost:.4}");
                }
            }
        }
        stats.best_cost_history.push(best_cost(&nodes, &goal_nodes));
        if let (Some(first), Some(extra)) = (first_solution, cfg.refine_iterations) {
            if iter >= first + extra {
                break;
            }
        }
    }
    stats.nodes = nodes.len();

    let best = goal_nodes
        .iter()
        .copied()
        .min_by(|&a, &b| nodes[a].cost.partial_cmp(&nodes[b].cost).unwrap().then(a.cmp(&b)))
        .ok_or(PlanError::NoPathFound { iterations: stats.iterations })?;
    let mut poses = Vec::new();
    let mut cur = Some(best);
    while let Some(id) = cur {
        poses.push(nodes[id].pose);
        cur = nodes[id].parent;
    }
    poses.reverse();
    let last = *poses.last().unwrap();
    if last != scene.goal && checker.edge_valid(&last, &scene.goal) {
        poses.push(scene.goal);
    }
    if poses.len() == 1 {
        poses.push(poses[0]);
    }
    Ok((Path::from_poses(poses, cfg.w_rot), stats))
}

fn best_cost(nodes: &[Node], goal_nodes: &[usize]) -> f64 {
    goal_nodes.iter().map(|&id| nodes[id].cost).fold(f64::INFINITY, f64::min)
}

fn reparent(nodes: &mut [Node], id: usize, new_parent: usize, new_cost: f64) {
    if let Some(old) = nodes[id].parent {
        nodes[old].children.retain(|&c| c != id);
    }
    nodes[id].parent = Some(new_parent);
    nodes[new_parent].children.push(id);
    let delta = new_cost - nodes[id].cost;
    let mut stack = vec![id];
    while let Some(n) = stack.pop() {
        nodes[n].cost += delta;
        stack.extend(nodes[n].children.iter().copied());
    }
}

/// Greedy shortcutting: from each kept waypoint jump to the farthest later
/// waypoint reachable by a valid edge.
pub fn prune(path: &Path, scene: &Scene, container: &ContainerSpec, cfg: &PlannerConfig) -> Result<Path, PlanError> {
    if path.poses.len() <= 2 {
        return Ok(path.clone());
    }
    let cap = cfg.effective_cap(container)?;
    let checker = EdgeChecker::new(scene, ContainerBody::from_container(container), cfg.edge_resolution, cap);
    let poses = &path.poses;
    let mut kept = vec![poses[0]];
    let mut i = 0;
    while i < poses.len() - 1 {
        let mut j = poses.len() - 1;
        while j > i + 1 && !checker.edge_valid(&poses[i], &poses[j]) {
            j -= 1;
        }
        kept.push(poses[j]);
        i = j;
    }
    let pruned = Path::from_poses(kept, cfg.w_rot);
    if pruned.cost <= path.cost + 1e-12 {
        Ok(pruned)
    } else {
        Ok(path.clone())
    }
}
