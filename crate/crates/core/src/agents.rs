//! The human agent: role state machine, target decision, movement,
//! perception, obstacle handling, imitation, leader speed adjustment, and
//! exposure accounting.
//!
//! Role transitions are fixed: a seeker becomes a follower or a wanderer;
//! a follower falls back to seeker or arrives; a wanderer can follow, give
//! up, or arrive; movers arrive or give up; stayers only absorb agents that
//! gave up. Death happens at quake time only.
//!
//! On meeting a blocked street ahead on its own edge, an agent walks back
//! to the intersection behind it, records the blockage in its belief, and
//! replans (leaders and plain movers to the same target, wanderers to a new
//! random one). Blockages seen on other streets are recorded in place.
//! Repeated futile encounters hit the give-up threshold and the agent stops
//! for good.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::engine::Trace;
use crate::geometry::distance;
use crate::network::{
    plan_from_position, shortest_path, EdgeId, NodeId, Route,
};
use crate::scenario::ScenarioConfig;
use crate::world::{Building, BuildingId, Obstacle, ObstacleId, ObstacleLevel};
use crate::{Circle, GraphPosition, Point, SpatialIndex, StreamRng, StreetGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Stayer,
    Mover { leader: bool },
    Seeker,
    Follower { leader: u32 },
    Wanderer,
}

impl Role {
    pub fn is_leader(self) -> bool {
        matches!(self, Role::Mover { leader: true })
    }

    /// Roles that travel along a planned route.
    pub fn moves(self) -> bool {
        matches!(self, Role::Mover { .. } | Role::Follower { .. } | Role::Wanderer)
    }

    /// Roles subject to the give-up counter.
    fn counts_encounters(self) -> bool {
        matches!(self, Role::Mover { .. } | Role::Wanderer)
    }

    pub fn label(self) -> &'static str {
        match self {
            Role::Stayer => "stayer",
            Role::Mover { leader: true } => "mover_leader",
            Role::Mover { leader: false } => "mover",
            Role::Seeker => "seeker",
            Role::Follower { .. } => "follower",
            Role::Wanderer => "wanderer",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Alive,
    Dead,
    Arrived,
    GaveUp,
}

impl Status {
    pub fn is_terminal(self) -> bool {
        !matches!(self, Status::Alive)
    }

    pub fn label(self) -> &'static str {
        match self {
            Status::Alive => "alive",
            Status::Dead => "dead",
            Status::Arrived => "arrived",
            Status::GaveUp => "gave_up",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Place {
    InBuilding(BuildingId),
    OnStreet(GraphPosition),
}

/// Route being walked: the agent is moving toward `route.nodes[next]`.
/// `next == 0` means it is still on its pre-route edge, heading for the
/// route's entry node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActiveRoute {
    pub route: Route,
    pub next: usize,
}

/// Walk back to the intersection behind after meeting a blockage; `mark`
/// is recorded in the belief on arrival.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Backtrack {
    pub return_node: NodeId,
    pub mark: Vec<EdgeId>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HumanAgent {
    pub id: u32,
    /// Behaviour class 1..6 from the scenario distribution.
    pub class: u8,
    pub role: Role,
    pub status: Status,
    pub place: Place,
    pub target: Option<NodeId>,
    pub route: Option<ActiveRoute>,
    pub backtrack: Option<Backtrack>,
    pub base_speed: f64,
    /// Leader speed cap from the adjustment rule; equals `base_speed`
    /// otherwise.
    pub speed_cap: f64,
    pub belief: crate::network::BeliefOverlay,
    pub perception_radius: f64,
    pub encounter_count: u32,
    pub exposed_seconds: u32,
    pub exposed_now: bool,
    /// Last intersection crossed, or the spawn-projection node before any
    /// crossing. Followers aim here.
    pub last_node: Option<NodeId>,
    pub seeker_cycles: u32,
    pub leader_unseen_cycles: u32,
}

impl HumanAgent {
    pub fn new(
        id: u32,
        class: u8,
        place: Place,
        cfg: &ScenarioConfig,
        graph: &StreetGraph,
    ) -> HumanAgent {
        let role = match class {
            2 | 5 => Role::Stayer,
            6 => Role::Seeker,
            _ => Role::Mover { leader: false },
        };
        let last_node = match place {
            Place::OnStreet(gp) => Some(nearer_endpoint(graph, &gp)),
            Place::InBuilding(_) => None,
        };
        HumanAgent {
            id,
            class,
            role,
            status: Status::Alive,
            place,
            target: None,
            route: None,
            backtrack: None,
            base_speed: cfg.base_speed,
            speed_cap: cfg.base_speed,
            belief: Default::default(),
            perception_radius: cfg.perception_radius,
            encounter_count: 0,
            exposed_seconds: 0,
            exposed_now: false,
            last_node,
            seeker_cycles: 0,
            leader_unseen_cycles: 0,
        }
    }

    pub fn kill(&mut self) {
        self.status = Status::Dead;
        self.route = None;
        self.backtrack = None;
        self.exposed_now = false;
    }

    pub fn is_dead(&self) -> bool {
        self.status == Status::Dead
    }

    pub fn is_stayer(&self) -> bool {
        self.role == Role::Stayer
    }

    pub fn point(&self, graph: &StreetGraph, buildings: &[Building]) -> Point {
        match self.place {
            Place::InBuilding(b) => buildings[b.idx()].centroid,
            Place::OnStreet(gp) => gp.point(graph),
        }
    }
}

/// Endpoint of the position's edge closest along the street; ties go to the
/// smaller node id.
fn nearer_endpoint(graph: &StreetGraph, gp: &GraphPosition) -> NodeId {
    let origin = gp.origin(graph);
    let heading = gp.heading;
    let remaining = gp.remaining(graph);
    if gp.offset < remaining {
        origin
    } else if remaining < gp.offset {
        heading
    } else {
        origin.min(heading)
    }
}

/// Read-only world surroundings shared by every agent operation.
pub struct WorldView<'a> {
    pub graph: &'a StreetGraph,
    pub buildings: &'a [Building],
    pub obstacles: &'a [Obstacle],
    pub obstacle_index: &'a SpatialIndex,
    /// Per obstacle: the edges its zone overlaps (non-empty for big ones).
    pub blocked_edges_of: &'a [Vec<EdgeId>],
    /// Nodes that count as safe places (greens, exits).
    pub safe_nodes: &'a std::collections::BTreeSet<NodeId>,
    pub cfg: &'a ScenarioConfig,
}

impl<'a> WorldView<'a> {
    pub fn in_medium_zone(&self, p: Point) -> bool {
        self.obstacle_index.query_point(p).iter().any(|&i| {
            let o = &self.obstacles[i as usize];
            o.level == ObstacleLevel::Medium && o.zone.contains(p)
        })
    }

    pub fn in_exposure_zone(&self, p: Point) -> bool {
        self.obstacle_index.query_point(p).iter().any(|&i| {
            let o = &self.obstacles[i as usize];
            matches!(o.level, ObstacleLevel::Medium | ObstacleLevel::Small)
                && o.zone.contains(p)
        })
    }
}

/// Instantaneous speed: the leader cap, slowed down inside medium zones.
pub fn effective_speed(agent: &HumanAgent, view: &WorldView) -> f64 {
    let base = agent.base_speed.min(agent.speed_cap);
    if view.in_medium_zone(agent.point(view.graph, view.buildings)) {
        base * view.cfg.medium_slowdown_factor
    } else {
        base
    }
}

/// Speed adjustment rule: every tenth cycle a leader matches its slowest
/// current follower, never exceeding its own base speed.
pub fn leader_adjust_speed(
    base_speed: f64,
    follower_speeds: impl IntoIterator<Item = f64>,
) -> f64 {
    follower_speeds
        .into_iter()
        .fold(base_speed, |acc, s| acc.min(s))
}

/// What one agent can see this cycle, from the previous cycle's published
/// positions.
#[derive(Debug, Clone, Default)]
pub struct Percept {
    pub visible_obstacles: Vec<ObstacleId>,
    pub visible_leaders: Vec<u32>,
    pub blocked_edges_seen: Vec<EdgeId>,
}

impl Percept {
    pub fn clear(&mut self) {
        self.visible_obstacles.clear();
        self.visible_leaders.clear();
        self.blocked_edges_seen.clear();
    }
}

/// Published state of one agent, snapshotted at the start of the cycle.
#[derive(Debug, Clone, Copy)]
pub struct AgentView {
    pub point: Point,
    pub status: Status,
    pub is_leader: bool,
    pub last_node: Option<NodeId>,
}

/// Fills `out` with everything inside the agent's perception radius:
/// obstacles whose zone reaches the circle, living leaders, and blocked
/// edges overlapping both a visible big zone and the circle itself.
pub fn perceive(
    agent: &HumanAgent,
    view: &WorldView,
    snapshots: &[AgentView],
    agent_index: Option<&SpatialIndex>,
    out: &mut Percept,
) {
    out.clear();
    let p = agent.point(view.graph, view.buildings);
    let radius = agent.perception_radius;
    let circle = Circle { center: p, radius };

    for id in view.obstacle_index.query_circle(&circle) {
        let o = &view.obstacles[id as usize];
        if distance(o.zone.center, p) <= radius + o.zone.radius {
            out.visible_obstacles.push(o.id);
        }
    }
    if let Some(index) = agent_index {
        for id in index.query_circle(&circle) {
            if id == agent.id {
                continue;
            }
            let snap = &snapshots[id as usize];
            if snap.status == Status::Alive
                && snap.is_leader
                && snap.last_node.is_some()
                && distance(snap.point, p) <= radius
            {
                out.visible_leaders.push(id);
            }
        }
    }
    for &oid in &out.visible_obstacles {
        let o = &view.obstacles[oid.idx()];
        if o.level != ObstacleLevel::Big {
            continue;
        }
        for &e in &view.blocked_edges_of[oid.idx()] {
            if view.graph.edge(e).geometry.intersects_circle(&circle) {
                out.blocked_edges_seen.push(e);
            }
        }
    }
    out.blocked_edges_seen.sort_unstable();
    out.blocked_edges_seen.dedup();
}

/// Target decision, once per agent before cycle 1.
///
/// `dist_safe`/`nearest_safe` give, per node, the belief-default distance to
/// the closest safe place and which safe node that is.
pub fn decide_target(
    agent: &mut HumanAgent,
    view: &WorldView,
    dist_safe: &[f64],
    nearest_safe: &[Option<NodeId>],
    behaviour_rng: &mut StreamRng,
) {
    if agent.status.is_terminal() {
        return;
    }
    let n_nodes = view.graph.nodes().len() as u32;
    match agent.class {
        1 => {
            // Carries on with its original errand, wherever that was going.
            agent.role = Role::Mover { leader: false };
            agent.target = Some(NodeId(behaviour_rng.gen_range(0..n_nodes)));
        }
        2 | 5 => {
            agent.role = Role::Stayer;
            agent.target = None;
        }
        3 => {
            let leader = behaviour_rng.gen::<f64>() < view.cfg.leader_fraction;
            agent.role = Role::Mover { leader };
            let entry = entry_node_for(agent, view, dist_safe);
            agent.target = nearest_safe[entry.idx()];
        }
        4 => {
            agent.role = Role::Mover { leader: false };
            let pick = behaviour_rng.gen_range(0..view.buildings.len());
            agent.target = Some(view.buildings[pick].nearest_node);
        }
        _ => {
            agent.role = Role::Seeker;
            agent.target = None;
        }
    }
}

/// Cheapest edge endpoint to reach the nearest safe place from the agent's
/// current spot (building occupants are measured from their egress point).
fn entry_node_for(agent: &HumanAgent, view: &WorldView, dist_safe: &[f64]) -> NodeId {
    let gp = match agent.place {
        Place::OnStreet(gp) => gp,
        Place::InBuilding(b) => view.buildings[b.idx()].egress,
    };
    let origin = gp.origin(view.graph);
    let heading = gp.heading;
    let via_origin = gp.offset + dist_safe[origin.idx()];
    let via_heading = gp.remaining(view.graph) + dist_safe[heading.idx()];
    if via_origin < via_heading {
        origin
    } else if via_heading < via_origin {
        heading
    } else {
        origin.min(heading)
    }
}

/// Moves an indoor agent onto the street at its building's egress point.
pub fn ensure_on_street(agent: &mut HumanAgent, view: &WorldView) {
    if let Place::InBuilding(b) = agent.place {
        let gp = view.buildings[b.idx()].egress;
        agent.place = Place::OnStreet(gp);
        agent.last_node = Some(nearer_endpoint(view.graph, &gp));
    }
}

fn record_plan(
    trace: &mut Option<&mut Trace>,
    cycle: u32,
    agent: &HumanAgent,
    target: NodeId,
    cost: f64,
    route: &Route,
) {
    if let Some(t) = trace.as_deref_mut() {
        t.plans.push(crate::engine::PlanRecord {
            cycle,
            agent: agent.id,
            target,
            cost,
            edges: route.edges.clone(),
            blocked_at_plan: agent.belief.blocked_edges().collect(),
        });
    }
}

/// Plans a route from the agent's exact position to its target and installs
/// it. Clears the route when the target is topologically unreachable.
pub fn plan_to_target(
    agent: &mut HumanAgent,
    view: &WorldView,
    trace: &mut Option<&mut Trace>,
    cycle: u32,
) {
    let target = match agent.target {
        Some(t) => t,
        None => return,
    };
    ensure_on_street(agent, view);
    let gp = match agent.place {
        Place::OnStreet(gp) => gp,
        Place::InBuilding(_) => unreachable!(),
    };
    // At an intersection, plan from the node itself.
    if gp.offset == 0.0 {
        let node = gp.origin(view.graph);
        plan_at_node(agent, node, target, view, trace, cycle);
        return;
    }
    if gp.remaining(view.graph) == 0.0 {
        let node = gp.heading;
        plan_at_node(agent, node, target, view, trace, cycle);
        return;
    }
    match plan_from_position(view.graph, &agent.belief, &gp, target).unwrap() {
        None => agent.route = None,
        Some((fixed, route)) => {
            let walk_in = if fixed.heading == gp.heading {
                gp.remaining(view.graph)
            } else {
                gp.offset
            };
            let cost = walk_in + route.cost(view.graph, &agent.belief);
            record_plan(trace, cycle, agent, target, cost, &route);
            agent.place = Place::OnStreet(fixed);
            agent.route = Some(ActiveRoute { route, next: 0 });
        }
    }
}

/// Plans from a node the agent is standing on.
fn plan_at_node(
    agent: &mut HumanAgent,
    node: NodeId,
    target: NodeId,
    view: &WorldView,
    trace: &mut Option<&mut Trace>,
    cycle: u32,
) {
    match shortest_path(view.graph, &agent.belief, node, target).unwrap() {
        None => agent.route = None,
        Some(route) if route.is_empty() => {
            record_plan(trace, cycle, agent, target, 0.0, &route);
            if matches!(agent.role, Role::Follower { .. }) && !view.safe_nodes.contains(&node)
            {
                agent.route = None;
            } else {
                arrive(agent);
            }
        }
        Some(route) => {
            let cost = route.cost(view.graph, &agent.belief);
            record_plan(trace, cycle, agent, target, cost, &route);
            agent.place = Place::OnStreet(GraphPosition::at_node(
                view.graph,
                route.edges[0],
                node,
            ));
            agent.route = Some(ActiveRoute { route, next: 1 });
        }
    }
}

fn arrive(agent: &mut HumanAgent) {
    agent.status = Status::Arrived;
    agent.route = None;
    agent.backtrack = None;
    agent.exposed_now = false;
}

/// Imitation step for seekers, wanderers and followers.
pub fn seek_and_follow(
    agent: &mut HumanAgent,
    percept: &Percept,
    snapshots: &[AgentView],
    view: &WorldView,
    imitation_rng: &mut StreamRng,
    trace: &mut Option<&mut Trace>,
    cycle: u32,
) {
    if agent.status != Status::Alive {
        return;
    }
    match agent.role {
        Role::Seeker | Role::Wanderer => {
            // Busy walking back from a blockage; look again afterwards.
            if agent.backtrack.is_some() {
                return;
            }
            if !percept.visible_leaders.is_empty() {
                let pick = percept.visible_leaders
                    [imitation_rng.gen_range(0..percept.visible_leaders.len())];
                agent.role = Role::Follower { leader: pick };
                agent.leader_unseen_cycles = 0;
                agent.target = snapshots[pick as usize].last_node;
                plan_to_target(agent, view, trace, cycle);
            } else if agent.role == Role::Seeker {
                agent.seeker_cycles += 1;
                if agent.seeker_cycles >= view.cfg.seeker_patience {
                    agent.role = Role::Wanderer;
                    let n = view.graph.nodes().len() as u32;
                    agent.target = Some(NodeId(imitation_rng.gen_range(0..n)));
                    plan_to_target(agent, view, trace, cycle);
                }
            }
        }
        Role::Follower { leader } => {
            let snap = &snapshots[leader as usize];
            if snap.status != Status::Alive || !snap.is_leader {
                revert_to_seeker(agent);
                return;
            }
            if percept.visible_leaders.contains(&leader) {
                agent.leader_unseen_cycles = 0;
            } else {
                agent.leader_unseen_cycles += 1;
                if agent.leader_unseen_cycles >= view.cfg.follower_loss_cycles {
                    revert_to_seeker(agent);
                    return;
                }
            }
            // Track the leader's last crossed intersection.
            if agent.target != snap.last_node {
                agent.target = snap.last_node;
                if agent.backtrack.is_none() {
                    plan_to_target(agent, view, trace, cycle);
                }
            }
        }
        _ => {}
    }
}

fn revert_to_seeker(agent: &mut HumanAgent) {
    agent.role = Role::Seeker;
    agent.target = None;
    agent.route = None;
    agent.backtrack = None;
    agent.seeker_cycles = 0;
    agent.leader_unseen_cycles = 0;
}

/// Reaction to blocked streets in the percept.
///
/// A blockage on the agent's own edge sends it back to the previous
/// intersection (belief update, encounter count and replan happen there).
/// A blockage elsewhere is recorded immediately and triggers a replan only
/// when it sits on the remaining route.
pub fn handle_obstacle_ahead(
    agent: &mut HumanAgent,
    percept: &Percept,
    view: &WorldView,
    imitation_rng: &mut StreamRng,
    trace: &mut Option<&mut Trace>,
    cycle: u32,
) {
    if agent.status != Status::Alive || !agent.role.moves() || agent.backtrack.is_some() {
        return;
    }
    if percept.blocked_edges_seen.is_empty() || agent.route.is_none() {
        return;
    }
    let gp = match agent.place {
        Place::OnStreet(gp) => gp,
        Place::InBuilding(_) => return,
    };
    let current = gp.edge;
    let mut on_current = false;
    let mut on_remaining = false;
    {
        let ar = agent.route.as_ref().unwrap();
        for &e in &percept.blocked_edges_seen {
            if e == current {
                on_current = true;
            } else {
                agent.belief.mark_blocked(e);
                if ar.route.edges[ar.next.min(ar.route.edges.len())..].contains(&e) {
                    on_remaining = true;
                }
            }
        }
    }
    if on_current {
        let return_node = gp.origin(view.graph);
        agent.route = None;
        if gp.offset == 0.0 {
            // Already at the intersection: no walk needed.
            complete_encounter(agent, return_node, vec![current], view, imitation_rng, trace, cycle);
        } else {
            agent.place = Place::OnStreet(gp.reversed(view.graph));
            agent.backtrack = Some(Backtrack {
                return_node,
                mark: vec![current],
            });
        }
    } else if on_remaining {
        plan_to_target(agent, view, trace, cycle);
    }
}

/// Arrival at the fall-back intersection: record the blockage, count the
/// encounter, give up at the threshold, otherwise replan by role.
fn complete_encounter(
    agent: &mut HumanAgent,
    node: NodeId,
    mark: Vec<EdgeId>,
    view: &WorldView,
    imitation_rng: &mut StreamRng,
    trace: &mut Option<&mut Trace>,
    cycle: u32,
) {
    for e in mark {
        agent.belief.mark_blocked(e);
    }
    if agent.role.counts_encounters() {
        agent.encounter_count = (agent.encounter_count + 1).min(view.cfg.give_up_threshold);
        if agent.encounter_count >= view.cfg.give_up_threshold {
            agent.status = Status::GaveUp;
            agent.role = Role::Stayer;
            agent.route = None;
            agent.backtrack = None;
            return;
        }
    }
    if agent.role == Role::Wanderer {
        let n = view.graph.nodes().len() as u32;
        agent.target = Some(NodeId(imitation_rng.gen_range(0..n)));
    }
    if let Some(target) = agent.target {
        plan_at_node(agent, node, target, view, trace, cycle);
    }
}

/// One second of movement along the current route (or back along the
/// current edge during a backtrack). Crossed intersections are logged and
/// reaching the target ends the journey; overshoot past it is discarded.
pub fn step_move(
    agent: &mut HumanAgent,
    view: &WorldView,
    imitation_rng: &mut StreamRng,
    trace: &mut Option<&mut Trace>,
    cycle: u32,
) {
    if agent.status != Status::Alive || !agent.role.moves() {
        return;
    }
    let mut gp = match agent.place {
        Place::OnStreet(gp) => gp,
        Place::InBuilding(_) => return,
    };
    if agent.backtrack.is_none() && agent.route.is_none() {
        return;
    }
    let mut dist = effective_speed(agent, view);

    if agent.backtrack.is_some() {
        let remaining = gp.remaining(view.graph);
        if dist < remaining {
            gp.offset += dist;
            agent.place = Place::OnStreet(gp);
        } else {
            let bt = agent.backtrack.take().unwrap();
            gp.offset = view.graph.edge(gp.edge).length;
            agent.place = Place::OnStreet(gp);
            agent.last_node = Some(bt.return_node);
            if let Some(t) = trace.as_deref_mut() {
                t.node_visits.push((cycle, agent.id, bt.return_node));
            }
            complete_encounter(agent, bt.return_node, bt.mark, view, imitation_rng, trace, cycle);
        }
        return;
    }

    loop {
        let remaining = gp.remaining(view.graph);
        if dist < remaining {
            gp.offset += dist;
            agent.place = Place::OnStreet(gp);
            break;
        }
        dist -= remaining;
        let node = gp.heading;
        gp.offset = view.graph.edge(gp.edge).length;
        agent.place = Place::OnStreet(gp);
        agent.last_node = Some(node);
        if let Some(t) = trace.as_deref_mut() {
            t.node_visits.push((cycle, agent.id, node));
        }
        let ar = agent.route.as_mut().unwrap();
        debug_assert_eq!(node, ar.route.nodes[ar.next]);
        if ar.next + 1 == ar.route.nodes.len() {
            if matches!(agent.role, Role::Follower { .. })
                && !view.safe_nodes.contains(&node)
            {
                // Caught up with the leader's trail: wait here for its
                // next crossing.
                agent.route = None;
            } else {
                arrive(agent);
            }
            break;
        }
        let edge = ar.route.edges[ar.next];
        ar.next += 1;
        gp = GraphPosition::at_node(view.graph, edge, node);
        agent.place = Place::OnStreet(gp);
    }
}

/// Exposure accounting: one second inside any medium or small zone.
pub fn accrue_exposure(agent: &mut HumanAgent, view: &WorldView) {
    if !matches!(agent.status, Status::Alive | Status::GaveUp) {
        return;
    }
    let exposed = view.in_exposure_zone(agent.point(view.graph, view.buildings));
    agent.exposed_now = exposed;
    if exposed {
        agent.exposed_seconds += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{build_graph, BeliefOverlay};
    use crate::world::{DamageLevel, ObstacleLevel};
    use crate::{Polygon, Polyline};
    use rand::SeedableRng;

    fn p(x: f64, y: f64) -> Point {
        Point::new(x, y)
    }

    fn chain_graph() -> StreetGraph {
        build_graph(
            &[
                Polyline::new(vec![p(0.0, 0.0), p(100.0, 0.0)]).unwrap(),
                Polyline::new(vec![p(100.0, 0.0), p(200.0, 0.0)]).unwrap(),
            ],
            0.5,
        )
        .unwrap()
    }

    struct Fixture {
        graph: StreetGraph,
        buildings: Vec<Building>,
        obstacles: Vec<Obstacle>,
        obstacle_index: SpatialIndex,
        blocked_edges_of: Vec<Vec<EdgeId>>,
        safe_nodes: std::collections::BTreeSet<NodeId>,
        cfg: ScenarioConfig,
    }

    impl Fixture {
        fn new(graph: StreetGraph, obstacles: Vec<Obstacle>) -> Fixture {
            let mut obstacle_index = SpatialIndex::new(20.0);
            let mut blocked_edges_of = Vec::new();
            for o in &obstacles {
                obstacle_index.insert_circle(o.id.0, &o.zone);
                if o.level == ObstacleLevel::Big {
                    blocked_edges_of.push(crate::world::edges_overlapping_circle(
                        &graph, &o.zone,
                    ));
                } else {
                    blocked_edges_of.push(Vec::new());
                }
            }
            Fixture {
                graph,
                buildings: Vec::new(),
                obstacles,
                obstacle_index,
                blocked_edges_of,
                safe_nodes: Default::default(),
                cfg: ScenarioConfig::default(),
            }
        }

        fn view(&self) -> WorldView<'_> {
            WorldView {
                graph: &self.graph,
                buildings: &self.buildings,
                obstacles: &self.obstacles,
                obstacle_index: &self.obstacle_index,
                blocked_edges_of: &self.blocked_edges_of,
                safe_nodes: &self.safe_nodes,
                cfg: &self.cfg,
            }
        }

        fn walker(&self, offset: f64, target: NodeId) -> HumanAgent {
            let mut agent = HumanAgent::new(
                0,
                1,
                Place::OnStreet(GraphPosition {
                    edge: EdgeId(0),
                    offset,
                    heading: NodeId(1),
                }),
                &self.cfg,
                &self.graph,
            );
            agent.target = Some(target);
            let mut trace = None;
            plan_to_target(&mut agent, &self.view(), &mut trace, 0);
            agent
        }
    }

    fn medium_obstacle(center: Point, radius: f64) -> Obstacle {
        Obstacle {
            id: crate::world::ObstacleId(0),
            level: ObstacleLevel::Medium,
            zone: Circle::new(center, radius).unwrap(),
            source_building: BuildingId(0),
        }
    }

    fn big_obstacle(id: u32, center: Point, radius: f64) -> Obstacle {
        Obstacle {
            id: crate::world::ObstacleId(id),
            level: ObstacleLevel::Big,
            zone: Circle::new(center, radius).unwrap(),
            source_building: BuildingId(0),
        }
    }

    #[test]
    fn step_advances_base_speed_on_open_street() {
        let fx = Fixture::new(chain_graph(), Vec::new());
        let mut agent = fx.walker(0.0, NodeId(2));
        let mut rng = StreamRng::seed_from_u64(0);
        let mut trace = None;
        step_move(&mut agent, &fx.view(), &mut rng, &mut trace, 1);
        match agent.place {
            Place::OnStreet(gp) => assert!((gp.offset - 1.3).abs() < 1e-12),
            _ => panic!(),
        }
    }

    #[test]
    fn step_is_slowed_inside_medium_zone() {
        let fx = Fixture::new(
            chain_graph(),
            vec![medium_obstacle(p(10.0, 0.0), 8.0)],
        );
        let mut agent = fx.walker(10.0, NodeId(2));
        let mut rng = StreamRng::seed_from_u64(0);
        let mut trace = None;
        step_move(&mut agent, &fx.view(), &mut rng, &mut trace, 1);
        match agent.place {
            Place::OnStreet(gp) => assert!((gp.offset - 10.65).abs() < 1e-12),
            _ => panic!(),
        }
    }

    #[test]
    fn arrival_discards_overshoot() {
        let fx = Fixture::new(chain_graph(), Vec::new());
        let mut agent = fx.walker(199.5 - 100.0, NodeId(2));
        // Start on edge 1, half a meter from the target.
        agent.place = Place::OnStreet(GraphPosition {
            edge: EdgeId(1),
            offset: 99.5,
            heading: NodeId(2),
        });
        agent.route = Some(ActiveRoute {
            route: Route {
                nodes: vec![NodeId(2)],
                edges: vec![],
            },
            next: 0,
        });
        let mut rng = StreamRng::seed_from_u64(0);
        let mut trace = None;
        step_move(&mut agent, &fx.view(), &mut rng, &mut trace, 1);
        assert_eq!(agent.status, Status::Arrived);
        let end = agent.point(&fx.graph, &fx.buildings);
        assert_eq!(end, p(200.0, 0.0));
    }

    #[test]
    fn perceive_is_empty_without_entities() {
        let fx = Fixture::new(chain_graph(), Vec::new());
        let agent = fx.walker(50.0, NodeId(2));
        let mut percept = Percept::default();
        perceive(&agent, &fx.view(), &[], None, &mut percept);
        assert!(percept.visible_obstacles.is_empty());
        assert!(percept.visible_leaders.is_empty());
        assert!(percept.blocked_edges_seen.is_empty());
    }

    #[test]
    fn perceive_boundary_is_radius_plus_zone() {
        // Agent at x=50; zone radius 5; perception 20. Visible iff the
        // center is within 25 m.
        let near = Fixture::new(chain_graph(), vec![big_obstacle(0, p(74.9, 0.0), 5.0)]);
        let agent = near.walker(50.0, NodeId(2));
        let mut percept = Percept::default();
        perceive(&agent, &near.view(), &[], None, &mut percept);
        assert_eq!(percept.visible_obstacles.len(), 1);

        let far = Fixture::new(chain_graph(), vec![big_obstacle(0, p(75.1, 0.0), 5.0)]);
        let agent = far.walker(50.0, NodeId(2));
        perceive(&agent, &far.view(), &[], None, &mut percept);
        assert!(percept.visible_obstacles.is_empty());
    }

    #[test]
    fn perceive_matches_exhaustive_scan() {
        use rand::Rng;
        let mut rng = StreamRng::seed_from_u64(41);
        let mut obstacles = Vec::new();
        for i in 0..40 {
            obstacles.push(Obstacle {
                id: crate::world::ObstacleId(i),
                level: if i % 2 == 0 {
                    ObstacleLevel::Medium
                } else {
                    ObstacleLevel::Small
                },
                zone: Circle::new(
                    p(rng.gen_range(0.0..200.0), rng.gen_range(-50.0..50.0)),
                    rng.gen_range(1.0..10.0),
                )
                .unwrap(),
                source_building: BuildingId(0),
            });
        }
        let fx = Fixture::new(chain_graph(), obstacles);
        for _ in 0..50 {
            let agent = fx.walker(rng.gen_range(0.0..100.0), NodeId(2));
            let mut percept = Percept::default();
            perceive(&agent, &fx.view(), &[], None, &mut percept);
            let pt = agent.point(&fx.graph, &fx.buildings);
            let brute: Vec<crate::world::ObstacleId> = fx
                .obstacles
                .iter()
                .filter(|o| distance(o.zone.center, pt) <= 20.0 + o.zone.radius)
                .map(|o| o.id)
                .collect();
            assert_eq!(percept.visible_obstacles, brute);
        }
    }

    #[test]
    fn blockage_on_another_street_updates_belief_without_moving() {
        // Square with a spur; agent walks 0->1 on the bottom, sees a blocked
        // edge on the top street which is not on its route.
        let graph = build_graph(
            &[
                Polyline::new(vec![p(0.0, 0.0), p(100.0, 0.0)]).unwrap(),
                Polyline::new(vec![p(0.0, 15.0), p(100.0, 15.0)]).unwrap(),
            ],
            0.5,
        )
        .unwrap();
        let fx = Fixture::new(graph, vec![big_obstacle(0, p(50.0, 15.0), 5.0)]);
        let mut agent = fx.walker(45.0, NodeId(1));
        let before = agent.place;
        let mut percept = Percept::default();
        perceive(&agent, &fx.view(), &[], None, &mut percept);
        assert_eq!(percept.blocked_edges_seen, vec![EdgeId(1)]);
        let mut rng = StreamRng::seed_from_u64(0);
        let mut trace = None;
        handle_obstacle_ahead(&mut agent, &percept, &fx.view(), &mut rng, &mut trace, 1);
        assert!(agent.belief.is_blocked(EdgeId(1)));
        assert_eq!(agent.place, before);
        assert!(agent.backtrack.is_none());
        assert_eq!(agent.encounter_count, 0);
    }

    #[test]
    fn leader_adjust_examples() {
        assert_eq!(leader_adjust_speed(1.3, []), 1.3);
        assert_eq!(leader_adjust_speed(1.3, [1.3, 0.65]), 0.65);
        assert_eq!(leader_adjust_speed(1.3, [2.0]), 1.3);
    }

    #[test]
    fn exposure_accumulates_only_inside_zones() {
        let fx = Fixture::new(
            chain_graph(),
            vec![medium_obstacle(p(10.0, 0.0), 5.0)],
        );
        let mut outside = fx.walker(50.0, NodeId(2));
        accrue_exposure(&mut outside, &fx.view());
        assert!(!outside.exposed_now);
        assert_eq!(outside.exposed_seconds, 0);

        let mut inside = fx.walker(10.0, NodeId(2));
        inside.route = None;
        for _ in 0..30 {
            accrue_exposure(&mut inside, &fx.view());
        }
        assert!(inside.exposed_now);
        assert_eq!(inside.exposed_seconds, 30);
    }

    #[test]
    fn decide_target_matches_classes() {
        let graph = chain_graph();
        let cfg = ScenarioConfig::default();
        let spec = crate::district::DistrictBuilding {
            footprint: Polygon::new(vec![
                p(40.0, 10.0),
                p(60.0, 10.0),
                p(60.0, 30.0),
                p(40.0, 30.0),
            ])
            .unwrap(),
            storeys: 1,
            apartments: 1,
        };
        let buildings = vec![Building::new(BuildingId(0), &spec, &graph)];
        let fx = Fixture {
            graph,
            buildings,
            obstacles: Vec::new(),
            obstacle_index: SpatialIndex::new(20.0),
            blocked_edges_of: Vec::new(),
            safe_nodes: Default::default(),
            cfg,
        };
        let view = fx.view();
        // Safe place at node 2.
        let overlay = BeliefOverlay::default();
        let dist = crate::network::distances_from(&fx.graph, &overlay, NodeId(2));
        let nearest: Vec<Option<NodeId>> = vec![Some(NodeId(2)); 3];
        let mut rng = StreamRng::seed_from_u64(9);

        for class in [1u8, 3, 4] {
            let mut agent = HumanAgent::new(
                0,
                class,
                Place::OnStreet(GraphPosition {
                    edge: EdgeId(0),
                    offset: 10.0,
                    heading: NodeId(1),
                }),
                &fx.cfg,
                &fx.graph,
            );
            decide_target(&mut agent, &view, &dist, &nearest, &mut rng);
            assert!(matches!(agent.role, Role::Mover { .. }), "class {class}");
            assert!(agent.target.is_some());
        }
        let mut stayer = HumanAgent::new(
            0,
            2,
            Place::InBuilding(BuildingId(0)),
            &fx.cfg,
            &fx.graph,
        );
        decide_target(&mut stayer, &view, &dist, &nearest, &mut rng);
        assert_eq!(stayer.role, Role::Stayer);
        assert_eq!(stayer.target, None);

        // Class 3 next to the safe node targets it.
        let mut mover = HumanAgent::new(
            0,
            3,
            Place::OnStreet(GraphPosition {
                edge: EdgeId(1),
                offset: 80.0,
                heading: NodeId(2),
            }),
            &fx.cfg,
            &fx.graph,
        );
        decide_target(&mut mover, &view, &dist, &nearest, &mut rng);
        assert_eq!(mover.target, Some(NodeId(2)));

        let mut seeker = HumanAgent::new(0, 6, Place::InBuilding(BuildingId(0)), &fx.cfg, &fx.graph);
        decide_target(&mut seeker, &view, &dist, &nearest, &mut rng);
        assert_eq!(seeker.role, Role::Seeker);
        assert_eq!(seeker.target, None);

        let _ = DamageLevel::None;
    }
}
