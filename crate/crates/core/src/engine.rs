//! Deterministic discrete-time scheduler: quake application, per-cycle
//! update ordering, termination, and metrics collection.
//!
//! Initialization phases: build graph → populate → assign damage →
//! derive obstacles → block streets → initial casualties → decide targets →
//! compute routes. Each cycle then runs fixed sub-phases over agents in id
//! order: (1) publish position snapshot, (2) perceive, (3) imitation,
//! (4) obstacle handling, (5) leader speed adjustment every 10th cycle,
//! (6) movement, (7) exposure, (8) metrics frame.
//!
//! A run is strictly single-threaded; runs with different seeds or
//! scenarios share nothing and may execute in parallel.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, BTreeMap, BTreeSet};

use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{
    self, AgentView, HumanAgent, Percept, Place, Role, Status, WorldView,
};
use crate::district::District;
use crate::network::{
    build_graph, plan_with_distances, BeliefOverlay, EdgeId, NodeId,
};
use crate::scenario::ScenarioConfig;
use crate::world::{
    self, block_streets, collect_safe_places, Building, BuildingId, GreenSpace, ObstacleId,
    ObstacleLevel, Quake, SimClock, WorldState,
};
use crate::{SpatialIndex, StreamRng};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("initialization failed at {phase}: {message}")]
    Init { phase: &'static str, message: String },
}

fn init_err(phase: &'static str, err: impl std::fmt::Display) -> EngineError {
    EngineError::Init {
        phase,
        message: err.to_string(),
    }
}

/// Named substreams of the run seed. Each stream is an independent ChaCha
/// stream of the same 64-bit seed, so consumption in one never shifts
/// another.
#[derive(Debug, Clone)]
pub struct SeededRng {
    pub damage: StreamRng,
    pub casualties: StreamRng,
    pub population: StreamRng,
    pub behaviour: StreamRng,
    pub imitation: StreamRng,
}

impl SeededRng {
    pub fn new(seed: u64) -> SeededRng {
        let stream = |n: u64| {
            let mut rng = StreamRng::seed_from_u64(seed);
            rng.set_stream(n);
            rng
        };
        SeededRng {
            damage: stream(1),
            casualties: stream(2),
            population: stream(3),
            behaviour: stream(4),
            imitation: stream(5),
        }
    }
}

/// Per-cycle population counts. The nine status/role buckets partition the
/// population exactly; `leaders`, `exposed_now` and `outside_city` are
/// cross-cutting counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricsFrame {
    pub cycle: u32,
    pub moving: u32,
    pub staying: u32,
    pub seeking: u32,
    pub following: u32,
    pub wandering: u32,
    pub leaders: u32,
    pub dead: u32,
    pub arrived_safe: u32,
    pub arrived_other: u32,
    pub gave_up: u32,
    pub exposed_now: u32,
    pub outside_city: u32,
}

pub const FRAME_COLUMNS: [&str; 13] = [
    "cycle",
    "moving",
    "staying",
    "seeking",
    "following",
    "wandering",
    "leaders",
    "dead",
    "arrived_safe",
    "arrived_other",
    "gave_up",
    "exposed_now",
    "outside_city",
];

impl MetricsFrame {
    fn collect(
        cycle: u32,
        agents: &[HumanAgent],
        safe_nodes: &BTreeSet<NodeId>,
        exit_nodes: &BTreeSet<NodeId>,
    ) -> MetricsFrame {
        let mut f = MetricsFrame {
            cycle,
            moving: 0,
            staying: 0,
            seeking: 0,
            following: 0,
            wandering: 0,
            leaders: 0,
            dead: 0,
            arrived_safe: 0,
            arrived_other: 0,
            gave_up: 0,
            exposed_now: 0,
            outside_city: 0,
        };
        for a in agents {
            match a.status {
                Status::Dead => f.dead += 1,
                Status::GaveUp => f.gave_up += 1,
                Status::Arrived => {
                    let node = a.target.expect("arrived agents have a target");
                    if safe_nodes.contains(&node) {
                        f.arrived_safe += 1;
                        if exit_nodes.contains(&node) {
                            f.outside_city += 1;
                        }
                    } else {
                        f.arrived_other += 1;
                    }
                }
                Status::Alive => match a.role {
                    Role::Stayer => f.staying += 1,
                    Role::Mover { leader } => {
                        f.moving += 1;
                        if leader {
                            f.leaders += 1;
                        }
                    }
                    Role::Seeker => f.seeking += 1,
                    Role::Follower { .. } => f.following += 1,
                    Role::Wanderer => f.wandering += 1,
                },
            }
            if a.exposed_now {
                f.exposed_now += 1;
            }
        }
        let partition = f.dead
            + f.arrived_safe
            + f.arrived_other
            + f.gave_up
            + f.moving
            + f.staying
            + f.seeking
            + f.following
            + f.wandering;
        assert_eq!(
            partition as usize,
            agents.len(),
            "population partition broken at cycle {cycle}"
        );
        f
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    Settled,
    MaxCycles,
}

impl TerminationReason {
    pub fn label(self) -> &'static str {
        match self {
            TerminationReason::Settled => "settled",
            TerminationReason::MaxCycles => "max_cycles",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AgentOutcome {
    pub id: u32,
    pub final_status: Status,
    pub exposed_seconds: u32,
    pub final_role: String,
}

/// Aggregates used by scenario comparison.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RunTotals {
    pub population: u32,
    pub victims: u32,
    pub total_exposed_seconds: u64,
    pub arrived_safe: u32,
    pub outside_city: u32,
    pub gave_up: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunResult {
    pub frames: Vec<MetricsFrame>,
    pub per_agent: Vec<AgentOutcome>,
    pub histogram_bucket_seconds: u32,
    /// Exposure histogram over agents alive after the quake;
    /// `histogram[i]` counts exposures in `[i*bucket, (i+1)*bucket)`.
    pub exposure_histogram: Vec<u32>,
    pub termination: TerminationReason,
    pub cycles: u32,
    pub totals: RunTotals,
}

/// Plan log entry (tracing only): the belief-blocked set is snapshotted at
/// plan time so avoidance can be audited afterwards.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanRecord {
    pub cycle: u32,
    pub agent: u32,
    pub target: NodeId,
    pub cost: f64,
    pub edges: Vec<EdgeId>,
    pub blocked_at_plan: Vec<EdgeId>,
}

/// Leader speed audit row, recorded right after each adjustment.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LeaderCheck {
    pub cycle: u32,
    pub leader: u32,
    pub leader_speed: f64,
    pub min_follower_speed: f64,
    pub followers: u32,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Trace {
    /// (cycle, agent, node) for every intersection crossing, including the
    /// return from a backtrack.
    pub node_visits: Vec<(u32, u32, NodeId)>,
    pub plans: Vec<PlanRecord>,
    pub leader_checks: Vec<LeaderCheck>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Collect node visits, plan records and leader checks.
    pub trace: bool,
}

pub struct Simulation {
    pub world: WorldState,
    cfg: ScenarioConfig,
    rng: SeededRng,
    frames: Vec<MetricsFrame>,
    trace: Option<Trace>,
    obstacle_index: SpatialIndex,
    blocked_edges_of: Vec<Vec<EdgeId>>,
    safe_nodes: BTreeSet<NodeId>,
    exit_nodes: BTreeSet<NodeId>,
    snapshots: Vec<AgentView>,
    percepts: Vec<Percept>,
    agent_index: SpatialIndex,
}

impl Simulation {
    /// Runs every initialization phase on a district.
    pub fn initialize(
        district: &District,
        cfg: &ScenarioConfig,
        seed: u64,
        options: RunOptions,
    ) -> Result<Simulation, EngineError> {
        cfg.validate().map_err(|e| init_err("config validation", e))?;
        let mut rng = SeededRng::new(seed);

        let graph = build_graph(&district.streets, crate::district::SNAP_TOLERANCE)
            .map_err(|e| init_err("graph construction", e))?;

        let mut buildings: Vec<Building> = district
            .buildings
            .iter()
            .enumerate()
            .map(|(i, spec)| Building::new(BuildingId(i as u32), spec, &graph))
            .collect();
        let green_spaces: Vec<GreenSpace> = district
            .green_spaces
            .iter()
            .enumerate()
            .map(|(i, g)| GreenSpace {
                id: i as u32,
                footprint: g.clone(),
            })
            .collect();
        let safe_places = collect_safe_places(&graph, &green_spaces);

        let (mut agents, occupants) = world::populate(
            &buildings,
            &graph,
            cfg,
            &mut rng.population,
            &mut rng.behaviour,
        )
        .map_err(|e| init_err("population", e))?;
        for (b, &n) in buildings.iter_mut().zip(&occupants) {
            b.occupants = n;
        }

        let mut graph = graph;
        for b in buildings.iter_mut() {
            b.damage = world::assign_damage(&cfg.damage_distribution, &mut rng.damage)
                .map_err(|e| init_err("damage assignment", e))?;
        }
        let mut obstacles = Vec::new();
        for b in &buildings {
            let id = ObstacleId(obstacles.len() as u32);
            if let Some(o) = world::obstacle_from_building(id, b, &cfg.obstacle_radius_factors) {
                obstacles.push(o);
            }
        }
        block_streets(&obstacles, &mut graph);
        world::initial_casualties(
            &mut agents,
            &buildings,
            &obstacles,
            &cfg.casualty_rates,
            &mut rng.casualties,
            &graph,
        );

        let world = WorldState {
            graph,
            buildings,
            green_spaces,
            safe_places,
            quake: Quake::default(),
            obstacles,
            agents,
            clock: SimClock { cycle: 0 },
        };
        let mut sim = Simulation::assemble(world, cfg.clone(), rng, options);
        sim.decide_targets();
        sim.plan_initial_routes();
        Ok(sim)
    }

    /// Wraps an already-assembled world (fixtures, tests). Damage, blocking
    /// and casualties are assumed done; targets and routes are not touched.
    pub fn from_world(
        world: WorldState,
        cfg: &ScenarioConfig,
        seed: u64,
        options: RunOptions,
    ) -> Simulation {
        Simulation::assemble(world, cfg.clone(), SeededRng::new(seed), options)
    }

    fn assemble(
        world: WorldState,
        cfg: ScenarioConfig,
        rng: SeededRng,
        options: RunOptions,
    ) -> Simulation {
        let mut obstacle_index = SpatialIndex::new(cfg.perception_radius);
        let mut blocked_edges_of = Vec::with_capacity(world.obstacles.len());
        for o in &world.obstacles {
            obstacle_index.insert_circle(o.id.0, &o.zone);
            if o.level == ObstacleLevel::Big {
                blocked_edges_of.push(world::edges_overlapping_circle(&world.graph, &o.zone));
            } else {
                blocked_edges_of.push(Vec::new());
            }
        }
        let safe_nodes: BTreeSet<NodeId> = world.safe_places.iter().map(|s| s.node).collect();
        let exit_nodes: BTreeSet<NodeId> = world
            .safe_places
            .iter()
            .filter(|s| s.kind == world::SafePlaceKind::CityExit)
            .map(|s| s.node)
            .collect();
        Simulation {
            world,
            cfg,
            rng,
            frames: Vec::new(),
            trace: options.trace.then(Trace::default),
            obstacle_index,
            blocked_edges_of,
            safe_nodes,
            exit_nodes,
            snapshots: Vec::new(),
            percepts: Vec::new(),
            agent_index: SpatialIndex::new(20.0),
        }
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    pub fn frames(&self) -> &[MetricsFrame] {
        &self.frames
    }

    pub fn trace(&self) -> Option<&Trace> {
        self.trace.as_ref()
    }

    pub fn safe_nodes(&self) -> &BTreeSet<NodeId> {
        &self.safe_nodes
    }

    fn view<'a>(
        world: &'a WorldState,
        cfg: &'a ScenarioConfig,
        obstacle_index: &'a SpatialIndex,
        blocked_edges_of: &'a [Vec<EdgeId>],
        safe_nodes: &'a BTreeSet<NodeId>,
    ) -> WorldView<'a> {
        WorldView {
            graph: &world.graph,
            buildings: &world.buildings,
            obstacles: &world.obstacles,
            obstacle_index,
            blocked_edges_of,
            safe_nodes,
            cfg,
        }
    }

    /// Per-node nearest safe place under default beliefs: a multi-source
    /// run over all safe nodes, ties broken toward the smaller safe-node
    /// id, then the distance table per chosen source for route walking.
    fn nearest_safe_tables(&self) -> (Vec<f64>, Vec<Option<NodeId>>) {
        let graph = &self.world.graph;
        let n = graph.nodes().len();
        let mut dist = vec![f64::INFINITY; n];
        let mut source: Vec<Option<NodeId>> = vec![None; n];

        struct State {
            cost: f64,
            src: NodeId,
            node: NodeId,
        }
        impl PartialEq for State {
            fn eq(&self, other: &Self) -> bool {
                self.cost == other.cost && self.src == other.src && self.node == other.node
            }
        }
        impl Eq for State {}
        impl Ord for State {
            fn cmp(&self, other: &Self) -> Ordering {
                other
                    .cost
                    .partial_cmp(&self.cost)
                    .unwrap_or(Ordering::Equal)
                    .then(other.src.cmp(&self.src))
                    .then(other.node.cmp(&self.node))
            }
        }
        impl PartialOrd for State {
            fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
                Some(self.cmp(other))
            }
        }

        let mut heap = BinaryHeap::new();
        let mut sources: Vec<NodeId> = self.safe_nodes.iter().copied().collect();
        sources.sort();
        for s in sources {
            dist[s.idx()] = 0.0;
            source[s.idx()] = Some(s);
            heap.push(State {
                cost: 0.0,
                src: s,
                node: s,
            });
        }
        while let Some(State { cost, src, node }) = heap.pop() {
            if (cost, Some(src)) != (dist[node.idx()], source[node.idx()]) {
                continue;
            }
            for &(e, next) in graph.neighbors(node) {
                let c = cost + graph.edge(e).length;
                let better = c < dist[next.idx()]
                    || (c == dist[next.idx()] && Some(src) < source[next.idx()]);
                if better {
                    dist[next.idx()] = c;
                    source[next.idx()] = Some(src);
                    heap.push(State {
                        cost: c,
                        src,
                        node: next,
                    });
                }
            }
        }
        (dist, source)
    }

    fn decide_targets(&mut self) {
        let (dist_safe, nearest_safe) = self.nearest_safe_tables();
        let mut agents = std::mem::take(&mut self.world.agents);
        let view = Self::view(
            &self.world,
            &self.cfg,
            &self.obstacle_index,
            &self.blocked_edges_of,
            &self.safe_nodes,
        );
        for agent in agents.iter_mut() {
            agents::decide_target(agent, &view, &dist_safe, &nearest_safe, &mut self.rng.behaviour);
        }
        self.world.agents = agents;
    }

    /// Routes every living mover that already has a target, moving indoor
    /// ones to their egress point first. Initial beliefs are pristine, so
    /// one distance table per target serves every agent aiming there.
    pub fn plan_initial_routes(&mut self) {
        let mut agents = std::mem::take(&mut self.world.agents);
        let view = Self::view(
            &self.world,
            &self.cfg,
            &self.obstacle_index,
            &self.blocked_edges_of,
            &self.safe_nodes,
        );
        let default_overlay = BeliefOverlay::default();
        let mut by_target: BTreeMap<NodeId, Vec<usize>> = BTreeMap::new();
        for (i, agent) in agents.iter().enumerate() {
            if agent.status == Status::Alive && agent.role.moves() {
                if let Some(t) = agent.target {
                    by_target.entry(t).or_default().push(i);
                }
            }
        }
        let mut trace = self.trace.as_mut();
        for (target, ids) in by_target {
            let dist = crate::network::distances_from(&self.world.graph, &default_overlay, target);
            for i in ids {
                let agent = &mut agents[i];
                agents::ensure_on_street(agent, &view);
                let gp = match agent.place {
                    Place::OnStreet(gp) => gp,
                    Place::InBuilding(_) => unreachable!(),
                };
                match plan_with_distances(&self.world.graph, &default_overlay, &gp, &dist) {
                    None => agent.route = None,
                    Some((fixed, route)) => {
                        let walk_in = if fixed.heading == gp.heading {
                            gp.remaining(&self.world.graph)
                        } else {
                            gp.offset
                        };
                        if let Some(t) = trace.as_deref_mut() {
                            t.plans.push(PlanRecord {
                                cycle: 0,
                                agent: agent.id,
                                target,
                                cost: walk_in + route.cost(&self.world.graph, &agent.belief),
                                edges: route.edges.clone(),
                                blocked_at_plan: Vec::new(),
                            });
                        }
                        if walk_in == 0.0 {
                            // Spawned exactly on the entry node.
                            let entry = route.nodes[0];
                            if route.is_empty() {
                                agent.status = Status::Arrived;
                                agent.exposed_now = false;
                            } else {
                                agent.place = Place::OnStreet(crate::GraphPosition::at_node(
                                    &self.world.graph,
                                    route.edges[0],
                                    entry,
                                ));
                                agent.route = Some(agents::ActiveRoute { route, next: 1 });
                            }
                        } else {
                            agent.place = Place::OnStreet(fixed);
                            agent.route = Some(agents::ActiveRoute { route, next: 0 });
                        }
                    }
                }
            }
        }
        self.world.agents = agents;
    }

    pub fn terminated(&self) -> Option<TerminationReason> {
        let agents = &self.world.agents;
        if !agents.is_empty() && agents.iter().all(|a| a.status == Status::Dead) {
            return Some(TerminationReason::Settled);
        }
        if self.world.clock.cycle >= 1
            && agents
                .iter()
                .all(|a| a.role == Role::Stayer || a.status.is_terminal())
        {
            return Some(TerminationReason::Settled);
        }
        if self.world.clock.cycle >= self.cfg.max_cycles {
            return Some(TerminationReason::MaxCycles);
        }
        None
    }

    /// One simulation second.
    pub fn step_cycle(&mut self) {
        let cycle = self.world.clock.cycle + 1;

        // (1) Publish the previous cycle's positions.
        self.snapshots.clear();
        for a in &self.world.agents {
            self.snapshots.push(AgentView {
                point: a.point(&self.world.graph, &self.world.buildings),
                status: a.status,
                is_leader: a.role.is_leader(),
                last_node: a.last_node,
            });
        }
        let imitation_present = self.world.agents.iter().any(|a| {
            a.status == Status::Alive
                && matches!(a.role, Role::Seeker | Role::Follower { .. } | Role::Wanderer)
        });
        if imitation_present {
            self.agent_index.clear();
            for (i, snap) in self.snapshots.iter().enumerate() {
                if snap.status == Status::Alive {
                    self.agent_index.insert_point(i as u32, snap.point);
                }
            }
        }

        let mut agents = std::mem::take(&mut self.world.agents);
        let view = Self::view(
            &self.world,
            &self.cfg,
            &self.obstacle_index,
            &self.blocked_edges_of,
            &self.safe_nodes,
        );
        let mut trace = self.trace.as_mut();

        // (2) Perceive.
        self.percepts.resize_with(agents.len(), Percept::default);
        for (i, agent) in agents.iter().enumerate() {
            if agent.status == Status::Alive && agent.role != Role::Stayer {
                agents::perceive(
                    agent,
                    &view,
                    &self.snapshots,
                    imitation_present.then_some(&self.agent_index),
                    &mut self.percepts[i],
                );
            } else {
                self.percepts[i].clear();
            }
        }

        // (3) Imitation.
        for (i, agent) in agents.iter_mut().enumerate() {
            agents::seek_and_follow(
                agent,
                &self.percepts[i],
                &self.snapshots,
                &view,
                &mut self.rng.imitation,
                &mut trace,
                cycle,
            );
        }

        // (4) Obstacles ahead.
        for (i, agent) in agents.iter_mut().enumerate() {
            agents::handle_obstacle_ahead(
                agent,
                &self.percepts[i],
                &view,
                &mut self.rng.imitation,
                &mut trace,
                cycle,
            );
        }

        // (5) Leader speed adjustment.
        if cycle % 10 == 0 {
            let mut follower_min: BTreeMap<u32, (f64, u32)> = BTreeMap::new();
            for agent in agents.iter() {
                if agent.status == Status::Alive {
                    if let Role::Follower { leader } = agent.role {
                        let s = agents::effective_speed(agent, &view);
                        let entry = follower_min.entry(leader).or_insert((f64::INFINITY, 0));
                        entry.0 = entry.0.min(s);
                        entry.1 += 1;
                    }
                }
            }
            for agent in agents.iter_mut() {
                if agent.status == Status::Alive && agent.role.is_leader() {
                    let (min_follower, followers) = follower_min
                        .get(&agent.id)
                        .copied()
                        .unwrap_or((f64::INFINITY, 0));
                    agent.speed_cap = if followers == 0 {
                        agent.base_speed
                    } else {
                        agents::leader_adjust_speed(agent.base_speed, [min_follower])
                    };
                    if let Some(t) = trace.as_deref_mut() {
                        t.leader_checks.push(LeaderCheck {
                            cycle,
                            leader: agent.id,
                            leader_speed: agents::effective_speed(agent, &view),
                            min_follower_speed: min_follower,
                            followers,
                        });
                    }
                }
            }
        }

        // (6) Movement.
        for agent in agents.iter_mut() {
            agents::step_move(agent, &view, &mut self.rng.imitation, &mut trace, cycle);
        }

        // (7) Exposure.
        for agent in agents.iter_mut() {
            agents::accrue_exposure(agent, &view);
        }

        self.world.agents = agents;

        // (8) Metrics.
        self.frames.push(MetricsFrame::collect(
            cycle,
            &self.world.agents,
            &self.safe_nodes,
            &self.exit_nodes,
        ));
        self.world.clock.cycle = cycle;
    }

    pub fn run_to_completion(&mut self) -> TerminationReason {
        loop {
            if let Some(reason) = self.terminated() {
                return reason;
            }
            self.step_cycle();
        }
    }

    pub fn into_result(self) -> RunResult {
        let termination = self.terminated().unwrap_or(TerminationReason::MaxCycles);
        let bucket = self.cfg.histogram_bucket_seconds;
        let agents = &self.world.agents;

        let per_agent: Vec<AgentOutcome> = agents
            .iter()
            .map(|a| AgentOutcome {
                id: a.id,
                final_status: a.status,
                exposed_seconds: a.exposed_seconds,
                final_role: a.role.label().to_string(),
            })
            .collect();

        let mut histogram: Vec<u32> = Vec::new();
        for a in agents.iter().filter(|a| a.status != Status::Dead) {
            let slot = (a.exposed_seconds / bucket) as usize;
            if histogram.len() <= slot {
                histogram.resize(slot + 1, 0);
            }
            histogram[slot] += 1;
        }

        let last = self.frames.last().copied();
        let totals = RunTotals {
            population: agents.len() as u32,
            victims: agents.iter().filter(|a| a.is_dead()).count() as u32,
            total_exposed_seconds: agents.iter().map(|a| a.exposed_seconds as u64).sum(),
            arrived_safe: last.map_or(0, |f| f.arrived_safe),
            outside_city: last.map_or(0, |f| f.outside_city),
            gave_up: last.map_or(0, |f| f.gave_up),
        };
        RunResult {
            cycles: self.world.clock.cycle,
            frames: self.frames,
            per_agent,
            histogram_bucket_seconds: bucket,
            exposure_histogram: histogram,
            termination,
            totals,
        }
    }
}

/// Initialize, loop until termination, and collect the result.
pub fn run(
    district: &District,
    cfg: &ScenarioConfig,
    seed: u64,
    options: RunOptions,
) -> Result<RunResult, EngineError> {
    let mut sim = Simulation::initialize(district, cfg, seed, options)?;
    sim.run_to_completion();
    Ok(sim.into_result())
}
