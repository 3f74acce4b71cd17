//! District state: buildings, green spaces, safe places, the quake event,
//! obstacle generation, street blocking, initial casualties, and population.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{HumanAgent, Place};
use crate::geometry::convex_hull;
use crate::network::{nearest_node, project_to_graph, EdgeId, NodeId};
use crate::scenario::ScenarioConfig;
use crate::{Circle, Point, Polygon, StreamRng, StreetGraph};

#[derive(Debug, Error, PartialEq)]
pub enum WorldError {
    #[error("damage distribution sums to {0}, expected 1")]
    MalformedDistribution(f64),
    #[error("district has no buildings to populate")]
    EmptyDistrict,
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct BuildingId(pub u32);

impl BuildingId {
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct ObstacleId(pub u32);

impl ObstacleId {
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DamageLevel {
    None,
    Slight,
    Moderate,
    Extensive,
    Complete,
}

impl DamageLevel {
    pub const ALL: [DamageLevel; 5] = [
        DamageLevel::None,
        DamageLevel::Slight,
        DamageLevel::Moderate,
        DamageLevel::Extensive,
        DamageLevel::Complete,
    ];

    pub fn index(self) -> usize {
        match self {
            DamageLevel::None => 0,
            DamageLevel::Slight => 1,
            DamageLevel::Moderate => 2,
            DamageLevel::Extensive => 3,
            DamageLevel::Complete => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObstacleLevel {
    Big,
    Medium,
    Small,
}

impl ObstacleLevel {
    pub fn index(self) -> usize {
        match self {
            ObstacleLevel::Big => 0,
            ObstacleLevel::Medium => 1,
            ObstacleLevel::Small => 2,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Building {
    pub id: BuildingId,
    pub footprint: Polygon,
    pub storeys: u32,
    pub apartments: u32,
    pub damage: DamageLevel,
    pub occupants: u32,
    pub centroid: Point,
    /// Where occupants step onto the street network.
    pub egress: crate::GraphPosition,
    /// Nearest intersection, cached for target selection.
    pub nearest_node: NodeId,
}

impl Building {
    pub fn new(
        id: BuildingId,
        spec: &crate::district::DistrictBuilding,
        graph: &StreetGraph,
    ) -> Building {
        let centroid = spec.footprint.centroid();
        Building {
            id,
            footprint: spec.footprint.clone(),
            storeys: spec.storeys,
            apartments: spec.apartments,
            damage: DamageLevel::None,
            occupants: 0,
            centroid,
            egress: project_to_graph(graph, centroid),
            nearest_node: nearest_node(graph, centroid),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GreenSpace {
    pub id: u32,
    pub footprint: Polygon,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SafePlaceKind {
    Green,
    School,
    CityExit,
    StreetPoint,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SafePlace {
    pub id: u32,
    pub kind: SafePlaceKind,
    pub location: Point,
    pub node: NodeId,
}

/// The earthquake event. Applied exactly once, before cycle 1.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Quake {
    pub time: u32,
    pub intensity: String,
}

impl Default for Quake {
    fn default() -> Self {
        Quake {
            time: 0,
            intensity: "M7".to_string(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Obstacle {
    pub id: ObstacleId,
    pub level: ObstacleLevel,
    pub zone: Circle,
    pub source_building: BuildingId,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimClock {
    pub cycle: u32,
}

/// Everything the engine steps. Agents are never removed, only change
/// status.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WorldState {
    pub graph: StreetGraph,
    pub buildings: Vec<Building>,
    pub green_spaces: Vec<GreenSpace>,
    pub safe_places: Vec<SafePlace>,
    pub quake: Quake,
    pub obstacles: Vec<Obstacle>,
    pub agents: Vec<HumanAgent>,
    pub clock: SimClock,
}

/// Samples a damage level from the categorical distribution.
pub fn assign_damage(
    distribution: &[f64; 5],
    rng: &mut StreamRng,
) -> Result<DamageLevel, WorldError> {
    let sum: f64 = distribution.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(WorldError::MalformedDistribution(sum));
    }
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for level in DamageLevel::ALL {
        acc += distribution[level.index()];
        if u < acc {
            return Ok(level);
        }
    }
    Ok(DamageLevel::Complete)
}

/// Damage → obstacle mapping: complete → big, extensive → medium,
/// moderate → small, otherwise none. The zone is a circle at the footprint
/// centroid with radius `factor × sqrt(area / π)`.
pub fn obstacle_from_building(
    id: ObstacleId,
    building: &Building,
    radius_factors: &[f64; 3],
) -> Option<Obstacle> {
    let level = match building.damage {
        DamageLevel::Complete => ObstacleLevel::Big,
        DamageLevel::Extensive => ObstacleLevel::Medium,
        DamageLevel::Moderate => ObstacleLevel::Small,
        DamageLevel::Slight | DamageLevel::None => return None,
    };
    let equivalent_radius = (building.footprint.area() / std::f64::consts::PI).sqrt();
    let radius = radius_factors[level.index()] * equivalent_radius;
    Some(Obstacle {
        id,
        level,
        zone: Circle::new(building.centroid, radius).expect("positive obstacle radius"),
        source_building: building.id,
    })
}

/// Edges whose geometry overlaps the circle.
pub fn edges_overlapping_circle(graph: &StreetGraph, zone: &Circle) -> Vec<EdgeId> {
    graph
        .edges()
        .iter()
        .filter(|e| e.geometry.intersects_circle(zone))
        .map(|e| e.id)
        .collect()
}

/// Marks ground truth: every edge overlapping a big obstacle zone becomes
/// blocked. Medium and small obstacles expose or slow but never block.
pub fn block_streets(obstacles: &[Obstacle], graph: &mut StreetGraph) -> BTreeSet<EdgeId> {
    let mut blocked = BTreeSet::new();
    for o in obstacles {
        if o.level != ObstacleLevel::Big {
            continue;
        }
        for e in edges_overlapping_circle(graph, &o.zone) {
            graph.set_blocked(e);
            blocked.insert(e);
        }
    }
    blocked
}

/// Quake-time deaths: street agents inside a big zone die outright; agents
/// still inside a building die with the configured probability for its
/// damage level. Returns the victim count.
pub fn initial_casualties(
    agents: &mut [HumanAgent],
    buildings: &[Building],
    obstacles: &[Obstacle],
    casualty_rates: &[f64; 5],
    rng: &mut StreamRng,
    graph: &StreetGraph,
) -> usize {
    let big_zones: Vec<&Circle> = obstacles
        .iter()
        .filter(|o| o.level == ObstacleLevel::Big)
        .map(|o| &o.zone)
        .collect();
    let mut victims = 0;
    for agent in agents.iter_mut() {
        match agent.place {
            Place::OnStreet(pos) => {
                let p = pos.point(graph);
                if big_zones.iter().any(|z| z.contains(p)) {
                    agent.kill();
                    victims += 1;
                }
            }
            Place::InBuilding(b) => {
                let rate = casualty_rates[buildings[b.idx()].damage.index()];
                if rate > 0.0 && rng.gen::<f64>() < rate {
                    agent.kill();
                    victims += 1;
                }
            }
        }
    }
    victims
}

/// Builds the population: `round(apartments × occupancy)` occupants per
/// building, each indoors with probability `people_in_buildings`%, else
/// placed uniformly on the street network. Behaviour classes come from the
/// scenario distribution; roles are provisional until targets are decided.
pub fn populate(
    district_buildings: &[Building],
    graph: &StreetGraph,
    cfg: &ScenarioConfig,
    population_rng: &mut StreamRng,
    behaviour_rng: &mut StreamRng,
) -> Result<(Vec<HumanAgent>, Vec<u32>), WorldError> {
    if district_buildings.is_empty() {
        return Err(WorldError::EmptyDistrict);
    }
    let edge_lengths: Vec<f64> = graph.edges().iter().map(|e| e.length).collect();
    let total_length: f64 = edge_lengths.iter().sum();
    let indoor_probability = cfg.people_in_buildings / 100.0;

    let mut agents = Vec::new();
    let mut occupants_per_building = Vec::with_capacity(district_buildings.len());
    for building in district_buildings {
        let occupants =
            (building.apartments as f64 * cfg.occupancy_per_apartment).round() as u32;
        occupants_per_building.push(occupants);
        for _ in 0..occupants {
            let id = agents.len() as u32;
            let class = sample_class(&cfg.behaviour_distribution, behaviour_rng);
            let place = if population_rng.gen::<f64>() < indoor_probability {
                Place::InBuilding(building.id)
            } else {
                // Uniform over network length: edge by length, then offset.
                let mut pick = population_rng.gen::<f64>() * total_length;
                let mut edge = graph.edges().last().unwrap().id;
                for (i, len) in edge_lengths.iter().enumerate() {
                    if pick < *len {
                        edge = EdgeId(i as u32);
                        break;
                    }
                    pick -= len;
                }
                let offset = population_rng.gen::<f64>() * graph.edge(edge).length;
                Place::OnStreet(crate::GraphPosition {
                    edge,
                    offset,
                    heading: graph.edge(edge).endpoints.1,
                })
            };
            agents.push(HumanAgent::new(id, class, place, cfg, graph));
        }
    }
    Ok((agents, occupants_per_building))
}

fn sample_class(distribution: &[f64; 6], rng: &mut StreamRng) -> u8 {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, p) in distribution.iter().enumerate() {
        acc += p;
        if u < acc {
            return (i + 1) as u8;
        }
    }
    6
}

/// Safe places: one per green space (nearest intersection to its centroid)
/// plus a city exit at every node on the district's convex-hull boundary.
pub fn collect_safe_places(graph: &StreetGraph, green_spaces: &[GreenSpace]) -> Vec<SafePlace> {
    let mut out = Vec::new();
    for g in green_spaces {
        let centroid = g.footprint.centroid();
        out.push(SafePlace {
            id: out.len() as u32,
            kind: SafePlaceKind::Green,
            location: centroid,
            node: nearest_node(graph, centroid),
        });
    }
    let positions: Vec<Point> = graph.nodes().iter().map(|n| n.position).collect();
    let hull = convex_hull(&positions);
    if hull.len() >= 2 {
        for node in graph.nodes() {
            let n = hull.len();
            let on_boundary = (0..n).any(|i| {
                crate::geometry::segment_point_distance(
                    hull[i],
                    hull[(i + 1) % n],
                    node.position,
                ) <= 1e-6
            });
            if on_boundary {
                out.push(SafePlace {
                    id: out.len() as u32,
                    kind: SafePlaceKind::CityExit,
                    location: node.position,
                    node: node.id,
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::district::{generate_synthetic, DistrictBuilding, SyntheticParams};
    use crate::network::build_graph;
    use crate::Polyline;
    use rand::SeedableRng;

    fn test_graph() -> StreetGraph {
        build_graph(
            &[
                Polyline::new(vec![Point::new(0.0, 0.0), Point::new(100.0, 0.0)]).unwrap(),
                Polyline::new(vec![Point::new(100.0, 0.0), Point::new(200.0, 0.0)]).unwrap(),
            ],
            0.5,
        )
        .unwrap()
    }

    fn building_with_area(graph: &StreetGraph, area: f64, damage: DamageLevel) -> Building {
        let half = (area.sqrt()) / 2.0;
        let spec = DistrictBuilding {
            footprint: Polygon::new(vec![
                Point::new(50.0 - half, 30.0 - half),
                Point::new(50.0 + half, 30.0 - half),
                Point::new(50.0 + half, 30.0 + half),
                Point::new(50.0 - half, 30.0 + half),
            ])
            .unwrap(),
            storeys: 2,
            apartments: 10,
        };
        let mut b = Building::new(BuildingId(0), &spec, graph);
        b.damage = damage;
        b
    }

    #[test]
    fn degenerate_distributions_sample_deterministically() {
        let mut rng = StreamRng::seed_from_u64(1);
        let none = [1.0, 0.0, 0.0, 0.0, 0.0];
        assert_eq!(assign_damage(&none, &mut rng).unwrap(), DamageLevel::None);
        let complete = [0.0, 0.0, 0.0, 0.0, 1.0];
        assert_eq!(
            assign_damage(&complete, &mut rng).unwrap(),
            DamageLevel::Complete
        );
    }

    #[test]
    fn malformed_distribution_is_rejected() {
        let mut rng = StreamRng::seed_from_u64(1);
        let bad = [0.5, 0.0, 0.0, 0.0, 0.4];
        assert_eq!(
            assign_damage(&bad, &mut rng).unwrap_err(),
            WorldError::MalformedDistribution(0.9)
        );
    }

    #[test]
    fn damage_frequencies_converge() {
        let mut rng = StreamRng::seed_from_u64(5);
        let dist = [0.5, 0.0, 0.3, 0.0, 0.2];
        let mut counts = [0usize; 5];
        const N: usize = 100_000;
        for _ in 0..N {
            counts[assign_damage(&dist, &mut rng).unwrap().index()] += 1;
        }
        for (i, &expect) in dist.iter().enumerate() {
            let freq = counts[i] as f64 / N as f64;
            assert!(
                (freq - expect).abs() <= 0.01,
                "level {i}: {freq} vs {expect}"
            );
        }
    }

    #[test]
    fn obstacle_mapping_follows_damage() {
        let graph = test_graph();
        let factors = [1.5, 1.0, 0.5];
        let area = std::f64::consts::PI * 100.0; // equivalent radius 10 m

        let slight = building_with_area(&graph, 1.0, DamageLevel::Slight);
        assert!(obstacle_from_building(ObstacleId(0), &slight, &factors).is_none());

        let complete = building_with_area(&graph, area, DamageLevel::Complete);
        let o = obstacle_from_building(ObstacleId(0), &complete, &factors).unwrap();
        assert_eq!(o.level, ObstacleLevel::Big);
        assert!((o.zone.radius - 15.0).abs() < 1e-9);

        let moderate = building_with_area(&graph, area, DamageLevel::Moderate);
        let o = obstacle_from_building(ObstacleId(1), &moderate, &factors).unwrap();
        assert_eq!(o.level, ObstacleLevel::Small);
        assert!((o.zone.radius - 5.0).abs() < 1e-9);
    }

    #[test]
    fn block_streets_only_big_blocks() {
        let mut graph = test_graph();
        assert!(block_streets(&[], &mut graph).is_empty());

        let mk = |level, center: (f64, f64), r| Obstacle {
            id: ObstacleId(0),
            level,
            zone: Circle::new(Point::new(center.0, center.1), r).unwrap(),
            source_building: BuildingId(0),
        };
        let obstacles = vec![
            mk(ObstacleLevel::Big, (50.0, 0.0), 5.0),
            mk(ObstacleLevel::Medium, (150.0, 0.0), 5.0),
        ];
        let blocked = block_streets(&obstacles, &mut graph);
        assert_eq!(blocked.into_iter().collect::<Vec<_>>(), vec![EdgeId(0)]);
        assert!(graph.edge(EdgeId(0)).blocked);
        assert!(!graph.edge(EdgeId(1)).blocked);
    }

    #[test]
    fn block_streets_matches_exhaustive_scan_and_ignores_order() {
        let d = generate_synthetic(&SyntheticParams {
            blocks: 4,
            seed: 8,
            ..Default::default()
        })
        .unwrap();
        let graph0 = build_graph(&d.streets, 0.5).unwrap();
        let mk = |i, level, center: (f64, f64), r| Obstacle {
            id: ObstacleId(i),
            level,
            zone: Circle::new(Point::new(center.0, center.1), r).unwrap(),
            source_building: BuildingId(0),
        };
        let obstacles = vec![
            mk(0, ObstacleLevel::Big, (100.0, 100.0), 20.0),
            mk(1, ObstacleLevel::Big, (250.0, 100.0), 30.0),
            mk(2, ObstacleLevel::Big, (300.0, 300.0), 10.0),
            mk(3, ObstacleLevel::Medium, (200.0, 200.0), 40.0),
            mk(4, ObstacleLevel::Medium, (0.0, 0.0), 25.0),
        ];
        let mut g1 = graph0.clone();
        let blocked = block_streets(&obstacles, &mut g1);

        let mut oracle = BTreeSet::new();
        for e in graph0.edges() {
            for o in &obstacles {
                if o.level == ObstacleLevel::Big && e.geometry.intersects_circle(&o.zone) {
                    oracle.insert(e.id);
                }
            }
        }
        assert_eq!(blocked, oracle);

        let mut reversed: Vec<Obstacle> = obstacles.into_iter().rev().collect();
        for (i, o) in reversed.iter_mut().enumerate() {
            o.id = ObstacleId(i as u32);
        }
        let mut g2 = graph0.clone();
        assert_eq!(block_streets(&reversed, &mut g2), oracle);
    }

    #[test]
    fn casualties_follow_both_rules() {
        let graph = test_graph();
        let cfg = ScenarioConfig::default();
        let building = building_with_area(&graph, 100.0, DamageLevel::None);
        let zone = Obstacle {
            id: ObstacleId(0),
            level: ObstacleLevel::Big,
            zone: Circle::new(Point::new(50.0, 0.0), 5.0).unwrap(),
            source_building: BuildingId(0),
        };
        // Agent 0 at the zone center, agent 1 far away, agent 2 indoors.
        let mut agents = vec![
            HumanAgent::new(
                0,
                2,
                Place::OnStreet(crate::GraphPosition {
                    edge: EdgeId(0),
                    offset: 50.0,
                    heading: NodeId(1),
                }),
                &cfg,
                &graph,
            ),
            HumanAgent::new(
                1,
                2,
                Place::OnStreet(crate::GraphPosition {
                    edge: EdgeId(1),
                    offset: 50.0,
                    heading: NodeId(2),
                }),
                &cfg,
                &graph,
            ),
            HumanAgent::new(2, 2, Place::InBuilding(BuildingId(0)), &cfg, &graph),
        ];
        let mut rng = StreamRng::seed_from_u64(2);
        let victims = initial_casualties(
            &mut agents,
            &[building],
            &[zone],
            &[0.0; 5],
            &mut rng,
            &graph,
        );
        assert_eq!(victims, 1);
        assert!(agents[0].is_dead());
        assert!(!agents[1].is_dead());
        assert!(!agents[2].is_dead());
    }

    #[test]
    fn indoor_casualties_track_binomial() {
        let graph = test_graph();
        let cfg = ScenarioConfig::default();
        let building = building_with_area(&graph, 100.0, DamageLevel::Complete);
        let n = 10_000;
        let mut agents: Vec<HumanAgent> = (0..n)
            .map(|i| HumanAgent::new(i, 2, Place::InBuilding(BuildingId(0)), &cfg, &graph))
            .collect();
        let mut rng = StreamRng::seed_from_u64(77);
        let rates = [0.0, 0.0, 0.02, 0.1, 0.4];
        let victims = initial_casualties(
            &mut agents,
            &[building],
            &[],
            &rates,
            &mut rng,
            &graph,
        ) as f64;
        let mean = n as f64 * 0.4;
        let sigma = (n as f64 * 0.4 * 0.6).sqrt();
        assert!((victims - mean).abs() <= 3.0 * sigma, "{victims} vs {mean}");
    }

    #[test]
    fn populate_counts_and_placement() {
        let graph = test_graph();
        let spec = DistrictBuilding {
            footprint: Polygon::new(vec![
                Point::new(40.0, 20.0),
                Point::new(60.0, 20.0),
                Point::new(60.0, 40.0),
                Point::new(40.0, 40.0),
            ])
            .unwrap(),
            storeys: 3,
            apartments: 10,
        };
        let buildings = vec![Building::new(BuildingId(0), &spec, &graph)];

        let mut cfg = ScenarioConfig::default();
        cfg.people_in_buildings = 100.0;
        let mut pop_rng = StreamRng::seed_from_u64(3);
        let mut beh_rng = StreamRng::seed_from_u64(4);
        let (agents, occupants) =
            populate(&buildings, &graph, &cfg, &mut pop_rng, &mut beh_rng).unwrap();
        assert_eq!(occupants, vec![38]);
        assert_eq!(agents.len(), 38);
        assert!(agents
            .iter()
            .all(|a| matches!(a.place, Place::InBuilding(BuildingId(0)))));

        // All class 2 → everyone is a stayer.
        cfg.behaviour_distribution = [0.0, 1.0, 0.0, 0.0, 0.0, 0.0];
        let mut pop_rng = StreamRng::seed_from_u64(3);
        let mut beh_rng = StreamRng::seed_from_u64(4);
        let (agents, _) =
            populate(&buildings, &graph, &cfg, &mut pop_rng, &mut beh_rng).unwrap();
        assert!(agents.iter().all(|a| a.is_stayer()));
    }

    #[test]
    fn populate_rejects_empty_district() {
        let graph = test_graph();
        let cfg = ScenarioConfig::default();
        let mut a = StreamRng::seed_from_u64(0);
        let mut b = StreamRng::seed_from_u64(0);
        assert_eq!(
            populate(&[], &graph, &cfg, &mut a, &mut b).unwrap_err(),
            WorldError::EmptyDistrict
        );
    }

    #[test]
    fn safe_places_cover_greens_and_hull_exits() {
        let d = generate_synthetic(&SyntheticParams {
            blocks: 3,
            green_fraction: 0.2, // floor(0.2 * 9) = 1 green block
            seed: 12,
            ..Default::default()
        })
        .unwrap();
        let graph = build_graph(&d.streets, 0.5).unwrap();
        let greens: Vec<GreenSpace> = d
            .green_spaces
            .iter()
            .enumerate()
            .map(|(i, g)| GreenSpace {
                id: i as u32,
                footprint: g.clone(),
            })
            .collect();
        let places = collect_safe_places(&graph, &greens);
        let greens_count = places
            .iter()
            .filter(|p| p.kind == SafePlaceKind::Green)
            .count();
        let exits: Vec<&SafePlace> = places
            .iter()
            .filter(|p| p.kind == SafePlaceKind::CityExit)
            .collect();
        assert_eq!(greens_count, 1);
        // 3x3 grid: 12 perimeter intersections.
        assert_eq!(exits.len(), 12);
    }
}
