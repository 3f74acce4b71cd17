//! Street network: an undirected weighted graph built from street
//! centerlines, per-agent belief overlays, and deterministic shortest-path
//! routing.
//!
//! Blocking is encoded as weight, not removal: a street an agent knows to be
//! blocked carries [`BLOCKED_WEIGHT`], so a route always exists as long as
//! the topology is connected. Ties between equal-cost routes are broken
//! toward the smaller next-node id, which makes routing reproducible
//! byte-for-byte.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{distance, segment_point_distance, Point, Polyline};
use crate::scalar::Real;

/// Weight of a street known to be blocked. District diameters are well
/// under 1e4 m, so a single blocked edge dominates any detour.
pub const BLOCKED_WEIGHT: f64 = 1e9;

pub fn blocked_weight<R: Real>() -> R {
    R::from_f64(BLOCKED_WEIGHT).unwrap()
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NetworkError {
    #[error("node {0:?} is not in the graph")]
    InvalidNode(NodeId),
    #[error("street {index} collapses to a single intersection")]
    DegenerateStreet { index: usize },
    #[error("graph has no streets")]
    EmptyGraph,
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct NodeId(pub u32);

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct EdgeId(pub u32);

impl NodeId {
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

impl EdgeId {
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Node<R> {
    pub id: NodeId,
    pub position: Point<R>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Edge<R> {
    pub id: EdgeId,
    pub endpoints: (NodeId, NodeId),
    pub geometry: Polyline<R>,
    pub length: R,
    /// Ground truth set once by the quake's street-damage pass.
    pub blocked: bool,
}

impl<R: Real> Edge<R> {
    pub fn other_endpoint(&self, n: NodeId) -> NodeId {
        if self.endpoints.0 == n {
            self.endpoints.1
        } else {
            self.endpoints.0
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StreetGraph<R> {
    nodes: Vec<Node<R>>,
    edges: Vec<Edge<R>>,
    adjacency: Vec<Vec<(EdgeId, NodeId)>>,
}

impl<R: Real> StreetGraph<R> {
    pub fn nodes(&self) -> &[Node<R>] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge<R>] {
        &self.edges
    }

    pub fn node(&self, id: NodeId) -> &Node<R> {
        &self.nodes[id.idx()]
    }

    pub fn edge(&self, id: EdgeId) -> &Edge<R> {
        &self.edges[id.idx()]
    }

    pub fn neighbors(&self, n: NodeId) -> &[(EdgeId, NodeId)] {
        &self.adjacency[n.idx()]
    }

    pub fn set_blocked(&mut self, e: EdgeId) {
        self.edges[e.idx()].blocked = true;
    }

    fn check_node(&self, n: NodeId) -> Result<(), NetworkError> {
        if n.idx() < self.nodes.len() {
            Ok(())
        } else {
            Err(NetworkError::InvalidNode(n))
        }
    }
}

/// One agent's private view of the street weights. Unmarked edges weigh
/// their length; marked edges weigh [`BLOCKED_WEIGHT`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BeliefOverlay {
    blocked: BTreeSet<EdgeId>,
}

impl BeliefOverlay {
    pub fn weight<R: Real>(&self, graph: &StreetGraph<R>, e: EdgeId) -> R {
        if self.blocked.contains(&e) {
            blocked_weight()
        } else {
            graph.edge(e).length
        }
    }

    /// Idempotent.
    pub fn mark_blocked(&mut self, e: EdgeId) {
        self.blocked.insert(e);
    }

    pub fn is_blocked(&self, e: EdgeId) -> bool {
        self.blocked.contains(&e)
    }

    pub fn blocked_edges(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.blocked.iter().copied()
    }
}

/// Continuous position on the network: on `edge`, `offset` meters past the
/// travel-origin node, moving toward `heading`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphPosition<R> {
    pub edge: EdgeId,
    pub offset: R,
    pub heading: NodeId,
}

impl<R: Real> GraphPosition<R> {
    /// Standing at `node`, about to travel along `edge` away from it.
    pub fn at_node(graph: &StreetGraph<R>, edge: EdgeId, node: NodeId) -> GraphPosition<R> {
        let e = graph.edge(edge);
        GraphPosition {
            edge,
            offset: R::zero(),
            heading: e.other_endpoint(node),
        }
    }

    pub fn origin(&self, graph: &StreetGraph<R>) -> NodeId {
        graph.edge(self.edge).other_endpoint(self.heading)
    }

    pub fn remaining(&self, graph: &StreetGraph<R>) -> R {
        graph.edge(self.edge).length - self.offset
    }

    pub fn point(&self, graph: &StreetGraph<R>) -> Point<R> {
        let e = graph.edge(self.edge);
        let arc = if self.heading == e.endpoints.1 {
            self.offset
        } else {
            e.length - self.offset
        };
        e.geometry.point_at(arc)
    }

    /// Turns around in place.
    pub fn reversed(&self, graph: &StreetGraph<R>) -> GraphPosition<R> {
        let e = graph.edge(self.edge);
        GraphPosition {
            edge: self.edge,
            offset: e.length - self.offset,
            heading: e.other_endpoint(self.heading),
        }
    }
}

/// A planned path: `nodes` has one more entry than `edges`, and
/// `edges[i]` joins `nodes[i]` to `nodes[i+1]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Route {
    pub nodes: Vec<NodeId>,
    pub edges: Vec<EdgeId>,
}

impl Route {
    pub fn target(&self) -> NodeId {
        *self.nodes.last().unwrap()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Belief-weighted cost, summed from origin to target.
    pub fn cost<R: Real>(&self, graph: &StreetGraph<R>, overlay: &BeliefOverlay) -> R {
        self.edges
            .iter()
            .fold(R::zero(), |acc, &e| acc + overlay.weight(graph, e))
    }
}

/// Builds the street graph from centerlines. Endpoints within
/// `snap_tolerance` merge into one node; nodes are numbered in order of
/// first appearance, edges in input order.
pub fn build_graph<R: Real>(
    streets: &[Polyline<R>],
    snap_tolerance: R,
) -> Result<StreetGraph<R>, NetworkError> {
    if streets.is_empty() {
        return Err(NetworkError::EmptyGraph);
    }
    let mut nodes: Vec<Node<R>> = Vec::new();
    let mut snap_grid: HashMap<(i64, i64), Vec<u32>> = HashMap::new();
    let cell = if snap_tolerance > R::zero() {
        snap_tolerance
    } else {
        R::from_f64(1e-9).unwrap()
    };
    let key = |p: Point<R>| -> (i64, i64) {
        (
            (p.x / cell).floor().to_i64().unwrap(),
            (p.y / cell).floor().to_i64().unwrap(),
        )
    };
    let mut node_for = |p: Point<R>, nodes: &mut Vec<Node<R>>| -> NodeId {
        let (kx, ky) = key(p);
        for gx in (kx - 1)..=(kx + 1) {
            for gy in (ky - 1)..=(ky + 1) {
                if let Some(ids) = snap_grid.get(&(gx, gy)) {
                    for &i in ids {
                        if distance(nodes[i as usize].position, p) <= snap_tolerance {
                            return NodeId(i);
                        }
                    }
                }
            }
        }
        let id = NodeId(nodes.len() as u32);
        nodes.push(Node { id, position: p });
        snap_grid.entry((kx, ky)).or_default().push(id.0);
        id
    };

    let mut edges: Vec<Edge<R>> = Vec::with_capacity(streets.len());
    for (index, street) in streets.iter().enumerate() {
        let a = node_for(street.first(), &mut nodes);
        let b = node_for(street.last(), &mut nodes);
        if a == b {
            return Err(NetworkError::DegenerateStreet { index });
        }
        edges.push(Edge {
            id: EdgeId(edges.len() as u32),
            endpoints: (a, b),
            geometry: street.clone(),
            length: street.length(),
            blocked: false,
        });
    }

    let mut adjacency = vec![Vec::new(); nodes.len()];
    for e in &edges {
        adjacency[e.endpoints.0.idx()].push((e.id, e.endpoints.1));
        adjacency[e.endpoints.1.idx()].push((e.id, e.endpoints.0));
    }
    Ok(StreetGraph {
        nodes,
        edges,
        adjacency,
    })
}

struct HeapState<R> {
    cost: R,
    node: NodeId,
}

impl<R: Real> PartialEq for HeapState<R> {
    fn eq(&self, other: &Self) -> bool {
        self.cost == other.cost && self.node == other.node
    }
}
impl<R: Real> Eq for HeapState<R> {}
impl<R: Real> Ord for HeapState<R> {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed: BinaryHeap pops the smallest (cost, node) first.
        other
            .cost
            .partial_cmp(&self.cost)
            .unwrap_or(Ordering::Equal)
            .then(other.node.cmp(&self.node))
    }
}
impl<R: Real> PartialOrd for HeapState<R> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Belief-weighted distance from `source` to every node
/// (`R::infinity()` where unreachable).
pub fn distances_from<R: Real>(
    graph: &StreetGraph<R>,
    overlay: &BeliefOverlay,
    source: NodeId,
) -> Vec<R> {
    let mut dist = vec![R::infinity(); graph.nodes().len()];
    let mut heap = BinaryHeap::new();
    dist[source.idx()] = R::zero();
    heap.push(HeapState {
        cost: R::zero(),
        node: source,
    });
    while let Some(HeapState { cost, node }) = heap.pop() {
        if cost > dist[node.idx()] {
            continue;
        }
        for &(e, next) in graph.neighbors(node) {
            let c = cost + overlay.weight(graph, e);
            if c < dist[next.idx()] {
                dist[next.idx()] = c;
                heap.push(HeapState { cost: c, node: next });
            }
        }
    }
    dist
}

/// Walks the lexicographically smallest shortest path from `from` given the
/// distances-to-target table; at every step it takes the smallest next-node
/// id (then the smallest edge id) still on a shortest path.
fn walk_route<R: Real>(
    graph: &StreetGraph<R>,
    overlay: &BeliefOverlay,
    dist_to_target: &[R],
    from: NodeId,
) -> Route {
    let mut nodes = vec![from];
    let mut edges = Vec::new();
    let mut at = from;
    while dist_to_target[at.idx()] > R::zero() {
        let mut best: Option<(NodeId, EdgeId)> = None;
        for &(e, next) in graph.neighbors(at) {
            let w = overlay.weight(graph, e);
            if w + dist_to_target[next.idx()] == dist_to_target[at.idx()] {
                let better = match best {
                    None => true,
                    Some((bn, be)) => (next, e) < (bn, be),
                };
                if better {
                    best = Some((next, e));
                }
            }
        }
        let (next, e) = best.expect("distance table inconsistent with graph");
        nodes.push(next);
        edges.push(e);
        at = next;
    }
    Route { nodes, edges }
}

/// Shortest path under the overlay, or `None` when the topology itself is
/// disconnected. Known-blocked edges stay traversable at huge cost.
pub fn shortest_path<R: Real>(
    graph: &StreetGraph<R>,
    overlay: &BeliefOverlay,
    from: NodeId,
    to: NodeId,
) -> Result<Option<Route>, NetworkError> {
    graph.check_node(from)?;
    graph.check_node(to)?;
    if from == to {
        return Ok(Some(Route {
            nodes: vec![from],
            edges: Vec::new(),
        }));
    }
    let dist = distances_from(graph, overlay, to);
    if dist[from.idx()].is_infinite() {
        return Ok(None);
    }
    Ok(Some(walk_route(graph, overlay, &dist, from)))
}

/// Route from a mid-edge position: picks the cheaper edge endpoint (ties to
/// the smaller node id), returns the position with its heading fixed plus
/// the route onward from that endpoint.
pub fn plan_from_position<R: Real>(
    graph: &StreetGraph<R>,
    overlay: &BeliefOverlay,
    pos: &GraphPosition<R>,
    target: NodeId,
) -> Result<Option<(GraphPosition<R>, Route)>, NetworkError> {
    graph.check_node(target)?;
    let dist = distances_from(graph, overlay, target);
    Ok(plan_with_distances(graph, overlay, pos, &dist))
}

/// Same as [`plan_from_position`] with a precomputed distances-to-target
/// table (must come from `distances_from` under the same overlay).
pub fn plan_with_distances<R: Real>(
    graph: &StreetGraph<R>,
    overlay: &BeliefOverlay,
    pos: &GraphPosition<R>,
    dist_to_target: &[R],
) -> Option<(GraphPosition<R>, Route)> {
    let origin = pos.origin(graph);
    let heading = pos.heading;
    let via_origin = pos.offset + dist_to_target[origin.idx()];
    let via_heading = pos.remaining(graph) + dist_to_target[heading.idx()];
    if via_origin.is_infinite() && via_heading.is_infinite() {
        return None;
    }
    let entry = match via_origin.partial_cmp(&via_heading).unwrap() {
        Ordering::Less => origin,
        Ordering::Greater => heading,
        Ordering::Equal => origin.min(heading),
    };
    let new_pos = if entry == heading {
        *pos
    } else {
        pos.reversed(graph)
    };
    Some((new_pos, walk_route(graph, overlay, dist_to_target, entry)))
}

/// Nearest point on any edge geometry; ties go to the smaller edge id.
pub fn project_to_graph<R: Real>(graph: &StreetGraph<R>, p: Point<R>) -> GraphPosition<R> {
    let mut best: Option<(R, EdgeId, R)> = None;
    for e in graph.edges() {
        let mut arc_start = R::zero();
        for (a, b) in e.geometry.segments() {
            let seg = distance(a, b);
            let d = segment_point_distance(a, b, p);
            if best.map_or(true, |(bd, _, _)| d < bd) {
                // Arc offset of the projection within this segment.
                let abx = b.x - a.x;
                let aby = b.y - a.y;
                let len2 = abx * abx + aby * aby;
                let t = (((p.x - a.x) * abx + (p.y - a.y) * aby) / len2)
                    .max(R::zero())
                    .min(R::one());
                best = Some((d, e.id, arc_start + t * seg));
            }
            arc_start = arc_start + seg;
        }
    }
    let (_, edge, arc) = best.expect("graph has no edges");
    GraphPosition {
        edge,
        offset: arc,
        heading: graph.edge(edge).endpoints.1,
    }
}

/// Nearest graph node by straight-line distance; ties to the smaller id.
pub fn nearest_node<R: Real>(graph: &StreetGraph<R>, p: Point<R>) -> NodeId {
    let mut best = (R::infinity(), NodeId(0));
    for n in graph.nodes() {
        let d = distance(n.position, p);
        if d < best.0 {
            best = (d, n.id);
        }
    }
    best.1
}
