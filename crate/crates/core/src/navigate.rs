//! Floor graph routing and turn-by-turn instructions.
//!
//! Graph file schema (JSON):
//!
//! ```json
//! {
//!   "nodes": [
//!     {"id": 0, "kind": "department", "department_id": 3, "name": "Reception",
//!      "floor": 0, "x": 5.0, "y": -4.0},
//!     {"id": 1000, "kind": "waypoint", "floor": 0, "x": 5.0, "y": 0.0}
//!   ],
//!   "edges": [{"a": 0, "b": 1000, "length": 4.0, "label": "Reception entrance"}]
//! }
//! ```
//!
//! Edges are undirected. Coordinates are metres with `x` east and `y` north.
//! Edges touching a department node are doorways: they never produce a turn
//! of their own, and the last one decides on which side the destination is.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const TURN_THRESHOLD_DEG: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Department,
    Waypoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: u32,
    pub kind: NodeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub department_id: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub floor: i32,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub a: u32,
    pub b: u32,
    pub length: f64,
    pub label: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphFile {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
}

/// Validated, indexed floor graph. Read-only after construction.
#[derive(Debug, Clone)]
pub struct FloorGraph {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    index: HashMap<u32, usize>,
    /// Per node index: (neighbour index, edge index), sorted by neighbour id.
    adjacency: Vec<Vec<(usize, usize)>>,
    departments: HashMap<usize, usize>,
}

impl FloorGraph {
    pub fn new(file: GraphFile) -> Result<Self> {
        let GraphFile { nodes, edges } = file;
        let mut index = HashMap::with_capacity(nodes.len());
        let mut departments = HashMap::new();
        for (i, n) in nodes.iter().enumerate() {
            if index.insert(n.id, i).is_some() {
                return Err(Error::Data(format!("duplicate node id {}", n.id)));
            }
            match (n.kind, n.department_id) {
                (NodeKind::Department, Some(d)) => {
                    if departments.insert(d, i).is_some() {
                        return Err(Error::Data(format!("department {d} mapped to more than one node")));
                    }
                }
                (NodeKind::Department, None) => {
                    return Err(Error::Data(format!("department node {} has no department_id", n.id)));
                }
                (NodeKind::Waypoint, _) => {}
            }
        }
        let mut adjacency = vec![Vec::new(); nodes.len()];
        for (k, e) in edges.iter().enumerate() {
            if !(e.length > 0.0 && e.length.is_finite()) {
                return Err(Error::Data(format!("edge {}-{} has non-positive length {}", e.a, e.b, e.length)));
            }
            let a = *index.get(&e.a).ok_or(Error::UnknownNode(e.a))?;
            let b = *index.get(&e.b).ok_or(Error::UnknownNode(e.b))?;
            adjacency[a].push((b, k));
            adjacency[b].push((a, k));
        }
        for adj in &mut adjacency {
            adj.sort_by_key(|&(v, k)| (nodes[v].id, k));
        }
        Ok(Self {
            nodes,
            edges,
            index,
            adjacency,
            departments,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::new(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_json(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    /// The demo map shipped with the crate.
    pub fn demo() -> Self {
        Self::from_json(crate::DEMO_FLOOR_MAP).expect("shipped floor map is valid")
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node(&self, id: u32) -> Result<&Node> {
        self.index.get(&id).map(|&i| &self.nodes[i]).ok_or(Error::UnknownNode(id))
    }

    pub fn department_node(&self, department: usize) -> Result<u32> {
        self.departments
            .get(&department)
            .map(|&i| self.nodes[i].id)
            .ok_or(Error::UnknownDepartment(department))
    }

    fn edge_between(&self, a: usize, b: usize) -> Option<&Edge> {
        self.adjacency[a]
            .iter()
            .filter(|&&(v, _)| v == b)
            .map(|&(_, k)| &self.edges[k])
            .min_by(|x, y| x.length.total_cmp(&y.length))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Route {
    pub nodes: Vec<u32>,
    pub length: f64,
}

#[derive(Clone, Copy, PartialEq)]
struct Frontier(f64, usize);

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn same_length(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// Dijkstra from the destination, then a greedy walk from the origin that
/// always steps to the smallest-id neighbour still on a shortest path. The
/// result is the lexicographically smallest node-id sequence among all
/// shortest routes.
pub fn shortest_path(graph: &FloorGraph, from: u32, to: u32) -> Result<Route> {
    let src = *graph.index.get(&from).ok_or(Error::UnknownNode(from))?;
    let dst = *graph.index.get(&to).ok_or(Error::UnknownNode(to))?;
    let mut dist = vec![f64::INFINITY; graph.nodes.len()];
    dist[dst] = 0.0;
    let mut heap = BinaryHeap::from([Frontier(0.0, dst)]);
    while let Some(Frontier(d, u)) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &(v, k) in &graph.adjacency[u] {
            let nd = d + graph.edges[k].length;
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(Frontier(nd, v));
            }
        }
    }
    if !dist[src].is_finite() {
        return Err(Error::NoRoute { from, to });
    }
    let mut path = vec![from];
    let mut u = src;
    while u != dst {
        let next = graph.adjacency[u]
            .iter()
            .find(|&&(v, k)| same_length(dist[u], graph.edges[k].length + dist[v]))
            .map(|&(v, _)| v)
            .expect("a shortest-path successor exists");
        path.push(graph.nodes[next].id);
        u = next;
    }
    Ok(Route {
        nodes: path,
        length: dist[src],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Action {
    Start,
    Walk,
    TurnLeft,
    TurnRight,
    Arrive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
    Ahead,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub action: Action,
    pub label: String,
    pub distance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side: Option<Side>,
}

impl Step {
    fn new(action: Action, label: impl Into<String>, distance: f64) -> Self {
        Self {
            action,
            label: label.into(),
            distance,
            side: None,
        }
    }

    pub fn sentence(&self) -> String {
        match self.action {
            Action::Start => format!("Start at {}.", self.label),
            Action::Walk => format!("Walk along {} for {:.0} m.", self.label, self.distance),
            Action::TurnLeft => format!("Turn left into {}.", self.label),
            Action::TurnRight => format!("Turn right into {}.", self.label),
            Action::Arrive => match self.side {
                Some(Side::Left) => format!("{} is on your left.", self.label),
                Some(Side::Right) => format!("{} is on your right.", self.label),
                _ => format!("You have arrived at {}.", self.label),
            },
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InstructionList {
    pub steps: Vec<Step>,
}

impl InstructionList {
    pub fn walked(&self) -> f64 {
        self.steps.iter().filter(|s| s.action == Action::Walk).map(|s| s.distance).sum()
    }

    pub fn narrate(&self) -> String {
        self.steps.iter().map(Step::sentence).collect::<Vec<_>>().join(" ")
    }
}

/// Signed angle from `a` to `b` in degrees, counter-clockwise (left) positive.
fn signed_angle(a: (f64, f64), b: (f64, f64)) -> f64 {
    let cross = a.0 * b.1 - a.1 * b.0;
    let dot = a.0 * b.0 + a.1 * b.1;
    cross.atan2(dot).to_degrees()
}

fn side_of(angle: f64) -> Side {
    if angle > TURN_THRESHOLD_DEG {
        Side::Left
    } else if angle < -TURN_THRESHOLD_DEG {
        Side::Right
    } else {
        Side::Ahead
    }
}

fn display_name(node: &Node) -> String {
    node.name.clone().unwrap_or_else(|| format!("node {}", node.id))
}

/// Turn a node path into steps: start, walks merged along straight runs of
/// one corridor, turns where the heading changes by more than 30 degrees,
/// and arrive.
pub fn render_instructions(graph: &FloorGraph, path: &[u32]) -> Result<InstructionList> {
    let idx: Vec<usize> = path
        .iter()
        .map(|id| graph.index.get(id).copied().ok_or(Error::UnknownNode(*id)))
        .collect::<Result<_>>()?;
    let Some((&first, &last)) = idx.first().zip(idx.last()) else {
        return Err(Error::InvalidArgument("empty path".into()));
    };
    let mut steps = vec![Step::new(Action::Start, display_name(&graph.nodes[first]), 0.0)];
    let mut arrive = Step::new(Action::Arrive, display_name(&graph.nodes[last]), 0.0);

    let n_edges = idx.len() - 1;
    let mut heading: Option<(f64, f64)> = None;
    // Distance not yet narrated, and the corridor it belongs to. Doorway
    // distance rides along with the next corridor walk.
    let mut run = 0.0;
    let mut run_label: Option<String> = None;

    for k in 0..n_edges {
        let (u, v) = (&graph.nodes[idx[k]], &graph.nodes[idx[k + 1]]);
        let edge = graph
            .edge_between(idx[k], idx[k + 1])
            .ok_or_else(|| Error::InvalidArgument(format!("nodes {} and {} are not adjacent", u.id, v.id)))?;
        let doorway = u.kind == NodeKind::Department || v.kind == NodeKind::Department;
        let planar = (v.x - u.x, v.y - u.y);
        let bearing = (planar.0 != 0.0 || planar.1 != 0.0).then_some(planar);

        if doorway && k == n_edges - 1 && k > 0 {
            run += edge.length;
            if let (Some(h), Some(b)) = (heading, bearing) {
                arrive.side = Some(side_of(signed_angle(h, b)));
            }
            continue;
        }

        let turn = match (heading, bearing) {
            (Some(h), Some(b)) if !doorway => match side_of(signed_angle(h, b)) {
                Side::Left => Some(Action::TurnLeft),
                Side::Right => Some(Action::TurnRight),
                Side::Ahead => None,
            },
            _ => None,
        };
        let relabel = !doorway && run_label.as_deref().is_some_and(|l| l != edge.label);
        if turn.is_some() || relabel {
            if let Some(label) = run_label.take() {
                steps.push(Step::new(Action::Walk, label, run));
                run = 0.0;
            }
        }
        if let Some(action) = turn {
            steps.push(Step::new(action, edge.label.clone(), 0.0));
        }
        run += edge.length;
        if !doorway {
            run_label = Some(edge.label.clone());
        }
        if u.floor != v.floor {
            // facing is unknown after changing floors
            heading = None;
        } else if bearing.is_some() {
            heading = bearing;
        }
    }
    if run > 0.0 {
        let label = run_label.unwrap_or_else(|| "the corridor".into());
        steps.push(Step::new(Action::Walk, label, run));
    }
    steps.push(arrive);
    Ok(InstructionList { steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn wp(id: u32, x: f64, y: f64) -> Node {
        Node {
            id,
            kind: NodeKind::Waypoint,
            department_id: None,
            name: None,
            floor: 0,
            x,
            y,
        }
    }

    fn edge(a: u32, b: u32, length: f64, label: &str) -> Edge {
        Edge {
            a,
            b,
            length,
            label: label.into(),
        }
    }

    fn graph(nodes: Vec<Node>, edges: Vec<Edge>) -> FloorGraph {
        FloorGraph::new(GraphFile { nodes, edges }).unwrap()
    }

    #[test]
    fn triangle_prefers_two_short_edges() {
        let g = graph(
            vec![wp(0, 0.0, 0.0), wp(1, 1.0, 0.0), wp(2, 2.0, 0.0)],
            vec![edge(0, 1, 1.0, "a"), edge(1, 2, 1.0, "a"), edge(0, 2, 3.0, "b")],
        );
        let r = shortest_path(&g, 0, 2).unwrap();
        assert_eq!(r.nodes, vec![0, 1, 2]);
        assert_eq!(r.length, 2.0);
    }

    #[test]
    fn same_origin_and_destination() {
        let g = graph(vec![wp(0, 0.0, 0.0), wp(1, 1.0, 0.0)], vec![edge(0, 1, 1.0, "a")]);
        let r = shortest_path(&g, 1, 1).unwrap();
        assert_eq!((r.nodes.clone(), r.length), (vec![1], 0.0));
        let steps = render_instructions(&g, &r.nodes).unwrap().steps;
        assert_eq!(steps.iter().map(|s| s.action).collect::<Vec<_>>(), [Action::Start, Action::Arrive]);
    }

    #[test]
    fn ties_take_smallest_ids() {
        // square: 0-1-3 and 0-2-3 both length 2
        let g = graph(
            vec![wp(0, 0.0, 0.0), wp(2, 0.0, 1.0), wp(1, 1.0, 0.0), wp(3, 1.0, 1.0)],
            vec![edge(0, 2, 1.0, "a"), edge(2, 3, 1.0, "a"), edge(0, 1, 1.0, "a"), edge(1, 3, 1.0, "a")],
        );
        assert_eq!(shortest_path(&g, 0, 3).unwrap().nodes, vec![0, 1, 3]);
    }

    #[test]
    fn disconnected_and_unknown() {
        let g = graph(vec![wp(0, 0.0, 0.0), wp(1, 1.0, 0.0)], vec![]);
        assert!(matches!(shortest_path(&g, 0, 1), Err(Error::NoRoute { .. })));
        assert!(matches!(shortest_path(&g, 0, 9), Err(Error::UnknownNode(9))));
    }

    #[test]
    fn invalid_graphs_rejected() {
        let bad = GraphFile { nodes: vec![wp(0, 0.0, 0.0), wp(1, 0.0, 0.0)], edges: vec![edge(0, 1, 0.0, "a")] };
        assert!(FloorGraph::new(bad).is_err());
        let dup = GraphFile { nodes: vec![wp(0, 0.0, 0.0), wp(0, 0.0, 0.0)], edges: vec![] };
        assert!(FloorGraph::new(dup).is_err());
        let dangling = GraphFile { nodes: vec![wp(0, 0.0, 0.0)], edges: vec![edge(0, 5, 1.0, "a")] };
        assert!(FloorGraph::new(dangling).is_err());
    }

    #[test]
    fn collinear_edges_merge() {
        let g = graph(
            vec![wp(0, 0.0, 0.0), wp(1, 10.0, 0.0), wp(2, 20.0, 0.0)],
            vec![edge(0, 1, 10.0, "hall"), edge(1, 2, 10.0, "hall")],
        );
        let steps = render_instructions(&g, &[0, 1, 2]).unwrap().steps;
        assert_eq!(steps.len(), 3);
        assert_eq!(steps[1], Step::new(Action::Walk, "hall", 20.0));
    }

    #[test]
    fn shallow_bend_is_not_a_turn() {
        let g = graph(
            vec![wp(0, 0.0, 0.0), wp(1, 10.0, 0.0), wp(2, 20.0, 5.0), wp(3, 20.0, 15.0)],
            vec![edge(0, 1, 10.0, "hall"), edge(1, 2, 11.0, "hall"), edge(2, 3, 10.0, "hall")],
        );
        let actions: Vec<Action> = render_instructions(&g, &[0, 1, 2, 3]).unwrap().steps.iter().map(|s| s.action).collect();
        assert_eq!(actions, [Action::Start, Action::Walk, Action::TurnLeft, Action::Walk, Action::Arrive]);
    }

    fn brute_force(g: &FloorGraph, u: usize, dst: usize, seen: &mut Vec<bool>, acc: f64, best: &mut f64) {
        if u == dst {
            *best = best.min(acc);
            return;
        }
        seen[u] = true;
        for &(v, k) in &g.adjacency[u] {
            if !seen[v] {
                brute_force(g, v, dst, seen, acc + g.edges[k].length, best);
            }
        }
        seen[u] = false;
    }

    fn random_graph() -> impl Strategy<Value = GraphFile> {
        (2usize..=8).prop_flat_map(|n| {
            let coords = proptest::collection::vec((-50i32..50, -50i32..50), n);
            let edges = proptest::collection::vec((0..n as u32, 0..n as u32, 1u32..20), 0..n * 2);
            (coords, edges).prop_map(|(coords, edges)| GraphFile {
                nodes: coords.iter().enumerate().map(|(i, &(x, y))| wp(i as u32, x as f64, y as f64)).collect(),
                edges: edges
                    .into_iter()
                    .filter(|(a, b, _)| a != b)
                    .map(|(a, b, w)| edge(a, b, w as f64, if w % 2 == 0 { "even" } else { "odd" }))
                    .collect(),
            })
        })
    }

    proptest! {
        #[test]
        fn dijkstra_matches_enumeration(file in random_graph(), s in 0u32..8, t in 0u32..8) {
            let n = file.nodes.len() as u32;
            let (s, t) = (s % n, t % n);
            let g = FloorGraph::new(file).unwrap();
            let mut best = f64::INFINITY;
            brute_force(&g, s as usize, t as usize, &mut vec![false; n as usize], 0.0, &mut best);
            match shortest_path(&g, s, t) {
                Ok(r) => {
                    prop_assert!((r.length - best).abs() < 1e-9);
                    let walked = render_instructions(&g, &r.nodes).unwrap().walked();
                    prop_assert!((walked - r.length).abs() < 1e-9);
                }
                Err(Error::NoRoute { .. }) => prop_assert!(best.is_infinite()),
                Err(e) => prop_assert!(false, "{e}"),
            }
        }
    }
}
