use std::collections::VecDeque;

use crate::error::{Error, Result};

use super::metric::{MetricPoint, MetricSpace};

/// Stations are numbered `0..n`; the id doubles as the index into every
/// per-station vector in the crate.
pub type StationId = usize;

#[derive(Debug, Clone, PartialEq)]
pub struct Station {
    pub id: StationId,
    pub position: MetricPoint,
}

/// Adjacency plus the graph statistics derived from it.
#[derive(Debug, Clone, PartialEq)]
pub struct CommGraph {
    pub adjacency: Vec<Vec<StationId>>,
    /// `None` when the graph is disconnected.
    pub diameter: Option<u32>,
    pub components: usize,
    /// Longest edge over shortest edge; 1 for edgeless graphs.
    pub granularity: f64,
}

/// Embedded stations together with their communication graph: an edge joins
/// two stations at distance at most `1 - epsilon`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkTopology {
    space: MetricSpace,
    epsilon: f64,
    stations: Vec<Station>,
    graph: CommGraph,
}

impl NetworkTopology {
    /// Builds a topology from positions listed in id order.
    pub fn new(space: MetricSpace, epsilon: f64, positions: Vec<MetricPoint>) -> Result<Self> {
        let stations: Vec<Station> = positions
            .into_iter()
            .enumerate()
            .map(|(id, position)| Station { id, position })
            .collect();
        let graph = build_comm_graph(&stations, space, epsilon)?;
        Ok(NetworkTopology {
            space,
            epsilon,
            stations,
            graph,
        })
    }

    pub fn space(&self) -> MetricSpace {
        self.space
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn len(&self) -> usize {
        self.stations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stations.is_empty()
    }

    pub fn stations(&self) -> &[Station] {
        &self.stations
    }

    pub fn position(&self, id: StationId) -> &MetricPoint {
        &self.stations[id].position
    }

    pub fn graph(&self) -> &CommGraph {
        &self.graph
    }

    pub fn neighbors(&self, id: StationId) -> &[StationId] {
        &self.graph.adjacency[id]
    }

    pub fn diameter(&self) -> Option<u32> {
        self.graph.diameter
    }

    pub fn is_connected(&self) -> bool {
        self.graph.diameter.is_some()
    }

    pub fn granularity(&self) -> f64 {
        self.graph.granularity
    }

    /// Distance between two stations by id.
    pub fn distance(&self, a: StationId, b: StationId) -> f64 {
        self.space
            .dist_unchecked(&self.stations[a].position, &self.stations[b].position)
    }

    /// Stations inside the closed ball of `radius` around station `center`.
    pub fn ball_around(&self, center: StationId, radius: f64) -> Result<Vec<StationId>> {
        if center >= self.len() {
            return Err(Error::invalid(format!("unknown station {center}")));
        }
        ball_members(self, &self.stations[center].position, radius)
    }

    /// Fails with the component count unless the graph is connected.
    pub fn require_connected(&self) -> Result<()> {
        if self.is_connected() {
            Ok(())
        } else {
            Err(Error::TopologyDisconnected {
                components: self.graph.components,
            })
        }
    }

    /// Fails when two stations share a position.
    pub fn require_distinct_positions(&self) -> Result<()> {
        for a in 0..self.len() {
            for b in a + 1..self.len() {
                if self.distance(a, b) == 0.0 {
                    return Err(Error::DegenerateGeometry { a, b });
                }
            }
        }
        Ok(())
    }
}

/// Closed-ball membership `{ w : dist(center, w) <= radius }`.
pub fn ball_members(topology: &NetworkTopology, center: &MetricPoint, radius: f64) -> Result<Vec<StationId>> {
    if !(radius >= 0.0) {
        return Err(Error::invalid(format!("ball radius must be nonnegative, got {radius}")));
    }
    let space = topology.space();
    let mut members = Vec::new();
    for station in topology.stations() {
        if space.dist(center, &station.position)? <= radius {
            members.push(station.id);
        }
    }
    Ok(members)
}

/// Communication graph for `stations` under the closed threshold
/// `dist <= 1 - epsilon`, with diameter by BFS from every node.
pub fn build_comm_graph(stations: &[Station], space: MetricSpace, epsilon: f64) -> Result<CommGraph> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::invalid(format!("epsilon must lie in (0,1), got {epsilon}")));
    }
    for (index, station) in stations.iter().enumerate() {
        if station.id != index {
            return Err(Error::invalid(format!(
                "station ids must be 0..n in order; found {} at position {index}",
                station.id
            )));
        }
        if station.position.dimension() != space.embedding_dimension() {
            return Err(Error::DimensionMismatch {
                expected: space.embedding_dimension(),
                found: station.position.dimension(),
            });
        }
    }

    let reach = 1.0 - epsilon;
    let n = stations.len();
    let mut adjacency = vec![Vec::new(); n];
    let mut shortest = f64::INFINITY;
    let mut longest: f64 = 0.0;
    for a in 0..n {
        for b in a + 1..n {
            let d = space.dist_unchecked(&stations[a].position, &stations[b].position);
            if d <= reach {
                adjacency[a].push(b);
                adjacency[b].push(a);
                shortest = shortest.min(d);
                longest = longest.max(d);
            }
        }
    }
    let granularity = if longest > 0.0 && shortest > 0.0 {
        longest / shortest
    } else {
        1.0
    };

    let (diameter, components) = diameter_and_components(&adjacency);
    Ok(CommGraph {
        adjacency,
        diameter,
        components,
        granularity,
    })
}

fn diameter_and_components(adjacency: &[Vec<StationId>]) -> (Option<u32>, usize) {
    let n = adjacency.len();
    if n == 0 {
        return (Some(0), 0);
    }
    let mut component = vec![usize::MAX; n];
    let mut components = 0;
    for start in 0..n {
        if component[start] != usize::MAX {
            continue;
        }
        for (node, _) in bfs(adjacency, start) {
            component[node] = components;
        }
        components += 1;
    }
    if components > 1 {
        return (None, components);
    }
    let mut diameter = 0;
    for start in 0..n {
        let eccentricity = bfs(adjacency, start).map(|(_, d)| d).max().unwrap_or(0);
        diameter = diameter.max(eccentricity);
    }
    (Some(diameter), 1)
}

/// Nodes reachable from `start` with their hop distance, in BFS order.
pub(crate) fn bfs(adjacency: &[Vec<StationId>], start: StationId) -> impl Iterator<Item = (StationId, u32)> {
    let mut dist = vec![u32::MAX; adjacency.len()];
    let mut order = Vec::with_capacity(adjacency.len());
    let mut queue = VecDeque::from([start]);
    dist[start] = 0;
    while let Some(node) = queue.pop_front() {
        order.push((node, dist[node]));
        for &next in &adjacency[node] {
            if dist[next] == u32::MAX {
                dist[next] = dist[node] + 1;
                queue.push_back(next);
            }
        }
    }
    order.into_iter()
}

/// Hop distances from `source` (`u32::MAX` for unreachable nodes).
pub fn hop_distances(topology: &NetworkTopology, source: StationId) -> Vec<u32> {
    let mut dist = vec![u32::MAX; topology.len()];
    for (node, d) in bfs(&topology.graph().adjacency, source) {
        dist[node] = d;
    }
    dist
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(eps: f64, xs: &[f64]) -> NetworkTopology {
        NetworkTopology::new(
            MetricSpace::Line,
            eps,
            xs.iter().map(|&x| MetricPoint::line(x)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn threshold_is_closed() {
        // 1 - 0.25 = 0.75 is exact in binary
        let t = line(0.25, &[0.0, 0.75]);
        assert_eq!(t.neighbors(0), &[1]);
        let t = line(0.25, &[0.0, 0.75 + 1e-9]);
        assert!(t.neighbors(0).is_empty());
        assert!(!t.is_connected());
        assert_eq!(t.graph().components, 2);
    }

    #[test]
    fn half_spacing_path_has_unit_diameter() {
        let t = line(0.25, &[0.0, 0.375, 0.75]);
        assert_eq!(t.diameter(), Some(1));
    }

    #[test]
    fn uniform_path_diameter() {
        let s = 0.9 * 0.75;
        let t = line(0.25, &[0.0, s, 2.0 * s]);
        assert_eq!(t.diameter(), Some(2));
        assert_eq!(t.granularity(), 1.0);
    }

    #[test]
    fn single_station() {
        let t = line(0.5, &[0.0]);
        assert_eq!(t.diameter(), Some(0));
        assert!(t.neighbors(0).is_empty());
    }

    #[test]
    fn ball_membership() {
        let t = line(0.5, &[0.0, 0.3, 0.6, 0.9, 1.2]);
        assert_eq!(t.ball_around(1, 0.0).unwrap(), vec![1]);
        assert_eq!(t.ball_around(1, 0.65).unwrap(), vec![0, 1, 2, 3]);
        assert_eq!(t.ball_around(1, 10.0).unwrap(), vec![0, 1, 2, 3, 4]);
        assert!(t.ball_around(9, 1.0).is_err());
        assert!(t.ball_around(0, -1.0).is_err());
    }

    #[test]
    fn granularity_ratio() {
        let t = line(0.5, &[0.0, 0.5, 0.625]);
        // edges 0.5, 0.125 (0-2 is 0.625 > 0.5)
        assert_eq!(t.granularity(), 4.0);
    }

    #[test]
    fn epsilon_bounds() {
        assert!(NetworkTopology::new(MetricSpace::Line, 1.0, vec![MetricPoint::line(0.0)]).is_err());
        assert!(NetworkTopology::new(MetricSpace::Line, 0.0, vec![MetricPoint::line(0.0)]).is_err());
    }
}
