use std::io::Write;

use rand::Rng;

use super::{NetworkError, RegionTable};
use crate::rng::open_unit;

/// Inputs of the topology generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopologyParams {
    pub nodes: usize,
    /// 0 gives a ring lattice, 1 a uniform random graph.
    pub beta: f64,
    pub avg_degree: f64,
}

impl TopologyParams {
    pub fn new(nodes: usize, beta: f64, avg_degree: f64) -> Result<Self, NetworkError> {
        let p = TopologyParams { nodes, beta, avg_degree };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), NetworkError> {
        if self.nodes < 2 {
            return Err(NetworkError::InvalidTopology(format!("need at least 2 nodes, got {}", self.nodes)));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(NetworkError::InvalidTopology(format!("beta must be in [0, 1], got {}", self.beta)));
        }
        if !(self.avg_degree > 0.0 && self.avg_degree < self.nodes as f64) {
            return Err(NetworkError::InvalidTopology(format!(
                "average degree must be in (0, {}), got {}",
                self.nodes, self.avg_degree
            )));
        }
        Ok(())
    }

    /// Connection probability of nodes `i` and `j`.
    ///
    /// Pairs within ring distance `d/(N-1) * floor(N/2)` get
    /// `beta * (p0 - 1) + 1`, all others `beta * p0`, where `p0 = d/(N-1)`.
    pub fn probability(&self, i: usize, j: usize) -> f64 {
        let n = self.nodes;
        let dis = i.abs_diff(j);
        let edge_density = self.avg_degree / (n - 1) as f64;
        let max_distance = (n / 2) as f64;
        let ring = dis.min(n - dis) as f64;
        // edge_density >= ring / max_distance, cross-multiplied to stay exact
        let p = if self.avg_degree * max_distance >= ring * (n - 1) as f64 {
            // beta * (p0 - 1) + 1, arranged so beta = 1 yields p0 exactly
            self.beta * edge_density + (1.0 - self.beta)
        } else {
            self.beta * edge_density
        };
        p.clamp(0.0, 1.0)
    }
}

/// Undirected simple graph as sorted adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<u32>>,
    repair_edges: usize,
}

impl Graph {
    pub fn empty(nodes: usize) -> Self {
        Graph { adjacency: vec![Vec::new(); nodes], repair_edges: 0 }
    }

    pub fn from_edges(nodes: usize, edges: &[(usize, usize)]) -> Self {
        let mut g = Graph::empty(nodes);
        for &(u, v) in edges {
            g.add_edge(u, v);
        }
        g.normalize();
        g
    }

    fn add_edge(&mut self, u: usize, v: usize) {
        debug_assert_ne!(u, v);
        self.adjacency[u].push(v as u32);
        self.adjacency[v].push(u as u32);
    }

    fn normalize(&mut self) {
        for list in &mut self.adjacency {
            list.sort_unstable();
            list.dedup();
        }
    }

    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    pub fn neighbors(&self, u: usize) -> &[u32] {
        &self.adjacency[u]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u].binary_search(&(v as u32)).is_ok()
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adjacency[u].len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn mean_degree(&self) -> f64 {
        2.0 * self.edge_count() as f64 / self.len() as f64
    }

    /// Edges added to connect components.
    pub fn repair_edges(&self) -> usize {
        self.repair_edges
    }

    /// Edges `(u, v)` with `u < v`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().map(move |&v| (u, v as usize)).filter(|&(u, v)| u < v))
    }

    /// Connected components, each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.len();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut comp = vec![start];
            let mut head = 0;
            while head < comp.len() {
                let u = comp[head];
                head += 1;
                for &v in &self.adjacency[u] {
                    if !seen[v as usize] {
                        seen[v as usize] = true;
                        comp.push(v as usize);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() <= 1
    }

    /// Mean local clustering coefficient (nodes of degree < 2 count as 0).
    pub fn clustering_coefficient(&self) -> f64 {
        let n = self.len();
        let mut mark = vec![false; n];
        let mut total = 0.0;
        for u in 0..n {
            let nbrs = &self.adjacency[u];
            let k = nbrs.len();
            if k < 2 {
                continue;
            }
            for &v in nbrs {
                mark[v as usize] = true;
            }
            let mut links = 0usize;
            for &v in nbrs {
                links += self.adjacency[v as usize].iter().filter(|&&w| mark[w as usize]).count();
            }
            for &v in nbrs {
                mark[v as usize] = false;
            }
            total += links as f64 / (k * (k - 1)) as f64;
        }
        total / n as f64
    }

    /// Joins successive components with one random edge each until the
    /// graph is connected.
    pub fn connect<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let comps = self.components();
        for pair in comps.windows(2) {
            let u = pair[0][rng.random_range(0..pair[0].len())];
            let v = pair[1][rng.random_range(0..pair[1].len())];
            self.add_edge(u, v);
            self.repair_edges += 1;
        }
        self.normalize();
    }
}

/// Draws every unordered pair once: edge iff `r <= probability(i, j)` with
/// `r` uniform on `(0, 1]`. The result is then made connected.
pub fn generate_network<R: Rng + ?Sized>(params: &TopologyParams, rng: &mut R) -> Result<Graph, NetworkError> {
    params.validate()?;
    let n = params.nodes;
    let mut graph = Graph::empty(n);
    for i in 0..n {
        for j in (i + 1)..n {
            let p = params.probability(i, j);
            if open_unit(rng) <= p {
                graph.add_edge(i, j);
            }
        }
    }
    graph.normalize();
    graph.connect(rng);
    Ok(graph)
}

/// A directed half of an undirected link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub to: u32,
    pub latency: f64,
}

/// A connected P2P network: links with fixed latencies plus per-node region
/// and upload bandwidth.
#[derive(Debug, Clone)]
pub struct Topology {
    links: Vec<Vec<Link>>,
    region_of: Vec<usize>,
    bandwidth: Vec<f64>,
}

impl Topology {
    /// Attaches one latency per undirected edge, drawn from the endpoint
    /// regions, and fixes it for the whole run.
    pub fn new<R: Rng + ?Sized>(graph: &Graph, regions: &RegionTable, region_of: Vec<usize>, rng: &mut R) -> Self {
        assert_eq!(graph.len(), region_of.len());
        let mut links = vec![Vec::new(); graph.len()];
        for (u, v) in graph.edges() {
            let latency = regions.sample_latency(region_of[u], region_of[v], rng);
            links[u].push(Link { to: v as u32, latency });
            links[v].push(Link { to: u as u32, latency });
        }
        for list in &mut links {
            list.sort_unstable_by_key(|l| l.to);
        }
        let bandwidth = region_of.iter().map(|&r| regions.regions[r].upload_bandwidth_mb_s).collect();
        Topology { links, region_of, bandwidth }
    }

    /// A topology from explicit `(u, v, latency)` triples, every node in one
    /// region with the given bandwidth.
    pub fn from_links(nodes: usize, edges: &[(usize, usize, f64)], bandwidth: f64) -> Self {
        let mut links = vec![Vec::new(); nodes];
        for &(u, v, latency) in edges {
            assert!(u != v && latency > 0.0);
            links[u].push(Link { to: v as u32, latency });
            links[v].push(Link { to: u as u32, latency });
        }
        for list in &mut links {
            list.sort_unstable_by_key(|l| l.to);
        }
        Topology { links, region_of: vec![0; nodes], bandwidth: vec![bandwidth; nodes] }
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn links(&self, u: usize) -> &[Link] {
        &self.links[u]
    }

    pub fn all_links(&self) -> &[Vec<Link>] {
        &self.links
    }

    pub fn degree(&self, u: usize) -> usize {
        self.links[u].len()
    }

    pub fn region_of(&self, u: usize) -> usize {
        self.region_of[u]
    }

    pub fn bandwidth(&self, u: usize) -> f64 {
        self.bandwidth[u]
    }

    pub fn latency(&self, u: usize, v: usize) -> Option<f64> {
        let list = &self.links[u];
        list.binary_search_by_key(&(v as u32), |l| l.to).ok().map(|i| list[i].latency)
    }

    pub fn edge_count(&self) -> usize {
        self.links.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn mean_degree(&self) -> f64 {
        2.0 * self.edge_count() as f64 / self.len() as f64
    }

    pub fn min_latency(&self) -> Option<f64> {
        self.links.iter().flatten().map(|l| l.latency).min_by(f64::total_cmp)
    }

    /// Edge list, one `i j latency_seconds` line per undirected edge.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (u, list) in self.links.iter().enumerate() {
            for l in list.iter().filter(|l| (l.to as usize) > u) {
                writeln!(out, "{} {} {}", u, l.to, l.latency)?;
            }
        }
        Ok(())
    }
}
