//! Jellyfish RRG(N, x, y) topologies.
//!
//! A Jellyfish network is a random y-regular graph on N switches; each switch
//! has x ports of which y connect to other switches and x - y attach compute
//! nodes. Node i lives on switch i / (x - y).

use std::fmt;
use std::fs;
use std::path::Path as FsPath;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::rng::{self, DetRng};

pub type SwitchId = u32;
pub type NodeId = u32;

/// Whole-graph regeneration attempts before giving up on a spec.
const RETRY_BUDGET: u64 = 100;
/// Edge-swap attempts per unmatched stub pair during repair.
const SWAP_TRIES: usize = 200;

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("infeasible spec: {0}")]
    InfeasibleSpec(String),
    #[error("construction failed: {0}")]
    ConstructionFailure(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invariant violation: {0}")]
    InvariantViolation(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Parameters of an RRG(N, x, y) instance, plus the construction seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TopoSpec {
    /// N: number of switches.
    pub n_switches: u32,
    /// x: total ports per switch.
    pub ports_per_switch: u32,
    /// y: ports per switch that connect to other switches.
    pub network_ports: u32,
    pub rng_seed: u64,
}

impl TopoSpec {
    pub fn new(
        n_switches: u32,
        ports_per_switch: u32,
        network_ports: u32,
        rng_seed: u64,
    ) -> Result<Self, TopologyError> {
        let spec = TopoSpec {
            n_switches,
            ports_per_switch,
            network_ports,
            rng_seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), TopologyError> {
        let (n, x, y) = (self.n_switches, self.ports_per_switch, self.network_ports);
        if n == 0 {
            return Err(TopologyError::InfeasibleSpec("N must be positive".into()));
        }
        if y == 0 || y >= x {
            return Err(TopologyError::InfeasibleSpec(format!(
                "need 0 < y < x (each switch attaches x - y >= 1 nodes), got x={x} y={y}"
            )));
        }
        if (n as u64 * y as u64) % 2 != 0 {
            return Err(TopologyError::InfeasibleSpec(format!(
                "N*y must be even for a y-regular graph, got N={n} y={y}"
            )));
        }
        if y >= n {
            return Err(TopologyError::InfeasibleSpec(format!(
                "need y < N for a simple graph, got N={n} y={y}"
            )));
        }
        Ok(())
    }

    pub fn nodes_per_switch(&self) -> u32 {
        self.ports_per_switch - self.network_ports
    }

    pub fn node_count(&self) -> u32 {
        self.n_switches * self.nodes_per_switch()
    }
}

impl fmt::Display for TopoSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "RRG({},{},{})",
            self.n_switches, self.ports_per_switch, self.network_ports
        )
    }
}

/// Undirected simple connected graph over switch identifiers, with sorted
/// adjacency lists. The substrate for path search; a [`Topology`] adds the
/// regularity invariant and compute-node attachments on top.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<SwitchId>>,
    // Prefix offsets into the concatenated adjacency, for directed link ids.
    offsets: Vec<u32>,
}

impl Graph {
    /// Validates symmetry, simplicity, and connectivity; sorts neighbor lists.
    pub fn from_adjacency(mut adj: Vec<Vec<SwitchId>>) -> Result<Self, TopologyError> {
        let n = adj.len() as u32;
        for (u, list) in adj.iter_mut().enumerate() {
            list.sort_unstable();
            for w in list.windows(2) {
                if w[0] == w[1] {
                    return Err(TopologyError::InvariantViolation(format!(
                        "multi-edge: switch {u} lists neighbor {} twice",
                        w[0]
                    )));
                }
            }
            for &v in list.iter() {
                if v >= n {
                    return Err(TopologyError::InvariantViolation(format!(
                        "neighbor {v} of switch {u} out of range (N={n})"
                    )));
                }
                if v as usize == u {
                    return Err(TopologyError::InvariantViolation(format!(
                        "self-loop at switch {u}"
                    )));
                }
            }
        }
        for u in 0..adj.len() {
            for &v in &adj[u] {
                if adj[v as usize].binary_search(&(u as SwitchId)).is_err() {
                    return Err(TopologyError::InvariantViolation(format!(
                        "symmetry: edge {u}->{v} has no reverse"
                    )));
                }
            }
        }
        let mut offsets = Vec::with_capacity(adj.len() + 1);
        let mut acc = 0u32;
        for list in &adj {
            offsets.push(acc);
            acc += list.len() as u32;
        }
        offsets.push(acc);
        let g = Graph { adj, offsets };
        if !g.is_connected() {
            return Err(TopologyError::InvariantViolation(
                "connectivity: graph is not connected".into(),
            ));
        }
        Ok(g)
    }

    /// Builds from an undirected edge list.
    pub fn from_edges(n: usize, edges: &[(SwitchId, SwitchId)]) -> Result<Self, TopologyError> {
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            if (u as usize) < n {
                adj[u as usize].push(v);
            }
            if (v as usize) < n {
                adj[v as usize].push(u);
            }
        }
        Self::from_adjacency(adj)
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn neighbors(&self, s: SwitchId) -> &[SwitchId] {
        &self.adj[s as usize]
    }

    pub fn degree(&self, s: SwitchId) -> usize {
        self.adj[s as usize].len()
    }

    pub fn has_edge(&self, u: SwitchId, v: SwitchId) -> bool {
        self.adj[u as usize].binary_search(&v).is_ok()
    }

    /// Total number of directed links (twice the undirected edge count).
    pub fn link_count(&self) -> usize {
        *self.offsets.last().unwrap() as usize
    }

    /// Dense identifier of the directed link u -> v.
    pub fn link_id(&self, u: SwitchId, v: SwitchId) -> Option<usize> {
        self.adj[u as usize]
            .binary_search(&v)
            .ok()
            .map(|pos| self.offsets[u as usize] as usize + pos)
    }

    /// Inverse of [`Graph::link_id`].
    pub fn link_endpoints(&self, link: usize) -> (SwitchId, SwitchId) {
        let u = match self.offsets.binary_search(&(link as u32)) {
            Ok(i) if i < self.adj.len() && !self.adj[i].is_empty() => i,
            Ok(i) => i - 1, // offsets repeat when a list is empty; step back
            Err(i) => i - 1,
        };
        let v = self.adj[u][link - self.offsets[u] as usize];
        (u as SwitchId, v)
    }

    pub fn bfs_distances(&self, src: SwitchId) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.n()];
        dist[src as usize] = 0;
        let mut queue = std::collections::VecDeque::new();
        queue.push_back(src);
        while let Some(u) = queue.pop_front() {
            let du = dist[u as usize];
            for &v in self.neighbors(u) {
                if dist[v as usize] == u32::MAX {
                    dist[v as usize] = du + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    fn is_connected(&self) -> bool {
        if self.n() == 0 {
            return false;
        }
        self.bfs_distances(0).iter().all(|&d| d != u32::MAX)
    }

    /// Mean hop distance over ordered distinct switch pairs.
    pub fn avg_shortest_path_length(&self) -> f64 {
        let (sum, _) = self.distance_stats();
        let n = self.n() as u64;
        sum as f64 / (n * (n - 1)) as f64
    }

    /// Maximum hop distance over ordered pairs.
    pub fn diameter(&self) -> u32 {
        self.distance_stats().1
    }

    fn distance_stats(&self) -> (u64, u32) {
        use rayon::prelude::*;
        (0..self.n() as u32)
            .into_par_iter()
            .map(|s| {
                let dist = self.bfs_distances(s);
                let mut sum = 0u64;
                let mut max = 0u32;
                for &d in &dist {
                    sum += d as u64;
                    max = max.max(d);
                }
                (sum, max)
            })
            .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1.max(b.1)))
    }
}

/// An immutable RRG(N, x, y) instance: the switch graph plus the implicit
/// compute-node attachment (node i on switch i / (x - y)).
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    spec: TopoSpec,
    graph: Graph,
}

impl Topology {
    /// Builds a random y-regular instance by stub matching with edge-swap
    /// repair, retrying with a fresh derived seed until connected.
    pub fn generate(spec: TopoSpec) -> Result<Topology, TopologyError> {
        spec.validate()?;
        for attempt in 0..RETRY_BUDGET {
            let mut rng = rng::det_rng(rng::derive(spec.rng_seed, &[attempt]));
            let Some(adj) = stub_matching(spec.n_switches, spec.network_ports, &mut rng) else {
                continue;
            };
            match Graph::from_adjacency(adj) {
                Ok(graph) => return Ok(Topology { spec, graph }),
                Err(TopologyError::InvariantViolation(_)) => continue,
                Err(e) => return Err(e),
            }
        }
        Err(TopologyError::ConstructionFailure(format!(
            "no connected simple {}-regular graph on {} switches after {} attempts",
            spec.network_ports, spec.n_switches, RETRY_BUDGET
        )))
    }

    /// Wraps an explicit adjacency, validating every Topology invariant.
    pub fn from_parts(spec: TopoSpec, adj: Vec<Vec<SwitchId>>) -> Result<Topology, TopologyError> {
        spec.validate()?;
        if adj.len() != spec.n_switches as usize {
            return Err(TopologyError::InvariantViolation(format!(
                "switch count: expected {}, got {}",
                spec.n_switches,
                adj.len()
            )));
        }
        let graph = Graph::from_adjacency(adj)?;
        for s in 0..graph.n() {
            if graph.degree(s as SwitchId) != spec.network_ports as usize {
                return Err(TopologyError::InvariantViolation(format!(
                    "regularity: switch {s} has degree {}, expected {}",
                    graph.degree(s as SwitchId),
                    spec.network_ports
                )));
            }
        }
        Ok(Topology { spec, graph })
    }

    pub fn spec(&self) -> &TopoSpec {
        &self.spec
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn n_switches(&self) -> usize {
        self.graph.n()
    }

    pub fn node_count(&self) -> u32 {
        self.spec.node_count()
    }

    pub fn host_switch(&self, node: NodeId) -> SwitchId {
        node / self.spec.nodes_per_switch()
    }

    /// Compute nodes attached to a switch, as a contiguous id range.
    pub fn nodes_of(&self, s: SwitchId) -> std::ops::Range<NodeId> {
        let per = self.spec.nodes_per_switch();
        s * per..(s + 1) * per
    }

    pub fn avg_shortest_path_length(&self) -> f64 {
        self.graph.avg_shortest_path_length()
    }

    pub fn diameter(&self) -> u32 {
        self.graph.diameter()
    }

    /// Canonical text form; also the on-disk format.
    pub fn to_text(&self) -> String {
        let s = &self.spec;
        let mut out = format!(
            "jellyfish {} {} {} {}\n",
            s.n_switches, s.ports_per_switch, s.network_ports, s.rng_seed
        );
        for u in 0..self.graph.n() {
            out.push_str(&format!("{u}:"));
            for &v in self.graph.neighbors(u as SwitchId) {
                out.push_str(&format!(" {v}"));
            }
            out.push('\n');
        }
        out
    }

    /// FNV-1a hash of the canonical text; binds PathSets to this instance.
    pub fn content_hash(&self) -> u64 {
        rng::fnv1a(self.to_text().as_bytes())
    }

    pub fn save(&self, path: impl AsRef<FsPath>) -> Result<(), TopologyError> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<FsPath>) -> Result<Topology, TopologyError> {
        Self::from_text(&fs::read_to_string(path)?)
    }

    pub fn from_text(text: &str) -> Result<Topology, TopologyError> {
        let mut spec: Option<TopoSpec> = None;
        let mut adj: Vec<Option<Vec<SwitchId>>> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse = |tok: &str| -> Result<u64, TopologyError> {
                tok.parse().map_err(|_| TopologyError::Parse {
                    line: lineno,
                    msg: format!("expected integer, got '{tok}'"),
                })
            };
            match &spec {
                None => {
                    let toks: Vec<&str> = line.split_whitespace().collect();
                    if toks.len() != 5 || toks[0] != "jellyfish" {
                        return Err(TopologyError::Parse {
                            line: lineno,
                            msg: "expected header 'jellyfish N x y seed'".into(),
                        });
                    }
                    let s = TopoSpec::new(
                        parse(toks[1])? as u32,
                        parse(toks[2])? as u32,
                        parse(toks[3])? as u32,
                        parse(toks[4])?,
                    )?;
                    adj = vec![None; s.n_switches as usize];
                    spec = Some(s);
                }
                Some(s) => {
                    let (head, rest) = line.split_once(':').ok_or(TopologyError::Parse {
                        line: lineno,
                        msg: "expected '<switch>: <neighbors...>'".into(),
                    })?;
                    let id = parse(head.trim())? as usize;
                    if id >= s.n_switches as usize {
                        return Err(TopologyError::Parse {
                            line: lineno,
                            msg: format!("switch id {id} out of range"),
                        });
                    }
                    if adj[id].is_some() {
                        return Err(TopologyError::Parse {
                            line: lineno,
                            msg: format!("duplicate adjacency line for switch {id}"),
                        });
                    }
                    let mut nbrs = Vec::new();
                    for tok in rest.split_whitespace() {
                        nbrs.push(parse(tok)? as SwitchId);
                    }
                    adj[id] = Some(nbrs);
                }
            }
        }
        let spec = spec.ok_or(TopologyError::Parse {
            line: text.lines().count().max(1),
            msg: "missing 'jellyfish' header".into(),
        })?;
        let mut full = Vec::with_capacity(adj.len());
        for (id, entry) in adj.into_iter().enumerate() {
            full.push(entry.ok_or_else(|| {
                TopologyError::InvariantViolation(format!("missing adjacency for switch {id}"))
            })?);
        }
        Self::from_parts(spec, full)
    }
}

/// One stub-matching attempt: returns a simple y-regular adjacency or None
/// when repair fails (connectivity is checked by the caller).
fn stub_matching(n: u32, y: u32, rng: &mut DetRng) -> Option<Vec<Vec<SwitchId>>> {
    let mut stubs: Vec<SwitchId> = (0..n).flat_map(|s| std::iter::repeat(s).take(y as usize)).collect();
    stubs.shuffle(rng);

    let mut adj: Vec<std::collections::HashSet<SwitchId>> =
        vec![std::collections::HashSet::new(); n as usize];
    let mut edges: Vec<(SwitchId, SwitchId)> = Vec::with_capacity(stubs.len() / 2);
    let connect = |adj: &mut Vec<std::collections::HashSet<SwitchId>>,
                       edges: &mut Vec<(SwitchId, SwitchId)>,
                       a: SwitchId,
                       b: SwitchId| {
        adj[a as usize].insert(b);
        adj[b as usize].insert(a);
        edges.push((a, b));
    };

    let mut leftovers: Vec<SwitchId> = Vec::new();
    for pair in stubs.chunks(2) {
        let (a, b) = (pair[0], pair[1]);
        if a != b && !adj[a as usize].contains(&b) {
            connect(&mut adj, &mut edges, a, b);
        } else {
            leftovers.push(a);
            leftovers.push(b);
        }
    }

    // Repair: splice each leftover stub pair into a random existing edge.
    let mut itr = leftovers.into_iter();
    while let (Some(a), Some(b)) = (itr.next(), itr.next()) {
        if a != b && !adj[a as usize].contains(&b) {
            connect(&mut adj, &mut edges, a, b);
            continue;
        }
        let mut done = false;
        for _ in 0..SWAP_TRIES {
            let i = rng.gen_range(0..edges.len());
            let (c, d) = edges[i];
            // Replace edge c-d with a-c and b-d (or a-d and b-c).
            let fits = |p: SwitchId, q: SwitchId, adj: &[std::collections::HashSet<SwitchId>]| {
                p != q && !adj[p as usize].contains(&q)
            };
            let (x1, x2) = if fits(a, c, &adj) && fits(b, d, &adj) {
                (c, d)
            } else if fits(a, d, &adj) && fits(b, c, &adj) {
                (d, c)
            } else {
                continue;
            };
            edges.swap_remove(i);
            adj[c as usize].remove(&d);
            adj[d as usize].remove(&c);
            connect(&mut adj, &mut edges, a, x1);
            connect(&mut adj, &mut edges, b, x2);
            done = true;
            break;
        }
        if !done {
            return None;
        }
    }

    Some(
        adj.into_iter()
            .map(|set| {
                let mut v: Vec<SwitchId> = set.into_iter().collect();
                v.sort_unstable();
                v
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n: u32, x: u32, y: u32, seed: u64) -> TopoSpec {
        TopoSpec::new(n, x, y, seed).unwrap()
    }

    #[test]
    fn infeasible_specs_rejected() {
        assert!(matches!(
            TopoSpec::new(5, 24, 3, 0),
            Err(TopologyError::InfeasibleSpec(_))
        )); // odd N*y
        assert!(matches!(
            TopoSpec::new(4, 3, 3, 0),
            Err(TopologyError::InfeasibleSpec(_))
        )); // y == x leaves no node ports
        assert!(matches!(
            TopoSpec::new(2, 3, 2, 0),
            Err(TopologyError::InfeasibleSpec(_))
        )); // y >= N
        assert!(matches!(
            TopoSpec::new(4, 2, 0, 0),
            Err(TopologyError::InfeasibleSpec(_))
        ));
    }

    #[test]
    fn degenerate_spec_fails_construction() {
        // y = 1 on 4 switches can only form perfect matchings: disconnected.
        let err = Topology::generate(spec(4, 3, 1, 7)).unwrap_err();
        assert!(matches!(err, TopologyError::ConstructionFailure(_)));
    }

    #[test]
    fn four_cycle_is_forced() {
        let t = Topology::generate(spec(4, 3, 2, 0)).unwrap();
        // Only connected 2-regular simple graph on 4 vertices is the cycle.
        for s in 0..4u32 {
            assert_eq!(t.graph().degree(s), 2);
        }
        assert_eq!(t.diameter(), 2);
        assert_eq!(t.node_count(), 4);
    }

    #[test]
    fn complete_graph_distances() {
        let t = Topology::generate(spec(5, 6, 4, 3)).unwrap();
        assert_eq!(t.avg_shortest_path_length(), 1.0);
        assert_eq!(t.diameter(), 1);
    }

    #[test]
    fn generation_is_deterministic() {
        let a = Topology::generate(spec(36, 24, 16, 1)).unwrap();
        let b = Topology::generate(spec(36, 24, 16, 1)).unwrap();
        assert_eq!(a, b);
        let c = Topology::generate(spec(36, 24, 16, 2)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn rrg36_shape_and_path_length() {
        let t = Topology::generate(spec(36, 24, 16, 1)).unwrap();
        assert_eq!(t.n_switches(), 36);
        assert_eq!(t.node_count(), 288);
        for s in 0..36u32 {
            assert_eq!(t.graph().degree(s), 16);
        }
        let apl = t.avg_shortest_path_length();
        assert!((apl - 1.54).abs() < 0.03, "avg path length {apl}");
        assert_eq!(t.host_switch(287), 35);
        assert_eq!(t.nodes_of(0), 0..8);
    }

    #[test]
    fn save_load_roundtrip() {
        let t = Topology::generate(spec(12, 6, 4, 9)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.topo");
        t.save(&p).unwrap();
        let back = Topology::load(&p).unwrap();
        assert_eq!(t, back);
        assert_eq!(t.content_hash(), back.content_hash());
    }

    #[test]
    fn load_rejects_asymmetry() {
        let text = "jellyfish 3 3 2 0\n0: 1 2\n1: 0\n2: 0 1\n";
        let err = Topology::from_text(text).unwrap_err();
        match err {
            TopologyError::InvariantViolation(msg) => assert!(msg.contains("symmetry"), "{msg}"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn load_rejects_wrong_degree() {
        // Switch 3 has degree 1 in a y=2 spec.
        let text = "jellyfish 4 3 2 0\n0: 1 3\n1: 0 2\n2: 1 3\n3: 0 2\n";
        let ok = Topology::from_text(text);
        assert!(ok.is_ok());
        let bad = "jellyfish 4 3 2 0\n0: 1 3\n1: 0 2 3\n2: 1 3\n3: 0 1 2\n";
        let err = Topology::from_text(bad).unwrap_err();
        match err {
            TopologyError::InvariantViolation(msg) => assert!(msg.contains("regularity"), "{msg}"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn load_reports_parse_line() {
        let text = "jellyfish 2 2 1 0\n0: x\n1: 0\n";
        match Topology::from_text(text).unwrap_err() {
            TopologyError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn link_ids_roundtrip() {
        let t = Topology::generate(spec(12, 6, 4, 9)).unwrap();
        let g = t.graph();
        for u in 0..12u32 {
            for &v in g.neighbors(u) {
                let id = g.link_id(u, v).unwrap();
                assert_eq!(g.link_endpoints(id), (u, v));
            }
        }
        assert_eq!(g.link_count(), 12 * 4);
        assert_eq!(g.link_id(0, 0), None);
    }
}
