//! Multi-path route selection.
//!
//! Four schemes compute up to k paths per ordered switch pair:
//!
//! * `KSP`    — Yen's k-shortest loopless paths, deterministic tie-breaking.
//! * `rKSP`   — Yen's with randomized tie-breaking in the shortest-path
//!              search and in candidate selection.
//! * `EDKSP`  — Remove-Find edge-disjoint paths: find a shortest path, delete
//!              its edges, repeat.
//! * `rEDKSP` — Remove-Find with randomized shortest-path tie-breaking.
//!
//! Deterministic tie-breaking prefers smaller switch identifiers, which
//! systematically concentrates the selected paths on a few links; the
//! randomized and edge-disjoint variants exist to undo that bias.

use std::collections::{BinaryHeap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path as FsPath;

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::rng::{self, DetRng};
use crate::topology::{Graph, SwitchId, Topology};

#[derive(Debug, Error)]
pub enum PathSetError {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("path set was computed for topology {expected:016x}, got {actual:016x}")]
    TopologyMismatch { expected: u64, actual: u64 },
    #[error("invalid path for pair ({src},{dst}): {msg}")]
    InvalidPath { src: SwitchId, dst: SwitchId, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Tie-breaking policy for shortest-path search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Explore smaller switch ids first; pick lexicographically smallest
    /// candidates. This is the "vanilla" textbook behaviour.
    Deterministic,
    /// Break every tie uniformly at random.
    Randomized,
}

/// A loopless switch-level path, stored as the full hop sequence
/// (source first, destination last).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Path {
    hops: Vec<SwitchId>,
}

impl Path {
    pub fn from_hops(hops: Vec<SwitchId>) -> Self {
        debug_assert!(hops.len() >= 2);
        Path { hops }
    }

    pub fn hops(&self) -> &[SwitchId] {
        &self.hops
    }

    pub fn src(&self) -> SwitchId {
        self.hops[0]
    }

    pub fn dst(&self) -> SwitchId {
        *self.hops.last().unwrap()
    }

    /// Number of links traversed.
    pub fn len_edges(&self) -> usize {
        self.hops.len() - 1
    }

    pub fn edges(&self) -> impl Iterator<Item = (SwitchId, SwitchId)> + '_ {
        self.hops.windows(2).map(|w| (w[0], w[1]))
    }

    /// Checks looplessness and adjacency against a graph.
    pub fn validate(&self, g: &Graph) -> Result<(), String> {
        if self.hops.len() < 2 {
            return Err("path must traverse at least one link".into());
        }
        let mut seen = HashSet::new();
        for &h in &self.hops {
            if !seen.insert(h) {
                return Err(format!("switch {h} repeats"));
            }
        }
        for (u, v) in self.edges() {
            if !g.has_edge(u, v) {
                return Err(format!("{u} and {v} are not adjacent"));
            }
        }
        Ok(())
    }
}

/// Shortest path by hop count, honoring removal masks. Ties in the search
/// frontier are broken by switch id (deterministic) or uniformly (randomized);
/// the predecessor of a node is its first-explored optimal predecessor, so the
/// same policy governs path shape.
fn dijkstra_masked(
    g: &Graph,
    src: SwitchId,
    dst: SwitchId,
    mode: Mode,
    rng: &mut DetRng,
    removed_nodes: &[bool],
    removed_edges: &HashSet<(SwitchId, SwitchId)>,
) -> Option<Path> {
    debug_assert_ne!(src, dst);
    let n = g.n();
    let mut dist = vec![u32::MAX; n];
    let mut pred = vec![SwitchId::MAX; n];
    // Reverse-ordered min-heap over (distance, tie key, switch).
    let mut heap: BinaryHeap<std::cmp::Reverse<(u32, u64, SwitchId)>> = BinaryHeap::new();
    let key = |s: SwitchId, rng: &mut DetRng| -> u64 {
        match mode {
            Mode::Deterministic => s as u64,
            Mode::Randomized => rng.gen(),
        }
    };
    dist[src as usize] = 0;
    let k0 = key(src, rng);
    heap.push(std::cmp::Reverse((0, k0, src)));
    while let Some(std::cmp::Reverse((d, _, u))) = heap.pop() {
        if u == dst {
            break;
        }
        if d > dist[u as usize] {
            continue;
        }
        for &v in g.neighbors(u) {
            if removed_nodes[v as usize] || removed_edges.contains(&(u, v)) {
                continue;
            }
            if dist[v as usize] > d + 1 {
                dist[v as usize] = d + 1;
                pred[v as usize] = u;
                let kv = key(v, rng);
                heap.push(std::cmp::Reverse((d + 1, kv, v)));
            }
        }
    }
    if dist[dst as usize] == u32::MAX {
        return None;
    }
    let mut hops = vec![dst];
    let mut cur = dst;
    while cur != src {
        cur = pred[cur as usize];
        hops.push(cur);
    }
    hops.reverse();
    Some(Path::from_hops(hops))
}

/// Shortest path on the full topology; `None` means unreachable (cannot
/// happen on a connected graph, but removal-masked internal calls rely on it).
pub fn dijkstra(
    g: &Graph,
    src: SwitchId,
    dst: SwitchId,
    mode: Mode,
    rng: &mut DetRng,
) -> Option<Path> {
    dijkstra_masked(g, src, dst, mode, rng, &vec![false; g.n()], &HashSet::new())
}

/// Yen's algorithm: k shortest loopless paths in nondecreasing length order.
///
/// Candidates are collected in a container that persists across iterations
/// and deduplicates by hop sequence. When several candidates tie for minimum
/// length, deterministic mode takes the lexicographically smallest hop
/// sequence and randomized mode picks uniformly.
pub fn yen_ksp(
    g: &Graph,
    src: SwitchId,
    dst: SwitchId,
    k: usize,
    mode: Mode,
    rng: &mut DetRng,
) -> Vec<Path> {
    assert!(k >= 1, "k must be at least 1");
    assert_ne!(src, dst, "source and destination must differ");
    let mut removed_nodes = vec![false; g.n()];
    let mut removed_edges = HashSet::new();
    let Some(first) = dijkstra_masked(g, src, dst, mode, rng, &removed_nodes, &removed_edges)
    else {
        return Vec::new();
    };
    let mut found = vec![first];
    let mut candidates: Vec<Path> = Vec::new();
    while found.len() < k {
        let prev = found.last().unwrap().hops().to_vec();
        for i in 0..prev.len() - 1 {
            let spur = prev[i];
            let root = &prev[..=i];
            removed_edges.clear();
            for p in &found {
                let h = p.hops();
                if h.len() > i + 1 && &h[..=i] == root {
                    removed_edges.insert((h[i], h[i + 1]));
                }
            }
            for &s in &root[..i] {
                removed_nodes[s as usize] = true;
            }
            let spur_path =
                dijkstra_masked(g, spur, dst, mode, rng, &removed_nodes, &removed_edges);
            for &s in &root[..i] {
                removed_nodes[s as usize] = false;
            }
            if let Some(sp) = spur_path {
                let mut hops = root[..i].to_vec();
                hops.extend_from_slice(sp.hops());
                let total = Path::from_hops(hops);
                if !candidates.contains(&total) {
                    candidates.push(total);
                }
            }
        }
        if candidates.is_empty() {
            break;
        }
        let idx = select_candidate(&candidates, mode, rng);
        found.push(candidates.swap_remove(idx));
    }
    found
}

fn select_candidate(candidates: &[Path], mode: Mode, rng: &mut DetRng) -> usize {
    let min_len = candidates.iter().map(Path::len_edges).min().unwrap();
    match mode {
        Mode::Deterministic => {
            let mut best = None;
            for (i, p) in candidates.iter().enumerate() {
                if p.len_edges() != min_len {
                    continue;
                }
                match best {
                    None => best = Some(i),
                    Some(b) if p.hops() < candidates[b].hops() => best = Some(i),
                    _ => {}
                }
            }
            best.unwrap()
        }
        Mode::Randomized => {
            let ties: Vec<usize> = candidates
                .iter()
                .enumerate()
                .filter(|(_, p)| p.len_edges() == min_len)
                .map(|(i, _)| i)
                .collect();
            ties[rng.gen_range(0..ties.len())]
        }
    }
}

/// Remove-Find edge-disjoint paths: find a shortest path, remove its edges
/// (as undirected links), and repeat k times or until the pair disconnects.
/// Returns fewer than k paths when no more edge-disjoint routes exist.
pub fn rf_edge_disjoint(
    g: &Graph,
    src: SwitchId,
    dst: SwitchId,
    k: usize,
    mode: Mode,
    rng: &mut DetRng,
) -> Vec<Path> {
    assert!(k >= 1, "k must be at least 1");
    assert_ne!(src, dst, "source and destination must differ");
    let removed_nodes = vec![false; g.n()];
    let mut removed_edges = HashSet::new();
    let mut out = Vec::new();
    for _ in 0..k {
        match dijkstra_masked(g, src, dst, mode, rng, &removed_nodes, &removed_edges) {
            Some(p) => {
                for (u, v) in p.edges() {
                    removed_edges.insert((u, v));
                    removed_edges.insert((v, u));
                }
                out.push(p);
            }
            None => break,
        }
    }
    out
}

/// Path selection scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Ksp,
    RKsp,
    EdKsp,
    REdKsp,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Ksp, Scheme::RKsp, Scheme::EdKsp, Scheme::REdKsp];

    pub fn is_randomized(self) -> bool {
        matches!(self, Scheme::RKsp | Scheme::REdKsp)
    }

    pub fn is_edge_disjoint(self) -> bool {
        matches!(self, Scheme::EdKsp | Scheme::REdKsp)
    }

    fn mode(self) -> Mode {
        if self.is_randomized() {
            Mode::Randomized
        } else {
            Mode::Deterministic
        }
    }

    pub fn parse(s: &str) -> Option<Scheme> {
        match s.to_ascii_lowercase().as_str() {
            "ksp" => Some(Scheme::Ksp),
            "rksp" => Some(Scheme::RKsp),
            "edksp" => Some(Scheme::EdKsp),
            "redksp" => Some(Scheme::REdKsp),
            _ => None,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Scheme::Ksp => "KSP",
            Scheme::RKsp => "rKSP",
            Scheme::EdKsp => "EDKSP",
            Scheme::REdKsp => "rEDKSP",
        };
        f.write_str(s)
    }
}

/// Up to k paths for every ordered switch pair of one topology instance.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    scheme: Scheme,
    k: u32,
    rng_seed: u64,
    topo_hash: u64,
    n_switches: u32,
    paths: Vec<Vec<Path>>, // indexed src * n + dst; diagonal entries empty
}

impl PathSet {
    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }

    pub fn topo_hash(&self) -> u64 {
        self.topo_hash
    }

    pub fn n_switches(&self) -> u32 {
        self.n_switches
    }

    pub fn paths(&self, src: SwitchId, dst: SwitchId) -> &[Path] {
        &self.paths[(src * self.n_switches + dst) as usize]
    }

    /// Ordered pairs with their path lists, ascending by (src, dst).
    pub fn pairs(&self) -> impl Iterator<Item = (SwitchId, SwitchId, &[Path])> {
        let n = self.n_switches;
        (0..n).flat_map(move |s| {
            (0..n)
                .filter(move |&d| d != s)
                .map(move |d| (s, d, self.paths(s, d)))
        })
    }

    /// Longest path in the set, in links.
    pub fn max_path_len(&self) -> usize {
        self.paths
            .iter()
            .flat_map(|l| l.iter().map(Path::len_edges))
            .max()
            .unwrap_or(0)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "paths scheme={} k={} seed={} topo={:016x}\n",
            self.scheme, self.k, self.rng_seed, self.topo_hash
        );
        for (s, d, paths) in self.pairs() {
            out.push_str(&format!("{s} {d}:"));
            for (i, p) in paths.iter().enumerate() {
                if i > 0 {
                    out.push_str(" |");
                }
                for &h in p.hops() {
                    out.push_str(&format!(" {h}"));
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: impl AsRef<FsPath>) -> Result<(), PathSetError> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<FsPath>, topo: &Topology) -> Result<PathSet, PathSetError> {
        Self::from_text(&fs::read_to_string(path)?, topo)
    }

    /// Parses and validates against the owning topology: the content hash
    /// must match and every path must be loopless and adjacency-respecting.
    pub fn from_text(text: &str, topo: &Topology) -> Result<PathSet, PathSetError> {
        let g = topo.graph();
        let n = g.n() as u32;
        let mut header = None;
        let mut paths: Vec<Vec<Path>> = vec![Vec::new(); (n * n) as usize];
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if header.is_none() {
                header = Some(parse_pathset_header(line, lineno)?);
                let (_, _, _, topo_hash) = header.unwrap();
                if topo_hash != topo.content_hash() {
                    return Err(PathSetError::TopologyMismatch {
                        expected: topo_hash,
                        actual: topo.content_hash(),
                    });
                }
                continue;
            }
            let (pair, rest) = line.split_once(':').ok_or(PathSetError::Parse {
                line: lineno,
                msg: "expected '<src> <dst>: <paths>'".into(),
            })?;
            let ids: Vec<&str> = pair.split_whitespace().collect();
            if ids.len() != 2 {
                return Err(PathSetError::Parse {
                    line: lineno,
                    msg: "expected two switch ids before ':'".into(),
                });
            }
            let parse_id = |tok: &str| -> Result<SwitchId, PathSetError> {
                let v: SwitchId = tok.parse().map_err(|_| PathSetError::Parse {
                    line: lineno,
                    msg: format!("bad switch id '{tok}'"),
                })?;
                if v >= n {
                    return Err(PathSetError::Parse {
                        line: lineno,
                        msg: format!("switch id {v} out of range"),
                    });
                }
                Ok(v)
            };
            let (src, dst) = (parse_id(ids[0])?, parse_id(ids[1])?);
            let mut list = Vec::new();
            for chunk in rest.split('|') {
                let hops: Result<Vec<SwitchId>, _> =
                    chunk.split_whitespace().map(parse_id).collect();
                let hops = hops?;
                if hops.is_empty() {
                    continue;
                }
                let p = Path::from_hops(hops);
                if p.src() != src || p.dst() != dst {
                    return Err(PathSetError::InvalidPath {
                        src,
                        dst,
                        msg: "endpoints do not match the pair".into(),
                    });
                }
                p.validate(g)
                    .map_err(|msg| PathSetError::InvalidPath { src, dst, msg })?;
                list.push(p);
            }
            if list.is_empty() {
                return Err(PathSetError::Parse {
                    line: lineno,
                    msg: format!("pair ({src},{dst}) has no paths"),
                });
            }
            paths[(src * n + dst) as usize] = list;
        }
        let (scheme, k, rng_seed, topo_hash) = header.ok_or(PathSetError::Parse {
            line: 1,
            msg: "missing 'paths' header".into(),
        })?;
        for s in 0..n {
            for d in 0..n {
                if s != d && paths[(s * n + d) as usize].is_empty() {
                    return Err(PathSetError::Parse {
                        line: text.lines().count(),
                        msg: format!("missing paths for pair ({s},{d})"),
                    });
                }
            }
        }
        Ok(PathSet {
            scheme,
            k,
            rng_seed,
            topo_hash,
            n_switches: n,
            paths,
        })
    }
}

fn parse_pathset_header(
    line: &str,
    lineno: usize,
) -> Result<(Scheme, u32, u64, u64), PathSetError> {
    let toks: Vec<&str> = line.split_whitespace().collect();
    if toks.len() != 5 || toks[0] != "paths" {
        return Err(PathSetError::Parse {
            line: lineno,
            msg: "expected header 'paths scheme=<S> k=<K> seed=<seed> topo=<hash>'".into(),
        });
    }
    let field = |tok: &str, name: &str| -> Result<String, PathSetError> {
        tok.strip_prefix(&format!("{name}="))
            .map(str::to_string)
            .ok_or(PathSetError::Parse {
                line: lineno,
                msg: format!("expected {name}=<value>, got '{tok}'"),
            })
    };
    let scheme = Scheme::parse(&field(toks[1], "scheme")?).ok_or(PathSetError::Parse {
        line: lineno,
        msg: format!("unknown scheme in '{}'", toks[1]),
    })?;
    let k = field(toks[2], "k")?.parse().map_err(|_| PathSetError::Parse {
        line: lineno,
        msg: "bad k".into(),
    })?;
    let seed = field(toks[3], "seed")?
        .parse()
        .map_err(|_| PathSetError::Parse {
            line: lineno,
            msg: "bad seed".into(),
        })?;
    let hash = u64::from_str_radix(&field(toks[4], "topo")?, 16).map_err(|_| {
        PathSetError::Parse {
            line: lineno,
            msg: "bad topo hash".into(),
        }
    })?;
    Ok((scheme, k, seed, hash))
}

/// Computes the per-pair path lists for every ordered switch pair.
///
/// Each pair draws its randomness from a stream derived from
/// (seed, src, dst), so results do not depend on evaluation order and pairs
/// can be computed in parallel.
pub fn build_pathset(topo: &Topology, scheme: Scheme, k: u32, rng_seed: u64) -> PathSet {
    build_pathset_graph(topo.graph(), scheme, k, rng_seed, topo.content_hash())
}

/// As [`build_pathset`], for a bare graph with an explicit binding hash.
pub fn build_pathset_graph(
    g: &Graph,
    scheme: Scheme,
    k: u32,
    rng_seed: u64,
    topo_hash: u64,
) -> PathSet {
    let n = g.n() as u32;
    let rows: Vec<Vec<Vec<Path>>> = (0..n)
        .into_par_iter()
        .map(|src| {
            (0..n)
                .map(|dst| {
                    if src == dst {
                        Vec::new()
                    } else {
                        compute_pair(g, src, dst, scheme, k, rng_seed)
                    }
                })
                .collect()
        })
        .collect();
    PathSet {
        scheme,
        k,
        rng_seed,
        topo_hash,
        n_switches: n,
        paths: rows.into_iter().flatten().collect(),
    }
}

fn compute_pair(
    g: &Graph,
    src: SwitchId,
    dst: SwitchId,
    scheme: Scheme,
    k: u32,
    rng_seed: u64,
) -> Vec<Path> {
    let mut rng = rng::det_rng(rng::derive(rng_seed, &[src as u64, dst as u64]));
    if scheme.is_edge_disjoint() {
        rf_edge_disjoint(g, src, dst, k as usize, scheme.mode(), &mut rng)
    } else {
        yen_ksp(g, src, dst, k as usize, scheme.mode(), &mut rng)
    }
}

/// Load-balance quality of a path set (the paper's Tables 2-4 metrics).
#[derive(Debug, Clone, PartialEq)]
pub struct PathQualityReport {
    /// Mean hop count over all pairs and all their paths.
    pub avg_path_length: f64,
    /// Percentage of pairs whose k paths share no undirected link.
    pub pct_pairs_fully_disjoint: f64,
    /// Maximum number of one pair's paths crossing a single undirected link.
    pub max_edge_share: u32,
}

pub fn quality_report(ps: &PathSet) -> PathQualityReport {
    let n = ps.n_switches();
    let per_src: Vec<(u64, u64, u64, u32)> = (0..n)
        .into_par_iter()
        .map(|src| {
            let mut edge_sum = 0u64;
            let mut path_count = 0u64;
            let mut disjoint_pairs = 0u64;
            let mut max_share = 0u32;
            let mut usage: std::collections::HashMap<(SwitchId, SwitchId), u32> =
                std::collections::HashMap::new();
            for dst in 0..n {
                if dst == src {
                    continue;
                }
                usage.clear();
                let mut pair_max = 0u32;
                for p in ps.paths(src, dst) {
                    edge_sum += p.len_edges() as u64;
                    path_count += 1;
                    for (u, v) in p.edges() {
                        let key = if u < v { (u, v) } else { (v, u) };
                        let c = usage.entry(key).or_insert(0);
                        *c += 1;
                        pair_max = pair_max.max(*c);
                    }
                }
                if pair_max <= 1 {
                    disjoint_pairs += 1;
                }
                max_share = max_share.max(pair_max);
            }
            (edge_sum, path_count, disjoint_pairs, max_share)
        })
        .collect();
    let edge_sum: u64 = per_src.iter().map(|t| t.0).sum();
    let path_count: u64 = per_src.iter().map(|t| t.1).sum();
    let disjoint: u64 = per_src.iter().map(|t| t.2).sum();
    let max_share = per_src.iter().map(|t| t.3).max().unwrap_or(0);
    let pair_count = n as u64 * (n as u64 - 1);
    PathQualityReport {
        avg_path_length: edge_sum as f64 / path_count.max(1) as f64,
        pct_pairs_fully_disjoint: 100.0 * disjoint as f64 / pair_count.max(1) as f64,
        max_edge_share: max_share,
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::topology::TopoSpec;

    /// The worked example graph: one 3-hop route S1-A-G-D1 and six 4-hop
    /// routes between switch 0 (S1) and switch 9 (D1).
    /// Ids: S1=0 A=1 B=2 C=3 E=4 F=5 G=6 H=7 I=8 D1=9.
    pub(crate) fn example_graph() -> Graph {
        Graph::from_edges(
            10,
            &[
                (0, 1),
                (0, 2),
                (0, 3),
                (1, 4),
                (1, 6),
                (2, 4),
                (3, 5),
                (4, 6),
                (4, 7),
                (5, 7),
                (5, 8),
                (6, 9),
                (7, 9),
                (8, 9),
            ],
        )
        .unwrap()
    }

    fn hops(p: &Path) -> Vec<SwitchId> {
        p.hops().to_vec()
    }

    #[test]
    fn dijkstra_direct_edge_on_complete_graph() {
        let t = Topology::generate(TopoSpec::new(5, 6, 4, 3).unwrap()).unwrap();
        let mut rng = rng::det_rng(0);
        let p = dijkstra(t.graph(), 0, 3, Mode::Deterministic, &mut rng).unwrap();
        assert_eq!(hops(&p), vec![0, 3]);
    }

    #[test]
    fn dijkstra_example_graph_shortest() {
        let g = example_graph();
        let mut rng = rng::det_rng(0);
        let p = dijkstra(&g, 0, 9, Mode::Deterministic, &mut rng).unwrap();
        assert_eq!(hops(&p), vec![0, 1, 6, 9]); // S1-A-G-D1
    }

    #[test]
    fn yen_example_graph_deterministic_bias() {
        let g = example_graph();
        let mut rng = rng::det_rng(0);
        let ps = yen_ksp(&g, 0, 9, 3, Mode::Deterministic, &mut rng);
        assert_eq!(
            ps.iter().map(hops).collect::<Vec<_>>(),
            vec![
                vec![0, 1, 6, 9],    // S1-A-G-D1
                vec![0, 1, 4, 6, 9], // S1-A-E-G-D1
                vec![0, 1, 4, 7, 9], // S1-A-E-H-D1
            ]
        );
        // All three share the first link S1-A.
        assert!(ps.iter().all(|p| p.hops()[1] == 1));
    }

    #[test]
    fn yen_example_graph_randomized_lengths() {
        let g = example_graph();
        let four_hop: Vec<Vec<SwitchId>> = vec![
            vec![0, 1, 4, 6, 9],
            vec![0, 1, 4, 7, 9],
            vec![0, 2, 4, 6, 9],
            vec![0, 2, 4, 7, 9],
            vec![0, 3, 5, 7, 9],
            vec![0, 3, 5, 8, 9],
        ];
        let mut seen = HashSet::new();
        for seed in 0..40 {
            let mut rng = rng::det_rng(seed);
            let ps = yen_ksp(&g, 0, 9, 3, Mode::Randomized, &mut rng);
            assert_eq!(ps.len(), 3);
            assert_eq!(hops(&ps[0]), vec![0, 1, 6, 9]); // unique shortest
            for p in &ps[1..] {
                assert_eq!(p.len_edges(), 4);
                assert!(four_hop.contains(&hops(p)));
                seen.insert(hops(p));
            }
            assert_ne!(ps[1], ps[2]);
        }
        // Randomization should reach more than the two vanilla picks.
        assert!(seen.len() > 2, "only saw {seen:?}");
    }

    #[test]
    fn rf_example_graph_disjoint() {
        let g = example_graph();
        let mut rng = rng::det_rng(0);
        let ps = rf_edge_disjoint(&g, 0, 9, 3, Mode::Deterministic, &mut rng);
        assert_eq!(
            ps.iter().map(hops).collect::<Vec<_>>(),
            vec![
                vec![0, 1, 6, 9],    // P0
                vec![0, 2, 4, 7, 9], // P4
                vec![0, 3, 5, 8, 9], // P6
            ]
        );
        let mut used = HashSet::new();
        for p in &ps {
            for (u, v) in p.edges() {
                let key = if u < v { (u, v) } else { (v, u) };
                assert!(used.insert(key), "edge {key:?} shared");
            }
        }
    }

    #[test]
    fn rf_four_cycle_yields_two_paths() {
        let t = Topology::generate(TopoSpec::new(4, 3, 2, 0).unwrap()).unwrap();
        let g = t.graph();
        // Opposite corners: switch 0 and the one at distance 2.
        let dist = g.bfs_distances(0);
        let far = (0..4).find(|&s| dist[s as usize] == 2).unwrap();
        let mut rng = rng::det_rng(0);
        let ps = rf_edge_disjoint(g, 0, far, 3, Mode::Deterministic, &mut rng);
        assert_eq!(ps.len(), 2);
        assert!(ps.iter().all(|p| p.len_edges() == 2));
    }

    #[test]
    fn k1_pathset_is_shortest_paths() {
        let t = Topology::generate(TopoSpec::new(12, 6, 4, 5).unwrap()).unwrap();
        let ps = build_pathset(&t, Scheme::REdKsp, 1, 77);
        for (s, d, paths) in ps.pairs() {
            assert_eq!(paths.len(), 1);
            let dist = t.graph().bfs_distances(s);
            assert_eq!(paths[0].len_edges() as u32, dist[d as usize]);
        }
        let q = quality_report(&ps);
        assert_eq!(q.pct_pairs_fully_disjoint, 100.0);
        assert_eq!(q.max_edge_share, 1);
    }

    #[test]
    fn rksp_preserves_length_multiset() {
        let t = Topology::generate(TopoSpec::new(12, 6, 4, 5).unwrap()).unwrap();
        let ksp = build_pathset(&t, Scheme::Ksp, 6, 1);
        let rksp = build_pathset(&t, Scheme::RKsp, 6, 99);
        for (s, d, paths) in ksp.pairs() {
            let mut a: Vec<usize> = paths.iter().map(Path::len_edges).collect();
            let mut b: Vec<usize> = rksp.paths(s, d).iter().map(Path::len_edges).collect();
            a.sort_unstable();
            b.sort_unstable();
            assert_eq!(a, b, "length multiset differs for ({s},{d})");
        }
    }

    #[test]
    fn yen_prefix_property() {
        let t = Topology::generate(TopoSpec::new(12, 6, 4, 5).unwrap()).unwrap();
        let g = t.graph();
        for k in 1..6 {
            let mut r1 = rng::det_rng(4);
            let mut r2 = rng::det_rng(4);
            let a = yen_ksp(g, 0, 7, k, Mode::Deterministic, &mut r1);
            let b = yen_ksp(g, 0, 7, k + 1, Mode::Deterministic, &mut r2);
            let la: Vec<usize> = a.iter().map(Path::len_edges).collect();
            let lb: Vec<usize> = b.iter().map(Path::len_edges).collect();
            assert_eq!(la[..], lb[..la.len()]);
        }
    }

    #[test]
    fn pathset_roundtrip_and_hash_binding() {
        let t = Topology::generate(TopoSpec::new(8, 4, 3, 2).unwrap()).unwrap();
        let ps = build_pathset(&t, Scheme::REdKsp, 4, 11);
        let text = ps.to_text();
        let back = PathSet::from_text(&text, &t).unwrap();
        assert_eq!(ps, back);
        assert_eq!(text, back.to_text());

        let other = Topology::generate(TopoSpec::new(8, 4, 3, 3).unwrap()).unwrap();
        assert!(matches!(
            PathSet::from_text(&text, &other),
            Err(PathSetError::TopologyMismatch { .. })
        ));
    }

    #[test]
    fn pathset_build_is_deterministic() {
        let t = Topology::generate(TopoSpec::new(12, 6, 4, 5).unwrap()).unwrap();
        let a = build_pathset(&t, Scheme::REdKsp, 8, 42);
        let b = build_pathset(&t, Scheme::REdKsp, 8, 42);
        assert_eq!(a.to_text(), b.to_text());
        let c = build_pathset(&t, Scheme::REdKsp, 8, 43);
        assert_ne!(a.to_text(), c.to_text());
    }

    #[test]
    fn quality_on_example_graph_ksp3() {
        let g = example_graph();
        let ps = build_pathset_graph(&g, Scheme::Ksp, 3, 0, 0);
        // The (0,9) pair shares S1-A across all 3 paths.
        let mut usage: std::collections::HashMap<(u32, u32), u32> = Default::default();
        for p in ps.paths(0, 9) {
            for (u, v) in p.edges() {
                *usage.entry(if u < v { (u, v) } else { (v, u) }).or_insert(0) += 1;
            }
        }
        assert_eq!(usage[&(0, 1)], 3);
    }
}
