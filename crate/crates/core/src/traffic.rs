//! Traffic patterns and stencil workloads over compute nodes.
//!
//! Patterns carry normalized per-source weights so that modeled rates are
//! comparable across pattern families; workloads carry byte volumes for
//! message-level replay.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path as FsPath;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::rng::DetRng;
use crate::topology::NodeId;

#[derive(Debug, Error)]
pub enum TrafficError {
    #[error("shift distance is a multiple of the node count (self-demands)")]
    InvalidShift,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("workload has {ranks} ranks but the network has {nodes} nodes")]
    TooManyRanks { ranks: u32, nodes: u32 },
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Demand {
    pub src: NodeId,
    pub dst: NodeId,
    pub weight: f64,
}

/// A set of (source node, destination node, weight) demands.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficPattern {
    pub name: String,
    pub node_count: u32,
    demands: Vec<Demand>,
}

impl TrafficPattern {
    fn new(name: String, node_count: u32, mut demands: Vec<Demand>) -> Self {
        demands.sort_by_key(|d| (d.src, d.dst));
        TrafficPattern {
            name,
            node_count,
            demands,
        }
    }

    pub fn demands(&self) -> &[Demand] {
        &self.demands
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("pattern {} nodes={}\n", self.name, self.node_count);
        for d in &self.demands {
            out.push_str(&format!("{} {} {}\n", d.src, d.dst, d.weight));
        }
        out
    }

    pub fn save(&self, path: impl AsRef<FsPath>) -> Result<(), TrafficError> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<FsPath>) -> Result<TrafficPattern, TrafficError> {
        Self::from_text(&fs::read_to_string(path)?)
    }

    pub fn from_text(text: &str) -> Result<TrafficPattern, TrafficError> {
        let mut header: Option<(String, u32)> = None;
        let mut demands = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            match &header {
                None => {
                    let toks: Vec<&str> = line.split_whitespace().collect();
                    if toks.len() != 3 || toks[0] != "pattern" {
                        return Err(TrafficError::Parse {
                            line: lineno,
                            msg: "expected header 'pattern <name> nodes=<n>'".into(),
                        });
                    }
                    let nodes = toks[2]
                        .strip_prefix("nodes=")
                        .and_then(|v| v.parse().ok())
                        .ok_or(TrafficError::Parse {
                            line: lineno,
                            msg: "bad nodes= field".into(),
                        })?;
                    header = Some((toks[1].to_string(), nodes));
                }
                Some((_, nodes)) => {
                    let toks: Vec<&str> = line.split_whitespace().collect();
                    if toks.len() != 3 {
                        return Err(TrafficError::Parse {
                            line: lineno,
                            msg: "expected '<src> <dst> <weight>'".into(),
                        });
                    }
                    let src: NodeId = toks[0].parse().map_err(|_| TrafficError::Parse {
                        line: lineno,
                        msg: "bad src".into(),
                    })?;
                    let dst: NodeId = toks[1].parse().map_err(|_| TrafficError::Parse {
                        line: lineno,
                        msg: "bad dst".into(),
                    })?;
                    let weight: f64 = toks[2].parse().map_err(|_| TrafficError::Parse {
                        line: lineno,
                        msg: "bad weight".into(),
                    })?;
                    if src == dst || src >= *nodes || dst >= *nodes || weight < 0.0 {
                        return Err(TrafficError::Parse {
                            line: lineno,
                            msg: format!("invalid demand {src} -> {dst}"),
                        });
                    }
                    demands.push(Demand { src, dst, weight });
                }
            }
        }
        let (name, node_count) = header.ok_or(TrafficError::Parse {
            line: 1,
            msg: "missing 'pattern' header".into(),
        })?;
        let mut seen = std::collections::HashSet::new();
        for d in &demands {
            if !seen.insert((d.src, d.dst)) {
                return Err(TrafficError::Parse {
                    line: 1,
                    msg: format!("duplicate demand ({}, {})", d.src, d.dst),
                });
            }
        }
        Ok(TrafficPattern::new(name, node_count, demands))
    }
}

/// Random pairing: every node sends to exactly one other node and receives
/// from exactly one, with no self-pairs (a random derangement).
pub fn random_permutation(node_count: u32, rng: &mut DetRng) -> TrafficPattern {
    assert!(node_count >= 2, "need at least two nodes");
    let mut targets: Vec<NodeId> = (0..node_count).collect();
    loop {
        targets.shuffle(rng);
        if targets.iter().enumerate().all(|(i, &t)| i as NodeId != t) {
            break;
        }
    }
    let demands = targets
        .iter()
        .enumerate()
        .map(|(i, &t)| Demand {
            src: i as NodeId,
            dst: t,
            weight: 1.0,
        })
        .collect();
    TrafficPattern::new("permutation".into(), node_count, demands)
}

/// Node i sends to node (i + x) mod node_count.
pub fn shift(node_count: u32, x: u32) -> Result<TrafficPattern, TrafficError> {
    assert!(node_count >= 2, "need at least two nodes");
    let x = x % node_count;
    if x == 0 {
        return Err(TrafficError::InvalidShift);
    }
    let demands = (0..node_count)
        .map(|i| Demand {
            src: i,
            dst: (i + x) % node_count,
            weight: 1.0,
        })
        .collect();
    Ok(TrafficPattern::new(
        format!("shift({x})"),
        node_count,
        demands,
    ))
}

/// Every node sends to x distinct random destinations, weight 1/x each.
pub fn random_x(node_count: u32, x: u32, rng: &mut DetRng) -> Result<TrafficPattern, TrafficError> {
    if x == 0 || x > node_count - 1 {
        return Err(TrafficError::InvalidParam(format!(
            "random(x) needs 1 <= x <= nodes-1, got x={x} nodes={node_count}"
        )));
    }
    let w = 1.0 / x as f64;
    let mut demands = Vec::with_capacity((node_count * x) as usize);
    let mut candidates: Vec<NodeId> = (0..node_count).collect();
    for src in 0..node_count {
        // Move src out of the sampled prefix, then partially shuffle.
        candidates.swap(src as usize, (node_count - 1) as usize);
        for i in 0..x as usize {
            let j = rng.gen_range(i..(node_count - 1) as usize);
            candidates.swap(i, j);
            demands.push(Demand {
                src,
                dst: candidates[i],
                weight: w,
            });
        }
        // Restore the identity layout for the next source.
        candidates.sort_unstable();
    }
    Ok(TrafficPattern::new(
        format!("random({x})"),
        node_count,
        demands,
    ))
}

/// Every ordered pair, weight 1/(node_count - 1).
pub fn all_to_all(node_count: u32) -> TrafficPattern {
    assert!(node_count >= 2, "need at least two nodes");
    let w = 1.0 / (node_count - 1) as f64;
    let mut demands = Vec::with_capacity((node_count * (node_count - 1)) as usize);
    for s in 0..node_count {
        for d in 0..node_count {
            if s != d {
                demands.push(Demand {
                    src: s,
                    dst: d,
                    weight: w,
                });
            }
        }
    }
    TrafficPattern::new("all-to-all".into(), node_count, demands)
}

/// Stateless per-packet destination sampler: uniform over all nodes except
/// the source. Used by the simulator's open-loop uniform traffic.
#[derive(Debug, Clone, Copy)]
pub struct UniformStream {
    node_count: u32,
}

pub fn uniform_random_stream(node_count: u32) -> UniformStream {
    assert!(node_count >= 2, "need at least two nodes");
    UniformStream { node_count }
}

impl UniformStream {
    pub fn sample(&self, src: NodeId, rng: &mut DetRng) -> NodeId {
        let d = rng.gen_range(0..self.node_count - 1);
        if d >= src {
            d + 1
        } else {
            d
        }
    }
}

/// Stencil exchange shapes on a periodic (torus) process grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StencilKind {
    /// 4 axis neighbors on a 2-D grid.
    Nn2d,
    /// 8 axis + diagonal neighbors on a 2-D grid.
    Nn2dDiag,
    /// 6 axis neighbors on a 3-D grid.
    Nn3d,
    /// 26 axis + diagonal neighbors on a 3-D grid.
    Nn3dDiag,
}

impl StencilKind {
    pub fn parse(s: &str) -> Option<StencilKind> {
        match s.to_ascii_lowercase().as_str() {
            "2dnn" => Some(StencilKind::Nn2d),
            "2dnndiag" => Some(StencilKind::Nn2dDiag),
            "3dnn" => Some(StencilKind::Nn3d),
            "3dnndiag" => Some(StencilKind::Nn3dDiag),
            _ => None,
        }
    }

    fn ndims(self) -> usize {
        match self {
            StencilKind::Nn2d | StencilKind::Nn2dDiag => 2,
            StencilKind::Nn3d | StencilKind::Nn3dDiag => 3,
        }
    }

    fn offsets(self) -> Vec<Vec<i64>> {
        match self {
            StencilKind::Nn2d => vec![vec![-1, 0], vec![1, 0], vec![0, -1], vec![0, 1]],
            StencilKind::Nn2dDiag => {
                let mut out = Vec::new();
                for dx in -1..=1i64 {
                    for dy in -1..=1i64 {
                        if dx != 0 || dy != 0 {
                            out.push(vec![dx, dy]);
                        }
                    }
                }
                out
            }
            StencilKind::Nn3d => vec![
                vec![-1, 0, 0],
                vec![1, 0, 0],
                vec![0, -1, 0],
                vec![0, 1, 0],
                vec![0, 0, -1],
                vec![0, 0, 1],
            ],
            StencilKind::Nn3dDiag => {
                let mut out = Vec::new();
                for dx in -1..=1i64 {
                    for dy in -1..=1i64 {
                        for dz in -1..=1i64 {
                            if dx != 0 || dy != 0 || dz != 0 {
                                out.push(vec![dx, dy, dz]);
                            }
                        }
                    }
                }
                out
            }
        }
    }
}

impl fmt::Display for StencilKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            StencilKind::Nn2d => "2DNN",
            StencilKind::Nn2dDiag => "2DNNdiag",
            StencilKind::Nn3d => "3DNN",
            StencilKind::Nn3dDiag => "3DNNdiag",
        };
        f.write_str(s)
    }
}

/// Rank-to-node assignment for a workload.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mapping {
    /// Rank r runs on node r.
    Linear,
    /// A seeded random bijection from ranks to nodes.
    Random,
}

impl Mapping {
    pub fn parse(s: &str) -> Option<Mapping> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Some(Mapping::Linear),
            "random" => Some(Mapping::Random),
            _ => None,
        }
    }
}

impl fmt::Display for Mapping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mapping::Linear => f.write_str("linear"),
            Mapping::Random => f.write_str("random"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Message {
    pub src: u32,
    pub dst: u32,
    pub bytes: u64,
}

/// A message-level workload. Endpoints are logical ranks until a mapping is
/// applied, then physical compute nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Workload {
    pub name: String,
    pub ranks: u32,
    /// Present once endpoints refer to compute nodes.
    pub mapping: Option<Mapping>,
    messages: Vec<Message>,
}

impl Workload {
    pub fn messages(&self) -> &[Message] {
        &self.messages
    }

    pub fn is_mapped(&self) -> bool {
        self.mapping.is_some()
    }

    pub fn to_text(&self) -> String {
        let mapping = match self.mapping {
            Some(m) => m.to_string(),
            None => "unmapped".to_string(),
        };
        let mut out = format!(
            "workload {} ranks={} mapping={}\n",
            self.name, self.ranks, mapping
        );
        for m in &self.messages {
            out.push_str(&format!("{} {} {}\n", m.src, m.dst, m.bytes));
        }
        out
    }

    pub fn save(&self, path: impl AsRef<FsPath>) -> Result<(), TrafficError> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<FsPath>) -> Result<Workload, TrafficError> {
        Self::from_text(&fs::read_to_string(path)?)
    }

    pub fn from_text(text: &str) -> Result<Workload, TrafficError> {
        let mut header: Option<(String, u32, Option<Mapping>)> = None;
        let mut messages = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if header.is_none() {
                let toks: Vec<&str> = line.split_whitespace().collect();
                if toks.len() != 4 || toks[0] != "workload" {
                    return Err(TrafficError::Parse {
                        line: lineno,
                        msg: "expected header 'workload <name> ranks=<r> mapping=<m>'".into(),
                    });
                }
                let ranks = toks[2]
                    .strip_prefix("ranks=")
                    .and_then(|v| v.parse().ok())
                    .ok_or(TrafficError::Parse {
                        line: lineno,
                        msg: "bad ranks= field".into(),
                    })?;
                let mapping = match toks[3].strip_prefix("mapping=") {
                    Some("unmapped") => None,
                    Some(m) => Some(Mapping::parse(m).ok_or(TrafficError::Parse {
                        line: lineno,
                        msg: format!("unknown mapping '{m}'"),
                    })?),
                    None => {
                        return Err(TrafficError::Parse {
                            line: lineno,
                            msg: "bad mapping= field".into(),
                        })
                    }
                };
                header = Some((toks[1].to_string(), ranks, mapping));
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 3 {
                return Err(TrafficError::Parse {
                    line: lineno,
                    msg: "expected '<src> <dst> <bytes>'".into(),
                });
            }
            let field = |tok: &str| -> Result<u64, TrafficError> {
                tok.parse().map_err(|_| TrafficError::Parse {
                    line: lineno,
                    msg: format!("bad integer '{tok}'"),
                })
            };
            messages.push(Message {
                src: field(toks[0])? as u32,
                dst: field(toks[1])? as u32,
                bytes: field(toks[2])?,
            });
        }
        let (name, ranks, mapping) = header.ok_or(TrafficError::Parse {
            line: 1,
            msg: "missing 'workload' header".into(),
        })?;
        Ok(Workload {
            name,
            ranks,
            mapping,
            messages,
        })
    }
}

/// Builds a stencil workload on a periodic grid. Each rank sends
/// bytes_per_process split evenly across the stencil's neighbor offsets;
/// offsets that wrap onto the same neighbor (tiny grids) are merged.
pub fn stencil(
    kind: StencilKind,
    dims: &[u32],
    bytes_per_process: u64,
) -> Result<Workload, TrafficError> {
    if dims.len() != kind.ndims() {
        return Err(TrafficError::DimensionMismatch(format!(
            "{kind} needs {} dimensions, got {}",
            kind.ndims(),
            dims.len()
        )));
    }
    if dims.iter().any(|&d| d == 0) {
        return Err(TrafficError::DimensionMismatch(
            "dimensions must be positive".into(),
        ));
    }
    let ranks: u64 = dims.iter().map(|&d| d as u64).product();
    if ranks < 2 {
        return Err(TrafficError::DimensionMismatch(
            "grid must contain at least two ranks".into(),
        ));
    }
    let offsets = kind.offsets();
    let per_neighbor = bytes_per_process / offsets.len() as u64;
    let mut messages = Vec::new();
    let mut coords = vec![0u32; dims.len()];
    for rank in 0..ranks as u32 {
        // Row-major coordinates of this rank.
        let mut rem = rank;
        for i in (0..dims.len()).rev() {
            coords[i] = rem % dims[i];
            rem /= dims[i];
        }
        let mut per_dst: BTreeMap<u32, u64> = BTreeMap::new();
        for off in &offsets {
            let mut nbr = 0u32;
            for i in 0..dims.len() {
                let d = dims[i] as i64;
                let c = (coords[i] as i64 + off[i]).rem_euclid(d) as u32;
                nbr = nbr * dims[i] + c;
            }
            if nbr != rank {
                *per_dst.entry(nbr).or_insert(0) += per_neighbor;
            }
        }
        for (dst, bytes) in per_dst {
            messages.push(Message {
                src: rank,
                dst,
                bytes,
            });
        }
    }
    Ok(Workload {
        name: kind.to_string(),
        ranks: ranks as u32,
        mapping: None,
        messages,
    })
}

/// Assigns ranks to compute nodes. Linear puts rank r on node r; random draws
/// a seeded bijection.
pub fn apply_mapping(
    w: &Workload,
    mapping: Mapping,
    node_count: u32,
    rng: &mut DetRng,
) -> Result<Workload, TrafficError> {
    if w.ranks > node_count {
        return Err(TrafficError::TooManyRanks {
            ranks: w.ranks,
            nodes: node_count,
        });
    }
    let assign: Vec<NodeId> = match mapping {
        Mapping::Linear => (0..w.ranks).collect(),
        Mapping::Random => {
            let mut nodes: Vec<NodeId> = (0..node_count).collect();
            nodes.shuffle(rng);
            nodes.truncate(w.ranks as usize);
            nodes
        }
    };
    let mut messages: Vec<Message> = w
        .messages
        .iter()
        .map(|m| Message {
            src: assign[m.src as usize],
            dst: assign[m.dst as usize],
            bytes: m.bytes,
        })
        .collect();
    messages.sort_by_key(|m| (m.src, m.dst));
    Ok(Workload {
        name: w.name.clone(),
        ranks: w.ranks,
        mapping: Some(mapping),
        messages,
    })
}
