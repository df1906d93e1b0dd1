//! Cycle-level packet simulator.
//!
//! Input-queued switches with per-VC FIFOs and credit flow control; the
//! crossbar serves up to `router_speedup` packets per output per cycle into a
//! per-link staging queue, and each link carries one flit per cycle. Packets
//! are source-routed: the full switch path is chosen at injection by the
//! configured routing mechanism and fixed thereafter. A packet's virtual
//! channel index equals the number of hops it has taken, which makes the
//! channel dependency graph acyclic and the network deadlock-free whenever
//! the VC count covers the longest route.

mod engine;

use std::fmt;

use thiserror::Error;

use crate::pathsel::{Path, PathSet};
use crate::rng::DetRng;
use crate::topology::{SwitchId, Topology};
use crate::traffic::{TrafficPattern, Workload};

pub use engine::ReplayResult;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("no path for switch pair ({src},{dst})")]
    NoPath { src: SwitchId, dst: SwitchId },
    #[error("no flit moved for {stalled} cycles with packets in flight (cycle {cycle})")]
    Stalled { cycle: u64, stalled: u64 },
    #[error("replay exceeded its cycle budget ({budget} cycles)")]
    Budget { budget: u64 },
}

/// Routing mechanism: how each packet picks one of the pair's paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mechanism {
    /// Always the shortest path.
    Sp,
    /// Uniform over the pair's path list.
    Random,
    /// Cycle the pair's path list in order.
    RoundRobin,
    /// Minimal path vs. one random intermediate-switch detour, by estimated
    /// latency.
    UgalVanilla,
    /// Minimal path vs. one random non-minimal path from the k-path list.
    KspUgal,
    /// Two random paths from the k-path list, pick the smaller estimate.
    KspAdaptive,
}

impl Mechanism {
    pub const ALL: [Mechanism; 6] = [
        Mechanism::Sp,
        Mechanism::Random,
        Mechanism::RoundRobin,
        Mechanism::UgalVanilla,
        Mechanism::KspUgal,
        Mechanism::KspAdaptive,
    ];

    pub fn parse(s: &str) -> Option<Mechanism> {
        match s.to_ascii_lowercase().as_str() {
            "sp" => Some(Mechanism::Sp),
            "random" => Some(Mechanism::Random),
            "round-robin" | "roundrobin" => Some(Mechanism::RoundRobin),
            "ugal" | "ugal-vanilla" => Some(Mechanism::UgalVanilla),
            "ksp-ugal" => Some(Mechanism::KspUgal),
            "ksp-adaptive" => Some(Mechanism::KspAdaptive),
            _ => None,
        }
    }
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Mechanism::Sp => "sp",
            Mechanism::Random => "random",
            Mechanism::RoundRobin => "round-robin",
            Mechanism::UgalVanilla => "ugal-vanilla",
            Mechanism::KspUgal => "ksp-ugal",
            Mechanism::KspAdaptive => "ksp-adaptive",
        };
        f.write_str(s)
    }
}

/// Simulator parameters, following the common HPC simulation setup:
/// 10-cycle channels, 2.0 router speedup, single-flit packets, one VC per
/// hop with 32-flit buffers, 500-cycle warmup, ten 500-cycle samples, and a
/// 500-cycle saturation threshold.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub channel_latency: u32,
    pub router_speedup: f64,
    pub flits_per_packet: u32,
    /// None: use the smallest safe count (longest route used, at least the
    /// network diameter).
    pub vc_count: Option<u32>,
    pub buffer_per_vc: u32,
    pub warmup_cycles: u64,
    pub sample_cycles: u64,
    pub samples: u32,
    pub saturation_latency: f64,
    /// Offered load in flits per node per cycle, in (0, 1].
    pub injection_rate: f64,
    pub mechanism: Mechanism,
    /// Added to the minimal-path estimate in the UGAL mechanisms.
    pub ugal_bias: i64,
    pub rng_seed: u64,
    /// Per-cycle invariant checks plus per-pair route usage counting.
    pub audit: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            channel_latency: 10,
            router_speedup: 2.0,
            flits_per_packet: 1,
            vc_count: None,
            buffer_per_vc: 32,
            warmup_cycles: 500,
            sample_cycles: 500,
            samples: 10,
            saturation_latency: 500.0,
            injection_rate: 0.1,
            mechanism: Mechanism::KspAdaptive,
            ugal_bias: 0,
            rng_seed: 1,
            audit: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.channel_latency == 0
            || self.flits_per_packet == 0
            || self.buffer_per_vc == 0
            || self.sample_cycles == 0
            || self.samples == 0
        {
            return Err(SimError::Config("cycle counts must be positive".into()));
        }
        if self.router_speedup < 1.0 {
            return Err(SimError::Config("router speedup must be >= 1".into()));
        }
        if !(self.injection_rate > 0.0 && self.injection_rate <= 1.0) {
            return Err(SimError::Config(format!(
                "injection rate must be in (0, 1], got {}",
                self.injection_rate
            )));
        }
        if self.buffer_per_vc < self.flits_per_packet {
            return Err(SimError::Config(
                "VC buffer must hold at least one packet".into(),
            ));
        }
        Ok(())
    }
}

/// What the open-loop injectors send.
#[derive(Debug, Clone, Copy)]
pub enum SimTraffic<'a> {
    /// Destinations drawn per packet from the pattern's weighted demand set;
    /// nodes without demands stay silent.
    Pattern(&'a TrafficPattern),
    /// Uniform over all other nodes.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleStats {
    pub mean_latency: f64,
    pub accepted_throughput: f64,
    pub delivered: u64,
}

/// Measurements from one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimStats {
    pub samples: Vec<SampleStats>,
    /// Delivered-weighted mean latency over the measurement window.
    pub mean_latency: f64,
    pub min_latency: f64,
    pub max_latency: f64,
    /// Mean over samples, flits per node per cycle.
    pub accepted_throughput: f64,
    pub injected: u64,
    pub delivered: u64,
    pub saturated: bool,
    /// Flits carried per cycle per directed link over the measurement window.
    pub link_utilization: Vec<f64>,
    /// Per-pair path usage counts; collected only with `audit`.
    pub route_usage: Option<std::collections::HashMap<(SwitchId, SwitchId), Vec<u64>>>,
}

/// CSV rows for one run: `rate,sample,mean_latency,accepted_throughput`,
/// then a summary row.
pub fn stats_csv(rate: f64, stats: &SimStats) -> String {
    let mut out = String::new();
    for (i, s) in stats.samples.iter().enumerate() {
        out.push_str(&format!(
            "{rate},{i},{},{}\n",
            s.mean_latency, s.accepted_throughput
        ));
    }
    out.push_str(&format!(
        "{rate},summary,{},{}\n",
        stats.mean_latency, stats.accepted_throughput
    ));
    out
}

/// UGAL-style local latency estimate: path length times the occupancy of the
/// source switch's output queue toward the path's first hop.
pub fn estimate_latency(hop_count: usize, first_hop_occupancy: u32) -> i64 {
    hop_count as i64 * first_hop_occupancy as i64
}

/// Latency of an uncontended h-hop packet: one router cycle plus
/// serialization plus channel latency per hop.
pub fn zero_load_latency(hops: usize, channel_latency: u32, flits_per_packet: u32) -> u64 {
    hops as u64 * (channel_latency as u64 + flits_per_packet as u64)
}

/// The route decision for one packet.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum RouteChoice {
    /// Index into the pair's path list.
    Index(usize),
    /// An explicit switch sequence (vanilla UGAL detours).
    Spliced(Vec<SwitchId>),
}

/// Picks a route for one packet at its source switch. `occupancy` reads the
/// source switch's queued flits toward a neighbor.
pub(crate) fn choose_route(
    mechanism: Mechanism,
    src: SwitchId,
    dst: SwitchId,
    ps: &PathSet,
    occupancy: &dyn Fn(SwitchId) -> u32,
    rr_cursor: &mut u32,
    ugal_bias: i64,
    rng: &mut DetRng,
) -> Result<RouteChoice, SimError> {
    use rand::Rng;
    let paths = ps.paths(src, dst);
    if paths.is_empty() {
        return Err(SimError::NoPath { src, dst });
    }
    let est = |p: &Path| estimate_latency(p.len_edges(), occupancy(p.hops()[1]));
    let choice = match mechanism {
        Mechanism::Sp => RouteChoice::Index(0),
        Mechanism::Random => RouteChoice::Index(rng.gen_range(0..paths.len())),
        Mechanism::RoundRobin => {
            let idx = (*rr_cursor as usize) % paths.len();
            *rr_cursor = rr_cursor.wrapping_add(1);
            RouteChoice::Index(idx)
        }
        Mechanism::UgalVanilla => {
            let n = ps.n_switches();
            if n < 3 {
                return Ok(RouteChoice::Index(0));
            }
            // Uniform intermediate switch other than src and dst.
            let mut mid = rng.gen_range(0..n - 2);
            if mid >= src.min(dst) {
                mid += 1;
            }
            if mid >= src.max(dst) {
                mid += 1;
            }
            let a = &ps.paths(src, mid)[0];
            let b = &ps.paths(mid, dst)[0];
            let mut spliced = a.hops().to_vec();
            spliced.extend_from_slice(&b.hops()[1..]);
            let est_min = est(&paths[0]) + ugal_bias;
            let est_alt = estimate_latency(spliced.len() - 1, occupancy(spliced[1]));
            if est_min <= est_alt {
                RouteChoice::Index(0)
            } else {
                RouteChoice::Spliced(spliced)
            }
        }
        Mechanism::KspUgal => {
            if paths.len() == 1 {
                RouteChoice::Index(0)
            } else {
                let alt = 1 + rng.gen_range(0..paths.len() - 1);
                let est_min = est(&paths[0]) + ugal_bias;
                if est_min <= est(&paths[alt]) {
                    RouteChoice::Index(0)
                } else {
                    RouteChoice::Index(alt)
                }
            }
        }
        Mechanism::KspAdaptive => {
            if paths.len() == 1 {
                RouteChoice::Index(0)
            } else {
                let i = rng.gen_range(0..paths.len());
                let mut j = rng.gen_range(0..paths.len() - 1);
                if j >= i {
                    j += 1;
                }
                let (ei, ej) = (est(&paths[i]), est(&paths[j]));
                // Ties: shorter path, then lower index.
                let li = (ei, paths[i].len_edges(), i);
                let lj = (ej, paths[j].len_edges(), j);
                RouteChoice::Index(if li <= lj { i } else { j })
            }
        }
    };
    Ok(choice)
}

/// Runs one open-loop simulation: Bernoulli injection at `injection_rate`
/// per node per cycle, warmup, then `samples` windows of `sample_cycles`.
pub fn run(
    t: &Topology,
    ps: &PathSet,
    cfg: &SimConfig,
    traffic: &SimTraffic,
) -> Result<SimStats, SimError> {
    engine::Engine::new(t, ps, cfg, traffic)?.run_open_loop()
}

/// Latency-vs-load points plus the saturation throughput (the last injection
/// rate before saturation).
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub rate: f64,
    pub mean_latency: f64,
    pub accepted_throughput: f64,
    pub saturated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    pub saturation_throughput: f64,
}

/// Runs `run` per grid rate (ascending), stopping after the first saturated
/// point. Returns the last non-saturated rate as the saturation throughput
/// (0.0 when even the lowest rate saturates).
pub fn saturation_sweep(
    t: &Topology,
    ps: &PathSet,
    cfg: &SimConfig,
    traffic: &SimTraffic,
    rate_grid: &[f64],
) -> Result<SweepResult, SimError> {
    if rate_grid.is_empty() || rate_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SimError::Config("rate grid must be ascending".into()));
    }
    let mut points = Vec::new();
    let mut saturation = 0.0;
    for &rate in rate_grid {
        let mut c = cfg.clone();
        c.injection_rate = rate;
        let stats = run(t, ps, &c, traffic)?;
        points.push(SweepPoint {
            rate,
            mean_latency: stats.mean_latency,
            accepted_throughput: stats.accepted_throughput,
            saturated: stats.saturated,
        });
        if stats.saturated {
            break;
        }
        saturation = rate;
    }
    Ok(SweepResult {
        points,
        saturation_throughput: saturation,
    })
}

/// Replays a node-mapped workload: every node injects one packet per cycle
/// from its open messages (round-robin across flows) until all packets are
/// delivered. Returns the completion cycle and its wall-clock equivalent.
pub fn replay(
    t: &Topology,
    ps: &PathSet,
    cfg: &SimConfig,
    workload: &Workload,
    opts: &ReplayOpts,
) -> Result<ReplayResult, SimError> {
    engine::Engine::new_for_replay(t, ps, cfg, workload, opts)?.run_replay(opts)
}

/// Message segmentation and time conversion for replay.
#[derive(Debug, Clone)]
pub struct ReplayOpts {
    /// Packet payload in bytes; messages are split into ceil(bytes/payload)
    /// packets.
    pub packet_payload: u64,
    /// Link bandwidth in bytes per second; one cycle carries one packet.
    pub link_bandwidth: f64,
}

impl Default for ReplayOpts {
    fn default() -> Self {
        ReplayOpts {
            packet_payload: 1500,
            link_bandwidth: 20e9,
        }
    }
}
