//! The cycle engine behind `run`, `saturation_sweep`, and `replay`.
//!
//! Per cycle: channel arrivals, intra-switch deliveries, injection, switch
//! allocation (input FIFOs -> per-link staging, up to `speedup` packets per
//! output), wire transmission (one flit per link per cycle), and NIC head
//! refill with route selection. Flits become eligible for allocation the
//! cycle after they arrive, giving a one-cycle router traversal.

use std::collections::{HashMap, VecDeque};

use rand::Rng;

use crate::pathsel::PathSet;
use crate::rng::{self, DetRng};
use crate::topology::{Graph, NodeId, SwitchId, Topology};
use crate::traffic::Workload;

use super::{
    choose_route, Mechanism, ReplayOpts, RouteChoice, SampleStats, SimConfig, SimError, SimStats,
    SimTraffic,
};

/// Cycles without any flit movement (while packets are in the network)
/// before the run is declared stalled.
const STALL_LIMIT: u64 = 1000;

enum Route {
    FromSet { pair: u32, idx: u16 },
    Owned(Box<[SwitchId]>),
}

struct Flit {
    inject: u64,
    ready_at: u64,
    /// Hops completed; also the VC index of the next link traversal.
    hop: u16,
    /// Link toward the next switch on the route.
    next_link: u32,
    flits: u32,
    route: Route,
}

fn route_hops<'e>(ps: &'e PathSet, n: u32, route: &'e Route) -> &'e [SwitchId] {
    match route {
        Route::FromSet { pair, idx } => ps.paths(pair / n, pair % n)[*idx as usize].hops(),
        Route::Owned(v) => v,
    }
}

enum NodeTraffic {
    Silent,
    Fixed(NodeId),
    Weighted {
        cum: Vec<f64>,
        dst: Vec<NodeId>,
        total: f64,
    },
    Uniform,
}

/// One open flow of a replay workload.
struct MsgStream {
    dst: NodeId,
    packets_left: u64,
}

#[derive(Clone, Copy)]
enum QRef {
    In { link: u32, vc: u32 },
    Nic { node: NodeId },
}

#[derive(Clone, Copy)]
struct Candidate {
    qid: u32,
    q: QRef,
    olink: u32,
    vc_next: u32,
    flits: u32,
    final_hop: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayResult {
    /// Cycle at which the last packet was delivered.
    pub cycles: u64,
    /// Completion converted at one packet payload per link per cycle.
    pub seconds: f64,
    pub packets: u64,
}

pub(super) struct Engine<'a> {
    t: &'a Topology,
    g: &'a Graph,
    ps: &'a PathSet,
    cfg: SimConfig,
    n: u32,
    nodes: u32,
    vc_count: u32,
    speedup: u32,

    link_dst: Vec<SwitchId>,
    in_links: Vec<Vec<u32>>,
    in_buf: Vec<Vec<VecDeque<Flit>>>,
    staging: Vec<VecDeque<Flit>>,
    credits: Vec<Vec<u32>>,
    wire_busy_until: Vec<u64>,
    pending: Vec<u32>,
    resident: Vec<u32>,
    calendar: Vec<Vec<(u32, Flit)>>,
    cal_depth: u64,

    nic_queue: Vec<VecDeque<(u64, NodeId)>>,
    nic_head: Vec<Option<Flit>>,
    nic_queued: u64,
    intra: VecDeque<(u64, u64)>,

    traffic: Vec<NodeTraffic>,
    replay_streams: Vec<Vec<MsgStream>>,
    replay_cursor: Vec<usize>,
    replay_total: u64,

    rr_pair_cursor: Vec<u32>,
    rr_out_cursor: Vec<u32>,
    rng: DetRng,
    scratch: Vec<Candidate>,

    cycle: u64,
    injected: u64,
    delivered: u64,
    nic_queued_max: u64,
    last_progress: u64,
    progress_this_cycle: bool,
    last_delivery_cycle: u64,

    measure_from: u64,
    measure_to: u64,
    lat_sum: Vec<f64>,
    lat_cnt: Vec<u64>,
    del_sample: Vec<u64>,
    lat_min: f64,
    lat_max: f64,
    link_flits: Vec<u64>,
    route_usage: Option<HashMap<(SwitchId, SwitchId), Vec<u64>>>,
}

impl<'a> Engine<'a> {
    pub(super) fn new(
        t: &'a Topology,
        ps: &'a PathSet,
        cfg: &SimConfig,
        traffic: &SimTraffic,
    ) -> Result<Engine<'a>, SimError> {
        let mut e = Engine::common(t, ps, cfg)?;
        let nodes = t.node_count();
        e.traffic = match traffic {
            SimTraffic::Uniform => (0..nodes).map(|_| NodeTraffic::Uniform).collect(),
            SimTraffic::Pattern(p) => {
                if p.node_count != nodes {
                    return Err(SimError::Config(format!(
                        "pattern has {} nodes, topology {}",
                        p.node_count, nodes
                    )));
                }
                let mut per_node: Vec<Vec<(NodeId, f64)>> = vec![Vec::new(); nodes as usize];
                for d in p.demands() {
                    per_node[d.src as usize].push((d.dst, d.weight.max(0.0)));
                }
                per_node
                    .into_iter()
                    .map(|list| match list.len() {
                        0 => NodeTraffic::Silent,
                        1 => NodeTraffic::Fixed(list[0].0),
                        _ => {
                            let mut cum = Vec::with_capacity(list.len());
                            let mut dst = Vec::with_capacity(list.len());
                            let mut acc = 0.0;
                            for (d, w) in list {
                                acc += w;
                                cum.push(acc);
                                dst.push(d);
                            }
                            NodeTraffic::Weighted {
                                cum,
                                dst,
                                total: acc,
                            }
                        }
                    })
                    .collect()
            }
        };
        Ok(e)
    }

    pub(super) fn new_for_replay(
        t: &'a Topology,
        ps: &'a PathSet,
        cfg: &SimConfig,
        w: &Workload,
        opts: &ReplayOpts,
    ) -> Result<Engine<'a>, SimError> {
        if !w.is_mapped() {
            return Err(SimError::Config(
                "workload must be mapped to nodes before replay".into(),
            ));
        }
        if opts.packet_payload == 0 || opts.link_bandwidth <= 0.0 {
            return Err(SimError::Config("bad replay options".into()));
        }
        let mut e = Engine::common(t, ps, cfg)?;
        let nodes = t.node_count();
        e.traffic = (0..nodes).map(|_| NodeTraffic::Silent).collect();
        e.replay_streams = (0..nodes).map(|_| Vec::new()).collect();
        for m in w.messages() {
            if m.src >= nodes || m.dst >= nodes {
                return Err(SimError::Config(format!(
                    "message endpoint {} outside the {nodes}-node network",
                    m.src.max(m.dst)
                )));
            }
            if m.src == m.dst || m.bytes == 0 {
                continue;
            }
            let packets = m.bytes.div_ceil(opts.packet_payload);
            e.replay_total += packets;
            e.replay_streams[m.src as usize].push(MsgStream {
                dst: m.dst,
                packets_left: packets,
            });
        }
        e.replay_cursor = vec![0; nodes as usize];
        Ok(e)
    }

    fn common(t: &'a Topology, ps: &'a PathSet, cfg: &SimConfig) -> Result<Engine<'a>, SimError> {
        cfg.validate()?;
        let g = t.graph();
        let n = g.n() as u32;
        if ps.n_switches() != n || ps.topo_hash() != t.content_hash() {
            return Err(SimError::Config(
                "path set does not belong to this topology".into(),
            ));
        }
        let diameter = t.diameter();
        let mut needed = diameter.max(ps.max_path_len() as u32).max(1);
        if cfg.mechanism == Mechanism::UgalVanilla {
            needed = needed.max(2 * diameter);
        }
        let vc_count = match cfg.vc_count {
            None => needed,
            Some(v) if v >= needed => v,
            Some(v) => {
                return Err(SimError::Config(format!(
                    "vc_count {v} below the {needed} required for routes in use"
                )))
            }
        };
        let links = g.link_count();
        let link_dst: Vec<SwitchId> = (0..links).map(|l| g.link_endpoints(l).1).collect();
        let in_links: Vec<Vec<u32>> = (0..n)
            .map(|sw| {
                g.neighbors(sw)
                    .iter()
                    .map(|&nbr| g.link_id(nbr, sw).unwrap() as u32)
                    .collect()
            })
            .collect();
        let nodes = t.node_count();
        let samples = cfg.samples as usize;
        let measure_from = cfg.warmup_cycles;
        let measure_to = cfg.warmup_cycles + cfg.sample_cycles * cfg.samples as u64;
        let cal_depth = cfg.channel_latency as u64 + cfg.flits_per_packet as u64 + 2;
        Ok(Engine {
            t,
            g,
            ps,
            cfg: cfg.clone(),
            n,
            nodes,
            vc_count,
            speedup: (cfg.router_speedup.round() as u32).max(1),
            link_dst,
            in_links,
            in_buf: (0..links)
                .map(|_| (0..vc_count).map(|_| VecDeque::new()).collect())
                .collect(),
            staging: (0..links).map(|_| VecDeque::new()).collect(),
            credits: vec![vec![cfg.buffer_per_vc; vc_count as usize]; links],
            wire_busy_until: vec![0; links],
            pending: vec![0; links],
            resident: vec![0; n as usize],
            calendar: (0..cal_depth).map(|_| Vec::new()).collect(),
            cal_depth,
            nic_queue: vec![VecDeque::new(); nodes as usize],
            nic_head: (0..nodes).map(|_| None).collect(),
            nic_queued: 0,
            intra: VecDeque::new(),
            traffic: Vec::new(),
            replay_streams: Vec::new(),
            replay_cursor: Vec::new(),
            replay_total: 0,
            rr_pair_cursor: vec![0; (n * n) as usize],
            rr_out_cursor: vec![0; links],
            rng: rng::det_rng(cfg.rng_seed),
            scratch: Vec::new(),
            cycle: 0,
            injected: 0,
            delivered: 0,
            nic_queued_max: 0,
            last_progress: 0,
            progress_this_cycle: false,
            last_delivery_cycle: 0,
            measure_from,
            measure_to,
            lat_sum: vec![0.0; samples],
            lat_cnt: vec![0; samples],
            del_sample: vec![0; samples],
            lat_min: f64::INFINITY,
            lat_max: f64::NEG_INFINITY,
            link_flits: vec![0; links],
            route_usage: cfg.audit.then(HashMap::new),
        })
    }

    pub(super) fn run_open_loop(mut self) -> Result<SimStats, SimError> {
        let total = self.measure_to;
        while self.cycle < total {
            self.step(false)?;
        }
        let window = self.cfg.sample_cycles as f64 * self.nodes as f64;
        let samples: Vec<SampleStats> = (0..self.cfg.samples as usize)
            .map(|i| SampleStats {
                mean_latency: if self.lat_cnt[i] > 0 {
                    self.lat_sum[i] / self.lat_cnt[i] as f64
                } else {
                    0.0
                },
                accepted_throughput: self.del_sample[i] as f64
                    * self.cfg.flits_per_packet as f64
                    / window,
                delivered: self.del_sample[i],
            })
            .collect();
        let total_cnt: u64 = self.lat_cnt.iter().sum();
        let mean_latency = if total_cnt > 0 {
            self.lat_sum.iter().sum::<f64>() / total_cnt as f64
        } else {
            0.0
        };
        let saturated = samples
            .iter()
            .any(|s| s.delivered > 0 && s.mean_latency > self.cfg.saturation_latency);
        let accepted_throughput =
            samples.iter().map(|s| s.accepted_throughput).sum::<f64>() / samples.len() as f64;
        let span = (self.measure_to - self.measure_from) as f64;
        Ok(SimStats {
            samples,
            mean_latency,
            min_latency: if total_cnt > 0 { self.lat_min } else { 0.0 },
            max_latency: if total_cnt > 0 { self.lat_max } else { 0.0 },
            accepted_throughput,
            injected: self.injected,
            delivered: self.delivered,
            saturated,
            link_utilization: self.link_flits.iter().map(|&f| f as f64 / span).collect(),
            route_usage: self.route_usage.take(),
        })
    }

    pub(super) fn run_replay(mut self, opts: &ReplayOpts) -> Result<ReplayResult, SimError> {
        if self.replay_total == 0 {
            return Ok(ReplayResult {
                cycles: 0,
                seconds: 0.0,
                packets: 0,
            });
        }
        // Generous bound: fully serialized delivery plus pipeline slack.
        let budget = 100_000 + self.replay_total * 50;
        while self.delivered < self.replay_total {
            if self.cycle > budget {
                return Err(SimError::Budget { budget });
            }
            self.step(true)?;
        }
        let cycle_seconds = opts.packet_payload as f64 / opts.link_bandwidth;
        Ok(ReplayResult {
            cycles: self.last_delivery_cycle,
            seconds: self.last_delivery_cycle as f64 * cycle_seconds,
            packets: self.delivered,
        })
    }

    fn step(&mut self, replay: bool) -> Result<(), SimError> {
        self.progress_this_cycle = false;
        self.arrivals();
        self.intra_deliveries();
        if replay {
            self.inject_replay();
        } else {
            self.inject_open_loop();
        }
        self.allocate();
        self.wire();
        self.refill_heads()?;
        if self.cfg.audit {
            self.audit_scan();
        }
        if self.progress_this_cycle {
            self.last_progress = self.cycle;
        } else {
            let in_network =
                self.injected - self.delivered - self.nic_queued - self.intra.len() as u64;
            if in_network > 0 && self.cycle - self.last_progress > STALL_LIMIT {
                return Err(SimError::Stalled {
                    cycle: self.cycle,
                    stalled: self.cycle - self.last_progress,
                });
            }
        }
        self.cycle += 1;
        Ok(())
    }

    fn deliver(&mut self, inject_cycle: u64) {
        self.delivered += 1;
        self.last_delivery_cycle = self.cycle;
        self.progress_this_cycle = true;
        if self.cycle >= self.measure_from && self.cycle < self.measure_to {
            let idx = ((self.cycle - self.measure_from) / self.cfg.sample_cycles) as usize;
            let lat = (self.cycle - inject_cycle) as f64;
            self.lat_sum[idx] += lat;
            self.lat_cnt[idx] += 1;
            self.del_sample[idx] += 1;
            self.lat_min = self.lat_min.min(lat);
            self.lat_max = self.lat_max.max(lat);
        }
    }

    fn arrivals(&mut self) {
        let slot = (self.cycle % self.cal_depth) as usize;
        let batch = std::mem::take(&mut self.calendar[slot]);
        for (link, mut f) in batch {
            self.progress_this_cycle = true;
            f.hop += 1;
            let (at_destination, next) = {
                let hops = route_hops(self.ps, self.n, &f.route);
                let done = f.hop as usize == hops.len() - 1;
                (done, if done { 0 } else { hops[f.hop as usize + 1] })
            };
            if at_destination {
                self.deliver(f.inject);
                continue;
            }
            let here = self.link_dst[link as usize];
            let next_link = self.g.link_id(here, next).expect("route leaves the graph") as u32;
            f.next_link = next_link;
            f.ready_at = self.cycle + 1;
            let vc = (f.hop - 1) as usize;
            self.pending[next_link as usize] += f.flits;
            self.resident[here as usize] += 1;
            self.in_buf[link as usize][vc].push_back(f);
        }
    }

    fn intra_deliveries(&mut self) {
        while let Some(&(due, inject)) = self.intra.front() {
            if due > self.cycle {
                break;
            }
            self.intra.pop_front();
            self.deliver(inject);
        }
    }

    fn inject_open_loop(&mut self) {
        let prob = self.cfg.injection_rate / self.cfg.flits_per_packet as f64;
        for node in 0..self.nodes {
            let dst = match &self.traffic[node as usize] {
                NodeTraffic::Silent => continue,
                t => {
                    if self.rng.gen::<f64>() >= prob {
                        continue;
                    }
                    match t {
                        NodeTraffic::Fixed(d) => *d,
                        NodeTraffic::Uniform => {
                            let d = self.rng.gen_range(0..self.nodes - 1);
                            if d >= node {
                                d + 1
                            } else {
                                d
                            }
                        }
                        NodeTraffic::Weighted { cum, dst, total } => {
                            let r = self.rng.gen::<f64>() * total;
                            let i = cum.partition_point(|&c| c <= r).min(dst.len() - 1);
                            dst[i]
                        }
                        NodeTraffic::Silent => unreachable!(),
                    }
                }
            };
            self.enqueue_packet(node, dst);
        }
    }

    fn inject_replay(&mut self) {
        for node in 0..self.nodes as usize {
            if self.replay_streams[node].is_empty() {
                continue;
            }
            // Round-robin across this node's open flows, one packet per cycle.
            let dst = {
                let streams = &mut self.replay_streams[node];
                let mut cur = self.replay_cursor[node];
                let mut tries = streams.len();
                let found = loop {
                    if tries == 0 {
                        break None;
                    }
                    if cur >= streams.len() {
                        cur = 0;
                    }
                    if streams[cur].packets_left > 0 {
                        streams[cur].packets_left -= 1;
                        let d = streams[cur].dst;
                        cur += 1;
                        break Some(d);
                    }
                    cur += 1;
                    tries -= 1;
                };
                self.replay_cursor[node] = cur;
                if found.is_none() {
                    streams.clear();
                }
                found
            };
            if let Some(dst) = dst {
                self.enqueue_packet(node as NodeId, dst);
            }
        }
    }

    fn enqueue_packet(&mut self, src: NodeId, dst: NodeId) {
        self.injected += 1;
        if self.t.host_switch(src) == self.t.host_switch(dst) {
            // Never enters the network; crosses the switch backplane.
            self.intra.push_back((self.cycle + 1, self.cycle));
        } else {
            self.nic_queue[src as usize].push_back((self.cycle, dst));
            self.nic_queued += 1;
            self.nic_queued_max = self.nic_queued_max.max(self.nic_queued);
        }
    }

    /// Move up to `speedup` ready packets per output from input FIFOs and NIC
    /// heads into the output's staging queue, credits permitting.
    fn allocate(&mut self) {
        let mut scratch = std::mem::take(&mut self.scratch);
        for sw in 0..self.n {
            if self.resident[sw as usize] == 0 {
                continue;
            }
            scratch.clear();
            let mut qid = 0u32;
            for &link in &self.in_links[sw as usize] {
                for vc in 0..self.vc_count {
                    if let Some(f) = self.in_buf[link as usize][vc as usize].front() {
                        if f.ready_at <= self.cycle {
                            let hops = route_hops(self.ps, self.n, &f.route);
                            scratch.push(Candidate {
                                qid,
                                q: QRef::In { link, vc },
                                olink: f.next_link,
                                vc_next: f.hop as u32,
                                flits: f.flits,
                                final_hop: f.hop as usize + 1 == hops.len() - 1,
                            });
                        }
                    }
                    qid += 1;
                }
            }
            for node in self.t.nodes_of(sw) {
                if let Some(f) = &self.nic_head[node as usize] {
                    if f.ready_at <= self.cycle {
                        let hops = route_hops(self.ps, self.n, &f.route);
                        scratch.push(Candidate {
                            qid,
                            q: QRef::Nic { node },
                            olink: f.next_link,
                            vc_next: f.hop as u32,
                            flits: f.flits,
                            final_hop: f.hop as usize + 1 == hops.len() - 1,
                        });
                    }
                }
                qid += 1;
            }
            if scratch.is_empty() {
                continue;
            }
            scratch.sort_unstable_by_key(|c| (c.olink, c.qid));
            let mut start = 0;
            while start < scratch.len() {
                let olink = scratch[start].olink as usize;
                let mut end = start;
                while end < scratch.len() && scratch[end].olink as usize == olink {
                    end += 1;
                }
                let cursor = self.rr_out_cursor[olink];
                let pivot =
                    start + scratch[start..end].partition_point(|c| c.qid < cursor);
                let mut granted = 0u32;
                for ci in (pivot..end).chain(start..pivot) {
                    if granted >= self.speedup {
                        break;
                    }
                    let c = scratch[ci];
                    if !c.final_hop && self.credits[olink][c.vc_next as usize] < c.flits {
                        continue;
                    }
                    let f = match c.q {
                        QRef::In { link, vc } => {
                            let f = self.in_buf[link as usize][vc as usize].pop_front().unwrap();
                            self.credits[link as usize][vc as usize] += f.flits;
                            f
                        }
                        QRef::Nic { node } => self.nic_head[node as usize].take().unwrap(),
                    };
                    if !c.final_hop {
                        self.credits[olink][c.vc_next as usize] -= f.flits;
                    }
                    self.resident[sw as usize] -= 1;
                    self.staging[olink].push_back(f);
                    self.rr_out_cursor[olink] = c.qid.wrapping_add(1);
                    self.progress_this_cycle = true;
                    granted += 1;
                }
                start = end;
            }
        }
        self.scratch = scratch;
    }

    /// Send one packet per free link from staging onto the channel.
    fn wire(&mut self) {
        for link in 0..self.staging.len() {
            if self.wire_busy_until[link] > self.cycle {
                continue;
            }
            let Some(f) = self.staging[link].pop_front() else {
                continue;
            };
            self.wire_busy_until[link] = self.cycle + f.flits as u64;
            let arrival = self.cycle + (f.flits as u64 - 1) + self.cfg.channel_latency as u64;
            self.pending[link] -= f.flits;
            if self.cycle >= self.measure_from && self.cycle < self.measure_to {
                self.link_flits[link] += f.flits as u64;
            }
            self.progress_this_cycle = true;
            let slot = (arrival % self.cal_depth) as usize;
            self.calendar[slot].push((link as u32, f));
        }
    }

    /// Pop queued packets into empty NIC head slots, choosing their route.
    fn refill_heads(&mut self) -> Result<(), SimError> {
        for node in 0..self.nodes {
            if self.nic_head[node as usize].is_some() {
                continue;
            }
            let Some(&(inject, dst)) = self.nic_queue[node as usize].front() else {
                continue;
            };
            let src_sw = self.t.host_switch(node);
            let dst_sw = self.t.host_switch(dst);
            let pair = src_sw * self.n + dst_sw;
            let choice = {
                let pending = &self.pending;
                let g = self.g;
                let occ = move |nbr: SwitchId| {
                    pending[g.link_id(src_sw, nbr).expect("estimate for non-neighbor")]
                };
                choose_route(
                    self.cfg.mechanism,
                    src_sw,
                    dst_sw,
                    self.ps,
                    &occ,
                    &mut self.rr_pair_cursor[pair as usize],
                    self.cfg.ugal_bias,
                    &mut self.rng,
                )?
            };
            self.nic_queue[node as usize].pop_front();
            self.nic_queued -= 1;
            if let Some(usage) = &mut self.route_usage {
                if let RouteChoice::Index(i) = choice {
                    let k = self.ps.paths(src_sw, dst_sw).len();
                    let counts = usage.entry((src_sw, dst_sw)).or_insert_with(|| vec![0; k]);
                    counts[i] += 1;
                }
            }
            let (route, first_hop, len) = match choice {
                RouteChoice::Index(i) => {
                    let p = &self.ps.paths(src_sw, dst_sw)[i];
                    (
                        Route::FromSet {
                            pair,
                            idx: i as u16,
                        },
                        p.hops()[1],
                        p.len_edges(),
                    )
                }
                RouteChoice::Spliced(v) => {
                    let first = v[1];
                    let len = v.len() - 1;
                    (Route::Owned(v.into_boxed_slice()), first, len)
                }
            };
            debug_assert!(len <= self.vc_count as usize);
            let next_link = self.g.link_id(src_sw, first_hop).unwrap() as u32;
            let f = Flit {
                inject,
                ready_at: self.cycle + 1,
                hop: 0,
                next_link,
                flits: self.cfg.flits_per_packet,
                route,
            };
            self.pending[next_link as usize] += f.flits;
            self.resident[src_sw as usize] += 1;
            self.nic_head[node as usize] = Some(f);
        }
        Ok(())
    }

    /// Exhaustive per-cycle invariant checks (tests only): packet
    /// conservation, buffer bounds, credit bounds, and VC placement.
    fn audit_scan(&self) {
        let mut in_bufs = 0u64;
        for (link, vcs) in self.in_buf.iter().enumerate() {
            for (vc, q) in vcs.iter().enumerate() {
                let occ: u64 = q.iter().map(|f| f.flits as u64).sum();
                assert!(
                    occ <= self.cfg.buffer_per_vc as u64,
                    "VC buffer overflow on link {link} vc {vc}: {occ}"
                );
                for f in q {
                    assert_eq!(f.hop as usize - 1, vc, "flit stored on wrong VC");
                    assert!((f.hop as u32) <= self.vc_count);
                }
                in_bufs += q.len() as u64;
            }
        }
        for (link, vcs) in self.credits.iter().enumerate() {
            for (vc, &c) in vcs.iter().enumerate() {
                assert!(
                    c <= self.cfg.buffer_per_vc,
                    "credit overflow on link {link} vc {vc}"
                );
            }
        }
        let staged: u64 = self.staging.iter().map(|q| q.len() as u64).sum();
        let flying: u64 = self.calendar.iter().map(|v| v.len() as u64).sum();
        let heads: u64 = self.nic_head.iter().filter(|h| h.is_some()).count() as u64;
        let total = self.delivered
            + self.nic_queued
            + self.intra.len() as u64
            + heads
            + in_bufs
            + staged
            + flying;
        assert_eq!(
            total, self.injected,
            "packet conservation broken at cycle {}",
            self.cycle
        );
    }
}
