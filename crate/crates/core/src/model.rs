//! Analytic multipath throughput model.
//!
//! Every demand realizes as one subflow per path in its pair's list. A
//! directed link used X times by subflows has load X (unit capacity); a
//! subflow's rate is the inverse of the maximum load along its path, and a
//! flow's rate is the sum of its subflow rates. Demands whose endpoints share
//! a host switch never enter the network and rate at full injection speed.

use thiserror::Error;

use crate::pathsel::PathSet;
use crate::topology::{Graph, NodeId, SwitchId, Topology};
use crate::traffic::TrafficPattern;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("no path for switch pair ({src},{dst})")]
    MissingPath { src: SwitchId, dst: SwitchId },
}

/// Per-directed-link subflow loads (X / C with C = 1).
#[derive(Debug, Clone, PartialEq)]
pub struct LinkLoads {
    per_link: Vec<f64>,
}

impl LinkLoads {
    pub fn get(&self, g: &Graph, u: SwitchId, v: SwitchId) -> f64 {
        g.link_id(u, v).map_or(0.0, |id| self.per_link[id])
    }

    pub fn iter<'a>(&'a self, g: &'a Graph) -> impl Iterator<Item = (SwitchId, SwitchId, f64)> + 'a {
        self.per_link
            .iter()
            .enumerate()
            .map(|(id, &load)| {
                let (u, v) = g.link_endpoints(id);
                (u, v, load)
            })
    }

    pub fn max(&self) -> f64 {
        self.per_link.iter().cloned().fold(0.0, f64::max)
    }

    /// CSV dump: `src_switch,dst_switch,load`.
    pub fn to_csv(&self, g: &Graph) -> String {
        let mut out = String::from("src_switch,dst_switch,load\n");
        for (u, v, load) in self.iter(g) {
            out.push_str(&format!("{u},{v},{load}\n"));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowRate {
    pub src: NodeId,
    pub dst: NodeId,
    /// Sum of subflow rates; can exceed 1 for disjoint multi-paths.
    pub raw: f64,
    /// Raw rate capped at the injection bandwidth.
    pub clipped: f64,
}

/// Modeled rates for every demand of a pattern, plus link loads and
/// normalized-throughput aggregates.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowRateReport {
    pub flows: Vec<FlowRate>,
    pub link_loads: LinkLoads,
    pub mean_raw: f64,
    pub mean_clipped: f64,
    pub min_clipped: f64,
    pub max_clipped: f64,
}

impl FlowRateReport {
    /// CSV dump: `src,dst,raw_rate,clipped_rate` plus a summary row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("src,dst,raw_rate,clipped_rate\n");
        for f in &self.flows {
            out.push_str(&format!("{},{},{},{}\n", f.src, f.dst, f.raw, f.clipped));
        }
        out.push_str(&format!(
            "summary,,{},{}\n",
            self.mean_raw, self.mean_clipped
        ));
        out
    }
}

/// Counts subflow crossings per directed link for switch-level flows.
/// Flows repeat when several demands share a switch pair.
pub fn link_loads_switches(
    g: &Graph,
    ps: &PathSet,
    flows: &[(SwitchId, SwitchId)],
) -> Result<LinkLoads, ModelError> {
    let mut per_link = vec![0.0f64; g.link_count()];
    for &(src, dst) in flows {
        let paths = ps.paths(src, dst);
        if paths.is_empty() {
            return Err(ModelError::MissingPath { src, dst });
        }
        for p in paths {
            for (u, v) in p.edges() {
                per_link[g.link_id(u, v).expect("path edge missing from graph")] += 1.0;
            }
        }
    }
    Ok(LinkLoads { per_link })
}

/// Raw flow rates for switch-level flows, aligned with the input order.
pub fn flow_rates_switches(
    g: &Graph,
    ps: &PathSet,
    flows: &[(SwitchId, SwitchId)],
) -> Result<(Vec<f64>, LinkLoads), ModelError> {
    let loads = link_loads_switches(g, ps, flows)?;
    let rates = flows
        .iter()
        .map(|&(src, dst)| {
            ps.paths(src, dst)
                .iter()
                .map(|p| {
                    let max_load = p
                        .edges()
                        .map(|(u, v)| loads.per_link[g.link_id(u, v).unwrap()])
                        .fold(0.0f64, f64::max);
                    1.0 / max_load
                })
                .sum()
        })
        .collect();
    Ok((rates, loads))
}

/// Per-directed-link loads induced by a node-level pattern. Demands hosted on
/// a single switch contribute nothing.
pub fn link_loads(
    t: &Topology,
    ps: &PathSet,
    pattern: &TrafficPattern,
) -> Result<LinkLoads, ModelError> {
    let flows = switch_flows(t, pattern);
    link_loads_switches(t.graph(), ps, &flows)
}

/// Full model evaluation for a node-level pattern.
pub fn flow_rates(
    t: &Topology,
    ps: &PathSet,
    pattern: &TrafficPattern,
) -> Result<FlowRateReport, ModelError> {
    let g = t.graph();
    let flows = switch_flows(t, pattern);
    let (switch_rates, link_loads) = flow_rates_switches(g, ps, &flows)?;

    let mut rates = Vec::with_capacity(pattern.demands().len());
    let mut cross = switch_rates.into_iter();
    for d in pattern.demands() {
        let raw = if t.host_switch(d.src) == t.host_switch(d.dst) {
            1.0
        } else {
            cross.next().expect("switch flow count mismatch")
        };
        rates.push(FlowRate {
            src: d.src,
            dst: d.dst,
            raw,
            clipped: raw.min(1.0),
        });
    }

    let n = rates.len().max(1) as f64;
    let mean_raw = rates.iter().map(|f| f.raw).sum::<f64>() / n;
    let mean_clipped = rates.iter().map(|f| f.clipped).sum::<f64>() / n;
    let min_clipped = rates.iter().map(|f| f.clipped).fold(f64::INFINITY, f64::min);
    let max_clipped = rates.iter().map(|f| f.clipped).fold(0.0f64, f64::max);
    Ok(FlowRateReport {
        flows: rates,
        link_loads,
        mean_raw,
        mean_clipped,
        min_clipped: if min_clipped.is_finite() { min_clipped } else { 0.0 },
        max_clipped,
    })
}

fn switch_flows(t: &Topology, pattern: &TrafficPattern) -> Vec<(SwitchId, SwitchId)> {
    pattern
        .demands()
        .iter()
        .filter_map(|d| {
            let (s, e) = (t.host_switch(d.src), t.host_switch(d.dst));
            (s != e).then_some((s, e))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pathsel::{build_pathset, build_pathset_graph, tests::example_graph, Scheme};
    use crate::rng::det_rng;
    use crate::topology::TopoSpec;
    use crate::traffic;

    #[test]
    fn single_demand_k1_loads_its_links() {
        // Line graph 0-1-2-3, one flow end to end.
        let g = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let ps = build_pathset_graph(&g, Scheme::Ksp, 1, 0, 0);
        let loads = link_loads_switches(&g, &ps, &[(0, 3)]).unwrap();
        assert_eq!(loads.get(&g, 0, 1), 1.0);
        assert_eq!(loads.get(&g, 1, 2), 1.0);
        assert_eq!(loads.get(&g, 2, 3), 1.0);
        assert_eq!(loads.get(&g, 1, 0), 0.0);
        assert_eq!(loads.get(&g, 3, 2), 0.0);
    }

    #[test]
    fn example_graph_ksp3_single_flow_rate_is_one() {
        let g = example_graph();
        let ps = build_pathset_graph(&g, Scheme::Ksp, 3, 0, 0);
        let loads = link_loads_switches(&g, &ps, &[(0, 9)]).unwrap();
        // All three paths cross S1-A.
        assert_eq!(loads.get(&g, 0, 1), 3.0);
        let (rates, _) = flow_rates_switches(&g, &ps, &[(0, 9)]).unwrap();
        assert_eq!(rates, vec![1.0]); // three subflows at 1/3 each
    }

    #[test]
    fn example_graph_edksp3_single_flow_rate_is_three() {
        let g = example_graph();
        let ps = build_pathset_graph(&g, Scheme::EdKsp, 3, 0, 0);
        let loads = link_loads_switches(&g, &ps, &[(0, 9)]).unwrap();
        assert_eq!(loads.max(), 1.0); // disjoint paths: every used link once
        let (rates, _) = flow_rates_switches(&g, &ps, &[(0, 9)]).unwrap();
        assert_eq!(rates, vec![3.0]);
    }

    #[test]
    fn capacity_feasibility_holds() {
        let t = Topology::generate(TopoSpec::new(12, 6, 4, 3).unwrap()).unwrap();
        let ps = build_pathset(&t, Scheme::Ksp, 4, 0);
        let pattern = traffic::random_permutation(t.node_count(), &mut det_rng(1));
        let report = flow_rates(&t, &ps, &pattern).unwrap();

        // Re-derive each link's assigned rate sum and check it fits capacity.
        let g = t.graph();
        let mut assigned = vec![0.0f64; g.link_count()];
        for d in pattern.demands() {
            let (s, e) = (t.host_switch(d.src), t.host_switch(d.dst));
            if s == e {
                continue;
            }
            for p in ps.paths(s, e) {
                let max_load = p
                    .edges()
                    .map(|(u, v)| report.link_loads.get(g, u, v))
                    .fold(0.0f64, f64::max);
                for (u, v) in p.edges() {
                    assigned[g.link_id(u, v).unwrap()] += 1.0 / max_load;
                }
            }
        }
        for a in assigned {
            assert!(a <= 1.0 + 1e-9, "link oversubscribed: {a}");
        }
    }

    #[test]
    fn adding_a_demand_never_raises_rates() {
        let g = example_graph();
        let ps = build_pathset_graph(&g, Scheme::Ksp, 3, 0, 0);
        let base = vec![(0u32, 9u32)];
        let more = vec![(0u32, 9u32), (2u32, 9u32)];
        let (r1, _) = flow_rates_switches(&g, &ps, &base).unwrap();
        let (r2, _) = flow_rates_switches(&g, &ps, &more).unwrap();
        assert!(r2[0] <= r1[0] + 1e-12);
    }

    #[test]
    fn weights_do_not_change_loads() {
        let t = Topology::generate(TopoSpec::new(8, 4, 3, 1).unwrap()).unwrap();
        let ps = build_pathset(&t, Scheme::Ksp, 3, 0);
        let p1 = traffic::all_to_all(t.node_count());
        let scaled = TrafficPattern::from_text(
            &p1.to_text()
                .lines()
                .map(|l| {
                    if l.starts_with("pattern") {
                        l.to_string()
                    } else {
                        // Triple every weight.
                        let mut toks: Vec<String> =
                            l.split_whitespace().map(str::to_string).collect();
                        let w: f64 = toks[2].parse().unwrap();
                        toks[2] = format!("{}", w * 3.0);
                        toks.join(" ")
                    }
                })
                .collect::<Vec<_>>()
                .join("\n"),
        )
        .unwrap();
        let a = link_loads(&t, &ps, &p1).unwrap();
        let b = link_loads(&t, &ps, &scaled).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn intra_switch_demand_rates_full() {
        // Two nodes per switch so a same-switch demand exists.
        let t = Topology::generate(TopoSpec::new(4, 4, 2, 0).unwrap()).unwrap();
        assert_eq!(t.nodes_of(0), 0..2);
        let ps = build_pathset(&t, Scheme::Ksp, 2, 0);
        let pattern = TrafficPattern::from_text("pattern p nodes=8\n0 1 1\n").unwrap();
        let report = flow_rates(&t, &ps, &pattern).unwrap();
        assert_eq!(report.flows[0].raw, 1.0);
        assert_eq!(report.link_loads.max(), 0.0);
    }

    #[test]
    fn csv_shapes() {
        let g = example_graph();
        let ps = build_pathset_graph(&g, Scheme::EdKsp, 3, 0, 0);
        let (rates, loads) = flow_rates_switches(&g, &ps, &[(0, 9)]).unwrap();
        assert_eq!(rates.len(), 1);
        let csv = loads.to_csv(&g);
        assert!(csv.starts_with("src_switch,dst_switch,load\n"));
        assert_eq!(csv.lines().count(), 1 + g.link_count());
    }
}
