//! Experiment orchestration: cross-product runs over topology seeds, path
//! selection schemes, traffic instances, and routing mechanisms, with
//! deterministic per-cell seeds and per-cell error capture.

mod config;

use std::collections::BTreeMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::model;
use crate::pathsel::{build_pathset, quality_report, PathSet, Scheme};
use crate::rng::{self, fnv1a};
use crate::simnet::{self, Mechanism, ReplayOpts, SimConfig, SimTraffic};
use crate::topology::{TopoSpec, Topology};
use crate::traffic::{self, Mapping, StencilKind, TrafficPattern};

pub use config::parse_config;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config error at line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// How a cell is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Evaluator {
    /// Path-set quality metrics (path length, disjointness, edge sharing).
    PathQuality,
    /// Analytic throughput model.
    Model,
    /// Simulator saturation sweep.
    SimSweep,
    /// Workload replay completion time.
    Replay,
}

impl Evaluator {
    pub fn parse(s: &str) -> Option<Evaluator> {
        match s.to_ascii_lowercase().as_str() {
            "path-quality" | "path_quality" | "paths" => Some(Evaluator::PathQuality),
            "model" => Some(Evaluator::Model),
            "sweep" | "sim-sweep" | "sim_sweep" => Some(Evaluator::SimSweep),
            "replay" => Some(Evaluator::Replay),
            _ => None,
        }
    }
}

/// Traffic families usable from experiment configs and the CLI.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PatternSpec {
    Permutation,
    Shift(u32),
    /// Shift by a distance drawn per pattern seed.
    RandomShift,
    RandomX(u32),
    AllToAll,
    Uniform,
}

impl PatternSpec {
    pub fn parse(s: &str) -> Option<PatternSpec> {
        let s = s.to_ascii_lowercase();
        match s.as_str() {
            "permutation" => return Some(PatternSpec::Permutation),
            "random-shift" => return Some(PatternSpec::RandomShift),
            "all-to-all" | "alltoall" => return Some(PatternSpec::AllToAll),
            "uniform" => return Some(PatternSpec::Uniform),
            _ => {}
        }
        if let Some(x) = s.strip_prefix("shift:") {
            return x.parse().ok().map(PatternSpec::Shift);
        }
        if let Some(x) = s.strip_prefix("random:") {
            return x.parse().ok().map(PatternSpec::RandomX);
        }
        None
    }

    /// Builds the concrete demand set; `None` for the open-loop uniform
    /// stream, which has no finite demand list.
    pub fn build(
        &self,
        node_count: u32,
        seed: u64,
    ) -> Result<Option<TrafficPattern>, traffic::TrafficError> {
        let mut rng = rng::det_rng(seed);
        use rand::Rng;
        Ok(match self {
            PatternSpec::Permutation => Some(traffic::random_permutation(node_count, &mut rng)),
            PatternSpec::Shift(x) => Some(traffic::shift(node_count, *x)?),
            PatternSpec::RandomShift => {
                let x = 1 + rng.gen_range(0..node_count - 1);
                Some(traffic::shift(node_count, x)?)
            }
            PatternSpec::RandomX(x) => Some(traffic::random_x(node_count, *x, &mut rng)?),
            PatternSpec::AllToAll => Some(traffic::all_to_all(node_count)),
            PatternSpec::Uniform => None,
        })
    }
}

impl std::fmt::Display for PatternSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PatternSpec::Permutation => write!(f, "permutation"),
            PatternSpec::Shift(x) => write!(f, "shift:{x}"),
            PatternSpec::RandomShift => write!(f, "random-shift"),
            PatternSpec::RandomX(x) => write!(f, "random:{x}"),
            PatternSpec::AllToAll => write!(f, "all-to-all"),
            PatternSpec::Uniform => write!(f, "uniform"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadSpec {
    pub kind: StencilKind,
    pub dims: Vec<u32>,
}

/// One experiment section: a cross product of seeds, schemes, and mechanisms
/// evaluated one way.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub name: String,
    pub evaluator: Evaluator,
    pub topo: (u32, u32, u32),
    pub topo_seeds: Vec<u64>,
    pub schemes: Vec<Scheme>,
    pub k: u32,
    pub mechanisms: Vec<Mechanism>,
    pub pattern: Option<PatternSpec>,
    pub pattern_seeds: Vec<u64>,
    pub rates: Vec<f64>,
    pub workload: Option<WorkloadSpec>,
    pub mapping: Mapping,
    pub bytes_per_process: u64,
}

/// One long-format result row.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub topo: String,
    pub topo_seed: u64,
    pub pattern_seed: Option<u64>,
    pub scheme: Option<Scheme>,
    pub k: u32,
    pub mechanism: Option<Mechanism>,
    pub metric: String,
    pub value: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default)]
pub struct ExperimentResult {
    pub rows: Vec<Row>,
}

fn sanitize(msg: &str) -> String {
    msg.replace(['\n', '\r'], " ").replace(',', ";")
}

fn opt<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_default()
}

impl ExperimentResult {
    pub fn has_failures(&self) -> bool {
        self.rows.iter().any(|r| r.error.is_some())
    }

    /// Long-format CSV:
    /// `topo,topo_seed,pattern_seed,scheme,k,mechanism,metric,value,error`.
    pub fn to_long_csv(&self, sep: char) -> String {
        let mut out = String::new();
        let header = [
            "topo",
            "topo_seed",
            "pattern_seed",
            "scheme",
            "k",
            "mechanism",
            "metric",
            "value",
            "error",
        ];
        out.push_str(&header.join(&sep.to_string()));
        out.push('\n');
        for r in &self.rows {
            let fields = [
                r.topo.clone(),
                r.topo_seed.to_string(),
                opt(&r.pattern_seed),
                opt(&r.scheme),
                r.k.to_string(),
                opt(&r.mechanism),
                r.metric.clone(),
                opt(&r.value),
                r.error.as_deref().map(sanitize).unwrap_or_default(),
            ];
            out.push_str(&fields.join(&sep.to_string()));
            out.push('\n');
        }
        out
    }

    /// Companion summary: mean over seeds per (topo, scheme, mechanism,
    /// metric) group.
    pub fn to_summary_csv(&self, sep: char) -> String {
        let mut groups: BTreeMap<(String, String, String, String, u32), (f64, u64)> =
            BTreeMap::new();
        for r in &self.rows {
            let Some(v) = r.value else { continue };
            let key = (
                r.topo.clone(),
                opt(&r.scheme),
                opt(&r.mechanism),
                r.metric.clone(),
                r.k,
            );
            let e = groups.entry(key).or_insert((0.0, 0));
            e.0 += v;
            e.1 += 1;
        }
        let s = sep.to_string();
        let mut out = ["topo", "scheme", "k", "mechanism", "metric", "mean", "count"].join(&s);
        out.push('\n');
        for ((topo, scheme, mech, metric, k), (sum, count)) in groups {
            let mean = sum / count as f64;
            out.push_str(
                &[
                    topo,
                    scheme,
                    k.to_string(),
                    mech,
                    metric,
                    mean.to_string(),
                    count.to_string(),
                ]
                .join(&s),
            );
            out.push('\n');
        }
        out
    }

    /// Pivots into paper-shaped tables: one file per (metric, mechanism),
    /// topologies as rows and schemes as columns. Cells average over seeds;
    /// cells whose every sample failed render as `ERR`.
    pub fn report_tables(&self, sep: char) -> Vec<(String, String)> {
        let mut metrics: Vec<(String, String)> = Vec::new();
        for r in &self.rows {
            let key = (r.metric.clone(), opt(&r.mechanism));
            if !r.metric.is_empty() && !metrics.contains(&key) {
                metrics.push(key);
            }
        }
        let mut tables = Vec::new();
        for (metric, mech) in metrics {
            let rows_for: Vec<&Row> = self
                .rows
                .iter()
                .filter(|r| r.metric == metric && opt(&r.mechanism) == mech)
                .collect();
            let mut topos: Vec<String> = Vec::new();
            let mut schemes: Vec<String> = Vec::new();
            for r in &rows_for {
                if !topos.contains(&r.topo) {
                    topos.push(r.topo.clone());
                }
                let s = opt(&r.scheme);
                if !schemes.contains(&s) {
                    schemes.push(s);
                }
            }
            let mut out = String::from("topology");
            for sc in &schemes {
                out.push(sep);
                out.push_str(sc);
            }
            out.push('\n');
            let mut err_count = 0usize;
            for topo in &topos {
                out.push_str(topo);
                for sc in &schemes {
                    let cells: Vec<&&Row> = rows_for
                        .iter()
                        .filter(|r| &r.topo == topo && &opt(&r.scheme) == sc)
                        .collect();
                    let vals: Vec<f64> = cells.iter().filter_map(|r| r.value).collect();
                    out.push(sep);
                    if vals.is_empty() {
                        if !cells.is_empty() {
                            err_count += cells.len();
                            out.push_str("ERR");
                        }
                    } else {
                        out.push_str(&(vals.iter().sum::<f64>() / vals.len() as f64).to_string());
                    }
                }
                out.push('\n');
            }
            if err_count > 0 {
                out.push_str(&format!("# {err_count} failed cell(s)\n"));
            }
            let name = if mech.is_empty() {
                format!("table_{metric}")
            } else {
                format!("table_{metric}_{mech}")
            };
            tables.push((sanitize_filename(&name), out));
        }
        tables
    }
}

fn sanitize_filename(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_alphanumeric() || c == '_' || c == '-' { c } else { '_' })
        .collect()
}

fn scheme_salt(s: Scheme) -> u64 {
    fnv1a(s.to_string().as_bytes())
}

fn mech_salt(m: Mechanism) -> u64 {
    fnv1a(m.to_string().as_bytes())
}

/// Runs every cell of an experiment. Per-cell failures land in the row's
/// `error` column and never abort the batch. `master_seed` feeds every
/// derived stream; identical configs and seeds reproduce identical rows.
pub fn run_experiment(e: &Experiment, master_seed: u64) -> Result<ExperimentResult, ExperimentError> {
    let (n, x, y) = e.topo;
    let topo_label = format!("RRG({n}x{x}x{y})");
    let mut rows = Vec::new();
    for &topo_seed in &e.topo_seeds {
        let spec = match TopoSpec::new(n, x, y, topo_seed) {
            Ok(s) => s,
            Err(err) => {
                rows.push(Row {
                    topo: topo_label.clone(),
                    topo_seed,
                    pattern_seed: None,
                    scheme: None,
                    k: e.k,
                    mechanism: None,
                    metric: String::new(),
                    value: None,
                    error: Some(err.to_string()),
                });
                continue;
            }
        };
        let topo = match Topology::generate(spec) {
            Ok(t) => t,
            Err(err) => {
                rows.push(Row {
                    topo: topo_label.clone(),
                    topo_seed,
                    pattern_seed: None,
                    scheme: None,
                    k: e.k,
                    mechanism: None,
                    metric: String::new(),
                    value: None,
                    error: Some(err.to_string()),
                });
                continue;
            }
        };
        for &scheme in &e.schemes {
            let ps_seed = rng::derive_str(master_seed, "paths", &[topo_seed, scheme_salt(scheme)]);
            let ps = build_pathset(&topo, scheme, e.k, ps_seed);
            let mut cell_rows =
                run_scheme_cells(e, &topo_label, topo_seed, scheme, &topo, &ps, master_seed);
            rows.append(&mut cell_rows);
        }
    }
    Ok(ExperimentResult { rows })
}

fn run_scheme_cells(
    e: &Experiment,
    topo_label: &str,
    topo_seed: u64,
    scheme: Scheme,
    topo: &Topology,
    ps: &PathSet,
    master: u64,
) -> Vec<Row> {
    let base = Row {
        topo: topo_label.to_string(),
        topo_seed,
        pattern_seed: None,
        scheme: Some(scheme),
        k: e.k,
        mechanism: None,
        metric: String::new(),
        value: None,
        error: None,
    };
    match e.evaluator {
        Evaluator::PathQuality => {
            let q = quality_report(ps);
            [
                ("avg_path_length", q.avg_path_length),
                ("pct_pairs_fully_disjoint", q.pct_pairs_fully_disjoint),
                ("max_edge_share", q.max_edge_share as f64),
            ]
            .into_iter()
            .map(|(m, v)| Row {
                metric: m.into(),
                value: Some(v),
                ..base.clone()
            })
            .collect()
        }
        Evaluator::Model => e
            .pattern_seeds
            .par_iter()
            .flat_map(|&pseed| {
                let r = model_cell(e, topo, ps, master, topo_seed, pseed);
                rows_from_cell(&base, Some(pseed), None, r)
            })
            .collect(),
        Evaluator::SimSweep => {
            let cells: Vec<(u64, Mechanism)> = e
                .pattern_seeds
                .iter()
                .flat_map(|&p| e.mechanisms.iter().map(move |&m| (p, m)))
                .collect();
            cells
                .par_iter()
                .flat_map(|&(pseed, mech)| {
                    let r = sweep_cell(e, topo, ps, master, topo_seed, pseed, mech, scheme);
                    rows_from_cell(&base, Some(pseed), Some(mech), r)
                })
                .collect()
        }
        Evaluator::Replay => {
            let cells: Vec<(u64, Mechanism)> = e
                .pattern_seeds
                .iter()
                .flat_map(|&p| e.mechanisms.iter().map(move |&m| (p, m)))
                .collect();
            cells
                .par_iter()
                .flat_map(|&(pseed, mech)| {
                    let r = replay_cell(e, topo, ps, master, topo_seed, pseed, mech, scheme);
                    rows_from_cell(&base, Some(pseed), Some(mech), r)
                })
                .collect()
        }
    }
}

fn rows_from_cell(
    base: &Row,
    pattern_seed: Option<u64>,
    mechanism: Option<Mechanism>,
    result: Result<Vec<(String, f64)>, String>,
) -> Vec<Row> {
    match result {
        Ok(metrics) => metrics
            .into_iter()
            .map(|(metric, value)| Row {
                pattern_seed,
                mechanism,
                metric,
                value: Some(value),
                ..base.clone()
            })
            .collect(),
        Err(err) => vec![Row {
            pattern_seed,
            mechanism,
            metric: String::new(),
            value: None,
            error: Some(err),
            ..base.clone()
        }],
    }
}

fn model_cell(
    e: &Experiment,
    topo: &Topology,
    ps: &PathSet,
    master: u64,
    topo_seed: u64,
    pseed: u64,
) -> Result<Vec<(String, f64)>, String> {
    let spec = e.pattern.ok_or("model experiment needs a pattern")?;
    let seed = rng::derive_str(master, "pattern", &[topo_seed, pseed]);
    let pattern = spec
        .build(topo.node_count(), seed)
        .map_err(|err| err.to_string())?
        .ok_or("the uniform stream has no demand set; use it with the simulator")?;
    let report = model::flow_rates(topo, ps, &pattern).map_err(|err| err.to_string())?;
    Ok(vec![
        ("model_mean_clipped".into(), report.mean_clipped),
        ("model_mean_raw".into(), report.mean_raw),
    ])
}

#[allow(clippy::too_many_arguments)]
fn sweep_cell(
    e: &Experiment,
    topo: &Topology,
    ps: &PathSet,
    master: u64,
    topo_seed: u64,
    pseed: u64,
    mech: Mechanism,
    scheme: Scheme,
) -> Result<Vec<(String, f64)>, String> {
    let spec = e.pattern.ok_or("sweep experiment needs a pattern")?;
    let seed = rng::derive_str(master, "pattern", &[topo_seed, pseed]);
    let pattern = spec.build(topo.node_count(), seed).map_err(|e| e.to_string())?;
    let traffic = match &pattern {
        Some(p) => SimTraffic::Pattern(p),
        None => SimTraffic::Uniform,
    };
    let cfg = SimConfig {
        mechanism: mech,
        rng_seed: rng::derive_str(
            master,
            "sim",
            &[topo_seed, pseed, scheme_salt(scheme), mech_salt(mech)],
        ),
        ..SimConfig::default()
    };
    let sweep = simnet::saturation_sweep(topo, ps, &cfg, &traffic, &e.rates)
        .map_err(|e| e.to_string())?;
    let mut metrics = vec![(
        "saturation_throughput".to_string(),
        sweep.saturation_throughput,
    )];
    for p in &sweep.points {
        metrics.push((format!("mean_latency@{}", p.rate), p.mean_latency));
        metrics.push((format!("accepted@{}", p.rate), p.accepted_throughput));
    }
    Ok(metrics)
}

#[allow(clippy::too_many_arguments)]
fn replay_cell(
    e: &Experiment,
    topo: &Topology,
    ps: &PathSet,
    master: u64,
    topo_seed: u64,
    pseed: u64,
    mech: Mechanism,
    scheme: Scheme,
) -> Result<Vec<(String, f64)>, String> {
    let w = e.workload.as_ref().ok_or("replay experiment needs a workload")?;
    let raw = traffic::stencil(w.kind, &w.dims, e.bytes_per_process).map_err(|e| e.to_string())?;
    let map_seed = rng::derive_str(master, "map", &[topo_seed, pseed]);
    let mapped = traffic::apply_mapping(
        &raw,
        e.mapping,
        topo.node_count(),
        &mut rng::det_rng(map_seed),
    )
    .map_err(|e| e.to_string())?;
    let cfg = SimConfig {
        mechanism: mech,
        rng_seed: rng::derive_str(
            master,
            "replay",
            &[topo_seed, pseed, scheme_salt(scheme), mech_salt(mech)],
        ),
        ..SimConfig::default()
    };
    let result = simnet::replay(topo, ps, &cfg, &mapped, &ReplayOpts::default())
        .map_err(|e| e.to_string())?;
    Ok(vec![
        ("completion_ms".into(), result.seconds * 1e3),
        ("completion_cycles".into(), result.cycles as f64),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_experiment(evaluator: Evaluator) -> Experiment {
        Experiment {
            name: "t".into(),
            evaluator,
            topo: (8, 4, 3),
            topo_seeds: vec![1, 2],
            schemes: vec![Scheme::Ksp, Scheme::REdKsp],
            k: 3,
            mechanisms: vec![Mechanism::Random],
            pattern: Some(PatternSpec::Permutation),
            pattern_seeds: vec![1],
            rates: vec![0.2, 0.4],
            workload: Some(WorkloadSpec {
                kind: StencilKind::Nn2d,
                dims: vec![2, 4],
            }),
            mapping: Mapping::Linear,
            bytes_per_process: 6000,
        }
    }

    #[test]
    fn path_quality_experiment_rows() {
        let r = run_experiment(&tiny_experiment(Evaluator::PathQuality), 7).unwrap();
        // 2 seeds x 2 schemes x 3 metrics.
        assert_eq!(r.rows.len(), 12);
        assert!(!r.has_failures());
        let csv = r.to_long_csv(',');
        assert!(csv.starts_with("topo,topo_seed,pattern_seed,scheme,k,mechanism,metric,value"));
        assert_eq!(csv.lines().count(), 13);
    }

    #[test]
    fn experiment_reruns_identically() {
        let e = tiny_experiment(Evaluator::Model);
        let a = run_experiment(&e, 7).unwrap().to_long_csv(',');
        let b = run_experiment(&e, 7).unwrap().to_long_csv(',');
        assert_eq!(a, b);
        let c = run_experiment(&e, 8).unwrap().to_long_csv(',');
        assert_ne!(a, c);
    }

    #[test]
    fn adding_schemes_keeps_existing_cells() {
        let mut e = tiny_experiment(Evaluator::Model);
        e.schemes = vec![Scheme::Ksp];
        let small = run_experiment(&e, 7).unwrap();
        e.schemes = vec![Scheme::Ksp, Scheme::RKsp];
        let big = run_experiment(&e, 7).unwrap();
        for row in &small.rows {
            assert!(big.rows.contains(row), "cell changed: {row:?}");
        }
    }

    #[test]
    fn tables_pivot_topology_by_scheme() {
        let r = run_experiment(&tiny_experiment(Evaluator::PathQuality), 7).unwrap();
        let tables = r.report_tables(',');
        let apl = tables
            .iter()
            .find(|(name, _)| name == "table_avg_path_length")
            .unwrap();
        let lines: Vec<&str> = apl.1.lines().collect();
        assert_eq!(lines[0], "topology,KSP,rEDKSP");
        assert_eq!(lines.len(), 2); // single topology row
        assert!(lines[1].starts_with("RRG(8x4x3)"));
    }

    #[test]
    fn empty_results_render_headers() {
        let r = ExperimentResult::default();
        assert_eq!(r.report_tables(',').len(), 0);
        let csv = r.to_long_csv(',');
        assert_eq!(csv.lines().count(), 1);
    }

    #[test]
    fn replay_experiment_produces_times() {
        let r = run_experiment(&tiny_experiment(Evaluator::Replay), 3).unwrap();
        assert!(!r.has_failures(), "{:?}", r.rows);
        let times: Vec<f64> = r
            .rows
            .iter()
            .filter(|row| row.metric == "completion_ms")
            .map(|row| row.value.unwrap())
            .collect();
        assert_eq!(times.len(), 4); // 2 seeds x 2 schemes
        assert!(times.iter().all(|&t| t > 0.0));
    }
}
