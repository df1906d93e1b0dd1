//! Experiment config files: flat key-value text with one `[...]` section per
//! experiment.
//!
//! ```text
//! # desk-scale path quality
//! [path-quality table2]
//! topo = 36 24 16
//! topo-seeds = 1..10
//! schemes = ksp rksp edksp redksp
//! k = 8
//!
//! [sweep shift36]
//! topo = 36 24 16
//! topo-seeds = 1..3
//! schemes = redksp
//! k = 8
//! mechanisms = sp random ugal ksp-ugal ksp-adaptive
//! pattern = random-shift
//! pattern-seeds = 1..5
//! rates = 0.05:1.0:0.05
//! ```
//!
//! Section headers are `[<evaluator> <name>]` with evaluator one of
//! `path-quality`, `model`, `sweep`, `replay`. Integer lists accept
//! `a..b` inclusive ranges or whitespace/comma-separated values; rate grids
//! accept `start:end:step` or explicit lists.

use std::collections::HashMap;

use super::{Evaluator, Experiment, ExperimentError, PatternSpec, WorkloadSpec};
use crate::pathsel::Scheme;
use crate::simnet::Mechanism;
use crate::traffic::{Mapping, StencilKind};

fn err(line: usize, msg: impl Into<String>) -> ExperimentError {
    ExperimentError::Config {
        line,
        msg: msg.into(),
    }
}

struct Section {
    evaluator: Evaluator,
    name: String,
    line: usize,
    keys: HashMap<String, (usize, String)>,
}

pub fn parse_config(text: &str) -> Result<Vec<Experiment>, ExperimentError> {
    let mut sections: Vec<Section> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(head) = line.strip_prefix('[') {
            let head = head
                .strip_suffix(']')
                .ok_or_else(|| err(lineno, "unterminated section header"))?;
            let mut toks = head.split_whitespace();
            let ev = toks
                .next()
                .and_then(Evaluator::parse)
                .ok_or_else(|| err(lineno, "expected '[<evaluator> <name>]'"))?;
            let name = toks.collect::<Vec<_>>().join("-");
            if name.is_empty() {
                return Err(err(lineno, "section needs a name"));
            }
            sections.push(Section {
                evaluator: ev,
                name,
                line: lineno,
                keys: HashMap::new(),
            });
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(lineno, "expected 'key = value'"))?;
        let section = sections
            .last_mut()
            .ok_or_else(|| err(lineno, "key outside any [section]"))?;
        let key = key.trim().to_ascii_lowercase().replace('_', "-");
        if section
            .keys
            .insert(key.clone(), (lineno, value.trim().to_string()))
            .is_some()
        {
            return Err(err(lineno, format!("duplicate key '{key}'")));
        }
    }
    sections.into_iter().map(build_experiment).collect()
}

fn build_experiment(mut s: Section) -> Result<Experiment, ExperimentError> {
    let line = s.line;
    let take = |s: &mut Section, key: &str| s.keys.remove(key);

    let topo = {
        let (l, v) = take(&mut s, "topo").ok_or_else(|| err(line, "missing 'topo = N x y'"))?;
        let nums = parse_u64_list(&v, l)?;
        if nums.len() != 3 {
            return Err(err(l, "topo needs exactly three values: N x y"));
        }
        (nums[0] as u32, nums[1] as u32, nums[2] as u32)
    };
    let topo_seeds = match take(&mut s, "topo-seeds") {
        Some((l, v)) => parse_u64_list(&v, l)?,
        None => vec![1],
    };
    let schemes = match take(&mut s, "schemes") {
        Some((l, v)) => split_list(&v)
            .map(|tok| Scheme::parse(tok).ok_or_else(|| err(l, format!("unknown scheme '{tok}'"))))
            .collect::<Result<Vec<_>, _>>()?,
        None => Scheme::ALL.to_vec(),
    };
    let k = match take(&mut s, "k") {
        Some((l, v)) => v
            .parse()
            .map_err(|_| err(l, "k must be a positive integer"))?,
        None => 8,
    };
    let mechanisms = match take(&mut s, "mechanisms") {
        Some((l, v)) => split_list(&v)
            .map(|tok| {
                Mechanism::parse(tok).ok_or_else(|| err(l, format!("unknown mechanism '{tok}'")))
            })
            .collect::<Result<Vec<_>, _>>()?,
        None => vec![Mechanism::KspAdaptive],
    };
    let pattern = match take(&mut s, "pattern") {
        Some((l, v)) => Some(
            PatternSpec::parse(&v).ok_or_else(|| err(l, format!("unknown pattern '{v}'")))?,
        ),
        None => None,
    };
    let pattern_seeds = match take(&mut s, "pattern-seeds") {
        Some((l, v)) => parse_u64_list(&v, l)?,
        None => vec![1],
    };
    let rates = match take(&mut s, "rates") {
        Some((l, v)) => parse_rates(&v, l)?,
        None => parse_rates("0.05:1.0:0.05", line)?,
    };
    let workload = match take(&mut s, "workload") {
        Some((l, v)) => {
            let mut toks = v.split_whitespace();
            let kind = toks
                .next()
                .and_then(StencilKind::parse)
                .ok_or_else(|| err(l, "workload kind must be 2dnn/2dnndiag/3dnn/3dnndiag"))?;
            let dims_tok = toks
                .next()
                .ok_or_else(|| err(l, "workload needs grid dims like 16x18"))?;
            let dims: Vec<u32> = dims_tok
                .split('x')
                .map(|d| d.parse().map_err(|_| err(l, format!("bad dim '{d}'"))))
                .collect::<Result<_, _>>()?;
            Some(WorkloadSpec { kind, dims })
        }
        None => None,
    };
    let mapping = match take(&mut s, "mapping") {
        Some((l, v)) => {
            Mapping::parse(&v).ok_or_else(|| err(l, "mapping must be linear or random"))?
        }
        None => Mapping::Linear,
    };
    let bytes_per_process = match take(&mut s, "bytes-per-process") {
        Some((l, v)) => v.parse().map_err(|_| err(l, "bad bytes-per-process"))?,
        None => 65536,
    };
    if let Some(key) = s.keys.keys().next() {
        return Err(err(s.keys[key].0, format!("unknown key '{key}'")));
    }

    match s.evaluator {
        Evaluator::Model => {
            match pattern {
                None => return Err(err(line, "model experiments need a pattern")),
                Some(PatternSpec::Uniform) => {
                    return Err(err(line, "the uniform stream only works with the simulator"))
                }
                _ => {}
            }
        }
        Evaluator::SimSweep => {
            if pattern.is_none() {
                return Err(err(line, "sweep experiments need a pattern"));
            }
        }
        Evaluator::Replay => {
            if workload.is_none() {
                return Err(err(line, "replay experiments need a workload"));
            }
        }
        Evaluator::PathQuality => {}
    }

    Ok(Experiment {
        name: s.name,
        evaluator: s.evaluator,
        topo,
        topo_seeds,
        schemes,
        k,
        mechanisms,
        pattern,
        pattern_seeds,
        rates,
        workload,
        mapping,
        bytes_per_process,
    })
}

fn split_list(v: &str) -> impl Iterator<Item = &str> {
    v.split([' ', ',', '\t']).filter(|t| !t.is_empty())
}

fn parse_u64_list(v: &str, line: usize) -> Result<Vec<u64>, ExperimentError> {
    let mut out = Vec::new();
    for tok in split_list(v) {
        if let Some((a, b)) = tok.split_once("..") {
            let a: u64 = a.parse().map_err(|_| err(line, format!("bad range '{tok}'")))?;
            let b: u64 = b.parse().map_err(|_| err(line, format!("bad range '{tok}'")))?;
            if b < a {
                return Err(err(line, format!("empty range '{tok}'")));
            }
            out.extend(a..=b);
        } else {
            out.push(
                tok.parse()
                    .map_err(|_| err(line, format!("bad integer '{tok}'")))?,
            );
        }
    }
    if out.is_empty() {
        return Err(err(line, "empty list"));
    }
    Ok(out)
}

fn parse_rates(v: &str, line: usize) -> Result<Vec<f64>, ExperimentError> {
    let parse = |tok: &str| -> Result<f64, ExperimentError> {
        tok.parse().map_err(|_| err(line, format!("bad rate '{tok}'")))
    };
    let toks: Vec<&str> = v.split(':').collect();
    let rates: Vec<f64> = if toks.len() == 3 {
        let (start, end, step) = (parse(toks[0])?, parse(toks[1])?, parse(toks[2])?);
        if step <= 0.0 || start <= 0.0 || end < start {
            return Err(err(line, "rate grid must be 'start:end:step' ascending"));
        }
        let n = ((end - start) / step + 1e-9) as usize + 1;
        (0..n).map(|i| start + i as f64 * step).collect()
    } else {
        split_list(v).map(parse).collect::<Result<_, _>>()?
    };
    if rates.is_empty()
        || rates.windows(2).any(|w| w[0] >= w[1])
        || rates.iter().any(|&r| r <= 0.0 || r > 1.0)
    {
        return Err(err(line, "rates must ascend within (0, 1]"));
    }
    Ok(rates)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# comment
[path-quality tables]
topo = 36 24 16
topo-seeds = 1..3
schemes = ksp redksp
k = 8

[sweep shift]
topo = 8 4 3
schemes = redksp
mechanisms = sp, ksp-adaptive
pattern = random-shift
pattern-seeds = 1,2
rates = 0.1:0.5:0.1
";

    #[test]
    fn parses_sections_and_lists() {
        let exps = parse_config(SAMPLE).unwrap();
        assert_eq!(exps.len(), 2);
        assert_eq!(exps[0].evaluator, Evaluator::PathQuality);
        assert_eq!(exps[0].topo_seeds, vec![1, 2, 3]);
        assert_eq!(exps[0].schemes, vec![Scheme::Ksp, Scheme::REdKsp]);
        assert_eq!(exps[1].evaluator, Evaluator::SimSweep);
        assert_eq!(exps[1].mechanisms.len(), 2);
        assert_eq!(exps[1].rates.len(), 5);
        assert_eq!(exps[1].pattern, Some(PatternSpec::RandomShift));
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(parse_config("topo = 1 2 3\n").is_err()); // key before section
        assert!(parse_config("[model m]\ntopo = 8 4 3\n").is_err()); // no pattern
        assert!(parse_config("[sweep s]\ntopo = 8 4 3\npattern = nope\n").is_err());
        assert!(parse_config("[path-quality p]\ntopo = 8 4 3\nbogus = 1\n").is_err());
        let dup = "[path-quality p]\ntopo = 8 4 3\nk = 8\nk = 9\n";
        assert!(matches!(
            parse_config(dup),
            Err(ExperimentError::Config { line: 4, .. })
        ));
    }

    #[test]
    fn replay_requires_workload() {
        let good = "[replay r]\ntopo = 8 4 3\nworkload = 2dnn 2x4\nmapping = random\n";
        let exps = parse_config(good).unwrap();
        assert_eq!(exps[0].workload.as_ref().unwrap().dims, vec![2, 4]);
        assert_eq!(exps[0].mapping, Mapping::Random);
        assert!(parse_config("[replay r]\ntopo = 8 4 3\n").is_err());
    }
}
