//! Experiment manifests: flat `key = value` lines with repeated `[run]`
//! blocks.
//!
//! ```text
//! name = star-sweep
//!
//! [run]
//! id = star31
//! task = simulate
//! graph = star
//! n = 31
//! seed = 4
//! policy = cure
//! r = 1500 3000
//! replicas = 50
//! ```
//!
//! Keys before the first block describe the batch; every run must carry a
//! `seed`.

use std::collections::BTreeMap;
use std::path::PathBuf;

use sisctl::balanced::CutStrategy;
use sisctl::graph::{Bag, WeightedGraph};
use sisctl::num::{int, parse_rational, Rational};
use sisctl::sim::{Adversary, PolicyKind};
use sisctl::{generators, Error, Result};

pub const MAX_NODES: usize = 2000;
pub const MAX_REPLICAS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Simulate,
    Impedance,
    DesignWidth,
    DesignMaxcut,
}

/// What `design-width` returns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum WidthMode {
    /// The fractional covering solution.
    Lp,
    /// The LP rounded to whole-edge deletions.
    Round,
    /// Exact interval scheduling; unit weights and an integer width only.
    Uwcmp,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GraphSpec {
    Path { n: usize, w: Rational },
    Cycle { n: usize, w: Rational },
    Star { n: usize, w: Rational },
    Complete { n: usize, w: Rational },
    ErdosRenyi { n: usize, p: f64, weights: Vec<Rational> },
    File(PathBuf),
}

impl GraphSpec {
    /// Builds the graph; generator seeds come from the run.
    pub fn build(&self, seed: u64) -> Result<WeightedGraph> {
        match self {
            GraphSpec::Path { n, w } => generators::path(*n, *w),
            GraphSpec::Cycle { n, w } => generators::cycle(*n, *w),
            GraphSpec::Star { n, w } => generators::star(*n, *w),
            GraphSpec::Complete { n, w } => generators::complete(*n, *w),
            GraphSpec::ErdosRenyi { n, p, weights } => generators::erdos_renyi(*n, *p, weights, seed),
            GraphSpec::File(path) => {
                let src = std::fs::read_to_string(path)
                    .map_err(|e| Error::Domain(format!("cannot read {}: {e}", path.display())))?;
                sisctl::graph::io::parse_graph(&src)
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            GraphSpec::Path { n, .. } => format!("path-{n}"),
            GraphSpec::Cycle { n, .. } => format!("cycle-{n}"),
            GraphSpec::Star { n, .. } => format!("star-{n}"),
            GraphSpec::Complete { n, .. } => format!("complete-{n}"),
            GraphSpec::ErdosRenyi { n, p, .. } => format!("er-{n}-{p}"),
            GraphSpec::File(p) => p.display().to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitSpec {
    All,
    Nodes(Vec<usize>),
}

impl InitSpec {
    pub fn bag(&self, n: usize) -> Result<Bag> {
        let bag = match self {
            InitSpec::All => Bag::full(n),
            InitSpec::Nodes(v) => Bag::from(v.clone()),
        };
        bag.validate(n)?;
        Ok(bag)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GroupSpec {
    /// `u mod k`.
    Modulo(usize),
    List(Vec<usize>),
}

impl GroupSpec {
    pub fn assign(&self, n: usize) -> Vec<usize> {
        match self {
            GroupSpec::Modulo(k) => (0..n).map(|u| u % k).collect(),
            GroupSpec::List(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub id: String,
    /// Line of the `[run]` header.
    pub line: usize,
    pub task: Task,
    pub graph: GraphSpec,
    pub seed: u64,
    pub init: InitSpec,
    pub strategy: CutStrategy,
    // simulate
    pub policy: PolicyKind,
    pub budgets: Vec<f64>,
    pub replicas: usize,
    pub alpha: Option<f64>,
    pub time_cap: Option<f64>,
    pub adversary: Option<Adversary>,
    pub groups: Option<GroupSpec>,
    pub checkpoints: Vec<usize>,
    pub gamma: Option<Rational>,
    pub idle_waiting: bool,
    pub restart_divisor: Option<f64>,
    // design-width: target width and removal order
    pub width: Option<Rational>,
    pub identity_order: bool,
    pub width_mode: WidthMode,
    // design-maxcut
    pub budget: Option<Rational>,
    pub target: Option<Rational>,
    pub eps: Rational,
}

pub const DEFAULT_EPS: (i64, i64) = (1, 1000);

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentManifest {
    pub name: String,
    /// Output directory, relative to the working directory.
    pub out: Option<PathBuf>,
    pub runs: Vec<RunSpec>,
}

struct Value<'a> {
    text: &'a str,
    line: usize,
    column: usize,
}

impl Value<'_> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            column: self.column,
            message: msg.into(),
        }
    }

    fn usize_in(&self, lo: usize, hi: usize) -> Result<usize> {
        let v: usize = self
            .text
            .parse()
            .map_err(|_| self.err(format!("expected an integer, found {:?}", self.text)))?;
        if v < lo || v > hi {
            return Err(self.err(format!("{v} outside [{lo}, {hi}]")));
        }
        Ok(v)
    }

    fn u64(&self) -> Result<u64> {
        self.text
            .parse()
            .map_err(|_| self.err(format!("expected an unsigned integer, found {:?}", self.text)))
    }

    fn positive(&self) -> Result<f64> {
        let v = self.f64()?;
        if !(v > 0.0) {
            return Err(self.err(format!("expected a positive number, found {}", self.text)));
        }
        Ok(v)
    }

    fn f64(&self) -> Result<f64> {
        let v: f64 = self
            .text
            .parse()
            .map_err(|_| self.err(format!("expected a number, found {:?}", self.text)))?;
        if !v.is_finite() {
            return Err(self.err("number must be finite"));
        }
        Ok(v)
    }

    fn rational(&self) -> Result<Rational> {
        parse_rational(self.text).map_err(|e| self.err(e))
    }

    fn weight(&self) -> Result<Rational> {
        let w = self.rational()?;
        if w < int(0) || w > int(1) {
            return Err(self.err(format!("weight {} outside [0, 1]", self.text)));
        }
        Ok(w)
    }

    fn list<T>(&self, f: impl Fn(&Value<'_>) -> Result<T>) -> Result<Vec<T>> {
        let mut offset = 0;
        let mut out = Vec::new();
        for piece in self.text.split_whitespace() {
            let at = self.text[offset..].find(piece).unwrap() + offset;
            offset = at + piece.len();
            out.push(f(&Value {
                text: piece,
                line: self.line,
                column: self.column + at,
            })?);
        }
        Ok(out)
    }

    fn bool(&self) -> Result<bool> {
        match self.text {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            _ => Err(self.err(format!("expected true or false, found {:?}", self.text))),
        }
    }
}

fn parse_policy(v: &Value<'_>) -> Result<PolicyKind> {
    Ok(match v.text {
        "cure" => PolicyKind::Cure,
        "fair" => PolicyKind::FairCure,
        "design" => PolicyKind::DesignCure,
        "maxcut" => PolicyKind::MaxCutAdversarial,
        "baseline" => PolicyKind::Baseline,
        _ => return Err(v.err(format!("unknown policy {:?}", v.text))),
    })
}

pub fn parse_adversary(s: &str) -> Option<Adversary> {
    match s {
        "uniform" => Some(Adversary::Uniform),
        "anti-greedy" => Some(Adversary::AntiGreedy),
        _ => None,
    }
}

/// `exact`, `spectral` or `auto` (exact up to the default size limit).
pub fn parse_strategy(s: &str) -> Option<CutStrategy> {
    match s {
        "exact" => Some(CutStrategy::Exact),
        "spectral" => Some(CutStrategy::Spectral),
        "auto" => Some(CutStrategy::default()),
        _ => None,
    }
}

fn parse_task(v: &Value<'_>) -> Result<Task> {
    Ok(match v.text {
        "simulate" => Task::Simulate,
        "impedance" => Task::Impedance,
        "design-width" => Task::DesignWidth,
        "design-maxcut" => Task::DesignMaxcut,
        _ => return Err(v.err(format!("unknown task {:?}", v.text))),
    })
}

const RUN_KEYS: &[&str] = &[
    "id",
    "task",
    "graph",
    "n",
    "weight",
    "p",
    "weights",
    "file",
    "seed",
    "init",
    "policy",
    "r",
    "replicas",
    "alpha",
    "time_cap",
    "adversary",
    "groups",
    "checkpoints",
    "gamma",
    "idle_waiting",
    "restart_divisor",
    "width",
    "order",
    "budget",
    "target",
    "eps",
    "mode",
    "balanced_cut",
];

fn build_run(index: usize, line: usize, keys: &BTreeMap<&str, Value<'_>>) -> Result<RunSpec> {
    let missing = |k: &str| Error::Parse {
        line,
        column: 1,
        message: format!("run is missing required key `{k}`"),
    };
    let get = |k: &str| keys.get(k);
    let seed = get("seed").ok_or_else(|| missing("seed"))?.u64()?;
    let task = get("task").map(parse_task).transpose()?.unwrap_or(Task::Simulate);
    let kind = get("graph").ok_or_else(|| missing("graph"))?;
    let n = || -> Result<usize> { get("n").ok_or_else(|| missing("n"))?.usize_in(1, MAX_NODES) };
    let w = || -> Result<Rational> { get("weight").map(Value::weight).transpose().map(|w| w.unwrap_or(int(1))) };
    let graph = match kind.text {
        "path" => GraphSpec::Path { n: n()?, w: w()? },
        "cycle" => {
            let n = n()?;
            if n < 3 {
                return Err(get("n").unwrap().err("a cycle needs at least 3 nodes"));
            }
            GraphSpec::Cycle { n, w: w()? }
        }
        "star" => GraphSpec::Star { n: n()?, w: w()? },
        "complete" => GraphSpec::Complete { n: n()?, w: w()? },
        "er" => {
            let pv = get("p").ok_or_else(|| missing("p"))?;
            let p = pv.f64()?;
            if !(0.0..=1.0).contains(&p) {
                return Err(pv.err(format!("edge probability {p} outside [0, 1]")));
            }
            let weights = match get("weights") {
                Some(v) => v.list(|x| x.weight())?,
                None => vec![int(1)],
            };
            if weights.is_empty() {
                return Err(get("weights").unwrap().err("need at least one weight"));
            }
            GraphSpec::ErdosRenyi { n: n()?, p, weights }
        }
        "file" => GraphSpec::File(PathBuf::from(get("file").ok_or_else(|| missing("file"))?.text)),
        other => return Err(kind.err(format!("unknown graph generator {other:?}"))),
    };
    let init = match get("init") {
        None => InitSpec::All,
        Some(v) if v.text == "all" => InitSpec::All,
        Some(v) => InitSpec::Nodes(v.list(|x| x.usize_in(0, MAX_NODES))?),
    };
    let policy = get("policy").map(parse_policy).transpose()?.unwrap_or(PolicyKind::Cure);
    let budgets = match get("r") {
        Some(v) => v.list(|x| x.positive())?,
        None if task == Task::Simulate => return Err(missing("r")),
        None => Vec::new(),
    };
    let adversary = match get("adversary") {
        Some(v) => Some(parse_adversary(v.text).ok_or_else(|| v.err(format!("unknown adversary {:?}", v.text)))?),
        None if policy == PolicyKind::MaxCutAdversarial => Some(Adversary::Uniform),
        None => None,
    };
    let groups = match get("groups") {
        None => None,
        Some(v) => match v.text.strip_prefix("mod ") {
            Some(k) => Some(GroupSpec::Modulo(
                Value {
                    text: k.trim(),
                    line: v.line,
                    column: v.column + 4,
                }
                .usize_in(1, 64)?,
            )),
            None => Some(GroupSpec::List(v.list(|x| x.usize_in(0, 63))?)),
        },
    };
    if task == Task::Simulate && policy == PolicyKind::FairCure && groups.is_none() {
        return Err(missing("groups"));
    }
    let order = get("order");
    let identity_order = match order.map(|v| v.text) {
        None | Some("appr") => false,
        Some("identity") => true,
        Some(other) => return Err(order.unwrap().err(format!("unknown order {other:?}"))),
    };
    let width = get("width").map(Value::rational).transpose()?;
    if task == Task::DesignWidth && width.is_none() {
        return Err(missing("width"));
    }
    let width_mode = match get("mode").map(|v| (v, v.text)) {
        None | Some((_, "round")) => WidthMode::Round,
        Some((_, "lp")) => WidthMode::Lp,
        Some((_, "uwcmp")) => WidthMode::Uwcmp,
        Some((v, other)) => return Err(v.err(format!("unknown design mode {other:?}"))),
    };
    let strategy = match get("balanced_cut") {
        None => CutStrategy::default(),
        Some(v) => parse_strategy(v.text).ok_or_else(|| v.err(format!("unknown balanced-cut strategy {:?}", v.text)))?,
    };
    let eps = match get("eps") {
        None => Rational::new(DEFAULT_EPS.0, DEFAULT_EPS.1),
        Some(v) => {
            let e = v.rational()?;
            if e <= int(0) {
                return Err(v.err("eps must be positive"));
            }
            e
        }
    };
    let budget = get("budget").map(Value::rational).transpose()?;
    let target = get("target").map(Value::rational).transpose()?;
    if task == Task::DesignMaxcut && budget.is_none() == target.is_none() {
        return Err(Error::Parse {
            line,
            column: 1,
            message: "design-maxcut runs need exactly one of `budget` and `target`".into(),
        });
    }
    Ok(RunSpec {
        id: get("id").map(|v| v.text.to_string()).unwrap_or_else(|| format!("run{}", index + 1)),
        line,
        task,
        graph,
        seed,
        init,
        strategy,
        policy,
        budgets,
        replicas: get("replicas").map(|v| v.usize_in(1, MAX_REPLICAS)).transpose()?.unwrap_or(1),
        alpha: get("alpha").map(Value::positive).transpose()?,
        time_cap: get("time_cap").map(Value::positive).transpose()?,
        adversary,
        groups,
        checkpoints: get("checkpoints").map(|v| v.list(|x| x.usize_in(1, MAX_NODES))).transpose()?.unwrap_or_default(),
        gamma: get("gamma").map(Value::rational).transpose()?,
        idle_waiting: get("idle_waiting").map(Value::bool).transpose()?.unwrap_or(false),
        restart_divisor: get("restart_divisor").map(Value::positive).transpose()?,
        width,
        identity_order,
        width_mode,
        budget,
        target,
        eps,
    })
}

pub fn parse_manifest(src: &str) -> Result<ExperimentManifest> {
    let mut manifest = ExperimentManifest::default();
    // (header line, keys) of the run being read
    let mut current: Option<(usize, BTreeMap<&str, Value<'_>>)> = None;
    let mut finished: Vec<(usize, BTreeMap<&str, Value<'_>>)> = Vec::new();
    for (i, raw) in src.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("");
        let trimmed = body.trim();
        if trimmed.is_empty() {
            continue;
        }
        let indent = body.len() - body.trim_start().len();
        if trimmed.starts_with('[') {
            if trimmed != "[run]" {
                return Err(Error::Parse {
                    line,
                    column: indent + 1,
                    message: format!("unknown section {trimmed:?}; only [run] is allowed"),
                });
            }
            if let Some(run) = current.take() {
                finished.push(run);
            }
            current = Some((line, BTreeMap::new()));
            continue;
        }
        let Some(eq) = body.find('=') else {
            return Err(Error::Parse {
                line,
                column: indent + 1,
                message: "expected `key = value`".into(),
            });
        };
        let key = body[..eq].trim();
        let value_raw = &body[eq + 1..];
        let value = value_raw.trim();
        let column = eq + 2 + (value_raw.len() - value_raw.trim_start().len());
        if key.is_empty() || value.is_empty() {
            return Err(Error::Parse {
                line,
                column: if key.is_empty() { indent + 1 } else { column },
                message: "expected `key = value`".into(),
            });
        }
        let v = Value {
            text: value,
            line,
            column,
        };
        match &mut current {
            None => match key {
                "name" => manifest.name = value.to_string(),
                "out" => manifest.out = Some(PathBuf::from(value)),
                _ => {
                    return Err(Error::Parse {
                        line,
                        column: indent + 1,
                        message: format!("unknown manifest key `{key}`"),
                    })
                }
            },
            Some((_, keys)) => {
                if !RUN_KEYS.contains(&key) {
                    return Err(Error::Parse {
                        line,
                        column: indent + 1,
                        message: format!("unknown run key `{key}`"),
                    });
                }
                if keys.insert(key, v).is_some() {
                    return Err(Error::Parse {
                        line,
                        column: indent + 1,
                        message: format!("duplicate key `{key}`"),
                    });
                }
            }
        }
    }
    if let Some(run) = current.take() {
        finished.push(run);
    }
    for (i, (line, keys)) in finished.iter().enumerate() {
        manifest.runs.push(build_run(i, *line, keys)?);
    }
    let mut ids: Vec<&str> = manifest.runs.iter().map(|r| r.id.as_str()).collect();
    ids.sort_unstable();
    if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
        let run = manifest.runs.iter().filter(|r| r.id == w[0]).nth(1).unwrap();
        return Err(Error::Parse {
            line: run.line,
            column: 1,
            message: format!("duplicate run id {:?}", w[0]),
        });
    }
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use sisctl::num::rat;

    #[test]
    fn parses_runs() {
        let m = parse_manifest(
            "name = demo\n\n[run]\nid = a\ngraph = star\nn = 5\nseed = 1\nr = 10 20\n\n[run]\ntask = design-width\ngraph = path\nn = 10\nseed = 2\nwidth = 0.9\norder = identity\n",
        )
        .unwrap();
        assert_eq!(m.name, "demo");
        assert_eq!(m.runs.len(), 2);
        assert_eq!(m.runs[0].budgets, vec![10.0, 20.0]);
        assert_eq!(m.runs[1].task, Task::DesignWidth);
        assert_eq!(m.runs[1].width, Some(rat(9, 10)));
        assert!(m.runs[1].identity_order);
        assert_eq!(m.runs[1].id, "run2");
    }

    #[test]
    fn empty_manifest() {
        assert!(parse_manifest("# nothing\n").unwrap().runs.is_empty());
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse_manifest("[run]\ngraph = path\nn = x\nseed = 1\nr = 1\n").unwrap_err();
        assert_eq!(
            e,
            Error::Parse {
                line: 3,
                column: 5,
                message: "expected an integer, found \"x\"".into()
            }
        );
        let e = parse_manifest("[run]\ngraph = path\nn = 3\nr = 1\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }), "{e:?}");
        let e = parse_manifest("[run]\ngraph = path\nn = 3\nseed = 1\nr = 1 -2\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 5, column: 7, .. }), "{e:?}");
        let e = parse_manifest("[other]\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, column: 1, .. }));
        let e = parse_manifest("[run]\nbogus = 1\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
    }
}
