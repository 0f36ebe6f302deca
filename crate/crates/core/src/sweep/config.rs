use std::collections::HashSet;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fock::DEFAULT_TAIL_LIMIT;
use crate::states::StateSpec;

pub const DEFAULT_SUBTRACT_CUTOFF: usize = 40;
pub const DEFAULT_DISTILL_CUTOFF: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    Subtract,
    Distill,
}

impl Experiment {
    pub fn modes(self) -> usize {
        match self {
            Experiment::Subtract => 1,
            Experiment::Distill => 2,
        }
    }

    pub fn default_cutoff(self) -> usize {
        match self {
            Experiment::Subtract => DEFAULT_SUBTRACT_CUTOFF,
            Experiment::Distill => DEFAULT_DISTILL_CUTOFF,
        }
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "subtract" => Ok(Experiment::Subtract),
            "distill" => Ok(Experiment::Distill),
            _ => Err(format!(
                "unknown experiment `{s}` (expected subtract or distill)"
            )),
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Experiment::Subtract => "subtract",
            Experiment::Distill => "distill",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Metric {
    PSuccess,
    WignerOrigin,
    Fidelity,
    LogNegativity,
    Purity,
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "p_success" => Ok(Metric::PSuccess),
            "wigner_origin" => Ok(Metric::WignerOrigin),
            "fidelity_target" | "fidelity" => Ok(Metric::Fidelity),
            "log_negativity" => Ok(Metric::LogNegativity),
            "purity" => Ok(Metric::Purity),
            _ => Err(format!("unknown metric `{s}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    /// Uniform in `u`, with `t = 1 − 10^{−u}`.
    LogComplement,
}

impl FromStr for Spacing {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "linear" => Ok(Spacing::Linear),
            "log-complement" => Ok(Spacing::LogComplement),
            _ => Err(format!(
                "unknown spacing `{s}` (expected linear or log-complement)"
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TGrid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    pub spacing: Spacing,
}

impl TGrid {
    pub fn new(start: f64, stop: f64, count: usize, spacing: Spacing) -> Result<Self> {
        for (field, v) in [("t_start", start), ("t_stop", stop)] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::validation(field, format!("{v} is outside [0, 1)")));
            }
        }
        if start >= stop {
            return Err(Error::validation("t_stop", "must exceed t_start"));
        }
        if count < 2 {
            return Err(Error::validation(
                "t_count",
                "at least two points are required",
            ));
        }
        Ok(Self {
            start,
            stop,
            count,
            spacing,
        })
    }

    /// Grid points in increasing order; the endpoints are reproduced exactly.
    pub fn points(&self) -> Vec<f64> {
        let last = self.count - 1;
        let lerp = |a: f64, b: f64, i: usize| a + (b - a) * i as f64 / last as f64;
        (0..self.count)
            .map(|i| {
                if i == 0 {
                    return self.start;
                }
                if i == last {
                    return self.stop;
                }
                match self.spacing {
                    Spacing::Linear => lerp(self.start, self.stop, i),
                    Spacing::LogComplement => {
                        let u0 = -(1.0 - self.start).log10();
                        let u1 = -(1.0 - self.stop).log10();
                        1.0 - 10f64.powf(-lerp(u0, u1, i))
                    }
                }
            })
            .collect()
    }
}

/// A validated sweep description.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub experiment: Experiment,
    pub state: StateSpec,
    pub eta: f64,
    pub steps: Vec<usize>,
    pub t_grid: TGrid,
    pub cutoff: usize,
    pub tail_limit: f64,
    pub metrics: Vec<Metric>,
    pub fidelity_target: Option<StateSpec>,
    pub output: Option<PathBuf>,
}

impl SweepConfig {
    pub fn has_metric(&self, m: Metric) -> bool {
        self.metrics.contains(&m)
    }
}

const KEYS: &[&str] = &[
    "experiment",
    "state",
    "eta",
    "steps",
    "t_start",
    "t_stop",
    "t_count",
    "t_spacing",
    "cutoff",
    "tail_limit",
    "metrics",
    "fidelity_target",
    "output",
];

struct Entry {
    line: usize,
    value: String,
}

fn parse_value<T: FromStr>(entry: &Entry, key: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    entry.value.parse().map_err(|e| Error::Parse {
        line: entry.line,
        message: format!("bad value for `{key}`: {e}"),
    })
}

fn parse_list<T: FromStr>(entry: &Entry, key: &str) -> Result<Vec<T>>
where
    T::Err: fmt::Display,
{
    entry
        .value
        .split(',')
        .map(|item| {
            item.trim().parse().map_err(|e| Error::Parse {
                line: entry.line,
                message: format!("bad item `{}` in `{key}`: {e}", item.trim()),
            })
        })
        .collect()
}

/// Parses the `key = value` configuration format.
pub fn parse_config(text: &str) -> Result<SweepConfig> {
    let mut entries: std::collections::HashMap<&'static str, Entry> = Default::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(Error::Parse {
                line,
                message: "expected `key = value`".into(),
            });
        };
        let key = key.trim();
        let Some(&known) = KEYS.iter().find(|k| **k == key) else {
            return Err(Error::Parse {
                line,
                message: format!("unknown key `{key}`"),
            });
        };
        if entries.contains_key(known) {
            return Err(Error::Parse {
                line,
                message: format!("duplicate key `{key}`"),
            });
        }
        entries.insert(
            known,
            Entry {
                line,
                value: value.trim().to_string(),
            },
        );
    }

    let required = |key: &str| -> Result<&Entry> {
        entries
            .get(key)
            .ok_or_else(|| Error::validation(key, "missing required key"))
    };
    let optional = |key: &str| entries.get(key);

    let experiment: Experiment = parse_value(required("experiment")?, "experiment")?;
    let state: StateSpec = parse_value(required("state")?, "state")?;
    let eta = match optional("eta") {
        Some(e) => parse_value(e, "eta")?,
        None => 1.0,
    };
    let steps: Vec<usize> = parse_list(required("steps")?, "steps")?;
    let t_start: f64 = parse_value(required("t_start")?, "t_start")?;
    let t_stop: f64 = parse_value(required("t_stop")?, "t_stop")?;
    let t_count: usize = parse_value(required("t_count")?, "t_count")?;
    let spacing = match optional("t_spacing") {
        Some(e) => parse_value(e, "t_spacing")?,
        None => Spacing::Linear,
    };
    let cutoff = match optional("cutoff") {
        Some(e) => parse_value(e, "cutoff")?,
        None => experiment.default_cutoff(),
    };
    let tail_limit = match optional("tail_limit") {
        Some(e) => parse_value(e, "tail_limit")?,
        None => DEFAULT_TAIL_LIMIT,
    };
    let fidelity_target: Option<StateSpec> = match optional("fidelity_target") {
        Some(e) => Some(parse_value(e, "fidelity_target")?),
        None => None,
    };
    let metrics: Vec<Metric> = match optional("metrics") {
        Some(e) => parse_list(e, "metrics")?,
        None => {
            let mut m = vec![Metric::PSuccess];
            match experiment {
                Experiment::Subtract => m.push(Metric::WignerOrigin),
                Experiment::Distill => m.push(Metric::LogNegativity),
            }
            if fidelity_target.is_some() {
                m.push(Metric::Fidelity);
            }
            m
        }
    };
    let output = optional("output").map(|e| PathBuf::from(&e.value));

    let t_grid = TGrid::new(t_start, t_stop, t_count, spacing)?;
    validate(SweepConfig {
        experiment,
        state,
        eta,
        steps,
        t_grid,
        cutoff,
        tail_limit,
        metrics,
        fidelity_target,
        output,
    })
}

fn validate(mut c: SweepConfig) -> Result<SweepConfig> {
    if !(c.eta > 0.0 && c.eta <= 1.0) {
        return Err(Error::validation(
            "eta",
            format!("{} is outside (0, 1]", c.eta),
        ));
    }
    if c.steps.is_empty() || c.steps.contains(&0) {
        return Err(Error::validation(
            "steps",
            "every step budget must be at least 1",
        ));
    }
    if c.cutoff < 2 {
        return Err(Error::validation(
            "cutoff",
            "at least two Fock levels are required",
        ));
    }
    if !(c.tail_limit > 0.0 && c.tail_limit < 1.0) {
        return Err(Error::validation("tail_limit", "must lie in (0, 1)"));
    }
    if c.state.modes() != c.experiment.modes() {
        return Err(Error::validation(
            "state",
            format!(
                "`{}` has {} mode(s) but `{}` needs {}",
                c.state,
                c.state.modes(),
                c.experiment,
                c.experiment.modes()
            ),
        ));
    }
    if let Some(target) = &c.fidelity_target {
        if target.modes() != c.state.modes() {
            return Err(Error::validation(
                "fidelity_target",
                "mode count differs from `state`",
            ));
        }
    }
    let mut seen = HashSet::new();
    c.metrics.retain(|m| seen.insert(*m));
    for m in &c.metrics {
        match m {
            Metric::WignerOrigin if c.experiment != Experiment::Subtract => {
                return Err(Error::validation(
                    "metrics",
                    "wigner_origin needs a single-mode experiment",
                ));
            }
            Metric::LogNegativity if c.experiment != Experiment::Distill => {
                return Err(Error::validation(
                    "metrics",
                    "log_negativity needs a two-mode experiment",
                ));
            }
            Metric::Fidelity if c.fidelity_target.is_none() => {
                return Err(Error::validation(
                    "fidelity_target",
                    "required by the fidelity metric",
                ));
            }
            _ => {}
        }
    }
    Ok(c)
}
