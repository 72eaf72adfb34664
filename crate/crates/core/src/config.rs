//! INI-style run configuration.
//!
//! Sections `[integrand]`, `[grid]`, `[initial]`, `[time]`, `[theorem]`,
//! `[budget]` with `key = value` lines; `#` or `;` start a comment. Unknown
//! sections or keys are errors, with the offending line number. All
//! randomness flows from the single `seed` key of `[budget]`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::constants::SearchBudget;
use crate::error::{Error, Result};
use crate::initial::InitialData;
use crate::integrand::Integrand;
use crate::solver::{FlowSettings, GridSpec};

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct IntegrandConfig {
    pub family: String,
    pub dim: usize,
    /// Row-major (n+1)^2 matrix, ellipsoid family only.
    pub matrix: Option<Vec<f64>>,
    /// Perturbation strength, perturbed families only.
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct GridConfig {
    pub cells: usize,
    pub length: f64,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct InitialConfig {
    pub kind: String,
    pub amplitude: f64,
    pub steepness: Option<f64>,
    pub modes: Option<usize>,
    pub width: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SnapshotFormat {
    Csv,
    Bin,
    None,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct TimeConfig {
    pub t_end: f64,
    pub cfl_safety: f64,
    pub sample_every: usize,
    pub output: SnapshotFormat,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct TheoremConfig {
    pub id: u8,
    /// Ball radius of the interior estimate.
    pub radius: Option<f64>,
    /// Pinned height bound; measured from the trajectory when absent.
    pub height: Option<f64>,
}

/// Fully parsed configuration. Sections beyond `[integrand]` are optional and
/// validated by the commands that need them.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RunConfig {
    pub integrand: IntegrandConfig,
    pub grid: Option<GridConfig>,
    pub initial: Option<InitialConfig>,
    pub time: Option<TimeConfig>,
    pub theorem: Option<TheoremConfig>,
    pub budget: SearchBudget,
}

struct RawSection {
    line: usize,
    entries: Vec<(String, String, usize)>,
}

fn parse_sections(text: &str) -> Result<BTreeMap<String, RawSection>> {
    let mut sections: BTreeMap<String, RawSection> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.find(['#', ';']) {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| Error::config(line_no, "unterminated section header"))?
                .trim()
                .to_string();
            if sections.contains_key(&name) {
                return Err(Error::config(line_no, format!("duplicate section [{name}]")));
            }
            sections.insert(name.clone(), RawSection { line: line_no, entries: Vec::new() });
            current = Some(name);
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::config(line_no, format!("expected `key = value`, got `{line}`")));
        };
        let section = current
            .as_ref()
            .ok_or_else(|| Error::config(line_no, "key outside of any section"))?;
        sections
            .get_mut(section)
            .unwrap()
            .entries
            .push((key.trim().to_string(), value.trim().to_string(), line_no));
    }
    Ok(sections)
}

struct SectionReader {
    name: String,
    line: usize,
    entries: Vec<(String, String, usize)>,
    taken: Vec<bool>,
}

impl SectionReader {
    fn new(name: &str, raw: RawSection) -> Self {
        let taken = vec![false; raw.entries.len()];
        SectionReader { name: name.to_string(), line: raw.line, entries: raw.entries, taken }
    }

    fn get(&mut self, key: &str) -> Option<(&str, usize)> {
        for (i, (k, v, line)) in self.entries.iter().enumerate() {
            if k == key {
                self.taken[i] = true;
                return Some((v.as_str(), *line));
            }
        }
        None
    }

    fn required(&mut self, key: &str) -> Result<(String, usize)> {
        let line = self.line;
        let name = self.name.clone();
        self.get(key)
            .map(|(v, l)| (v.to_string(), l))
            .ok_or_else(|| Error::config(line, format!("section [{name}] is missing key `{key}`")))
    }

    fn parse<V: std::str::FromStr>(&mut self, key: &str) -> Result<Option<V>> {
        match self.get(key) {
            None => Ok(None),
            Some((v, line)) => v.parse::<V>().map(Some).map_err(|_| {
                Error::config(line, format!("could not parse `{key} = {v}`"))
            }),
        }
    }

    fn parse_or<V: std::str::FromStr>(&mut self, key: &str, default: V) -> Result<V> {
        Ok(self.parse(key)?.unwrap_or(default))
    }

    fn finish(self) -> Result<()> {
        for (i, (k, _, line)) in self.entries.iter().enumerate() {
            if !self.taken[i] {
                return Err(Error::config(
                    *line,
                    format!("unknown key `{k}` in section [{}]", self.name),
                ));
            }
        }
        Ok(())
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut sections = parse_sections(text)?;
        for name in sections.keys() {
            if !matches!(name.as_str(), "integrand" | "grid" | "initial" | "time" | "theorem" | "budget")
            {
                let line = sections[name].line;
                return Err(Error::config(line, format!("unknown section [{name}]")));
            }
        }

        let raw = sections
            .remove("integrand")
            .ok_or_else(|| Error::config(0, "missing required section [integrand]"))?;
        let mut reader = SectionReader::new("integrand", raw);
        let (family, family_line) = reader.required("family")?;
        let dim: usize = reader
            .parse("dim")?
            .ok_or_else(|| Error::config(family_line, "section [integrand] is missing key `dim`"))?;
        let matrix = match reader.get("matrix") {
            None => None,
            Some((v, line)) => {
                let vals: std::result::Result<Vec<f64>, _> =
                    v.split_whitespace().map(str::parse).collect();
                Some(vals.map_err(|_| Error::config(line, "could not parse `matrix`"))?)
            }
        };
        let delta = reader.parse("delta")?;
        if !matches!(family.as_str(), "euclidean" | "ellipsoid" | "perturbed" | "odd_perturbed") {
            return Err(Error::config(
                family_line,
                format!("unknown integrand family `{family}`"),
            ));
        }
        reader.finish()?;
        let integrand = IntegrandConfig { family, dim, matrix, delta };

        let grid = match sections.remove("grid") {
            None => None,
            Some(raw) => {
                let mut r = SectionReader::new("grid", raw);
                let cells = r.parse("cells")?.ok_or_else(|| {
                    Error::config(r.line, "section [grid] is missing key `cells`")
                })?;
                let length = r.parse("length")?.ok_or_else(|| {
                    Error::config(r.line, "section [grid] is missing key `length`")
                })?;
                r.finish()?;
                Some(GridConfig { cells, length })
            }
        };

        let initial = match sections.remove("initial") {
            None => None,
            Some(raw) => {
                let mut r = SectionReader::new("initial", raw);
                let (kind, kind_line) = r.required("kind")?;
                if !matches!(kind.as_str(), "sine" | "sawtooth" | "trig" | "bump") {
                    return Err(Error::config(kind_line, format!("unknown initial kind `{kind}`")));
                }
                let amplitude = r.parse_or("amplitude", 1.0)?;
                let steepness = r.parse("steepness")?;
                let modes = r.parse("modes")?;
                let width = r.parse("width")?;
                r.finish()?;
                Some(InitialConfig { kind, amplitude, steepness, modes, width })
            }
        };

        let time = match sections.remove("time") {
            None => None,
            Some(raw) => {
                let mut r = SectionReader::new("time", raw);
                let t_end = r.parse("t_end")?.ok_or_else(|| {
                    Error::config(r.line, "section [time] is missing key `t_end`")
                })?;
                let cfl_safety = r.parse_or("cfl_safety", 0.9)?;
                let sample_every = r.parse_or("sample_every", 50)?;
                let output = match r.get("output") {
                    None => SnapshotFormat::Csv,
                    Some(("csv", _)) => SnapshotFormat::Csv,
                    Some(("bin", _)) => SnapshotFormat::Bin,
                    Some(("none", _)) => SnapshotFormat::None,
                    Some((other, line)) => {
                        return Err(Error::config(
                            line,
                            format!("unknown snapshot output format `{other}`"),
                        ))
                    }
                };
                r.finish()?;
                Some(TimeConfig { t_end, cfl_safety, sample_every, output })
            }
        };

        let theorem = match sections.remove("theorem") {
            None => None,
            Some(raw) => {
                let mut r = SectionReader::new("theorem", raw);
                let id = r.parse("id")?.ok_or_else(|| {
                    Error::config(r.line, "section [theorem] is missing key `id`")
                })?;
                let radius = r.parse("radius")?;
                let height = r.parse("height")?;
                r.finish()?;
                Some(TheoremConfig { id, radius, height })
            }
        };

        let budget = match sections.remove("budget") {
            None => SearchBudget::default(),
            Some(raw) => {
                let mut r = SectionReader::new("budget", raw);
                let defaults = SearchBudget::default();
                let budget = SearchBudget {
                    direction_samples: r.parse_or("direction_samples", defaults.direction_samples)?,
                    s_grid: r.parse_or("s_grid", defaults.s_grid)?,
                    s_max: r.parse_or("s_max", defaults.s_max)?,
                    refine_iters: r.parse_or("refine_iters", defaults.refine_iters)?,
                    seed: r.parse_or("seed", defaults.seed)?,
                };
                r.finish()?;
                budget
            }
        };

        Ok(RunConfig { integrand, grid, initial, time, theorem, budget })
    }

    /// Build the integrand this config describes.
    pub fn build_integrand(&self) -> Result<Integrand<f64>> {
        let cfg = &self.integrand;
        match cfg.family.as_str() {
            "euclidean" => Ok(Integrand::euclidean(cfg.dim)),
            "ellipsoid" => {
                let matrix = cfg.matrix.as_ref().ok_or_else(|| {
                    Error::precondition("ellipsoid family needs a `matrix` key")
                })?;
                Integrand::ellipsoid(cfg.dim, matrix)
            }
            "perturbed" => {
                let delta = cfg
                    .delta
                    .ok_or_else(|| Error::precondition("perturbed family needs a `delta` key"))?;
                Integrand::perturbed(cfg.dim, delta)
            }
            "odd_perturbed" => {
                let delta = cfg
                    .delta
                    .ok_or_else(|| Error::precondition("odd_perturbed family needs a `delta` key"))?;
                Integrand::odd_perturbed(cfg.dim, delta)
            }
            other => Err(Error::precondition(format!("unknown integrand family `{other}`"))),
        }
    }

    pub fn build_grid(&self) -> Result<GridSpec<f64>> {
        let grid = self
            .grid
            .as_ref()
            .ok_or_else(|| Error::precondition("this command needs a [grid] section"))?;
        GridSpec::new(self.integrand.dim, grid.cells, grid.length)
    }

    pub fn build_initial(&self) -> Result<InitialData<f64>> {
        let init = self
            .initial
            .as_ref()
            .ok_or_else(|| Error::precondition("this command needs an [initial] section"))?;
        let a = init.amplitude;
        Ok(match init.kind.as_str() {
            "sine" => InitialData::Sine { amplitude: a },
            "sawtooth" => InitialData::Sawtooth {
                amplitude: a,
                steepness: init.steepness.unwrap_or(4.0),
            },
            "trig" => InitialData::Trig {
                amplitude: a,
                modes: init.modes.unwrap_or(3),
                seed: self.budget.seed,
            },
            "bump" => InitialData::Bump {
                amplitude: a,
                width: init.width.unwrap_or_else(|| {
                    self.grid.as_ref().map(|g| g.length / 12.0).unwrap_or(0.5)
                }),
            },
            other => return Err(Error::precondition(format!("unknown initial kind `{other}`"))),
        })
    }

    pub fn build_flow_settings(&self) -> Result<FlowSettings<f64>> {
        let time = self
            .time
            .as_ref()
            .ok_or_else(|| Error::precondition("this command needs a [time] section"))?;
        Ok(FlowSettings {
            t_end: time.t_end,
            cfl_safety: time.cfl_safety,
            sample_every: time.sample_every,
        })
    }
}
