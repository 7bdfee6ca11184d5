//! Plain-text scenario configuration.
//!
//! One `key = value` per line; `#` starts a comment. Keys:
//!
//! | key | value |
//! |-----|-------|
//! | `grid.half_width` | `L > 0` |
//! | `grid.points` | `M ≥ 3` |
//! | `grid.mode` | `zero` or `periodic` (default `zero`) |
//! | `initial` | preset, e.g. `gaussian amplitude=1 center=0 width=1` |
//! | `initial.file` | CSV with an `x,u` header, one row per node |
//! | `reaction.a<i>` | preset for the coefficient of `u^i` (missing ones are zero) |
//! | `time.horizon` | `T > 0` |
//! | `time.horizon_safe_fraction` | `T` as a fraction of the safe horizon |
//! | `time.steps` | `N` for `solve` |
//! | `time.levels` | comma-separated increasing step counts for `converge` |
//! | `bounds.safety` | fraction of the blow-up time (default 0.5) |
//! | `bounds.ceiling` | safe horizon without blow-up (default 1000) |
//! | `output.dir` | output directory (default `out`) |
//!
//! Exactly one of `initial`/`initial.file` and one of the two horizon keys
//! must be given. Unknown or repeated keys are errors. Keys under `result.`
//! are skipped so that a run manifest can be read back as a config.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use imex_core::bounds::{DEFAULT_HORIZON_CEILING, DEFAULT_SAFETY, safe_horizon_with};
use imex_core::{BoundaryMode, GridFunction, GridSpec, Preset, ReactionCoefficients};

use crate::io;
use crate::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    Preset(Preset),
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    Fixed(f64),
    SafeFraction(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub half_width: f64,
    pub points: usize,
    pub mode: BoundaryMode,
    pub initial: InitialCondition,
    /// Coefficient presets by degree; gaps are zero.
    pub reaction: Vec<Preset>,
    pub horizon: Horizon,
    pub steps: Option<usize>,
    pub levels: Option<Vec<usize>>,
    pub safety: f64,
    pub ceiling: f64,
    pub output_dir: PathBuf,
}

fn config_error(line: usize, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("line {line}: {msg}"))
}

fn parse_num<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> CliResult<T> {
    value
        .parse()
        .map_err(|_| config_error(line, format!("`{key}` expects a number, got `{value}`")))
}

fn set_once<T>(line: usize, slot: &mut Option<T>, value: T, what: &str) -> CliResult<()> {
    if slot.is_some() {
        return Err(config_error(line, format!("only one {what} may be given")));
    }
    *slot = Some(value);
    Ok(())
}

pub fn parse_mode(value: &str) -> Option<BoundaryMode> {
    match value {
        "zero" | "zero-extension" => Some(BoundaryMode::ZeroExtension),
        "periodic" => Some(BoundaryMode::Periodic),
        _ => None,
    }
}

pub fn mode_name(mode: BoundaryMode) -> &'static str {
    match mode {
        BoundaryMode::ZeroExtension => "zero",
        BoundaryMode::Periodic => "periodic",
    }
}

/// `name k=v k=v ...`
pub fn parse_preset(text: &str) -> CliResult<Preset> {
    let mut words = text.split_whitespace();
    let name = words
        .next()
        .ok_or_else(|| CliError::Config("empty preset".into()))?;
    let mut params = Vec::new();
    for word in words {
        let (k, v) = word
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("preset parameter `{word}` is not key=value")))?;
        let v: f64 = v
            .parse()
            .map_err(|_| CliError::Config(format!("preset parameter `{word}` is not numeric")))?;
        params.push((k, v));
    }
    Ok(Preset::from_name(name, &params)?)
}

pub fn format_preset(p: &Preset) -> String {
    let mut s = p.name().to_string();
    for (k, v) in p.params() {
        let _ = write!(s, " {k}={v}");
    }
    s
}

pub fn parse_levels(text: &str) -> CliResult<Vec<usize>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| CliError::Config(format!("level `{}` is not a step count", s.trim())))
        })
        .collect()
}

impl ScenarioConfig {
    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("reading {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        // Sample files are resolved against the config's directory.
        if let InitialCondition::File(ref mut file) = cfg.initial {
            if file.is_relative() {
                if let Some(dir) = path.parent() {
                    *file = dir.join(&*file);
                }
            }
        }
        Ok(cfg)
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| config_error(line, format!("expected `key = value`, got `{content}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if key.starts_with("result.") {
                continue;
            }
            if entries.insert(key.to_string(), (line, value.to_string())).is_some() {
                return Err(config_error(line, format!("`{key}` given twice")));
            }
        }

        let mut half_width = None;
        let mut points = None;
        let mut mode = BoundaryMode::ZeroExtension;
        let mut initial = None;
        let mut reaction: BTreeMap<usize, Preset> = BTreeMap::new();
        let mut horizon = None;
        let mut steps = None;
        let mut levels = None;
        let mut safety = DEFAULT_SAFETY;
        let mut ceiling = DEFAULT_HORIZON_CEILING;
        let mut output_dir = PathBuf::from("out");

        for (key, (line, value)) in &entries {
            let line = *line;
            match key.as_str() {
                "grid.half_width" => half_width = Some(parse_num::<f64>(line, key, value)?),
                "grid.points" => points = Some(parse_num::<usize>(line, key, value)?),
                "grid.mode" => {
                    mode = parse_mode(value).ok_or_else(|| {
                        config_error(line, format!("grid.mode must be zero or periodic, got `{value}`"))
                    })?
                }
                "initial" => set_once(
                    line,
                    &mut initial,
                    InitialCondition::Preset(parse_preset(value).map_err(|e| config_error(line, e))?),
                    "initial condition",
                )?,
                "initial.file" => set_once(
                    line,
                    &mut initial,
                    InitialCondition::File(PathBuf::from(value)),
                    "initial condition",
                )?,
                "time.horizon" => set_once(
                    line,
                    &mut horizon,
                    Horizon::Fixed(parse_num(line, key, value)?),
                    "horizon",
                )?,
                "time.horizon_safe_fraction" => set_once(
                    line,
                    &mut horizon,
                    Horizon::SafeFraction(parse_num(line, key, value)?),
                    "horizon",
                )?,
                "time.steps" => steps = Some(parse_num::<usize>(line, key, value)?),
                "time.levels" => levels = Some(parse_levels(value).map_err(|e| config_error(line, e))?),
                "bounds.safety" => safety = parse_num(line, key, value)?,
                "bounds.ceiling" => ceiling = parse_num(line, key, value)?,
                "output.dir" => output_dir = PathBuf::from(value),
                other => {
                    let degree = other
                        .strip_prefix("reaction.a")
                        .and_then(|d| d.parse::<usize>().ok())
                        .ok_or_else(|| config_error(line, format!("unknown key `{other}`")))?;
                    let preset = parse_preset(value).map_err(|e| config_error(line, e))?;
                    reaction.insert(degree, preset);
                }
            }
        }

        let missing = |what: &str| CliError::Config(format!("missing `{what}`"));
        let cfg = Self {
            half_width: half_width.ok_or_else(|| missing("grid.half_width"))?,
            points: points.ok_or_else(|| missing("grid.points"))?,
            mode,
            initial: initial.ok_or_else(|| missing("initial"))?,
            reaction: match reaction.keys().next_back() {
                None => vec![Preset::Zero],
                Some(&top) => (0..=top)
                    .map(|i| reaction.get(&i).cloned().unwrap_or(Preset::Zero))
                    .collect(),
            },
            horizon: horizon.ok_or_else(|| missing("time.horizon"))?,
            steps,
            levels,
            safety,
            ceiling,
            output_dir,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> CliResult<()> {
        GridSpec::new(self.half_width, self.points, self.mode)?;
        match self.horizon {
            Horizon::Fixed(t) if !(t > 0.0 && t.is_finite()) => {
                return Err(CliError::Config(format!("time.horizon must be positive, got {t}")));
            }
            Horizon::SafeFraction(f) if !(f > 0.0 && f <= 1.0) => {
                return Err(CliError::Config(format!(
                    "time.horizon_safe_fraction must lie in (0, 1], got {f}"
                )));
            }
            _ => {}
        }
        if !(self.safety > 0.0 && self.safety < 1.0) {
            return Err(CliError::Config(format!("bounds.safety must lie in (0, 1), got {}", self.safety)));
        }
        if !(self.ceiling > 0.0 && self.ceiling.is_finite()) {
            return Err(CliError::Config(format!("bounds.ceiling must be positive, got {}", self.ceiling)));
        }
        if self.steps == Some(0) {
            return Err(CliError::Config("time.steps must be at least 1".into()));
        }
        if let Some(levels) = &self.levels {
            if levels.is_empty() || levels[0] == 0 || levels.windows(2).any(|w| w[0] >= w[1]) {
                return Err(CliError::Config("time.levels must be strictly increasing and >= 1".into()));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> GridSpec {
        GridSpec::new(self.half_width, self.points, self.mode).expect("validated")
    }

    /// Canonical text form; parsing it gives back an equal config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "grid.half_width = {}", self.half_width);
        let _ = writeln!(s, "grid.points = {}", self.points);
        let _ = writeln!(s, "grid.mode = {}", mode_name(self.mode));
        match &self.initial {
            InitialCondition::Preset(p) => {
                let _ = writeln!(s, "initial = {}", format_preset(p));
            }
            InitialCondition::File(path) => {
                let _ = writeln!(s, "initial.file = {}", path.display());
            }
        }
        for (i, p) in self.reaction.iter().enumerate() {
            if *p != Preset::Zero || self.reaction.len() == 1 {
                let _ = writeln!(s, "reaction.a{i} = {}", format_preset(p));
            }
        }
        match self.horizon {
            Horizon::Fixed(t) => {
                let _ = writeln!(s, "time.horizon = {t}");
            }
            Horizon::SafeFraction(f) => {
                let _ = writeln!(s, "time.horizon_safe_fraction = {f}");
            }
        }
        if let Some(n) = self.steps {
            let _ = writeln!(s, "time.steps = {n}");
        }
        if let Some(levels) = &self.levels {
            let list: Vec<String> = levels.iter().map(usize::to_string).collect();
            let _ = writeln!(s, "time.levels = {}", list.join(","));
        }
        let _ = writeln!(s, "bounds.safety = {}", self.safety);
        let _ = writeln!(s, "bounds.ceiling = {}", self.ceiling);
        let _ = writeln!(s, "output.dir = {}", self.output_dir.display());
        s
    }

    pub fn build(&self) -> CliResult<Scenario> {
        let spec = self.grid();
        let f0 = match &self.initial {
            InitialCondition::Preset(p) => p.sample(spec)?,
            InitialCondition::File(path) => io::read_samples(path, spec)?,
        };
        let coeffs = self
            .reaction
            .iter()
            .map(|p| p.sample(spec))
            .collect::<imex_core::Result<Vec<_>>>()?;
        let reaction = ReactionCoefficients::new(coeffs)?;
        let t_safe = safe_horizon_with(&f0, &reaction, self.safety, self.ceiling)?;
        let horizon = match self.horizon {
            Horizon::Fixed(t) => t,
            Horizon::SafeFraction(f) => f * t_safe,
        };
        Ok(Scenario {
            spec,
            f0,
            reaction,
            horizon,
            t_safe,
        })
    }
}

/// A config resolved into grid functions and a horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub spec: GridSpec,
    pub f0: GridFunction,
    pub reaction: ReactionCoefficients,
    pub horizon: f64,
    pub t_safe: f64,
}
