//! Run configuration: defaults, then an optional INI-style file, then flags.
//!
//! File format (every section and key optional, unknown ones rejected):
//!
//! ```text
//! [run]
//! command = experiment
//! target = skew_law
//! [grid]
//! horizon = 1
//! steps = 4096
//! [monte_carlo]
//! paths = 4096
//! seed = 7
//! [output]
//! out = results
//! [tolerance]
//! tol_scale = 1
//! [params]
//! beta = 0.5
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use semilt::experiments::{ExperimentName, ExperimentSpec, DEFAULT_LOG2_STEPS, DEFAULT_PATHS, DEFAULT_SEED};
use semilt::paths::TimeGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Localtime,
    Experiment,
    VerifyAll,
    List,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Localtime => "localtime",
            Command::Experiment => "experiment",
            Command::VerifyAll => "verify-all",
            Command::List => "list",
        }
    }

    pub fn parse(s: &str) -> Result<Self, String> {
        [Command::Simulate, Command::Localtime, Command::Experiment, Command::VerifyAll, Command::List]
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown command `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    /// Family, estimator or experiment name.
    pub target: Option<String>,
    pub horizon: f64,
    pub steps: usize,
    pub paths: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub tol_scale: f64,
    /// Experiment parameters or coefficient, measure and start literals.
    pub params: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            target: None,
            horizon: 1.0,
            steps: 1 << DEFAULT_LOG2_STEPS,
            paths: DEFAULT_PATHS,
            seed: DEFAULT_SEED,
            out: None,
            tol_scale: 1.0,
            params: BTreeMap::new(),
        }
    }

    pub fn grid(&self) -> Result<TimeGrid, String> {
        TimeGrid::new(self.horizon, self.steps).map_err(|e| e.to_string())
    }

    /// Applies a parsed file on top of `self`. A `[run] command` that names a
    /// different command is an error.
    pub fn merge_ini(&mut self, text: &str) -> Result<(), String> {
        for (section, key, value) in parse_ini(text)? {
            let num = |what: &str| format!("[{section}] {key}: `{value}` is not a valid {what}");
            match (section.as_str(), key.as_str()) {
                ("run", "command") => {
                    let c = Command::parse(&value)?;
                    if c != self.command {
                        return Err(format!("config is for `{}`, not `{}`", c.name(), self.command.name()));
                    }
                }
                ("run", "target") => self.target = Some(value),
                ("grid", "horizon") => self.horizon = value.parse().map_err(|_| num("number"))?,
                ("grid", "steps") => self.steps = value.parse().map_err(|_| num("step count"))?,
                ("monte_carlo", "paths") => self.paths = value.parse().map_err(|_| num("path count"))?,
                ("monte_carlo", "seed") => self.seed = value.parse().map_err(|_| num("seed"))?,
                ("output", "out") => self.out = Some(PathBuf::from(value)),
                ("tolerance", "tol_scale") => self.tol_scale = value.parse().map_err(|_| num("number"))?,
                ("params", _) => {
                    self.params.insert(key, value);
                }
                ("run" | "grid" | "monte_carlo" | "output" | "tolerance", _) => {
                    return Err(format!("unknown key `{key}` in [{section}]"))
                }
                _ => return Err(format!("unknown section [{section}]")),
            }
        }
        Ok(())
    }

    pub fn to_ini(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[run]\ncommand = {}", self.command.name());
        if let Some(t) = &self.target {
            let _ = writeln!(s, "target = {t}");
        }
        let _ = writeln!(s, "[grid]\nhorizon = {}\nsteps = {}", self.horizon, self.steps);
        let _ = writeln!(s, "[monte_carlo]\npaths = {}\nseed = {}", self.paths, self.seed);
        if let Some(o) = &self.out {
            let _ = writeln!(s, "[output]\nout = {}", o.display());
        }
        let _ = writeln!(s, "[tolerance]\ntol_scale = {}", self.tol_scale);
        if !self.params.is_empty() {
            s.push_str("[params]\n");
            for (k, v) in &self.params {
                let _ = writeln!(s, "{k} = {v}");
            }
        }
        s
    }

    /// Sets `steps` from a step size that must divide the horizon.
    pub fn set_dt(&mut self, dt: f64) -> Result<(), String> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(format!("--dt must be positive, got {dt}"));
        }
        let n = self.horizon / dt;
        let r = n.round();
        if r < 1.0 || (n - r).abs() > 1e-9 * r {
            return Err(format!("--dt {dt} does not divide the horizon {}", self.horizon));
        }
        self.steps = r as usize;
        Ok(())
    }

    /// Experiment spec with every parameter resolved; also fills the
    /// defaults into `params` so that the config equals its report echo.
    pub fn experiment_spec(&mut self) -> Result<ExperimentSpec, String> {
        let target = self.target.as_deref().ok_or("experiment needs a name")?;
        let name = ExperimentName::parse(target).map_err(|e| e.to_string())?;
        let mut spec = ExperimentSpec::new(name);
        spec.grid = self.grid()?;
        spec.paths = self.paths;
        spec.seed = self.seed;
        spec.tol_scale = self.tol_scale;
        for (k, v) in &self.params {
            spec.set_param(k, v.clone()).map_err(|e| e.to_string())?;
        }
        spec.validate().map_err(|e| e.to_string())?;
        for (k, _) in name.params() {
            self.params.insert(k.to_string(), spec.param(k).to_string());
        }
        Ok(spec)
    }

    /// Rebuilds the run from the config echo of a report.
    pub fn from_echo(echo: &BTreeMap<String, String>) -> Result<Self, String> {
        let spec = ExperimentSpec::from_echo(echo).map_err(|e| e.to_string())?;
        let mut c = Self::new(Command::Experiment);
        c.target = Some(spec.name.name().to_string());
        c.horizon = spec.grid.horizon();
        c.steps = spec.grid.steps();
        c.paths = spec.paths;
        c.seed = spec.seed;
        c.tol_scale = spec.tol_scale;
        c.params = spec.name.params().iter().map(|(k, _)| (k.to_string(), spec.param(k).to_string())).collect();
        Ok(c)
    }
}

/// `(section, key, value)` triples in file order. Blank lines and lines
/// starting with `#` or `;` are skipped; duplicates are rejected.
pub fn parse_ini(text: &str) -> Result<Vec<(String, String, String)>, String> {
    let mut out: Vec<(String, String, String)> = Vec::new();
    let mut section: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let at = |m: &str| format!("config line {}: {m}", i + 1);
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| at("unterminated section header"))?.trim();
            if name.is_empty() {
                return Err(at("empty section name"));
            }
            section = Some(name.to_string());
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| at("expected `key = value`"))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(at("empty key"));
        }
        let s = section.clone().ok_or_else(|| at("key outside any section"))?;
        if out.iter().any(|(s2, k2, _)| *s2 == s && k2 == k) {
            return Err(at(&format!("duplicate key `{k}` in [{s}]")));
        }
        out.push((s, k.to_string(), v.to_string()));
    }
    Ok(out)
}
