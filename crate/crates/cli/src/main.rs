mod config;
mod simulate;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use semilt::experiments::{run, run_acceptance, threads_from_env, AcceptanceOptions, ExperimentName};
use semilt::paths::SeedSpec;

use config::{Command, RunConfig};
use simulate::{columns_csv, local_time, Family, FamilyParams, ESTIMATORS, FAMILIES};

#[derive(Parser)]
#[command(name = "semilt", version, about = "Local-time estimators, SDE solvers and verification experiments")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate paths of a family and write them as CSV
    Simulate {
        #[arg(value_name = "FAMILY")]
        target: Option<String>,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        params: Params,
    },
    /// Estimate local-time curves on simulated paths
    Localtime {
        estimator: Option<String>,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        params: Params,
    },
    /// Run one experiment and write its report JSON and residual CSV
    Experiment {
        name: Option<String>,
        /// Rerun from the config echoed in a report JSON; other flags override it
        #[arg(long, conflicts_with = "config")]
        from_report: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        params: Params,
    },
    /// List experiments with what each one checks
    List,
    /// Run the acceptance suite
    VerifyAll {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Default)]
struct Common {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    paths: Option<usize>,
    /// Step size; must divide the horizon
    #[arg(long, conflicts_with = "steps")]
    dt: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    horizon: Option<f64>,
    /// Output directory; nothing is written elsewhere
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    tol_scale: Option<f64>,
    /// INI-style run configuration; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
}

/// Experiment and family parameters; see `list` for which apply where.
#[derive(Args, Default)]
struct Params {
    /// Any parameter as KEY=VALUE
    #[arg(long = "param", value_name = "KEY=VALUE")]
    raw: Vec<String>,
    #[arg(long)]
    level: Option<String>,
    #[arg(long)]
    bump_width: Option<String>,
    #[arg(long)]
    z: Option<String>,
    #[arg(long)]
    phi: Option<String>,
    #[arg(long)]
    scale: Option<String>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    damp: Option<String>,
    #[arg(long)]
    sigma: Option<String>,
    #[arg(long)]
    drift: Option<String>,
    #[arg(long)]
    measure: Option<String>,
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    x0: Option<String>,
    #[arg(long)]
    x0_high: Option<String>,
    #[arg(long)]
    a: Option<String>,
    #[arg(long)]
    b: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    #[arg(long)]
    beta: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    eta: Option<String>,
    #[arg(long)]
    gap: Option<String>,
    #[arg(long)]
    n_levels: Option<String>,
}

impl Params {
    fn pairs(self) -> Result<Vec<(String, String)>, String> {
        let mut out = Vec::new();
        for r in self.raw {
            let (k, v) = r.split_once('=').ok_or_else(|| format!("--param expects KEY=VALUE, got `{r}`"))?;
            out.push((k.trim().to_string(), v.trim().to_string()));
        }
        let named = [
            ("level", self.level),
            ("bump_width", self.bump_width),
            ("z", self.z),
            ("phi", self.phi),
            ("scale", self.scale),
            ("mode", self.mode),
            ("damp", self.damp),
            ("sigma", self.sigma),
            ("drift", self.drift),
            ("measure", self.measure),
            ("family", self.family),
            ("x0", self.x0),
            ("x0_high", self.x0_high),
            ("a", self.a),
            ("b", self.b),
            ("delta", self.delta),
            ("beta", self.beta),
            ("lambda", self.lambda),
            ("eta", self.eta),
            ("gap", self.gap),
            ("n_levels", self.n_levels),
        ];
        out.extend(named.into_iter().filter_map(|(k, v)| v.map(|v| (k.to_string(), v))));
        Ok(out)
    }
}

/// Usage or configuration problem (exit 2) versus a failed run (exit 1).
enum Failure {
    Usage(String),
    Failed(String),
}

impl From<String> for Failure {
    fn from(s: String) -> Self {
        Failure::Usage(s)
    }
}

impl From<&str> for Failure {
    fn from(s: &str) -> Self {
        Failure::Usage(s.to_string())
    }
}

fn from_report(path: &Path) -> Result<RunConfig, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    let echo = v
        .get("config")
        .and_then(|c| serde_json::from_value(c.clone()).ok())
        .ok_or_else(|| format!("{}: no config echo", path.display()))?;
    RunConfig::from_echo(&echo)
}

fn build(command: Command, target: Option<String>, common: Common, params: Params) -> Result<RunConfig, String> {
    build_on(RunConfig::new(command), target, common, params)
}

fn build_on(mut c: RunConfig, target: Option<String>, common: Common, params: Params) -> Result<RunConfig, String> {
    if let Some(p) = &common.config {
        let text = fs::read_to_string(p).map_err(|e| format!("cannot read {}: {e}", p.display()))?;
        c.merge_ini(&text)?;
    }
    if target.is_some() {
        c.target = target;
    }
    if let Some(h) = common.horizon {
        c.horizon = h;
    }
    if let Some(n) = common.steps {
        c.steps = n;
    }
    if let Some(dt) = common.dt {
        c.set_dt(dt)?;
    }
    if let Some(n) = common.paths {
        c.paths = n;
    }
    if let Some(s) = common.seed {
        c.seed = s;
    }
    if let Some(o) = common.out {
        c.out = Some(o);
    }
    if let Some(t) = common.tol_scale {
        c.tol_scale = t;
    }
    for (k, v) in params.pairs()? {
        c.params.insert(k, v);
    }
    if c.paths == 0 {
        return Err("--paths must be at least 1".into());
    }
    if !(c.tol_scale.is_finite() && c.tol_scale > 0.0) {
        return Err(format!("--tol-scale must be positive, got {}", c.tol_scale));
    }
    c.grid()?;
    Ok(c)
}

/// Writes `name` inside the output directory, or to stdout without one.
fn emit(out: Option<&Path>, name: &str, body: &str) -> Result<(), Failure> {
    match out {
        None => {
            print!("{body}");
            Ok(())
        }
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| Failure::Failed(format!("cannot create {}: {e}", dir.display())))?;
            let p = dir.join(name);
            fs::write(&p, body).map_err(|e| Failure::Failed(format!("cannot write {}: {e}", p.display())))
        }
    }
}

fn simulate(c: &RunConfig) -> Result<(), Failure> {
    let family = c.target.as_deref().ok_or("simulate needs a family")?;
    let p = FamilyParams::new(family, &c.params, &[])?;
    let fam = Family::build(&p)?;
    let grid = c.grid()?;
    let cols = (0..c.paths)
        .map(|i| fam.sample(grid, SeedSpec::new(c.seed, i as u64)).map(|p| p.into_values()))
        .collect::<semilt::Result<Vec<_>>>()
        .map_err(|e| Failure::Failed(e.to_string()))?;
    emit(c.out.as_deref(), &format!("simulate_{family}.csv"), &columns_csv(&grid, &cols))
}

fn localtime(c: &RunConfig) -> Result<(), Failure> {
    let estimator = c.target.as_deref().ok_or("localtime needs an estimator")?;
    if !ESTIMATORS.contains(&estimator) {
        return Err(format!("unknown estimator `{estimator}`; one of {}", ESTIMATORS.join(", ")).into());
    }
    let family = c.params.get("family").map_or("brownian", String::as_str);
    let mut fp = c.params.clone();
    fp.remove("family");
    let level = match fp.remove("level") {
        None => 0.0,
        Some(v) => v
            .trim()
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or(format!("level: `{v}` is not a finite number"))?,
    };
    let fam = Family::build(&FamilyParams::new(family, &fp, &[])?)?;
    let grid = c.grid()?;
    let mut cols = Vec::with_capacity(c.paths);
    for i in 0..c.paths {
        let path = fam.sample(grid, SeedSpec::new(c.seed, i as u64)).map_err(|e| Failure::Failed(e.to_string()))?;
        cols.push(local_time(&path, estimator, level)?.values);
    }
    emit(c.out.as_deref(), &format!("localtime_{estimator}.csv"), &columns_csv(&grid, &cols))
}

fn experiment(c: &mut RunConfig) -> Result<bool, Failure> {
    let spec = c.experiment_spec()?;
    threads_from_env().map_err(|e| Failure::Usage(e.to_string()))?;
    let report = run(&spec).map_err(|e| match e {
        semilt::Error::InvalidParameter { .. } | semilt::Error::InvalidMeasure(_) | semilt::Error::InvalidGrid(_) => {
            Failure::Usage(e.to_string())
        }
        e => Failure::Failed(e.to_string()),
    })?;
    let name = spec.name.name();
    match c.out.as_deref() {
        None => emit(None, "", &format!("{}\n", report.to_json()))?,
        Some(dir) => {
            emit(Some(dir), &format!("{name}.json"), &format!("{}\n", report.to_json()))?;
            emit(Some(dir), &format!("{name}_residuals.csv"), &report.residual_csv())?;
            emit(Some(dir), &format!("{name}.ini"), &RunConfig { out: None, ..c.clone() }.to_ini())?;
            println!("{name}: {}", if report.pass { "PASS" } else { "FAIL" });
            for ch in report.failed_checks() {
                println!("  failed {}: {}", ch.name, ch.value);
            }
        }
    }
    Ok(report.pass)
}

fn verify_all(c: &RunConfig) -> Result<bool, Failure> {
    let threads = threads_from_env().map_err(|e| Failure::Usage(e.to_string()))?;
    let opts = AcceptanceOptions { grid: c.grid()?, paths: c.paths, seed: c.seed, tol_scale: c.tol_scale, threads };
    let results = run_acceptance(&opts, |r| {
        println!("criterion {:>2} {}: {} [{}]", r.id, r.title, if r.pass { "PASS" } else { "FAIL" }, r.detail);
    })
    .map_err(|e| Failure::Failed(e.to_string()))?;
    if let Some(dir) = c.out.as_deref() {
        let json = serde_json::to_string_pretty(&results).map_err(|e| Failure::Failed(e.to_string()))?;
        emit(Some(dir), "acceptance.json", &format!("{json}\n"))?;
    }
    Ok(results.iter().all(|r| r.pass))
}

fn list() {
    for n in ExperimentName::ALL {
        let params: Vec<String> = n.params().iter().map(|(k, d)| format!("{k}={d}")).collect();
        println!("{}\t{}\t{}", n.name(), n.anchor(), params.join(" "));
    }
    println!();
    for (f, ps) in FAMILIES {
        let params: Vec<String> = ps.iter().map(|(k, d)| format!("{k}={d}")).collect();
        println!("family {f}\t{}", params.join(" "));
    }
    println!("estimators\t{}", ESTIMATORS.join(" "));
}

fn dispatch(cmd: Cmd) -> Result<bool, Failure> {
    match cmd {
        Cmd::List => {
            list();
            Ok(true)
        }
        Cmd::Simulate { target, common, params } => {
            simulate(&build(Command::Simulate, target, common, params)?).map(|_| true)
        }
        Cmd::Localtime { estimator, common, params } => {
            localtime(&build(Command::Localtime, estimator, common, params)?).map(|_| true)
        }
        Cmd::Experiment { name, from_report: rep, common, params } => {
            let base = match rep {
                Some(p) => from_report(&p)?,
                None => RunConfig::new(Command::Experiment),
            };
            experiment(&mut build_on(base, name, common, params)?)
        }
        Cmd::VerifyAll { common } => verify_all(&build(Command::VerifyAll, None, common, Params::default())?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if e.use_stderr() => {
            let msg = e.render().to_string();
            eprintln!("{}", msg.lines().next().unwrap_or("usage error"));
            return ExitCode::from(2);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Failed(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use clap::CommandFactory;

    #[test]
    fn argument_definitions_are_consistent() {
        super::Cli::command().debug_assert();
    }
}
