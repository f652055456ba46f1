//! Batch front end: one study or solver run per invocation.
//!
//! Settings are resolved from built-in defaults, then a flat `key = value`
//! config file, then command-line flags. Every run writes the resolved
//! settings to `resolved.conf` in its output directory.
//!
//! Exit codes: 0 when the run passes, 1 when a result falls outside its
//! acceptance band (or a numerical run fails), 2 for usage and config errors.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::error::{Error, Result};
use crate::experiments::{
    energy_rate_study, factor_audit, gronwall_trace, operator_rate_study, oracle_gap, random_field,
    remainder_study, smooth_initial, symbol_study, Band, SolutionStudy, TestFunction,
};
use crate::grid::{Boundary, Field, UniformGrid};
use crate::kernel::{normalization_target, MollifierSpec, Profile};
use crate::potentials::Potential;
use crate::report::{write_json, write_verdicts, Verdict};
use crate::solvers::{Equation, Scheme, Solver, SolverConfig};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

macro_rules! flags {
    ($name:ident { $($field:ident : $key:literal => $help:literal,)* }) => {
        #[derive(Args, Debug, Default, Clone)]
        pub struct $name {
            $(
                #[arg(long = $key, value_name = "VALUE", help = $help)]
                $field: Option<String>,
            )*
        }

        impl $name {
            fn pairs(&self) -> Vec<(&'static str, Option<String>)> {
                vec![$(($key, self.$field.clone())),*]
            }
        }
    };
}

flags!(KernelFlags {
    n: "n" => "spatial dimension (1 or 2)",
    eps: "eps" => "kernel scale",
    profile: "profile" => "radial profile (poly-2-3, poly-2-4)",
});

flags!(SymbolFlags {
    n: "n" => "spatial dimension (1 or 2)",
    eps: "eps" => "comma-separated kernel scales",
    profile: "profile" => "radial profile",
    lattice: "lattice" => "frequency lattice extent per axis",
    band: "band" => "accepted slope band lo:hi (hi may be empty)",
});

flags!(RateFlags {
    n: "n" => "spatial dimension (1 or 2)",
    eps: "eps" => "comma-separated kernel scales",
    profile: "profile" => "radial profile",
    domain: "domain" => "periodic or neumann",
    func: "func" => "test function (sin-periodic, cospix, cos2pix, flat)",
    cells: "N" => "cells per axis",
    band: "band" => "accepted slope band lo:hi (hi may be empty); none disables",
});

flags!(RemainderFlags {
    n: "n" => "spatial dimension (1 or 2)",
    eps: "eps" => "comma-separated kernel scales",
    profile: "profile" => "radial profile",
    func: "func" => "test function",
    cells: "N" => "cells per axis",
    margin: "margin" => "interior margin in units of the kernel radius",
});

flags!(SolveFlags {
    eq: "eq" => "local-ch, nonlocal-ch, local-ac or nonlocal-ac",
    eps: "eps" => "kernel scale (nonlocal equations)",
    profile: "profile" => "radial profile",
    potential: "potential" => "doublewell:K=1 or logarithmic:theta=0.8,theta_c=1",
    final_time: "T" => "final time",
    tau: "tau" => "time step",
    cells: "N" => "cells per axis",
    n: "n" => "spatial dimension (1 or 2)",
    domain: "domain" => "periodic or neumann",
    mobility: "m" => "mobility",
    stabilization: "S" => "stabilization (default: the potential's alpha)",
    scheme: "scheme" => "semi-implicit or explicit",
    record_every: "record-every" => "steps between recorded rows",
    checkpoint_every: "checkpoint-every" => "steps between field checkpoints (0 = final only)",
    init: "init" => "smooth, random or a test function name",
    seed: "seed" => "seed for random initial data",
    amplitude: "amplitude" => "amplitude of random initial data",
    allow_unstable: "allow-unstable" => "run explicit schemes past their stability limit",
});

flags!(SolutionFlags {
    eq: "eq" => "nonlocal-ch or nonlocal-ac",
    eps: "eps" => "comma-separated kernel scales",
    profile: "profile" => "radial profile",
    potential: "potential" => "free-energy density",
    final_time: "T" => "final time",
    tau: "tau" => "time step of the nonlocal runs",
    cells: "N" => "cells",
    mobility: "m" => "mobility",
    stabilization: "S" => "stabilization (default: the potential's alpha)",
    refine: "refine" => "reference steps per nonlocal step",
    records: "records" => "number of recorded times",
    init: "init" => "smooth or a test function name",
    band: "band" => "accepted slope band lo:hi",
});

flags!(OracleFlags {
    n: "n" => "spatial dimension (1 or 2)",
    eps: "eps" => "kernel scale",
    profile: "profile" => "radial profile",
    cells: "N" => "cells per axis",
    domain: "domain" => "periodic or neumann",
    seed: "seed" => "seed for the random test field",
    tol: "tol" => "accepted relative L2 gap",
    audit_cells: "audit-N" => "cells for the brute-force factor audit",
    audit_eps: "audit-eps" => "kernel scale for the factor audit",
});

#[derive(Parser, Debug)]
#[command(
    name = "nlch",
    version,
    about = "Nonlocal-to-local convergence studies for phase-field flows"
)]
pub struct Cli {
    /// Flat key = value config file; flags override its entries.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<String>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, value_name = "N")]
    workers: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Normalization and moments of one kernel.
    CheckKernel(KernelFlags),
    /// Rate of the symbol error over a frequency lattice.
    SymbolRate(SymbolFlags),
    /// Rate of ||L_eps c + Delta c|| for a test function.
    OperatorRate(RateFlags),
    /// Convergence of the nonlocal energy to the Dirichlet energy.
    EnergyRate(RateFlags),
    /// Interior remainder near the boundary.
    RemainderRate(RemainderFlags),
    /// One solver run with trajectory CSV and checkpoints.
    Solve(SolveFlags),
    /// Nonlocal-to-local solution convergence against a fine local reference.
    SolutionRate(SolutionFlags),
    /// FFT-vs-direct operator agreement and the quadratic-form factor audit.
    OracleCheck(OracleFlags),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::CheckKernel(_) => "check-kernel",
            Command::SymbolRate(_) => "symbol-rate",
            Command::OperatorRate(_) => "operator-rate",
            Command::EnergyRate(_) => "energy-rate",
            Command::RemainderRate(_) => "remainder-rate",
            Command::Solve(_) => "solve",
            Command::SolutionRate(_) => "solution-rate",
            Command::OracleCheck(_) => "oracle-check",
        }
    }

    fn pairs(&self) -> Vec<(&'static str, Option<String>)> {
        match self {
            Command::CheckKernel(f) => f.pairs(),
            Command::SymbolRate(f) => f.pairs(),
            Command::OperatorRate(f) | Command::EnergyRate(f) => f.pairs(),
            Command::RemainderRate(f) => f.pairs(),
            Command::Solve(f) => f.pairs(),
            Command::SolutionRate(f) => f.pairs(),
            Command::OracleCheck(f) => f.pairs(),
        }
    }

    fn defaults(&self) -> &'static [(&'static str, &'static str)] {
        const EPS: &str = "0.2,0.1,0.05,0.025";
        match self {
            Command::CheckKernel(_) => &[("n", "1"), ("eps", "0.1"), ("profile", "poly-2-3")],
            Command::SymbolRate(_) => &[
                ("n", "1"),
                ("eps", EPS),
                ("profile", "poly-2-3"),
                ("lattice", "8"),
                ("band", "0.9:"),
            ],
            Command::OperatorRate(_) => &[
                ("n", "1"),
                ("eps", EPS),
                ("profile", "poly-2-3"),
                ("domain", "periodic"),
                ("func", "sin-periodic"),
                ("N", "4096"),
                ("band", "auto"),
            ],
            Command::EnergyRate(_) => &[
                ("n", "1"),
                ("eps", EPS),
                ("profile", "poly-2-3"),
                ("domain", "neumann"),
                ("func", "cospix"),
                ("N", "1024"),
                ("band", "none"),
            ],
            Command::RemainderRate(_) => &[
                ("n", "1"),
                ("eps", EPS),
                ("profile", "poly-2-3"),
                ("func", "cospix"),
                ("N", "2048"),
                ("margin", "0.5"),
            ],
            Command::Solve(_) => &[
                ("eq", "nonlocal-ch"),
                ("eps", "0.1"),
                ("profile", "poly-2-3"),
                ("potential", "doublewell:K=1"),
                ("T", "0.05"),
                ("tau", "1e-5"),
                ("N", "1024"),
                ("n", "1"),
                ("domain", "neumann"),
                ("m", "1"),
                ("S", "alpha"),
                ("scheme", "semi-implicit"),
                ("record-every", "10"),
                ("checkpoint-every", "0"),
                ("init", "smooth"),
                ("seed", "1"),
                ("amplitude", "0.05"),
                ("allow-unstable", "false"),
            ],
            Command::SolutionRate(_) => &[
                ("eq", "nonlocal-ch"),
                ("eps", "0.16,0.08,0.04,0.02"),
                ("profile", "poly-2-3"),
                ("potential", "doublewell:K=1"),
                ("T", "0.05"),
                ("tau", "1e-6"),
                ("N", "1024"),
                ("m", "1"),
                ("S", "alpha"),
                ("refine", "10"),
                ("records", "50"),
                ("init", "smooth"),
                ("band", "0.35:0.8"),
            ],
            Command::OracleCheck(_) => &[
                ("n", "1"),
                ("eps", "0.1"),
                ("profile", "poly-2-3"),
                ("N", "256"),
                ("domain", "neumann"),
                ("seed", "1"),
                ("tol", "auto"),
                ("audit-N", "32"),
                ("audit-eps", "0.3"),
            ],
        }
    }
}

/// Resolved key-value settings for one run.
#[derive(Debug, Clone, Default)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    pub fn get(&self, key: &str) -> Result<&str> {
        self.values
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::Parse(format!("missing setting {key:?}")))
    }

    pub fn parse<T: FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.get(key)?;
        raw.parse()
            .map_err(|_| Error::Parse(format!("bad value {raw:?} for {key:?}")))
    }

    pub fn list(&self, key: &str) -> Result<Vec<f64>> {
        self.get(key)?
            .split(',')
            .map(|v| {
                v.trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad number {v:?} in {key:?}")))
            })
            .collect()
    }

    pub fn bool(&self, key: &str) -> Result<bool> {
        match self.get(key)? {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            other => Err(Error::Parse(format!("bad boolean {other:?} for {key:?}"))),
        }
    }

    /// `key = value` lines, sorted by key.
    pub fn render(&self) -> String {
        self.values.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("config line {}: expected key = value", i + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(Error::Parse(format!("config line {}: empty key", i + 1)));
        }
        map.insert(k.to_string(), v.to_string());
    }
    Ok(map)
}

fn resolve(cli: &Cli) -> Result<Settings> {
    let mut values: BTreeMap<String, String> = cli
        .command
        .defaults()
        .iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
    values.insert("out".into(), format!("out/{}", cli.command.name()));
    values.insert("workers".into(), "0".into());
    if let Some(path) = &cli.config {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("cannot read config {}: {e}", path.display())))?;
        for (k, v) in parse_config(&text)? {
            if !values.contains_key(&k) {
                return Err(Error::Parse(format!(
                    "unknown key {k:?} for {} in {}",
                    cli.command.name(),
                    path.display()
                )));
            }
            values.insert(k, v);
        }
    }
    let global = [("out", cli.out.clone()), ("workers", cli.workers.clone())];
    for (k, v) in cli.command.pairs().into_iter().chain(global) {
        if let Some(v) = v {
            values.insert(k.to_string(), v);
        }
    }
    Ok(Settings { values })
}

/// Result of one invocation.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub passed: bool,
    pub lines: Vec<String>,
    pub out_dir: PathBuf,
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(outcome) => {
            for line in &outcome.lines {
                println!("{line}");
            }
            println!(
                "{} -> {}",
                if outcome.passed { "PASS" } else { "FAIL" },
                outcome.out_dir.display()
            );
            if outcome.passed {
                EXIT_PASS
            } else {
                EXIT_FAIL
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Numerical failures count as a failed run; everything else is a usage or
/// configuration problem.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Diverged { .. } | Error::ExactAgreement { .. } => EXIT_FAIL,
        _ => EXIT_USAGE,
    }
}

pub fn execute(cli: &Cli) -> Result<Outcome> {
    let settings = resolve(cli)?;
    let out_dir = PathBuf::from(settings.get("out")?);
    let workers: usize = settings.parse("workers")?;
    fs::create_dir_all(&out_dir)?;
    fs::write(out_dir.join("resolved.conf"), settings.render())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot build worker pool: {e}")))?;
    let (passed, lines) = pool.install(|| match &cli.command {
        Command::CheckKernel(_) => check_kernel(&settings, &out_dir),
        Command::SymbolRate(_) => symbol_rate(&settings, &out_dir),
        Command::OperatorRate(_) => operator_rate(&settings, &out_dir),
        Command::EnergyRate(_) => energy_rate(&settings, &out_dir),
        Command::RemainderRate(_) => remainder_rate(&settings, &out_dir),
        Command::Solve(_) => solve(&settings, &out_dir),
        Command::SolutionRate(_) => solution_rate(&settings, &out_dir),
        Command::OracleCheck(_) => oracle_check(&settings, &out_dir),
    })?;
    Ok(Outcome {
        passed,
        lines,
        out_dir,
    })
}

type RunResult = Result<(bool, Vec<String>)>;

fn mollifier(s: &Settings) -> Result<MollifierSpec> {
    MollifierSpec::new(s.parse("n")?, s.parse::<Profile>("profile")?)
}

fn unit_grid(s: &Settings) -> Result<UniformGrid> {
    let n: usize = s.parse("n")?;
    let cells: usize = s.parse("N")?;
    let boundary: Boundary = s.parse("domain")?;
    UniformGrid::new(&vec![cells; n], &vec![1.0; n], boundary)
}

fn band(s: &Settings, fallback: Option<Band>) -> Result<Option<Band>> {
    match s.get("band")? {
        "auto" => Ok(fallback),
        "none" => Ok(None),
        _ => Ok(Some(s.parse("band")?)),
    }
}

fn verdict_lines(verdicts: &[Verdict]) -> Vec<String> {
    verdicts
        .iter()
        .map(|v| {
            format!(
                "{}: slope {:.4} (r2 {:.4}) band {} -> {}",
                v.table.label,
                v.table.slope,
                v.table.r_squared,
                v.band.map_or("none".to_string(), |b| b.to_string()),
                if v.passed() { "pass" } else { "fail" }
            )
        })
        .collect()
}

fn check_kernel(s: &Settings, out: &Path) -> RunResult {
    let m = mollifier(s)?;
    let k = m.at_scale(s.parse("eps")?)?;
    let target = normalization_target(k.dim());
    let first: Vec<f64> = (0..k.dim()).map(|a| k.moment_first(a)).collect::<Result<_>>()?;
    let second: Vec<f64> = (0..k.dim()).map(|a| k.moment_second(a)).collect::<Result<_>>()?;
    let radial = k.radial_mass();
    let norm_ok = ((radial - target) / target).abs() <= 1e-10;
    let first_ok = first.iter().all(|v| v.abs() <= 1e-10);
    let second_ok = second.iter().all(|v| (v - 2.0).abs() <= 1e-8);
    write_json(
        &out.join("kernel.json"),
        &json!({
            "dim": k.dim(),
            "profile": m.profile().name(),
            "epsilon": k.epsilon(),
            "norm_constant": m.norm_constant(),
            "radial_mass": radial,
            "radial_mass_target": target,
            "first_moments": first,
            "second_moments": second,
            "second_moment_trace": k.moment_second_trace(),
            "total_mass": k.total_mass(),
            "pass": norm_ok && first_ok && second_ok,
        }),
    )?;
    Ok((
        norm_ok && first_ok && second_ok,
        vec![
            format!("norm constant {:.15e}", m.norm_constant()),
            format!("radial mass {radial:.15e} (target {target:.15e})"),
            format!("first moments {first:?}"),
            format!("second moments {second:?} (target 2)"),
            format!("total mass {:.12e}", k.total_mass()),
        ],
    ))
}

fn symbol_rate(s: &Settings, out: &Path) -> RunResult {
    let table = symbol_study(&mollifier(s)?, s.parse("lattice")?, &s.list("eps")?)?;
    let v = vec![Verdict::new(table, band(s, Some(Band::ONE))?)];
    write_verdicts(out, "symbol-rate", &v)?;
    Ok((v.iter().all(Verdict::passed), verdict_lines(&v)))
}

fn operator_rate(s: &Settings, out: &Path) -> RunResult {
    let grid = unit_grid(s)?;
    let func: TestFunction = s.parse("func")?;
    let field = func.sample(&grid)?;
    let table = operator_rate_study(&grid, &mollifier(s)?, &field, &s.list("eps")?)?;
    let auto = match (grid.boundary(), func) {
        (Boundary::Periodic, _) => Band::ONE,
        (Boundary::Neumann, TestFunction::Flat) => Band::FLAT,
        (Boundary::Neumann, _) => Band::HALF_SHARP,
    };
    let v = vec![Verdict::new(table, band(s, Some(auto))?)];
    write_verdicts(out, "operator-rate", &v)?;
    Ok((v.iter().all(Verdict::passed), verdict_lines(&v)))
}

fn energy_rate(s: &Settings, out: &Path) -> RunResult {
    let grid = unit_grid(s)?;
    let field = s.parse::<TestFunction>("func")?.sample(&grid)?;
    let (table, target) = energy_rate_study(&grid, &mollifier(s)?, &field, &s.list("eps")?)?;
    let v = vec![Verdict::new(table, band(s, None)?).monotone()];
    write_verdicts(out, "energy-rate", &v)?;
    let mut lines = verdict_lines(&v);
    lines.push(format!("limit energy {target:.12e}"));
    Ok((v.iter().all(Verdict::passed), lines))
}

fn remainder_rate(s: &Settings, out: &Path) -> RunResult {
    let mut s = s.clone();
    s.values.insert("domain".into(), "neumann".into());
    let grid = unit_grid(&s)?;
    let field = s.parse::<TestFunction>("func")?.sample(&grid)?;
    let m = mollifier(&s)?;
    let eps = s.list("eps")?;
    let factor: f64 = s.parse("margin")?;
    let inside = remainder_study(&grid, &m, &field, &eps, factor)?;
    let beyond = remainder_study(&grid, &m, &field, &eps, 1.0 + 1e-9)?;
    let mut sorted = inside.clone();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    let decreasing = sorted.windows(2).all(|w| w[1].1 < w[0].1);
    let zero_beyond = beyond.iter().all(|p| p.1 == 0.0);
    let mut csv = String::from("epsilon,remainder,remainder_beyond_radius\n");
    for (a, b) in inside.iter().zip(&beyond) {
        csv.push_str(&format!("{:e},{:e},{:e}\n", a.0, a.1, b.1));
    }
    fs::write(out.join("remainder.csv"), csv)?;
    write_json(
        &out.join("remainder.json"),
        &json!({
            "margin_factor": factor,
            "decreasing": decreasing,
            "zero_beyond_radius": zero_beyond,
            "pass": decreasing && zero_beyond,
        }),
    )?;
    Ok((
        decreasing && zero_beyond,
        vec![
            format!("remainder at margin {factor} eps R: {inside:?}"),
            format!("decreasing: {decreasing}, zero beyond the radius: {zero_beyond}"),
        ],
    ))
}

fn potential_and_config(s: &Settings) -> Result<(Potential, SolverConfig)> {
    let potential: Potential = s.parse("potential")?;
    let mut cfg = SolverConfig::new(s.parse("tau")?, s.parse("T")?, &potential);
    cfg.mobility = s.parse("m")?;
    if s.get("S")? != "alpha" {
        cfg.stabilization = s.parse("S")?;
    }
    Ok((potential, cfg))
}

fn initial(s: &Settings, grid: &UniformGrid) -> Result<Field> {
    match s.get("init")? {
        "smooth" => Ok(smooth_initial(grid)),
        "random" => Ok(random_field(grid, s.parse("seed")?, s.parse("amplitude")?)),
        name => name.parse::<TestFunction>()?.sample(grid),
    }
}

fn solve(s: &Settings, out: &Path) -> RunResult {
    let grid = unit_grid(s)?;
    let eq: Equation = s.parse("eq")?;
    let (potential, mut cfg) = potential_and_config(s)?;
    cfg.scheme = s.parse::<Scheme>("scheme")?;
    cfg.record_every = s.parse("record-every")?;
    cfg.allow_unstable = s.bool("allow-unstable")?;
    let kernel = if eq.is_nonlocal() {
        Some(mollifier(s)?.at_scale(s.parse("eps")?)?)
    } else {
        None
    };
    let solver = Solver::new(eq, &grid, cfg, potential, kernel.as_ref())?;
    let c0 = initial(s, &grid)?;
    let every: usize = s.parse("checkpoint-every")?;
    let ckpt_dir = out.join("checkpoints");
    fs::create_dir_all(&ckpt_dir)?;
    let mut io_error = None;
    let rec = solver.run_with(&c0, |step, _, c| {
        if every > 0 && step % every == 0 && io_error.is_none() {
            let path = ckpt_dir.join(format!("state_{step:08}.bin"));
            let field = Field::new(grid.clone(), c.to_vec()).and_then(|f| {
                let file = fs::File::create(&path)?;
                f.write_checkpoint(std::io::BufWriter::new(file))
            });
            if let Err(e) = field {
                io_error = Some(e);
            }
        }
    })?;
    if let Some(e) = io_error {
        return Err(e);
    }
    rec.write_csv(std::io::BufWriter::new(fs::File::create(
        out.join("trajectory.csv"),
    )?))?;
    rec.final_state
        .write_checkpoint(std::io::BufWriter::new(fs::File::create(out.join("final.bin"))?))?;
    let drift = rec
        .mass
        .iter()
        .map(|m| (m - rec.mass[0]).abs())
        .fold(0.0, f64::max);
    Ok((
        true,
        vec![
            format!(
                "{eq}: {} steps to T = {}",
                solver.config().steps(),
                solver.config().final_time
            ),
            format!(
                "energy {:.10e} -> {:.10e}",
                rec.energy[0],
                rec.energy.last().copied().unwrap_or(f64::NAN)
            ),
            format!("mass drift {drift:.3e}, clamp events {}", rec.clamp_events),
        ],
    ))
}

fn solution_rate(s: &Settings, out: &Path) -> RunResult {
    let mut s = s.clone();
    s.values.insert("n".into(), "1".into());
    s.values.insert("domain".into(), "neumann".into());
    let grid = unit_grid(&s)?;
    let eq: Equation = s.parse("eq")?;
    let (potential, mut cfg) = potential_and_config(&s)?;
    let records: usize = s.parse("records")?;
    cfg.record_every = (cfg.steps() / records.max(1)).max(1);
    let study = SolutionStudy {
        equation: eq,
        config: cfg,
        potential,
        mollifier: mollifier(&s)?,
        epsilons: s.list("eps")?,
        initial: initial(&s, &grid)?,
        reference_refinement: s.parse("refine")?,
    };
    let full = study.run_full()?;
    let report = &full.report;
    let b = band(&s, Some(Band::HALF))?;
    let primary = match eq {
        Equation::NonlocalAc => vec!["l2_sup"],
        _ => vec!["hminus1_sup", "l2_spacetime"],
    };
    let verdicts: Vec<Verdict> = report
        .tables()
        .into_iter()
        .map(|t| {
            Verdict::new(
                t.clone(),
                if primary.contains(&t.label.as_str()) {
                    b
                } else {
                    None
                },
            )
        })
        .collect();
    write_verdicts(out, "solution-rate", &verdicts)?;
    write_json(
        &out.join("reference.json"),
        &json!({
            "reference_h3_max": report.reference_h3_max,
            "reference_l2_max": report.reference_l2_max,
            "primary": primary,
        }),
    )?;

    // inequality traces for every eps
    let mut lines = verdict_lines(&verdicts);
    for (&e, run) in study.epsilons.iter().zip(&full.runs) {
        let trace = gronwall_trace(&study.mollifier.at_scale(e)?, run, &full.reference)?;
        trace.write_csv(std::io::BufWriter::new(fs::File::create(
            out.join(format!("gronwall_eps{e}.csv")),
        )?))?;
        lines.push(format!("eps {e}: inequality constant {:.4e}", trace.constant));
    }
    lines.push(format!("reference max H^3 norm {:.4e}", report.reference_h3_max));
    Ok((verdicts.iter().all(Verdict::passed), lines))
}

fn oracle_check(s: &Settings, out: &Path) -> RunResult {
    let grid = unit_grid(s)?;
    let m = mollifier(s)?;
    let k = m.at_scale(s.parse("eps")?)?;
    let field = random_field(&grid, s.parse("seed")?, 1.0);
    let gap = oracle_gap(&k, &field)?;
    let tol = match s.get("tol")? {
        "auto" if grid.dim() == 1 => 1e-10,
        "auto" => 1e-9,
        _ => s.parse("tol")?,
    };
    let audit_grid = UniformGrid::new(
        &vec![s.parse("audit-N")?; grid.dim()],
        &vec![1.0; grid.dim()],
        Boundary::Neumann,
    )?;
    let audit_field = random_field(&audit_grid, s.parse::<u64>("seed")? + 1, 1.0);
    let audit = factor_audit(&m.at_scale(s.parse("audit-eps")?)?, &audit_field)?;
    let gap_ok = gap <= tol;
    let audit_ok = (audit.ratio - 0.5).abs() <= 1e-10;
    write_json(
        &out.join("oracle.json"),
        &json!({
            "relative_gap": gap,
            "tolerance": tol,
            "factor_audit": audit,
            "quarter_weight_energy": 0.25 * audit.double_integral,
            "half_quadratic_form": 0.5 * audit.quadratic_form,
            "pass": gap_ok && audit_ok,
        }),
    )?;
    Ok((
        gap_ok && audit_ok,
        vec![
            format!("fft vs direct relative gap {gap:.3e} (tolerance {tol:e})"),
            format!(
                "<L u, u> / double integral = {:.15} (quadratic form {:.6e}, double integral {:.6e})",
                audit.ratio, audit.quadratic_form, audit.double_integral
            ),
        ],
    ))
}
