//! Command-line front end. Every command produces a table (or a gate
//! report) rendered as CSV with a `#` header, or as JSON.

use std::f64::consts::FRAC_PI_4;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::gates::{
    cnot_recipe, cphase_recipe, matrix_json, phase_recipe, solve_hadamard, solve_not,
    verify_gate, GateName, GateRecipe, PhaseConvention, Pretty,
};
use crate::hamiltonians::{FieldParams, RotatingField};
use crate::linalg::Dim;
use crate::phases::{
    compensation_gamma, cone_eigenstate, phase_decomposition, phase_distance, wrap_phase, Branch,
};
use crate::propagation::{
    adiabatic_error, compensated_error, integrate_steps, propagator_compensated,
};
use crate::sequences::{s_operation_params, trace_sequence, ScheduleFile};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const DEFAULT_STEPS: usize = 10_000;
pub const STEPS_ENV: &str = "CONEGATE_STEPS";
/// Verification threshold for the `gate` command.
pub const GATE_FIDELITY: f64 = 1.0 - 1e-5;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "conegate", version, about = "Geometric-phase gate simulator")]
pub struct Cli {
    /// JSON file with default values for any flag.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Integrator steps per loop revolution.
    #[arg(long, global = true)]
    pub steps: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// S-operation time and tilt against omega1/J.
    Scurve {
        #[arg(long)]
        delta_over_j: Option<f64>,
        /// `start:stop:step`
        #[arg(long)]
        omega1_range: Option<String>,
        /// Grid over delta/J instead of a single value.
        #[arg(long)]
        delta_range: Option<String>,
    },
    /// Integrate a JSON pulse schedule and emit the state history.
    Evolve {
        #[arg(long)]
        schedule: Option<PathBuf>,
    },
    /// Build, print and verify a gate recipe.
    Gate {
        name: String,
        /// Cone angle of the phase gate.
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long)]
        loops: Option<u32>,
        #[arg(long, value_enum)]
        convention: Option<ConventionArg>,
    },
    /// Return infidelity with and without the compensating field.
    CompareAdiabatic {
        #[arg(long)]
        theta: Option<f64>,
        /// `start:stop:step` in units of omega0.
        #[arg(long)]
        gamma_range: Option<String>,
    },
    /// Random cyclic-return and phase checks of compensated loops.
    Cyclic {
        #[arg(long)]
        draws: Option<usize>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConventionArg {
    Reference,
    Simulated,
}

impl From<ConventionArg> for PhaseConvention {
    fn from(c: ConventionArg) -> Self {
        match c {
            ConventionArg::Reference => PhaseConvention::Reference,
            ConventionArg::Simulated => PhaseConvention::Simulated,
        }
    }
}

/// Values a config file may supply.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub steps: Option<usize>,
    pub seed: Option<u64>,
    pub delta_over_j: Option<f64>,
    pub omega1_range: Option<String>,
    pub delta_range: Option<String>,
    pub schedule: Option<PathBuf>,
    pub theta: Option<f64>,
    pub loops: Option<u32>,
    pub convention: Option<ConventionArg>,
    pub gamma_range: Option<String>,
    pub draws: Option<usize>,
}

impl ConfigFile {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Inclusive `start:stop:step` range.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl std::str::FromStr for Range {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::Config(format!("range `{s}` is not start:stop:step"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let num = |p: &str| p.trim().parse::<f64>().map_err(|_| bad());
        let r = Range {
            start: num(parts[0])?,
            stop: num(parts[1])?,
            step: num(parts[2])?,
        };
        if !(r.start.is_finite() && r.stop.is_finite() && r.step.is_finite()) {
            return Err(bad());
        }
        if !(r.step > 0.0) || r.stop < r.start {
            return Err(Error::EmptyRange(s.to_string()));
        }
        Ok(r)
    }
}

impl Range {
    pub fn values(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..n).map(|k| self.start + k as f64 * self.step).collect()
    }
}

/// Fully resolved settings shared by every command.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub out: Option<PathBuf>,
    pub format: Format,
    pub steps: usize,
    pub seed: u64,
}

/// Flag beats config file beats `CONEGATE_STEPS` beats the default.
pub fn resolve_steps(flag: Option<usize>, config: Option<usize>, env: Option<&str>) -> Result<usize> {
    let env = match env {
        Some(v) => Some(
            v.trim()
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("{STEPS_ENV}=`{v}` is not a positive integer")))?,
        ),
        None => None,
    };
    let steps = flag.or(config).or(env).unwrap_or(DEFAULT_STEPS);
    if steps == 0 {
        return Err(Error::Config("steps must be positive".into()));
    }
    Ok(steps)
}

/// Numeric table with named columns.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// 12 significant digits.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        // fold -0 into 0 so identical results print identically
        return format!("{:.11e}", 0.0);
    }
    format!("{x:.11e}")
}

fn json_num(x: f64) -> Value {
    let rounded: f64 = fmt_num(x).parse().unwrap_or(x);
    serde_json::Number::from_f64(rounded).map_or(Value::Null, Value::Number)
}

/// Output of one command before rendering.
#[derive(Clone, Debug)]
pub struct Report {
    pub command: &'static str,
    pub settings: Vec<(String, String)>,
    pub notes: Vec<String>,
    pub body: Body,
    pub exit_code: i32,
}

#[derive(Clone, Debug)]
pub enum Body {
    Table(Table),
    Gate(Box<GateRecipe>, Vec<(String, f64)>),
}

impl Report {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.render_csv(),
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.to_json()).expect("json values serialize");
                s.push('\n');
                s
            }
        }
    }

    fn render_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# conegate {VERSION}");
        let _ = writeln!(out, "# command = {}", self.command);
        for (k, v) in &self.settings {
            let _ = writeln!(out, "# {k} = {v}");
        }
        for n in &self.notes {
            let _ = writeln!(out, "# {n}");
        }
        match &self.body {
            Body::Table(t) => {
                let _ = writeln!(out, "{}", t.columns.join(","));
                for row in &t.rows {
                    let cells: Vec<String> = row.iter().map(|&x| fmt_num(x)).collect();
                    let _ = writeln!(out, "{}", cells.join(","));
                }
            }
            Body::Gate(recipe, metrics) => {
                let _ = writeln!(out, "gate: {}", recipe.name);
                let _ = writeln!(out, "parameters:");
                for (k, v) in &recipe.parameters {
                    let _ = writeln!(out, "  {k} = {}", fmt_num(*v));
                }
                let _ = writeln!(out, "target:");
                let _ = write!(out, "{}", Pretty(&recipe.target, 6));
                let _ = writeln!(out, "pulse program: {} steps", recipe.sequence.len());
                for (k, v) in metrics {
                    let _ = writeln!(out, "{k} = {}", fmt_num(*v));
                }
                let status = if self.exit_code == EXIT_OK { "PASS" } else { "FAIL" };
                let _ = writeln!(out, "status: {status}");
            }
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let mut config = Map::new();
        config.insert("version".into(), json!(VERSION));
        config.insert("command".into(), json!(self.command));
        for (k, v) in &self.settings {
            config.insert(k.clone(), json!(v));
        }
        let mut doc = Map::new();
        doc.insert("config".into(), Value::Object(config));
        if !self.notes.is_empty() {
            doc.insert("notes".into(), json!(self.notes));
        }
        match &self.body {
            Body::Table(t) => {
                let mut cols = Map::new();
                for (k, name) in t.columns.iter().enumerate() {
                    cols.insert(
                        name.clone(),
                        Value::Array(t.rows.iter().map(|r| json_num(r[k])).collect()),
                    );
                }
                doc.insert("columns".into(), Value::Object(cols));
            }
            Body::Gate(recipe, metrics) => {
                let mut g = recipe.to_json();
                if let Value::Object(m) = &mut g {
                    for (k, v) in metrics {
                        m.insert(k.clone(), json_num(*v));
                    }
                    m.insert("target".into(), matrix_json(&recipe.target));
                    m.insert("pass".into(), json!(self.exit_code == EXIT_OK));
                }
                doc.insert("gate".into(), g);
            }
        }
        Value::Object(doc)
    }
}

fn settings(run: &RunConfig, extra: Vec<(&str, String)>) -> Vec<(String, String)> {
    let mut s: Vec<(String, String)> = extra.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
    s.push(("steps".into(), run.steps.to_string()));
    s.push(("seed".into(), run.seed.to_string()));
    s.push((
        "format".into(),
        match run.format {
            Format::Csv => "csv".into(),
            Format::Json => "json".into(),
        },
    ));
    s
}

fn require<T>(v: Option<T>, flag: &str) -> Result<T> {
    v.ok_or_else(|| Error::Config(format!("missing --{flag}")))
}

/// S-operation solutions over an `omega1/J` range, for one `delta/J` or a
/// grid of them (`J = 1`). Rows are grouped by `delta/J`.
pub fn cmd_scurve(run: &RunConfig, deltas: &[f64], omega1: &Range) -> Result<Report> {
    let w1s = omega1.values();
    let points: Vec<(f64, f64)> = deltas
        .iter()
        .flat_map(|&d| w1s.iter().map(move |&w| (d, w)))
        .collect();
    let rows = points
        .par_iter()
        .map(|&(d, w)| {
            let s = s_operation_params(d, 1.0, w)?;
            Ok(vec![w, d, s.j_tc(), s.phi_prime])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Report {
        command: "scurve",
        settings: settings(run, vec![]),
        notes: vec![],
        body: Body::Table(Table {
            columns: ["omega1_over_J", "delta_over_J", "J_tc", "phi_prime_rad"]
                .map(String::from)
                .to_vec(),
            rows,
        }),
        exit_code: EXIT_OK,
    })
}

/// Integrates a schedule file; one row per sample.
pub fn cmd_evolve(run: &RunConfig, schedule: &ScheduleFile) -> Result<Report> {
    let dim = schedule.sequence.dim();
    let mut columns = vec!["t".to_string()];
    for k in 0..dim.size() {
        columns.push(format!("re_{k}"));
        columns.push(format!("im_{k}"));
    }
    columns.extend(["bloch_x", "bloch_y", "bloch_z", "dynamical_phase"].map(String::from));
    let mut notes = Vec::new();
    let mut rows = Vec::new();
    if !schedule.sequence.is_empty() {
        let psi0 = schedule.initial_state()?;
        let trace = trace_sequence(&schedule.sequence, &psi0, run.steps)?;
        for (k, psi) in trace.states.iter().enumerate() {
            let mut row = vec![trace.times[k]];
            for a in psi.amplitudes() {
                row.push(a.re);
                row.push(a.im);
            }
            row.extend(psi.bloch());
            row.push(trace.dynamical_phase[k]);
            rows.push(row);
        }
        let overlap = psi0.inner(trace.final_state()).norm();
        notes.push(format!("return_infidelity = {}", fmt_num(1.0 - overlap * overlap)));
        let defect = trace.overlap_defect();
        if schedule.sequence.has_loop() && defect > 1e-6 {
            notes.push(format!(
                "warning: non-cyclic evolution, 1 - |<psi(0)|psi(T)>| = {}",
                fmt_num(defect)
            ));
        }
    }
    Ok(Report {
        command: "evolve",
        settings: settings(
            run,
            vec![
                ("frame", if dim == Dim::Two { "single".into() } else { "two_qubit".into() }),
                ("schedule_steps", schedule.sequence.len().to_string()),
            ],
        ),
        notes,
        body: Body::Table(Table { columns, rows }),
        exit_code: EXIT_OK,
    })
}

/// Builds and verifies a gate recipe.
pub fn cmd_gate(
    run: &RunConfig,
    name: GateName,
    theta: Option<f64>,
    loops: u32,
    convention: PhaseConvention,
) -> Result<Report> {
    let mut recipe = match name {
        GateName::Phase => phase_recipe(require(theta, "theta")?, loops, convention)?,
        GateName::Hadamard => solve_hadamard()?,
        GateName::Not => solve_not(convention)?,
        GateName::Cphase => cphase_recipe()?,
        GateName::Cnot => cnot_recipe()?,
    };
    let closed = recipe.analytic_fidelity()?;
    let simulated = verify_gate(&mut recipe, run.steps)?;
    let exit_code = if simulated >= GATE_FIDELITY { EXIT_OK } else { EXIT_VERIFY };
    let mut extra = vec![("gate", format!("{name:?}").to_lowercase())];
    if name == GateName::Phase || name == GateName::Not {
        extra.push(("convention", format!("{convention:?}").to_lowercase()));
    }
    Ok(Report {
        command: "gate",
        settings: settings(run, extra),
        notes: vec![],
        body: Body::Gate(
            Box::new(recipe),
            vec![
                ("fidelity_closed_form".into(), closed),
                ("fidelity_simulated".into(), simulated),
            ],
        ),
        exit_code,
    })
}

/// Return infidelity of the `H0` upper eigenstate after one turn, with and
/// without `omega_z = gamma`, at `omega0 = cos theta`, `omega1 = sin theta`.
pub fn cmd_compare_adiabatic(run: &RunConfig, theta: f64, gammas: &Range) -> Result<Report> {
    let (w1, w0) = theta.sin_cos();
    let rows = gammas
        .values()
        .par_iter()
        .map(|&r| {
            let p = FieldParams::new(w0, w1, r * w0)?;
            Ok(vec![r, adiabatic_error(&p)?, compensated_error(&p)?])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Report {
        command: "compare-adiabatic",
        settings: settings(run, vec![("theta", fmt_num(theta))]),
        notes: vec![],
        body: Body::Table(Table {
            columns: [
                "gamma_over_omega0",
                "infidelity_uncompensated",
                "infidelity_compensated",
            ]
            .map(String::from)
            .to_vec(),
            rows,
        }),
        exit_code: EXIT_OK,
    })
}

/// One random draw of the cyclic-loop checks.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CyclicCheck {
    pub omega0: f64,
    pub omega1: f64,
    pub gamma: f64,
    pub defect_closed: f64,
    pub defect_integrated: f64,
    pub max_abs_energy: f64,
    pub geometric: f64,
    pub expected_geometric: f64,
}

impl CyclicCheck {
    pub fn passes(&self) -> bool {
        self.defect_closed < 1e-10
            && self.defect_integrated < 1e-8
            && phase_distance(self.geometric, self.expected_geometric) < 1e-7
    }
}

/// `(omega0, omega1)` draws with `omega0` in `[0.2, 2]`, `omega1` in `[0, 2]`.
pub fn random_fields(seed: u64, draws: usize) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..draws)
        .map(|_| (rng.gen_range(0.2..=2.0), rng.gen_range(0.0..=2.0)))
        .collect()
}

pub fn cyclic_check(omega0: f64, omega1: f64, steps_per_loop: usize) -> Result<CyclicCheck> {
    let gamma = compensation_gamma(omega0, omega1)?;
    let p = FieldParams::new(omega0, omega1, gamma)?.compensated();
    let cone = cone_eigenstate(omega0, omega1, Branch::Upper)?;
    let tau = p.loop_duration()?;
    let u = propagator_compensated(&p, tau)?;
    let defect_closed = 1.0 - cone.psi0.inner(&cone.psi0.apply(&u)).norm();
    let traj = integrate_steps(std::sync::Arc::new(RotatingField(p)), &cone.psi0, tau, steps_per_loop)?;
    let max_abs_energy = traj.energies().iter().fold(0.0f64, |m, e| m.max(e.abs()));
    let pd = phase_decomposition(&traj)?;
    Ok(CyclicCheck {
        omega0,
        omega1,
        gamma,
        defect_closed,
        defect_integrated: traj.overlap_defect(),
        max_abs_energy,
        geometric: wrap_phase(pd.geometric),
        expected_geometric: wrap_phase(cone.loop_geometric_phase()),
    })
}

pub fn cmd_cyclic(run: &RunConfig, draws: usize) -> Result<Report> {
    let checks = random_fields(run.seed, draws)
        .par_iter()
        .map(|&(w0, w1)| cyclic_check(w0, w1, run.steps))
        .collect::<Result<Vec<_>>>()?;
    let failed = checks.iter().filter(|c| !c.passes()).count();
    let rows = checks
        .iter()
        .map(|c| {
            vec![
                c.omega0,
                c.omega1,
                c.gamma,
                c.defect_closed,
                c.defect_integrated,
                c.max_abs_energy,
                c.geometric,
                c.expected_geometric,
            ]
        })
        .collect();
    Ok(Report {
        command: "cyclic",
        settings: settings(run, vec![("draws", draws.to_string())]),
        notes: vec![format!("failed = {failed}")],
        body: Body::Table(Table {
            columns: [
                "omega0",
                "omega1",
                "gamma",
                "defect_closed",
                "defect_integrated",
                "max_abs_energy",
                "geometric_phase",
                "expected_geometric_phase",
            ]
            .map(String::from)
            .to_vec(),
            rows,
        }),
        exit_code: if failed == 0 { EXIT_OK } else { EXIT_VERIFY },
    })
}

/// Resolves flags against the config file and environment, then runs the
/// command.
pub fn execute(cli: Cli, env_steps: Option<&str>) -> Result<(RunConfig, Report)> {
    let cfg = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let run = RunConfig {
        out: cli.out.clone().or(cfg.out.clone()),
        format: cli.format.or(cfg.format).unwrap_or(Format::Csv),
        steps: resolve_steps(cli.steps, cfg.steps, env_steps)?,
        seed: cli.seed.or(cfg.seed).unwrap_or(0),
    };
    let report = match cli.command {
        Command::Scurve {
            delta_over_j,
            omega1_range,
            delta_range,
        } => {
            let omega1: Range = require(omega1_range.or(cfg.omega1_range), "omega1-range")?.parse()?;
            let deltas = match delta_range.or(cfg.delta_range) {
                Some(r) => r.parse::<Range>()?.values(),
                None => vec![require(delta_over_j.or(cfg.delta_over_j), "delta-over-j")?],
            };
            let mut r = cmd_scurve(&run, &deltas, &omega1)?;
            r.settings.insert(0, ("omega1_range".into(), format!("{}:{}:{}", omega1.start, omega1.stop, omega1.step)));
            r.settings.insert(0, ("delta_over_j".into(), deltas.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(" ")));
            r
        }
        Command::Evolve { schedule } => {
            let path = require(schedule.or(cfg.schedule), "schedule")?;
            let text = std::fs::read_to_string(&path)
                .map_err(|e| Error::Config(format!("cannot read schedule {}: {e}", path.display())))?;
            let file = ScheduleFile::from_json(&text)?;
            let mut r = cmd_evolve(&run, &file)?;
            r.settings.insert(0, ("schedule".into(), path.display().to_string()));
            r
        }
        Command::Gate {
            name,
            theta,
            loops,
            convention,
        } => {
            let name: GateName = name.parse()?;
            let convention = convention
                .or(cfg.convention)
                .unwrap_or(ConventionArg::Simulated)
                .into();
            let loops = loops.or(cfg.loops).unwrap_or(1);
            let theta = theta.or(cfg.theta);
            let mut r = cmd_gate(&run, name, theta, loops, convention)?;
            if name == GateName::Phase {
                r.settings.push(("theta".into(), theta.map(fmt_num).unwrap_or_default()));
                r.settings.push(("loops".into(), loops.to_string()));
            }
            r
        }
        Command::CompareAdiabatic { theta, gamma_range } => {
            let theta = theta.or(cfg.theta).unwrap_or(FRAC_PI_4);
            let range: Range = require(gamma_range.or(cfg.gamma_range), "gamma-range")?.parse()?;
            let mut r = cmd_compare_adiabatic(&run, theta, &range)?;
            r.settings.insert(0, ("gamma_range".into(), format!("{}:{}:{}", range.start, range.stop, range.step)));
            r
        }
        Command::Cyclic { draws } => cmd_cyclic(&run, draws.or(cfg.draws).unwrap_or(100))?,
    };
    Ok((run, report))
}

/// Entry point for the binary; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let env = std::env::var(STEPS_ENV).ok();
    let (run, report) = match execute(cli, env.as_deref()) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let text = report.render(run.format);
    for n in report.notes.iter().filter(|n| n.starts_with("warning")) {
        eprintln!("{n}");
    }
    let written = match &run.out {
        Some(p) => std::fs::write(p, &text).map_err(Error::from),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(text.as_bytes()).map_err(Error::from)
        }
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return EXIT_CONFIG;
    }
    report.exit_code
}
