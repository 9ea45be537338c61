//! Command-line front end: `run`, `eoc-study` and `tableau-check`.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use log::{info, warn, LevelFilter};
use rayon::prelude::*;

use crate::config::{OutputField, RunConfig, TableauSource};
use crate::diagnostics::{
    error_norms, kinetic_energy, mach_field, vorticity, ConvergenceTable, DiagnosticsRecord, ErrorPair,
};
use crate::error::Error;
use crate::integrator::{run, State, StepConfig};
use crate::mesh::{discrete_divergence, Field};
use crate::tableaux::{certify, PR_GAMMA_DEFAULT};

pub mod plot;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_CERTIFICATION: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "machflow", version, about = "Low Mach number IMEX finite-volume solver")]
pub struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one case and write field dumps, a diagnostics series and metadata.
    Run {
        /// `key = value` configuration file.
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output.dir`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Convergence study over `study.n_list` and `study.epsilon_list`.
    EocStudy {
        /// `key = value` configuration file.
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output.dir`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Order, GSA and stability report of a built-in name or tableau file.
    TableauCheck {
        /// Built-in scheme name or path to a tableau file.
        source: String,
        /// Background velocity `u1,u2` for the first-order CFL constant.
        #[arg(long, value_delimiter = ',', num_args = 2, default_values_t = [1.0, 1.0])]
        velocity: Vec<f64>,
        /// Mesh width for the first-order CFL constant.
        #[arg(long, default_value_t = 0.1)]
        dx: f64,
        /// Also write `tableau_report.txt` and `tableau_report.csv` here.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(Error),
    #[error("run failed: {0}")]
    Runtime(Error),
    #[error("certification failed: {0}")]
    Certification(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Runtime(_) => EXIT_RUNTIME,
            CliError::Certification(_) => EXIT_CERTIFICATION,
        }
    }
}

/// Installs the logger according to `MACHFLOW_LOG` (`quiet`, `info`, `debug`).
pub fn init_logging() {
    let level = match std::env::var("MACHFLOW_LOG").ok().as_deref() {
        Some("quiet") => LevelFilter::Off,
        Some("info") => LevelFilter::Info,
        Some("debug") => LevelFilter::Debug,
        _ => LevelFilter::Warn,
    };
    let _ = env_logger::Builder::new().filter_level(level).try_init();
}

/// Parses `args` (program name first), executes and returns the exit code.
pub fn main_with_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("machflow: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config(Error::Config("--threads must be positive".into())));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Runtime(Error::Config(format!("thread pool: {e}"))))?;
    pool.install(|| match &cli.command {
        Command::Run { config, output } => {
            let cfg = load_config(config, output.as_deref())?;
            cmd_run(&cfg).map(|_| ())
        }
        Command::EocStudy { config, output } => {
            let cfg = load_config(config, output.as_deref())?;
            let tables = cmd_eoc_study(&cfg)?;
            for (eps, table) in &tables {
                println!("{}", table.to_text(&format!("epsilon = {eps:e}")));
            }
            Ok(())
        }
        Command::TableauCheck {
            source,
            velocity,
            dx,
            output,
        } => {
            let (text, csv, ok) = cmd_tableau_check(source, [velocity[0], velocity[1]], *dx)?;
            print!("{text}\n{csv}");
            if let Some(dir) = output {
                write(&dir.join("tableau_report.txt"), &text)?;
                write(&dir.join("tableau_report.csv"), &csv)?;
            }
            if ok {
                Ok(())
            } else {
                Err(CliError::Certification(format!(
                    "`{source}` misses its declared order or the stability predicate"
                )))
            }
        }
    })
}

fn load_config(path: &Path, output: Option<&Path>) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::from_path(path).map_err(CliError::Config)?;
    if let Some(o) = output {
        cfg.output_dir = o.to_path_buf();
    }
    Ok(cfg)
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| CliError::Runtime(e.into()))?;
    }
    fs::write(path, contents).map_err(|e| CliError::Runtime(e.into()))
}

/// What `cmd_run` produced.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub steps: usize,
    pub final_state: State<f64>,
    pub series: Vec<DiagnosticsRecord>,
    pub files: Vec<PathBuf>,
}

fn field_dump(state: &State<f64>, field: OutputField, cfg: &RunConfig) -> Result<Field<f64>, Error> {
    let (u1, u2) = state.velocity();
    Ok(match field {
        OutputField::Rho => state.rho.clone(),
        OutputField::U1 => u1,
        OutputField::U2 => u2,
        OutputField::Mach => mach_field(state, &cfg.params()?)?,
        OutputField::Vorticity => vorticity(&u1, &u2),
        OutputField::Div => discrete_divergence(&u1, &u2),
    })
}

fn dump_name(field: OutputField, t: f64) -> String {
    format!("{}_t{:.6}.csv", field.name(), t)
}

fn metadata(cfg: &RunConfig, extra: &[(String, String)]) -> Result<String, CliError> {
    let created = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let mut s = format!(
        "# machflow {}\ncreated_unix = {created}\n\n# configuration\n{}\n",
        env!("CARGO_PKG_VERSION"),
        cfg.to_text()
    );
    let tableau = cfg.load_tableau().map_err(CliError::Config)?;
    let report = certify(&tableau, [1.0, 1.0], [0.1, 0.1]).map_err(CliError::Config)?;
    s.push_str("\n# tableau report\n");
    for line in report.to_text().lines() {
        s.push_str(&format!("# {line}\n"));
    }
    if !extra.is_empty() {
        s.push_str("\n# results\n");
        for (k, v) in extra {
            s.push_str(&format!("{k} = {v}\n"));
        }
    }
    Ok(s)
}

/// Runs the configured case, stopping at every dump time.
pub fn cmd_run(cfg: &RunConfig) -> Result<RunSummary, CliError> {
    let params = cfg.params().map_err(CliError::Config)?;
    let tableau = cfg.load_tableau().map_err(CliError::Config)?;
    let step_cfg = StepConfig {
        limiter: cfg.case.limiter,
        solver: cfg.solver,
    };
    let mut state = cfg.case.initial_state().map_err(CliError::Config)?;
    let ke0 = kinetic_energy(&state);
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).map_err(|e| CliError::Config(Error::Config(format!("{}: {e}", dir.display()))))?;
    info!("run {} on {}x{} with {}", cfg.case.kind.name(), cfg.case.n, cfg.case.n, tableau.name);

    let mut targets = cfg.dump_times.clone();
    if targets.last().copied() != Some(cfg.case.t_end) {
        targets.push(cfg.case.t_end);
    }
    let mut series: Vec<DiagnosticsRecord> = Vec::new();
    let mut steps = 0usize;
    let mut files = Vec::new();
    for target in targets {
        if target > state.time || series.is_empty() {
            let out = run(&state, &tableau, &params, &step_cfg, target, |_, _| {}).map_err(|f| {
                let error = match f.error {
                    Error::Step { step, source } => Error::Step {
                        step: step + steps,
                        source,
                    },
                    other => other,
                };
                CliError::Runtime(error)
            })?;
            let skip = usize::from(!series.is_empty());
            series.extend(out.series.into_iter().skip(skip));
            steps += out.steps;
            state = out.state;
        }
        if cfg.dump_times.contains(&target) {
            for &field in &cfg.emit_fields {
                let f = field_dump(&state, field, cfg).map_err(CliError::Runtime)?;
                let path = dir.join("fields").join(dump_name(field, target));
                write(&path, &f.to_csv(field.name()))?;
                files.push(path);
            }
        }
    }
    for r in &mut series {
        r.relative_kinetic_energy = if ke0 > 0.0 { r.kinetic_energy / ke0 } else { 1.0 };
    }
    let series_path = dir.join("series.csv");
    write(&series_path, &DiagnosticsRecord::series_to_csv(&series))?;
    files.push(series_path);
    let meta = metadata(
        cfg,
        &[
            ("steps".into(), steps.to_string()),
            ("final_time".into(), format!("{:.16e}", state.time)),
        ],
    )?;
    let meta_path = dir.join("metadata.txt");
    write(&meta_path, &meta)?;
    files.push(meta_path);
    if cfg.plots {
        plot_run(dir, &series, &state);
    }
    Ok(RunSummary {
        steps,
        final_state: state,
        series,
        files,
    })
}

fn plot_run(dir: &Path, series: &[DiagnosticsRecord], state: &State<f64>) {
    let ke: Vec<(f64, f64)> = series.iter().map(|r| (r.time, r.relative_kinetic_energy)).collect();
    if let Err(e) = plot::line_plot(&dir.join("relative_ke.png"), &[ke], false) {
        warn!("energy plot skipped: {e}");
    }
    let (u1, u2) = state.velocity();
    let w = vorticity(&u1, &u2);
    let g = state.grid;
    let j = g.ny / 2;
    let section: Vec<(f64, f64)> = (0..g.nx).map(|i| (g.center(i, j).0, w.at(i, j))).collect();
    if let Err(e) = plot::line_plot(&dir.join("vorticity_section.png"), &[section], false) {
        warn!("vorticity plot skipped: {e}");
    }
}

/// Runs every `(epsilon, N)` cell and returns one table per epsilon.
pub fn cmd_eoc_study(cfg: &RunConfig) -> Result<Vec<(f64, ConvergenceTable)>, CliError> {
    let study = cfg
        .study
        .clone()
        .ok_or_else(|| CliError::Config(Error::Config("eoc-study needs study.n_list".into())))?;
    if cfg.case.exact().is_none() {
        return Err(CliError::Config(Error::Config(format!(
            "case `{}` has no exact solution",
            cfg.case.kind.name()
        ))));
    }
    let tableau = cfg.load_tableau().map_err(CliError::Config)?;
    let step_cfg = StepConfig {
        limiter: cfg.case.limiter,
        solver: cfg.solver,
    };
    let cells: Vec<(f64, usize)> = study
        .epsilon_list
        .iter()
        .flat_map(|&e| study.n_list.iter().map(move |&n| (e, n)))
        .collect();
    let results: Vec<Result<(Vec<ErrorPair>, usize), CliError>> = cells
        .par_iter()
        .map(|&(eps, n)| {
            let mut case = cfg.case.clone();
            case.epsilon = eps;
            case.n = n;
            let params = cfg.params_for(eps).map_err(CliError::Config)?;
            let init = case.initial_state().map_err(CliError::Config)?;
            let out = run(&init, &tableau, &params, &step_cfg, case.t_end, |_, _| {})
                .map_err(|f| CliError::Runtime(f.error))?;
            let exact = case.exact().expect("checked above");
            let errs = error_norms(&out.state, &exact, &study.variables)
                .into_iter()
                .map(|(_, n)| ErrorPair { l1: n.l1, l2: n.l2 })
                .collect();
            info!("eps={eps:e} N={n}: {} steps", out.steps);
            Ok((errs, out.steps))
        })
        .collect();
    let names: Vec<String> = study.variables.iter().map(|v| v.name().to_string()).collect();
    let mut tables = Vec::new();
    let mut extra = Vec::new();
    let mut results = results.into_iter();
    for &eps in &study.epsilon_list {
        let mut table = ConvergenceTable::new(names.clone());
        for &n in &study.n_list {
            let (errs, steps) = results.next().expect("one result per cell")?;
            table.push(n, errs).map_err(CliError::Runtime)?;
            extra.push((format!("steps.eps_{eps:e}.n_{n}"), steps.to_string()));
        }
        tables.push((eps, table));
    }
    let dir = &cfg.output_dir;
    for (eps, table) in &tables {
        write(&dir.join(format!("eoc_eps{eps:e}.csv")), &table.to_csv())?;
        write(
            &dir.join(format!("eoc_eps{eps:e}.txt")),
            &table.to_text(&format!("epsilon = {eps:e}")),
        )?;
        if cfg.plots {
            let curves: Vec<Vec<(f64, f64)>> = (0..names.len())
                .map(|k| table.rows.iter().map(|(n, e)| (*n as f64, e[k].l1)).collect())
                .collect();
            if let Err(e) = plot::line_plot(&dir.join(format!("eoc_eps{eps:e}.png")), &curves, true) {
                warn!("convergence plot skipped: {e}");
            }
        }
    }
    write(&dir.join("metadata.txt"), &metadata(cfg, &extra)?)?;
    Ok(tables)
}

/// Returns the aligned report, its CSV form and whether the tableau reaches
/// its declared order and satisfies the relevant stability predicate.
pub fn cmd_tableau_check(source: &str, velocity: [f64; 2], dx: f64) -> Result<(String, String, bool), CliError> {
    let tableau = TableauSource::resolve(source)
        .load(PR_GAMMA_DEFAULT)
        .map_err(CliError::Config)?;
    let report = certify(&tableau, velocity, [dx, dx]).map_err(CliError::Config)?;
    let order_ok = tableau
        .declared_order
        .is_none_or(|d| report.order_achieved >= d);
    let ok = order_ok && report.stability_holds();
    Ok((report.to_text(), report.to_csv(), ok))
}
