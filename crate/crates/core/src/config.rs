//! Flat `key = value` configuration files with dotted section keys.
//!
//! ```text
//! # vortex convergence run
//! case.kind = vortex
//! case.epsilon = 1e-6
//! grid.n = 40
//! scheme.tableau = ARS(2,2,2)
//! output.dump_times = 0.05, 0.1
//! ```
//!
//! Blank lines and `#` comments are ignored. Unknown keys are rejected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::cases::{CaseKind, CaseSpec, VortexEta};
use crate::diagnostics::{fmt_f64, Variable};
use crate::error::{Error, Result};
use crate::implicit::SolverOptions;
use crate::physics::EulerParams;
use crate::spatial::Limiter;
use crate::tableaux::{builtin_tableau, pr_tableau, DoubleTableau, PR_GAMMA_DEFAULT};

const KNOWN_KEYS: &[&str] = &[
    "case.kind",
    "case.epsilon",
    "case.t_end",
    "case.vortex_eta",
    "grid.n",
    "params.gamma",
    "params.cfl",
    "params.dt_max",
    "scheme.tableau",
    "scheme.pr_gamma",
    "scheme.limiter",
    "scheme.cweno_delta",
    "solver.tol",
    "solver.max_newton",
    "solver.cg_rel_tol",
    "solver.max_cg",
    "solver.max_halvings",
    "output.dir",
    "output.dump_times",
    "output.fields",
    "output.plots",
    "study.n_list",
    "study.epsilon_list",
    "study.variables",
];

/// Raw parsed key/value pairs in file order of first appearance.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    entries: BTreeMap<String, (usize, String)>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`, got `{}`", lineno + 1, raw.trim()))
            })?;
            let key = key.trim().to_ascii_lowercase();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(Error::Config(format!("line {}: unknown key `{key}`", lineno + 1)));
            }
            if entries.insert(key.clone(), (lineno + 1, value.trim().to_string())).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key `{key}`", lineno + 1)));
            }
        }
        Ok(KeyValues { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    fn parsed<V: FromStr>(&self, key: &str) -> Result<Option<V>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::Config(format!("line {line}: cannot parse `{v}` for `{key}`"))),
        }
    }

    fn list<V: FromStr>(&self, key: &str) -> Result<Option<Vec<V>>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, v)) => v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse()
                        .map_err(|_| Error::Config(format!("line {line}: cannot parse `{s}` in `{key}`")))
                })
                .collect::<Result<Vec<V>>>()
                .map(Some),
        }
    }
}

/// Fields that can be dumped at the requested times.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputField {
    Rho,
    U1,
    U2,
    Mach,
    Vorticity,
    Div,
}

impl OutputField {
    pub const ALL: [OutputField; 6] = [
        OutputField::Rho,
        OutputField::U1,
        OutputField::U2,
        OutputField::Mach,
        OutputField::Vorticity,
        OutputField::Div,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OutputField::Rho => "rho",
            OutputField::U1 => "u1",
            OutputField::U2 => "u2",
            OutputField::Mach => "mach",
            OutputField::Vorticity => "vorticity",
            OutputField::Div => "div",
        }
    }
}

impl FromStr for OutputField {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        OutputField::ALL
            .into_iter()
            .find(|f| f.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::Config(format!("unknown output field `{s}`")))
    }
}

/// Where the double tableau comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum TableauSource {
    Builtin(String),
    File(PathBuf),
}

impl TableauSource {
    /// Built-in names take precedence over files of the same name.
    pub fn resolve(spec: &str) -> Self {
        if builtin_tableau::<f64>(spec).is_ok() {
            TableauSource::Builtin(spec.to_string())
        } else {
            TableauSource::File(PathBuf::from(spec))
        }
    }

    pub fn load(&self, pr_gamma: f64) -> Result<DoubleTableau<f64>> {
        match self {
            TableauSource::Builtin(name) => {
                let t = builtin_tableau::<f64>(name)?;
                if t.name.starts_with("PR") && pr_gamma != PR_GAMMA_DEFAULT {
                    Ok(pr_tableau(pr_gamma))
                } else {
                    Ok(t)
                }
            }
            TableauSource::File(path) => {
                if !path.exists() {
                    // Neither a built-in nor a file: report it as an unknown name.
                    return builtin_tableau(&path.to_string_lossy());
                }
                DoubleTableau::from_file(path)
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            TableauSource::Builtin(n) => n.clone(),
            TableauSource::File(p) => p.display().to_string(),
        }
    }
}

/// Parameter sweep of `eoc-study`.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub n_list: Vec<usize>,
    pub epsilon_list: Vec<f64>,
    pub variables: Vec<Variable>,
}

/// Fully validated configuration of one run or study.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub case: CaseSpec<f64>,
    pub tableau: TableauSource,
    pub pr_gamma: f64,
    pub solver: SolverOptions<f64>,
    pub output_dir: PathBuf,
    pub dump_times: Vec<f64>,
    pub emit_fields: Vec<OutputField>,
    pub plots: bool,
    pub study: Option<StudyConfig>,
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let kv = KeyValues::parse(text)?;
        let kind = CaseKind::parse(kv.get("case.kind").unwrap_or("vortex"))?;
        let epsilon = kv.parsed("case.epsilon")?.unwrap_or(1e-6);
        let mut case = CaseSpec::preset(kind, epsilon);
        if let Some(n) = kv.parsed("grid.n")? {
            case.n = n;
        }
        if let Some(t) = kv.parsed("case.t_end")? {
            case.t_end = t;
        }
        if let Some(v) = kv.get("case.vortex_eta") {
            case.vortex_eta = VortexEta::parse(v)?;
        }
        if let Some(g) = kv.parsed("params.gamma")? {
            case.gamma = g;
        }
        if let Some(c) = kv.parsed("params.cfl")? {
            case.cfl = c;
        }
        case.dt_max = kv.parsed("params.dt_max")?;
        if let Some(t) = kv.get("scheme.tableau") {
            case.tableau = t.to_string();
        }
        let delta = kv.parsed("scheme.cweno_delta")?;
        match kv.get("scheme.limiter").map(|s| s.to_ascii_lowercase()) {
            None => {
                if let (Some(d), Limiter::Cweno { .. }) = (delta, case.limiter) {
                    case.limiter = Limiter::Cweno { delta: d };
                }
            }
            Some(l) if l == "central" => case.limiter = Limiter::Central,
            Some(l) if l == "cweno" => {
                case.limiter = delta.map(|d| Limiter::Cweno { delta: d }).unwrap_or_else(Limiter::cweno)
            }
            Some(l) => {
                return Err(Error::Config(format!("unknown limiter `{l}` (valid: central, cweno)")))
            }
        }
        case.validate()?;
        let pr_gamma = kv.parsed("scheme.pr_gamma")?.unwrap_or(PR_GAMMA_DEFAULT);

        let mut solver = SolverOptions::default();
        if let Some(v) = kv.parsed("solver.tol")? {
            solver.tol = v;
        }
        if let Some(v) = kv.parsed("solver.max_newton")? {
            solver.max_newton = v;
        }
        if let Some(v) = kv.parsed("solver.cg_rel_tol")? {
            solver.cg_rel_tol = v;
        }
        if let Some(v) = kv.parsed("solver.max_cg")? {
            solver.max_cg = v;
        }
        if let Some(v) = kv.parsed("solver.max_halvings")? {
            solver.max_halvings = v;
        }

        let mut dump_times: Vec<f64> = kv.list("output.dump_times")?.unwrap_or_default();
        dump_times.sort_by(f64::total_cmp);
        dump_times.dedup();
        if let Some(bad) = dump_times.iter().find(|&&t| !(0.0..=case.t_end).contains(&t)) {
            return Err(Error::Config(format!(
                "dump time {bad} outside [0, {}]",
                case.t_end
            )));
        }
        let emit_fields = kv
            .list("output.fields")?
            .unwrap_or_else(|| vec![OutputField::Rho, OutputField::U1, OutputField::U2]);
        let plots = kv.parsed("output.plots")?.unwrap_or(false);
        let output_dir = PathBuf::from(kv.get("output.dir").unwrap_or("output"));

        let study = match (kv.list::<usize>("study.n_list")?, kv.list::<f64>("study.epsilon_list")?) {
            (None, None) => None,
            (n_list, eps_list) => {
                let n_list = n_list.unwrap_or_else(|| vec![case.n]);
                if n_list.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::Config("study.n_list must be strictly increasing".into()));
                }
                if let Some(&n) = n_list.iter().find(|&&n| n < 10) {
                    return Err(Error::Config(format!("resolution must be at least 10, got {n}")));
                }
                let epsilon_list = eps_list.unwrap_or_else(|| vec![case.epsilon]);
                if let Some(e) = epsilon_list.iter().find(|&&e| !(e > 0.0)) {
                    return Err(Error::Config(format!("epsilon must be positive, got {e}")));
                }
                let variables = match kv.get("study.variables") {
                    None => vec![Variable::U1, Variable::U2],
                    Some(v) => v
                        .split(',')
                        .map(|s| Variable::parse(s.trim()))
                        .collect::<Result<Vec<_>>>()
                        .map_err(|e| Error::Config(e.to_string()))?,
                };
                Some(StudyConfig {
                    n_list,
                    epsilon_list,
                    variables,
                })
            }
        };

        let cfg = RunConfig {
            tableau: TableauSource::resolve(&case.tableau),
            case,
            pr_gamma,
            solver,
            output_dir,
            dump_times,
            emit_fields,
            plots,
            study,
        };
        cfg.params()?;
        cfg.load_tableau()?;
        Ok(cfg)
    }

    /// Physical parameters; `dt_max` defaults to `1e-2 t_end`.
    pub fn params(&self) -> Result<EulerParams<f64>> {
        self.params_for(self.case.epsilon)
    }

    pub fn params_for(&self, epsilon: f64) -> Result<EulerParams<f64>> {
        let dt_max = self.case.dt_max.unwrap_or(1e-2 * self.case.t_end);
        // A zero-length run still needs a positive cap.
        let dt_max = if dt_max > 0.0 { dt_max } else { 1.0 };
        EulerParams::new(epsilon, self.case.gamma, self.case.cfl, dt_max)
            .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load_tableau(&self) -> Result<DoubleTableau<f64>> {
        self.tableau.load(self.pr_gamma)
    }

    /// Normalized `key = value` listing of every setting, re-parseable.
    pub fn to_text(&self) -> String {
        let c = &self.case;
        let mut lines = vec![
            format!("case.kind = {}", c.kind.name()),
            format!("case.epsilon = {}", fmt_f64(c.epsilon)),
            format!("case.t_end = {}", fmt_f64(c.t_end)),
            format!("case.vortex_eta = {}", c.vortex_eta.name()),
            format!("grid.n = {}", c.n),
            format!("params.gamma = {}", fmt_f64(c.gamma)),
            format!("params.cfl = {}", fmt_f64(c.cfl)),
        ];
        if let Some(d) = c.dt_max {
            lines.push(format!("params.dt_max = {}", fmt_f64(d)));
        }
        lines.push(format!("scheme.tableau = {}", self.tableau.label()));
        lines.push(format!("scheme.pr_gamma = {}", fmt_f64(self.pr_gamma)));
        lines.push(format!("scheme.limiter = {}", c.limiter.name()));
        if let Limiter::Cweno { delta } = c.limiter {
            lines.push(format!("scheme.cweno_delta = {}", fmt_f64(delta)));
        }
        let s = &self.solver;
        lines.extend([
            format!("solver.tol = {}", fmt_f64(s.tol)),
            format!("solver.max_newton = {}", s.max_newton),
            format!("solver.cg_rel_tol = {}", fmt_f64(s.cg_rel_tol)),
            format!("solver.max_cg = {}", s.max_cg),
            format!("solver.max_halvings = {}", s.max_halvings),
            format!("output.dir = {}", self.output_dir.display()),
            format!(
                "output.dump_times = {}",
                self.dump_times.iter().map(|&t| fmt_f64(t)).collect::<Vec<_>>().join(", ")
            ),
            format!(
                "output.fields = {}",
                self.emit_fields.iter().map(|f| f.name()).collect::<Vec<_>>().join(", ")
            ),
            format!("output.plots = {}", self.plots),
        ]);
        if let Some(st) = &self.study {
            lines.push(format!(
                "study.n_list = {}",
                st.n_list.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(", ")
            ));
            lines.push(format!(
                "study.epsilon_list = {}",
                st.epsilon_list.iter().map(|&e| fmt_f64(e)).collect::<Vec<_>>().join(", ")
            ));
            lines.push(format!(
                "study.variables = {}",
                st.variables.iter().map(|v| v.name()).collect::<Vec<_>>().join(", ")
            ));
        }
        lines.join("\n") + "\n"
    }
}
