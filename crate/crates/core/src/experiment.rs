//! Run configurations, the solve pipeline and table reproduction.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::decomposition::{decompose_with, partition_greedy, partition_strips, Decomposition, LocalSystem, Partitioner, PuRamp};
use crate::error::{Error, Result};
use crate::krylov::{gmres, GmresOptions, SolveReport};
use crate::mesh::Mesh;
use crate::preconditioner::{assemble_locals, PreconditionerKind, SchwarzPreconditioner};
use crate::problem::{assemble_global, AssembledSystem, Forcing, ProblemDefinition, Scenario};

/// Length of one strip, and the domain height.
pub const STRIP_WIDTH: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialGuess {
    #[default]
    Zero,
    /// Uniform in `[-1, 1]` on the free dofs, seeded.
    Random,
}

/// One solve. The domain is `[0, 0.2 N] x [0, 0.2]` meshed with
/// `resolution` cells per 0.2 in each direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub c0: f64,
    pub nu: f64,
    #[serde(rename = "N")]
    pub n: usize,
    /// `k` layers per side, overlap `δ = 2 k h`.
    pub overlap_layers: usize,
    pub pu_ramp: PuRamp,
    pub prec: PreconditionerKind,
    pub partition: Partitioner,
    pub seed: u64,
    pub tol: f64,
    pub max_iter: usize,
    pub supg_theta: f64,
    pub forcing: Forcing,
    pub initial_guess: InitialGuess,
    pub resolution: usize,
    /// Attach the operator analysis (small problems only).
    pub analysis: bool,
    pub dense_cap: usize,
    pub n_theta: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::Rotating,
            c0: 1.0,
            nu: 1.0,
            n: 5,
            overlap_layers: 1,
            pu_ramp: PuRamp::Sharp,
            prec: PreconditionerKind::Soras,
            partition: Partitioner::Strips,
            seed: 0,
            tol: 1e-6,
            max_iter: 1000,
            supg_theta: 0.0,
            forcing: Forcing::Center,
            initial_guess: InitialGuess::Zero,
            resolution: 60,
            analysis: false,
            dense_cap: crate::preconditioner::DENSE_CAP,
            n_theta: 360,
        }
    }
}

impl RunConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.n == 0 {
            return bad("N must be at least 1".into());
        }
        if self.overlap_layers == 0 {
            return bad("overlap_layers must be at least 1".into());
        }
        if self.resolution == 0 {
            return bad("resolution must be at least 1".into());
        }
        if !(self.c0.is_finite()) {
            return bad(format!("c0 must be finite, got {}", self.c0));
        }
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return bad(format!("nu must be positive, got {}", self.nu));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return bad(format!("tol must lie in (0, 1), got {}", self.tol));
        }
        if !(self.supg_theta >= 0.0 && self.supg_theta.is_finite()) {
            return bad(format!("supg_theta must be >= 0, got {}", self.supg_theta));
        }
        if self.max_iter == 0 || self.n_theta == 0 {
            return bad("max_iter and n_theta must be positive".into());
        }
        Ok(())
    }

    pub fn mesh(&self) -> Result<Mesh> {
        let r = self.resolution;
        Mesh::rectangle(STRIP_WIDTH * self.n as f64, STRIP_WIDTH, r * self.n, r)
    }

    pub fn problem(&self) -> ProblemDefinition {
        ProblemDefinition::from_scenario(self.scenario, self.c0, self.nu, self.forcing, self.supg_theta)
    }

    pub fn ownership(&self, mesh: &Mesh) -> Result<Vec<usize>> {
        match self.partition {
            Partitioner::Strips => partition_strips(mesh, self.n),
            Partitioner::Greedy => partition_greedy(mesh, self.n, self.seed),
        }
    }

    pub fn initial_guess(&self, sys: &AssembledSystem) -> Vec<f64> {
        let n = sys.a.nrows();
        match self.initial_guess {
            InitialGuess::Zero => vec![0.0; n],
            InitialGuess::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                (0..n)
                    .map(|i| {
                        let v = rng.random_range(-1.0..=1.0);
                        if sys.dof_map.is_dirichlet(i) {
                            0.0
                        } else {
                            v
                        }
                    })
                    .collect()
            }
        }
    }
}

/// Everything built before the Krylov solve.
#[derive(Debug)]
pub struct Pipeline {
    pub mesh: Mesh,
    pub problem: ProblemDefinition,
    pub system: AssembledSystem,
    pub decomposition: Decomposition,
    pub locals: Vec<LocalSystem>,
}

impl Pipeline {
    /// `factor_f` also factors every local `F_j` (analysis only).
    pub fn build(cfg: &RunConfig, factor_f: bool) -> Result<Self> {
        cfg.validate()?;
        let mesh = cfg.mesh()?;
        let problem = cfg.problem();
        let system = assemble_global(&mesh, &problem)?;
        let decomposition = decompose_with(&mesh, &cfg.ownership(&mesh)?, cfg.overlap_layers, cfg.pu_ramp)?;
        let locals = assemble_locals(&mesh, &problem, &system.dof_map, &decomposition, factor_f)?;
        Ok(Self { mesh, problem, system, decomposition, locals })
    }

    pub fn preconditioner(&self, kind: PreconditionerKind) -> Result<SchwarzPreconditioner<'_>> {
        SchwarzPreconditioner::new(kind, &self.decomposition, &self.locals)
    }

    pub fn solve(&self, cfg: &RunConfig, kind: PreconditionerKind) -> Result<SolveReport> {
        let p = self.preconditioner(kind)?;
        let opts = GmresOptions { tol: cfg.tol, max_iter: cfg.max_iter, record_iterates: false };
        gmres(&self.system.a, Some(&p), &self.system.rhs, &cfg.initial_guess(&self.system), &opts)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunOutcome {
    pub config: RunConfig,
    pub dofs: usize,
    pub solve: SolveReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub analysis: Option<crate::analysis::AnalysisReport>,
}

pub fn run_scenario(cfg: &RunConfig) -> Result<RunOutcome> {
    let pipe = Pipeline::build(cfg, cfg.analysis)?;
    let solve = pipe.solve(cfg, cfg.prec)?;
    let analysis = if cfg.analysis {
        Some(crate::analysis::analyze_pipeline(&pipe, cfg)?)
    } else {
        None
    };
    Ok(RunOutcome { config: cfg.clone(), dofs: pipe.system.a.nrows(), solve, analysis })
}

/// Coefficient rows shared by all tables: `(c0, nu)`.
pub const TABLE_CASES: [(f64, f64); 4] = [(1.0, 1.0), (1.0, 0.001), (0.001, 1.0), (0.001, 0.001)];
pub const OVERLAP_COLUMNS: [usize; 4] = [1, 2, 3, 4];
pub const SCALING_COLUMNS: [usize; 6] = [2, 4, 8, 16, 32, 64];

/// Optional restrictions of a table run.
#[derive(Debug, Clone, Default)]
pub struct TableOverrides {
    /// Column values (overlap layers for tables 1-3, `N` for 4-5).
    pub columns: Option<Vec<usize>>,
    /// Indices into [`TABLE_CASES`].
    pub cases: Option<Vec<usize>>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub resolution: Option<usize>,
    pub pu_ramp: Option<PuRamp>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableCell {
    /// `"2h"`-style overlap for tables 1-3, `N` for tables 4-5.
    pub column: String,
    pub soras: usize,
    pub oras: usize,
    pub dofs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub case: String,
    pub c0: f64,
    pub nu: f64,
    pub cells: Vec<TableCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableReport {
    pub table: u8,
    pub title: String,
    /// Only trends are meaningful (stand-in partitioner).
    pub qualitative: bool,
    pub rows: Vec<TableRow>,
}

pub fn case_label(c0: f64, nu: f64) -> String {
    format!("c0={c0} nu={nu}")
}

/// Base configuration of a table cell.
pub fn table_config(id: u8, c0: f64, nu: f64, column: usize) -> Result<RunConfig> {
    let base = RunConfig { c0, nu, ..RunConfig::default() };
    Ok(match id {
        1..=3 => RunConfig {
            scenario: [Scenario::Rotating, Scenario::Contracting, Scenario::Horizontal][id as usize - 1],
            supg_theta: if id == 3 { 0.15 } else { 0.0 },
            n: 5,
            overlap_layers: column,
            ..base
        },
        4 | 5 => RunConfig {
            scenario: Scenario::Horizontal,
            supg_theta: 0.15,
            n: column,
            overlap_layers: 2,
            forcing: Forcing::Left,
            initial_guess: InitialGuess::Random,
            partition: if id == 4 { Partitioner::Strips } else { Partitioner::Greedy },
            ..base
        },
        _ => return Err(Error::InvalidConfig(format!("unknown table {id} (expected 1 to 5)"))),
    })
}

pub fn reproduce_table(id: u8, ov: &TableOverrides) -> Result<TableReport> {
    let (title, default_cols): (&str, &[usize]) = match id {
        1 => ("rotating field, N=5 strips", &OVERLAP_COLUMNS),
        2 => ("contracting field, N=5 strips", &OVERLAP_COLUMNS),
        3 => ("horizontal field with SUPG, N=5 strips", &OVERLAP_COLUMNS),
        4 => ("weak scaling, N strips, overlap 4h", &SCALING_COLUMNS),
        5 => ("weak scaling, N greedy subdomains, overlap 4h", &SCALING_COLUMNS),
        _ => return Err(Error::InvalidConfig(format!("unknown table {id} (expected 1 to 5)"))),
    };
    let cols = ov.columns.clone().unwrap_or_else(|| default_cols.to_vec());
    let cases = ov.cases.clone().unwrap_or_else(|| (0..TABLE_CASES.len()).collect());
    let mut rows = Vec::new();
    for &ci in &cases {
        let &(c0, nu) = TABLE_CASES
            .get(ci)
            .ok_or_else(|| Error::InvalidConfig(format!("case index {ci} out of range")))?;
        let mut cells = Vec::new();
        for &col in &cols {
            let mut cfg = table_config(id, c0, nu, col)?;
            if let Some(s) = ov.seed {
                cfg.seed = s;
            }
            if let Some(t) = ov.tol {
                cfg.tol = t;
            }
            if let Some(r) = ov.resolution {
                cfg.resolution = r;
            }
            if let Some(r) = ov.pu_ramp {
                cfg.pu_ramp = r;
            }
            let pipe = Pipeline::build(&cfg, false)?;
            let soras = pipe.solve(&cfg, PreconditionerKind::Soras)?.iterations;
            let oras = pipe.solve(&cfg, PreconditionerKind::Oras)?.iterations;
            let column = if id <= 3 { format!("{}h", 2 * col) } else { col.to_string() };
            cells.push(TableCell { column, soras, oras, dofs: pipe.system.a.nrows() });
        }
        rows.push(TableRow { case: case_label(c0, nu), c0, nu, cells });
    }
    Ok(TableReport { table: id, title: title.to_string(), qualitative: id == 5, rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(Error::InvalidConfig(format!("unknown format `{s}` (expected csv or json)"))),
        }
    }
}

impl TableReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("case,delta_or_N,soras_iters,oras_iters\n");
        for row in &self.rows {
            for c in &row.cells {
                let _ = writeln!(s, "{},{},{},{}", row.case, c.column, c.soras, c.oras);
            }
        }
        s
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn render(&self, format: OutputFormat) -> Result<String> {
        match format {
            OutputFormat::Csv => Ok(self.to_csv()),
            OutputFormat::Json => self.to_json(),
        }
    }

    pub fn emit(&self, path: &Path, format: OutputFormat) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.render(format)?.as_bytes())?;
        Ok(())
    }

    /// Aligned `SORAS(ORAS)` text table.
    pub fn to_text(&self) -> String {
        let mut s = format!("Table {}: {}{}\n", self.table, self.title, if self.qualitative { " (qualitative)" } else { "" });
        if let Some(first) = self.rows.first() {
            let _ = write!(s, "{:<22}", "");
            for c in &first.cells {
                let _ = write!(s, "{:>10}", c.column);
            }
            s.push('\n');
        }
        for row in &self.rows {
            let _ = write!(s, "{:<22}", row.case);
            for c in &row.cells {
                let _ = write!(s, "{:>10}", format!("{}({})", c.soras, c.oras));
            }
            s.push('\n');
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_json_roundtrip() {
        let cfg = RunConfig { scenario: Scenario::Contracting, n: 3, seed: 9, ..RunConfig::default() };
        let text = serde_json::to_string(&cfg).unwrap();
        assert!(text.contains("\"N\":3"));
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        let partial: RunConfig = serde_json::from_str(r#"{"scenario":"horizontal","nu":0.001}"#).unwrap();
        assert_eq!(partial.scenario, Scenario::Horizontal);
        assert_eq!(partial.nu, 0.001);
        assert_eq!(partial.n, 5);
        assert!(serde_json::from_str::<RunConfig>(r#"{"scenario":"spiral"}"#).is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"typo":1}"#).is_err());
    }

    #[test]
    fn validation() {
        assert!(RunConfig::default().validate().is_ok());
        assert!(RunConfig { n: 0, ..RunConfig::default() }.validate().is_err());
        assert!(RunConfig { nu: 0.0, ..RunConfig::default() }.validate().is_err());
        assert!(RunConfig { tol: 0.0, ..RunConfig::default() }.validate().is_err());
        assert!(RunConfig { overlap_layers: 0, ..RunConfig::default() }.validate().is_err());
    }

    #[test]
    fn single_subdomain_takes_one_iteration() {
        for prec in [PreconditionerKind::Soras, PreconditionerKind::Oras] {
            let cfg = RunConfig { n: 1, resolution: 20, prec, ..RunConfig::default() };
            let out = run_scenario(&cfg).unwrap();
            assert_eq!(out.solve.iterations, 1);
        }
    }

    #[test]
    fn random_guess_is_seeded_and_bounded() {
        let cfg = RunConfig { n: 2, resolution: 10, initial_guess: InitialGuess::Random, seed: 4, ..RunConfig::default() };
        let pipe = Pipeline::build(&cfg, false).unwrap();
        let x = cfg.initial_guess(&pipe.system);
        assert_eq!(x, cfg.initial_guess(&pipe.system));
        assert!(x.iter().all(|v| (-1.0..=1.0).contains(v)));
        assert!(x.iter().any(|&v| v != 0.0));
        let other = RunConfig { seed: 5, ..cfg.clone() }.initial_guess(&pipe.system);
        assert_ne!(x, other);
    }

    #[test]
    fn csv_shape_and_determinism() {
        let empty = TableReport { table: 1, title: String::new(), qualitative: false, rows: Vec::new() };
        assert_eq!(empty.to_csv(), "case,delta_or_N,soras_iters,oras_iters\n");
        let ov = TableOverrides { resolution: Some(10), ..TableOverrides::default() };
        let t = reproduce_table(1, &ov).unwrap();
        assert_eq!(t.to_csv().lines().count(), 17);
        let again = reproduce_table(1, &ov).unwrap();
        assert_eq!(t.to_csv(), again.to_csv());
        assert_eq!(t.to_json().unwrap(), again.to_json().unwrap());
        assert!(t.to_csv().lines().nth(1).unwrap().starts_with("c0=1 nu=1,2h,"));
    }

    #[test]
    fn unknown_table_is_rejected() {
        assert!(reproduce_table(6, &TableOverrides::default()).is_err());
        assert!(table_config(0, 1.0, 1.0, 1).is_err());
    }
}
