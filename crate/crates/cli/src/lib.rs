//! Command-line front-end: runs the verification suite, inspects the ladder
//! models and builds partners from matrix files.

pub mod report;
pub mod suite;

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use intertwine::linalg::Tolerances;
use intertwine::models::{make_oscillator, make_quon};
use intertwine::Matrix;

use report::{Num, Parameters, Report};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "intertwine", version, about = "Build and verify intertwining partners of finite matrices")]
pub struct Cli {
    /// Truncation dimension.
    #[arg(long, global = true, default_value_t = 12)]
    pub dim: usize,
    /// Quon deformation parameter in [0, 1].
    #[arg(long, global = true, default_value_t = 0.5)]
    pub q: f64,
    /// Seed for random instances.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    #[arg(long = "tol-rank", global = true, default_value_t = 1e-10)]
    pub tol_rank: f64,
    #[arg(long = "tol-residual", global = true, default_value_t = 1e-9)]
    pub tol_residual: f64,
    #[arg(long = "tol-commute", global = true, default_value_t = 1e-9)]
    pub tol_commute: f64,
    /// Top levels excluded from truncated ladder identities.
    #[arg(long, global = true, default_value_t = 2)]
    pub guard: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every model and random-instance check.
    Verify,
    /// Report spectra, nu values and closed-form residuals for one model.
    Model {
        #[arg(value_enum)]
        name: ModelName,
        /// Also write the model matrices as JSON files into this directory.
        #[arg(long = "export-dir")]
        export_dir: Option<PathBuf>,
    },
    /// Build the partner of a matrix along an intertwiner read from files.
    Partner {
        #[arg(long)]
        theta1: PathBuf,
        #[arg(long)]
        x: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModelName {
    Oscillator,
    Quon,
    Pseudoboson,
}

impl ModelName {
    fn as_str(&self) -> &'static str {
        match self {
            ModelName::Oscillator => "oscillator",
            ModelName::Quon => "quon",
            ModelName::Pseudoboson => "pseudoboson",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Input or configuration problem; maps to exit code 2.
#[derive(Debug)]
pub struct InputError(pub String);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

impl Cli {
    pub fn tolerances(&self) -> Tolerances {
        Tolerances {
            rank_tol: self.tol_rank,
            commute_tol: self.tol_commute,
            residual_tol: self.tol_residual,
            guard: self.guard,
        }
    }

    pub fn validate(&self) -> Result<Tolerances, InputError> {
        if self.dim < 3 {
            return Err(InputError(format!("--dim must be at least 3, got {}", self.dim)));
        }
        if !(0.0..=1.0).contains(&self.q) {
            return Err(InputError(format!("--q must lie in [0, 1], got {}", self.q)));
        }
        let tol = self.tolerances();
        tol.validate_for(self.dim).map_err(|e| InputError(e.to_string()))?;
        Ok(tol)
    }

    fn parameters(&self, dim: usize) -> Parameters {
        Parameters {
            dim,
            q: Num(self.q),
            seed: self.seed,
            guard: self.guard,
            rank_tol: Num(self.tol_rank),
            residual_tol: Num(self.tol_residual),
            commute_tol: Num(self.tol_commute),
        }
    }
}

/// Runs the full suite at the configured dimension, q and seed.
pub fn run_verify(cli: &Cli, tol: &Tolerances) -> Report {
    let d = cli.dim;
    let mut report = Report::new("verify", "all", cli.parameters(d));
    suite::oscillator_section(&mut report, d, tol);
    suite::quon_section(&mut report, d, cli.q, tol);
    suite::pseudoboson_section(&mut report, d, cli.seed, tol);
    suite::riesz_section(&mut report, d, cli.seed, tol);
    suite::lemma_section(&mut report, d, cli.seed, tol);
    report
}

/// Model report plus the matrices an external run would need to rebuild it.
pub fn run_model(cli: &Cli, name: ModelName, tol: &Tolerances) -> (Report, Vec<(&'static str, Matrix)>) {
    let d = cli.dim;
    let mut report = Report::new("model", name.as_str(), cli.parameters(d));
    let mut exports = Vec::new();
    match name {
        ModelName::Oscillator => {
            suite::oscillator_section(&mut report, d, tol);
            if let Ok(osc) = make_oscillator(d) {
                suite::partner_section(&mut report, "partner", &osc.h1, &osc.raise, tol);
                exports = vec![("theta1", osc.h1), ("x", osc.raise)];
            }
        }
        ModelName::Quon => {
            suite::quon_section(&mut report, d, cli.q, tol);
            if let Ok(sys) = make_quon(d, cli.q) {
                let x = sys.b.adjoint();
                suite::partner_section(&mut report, "partner", &sys.h1, &x, tol);
                exports = vec![("theta1", sys.h1), ("x", x)];
            }
        }
        ModelName::Pseudoboson => {
            if let Some(sys) = suite::pseudoboson_section(&mut report, d, cli.seed, tol) {
                exports = vec![("theta1", sys.theta1), ("s", sys.s), ("t", sys.basis.t)];
            }
        }
    }
    (report, exports)
}

pub fn read_matrix(path: &Path) -> Result<Matrix, InputError> {
    let text = fs::read_to_string(path).map_err(|e| InputError(format!("{}: {e}", path.display())))?;
    Matrix::from_json_str(&text).map_err(|e| InputError(format!("{}: {e}", path.display())))
}

/// Partner report for matrices read from `theta1_path` and `x_path`.
pub fn run_partner(cli: &Cli, theta1_path: &Path, x_path: &Path, tol: &Tolerances) -> Result<Report, InputError> {
    let theta1 = read_matrix(theta1_path)?;
    let x = read_matrix(x_path)?;
    if theta1.dim() != x.dim() {
        return Err(InputError(format!("dimension mismatch: theta1 is {0}x{0}, x is {1}x{1}", theta1.dim(), x.dim())));
    }
    let d = theta1.dim();
    tol.validate_for(d).map_err(|e| InputError(e.to_string()))?;
    let mut report = Report::new("partner", "user", cli.parameters(d));
    suite::partner_section(&mut report, "partner", &theta1, &x, tol);
    Ok(report)
}

/// Writes `contents` to a sibling temp file and renames it over `path`.
pub fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let result = fs::File::create(&tmp).and_then(|mut f| {
        f.write_all(contents)?;
        f.sync_all()
    });
    match result.and_then(|_| fs::rename(&tmp, path)) {
        Ok(()) => Ok(()),
        Err(e) => {
            let _ = fs::remove_file(&tmp);
            Err(e)
        }
    }
}

fn render(report: &Report, format: Format) -> String {
    match format {
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv(),
    }
}

fn emit(cli: &Cli, report: &Report) -> Result<(), InputError> {
    let text = render(report, cli.format);
    match &cli.out {
        Some(path) => write_atomic(path, text.as_bytes()).map_err(|e| InputError(format!("{}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| InputError(format!("stdout: {e}"))),
    }
}

fn execute(cli: &Cli) -> Result<Report, InputError> {
    let tol = cli.validate()?;
    match &cli.command {
        Command::Verify => Ok(run_verify(cli, &tol)),
        Command::Model { name, export_dir } => {
            let (report, exports) = run_model(cli, *name, &tol);
            if let Some(dir) = export_dir {
                fs::create_dir_all(dir).map_err(|e| InputError(format!("{}: {e}", dir.display())))?;
                for (stem, m) in &exports {
                    let path = dir.join(format!("{stem}.json"));
                    write_atomic(&path, m.to_json_string().as_bytes())
                        .map_err(|e| InputError(format!("{}: {e}", path.display())))?;
                }
            }
            Ok(report)
        }
        Command::Partner { theta1, x } => run_partner(cli, theta1, x, &tol),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_PASS };
        }
    };
    let report = match execute(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
    };
    if let Err(e) = emit(&cli, &report) {
        eprintln!("error: {e}");
        return EXIT_INPUT;
    }
    for c in report.failures() {
        eprintln!("FAIL {} = {:e} (threshold {:e}){}", c.check, c.value.0, c.threshold.0,
            c.note.as_deref().map(|n| format!(": {n}")).unwrap_or_default());
    }
    if report.passed() {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}
