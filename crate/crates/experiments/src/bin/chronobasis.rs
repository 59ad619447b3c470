use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use chronobasis::basisgen::{generate_basis_with, AnchorMode, ReducedBasis};
use chronobasis::discretization::TransientProblem;
use chronobasis::linalg::io::fmt_f64;
use chronobasis::linalg::read_matrix;
use chronobasis::rom::ErrorReport;
use chronobasis::timestepping::FullOrderModel;
use chronobasis_experiments::config::{from_toml_file, Spe10Config, StoveConfig};
use chronobasis_experiments::plot::{emit_plot_data, emit_study};
use chronobasis_experiments::problems::{spe10_problem, stove_problem};
use chronobasis_experiments::study::{
    run_spe10, run_stove, with_workers, Prepared, SelectionPlan, Spe10Method, WindowParams, SPE10_DATA, STOVE_DATA,
};
use chronobasis_experiments::{oracle, ExperimentError, Result};

#[derive(Parser)]
#[command(name = "chronobasis", version, about = "Local reduced bases from selected time points")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full-order solve; writes the trajectory.
    Solve {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Time point selection; writes the selection and the leverage scores.
    Select {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        sel: SelectArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reduced basis from a selection; writes the basis and its metadata.
    Basis {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        sel: SelectArgs,
        #[command(flatten)]
        window: WindowArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Error report of a stored basis against the full-order solution.
    Rom {
        #[command(flatten)]
        problem: ProblemArgs,
        /// Basis matrix written by `basis`.
        #[arg(long)]
        basis: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Heat source study.
    Stove {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Method::Leverage)]
        method: Method,
        #[arg(long, default_value_t = 3)]
        nrand: usize,
        #[command(flatten)]
        window: WindowArgs,
        #[command(flatten)]
        seeds: SeedArgs,
        #[arg(long, default_value = "out/stove")]
        out: PathBuf,
    },
    /// Channelized permeability study.
    Spe10 {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Spe10Choice::Leverage)]
        method: Spe10Choice,
        #[arg(long, default_value_t = 10)]
        nrand: usize,
        #[command(flatten)]
        window: WindowArgs,
        #[command(flatten)]
        seeds: SeedArgs,
        #[arg(long, default_value = "out/spe10")]
        out: PathBuf,
    },
    /// Independent checks of derived quantities.
    Oracle {
        /// Also write the table here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ProblemKind {
    Stove,
    Spe10,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Deim,
    Leverage,
}

#[derive(Clone, Copy, ValueEnum)]
enum Spe10Choice {
    DeimEnd,
    DeimStart,
    Leverage,
}

#[derive(Clone, Copy, ValueEnum)]
enum Anchor {
    End,
    Start,
}

#[derive(Args)]
struct ProblemArgs {
    #[arg(long, value_enum, default_value_t = ProblemKind::Stove)]
    problem: ProblemKind,
    /// TOML configuration of the chosen problem.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SelectArgs {
    #[arg(long, value_enum, default_value_t = Method::Deim)]
    method: Method,
    /// Leverage draws per data source.
    #[arg(long, default_value_t = 3)]
    nrand: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct WindowArgs {
    /// Window length in steps.
    #[arg(long, default_value_t = 15)]
    nt: usize,
    /// Leading steps discarded from each window.
    #[arg(long, default_value_t = 13)]
    k: usize,
    /// Relative singular value cutoff of the pooled snapshots.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, value_enum, default_value_t = Anchor::End)]
    anchor: Anchor,
}

#[derive(Args)]
struct SeedArgs {
    /// Number of realizations, seeded 0, 1, ...
    #[arg(long, default_value_t = 1000, conflicts_with = "seeds")]
    realizations: usize,
    /// Explicit seeds: a comma list or a half-open range `a..b`.
    #[arg(long, value_parser = parse_seeds)]
    seeds: Option<SeedList>,
}

#[derive(Clone)]
struct SeedList(Vec<u64>);

fn parse_seeds(s: &str) -> std::result::Result<SeedList, String> {
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|e| format!("range start: {e}"))?;
        let b: u64 = b.trim().parse().map_err(|e| format!("range end: {e}"))?;
        if a >= b {
            return Err(format!("empty range {a}..{b}"));
        }
        return Ok(SeedList((a..b).collect()));
    }
    s.split(',')
        .map(|t| t.trim().parse::<u64>().map_err(|e| format!("seed {t:?}: {e}")))
        .collect::<std::result::Result<_, _>>()
        .map(SeedList)
}

impl SeedArgs {
    fn list(&self) -> Vec<u64> {
        match &self.seeds {
            Some(s) => s.0.clone(),
            None => (0..self.realizations as u64).collect(),
        }
    }
}

impl WindowArgs {
    fn params(&self) -> WindowParams {
        WindowParams {
            n_t: self.nt,
            k: self.k,
            tol: self.tol,
            anchor: match self.anchor {
                Anchor::End => AnchorMode::EndPoint,
                Anchor::Start => AnchorMode::StartPoint,
            },
            ..WindowParams::default()
        }
    }
}

impl SelectArgs {
    fn plan(&self) -> SelectionPlan {
        match self.method {
            Method::Deim => SelectionPlan::Deim,
            Method::Leverage => SelectionPlan::Leverage { n_rand: self.nrand },
        }
    }
}

fn load<T: Default + for<'de> serde::Deserialize<'de>>(path: Option<&Path>) -> Result<T> {
    path.map_or_else(|| Ok(T::default()), from_toml_file)
}

impl ProblemArgs {
    fn build(&self) -> Result<TransientProblem> {
        match self.problem {
            ProblemKind::Stove => stove_problem(&load::<StoveConfig>(self.config.as_deref())?),
            ProblemKind::Spe10 => spe10_problem(&load::<Spe10Config>(self.config.as_deref())?),
        }
    }

    fn prepare<'p>(&self, problem: &'p TransientProblem) -> Result<Prepared<'p>> {
        match self.problem {
            ProblemKind::Stove => Prepared::new(problem, &STOVE_DATA),
            ProblemKind::Spe10 => Prepared::new(problem, &SPE10_DATA),
        }
    }
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Solve { problem, out } => {
            let p = problem.build()?;
            let traj = FullOrderModel::new(&p)?.solve_full()?;
            emit_plot_data(&out, &traj.to_text(p.grid().dt()))?;
            println!("wrote {} ({} states, {} unknowns)", out.display(), traj.len(), p.dofs());
        }
        Command::Select { problem, sel, out } => {
            let p = problem.build()?;
            let prep = problem.prepare(&p)?;
            let selection = prep.select(sel.plan(), sel.seed)?;
            emit_plot_data(&out, &selection.to_text(p.grid()))?;
            let mut scores = String::from("# timeIndex time");
            for s in &prep.sources {
                write!(scores, " {}", s.data.kind.name()).unwrap();
            }
            scores.push('\n');
            for j in 0..=p.grid().steps() {
                write!(scores, "{} {}", j, fmt_f64(p.grid().time(j))).unwrap();
                for s in &prep.sources {
                    write!(scores, " {}", fmt_f64(s.scores.scores[j])).unwrap();
                }
                scores.push('\n');
            }
            let scores_path = sibling(&out, ".scores");
            emit_plot_data(&scores_path, &scores)?;
            println!("selected {:?}; wrote {} and {}", selection.indices, out.display(), scores_path.display());
        }
        Command::Basis { problem, sel, window, out } => {
            let p = problem.build()?;
            let prep = problem.prepare(&p)?;
            let selection = prep.select(sel.plan(), sel.seed)?;
            let basis = generate_basis_with(&prep.model, &selection, &window.params().config(sel.seed))?;
            let meta = basis.write(&out)?;
            println!("basis dimension {}; wrote {} and {}", basis.dim(), out.display(), meta.display());
        }
        Command::Rom { problem, basis, out } => {
            let p = problem.build()?;
            let model = FullOrderModel::new(&p)?;
            let full = model.solve_full()?;
            let b = ReducedBasis::from_vectors(read_matrix(&basis)?)?;
            let report = ErrorReport::evaluate(&model, &b, &full, basis.display().to_string())?;
            report.write(&out, p.grid())?;
            println!("relL2H1 {} with basis dimension {}; wrote {}", fmt_f64(report.rel_l2h1), report.basis_dim, out.display());
        }
        Command::Stove { config, method, nrand, window, seeds, out } => {
            let cfg: StoveConfig = load(config.as_deref())?;
            let plan = match method {
                Method::Deim => SelectionPlan::Deim,
                Method::Leverage => SelectionPlan::Leverage { n_rand: nrand },
            };
            let study = run_stove(&cfg, plan, &window.params(), &seeds.list())?;
            let grid = chronobasis::discretization::TimeGrid::new(cfg.grid.end_time, cfg.grid.steps)?;
            report_study(&study, &grid, &out)?;
        }
        Command::Spe10 { config, method, nrand, window, seeds, out } => {
            let cfg: Spe10Config = load(config.as_deref())?;
            let method = match method {
                Spe10Choice::DeimEnd => Spe10Method::DeimEnd,
                Spe10Choice::DeimStart => Spe10Method::DeimStart,
                Spe10Choice::Leverage => Spe10Method::Leverage { n_rand: nrand },
            };
            let (study, _) = run_spe10(&cfg, method, &window.params(), &seeds.list())?;
            let grid = chronobasis::discretization::TimeGrid::new(cfg.grid.end_time, cfg.grid.steps)?;
            report_study(&study, &grid, &out)?;
        }
        Command::Oracle { out } => {
            let rows = oracle::run_all()?;
            let table = oracle::table(&rows);
            print!("{table}");
            if let Some(out) = out {
                emit_plot_data(out, &table)?;
            }
            return Ok(rows.iter().all(|r| r.pass));
        }
    }
    Ok(true)
}

fn report_study(
    study: &chronobasis_experiments::study::QuantileStudy,
    grid: &chronobasis::discretization::TimeGrid,
    out: &Path,
) -> Result<()> {
    print!("{}", study.quantile_table());
    for path in emit_study(study, grid, out)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.workers {
        Some(0) => Err(ExperimentError::Config("--workers must be positive".into())),
        Some(n) => with_workers(n, move || run(cli)).and_then(|r| r),
        None => run(cli),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("chronobasis: some oracle checks failed");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("chronobasis: {e}");
            ExitCode::FAILURE
        }
    }
}
