//! `plr`: build, query, evaluate and plan with PLR trees.
//!
//! Exit codes: 0 success, 1 usage, 2 input data error, 3 budget exceeded.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use plr::analysis::{error_map, error_map_of, memory_footprint, summary_line};
use plr::geometry::{Environment, Point2};
use plr::oracles::{DistanceOracle, Roadmap, VisibilityGraph};
use plr::planner::{
    bl_plan_with, Budget, CompositeHeuristic, Heuristic, PlanOptions, PlanProblem, PlanStatus,
};
use plr::plr::{build_plr, BuildParams, Cell, PlrTree};
use plr::{format_sig, Error};

#[derive(Parser)]
#[command(
    name = "plr",
    version,
    about = "Piecewise linear regression trees for motion planning"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OracleKind {
    Vg,
    Prm,
}

#[derive(Subcommand)]
enum Command {
    /// Build a PLR tree over the environment bounds and write a PLR1 file.
    Build {
        #[arg(long)]
        env: PathBuf,
        /// Goal as x,y.
        #[arg(long, value_parser = parse_xy, allow_hyphen_values = true)]
        goal: Point2,
        #[arg(long, value_enum, default_value = "vg")]
        oracle: OracleKind,
        #[arg(long, default_value_t = 10_000)]
        prm_samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 9)]
        max_depth: usize,
        /// Split threshold z; defaults to 1% of the bounds diagonal.
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the tree's estimate at a point.
    Query {
        #[arg(long)]
        tree: PathBuf,
        /// Comma-separated coordinates.
        #[arg(long, value_parser = parse_coords, allow_hyphen_values = true)]
        point: Coords,
    },
    /// Compare a tree against a reference oracle on a grid.
    Eval {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        env: PathBuf,
        #[arg(long, value_parser = parse_xy, allow_hyphen_values = true)]
        goal: Point2,
        #[arg(long, value_enum, default_value = "vg")]
        reference: OracleKind,
        #[arg(long, default_value_t = 256)]
        grid: usize,
        /// Writes <prefix>.json, <prefix>.csv and <prefix>.pgm.
        #[arg(long)]
        out_prefix: PathBuf,
        /// Also report the raw PRM oracle's error against the reference.
        #[arg(long)]
        compare_raw_prm: bool,
        #[arg(long, default_value_t = 10_000)]
        prm_samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Plan with the grid planner, optionally guided by per-robot trees.
    Plan {
        #[arg(long)]
        problem: PathBuf,
        /// One PLR1 file per robot, or `none`.
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        heuristic: Vec<String>,
        #[arg(long)]
        max_expansions: Option<usize>,
        #[arg(long)]
        max_seconds: Option<f64>,
        #[arg(long)]
        out: PathBuf,
        /// CSV of expanded states in expansion order.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Include wall-clock time in the result file.
        #[arg(long)]
        record_elapsed: bool,
    },
    /// Write the bundled fixture environments and problems as JSON.
    Fixtures {
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Clone, Debug)]
struct Coords(Vec<f64>);

fn parse_coords(s: &str) -> Result<Coords, String> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| format!("bad number {t:?}: {e}"))
        })
        .collect::<Result<Vec<_>, _>>()
        .map(Coords)
}

fn parse_xy(s: &str) -> Result<Point2, String> {
    match parse_coords(s)?.0[..] {
        [x, y] => Ok(Point2::new(x, y)),
        ref v => Err(format!("expected x,y, got {} values", v.len())),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), Error> {
    fs::write(path, bytes).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}

fn load_env(path: &Path) -> Result<Environment, Error> {
    Environment::from_json(&read(path)?)
}

fn load_tree(path: &Path) -> Result<PlrTree, Error> {
    let bytes = fs::read(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    PlrTree::deserialize(&bytes)
}

fn root_of(env: &Environment) -> Result<Cell, Error> {
    let b = env.bounds();
    Cell::new(vec![b.lo.x, b.lo.y], vec![b.hi.x, b.hi.y])
}

fn oracle(
    env: &Environment,
    goal: Point2,
    kind: OracleKind,
    samples: usize,
    seed: u64,
) -> Result<Box<dyn DistanceOracle>, Error> {
    Ok(match kind {
        OracleKind::Vg => Box::new(VisibilityGraph::build(env, goal)?),
        OracleKind::Prm => Box::new(Roadmap::build(env, goal, samples, seed)?),
    })
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn run(command: Command) -> Result<u8, Error> {
    match command {
        Command::Build {
            env,
            goal,
            oracle: kind,
            prm_samples,
            seed,
            max_depth,
            threshold,
            out,
        } => {
            let env = load_env(&env)?;
            let root = root_of(&env)?;
            let mut params = BuildParams::default_for(&root);
            params.max_depth = max_depth;
            if let Some(z) = threshold {
                if !(z >= 0.0) {
                    return Err(Error::Input(format!(
                        "threshold must be nonnegative, got {z}"
                    )));
                }
                params.threshold = z;
            }
            let oracle = oracle(&env, goal, kind, prm_samples, seed)?;
            let tree = build_plr(oracle.as_ref(), &root, &params)?;
            let bytes = tree.serialize();
            write(&out, &bytes)?;
            println!("nodes {}", tree.node_count());
            println!("leaves {}", tree.leaf_count());
            println!("blocked {}", tree.blocked_count());
            println!("bytes {}", bytes.len());
            for (depth, count) in tree
                .depth_histogram()
                .iter()
                .enumerate()
                .filter(|(_, c)| **c > 0)
            {
                println!("depth {depth} {count}");
            }
            Ok(0)
        }
        Command::Query { tree, point } => {
            let tree = load_tree(&tree)?;
            println!("{}", format_sig(tree.query(&point.0)?));
            Ok(0)
        }
        Command::Eval {
            tree,
            env,
            goal,
            reference,
            grid,
            out_prefix,
            compare_raw_prm,
            prm_samples,
            seed,
        } => {
            if grid < 2 {
                return Err(Error::Input("grid must be at least 2".into()));
            }
            let tree = load_tree(&tree)?;
            let env = load_env(&env)?;
            if tree.dim() != 2 {
                return Err(Error::Input(format!(
                    "tree has dimension {}, environment is 2-D",
                    tree.dim()
                )));
            }
            let reference_oracle = oracle(&env, goal, reference, prm_samples, seed)?;
            let report = error_map(&tree, reference_oracle.as_ref(), grid);
            write(&with_suffix(&out_prefix, ".json"), report.to_json())?;
            write(&with_suffix(&out_prefix, ".csv"), report.to_csv())?;
            write(&with_suffix(&out_prefix, ".pgm"), report.to_pgm())?;
            println!(
                "{}",
                summary_line("plr", &report, Some(memory_footprint(&tree)))
            );
            if compare_raw_prm {
                let roadmap = Roadmap::build(&env, goal, prm_samples, seed)?;
                let raw = error_map_of(
                    tree.root_cell(),
                    grid,
                    |x| roadmap.evaluate(x),
                    reference_oracle.as_ref(),
                );
                write(&with_suffix(&out_prefix, ".raw_prm.json"), raw.to_json())?;
                println!(
                    "{}",
                    summary_line("raw_prm", &raw, Some(roadmap.estimated_bytes()))
                );
            }
            Ok(0)
        }
        Command::Plan {
            problem,
            heuristic,
            max_expansions,
            max_seconds,
            out,
            trace,
            record_elapsed,
        } => {
            let text = read(&problem)?;
            let mut problem = PlanProblem::from_json(&text, problem.parent())?;
            let budget = Budget {
                max_expansions: max_expansions.unwrap_or(problem.budget.max_expansions),
                max_seconds: max_seconds.or(problem.budget.max_seconds),
            };
            problem = problem.with_budget(budget);
            let h = if heuristic.len() == 1 && heuristic[0] == "none" {
                None
            } else {
                let trees = heuristic
                    .iter()
                    .map(|p| load_tree(Path::new(p)))
                    .collect::<Result<Vec<_>, _>>()?;
                Some(CompositeHeuristic::new(trees, &problem.robots)?)
            };
            let options = PlanOptions {
                record_trace: trace.is_some(),
            };
            let result = bl_plan_with(&problem, h.as_ref().map(|h| h as &dyn Heuristic), options)?;
            write(&out, result.to_json(record_elapsed))?;
            if let Some(path) = trace {
                write(&path, result.trace_csv())?;
            }
            let status = match result.status {
                PlanStatus::Solved => "solved",
                PlanStatus::Exhausted => "exhausted",
                PlanStatus::BudgetExceeded => "budget_exceeded",
            };
            println!("status {status}");
            println!("cost {}", format_sig(result.cost));
            println!("samples {}", result.samples_placed);
            println!("seconds {}", format_sig(result.elapsed.as_secs_f64()));
            Ok(if result.status == PlanStatus::BudgetExceeded {
                3
            } else {
                0
            })
        }
        Command::Fixtures { out_dir } => {
            fs::create_dir_all(&out_dir)?;
            for (name, text) in plr::fixtures::files() {
                write(&out_dir.join(name), text + "\n")?;
                println!("{}", out_dir.join(name).display());
            }
            Ok(0)
        }
    }
}
